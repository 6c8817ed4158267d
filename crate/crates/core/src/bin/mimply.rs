//! Command-line front-end: parse, prove, validate, compress, verify,
//! inspect, and generate derivations.
//!
//! Exit codes: 0 success (for `verify`: correct tautology), 1 proof not
//! found / correct derivation with open assumptions, 2 invalid or incorrect
//! input structure, 64 malformed files or flags.

use std::io::Read;
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use mimply::checker::{check, Outcome};
use mimply::formula::parse_formula;
use mimply::nd::{proof_search, Derivation, NdError};
use mimply::oracle::fib_family;
use mimply::rdag::{compress, CompressParams, RDagProof, RdagError};
use mimply::redundancy::{lri_in_derivation, RedundancyParams};

const EX_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "mimply", version, about = "Minimal implicational logic: proofs, r-DAG certificates, polynomial-time checking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a formula and echo its canonical form
    Parse {
        #[arg(short, long)]
        formula: String,
    },
    /// Search for a normal expanded proof of a formula
    Prove {
        #[arg(short, long)]
        formula: String,
        /// Height bound for the search; default 2 * size + 2
        #[arg(long)]
        max_depth: Option<usize>,
        /// Output file for the proof (stdout if omitted)
        #[arg(short, long)]
        output: Option<String>,
    },
    /// Validate a derivation file and report normality and expanded form
    CheckNd {
        /// Derivation file ("-" for stdin)
        #[arg(default_value = "-")]
        input: String,
    },
    /// Compress a derivation into an r-DAG certificate
    Compress {
        /// Derivation file ("-" for stdin)
        #[arg(default_value = "-")]
        input: String,
        /// Output file for the certificate (stdout if omitted)
        #[arg(short, long)]
        output: Option<String>,
        /// Minimum instances per collapsed matrix
        #[arg(long, default_value_t = 2)]
        min_count: usize,
        /// Minimum matrix size
        #[arg(long, default_value_t = 2)]
        min_size: usize,
        /// Reinstate the size gate: only compress when size exceeds m^p
        #[arg(long)]
        p: Option<u32>,
    },
    /// Check r-DAG certificates
    Verify {
        /// Certificate files ("-" for stdin)
        #[arg(default_value = "-")]
        inputs: Vec<String>,
        /// Print the step counter and its bound
        #[arg(long)]
        steps: bool,
    },
    /// Show height, levels, branches, and repeated-matrix groups
    Stats {
        /// Derivation file ("-" for stdin)
        #[arg(default_value = "-")]
        input: String,
    },
    /// Generate a member of the Fibonacci derivation family
    GenFib {
        #[arg(short)]
        n: usize,
        /// Output file for the derivation (stdout if omitted)
        #[arg(short, long)]
        output: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(EX_USAGE);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EX_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Parse { formula } => {
            let parsed = parse_formula(&formula).map_err(|e| e.to_string())?;
            println!("{parsed}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Prove {
            formula,
            max_depth,
            output,
        } => {
            let goal = parse_formula(&formula).map_err(|e| e.to_string())?;
            let depth = max_depth.unwrap_or(2 * goal.size() + 2);
            match proof_search(&goal, depth) {
                Some(d) => {
                    emit(
                        output.as_deref(),
                        &d.to_json(),
                        &format!("proved {} ({} nodes, height {})", goal, d.len(), d.height()),
                    )?;
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    eprintln!("no proof of {goal} within height {depth}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::CheckNd { input } => {
            let text = read_input(&input)?;
            match Derivation::from_json(&text) {
                Ok(d) => {
                    println!(
                        "valid derivation of {} from {} open assumptions ({} nodes, height {})",
                        d.conclusion(),
                        d.open_assumptions().len(),
                        d.len(),
                        d.height()
                    );
                    println!("normal: {}", d.is_normal());
                    println!("expanded: {}", d.is_expanded());
                    Ok(ExitCode::SUCCESS)
                }
                Err(NdError::File(msg)) => Err(msg),
                Err(NdError::Formula(e)) => Err(e.to_string()),
                Err(e) => {
                    println!("invalid derivation: {e}");
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::Compress {
            input,
            output,
            min_count,
            min_size,
            p,
        } => {
            let text = read_input(&input)?;
            let d = load_derivation(&text)?;
            let params = CompressParams {
                redundancy: RedundancyParams {
                    min_count,
                    min_size,
                },
                p,
            };
            let dag = compress(&d, &params).map_err(|e| e.to_string())?;
            let ratio = d.len() as f64 / dag.len() as f64;
            emit(
                output.as_deref(),
                &dag.to_json(),
                &format!(
                    "tree size {}, DAG size {}, ratio {:.2}",
                    d.len(),
                    dag.len(),
                    ratio
                ),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { inputs, steps } => {
            let mut dags = Vec::new();
            for input in &inputs {
                let text = read_input(input)?;
                dags.push(RDagProof::from_json(&text).map_err(|e| match e {
                    RdagError::File(msg) => msg,
                    other => other.to_string(),
                })?);
            }
            let verdicts: Vec<_> = if dags.len() == 1 {
                vec![check(&dags[0])]
            } else {
                // the checker is pure; check the batch concurrently
                std::thread::scope(|scope| {
                    let handles: Vec<_> =
                        dags.iter().map(|dag| scope.spawn(|| check(dag))).collect();
                    handles.into_iter().map(|h| h.join().unwrap()).collect()
                })
            };
            let mut worst = 0u8;
            for ((input, dag), verdict) in inputs.iter().zip(&dags).zip(&verdicts) {
                let code = match verdict.outcome {
                    Outcome::CorrectTautology => 0,
                    Outcome::CorrectDerivation => 1,
                    Outcome::Incorrect => 2,
                };
                worst = worst.max(code);
                match verdict.outcome {
                    Outcome::CorrectTautology => {
                        println!("{input}: CORRECT TAUTOLOGY {}", dag.label(dag.root()));
                    }
                    Outcome::CorrectDerivation => {
                        let assumptions: Vec<String> = verdict
                            .assumptions(dag)
                            .iter()
                            .map(|f| f.to_string())
                            .collect();
                        println!(
                            "{input}: CORRECT DERIVATION of {} from {{{}}}",
                            dag.label(dag.root()),
                            assumptions.join(", ")
                        );
                    }
                    Outcome::Incorrect => {
                        let reason = verdict
                            .reason
                            .as_ref()
                            .map(|r| r.to_string())
                            .unwrap_or_else(|| "unknown".into());
                        println!("{input}: INCORRECT ({reason})");
                    }
                }
                if steps {
                    println!(
                        "{input}: steps {} bound {} (h={} n_v={} n_A={})",
                        verdict.steps,
                        verdict.step_bound(),
                        verdict.height,
                        verdict.node_count,
                        verdict.ancestrality_count
                    );
                }
            }
            Ok(ExitCode::from(worst))
        }
        Command::Stats { input } => {
            let text = read_input(&input)?;
            let d = load_derivation(&text)?;
            let branches = d.branches();
            let groups = lri_in_derivation(&d, &RedundancyParams::default());
            println!("nodes: {}", d.len());
            println!("height: {}", d.height());
            println!("levels: {}", d.height() + 1);
            println!("branches: {}", branches.len());
            println!("lri groups: {}", groups.len());
            for g in &groups {
                println!(
                    "  matrix of {} nodes with {} instances at level {}",
                    g.size,
                    g.roots.len(),
                    g.level
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GenFib { n, output } => {
            if n < 2 {
                return Err("gen-fib needs n >= 2".into());
            }
            let fib = fib_family(n);
            emit(
                output.as_deref(),
                &fib.derivation.to_json(),
                &format!(
                    "fib({n}): {} nodes, height {}, conclusion {}",
                    fib.derivation.len(),
                    fib.derivation.height(),
                    fib.derivation.conclusion()
                ),
            )?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_input(path: &str) -> Result<String, String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| format!("reading stdin: {e}"))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(Path::new(path)).map_err(|e| format!("reading {path}: {e}"))
    }
}

fn load_derivation(text: &str) -> Result<Derivation, String> {
    Derivation::from_json(text).map_err(|e| e.to_string())
}

/// Machine artifact to the file (summary on stdout), or artifact to stdout
/// (summary on stderr) so pipelines stay clean.
fn emit(output: Option<&str>, artifact: &str, summary: &str) -> Result<(), String> {
    match output {
        Some(path) => {
            std::fs::write(path, artifact).map_err(|e| format!("writing {path}: {e}"))?;
            println!("{summary}");
        }
        None => {
            print!("{artifact}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}
