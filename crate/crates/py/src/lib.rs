//! Python bindings: the main operations over the JSON artifact formats.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mimply::checker::{check, LocalEntailment, Outcome};
use mimply::formula::parse_formula;
use mimply::nd::{proof_search, Derivation};
use mimply::oracle::{decide as oracle_decide, enumerate_formulas, fib_family};
use mimply::rdag::{compress as rdag_compress, CompressParams, RDagProof};
use mimply::redundancy::RedundancyParams;

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parse a formula and return its canonical printed form.
#[pyfunction]
fn parse(formula: &str) -> PyResult<String> {
    Ok(parse_formula(formula).map_err(value_error)?.to_string())
}

/// Search for a normal expanded proof; returns the derivation as JSON, or
/// None when no proof exists within the height bound.
#[pyfunction]
#[pyo3(signature = (formula, max_depth=None))]
fn prove(formula: &str, max_depth: Option<usize>) -> PyResult<Option<String>> {
    let goal = parse_formula(formula).map_err(value_error)?;
    let depth = max_depth.unwrap_or(2 * goal.size() + 2);
    Ok(proof_search(&goal, depth).map(|d| d.to_json()))
}

/// Validate a derivation JSON and report its shape.
#[pyfunction]
fn check_nd<'py>(py: Python<'py>, derivation_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let d = Derivation::from_json(derivation_json).map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("conclusion", d.conclusion().to_string())?;
    out.set_item(
        "open_assumptions",
        d.open_assumptions()
            .iter()
            .map(|f| f.to_string())
            .collect::<Vec<_>>(),
    )?;
    out.set_item("nodes", d.len())?;
    out.set_item("height", d.height())?;
    out.set_item("normal", d.is_normal())?;
    out.set_item("expanded", d.is_expanded())?;
    Ok(out)
}

/// Compress a derivation JSON into an r-DAG certificate JSON.
#[pyfunction]
#[pyo3(signature = (derivation_json, min_count=2, min_size=2))]
fn compress(derivation_json: &str, min_count: usize, min_size: usize) -> PyResult<String> {
    let d = Derivation::from_json(derivation_json).map_err(value_error)?;
    let params = CompressParams {
        redundancy: RedundancyParams {
            min_count,
            min_size,
        },
        p: None,
    };
    Ok(rdag_compress(&d, &params).map_err(value_error)?.to_json())
}

/// Check an r-DAG certificate JSON; returns outcome, assumptions, and the
/// step accounting.
#[pyfunction]
fn verify<'py>(py: Python<'py>, dag_json: &str) -> PyResult<Bound<'py, PyDict>> {
    let dag = RDagProof::from_json(dag_json).map_err(value_error)?;
    let verdict = check(&dag);
    let out = PyDict::new(py);
    out.set_item(
        "outcome",
        match verdict.outcome {
            Outcome::CorrectTautology => "tautology",
            Outcome::CorrectDerivation => "derivation",
            Outcome::Incorrect => "incorrect",
        },
    )?;
    out.set_item("conclusion", dag.label(dag.root()).to_string())?;
    match &verdict.root_entailment {
        LocalEntailment::Sequent { .. } => out.set_item(
            "assumptions",
            verdict
                .assumptions(&dag)
                .iter()
                .map(|f| f.to_string())
                .collect::<Vec<_>>(),
        )?,
        LocalEntailment::Undefined => out.set_item("assumptions", Vec::<String>::new())?,
    }
    out.set_item("reason", verdict.reason.as_ref().map(|r| r.to_string()))?;
    out.set_item("steps", verdict.steps)?;
    out.set_item("step_bound", verdict.step_bound())?;
    out.set_item("nodes", dag.len())?;
    Ok(out)
}

/// Entailment in minimal implicational logic.
#[pyfunction]
fn decide(assumptions: Vec<String>, goal: &str) -> PyResult<bool> {
    let mut delta = Vec::with_capacity(assumptions.len());
    for a in &assumptions {
        delta.push(parse_formula(a).map_err(value_error)?);
    }
    let goal = parse_formula(goal).map_err(value_error)?;
    Ok(oracle_decide(delta.iter(), &goal))
}

/// The Fibonacci-family derivation of p_n, as JSON.
#[pyfunction]
fn gen_fib(n: usize) -> PyResult<String> {
    if n < 2 {
        return Err(PyValueError::new_err("gen_fib needs n >= 2"));
    }
    Ok(fib_family(n).derivation.to_json())
}

/// Every formula over the first `num_atoms` atoms up to `max_size`.
#[pyfunction]
fn enumerate(num_atoms: usize, max_size: usize) -> PyResult<Vec<String>> {
    if num_atoms == 0 || num_atoms > 26 {
        return Err(PyValueError::new_err("num_atoms must be in 1..=26"));
    }
    Ok(enumerate_formulas(num_atoms, max_size)
        .iter()
        .map(|f| f.to_string())
        .collect())
}

#[pymodule]
fn mimply_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(prove, m)?)?;
    m.add_function(wrap_pyfunction!(check_nd, m)?)?;
    m.add_function(wrap_pyfunction!(compress, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(decide, m)?)?;
    m.add_function(wrap_pyfunction!(gen_fib, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate, m)?)?;
    Ok(())
}
