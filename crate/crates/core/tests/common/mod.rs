//! Shared fixtures and corpus construction for the integration suites.
#![allow(dead_code)] // each test binary uses its own subset

use mimply::formula::{parse_formula, Formula};
use mimply::nd::{close_derivation, proof_search, Derivation, ProofTree};
use mimply::oracle::{enumerate_formulas, fib_family};

pub fn f(text: &str) -> Formula {
    parse_formula(text).unwrap()
}

/// The hypothetical-syllogism example: A -> C from {A -> B, B -> C}.
pub fn syllogism() -> Derivation {
    let tree = ProofTree::intro(
        f("A"),
        ProofTree::elim(
            ProofTree::elim(ProofTree::hyp(f("A")), ProofTree::hyp(f("A -> B"))),
            ProofTree::hyp(f("B -> C")),
        ),
    );
    Derivation::from_tree(&tree).unwrap()
}

fn two_spine_tree() -> ProofTree {
    let spine_q = ProofTree::elim(
        ProofTree::hyp(f("C")),
        ProofTree::elim(
            ProofTree::hyp(f("B")),
            ProofTree::elim(
                ProofTree::hyp(f("A")),
                ProofTree::hyp(f("A -> (B -> (C -> q))")),
            ),
        ),
    );
    let a_q = ProofTree::intro(f("A"), spine_q);
    let d_q_upper = ProofTree::elim(a_q, ProofTree::hyp(f("(A -> q) -> (D -> q)")));
    let lower_q = ProofTree::elim(ProofTree::hyp(f("D")), d_q_upper);
    let d_q_lower = ProofTree::intro(f("D"), lower_q);
    let big = ProofTree::intro(f("(A -> q) -> (D -> q)"), d_q_lower);
    ProofTree::intro(f("A -> (B -> (C -> q))"), big)
}

/// The two-spine mapped-proof example, open in B and C.
pub fn two_spine_open() -> Derivation {
    Derivation::from_tree(&two_spine_tree()).unwrap()
}

/// Its closure over B and C: a tautology proof.
pub fn two_spine_closed() -> Derivation {
    Derivation::from_tree(&close_derivation(two_spine_tree(), &[f("B"), f("C")])).unwrap()
}

/// The standing test corpus: the worked-example fixtures, search-generated
/// proofs of every provable two-atom formula up to size 9, and the
/// Fibonacci family.
pub fn corpus() -> Vec<(String, Derivation)> {
    let mut out: Vec<(String, Derivation)> = vec![
        ("syllogism".into(), syllogism()),
        ("two-spine-open".into(), two_spine_open()),
        ("two-spine-closed".into(), two_spine_closed()),
    ];
    for phi in enumerate_formulas(2, 9) {
        if let Some(d) = proof_search(&phi, 2 * phi.size()) {
            out.push((format!("proof[{phi}]"), d));
        }
    }
    for n in 2..=12 {
        out.push((format!("fib{n}"), fib_family(n).derivation));
    }
    for n in 2..=8 {
        out.push((format!("fib{n}-closed"), fib_family(n).closed()));
    }
    out
}

/// Seed for randomized suites; MIMPLY_SEED overrides for reproduction.
pub fn seed() -> u64 {
    std::env::var("MIMPLY_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0xC0FFEE)
}
