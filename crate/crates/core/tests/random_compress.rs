//! Randomized stress tests: irregular derivations with organically repeated
//! sub-proofs, compressed and re-checked round after round.

mod common;

use common::seed;
use mimply::checker::{check, local_entailment};
use mimply::formula::Formula;
use mimply::nd::{Derivation, ProofTree};
use mimply::rdag::{compress, from_derivation, CompressParams, RDagProof};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// A small shared pool keeps formulas colliding, so repeated subtrees (and
/// nested repeats) arise on their own.
fn formula_pool() -> Vec<Formula> {
    ["A", "B", "C", "A -> B", "B -> C", "A -> (B -> C)", "C -> A"]
        .iter()
        .map(|s| common::f(s))
        .collect()
}

/// Two same-level copies of `t` feeding one elim: x1 proves r1 from one
/// copy, x2 proves r1 -> r2 from the other, and the root combines them.
fn twin(
    rng: &mut ChaCha8Rng,
    pool: &[Formula],
    t: (ProofTree, Formula),
) -> (ProofTree, Formula) {
    let r1 = pool.choose(rng).unwrap().clone();
    let r2 = pool.choose(rng).unwrap().clone();
    let x1 = ProofTree::elim(
        t.0.clone(),
        ProofTree::hyp(Formula::imp(t.1.clone(), r1.clone())),
    );
    let x2 = ProofTree::elim(
        t.0,
        ProofTree::hyp(Formula::imp(t.1, Formula::imp(r1, r2.clone()))),
    );
    (ProofTree::elim(x1, x2), r2)
}

/// Random derivation mixing intros, elim chains, and recursive twinning, so
/// repeats (including nested ones) arise at shared levels.
fn random_tree(
    rng: &mut ChaCha8Rng,
    pool: &[Formula],
    depth: usize,
) -> (ProofTree, Formula) {
    if depth == 0 || rng.gen_bool(0.2) {
        let f = pool.choose(rng).unwrap().clone();
        return (ProofTree::hyp(f.clone()), f);
    }
    match rng.gen_range(0..4) {
        0 => {
            let (t, f) = random_tree(rng, pool, depth - 1);
            let antecedent = pool.choose(rng).unwrap().clone();
            let combined = Formula::imp(antecedent.clone(), f);
            (ProofTree::intro(antecedent, t), combined)
        }
        1 | 2 => {
            let inner = random_tree(rng, pool, depth - 1);
            twin(rng, pool, inner)
        }
        _ => {
            let (t, f) = random_tree(rng, pool, depth - 1);
            let target = pool.choose(rng).unwrap().clone();
            let major = Formula::imp(f, target.clone());
            (ProofTree::elim(t, ProofTree::hyp(major)), target)
        }
    }
}

fn random_derivation(rng: &mut ChaCha8Rng, depth: usize) -> Derivation {
    let pool = formula_pool();
    let (tree, _) = random_tree(rng, &pool, depth);
    Derivation::from_tree(&tree).expect("bottom-up construction is valid")
}

#[test]
fn compression_survives_irregular_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(seed() ^ 0x5A5A);
    let mut compressed_some = 0;
    for round in 0..300 {
        let depth = rng.gen_range(2..8);
        let d = random_derivation(&mut rng, depth);
        let plain = from_derivation(&d);
        let before = check(&plain);
        let packed = compress(&d, &CompressParams::default())
            .unwrap_or_else(|e| panic!("round {round}: {e}"));
        let report = packed.validate_structure();
        assert!(report.is_valid(), "round {round}: {}", report.summary());
        let after = check(&packed);
        assert_eq!(before.outcome, after.outcome, "round {round}");
        assert_eq!(
            before.root_entailment, after.root_entailment,
            "round {round}"
        );
        assert!(after.steps <= after.step_bound(), "round {round}");
        // the two checking routes agree on the whole table
        assert_eq!(
            local_entailment(&packed),
            mimply::checker::iterative_table(&packed),
            "round {round}"
        );
        // serialization round-trips
        let json = packed.to_json();
        let back = RDagProof::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json, "round {round}");
        if packed.len() < plain.len() {
            compressed_some += 1;
        }
    }
    // the pool is collision-rich: most rounds really exercise collapsing
    assert!(compressed_some > 100, "only {compressed_some} rounds compressed");
}

#[test]
fn repeated_compression_is_stable() {
    // compressing an already-compressed certificate's source again changes
    // nothing: the pipeline is deterministic in its input
    let mut rng = ChaCha8Rng::seed_from_u64(seed() ^ 0x1D1D);
    for _ in 0..50 {
        let d = random_derivation(&mut rng, 6);
        let once = compress(&d, &CompressParams::default()).unwrap();
        let twice = compress(&d, &CompressParams::default()).unwrap();
        assert_eq!(once.to_json(), twice.to_json());
    }
}
