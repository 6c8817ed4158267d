//! Natural Deduction proofs in minimal implicational logic, compressed into
//! rooted-DAG certificates and verified in polynomial time.
//!
//! The pipeline: parse a formula ([`formula`]), prove or load a tree-shaped
//! derivation ([`nd`]), find repeated sub-derivations ([`redundancy`]),
//! collapse them into a shared r-DAG certificate ([`rdag`]), and verify the
//! certificate by a local-entailment sweep ([`checker`]). The [`oracle`]
//! module supplies independent ground truth for all of it.

#![forbid(unsafe_code)]

pub mod checker;
pub mod formula;
pub mod nd;
pub mod oracle;
pub mod rdag;
pub mod redundancy;

pub use checker::{check, local_entailment, rdh, EntailmentTable, LocalEntailment, Outcome, Verdict};
pub use formula::{parse_formula, sub_closure, Bitstring, Formula, FormulaError, SubformulaOrder, SyntaxTree};
pub use nd::{
    close_derivation, e_part_types, emnd_map, proof_search, Branch, BranchKind, Derivation, EmND,
    NdError, Node, NodeId, ProofTree, Rule,
};
pub use oracle::{decide, enumerate_formulas, fib_family, kripke_entails, FibInstance};
pub use rdag::{
    collapse, compress, detach_link, from_derivation, CompressParams, RDagFragment, RDagProof,
    RdagError, StructureReport,
};
pub use redundancy::{find_repeats, lri, Fingerprint, MatrixOccurrences, RedundancyParams};
