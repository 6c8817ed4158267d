//! Certificate checking: per-node, per-index local entailments computed
//! both by recursion over reverse deductive height (the reference) and by
//! the iterative top-down level sweep (the checker proper), with verdicts
//! and step accounting.
//!
//! Index discipline: slot 0 carries the canonical flow; a deductive edge
//! with `rho = i` exposes the source's slot `i` to its consumer; an
//! ancestrality edge with `delta = i` re-opens slot `i` at a shared copy's
//! entry points. On honest certificates every active slot of a node carries
//! the same sequent; the slots exist to make tampering visible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::formula::{Bitstring, Formula};
use crate::rdag::RDagProof;

/// Per-slot value: a sequent, or the undefined marker for rule violations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalEntailment {
    Undefined,
    Sequent {
        antecedent: Bitstring,
        succedent: Formula,
    },
}

impl LocalEntailment {
    pub fn is_defined(&self) -> bool {
        matches!(self, LocalEntailment::Sequent { .. })
    }
}

impl fmt::Display for LocalEntailment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalEntailment::Undefined => write!(f, "'|-'"),
            LocalEntailment::Sequent {
                antecedent,
                succedent,
            } => write!(f, "{antecedent} |- {succedent}"),
        }
    }
}

/// Defined entries of the per-node, per-index entailment map; everything
/// absent is Undefined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntailmentTable {
    slots: Vec<BTreeMap<u32, Bitstring>>,
}

impl EntailmentTable {
    fn empty(n: usize) -> EntailmentTable {
        EntailmentTable {
            slots: vec![BTreeMap::new(); n],
        }
    }

    pub fn defined(&self, v: usize) -> &BTreeMap<u32, Bitstring> {
        &self.slots[v]
    }

    pub fn get(&self, dag: &RDagProof, v: usize, index: u32) -> LocalEntailment {
        match self.slots[v].get(&index) {
            Some(bits) => LocalEntailment::Sequent {
                antecedent: bits.clone(),
                succedent: dag.label(v).clone(),
            },
            None => LocalEntailment::Undefined,
        }
    }
}

/// Reverse deductive height: the longest deductive path from `v` up to a
/// top-formula, counted in nodes. Deductive leaves have rdh 1; premises of
/// a node always have strictly smaller rdh.
pub fn rdh(dag: &RDagProof, v: usize) -> usize {
    rdh_all(dag)[v]
}

pub fn rdh_all(dag: &RDagProof) -> Vec<usize> {
    let n = dag.len();
    let mut out = vec![0usize; n];
    let mut state = vec![0u8; n]; // 0 unvisited, 1 in progress, 2 done
    let mut stack: Vec<(usize, bool)> = (0..n).map(|v| (v, false)).collect();
    while let Some((v, expanded)) = stack.pop() {
        if state[v] == 2 {
            continue;
        }
        if expanded {
            out[v] = 1 + dag
                .premises(v)
                .map(|e| out[e.from])
                .max()
                .unwrap_or(0);
            state[v] = 2;
        } else {
            assert!(state[v] == 0 || state[v] == 2, "cycle in deductive edges");
            state[v] = 1;
            stack.push((v, true));
            for e in dag.premises(v) {
                if state[e.from] == 0 {
                    stack.push((e.from, false));
                }
            }
        }
    }
    out
}

/// Defined slots as antecedent bitstrings; succedent is the node label.
type Slots = BTreeMap<u32, Bitstring>;

/// Apply the node's rule at every active slot. `tables[p]` must already be
/// filled for every premise `p`.
fn compute_slots(
    dag: &RDagProof,
    v: usize,
    tables: &[Option<Slots>],
    mismatches: &mut Vec<(usize, usize)>,
    steps: &mut u64,
) -> Slots {
    let order = dag.order();
    let delta_in: BTreeSet<u32> = dag.a_in(v).map(|e| e.delta).collect();
    let premises: Vec<_> = dag.premises(v).collect();

    if premises.is_empty() {
        // deductive leaf: itself at slot 0 and at each incoming delta
        let Ok(bits) = order.singleton(dag.label(v)) else {
            return Slots::new();
        };
        let mut out = Slots::new();
        out.insert(0, bits.clone());
        for i in delta_in {
            out.insert(i, bits.clone());
        }
        return out;
    }

    // Active slots: every pass-through premise must present the same slot
    // set (the index-set equality discipline), where a premise's presented set
    // is its defined slots minus the indices it exports to its other
    // consumers. A disagreement makes the node undefined everywhere.
    // Incoming deltas re-open their slots on top.
    let mut j_set: BTreeSet<u32> = BTreeSet::new();
    let mut presented: Option<BTreeSet<u32>> = None;
    for e in premises.iter().filter(|e| e.rho.is_none()) {
        let exported: BTreeSet<u32> = dag
            .consumers(e.from)
            .filter(|e2| (e2.from, e2.to) != (e.from, e.to))
            .filter_map(|e2| e2.rho)
            .collect();
        let visible: BTreeSet<u32> = tables[e.from]
            .as_ref()
            .expect("premise computed")
            .keys()
            .copied()
            .filter(|i| !exported.contains(i))
            .collect();
        match &presented {
            None => presented = Some(visible),
            Some(seen) if *seen == visible => {}
            Some(_) => return Slots::new(),
        }
    }
    match presented {
        Some(visible) => j_set.extend(visible),
        None => {
            j_set.insert(0);
        }
    }
    j_set.extend(delta_in.iter().copied());

    let mut out = Slots::new();
    'slots: for &j in &j_set {
        *steps += 1;
        let mut views: Vec<(usize, &Bitstring)> = Vec::with_capacity(premises.len());
        for e in &premises {
            let slot = e.rho.unwrap_or(j);
            let Some(bits) = tables[e.from].as_ref().expect("premise computed").get(&slot)
            else {
                continue 'slots;
            };
            // the edge's stored bits must agree with the computed antecedent
            if let Some(expected) = &e.bits {
                if expected != bits {
                    mismatches.push((e.from, e.to));
                    continue 'slots;
                }
            }
            views.push((e.from, bits));
        }
        let result = match views[..] {
            [(u, bits)] => match dag.label(v).parts() {
                Some((antecedent, consequent)) if consequent == dag.label(u) => {
                    order.remove(bits, antecedent).ok()
                }
                _ => None,
            },
            [(u1, b1), (u2, b2)] => {
                crate::rdag::elim_roles(dag, u1, u2, v).and_then(|_| b1.union(b2).ok())
            }
            _ => None,
        };
        if let Some(bits) = result {
            out.insert(j, bits);
        }
    }

    if dag.is_divergent(v) {
        // a divergent node may not be an ancestrality target, and every
        // consumer index must have flowed up to it
        if !delta_in.is_empty() {
            out.clear();
        }
        let mut required: BTreeSet<u32> = dag.consumers(v).filter_map(|e| e.rho).collect();
        required.insert(0);
        if !required.iter().all(|i| out.contains_key(i)) {
            out.clear();
        }
    }
    out
}

/// The reference route: recursive evaluation ordered by rdh (premises
/// before conclusions), as a table of defined entries.
pub fn local_entailment(dag: &RDagProof) -> EntailmentTable {
    if !dag.validate_structure().is_valid() {
        return EntailmentTable::empty(dag.len());
    }
    let n = dag.len();
    let mut tables: Vec<Option<Slots>> = vec![None; n];
    let mut mismatches = Vec::new();
    let mut steps = 0u64;
    // depth-first from the root covers every node (all nodes reach the root)
    let mut stack: Vec<(usize, bool)> = vec![(dag.root(), false)];
    while let Some((v, expanded)) = stack.pop() {
        if tables[v].is_some() {
            continue;
        }
        if expanded {
            let slots = compute_slots(dag, v, &tables, &mut mismatches, &mut steps);
            tables[v] = Some(slots);
        } else {
            stack.push((v, true));
            for e in dag.premises(v) {
                if tables[e.from].is_none() {
                    stack.push((e.from, false));
                }
            }
        }
    }
    EntailmentTable {
        slots: tables.into_iter().map(|t| t.unwrap_or_default()).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    CorrectTautology,
    CorrectDerivation,
    Incorrect,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::CorrectTautology => write!(f, "CORRECT TAUTOLOGY"),
            Outcome::CorrectDerivation => write!(f, "CORRECT DERIVATION"),
            Outcome::Incorrect => write!(f, "INCORRECT"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckFailure {
    /// A structural condition failed; the certificate layer is broken.
    Structural(String),
    /// An edge bitstring disagrees with the computed antecedent.
    LabelMismatch { from: usize, to: usize },
    /// The root's base slot never became defined.
    RootUndefined,
    /// The root carries a defined slot besides 0.
    SpuriousRootSlot(u32),
}

impl fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckFailure::Structural(s) => write!(f, "structural: {s}"),
            CheckFailure::LabelMismatch { from, to } => {
                write!(f, "LabelMismatch on edge {from}->{to}")
            }
            CheckFailure::RootUndefined => write!(f, "root entailment undefined"),
            CheckFailure::SpuriousRootSlot(i) => write!(f, "root has a defined slot {i} besides 0"),
        }
    }
}

/// Outcome of a check, with the root entailment and the work done.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub outcome: Outcome,
    pub reason: Option<CheckFailure>,
    pub root_entailment: LocalEntailment,
    /// Slot evaluations at internal nodes during the sweep.
    pub steps: u64,
    pub height: usize,
    pub node_count: usize,
    pub ancestrality_count: usize,
}

impl Verdict {
    /// The sweep's bound `h * n_v * max(1, n_A)`, the max guarding the
    /// ancestrality-free tree case.
    pub fn step_bound(&self) -> u64 {
        self.height as u64 * self.node_count as u64 * std::cmp::max(1, self.ancestrality_count) as u64
    }

    pub fn assumptions(&self, dag: &RDagProof) -> BTreeSet<Formula> {
        match &self.root_entailment {
            LocalEntailment::Sequent { antecedent, .. } => dag
                .order()
                .decode(antecedent)
                .expect("root antecedent is over the certificate order"),
            LocalEntailment::Undefined => BTreeSet::new(),
        }
    }
}

/// Filled tables, label mismatches, step count, and height.
type SweepResult = (Vec<Option<Slots>>, Vec<(usize, usize)>, u64, usize);

/// The iterative pass: process levels from the top down; premises sit
/// exactly one level above their conclusions.
fn sweep(dag: &RDagProof) -> SweepResult {
    let levels = dag.levels().expect("caller validated the structure");
    let height = levels.iter().copied().max().unwrap_or(0);
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); height + 1];
    for (v, &l) in levels.iter().enumerate() {
        by_level[l].push(v);
    }
    let mut tables: Vec<Option<Slots>> = vec![None; dag.len()];
    let mut mismatches = Vec::new();
    let mut steps = 0u64;
    for level in (0..=height).rev() {
        for &v in &by_level[level] {
            let slots = compute_slots(dag, v, &tables, &mut mismatches, &mut steps);
            tables[v] = Some(slots);
        }
    }
    (tables, mismatches, steps, height)
}

/// The level sweep's table, for agreement testing against the recursive
/// reference.
pub fn iterative_table(dag: &RDagProof) -> EntailmentTable {
    if !dag.validate_structure().is_valid() {
        return EntailmentTable::empty(dag.len());
    }
    let (tables, _, _, _) = sweep(dag);
    EntailmentTable {
        slots: tables.into_iter().map(|t| t.unwrap_or_default()).collect(),
    }
}

/// Verify a certificate: structural validation, then the iterative
/// top-down level sweep maintaining the entailment table.
///
/// An edge bitstring that disagrees with the computed antecedent is
/// reported as Incorrect with a LabelMismatch reason, which is stricter
/// than the recursive table alone (there the violation merely leaves
/// slots undefined).
pub fn check(dag: &RDagProof) -> Verdict {
    let n_v = dag.len();
    let n_a = dag.a_edges().len();
    let report = dag.validate_structure();
    if !report.is_valid() {
        return Verdict {
            outcome: Outcome::Incorrect,
            reason: Some(CheckFailure::Structural(report.summary())),
            root_entailment: LocalEntailment::Undefined,
            steps: 0,
            height: 0,
            node_count: n_v,
            ancestrality_count: n_a,
        };
    }
    let (tables, mismatches, steps, height) = sweep(dag);
    let root_slots = tables[dag.root()].as_ref().unwrap();
    let root_entailment = match root_slots.get(&0) {
        Some(bits) => LocalEntailment::Sequent {
            antecedent: bits.clone(),
            succedent: dag.label(dag.root()).clone(),
        },
        None => LocalEntailment::Undefined,
    };
    let (outcome, reason) = if let Some(&(from, to)) = mismatches.first() {
        (Outcome::Incorrect, Some(CheckFailure::LabelMismatch { from, to }))
    } else if !root_slots.contains_key(&0) {
        (Outcome::Incorrect, Some(CheckFailure::RootUndefined))
    } else if let Some((&extra, _)) = root_slots.iter().find(|(&i, _)| i != 0) {
        (Outcome::Incorrect, Some(CheckFailure::SpuriousRootSlot(extra)))
    } else {
        match &root_entailment {
            LocalEntailment::Sequent { antecedent, .. } if antecedent.is_empty() => {
                (Outcome::CorrectTautology, None)
            }
            LocalEntailment::Sequent { .. } => (Outcome::CorrectDerivation, None),
            LocalEntailment::Undefined => unreachable!("slot 0 was checked"),
        }
    };
    Verdict {
        outcome,
        reason,
        root_entailment,
        steps,
        height,
        node_count: n_v,
        ancestrality_count: n_a,
    }
}
