//! The r-DAG certificate structure and the detach/collapse/compress
//! pipeline that folds repeated sub-derivations into shared copies.
//!
//! Certificates carry two edge sorts: deductive edges run from premise to
//! conclusion and carry dependency bitstrings, with an index `rho` on edges
//! out of a shared copy's root; ancestrality edges run from each consumer of
//! a shared copy back to the copy's initials, carrying the same index as
//! `delta`. The checker uses the indices to keep one entailment slot per
//! consumer.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{parse_formula, Bitstring, Formula, FormulaError, SubformulaOrder};
use crate::nd::{Derivation, NdError};
use crate::redundancy::{find_repeats, RedundancyParams};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DEdge {
    pub from: usize,
    pub to: usize,
    /// Dependency bitstring of the source's formula occurrence, when known.
    pub bits: Option<Bitstring>,
    /// Consumer index assigned by a detach; absent on plain tree edges.
    pub rho: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AEdge {
    pub from: usize,
    pub to: usize,
    pub delta: u32,
}

/// Diagnostic record: which collapse produced which index.
#[derive(Debug, Clone)]
pub struct CollapseRecord {
    pub index: u32,
    pub canonical: usize,
    pub ordinal: usize,
}

#[derive(Debug, Error)]
pub enum RdagError {
    #[error("node {0} not in the DAG")]
    NodeNotFound(usize),
    #[error("not an instance: {0}")]
    NotAnInstance(String),
    #[error("index {0} already in use")]
    IndexCollision(u32),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Derivation(#[from] NdError),
    #[error("invalid r-DAG file: {0}")]
    File(String),
}

/// The certificate: nodes labeled with subformulas, deductive and
/// ancestrality edges, and a total subformula order for the bitstrings.
#[derive(Clone)]
pub struct RDagProof {
    labels: Vec<Formula>,
    root: usize,
    order: SubformulaOrder,
    d_edges: Vec<DEdge>,
    a_edges: Vec<AEdge>,
    d_in: Vec<Vec<usize>>,
    d_out: Vec<Vec<usize>>,
    a_in: Vec<Vec<usize>>,
    a_out: Vec<Vec<usize>>,
    collapse_log: Vec<CollapseRecord>,
}

impl RDagProof {
    pub fn from_parts(
        labels: Vec<Formula>,
        root: usize,
        order: SubformulaOrder,
        mut d_edges: Vec<DEdge>,
        mut a_edges: Vec<AEdge>,
    ) -> Result<RDagProof, RdagError> {
        if labels.is_empty() {
            return Err(RdagError::InvalidStructure("no nodes".into()));
        }
        if root >= labels.len() {
            return Err(RdagError::NodeNotFound(root));
        }
        for e in &d_edges {
            if e.from >= labels.len() || e.to >= labels.len() {
                return Err(RdagError::InvalidStructure(format!(
                    "deductive edge {}->{} out of range",
                    e.from, e.to
                )));
            }
            if let Some(bits) = &e.bits {
                if bits.len() != order.len() {
                    return Err(RdagError::InvalidStructure(format!(
                        "edge {}->{} bitstring length {} != order length {}",
                        e.from,
                        e.to,
                        bits.len(),
                        order.len()
                    )));
                }
            }
        }
        for e in &a_edges {
            if e.from >= labels.len() || e.to >= labels.len() {
                return Err(RdagError::InvalidStructure(format!(
                    "ancestrality edge {}->{} out of range",
                    e.from, e.to
                )));
            }
        }
        d_edges.sort_by_key(|e| (e.from, e.to));
        a_edges.sort_by_key(|e| (e.from, e.to));
        d_edges.dedup_by_key(|e| (e.from, e.to));
        a_edges.dedup_by_key(|e| (e.from, e.to));
        let mut dag = RDagProof {
            labels,
            root,
            order,
            d_edges,
            a_edges,
            d_in: Vec::new(),
            d_out: Vec::new(),
            a_in: Vec::new(),
            a_out: Vec::new(),
            collapse_log: Vec::new(),
        };
        dag.rebuild_adjacency();
        Ok(dag)
    }

    fn rebuild_adjacency(&mut self) {
        let n = self.labels.len();
        self.d_in = vec![Vec::new(); n];
        self.d_out = vec![Vec::new(); n];
        self.a_in = vec![Vec::new(); n];
        self.a_out = vec![Vec::new(); n];
        for (i, e) in self.d_edges.iter().enumerate() {
            self.d_out[e.from].push(i);
            self.d_in[e.to].push(i);
        }
        for (i, e) in self.a_edges.iter().enumerate() {
            self.a_out[e.from].push(i);
            self.a_in[e.to].push(i);
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn label(&self, v: usize) -> &Formula {
        &self.labels[v]
    }

    pub fn order(&self) -> &SubformulaOrder {
        &self.order
    }

    pub fn d_edges(&self) -> &[DEdge] {
        &self.d_edges
    }

    pub fn a_edges(&self) -> &[AEdge] {
        &self.a_edges
    }

    pub fn premises(&self, v: usize) -> impl Iterator<Item = &DEdge> {
        self.d_in[v].iter().map(|&i| &self.d_edges[i])
    }

    pub fn consumers(&self, v: usize) -> impl Iterator<Item = &DEdge> {
        self.d_out[v].iter().map(|&i| &self.d_edges[i])
    }

    pub fn a_in(&self, v: usize) -> impl Iterator<Item = &AEdge> {
        self.a_in[v].iter().map(|&i| &self.a_edges[i])
    }

    pub fn a_out(&self, v: usize) -> impl Iterator<Item = &AEdge> {
        self.a_out[v].iter().map(|&i| &self.a_edges[i])
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.d_in[v].len()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.d_out[v].len()
    }

    pub fn is_deductive_leaf(&self, v: usize) -> bool {
        self.d_in[v].is_empty()
    }

    /// More than one outgoing deductive edge.
    pub fn is_divergent(&self, v: usize) -> bool {
        self.d_out[v].len() > 1
    }

    pub fn collapse_log(&self) -> &[CollapseRecord] {
        &self.collapse_log
    }

    /// Smallest index unused as a `rho` or `delta`; never 0, which is the
    /// checker's base slot.
    pub fn fresh_index(&self) -> u32 {
        let max_used = self
            .d_edges
            .iter()
            .filter_map(|e| e.rho)
            .chain(self.a_edges.iter().map(|e| e.delta))
            .max()
            .unwrap_or(0);
        max_used + 1
    }

    /// Deductive distance from the root, if the Global condition's
    /// equal-length requirement holds.
    pub fn levels(&self) -> Option<Vec<usize>> {
        let mut level = vec![usize::MAX; self.len()];
        level[self.root] = 0;
        let mut queue = std::collections::VecDeque::from([self.root]);
        while let Some(v) = queue.pop_front() {
            for &i in &self.d_in[v] {
                let u = self.d_edges[i].from;
                let expected = level[v] + 1;
                if level[u] == usize::MAX {
                    level[u] = expected;
                    queue.push_back(u);
                } else if level[u] != expected {
                    return None;
                }
            }
        }
        if level.contains(&usize::MAX) {
            return None;
        }
        Some(level)
    }

    pub fn height(&self) -> Option<usize> {
        self.levels().map(|l| l.into_iter().max().unwrap_or(0))
    }

    /// `up(k)`: the biggest sub-r-DAG rooted at `k` — `k` plus every node
    /// from which `k` is deductively reachable.
    pub fn up(&self, k: usize) -> Result<RDagFragment, RdagError> {
        if k >= self.len() {
            return Err(RdagError::NodeNotFound(k));
        }
        let mut nodes = BTreeSet::new();
        let mut stack = vec![k];
        while let Some(v) = stack.pop() {
            if nodes.insert(v) {
                for e in self.premises(v) {
                    stack.push(e.from);
                }
            }
        }
        Ok(RDagFragment {
            nodes,
            root: Some(k),
        })
    }

    /// Componentwise restriction to `nodes`; edges with an endpoint outside
    /// are dropped.
    pub fn restrict(&self, nodes: &BTreeSet<usize>) -> RDagFragment {
        RDagFragment {
            nodes: nodes.iter().copied().filter(|&v| v < self.len()).collect(),
            root: nodes.contains(&self.root).then_some(self.root),
        }
    }

    /// Graph difference: everything outside `frag`.
    pub fn difference(&self, frag: &RDagFragment) -> RDagFragment {
        let nodes: BTreeSet<usize> = (0..self.len()).filter(|v| !frag.nodes.contains(v)).collect();
        RDagFragment {
            root: nodes.contains(&self.root).then_some(self.root),
            nodes,
        }
    }

    /// Initials of the whole certificate: top-formulas (no incoming edge of
    /// either sort) plus representative top-formulas (no incoming
    /// ancestrality edge, and an ancestrality chain reaching a deductive
    /// leaf).
    pub fn initials(&self) -> BTreeSet<usize> {
        let all: BTreeSet<usize> = (0..self.len()).collect();
        self.fragment_initials(&RDagFragment {
            nodes: all,
            root: Some(self.root),
        })
    }

    /// Initials of the restriction to `frag` (external edges stripped).
    pub fn fragment_initials(&self, frag: &RDagFragment) -> BTreeSet<usize> {
        let inside = |v: usize| frag.nodes.contains(&v);
        let mut out = BTreeSet::new();
        for &v in &frag.nodes {
            let has_d_in = self.premises(v).any(|e| inside(e.from));
            let has_a_in = self.a_in(v).any(|e| inside(e.from));
            if !has_a_in && !has_d_in {
                out.insert(v);
                continue;
            }
            if has_a_in {
                continue;
            }
            // representative: follow ancestrality edges to a deductive leaf
            let mut seen = BTreeSet::new();
            let mut stack: Vec<usize> = self
                .a_out(v)
                .filter(|e| inside(e.to))
                .map(|e| e.to)
                .collect();
            let mut found = false;
            while let Some(w) = stack.pop() {
                if !seen.insert(w) {
                    continue;
                }
                if !self.premises(w).any(|e| inside(e.from)) {
                    found = true;
                    break;
                }
                stack.extend(self.a_out(w).filter(|e| inside(e.to)).map(|e| e.to));
            }
            if found {
                out.insert(v);
            }
        }
        out
    }

    /// Full report on the structural-validity conditions.
    pub fn validate_structure(&self) -> StructureReport {
        let mut report = StructureReport::new();

        // Labels: every node label and bitstring lives in the order
        for (v, label) in self.labels.iter().enumerate() {
            if !self.order.contains(label) {
                report.fail(
                    Condition::Labels,
                    format!("node {v} labeled {label} outside the order"),
                );
            }
        }

        // Global: rooted connected DAG with level-consistent edges
        if !self.d_out[self.root].is_empty() {
            report.fail(Condition::Global, "root has an outgoing deductive edge".into());
        }
        for e in &self.d_edges {
            if e.from == e.to {
                report.fail(Condition::Global, format!("self-loop at {}", e.from));
            }
        }
        match self.levels() {
            None => report.fail(
                Condition::Global,
                "inverse paths from the root have unequal lengths or some node cannot reach it"
                    .into(),
            ),
            Some(_) => {
                for v in 0..self.len() {
                    if v != self.root && self.d_out[v].is_empty() {
                        report.fail(Condition::Global, format!("node {v} has no path to the root"));
                    }
                }
            }
        }

        // E_d-(l/L) consistency where rho is undefined on the outgoing edge
        for v in 0..self.len() {
            let premises: Vec<&DEdge> = self.premises(v).collect();
            for &oi in &self.d_out[v] {
                let out = &self.d_edges[oi];
                if out.rho.is_some() {
                    continue;
                }
                match premises.len() {
                    0 => {}
                    1 => {
                        let u = premises[0].from;
                        let ok_labels = matches!(
                            self.labels[v].parts(),
                            Some((_, r)) if *r == self.labels[u]
                        );
                        if !ok_labels {
                            report.fail(
                                Condition::EdLL1,
                                format!(
                                    "node {v} ({}) is not an intro over premise {u} ({})",
                                    self.labels[v], self.labels[u]
                                ),
                            );
                        } else if let (Some(out_bits), Some(in_bits)) =
                            (&out.bits, &premises[0].bits)
                        {
                            let antecedent = self.labels[v].parts().unwrap().0;
                            if let Ok(expected) = self.order.remove(in_bits, antecedent) {
                                if *out_bits != expected {
                                    report.fail(
                                        Condition::EdLL1,
                                        format!(
                                            "edge {}->{}: bits {} != discharge of {}",
                                            out.from, out.to, out_bits, in_bits
                                        ),
                                    );
                                }
                            }
                        }
                    }
                    2 => {
                        if elim_roles(self, premises[0].from, premises[1].from, v).is_none() {
                            report.fail(
                                Condition::EdLL2,
                                format!("node {v} is not an elim over its two premises"),
                            );
                        } else if let (Some(out_bits), Some(b1), Some(b2)) =
                            (&out.bits, &premises[0].bits, &premises[1].bits)
                        {
                            if let Ok(expected) = b1.union(b2) {
                                if *out_bits != expected {
                                    report.fail(
                                        Condition::EdLL2,
                                        format!(
                                            "edge {}->{}: bits {} != union of premise bits",
                                            out.from, out.to, out_bits
                                        ),
                                    );
                                }
                            }
                        }
                    }
                    _ => {}
                }
            }
        }

        // E_A conditions
        for e in &self.a_edges {
            if e.from == e.to {
                report.fail(Condition::EaIrreflexive, format!("ancestrality self-loop at {}", e.from));
            }
            let target_ok =
                self.d_in[e.to].is_empty() || self.a_out(e.to).any(|e2| e2.to != e.from);
            if !target_ok {
                report.fail(
                    Condition::EaTarget,
                    format!(
                        "ancestrality edge {}->{} targets an internal node without onward ancestrality",
                        e.from, e.to
                    ),
                );
            }
            let source_ok = self
                .premises(e.from)
                .any(|d| d.from != e.to && d.rho == Some(e.delta));
            if !source_ok {
                report.fail(
                    Condition::EaSource,
                    format!(
                        "ancestrality edge {}->{} (delta {}) has no matching rho on a deductive edge into {}",
                        e.from, e.to, e.delta, e.from
                    ),
                );
            }
        }

        // index discipline: rho values out of one node pairwise distinct
        for v in 0..self.len() {
            let mut seen = BTreeSet::new();
            for e in self.consumers(v) {
                if let Some(r) = e.rho {
                    if r == 0 {
                        report.fail(
                            Condition::IndexDiscipline,
                            format!("edge {}->{} uses reserved index 0", e.from, e.to),
                        );
                    }
                    if !seen.insert(r) {
                        report.fail(
                            Condition::IndexDiscipline,
                            format!("node {v} has two outgoing edges with rho {r}"),
                        );
                    }
                }
            }
            if self.is_divergent(v) && !self.a_in[v].is_empty() {
                report.fail(
                    Condition::DivergentAncestrality,
                    format!("divergent node {v} is the target of an ancestrality edge"),
                );
            }
        }

        report
    }

    pub fn to_json(&self) -> String {
        let file = RDagFile {
            order: self.order.formulas().iter().map(|f| f.to_string()).collect(),
            nodes: (0..self.len())
                .map(|id| RDagNodeFile {
                    id,
                    formula_index: self
                        .order
                        .index_of(&self.labels[id])
                        .expect("labels live in the order"),
                })
                .collect(),
            root: self.root,
            d_edges: self
                .d_edges
                .iter()
                .map(|e| DEdgeFile {
                    from: e.from,
                    to: e.to,
                    bits: e.bits.as_ref().map(|b| b.to_string()),
                    rho: e.rho,
                })
                .collect(),
            a_edges: self
                .a_edges
                .iter()
                .map(|e| AEdgeFile {
                    from: e.from,
                    to: e.to,
                    delta: e.delta,
                })
                .collect(),
        };
        let mut out = serde_json::to_string(&file).expect("r-DAG serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<RDagProof, RdagError> {
        let file: RDagFile =
            serde_json::from_str(text).map_err(|e| RdagError::File(e.to_string()))?;
        let mut order_formulas = Vec::with_capacity(file.order.len());
        for s in &file.order {
            order_formulas.push(parse_formula(s).map_err(|e| RdagError::File(e.to_string()))?);
        }
        let order =
            SubformulaOrder::from_list(order_formulas).map_err(|e| RdagError::File(e.to_string()))?;
        let mut labels = vec![None; file.nodes.len()];
        for n in &file.nodes {
            let formula = order
                .get(n.formula_index)
                .ok_or_else(|| RdagError::File(format!("formula_index {} out of range", n.formula_index)))?;
            let slot = labels
                .get_mut(n.id)
                .ok_or_else(|| RdagError::File(format!("node id {} not dense", n.id)))?;
            if slot.replace(formula.clone()).is_some() {
                return Err(RdagError::File(format!("duplicate node id {}", n.id)));
            }
        }
        let labels: Vec<Formula> = labels
            .into_iter()
            .collect::<Option<_>>()
            .ok_or_else(|| RdagError::File("missing node id".into()))?;
        let mut d_edges = Vec::with_capacity(file.d_edges.len());
        for e in &file.d_edges {
            let bits = match &e.bits {
                Some(s) => {
                    let b = Bitstring::parse(s).map_err(|err| RdagError::File(err.to_string()))?;
                    if b.len() != order.len() {
                        return Err(RdagError::File(format!(
                            "edge {}->{} bits have length {}, order has {}",
                            e.from,
                            e.to,
                            b.len(),
                            order.len()
                        )));
                    }
                    Some(b)
                }
                None => None,
            };
            d_edges.push(DEdge {
                from: e.from,
                to: e.to,
                bits,
                rho: e.rho,
            });
        }
        let a_edges = file
            .a_edges
            .iter()
            .map(|e| AEdge {
                from: e.from,
                to: e.to,
                delta: e.delta,
            })
            .collect();
        RDagProof::from_parts(labels, file.root, order, d_edges, a_edges)
            .map_err(|e| RdagError::File(e.to_string()))
    }
}

impl std::fmt::Debug for RDagProof {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "RDagProof of {} ({} nodes, {} deductive, {} ancestrality)",
            self.labels[self.root],
            self.len(),
            self.d_edges.len(),
            self.a_edges.len()
        )
    }
}

/// A node-set slice of a certificate. Fragments are views, not certificates;
/// they are never checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RDagFragment {
    pub nodes: BTreeSet<usize>,
    pub root: Option<usize>,
}

impl RDagFragment {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.nodes.contains(&v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Condition {
    Global,
    EdLL1,
    EdLL2,
    EaTarget,
    EaSource,
    EaIrreflexive,
    IndexDiscipline,
    DivergentAncestrality,
    Labels,
}

#[derive(Debug, Clone)]
pub struct ConditionFailure {
    pub condition: Condition,
    pub detail: String,
}

/// Pass/fail per structural condition, with offender details.
#[derive(Debug, Clone, Default)]
pub struct StructureReport {
    pub failures: Vec<ConditionFailure>,
}

impl StructureReport {
    fn new() -> StructureReport {
        StructureReport::default()
    }

    fn fail(&mut self, condition: Condition, detail: String) {
        self.failures.push(ConditionFailure { condition, detail });
    }

    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn passed(&self, condition: Condition) -> bool {
        self.failures.iter().all(|f| f.condition != condition)
    }

    pub fn summary(&self) -> String {
        if self.is_valid() {
            "all conditions pass".into()
        } else {
            self.failures
                .iter()
                .map(|f| format!("{:?}: {}", f.condition, f.detail))
                .collect::<Vec<_>>()
                .join("; ")
        }
    }
}

/// Lift a tree derivation into the degenerate certificate: no ancestrality
/// edges, no indices, one deductive edge per parent link carrying the
/// child's dependency bits.
pub fn from_derivation(d: &Derivation) -> RDagProof {
    let labels: Vec<Formula> = d.nodes().iter().map(|n| n.formula.clone()).collect();
    let mut d_edges = Vec::with_capacity(d.len().saturating_sub(1));
    for v in 0..d.len() {
        if let Some(parent) = d.parent(v) {
            d_edges.push(DEdge {
                from: v,
                to: parent,
                bits: Some(d.dep(v).clone()),
                rho: None,
            });
        }
    }
    RDagProof::from_parts(labels, d.root(), d.order().clone(), d_edges, Vec::new())
        .expect("a valid derivation lifts to a valid certificate")
}

/// Label assignment for a two-premise node: returns `(minor, major)` when
/// exactly one assignment satisfies `l(major) = l(minor) -> l(v)`.
pub(crate) fn elim_roles(dag: &RDagProof, u1: usize, u2: usize, v: usize) -> Option<(usize, usize)> {
    let fits = |minor: usize, major: usize| match dag.label(major).parts() {
        Some((l, r)) => l == dag.label(minor) && r == dag.label(v),
        None => false,
    };
    if fits(u1, u2) {
        Some((u1, u2))
    } else if fits(u2, u1) {
        Some((u2, u1))
    } else {
        None
    }
}

/// A collapsible instance: a deductively tree-shaped region with no internal
/// indices and no ancestrality sources; incoming ancestrality from outside
/// is tolerated and re-targeted on detach.
pub(crate) fn tree_region(dag: &RDagProof, k: usize) -> Option<RDagFragment> {
    let region = dag.up(k).ok()?;
    for &v in &region.nodes {
        if dag.a_out(v).next().is_some() {
            return None;
        }
        let out: Vec<&DEdge> = dag.consumers(v).collect();
        if v == k {
            if out.len() != 1 || out[0].rho.is_some() {
                return None;
            }
        } else if out.len() != 1 || out[0].rho.is_some() || !region.nodes.contains(&out[0].to) {
            return None;
        }
    }
    Some(region)
}

fn regions_equal(dag: &RDagProof, a: usize, b: usize) -> bool {
    if dag.label(a) != dag.label(b) {
        return false;
    }
    let pa: Vec<&DEdge> = dag.premises(a).collect();
    let pb: Vec<&DEdge> = dag.premises(b).collect();
    if pa.len() != pb.len() {
        return false;
    }
    match pa.len() {
        0 => true,
        1 => pa[0].bits == pb[0].bits && regions_equal(dag, pa[0].from, pb[0].from),
        2 => {
            let Some((min_a, maj_a)) = elim_roles(dag, pa[0].from, pa[1].from, a) else {
                return false;
            };
            let Some((min_b, maj_b)) = elim_roles(dag, pb[0].from, pb[1].from, b) else {
                return false;
            };
            let bits_of = |edges: &[&DEdge], node: usize| {
                edges.iter().find(|e| e.from == node).unwrap().bits.clone()
            };
            bits_of(&pa, min_a) == bits_of(&pb, min_b)
                && bits_of(&pa, maj_a) == bits_of(&pb, maj_b)
                && regions_equal(dag, min_a, min_b)
                && regions_equal(dag, maj_a, maj_b)
        }
        _ => false,
    }
}

/// Detach the instance rooted at `k` and link its consumer to the canonical
/// copy rooted at `canonical`, under index `index`.
///
/// The consumer's new deductive edge carries `rho = index` and inherits the
/// detached edge's bits; one ancestrality edge per initial of the canonical
/// copy carries `delta = index`. Ancestrality edges that pointed into the
/// removed region are re-targeted to the consumer. Node ids are compacted.
pub fn detach_link(
    dag: &RDagProof,
    k: usize,
    canonical: usize,
    index: u32,
) -> Result<RDagProof, RdagError> {
    detach_many(dag, &[(canonical, vec![(k, index)])])
}

/// One batched edit detaching, for each job, every victim instance onto its
/// canonical copy. All victim regions must be pairwise disjoint and disjoint
/// from every canonical region.
fn detach_many(
    dag: &RDagProof,
    jobs: &[(usize, Vec<(usize, u32)>)],
) -> Result<RDagProof, RdagError> {
    let mut used: BTreeSet<u32> = dag
        .d_edges
        .iter()
        .filter_map(|e| e.rho)
        .chain(dag.a_edges.iter().map(|e| e.delta))
        .collect();
    let mut canonical_nodes: BTreeSet<usize> = BTreeSet::new();
    let mut canon_regions: Vec<RDagFragment> = Vec::with_capacity(jobs.len());
    for (canonical, _) in jobs {
        let region = tree_region(dag, *canonical).ok_or_else(|| {
            RdagError::NotAnInstance(format!(
                "node {canonical} does not root a collapsible region"
            ))
        })?;
        canonical_nodes.extend(region.nodes.iter().copied());
        canon_regions.push(region);
    }
    let mut removed: BTreeSet<usize> = BTreeSet::new();
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new(); // removed node -> consumer
    // per job: (consumer, index, bits) per victim
    let mut links: Vec<Vec<(usize, u32, Option<Bitstring>)>> = Vec::with_capacity(jobs.len());
    for (canonical, victims) in jobs {
        let mut job_links = Vec::with_capacity(victims.len());
        for &(k, index) in victims {
            if k == *canonical {
                return Err(RdagError::NotAnInstance(
                    "the canonical copy is never detached".into(),
                ));
            }
            if index == 0 || !used.insert(index) {
                return Err(RdagError::IndexCollision(index));
            }
            let region = tree_region(dag, k).ok_or_else(|| {
                RdagError::NotAnInstance(format!("node {k} does not root a collapsible region"))
            })?;
            if region.nodes.intersection(&canonical_nodes).next().is_some()
                || region.nodes.intersection(&removed).next().is_some()
            {
                return Err(RdagError::NotAnInstance(format!(
                    "instance at {k} overlaps a canonical copy or another instance"
                )));
            }
            if !regions_equal(dag, k, *canonical) {
                return Err(RdagError::NotAnInstance(format!(
                    "sub-DAG at {k} is not an instance of the one at {canonical}"
                )));
            }
            let boundary = dag.consumers(k).next().expect("tree region has a consumer");
            job_links.push((boundary.to, index, boundary.bits.clone()));
            for &v in &region.nodes {
                owner.insert(v, boundary.to);
            }
            removed.extend(region.nodes.iter().copied());
        }
        links.push(job_links);
    }
    // consumers must survive the removal
    for job_links in &links {
        for (consumer, _, _) in job_links {
            if removed.contains(consumer) {
                return Err(RdagError::NotAnInstance(format!(
                    "consumer {consumer} of a detached instance is itself removed"
                )));
            }
        }
    }

    // survivor ids, compacted in order
    let mut remap = vec![usize::MAX; dag.len()];
    let mut labels = Vec::with_capacity(dag.len() - removed.len());
    for (v, slot) in remap.iter_mut().enumerate() {
        if !removed.contains(&v) {
            *slot = labels.len();
            labels.push(dag.labels[v].clone());
        }
    }

    let mut d_edges: Vec<DEdge> = dag
        .d_edges
        .iter()
        .filter(|e| !removed.contains(&e.from) && !removed.contains(&e.to))
        .map(|e| DEdge {
            from: remap[e.from],
            to: remap[e.to],
            bits: e.bits.clone(),
            rho: e.rho,
        })
        .collect();
    for ((canonical, _), job_links) in jobs.iter().zip(&links) {
        for (consumer, index, bits) in job_links {
            d_edges.push(DEdge {
                from: remap[*canonical],
                to: remap[*consumer],
                bits: bits.clone(),
                rho: Some(*index),
            });
        }
    }

    let mut a_edges: Vec<AEdge> = Vec::with_capacity(dag.a_edges.len());
    for e in &dag.a_edges {
        debug_assert!(!removed.contains(&e.from), "regions have no ancestrality sources");
        // an edge into a removed region re-targets to the region's consumer
        let to = match owner.get(&e.to) {
            Some(&consumer) => consumer,
            None => e.to,
        };
        a_edges.push(AEdge {
            from: remap[e.from],
            to: remap[to],
            delta: e.delta,
        });
    }
    for (canon_region, job_links) in canon_regions.iter().zip(&links) {
        let targets = dag.fragment_initials(canon_region);
        for (consumer, index, _) in job_links {
            for &w in &targets {
                a_edges.push(AEdge {
                    from: remap[*consumer],
                    to: remap[w],
                    delta: *index,
                });
            }
        }
    }

    let mut out = RDagProof::from_parts(
        labels,
        remap[dag.root],
        dag.order.clone(),
        d_edges,
        a_edges,
    )?;
    out.collapse_log = dag.collapse_log.clone();
    for ((canonical, _), job_links) in jobs.iter().zip(&links) {
        for (ordinal, (_, index, _)) in job_links.iter().enumerate() {
            out.collapse_log.push(CollapseRecord {
                index: *index,
                canonical: remap[*canonical],
                ordinal,
            });
        }
    }
    Ok(out)
}

/// Collapse all instances rooted at `roots` into the first one, which stays
/// in place as the canonical copy. `roots.len() == 1` is the identity.
pub fn collapse(dag: &RDagProof, roots: &[usize]) -> Result<RDagProof, RdagError> {
    let Some((&canonical, rest)) = roots.split_first() else {
        return Err(RdagError::InvalidParams("empty instance list".into()));
    };
    if rest.is_empty() {
        return Ok(dag.clone());
    }
    let levels = dag
        .levels()
        .ok_or_else(|| RdagError::InvalidStructure("level structure broken".into()))?;
    if rest.iter().any(|&k| levels[k] != levels[canonical]) {
        return Err(RdagError::NotAnInstance(
            "instances must share one level".into(),
        ));
    }
    let mut next = dag.fresh_index();
    let victims: Vec<(usize, u32)> = rest
        .iter()
        .map(|&k| {
            let pair = (k, next);
            next += 1;
            pair
        })
        .collect();
    detach_many(dag, &[(canonical, victims)])
}

/// Knobs for [`compress`]: the redundancy thresholds, and an optional `p`
/// gating compression on `size > m^p` with `m` the conclusion's size.
#[derive(Debug, Clone, Default)]
pub struct CompressParams {
    pub redundancy: RedundancyParams,
    pub p: Option<u32>,
}

impl CompressParams {
    pub fn validate(&self) -> Result<(), RdagError> {
        self.redundancy
            .validate()
            .map_err(RdagError::InvalidParams)?;
        if let Some(p) = self.p {
            if p <= 3 {
                return Err(RdagError::InvalidParams(format!("p must exceed 3, got {p}")));
            }
        }
        Ok(())
    }
}

/// Compress a derivation into an r-DAG certificate by collapsing repeated
/// sub-derivations level by level, starting from the lowest level that
/// carries an independent repeated matrix and sweeping upward. Verdict and
/// root entailment are preserved.
pub fn compress(d: &Derivation, params: &CompressParams) -> Result<RDagProof, RdagError> {
    params.validate()?;
    let dag = from_derivation(d);
    if let Some(p) = params.p {
        let m = d.conclusion().size() as u128;
        let gate = m.checked_pow(p);
        if gate.is_none_or(|g| (dag.len() as u128) <= g) {
            return Ok(dag);
        }
    }
    // the lowest level carrying any repeat group is also the lowest level
    // of the independent lowest-instance list: nothing is claimed before it
    let all_groups = crate::redundancy::find_repeats_all(&dag, &params.redundancy);
    let Some(start) = all_groups.iter().map(|g| g.level).min() else {
        return Ok(dag);
    };
    let mut calls = 0usize;
    let out = compress_from(dag, start, &params.redundancy, &mut calls)?;
    debug_assert!(calls <= d.len());
    Ok(out)
}

/// One recursive call per level, depth bounded by the height. Same-level
/// matrices are pairwise disjoint, so a level collapses in one batch.
fn compress_from(
    dag: RDagProof,
    level: usize,
    params: &RedundancyParams,
    calls: &mut usize,
) -> Result<RDagProof, RdagError> {
    if level > dag.height().expect("pipeline output is level-consistent") {
        return Ok(dag);
    }
    *calls += 1;
    let groups = find_repeats(&dag, level, params);
    let out = if groups.is_empty() {
        dag
    } else {
        let mut next = dag.fresh_index();
        let jobs: Vec<(usize, Vec<(usize, u32)>)> = groups
            .iter()
            .map(|g| {
                let victims = g.roots[1..]
                    .iter()
                    .map(|&k| {
                        let pair = (k, next);
                        next += 1;
                        pair
                    })
                    .collect();
                (g.canonical, victims)
            })
            .collect();
        detach_many(&dag, &jobs)?
    };
    compress_from(out, level + 1, params, calls)
}

#[derive(Serialize, Deserialize)]
struct RDagFile {
    order: Vec<String>,
    nodes: Vec<RDagNodeFile>,
    root: usize,
    d_edges: Vec<DEdgeFile>,
    a_edges: Vec<AEdgeFile>,
}

#[derive(Serialize, Deserialize)]
struct RDagNodeFile {
    id: usize,
    formula_index: usize,
}

#[derive(Serialize, Deserialize)]
struct DEdgeFile {
    from: usize,
    to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bits: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct AEdgeFile {
    from: usize,
    to: usize,
    delta: u32,
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::checker::{check, Outcome};
    use crate::formula::parse_formula;
    use crate::nd::tests::syllogism;
    use crate::nd::{Derivation, ProofTree};
    use crate::redundancy::find_repeats;

    fn f(text: &str) -> Formula {
        parse_formula(text).unwrap()
    }

    /// 5-node matrix: B from A and A -> (A -> B).
    fn small_matrix() -> ProofTree {
        ProofTree::elim(
            ProofTree::hyp(f("A")),
            ProofTree::elim(ProofTree::hyp(f("A")), ProofTree::hyp(f("A -> (A -> B)"))),
        )
    }

    /// Two disjoint copies of the 5-node matrix, both rooted at level 2.
    pub(crate) fn twin_matrix_derivation() -> Derivation {
        let x1 = ProofTree::elim(small_matrix(), ProofTree::hyp(f("B -> C")));
        let x2 = ProofTree::elim(small_matrix(), ProofTree::hyp(f("B -> (C -> D)")));
        Derivation::from_tree(&ProofTree::elim(x1, x2)).unwrap()
    }

    #[test]
    fn syllogism_lifts_cleanly() {
        let dag = from_derivation(&syllogism());
        assert_eq!(dag.len(), 6);
        assert_eq!(dag.d_edges().len(), 5);
        assert_eq!(dag.a_edges().len(), 0);
        assert!(dag.validate_structure().is_valid());
        // a tree's initials are exactly its leaves
        let leaves: BTreeSet<usize> = (0..dag.len()).filter(|&v| dag.is_deductive_leaf(v)).collect();
        assert_eq!(dag.initials(), leaves);
        assert_eq!(leaves.len(), 3);
    }

    #[test]
    fn single_node_certificate() {
        let d = Derivation::from_tree(&ProofTree::hyp(f("A"))).unwrap();
        let dag = from_derivation(&d);
        assert_eq!(dag.len(), 1);
        assert!(dag.validate_structure().is_valid());
        assert_eq!(dag.initials(), BTreeSet::from([0]));
        assert_eq!(dag.height(), Some(0));
    }

    #[test]
    fn up_difference_restrict() {
        let d = twin_matrix_derivation();
        let dag = from_derivation(&d);
        let groups = find_repeats(&dag, 2, &RedundancyParams::default());
        assert_eq!(groups.len(), 1);
        let k = groups[0].roots[0];
        let up = dag.up(k).unwrap();
        assert_eq!(up.len(), 5);
        assert_eq!(up.root, Some(k));
        let rest = dag.difference(&up);
        assert_eq!(rest.len(), dag.len() - 5);
        assert_eq!(rest.root, Some(dag.root()));
        assert!(dag.restrict(&BTreeSet::new()).is_empty());
    }

    #[test]
    fn structure_report_catches_violations() {
        let order = SubformulaOrder::canonical([f("A"), f("A -> A")]).unwrap();
        // ancestrality self-loop
        let dag = RDagProof::from_parts(
            vec![f("A"), f("A -> A")],
            1,
            order.clone(),
            vec![DEdge {
                from: 0,
                to: 1,
                bits: None,
                rho: None,
            }],
            vec![AEdge {
                from: 0,
                to: 0,
                delta: 1,
            }],
        )
        .unwrap();
        let report = dag.validate_structure();
        assert!(!report.passed(Condition::EaIrreflexive));
        assert!(!report.is_valid());

        // diamond with unequal legs: paths of length 1 and 2 from the root
        let order2 = SubformulaOrder::canonical([f("A"), f("B"), f("C")]).unwrap();
        let dag2 = RDagProof::from_parts(
            vec![f("A"), f("B"), f("C")],
            0,
            order2,
            vec![
                DEdge { from: 1, to: 0, bits: None, rho: None },
                DEdge { from: 2, to: 0, bits: None, rho: None },
                DEdge { from: 2, to: 1, bits: None, rho: None },
            ],
            Vec::new(),
        )
        .unwrap();
        let report2 = dag2.validate_structure();
        assert!(!report2.passed(Condition::Global));
        assert!(dag2.levels().is_none());
    }

    #[test]
    fn collapse_twins_exact_accounting() {
        let d = twin_matrix_derivation();
        let dag = from_derivation(&d);
        let before = check(&dag);
        let groups = find_repeats(&dag, 2, &RedundancyParams::default());
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].roots.len(), 2);
        assert_eq!(groups[0].size, 5);

        let out = collapse(&dag, &groups[0].roots).unwrap();
        assert_eq!(out.len(), dag.len() - 5);
        let rho_edges: Vec<&DEdge> = out.d_edges().iter().filter(|e| e.rho.is_some()).collect();
        assert_eq!(rho_edges.len(), 1);
        assert_eq!(rho_edges[0].rho, Some(1));
        // the matrix has three hypothesis leaves
        assert_eq!(out.a_edges().len(), 3);
        assert!(out.a_edges().iter().all(|e| e.delta == 1));
        assert!(out.validate_structure().is_valid(), "{}", out.validate_structure().summary());

        let after = check(&out);
        assert_eq!(after.outcome, before.outcome);
        assert_eq!(after.root_entailment, before.root_entailment);

        // whole-certificate initials: ambient leaves plus the consumer as a
        // representative top-formula
        let initials = out.initials();
        let consumer = out.a_edges()[0].from;
        assert!(initials.contains(&consumer));
        // the matrix's leaves are ancestrality targets, hence not initials
        for e in out.a_edges() {
            assert!(!initials.contains(&e.to));
        }
        // but they are the initials of the canonical region's restriction
        let canonical_root = rho_edges[0].from;
        let region = out.up(canonical_root).unwrap();
        let region_initials = out.fragment_initials(&region);
        let targets: BTreeSet<usize> = out.a_edges().iter().map(|e| e.to).collect();
        assert_eq!(region_initials, targets);
    }

    #[test]
    fn detach_guards() {
        let d = twin_matrix_derivation();
        let dag = from_derivation(&d);
        let groups = find_repeats(&dag, 2, &RedundancyParams::default());
        let roots = &groups[0].roots;
        assert!(matches!(
            detach_link(&dag, roots[0], roots[0], 1),
            Err(RdagError::NotAnInstance(_))
        ));
        assert!(matches!(
            detach_link(&dag, roots[1], roots[0], 0),
            Err(RdagError::IndexCollision(0))
        ));
        let once = detach_link(&dag, roots[1], roots[0], 1).unwrap();
        assert!(matches!(
            detach_link(&once, 0, 0, 1),
            Err(RdagError::NotAnInstance(_) | RdagError::IndexCollision(1))
        ));
        // detaching something that is not an instance
        assert!(matches!(
            detach_link(&dag, dag.root(), roots[0], 7),
            Err(RdagError::NotAnInstance(_))
        ));
    }

    #[test]
    fn collapse_singleton_is_identity() {
        let dag = from_derivation(&twin_matrix_derivation());
        let groups = find_repeats(&dag, 2, &RedundancyParams::default());
        let out = collapse(&dag, &groups[0].roots[..1]).unwrap();
        assert_eq!(out.to_json(), dag.to_json());
    }

    #[test]
    fn compress_without_repetitions_is_the_lift() {
        let d = syllogism();
        let dag = compress(&d, &CompressParams::default()).unwrap();
        assert_eq!(dag.to_json(), from_derivation(&d).to_json());
    }

    #[test]
    fn compress_twins() {
        let d = twin_matrix_derivation();
        let dag = compress(&d, &CompressParams::default()).unwrap();
        assert_eq!(dag.len(), 10);
        assert!(dag.validate_structure().is_valid());
        let before = check(&from_derivation(&d));
        let after = check(&dag);
        assert_eq!(before.outcome, after.outcome);
        assert_eq!(before.root_entailment, after.root_entailment);
        assert_eq!(before.outcome, Outcome::CorrectDerivation);
    }

    #[test]
    fn compress_fib_preserves_verdict() {
        for n in [4, 6, 8] {
            let fib = crate::oracle::fib_family(n);
            let plain = from_derivation(&fib.derivation);
            let packed = compress(&fib.derivation, &CompressParams::default()).unwrap();
            assert!(packed.len() < plain.len(), "n={n}");
            assert!(packed.validate_structure().is_valid(), "n={n}: {}", packed.validate_structure().summary());
            let before = check(&plain);
            let after = check(&packed);
            assert_eq!(before.outcome, Outcome::CorrectDerivation);
            assert_eq!(after.outcome, before.outcome, "n={n}");
            assert_eq!(after.root_entailment, before.root_entailment, "n={n}");
        }
    }

    #[test]
    fn size_gate_keeps_small_proofs_uncompressed() {
        let d = twin_matrix_derivation();
        let params = CompressParams {
            redundancy: RedundancyParams::default(),
            p: Some(4),
        };
        // conclusion is the atom D: m = 1, m^4 = 1 < 15, so the gate opens
        let dag = compress(&d, &params).unwrap();
        assert!(dag.len() < 15);
        // with a large conclusion the gate m^p dwarfs the size: plain lift
        let params = CompressParams {
            redundancy: RedundancyParams::default(),
            p: Some(4),
        };
        let closed = crate::oracle::fib_family(4).closed();
        let dag = compress(&closed, &params).unwrap();
        assert_eq!(dag.len(), closed.len());
        // p <= 3 rejected
        let bad = CompressParams {
            redundancy: RedundancyParams::default(),
            p: Some(3),
        };
        assert!(matches!(
            compress(&d, &bad),
            Err(RdagError::InvalidParams(_))
        ));
    }

    /// A detached instance whose consumer is an intro: the consumer's only
    /// premise arrives through the indexed edge, and the discharge must
    /// still be applied to the viewed sequent.
    #[test]
    fn intro_consumer_of_detached_instance() {
        // left: the canonical copy under an elim chain; right: the second
        // copy under an intro; both matrix roots on level 3
        let left = ProofTree::elim(
            ProofTree::elim(small_matrix(), ProofTree::hyp(f("B -> D"))),
            ProofTree::hyp(f("D -> C")),
        );
        let right = ProofTree::elim(
            ProofTree::intro(f("G"), small_matrix()),
            ProofTree::hyp(f("(G -> B) -> (C -> W)")),
        );
        let d = Derivation::from_tree(&ProofTree::elim(left, right)).unwrap();
        let dag = from_derivation(&d);
        let groups = find_repeats(&dag, 3, &RedundancyParams::default());
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].roots.len(), 2);

        let before = check(&dag);
        let out = collapse(&dag, &groups[0].roots).unwrap();
        assert!(out.validate_structure().is_valid(), "{}", out.validate_structure().summary());
        // the detached consumer is the intro node, fed only by the rho edge
        let rho_edge = out.d_edges().iter().find(|e| e.rho.is_some()).unwrap();
        let consumer = rho_edge.to;
        assert_eq!(out.label(consumer), &f("G -> B"));
        assert_eq!(out.in_degree(consumer), 1);
        let after = check(&out);
        assert_eq!(after.outcome, before.outcome);
        assert_eq!(after.root_entailment, before.root_entailment);
        assert_eq!(after.outcome, Outcome::CorrectDerivation);
    }

    #[test]
    fn rdag_json_round_trip() {
        let d = twin_matrix_derivation();
        let dag = compress(&d, &CompressParams::default()).unwrap();
        let json = dag.to_json();
        let back = RDagProof::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);
        assert_eq!(check(&back), check(&dag));
    }
}
