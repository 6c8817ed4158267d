//! Tree-shaped Natural Deduction derivations with greedy-discharge
//! dependency bitstrings, branch decomposition, normality and expanded-form
//! checks, the syntax-tree mapping for expanded proofs, and a goal-directed
//! proof search that emits already-normal, already-expanded proofs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{
    parse_formula, sub_closure, Bitstring, Formula, FormulaError, SubformulaOrder, SyntaxTree,
    VertexId,
};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    Hypothesis,
    ImpIntro,
    ImpElim,
}

/// One formula occurrence in a derivation. `children` is empty for a
/// hypothesis, `[premise]` for an intro, `[minor, major]` for an elim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub formula: Formula,
    pub rule: Rule,
    pub children: Vec<NodeId>,
}

/// An unvalidated proof tree, the input shape for building a [`Derivation`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofTree {
    Hyp(Formula),
    Intro(Formula, Box<ProofTree>),
    Elim(Box<ProofTree>, Box<ProofTree>),
}

impl ProofTree {
    pub fn hyp(formula: Formula) -> ProofTree {
        ProofTree::Hyp(formula)
    }

    /// `antecedent -> (conclusion of child)`, greedily discharging every open
    /// occurrence of `antecedent` above.
    pub fn intro(antecedent: Formula, premise: ProofTree) -> ProofTree {
        ProofTree::Intro(antecedent, Box::new(premise))
    }

    pub fn elim(minor: ProofTree, major: ProofTree) -> ProofTree {
        ProofTree::Elim(Box::new(minor), Box::new(major))
    }

    pub fn size(&self) -> usize {
        match self {
            ProofTree::Hyp(_) => 1,
            ProofTree::Intro(_, t) => 1 + t.size(),
            ProofTree::Elim(a, b) => 1 + a.size() + b.size(),
        }
    }
}

/// Wrap `tree` in intros discharging `gammas` in listing order, so the
/// conclusion becomes `g1 -> (g2 -> ... -> conclusion)`.
pub fn close_derivation(tree: ProofTree, gammas: &[Formula]) -> ProofTree {
    gammas
        .iter()
        .rev()
        .fold(tree, |t, g| ProofTree::intro(g.clone(), t))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NdError {
    #[error("node {node}: {msg}")]
    RuleShape { node: NodeId, msg: String },
    #[error("node {node}: dependency mismatch, expected {expected}, found {found}")]
    Dependency {
        node: NodeId,
        expected: String,
        found: String,
    },
    #[error("malformed derivation tree: {0}")]
    BadTree(String),
    #[error("branch {branch}: no syntax-tree assignment satisfies the right-ancestral condition ({msg})")]
    Mapping { branch: usize, msg: String },
    #[error("derivation is not {0}")]
    Precondition(&'static str),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("invalid derivation file: {0}")]
    File(String),
}

/// A validated tree-shaped ND derivation. Node ids are dense preorder
/// integers; `dep[v]` is the dependency set of `v`'s formula occurrence (the
/// root's standing for the derivation's open assumptions).
#[derive(Clone)]
pub struct Derivation {
    nodes: Vec<Node>,
    root: NodeId,
    dep: Vec<Bitstring>,
    order: SubformulaOrder,
    parent: Vec<Option<NodeId>>,
}

impl Derivation {
    /// Build and validate a derivation, computing deps under greedy
    /// discharge and the canonical order over the node formulas' sub-closure.
    pub fn from_tree(tree: &ProofTree) -> Result<Derivation, NdError> {
        let mut nodes: Vec<Node> = Vec::with_capacity(tree.size());
        Self::add_tree(tree, &mut nodes)?;
        let universe = sub_closure(nodes.iter().map(|n| &n.formula));
        let order = SubformulaOrder::canonical(universe)?;
        Self::assemble(nodes, 0, order)
    }

    /// Preorder numbering; computes each node's formula from its children.
    fn add_tree(tree: &ProofTree, nodes: &mut Vec<Node>) -> Result<NodeId, NdError> {
        let id = nodes.len();
        nodes.push(Node {
            formula: Formula::atom("placeholder"),
            rule: Rule::Hypothesis,
            children: Vec::new(),
        });
        match tree {
            ProofTree::Hyp(f) => {
                nodes[id].formula = f.clone();
            }
            ProofTree::Intro(antecedent, premise) => {
                let child = Self::add_tree(premise, nodes)?;
                let conclusion = Formula::imp(antecedent.clone(), nodes[child].formula.clone());
                nodes[id] = Node {
                    formula: conclusion,
                    rule: Rule::ImpIntro,
                    children: vec![child],
                };
            }
            ProofTree::Elim(minor, major) => {
                let minor_id = Self::add_tree(minor, nodes)?;
                let major_id = Self::add_tree(major, nodes)?;
                let minor_formula = nodes[minor_id].formula.clone();
                let conclusion = match nodes[major_id].formula.parts() {
                    Some((l, r)) if *l == minor_formula => r.clone(),
                    _ => {
                        return Err(NdError::RuleShape {
                            node: id,
                            msg: format!(
                                "elim major {} does not consume minor {}",
                                nodes[major_id].formula, minor_formula
                            ),
                        })
                    }
                };
                nodes[id] = Node {
                    formula: conclusion,
                    rule: Rule::ImpElim,
                    children: vec![minor_id, major_id],
                };
            }
        }
        Ok(id)
    }

    /// Build from explicit parts (deserialization path) and validate fully.
    pub fn from_parts(
        nodes: Vec<Node>,
        root: NodeId,
        order: SubformulaOrder,
        dep: Vec<Bitstring>,
    ) -> Result<Derivation, NdError> {
        if nodes.is_empty() || root >= nodes.len() || dep.len() != nodes.len() {
            return Err(NdError::BadTree("node/dep/root arity mismatch".into()));
        }
        let parent = Self::parents(&nodes, root)?;
        let d = Derivation {
            nodes,
            root,
            dep,
            order,
            parent,
        };
        d.validate()?;
        Ok(d)
    }

    fn assemble(
        nodes: Vec<Node>,
        root: NodeId,
        order: SubformulaOrder,
    ) -> Result<Derivation, NdError> {
        let parent = Self::parents(&nodes, root)?;
        let mut dep = vec![Bitstring::zeros(order.len()); nodes.len()];
        // postorder over a tree; recursion depth is the derivation height
        fn fill(
            nodes: &[Node],
            order: &SubformulaOrder,
            dep: &mut [Bitstring],
            v: NodeId,
        ) -> Result<(), NdError> {
            for &c in &nodes[v].children {
                fill(nodes, order, dep, c)?;
            }
            dep[v] = match nodes[v].rule {
                Rule::Hypothesis => order.singleton(&nodes[v].formula)?,
                Rule::ImpIntro => {
                    let premise = nodes[v].children[0];
                    let antecedent = nodes[v]
                        .formula
                        .parts()
                        .ok_or(NdError::RuleShape {
                            node: v,
                            msg: "intro conclusion is atomic".into(),
                        })?
                        .0;
                    order.remove(&dep[premise], antecedent)?
                }
                Rule::ImpElim => dep[nodes[v].children[0]].union(&dep[nodes[v].children[1]])?,
            };
            Ok(())
        }
        fill(&nodes, &order, &mut dep, root)?;
        let d = Derivation {
            nodes,
            root,
            dep,
            order,
            parent,
        };
        d.validate()?;
        Ok(d)
    }

    fn parents(nodes: &[Node], root: NodeId) -> Result<Vec<Option<NodeId>>, NdError> {
        let mut parent = vec![None; nodes.len()];
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(v) = stack.pop() {
            for &c in &nodes[v].children {
                if c >= nodes.len() {
                    return Err(NdError::BadTree(format!("node {v} has dangling child {c}")));
                }
                if seen[c] {
                    return Err(NdError::BadTree(format!("node {c} has two parents")));
                }
                seen[c] = true;
                parent[c] = Some(v);
                stack.push(c);
            }
        }
        if let Some(unreached) = seen.iter().position(|s| !s) {
            return Err(NdError::BadTree(format!(
                "node {unreached} unreachable from root"
            )));
        }
        Ok(parent)
    }

    /// Check every rule-shape and dependency invariant.
    pub fn validate(&self) -> Result<(), NdError> {
        for (v, node) in self.nodes.iter().enumerate() {
            match node.rule {
                Rule::Hypothesis => {
                    if !node.children.is_empty() {
                        return Err(NdError::RuleShape {
                            node: v,
                            msg: "hypothesis with premises".into(),
                        });
                    }
                    let expected = self.order.singleton(&node.formula)?;
                    self.expect_dep(v, &expected)?;
                }
                Rule::ImpIntro => {
                    let [child] = node.children[..] else {
                        return Err(NdError::RuleShape {
                            node: v,
                            msg: "intro must have exactly one premise".into(),
                        });
                    };
                    let Some((l, r)) = node.formula.parts() else {
                        return Err(NdError::RuleShape {
                            node: v,
                            msg: "intro conclusion is atomic".into(),
                        });
                    };
                    if self.nodes[child].formula != *r {
                        return Err(NdError::RuleShape {
                            node: v,
                            msg: format!(
                                "intro premise is {}, conclusion consequent is {r}",
                                self.nodes[child].formula
                            ),
                        });
                    }
                    let expected = self.order.remove(&self.dep[child], l)?;
                    self.expect_dep(v, &expected)?;
                }
                Rule::ImpElim => {
                    let [minor, major] = node.children[..] else {
                        return Err(NdError::RuleShape {
                            node: v,
                            msg: "elim must have exactly two premises".into(),
                        });
                    };
                    let expected_major = Formula::imp(
                        self.nodes[minor].formula.clone(),
                        node.formula.clone(),
                    );
                    if self.nodes[major].formula != expected_major {
                        return Err(NdError::RuleShape {
                            node: v,
                            msg: format!(
                                "elim major is {}, expected {expected_major}",
                                self.nodes[major].formula
                            ),
                        });
                    }
                    let expected = self.dep[minor].union(&self.dep[major])?;
                    self.expect_dep(v, &expected)?;
                }
            }
        }
        Ok(())
    }

    fn expect_dep(&self, v: NodeId, expected: &Bitstring) -> Result<(), NdError> {
        if &self.dep[v] != expected {
            return Err(NdError::Dependency {
                node: v,
                expected: expected.to_string(),
                found: self.dep[v].to_string(),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, v: NodeId) -> &Node {
        &self.nodes[v]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn dep(&self, v: NodeId) -> &Bitstring {
        &self.dep[v]
    }

    pub fn order(&self) -> &SubformulaOrder {
        &self.order
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn conclusion(&self) -> &Formula {
        &self.nodes[self.root].formula
    }

    pub fn open_assumptions(&self) -> BTreeSet<Formula> {
        self.order
            .decode(&self.dep[self.root])
            .expect("root dep is over the derivation order")
    }

    pub fn is_closed(&self) -> bool {
        self.dep[self.root].is_empty()
    }

    /// No occurrence is both an intro conclusion and an elim major premise.
    pub fn is_normal(&self) -> bool {
        self.nodes.iter().all(|node| {
            node.rule != Rule::ImpElim || self.nodes[node.children[1]].rule != Rule::ImpIntro
        })
    }

    /// Deductive distance from the conclusion, per node.
    pub fn levels(&self) -> Vec<usize> {
        let mut level = vec![0; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            for &c in &self.nodes[v].children {
                level[c] = level[v] + 1;
                stack.push(c);
            }
        }
        level
    }

    pub fn height(&self) -> usize {
        self.levels().into_iter().max().unwrap_or(0)
    }

    /// Every formula occurrence is a subformula of the conclusion or of an
    /// open assumption.
    pub fn check_subformula_principle(&self) -> bool {
        let mut universe = sub_closure([self.conclusion()]);
        universe.extend(sub_closure(self.open_assumptions().iter()));
        self.nodes.iter().all(|n| universe.contains(&n.formula))
    }

    /// Decompose into branches; every node lies on exactly one.
    pub fn branches(&self) -> Vec<Branch> {
        // A node continues its parent's branch iff it is the parent's major
        // premise (elim) or premise (intro). Branch ends: root and minors.
        let mut branches = Vec::new();
        let mut ends: Vec<NodeId> = Vec::new();
        for node in &self.nodes {
            if node.rule == Rule::ImpElim {
                ends.push(node.children[0]);
            }
        }
        ends.push(self.root);
        ends.sort_unstable();
        for &end in &ends {
            let mut seq = Vec::new();
            let mut cur = end;
            loop {
                seq.push(cur);
                match self.nodes[cur].rule {
                    Rule::Hypothesis => break,
                    Rule::ImpIntro => cur = self.nodes[cur].children[0],
                    Rule::ImpElim => cur = self.nodes[cur].children[1],
                }
            }
            seq.reverse();
            // minimal formula: first member that is not the major premise of
            // the elim concluding the next member
            let mut minimal = seq.len() - 1;
            for i in 0..seq.len() - 1 {
                let next = seq[i + 1];
                let is_major =
                    self.nodes[next].rule == Rule::ImpElim && self.nodes[next].children[1] == seq[i];
                if !is_major {
                    minimal = i;
                    break;
                }
            }
            branches.push(Branch {
                nodes: seq,
                minimal_index: minimal,
                kind: BranchKind::Secondary { order: usize::MAX },
            });
        }
        // n-branch orders: the principal branch is the 0-branch; a branch
        // ending at a minor premise of an elim on an n-branch is an
        // (n+1)-branch.
        let mut owner = vec![usize::MAX; self.nodes.len()];
        for (b, branch) in branches.iter().enumerate() {
            for &v in &branch.nodes {
                owner[v] = b;
            }
        }
        let mut orders = vec![usize::MAX; branches.len()];
        let principal = owner[self.root];
        orders[principal] = 0;
        let mut changed = true;
        while changed {
            changed = false;
            for (b, branch) in branches.iter().enumerate() {
                if orders[b] != usize::MAX {
                    continue;
                }
                let last = *branch.nodes.last().unwrap();
                let consumer = self.parent[last].expect("minor premise has a parent");
                if orders[owner[consumer]] != usize::MAX {
                    orders[b] = orders[owner[consumer]] + 1;
                    changed = true;
                }
            }
        }
        for (b, branch) in branches.iter_mut().enumerate() {
            branch.kind = if orders[b] == 0 {
                BranchKind::Principal
            } else {
                BranchKind::Secondary { order: orders[b] }
            };
        }
        branches
    }

    /// Every branch's minimal formula is atomic.
    pub fn is_expanded(&self) -> bool {
        self.branches()
            .iter()
            .all(|b| self.nodes[b.nodes[b.minimal_index]].formula.is_atom())
    }

    /// Serialize to the structured-text artifact format; byte-deterministic.
    pub fn to_json(&self) -> String {
        let file = DerivationFile {
            order: self.order.formulas().iter().map(|f| f.to_string()).collect(),
            nodes: self
                .nodes
                .iter()
                .enumerate()
                .map(|(id, n)| DerivationNodeFile {
                    id,
                    formula: n.formula.to_string(),
                    rule: n.rule,
                    children: n.children.clone(),
                    dep: self.dep[id].to_string(),
                })
                .collect(),
            root: self.root,
        };
        let mut out = serde_json::to_string(&file).expect("derivation serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Derivation, NdError> {
        let file: DerivationFile =
            serde_json::from_str(text).map_err(|e| NdError::File(e.to_string()))?;
        let mut order_formulas = Vec::with_capacity(file.order.len());
        for s in &file.order {
            order_formulas.push(parse_formula(s)?);
        }
        let order = SubformulaOrder::from_list(order_formulas)?;
        let mut nodes: Vec<Option<Node>> = vec![None; file.nodes.len()];
        let mut dep = vec![Bitstring::zeros(order.len()); file.nodes.len()];
        for n in &file.nodes {
            let slot = nodes
                .get_mut(n.id)
                .ok_or_else(|| NdError::File(format!("node id {} not dense", n.id)))?;
            let node = Node {
                formula: parse_formula(&n.formula)?,
                rule: n.rule,
                children: n.children.clone(),
            };
            if slot.replace(node).is_some() {
                return Err(NdError::File(format!("duplicate node id {}", n.id)));
            }
            dep[n.id] = Bitstring::parse(&n.dep)?;
        }
        let nodes: Vec<Node> = nodes
            .into_iter()
            .collect::<Option<_>>()
            .ok_or_else(|| NdError::File("missing node id".into()))?;
        Derivation::from_parts(nodes, file.root, order, dep)
    }
}

impl fmt::Debug for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Derivation of {} ({} nodes)", self.conclusion(), self.len())
    }
}

#[derive(Serialize, Deserialize)]
struct DerivationFile {
    order: Vec<String>,
    nodes: Vec<DerivationNodeFile>,
    root: NodeId,
}

#[derive(Serialize, Deserialize)]
struct DerivationNodeFile {
    id: NodeId,
    formula: String,
    rule: Rule,
    children: Vec<NodeId>,
    dep: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BranchKind {
    Principal,
    Secondary { order: usize },
}

/// A branch: top-formula down to the conclusion or a minor premise. The
/// E-part runs through `nodes[..=minimal_index]`; intros follow.
#[derive(Debug, Clone)]
pub struct Branch {
    pub nodes: Vec<NodeId>,
    pub minimal_index: usize,
    pub kind: BranchKind,
}

impl Branch {
    pub fn minimal(&self) -> NodeId {
        self.nodes[self.minimal_index]
    }

    /// The E-part including the minimal formula.
    pub fn e_part(&self) -> &[NodeId] {
        &self.nodes[..=self.minimal_index]
    }

    pub fn has_i_part(&self) -> bool {
        self.minimal_index + 1 < self.nodes.len()
    }
}

/// A normal expanded closed proof together with the map from its E-part
/// occurrences into the conclusion's syntax tree.
pub struct EmND {
    pub derivation: Derivation,
    pub tree: SyntaxTree,
    pub ell: BTreeMap<NodeId, VertexId>,
    pub branches: Vec<Branch>,
    /// Per branch, the syntax-tree path instantiated by its E-part.
    pub e_part_paths: Vec<Vec<VertexId>>,
}

/// Compute the E-mapping of a valid, normal, expanded, closed proof.
///
/// Each branch's E-part (top-formula through minimal formula) is matched to
/// a descending right-child path whose head is a left child; minor premises
/// are pinned to the left sibling of the consuming elim's image.
pub fn emnd_map(d: &Derivation) -> Result<EmND, NdError> {
    d.validate()?;
    if !d.is_closed() {
        return Err(NdError::Precondition("closed"));
    }
    if !d.is_normal() {
        return Err(NdError::Precondition("normal"));
    }
    if !d.is_expanded() {
        return Err(NdError::Precondition("expanded"));
    }
    let tree = SyntaxTree::new(d.conclusion());
    let branches = d.branches();

    let mut ell: BTreeMap<NodeId, VertexId> = BTreeMap::new();
    let mut paths: Vec<Vec<VertexId>> = vec![Vec::new(); branches.len()];

    // Process by n-branch order so the consuming elim of each minor premise
    // is already mapped.
    let mut indices: Vec<usize> = (0..branches.len()).collect();
    indices.sort_by_key(|&b| match branches[b].kind {
        BranchKind::Principal => (0, b),
        BranchKind::Secondary { order } => (order, b),
    });

    for &bi in &indices {
        let branch = &branches[bi];
        let e_part = branch.e_part();
        let last = *branch.nodes.last().unwrap();

        // The anchor is the vertex assigned to the minimal formula.
        let anchor = if last == d.root() {
            // principal branch: search for a matching path
            find_anchor(d, &tree, bi, e_part)?
        } else if branch.minimal_index == branch.nodes.len() - 1 {
            // degenerate branch ending as a minor premise: forced position
            forced_minor_vertex(d, &tree, &ell, bi, last)?
        } else {
            // branch with an I-part ending as a minor premise: the minor
            // premise position is forced, the E-part anchor is searched
            let forced = forced_minor_vertex(d, &tree, &ell, bi, last)?;
            ell.insert(last, forced);
            find_anchor(d, &tree, bi, e_part)?
        };

        // Walk the chain upward from the anchor, assigning the E-part.
        let mut vertex = anchor;
        for (offset, &node) in e_part.iter().rev().enumerate() {
            if offset > 0 {
                vertex = tree
                    .parent(vertex)
                    .map(|(p, _)| p)
                    .expect("chain length was verified");
            }
            ell.insert(node, vertex);
        }
        paths[bi] = e_part.iter().map(|n| ell[n]).collect();
    }

    // consistency sweep over the finished assignment
    for (&node, &vertex) in &ell {
        if tree.label(vertex) != &d.node(node).formula {
            return Err(NdError::Mapping {
                branch: 0,
                msg: format!("label mismatch at node {node}"),
            });
        }
    }
    for (bi, branch) in branches.iter().enumerate() {
        let top = branch.nodes[0];
        let min_vertex = paths[bi].last().copied().unwrap();
        let chain = tree.right_ancestral(min_vertex)?;
        let expected_top = if branch.minimal_index == 0 {
            min_vertex
        } else {
            *chain.last().ok_or(NdError::Mapping {
                branch: bi,
                msg: "minimal formula has no right-ancestral".into(),
            })?
        };
        if ell[&top] != expected_top || !tree.is_left_child(expected_top) {
            return Err(NdError::Mapping {
                branch: bi,
                msg: "top-formula is not the left-child right-ancestral".into(),
            });
        }
    }

    Ok(EmND {
        derivation: d.clone(),
        tree,
        ell,
        branches,
        e_part_paths: paths,
    })
}

/// Left sibling of the consuming elim's conclusion image.
fn forced_minor_vertex(
    d: &Derivation,
    tree: &SyntaxTree,
    ell: &BTreeMap<NodeId, VertexId>,
    branch: usize,
    minor: NodeId,
) -> Result<VertexId, NdError> {
    let consumer = d.parent(minor).expect("minor premise has a parent");
    let conclusion_vertex = *ell.get(&consumer).ok_or(NdError::Mapping {
        branch,
        msg: "consuming elim not yet mapped".into(),
    })?;
    let (parent, _) = tree.parent(conclusion_vertex).ok_or(NdError::Mapping {
        branch,
        msg: "consuming elim maps to the root".into(),
    })?;
    let (left, _) = tree.children(parent).expect("internal vertex");
    if tree.label(left) != &d.node(minor).formula {
        return Err(NdError::Mapping {
            branch,
            msg: "minor premise does not match the left sibling".into(),
        });
    }
    Ok(left)
}

/// Smallest vertex labeled like the minimal formula whose upward right-child
/// chain matches the E-part labels and tops out at a left child.
fn find_anchor(
    d: &Derivation,
    tree: &SyntaxTree,
    branch: usize,
    e_part: &[NodeId],
) -> Result<VertexId, NdError> {
    let steps = e_part.len() - 1;
    'candidates: for v in tree.vertices() {
        if tree.label(v) != &d.node(*e_part.last().unwrap()).formula {
            continue;
        }
        let mut cur = v;
        for i in (0..steps).rev() {
            let Some((p, crate::formula::ChildSide::Right)) = tree.parent(cur) else {
                continue 'candidates;
            };
            if tree.label(p) != &d.node(e_part[i]).formula {
                continue 'candidates;
            }
            cur = p;
        }
        if tree.is_left_child(cur) {
            return Ok(v);
        }
    }
    Err(NdError::Mapping {
        branch,
        msg: "no matching syntax-tree path".into(),
    })
}

/// Number of distinct syntax-tree paths instantiated by E-parts of branches
/// that continue into an I-part.
pub fn e_part_types(e: &EmND) -> usize {
    let mut distinct: BTreeSet<&[VertexId]> = BTreeSet::new();
    for (bi, branch) in e.branches.iter().enumerate() {
        if branch.has_i_part() {
            distinct.insert(&e.e_part_paths[bi]);
        }
    }
    distinct.len()
}

/// Goal-directed search for a normal expanded closed proof of `goal` with
/// height at most `depth_bound`: intro on implications, and for an atom an
/// elimination chain down the right spine of an in-scope assumption.
pub fn proof_search(goal: &Formula, depth_bound: usize) -> Option<Derivation> {
    let mut scope = Vec::new();
    let tree = search(goal, &mut scope, depth_bound)?;
    let d = Derivation::from_tree(&tree).expect("search emits valid derivations");
    debug_assert!(d.is_closed() && d.is_normal() && d.is_expanded());
    Some(d)
}

fn search(goal: &Formula, scope: &mut Vec<Formula>, budget: usize) -> Option<ProofTree> {
    match goal {
        Formula::Imp(l, r) => {
            if budget == 0 {
                return None;
            }
            scope.push(l.as_ref().clone());
            let sub = search(r, scope, budget - 1);
            scope.pop();
            sub.map(|t| ProofTree::intro(l.as_ref().clone(), t))
        }
        Formula::Atom(_) => {
            let mut candidates: Vec<Formula> = scope
                .iter()
                .filter(|a| a.spine().1 == goal)
                .cloned()
                .collect();
            candidates.sort_by_cached_key(|f| (f.size(), f.to_string()));
            candidates.dedup();
            for assumption in candidates {
                let (antecedents, _) = assumption.spine();
                let chain_len = antecedents.len();
                if chain_len > budget {
                    continue;
                }
                let antecedents: Vec<Formula> = antecedents.into_iter().cloned().collect();
                let mut proof = ProofTree::hyp(assumption.clone());
                let mut ok = true;
                for (i, antecedent) in antecedents.iter().enumerate() {
                    let minor_budget = budget - (chain_len - i);
                    match search(antecedent, scope, minor_budget) {
                        Some(minor) => proof = ProofTree::elim(minor, proof),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    return Some(proof);
                }
            }
            None
        }
    }
}
