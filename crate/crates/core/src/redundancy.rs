//! Repeated sub-derivation discovery: fingerprint collapsible subtrees per
//! level, group structurally identical instances, and select an independent
//! family of lowest repeated instances for the compressor.

use std::collections::HashMap;
use std::hash::Hash;

use crate::nd::Derivation;
use crate::rdag::{elim_roles, from_derivation, tree_region, RDagProof};

/// Hash of a sub-derivation's full labeled structure: formulas, rule shape,
/// child order, and dependency bitstrings. Equal fingerprints are confirmed
/// by deep comparison before two instances are grouped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint(pub u64);

/// Desk-scale gate for what counts as redundant: a group is reported when
/// at least `min_count` structurally identical instances of size at least
/// `min_size` share a level. (Asymptotically one would demand
/// super-polynomially many, super-polynomially large instances.)
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RedundancyParams {
    pub min_count: usize,
    pub min_size: usize,
}

impl Default for RedundancyParams {
    fn default() -> RedundancyParams {
        RedundancyParams {
            min_count: 2,
            min_size: 2,
        }
    }
}

impl RedundancyParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.min_count < 2 {
            return Err(format!("min_count must be at least 2, got {}", self.min_count));
        }
        if self.min_size < 2 {
            return Err(format!("min_size must be at least 2, got {}", self.min_size));
        }
        Ok(())
    }
}

/// A matrix and the roots of its instances at one level.
#[derive(Debug, Clone)]
pub struct MatrixOccurrences {
    pub fingerprint: Fingerprint,
    /// Root of the first instance, the copy a collapse keeps.
    pub canonical: usize,
    /// Node count of the matrix.
    pub size: usize,
    pub level: usize,
    /// All instance roots at `level`, ascending.
    pub roots: Vec<usize>,
}

struct SubtreeInfo {
    /// Hashable purely-deductive interior (no indices, no sharing inside).
    inner_ok: Vec<bool>,
    /// Hash-consed structure id: equal ids are structurally identical
    /// subtrees (the interning map's key equality is the full comparison).
    canon: Vec<u64>,
    size: Vec<usize>,
}

type CanonKey = (usize, Vec<(u64, Option<crate::formula::Bitstring>)>);

fn subtree_info(dag: &RDagProof, levels: &[usize]) -> SubtreeInfo {
    let n = dag.len();
    let mut info = SubtreeInfo {
        inner_ok: vec![false; n],
        canon: vec![0; n],
        size: vec![0; n],
    };
    // labels compare by their position in the order
    let label_index: Vec<usize> = (0..n)
        .map(|v| dag.order().index_of(dag.label(v)).unwrap_or(usize::MAX))
        .collect();
    let mut interned: HashMap<CanonKey, u64> = HashMap::new();
    let mut by_level: Vec<usize> = (0..n).collect();
    by_level.sort_unstable_by_key(|&v| std::cmp::Reverse(levels[v]));
    for v in by_level {
        let premises: Vec<_> = dag.premises(v).collect();
        let ok = dag.a_out(v).next().is_none()
            && premises.iter().all(|e| {
                info.inner_ok[e.from] && e.rho.is_none() && dag.out_degree(e.from) == 1
            });
        if !ok {
            continue;
        }
        info.inner_ok[v] = true;
        info.size[v] = 1 + premises.iter().map(|e| info.size[e.from]).sum::<usize>();
        let mut ordered: Vec<&&crate::rdag::DEdge> = premises.iter().collect();
        if premises.len() == 2 {
            if let Some((minor, _)) = elim_roles(dag, premises[0].from, premises[1].from, v) {
                ordered.sort_by_key(|e| e.from != minor);
            }
        }
        let key: CanonKey = (
            label_index[v],
            ordered
                .iter()
                .map(|e| (info.canon[e.from], e.bits.clone()))
                .collect(),
        );
        let next = interned.len() as u64;
        info.canon[v] = *interned.entry(key).or_insert(next);
    }
    info
}

#[cfg(test)]
fn deep_equal(dag: &RDagProof, a: usize, b: usize) -> bool {
    if dag.label(a) != dag.label(b) {
        return false;
    }
    let pa: Vec<_> = dag.premises(a).collect();
    let pb: Vec<_> = dag.premises(b).collect();
    if pa.len() != pb.len() {
        return false;
    }
    match pa.len() {
        0 => true,
        1 => pa[0].bits == pb[0].bits && deep_equal(dag, pa[0].from, pb[0].from),
        2 => {
            let Some((min_a, maj_a)) = elim_roles(dag, pa[0].from, pa[1].from, a) else {
                return false;
            };
            let Some((min_b, maj_b)) = elim_roles(dag, pb[0].from, pb[1].from, b) else {
                return false;
            };
            let bits = |edges: &[&crate::rdag::DEdge], node: usize| {
                edges.iter().find(|e| e.from == node).unwrap().bits.clone()
            };
            bits(&pa, min_a) == bits(&pb, min_b)
                && bits(&pa, maj_a) == bits(&pb, maj_b)
                && deep_equal(dag, min_a, min_b)
                && deep_equal(dag, maj_a, maj_b)
        }
        _ => false,
    }
}

/// Maximal repeat groups at every level in one pass over the certificate,
/// ordered by (level, size descending, first root).
pub fn find_repeats_all(dag: &RDagProof, params: &RedundancyParams) -> Vec<MatrixOccurrences> {
    let Some(levels) = dag.levels() else {
        return Vec::new();
    };
    let info = subtree_info(dag, &levels);
    let mut buckets: HashMap<(usize, u64), Vec<usize>> = HashMap::new();
    for (v, &level) in levels.iter().enumerate() {
        if !info.inner_ok[v] || info.size[v] < params.min_size {
            continue;
        }
        // the root itself must be detachable: one ordinary consumer
        let consumers: Vec<_> = dag.consumers(v).collect();
        if consumers.len() != 1 || consumers[0].rho.is_some() {
            continue;
        }
        buckets.entry((level, info.canon[v])).or_default().push(v);
    }
    let mut groups = Vec::new();
    for ((level, canon), mut members) in buckets {
        if members.len() < params.min_count {
            continue;
        }
        members.sort_unstable();
        groups.push(MatrixOccurrences {
            fingerprint: Fingerprint(canon),
            canonical: members[0],
            size: info.size[members[0]],
            level,
            roots: members,
        });
    }
    groups.sort_by_key(|g| (g.level, std::cmp::Reverse(g.size), g.canonical));
    groups
}

/// Maximal groups of structurally identical collapsible sub-derivations
/// rooted at `level`, largest matrices first.
pub fn find_repeats(
    dag: &RDagProof,
    level: usize,
    params: &RedundancyParams,
) -> Vec<MatrixOccurrences> {
    find_repeats_all(dag, params)
        .into_iter()
        .filter(|g| g.level == level)
        .collect()
}

/// The list of lowest repeated instances: repeated-matrix groups selected
/// greedily from the level nearest the root upward, kept only when disjoint
/// from everything already selected. The result is an independent set: no
/// instance of one group is a sub-derivation of an instance of another.
pub fn lri(dag: &RDagProof, params: &RedundancyParams) -> Vec<MatrixOccurrences> {
    let mut selected: Vec<MatrixOccurrences> = Vec::new();
    let mut claimed = vec![false; dag.len()];
    for group in find_repeats_all(dag, params) {
        let regions: Vec<_> = group
            .roots
            .iter()
            .map(|&k| tree_region(dag, k).expect("repeat groups are collapsible"))
            .collect();
        let clean = regions
            .iter()
            .all(|r| r.nodes.iter().all(|&v| !claimed[v]));
        if clean {
            for r in &regions {
                for &v in &r.nodes {
                    claimed[v] = true;
                }
            }
            selected.push(group);
        }
    }
    selected
}

/// [`find_repeats`] on a tree derivation; node ids carry over unchanged.
pub fn find_repeats_in_derivation(
    d: &Derivation,
    level: usize,
    params: &RedundancyParams,
) -> Vec<MatrixOccurrences> {
    find_repeats(&from_derivation(d), level, params)
}

/// [`lri`] on a tree derivation; node ids carry over unchanged.
pub fn lri_in_derivation(d: &Derivation, params: &RedundancyParams) -> Vec<MatrixOccurrences> {
    lri(&from_derivation(d), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::formula::Formula;
    use crate::nd::{Derivation, ProofTree};
    use crate::oracle::fib_family;
    use std::collections::BTreeSet;

    fn f(text: &str) -> Formula {
        parse_formula(text).unwrap()
    }

    /// Independent comparison path: recurse over the derivation's own node
    /// structure, never touching fingerprints or certificate edges.
    fn subtree_equal_nd(d: &Derivation, a: usize, b: usize) -> bool {
        let na = d.node(a);
        let nb = d.node(b);
        na.formula == nb.formula
            && na.rule == nb.rule
            && d.dep(a) == d.dep(b)
            && na.children.len() == nb.children.len()
            && na
                .children
                .iter()
                .zip(&nb.children)
                .all(|(&ca, &cb)| subtree_equal_nd(d, ca, cb))
    }

    fn subtree_size(d: &Derivation, v: usize) -> usize {
        1 + d.node(v)
            .children
            .iter()
            .map(|&c| subtree_size(d, c))
            .sum::<usize>()
    }

    /// Brute-force grouping of all repeated subtrees at a level.
    fn oracle_groups(
        d: &Derivation,
        level: usize,
        params: &RedundancyParams,
    ) -> BTreeSet<Vec<usize>> {
        let levels = d.levels();
        let candidates: Vec<usize> = (0..d.len())
            .filter(|&v| levels[v] == level && subtree_size(d, v) >= params.min_size)
            .collect();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        'outer: for v in candidates {
            for class in &mut classes {
                if subtree_equal_nd(d, class[0], v) {
                    class.push(v);
                    continue 'outer;
                }
            }
            classes.push(vec![v]);
        }
        classes
            .into_iter()
            .filter(|c| c.len() >= params.min_count)
            .collect()
    }

    fn reported_groups(d: &Derivation, level: usize, params: &RedundancyParams) -> BTreeSet<Vec<usize>> {
        find_repeats_in_derivation(d, level, params)
            .into_iter()
            .map(|g| g.roots)
            .collect()
    }

    #[test]
    fn fib6_level2_matches_brute_force() {
        let fib = fib_family(6);
        let params = RedundancyParams::default();
        for level in 0..=fib.derivation.height() {
            assert_eq!(
                reported_groups(&fib.derivation, level, &params),
                oracle_groups(&fib.derivation, level, &params),
                "level {level}"
            );
        }
        // the two p4-subproof copies share level 2
        let groups = find_repeats_in_derivation(&fib.derivation, 2, &params);
        assert!(groups.iter().any(|g| g.size == 13 && g.roots.len() == 2));
    }

    #[test]
    fn single_node_has_no_repeats() {
        let d = Derivation::from_tree(&ProofTree::hyp(f("A"))).unwrap();
        for level in 0..3 {
            assert!(find_repeats_in_derivation(&d, level, &RedundancyParams::default()).is_empty());
        }
    }

    #[test]
    fn params_are_validated() {
        assert!(RedundancyParams { min_count: 1, min_size: 2 }.validate().is_err());
        assert!(RedundancyParams { min_count: 2, min_size: 1 }.validate().is_err());
        assert!(RedundancyParams::default().validate().is_ok());
    }

    /// 5-node matrix used by the planted fixtures.
    fn matrix() -> ProofTree {
        ProofTree::elim(
            ProofTree::hyp(f("A")),
            ProofTree::elim(ProofTree::hyp(f("A")), ProofTree::hyp(f("A -> (A -> B)"))),
        )
    }

    #[test]
    fn planted_twins_form_one_group() {
        let x1 = ProofTree::elim(matrix(), ProofTree::hyp(f("B -> C")));
        let x2 = ProofTree::elim(matrix(), ProofTree::hyp(f("B -> (C -> D)")));
        let d = Derivation::from_tree(&ProofTree::elim(x1, x2)).unwrap();
        let groups = find_repeats_in_derivation(&d, 2, &RedundancyParams::default());
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].roots.len(), 2);
        assert_eq!(groups[0].size, 5);
        assert_eq!(
            reported_groups(&d, 2, &RedundancyParams::default()),
            oracle_groups(&d, 2, &RedundancyParams::default())
        );
    }

    #[test]
    fn lri_prefers_the_repeated_super_derivation() {
        // S' = elim(matrix, hyp) repeated twice; S = matrix is repeated too,
        // but only inside instances of S'
        let super_proof = || ProofTree::elim(matrix(), ProofTree::hyp(f("B -> C")));
        let y1 = ProofTree::elim(super_proof(), ProofTree::hyp(f("C -> D")));
        let y2 = ProofTree::elim(super_proof(), ProofTree::hyp(f("C -> (D -> E)")));
        let d = Derivation::from_tree(&ProofTree::elim(y1, y2)).unwrap();
        let groups = lri_in_derivation(&d, &RedundancyParams::default());
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].size, 7); // S', not the 5-node S
        // and the matrix group alone does exist one level up
        let inner = find_repeats_in_derivation(&d, 3, &RedundancyParams::default());
        assert!(inner.iter().any(|g| g.size == 5));
    }

    #[test]
    fn lri_returns_nothing_without_repetition() {
        let d = crate::nd::tests::syllogism();
        assert!(lri_in_derivation(&d, &RedundancyParams::default()).is_empty());
    }

    #[test]
    fn lri_on_fib8_is_disjoint() {
        let fib = fib_family(8);
        let dag = from_derivation(&fib.derivation);
        let groups = lri(&dag, &RedundancyParams::default());
        assert!(!groups.is_empty());
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        for g in &groups {
            for &k in &g.roots {
                let region = tree_region(&dag, k).unwrap();
                for v in region.nodes {
                    assert!(seen.insert(v), "instances overlap at node {v}");
                }
            }
        }
        // independence: instances of one group never contain another's
        for g1 in &groups {
            for g2 in &groups {
                if g1.canonical == g2.canonical {
                    continue;
                }
                for &k1 in &g1.roots {
                    let r1 = dag.up(k1).unwrap();
                    for &k2 in &g2.roots {
                        assert!(!r1.nodes.contains(&k2) || r1.root == Some(k2));
                    }
                }
            }
        }
    }

    #[test]
    fn grouping_agrees_with_deep_equality_everywhere() {
        // interning soundness: same class if and only if deeply equal
        let fib = fib_family(7);
        let dag = from_derivation(&fib.derivation);
        let params = RedundancyParams::default();
        for g in find_repeats_all(&dag, &params) {
            for &v in &g.roots {
                assert!(deep_equal(&dag, g.roots[0], v));
            }
        }
        // distinct groups at one level are deeply unequal
        let all = find_repeats_all(&dag, &params);
        for g1 in &all {
            for g2 in &all {
                if g1.level == g2.level && g1.canonical != g2.canonical {
                    assert!(!deep_equal(&dag, g1.canonical, g2.canonical));
                }
            }
        }
    }
}
