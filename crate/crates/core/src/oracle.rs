//! Independent ground truth and test-data generation: a terminating
//! decision procedure for entailment in minimal implicational logic, a
//! bounded Kripke-model second oracle, an exhaustive small-formula
//! enumerator, and the Fibonacci family of huge derivations.
//!
//! Nothing here touches the checker or the compression pipeline; the code
//! paths are deliberately separate so they can referee each other.

use std::collections::BTreeSet;

use crate::formula::Formula;
use crate::nd::{close_derivation, Derivation, ProofTree};

/// Does `delta` entail `goal` in minimal implicational logic?
///
/// Contraction-free goal-directed sequent search: implications on the left
/// are consumed when used, which makes the search terminate without a loop
/// check. The implicational fragment of minimal logic coincides with the
/// intuitionistic one, so this doubles as an intuitionistic ⊃-prover.
pub fn decide<'a>(delta: impl IntoIterator<Item = &'a Formula>, goal: &Formula) -> bool {
    let gamma: BTreeSet<Formula> = delta.into_iter().cloned().collect();
    prove(gamma, goal.clone())
}

fn prove(mut gamma: BTreeSet<Formula>, mut goal: Formula) -> bool {
    // invertible right rule: Γ ⊢ A -> B  from  Γ, A ⊢ B
    while let Formula::Imp(l, r) = goal {
        gamma.insert(l.as_ref().clone());
        goal = r.as_ref().clone();
    }
    loop {
        if gamma.contains(&goal) {
            return true;
        }
        // invertible left rule on an atomic antecedent:
        // Γ, p, p -> B ⊢ G  from  Γ, p, B ⊢ G
        let reducible = gamma.iter().find_map(|f| match f {
            Formula::Imp(l, r) if l.is_atom() && gamma.contains(l.as_ref()) => {
                Some((f.clone(), r.as_ref().clone()))
            }
            _ => None,
        });
        match reducible {
            Some((principal, reduct)) => {
                gamma.remove(&principal);
                gamma.insert(reduct);
            }
            None => break,
        }
    }
    // non-invertible left rule on a nested implication:
    // Γ, (C -> D) -> B ⊢ G  from  Γ, D -> B ⊢ C -> D  and  Γ, B ⊢ G
    let nested: Vec<Formula> = gamma
        .iter()
        .filter(|f| matches!(f, Formula::Imp(l, _) if !l.is_atom()))
        .cloned()
        .collect();
    for principal in nested {
        let Formula::Imp(l, b) = &principal else {
            unreachable!()
        };
        let Formula::Imp(_, d) = l.as_ref() else {
            unreachable!()
        };
        let mut left = gamma.clone();
        left.remove(&principal);
        left.insert(Formula::imp(d.as_ref().clone(), b.as_ref().clone()));
        if prove(left, l.as_ref().clone()) {
            let mut right = gamma.clone();
            right.remove(&principal);
            right.insert(b.as_ref().clone());
            if prove(right, goal.clone()) {
                return true;
            }
        }
    }
    false
}

/// Brute-force Kripke oracle: quantifies over every reflexive-transitive
/// frame with at most `max_worlds` worlds and every monotone valuation of
/// the atoms occurring in the inputs.
pub fn kripke_entails<'a>(
    delta: impl IntoIterator<Item = &'a Formula>,
    goal: &Formula,
    max_worlds: usize,
) -> bool {
    let delta: Vec<&Formula> = delta.into_iter().collect();
    let mut atoms: BTreeSet<&str> = BTreeSet::new();
    for f in delta.iter().copied().chain([goal]) {
        collect_atoms(f, &mut atoms);
    }
    let atoms: Vec<&str> = atoms.into_iter().collect();

    for n in 1..=max_worlds {
        for frame in frames(n) {
            for valuation in valuations(&frame, n, atoms.len()) {
                for w in 0..n {
                    let model = Model {
                        n,
                        frame: &frame,
                        valuation: &valuation,
                        atoms: &atoms,
                    };
                    if delta.iter().all(|d| model.forces(w, d)) && !model.forces(w, goal) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

fn collect_atoms<'a>(f: &'a Formula, out: &mut BTreeSet<&'a str>) {
    match f {
        Formula::Atom(name) => {
            out.insert(name);
        }
        Formula::Imp(l, r) => {
            collect_atoms(l, out);
            collect_atoms(r, out);
        }
    }
}

/// All reflexive-transitive accessibility relations on `n` worlds, as
/// row-major boolean matrices.
fn frames(n: usize) -> Vec<Vec<bool>> {
    let off_diagonal: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .collect();
    let mut out = Vec::new();
    for mask in 0u32..1 << off_diagonal.len() {
        let mut rel = vec![false; n * n];
        for i in 0..n {
            rel[i * n + i] = true;
        }
        for (k, &(i, j)) in off_diagonal.iter().enumerate() {
            if mask >> k & 1 == 1 {
                rel[i * n + j] = true;
            }
        }
        let transitive = (0..n).all(|i| {
            (0..n).all(|j| {
                (0..n).all(|k| !(rel[i * n + j] && rel[j * n + k]) || rel[i * n + k])
            })
        });
        if transitive {
            out.push(rel);
        }
    }
    out
}

/// All monotone valuations: `valuation[a * n + w]` says atom `a` holds at
/// world `w`, and truth persists along the accessibility relation.
fn valuations(frame: &[bool], n: usize, num_atoms: usize) -> Vec<Vec<bool>> {
    let mut out = Vec::new();
    let cells = n * num_atoms;
    'mask: for mask in 0u32..1 << cells {
        let val: Vec<bool> = (0..cells).map(|c| mask >> c & 1 == 1).collect();
        for a in 0..num_atoms {
            for w in 0..n {
                for w2 in 0..n {
                    if frame[w * n + w2] && val[a * n + w] && !val[a * n + w2] {
                        continue 'mask;
                    }
                }
            }
        }
        out.push(val);
    }
    out
}

struct Model<'a> {
    n: usize,
    frame: &'a [bool],
    valuation: &'a [bool],
    atoms: &'a [&'a str],
}

impl Model<'_> {
    fn forces(&self, w: usize, f: &Formula) -> bool {
        match f {
            Formula::Atom(name) => {
                let a = self
                    .atoms
                    .iter()
                    .position(|x| *x == name.as_ref())
                    .expect("atom was collected");
                self.valuation[a * self.n + w]
            }
            Formula::Imp(l, r) => (0..self.n).all(|w2| {
                !self.frame[w * self.n + w2] || !self.forces(w2, l) || self.forces(w2, r)
            }),
        }
    }
}

/// Every formula over `num_atoms` atoms with syntax-tree size at most
/// `max_size`, each exactly once, smallest sizes first; deterministic.
pub fn enumerate_formulas(num_atoms: usize, max_size: usize) -> Vec<Formula> {
    assert!((1..=26).contains(&num_atoms));
    let atoms: Vec<Formula> = (0..num_atoms)
        .map(|i| Formula::atom(&((b'A' + i as u8) as char).to_string()))
        .collect();
    let mut by_size: Vec<Vec<Formula>> = vec![Vec::new(); max_size + 1];
    for size in 1..=max_size {
        if size == 1 {
            by_size[1] = atoms.clone();
            continue;
        }
        let mut bucket = Vec::new();
        for left_size in 1..size - 1 {
            let right_size = size - 1 - left_size;
            for l in &by_size[left_size] {
                for r in &by_size[right_size] {
                    bucket.push(Formula::imp(l.clone(), r.clone()));
                }
            }
        }
        by_size[size] = bucket;
    }
    by_size.into_iter().flatten().collect()
}

/// One member of the Fibonacci family: a huge normal expanded derivation of
/// `p_n` from `delta`, with node count following
/// `N(1) = 1, N(2) = 3, N(i+2) = N(i) + N(i+1) + 3`.
pub struct FibInstance {
    pub n: usize,
    pub atoms: Vec<Formula>,
    pub delta: Vec<Formula>,
    pub derivation: Derivation,
}

impl FibInstance {
    /// The closed variant: all of `delta` discharged in listing order.
    pub fn closed(&self) -> Derivation {
        let tree = fib_tree(self.n, &self.atoms, &self.delta);
        Derivation::from_tree(&close_derivation(tree, &self.delta))
            .expect("closure of a valid derivation is valid")
    }
}

/// Build the Fibonacci-sized derivation of `p_n`.
pub fn fib_family(n: usize) -> FibInstance {
    assert!(n >= 2, "fib_family needs n >= 2");
    let atoms: Vec<Formula> = (1..=n).map(|i| Formula::atom(&format!("p{i}"))).collect();
    let mut delta = vec![atoms[0].clone(), Formula::imp(atoms[0].clone(), atoms[1].clone())];
    for i in 0..n.saturating_sub(2) {
        delta.push(Formula::imp(
            atoms[i].clone(),
            Formula::imp(atoms[i + 1].clone(), atoms[i + 2].clone()),
        ));
    }
    let derivation =
        Derivation::from_tree(&fib_tree(n, &atoms, &delta)).expect("fib derivation is valid");
    FibInstance {
        n,
        atoms,
        delta,
        derivation,
    }
}

fn fib_tree(n: usize, atoms: &[Formula], delta: &[Formula]) -> ProofTree {
    let mut trees: Vec<ProofTree> = Vec::with_capacity(n);
    trees.push(ProofTree::hyp(atoms[0].clone()));
    if n >= 2 {
        trees.push(ProofTree::elim(
            ProofTree::hyp(atoms[0].clone()),
            ProofTree::hyp(delta[1].clone()),
        ));
    }
    for i in 0..n.saturating_sub(2) {
        // p_{i+2} from p_{i+1} and (p_{i+1} -> p_{i+2}), the latter from p_i
        // and delta's step formula
        let inner = ProofTree::elim(trees[i].clone(), ProofTree::hyp(delta[i + 2].clone()));
        trees.push(ProofTree::elim(trees[i + 1].clone(), inner));
    }
    trees.pop().unwrap()
}
