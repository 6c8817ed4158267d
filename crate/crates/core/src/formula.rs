//! Formulas of minimal implicational logic: parsing and printing, syntax
//! trees, canonical subformula orders, and dependency-set bitstrings.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// An implicational formula: an atom, or `left -> right`.
///
/// Clones are cheap (shared subterms).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(Arc<str>),
    Imp(Arc<Formula>, Arc<Formula>),
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.into())
    }

    pub fn imp(left: Formula, right: Formula) -> Formula {
        Formula::Imp(Arc::new(left), Arc::new(right))
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Formula::Atom(_))
    }

    /// Number of syntax-tree nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::Imp(l, r) => 1 + l.size() + r.size(),
        }
    }

    /// For `l -> r` returns `(l, r)`.
    pub fn parts(&self) -> Option<(&Formula, &Formula)> {
        match self {
            Formula::Atom(_) => None,
            Formula::Imp(l, r) => Some((l, r)),
        }
    }

    /// Antecedents along the right spine, and the spine's final formula.
    ///
    /// `a -> (b -> q)` yields `([a, b], q)`; an atom yields `([], atom)`.
    pub fn spine(&self) -> (Vec<&Formula>, &Formula) {
        let mut antecedents = Vec::new();
        let mut cur = self;
        while let Formula::Imp(l, r) = cur {
            antecedents.push(l.as_ref());
            cur = r.as_ref();
        }
        (antecedents, cur)
    }

    /// All subformulas, including the formula itself.
    pub fn subformulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        self.collect_subformulas(&mut out);
        out
    }

    fn collect_subformulas(&self, out: &mut BTreeSet<Formula>) {
        if out.insert(self.clone()) {
            if let Formula::Imp(l, r) = self {
                l.collect_subformulas(out);
                r.collect_subformulas(out);
            }
        }
    }
}

impl fmt::Display for Formula {
    /// Minimal parentheses, right-associative `->`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(name) => write!(f, "{name}"),
            Formula::Imp(l, r) => {
                if l.is_atom() {
                    write!(f, "{l} -> {r}")
                } else {
                    write!(f, "({l}) -> {r}")
                }
            }
        }
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Union of all subformulas of `formulas`.
pub fn sub_closure<'a>(formulas: impl IntoIterator<Item = &'a Formula>) -> BTreeSet<Formula> {
    let mut out = BTreeSet::new();
    for phi in formulas {
        phi.collect_subformulas(&mut out);
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at token {token} (byte {byte}): {msg}")]
    Parse { token: usize, byte: usize, msg: String },
    #[error("empty formula universe")]
    EmptyUniverse,
    #[error("formula not in order: {0}")]
    UnknownFormula(String),
    #[error("duplicate formula in order: {0}")]
    DuplicateFormula(String),
    #[error("bitstring length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("bitstring is not a 0/1 string")]
    BadBitstring,
    #[error("vertex {0} not in syntax tree")]
    UnknownVertex(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Atom(String),
    Arrow,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, FormulaError> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
        } else if c == '(' {
            tokens.push((Token::LParen, i));
            i += 1;
        } else if c == ')' {
            tokens.push((Token::RParen, i));
            i += 1;
        } else if rest.starts_with("->") {
            tokens.push((Token::Arrow, i));
            i += 2;
        } else if rest.starts_with('⊃') {
            tokens.push((Token::Arrow, i));
            i += '⊃'.len_utf8();
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < text.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push((Token::Atom(text[start..i].to_string()), start));
        } else {
            return Err(FormulaError::Parse {
                token: tokens.len(),
                byte: i,
                msg: format!("unexpected character {c:?}"),
            });
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn error(&self, msg: &str) -> FormulaError {
        let byte = self
            .tokens
            .get(self.pos)
            .map(|(_, b)| *b)
            .unwrap_or(self.end);
        FormulaError::Parse {
            token: self.pos,
            byte,
            msg: msg.to_string(),
        }
    }

    // formula := primary ("->" formula)?   (right-associative)
    fn formula(&mut self) -> Result<Formula, FormulaError> {
        let left = self.primary()?;
        if matches!(self.peek(), Some(Token::Arrow)) {
            self.pos += 1;
            let right = self.formula()?;
            Ok(Formula::imp(left, right))
        } else {
            Ok(left)
        }
    }

    fn primary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek() {
            Some(Token::Atom(name)) => {
                let f = Formula::atom(name);
                self.pos += 1;
                Ok(f)
            }
            Some(Token::LParen) => {
                self.pos += 1;
                let inner = self.formula()?;
                if matches!(self.peek(), Some(Token::RParen)) {
                    self.pos += 1;
                    Ok(inner)
                } else {
                    Err(self.error("expected ')'"))
                }
            }
            Some(Token::Arrow) => Err(self.error("expected formula, found '->'")),
            Some(Token::RParen) => Err(self.error("expected formula, found ')'")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

/// Parse `->`/`⊃` notation; both arrows are synonyms, implication is
/// right-associative, atoms match `[A-Za-z_][A-Za-z0-9_]*`.
pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let formula = parser.formula()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.error("trailing input"));
    }
    Ok(formula)
}

/// A fixed-length set of formulas drawn from a [`SubformulaOrder`], encoded
/// as 0/1 positions.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring {
    len: usize,
    words: Vec<u64>,
}

impl Bitstring {
    pub fn zeros(len: usize) -> Bitstring {
        Bitstring {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|i| self.get(*i))
    }

    /// Bitwise OR; both operands must have the same length.
    pub fn union(&self, other: &Bitstring) -> Result<Bitstring, FormulaError> {
        if self.len != other.len {
            return Err(FormulaError::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a | b)
            .collect();
        Ok(Bitstring {
            len: self.len,
            words,
        })
    }

    pub fn parse(text: &str) -> Result<Bitstring, FormulaError> {
        let mut bits = Bitstring::zeros(text.len());
        for (i, c) in text.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits.set(i, true),
                _ => return Err(FormulaError::BadBitstring),
            }
        }
        Ok(bits)
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// A total order on a finite set of formulas, the index base for
/// [`Bitstring`] encodings.
///
/// [`SubformulaOrder::canonical`] sorts by (size, printed form), which makes
/// every serialized artifact deterministic; [`SubformulaOrder::from_list`]
/// accepts an explicit order, e.g. one read back from a file.
#[derive(Clone, PartialEq, Eq)]
pub struct SubformulaOrder {
    formulas: Vec<Formula>,
    index: HashMap<Formula, usize>,
}

impl SubformulaOrder {
    /// The canonical order on `universe`: size ascending, then printed form.
    pub fn canonical(
        universe: impl IntoIterator<Item = Formula>,
    ) -> Result<SubformulaOrder, FormulaError> {
        let set: BTreeSet<Formula> = universe.into_iter().collect();
        if set.is_empty() {
            return Err(FormulaError::EmptyUniverse);
        }
        let mut formulas: Vec<Formula> = set.into_iter().collect();
        formulas.sort_by_cached_key(|f| (f.size(), f.to_string()));
        Ok(SubformulaOrder::build(formulas))
    }

    /// An explicit order; rejects duplicates and emptiness.
    pub fn from_list(formulas: Vec<Formula>) -> Result<SubformulaOrder, FormulaError> {
        if formulas.is_empty() {
            return Err(FormulaError::EmptyUniverse);
        }
        let mut seen = BTreeSet::new();
        for f in &formulas {
            if !seen.insert(f.clone()) {
                return Err(FormulaError::DuplicateFormula(f.to_string()));
            }
        }
        Ok(SubformulaOrder::build(formulas))
    }

    fn build(formulas: Vec<Formula>) -> SubformulaOrder {
        let index = formulas
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
        SubformulaOrder { formulas, index }
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    pub fn get(&self, i: usize) -> Option<&Formula> {
        self.formulas.get(i)
    }

    pub fn index_of(&self, formula: &Formula) -> Option<usize> {
        self.index.get(formula).copied()
    }

    pub fn contains(&self, formula: &Formula) -> bool {
        self.index.contains_key(formula)
    }

    pub fn encode<'a>(
        &self,
        set: impl IntoIterator<Item = &'a Formula>,
    ) -> Result<Bitstring, FormulaError> {
        let mut bits = Bitstring::zeros(self.len());
        for f in set {
            let i = self
                .index_of(f)
                .ok_or_else(|| FormulaError::UnknownFormula(f.to_string()))?;
            bits.set(i, true);
        }
        Ok(bits)
    }

    pub fn decode(&self, bits: &Bitstring) -> Result<BTreeSet<Formula>, FormulaError> {
        if bits.len() != self.len() {
            return Err(FormulaError::LengthMismatch {
                left: bits.len(),
                right: self.len(),
            });
        }
        Ok(bits.iter_ones().map(|i| self.formulas[i].clone()).collect())
    }

    /// Singleton encoding of `formula`.
    pub fn singleton(&self, formula: &Formula) -> Result<Bitstring, FormulaError> {
        self.encode([formula])
    }

    /// Clears `formula`'s bit; clearing an already-absent bit is a no-op
    /// (vacuous discharge), but the formula itself must be in the order.
    pub fn remove(&self, bits: &Bitstring, formula: &Formula) -> Result<Bitstring, FormulaError> {
        if bits.len() != self.len() {
            return Err(FormulaError::LengthMismatch {
                left: bits.len(),
                right: self.len(),
            });
        }
        let i = self
            .index_of(formula)
            .ok_or_else(|| FormulaError::UnknownFormula(formula.to_string()))?;
        let mut out = bits.clone();
        out.set(i, false);
        Ok(out)
    }
}

impl fmt::Debug for SubformulaOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.formulas.iter()).finish()
    }
}

pub type VertexId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChildSide {
    Left,
    Right,
}

/// The ordered full binary parse tree of a formula. Vertex 0 is the root;
/// distinct vertices may carry equal labels when a subformula repeats.
#[derive(Clone)]
pub struct SyntaxTree {
    labels: Vec<Formula>,
    children: Vec<Option<(VertexId, VertexId)>>,
    parent: Vec<Option<(VertexId, ChildSide)>>,
}

impl SyntaxTree {
    pub fn new(formula: &Formula) -> SyntaxTree {
        let mut tree = SyntaxTree {
            labels: Vec::new(),
            children: Vec::new(),
            parent: Vec::new(),
        };
        tree.add(formula);
        tree
    }

    fn add(&mut self, formula: &Formula) -> VertexId {
        let v = self.labels.len();
        self.labels.push(formula.clone());
        self.children.push(None);
        self.parent.push(None);
        if let Formula::Imp(l, r) = formula {
            let left = self.add(l);
            let right = self.add(r);
            self.children[v] = Some((left, right));
            self.parent[left] = Some((v, ChildSide::Left));
            self.parent[right] = Some((v, ChildSide::Right));
        }
        v
    }

    pub fn root(&self) -> VertexId {
        0
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        0..self.labels.len()
    }

    pub fn label(&self, v: VertexId) -> &Formula {
        &self.labels[v]
    }

    pub fn children(&self, v: VertexId) -> Option<(VertexId, VertexId)> {
        self.children.get(v).copied().flatten()
    }

    pub fn parent(&self, v: VertexId) -> Option<(VertexId, ChildSide)> {
        self.parent.get(v).copied().flatten()
    }

    pub fn is_left_child(&self, v: VertexId) -> bool {
        matches!(self.parent(v), Some((_, ChildSide::Left)))
    }

    /// All `u` from which `v` is reached by a nonempty chain of right-child
    /// edges, nearest first.
    pub fn right_ancestral(&self, v: VertexId) -> Result<Vec<VertexId>, FormulaError> {
        if v >= self.labels.len() {
            return Err(FormulaError::UnknownVertex(v));
        }
        let mut out = Vec::new();
        let mut cur = v;
        while let Some((p, ChildSide::Right)) = self.parent(cur) {
            out.push(p);
            cur = p;
        }
        Ok(out)
    }
}
