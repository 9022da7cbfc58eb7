//! Term model: basic terms, variables, compounds, statements, linkages.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Whether a copula joins things into a statement or statements into a linkage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CopulaKind {
    Statement,
    Linkage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

/// A copula. Negative copulas carry the id of the positive copula they negate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Copula {
    pub id: String,
    /// Canonical token, also used by the printer.
    pub surface: String,
    pub kind: CopulaKind,
    pub polarity: Polarity,
    pub negation_of: Option<String>,
    /// Symmetric copulas relate both ways; element replacement treats both
    /// reading directions as strong.
    pub symmetric: bool,
}

impl Copula {
    fn new(surface: &str, kind: CopulaKind) -> Self {
        Copula {
            id: surface.to_string(),
            surface: surface.to_string(),
            kind,
            polarity: Polarity::Positive,
            negation_of: None,
            symmetric: false,
        }
    }

    /// `->`
    pub fn inheritance() -> Self {
        Copula::new("->", CopulaKind::Statement)
    }

    /// `-/->`, the negation of `->`.
    pub fn negated_inheritance() -> Self {
        Copula {
            polarity: Polarity::Negative,
            negation_of: Some("->".to_string()),
            ..Copula::new("-/->", CopulaKind::Statement)
        }
    }

    /// `<->` type/token identity.
    pub fn identity() -> Self {
        Copula { symmetric: true, ..Copula::new("<->", CopulaKind::Statement) }
    }

    /// `~>` similarity.
    pub fn similarity() -> Self {
        Copula { symmetric: true, ..Copula::new("~>", CopulaKind::Statement) }
    }

    /// `<~>` correspondence.
    pub fn correspondence() -> Self {
        Copula { symmetric: true, ..Copula::new("<~>", CopulaKind::Statement) }
    }

    /// `=>` implication.
    pub fn implication() -> Self {
        Copula::new("=>", CopulaKind::Linkage)
    }

    pub fn is_negative(&self) -> bool {
        self.polarity == Polarity::Negative
    }
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("copula `{0}` is already registered")]
    Duplicate(String),
    #[error("copula `{id}` declares unknown negation base `{base}`")]
    UnknownBase { id: String, base: String },
}

/// Open copula table. The built-ins are always present; extensions are data.
#[derive(Clone, Debug)]
pub struct CopulaRegistry {
    copulas: Vec<Copula>,
}

impl Default for CopulaRegistry {
    fn default() -> Self {
        CopulaRegistry {
            copulas: vec![
                Copula::inheritance(),
                Copula::negated_inheritance(),
                Copula::identity(),
                Copula::similarity(),
                Copula::correspondence(),
                Copula::implication(),
            ],
        }
    }
}

impl CopulaRegistry {
    pub fn register(&mut self, copula: Copula) -> Result<(), RegistryError> {
        if self.copulas.iter().any(|c| c.id == copula.id || c.surface == copula.surface) {
            return Err(RegistryError::Duplicate(copula.id));
        }
        if let Some(base) = &copula.negation_of {
            if !self.copulas.iter().any(|c| &c.id == base) {
                return Err(RegistryError::UnknownBase { id: copula.id, base: base.clone() });
            }
        }
        self.copulas.push(copula);
        Ok(())
    }

    pub fn by_surface(&self, surface: &str) -> Option<&Copula> {
        self.copulas.iter().find(|c| c.surface == surface)
    }

    pub fn by_id(&self, id: &str) -> Option<&Copula> {
        self.copulas.iter().find(|c| c.id == id)
    }

    /// Surfaces ordered longest-first, for greedy lexing.
    pub fn surfaces(&self) -> Vec<&str> {
        let mut s: Vec<&str> = self.copulas.iter().map(|c| c.surface.as_str()).collect();
        s.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = &Copula> {
        self.copulas.iter()
    }

    /// True when the two copulas assert opposite polarities of the same base.
    pub fn opposed(&self, a: &Copula, b: &Copula) -> bool {
        matches!(&a.negation_of, Some(base) if base == &b.id)
            || matches!(&b.negation_of, Some(base) if base == &a.id)
    }
}

/// Term class: C for things (basic and compound), S for statements, L for linkages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TermClass {
    C,
    S,
    L,
}

impl fmt::Display for TermClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermClass::C => write!(f, "C"),
            TermClass::S => write!(f, "S"),
            TermClass::L => write!(f, "L"),
        }
    }
}

/// Path from a term to one of its subterms: child indices, root is the empty path.
/// Compounds index the relation as 0 and elements from 1; statements and
/// linkages index left as 0 and right as 1.
pub type TermPath = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    /// Atomic symbol, optionally token-indexed (`human_1` is token 1 of `human`).
    Basic { symbol: String, token: Option<u32> },
    /// Unification variable, printed with a `$` sigil.
    Variable { name: String },
    /// Relation applied to one or more elements.
    Compound { relation: Box<Term>, elements: Vec<Term> },
    Statement { copula: Copula, left: Box<Term>, right: Box<Term> },
    Linkage { copula: Copula, left: Box<Term>, right: Box<Term> },
}

#[derive(Debug, Error)]
pub enum TermError {
    #[error("compound terms need at least one element")]
    EmptyCompound,
    #[error("`{0}` is a {1:?} copula, which cannot form a {2}")]
    WrongCopulaKind(String, CopulaKind, &'static str),
}

impl Term {
    pub fn basic(symbol: impl Into<String>) -> Term {
        Term::Basic { symbol: symbol.into(), token: None }
    }

    pub fn basic_token(symbol: impl Into<String>, token: u32) -> Term {
        Term::Basic { symbol: symbol.into(), token: Some(token) }
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::Variable { name: name.into() }
    }

    pub fn compound(relation: Term, elements: Vec<Term>) -> Result<Term, TermError> {
        if elements.is_empty() {
            return Err(TermError::EmptyCompound);
        }
        Ok(Term::Compound { relation: Box::new(relation), elements })
    }

    pub fn statement(copula: Copula, left: Term, right: Term) -> Result<Term, TermError> {
        if copula.kind != CopulaKind::Statement {
            return Err(TermError::WrongCopulaKind(copula.id, copula.kind, "statement"));
        }
        Ok(Term::Statement { copula, left: Box::new(left), right: Box::new(right) })
    }

    pub fn linkage(copula: Copula, left: Term, right: Term) -> Result<Term, TermError> {
        if copula.kind != CopulaKind::Linkage {
            return Err(TermError::WrongCopulaKind(copula.id, copula.kind, "linkage"));
        }
        Ok(Term::Linkage { copula, left: Box::new(left), right: Box::new(right) })
    }

    /// Total classification: basics, variables, and compounds are things.
    pub fn class(&self) -> TermClass {
        match self {
            Term::Basic { .. } | Term::Variable { .. } | Term::Compound { .. } => TermClass::C,
            Term::Statement { .. } => TermClass::S,
            Term::Linkage { .. } => TermClass::L,
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable { .. })
    }

    fn children(&self) -> Vec<&Term> {
        match self {
            Term::Basic { .. } | Term::Variable { .. } => vec![],
            Term::Compound { relation, elements } => {
                let mut v = vec![relation.as_ref()];
                v.extend(elements.iter());
                v
            }
            Term::Statement { left, right, .. } | Term::Linkage { left, right, .. } => {
                vec![left.as_ref(), right.as_ref()]
            }
        }
    }

    /// All subterms in preorder, paired with their paths. Includes the root.
    pub fn subterms(&self) -> Vec<(TermPath, &Term)> {
        let mut out = Vec::new();
        let mut stack = vec![(TermPath::new(), self)];
        while let Some((path, t)) = stack.pop() {
            out.push((path.clone(), t));
            let kids = t.children();
            for (i, k) in kids.into_iter().enumerate().rev() {
                let mut p = path.clone();
                p.push(i);
                stack.push((p, k));
            }
        }
        out
    }

    pub fn subterm_at(&self, path: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in path {
            cur = *cur.children().get(i)?;
        }
        Some(cur)
    }

    /// Replace the subterm at `path`; None when the path does not exist.
    pub fn replace_at(&self, path: &[usize], replacement: Term) -> Option<Term> {
        if path.is_empty() {
            return Some(replacement);
        }
        let (i, rest) = (path[0], &path[1..]);
        match self {
            Term::Basic { .. } | Term::Variable { .. } => None,
            Term::Compound { relation, elements } => {
                if i == 0 {
                    let rel = relation.replace_at(rest, replacement)?;
                    Some(Term::Compound { relation: Box::new(rel), elements: elements.clone() })
                } else {
                    let mut elems = elements.clone();
                    let slot = elems.get_mut(i - 1)?;
                    *slot = slot.replace_at(rest, replacement)?;
                    Some(Term::Compound { relation: relation.clone(), elements: elems })
                }
            }
            Term::Statement { copula, left, right } => match i {
                0 => Some(Term::Statement {
                    copula: copula.clone(),
                    left: Box::new(left.replace_at(rest, replacement)?),
                    right: right.clone(),
                }),
                1 => Some(Term::Statement {
                    copula: copula.clone(),
                    left: left.clone(),
                    right: Box::new(right.replace_at(rest, replacement)?),
                }),
                _ => None,
            },
            Term::Linkage { copula, left, right } => match i {
                0 => Some(Term::Linkage {
                    copula: copula.clone(),
                    left: Box::new(left.replace_at(rest, replacement)?),
                    right: right.clone(),
                }),
                1 => Some(Term::Linkage {
                    copula: copula.clone(),
                    left: left.clone(),
                    right: Box::new(right.replace_at(rest, replacement)?),
                }),
                _ => None,
            },
        }
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut vars = BTreeSet::new();
        for (_, t) in self.subterms() {
            if let Term::Variable { name } = t {
                vars.insert(name.clone());
            }
        }
        vars
    }

    pub fn is_ground(&self) -> bool {
        self.subterms().iter().all(|(_, t)| !t.is_variable())
    }

    /// Basic symbols occurring anywhere in the term, token suffix included.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut syms = BTreeSet::new();
        for (_, t) in self.subterms() {
            if let Term::Basic { .. } = t {
                syms.insert(t.to_string());
            }
        }
        syms
    }

    /// Structural size: number of nodes.
    pub fn size(&self) -> usize {
        self.subterms().len()
    }

    /// Nesting depth: a leaf has depth 0.
    pub fn depth(&self) -> usize {
        self.children().iter().map(|c| c.depth() + 1).max().unwrap_or(0)
    }
}

impl fmt::Display for Term {
    /// Canonical form: statements and linkages always parenthesized, one space
    /// around copulas, comma-space between compound components, `$` on
    /// variables, `_<n>` token suffix on basics.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Basic { symbol, token: None } => write!(f, "{symbol}"),
            Term::Basic { symbol, token: Some(n) } => write!(f, "{symbol}_{n}"),
            Term::Variable { name } => write!(f, "${name}"),
            Term::Compound { relation, elements } => {
                write!(f, "({relation}")?;
                for e in elements {
                    write!(f, ", {e}")?;
                }
                write!(f, ")")
            }
            Term::Statement { copula, left, right } | Term::Linkage { copula, left, right } => {
                write!(f, "({left} {} {right})", copula.surface)
            }
        }
    }
}
