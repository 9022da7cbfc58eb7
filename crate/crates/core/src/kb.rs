//! Knowledge base: id-keyed judgments with class and symbol indexes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::syntax::{self, SourceJudgment, SyntaxError};
use crate::term::{CopulaRegistry, Term, TermClass};
use crate::unify::{hard_unify, Substitution};

pub type JudgmentId = u64;
pub type StepId = u64;

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Given { label: Option<String> },
    Derived { step: StepId },
}

impl Provenance {
    pub fn given() -> Self {
        Provenance::Given { label: None }
    }

    pub fn labeled(label: impl Into<String>) -> Self {
        Provenance::Given { label: Some(label.into()) }
    }
}

/// A term the engine holds, with how strongly and where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Judgment {
    pub id: JudgmentId,
    pub term: Term,
    pub confidence: f64,
    pub provenance: Provenance,
}

impl Judgment {
    pub fn class(&self) -> TermClass {
        self.term.class()
    }

    pub fn label(&self) -> Option<&str> {
        match &self.provenance {
            Provenance::Given { label } => label.as_deref(),
            Provenance::Derived { .. } => None,
        }
    }
}

/// What an assertion did to the store.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssertEffect {
    /// Fresh term, new id.
    Inserted,
    /// Term already present; its confidence rose to the new value.
    Raised,
    /// Term already present at equal or higher confidence; nothing changed.
    Unchanged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssertResult {
    pub id: JudgmentId,
    pub effect: AssertEffect,
}

/// Which rule a candidate pair feeds. There is no C-with-C combination: an
/// operation over two plain things cannot be generalized into a rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    Ss,
    Sc,
    Sl,
    Cl,
    Ll,
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PairKind::Ss => "SS",
            PairKind::Sc => "SC",
            PairKind::Sl => "SL",
            PairKind::Cl => "CL",
            PairKind::Ll => "LL",
        };
        write!(f, "{s}")
    }
}

pub fn pair_kind(a: TermClass, b: TermClass) -> Option<PairKind> {
    use TermClass::*;
    match (a, b) {
        (S, S) => Some(PairKind::Ss),
        (S, C) | (C, S) => Some(PairKind::Sc),
        (S, L) | (L, S) => Some(PairKind::Sl),
        (C, L) | (L, C) => Some(PairKind::Cl),
        (L, L) => Some(PairKind::Ll),
        (C, C) => None,
    }
}

#[derive(Clone, Debug, Default)]
pub struct KnowledgeBase {
    judgments: BTreeMap<JudgmentId, Judgment>,
    by_term: HashMap<Term, JudgmentId>,
    class_index: BTreeMap<TermClass, BTreeSet<JudgmentId>>,
    symbol_index: BTreeMap<String, BTreeSet<JudgmentId>>,
    next_id: JudgmentId,
}

impl KnowledgeBase {
    pub fn new() -> Self {
        KnowledgeBase::default()
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }

    /// Insert a judgment, deduplicating by term: re-asserting an equal term
    /// keeps the maximum confidence and the original id and provenance.
    pub fn assert_judgment(
        &mut self,
        term: Term,
        confidence: f64,
        provenance: Provenance,
    ) -> AssertResult {
        debug_assert!((0.0..=1.0).contains(&confidence), "confidence {confidence} out of range");
        if let Some(&id) = self.by_term.get(&term) {
            let existing = self.judgments.get_mut(&id).expect("term index points at a judgment");
            if confidence > existing.confidence {
                existing.confidence = confidence;
                return AssertResult { id, effect: AssertEffect::Raised };
            }
            return AssertResult { id, effect: AssertEffect::Unchanged };
        }
        self.next_id += 1;
        let id = self.next_id;
        self.class_index.entry(term.class()).or_default().insert(id);
        for sym in term.symbols() {
            self.symbol_index.entry(sym).or_default().insert(id);
        }
        self.by_term.insert(term.clone(), id);
        self.judgments.insert(id, Judgment { id, term, confidence, provenance });
        AssertResult { id, effect: AssertEffect::Inserted }
    }

    pub fn get(&self, id: JudgmentId) -> Option<&Judgment> {
        self.judgments.get(&id)
    }

    /// The judgment holding exactly this term, if any.
    pub fn find(&self, term: &Term) -> Option<&Judgment> {
        self.by_term.get(term).and_then(|id| self.judgments.get(id))
    }

    /// All judgments in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &Judgment> {
        self.judgments.values()
    }

    pub fn by_class(&self, class: TermClass) -> Vec<JudgmentId> {
        self.class_index.get(&class).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    /// Judgments mentioning a basic symbol at any nesting depth.
    pub fn by_symbol(&self, symbol: &str) -> Vec<JudgmentId> {
        self.symbol_index.get(symbol).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    /// Judgments whose term hard-unifies with the pattern, with the pattern's
    /// bindings, in ascending id order.
    pub fn query(&self, pattern: &Term) -> Vec<(JudgmentId, Substitution)> {
        self.judgments
            .values()
            .filter_map(|j| hard_unify(pattern, &j.term).ok().map(|s| (j.id, s)))
            .collect()
    }

    /// Unordered distinct pairs (i < j) whose class combination feeds a rule,
    /// ascending. With a focus set, at least one member of the pair must
    /// mention a focus symbol.
    pub fn candidate_pairs(
        &self,
        focus: Option<&BTreeSet<String>>,
    ) -> Vec<(JudgmentId, JudgmentId, PairKind)> {
        let ids: Vec<JudgmentId> = self.judgments.keys().copied().collect();
        let in_focus: Vec<bool> = ids
            .iter()
            .map(|id| match focus {
                None => true,
                Some(f) => {
                    let syms = self.judgments[id].term.symbols();
                    f.iter().any(|s| syms.contains(s))
                }
            })
            .collect();
        let mut out = Vec::new();
        for (ai, &a) in ids.iter().enumerate() {
            for (bi, &b) in ids.iter().enumerate().skip(ai + 1) {
                if !(in_focus[ai] || in_focus[bi]) {
                    continue;
                }
                if let Some(kind) =
                    pair_kind(self.judgments[&a].class(), self.judgments[&b].class())
                {
                    out.push((a, b, kind));
                }
            }
        }
        out
    }

    /// Statement pairs asserting opposite polarities over the same terms.
    pub fn contradictions(&self, registry: &CopulaRegistry) -> Vec<(JudgmentId, JudgmentId)> {
        let statements: Vec<&Judgment> =
            self.by_class(TermClass::S).iter().filter_map(|id| self.get(*id)).collect();
        let mut out = Vec::new();
        for (i, a) in statements.iter().enumerate() {
            for b in statements.iter().skip(i + 1) {
                let (Term::Statement { copula: ca, left: la, right: ra },
                     Term::Statement { copula: cb, left: lb, right: rb }) = (&a.term, &b.term)
                else {
                    continue;
                };
                if la == lb && ra == rb && registry.opposed(ca, cb) {
                    out.push((a.id, b.id));
                }
            }
        }
        out
    }

    pub fn assert_source(&mut self, source: &SourceJudgment) -> AssertResult {
        self.assert_judgment(
            source.term.clone(),
            source.confidence,
            Provenance::Given { label: source.label.clone() },
        )
    }

    /// Parse a KB file and assert all judgments as givens.
    pub fn load_str(text: &str, registry: &CopulaRegistry) -> Result<KnowledgeBase, SyntaxError> {
        let mut kb = KnowledgeBase::new();
        for source in syntax::parse_kb(text, registry)? {
            kb.assert_source(&source);
        }
        Ok(kb)
    }

    /// Render the store back to KB-file syntax. Derived judgments downgrade to
    /// givens labeled `derived_<step>` (`:` cannot appear inside a label).
    pub fn save(&self) -> String {
        let mut out = String::new();
        for j in self.iter() {
            let derived_label;
            let label = match &j.provenance {
                Provenance::Given { label } => label.as_deref(),
                Provenance::Derived { step } => {
                    derived_label = format!("derived_{step}");
                    Some(derived_label.as_str())
                }
            };
            out.push_str(&syntax::print_judgment(label, &j.term, j.confidence));
            out.push('\n');
        }
        out
    }
}
