//! Hard and soft unification. Hard unification is exact; soft unification may
//! merge mismatched basic leaves whose vectors are close enough.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::embed::EmbeddingProvider;
use crate::term::{Term, TermPath};

fn fmt_path(path: &TermPath) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        format!("[{}]", path.iter().map(usize::to_string).collect::<Vec<_>>().join("."))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum UnifyError {
    #[error("{}: cannot match {left} against {right}", fmt_path(path))]
    KindMismatch { path: TermPath, left: String, right: String },
    #[error("{}: symbols `{left}` and `{right}` differ", fmt_path(path))]
    SymbolMismatch { path: TermPath, left: String, right: String },
    #[error("{}: copulas `{left}` and `{right}` differ", fmt_path(path))]
    CopulaMismatch { path: TermPath, left: String, right: String },
    #[error("{}: arity {left} does not match arity {right}", fmt_path(path))]
    ArityMismatch { path: TermPath, left: usize, right: usize },
    #[error("{}: binding ${variable} := {term} would contain itself", fmt_path(path))]
    Occurs { path: TermPath, variable: String, term: String },
    #[error(
        "{}: `{left}` ~ `{right}` similarity {similarity:.4} is below theta {theta}",
        fmt_path(path)
    )]
    BelowThreshold { path: TermPath, left: String, right: String, similarity: f64, theta: f64 },
}

/// Variable bindings, kept fully resolved: no value mentions a bound variable,
/// so applying twice equals applying once.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Substitution {
    map: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, name: &str) -> Option<&Term> {
        self.map.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.map.iter()
    }

    /// Bind a variable, resolving the value through existing bindings and
    /// occurs-checking it. Binding a variable to itself is a no-op.
    pub fn bind(&mut self, name: &str, term: &Term) -> Result<(), UnifyError> {
        let resolved = self.apply(term);
        if matches!(&resolved, Term::Variable { name: n } if n == name) {
            return Ok(());
        }
        if resolved.free_variables().contains(name) {
            return Err(UnifyError::Occurs {
                path: vec![],
                variable: name.to_string(),
                term: resolved.to_string(),
            });
        }
        // Keep existing values resolved with respect to the new binding.
        let mut single = Substitution::new();
        single.map.insert(name.to_string(), resolved.clone());
        for value in self.map.values_mut() {
            *value = single.apply(value);
        }
        self.map.insert(name.to_string(), resolved);
        Ok(())
    }

    /// Replace every bound variable in `term` by its value.
    pub fn apply(&self, term: &Term) -> Term {
        match term {
            Term::Variable { name } => match self.map.get(name) {
                Some(t) => t.clone(),
                None => term.clone(),
            },
            Term::Basic { .. } => term.clone(),
            Term::Compound { relation, elements } => Term::Compound {
                relation: Box::new(self.apply(relation)),
                elements: elements.iter().map(|e| self.apply(e)).collect(),
            },
            Term::Statement { copula, left, right } => Term::Statement {
                copula: copula.clone(),
                left: Box::new(self.apply(left)),
                right: Box::new(self.apply(right)),
            },
            Term::Linkage { copula, left, right } => Term::Linkage {
                copula: copula.clone(),
                left: Box::new(self.apply(left)),
                right: Box::new(self.apply(right)),
            },
        }
    }

    /// Bindings as printed terms, for traces.
    pub fn rendered(&self) -> BTreeMap<String, String> {
        self.map.iter().map(|(k, v)| (k.clone(), v.to_string())).collect()
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "${k} := {v}")?;
        }
        write!(f, "}}")
    }
}

/// Convenience wrapper over [`Substitution::apply`].
pub fn substitute(term: &Term, subst: &Substitution) -> Term {
    subst.apply(term)
}

/// A basic-leaf merge performed by soft unification. The engine records it as
/// the identity statement `(left <-> right)` with the similarity as confidence.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftMerge {
    pub left: Term,
    pub right: Term,
    pub similarity: f64,
}

/// Successful unification: bindings, overall similarity (minimum over merges,
/// 1.0 when none), and the merges themselves.
#[derive(Clone, Debug, PartialEq)]
pub struct UnifyOutcome {
    pub substitution: Substitution,
    pub similarity: f64,
    pub merges: Vec<SoftMerge>,
}

impl Default for UnifyOutcome {
    /// The outcome of matching nothing: no bindings, no merges.
    fn default() -> Self {
        UnifyOutcome { substitution: Substitution::new(), similarity: 1.0, merges: vec![] }
    }
}

enum Leafs<'a> {
    Hard,
    Soft { provider: &'a dyn EmbeddingProvider, theta: f64, token_insensitive: bool },
}

struct Walker<'a> {
    leafs: Leafs<'a>,
    subst: Substitution,
    merges: Vec<SoftMerge>,
}

impl<'a> Walker<'a> {
    fn walk<'t>(&self, t: &'t Term) -> Term {
        // Values are fully resolved, so one lookup suffices.
        if let Term::Variable { name } = t {
            if let Some(bound) = self.subst.get(name) {
                return bound.clone();
            }
        }
        t.clone()
    }

    fn basics(&mut self, a: &Term, b: &Term, path: &TermPath) -> Result<(), UnifyError> {
        let (Term::Basic { symbol: sa, token: ta }, Term::Basic { symbol: sb, token: tb }) = (a, b)
        else {
            unreachable!("basics called on non-basic terms")
        };
        if sa == sb && ta == tb {
            return Ok(());
        }
        match &self.leafs {
            Leafs::Hard => Err(UnifyError::SymbolMismatch {
                path: path.clone(),
                left: a.to_string(),
                right: b.to_string(),
            }),
            Leafs::Soft { provider, theta, token_insensitive } => {
                if sa == sb {
                    // Same symbol, different token index: distinct individuals
                    // unless the caller opted into token-insensitive matching.
                    if !token_insensitive {
                        return Err(UnifyError::SymbolMismatch {
                            path: path.clone(),
                            left: a.to_string(),
                            right: b.to_string(),
                        });
                    }
                    self.record_merge(a, b, 1.0);
                    return Ok(());
                }
                let similarity = provider.similarity(a, b);
                if similarity >= *theta {
                    self.record_merge(a, b, similarity);
                    Ok(())
                } else {
                    Err(UnifyError::BelowThreshold {
                        path: path.clone(),
                        left: a.to_string(),
                        right: b.to_string(),
                        similarity,
                        theta: *theta,
                    })
                }
            }
        }
    }

    fn record_merge(&mut self, left: &Term, right: &Term, similarity: f64) {
        if !self.merges.iter().any(|m| &m.left == left && &m.right == right) {
            self.merges.push(SoftMerge { left: left.clone(), right: right.clone(), similarity });
        }
    }

    fn unify(&mut self, a: &Term, b: &Term, path: &mut TermPath) -> Result<(), UnifyError> {
        let a = self.walk(a);
        let b = self.walk(b);
        match (&a, &b) {
            // Bind the right variable first so the left premise's names
            // survive into conclusions.
            (_, Term::Variable { name }) => self.subst.bind(name, &a).map_err(|e| at(e, path)),
            (Term::Variable { name }, _) => self.subst.bind(name, &b).map_err(|e| at(e, path)),
            (Term::Basic { .. }, Term::Basic { .. }) => self.basics(&a, &b, path),
            (
                Term::Compound { relation: ra, elements: ea },
                Term::Compound { relation: rb, elements: eb },
            ) => {
                if ea.len() != eb.len() {
                    return Err(UnifyError::ArityMismatch {
                        path: path.clone(),
                        left: ea.len(),
                        right: eb.len(),
                    });
                }
                self.child(ra, rb, path, 0)?;
                for (i, (x, y)) in ea.iter().zip(eb).enumerate() {
                    self.child(x, y, path, i + 1)?;
                }
                Ok(())
            }
            (
                Term::Statement { copula: ca, left: la, right: ra },
                Term::Statement { copula: cb, left: lb, right: rb },
            )
            | (
                Term::Linkage { copula: ca, left: la, right: ra },
                Term::Linkage { copula: cb, left: lb, right: rb },
            ) => {
                // Copulas are structure: they never soften.
                if ca.id != cb.id {
                    return Err(UnifyError::CopulaMismatch {
                        path: path.clone(),
                        left: ca.surface.clone(),
                        right: cb.surface.clone(),
                    });
                }
                self.child(la, lb, path, 0)?;
                self.child(ra, rb, path, 1)
            }
            _ => Err(UnifyError::KindMismatch {
                path: path.clone(),
                left: a.to_string(),
                right: b.to_string(),
            }),
        }
    }

    fn child(&mut self, a: &Term, b: &Term, path: &mut TermPath, idx: usize) -> Result<(), UnifyError> {
        path.push(idx);
        let r = self.unify(a, b, path);
        path.pop();
        r
    }

    fn finish(self) -> UnifyOutcome {
        let similarity =
            self.merges.iter().map(|m| m.similarity).fold(1.0f64, |acc, s| acc.min(s));
        UnifyOutcome { substitution: self.subst, similarity, merges: self.merges }
    }
}

fn at(e: UnifyError, path: &TermPath) -> UnifyError {
    match e {
        UnifyError::Occurs { variable, term, .. } => {
            UnifyError::Occurs { path: path.clone(), variable, term }
        }
        other => other,
    }
}

/// Most general unifier under exact symbol equality. Token indices count.
pub fn hard_unify(a: &Term, b: &Term) -> Result<Substitution, UnifyError> {
    let mut w = Walker { leafs: Leafs::Hard, subst: Substitution::new(), merges: vec![] };
    w.unify(a, b, &mut vec![])?;
    Ok(w.finish().substitution)
}

/// Unification that may merge basic-vs-basic leaf mismatches whose cosine
/// similarity reaches `theta`. Structure (kinds, copulas, arity) never softens.
pub fn soft_unify(
    a: &Term,
    b: &Term,
    provider: &dyn EmbeddingProvider,
    theta: f64,
) -> Result<UnifyOutcome, UnifyError> {
    Unifier::soft(provider, theta).unify(a, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnifyMode {
    Hard,
    Soft,
}

/// Matching policy handed to the inference rules: mode, threshold, provider.
pub struct Unifier<'a> {
    pub mode: UnifyMode,
    pub theta: f64,
    pub token_insensitive: bool,
    provider: &'a dyn EmbeddingProvider,
}

impl<'a> Unifier<'a> {
    pub fn soft(provider: &'a dyn EmbeddingProvider, theta: f64) -> Self {
        Unifier { mode: UnifyMode::Soft, theta, token_insensitive: false, provider }
    }

    pub fn hard(provider: &'a dyn EmbeddingProvider) -> Self {
        Unifier { mode: UnifyMode::Hard, theta: 1.0, token_insensitive: false, provider }
    }

    pub fn token_insensitive(mut self, yes: bool) -> Self {
        self.token_insensitive = yes;
        self
    }

    fn walker(&self) -> Walker<'a> {
        let leafs = match self.mode {
            UnifyMode::Hard => Leafs::Hard,
            UnifyMode::Soft => Leafs::Soft {
                provider: self.provider,
                theta: self.theta,
                token_insensitive: self.token_insensitive,
            },
        };
        Walker { leafs, subst: Substitution::new(), merges: vec![] }
    }

    pub fn unify(&self, a: &Term, b: &Term) -> Result<UnifyOutcome, UnifyError> {
        let mut w = self.walker();
        w.unify(a, b, &mut vec![])?;
        Ok(w.finish())
    }

    /// Continue unifying under an existing outcome, threading its bindings and
    /// merges. Used for element-wise matching of conjunction parts.
    pub fn extend(
        &self,
        outcome: &UnifyOutcome,
        a: &Term,
        b: &Term,
    ) -> Result<UnifyOutcome, UnifyError> {
        let mut w = self.walker();
        w.subst = outcome.substitution.clone();
        w.merges = outcome.merges.clone();
        w.unify(a, b, &mut vec![])?;
        Ok(w.finish())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{HashEmbedding, SynonymTable};
    use crate::syntax::parse_term;
    use crate::term::CopulaRegistry;

    fn t(s: &str) -> Term {
        parse_term(s, &CopulaRegistry::default()).unwrap()
    }

    fn provider() -> HashEmbedding {
        HashEmbedding::with_defaults()
    }

    #[test]
    fn binds_variables_to_ground_terms() {
        let s = hard_unify(&t("(likes, $x, polar-bear)"), &t("(likes, John, polar-bear)")).unwrap();
        assert_eq!(s.get("x"), Some(&t("John")));
        assert_eq!(s.apply(&t("(likes, $x, penguin)")), t("(likes, John, penguin)"));
    }

    #[test]
    fn unifier_is_most_general() {
        let s = hard_unify(&t("(use, $x, $y)"), &t("(use, people, $z)")).unwrap();
        assert_eq!(s.get("x"), Some(&t("people")));
        // $y and $z stay linked, not bound to anything concrete.
        assert_eq!(s.apply(&t("$z")), s.apply(&t("$y")));
        assert!(s.apply(&t("$y")).is_variable());
    }

    #[test]
    fn right_variables_bind_toward_left_names() {
        let s = hard_unify(&t("(likes, $x, penguin)"), &t("(likes, $y, penguin)")).unwrap();
        assert_eq!(s.get("y"), Some(&t("$x")));
        assert_eq!(s.get("x"), None);
    }

    #[test]
    fn occurs_check_rejects_self_containment() {
        let err = hard_unify(&t("$x"), &t("(f, $x)")).unwrap_err();
        assert!(matches!(err, UnifyError::Occurs { .. }), "{err}");
    }

    #[test]
    fn ground_mismatches_report_the_path() {
        let err = hard_unify(&t("(likes, John, white)"), &t("(likes, John, black)")).unwrap_err();
        assert_eq!(
            err,
            UnifyError::SymbolMismatch { path: vec![2], left: "white".into(), right: "black".into() }
        );
    }

    #[test]
    fn structure_never_softens() {
        let p = provider();
        // Statement vs linkage.
        let e = soft_unify(&t("(a -> b)"), &t("(a => b)"), &p, 0.0).unwrap_err();
        assert!(matches!(e, UnifyError::KindMismatch { .. }), "{e}");
        // Different statement copulas.
        let e = soft_unify(&t("(a -> b)"), &t("(a <-> b)"), &p, 0.0).unwrap_err();
        assert!(matches!(e, UnifyError::CopulaMismatch { .. }), "{e}");
        // Arity.
        let e = soft_unify(&t("(r, a)"), &t("(r, a, b)"), &p, 0.0).unwrap_err();
        assert!(matches!(e, UnifyError::ArityMismatch { left: 1, right: 2, .. }), "{e}");
        // Basic vs compound.
        let e = soft_unify(&t("bad"), &t("(causal-and, a, bad)"), &p, 0.0).unwrap_err();
        assert!(matches!(e, UnifyError::KindMismatch { .. }), "{e}");
    }

    #[test]
    fn token_indices_are_distinct_by_default() {
        let p = provider();
        assert!(soft_unify(&t("human_1"), &t("human_2"), &p, 0.85).is_err());
        let out = Unifier::soft(&p, 0.85)
            .token_insensitive(true)
            .unify(&t("human_1"), &t("human_2"))
            .unwrap();
        assert_eq!(out.similarity, 1.0);
        assert_eq!(out.merges.len(), 1);
    }

    #[test]
    fn clustered_leafs_merge_with_identity_facts() {
        let table = SynonymTable::parse("weather-of-today weather-of-the-day\n").unwrap();
        let p = HashEmbedding::new(64, 0, table);
        let out = soft_unify(
            &t("(weather-of-today -> raining)"),
            &t("(weather-of-the-day -> raining)"),
            &p,
            0.85,
        )
        .unwrap();
        assert!(out.substitution.is_empty());
        assert_eq!(out.merges.len(), 1);
        assert_eq!(out.merges[0].left, t("weather-of-today"));
        assert_eq!(out.merges[0].right, t("weather-of-the-day"));
        assert!(out.similarity >= 0.85 && out.similarity < 1.0);
        // The same pair fails when theta climbs above the cluster similarity.
        let err = soft_unify(
            &t("(weather-of-today -> raining)"),
            &t("(weather-of-the-day -> raining)"),
            &p,
            0.99,
        )
        .unwrap_err();
        assert!(matches!(err, UnifyError::BelowThreshold { .. }), "{err}");
    }

    #[test]
    fn unrelated_leafs_stay_apart() {
        let p = provider();
        let err = soft_unify(&t("raining"), &t("umbrella"), &p, 0.85).unwrap_err();
        match err {
            UnifyError::BelowThreshold { similarity, theta, .. } => {
                assert!(similarity < theta);
            }
            other => panic!("expected BelowThreshold, got {other}"),
        }
    }

    #[test]
    fn bound_variable_values_keep_soft_matching() {
        // $y is bound to the long name by the first element, then must merge
        // with the short name in the second.
        let table =
            SynonymTable::parse("other-search-engines-than-Google other-search-engines\n").unwrap();
        let p = HashEmbedding::new(64, 0, table);
        let pattern = t("(and, (use, $x, $y), (use, $y, $z))");
        let ground = t(
            "(and, (use, people, other-search-engines-than-Google), \
             (use, other-search-engines, Google))",
        );
        let out = soft_unify(&pattern, &ground, &p, 0.85).unwrap();
        assert_eq!(out.substitution.get("x"), Some(&t("people")));
        assert_eq!(out.substitution.get("y"), Some(&t("other-search-engines-than-Google")));
        assert_eq!(out.substitution.get("z"), Some(&t("Google")));
        assert_eq!(out.merges.len(), 1);
        assert_eq!(out.merges[0].left, t("other-search-engines-than-Google"));
    }

    #[test]
    fn similarity_is_the_minimum_over_merges() {
        let table = SynonymTable::parse("a1 a2\nb1 b2\n").unwrap();
        let p = HashEmbedding::new(64, 0, table);
        let out = soft_unify(&t("(r, a1, b1)"), &t("(r, a2, b2)"), &p, 0.85).unwrap();
        assert_eq!(out.merges.len(), 2);
        let min = out.merges.iter().map(|m| m.similarity).fold(1.0f64, f64::min);
        assert_eq!(out.similarity, min);
    }

    #[test]
    fn apply_is_idempotent() {
        let mut s = Substitution::new();
        s.bind("x", &t("(f, $y)")).unwrap();
        s.bind("y", &t("John")).unwrap();
        let term = t("(g, $x, $y)");
        let once = s.apply(&term);
        assert_eq!(s.apply(&once), once);
        assert_eq!(once, t("(g, (f, John), John)"));
    }

    #[test]
    fn substituting_both_sides_makes_them_equal() {
        let a = t("((likes, $x, $y) => (likes, $x, penguin))");
        let b = t("((likes, John, polar-bear) => $r)");
        let s = hard_unify(&a, &b).unwrap();
        assert_eq!(s.apply(&a), s.apply(&b));
    }
}
