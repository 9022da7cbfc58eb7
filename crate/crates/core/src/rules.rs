//! Inference rules: chaining, element replacement, detachment, conjunction,
//! and focus extraction. Rules consume judged premises and emit judged
//! conclusions; pairing premises with rules is the engine's job.

use std::collections::BTreeSet;
use std::fmt;

use crate::term::{Copula, Term, TermClass, TermPath};
use crate::unify::{SoftMerge, Substitution, Unifier};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Ss,
    Sc,
    Sl,
    Cl,
    Ll,
    Conj,
    Focus,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleKind::Ss => "SS",
            RuleKind::Sc => "SC",
            RuleKind::Sl => "SL",
            RuleKind::Cl => "CL",
            RuleKind::Ll => "LL",
            RuleKind::Conj => "CONJ",
            RuleKind::Focus => "FOCUS",
        };
        write!(f, "{s}")
    }
}

/// Forward conclusions follow the premise order; reverse ones run against it
/// and are weaker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Reverse,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Forward => write!(f, "forward"),
            Direction::Reverse => write!(f, "reverse"),
        }
    }
}

/// Structural pattern of a chaining inference: where the shared subterm sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SsPattern {
    /// End of one premise meets the start of the other.
    Deduction,
    /// Shared left side; generalizes.
    Induction,
    /// Shared right side; hypothesizes.
    Abduction,
}

impl fmt::Display for SsPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SsPattern::Deduction => write!(f, "deduction"),
            SsPattern::Induction => write!(f, "induction"),
            SsPattern::Abduction => write!(f, "abduction"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strength {
    Strong,
    Weak,
}

/// Discount factors applied when combining premise confidences, plus the
/// copula strength order used to pick conclusion copulas.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidencePolicy {
    pub strong: f64,
    pub weak: f64,
    pub focus: f64,
    /// Copula ids, strongest first. Unlisted copulas rank weakest.
    pub copula_order: Vec<String>,
}

impl Default for ConfidencePolicy {
    fn default() -> Self {
        ConfidencePolicy {
            strong: 1.0,
            weak: 0.8,
            focus: 0.9,
            copula_order: vec!["->".into(), "<->".into(), "<~>".into(), "~>".into()],
        }
    }
}

impl ConfidencePolicy {
    pub fn factor(&self, strength: Strength) -> f64 {
        match strength {
            Strength::Strong => self.strong,
            Strength::Weak => self.weak,
        }
    }

    fn rank(&self, id: &str) -> usize {
        self.copula_order.iter().position(|c| c == id).unwrap_or(self.copula_order.len())
    }

    /// The weaker of two copulas; ties keep the first.
    pub fn weaker<'a>(&self, a: &'a Copula, b: &'a Copula) -> &'a Copula {
        if self.rank(&b.id) > self.rank(&a.id) {
            b
        } else {
            a
        }
    }
}

/// Product of premise confidences, the strength factor, and the match
/// similarity, clamped to [0, 1].
pub fn combine_confidence(
    policy: &ConfidencePolicy,
    t1: f64,
    t2: f64,
    strength: Strength,
    similarity: f64,
) -> f64 {
    (t1 * t2 * policy.factor(strength) * similarity).clamp(0.0, 1.0)
}

/// One derived judgment plus everything needed to explain it.
#[derive(Clone, Debug)]
pub struct Conclusion {
    pub term: Term,
    pub confidence: f64,
    pub kind: RuleKind,
    pub direction: Direction,
    pub strength: Strength,
    /// Set for chaining rules only.
    pub pattern: Option<SsPattern>,
    pub substitution: Substitution,
    pub merges: Vec<SoftMerge>,
    /// Where the extracted subterm sat, for focus conclusions.
    pub focus_path: Option<TermPath>,
}

/// Keep conclusions distinct by term; re-derivations keep the higher
/// confidence.
fn push(out: &mut Vec<Conclusion>, c: Conclusion) {
    match out.iter_mut().find(|e| e.term == c.term) {
        Some(existing) if c.confidence > existing.confidence => *existing = c,
        Some(_) => {}
        None => out.push(c),
    }
}

/// Rename variables clashing with `taken`, appending the first free `__<n>`
/// suffix. The second premise is renamed, so first-premise names survive into
/// conclusions.
pub fn rename_apart(term: &Term, taken: &BTreeSet<String>) -> Term {
    let own = term.free_variables();
    let clashing: Vec<&String> = own.iter().filter(|v| taken.contains(*v)).collect();
    if clashing.is_empty() {
        return term.clone();
    }
    let mut used: BTreeSet<String> = own.union(taken).cloned().collect();
    let mut renames = Substitution::new();
    for name in clashing {
        let mut n = 1;
        let fresh = loop {
            let candidate = format!("{name}__{n}");
            if !used.contains(&candidate) {
                break candidate;
            }
            n += 1;
        };
        used.insert(fresh.clone());
        renames.bind(name, &Term::var(fresh)).expect("fresh variables cannot clash");
    }
    renames.apply(term)
}

/// Copula for a chaining conclusion. Two negative premises yield nothing, a
/// single negative premise passes its copula through, and two positives keep
/// the weaker one.
fn conclusion_copula<'a>(
    c1: &'a Copula,
    c2: &'a Copula,
    policy: &ConfidencePolicy,
) -> Option<&'a Copula> {
    match (c1.is_negative(), c2.is_negative()) {
        (true, true) => None,
        (true, false) => Some(c1),
        (false, true) => Some(c2),
        (false, false) => Some(policy.weaker(c1, c2)),
    }
}

/// Shared engine for statement-with-statement and linkage-with-linkage
/// chaining. Four structural patterns, each matched fresh:
/// end-to-start both ways (deduction, strong), shared left (induction, weak,
/// both orientations), shared right (abduction, weak, both orientations).
fn chain_rules(
    kind: RuleKind,
    first: (&Term, f64),
    second: (&Term, f64),
    un: &Unifier,
    policy: &ConfidencePolicy,
) -> Vec<Conclusion> {
    fn sides(kind: RuleKind, t: &Term) -> Option<(&Copula, &Term, &Term)> {
        match (kind, t) {
            (RuleKind::Ss, Term::Statement { copula, left, right })
            | (RuleKind::Ll, Term::Linkage { copula, left, right }) => {
                Some((copula, left, right))
            }
            _ => None,
        }
    }
    let (t_first, conf1) = first;
    let (t_second, conf2) = second;
    let Some((c1, l1, r1)) = sides(kind, t_first) else { return vec![] };
    let renamed = rename_apart(t_second, &t_first.free_variables());
    let Some((c2, l2, r2)) = sides(kind, &renamed) else { return vec![] };
    let Some(copula) = conclusion_copula(c1, c2, policy) else { return vec![] };

    type Orientations<'t> = Vec<(Direction, &'t Term, &'t Term)>;
    let patterns: [(SsPattern, Strength, (&Term, &Term), Orientations); 4] = [
        (SsPattern::Deduction, Strength::Strong, (r1, l2), vec![(Direction::Forward, l1, r2)]),
        (SsPattern::Deduction, Strength::Strong, (l1, r2), vec![(Direction::Forward, l2, r1)]),
        (
            SsPattern::Induction,
            Strength::Weak,
            (l1, l2),
            vec![(Direction::Forward, r1, r2), (Direction::Reverse, r2, r1)],
        ),
        (
            SsPattern::Abduction,
            Strength::Weak,
            (r1, r2),
            vec![(Direction::Forward, l1, l2), (Direction::Reverse, l2, l1)],
        ),
    ];

    let mut out = Vec::new();
    for (pattern, strength, (pa, pb), orientations) in patterns {
        let Ok(outcome) = un.unify(pa, pb) else { continue };
        for (direction, left, right) in orientations {
            let term = match copula.kind {
                crate::term::CopulaKind::Statement => Term::Statement {
                    copula: copula.clone(),
                    left: Box::new(outcome.substitution.apply(left)),
                    right: Box::new(outcome.substitution.apply(right)),
                },
                crate::term::CopulaKind::Linkage => Term::Linkage {
                    copula: copula.clone(),
                    left: Box::new(outcome.substitution.apply(left)),
                    right: Box::new(outcome.substitution.apply(right)),
                },
            };
            push(
                &mut out,
                Conclusion {
                    term,
                    confidence: combine_confidence(
                        policy,
                        conf1,
                        conf2,
                        strength,
                        outcome.similarity,
                    ),
                    kind,
                    direction,
                    strength,
                    pattern: Some(pattern),
                    substitution: outcome.substitution.clone(),
                    merges: outcome.merges.clone(),
                    focus_path: None,
                },
            );
        }
    }
    out
}

/// Statement-with-statement chaining.
pub fn apply_ss(
    first: (&Term, f64),
    second: (&Term, f64),
    un: &Unifier,
    policy: &ConfidencePolicy,
) -> Vec<Conclusion> {
    chain_rules(RuleKind::Ss, first, second, un, policy)
}

/// Linkage-with-linkage chaining over whole linkage sides.
pub fn apply_ll(
    first: (&Term, f64),
    second: (&Term, f64),
    un: &Unifier,
    policy: &ConfidencePolicy,
) -> Vec<Conclusion> {
    chain_rules(RuleKind::Ll, first, second, un, policy)
}

/// Statement-with-thing element replacement. Sites are the whole thing and
/// its top-level elements, never the relation. An asymmetric statement
/// rewrites site-matches-right to left strongly (specialize) and
/// site-matches-left to right weakly (generalize); a symmetric statement
/// rewrites strongly both ways. Negated statements carry no usable rewrite,
/// and conclusions must stay things.
pub fn apply_sc(
    statement: (&Term, f64),
    thing: (&Term, f64),
    un: &Unifier,
    policy: &ConfidencePolicy,
) -> Vec<Conclusion> {
    let (s_term, ts) = statement;
    let (c_term, tc) = thing;
    if c_term.class() != TermClass::C {
        return vec![];
    }
    let renamed = rename_apart(s_term, &c_term.free_variables());
    let Term::Statement { copula, left, right } = &renamed else { return vec![] };
    if copula.is_negative() {
        return vec![];
    }
    let mut sites: Vec<TermPath> = vec![vec![]];
    if let Term::Compound { elements, .. } = c_term {
        sites.extend((1..=elements.len()).map(|i| vec![i]));
    }
    let readings: [(Direction, Strength, &Term, &Term); 2] = if copula.symmetric {
        [
            (Direction::Forward, Strength::Strong, right, left),
            (Direction::Forward, Strength::Strong, left, right),
        ]
    } else {
        [
            (Direction::Forward, Strength::Strong, right, left),
            (Direction::Reverse, Strength::Weak, left, right),
        ]
    };
    let mut out = Vec::new();
    for site in &sites {
        let site_term = c_term.subterm_at(site).expect("sites come from the term itself");
        for (direction, strength, matched, produced) in &readings {
            let Ok(outcome) = un.unify(site_term, matched) else { continue };
            let replaced = c_term
                .replace_at(site, (*produced).clone())
                .expect("sites come from the term itself");
            let term = outcome.substitution.apply(&replaced);
            if term.class() != TermClass::C {
                continue;
            }
            push(
                &mut out,
                Conclusion {
                    term,
                    confidence: combine_confidence(policy, ts, tc, *strength, outcome.similarity),
                    kind: RuleKind::Sc,
                    direction: *direction,
                    strength: *strength,
                    pattern: None,
                    substitution: outcome.substitution.clone(),
                    merges: outcome.merges.clone(),
                    focus_path: None,
                },
            );
        }
    }
    out
}

/// Detach a linkage against a premise: antecedent match yields the consequent
/// (strong, forward), otherwise consequent match yields the antecedent (weak,
/// reverse). At most one conclusion; forward takes precedence.
fn detach(
    kind: RuleKind,
    premise: (&Term, f64),
    linkage: (&Term, f64),
    un: &Unifier,
    policy: &ConfidencePolicy,
) -> Option<Conclusion> {
    let (p_term, tp) = premise;
    let (l_term, tl) = linkage;
    let renamed = rename_apart(l_term, &p_term.free_variables());
    let Term::Linkage { left, right, .. } = &renamed else { return None };
    let attempts: [(Direction, Strength, &Term, &Term); 2] = [
        (Direction::Forward, Strength::Strong, left, right),
        (Direction::Reverse, Strength::Weak, right, left),
    ];
    for (direction, strength, matched, produced) in attempts {
        let Ok(outcome) = un.unify(p_term, matched) else { continue };
        return Some(Conclusion {
            term: outcome.substitution.apply(produced),
            confidence: combine_confidence(policy, tp, tl, strength, outcome.similarity),
            kind,
            direction,
            strength,
            pattern: None,
            substitution: outcome.substitution,
            merges: outcome.merges,
            focus_path: None,
        });
    }
    None
}

/// Statement-with-linkage detachment.
pub fn apply_sl(
    statement: (&Term, f64),
    linkage: (&Term, f64),
    un: &Unifier,
    policy: &ConfidencePolicy,
) -> Option<Conclusion> {
    if statement.0.class() != TermClass::S {
        return None;
    }
    detach(RuleKind::Sl, statement, linkage, un, policy)
}

/// Thing-with-linkage detachment.
pub fn apply_cl(
    thing: (&Term, f64),
    linkage: (&Term, f64),
    un: &Unifier,
    policy: &ConfidencePolicy,
) -> Option<Conclusion> {
    if thing.0.class() != TermClass::C {
        return None;
    }
    detach(RuleKind::Cl, thing, linkage, un, policy)
}

/// Conjoin judged parts into a compound under `relation`. Parts go in as
/// they stand; aligning them with an antecedent is the consuming detachment's
/// job. Confidence is the product of part confidences times the strong
/// factor.
pub fn conjoin(
    relation: &Term,
    parts: &[(Term, f64)],
    policy: &ConfidencePolicy,
) -> Option<Conclusion> {
    if parts.len() < 2 {
        return None;
    }
    let term =
        Term::compound(relation.clone(), parts.iter().map(|(t, _)| t.clone()).collect()).ok()?;
    let confidence = (parts.iter().map(|&(_, t)| t).product::<f64>() * policy.strong).clamp(0.0, 1.0);
    Some(Conclusion {
        term,
        confidence,
        kind: RuleKind::Conj,
        direction: Direction::Forward,
        strength: Strength::Strong,
        pattern: None,
        substitution: Substitution::new(),
        merges: vec![],
        focus_path: None,
    })
}

/// Give the subterm at `path` a judgment of its own, discounted by the focus
/// factor.
pub fn extract_focus(
    source: (&Term, f64),
    path: &[usize],
    policy: &ConfidencePolicy,
) -> Option<Conclusion> {
    let (term, t) = source;
    let sub = term.subterm_at(path)?;
    Some(Conclusion {
        term: sub.clone(),
        confidence: (t * policy.focus).clamp(0.0, 1.0),
        kind: RuleKind::Focus,
        direction: Direction::Forward,
        strength: Strength::Strong,
        pattern: None,
        substitution: Substitution::new(),
        merges: vec![],
        focus_path: Some(path.to_vec()),
    })
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

    fn policy() -> ConfidencePolicy {
        ConfidencePolicy::default()
    }

    #[test]
    fn deduction_chains_end_to_start() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out =
            apply_ss((&t("human -> animal"), 1.0), (&t("animal -> mammal"), 1.0), &un, &policy());
        assert_eq!(out.len(), 1);
        let c = &out[0];
        assert_eq!(c.term, t("human -> mammal"));
        assert_eq!(c.confidence, 1.0);
        assert_eq!((c.kind, c.direction, c.pattern), (RuleKind::Ss, Direction::Forward, Some(SsPattern::Deduction)));
        assert_eq!(c.strength, Strength::Strong);
    }

    #[test]
    fn deduction_also_chains_second_into_first() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out =
            apply_ss((&t("animal -> mammal"), 1.0), (&t("human -> animal"), 1.0), &un, &policy());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].term, t("human -> mammal"));
        assert_eq!(out[0].pattern, Some(SsPattern::Deduction));
    }

    #[test]
    fn induction_generalizes_a_shared_left_both_ways() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out = apply_ss((&t("Lily -> swan"), 1.0), (&t("Lily -> white"), 1.0), &un, &policy());
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].term, t("swan -> white"));
        assert_eq!(out[0].direction, Direction::Forward);
        assert_eq!(out[1].term, t("white -> swan"));
        assert_eq!(out[1].direction, Direction::Reverse);
        for c in &out {
            assert_eq!(c.confidence, 0.8);
            assert_eq!(c.pattern, Some(SsPattern::Induction));
            assert_eq!(c.strength, Strength::Weak);
        }
    }

    #[test]
    fn abduction_hypothesizes_from_a_shared_right() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out = apply_ss((&t("Lily -> swan"), 1.0), (&t("Greg -> swan"), 1.0), &un, &policy());
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].term, t("Lily -> Greg"));
        assert_eq!(out[1].term, t("Greg -> Lily"));
        assert!(out.iter().all(|c| c.pattern == Some(SsPattern::Abduction) && c.confidence == 0.8));
    }

    #[test]
    fn one_negative_premise_passes_its_copula_through() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out = apply_ss(
            (&t("milk -/-> gateway-drug"), 1.0),
            (&t("milk ~> marijuana"), 1.0),
            &un,
            &policy(),
        );
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].term, t("gateway-drug -/-> marijuana"));
        assert_eq!(out[1].term, t("marijuana -/-> gateway-drug"));
        assert_eq!(out[1].direction, Direction::Reverse);
        assert_eq!(out[1].confidence, 0.8);
    }

    #[test]
    fn two_negative_premises_block_chaining() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out = apply_ss((&t("a -/-> b"), 1.0), (&t("a -/-> c"), 1.0), &un, &policy());
        assert!(out.is_empty(), "{out:?}");
    }

    #[test]
    fn positive_premises_keep_the_weaker_copula() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out = apply_ss((&t("4 -> square"), 1.0), (&t("4 <~> 2_2"), 1.0), &un, &policy());
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].term, t("square <~> 2_2"));
        assert_eq!(out[1].term, t("2_2 <~> square"));
    }

    #[test]
    fn premise_confidences_multiply() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out = apply_ss((&t("a -> b"), 0.9), (&t("b -> c"), 0.5), &un, &policy());
        assert!((out[0].confidence - 0.45).abs() < 1e-12);
    }

    #[test]
    fn sc_specializes_strongly_and_generalizes_weakly() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let s = t("polar-bear -> white");
        let strong = apply_sc((&s, 1.0), (&t("(likes, John, white)"), 1.0), &un, &policy());
        assert_eq!(strong.len(), 1);
        assert_eq!(strong[0].term, t("(likes, John, polar-bear)"));
        assert_eq!(strong[0].confidence, 1.0);
        assert_eq!(strong[0].direction, Direction::Forward);
        let weak = apply_sc((&s, 1.0), (&t("(likes, John, polar-bear)"), 1.0), &un, &policy());
        assert_eq!(weak.len(), 1);
        assert_eq!(weak[0].term, t("(likes, John, white)"));
        assert_eq!(weak[0].confidence, 0.8);
        assert_eq!(weak[0].direction, Direction::Reverse);
    }

    #[test]
    fn sc_symmetric_statements_rewrite_strongly_both_ways() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out = apply_sc((&t("4 <-> four"), 1.0), (&t("(plus, 4, 1)"), 1.0), &un, &policy());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].term, t("(plus, four, 1)"));
        assert_eq!(out[0].confidence, 1.0);
        assert_eq!(out[0].strength, Strength::Strong);
        // The same rewrite under an asymmetric copula is a weak generalization.
        let weak = apply_sc((&t("4 -> four"), 1.0), (&t("(plus, 4, 1)"), 1.0), &un, &policy());
        assert_eq!(weak[0].confidence, 0.8);
    }

    #[test]
    fn sc_skips_negated_statements() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out =
            apply_sc((&t("milk -/-> popular"), 1.0), (&t("(drink, milk)"), 1.0), &un, &policy());
        assert!(out.is_empty());
    }

    #[test]
    fn sc_conclusions_must_stay_things() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        // Rewriting x by this statement would produce a statement, not a thing.
        let out = apply_sc((&t("x -> (a -> b)"), 1.0), (&t("x"), 1.0), &un, &policy());
        assert!(out.is_empty(), "{out:?}");
    }

    #[test]
    fn sc_sites_exclude_the_relation() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out =
            apply_sc((&t("likes -> loves"), 1.0), (&t("(likes, John, white)"), 1.0), &un, &policy());
        assert!(out.is_empty(), "{out:?}");
    }

    #[test]
    fn sl_detaches_the_consequent_forward() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let c = apply_sl(
            (&t("polar-bear -> white"), 1.0),
            (&t("(($x -> white) => (likes, John, $x))"), 1.0),
            &un,
            &policy(),
        )
        .unwrap();
        assert_eq!(c.term, t("(likes, John, polar-bear)"));
        assert_eq!(c.confidence, 1.0);
        assert_eq!((c.kind, c.direction), (RuleKind::Sl, Direction::Forward));
        assert_eq!(c.substitution.get("x"), Some(&t("polar-bear")));
    }

    #[test]
    fn sl_detaches_the_antecedent_weakly_in_reverse() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let c = apply_sl(
            (&t("milk -> popular"), 1.0),
            (&t("(($x -> addictive) => ($x -> popular))"), 1.0),
            &un,
            &policy(),
        )
        .unwrap();
        assert_eq!(c.term, t("milk -> addictive"));
        assert_eq!(c.confidence, 0.8);
        assert_eq!(c.direction, Direction::Reverse);
        assert_eq!(c.strength, Strength::Weak);
    }

    #[test]
    fn detachment_prefers_forward_when_both_sides_match() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let c = apply_sl((&t("a -> b"), 1.0), (&t("((a -> b) => (a -> b))"), 1.0), &un, &policy())
            .unwrap();
        assert_eq!(c.direction, Direction::Forward);
        assert_eq!(c.confidence, 1.0);
    }

    #[test]
    fn sl_merges_close_leafs_through_the_antecedent() {
        let table = SynonymTable::parse("weather-of-today weather-of-the-day\n").unwrap();
        let p = HashEmbedding::new(64, 0, table);
        let un = Unifier::soft(&p, 0.85);
        let c = apply_sl(
            (&t("weather-of-today -> raining"), 1.0),
            (&t("((weather-of-the-day -> raining) => getting-wet)"), 1.0),
            &un,
            &policy(),
        )
        .unwrap();
        assert_eq!(c.term, t("getting-wet"));
        assert_eq!(c.merges.len(), 1);
        assert!(c.confidence > 0.85 && c.confidence < 1.0);
        assert_eq!(c.confidence, c.merges[0].similarity);
    }

    #[test]
    fn cl_detaches_compound_antecedents() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let c = apply_cl(
            (&t("(likes, John, polar-bear)"), 1.0),
            (&t("((likes, $x, polar-bear) => (likes, $x, penguin))"), 1.0),
            &un,
            &policy(),
        )
        .unwrap();
        assert_eq!(c.term, t("(likes, John, penguin)"));
        assert_eq!(c.confidence, 1.0);
        assert_eq!((c.kind, c.direction), (RuleKind::Cl, Direction::Forward));
    }

    #[test]
    fn cl_reverse_finds_what_would_have_caused_this() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let c = apply_cl(
            (&t("(avoid, people, getting-wet)"), 1.0),
            (&t("((have, $x, umbrella) => (avoid, $x, getting-wet))"), 1.0),
            &un,
            &policy(),
        )
        .unwrap();
        assert_eq!(c.term, t("(have, people, umbrella)"));
        assert_eq!(c.confidence, 0.8);
        assert_eq!(c.direction, Direction::Reverse);
    }

    #[test]
    fn ll_chains_rules_and_keeps_first_premise_names() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out = apply_ll(
            (&t("((likes, $x, polar-bear) => (likes, $x, white-animal))"), 1.0),
            (&t("((likes, $x, white-animal) => (likes, $x, dolphin))"), 1.0),
            &un,
            &policy(),
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].term, t("((likes, $x, polar-bear) => (likes, $x, dolphin))"));
        assert_eq!(out[0].confidence, 1.0);
        assert_eq!((out[0].kind, out[0].pattern), (RuleKind::Ll, Some(SsPattern::Deduction)));
    }

    #[test]
    fn ll_mirrors_induction_and_abduction() {
        let p = HashEmbedding::with_defaults();
        let un = Unifier::soft(&p, 0.85);
        let out = apply_ll(
            (&t("((a, $x) => (b, $x))"), 1.0),
            (&t("((a, $y) => (c, $y))"), 1.0),
            &un,
            &policy(),
        );
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].term, t("((b, $x) => (c, $x))"));
        assert_eq!(out[1].term, t("((c, $x) => (b, $x))"));
        assert!(out.iter().all(|c| c.confidence == 0.8 && c.pattern == Some(SsPattern::Induction)));
    }

    #[test]
    fn conjoin_multiplies_part_confidences() {
        let c = conjoin(
            &t("causal-and"),
            &[(t("getting-wet"), 0.9), (t("bad"), 0.8)],
            &policy(),
        )
        .unwrap();
        assert_eq!(c.term, t("(causal-and, getting-wet, bad)"));
        assert!((c.confidence - 0.72).abs() < 1e-12);
        assert_eq!(c.kind, RuleKind::Conj);
        assert!(conjoin(&t("and"), &[(t("a"), 1.0)], &policy()).is_none());
    }

    #[test]
    fn focus_extracts_a_discounted_subterm() {
        let src = t("(and, (use, people, engines), (use, engines, Google))");
        let c = extract_focus((&src, 1.0), &[2], &policy()).unwrap();
        assert_eq!(c.term, t("(use, engines, Google)"));
        assert!((c.confidence - 0.9).abs() < 1e-12);
        assert_eq!(c.focus_path, Some(vec![2]));
        assert!((extract_focus((&src, 0.8), &[1], &policy()).unwrap().confidence - 0.72).abs() < 1e-12);
        assert!(extract_focus((&src, 1.0), &[9], &policy()).is_none());
    }

    #[test]
    fn rename_apart_dodges_both_sides() {
        let taken: BTreeSet<String> = ["x".to_string()].into();
        let renamed = rename_apart(&t("(f, $x, $x__1)"), &taken);
        let vars: Vec<String> = renamed.free_variables().into_iter().collect();
        assert_eq!(vars, vec!["x__1", "x__2"]);
        // No clash, no change.
        assert_eq!(rename_apart(&t("(f, $y)"), &taken), t("(f, $y)"));
    }

    #[test]
    fn combine_confidence_clamps_to_unit_range() {
        let pol = policy();
        assert_eq!(combine_confidence(&pol, 1.0, 1.0, Strength::Strong, 1.0), 1.0);
        assert_eq!(combine_confidence(&pol, 1.0, 1.0, Strength::Weak, 1.0), 0.8);
        let inflated = ConfidencePolicy { strong: 2.0, ..pol };
        assert_eq!(combine_confidence(&inflated, 1.0, 1.0, Strength::Strong, 1.0), 1.0);
    }
}
