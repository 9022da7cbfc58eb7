//! Best-first reasoning engine. Candidates (premise combinations with their
//! precomputed conclusions) queue by affinity to the goal; popping one asserts
//! its conclusions as numbered steps until the goal is answered, the path is
//! explained, or budgets run out.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{cosine, EmbeddingProvider};
use crate::kb::{
    pair_kind, AssertEffect, JudgmentId, KnowledgeBase, PairKind, Provenance, StepId,
};
use crate::rules::{
    self, Conclusion, ConfidencePolicy, Direction, RuleKind, SsPattern, Strength,
};
use crate::syntax::{self, SourceJudgment, SyntaxError};
use crate::term::{Copula, CopulaRegistry, Term, TermClass, TermPath};
use crate::unify::{SoftMerge, Substitution, Unifier, UnifyOutcome};

/// Search budgets and matching thresholds. One settings value drives one query.
#[derive(Clone, Debug, PartialEq)]
pub struct ReasonerSettings {
    /// Similarity floor for soft unification.
    pub theta: f64,
    /// Most steps a run may record.
    pub max_steps: usize,
    /// Deepest derivation chain a judgment may sit on; givens are depth 0.
    pub max_depth: usize,
    /// Most candidates kept queued; the rest are dropped, worst first.
    pub beam_width: usize,
    /// Allow one soft merge when matching conclusions against the goal.
    pub soft_goal: bool,
}

impl Default for ReasonerSettings {
    fn default() -> Self {
        ReasonerSettings {
            theta: 0.85,
            max_steps: 200,
            max_depth: 8,
            beam_width: 32,
            soft_goal: false,
        }
    }
}

/// One recorded inference: which rule combined which premises into which
/// judgment.
#[derive(Clone, Debug)]
pub struct Step {
    pub id: StepId,
    pub rule: RuleKind,
    pub pattern: Option<SsPattern>,
    pub direction: Direction,
    pub strength: Strength,
    /// Premise judgments in the order the rule consumed them.
    pub premises: Vec<JudgmentId>,
    pub substitution: Substitution,
    pub merges: Vec<SoftMerge>,
    pub conclusion_id: JudgmentId,
    pub conclusion: Term,
    pub confidence: f64,
    pub focus_path: Option<TermPath>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExhaustReason {
    /// The step budget ran out.
    Budget,
    /// No candidate combinations remained.
    Frontier,
}

impl fmt::Display for ExhaustReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExhaustReason::Budget => write!(f, "step budget reached"),
            ExhaustReason::Frontier => write!(f, "no candidates left"),
        }
    }
}

/// What a query run produced. `step` is None when the goal was already known.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Answered {
        step: Option<StepId>,
        term: Term,
        bindings: BTreeMap<String, Term>,
        confidence: f64,
    },
    Explained {
        /// Step ids on the derivation path, ascending; the final entry
        /// concludes the goal. Empty when the goal was already given.
        path: Vec<StepId>,
    },
    Exhausted {
        reason: ExhaustReason,
    },
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        !matches!(self, Outcome::Exhausted { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Solve,
    Explain,
}

/// Linkage-with-linkage pairs wait behind everything else: they splice rules
/// into new rules, which shortcuts past the step-by-step paths the engine
/// should prefer.
const LL_TIER: u8 = 1;

/// What a candidate combines when it pops. Conclusions are regenerated at pop
/// time, so their confidences reflect the premises as they stand then; a
/// premise raised after scheduling would otherwise leave stale numbers in the
/// recorded steps.
#[derive(Clone, Debug)]
enum Shape {
    Pair(JudgmentId, JudgmentId),
    Conj { linkage: JudgmentId, parts: Vec<JudgmentId> },
    Focus { source: JudgmentId, path: TermPath },
}

struct Candidate {
    tier: u8,
    score: f64,
    depth: usize,
    premises: Vec<JudgmentId>,
    seq: u64,
    shape: Shape,
}

fn candidate_order(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    a.tier
        .cmp(&b.tier)
        .then_with(|| b.score.total_cmp(&a.score))
        .then_with(|| a.depth.cmp(&b.depth))
        .then_with(|| a.premises.cmp(&b.premises))
        .then_with(|| a.seq.cmp(&b.seq))
}

/// Max-heap wrapper: the best candidate by `candidate_order` pops first. The
/// unique `seq` makes the order total, so runs stay deterministic.
struct HeapCandidate(Candidate);

impl PartialEq for HeapCandidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for HeapCandidate {}

impl PartialOrd for HeapCandidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapCandidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        candidate_order(&other.0, &self.0)
    }
}

pub struct Reasoner {
    kb: KnowledgeBase,
    registry: CopulaRegistry,
    provider: Box<dyn EmbeddingProvider>,
    policy: ConfidencePolicy,
    settings: ReasonerSettings,
    steps: Vec<Step>,
    /// Judgment to the step that first derived it; givens are absent.
    defining_step: HashMap<JudgmentId, StepId>,
    depth: HashMap<JudgmentId, usize>,
    frontier: std::collections::BinaryHeap<HeapCandidate>,
    scheduled_pairs: HashSet<(JudgmentId, JudgmentId)>,
    scheduled_conj: HashSet<(JudgmentId, Vec<JudgmentId>)>,
    scheduled_focus: HashSet<(JudgmentId, TermPath)>,
    seq: u64,
    mode: Mode,
    goal: Option<Term>,
    goal_vector: Vec<f64>,
    outcome: Option<Outcome>,
}

impl Reasoner {
    pub fn new(
        kb: KnowledgeBase,
        registry: CopulaRegistry,
        provider: Box<dyn EmbeddingProvider>,
        policy: ConfidencePolicy,
        settings: ReasonerSettings,
    ) -> Self {
        Reasoner {
            kb,
            registry,
            provider,
            policy,
            settings,
            steps: Vec::new(),
            defining_step: HashMap::new(),
            depth: HashMap::new(),
            frontier: std::collections::BinaryHeap::new(),
            scheduled_pairs: HashSet::new(),
            scheduled_conj: HashSet::new(),
            scheduled_focus: HashSet::new(),
            seq: 0,
            mode: Mode::Solve,
            goal: None,
            goal_vector: Vec::new(),
            outcome: None,
        }
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn step(&self, id: StepId) -> Option<&Step> {
        self.steps.get((id as usize).checked_sub(1)?)
    }

    /// Derive an answer for the goal. Ground goals are verified: any matching
    /// judgment or step settles them. Goals with variables ask for something
    /// new, so given judgments and weak-direction steps never answer them.
    pub fn solve(&mut self, goal: &Term) -> Outcome {
        self.run(goal, Mode::Solve)
    }

    /// Derive the goal and report the steps it rests on.
    pub fn explain(&mut self, goal: &Term) -> Outcome {
        self.run(goal, Mode::Explain)
    }

    fn run(&mut self, goal: &Term, mode: Mode) -> Outcome {
        self.mode = mode;
        self.goal_vector = self.provider.embed(goal);
        self.goal = Some(goal.clone());
        let outcome = match self.pre_check() {
            Some(out) => out,
            None => {
                self.bootstrap();
                loop {
                    let Some(candidate) = self.pop_best() else {
                        break Outcome::Exhausted { reason: ExhaustReason::Frontier };
                    };
                    if let ControlFlow::Break(out) = self.process(candidate) {
                        break out;
                    }
                }
            }
        };
        self.outcome = Some(outcome.clone());
        outcome
    }

    fn unifier(&self) -> Unifier<'_> {
        Unifier::soft(self.provider.as_ref(), self.settings.theta)
    }

    fn goal_match(&self, candidate: &Term) -> Option<UnifyOutcome> {
        let goal = self.goal.as_ref().expect("goal is set for the whole run");
        if self.settings.soft_goal {
            self.unifier().unify(goal, candidate).ok().filter(|o| o.merges.len() <= 1)
        } else {
            Unifier::hard(self.provider.as_ref()).unify(goal, candidate).ok()
        }
    }

    fn goal_bindings(&self, outcome: &UnifyOutcome) -> BTreeMap<String, Term> {
        let goal = self.goal.as_ref().expect("goal is set for the whole run");
        goal.free_variables()
            .into_iter()
            .filter_map(|v| outcome.substitution.get(&v).map(|t| (v, t.clone())))
            .collect()
    }

    /// A goal the knowledge base already settles needs no steps.
    fn pre_check(&self) -> Option<Outcome> {
        let goal = self.goal.as_ref().expect("goal is set for the whole run");
        if self.mode == Mode::Solve && !goal.is_ground() {
            return None;
        }
        for j in self.kb.iter() {
            if let Some(outcome) = self.goal_match(&j.term) {
                return Some(match self.mode {
                    Mode::Solve => Outcome::Answered {
                        step: None,
                        term: j.term.clone(),
                        bindings: self.goal_bindings(&outcome),
                        confidence: j.confidence,
                    },
                    Mode::Explain => Outcome::Explained { path: vec![] },
                });
            }
        }
        None
    }

    fn bootstrap(&mut self) {
        let ids: Vec<JudgmentId> = self.kb.iter().map(|j| j.id).collect();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                self.schedule_pair(a, b);
            }
        }
        self.schedule_conj_focus();
        self.prune();
    }

    fn judgment_depth(&self, id: JudgmentId) -> usize {
        self.depth.get(&id).copied().unwrap_or(0)
    }

    fn push_candidate(&mut self, tier: u8, shape: Shape) {
        let (premises, conclusions) = self.generate(&shape);
        if conclusions.is_empty() {
            return;
        }
        let depth = premises.iter().map(|&p| self.judgment_depth(p)).max().unwrap_or(0);
        let score = conclusions
            .iter()
            .map(|c| {
                let v = self.provider.embed(&c.term);
                c.confidence * cosine(&v, &self.goal_vector).max(0.0)
            })
            .fold(0.0f64, f64::max);
        self.seq += 1;
        self.frontier.push(HeapCandidate(Candidate {
            tier,
            score,
            depth,
            premises,
            seq: self.seq,
            shape,
        }));
    }

    /// Produce a shape's conclusions from the judgments as they currently
    /// stand. Premises come back in the order the rule consumes them, which
    /// for mixed-class pairs is fixed by class, not id.
    fn generate(&self, shape: &Shape) -> (Vec<JudgmentId>, Vec<Conclusion>) {
        match shape {
            Shape::Pair(a, b) => self.pair_conclusions(*a, *b),
            Shape::Conj { linkage, parts } => (
                parts.clone(),
                self.conj_conclusion(*linkage, parts).into_iter().collect(),
            ),
            Shape::Focus { source, path } => {
                let conclusions = match self.kb.get(*source) {
                    Some(j) => rules::extract_focus((&j.term, j.confidence), path, &self.policy)
                        .into_iter()
                        .collect(),
                    None => vec![],
                };
                (vec![*source], conclusions)
            }
        }
    }

    fn pair_conclusions(&self, a: JudgmentId, b: JudgmentId) -> (Vec<JudgmentId>, Vec<Conclusion>) {
        let (ja, jb) = match (self.kb.get(a), self.kb.get(b)) {
            (Some(x), Some(y)) => (x, y),
            _ => return (vec![], vec![]),
        };
        let Some(kind) = pair_kind(ja.class(), jb.class()) else { return (vec![], vec![]) };
        let un = self.unifier();
        let first = (&ja.term, ja.confidence);
        let second = (&jb.term, jb.confidence);
        match kind {
            PairKind::Ss => {
                (vec![ja.id, jb.id], rules::apply_ss(first, second, &un, &self.policy))
            }
            PairKind::Ll => {
                (vec![ja.id, jb.id], rules::apply_ll(first, second, &un, &self.policy))
            }
            PairKind::Sc => {
                let (s, c) = if ja.class() == TermClass::S { (ja, jb) } else { (jb, ja) };
                (
                    vec![s.id, c.id],
                    rules::apply_sc(
                        (&s.term, s.confidence),
                        (&c.term, c.confidence),
                        &un,
                        &self.policy,
                    ),
                )
            }
            PairKind::Sl => {
                let (s, l) = if ja.class() == TermClass::S { (ja, jb) } else { (jb, ja) };
                (
                    vec![s.id, l.id],
                    rules::apply_sl(
                        (&s.term, s.confidence),
                        (&l.term, l.confidence),
                        &un,
                        &self.policy,
                    )
                    .into_iter()
                    .collect(),
                )
            }
            PairKind::Cl => {
                let (c, l) = if ja.class() == TermClass::C { (ja, jb) } else { (jb, ja) };
                (
                    vec![c.id, l.id],
                    rules::apply_cl(
                        (&c.term, c.confidence),
                        (&l.term, l.confidence),
                        &un,
                        &self.policy,
                    )
                    .into_iter()
                    .collect(),
                )
            }
        }
    }

    /// Rebuild one conjunction tuple: thread bindings through the antecedent's
    /// elements against the chosen parts, in order.
    fn conj_conclusion(&self, linkage: JudgmentId, parts: &[JudgmentId]) -> Option<Conclusion> {
        let (relation, elements) = self.conj_antecedent(linkage)?;
        if elements.len() != parts.len() {
            return None;
        }
        let un = self.unifier();
        let mut outcome = UnifyOutcome::default();
        let mut tuple: Vec<(Term, f64)> = Vec::with_capacity(parts.len());
        for (element, &id) in elements.iter().zip(parts) {
            let j = self.kb.get(id)?;
            outcome = un.extend(&outcome, element, &j.term).ok()?;
            tuple.push((j.term.clone(), j.confidence));
        }
        let rel = outcome.substitution.apply(relation);
        if !rel.is_ground() {
            return None;
        }
        rules::conjoin(&rel, &tuple, &self.policy)
    }

    fn schedule_pair(&mut self, a: JudgmentId, b: JudgmentId) {
        let key = (a.min(b), a.max(b));
        if !self.scheduled_pairs.insert(key) {
            return;
        }
        let tier = match (self.kb.get(key.0), self.kb.get(key.1)) {
            (Some(x), Some(y)) if pair_kind(x.class(), y.class()) == Some(PairKind::Ll) => LL_TIER,
            (Some(_), Some(_)) => 0,
            _ => return,
        };
        self.push_candidate(tier, Shape::Pair(key.0, key.1));
    }

    /// Linkages whose antecedent is a compound invite two candidate shapes:
    /// conjunctions of judgments that fill the antecedent's elements, and
    /// focus extractions of judgment elements that look like one of them.
    fn schedule_conj_focus(&mut self) {
        let linkage_ids: Vec<JudgmentId> = self
            .kb
            .iter()
            .filter(|j| self.conj_antecedent(j.id).is_some())
            .map(|j| j.id)
            .collect();
        if linkage_ids.is_empty() {
            return;
        }
        // Conjunction tuples, per linkage, in element order.
        for &lid in &linkage_ids {
            for ids in self.conj_tuples(lid) {
                if self.scheduled_conj.insert((lid, ids.clone())) {
                    self.push_candidate(0, Shape::Conj { linkage: lid, parts: ids });
                }
            }
        }
        // Focus extractions over compound judgments' elements.
        let patterns: Vec<Term> = linkage_ids
            .iter()
            .filter_map(|&lid| self.conj_antecedent(lid))
            .flat_map(|(_, elements)| elements)
            .filter(|e| !e.is_variable())
            .cloned()
            .collect();
        if patterns.is_empty() {
            return;
        }
        let sources: Vec<JudgmentId> = self
            .kb
            .iter()
            .filter(|j| matches!(j.term, Term::Compound { .. }))
            .map(|j| j.id)
            .collect();
        let un = self.unifier();
        let mut found: Vec<(JudgmentId, TermPath)> = Vec::new();
        for id in sources {
            let j = self.kb.get(id).expect("source ids come from the kb");
            let Term::Compound { elements, .. } = &j.term else { continue };
            for (i, element) in elements.iter().enumerate() {
                let path = vec![i + 1];
                if self.scheduled_focus.contains(&(id, path.clone())) {
                    continue;
                }
                if patterns.iter().any(|p| un.unify(element, p).is_ok()) {
                    found.push((id, path));
                }
            }
        }
        for (id, path) in found {
            self.scheduled_focus.insert((id, path.clone()));
            self.push_candidate(0, Shape::Focus { source: id, path });
        }
    }

    fn conj_antecedent(&self, id: JudgmentId) -> Option<(&Term, &[Term])> {
        let j = self.kb.get(id)?;
        let Term::Linkage { left, .. } = &j.term else { return None };
        let Term::Compound { relation, elements } = left.as_ref() else { return None };
        if elements.len() < 2 {
            return None;
        }
        Some((relation, elements))
    }

    fn conj_tuples(&self, linkage: JudgmentId) -> Vec<Vec<JudgmentId>> {
        let Some((_, elements)) = self.conj_antecedent(linkage) else { return vec![] };
        let un = self.unifier();
        let mut out = Vec::new();
        let mut chosen = Vec::new();
        self.fill_elements(&un, elements, 0, &UnifyOutcome::default(), &mut chosen, &mut out);
        out
    }

    /// Walk the antecedent's elements in order, matching each against a
    /// distinct judgment under the bindings accumulated so far. A still-free
    /// variable element accepts only thing-class judgments; anything else
    /// gates by structure.
    fn fill_elements(
        &self,
        un: &Unifier<'_>,
        elements: &[Term],
        idx: usize,
        outcome: &UnifyOutcome,
        chosen: &mut Vec<JudgmentId>,
        out: &mut Vec<Vec<JudgmentId>>,
    ) {
        if idx == elements.len() {
            out.push(chosen.clone());
            return;
        }
        let element = &elements[idx];
        let free_variable = matches!(element, Term::Variable { name }
            if outcome.substitution.get(name).is_none());
        for j in self.kb.iter() {
            if chosen.contains(&j.id) {
                continue;
            }
            if free_variable && j.class() != TermClass::C {
                continue;
            }
            if let Ok(next) = un.extend(outcome, element, &j.term) {
                chosen.push(j.id);
                self.fill_elements(un, elements, idx + 1, &next, chosen, out);
                chosen.pop();
            }
        }
    }

    fn pop_best(&mut self) -> Option<Candidate> {
        self.frontier.pop().map(|h| h.0)
    }

    fn prune(&mut self) {
        if self.frontier.len() > self.settings.beam_width {
            let mut kept: Vec<Candidate> = self.frontier.drain().map(|h| h.0).collect();
            kept.sort_by(candidate_order);
            kept.truncate(self.settings.beam_width);
            self.frontier = kept.into_iter().map(HeapCandidate).collect();
        }
    }

    fn process(&mut self, candidate: Candidate) -> ControlFlow<Outcome> {
        let conclusion_depth = candidate.depth + 1;
        let (premises, conclusions) = self.generate(&candidate.shape);
        for conclusion in conclusions {
            if self.steps.len() >= self.settings.max_steps {
                return ControlFlow::Break(Outcome::Exhausted { reason: ExhaustReason::Budget });
            }
            if conclusion_depth > self.settings.max_depth {
                continue;
            }
            if let Some(existing) = self.kb.find(&conclusion.term) {
                if existing.confidence >= conclusion.confidence {
                    continue;
                }
            }
            let step_id = (self.steps.len() + 1) as StepId;
            let result = self.kb.assert_judgment(
                conclusion.term.clone(),
                conclusion.confidence,
                Provenance::Derived { step: step_id },
            );
            let mut inserted = Vec::new();
            if result.effect == AssertEffect::Inserted {
                self.defining_step.insert(result.id, step_id);
                self.depth.insert(result.id, conclusion_depth);
                inserted.push(result.id);
            }
            self.steps.push(Step {
                id: step_id,
                rule: conclusion.kind,
                pattern: conclusion.pattern,
                direction: conclusion.direction,
                strength: conclusion.strength,
                premises: premises.clone(),
                substitution: conclusion.substitution.clone(),
                merges: conclusion.merges.clone(),
                conclusion_id: result.id,
                conclusion: conclusion.term.clone(),
                confidence: conclusion.confidence,
                focus_path: conclusion.focus_path.clone(),
            });
            // Each merge is itself a recognition: keep it as an identity
            // judgment, graded by the similarity, without a step of its own.
            let identity = self
                .registry
                .by_id("<->")
                .cloned()
                .unwrap_or_else(Copula::identity);
            for merge in &conclusion.merges {
                let fact = Term::Statement {
                    copula: identity.clone(),
                    left: Box::new(merge.left.clone()),
                    right: Box::new(merge.right.clone()),
                };
                if let Some(existing) = self.kb.find(&fact) {
                    if existing.confidence >= merge.similarity {
                        continue;
                    }
                }
                let r = self.kb.assert_judgment(
                    fact,
                    merge.similarity,
                    Provenance::Derived { step: step_id },
                );
                if r.effect == AssertEffect::Inserted {
                    self.defining_step.insert(r.id, step_id);
                    self.depth.insert(r.id, conclusion_depth);
                    inserted.push(r.id);
                }
            }
            if let Some(outcome) = self.check_goal(step_id) {
                return ControlFlow::Break(outcome);
            }
            for id in inserted {
                let others: Vec<JudgmentId> =
                    self.kb.iter().map(|j| j.id).filter(|&o| o != id).collect();
                for other in others {
                    self.schedule_pair(other.min(id), other.max(id));
                }
            }
            self.schedule_conj_focus();
            self.prune();
        }
        ControlFlow::Continue(())
    }

    fn check_goal(&self, step_id: StepId) -> Option<Outcome> {
        let step = self.step(step_id).expect("the step was just recorded");
        let outcome = self.goal_match(&step.conclusion)?;
        match self.mode {
            Mode::Explain => Some(Outcome::Explained { path: self.path_of(step_id) }),
            Mode::Solve => {
                let goal = self.goal.as_ref().expect("goal is set for the whole run");
                let eligible = goal.is_ground() || step.strength == Strength::Strong;
                eligible.then(|| Outcome::Answered {
                    step: Some(step_id),
                    term: step.conclusion.clone(),
                    bindings: self.goal_bindings(&outcome),
                    confidence: step.confidence,
                })
            }
        }
    }

    /// Steps the given step rests on, itself included, ascending.
    pub fn path_of(&self, step_id: StepId) -> Vec<StepId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![step_id];
        while let Some(s) = stack.pop() {
            if !seen.insert(s) {
                continue;
            }
            let Some(step) = self.step(s) else { continue };
            for premise in &step.premises {
                if let Some(&definer) = self.defining_step.get(premise) {
                    stack.push(definer);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// Serializable account of the run. Call after `solve` or `explain`.
    pub fn trace(&self) -> Trace {
        let outcome = self
            .outcome
            .as_ref()
            .expect("trace is built after a solve or explain run");
        Trace {
            version: TRACE_VERSION.to_string(),
            config: TraceConfig {
                theta: self.settings.theta,
                strong: self.policy.strong,
                weak: self.policy.weak,
                focus: self.policy.focus,
                copula_order: self.policy.copula_order.clone(),
                max_steps: self.settings.max_steps,
                max_depth: self.settings.max_depth,
                beam_width: self.settings.beam_width,
                soft_goal: self.settings.soft_goal,
            },
            steps: self.steps.iter().map(trace_step).collect(),
            outcome: trace_outcome(outcome),
        }
    }
}

pub const TRACE_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub theta: f64,
    pub strong: f64,
    pub weak: f64,
    pub focus: f64,
    pub copula_order: Vec<String>,
    pub max_steps: usize,
    pub max_depth: usize,
    pub beam_width: usize,
    pub soft_goal: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMerge {
    pub left: String,
    pub right: String,
    pub similarity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub id: StepId,
    pub rule: String,
    pub pattern: Option<String>,
    pub direction: String,
    pub premises: Vec<JudgmentId>,
    pub substitution: BTreeMap<String, String>,
    pub merges: Vec<TraceMerge>,
    pub conclusion_id: JudgmentId,
    pub conclusion: String,
    pub t: f64,
    pub path: Option<TermPath>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TraceOutcome {
    Answered {
        step: Option<StepId>,
        term: String,
        bindings: BTreeMap<String, String>,
        confidence: f64,
    },
    Explained {
        path: Vec<StepId>,
    },
    Exhausted {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub version: String,
    pub config: TraceConfig,
    pub steps: Vec<TraceStep>,
    pub outcome: TraceOutcome,
}

impl Trace {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("traces serialize cleanly");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Trace, serde_json::Error> {
        serde_json::from_str(text)
    }
}

fn trace_step(step: &Step) -> TraceStep {
    TraceStep {
        id: step.id,
        rule: step.rule.to_string(),
        pattern: step.pattern.map(|p| p.to_string()),
        direction: step.direction.to_string(),
        premises: step.premises.clone(),
        substitution: step.substitution.rendered(),
        merges: step
            .merges
            .iter()
            .map(|m| TraceMerge {
                left: m.left.to_string(),
                right: m.right.to_string(),
                similarity: m.similarity,
            })
            .collect(),
        conclusion_id: step.conclusion_id,
        conclusion: step.conclusion.to_string(),
        t: step.confidence,
        path: step.focus_path.clone(),
    }
}

fn trace_outcome(outcome: &Outcome) -> TraceOutcome {
    match outcome {
        Outcome::Answered { step, term, bindings, confidence } => TraceOutcome::Answered {
            step: *step,
            term: term.to_string(),
            bindings: bindings.iter().map(|(k, v)| (k.clone(), v.to_string())).collect(),
            confidence: *confidence,
        },
        Outcome::Explained { path } => TraceOutcome::Explained { path: path.clone() },
        Outcome::Exhausted { reason } => {
            TraceOutcome::Exhausted { reason: reason.to_string() }
        }
    }
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("step {0}: premise judgment {1} is missing")]
    MissingPremise(StepId, JudgmentId),
    #[error("step {step}: no {rule} conclusion matches `{expected}` at t={t}")]
    NoMatch { step: StepId, rule: String, expected: String, t: f64 },
    #[error("step {step}: conclusion landed on judgment {got}, trace says {expected}")]
    IdMismatch { step: StepId, got: JudgmentId, expected: JudgmentId },
    #[error("step {step}: {message}")]
    Malformed { step: StepId, message: String },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Re-run a trace against the given judgments: every step must reproduce its
/// recorded conclusion, confidence, and judgment id. This checks traces
/// without re-running the search that found them.
pub fn replay(
    trace: &Trace,
    givens: &[SourceJudgment],
    registry: &CopulaRegistry,
    provider: &dyn EmbeddingProvider,
) -> Result<(), ReplayError> {
    let policy = ConfidencePolicy {
        strong: trace.config.strong,
        weak: trace.config.weak,
        focus: trace.config.focus,
        copula_order: trace.config.copula_order.clone(),
    };
    let un = Unifier::soft(provider, trace.config.theta);
    let mut kb = KnowledgeBase::new();
    for given in givens {
        kb.assert_source(given);
    }
    let identity = registry.by_id("<->").cloned().unwrap_or_else(Copula::identity);
    for step in &trace.steps {
        let malformed = |message: String| ReplayError::Malformed { step: step.id, message };
        let premise = |id: JudgmentId, kb: &KnowledgeBase| {
            kb.get(id)
                .map(|j| (j.term.clone(), j.confidence))
                .ok_or(ReplayError::MissingPremise(step.id, id))
        };
        let expected = syntax::parse_term(&step.conclusion, registry)?;
        let two = |kb: &KnowledgeBase| -> Result<_, ReplayError> {
            if step.premises.len() != 2 {
                return Err(malformed(format!(
                    "{} takes two premises, got {}",
                    step.rule,
                    step.premises.len()
                )));
            }
            Ok((premise(step.premises[0], kb)?, premise(step.premises[1], kb)?))
        };
        let conclusions: Vec<Conclusion> = match step.rule.as_str() {
            "SS" => {
                let (a, b) = two(&kb)?;
                rules::apply_ss((&a.0, a.1), (&b.0, b.1), &un, &policy)
            }
            "LL" => {
                let (a, b) = two(&kb)?;
                rules::apply_ll((&a.0, a.1), (&b.0, b.1), &un, &policy)
            }
            "SC" => {
                let (a, b) = two(&kb)?;
                rules::apply_sc((&a.0, a.1), (&b.0, b.1), &un, &policy)
            }
            "SL" => {
                let (a, b) = two(&kb)?;
                rules::apply_sl((&a.0, a.1), (&b.0, b.1), &un, &policy).into_iter().collect()
            }
            "CL" => {
                let (a, b) = two(&kb)?;
                rules::apply_cl((&a.0, a.1), (&b.0, b.1), &un, &policy).into_iter().collect()
            }
            "CONJ" => {
                let Term::Compound { relation, .. } = &expected else {
                    return Err(malformed("CONJ conclusion is not a compound".into()));
                };
                let parts = step
                    .premises
                    .iter()
                    .map(|&id| premise(id, &kb))
                    .collect::<Result<Vec<_>, _>>()?;
                rules::conjoin(relation, &parts, &policy).into_iter().collect()
            }
            "FOCUS" => {
                let path = step
                    .path
                    .clone()
                    .ok_or_else(|| malformed("FOCUS step without a path".into()))?;
                if step.premises.len() != 1 {
                    return Err(malformed("FOCUS takes one premise".into()));
                }
                let src = premise(step.premises[0], &kb)?;
                rules::extract_focus((&src.0, src.1), &path, &policy).into_iter().collect()
            }
            other => return Err(malformed(format!("unknown rule `{other}`"))),
        };
        let Some(found) = conclusions
            .iter()
            .find(|c| c.term == expected && (c.confidence - step.t).abs() <= 1e-9)
        else {
            return Err(ReplayError::NoMatch {
                step: step.id,
                rule: step.rule.clone(),
                expected: step.conclusion.clone(),
                t: step.t,
            });
        };
        let result = kb.assert_judgment(
            found.term.clone(),
            found.confidence,
            Provenance::Derived { step: step.id },
        );
        if result.id != step.conclusion_id {
            return Err(ReplayError::IdMismatch {
                step: step.id,
                got: result.id,
                expected: step.conclusion_id,
            });
        }
        for merge in &step.merges {
            let left = syntax::parse_term(&merge.left, registry)?;
            let right = syntax::parse_term(&merge.right, registry)?;
            let fact = Term::Statement {
                copula: identity.clone(),
                left: Box::new(left),
                right: Box::new(right),
            };
            if kb.find(&fact).map_or(true, |j| j.confidence < merge.similarity) {
                kb.assert_judgment(fact, merge.similarity, Provenance::Derived { step: step.id });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{HashEmbedding, SynonymTable};
    use crate::syntax::{parse_kb, parse_term};

    fn registry() -> CopulaRegistry {
        CopulaRegistry::default()
    }

    fn t(s: &str) -> Term {
        parse_term(s, &registry()).unwrap()
    }

    fn reasoner(kb_text: &str) -> Reasoner {
        reasoner_with(kb_text, HashEmbedding::with_defaults(), ReasonerSettings::default())
    }

    fn reasoner_with(kb_text: &str, provider: HashEmbedding, settings: ReasonerSettings) -> Reasoner {
        let reg = registry();
        let kb = KnowledgeBase::load_str(kb_text, &reg).unwrap();
        Reasoner::new(kb, reg, Box::new(provider), ConfidencePolicy::default(), settings)
    }

    #[test]
    fn solves_a_ground_chaining_goal() {
        let mut r = reasoner("human -> animal\nanimal -> mammal\n");
        let out = r.solve(&t("human -> mammal"));
        let Outcome::Answered { step, confidence, .. } = out else { panic!("{out:?}") };
        assert_eq!(step, Some(1));
        assert_eq!(confidence, 1.0);
        assert_eq!(r.steps().len(), 1);
    }

    #[test]
    fn known_ground_goals_need_no_steps() {
        let mut r = reasoner("human -> animal\n");
        let out = r.solve(&t("human -> animal"));
        let Outcome::Answered { step, confidence, .. } = out else { panic!("{out:?}") };
        assert_eq!(step, None);
        assert_eq!(confidence, 1.0);
        assert!(r.steps().is_empty());
    }

    #[test]
    fn pattern_goals_ignore_givens_and_weak_steps() {
        // The color question: the given (Greg -> swan) matches the pattern but
        // must not answer it, and neither may weak generalizations.
        let mut r = reasoner("Lily -> swan\nLily -> white\nGreg -> swan\n");
        let out = r.solve(&t("Greg -> $c"));
        let Outcome::Answered { step, bindings, .. } = out else { panic!("{out:?}") };
        assert_eq!(bindings.get("c"), Some(&t("white")));
        let answering = step.unwrap();
        assert_eq!(r.step(answering).unwrap().strength, Strength::Strong);
        assert!(r.path_of(answering).len() <= 2, "{:?}", r.path_of(answering));
    }

    #[test]
    fn explain_reports_the_ancestor_steps() {
        let mut r = reasoner("a -> b\nb -> c\nc -> d\n");
        let out = r.explain(&t("a -> d"));
        let Outcome::Explained { path } = out else { panic!("{out:?}") };
        assert_eq!(path.len(), 2);
        let last = *path.last().unwrap();
        assert_eq!(r.step(last).unwrap().conclusion, t("a -> d"));
        // The path is ascending and closed under premises.
        assert!(path.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn explaining_a_given_needs_no_steps() {
        let mut r = reasoner("a -> b\n");
        assert_eq!(r.explain(&t("a -> b")), Outcome::Explained { path: vec![] });
    }

    #[test]
    fn step_budget_stops_the_run() {
        let settings = ReasonerSettings { max_steps: 1, ..ReasonerSettings::default() };
        let mut r = reasoner_with(
            "Lily -> swan\nLily -> white\nGreg -> swan\n",
            HashEmbedding::with_defaults(),
            settings,
        );
        let out = r.solve(&t("swan -> Greg"));
        assert_eq!(out, Outcome::Exhausted { reason: ExhaustReason::Budget });
        assert_eq!(r.steps().len(), 1);
    }

    #[test]
    fn merges_become_identity_judgments_without_steps() {
        let table = SynonymTable::parse("weather-of-today weather-of-the-day\n").unwrap();
        let provider = HashEmbedding::new(64, 0, table);
        let mut r = reasoner_with(
            "weather-of-today -> bad\n((weather-of-the-day -> bad) => no-school)\n",
            provider,
            ReasonerSettings::default(),
        );
        let out = r.solve(&t("no-school"));
        assert!(matches!(out, Outcome::Answered { step: Some(1), .. }), "{out:?}");
        assert_eq!(r.steps().len(), 1);
        let fact = r.kb().find(&t("weather-of-today <-> weather-of-the-day")).unwrap();
        assert!(fact.confidence > 0.85 && fact.confidence < 1.0);
        assert!(matches!(fact.provenance, Provenance::Derived { step: 1 }));
    }

    #[test]
    fn theta_gates_soft_conclusions() {
        let table = SynonymTable::parse("weather-of-today weather-of-the-day\n").unwrap();
        let provider = HashEmbedding::new(64, 0, table);
        let settings = ReasonerSettings { theta: 0.99, ..ReasonerSettings::default() };
        let mut r = reasoner_with(
            "weather-of-today -> bad\n((weather-of-the-day -> bad) => no-school)\n",
            provider,
            settings,
        );
        let out = r.solve(&t("no-school"));
        assert_eq!(out, Outcome::Exhausted { reason: ExhaustReason::Frontier });
    }

    #[test]
    fn runs_are_deterministic() {
        let kb = "Lily -> swan\nLily -> white\nGreg -> swan\n";
        let goal = t("Greg -> $c");
        let run = |_: ()| {
            let mut r = reasoner(kb);
            r.solve(&goal);
            r.trace().to_json()
        };
        assert_eq!(run(()), run(()));
    }

    #[test]
    fn traces_replay_against_the_original_kb() {
        let reg = registry();
        let kb_text = "\
S_D: weather-of-the-day -> raining
S_W: getting-wet -> bad
L_1: ((causal-and, $x, bad) => (avoid, people, $x))
L_2: ((weather-of-the-day -> raining) => getting-wet)
L_3: ((have, $x, umbrella) => (avoid, $x, getting-wet))
";
        let mut r = reasoner(kb_text);
        let out = r.explain(&t("(have, people, umbrella)"));
        assert!(matches!(out, Outcome::Explained { .. }), "{out:?}");
        let trace = r.trace();
        let givens = parse_kb(kb_text, &reg).unwrap();
        replay(&trace, &givens, &reg, &HashEmbedding::with_defaults()).unwrap();
        // A tampered confidence no longer replays.
        let mut bad = trace.clone();
        bad.steps[0].t = 0.123;
        let err = replay(&bad, &givens, &reg, &HashEmbedding::with_defaults()).unwrap_err();
        assert!(matches!(err, ReplayError::NoMatch { step: 1, .. }), "{err}");
    }

    #[test]
    fn trace_json_round_trips() {
        let mut r = reasoner("human -> animal\nanimal -> mammal\n");
        r.solve(&t("human -> mammal"));
        let trace = r.trace();
        let back = Trace::from_json(&trace.to_json()).unwrap();
        assert_eq!(trace, back);
        assert_eq!(back.version, TRACE_VERSION);
        assert_eq!(back.steps[0].rule, "SS");
        assert_eq!(back.steps[0].pattern.as_deref(), Some("deduction"));
    }
}
