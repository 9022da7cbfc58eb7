//! Vector semantics: every term denotes a unit vector, composed bottom-up.

use std::cell::RefCell;
use std::collections::HashMap;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::term::{Polarity, Term};

/// Source of term vectors. The engine only relies on `dim`, `embed`, and
/// cosine `similarity`, so a trained model can replace the hash provider.
pub trait EmbeddingProvider {
    fn dim(&self) -> usize;

    /// Unit vector for a term. Composition must be deterministic.
    fn embed(&self, term: &Term) -> Vec<f64>;

    fn similarity(&self, a: &Term, b: &Term) -> f64 {
        cosine(&self.embed(a), &self.embed(b))
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[derive(Debug, Error)]
pub enum SynonymError {
    #[error("cannot read synonym table: {0}")]
    Io(#[from] std::io::Error),
    #[error("synonym table line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("synonym table line {line}: symbol `{symbol}` appears more than once")]
    DuplicateSymbol { line: usize, symbol: String },
}

/// Synonym clusters and antonym pairs for the hash provider.
///
/// File format: one cluster per line, members whitespace-separated; antonym
/// pairs on lines starting with `!`; `#` comments and blank lines ignored.
#[derive(Clone, Debug, Default)]
pub struct SynonymTable {
    clusters: Vec<Vec<String>>,
    antonyms: Vec<(String, String)>,
}

impl SynonymTable {
    pub fn parse(text: &str) -> Result<SynonymTable, SynonymError> {
        let mut table = SynonymTable::default();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (is_antonym, rest) = match line.strip_prefix('!') {
                Some(rest) => (true, rest),
                None => (false, line),
            };
            let symbols: Vec<String> = rest.split_whitespace().map(String::from).collect();
            for s in &symbols {
                if seen.insert(s.clone(), line_no).is_some() {
                    return Err(SynonymError::DuplicateSymbol { line: line_no, symbol: s.clone() });
                }
            }
            if is_antonym {
                if symbols.len() != 2 {
                    return Err(SynonymError::Format {
                        line: line_no,
                        message: format!("antonym lines take exactly two symbols, got {}", symbols.len()),
                    });
                }
                table.antonyms.push((symbols[0].clone(), symbols[1].clone()));
            } else {
                if symbols.len() < 2 {
                    return Err(SynonymError::Format {
                        line: line_no,
                        message: "a cluster needs at least two symbols".into(),
                    });
                }
                table.clusters.push(symbols);
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<SynonymTable, SynonymError> {
        SynonymTable::parse(&std::fs::read_to_string(path)?)
    }

    fn cluster_of(&self, symbol: &str) -> Option<(usize, &[String])> {
        self.clusters
            .iter()
            .enumerate()
            .find(|(_, c)| c.iter().any(|s| s == symbol))
            .map(|(i, c)| (i, c.as_slice()))
    }

    /// For the second member of an antonym pair, the first member's name.
    fn antonym_base(&self, symbol: &str) -> Option<&str> {
        self.antonyms.iter().find(|(_, b)| b == symbol).map(|(a, _)| a.as_str())
    }
}

/// Cosine forced between cluster members by the perturbation scale below;
/// sits above the 0.95 cluster-strength floor and below 0.99.
const CLUSTER_EPS: f64 = 0.18;

/// Index-rotation stride for position tagging.
const ROT_STRIDE: usize = 17;

/// Deterministic stand-in provider: each symbol hashes to a seeded unit
/// vector; compounds, statements, and linkages mix their parts with
/// per-position rotations so structure and order matter.
pub struct HashEmbedding {
    dim: usize,
    seed: u64,
    synonyms: SynonymTable,
    cache: RefCell<HashMap<String, Vec<f64>>>,
}

impl HashEmbedding {
    pub fn new(dim: usize, seed: u64, synonyms: SynonymTable) -> Self {
        assert!(dim >= 2, "embedding dimension must be at least 2");
        HashEmbedding { dim, seed, synonyms, cache: RefCell::new(HashMap::new()) }
    }

    pub fn with_defaults() -> Self {
        HashEmbedding::new(64, 0, SynonymTable::default())
    }

    /// FNV-1a; fixed so vectors are identical across processes and platforms.
    fn hash_key(key: &str) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in key.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }

    /// Fresh pseudo-random unit vector for a cache key.
    fn raw_vector(&self, key: &str) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(
            Self::hash_key(key) ^ self.seed.wrapping_mul(0x9e3779b97f4a7c15),
        );
        let mut v = Vec::with_capacity(self.dim);
        while v.len() < self.dim {
            // Box-Muller on two uniforms in (0, 1].
            let u1 = ((rng.next_u64() >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
            let u2 = ((rng.next_u64() >> 11) as f64 + 1.0) / (1u64 << 53) as f64;
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = std::f64::consts::TAU * u2;
            v.push(r * theta.cos());
            if v.len() < self.dim {
                v.push(r * theta.sin());
            }
        }
        normalize(&mut v);
        v
    }

    fn cached(&self, key: &str, build: impl FnOnce() -> Vec<f64>) -> Vec<f64> {
        if let Some(v) = self.cache.borrow().get(key) {
            return v.clone();
        }
        let v = build();
        self.cache.borrow_mut().insert(key.to_string(), v.clone());
        v
    }

    /// Symbol vector, token index stripped: tokens of a type share semantics.
    fn symbol_vector(&self, symbol: &str) -> Vec<f64> {
        let key = format!("sym:{symbol}");
        self.cached(&key, || {
            if let Some(base) = self.synonyms.antonym_base(symbol) {
                return self.symbol_vector(base).iter().map(|x| -x).collect();
            }
            if let Some((idx, members)) = self.synonyms.cluster_of(symbol) {
                let member_pos = members.iter().position(|s| s == symbol).unwrap();
                let mut v = self.raw_vector(&format!("cluster:{idx}"));
                let perturb = self.raw_vector(&format!("member:{idx}:{member_pos}"));
                for (x, p) in v.iter_mut().zip(&perturb) {
                    *x += CLUSTER_EPS * p;
                }
                normalize(&mut v);
                return v;
            }
            self.raw_vector(&key)
        })
    }

    fn copula_vector(&self, id: &str, polarity: Polarity, negation_of: Option<&str>) -> Vec<f64> {
        match (polarity, negation_of) {
            // A negated copula points exactly opposite its base.
            (Polarity::Negative, Some(base)) => {
                self.copula_vector(base, Polarity::Positive, None).iter().map(|x| -x).collect()
            }
            _ => self.cached(&format!("cop:{id}"), || self.raw_vector(&format!("cop:{id}"))),
        }
    }

    fn tag_vector(&self, kind: &str) -> Vec<f64> {
        self.cached(&format!("tag:{kind}"), || self.raw_vector(&format!("tag:{kind}")))
    }

    /// Rotate by a per-position stride; position 0 (head slot) is unrotated.
    fn rotated(&self, v: &[f64], position: usize) -> Vec<f64> {
        let shift = (position * ROT_STRIDE) % self.dim;
        let mut out = vec![0.0; self.dim];
        for (i, x) in v.iter().enumerate() {
            out[(i + shift) % self.dim] = *x;
        }
        out
    }

    fn mix(&self, parts: Vec<Vec<f64>>) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        for p in parts {
            for (s, x) in sum.iter_mut().zip(&p) {
                *s += x;
            }
        }
        normalize(&mut sum);
        sum
    }
}

fn normalize(v: &mut [f64]) {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

impl EmbeddingProvider for HashEmbedding {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, term: &Term) -> Vec<f64> {
        match term {
            Term::Basic { symbol, .. } => self.symbol_vector(symbol),
            Term::Variable { name } => self.cached(&format!("var:{name}"), || {
                self.raw_vector(&format!("var:{name}"))
            }),
            Term::Compound { relation, elements } => {
                let mut parts = vec![self.tag_vector("compound"), self.embed(relation)];
                for (i, e) in elements.iter().enumerate() {
                    parts.push(self.rotated(&self.embed(e), i + 1));
                }
                self.mix(parts)
            }
            Term::Statement { copula, left, right } => self.mix(vec![
                self.tag_vector("statement"),
                self.copula_vector(&copula.id, copula.polarity, copula.negation_of.as_deref()),
                self.rotated(&self.embed(left), 1),
                self.rotated(&self.embed(right), 2),
            ]),
            Term::Linkage { copula, left, right } => self.mix(vec![
                self.tag_vector("linkage"),
                self.copula_vector(&copula.id, copula.polarity, copula.negation_of.as_deref()),
                self.rotated(&self.embed(left), 1),
                self.rotated(&self.embed(right), 2),
            ]),
        }
    }
}
