//! Word-vector training on co-occurrence counts.
//!
//! Two objectives are supported:
//!
//! * `SN`: squared loss fitting `log X_{w,w'}` to `||v_w + v_w'||^2 + C`,
//!   minimized by AdaGrad SGD over the nonzero pairs.
//! * `PMI`: squared loss fitting `pmi(w, w')` to `<v_w, v_w'>`, minimized by
//!   the same SGD and then polished by coordinate-wise least squares so that
//!   every word vector is stationary for its own weighted subproblem. The
//!   single-word version of that subproblem, [`fit_pmi`], is what re-embeds
//!   a merged word while all other vectors stay fixed.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CooccurrenceStore, Vocabulary, WordId};
use crate::error::{Error, Result};
use crate::linalg;

const ADAGRAD_EPS: f64 = 1e-8;

/// Dense word vectors plus the SN bias constant.
#[derive(Debug, Clone)]
pub struct EmbeddingSet {
    dim: usize,
    words: Vec<String>,
    vectors: Vec<f64>,
    index: HashMap<String, usize>,
    bias_c: f64,
}

impl EmbeddingSet {
    pub fn zeros(words: Vec<String>, dim: usize) -> Self {
        let n = words.len();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        EmbeddingSet {
            dim,
            words,
            vectors: vec![0.0; n * dim],
            index,
            bias_c: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn bias_c(&self) -> f64 {
        self.bias_c
    }

    pub fn set_bias_c(&mut self, c: f64) {
        self.bias_c = c;
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vector_of(&self, word: &str) -> Option<&[f64]> {
        self.position(word).map(|i| self.vector(i))
    }

    pub fn vector_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Multiplies every vector by `s` (used to calibrate inner-product scale).
    pub fn rescale(&mut self, s: f64) {
        for v in self.vectors.iter_mut() {
            *v *= s;
        }
    }

    pub fn write_text<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (i, w) in self.words.iter().enumerate() {
            write!(out, "{w}")?;
            for v in self.vector(i) {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_text<R: Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let header = lines.next().ok_or(Error::Format {
            what: "embedding text",
            line: 1,
            detail: "missing header".into(),
        })??;
        let mut hp = header.split_whitespace();
        let n: usize = hp
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(Error::Format {
                what: "embedding text",
                line: 1,
                detail: "bad N".into(),
            })?;
        let dim: usize = hp
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or(Error::Format {
                what: "embedding text",
                line: 1,
                detail: "bad d".into(),
            })?;
        let mut words = Vec::with_capacity(n);
        let mut vectors = Vec::with_capacity(n * dim);
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let w = parts.next().unwrap().to_string();
            let vals: std::result::Result<Vec<f64>, _> = parts.map(str::parse).collect();
            let vals = vals.map_err(|e| Error::Format {
                what: "embedding text",
                line: lineno + 2,
                detail: format!("bad float: {e}"),
            })?;
            if vals.len() != dim {
                return Err(Error::Format {
                    what: "embedding text",
                    line: lineno + 2,
                    detail: format!("expected {dim} values, got {}", vals.len()),
                });
            }
            words.push(w);
            vectors.extend(vals);
        }
        if words.len() != n {
            return Err(Error::Format {
                what: "embedding text",
                line: 0,
                detail: format!("header says {n} rows, found {}", words.len()),
            });
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(EmbeddingSet {
            dim,
            words,
            vectors,
            index,
            bias_c: 0.0,
        })
    }
}

/// Hyperparameters shared by both trainers.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Optional cap on the co-occurrence weight X (GloVe-style truncation).
    pub weight_cap: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 300,
            epochs: 25,
            learning_rate: 0.05,
            seed: 1,
            weight_cap: None,
        }
    }
}

/// PMI trainer options on top of the shared SGD settings.
#[derive(Debug, Clone)]
pub struct PmiTrainConfig {
    pub base: TrainConfig,
    /// Coordinate least-squares sweeps applied after SGD.
    pub polish_sweeps: usize,
    /// Relative ridge used in the polish sweeps and matching refits.
    pub ridge_rel: f64,
}

impl Default for PmiTrainConfig {
    fn default() -> Self {
        PmiTrainConfig {
            base: TrainConfig::default(),
            polish_sweeps: 3,
            ridge_rel: 1e-3,
        }
    }
}

/// Result of a single-word PMI refit.
#[derive(Debug, Clone)]
pub struct PmiFit {
    pub vector: Vec<f64>,
    /// True when the ridge regularizer had to be activated.
    pub rank_deficient: bool,
}

fn init_vectors(n: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 / dim as f64;
    (0..n * dim).map(|_| rng.gen_range(-half..half)).collect()
}

struct PairData {
    i: Vec<WordId>,
    j: Vec<WordId>,
    weight: Vec<f64>,
    target: Vec<f64>,
}

/// Nonzero unordered pairs with SN targets `log X` and weights `X`
/// (optionally capped). Self-pairs are kept: they are real co-occurrences.
fn sn_pairs(store: &CooccurrenceStore, cap: Option<f64>) -> PairData {
    let mut p = PairData {
        i: Vec::new(),
        j: Vec::new(),
        weight: Vec::new(),
        target: Vec::new(),
    };
    for ((i, j), x) in store.sorted_entries() {
        if x <= 0.0 {
            continue;
        }
        p.i.push(i);
        p.j.push(j);
        p.weight.push(cap.map_or(x, |c| x.min(c)));
        p.target.push(x.ln());
    }
    p
}

/// Nonzero unordered pairs with PMI targets weighted by joint probability.
/// Self-pairs are excluded: the model term would be quadratic in one vector.
fn pmi_pairs(store: &CooccurrenceStore, vocab: &Vocabulary) -> PairData {
    let mut p = PairData {
        i: Vec::new(),
        j: Vec::new(),
        weight: Vec::new(),
        target: Vec::new(),
    };
    for ((i, j), x) in store.sorted_entries() {
        if x <= 0.0 || i == j {
            continue;
        }
        let joint = x / store.total_pairs();
        let pmi = (joint / (vocab.probability(i) * vocab.probability(j))).ln();
        p.i.push(i);
        p.j.push(j);
        p.weight.push(joint);
        p.target.push(pmi);
    }
    p
}

/// SN objective value at the given embeddings (raw weight scale).
pub fn sn_objective(store: &CooccurrenceStore, emb: &EmbeddingSet, cap: Option<f64>) -> f64 {
    let pairs = sn_pairs(store, cap);
    let d = emb.dim();
    let mut total = 0.0;
    for k in 0..pairs.i.len() {
        let vi = emb.vector(pairs.i[k] as usize);
        let vj = emb.vector(pairs.j[k] as usize);
        let mut nrm = 0.0;
        for c in 0..d {
            let s = vi[c] + vj[c];
            nrm += s * s;
        }
        let e = pairs.target[k] - nrm - emb.bias_c();
        total += pairs.weight[k] * e * e;
    }
    total
}

/// Analytic SN gradient with respect to all vectors and C, for the same
/// objective as [`sn_objective`]. Returned as (loss, flat gradient, dC).
pub fn sn_loss_and_grad(
    store: &CooccurrenceStore,
    emb: &EmbeddingSet,
    cap: Option<f64>,
) -> (f64, Vec<f64>, f64) {
    let pairs = sn_pairs(store, cap);
    let d = emb.dim();
    let mut grad = vec![0.0; emb.len() * d];
    let mut grad_c = 0.0;
    let mut loss = 0.0;
    for k in 0..pairs.i.len() {
        let (i, j) = (pairs.i[k] as usize, pairs.j[k] as usize);
        let vi = emb.vector(i);
        let vj = emb.vector(j);
        let mut nrm = 0.0;
        for c in 0..d {
            let s = vi[c] + vj[c];
            nrm += s * s;
        }
        let e = pairs.target[k] - nrm - emb.bias_c();
        let w = pairs.weight[k];
        loss += w * e * e;
        let coef = -4.0 * w * e;
        for c in 0..d {
            let s = vi[c] + vj[c];
            grad[i * d + c] += coef * s;
            grad[j * d + c] += coef * s;
        }
        grad_c += -2.0 * w * e;
    }
    (loss, grad, grad_c)
}

/// PMI objective value at the given embeddings.
pub fn pmi_objective(store: &CooccurrenceStore, vocab: &Vocabulary, emb: &EmbeddingSet) -> f64 {
    let pairs = pmi_pairs(store, vocab);
    let mut total = 0.0;
    for k in 0..pairs.i.len() {
        let vi = emb.vector(pairs.i[k] as usize);
        let vj = emb.vector(pairs.j[k] as usize);
        let e = pairs.target[k] - linalg::dot(vi, vj);
        total += pairs.weight[k] * e * e;
    }
    total
}

enum Objective {
    Sn,
    Pmi,
}

/// Sequential AdaGrad SGD over shuffled pairs. Deterministic given the seed.
/// Returns the per-epoch loss history (normalized weight scale).
fn sgd_train(
    emb: &mut EmbeddingSet,
    pairs: &PairData,
    cfg: &TrainConfig,
    objective: Objective,
) -> Result<Vec<f64>> {
    let d = emb.dim();
    let n_pairs = pairs.i.len();
    let mean_w: f64 = pairs.weight.iter().sum::<f64>() / n_pairs.max(1) as f64;
    let weights: Vec<f64> = pairs.weight.iter().map(|w| w / mean_w).collect();

    let mut accum = vec![ADAGRAD_EPS; emb.len() * d];
    let mut accum_c = ADAGRAD_EPS;
    let mut order: Vec<usize> = (0..n_pairs).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let lr = cfg.learning_rate;
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        for &k in &order {
            let (i, j) = (pairs.i[k] as usize, pairs.j[k] as usize);
            let w = weights[k];
            match objective {
                Objective::Sn => {
                    let mut nrm = 0.0;
                    for c in 0..d {
                        let s = emb.vectors[i * d + c] + emb.vectors[j * d + c];
                        nrm += s * s;
                    }
                    let e = pairs.target[k] - nrm - emb.bias_c;
                    loss += w * e * e;
                    let coef = -4.0 * w * e;
                    // a self-pair receives the endpoint gradient twice
                    let mult = if i == j { 2.0 } else { 1.0 };
                    for c in 0..d {
                        let s = emb.vectors[i * d + c] + emb.vectors[j * d + c];
                        let g = mult * coef * s;
                        if i == j {
                            accum[i * d + c] += g * g;
                            emb.vectors[i * d + c] -= lr * g / accum[i * d + c].sqrt();
                        } else {
                            accum[i * d + c] += g * g;
                            emb.vectors[i * d + c] -= lr * g / accum[i * d + c].sqrt();
                            accum[j * d + c] += g * g;
                            emb.vectors[j * d + c] -= lr * g / accum[j * d + c].sqrt();
                        }
                    }
                    let gc = -2.0 * w * e;
                    accum_c += gc * gc;
                    emb.bias_c -= lr * gc / accum_c.sqrt();
                }
                Objective::Pmi => {
                    let mut pred = 0.0;
                    for c in 0..d {
                        pred += emb.vectors[i * d + c] * emb.vectors[j * d + c];
                    }
                    let e = pairs.target[k] - pred;
                    loss += w * e * e;
                    let coef = -2.0 * w * e;
                    for c in 0..d {
                        let gi = coef * emb.vectors[j * d + c];
                        let gj = coef * emb.vectors[i * d + c];
                        accum[i * d + c] += gi * gi;
                        emb.vectors[i * d + c] -= lr * gi / accum[i * d + c].sqrt();
                        accum[j * d + c] += gj * gj;
                        emb.vectors[j * d + c] -= lr * gj / accum[j * d + c].sqrt();
                    }
                }
            }
        }
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(loss);
    }
    Ok(history)
}

/// Trains SN embeddings: `log X ~ ||v_w + v_w'||^2 + C`.
pub fn train_sn(
    store: &CooccurrenceStore,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
) -> Result<EmbeddingSet> {
    let pairs = sn_pairs(store, cfg.weight_cap);
    if pairs.i.is_empty() {
        return Err(Error::Config("co-occurrence store has no nonzero pairs".into()));
    }
    let mut emb = EmbeddingSet::zeros(vocab.words().to_vec(), cfg.dim);
    emb.vectors = init_vectors(vocab.len(), cfg.dim, cfg.seed);
    // start C at the weighted mean target so early gradients are balanced
    let wsum: f64 = pairs.weight.iter().sum();
    emb.bias_c = pairs
        .weight
        .iter()
        .zip(&pairs.target)
        .map(|(w, t)| w * t)
        .sum::<f64>()
        / wsum;
    sgd_train(&mut emb, &pairs, cfg, Objective::Sn)?;
    Ok(emb)
}

/// Trains PMI embeddings: `pmi(w, w') ~ <v_w, v_w'>`, then polishes with
/// coordinate least squares so each vector solves its own weighted subproblem.
pub fn train_pmi(
    store: &CooccurrenceStore,
    vocab: &Vocabulary,
    cfg: &PmiTrainConfig,
) -> Result<EmbeddingSet> {
    let pairs = pmi_pairs(store, vocab);
    if pairs.i.is_empty() {
        return Err(Error::Config("co-occurrence store has no nonzero pairs".into()));
    }
    let mut emb = EmbeddingSet::zeros(vocab.words().to_vec(), cfg.base.dim);
    emb.vectors = init_vectors(vocab.len(), cfg.base.dim, cfg.base.seed);
    sgd_train(&mut emb, &pairs, &cfg.base, Objective::Pmi)?;

    // adjacency for the polish sweeps
    let n = vocab.len();
    let mut adj: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); n];
    for k in 0..pairs.i.len() {
        let (i, j) = (pairs.i[k] as usize, pairs.j[k] as usize);
        adj[i].push((j, pairs.weight[k], pairs.target[k]));
        adj[j].push((i, pairs.weight[k], pairs.target[k]));
    }
    let d = cfg.base.dim;
    for _ in 0..cfg.polish_sweeps {
        for i in 0..n {
            if adj[i].is_empty() {
                continue;
            }
            let design: Vec<&[f64]> = adj[i].iter().map(|&(j, _, _)| emb.vector(j)).collect();
            let weights: Vec<f64> = adj[i].iter().map(|&(_, w, _)| w).collect();
            let targets: Vec<f64> = adj[i].iter().map(|&(_, _, t)| t).collect();
            let (x, _) = linalg::solve_wls(&design, &weights, &targets, d, cfg.ridge_rel);
            emb.vector_mut(i).copy_from_slice(&x);
        }
    }
    Ok(emb)
}

/// Pointwise mutual information of two vocabulary words under the empirical
/// pair and unigram distributions.
pub fn pmi(store: &CooccurrenceStore, vocab: &Vocabulary, w1: &str, w2: &str) -> Result<f64> {
    let i = vocab.require(w1)?;
    let j = vocab.require(w2)?;
    let x = store.get(i, j);
    if x <= 0.0 {
        return Err(Error::UndefinedPmi {
            w1: w1.to_string(),
            w2: w2.to_string(),
        });
    }
    let joint = x / store.total_pairs();
    Ok((joint / (vocab.probability(i) * vocab.probability(j))).ln())
}

/// Exact weighted-least-squares refit of one word under the PMI model, all
/// other vectors fixed. The target's own vector never enters the design; its
/// self-pair (if any) is skipped.
pub fn fit_pmi(
    store: &CooccurrenceStore,
    vocab: &Vocabulary,
    fixed: &EmbeddingSet,
    target_word: &str,
) -> Result<PmiFit> {
    fit_pmi_with_ridge(store, vocab, fixed, target_word, 0.0)
}

/// [`fit_pmi`] with an explicit relative ridge. A ridge of 0 means "exact
/// solve, minimal fallback only for singular designs"; training pipelines
/// that polished with a ridge should refit with the same one.
pub fn fit_pmi_with_ridge(
    store: &CooccurrenceStore,
    vocab: &Vocabulary,
    fixed: &EmbeddingSet,
    target_word: &str,
    ridge_rel: f64,
) -> Result<PmiFit> {
    let w = vocab.require(target_word)?;
    let p_w = vocab.probability(w);
    let mut design: Vec<&[f64]> = Vec::new();
    let mut weights = Vec::new();
    let mut targets = Vec::new();
    for (chi, x) in store.row(w) {
        if chi == w || x <= 0.0 {
            continue;
        }
        let chi_word = vocab.word(chi);
        let v = fixed
            .vector_of(chi_word)
            .ok_or_else(|| Error::MissingWord(chi_word.to_string()))?;
        let joint = x / store.total_pairs();
        let pmi = (joint / (vocab.probability(chi) * p_w)).ln();
        design.push(v);
        weights.push(joint);
        targets.push(pmi);
    }
    if design.is_empty() {
        return Err(Error::EmptyContext(target_word.to_string()));
    }
    let (vector, rank_deficient) =
        linalg::solve_wls(&design, &weights, &targets, fixed.dim(), ridge_rel);
    Ok(PmiFit {
        vector,
        rank_deficient,
    })
}
