//! Exact t-SNE: perplexity calibration by per-point bandwidth search,
//! KL-divergence gradient descent with early exaggeration and momentum.
//!
//! Exact O(N²), not Barnes-Hut: the corpora this maps are a few hundred
//! points, and exactness keeps the analytic gradient checkable against
//! finite differences.

use super::{EmbeddingMatrix, SpaceError};
use crate::corpus::Overlay;
use crate::space::map::{PlanarMap, PointKind};
use ndarray::Array2;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Gradient-descent hyperparameters. Defaults follow common t-SNE practice;
/// perplexity is clamped to `(N - 1) / 3` (floored at 2) for small inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub learning_rate: f64,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch_iter: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            learning_rate: 200.0,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            momentum_switch_iter: 250,
            seed: 0,
            init_scale: 1e-4,
        }
    }
}

impl TsneConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Perplexity actually used for `n` points.
    pub fn effective_perplexity(&self, n: usize) -> f64 {
        let cap = (n.saturating_sub(1)) as f64 / 3.0;
        self.perplexity.min(cap).max(2.0)
    }
}

/// Symmetrized affinities with the calibrated per-point bandwidths.
#[derive(Debug, Clone)]
pub struct AffinityMatrix {
    /// Symmetric, zero-diagonal, entries >= 0, total sum 1.
    pub p: Array2<f64>,
    pub sigmas: Vec<f64>,
}

fn squared_distances(vectors: &Array2<f64>) -> Array2<f64> {
    let n = vectors.nrows();
    let mut d2 = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = &vectors.row(i) - &vectors.row(j);
            let dist = diff.dot(&diff);
            d2[[i, j]] = dist;
            d2[[j, i]] = dist;
        }
    }
    d2
}

/// Conditional row i for precision `beta`, and its Shannon entropy in bits.
fn conditional_row(d2: &Array2<f64>, i: usize, beta: f64) -> (Vec<f64>, f64) {
    let n = d2.nrows();
    // Shift by the row minimum for numerical stability; the shift cancels in
    // the normalization.
    let min_d2 = (0..n)
        .filter(|&j| j != i)
        .map(|j| d2[[i, j]])
        .fold(f64::INFINITY, f64::min);
    let mut row = vec![0.0; n];
    let mut sum = 0.0;
    for j in 0..n {
        if j == i {
            continue;
        }
        let w = (-beta * (d2[[i, j]] - min_d2)).exp();
        row[j] = w;
        sum += w;
    }
    let mut entropy_bits = 0.0;
    for (j, value) in row.iter_mut().enumerate() {
        if j == i {
            continue;
        }
        *value /= sum;
        if *value > 0.0 {
            entropy_bits -= *value * value.log2();
        }
    }
    (row, entropy_bits)
}

/// Binary-search each point's Gaussian bandwidth until the conditional
/// distribution's log2-entropy matches log2(perplexity) within `tol`, then
/// symmetrize: `p_ij = (p_{j|i} + p_{i|j}) / 2N`.
pub fn calibrate_affinities(
    vectors: &Array2<f64>,
    perplexity: f64,
    tol: f64,
    max_iter: usize,
) -> Result<AffinityMatrix, SpaceError> {
    let n = vectors.nrows();
    if n < 2 {
        return Err(SpaceError::TooFewPoints { n, required: 2 });
    }
    let d2 = squared_distances(vectors);
    if d2.iter().all(|&v| v == 0.0) {
        return Err(SpaceError::DegenerateGeometry);
    }
    let target = perplexity.log2();

    let mut conditional = Array2::zeros((n, n));
    let mut sigmas = Vec::with_capacity(n);
    for i in 0..n {
        let mut beta = 1.0;
        let mut beta_min = f64::NEG_INFINITY;
        let mut beta_max = f64::INFINITY;
        let (mut row, mut entropy) = conditional_row(&d2, i, beta);
        for _ in 0..max_iter {
            let diff = entropy - target;
            if diff.abs() <= tol {
                break;
            }
            if diff > 0.0 {
                // Entropy too high: narrow the kernel.
                beta_min = beta;
                beta = if beta_max.is_infinite() {
                    beta * 2.0
                } else {
                    (beta + beta_max) / 2.0
                };
            } else {
                beta_max = beta;
                beta = if beta_min.is_infinite() {
                    beta / 2.0
                } else {
                    (beta + beta_min) / 2.0
                };
            }
            (row, entropy) = conditional_row(&d2, i, beta);
        }
        for j in 0..n {
            conditional[[i, j]] = row[j];
        }
        sigmas.push((1.0 / (2.0 * beta)).sqrt());
    }

    let mut p = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            p[[i, j]] = (conditional[[i, j]] + conditional[[j, i]]) / (2.0 * n as f64);
        }
    }
    Ok(AffinityMatrix { p, sigmas })
}

/// Student-t pair weights `w_ij = 1 / (1 + |y_i - y_j|^2)` and their total.
fn student_t_weights(y: &Array2<f64>) -> (Array2<f64>, f64) {
    let n = y.nrows();
    let mut w = Array2::zeros((n, n));
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = y[[i, 0]] - y[[j, 0]];
            let dy = y[[i, 1]] - y[[j, 1]];
            let weight = 1.0 / (1.0 + dx * dx + dy * dy);
            w[[i, j]] = weight;
            w[[j, i]] = weight;
            total += 2.0 * weight;
        }
    }
    (w, total)
}

const Q_FLOOR: f64 = 1e-12;

/// KL(P || Q) of the map `y` under affinities `p`, in nats.
pub fn tsne_objective(p: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let (w, total) = student_t_weights(y);
    let n = y.nrows();
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p[[i, j]];
            if pij > 0.0 {
                let qij = (w[[i, j]] / total).max(Q_FLOOR);
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl
}

/// Analytic KL gradient:
/// `dC/dy_i = 4 * sum_j (p_ij - q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2)`.
pub fn tsne_gradient(p: &Array2<f64>, y: &Array2<f64>) -> Array2<f64> {
    let (w, total) = student_t_weights(y);
    let n = y.nrows();
    let mut grad = Array2::zeros((n, 2));
    for i in 0..n {
        let mut gx = 0.0;
        let mut gy = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let qij = (w[[i, j]] / total).max(Q_FLOOR);
            let coeff = 4.0 * (p[[i, j]] - qij) * w[[i, j]];
            gx += coeff * (y[[i, 0]] - y[[j, 0]]);
            gy += coeff * (y[[i, 1]] - y[[j, 1]]);
        }
        grad[[i, 0]] = gx;
        grad[[i, 1]] = gy;
    }
    grad
}

fn mean_center(y: &mut Array2<f64>) {
    let n = y.nrows() as f64;
    let mx = y.column(0).sum() / n;
    let my = y.column(1).sum() / n;
    for i in 0..y.nrows() {
        y[[i, 0]] -= mx;
        y[[i, 1]] -= my;
    }
}

/// Project an embedding matrix to 2-D by gradient descent on KL(P || Q).
///
/// Deterministic for a fixed seed. The KL trace records the objective
/// against the *unexaggerated* affinities after every iteration, so entries
/// are comparable across the exaggeration boundary. Output is mean-centered.
pub fn tsne_embed(matrix: &EmbeddingMatrix, config: &TsneConfig) -> Result<PlanarMap, SpaceError> {
    let n = matrix.len();
    if n < 4 {
        return Err(SpaceError::TooFewPoints { n, required: 4 });
    }
    let perplexity = config.effective_perplexity(n);
    let affinities = calibrate_affinities(matrix.vectors(), perplexity, 1e-5, 50)?;
    let p = &affinities.p;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let mut y = Array2::zeros((n, 2));
    for i in 0..n {
        for d in 0..2 {
            let z: f64 = StandardNormal.sample(&mut rng);
            y[[i, d]] = z * config.init_scale;
        }
    }

    let mut velocity: Array2<f64> = Array2::zeros((n, 2));
    let mut kl_trace = Vec::with_capacity(config.iterations);
    let mut p_work = p.clone();
    for iter in 0..config.iterations {
        let exaggerating = iter < config.exaggeration_iters;
        let factor = if exaggerating {
            config.early_exaggeration
        } else {
            1.0
        };
        if iter == 0 || iter == config.exaggeration_iters {
            p_work = p * factor;
        }
        let grad = tsne_gradient(&p_work, &y);
        let momentum = if iter < config.momentum_switch_iter {
            config.momentum_initial
        } else {
            config.momentum_final
        };
        for i in 0..n {
            for d in 0..2 {
                velocity[[i, d]] =
                    momentum * velocity[[i, d]] - config.learning_rate * grad[[i, d]];
                y[[i, d]] += velocity[[i, d]];
            }
        }
        mean_center(&mut y);
        kl_trace.push(tsne_objective(p, &y));
    }

    let xy = (0..n).map(|i| [y[[i, 0]], y[[i, 1]]]).collect();
    Ok(PlanarMap {
        ids: matrix.ids().to_vec(),
        xy,
        kinds: vec![PointKind::Suggestion; n],
        overlay: vec![Overlay::None; n],
        kl_trace,
    })
}
