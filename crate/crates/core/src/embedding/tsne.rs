//! Exact t-SNE with O(n²) gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::DistanceMatrix;
use crate::{Error, Result};

const PERPLEXITY_TOLERANCE: f64 = 1e-5;
const MAX_BISECTION_STEPS: usize = 100;
const INITIAL_SCALE: f64 = 1e-4;
const MIN_GAIN: f64 = 0.01;
const KL_LOG_INTERVAL: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    /// First iteration that uses `final_momentum`.
    pub momentum_switch: usize,
    pub exaggeration: f64,
    /// Iterations run with exaggerated P.
    pub exaggeration_iterations: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            exaggeration: 12.0,
            exaggeration_iterations: 250,
            seed: 0,
        }
    }
}

impl TsneConfig {
    /// Perplexity must stay below `(n − 1) / 3`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.perplexity.is_finite() && self.perplexity > 0.0) {
            return Err(Error::invalid(format!("perplexity must be positive, got {}", self.perplexity)));
        }
        let limit = (n as f64 - 1.0) / 3.0;
        if self.perplexity >= limit {
            return Err(Error::invalid(format!(
                "perplexity {} too large for {n} points: need perplexity < (n - 1)/3 = {limit}",
                self.perplexity
            )));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("t-SNE needs at least one iteration"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

/// Row-stochastic `P(j|i)`, row-major, zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalProbabilities {
    pub n: usize,
    pub values: Vec<f64>,
    /// Gaussian precision `1/(2σ_i²)` found for each row.
    pub betas: Vec<f64>,
}

impl ConditionalProbabilities {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// `2^H` of row `i`, with the Shannon entropy `H` in bits.
    pub fn perplexity(&self, i: usize) -> f64 {
        let h: f64 = self
            .row(i)
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum();
        h.exp2()
    }
}

/// Per row, bisect the Gaussian precision until the row's perplexity is
/// within 1e-5 of the target. Rows whose distances are all zero get a
/// uniform distribution.
pub fn perplexity_calibration(d: &DistanceMatrix, perplexity: f64) -> Result<ConditionalProbabilities> {
    if !(perplexity.is_finite() && perplexity > 0.0) {
        return Err(Error::invalid(format!("perplexity must be positive, got {perplexity}")));
    }
    let n = d.n();
    if n < 2 {
        return Err(Error::invalid("perplexity calibration needs at least 2 points"));
    }
    let rows: Vec<(Vec<f64>, f64)> = (0..n).into_par_iter().map(|i| calibrate_row(d, i, perplexity)).collect();
    let mut values = Vec::with_capacity(n * n);
    let mut betas = Vec::with_capacity(n);
    for (row, beta) in rows {
        values.extend(row);
        betas.push(beta);
    }
    Ok(ConditionalProbabilities { n, values, betas })
}

fn calibrate_row(d: &DistanceMatrix, i: usize, perplexity: f64) -> (Vec<f64>, f64) {
    let n = d.n();
    let sq: Vec<f64> = d.row(i).iter().map(|x| x * x).collect();
    let (mut min, mut max, mut sum) = (f64::INFINITY, 0.0f64, 0.0);
    for (j, &s) in sq.iter().enumerate() {
        if j != i {
            min = min.min(s);
            max = max.max(s);
            sum += s;
        }
    }
    let mut row = vec![0.0; n];
    if max == 0.0 {
        log::warn!("row {i} of the distance matrix is all zero; using a uniform distribution");
    }
    if max == min {
        for (j, p) in row.iter_mut().enumerate() {
            if j != i {
                *p = 1.0 / (n - 1) as f64;
            }
        }
        return (row, 0.0);
    }

    // shifting by the row minimum cancels in the normalization and avoids underflow
    let shifted: Vec<f64> = sq.iter().map(|s| s - min).collect();
    let target = perplexity.ln();
    let mut beta = (n - 1) as f64 / (sum - (n - 1) as f64 * min);
    let (mut lo, mut hi) = (None::<f64>, None::<f64>);

    for _ in 0..MAX_BISECTION_STEPS {
        let (z, weighted) = gaussian_row(&shifted, i, beta, &mut row);
        let entropy = z.ln() + beta * weighted / z;
        if (entropy.exp() - perplexity).abs() < PERPLEXITY_TOLERANCE {
            break;
        }
        if entropy > target {
            lo = Some(beta);
            beta = match hi {
                Some(h) => 0.5 * (beta + h),
                None => beta * 2.0,
            };
        } else {
            hi = Some(beta);
            beta = match lo {
                Some(l) => 0.5 * (beta + l),
                None => beta * 0.5,
            };
        }
    }
    let (z, _) = gaussian_row(&shifted, i, beta, &mut row);
    for p in &mut row {
        *p /= z;
    }
    (row, beta)
}

/// Fill `row` with unnormalized weights; returns (Σw, Σw·s).
fn gaussian_row(shifted: &[f64], i: usize, beta: f64, row: &mut [f64]) -> (f64, f64) {
    let mut z = 0.0;
    let mut weighted = 0.0;
    for (j, (&s, p)) in shifted.iter().zip(row.iter_mut()).enumerate() {
        if j == i {
            *p = 0.0;
            continue;
        }
        let w = (-beta * s).exp();
        *p = w;
        z += w;
        weighted += w * s;
    }
    (z, weighted)
}

/// Symmetrized joint probabilities `(P(j|i) + P(i|j)) / 2n`, summing to 1.
pub fn joint_probabilities(cond: &ConditionalProbabilities) -> Vec<f64> {
    let n = cond.n;
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = (cond.values[i * n + j] + cond.values[j * n + i]) / (2 * n) as f64;
        }
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    /// KL(P‖Q) at the random initialization.
    pub initial_kl: f64,
    pub final_kl: f64,
    /// `(iteration, KL)` every 50 iterations and after the last one.
    pub kl_trace: Vec<(usize, f64)>,
}

/// KL(P‖Q) for joint `p` and coordinates `y`.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let (num, z) = student_t(y);
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p[i * n + j];
            if i != j && pij > 0.0 {
                let q = (num[i * n + j] / z).max(f64::MIN_POSITIVE);
                kl += pij * (pij / q).ln();
            }
        }
    }
    kl
}

/// Unnormalized Student-t affinities `1/(1 + |y_i − y_j|²)` and their
/// off-diagonal sum. Rows are computed in parallel and summed in row order.
fn student_t(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            let mut s = 0.0;
            for j in 0..n {
                if j != i {
                    let dx = y[i][0] - y[j][0];
                    let dy = y[i][1] - y[j][1];
                    let v = 1.0 / (1.0 + dx * dx + dy * dy);
                    row[j] = v;
                    s += v;
                }
            }
            (row, s)
        })
        .collect();
    let mut num = Vec::with_capacity(n * n);
    let mut z = 0.0;
    for (row, s) in rows {
        num.extend(row);
        z += s;
    }
    (num, z)
}

/// Embed points given by their pairwise distances.
///
/// Gradient descent on KL(P‖Q) with momentum, per-coordinate adaptive gains and
/// early exaggeration. As in the reference implementation, the constant factor 4
/// of the KL gradient is folded into the learning rate. Every reduction runs in
/// a fixed order, so a given seed reproduces the same coordinates bit for bit
/// regardless of thread count.
pub fn tsne_embed(d: &DistanceMatrix, cfg: &TsneConfig) -> Result<TsneResult> {
    let n = d.n();
    cfg.validate(n)?;
    let cond = perplexity_calibration(d, cfg.perplexity)?;
    let p = joint_probabilities(&cond);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, INITIAL_SCALE).expect("valid normal");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];

    let initial_kl = kl_divergence(&p, &y);
    let mut kl_trace = vec![(0, initial_kl)];

    for it in 0..cfg.iterations {
        let exaggeration = if it < cfg.exaggeration_iterations { cfg.exaggeration } else { 1.0 };
        let momentum = if it < cfg.momentum_switch { cfg.initial_momentum } else { cfg.final_momentum };

        let (num, z) = student_t(&y);
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    let w = num[i * n + j];
                    let q = w / z;
                    let f = (exaggeration * p[i * n + j] - q) * w;
                    g[0] += f * (y[i][0] - y[j][0]);
                    g[1] += f * (y[i][1] - y[j][1]);
                }
                g
            })
            .collect();

        for i in 0..n {
            for k in 0..2 {
                let same_sign = (grad[i][k] > 0.0) == (velocity[i][k] > 0.0);
                gains[i][k] = if same_sign { gains[i][k] * 0.8 } else { gains[i][k] + 0.2 };
                gains[i][k] = gains[i][k].max(MIN_GAIN);
                velocity[i][k] = momentum * velocity[i][k] - cfg.learning_rate * gains[i][k] * grad[i][k];
                y[i][k] += velocity[i][k];
            }
        }
        let mean = y.iter().fold([0.0; 2], |m, v| [m[0] + v[0], m[1] + v[1]]);
        let mean = [mean[0] / n as f64, mean[1] / n as f64];
        for v in &mut y {
            v[0] -= mean[0];
            v[1] -= mean[1];
        }

        if (it + 1) % KL_LOG_INTERVAL == 0 || it + 1 == cfg.iterations {
            let kl = kl_divergence(&p, &y);
            log::debug!("t-SNE iteration {}: KL = {kl}", it + 1);
            kl_trace.push((it + 1, kl));
        }
        if y.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("t-SNE diverged at iteration {}", it + 1)));
        }
    }

    let final_kl = kl_trace.last().map(|&(_, kl)| kl).unwrap_or(initial_kl);
    Ok(TsneResult {
        coords: y,
        initial_kl,
        final_kl,
        kl_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equidistant_triplet() {
        let d = DistanceMatrix::from_rows(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let p = perplexity_calibration(&d, 2.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.0 } else { 0.5 };
                assert!((p.row(i)[j] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn all_zero_rows_are_uniform() {
        let d = DistanceMatrix::from_rows(vec![vec![0.0; 4]; 4]).unwrap();
        let p = perplexity_calibration(&d, 1.5).unwrap();
        assert!(p.row(2).iter().enumerate().all(|(j, &v)| if j == 2 { v == 0.0 } else { (v - 1.0 / 3.0).abs() < 1e-15 }));
    }

    #[test]
    fn perplexity_limit_enforced() {
        let cfg = TsneConfig { perplexity: 3.0, ..TsneConfig::default() };
        assert!(cfg.validate(11).is_ok());
        // (10 - 1)/3 = 3 is the exclusive bound
        let msg = cfg.validate(10).unwrap_err().to_string();
        assert!(msg.contains("(n - 1)/3"), "{msg}");
    }

    #[test]
    fn joint_probabilities_sum_to_one() {
        let rows: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..6).map(|j| ((i as f64 - j as f64).abs() * 1.3).sqrt()).collect())
            .collect();
        let d = DistanceMatrix::from_rows(rows).unwrap();
        let p = joint_probabilities(&perplexity_calibration(&d, 1.5).unwrap());
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(p[i * 6 + j], p[j * 6 + i]);
            }
        }
    }
}
