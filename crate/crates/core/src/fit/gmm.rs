//! One-dimensional Gaussian mixtures fitted by expectation-maximization.
//!
//! Every EM run is seeded by weighted k-means++ on a ChaCha stream, so a
//! fixed seed gives a fixed fit. The component count is chosen by BIC over
//! `k = 1..=max_k`. Samples carry weights, which lets the encoder fit on a
//! level histogram (level centers weighted by occupancy) instead of the raw
//! samples.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-8;
pub const MAX_COMPONENTS: usize = 4;
pub const MAX_EM_ITERATIONS: usize = 200;
/// EM stops once the per-sample log-likelihood gain drops below this.
pub const EM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GmmParams {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl GmmParams {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || k > MAX_COMPONENTS || means.len() != k || variances.len() != k {
            return Err(Error::InvalidParameter(format!("gmm with {k} components")));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w > 0.0))
            || (sum - 1.0).abs() > 1e-9
            || means.iter().any(|m| !m.is_finite())
            || variances.iter().any(|v| !(*v >= VARIANCE_FLOOR) || !v.is_finite())
        {
            return Err(Error::InvalidParameter("gmm parameters violate invariants".into()));
        }
        Ok(Self {
            weights,
            means,
            variances,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.components()
            .map(|(w, m, v)| w * (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt())
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components()
            .map(|(w, m, v)| w * 0.5 * libm::erfc(-(x - m) / (v.sqrt() * SQRT_2)))
            .sum()
    }

    /// Probability of `[lo, hi)`, each component evaluated on its
    /// non-cancelling side.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        self.components()
            .map(|(w, m, v)| {
                let s = v.sqrt() * SQRT_2;
                let lower = |x: f64| 0.5 * libm::erfc(-(x - m) / s);
                let upper = |x: f64| 0.5 * libm::erfc((x - m) / s);
                let mass = if hi <= m {
                    lower(hi) - lower(lo)
                } else if lo >= m {
                    upper(lo) - upper(hi)
                } else {
                    1.0 - lower(lo) - upper(hi)
                };
                w * mass.max(0.0)
            })
            .sum()
    }

    /// Weighted log-likelihood (natural log).
    pub fn log_likelihood(&self, points: &[f64], weights: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.k()];
        points
            .iter()
            .zip(weights)
            .map(|(&x, &w)| w * self.log_joint(x, &mut buf))
            .sum()
    }

    fn components(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((&w, &m), &v)| (w, m, v))
    }

    /// Fills `out` with log(w_k · N(x | m_k, v_k)) and returns their log-sum-exp.
    #[inline]
    fn log_joint(&self, x: f64, out: &mut [f64]) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for (o, (w, m, v)) in out.iter_mut().zip(self.components()) {
            *o = w.ln() - 0.5 * (2.0 * PI * v).ln() - (x - m).powi(2) / (2.0 * v);
            max = max.max(*o);
        }
        if max == f64::NEG_INFINITY {
            return max;
        }
        max + out.iter().map(|&o| (o - max).exp()).sum::<f64>().ln()
    }
}

/// Result of one EM run: final parameters and the log-likelihood evaluated
/// at every visited parameter set, starting with the initialization.
#[derive(Clone, Debug)]
pub struct EmRun {
    pub params: GmmParams,
    pub log_likelihoods: Vec<f64>,
}

/// EM from a given initialization until the log-likelihood gain falls below
/// `EM_TOLERANCE · Σweights` or `max_iter` M-steps have run.
pub fn run_em(points: &[f64], weights: &[f64], init: GmmParams, max_iter: usize) -> EmRun {
    let n = points.len();
    let k = init.k();
    let total: f64 = weights.iter().sum();
    let mut params = init;
    let mut resp = vec![0.0; n * k];
    let mut trace = Vec::new();

    loop {
        // E-step
        let mut ll = 0.0;
        for (i, (&x, &w)) in points.iter().zip(weights).enumerate() {
            let row = &mut resp[i * k..(i + 1) * k];
            let lse = params.log_joint(x, row);
            ll += w * lse;
            for r in row.iter_mut() {
                *r = (*r - lse).exp();
            }
        }
        let improved = trace.last().map_or(f64::INFINITY, |&prev| ll - prev);
        trace.push(ll);
        if trace.len() > max_iter || improved < EM_TOLERANCE * total {
            break;
        }

        // M-step
        for c in 0..k {
            let mut nk = 0.0;
            let mut sx = 0.0;
            for (i, (&x, &w)) in points.iter().zip(weights).enumerate() {
                let r = w * resp[i * k + c];
                nk += r;
                sx += r * x;
            }
            if !(nk > 0.0) {
                params.weights[c] = 0.0;
                continue;
            }
            let mean = sx / nk;
            let var = points
                .iter()
                .zip(weights)
                .enumerate()
                .map(|(i, (&x, &w))| w * resp[i * k + c] * (x - mean).powi(2))
                .sum::<f64>()
                / nk;
            params.weights[c] = nk / total;
            params.means[c] = mean;
            params.variances[c] = var.max(VARIANCE_FLOOR);
        }
    }

    EmRun {
        params: prune_components(params),
        log_likelihoods: trace,
    }
}

fn prune_components(p: GmmParams) -> GmmParams {
    let keep: Vec<usize> = (0..p.k()).filter(|&c| p.weights[c] > 1e-12).collect();
    let sum: f64 = keep.iter().map(|&c| p.weights[c]).sum();
    GmmParams {
        weights: keep.iter().map(|&c| p.weights[c] / sum).collect(),
        means: keep.iter().map(|&c| p.means[c]).collect(),
        variances: keep.iter().map(|&c| p.variances[c]).collect(),
    }
}

fn pick_weighted(cumulative: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cumulative.last().unwrap();
    let target = rng.gen::<f64>() * total;
    cumulative
        .partition_point(|&c| c <= target)
        .min(cumulative.len() - 1)
}

/// Weighted k-means++ seeding followed by Lloyd refinement; `None` when the
/// data has fewer than `k` distinct support points.
pub fn kmeans_init(points: &[f64], weights: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Option<GmmParams> {
    let total: f64 = weights.iter().sum();
    let mut cumulative: Vec<f64> = weights
        .iter()
        .scan(0.0, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let mut centers = vec![points[pick_weighted(&cumulative, rng)]];
    while centers.len() < k {
        let mut acc = 0.0;
        for (i, (&x, &w)) in points.iter().zip(weights).enumerate() {
            let d = centers.iter().map(|&c| (x - c).powi(2)).fold(f64::INFINITY, f64::min);
            acc += w * d;
            cumulative[i] = acc;
        }
        if !(acc > 0.0) {
            return None;
        }
        centers.push(points[pick_weighted(&cumulative, rng)]);
    }

    let mut assign = vec![0usize; points.len()];
    for _ in 0..25 {
        for (a, &x) in assign.iter_mut().zip(points) {
            *a = nearest(&centers, x);
        }
        let mut sums = vec![(0.0, 0.0); k];
        for ((&a, &x), &w) in assign.iter().zip(points).zip(weights) {
            sums[a].0 += w;
            sums[a].1 += w * x;
        }
        let mut moved = false;
        for (c, &(sw, sx)) in centers.iter_mut().zip(&sums) {
            if sw > 0.0 {
                let next = sx / sw;
                moved |= next != *c;
                *c = next;
            }
        }
        if !moved {
            break;
        }
    }

    let mut stats = vec![(0.0, 0.0); k];
    for ((&a, &x), &w) in assign.iter().zip(points).zip(weights) {
        stats[a].0 += w;
        stats[a].1 += w * (x - centers[a]).powi(2);
    }
    if stats.iter().any(|s| !(s.0 > 0.0)) {
        return None;
    }
    Some(GmmParams {
        weights: stats.iter().map(|s| s.0 / total).collect(),
        means: centers,
        variances: stats.iter().map(|s| (s.1 / s.0).max(VARIANCE_FLOOR)).collect(),
    })
}

fn nearest(centers: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, &c) in centers.iter().enumerate() {
        if (x - c).abs() < (x - centers[best]).abs() {
            best = i;
        }
    }
    best
}

/// Fit with model selection over `k = 1..=max_k`; returns the minimum-BIC
/// mixture (ties go to the smaller `k`).
pub fn fit_gmm_weighted(points: &[f64], weights: &[f64], max_k: usize, seed: u64) -> Result<GmmParams> {
    if points.len() != weights.len() {
        return Err(Error::Shape {
            expected: points.len(),
            actual: weights.len(),
        });
    }
    if max_k == 0 || max_k > MAX_COMPONENTS {
        return Err(Error::InvalidParameter(format!(
            "max_k {max_k} outside [1, {MAX_COMPONENTS}]"
        )));
    }
    if points.iter().chain(weights).any(|v| !v.is_finite()) || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Validation("non-finite value in gmm fit".into()));
    }
    let n: f64 = weights.iter().sum();
    if n < (8 * max_k) as f64 {
        return Err(Error::InsufficientData {
            needed: 8 * max_k,
            got: n as usize,
        });
    }

    let (lo, hi) = points
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&x, _)| (lo.min(x), hi.max(x)));
    if lo == hi {
        return GmmParams::new(vec![1.0], vec![lo], vec![VARIANCE_FLOOR]);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, GmmParams)> = None;
    for k in 1..=max_k {
        let Some(init) = kmeans_init(points, weights, k, &mut rng) else {
            break;
        };
        let run = run_em(points, weights, init, MAX_EM_ITERATIONS);
        let ll = run.params.log_likelihood(points, weights);
        let free = (3 * run.params.k() - 1) as f64;
        let bic = -2.0 * ll + free * n.ln();
        if best.as_ref().map_or(true, |(b, _)| bic < *b) {
            best = Some((bic, run.params));
        }
    }
    let (_, params) = best.expect("k = 1 always initializes");
    GmmParams::new(params.weights, params.means, params.variances)
}

pub fn fit_gmm(values: &[f64], max_k: usize, seed: u64) -> Result<GmmParams> {
    fit_gmm_weighted(values, &vec![1.0; values.len()], max_k, seed)
}
