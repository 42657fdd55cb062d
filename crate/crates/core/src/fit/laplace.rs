use serde::Serialize;

use crate::error::{Error, Result};
use crate::quant::QuantGrid;

/// Smallest scale a fitted Laplace may carry.
pub const SCALE_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LaplaceParams {
    pub mu: f64,
    pub b: f64,
}

impl LaplaceParams {
    pub fn new(mu: f64, b: f64) -> Result<Self> {
        if !mu.is_finite() || !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("laplace({mu}, {b})")));
        }
        Ok(Self { mu, b })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.mu {
            0.5 * ((x - self.mu) / self.b).exp()
        } else {
            1.0 - 0.5 * (-(x - self.mu) / self.b).exp()
        }
    }

    /// Probability of `[lo, hi)`, evaluated on the side of `mu` where the
    /// subtraction does not cancel.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        let left = |x: f64| 0.5 * ((x - self.mu) / self.b).exp();
        let right = |x: f64| 0.5 * (-(x - self.mu) / self.b).exp();
        let m = if hi <= self.mu {
            left(hi) - left(lo)
        } else if lo >= self.mu {
            right(lo) - right(hi)
        } else {
            1.0 - left(lo) - right(hi)
        };
        m.max(0.0)
    }
}

/// Maximum-likelihood Laplace fit: `mu` is the sample median (mean of the two
/// central order statistics for even N), `b` the mean absolute deviation
/// about `mu`.
pub fn fit_laplace(values: &[f64]) -> Result<LaplaceParams> {
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite value in laplace fit".into()));
    }
    let mut sorted = values.to_vec();
    let n = sorted.len();
    let mid = n / 2;
    let (left, upper, _) = sorted.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    let mu = if n % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lower + (upper - lower) / 2.0
    };
    let b = values.iter().map(|&x| (x - mu).abs()).sum::<f64>() / n as f64;
    LaplaceParams::new(mu, b.max(SCALE_FLOOR))
}

/// Laplace fit to quantized data: starts from the median / mean absolute
/// deviation of the dequantized samples, then maximizes the interval
/// likelihood `Σ nᵢ·log P(level i)` under the grid's level edges.
///
/// Only the level occupancy and grid are used, so re-encoding decoded data
/// reproduces the same parameters.
pub fn fit_laplace_binned(counts: &[u64], grid: &QuantGrid) -> Result<LaplaceParams> {
    let total: u64 = counts.iter().sum();
    if total < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: total as usize,
        });
    }
    if counts.len() != grid.levels() {
        return Err(Error::Shape {
            expected: grid.levels(),
            actual: counts.len(),
        });
    }
    let occupied: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (grid.center(i as u32), c as f64))
        .collect();

    let mu0 = weighted_median(&occupied, total);
    let b0 = (occupied.iter().map(|&(x, w)| w * (x - mu0).abs()).sum::<f64>() / total as f64)
        .max(grid.step() / 4.0)
        .max(SCALE_FLOOR);
    if occupied.len() < 2 {
        return LaplaceParams::new(mu0, SCALE_FLOOR);
    }

    let edges = super::level_edges(grid);
    let bins: Vec<(f64, f64, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (edges[i], edges[i + 1], c as f64))
        .collect();
    let nll = |p: [f64; 2]| -> f64 {
        let model = LaplaceParams {
            mu: p[0],
            b: p[1].exp().max(SCALE_FLOOR),
        };
        -bins
            .iter()
            .map(|&(lo, hi, c)| c * model.interval_mass(lo, hi).max(1e-300).ln())
            .sum::<f64>()
    };
    let best = nelder_mead(
        nll,
        [mu0, b0.ln()],
        [0.5 * b0.max(grid.step()), 0.25],
        400,
        1e-12,
    );
    LaplaceParams::new(best[0], best[1].exp().max(SCALE_FLOOR))
}

fn weighted_median(points: &[(f64, f64)], total: u64) -> f64 {
    let half = total as f64 / 2.0;
    let mut acc = 0.0;
    for (i, &(x, w)) in points.iter().enumerate() {
        acc += w;
        if acc > half {
            return x;
        }
        if acc == half {
            // even split between two occupied levels
            let next = points.get(i + 1).map_or(x, |p| p.0);
            return x + (next - x) / 2.0;
        }
    }
    points.last().map_or(0.0, |p| p.0)
}

/// Two-dimensional Nelder–Mead minimizer with the standard coefficients.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(
    f: F,
    start: [f64; 2],
    step: [f64; 2],
    max_iter: usize,
    tol: f64,
) -> [f64; 2] {
    let mut simplex = [
        start,
        [start[0] + step[0], start[1]],
        [start[0], start[1] + step[1]],
    ];
    let mut values = simplex.map(&f);
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];

    for _ in 0..max_iter {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.map(|i| simplex[i]);
        values = order.map(|i| values[i]);
        if (values[2] - values[0]).abs() <= tol * (values[0].abs() + 1e-30) {
            break;
        }
        let centroid = lerp(simplex[0], simplex[1], 0.5);
        let reflected = lerp(centroid, simplex[2], -1.0);
        let fr = f(reflected);
        if fr < values[0] {
            let expanded = lerp(centroid, simplex[2], -2.0);
            let fe = f(expanded);
            if fe < fr {
                simplex[2] = expanded;
                values[2] = fe;
            } else {
                simplex[2] = reflected;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = reflected;
            values[2] = fr;
        } else {
            let contracted = if fr < values[2] {
                lerp(centroid, reflected, 0.5)
            } else {
                lerp(centroid, simplex[2], 0.5)
            };
            let fc = f(contracted);
            if fc < values[2].min(fr) {
                simplex[2] = contracted;
                values[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = lerp(simplex[0], simplex[i], 0.5);
                    values[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    simplex[best]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplace_samples(mu: f64, b: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.gen_range(-0.5..0.5);
                mu - b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            })
            .collect()
    }

    #[test]
    fn three_point_fit() {
        let p = fit_laplace(&[-2.0, 0.0, 2.0]).unwrap();
        assert_eq!(p.mu, 0.0);
        assert!((p.b - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn even_count_median() {
        let p = fit_laplace(&[1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!(p.mu, 2.5);
        assert_eq!(p.b, 1.0);
    }

    #[test]
    fn constant_input_hits_floor() {
        let p = fit_laplace(&[3.25; 4]).unwrap();
        assert_eq!(p.mu, 3.25);
        assert_eq!(p.b, SCALE_FLOOR);
    }

    #[test]
    fn too_few_values() {
        assert!(matches!(
            fit_laplace(&[1.0]),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn recovers_parameters_from_samples() {
        let xs = laplace_samples(0.1, 0.5, 1_000_000, 21);
        let p = fit_laplace(&xs).unwrap();
        assert!((p.mu - 0.1).abs() < 0.005, "{p:?}");
        assert!((p.b - 0.5).abs() < 0.005, "{p:?}");
    }

    #[test]
    fn equivariant_under_affine_maps() {
        let xs = laplace_samples(-0.3, 2.0, 1001, 5);
        let base = fit_laplace(&xs).unwrap();
        // power-of-two scale with no shift is exact in floating point
        let scaled: Vec<f64> = xs.iter().map(|x| -4.0 * x).collect();
        let p = fit_laplace(&scaled).unwrap();
        assert_eq!(p.mu, -4.0 * base.mu);
        assert_eq!(p.b, 4.0 * base.b);
        for (a, c) in [(0.37, 1.5), (-2.2, -8.0)] {
            let ys: Vec<f64> = xs.iter().map(|x| a * x + c).collect();
            let p = fit_laplace(&ys).unwrap();
            assert!((p.mu - (a * base.mu + c)).abs() < 1e-12);
            assert!((p.b - a.abs() * base.b).abs() < 1e-12);
        }
    }

    #[test]
    fn interval_mass_sums_to_one() {
        let p = LaplaceParams::new(0.3, 0.7).unwrap();
        let edges = [f64::NEG_INFINITY, -1.0, 0.0, 0.3, 2.0, f64::INFINITY];
        let total: f64 = edges.windows(2).map(|w| p.interval_mass(w[0], w[1])).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert!((p.cdf(0.3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn binned_fit_tracks_raw_fit() {
        let xs = laplace_samples(0.2, 1.0, 200_000, 8);
        let values: Vec<f32> = xs.iter().map(|&x| x as f32).collect();
        let (idx, grid) = crate::quant::quantize_channel(&values, 4).unwrap();
        let mut counts = vec![0u64; 16];
        idx.iter().for_each(|&i| counts[i as usize] += 1);
        let p = fit_laplace_binned(&counts, &grid).unwrap();
        assert!((p.mu - 0.2).abs() < 0.05, "{p:?}");
        assert!((p.b - 1.0).abs() < 0.05, "{p:?}");
    }
}
