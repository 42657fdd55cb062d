//! Preparation-stage pruning and SHAC range rectification.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::fit_laplace;
use crate::model::{AttributeGroup, GaussianCloud};

pub const DEFAULT_RECTIFY_TAIL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PruneConfig {
    /// Percent of Gaussians removed by importance.
    pub theta1: f64,
    /// Percent removed per axis from the geometry tails.
    pub theta2: f64,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            theta1: 0.0,
            theta2: 0.0,
        }
    }
}

impl PruneConfig {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        check_percent("theta1", theta1)?;
        check_percent("theta2", theta2)?;
        Ok(Self { theta1, theta2 })
    }

    /// Count left after both stages: `N·(1 − θ₁)·(1 − θ₂)³` with a floor
    /// taken on the removal at every step.
    pub fn expected_count(&self, n: usize) -> usize {
        let mut n = n - removal(n, self.theta1);
        for _ in 0..3 {
            n -= removal(n, self.theta2);
        }
        n
    }

    /// Importance pruning followed by geometry pruning.
    pub fn apply(&self, cloud: &GaussianCloud, scores: &[f64]) -> Result<GaussianCloud> {
        let kept = importance_prune(cloud, scores, self.theta1)?;
        geometry_prune(&kept, self.theta2)
    }
}

fn check_percent(name: &str, theta: f64) -> Result<()> {
    if (0.0..100.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {theta} outside [0, 100)")))
    }
}

fn removal(n: usize, theta: f64) -> usize {
    (n as f64 * theta / 100.0).floor() as usize
}

/// Removes the `floor(N·θ₁/100)` lowest-scoring Gaussians; among equal
/// scores the lower index goes first.
pub fn importance_prune(cloud: &GaussianCloud, scores: &[f64], theta1: f64) -> Result<GaussianCloud> {
    check_percent("theta1", theta1)?;
    if scores.len() != cloud.count() {
        return Err(Error::Shape {
            expected: cloud.count(),
            actual: scores.len(),
        });
    }
    let drop = removal(cloud.count(), theta1);
    if drop == 0 {
        return Ok(cloud.clone());
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.par_sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut keep = vec![true; cloud.count()];
    for &i in &order[..drop] {
        keep[i] = false;
    }
    Ok(cloud.retain_mask(&keep))
}

/// Stand-in importance: `sigmoid(opacity)·exp(s₀ + s₁ + s₂)`.
pub fn proxy_importance(cloud: &GaussianCloud) -> Vec<f64> {
    let opacity = &cloud.group(AttributeGroup::Opacity)[0];
    let scaling = cloud.group(AttributeGroup::Scaling);
    (0..cloud.count())
        .into_par_iter()
        .map(|i| {
            let alpha = 1.0 / (1.0 + (-(opacity[i] as f64)).exp());
            let log_volume: f64 = scaling.iter().map(|s| s[i] as f64).sum();
            alpha * log_volume.exp()
        })
        .collect()
}

fn median(values: &[f32]) -> f64 {
    let mut v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
    let n = v.len();
    let mid = n / 2;
    let (left, upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lower + (upper - lower) / 2.0
    }
}

/// Centers positions on the per-axis median, then for x, y, z in turn drops
/// the `floor(N·θ₂/100)` Gaussians farthest from the center on that axis.
pub fn geometry_prune(cloud: &GaussianCloud, theta2: f64) -> Result<GaussianCloud> {
    check_percent("theta2", theta2)?;
    if theta2 == 0.0 || cloud.is_empty() {
        return Ok(cloud.clone());
    }
    let geometry = cloud.group(AttributeGroup::Geometry);
    let center: Vec<f64> = geometry.iter().map(|axis| median(axis)).collect();

    let mut alive: Vec<usize> = (0..cloud.count()).collect();
    for axis in 0..3 {
        let drop = removal(alive.len(), theta2);
        if drop == 0 {
            continue;
        }
        let dist = |i: usize| (geometry[axis][i] as f64 - center[axis]).abs();
        // farthest first, lower index first among ties
        alive.par_sort_by(|&a, &b| dist(b).total_cmp(&dist(a)).then(a.cmp(&b)));
        alive.drain(..drop);
        alive.sort_unstable();
    }
    Ok(cloud.select(&alive))
}

/// Clamps every SHAC channel to `μ ± b·ln(1/(2p))` of its fitted Laplace,
/// i.e. to the `[p, 1 − p]` quantiles.
pub fn rectify_shac(cloud: &GaussianCloud, tail_prob: f64) -> Result<GaussianCloud> {
    if !(tail_prob > 0.0 && tail_prob <= 0.01) {
        return Err(Error::InvalidParameter(format!(
            "tail probability {tail_prob} outside (0, 0.01]"
        )));
    }
    let mut out = cloud.clone();
    if cloud.count() < 2 {
        return Ok(out);
    }
    let half_width = (1.0 / (2.0 * tail_prob)).ln();
    let channels: Vec<Vec<f32>> = cloud
        .group(AttributeGroup::ShAc)
        .par_iter()
        .map(|ch| {
            let xs: Vec<f64> = ch.iter().map(|&x| x as f64).collect();
            let p = fit_laplace(&xs)?;
            let lo = (p.mu - p.b * half_width) as f32;
            let hi = (p.mu + p.b * half_width) as f32;
            Ok(ch.iter().map(|&x| x.clamp(lo, hi)).collect())
        })
        .collect::<Result<_>>()?;
    for (c, ch) in channels.into_iter().enumerate() {
        out.channel_mut(AttributeGroup::ShAc, c)?.copy_from_slice(&ch);
    }
    Ok(out)
}

/// Reads one score per line; blank lines are skipped.
pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Format(format!("{}:{}: bad score {:?}", path.display(), i + 1, l)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, seed: u64) -> GaussianCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let channels = (0..59)
            .map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        GaussianCloud::from_channels(channels).unwrap()
    }

    #[test]
    fn zero_thresholds_are_identity() {
        let cloud = random_cloud(100, 1);
        let scores = proxy_importance(&cloud);
        assert_eq!(importance_prune(&cloud, &scores, 0.0).unwrap(), cloud);
        assert_eq!(geometry_prune(&cloud, 0.0).unwrap(), cloud);
    }

    #[test]
    fn lowest_scores_removed() {
        let mut cloud = GaussianCloud::zeros(10);
        for (i, v) in cloud.channel_mut(AttributeGroup::Opacity, 0).unwrap().iter_mut().enumerate() {
            *v = i as f32;
        }
        let scores: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let kept = importance_prune(&cloud, &scores, 50.0).unwrap();
        assert_eq!(kept.channel(AttributeGroup::Opacity, 0).unwrap(), &[5.0, 6.0, 7.0, 8.0, 9.0]);
    }

    #[test]
    fn ties_prune_lower_index_first() {
        let mut cloud = GaussianCloud::zeros(4);
        for (i, v) in cloud.channel_mut(AttributeGroup::Opacity, 0).unwrap().iter_mut().enumerate() {
            *v = i as f32;
        }
        let kept = importance_prune(&cloud, &[1.0; 4], 50.0).unwrap();
        assert_eq!(kept.channel(AttributeGroup::Opacity, 0).unwrap(), &[2.0, 3.0]);
    }

    #[test]
    fn importance_count() {
        let cloud = random_cloud(1000, 2);
        let kept = importance_prune(&cloud, &proxy_importance(&cloud), 40.0).unwrap();
        assert_eq!(kept.count(), 600);
        assert!(importance_prune(&cloud, &[0.0; 3], 40.0).is_err());
    }

    #[test]
    fn geometry_sequential_floor() {
        let cloud = random_cloud(1000, 3);
        assert_eq!(geometry_prune(&cloud, 10.0).unwrap().count(), 729);
    }

    #[test]
    fn outlier_removed() {
        let mut cloud = random_cloud(100, 4);
        cloud.channel_mut(AttributeGroup::Geometry, 0).unwrap()[37] = 1e6;
        cloud.channel_mut(AttributeGroup::ShDc, 0).unwrap()[37] = 99.0;
        let kept = geometry_prune(&cloud, 1.0).unwrap();
        assert_eq!(kept.count(), 99);
        assert!(kept.channel(AttributeGroup::Geometry, 0).unwrap().iter().all(|&x| x < 1e6));
        assert!(kept.channel(AttributeGroup::ShDc, 0).unwrap().iter().all(|&x| x != 99.0));
    }

    #[test]
    fn proxy_scores_match_direct_formula() {
        let cloud = random_cloud(50, 5);
        let scores = proxy_importance(&cloud);
        for i in 0..50 {
            let o = cloud.channel(AttributeGroup::Opacity, 0).unwrap()[i] as f64;
            let s: f64 = (0..3)
                .map(|a| (cloud.channel(AttributeGroup::Scaling, a).unwrap()[i] as f64).exp())
                .product();
            let expected = s / (1.0 + (-o).exp());
            assert!((scores[i] - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn proxy_monotone_in_scale_and_vanishes_with_opacity() {
        let mut cloud = GaussianCloud::zeros(3);
        cloud.channel_mut(AttributeGroup::Scaling, 1).unwrap()[1] = 0.5;
        cloud.channel_mut(AttributeGroup::Opacity, 0).unwrap()[2] = -1e4;
        let s = proxy_importance(&cloud);
        assert!(s[1] > s[0]);
        assert_eq!(s[2], 0.0);
    }

    #[test]
    fn rectification_clamps_outlier() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut cloud = GaussianCloud::zeros(10_001);
        let ch = cloud.channel_mut(AttributeGroup::ShAc, 3).unwrap();
        for v in ch.iter_mut() {
            let u: f64 = rng.gen_range(-0.5..0.5);
            *v = (-0.1 * u.signum() * (1.0 - 2.0 * u.abs()).ln()) as f32;
        }
        ch[0] = 10.0;
        let out = rectify_shac(&cloud, 1e-4).unwrap();
        let xs: Vec<f64> = cloud.channel(AttributeGroup::ShAc, 3).unwrap().iter().map(|&x| x as f64).collect();
        let p = fit_laplace(&xs).unwrap();
        let edge = (p.mu + p.b * (5000.0f64).ln()) as f32;
        assert_eq!(out.channel(AttributeGroup::ShAc, 3).unwrap()[0], edge);
    }

    #[test]
    fn rectification_leaves_inliers() {
        let mut cloud = GaussianCloud::zeros(4);
        cloud.channel_mut(AttributeGroup::ShAc, 0).unwrap().copy_from_slice(&[-1.0, 0.0, 0.0, 1.0]);
        assert_eq!(rectify_shac(&cloud, 1e-2).unwrap(), cloud);
        assert!(rectify_shac(&cloud, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn rectification_never_widens(seed in 0u64..1000, n in 2usize..300) {
            let cloud = random_cloud(n, seed);
            let out = rectify_shac(&cloud, 1e-3).unwrap();
            for c in 0..45 {
                let range = |ch: &[f32]| {
                    ch.iter().fold(f32::NEG_INFINITY, |a, &b| a.max(b))
                        - ch.iter().fold(f32::INFINITY, |a, &b| a.min(b))
                };
                prop_assert!(range(out.channel(AttributeGroup::ShAc, c).unwrap())
                    <= range(cloud.channel(AttributeGroup::ShAc, c).unwrap()));
            }
        }

        #[test]
        fn count_law(n in 0usize..3000, t1 in 0.0f64..99.0, t2 in 0.0f64..20.0, seed in 0u64..100) {
            let cloud = random_cloud(n, seed);
            let cfg = PruneConfig::new(t1, t2).unwrap();
            let out = cfg.apply(&cloud, &proxy_importance(&cloud)).unwrap();
            prop_assert_eq!(out.count(), cfg.expected_count(n));
            prop_assert!(out.validate().is_ok());
        }
    }
}
