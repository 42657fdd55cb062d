//! Synthetic 3DGS models drawn from the per-group distribution families.
//!
//! Positions come from a mixture of anisotropic clusters, rotation, scaling
//! and opacity from two-component Gaussian mixtures, SHDC from a broad
//! Gaussian with spikes at both extremes, and SHAC from clipped Laplace
//! laws whose scale shrinks with SH degree.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use rayon::prelude::*;

use crate::model::{AttributeGroup, GaussianCloud, CHANNELS_PER_GAUSSIAN, SH_AC_PER_COLOR};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub count: usize,
    pub seed: u64,
    /// Number of position clusters.
    pub clusters: usize,
    /// SHAC samples are clipped to `μ ± clip·b`.
    pub shac_clip: f64,
}

impl SynthConfig {
    pub fn new(count: usize, seed: u64) -> Self {
        Self {
            count,
            seed,
            clusters: 64,
            shac_clip: 8.0,
        }
    }
}

/// One draw from Laplace(`mu`, `b`).
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, mu: f64, b: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    if rng.gen::<bool>() {
        mu + b * e
    } else {
        mu - b * e
    }
}

/// One draw from a Gaussian mixture given as `(weight, mean, std)` triples.
pub fn sample_mixture<R: Rng + ?Sized>(rng: &mut R, components: &[(f64, f64, f64)]) -> f64 {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut pick = components[components.len() - 1];
    for &c in components {
        acc += c.0;
        if u < acc {
            pick = c;
            break;
        }
    }
    Normal::new(pick.1, pick.2).unwrap().sample(rng)
}

/// Scale of SHAC coefficient `k` (0..15) within one color.
pub fn shac_scale(k: usize) -> f64 {
    match k {
        0..=2 => 0.06,
        3..=7 => 0.04,
        _ => 0.025,
    }
}

fn channel_rng(seed: u64, channel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(channel as u64 + 1);
    rng
}

pub fn synthetic_cloud(config: &SynthConfig) -> GaussianCloud {
    let n = config.count;
    let clusters = config.clusters.max(1);
    let mut rng = channel_rng(config.seed, 0);
    let centers: Vec<[f64; 3]> = (0..clusters)
        .map(|_| [0; 3].map(|_| rng.gen_range(-20.0..20.0)))
        .collect();
    let spreads: Vec<[f64; 3]> = (0..clusters)
        .map(|_| [0; 3].map(|_| rng.gen_range(0.2..2.0)))
        .collect();
    let assignment: Vec<usize> = (0..n).map(|_| rng.gen_range(0..clusters)).collect();

    let channels: Vec<Vec<f32>> = (0..CHANNELS_PER_GAUSSIAN)
        .into_par_iter()
        .map(|flat| {
            let mut rng = channel_rng(config.seed, flat + 1);
            let (group, c) = locate(flat);
            let mut draw: Box<dyn FnMut(&mut ChaCha8Rng, usize) -> f64> = match group {
                AttributeGroup::Geometry => Box::new(|rng, i| {
                    let k = assignment[i];
                    Normal::new(centers[k][c], spreads[k][c]).unwrap().sample(rng)
                }),
                AttributeGroup::Rotation => {
                    let comps = if c == 0 {
                        [(0.7, 1.0, 0.12), (0.3, 0.4, 0.35)]
                    } else {
                        [(0.6, 0.0, 0.08), (0.4, 0.0, 0.4)]
                    };
                    Box::new(move |rng, _| sample_mixture(rng, &comps))
                }
                AttributeGroup::Scaling => {
                    Box::new(|rng, _| sample_mixture(rng, &[(0.65, -4.6, 0.5), (0.35, -3.2, 0.9)]))
                }
                AttributeGroup::Opacity => {
                    Box::new(|rng, _| sample_mixture(rng, &[(0.45, -2.5, 1.4), (0.55, 2.8, 1.8)]))
                }
                AttributeGroup::ShDc => Box::new(|rng, _| {
                    sample_mixture(rng, &[(0.84, 0.2, 0.7), (0.08, -1.75, 0.02), (0.08, 2.9, 0.03)])
                }),
                AttributeGroup::ShAc => {
                    let b = shac_scale(c % SH_AC_PER_COLOR);
                    let clip = config.shac_clip * b;
                    Box::new(move |rng, _| sample_laplace(rng, 0.0, b).clamp(-clip, clip))
                }
            };
            (0..n).map(|i| draw(&mut rng, i) as f32).collect()
        })
        .collect();
    GaussianCloud::from_channels(channels).expect("synthetic channels are finite")
}

fn locate(flat: usize) -> (AttributeGroup, usize) {
    AttributeGroup::ALL
        .into_iter()
        .rev()
        .find(|g| g.offset() <= flat)
        .map(|g| (g, flat - g.offset()))
        .unwrap()
}
