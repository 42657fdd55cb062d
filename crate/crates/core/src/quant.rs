//! Min-max uniform quantization with per-group depths.
//!
//! A channel with bounds `[v_min, v_max]` and depth `Q` maps onto `L = 2^Q`
//! levels via `q(x) = round((x − v_min)·(L − 1)/(v_max − v_min))`, rounding
//! half away from zero. Bounds are kept as `f32` so the decoder reproduces
//! dequantized values bit for bit; the step is always derived, never stored.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AttributeGroup, GaussianCloud};

pub const MIN_DEPTH: u8 = 1;
pub const MAX_DEPTH: u8 = 24;

/// Quantization bounds and depth of one channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuantGrid {
    pub v_min: f32,
    pub v_max: f32,
    pub depth: u8,
}

impl QuantGrid {
    pub fn new(v_min: f32, v_max: f32, depth: u8) -> Result<Self> {
        check_depth(depth)?;
        if !(v_min.is_finite() && v_max.is_finite()) || v_min > v_max {
            return Err(Error::InvalidParameter(format!(
                "invalid grid bounds [{v_min}, {v_max}]"
            )));
        }
        Ok(Self {
            v_min,
            v_max,
            depth,
        })
    }

    /// Grid spanning the min and max of `values`; `[0, 0]` for empty input.
    pub fn fit(values: &[f32], depth: u8) -> Result<Self> {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &v in values {
            if !v.is_finite() {
                return Err(Error::Validation("non-finite value in channel".into()));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if values.is_empty() {
            lo = 0.0;
            hi = 0.0;
        }
        Self::new(lo, hi, depth)
    }

    /// Number of levels `L = 2^Q`.
    pub fn levels(&self) -> usize {
        1usize << self.depth
    }

    pub fn is_degenerate(&self) -> bool {
        self.v_min == self.v_max
    }

    /// Dequantization step `(v_max − v_min)/(L − 1)`.
    pub fn step(&self) -> f64 {
        (self.v_max as f64 - self.v_min as f64) / (self.levels() - 1) as f64
    }

    #[inline]
    pub fn quantize(&self, x: f32) -> u32 {
        if self.is_degenerate() {
            return 0;
        }
        let top = (self.levels() - 1) as f64;
        let t = (x as f64 - self.v_min as f64) * top / (self.v_max as f64 - self.v_min as f64);
        t.round().clamp(0.0, top) as u32
    }

    /// Level center in `f64`, used for model fitting and PMF edges.
    #[inline]
    pub fn center(&self, index: u32) -> f64 {
        if index as usize == self.levels() - 1 {
            return self.v_max as f64;
        }
        self.v_min as f64 + index as f64 * self.step()
    }

    #[inline]
    pub fn dequantize(&self, index: u32) -> f32 {
        if self.is_degenerate() {
            return self.v_min;
        }
        if index as usize == self.levels() - 1 {
            return self.v_max;
        }
        self.center(index) as f32
    }
}

pub(crate) fn check_depth(depth: u8) -> Result<()> {
    if (MIN_DEPTH..=MAX_DEPTH).contains(&depth) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "quantization depth {depth} outside [{MIN_DEPTH}, {MAX_DEPTH}]"
        )))
    }
}

/// Quantizes one channel against a grid fitted to its own min/max.
pub fn quantize_channel(values: &[f32], depth: u8) -> Result<(Vec<u32>, QuantGrid)> {
    let grid = QuantGrid::fit(values, depth)?;
    Ok((values.iter().map(|&v| grid.quantize(v)).collect(), grid))
}

pub fn dequantize_channel(indices: &[u32], grid: &QuantGrid) -> Result<Vec<f32>> {
    let levels = grid.levels();
    indices
        .iter()
        .map(|&i| {
            if (i as usize) < levels {
                Ok(grid.dequantize(i))
            } else {
                Err(Error::OutOfBounds {
                    index: i as usize,
                    limit: levels,
                })
            }
        })
        .collect()
}

/// Named depth bundles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PresetName {
    L,
    M,
    S,
}

impl PresetName {
    pub fn as_byte(self) -> u8 {
        match self {
            PresetName::L => b'L',
            PresetName::M => b'M',
            PresetName::S => b'S',
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            b'L' => Some(PresetName::L),
            b'M' => Some(PresetName::M),
            b'S' => Some(PresetName::S),
            _ => None,
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_byte() as char)
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L" | "l" => Ok(PresetName::L),
            "M" | "m" => Ok(PresetName::M),
            "S" | "s" => Ok(PresetName::S),
            _ => Err(Error::InvalidParameter(format!("unknown preset {s}"))),
        }
    }
}

/// Per-group quantization depths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RatePreset {
    pub name: PresetName,
    depths: [u8; 6],
}

impl RatePreset {
    /// Depths in group order: geometry, rotation, scaling, opacity, SHDC, SHAC.
    pub fn new(name: PresetName) -> Self {
        let depths = match name {
            PresetName::L => [17, 8, 8, 8, 8, 4],
            PresetName::M => [16, 8, 8, 8, 8, 4],
            PresetName::S => [16, 7, 7, 7, 8, 3],
        };
        Self { name, depths }
    }

    pub fn depth(&self, group: AttributeGroup) -> u8 {
        self.depths[group.tag() as usize]
    }

    pub fn with_depth(mut self, group: AttributeGroup, depth: u8) -> Result<Self> {
        check_depth(depth)?;
        self.depths[group.tag() as usize] = depth;
        Ok(self)
    }

    /// Applies a `group=depth` override such as `shac=3`.
    pub fn with_override(self, spec: &str) -> Result<Self> {
        let (group, depth) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected group=depth, got {spec}")))?;
        let depth: u8 = depth
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad depth in {spec}")))?;
        self.with_depth(group.trim().parse()?, depth)
    }
}

impl Default for RatePreset {
    fn default() -> Self {
        Self::new(PresetName::M)
    }
}

/// One point of an attribute-space sensitivity curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SensitivityPoint {
    pub depth: u8,
    pub normalized_mse: f64,
}

/// Quantize/dequantize every channel of `group` at each depth and report the
/// group MSE divided by the group's mean absolute value.
pub fn sensitivity_sweep(
    cloud: &GaussianCloud,
    group: AttributeGroup,
    depths: &[u8],
) -> Result<Vec<SensitivityPoint>> {
    if depths.is_empty() {
        return Err(Error::InvalidParameter("depth list is empty".into()));
    }
    let columns = cloud.group(group);
    let samples = (columns.len() * cloud.count()) as f64;
    let mean_abs = if samples > 0.0 {
        columns
            .iter()
            .flat_map(|c| c.iter())
            .map(|&v| (v as f64).abs())
            .sum::<f64>()
            / samples
    } else {
        0.0
    };

    depths
        .iter()
        .map(|&depth| {
            let mut sq = 0.0f64;
            for column in columns {
                let grid = QuantGrid::fit(column, depth)?;
                sq += column
                    .iter()
                    .map(|&v| {
                        let e = v as f64 - grid.dequantize(grid.quantize(v)) as f64;
                        e * e
                    })
                    .sum::<f64>();
            }
            let mse = if samples > 0.0 { sq / samples } else { 0.0 };
            let normalized_mse = if mean_abs > 0.0 { mse / mean_abs } else { 0.0 };
            Ok(SensitivityPoint {
                depth,
                normalized_mse,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ulp(x: f32) -> f64 {
        let x = x.abs();
        (f32::from_bits(x.to_bits() + 1) - x) as f64
    }

    #[test]
    fn endpoints_and_midpoint() {
        let (idx, grid) = quantize_channel(&[0.0, 0.5, 1.0], 8).unwrap();
        assert_eq!(idx, vec![0, 128, 255]);
        assert_eq!(grid, QuantGrid::new(0.0, 1.0, 8).unwrap());
    }

    #[test]
    fn degenerate_channel() {
        let (idx, grid) = quantize_channel(&[2.5; 5], 6).unwrap();
        assert!(idx.iter().all(|&i| i == 0));
        assert_eq!(grid.step(), 0.0);
        assert_eq!(dequantize_channel(&[0, 3], &grid).unwrap(), vec![2.5, 2.5]);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            quantize_channel(&[0.0, f32::NAN], 4),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn dequantize_endpoints_exact() {
        let grid = QuantGrid::new(-1.7, 3.3, 8).unwrap();
        assert_eq!(grid.dequantize(0), -1.7);
        assert_eq!(grid.dequantize(255), 3.3);
        assert!(matches!(
            dequantize_channel(&[256], &grid),
            Err(Error::OutOfBounds { index: 256, limit: 256 })
        ));
    }

    #[test]
    fn all_levels_round_trip() {
        let grid = QuantGrid::new(-0.37, 12.9, 8).unwrap();
        for i in 0..256u32 {
            assert_eq!(grid.quantize(grid.dequantize(i)), i);
        }
    }

    #[test]
    fn error_bound_on_uniform_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs: Vec<f32> = (0..100_000).map(|_| rng.gen_range(-4.0f32..9.0)).collect();
        let (idx, grid) = quantize_channel(&xs, 8).unwrap();
        let half = grid.step() / 2.0;
        for (&x, &i) in xs.iter().zip(&idx) {
            let y = grid.dequantize(i);
            assert!((x as f64 - y as f64).abs() <= half + ulp(y));
        }
    }

    #[test]
    fn presets_follow_depth_table() {
        let m = RatePreset::new(PresetName::M);
        assert_eq!(m.depth(AttributeGroup::Geometry), 16);
        assert_eq!(m.depth(AttributeGroup::ShAc), 4);
        let s = RatePreset::new(PresetName::S);
        assert_eq!(s.depth(AttributeGroup::Rotation), 7);
        assert_eq!(s.depth(AttributeGroup::ShDc), 8);
        assert_eq!(RatePreset::new(PresetName::L).depth(AttributeGroup::Geometry), 17);
        let custom = m.with_override("shac=9").unwrap();
        assert_eq!(custom.depth(AttributeGroup::ShAc), 9);
        assert!(m.with_override("shac=25").is_err());
        assert!(m.with_override("colour=3").is_err());
    }

    #[test]
    fn sweep_decreases_with_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut cloud = GaussianCloud::zeros(5_000);
        for c in 0..3 {
            for v in cloud.channel_mut(AttributeGroup::Scaling, c).unwrap() {
                *v = rng.gen_range(-6.0..-1.0);
            }
        }
        let pts = sensitivity_sweep(&cloud, AttributeGroup::Scaling, &[2, 4, 8]).unwrap();
        assert!(pts[0].normalized_mse > pts[1].normalized_mse);
        assert!(pts[1].normalized_mse > pts[2].normalized_mse);

        let flat = sensitivity_sweep(&cloud, AttributeGroup::Opacity, &[2, 8]).unwrap();
        assert!(flat.iter().all(|p| p.normalized_mse == 0.0));

        let fine = sensitivity_sweep(&cloud, AttributeGroup::Scaling, &[24]).unwrap();
        assert!(fine[0].normalized_mse < 1e-12);
    }

    proptest! {
        #[test]
        fn quantize_is_monotone(mut xs in prop::collection::vec(-1e3f32..1e3, 2..64), depth in 1u8..=16) {
            let (_, grid) = quantize_channel(&xs, depth).unwrap();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let q: Vec<u32> = xs.iter().map(|&x| grid.quantize(x)).collect();
            prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(grid.quantize(grid.v_min), 0);
            if !grid.is_degenerate() {
                prop_assert_eq!(grid.quantize(grid.v_max) as usize, grid.levels() - 1);
            }
        }
    }
}
