//! Per-channel probability models and their discretization into coding tables.
//!
//! SHAC channels get a Laplace fit, rotation/scaling/opacity a Gaussian
//! mixture, SHDC the raw level histogram. A fitted model is turned into a
//! [`Pmf`] by integrating it over the quantization cells of the channel grid,
//! with the open tails folded into the first and last level.

pub mod gmm;
pub mod laplace;
mod pmf;

use serde::Serialize;

pub use gmm::{fit_gmm, fit_gmm_weighted, GmmParams};
pub use laplace::{fit_laplace, fit_laplace_binned, LaplaceParams};
pub use pmf::{Pmf, PMF_TOTAL, PMF_TOTAL_BITS};

use crate::error::{Error, Result};
use crate::model::AttributeGroup;
use crate::quant::QuantGrid;

/// Deepest grid whose levels fit in a coding table.
pub const MAX_PMF_DEPTH: u8 = PMF_TOTAL_BITS as u8;

/// Below this many samples a channel is coded with its empirical table.
pub const MIN_PARAMETRIC_SAMPLES: u64 = 32;

/// Which family a channel is modeled with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ModelKind {
    Empirical,
    Laplace,
    Gmm,
}

impl ModelKind {
    pub fn for_group(group: AttributeGroup) -> Self {
        match group {
            AttributeGroup::ShAc => ModelKind::Laplace,
            AttributeGroup::Rotation | AttributeGroup::Scaling | AttributeGroup::Opacity => {
                ModelKind::Gmm
            }
            AttributeGroup::Geometry | AttributeGroup::ShDc => ModelKind::Empirical,
        }
    }
}

/// Fitted model of one channel, kept alongside its table for inspection.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ChannelModel {
    Empirical,
    Laplace(LaplaceParams),
    Gmm(GmmParams),
}

impl ChannelModel {
    pub fn tag(&self) -> u8 {
        match self {
            ChannelModel::Empirical => 0,
            ChannelModel::Laplace(_) => 1,
            ChannelModel::Gmm(_) => 2,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ChannelModel::Empirical => ModelKind::Empirical,
            ChannelModel::Laplace(_) => ModelKind::Laplace,
            ChannelModel::Gmm(_) => ModelKind::Gmm,
        }
    }
}

/// A distribution that can report the probability of a half-open interval.
pub trait IntervalMass {
    fn interval_mass(&self, lo: f64, hi: f64) -> f64;
}

impl IntervalMass for LaplaceParams {
    fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        LaplaceParams::interval_mass(self, lo, hi)
    }
}

impl IntervalMass for GmmParams {
    fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        GmmParams::interval_mass(self, lo, hi)
    }
}

/// Cell boundaries of the grid: `−∞`, the midpoints between consecutive
/// level centers, `+∞`.
pub fn level_edges(grid: &QuantGrid) -> Vec<f64> {
    let levels = grid.levels();
    let mut edges = Vec::with_capacity(levels + 1);
    edges.push(f64::NEG_INFINITY);
    let mut prev = grid.center(0);
    for i in 1..levels as u32 {
        let c = grid.center(i);
        edges.push(prev + (c - prev) / 2.0);
        prev = c;
    }
    edges.push(f64::INFINITY);
    edges
}

/// Occupancy of each level.
pub fn level_counts(indices: &[u32], grid: &QuantGrid) -> Result<Vec<u64>> {
    let levels = grid.levels();
    let mut counts = vec![0u64; levels];
    for &i in indices {
        *counts.get_mut(i as usize).ok_or(Error::OutOfBounds {
            index: i as usize,
            limit: levels,
        })? += 1;
    }
    Ok(counts)
}

fn check_table_depth(grid: &QuantGrid) -> Result<()> {
    if grid.depth > MAX_PMF_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "depth {} exceeds {MAX_PMF_DEPTH} for table-coded channels",
            grid.depth
        )));
    }
    Ok(())
}

/// Smoothed occupancy table of already-quantized indices.
pub fn fit_empirical(indices: &[u32], grid: &QuantGrid) -> Result<Pmf> {
    check_table_depth(grid)?;
    empirical_from_counts(&level_counts(indices, grid)?)
}

fn empirical_from_counts(counts: &[u64]) -> Result<Pmf> {
    let masses: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Pmf::from_masses(&masses)
}

/// Integrates `model` over every quantization cell of `grid`.
pub fn discretize_pmf<M: IntervalMass + ?Sized>(model: &M, grid: &QuantGrid) -> Result<Pmf> {
    check_table_depth(grid)?;
    if grid.is_degenerate() {
        let mut masses = vec![0.0; grid.levels()];
        masses[0] = 1.0;
        return Pmf::from_masses(&masses);
    }
    let edges = level_edges(grid);
    let masses: Vec<f64> = edges
        .windows(2)
        .map(|w| model.interval_mass(w[0], w[1]))
        .collect();
    Pmf::from_masses(&masses)
}

/// Fits the requested family to a channel's level histogram and returns the
/// model with its coding table.
///
/// Channels with fewer than [`MIN_PARAMETRIC_SAMPLES`] samples or fewer than
/// two occupied levels fall back to the empirical table.
pub fn fit_channel_model(
    kind: ModelKind,
    counts: &[u64],
    grid: &QuantGrid,
    seed: u64,
) -> Result<(ChannelModel, Pmf)> {
    check_table_depth(grid)?;
    if counts.len() != grid.levels() {
        return Err(Error::Shape {
            expected: grid.levels(),
            actual: counts.len(),
        });
    }
    let total: u64 = counts.iter().sum();
    let occupied = counts.iter().filter(|&&c| c > 0).count();
    let empirical = || Ok((ChannelModel::Empirical, empirical_from_counts(counts)?));
    if kind == ModelKind::Empirical
        || total < MIN_PARAMETRIC_SAMPLES
        || occupied < 2
        || grid.is_degenerate()
    {
        return empirical();
    }

    match kind {
        ModelKind::Laplace => {
            let params = fit_laplace_binned(counts, grid)?;
            let pmf = discretize_pmf(&params, grid)?;
            Ok((ChannelModel::Laplace(params), pmf))
        }
        ModelKind::Gmm => {
            let (points, weights): (Vec<f64>, Vec<f64>) = counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| (grid.center(i as u32), c as f64))
                .unzip();
            let max_k = gmm::MAX_COMPONENTS.min((total / 8) as usize);
            let params = fit_gmm_weighted(&points, &weights, max_k, seed)?;
            let pmf = discretize_pmf(&params, grid)?;
            Ok((ChannelModel::Gmm(params), pmf))
        }
        ModelKind::Empirical => empirical(),
    }
}
