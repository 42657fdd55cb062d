//! Machine-readable analysis reports.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bitstream::{ChannelStats, Encoded, SizeReport};
use crate::error::Result;
use crate::fit::ChannelModel;
use crate::model::{AttributeGroup, GaussianCloud};
use crate::stats::{histogram, Histogram};

/// Entropy versus actual rate of one group, averaged over its channels.
#[derive(Clone, Debug, Serialize)]
pub struct EntropyRow {
    pub group: AttributeGroup,
    pub entropy_bits: f64,
    pub actual_bits: f64,
    pub overhead_percent: f64,
}

pub fn entropy_table(encoded: &Encoded) -> Vec<EntropyRow> {
    AttributeGroup::ENTROPY_CODED
        .iter()
        .map(|&group| {
            let chans: Vec<&ChannelStats> = encoded.channels.iter().filter(|c| c.group == group).collect();
            let k = chans.len() as f64;
            let entropy_bits = chans.iter().map(|c| c.entropy_bits).sum::<f64>() / k;
            let actual_bits = chans.iter().map(|c| c.actual_bits).sum::<f64>() / k;
            let overhead_percent = if entropy_bits > 0.0 {
                (actual_bits / entropy_bits - 1.0) * 100.0
            } else {
                0.0
            };
            EntropyRow {
                group,
                entropy_bits,
                actual_bits,
                overhead_percent,
            }
        })
        .collect()
}

pub fn entropy_csv(rows: &[EntropyRow], channels: &[ChannelStats]) -> String {
    let mut out = String::from("channel,depth,model,entropy_bits,actual_bits,overhead_percent\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},,,{:.4},{:.4},{:.3}",
            r.group, r.entropy_bits, r.actual_bits, r.overhead_percent
        );
    }
    for c in channels {
        let model = match c.model {
            ChannelModel::Empirical => "empirical",
            ChannelModel::Laplace(_) => "laplace",
            ChannelModel::Gmm(_) => "gmm",
        };
        let _ = writeln!(
            out,
            "{},{},{model},{:.4},{:.4},{:.3}",
            c.label,
            c.depth,
            c.entropy_bits,
            c.actual_bits,
            c.overhead_percent()
        );
    }
    out
}

/// Fitted model of a channel next to a histogram of its stored values.
#[derive(Clone, Debug, Serialize)]
pub struct FitRow {
    pub label: String,
    pub group: AttributeGroup,
    pub depth: u8,
    pub model: ChannelModel,
    pub histogram: Option<Histogram>,
}

pub fn fit_table(cloud: &GaussianCloud, encoded: &Encoded, bins: usize) -> Result<Vec<FitRow>> {
    encoded
        .channels
        .iter()
        .map(|c| {
            let values = cloud.channel(c.group, c.channel)?;
            let histogram = if values.is_empty() {
                None
            } else {
                Some(histogram(values, bins)?)
            };
            Ok(FitRow {
                label: c.label.clone(),
                group: c.group,
                depth: c.depth,
                model: c.model.clone(),
                histogram,
            })
        })
        .collect()
}

/// Human-readable per-group size table.
pub fn size_table(report: &SizeReport) -> String {
    let mut out = String::new();
    let total = report.total_bytes as f64;
    for g in &report.groups {
        let _ = writeln!(
            out,
            "  {:<9} {:>12} B  {:5.1}%",
            g.group.name(),
            g.total(),
            100.0 * g.total() as f64 / total
        );
    }
    let _ = writeln!(out, "  {:<9} {:>12} B  {:5.1}%", "header", report.header_bytes, 100.0 * report.header_bytes as f64 / total);
    let _ = write!(
        out,
        "  total     {:>12} B  (raw {} B, ratio {:.2}x)",
        report.total_bytes,
        report.raw_bytes(),
        report.ratio()
    );
    out
}
