//! Histograms, Shannon entropy and normalized mutual information.
//!
//! All logarithms are base 2, so entropies read as bits per sample.
//! NMI is `2·I(X;Y) / (H(X) + H(Y))`, with `I = H(X) + H(Y) − H(X,Y)` from a
//! joint histogram whose axes are binned exactly like [`Histogram`].

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AttributeGroup, GaussianCloud, SH_AC_PER_COLOR};

pub const DEFAULT_NMI_BINS: usize = 256;

/// Uniform binning of `[min, max]` into `bin_count` bins, top edge inclusive.
#[derive(Clone, Copy, Debug)]
struct Binning {
    min: f64,
    span: f64,
    bins: usize,
}

impl Binning {
    fn fit<T: Copy + Into<f64>>(values: &[T], bins: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        if bins == 0 {
            return Err(Error::InvalidParameter("bin_count must be positive".into()));
        }
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in values {
            let v: f64 = v.into();
            if !v.is_finite() {
                return Err(Error::Validation("non-finite value in histogram input".into()));
            }
            min = min.min(v);
            max = max.max(v);
        }
        Ok(Self {
            min,
            span: max - min,
            bins,
        })
    }

    #[inline]
    fn index(&self, v: f64) -> usize {
        if self.span <= 0.0 {
            return 0;
        }
        let t = (v - self.min) / self.span * self.bins as f64;
        (t as usize).min(self.bins - 1)
    }

    fn edges(&self) -> Vec<f64> {
        // a degenerate range still gets strictly increasing edges
        let width = if self.span > 0.0 {
            self.span / self.bins as f64
        } else {
            1.0 / self.bins as f64
        };
        let mut edges: Vec<f64> = (0..=self.bins).map(|i| self.min + i as f64 * width).collect();
        if self.span > 0.0 {
            edges[self.bins] = self.min + self.span;
        }
        edges
    }

    fn indices<T: Copy + Into<f64>>(&self, values: &[T]) -> Vec<u32> {
        values.iter().map(|&v| self.index(v.into()) as u32).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Histogram {
    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    /// Empirical pmf `counts / total`.
    pub fn pmf(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.total as f64)
            .collect()
    }
}

pub fn histogram<T: Copy + Into<f64>>(values: &[T], bin_count: usize) -> Result<Histogram> {
    let binning = Binning::fit(values, bin_count)?;
    let mut counts = vec![0u64; bin_count];
    for &v in values {
        counts[binning.index(v.into())] += 1;
    }
    Ok(Histogram {
        edges: binning.edges(),
        counts,
        total: values.len() as u64,
    })
}

/// Entropy in bits of an occupancy table. Counts are summed in sorted order
/// so the result does not depend on cell order.
pub fn entropy_of_counts(counts: &[u64]) -> f64 {
    let mut nonzero: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    let total: u64 = nonzero.iter().sum();
    if total == 0 {
        return 0.0;
    }
    nonzero.sort_unstable();
    let n = total as f64;
    let weighted: f64 = nonzero.iter().map(|&c| c as f64 * (c as f64).log2()).sum();
    (n.log2() - weighted / n).max(0.0)
}

pub fn shannon_entropy(h: &Histogram) -> Result<f64> {
    if h.total == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(entropy_of_counts(&h.counts))
}

fn nmi_from_indices(xi: &[u32], yi: &[u32], bins: usize) -> f64 {
    let mut joint = vec![0u64; bins * bins];
    let mut mx = vec![0u64; bins];
    let mut my = vec![0u64; bins];
    for (&a, &b) in xi.iter().zip(yi) {
        joint[a as usize * bins + b as usize] += 1;
        mx[a as usize] += 1;
        my[b as usize] += 1;
    }
    let hx = entropy_of_counts(&mx);
    let hy = entropy_of_counts(&my);
    let hsum = hx + hy;
    if hsum <= 0.0 {
        return 0.0;
    }
    let mutual = hsum - entropy_of_counts(&joint);
    (2.0 * mutual / hsum).clamp(0.0, 1.0)
}

/// Normalized mutual information of two equally long samples.
pub fn nmi<T: Copy + Into<f64>>(x: &[T], y: &[T], bin_count: usize) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: x.len(),
        });
    }
    let bx = Binning::fit(x, bin_count)?;
    let by = Binning::fit(y, bin_count)?;
    Ok(nmi_from_indices(&bx.indices(x), &by.indices(y), bin_count))
}

/// Square, symmetric NMI table.
#[derive(Clone, Debug, Serialize)]
pub struct NmiMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Rectangular NMI table between two channel sets.
#[derive(Clone, Debug, Serialize)]
pub struct NmiCross {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

/// Intra-SHAC blocks (one per color channel, 15×15) and the SHAC versus
/// rotation/scaling/opacity/SHDC block (45×11).
#[derive(Clone, Debug, Serialize)]
pub struct NmiHeatmap {
    pub intra: Vec<NmiMatrix>,
    pub cross: NmiCross,
}

fn table_csv(col_labels: &[String], row_labels: &[String], values: &[Vec<f64>]) -> String {
    let mut out = String::from("channel");
    for l in col_labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (label, row) in row_labels.iter().zip(values) {
        out.push_str(label);
        for v in row {
            out.push_str(&format!(",{v:.6}"));
        }
        out.push('\n');
    }
    out
}

impl NmiMatrix {
    pub fn to_csv(&self) -> String {
        table_csv(&self.labels, &self.labels, &self.values)
    }
}

impl NmiCross {
    pub fn to_csv(&self) -> String {
        table_csv(&self.col_labels, &self.row_labels, &self.values)
    }
}

pub fn nmi_heatmap(cloud: &GaussianCloud, bin_count: usize) -> Result<NmiHeatmap> {
    if cloud.count() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: cloud.count(),
        });
    }
    let binned = |group: AttributeGroup| -> Result<Vec<Vec<u32>>> {
        cloud
            .group(group)
            .par_iter()
            .map(|column| Ok(Binning::fit(column, bin_count)?.indices(column)))
            .collect()
    };
    let shac = binned(AttributeGroup::ShAc)?;
    let others: Vec<(String, Vec<u32>)> = [
        AttributeGroup::Rotation,
        AttributeGroup::Scaling,
        AttributeGroup::Opacity,
        AttributeGroup::ShDc,
    ]
    .into_iter()
    .map(|g| -> Result<Vec<(String, Vec<u32>)>> {
        Ok(binned(g)?
            .into_iter()
            .enumerate()
            .map(|(i, idx)| (g.channel_label(i), idx))
            .collect())
    })
    .collect::<Result<Vec<_>>>()?
    .into_iter()
    .flatten()
    .collect();

    let intra = (0..3)
        .map(|color| {
            let base = color * SH_AC_PER_COLOR;
            let labels = (0..SH_AC_PER_COLOR)
                .map(|i| AttributeGroup::ShAc.channel_label(base + i))
                .collect();
            let pairs: Vec<(usize, usize)> = (0..SH_AC_PER_COLOR)
                .flat_map(|i| (i..SH_AC_PER_COLOR).map(move |j| (i, j)))
                .collect();
            let scores: Vec<f64> = pairs
                .par_iter()
                .map(|&(i, j)| nmi_from_indices(&shac[base + i], &shac[base + j], bin_count))
                .collect();
            let mut values = vec![vec![0.0; SH_AC_PER_COLOR]; SH_AC_PER_COLOR];
            for (&(i, j), &s) in pairs.iter().zip(&scores) {
                values[i][j] = s;
                values[j][i] = s;
            }
            NmiMatrix { labels, values }
        })
        .collect();

    let values = shac
        .par_iter()
        .map(|row| {
            others
                .iter()
                .map(|(_, col)| nmi_from_indices(row, col, bin_count))
                .collect()
        })
        .collect();
    let cross = NmiCross {
        row_labels: (0..shac.len())
            .map(|i| AttributeGroup::ShAc.channel_label(i))
            .collect(),
        col_labels: others.iter().map(|(l, _)| l.clone()).collect(),
        values,
    };
    Ok(NmiHeatmap { intra, cross })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_values_two_bins() {
        let h = histogram(&[0.0f64, 1.0], 2).unwrap();
        assert_eq!(h.counts, vec![1, 1]);
        assert_eq!(h.edges, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn degenerate_range_single_bin() {
        let h = histogram(&[5.0f64, 5.0, 5.0], 4).unwrap();
        assert_eq!(h.counts, vec![3, 0, 0, 0]);
        assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_histogram_errors() {
        assert!(matches!(histogram::<f64>(&[], 4), Err(Error::EmptyInput)));
    }

    #[test]
    fn uniform_counts_concentrate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.gen::<f64>()).collect();
        let h = histogram(&xs, 10).unwrap();
        // binomial(1e5, 0.1): sigma = sqrt(1e5 * 0.1 * 0.9)
        let sigma = (1e5f64 * 0.1 * 0.9).sqrt();
        for &c in &h.counts {
            assert!((c as f64 - 1e4).abs() < 5.0 * sigma, "{c}");
        }
        assert_eq!(h.total, 100_000);
    }

    #[test]
    fn entropy_closed_forms() {
        let h = |counts: Vec<u64>| Histogram {
            total: counts.iter().sum(),
            edges: (0..=counts.len()).map(|i| i as f64).collect(),
            counts,
        };
        assert!((shannon_entropy(&h(vec![5, 5, 5, 5])).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(shannon_entropy(&h(vec![0, 9, 0])).unwrap(), 0.0);
        assert!((shannon_entropy(&h(vec![2, 1, 1])).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn nmi_self_and_mirror_are_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.gen_range(-3.0..7.0)).collect();
        let mirror: Vec<f64> = xs.iter().map(|x| 2.5 - x).collect();
        assert!((nmi(&xs, &xs, 64).unwrap() - 1.0).abs() < 1e-12);
        assert!((nmi(&xs, &mirror, 64).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nmi_shape_mismatch() {
        assert!(matches!(
            nmi(&[1.0f64, 2.0], &[1.0], 8),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn nmi_constant_inputs_are_zero() {
        assert_eq!(nmi(&[1.0f64; 10], &[2.0; 10], 8).unwrap(), 0.0);
    }

    #[test]
    fn heatmap_duplicate_channel_scores_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut cloud = GaussianCloud::zeros(2_000);
        for c in 0..45 {
            let col = cloud.channel_mut(AttributeGroup::ShAc, c).unwrap();
            col.iter_mut().for_each(|v| *v = rng.gen());
        }
        let copy = cloud.channel(AttributeGroup::ShAc, 3).unwrap().to_vec();
        cloud
            .channel_mut(AttributeGroup::ShAc, 7)
            .unwrap()
            .copy_from_slice(&copy);
        let map = nmi_heatmap(&cloud, 32).unwrap();
        assert!((map.intra[0].values[3][7] - 1.0).abs() < 1e-12);
        assert!((map.intra[0].values[7][3] - 1.0).abs() < 1e-12);
        for block in &map.intra {
            for i in 0..15 {
                assert!((block.values[i][i] - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(map.cross.values.len(), 45);
        assert_eq!(map.cross.values[0].len(), 11);
        assert!(map.intra[1].to_csv().starts_with("channel,f_rest_15,"));
    }
}
