use serde::Serialize;

use crate::error::{Error, Result};

pub const PMF_TOTAL_BITS: u32 = 16;
/// Fixed-point denominator of every coding table.
pub const PMF_TOTAL: u32 = 1 << PMF_TOTAL_BITS;

/// Integer frequency table over quantization levels. Every level has
/// frequency at least 1 and the frequencies sum to exactly [`PMF_TOTAL`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Pmf {
    freqs: Vec<u32>,
    #[serde(skip)]
    cum: Vec<u32>,
}

impl Pmf {
    pub fn from_freqs(freqs: Vec<u32>) -> Result<Self> {
        if freqs.len() < 2 || freqs.len() > PMF_TOTAL as usize {
            return Err(Error::InvalidParameter(format!(
                "pmf length {} outside [2, {PMF_TOTAL}]",
                freqs.len()
            )));
        }
        if let Some(i) = freqs.iter().position(|&f| f == 0) {
            return Err(Error::InvalidParameter(format!("pmf level {i} has zero frequency")));
        }
        let total: u64 = freqs.iter().map(|&f| f as u64).sum();
        if total != PMF_TOTAL as u64 {
            return Err(Error::InvalidParameter(format!(
                "pmf total {total} != {PMF_TOTAL}"
            )));
        }
        let mut cum = Vec::with_capacity(freqs.len() + 1);
        let mut acc = 0u32;
        cum.push(0);
        for &f in &freqs {
            acc += f;
            cum.push(acc);
        }
        Ok(Self { freqs, cum })
    }

    /// Scales nonnegative masses onto integer frequencies: floor with a floor
    /// of 1 per level, then the residue is settled one unit at a time by
    /// largest remainder, so each level stays within one unit of its exact
    /// scaled mass unless the floor of 1 forced it up.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        let n = masses.len();
        if n < 2 || n > PMF_TOTAL as usize {
            return Err(Error::InvalidParameter(format!(
                "pmf length {n} outside [2, {PMF_TOTAL}]"
            )));
        }
        let sum: f64 = masses.iter().filter(|m| m.is_finite() && **m > 0.0).sum();
        let scaled: Vec<f64> = if sum > 0.0 {
            masses
                .iter()
                .map(|&m| {
                    if m.is_finite() && m > 0.0 {
                        m / sum * PMF_TOTAL as f64
                    } else {
                        0.0
                    }
                })
                .collect()
        } else {
            vec![PMF_TOTAL as f64 / n as f64; n]
        };

        let mut freqs: Vec<u32> = scaled.iter().map(|&s| (s.floor() as u32).max(1)).collect();
        let mut residue = PMF_TOTAL as i64 - freqs.iter().map(|&f| f as i64).sum::<i64>();

        let mut order: Vec<usize> = (0..n).collect();
        let slack = |i: usize, f: &[u32]| scaled[i] - f[i] as f64;
        if residue > 0 {
            order.sort_by(|&a, &b| slack(b, &freqs).total_cmp(&slack(a, &freqs)).then(a.cmp(&b)));
            let mut k = 0;
            while residue > 0 {
                freqs[order[k % n]] += 1;
                residue -= 1;
                k += 1;
            }
        }
        while residue < 0 {
            order.sort_by(|&a, &b| slack(a, &freqs).total_cmp(&slack(b, &freqs)).then(a.cmp(&b)));
            for &i in &order {
                if residue == 0 {
                    break;
                }
                if freqs[i] > 1 {
                    freqs[i] -= 1;
                    residue += 1;
                }
            }
        }
        Self::from_freqs(freqs)
    }

    /// Flat table over `levels` symbols.
    pub fn uniform(levels: usize) -> Result<Self> {
        Self::from_masses(&vec![1.0; levels])
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn freqs(&self) -> &[u32] {
        &self.freqs
    }

    pub fn total(&self) -> u32 {
        PMF_TOTAL
    }

    #[inline]
    pub fn start(&self, symbol: usize) -> u32 {
        self.cum[symbol]
    }

    #[inline]
    pub fn freq(&self, symbol: usize) -> u32 {
        self.freqs[symbol]
    }

    /// Symbol whose cumulative interval contains `target` (`target < total`).
    #[inline]
    pub fn symbol_for(&self, target: u32) -> usize {
        self.cum.partition_point(|&c| c <= target) - 1
    }

    pub fn probability(&self, symbol: usize) -> f64 {
        self.freqs[symbol] as f64 / PMF_TOTAL as f64
    }

    /// Entropy of the table itself, in bits.
    pub fn entropy_bits(&self) -> f64 {
        self.freqs
            .iter()
            .map(|&f| {
                let p = f as f64 / PMF_TOTAL as f64;
                -p * p.log2()
            })
            .sum()
    }

    /// Mean ideal code length, in bits per symbol, of data with the given
    /// level occupancy when coded under this table.
    pub fn cross_entropy_bits(&self, counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return 0.0;
        }
        counts
            .iter()
            .zip(&self.freqs)
            .filter(|(c, _)| **c > 0)
            .map(|(&c, &f)| c as f64 * -(f as f64 / PMF_TOTAL as f64).log2())
            .sum::<f64>()
            / n as f64
    }
}
