//! In-memory Gaussian splat model.
//!
//! A [`GaussianCloud`] stores its 59 scalar attributes column-major: one
//! contiguous `Vec<f32>` per channel, grouped into the six attribute groups
//! below. Column storage makes per-channel quantization, fitting and coding
//! borrow a plain slice.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Number of SH AC coefficients per color channel at degree 3.
pub const SH_AC_PER_COLOR: usize = 15;

/// Total scalar channels per Gaussian.
pub const CHANNELS_PER_GAUSSIAN: usize = 59;

/// The six attribute groups a Gaussian is partitioned into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeGroup {
    Geometry,
    Rotation,
    Scaling,
    Opacity,
    ShDc,
    ShAc,
}

impl AttributeGroup {
    pub const ALL: [AttributeGroup; 6] = [
        AttributeGroup::Geometry,
        AttributeGroup::Rotation,
        AttributeGroup::Scaling,
        AttributeGroup::Opacity,
        AttributeGroup::ShDc,
        AttributeGroup::ShAc,
    ];

    /// Groups coded through the per-channel entropy path (everything but geometry).
    pub const ENTROPY_CODED: [AttributeGroup; 5] = [
        AttributeGroup::Rotation,
        AttributeGroup::Scaling,
        AttributeGroup::Opacity,
        AttributeGroup::ShDc,
        AttributeGroup::ShAc,
    ];

    pub const fn channel_count(self) -> usize {
        match self {
            AttributeGroup::Geometry => 3,
            AttributeGroup::Rotation => 4,
            AttributeGroup::Scaling => 3,
            AttributeGroup::Opacity => 1,
            AttributeGroup::ShDc => 3,
            AttributeGroup::ShAc => 3 * SH_AC_PER_COLOR,
        }
    }

    /// Offset of the group's first channel in the flat channel table.
    pub const fn offset(self) -> usize {
        match self {
            AttributeGroup::Geometry => 0,
            AttributeGroup::Rotation => 3,
            AttributeGroup::Scaling => 7,
            AttributeGroup::Opacity => 10,
            AttributeGroup::ShDc => 11,
            AttributeGroup::ShAc => 14,
        }
    }

    /// Wire tag used in the container.
    pub const fn tag(self) -> u8 {
        match self {
            AttributeGroup::Geometry => 0,
            AttributeGroup::Rotation => 1,
            AttributeGroup::Scaling => 2,
            AttributeGroup::Opacity => 3,
            AttributeGroup::ShDc => 4,
            AttributeGroup::ShAc => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    pub const fn name(self) -> &'static str {
        match self {
            AttributeGroup::Geometry => "geometry",
            AttributeGroup::Rotation => "rotation",
            AttributeGroup::Scaling => "scaling",
            AttributeGroup::Opacity => "opacity",
            AttributeGroup::ShDc => "shdc",
            AttributeGroup::ShAc => "shac",
        }
    }

    /// PLY property name of one channel, also used as a report label.
    pub fn channel_label(self, index: usize) -> String {
        match self {
            AttributeGroup::Geometry => ["x", "y", "z"][index].to_string(),
            AttributeGroup::Rotation => format!("rot_{index}"),
            AttributeGroup::Scaling => format!("scale_{index}"),
            AttributeGroup::Opacity => "opacity".to_string(),
            AttributeGroup::ShDc => format!("f_dc_{index}"),
            AttributeGroup::ShAc => format!("f_rest_{index}"),
        }
    }
}

impl fmt::Display for AttributeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttributeGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "geometry" | "position" | "xyz" => Ok(AttributeGroup::Geometry),
            "rotation" | "rot" => Ok(AttributeGroup::Rotation),
            "scaling" | "scale" => Ok(AttributeGroup::Scaling),
            "opacity" => Ok(AttributeGroup::Opacity),
            "shdc" | "sh_dc" | "dc" => Ok(AttributeGroup::ShDc),
            "shac" | "sh_ac" | "ac" => Ok(AttributeGroup::ShAc),
            other => Err(Error::InvalidParameter(format!(
                "unknown attribute group: {other}"
            ))),
        }
    }
}

/// A 3DGS model: `count` Gaussians with 59 scalar channels each, in stored
/// (pre-activation) units.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianCloud {
    count: usize,
    channels: Vec<Vec<f32>>,
}

impl GaussianCloud {
    /// A cloud of `count` Gaussians with every attribute zero.
    pub fn zeros(count: usize) -> Self {
        Self {
            count,
            channels: vec![vec![0.0; count]; CHANNELS_PER_GAUSSIAN],
        }
    }

    /// Builds a cloud from 59 channel columns in group order, checking that all
    /// columns share one length and hold finite values.
    pub fn from_channels(channels: Vec<Vec<f32>>) -> Result<Self> {
        if channels.len() != CHANNELS_PER_GAUSSIAN {
            return Err(Error::Shape {
                expected: CHANNELS_PER_GAUSSIAN,
                actual: channels.len(),
            });
        }
        let count = channels[0].len();
        for column in &channels {
            if column.len() != count {
                return Err(Error::Shape {
                    expected: count,
                    actual: column.len(),
                });
            }
        }
        let cloud = Self { count, channels };
        cloud.validate()?;
        Ok(cloud)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Read access to one scalar channel.
    pub fn channel(&self, group: AttributeGroup, index: usize) -> Result<&[f32]> {
        if index >= group.channel_count() {
            return Err(Error::OutOfBounds {
                index,
                limit: group.channel_count(),
            });
        }
        Ok(&self.channels[group.offset() + index])
    }

    pub fn channel_mut(&mut self, group: AttributeGroup, index: usize) -> Result<&mut [f32]> {
        if index >= group.channel_count() {
            return Err(Error::OutOfBounds {
                index,
                limit: group.channel_count(),
            });
        }
        Ok(&mut self.channels[group.offset() + index])
    }

    /// All channels of one group, in channel order.
    pub fn group(&self, group: AttributeGroup) -> &[Vec<f32>] {
        let start = group.offset();
        &self.channels[start..start + group.channel_count()]
    }

    /// The flat channel table in group order.
    pub fn channels(&self) -> &[Vec<f32>] {
        &self.channels
    }

    pub fn position(&self, i: usize) -> [f32; 3] {
        [self.channels[0][i], self.channels[1][i], self.channels[2][i]]
    }

    /// A new cloud holding the Gaussians at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let channels = self
            .channels
            .iter()
            .map(|column| indices.iter().map(|&i| column[i]).collect())
            .collect();
        Self {
            count: indices.len(),
            channels,
        }
    }

    /// Keeps the Gaussians whose mask entry is true, preserving order.
    pub fn retain_mask(&self, keep: &[bool]) -> Self {
        let indices: Vec<usize> = keep
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| k.then_some(i))
            .collect();
        self.select(&indices)
    }

    /// Fails on the first non-finite value, naming its row.
    pub fn validate(&self) -> Result<()> {
        for group in AttributeGroup::ALL {
            for (c, column) in self.group(group).iter().enumerate() {
                if let Some(row) = column.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Validation(format!(
                        "non-finite value in {} at row {row}",
                        group.channel_label(c)
                    )));
                }
            }
        }
        Ok(())
    }
}
