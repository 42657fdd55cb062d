//! Geometry and SHDC coding as a colored point cloud.
//!
//! Points are put in Morton order (ties broken by original index), the sorted
//! codes are delta coded as varints and passed through the adaptive byte
//! coder. If that would exceed the bit-packed size, the coordinates are
//! stored packed instead. SHDC channels are range coded in the same order
//! against their empirical tables.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fit::Pmf;
use crate::model::{AttributeGroup, GaussianCloud};
use crate::quant::QuantGrid;
use crate::range_coder::{
    adaptive_byte_decode, adaptive_byte_encode, decode_symbols, encode_symbols, CodedPayload,
};
use crate::wire::{put_varint, Reader};

/// Deepest per-axis depth a 63-bit Morton code can hold.
pub const MAX_MORTON_DEPTH: u8 = 21;

const MODE_DELTA: u8 = 0;
const MODE_PACKED: u8 = 1;

/// Interleaves the low `depth` bits of each coordinate, x in the lowest
/// position of every triple, then y, then z.
pub fn morton_code(x: u32, y: u32, z: u32, depth: u8) -> Result<u64> {
    if depth > MAX_MORTON_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "morton depth {depth} exceeds {MAX_MORTON_DEPTH}"
        )));
    }
    let limit = 1u64 << depth;
    for v in [x, y, z] {
        if v as u64 >= limit {
            return Err(Error::OutOfBounds {
                index: v as usize,
                limit: limit as usize,
            });
        }
    }
    Ok(spread(x) | spread(y) << 1 | spread(z) << 2)
}

pub fn morton_decode(code: u64) -> [u32; 3] {
    [compact(code), compact(code >> 1), compact(code >> 2)]
}

fn spread(v: u32) -> u64 {
    let mut x = v as u64 & 0x1f_ffff;
    x = (x | x << 32) & 0x001f_0000_0000_ffff;
    x = (x | x << 16) & 0x001f_0000_ff00_00ff;
    x = (x | x << 8) & 0x100f_00f0_0f00_f00f;
    x = (x | x << 4) & 0x10c3_0c30_c30c_30c3;
    x = (x | x << 2) & 0x1249_2492_4924_9249;
    x
}

fn compact(code: u64) -> u32 {
    let mut x = code & 0x1249_2492_4924_9249;
    x = (x | x >> 2) & 0x10c3_0c30_c30c_30c3;
    x = (x | x >> 4) & 0x100f_00f0_0f00_f00f;
    x = (x | x >> 8) & 0x001f_0000_ff00_00ff;
    x = (x | x >> 16) & 0x001f_0000_0000_ffff;
    x = (x | x >> 32) & 0x1f_ffff;
    x as u32
}

/// Permutation mapping canonical position to original index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalOrder {
    pub permutation: Vec<usize>,
}

impl CanonicalOrder {
    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn apply(&self, cloud: &GaussianCloud) -> GaussianCloud {
        cloud.select(&self.permutation)
    }

    pub fn apply_slice<T: Copy + Send + Sync>(&self, values: &[T]) -> Vec<T> {
        self.permutation.par_iter().map(|&i| values[i]).collect()
    }
}

/// Quantized coordinates of every point under the three axis grids.
pub fn quantize_positions(cloud: &GaussianCloud, grids: &[QuantGrid; 3]) -> Result<Vec<[u32; 3]>> {
    let axes: Vec<&[f32]> = (0..3)
        .map(|a| cloud.channel(AttributeGroup::Geometry, a))
        .collect::<Result<_>>()?;
    Ok((0..cloud.count())
        .into_par_iter()
        .map(|i| [0, 1, 2].map(|a| grids[a].quantize(axes[a][i])))
        .collect())
}

fn common_depth(grids: &[QuantGrid; 3]) -> Result<u8> {
    let depth = grids.iter().map(|g| g.depth).max().unwrap();
    if depth > MAX_MORTON_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "geometry depth {depth} exceeds {MAX_MORTON_DEPTH}"
        )));
    }
    Ok(depth)
}

/// Stable Morton sort of the quantized positions.
pub fn canonical_sort(cloud: &GaussianCloud, geo_grids: &[QuantGrid; 3]) -> Result<CanonicalOrder> {
    let depth = common_depth(geo_grids)?;
    let coords = quantize_positions(cloud, geo_grids)?;
    let codes: Vec<u64> = coords
        .par_iter()
        .map(|c| morton_code(c[0], c[1], c[2], depth))
        .collect::<Result<_>>()?;
    let mut permutation: Vec<usize> = (0..codes.len()).collect();
    permutation.par_sort_by_key(|&i| (codes[i], i));
    Ok(CanonicalOrder { permutation })
}

fn packed_len(n: usize, depths: [u8; 3]) -> usize {
    let bits = n as u64 * depths.iter().map(|&d| d as u64).sum::<u64>();
    bits.div_ceil(8) as usize
}

/// Codes Morton-sorted coordinates. `depths` are the per-axis grid depths.
pub fn encode_geometry(coords: &[[u32; 3]], depths: [u8; 3]) -> Result<CodedPayload> {
    let depth = *depths.iter().max().unwrap();
    if depth > MAX_MORTON_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "geometry depth {depth} exceeds {MAX_MORTON_DEPTH}"
        )));
    }
    for (i, c) in coords.iter().enumerate() {
        for a in 0..3 {
            if c[a] as u64 >= 1u64 << depths[a] {
                return Err(Error::OutOfBounds {
                    index: c[a] as usize,
                    limit: 1usize << depths[a],
                })
                .map_err(|e| Error::Contract(format!("point {i}: {e}")));
            }
        }
    }

    let mut varints = Vec::with_capacity(coords.len() * 4);
    let mut prev = 0u64;
    for (i, c) in coords.iter().enumerate() {
        let code = morton_code(c[0], c[1], c[2], depth)?;
        if code < prev {
            return Err(Error::Contract(format!(
                "geometry not in Morton order at point {i}"
            )));
        }
        put_varint(&mut varints, code - prev);
        prev = code;
    }

    let coded = adaptive_byte_encode(&varints).bytes;
    let packed = packed_len(coords.len(), depths);
    let mut bytes = Vec::with_capacity(coded.len().min(packed) + 1);
    if coded.len() <= packed {
        bytes.push(MODE_DELTA);
        bytes.extend_from_slice(&coded);
    } else {
        bytes.push(MODE_PACKED);
        let mut acc = 0u64;
        let mut filled = 0u32;
        for c in coords {
            for a in 0..3 {
                acc |= (c[a] as u64) << filled;
                filled += depths[a] as u32;
                while filled >= 8 {
                    bytes.push(acc as u8);
                    acc >>= 8;
                    filled -= 8;
                }
            }
        }
        if filled > 0 {
            bytes.push(acc as u8);
        }
    }
    Ok(CodedPayload {
        bytes,
        symbol_count: coords.len(),
    })
}

pub fn decode_geometry(bytes: &[u8], n: usize, depths: [u8; 3]) -> Result<Vec<[u32; 3]>> {
    let depth = *depths.iter().max().unwrap();
    if depth > MAX_MORTON_DEPTH {
        return Err(Error::Corrupt(format!("geometry depth {depth} exceeds {MAX_MORTON_DEPTH}")));
    }
    if n == 0 && bytes.is_empty() {
        return Ok(Vec::new());
    }
    let (&mode, body) = bytes
        .split_first()
        .ok_or_else(|| Error::Corrupt("empty geometry payload".into()))?;
    let mut coords = Vec::with_capacity(n);
    match mode {
        MODE_DELTA => {
            let varints = adaptive_byte_decode(body)?;
            let mut r = Reader::new(&varints);
            let mut code = 0u64;
            let limit = 1u64.checked_shl(3 * depth as u32).unwrap_or(0);
            for _ in 0..n {
                code = code
                    .checked_add(r.varint()?)
                    .filter(|&c| limit == 0 || c < limit)
                    .ok_or_else(|| Error::Corrupt("morton code out of range".into()))?;
                let c = morton_decode(code);
                for a in 0..3 {
                    if c[a] as u64 >= 1u64 << depths[a] {
                        return Err(Error::Corrupt(format!("coordinate {} exceeds axis depth", c[a])));
                    }
                }
                coords.push(c);
            }
            if r.remaining() != 0 {
                return Err(Error::Corrupt("trailing bytes in geometry payload".into()));
            }
        }
        MODE_PACKED => {
            if body.len() != packed_len(n, depths) {
                return Err(Error::Corrupt(format!(
                    "packed geometry is {} bytes, expected {}",
                    body.len(),
                    packed_len(n, depths)
                )));
            }
            let mut acc = 0u64;
            let mut filled = 0u32;
            let mut it = body.iter();
            for _ in 0..n {
                let mut c = [0u32; 3];
                for a in 0..3 {
                    let d = depths[a] as u32;
                    while filled < d {
                        acc |= (*it.next().unwrap() as u64) << filled;
                        filled += 8;
                    }
                    c[a] = (acc & ((1u64 << d) - 1)) as u32;
                    acc >>= d;
                    filled -= d;
                }
                coords.push(c);
            }
        }
        other => return Err(Error::Corrupt(format!("unknown geometry mode {other}"))),
    }
    Ok(coords)
}

/// Range codes the three SHDC index channels, in canonical order.
pub fn encode_shdc(channels: [&[u32]; 3], pmfs: [&Pmf; 3]) -> Result<[CodedPayload; 3]> {
    let mut out = (0..3)
        .into_par_iter()
        .map(|c| encode_symbols(channels[c], pmfs[c]).map_err(|e| e.in_channel(AttributeGroup::ShDc, c)))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    Ok([out.next().unwrap(), out.next().unwrap(), out.next().unwrap()])
}

pub fn decode_shdc(payloads: [&[u8]; 3], pmfs: [&Pmf; 3], n: usize) -> Result<[Vec<u32>; 3]> {
    let mut out = (0..3)
        .into_par_iter()
        .map(|c| decode_symbols(payloads[c], pmfs[c], n).map_err(|e| e.in_channel(AttributeGroup::ShDc, c)))
        .collect::<Result<Vec<_>>>()?
        .into_iter();
    Ok([out.next().unwrap(), out.next().unwrap(), out.next().unwrap()])
}
