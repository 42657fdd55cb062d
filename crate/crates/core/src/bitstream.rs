//! The `.egs` container: header, per-channel tables, framed payloads.
//!
//! Layout (all little endian):
//!
//! ```text
//! "EGS1" | version u8 | count u64 | sh_degree u8 | preset u8 | geometry codec u8
//! 3 × (depth u8, v_min f32, v_max f32)                 geometry grids
//! geometry frame: len u32, offset u64, crc32 u32
//! channel count u16 (56)
//! per channel: group u8, index u8, depth u8, v_min f32, v_max f32,
//!              model u8, params, L × freq u16, len u32, offset u64, crc32 u32
//! header crc32 u32
//! payload region: geometry payload, then channel payloads in table order
//! ```
//!
//! Offsets are relative to the start of the payload region. Model params are
//! `mu, b` for Laplace and `k u8, k × (weight, mean, variance)` for a
//! mixture, all `f32`; empirical channels carry none. The decoder only reads
//! the frequency tables.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{
    fit_channel_model, level_counts, ChannelModel, GmmParams, LaplaceParams, ModelKind, Pmf,
    MAX_PMF_DEPTH,
};
use crate::model::{AttributeGroup, GaussianCloud, CHANNELS_PER_GAUSSIAN};
use crate::pc_codec::{self, canonical_sort, decode_geometry, encode_geometry, MAX_MORTON_DEPTH};
use crate::quant::{PresetName, QuantGrid, RatePreset};
use crate::range_coder::{decode_symbols, encode_symbols};
use crate::stats::entropy_of_counts;
use crate::wire::Reader;

pub const MAGIC: [u8; 4] = *b"EGS1";
pub const VERSION: u8 = 1;
pub const SH_DEGREE: u8 = 3;
/// Channels carried in the channel table: everything except geometry.
pub const TABLE_CHANNELS: usize = CHANNELS_PER_GAUSSIAN - 3;

const CODEC_INTERNAL: u8 = 0x01;
const CODEC_EXTERNAL: u8 = 0x02;

/// How geometry is coded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum GeometryCodec {
    #[default]
    Internal,
    /// An external point-cloud codec invoked as `<tool> encode <in> <out>`
    /// and `<tool> decode <in> <out>` on the raw point format.
    External(PathBuf),
}

#[derive(Clone, Debug, Default)]
pub struct EncodeOptions {
    pub preset: RatePreset,
    pub seed: u64,
    pub geometry: GeometryCodec,
}

#[derive(Clone, Debug, Default)]
pub struct DecodeOptions {
    /// Tool used for externally coded geometry.
    pub external_gpcc: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelHeader {
    pub group: AttributeGroup,
    pub channel: usize,
    pub grid: QuantGrid,
    pub model: ChannelModel,
    #[serde(skip)]
    pub pmf: Pmf,
    pub payload_len: u32,
    pub payload_offset: u64,
    pub crc: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometryFrame {
    pub external: bool,
    pub grids: [QuantGrid; 3],
    pub payload_len: u32,
    pub payload_offset: u64,
    pub crc: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContainerHeader {
    pub version: u8,
    pub count: u64,
    pub sh_degree: u8,
    pub preset: PresetName,
    pub geometry: GeometryFrame,
    pub channels: Vec<ChannelHeader>,
    /// Bytes from the start of the file to the payload region.
    pub header_len: usize,
}

/// Per-channel encode statistics.
#[derive(Clone, Debug, Serialize)]
pub struct ChannelStats {
    pub group: AttributeGroup,
    pub channel: usize,
    pub label: String,
    pub depth: u8,
    pub model: ChannelModel,
    /// Empirical entropy of the quantized indices, bits per sample.
    pub entropy_bits: f64,
    /// Ideal code length under the transmitted table, bits per sample.
    pub cross_entropy_bits: f64,
    /// Actual payload size, bits per sample.
    pub actual_bits: f64,
    pub payload_bytes: usize,
}

impl ChannelStats {
    /// Relative excess of the actual rate over the empirical entropy, percent.
    pub fn overhead_percent(&self) -> f64 {
        if self.entropy_bits > 0.0 {
            (self.actual_bits / self.entropy_bits - 1.0) * 100.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug)]
pub struct Encoded {
    pub bytes: Vec<u8>,
    pub channels: Vec<ChannelStats>,
    pub geometry_bytes: usize,
}

/// Quantization indices carried by a container, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedIndices {
    pub geometry: Vec<[u32; 3]>,
    /// One column per table channel, in table order.
    pub channels: Vec<Vec<u32>>,
}

fn table_channels() -> impl Iterator<Item = (AttributeGroup, usize)> {
    AttributeGroup::ENTROPY_CODED
        .into_iter()
        .flat_map(|g| (0..g.channel_count()).map(move |c| (g, c)))
}

fn channel_seed(seed: u64, flat: usize) -> u64 {
    seed ^ (flat as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct PreparedChannel {
    group: AttributeGroup,
    channel: usize,
    grid: QuantGrid,
    indices: Vec<u32>,
    counts: Vec<u64>,
    model: ChannelModel,
    pmf: Pmf,
}

pub fn encode(cloud: &GaussianCloud, options: &EncodeOptions) -> Result<Vec<u8>> {
    Ok(encode_detailed(cloud, options)?.bytes)
}

/// Encodes and returns per-channel statistics alongside the bytes.
pub fn encode_detailed(cloud: &GaussianCloud, options: &EncodeOptions) -> Result<Encoded> {
    cloud.validate()?;
    let n = cloud.count();
    let preset = &options.preset;

    let geo_depth = preset.depth(AttributeGroup::Geometry);
    if geo_depth > MAX_MORTON_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "geometry depth {geo_depth} exceeds {MAX_MORTON_DEPTH}"
        )));
    }
    let grids: [QuantGrid; 3] = {
        let g = (0..3)
            .map(|a| QuantGrid::fit(cloud.channel(AttributeGroup::Geometry, a)?, geo_depth))
            .collect::<Result<Vec<_>>>()?;
        [g[0], g[1], g[2]]
    };
    let order = canonical_sort(cloud, &grids)?;
    let coords = order.apply_slice(&pc_codec::quantize_positions(cloud, &grids)?);
    let depths = grids.map(|g| g.depth);
    let geometry_payload = match &options.geometry {
        GeometryCodec::Internal => encode_geometry(&coords, depths)?.bytes,
        GeometryCodec::External(tool) => external_encode(tool, &coords, depths)?,
    };

    let specs: Vec<(AttributeGroup, usize)> = table_channels().collect();
    let prepared: Vec<PreparedChannel> = specs
        .par_iter()
        .map(|&(group, channel)| {
            prepare_channel(cloud, &order, group, channel, preset.depth(group), options.seed)
                .map_err(|e| e.in_channel(group, channel))
        })
        .collect::<Result<_>>()?;

    let dc: Vec<&PreparedChannel> = prepared.iter().filter(|p| p.group == AttributeGroup::ShDc).collect();
    let dc_payloads = pc_codec::encode_shdc(
        [&dc[0].indices, &dc[1].indices, &dc[2].indices],
        [&dc[0].pmf, &dc[1].pmf, &dc[2].pmf],
    )?;
    let mut payloads: Vec<Vec<u8>> = prepared
        .par_iter()
        .map(|p| {
            if p.group == AttributeGroup::ShDc {
                return Ok(Vec::new());
            }
            encode_symbols(&p.indices, &p.pmf)
                .map(|c| c.bytes)
                .map_err(|e| e.in_channel(p.group, p.channel))
        })
        .collect::<Result<_>>()?;
    for (p, dc_payload) in prepared
        .iter()
        .enumerate()
        .filter(|(_, p)| p.group == AttributeGroup::ShDc)
        .map(|(i, _)| i)
        .zip(dc_payloads)
    {
        payloads[p] = dc_payload.bytes;
    }

    let channels: Vec<ChannelStats> = prepared
        .iter()
        .zip(&payloads)
        .map(|(p, bytes)| {
            let per_sample = |bits: f64| if n == 0 { 0.0 } else { bits / n as f64 };
            ChannelStats {
                group: p.group,
                channel: p.channel,
                label: p.group.channel_label(p.channel),
                depth: p.grid.depth,
                model: p.model.clone(),
                entropy_bits: entropy_of_counts(&p.counts),
                cross_entropy_bits: p.pmf.cross_entropy_bits(&p.counts),
                actual_bits: per_sample(bytes.len() as f64 * 8.0),
                payload_bytes: bytes.len(),
            }
        })
        .collect();

    let bytes = assemble(
        n as u64,
        preset.name,
        matches!(options.geometry, GeometryCodec::External(_)),
        &grids,
        &geometry_payload,
        &prepared,
        &payloads,
    )?;
    Ok(Encoded {
        bytes,
        channels,
        geometry_bytes: geometry_payload.len(),
    })
}

fn prepare_channel(
    cloud: &GaussianCloud,
    order: &pc_codec::CanonicalOrder,
    group: AttributeGroup,
    channel: usize,
    depth: u8,
    seed: u64,
) -> Result<PreparedChannel> {
    if depth > MAX_PMF_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "depth {depth} exceeds {MAX_PMF_DEPTH} for table-coded channels"
        )));
    }
    let values = cloud.channel(group, channel)?;
    let grid = QuantGrid::fit(values, depth)?;
    let indices: Vec<u32> = order.permutation.iter().map(|&i| grid.quantize(values[i])).collect();
    let counts = level_counts(&indices, &grid)?;
    let kind = ModelKind::for_group(group);
    let flat = group.offset() + channel;
    let (model, pmf) = fit_channel_model(kind, &counts, &grid, channel_seed(seed, flat))?;
    Ok(PreparedChannel {
        group,
        channel,
        grid,
        indices,
        counts,
        model,
        pmf,
    })
}

fn put_grid(out: &mut Vec<u8>, grid: &QuantGrid) {
    out.push(grid.depth);
    out.extend_from_slice(&grid.v_min.to_le_bytes());
    out.extend_from_slice(&grid.v_max.to_le_bytes());
}

fn put_model(out: &mut Vec<u8>, model: &ChannelModel) {
    out.push(model.tag());
    match model {
        ChannelModel::Empirical => {}
        ChannelModel::Laplace(p) => {
            out.extend_from_slice(&(p.mu as f32).to_le_bytes());
            out.extend_from_slice(&(p.b as f32).to_le_bytes());
        }
        ChannelModel::Gmm(p) => {
            out.push(p.k() as u8);
            for c in 0..p.k() {
                for v in [p.weights[c], p.means[c], p.variances[c]] {
                    out.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
        }
    }
}

fn payload_len_u32(len: usize) -> Result<u32> {
    u32::try_from(len).map_err(|_| Error::InvalidParameter(format!("payload of {len} bytes exceeds 4 GiB")))
}

fn assemble(
    count: u64,
    preset: PresetName,
    external: bool,
    grids: &[QuantGrid; 3],
    geometry: &[u8],
    channels: &[PreparedChannel],
    payloads: &[Vec<u8>],
) -> Result<Vec<u8>> {
    let payload_total: usize = geometry.len() + payloads.iter().map(Vec::len).sum::<usize>();
    let mut out = Vec::with_capacity(payload_total + 64 * 1024);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&count.to_le_bytes());
    out.push(SH_DEGREE);
    out.push(preset.as_byte());
    out.push(if external { CODEC_EXTERNAL } else { CODEC_INTERNAL });
    for g in grids {
        put_grid(&mut out, g);
    }
    let mut offset = 0u64;
    out.extend_from_slice(&payload_len_u32(geometry.len())?.to_le_bytes());
    out.extend_from_slice(&offset.to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(geometry).to_le_bytes());
    offset += geometry.len() as u64;

    out.extend_from_slice(&(channels.len() as u16).to_le_bytes());
    for (p, payload) in channels.iter().zip(payloads) {
        out.push(p.group.tag());
        out.push(p.channel as u8);
        put_grid(&mut out, &p.grid);
        put_model(&mut out, &p.model);
        for &f in p.pmf.freqs() {
            out.extend_from_slice(&(f as u16).to_le_bytes());
        }
        out.extend_from_slice(&payload_len_u32(payload.len())?.to_le_bytes());
        out.extend_from_slice(&offset.to_le_bytes());
        out.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
        offset += payload.len() as u64;
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());

    out.extend_from_slice(geometry);
    for payload in payloads {
        out.extend_from_slice(payload);
    }
    Ok(out)
}

fn read_grid(r: &mut Reader) -> Result<QuantGrid> {
    let depth = r.u8()?;
    let v_min = r.f32()?;
    let v_max = r.f32()?;
    QuantGrid::new(v_min, v_max, depth).map_err(|e| Error::Corrupt(format!("bad grid: {e}")))
}

fn read_model(r: &mut Reader) -> Result<ChannelModel> {
    match r.u8()? {
        0 => Ok(ChannelModel::Empirical),
        1 => {
            let mu = r.f32()? as f64;
            let b = r.f32()? as f64;
            Ok(ChannelModel::Laplace(LaplaceParams { mu, b }))
        }
        2 => {
            let k = r.u8()? as usize;
            if !(1..=crate::fit::gmm::MAX_COMPONENTS).contains(&k) {
                return Err(Error::Corrupt(format!("mixture with {k} components")));
            }
            let mut p = GmmParams {
                weights: Vec::with_capacity(k),
                means: Vec::with_capacity(k),
                variances: Vec::with_capacity(k),
            };
            for _ in 0..k {
                p.weights.push(r.f32()? as f64);
                p.means.push(r.f32()? as f64);
                p.variances.push(r.f32()? as f64);
            }
            Ok(ChannelModel::Gmm(p))
        }
        t => Err(Error::Corrupt(format!("unknown model tag {t}"))),
    }
}

/// Parses and validates the header without touching payloads.
pub fn read_header(bytes: &[u8]) -> Result<ContainerHeader> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4).map_err(|_| Error::Format("file too short for a container".into()))?;
    if magic != MAGIC {
        return Err(Error::Format("bad magic, not an EGS1 container".into()));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let count = r.u64()?;
    let sh_degree = r.u8()?;
    if sh_degree != SH_DEGREE {
        return Err(Error::Unsupported(format!("SH degree {sh_degree}")));
    }
    let preset = PresetName::from_byte(r.u8()?).ok_or_else(|| Error::Corrupt("unknown preset byte".into()))?;
    let external = match r.u8()? {
        CODEC_INTERNAL => false,
        CODEC_EXTERNAL => true,
        t => return Err(Error::Corrupt(format!("unknown geometry codec tag {t:#04x}"))),
    };
    let grids = [read_grid(&mut r)?, read_grid(&mut r)?, read_grid(&mut r)?];
    if grids.iter().any(|g| g.depth > MAX_MORTON_DEPTH) {
        return Err(Error::Corrupt("geometry depth exceeds Morton range".into()));
    }
    let geometry = GeometryFrame {
        external,
        grids,
        payload_len: r.u32()?,
        payload_offset: r.u64()?,
        crc: r.u32()?,
    };

    let table_len = r.u16()? as usize;
    if table_len != TABLE_CHANNELS {
        return Err(Error::Corrupt(format!("channel table has {table_len} entries")));
    }
    let mut channels = Vec::with_capacity(table_len);
    for (group, channel) in table_channels() {
        let tag = r.u8()?;
        let index = r.u8()? as usize;
        if AttributeGroup::from_tag(tag) != Some(group) || index != channel {
            return Err(Error::Corrupt(format!(
                "channel table entry ({tag}, {index}) where {group} {channel} was expected"
            )));
        }
        let grid = read_grid(&mut r)?;
        if grid.depth > MAX_PMF_DEPTH {
            return Err(Error::Corrupt(format!("{group} {channel}: depth {} too large", grid.depth)));
        }
        let model = read_model(&mut r)?;
        let raw = r.take(2 * grid.levels())?;
        let freqs: Vec<u32> = raw
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]) as u32)
            .collect();
        let pmf = Pmf::from_freqs(freqs).map_err(|e| Error::Corrupt(format!("{group} {channel}: {e}")))?;
        channels.push(ChannelHeader {
            group,
            channel,
            grid,
            model,
            pmf,
            payload_len: r.u32()?,
            payload_offset: r.u64()?,
            crc: r.u32()?,
        });
    }
    let header_len = r.position() + 4;
    let crc = r.u32()?;
    if crc != crc32fast::hash(&bytes[..header_len - 4]) {
        return Err(Error::Corrupt("header checksum mismatch".into()));
    }

    // payloads are contiguous and fill the rest of the file
    let mut expected = 0u64;
    let frames = std::iter::once((geometry.payload_offset, geometry.payload_len))
        .chain(channels.iter().map(|c| (c.payload_offset, c.payload_len)));
    for (offset, len) in frames {
        if offset != expected {
            return Err(Error::Corrupt(format!("payload at offset {offset}, expected {expected}")));
        }
        expected += len as u64;
    }
    let actual = (bytes.len() - header_len) as u64;
    if actual != expected {
        return Err(Error::Corrupt(format!(
            "payload region is {actual} bytes, header describes {expected}"
        )));
    }
    Ok(ContainerHeader {
        version,
        count,
        sh_degree,
        preset,
        geometry,
        channels,
        header_len,
    })
}

fn frame<'a>(bytes: &'a [u8], header: &ContainerHeader, offset: u64, len: u32, crc: u32, what: &str) -> Result<&'a [u8]> {
    let start = header.header_len + offset as usize;
    let body = &bytes[start..start + len as usize];
    if crc32fast::hash(body) != crc {
        return Err(Error::Corrupt(format!("{what} payload checksum mismatch")));
    }
    Ok(body)
}

/// Recovers the quantization indices without dequantizing.
pub fn decode_indices(bytes: &[u8], options: &DecodeOptions) -> Result<(ContainerHeader, DecodedIndices)> {
    let header = read_header(bytes)?;
    let n = usize::try_from(header.count).map_err(|_| Error::Corrupt("gaussian count overflows".into()))?;
    let geo = &header.geometry;
    let geo_bytes = frame(bytes, &header, geo.payload_offset, geo.payload_len, geo.crc, "geometry")?;
    let depths = geo.grids.map(|g| g.depth);

    let channels: Vec<Vec<u32>> = header
        .channels
        .par_iter()
        .map(|c| {
            let body = frame(bytes, &header, c.payload_offset, c.payload_len, c.crc, &c.group.channel_label(c.channel))?;
            decode_symbols(body, &c.pmf, n).map_err(|e| e.in_channel(c.group, c.channel))
        })
        .collect::<Result<_>>()?;

    let geometry = if geo.external {
        let tool = options
            .external_gpcc
            .as_ref()
            .ok_or_else(|| Error::External("container uses an external geometry codec; none given".into()))?;
        external_decode(tool, geo_bytes, n, depths)?
    } else {
        decode_geometry(geo_bytes, n, depths)?
    };
    Ok((header, DecodedIndices { geometry, channels }))
}

/// Reconstructs the dequantized cloud, in canonical order.
pub fn decode(bytes: &[u8], options: &DecodeOptions) -> Result<GaussianCloud> {
    let (header, indices) = decode_indices(bytes, options)?;
    let mut columns: Vec<Vec<f32>> = Vec::with_capacity(CHANNELS_PER_GAUSSIAN);
    for a in 0..3 {
        let grid = header.geometry.grids[a];
        columns.push(indices.geometry.iter().map(|c| grid.dequantize(c[a])).collect());
    }
    let rest: Vec<Vec<f32>> = header
        .channels
        .par_iter()
        .zip(&indices.channels)
        .map(|(c, idx)| idx.iter().map(|&i| c.grid.dequantize(i)).collect())
        .collect();
    columns.extend(rest);
    GaussianCloud::from_channels(columns)
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupSize {
    pub group: AttributeGroup,
    /// Entropy-coded payload bytes.
    pub payload_bytes: u64,
    /// Channel-table bytes (grids, model params, frequency tables).
    pub table_bytes: u64,
}

impl GroupSize {
    pub fn total(&self) -> u64 {
        self.payload_bytes + self.table_bytes
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SizeReport {
    pub count: u64,
    pub total_bytes: u64,
    /// Fixed header bytes not attributable to any group.
    pub header_bytes: u64,
    pub groups: Vec<GroupSize>,
}

impl SizeReport {
    /// Uncompressed size of the 59 float attributes.
    pub fn raw_bytes(&self) -> u64 {
        self.count * CHANNELS_PER_GAUSSIAN as u64 * 4
    }

    pub fn ratio(&self) -> f64 {
        self.raw_bytes() as f64 / self.total_bytes as f64
    }

    pub fn group(&self, group: AttributeGroup) -> &GroupSize {
        self.groups.iter().find(|g| g.group == group).unwrap()
    }
}

const FIXED_HEADER_BYTES: u64 = 4 + 1 + 8 + 1 + 1 + 1 + 2 + 4;
const GRID_BYTES: u64 = 9;
const FRAME_BYTES: u64 = 4 + 8 + 4;

fn model_bytes(model: &ChannelModel) -> u64 {
    1 + match model {
        ChannelModel::Empirical => 0,
        ChannelModel::Laplace(_) => 8,
        ChannelModel::Gmm(p) => 1 + 12 * p.k() as u64,
    }
}

/// Byte accounting per group; the parts sum to the file length.
pub fn size_report(bytes: &[u8]) -> Result<SizeReport> {
    let header = read_header(bytes)?;
    let mut groups: Vec<GroupSize> = AttributeGroup::ALL
        .iter()
        .map(|&group| GroupSize {
            group,
            payload_bytes: 0,
            table_bytes: 0,
        })
        .collect();
    let geo = &mut groups[0];
    geo.payload_bytes = header.geometry.payload_len as u64;
    geo.table_bytes = 3 * GRID_BYTES + FRAME_BYTES;
    for c in &header.channels {
        let g = &mut groups[c.group.tag() as usize];
        g.payload_bytes += c.payload_len as u64;
        g.table_bytes += 2 + GRID_BYTES + model_bytes(&c.model) + 2 * c.pmf.len() as u64 + FRAME_BYTES;
    }
    let report = SizeReport {
        count: header.count,
        total_bytes: bytes.len() as u64,
        header_bytes: FIXED_HEADER_BYTES,
        groups,
    };
    debug_assert_eq!(
        report.header_bytes + report.groups.iter().map(GroupSize::total).sum::<u64>(),
        report.total_bytes
    );
    Ok(report)
}

static SCRATCH: AtomicU64 = AtomicU64::new(0);

fn scratch_path(tag: &str) -> PathBuf {
    let k = SCRATCH.fetch_add(1, Ordering::Relaxed);
    std::env::temp_dir().join(format!("egs-{}-{k}-{tag}", std::process::id()))
}

struct Scratch(Vec<PathBuf>);

impl Drop for Scratch {
    fn drop(&mut self) {
        for p in &self.0 {
            let _ = std::fs::remove_file(p);
        }
    }
}

/// Raw point format exchanged with an external codec: `count u64`, three
/// depth bytes, then `count × (x, y, z)` as `u32`.
pub fn write_raw_points(coords: &[[u32; 3]], depths: [u8; 3]) -> Vec<u8> {
    let mut out = Vec::with_capacity(11 + coords.len() * 12);
    out.extend_from_slice(&(coords.len() as u64).to_le_bytes());
    out.extend_from_slice(&depths);
    for c in coords {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_raw_points(bytes: &[u8]) -> Result<(Vec<[u32; 3]>, [u8; 3])> {
    let mut r = Reader::new(bytes);
    let n = r.u64()? as usize;
    let depths = [r.u8()?, r.u8()?, r.u8()?];
    if r.remaining() != n.saturating_mul(12) {
        return Err(Error::External(format!("raw point file holds {} bytes for {n} points", r.remaining())));
    }
    let mut coords = Vec::with_capacity(n);
    for _ in 0..n {
        coords.push([r.u32()?, r.u32()?, r.u32()?]);
    }
    Ok((coords, depths))
}

fn run_tool(tool: &Path, mode: &str, input: &Path, output: &Path) -> Result<()> {
    let status = Command::new(tool)
        .arg(mode)
        .arg(input)
        .arg(output)
        .status()
        .map_err(|e| Error::External(format!("cannot run {}: {e}", tool.display())))?;
    if !status.success() {
        return Err(Error::External(format!("{} {mode} exited with {status}", tool.display())));
    }
    Ok(())
}

fn external_encode(tool: &Path, coords: &[[u32; 3]], depths: [u8; 3]) -> Result<Vec<u8>> {
    let input = scratch_path("points.raw");
    let output = scratch_path("points.bin");
    let _guard = Scratch(vec![input.clone(), output.clone()]);
    std::fs::File::create(&input)
        .and_then(|mut f| f.write_all(&write_raw_points(coords, depths)))
        .map_err(|e| Error::io(&input, e))?;
    run_tool(tool, "encode", &input, &output)?;
    std::fs::read(&output).map_err(|e| Error::io(&output, e))
}

fn external_decode(tool: &Path, payload: &[u8], n: usize, depths: [u8; 3]) -> Result<Vec<[u32; 3]>> {
    let input = scratch_path("points.bin");
    let output = scratch_path("points.raw");
    let _guard = Scratch(vec![input.clone(), output.clone()]);
    std::fs::write(&input, payload).map_err(|e| Error::io(&input, e))?;
    run_tool(tool, "decode", &input, &output)?;
    let raw = std::fs::read(&output).map_err(|e| Error::io(&output, e))?;
    let (mut coords, got_depths) = read_raw_points(&raw)?;
    if coords.len() != n || got_depths != depths {
        return Err(Error::External(format!(
            "external decoder returned {} points at depths {got_depths:?}, expected {n} at {depths:?}",
            coords.len()
        )));
    }
    let depth = *depths.iter().max().unwrap();
    let mut keyed = coords
        .iter()
        .map(|c| {
            for a in 0..3 {
                if c[a] as u64 >= 1u64 << depths[a] {
                    return Err(Error::External(format!("coordinate {} exceeds axis depth", c[a])));
                }
            }
            pc_codec::morton_code(c[0], c[1], c[2], depth)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .zip(coords.drain(..))
        .collect::<Vec<_>>();
    keyed.sort_by_key(|&(k, _)| k);
    Ok(keyed.into_iter().map(|(_, c)| c).collect())
}
