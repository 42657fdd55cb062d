//! Binary little-endian PLY reader/writer for the standard 3DGS vertex layout.
//!
//! The writer always emits 62 float properties in this order:
//! `x y z nx ny nz f_dc_0..2 f_rest_0..44 opacity scale_0..2 rot_0..3`.
//! The reader accepts any property order and skips unknown scalar properties;
//! normals are read past and dropped.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{AttributeGroup, GaussianCloud, CHANNELS_PER_GAUSSIAN};

/// Property names in writer order, with the flat channel each maps to
/// (`None` for the discarded normals).
fn layout() -> Vec<(String, Option<usize>)> {
    let mut props: Vec<(String, Option<usize>)> = Vec::with_capacity(62);
    for (i, name) in ["x", "y", "z"].iter().enumerate() {
        props.push((name.to_string(), Some(AttributeGroup::Geometry.offset() + i)));
    }
    for name in ["nx", "ny", "nz"] {
        props.push((name.to_string(), None));
    }
    for i in 0..3 {
        props.push((format!("f_dc_{i}"), Some(AttributeGroup::ShDc.offset() + i)));
    }
    for i in 0..45 {
        props.push((format!("f_rest_{i}"), Some(AttributeGroup::ShAc.offset() + i)));
    }
    props.push(("opacity".into(), Some(AttributeGroup::Opacity.offset())));
    for i in 0..3 {
        props.push((format!("scale_{i}"), Some(AttributeGroup::Scaling.offset() + i)));
    }
    for i in 0..4 {
        props.push((format!("rot_{i}"), Some(AttributeGroup::Rotation.offset() + i)));
    }
    props
}

fn scalar_size(ty: &str) -> Option<usize> {
    match ty {
        "char" | "uchar" | "int8" | "uint8" => Some(1),
        "short" | "ushort" | "int16" | "uint16" => Some(2),
        "int" | "uint" | "float" | "int32" | "uint32" | "float32" => Some(4),
        "double" | "float64" => Some(8),
        _ => None,
    }
}

struct Element {
    name: String,
    count: usize,
    /// (name, type, byte offset within a row)
    props: Vec<(String, String, usize)>,
    stride: usize,
}

struct Header {
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    const END: &[u8] = b"end_header\n";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| Error::Format("missing end_header".into()))?;
    let text = std::str::from_utf8(&bytes[..end])
        .map_err(|_| Error::Format("header is not valid UTF-8".into()))?;

    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(Error::Format("missing 'ply' magic".into()));
    }

    let mut elements: Vec<Element> = Vec::new();
    let mut saw_format = false;
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _version] => {
                match *fmt {
                    "binary_little_endian" => {}
                    "ascii" => return Err(Error::Unsupported("ASCII PLY".into())),
                    other => return Err(Error::Unsupported(format!("PLY format {other}"))),
                }
                saw_format = true;
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::Format(format!("bad element count: {count}")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                    stride: 0,
                });
            }
            ["property", "list", ..] => {
                return Err(Error::Unsupported("list properties".into()));
            }
            ["property", ty, name] => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| Error::Format("property before element".into()))?;
                let size = scalar_size(ty)
                    .ok_or_else(|| Error::Format(format!("unknown property type: {ty}")))?;
                element.props.push((name.to_string(), ty.to_string(), element.stride));
                element.stride += size;
            }
            _ => return Err(Error::Format(format!("unrecognized header line: {line}"))),
        }
    }
    if !saw_format {
        return Err(Error::Format("missing format line".into()));
    }
    Ok(Header {
        elements,
        body_offset: end + END.len(),
    })
}

/// Parses an in-memory binary PLY file.
pub fn read_ply(bytes: &[u8]) -> Result<GaussianCloud> {
    let header = parse_header(bytes)?;
    let mut data_offset = header.body_offset;
    let mut vertex = None;
    for element in &header.elements {
        if element.name == "vertex" {
            vertex = Some(element);
            break;
        }
        data_offset += element.count * element.stride;
    }
    let vertex = vertex.ok_or_else(|| Error::Format("missing element: vertex".into()))?;

    let by_name: HashMap<&str, (&str, usize)> = vertex
        .props
        .iter()
        .map(|(n, t, o)| (n.as_str(), (t.as_str(), *o)))
        .collect();

    let ac_count = vertex
        .props
        .iter()
        .filter(|(n, _, _)| n.starts_with("f_rest_"))
        .count();
    if ac_count != 45 && ac_count != 0 {
        return Err(Error::Unsupported(format!(
            "{ac_count} SH AC coefficients; only degree 3 (45) is supported"
        )));
    }

    let mut sources = vec![0usize; CHANNELS_PER_GAUSSIAN];
    for (name, channel) in layout() {
        let Some(channel) = channel else { continue };
        let (ty, offset) = by_name
            .get(name.as_str())
            .ok_or_else(|| Error::Format(format!("missing property: {name}")))?;
        if !matches!(*ty, "float" | "float32") {
            return Err(Error::Format(format!(
                "property {name} has type {ty}, expected float"
            )));
        }
        sources[channel] = *offset;
    }

    let n = vertex.count;
    let stride = vertex.stride;
    let needed = n
        .checked_mul(stride)
        .and_then(|len| len.checked_add(data_offset))
        .ok_or_else(|| Error::Format("vertex count overflows".into()))?;
    if bytes.len() < needed {
        return Err(Error::Format(format!(
            "truncated vertex data: need {needed} bytes, file has {}",
            bytes.len()
        )));
    }
    let body = &bytes[data_offset..needed];

    let channels: Vec<Vec<f32>> = sources
        .iter()
        .map(|&offset| {
            body.chunks_exact(stride)
                .map(|row| f32::from_le_bytes(row[offset..offset + 4].try_into().unwrap()))
                .collect()
        })
        .collect();
    GaussianCloud::from_channels(channels)
}

/// Serializes a cloud in the canonical 62-property layout.
pub fn write_ply<W: Write>(cloud: &GaussianCloud, mut out: W) -> std::io::Result<()> {
    let layout = layout();
    let mut header = String::new();
    header.push_str("ply\nformat binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", cloud.count()));
    for (name, _) in &layout {
        header.push_str(&format!("property float {name}\n"));
    }
    header.push_str("end_header\n");
    out.write_all(header.as_bytes())?;

    let channels = cloud.channels();
    let mut row = Vec::with_capacity(layout.len() * 4);
    for i in 0..cloud.count() {
        row.clear();
        for (_, channel) in &layout {
            let v = channel.map_or(0.0, |c| channels[c][i]);
            row.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&row)?;
    }
    out.flush()
}

pub fn load_ply(path: impl AsRef<Path>) -> Result<GaussianCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_ply(&bytes)
}

pub fn save_ply(cloud: &GaussianCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    cloud.validate()?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_ply(cloud, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
