//! 32-bit range coder with byte-wise renormalization and carry propagation.
//!
//! Two models drive the same coder: a static [`Pmf`] (one fixed table per
//! channel) and an order-0 adaptive byte model used for the geometry stream.
//! Every payload is an independent byte string; no state is shared between
//! channels.

use crate::error::{Error, Result};
use crate::fit::Pmf;
use crate::wire::{put_varint, Reader};

const TOP: u32 = 1 << 24;

/// Entropy-coded bytes plus the number of symbols they carry.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CodedPayload {
    pub bytes: Vec<u8>,
    pub symbol_count: usize,
}

impl CodedPayload {
    pub fn bits_per_symbol(&self) -> f64 {
        if self.symbol_count == 0 {
            0.0
        } else {
            self.bytes.len() as f64 * 8.0 / self.symbol_count as f64
        }
    }
}

pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    /// Codes the interval `[start, start + freq)` of `total`. The last symbol
    /// of the alphabet also receives the division remainder.
    #[inline]
    pub fn encode(&mut self, start: u32, freq: u32, total: u32) {
        debug_assert!(freq > 0 && start + freq <= total && total <= self.range);
        let r = self.range / total;
        self.low += start as u64 * r as u64;
        self.range = if start + freq == total {
            self.range - start * r
        } else {
            freq * r
        };
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low >= 1 << 32 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    scale: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self> {
        let mut dec = Self {
            code: 0,
            range: u32::MAX,
            scale: 1,
            input,
            pos: 0,
        };
        for _ in 0..5 {
            dec.code = (dec.code << 8) | dec.next_byte()? as u32;
        }
        Ok(dec)
    }

    #[inline]
    fn next_byte(&mut self) -> Result<u8> {
        let b = *self
            .input
            .get(self.pos)
            .ok_or_else(|| Error::Corrupt("range-coded payload truncated".into()))?;
        self.pos += 1;
        Ok(b)
    }

    /// Cumulative target in `[0, total)` for the next symbol.
    #[inline]
    pub fn target(&mut self, total: u32) -> u32 {
        self.scale = self.range / total;
        (self.code / self.scale).min(total - 1)
    }

    /// Consumes the symbol found for the last [`target`](Self::target) call.
    #[inline]
    pub fn consume(&mut self, start: u32, freq: u32, total: u32) -> Result<()> {
        let r = self.scale;
        self.code = self.code.wrapping_sub(start.wrapping_mul(r));
        self.range = if start + freq == total {
            self.range.wrapping_sub(start.wrapping_mul(r))
        } else {
            freq.wrapping_mul(r)
        };
        while self.range < TOP {
            self.code = (self.code << 8) | self.next_byte()? as u32;
            self.range <<= 8;
        }
        Ok(())
    }

    pub fn is_exhausted(&self) -> bool {
        self.pos == self.input.len()
    }
}

/// Static-model coding of quantization indices.
pub fn encode_symbols(indices: &[u32], pmf: &Pmf) -> Result<CodedPayload> {
    if indices.is_empty() {
        return Ok(CodedPayload::default());
    }
    let total = pmf.total();
    let mut enc = RangeEncoder::new();
    for &s in indices {
        let s = s as usize;
        if s >= pmf.len() {
            return Err(Error::OutOfBounds {
                index: s,
                limit: pmf.len(),
            });
        }
        enc.encode(pmf.start(s), pmf.freq(s), total);
    }
    Ok(CodedPayload {
        bytes: enc.finish(),
        symbol_count: indices.len(),
    })
}

pub fn decode_symbols(bytes: &[u8], pmf: &Pmf, n: usize) -> Result<Vec<u32>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let total = pmf.total();
    let mut dec = RangeDecoder::new(bytes)?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let s = pmf.symbol_for(dec.target(total));
        dec.consume(pmf.start(s), pmf.freq(s), total)?;
        out.push(s as u32);
    }
    if !dec.is_exhausted() {
        return Err(Error::Corrupt("trailing bytes after range-coded payload".into()));
    }
    Ok(out)
}

const ADAPTIVE_LIMIT: u32 = 1 << 15;
const MODE_CODED: u8 = 0;
const MODE_STORED: u8 = 1;

/// Order-0 frequency model over bytes: starts flat, +1 per coded symbol,
/// halves every count once the total reaches 2^15.
struct AdaptiveByteModel {
    freqs: [u32; 256],
    total: u32,
}

impl AdaptiveByteModel {
    fn new() -> Self {
        Self {
            freqs: [1; 256],
            total: 256,
        }
    }

    #[inline]
    fn start(&self, symbol: u8) -> u32 {
        self.freqs[..symbol as usize].iter().sum()
    }

    #[inline]
    fn find(&self, target: u32) -> (u8, u32) {
        let mut acc = 0;
        for (s, &f) in self.freqs.iter().enumerate() {
            if target < acc + f {
                return (s as u8, acc);
            }
            acc += f;
        }
        (255, acc - self.freqs[255])
    }

    #[inline]
    fn update(&mut self, symbol: u8) {
        self.freqs[symbol as usize] += 1;
        self.total += 1;
        if self.total >= ADAPTIVE_LIMIT {
            self.total = 0;
            for f in self.freqs.iter_mut() {
                *f = (*f + 1) / 2;
                self.total += *f;
            }
        }
    }
}

/// Adaptive order-0 coding of a byte string. Falls back to storing the input
/// verbatim when coding would not shrink it.
pub fn adaptive_byte_encode(bytes: &[u8]) -> CodedPayload {
    let mut out = Vec::with_capacity(bytes.len() / 2 + 16);
    out.push(MODE_CODED);
    put_varint(&mut out, bytes.len() as u64);
    if !bytes.is_empty() {
        let mut model = AdaptiveByteModel::new();
        let mut enc = RangeEncoder::new();
        for &b in bytes {
            enc.encode(model.start(b), model.freqs[b as usize], model.total);
            model.update(b);
        }
        out.extend_from_slice(&enc.finish());
    }
    let mut stored = vec![MODE_STORED];
    put_varint(&mut stored, bytes.len() as u64);
    if out.len() > stored.len() + bytes.len() {
        stored.extend_from_slice(bytes);
        out = stored;
    }
    CodedPayload {
        bytes: out,
        symbol_count: bytes.len(),
    }
}

pub fn adaptive_byte_decode(payload: &[u8]) -> Result<Vec<u8>> {
    let mut r = Reader::new(payload);
    let mode = r.u8()?;
    let len = r.varint()? as usize;
    match mode {
        MODE_STORED => {
            let body = r.take(len)?;
            if r.remaining() != 0 {
                return Err(Error::Corrupt("trailing bytes after stored block".into()));
            }
            Ok(body.to_vec())
        }
        MODE_CODED => {
            if len == 0 {
                return Ok(Vec::new());
            }
            let mut dec = RangeDecoder::new(r.take(r.remaining())?)?;
            let mut model = AdaptiveByteModel::new();
            let mut out = Vec::with_capacity(len.min(1 << 24));
            for _ in 0..len {
                let (b, start) = model.find(dec.target(model.total));
                dec.consume(start, model.freqs[b as usize], model.total)?;
                model.update(b);
                out.push(b);
            }
            if !dec.is_exhausted() {
                return Err(Error::Corrupt("trailing bytes after adaptive payload".into()));
            }
            Ok(out)
        }
        other => Err(Error::Corrupt(format!("unknown adaptive payload mode {other}"))),
    }
}
