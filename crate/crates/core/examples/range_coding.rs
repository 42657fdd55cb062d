//! Static-table range coding of indices and adaptive coding of bytes.

use egs::fit::Pmf;
use egs::range_coder::{adaptive_byte_decode, adaptive_byte_encode, decode_symbols, encode_symbols};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> egs::Result<()> {
    let pmf = Pmf::from_masses(&[8.0, 4.0, 2.0, 1.0, 1.0])?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let symbols: Vec<u32> = (0..100_000)
        .map(|_| pmf.symbol_for(rng.gen_range(0..pmf.total())) as u32)
        .collect();
    let coded = encode_symbols(&symbols, &pmf)?;
    assert_eq!(decode_symbols(&coded.bytes, &pmf, symbols.len())?, symbols);
    println!(
        "static: {:.4} bits/symbol, table entropy {:.4}",
        coded.bits_per_symbol(),
        pmf.entropy_bits()
    );

    let text = b"the quick brown fox jumps over the lazy dog ".repeat(500);
    let packed = adaptive_byte_encode(&text);
    assert_eq!(adaptive_byte_decode(&packed.bytes)?, text);
    println!("adaptive: {} -> {} bytes", text.len(), packed.bytes.len());
    Ok(())
}

fn main() -> egs::Result<()> {
    run_example()
}
