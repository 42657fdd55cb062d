//! Morton ordering and lossless geometry coding.

use egs::pc_codec::{canonical_sort, decode_geometry, encode_geometry, morton_code, quantize_positions};
use egs::synth::{synthetic_cloud, SynthConfig};
use egs::{AttributeGroup, QuantGrid};

pub fn run_example() -> egs::Result<()> {
    println!("morton(3, 3, 3) at depth 2 = {}", morton_code(3, 3, 3, 2)?);

    let cloud = synthetic_cloud(&SynthConfig::new(50_000, 9));
    let grids = [0, 1, 2].map(|a| QuantGrid::fit(cloud.channel(AttributeGroup::Geometry, a).unwrap(), 16).unwrap());
    let order = canonical_sort(&cloud, &grids)?;
    let coords = order.apply_slice(&quantize_positions(&cloud, &grids)?);
    let payload = encode_geometry(&coords, [16; 3])?;
    assert_eq!(decode_geometry(&payload.bytes, coords.len(), [16; 3])?, coords);
    println!(
        "{} points: {:.2} bits/point (packed: 48)",
        coords.len(),
        payload.bits_per_symbol()
    );
    Ok(())
}

fn main() -> egs::Result<()> {
    run_example()
}
