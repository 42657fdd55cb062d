//! Synthetic model -> PLY -> container -> PLY, with the per-group size table.

use egs::bitstream::{self, DecodeOptions, EncodeOptions};
use egs::synth::{synthetic_cloud, SynthConfig};
use egs::{ply, report};

pub fn run_example() -> egs::Result<()> {
    let dir = std::env::temp_dir().join(format!("egs-roundtrip-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| egs::Error::Io { path: dir.clone(), source: e })?;
    let ply_in = dir.join("scene.ply");
    let ply_out = dir.join("scene.decoded.ply");

    ply::save_ply(&synthetic_cloud(&SynthConfig::new(20_000, 7)), &ply_in)?;
    let cloud = ply::load_ply(&ply_in)?;

    let bytes = bitstream::encode(&cloud, &EncodeOptions::default())?;
    let decoded = bitstream::decode(&bytes, &DecodeOptions::default())?;
    ply::save_ply(&decoded, &ply_out)?;

    println!("{}", report::size_table(&bitstream::size_report(&bytes)?));
    // decoded Gaussians are in Morton order, so compare sorted positions
    let mut a: Vec<f32> = cloud.channel(egs::AttributeGroup::Geometry, 0)?.to_vec();
    let mut b: Vec<f32> = decoded.channel(egs::AttributeGroup::Geometry, 0)?.to_vec();
    a.sort_by(f32::total_cmp);
    b.sort_by(f32::total_cmp);
    let grid = egs::QuantGrid::fit(&a, 16)?;
    let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0f32, f32::max);
    println!("max |x - x'| = {worst:.3e} (step {:.3e})", grid.step());
    assert!(worst as f64 <= grid.step());

    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}

fn main() -> egs::Result<()> {
    run_example()
}
