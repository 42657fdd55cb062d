//! Normalized mutual information between SH coefficients and other attributes.

use egs::stats::{nmi, nmi_heatmap};
use egs::synth::{synthetic_cloud, SynthConfig};
use egs::AttributeGroup;

pub fn run_example() -> egs::Result<()> {
    let cloud = synthetic_cloud(&SynthConfig::new(20_000, 5));
    let map = nmi_heatmap(&cloud, 64)?;
    let red = &map.intra[0];
    let off_diag = (0..15)
        .flat_map(|i| (0..15).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| red.values[i][j])
        .fold(0.0f64, f64::max);
    println!("largest off-diagonal NMI among red SHAC channels: {off_diag:.4}");
    print!("{}", map.cross.to_csv().lines().take(3).collect::<Vec<_>>().join("\n"));
    println!();

    let x = cloud.channel(AttributeGroup::ShAc, 0)?;
    println!("nmi(x, x) = {}", nmi(x, x, 256)?);
    Ok(())
}

fn main() -> egs::Result<()> {
    run_example()
}
