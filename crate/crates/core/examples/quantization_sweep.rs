//! Attribute-space quantization error by group, and the rate presets.

use egs::quant::{sensitivity_sweep, PresetName, RatePreset};
use egs::synth::{synthetic_cloud, SynthConfig};
use egs::AttributeGroup;

pub fn run_example() -> egs::Result<()> {
    let cloud = synthetic_cloud(&SynthConfig::new(20_000, 2));
    let depths = [2, 4, 6, 8, 12, 16];
    for group in AttributeGroup::ALL {
        let curve = sensitivity_sweep(&cloud, group, &depths)?;
        let cells: Vec<String> = curve.iter().map(|p| format!("{:.2e}", p.normalized_mse)).collect();
        println!("{:<9} {}", group.name(), cells.join("  "));
    }
    for name in [PresetName::L, PresetName::M, PresetName::S] {
        let p = RatePreset::new(name);
        let depths: Vec<u8> = AttributeGroup::ALL.iter().map(|&g| p.depth(g)).collect();
        println!("preset {name}: {depths:?}");
    }
    let custom = RatePreset::default().with_override("shac=3")?;
    println!("M with shac=3: {}", custom.depth(AttributeGroup::ShAc));
    Ok(())
}

fn main() -> egs::Result<()> {
    run_example()
}
