//! Entropy of the quantized indices against the coded rate, per group.

use egs::bitstream::{encode_detailed, EncodeOptions};
use egs::report::entropy_table;
use egs::synth::{synthetic_cloud, SynthConfig};

pub fn run_example() -> egs::Result<()> {
    let cloud = synthetic_cloud(&SynthConfig::new(100_000, 1));
    let encoded = encode_detailed(&cloud, &EncodeOptions::default())?;
    println!("{:<9} {:>8} {:>8} {:>9}", "group", "entropy", "actual", "overhead");
    for row in entropy_table(&encoded) {
        println!(
            "{:<9} {:>8.3} {:>8.3} {:>8.2}%",
            row.group.name(),
            row.entropy_bits,
            row.actual_bits,
            row.overhead_percent
        );
    }
    Ok(())
}

fn main() -> egs::Result<()> {
    run_example()
}
