//! Header inspection and byte accounting of a container.

use egs::bitstream::{encode, read_header, size_report, EncodeOptions};
use egs::fit::ChannelModel;
use egs::synth::{synthetic_cloud, SynthConfig};
use egs::{PresetName, RatePreset};

pub fn run_example() -> egs::Result<()> {
    let cloud = synthetic_cloud(&SynthConfig::new(20_000, 8));
    for name in [PresetName::L, PresetName::M, PresetName::S] {
        let options = EncodeOptions {
            preset: RatePreset::new(name),
            ..Default::default()
        };
        let bytes = encode(&cloud, &options)?;
        let report = size_report(&bytes)?;
        println!("preset {name}: {} bytes, ratio {:.2}x", bytes.len(), report.ratio());
    }

    let bytes = encode(&cloud, &EncodeOptions::default())?;
    let header = read_header(&bytes)?;
    println!("header: {} bytes, {} table channels", header.header_len, header.channels.len());
    for c in header.channels.iter().step_by(14) {
        let model = match &c.model {
            ChannelModel::Empirical => "empirical".to_string(),
            ChannelModel::Laplace(p) => format!("laplace(mu={:.4}, b={:.4})", p.mu, p.b),
            ChannelModel::Gmm(p) => format!("gmm(k={})", p.k()),
        };
        println!("  {:<11} Q={} {model}", c.group.channel_label(c.channel), c.grid.depth);
    }
    Ok(())
}

fn main() -> egs::Result<()> {
    run_example()
}
