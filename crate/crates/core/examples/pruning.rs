//! Importance and geometry-tail pruning, then SHAC rectification.

use egs::prune::{proxy_importance, rectify_shac, PruneConfig, DEFAULT_RECTIFY_TAIL};
use egs::synth::{synthetic_cloud, SynthConfig};
use egs::AttributeGroup;

pub fn run_example() -> egs::Result<()> {
    let cloud = synthetic_cloud(&SynthConfig::new(10_000, 4));
    let config = PruneConfig::new(40.0, 1.0)?;
    let pruned = config.apply(&cloud, &proxy_importance(&cloud))?;
    println!(
        "{} -> {} Gaussians (expected {})",
        cloud.count(),
        pruned.count(),
        config.expected_count(cloud.count())
    );

    let rectified = rectify_shac(&pruned, DEFAULT_RECTIFY_TAIL)?;
    let span = |c: &egs::GaussianCloud| -> egs::Result<f32> {
        let ch = c.channel(AttributeGroup::ShAc, 0)?;
        Ok(ch.iter().copied().fold(f32::MIN, f32::max) - ch.iter().copied().fold(f32::MAX, f32::min))
    };
    println!("f_rest_0 range {:.4} -> {:.4}", span(&pruned)?, span(&rectified)?);
    Ok(())
}

fn main() -> egs::Result<()> {
    run_example()
}
