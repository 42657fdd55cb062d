//! Laplace and Gaussian-mixture fits, and their coding tables.

use egs::fit::{discretize_pmf, fit_gmm, fit_laplace, level_counts};
use egs::quant::quantize_channel;
use egs::stats::entropy_of_counts;
use egs::synth::{sample_laplace, sample_mixture};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> egs::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lap: Vec<f64> = (0..200_000).map(|_| sample_laplace(&mut rng, 0.1, 0.5)).collect();
    let p = fit_laplace(&lap)?;
    println!("laplace: mu = {:.4}, b = {:.4}", p.mu, p.b);

    let mix: Vec<f64> = (0..50_000)
        .map(|_| sample_mixture(&mut rng, &[(0.5, -2.0, 0.5), (0.5, 2.0, 0.5)]))
        .collect();
    let g = fit_gmm(&mix, 4, 0)?;
    println!("gmm: k = {}, means = {:.3?}, weights = {:.3?}", g.k(), g.means, g.weights);

    let values: Vec<f32> = lap.iter().map(|&x| x as f32).collect();
    let (idx, grid) = quantize_channel(&values, 4)?;
    let pmf = discretize_pmf(&p, &grid)?;
    let counts = level_counts(&idx, &grid)?;
    println!(
        "Q=4: entropy {:.4} bits, code length under fitted table {:.4} bits",
        entropy_of_counts(&counts),
        pmf.cross_entropy_bits(&counts)
    );
    Ok(())
}

fn main() -> egs::Result<()> {
    run_example()
}
