use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use egs::bitstream::{self, DecodeOptions, EncodeOptions, GeometryCodec};
use egs::prune::{self, PruneConfig};
use egs::quant::{sensitivity_sweep, PresetName, RatePreset};
use egs::stats::{nmi_heatmap, DEFAULT_NMI_BINS};
use egs::{ply, report, AttributeGroup, GaussianCloud};

#[derive(Parser)]
#[command(name = "egs", version, about = "Entropy codec for 3D Gaussian Splatting models")]
struct Cli {
    /// Worker threads (default: EGS_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compress a PLY model into an .egs container.
    Encode {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        rate: RateArgs,
        /// External point-cloud codec for geometry.
        #[arg(long)]
        external_gpcc: Option<PathBuf>,
    },
    /// Reconstruct a PLY model from an .egs container.
    Decode {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        external_gpcc: Option<PathBuf>,
    },
    /// Statistics of a PLY model.
    Analyze {
        input: PathBuf,
        /// NMI heatmaps (intra-SHAC and SHAC versus the other groups).
        #[arg(long)]
        nmi: bool,
        /// Fitted model and value histogram per channel.
        #[arg(long)]
        fit: bool,
        /// Entropy versus actual coded rate per group and channel.
        #[arg(long)]
        entropy: bool,
        /// Attribute-space quantization error per group across depths.
        #[arg(long)]
        sensitivity: bool,
        #[arg(long, default_value_t = DEFAULT_NMI_BINS)]
        bins: usize,
        /// Write CSV/JSON files here instead of printing.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        rate: RateArgs,
    },
    /// Importance and geometry pruning, optional SHAC rectification.
    Prune {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        theta1: f64,
        #[arg(long, default_value_t = 0.0)]
        theta2: f64,
        /// One importance score per line; defaults to the opacity·volume proxy.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Clamp SHAC channels to their fitted Laplace [p, 1−p] band.
        #[arg(long, value_name = "P")]
        rectify_shac: Option<f64>,
    },
    /// Describe an .egs container.
    Info {
        input: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, default_value = "M")]
    preset: PresetName,
    /// Per-group depth override, e.g. `shac=3`; repeatable.
    #[arg(long = "depth", value_name = "GROUP=Q")]
    depths: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl RateArgs {
    fn preset(&self) -> Result<RatePreset> {
        let mut p = RatePreset::new(self.preset);
        for d in &self.depths {
            p = p.with_override(d)?;
        }
        Ok(p)
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot open {}", path.display()))
}

fn load_cloud(path: &Path) -> Result<GaussianCloud> {
    let bytes = read_input(path)?;
    ply::read_ply(&bytes).with_context(|| format!("reading {}", path.display()))
}

/// Seconds with at least three significant digits.
fn seconds(t: f64) -> String {
    let digits = if t > 0.0 { (2 - t.log10().floor() as i32).max(0) } else { 3 };
    format!("{t:.*} s", digits as usize)
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var("EGS_THREADS") {
            Ok(v) => Some(v.parse().with_context(|| format!("EGS_THREADS={v:?} is not a count"))?),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads(cli.threads)?;
    match cli.command {
        Cmd::Encode {
            input,
            output,
            rate,
            external_gpcc,
        } => {
            let cloud = load_cloud(&input)?;
            let options = EncodeOptions {
                preset: rate.preset()?,
                seed: rate.seed,
                geometry: external_gpcc.map_or(GeometryCodec::Internal, GeometryCodec::External),
            };
            let start = Instant::now();
            let bytes = bitstream::encode(&cloud, &options)?;
            let elapsed = start.elapsed().as_secs_f64();
            fs::write(&output, &bytes).with_context(|| format!("writing {}", output.display()))?;
            let sizes = bitstream::size_report(&bytes)?;
            println!("encoded {} Gaussians -> {}", cloud.count(), output.display());
            println!("{}", report::size_table(&sizes));
            println!("encode time: {}", seconds(elapsed));
        }
        Cmd::Decode {
            input,
            output,
            external_gpcc,
        } => {
            let bytes = read_input(&input)?;
            let start = Instant::now();
            let cloud = bitstream::decode(&bytes, &DecodeOptions { external_gpcc })
                .with_context(|| format!("decoding {}", input.display()))?;
            let elapsed = start.elapsed().as_secs_f64();
            ply::save_ply(&cloud, &output)?;
            println!("decoded {} Gaussians -> {}", cloud.count(), output.display());
            println!("decode time: {}", seconds(elapsed));
        }
        Cmd::Analyze {
            input,
            nmi,
            fit,
            entropy,
            sensitivity,
            bins,
            out_dir,
            rate,
        } => {
            let cloud = load_cloud(&input)?;
            let all = !(nmi || fit || entropy || sensitivity);
            let mut outputs: Vec<(String, String)> = Vec::new();
            if nmi || all {
                let map = nmi_heatmap(&cloud, bins)?;
                for (color, m) in ["r", "g", "b"].iter().zip(&map.intra) {
                    outputs.push((format!("nmi_shac_{color}.csv"), m.to_csv()));
                }
                outputs.push(("nmi_cross.csv".into(), map.cross.to_csv()));
            }
            if fit || entropy || all {
                let options = EncodeOptions {
                    preset: rate.preset()?,
                    seed: rate.seed,
                    geometry: GeometryCodec::Internal,
                };
                let encoded = bitstream::encode_detailed(&cloud, &options)?;
                if entropy || all {
                    let rows = report::entropy_table(&encoded);
                    outputs.push(("entropy.csv".into(), report::entropy_csv(&rows, &encoded.channels)));
                }
                if fit || all {
                    let rows = report::fit_table(&cloud, &encoded, 64)?;
                    outputs.push(("fit.json".into(), serde_json::to_string_pretty(&rows)?));
                }
            }
            if sensitivity || all {
                let depths: Vec<u8> = (1..=16).collect();
                let mut csv = String::from("group,depth,normalized_mse\n");
                for group in AttributeGroup::ALL {
                    for p in sensitivity_sweep(&cloud, group, &depths)? {
                        csv.push_str(&format!("{group},{},{:.6e}\n", p.depth, p.normalized_mse));
                    }
                }
                outputs.push(("sensitivity.csv".into(), csv));
            }
            match out_dir {
                Some(dir) => {
                    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                    for (name, body) in outputs {
                        let path = dir.join(&name);
                        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
                        println!("wrote {}", path.display());
                    }
                }
                None => {
                    for (name, body) in outputs {
                        println!("# {name}\n{body}");
                    }
                }
            }
        }
        Cmd::Prune {
            input,
            output,
            theta1,
            theta2,
            scores,
            rectify_shac,
        } => {
            let cloud = load_cloud(&input)?;
            let config = PruneConfig::new(theta1, theta2)?;
            let scores = match scores {
                Some(path) => prune::read_scores(&path)?,
                None => prune::proxy_importance(&cloud),
            };
            let mut pruned = config.apply(&cloud, &scores)?;
            if let Some(p) = rectify_shac {
                pruned = prune::rectify_shac(&pruned, p)?;
            }
            ply::save_ply(&pruned, &output)?;
            println!("{} -> {} Gaussians", cloud.count(), pruned.count());
        }
        Cmd::Info { input, json } => {
            let bytes = read_input(&input)?;
            let header = bitstream::read_header(&bytes)?;
            let sizes = bitstream::size_report(&bytes)?;
            if json {
                let doc = json!({ "header": header, "sizes": sizes, "ratio": sizes.ratio() });
                println!("{}", serde_json::to_string_pretty(&doc)?);
            } else {
                println!(
                    "EGS container v{}: {} Gaussians, SH degree {}, preset {}, geometry codec {}",
                    header.version,
                    header.count,
                    header.sh_degree,
                    header.preset,
                    if header.geometry.external { "external" } else { "internal" }
                );
                let g = &header.geometry.grids;
                println!("  geometry depths {}/{}/{}", g[0].depth, g[1].depth, g[2].depth);
                println!("{}", report::size_table(&sizes));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
