use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hedgehog_lab::runner::{
    self, AlphaSpec, ExperimentConfig, MapSpec, RunManifest, Status,
};

#[derive(Parser)]
#[command(
    name = "hhlab",
    version,
    about = "Numerical laboratory for circle diffeomorphisms, quasi-invariant curves, hedgehogs and holonomy"
)]
struct Cli {
    /// Output root directory (default: env HHLAB_OUT, then ./runs).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON config file; overrides all other flags of the subcommand.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Continued-fraction convergents, errors and Brjuno partial sums.
    Cf {
        #[command(flatten)]
        config: ConfigArg,
        /// golden | surd:a,b,c,d | float:V | quotients:a1,a2,... | liouville:RATE
        #[arg(long, default_value = "golden")]
        alpha: String,
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Renormalization data and the real-estimate checks for a circle lift.
    Circle {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value = "golden")]
        alpha: String,
        /// translation | arnold:EPS,DELTA (omega tuned to alpha)
        #[arg(long, default_value = "translation")]
        map: String,
        #[arg(long, default_value_t = 3)]
        level: usize,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Track normalized band orbits and verify the height deviation bound.
    DyVerify {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value = "golden")]
        alpha: String,
        #[arg(long, default_value = "arnold:0.001,0.25")]
        map: String,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long, default_value_t = 4)]
        level: usize,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, default_value_t = 0.75)]
        y0: f64,
    },
    /// Build a quasi-invariant curve and run the selected checks.
    Qicurve {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value = "golden")]
        alpha: String,
        #[arg(long, default_value = "arnold:0.001,0.25")]
        map: String,
        #[arg(long, default_value_t = 5)]
        level: usize,
        #[arg(long, default_value_t = 0.75)]
        y0: f64,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        /// Comma-separated subset of invariance,return,cover.
        #[arg(long, default_value = "invariance,return,cover")]
        check: String,
    },
    /// Grid approximation of the local hedgehog of a germ.
    Hedgehog {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value = "golden")]
        alpha: String,
        /// Comma-separated re:im pairs for c_2, c_3, ... e.g. "1:0"
        #[arg(long, default_value = "1:0")]
        coeffs: String,
        #[arg(long, default_value_t = 0.1)]
        r0: f64,
        #[arg(long, default_value_t = 1000)]
        n_iter: usize,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
    },
    /// Recurrence profile sup |f^{+-q_n} - id| over the hedgehog approximation.
    Recur {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value = "golden")]
        alpha: String,
        #[arg(long, default_value = "1:0")]
        coeffs: String,
        #[arg(long, default_value_t = 0.1)]
        r0: f64,
        #[arg(long, default_value_t = 1000)]
        n_iter: usize,
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        #[arg(long, default_value_t = 3)]
        n_lo: usize,
        #[arg(long, default_value_t = 8)]
        n_hi: usize,
    },
    /// Convergence probe: orbits entering the inner disk must exit again.
    Probe {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value = "golden")]
        alpha: String,
        #[arg(long, default_value = "1:0")]
        coeffs: String,
        #[arg(long, default_value_t = 0.1)]
        r0: f64,
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        rng_seed: u64,
        #[arg(long, default_value_t = 100_000)]
        n_iter: usize,
    },
    /// Holonomy multiplier and germ fit of the singular foliation.
    Holonomy {
        #[command(flatten)]
        config: ConfigArg,
        /// Plain numeric alpha (> 0; rational allowed).
        #[arg(long, default_value_t = 0.25)]
        alpha: f64,
        /// Comma-separated j:k:re:im monomials inside P.
        #[arg(long, default_value = "")]
        perturb: String,
        #[arg(long, default_value_t = 0.05)]
        x0: f64,
        #[arg(long, default_value_t = 0.1)]
        y_radius: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 4)]
        fit_degree: usize,
    },
    /// Run a list of config files and aggregate.
    Suite {
        /// Config files (JSON).
        configs: Vec<PathBuf>,
    },
}

fn parse_alpha(s: &str) -> Result<AlphaSpec, String> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "golden" => Ok(AlphaSpec::Golden),
        "surd" => {
            let v: Vec<i64> = rest
                .split(',')
                .map(|t| t.trim().parse().map_err(|e| format!("surd: {e}")))
                .collect::<Result<_, _>>()?;
            if v.len() != 4 {
                return Err("surd needs a,b,c,d".into());
            }
            Ok(AlphaSpec::Surd { a: v[0], b: v[1], c: v[2], d: v[3] })
        }
        "float" => Ok(AlphaSpec::Float { value: rest.parse().map_err(|e| format!("float: {e}"))? }),
        "quotients" => {
            let v: Vec<u64> = rest
                .split(',')
                .map(|t| t.trim().parse().map_err(|e| format!("quotients: {e}")))
                .collect::<Result<_, _>>()?;
            Ok(AlphaSpec::Quotients { values: v })
        }
        "liouville" => Ok(AlphaSpec::LiouvilleRate {
            rate: rest.parse().map_err(|e| format!("liouville: {e}"))?,
        }),
        other => Err(format!("unknown alpha spec '{other}'")),
    }
}

fn parse_map(s: &str) -> Result<MapSpec, String> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "translation" => Ok(MapSpec::Translation { omega: None }),
        "arnold" => {
            let v: Vec<f64> = rest
                .split(',')
                .map(|t| t.trim().parse().map_err(|e| format!("arnold: {e}")))
                .collect::<Result<_, _>>()?;
            if v.len() != 2 {
                return Err("arnold needs eps,delta".into());
            }
            Ok(MapSpec::Arnold { omega: None, eps: v[0], delta: v[1] })
        }
        other => Err(format!("unknown map spec '{other}'")),
    }
}

fn parse_coeffs(s: &str) -> Result<Vec<(f64, f64)>, String> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|t| {
            let (re, im) = t.split_once(':').ok_or_else(|| format!("coeff '{t}' not re:im"))?;
            Ok((
                re.trim().parse().map_err(|e| format!("coeff: {e}"))?,
                im.trim().parse().map_err(|e| format!("coeff: {e}"))?,
            ))
        })
        .collect()
}

fn parse_perturb(s: &str) -> Result<Vec<(u32, u32, f64, f64)>, String> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|t| {
            let parts: Vec<&str> = t.split(':').collect();
            if parts.len() != 4 {
                return Err(format!("monomial '{t}' not j:k:re:im"));
            }
            Ok((
                parts[0].trim().parse().map_err(|e| format!("perturb: {e}"))?,
                parts[1].trim().parse().map_err(|e| format!("perturb: {e}"))?,
                parts[2].trim().parse().map_err(|e| format!("perturb: {e}"))?,
                parts[3].trim().parse().map_err(|e| format!("perturb: {e}"))?,
            ))
        })
        .collect()
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn build_config(cmd: Cmd) -> Result<Result<ExperimentConfig, Vec<PathBuf>>, String> {
    Ok(Ok(match cmd {
        Cmd::Suite { configs } => return Ok(Err(configs)),
        Cmd::Cf { config, alpha, count } => match config.config {
            Some(p) => load_config(&p)?,
            None => ExperimentConfig::Cf { alpha: parse_alpha(&alpha)?, count },
        },
        Cmd::Circle { config, alpha, map, level, grid, samples } => match config.config {
            Some(p) => load_config(&p)?,
            None => ExperimentConfig::Circle {
                map: parse_map(&map)?,
                alpha: parse_alpha(&alpha)?,
                level,
                grid,
                samples,
            },
        },
        Cmd::DyVerify { config, alpha, map, delta, level, samples, y0 } => match config.config {
            Some(p) => load_config(&p)?,
            None => ExperimentConfig::DyVerify {
                map: parse_map(&map)?,
                alpha: parse_alpha(&alpha)?,
                delta,
                level,
                samples,
                y0,
            },
        },
        Cmd::Qicurve { config, alpha, map, level, y0, resolution, check } => match config.config {
            Some(p) => load_config(&p)?,
            None => ExperimentConfig::Qicurve {
                map: parse_map(&map)?,
                alpha: parse_alpha(&alpha)?,
                level,
                y0,
                resolution,
                checks: check.split(',').map(|s| s.trim().to_string()).collect(),
            },
        },
        Cmd::Hedgehog { config, alpha, coeffs, r0, n_iter, resolution } => match config.config {
            Some(p) => load_config(&p)?,
            None => ExperimentConfig::Hedgehog {
                alpha: parse_alpha(&alpha)?,
                coeffs: parse_coeffs(&coeffs)?,
                r0,
                n_iter,
                resolution,
            },
        },
        Cmd::Recur { config, alpha, coeffs, r0, n_iter, resolution, n_lo, n_hi } => {
            match config.config {
                Some(p) => load_config(&p)?,
                None => ExperimentConfig::Recur {
                    alpha: parse_alpha(&alpha)?,
                    coeffs: parse_coeffs(&coeffs)?,
                    r0,
                    n_iter,
                    resolution,
                    n_lo,
                    n_hi,
                },
            }
        }
        Cmd::Probe { config, alpha, coeffs, r0, seeds, rng_seed, n_iter } => match config.config {
            Some(p) => load_config(&p)?,
            None => ExperimentConfig::Probe {
                alpha: parse_alpha(&alpha)?,
                coeffs: parse_coeffs(&coeffs)?,
                r0,
                seeds,
                rng_seed,
                n_iter,
            },
        },
        Cmd::Holonomy { config, alpha, perturb, x0, y_radius, tol, fit_degree } => {
            match config.config {
                Some(p) => load_config(&p)?,
                None => ExperimentConfig::Holonomy {
                    alpha,
                    perturb: parse_perturb(&perturb)?,
                    x0,
                    y_radius,
                    tol,
                    fit_degree,
                },
            }
        }
    }))
}

fn print_manifest(m: &RunManifest) {
    for c in &m.checks {
        let s = match c.status {
            Status::Pass => "pass",
            Status::Warn => "warn",
            Status::Fail => "FAIL",
            Status::SkippedGate => "skipped(gate)",
        };
        println!("{:<14} {:<13} {}", c.name, s, c.detail);
    }
    println!("artifacts: {}", m.run_dir);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_root = cli
        .out
        .or_else(|| std::env::var_os("HHLAB_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let built = match build_config(cli.cmd) {
        Ok(b) => b,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match built {
        Ok(config) => match runner::run(&config, &out_root) {
            Ok(m) => {
                print_manifest(&m);
                match m.worst() {
                    Status::Fail => ExitCode::from(1),
                    _ => ExitCode::SUCCESS,
                }
            }
            Err(runner::RunError::Validation(msg)) => {
                eprintln!("error: {msg}");
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Err(configs) => match runner::suite(&configs, &out_root) {
            Ok(rep) => {
                for m in &rep.runs {
                    print_manifest(m);
                }
                for f in &rep.failures {
                    eprintln!("failure: {f}");
                }
                if rep.failures.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
