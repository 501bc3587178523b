//! Experiment runner: JSON configs hashed into run directories, CSV/JSON
//! artifacts written atomically, and a manifest with per-check statuses.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::band;
use crate::circle::{self, CircleLift};
use crate::germ::{self, Germ};
use crate::holonomy::{self, FoliationGerm, Monomial};
use crate::hyperbolic::dist_halfplane;
use crate::qicurve;
use crate::rotation::RotationNumber;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config validation: {0}")]
    Validation(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("experiment: {0}")]
    Experiment(String),
}

macro_rules! from_err {
    ($t:ty) => {
        impl From<$t> for RunError {
            fn from(e: $t) -> Self {
                RunError::Experiment(e.to_string())
            }
        }
    };
}
from_err!(crate::rotation::RotationError);
from_err!(crate::circle::CircleError);
from_err!(crate::band::BandError);
from_err!(crate::qicurve::CurveError);
from_err!(crate::germ::GermError);
from_err!(crate::holonomy::HolonomyError);
from_err!(crate::hyperbolic::HypError);

/// Rotation-number specification (exact forms preferred).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum AlphaSpec {
    /// (a + b sqrt(d)) / c.
    Surd { a: i64, b: i64, c: i64, d: i64 },
    Golden,
    Quotients { values: Vec<u64> },
    Float { value: f64 },
    /// q_{n+1} >= e^{rate q_n}: a Brjuno-sum-divergent stream.
    LiouvilleRate { rate: f64 },
}

impl AlphaSpec {
    pub fn build(&self) -> Result<RotationNumber, RunError> {
        Ok(match self {
            AlphaSpec::Surd { a, b, c, d } => RotationNumber::from_surd(*a, *b, *c, *d)?,
            AlphaSpec::Golden => RotationNumber::golden(),
            AlphaSpec::Quotients { values } => RotationNumber::from_quotients(values.clone())?,
            AlphaSpec::Float { value } => RotationNumber::from_float(*value)?,
            AlphaSpec::LiouvilleRate { rate } => RotationNumber::brjuno_divergent(*rate)?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MapSpec {
    Translation {
        /// Use alpha's value when omitted.
        omega: Option<f64>,
    },
    Arnold {
        /// Tuned to the target rotation number when omitted.
        omega: Option<f64>,
        eps: f64,
        delta: f64,
    },
}

impl MapSpec {
    pub fn build(&self, alpha: &RotationNumber) -> Result<CircleLift, RunError> {
        Ok(match self {
            MapSpec::Translation { omega } => {
                CircleLift::translation(omega.unwrap_or(alpha.value()))
            }
            MapSpec::Arnold { omega: Some(w), eps, delta } => CircleLift::arnold(*w, *eps, *delta)?,
            MapSpec::Arnold { omega: None, eps, delta } => {
                let (eps, delta) = (*eps, *delta);
                let (g, _) = circle::tune_omega(
                    move |w| CircleLift::arnold(w, eps, delta),
                    alpha,
                    1e-9,
                    10_000_000,
                )?;
                g
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Cf {
        alpha: AlphaSpec,
        count: usize,
    },
    Circle {
        map: MapSpec,
        alpha: AlphaSpec,
        level: usize,
        grid: usize,
        samples: usize,
    },
    DyVerify {
        map: MapSpec,
        alpha: AlphaSpec,
        delta: f64,
        level: usize,
        samples: usize,
        y0: f64,
    },
    Qicurve {
        map: MapSpec,
        alpha: AlphaSpec,
        level: usize,
        y0: f64,
        resolution: usize,
        checks: Vec<String>,
    },
    Hedgehog {
        alpha: AlphaSpec,
        /// (Re, Im) of c_2, c_3, ...
        coeffs: Vec<(f64, f64)>,
        r0: f64,
        n_iter: usize,
        resolution: usize,
    },
    Recur {
        alpha: AlphaSpec,
        coeffs: Vec<(f64, f64)>,
        r0: f64,
        n_iter: usize,
        resolution: usize,
        n_lo: usize,
        n_hi: usize,
    },
    Probe {
        alpha: AlphaSpec,
        coeffs: Vec<(f64, f64)>,
        r0: f64,
        seeds: usize,
        rng_seed: u64,
        n_iter: usize,
    },
    Holonomy {
        /// Plain value: rational alpha is legal for the foliation.
        alpha: f64,
        /// (j, k, Re e, Im e) monomials inside P.
        perturb: Vec<(u32, u32, f64, f64)>,
        x0: f64,
        y_radius: f64,
        tol: f64,
        fit_degree: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Warn,
    Fail,
    SkippedGate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckStatus {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub checks: Vec<CheckStatus>,
    pub artifacts: Vec<String>,
    pub run_dir: String,
}

impl RunManifest {
    pub fn worst(&self) -> Status {
        let mut w = Status::Pass;
        for c in &self.checks {
            w = match (w, c.status) {
                (_, Status::Fail) | (Status::Fail, _) => Status::Fail,
                (_, Status::Warn) | (Status::Warn, _) => Status::Warn,
                (Status::SkippedGate, _) | (_, Status::SkippedGate) => Status::SkippedGate,
                _ => Status::Pass,
            };
        }
        w
    }
}

pub fn config_hash(config: &ExperimentConfig) -> Result<String, RunError> {
    let canonical = serde_json::to_string(config)?;
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
}

/// RFC-4180-style CSV: header row, '.' decimal separator, quoting only
/// when needed.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), RunError> {
    let mut out = String::new();
    out.push_str(&header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(","));
    out.push_str("\r\n");
    for row in rows {
        out.push_str(&row.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
        out.push_str("\r\n");
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

struct Ctx<'a> {
    dir: &'a Path,
    artifacts: Vec<String>,
    checks: Vec<CheckStatus>,
}

impl<'a> Ctx<'a> {
    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunError> {
        write_csv(&self.dir.join(name), header, rows)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }
    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        write_json(&self.dir.join(name), value)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }
    fn check(&mut self, name: &str, status: Status, detail: impl Into<String>) {
        self.checks.push(CheckStatus { name: name.into(), status, detail: detail.into() });
    }
}

fn run_cf(ctx: &mut Ctx, alpha: &AlphaSpec, count: usize) -> Result<(), RunError> {
    let a = alpha.build()?;
    let mut rows = Vec::new();
    let mut brjuno = 0.0;
    for n in 1..=count {
        let (p, q) = match a.convergent(n) {
            Ok(pq) => pq,
            Err(_) => break,
        };
        let err = a.signed_error(n).map(fmt).unwrap_or_default();
        brjuno = a.brjuno_partial_sum(n).unwrap_or(brjuno);
        rows.push(vec![n.to_string(), p.to_string(), q.to_string(), err, fmt(brjuno)]);
    }
    ctx.csv("convergents.csv", &["n", "p", "q", "signed_error", "brjuno_partial"], &rows)?;
    ctx.check("cf", Status::Pass, format!("{} convergents", rows.len()));
    Ok(())
}

fn run_circle(
    ctx: &mut Ctx,
    map: &MapSpec,
    alpha: &AlphaSpec,
    level: usize,
    grid: usize,
    samples: usize,
) -> Result<(), RunError> {
    let a = alpha.build()?;
    let g = map.build(&a)?;
    let rd = circle::renorm_data(&g, &a, level, grid)?;
    let rows: Vec<Vec<String>> = (0..rd.grid)
        .map(|i| vec![fmt(i as f64 / rd.grid as f64), fmt(rd.m[i])])
        .collect();
    ctx.csv("renorm.csv", &["x", "m_n"], &rows)?;
    ctx.json("renorm.json", &rd)?;
    match circle::check_interval_combinatorics(&g, &a, level, 0.0) {
        Ok(rep) => {
            let ok = rep.disjoint && rep.max_multiplicity <= 2 && rep.min_multiplicity >= 1;
            ctx.json("combinatorics.json", &rep)?;
            ctx.check(
                "combinatorics",
                if ok { Status::Pass } else { Status::Fail },
                format!("multiplicity {}..{}", rep.min_multiplicity, rep.max_multiplicity),
            );
        }
        Err(e) => ctx.check("combinatorics", Status::Fail, e.to_string()),
    }
    match circle::check_schwarzian_estimate(&g, &a, level, samples) {
        Ok(rep) => {
            ctx.json("schwarzian.json", &rep)?;
            ctx.check("schwarzian", Status::Pass, format!("ratio {}", rep.ratio));
        }
        Err(e) => ctx.check("schwarzian", Status::Fail, e.to_string()),
    }
    match circle::check_iterate_nonlinearity(&g, &a, level, samples) {
        Ok(rep) => {
            ctx.json("nonlinearity.json", &rep)?;
            ctx.check("nonlinearity", Status::Pass, format!("ratio {}", rep.ratio));
        }
        Err(e) => ctx.check("nonlinearity", Status::Fail, e.to_string()),
    }
    match circle::check_gn_estimates(&g, &a, level) {
        Ok(rep) => {
            let status = if !rep.asserted {
                Status::SkippedGate
            } else if rep.passed {
                Status::Pass
            } else {
                Status::Fail
            };
            ctx.json("gn.json", &rep)?;
            ctx.check(
                "gn-estimates",
                status,
                format!("ratio in [{}, {}]", rep.worst_ratio_low, rep.worst_ratio_high),
            );
        }
        Err(e) => ctx.check("gn-estimates", Status::Fail, e.to_string()),
    }
    Ok(())
}

#[derive(Serialize)]
struct DyReport {
    tau: f64,
    m_sup: f64,
    gate_ok: bool,
    max_rel_deviation: f64,
    violations: Vec<f64>,
}

fn run_dy(
    ctx: &mut Ctx,
    map: &MapSpec,
    alpha: &AlphaSpec,
    delta: f64,
    level: usize,
    samples: usize,
    y0: f64,
) -> Result<(), RunError> {
    let a = alpha.build()?;
    let g = map.build(&a)?;
    let mut max_rel = 0.0f64;
    let mut violations = Vec::new();
    let mut tau = f64::NAN;
    let mut m_sup = f64::NAN;
    let mut orbit_rows = Vec::new();
    for i in 0..samples {
        let x0 = i as f64 / samples as f64;
        match band::track_dy_orbit(&g, &a, level, delta, x0, y0, None) {
            Ok(orb) => {
                tau = orb.tau;
                m_sup = orb.m_sup;
                let rel = orb.max_dev / orb.y0;
                max_rel = max_rel.max(rel);
                if !orb.dev_ok {
                    violations.push(x0);
                }
                if i == 0 {
                    for (j, ((x, z), y)) in orb.xs.iter().zip(&orb.zs).zip(&orb.ys).enumerate() {
                        orbit_rows.push(vec![
                            j.to_string(),
                            fmt(*x),
                            fmt(z.0),
                            fmt(z.1),
                            fmt(y.0),
                            fmt(y.1),
                        ]);
                    }
                }
            }
            Err(band::BandError::Gate(msg)) => {
                ctx.json(
                    "dy_report.json",
                    &DyReport { tau, m_sup, gate_ok: false, max_rel_deviation: 0.0, violations },
                )?;
                ctx.check("denjoy-yoccoz", Status::SkippedGate, msg);
                return Ok(());
            }
            Err(e) => {
                ctx.check("denjoy-yoccoz", Status::Fail, e.to_string());
                return Ok(());
            }
        }
    }
    ctx.csv("orbit.csv", &["j", "x_j", "re_z", "im_z", "re_y", "im_y"], &orbit_rows)?;
    let ok = violations.is_empty();
    ctx.json(
        "dy_report.json",
        &DyReport { tau, m_sup, gate_ok: true, max_rel_deviation: max_rel, violations: violations.clone() },
    )?;
    ctx.check(
        "denjoy-yoccoz",
        if ok { Status::Pass } else { Status::Fail },
        format!("max |y_j - y_0|/y_0 = {max_rel}"),
    );
    Ok(())
}

fn run_qicurve(
    ctx: &mut Ctx,
    map: &MapSpec,
    alpha: &AlphaSpec,
    level: usize,
    y0: f64,
    resolution: usize,
    checks: &[String],
) -> Result<(), RunError> {
    let a = alpha.build()?;
    let g = map.build(&a)?;
    let curve = qicurve::build_curve(&g, &a, level, y0, resolution)?;
    let rows: Vec<Vec<String>> = curve
        .zs
        .iter()
        .map(|&(x, h)| vec![fmt(x), fmt(x), fmt(h)])
        .collect();
    ctx.csv("curve.csv", &["x", "re_z", "im_z"], &rows)?;
    for name in checks {
        match name.as_str() {
            "invariance" => match qicurve::verify_quasi_invariance(&g, &curve, None, &a) {
                Ok(rep) => {
                    let st = if rep.max <= rep.threshold {
                        Status::Pass
                    } else if rep.warn {
                        Status::Warn
                    } else {
                        Status::Fail
                    };
                    ctx.json("invariance.json", &rep)?;
                    ctx.check("invariance", st, format!("max D_P = {}", rep.max));
                }
                Err(e) => ctx.check("invariance", Status::Fail, e.to_string()),
            },
            "return" => match qicurve::verify_return_displacement(&g, &curve, &a) {
                Ok(d) => {
                    let st = if d <= 3.0 {
                        Status::Pass
                    } else if d <= 3.15 {
                        Status::Warn
                    } else {
                        Status::Fail
                    };
                    ctx.check("return", st, format!("sup d_P = {d}"));
                }
                Err(e) => ctx.check("return", Status::Fail, e.to_string()),
            },
            "cover" => match qicurve::osculating_cover_check(&g, &curve, &a, 0.0, 3.15) {
                Ok(rep) => {
                    let st = if rep.coverage >= 1.0 { Status::Pass } else { Status::Fail };
                    ctx.json("cover.json", &rep)?;
                    ctx.check("cover", st, format!("coverage {}", rep.coverage));
                }
                Err(e) => ctx.check("cover", Status::Fail, e.to_string()),
            },
            other => {
                return Err(RunError::Validation(format!("unknown qicurve check '{other}'")))
            }
        }
    }
    Ok(())
}

fn build_germ(alpha: &AlphaSpec, coeffs: &[(f64, f64)], r0: f64) -> Result<(Germ, RotationNumber), RunError> {
    let a = alpha.build()?;
    let c: Vec<Complex64> = coeffs.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    Ok((Germ::new(a.value(), c, r0)?, a))
}

fn run_hedgehog(
    ctx: &mut Ctx,
    alpha: &AlphaSpec,
    coeffs: &[(f64, f64)],
    r0: f64,
    n_iter: usize,
    resolution: usize,
) -> Result<(), RunError> {
    let (f, _) = build_germ(alpha, coeffs, r0)?;
    let k = germ::hedgehog_approx(&f, n_iter, resolution)?;
    let rows: Vec<Vec<String>> = k
        .component_points()
        .iter()
        .map(|z| vec![fmt(z.re), fmt(z.im)])
        .collect();
    ctx.csv("component.csv", &["re", "im"], &rows)?;
    #[derive(Serialize)]
    struct HReport {
        resolution: usize,
        n_iter: usize,
        h: f64,
        component_cells: usize,
        boundary_cells: usize,
        retained_fraction: f64,
        touches_ring: bool,
    }
    ctx.json(
        "hedgehog.json",
        &HReport {
            resolution: k.resolution,
            n_iter: k.n_iter,
            h: k.h,
            component_cells: k.component.len(),
            boundary_cells: k.boundary.len(),
            retained_fraction: k.retained_fraction,
            touches_ring: k.touches_ring,
        },
    )?;
    let st = if k.touches_ring { Status::Pass } else { Status::Warn };
    ctx.check("hedgehog", st, format!("{} cells, ring touch {}", k.component.len(), k.touches_ring));
    Ok(())
}

fn run_recur(
    ctx: &mut Ctx,
    alpha: &AlphaSpec,
    coeffs: &[(f64, f64)],
    r0: f64,
    n_iter: usize,
    resolution: usize,
    n_lo: usize,
    n_hi: usize,
) -> Result<(), RunError> {
    let (f, a) = build_germ(alpha, coeffs, r0)?;
    let k = germ::hedgehog_approx(&f, n_iter, resolution)?;
    let prof = germ::recurrence_profile(&f, &k, &a, n_lo..=n_hi)?;
    let rows: Vec<Vec<String>> = prof
        .iter()
        .map(|e| {
            vec![
                e.n.to_string(),
                e.qn.to_string(),
                fmt(e.sup_forward),
                fmt(e.sup_backward),
                e.excluded.to_string(),
            ]
        })
        .collect();
    ctx.csv("profile.csv", &["n", "q_n", "sup_forward", "sup_backward", "excluded"], &rows)?;
    ctx.json("profile.json", &prof)?;
    let mut decreasing = true;
    for w in prof.windows(2) {
        if w[1].sup_forward > 1.10 * w[0].sup_forward
            || w[1].sup_backward > 1.10 * w[0].sup_backward
        {
            decreasing = false;
        }
    }
    ctx.check(
        "recurrence",
        if decreasing { Status::Pass } else { Status::Fail },
        format!("{} levels", prof.len()),
    );
    Ok(())
}

pub fn probe_seeds(r0: f64, count: usize, rng_seed: u64) -> Vec<Complex64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
    (0..count)
        .map(|_| {
            let r = (r0 * rng.gen::<f64>().sqrt()).max(r0 * 1e-3);
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(r, t)
        })
        .collect()
}

fn run_probe(
    ctx: &mut Ctx,
    alpha: &AlphaSpec,
    coeffs: &[(f64, f64)],
    r0: f64,
    seeds: usize,
    rng_seed: u64,
    n_iter: usize,
) -> Result<(), RunError> {
    let (f, _) = build_germ(alpha, coeffs, r0)?;
    let pts = probe_seeds(r0, seeds, rng_seed);
    let rep = germ::convergence_probe(&f, &pts, n_iter, 0.1 * r0, 0.5 * r0)?;
    let rows: Vec<Vec<String>> = rep
        .suspects
        .iter()
        .map(|s| {
            vec![
                fmt(s.seed.0),
                fmt(s.seed.1),
                s.direction.to_string(),
                s.entered_at.to_string(),
                fmt(s.min_modulus),
            ]
        })
        .collect();
    ctx.csv("suspects.csv", &["seed_re", "seed_im", "direction", "entered_at", "min_modulus"], &rows)?;
    ctx.json("probe.json", &rep)?;
    ctx.check(
        "probe",
        if rep.suspects.is_empty() { Status::Pass } else { Status::Fail },
        format!("{} entries, {} exits, {} suspects", rep.entries, rep.exits, rep.suspects.len()),
    );
    Ok(())
}

fn run_holonomy(
    ctx: &mut Ctx,
    alpha: f64,
    perturb: &[(u32, u32, f64, f64)],
    x0: f64,
    y_radius: f64,
    tol: f64,
    fit_degree: usize,
) -> Result<(), RunError> {
    let terms: Vec<Monomial> = perturb
        .iter()
        .map(|&(j, k, re, im)| Monomial { j, k, e: Complex64::new(re, im) })
        .collect();
    let f = FoliationGerm::new(alpha, terms, vec![], x0, y_radius)?;
    let mult = holonomy::holonomy_multiplier(&f, tol)?;
    let (_, fit) = holonomy::germ_from_holonomy(&f, y_radius / 4.0, fit_degree, tol)?;
    #[derive(Serialize)]
    struct HolReport {
        multiplier: (f64, f64),
        alpha_recovered: f64,
        fit_coeffs: Vec<(f64, f64)>,
        residual: f64,
    }
    ctx.json(
        "holonomy.json",
        &HolReport {
            multiplier: (mult.re, mult.im),
            alpha_recovered: fit.alpha_recovered,
            fit_coeffs: fit.coeffs.iter().map(|c| (c.re, c.im)).collect(),
            residual: fit.residual,
        },
    )?;
    let expect = Complex64::from_polar(1.0, std::f64::consts::TAU * alpha);
    let err = (mult - expect).norm();
    ctx.check(
        "holonomy",
        if err <= 1e-6 { Status::Pass } else { Status::Fail },
        format!("|multiplier - e^(2 pi i alpha)| = {err}"),
    );
    let _ = dist_halfplane; // chart helpers re-exported for CLI users
    Ok(())
}

/// Execute a config: artifacts land in out_root/<hash>[-rK]/, written to a
/// temp dir first and renamed into place.
pub fn run(config: &ExperimentConfig, out_root: &Path) -> Result<RunManifest, RunError> {
    let hash = config_hash(config)?;
    fs::create_dir_all(out_root)?;
    let tmp = out_root.join(format!(".tmp-{hash}-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;
    let started = now_ms();
    let mut ctx = Ctx { dir: &tmp, artifacts: Vec::new(), checks: Vec::new() };
    write_json(&tmp.join("config.json"), config)?;
    ctx.artifacts.push("config.json".into());
    let result = match config {
        ExperimentConfig::Cf { alpha, count } => run_cf(&mut ctx, alpha, *count),
        ExperimentConfig::Circle { map, alpha, level, grid, samples } => {
            run_circle(&mut ctx, map, alpha, *level, *grid, *samples)
        }
        ExperimentConfig::DyVerify { map, alpha, delta, level, samples, y0 } => {
            run_dy(&mut ctx, map, alpha, *delta, *level, *samples, *y0)
        }
        ExperimentConfig::Qicurve { map, alpha, level, y0, resolution, checks } => {
            run_qicurve(&mut ctx, map, alpha, *level, *y0, *resolution, checks)
        }
        ExperimentConfig::Hedgehog { alpha, coeffs, r0, n_iter, resolution } => {
            run_hedgehog(&mut ctx, alpha, coeffs, *r0, *n_iter, *resolution)
        }
        ExperimentConfig::Recur { alpha, coeffs, r0, n_iter, resolution, n_lo, n_hi } => {
            run_recur(&mut ctx, alpha, coeffs, *r0, *n_iter, *resolution, *n_lo, *n_hi)
        }
        ExperimentConfig::Probe { alpha, coeffs, r0, seeds, rng_seed, n_iter } => {
            run_probe(&mut ctx, alpha, coeffs, *r0, *seeds, *rng_seed, *n_iter)
        }
        ExperimentConfig::Holonomy { alpha, perturb, x0, y_radius, tol, fit_degree } => {
            run_holonomy(&mut ctx, *alpha, perturb, *x0, *y_radius, *tol, *fit_degree)
        }
    };
    if let Err(e) = result {
        // Keep the temp dir for inspection on a partial run.
        let msg = match e {
            RunError::Experiment(m) => m,
            other => other.to_string(),
        };
        return Err(RunError::Experiment(format!("{msg} (partial artifacts in {})", tmp.display())));
    }
    let mut dest = out_root.join(&hash);
    let mut k = 0;
    while dest.exists() {
        k += 1;
        dest = out_root.join(format!("{hash}-r{k}"));
    }
    let manifest = RunManifest {
        config_hash: hash,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        checks: ctx.checks,
        artifacts: {
            let mut a = ctx.artifacts;
            a.push("manifest.json".into());
            a.sort();
            a
        },
        run_dir: dest.display().to_string(),
    };
    write_json(&tmp.join("manifest.json"), &manifest)?;
    fs::rename(&tmp, &dest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub runs: Vec<RunManifest>,
    pub failures: Vec<String>,
}

/// Run a list of configs; a missing or invalid config is itself a failure.
pub fn suite(config_paths: &[PathBuf], out_root: &Path) -> Result<SuiteReport, RunError> {
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for p in config_paths {
        let text = match fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("{}: {e}", p.display()));
                continue;
            }
        };
        let config: ExperimentConfig = match serde_json::from_str(&text) {
            Ok(c) => c,
            Err(e) => {
                failures.push(format!("{}: {e}", p.display()));
                continue;
            }
        };
        match run(&config, out_root) {
            Ok(m) => {
                if m.worst() == Status::Fail {
                    failures.push(format!("{}: checks failed", p.display()));
                }
                runs.push(m);
            }
            Err(e) => failures.push(format!("{}: {e}", p.display())),
        }
    }
    let report = SuiteReport { runs, failures };
    fs::create_dir_all(out_root)?;
    write_json(&out_root.join("suite.json"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> AlphaSpec {
        AlphaSpec::Golden
    }

    #[test]
    fn cf_run_and_replay_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::Cf { alpha: golden(), count: 10 };
        let m1 = run(&cfg, dir.path()).unwrap();
        let m2 = run(&cfg, dir.path()).unwrap();
        assert_eq!(m1.config_hash, m2.config_hash);
        let a = fs::read(Path::new(&m1.run_dir).join("convergents.csv")).unwrap();
        let b = fs::read(Path::new(&m2.run_dir).join("convergents.csv")).unwrap();
        assert_eq!(a, b);
        assert_ne!(m1.run_dir, m2.run_dir);
        assert_eq!(m1.worst(), Status::Pass);
    }

    #[test]
    fn dy_gate_semantics() {
        let dir = tempfile::tempdir().unwrap();
        // Level 0 for the golden mean: M_0 > delta/2, so the premise gate
        // fails and the run must be skipped(gate), not fail.
        let cfg = ExperimentConfig::DyVerify {
            map: MapSpec::Translation { omega: None },
            alpha: golden(),
            delta: 0.25,
            level: 0,
            samples: 2,
            y0: 0.75,
        };
        let m = run(&cfg, dir.path()).unwrap();
        assert_eq!(m.checks[0].status, Status::SkippedGate);
        assert_eq!(m.worst(), Status::SkippedGate);
    }

    #[test]
    fn qicurve_translation_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::Qicurve {
            map: MapSpec::Translation { omega: None },
            alpha: golden(),
            level: 5,
            y0: 0.75,
            resolution: 128,
            checks: vec!["invariance".into(), "return".into(), "cover".into()],
        };
        let m = run(&cfg, dir.path()).unwrap();
        assert_eq!(m.worst(), Status::Pass, "{:?}", m.checks);
        assert!(m.artifacts.iter().any(|a| a == "curve.csv"));
    }

    #[test]
    fn suite_aggregates_and_flags_missing() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("cf.json");
        fs::write(
            &cfg_path,
            serde_json::to_string(&ExperimentConfig::Cf { alpha: golden(), count: 5 }).unwrap(),
        )
        .unwrap();
        let missing = dir.path().join("missing.json");
        let rep = suite(&[cfg_path, missing], dir.path()).unwrap();
        assert_eq!(rep.runs.len(), 1);
        assert_eq!(rep.failures.len(), 1);
        // Empty list: empty aggregate.
        let rep = suite(&[], dir.path()).unwrap();
        assert!(rep.runs.is_empty() && rep.failures.is_empty());
    }

    #[test]
    fn csv_quoting() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_csv(&p, &["a", "b"], &[vec!["x,y".into(), "q\"u\"".into()]]).unwrap();
        let s = fs::read_to_string(&p).unwrap();
        assert_eq!(s, "a,b\r\n\"x,y\",\"q\"\"u\"\"\"\r\n");
    }

    #[test]
    fn holonomy_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::Holonomy {
            alpha: 0.25,
            perturb: vec![],
            x0: 0.05,
            y_radius: 0.1,
            tol: 1e-11,
            fit_degree: 3,
        };
        let m = run(&cfg, dir.path()).unwrap();
        assert_eq!(m.worst(), Status::Pass, "{:?}", m.checks);
    }
}
