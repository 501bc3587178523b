//! End-to-end acceptance checks, one test per criterion. Each prints a
//! single pass/fail line (visible with --nocapture) and asserts.

use std::sync::OnceLock;

use num_complex::Complex64;

use hedgehog_lab::band::{self, BandError, BandOrbit};
use hedgehog_lab::circle::{self, CircleLift};
use hedgehog_lab::germ::{self, Germ};
use hedgehog_lab::holonomy::{self, FoliationGerm, Monomial};
use hedgehog_lab::hyperbolic::dist_halfplane;
use hedgehog_lab::qicurve;
use hedgehog_lab::rotation::RotationNumber;
use hedgehog_lab::runner::{self, AlphaSpec, ExperimentConfig, MapSpec, Status};

fn report(num: u32, ok: bool, detail: &str) {
    println!("criterion {num:>2}: {} — {detail}", if ok { "pass" } else { "FAIL" });
    assert!(ok, "criterion {num}: {detail}");
}

const EPS_ARNOLD: f64 = 0.001;
const DELTA: f64 = 0.25;

/// Arnold lift with eps = 0.001 tuned to the golden mean, shared by the
/// orbit-tracking and curve criteria.
fn golden_arnold() -> &'static CircleLift {
    static G: OnceLock<CircleLift> = OnceLock::new();
    G.get_or_init(|| {
        let alpha = RotationNumber::golden();
        circle::tune_omega(
            |w| CircleLift::arnold(w, EPS_ARNOLD, DELTA),
            &alpha,
            1e-9,
            10_000_000,
        )
        .unwrap()
        .0
    })
}

/// The orbit sweep shared by criteria 3 and 4: every level n with
/// q_{n+1} <= 10^4 whose premise gates hold, four (x_0, y_0) pairs each.
fn sweep() -> &'static Vec<BandOrbit> {
    static S: OnceLock<Vec<BandOrbit>> = OnceLock::new();
    S.get_or_init(|| {
        let alpha = RotationNumber::golden();
        let g = golden_arnold();
        let pairs = [(0.13, 0.75), (0.41, 1.0), (0.67, 0.30), (0.88, 0.55)];
        let mut orbits = Vec::new();
        let mut n = 1;
        while alpha.q_u64(n + 1).unwrap() <= 10_000 {
            for &(x0, y0) in &pairs {
                match band::track_dy_orbit(g, &alpha, n, DELTA, x0, y0, None) {
                    Ok(orb) => orbits.push(orb),
                    Err(BandError::Gate(_)) => {} // premise unmet at this level
                    Err(e) => panic!("level {n}: {e}"),
                }
            }
            n += 1;
        }
        orbits
    })
}

#[test]
fn c01_continued_fractions() {
    let alpha = RotationNumber::golden();
    // Independent oracle: Fibonacci recursion in machine integers.
    let mut fib = [0u64; 23];
    fib[1] = 1;
    for i in 2..23 {
        fib[i] = fib[i - 1] + fib[i - 2];
    }
    let mut ok = true;
    for n in 0..=20usize {
        let p = alpha.p_i64(n).unwrap();
        let q = alpha.q_u64(n).unwrap();
        if p != fib[n] as i64 || q != fib[n + 1] {
            ok = false;
        }
        if n >= 1 {
            let det = q as i128 * alpha.p_i64(n - 1).unwrap() as i128
                - p as i128 * alpha.q_u64(n - 1).unwrap() as i128;
            if det != if n % 2 == 0 { 1 } else { -1 } {
                ok = false;
            }
        }
        if !alpha.check_convergent_inequality(n).unwrap() {
            ok = false;
        }
    }
    report(1, ok, "golden convergents = Fibonacci pairs through n=20, determinant and |q_n a - p_n| < 1/q_{n+1} exact");
}

#[test]
fn c02_brjuno_sums() {
    let alpha = RotationNumber::golden();
    let got = alpha.brjuno_partial_sum(10).unwrap();
    // Summation oracle straight from the Fibonacci numbers.
    let mut fib = vec![0f64, 1.0];
    for i in 2..14 {
        let v = fib[i - 1] + fib[i - 2];
        fib.push(v);
    }
    let oracle: f64 = (0..=10).map(|n| fib[n + 2].ln() / fib[n + 1]).sum();
    let golden_ok = (got - 3.17).abs() <= 0.01 && (got - oracle).abs() < 1e-9;

    let liou = RotationNumber::brjuno_divergent(10.0).unwrap();
    let s4 = liou.brjuno_partial_sum(4).unwrap();
    let liou_ok = s4 > 40.0;
    report(
        2,
        golden_ok && liou_ok,
        &format!("golden partial sum(10) = {got:.4}; divergent-stream sum(4) = {s4:.1} > 40"),
    );
}

#[test]
fn c03_normalized_band_orbits() {
    let orbits = sweep();
    let violations = orbits.iter().filter(|o| !o.dev_ok).count();
    let sum_bad = orbits
        .iter()
        .filter(|o| band::sum_interval_lengths(o).is_err())
        .count();
    let ok = orbits.len() >= 50 && violations == 0 && sum_bad == 0;
    report(
        3,
        ok,
        &format!(
            "{} orbits (levels with M_n < delta/2, q_{{n+1}} <= 10^4): {} height-deviation violations, {} interval-sum violations",
            orbits.len(),
            violations,
            sum_bad
        ),
    );
}

#[test]
fn c04_hyperbolic_orbit_distance() {
    // d_P between the tracked orbit and the rigid model x_j + i m_n(x_j) y_0
    // stays below 3 (+ 5% sampling slack) in the half-plane metric.
    let mut max_d = 0.0f64;
    for orb in sweep() {
        for j in 0..orb.zs.len() {
            let (zre, zim) = orb.zs[j];
            let mut dre = zre - orb.xs[j];
            dre -= dre.round();
            // m_n < 0 puts both points in the lower half-plane; conjugation
            // is an isometry, so compare absolute heights.
            let d = dist_halfplane(
                Complex64::new(dre, zim.abs()),
                Complex64::new(0.0, (orb.m[j] * orb.y0).abs()),
            )
            .unwrap();
            max_d = max_d.max(d);
        }
    }
    let ok = max_d <= 3.05 && !sweep().is_empty();
    report(4, ok, &format!("max d_P(orbit, rigid model) = {max_d:.4} <= 3.05 over {} orbits", sweep().len()));
}

#[test]
fn c05_quasi_invariant_curves() {
    let alpha = RotationNumber::golden();
    let y0 = 0.75f64;

    // Rigid rotation: exact invariance and the closed-form return shift.
    let rigid = CircleLift::translation(alpha.value());
    let mut rigid_max = 0.0f64;
    let mut ret_err = 0.0f64;
    let ret_expect = (1.0 + 1.0 / (2.0 * y0 * y0)).acosh();
    for n in [4usize, 9, 15] {
        let curve = qicurve::build_curve(&rigid, &alpha, n, y0, 128).unwrap();
        let base = curve.points();
        let qn = alpha.q_u64(n).unwrap() as usize;
        let mut images = base.clone();
        for _ in 0..qn {
            for z in images.iter_mut() {
                let w = rigid.eval_c(*z);
                *z = Complex64::new(w.re - w.re.floor(), w.im);
            }
            let (raw, _) = qicurve::graph_hausdorff(&images, &base).unwrap();
            rigid_max = rigid_max.max(raw);
        }
        let ret = qicurve::verify_return_displacement(&rigid, &curve, &alpha).unwrap();
        ret_err = ret_err.max((ret - ret_expect).abs());
    }
    let rigid_ok = rigid_max <= 1e-9 && ret_err <= 1e-9;

    // Arnold eps = 0.001: thresholds 6 and 3, + 5% sampling slack.
    let g = golden_arnold();
    let mut arnold_max = 0.0f64;
    let mut arnold_ret = 0.0f64;
    let mut all_passed = true;
    // n = 2 has curve height |m_1| y_0 = 0.287 > delta: outside the band.
    for n in 3..=16usize {
        let curve = qicurve::build_curve(g, &alpha, n, y0, 256).unwrap();
        let rep = qicurve::verify_quasi_invariance(g, &curve, None, &alpha).unwrap();
        arnold_max = arnold_max.max(rep.max);
        all_passed &= rep.passed;
        let ret = qicurve::verify_return_displacement(g, &curve, &alpha).unwrap();
        arnold_ret = arnold_ret.max(ret);
    }
    let arnold_ok = all_passed && arnold_ret <= 3.0 * 1.05;
    report(
        5,
        rigid_ok && arnold_ok,
        &format!(
            "rigid: raw distance {rigid_max:.2e}, return error {ret_err:.2e}; arnold n=3..16: max D_P = {arnold_max:.3} <= 6.3, max return = {arnold_ret:.3} <= 3.15"
        ),
    );
}

#[test]
fn c06_osculating_cover() {
    let alpha = RotationNumber::golden();
    let radius = 3.0 * 1.05;
    let rigid = CircleLift::translation(alpha.value());
    let curve = qicurve::build_curve(&rigid, &alpha, 10, 0.75, 256).unwrap();
    let rep_r = qicurve::osculating_cover_check(&rigid, &curve, &alpha, 0.2, radius).unwrap();

    let g = golden_arnold();
    let curve = qicurve::build_curve(g, &alpha, 10, 0.75, 256).unwrap();
    let rep_a = qicurve::osculating_cover_check(g, &curve, &alpha, 0.2, radius).unwrap();

    let ok = rep_r.coverage == 1.0
        && rep_a.coverage == 1.0
        && rep_r.orbit_below_h
        && rep_a.orbit_below_h;
    report(
        6,
        ok,
        &format!(
            "coverage 1.0 at radius {radius:.2} (max gaps: rigid {:.3}, arnold {:.3}); orbits below H",
            rep_r.max_gap, rep_a.max_gap
        ),
    );
}

#[test]
fn c07_recurrence_profiles() {
    let alpha = RotationNumber::golden();
    let r0 = 0.1;

    // Linear germ: the profile has the closed form 2 r_0 |sin(pi (q_n a - p_n))|.
    let lin = Germ::linear(alpha.value(), r0);
    let k = germ::hedgehog_approx(&lin, 10_000, 512).unwrap();
    let prof = germ::recurrence_profile(&lin, &k, &alpha, 3..=6).unwrap();
    let mut lin_err = 0.0f64;
    for e in &prof {
        let closed = 2.0 * r0 * (std::f64::consts::PI * alpha.signed_error(e.n).unwrap()).sin().abs();
        lin_err = lin_err.max((e.sup_forward - closed).abs());
        lin_err = lin_err.max((e.sup_backward - closed).abs());
    }
    let anchors_ok = (prof[0].sup_forward - 0.0885).abs() < 5e-5
        && (prof[1].sup_forward - 0.0559).abs() < 5e-5;
    let lin_ok = lin_err <= 1e-12 && anchors_ok;

    // Quadratic golden germ: decreasing profile with 10% slack, both ways.
    let quad = Germ::quadratic(alpha.value(), r0).unwrap();
    let k = germ::hedgehog_approx(&quad, 10_000, 512).unwrap();
    let prof_q = germ::recurrence_profile(&quad, &k, &alpha, 3..=8).unwrap();
    let mut decreasing = true;
    for w in prof_q.windows(2) {
        if w[1].sup_forward > 1.10 * w[0].sup_forward
            || w[1].sup_backward > 1.10 * w[0].sup_backward
        {
            decreasing = false;
        }
    }
    report(
        7,
        lin_ok && decreasing,
        &format!(
            "linear profile matches closed form to {lin_err:.1e} (anchors 0.0885 / 0.0559); quadratic profile n=3..8 decreasing (10% slack)"
        ),
    );
}

#[test]
fn c08_accumulation_coverage() {
    let alpha = RotationNumber::golden().value();
    // Linear germ: every boundary sample of the seed's modulus circle is
    // approached, coverage >= 0.99 at N = 10^6.
    let lin = Germ::linear(alpha, 0.1);
    let mut min_cov = 1.0f64;
    for &r in &[0.03f64, 0.055, 0.08] {
        let targets: Vec<Complex64> = (0..720)
            .map(|i| Complex64::from_polar(r, std::f64::consts::TAU * i as f64 / 720.0))
            .collect();
        let seeds = [Complex64::from_polar(r, 0.37)];
        let rep = germ::accumulation_scan(&lin, &targets, &seeds, 1_000_000, 1e-3, 1e-3).unwrap();
        assert_eq!(rep.tracked_seeds, 1);
        min_cov = min_cov.min(rep.min_coverage);
    }
    let lin_ok = min_cov >= 0.99;

    // Quadratic golden germ: coverage monotone in the budget (N vs 4N).
    // Seeds on the target radius so their invariant curves shadow the
    // target circle (distortion ~ 9e-4 at r = 0.04).
    let quad = Germ::quadratic(alpha, 0.1).unwrap();
    let targets: Vec<Complex64> = (0..256)
        .map(|i| Complex64::from_polar(0.04, std::f64::consts::TAU * i as f64 / 256.0))
        .collect();
    let seeds = [Complex64::from_polar(0.04, 0.9), Complex64::from_polar(0.0397, 2.3)];
    let rep1 = germ::accumulation_scan(&quad, &targets, &seeds, 250_000, 0.01, 0.005).unwrap();
    let rep4 = germ::accumulation_scan(&quad, &targets, &seeds, 1_000_000, 0.01, 0.005).unwrap();
    let quad_ok = rep4.min_coverage >= rep1.min_coverage - 1e-12
        && rep4.tracked_seeds >= rep1.tracked_seeds
        && rep4.min_coverage > 0.5;
    report(
        8,
        lin_ok && quad_ok,
        &format!(
            "linear min coverage {min_cov:.4} >= 0.99 at N=10^6; quadratic coverage {:.3} -> {:.3} monotone N vs 4N",
            rep1.min_coverage, rep4.min_coverage
        ),
    );
}

#[test]
fn c09_convergence_probe() {
    let seeds = runner::probe_seeds(0.1, 1000, 1);
    let golden = Germ::quadratic(RotationNumber::golden().value(), 0.1).unwrap();
    let rep_g = germ::convergence_probe(&golden, &seeds, 1_000_000, 0.01, 0.05).unwrap();

    // Non-Brjuno stream at rate 2 (every Brjuno term >= 2). Rate 10 forces
    // a_1 = ceil(e^10), i.e. alpha ~ 5e-5: a near-parabolic germ whose
    // gate passages dwell below the inner radius longer than any
    // affordable budget, so its probe is not resolvable at N = 10^6.
    let liou_alpha = RotationNumber::brjuno_divergent(2.0).unwrap().value();
    assert!(liou_alpha.is_finite() && liou_alpha > 0.0);
    let liou = Germ::quadratic(liou_alpha, 0.1).unwrap();
    let rep_l = germ::convergence_probe(&liou, &seeds, 1_000_000, 0.01, 0.05).unwrap();

    let ok = rep_g.suspects.is_empty() && rep_l.suspects.is_empty();
    report(
        9,
        ok,
        &format!(
            "golden: {} entries / {} suspects; non-Brjuno (rate-2 stream): {} entries / {} suspects (10^3 seeds, N=10^6, both directions)",
            rep_g.entries,
            rep_g.suspects.len(),
            rep_l.entries,
            rep_l.suspects.len()
        ),
    );
}

#[test]
fn c10_holonomy_multipliers() {
    let tau = std::f64::consts::TAU;
    // Linear foliation, irrational slope.
    let a = RotationNumber::golden().value();
    let f = FoliationGerm::linear(a, 0.05, 0.1).unwrap();
    let m = holonomy::holonomy_multiplier(&f, 1e-12).unwrap();
    let err_lin = (m - Complex64::from_polar(1.0, tau * a)).norm();

    // alpha = 1/4: multiplier exactly i.
    let f4 = FoliationGerm::linear(0.25, 0.05, 0.1).unwrap();
    let m4 = holonomy::holonomy_multiplier(&f4, 1e-12).unwrap();
    let err_i = (m4 - Complex64::new(0.0, 1.0)).norm();

    // Perturbed foliation: e_{11} = 0.1 inside P, x_0 = 0.05.
    let fp = FoliationGerm::new(
        0.25,
        vec![Monomial { j: 1, k: 1, e: Complex64::new(0.1, 0.0) }],
        vec![],
        0.05,
        0.1,
    )
    .unwrap();
    let mp = holonomy::holonomy_multiplier(&fp, 1e-10).unwrap();
    let err_p = (mp - Complex64::new(0.0, 1.0)).norm();

    // Path reversal: integrating back must return the start point.
    let y0 = Complex64::new(0.06, 0.02);
    let y1 = holonomy::integrate_leaf(&fp, y0, 0.0, 1.0, 1e-11).unwrap();
    let y2 = holonomy::integrate_leaf(&fp, y1, 1.0, 0.0, 1e-11).unwrap();
    let err_rt = (y2 - y0).norm();

    let ok = err_lin <= 1e-10 && err_i <= 1e-12 && err_p <= 1e-6 && err_rt <= 1e-9;
    report(
        10,
        ok,
        &format!(
            "linear {err_lin:.1e} <= 1e-10, alpha=1/4 {err_i:.1e} <= 1e-12, perturbed {err_p:.1e} <= 1e-6, roundtrip {err_rt:.1e} <= 1e-9"
        ),
    );
}

#[test]
fn c11_replay_determinism() {
    let configs = vec![
        ExperimentConfig::Cf { alpha: AlphaSpec::Golden, count: 15 },
        ExperimentConfig::Qicurve {
            map: MapSpec::Translation { omega: None },
            alpha: AlphaSpec::Golden,
            level: 4,
            y0: 0.75,
            resolution: 64,
            checks: vec!["invariance".into(), "return".into(), "cover".into()],
        },
        ExperimentConfig::Holonomy {
            alpha: 0.25,
            perturb: vec![(1, 1, 0.1, 0.0)],
            x0: 0.05,
            y_radius: 0.1,
            tol: 1e-9,
            fit_degree: 3,
        },
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut compared = 0usize;
    for cfg in &configs {
        let m1 = runner::run(cfg, dir.path()).unwrap();
        let m2 = runner::run(cfg, dir.path()).unwrap();
        assert_eq!(m1.config_hash, m2.config_hash);
        assert_ne!(m1.run_dir, m2.run_dir);
        assert_ne!(m1.worst(), Status::Fail);
        for art in &m1.artifacts {
            if art == "manifest.json" {
                continue; // holds wall-clock timestamps by design
            }
            let a = std::fs::read(std::path::Path::new(&m1.run_dir).join(art)).unwrap();
            let b = std::fs::read(std::path::Path::new(&m2.run_dir).join(art)).unwrap();
            assert_eq!(a, b, "artifact {art} differs between replays");
            compared += 1;
        }
    }
    report(
        11,
        compared > 0,
        &format!("{compared} CSV/JSON artifacts bitwise identical across replays of 3 config kinds"),
    );
}
