//! Quasi-invariant curves: flow-line graphs x -> x + i|m_{n-1}(x)| y_0,
//! their piece diameters, near-invariance under g, return displacement,
//! and the osculating-orbit cover.

use num_complex::Complex64;
use serde::Serialize;

use crate::band::BandError;
use crate::circle::{m_n_at, renorm_data, CircleError, CircleLift};
use crate::hyperbolic::{curve_length_p, dist_halfplane, Chart, HypError};
use crate::rotation::{RotationError, RotationNumber};

#[derive(Debug, Clone, thiserror::Error)]
pub enum CurveError {
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Rotation(#[from] RotationError),
    #[error(transparent)]
    Band(#[from] BandError),
    #[error(transparent)]
    Hyp(#[from] HypError),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("image left the band at iterate {j} (Im z = {im})")]
    BandEscape { j: usize, im: f64 },
    #[error("piece diameter {length} exceeds bound {bound} at x = {x}")]
    DiameterViolation { length: f64, bound: f64, x: f64 },
}

/// Flow-line curve gamma_n: the graph of x -> x + i |m_{n-1}(x)| y_0.
#[derive(Debug, Clone, Serialize)]
pub struct QICurve {
    /// Curve index n (gamma_n).
    pub level: usize,
    /// Renormalization level n-1 whose displacement sets the height.
    pub m_level: usize,
    pub y0: f64,
    pub xs: Vec<f64>,
    /// Samples (Re, Im) over one period, strictly increasing in x.
    pub zs: Vec<(f64, f64)>,
    pub max_im: f64,
    pub min_im: f64,
}

impl QICurve {
    pub fn points(&self) -> Vec<Complex64> {
        self.zs.iter().map(|&(a, b)| Complex64::new(a, b)).collect()
    }
}

/// Statistics of one quasi-invariance run.
#[derive(Debug, Clone, Serialize)]
pub struct CurveReport {
    pub level: usize,
    /// Certified upper bound of D_P(g^j(gamma), gamma) for each j.
    pub per_j: Vec<f64>,
    pub max: f64,
    pub threshold: f64,
    pub passed: bool,
    /// Exceedance within 5% of the threshold: sampling slack, warn only.
    pub warn: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverReport {
    pub level: usize,
    pub radius: f64,
    pub coverage: f64,
    /// max over curve samples of the distance to the nearest orbit point.
    pub max_gap: f64,
    /// Separation height H = 2 max Im gamma_n.
    pub h_separation: f64,
    /// All orbit points stay below H.
    pub orbit_below_h: bool,
    pub worst_x: f64,
}

pub fn build_curve(
    g: &CircleLift,
    alpha: &RotationNumber,
    n: usize,
    y0: f64,
    resolution: usize,
) -> Result<QICurve, CurveError> {
    if n == 0 {
        return Err(CurveError::Precondition("curve level must be >= 1".into()));
    }
    if !(y0 > 0.5 && y0 <= 1.0) {
        return Err(CurveError::Precondition(format!("y_0 = {y0} outside (1/2, 1]")));
    }
    if resolution < 16 {
        return Err(CurveError::Precondition(format!(
            "resolution {resolution} below the minimum 16"
        )));
    }
    let m_level = n - 1;
    let q = alpha.q_u64(m_level)?;
    let p = alpha.p_i64(m_level)?;
    // Certifies constant sign of m_{n-1} (errors out otherwise).
    let _rd = renorm_data(g, alpha, m_level, ((2 * q.max(1)) as usize).max(256))?;
    let mut xs = Vec::with_capacity(resolution);
    let mut zs = Vec::with_capacity(resolution);
    let mut max_im = 0.0f64;
    let mut min_im = f64::INFINITY;
    for i in 0..resolution {
        let x = i as f64 / resolution as f64;
        let h = m_n_at(g, q, p, x).abs() * y0;
        max_im = max_im.max(h);
        min_im = min_im.min(h);
        xs.push(x);
        zs.push((x, h));
    }
    Ok(QICurve { level: n, m_level, y0, xs, zs, max_im, min_im })
}

/// Poincaré length of the flow-line piece over I_n(x) = [x, x + m_n(x)],
/// asserted against 2 (1 + eps_0)/(1 - eps_0) with eps_0 = 1.5 sup|Dg_n - 1|.
pub fn piece_diameter(
    g: &CircleLift,
    alpha: &RotationNumber,
    n: usize,
    x: f64,
    y0: f64,
) -> Result<f64, CurveError> {
    let q = alpha.q_u64(n)?;
    let p = alpha.p_i64(n)?;
    let rd = renorm_data(g, alpha, n, ((2 * q.max(1)) as usize).max(256))?;
    if rd.dgn_dev_sup > 0.5 {
        return Err(CurveError::Precondition(format!(
            "sup|Dg_n - 1| = {} > 1/2; displacement-ratio gate unmet",
            rd.dgn_dev_sup
        )));
    }
    let mn = m_n_at(g, q, p, x);
    let samples = 64;
    let pts: Vec<Complex64> = (0..=samples)
        .map(|i| {
            let t = x + mn * i as f64 / samples as f64;
            Complex64::new(t, m_n_at(g, q, p, t).abs() * y0)
        })
        .collect();
    let length = curve_length_p(Chart::HalfPlane, &pts)?;
    let eps0 = 1.5 * rd.dgn_dev_sup;
    let bound = 2.0 * (1.0 + eps0) / (1.0 - eps0);
    if length > bound {
        return Err(CurveError::DiameterViolation { length, bound, x });
    }
    Ok(length)
}

/// Periodic graph sample sorted by abscissa in [0, 1).
fn sorted_graph(pts: &[Complex64]) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = pts
        .iter()
        .map(|z| Complex64::new(z.re - z.re.floor(), z.im))
        .collect();
    v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    v
}

/// Distance from p to the periodic polyline b (sorted by Re): min over
/// the interpolated point at Re p and the two bracketing vertices.
fn graph_min_dist(p: Complex64, b: &[Complex64]) -> Result<f64, HypError> {
    let m = b.len();
    let x = p.re - p.re.floor();
    let idx = b.partition_point(|q| q.re <= x);
    let (a, c) = if idx == 0 {
        (b[m - 1] - 1.0, b[0])
    } else if idx == m {
        (b[m - 1], b[0] + 1.0)
    } else {
        (b[idx - 1], b[idx])
    };
    let t = if c.re > a.re { ((x - a.re) / (c.re - a.re)).clamp(0.0, 1.0) } else { 0.0 };
    let interp = a + (c - a) * t;
    let p0 = Complex64::new(x, p.im);
    let mut best = dist_halfplane(p0, interp)?;
    best = best.min(dist_halfplane(p0, a)?);
    best = best.min(dist_halfplane(p0, c)?);
    Ok(best)
}

fn directed_graph(a: &[Complex64], b_sorted: &[Complex64]) -> Result<f64, HypError> {
    let mut sup = 0.0f64;
    for &p in a {
        sup = sup.max(graph_min_dist(p, b_sorted)?);
    }
    Ok(sup)
}

fn periodic_max_gap(sorted: &[Complex64]) -> Result<f64, HypError> {
    let m = sorted.len();
    let mut g = 0.0f64;
    for i in 0..m {
        let a = sorted[i];
        let b = if i + 1 < m { sorted[i + 1] } else { sorted[0] + 1.0 };
        g = g.max(dist_halfplane(a, b)?);
    }
    Ok(g)
}

/// Certified upper bound of the Hausdorff distance between two periodic
/// graph samples: sampled sup-inf against polylines plus gap corrections.
pub fn graph_hausdorff(a: &[Complex64], b: &[Complex64]) -> Result<(f64, f64), HypError> {
    let sa = sorted_graph(a);
    let sb = sorted_graph(b);
    let dab = directed_graph(&sa, &sb)?;
    let dba = directed_graph(&sb, &sa)?;
    let raw = dab.max(dba);
    let upper = (dab + 0.5 * periodic_max_gap(&sa)?).max(dba + 0.5 * periodic_max_gap(&sb)?);
    Ok((raw, upper))
}

/// D_P(g^j(gamma_n), gamma_n) for 0 <= j <= j_max (default q_n), asserted
/// against the threshold 6 (= 2 C_0) with a 5% sampling-slack warning band.
pub fn verify_quasi_invariance(
    g: &CircleLift,
    curve: &QICurve,
    j_max: Option<usize>,
    alpha: &RotationNumber,
) -> Result<CurveReport, CurveError> {
    let qn = alpha.q_u64(curve.level)? as usize;
    let j_max = j_max.unwrap_or(qn);
    let band = g.band_halfwidth();
    let base = curve.points();
    let base_sorted = sorted_graph(&base);
    let mut images = base.clone();
    let mut per_j = Vec::with_capacity(j_max + 1);
    let mut max = 0.0f64;
    for j in 0..=j_max {
        if j > 0 {
            for z in images.iter_mut() {
                let w = g.eval_c(*z);
                if w.im.abs() >= band || w.im <= 0.0 {
                    return Err(CurveError::BandEscape { j, im: w.im });
                }
                *z = Complex64::new(w.re - w.re.floor(), w.im);
            }
        }
        let si = sorted_graph(&images);
        let dab = directed_graph(&si, &base_sorted)?;
        let dba = directed_graph(&base_sorted, &si)?;
        let upper = (dab + 0.5 * periodic_max_gap(&si)?).max(dba + 0.5 * periodic_max_gap(&base_sorted)?);
        per_j.push(upper);
        max = max.max(upper);
    }
    let threshold = 6.0;
    Ok(CurveReport {
        level: curve.level,
        per_j,
        max,
        threshold,
        passed: max <= threshold * 1.05,
        warn: max > threshold && max <= threshold * 1.05,
    })
}

/// sup over the curve of d_P(g^{q_{n-1}}(z), z): the return displacement
/// of gamma_n under its own near-rotation time.
pub fn verify_return_displacement(
    g: &CircleLift,
    curve: &QICurve,
    alpha: &RotationNumber,
) -> Result<f64, CurveError> {
    let q = alpha.q_u64(curve.m_level)?;
    let band = g.band_halfwidth();
    let mut sup = 0.0f64;
    for &(x, h) in &curve.zs {
        let mut w = Complex64::new(x, h);
        let z0 = w;
        let mut shift = 0.0f64;
        for j in 0..q {
            w = g.eval_c(w);
            if w.im.abs() >= band || w.im <= 0.0 {
                return Err(CurveError::BandEscape { j: j as usize, im: w.im });
            }
            let f = w.re.floor();
            w -= f;
            shift += f;
        }
        let _ = shift;
        // Compare in the same fundamental domain: minimal deck shift.
        let mut dre = w.re - z0.re;
        dre -= dre.round();
        let d = dist_halfplane(Complex64::new(z0.re + dre, w.im), z0)?;
        sup = sup.max(d);
    }
    Ok(sup)
}

/// Check that the orbit g^j(z_0), 0 <= j < q_n, is `radius`-dense in the
/// curve (Poincaré half-plane distances, deck shifts included).
pub fn osculating_cover_check(
    g: &CircleLift,
    curve: &QICurve,
    alpha: &RotationNumber,
    x0: f64,
    radius: f64,
) -> Result<CoverReport, CurveError> {
    let qn = alpha.q_u64(curve.level)?;
    let q_prev = alpha.q_u64(curve.m_level)?;
    let p_prev = alpha.p_i64(curve.m_level)?;
    let band = g.band_halfwidth();
    let h0 = m_n_at(g, q_prev, p_prev, x0).abs() * curve.y0;
    let mut w = Complex64::new(x0 - x0.floor(), h0);
    let mut orbit_pts = Vec::with_capacity(qn as usize);
    let h_sep = 2.0 * curve.max_im;
    let mut below = true;
    for j in 0..qn {
        orbit_pts.push(w);
        if w.im >= h_sep {
            below = false;
        }
        w = g.eval_c(w);
        if w.im.abs() >= band || w.im <= 0.0 {
            return Err(CurveError::BandEscape { j: j as usize, im: w.im });
        }
        w -= w.re.floor();
    }
    let mut covered = 0usize;
    let mut max_gap = 0.0f64;
    let mut worst_x = 0.0f64;
    for &(x, h) in &curve.zs {
        let z = Complex64::new(x, h);
        let mut best = f64::INFINITY;
        for &o in &orbit_pts {
            for k in -1..=1 {
                let d = dist_halfplane(z, o + Complex64::new(k as f64, 0.0))?;
                if d < best {
                    best = d;
                }
            }
        }
        if best <= radius {
            covered += 1;
        }
        if best > max_gap {
            max_gap = best;
            worst_x = x;
        }
    }
    Ok(CoverReport {
        level: curve.level,
        radius,
        coverage: covered as f64 / curve.zs.len() as f64,
        max_gap,
        h_separation: h_sep,
        orbit_below_h: below,
        worst_x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::tune_omega;

    fn golden_arnold() -> (CircleLift, RotationNumber) {
        let alpha = RotationNumber::golden();
        let (g, _) = tune_omega(
            |w| CircleLift::arnold(w, 0.001, 0.25),
            &alpha,
            1e-9,
            10_000_000,
        )
        .unwrap();
        (g, alpha)
    }

    #[test]
    fn build_guards() {
        let alpha = RotationNumber::golden();
        let g = CircleLift::translation(alpha.value());
        assert!(build_curve(&g, &alpha, 5, 0.75, 2).is_err());
        assert!(build_curve(&g, &alpha, 5, 0.4, 256).is_err());
        assert!(build_curve(&g, &alpha, 0, 0.75, 256).is_err());
    }

    #[test]
    fn translation_curve_is_horizontal() {
        let alpha = RotationNumber::golden();
        let g = CircleLift::translation(alpha.value());
        let c = build_curve(&g, &alpha, 5, 0.75, 128).unwrap();
        let h = alpha.signed_error(4).unwrap().abs() * 0.75;
        for &(_, im) in &c.zs {
            assert!((im - h).abs() < 1e-12);
        }
        assert!((c.max_im - h).abs() < 1e-12);
    }

    #[test]
    fn arnold_height_ratio() {
        let (g, alpha) = golden_arnold();
        let c = build_curve(&g, &alpha, 5, 0.75, 256).unwrap();
        let rd = renorm_data(&g, &alpha, 4, 256).unwrap();
        let eps = 1.5 * rd.dgn_dev_sup;
        // The 1 +/- eps displacement-ratio bound compares points of one
        // interval I_n(x); circle-wide extrema can need a two-interval
        // chain, hence the squared bound.
        let bound = ((1.0 + eps) / (1.0 - eps)).powi(2);
        assert!(c.max_im / c.min_im <= bound, "{} vs {}", c.max_im / c.min_im, bound);
    }

    #[test]
    fn piece_diameter_translation_and_arnold() {
        let alpha = RotationNumber::golden();
        let g = CircleLift::translation(alpha.value());
        let l = piece_diameter(&g, &alpha, 5, 0.1, 0.75).unwrap();
        assert!((l - 4.0 / 3.0).abs() < 1e-5, "{l}");
        let l = piece_diameter(&g, &alpha, 5, 0.1, 1.0).unwrap();
        assert!((l - 1.0).abs() < 1e-5);
        let (g, alpha) = golden_arnold();
        let rd = renorm_data(&g, &alpha, 5, 256).unwrap();
        let eps0 = 1.5 * rd.dgn_dev_sup;
        let l = piece_diameter(&g, &alpha, 5, 0.1, 0.75).unwrap();
        assert!(l <= 2.0 * (1.0 + eps0) / (1.0 - eps0));
    }

    #[test]
    fn quasi_invariance_translation_exact() {
        let alpha = RotationNumber::golden();
        let g = CircleLift::translation(alpha.value());
        let c = build_curve(&g, &alpha, 5, 0.75, 256).unwrap();
        let rep = verify_quasi_invariance(&g, &c, None, &alpha).unwrap();
        // Exact invariance: only the sampling-gap correction remains.
        let gap = periodic_max_gap(&sorted_graph(&c.points())).unwrap();
        for &d in &rep.per_j {
            assert!(d <= 0.5 * gap + 1e-9, "{d} vs gap {gap}");
        }
        assert!(rep.passed);
    }

    #[test]
    fn quasi_invariance_arnold() {
        let (g, alpha) = golden_arnold();
        let c = build_curve(&g, &alpha, 5, 0.75, 256).unwrap();
        let rep = verify_quasi_invariance(&g, &c, None, &alpha).unwrap();
        assert!(rep.max <= 6.0, "{}", rep.max);
        assert!(rep.passed && !rep.warn);
        assert_eq!(rep.per_j.len(), alpha.q_u64(5).unwrap() as usize + 1);
        // j = 0 contributes only the gap correction.
        assert!(rep.per_j[0] < 0.5);
    }

    #[test]
    fn return_displacement_rigid_closed_form() {
        let alpha = RotationNumber::golden();
        let g = CircleLift::translation(alpha.value());
        for &(y0, expect) in &[
            (0.75, (1.0 + 1.0 / (2.0 * 0.75f64 * 0.75)).acosh()),
            (1.0, 1.5f64.acosh()),
        ] {
            let c = build_curve(&g, &alpha, 5, y0, 128).unwrap();
            let d = verify_return_displacement(&g, &c, &alpha).unwrap();
            assert!((d - expect).abs() < 1e-9, "{d} vs {expect}");
        }
    }

    #[test]
    fn return_displacement_arnold_below_c0() {
        let (g, alpha) = golden_arnold();
        let c = build_curve(&g, &alpha, 5, 0.75, 256).unwrap();
        let d = verify_return_displacement(&g, &c, &alpha).unwrap();
        assert!(d <= 3.0, "{d}");
    }

    #[test]
    fn cover_translation_and_arnold() {
        let alpha = RotationNumber::golden();
        let g = CircleLift::translation(alpha.value());
        let c = build_curve(&g, &alpha, 5, 0.75, 256).unwrap();
        let rep = osculating_cover_check(&g, &c, &alpha, 0.0, 3.0).unwrap();
        assert_eq!(rep.coverage, 1.0, "max gap {}", rep.max_gap);
        assert!(rep.orbit_below_h);
        let (g, alpha) = golden_arnold();
        let c = build_curve(&g, &alpha, 5, 0.75, 256).unwrap();
        let rep = osculating_cover_check(&g, &c, &alpha, 0.0, 3.15).unwrap();
        assert_eq!(rep.coverage, 1.0, "max gap {}", rep.max_gap);
    }

    #[test]
    fn heights_shrink_with_level() {
        let (g, alpha) = golden_arnold();
        let c5 = build_curve(&g, &alpha, 5, 0.75, 128).unwrap();
        let c6 = build_curve(&g, &alpha, 6, 0.75, 128).unwrap();
        let c7 = build_curve(&g, &alpha, 7, 0.75, 128).unwrap();
        assert!(c6.max_im < c5.max_im);
        assert!(c7.max_im < c6.max_im);
    }

    #[test]
    fn hausdorff_doubling_consistency() {
        let (g, alpha) = golden_arnold();
        let c1 = build_curve(&g, &alpha, 5, 0.75, 128).unwrap();
        let c2 = build_curve(&g, &alpha, 5, 0.75, 256).unwrap();
        let r1 = verify_quasi_invariance(&g, &c1, Some(3), &alpha).unwrap();
        let r2 = verify_quasi_invariance(&g, &c2, Some(3), &alpha).unwrap();
        // Doubling the resolution never raises the bound by more than
        // the coarser correction term.
        let gap1 = periodic_max_gap(&sorted_graph(&c1.points())).unwrap();
        assert!(r2.max <= r1.max + gap1);
    }
}
