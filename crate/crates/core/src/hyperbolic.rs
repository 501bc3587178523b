//! Poincaré metric on the upper half-plane and on the exterior of the
//! closed unit disk, polyline lengths, and sampled Hausdorff distance.

use num_complex::Complex64;

#[derive(Debug, Clone, thiserror::Error)]
pub enum HypError {
    #[error("point {0} outside the chart domain")]
    Domain(Complex64),
    #[error("deck-shift search did not stabilize within |k| <= {0}")]
    DeckSearch(i64),
    #[error("length refinement budget exceeded; last two values {0}, {1}")]
    Refinement(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// Upper half-plane, density |dz| / Im z.
    HalfPlane,
    /// Exterior of the closed unit disk, density |dz| / (|z| log |z|).
    Exterior,
}

pub fn in_chart(chart: Chart, z: Complex64) -> bool {
    match chart {
        Chart::HalfPlane => z.im > 0.0,
        Chart::Exterior => z.norm() > 1.0,
    }
}

/// d_H(z1, z2) = arccosh(1 + |z1 - z2|^2 / (2 Im z1 Im z2)).
pub fn dist_halfplane(z1: Complex64, z2: Complex64) -> Result<f64, HypError> {
    if z1.im <= 0.0 {
        return Err(HypError::Domain(z1));
    }
    if z2.im <= 0.0 {
        return Err(HypError::Domain(z2));
    }
    let d2 = (z1 - z2).norm_sqr();
    Ok((1.0 + d2 / (2.0 * z1.im * z2.im)).acosh())
}

/// Lift of the exterior chart to the half-plane covering:
/// zeta = e^{-2 pi i u} with u in H.
pub fn exterior_to_halfplane(zeta: Complex64) -> Result<Complex64, HypError> {
    let r = zeta.norm();
    if r <= 1.0 {
        return Err(HypError::Domain(zeta));
    }
    let w = zeta.inv(); // |w| < 1
    Ok(Complex64::new(w.arg() / std::f64::consts::TAU, -w.norm().ln() / std::f64::consts::TAU))
}

/// Transport from the covering half-plane down to the exterior chart.
pub fn halfplane_to_exterior(u: Complex64) -> Result<Complex64, HypError> {
    if u.im <= 0.0 {
        return Err(HypError::Domain(u));
    }
    Ok((Complex64::new(0.0, -std::f64::consts::TAU) * u).exp())
}

/// Distance in C minus the closed unit disk via the exponential covering:
/// minimum of half-plane distances over deck shifts u2 + k.
pub fn dist_exterior(z1: Complex64, z2: Complex64) -> Result<f64, HypError> {
    let u1 = exterior_to_halfplane(z1)?;
    let u2 = exterior_to_halfplane(z2)?;
    let k0 = (u1.re - u2.re).round() as i64;
    let mut best = f64::INFINITY;
    let mut best_k = k0;
    let mut span: i64 = 2;
    const K_MAX: i64 = 64;
    loop {
        for k in (k0 - span)..=(k0 + span) {
            let d = dist_halfplane(u1, u2 + Complex64::new(k as f64, 0.0))?;
            if d < best {
                best = d;
                best_k = k;
            }
        }
        // Stable once the minimizer is strictly interior to the window.
        if (best_k - k0).abs() < span {
            return Ok(best);
        }
        span *= 2;
        if span > K_MAX {
            return Err(HypError::DeckSearch(K_MAX));
        }
    }
}

pub fn dist(chart: Chart, z1: Complex64, z2: Complex64) -> Result<f64, HypError> {
    match chart {
        Chart::HalfPlane => dist_halfplane(z1, z2),
        Chart::Exterior => dist_exterior(z1, z2),
    }
}

fn density(chart: Chart, z: Complex64) -> Result<f64, HypError> {
    match chart {
        Chart::HalfPlane => {
            if z.im <= 0.0 {
                return Err(HypError::Domain(z));
            }
            Ok(1.0 / z.im)
        }
        Chart::Exterior => {
            let r = z.norm();
            if r <= 1.0 {
                return Err(HypError::Domain(z));
            }
            Ok(1.0 / (r * r.ln()))
        }
    }
}

/// Poincaré length of a straight chart segment by midpoint quadrature
/// with doubling until the relative change is below 1e-6.
fn segment_length(chart: Chart, a: Complex64, b: Complex64) -> Result<f64, HypError> {
    let euc = (b - a).norm();
    if euc == 0.0 {
        return Ok(0.0);
    }
    let mut n = 4usize;
    let mut prev = f64::NAN;
    while n <= 1 << 22 {
        let mut s = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            s += density(chart, a + (b - a) * t)?;
        }
        s *= euc / n as f64;
        if prev.is_finite() && (s - prev).abs() <= 1e-6 * s.abs() {
            return Ok(s);
        }
        prev = s;
        n *= 2;
    }
    Err(HypError::Refinement(prev, prev))
}

/// Poincaré length of a polyline (sum of segment lengths).
pub fn curve_length_p(chart: Chart, polyline: &[Complex64]) -> Result<f64, HypError> {
    if polyline.len() < 2 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for w in polyline.windows(2) {
        total += segment_length(chart, w[0], w[1])?;
    }
    Ok(total)
}

/// Sampled Hausdorff distance with its sampling-gap correction.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct HausdorffReport {
    /// max of the two directed sup-inf distances over the sample points.
    pub raw: f64,
    /// max Poincaré gap between consecutive samples of either curve.
    pub gap_a: f64,
    pub gap_b: f64,
    /// raw plus half the relevant sample gap: a certified upper bound
    /// for the Hausdorff distance between the underlying curves.
    pub upper: f64,
}

fn directed(chart: Chart, a: &[Complex64], b: &[Complex64]) -> Result<f64, HypError> {
    let mut sup = 0.0f64;
    for &p in a {
        let mut inf = f64::INFINITY;
        for &q in b {
            let d = dist(chart, p, q)?;
            if d < inf {
                inf = d;
            }
        }
        sup = sup.max(inf);
    }
    Ok(sup)
}

fn max_gap(chart: Chart, a: &[Complex64]) -> Result<f64, HypError> {
    let mut g = 0.0f64;
    for w in a.windows(2) {
        g = g.max(dist(chart, w[0], w[1])?);
    }
    Ok(g)
}

pub fn hausdorff_detail(
    chart: Chart,
    a: &[Complex64],
    b: &[Complex64],
) -> Result<HausdorffReport, HypError> {
    let dab = directed(chart, a, b)?;
    let dba = directed(chart, b, a)?;
    let gap_a = max_gap(chart, a)?;
    let gap_b = max_gap(chart, b)?;
    // Points of A between samples are within gap_a/2 of a sample, and
    // symmetrically for B, so this is an upper bound for the continuous
    // Hausdorff distance.
    let upper = (dab + 0.5 * gap_a).max(dba + 0.5 * gap_b);
    Ok(HausdorffReport { raw: dab.max(dba), gap_a, gap_b, upper })
}

/// Certified upper bound for the Hausdorff distance between two sampled
/// curves (raw sampled value plus gap correction).
pub fn hausdorff_dist_p(chart: Chart, a: &[Complex64], b: &[Complex64]) -> Result<f64, HypError> {
    Ok(hausdorff_detail(chart, a, b)?.upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn halfplane_closed_forms() {
        assert!((dist_halfplane(c(0.0, 1.0), c(0.0, 2.0)).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!(
            (dist_halfplane(c(0.0, 1.0), c(1.0, 1.0)).unwrap() - 1.5f64.acosh()).abs() < 1e-12
        );
        assert_eq!(dist_halfplane(c(0.3, 0.7), c(0.3, 0.7)).unwrap(), 0.0);
        assert!(dist_halfplane(c(0.0, 0.0), c(0.0, 1.0)).is_err());
    }

    #[test]
    fn halfplane_geodesic_integration_oracle() {
        // Geodesic from i to 1+i: circle centered at 1/2 radius sqrt(5)/2;
        // integral of d theta / sin theta between the two angles.
        let ctr = 0.5;
        let r = (1.25f64).sqrt();
        let th1 = (c(0.0, 1.0) - c(ctr, 0.0)).arg();
        let th2 = (c(1.0, 1.0) - c(ctr, 0.0)).arg();
        let (lo, hi) = if th1 < th2 { (th1, th2) } else { (th2, th1) };
        let n = 2_000_000;
        let mut s = 0.0;
        for i in 0..n {
            let t = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
            s += 1.0 / t.sin();
        }
        s *= (hi - lo) / n as f64;
        let _ = r;
        assert!((s - dist_halfplane(c(0.0, 1.0), c(1.0, 1.0)).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn exterior_radial_and_arc() {
        let d = dist_exterior(c(2.0, 0.0), c(3.0, 0.0)).unwrap();
        assert!((d - (3f64.ln() / 2f64.ln()).ln()).abs() < 1e-12, "{d}");
        assert_eq!(dist_exterior(c(2.0, 1.0), c(2.0, 1.0)).unwrap(), 0.0);
        let th = 0.01f64;
        let d = dist_exterior(c(2.0, 0.0), 2.0 * c(th.cos(), th.sin())).unwrap();
        assert!(d <= 2.0 * th / (2.0 * 2f64.ln()) + 1e-12, "{d}");
        assert!(d > 0.0);
        assert!(dist_exterior(c(0.5, 0.0), c(2.0, 0.0)).is_err());
    }

    #[test]
    fn chart_transport_roundtrip() {
        let z = c(1.7, 0.4);
        let u = exterior_to_halfplane(z).unwrap();
        let back = halfplane_to_exterior(u).unwrap();
        assert!((back - z).norm() < 1e-12);
        // Covering is a local isometry: nearby points keep their distance.
        let z2 = c(1.71, 0.41);
        let u2 = exterior_to_halfplane(z2).unwrap();
        assert!(
            (dist_exterior(z, z2).unwrap() - dist_halfplane(u, u2).unwrap()).abs() < 1e-12
        );
    }

    #[test]
    fn metric_axioms_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p: Vec<Complex64> = (0..3)
                .map(|_| c(rng.gen_range(-3.0..3.0), rng.gen_range(0.05..3.0)))
                .collect();
            let d01 = dist_halfplane(p[0], p[1]).unwrap();
            let d10 = dist_halfplane(p[1], p[0]).unwrap();
            let d12 = dist_halfplane(p[1], p[2]).unwrap();
            let d02 = dist_halfplane(p[0], p[2]).unwrap();
            assert!((d01 - d10).abs() < 1e-9);
            assert!(d02 <= d01 + d12 + 1e-9);
        }
        for _ in 0..1000 {
            let p: Vec<Complex64> = (0..3)
                .map(|_| {
                    let r = rng.gen_range(1.05..4.0);
                    let t = rng.gen_range(0.0..std::f64::consts::TAU);
                    r * c(t.cos(), t.sin())
                })
                .collect();
            let d01 = dist_exterior(p[0], p[1]).unwrap();
            let d10 = dist_exterior(p[1], p[0]).unwrap();
            let d12 = dist_exterior(p[1], p[2]).unwrap();
            let d02 = dist_exterior(p[0], p[2]).unwrap();
            assert!((d01 - d10).abs() < 1e-9);
            assert!(d02 <= d01 + d12 + 1e-9);
        }
    }

    #[test]
    fn isometries() {
        let z1 = c(0.2, 0.9);
        let z2 = c(-1.1, 2.3);
        let d = dist_halfplane(z1, z2).unwrap();
        for &t in &[0.37, -2.0, 11.5] {
            assert!((dist_halfplane(z1 + t, z2 + t).unwrap() - d).abs() < 1e-10);
        }
        for &l in &[0.2, 3.0, 17.0] {
            assert!((dist_halfplane(l * z1, l * z2).unwrap() - d).abs() < 1e-10);
        }
        let w1 = c(1.5, 0.3);
        let w2 = c(-2.0, 1.0);
        let de = dist_exterior(w1, w2).unwrap();
        for &t in &[0.1f64, 2.7, -1.0] {
            let rot = c(t.cos(), t.sin());
            assert!((dist_exterior(rot * w1, rot * w2).unwrap() - de).abs() < 1e-10);
        }
    }

    #[test]
    fn deck_minimum_stabilizes() {
        // Far-apart angles: a wider manual deck sweep never beats the result.
        let z1 = c(1.2, 0.0);
        let z2 = c(-1.2, 0.01);
        let d = dist_exterior(z1, z2).unwrap();
        let u1 = exterior_to_halfplane(z1).unwrap();
        let u2 = exterior_to_halfplane(z2).unwrap();
        let manual = (-40..=40)
            .map(|k| dist_halfplane(u1, u2 + c(k as f64, 0.0)).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!((d - manual).abs() < 1e-12);
    }

    #[test]
    fn lengths() {
        let v = curve_length_p(Chart::HalfPlane, &[c(0.0, 1.0), c(0.0, 2.0)]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-6);
        let h = 5.0;
        let w = 1e-3;
        let v = curve_length_p(Chart::HalfPlane, &[c(0.0, h), c(w, h)]).unwrap();
        assert!((v - w / h).abs() < 1e-9);
        assert_eq!(curve_length_p(Chart::HalfPlane, &[]).unwrap(), 0.0);
        assert_eq!(curve_length_p(Chart::HalfPlane, &[c(0.0, 1.0)]).unwrap(), 0.0);
        // Exterior radial segment 2 -> 3 has length log(log3/log2).
        let pts: Vec<Complex64> = (0..=100).map(|i| c(2.0 + i as f64 / 100.0, 0.0)).collect();
        let v = curve_length_p(Chart::Exterior, &pts).unwrap();
        assert!((v - (3f64.ln() / 2f64.ln()).ln()).abs() < 1e-5, "{v}");
    }

    #[test]
    fn hausdorff_basics() {
        let a: Vec<Complex64> = (0..=50).map(|i| c(i as f64 / 50.0, 1.0)).collect();
        let b: Vec<Complex64> = (0..=50).map(|i| c(i as f64 / 50.0, 2.0)).collect();
        let rep = hausdorff_detail(Chart::HalfPlane, &a, &a).unwrap();
        assert_eq!(rep.raw, 0.0);
        assert!(rep.upper <= rep.gap_a);
        let rep = hausdorff_detail(Chart::HalfPlane, &a, &b).unwrap();
        // Vertical geodesics realize the inf between the two lines.
        assert!((rep.raw - 2f64.ln()).abs() < 1e-4, "{}", rep.raw);
        assert!(rep.upper >= 2f64.ln());
        // One point of B: directed distance zero one way.
        let single = [b[10]];
        let d_single_to_b = directed(Chart::HalfPlane, &single, &b).unwrap();
        assert_eq!(d_single_to_b, 0.0);
        // Doubling the resolution never raises the report beyond the correction.
        let a2: Vec<Complex64> = (0..=100).map(|i| c(i as f64 / 100.0, 1.0)).collect();
        let b2: Vec<Complex64> = (0..=100).map(|i| c(i as f64 / 100.0, 2.0)).collect();
        let rep2 = hausdorff_detail(Chart::HalfPlane, &a2, &b2).unwrap();
        assert!(rep2.upper <= rep.upper + 1e-12);
    }
}
