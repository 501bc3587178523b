//! Complex extension of circle lifts on the band |Im z| < delta:
//! the non-linearity sup tau, and orbit tracking in the normalized
//! coordinates z_j = x_j + i m_n(x_j) y_j.

use num_complex::Complex64;
use serde::Serialize;

use crate::circle::{m_from_orbit, orbit, renorm_data, CircleError, CircleLift};
use crate::rotation::{RotationError, RotationNumber};

pub const TAU_GATE: f64 = 1.0 / 9.0;

#[derive(Debug, Clone, thiserror::Error)]
pub enum BandError {
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Rotation(#[from] RotationError),
    #[error("Re Dg <= 0 at z = {0}; log Dg has no single branch on the band")]
    Branch(Complex64),
    #[error("band half-width {requested} exceeds the lift's certified band {available}")]
    BandTooWide { requested: f64, available: f64 },
    #[error("premise gate unmet: {0}")]
    Gate(String),
    #[error("orbit left the band at iterate {index} (Im z = {im})")]
    BandEscape { index: usize, im: f64 },
    #[error("interval-length sum {sum} >= 1")]
    SumTooLarge { sum: f64 },
}

/// sup of |D log Dg| over the band of half-width delta, computed on the
/// two boundary lines (maximum principle) with doubling until adjacent
/// samples differ by < 10% of the running max; the returned value is
/// inflated by the final adjacent-difference bound.
pub fn band_nonlinearity(
    g: &CircleLift,
    delta: f64,
    boundary_samples: usize,
) -> Result<f64, BandError> {
    let avail = g.band_halfwidth();
    if delta > avail {
        return Err(BandError::BandTooWide { requested: delta, available: avail });
    }
    let mut n = boundary_samples.max(16);
    loop {
        let mut max = 0.0f64;
        let mut max_diff = 0.0f64;
        for &sgn in &[1.0f64, -1.0] {
            let mut prev = f64::NAN;
            for i in 0..=n {
                let z = Complex64::new(i as f64 / n as f64, sgn * delta);
                let d = g.deriv_c(z);
                if d.re <= 0.0 {
                    return Err(BandError::Branch(z));
                }
                let v = g.dlog_deriv_c(z).norm();
                max = max.max(v);
                if prev.is_finite() {
                    max_diff = max_diff.max((v - prev).abs());
                }
                prev = v;
            }
        }
        if max < 1e-15 || max_diff < 0.1 * max || n >= 1 << 20 {
            return Ok(max + max_diff);
        }
        n *= 2;
    }
}

/// Orbit in the Denjoy-Yoccoz normalization: z_j = x_j + i m_n(x_j) y_j.
#[derive(Debug, Clone, Serialize)]
pub struct BandOrbit {
    pub level: usize,
    pub x0: f64,
    pub y0: f64,
    pub delta: f64,
    pub tau: f64,
    /// M_n = sup |m_n| used for the gate M_n < delta/2.
    pub m_sup: f64,
    pub qn1: u64,
    /// Circle positions x_j mod 1.
    pub xs: Vec<f64>,
    /// z_j with real part reduced alongside x_j.
    pub zs: Vec<(f64, f64)>,
    pub ys: Vec<(f64, f64)>,
    /// m_n(x_j) along the orbit.
    pub m: Vec<f64>,
    pub max_dev: f64,
    /// max_j |y_j - y_0| <= (3/4) y_0 ?
    pub dev_ok: bool,
    pub re_y_positive: bool,
    /// Running sum of |m_n(x_l)| over the first min(J, q_{n+1}) iterates.
    pub m_sum: f64,
}

/// Track z_j = g^j(x_0 + i m_n(x_0) y_0) for J iterates (default q_{n+1}),
/// recording the normalized heights y_j.
pub fn track_dy_orbit(
    g: &CircleLift,
    alpha: &RotationNumber,
    n: usize,
    delta: f64,
    x0: f64,
    y0: f64,
    j_count: Option<usize>,
) -> Result<BandOrbit, BandError> {
    if !(y0 > 0.0 && y0 <= 1.0) {
        return Err(BandError::Gate(format!("y_0 = {y0} outside (0, 1]")));
    }
    let tau = band_nonlinearity(g, delta, 256)?;
    if tau >= TAU_GATE {
        return Err(BandError::Gate(format!("tau = {tau} >= 1/9")));
    }
    let qn = alpha.q_u64(n)? as usize;
    let qn1 = alpha.q_u64(n + 1)?;
    let pn = alpha.p_i64(n)?;
    let rd = renorm_data(g, alpha, n, (2 * qn.max(1)).max(256))?;
    if rd.m_sup >= delta / 2.0 {
        return Err(BandError::Gate(format!(
            "M_n = {} >= delta/2 = {}",
            rd.m_sup,
            delta / 2.0
        )));
    }
    let j_count = j_count.unwrap_or(qn1 as usize);
    let real_orbit = orbit(g, x0, j_count + qn);
    let m0 = m_from_orbit(&real_orbit, 0, qn, pn);
    let mut w = Complex64::new(real_orbit[0].frac, 0.0) + Complex64::new(0.0, m0 * y0);

    let mut xs = Vec::with_capacity(j_count + 1);
    let mut zs = Vec::with_capacity(j_count + 1);
    let mut ys = Vec::with_capacity(j_count + 1);
    let mut m = Vec::with_capacity(j_count + 1);
    let mut max_dev = 0.0f64;
    let mut re_y_positive = true;
    let mut m_sum = 0.0f64;

    for j in 0..=j_count {
        if w.im.abs() >= delta {
            return Err(BandError::BandEscape { index: j, im: w.im });
        }
        let xj = real_orbit[j].frac;
        let mj = m_from_orbit(&real_orbit, j, qn, pn);
        // z_j - x_j with the winding difference removed.
        let mut dre = w.re - xj;
        dre -= dre.round();
        let diff = Complex64::new(dre, w.im);
        let yj = diff / Complex64::new(0.0, mj);
        if yj.re <= 0.0 {
            re_y_positive = false;
        }
        max_dev = max_dev.max((yj - y0).norm());
        if j < j_count.min(qn1 as usize) {
            m_sum += mj.abs();
        }
        xs.push(xj);
        zs.push((w.re, w.im));
        ys.push((yj.re, yj.im));
        m.push(mj);
        if j < j_count {
            w = g.eval_c(w);
            w.re -= w.re.floor();
        }
    }
    Ok(BandOrbit {
        level: n,
        x0,
        y0,
        delta,
        tau,
        m_sup: rd.m_sup,
        qn1,
        xs,
        zs,
        ys,
        m,
        max_dev,
        dev_ok: max_dev <= 0.75 * y0,
        re_y_positive,
        m_sum,
    })
}

/// Sum of the interval lengths |m_n(x_l)| along the tracked orbit; the
/// disjointness of the I_n-intervals forces this below 1.
pub fn sum_interval_lengths(orbit: &BandOrbit) -> Result<f64, BandError> {
    if orbit.m_sum >= 1.0 {
        return Err(BandError::SumTooLarge { sum: orbit.m_sum });
    }
    Ok(orbit.m_sum)
}
