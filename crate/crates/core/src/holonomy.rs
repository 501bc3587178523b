//! Holonomy of the singular foliation alpha y (1+P) dx + x (1+Q) dy = 0:
//! leaf lifting over the circle |x| = x_0, multiplier extraction, and a
//! polynomial fit of the return map as a germ.

use num_complex::Complex64;
use serde::Serialize;

use crate::germ::{Germ, GermError};

#[derive(Debug, Clone, thiserror::Error)]
pub enum HolonomyError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("perturbation too large: sup|{which}| bound = {bound} >= 1/2 on the tube")]
    PerturbationTooLarge { which: char, bound: f64 },
    #[error("leaf escaped the domain at theta = {theta} (|y| = {y_abs})")]
    LeafEscape { theta: f64, y_abs: f64 },
    #[error("step size underflow at theta = {theta}")]
    Stiff { theta: f64 },
    #[error("multiplier modulus {modulus} outside 1 +/- {tol}")]
    ModulusDrift { modulus: f64, tol: f64 },
    #[error("fit residual {residual} above threshold {threshold}")]
    FitResidual { residual: f64, threshold: f64 },
    #[error(transparent)]
    Germ(#[from] GermError),
}

/// Monomial e x^j y^k.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Monomial {
    pub j: u32,
    pub k: u32,
    pub e: Complex64,
}

/// The normal-form foliation alpha y (1+P) dx + x (1+Q) dy = 0.
#[derive(Debug, Clone, Serialize)]
pub struct FoliationGerm {
    pub alpha: f64,
    pub p_terms: Vec<Monomial>,
    pub q_terms: Vec<Monomial>,
    /// Radius of the transversal circle in x.
    pub x0_abs: f64,
    /// Leaf domain radius in y.
    pub y_radius: f64,
}

fn tube_bound(terms: &[Monomial], x0: f64, yr: f64) -> f64 {
    terms
        .iter()
        .map(|m| m.e.norm() * x0.powi(m.j as i32) * yr.powi(m.k as i32))
        .sum()
}

fn eval_terms(terms: &[Monomial], x: Complex64, y: Complex64) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for m in terms {
        s += m.e * x.powu(m.j) * y.powu(m.k);
    }
    s
}

impl FoliationGerm {
    pub fn new(
        alpha: f64,
        p_terms: Vec<Monomial>,
        q_terms: Vec<Monomial>,
        x0_abs: f64,
        y_radius: f64,
    ) -> Result<Self, HolonomyError> {
        if alpha <= 0.0 {
            return Err(HolonomyError::Precondition("alpha must be positive".into()));
        }
        if x0_abs <= 0.0 || y_radius <= 0.0 {
            return Err(HolonomyError::Precondition("radii must be positive".into()));
        }
        for (name, terms) in [('P', &p_terms), ('Q', &q_terms)] {
            if terms.iter().any(|m| m.j + m.k == 0) {
                return Err(HolonomyError::Precondition(format!(
                    "{name}(0,0) must vanish: constant monomial not allowed"
                )));
            }
            let bound = tube_bound(terms, x0_abs, y_radius);
            if bound >= 0.5 {
                return Err(HolonomyError::PerturbationTooLarge { which: name, bound });
            }
        }
        Ok(FoliationGerm { alpha, p_terms, q_terms, x0_abs, y_radius })
    }

    pub fn linear(alpha: f64, x0_abs: f64, y_radius: f64) -> Result<Self, HolonomyError> {
        FoliationGerm::new(alpha, vec![], vec![], x0_abs, y_radius)
    }

    /// Right-hand side of the lifted leaf equation along x = x_0 e^{-2 pi i theta}:
    /// dy/dtheta = 2 pi i alpha y (1 + P)/(1 + Q).
    fn rhs(&self, theta: f64, y: Complex64) -> Complex64 {
        let x = self.x0_abs * (Complex64::new(0.0, -std::f64::consts::TAU * theta)).exp();
        let p = eval_terms(&self.p_terms, x, y);
        let q = eval_terms(&self.q_terms, x, y);
        Complex64::new(0.0, std::f64::consts::TAU * self.alpha) * y * (1.0 + p) / (1.0 + q)
    }
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate the leaf lift from theta_0 to theta_1 with per-step local
/// tolerance tol (embedded Dormand-Prince 5(4)).
pub fn integrate_leaf(
    f: &FoliationGerm,
    y_start: Complex64,
    theta0: f64,
    theta1: f64,
    tol: f64,
) -> Result<Complex64, HolonomyError> {
    if tol <= 0.0 {
        return Err(HolonomyError::Precondition("tol must be positive".into()));
    }
    if y_start.norm() > f.y_radius {
        return Err(HolonomyError::Precondition(format!(
            "|y_start| = {} exceeds the leaf radius {}",
            y_start.norm(),
            f.y_radius
        )));
    }
    let dir = if theta1 >= theta0 { 1.0 } else { -1.0 };
    let mut t = theta0;
    let mut y = y_start;
    let mut h = dir * 1e-2_f64.min((theta1 - theta0).abs().max(1e-12));
    let mut k = [Complex64::new(0.0, 0.0); 7];
    k[0] = f.rhs(t, y);
    while (theta1 - t) * dir > 0.0 {
        if ((t + h) - theta1) * dir > 0.0 {
            h = theta1 - t;
        }
        for i in 0..6 {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=i {
                acc += A[i][j] * k[j];
            }
            k[i + 1] = f.rhs(t + C[i] * h, y + h * acc);
        }
        let mut y5 = y;
        let mut y4 = y;
        for i in 0..7 {
            y5 += h * B5[i] * k[i];
            y4 += h * B4[i] * k[i];
        }
        let err = (y5 - y4).norm();
        // Error per unit step, relative to |y|: keeps the global relative
        // error near tol.
        let scale = (tol * (y.norm() + 1e-30) * h.abs())
            .max(32.0 * f64::EPSILON * (y.norm() + 1e-30));
        if err <= scale {
            t += h;
            y = y5;
            k[0] = k[6]; // FSAL
            if y.norm() > f.y_radius * (1.0 + 1e-9) {
                return Err(HolonomyError::LeafEscape { theta: t, y_abs: y.norm() });
            }
        } else {
            k[0] = f.rhs(t, y);
        }
        let fac = (0.9 * (scale / err.max(1e-300)).powf(0.25)).clamp(0.2, 5.0);
        h *= fac;
        if h.abs() < 1e-13 {
            return Err(HolonomyError::Stiff { theta: t });
        }
    }
    Ok(y)
}

/// Return map of the transversal {x = x_0}: y(0) -> y(1) following the
/// negatively oriented lift of the circle |x| = x_0.
pub fn holonomy_map(
    f: &FoliationGerm,
    y_start: Complex64,
    tol: f64,
) -> Result<Complex64, HolonomyError> {
    integrate_leaf(f, y_start, 0.0, 1.0, tol)
}

/// f'(0) by Richardson extrapolation of holonomy(y)/y at y = h, h/2, h/4.
pub fn holonomy_multiplier(f: &FoliationGerm, tol: f64) -> Result<Complex64, HolonomyError> {
    let h = f.y_radius / 8.0;
    let mut r = [Complex64::new(0.0, 0.0); 3];
    for (i, scale) in [1.0, 0.5, 0.25].iter().enumerate() {
        let y = Complex64::new(h * scale, 0.0);
        r[i] = holonomy_map(f, y, tol)? / y;
    }
    // holonomy(y)/y = lambda + c2 y + c3 y^2 + ...
    let b0 = 2.0 * r[1] - r[0];
    let b1 = 2.0 * r[2] - r[1];
    let est = (4.0 * b1 - b0) / 3.0;
    let modulus = est.norm();
    if (modulus - 1.0).abs() > 10.0 * tol.max(1e-12) {
        return Err(HolonomyError::ModulusDrift { modulus, tol: 10.0 * tol.max(1e-12) });
    }
    Ok(est)
}

#[derive(Debug, Clone, Serialize)]
pub struct HolonomyFit {
    pub multiplier: Complex64,
    pub alpha_recovered: f64,
    /// c_2, c_3, ... of the fitted return map.
    pub coeffs: Vec<Complex64>,
    pub residual: f64,
}

/// Fit the holonomy return map on |y| = sample_radius by a polynomial of
/// the given degree (discrete Cauchy coefficients) and package it as a Germ.
pub fn germ_from_holonomy(
    f: &FoliationGerm,
    sample_radius: f64,
    degree: usize,
    tol: f64,
) -> Result<(Germ, HolonomyFit), HolonomyError> {
    if degree < 1 {
        return Err(HolonomyError::Precondition("degree must be >= 1".into()));
    }
    if sample_radius <= 0.0 || sample_radius > f.y_radius {
        return Err(HolonomyError::Precondition("sample radius outside (0, y_radius]".into()));
    }
    let m = (4 * (degree + 1)).max(16);
    let mut samples = Vec::with_capacity(m);
    for i in 0..m {
        let y = Complex64::from_polar(sample_radius, std::f64::consts::TAU * i as f64 / m as f64);
        samples.push((y, holonomy_map(f, y, tol)?));
    }
    // Discrete Fourier coefficients: c_k = (1/m) sum f(y_i) y_i^{-k}.
    let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
    for (k, ck) in coeffs.iter_mut().enumerate() {
        let mut s = Complex64::new(0.0, 0.0);
        for &(y, v) in &samples {
            s += v * y.powi(-(k as i32 + 1));
        }
        *ck = s / m as f64;
    }
    let mut residual = 0.0f64;
    for &(y, v) in &samples {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in coeffs.iter().rev() {
            acc = acc * y + c;
        }
        residual = residual.max((v - acc * y).norm());
    }
    let threshold = (100.0 * tol).max(1e-8);
    if residual > threshold {
        return Err(HolonomyError::FitResidual { residual, threshold });
    }
    let multiplier = coeffs[0];
    let mut alpha = multiplier.arg() / std::f64::consts::TAU;
    if alpha < 0.0 {
        alpha += 1.0;
    }
    let germ = Germ::new(alpha, coeffs[1..].to_vec(), sample_radius)?;
    Ok((
        germ,
        HolonomyFit { multiplier, alpha_recovered: alpha, coeffs: coeffs[1..].to_vec(), residual },
    ))
}
