//! Indifferent irrational germs f(z) = e^{2 pi i alpha} z + sum c_k z^k,
//! grid approximation of the local hedgehog, recurrence profiles,
//! accumulation scans and the convergence probe.

use std::collections::{HashMap, HashSet, VecDeque};

use num_complex::Complex64;
use serde::Serialize;

use crate::rotation::{RotationError, RotationNumber};

#[derive(Debug, Clone, thiserror::Error)]
pub enum GermError {
    #[error(transparent)]
    Rotation(#[from] RotationError),
    #[error("germ not invertible on its disk: sup|f' - lambda| bound = {0} >= 1")]
    NotInvertible(f64),
    #[error("Newton inverse failed at z = {z} (residual {residual})")]
    InverseFailed { z: Complex64, residual: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("retained set does not contain 0")]
    ZeroNotRetained,
}

#[derive(Debug, Clone, Serialize)]
pub struct Germ {
    pub alpha: f64,
    /// Multiplier e^{2 pi i alpha}.
    pub lambda: Complex64,
    /// c_2, c_3, ... (coefficient of z^{k} at index k-2).
    pub coeffs: Vec<Complex64>,
    pub r0: f64,
}

/// Result of iterating: either the endpoint or the first escape index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitEnd {
    Point(Complex64),
    Escaped { index: usize },
}

impl Germ {
    pub fn new(alpha: f64, coeffs: Vec<Complex64>, r0: f64) -> Result<Self, GermError> {
        if r0 <= 0.0 {
            return Err(GermError::Precondition("r_0 must be positive".into()));
        }
        // sup_{|z| <= r0} |f'(z) - lambda| <= sum k |c_k| r0^{k-1}.
        let mut bound = 0.0;
        for (i, c) in coeffs.iter().enumerate() {
            let k = (i + 2) as f64;
            bound += k * c.norm() * r0.powf(k - 1.0);
        }
        if bound >= 1.0 {
            return Err(GermError::NotInvertible(bound));
        }
        let lambda = Complex64::from_polar(1.0, std::f64::consts::TAU * alpha);
        Ok(Germ { alpha, lambda, coeffs, r0 })
    }

    pub fn linear(alpha: f64, r0: f64) -> Self {
        Germ::new(alpha, vec![], r0).unwrap()
    }

    pub fn quadratic(alpha: f64, r0: f64) -> Result<Self, GermError> {
        Germ::new(alpha, vec![Complex64::new(1.0, 0.0)], r0)
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        // Horner from the top coefficient down to c_2, then the linear part.
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = (acc + c) * z;
        }
        (acc + self.lambda) * z
    }

    pub fn deriv(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            let k = (i + 2) as f64;
            acc = acc * z + k * c;
        }
        acc * z + self.lambda
    }

    /// f^{-1}(z): closed form for the quadratic germ, Newton otherwise.
    pub fn apply_inv(&self, z: Complex64) -> Result<Complex64, GermError> {
        let seed = z / self.lambda;
        if self.coeffs.len() == 1 {
            // c w^2 + lambda w - z = 0; the branch through w ~ z/lambda.
            let c = self.coeffs[0];
            let disc = (self.lambda * self.lambda + 4.0 * c * z).sqrt();
            let r1 = (-self.lambda + disc) / (2.0 * c);
            let r2 = (-self.lambda - disc) / (2.0 * c);
            return Ok(if (r1 - seed).norm() <= (r2 - seed).norm() { r1 } else { r2 });
        }
        if self.coeffs.is_empty() {
            return Ok(seed);
        }
        let mut w = seed;
        for _ in 0..50 {
            let res = self.apply(w) - z;
            if res.norm() < 1e-13 {
                return Ok(w);
            }
            w -= res / self.deriv(w);
        }
        let residual = (self.apply(w) - z).norm();
        if residual < 1e-13 {
            Ok(w)
        } else {
            Err(GermError::InverseFailed { z, residual })
        }
    }

    fn escaped(&self, z: Complex64) -> bool {
        z.norm_sqr() > self.r0 * self.r0 * (1.0 + 1e-12)
    }
}

/// f^{(dir) j}(z), or the first index at which the orbit leaves D_{r_0}.
pub fn iterate_germ(f: &Germ, z: Complex64, j: usize, dir: i8) -> Result<OrbitEnd, GermError> {
    if f.escaped(z) {
        return Err(GermError::Precondition(format!("|z| = {} > r_0", z.norm())));
    }
    let mut w = z;
    for i in 0..j {
        w = if dir >= 0 { f.apply(w) } else { f.apply_inv(w)? };
        if f.escaped(w) {
            return Ok(OrbitEnd::Escaped { index: i + 1 });
        }
    }
    Ok(OrbitEnd::Point(w))
}

/// Grid approximation of the local hedgehog: points of the closed disk
/// whose forward and backward orbits survive N steps, connected to 0.
#[derive(Debug, Clone, Serialize)]
pub struct HedgehogApprox {
    pub r0: f64,
    pub resolution: usize,
    pub n_iter: usize,
    /// Grid step (cell side).
    pub h: f64,
    /// Component of 0 among retained points, as grid indices.
    pub component: HashSet<(u32, u32)>,
    /// Component points adjacent to a non-component cell.
    pub boundary: Vec<(u32, u32)>,
    pub retained_fraction: f64,
    /// Component reaches the ring |z| >= r_0 - 2h.
    pub touches_ring: bool,
}

impl HedgehogApprox {
    pub fn coord(&self, idx: (u32, u32)) -> Complex64 {
        let res = self.resolution as f64;
        Complex64::new(
            self.r0 * (2.0 * idx.0 as f64 / res - 1.0),
            self.r0 * (2.0 * idx.1 as f64 / res - 1.0),
        )
    }

    pub fn component_points(&self) -> Vec<Complex64> {
        let mut v: Vec<(u32, u32)> = self.component.iter().copied().collect();
        v.sort_unstable();
        v.into_iter().map(|i| self.coord(i)).collect()
    }

    pub fn boundary_points(&self) -> Vec<Complex64> {
        self.boundary.iter().map(|&i| self.coord(i)).collect()
    }
}

pub fn hedgehog_approx(
    f: &Germ,
    n_iter: usize,
    resolution: usize,
) -> Result<HedgehogApprox, GermError> {
    if resolution < 256 {
        return Err(GermError::Precondition(format!(
            "resolution {resolution} below 256"
        )));
    }
    if n_iter < 1000 {
        return Err(GermError::Precondition(format!("N = {n_iter} below 10^3")));
    }
    if resolution % 2 != 0 {
        return Err(GermError::Precondition("resolution must be even (0 on-grid)".into()));
    }
    let res = resolution;
    let coord = |i: usize, j: usize| {
        Complex64::new(
            f.r0 * (2.0 * i as f64 / res as f64 - 1.0),
            f.r0 * (2.0 * j as f64 / res as f64 - 1.0),
        )
    };
    let r2 = f.r0 * f.r0 * (1.0 + 1e-12);
    let mut retained = vec![false; (res + 1) * (res + 1)];
    let at = |i: usize, j: usize| i * (res + 1) + j;
    let mut in_disk = 0usize;
    let mut kept = 0usize;
    for i in 0..=res {
        for j in 0..=res {
            let z0 = coord(i, j);
            if z0.norm_sqr() > r2 {
                continue;
            }
            in_disk += 1;
            let mut ok = true;
            let mut w = z0;
            for _ in 0..n_iter {
                w = f.apply(w);
                if w.norm_sqr() > r2 {
                    ok = false;
                    break;
                }
            }
            if ok {
                let mut w = z0;
                for _ in 0..n_iter {
                    w = match f.apply_inv(w) {
                        Ok(v) => v,
                        Err(_) => {
                            ok = false;
                            break;
                        }
                    };
                    if w.norm_sqr() > r2 {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                retained[at(i, j)] = true;
                kept += 1;
            }
        }
    }
    let zero = (res / 2, res / 2);
    if !retained[at(zero.0, zero.1)] {
        return Err(GermError::ZeroNotRetained);
    }
    // 8-connected component of 0.
    let mut comp = HashSet::new();
    let mut queue = VecDeque::new();
    comp.insert((zero.0 as u32, zero.1 as u32));
    queue.push_back(zero);
    while let Some((i, j)) = queue.pop_front() {
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let ni = i as i64 + di;
                let nj = j as i64 + dj;
                if ni < 0 || nj < 0 || ni > res as i64 || nj > res as i64 {
                    continue;
                }
                let (ni, nj) = (ni as usize, nj as usize);
                if retained[at(ni, nj)] && comp.insert((ni as u32, nj as u32)) {
                    queue.push_back((ni, nj));
                }
            }
        }
    }
    let mut boundary = Vec::new();
    let h = 2.0 * f.r0 / res as f64;
    let ring2 = (f.r0 - 2.0 * h).max(0.0).powi(2);
    let mut touches = false;
    for &(i, j) in &comp {
        let z = coord(i as usize, j as usize);
        if z.norm_sqr() >= ring2 {
            touches = true;
        }
        let mut edge = false;
        'nb: for di in -1i64..=1 {
            for dj in -1i64..=1 {
                if di == 0 && dj == 0 {
                    continue;
                }
                let ni = i as i64 + di;
                let nj = j as i64 + dj;
                if ni < 0 || nj < 0 || ni > res as i64 || nj > res as i64 {
                    edge = true;
                    break 'nb;
                }
                if !comp.contains(&(ni as u32, nj as u32)) {
                    edge = true;
                    break 'nb;
                }
            }
        }
        if edge {
            boundary.push((i, j));
        }
    }
    boundary.sort_unstable();
    Ok(HedgehogApprox {
        r0: f.r0,
        resolution: res,
        n_iter,
        h,
        component: comp,
        boundary,
        retained_fraction: kept as f64 / in_disk as f64,
        touches_ring: touches,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileEntry {
    pub n: usize,
    pub qn: u64,
    pub sup_forward: f64,
    pub sup_backward: f64,
    /// Component points whose orbit escaped before q_n steps (grid artifact).
    pub excluded: usize,
}

/// sup over the component of |f^{+-q_n}(z) - z| for each n in the range.
pub fn recurrence_profile(
    f: &Germ,
    k: &HedgehogApprox,
    alpha: &RotationNumber,
    n_range: std::ops::RangeInclusive<usize>,
) -> Result<Vec<ProfileEntry>, GermError> {
    let pts = k.component_points();
    let mut out = Vec::new();
    for n in n_range {
        let qn = alpha.q_u64(n)?;
        let mut supf = 0.0f64;
        let mut supb = 0.0f64;
        let mut excluded = 0usize;
        for &z in &pts {
            match iterate_germ(f, z, qn as usize, 1)? {
                OrbitEnd::Point(w) => supf = supf.max((w - z).norm()),
                OrbitEnd::Escaped { .. } => {
                    excluded += 1;
                    continue;
                }
            }
            match iterate_germ(f, z, qn as usize, -1)? {
                OrbitEnd::Point(w) => supb = supb.max((w - z).norm()),
                OrbitEnd::Escaped { .. } => excluded += 1,
            }
        }
        out.push(ProfileEntry { n, qn, sup_forward: supf, sup_backward: supb, excluded });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedCoverage {
    pub seed: (f64, f64),
    /// Orbit came within delta of the target set.
    pub tracked: bool,
    /// Fraction of target points approached within eps.
    pub coverage: f64,
    pub steps_survived: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AccumReport {
    pub per_seed: Vec<SeedCoverage>,
    /// Min coverage over tracked seeds (1.0 when no seed is tracked).
    pub min_coverage: f64,
    pub tracked_seeds: usize,
}

fn cell_of(z: Complex64, cell: f64) -> (i64, i64) {
    ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64)
}

/// For each seed whose forward orbit comes within delta of the target
/// set, the fraction of targets approached within eps by the orbit cloud.
pub fn accumulation_scan(
    f: &Germ,
    targets: &[Complex64],
    seeds: &[Complex64],
    n_iter: usize,
    delta: f64,
    eps: f64,
) -> Result<AccumReport, GermError> {
    let tcell = delta.max(1e-12);
    let mut target_hash: HashMap<(i64, i64), Vec<Complex64>> = HashMap::new();
    for &t in targets {
        target_hash.entry(cell_of(t, tcell)).or_default().push(t);
    }
    let near_targets = |z: Complex64| -> bool {
        let (ci, cj) = cell_of(z, tcell);
        for di in -1..=1 {
            for dj in -1..=1 {
                if let Some(v) = target_hash.get(&(ci + di, cj + dj)) {
                    if v.iter().any(|t| (t - z).norm() <= delta) {
                        return true;
                    }
                }
            }
        }
        false
    };
    let cell = eps / 2.0;
    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut min_cov = 1.0f64;
    let mut tracked_seeds = 0usize;
    for &s in seeds {
        let mut cloud: HashMap<(i64, i64), Complex64> = HashMap::new();
        let mut tracked = false;
        let mut w = s;
        let mut steps = 0usize;
        for _ in 0..n_iter {
            if f.escaped(w) {
                break;
            }
            cloud.entry(cell_of(w, cell)).or_insert(w);
            if !tracked && near_targets(w) {
                tracked = true;
            }
            w = f.apply(w);
            steps += 1;
        }
        let mut coverage = 0.0;
        if tracked {
            tracked_seeds += 1;
            let mut hit = 0usize;
            for &t in targets {
                let (ci, cj) = cell_of(t, cell);
                let mut found = false;
                'scan: for di in -2..=2 {
                    for dj in -2..=2 {
                        if let Some(&p) = cloud.get(&(ci + di, cj + dj)) {
                            if (p - t).norm() <= eps {
                                found = true;
                                break 'scan;
                            }
                        }
                    }
                }
                if found {
                    hit += 1;
                }
            }
            coverage = hit as f64 / targets.len().max(1) as f64;
            min_cov = min_cov.min(coverage);
        }
        per_seed.push(SeedCoverage {
            seed: (s.re, s.im),
            tracked,
            coverage,
            steps_survived: steps,
        });
    }
    Ok(AccumReport { per_seed, min_coverage: min_cov, tracked_seeds })
}

#[derive(Debug, Clone, Serialize)]
pub struct Suspect {
    pub seed: (f64, f64),
    pub direction: i8,
    pub entered_at: usize,
    pub min_modulus: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub inner: f64,
    pub outer: f64,
    pub entries: usize,
    pub exits: usize,
    /// Orbits that entered the inner disk and never exited to the outer
    /// radius: numerical candidates against the no-converging-orbit claim.
    pub suspects: Vec<Suspect>,
}

/// Watch each seed's orbit in both directions. An orbit converging to 0
/// would cross into D_inner and never leave it again; a suspect is an
/// orbit that entered D_inner from outside and then stayed below `inner`
/// for the final stretch of the budget (>= n_iter/10 steps, so that a
/// near-parabolic gate passage truncated by the cutoff is not mistaken
/// for convergence). `exits` counts recoveries past `outer`.
pub fn convergence_probe(
    f: &Germ,
    seeds: &[Complex64],
    n_iter: usize,
    inner: f64,
    outer: f64,
) -> Result<ProbeReport, GermError> {
    if inner >= outer || outer > f.r0 {
        return Err(GermError::Precondition("need inner < outer <= r_0".into()));
    }
    let mut entries = 0usize;
    let mut exits = 0usize;
    let mut suspects = Vec::new();
    for &s in seeds {
        if s.norm() == 0.0 {
            return Err(GermError::Precondition("seed must be nonzero".into()));
        }
        for &dir in &[1i8, -1] {
            let mut w = s;
            // A seed born inside D_inner never "enters"; only a crossing
            // from outside arms the suspect state.
            let mut below = s.norm() < inner;
            let mut entered = false;
            let mut entered_at = 0usize;
            let mut last_entry = 0usize;
            let mut await_outer = false;
            let mut min_mod = s.norm();
            for i in 0..n_iter {
                w = if dir >= 0 {
                    f.apply(w)
                } else {
                    match f.apply_inv(w) {
                        Ok(v) => v,
                        Err(_) => break,
                    }
                };
                let m = w.norm();
                min_mod = min_mod.min(m);
                if !below && m < inner {
                    below = true;
                    if !entered {
                        entered_at = i + 1;
                    }
                    entered = true;
                    last_entry = i + 1;
                    entries += 1;
                    await_outer = true;
                } else if below && m >= inner {
                    below = false;
                }
                if await_outer && m >= outer {
                    await_outer = false;
                    exits += 1;
                }
                if f.escaped(w) {
                    break;
                }
            }
            if entered && below && n_iter - last_entry >= n_iter / 10 {
                suspects.push(Suspect {
                    seed: (s.re, s.im),
                    direction: dir,
                    entered_at,
                    min_modulus: min_mod,
                });
            }
        }
    }
    Ok(ProbeReport { inner, outer, entries, exits, suspects })
}
