//! Continued-fraction arithmetic for irrational rotation numbers.
//!
//! The partial-quotient stream is the source of truth; float values are
//! derived from convergents. This avoids catastrophic cancellation in
//! `q_n*alpha - p_n` when denominators get large.

use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Errors from rotation-number arithmetic.
#[derive(Debug, Clone, thiserror::Error)]
pub enum RotationError {
    #[error("quotient stream terminated at index {index}: input is rational")]
    Rational { index: usize },
    #[error("precision exhausted: last trustworthy quotient index is {last_trusted}")]
    Precision { last_trusted: usize },
    #[error("invalid surd spec: {0}")]
    InvalidSurd(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("convergent q_{index} does not fit the requested integer width")]
    TooLarge { index: usize },
}

/// A partial quotient. `Astronomical` is produced by the Brjuno-divergent
/// stream once quotients stop being representable in memory.
#[derive(Debug, Clone)]
enum Quot {
    Exact(BigUint),
    Astronomical,
}

enum Kind {
    /// alpha = (a + b sqrt(d)) / c, reduced mod 1 into (0,1).
    Surd(SurdState),
    /// Finite explicit quotient list a_1, a_2, ...
    List(Vec<BigUint>),
    /// Lazily evaluated quotient stream a_n = growth(n), n >= 1.
    Stream(Arc<dyn Fn(usize) -> BigUint + Send + Sync>),
    /// Float seed: quotients are the common CF prefix of x-ulp and x+ulp.
    Float { digits: Vec<BigUint>, terminated: bool },
    /// Quotients chosen adaptively so that q_{n+1} >= e^{rate * q_n}.
    BrjunoDivergent { rate: f64 },
}

/// State of the quadratic-surd continued fraction algorithm.
/// Current complete quotient is (p + sqrt(d)) / q with q | d - p^2.
struct SurdState {
    p: BigInt,
    q: BigInt,
    d: BigInt,
    started: bool,
}

struct Inner {
    kind: Kind,
    /// Memoized quotients a_1, a_2, ... (quots[i] is a_{i+1}).
    quots: Vec<Quot>,
    /// Convergent numerators/denominators, index n >= 0; only extended
    /// while all quotients involved are exact.
    pn: Vec<BigInt>,
    qn: Vec<BigInt>,
    /// First quotient index that failed to produce (cached error).
    stopped: Option<(usize, RotationError)>,
}

/// An irrational rotation number given by its partial-quotient stream.
///
/// Immutable after construction; memoization is guarded by a mutex so
/// values are safe to share across threads.
pub struct RotationNumber {
    inner: Mutex<Inner>,
    label: String,
}

impl fmt::Debug for RotationNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RotationNumber({})", self.label)
    }
}

fn isqrt(n: &BigInt) -> BigInt {
    n.sqrt()
}

fn is_perfect_square(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let s = n.sqrt();
    &(&s * &s) == n
}

/// floor((p + sqrt(d)) / q) for irrational sqrt(d), q != 0.
fn floor_surd(p: &BigInt, d: &BigInt, q: &BigInt) -> BigInt {
    use num_integer::Integer;
    let s = isqrt(d);
    if q.is_positive() {
        (p + &s).div_floor(q)
    } else {
        // (p + sqrt(d))/q = -((p + sqrt(d))/(-q)); value irrational, so
        // floor(-x) = -floor(x) - 1.
        let nq = -q;
        -((p + &s).div_floor(&nq)) - BigInt::one()
    }
}

impl SurdState {
    fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self, RotationError> {
        if c == 0 {
            return Err(RotationError::InvalidSurd("c must be nonzero".into()));
        }
        if b == 0 {
            return Err(RotationError::InvalidSurd("b must be nonzero (rational)".into()));
        }
        if d <= 1 {
            return Err(RotationError::InvalidSurd("d must be >= 2".into()));
        }
        let d_big = BigInt::from(d);
        if is_perfect_square(&d_big) {
            return Err(RotationError::InvalidSurd(format!("d = {d} is a perfect square")));
        }
        // (a + b sqrt(d))/c with b < 0 rewrites to (-a + |b| sqrt(d))/(-c).
        let (mut p, mut q) = if b > 0 {
            (BigInt::from(a), BigInt::from(c))
        } else {
            (BigInt::from(-a), BigInt::from(-c))
        };
        let mut dd = BigInt::from(b) * BigInt::from(b) * d_big;
        // Enforce the invariant q | d - p^2 by scaling.
        if !((&dd - &p * &p) % &q).is_zero() {
            let aq = q.abs();
            p *= &aq;
            dd *= &q * &q;
            q *= &aq;
        }
        // Reduce into (0,1).
        let f = floor_surd(&p, &dd, &q);
        p -= f * &q;
        Ok(SurdState { p, q, d: dd, started: false })
    }

    /// Next partial quotient of the tail; state holds xi in (0,1).
    fn next(&mut self) -> BigUint {
        // 1/xi = (-p + sqrt(d)) / ((d - p^2)/q)
        let p1 = -&self.p;
        let q1 = (&self.d - &self.p * &self.p) / &self.q;
        let a = floor_surd(&p1, &self.d, &q1);
        self.p = &p1 - &a * &q1;
        self.q = q1;
        self.started = true;
        a.to_biguint().expect("complete quotient >= 1")
    }
}

/// Continued fraction digits of an exact rational in (0,1); the first
/// digit returned is a_1.
fn cf_digits(x: &Ratio<BigInt>, max: usize) -> Vec<BigUint> {
    use num_integer::Integer;
    let mut digits = Vec::new();
    let mut num = x.numer().clone();
    let mut den = x.denom().clone();
    // invert repeatedly: a = floor(den/num), remainder.
    for _ in 0..max {
        if num.is_zero() {
            break;
        }
        let (a, r) = den.div_mod_floor(&num);
        digits.push(a.to_biguint().expect("positive quotient"));
        den = num;
        num = r;
    }
    digits
}

impl Inner {
    /// Produce quotient a_n (n >= 1), memoized.
    fn quotient(&mut self, n: usize) -> Result<Quot, RotationError> {
        assert!(n >= 1);
        if let Some((idx, err)) = &self.stopped {
            if n >= *idx {
                return Err(err.clone());
            }
        }
        while self.quots.len() < n {
            let next_idx = self.quots.len() + 1;
            let q = self.generate(next_idx);
            match q {
                Ok(q) => self.quots.push(q),
                Err(e) => {
                    self.stopped = Some((next_idx, e.clone()));
                    return Err(e);
                }
            }
        }
        Ok(self.quots[n - 1].clone())
    }

    fn generate(&mut self, n: usize) -> Result<Quot, RotationError> {
        match &mut self.kind {
            Kind::Surd(st) => Ok(Quot::Exact(st.next())),
            Kind::List(v) => v
                .get(n - 1)
                .cloned()
                .map(Quot::Exact)
                .ok_or(RotationError::Rational { index: n }),
            Kind::Stream(f) => {
                let a = f(n);
                if a.is_zero() {
                    return Err(RotationError::Invalid(format!("growth({n}) must be >= 1")));
                }
                Ok(Quot::Exact(a))
            }
            Kind::Float { digits, terminated } => {
                if n <= digits.len() {
                    Ok(Quot::Exact(digits[n - 1].clone()))
                } else if *terminated {
                    Err(RotationError::Rational { index: n })
                } else {
                    Err(RotationError::Precision { last_trusted: digits.len() })
                }
            }
            Kind::BrjunoDivergent { rate } => {
                let rate = *rate;
                if n == 1 {
                    let a1 = (rate.exp().ceil()) as u64;
                    return Ok(Quot::Exact(BigUint::from(a1.max(2))));
                }
                // Need a_n with ln a_n >= rate * q_{n-1}. Use a power of two.
                // q_{n-1} must already be computed (it is: convergents are
                // extended as quotients come in, see ensure_convergents).
                let qprev = &self.qn[n - 1];
                match qprev.to_f64() {
                    Some(qf) if qf.is_finite() => {
                        let shift = (rate * qf / std::f64::consts::LN_2).ceil();
                        if shift <= 8_000_000.0 {
                            Ok(Quot::Exact(BigUint::one() << (shift as usize)))
                        } else {
                            Ok(Quot::Astronomical)
                        }
                    }
                    _ => Ok(Quot::Astronomical),
                }
            }
        }
    }

    /// Extend exact convergents through index n; Err if a needed quotient
    /// is unavailable or non-exact.
    fn ensure_convergents(&mut self, n: usize) -> Result<(), RotationError> {
        if self.pn.is_empty() {
            self.pn.push(BigInt::zero());
            self.qn.push(BigInt::one());
        }
        while self.qn.len() <= n {
            let k = self.qn.len(); // next index to fill
            let a = match self.quotient(k)? {
                Quot::Exact(a) => BigInt::from(a),
                Quot::Astronomical => {
                    return Err(RotationError::Precision { last_trusted: k - 1 })
                }
            };
            let (p, q) = if k == 1 {
                (BigInt::one(), a)
            } else {
                (
                    &a * &self.pn[k - 1] + &self.pn[k - 2],
                    &a * &self.qn[k - 1] + &self.qn[k - 2],
                )
            };
            self.pn.push(p);
            self.qn.push(q);
        }
        Ok(())
    }
}

/// ln of a positive big integer.
fn ln_big(x: &BigInt) -> f64 {
    debug_assert!(x.is_positive());
    if let Some(f) = x.to_f64() {
        if f.is_finite() {
            return f.ln();
        }
    }
    let bits = x.bits();
    let top = (x >> (bits.saturating_sub(53))).to_f64().unwrap();
    top.ln() + (bits.saturating_sub(53) as f64) * std::f64::consts::LN_2
}

impl RotationNumber {
    /// alpha = (a + b*sqrt(d))/c, reduced mod 1 into (0,1).
    pub fn from_surd(a: i64, b: i64, c: i64, d: i64) -> Result<Self, RotationError> {
        let st = SurdState::new(a, b, c, d)?;
        Ok(Self::new(Kind::Surd(st), format!("({a}+{b}*sqrt({d}))/{c}")))
    }

    /// The golden mean (sqrt(5)-1)/2 = [0;1,1,1,...].
    pub fn golden() -> Self {
        Self::from_surd(-1, 1, 2, 5).expect("golden surd is valid")
    }

    /// Explicit finite quotient list a_1, a_2, ... Operations needing more
    /// quotients report a rationality error.
    pub fn from_quotients(quots: Vec<u64>) -> Result<Self, RotationError> {
        if quots.iter().any(|&a| a == 0) {
            return Err(RotationError::Invalid("partial quotients must be >= 1".into()));
        }
        let label = format!("[0;{:?}]", quots);
        Ok(Self::new(
            Kind::List(quots.into_iter().map(BigUint::from).collect()),
            label,
        ))
    }

    /// Quotient stream a_n = growth(n) for n >= 1.
    pub fn liouville_stream<F>(growth: F) -> Self
    where
        F: Fn(usize) -> BigUint + Send + Sync + 'static,
    {
        Self::new(Kind::Stream(Arc::new(growth)), "stream".into())
    }

    /// Float seed: trusts the common CF prefix of x-ulp and x+ulp.
    pub fn from_float(x: f64) -> Result<Self, RotationError> {
        if !x.is_finite() {
            return Err(RotationError::Invalid("seed must be finite".into()));
        }
        let frac = x - x.floor();
        if frac == 0.0 {
            return Err(RotationError::Rational { index: 1 });
        }
        let r = Ratio::<BigInt>::from_float(frac).unwrap();
        let ulp = Ratio::<BigInt>::from_float((frac.abs() * f64::EPSILON).max(f64::MIN_POSITIVE))
            .unwrap();
        let lo = &r - &ulp;
        let hi = &r + &ulp;
        let (lo, terminated) = if lo <= Ratio::zero() {
            (Ratio::from_float(f64::MIN_POSITIVE).unwrap(), false)
        } else {
            (lo, false)
        };
        let dl = cf_digits(&lo, 200);
        let dh = cf_digits(&hi, 200);
        let mut common = Vec::new();
        for (a, b) in dl.iter().zip(dh.iter()) {
            if a == b {
                common.push(a.clone());
            } else {
                break;
            }
        }
        // The last digit of a terminating expansion is ambiguous; drop one
        // digit of safety margin.
        if !common.is_empty() && (common.len() == dl.len() || common.len() == dh.len()) {
            common.pop();
        }
        if common.is_empty() {
            return Err(RotationError::Precision { last_trusted: 0 });
        }
        Ok(Self::new(
            Kind::Float { digits: common, terminated },
            format!("float({x})"),
        ))
    }

    /// Stream with quotients chosen so q_{n+1} >= e^{rate * q_n}; each
    /// Brjuno term is then >= rate. Violates the Brjuno condition.
    pub fn brjuno_divergent(rate: f64) -> Result<Self, RotationError> {
        if !(rate.is_finite() && rate > 0.0 && rate <= 200.0) {
            return Err(RotationError::Invalid("rate must be in (0, 200]".into()));
        }
        Ok(Self::new(
            Kind::BrjunoDivergent { rate },
            format!("brjuno-divergent({rate})"),
        ))
    }

    fn new(kind: Kind, label: String) -> Self {
        RotationNumber {
            inner: Mutex::new(Inner {
                kind,
                quots: Vec::new(),
                pn: Vec::new(),
                qn: Vec::new(),
                stopped: None,
            }),
            label,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Partial quotient a_n, n >= 1.
    pub fn partial_quotient(&self, n: usize) -> Result<BigUint, RotationError> {
        let mut inner = self.inner.lock().unwrap();
        // Astronomical quotients require convergents up to n-1 first.
        inner.ensure_convergents(n.saturating_sub(1)).ok();
        match inner.quotient(n)? {
            Quot::Exact(a) => Ok(a),
            Quot::Astronomical => Err(RotationError::Precision { last_trusted: n - 1 }),
        }
    }

    /// Convergent (p_n, q_n), n >= 0.
    pub fn convergent(&self, n: usize) -> Result<(BigInt, BigInt), RotationError> {
        let mut inner = self.inner.lock().unwrap();
        inner.ensure_convergents(n)?;
        Ok((inner.pn[n].clone(), inner.qn[n].clone()))
    }

    /// Convergents (p_0,q_0) .. (p_{count-1}, q_{count-1}).
    pub fn convergents(&self, count: usize) -> Result<Vec<(BigInt, BigInt)>, RotationError> {
        if count == 0 {
            return Err(RotationError::Invalid("count must be >= 1".into()));
        }
        let mut inner = self.inner.lock().unwrap();
        inner.ensure_convergents(count - 1)?;
        Ok((0..count).map(|n| (inner.pn[n].clone(), inner.qn[n].clone())).collect())
    }

    /// q_n as u64, for iteration counts.
    pub fn q_u64(&self, n: usize) -> Result<u64, RotationError> {
        let (_, q) = self.convergent(n)?;
        q.to_u64().ok_or(RotationError::TooLarge { index: n })
    }

    /// p_n as i64.
    pub fn p_i64(&self, n: usize) -> Result<i64, RotationError> {
        let (p, _) = self.convergent(n)?;
        p.to_i64().ok_or(RotationError::TooLarge { index: n })
    }

    /// Exact rational bracket (lo, hi) around alpha from consecutive
    /// convergents, with hi - lo <= 1/(q_N q_{N+1}).
    pub fn bracket(&self, min_index: usize) -> Result<(Ratio<BigInt>, Ratio<BigInt>), RotationError> {
        let mut inner = self.inner.lock().unwrap();
        // Extend as far as available, at least min_index + 1, at most the
        // stream's trusted range.
        let mut n = min_index + 1;
        inner.ensure_convergents(n)?;
        // Opportunistically extend further for sharper brackets.
        while n < min_index + 64 {
            if inner.ensure_convergents(n + 1).is_err() {
                break;
            }
            n += 1;
            if inner.qn[n].bits() > 4096 {
                break;
            }
        }
        let a = Ratio::new(inner.pn[n - 1].clone(), inner.qn[n - 1].clone());
        let b = Ratio::new(inner.pn[n].clone(), inner.qn[n].clone());
        Ok(if a < b { (a, b) } else { (b, a) })
    }

    /// alpha at f64 precision.
    pub fn value(&self) -> f64 {
        match self.bracket(0) {
            Ok((lo, hi)) => ((lo + hi) / Ratio::from_integer(BigInt::from(2)))
                .to_f64()
                .unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        }
    }

    /// q_n * alpha - p_n at working precision. Sign is (-1)^n and
    /// |result| < 1/q_{n+1}.
    pub fn signed_error(&self, n: usize) -> Result<f64, RotationError> {
        let (p, q) = self.convergent(n)?;
        let (lo, hi) = self.bracket(n)?;
        let lo_e = Ratio::from_integer(q.clone()) * lo - Ratio::from_integer(p.clone());
        let hi_e = Ratio::from_integer(q) * hi - Ratio::from_integer(p);
        let mid = (&lo_e + &hi_e) / Ratio::from_integer(BigInt::from(2));
        let width = (&hi_e - &lo_e).to_f64().unwrap_or(f64::INFINITY);
        let v = mid.to_f64().ok_or(RotationError::Precision { last_trusted: n })?;
        if width > v.abs().max(1e-300) * 1e-6 {
            return Err(RotationError::Precision { last_trusted: n });
        }
        Ok(v)
    }

    /// Exact check |q_n alpha - p_n| < 1/q_{n+1} in rational arithmetic.
    pub fn check_convergent_inequality(&self, n: usize) -> Result<bool, RotationError> {
        let (p, q) = self.convergent(n)?;
        let (_, q1) = self.convergent(n + 1)?;
        let (lo, hi) = self.bracket(n + 1)?;
        let lo_e = Ratio::from_integer(q.clone()) * lo - Ratio::from_integer(p.clone());
        let hi_e = Ratio::from_integer(q) * hi - Ratio::from_integer(p);
        let bound = Ratio::new(BigInt::one(), q1);
        let abs_max = if lo_e.abs() > hi_e.abs() { lo_e.abs() } else { hi_e.abs() };
        Ok(abs_max < bound)
    }

    /// Partial Brjuno sum: sum_{n=0}^{N} ln(q_{n+1}) / q_n.
    pub fn brjuno_partial_sum(&self, upper: usize) -> Result<f64, RotationError> {
        let mut inner = self.inner.lock().unwrap();
        let rate = match &inner.kind {
            Kind::BrjunoDivergent { rate } => Some(*rate),
            _ => None,
        };
        let mut sum = 0.0;
        for n in 0..=upper {
            match inner.ensure_convergents(n + 1) {
                Ok(()) => {
                    let term = ln_big(&inner.qn[n + 1])
                        / inner.qn[n].to_f64().unwrap_or(f64::INFINITY);
                    sum += term;
                }
                Err(e) => {
                    // Convergents stop being representable. For the
                    // Brjuno-divergent stream each remaining term is
                    // >= rate by construction; use that lower bound.
                    if let Some(rate) = rate {
                        let k = inner.qn.len() - 1; // last exact index
                        if k >= 1 && n <= upper {
                            for _ in n..=upper {
                                sum += rate;
                            }
                            return Ok(sum);
                        }
                    }
                    return Err(e);
                }
            }
        }
        Ok(sum)
    }
}
