//! Oscillator coupling functions g: even, 2pi-periodic maps into [-1, 1]
//! with g(0) = 1 and g(pi) = -1, plus Fourier smoothing, class validation,
//! and the hyperplane-rounding approximation ratio
//! min over x of (2/pi) * x / (1 - g(x)).

use crate::rounding::circular_distance;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("unknown coupling '{0}' (expected cos, g2, or g2-fourier:K)")]
    UnknownName(String),
    #[error("Fourier truncation needs at least one term, got {0}")]
    InvalidTermCount(usize),
    #[error("interval [{lo}, {hi}] is not contained in [0, pi]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("1 - g(x) vanishes at x = {x}; ratio undefined there")]
    DivisionGuard { x: f64 },
    #[error("ratio diverges as x -> 0 for this coupling; the pointwise value at 0 is undefined")]
    DivergesAtZero,
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Evaluable coupling function with its derivative.
///
/// `smooth_everywhere` is false for couplings with a corner (the exact g2
/// at x = pi); such couplings are still usable for energies and
/// certificates, while gradient flows should run on a smoothed version.
#[derive(Clone)]
pub struct Coupling {
    name: String,
    eval: ScalarFn,
    deriv: ScalarFn,
    smooth_everywhere: bool,
}

impl fmt::Debug for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coupling")
            .field("name", &self.name)
            .field("smooth_everywhere", &self.smooth_everywhere)
            .finish()
    }
}

impl Coupling {
    pub fn custom(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        smooth_everywhere: bool,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            smooth_everywhere,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_smooth_everywhere(&self) -> bool {
        self.smooth_everywhere
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }

    /// Resolves a CLI-style coupling name: "cos", "g2", or "g2-fourier:K".
    pub fn from_name(name: &str) -> Result<Self, CouplingError> {
        match name {
            "cos" => Ok(cosine()),
            "g2" => Ok(quadratic_g2()),
            _ => {
                if let Some(k) = name.strip_prefix("g2-fourier:") {
                    let k: usize = k
                        .parse()
                        .map_err(|_| CouplingError::UnknownName(name.to_string()))?;
                    fourier_truncate(&quadratic_g2(), k)
                } else {
                    Err(CouplingError::UnknownName(name.to_string()))
                }
            }
        }
    }
}

/// The cosine coupling of the classic rank-two relaxation.
pub fn cosine() -> Coupling {
    Coupling::custom("cos", f64::cos, |x| -x.sin(), true)
}

/// The optimal-ratio coupling g2(x) = 1 - 2 x^2 / pi^2 on [0, pi], extended
/// evenly and 2pi-periodically. Has a corner at x = pi (one-sided
/// derivatives -4/pi and +4/pi); the derivative there is reported as 0.
pub fn quadratic_g2() -> Coupling {
    Coupling::custom(
        "g2",
        |x| {
            let d = circular_distance(x, 0.0);
            1.0 - 2.0 * (d * d) / (PI * PI)
        },
        |x| {
            let r = x.rem_euclid(2.0 * PI);
            if r < PI {
                -4.0 * r / (PI * PI)
            } else if r > PI {
                4.0 * (2.0 * PI - r) / (PI * PI)
            } else {
                0.0
            }
        },
        false,
    )
}

/// Composite Simpson rule on [0, pi] with 2^14 intervals; plenty for the
/// smooth integrands used here (coefficients come out to ~1e-11).
fn simpson_0_pi(f: impl Fn(f64) -> f64) -> f64 {
    const N: usize = 1 << 14;
    let h = PI / N as f64;
    let mut acc = f(0.0) + f(PI);
    for i in 1..N {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

fn fourier_eval(coeffs: &[f64], x: f64) -> f64 {
    let (s1, c1) = x.sin_cos();
    let (mut sm, mut cm) = (0.0f64, 1.0f64);
    let mut acc = coeffs[0];
    for &a in &coeffs[1..] {
        let (s, c) = (sm * c1 + cm * s1, cm * c1 - sm * s1);
        sm = s;
        cm = c;
        acc += a * cm;
    }
    acc
}

fn fourier_deriv(coeffs: &[f64], x: f64) -> f64 {
    let (s1, c1) = x.sin_cos();
    let (mut sm, mut cm) = (0.0f64, 1.0f64);
    let mut acc = 0.0;
    for (m, &a) in coeffs.iter().enumerate().skip(1) {
        let (s, c) = (sm * c1 + cm * s1, cm * c1 - sm * s1);
        sm = s;
        cm = c;
        acc -= m as f64 * a * sm;
    }
    acc
}

/// Truncated cosine series of an even coupling: a0 + sum of a_m cos(m x)
/// for m = 1..=k, with coefficients from quadrature of the input over
/// [0, pi]. The result is smooth everywhere by construction.
pub fn fourier_truncate(f: &Coupling, k: usize) -> Result<Coupling, CouplingError> {
    let coeffs = fourier_coefficients(f, k)?;
    let name = format!("{}-fourier:{}", f.name(), k);
    let c_eval = coeffs.clone();
    let c_deriv = coeffs;
    Ok(Coupling::custom(
        name,
        move |x| fourier_eval(&c_eval, x),
        move |x| fourier_deriv(&c_deriv, x),
        true,
    ))
}

/// Cosine-series coefficients [a0, a1, ..., ak] of an even coupling.
pub fn fourier_coefficients(f: &Coupling, k: usize) -> Result<Vec<f64>, CouplingError> {
    if k < 1 {
        return Err(CouplingError::InvalidTermCount(k));
    }
    let mut coeffs = Vec::with_capacity(k + 1);
    coeffs.push(simpson_0_pi(|x| f.eval(x)) / PI);
    for m in 1..=k {
        let mf = m as f64;
        coeffs.push(2.0 / PI * simpson_0_pi(|x| f.eval(x) * (mf * x).cos()));
    }
    Ok(coeffs)
}

const GRID_POINTS: usize = 10_000;
const CLASS_G_TOL: f64 = 1e-6;
/// A derivative jump larger than this across a 2e-6 window flags a corner;
/// smooth couplings move by about 2e-6 * |g''| over the same window.
const DERIVATIVE_JUMP_TOL: f64 = 1e-3;

/// Validation report for membership in the coupling class: even,
/// 2pi-periodic, g(0) = 1 and g(pi) = -1, range within [-1, 1], and a
/// numerically continuous derivative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassGReport {
    pub even: bool,
    pub periodic: bool,
    pub boundary: bool,
    pub range: bool,
    pub smooth_derivative: bool,
    pub pass: bool,
    pub max_even_deviation: f64,
    pub max_periodic_deviation: f64,
    pub boundary_deviation: f64,
    pub range_excess: f64,
    pub max_derivative_jump: f64,
}

pub fn validate_class_g(f: &Coupling) -> ClassGReport {
    let mut max_even = 0.0f64;
    let mut max_periodic = 0.0f64;
    let mut range_excess = 0.0f64;
    let mut max_jump = 0.0f64;
    let h = 1e-6;
    for i in 0..GRID_POINTS {
        let x = 2.0 * PI * i as f64 / GRID_POINTS as f64;
        let v = f.eval(x);
        max_even = max_even.max((v - f.eval(-x)).abs());
        max_periodic = max_periodic.max((v - f.eval(x + 2.0 * PI)).abs());
        range_excess = range_excess.max(v.abs() - 1.0);
        max_jump = max_jump.max((f.deriv(x + h) - f.deriv(x - h)).abs());
    }
    let boundary_deviation = (f.eval(0.0) - 1.0).abs().max((f.eval(PI) + 1.0).abs());
    let even = max_even <= CLASS_G_TOL;
    let periodic = max_periodic <= CLASS_G_TOL;
    let boundary = boundary_deviation <= CLASS_G_TOL;
    let range = range_excess <= CLASS_G_TOL;
    let smooth_derivative = max_jump <= DERIVATIVE_JUMP_TOL;
    ClassGReport {
        even,
        periodic,
        boundary,
        range,
        smooth_derivative,
        pass: even && periodic && boundary && range && smooth_derivative,
        max_even_deviation: max_even,
        max_periodic_deviation: max_periodic,
        boundary_deviation,
        range_excess: range_excess.max(0.0),
        max_derivative_jump: max_jump,
    }
}

const MIN_DENOMINATOR: f64 = 1e-12;

fn pointwise_ratio(f: &Coupling, x: f64) -> Result<f64, CouplingError> {
    let denom = 1.0 - f.eval(x);
    if denom < MIN_DENOMINATOR {
        return Err(CouplingError::DivisionGuard { x });
    }
    Ok(2.0 * x / (PI * denom))
}

/// Behavior of x / (1 - f(x)) as x -> 0: `None` when 1 - f vanishes at
/// least quadratically (the ratio diverges and the neighborhood of 0 can be
/// excluded from the minimization), `Some(limit)` when it vanishes linearly.
fn zero_limit(f: &Coupling) -> Option<f64> {
    let eps = 1e-6;
    let d1 = 1.0 - f.eval(eps);
    let d2 = 1.0 - f.eval(2.0 * eps);
    if d1 < MIN_DENOMINATOR || d2 < MIN_DENOMINATOR {
        return None;
    }
    let order = (d2 / d1).log2();
    if order > 1.5 {
        None
    } else {
        Some(2.0 * eps / (PI * d1))
    }
}

/// Argmin of the denominator 1 - f on [a, b] by golden section.
fn denominator_min(f: &Coupling, mut a: f64, mut b: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let d = |x: f64| 1.0 - f.eval(x);
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let (mut f1, mut f2) = (d(x1), d(x2));
    while b - a > 1e-12 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = d(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = d(x2);
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

fn golden_section_min(
    f: &Coupling,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<f64, CouplingError> {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = pointwise_ratio(f, x1)?;
    let mut f2 = pointwise_ratio(f, x2)?;
    let mut best = f1.min(f2);
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = pointwise_ratio(f, x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = pointwise_ratio(f, x2)?;
        }
        best = best.min(f1).min(f2);
    }
    Ok(best)
}

/// Minimum of (2/pi) * x / (1 - f(x)) over [lo, hi] within [0, pi], by a
/// dense grid scan plus golden-section refinement around the best grid
/// point. A vanishing neighborhood of x = 0 is excluded and replaced by the
/// analytic limit when that limit is finite.
pub fn ratio_over_interval(f: &Coupling, lo: f64, hi: f64) -> Result<f64, CouplingError> {
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi > PI + 1e-12 || lo > hi {
        return Err(CouplingError::InvalidInterval { lo, hi });
    }
    let hi = hi.min(PI);
    let delta = PI / GRID_POINTS as f64;

    if lo == hi {
        if lo < delta {
            return zero_limit(f).ok_or(CouplingError::DivergesAtZero);
        }
        return pointwise_ratio(f, lo);
    }

    // Intervals touching the x -> 0 singularity: exclude [lo, delta) from
    // the scan and fold in the analytic limit when it is finite. For class
    // members 1 - f vanishes at least linearly there, so the pointwise
    // ratio on the excluded sliver never undercuts the scanned minimum.
    let mut candidate = f64::INFINITY;
    let start = if lo < delta {
        if let Some(limit) = zero_limit(f) {
            candidate = limit;
        }
        delta.min(0.5 * (lo + hi))
    } else {
        lo
    };

    let mut best = f64::INFINITY;
    let mut best_idx = 0;
    let mut denoms = Vec::with_capacity(GRID_POINTS + 1);
    for i in 0..=GRID_POINTS {
        let x = start + (hi - start) * i as f64 / GRID_POINTS as f64;
        let r = pointwise_ratio(f, x)?;
        denoms.push(1.0 - f.eval(x));
        if r < best {
            best = r;
            best_idx = i;
        }
    }
    let step = (hi - start) / GRID_POINTS as f64;

    // An interior zero of 1 - f sits between grid points without ever
    // producing a tiny denominator at one of them; chase local minima of
    // the denominator down and report the zero if one is found.
    for i in 1..GRID_POINTS {
        if denoms[i] < 1e-4 && denoms[i] <= denoms[i - 1] && denoms[i] <= denoms[i + 1] {
            let x = denominator_min(f, start + step * (i - 1) as f64, start + step * (i + 1) as f64);
            if 1.0 - f.eval(x) < MIN_DENOMINATOR {
                return Err(CouplingError::DivisionGuard { x });
            }
        }
    }

    let a = (start + step * best_idx.saturating_sub(1) as f64).max(start);
    let b = (start + step * (best_idx + 1) as f64).min(hi);
    let refined = golden_section_min(f, a, b, 1e-10)?;
    Ok(best.min(refined).min(candidate))
}

/// Approximation ratio of a coupling over the full interval [0, pi]:
/// the factor alpha such that the expected rounded cut of any configuration
/// is at least alpha times the coupling-energy bound.
pub fn approximation_ratio(f: &Coupling) -> Result<f64, CouplingError> {
    ratio_over_interval(f, 0.0, PI)
}
