//! Distance functions of approximate source conditions.
//!
//! All distance functions here have the form
//! `d(R) = inf_{||xi|| <= R} ||b - P xi||` with `P` diagonal in the singular
//! basis (entries `s_i`). The minimiser at the constraint boundary is
//! `xi_i = s_i b_i / (s_i^2 + lambda)`, giving
//!
//! `R(lambda)^2 = sum s_i^2 b_i^2 / (s_i^2 + lambda)^2`,
//! `d(lambda)^2 = lambda^2 sum b_i^2 / (s_i^2 + lambda)^2 + ||b_perp||^2`,
//!
//! and `R(lambda)` is strictly decreasing, so `lambda` is found by bisection
//! on `log lambda`.

use rayon::prelude::*;
use serde::Serialize;

use crate::choice::Method;
use crate::error::{Error, Result};
use crate::ops::{norm, CoefVector, SingularSystem};

pub const LAMBDA_MIN: f64 = 1e-30;
pub const LAMBDA_MAX: f64 = 1e10;
pub const MAX_BISECTIONS: usize = 200;
pub const R_TOLERANCE: f64 = 1e-8;
/// Distances below this multiple of the reference norm count as floor hits.
pub const FLOOR_FRACTION: f64 = 1e-12;

/// Where on the curve a point sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `lambda` above the smallest `s_i^2`: the discretisation is invisible.
    Continuum,
    /// `lambda` below the smallest `s_i^2`: finite-rank effects dominate.
    Discrete,
    /// `d` at round-off level.
    Floor,
    /// `R` beyond the norm of the exact preimage.
    Saturated,
    /// The solve failed for this point.
    Invalid,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Continuum => "continuum",
            Regime::Discrete => "discrete",
            Regime::Floor => "floor",
            Regime::Saturated => "saturated",
            Regime::Invalid => "invalid",
        }
    }

    /// Points usable in slope fits.
    pub fn is_fittable(&self) -> bool {
        matches!(self, Regime::Continuum | Regime::Discrete)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistancePoint {
    pub r: f64,
    pub d: f64,
    pub lambda: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceCurve {
    pub nu: f64,
    pub kappa: f64,
    pub points: Vec<DistancePoint>,
    /// `d` in the limit `R -> 0`.
    pub target_norm: f64,
}

impl DistanceCurve {
    pub fn fittable(&self) -> impl Iterator<Item = &DistancePoint> {
        self.points.iter().filter(|p| p.regime.is_fittable())
    }
}

/// A constrained least-squares problem in diagonal form.
#[derive(Debug, Clone)]
pub struct LagrangeProblem {
    s: Vec<f64>,
    b: Vec<f64>,
    b_perp_sq: f64,
    floor_ref: f64,
    s_min_sq: f64,
}

impl LagrangeProblem {
    /// `s`, `b` are paired spectral entries; `floor_ref` scales the floor test.
    pub fn new(s: Vec<f64>, b: Vec<f64>, b_perp_sq: f64, floor_ref: f64) -> Result<Self> {
        if s.len() != b.len() {
            return Err(Error::Dimension {
                expected: s.len(),
                got: b.len(),
            });
        }
        if b.iter().all(|v| *v == 0.0) && b_perp_sq == 0.0 {
            return Err(Error::InvalidInput("target vector is zero".into()));
        }
        let s_min_sq = s.iter().fold(f64::INFINITY, |m, v| m.min(v * v));
        Ok(LagrangeProblem {
            s,
            b,
            b_perp_sq,
            floor_ref,
            s_min_sq,
        })
    }

    /// `||b||`, the distance for an empty budget.
    pub fn target_norm(&self) -> f64 {
        (self.b.iter().map(|v| v * v).sum::<f64>() + self.b_perp_sq).sqrt()
    }

    pub fn radius(&self, lambda: f64) -> f64 {
        self.s
            .iter()
            .zip(&self.b)
            .map(|(s, b)| {
                let q = s * s + lambda;
                (s * b / q).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn distance(&self, lambda: f64) -> f64 {
        let inner: f64 = self
            .s
            .iter()
            .zip(&self.b)
            .map(|(s, b)| (b / (s * s + lambda)).powi(2))
            .sum();
        (lambda * lambda * inner + self.b_perp_sq).sqrt()
    }

    /// Norm of the exact preimage, the supremum of `R(lambda)`.
    pub fn radius_sup(&self) -> f64 {
        self.s
            .iter()
            .zip(&self.b)
            .map(|(s, b)| (b / s).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Minimiser coefficients for a given multiplier.
    pub fn element(&self, lambda: f64) -> Vec<f64> {
        self.s
            .iter()
            .zip(&self.b)
            .map(|(s, b)| s * b / (s * s + lambda))
            .collect()
    }

    fn regime_for(&self, d: f64, lambda: f64) -> Regime {
        if d <= FLOOR_FRACTION * self.floor_ref {
            Regime::Floor
        } else if lambda < self.s_min_sq {
            Regime::Discrete
        } else {
            Regime::Continuum
        }
    }

    /// Solves `R(lambda) = r` and evaluates the distance.
    pub fn solve(&self, r: f64) -> Result<DistancePoint> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {r}"
            )));
        }
        let r_lo_end = self.radius(LAMBDA_MIN);
        if r >= r_lo_end {
            let d = if r >= self.radius_sup() {
                self.b_perp_sq.sqrt()
            } else {
                self.distance(LAMBDA_MIN)
            };
            return Ok(DistancePoint {
                r,
                d,
                lambda: LAMBDA_MIN,
                regime: Regime::Saturated,
            });
        }
        let mut hi = LAMBDA_MAX;
        while self.radius(hi) > r {
            hi *= 1e10;
            if !hi.is_finite() {
                return Err(Error::Numeric(format!(
                    "no multiplier brackets radius {r}: R(1e300) = {}",
                    self.radius(1e300)
                )));
            }
        }
        let (mut lo_log, mut hi_log) = (LAMBDA_MIN.ln(), hi.ln());
        let mut lambda = hi;
        let mut achieved = self.radius(hi);
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo_log + hi_log);
            lambda = mid.exp();
            achieved = self.radius(lambda);
            if (achieved - r).abs() <= 1e-3 * R_TOLERANCE * r {
                break;
            }
            if achieved > r {
                lo_log = mid;
            } else {
                hi_log = mid;
            }
            if hi_log - lo_log < 1e-15 {
                break;
            }
        }
        if (achieved - r).abs() > R_TOLERANCE * r {
            return Err(Error::Numeric(format!(
                "bisection stalled: R({lambda:e}) = {achieved:e} for target {r:e}"
            )));
        }
        let d = self.distance(lambda);
        Ok(DistancePoint {
            r,
            d,
            lambda,
            regime: self.regime_for(d, lambda),
        })
    }
}

fn check_index(name: &str, v: f64, allow_zero: bool) -> Result<()> {
    if v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0)) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} out of range: {v}")))
    }
}

/// Lagrange form of `inf_{||xi|| <= R} ||(A*A)^nu x - (A*A)^{nu+kappa} xi||`.
pub fn source_problem(
    op: &SingularSystem,
    x_true: &CoefVector,
    nu: f64,
    kappa: f64,
) -> Result<LagrangeProblem> {
    check_index("nu", nu, true)?;
    check_index("kappa", kappa, false)?;
    let proj = op.project_domain(x_true)?;
    let sig = op.sigmas();
    let s = sig.iter().map(|v| v.powf(2.0 * (nu + kappa))).collect();
    let b = sig
        .iter()
        .zip(&proj.coefs)
        .map(|(v, x)| v.powf(2.0 * nu) * x)
        .collect();
    let perp = if nu == 0.0 { proj.perp_sq } else { 0.0 };
    LagrangeProblem::new(s, b, perp, x_true.norm())
}

/// Lagrange form of `inf_{||xi|| <= R} ||eps - A (A*A)^kappa xi||`.
pub fn noise_problem(op: &SingularSystem, eps: &CoefVector, kappa: f64) -> Result<LagrangeProblem> {
    check_index("kappa", kappa, true)?;
    if eps.norm() == 0.0 {
        return Err(Error::InvalidInput("noise vector is zero".into()));
    }
    let proj = op.project_range(eps)?;
    let s = op
        .sigmas()
        .iter()
        .map(|v| v.powf(1.0 + 2.0 * kappa))
        .collect();
    LagrangeProblem::new(s, proj.coefs, proj.perp_sq, eps.norm())
}

/// `d_kappa^nu(R)` together with the multiplier realising it.
pub fn distance_value(
    op: &SingularSystem,
    x_true: &CoefVector,
    nu: f64,
    kappa: f64,
    r: f64,
) -> Result<DistancePoint> {
    source_problem(op, x_true, nu, kappa)?.solve(r)
}

fn curve_points(problem: &LagrangeProblem, r_grid: &[f64]) -> Result<Vec<DistancePoint>> {
    if r_grid.is_empty() || r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "radius grid must be strictly increasing".into(),
        ));
    }
    let points: Vec<DistancePoint> = r_grid
        .par_iter()
        .map(|&r| {
            problem.solve(r).unwrap_or(DistancePoint {
                r,
                d: f64::NAN,
                lambda: f64::NAN,
                regime: Regime::Invalid,
            })
        })
        .collect();
    let mut last = f64::INFINITY;
    for p in points.iter().filter(|p| p.regime != Regime::Invalid) {
        if p.d > last * (1.0 + 1e-9) {
            return Err(Error::Numeric(format!(
                "distance increased to {:e} at R = {:e}",
                p.d, p.r
            )));
        }
        last = p.d;
    }
    Ok(points)
}

/// Samples `d_kappa^nu` on a strictly increasing radius grid.
pub fn distance_curve(
    op: &SingularSystem,
    x_true: &CoefVector,
    nu: f64,
    kappa: f64,
    r_grid: &[f64],
) -> Result<DistanceCurve> {
    let problem = source_problem(op, x_true, nu, kappa)?;
    Ok(DistanceCurve {
        nu,
        kappa,
        points: curve_points(&problem, r_grid)?,
        target_norm: problem.target_norm(),
    })
}

/// `d_eps(R) = inf_{||xi|| <= R} ||eps - A (A*A)^kappa xi||`.
pub fn noise_distance(op: &SingularSystem, eps: &CoefVector, kappa: f64, r: f64) -> Result<f64> {
    Ok(noise_problem(op, eps, kappa)?.solve(r)?.d)
}

pub fn noise_distance_curve(
    op: &SingularSystem,
    eps: &CoefVector,
    kappa: f64,
    r_grid: &[f64],
) -> Result<DistanceCurve> {
    let problem = noise_problem(op, eps, kappa)?;
    Ok(DistanceCurve {
        nu: 0.0,
        kappa,
        points: curve_points(&problem, r_grid)?,
        target_norm: problem.target_norm(),
    })
}

/// Closed-form exponents predicted for a smoothness index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentSet {
    /// `d(R) = O(R^e)`, `e = (mu + nu) / (mu - kappa)`.
    pub distance_exponent: f64,
    /// Error against noise level, `O(delta^e)`.
    pub rate_exponent: f64,
    /// `||xi_alpha|| = O(alpha^e)`, `e = mu - kappa`.
    pub source_growth_exponent: f64,
    /// A-priori parameter choice `alpha = c delta^e`.
    pub apriori_exponent: f64,
    pub mu: f64,
    pub kappa: f64,
}

/// Exponents for smoothness `mu`, residual index `nu` and benchmark index
/// `kappa`. The Hilbert-scale method replaces `mu` and `kappa` by
/// `p / (2a)` and `s/a + 1/2`.
pub fn theoretical_exponents(mu: f64, nu: f64, kappa: f64, method: Method) -> Result<ExponentSet> {
    check_index("nu", nu, true)?;
    let (mu, kappa) = match method {
        Method::Hilbert { a, p, s } => {
            method.check_admissible(p / (2.0 * a))?;
            (p / (2.0 * a), s / a + 0.5)
        }
        _ => {
            check_index("mu", mu, false)?;
            check_index("kappa", kappa, false)?;
            (mu, kappa)
        }
    };
    if mu >= kappa {
        return Err(Error::Domain(format!(
            "distance exponent needs mu < kappa, got mu = {mu}, kappa = {kappa}"
        )));
    }
    let (rate, apriori) = match method {
        Method::Classical => (2.0 * mu / (2.0 * mu + 1.0), 2.0 / (2.0 * mu + 1.0)),
        Method::HighOrder { kappa_order } => {
            let q = 2.0 * kappa_order as f64 + 2.0;
            let m = mu.min(kappa_order as f64 + 1.0);
            (2.0 * m / (2.0 * m + 1.0), q / (2.0 * mu + 1.0))
        }
        Method::Hilbert { a, p, s } => (p / (a + p), 2.0 * (s + a) / (a + p)),
    };
    Ok(ExponentSet {
        distance_exponent: (mu + nu) / (mu - kappa),
        rate_exponent: rate,
        source_growth_exponent: mu - kappa,
        apriori_exponent: apriori,
        mu,
        kappa,
    })
}

/// `[d]^{-1}(d_target)` by log-log interpolation between curve points.
pub fn inverse_distance(curve: &DistanceCurve, d_target: f64) -> Result<f64> {
    if !(d_target.is_finite() && d_target > 0.0) {
        return Err(Error::OutOfRange(format!(
            "target distance {d_target} is not positive"
        )));
    }
    let pts: Vec<&DistancePoint> = curve
        .points
        .iter()
        .filter(|p| p.regime != Regime::Invalid && p.d > 0.0)
        .collect();
    let (Some(first), Some(last)) = (pts.first(), pts.last()) else {
        return Err(Error::OutOfRange("curve has no usable points".into()));
    };
    if d_target > first.d || d_target < last.d {
        return Err(Error::OutOfRange(format!(
            "target distance {d_target:e} outside [{:e}, {:e}]",
            last.d, first.d
        )));
    }
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if d_target == a.d {
            return Ok(a.r);
        }
        if d_target <= a.d && d_target >= b.d {
            if a.d == b.d {
                return Ok(a.r);
            }
            let t = (d_target.ln() - a.d.ln()) / (b.d.ln() - a.d.ln());
            return Ok((a.r.ln() + t * (b.r.ln() - a.r.ln())).exp());
        }
    }
    Ok(last.r)
}

/// Norm helper for coefficient-space elements returned by [`LagrangeProblem::element`].
pub fn element_norm(xi: &[f64]) -> f64 {
    norm(xi)
}
