//! Regularization parameter choice.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ops::CoefVector;
use crate::problems::InverseProblem;
use crate::regularizers::{
    tikhonov_hilbert_scale_projected, tikhonov_projected, ProjectedData, RegularizedSolution,
};

/// Default discrepancy factor.
pub const DEFAULT_TAU: f64 = 1.5;
/// Relative width at which the discrepancy bisection stops.
pub const DISCREPANCY_RTOL: f64 = 1e-3;

/// A Tikhonov-type regularizer, used both as a solver handle and to select
/// exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Classical,
    HighOrder { kappa_order: u32 },
    Hilbert { a: f64, p: f64, s: f64 },
}

impl Method {
    /// Checks the smoothness range in which the a-priori rule is justified.
    pub fn check_admissible(&self, mu: f64) -> Result<()> {
        match *self {
            Method::Classical => {
                if mu > 0.0 && mu <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "classical Tikhonov needs 0 < mu <= 1, got mu = {mu}"
                    )))
                }
            }
            Method::HighOrder { kappa_order } => {
                let cap = kappa_order as f64 + 1.0;
                if mu > 0.0 && mu < cap {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "order-{kappa_order} Tikhonov needs 0 < mu < {cap}, got mu = {mu}"
                    )))
                }
            }
            Method::Hilbert { a, p, s } => {
                if !(a > 0.0 && p > 0.0 && s >= 0.0) {
                    Err(Error::Domain(format!(
                        "need a > 0, p > 0, s >= 0, got a={a}, p={p}, s={s}"
                    )))
                } else if p > 2.0 * s + a {
                    Err(Error::Domain(format!(
                        "need p <= 2s + a, got p = {p} > {}",
                        2.0 * s + a
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn solve(
        &self,
        problem: &InverseProblem,
        data: &ProjectedData,
        alpha: f64,
    ) -> Result<RegularizedSolution> {
        match *self {
            Method::Classical => tikhonov_projected(problem, data, alpha, 0),
            Method::HighOrder { kappa_order } => {
                tikhonov_projected(problem, data, alpha, kappa_order)
            }
            Method::Hilbert { s, .. } => tikhonov_hilbert_scale_projected(problem, data, alpha, s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Apriori,
    Discrepancy,
    Oracle,
}

impl Rule {
    pub fn as_str(&self) -> &'static str {
        match self {
            Rule::Apriori => "apriori",
            Rule::Discrepancy => "discrepancy",
            Rule::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceResult {
    pub alpha: f64,
    pub rule: Rule,
    pub tau: Option<f64>,
    pub diagnostics: BTreeMap<String, f64>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// `alpha = c delta^e` with the method's a-priori exponent `e`.
pub fn alpha_apriori(delta_abs: f64, mu: f64, method: Method, c: f64) -> Result<ChoiceResult> {
    positive("noise level", delta_abs)?;
    positive("constant", c)?;
    method.check_admissible(mu)?;
    let exponent = match method {
        Method::Classical => 2.0 / (2.0 * mu + 1.0),
        Method::HighOrder { kappa_order } => (2.0 * kappa_order as f64 + 2.0) / (2.0 * mu + 1.0),
        Method::Hilbert { a, p, s } => 2.0 * (s + a) / (a + p),
    };
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("exponent".to_string(), exponent);
    Ok(ChoiceResult {
        alpha: c * delta_abs.powf(exponent),
        rule: Rule::Apriori,
        tau: None,
        diagnostics,
    })
}

/// Largest `alpha` in `interval` with `||A x_alpha - y|| <= tau delta`.
pub fn alpha_discrepancy(
    problem: &InverseProblem,
    data: &CoefVector,
    delta_abs: f64,
    tau: f64,
    method: Method,
    interval: (f64, f64),
) -> Result<ChoiceResult> {
    if delta_abs == 0.0 {
        return Err(Error::Unsupported(
            "the discrepancy principle is undefined for noise-free data (delta = 0)".into(),
        ));
    }
    positive("noise level", delta_abs)?;
    if !(tau.is_finite() && tau >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "tau must be at least 1, got {tau}"
        )));
    }
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "bad alpha interval [{lo}, {hi}]"
        )));
    }
    let proj = ProjectedData::new(problem, data)?;
    let target = tau * delta_abs;
    let residual = |a: f64| method.solve(problem, &proj, a).map(|s| s.residual_norm);

    let finish = |alpha: f64, iterations: usize| -> Result<ChoiceResult> {
        let sol = method.solve(problem, &proj, alpha)?;
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("residual".to_string(), sol.residual_norm);
        diagnostics.insert("target".to_string(), target);
        diagnostics.insert("iterations".to_string(), iterations as f64);
        if let Some(e) = sol.error_norm {
            diagnostics.insert("error".to_string(), e);
        }
        Ok(ChoiceResult {
            alpha,
            rule: Rule::Discrepancy,
            tau: Some(tau),
            diagnostics,
        })
    };

    if residual(hi)? <= target {
        return finish(hi, 0);
    }
    let r_lo = residual(lo)?;
    if r_lo > target {
        return Err(Error::NoSolution(format!(
            "residual {r_lo:e} at alpha = {lo:e} already exceeds tau*delta = {target:e}"
        )));
    }
    let (mut good, mut bad) = (lo.ln(), hi.ln());
    let mut iterations = 0;
    while bad - good > DISCREPANCY_RTOL.ln_1p() {
        let mid = 0.5 * (good + bad);
        if residual(mid.exp())? <= target {
            good = mid;
        } else {
            bad = mid;
        }
        iterations += 1;
    }
    finish(good.exp(), iterations)
}

/// Grid value of `alpha` minimising `||x_alpha - x_true||`, ties toward
/// larger `alpha`.
pub fn alpha_oracle(
    problem: &InverseProblem,
    data: &CoefVector,
    method: Method,
    grid: &[f64],
) -> Result<ChoiceResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("alpha grid is empty".into()));
    }
    let proj = ProjectedData::new(problem, data)?;
    let errors: Vec<f64> = grid
        .par_iter()
        .map(|&a| {
            method
                .solve(problem, &proj, a)
                .map(|s| s.error_norm.unwrap_or(f64::INFINITY))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for i in 1..grid.len() {
        if errors[i] < errors[best] || (errors[i] == errors[best] && grid[i] > grid[best]) {
            best = i;
        }
    }
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("error".to_string(), errors[best]);
    Ok(ChoiceResult {
        alpha: grid[best],
        rule: Rule::Oracle,
        tau: None,
        diagnostics,
    })
}
