//! Log-log least-squares rate fits.

use serde::Serialize;

use crate::error::{Error, Result};

/// Fits with a lower coefficient of determination do not count as evidence.
pub const MIN_R_SQUARED: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Half-open index range of the input points used.
    pub window: (usize, usize),
}

impl RateEstimate {
    pub fn is_valid(&self) -> bool {
        self.r_squared >= MIN_R_SQUARED
    }
}

/// Ordinary least squares of `log y` against `log x` over `window`
/// (all points when `None`).
pub fn fit_rate(points: &[(f64, f64)], window: Option<(usize, usize)>) -> Result<RateEstimate> {
    let (start, end) = window.unwrap_or((0, points.len()));
    if start > end || end > points.len() {
        return Err(Error::InvalidParameter(format!(
            "window {start}..{end} outside 0..{}",
            points.len()
        )));
    }
    let pts = &points[start..end];
    if pts.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 points, got {}",
            pts.len()
        )));
    }
    if let Some((x, y)) = pts
        .iter()
        .find(|(x, y)| !(x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0))
    {
        return Err(Error::Domain(format!(
            "log-log fit needs positive values, got ({x}, {y})"
        )));
    }
    let n = pts.len() as f64;
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(RateEstimate {
        slope,
        intercept,
        r_squared,
        window: (start, end),
    })
}

/// Window dropping the first and last `fraction` of `len` points.
pub fn trimmed_window(len: usize, fraction: f64) -> (usize, usize) {
    let cut = (len as f64 * fraction).floor() as usize;
    if len < 2 * cut + 2 {
        (0, len)
    } else {
        (cut, len - cut)
    }
}
