//! Tikhonov filters, Landweber iteration and source elements.
//!
//! Everything is evaluated against the singular system: a solution is kept
//! as its coefficients against the `v_i`, data as coefficients against the
//! `u_i` plus the norm of the part outside their span.

use crate::error::{Error, Result};
use crate::ops::{norm, CoefVector};
use crate::problems::InverseProblem;

/// Which regularizer produced a solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolutionKind {
    Tikhonov { kappa: u32 },
    HilbertScale { s: f64 },
    Landweber { beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedSolution {
    /// Coefficients against the right singular vectors `v_i`.
    pub coefs: CoefVector,
    pub kind: SolutionKind,
    pub alpha: Option<f64>,
    pub iteration: Option<usize>,
    pub residual_norm: f64,
    pub error_norm: Option<f64>,
    /// `||xi||` with `x = A* xi`.
    pub source_norm_half: Option<f64>,
    /// `||xi||` with `x = A*A xi`; only for noise-free classical Tikhonov.
    pub source_norm_one: Option<f64>,
    /// `||A* xi - x|| / ||x||` for the half representation.
    pub range_defect: Option<f64>,
}

impl RegularizedSolution {
    /// The solution in native domain coordinates.
    pub fn native(&self, problem: &InverseProblem) -> Vec<f64> {
        problem.op().synthesize_domain(&self.coefs)
    }
}

/// Data resolved against the left singular vectors.
#[derive(Debug, Clone)]
pub struct ProjectedData {
    pub coefs: Vec<f64>,
    pub perp_sq: f64,
    /// True when the data is bit-identical to the exact data of the problem.
    pub noise_free: bool,
}

impl ProjectedData {
    pub fn new(problem: &InverseProblem, data: &CoefVector) -> Result<Self> {
        let proj = problem.op().project_range(data)?;
        Ok(ProjectedData {
            coefs: proj.coefs,
            perp_sq: proj.perp_sq,
            noise_free: data == problem.y_exact(),
        })
    }

    pub fn norm(&self) -> f64 {
        (self.coefs.iter().map(|c| c * c).sum::<f64>() + self.perp_sq).sqrt()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )))
    }
}

struct Filtered {
    coefs: Vec<f64>,
    residual_sq: f64,
    xi: Vec<f64>,
    xi_perp_sq: f64,
}

fn filter_tikhonov(sigmas: &[f64], data: &ProjectedData, alpha: f64, kappa: u32) -> Filtered {
    let p = 2 * kappa as i32 + 2;
    let mut coefs = Vec::with_capacity(sigmas.len());
    let mut xi = Vec::with_capacity(sigmas.len());
    let mut residual_sq = 0.0;
    for (s, y) in sigmas.iter().zip(&data.coefs) {
        let d = s.powi(p) + alpha;
        let r = alpha * y / d;
        coefs.push(s.powi(p - 1) * y / d);
        xi.push(s.powi(p - 2) * r / alpha);
        residual_sq += r * r;
    }
    let xi_perp_sq = if kappa == 0 {
        data.perp_sq / (alpha * alpha)
    } else {
        0.0
    };
    Filtered {
        coefs,
        residual_sq: residual_sq + data.perp_sq,
        xi,
        xi_perp_sq,
    }
}

fn filter_hilbert(
    sigmas: &[f64],
    weights: &[f64],
    data: &ProjectedData,
    alpha: f64,
    s_index: f64,
) -> Filtered {
    let mut coefs = Vec::with_capacity(sigmas.len());
    let mut xi = Vec::with_capacity(sigmas.len());
    let mut residual_sq = 0.0;
    for ((s, t), y) in sigmas.iter().zip(weights).zip(&data.coefs) {
        let pen = alpha * t.powf(2.0 * s_index);
        let d = s.powi(2) + pen;
        let r = pen * y / d;
        coefs.push(s * y / d);
        xi.push(r / pen);
        residual_sq += r * r;
    }
    let xi_perp_sq = if s_index == 0.0 {
        data.perp_sq / (alpha * alpha)
    } else {
        0.0
    };
    Filtered {
        coefs,
        residual_sq: residual_sq + data.perp_sq,
        xi,
        xi_perp_sq,
    }
}

fn range_defect(sigmas: &[f64], xi: &[f64], coefs: &[f64]) -> f64 {
    let scale = norm(coefs);
    if scale == 0.0 {
        return 0.0;
    }
    let diff: f64 = sigmas
        .iter()
        .zip(xi)
        .zip(coefs)
        .map(|((s, w), c)| (s * w - c).powi(2))
        .sum();
    diff.sqrt() / scale
}

fn assemble(
    problem: &InverseProblem,
    data: &ProjectedData,
    f: Filtered,
    alpha: f64,
    kind: SolutionKind,
) -> Result<RegularizedSolution> {
    let sigmas = problem.op().sigmas();
    let defect = range_defect(sigmas, &f.xi, &f.coefs);
    let xi_norm = (f.xi.iter().map(|v| v * v).sum::<f64>() + f.xi_perp_sq).sqrt();
    let error = problem.error_of_coefs(&f.coefs);
    let source_one = match kind {
        SolutionKind::Tikhonov { kappa: 0 } if data.noise_free => Some(error / alpha),
        _ => None,
    };
    Ok(RegularizedSolution {
        coefs: CoefVector::new(f.coefs)?,
        kind,
        alpha: Some(alpha),
        iteration: None,
        residual_norm: f.residual_sq.sqrt(),
        error_norm: Some(error),
        source_norm_half: Some(xi_norm),
        source_norm_one: source_one,
        range_defect: Some(defect),
    })
}

/// Tikhonov solution of order `kappa_order` from pre-projected data.
pub fn tikhonov_projected(
    problem: &InverseProblem,
    data: &ProjectedData,
    alpha: f64,
    kappa_order: u32,
) -> Result<RegularizedSolution> {
    check_alpha(alpha)?;
    let f = filter_tikhonov(problem.op().sigmas(), data, alpha, kappa_order);
    assemble(
        problem,
        data,
        f,
        alpha,
        SolutionKind::Tikhonov { kappa: kappa_order },
    )
}

/// Minimizer of `||A x - y||^2 + alpha ||(A*A)^{-kappa/2} x||^2`, i.e. the
/// filter `sigma^{2k+1} / (sigma^{2k+2} + alpha)`. `kappa_order = 0` is
/// classical Tikhonov.
pub fn tikhonov(
    problem: &InverseProblem,
    data: &CoefVector,
    alpha: f64,
    kappa_order: u32,
) -> Result<RegularizedSolution> {
    check_alpha(alpha)?;
    tikhonov_projected(
        problem,
        &ProjectedData::new(problem, data)?,
        alpha,
        kappa_order,
    )
}

pub fn tikhonov_hilbert_scale_projected(
    problem: &InverseProblem,
    data: &ProjectedData,
    alpha: f64,
    s: f64,
) -> Result<RegularizedSolution> {
    check_alpha(alpha)?;
    let weights = problem.hilbert_weights().ok_or_else(|| {
        Error::Configuration("Hilbert-scale Tikhonov needs a problem with scale weights".into())
    })?;
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "penalty index must be >= 0, got {s}"
        )));
    }
    let f = filter_hilbert(problem.op().sigmas(), weights, data, alpha, s);
    assemble(problem, data, f, alpha, SolutionKind::HilbertScale { s })
}

/// Minimizer of `||A x - y||^2 + alpha ||x||_s^2` on a diagonal Hilbert scale.
pub fn tikhonov_hilbert_scale(
    problem: &InverseProblem,
    data: &CoefVector,
    alpha: f64,
    s: f64,
) -> Result<RegularizedSolution> {
    check_alpha(alpha)?;
    tikhonov_hilbert_scale_projected(problem, &ProjectedData::new(problem, data)?, alpha, s)
}

/// Iteration indices `round(2^{j / per_octave})` up to `k_max`, plus `k_max`.
pub fn geometric_checkpoints(k_max: usize, per_octave: usize) -> Vec<usize> {
    let per_octave = per_octave.max(1);
    let mut out = Vec::new();
    let mut j = 0u32;
    loop {
        let k = 2f64.powf(j as f64 / per_octave as f64).round() as usize;
        if k >= k_max {
            break;
        }
        if out.last() != Some(&k) {
            out.push(k);
        }
        j += 1;
    }
    if k_max > 0 {
        out.push(k_max);
    }
    out
}

/// Landweber iterates at `{1, 2, 4, ..., k_max}`.
pub fn landweber(
    problem: &InverseProblem,
    data: &CoefVector,
    beta: f64,
    k_max: usize,
    x0: Option<&CoefVector>,
    track_source: bool,
) -> Result<Vec<RegularizedSolution>> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be positive".into()));
    }
    landweber_at(
        problem,
        data,
        beta,
        &geometric_checkpoints(k_max, 1),
        x0,
        track_source,
    )
}

/// Landweber iterates `x_{k+1} = x_k - beta A*(A x_k - y)` at the given
/// (strictly increasing) iteration counts, evaluated in closed form.
///
/// `x0` is given against the `v_i`. With `track_source`, the source element
/// `w_k = beta sum_{j<k} (I - beta AA*)^j (y - A x0)` with `x_k = x0 + A* w_k`
/// is reported through `source_norm_half`.
pub fn landweber_at(
    problem: &InverseProblem,
    data: &CoefVector,
    beta: f64,
    checkpoints: &[usize],
    x0: Option<&CoefVector>,
    track_source: bool,
) -> Result<Vec<RegularizedSolution>> {
    let sigmas = problem.op().sigmas();
    let bound = 2.0 / (sigmas[0] * sigmas[0]);
    if !(beta.is_finite() && beta > 0.0 && beta < bound) {
        return Err(Error::InvalidParameter(format!(
            "step size must lie in (0, {bound}), got {beta}"
        )));
    }
    if checkpoints.is_empty() || checkpoints[0] == 0 || checkpoints.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidParameter(
            "checkpoints must be positive and strictly increasing".into(),
        ));
    }
    if *checkpoints.last().unwrap() > i32::MAX as usize {
        return Err(Error::InvalidParameter("iteration count too large".into()));
    }
    let start: Vec<f64> = match x0 {
        Some(v) => {
            if v.len() != sigmas.len() {
                return Err(Error::Dimension {
                    expected: sigmas.len(),
                    got: v.len(),
                });
            }
            v.to_vec()
        }
        None => vec![0.0; sigmas.len()],
    };
    let proj = ProjectedData::new(problem, data)?;
    let r0: Vec<f64> = sigmas
        .iter()
        .zip(&proj.coefs)
        .zip(&start)
        .map(|((s, y), x)| y - s * x)
        .collect();

    checkpoints
        .iter()
        .map(|&k| {
            let mut coefs = Vec::with_capacity(sigmas.len());
            let mut w = Vec::with_capacity(sigmas.len());
            let mut residual_sq = proj.perp_sq;
            for ((s, r), x) in sigmas.iter().zip(&r0).zip(&start) {
                let (qk, one_minus_qk) = contraction_power(beta * s * s, k);
                let wi = one_minus_qk / (s * s) * r;
                coefs.push(x + s * wi);
                w.push(wi);
                residual_sq += (qk * r).powi(2);
            }
            let w_norm = (w.iter().map(|v| v * v).sum::<f64>()
                + (k as f64 * beta).powi(2) * proj.perp_sq)
                .sqrt();
            let step: Vec<f64> = coefs.iter().zip(&start).map(|(c, x)| c - x).collect();
            let error = problem.error_of_coefs(&coefs);
            Ok(RegularizedSolution {
                coefs: CoefVector::new(coefs)?,
                kind: SolutionKind::Landweber { beta },
                alpha: None,
                iteration: Some(k),
                residual_norm: residual_sq.sqrt(),
                error_norm: Some(error),
                source_norm_half: track_source.then_some(w_norm),
                source_norm_one: None,
                range_defect: track_source.then(|| range_defect(sigmas, &w, &step)),
            })
        })
        .collect()
}

/// `(q^k, 1 - q^k)` for `q = 1 - h`, accurate when `h` is tiny.
fn contraction_power(h: f64, k: usize) -> (f64, f64) {
    if h <= 1.0 {
        let l = (k as f64) * (-h).ln_1p();
        (l.exp(), -l.exp_m1())
    } else {
        let qk = (1.0 - h).powi(k as i32);
        (qk, 1.0 - qk)
    }
}

/// Source representation requested from [`source_element`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// `x = A* xi`.
    Half,
    /// `x = A*A xi`.
    One,
}

/// Source element of a Tikhonov-family solution, in native coordinates
/// (range space for `Half`, domain space for `One`), and its norm.
///
/// `Half` uses `xi = (y - A x) / alpha` for classical Tikhonov and its
/// generalisations `(AA*)^k (y - A x) / alpha` and `T^{-2s}`-weighted
/// residuals otherwise. `One` uses `xi = (x_true - x) / alpha` and needs
/// noise-free data.
pub fn source_element(
    problem: &InverseProblem,
    sol: &RegularizedSolution,
    data: &CoefVector,
    representation: Representation,
) -> Result<(CoefVector, f64)> {
    let alpha = sol.alpha.ok_or_else(|| {
        Error::Unsupported(
            "source elements of Landweber iterates are tracked by the iteration".into(),
        )
    })?;
    let proj = ProjectedData::new(problem, data)?;
    let op = problem.op();
    let f = match sol.kind {
        SolutionKind::Tikhonov { kappa } => filter_tikhonov(op.sigmas(), &proj, alpha, kappa),
        SolutionKind::HilbertScale { s } => {
            let weights = problem
                .hilbert_weights()
                .ok_or_else(|| Error::Configuration("problem has no scale weights".into()))?;
            filter_hilbert(op.sigmas(), weights, &proj, alpha, s)
        }
        SolutionKind::Landweber { .. } => unreachable!("Landweber solutions carry no alpha"),
    };
    let mismatch: f64 = f
        .coefs
        .iter()
        .zip(sol.coefs.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    if mismatch.sqrt() > 1e-12 * (1.0 + norm(&sol.coefs)) {
        return Err(Error::InvalidInput(
            "solution was not computed from this data".into(),
        ));
    }
    match representation {
        Representation::Half => {
            let mut xi = op.synthesize_range(&f.xi);
            if f.xi_perp_sq > 0.0 {
                let inside = op.synthesize_range(&proj.coefs);
                for ((v, y), p) in xi.iter_mut().zip(data.iter()).zip(&inside) {
                    *v += (y - p) / alpha;
                }
            }
            let n = norm(&xi);
            Ok((CoefVector::new(xi)?, n))
        }
        Representation::One => {
            if !proj.noise_free {
                return Err(Error::Unsupported(
                    "the x = A*A xi representation needs noise-free data".into(),
                ));
            }
            if sol.kind != (SolutionKind::Tikhonov { kappa: 0 }) {
                return Err(Error::Unsupported(
                    "the x = A*A xi representation is defined for classical Tikhonov".into(),
                ));
            }
            let x = op.synthesize_domain(&sol.coefs);
            let xi: Vec<f64> = problem
                .x_true()
                .iter()
                .zip(&x)
                .map(|(t, v)| (t - v) / alpha)
                .collect();
            let n = norm(&xi);
            Ok((CoefVector::new(xi)?, n))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{build_svd_operator, ApplyMode, SingularSystem};
    use crate::problems::{add_noise, hilbert_norm, make_diagonal_model, make_hilbert_scale_model};
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn diag_problem(sigmas: &[f64], x: &[f64]) -> InverseProblem {
        InverseProblem::new(
            SingularSystem::diagonal(sigmas.to_vec()).unwrap(),
            CoefVector::new(x.to_vec()).unwrap(),
            None,
            None,
        )
        .unwrap()
    }

    fn cv(v: &[f64]) -> CoefVector {
        CoefVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn scalar_closed_forms() {
        let p = diag_problem(&[1.0], &[2.0]);
        let y = cv(&[2.0]);
        assert_eq!(tikhonov(&p, &y, 1.0, 0).unwrap().coefs[0], 1.0);
        assert_eq!(tikhonov(&p, &y, 1.0, 1).unwrap().coefs[0], 1.0);
        assert!(matches!(
            tikhonov(&p, &y, 0.0, 0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(tikhonov(&p, &y, -1.0, 0).is_err());
    }

    #[test]
    fn two_component_filter_matches_dense_solve() {
        let p = diag_problem(&[1.0, 0.5], &[1.0, 2.0]);
        let y = cv(&[1.0, 1.0]);
        let sol = tikhonov(&p, &y, 0.25, 0).unwrap();
        assert!((sol.coefs[0] - 0.8).abs() < 1e-15 && (sol.coefs[1] - 1.0).abs() < 1e-15);
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]));
        let lhs = a.transpose() * &a + DMatrix::identity(2, 2) * 0.25;
        let dense = lhs
            .lu()
            .solve(&(a.transpose() * DVector::from_vec(vec![1.0, 1.0])))
            .unwrap();
        assert!((dense[0] - sol.coefs[0]).abs() < 1e-10 && (dense[1] - sol.coefs[1]).abs() < 1e-10);
    }

    #[test]
    fn dense_high_order_matches_normal_equations() {
        let a = DMatrix::from_fn(8, 8, |i, j| {
            1.0 / (1.0 + i as f64 + 2.0 * j as f64) + if i == j { 0.05 } else { 0.0 }
        });
        let op = build_svd_operator(&a, false).unwrap();
        let x: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin()).collect();
        let p = InverseProblem::new(op, cv(&x), None, None).unwrap();
        let y = p.y_exact().clone();
        for kappa in 0..3u32 {
            let alpha = 1e-3;
            let sol = tikhonov(&p, &y, alpha, kappa).unwrap();
            let ata = a.transpose() * &a;
            let mut pow = DMatrix::identity(8, 8);
            for _ in 0..kappa {
                pow = &pow * &ata;
            }
            let lhs = &pow * &ata + DMatrix::identity(8, 8) * alpha;
            let rhs = &pow * a.transpose() * DVector::from_column_slice(&y);
            let dense = lhs.lu().solve(&rhs).unwrap();
            let native = DVector::from_vec(sol.native(&p));
            assert!(
                (&dense - &native).norm() <= 1e-8 * dense.norm(),
                "kappa {kappa}"
            );
        }
    }

    #[test]
    fn hilbert_scale_closed_form_and_reduction() {
        let p = InverseProblem::new(
            SingularSystem::diagonal(vec![1.0]).unwrap(),
            cv(&[2.0]),
            None,
            Some(vec![2.0]),
        )
        .unwrap();
        let sol = tikhonov_hilbert_scale(&p, &cv(&[2.0]), 0.25, 1.0).unwrap();
        assert!((sol.coefs[0] - 1.0).abs() < 1e-15);

        let h = make_hilbert_scale_model(300, 1.0, 1.0, 2.0).unwrap();
        let data = add_noise(&h, 0.01, 3).unwrap().y_delta;
        let a = tikhonov_hilbert_scale(&h, &data, 1e-4, 0.0).unwrap();
        let b = tikhonov(&h, &data, 1e-4, 0).unwrap();
        for (u, v) in a.coefs.iter().zip(b.coefs.iter()) {
            assert!((u - v).abs() <= 1e-14);
        }
        assert_eq!(a.source_norm_half, b.source_norm_half);
    }

    #[test]
    fn hilbert_scale_needs_weights() {
        let p = diag_problem(&[1.0], &[1.0]);
        assert!(matches!(
            tikhonov_hilbert_scale(&p, &cv(&[1.0]), 0.1, 1.0),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn oversmoothing_solution_has_finite_penalty() {
        let n = 2000;
        let p = make_hilbert_scale_model(n, 1.0, 1.0, 2.0).unwrap();
        let sol = tikhonov_hilbert_scale(&p, p.y_exact(), 1e-6, 2.0).unwrap();
        let w = p.hilbert_weights().unwrap();
        let at = |m: usize, c: &[f64]| hilbert_norm(&w[..m], &c[..m], 2.0);
        // partial sums of the solution settle, those of the exact solution keep growing
        assert!(at(n, &sol.coefs) / at(n / 2, &sol.coefs) < 1.0 + 1e-6);
        assert!(at(n, p.x_true()) / at(n / 2, p.x_true()) > 1.9);
    }

    #[test]
    fn source_element_scalar() {
        let p = diag_problem(&[1.0], &[2.0]);
        let y = cv(&[2.0]);
        let sol = tikhonov(&p, &y, 1.0, 0).unwrap();
        let (xi, n) = source_element(&p, &sol, &y, Representation::Half).unwrap();
        assert_eq!(xi[0], 1.0);
        assert_eq!(n, 1.0);
        let (xi1, _) = source_element(&p, &sol, &y, Representation::One).unwrap();
        assert_eq!(xi1[0], 1.0);
    }

    #[test]
    fn source_one_rejected_for_noisy_data() {
        let p = make_diagonal_model(50, 2.0, 2.0, 0).unwrap();
        let data = add_noise(&p, 0.01, 1).unwrap().y_delta;
        let sol = tikhonov(&p, &data, 1e-3, 0).unwrap();
        assert!(sol.source_norm_one.is_none());
        assert!(matches!(
            source_element(&p, &sol, &data, Representation::One),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn source_element_with_rank_deficient_data() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.5, 0.0, 0.0]);
        let op = build_svd_operator(&a, false).unwrap();
        let p = InverseProblem::new(op, cv(&[1.0, 1.0]), None, None).unwrap();
        let y = cv(&[1.1, 0.4, 0.3]);
        let alpha = 0.1;
        let sol = tikhonov(&p, &y, alpha, 0).unwrap();
        let (xi, n) = source_element(&p, &sol, &y, Representation::Half).unwrap();
        let x = sol.native(&p);
        let ax = &a * DVector::from_vec(x.clone());
        for i in 0..3 {
            assert!((xi[i] - (y[i] - ax[i]) / alpha).abs() < 1e-12);
        }
        assert!((n - sol.residual_norm / alpha).abs() < 1e-12);
        let back = p.op().apply(ApplyMode::Adjoint, &xi).unwrap();
        assert!((back[0] - x[0]).abs() < 1e-12 && (back[1] - x[1]).abs() < 1e-12);
    }

    #[test]
    fn landweber_scalar_examples() {
        let p = diag_problem(&[1.0], &[2.0]);
        let y = cv(&[2.0]);
        let it = landweber_at(&p, &y, 1.0, &[1, 5, 100], None, true).unwrap();
        assert_eq!(it[0].coefs[0], 2.0);
        assert_eq!(it[2].coefs[0], 2.0);
        assert!(landweber(&p, &y, 2.0, 10, None, false).is_err());
        assert!(landweber(&p, &y, 0.0, 10, None, false).is_err());
    }

    #[test]
    fn landweber_summed_matches_loop() {
        let p = diag_problem(&[1.0, 0.5], &[1.0, 2.0]);
        let y = cv(&[1.0, 1.0]);
        let summed = landweber_at(&p, &y, 1.0, &[3], None, true).unwrap();
        let mut x = [0.0, 0.0];
        let s = [1.0, 0.5];
        for _ in 0..3 {
            for ((xi, si), yi) in x.iter_mut().zip(s).zip(y.iter()) {
                *xi -= si * (si * *xi - yi);
            }
        }
        for (c, xi) in summed[0].coefs.iter().zip(x) {
            assert!((c - xi).abs() < 1e-12);
        }
    }

    #[test]
    fn landweber_with_start_and_noise_perp() {
        let a = DMatrix::from_row_slice(3, 2, &[0.9, 0.1, -0.2, 0.6, 0.3, 0.3]);
        let op = build_svd_operator(&a, true).unwrap();
        let scale = op.norm_scale();
        let p = InverseProblem::new(op, cv(&[0.5, -1.0]), None, None).unwrap();
        let y = cv(&[0.2, -0.4, 0.9]);
        let x0_native = [0.3, 0.1];
        let x0 = cv(&p.op().project_domain(&x0_native).unwrap().coefs);
        let beta = 0.8;
        let k = 7;
        let it = landweber_at(&p, &y, beta, &[k], Some(&x0), true).unwrap();
        let a = a / scale;
        let yv = DVector::from_column_slice(&y);
        let mut x = DVector::from_column_slice(&x0_native);
        for _ in 0..k {
            x -= a.transpose() * (&a * &x - &yv) * beta;
        }
        let got = DVector::from_vec(it[0].native(&p));
        assert!((&got - &x).norm() < 1e-12);
        assert!((it[0].residual_norm - (&a * &x - &yv).norm()).abs() < 1e-12);
        // explicit source element w_k
        let mut w = DVector::zeros(3);
        let mut term = &yv - &a * DVector::from_column_slice(&x0_native);
        for _ in 0..k {
            w += &term * beta;
            term = &term - &a * (a.transpose() * &term) * beta;
        }
        assert!((it[0].source_norm_half.unwrap() - w.norm()).abs() < 1e-12);
    }

    #[test]
    fn checkpoints_are_geometric() {
        assert_eq!(geometric_checkpoints(10, 1), vec![1, 2, 4, 8, 10]);
        assert_eq!(geometric_checkpoints(8, 1), vec![1, 2, 4, 8]);
        assert_eq!(geometric_checkpoints(1, 1), vec![1]);
        let dense = geometric_checkpoints(1000, 8);
        assert!(dense.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*dense.last().unwrap(), 1000);
    }

    #[test]
    fn saturated_residual_band_for_smooth_solution() {
        let p = make_diagonal_model(2000, 2.0, crate::problems::beta_for_mu(1.25, 2.0), 0).unwrap();
        let ratios: Vec<f64> = (0..=20)
            .map(|j| 10f64.powf(-2.0 - 0.1 * j as f64))
            .map(|a| tikhonov(&p, p.y_exact(), a, 0).unwrap().residual_norm / a)
            .collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.0 && hi / lo <= 10.0);
    }

    proptest! {
        #[test]
        fn classical_filter_bounds(s in 1e-6f64..1.0, a in 1e-8f64..1.0, ds in 1e-3f64..0.5, da in 1e-3f64..0.5) {
            let f = |s: f64, a: f64| s * s / (s * s + a);
            prop_assert!(f(s, a) > 0.0 && f(s, a) < 1.0);
            prop_assert!(f(s * (1.0 + ds), a) > f(s, a));
            prop_assert!(f(s, a * (1.0 + da)) < f(s, a));
        }

        #[test]
        fn residual_nondecreasing_in_alpha(
            seed in 0u64..200,
            kappa in 0u32..3,
            lo in -10.0f64..0.0,
            step in 0.01f64..2.0,
        ) {
            let p = make_diagonal_model(200, 1.5, 1.5, 0).unwrap();
            let data = add_noise(&p, 0.01, seed).unwrap().y_delta;
            let r1 = tikhonov(&p, &data, 10f64.powf(lo), kappa).unwrap().residual_norm;
            let r2 = tikhonov(&p, &data, 10f64.powf(lo + step), kappa).unwrap().residual_norm;
            prop_assert!(r2 >= r1);
        }

        #[test]
        fn range_invariant_holds(
            seed in 0u64..200,
            kappa in 0u32..3,
            la in -12.0f64..1.0,
            rel in 0.0f64..0.05,
        ) {
            let p = make_diagonal_model(300, 2.0, 2.0, 0).unwrap();
            let data = add_noise(&p, rel, seed).unwrap().y_delta;
            let sol = tikhonov(&p, &data, 10f64.powf(la), kappa).unwrap();
            prop_assert!(sol.range_defect.unwrap() <= 1e-9);
            if kappa == 0 {
                let ratio = sol.source_norm_half.unwrap() * sol.alpha.unwrap() / sol.residual_norm;
                prop_assert!((ratio - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn landweber_source_identity(seed in 0u64..100, k in 1usize..500) {
            let p = make_diagonal_model(100, 1.0, 1.5, 0).unwrap();
            let data = add_noise(&p, 0.01, seed).unwrap().y_delta;
            let it = landweber_at(&p, &data, 1.0, &[k], None, true).unwrap();
            prop_assert!(it[0].range_defect.unwrap() <= 1e-9);
        }
    }
}
