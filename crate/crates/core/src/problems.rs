//! Test problems and noise generation.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::ops::{build_svd_operator, norm, ApplyMode, CoefVector, Projection, SingularSystem};

/// Offset added to the critical tail exponent of the Hilbert-scale model.
pub const HILBERT_TAIL_OFFSET: f64 = 0.01;

/// A linear inverse problem with known exact solution.
#[derive(Debug, Clone)]
pub struct InverseProblem {
    op: SingularSystem,
    x_true: CoefVector,
    y_exact: CoefVector,
    mu_nominal: Option<f64>,
    hilbert_weights: Option<Vec<f64>>,
    s_hint: Option<f64>,
    x_proj: Projection,
}

impl InverseProblem {
    /// Builds a problem from an operator and the exact solution in native
    /// domain coordinates. The exact data is computed as `A x_true`.
    pub fn new(
        op: SingularSystem,
        x_true: CoefVector,
        mu_nominal: Option<f64>,
        hilbert_weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let y_exact = op.apply(ApplyMode::Forward, &x_true)?;
        if let Some(w) = &hilbert_weights {
            if w.len() != op.rank() {
                return Err(Error::Dimension {
                    expected: op.rank(),
                    got: w.len(),
                });
            }
            if w.iter().any(|t| !(t.is_finite() && *t >= 1.0)) {
                return Err(Error::InvalidParameter(
                    "Hilbert-scale weights must be >= 1".into(),
                ));
            }
            if w.windows(2).any(|p| p[1] <= p[0]) {
                return Err(Error::InvalidParameter(
                    "Hilbert-scale weights must be strictly increasing".into(),
                ));
            }
        }
        if let Some(mu) = mu_nominal {
            if !(mu.is_finite() && mu >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "smoothness index {mu} is negative"
                )));
            }
        }
        let x_proj = op.project_domain(&x_true)?;
        Ok(InverseProblem {
            op,
            x_true,
            y_exact,
            mu_nominal,
            hilbert_weights,
            s_hint: None,
            x_proj,
        })
    }

    pub fn with_s_hint(mut self, s: f64) -> Self {
        self.s_hint = Some(s);
        self
    }

    pub fn op(&self) -> &SingularSystem {
        &self.op
    }

    pub fn x_true(&self) -> &CoefVector {
        &self.x_true
    }

    pub fn y_exact(&self) -> &CoefVector {
        &self.y_exact
    }

    pub fn mu_nominal(&self) -> Option<f64> {
        self.mu_nominal
    }

    pub fn hilbert_weights(&self) -> Option<&[f64]> {
        self.hilbert_weights.as_deref()
    }

    pub fn s_hint(&self) -> Option<f64> {
        self.s_hint
    }

    /// `<x_true, v_i>` plus the part of `x_true` outside the span of the `v_i`.
    pub fn x_projection(&self) -> &Projection {
        &self.x_proj
    }

    /// `||x - x_true||` for a solution given by its coefficients against `v_i`.
    pub fn error_of_coefs(&self, coefs: &[f64]) -> f64 {
        let inside: f64 = coefs
            .iter()
            .zip(&self.x_proj.coefs)
            .map(|(c, x)| (c - x) * (c - x))
            .sum();
        (inside + self.x_proj.perp_sq).sqrt()
    }
}

/// `sqrt(sum t_i^{2q} c_i^2)`, the Hilbert-scale norm of index `q`.
pub fn hilbert_norm(weights: &[f64], coefs: &[f64], q: f64) -> f64 {
    weights
        .iter()
        .zip(coefs)
        .map(|(t, c)| t.powf(2.0 * q) * c * c)
        .sum::<f64>()
        .sqrt()
}

/// Data perturbed by rescaled Gaussian noise.
#[derive(Debug, Clone)]
pub struct NoisySample {
    pub y_delta: CoefVector,
    /// `y_delta - y_exact`.
    pub noise: Vec<f64>,
    pub delta_abs: f64,
    pub delta_rel: f64,
    pub seed: u64,
}

impl NoisySample {
    /// The exact data viewed as a sample with zero noise.
    pub fn exact(problem: &InverseProblem) -> Self {
        NoisySample {
            y_delta: problem.y_exact().clone(),
            noise: vec![0.0; problem.y_exact().len()],
            delta_abs: 0.0,
            delta_rel: 0.0,
            seed: 0,
        }
    }
}

/// Exact solutions available for the second-derivative test problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deriv2Solution {
    LinearT,
    ConstantOne,
}

/// Green's function of `-u'' = f`, `u(0) = u(1) = 0`, up to sign.
pub fn deriv2_kernel(s: f64, t: f64) -> f64 {
    if s < t {
        s * (t - 1.0)
    } else {
        t * (s - 1.0)
    }
}

/// Midpoint collocation nodes `(i - 1/2)/n`.
pub fn midpoints(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

/// Collocation matrix `A_ij = k(s_i, t_j) / n` on midpoints.
pub fn deriv2_matrix(n: usize) -> DMatrix<f64> {
    let nodes = midpoints(n);
    DMatrix::from_fn(n, n, |i, j| deriv2_kernel(nodes[i], nodes[j]) / n as f64)
}

pub fn make_deriv2(n: usize, solution: Deriv2Solution, normalize: bool) -> Result<InverseProblem> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "deriv2 needs n >= 4, got {n}"
        )));
    }
    let op = build_svd_operator(&deriv2_matrix(n), normalize)?;
    let x: Vec<f64> = match solution {
        Deriv2Solution::LinearT => midpoints(n),
        Deriv2Solution::ConstantOne => vec![1.0; n],
    };
    InverseProblem::new(op, CoefVector::new(x)?, None, None)
}

/// Diagonal model with `sigma_i = i^-eta` and `x_i = i^-beta_decay`.
///
/// The coefficient tail satisfies `sum_{j>=k} x_j^2 ~ sigma_k^{4 mu}` with
/// `mu = (2 beta_decay - 1) / (4 eta)`.
pub fn make_diagonal_model(
    n: usize,
    eta: f64,
    beta_decay: f64,
    leading_ones: usize,
) -> Result<InverseProblem> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "model size must be positive".into(),
        ));
    }
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must be positive, got {eta}"
        )));
    }
    if !(beta_decay.is_finite() && 2.0 * beta_decay > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "coefficient decay {beta_decay} gives a divergent tail (need 2*beta > 1)"
        )));
    }
    let sigmas: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-eta)).collect();
    let x: Vec<f64> = (1..=n)
        .map(|i| {
            if i <= leading_ones {
                1.0
            } else {
                (i as f64).powf(-beta_decay)
            }
        })
        .collect();
    let mu = (2.0 * beta_decay - 1.0) / (4.0 * eta);
    InverseProblem::new(
        SingularSystem::diagonal(sigmas)?,
        CoefVector::new(x)?,
        Some(mu),
        None,
    )
}

/// Decay exponent giving smoothness `mu` in [`make_diagonal_model`].
pub fn beta_for_mu(mu: f64, eta: f64) -> f64 {
    (4.0 * eta * mu + 1.0) / 2.0
}

/// Diagonal Hilbert-scale model: `t_i = i`, `sigma_i = i^-a`,
/// `x_i = i^-(p + 1/2 + 0.01)`.
pub fn make_hilbert_scale_model(n: usize, a: f64, p: f64, s_hint: f64) -> Result<InverseProblem> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "model size must be positive".into(),
        ));
    }
    if !(a.is_finite() && a > 0.0 && p.is_finite() && p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need a > 0 and p > 0, got a={a}, p={p}"
        )));
    }
    let weights: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let sigmas: Vec<f64> = weights.iter().map(|t| t.powf(-a)).collect();
    let x: Vec<f64> = weights
        .iter()
        .map(|t| t.powf(-(p + 0.5 + HILBERT_TAIL_OFFSET)))
        .collect();
    let mu = p / (2.0 * a);
    Ok(InverseProblem::new(
        SingularSystem::diagonal(sigmas)?,
        CoefVector::new(x)?,
        Some(mu),
        Some(weights),
    )?
    .with_s_hint(s_hint))
}

/// Adds Gaussian noise rescaled so that `||y_delta - y|| = delta_rel ||y||`.
pub fn add_noise(problem: &InverseProblem, delta_rel: f64, seed: u64) -> Result<NoisySample> {
    if !(delta_rel.is_finite() && delta_rel >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "relative noise level must be nonnegative, got {delta_rel}"
        )));
    }
    let y = problem.y_exact();
    if delta_rel == 0.0 {
        return Ok(NoisySample {
            seed,
            ..NoisySample::exact(problem)
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut noise: Vec<f64> = (0..y.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let delta_abs = delta_rel * y.norm();
    let scale = delta_abs / norm(&noise);
    noise.iter_mut().for_each(|e| *e *= scale);
    let y_delta: Vec<f64> = y.iter().zip(&noise).map(|(a, b)| a + b).collect();
    Ok(NoisySample {
        y_delta: CoefVector::new(y_delta)?,
        noise,
        delta_abs,
        delta_rel,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::distance;
    use proptest::prelude::*;

    #[test]
    fn kernel_branches_and_symmetry() {
        assert!((deriv2_kernel(0.25, 0.75) + 0.0625).abs() < 1e-15);
        assert_eq!(deriv2_kernel(0.3, 0.7), deriv2_kernel(0.7, 0.3));
        assert!((deriv2_kernel(0.3, 0.7) + 0.09).abs() < 1e-15);
    }

    #[test]
    fn deriv2_top_singular_value_matches_power_iteration() {
        let n = 512;
        let a = deriv2_matrix(n);
        let problem = make_deriv2(n, Deriv2Solution::LinearT, false).unwrap();
        let ata = a.transpose() * &a;
        let mut v = nalgebra::DVector::from_element(n, 1.0);
        let mut lambda = 0.0;
        for _ in 0..200 {
            let w = &ata * &v;
            lambda = w.norm();
            v = w / lambda;
        }
        let sigma1 = problem.op().sigmas()[0];
        assert!((sigma1 - lambda.sqrt()).abs() < 1e-10 * sigma1);
        let continuum = 1.0 / std::f64::consts::PI.powi(2);
        assert!((sigma1 - continuum).abs() < 0.01 * continuum);
    }

    #[test]
    fn deriv2_linear_data_vanishes_at_endpoints() {
        let n = 256;
        let p = make_deriv2(n, Deriv2Solution::LinearT, false).unwrap();
        let y = p.y_exact();
        let bound = 1.0 / (5.0 * n as f64);
        assert!(y[0].abs() <= bound && y[n - 1].abs() <= bound);
        // continuum data y(s) = (s^3 - s) / 6 for x(t) = t
        let s = midpoints(n);
        for (i, yi) in y.iter().enumerate() {
            let exact = (s[i].powi(3) - s[i]) / 6.0;
            assert!((yi - exact).abs() < 1e-4);
        }
    }

    #[test]
    fn deriv2_endpoint_data_shrinks_with_n() {
        let mut last = f64::INFINITY;
        for n in [16, 32, 64, 128] {
            let p = make_deriv2(n, Deriv2Solution::ConstantOne, false).unwrap();
            let y0 = p.y_exact()[0].abs();
            assert!(y0 < last);
            last = y0;
        }
    }

    #[test]
    fn deriv2_rejects_tiny_grid() {
        assert!(make_deriv2(3, Deriv2Solution::LinearT, false).is_err());
    }

    #[test]
    fn deriv2_data_is_forward_image() {
        let n = 32;
        let p = make_deriv2(n, Deriv2Solution::LinearT, true).unwrap();
        let a = deriv2_matrix(n) / p.op().norm_scale();
        let y = &a * nalgebra::DVector::from_column_slice(p.x_true());
        assert!(distance(y.as_slice(), p.y_exact()) < 1e-12);
    }

    #[test]
    fn diagonal_model_parameters() {
        let p = make_diagonal_model(100, 2.0, 2.0, 0).unwrap();
        assert_eq!(p.mu_nominal(), Some(0.375));
        assert!((p.op().sigmas()[1] - 0.25).abs() < 1e-15);
        let lead = make_diagonal_model(100, 2.0, 2.0, 8).unwrap();
        assert!(lead.x_true()[..8].iter().all(|v| *v == 1.0));
        assert!((lead.x_true()[8] - 1.0 / 81.0).abs() < 1e-15);
        assert!(matches!(
            make_diagonal_model(10, 2.0, 0.5, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn diagonal_model_tail_ratio_is_bounded() {
        let n = 20_000;
        let p = make_diagonal_model(n, 2.0, 2.0, 0).unwrap();
        let mu = p.mu_nominal().unwrap();
        let x = p.x_true();
        let sig = p.op().sigmas();
        let mut tail = 0.0;
        let mut tails = vec![0.0; n];
        for k in (0..n).rev() {
            tail += x[k] * x[k];
            tails[k] = tail;
        }
        let ratios: Vec<f64> = (0..n / 2)
            .map(|k| tails[k] / sig[k].powf(4.0 * mu))
            .collect();
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(lo > 0.1 && hi < 10.0, "ratio band [{lo}, {hi}]");
    }

    #[test]
    fn hilbert_model_construction() {
        let p = make_hilbert_scale_model(50, 1.0, 1.0, 2.0).unwrap();
        assert!((p.op().sigmas()[2] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.s_hint(), Some(2.0));
        assert_eq!(p.mu_nominal(), Some(0.5));
    }

    #[test]
    fn hilbert_model_norms_finite_below_and_growing_above() {
        let w = |n: usize| (1..=n).map(|i| i as f64).collect::<Vec<_>>();
        let x = |n: usize| {
            make_hilbert_scale_model(n, 1.0, 1.0, 2.0)
                .unwrap()
                .x_true()
                .to_vec()
        };
        let p_small = hilbert_norm(&w(2000), &x(2000), 1.0);
        let p_large = hilbert_norm(&w(8000), &x(8000), 1.0);
        let s_small = hilbert_norm(&w(2000), &x(2000), 2.0);
        let s_large = hilbert_norm(&w(8000), &x(8000), 2.0);
        assert!(p_large / p_small < 1.1);
        assert!(s_large / s_small > 3.0);
    }

    #[test]
    fn noise_is_exactly_rescaled_and_deterministic() {
        let p = make_diagonal_model(500, 2.0, 2.0, 0).unwrap();
        let clean = add_noise(&p, 0.0, 7).unwrap();
        assert_eq!(clean.y_delta, *p.y_exact());
        assert_eq!(clean.delta_abs, 0.0);
        let a = add_noise(&p, 0.005, 7).unwrap();
        let b = add_noise(&p, 0.005, 7).unwrap();
        assert_eq!(a.y_delta, b.y_delta);
        let rel = distance(&a.y_delta, p.y_exact()) / p.y_exact().norm();
        assert!((rel - 0.005).abs() < 1e-12);
        assert!((a.delta_abs - 0.005 * p.y_exact().norm()).abs() < 1e-15);
        let c = add_noise(&p, 0.005, 8).unwrap();
        assert_ne!(a.y_delta, c.y_delta);
        assert!(add_noise(&p, -1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn hilbert_model_forward_norm_is_negative_scale_norm(
            x in prop::collection::vec(-1.0f64..1.0, 30),
            a in 0.2f64..2.0,
        ) {
            let p = make_hilbert_scale_model(30, a, 1.0, 0.0).unwrap();
            let ax = p.op().apply(ApplyMode::Forward, &CoefVector::new(x.clone()).unwrap()).unwrap();
            let lhs = ax.norm();
            let rhs = hilbert_norm(p.hilbert_weights().unwrap(), &x, -a);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn noise_level_exact_for_any_seed(seed in 0u64..1000, rel in 1e-6f64..0.5) {
            let p = make_diagonal_model(64, 1.0, 1.5, 0).unwrap();
            let s = add_noise(&p, rel, seed).unwrap();
            let d = distance(&s.y_delta, p.y_exact());
            prop_assert!((d - s.delta_abs).abs() <= 1e-12);
        }
    }
}
