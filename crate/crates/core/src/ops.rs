//! Compact operators represented through their singular system.
//!
//! Vectors live in one of two "native" spaces: the domain (length `cols`) and
//! the range (length `rows`). A diagonal system uses the canonical basis for
//! both, a dense system stores the orthonormal factors explicitly.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative cutoff below which singular values are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-14;

/// A finite coefficient or sample vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefVector(Vec<f64>);

impl CoefVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry {} at index {i}",
                values[i]
            )));
        }
        Ok(CoefVector(values))
    }

    pub fn zeros(n: usize) -> Self {
        CoefVector(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

impl Deref for CoefVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<CoefVector> for Vec<f64> {
    fn from(v: CoefVector) -> Self {
        v.0
    }
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euclidean distance between two equally long slices.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Which spectral map [`SingularSystem::apply`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApplyMode {
    /// `A`, domain to range.
    Forward,
    /// `A*`, range to domain.
    Adjoint,
    /// `(A*A)^nu`, domain to domain.
    NormalPower(f64),
    /// `A (A*A)^nu`, domain to range.
    ForwardPower(f64),
}

/// Coefficients of a vector against the singular vectors, plus the squared
/// norm of the part orthogonal to their span.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub coefs: Vec<f64>,
    pub perp_sq: f64,
}

impl Projection {
    pub fn norm(&self) -> f64 {
        (norm_sq(&self.coefs) + self.perp_sq).sqrt()
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

#[derive(Debug, Clone)]
pub struct SingularSystem {
    sigmas: Vec<f64>,
    left: Option<DMatrix<f64>>,
    right: Option<DMatrix<f64>>,
    rows: usize,
    cols: usize,
    norm_scale: f64,
}

impl SingularSystem {
    /// Diagonal operator on `R^n` with the given (non-increasing, positive)
    /// singular values.
    pub fn diagonal(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::InvalidInput("empty singular value list".into()));
        }
        for (i, s) in sigmas.iter().enumerate() {
            if !(s.is_finite() && *s > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "singular value {s} at index {i} is not positive and finite"
                )));
            }
        }
        if let Some(i) = sigmas.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput(format!(
                "singular values increase at index {}",
                i + 1
            )));
        }
        let n = sigmas.len();
        Ok(SingularSystem {
            sigmas,
            left: None,
            right: None,
            rows: n,
            cols: n,
            norm_scale: 1.0,
        })
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn rank(&self) -> usize {
        self.sigmas.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn norm_scale(&self) -> f64 {
        self.norm_scale
    }

    pub fn left_factor(&self) -> Option<&DMatrix<f64>> {
        self.left.as_ref()
    }

    pub fn right_factor(&self) -> Option<&DMatrix<f64>> {
        self.right.as_ref()
    }

    pub fn is_diagonal(&self) -> bool {
        self.left.is_none() && self.right.is_none()
    }

    /// Coefficients `<y, u_i>` of a range vector.
    pub fn project_range(&self, y: &[f64]) -> Result<Projection> {
        check_len(self.rows, y.len())?;
        Ok(project(self.left.as_ref(), self.rank(), y))
    }

    /// Coefficients `<x, v_i>` of a domain vector.
    pub fn project_domain(&self, x: &[f64]) -> Result<Projection> {
        check_len(self.cols, x.len())?;
        Ok(project(self.right.as_ref(), self.rank(), x))
    }

    /// `sum c_i u_i`.
    pub fn synthesize_range(&self, coefs: &[f64]) -> Vec<f64> {
        synthesize(self.left.as_ref(), self.rows, coefs)
    }

    /// `sum c_i v_i`.
    pub fn synthesize_domain(&self, coefs: &[f64]) -> Vec<f64> {
        synthesize(self.right.as_ref(), self.cols, coefs)
    }

    pub fn apply(&self, mode: ApplyMode, x: &CoefVector) -> Result<CoefVector> {
        let (input_len, from_domain, to_domain, power) = match mode {
            ApplyMode::Forward => (self.cols, true, false, 1.0),
            ApplyMode::Adjoint => (self.rows, false, true, 1.0),
            ApplyMode::NormalPower(nu) => (self.cols, true, true, 2.0 * nu),
            ApplyMode::ForwardPower(nu) => (self.cols, true, false, 2.0 * nu + 1.0),
        };
        if !(power.is_finite() && power >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "power exponent must be nonnegative, got {mode:?}"
            )));
        }
        check_len(input_len, x.len())?;
        let proj = if from_domain {
            self.project_domain(x)?
        } else {
            self.project_range(x)?
        };
        let scaled: Vec<f64> = proj
            .coefs
            .iter()
            .zip(&self.sigmas)
            .map(|(c, s)| c * s.powf(power))
            .collect();
        let out = if to_domain {
            self.synthesize_domain(&scaled)
        } else {
            self.synthesize_range(&scaled)
        };
        CoefVector::new(out)
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

fn project(factor: Option<&DMatrix<f64>>, rank: usize, v: &[f64]) -> Projection {
    match factor {
        None => Projection {
            coefs: v[..rank].to_vec(),
            perp_sq: norm_sq(&v[rank..]),
        },
        Some(f) => {
            let dv = DVector::from_column_slice(v);
            let coefs = f.tr_mul(&dv);
            let rest = &dv - f * &coefs;
            Projection {
                coefs: coefs.as_slice().to_vec(),
                perp_sq: rest.norm_squared(),
            }
        }
    }
}

fn synthesize(factor: Option<&DMatrix<f64>>, len: usize, coefs: &[f64]) -> Vec<f64> {
    match factor {
        None => {
            let mut out = vec![0.0; len];
            out[..coefs.len()].copy_from_slice(coefs);
            out
        }
        Some(f) => {
            let c = DVector::from_column_slice(coefs);
            (f * c).as_slice().to_vec()
        }
    }
}

/// Singular system of a dense matrix.
///
/// Symmetric square input goes through a symmetric eigendecomposition, which
/// is both faster and more accurate than a general SVD. Singular values at or
/// below `RANK_CUTOFF * sigma_1` are dropped. With `normalize`, the system
/// represents `A / sigma_1` and `norm_scale` records `sigma_1`.
pub fn build_svd_operator(matrix: &DMatrix<f64>, normalize: bool) -> Result<SingularSystem> {
    let (m, n) = matrix.shape();
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("matrix has a zero dimension".into()));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }

    let (sigmas, u, v) = if m == n && is_symmetric(matrix) {
        let eig = SymmetricEigen::new(matrix.clone());
        let sigmas: Vec<f64> = eig.eigenvalues.iter().map(|l| l.abs()).collect();
        let mut u = eig.eigenvectors.clone();
        for (j, l) in eig.eigenvalues.iter().enumerate() {
            if *l < 0.0 {
                u.column_mut(j).neg_mut();
            }
        }
        (sigmas, u, eig.eigenvectors)
    } else {
        let svd = matrix
            .clone()
            .try_svd(true, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::InvalidInput("SVD did not converge".into()))?;
        let u = svd
            .u
            .ok_or_else(|| Error::Numeric("SVD returned no U".into()))?;
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::Numeric("SVD returned no V".into()))?;
        (svd.singular_values.as_slice().to_vec(), u, v_t.transpose())
    };

    let mut order: Vec<usize> = (0..sigmas.len()).collect();
    order.sort_by(|&a, &b| sigmas[b].total_cmp(&sigmas[a]));
    let top = sigmas[order[0]];
    if top.is_nan() || top <= 0.0 {
        return Err(Error::InvalidInput("matrix is zero".into()));
    }
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&i| sigmas[i] > RANK_CUTOFF * top)
        .collect();

    let scale = if normalize { top } else { 1.0 };
    let left = DMatrix::from_fn(m, kept.len(), |r, c| u[(r, kept[c])]);
    let right = DMatrix::from_fn(n, kept.len(), |r, c| v[(r, kept[c])]);
    Ok(SingularSystem {
        sigmas: kept.iter().map(|&i| sigmas[i] / scale).collect(),
        left: Some(left),
        right: Some(right),
        rows: m,
        cols: n,
        norm_scale: scale,
    })
}

fn is_symmetric(a: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    (0..n).all(|i| (0..i).all(|j| a[(i, j)] == a[(j, i)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cv(v: &[f64]) -> CoefVector {
        CoefVector::new(v.to_vec()).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    fn rotated() -> DMatrix<f64> {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let rot = DMatrix::from_row_slice(2, 2, &[c, -c, c, c]);
        rot * DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]))
    }

    #[test]
    fn coef_vector_rejects_nan() {
        assert!(CoefVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(CoefVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn identity_keeps_tied_values() {
        let sys = build_svd_operator(&DMatrix::identity(2, 2), false).unwrap();
        assert_close(sys.sigmas(), &[1.0, 1.0], 1e-15);
    }

    #[test]
    fn normalization_scales_by_top_singular_value() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let sys = build_svd_operator(&a, true).unwrap();
        assert_close(sys.sigmas(), &[1.0, 0.5], 1e-15);
        assert_eq!(sys.norm_scale(), 2.0);
    }

    #[test]
    fn non_finite_matrix_is_invalid_input() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert!(matches!(
            build_svd_operator(&a, false),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn rank_deficient_columns_are_dropped() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0]);
        let sys = build_svd_operator(&a, false).unwrap();
        assert_eq!(sys.rank(), 2);
        assert_close(sys.sigmas(), &[1.0, 0.3], 1e-14);
    }

    #[test]
    fn unsorted_nonsymmetric_input_sorted_descending() {
        let a = DMatrix::from_row_slice(2, 3, &[0.1, 0.0, 0.0, 0.0, 3.0, 0.0]);
        let sys = build_svd_operator(&a, false).unwrap();
        assert_close(sys.sigmas(), &[3.0, 0.1], 1e-14);
        assert_eq!((sys.rows(), sys.cols()), (2, 3));
    }

    #[test]
    fn diagonal_forward_and_half_power() {
        let sys = SingularSystem::diagonal(vec![1.0, 0.5]).unwrap();
        let x = cv(&[1.0, 1.0]);
        assert_close(
            &sys.apply(ApplyMode::Forward, &x).unwrap(),
            &[1.0, 0.5],
            0.0,
        );
        assert_close(
            &sys.apply(ApplyMode::NormalPower(0.5), &x).unwrap(),
            &[1.0, 0.5],
            1e-15,
        );
    }

    #[test]
    fn diagonal_rejects_increasing_values() {
        assert!(SingularSystem::diagonal(vec![0.5, 1.0]).is_err());
        assert!(SingularSystem::diagonal(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn length_mismatch_is_dimension_error() {
        let sys = SingularSystem::diagonal(vec![1.0, 0.5]).unwrap();
        let err = sys.apply(ApplyMode::Forward, &cv(&[1.0])).unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 2,
                got: 1
            }
        ));
    }

    #[test]
    fn rotated_normal_operator_matches_matrix_products() {
        let a = rotated();
        let sys = build_svd_operator(&a, false).unwrap();
        let x = cv(&[1.0, 0.0]);
        let two_step = sys
            .apply(
                ApplyMode::Adjoint,
                &sys.apply(ApplyMode::Forward, &x).unwrap(),
            )
            .unwrap();
        let power = sys.apply(ApplyMode::NormalPower(1.0), &x).unwrap();
        let dense = a.transpose() * &a * DVector::from_vec(vec![1.0, 0.0]);
        assert_close(&two_step, &power, 1e-12);
        assert_close(&power, dense.as_slice(), 1e-12);
    }

    #[test]
    fn factors_reproduce_singular_relations() {
        let a = DMatrix::from_fn(5, 4, |i, j| {
            ((i * 7 + j * 3) % 5) as f64 - 1.7 + 0.1 * j as f64
        });
        let sys = build_svd_operator(&a, false).unwrap();
        let u = sys.left_factor().unwrap();
        let v = sys.right_factor().unwrap();
        let r = sys.rank();
        assert!((u.tr_mul(u) - DMatrix::identity(r, r)).amax() < 1e-10);
        assert!((v.tr_mul(v) - DMatrix::identity(r, r)).amax() < 1e-10);
        for i in 0..r {
            let av = &a * v.column(i);
            let atu = a.transpose() * u.column(i);
            assert!((av - u.column(i) * sys.sigmas()[i]).amax() < 1e-10);
            assert!((atu - v.column(i) * sys.sigmas()[i]).amax() < 1e-10);
        }
    }

    #[test]
    fn symmetric_indefinite_matrix_signs_left_factor() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let sys = build_svd_operator(&a, false).unwrap();
        let x = cv(&[0.3, -0.8]);
        let y = sys.apply(ApplyMode::Forward, &x).unwrap();
        assert_close(&y, &[-0.8, 0.3], 1e-14);
    }

    #[test]
    fn zero_padded_column_is_annihilated_by_adjoint() {
        let a = DMatrix::from_row_slice(3, 3, &[0.9, 0.2, 0.0, -0.1, 0.7, 0.0, 0.4, 0.3, 0.0]);
        let sys = build_svd_operator(&a, false).unwrap();
        let y = cv(&[0.3, -1.2, 2.5]);
        let x = sys.apply(ApplyMode::Adjoint, &y).unwrap();
        assert!(x[2].abs() <= 1e-12);
    }

    fn random_matrix(m: usize, n: usize, seed: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(m, n, |i, j| {
            seed[(i * n + j) % seed.len()] + 0.01 * (i as f64 - j as f64)
        })
    }

    proptest! {
        #[test]
        fn adjoint_consistency(
            entries in prop::collection::vec(-1.0f64..1.0, 24),
            x in prop::collection::vec(-1.0f64..1.0, 4),
            y in prop::collection::vec(-1.0f64..1.0, 6),
        ) {
            let a = random_matrix(6, 4, &entries);
            let sys = build_svd_operator(&a, false).unwrap();
            let ax = sys.apply(ApplyMode::Forward, &cv(&x)).unwrap();
            let aty = sys.apply(ApplyMode::Adjoint, &cv(&y)).unwrap();
            let lhs: f64 = ax.iter().zip(&y).map(|(p, q)| p * q).sum();
            let rhs: f64 = x.iter().zip(aty.iter()).map(|(p, q)| p * q).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-10);
        }

        #[test]
        fn normal_powers_compose(
            entries in prop::collection::vec(-1.0f64..1.0, 25),
            x in prop::collection::vec(-1.0f64..1.0, 5),
            a in 0.0f64..2.0,
            b in 0.0f64..2.0,
        ) {
            let m = random_matrix(5, 5, &entries);
            let sys = build_svd_operator(&m, true).unwrap();
            let x = cv(&x);
            let ab = sys.apply(ApplyMode::NormalPower(a),
                &sys.apply(ApplyMode::NormalPower(b), &x).unwrap()).unwrap();
            let sum = sys.apply(ApplyMode::NormalPower(a + b), &x).unwrap();
            for (p, q) in ab.iter().zip(sum.iter()) {
                prop_assert!((p - q).abs() <= 1e-10);
            }
        }

        #[test]
        fn padded_null_direction_never_reached(
            entries in prop::collection::vec(-1.0f64..1.0, 16),
            y in prop::collection::vec(-1.0f64..1.0, 4),
        ) {
            let core = random_matrix(4, 4, &entries);
            let mut padded = DMatrix::zeros(4, 5);
            padded.view_mut((0, 0), (4, 4)).copy_from(&core);
            let sys = build_svd_operator(&padded, false).unwrap();
            let x = sys.apply(ApplyMode::Adjoint, &cv(&y)).unwrap();
            prop_assert!(x[4].abs() <= 1e-12);
        }

        #[test]
        fn forward_power_is_forward_after_normal_power(
            s in prop::collection::vec(0.01f64..1.0, 1..8),
            nu in 0.0f64..2.0,
        ) {
            let mut s = s;
            s.sort_by(|a, b| b.total_cmp(a));
            let sys = SingularSystem::diagonal(s.clone()).unwrap();
            let x = cv(&vec![1.0; s.len()]);
            let lhs = sys.apply(ApplyMode::ForwardPower(nu), &x).unwrap();
            let rhs = sys.apply(ApplyMode::Forward,
                &sys.apply(ApplyMode::NormalPower(nu), &x).unwrap()).unwrap();
            for (p, q) in lhs.iter().zip(rhs.iter()) {
                prop_assert!((p - q).abs() <= 1e-13);
            }
        }
    }
}
