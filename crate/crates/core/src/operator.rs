//! Dense complex linear algebra on `2^N x 2^N` spin-space matrices.
//!
//! Hamiltonians are stored in rad/s; conversion from Hz happens at the
//! public boundaries of the modules that build them. Vectorization stacks
//! columns, so the superoperator of `rho -> U rho U^dagger` is `conj(U) (x) U`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Entrywise tolerance (relative to the largest entry, floored at 1) for Hermiticity.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Max-norm tolerance on `U^dagger U - I`.
pub const UNITARY_TOL: f64 = 1e-10;
/// Minimum distance of a unitary eigenvalue from `-1` for the principal logarithm.
pub const BRANCH_CUT_TOL: f64 = 1e-8;

pub(crate) const I: C64 = C64::new(0.0, 1.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn label(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }
}

pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn hermitian_scale(m: &CMatrix) -> f64 {
    max_abs(m).max(1.0)
}

/// A square complex matrix on the Hilbert space of `N` spin-1/2 nuclei.
#[derive(Clone, PartialEq)]
pub struct Operator {
    m: CMatrix,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator({}x{}){}", self.dim(), self.dim(), self.m)
    }
}

impl Operator {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if !m.nrows().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(m.nrows()));
        }
        Ok(Self { m })
    }

    /// Wraps a matrix whose shape is already known to be valid.
    pub(crate) fn wrap(m: CMatrix) -> Self {
        debug_assert!(m.is_square() && m.nrows().is_power_of_two());
        Self { m }
    }

    pub fn identity(dim: usize) -> Self {
        Self::wrap(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::wrap(CMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[C64]) -> Result<Self> {
        Self::from_matrix(CMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_spins(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.m.adjoint())
    }

    pub fn conjugate(&self) -> Self {
        Self::wrap(self.m.conjugate())
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::wrap(&self.m * factor)
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        Self::wrap(self.m.map(|z| z * factor))
    }

    pub fn kron(&self, other: &Operator) -> Self {
        Self::wrap(self.m.kronecker(&other.m))
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        Self::wrap(&self.m * &other.m - &other.m * &self.m)
    }

    pub fn anticommutator(&self, other: &Operator) -> Self {
        Self::wrap(&self.m * &other.m + &other.m * &self.m)
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        max_abs(&self.m)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn frobenius_distance(&self, other: &Operator) -> f64 {
        (&self.m - &other.m).norm()
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs(&(&self.m - &other.m))
    }

    /// `max |M - M^dagger|` entrywise.
    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.m - self.m.adjoint()))
    }

    /// `max |M^dagger M - I|` entrywise.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        max_abs(&(self.m.adjoint() * &self.m - CMatrix::identity(d, d)))
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_error() <= HERMITIAN_TOL * hermitian_scale(&self.m)
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_error() <= UNITARY_TOL
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let err = self.hermiticity_error();
        if err <= HERMITIAN_TOL * hermitian_scale(&self.m) {
            Ok(())
        } else {
            Err(Error::NotHermitian(err))
        }
    }

    pub fn ensure_unitary(&self) -> Result<()> {
        let err = self.unitarity_error();
        if err <= UNITARY_TOL {
            Ok(())
        } else {
            Err(Error::NotUnitary(err))
        }
    }

    pub(crate) fn ensure_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: dim,
                found: self.dim(),
            })
        }
    }

    /// `(M + M^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::wrap((&self.m + self.m.adjoint()).map(|z| z * 0.5))
    }

    /// `tr(A^dagger B)`.
    pub fn inner(&self, other: &Operator) -> C64 {
        self.m.dotc(&other.m)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator::wrap(&self.m + &rhs.m)
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator::wrap(self.m + rhs.m)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.m += &rhs.m;
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator::wrap(&self.m - &rhs.m)
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        Operator::wrap(self.m - rhs.m)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator::wrap(&self.m * &rhs.m)
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        Operator::wrap(self.m * rhs.m)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator::wrap(-&self.m)
    }
}

/// Single-spin Pauli matrix.
pub fn pauli(axis: Axis) -> CMatrix {
    match axis {
        Axis::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Axis::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Axis::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

/// Kronecker product of single-spin factors, first factor on spin 1.
pub(crate) fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Spin angular momentum `I_axis` of spin `spin_index` (1-based) embedded in
/// an `n_spins` system: `1 (x) ... (x) sigma_axis / 2 (x) ... (x) 1`.
pub fn spin_operator(axis: Axis, spin_index: usize, n_spins: usize) -> Result<Operator> {
    if spin_index == 0 || spin_index > n_spins {
        return Err(Error::SpinIndexOutOfRange {
            index: spin_index,
            n_spins,
        });
    }
    let half = pauli(axis).map(|z| z * 0.5);
    let id = CMatrix::identity(2, 2);
    let factors: Vec<&CMatrix> = (1..=n_spins)
        .map(|k| if k == spin_index { &half } else { &id })
        .collect();
    Ok(Operator::wrap(kron_all(factors)))
}

/// Total spin component `sum_k I_axis^k`.
pub fn total_spin_operator(axis: Axis, n_spins: usize) -> Operator {
    let dim = 1usize << n_spins;
    (1..=n_spins).fold(Operator::zeros(dim), |mut acc, k| {
        acc += &spin_operator(axis, k, n_spins).expect("index in range");
        acc
    })
}

/// Hermitian eigendecomposition `H = V diag(values) V^dagger`, values ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(h: &Operator) -> Result<HermitianEigen> {
    h.ensure_hermitian()?;
    let sym = h.hermitian_part();
    let eig = SymmetricEigen::try_new(sym.into_matrix(), f64::EPSILON, 0)
        .ok_or(Error::EigenSolver)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Ok(HermitianEigen { values, vectors })
}

/// `V diag(f(lambda_j)) V^dagger` for a spectral decomposition.
pub(crate) fn spectral_function(vectors: &CMatrix, values: impl Iterator<Item = C64>) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, f) in values.enumerate() {
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= f);
    }
    scaled * vectors.adjoint()
}

/// `exp(-i H t)` via eigendecomposition of the Hermitian generator.
pub fn matrix_exp_hermitian(h: &Operator, t: f64) -> Result<Operator> {
    let eig = hermitian_eigen(h)?;
    let phases = eig.values.iter().map(|&w| C64::from_polar(1.0, -w * t));
    Ok(Operator::wrap(spectral_function(&eig.vectors, phases)))
}

/// Complex Schur form. Clustered eigenvalues can stall deflation at machine
/// epsilon, so the threshold is relaxed twice before giving up.
pub(crate) fn schur(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let scale = m.norm().max(1.0);
    [1.0, 16.0, 256.0]
        .iter()
        .find_map(|k| Schur::try_new(m.clone(), k * f64::EPSILON * scale, 100_000))
        .map(|s| s.unpack())
        .ok_or(Error::EigenSolver)
}

/// Eigenvalues and unitary eigenvectors of a unitary (normal) matrix.
pub(crate) fn unitary_eigen(u: &Operator) -> Result<(Vec<C64>, CMatrix)> {
    let (q, t) = schur(u.matrix())?;
    let values = (0..t.nrows()).map(|j| t[(j, j)]).collect();
    Ok((values, q))
}

/// Principal logarithm `V diag(i arg lambda_j) V^dagger` with `arg` in `(-pi, pi]`.
///
/// Returns an anti-Hermitian matrix `L` with `exp(L) = U`. Eigenvalues within
/// [`BRANCH_CUT_TOL`] of `-1` are rejected with [`Error::BranchCut`].
pub fn matrix_log_principal(u: &Operator) -> Result<Operator> {
    u.ensure_unitary()?;
    let (values, vectors) = unitary_eigen(u)?;
    let closest = values
        .iter()
        .map(|z| (z + ONE).norm())
        .fold(f64::INFINITY, f64::min);
    if closest <= BRANCH_CUT_TOL {
        return Err(Error::BranchCut { distance: closest });
    }
    let logs = values.iter().map(|z| I * z.arg());
    Ok(Operator::wrap(spectral_function(&vectors, logs)))
}

/// Hermitian state matrix (density matrix or its traceless deviation).
#[derive(Clone, Debug, PartialEq)]
pub struct StateMatrix {
    m: CMatrix,
}

impl StateMatrix {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        let op = Operator::from_matrix(m)?;
        op.ensure_hermitian()?;
        Ok(Self { m: op.m })
    }

    pub fn from_operator(op: Operator) -> Result<Self> {
        op.ensure_hermitian()?;
        Ok(Self { m: op.m })
    }

    pub(crate) fn wrap(m: CMatrix) -> Self {
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn as_operator(&self) -> Operator {
        Operator::wrap(self.m.clone())
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// `rho - (tr rho / dim) 1`.
    pub fn traceless(&self) -> StateMatrix {
        let d = self.dim();
        let shift = self.m.trace() / d as f64;
        let mut m = self.m.clone();
        for i in 0..d {
            m[(i, i)] -= shift;
        }
        StateMatrix { m }
    }

    /// `tr(rho_hat^2)` of the traceless part.
    pub fn traceless_norm_sq(&self) -> f64 {
        let t = self.traceless();
        t.m.dotc(&t.m).re
    }

    /// Real `tr(A B)` for two Hermitian matrices.
    pub fn trace_product(&self, other: &StateMatrix) -> f64 {
        self.m.dotc(&other.m).re
    }

    pub fn max_abs_diff(&self, other: &StateMatrix) -> f64 {
        max_abs(&(&self.m - &other.m))
    }

    /// `U rho U^dagger`.
    pub fn conjugate_by(&self, u: &Operator) -> StateMatrix {
        StateMatrix {
            m: u.matrix() * &self.m * u.matrix().adjoint(),
        }
    }
}

/// Column-stacked density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleVector {
    v: DVector<C64>,
}

impl LiouvilleVector {
    pub fn from_vector(v: DVector<C64>) -> Self {
        Self { v }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        self.v.as_slice()
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.v
    }
}

/// Stacks the columns of `rho`: column `j` lands in entries `j*dim .. (j+1)*dim`.
pub fn columnize(rho: &StateMatrix) -> LiouvilleVector {
    // nalgebra storage is column-major
    LiouvilleVector {
        v: DVector::from_column_slice(rho.m.as_slice()),
    }
}

pub fn decolumnize(v: &LiouvilleVector) -> Result<StateMatrix> {
    let dim = (v.len() as f64).sqrt().round() as usize;
    if dim * dim != v.len() {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: v.len(),
        });
    }
    StateMatrix::from_matrix(CMatrix::from_column_slice(dim, dim, v.as_slice()))
}

/// Linear map on columnized states, dimension `4^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    m: CMatrix,
}

impl Superoperator {
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        let d = m.nrows();
        let hilbert = (d as f64).sqrt().round() as usize;
        if !m.is_square() || hilbert * hilbert != d || !hilbert.is_power_of_two() {
            return Err(Error::invalid("superoperator", format!("shape {}x{}", m.nrows(), m.ncols())));
        }
        Ok(Self { m })
    }

    pub(crate) fn wrap(m: CMatrix) -> Self {
        Self { m }
    }

    pub fn identity(hilbert_dim: usize) -> Self {
        let d = hilbert_dim * hilbert_dim;
        Self::wrap(CMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn hilbert_dim(&self) -> usize {
        (self.dim() as f64).sqrt().round() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn apply(&self, v: &LiouvilleVector) -> Result<LiouvilleVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(LiouvilleVector { v: &self.m * &v.v })
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        max_abs(&(&self.m - &other.m))
    }
}

/// `conj(U) (x) U`, the superoperator of `rho -> U rho U^dagger` under column stacking.
pub fn superop_of_unitary(u: &Operator) -> Result<Superoperator> {
    u.ensure_unitary()?;
    Ok(Superoperator::wrap(u.matrix().conjugate().kronecker(u.matrix())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_hermitian, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn spin_z_single() {
        let z = spin_operator(Axis::Z, 1, 1).unwrap();
        let expected = Operator::from_diagonal(&[c(0.5, 0.0), c(-0.5, 0.0)]).unwrap();
        assert_eq!(z, expected);
    }

    #[test]
    fn spin_x_embedding() {
        let x = spin_operator(Axis::X, 1, 2).unwrap();
        let expected = Operator::wrap(pauli(Axis::X).map(|z| z * 0.5).kronecker(&CMatrix::identity(2, 2)));
        assert_eq!(x.dim(), 4);
        assert_eq!(x, expected);
        assert!(x.is_hermitian());
        assert!(x.trace().norm() < 1e-15);
    }

    #[test]
    fn spin_index_out_of_range() {
        assert!(matches!(
            spin_operator(Axis::X, 0, 2),
            Err(Error::SpinIndexOutOfRange { .. })
        ));
        assert!(matches!(
            spin_operator(Axis::Y, 3, 2),
            Err(Error::SpinIndexOutOfRange { index: 3, n_spins: 2 })
        ));
    }

    #[test]
    fn angular_momentum_commutator() {
        for n in 1..=4 {
            for k in 1..=n {
                let x = spin_operator(Axis::X, k, n).unwrap();
                let y = spin_operator(Axis::Y, k, n).unwrap();
                let z = spin_operator(Axis::Z, k, n).unwrap();
                let lhs = x.commutator(&y);
                assert!(lhs.max_abs_diff(&z.scale(I)) < 1e-15, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let u = matrix_exp_hermitian(&Operator::zeros(4), 0.37).unwrap();
        assert!(u.max_abs_diff(&Operator::identity(4)) < 1e-15);
    }

    #[test]
    fn exp_of_z_rotation() {
        let nu = 250.0;
        let h = spin_operator(Axis::Z, 1, 1).unwrap().scale_real(2.0 * std::f64::consts::PI * nu);
        let u = matrix_exp_hermitian(&h, 1.0 / (4.0 * nu)).unwrap();
        let q = std::f64::consts::FRAC_PI_4;
        let expected = Operator::from_diagonal(&[C64::from_polar(1.0, -q), C64::from_polar(1.0, q)]).unwrap();
        assert!(u.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn exp_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let op = Operator::from_matrix(m).unwrap();
        assert!(matches!(matrix_exp_hermitian(&op, 1.0), Err(Error::NotHermitian(_))));
    }

    /// Taylor series of order 18 with scaling and squaring; independent of the eigen path.
    fn taylor_exp(h: &Operator, t: f64) -> CMatrix {
        let a = h.matrix() * C64::new(0.0, -t);
        let norm = a.norm();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let a = a / C64::from(2f64.powi(squarings as i32));
        let d = a.nrows();
        let mut term = CMatrix::identity(d, d);
        let mut sum = term.clone();
        for k in 1..=18 {
            term = &term * &a / C64::from(k as f64);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn exp_matches_series_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [2, 4, 8, 16] {
            let h = random_hermitian(&mut rng, dim);
            // 18 series terms after scaling to norm 1/2 leave truncation far below 1e-10
            let t = 0.05;
            let u = matrix_exp_hermitian(&h, t).unwrap();
            let oracle = taylor_exp(&h, t);
            assert!(max_abs(&(u.matrix() - oracle)) < 1e-10, "dim {dim}");
            assert!(u.is_unitary());
        }
    }

    #[test]
    fn log_of_identity_is_zero() {
        let l = matrix_log_principal(&Operator::identity(4)).unwrap();
        assert!(l.max_norm() < 1e-15);
    }

    #[test]
    fn log_of_diagonal() {
        let a = std::f64::consts::PI / 3.0;
        let u = Operator::from_diagonal(&[C64::from_polar(1.0, a), C64::from_polar(1.0, -a)]).unwrap();
        let l = matrix_log_principal(&u).unwrap();
        let expected = Operator::from_diagonal(&[c(0.0, a), c(0.0, -a)]).unwrap();
        assert!(l.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn log_rejects_branch_cut() {
        let u = Operator::from_diagonal(&[c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(matrix_log_principal(&u), Err(Error::BranchCut { .. })));
    }

    #[test]
    fn log_exp_round_trip_on_random_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for dim in [2, 4, 8] {
            for _ in 0..10 {
                let u = random_unitary(&mut rng, dim);
                let l = matrix_log_principal(&u).unwrap();
                // exp(L) = exp(-i H) with H = i L
                let back = matrix_exp_hermitian(&l.scale(I), 1.0).unwrap();
                assert!(back.max_abs_diff(&u) < 1e-9);
                // L anti-Hermitian
                assert!((&l + &l.adjoint()).max_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn columnize_stacks_columns() {
        let (a, b, cc, d) = (c(1.0, 0.0), c(2.0, 0.5), c(2.0, -0.5), c(4.0, 0.0));
        let rho = StateMatrix::from_matrix(CMatrix::from_row_slice(2, 2, &[a, cc, b, d])).unwrap();
        assert_eq!(columnize(&rho).as_slice(), &[a, b, cc, d]);
    }

    #[test]
    fn decolumnize_rejects_bad_length() {
        let v = LiouvilleVector::from_vector(DVector::from_element(5, ONE));
        assert!(matches!(decolumnize(&v), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn superop_matches_direct_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dim in [2, 4, 8] {
            let u = random_unitary(&mut rng, dim);
            let rho = StateMatrix::from_operator(random_hermitian(&mut rng, dim)).unwrap();
            let s = superop_of_unitary(&u).unwrap();
            let lhs = s.apply(&columnize(&rho)).unwrap();
            let rhs = columnize(&rho.conjugate_by(&u));
            let err = lhs
                .as_slice()
                .iter()
                .zip(rhs.as_slice())
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn superop_of_identity() {
        let s = superop_of_unitary(&Operator::identity(8)).unwrap();
        assert_eq!(s, Superoperator::identity(8));
    }
}
