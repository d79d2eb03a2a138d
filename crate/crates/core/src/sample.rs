//! Random operators and states for tests, oracles and initial simplices.

use rand::Rng;

use crate::operator::{matrix_exp_hermitian, CMatrix, Operator, C64};

/// Hermitian matrix with entries drawn uniformly from the unit square.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    let raw = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    Operator::from_matrix((&raw + raw.adjoint()).map(|z| z * 0.5)).expect("square power-of-two")
}

/// Unitary `exp(-i H)` for a random Hermitian `H` of spectral radius about pi.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Operator {
    let h = random_hermitian(rng, dim);
    let norm = h.frobenius_norm().max(1e-12);
    matrix_exp_hermitian(&h.scale_real(std::f64::consts::PI / norm * (dim as f64).sqrt()), 1.0)
        .expect("Hermitian input")
}
