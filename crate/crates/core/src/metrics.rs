//! Control-precision metrics on traceless deviation density matrices.

use serde::Serialize;

use crate::ensemble::{apply_kraus, KrausSet};
use crate::error::{Error, Result};
use crate::operator::{Operator, StateMatrix};
use crate::pauli::PauliString;

/// A traceless part is treated as zero when `tr(rho_hat^2)` falls below this
/// fraction of the reference state's.
pub const ZERO_NORM_REL: f64 = 1e-20;

fn norm_sq_nonzero(rho_hat: &StateMatrix, reference: f64, what: &'static str) -> Result<f64> {
    let n = rho_hat.trace_product(rho_hat);
    if n <= ZERO_NORM_REL * reference.max(f64::MIN_POSITIVE) || n == 0.0 {
        Err(Error::ZeroTracelessPart(what))
    } else {
        Ok(n)
    }
}

/// Direction overlap of the traceless parts, in `[-1, 1]`.
pub fn correlation(ideal: &StateMatrix, out: &StateMatrix) -> Result<f64> {
    let (ih, oh) = (ideal.traceless(), out.traceless());
    let ni = norm_sq_nonzero(&ih, 1.0, "ideal state")?;
    let no = norm_sq_nonzero(&oh, ni, "output state")?;
    Ok(ih.trace_product(&oh) / (ni * no).sqrt())
}

/// Overlap normalized by the input magnitude instead of the output's.
pub fn attenuated_correlation(ideal: &StateMatrix, out: &StateMatrix, input: &StateMatrix) -> Result<f64> {
    let (ih, oh, inh) = (ideal.traceless(), out.traceless(), input.traceless());
    let n_in = norm_sq_nonzero(&inh, 1.0, "input state")?;
    let ni = norm_sq_nonzero(&ih, n_in, "ideal state")?;
    Ok(ih.trace_product(&oh) / (ni * n_in).sqrt())
}

/// `sqrt(tr(out_hat^2) / tr(in_hat^2))`.
pub fn attenuation(out: &StateMatrix, input: &StateMatrix) -> Result<f64> {
    let n_in = norm_sq_nonzero(&input.traceless(), 1.0, "input state")?;
    Ok((out.traceless_norm_sq() / n_in).sqrt())
}

/// `(1 / 4^N) sum_k p_k |tr(U_ideal^dagger U_k)|^2`.
pub fn gate_fidelity_trace(ideal: &Operator, ks: &KrausSet) -> Result<f64> {
    ideal.ensure_dim(ks.dim())?;
    let d = ks.dim() as f64;
    Ok(ks
        .elements()
        .iter()
        .map(|e| e.weight * ideal.inner(&e.unitary).norm_sqr())
        .sum::<f64>()
        / (d * d))
}

/// Mean attenuated correlation over the normalized Pauli-product basis.
///
/// The identity element has no traceless part; for a trace-preserving unital
/// channel its output equals the ideal output, and it contributes 1. With that
/// convention the average equals [`gate_fidelity_trace`] identically.
pub fn gate_fidelity_basis_average(ideal: &Operator, ks: &KrausSet) -> Result<f64> {
    ideal.ensure_dim(ks.dim())?;
    let n = ks.dim().trailing_zeros() as usize;
    let basis = PauliString::all(n);
    let mut total = 0.0;
    for p in &basis {
        if p.is_identity() {
            total += 1.0;
            continue;
        }
        let rho_in = StateMatrix::from_operator(p.normalized_operator())?;
        let rho_ideal = rho_in.conjugate_by(ideal);
        let rho_out = apply_kraus(ks, &rho_in)?;
        total += attenuated_correlation(&rho_ideal, &rho_out, &rho_in)?;
    }
    Ok(total / basis.len() as f64)
}

/// Correlation, attenuation and their product for one input state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    /// `None` when the output has no traceless part.
    pub correlation: Option<f64>,
    pub attenuation: f64,
    pub attenuated_correlation: f64,
    /// Gate fidelity, when the report describes a whole gate rather than a state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
}

impl MetricReport {
    pub fn with_fidelity(mut self, fidelity: f64) -> Self {
        self.fidelity = Some(fidelity);
        self
    }
}

/// Bundles `C`, `A` and `C_A = C * A` for one input state.
///
/// `input` is the attenuation reference. A vanishing output yields `A = 0`,
/// `C = None` and `C_A = 0`.
pub fn metric_report(ideal: &StateMatrix, out: &StateMatrix, input: &StateMatrix) -> Result<MetricReport> {
    let a = attenuation(out, input)?;
    match correlation(ideal, out) {
        Ok(c) => Ok(MetricReport {
            correlation: Some(c),
            attenuation: a,
            attenuated_correlation: c * a,
            fidelity: None,
        }),
        Err(Error::ZeroTracelessPart("output state")) => Ok(MetricReport {
            correlation: None,
            attenuation: a,
            attenuated_correlation: 0.0,
            fidelity: None,
        }),
        Err(e) => Err(e),
    }
}
