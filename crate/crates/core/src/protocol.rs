//! Simulated three-input-state characterization of a gate set.
//!
//! Each gate is applied through its Kraus channel to `sum_k I_x^k`,
//! `sum_k I_y^k` and `sum_k I_z^k`. The output is compared with the ideal
//! rotation of the same input. Attenuation is measured against the thermal
//! state `sum_k I_z^k`.

use serde::Serialize;

use crate::ensemble::{apply_kraus, kraus_set_with, RfDistribution};
use crate::error::{Error, Result};
use crate::gates::GateSpec;
use crate::metrics::metric_report;
use crate::operator::{total_spin_operator, Axis, StateMatrix};
use crate::propagator::{PulseSequence, Propagator};
use crate::spin_system::SpinSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Compensated,
    Uncompensated,
}

impl Variant {
    pub const BOTH: [Variant; 2] = [Variant::Compensated, Variant::Uncompensated];
}

/// Compensated and uncompensated implementations of one target gate.
#[derive(Clone, Debug)]
pub struct GatePulses {
    pub gate: GateSpec,
    pub compensated: PulseSequence,
    pub uncompensated: PulseSequence,
}

impl GatePulses {
    pub fn sequence(&self, v: Variant) -> &PulseSequence {
        match v {
            Variant::Compensated => &self.compensated,
            Variant::Uncompensated => &self.uncompensated,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolRow {
    pub gate: String,
    pub variant: Variant,
    /// Axis of the collective input state.
    pub input: char,
    /// Empty when the output has no traceless part.
    pub c: Option<f64>,
    pub a: f64,
    pub c_a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateMeans {
    pub gate: String,
    pub variant: Variant,
    pub c: Option<f64>,
    pub a: f64,
    pub c_a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProtocolReport {
    pub rows: Vec<ProtocolRow>,
    pub gate_means: Vec<GateMeans>,
    /// Means of the per-gate means, one entry per variant.
    pub grand_means: Vec<GateMeans>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summarize(label: &str, variant: Variant, rows: &[&ProtocolRow]) -> GateMeans {
    GateMeans {
        gate: label.to_string(),
        variant,
        c: mean(rows.iter().filter_map(|r| r.c)),
        a: mean(rows.iter().map(|r| r.a)).unwrap_or(0.0),
        c_a: mean(rows.iter().map(|r| r.c_a)).unwrap_or(0.0),
    }
}

impl ProtocolReport {
    pub fn grand_mean(&self, variant: Variant) -> Option<&GateMeans> {
        self.grand_means.iter().find(|m| m.variant == variant)
    }

    /// `(1 - A_uncomp) / (1 - A_comp)` over the grand means.
    pub fn attenuation_gap_ratio(&self) -> Option<f64> {
        let c = self.grand_mean(Variant::Compensated)?.a;
        let u = self.grand_mean(Variant::Uncompensated)?.a;
        Some((1.0 - u) / (1.0 - c))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Rows for one pulse of one gate, in input order x, y, z.
pub fn gate_rows(prop: &Propagator, gate: &GateSpec, seq: &PulseSequence, dist: &RfDistribution, variant: Variant) -> Result<Vec<ProtocolRow>> {
    let n = prop.operators().n_spins();
    if gate.max_spin() > n {
        return Err(Error::SpinIndexOutOfRange { index: gate.max_spin(), n_spins: n });
    }
    let target = gate.unitary(n)?;
    let ks = kraus_set_with(prop, seq, dist)?;
    let thermal = StateMatrix::from_operator(total_spin_operator(Axis::Z, n))?;
    Axis::ALL
        .iter()
        .map(|&axis| {
            let rho_in = StateMatrix::from_operator(total_spin_operator(axis, n))?;
            let ideal = rho_in.conjugate_by(&target);
            let out = apply_kraus(&ks, &rho_in)?;
            let m = metric_report(&ideal, &out, &thermal)?;
            Ok(ProtocolRow {
                gate: gate.to_string(),
                variant,
                input: axis.label().to_ascii_lowercase(),
                c: m.correlation,
                a: m.attenuation,
                c_a: m.attenuated_correlation,
            })
        })
        .collect()
}

/// Runs both variants of every gate under one RF distribution.
pub fn run_protocol(sys: &SpinSystem, gates: &[GatePulses], dist: &RfDistribution) -> Result<ProtocolReport> {
    let prop = Propagator::new(sys);
    let mut rows = Vec::with_capacity(gates.len() * 6);
    for v in Variant::BOTH {
        for g in gates {
            rows.extend(gate_rows(&prop, &g.gate, g.sequence(v), dist, v)?);
        }
    }
    let mut gate_means = Vec::new();
    let mut grand_means = Vec::new();
    for v in Variant::BOTH {
        let mut per_gate = Vec::new();
        for g in gates {
            let name = g.gate.to_string();
            let mine: Vec<&ProtocolRow> = rows.iter().filter(|r| r.variant == v && r.gate == name).collect();
            per_gate.push(summarize(&name, v, &mine));
        }
        grand_means.push(GateMeans {
            gate: "all".into(),
            variant: v,
            c: mean(per_gate.iter().filter_map(|m| m.c)),
            a: mean(per_gate.iter().map(|m| m.a)).unwrap_or(0.0),
            c_a: mean(per_gate.iter().map(|m| m.c_a)).unwrap_or(0.0),
        });
        gate_means.extend(per_gate);
    }
    Ok(ProtocolReport { rows, gate_means, grand_means })
}
