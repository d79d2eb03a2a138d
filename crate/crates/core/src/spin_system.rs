//! Homonuclear spin systems and their Hamiltonians.
//!
//! Offsets and couplings are configured in Hz; the Hamiltonians returned
//! here are in rad/s.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{spin_operator, total_spin_operator, Axis, Operator};

/// Chemical-shift offsets (rotating frame) and scalar couplings of `N` like spins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpinSystemFile", into = "SpinSystemFile")]
pub struct SpinSystem {
    labels: Vec<String>,
    offsets_hz: Vec<f64>,
    couplings_hz: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SpinEntry {
    label: String,
    offset_hz: f64,
}

/// On-disk layout: `{ "spins": [{ "label", "offset_hz" }], "j_hz": [[..]] }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct SpinSystemFile {
    spins: Vec<SpinEntry>,
    j_hz: Vec<Vec<f64>>,
}

impl TryFrom<SpinSystemFile> for SpinSystem {
    type Error = Error;

    fn try_from(file: SpinSystemFile) -> Result<Self> {
        let (labels, offsets) = file.spins.into_iter().map(|s| (s.label, s.offset_hz)).unzip();
        SpinSystem::new(labels, offsets, file.j_hz)
    }
}

impl From<SpinSystem> for SpinSystemFile {
    fn from(sys: SpinSystem) -> Self {
        SpinSystemFile {
            spins: sys
                .labels
                .into_iter()
                .zip(sys.offsets_hz)
                .map(|(label, offset_hz)| SpinEntry { label, offset_hz })
                .collect(),
            j_hz: sys.couplings_hz,
        }
    }
}

impl SpinSystem {
    pub fn new(labels: Vec<String>, offsets_hz: Vec<f64>, couplings_hz: Vec<Vec<f64>>) -> Result<Self> {
        let n = offsets_hz.len();
        if n == 0 {
            return Err(Error::invalid("spin system", "at least one spin required"));
        }
        if labels.len() != n {
            return Err(Error::invalid("spin system", "one label per spin required"));
        }
        if let Some(bad) = offsets_hz.iter().find(|o| !o.is_finite()) {
            return Err(Error::invalid("spin system", format!("offset {bad} is not finite")));
        }
        if couplings_hz.len() != n || couplings_hz.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("spin system", format!("j_hz must be {n}x{n}")));
        }
        for k in 0..n {
            if couplings_hz[k][k] != 0.0 {
                return Err(Error::invalid("spin system", format!("j_hz[{k}][{k}] must be zero")));
            }
            for j in 0..n {
                let (a, b) = (couplings_hz[k][j], couplings_hz[j][k]);
                if !a.is_finite() || a != b {
                    return Err(Error::invalid(
                        "spin system",
                        format!("j_hz must be finite and symmetric (entry {k},{j})"),
                    ));
                }
            }
        }
        Ok(Self {
            labels,
            offsets_hz,
            couplings_hz,
        })
    }

    /// Uncoupled spins with default labels `S1`, `S2`, ...
    pub fn uncoupled(offsets_hz: &[f64]) -> Result<Self> {
        let n = offsets_hz.len();
        Self::new(
            (1..=n).map(|k| format!("S{k}")).collect(),
            offsets_hz.to_vec(),
            vec![vec![0.0; n]; n],
        )
    }

    /// Illustrative three-spin system with alanine-like coupling magnitudes.
    ///
    /// These are NOT measured molecular parameters; they exist so examples and
    /// tests have a realistic-looking coupled system to work with.
    pub fn example_three_spin() -> Self {
        Self::new(
            vec!["C1".into(), "C2".into(), "C3".into()],
            vec![1500.0, -300.0, -1800.0],
            vec![
                vec![0.0, 54.0, -1.2],
                vec![54.0, 0.0, 35.0],
                vec![-1.2, 35.0, 0.0],
            ],
        )
        .expect("valid example")
    }

    /// Illustrative two-spin system.
    pub fn example_two_spin() -> Self {
        Self::new(
            vec!["A".into(), "B".into()],
            vec![800.0, -800.0],
            vec![vec![0.0, 50.0], vec![50.0, 0.0]],
        )
        .expect("valid example")
    }

    pub fn n_spins(&self) -> usize {
        self.offsets_hz.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn offsets_hz(&self) -> &[f64] {
        &self.offsets_hz
    }

    /// Scalar coupling between spins `k` and `j` (0-based), Hz.
    pub fn coupling_hz(&self, k: usize, j: usize) -> f64 {
        self.couplings_hz[k][j]
    }

    pub fn max_abs_offset_hz(&self) -> f64 {
        self.offsets_hz.iter().fold(0.0, |m, o| m.max(o.abs()))
    }

    /// Same molecule at a different static field: offsets scale with `b0_factor`,
    /// couplings do not.
    pub fn with_field_scale(&self, b0_factor: f64) -> Result<Self> {
        if !(b0_factor > 0.0 && b0_factor.is_finite()) {
            return Err(Error::invalid("field scale", format!("{b0_factor} must be positive")));
        }
        let mut out = self.clone();
        out.offsets_hz.iter_mut().for_each(|o| *o *= b0_factor);
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid("spin system JSON", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Applied RF field for one constant segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RfField {
    /// Nutation frequency, Hz.
    pub amplitude_hz: f64,
    pub phase_rad: f64,
    /// Carrier offset from the base rotating frame, Hz.
    pub carrier_offset_hz: f64,
    /// Dimensionless inhomogeneity factor multiplying the amplitude.
    pub scale: f64,
}

impl RfField {
    pub fn on_resonance(amplitude_hz: f64, phase_rad: f64) -> Self {
        Self {
            amplitude_hz,
            phase_rad,
            carrier_offset_hz: 0.0,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_hz >= 0.0) || !self.amplitude_hz.is_finite() {
            return Err(Error::invalid("RF field", "amplitude must be finite and non-negative"));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::invalid("RF field", "scale must be positive"));
        }
        Ok(())
    }
}

/// Cached single-spin and collective angular momentum operators for `N` spins.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    n_spins: usize,
    ix: Vec<Operator>,
    iy: Vec<Operator>,
    iz: Vec<Operator>,
    fx: Operator,
    fy: Operator,
    fz: Operator,
}

impl SpinOperators {
    pub fn new(n_spins: usize) -> Self {
        let build = |axis| -> Vec<Operator> {
            (1..=n_spins)
                .map(|k| spin_operator(axis, k, n_spins).expect("index in range"))
                .collect()
        };
        Self {
            n_spins,
            ix: build(Axis::X),
            iy: build(Axis::Y),
            iz: build(Axis::Z),
            fx: total_spin_operator(Axis::X, n_spins),
            fy: total_spin_operator(Axis::Y, n_spins),
            fz: total_spin_operator(Axis::Z, n_spins),
        }
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    /// `I_axis^k` for 0-based spin `k`.
    pub fn single(&self, axis: Axis, k: usize) -> &Operator {
        match axis {
            Axis::X => &self.ix[k],
            Axis::Y => &self.iy[k],
            Axis::Z => &self.iz[k],
        }
    }

    /// `sum_k I_axis^k`.
    pub fn total(&self, axis: Axis) -> &Operator {
        match axis {
            Axis::X => &self.fx,
            Axis::Y => &self.fy,
            Axis::Z => &self.fz,
        }
    }

    /// `sum_{k in spins} I_axis^k` for 0-based indices.
    pub fn sum_over(&self, axis: Axis, spins: &[usize]) -> Operator {
        spins.iter().fold(Operator::zeros(self.dim()), |mut acc, &k| {
            acc += self.single(axis, k);
            acc
        })
    }

    pub fn internal_hamiltonian(&self, sys: &SpinSystem) -> Operator {
        assert_eq!(sys.n_spins(), self.n_spins, "spin count mismatch");
        let mut h = Operator::zeros(self.dim());
        for k in 0..self.n_spins {
            h += &self.iz[k].scale_real(TAU * sys.offsets_hz[k]);
            for j in (k + 1)..self.n_spins {
                let jkj = sys.couplings_hz[k][j];
                if jkj == 0.0 {
                    continue;
                }
                let dot = &(&(&self.ix[k] * &self.ix[j]) + &(&self.iy[k] * &self.iy[j]))
                    + &(&self.iz[k] * &self.iz[j]);
                h += &dot.scale_real(TAU * jkj);
            }
        }
        h
    }

    /// `2 pi a (cos(phi) F_x + sin(phi) F_y)` for an effective amplitude `a` in Hz.
    pub fn rf_term(&self, amplitude_hz: f64, phase_rad: f64) -> Operator {
        let w = TAU * amplitude_hz;
        &self.fx.scale_real(w * phase_rad.cos()) + &self.fy.scale_real(w * phase_rad.sin())
    }
}

/// Internal Hamiltonian in rad/s: Zeeman offsets plus isotropic `I^k . I^j` couplings.
pub fn internal_hamiltonian(sys: &SpinSystem) -> Operator {
    SpinOperators::new(sys.n_spins()).internal_hamiltonian(sys)
}

/// RF Hamiltonian in rad/s. The carrier offset is not applied here; it enters
/// through the rotating-frame transformation in the propagator.
pub fn rf_hamiltonian(sys: &SpinSystem, rf: &RfField) -> Result<Operator> {
    rf.validate()?;
    Ok(SpinOperators::new(sys.n_spins()).rf_term(rf.amplitude_hz * rf.scale, rf.phase_rad))
}
