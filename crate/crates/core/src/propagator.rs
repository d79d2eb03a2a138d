//! Unitary propagators for trains of square RF pulses.
//!
//! Each constant segment is solved exactly: in the frame rotating at the
//! segment carrier the Hamiltonian is time independent, so one
//! diagonalization plus a diagonal frame correction gives the propagator.
//! [`trotter_propagator`] integrates the lab-frame Schrödinger equation in
//! small steps instead and serves as the independent check of that algebra.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{matrix_exp_hermitian, Axis, Operator, C64};
use crate::spin_system::{SpinOperators, SpinSystem};

/// Upper bound on segments per sequence.
pub const MAX_SEGMENTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub duration_s: f64,
    pub amplitude_hz: f64,
    pub phase_rad: f64,
    pub carrier_offset_hz: f64,
}

impl PulseSegment {
    pub fn new(duration_s: f64, amplitude_hz: f64, phase_rad: f64, carrier_offset_hz: f64) -> Self {
        Self {
            duration_s,
            amplitude_hz,
            phase_rad,
            carrier_offset_hz,
        }
    }

    /// Free evolution: zero amplitude on the base frame.
    pub fn delay(duration_s: f64) -> Self {
        Self::new(duration_s, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.duration_s, self.amplitude_hz, self.phase_rad, self.carrier_offset_hz]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("pulse segment", "all fields must be finite"));
        }
        if self.duration_s <= 0.0 {
            return Err(Error::invalid("pulse segment", "duration must be positive"));
        }
        if self.amplitude_hz < 0.0 {
            return Err(Error::invalid("pulse segment", "amplitude must be non-negative"));
        }
        Ok(())
    }
}

/// Ordered square-pulse train, optionally tagged with the gate it implements.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub name: String,
    pub segments: Vec<PulseSegment>,
    #[serde(skip)]
    pub target: Option<Operator>,
}

impl PulseSequence {
    pub fn new(name: impl Into<String>, segments: Vec<PulseSegment>) -> Result<Self> {
        let seq = Self {
            name: name.into(),
            segments,
            target: None,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn with_target(mut self, target: Operator) -> Self {
        self.target = Some(target);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::invalid("pulse sequence", "at least one segment required"));
        }
        if self.segments.len() > MAX_SEGMENTS {
            return Err(Error::invalid(
                "pulse sequence",
                format!("{} segments exceeds the limit of {MAX_SEGMENTS}", self.segments.len()),
            ));
        }
        self.segments.iter().try_for_each(PulseSegment::validate)
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    pub fn min_duration(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.duration_s)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let seq: Self =
            serde_json::from_str(text).map_err(|e| Error::invalid("pulse sequence JSON", e.to_string()))?;
        seq.validate()?;
        Ok(seq)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Propagator engine for one spin system; caches operators shared by all segments.
#[derive(Clone, Debug)]
pub struct Propagator {
    ops: SpinOperators,
    h_int: Operator,
    /// Diagonal of `F_z` in the product basis.
    fz_diag: Vec<f64>,
}

impl Propagator {
    pub fn new(sys: &SpinSystem) -> Self {
        let ops = SpinOperators::new(sys.n_spins());
        let h_int = ops.internal_hamiltonian(sys);
        let fz = ops.total(Axis::Z);
        let fz_diag = (0..fz.dim()).map(|i| fz.matrix()[(i, i)].re).collect();
        Self { ops, h_int, fz_diag }
    }

    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    pub fn operators(&self) -> &SpinOperators {
        &self.ops
    }

    pub fn internal_hamiltonian(&self) -> &Operator {
        &self.h_int
    }

    /// `exp(-i 2 pi nu tau F_z)`, the return from the carrier frame to the base frame.
    fn frame_return(&self, carrier_hz: f64, duration_s: f64) -> Operator {
        let angle = TAU * carrier_hz * duration_s;
        let diag: Vec<C64> = self
            .fz_diag
            .iter()
            .map(|&m| C64::from_polar(1.0, -angle * m))
            .collect();
        Operator::from_diagonal(&diag).expect("power-of-two dimension")
    }

    /// Time-independent Hamiltonian in the frame rotating at the segment carrier.
    pub fn effective_hamiltonian(&self, seg: &PulseSegment, scale: f64) -> Operator {
        let detuning = self.ops.total(Axis::Z).scale_real(-TAU * seg.carrier_offset_hz);
        let rf = self.ops.rf_term(seg.amplitude_hz * scale, seg.phase_rad);
        &(&self.h_int + &detuning) + &rf
    }

    pub fn segment(&self, seg: &PulseSegment, scale: f64) -> Result<Operator> {
        seg.validate()?;
        check_scale(scale)?;
        let h_eff = self.effective_hamiltonian(seg, scale);
        let rotating = matrix_exp_hermitian(&h_eff, seg.duration_s)?;
        if seg.carrier_offset_hz == 0.0 {
            return Ok(rotating);
        }
        Ok(&self.frame_return(seg.carrier_offset_hz, seg.duration_s) * &rotating)
    }

    /// Time-ordered product, later segments on the left.
    pub fn sequence(&self, seq: &PulseSequence, scale: f64) -> Result<Operator> {
        seq.validate()?;
        seq.segments
            .iter()
            .try_fold(Operator::identity(self.dim()), |acc, seg| {
                Ok(&self.segment(seg, scale)? * &acc)
            })
    }

    /// Stepwise lab-frame integration with the carrier phase `phi + 2 pi nu t`
    /// evaluated at the midpoint of each step.
    ///
    /// Each segment is split into `ceil(tau / dt)` equal steps. `dt` must not
    /// exceed a tenth of the shortest segment.
    pub fn trotter(&self, seq: &PulseSequence, scale: f64, dt: f64) -> Result<Operator> {
        seq.validate()?;
        check_scale(scale)?;
        let max_dt = seq.min_duration() / 10.0;
        if !(dt > 0.0 && dt <= max_dt) {
            return Err(Error::StepTooCoarse { dt, max_dt });
        }
        let mut u = Operator::identity(self.dim());
        for seg in &seq.segments {
            let steps = (seg.duration_s / dt).ceil() as usize;
            let h = seg.duration_s / steps as f64;
            let amplitude = seg.amplitude_hz * scale;
            for s in 0..steps {
                let t_mid = (s as f64 + 0.5) * h;
                let phase = seg.phase_rad + TAU * seg.carrier_offset_hz * t_mid;
                let ham = &self.h_int + &self.ops.rf_term(amplitude, phase);
                u = &matrix_exp_hermitian(&ham, h)? * &u;
            }
        }
        Ok(u)
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("RF scale", format!("{scale} must be positive")))
    }
}

/// `U_z(nu, tau) exp(-i H_eff tau)` for one segment at RF scale `scale`.
pub fn segment_propagator(sys: &SpinSystem, seg: &PulseSegment, scale: f64) -> Result<Operator> {
    Propagator::new(sys).segment(seg, scale)
}

pub fn sequence_propagator(sys: &SpinSystem, seq: &PulseSequence, scale: f64) -> Result<Operator> {
    Propagator::new(sys).sequence(seq, scale)
}

pub fn trotter_propagator(sys: &SpinSystem, seq: &PulseSequence, scale: f64, dt: f64) -> Result<Operator> {
    Propagator::new(sys).trotter(seq, scale, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{hermitian_eigen, spin_operator};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn one_spin() -> SpinSystem {
        SpinSystem::uncoupled(&[0.0]).unwrap()
    }

    fn x_rotation(angle: f64) -> Operator {
        matrix_exp_hermitian(&spin_operator(Axis::X, 1, 1).unwrap(), angle).unwrap()
    }

    #[test]
    fn on_resonance_quarter_nutation_is_pi_over_two_x() {
        let a = 5000.0;
        let seg = PulseSegment::new(1.0 / (4.0 * a), a, 0.0, 0.0);
        let u = segment_propagator(&one_spin(), &seg, 1.0).unwrap();
        assert!(u.max_abs_diff(&x_rotation(FRAC_PI_2)) < 1e-12);
    }

    #[test]
    fn zero_amplitude_is_free_evolution() {
        let sys = SpinSystem::example_two_spin();
        let seg = PulseSegment::delay(3.3e-4);
        let u = segment_propagator(&sys, &seg, 1.0).unwrap();
        let free = matrix_exp_hermitian(&crate::spin_system::internal_hamiltonian(&sys), 3.3e-4).unwrap();
        assert!(u.max_abs_diff(&free) < 1e-12);
    }

    #[test]
    fn delays_compose() {
        let sys = SpinSystem::example_three_spin();
        let seq = PulseSequence::new("delays", vec![PulseSegment::delay(1e-4), PulseSegment::delay(2.5e-4)]).unwrap();
        let u = sequence_propagator(&sys, &seq, 1.0).unwrap();
        let free = matrix_exp_hermitian(&crate::spin_system::internal_hamiltonian(&sys), 3.5e-4).unwrap();
        assert!(u.max_abs_diff(&free) < 1e-11);
    }

    #[test]
    fn single_segment_sequence_equals_segment() {
        let sys = SpinSystem::example_two_spin();
        let seg = PulseSegment::new(1.7e-4, 2200.0, 0.4, 350.0);
        let seq = PulseSequence::new("one", vec![seg]).unwrap();
        let a = sequence_propagator(&sys, &seq, 0.93).unwrap();
        let b = segment_propagator(&sys, &seg, 0.93).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn later_segments_act_on_the_left() {
        let sys = one_spin();
        let x = PulseSegment::new(1.0 / 4000.0, 1000.0, 0.0, 0.0);
        let y = PulseSegment::new(1.0 / 4000.0, 1000.0, FRAC_PI_2, 0.0);
        let seq = PulseSequence::new("xy", vec![x, y]).unwrap();
        let u = sequence_propagator(&sys, &seq, 1.0).unwrap();
        let ux = segment_propagator(&sys, &x, 1.0).unwrap();
        let uy = segment_propagator(&sys, &y, 1.0).unwrap();
        assert!(u.max_abs_diff(&(&uy * &ux)) < 1e-14);
    }

    #[test]
    fn segment_matches_trotter_oracle() {
        let sys = SpinSystem::example_two_spin();
        let seg = PulseSegment::new(1.2e-4, 3000.0, 2.1, -900.0);
        let seq = PulseSequence::new("s", vec![seg]).unwrap();
        let exact = sequence_propagator(&sys, &seq, 1.05).unwrap();
        let stepped = trotter_propagator(&sys, &seq, 1.05, seg.duration_s / 1e5).unwrap();
        assert!(exact.frobenius_distance(&stepped) < 1e-8);
    }

    #[test]
    fn trotter_exact_for_constant_hamiltonian() {
        let sys = SpinSystem::example_two_spin();
        let seq = PulseSequence::new("free", vec![PulseSegment::delay(2e-4)]).unwrap();
        let exact = sequence_propagator(&sys, &seq, 1.0).unwrap();
        let stepped = trotter_propagator(&sys, &seq, 1.0, 2e-5).unwrap();
        assert!(exact.frobenius_distance(&stepped) < 1e-12);
    }

    #[test]
    fn trotter_on_resonance_pi_over_two() {
        let a = 2500.0;
        let tau = 1.0 / (4.0 * a);
        let seq = PulseSequence::new("p90", vec![PulseSegment::new(tau, a, 0.0, 0.0)]).unwrap();
        let u = trotter_propagator(&one_spin(), &seq, 1.0, tau / 1e4).unwrap();
        assert!(u.frobenius_distance(&x_rotation(FRAC_PI_2)) <= 1e-6);
    }

    #[test]
    fn trotter_rejects_coarse_step() {
        let seq = PulseSequence::new("p", vec![PulseSegment::new(1e-4, 100.0, 0.0, 0.0)]).unwrap();
        assert!(matches!(
            trotter_propagator(&one_spin(), &seq, 1.0, 2e-5),
            Err(Error::StepTooCoarse { .. })
        ));
    }

    /// The midpoint phase rule cancels the first-order term inside a segment,
    /// so halving the step divides the discrepancy by four.
    #[test]
    fn midpoint_rule_converges_at_second_order() {
        let sys = SpinSystem::example_two_spin();
        let seq = PulseSequence::new(
            "mix",
            vec![
                PulseSegment::new(1.1e-4, 2500.0, 0.3, 600.0),
                PulseSegment::new(0.8e-4, 4000.0, 2.2, -1500.0),
            ],
        )
        .unwrap();
        let exact = sequence_propagator(&sys, &seq, 1.0).unwrap();
        let dt = seq.min_duration() / 400.0;
        let e1 = exact.frobenius_distance(&trotter_propagator(&sys, &seq, 1.0, dt).unwrap());
        let e2 = exact.frobenius_distance(&trotter_propagator(&sys, &seq, 1.0, dt / 2.0).unwrap());
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn hundred_segment_products_stay_unitary() {
        let sys = SpinSystem::example_three_spin();
        let segments = (0..MAX_SEGMENTS)
            .map(|k| {
                let k = k as f64;
                PulseSegment::new(2e-5 + 1e-6 * k, 1000.0 + 37.0 * k, 0.1 * k, 50.0 * (k % 7.0) - 150.0)
            })
            .collect();
        let seq = PulseSequence::new("long", segments).unwrap();
        let u = sequence_propagator(&sys, &seq, 1.0).unwrap();
        assert!(u.unitarity_error() <= 1e-9);
    }

    #[test]
    fn nutation_angle_proportional_to_scale() {
        let sys = one_spin();
        let seq = PulseSequence::new("small", vec![PulseSegment::new(1e-5, 1000.0, 0.0, 0.0)]).unwrap();
        // rotation angle of exp(-i theta I_x) from the eigenphases
        let angle = |scale: f64| {
            let u = sequence_propagator(&sys, &seq, scale).unwrap();
            let h = crate::operator::matrix_log_principal(&u).unwrap().scale(crate::operator::I);
            let eig = hermitian_eigen(&h).unwrap();
            eig.values[1] - eig.values[0]
        };
        let a1 = angle(1.0);
        let a2 = angle(2.0);
        assert!((a1 - TAU * 1000.0 * 1e-5).abs() < 1e-12);
        assert!((a2 - 2.0 * a1).abs() < 1e-12);
        assert!(a2 < PI);
    }

    #[test]
    fn json_schema() {
        let text = r#"{ "name": "p", "segments": [
            { "duration_s": 1e-4, "amplitude_hz": 500, "phase_rad": 0.5, "carrier_offset_hz": -20 } ] }"#;
        let seq = PulseSequence::from_json(text).unwrap();
        assert_eq!(seq.segments.len(), 1);
        assert_eq!(seq.segments[0].carrier_offset_hz, -20.0);
        assert_eq!(PulseSequence::from_json(&seq.to_json()).unwrap(), seq);
        assert!(PulseSequence::from_json(r#"{ "name": "e", "segments": [] }"#).is_err());
        let negative = r#"{ "name": "n", "segments": [
            { "duration_s": -1, "amplitude_hz": 5, "phase_rad": 0, "carrier_offset_hz": 0 } ] }"#;
        assert!(PulseSequence::from_json(negative).is_err());
    }
}
