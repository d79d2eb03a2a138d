//! Numerical search for strongly-modulating pulses.
//!
//! A pulse of `n_segments` square segments is scored by one minus its gate
//! fidelity, either for the nominal RF amplitude alone (uncompensated) or
//! averaged over an RF distribution (compensated), plus a small penalty on
//! total duration. Independent Nelder-Mead runs from seeded random starts are
//! executed in parallel and the best is kept.

mod encoding;
pub mod simplex;

pub use encoding::{Encoding, PARAMS_PER_SEGMENT};

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{kraus_set_with, rescale_distribution, KrausSet, RfDistribution};
use crate::error::{Error, Result};
use crate::metrics::gate_fidelity_trace;
use crate::operator::Operator;
use crate::propagator::{PulseSequence, Propagator};
use crate::spin_system::SpinSystem;
use simplex::{minimize, SimplexOptions};

/// Carrier bound as a multiple of the largest chemical-shift offset.
pub const CARRIER_BOUND_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub n_segments: usize,
    pub max_amplitude_hz: f64,
    /// Upper bound on the whole sequence; each segment gets an equal share.
    pub max_duration_s: f64,
    pub n_restarts: usize,
    /// Simplex iterations per restart, summed over re-initializations.
    pub max_iterations: usize,
    /// Objective spread across the simplex that counts as collapsed.
    pub convergence_tol: f64,
    pub rng_seed: u64,
    pub duration_penalty_weight: f64,
    /// Designs below this fidelity are reported as unconverged.
    pub fidelity_floor: f64,
    /// Edge length of each random starting simplex, in encoded units.
    pub initial_step: f64,
    /// Edge length of the simplex rebuilt around the best point after a collapse.
    pub restart_perturbation: f64,
    /// Overrides the default carrier bound of ten times the largest offset.
    pub max_carrier_hz: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_segments: 4,
            max_amplitude_hz: 20_000.0,
            max_duration_s: 1e-3,
            n_restarts: 4,
            max_iterations: 2000,
            convergence_tol: 1e-9,
            rng_seed: 1,
            duration_penalty_weight: 0.01,
            fidelity_floor: 0.98,
            initial_step: 0.5,
            restart_perturbation: 0.3,
            max_carrier_hz: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| Err(Error::invalid("search config", reason.to_string()));
        if self.n_segments == 0 || self.n_restarts == 0 || self.max_iterations == 0 {
            return bad("segment, restart and iteration counts must be positive");
        }
        if self.n_segments > crate::propagator::MAX_SEGMENTS {
            return bad("too many segments");
        }
        let positive = [self.max_amplitude_hz, self.max_duration_s, self.convergence_tol, self.initial_step, self.restart_perturbation];
        if !positive.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return bad("amplitude, duration, tolerance and step sizes must be positive");
        }
        if self.convergence_tol >= 1e-3 {
            return bad("convergence_tol must be below 1e-3");
        }
        if !(self.duration_penalty_weight >= 0.0 && self.duration_penalty_weight.is_finite()) {
            return bad("duration_penalty_weight must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.fidelity_floor) {
            return bad("fidelity_floor must lie in [0, 1]");
        }
        if let Some(c) = self.max_carrier_hz {
            if !(c >= 0.0 && c.is_finite()) {
                return bad("max_carrier_hz must be non-negative");
            }
        }
        Ok(())
    }

    pub fn encoding(&self, sys: &SpinSystem) -> Encoding {
        Encoding {
            n_segments: self.n_segments,
            max_amplitude_hz: self.max_amplitude_hz,
            max_segment_duration_s: self.max_duration_s / self.n_segments as f64,
            max_carrier_hz: self
                .max_carrier_hz
                .unwrap_or(CARRIER_BOUND_FACTOR * sys.max_abs_offset_hz()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::invalid("search config JSON", e.to_string()))?;
        c.validate()?;
        Ok(c)
    }
}

pub fn encode_parameters(seq: &PulseSequence, encoding: &Encoding) -> Result<Vec<f64>> {
    encoding.encode(seq)
}

pub fn decode_parameters(v: &[f64], encoding: &Encoding) -> Result<PulseSequence> {
    encoding.decode(v)
}

/// Scores pulses against one target; shares the propagator engine across calls.
pub struct Objective<'a> {
    prop: Propagator,
    target: &'a Operator,
    dist: Option<&'a RfDistribution>,
    encoding: Encoding,
    penalty: f64,
    max_duration_s: f64,
}

impl<'a> Objective<'a> {
    pub fn new(target: &'a Operator, sys: &SpinSystem, dist: Option<&'a RfDistribution>, config: &SearchConfig) -> Result<Self> {
        config.validate()?;
        target.ensure_unitary()?;
        target.ensure_dim(sys.dim())?;
        Ok(Self {
            prop: Propagator::new(sys),
            target,
            dist,
            encoding: config.encoding(sys),
            penalty: config.duration_penalty_weight,
            max_duration_s: config.max_duration_s,
        })
    }

    pub fn encoding(&self) -> &Encoding {
        &self.encoding
    }

    /// Ensemble fidelity over the distribution, or coherent fidelity at scale 1.
    pub fn fidelity(&self, seq: &PulseSequence) -> Result<f64> {
        let ks = match self.dist {
            Some(d) => kraus_set_with(&self.prop, seq, d)?,
            None => KrausSet::single(self.prop.sequence(seq, 1.0)?)?,
        };
        gate_fidelity_trace(self.target, &ks)
    }

    pub fn score(&self, seq: &PulseSequence) -> Result<f64> {
        let f = self.fidelity(seq)?;
        Ok(1.0 - f + self.penalty * seq.total_duration() / self.max_duration_s)
    }

    pub fn evaluate(&self, v: &[f64]) -> Result<f64> {
        self.score(&self.encoding.decode(v)?)
    }
}

/// `1 - F + w T / T_max` for the pulse encoded by `v`.
pub fn objective(v: &[f64], target: &Operator, sys: &SpinSystem, dist: Option<&RfDistribution>, config: &SearchConfig) -> Result<f64> {
    Objective::new(target, sys, dist, config)?.evaluate(v)
}

/// Fidelity of `seq` against `target`: ensemble average when `dist` is given.
pub fn pulse_fidelity(seq: &PulseSequence, target: &Operator, sys: &SpinSystem, dist: Option<&RfDistribution>) -> Result<f64> {
    let prop = Propagator::new(sys);
    let ks = match dist {
        Some(d) => kraus_set_with(&prop, seq, d)?,
        None => KrausSet::single(prop.sequence(seq, 1.0)?)?,
    };
    gate_fidelity_trace(target, &ks)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub sequence: PulseSequence,
    /// Fidelity without the duration penalty.
    pub fidelity: f64,
    pub objective: f64,
    pub compensated: bool,
    /// Best objective after each simplex iteration of the winning restart.
    pub objective_history: Vec<f64>,
    pub restarts_used: usize,
    pub best_restart: usize,
    /// Whether `fidelity` reached the configured floor.
    pub converged: bool,
}

impl DesignResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::invalid("design result JSON", e.to_string()))?;
        r.sequence.validate()?;
        Ok(r)
    }
}

struct RestartOutcome {
    x: Vec<f64>,
    value: f64,
    history: Vec<f64>,
}

fn random_start(rng: &mut ChaCha8Rng, n_segments: usize) -> Vec<f64> {
    (0..n_segments)
        .flat_map(|_| {
            [
                rng.gen_range(-1.0..2.0),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(0.0..TAU),
                rng.gen_range(-0.5..0.5),
            ]
        })
        .collect()
}

fn run_restart(obj: &Objective<'_>, config: &SearchConfig, index: usize) -> RestartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(index as u64);
    let mut x = random_start(&mut rng, config.n_segments);
    let f = |v: &[f64]| obj.evaluate(v).unwrap_or(f64::INFINITY);

    let mut best = f64::INFINITY;
    let mut history = Vec::new();
    let mut left = config.max_iterations;
    let mut step = config.initial_step;
    while left > 0 {
        let m = minimize(f, &x, &SimplexOptions { max_iterations: left, tol: config.convergence_tol, initial_step: step });
        history.extend(m.history.iter().map(|&v| v.min(best)));
        left -= m.iterations.min(left);
        let improved = m.value < best - config.convergence_tol;
        if m.value < best {
            best = m.value;
            x = m.x;
        }
        if !improved || m.iterations == 0 {
            break;
        }
        // collapsed simplex: rebuild it around the best point and continue
        step = config.restart_perturbation;
    }
    RestartOutcome { x, value: best, history }
}

/// Best of `n_restarts` independent searches; deterministic for a given seed.
///
/// A design below `fidelity_floor` is returned with `converged = false`.
pub fn design_pulse(target: &Operator, sys: &SpinSystem, dist: Option<&RfDistribution>, config: &SearchConfig) -> Result<DesignResult> {
    let obj = Objective::new(target, sys, dist, config)?;
    let outcomes: Vec<RestartOutcome> = (0..config.n_restarts)
        .into_par_iter()
        .map(|r| run_restart(&obj, config, r))
        .collect();
    let (best_restart, best) = outcomes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    let sequence = obj.encoding().decode(&best.x)?.with_target(target.clone());
    let fidelity = obj.fidelity(&sequence)?;
    Ok(DesignResult {
        objective: obj.score(&sequence)?,
        sequence,
        fidelity,
        compensated: dist.is_some(),
        objective_history: best.history.clone(),
        restarts_used: outcomes.len(),
        best_restart,
        converged: fidelity >= config.fidelity_floor,
    })
}

/// Coherent fidelity of `seq` at each RF scale factor.
pub fn sweep_rf_scale(seq: &PulseSequence, target: &Operator, sys: &SpinSystem, scales: &[f64]) -> Result<Vec<(f64, f64)>> {
    let prop = Propagator::new(sys);
    scales
        .iter()
        .map(|&s| {
            let ks = KrausSet::single(prop.sequence(seq, s)?)?;
            Ok((s, gate_fidelity_trace(target, &ks)?))
        })
        .collect()
}

/// Ensemble fidelity of `seq` as the profile is stretched about its mean.
pub fn sweep_profile_width(
    seq: &PulseSequence,
    target: &Operator,
    sys: &SpinSystem,
    dist: &RfDistribution,
    widths: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let prop = Propagator::new(sys);
    widths
        .iter()
        .map(|&w| {
            let d = rescale_distribution(dist, w)?;
            let ks = kraus_set_with(&prop, seq, &d)?;
            Ok((w, gate_fidelity_trace(target, &ks)?))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerFieldCell {
    pub b0_factor: f64,
    pub max_amplitude_hz: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerFieldGrid {
    /// Row-major: outer loop over field factors, inner over power caps.
    pub cells: Vec<PowerFieldCell>,
    /// Neighbouring cells where fidelity fell as field or power grew.
    pub monotonicity_violations: Vec<String>,
}

/// Best design fidelity for every combination of field factor and RF cap.
pub fn sweep_power_field(
    target: &Operator,
    sys: &SpinSystem,
    dist: Option<&RfDistribution>,
    b0_factors: &[f64],
    power_caps_hz: &[f64],
    config: &SearchConfig,
) -> Result<PowerFieldGrid> {
    let mut cells = Vec::with_capacity(b0_factors.len() * power_caps_hz.len());
    for &b0 in b0_factors {
        let scaled = sys.with_field_scale(b0)?;
        for &cap in power_caps_hz {
            let cfg = SearchConfig { max_amplitude_hz: cap, ..config.clone() };
            let r = design_pulse(target, &scaled, dist, &cfg)?;
            cells.push(PowerFieldCell { b0_factor: b0, max_amplitude_hz: cap, fidelity: r.fidelity });
        }
    }
    let np = power_caps_hz.len();
    let at = |i: usize, j: usize| cells[i * np + j];
    let mut violations = Vec::new();
    for i in 0..b0_factors.len() {
        for j in 0..np {
            let c = at(i, j);
            if j + 1 < np && at(i, j + 1).fidelity < c.fidelity {
                violations.push(format!(
                    "b0 x{}: fidelity fell from {:.6} to {:.6} as the cap rose to {} Hz",
                    c.b0_factor, c.fidelity, at(i, j + 1).fidelity, power_caps_hz[j + 1]
                ));
            }
            if i + 1 < b0_factors.len() && at(i + 1, j).fidelity < c.fidelity {
                violations.push(format!(
                    "cap {} Hz: fidelity fell from {:.6} to {:.6} as b0 rose to x{}",
                    c.max_amplitude_hz, c.fidelity, at(i + 1, j).fidelity, b0_factors[i + 1]
                ));
            }
        }
    }
    Ok(PowerFieldGrid { cells, monotonicity_violations: violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::GateSpec;
    use crate::propagator::PulseSegment;

    fn x90() -> Operator {
        "x90@1".parse::<GateSpec>().unwrap().unitary(1).unwrap()
    }

    fn one_spin() -> SpinSystem {
        SpinSystem::uncoupled(&[0.0]).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        for bad in [
            SearchConfig { convergence_tol: 1e-3, ..Default::default() },
            SearchConfig { n_segments: 0, ..Default::default() },
            SearchConfig { max_amplitude_hz: -1.0, ..Default::default() },
            SearchConfig { fidelity_floor: 1.5, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn config_json_fills_defaults() {
        let c = SearchConfig::from_json(r#"{"n_segments": 2, "rng_seed": 9}"#).unwrap();
        assert_eq!(c.n_segments, 2);
        assert_eq!(c.rng_seed, 9);
        assert_eq!(c.max_iterations, SearchConfig::default().max_iterations);
    }

    #[test]
    fn exact_pulse_scores_zero_without_penalty() {
        let config = SearchConfig { n_segments: 1, duration_penalty_weight: 0.0, ..Default::default() };
        // quarter turn at 10 kHz takes 25 us
        let seq = PulseSequence::new("x90", vec![PulseSegment::new(25e-6, 10_000.0, 0.0, 0.0)]).unwrap();
        let enc = config.encoding(&one_spin());
        let v = enc.encode(&seq).unwrap();
        let target = x90();
        let value = objective(&v, &target, &one_spin(), None, &config).unwrap();
        assert!(value.abs() < 1e-12, "{value}");
        let d = RfDistribution::synthetic_default();
        assert!(objective(&v, &target, &one_spin(), Some(&d), &config).unwrap() > 1e-4);
    }

    #[test]
    fn single_bin_distribution_matches_uncompensated_objective() {
        let sys = SpinSystem::example_two_spin();
        let config = SearchConfig::default();
        let target = "x90@1".parse::<GateSpec>().unwrap().unitary(2).unwrap();
        let v: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let delta = RfDistribution::delta(1.0).unwrap();
        let a = objective(&v, &target, &sys, None, &config).unwrap();
        let b = objective(&v, &target, &sys, Some(&delta), &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn nearby_vectors_give_nearby_propagators() {
        let sys = SpinSystem::example_two_spin();
        let enc = SearchConfig::default().encoding(&sys);
        let prop = Propagator::new(&sys);
        let v: Vec<f64> = (0..16).map(|i| (i as f64 * 0.91).cos()).collect();
        let u0 = prop.sequence(&enc.decode(&v).unwrap(), 1.0).unwrap();
        let mut ratios = Vec::new();
        for h in [1e-4, 1e-5, 1e-6] {
            let w: Vec<f64> = v.iter().map(|x| x + h).collect();
            let u1 = prop.sequence(&enc.decode(&w).unwrap(), 1.0).unwrap();
            ratios.push(u0.frobenius_distance(&u1) / h);
        }
        // a Lipschitz map shows a stable difference quotient
        assert!(ratios.iter().all(|r| r.is_finite() && *r < 1e3));
        assert!((ratios[1] - ratios[2]).abs() < 0.05 * ratios[2]);
    }

    #[test]
    fn one_spin_quarter_turn_design() {
        let config = SearchConfig { n_segments: 2, max_duration_s: 2e-4, n_restarts: 2, max_iterations: 1500, ..Default::default() };
        let r = design_pulse(&x90(), &one_spin(), None, &config).unwrap();
        assert!(r.fidelity >= 0.999, "{}", r.fidelity);
        assert!(r.converged && !r.compensated);
        assert!(r.objective_history.windows(2).all(|w| w[1] <= w[0]));
        let again = pulse_fidelity(&r.sequence, &x90(), &one_spin(), None).unwrap();
        assert!((again - r.fidelity).abs() <= 1e-12);
    }

    #[test]
    fn design_is_deterministic() {
        let config = SearchConfig { n_segments: 2, n_restarts: 3, max_iterations: 200, ..Default::default() };
        let d = RfDistribution::synthetic_default();
        let a = design_pulse(&x90(), &one_spin(), Some(&d), &config).unwrap();
        let b = design_pulse(&x90(), &one_spin(), Some(&d), &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.compensated);
    }

    #[test]
    fn result_json_round_trip() {
        let config = SearchConfig { n_segments: 1, n_restarts: 1, max_iterations: 50, ..Default::default() };
        let r = design_pulse(&x90(), &one_spin(), None, &config).unwrap();
        let mut back = DesignResult::from_json(&r.to_json()).unwrap();
        back.sequence.target = r.sequence.target.clone();
        assert_eq!(back, r);
    }

    #[test]
    fn sweeps_reduce_to_point_evaluations() {
        let sys = SpinSystem::example_two_spin();
        let target = "x90@1".parse::<GateSpec>().unwrap().unitary(2).unwrap();
        let seq = SearchConfig::default().encoding(&sys).decode(&[0.3; 16]).unwrap();
        let at_one = sweep_rf_scale(&seq, &target, &sys, &[1.0]).unwrap();
        assert_eq!(at_one[0].1, pulse_fidelity(&seq, &target, &sys, None).unwrap());

        let d = RfDistribution::synthetic_default();
        let curve = sweep_profile_width(&seq, &target, &sys, &d, &[0.0, 1.0]).unwrap();
        let coherent_at_mean = sweep_rf_scale(&seq, &target, &sys, &[d.mean_scale()]).unwrap()[0].1;
        assert!((curve[0].1 - coherent_at_mean).abs() < 1e-12);
        assert!((curve[1].1 - pulse_fidelity(&seq, &target, &sys, Some(&d)).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn power_field_single_cell_matches_design() {
        let config = SearchConfig { n_segments: 1, n_restarts: 1, max_iterations: 100, ..Default::default() };
        let sys = one_spin();
        let grid = sweep_power_field(&x90(), &sys, None, &[1.0], &[config.max_amplitude_hz], &config).unwrap();
        let direct = design_pulse(&x90(), &sys, None, &config).unwrap();
        assert_eq!(grid.cells.len(), 1);
        assert_eq!(grid.cells[0].fidelity, direct.fidelity);
    }
}
