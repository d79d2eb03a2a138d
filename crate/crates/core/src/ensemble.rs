//! Incoherent RF-amplitude variation over the sample.
//!
//! Each region of the sample sees the nominal RF amplitude multiplied by a
//! scale factor `f_k`; the ensemble channel is the convex sum of the
//! corresponding unitaries weighted by the fraction `p_k` of spins in that bin.

use std::f64::consts::TAU;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{CMatrix, Operator, StateMatrix, Superoperator, C64};
use crate::propagator::{PulseSequence, Propagator};
use crate::spin_system::SpinSystem;

/// Tolerance on `sum p_k = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RfBin {
    pub scale: f64,
    pub weight: f64,
}

/// Discrete histogram of RF amplitude scale factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RfDistributionFile")]
pub struct RfDistribution {
    bins: Vec<RfBin>,
}

#[derive(Deserialize)]
struct RfDistributionFile {
    bins: Vec<RfBin>,
}

impl TryFrom<RfDistributionFile> for RfDistribution {
    type Error = Error;

    /// Imported profiles are renormalized; measured histograms rarely sum to one.
    fn try_from(file: RfDistributionFile) -> Result<Self> {
        RfDistribution::normalized(file.bins)
    }
}

impl RfDistribution {
    /// Validates a histogram whose weights already sum to one.
    pub fn new(bins: Vec<RfBin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::invalid("RF distribution", "at least one bin required"));
        }
        for b in &bins {
            if !(b.scale > 0.0 && b.scale.is_finite()) {
                return Err(Error::invalid("RF distribution", format!("scale {} must be positive", b.scale)));
            }
            if !(b.weight >= 0.0 && b.weight.is_finite()) {
                return Err(Error::invalid("RF distribution", format!("weight {} must be non-negative", b.weight)));
            }
        }
        if bins.windows(2).any(|w| w[1].scale <= w[0].scale) {
            return Err(Error::invalid("RF distribution", "scales must be strictly increasing"));
        }
        let total: f64 = bins.iter().map(|b| b.weight).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid("RF distribution", format!("weights sum to {total}, not 1")));
        }
        Ok(Self { bins })
    }

    /// Divides weights by their sum before validating.
    pub fn normalized(mut bins: Vec<RfBin>) -> Result<Self> {
        let total: f64 = bins.iter().map(|b| b.weight).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::invalid("RF distribution", "weights must have a positive finite sum"));
        }
        bins.iter_mut().for_each(|b| b.weight /= total);
        Self::new(bins)
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::normalized(pairs.iter().map(|&(scale, weight)| RfBin { scale, weight }).collect())
    }

    /// Perfectly homogeneous field at `scale`.
    pub fn delta(scale: f64) -> Result<Self> {
        Self::new(vec![RfBin { scale, weight: 1.0 }])
    }

    /// Synthetic nine-bin profile: peak at 1.0, a long tail toward weaker
    /// fields and a small shoulder above. Illustrative, not a measurement.
    pub fn synthetic_default() -> Self {
        let scales = [0.86, 0.88, 0.90, 0.92, 0.94, 0.96, 0.98, 1.00, 1.02];
        let weights = [0.02, 0.03, 0.04, 0.06, 0.08, 0.12, 0.20, 0.30, 0.15];
        let pairs: Vec<_> = scales.into_iter().zip(weights).collect();
        Self::from_pairs(&pairs).expect("valid synthetic profile")
    }

    /// Equal weights on `n_bins` evenly spaced scales spanning `center +- half_width`.
    pub fn uniform(center: f64, half_width: f64, n_bins: usize) -> Result<Self> {
        Self::symmetric_profile(center, half_width, n_bins, |_| 1.0)
    }

    /// Triangular weights peaked at `center`; the outermost bins keep a nonzero weight.
    pub fn triangular(center: f64, half_width: f64, n_bins: usize) -> Result<Self> {
        let n = n_bins as f64;
        Self::symmetric_profile(center, half_width, n_bins, |x| n + 1.0 - (n - 1.0) * x.abs())
    }

    /// Two equal bins at `center -+ delta`.
    pub fn two_bin(center: f64, delta: f64) -> Result<Self> {
        Self::new(vec![
            RfBin { scale: center - delta, weight: 0.5 },
            RfBin { scale: center + delta, weight: 0.5 },
        ])
    }

    fn symmetric_profile(center: f64, half_width: f64, n_bins: usize, shape: impl Fn(f64) -> f64) -> Result<Self> {
        if n_bins == 0 || !(half_width >= 0.0) {
            return Err(Error::invalid("RF distribution", "need n_bins >= 1 and half_width >= 0"));
        }
        if n_bins == 1 || half_width == 0.0 {
            return Self::delta(center);
        }
        let pairs: Vec<(f64, f64)> = (0..n_bins)
            .map(|i| {
                let x = 2.0 * i as f64 / (n_bins - 1) as f64 - 1.0;
                (center + half_width * x, shape(x))
            })
            .collect();
        Self::from_pairs(&pairs)
    }

    pub fn bins(&self) -> &[RfBin] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn scales(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.scale).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.weight).collect()
    }

    pub fn mean_scale(&self) -> f64 {
        self.bins.iter().map(|b| b.weight * b.scale).sum()
    }

    pub fn scale_variance(&self) -> f64 {
        let mean = self.mean_scale();
        self.bins.iter().map(|b| b.weight * (b.scale - mean).powi(2)).sum()
    }

    /// Bin of maximum weight, ties broken toward the scale nearest 1.
    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, b) in self.bins.iter().enumerate().skip(1) {
            let cur = &self.bins[best];
            if b.weight > cur.weight
                || (b.weight == cur.weight && (b.scale - 1.0).abs() < (cur.scale - 1.0).abs())
            {
                best = i;
            }
        }
        best
    }

    /// Mirror symmetry of weights and scales about the mean.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let mean = self.mean_scale();
        let n = self.bins.len();
        (0..n).all(|i| {
            let (a, b) = (&self.bins[i], &self.bins[n - 1 - i]);
            (a.weight - b.weight).abs() <= tol && ((a.scale - mean) + (b.scale - mean)).abs() <= tol
        })
    }

    /// Total-variation distance `1/2 sum |p_i - q_i|`, pairing bins by index.
    /// `None` when the bin counts differ.
    pub fn total_variation_by_index(&self, other: &RfDistribution) -> Option<f64> {
        (self.len() == other.len()).then(|| {
            0.5 * self
                .bins
                .iter()
                .zip(&other.bins)
                .map(|(a, b)| (a.weight - b.weight).abs())
                .sum::<f64>()
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid("RF distribution JSON", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Stretch (`width_factor > 1`) or narrow (`< 1`) a profile about its mean scale.
///
/// Weights are unchanged. Width 0 collapses the profile to a single bin at the
/// mean.
pub fn rescale_distribution(dist: &RfDistribution, width_factor: f64) -> Result<RfDistribution> {
    if !(width_factor >= 0.0 && width_factor.is_finite()) {
        return Err(Error::invalid("width factor", format!("{width_factor} must be non-negative")));
    }
    if width_factor == 1.0 {
        return Ok(dist.clone());
    }
    let mean = dist.mean_scale();
    if width_factor == 0.0 {
        return RfDistribution::delta(mean);
    }
    let bins = dist
        .bins
        .iter()
        .map(|b| {
            let scale = mean + width_factor * (b.scale - mean);
            if scale <= 0.0 {
                Err(Error::NonPositiveScale(scale))
            } else {
                Ok(RfBin { scale, weight: b.weight })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    RfDistribution::normalized(bins)
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrausElement {
    pub weight: f64,
    pub unitary: Operator,
}

/// Weighted unitaries `{(p_k, U_k)}`; Kraus operators are `sqrt(p_k) U_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    elements: Vec<KrausElement>,
    dim: usize,
}

impl KrausSet {
    pub fn new(elements: Vec<KrausElement>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::invalid("Kraus set", "at least one element required"))?;
        let dim = first.unitary.dim();
        let mut total = 0.0;
        for e in &elements {
            e.unitary.ensure_dim(dim)?;
            e.unitary.ensure_unitary()?;
            if !(e.weight >= 0.0 && e.weight.is_finite()) {
                return Err(Error::invalid("Kraus set", "weights must be non-negative"));
            }
            total += e.weight;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid("Kraus set", format!("weights sum to {total}, not 1")));
        }
        Ok(Self { elements, dim })
    }

    pub fn single(unitary: Operator) -> Result<Self> {
        Self::new(vec![KrausElement { weight: 1.0, unitary }])
    }

    pub fn from_parts(weights: &[f64], unitaries: Vec<Operator>) -> Result<Self> {
        if weights.len() != unitaries.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: unitaries.len(),
            });
        }
        Self::new(
            weights
                .iter()
                .zip(unitaries)
                .map(|(&weight, unitary)| KrausElement { weight, unitary })
                .collect(),
        )
    }

    pub fn elements(&self) -> &[KrausElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> Vec<f64> {
        self.elements.iter().map(|e| e.weight).collect()
    }

    /// `max |sum_k p_k U_k^dagger U_k - 1|`.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim;
        let sum = self.elements.iter().fold(CMatrix::zeros(d, d), |acc, e| {
            acc + (e.unitary.matrix().adjoint() * e.unitary.matrix()).map(|z| z * e.weight)
        });
        crate::operator::max_abs(&(sum - CMatrix::identity(d, d)))
    }

    /// Every unitary conjugated by `w`: `U_k -> W U_k W^dagger`.
    pub fn conjugated_by(&self, w: &Operator) -> Result<KrausSet> {
        w.ensure_dim(self.dim)?;
        Ok(KrausSet {
            elements: self
                .elements
                .iter()
                .map(|e| KrausElement {
                    weight: e.weight,
                    unitary: &(w * &e.unitary) * &w.adjoint(),
                })
                .collect(),
            dim: self.dim,
        })
    }
}

/// Propagators of `seq` at every scale of `dist`, paired with the bin weights.
pub fn kraus_set(sys: &SpinSystem, seq: &PulseSequence, dist: &RfDistribution) -> Result<KrausSet> {
    kraus_set_with(&Propagator::new(sys), seq, dist)
}

pub fn kraus_set_with(prop: &Propagator, seq: &PulseSequence, dist: &RfDistribution) -> Result<KrausSet> {
    let elements = dist
        .bins()
        .par_iter()
        .map(|b| {
            Ok(KrausElement {
                weight: b.weight,
                unitary: prop.sequence(seq, b.scale)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    KrausSet::new(elements)
}

/// `sum_k p_k U_k rho U_k^dagger`.
pub fn apply_kraus(ks: &KrausSet, rho: &StateMatrix) -> Result<StateMatrix> {
    if rho.dim() != ks.dim {
        return Err(Error::DimensionMismatch {
            expected: ks.dim,
            found: rho.dim(),
        });
    }
    let d = ks.dim;
    let out = ks.elements.iter().fold(CMatrix::zeros(d, d), |acc, e| {
        let u = e.unitary.matrix();
        acc + (u * rho.matrix() * u.adjoint()).map(|z| z * e.weight)
    });
    // restore exact Hermiticity lost to rounding
    Ok(StateMatrix::wrap((&out + out.adjoint()).map(|z| z * 0.5)))
}

/// `sum_k p_k conj(U_k) (x) U_k`.
pub fn superoperator(ks: &KrausSet) -> Superoperator {
    let d = ks.dim * ks.dim;
    let m = ks.elements.iter().fold(CMatrix::zeros(d, d), |acc, e| {
        let u = e.unitary.matrix();
        acc + u.conjugate().kronecker(u).map(|z| z * e.weight)
    });
    Superoperator::wrap(m)
}

/// Ensemble-averaged transverse magnetization of a single on-resonance spin
/// starting along z, sampled after pulses of length `j * dwell_s`.
pub fn simulate_nutation(amplitude_hz: f64, dist: &RfDistribution, dwell_s: f64, n_points: usize) -> Result<Vec<f64>> {
    if !n_points.is_power_of_two() {
        return Err(Error::invalid("nutation", format!("n_points {n_points} must be a power of two")));
    }
    if !(amplitude_hz > 0.0 && dwell_s > 0.0) {
        return Err(Error::invalid("nutation", "amplitude and dwell must be positive"));
    }
    Ok((0..n_points)
        .map(|j| {
            let t = j as f64 * dwell_s;
            dist.bins()
                .iter()
                .map(|b| b.weight * (TAU * amplitude_hz * b.scale * t).sin())
                .sum()
        })
        .collect())
}

/// Spectral points below this fraction of the dominant peak are not treated as
/// separate nutation components.
pub const PEAK_FRACTION: f64 = 0.01;

/// Half-width of the Blackman main lobe, in frequency-resolution steps.
const LOBE_HALF_WIDTH: f64 = 3.0;

/// One-sided Blackman-windowed magnitude spectrum `(frequency_hz, magnitude)`,
/// excluding DC and Nyquist.
pub fn nutation_spectrum(signal: &[f64], dwell_s: f64) -> Vec<(f64, f64)> {
    let n = signal.len();
    if n < 4 {
        return Vec::new();
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    let denom = (n - 1) as f64;
    let mut buf: Vec<C64> = signal
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let x = TAU * i as f64 / denom;
            let w = 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos();
            C64::new((s - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = 1.0 / (n as f64 * dwell_s);
    (1..n / 2).map(|k| (k as f64 * df, buf[k].norm())).collect()
}

/// Recovers an RF profile from a nutation signal.
///
/// The spectral components above [`PEAK_FRACTION`] of the dominant peak fix the
/// frequency span; the span is cut into `n_bins` equal intervals centred on
/// its lowest and highest components, and each interval's weight is the sum
/// of spectral magnitudes inside it. Scales are magnitude-weighted centroid
/// frequencies divided by `nominal_amplitude_hz`. Empty intervals are dropped,
/// and a spectrum with a single component yields a single bin.
pub fn extract_profile(
    signal: &[f64],
    dwell_s: f64,
    nominal_amplitude_hz: f64,
    n_bins: usize,
) -> Result<RfDistribution> {
    if n_bins == 0 || !(nominal_amplitude_hz > 0.0) || !(dwell_s > 0.0) {
        return Err(Error::invalid("profile extraction", "n_bins, amplitude and dwell must be positive"));
    }
    let spectrum = nutation_spectrum(signal, dwell_s);
    let peak_mag = spectrum.iter().map(|&(_, m)| m).fold(0.0, f64::max);
    if spectrum.len() < 3 || !(peak_mag > 1e-12 * signal.len() as f64) {
        return Err(Error::NoSpectralPeak);
    }
    let threshold = PEAK_FRACTION * peak_mag;
    let df = spectrum[0].0;
    let components: Vec<f64> = (1..spectrum.len() - 1)
        .filter(|&k| {
            let m = spectrum[k].1;
            m >= threshold && m >= spectrum[k - 1].1 && m > spectrum[k + 1].1
        })
        .map(|k| refine_peak(&spectrum, k))
        .collect();
    let (f_lo, f_hi) = match (components.first(), components.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(Error::NoSpectralPeak),
    };
    let lobe = LOBE_HALF_WIDTH * df;
    let mut edges = Vec::with_capacity(n_bins + 1);
    if n_bins == 1 || components.len() == 1 {
        edges.push(f_lo - lobe);
        edges.push(f_hi + lobe);
    } else {
        let h = (f_hi - f_lo) / (n_bins - 1) as f64;
        let outer = (h / 2.0).max(lobe);
        edges.push(f_lo - outer);
        edges.extend((1..n_bins).map(|i| f_lo + (i as f64 - 0.5) * h));
        edges.push(f_hi + outer);
    }
    let mut bins = Vec::new();
    for w in edges.windows(2) {
        let (mass, moment) = spectrum
            .iter()
            .filter(|(f, _)| *f >= w[0] && *f < w[1])
            .fold((0.0, 0.0), |(m, mo), &(f, mag)| (m + mag, mo + mag * f));
        if mass > 0.0 {
            bins.push(RfBin {
                scale: moment / mass / nominal_amplitude_hz,
                weight: mass,
            });
        }
    }
    RfDistribution::normalized(bins)
}

/// Parabolic interpolation of a local maximum's frequency.
fn refine_peak(spectrum: &[(f64, f64)], k: usize) -> f64 {
    let (a, b, c) = (spectrum[k - 1].1, spectrum[k].1, spectrum[k + 1].1);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    spectrum[k].0 + shift.clamp(-0.5, 0.5) * spectrum[0].0
}
