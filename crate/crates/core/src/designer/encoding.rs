//! Smooth map between unconstrained search vectors and bounded pulse sequences.
//!
//! Each segment occupies four consecutive coordinates:
//! amplitude (logistic), duration (logistic), phase (raw radians) and carrier
//! offset (`tanh`).

use crate::error::{Error, Result};
use crate::propagator::{PulseSegment, PulseSequence};

pub const PARAMS_PER_SEGMENT: usize = 4;

/// Fractions this close to a bound are pulled inside before inversion.
const EDGE: f64 = 1e-15;

/// Resolved bounds for one search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Encoding {
    pub n_segments: usize,
    pub max_amplitude_hz: f64,
    pub max_segment_duration_s: f64,
    /// Carrier offsets stay inside `(-max_carrier_hz, max_carrier_hz)`.
    pub max_carrier_hz: f64,
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(EDGE, 1.0 - EDGE);
    (p / (1.0 - p)).ln()
}

impl Encoding {
    pub fn len(&self) -> usize {
        PARAMS_PER_SEGMENT * self.n_segments
    }

    pub fn is_empty(&self) -> bool {
        self.n_segments == 0
    }

    pub fn decode(&self, v: &[f64]) -> Result<PulseSequence> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: v.len() });
        }
        let segments = v
            .chunks_exact(PARAMS_PER_SEGMENT)
            .map(|p| {
                PulseSegment::new(
                    // a zero-length segment is invalid, so the floor stays just above it
                    self.max_segment_duration_s * logistic(p[1]).max(EDGE),
                    self.max_amplitude_hz * logistic(p[0]),
                    p[2],
                    self.max_carrier_hz * p[3].tanh(),
                )
            })
            .collect();
        PulseSequence::new("designed", segments)
    }

    pub fn encode(&self, seq: &PulseSequence) -> Result<Vec<f64>> {
        if seq.segments.len() != self.n_segments {
            return Err(Error::DimensionMismatch { expected: self.n_segments, found: seq.segments.len() });
        }
        let mut v = Vec::with_capacity(self.len());
        for s in &seq.segments {
            if !(s.amplitude_hz > 0.0 && s.amplitude_hz <= self.max_amplitude_hz) {
                return Err(Error::invalid("encoding", format!("amplitude {} Hz outside bounds", s.amplitude_hz)));
            }
            if !(s.duration_s > 0.0 && s.duration_s <= self.max_segment_duration_s) {
                return Err(Error::invalid("encoding", format!("duration {} s outside bounds", s.duration_s)));
            }
            let carrier = if self.max_carrier_hz > 0.0 {
                let r = s.carrier_offset_hz / self.max_carrier_hz;
                if r.abs() >= 1.0 {
                    return Err(Error::invalid("encoding", format!("carrier {} Hz outside bounds", s.carrier_offset_hz)));
                }
                r.atanh()
            } else if s.carrier_offset_hz == 0.0 {
                0.0
            } else {
                return Err(Error::invalid("encoding", "carrier must be zero when its bound is zero"));
            };
            v.extend([
                logit(s.amplitude_hz / self.max_amplitude_hz),
                logit(s.duration_s / self.max_segment_duration_s),
                s.phase_rad,
                carrier,
            ]);
        }
        Ok(v)
    }
}
