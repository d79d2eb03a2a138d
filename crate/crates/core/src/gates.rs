//! Target spin rotations and their textual names.
//!
//! A gate is written `x90@1,2`: axis, angle in degrees, and the 1-based spins
//! rotated together. `identity` names the do-nothing gate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{matrix_exp_hermitian, spin_operator, Axis, Operator};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GateSpec {
    Identity,
    Rotation {
        axis: Axis,
        angle_deg: f64,
        /// 1-based, ascending, no repeats.
        spins: Vec<usize>,
    },
}

impl GateSpec {
    pub fn rotation(axis: Axis, angle_deg: f64, spins: &[usize]) -> Result<Self> {
        let mut s = spins.to_vec();
        s.sort_unstable();
        s.dedup();
        if s.is_empty() || s[0] == 0 || s.len() != spins.len() {
            return Err(Error::invalid("gate", "spins must be distinct and 1-based"));
        }
        if !angle_deg.is_finite() {
            return Err(Error::invalid("gate", "angle must be finite"));
        }
        Ok(GateSpec::Rotation { axis, angle_deg, spins: s })
    }

    /// `exp(-i theta sum_{k in S} I_axis^k)` on an `n_spins` register.
    pub fn unitary(&self, n_spins: usize) -> Result<Operator> {
        match self {
            GateSpec::Identity => Ok(Operator::identity(1 << n_spins)),
            GateSpec::Rotation { axis, angle_deg, spins } => {
                let mut gen = Operator::zeros(1 << n_spins);
                for &k in spins {
                    gen += &spin_operator(*axis, k, n_spins)?;
                }
                matrix_exp_hermitian(&gen, angle_deg.to_radians())
            }
        }
    }

    /// Largest spin index referenced, 0 for the identity.
    pub fn max_spin(&self) -> usize {
        match self {
            GateSpec::Identity => 0,
            GateSpec::Rotation { spins, .. } => spins.last().copied().unwrap_or(0),
        }
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateSpec::Identity => write!(f, "identity"),
            GateSpec::Rotation { axis, angle_deg, spins } => {
                let list: Vec<String> = spins.iter().map(|s| s.to_string()).collect();
                write!(f, "{}{}@{}", axis.label().to_ascii_lowercase(), angle_deg, list.join(","))
            }
        }
    }
}

impl FromStr for GateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("identity") {
            return Ok(GateSpec::Identity);
        }
        let bad = |why: &str| Error::invalid("gate", format!("'{s}': {why}"));
        let (head, tail) = s.split_once('@').ok_or_else(|| bad("expected AXISANGLE@SPINS"))?;
        let mut chars = head.chars();
        let axis = match chars.next().map(|c| c.to_ascii_lowercase()) {
            Some('x') => Axis::X,
            Some('y') => Axis::Y,
            Some('z') => Axis::Z,
            _ => return Err(bad("axis must be x, y or z")),
        };
        let angle_deg: f64 = chars.as_str().parse().map_err(|_| bad("angle is not a number"))?;
        let spins = tail
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| bad("spin list")))
            .collect::<Result<Vec<_>>>()?;
        GateSpec::rotation(axis, angle_deg, &spins).map_err(|_| bad("spins must be distinct and 1-based"))
    }
}

impl TryFrom<String> for GateSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GateSpec> for String {
    fn from(g: GateSpec) -> String {
        g.to_string()
    }
}

/// The seven three-spin rotations characterized experimentally.
pub fn table_gate_set() -> Vec<GateSpec> {
    ["x90@1", "x90@3", "x90@1,2", "x90@2,3", "x90@1,2,3", "x180@1,2", "x180@2,3"]
        .iter()
        .map(|s| s.parse().expect("static gate"))
        .collect()
}

/// [`table_gate_set`] followed by y-axis quarter turns on the same spin groups.
pub fn example_gate_set() -> Vec<GateSpec> {
    let mut gates = table_gate_set();
    gates.extend(["y90@1", "y90@3", "y90@1,2", "y90@2,3", "y90@1,2,3"].iter().map(|s| s.parse().expect("static gate")));
    gates
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::C64;

    #[test]
    fn parse_and_format_round_trip() {
        for text in ["x90@1", "y90@1,2,3", "x180@2,3", "identity", "z45.5@2"] {
            let g: GateSpec = text.parse().unwrap();
            assert_eq!(g.to_string(), text);
        }
        let g: GateSpec = "X90@3,1".parse().unwrap();
        assert_eq!(g.to_string(), "x90@1,3");
    }

    #[test]
    fn parse_rejects_malformed() {
        for text in ["x90", "w90@1", "xab@1", "x90@0", "x90@1,1", "x90@"] {
            assert!(text.parse::<GateSpec>().is_err(), "{text}");
        }
    }

    #[test]
    fn quarter_turn_matrix() {
        let u = "x90@1".parse::<GateSpec>().unwrap().unitary(1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((u.matrix()[(0, 0)] - C64::new(h, 0.0)).norm() < 1e-15);
        assert!((u.matrix()[(0, 1)] - C64::new(0.0, -h)).norm() < 1e-15);
    }

    #[test]
    fn joint_rotation_factorizes() {
        let a = "x90@1".parse::<GateSpec>().unwrap().unitary(2).unwrap();
        let b = "x90@2".parse::<GateSpec>().unwrap().unitary(2).unwrap();
        let ab = "x90@1,2".parse::<GateSpec>().unwrap().unitary(2).unwrap();
        assert!((&a * &b).max_abs_diff(&ab) < 1e-14);
    }

    #[test]
    fn gate_sets() {
        assert_eq!(table_gate_set().len(), 7);
        assert!(table_gate_set().iter().all(|g| g.max_spin() <= 3));
        assert_eq!(example_gate_set().len(), 12);
    }

    #[test]
    fn json_uses_text_form() {
        let g: GateSpec = "x180@2,3".parse().unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, "\"x180@2,3\"");
        assert_eq!(serde_json::from_str::<GateSpec>(&json).unwrap(), g);
    }
}
