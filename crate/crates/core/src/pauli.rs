//! Tensor products of Pauli matrices.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{kron_all, pauli, Axis, CMatrix, Operator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::I => CMatrix::identity(2, 2),
            Pauli::X => pauli(Axis::X),
            Pauli::Y => pauli(Axis::Y),
            Pauli::Z => pauli(Axis::Z),
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl From<Axis> for Pauli {
    fn from(a: Axis) -> Self {
        match a {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }
}

/// `sigma_{a_1} (x) ... (x) sigma_{a_N}`, first factor on spin 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(into = "String")]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(factors: Vec<Pauli>) -> Self {
        Self(factors)
    }

    pub fn identity(n_spins: usize) -> Self {
        Self(vec![Pauli::I; n_spins])
    }

    /// Single non-identity factor on 0-based spin `k`.
    pub fn single(n_spins: usize, k: usize, p: Pauli) -> Self {
        let mut f = vec![Pauli::I; n_spins];
        f[k] = p;
        Self(f)
    }

    /// All `4^N` products in lexicographic order, identity first.
    pub fn all(n_spins: usize) -> Vec<PauliString> {
        (0..4usize.pow(n_spins as u32))
            .map(|mut code| {
                let mut f = vec![Pauli::I; n_spins];
                for slot in f.iter_mut().rev() {
                    *slot = Pauli::ALL[code % 4];
                    code /= 4;
                }
                PauliString(f)
            })
            .collect()
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.0
    }

    pub fn n_spins(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// Unnormalized product matrix (eigenvalues +-1).
    pub fn operator(&self) -> Operator {
        let mats: Vec<CMatrix> = self.0.iter().map(|p| p.matrix()).collect();
        Operator::from_matrix(kron_all(&mats)).expect("power-of-two")
    }

    /// Product scaled by `2^{-N/2}` so that `tr(P P) = 1`.
    pub fn normalized_operator(&self) -> Operator {
        let norm = (1usize << self.n_spins()) as f64;
        self.operator().scale(C64::from(1.0 / norm.sqrt()))
    }

    /// Spin-indexed form such as `x1 z3`; `1` for the identity.
    pub fn sparse_label(&self) -> String {
        if self.is_identity() {
            return "1".into();
        }
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != Pauli::I)
            .map(|(k, p)| format!("{}{}", p.symbol().to_ascii_lowercase(), k + 1))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|p| write!(f, "{}", p.symbol()))
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Dense form, one letter per spin: `XIZ`.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::invalid("Pauli string", format!("unexpected '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .and_then(|f| {
                if f.is_empty() {
                    Err(Error::invalid("Pauli string", "empty"))
                } else {
                    Ok(PauliString(f))
                }
            })
    }
}

impl From<PauliString> for String {
    fn from(p: PauliString) -> String {
        p.to_string()
    }
}

/// Coefficients `c_P = tr(P H) / 2^N` of `H = sum_P c_P P`.
pub fn pauli_decompose(op: &Operator) -> Vec<(PauliString, C64)> {
    let n = op.n_spins();
    let d = op.dim() as f64;
    PauliString::all(n)
        .into_iter()
        .map(|p| {
            let c = p.operator().inner(op) / d;
            (p, c)
        })
        .collect()
}
