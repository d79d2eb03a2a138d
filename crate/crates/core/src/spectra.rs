//! Eigenvalue spectra of ensemble superoperators and their first-order
//! perturbative description.
//!
//! Writing each bin propagator as `U_k = exp(-i (H_0 + K_k) t)` around a
//! reference `U_0 = exp(-i H_0 t)`, first-order theory predicts the eigenvalue
//! of `S = sum_k p_k conj(U_k) (x) U_k` belonging to the eigenvector pair
//! `(j, m)` of `H_0` as
//!
//! `lambda_jm = e^{-i (phi_j - phi_m) t} sum_k p_k e^{-i (<j|K_k|j> - <m|K_k|m>) t}`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{kraus_set_with, superoperator, KrausSet, RfDistribution};
use crate::error::{Error, Result};
use crate::operator::{hermitian_eigen, schur, matrix_log_principal, CMatrix, Operator, Superoperator, C64, I};
use crate::pauli::{pauli_decompose, PauliString};
use crate::propagator::{PulseSequence, Propagator};
use crate::spin_system::SpinSystem;

/// Unperturbed eigenphase differences `|phi_j - phi_m| t` below this count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// Symmetry tolerance required by [`symmetric_profile_test`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Phase is not reported for eigenvalues smaller than this.
const PHASE_MODULUS_FLOOR: f64 = 1e-12;

/// Angle of `z` relative to `reference`, in `[-pi, pi]`.
fn relative_phase(z: C64, reference: C64) -> f64 {
    (z * reference.conj()).arg()
}

/// All `(4^N)` eigenvalues of `s`, ordered by phase then modulus.
pub fn exact_spectrum(s: &Superoperator) -> Result<Vec<C64>> {
    let (_, t) = schur(s.matrix())?;
    let mut values: Vec<C64> = (0..t.nrows()).map(|j| t[(j, j)]).collect();
    sort_spectrum(&mut values);
    Ok(values)
}

fn sort_spectrum(values: &mut [C64]) {
    values.sort_by(|a, b| a.arg().total_cmp(&b.arg()).then(a.norm().total_cmp(&b.norm())));
}

/// Mean of `1 - |lambda|`; zero for a unitary channel.
pub fn mean_unit_circle_distance(values: &[C64]) -> f64 {
    values.iter().map(|z| 1.0 - z.norm()).sum::<f64>() / values.len() as f64
}

/// Reference propagator, its Hamiltonian eigensystem and the per-bin perturbations.
#[derive(Clone, Debug)]
pub struct PerturbationDecomposition {
    /// Period `t` shared by every effective Hamiltonian.
    pub t: f64,
    /// Kraus element used as `U_0`, or `None` for an external reference.
    pub reference_index: Option<usize>,
    pub u0: Operator,
    pub h0: Operator,
    /// Eigenvalues `phi_j` of `H_0`, ascending.
    pub phases: Vec<f64>,
    /// Columns are the eigenvectors `|phi_j>`.
    pub eigenvectors: CMatrix,
    /// `K_k`, one per Kraus element.
    pub perturbations: Vec<Operator>,
}

fn effective_hamiltonian(log_u: &Operator, t: f64) -> Operator {
    log_u.scale(I / t)
}

impl PerturbationDecomposition {
    /// Uses Kraus element `reference_index` as the unperturbed gate.
    pub fn extract(ks: &KrausSet, reference_index: usize, t: f64) -> Result<Self> {
        let u0 = ks
            .elements()
            .get(reference_index)
            .ok_or_else(|| Error::invalid("reference index", format!("{reference_index} out of range")))?
            .unitary
            .clone();
        let mut pd = Self::with_reference(ks, u0, t)?;
        pd.reference_index = Some(reference_index);
        // identical logs give an exact zero; keep it that way
        pd.perturbations[reference_index] = Operator::zeros(ks.dim());
        Ok(pd)
    }

    /// Uses an arbitrary unitary `u0`, e.g. the propagator at the profile mean.
    pub fn with_reference(ks: &KrausSet, u0: Operator, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid("period", "must be positive"));
        }
        u0.ensure_dim(ks.dim())?;
        let log0 = matrix_log_principal(&u0)?;
        let h0 = effective_hamiltonian(&log0, t).hermitian_part();
        let perturbations = ks
            .elements()
            .par_iter()
            .map(|e| {
                let log_k = matrix_log_principal(&e.unitary)?;
                let k = effective_hamiltonian(&(&log_k - &log0), t);
                k.ensure_hermitian()?;
                Ok(k.hermitian_part())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(u0, h0, perturbations, t)
    }

    /// Builds the eigensystem of a given `H_0` with prescribed perturbations.
    pub fn from_parts(u0: Operator, h0: Operator, perturbations: Vec<Operator>, t: f64) -> Result<Self> {
        let eig = hermitian_eigen(&h0)?;
        for k in &perturbations {
            k.ensure_dim(h0.dim())?;
            k.ensure_hermitian()?;
        }
        Ok(Self {
            t,
            reference_index: None,
            u0,
            h0,
            phases: eig.values,
            eigenvectors: eig.vectors,
            perturbations,
        })
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    /// `<phi_j| K_k |phi_j>` for every `j`.
    pub fn diagonal(&self, k: usize) -> Vec<f64> {
        diagonal_in_basis(&self.perturbations[k], &self.eigenvectors)
    }

    /// `e^{-i (phi_j - phi_m) t}` at index `j * d + m`.
    pub fn unperturbed_spectrum(&self) -> Vec<C64> {
        let t = self.t;
        self.phases
            .iter()
            .flat_map(|pj| self.phases.iter().map(move |pm| C64::from_polar(1.0, -(pj - pm) * t)))
            .collect()
    }

    /// `true` for eigenvalues of `U_0` that collide with another within [`DEGENERACY_TOL`].
    pub fn degenerate_phases(&self) -> Vec<bool> {
        let t = self.t;
        let p = &self.phases;
        (0..p.len())
            .map(|j| {
                (0..p.len()).any(|k| {
                    k != j && relative_phase(C64::from_polar(1.0, -p[j] * t), C64::from_polar(1.0, -p[k] * t)).abs() < DEGENERACY_TOL
                })
            })
            .collect()
    }
}

/// Real parts of `<v_j| A |v_j>` for the columns of `vectors`.
pub fn diagonal_in_basis(a: &Operator, vectors: &CMatrix) -> Vec<f64> {
    let av = a.matrix() * vectors;
    (0..vectors.ncols())
        .map(|j| vectors.column(j).dotc(&av.column(j)).re)
        .collect()
}

/// First-order eigenvalues indexed by eigenvector pair `(j, m)` at `j * d + m`.
#[derive(Clone, Debug)]
pub struct PerturbativeSpectrum {
    pub values: Vec<C64>,
    pub unperturbed: Vec<C64>,
    pub dim: usize,
    /// Pairs whose phase statistics are unreliable because `j` or `m` is degenerate.
    pub excluded: Vec<bool>,
    pub degenerate: bool,
}

impl PerturbativeSpectrum {
    /// `lambda_jm / e^{-i (phi_j - phi_m) t}`.
    pub fn attenuation_factors(&self) -> Vec<C64> {
        self.values.iter().zip(&self.unperturbed).map(|(l, u)| l / u).collect()
    }
}

pub fn perturbative_spectrum(pd: &PerturbationDecomposition, weights: &[f64]) -> Result<PerturbativeSpectrum> {
    if weights.len() != pd.perturbations.len() {
        return Err(Error::DimensionMismatch { expected: pd.perturbations.len(), found: weights.len() });
    }
    let d = pd.dim();
    let t = pd.t;
    let diagonals: Vec<Vec<f64>> = (0..weights.len()).map(|k| pd.diagonal(k)).collect();
    let unperturbed = pd.unperturbed_spectrum();
    let mut values = Vec::with_capacity(d * d);
    for j in 0..d {
        for m in 0..d {
            let sum: C64 = weights
                .iter()
                .zip(&diagonals)
                .map(|(p, diag)| C64::from_polar(*p, -(diag[j] - diag[m]) * t))
                .sum();
            values.push(unperturbed[j * d + m] * sum);
        }
    }
    let deg = pd.degenerate_phases();
    let excluded = (0..d * d).map(|i| (i / d != i % d) && (deg[i / d] || deg[i % d])).collect();
    Ok(PerturbativeSpectrum {
        values,
        unperturbed,
        dim: d,
        excluded,
        degenerate: deg.iter().any(|&x| x),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub exact: Vec<C64>,
    pub approx: Vec<C64>,
    /// `pairing[i]` is the index in `approx` matched to `exact[i]`.
    pub pairing: Vec<usize>,
    pub max_modulus_deviation: f64,
    pub mean_modulus_deviation: f64,
    pub max_phase_deviation: f64,
    pub mean_phase_deviation: f64,
    /// Unperturbed spectrum had colliding eigenphases.
    pub degenerate: bool,
    /// Pairs left out of the phase statistics.
    pub phase_pairs_excluded: usize,
}

/// One plotting row per matched pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub re_exact: f64,
    pub im_exact: f64,
    pub re_approx: f64,
    pub im_approx: f64,
    pub pair_index: usize,
}

impl SpectrumReport {
    pub fn rows(&self) -> Vec<SpectrumRow> {
        self.exact
            .iter()
            .zip(&self.pairing)
            .enumerate()
            .map(|(i, (e, &j))| SpectrumRow {
                re_exact: e.re,
                im_exact: e.im,
                re_approx: self.approx[j].re,
                im_approx: self.approx[j].im,
                pair_index: i,
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Greedy nearest-neighbour pairing of two eigenvalue lists.
pub fn match_spectra(exact: &[C64], approx: &[C64]) -> Result<SpectrumReport> {
    match_masked(exact, approx, &vec![false; approx.len()], false)
}

/// [`match_spectra`] that leaves degenerate pairs out of the phase statistics.
pub fn match_perturbative(exact: &[C64], approx: &PerturbativeSpectrum) -> Result<SpectrumReport> {
    match_masked(exact, &approx.values, &approx.excluded, approx.degenerate)
}

fn match_masked(exact: &[C64], approx: &[C64], excluded: &[bool], degenerate: bool) -> Result<SpectrumReport> {
    let n = exact.len();
    if approx.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: approx.len() });
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, e) in exact.iter().enumerate() {
        for (j, a) in approx.iter().enumerate() {
            candidates.push(((e - a).norm(), i, j));
        }
    }
    candidates.sort_by(|x, y| {
        x.0.total_cmp(&y.0)
            .then(exact[x.1].arg().total_cmp(&exact[y.1].arg()))
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut pairing = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut left = n;
    for (_, i, j) in candidates {
        if left == 0 {
            break;
        }
        if pairing[i] == usize::MAX && !used[j] {
            pairing[i] = j;
            used[j] = true;
            left -= 1;
        }
    }

    let (mut max_mod, mut sum_mod) = (0.0f64, 0.0);
    let (mut max_ph, mut sum_ph, mut n_ph) = (0.0f64, 0.0, 0usize);
    let mut n_excluded = 0;
    for (i, &j) in pairing.iter().enumerate() {
        let (e, a) = (exact[i], approx[j]);
        let dm = (e.norm() - a.norm()).abs();
        max_mod = max_mod.max(dm);
        sum_mod += dm;
        if excluded[j] {
            n_excluded += 1;
            continue;
        }
        if e.norm() < PHASE_MODULUS_FLOOR || a.norm() < PHASE_MODULUS_FLOOR {
            continue;
        }
        let dp = relative_phase(e, a).abs();
        max_ph = max_ph.max(dp);
        sum_ph += dp;
        n_ph += 1;
    }
    Ok(SpectrumReport {
        exact: exact.to_vec(),
        approx: approx.to_vec(),
        pairing,
        max_modulus_deviation: max_mod,
        mean_modulus_deviation: if n > 0 { sum_mod / n as f64 } else { 0.0 },
        max_phase_deviation: max_ph,
        mean_phase_deviation: if n_ph > 0 { sum_ph / n_ph as f64 } else { 0.0 },
        degenerate,
        phase_pairs_excluded: n_excluded,
    })
}

/// Exact spectrum of `seq` under `dist`, its first-order approximation around
/// the peak bin, and their pairing.
pub fn analyze_sequence(sys: &SpinSystem, seq: &PulseSequence, dist: &RfDistribution) -> Result<SpectrumReport> {
    let ks = kraus_set_with(&Propagator::new(sys), seq, dist)?;
    let exact = exact_spectrum(&superoperator(&ks))?;
    let pd = PerturbationDecomposition::extract(&ks, dist.peak_index(), seq.total_duration())?;
    let approx = perturbative_spectrum(&pd, &ks.weights())?;
    match_perturbative(&exact, &approx)
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; `None` when either
/// sample is constant or shorter than two.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Rank correlation between `|phase shift|` and attenuation `1 - |A_jm|`
/// over the non-degenerate coherence pairs.
pub fn phase_attenuation_trend(spectrum: &PerturbativeSpectrum) -> Option<f64> {
    let d = spectrum.dim;
    let (mut phase, mut atten) = (Vec::new(), Vec::new());
    for (i, a) in spectrum.attenuation_factors().iter().enumerate() {
        if i / d == i % d || spectrum.excluded[i] {
            continue;
        }
        phase.push(a.arg().abs());
        atten.push(1.0 - a.norm());
    }
    spearman(&phase, &atten)
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetricProfileReport {
    /// `A_jm`, one per eigenvector pair.
    pub attenuation_factors: Vec<C64>,
    pub unperturbed: Vec<C64>,
    pub perturbed: Vec<C64>,
    /// Largest `|arg A_jm|` over non-degenerate pairs.
    pub max_phase_deviation: f64,
    pub max_imaginary_part: f64,
    /// Largest `1 - |lambda_jm|`.
    pub max_attenuation: f64,
    pub phase_attenuation_rank_correlation: Option<f64>,
    pub degenerate: bool,
}

/// Perturbative spectrum of `seq` about the propagator at the profile mean.
///
/// With a symmetric profile and perturbations odd in the scale deviation the
/// attenuation factors are real, so eigenvalues shrink without rotating.
pub fn symmetric_profile_test(sys: &SpinSystem, seq: &PulseSequence, dist: &RfDistribution) -> Result<SymmetricProfileReport> {
    if !dist.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::AsymmetricProfile);
    }
    let prop = Propagator::new(sys);
    let ks = kraus_set_with(&prop, seq, dist)?;
    let u0 = prop.sequence(seq, dist.mean_scale())?;
    let pd = PerturbationDecomposition::with_reference(&ks, u0, seq.total_duration())?;
    let spec = perturbative_spectrum(&pd, &ks.weights())?;
    let factors = spec.attenuation_factors();
    let mut max_phase = 0.0f64;
    let mut max_im = 0.0f64;
    for (i, a) in factors.iter().enumerate() {
        max_im = max_im.max(a.im.abs());
        if !spec.excluded[i] && a.norm() >= PHASE_MODULUS_FLOOR {
            max_phase = max_phase.max(a.arg().abs());
        }
    }
    let max_attenuation = spec.values.iter().map(|z| 1.0 - z.norm()).fold(0.0, f64::max);
    Ok(SymmetricProfileReport {
        phase_attenuation_rank_correlation: phase_attenuation_trend(&spec),
        attenuation_factors: factors,
        unperturbed: spec.unperturbed.clone(),
        perturbed: spec.values.clone(),
        max_phase_deviation: max_phase,
        max_imaginary_part: max_im,
        max_attenuation,
        degenerate: spec.degenerate,
    })
}

/// Pauli products that survive first-order theory around `H_0 t`.
#[derive(Clone, Debug, Serialize)]
pub struct ContributionCount {
    pub contributing: Vec<PauliString>,
    pub count: usize,
    /// Rank of the span of their diagonals in the `H_0` eigenbasis.
    pub independent_diagonals: usize,
}

/// Projection norms below this count as zero.
const CONTRIBUTION_TOL: f64 = 1e-12;

/// Classifies every non-identity Pauli product by whether it has a nonzero
/// block on some eigenspace of `h0t`, which must be a multiple of one Pauli
/// product. Those blocks are what the eigenbasis diagonals sample, so the
/// result does not depend on how degenerate eigenvectors are chosen.
pub fn contribution_count(h0t: &Operator) -> Result<ContributionCount> {
    let terms: Vec<(PauliString, C64)> = pauli_decompose(h0t)
        .into_iter()
        .filter(|(_, c)| c.norm() > CONTRIBUTION_TOL)
        .collect();
    if terms.len() != 1 || terms[0].0.is_identity() {
        return Err(Error::Unsupported("H_0 t must be a real multiple of a single non-identity Pauli product".into()));
    }
    let eig = hermitian_eigen(h0t)?;
    let d = h0t.dim();
    // eigenspace projectors
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for j in 0..d {
        match groups.iter_mut().find(|g| (eig.values[g[0]] - eig.values[j]).abs() < 1e-9) {
            Some(g) => g.push(j),
            None => groups.push(vec![j]),
        }
    }
    let projectors: Vec<CMatrix> = groups
        .iter()
        .map(|g| {
            let v = CMatrix::from_fn(d, g.len(), |r, c| eig.vectors[(r, g[c])]);
            &v * v.adjoint()
        })
        .collect();

    let mut contributing = Vec::new();
    let mut diagonals = Vec::new();
    for p in PauliString::all(h0t.n_spins()).into_iter().filter(|p| !p.is_identity()) {
        let op = p.operator();
        let hits = projectors.iter().any(|pr| (pr * op.matrix() * pr).norm() > CONTRIBUTION_TOL);
        if hits {
            diagonals.push(diagonal_in_basis(&op, &eig.vectors));
            contributing.push(p);
        }
    }
    let rank = if diagonals.is_empty() {
        0
    } else {
        let m = DMatrix::from_fn(d, diagonals.len(), |r, c| diagonals[c][r]);
        m.svd(false, false).rank(1e-9)
    };
    Ok(ContributionCount { count: contributing.len(), contributing, independent_diagonals: rank })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FourierSample {
    pub j: usize,
    pub m: usize,
    /// `<j|K|j> - <m|K|m>`.
    pub psi: f64,
    /// `lambda_jm` divided by its unperturbed value.
    pub ratio: C64,
    /// `sum_k p_k e^{-i psi Delta_k t}` summed directly.
    pub transform: C64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FourierProbe {
    pub samples: Vec<FourierSample>,
    pub max_discrepancy: f64,
}

/// Samples the profile's characteristic function through the perturbative
/// spectrum when every `K_k = (f_k - f_0) K` shares one direction `K`.
pub fn fourier_probe(dist: &RfDistribution, reference_scale: f64, k_direction: &Operator, u0: &Operator, t: f64) -> Result<FourierProbe> {
    k_direction.ensure_hermitian()?;
    u0.ensure_dim(k_direction.dim())?;
    let deltas: Vec<f64> = dist.scales().iter().map(|f| f - reference_scale).collect();
    let h0 = effective_hamiltonian(&matrix_log_principal(u0)?, t).hermitian_part();
    let perturbations = deltas.iter().map(|&dl| k_direction.scale_real(dl)).collect();
    let pd = PerturbationDecomposition::from_parts(u0.clone(), h0, perturbations, t)?;
    let spec = perturbative_spectrum(&pd, &dist.weights())?;
    let kd = diagonal_in_basis(k_direction, &pd.eigenvectors);
    let d = pd.dim();
    let weights = dist.weights();
    let mut samples = Vec::with_capacity(d * d);
    let mut worst = 0.0f64;
    for j in 0..d {
        for m in 0..d {
            let psi = kd[j] - kd[m];
            let transform: C64 = weights.iter().zip(&deltas).map(|(p, dl)| C64::from_polar(*p, -psi * dl * t)).sum();
            let ratio = spec.values[j * d + m] / spec.unperturbed[j * d + m];
            worst = worst.max((ratio - transform).norm());
            samples.push(FourierSample { j, m, psi, ratio, transform });
        }
    }
    Ok(FourierProbe { samples, max_discrepancy: worst })
}

/// Recovers bin weights on a known grid of deviations `deltas` from samples
/// `(psi, ratio)` of the characteristic function, by least squares.
///
/// Needs at least as many distinct `|psi|` values as grid points.
pub fn invert_profile(samples: &[(f64, C64)], deltas: &[f64], t: f64) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = Vec::new();
    let scale = samples.iter().map(|s| s.0.abs()).fold(0.0, f64::max).max(1.0);
    let mut rows: Vec<(f64, C64)> = Vec::new();
    for &(psi, r) in samples {
        if !distinct.iter().any(|d| (d - psi.abs()).abs() <= 1e-9 * scale) {
            distinct.push(psi.abs());
            rows.push((psi, r));
        }
    }
    if distinct.len() < deltas.len() {
        return Err(Error::InsufficientSamples { needed: deltas.len(), found: distinct.len() });
    }
    let n = deltas.len();
    let mut a = DMatrix::<f64>::zeros(2 * rows.len(), n);
    let mut b = DVector::<f64>::zeros(2 * rows.len());
    for (s, (psi, r)) in rows.iter().enumerate() {
        for (k, dl) in deltas.iter().enumerate() {
            let e = C64::from_polar(1.0, -psi * dl * t);
            a[(2 * s, k)] = e.re;
            a[(2 * s + 1, k)] = e.im;
        }
        b[2 * s] = r.re;
        b[2 * s + 1] = r.im;
    }
    let svd = a.svd(true, true);
    let rank = svd.rank(1e-10 * svd.singular_values.max());
    if rank < n {
        return Err(Error::InsufficientSamples { needed: n, found: rank });
    }
    let x = svd.solve(&b, 1e-12).map_err(|e| Error::invalid("profile inversion", e.to_string()))?;
    Ok(x.iter().copied().collect())
}
