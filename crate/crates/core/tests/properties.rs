//! Randomized invariants across the library.

use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use refocus::designer::{objective, pulse_fidelity, Objective, SearchConfig};
use refocus::ensemble::{apply_kraus, superoperator, KrausSet, RfDistribution};
use refocus::metrics::{gate_fidelity_basis_average, gate_fidelity_trace};
use refocus::operator::{
    columnize, decolumnize, hermitian_eigen, matrix_exp_hermitian, matrix_log_principal, superop_of_unitary, total_spin_operator, Axis, Operator, StateMatrix,
    C64,
};
use refocus::propagator::{segment_propagator, sequence_propagator, trotter_propagator, PulseSegment, PulseSequence};
use refocus::sample::{random_hermitian, random_unitary};
use refocus::spectra::exact_spectrum;
use refocus::spin_system::{internal_hamiltonian, rf_hamiltonian, RfField, SpinSystem};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_state(r: &mut ChaCha8Rng, dim: usize) -> StateMatrix {
    StateMatrix::from_operator(random_hermitian(r, dim)).unwrap()
}

fn random_kraus(r: &mut ChaCha8Rng, dim: usize, weights: &[f64]) -> KrausSet {
    let total: f64 = weights.iter().sum();
    let w: Vec<f64> = weights.iter().map(|x| x / total).collect();
    KrausSet::from_parts(&w, (0..w.len()).map(|_| random_unitary(r, dim)).collect()).unwrap()
}

fn dims() -> impl Strategy<Value = usize> {
    prop_oneof![Just(2usize), Just(4usize)]
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, 1..6)
}

fn segment() -> impl Strategy<Value = PulseSegment> {
    (5e-6f64..2e-5, 0.0f64..20_000.0, 0.0f64..TAU, -2000.0f64..2000.0).prop_map(|(d, a, p, c)| PulseSegment::new(d, a, p, c))
}

fn three_spin(offsets: [f64; 3], j: [f64; 3]) -> SpinSystem {
    let couplings = vec![vec![0.0, j[0], j[2]], vec![j[0], 0.0, j[1]], vec![j[2], j[1], 0.0]];
    SpinSystem::new(vec!["a".into(), "b".into(), "c".into()], offsets.to_vec(), couplings).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn superop_spectrum_is_pairwise_products(seed in any::<u64>(), dim in dims()) {
        let u = random_unitary(&mut rng(seed), dim);
        let lambdas = unitary_eigenvalues(&u);
        let mut expected: Vec<C64> = lambdas.iter().flat_map(|a| lambdas.iter().map(move |b| a.conj() * b)).collect();
        let mut got = exact_spectrum(&superop_of_unitary(&u).unwrap()).unwrap();
        // greedy matching is enough for well separated random spectra
        for g in got.drain(..) {
            let (i, d) = expected.iter().enumerate().map(|(i, e)| (i, (e - g).norm())).min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
            prop_assert!(d < 1e-9, "no partner for {g}");
            expected.swap_remove(i);
        }
    }

    #[test]
    fn columnize_round_trips(seed in any::<u64>(), dim in dims()) {
        let rho = random_state(&mut rng(seed), dim);
        prop_assert_eq!(decolumnize(&columnize(&rho)).unwrap(), rho);
    }

    #[test]
    fn exponentials_compose(seed in any::<u64>(), dim in dims(), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
        let h = random_hermitian(&mut rng(seed), dim);
        let product = matrix_exp_hermitian(&h, t1).unwrap().matrix() * matrix_exp_hermitian(&h, t2).unwrap().matrix();
        let direct = matrix_exp_hermitian(&h, t1 + t2).unwrap();
        prop_assert!(Operator::from_matrix(product).unwrap().max_abs_diff(&direct) <= 1e-10);
    }

    #[test]
    fn log_inverts_exp_inside_the_branch(seed in any::<u64>(), dim in dims(), radius in 0.1f64..0.95) {
        // rescale so the spectral radius sits below pi
        let h = random_hermitian(&mut rng(seed), dim);
        let spread = hermitian_eigen(&h).unwrap().values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l = h.scale_real(radius * PI / spread);
        let u = matrix_exp_hermitian(&l, -1.0).unwrap();
        let back = matrix_log_principal(&u).unwrap();
        prop_assert!(back.max_abs_diff(&l.scale(C64::new(0.0, 1.0))) <= 1e-9);
    }

    #[test]
    fn internal_hamiltonian_conserves_total_z(offsets in prop::array::uniform3(-3000.0f64..3000.0), j in prop::array::uniform3(-100.0f64..100.0)) {
        let h = internal_hamiltonian(&three_spin(offsets, j));
        let fz = total_spin_operator(Axis::Z, 3);
        prop_assert!(h.commutator(&fz).max_norm() <= 1e-10);
    }

    #[test]
    fn rf_term_is_linear_and_periodic(amp in 0.0f64..30_000.0, phase in 0.0f64..TAU, scale in 0.5f64..1.5, k in 0.1f64..3.0) {
        let sys = SpinSystem::example_two_spin();
        let field = |a: f64, p: f64, s: f64| rf_hamiltonian(&sys, &RfField { amplitude_hz: a, phase_rad: p, carrier_offset_hz: 0.0, scale: s }).unwrap();
        let base = field(amp, phase, scale);
        let tol = 1e-12 * base.max_norm().max(1.0);
        prop_assert!(field(k * amp, phase, scale).max_abs_diff(&base.scale_real(k)) <= tol * k.max(1.0));
        prop_assert!(field(amp, phase, k * scale).max_abs_diff(&base.scale_real(k)) <= tol * k.max(1.0));
        prop_assert!(field(amp, phase + TAU, scale).max_abs_diff(&base) <= tol);
    }

    #[test]
    fn segment_matches_time_stepping(seg in segment(), scale in 0.8f64..1.2) {
        let sys = SpinSystem::example_two_spin();
        let seq = PulseSequence::new("one", vec![seg]).unwrap();
        let exact = segment_propagator(&sys, &seg, scale).unwrap();
        let stepped = trotter_propagator(&sys, &seq, scale, seg.duration_s / 1e5).unwrap();
        prop_assert!(exact.max_abs_diff(&stepped) <= 1e-8);
    }

    #[test]
    fn channels_agree_and_contract(seed in any::<u64>(), dim in dims(), w in weights()) {
        let mut r = rng(seed);
        let ks = random_kraus(&mut r, dim, &w);
        let rho = random_state(&mut r, dim);
        let direct = apply_kraus(&ks, &rho).unwrap();
        let lifted = decolumnize(&superoperator(&ks).apply(&columnize(&rho)).unwrap()).unwrap();
        prop_assert!(direct.max_abs_diff(&lifted) <= 1e-11);
        prop_assert!(direct.trace_product(&direct) <= rho.trace_product(&rho) + 1e-11);
        let spectrum = exact_spectrum(&superoperator(&ks)).unwrap();
        prop_assert!(spectrum.iter().all(|z| z.norm() <= 1.0 + 1e-9));
        prop_assert!(spectrum.iter().all(|z| spectrum.iter().any(|w| (w - z.conj()).norm() <= 1e-9)));
    }

    #[test]
    fn fidelity_forms_agree(seed in any::<u64>(), dim in dims(), w in weights()) {
        let mut r = rng(seed);
        let ks = random_kraus(&mut r, dim, &w);
        let u = random_unitary(&mut r, dim);
        let (a, b) = (gate_fidelity_basis_average(&u, &ks).unwrap(), gate_fidelity_trace(&u, &ks).unwrap());
        prop_assert!((a - b).abs() <= 1e-10);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&b));
    }

    #[test]
    fn fidelity_is_affine_in_weights(seed in any::<u64>(), dim in dims(), alpha in 0.0f64..1.0) {
        let mut r = rng(seed);
        let (u1, u2, target) = (random_unitary(&mut r, dim), random_unitary(&mut r, dim), random_unitary(&mut r, dim));
        let mixed = KrausSet::from_parts(&[alpha, 1.0 - alpha], vec![u1.clone(), u2.clone()]).unwrap();
        let f = |u: &Operator| gate_fidelity_trace(&target, &KrausSet::single(u.clone()).unwrap()).unwrap();
        let expected = alpha * f(&u1) + (1.0 - alpha) * f(&u2);
        prop_assert!((gate_fidelity_trace(&target, &mixed).unwrap() - expected).abs() <= 1e-12);
    }

    #[test]
    fn fidelity_is_conjugation_invariant(seed in any::<u64>(), dim in dims(), w in weights()) {
        let mut r = rng(seed);
        let ks = random_kraus(&mut r, dim, &w);
        let (u, v) = (random_unitary(&mut r, dim), random_unitary(&mut r, dim));
        let moved = ks.conjugated_by(&v).unwrap();
        let target = Operator::from_matrix(v.matrix() * u.matrix() * v.adjoint().matrix()).unwrap();
        let before = gate_fidelity_trace(&u, &ks).unwrap();
        prop_assert!((gate_fidelity_trace(&target, &moved).unwrap() - before).abs() <= 1e-11);
    }

    #[test]
    fn global_phase_does_not_matter(seed in any::<u64>(), dim in dims(), phi in 0.0f64..TAU) {
        let u = random_unitary(&mut rng(seed), dim);
        let ks = KrausSet::single(u.scale(C64::from_polar(1.0, phi))).unwrap();
        prop_assert!((gate_fidelity_trace(&u, &ks).unwrap() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn single_bin_objective_is_the_coherent_one(v in prop::collection::vec(-4.0f64..4.0, 8), seed in any::<u64>()) {
        let sys = SpinSystem::example_two_spin();
        let target = random_unitary(&mut rng(seed), 4);
        let config = SearchConfig { n_segments: 2, ..Default::default() };
        let bin = RfDistribution::delta(1.0).unwrap();
        let coherent = objective(&v, &target, &sys, None, &config).unwrap();
        let one_bin = objective(&v, &target, &sys, Some(&bin), &config).unwrap();
        prop_assert_eq!(coherent.to_bits(), one_bin.to_bits());
    }

    #[test]
    fn rescoring_reproduces_reported_fidelity(v in prop::collection::vec(-4.0f64..4.0, 8)) {
        let sys = SpinSystem::example_two_spin();
        let target = random_unitary(&mut rng(5), 4);
        let dist = RfDistribution::synthetic_default();
        let config = SearchConfig { n_segments: 2, ..Default::default() };
        let obj = Objective::new(&target, &sys, Some(&dist), &config).unwrap();
        let seq = obj.encoding().decode(&v).unwrap();
        let again = pulse_fidelity(&seq, &target, &sys, Some(&dist)).unwrap();
        prop_assert!((obj.fidelity(&seq).unwrap() - again).abs() <= 1e-12);
    }
}

/// Eigenvalues of `u` through its Hermitian generator, independent of the
/// Schur solver used for superoperator spectra.
fn unitary_eigenvalues(u: &Operator) -> Vec<C64> {
    let l = matrix_log_principal(u).unwrap();
    let h = l.scale(C64::new(0.0, 1.0)).hermitian_part();
    hermitian_eigen(&h).unwrap().values.iter().map(|w| C64::from_polar(1.0, -w)).collect()
}

#[test]
fn hundred_segment_products_stay_unitary() {
    let sys = three_spin([1500.0, -300.0, -1800.0], [54.0, 35.0, -1.2]);
    let mut r = rng(9);
    use rand::Rng;
    let segs: Vec<PulseSegment> = (0..100)
        .map(|_| PulseSegment::new(r.gen_range(1e-6..2e-5), r.gen_range(0.0..25_000.0), r.gen_range(0.0..TAU), r.gen_range(-3000.0..3000.0)))
        .collect();
    let u = sequence_propagator(&sys, &PulseSequence::new("long", segs).unwrap(), 1.0).unwrap();
    assert!(u.unitarity_error() <= 1e-9);
}

#[test]
fn nutation_angle_scales_with_field() {
    // quarter turn at unit scale, half turn at double scale
    let sys = SpinSystem::uncoupled(&[0.0]).unwrap();
    let seg = PulseSegment::new(25e-6, 10_000.0, 0.0, 0.0);
    let angle = |s: f64| {
        let u = segment_propagator(&sys, &seg, s).unwrap();
        2.0 * (u.trace().re / 2.0).clamp(-1.0, 1.0).acos()
    };
    assert!((angle(1.0) - PI / 2.0).abs() < 1e-12);
    assert!((angle(2.0) - PI).abs() < 1e-9);
    assert!((angle(0.5) - PI / 4.0).abs() < 1e-12);
}
