use proptest::prelude::*;
use qmip_core::adversary::{brute_force_value, optimal_shared_state, seesaw, BruteForceConfig, SeesawConfig};
use qmip_core::linalg::{self, Matrix, C64};
use qmip_core::{fixtures, q, Circuit, Gate, Layout, ProtocolInstance, Register, StateVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_state(n: usize, r: &mut ChaCha8Rng) -> StateVector {
    let layout = Layout::new(vec![Register::new("A", n)]).unwrap();
    let v = linalg::random_state(1 << n, r);
    StateVector::from_vector(layout, &v, 1e-12).unwrap()
}

/// A Haar unitary on a random set of up to three qubits out of `n`.
fn random_gate(n: usize, r: &mut ChaCha8Rng) -> Gate {
    let mut qubits: Vec<usize> = (0..n).collect();
    qubits.shuffle(r);
    let width = r.random_range(1..=n.min(3));
    let targets = qubits[..width].iter().map(|&j| q("A", j)).collect();
    Gate::unitary(linalg::haar_unitary(1 << width, r), targets)
}

fn hermitian(dim: usize, r: &mut ChaCha8Rng) -> Matrix {
    let a = Matrix::from_fn(dim, dim, |_, _| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
    (&a + a.adjoint()) * C64::from(0.5)
}

fn re_trace_overlap(u: &Matrix, a: &Matrix) -> f64 {
    (u.adjoint() * a).trace().re
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn unitaries_preserve_norm(seed in any::<u64>(), n in 1usize..=6) {
        let mut r = rng(seed);
        let psi = random_state(n, &mut r);
        let out = psi.apply(&random_gate(n, &mut r)).unwrap();
        prop_assert!((out.norm_sq().sqrt() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn dagger_undoes_a_circuit(seed in any::<u64>(), n in 1usize..=6, len in 1usize..6) {
        let mut r = rng(seed);
        let psi = random_state(n, &mut r);
        let mut c = Circuit::new();
        for _ in 0..len {
            c.push(random_gate(n, &mut r));
        }
        if n >= 3 {
            let t = Gate::toffoli(q("A", 0), q("A", n - 1), q("A", 1));
            c.push(if n >= 4 { t.controlled_by(q("A", 2), false) } else { t });
        }
        let back = psi.apply_circuit(&c).unwrap().apply_circuit(&c.dagger().unwrap()).unwrap();
        prop_assert!(back.max_distance(&psi).unwrap() <= 1e-10);
    }

    #[test]
    fn fidelity_triangle(seed in any::<u64>(), dim in 2usize..=8) {
        let mut r = rng(seed);
        let mut d = || {
            let rank = r.random_range(1..=dim);
            linalg::random_density(dim, rank, &mut r)
        };
        let (rho, sigma, xi) = (d(), d(), d());
        let f = |a: &Matrix, b: &Matrix| linalg::fidelity(a, b, 1e-9).unwrap();
        let (rs, sx, rx) = (f(&rho, &sigma), f(&sigma, &xi), f(&rho, &xi));
        prop_assert!(rs * rs + sx * sx <= 1.0 + rx + 1e-9, "{rs} {sx} {rx}");
        prop_assert!((rs - f(&sigma, &rho)).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// No sampled unit vector beats the top eigenvalue, and the returned
    /// vector attains it.
    #[test]
    fn top_eigenpair_dominates_random_vectors(seed in any::<u64>(), dim in 1usize..=16) {
        let mut r = rng(seed);
        let h = hermitian(dim, &mut r);
        let pair = linalg::max_eigenpair(&h, 1e-10).unwrap();
        let rayleigh = |v: &linalg::Vector| (v.adjoint() * &h * v)[(0, 0)].re;
        prop_assert!((rayleigh(&pair.vector) - pair.value).abs() <= 1e-9);
        let mut best = f64::MIN;
        for _ in 0..10_000 {
            best = best.max(rayleigh(&linalg::random_state(dim, &mut r)));
        }
        prop_assert!(best <= pair.value + 1e-6);
    }

    #[test]
    fn polar_factor_beats_random_unitaries(seed in any::<u64>(), dim in 1usize..=4, rank in 0usize..=4) {
        let mut r = rng(seed);
        let mut a = Matrix::from_fn(dim, dim, |_, _| C64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
        // Drop the rank to exercise degenerate singular values.
        for j in rank.min(dim)..dim {
            if rank > 0 {
                a.set_column(j, &a.column(0).clone_owned());
            }
        }
        let u = linalg::polar_unitary(&a);
        prop_assert!(linalg::unitarity_deviation(&u) <= 1e-10);
        let t = (u.adjoint() * &a).trace();
        prop_assert!(t.re >= -1e-9 && t.im.abs() <= 1e-9);
        let best = re_trace_overlap(&u, &a);
        for _ in 0..10_000 {
            prop_assert!(re_trace_overlap(&linalg::haar_unitary(dim, &mut r), &a) <= best + 1e-9);
        }
    }
}

fn seesaw_on(inst: &ProtocolInstance, dims: Vec<usize>, restarts: usize, seed: u64) -> qmip_core::adversary::AdversaryResult {
    let mut cfg = SeesawConfig::new(dims);
    cfg.restarts = restarts;
    cfg.seed = seed;
    seesaw(&inst.verifier, &cfg).unwrap()
}

#[test]
fn seesaw_traces_never_descend() {
    let cases = [
        (fixtures::chsh(), vec![1, 1]),
        (fixtures::guess(), vec![1]),
        (fixtures::sound(0.05), vec![1]),
        (fixtures::relay_no(3, 0.3), vec![1]),
    ];
    for (inst, dims) in cases {
        for seed in 0..5 {
            let res = seesaw_on(&inst, dims.clone(), 2, seed);
            for w in res.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "{:?}", res.trace);
            }
            assert_eq!(res.value, *res.trace.last().unwrap());
            let again = qmip_core::acceptance_probability(&res.instance(&inst.verifier)).unwrap();
            assert!((again - res.value).abs() <= 1e-9);
        }
    }
}

/// Replaces one prover turn `U` by `U` followed by a random unitary close to
/// the identity on the same qubits.
fn perturbed(inst: &ProtocolInstance, prover: usize, turn: usize, size: f64, r: &mut ChaCha8Rng) -> ProtocolInstance {
    let mut out = inst.clone();
    let private = inst.provers[prover].private_qubits;
    let mut targets: Vec<_> = (0..private).map(|j| q(&qmip_core::protocol::prover_register(prover), j)).collect();
    targets.extend((0..inst.verifier.message_size()).map(|j| q(&qmip_core::protocol::message_register(prover), j)));
    let dim = 1 << targets.len();
    let h = hermitian(dim, r);
    let eig = h.symmetric_eigen();
    let phases = Matrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, size * e)));
    let w = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
    out.provers[prover].circuits[turn].push(Gate::unitary(w, targets));
    out
}

#[test]
fn converged_strategies_are_best_responses() {
    let mut r = rng(7);
    for (inst, dims) in [(fixtures::chsh(), vec![1, 1]), (fixtures::guess(), vec![1])] {
        let res = seesaw_on(&inst, dims, 20, 3);
        assert!(res.converged);
        let found = res.instance(&inst.verifier);
        for i in 0..1000 {
            let prover = i % found.provers.len();
            let size = [1e-4, 1e-2, 0.3, PI][i % 4];
            let p = perturbed(&found, prover, 0, size, &mut r);
            let v = qmip_core::acceptance_probability(&p).unwrap();
            assert!(v <= res.value + 1e-7, "perturbation raised {} to {v}", res.value);
        }
    }
}

#[test]
fn shared_optimum_matches_resimulation() {
    for inst in [fixtures::good(), fixtures::guess(), fixtures::chsh(), fixtures::relay_yes(3, 0.7)] {
        let o = optimal_shared_state(&inst.verifier, &inst.provers).unwrap();
        let mut with = inst.clone();
        with.shared = o.state.clone();
        let v = qmip_core::acceptance_probability(&with).unwrap();
        assert!((v - o.value).abs() <= 1e-9);
        assert!(v >= qmip_core::acceptance_probability(&inst).unwrap() - 1e-9);
    }
    // Random states never beat the optimum.
    let g = fixtures::guess();
    let o = optimal_shared_state(&g.verifier, &g.provers).unwrap();
    let mut r = rng(11);
    for _ in 0..20 {
        let mut with = g.clone();
        with.shared = StateVector::from_vector(g.shared.layout().clone(), &linalg::random_state(2, &mut r), 1e-12).unwrap();
        assert!(qmip_core::acceptance_probability(&with).unwrap() <= o.value + 1e-9);
    }
}

#[test]
fn grid_search_never_beats_seesaw() {
    let cases = [
        (fixtures::chsh(), vec![1, 1]),
        (fixtures::guess(), vec![1]),
        (fixtures::always(), vec![1]),
        (fixtures::sound(0.1), vec![1]),
    ];
    for (inst, dims) in cases {
        let s = seesaw_on(&inst, dims.clone(), 10, 0);
        let b = brute_force_value(&inst.verifier, &BruteForceConfig::new(dims, PI / 16.0)).unwrap();
        assert!(b.value <= s.value + 1e-3, "grid {} see-saw {}", b.value, s.value);
    }
}
