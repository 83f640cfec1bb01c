use faultsim_core::allocator::{simplex_check, split};
use faultsim_core::controller::check_k2;
use faultsim_core::plant::{actuator_deriv, phi, ActuatorParams};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn indicators(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, 1..=max_n)
}

proptest! {
    #[test]
    fn splitter_stays_on_simplex(theta in indicators(8), tau in 0.0..0.5f64) {
        let a = split(&theta, tau).unwrap();
        prop_assert!(simplex_check(&a.beta), "{:?}", a.beta);
        prop_assert_eq!(a.q, theta.iter().filter(|v| **v > tau).count());
    }

    #[test]
    fn splitter_commutes_with_permutations(theta in indicators(8), tau in 0.0..0.5f64, seed in any::<u64>()) {
        let n = theta.len();
        let mut perm: Vec<usize> = (0..n).collect();
        // deterministic Fisher-Yates driven by the proptest seed
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted: Vec<f64> = perm.iter().map(|&j| theta[j]).collect();
        let a = split(&theta, tau).unwrap();
        let b = split(&permuted, tau).unwrap();
        for (k, &j) in perm.iter().enumerate() {
            prop_assert!((b.beta[k] - a.beta[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn larger_deviation_never_gains_weight(theta in indicators(6), idx in any::<prop::sample::Index>(), bump in 0.0..1.0f64) {
        let tau = 0.02;
        let i = idx.index(theta.len());
        let mut worse = theta.clone();
        worse[i] = (theta[i] + bump).min(1.0);
        let a = split(&theta, tau).unwrap();
        let b = split(&worse, tau).unwrap();
        // only compare within a fixed classification
        prop_assume!(a.q == b.q && (theta[i] > tau) == (worse[i] > tau));
        prop_assert!(b.beta[i] <= a.beta[i] + 1e-15);
        for (k, &th) in theta.iter().enumerate() {
            if k != i && th <= tau {
                prop_assert!(b.beta[k] >= a.beta[k] - 1e-15);
            }
        }
    }

    #[test]
    fn phi_is_permutation_invariant(mut y in prop::collection::vec(-40.0..40.0f64, 1..8)) {
        let before = phi(&y);
        let direct: f64 = y.iter().map(|v| v * v).sum();
        y.reverse();
        y.rotate_left(1);
        prop_assert!((phi(&y) - before).abs() <= 1e-12 * before.max(1.0));
        prop_assert!((before - direct).abs() <= 1e-12 * before.max(1.0));
    }

    #[test]
    fn actuator_field_is_linear(
        wn2 in 1.0..200.0f64, tzw in 0.5..20.0f64,
        x in prop::array::uniform2(-50.0..50.0f64), y in prop::array::uniform2(-50.0..50.0f64),
        u in -30.0..30.0f64, v in -30.0..30.0f64, a in -3.0..3.0f64, b in -3.0..3.0f64,
    ) {
        let p = ActuatorParams { wn2, two_zeta_wn: tzw };
        let comb = [a * x[0] + b * y[0], a * x[1] + b * y[1]];
        let lhs = actuator_deriv(comb, a * u + b * v, &p);
        let fx = actuator_deriv(x, u, &p);
        let fy = actuator_deriv(y, v, &p);
        for k in 0..2 {
            let rhs = a * fx[k] + b * fy[k];
            prop_assert!((lhs[k] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }
}

/// Largest real part of the roots of `s² + c1·s + c0`.
fn oracle_a_r(p: &ActuatorParams) -> f64 {
    let (c1, c0) = (p.two_zeta_wn, p.wn2);
    let disc = c1 * c1 - 4.0 * c0;
    if disc < 0.0 {
        -c1 / 2.0
    } else {
        (-c1 + disc.sqrt()) / 2.0
    }
}

fn oracle_max_eig(acts: &[ActuatorParams], beta: &[f64], k2: &[f64], alpha_l: f64) -> f64 {
    let m = 2 * acts.len();
    let a_r = acts.iter().map(oracle_a_r).fold(f64::NEG_INFINITY, f64::max);
    // B is block-diagonal with b_i = [0, ωn²_i]ᵀ
    let mut b = DMatrix::<f64>::zeros(m, acts.len());
    for (i, a) in acts.iter().enumerate() {
        b[(2 * i + 1, i)] = a.wn2;
    }
    let bb = &b * DMatrix::from_column_slice(beta.len(), 1, beta);
    let k = DMatrix::from_column_slice(m, 1, k2);
    let mat = DMatrix::<f64>::identity(m, m) * (2.0 * a_r + alpha_l) - &bb * k.transpose() - &k * bb.transpose();
    mat.symmetric_eigen().eigenvalues.max()
}

#[test]
fn k2_certificate_agrees_with_dense_eigen_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let (mut accepted, mut rejected, mut checked) = (0, 0, 0);
    while checked < 100 {
        let n = rng.random_range(1..=4);
        let acts: Vec<ActuatorParams> = (0..n)
            .map(|_| ActuatorParams { wn2: rng.random_range(5.0..200.0), two_zeta_wn: rng.random_range(4.0..25.0) })
            .collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut beta: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let tail: f64 = beta[..n - 1].iter().sum();
        beta[n - 1] = 1.0 - tail;
        // half the draws perturb the aligned gain ε·Bβ so both outcomes occur
        let aligned = rng.random_bool(0.5);
        let eps = rng.random_range(0.1..2.0);
        let k2: Vec<f64> = (0..2 * n)
            .map(|j| {
                let base = if aligned && j % 2 == 1 { eps * acts[j / 2].wn2 * beta[j / 2] } else { 0.0 };
                base + rng.random_range(-2.0..2.0)
            })
            .collect();
        let alpha_l = rng.random_range(0.1..8.0);
        let oracle = oracle_max_eig(&acts, &beta, &k2, alpha_l);
        // skip instances sitting on the decision boundary
        if oracle.abs() < 1e-6 {
            continue;
        }
        checked += 1;
        let got = check_k2(&acts, &beta, &k2, alpha_l).unwrap();
        assert_eq!(got.satisfied, oracle <= 0.0, "instance {checked}: oracle {oracle}, jacobi {}", got.max_eig);
        assert!((got.max_eig - oracle).abs() < 1e-8 * (1.0 + oracle.abs()));
        if got.satisfied {
            accepted += 1;
        } else {
            rejected += 1;
        }
    }
    assert!(accepted > 10 && rejected > 10, "degenerate sample: {accepted} accepted, {rejected} rejected");
}
