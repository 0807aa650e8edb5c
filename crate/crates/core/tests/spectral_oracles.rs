mod common;

use common::jacobi_eigen;
use nalgebra::DMatrix;
use oscnet::network::{chain, random_network, RandomNetworkParams};
use oscnet::spectral::{diagonalize, frozen_mode_report, FrozenTolerances};
use oscnet::{BathConfig, BathKind, ModeDecomposition, NetworkSpec, RngSeed};
use proptest::prelude::*;

fn ensemble(n: usize, seed: u64) -> NetworkSpec {
    let params = RandomNetworkParams {
        n,
        p: 0.6,
        freq_low: 0.9,
        freq_high: 1.2,
        coupling_mean: -0.1,
        coupling_sd: 0.05,
        max_retries: 100,
    };
    random_network(&params, RngSeed(seed)).unwrap()
}

fn bath(kind: BathKind) -> BathConfig {
    BathConfig::new(kind, 0.01, 10.0, 50.0).unwrap()
}

/// Real roots of the monic cubic x³ + a x² + b x + c with three real roots.
fn cubic_roots(a: f64, b: f64, c: f64) -> [f64; 3] {
    let p = b - a * a / 3.0;
    let q = 2.0 * a.powi(3) / 27.0 - a * b / 3.0 + c;
    let r = (-p / 3.0).sqrt();
    let phi = ((3.0 * q) / (2.0 * p * r)).clamp(-1.0, 1.0).acos() / 3.0;
    let mut roots = [0.0; 3];
    for (k, root) in roots.iter_mut().enumerate() {
        *root = 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - a / 3.0;
    }
    roots.sort_by(f64::total_cmp);
    roots
}

#[test]
fn chain_frequencies_match_characteristic_polynomial() {
    let net = chain(vec![1.2, 1.0, 1.8], &[0.4, 0.4]).unwrap();
    let h = net.hamiltonian();
    // det(H − xI) = −(x³ + a x² + b x + c)
    let (h11, h22, h33, l) = (h[(0, 0)], h[(1, 1)], h[(2, 2)], 0.4);
    let a = -(h11 + h22 + h33);
    let b = h11 * h22 + h22 * h33 + h11 * h33 - 2.0 * l * l;
    let c = -(h11 * h22 * h33 - l * l * (h11 + h33));
    let roots = cubic_roots(a, b, c);
    let modes = diagonalize(&net).unwrap();
    for (w, x) in modes.omega().iter().zip(roots) {
        assert!((w * w - x).abs() < 1e-12, "{} vs {}", w * w, x);
    }
}

#[test]
fn chain_common_bath_couplings_match_oracle_column_sums() {
    let net = chain(vec![1.2, 1.0, 1.8], &[0.4, 0.4]).unwrap();
    let d = ModeDecomposition::new(&net, &bath(BathKind::Common)).unwrap();
    let (_, vecs) = jacobi_eigen(&net.hamiltonian());
    for m in 0..3 {
        let sum: f64 = vecs.column(m).sum();
        assert!((sum.abs() - d.kappa()[m].abs()).abs() < 1e-12);
    }
}

#[test]
fn random_networks_are_stable_by_independent_eigensolver() {
    let params = RandomNetworkParams {
        n: 15,
        p: 0.6,
        freq_low: 0.9,
        freq_high: 1.2,
        coupling_mean: -0.1,
        coupling_sd: 0.05,
        max_retries: 100,
    };
    let net = random_network(&params, RngSeed(2024)).unwrap();
    let (vals, _) = jacobi_eigen(&net.hamiltonian());
    assert!(vals[0] > 0.0);
    // 105 possible edges at p = 0.6: mean 63, sd ≈ 5; accept ±5 sd
    let edges = (0..15).flat_map(|i| ((i + 1)..15).map(move |j| (i, j))).filter(|&(i, j)| net.lambda(i, j) != 0.0).count();
    assert_eq!(edges, net.edges().len());
    assert!((38..=88).contains(&edges), "edge count {edges}");
}

#[test]
fn sb_rate_matches_series_coth() {
    let net = NetworkSpec::new(vec![1.0], DMatrix::zeros(1, 1)).unwrap();
    let d = ModeDecomposition::new(&net, &bath(BathKind::Separate)).unwrap();
    assert_eq!(d.damping()[0], 0.01);
    let x: f64 = 0.05;
    let coth = (1.0 + (-2.0 * x).exp()) / (1.0 - (-2.0 * x).exp());
    assert!((d.diffusion()[0] - 0.01 * coth).abs() < 1e-14);
}

fn check_decomposition(net: &NetworkSpec, kind: BathKind) {
    let d = ModeDecomposition::new(net, &bath(kind)).unwrap();
    let f = d.transform();
    let n = net.len();
    let ortho = (f.transpose() * f - DMatrix::identity(n, n)).norm();
    assert!(ortho < 1e-10 * (n as f64).sqrt());
    let h = net.hamiltonian();
    let mut diag = f.transpose() * &h * f;
    for k in 0..n {
        diag[(k, k)] -= d.omega()[k].powi(2);
    }
    assert!(diag.norm() < 1e-10 * h.norm());
    for w in d.omega().windows(2) {
        assert!(w[0] <= w[1]);
    }
    for m in 0..n {
        let col = f.column(m);
        let lead = col.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        assert!(lead > 0.0);
    }
    let k: Vec<f64> = d.kappa().iter().map(|x| x.abs()).collect();
    let (s, e) = (d.sigma(), d.eta().unwrap());
    for j in (0..n).filter(|&j| j != s && j != e) {
        assert!(k[s] <= k[e] && k[e] <= k[j]);
    }
    for m in 0..n {
        assert!(d.damping()[m] >= 0.0 && d.diffusion()[m] >= 0.0);
        if d.damping()[m] > 0.0 {
            let ratio = d.diffusion()[m] / d.damping()[m];
            let w = d.omega()[m];
            assert!((ratio - w / (w / 20.0).tanh()).abs() < 1e-10 * ratio);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_invariants(seed in 0u64..10_000, n in 2usize..12, which in 0usize..3) {
        let net = ensemble(n, seed);
        let kind = match which { 0 => BathKind::Separate, 1 => BathKind::Common, _ => BathKind::Local { node: seed as usize % n } };
        check_decomposition(&net, kind);
    }

    #[test]
    fn common_bath_parseval(seed in 0u64..10_000, n in 2usize..16) {
        let net = ensemble(n, seed);
        let d = ModeDecomposition::new(&net, &bath(BathKind::Common)).unwrap();
        let sum: f64 = d.kappa().iter().map(|k| k * k).sum();
        prop_assert!((sum - n as f64).abs() < 1e-10);
    }

    #[test]
    fn random_network_is_bitwise_reproducible(seed in any::<u64>(), n in 1usize..12) {
        prop_assert_eq!(ensemble(n, seed), ensemble(n, seed));
    }
}

#[test]
fn common_bath_identical_pair_and_separate_bath_exactness() {
    for lambda in [0.0, -0.2, 0.3] {
        let net = NetworkSpec::from_edges(vec![1.1, 1.1], &[(0, 1, lambda)]).unwrap();
        let d = ModeDecomposition::new(&net, &bath(BathKind::Common)).unwrap();
        assert!(d.kappa()[d.sigma()].abs() < 1e-12);
        let r = frozen_mode_report(&d, FrozenTolerances::default());
        assert!(r.global_sync_common);
        let sb = ModeDecomposition::new(&net, &bath(BathKind::Separate)).unwrap();
        assert!(sb.kappa().iter().all(|&k| k == 1.0));
    }
}
