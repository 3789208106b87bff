mod support;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rculmc_core::kernel::{cholesky2x2, step_moments, step_moments_closed_form};
use rculmc_core::metrics::{frobenius, moment_error, spectral_norm};
use rculmc_core::oracles::{gaussian_w2, RcMomentRecursion, MomentTriple};
use rculmc_core::potentials::{
    condition_numbers, eval, full_grad, partial_grad, CostLedger, GraphTarget, Potential,
    QuadraticTarget,
};
use rculmc_core::samplers::optimal_phi;

fn spd(d: usize, entries: &[f64], shift: f64) -> DMatrix<f64> {
    let b = DMatrix::from_column_slice(d, d, &entries[..d * d]);
    &b * b.transpose() + DMatrix::identity(d, d) * shift
}

fn spd_strategy(max_d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_d).prop_flat_map(|d| {
        (prop::collection::vec(-2.0..2.0f64, d * d), 0.05..3.0f64)
            .prop_map(move |(e, s)| spd(d, &e, s))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn condition_number_chain(a in spd_strategy(8)) {
        let t = QuadraticTarget::new(a).unwrap();
        let k = condition_numbers(t.constants()).unwrap();
        let d = t.dim() as f64;
        let slack = 1.0 + 1e-10;
        for &ki in &k.kappa_vec {
            prop_assert!(ki <= k.kappa_max * slack);
        }
        prop_assert!(k.kappa_max <= k.kappa * slack);
        prop_assert!(k.kappa <= d * k.kappa_max * slack);
    }

    #[test]
    fn diagonal_entries_are_directional_constants(
        a in spd_strategy(8),
        seed in prop::collection::vec(-3.0..3.0f64, 8),
        t in -2.0..2.0f64,
    ) {
        let target = QuadraticTarget::new(a.clone()).unwrap();
        let d = target.dim();
        let x = &seed[..d];
        for i in 0..d {
            let mut y = x.to_vec();
            y[i] += t;
            let diff = (target.partial(i, &y) - target.partial(i, x)).abs();
            let expected = a[(i, i)] * t.abs();
            prop_assert!((diff - expected).abs() <= 1e-12 * (1.0 + expected + target.partial(i, x).abs()));
            prop_assert_eq!(target.constants().coord_l()[i], a[(i, i)]);
        }
    }

    #[test]
    fn partials_match_central_differences(
        a in spd_strategy(6),
        points in prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 6), 10),
    ) {
        let target = QuadraticTarget::new(a).unwrap();
        let d = target.dim();
        let mut ledger = CostLedger::new();
        for p in &points {
            let x = &p[..d];
            for i in 0..d {
                let step = 1e-5;
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += step;
                xm[i] -= step;
                let fd = (eval(&target, &xp).unwrap() - eval(&target, &xm).unwrap()) / (2.0 * step);
                let g = partial_grad(&target, i, x, &mut ledger).unwrap();
                prop_assert!((fd - g).abs() <= 1e-6 * g.abs().max(1.0), "fd {} vs {}", fd, g);
            }
        }
        prop_assert_eq!(ledger.units(), (10 * d) as u64);
    }

    #[test]
    fn graph_partials_match_full_gradient(
        d in 2usize..50,
        raw_edges in prop::collection::vec((0usize..50, 0usize..50, 0.1..3.0f64), 0..120),
        alpha in 0.1..2.0f64,
        x_raw in prop::collection::vec(-3.0..3.0f64, 50),
    ) {
        let edges: Vec<_> = raw_edges
            .into_iter()
            .map(|(i, j, b)| (i % d, j % d, b))
            .filter(|(i, j, _)| i != j)
            .collect();
        let g = GraphTarget::new(d, edges, alpha).unwrap();
        let x = &x_raw[..d];
        let mut ledger = CostLedger::new();
        let full = full_grad(&g, x, &mut ledger).unwrap();
        for i in 0..d {
            let p = partial_grad(&g, i, x, &mut ledger).unwrap();
            prop_assert!((p - full[i]).abs() <= 1e-12 * full[i].abs().max(1.0));
        }
        prop_assert_eq!(ledger.units(), (2 * d) as u64);
    }

    #[test]
    fn graph_partials_match_central_differences(
        d in 2usize..12,
        raw_edges in prop::collection::vec((0usize..12, 0usize..12, 0.1..3.0f64), 0..30),
        x_raw in prop::collection::vec(-3.0..3.0f64, 12),
    ) {
        let edges: Vec<_> = raw_edges
            .into_iter()
            .map(|(i, j, b)| (i % d, j % d, b))
            .filter(|(i, j, _)| i != j)
            .collect();
        let g = GraphTarget::new(d, edges, 0.5).unwrap();
        let x = &x_raw[..d];
        for i in 0..d {
            let step = 1e-5;
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += step;
            xm[i] -= step;
            let fd = (g.value(&xp) - g.value(&xm)) / (2.0 * step);
            let p = g.partial(i, x);
            prop_assert!((fd - p).abs() <= 1e-6 * p.abs().max(1.0));
        }
    }

    #[test]
    fn kernel_covariance_is_psd(log_h in -12.0..1.0f64, log_g in -3.0..3.0f64) {
        let h = 10f64.powf(log_h);
        let gamma = 10f64.powf(log_g);
        let m = step_moments(h, gamma).unwrap();
        prop_assert!(m.var_x >= 0.0 && m.var_v >= 0.0);
        prop_assert!(m.determinant() >= -1e-18 * m.var_x * m.var_v);
        prop_assert!(cholesky2x2(&m).is_ok());
    }

    #[test]
    fn optimal_phi_beats_random_schedules(
        l in prop::collection::vec(0.1..100.0f64, 2..8),
        w in prop::collection::vec(0.01..1.0f64, 8),
    ) {
        let d = l.len();
        let phi = optimal_phi(&l).unwrap();
        let s: f64 = w[..d].iter().sum();
        let other: Vec<f64> = w[..d].iter().map(|x| x / s).collect();
        let obj = |p: &[f64]| l.iter().zip(p).map(|(k, x)| k * k / (x * x)).sum::<f64>();
        prop_assert!(obj(&phi) <= obj(&other) * (1.0 + 1e-12));
    }

    #[test]
    fn moment_error_is_permutation_invariant(
        samples in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 4), 1..80),
        rot in 0usize..80,
    ) {
        let reference = DMatrix::identity(3, 3);
        let base = moment_error(&samples, &reference, 3).unwrap();
        let mut shuffled = samples.clone();
        let n = shuffled.len();
        shuffled.rotate_left(rot % n);
        shuffled.reverse();
        let other = moment_error(&shuffled, &reference, 3).unwrap();
        // Reordering changes the sums by roundoff; the norm itself is only
        // resolved to the power-iteration tolerance.
        prop_assert!((base.error - other.error).abs() <= 1e-9 * base.error.max(1e-6));
        prop_assert!(base.error >= 0.0);
    }

    #[test]
    fn spectral_norm_is_bounded_by_frobenius(entries in prop::collection::vec(-5.0..5.0f64, 36), k in 1usize..=6) {
        let b = DMatrix::from_column_slice(k, k, &entries[..k * k]);
        let m = (&b + b.transpose()) * 0.5;
        let s = spectral_norm(&m).unwrap();
        prop_assert!(s <= frobenius(&m) * (1.0 + 1e-12));
        let eig = m.clone().symmetric_eigen().eigenvalues;
        let exact = eig.iter().fold(0.0f64, |a, l| a.max(l.abs()));
        prop_assert!((s - exact).abs() <= 1e-8 * exact.max(1.0), "{} vs {}", s, exact);
    }

    #[test]
    fn gaussian_w2_is_symmetric_and_metric(
        d in 1usize..=5,
        e in prop::collection::vec(-1.5..1.5f64, 75),
        m in prop::collection::vec(-2.0..2.0f64, 15),
    ) {
        let c: Vec<DMatrix<f64>> = (0..3).map(|j| spd(d, &e[25 * j..], 0.1)).collect();
        let mu: Vec<&[f64]> = (0..3).map(|j| &m[5 * j..5 * j + d]).collect();
        let w = |a: usize, b: usize| gaussian_w2(mu[a], &c[a], mu[b], &c[b]).unwrap();
        let (w01, w10, w12, w02) = (w(0, 1), w(1, 0), w(1, 2), w(0, 2));
        prop_assert!((w01 - w10).abs() <= 1e-10 * w01.max(1.0));
        prop_assert!(w02 <= w01 + w12 + 1e-8);
        prop_assert!(w(0, 0) <= 1e-6 * (1.0 + c[0].trace()).sqrt());
    }

    #[test]
    fn gaussian_w2_diagonal_specialisation(a in prop::collection::vec(0.01..5.0f64, 3), b in prop::collection::vec(0.01..5.0f64, 3)) {
        let ca = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(a.clone()));
        let cb = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(b.clone()));
        let w = gaussian_w2(&[0.0; 3], &ca, &[0.0; 3], &cb).unwrap();
        let expected = a.iter().zip(&b).map(|(x, y)| (x.sqrt() - y.sqrt()).powi(2)).sum::<f64>().sqrt();
        prop_assert!((w - expected).abs() <= 1e-7 * expected.max(1e-3));
    }

    #[test]
    fn recursion_preserves_cauchy_schwarz(d in 1usize..20, log_h in -9.0..-3.0f64, steps in 1usize..500) {
        let h = 10f64.powf(log_h);
        let rec = RcMomentRecursion::uniform(d, h).unwrap();
        let mut s = MomentTriple::from_xv(3.0 * d as f64, 0.5 * d as f64, 0.2 * d as f64);
        for _ in 0..steps {
            s = rec.step(&s);
            prop_assert!(s.is_consistent(1e-12));
        }
    }
}

#[test]
fn kernel_covariance_is_psd_on_the_full_grid() {
    for gamma in [1e-3, 1.0, 1e3] {
        for k in 0..=130 {
            let h = 10f64.powf(-12.0 + k as f64 * 0.1);
            let m = step_moments(h, gamma).unwrap();
            let scale = m.var_x * m.var_v;
            assert!(m.determinant() >= -1e-18 * scale, "h={h:e} γ={gamma}");
            cholesky2x2(&m).unwrap();
        }
    }
}

/// The three-term textbook forms lose digits to cancellation at small `h`;
/// agreement can only be demanded up to their roundoff envelope.
#[test]
fn stable_and_naive_forms_agree_within_roundoff() {
    let eps = f64::EPSILON;
    for k in 0..=40 {
        let h = 10f64.powf(-5.0 + k as f64 * 0.1);
        let m = step_moments(h, 1.0).unwrap();
        let naive_var_x = h - 0.75 - 0.25 * (-4.0 * h).exp() + (-2.0 * h).exp();
        let naive_cov = 0.5 * (1.0 + (-4.0 * h).exp() - 2.0 * (-2.0 * h).exp());
        let naive_var_v = 1.0 - (-4.0 * h).exp();
        let naive_cxg = 0.5 * (h - 0.5 * (1.0 - (-2.0 * h).exp()));
        assert!((m.var_x - naive_var_x).abs() <= 8.0 * eps, "h={h:e}");
        assert!((m.cov_xv - naive_cov).abs() <= 8.0 * eps, "h={h:e}");
        assert!((m.var_v - naive_var_v).abs() <= 4.0 * eps, "h={h:e}");
        assert!((m.coef_x_on_grad - naive_cxg).abs() <= 4.0 * eps, "h={h:e}");
        // Where the envelope is small relative to the value, demand 1e-9.
        if 8.0 * eps <= 1e-9 * m.var_x {
            assert!(support::rel(m.var_x, naive_var_x) < 1e-9, "h={h:e}");
        }
        let cf = step_moments_closed_form(h, 1.0).unwrap();
        assert!((m.var_x - cf.var_x).abs() <= 8.0 * eps * h.max(1e-300).max(m.var_x), "h={h:e}");
        assert!(support::rel(m.var_v, cf.var_v) < 1e-12);
        assert!(support::rel(m.cov_xv, cf.cov_xv) < 1e-12);
    }
}

#[test]
fn series_branch_matches_extended_precision() {
    for &(h, ..) in support::EXTENDED_PRECISION.iter().filter(|r| r.0 < 0.25) {
        let err = support::kernel_error_vs_table(h, 1.0);
        assert!(err < 1e-12, "h={h:e}: {err:e}");
    }
}

#[test]
fn optimal_phi_matches_projected_gradient_minimiser() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let d = rng.random_range(2..=6);
        let l: Vec<f64> = (0..d).map(|_| rng.random_range(1.0..50.0)).collect();
        let phi = optimal_phi(&l).unwrap();
        let brute = support::simplex_minimizer(&l);
        for (a, b) in phi.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-6, "{phi:?} vs {brute:?}");
        }
    }
}
