//! Randomized invariants: norm axioms, metric axioms and agreement between
//! evaluation paths.

use fnorm_core::distributions::seeded_rng;
use fnorm_core::empirical::empirical_eval;
use fnorm_core::fnorm::bounds;
use fnorm_core::geometry::hausdorff;
use fnorm_core::metrics::{lipschitz_check, wasserstein};
use fnorm_core::{DistributionSpec, FNorm, Metric, QuadratureConfig, SampleMatrix, SpherePointCloud};
use proptest::prelude::*;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn closed_specs() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::degenerate(vec![1.5]).unwrap(),
        DistributionSpec::bernoulli(0.3).unwrap(),
        DistributionSpec::Uniform01,
        DistributionSpec::exponential(2.0).unwrap(),
        DistributionSpec::pareto(0.5).unwrap(),
        DistributionSpec::frechet(3.0).unwrap(),
    ]
}

fn spec_index() -> impl Strategy<Value = usize> {
    0..closed_specs().len()
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 2)
}

fn sample_1d(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..4.0, n)
}

fn column(values: &[f64]) -> SampleMatrix {
    SampleMatrix::from_flat(values.len(), 1, values.to_vec()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    1e-10 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn homogeneous_and_symmetric(i in spec_index(), x in point(), c in -4.0f64..4.0) {
        let h = FNorm::closed_form(closed_specs()[i].clone()).unwrap();
        let nx = h.eval(&x).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let ns = h.eval(&scaled).unwrap();
        prop_assert!((ns - c.abs() * nx).abs() <= rel(ns, nx));
        let flipped = [x[0], -x[1]];
        prop_assert!((h.eval(&flipped).unwrap() - nx).abs() <= rel(nx, nx));
    }

    #[test]
    fn triangle_inequality(i in spec_index(), x in point(), y in point()) {
        let h = FNorm::closed_form(closed_specs()[i].clone()).unwrap();
        let sum = [x[0] + y[0], x[1] + y[1]];
        let lhs = h.eval(&sum).unwrap();
        let rhs = h.eval(&x).unwrap() + h.eval(&y).unwrap();
        prop_assert!(lhs <= rhs + rel(lhs, rhs));
    }

    #[test]
    fn monotone_and_bounded(i in spec_index(), x in point(), bump in 0.0f64..2.0) {
        let spec = closed_specs()[i].clone();
        let h = FNorm::closed_form(spec.clone()).unwrap();
        let nx = h.eval(&x).unwrap();
        let bigger = [x[0].abs(), x[1].abs() + bump];
        prop_assert!(h.eval(&bigger).unwrap() >= nx - rel(nx, nx));
        let (lo, hi) = bounds(&spec, &x).unwrap();
        prop_assert!(lo - rel(lo, nx) <= nx && nx <= hi + rel(hi, nx));
        // ‖(1,0,…)‖ = 1
        prop_assert!((h.eval(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cdf_and_quantile_agree(i in spec_index(), u in 0.01f64..0.99) {
        let spec = closed_specs()[i].clone();
        let q = spec.quantile(u).unwrap();
        let below = spec.cdf(&[q - 1e-9]).unwrap();
        let at = spec.cdf(&[q]).unwrap();
        prop_assert!(below <= u + 1e-6 && at >= u - 1e-6, "u {u} q {q} F(q-) {below} F(q) {at}");
    }

    #[test]
    fn empirical_norm_is_mean_of_maxima(values in sample_1d(1..40), x in point()) {
        let direct = values.iter().map(|v| x[0].abs().max(x[1].abs() * v)).sum::<f64>() / values.len() as f64;
        let est = empirical_eval(&column(&values), &x).unwrap();
        prop_assert!((est - direct).abs() <= rel(est, direct));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_matches_closed_form(i in spec_index(), x0 in 0.0f64..3.0, x1 in 0.05f64..3.0) {
        let spec = closed_specs()[i].clone();
        let closed = FNorm::closed_form(spec.clone()).unwrap().eval(&[x0, x1]).unwrap();
        let quad = FNorm::quadrature(spec, cfg()).unwrap().eval(&[x0, x1]).unwrap();
        prop_assert!((closed - quad).abs() < 1e-7 * (1.0 + closed), "{closed} vs {quad}");
    }

    #[test]
    fn wasserstein_is_a_metric(a in sample_1d(1..25), b in sample_1d(1..25), c in sample_1d(1..25)) {
        let (fa, fb, fc) = (
            DistributionSpec::empirical(column(&a)),
            DistributionSpec::empirical(column(&b)),
            DistributionSpec::empirical(column(&c)),
        );
        let ab = wasserstein(&fa, &fb, &cfg()).unwrap().value;
        let ba = wasserstein(&fb, &fa, &cfg()).unwrap().value;
        let bc = wasserstein(&fb, &fc, &cfg()).unwrap().value;
        let ac = wasserstein(&fa, &fc, &cfg()).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-10);
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!(wasserstein(&fa, &fa, &cfg()).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn wasserstein_equal_size_is_sorted_difference(a in sample_1d(1..30), shift in -1.0f64..1.0) {
        let b: Vec<f64> = a.iter().rev().map(|v| (v + shift).abs()).collect();
        let (mut sa, mut sb) = (a.clone(), b.clone());
        sa.sort_by(f64::total_cmp);
        sb.sort_by(f64::total_cmp);
        let oracle = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / sa.len() as f64;
        let fa = DistributionSpec::empirical(column(&a));
        let fb = DistributionSpec::empirical(column(&b));
        let w = wasserstein(&fa, &fb, &cfg()).unwrap().value;
        prop_assert!((w - oracle).abs() < 1e-10, "{w} vs {oracle}");
    }

    #[test]
    fn norms_are_lipschitz_in_wasserstein(a in sample_1d(1..25), b in sample_1d(1..25), probes in prop::collection::vec(point(), 1..12)) {
        let fa = DistributionSpec::empirical(column(&a));
        let fb = DistributionSpec::empirical(column(&b));
        let w = wasserstein(&fa, &fb, &cfg()).unwrap().value;
        let ha = FNorm::empirical(column(&a)).unwrap();
        let hb = FNorm::empirical(column(&b)).unwrap();
        let excess = lipschitz_check(&ha, &hb, w, &probes).unwrap();
        prop_assert!(excess <= 1e-10, "excess {excess}");
    }

    #[test]
    fn lipschitz_against_continuous_law(a in sample_1d(1..25), probes in prop::collection::vec(point(), 1..8)) {
        let fa = DistributionSpec::empirical(column(&a));
        let u = DistributionSpec::Uniform01;
        let w = wasserstein(&fa, &u, &cfg()).unwrap().value;
        let ha = FNorm::empirical(column(&a)).unwrap();
        let hu = FNorm::closed_form(u).unwrap();
        prop_assert!(lipschitz_check(&ha, &hu, w, &probes).unwrap() <= 1e-9);
    }

    #[test]
    fn hausdorff_is_a_metric(
        a in prop::collection::vec(point(), 1..15),
        b in prop::collection::vec(point(), 1..15),
        c in prop::collection::vec(point(), 1..15),
        m in 0usize..3,
    ) {
        let metric = [Metric::Sup, Metric::L1, Metric::L2][m].clone();
        let cloud = |p: Vec<Vec<f64>>| SpherePointCloud::new(p, "test", 0).unwrap();
        let (a, b, c) = (cloud(a), cloud(b), cloud(c));
        let ab = hausdorff(&a, &b, &metric).unwrap();
        prop_assert_eq!(ab, hausdorff(&b, &a, &metric).unwrap());
        prop_assert_eq!(hausdorff(&a, &a, &metric).unwrap(), 0.0);
        let ac = hausdorff(&a, &c, &metric).unwrap();
        let bc = hausdorff(&b, &c, &metric).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }
}

#[test]
fn seeded_monte_carlo_is_reproducible() {
    let spec = DistributionSpec::exponential(1.0).unwrap();
    let a = FNorm::monte_carlo(spec.clone(), 20_000, 11).unwrap().eval(&[1.0, 1.0]).unwrap();
    let b = FNorm::monte_carlo(spec.clone(), 20_000, 11).unwrap().eval(&[1.0, 1.0]).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    let s1 = spec.sample(100, &mut seeded_rng(5)).unwrap();
    let s2 = spec.sample(100, &mut seeded_rng(5)).unwrap();
    assert_eq!(s1.as_flat(), s2.as_flat());
}

#[test]
fn sample_csv_round_trip() {
    let s = SampleMatrix::from_rows(&[vec![0.25, 1.0], vec![3.5, 0.0]]).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let back = SampleMatrix::from_csv_reader(buf.as_slice()).unwrap();
    assert_eq!(back.as_flat(), s.as_flat());
}
