use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

use twisted_cohomology::basic_solutions::{basic_solution, basic_solution_exact};
use twisted_cohomology::obstructions::{distribution_value, obstruction_report, one_sided_split};
use twisted_cohomology::rep_model::{
    basis_norm_sq, equiv_sobolev_norm, make_params, restrict, sobolev_norm, CoeffVector, Delta,
    RepParams, Series, SobolevOrder, C64,
};
use twisted_cohomology::solver::{oracle_banded_solve, solve_full, OracleConfig};
use twisted_cohomology::spectral_ops::{apply_x_plus_m, apply_x_plus_m_coefficients, residual};

fn model() -> impl Strategy<Value = RepParams> {
    prop_oneof![
        (0.0..6.0f64, any::<bool>()).prop_map(|(im, plus)| {
            let d = if plus { Delta::Plus } else { Delta::Minus };
            make_params(Series::Principal, C64::new(0.0, im), d, 0.9).unwrap()
        }),
        (0.05..0.85f64, any::<bool>()).prop_map(|(x, neg)| {
            let nu = if neg { -x } else { x };
            make_params(Series::Complementary, C64::new(nu, 0.0), Delta::Plus, 0.9).unwrap()
        }),
        (1..7i64).prop_map(|nu| {
            make_params(
                Series::DiscreteHolomorphic,
                C64::new(nu as f64, 0.0),
                Delta::Plus,
                0.9,
            )
            .unwrap()
        }),
        (1..7i64).prop_map(|nu| {
            make_params(
                Series::DiscreteAntiholomorphic,
                C64::new(-nu as f64, 0.0),
                Delta::Minus,
                0.9,
            )
            .unwrap()
        }),
    ]
}

fn twist() -> impl Strategy<Value = f64> {
    prop_oneof![0.2..4.0f64, -4.0..-0.2f64]
}

fn vector_in(p: RepParams, radius: i64) -> impl Strategy<Value = CoeffVector> {
    let idx = p.index_set().enumerate(radius);
    proptest::collection::vec(
        (proptest::sample::select(idx), -1.0..1.0f64, -1.0..1.0f64),
        0..12,
    )
    .prop_map(move |es| {
        CoeffVector::from_entries(p, es.into_iter().map(|(k, a, b)| (k, C64::new(a, b)))).unwrap()
    })
}

fn model_and_vector(radius: i64) -> impl Strategy<Value = (RepParams, CoeffVector)> {
    model().prop_flat_map(move |p| (Just(p), vector_in(p, radius)))
}

fn l2(v: &CoeffVector) -> f64 {
    sobolev_norm(v, SobolevOrder::ZERO)
}

/// Weighted inner product `Σ ‖u_k‖² f_k conj(h_k)` from independently computed norms.
fn inner(f: &CoeffVector, h: &CoeffVector) -> C64 {
    f.iter()
        .map(|(k, c)| c * h.get(k).conj() * basis_norm_sq(f.params(), k).unwrap())
        .sum()
}

/// `|Π|` as a plain product of the step-2 ratios.
fn product_norm(p: &RepParams, k: i64) -> f64 {
    let nu = p.operator_nu();
    let base = p.base_abs_index();
    let mut acc = C64::new(1.0, 0.0);
    let mut j = base + 2;
    while j <= k.abs() {
        let jf = j as f64;
        acc *= (C64::new(jf - 1.0, 0.0) - nu) / (C64::new(jf - 1.0, 0.0) + nu);
        j += 2;
    }
    acc.norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norms_match_plain_products(p in model()) {
        for k in p.index_set().enumerate(200) {
            let got = basis_norm_sq(&p, k).unwrap();
            let want = product_norm(&p, k);
            prop_assert!((got - want).abs() <= 1e-10 * want, "k = {}", k);
        }
    }

    #[test]
    fn order_zero_norm_is_weighted_l2((p, f) in model_and_vector(80)) {
        let direct: f64 = f.iter().map(|(k, c)| basis_norm_sq(&p, k).unwrap() * c.norm_sqr()).sum();
        prop_assert!((l2(&f).powi(2) - direct).abs() <= 1e-12 * (1.0 + direct));
    }

    #[test]
    fn restriction_idempotent_and_contracting((p, f) in model_and_vector(60), pick in any::<prop::sample::Index>(), s in 0.0..4.0f64) {
        let nonzero: Vec<i64> = p.index_set().enumerate(60).into_iter().filter(|k| *k != 0).collect();
        let n = *pick.get(&nonzero);
        let r = restrict(&f, n).unwrap();
        prop_assert_eq!(restrict(&r, n).unwrap(), r.clone());
        let s = SobolevOrder::new(s).unwrap();
        prop_assert!(sobolev_norm(&r, s) <= sobolev_norm(&f, s) * (1.0 + 1e-14));
    }

    #[test]
    fn json_round_trip((_p, f) in model_and_vector(100)) {
        prop_assert_eq!(CoeffVector::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn both_operator_rules_agree((_p, f) in model_and_vector(100), m in twist()) {
        let a = apply_x_plus_m(&f, m);
        let b = apply_x_plus_m_coefficients(&f, m);
        prop_assert!(a.sub(&b).unwrap().max_abs() <= 1e-12 * (1.0 + f.max_abs() * 100.0));
    }

    #[test]
    fn support_grows_by_at_most_two((p, f) in model_and_vector(100), m in twist()) {
        let g = apply_x_plus_m(&f, m);
        for k in g.support() {
            prop_assert!(p.contains(k));
            prop_assert!(f.support().any(|j| (j - k).abs() <= 2));
        }
    }

    #[test]
    fn operator_is_skew_plus_m((_p, f) in model_and_vector(100), m in twist()) {
        // Re <(X+m)f, f> = m ‖f‖² because X is skew-adjoint in the weighted norm
        let lhs = inner(&apply_x_plus_m(&f, m), &f).re;
        let rhs = m * l2(&f).powi(2);
        let scale = 1.0 + l2(&apply_x_plus_m(&f, m)) * l2(&f);
        prop_assert!((lhs - rhs).abs() <= 1e-11 * scale, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn round_trip_residual((_p, f) in model_and_vector(100), m in twist()) {
        let g = apply_x_plus_m(&f, m);
        let z = CoeffVector::zero(*f.params());
        prop_assert!(residual(&f, &g, m, &z).unwrap() <= 1e-12 * (1.0 + l2(&g)));
    }

    #[test]
    fn basic_solution_image((p, n) in model().prop_flat_map(|p| {
        let idx: Vec<i64> = p.index_set().enumerate(300).into_iter()
            .filter(|k| !p.obstruction_set().contains(*k)).collect();
        (Just(p), proptest::sample::select(idx))
    }), m in -4.0..4.0f64) {
        let s = basic_solution(&p, n, m).unwrap();
        let diff = apply_x_plus_m(&s.vector(), m).sub(&s.image()).unwrap();
        let scale = 1.0 + s.b.values().map(|b| b.norm()).fold(0.0, f64::max) * (n.abs() as f64);
        prop_assert!(diff.max_abs() <= 1e-12 * scale);
        // coefficient of u_n in the image is exactly the target
        prop_assert!((apply_x_plus_m(&s.vector(), m).get(n) - C64::new(1.0, 0.0)).norm() <= 1e-12 * scale);
    }

    #[test]
    fn reflection_symmetry(nu_im in 0.0..5.0f64, n in 1..150i64, m in -3.0..3.0f64) {
        // odd principal chain: b_{n,n+2k} = b_{-n,-n-2k}
        let p = make_params(Series::Principal, C64::new(0.0, nu_im), Delta::Minus, 0.9).unwrap();
        let n = 2 * n + 1;
        let pos = basic_solution(&p, n, m).unwrap();
        let neg = basic_solution(&p, -n, m).unwrap();
        prop_assert_eq!(pos.b.len(), neg.b.len());
        for (k, b) in &pos.b {
            prop_assert!((neg.coeff(-k) - b).norm() <= 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn antiholomorphic_mirrors_holomorphic(nu in 1..6i64, n in 0..100i64, m in -3.0..3.0f64) {
        let h = make_params(Series::DiscreteHolomorphic, C64::new(nu as f64, 0.0), Delta::Plus, 0.9).unwrap();
        let a = make_params(Series::DiscreteAntiholomorphic, C64::new(-nu as f64, 0.0), Delta::Minus, 0.9).unwrap();
        let n = nu + 3 + 2 * n;
        let pos = basic_solution(&h, n, m).unwrap();
        let neg = basic_solution(&a, -n, m).unwrap();
        for (k, b) in &pos.b {
            prop_assert!((neg.coeff(-k) - b).norm() <= 1e-12 * (1.0 + b.norm()));
        }
        prop_assert!((neg.d[&-(nu + 1)] - pos.d[&(nu + 1)]).norm() <= 1e-12 * (1.0 + pos.d[&(nu + 1)].norm()));
    }

    #[test]
    fn even_chain_negative_targets_mirror_above_zero(nu_im in 0.0..5.0f64, n in 2..150i64, m in -3.0..3.0f64) {
        let p = make_params(Series::Principal, C64::new(0.0, nu_im), Delta::Plus, 0.9).unwrap();
        let n = 2 * n;
        let pos = basic_solution(&p, n, m).unwrap();
        let neg = basic_solution(&p, -n, m).unwrap();
        for (k, b) in &pos.b {
            prop_assert!((neg.coeff(-k) - b).norm() <= 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn untwisted_chain_alternates(nu_im in 0.0..5.0f64, n in 3..200i64) {
        let p = make_params(Series::Principal, C64::new(0.0, nu_im), Delta::Plus, 0.9).unwrap();
        let n = 2 * n;
        let s = basic_solution(&p, n, 0.0).unwrap();
        for (k, b) in &s.b {
            if (n - k) % 4 == 0 {
                prop_assert_eq!(*b, C64::default());
            }
        }
    }

    #[test]
    fn exact_replay_matches_doubles(nu in 1..5i64, n in 0..120i64, num in -7..8i64, den in 1..5i64) {
        let p = make_params(Series::DiscreteHolomorphic, C64::new(nu as f64, 0.0), Delta::Plus, 0.9).unwrap();
        let n = nu + 3 + 2 * n;
        let q = BigRational::new(BigInt::from(num), BigInt::from(den));
        let exact = basic_solution_exact(&p, n, &q).unwrap();
        let float = basic_solution(&p, n, num as f64 / den as f64).unwrap();
        for (k, b) in &exact.b {
            let e = b.to_f64().unwrap();
            prop_assert!((float.coeff(*k).re - e).abs() <= 1e-9 * (1.0 + e.abs()), "k = {}", k);
        }
    }

    #[test]
    fn residual_identity((p, g) in model_and_vector(80), m in twist()) {
        let r = solve_full(&g, m).unwrap();
        let corr = r.obstructions.correction(p);
        prop_assert!(residual(&r.f, &g, m, &corr).unwrap() <= 1e-10 * (1.0 + l2(&g)));
    }

    #[test]
    fn functionals_are_linear((p, g) in model_and_vector(60), h in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64, m in twist()) {
        let other = CoeffVector::basis(p, p.index_set().enumerate(60)[(h % 10) as usize]).unwrap();
        let (a, b) = (C64::new(a, 0.3), C64::new(b, -1.0));
        let mix = g.scale(a).add(&other.scale(b)).unwrap();
        for n in p.obstruction_set().iter() {
            let lhs = distribution_value(&mix, n, m).unwrap();
            let rhs = a * distribution_value(&g, n, m).unwrap() + b * distribution_value(&other, n, m).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + lhs.norm() + rhs.norm()));
        }
    }

    #[test]
    fn coboundaries_are_annihilated((p, k) in model().prop_flat_map(|p| {
        let idx = p.index_set().enumerate(200);
        (Just(p), proptest::sample::select(idx))
    }), m in twist()) {
        let g = apply_x_plus_m(&CoeffVector::basis(p, k).unwrap(), m);
        let rep = obstruction_report(&g, m).unwrap();
        for d in rep.values.values() {
            prop_assert!(d.norm() <= 1e-10 * l2(&g));
        }
    }

    #[test]
    fn one_sided_remainder_has_two_modes((_p, g, n) in model().prop_flat_map(|p| {
        let lo = p.nu().re.abs() + 2.0;
        let idx: Vec<i64> = p.index_set().enumerate(40).into_iter().filter(|k| (k.abs() as f64) >= lo).collect();
        (Just(p), vector_in(p, 80), proptest::sample::select(idx))
    }), m in twist()) {
        let g = restrict(&g, n).unwrap();
        let r = one_sided_split(&g, n, m).unwrap();
        let comp = if n > 0 { n - 2 } else { n + 2 };
        for k in r.g_tilde.support() {
            prop_assert!(k == n || k == comp);
        }
        for k in r.f_tilde.support() {
            let inside = if n > 0 { k >= n } else { k <= n };
            prop_assert!(inside);
        }
    }

    #[test]
    fn corrected_target_recovers_basic_solution((p, n) in model().prop_flat_map(|p| {
        let idx: Vec<i64> = p.index_set().enumerate(100).into_iter()
            .filter(|k| !p.obstruction_set().contains(*k)).collect();
        (Just(p), proptest::sample::select(idx))
    }), m in twist()) {
        let s = basic_solution(&p, n, m).unwrap();
        let r = solve_full(&s.image(), m).unwrap();
        prop_assert!(r.f.sub(&s.vector()).unwrap().max_abs() <= 1e-12 * (1.0 + s.vector().max_abs()));
        for d in r.obstructions.values.values() {
            prop_assert!(d.norm() <= 1e-10 * (1.0 + s.image().max_abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracle_matches_explicit_solution((p, g) in model_and_vector(30), m in twist()) {
        let r = solve_full(&g, m).unwrap();
        let rhs = g.add(&r.obstructions.correction(p)).unwrap();
        let k = 4 * 30;
        let sol = oracle_banded_solve(&rhs, m, &OracleConfig::new(k)).unwrap();
        let want = r.f.filter(|j| j.abs() <= k - 4);
        let err = l2(&sol.f.sub(&want).unwrap());
        let scale = l2(&want).max(l2(&rhs) / m.abs());
        prop_assert!(err <= 1e-8 * scale, "err {} scale {}", err, scale);
    }

    #[test]
    fn oracle_interiors_converge_as_truncation_doubles((_p, g) in model_and_vector(20), m in twist()) {
        // the free-boundary pollution of the interior decays like a power of K
        let sols: Vec<CoeffVector> = [100, 200, 400]
            .iter()
            .map(|&k| oracle_banded_solve(&g, m, &OracleConfig::new(k)).unwrap().f.filter(|j| j.abs() <= 40))
            .collect();
        let d1 = l2(&sols[0].sub(&sols[1]).unwrap());
        let d2 = l2(&sols[1].sub(&sols[2]).unwrap());
        let floor = 1e-12 * (1.0 + l2(&g) / m.abs());
        prop_assert!(d2 <= d1 + floor, "{} then {}", d1, d2);
    }
}

#[test]
fn equivalent_norm_ratio_settles() {
    let models = [
        make_params(Series::Principal, C64::new(0.0, 2.0), Delta::Plus, 0.9).unwrap(),
        make_params(Series::Principal, C64::new(0.0, 1.0), Delta::Minus, 0.9).unwrap(),
        make_params(Series::Complementary, C64::new(0.7, 0.0), Delta::Plus, 0.9).unwrap(),
        make_params(Series::Complementary, C64::new(-0.6, 0.0), Delta::Plus, 0.9).unwrap(),
        make_params(
            Series::DiscreteHolomorphic,
            C64::new(3.0, 0.0),
            Delta::Plus,
            0.9,
        )
        .unwrap(),
        make_params(
            Series::DiscreteAntiholomorphic,
            C64::new(-2.0, 0.0),
            Delta::Minus,
            0.9,
        )
        .unwrap(),
    ];
    for p in models {
        for s in [0.0, 1.0, 2.5] {
            let s = SobolevOrder::new(s).unwrap();
            let ratios: Vec<f64> = p
                .index_set()
                .enumerate(500)
                .into_iter()
                .filter(|k| k.abs() >= 100)
                .map(|k| {
                    let u = CoeffVector::basis(p, k).unwrap();
                    sobolev_norm(&u, s) / equiv_sobolev_norm(&u, s)
                })
                .collect();
            let hi = ratios.iter().copied().fold(0.0, f64::max);
            let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(hi / lo < 1.2, "{} s = {:?}: {lo}..{hi}", p.label(), s);
        }
    }
}
