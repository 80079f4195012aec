mod common;

use common::*;
use kkit_core::linalg::{join, meet, principal_angles, project, GrassmannChart, Projector, Subspace, Vector};
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (2usize..=6)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_map(|(n, k)| (n, k, n - k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn oblique_projection_is_an_idempotent_linear_projector((n, k, r) in dims(), seed in any::<u64>()) {
        let mut g = rng(seed);
        let x = random_subspace(&mut g, n, k);
        let y = random_subspace(&mut g, n, r);
        prop_assume!(Projector::new(&x, &y).is_ok());
        let p = Projector::new(&x, &y).unwrap();
        let scale = p.matrix().norm().max(1.0);
        let m = p.matrix();
        prop_assert!((m * m - m).amax() <= 1e-9 * scale * scale);
        let u = gaussian_vector(&mut g, n);
        let v = gaussian_vector(&mut g, n);
        let lin = project(&x, &y, &(&u * 2.0 - &v)).unwrap() - (project(&x, &y, &u).unwrap() * 2.0 - project(&x, &y, &v).unwrap());
        prop_assert!(lin.norm() <= 1e-9 * scale * (u.norm() + v.norm()));
        let in_x = x.embed(&gaussian_vector(&mut g, k));
        prop_assert!((project(&x, &y, &in_x).unwrap() - &in_x).norm() <= 1e-9 * scale * in_x.norm());
        let in_y = y.embed(&gaussian_vector(&mut g, r));
        prop_assert!(project(&x, &y, &in_y).unwrap().norm() <= 1e-9 * scale * in_y.norm());
    }

    #[test]
    fn meet_and_join_satisfy_the_dimension_formula(n in 2usize..=7, a in 1usize..7, b in 1usize..7, shared in 0usize..4, seed in any::<u64>()) {
        let a = a.min(n);
        let b = b.min(n);
        let shared = shared.min(a).min(b);
        let mut g = rng(seed);
        // build subspaces with a planted common part
        let common = gaussian_matrix(&mut g, n, shared);
        let fa = gaussian_matrix(&mut g, n, a - shared);
        let fb = gaussian_matrix(&mut g, n, b - shared);
        let sa = Subspace::span(n, &common.column_iter().chain(fa.column_iter()).map(|c| c.into_owned()).collect::<Vec<Vector>>());
        let sb = Subspace::span(n, &common.column_iter().chain(fb.column_iter()).map(|c| c.into_owned()).collect::<Vec<Vector>>());
        prop_assert_eq!(meet(&sa, &sb).dim() + join(&sa, &sb).dim(), sa.dim() + sb.dim());
    }

    #[test]
    fn chart_planes_vary_continuously(seed in any::<u64>(), eps in 1e-9f64..1e-3) {
        let mut g = rng(seed);
        let base = random_subspace(&mut g, 4, 2);
        let chart = GrassmannChart::uniform(base, 0.5).unwrap();
        let c = chart.random_coefficients(&mut g);
        let d: Vec<f64> = c.iter().map(|x| x + eps).collect();
        let a = chart.plane_unchecked(&c);
        let b = chart.plane_unchecked(&d);
        let largest = principal_angles(&a, &b).into_iter().fold(0.0, f64::max);
        prop_assert!(largest <= 10.0 * eps);
    }

    #[test]
    fn principal_angles_are_symmetric((n, k, _) in dims(), seed in any::<u64>()) {
        let mut g = rng(seed);
        let a = random_subspace(&mut g, n, k);
        let b = random_subspace(&mut g, n, k);
        let ab = principal_angles(&a, &b);
        let ba = principal_angles(&b, &a);
        for (x, y) in ab.iter().zip(&ba) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        prop_assert!(principal_angles(&a, &a).iter().all(|t| *t <= 1e-7));
    }
}

#[test]
fn dimension_formula_on_500_random_pairs() {
    let mut g = rng(500);
    for i in 0..500 {
        let n = 2 + i % 6;
        let a = 1 + (i / 6) % n;
        let b = 1 + (i / 7) % n;
        let sa = random_subspace(&mut g, n, a);
        let sb = random_subspace(&mut g, n, b);
        assert_eq!(meet(&sa, &sb).dim() + join(&sa, &sb).dim(), a + b, "pair {i}");
    }
}
