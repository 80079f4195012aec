mod common;

use common::*;
use kkit_core::bodies::Body;
use kkit_core::contracting::{
    cylinder_contains, direction_angle, find_contracting_direction, is_contracting, ContractingOptions,
};
use kkit_core::linalg::{meet, GrassmannChart, Matrix, Subspace, Vector};
use proptest::prelude::*;
use rand::Rng;

/// `{y : xᵀQy = 0 for x ∈ X}`.
fn form_complement(q: &Matrix, x: &Subspace) -> Subspace {
    Subspace::from_columns(&(q * x.frame())).complement()
}

fn coordinate_split(n: usize, k: usize) -> (Subspace, Subspace) {
    let x = Subspace::span(
        n,
        &(0..k).map(|i| Subspace::axis(n, i).basis_vector(0)).collect::<Vec<_>>(),
    );
    (x.clone(), x.complement())
}

fn image(a: &Matrix, s: &Subspace) -> Subspace {
    Subspace::from_columns(&(a * s.frame()))
}

/// Random triple `(B, X, Y)`; half of them contracting by construction.
fn random_triple<R: Rng>(g: &mut R, i: usize) -> (Body, Subspace, Subspace) {
    let n = g.random_range(3..=4);
    let k = g.random_range(1..n);
    let positive = i.is_multiple_of(2);
    let (body, x, y) = match (i / 2) % 4 {
        0 => {
            let (q, body) = random_ellipsoid(g, n, 20.0);
            let x = random_subspace(g, n, k);
            let y = form_complement(&q, &x);
            (body, x, y)
        }
        1 => {
            let a = random_invertible(g, n);
            let (x, y) = coordinate_split(n, k);
            (
                Body::linear_image(a.clone(), Body::cube(n, 1.0)).unwrap(),
                image(&a, &x),
                image(&a, &y),
            )
        }
        2 => {
            let a = random_invertible(g, n);
            let (x, y) = coordinate_split(n, k);
            let p = g.random_range(1.5..6.0);
            (Body::pball(p, a.clone()).unwrap(), image(&a, &x), image(&a, &y))
        }
        _ => {
            let chart = GrassmannChart::uniform(xy(), 0.3).unwrap();
            let x = chart.plane_unchecked(&chart.random_coefficients(g));
            (truncated_disk_cylinder(), x, Subspace::axis(3, 2))
        }
    };
    if positive {
        return (body, x, y);
    }
    let n = body.dim();
    loop {
        let y = random_subspace(g, n, n - x.dim());
        if meet(&x, &y).dim() == 0 {
            return (body, x, y);
        }
    }
}

#[test]
fn violation_and_cylinder_containment_agree() {
    let opts = ContractingOptions::default();
    let mut g = rng(2024);
    let mut disagreements = Vec::new();
    let mut positives = 0;
    for i in 0..200 {
        let (body, x, y) = random_triple(&mut g, i);
        let cert = is_contracting(&body, &x, &y, &opts).unwrap();
        let contains = cylinder_contains(&body, &x, &y, &opts).unwrap();
        positives += usize::from(contains);
        if cert.holds(opts.tol) != contains {
            disagreements.push((i, cert.violation, contains));
        }
    }
    assert!(disagreements.is_empty(), "{disagreements:?}");
    assert!((90..=110).contains(&positives), "{positives} positives");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ellipsoid_planes_contract_along_the_form_complement(n in 3usize..=5, k in 1usize..5, seed in any::<u64>()) {
        let k = k.min(n - 1);
        let mut g = rng(seed);
        let (q, body) = random_ellipsoid(&mut g, n, 20.0);
        let x = random_subspace(&mut g, n, k);
        let expected = form_complement(&q, &x);
        let opts = ContractingOptions::default();
        let cert = is_contracting(&body, &x, &expected, &opts).unwrap();
        prop_assert!(cert.violation <= 1e-10, "violation {}", cert.violation);
        let search = find_contracting_direction(&body, &x, &opts).unwrap();
        prop_assert_eq!(search.multiplicity(), 1);
        prop_assert!(search.best.violation <= 1e-10);
        prop_assert!(direction_angle(search.direction().unwrap(), &expected) <= 1e-6);
    }

    #[test]
    fn certified_planes_restrict_to_certified_hyperplane_sections(seed in any::<u64>(), use_box in any::<bool>()) {
        let n = 4;
        let mut g = rng(seed);
        let (body, x, y) = if use_box {
            let a = random_invertible(&mut g, n);
            let (x, y) = coordinate_split(n, 2);
            (Body::linear_image(a.clone(), Body::cube(n, 1.0)).unwrap(), image(&a, &x), image(&a, &y))
        } else {
            let (q, body) = random_ellipsoid(&mut g, n, 20.0);
            let x = random_subspace(&mut g, n, 2);
            let y = form_complement(&q, &x);
            (body, x, y)
        };
        let opts = ContractingOptions::default();
        prop_assert!(is_contracting(&body, &x, &y, &opts).unwrap().holds(opts.tol));
        // W = X + one line of Y; in W the direction is Y ∩ W
        let yw = y.embed(&gaussian_vector(&mut g, y.dim()));
        let mut cols: Vec<Vector> = (0..x.dim()).map(|i| x.basis_vector(i)).collect();
        cols.push(yw.clone());
        let w = Subspace::span(n, &cols);
        let restricted = Body::restriction(body, w.clone()).unwrap();
        let xw = Subspace::span(w.dim(), &(0..x.dim()).map(|i| w.coords(&x.basis_vector(i))).collect::<Vec<_>>());
        let yw = Subspace::span(w.dim(), &[w.coords(&yw)]);
        let cert = is_contracting(&restricted, &xw, &yw, &opts).unwrap();
        prop_assert!(cert.holds(opts.tol), "violation {}", cert.violation);
    }
}

#[test]
fn limits_of_certified_planes_are_certified() {
    let opts = ContractingOptions::default();
    let mut g = rng(77);
    for _ in 0..5 {
        let (q, body) = random_ellipsoid(&mut g, 3, 10.0);
        let base = random_subspace(&mut g, 3, 2);
        let chart = GrassmannChart::uniform(base.clone(), 0.5).unwrap();
        let c = chart.random_coefficients(&mut g);
        for i in 1..=8 {
            let scaled: Vec<f64> = c.iter().map(|v| v / f64::from(1 << i)).collect();
            let plane = chart.plane_unchecked(&scaled);
            let cert = is_contracting(&body, &plane, &form_complement(&q, &plane), &opts).unwrap();
            assert!(cert.holds(opts.tol));
        }
        let limit = is_contracting(&body, &base, &form_complement(&q, &base), &opts).unwrap();
        assert!(limit.violation <= opts.tol + 1e-8);
    }
    // box planes tilting toward xy keep the vertical direction
    let cube = Body::cube(3, 1.0);
    let z = Subspace::axis(3, 2);
    let chart = GrassmannChart::uniform(xy(), 0.5).unwrap();
    for i in 0..8 {
        let t = 0.4 / f64::from(1 << i);
        let plane = chart.plane_unchecked(&[t, -t]);
        assert!(is_contracting(&cube, &plane, &z, &opts).unwrap().holds(opts.tol));
    }
    assert!(is_contracting(&cube, &xy(), &z, &opts).unwrap().violation <= opts.tol + 1e-8);
}
