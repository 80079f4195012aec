use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::Vector;

/// `m` equally spaced unit vectors of the plane, starting at `e₁`.
pub fn circle_directions(m: usize) -> Vec<Vector> {
    (0..m)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / m as f64;
            Vector::from_column_slice(&[t.cos(), t.sin()])
        })
        .collect()
}

/// `m` quasi-uniform unit vectors of `R^k`.
///
/// A Fibonacci lattice for `k = 3`, equally spaced angles for `k = 2`, and
/// seeded normalised Gaussian vectors otherwise.
pub fn sphere_directions(k: usize, m: usize, seed: u64) -> Vec<Vector> {
    match k {
        2 => circle_directions(m),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = golden * i as f64;
                    Vector::from_column_slice(&[r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
        _ => random_directions(k, m, seed),
    }
}

/// `m` seeded, normalised Gaussian vectors of `R^k`.
pub fn random_directions(k: usize, m: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let v = Vector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-8 {
            out.push(v / n);
        }
    }
    out
}
