#![allow(dead_code)]

use kkit_core::bodies::Body;
use kkit_core::linalg::{Matrix, Subspace, Vector};
use kkit_core::quadform::SymmetricForm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random SPD matrix with eigenvalues in `[1, cond]`, with both ends attained.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, cond: f64) -> Matrix {
    let q = gaussian_matrix(rng, n, n).qr().q();
    let eig = Vector::from_fn(n, |i, _| {
        if i == 0 {
            1.0
        } else if i == n - 1 {
            cond
        } else {
            rng.random_range(1.0..cond)
        }
    });
    &q * Matrix::from_diagonal(&eig) * q.transpose()
}

pub fn random_ellipsoid<R: Rng>(rng: &mut R, n: usize, cond: f64) -> (Matrix, Body) {
    let q = random_spd(rng, n, cond);
    let body = Body::ellipsoid(SymmetricForm::new(q.clone())).unwrap();
    (q, body)
}

pub fn random_subspace<R: Rng>(rng: &mut R, n: usize, k: usize) -> Subspace {
    Subspace::from_columns(&gaussian_matrix(rng, n, k))
}

/// A well-conditioned random invertible matrix.
pub fn random_invertible<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    Matrix::identity(n, n) + gaussian_matrix(rng, n, n) * 0.3
}

/// Random polytope: `m` points on a sphere of radius in [0.5, 2] plus the
/// cross-polytope, so the origin is interior.
pub fn random_polytope<R: Rng>(rng: &mut R, n: usize, m: usize) -> Body {
    let mut vertices = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut v = Vector::zeros(n);
            v[i] = s * rng.random_range(0.5..1.5);
            vertices.push(v);
        }
    }
    for _ in 0..m {
        let v = gaussian_vector(rng, n);
        let r = rng.random_range(0.5..2.0);
        vertices.push(&v / v.norm() * r);
    }
    Body::polytope(vertices).unwrap()
}

/// Brute-force gauge of a polytope: the largest functional `ℓ` with `ℓ = 1`
/// on `n` affinely independent vertices and `ℓ ≤ 1` on all of them.
pub fn facet_oracle_gauge(vertices: &[Vector], v: &Vector) -> f64 {
    let n = v.len();
    let m = vertices.len();
    let mut best = f64::NEG_INFINITY;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = Matrix::from_fn(n, n, |r, c| vertices[idx[r]][c]);
        if let Some(inv) = a.clone().try_inverse() {
            if a.determinant().abs() > 1e-12 {
                let l = inv * Vector::from_element(n, 1.0);
                if vertices.iter().all(|w| l.dot(w) <= 1.0 + 1e-10) {
                    best = best.max(l.dot(v));
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - n + i {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn xy() -> Subspace {
    Subspace::span_of(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])
}

/// `{|z| ≤ 2}` ∩ the unit disk cylinder along `z`.
pub fn truncated_disk_cylinder() -> Body {
    let cyl = Body::cylinder(Body::unit_ball(3), xy(), Subspace::axis(3, 2)).unwrap();
    let slab = Body::linear_image(
        Matrix::from_diagonal(&Vector::from_column_slice(&[10.0, 10.0, 2.0])),
        Body::cube(3, 1.0),
    )
    .unwrap();
    Body::intersection(vec![cyl, slab]).unwrap()
}

pub fn relative_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm()
}
