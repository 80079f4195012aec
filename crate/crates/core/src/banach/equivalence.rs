//! Linear equivalence of 2- and 3-dimensional sections.
//!
//! Each section is moved to the position where its maximal-volume inscribed
//! centred ellipsoid is the unit ball (computed as the polar of the minimum
//! volume enclosing ellipsoid of sampled support covectors). What is left is
//! an orthogonal map, found by matching radial functions.

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};
use rayon::prelude::*;

use crate::bodies::{circle_directions, random_directions, section_samples, sphere_directions, Body, BodyError};
use crate::linalg::{Matrix, Subspace, Vector};

use super::BanachError;

/// Rotation offsets of the planar coarse search.
pub const ROTATION_OFFSETS: usize = 720;
/// Directions of the spatial radial signature.
pub const SPHERE_DESIGN_POINTS: usize = 1024;
const POLAR_SAMPLES_2D: usize = 512;
const POLAR_SAMPLES_3D: usize = 1024;
const MVEE_TOL: f64 = 1e-13;
const MVEE_MAX_ITER: usize = 200_000;
const ANGLE_REFINE_TOL: f64 = 1e-12;
const REFINE_POINTS: usize = 256;
const MIN_DET: f64 = 1e-8;
/// Coarse mismatch beyond which the angle is not refined.
const COARSE_REJECT: f64 = 1e-3;
const ROTATION_STARTS_SEED: u64 = 0x0e7a_7105;

#[derive(Debug, Clone)]
pub struct EquivalenceWitness {
    /// Maps the first section onto the second, in the frames of the two planes.
    pub map: Matrix,
    /// Worst radial mismatch in canonical position.
    pub residual: f64,
    /// The orthogonal part was found by a local search (3-dimensional sections).
    pub heuristic: bool,
}

/// Best match found, whether or not it passes the tolerance.
#[derive(Debug, Clone)]
pub struct EquivalenceMatch {
    pub map: Matrix,
    pub residual: f64,
    pub heuristic: bool,
}

/// Weights of the minimum-volume origin-centred ellipsoid `{q : qᵀ M⁻¹ q ≤ d}`
/// containing `points`, with `M = Σ uᵢ qᵢ qᵢᵀ`; returns `M`.
///
/// Khachiyan's algorithm with Todd–Yildirim away steps.
pub fn min_volume_enclosing_ellipsoid(points: &[Vector]) -> Option<Matrix> {
    let m = points.len();
    let d = points.first()?.len();
    if m < d {
        return None;
    }
    let df = d as f64;
    let mut u = vec![1.0 / m as f64; m];
    let moment = |u: &[f64]| {
        let mut acc = Matrix::zeros(d, d);
        for (w, q) in u.iter().zip(points) {
            if *w > 0.0 {
                acc.ger(*w, q, q, 1.0);
            }
        }
        acc
    };
    let mut mat = moment(&u);
    for _ in 0..MVEE_MAX_ITER {
        let inv = mat.clone().try_inverse()?;
        let omega: Vec<f64> = points.iter().map(|q| q.dot(&(&inv * q))).collect();
        let (jp, wp) = omega
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |b, (i, &w)| if w > b.1 { (i, w) } else { b });
        let (jm, wm) = omega
            .iter()
            .enumerate()
            .filter(|(i, _)| u[*i] > 0.0)
            .fold((0, f64::MAX), |b, (i, &w)| if w < b.1 { (i, w) } else { b });
        let up = wp / df - 1.0;
        let down = 1.0 - wm / df;
        if up.max(down) <= MVEE_TOL {
            break;
        }
        if up >= down {
            let tau = (wp - df) / (df * (wp - 1.0));
            u.iter_mut().for_each(|w| *w *= 1.0 - tau);
            u[jp] += tau;
        } else {
            let cap = u[jm] / (1.0 - u[jm]);
            let tau = if wm > 1.0 {
                ((df - wm) / (df * (wm - 1.0))).min(cap)
            } else {
                cap
            };
            u.iter_mut().for_each(|w| *w *= 1.0 + tau);
            u[jm] -= tau;
            if u[jm] < 1e-300 {
                u[jm] = 0.0;
            }
        }
        mat = moment(&u);
    }
    Some(mat)
}

/// Symmetric square root of a positive definite matrix.
fn sqrt_spd(m: &Matrix) -> Matrix {
    let eig = m.clone().symmetric_eigen();
    let d = Matrix::from_diagonal(&eig.eigenvalues.map(|x| x.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Support covectors with exact duplicates (shared facets) merged.
fn distinct_covectors(functionals: &[Vector]) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::new();
    for f in functionals {
        let scale = f.norm().max(1.0);
        if !out.iter().any(|g| (g - f).norm() <= 1e-10 * scale) {
            out.push(f.clone());
        }
    }
    out
}

/// A section in canonical position: `T·(B ∩ X)` has the unit ball as its
/// maximal inscribed centred ellipsoid.
struct Canonical<'a> {
    body: &'a Body,
    plane: &'a Subspace,
    t: Matrix,
    t_inv: Matrix,
}

impl<'a> Canonical<'a> {
    fn new(body: &'a Body, plane: &'a Subspace) -> Result<Self, BanachError> {
        let k = plane.dim();
        let m = if k == 2 { POLAR_SAMPLES_2D } else { POLAR_SAMPLES_3D };
        let sample = section_samples(body, plane, m)?;
        let polar = distinct_covectors(&sample.functionals);
        let moment = min_volume_enclosing_ellipsoid(&polar).ok_or(BodyError::UnboundedSection)?;
        // the polar of {ℓ : ℓᵀ M⁻¹ ℓ ≤ k} is {x : xᵀ (kM) x ≤ 1}
        let t = sqrt_spd(&(moment * k as f64));
        let t_inv = t.clone().try_inverse().ok_or(BodyError::UnboundedSection)?;
        Ok(Self { body, plane, t, t_inv })
    }

    /// Radial function of the canonical body in direction `u`.
    fn radius(&self, u: &Vector) -> f64 {
        1.0 / self.body.gauge(&self.plane.embed(&(&self.t_inv * u)))
    }
}

fn planar_orthogonal(phi: f64, orientation: f64) -> Matrix {
    let (s, c) = phi.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s * orientation, s, c * orientation])
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / 2.0;
    (x, f(x))
}

fn match_planar(a: &Canonical, b: &Canonical) -> (Matrix, f64) {
    let n = ROTATION_OFFSETS;
    let dirs = circle_directions(n);
    let ra: Vec<f64> = dirs.iter().map(|u| a.radius(u)).collect();
    let rb: Vec<f64> = dirs.iter().map(|u| b.radius(u)).collect();
    // coarse: offsets are multiples of the sampling step, so matching is an index shift
    let mut coarse: Vec<(f64, usize, f64)> = Vec::with_capacity(2 * n);
    for orientation in [1.0, -1.0] {
        for s in 0..n {
            let worst = (0..n)
                .map(|i| {
                    let j = if orientation > 0.0 {
                        (i + s) % n
                    } else {
                        (s + n - i) % n
                    };
                    (ra[i] - rb[j]).abs()
                })
                .fold(0.0, f64::max);
            coarse.push((orientation, s, worst));
        }
    }
    coarse.sort_by(|x, y| x.2.total_cmp(&y.2));
    let step = 2.0 * PI / n as f64;
    let stride = (n / REFINE_POINTS).max(1);
    let mismatch = |phi: f64, orientation: f64, stride: usize| {
        (0..n)
            .step_by(stride)
            .map(|i| {
                let theta = step * i as f64;
                let v =
                    Vector::from_column_slice(&[(orientation * theta + phi).cos(), (orientation * theta + phi).sin()]);
                (ra[i] - b.radius(&v)).abs()
            })
            .fold(0.0, f64::max)
    };
    let best_coarse = coarse[0].2;
    // an offset within half a step of the grid changes the mismatch by at most lip·step/2
    let lip = (0..n)
        .map(|i| (rb[(i + 1) % n] - rb[i]).abs() / step)
        .fold(0.0, f64::max);
    if best_coarse - lip * step > COARSE_REJECT {
        let (orientation, s, worst) = coarse[0];
        return (planar_orthogonal(step * s as f64, orientation), worst);
    }
    let mut best = (planar_orthogonal(0.0, 1.0), f64::INFINITY);
    for &(orientation, s, worst) in coarse.iter().take(2) {
        if worst > 2.0 * best_coarse + 1e-12 {
            break;
        }
        let centre = step * s as f64;
        let (phi, _) = golden_section(
            |phi| mismatch(phi, orientation, stride),
            centre - step,
            centre + step,
            ANGLE_REFINE_TOL,
        );
        let residual = mismatch(phi, orientation, 1).min(worst);
        let residual_phi = if residual < worst { phi } else { centre };
        if residual < best.1 {
            best = (planar_orthogonal(residual_phi, orientation), residual);
        }
    }
    best
}

fn to_dmatrix(r: &Rotation3<f64>) -> Matrix {
    Matrix::from_fn(3, 3, |i, j| r[(i, j)])
}

fn match_spatial(a: &Canonical, b: &Canonical) -> (Matrix, f64) {
    let dirs = sphere_directions(3, SPHERE_DESIGN_POINTS, 0);
    let ra: Vec<f64> = dirs.iter().map(|u| a.radius(u)).collect();
    let coarse_idx: Vec<usize> = (0..dirs.len()).step_by(8).collect();
    let mismatch = |q: &Matrix, idx: &[usize]| {
        idx.iter()
            .map(|&i| (ra[i] - b.radius(&(q * &dirs[i]))).abs())
            .fold(0.0, f64::max)
    };
    // principal axes of the radial second moments align the bodies up to signs
    let second_moment = |r: &dyn Fn(&Vector) -> f64| {
        let mut s = Matrix::zeros(3, 3);
        for u in &dirs {
            let rho = r(u);
            s.ger(rho * rho, u, u, 1.0);
        }
        s.symmetric_eigen()
    };
    let ea = second_moment(&|u| a.radius(u));
    let eb = second_moment(&|u| b.radius(u));
    let mut starts = Vec::new();
    for signs in 0..8u32 {
        let d = Matrix::from_diagonal(&Vector::from_fn(3, |i, _| if signs >> i & 1 == 1 { -1.0 } else { 1.0 }));
        starts.push(&eb.eigenvectors * d * ea.eigenvectors.transpose());
    }
    for axis in random_directions(3, 16, ROTATION_STARTS_SEED) {
        let angle = PI * (axis[0].abs() + 0.5) / 1.5;
        let r = to_dmatrix(&Rotation3::new(Vector3::new(axis[0], axis[1], axis[2]) * angle));
        starts.push(r.clone());
        starts.push(r * Matrix::from_diagonal(&Vector::from_column_slice(&[1.0, 1.0, -1.0])));
    }
    let mut scored: Vec<(Matrix, f64)> = starts
        .into_iter()
        .map(|q| {
            let f = mismatch(&q, &coarse_idx);
            (q, f)
        })
        .collect();
    scored.sort_by(|x, y| x.1.total_cmp(&y.1));
    let all: Vec<usize> = (0..dirs.len()).collect();
    let mut best = (Matrix::identity(3, 3), f64::INFINITY);
    for (q0, _) in scored.into_iter().take(2) {
        let mut q = q0;
        let mut f = mismatch(&q, &coarse_idx);
        let mut h = 0.05;
        while h > 1e-9 {
            let mut improved = false;
            for axis in 0..3 {
                for sign in [1.0, -1.0] {
                    let mut w = Vector3::zeros();
                    w[axis] = sign * h;
                    let cand = to_dmatrix(&Rotation3::new(w)) * &q;
                    let fc = mismatch(&cand, &coarse_idx);
                    if fc < f {
                        q = cand;
                        f = fc;
                        improved = true;
                    }
                }
            }
            if !improved {
                h /= 2.0;
            }
        }
        let residual = mismatch(&q, &all);
        if residual < best.1 {
            best = (q, residual);
        }
    }
    best
}

fn best_match(a: (&Body, &Subspace), b: (&Body, &Subspace)) -> Result<EquivalenceMatch, BanachError> {
    let k = a.1.dim();
    if b.1.dim() != k || !(k == 2 || k == 3) {
        return Err(BanachError::InvalidTensor(format!(
            "sections must both be 2- or 3-dimensional (got {k} and {})",
            b.1.dim()
        )));
    }
    let ca = Canonical::new(a.0, a.1)?;
    let cb = Canonical::new(b.0, b.1)?;
    let (q, residual) = if k == 2 {
        match_planar(&ca, &cb)
    } else {
        match_spatial(&ca, &cb)
    };
    let map = &cb.t_inv * q * &ca.t;
    Ok(EquivalenceMatch {
        map,
        residual,
        heuristic: k == 3,
    })
}

/// The best linear map between `B ∩ X₁` and `B ∩ X₂` regardless of tolerance.
pub fn section_match(body: &Body, x1: &Subspace, x2: &Subspace) -> Result<EquivalenceMatch, BanachError> {
    best_match((body, x1), (body, x2))
}

/// A linear map `L` with `L(B ∩ X₁) = B ∩ X₂` up to `tol`, if one is found.
pub fn linear_equivalent_sections(
    body: &Body,
    x1: &Subspace,
    x2: &Subspace,
    tol: f64,
) -> Result<Option<EquivalenceWitness>, BanachError> {
    accept(section_match(body, x1, x2)?, tol)
}

/// As [`linear_equivalent_sections`] for two whole bodies of dimension 2 or 3.
pub fn linear_equivalent_bodies(a: &Body, b: &Body, tol: f64) -> Result<Option<EquivalenceWitness>, BanachError> {
    if a.dim() != b.dim() {
        return Err(BodyError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        }
        .into());
    }
    let full = Subspace::full(a.dim());
    accept(best_match((a, &full), (b, &full))?, tol)
}

fn accept(m: EquivalenceMatch, tol: f64) -> Result<Option<EquivalenceWitness>, BanachError> {
    if m.residual > tol || m.map.determinant().abs() < MIN_DET {
        return Ok(None);
    }
    Ok(Some(EquivalenceWitness {
        map: m.map,
        residual: m.residual,
        heuristic: m.heuristic,
    }))
}

/// Residuals of several section pairs, computed in parallel.
pub(crate) fn pair_residuals(body: &Body, pairs: &[(Subspace, Subspace)]) -> Result<Vec<f64>, BanachError> {
    pairs
        .par_iter()
        .map(|(x, y)| section_match(body, x, y).map(|m| m.residual))
        .collect()
}
