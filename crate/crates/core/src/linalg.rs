//! Subspaces, oblique projectors and graph charts on the Grassmannian.
//!
//! Every [`Subspace`] stores an orthonormal frame; spans are re-orthonormalized
//! on construction. Equality and membership are decided by principal angles
//! (tolerance [`ANGLE_TOL`]); rank decisions use a relative singular-value
//! cutoff of [`RANK_TOL`]` · σ_max`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Principal-angle tolerance for subspace equality and membership.
pub const ANGLE_TOL: f64 = 1e-10;
/// Relative singular-value cutoff for rank decisions.
pub const RANK_TOL: f64 = 1e-10;
/// Largest condition number accepted for a stacked pair of complementary frames.
pub const COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error(
        "subspaces of dimensions {dim_x} and {dim_y} are not complementary in R^{ambient} (condition {condition:.3e})"
    )]
    NonComplementary {
        dim_x: usize,
        dim_y: usize,
        ambient: usize,
        condition: f64,
    },
    #[error("chart coefficients outside the box (coefficient {index}: {value} exceeds {limit})")]
    OutOfChart { index: usize, value: f64, limit: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
}

/// Singular value decomposition with singular values sorted in decreasing order.
///
/// `v` always has as many columns as `m` (wide matrices get a full `V` and
/// zero-padded singular values), so null-space vectors are available.
pub(crate) struct SortedSvd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

/// Computed with faer: nalgebra 0.35 returns inaccurate factors for some
/// rank-deficient inputs when singular vectors are requested.
pub(crate) fn sorted_svd(m: &Matrix) -> SortedSvd {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return SortedSvd {
            u: Matrix::zeros(rows, cols),
            sigma: vec![0.0; cols],
            v: Matrix::identity(cols, cols),
        };
    }
    let a = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let (u, s, v) = if rows >= cols {
        let svd = a.thin_svd().expect("SVD of a finite matrix");
        let s: Vec<f64> = (0..cols).map(|i| svd.S().column_vector()[i]).collect();
        (
            Matrix::from_fn(rows, cols, |i, j| svd.U()[(i, j)]),
            s,
            Matrix::from_fn(cols, cols, |i, j| svd.V()[(i, j)]),
        )
    } else {
        let svd = a.svd().expect("SVD of a finite matrix");
        let s: Vec<f64> = (0..cols)
            .map(|i| if i < rows { svd.S().column_vector()[i] } else { 0.0 })
            .collect();
        (
            Matrix::from_fn(rows, cols, |i, j| if j < rows { svd.U()[(i, j)] } else { 0.0 }),
            s,
            Matrix::from_fn(cols, cols, |i, j| svd.V()[(i, j)]),
        )
    };
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| s[y].total_cmp(&s[x]));
    SortedSvd {
        u: Matrix::from_fn(rows, cols, |i, j| u[(i, order[j])]),
        sigma: order.iter().map(|&i| s[i]).collect(),
        v: Matrix::from_fn(cols, cols, |i, j| v[(i, order[j])]),
    }
}

/// Moore–Penrose pseudo-inverse, cutting singular values below `rel_tol·σ_max`.
pub fn pseudo_inverse(m: &Matrix, rel_tol: f64) -> Matrix {
    let s = sorted_svd(m);
    let top = s.sigma.first().copied().unwrap_or(0.0);
    let mut out = Matrix::zeros(m.ncols(), m.nrows());
    for (j, &sig) in s.sigma.iter().enumerate() {
        if sig > rel_tol * top && sig > 0.0 {
            out += s.v.column(j) * s.u.column(j).transpose() / sig;
        }
    }
    out
}

/// Numerical rank with the crate-wide relative cutoff.
pub fn numerical_rank(m: &Matrix) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let s = sorted_svd(m);
    let top = s.sigma.first().copied().unwrap_or(0.0);
    if top <= f64::MIN_POSITIVE {
        return 0;
    }
    s.sigma.iter().filter(|&&x| x > RANK_TOL * top).count()
}

/// Orthonormal basis of the column span of `m`.
pub fn orthonormalize(m: &Matrix) -> Matrix {
    let n = m.nrows();
    if m.ncols() == 0 {
        return Matrix::zeros(n, 0);
    }
    let s = sorted_svd(m);
    let top = s.sigma[0];
    if top <= f64::MIN_POSITIVE {
        return Matrix::zeros(n, 0);
    }
    let rank = s.sigma.iter().filter(|&&x| x > RANK_TOL * top).count();
    s.u.columns(0, rank).into_owned()
}

/// A linear subspace of `R^n` stored as an orthonormal frame (`n × k`).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    frame: Matrix,
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Self {
            frame: Matrix::zeros(n, 0),
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            frame: Matrix::identity(n, n),
        }
    }

    /// Coordinate axis `e_i` of `R^n`.
    pub fn axis(n: usize, i: usize) -> Self {
        let mut f = Matrix::zeros(n, 1);
        f[(i, 0)] = 1.0;
        Self { frame: f }
    }

    /// Span of the columns of `m` (rank-revealing, re-orthonormalized).
    pub fn from_columns(m: &Matrix) -> Self {
        Self {
            frame: orthonormalize(m),
        }
    }

    /// Span of a list of vectors in `R^n`.
    pub fn span(n: usize, vectors: &[Vector]) -> Self {
        let mut m = Matrix::zeros(n, vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            assert_eq!(v.len(), n, "vector dimension");
            m.set_column(j, v);
        }
        Self::from_columns(&m)
    }

    /// Span of coordinate slices, a convenience for tests and fixtures.
    pub fn span_of(rows: &[&[f64]]) -> Self {
        let n = rows.first().map_or(0, |r| r.len());
        let vs: Vec<Vector> = rows.iter().map(|r| Vector::from_column_slice(r)).collect();
        Self::span(n, &vs)
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn frame(&self) -> &Matrix {
        &self.frame
    }

    pub fn basis_vector(&self, j: usize) -> Vector {
        self.frame.column(j).into_owned()
    }

    /// Frame coordinates of `v` (orthogonal projection coordinates).
    pub fn coords(&self, v: &Vector) -> Vector {
        self.frame.tr_mul(v)
    }

    /// Ambient vector with frame coordinates `c`.
    pub fn embed(&self, c: &Vector) -> Vector {
        &self.frame * c
    }

    pub fn orthogonal_projector(&self) -> Matrix {
        &self.frame * self.frame.transpose()
    }

    /// Orthogonal complement.
    pub fn complement(&self) -> Subspace {
        let n = self.ambient_dim();
        let k = self.dim();
        if k == 0 {
            return Subspace::full(n);
        }
        if k == n {
            return Subspace::zero(n);
        }
        let residual = Matrix::identity(n, n) - self.orthogonal_projector();
        let eig = SymmetricEigen::new(residual);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut f = Matrix::zeros(n, n - k);
        for (dst, &src) in order.iter().take(n - k).enumerate() {
            f.set_column(dst, &eig.eigenvectors.column(src));
        }
        Subspace::from_columns(&f)
    }

    /// Sine of the angle between `v` and this subspace.
    pub fn sin_angle_to(&self, v: &Vector) -> f64 {
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let r = v - self.embed(&self.coords(v));
        (r.norm() / norm).min(1.0)
    }

    pub fn contains(&self, v: &Vector) -> bool {
        self.sin_angle_to(v) <= ANGLE_TOL
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        (0..other.dim()).all(|j| self.contains(&other.basis_vector(j)))
    }

    /// Largest principal angle; `π/2` when the dimensions differ.
    pub fn distance(&self, other: &Subspace) -> f64 {
        if self.dim() != other.dim() {
            return std::f64::consts::FRAC_PI_2;
        }
        principal_angles(self, other).into_iter().fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Subspace) -> bool {
        self.dim() == other.dim() && self.distance(other) <= ANGLE_TOL
    }
}

/// Principal angles between two subspaces, ascending, `min(dim a, dim b)` of them.
///
/// Small angles are taken from sines and large ones from cosines, so both ends
/// of the range keep full relative accuracy.
pub fn principal_angles(a: &Subspace, b: &Subspace) -> Vec<f64> {
    let (a, b) = if a.dim() >= b.dim() { (a, b) } else { (b, a) };
    let q = b.dim();
    if q == 0 {
        return Vec::new();
    }
    let cross = a.frame.tr_mul(&b.frame);
    let cosines = sorted_svd(&cross).sigma;
    let residual = &b.frame - &a.frame * &cross;
    let mut sines = sorted_svd(&residual).sigma;
    sines.reverse();
    (0..q)
        .map(|i| {
            let c = cosines.get(i).copied().unwrap_or(0.0).min(1.0);
            if c * c > 0.5 {
                sines[i].min(1.0).asin()
            } else {
                c.acos()
            }
        })
        .collect()
}

/// Oblique projector onto `x` along `y`.
#[derive(Debug, Clone)]
pub struct Projector {
    matrix: Matrix,
}

impl Projector {
    pub fn new(x: &Subspace, y: &Subspace) -> Result<Self, LinalgError> {
        let n = x.ambient_dim();
        if y.ambient_dim() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: y.ambient_dim(),
            });
        }
        let (k, l) = (x.dim(), y.dim());
        let non_complementary = |condition| LinalgError::NonComplementary {
            dim_x: k,
            dim_y: l,
            ambient: n,
            condition,
        };
        if k + l != n {
            return Err(non_complementary(f64::INFINITY));
        }
        if k == 0 {
            return Ok(Self {
                matrix: Matrix::zeros(n, n),
            });
        }
        if l == 0 {
            return Ok(Self {
                matrix: Matrix::identity(n, n),
            });
        }
        let mut stacked = Matrix::zeros(n, n);
        stacked.columns_mut(0, k).copy_from(x.frame());
        stacked.columns_mut(k, l).copy_from(y.frame());
        let s = sorted_svd(&stacked);
        let condition = if s.sigma[n - 1] > 0.0 {
            s.sigma[0] / s.sigma[n - 1]
        } else {
            f64::INFINITY
        };
        if condition > COND_LIMIT {
            return Err(non_complementary(condition));
        }
        let inverse = stacked.try_inverse().ok_or_else(|| non_complementary(condition))?;
        let matrix = x.frame() * inverse.rows(0, k);
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        &self.matrix * v
    }
}

/// The unique point of `(v + Y) ∩ X`.
pub fn project(x: &Subspace, y: &Subspace, v: &Vector) -> Result<Vector, LinalgError> {
    Ok(Projector::new(x, y)?.apply(v))
}

fn stacked_frames(a: &Subspace, b: &Subspace) -> Matrix {
    let n = a.ambient_dim();
    let (p, q) = (a.dim(), b.dim());
    let mut s = Matrix::zeros(n, p + q);
    s.columns_mut(0, p).copy_from(a.frame());
    s.columns_mut(p, q).copy_from(b.frame());
    s
}

/// Intersection `a ∩ b`.
///
/// Computed from the null space of `[A | B]`, sharing the rank decision with
/// [`join`] so that `dim meet + dim join = dim a + dim b` holds exactly.
pub fn meet(a: &Subspace, b: &Subspace) -> Subspace {
    let n = a.ambient_dim();
    let (p, q) = (a.dim(), b.dim());
    if p == 0 || q == 0 {
        return Subspace::zero(n);
    }
    let s = sorted_svd(&stacked_frames(a, b));
    let top = s.sigma[0];
    let rank = s.sigma.iter().filter(|&&x| x > RANK_TOL * top).count();
    let nullity = p + q - rank;
    if nullity == 0 {
        return Subspace::zero(n);
    }
    let null = s.v.columns(rank, nullity);
    let vectors = a.frame() * null.rows(0, p);
    // the map (a, b) ↦ A a is injective on the null space; keep every column
    let svd = sorted_svd(&vectors);
    Subspace {
        frame: svd.u.columns(0, nullity).into_owned(),
    }
}

/// Sum `a + b`.
pub fn join(a: &Subspace, b: &Subspace) -> Subspace {
    let n = a.ambient_dim();
    if a.dim() == 0 {
        return b.clone();
    }
    if b.dim() == 0 {
        return a.clone();
    }
    let s = sorted_svd(&stacked_frames(a, b));
    let top = s.sigma[0];
    let rank = s.sigma.iter().filter(|&&x| x > RANK_TOL * top).count();
    Subspace {
        frame: s.u.columns(0, rank.min(n)).into_owned(),
    }
}

/// Radical-inverse Halton sequence value for `index` in base `base`.
pub(crate) fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Graph-coordinate chart on `Gr_k(R^n)` with a centred parameter box.
///
/// A coefficient array `M` (row-major `(n−k) × k`, row `i` along transversal
/// vector `y_i`, column `j` along base vector `x_j`) names the plane spanned by
/// `x_j + Σ_i M_ij y_i`. The same type describes a region of planes, so it is
/// also exported as [`ChartRegion`].
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannChart {
    base: Subspace,
    transversal: Subspace,
    half_widths: Vec<f64>,
}

pub type ChartRegion = GrassmannChart;

impl GrassmannChart {
    pub fn new(base: Subspace, transversal: Subspace, half_widths: Vec<f64>) -> Result<Self, LinalgError> {
        let n = base.ambient_dim();
        let k = base.dim();
        if transversal.ambient_dim() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: transversal.ambient_dim(),
            });
        }
        Projector::new(&base, &transversal)?;
        if k == 0 || k == n {
            return Err(LinalgError::InvalidChart(format!(
                "base dimension {k} must lie strictly between 0 and {n}"
            )));
        }
        let d = k * (n - k);
        if half_widths.len() != d {
            return Err(LinalgError::DimensionMismatch {
                expected: d,
                got: half_widths.len(),
            });
        }
        if half_widths.iter().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(LinalgError::InvalidChart(
                "half-widths must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            base,
            transversal,
            half_widths,
        })
    }

    /// Chart over the orthogonal complement of `base`.
    pub fn around(base: Subspace, half_widths: Vec<f64>) -> Result<Self, LinalgError> {
        let transversal = base.complement();
        Self::new(base, transversal, half_widths)
    }

    /// Chart over the orthogonal complement with the same half-width on every axis.
    pub fn uniform(base: Subspace, half_width: f64) -> Result<Self, LinalgError> {
        let d = base.dim() * (base.ambient_dim() - base.dim());
        Self::around(base, vec![half_width; d])
    }

    pub fn base(&self) -> &Subspace {
        &self.base
    }

    pub fn transversal(&self) -> &Subspace {
        &self.transversal
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.half_widths
    }

    pub fn ambient_dim(&self) -> usize {
        self.base.ambient_dim()
    }

    pub fn plane_dim(&self) -> usize {
        self.base.dim()
    }

    /// Number of chart coordinates, `k (n − k)`.
    pub fn chart_dim(&self) -> usize {
        self.half_widths.len()
    }

    pub fn contains(&self, coeffs: &[f64]) -> bool {
        coeffs.len() == self.chart_dim()
            && coeffs
                .iter()
                .zip(&self.half_widths)
                .all(|(c, h)| c.abs() <= h * (1.0 + 1e-12) + 1e-15)
    }

    /// `(n − k) × k` coefficient matrix from a row-major coefficient slice.
    pub fn coefficient_matrix(&self, coeffs: &[f64]) -> Matrix {
        let k = self.plane_dim();
        let r = self.ambient_dim() - k;
        Matrix::from_row_slice(r, k, coeffs)
    }

    /// Spanning (non-orthonormal) graph frame `X₀ + Y₀ M`.
    pub fn graph_frame(&self, coeffs: &[f64]) -> Matrix {
        self.base.frame() + self.transversal.frame() * self.coefficient_matrix(coeffs)
    }

    /// Plane with chart coordinates `coeffs`.
    pub fn plane(&self, coeffs: &[f64]) -> Result<Subspace, LinalgError> {
        if coeffs.len() != self.chart_dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.chart_dim(),
                got: coeffs.len(),
            });
        }
        for (index, (c, h)) in coeffs.iter().zip(&self.half_widths).enumerate() {
            if !(c.abs() <= h * (1.0 + 1e-12) + 1e-15) {
                return Err(LinalgError::OutOfChart {
                    index,
                    value: *c,
                    limit: *h,
                });
            }
        }
        Ok(self.plane_unchecked(coeffs))
    }

    /// Plane for coefficients that may lie outside the box.
    pub fn plane_unchecked(&self, coeffs: &[f64]) -> Subspace {
        Subspace::from_columns(&self.graph_frame(coeffs))
    }

    /// Deterministic list of chart points covering the box.
    ///
    /// A full tensor grid with `per_axis` points per coordinate when it has at
    /// most `max_points` entries; otherwise the centre, the `2d` axis
    /// extremes and Halton points fill up to `max_points`.
    pub fn grid(&self, per_axis: usize, max_points: usize) -> Vec<Vec<f64>> {
        let d = self.chart_dim();
        let per_axis = per_axis.max(1);
        let axis = |i: usize, t: usize| -> f64 {
            if per_axis == 1 {
                0.0
            } else {
                self.half_widths[i] * (2.0 * t as f64 / (per_axis - 1) as f64 - 1.0)
            }
        };
        let total = (per_axis as f64).powi(d as i32);
        if total <= max_points as f64 {
            let total = total as usize;
            return (0..total)
                .map(|mut idx| {
                    let mut point = vec![0.0; d];
                    for i in (0..d).rev() {
                        point[i] = axis(i, idx % per_axis);
                        idx /= per_axis;
                    }
                    point
                })
                .collect();
        }
        let mut points = vec![vec![0.0; d]];
        for i in 0..d {
            for sign in [-1.0, 1.0] {
                if points.len() < max_points {
                    let mut p = vec![0.0; d];
                    p[i] = sign * self.half_widths[i];
                    points.push(p);
                }
            }
        }
        let mut index = 1;
        while points.len() < max_points {
            let p = (0..d)
                .map(|i| self.half_widths[i] * (2.0 * halton(index, PRIMES[i % PRIMES.len()]) - 1.0))
                .collect();
            points.push(p);
            index += 1;
        }
        points
    }

    /// The same chart with every half-width scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            base: self.base.clone(),
            transversal: self.transversal.clone(),
            half_widths: self.half_widths.iter().map(|h| h * factor).collect(),
        }
    }

    /// Uniformly random chart coefficients inside the box.
    pub fn random_coefficients<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.half_widths
            .iter()
            .map(|h| if *h > 0.0 { rng.random_range(-*h..=*h) } else { 0.0 })
            .collect()
    }

    /// `m` unit vectors of the swept region, each in a random plane of the box.
    pub fn sample_points(&self, m: usize, seed: u64) -> Vec<Vector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.plane_dim();
        (0..m)
            .map(|_| {
                let coeffs = self.random_coefficients(&mut rng);
                let plane = self.plane_unchecked(&coeffs);
                let c = Vector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
                let v = plane.embed(&c);
                let norm = v.norm();
                if norm > 0.0 {
                    v / norm
                } else {
                    plane.basis_vector(0)
                }
            })
            .collect()
    }

    /// Restriction of the chart to `W = X₀ ⊕ span{y_row}`.
    ///
    /// Returns `W` and the one-row chart expressed in the frame coordinates of
    /// `W`; chart coefficients of the restricted chart are row `row` of the
    /// original coefficient array.
    pub fn restrict_to_row(&self, row: usize) -> (Subspace, GrassmannChart) {
        let k = self.plane_dim();
        let y = self.transversal.basis_vector(row);
        let mut w_frame = Matrix::zeros(self.ambient_dim(), k + 1);
        w_frame.columns_mut(0, k).copy_from(self.base.frame());
        w_frame.set_column(k, &y);
        let w = Subspace::from_columns(&w_frame);
        // graph coordinates refer to the original base frame, expressed in W
        let base_coords = w.frame().tr_mul(self.base.frame());
        let y_coords = w.frame().tr_mul(&y);
        let chart = GrassmannChart {
            base: Subspace { frame: base_coords },
            transversal: Subspace {
                frame: Matrix::from_column_slice(k + 1, 1, y_coords.as_slice()),
            },
            half_widths: self.half_widths[row * k..(row + 1) * k].to_vec(),
        };
        (w, chart)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn project_orthogonal_case() {
        let x = Subspace::axis(2, 0);
        let y = Subspace::axis(2, 1);
        let p = project(&x, &y, &v(&[3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(p, v(&[3.0, 0.0]), epsilon = 1e-14);
    }

    #[test]
    fn project_oblique_line() {
        let x = Subspace::axis(2, 0);
        let y = Subspace::span_of(&[&[1.0, 1.0]]);
        let p = project(&x, &y, &v(&[3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(p, v(&[-1.0, 0.0]), epsilon = 1e-14);
    }

    #[test]
    fn project_onto_plane_along_tilted_line() {
        let x = Subspace::span_of(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let y = Subspace::span_of(&[&[1.0, 0.0, 1.0]]);
        let p = project(&x, &y, &v(&[2.0, 5.0, 3.0])).unwrap();
        assert_abs_diff_eq!(p, v(&[-1.0, 5.0, 0.0]), epsilon = 1e-14);
    }

    #[test]
    fn project_rejects_non_complementary() {
        let x = Subspace::span_of(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let y = Subspace::span_of(&[&[1.0, 1.0, 0.0]]);
        assert!(matches!(
            project(&x, &y, &v(&[1.0, 1.0, 1.0])),
            Err(LinalgError::NonComplementary { .. })
        ));
        let y2 = Subspace::span_of(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
        assert!(project(&x, &y2, &v(&[1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn chart_plane_examples() {
        let base = Subspace::span_of(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let chart = GrassmannChart::uniform(base.clone(), 1.0).unwrap();
        assert!(chart.plane(&[0.0, 0.0]).unwrap().approx_eq(&base));
        let (a, b) = (0.3, -0.7);
        let expected = Subspace::span_of(&[&[1.0, 0.0, a], &[0.0, 1.0, b]]);
        assert!(chart.plane(&[a, b]).unwrap().approx_eq(&expected));
        assert!(matches!(
            chart.plane(&[1.5, 0.0]),
            Err(LinalgError::OutOfChart { index: 0, .. })
        ));
    }

    #[test]
    fn meet_and_join_examples() {
        let xy = Subspace::span_of(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let yz = Subspace::span_of(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(meet(&xy, &yz).approx_eq(&Subspace::axis(3, 1)));
        let j = join(&Subspace::axis(3, 2), &Subspace::span_of(&[&[1.0, 0.0, 1.0]]));
        let xz = Subspace::span_of(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]);
        assert!(j.approx_eq(&xz));
        assert_eq!(meet(&xy, &Subspace::zero(3)).dim(), 0);
        assert_eq!(join(&xy, &Subspace::full(3)).dim(), 3);
    }

    #[test]
    fn complement_is_orthogonal() {
        let x = Subspace::span_of(&[&[1.0, 2.0, 3.0, 4.0], &[0.0, 1.0, -1.0, 2.0]]);
        let c = x.complement();
        assert_eq!(c.dim(), 2);
        assert!((x.frame().tr_mul(c.frame())).norm() < 1e-14);
        assert!(join(&x, &c).approx_eq(&Subspace::full(4)));
    }

    #[test]
    fn principal_angles_small_and_large() {
        let a = Subspace::axis(2, 0);
        let t = 1e-11_f64;
        let b = Subspace::span_of(&[&[t.cos(), t.sin()]]);
        assert_abs_diff_eq!(principal_angles(&a, &b)[0], t, epsilon = 1e-20);
        let c = Subspace::span_of(&[&[0.3_f64.cos(), 0.3_f64.sin()]]);
        assert_abs_diff_eq!(a.distance(&c), 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(
            a.distance(&Subspace::axis(2, 1)),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-14
        );
    }

    #[test]
    fn grid_is_tensor_when_small_and_capped_otherwise() {
        let base = Subspace::span_of(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let chart = GrassmannChart::uniform(base, 0.4).unwrap();
        let g = chart.grid(9, 81);
        assert_eq!(g.len(), 81);
        assert_eq!(g[0], vec![-0.4, -0.4]);
        assert!(g.iter().all(|p| chart.contains(p)));
        let base5 = Subspace::span_of(&[&[1.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0, 0.0]]);
        let chart5 = GrassmannChart::uniform(base5, 0.2).unwrap();
        let g5 = chart5.grid(9, 50);
        assert_eq!(g5.len(), 50);
        assert!(g5.iter().all(|p| chart5.contains(p)));
    }

    #[test]
    fn restricted_chart_reproduces_planes() {
        let base = Subspace::span_of(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]);
        let chart = GrassmannChart::uniform(base, 0.5).unwrap();
        let (w, local) = chart.restrict_to_row(1);
        let coeffs = [0.0, 0.0, 0.2, -0.3];
        let full = chart.plane(&coeffs).unwrap();
        let restricted = local.plane(&coeffs[2..4]).unwrap();
        let lifted = Subspace::from_columns(&(w.frame() * restricted.frame()));
        assert!(full.approx_eq(&lifted));
    }
}
