//! Quadratic forms from gauge data: assembly on coordinate planes, section
//! quadric fitting and global reconstruction over a region of planes.

mod form;

pub use form::{SymmetricForm, DEGENERATE_TOL, PSD_TOL};

use rayon::prelude::*;
use thiserror::Error;

use crate::bodies::{boundary_point, section_directions, Body, BodyError};
use crate::linalg::{meet, pseudo_inverse, ChartRegion, LinalgError, Matrix, Subspace, Vector};

/// Seed for the verification sample of [`reconstruct_global_form`].
pub const VERIFY_SEED: u64 = 0x9e37_79b9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadformError {
    #[error("section by a plane of the region is not an ellipsoid (fit residual {residual:.3e})")]
    NotLocallyQuadric { plane: Subspace, residual: f64 },
    #[error("assembled form disagrees with the gauge on the region (residual {residual:.3e})")]
    InconsistentPropagation { residual: f64 },
    #[error("region cannot host a compatible basis: {0}")]
    Region(String),
    #[error(transparent)]
    Body(#[from] BodyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `v ↦ Φ(v)²`.
pub fn gauge_squared(body: &Body) -> impl Fn(&Vector) -> f64 + '_ {
    move |v| {
        let g = body.gauge(v);
        g * g
    }
}

/// Polarization of `f` on the coordinate planes of `basis`.
///
/// The result records `basis` so [`SymmetricForm::matrix`] returns standard
/// coordinates.
pub fn assemble_form<F: Fn(&Vector) -> f64>(f: F, basis: &[Vector]) -> SymmetricForm {
    let n = basis.len();
    let diag: Vec<f64> = basis.iter().map(&f).collect();
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        c[(i, i)] = diag[i];
        for j in i + 1..n {
            let cij = (f(&(&basis[i] + &basis[j])) - diag[i] - diag[j]) / 2.0;
            c[(i, j)] = cij;
            c[(j, i)] = cij;
        }
    }
    let dim = basis.first().map_or(0, |v| v.len());
    let v = Matrix::from_fn(dim, n, |r, col| basis[col][r]);
    SymmetricForm::with_basis(c, v)
}

/// Worst relative disagreement `|F(p) − Q(p)| / max(1, |Q(p)|)` over `m`
/// unit vectors of the region.
pub fn verify_form<F: Fn(&Vector) -> f64 + Sync>(f: F, q: &SymmetricForm, region: &ChartRegion, m: usize) -> f64 {
    let matrix = q.matrix();
    region
        .sample_points(m, VERIFY_SEED)
        .par_iter()
        .map(|p| {
            let qp = p.dot(&(&matrix * p));
            (f(p) - qp).abs() / qp.abs().max(1.0)
        })
        .reduce(|| 0.0, f64::max)
}

/// Least-squares symmetric `S` with `pᵢᵀ S pᵢ ≈ valueᵢ`.
///
/// With `k(k+1)/2` points in general position the fit interpolates; in 2D
/// three distinct lines determine the form.
pub fn fit_quadratic_values(points: &[Vector], values: &[f64]) -> SymmetricForm {
    assert_eq!(points.len(), values.len());
    let k = points.first().map_or(0, |p| p.len());
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).collect();
    let rows = Matrix::from_fn(points.len(), pairs.len(), |r, c| {
        let (i, j) = pairs[c];
        let p = &points[r];
        if i == j {
            p[i] * p[i]
        } else {
            2.0 * p[i] * p[j]
        }
    });
    let rhs = Vector::from_column_slice(values);
    let sol = pseudo_inverse(&rows, 1e-14) * rhs;
    let mut s = Matrix::zeros(k, k);
    for (c, &(i, j)) in pairs.iter().enumerate() {
        s[(i, j)] = sol[c];
        s[(j, i)] = sol[c];
    }
    SymmetricForm::new(s)
}

/// Best quadric through the boundary of a section, in the frame of the plane.
#[derive(Debug, Clone)]
pub struct SectionFit {
    /// `k × k` form in the frame coordinates of the plane.
    pub form: SymmetricForm,
    /// `max |√(cᵀSc) − 1|` over the boundary sample.
    pub residual: f64,
    pub positive_definite: bool,
}

/// Boundary points of `B ∩ X` in frame coordinates.
pub fn section_boundary(body: &Body, plane: &Subspace, m: usize) -> Result<Vec<Vector>, BodyError> {
    if body.dim() != plane.ambient_dim() {
        return Err(BodyError::DimensionMismatch {
            expected: body.dim(),
            got: plane.ambient_dim(),
        });
    }
    if meet(&body.kernel(), plane).dim() > 0 {
        return Err(BodyError::UnboundedSection);
    }
    section_directions(plane.dim(), m)
        .into_iter()
        .map(|c| {
            let p = boundary_point(body, &plane.embed(&c)).map_err(|_| BodyError::UnboundedSection)?;
            Ok(plane.coords(&p))
        })
        .collect()
}

/// Least-squares quadric fit of `Φ²` on `m` boundary points of `B ∩ X`.
///
/// The least-squares shape is rescaled to the minimax scale in the gauge
/// metric, so the residual is the best achievable for that shape.
pub fn section_quadric_fit(body: &Body, plane: &Subspace, m: usize) -> Result<SectionFit, QuadformError> {
    let points = section_boundary(body, plane, m)?;
    let ones = vec![1.0; points.len()];
    let form = fit_quadratic_values(&points, &ones);
    let s = form.coeffs();
    let radii: Vec<f64> = points.iter().map(|c| c.dot(&(s * c)).max(0.0).sqrt()).collect();
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || !hi.is_finite() {
        return Ok(SectionFit {
            residual: f64::INFINITY,
            positive_definite: false,
            form,
        });
    }
    let scale = 2.0 / (lo + hi);
    let form = SymmetricForm::new(s * (scale * scale));
    let residual = (hi - lo) / (hi + lo);
    let positive_definite = form.is_positive_definite();
    Ok(SectionFit {
        form,
        residual,
        positive_definite,
    })
}

/// The fitted form when the section is an ellipsoid within `tol`.
pub fn fit_section_quadric(
    body: &Body,
    plane: &Subspace,
    m: usize,
    tol: f64,
) -> Result<Option<SymmetricForm>, QuadformError> {
    let fit = section_quadric_fit(body, plane, m)?;
    Ok((fit.residual <= tol && fit.positive_definite).then_some(fit.form))
}

/// Knobs of [`reconstruct_global_form`].
#[derive(Debug, Clone)]
pub struct ReconstructOptions {
    pub tol: f64,
    pub grid_per_axis: usize,
    pub max_planes: usize,
    pub section_points: usize,
    pub verify_points: usize,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            grid_per_axis: 3,
            max_planes: 81,
            section_points: 256,
            verify_points: 2048,
        }
    }
}

/// Result of a successful global reconstruction.
#[derive(Debug, Clone)]
pub struct GlobalForm {
    /// The form in standard coordinates.
    pub form: SymmetricForm,
    pub psd: bool,
    pub rank: usize,
    /// Ascending eigenvalues of `form`.
    pub eigenvalues: Vec<f64>,
    /// Basis the form was assembled in (columns).
    pub basis: Matrix,
    /// Worst section fit over the verification grid.
    pub fit_residual: f64,
    /// [`verify_form`] residual over the region.
    pub verify_residual: f64,
}

/// Basis `x₁…x_k, w_j + t·y_j` whose coordinate planes all lie in planes of
/// the region.
///
/// `w_j` are unit vectors of the base plane at distinct angles strictly
/// between `x₁` and `x₂`; `t` is chosen so every chart point used fills at most
/// 0.9 of the box.
pub fn compatible_basis(region: &ChartRegion) -> Result<Vec<Vector>, QuadformError> {
    let k = region.plane_dim();
    let r = region.ambient_dim() - k;
    if k < 2 {
        return Err(QuadformError::Region("base plane must have dimension ≥ 2".into()));
    }
    if region.half_widths().iter().any(|h| !(*h > 0.0)) {
        return Err(QuadformError::Region("every half-width must be positive".into()));
    }
    let h = |i: usize, j: usize| region.half_widths()[i * k + j];
    // directions of w_j in base-frame coordinates
    let alphas: Vec<Vector> = (0..r)
        .map(|j| {
            let theta = std::f64::consts::FRAC_PI_2 * (j + 1) as f64 / (r + 1) as f64;
            let mut a = Vector::zeros(k);
            a[0] = theta.cos();
            a[1] = theta.sin();
            a
        })
        .collect();
    // chart rows needed at t = 1; the largest box ratio fixes t
    let mut worst: f64 = 0.0;
    for (j, a) in alphas.iter().enumerate() {
        for fixed in 0..k {
            // the plane through x_fixed and w_j + t·y_j tilts along one other axis
            let ratio = (0..2)
                .filter(|&b| b != fixed)
                .map(|b| 1.0 / (a[b].abs() * h(j, b)))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(ratio);
        }
    }
    for i in 0..r {
        for j in i + 1..r {
            let pair = Matrix::from_fn(2, k, |row, c| if row == 0 { alphas[i][c] } else { alphas[j][c] });
            let dual = pseudo_inverse(&pair, 1e-14);
            for (row, line) in [(i, 0), (j, 1)] {
                for c in 0..k {
                    worst = worst.max(dual[(c, line)].abs() / h(row, c));
                }
            }
        }
    }
    let t = 0.9 / worst;
    let base = region.base();
    let transversal = region.transversal();
    let mut basis: Vec<Vector> = (0..k).map(|i| base.basis_vector(i)).collect();
    for (j, a) in alphas.iter().enumerate() {
        basis.push(base.embed(a) + transversal.basis_vector(j) * t);
    }
    Ok(basis)
}

/// Global quadratic form agreeing with `Φ²` on every plane of the region.
///
/// Every grid plane's section must be an ellipsoid; the form is assembled on a
/// compatible basis and checked against `Φ²` on the swept region.
pub fn reconstruct_global_form(
    body: &Body,
    region: &ChartRegion,
    opts: &ReconstructOptions,
) -> Result<GlobalForm, QuadformError> {
    let planes = region.grid(opts.grid_per_axis, opts.max_planes);
    let fits: Vec<Result<(Subspace, f64, bool), QuadformError>> = planes
        .par_iter()
        .map(|coeffs| {
            let plane = region.plane_unchecked(coeffs);
            let fit = section_quadric_fit(body, &plane, opts.section_points)?;
            Ok((plane, fit.residual, fit.positive_definite))
        })
        .collect();
    let mut fit_residual: f64 = 0.0;
    let mut failure: Option<(Subspace, f64)> = None;
    for f in fits {
        let (plane, residual, pd) = f?;
        fit_residual = fit_residual.max(residual);
        let bad = residual > opts.tol || !pd;
        if bad && failure.as_ref().is_none_or(|(_, r)| residual > *r) {
            failure = Some((plane, residual));
        }
    }
    if let Some((plane, residual)) = failure {
        return Err(QuadformError::NotLocallyQuadric { plane, residual });
    }
    let basis = compatible_basis(region)?;
    let assembled = assemble_form(gauge_squared(body), &basis);
    let basis_matrix = assembled.basis().cloned().expect("assembled forms record a basis");
    let form = assembled.to_standard();
    let verify_residual = verify_form(gauge_squared(body), &form, region, opts.verify_points);
    if !(verify_residual <= opts.tol) {
        return Err(QuadformError::InconsistentPropagation {
            residual: verify_residual,
        });
    }
    Ok(GlobalForm {
        psd: form.is_psd(),
        rank: form.rank(),
        eigenvalues: form.eigenvalues(),
        basis: basis_matrix,
        form,
        fit_residual,
        verify_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn xy() -> Subspace {
        Subspace::span_of(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])
    }

    #[test]
    fn assemble_polarizes_the_spec_form() {
        let f = |v: &Vector| v[0] * v[0] + 2.0 * v[1] * v[1] + 3.0 * v[2] * v[2] + 2.0 * v[0] * v[1];
        let basis: Vec<Vector> = (0..3)
            .map(|i| Vector::from_fn(3, |r, _| (r == i) as u8 as f64))
            .collect();
        let q = assemble_form(f, &basis);
        let expected = Matrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 3.0]);
        assert_eq!(q.coeffs(), &expected);
    }

    #[test]
    fn unit_ball_in_orthonormal_basis_is_identity() {
        let ball = Body::unit_ball(3);
        let frame = Subspace::span_of(&[&[1.0, 1.0, 0.0], &[1.0, -1.0, 1.0], &[0.0, 1.0, 2.0]]);
        let basis: Vec<Vector> = (0..3).map(|i| frame.basis_vector(i)).collect();
        let q = assemble_form(gauge_squared(&ball), &basis);
        assert!((q.coeffs() - Matrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn square_section_fit_is_rejected_at_the_minimax_residual() {
        let fit = section_quadric_fit(&Body::cube(3, 1.0), &xy(), 256).unwrap();
        assert_abs_diff_eq!(fit.residual, 3.0 - 2.0 * 2f64.sqrt(), epsilon = 1e-12);
        assert!(fit_section_quadric(&Body::cube(3, 1.0), &xy(), 256, 1e-6)
            .unwrap()
            .is_none());
    }

    #[test]
    fn compatible_basis_planes_lie_in_the_region() {
        let region = ChartRegion::uniform(xy(), 0.3).unwrap();
        let basis = compatible_basis(&region).unwrap();
        let v = Matrix::from_fn(3, 3, |r, c| basis[c][r]);
        assert!(v.determinant().abs() > 1e-3);
        // the z-coefficient of each plane through v_a, v_b stays in 0.9 of the box
        for a in 0..3 {
            for b in a + 1..3 {
                let n = basis[a].cross(&basis[b]);
                let (mx, my) = (-n[0] / n[2], -n[1] / n[2]);
                assert!(mx.abs() <= 0.27 + 1e-12 && my.abs() <= 0.27 + 1e-12);
            }
        }
    }

    #[test]
    fn verify_form_flags_the_four_ball() {
        let p4 = Body::pball(4.0, Matrix::identity(3, 3)).unwrap();
        let diag = Vector::from_element(3, 1.0 / 3f64.sqrt());
        let f = gauge_squared(&p4);
        assert_abs_diff_eq!((f(&diag) - 1.0).abs(), 1.0 - 1.0 / 3f64.sqrt(), epsilon = 1e-14);
    }
}
