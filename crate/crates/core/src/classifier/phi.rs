//! The generatrix map of a 3-dimensional body: one contracting line per plane,
//! its injective/constant dichotomy, the projective dual fit and the
//! tangent linear field of a section.

use nalgebra::Matrix2;
use rayon::prelude::*;

use crate::bodies::{boundary_point, section_samples, Body, SectionSample};
use crate::contracting::{find_contracting_direction, ContractingOptions, DISTINCT_ANGLE};
use crate::linalg::{sorted_svd, ChartRegion, Matrix, Subspace, Vector};

use super::ClassifierError;

/// Largest line jump between nearest grid planes tolerated as continuous.
pub const CONTINUITY_ANGLE: f64 = 0.2;
/// Gate on the relative gap of the two smallest singular values of a dual fit.
pub const DUAL_GAP_TOL: f64 = 1e-6;
/// Tangent fields with a normalized residual above this are rejected.
pub const FIELD_RESIDUAL_TOL: f64 = 1e-6;
/// Tangent fields with a smallest singular value below this are degenerate.
pub const FIELD_MIN_SIGMA: f64 = 1e-3;

/// One plane of the generatrix sample with its contracting lines.
#[derive(Debug, Clone)]
pub struct PhiPair {
    pub coeffs: Vec<f64>,
    pub plane: Subspace,
    /// Best contracting line.
    pub line: Subspace,
    /// All distinct contracting lines found.
    pub lines: Vec<Subspace>,
    pub violation: f64,
}

impl PhiPair {
    pub fn multiplicity(&self) -> usize {
        self.lines.len()
    }
}

#[derive(Debug, Clone)]
pub struct PhiSample {
    pub pairs: Vec<PhiPair>,
    /// Largest line jump between nearest-neighbour planes of multiplicity one.
    pub max_jump: f64,
}

impl PhiSample {
    pub fn from_pairs(pairs: Vec<PhiPair>) -> Self {
        let mut max_jump: f64 = 0.0;
        for (i, a) in pairs.iter().enumerate() {
            let nearest = pairs
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .min_by(|(_, b), (_, c)| a.plane.distance(&b.plane).total_cmp(&a.plane.distance(&c.plane)));
            if let Some((_, b)) = nearest {
                if a.multiplicity() == 1 && b.multiplicity() == 1 {
                    max_jump = max_jump.max(a.line.distance(&b.line));
                }
            }
        }
        Self { pairs, max_jump }
    }

    pub fn is_continuous(&self) -> bool {
        self.max_jump <= CONTINUITY_ANGLE
    }
}

/// Runs the direction search on every grid plane of a 2-plane region in `R³`.
pub fn phi_map(
    body: &Body,
    region: &ChartRegion,
    per_axis: usize,
    max_planes: usize,
    opts: &ContractingOptions,
) -> Result<PhiSample, ClassifierError> {
    if body.dim() != 3 || region.plane_dim() != 2 {
        return Err(ClassifierError::InvalidRegion(
            "the generatrix map needs 2-planes in a 3-dimensional space".into(),
        ));
    }
    let grid = region.grid(per_axis, max_planes);
    let pairs: Vec<Result<PhiPair, ClassifierError>> = grid
        .into_par_iter()
        .map(|coeffs| {
            let plane = region.plane_unchecked(&coeffs);
            let search = find_contracting_direction(body, &plane, opts)?;
            match search.direction() {
                None => Err(ClassifierError::NoGeneratrix {
                    plane,
                    violation: search.minimal_violation(),
                }),
                Some(line) => Ok(PhiPair {
                    coeffs,
                    line: line.clone(),
                    lines: search.directions.iter().map(|c| c.direction.clone()).collect(),
                    violation: search.best.violation,
                    plane,
                }),
            }
        })
        .collect();
    Ok(PhiSample::from_pairs(pairs.into_iter().collect::<Result<_, _>>()?))
}

#[derive(Debug, Clone)]
pub enum Injectivity {
    /// Distinct planes have lines at least `min_separation` apart.
    Injective { min_separation: f64 },
    /// Every line is within the tolerance of `line` (or some plane has
    /// several lines).
    ConstantLine { line: Subspace, spread: f64 },
}

/// Sample line minimizing the summed distance to all others.
pub fn medoid_line(lines: &[&Subspace]) -> Option<Subspace> {
    lines
        .iter()
        .map(|c| (lines.iter().map(|l| c.distance(l)).sum::<f64>(), *c))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, l)| l.clone())
}

/// Decides whether the generatrix map is constant or injective at the grid scale.
pub fn injectivity_test(sample: &PhiSample, tol_angle: f64) -> Result<Injectivity, ClassifierError> {
    let lines: Vec<&Subspace> = sample.pairs.iter().map(|p| &p.line).collect();
    let medoid = medoid_line(&lines).ok_or(ClassifierError::EmptySample)?;
    let spread = lines.iter().map(|l| l.distance(&medoid)).fold(0.0, f64::max);
    if spread <= tol_angle || sample.pairs.iter().any(|p| p.multiplicity() >= 2) {
        return Ok(Injectivity::ConstantLine { line: medoid, spread });
    }
    let mut separation = f64::INFINITY;
    for (i, a) in sample.pairs.iter().enumerate() {
        for b in &sample.pairs[i + 1..] {
            if a.plane.distance(&b.plane) > DISTINCT_ANGLE {
                separation = separation.min(a.line.distance(&b.line));
            }
        }
    }
    if separation > tol_angle {
        Ok(Injectivity::Injective {
            min_separation: separation,
        })
    } else {
        Err(ClassifierError::Ambiguous { spread, separation })
    }
}

/// Linear map `V → V*` whose kernels give the supporting planes, up to scale.
#[derive(Debug, Clone)]
pub struct ProjectiveDual {
    /// Unit Frobenius norm, sign fixed so that `pᵀFp > 0` on the sample.
    pub map: Matrix,
    /// Largest normalized incidence defect `|⟨F p, t⟩| / (|p| |t|)`.
    pub fit_residual: f64,
}

/// Fits the projective dual from the incidences `⟨F p, t⟩ = 0`, where `p` runs
/// over section boundary points and `t` over the section tangent at `p` and
/// the plane's contracting line.
pub fn fit_projective_dual(
    body: &Body,
    sample: &PhiSample,
    points_per_plane: usize,
) -> Result<ProjectiveDual, ClassifierError> {
    if let Injectivity::ConstantLine { .. } = injectivity_test(sample, DISTINCT_ANGLE)? {
        return Err(ClassifierError::NotInjective);
    }
    let n = body.dim();
    let mut incidences: Vec<(Vector, Vector)> = Vec::new();
    for pair in &sample.pairs {
        let section = section_samples(body, &pair.plane, points_per_plane)?;
        let d = pair.line.basis_vector(0);
        for (p, l) in section.points.iter().zip(&section.functionals) {
            if !body.is_smooth_at(p) {
                continue;
            }
            let tangent = pair.plane.embed(&Vector::from_column_slice(&[-l[1], l[0]]));
            incidences.push((p.clone(), tangent));
            incidences.push((p.clone(), d.clone()));
        }
    }
    let rows = Matrix::from_fn(incidences.len().max(n * n), n * n, |r, c| {
        incidences.get(r).map_or(0.0, |(p, t)| {
            let (i, j) = (c / n, c % n);
            t[i] * p[j] / (p.norm() * t.norm())
        })
    });
    let svd = sorted_svd(&rows);
    let last = n * n - 1;
    let gap = (svd.sigma[last - 1] - svd.sigma[last]) / svd.sigma[0];
    if gap <= DUAL_GAP_TOL {
        return Err(ClassifierError::DegenerateFit { gap });
    }
    let row = svd.v.column(last);
    let mut map = Matrix::from_fn(n, n, |i, j| row[i * n + j]);
    map /= map.norm();
    let orientation: f64 = incidences.iter().map(|(p, _)| p.dot(&(&map * p))).sum();
    if orientation < 0.0 {
        map = -map;
    }
    if map.determinant().abs() < 1e-8 {
        return Err(ClassifierError::DegenerateFit { gap });
    }
    let fit_residual = incidences
        .iter()
        .map(|(p, t)| t.dot(&(&map * p)).abs() / (p.norm() * t.norm()))
        .fold(0.0, f64::max);
    Ok(ProjectiveDual { map, fit_residual })
}

/// Convex minimization of the gauge over the affine plane `p + span(frame)`.
fn min_gauge_on_affine(body: &Body, p: &Vector, frame: &Matrix) -> f64 {
    let d = frame.ncols();
    let f = |c: &[f64]| body.gauge(&(p + frame * Vector::from_column_slice(c)));
    let mut x = vec![0.0; d];
    let mut fx = f(&x);
    let mut step = 0.5 * p.norm().max(1e-3);
    for _ in 0..2000 {
        if step < 1e-13 * p.norm().max(1e-3) {
            break;
        }
        let mut moved = false;
        for i in 0..d {
            for s in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[i] += s * step;
                let val = f(&cand);
                if val < fx {
                    x = cand;
                    fx = val;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    fx
}

/// How far the planes `p + ker F(p)` cut into the body, over `m` boundary
/// points of the region: `max(0, 1 − min_q Φ(q))`.
pub fn support_check(body: &Body, dual: &ProjectiveDual, region: &ChartRegion, m: usize) -> f64 {
    region
        .sample_points(m, 0x5a11)
        .par_iter()
        .filter_map(|d| boundary_point(body, d).ok())
        .map(|p| {
            let normal = &dual.map * &p;
            if normal.norm() == 0.0 {
                return 1.0;
            }
            let kernel = Subspace::span(p.len(), &[normal]).complement();
            (1.0 - min_gauge_on_affine(body, &p, kernel.frame())).max(0.0)
        })
        .reduce(|| 0.0, f64::max)
}

/// Linear vector field on the plane of a section tangent to its boundary.
#[derive(Debug, Clone)]
pub struct TangentField {
    /// Unit Frobenius norm, in the frame coordinates of the plane.
    pub field: Matrix2<f64>,
    /// RMS of `ℓᵢ(W pᵢ)` over the sample (`ℓᵢ(pᵢ) = 1`).
    pub residual: f64,
    pub min_singular_value: f64,
}

impl TangentField {
    pub fn is_accepted(&self) -> bool {
        self.residual <= FIELD_RESIDUAL_TOL && self.min_singular_value >= FIELD_MIN_SIGMA
    }
}

/// Least-squares tangent field `min Σ ℓᵢ(W pᵢ)²` over `‖W‖_F = 1`.
///
/// The residual is the unconstrained minimum, a lower bound for every
/// nondegenerate field.
pub fn fit_tangent_field(section: &SectionSample) -> Option<TangentField> {
    if section.plane.dim() != 2 || section.coords.len() < 16 {
        return None;
    }
    let m = section.coords.len();
    let rows = Matrix::from_fn(m, 4, |r, c| {
        let (a, b) = (c / 2, c % 2);
        section.functionals[r][a] * section.coords[r][b]
    });
    let svd = sorted_svd(&rows);
    let v = svd.v.column(3);
    let w = Matrix2::new(v[0], v[1], v[2], v[3]);
    let residual = svd.sigma[3] / (m as f64).sqrt();
    let sv = w.singular_values();
    Some(TangentField {
        field: w,
        residual,
        min_singular_value: sv.min(),
    })
}

/// The accepted tangent field of a section, if any.
pub fn tangent_linear_field(section: &SectionSample) -> Option<Matrix2<f64>> {
    fit_tangent_field(section)
        .filter(TangentField::is_accepted)
        .map(|t| t.field)
}

/// Smallest singular value of unit direction vectors stacked as rows.
pub fn coplanarity_defect(lines: &[&Subspace]) -> f64 {
    let n = lines.first().map_or(0, |l| l.ambient_dim());
    let rows = Matrix::from_fn(lines.len(), n, |r, c| lines[r].basis_vector(0)[c]);
    rows.singular_values().min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadform::SymmetricForm;

    fn xy() -> Subspace {
        Subspace::span_of(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])
    }

    #[test]
    fn unit_disk_field_is_a_rotation() {
        let s = section_samples(&Body::unit_ball(3), &xy(), 64).unwrap();
        let w = tangent_linear_field(&s).unwrap();
        assert!((w[(0, 0)]).abs() < 1e-12 && (w[(1, 1)]).abs() < 1e-12);
        assert!((w[(0, 1)] + w[(1, 0)]).abs() < 1e-12);
    }

    #[test]
    fn square_has_no_field() {
        let s = section_samples(&Body::cube(3, 1.0), &xy(), 256).unwrap();
        let fit = fit_tangent_field(&s).unwrap();
        assert!(fit.residual > 0.3);
        assert!(tangent_linear_field(&s).is_none());
    }

    #[test]
    fn ellipsoid_dual_is_its_form() {
        let q = SymmetricForm::new(Matrix::from_row_slice(
            3,
            3,
            &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5],
        ));
        let e = Body::ellipsoid(q.clone()).unwrap();
        let region = ChartRegion::uniform(xy(), 0.3).unwrap();
        let sample = phi_map(&e, &region, 5, 25, &ContractingOptions::default()).unwrap();
        assert!(matches!(
            injectivity_test(&sample, 1e-4).unwrap(),
            Injectivity::Injective { .. }
        ));
        let dual = fit_projective_dual(&e, &sample, 16).unwrap();
        let qn = q.matrix() / q.matrix().norm();
        assert!((&dual.map - qn).norm() < 1e-8);
        assert!(support_check(&e, &dual, &region, 64) <= 1e-9);
    }

    #[test]
    fn constant_line_guard() {
        let cube = Body::cube(3, 1.0);
        let region = ChartRegion::uniform(xy(), 0.2).unwrap();
        let sample = phi_map(&cube, &region, 3, 9, &ContractingOptions::default()).unwrap();
        match injectivity_test(&sample, 1e-4).unwrap() {
            Injectivity::ConstantLine { line, .. } => assert!(line.distance(&Subspace::axis(3, 2)) < 1e-10),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            fit_projective_dual(&cube, &sample, 16),
            Err(ClassifierError::NotInjective)
        ));
    }
}
