//! Contracting subspaces: `X` is contracting with direction `Y` when the
//! projector onto `X` along `Y` does not increase the gauge, equivalently
//! `B ⊂ (B ∩ X) + Y`.

use thiserror::Error;

use crate::bodies::{boundary_point, random_directions, section_samples, sphere_directions, Body, BodyError};
use crate::linalg::{
    meet, principal_angles, sorted_svd, ChartRegion, LinalgError, Matrix, Projector, Subspace, Vector,
};

pub const DEFAULT_TOL: f64 = 1e-7;
/// Two directions are distinct when their largest principal angle exceeds this.
pub const DISTINCT_ANGLE: f64 = 1e-4;
/// Relative singular value below which smooth normals are treated as rank `k`.
pub const SEED_RANK_TOL: f64 = 1e-9;

const SAMPLE_SEED: u64 = 0xc0ff_ee11;
const CONTAINMENT_SEED: u64 = 0x5eed_0c1d;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContractingError {
    #[error(transparent)]
    Body(#[from] BodyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Outcome of testing one pair `(X, Y)`.
#[derive(Debug, Clone)]
pub struct ContractionCertificate {
    pub plane: Subspace,
    pub direction: Subspace,
    /// `max Φ(P v) − 1` over the tested boundary points `v`.
    pub violation: f64,
    /// Boundary point attaining the violation.
    pub witness: Vector,
    /// True when the test is the finite vertex test of a polytope.
    pub exact: bool,
}

impl ContractionCertificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.violation <= tol
    }
}

#[derive(Debug, Clone)]
pub struct ContractingOptions {
    pub tol: f64,
    /// Boundary directions for the sampled test.
    pub sample_points: usize,
    /// Sample maxima refined by local search.
    pub refine_top: usize,
    /// Multistart count of the direction search.
    pub starts: usize,
    pub max_iter: usize,
    /// Half-width of the coefficient box of the direction chart.
    pub search_half_width: f64,
    /// Boundary points used inside the direction search objective.
    pub search_points: usize,
    /// Section resolution for the smooth-normal seed.
    pub section_points: usize,
}

impl Default for ContractingOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            sample_points: 4096,
            refine_top: 8,
            starts: 64,
            max_iter: 200,
            search_half_width: 3.0,
            search_points: 128,
            section_points: 256,
        }
    }
}

/// `Φ(P d) / Φ(d) − 1`, with generatrix directions mapped to `−1` when `P`
/// kills them and to `+∞` otherwise.
fn ratio_violation(body: &Body, projector: &Projector, d: &Vector) -> f64 {
    let g = body.gauge(d);
    let gp = body.gauge(&projector.apply(d));
    let scale = d.norm();
    if g <= 1e-12 * scale {
        return if gp <= 1e-9 * scale { -1.0 } else { f64::INFINITY };
    }
    gp / g - 1.0
}

/// Orthonormal basis of `d^⊥` by Gram–Schmidt on the coordinate axes.
fn tangent_basis(d: &Vector) -> Vec<Vector> {
    let n = d.len();
    let skip = d.iamax();
    let mut basis: Vec<Vector> = Vec::with_capacity(n - 1);
    for i in (0..n).filter(|&i| i != skip) {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        e -= d * d[i];
        for b in &basis {
            let c = b.dot(&e);
            e -= b * c;
        }
        basis.push(e.normalize());
    }
    basis
}

/// Compass search for a local maximum of `f` on the unit sphere.
fn sphere_local_max(
    f: &dyn Fn(&Vector) -> f64,
    start: &Vector,
    step: f64,
    min_step: f64,
    max_iter: usize,
) -> (Vector, f64) {
    let mut d = start.normalize();
    let mut best = f(&d);
    let mut step = step;
    for _ in 0..max_iter {
        if step < min_step {
            break;
        }
        let tangent = tangent_basis(&d);
        let mut improved: Option<(Vector, f64)> = None;
        for t in &tangent {
            for sign in [1.0, -1.0] {
                let cand = (&d + t * (sign * step)).normalize();
                let val = f(&cand);
                if val > improved.as_ref().map_or(best, |(_, v)| *v) {
                    improved = Some((cand, val));
                }
            }
        }
        match improved {
            Some((cand, val)) => {
                d = cand;
                best = val;
            }
            None => step *= 0.5,
        }
    }
    (d, best)
}

/// Tests whether `X` is contracting with direction `Y`.
///
/// Polytopes (and linear images of polytopes) use the exact vertex test;
/// other bodies the maximum over a deterministic boundary sample refined from
/// the top sample points.
pub fn is_contracting(
    body: &Body,
    plane: &Subspace,
    direction: &Subspace,
    opts: &ContractingOptions,
) -> Result<ContractionCertificate, ContractingError> {
    let projector = Projector::new(plane, direction)?;
    let cert = |violation: f64, witness: Vector, exact: bool| ContractionCertificate {
        plane: plane.clone(),
        direction: direction.clone(),
        violation,
        witness,
        exact,
    };
    if let Some(vertices) = body.vertex_representation() {
        let (i, violation) = vertices
            .iter()
            .map(|v| body.gauge(&projector.apply(v)) - 1.0)
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, x)| if x > acc.1 { (i, x) } else { acc },
            );
        return Ok(cert(violation, vertices[i].clone(), true));
    }
    let n = body.dim();
    let f = |d: &Vector| ratio_violation(body, &projector, d);
    let mut scored: Vec<(f64, Vector)> = sphere_directions(n, opts.sample_points, SAMPLE_SEED)
        .into_iter()
        .map(|d| (f(&d), d))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let spacing = (4.0 / opts.sample_points.max(1) as f64).powf(1.0 / (n - 1).max(1) as f64);
    let (mut best_d, mut best) = (scored[0].1.clone(), scored[0].0);
    for (val, d) in scored.iter().take(opts.refine_top) {
        if !val.is_finite() {
            continue;
        }
        let (d, val) = sphere_local_max(&f, d, spacing, 1e-10, 200);
        if val > best {
            best = val;
            best_d = d;
        }
    }
    let witness = boundary_point(body, &best_d).unwrap_or(best_d);
    Ok(cert(best, witness, false))
}

/// Condition `B ⊂ (B ∩ X) + Y`, checked by decomposing sample points of `B`
/// as `x + y` and testing `x ∈ B`.
///
/// Uses its own sample (seeded random directions) and a direct linear
/// solve rather than the projector, so it is an independent check of
/// [`is_contracting`].
pub fn cylinder_contains(
    body: &Body,
    plane: &Subspace,
    direction: &Subspace,
    opts: &ContractingOptions,
) -> Result<bool, ContractingError> {
    Projector::new(plane, direction)?;
    let n = body.dim();
    let k = plane.dim();
    let mut stacked = Matrix::zeros(n, n);
    stacked.columns_mut(0, k).copy_from(plane.frame());
    stacked.columns_mut(k, n - k).copy_from(direction.frame());
    let lu = stacked.lu();
    let x_part = |v: &Vector| -> Vector {
        let coeffs = lu.solve(v).expect("complementary frames are invertible");
        plane.embed(&coeffs.rows(0, k).into_owned())
    };
    let tol = opts.tol;
    let vertices = body.vertex_representation();
    let exact = vertices.is_some();
    let points = vertices.unwrap_or_else(|| random_directions(n, opts.sample_points, CONTAINMENT_SEED));
    let excess = |v: &Vector| -> f64 {
        let g = body.gauge(v);
        let gx = body.gauge(&x_part(v));
        if g <= 1e-12 * v.norm() {
            return if gx <= 1e-9 * v.norm() { -1.0 } else { f64::INFINITY };
        }
        gx / g - 1.0
    };
    if exact {
        return Ok(points.iter().all(|v| excess(v) <= tol));
    }
    let mut scored: Vec<(f64, &Vector)> = points.iter().map(|v| (excess(v), v)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    if scored[0].0 > tol {
        return Ok(false);
    }
    let spacing = 0.1;
    for (_, v) in scored.iter().take(opts.refine_top) {
        let (_, val) = sphere_local_max(&excess, v, spacing, 1e-10, 200);
        if val > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Null space of the support functionals at smooth points of `∂(B ∩ X)`.
///
/// A contracting direction must lie in every such kernel, so when the
/// normals have rank `k` this is the only candidate.
#[derive(Debug, Clone)]
pub struct SmoothSeed {
    /// Candidate direction when the normals have rank exactly `k`.
    pub candidate: Option<Subspace>,
    /// `σ_{k+1} / σ_1` of the stacked smooth normals.
    pub defect: f64,
    pub smooth_points: usize,
}

pub fn smooth_seed(body: &Body, plane: &Subspace, m: usize) -> Result<SmoothSeed, ContractingError> {
    let n = body.dim();
    let k = plane.dim();
    let sample = section_samples(body, plane, m)?;
    let normals: Vec<&Vector> = sample
        .points
        .iter()
        .zip(&sample.normals)
        .filter(|(p, _)| body.is_smooth_at(p))
        .map(|(_, l)| l)
        .collect();
    if normals.len() < k {
        return Ok(SmoothSeed {
            candidate: None,
            defect: 0.0,
            smooth_points: normals.len(),
        });
    }
    let rows = Matrix::from_fn(normals.len().max(n), n, |r, c| normals.get(r).map_or(0.0, |l| l[c]));
    let svd = sorted_svd(&rows);
    let top = svd.sigma[0];
    let defect = if k < n { svd.sigma[k] / top } else { 0.0 };
    let candidate = if defect <= SEED_RANK_TOL {
        let null: Vec<Vector> = (k..n).map(|i| svd.v.column(i).into_owned()).collect();
        let y = Subspace::span(n, &null);
        (y.dim() == n - k && meet(&y, plane).dim() == 0).then_some(y)
    } else {
        None
    };
    Ok(SmoothSeed {
        candidate,
        defect,
        smooth_points: normals.len(),
    })
}

/// Result of [`find_contracting_direction`].
#[derive(Debug, Clone)]
pub struct DirectionSearch {
    /// Distinct certified directions (violation ≤ tol).
    pub directions: Vec<ContractionCertificate>,
    /// Certificate of the best direction found, certified or not.
    pub best: ContractionCertificate,
    /// The direction was forced by the smooth-normal seed.
    pub seeded: bool,
    pub seed_defect: f64,
}

impl DirectionSearch {
    pub fn direction(&self) -> Option<&Subspace> {
        self.directions.first().map(|c| &c.direction)
    }

    pub fn multiplicity(&self) -> usize {
        self.directions.len()
    }

    /// Smallest violation reached by the search.
    pub fn minimal_violation(&self) -> f64 {
        self.best.violation
    }
}

/// Convex objective `C ↦ max Φ(x(a − C b)) − 1` over a fixed point set,
/// where `a`, `b` are the coordinates of the points in `X` and `X^⊥`.
struct DirectionObjective<'a> {
    body: &'a Body,
    plane: &'a Subspace,
    a: Vec<Vector>,
    b: Vec<Vector>,
    scale: Vec<f64>,
}

impl<'a> DirectionObjective<'a> {
    fn new(body: &'a Body, plane: &'a Subspace, normal: &Subspace, points: &[Vector]) -> Self {
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut scale = Vec::new();
        for p in points {
            let g = body.gauge(p);
            if g > 1e-12 * p.norm() {
                a.push(plane.coords(p));
                b.push(normal.coords(p));
                scale.push(1.0 / g);
            }
        }
        Self {
            body,
            plane,
            a,
            b,
            scale,
        }
    }

    fn eval(&self, c: &Matrix) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .zip(&self.scale)
            .map(|((a, b), s)| self.body.gauge(&self.plane.embed(&(a - c * b))) * s - 1.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Compass search with coordinate and diagonal moves and step halving.
fn compass_min(
    f: &dyn Fn(&[f64]) -> f64,
    start: Vec<f64>,
    step: f64,
    min_step: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let d = start.len();
    let mut moves: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut m = vec![0.0; d];
            m[i] = s;
            moves.push(m);
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut m = vec![0.0; d];
                m[i] = si;
                m[j] = sj;
                moves.push(m);
            }
        }
    }
    let mut x = start;
    let mut fx = f(&x);
    let mut step = step;
    for _ in 0..max_iter {
        if step < min_step {
            break;
        }
        let mut improved: Option<(Vec<f64>, f64)> = None;
        for m in &moves {
            let cand: Vec<f64> = x.iter().zip(m).map(|(xi, mi)| xi + step * mi).collect();
            let val = f(&cand);
            if val < improved.as_ref().map_or(fx, |(_, v)| *v) {
                improved = Some((cand, val));
            }
        }
        match improved {
            Some((cand, val)) => {
                x = cand;
                fx = val;
            }
            None => step *= 0.5,
        }
    }
    (x, fx)
}

/// Searches for contracting directions of `X`.
///
/// A smooth-normal seed of full rank gives the unique candidate directly.
/// Otherwise a multistart compass search over graph coordinates of
/// `Gr_{n−k}` (centred at `X^⊥`) minimizes the violation, which is convex in
/// those coordinates; every distinct certified minimizer is returned.
pub fn find_contracting_direction(
    body: &Body,
    plane: &Subspace,
    opts: &ContractingOptions,
) -> Result<DirectionSearch, ContractingError> {
    let n = body.dim();
    let k = plane.dim();
    let seed = smooth_seed(body, plane, opts.section_points)?;
    if let Some(y) = &seed.candidate {
        let cert = is_contracting(body, plane, y, opts)?;
        let directions = if cert.holds(opts.tol) {
            vec![cert.clone()]
        } else {
            Vec::new()
        };
        return Ok(DirectionSearch {
            directions,
            best: cert,
            seeded: true,
            seed_defect: seed.defect,
        });
    }

    let normal = plane.complement();
    let chart = ChartRegion::new(normal.clone(), plane.clone(), vec![opts.search_half_width; k * (n - k)])?;
    let points: Vec<Vector> = match body.vertex_representation() {
        Some(vs) => vs,
        None => sphere_directions(n, opts.search_points, SAMPLE_SEED)
            .into_iter()
            .filter_map(|d| boundary_point(body, &d).ok())
            .collect(),
    };
    let objective = DirectionObjective::new(body, plane, &normal, &points);
    let f = |coeffs: &[f64]| objective.eval(&chart.coefficient_matrix(coeffs));
    let d = chart.chart_dim();
    let per_axis = (opts.starts as f64).powf(1.0 / d as f64).round().max(1.0) as usize;
    let starts = chart.grid(per_axis, opts.starts);
    let step = opts.search_half_width / per_axis as f64;

    use rayon::prelude::*;
    let mut minima: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .map(|s| compass_min(&f, s, step, 1e-4, opts.max_iter))
        .collect();
    minima.sort_by(|a, b| a.1.total_cmp(&b.1));

    // The sample objective never exceeds the full one, so a coarse minimum
    // above tol already rules out every direction; only the best start is then
    // polished (to report the minimal violation). Otherwise every distinct
    // start reaching tol is polished and certified.
    let exact = body.vertex_representation().is_some();
    let dense_objective;
    let polish: &dyn Fn(&[f64]) -> f64 = if exact {
        &f
    } else {
        let dense: Vec<Vector> = sphere_directions(n, 4 * opts.search_points, SAMPLE_SEED ^ 1)
            .into_iter()
            .filter_map(|d| boundary_point(body, &d).ok())
            .collect();
        dense_objective = DirectionObjective::new(body, plane, &normal, &dense);
        &|coeffs: &[f64]| dense_objective.eval(&chart.coefficient_matrix(coeffs))
    };
    let cutoff = minima[0].1.max(opts.tol);
    let mut candidates: Vec<Subspace> = Vec::new();
    for (coeffs, val) in &minima {
        if *val > cutoff || candidates.len() >= 8 {
            break;
        }
        let (coeffs, _) = compass_min(polish, coeffs.clone(), 1e-4, 1e-9, opts.max_iter);
        let y = chart.plane_unchecked(&coeffs);
        if !candidates.iter().any(|c| c.distance(&y) <= DISTINCT_ANGLE) {
            candidates.push(y);
        }
    }
    let mut directions = Vec::new();
    let mut best: Option<ContractionCertificate> = None;
    for y in candidates {
        let cert = is_contracting(body, plane, &y, opts)?;
        if cert.holds(opts.tol)
            && !directions
                .iter()
                .any(|c: &ContractionCertificate| c.direction.distance(&y) <= DISTINCT_ANGLE)
        {
            directions.push(cert.clone());
        }
        if best.as_ref().is_none_or(|b| cert.violation < b.violation) {
            best = Some(cert);
        }
    }
    Ok(DirectionSearch {
        directions,
        best: best.expect("at least one start"),
        seeded: false,
        seed_defect: seed.defect,
    })
}

/// Cylinder shared by several planes with a common contracting direction.
#[derive(Debug, Clone)]
pub struct SharedCylinder {
    /// `(B ∩ planes[0]) + Y`.
    pub cylinder: Body,
    /// Worst contraction violation over the planes.
    pub violation: f64,
    /// Worst radial mismatch between sections of the cylinder and of `B`.
    pub hausdorff: f64,
}

/// The cylinder `(B ∩ X₁) + Y` when every plane is contracting with
/// direction `Y` and its sections agree with those of `B` within `tol`.
pub fn shared_generatrix_cylinder(
    body: &Body,
    planes: &[Subspace],
    direction: &Subspace,
    opts: &ContractingOptions,
) -> Result<Option<SharedCylinder>, ContractingError> {
    let Some(first) = planes.first() else {
        return Ok(None);
    };
    let mut violation: f64 = f64::NEG_INFINITY;
    for plane in planes {
        let cert = is_contracting(body, plane, direction, opts)?;
        violation = violation.max(cert.violation);
        if !cert.holds(opts.tol) {
            return Ok(None);
        }
    }
    let cylinder = Body::cylinder(body.clone(), first.clone(), direction.clone())?;
    let mut hausdorff: f64 = 0.0;
    for plane in &planes[1..] {
        for c in crate::bodies::section_directions(plane.dim(), 64) {
            let d = plane.embed(&c);
            let p = boundary_point(body, &d)?;
            let q = boundary_point(&cylinder, &d)?;
            hausdorff = hausdorff.max((p - q).norm());
        }
    }
    if hausdorff > opts.tol.max(1e-9) {
        return Ok(None);
    }
    Ok(Some(SharedCylinder {
        cylinder,
        violation,
        hausdorff,
    }))
}

/// Largest principal angle between two directions.
pub fn direction_angle(a: &Subspace, b: &Subspace) -> f64 {
    principal_angles(a, b).into_iter().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadform::SymmetricForm;
    use approx::assert_abs_diff_eq;

    fn xy() -> Subspace {
        Subspace::span_of(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])
    }

    fn z() -> Subspace {
        Subspace::axis(3, 2)
    }

    #[test]
    fn box_is_a_cylinder_over_its_square() {
        let cube = Body::cube(3, 1.0);
        let opts = ContractingOptions::default();
        let c = is_contracting(&cube, &xy(), &z(), &opts).unwrap();
        assert!(c.exact);
        assert_abs_diff_eq!(c.violation, 0.0, epsilon = 1e-14);
        let tilted = Subspace::span_of(&[&[1.0, 0.0, 0.4], &[0.0, 1.0, 0.4]]);
        assert!(is_contracting(&cube, &tilted, &z(), &opts).unwrap().holds(0.0));
    }

    #[test]
    fn four_ball_tilted_plane_violates_along_z() {
        let p4 = Body::pball(4.0, Matrix::identity(3, 3)).unwrap();
        let plane = Subspace::span_of(&[&[1.0, 0.0, 0.3], &[0.0, 1.0, 0.0]]);
        let c = is_contracting(&p4, &plane, &z(), &ContractingOptions::default()).unwrap();
        let expected = (1.0f64 + 0.3f64.powi(4)).powf(0.25) - 1.0;
        assert_abs_diff_eq!(c.violation, expected, epsilon = 1e-9);
        assert!(c.witness[0].abs() > 0.999);
    }

    #[test]
    fn ellipsoid_direction_is_the_form_complement() {
        let e = Body::ellipsoid(SymmetricForm::diagonal(&[1.0, 2.0, 3.0])).unwrap();
        let s = find_contracting_direction(&e, &xy(), &ContractingOptions::default()).unwrap();
        assert!(s.seeded);
        assert_eq!(s.multiplicity(), 1);
        assert!(s.direction().unwrap().distance(&z()) < 1e-10);
    }

    #[test]
    fn box_direction_is_unique() {
        let s = find_contracting_direction(&Body::cube(3, 1.0), &xy(), &ContractingOptions::default()).unwrap();
        assert_eq!(s.multiplicity(), 1);
        assert!(s.direction().unwrap().distance(&z()) < 1e-10);
    }

    #[test]
    fn box_containment_fails_for_an_oblique_direction() {
        let y = Subspace::span_of(&[&[0.5, 0.0, 1.0]]);
        let opts = ContractingOptions::default();
        assert!(!cylinder_contains(&Body::cube(3, 1.0), &xy(), &y, &opts).unwrap());
        let c = is_contracting(&Body::cube(3, 1.0), &xy(), &y, &opts).unwrap();
        assert_abs_diff_eq!(c.violation, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn second_plane_of_an_ellipsoid_has_another_direction() {
        let e = Body::ellipsoid(SymmetricForm::diagonal(&[1.0, 2.0, 3.0])).unwrap();
        let tilted = Subspace::span_of(&[&[1.0, 0.0, 0.1], &[0.0, 1.0, 0.0]]);
        let r = shared_generatrix_cylinder(&e, &[xy(), tilted], &z(), &ContractingOptions::default()).unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn four_ball_generic_plane_has_no_direction() {
        let p4 = Body::pball(4.0, Matrix::identity(3, 3)).unwrap();
        let plane = Subspace::span_of(&[&[1.0, 0.0, 0.4], &[0.0, 1.0, 0.4]]);
        let s = find_contracting_direction(&p4, &plane, &ContractingOptions::default()).unwrap();
        assert!(s.direction().is_none());
        assert!(s.minimal_violation() > 1e-3);
        let spec_plane = Subspace::span_of(&[&[1.0, 0.0, 0.3], &[0.0, 1.0, 0.0]]);
        let s = find_contracting_direction(&p4, &spec_plane, &ContractingOptions::default()).unwrap();
        let y = s.direction().expect("the plane contains e2, so a direction exists");
        assert!(y.basis_vector(0)[1].abs() < 1e-8);
    }
}
