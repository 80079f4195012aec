//! Convex bodies with the origin in the interior, given by their gauge
//! (Minkowski functional) `Φ(x) = inf{λ > 0 : x/λ ∈ B}`.
//!
//! Bodies need not be symmetric. Cylinders are unbounded; their gauge is a
//! seminorm vanishing on the generatrix.

mod lp;
mod polytope;
mod sampling;

pub use polytope::{Facet, Polytope};
pub use sampling::{circle_directions, random_directions, sphere_directions};

use thiserror::Error;

use crate::linalg::{join, meet, sorted_svd, LinalgError, Matrix, Projector, Subspace, Vector};
use crate::quadform::SymmetricForm;

/// Boundary tolerance accepted by [`support_functional`].
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Largest member count of an [`Body::Intersection`].
pub const MAX_INTERSECTION_MEMBERS: usize = 16;
/// Default section resolution.
pub const DEFAULT_SECTION_POINTS: usize = 256;

const SMOOTH_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BodyError {
    #[error("malformed body: {0}")]
    Malformed(String),
    #[error("direction lies in the generatrix (gauge vanishes)")]
    DirectionInGeneratrix,
    #[error("point is not on the boundary (gauge {gauge})")]
    NotOnBoundary { gauge: f64 },
    #[error("section is unbounded: the gauge vanishes on a nonzero vector of the plane")]
    UnboundedSection,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `{v : vᵀQv ≤ 1}` for positive definite `Q`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    form: SymmetricForm,
    matrix: Matrix,
}

impl Ellipsoid {
    pub fn form(&self) -> &SymmetricForm {
        &self.form
    }
}

/// `{v : ‖A⁻¹v‖_p ≤ 1}`.
#[derive(Debug, Clone)]
pub struct PBall {
    p: f64,
    map: Matrix,
    inverse: Matrix,
}

impl PBall {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn map(&self) -> &Matrix {
        &self.map
    }
}

/// `(B_base ∩ X) + Y`; the gauge is `Φ_base(pr^Y_X v)`.
#[derive(Debug, Clone)]
pub struct Cylinder {
    base: Box<Body>,
    plane: Subspace,
    generatrix: Subspace,
    projector: Projector,
}

impl Cylinder {
    pub fn base(&self) -> &Body {
        &self.base
    }

    pub fn plane(&self) -> &Subspace {
        &self.plane
    }

    pub fn generatrix(&self) -> &Subspace {
        &self.generatrix
    }
}

/// `A · inner`.
#[derive(Debug, Clone)]
pub struct LinearImage {
    map: Matrix,
    inverse: Matrix,
    inner: Box<Body>,
}

impl LinearImage {
    pub fn map(&self) -> &Matrix {
        &self.map
    }

    pub fn inner(&self) -> &Body {
        &self.inner
    }
}

/// Intersection of at most [`MAX_INTERSECTION_MEMBERS`] bodies.
#[derive(Debug, Clone)]
pub struct Intersection {
    members: Vec<Body>,
}

impl Intersection {
    pub fn members(&self) -> &[Body] {
        &self.members
    }
}

/// Section `inner ∩ W` in the frame coordinates of `W`.
#[derive(Debug, Clone)]
pub struct Restriction {
    inner: Box<Body>,
    frame: Subspace,
}

impl Restriction {
    pub fn inner(&self) -> &Body {
        &self.inner
    }

    pub fn frame(&self) -> &Subspace {
        &self.frame
    }
}

#[derive(Debug, Clone)]
pub enum Body {
    Ellipsoid(Ellipsoid),
    Polytope(Polytope),
    PBall(PBall),
    Cylinder(Cylinder),
    LinearImage(LinearImage),
    Intersection(Intersection),
    Restriction(Restriction),
}

fn invert(a: &Matrix, what: &str) -> Result<Matrix, BodyError> {
    if !a.is_square() {
        return Err(BodyError::Malformed(format!("{what} must be square")));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(BodyError::Malformed(format!("{what} has non-finite entries")));
    }
    let sigma = sorted_svd(a).sigma;
    let smax = sigma[0];
    let smin = sigma[sigma.len() - 1];
    if smin <= 1e-12 * smax || smax == 0.0 {
        return Err(BodyError::Malformed(format!("{what} is not invertible")));
    }
    a.clone()
        .try_inverse()
        .ok_or_else(|| BodyError::Malformed(format!("{what} is not invertible")))
}

fn check_dim(expected: usize, got: usize) -> Result<(), BodyError> {
    if expected != got {
        return Err(BodyError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Scaled `ℓ_p` norm, safe against overflow.
fn p_norm(w: &Vector, p: f64) -> f64 {
    let top = w.amax();
    if top == 0.0 {
        return 0.0;
    }
    let s: f64 = if p.fract() == 0.0 && p <= 64.0 {
        let e = p as i32;
        w.iter().map(|x| (x.abs() / top).powi(e)).sum()
    } else {
        w.iter().map(|x| (x.abs() / top).powf(p)).sum()
    };
    top * s.powf(1.0 / p)
}

impl Body {
    pub fn ellipsoid(form: SymmetricForm) -> Result<Self, BodyError> {
        let matrix = form.matrix();
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(BodyError::Malformed("ellipsoid form has non-finite entries".into()));
        }
        if !form.is_positive_definite() {
            return Err(BodyError::Malformed("ellipsoid form must be positive definite".into()));
        }
        Ok(Body::Ellipsoid(Ellipsoid { form, matrix }))
    }

    /// The Euclidean unit ball of `R^n`.
    pub fn unit_ball(n: usize) -> Self {
        Body::ellipsoid(SymmetricForm::identity(n)).expect("identity is positive definite")
    }

    pub fn polytope(vertices: Vec<Vector>) -> Result<Self, BodyError> {
        Ok(Body::Polytope(Polytope::new(vertices)?))
    }

    /// The cube `[-h, h]^n`.
    pub fn cube(n: usize, half: f64) -> Self {
        let vertices = (0..1usize << n)
            .map(|s| Vector::from_fn(n, |i, _| if s >> i & 1 == 0 { half } else { -half }))
            .collect();
        Body::polytope(vertices).expect("cube is well formed")
    }

    pub fn pball(p: f64, map: Matrix) -> Result<Self, BodyError> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(BodyError::Malformed(format!("p must be a finite real ≥ 1, got {p}")));
        }
        let inverse = invert(&map, "p-ball map")?;
        Ok(Body::PBall(PBall { p, map, inverse }))
    }

    pub fn cylinder(base: Body, plane: Subspace, generatrix: Subspace) -> Result<Self, BodyError> {
        check_dim(base.dim(), plane.ambient_dim())?;
        check_dim(base.dim(), generatrix.ambient_dim())?;
        let projector = Projector::new(&plane, &generatrix)?;
        if meet(&base.kernel(), &plane).dim() > 0 {
            return Err(BodyError::Malformed(
                "cylinder base must have a compact section in its plane".into(),
            ));
        }
        Ok(Body::Cylinder(Cylinder {
            base: Box::new(base),
            plane,
            generatrix,
            projector,
        }))
    }

    pub fn linear_image(map: Matrix, inner: Body) -> Result<Self, BodyError> {
        check_dim(inner.dim(), map.nrows())?;
        let inverse = invert(&map, "linear image map")?;
        Ok(Body::LinearImage(LinearImage {
            map,
            inverse,
            inner: Box::new(inner),
        }))
    }

    pub fn intersection(members: Vec<Body>) -> Result<Self, BodyError> {
        if members.is_empty() || members.len() > MAX_INTERSECTION_MEMBERS {
            return Err(BodyError::Malformed(format!(
                "intersection needs 1..={MAX_INTERSECTION_MEMBERS} members, got {}",
                members.len()
            )));
        }
        let n = members[0].dim();
        for m in &members {
            check_dim(n, m.dim())?;
        }
        Ok(Body::Intersection(Intersection { members }))
    }

    pub fn restriction(inner: Body, frame: Subspace) -> Result<Self, BodyError> {
        check_dim(inner.dim(), frame.ambient_dim())?;
        if frame.dim() == 0 {
            return Err(BodyError::Malformed("restriction to the zero subspace".into()));
        }
        Ok(Body::Restriction(Restriction {
            inner: Box::new(inner),
            frame,
        }))
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            Body::Ellipsoid(e) => e.matrix.nrows(),
            Body::Polytope(p) => p.dim(),
            Body::PBall(b) => b.map.nrows(),
            Body::Cylinder(c) => c.plane.ambient_dim(),
            Body::LinearImage(l) => l.map.nrows(),
            Body::Intersection(i) => i.members[0].dim(),
            Body::Restriction(r) => r.frame.dim(),
        }
    }

    /// The gauge `Φ(v)`.
    ///
    /// # Panics
    /// If `v` does not have the body's dimension.
    pub fn gauge(&self, v: &Vector) -> f64 {
        assert_eq!(v.len(), self.dim(), "vector dimension must match the body");
        match self {
            Body::Ellipsoid(e) => v.dot(&(&e.matrix * v)).max(0.0).sqrt(),
            Body::Polytope(p) => p.gauge(v),
            Body::PBall(b) => p_norm(&(&b.inverse * v), b.p),
            Body::Cylinder(c) => c.base.gauge(&c.projector.apply(v)),
            Body::LinearImage(l) => l.inner.gauge(&(&l.inverse * v)),
            Body::Intersection(i) => i.members.iter().map(|m| m.gauge(v)).fold(0.0, f64::max),
            Body::Restriction(r) => r.inner.gauge(&r.frame.embed(v)),
        }
    }

    /// Subspace on which the gauge vanishes (lineality space of the body).
    pub fn kernel(&self) -> Subspace {
        let n = self.dim();
        match self {
            Body::Ellipsoid(_) | Body::Polytope(_) | Body::PBall(_) => Subspace::zero(n),
            Body::Cylinder(c) => join(&meet(&c.base.kernel(), &c.plane), &c.generatrix),
            Body::LinearImage(l) => Subspace::from_columns(&(&l.map * l.inner.kernel().frame())),
            Body::Intersection(i) => i
                .members
                .iter()
                .map(Body::kernel)
                .reduce(|a, b| meet(&a, &b))
                .unwrap_or_else(|| Subspace::zero(n)),
            Body::Restriction(r) => {
                let k = meet(&r.inner.kernel(), &r.frame);
                Subspace::from_columns(&r.frame.frame().tr_mul(k.frame()))
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.kernel().dim() == 0
    }

    /// Vertex list when the body is a polytope up to a linear map.
    pub fn vertex_representation(&self) -> Option<Vec<Vector>> {
        match self {
            Body::Polytope(p) => Some(p.vertices().to_vec()),
            Body::LinearImage(l) => l
                .inner
                .vertex_representation()
                .map(|vs| vs.iter().map(|v| &l.map * v).collect()),
            _ => None,
        }
    }

    /// A subgradient of the gauge at `v` (`ℓ(v) = Φ(v)`, `ℓ ≤ Φ`), or `None`
    /// where the gauge vanishes.
    pub fn gauge_gradient(&self, v: &Vector) -> Option<Vector> {
        let g = self.gauge(v);
        if !(g > 0.0) || !g.is_finite() {
            return None;
        }
        match self {
            Body::Ellipsoid(e) => Some(&e.matrix * v / g),
            Body::Polytope(p) => Some(p.supporting_facet(&(v / g)).normal.clone()),
            Body::PBall(b) => {
                let w = &b.inverse * v;
                let norm = p_norm(&w, b.p);
                let grad_w = w.map(|x| {
                    if x == 0.0 {
                        0.0
                    } else {
                        x.signum() * (x.abs() / norm).powf(b.p - 1.0)
                    }
                });
                Some(b.inverse.tr_mul(&grad_w))
            }
            Body::Cylinder(c) => {
                let inner = c.base.gauge_gradient(&c.projector.apply(v))?;
                Some(c.projector.matrix().tr_mul(&inner))
            }
            Body::LinearImage(l) => {
                let inner = l.inner.gauge_gradient(&(&l.inverse * v))?;
                Some(l.inverse.tr_mul(&inner))
            }
            Body::Intersection(i) => i
                .members
                .iter()
                .find(|m| m.gauge(v) >= g)
                .and_then(|m| m.gauge_gradient(v)),
            Body::Restriction(r) => {
                let inner = r.inner.gauge_gradient(&r.frame.embed(v))?;
                Some(r.frame.coords(&inner))
            }
        }
    }

    /// Whether the supporting hyperplane at the boundary point on the ray of
    /// `v` is known to be unique. Conservative: `false` may be returned at
    /// smooth points of composite bodies.
    pub fn is_smooth_at(&self, v: &Vector) -> bool {
        let g = self.gauge(v);
        if !(g > 0.0) || !g.is_finite() {
            return false;
        }
        match self {
            Body::Ellipsoid(_) => true,
            Body::Polytope(p) => p.is_smooth_at(&(v / g)),
            Body::PBall(b) => {
                if b.p > 1.0 {
                    return true;
                }
                let w = &b.inverse * v;
                let top = w.amax();
                w.iter().all(|x| x.abs() > 1e-12 * top)
            }
            Body::Cylinder(c) => c.base.is_smooth_at(&c.projector.apply(v)),
            Body::LinearImage(l) => l.inner.is_smooth_at(&(&l.inverse * v)),
            Body::Intersection(i) => {
                let gauges: Vec<f64> = i.members.iter().map(|m| m.gauge(v)).collect();
                let active: Vec<usize> = (0..gauges.len())
                    .filter(|&j| gauges[j] >= g * (1.0 - SMOOTH_GAP))
                    .collect();
                active.len() == 1 && i.members[active[0]].is_smooth_at(v)
            }
            Body::Restriction(r) => r.inner.is_smooth_at(&r.frame.embed(v)),
        }
    }
}

/// `direction / Φ(direction)`.
pub fn boundary_point(body: &Body, direction: &Vector) -> Result<Vector, BodyError> {
    check_dim(body.dim(), direction.len())?;
    let g = body.gauge(direction);
    let norm = direction.norm();
    if norm == 0.0 || !(g > 1e-12 * norm) || !g.is_finite() {
        return Err(BodyError::DirectionInGeneratrix);
    }
    Ok(direction / g)
}

/// Supporting functional `ℓ` at a boundary point `p`: `ℓ(p) = 1`, `ℓ ≤ 1` on the body.
///
/// Polytopes return the active facet with the lexicographically smallest
/// vertex-index set; [`Polytope::active_facets`] gives the whole normal cone.
pub fn support_functional(body: &Body, p: &Vector) -> Result<Vector, BodyError> {
    check_dim(body.dim(), p.len())?;
    let g = body.gauge(p);
    if !((g - 1.0).abs() <= BOUNDARY_TOL) {
        return Err(BodyError::NotOnBoundary { gauge: g });
    }
    let grad = body.gauge_gradient(p).ok_or(BodyError::NotOnBoundary { gauge: g })?;
    let at_p = grad.dot(p);
    Ok(grad / at_p)
}

/// Central differences with one Richardson step, `h` defaulting to `1e-6`.
///
/// Accurate to about `1e-8` where the gauge is `C²`.
pub fn finite_difference_gradient(body: &Body, v: &Vector, h: f64) -> Vector {
    let n = v.len();
    let central = |step: f64| -> Vector {
        Vector::from_fn(n, |i, _| {
            let mut plus = v.clone();
            let mut minus = v.clone();
            plus[i] += step;
            minus[i] -= step;
            (body.gauge(&plus) - body.gauge(&minus)) / (2.0 * step)
        })
    };
    let coarse = central(h);
    let fine = central(h / 2.0);
    (fine * 4.0 - coarse) / 3.0
}

/// Boundary points of `B ∩ X` with in-plane support covectors.
#[derive(Debug, Clone)]
pub struct SectionSample {
    pub plane: Subspace,
    /// Frame coordinates of the boundary points.
    pub coords: Vec<Vector>,
    /// The same points in ambient coordinates.
    pub points: Vec<Vector>,
    /// In-plane support covectors in frame coordinates (`ℓ(p) = 1`).
    pub functionals: Vec<Vector>,
    /// Ambient support functionals the in-plane covectors restrict.
    pub normals: Vec<Vector>,
}

impl SectionSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Frame-coordinate directions used to sample a `k`-dimensional section.
pub fn section_directions(k: usize, m: usize) -> Vec<Vector> {
    match k {
        1 => (0..m.max(2))
            .map(|i| Vector::from_element(1, if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect(),
        2 => circle_directions(m),
        _ => sphere_directions(k, m, 0x5ec7),
    }
}

/// `m` boundary points of `B ∩ X` at quasi-uniform angles in the frame of `X`.
pub fn section_samples(body: &Body, plane: &Subspace, m: usize) -> Result<SectionSample, BodyError> {
    check_dim(body.dim(), plane.ambient_dim())?;
    if meet(&body.kernel(), plane).dim() > 0 {
        return Err(BodyError::UnboundedSection);
    }
    let mut sample = SectionSample {
        plane: plane.clone(),
        coords: Vec::with_capacity(m),
        points: Vec::with_capacity(m),
        functionals: Vec::with_capacity(m),
        normals: Vec::with_capacity(m),
    };
    for c in section_directions(plane.dim(), m) {
        let direction = plane.embed(&c);
        let p = boundary_point(body, &direction).map_err(|_| BodyError::UnboundedSection)?;
        let g = body.gauge(&p);
        let normal = body.gauge_gradient(&p).ok_or(BodyError::UnboundedSection)?;
        let normal = &normal / normal.dot(&p) * g;
        sample.functionals.push(plane.coords(&normal));
        sample.coords.push(plane.coords(&p));
        sample.points.push(p);
        sample.normals.push(normal);
    }
    Ok(sample)
}
