use crate::linalg::{Matrix, Vector};

use super::lp::scaling_lp;
use super::BodyError;

const FACET_TOL: f64 = 1e-9;

/// Facet `{x : normal · x = 1}` with the indices of the vertices it contains.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vector,
    pub vertices: Vec<usize>,
}

/// Convex hull of a vertex list with the origin strictly inside.
///
/// Gauge evaluation solves the scaling linear program; facets are enumerated
/// once at construction and only used for support functionals.
#[derive(Debug, Clone)]
pub struct Polytope {
    vertices: Vec<Vector>,
    facets: Vec<Facet>,
}

impl Polytope {
    pub fn new(vertices: Vec<Vector>) -> Result<Self, BodyError> {
        let n = vertices.first().map(|v| v.len()).unwrap_or(0);
        if n == 0 {
            return Err(BodyError::Malformed("polytope needs vertices".into()));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != n) {
            return Err(BodyError::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        if vertices.iter().any(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(BodyError::Malformed("non-finite vertex coordinate".into()));
        }
        if vertices.len() <= n {
            return Err(BodyError::Malformed(format!(
                "{} vertices cannot surround the origin in R^{n}",
                vertices.len()
            )));
        }
        // the origin is interior iff the vertices positively span R^n
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut e = Vector::zeros(n);
                e[i] = sign;
                if scaling_lp(&vertices, &e).is_none() {
                    return Err(BodyError::Malformed("origin is not interior to the polytope".into()));
                }
            }
        }
        let facets = enumerate_facets(&vertices);
        if facets.is_empty() {
            return Err(BodyError::Malformed("no facets found".into()));
        }
        Ok(Self { vertices, facets })
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn gauge(&self, v: &Vector) -> f64 {
        scaling_lp(&self.vertices, v)
            .map(|s| s.value.max(0.0))
            .unwrap_or(f64::INFINITY)
    }

    /// Every facet whose functional attains the maximum at `v` (normal cone).
    pub fn active_facets(&self, v: &Vector) -> Vec<&Facet> {
        let values: Vec<f64> = self.facets.iter().map(|f| f.normal.dot(v)).collect();
        let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slack = FACET_TOL * top.abs().max(f64::MIN_POSITIVE);
        self.facets
            .iter()
            .zip(values)
            .filter(|(_, val)| *val >= top - slack)
            .map(|(f, _)| f)
            .collect()
    }

    /// The active facet with the lexicographically smallest vertex-index set.
    pub fn supporting_facet(&self, v: &Vector) -> &Facet {
        self.active_facets(v)
            .into_iter()
            .min_by(|a, b| a.vertices.cmp(&b.vertices))
            .expect("a bounded polytope has an active facet in every direction")
    }

    pub fn is_smooth_at(&self, v: &Vector) -> bool {
        self.active_facets(v).len() == 1
    }
}

/// Brute-force facet enumeration over `n`-subsets of vertices.
fn enumerate_facets(vertices: &[Vector]) -> Vec<Facet> {
    let n = vertices[0].len();
    let m = vertices.len();
    let mut facets: Vec<Facet> = Vec::new();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a = Matrix::from_fn(n, n, |r, c| vertices[idx[r]][c]);
        if let Some(normal) = a.lu().solve(&Vector::from_element(n, 1.0)) {
            if normal.iter().all(|c| c.is_finite()) {
                let values: Vec<f64> = vertices.iter().map(|v| normal.dot(v)).collect();
                if values.iter().all(|x| *x <= 1.0 + FACET_TOL) {
                    let active: Vec<usize> = (0..m).filter(|&i| (values[i] - 1.0).abs() <= FACET_TOL).collect();
                    if !facets.iter().any(|f| f.vertices == active) {
                        facets.push(Facet {
                            normal,
                            vertices: active,
                        });
                    }
                }
            }
        }
        // next combination in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return facets;
            }
            i -= 1;
            if idx[i] < m - n + i {
                break;
            }
            if i == 0 {
                return facets;
            }
        }
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
