//! Trace-free tensors `R : X* → Hom(X, X)` on a plane, the quadratic field
//! they induce and tangency checks against a section.

use crate::bodies::{boundary_point, circle_directions, Body};
use crate::linalg::{Matrix, Subspace, Vector};

use super::BanachError;

const TRACE_TOL: f64 = 1e-12;

/// `R_ij = R(e_i*)(e_j)` in the frame coordinates of a `k`-plane, plus an
/// optional transversal vector `ν` (ambient coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct RTensor {
    k: usize,
    /// Row-major `k × k` array of vectors of length `k`.
    entries: Vec<Vector>,
    nu: Option<Vector>,
}

impl RTensor {
    /// From the entries `R_ij` (row-major); rejects tensors that are not trace-free.
    pub fn new(k: usize, entries: Vec<Vector>, nu: Option<Vector>) -> Result<Self, BanachError> {
        if !(k == 2 || k == 3) {
            return Err(BanachError::InvalidTensor(format!("k must be 2 or 3, got {k}")));
        }
        if entries.len() != k * k || entries.iter().any(|e| e.len() != k) {
            return Err(BanachError::InvalidTensor(format!(
                "expected {k}×{k} entries of length {k}"
            )));
        }
        let scale = entries.iter().map(|e| e.amax()).fold(1.0, f64::max);
        for i in 0..k {
            let trace: f64 = (0..k).map(|j| entries[i * k + j][j]).sum();
            if trace.abs() > TRACE_TOL * scale {
                return Err(BanachError::InvalidTensor(format!(
                    "R(e_{}*) has trace {trace:e}; the tensor must be trace-free",
                    i + 1
                )));
            }
        }
        Ok(Self { k, entries, nu })
    }

    /// From the matrices `R(e_i*)`; column `j` of the `i`-th matrix is `R_ij`.
    pub fn from_maps(maps: &[Matrix], nu: Option<Vector>) -> Result<Self, BanachError> {
        let k = maps.len();
        let mut entries = Vec::with_capacity(k * k);
        for m in maps {
            if m.nrows() != k || m.ncols() != k {
                return Err(BanachError::InvalidTensor("maps must be k × k".into()));
            }
            for j in 0..k {
                entries.push(m.column(j).into_owned());
            }
        }
        Self::new(k, entries, nu)
    }

    pub fn zero(k: usize) -> Self {
        Self::new(k, vec![Vector::zeros(k); k * k], None).expect("zero is trace-free")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn nu(&self) -> Option<&Vector> {
        self.nu.as_ref()
    }

    /// `R_ij` with zero-based indices.
    pub fn entry(&self, i: usize, j: usize) -> &Vector {
        &self.entries[i * self.k + j]
    }

    /// The map `R_λ = Σ λ_i R(e_i*)`.
    pub fn apply(&self, lambda: &Vector) -> Matrix {
        let k = self.k;
        Matrix::from_fn(k, k, |r, j| (0..k).map(|i| lambda[i] * self.entry(i, j)[r]).sum())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.iter().all(|x| *x == 0.0))
    }
}

/// `W(x, y) = xy(R₁₁ − R₂₂) − x² R₂₁ + y² R₁₂` for a planar tensor.
pub fn quadratic_field(r: &RTensor, p: &Vector) -> Vector {
    assert_eq!(r.k(), 2, "the quadratic field is defined for planar tensors");
    let (x, y) = (p[0], p[1]);
    (r.entry(0, 0) - r.entry(1, 1)) * (x * y) - r.entry(1, 0) * (x * x) + r.entry(0, 1) * (y * y)
}

/// Coefficients `(c_xx, c_xy, c_yy)` of the quadratic field.
pub fn field_coefficients(r: &RTensor) -> [Vector; 3] {
    [
        -r.entry(1, 0).clone(),
        r.entry(0, 0) - r.entry(1, 1),
        r.entry(0, 1).clone(),
    ]
}

/// The unique trace-free planar tensor with the given field coefficients.
///
/// Trace-freeness fixes the diagonal entries from `c_xy`; the map from
/// tensors to fields is therefore a bijection of 6-dimensional spaces.
pub fn tensor_from_field(coeffs: &[Vector; 3]) -> RTensor {
    let [cxx, cxy, cyy] = coeffs;
    let r21 = -cxx.clone();
    let r12 = cyy.clone();
    // (R11)_1 = −(R12)_2, (R22)_2 = −(R21)_1 and R11 − R22 = c_xy
    let r11_1 = -r12[1];
    let r22_2 = -r21[0];
    let r22_1 = r11_1 - cxy[0];
    let r11_2 = r22_2 + cxy[1];
    let r11 = Vector::from_column_slice(&[r11_1, r11_2]);
    let r22 = Vector::from_column_slice(&[r22_1, r22_2]);
    RTensor::new(2, vec![r11, r12, r21, r22], None).expect("constructed trace-free")
}

/// Field coefficients interpolated from values at `(1,0)`, `(0,1)` and `(1,1)`.
pub fn interpolate_field(at_x: &Vector, at_y: &Vector, at_diag: &Vector) -> [Vector; 3] {
    [at_x.clone(), at_diag - at_x - at_y, at_y.clone()]
}

#[derive(Debug, Clone)]
pub struct TangencyReport {
    /// Tangency on `∂K ∩ ker λ` for every sampled `λ`.
    pub hypothesis_ok: bool,
    /// Tangency at every sampled `(λ, p)`.
    pub conclusion_ok: bool,
    pub worst_hypothesis: f64,
    /// Worst `|ℓ_p(v)|` over all pairs.
    pub worst_violation: f64,
    /// `(λ, p)` in frame coordinates attaining `worst_violation`.
    pub witness: Option<(Vector, Vector)>,
    /// The transversal vector entered the check.
    pub used_nu: bool,
}

/// Checks that `R_λ(p)` (plus `λ(p)ν` when `ν` is present and the ambient
/// dimension is `k + 1`) is tangent to the boundary at `p`.
///
/// Tangency is `|ℓ_p(v)| ≤ tol` for the support functional `ℓ_p` (`ℓ_p(p) = 1`).
pub fn verify_r_tangency(
    body: &Body,
    plane: &Subspace,
    r: &RTensor,
    m: usize,
    tol: f64,
) -> Result<TangencyReport, BanachError> {
    let k = plane.dim();
    if r.k() != k || k != 2 {
        return Err(BanachError::InvalidTensor(
            "tangency is checked for planar tensors on 2-planes".into(),
        ));
    }
    let used_nu = r.nu().is_some() && body.dim() == k + 1;
    // tangency defect of R_λ(p) at the boundary point on the ray of direction c
    let defect = |lambda: &Vector, c: &Vector| -> Result<(f64, Vector), BanachError> {
        let p_amb = boundary_point(body, &plane.embed(c))?;
        let p = plane.coords(&p_amb);
        let grad = body
            .gauge_gradient(&p_amb)
            .ok_or(BanachError::Body(crate::bodies::BodyError::UnboundedSection))?;
        let normal = &grad / grad.dot(&p_amb);
        let mut v = plane.embed(&(r.apply(lambda) * &p));
        if used_nu {
            v += r.nu().expect("checked") * lambda.dot(&p);
        }
        Ok((normal.dot(&v).abs(), p))
    };
    let covectors = circle_directions(m);
    let mut worst_hypothesis: f64 = 0.0;
    for lambda in &covectors {
        let kernel = Vector::from_column_slice(&[-lambda[1], lambda[0]]);
        for c in [kernel.clone(), -kernel] {
            worst_hypothesis = worst_hypothesis.max(defect(lambda, &c)?.0);
        }
    }
    let mut worst: f64 = 0.0;
    let mut witness = None;
    for lambda in &covectors {
        for c in &covectors {
            let (d, p) = defect(lambda, c)?;
            if d > worst || witness.is_none() {
                worst = worst.max(d);
                witness = Some((lambda.clone(), p));
            }
        }
    }
    Ok(TangencyReport {
        hypothesis_ok: worst_hypothesis <= tol,
        conclusion_ok: worst <= tol,
        worst_hypothesis,
        worst_violation: worst,
        witness,
        used_nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn field_examples() {
        let r = RTensor::new(
            2,
            vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 0.0]), v(&[0.0, 0.0])],
            None,
        )
        .unwrap();
        assert_eq!(quadratic_field(&r, &v(&[0.0, 2.0])), v(&[4.0, 0.0]));
        // R11 − R22 = (1,0), R21 = (0,1), R12 = (1,1), trace-free diagonal
        let r = RTensor::new(
            2,
            vec![v(&[0.0, 0.0]), v(&[1.0, 1.0]), v(&[0.0, 1.0]), v(&[-1.0, 0.0])],
            None,
        );
        assert!(r.is_err(), "R11 = 0 with (R12)_2 = 1 is not trace-free");
        let r = RTensor::new(
            2,
            vec![v(&[-1.0, 0.0]), v(&[1.0, 1.0]), v(&[0.0, 1.0]), v(&[-2.0, 0.0])],
            None,
        )
        .unwrap();
        assert_eq!(quadratic_field(&r, &v(&[1.0, 2.0])), v(&[6.0, 3.0]));
    }

    #[test]
    fn coefficients_round_trip() {
        let r = RTensor::new(
            2,
            vec![v(&[-3.0, 2.0]), v(&[5.0, 3.0]), v(&[4.0, -1.0]), v(&[7.0, -4.0])],
            None,
        )
        .unwrap();
        assert_eq!(tensor_from_field(&field_coefficients(&r)), r);
    }

    #[test]
    fn rotation_field_is_tangent_to_the_disk() {
        let disk = Body::unit_ball(2);
        let j = Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let r = RTensor::from_maps(&[j, Matrix::zeros(2, 2)], None).unwrap();
        let rep = verify_r_tangency(&disk, &Subspace::full(2), &r, 32, 1e-12).unwrap();
        assert!(rep.hypothesis_ok && rep.conclusion_ok);
    }

    #[test]
    fn symmetric_off_diagonal_fails_the_hypothesis() {
        let disk = Body::unit_ball(2);
        let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = Matrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let r = RTensor::from_maps(&[a, b], None).unwrap();
        let rep = verify_r_tangency(&disk, &Subspace::full(2), &r, 8, 1e-9).unwrap();
        assert!(!rep.hypothesis_ok);
        // λ = (1,1)/√2 and p = (1,−1)/√2 give ℓ_p(R_λ p) = −1/√2
        let lambda = v(&[1.0, 1.0]) / 2f64.sqrt();
        let p = v(&[1.0, -1.0]) / 2f64.sqrt();
        let val = p.dot(&(r.apply(&lambda) * &p));
        assert!((val + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((rep.worst_hypothesis - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn equatorial_nu_is_tangent_to_the_sphere() {
        let sphere = Body::unit_ball(3);
        let xy = Subspace::span_of(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let r = RTensor::new(2, vec![Vector::zeros(2); 4], Some(v(&[0.0, 0.0, 1.0]))).unwrap();
        let rep = verify_r_tangency(&sphere, &xy, &r, 16, 1e-12).unwrap();
        assert!(rep.used_nu && rep.hypothesis_ok && rep.conclusion_ok);
    }
}
