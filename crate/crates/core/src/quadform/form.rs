use nalgebra::SymmetricEigen;

use crate::linalg::{Matrix, Subspace, Vector};

/// Eigenvalues at or above `-PSD_TOL · λ_max` count as nonnegative.
pub const PSD_TOL: f64 = 1e-9;
/// Eigenvalues below `DEGENERATE_TOL · λ_max` count as zero for the rank.
pub const DEGENERATE_TOL: f64 = 1e-7;

/// Symmetric coefficient array of a quadratic form.
///
/// `coeffs` are expressed in the columns of `basis` when one is recorded,
/// otherwise in standard coordinates. Symmetry is exact: constructors replace
/// the input by `(C + Cᵀ) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricForm {
    coeffs: Matrix,
    basis: Option<Matrix>,
}

impl SymmetricForm {
    pub fn new(coeffs: Matrix) -> Self {
        assert!(coeffs.is_square(), "quadratic form coefficients must be square");
        let sym = (&coeffs + coeffs.transpose()) * 0.5;
        Self {
            coeffs: sym,
            basis: None,
        }
    }

    /// Form whose coefficients refer to the columns of `basis`.
    pub fn with_basis(coeffs: Matrix, basis: Matrix) -> Self {
        assert_eq!(coeffs.nrows(), basis.ncols(), "basis size");
        let mut f = Self::new(coeffs);
        f.basis = Some(basis);
        f
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Matrix::identity(n, n))
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        Self::new(Matrix::from_diagonal(&Vector::from_column_slice(entries)))
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn coeffs(&self) -> &Matrix {
        &self.coeffs
    }

    pub fn basis(&self) -> Option<&Matrix> {
        self.basis.as_ref()
    }

    /// The same form in standard coordinates, `V⁻ᵀ C V⁻¹`.
    pub fn to_standard(&self) -> SymmetricForm {
        match &self.basis {
            None => self.clone(),
            Some(v) => {
                let inv = v.clone().try_inverse().expect("recorded basis must be invertible");
                Self::new(inv.transpose() * &self.coeffs * inv)
            }
        }
    }

    /// Coefficient matrix in standard coordinates.
    pub fn matrix(&self) -> Matrix {
        self.to_standard().coeffs
    }

    /// `Q(v)` for `v` in standard coordinates.
    pub fn value(&self, v: &Vector) -> f64 {
        match &self.basis {
            None => v.dot(&(&self.coeffs * v)),
            Some(_) => {
                let m = self.matrix();
                v.dot(&(&m * v))
            }
        }
    }

    /// Restriction to the span of `frame` (standard coordinates), `Fᵀ Q F`.
    pub fn restrict(&self, frame: &Matrix) -> SymmetricForm {
        let m = self.matrix();
        Self::new(frame.transpose() * m * frame)
    }

    /// Eigenvalues of the standard-coordinate matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.matrix());
        let mut e: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    fn lambda_max(eigs: &[f64]) -> f64 {
        eigs.iter().fold(0.0_f64, |m, e| m.max(e.abs()))
    }

    pub fn is_psd(&self) -> bool {
        let e = self.eigenvalues();
        let top = Self::lambda_max(&e);
        e.iter().all(|x| *x >= -PSD_TOL * top)
    }

    pub fn is_positive_definite(&self) -> bool {
        let e = self.eigenvalues();
        let top = Self::lambda_max(&e);
        top > 0.0 && e.iter().all(|x| *x >= DEGENERATE_TOL * top)
    }

    /// Number of eigenvalues at or above `DEGENERATE_TOL · λ_max`.
    pub fn rank(&self) -> usize {
        let e = self.eigenvalues();
        let top = Self::lambda_max(&e);
        if top == 0.0 {
            return 0;
        }
        e.iter().filter(|x| x.abs() >= DEGENERATE_TOL * top).count()
    }

    /// Span of the eigenvectors whose eigenvalues count as zero.
    pub fn kernel(&self) -> Subspace {
        let m = self.matrix();
        let n = m.nrows();
        let eig = SymmetricEigen::new(m);
        let top = eig.eigenvalues.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
        let cols: Vec<Vector> = (0..n)
            .filter(|&i| eig.eigenvalues[i].abs() < DEGENERATE_TOL * top || top == 0.0)
            .map(|i| eig.eigenvectors.column(i).into_owned())
            .collect();
        Subspace::span(n, &cols)
    }

    /// `‖A − B‖_F / ‖B‖_F` in standard coordinates, with `other` as reference.
    pub fn relative_distance(&self, other: &SymmetricForm) -> f64 {
        let a = self.matrix();
        let b = other.matrix();
        let denom = b.norm();
        if denom == 0.0 {
            return (a - b).norm();
        }
        (a - b).norm() / denom
    }

    /// Scaled copy (standard coordinates) with unit Frobenius norm.
    pub fn normalized(&self) -> SymmetricForm {
        let m = self.matrix();
        let n = m.norm();
        if n == 0.0 {
            return Self::new(m);
        }
        Self::new(m / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrization_is_exact() {
        let f = SymmetricForm::new(Matrix::from_row_slice(2, 2, &[1.0, 0.3, 0.1, 2.0]));
        assert_eq!(f.coeffs(), &f.coeffs().transpose());
    }

    #[test]
    fn basis_change_round_trip() {
        let q = Matrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 3.0]);
        let v = Matrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.0, 1.0, 0.3, 0.1, 0.0, 1.0]);
        let in_basis = SymmetricForm::with_basis(v.transpose() * &q * &v, v);
        assert!((in_basis.matrix() - q).norm() < 1e-13);
    }

    #[test]
    fn rank_and_kernel_of_degenerate_form() {
        let f = SymmetricForm::diagonal(&[1.0, 1.0, 0.0]);
        assert_eq!(f.rank(), 2);
        assert!(f.is_psd());
        assert!(!f.is_positive_definite());
        assert!(f.kernel().approx_eq(&Subspace::axis(3, 2)));
        assert!(!SymmetricForm::diagonal(&[1.0, -0.5]).is_psd());
    }
}
