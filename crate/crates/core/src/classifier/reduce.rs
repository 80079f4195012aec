//! Dimension reduction: two contracting hyperplanes with distinct lines give
//! a contracting `(n−2)`-subspace `X₁ ∩ X₂` with direction `L₁ + L₂`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bodies::Body;
use crate::contracting::{is_contracting, ContractingOptions, ContractionCertificate};
use crate::linalg::{join, meet, project, LinalgError, Matrix, Projector, Subspace, Vector};

use super::ClassifierError;

/// Probes of the iteration cross-check.
pub const REDUCTION_PROBES: usize = 32;
const PROBE_SEED: u64 = 0x7e57_ab1e;
const UNIT_TOL: f64 = 1e-9;

/// How the projection onto `W` along `Z` is recovered from `T = P₁ ∘ P₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionRegime {
    /// `|λ| < 1`: `lim Tᵐ p`.
    Iteration,
    /// `λ = −1`: `(p + T p) / 2`.
    Midpoint,
    /// `λ = 1`: `T` fixes `X₁`, which the contracting hypotheses exclude.
    DegenerateFixedPoint,
}

#[derive(Debug, Clone)]
pub struct ReductionResult {
    pub meet: Subspace,
    pub join: Subspace,
    /// Factor of `T` on `L = Z ∩ X₁`.
    pub lambda: f64,
    pub regime: ReductionRegime,
    pub certificate: ContractionCertificate,
    /// Worst `|q − project(W, Z, p)| / max(1, |p|)` over the probes; `None`
    /// in the degenerate regime.
    pub probe_error: Option<f64>,
}

/// `Tᵐ p` with `m` just large enough that `|λ|ᵐ < 1e-18`.
///
/// Plain repeated application: `T` is the identity on `W` and not normal, so
/// repeated squaring would amplify rounding errors.
fn iterate_to_limit(t: &Matrix, lambda: f64, p: &Vector) -> Vector {
    const MAX_STEPS: f64 = 1e6;
    let a = lambda.abs();
    let steps = if a < 1e-18 {
        1.0
    } else {
        ((1e-18f64).ln() / a.ln()).ceil().clamp(1.0, MAX_STEPS)
    };
    let mut v = p.clone();
    for _ in 0..steps as usize {
        v = t * &v;
    }
    v
}

pub fn reduce_pair(
    body: &Body,
    x1: &Subspace,
    l1: &Subspace,
    x2: &Subspace,
    l2: &Subspace,
    opts: &ContractingOptions,
) -> Result<ReductionResult, ClassifierError> {
    let n = body.dim();
    if x1.dim() + 1 != n || x2.dim() + 1 != n || l1.dim() != 1 || l2.dim() != 1 {
        return Err(ClassifierError::InvalidRegion(
            "reduction needs two hyperplanes and two lines".into(),
        ));
    }
    if x1.approx_eq(x2) {
        return Err(ClassifierError::SameHyperplane);
    }
    if l1.approx_eq(l2) {
        return Err(ClassifierError::SharedLine);
    }
    for (i, (x, l)) in [(x1, l1), (x2, l2)].into_iter().enumerate() {
        let cert = is_contracting(body, x, l, opts)?;
        if !cert.holds(opts.tol) {
            return Err(ClassifierError::PreconditionNotContracting {
                index: i + 1,
                violation: cert.violation,
            });
        }
    }
    let w = meet(x1, x2);
    let z = join(l1, l2);
    if meet(&w, &z).dim() > 0 || w.dim() + z.dim() != n {
        return Err(LinalgError::NonComplementary {
            dim_x: w.dim(),
            dim_y: z.dim(),
            ambient: n,
            condition: f64::INFINITY,
        }
        .into());
    }
    let p1 = Projector::new(x1, l1)?;
    let p2 = Projector::new(x2, l2)?;
    let t = p1.matrix() * p2.matrix();
    let line = meet(&z, x1);
    let u = line.basis_vector(0);
    let lambda = u.dot(&(&t * &u));
    let regime = if (lambda - 1.0).abs() <= UNIT_TOL {
        ReductionRegime::DegenerateFixedPoint
    } else if (lambda + 1.0).abs() <= UNIT_TOL {
        ReductionRegime::Midpoint
    } else {
        ReductionRegime::Iteration
    };
    let certificate = is_contracting(body, &w, &z, opts)?;

    let probe_error = match regime {
        ReductionRegime::DegenerateFixedPoint => None,
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
            let mut worst: f64 = 0.0;
            for _ in 0..REDUCTION_PROBES {
                let c = Vector::from_fn(x1.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let p = x1.embed(&c);
                let q = match regime {
                    ReductionRegime::Midpoint => (&p + &t * &p) / 2.0,
                    _ => iterate_to_limit(&t, lambda, &p),
                };
                let target = project(&w, &z, &p)?;
                worst = worst.max((q - target).norm() / p.norm().max(1.0));
            }
            Some(worst)
        }
    };
    Ok(ReductionResult {
        meet: w,
        join: z,
        lambda,
        regime,
        certificate,
        probe_error,
    })
}
