//! Linear equivalence of sections, the quadratic field of a trace-free
//! tensor, tangency verification and classification under the hypothesis
//! that all sections near a plane are linearly equivalent.

mod equivalence;
mod tensor;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bodies::Body;
use crate::bodies::BodyError;
use crate::classifier::{classify, ClassificationReport, ClassifierError, ClassifyOptions};
use crate::linalg::{ChartRegion, LinalgError, Subspace};

pub use equivalence::{
    linear_equivalent_bodies, linear_equivalent_sections, min_volume_enclosing_ellipsoid, section_match,
    EquivalenceMatch, EquivalenceWitness, ROTATION_OFFSETS, SPHERE_DESIGN_POINTS,
};
pub use tensor::{
    field_coefficients, interpolate_field, quadratic_field, tensor_from_field, verify_r_tangency, RTensor,
    TangencyReport,
};

#[derive(Debug, Error)]
pub enum BanachError {
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("sections are not linearly equivalent (residual {residual:.3e} > tol {tol:.1e})")]
    HypothesisFailed {
        plane_a: Subspace,
        plane_b: Subspace,
        residual: f64,
        tol: f64,
    },
    #[error("region: {0}")]
    InvalidRegion(String),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Body(#[from] BodyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone)]
pub struct BanachOptions {
    /// Tolerance on the canonical radial mismatch of section pairs.
    pub tol: f64,
    pub grid_per_axis: usize,
    pub max_planes: usize,
    pub random_pairs: usize,
    pub seed: u64,
    pub classify: ClassifyOptions,
}

impl Default for BanachOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            grid_per_axis: 5,
            max_planes: 25,
            random_pairs: 32,
            seed: 0x00ba_2ac4,
            classify: ClassifyOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HypothesisCheck {
    pub pairs_checked: usize,
    pub worst_residual: f64,
    pub worst_pair: Option<(Subspace, Subspace)>,
    /// Equivalence of 3-dimensional sections relies on a local rotation search.
    pub heuristic: bool,
}

#[derive(Debug, Clone)]
pub struct BanachReport {
    pub hypothesis: HypothesisCheck,
    pub classification: ClassificationReport,
}

/// Checks pairwise linear equivalence of sections over the region (the base
/// plane against every grid plane, plus seeded random pairs of grid planes).
pub fn check_hypothesis(
    body: &Body,
    region: &ChartRegion,
    opts: &BanachOptions,
) -> Result<HypothesisCheck, BanachError> {
    let k = region.plane_dim();
    if !(k == 2 || k == 3) || region.ambient_dim() != body.dim() {
        return Err(BanachError::InvalidRegion(format!(
            "need planes of dimension 2 or 3 in R^{}, got k = {k} in R^{}",
            body.dim(),
            region.ambient_dim()
        )));
    }
    let planes: Vec<Subspace> = region
        .grid(opts.grid_per_axis, opts.max_planes)
        .into_iter()
        .map(|c| region.plane_unchecked(&c))
        .collect();
    let base = region.base().clone();
    let mut pairs: Vec<(Subspace, Subspace)> = planes
        .iter()
        .filter(|p| !p.approx_eq(&base))
        .map(|p| (base.clone(), p.clone()))
        .collect();
    if planes.len() > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.random_pairs {
            let i = rng.random_range(0..planes.len());
            let mut j = rng.random_range(0..planes.len() - 1);
            if j >= i {
                j += 1;
            }
            pairs.push((planes[i].clone(), planes[j].clone()));
        }
    }
    let residuals = equivalence::pair_residuals(body, &pairs)?;
    let worst = residuals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, r)| (i, *r));
    Ok(HypothesisCheck {
        pairs_checked: pairs.len(),
        worst_residual: worst.map_or(0.0, |w| w.1),
        worst_pair: worst.map(|(i, _)| pairs[i].clone()),
        heuristic: k == 3,
    })
}

/// Verifies the equivalence hypothesis, then classifies.
pub fn banach_classify(body: &Body, region: &ChartRegion, opts: &BanachOptions) -> Result<BanachReport, BanachError> {
    let hypothesis = check_hypothesis(body, region, opts)?;
    if hypothesis.worst_residual > opts.tol {
        let (plane_a, plane_b) = hypothesis.worst_pair.clone().expect("a failing pair exists");
        return Err(BanachError::HypothesisFailed {
            plane_a,
            plane_b,
            residual: hypothesis.worst_residual,
            tol: opts.tol,
        });
    }
    let classification = classify(body, region, &opts.classify)?;
    Ok(BanachReport {
        hypothesis,
        classification,
    })
}
