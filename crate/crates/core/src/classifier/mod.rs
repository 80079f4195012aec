//! Local classification of a body near a region of `k`-planes: ellipsoid,
//! cylinder, or neither (some plane has no contracting direction).

mod phi;
mod reduce;

pub use phi::{
    coplanarity_defect, fit_projective_dual, fit_tangent_field, injectivity_test, medoid_line, phi_map, support_check,
    tangent_linear_field, Injectivity, PhiPair, PhiSample, ProjectiveDual, TangentField, CONTINUITY_ANGLE,
    DUAL_GAP_TOL, FIELD_MIN_SIGMA, FIELD_RESIDUAL_TOL,
};
pub use reduce::{reduce_pair, ReductionRegime, ReductionResult, REDUCTION_PROBES};

use rayon::prelude::*;
use thiserror::Error;

use crate::bodies::{section_samples, Body, BodyError};
use crate::contracting::{
    find_contracting_direction, is_contracting, shared_generatrix_cylinder, smooth_seed, ContractingError,
    ContractingOptions, ContractionCertificate, DISTINCT_ANGLE,
};
use crate::linalg::{meet, ChartRegion, LinalgError, Subspace, Vector};
use crate::quadform::{reconstruct_global_form, QuadformError, ReconstructOptions, SymmetricForm};

/// Angle and relative form distance under which two verdicts count as the same.
pub const COHERENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("plane without a contracting line (minimal violation {violation:.3e})")]
    NoGeneratrix { plane: Subspace, violation: f64 },
    #[error("generatrix map is neither constant (spread {spread:.3e}) nor injective (separation {separation:.3e})")]
    Ambiguous { spread: f64, separation: f64 },
    #[error("generatrix map is constant; the projective dual is undefined")]
    NotInjective,
    #[error("projective dual fit is not unique (singular value gap {gap:.3e})")]
    DegenerateFit { gap: f64 },
    #[error("both contracting lines coincide")]
    SharedLine,
    #[error("both hyperplanes coincide")]
    SameHyperplane,
    #[error("hyperplane {index} is not contracting with its line (violation {violation:.3e})")]
    PreconditionNotContracting { index: usize, violation: f64 },
    #[error("every plane is contracting but the body is neither an ellipsoid nor a shared-generatrix cylinder")]
    Inconclusive,
    #[error("empty sample")]
    EmptySample,
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<ClassifierError>,
    },
    #[error(transparent)]
    Contracting(#[from] ContractingError),
    #[error(transparent)]
    Quadform(#[from] QuadformError),
    #[error(transparent)]
    Body(#[from] BodyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl ClassifierError {
    fn at(self, stage: &'static str) -> Self {
        match self {
            e @ ClassifierError::Stage { .. } => e,
            e => ClassifierError::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}

#[derive(Debug, Clone)]
pub enum Verdict {
    /// `Φ² = Q` near the region. A degenerate `Q` of rank strictly between
    /// `k` and `n` describes a cylinder over a lower-dimensional ellipsoid.
    Ellipsoid {
        form: SymmetricForm,
        psd: bool,
        rank: usize,
        eigenvalues: Vec<f64>,
    },
    /// `B` coincides near the region with `(B ∩ base_plane) + generatrix`.
    /// `form` is the degenerate quadratic form when the base is an ellipsoid.
    Cylinder {
        generatrix: Subspace,
        base_plane: Subspace,
        form: Option<SymmetricForm>,
    },
    /// `witness_plane` has no contracting direction; `violation` is the
    /// smallest violation the direction search reached.
    NonKakutani {
        witness_plane: Subspace,
        violation: f64,
        witness_point: Vector,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Ellipsoid { .. } => "ellipsoid",
            Verdict::Cylinder { .. } => "cylinder",
            Verdict::NonKakutani { .. } => "non_kakutani",
        }
    }

    pub fn is_positive(&self) -> bool {
        !matches!(self, Verdict::NonKakutani { .. })
    }
}

/// Outcome of the generatrix-map cross-check (3-dimensional bodies, 2-planes).
#[derive(Debug, Clone, Default)]
pub struct PhiDiagnostics {
    /// "injective", "constant" or "ambiguous".
    pub injectivity: String,
    pub max_jump: f64,
    pub dual_residual: Option<f64>,
    pub support_residual: Option<f64>,
    pub tangent_field_residual: Option<f64>,
    pub tangent_field_found: bool,
    pub agrees: bool,
}

/// Verdict on the restriction to `W = X₀ ⊕ span{y_row}`.
#[derive(Debug, Clone)]
pub struct RestrictionCheck {
    pub row: usize,
    pub verdict: String,
    /// Form distance or generatrix angle to the parent verdict.
    pub mismatch: f64,
    pub coherent: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub planes_swept: usize,
    /// Planes settled by the smooth-normal seed.
    pub seeded_planes: usize,
    /// Planes that needed the multistart search.
    pub searched_planes: usize,
    /// Worst violation among certified planes.
    pub max_certified_violation: f64,
    pub quadric_fit_residual: Option<f64>,
    pub verify_residual: Option<f64>,
    pub hausdorff: Option<f64>,
    pub phi: Option<PhiDiagnostics>,
    pub restrictions: Vec<RestrictionCheck>,
    /// True when a cross-check disagrees with the verdict.
    pub disagreement: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub tol: f64,
    pub grid_per_axis: usize,
    pub max_planes: usize,
    /// Failing planes searched fully before the sweep settles on a witness.
    pub suspects: usize,
    pub contracting: ContractingOptions,
    pub section_points: usize,
    pub verify_points: usize,
    pub phi_cross_check: bool,
    pub restrictions: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            grid_per_axis: 9,
            max_planes: 81,
            suspects: 3,
            contracting: ContractingOptions::default(),
            section_points: 256,
            verify_points: 2048,
            phi_cross_check: true,
            restrictions: true,
        }
    }
}

impl ClassifyOptions {
    fn contracting(&self) -> ContractingOptions {
        ContractingOptions {
            tol: self.tol,
            ..self.contracting.clone()
        }
    }

    fn reconstruct(&self) -> ReconstructOptions {
        ReconstructOptions {
            tol: self.tol,
            grid_per_axis: self.grid_per_axis,
            max_planes: self.max_planes,
            section_points: self.section_points,
            verify_points: self.verify_points,
        }
    }
}

enum PlaneStatus {
    Certified(ContractionCertificate),
    Failed(ContractionCertificate),
    Suspect(f64),
}

struct Sweep {
    planes: Vec<(Vec<f64>, Subspace)>,
    /// Contracting lines per plane (empty for failed planes).
    directions: Vec<Vec<Subspace>>,
    failures: Vec<ContractionCertificate>,
    seeded: usize,
    searched: usize,
    max_certified: f64,
}

fn sweep(body: &Body, region: &ChartRegion, opts: &ClassifyOptions) -> Result<Sweep, ClassifierError> {
    let copts = opts.contracting();
    let planes: Vec<(Vec<f64>, Subspace)> = region
        .grid(opts.grid_per_axis, opts.max_planes)
        .into_iter()
        .map(|c| {
            let p = region.plane_unchecked(&c);
            (c, p)
        })
        .collect();
    let statuses: Vec<Result<PlaneStatus, ContractingError>> = planes
        .par_iter()
        .map(|(_, plane)| {
            let seed = smooth_seed(body, plane, copts.section_points)?;
            Ok(match seed.candidate {
                Some(y) => {
                    let cert = is_contracting(body, plane, &y, &copts)?;
                    if cert.holds(copts.tol) {
                        PlaneStatus::Certified(cert)
                    } else {
                        PlaneStatus::Failed(cert)
                    }
                }
                None => PlaneStatus::Suspect(seed.defect),
            })
        })
        .collect();
    let mut out = Sweep {
        directions: vec![Vec::new(); planes.len()],
        failures: Vec::new(),
        seeded: 0,
        searched: 0,
        max_certified: 0.0,
        planes,
    };
    let mut suspects: Vec<(usize, f64)> = Vec::new();
    for (i, s) in statuses.into_iter().enumerate() {
        match s? {
            PlaneStatus::Certified(c) => {
                out.seeded += 1;
                out.max_certified = out.max_certified.max(c.violation);
                out.directions[i].push(c.direction);
            }
            PlaneStatus::Failed(c) => {
                out.seeded += 1;
                out.failures.push(c);
            }
            PlaneStatus::Suspect(defect) => suspects.push((i, defect)),
        }
    }
    // most clearly failing planes first; stop once enough failures are confirmed
    suspects.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (i, _) in suspects {
        if out.failures.len() >= opts.suspects {
            break;
        }
        out.searched += 1;
        let search = find_contracting_direction(body, &out.planes[i].1, &copts)?;
        if search.directions.is_empty() {
            out.failures.push(search.best);
        } else {
            for c in &search.directions {
                out.max_certified = out.max_certified.max(c.violation);
            }
            out.directions[i] = search.directions.into_iter().map(|c| c.direction).collect();
        }
    }
    Ok(out)
}

/// Classifies `body` near the planes of `region`.
///
/// Stages: sweep the grid for contracting directions (a failure gives the
/// non-Kakutani verdict), reconstruct a global quadratic form, otherwise look
/// for a cylinder with a shared generatrix. In dimension 3 the generatrix
/// map pipeline cross-checks the verdict; for `n > k + 1` the restrictions to
/// `X₀ ⊕ span{y_j}` are classified and compared.
pub fn classify(
    body: &Body,
    region: &ChartRegion,
    opts: &ClassifyOptions,
) -> Result<ClassificationReport, ClassifierError> {
    let n = body.dim();
    let k = region.plane_dim();
    if region.ambient_dim() != n {
        return Err(ClassifierError::InvalidRegion(format!(
            "region lives in dimension {}, body in {n}",
            region.ambient_dim()
        )));
    }
    if k < 2 || k >= n {
        return Err(ClassifierError::InvalidRegion(format!(
            "planes must have dimension 2 ≤ k < n, got k = {k}, n = {n}"
        )));
    }
    let mut diag = Diagnostics::default();

    let sw = sweep(body, region, opts).map_err(|e| e.at("sweep"))?;
    diag.planes_swept = sw.planes.len();
    diag.seeded_planes = sw.seeded;
    diag.searched_planes = sw.searched;
    diag.max_certified_violation = sw.max_certified;
    if let Some(worst) = sw.failures.iter().max_by(|a, b| a.violation.total_cmp(&b.violation)) {
        return Ok(ClassificationReport {
            verdict: Verdict::NonKakutani {
                witness_plane: worst.plane.clone(),
                violation: worst.violation,
                witness_point: worst.witness.clone(),
            },
            diagnostics: diag,
        });
    }

    let verdict = match reconstruct_global_form(body, region, &opts.reconstruct()) {
        Ok(global) => {
            diag.quadric_fit_residual = Some(global.fit_residual);
            diag.verify_residual = Some(global.verify_residual);
            if !global.psd {
                diag.notes
                    .push("reconstructed form is not positive semidefinite".into());
                diag.disagreement = true;
            }
            if global.rank == k {
                Verdict::Cylinder {
                    generatrix: global.form.kernel(),
                    base_plane: region.base().clone(),
                    form: Some(global.form),
                }
            } else {
                Verdict::Ellipsoid {
                    psd: global.psd,
                    rank: global.rank,
                    eigenvalues: global.eigenvalues,
                    form: global.form,
                }
            }
        }
        Err(e @ (QuadformError::NotLocallyQuadric { .. } | QuadformError::InconsistentPropagation { .. })) => {
            if let QuadformError::NotLocallyQuadric { residual, .. } = &e {
                diag.quadric_fit_residual = Some(*residual);
            }
            diag.notes.push(format!("quadratic form: {e}"));
            shared_cylinder(body, region, &sw, opts, &mut diag)?
        }
        Err(e) => return Err(ClassifierError::from(e).at("quadratic form")),
    };

    if opts.phi_cross_check && n == 3 && k == 2 {
        let phi = phi_cross_check(body, region, &sw, &verdict);
        diag.disagreement |= !phi.agrees;
        diag.phi = Some(phi);
    }
    if opts.restrictions && n > k + 1 {
        for row in 0..n - k {
            let check = restriction_check(body, region, row, &verdict, opts).map_err(|e| e.at("restriction"))?;
            diag.disagreement |= !check.coherent;
            diag.restrictions.push(check);
        }
    }
    Ok(ClassificationReport {
        verdict,
        diagnostics: diag,
    })
}

fn shared_cylinder(
    body: &Body,
    region: &ChartRegion,
    sw: &Sweep,
    opts: &ClassifyOptions,
    diag: &mut Diagnostics,
) -> Result<Verdict, ClassifierError> {
    let base = region.base();
    let copts = opts.contracting();
    let search = find_contracting_direction(body, base, &copts).map_err(|e| ClassifierError::from(e).at("cylinder"))?;
    let Some(direction) = search.direction() else {
        return Err(ClassifierError::NoGeneratrix {
            plane: base.clone(),
            violation: search.minimal_violation(),
        }
        .at("cylinder"));
    };
    let planes: Vec<Subspace> = std::iter::once(base.clone())
        .chain(sw.planes.iter().map(|(_, p)| p.clone()))
        .collect();
    match shared_generatrix_cylinder(body, &planes, direction, &copts)
        .map_err(|e| ClassifierError::from(e).at("cylinder"))?
    {
        Some(shared) => {
            diag.hausdorff = Some(shared.hausdorff);
            Ok(Verdict::Cylinder {
                generatrix: direction.clone(),
                base_plane: base.clone(),
                form: None,
            })
        }
        None => Err(ClassifierError::Inconclusive.at("cylinder")),
    }
}

fn phi_cross_check(body: &Body, region: &ChartRegion, sw: &Sweep, verdict: &Verdict) -> PhiDiagnostics {
    let pairs: Vec<PhiPair> = sw
        .planes
        .iter()
        .zip(&sw.directions)
        .filter(|(_, lines)| !lines.is_empty())
        .map(|((coeffs, plane), lines)| PhiPair {
            coeffs: coeffs.clone(),
            plane: plane.clone(),
            line: lines[0].clone(),
            lines: lines.clone(),
            violation: 0.0,
        })
        .collect();
    let sample = PhiSample::from_pairs(pairs);
    let mut out = PhiDiagnostics {
        max_jump: sample.max_jump,
        ..Default::default()
    };
    match injectivity_test(&sample, DISTINCT_ANGLE) {
        Ok(Injectivity::ConstantLine { line, .. }) => {
            out.injectivity = "constant".into();
            out.agrees =
                matches!(verdict, Verdict::Cylinder { generatrix, .. } if generatrix.distance(&line) <= COHERENCE_TOL);
        }
        Ok(Injectivity::Injective { .. }) => {
            out.injectivity = "injective".into();
            if let Ok(dual) = fit_projective_dual(body, &sample, 16) {
                out.dual_residual = Some(dual.fit_residual);
                out.support_residual = Some(support_check(body, &dual, region, 64));
            }
            if let Ok(section) = section_samples(body, region.base(), 256) {
                if let Some(field) = fit_tangent_field(&section) {
                    out.tangent_field_residual = Some(field.residual);
                    out.tangent_field_found = field.is_accepted();
                }
            }
            let supported = out.support_residual.is_some_and(|r| r <= COHERENCE_TOL);
            out.agrees = matches!(verdict, Verdict::Ellipsoid { rank: 3, .. }) && supported && out.tangent_field_found;
        }
        Err(_) => {
            out.injectivity = "ambiguous".into();
            out.agrees = false;
        }
    }
    out
}

fn restriction_check(
    body: &Body,
    region: &ChartRegion,
    row: usize,
    verdict: &Verdict,
    opts: &ClassifyOptions,
) -> Result<RestrictionCheck, ClassifierError> {
    let (w, chart) = region.restrict_to_row(row);
    let restricted = Body::restriction(body.clone(), w.clone())?;
    let sub_opts = ClassifyOptions {
        restrictions: false,
        phi_cross_check: false,
        ..opts.clone()
    };
    let report = classify(&restricted, &chart, &sub_opts)?;
    let frame = w.frame();
    let mismatch = match (verdict, &report.verdict) {
        (Verdict::Ellipsoid { form, .. }, Verdict::Ellipsoid { form: sub, .. })
        | (Verdict::Cylinder { form: Some(form), .. }, Verdict::Cylinder { form: Some(sub), .. })
        | (Verdict::Ellipsoid { form, .. }, Verdict::Cylinder { form: Some(sub), .. }) => {
            sub.relative_distance(&form.restrict(frame))
        }
        (Verdict::Cylinder { generatrix, .. }, Verdict::Cylinder { generatrix: sub, .. }) => {
            let expected = meet(generatrix, &w);
            let embedded = Subspace::from_columns(&(frame * sub.frame()));
            expected.distance(&embedded)
        }
        _ => f64::INFINITY,
    };
    Ok(RestrictionCheck {
        row,
        verdict: report.verdict.name().to_string(),
        coherent: mismatch <= COHERENCE_TOL,
        mismatch,
    })
}
