//! JSON reports.

use kkit_core::banach::HypothesisCheck;
use kkit_core::classifier::{ClassificationReport, Diagnostics, Verdict};
use kkit_core::contracting::{ContractionCertificate, DirectionSearch};
use kkit_core::quadform::SymmetricForm;
use serde::Serialize;
use serde_json::{json, Value};

use crate::files::{columns_of, rows_of};

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub verdict: String,
    pub witness: Value,
    pub diagnostics: Value,
    /// Wall-clock stage timings in milliseconds; null unless requested.
    pub timings: Option<Value>,
    pub config_echo: Value,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Non-finite numbers become null.
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn form_value(form: &SymmetricForm) -> Value {
    json!(rows_of(&form.matrix()))
}

pub fn verdict_witness(v: &Verdict) -> Value {
    match v {
        Verdict::Ellipsoid {
            form,
            psd,
            rank,
            eigenvalues,
        } => json!({
            "form": form_value(form),
            "psd": psd,
            "rank": rank,
            "eigenvalues": eigenvalues.iter().map(|x| num(*x)).collect::<Vec<_>>(),
        }),
        Verdict::Cylinder {
            generatrix,
            base_plane,
            form,
        } => json!({
            "generatrix": columns_of(generatrix),
            "base_plane": columns_of(base_plane),
            "form": form.as_ref().map(form_value),
        }),
        Verdict::NonKakutani {
            witness_plane,
            violation,
            witness_point,
        } => json!({
            "plane": columns_of(witness_plane),
            "violation": num(*violation),
            "point": witness_point.iter().map(|x| num(*x)).collect::<Vec<_>>(),
        }),
    }
}

pub fn diagnostics_value(d: &Diagnostics) -> Value {
    json!({
        "planes_swept": d.planes_swept,
        "seeded_planes": d.seeded_planes,
        "searched_planes": d.searched_planes,
        "max_certified_violation": num(d.max_certified_violation),
        "quadric_fit_residual": d.quadric_fit_residual.map(num),
        "verify_residual": d.verify_residual.map(num),
        "hausdorff": d.hausdorff.map(num),
        "phi": d.phi.as_ref().map(|p| json!({
            "injectivity": p.injectivity,
            "max_jump": num(p.max_jump),
            "dual_residual": p.dual_residual.map(num),
            "support_residual": p.support_residual.map(num),
            "tangent_field_residual": p.tangent_field_residual.map(num),
            "tangent_field_found": p.tangent_field_found,
            "agrees": p.agrees,
        })),
        "restrictions": d.restrictions.iter().map(|r| json!({
            "row": r.row,
            "verdict": r.verdict,
            "mismatch": num(r.mismatch),
            "coherent": r.coherent,
        })).collect::<Vec<_>>(),
        "disagreement": d.disagreement,
        "notes": d.notes,
    })
}

pub fn classification(rep: &ClassificationReport, config: Value, timings: Option<Value>) -> Report {
    Report {
        verdict: rep.verdict.name().to_string(),
        witness: verdict_witness(&rep.verdict),
        diagnostics: diagnostics_value(&rep.diagnostics),
        timings,
        config_echo: config,
    }
}

pub fn hypothesis_value(h: &HypothesisCheck) -> Value {
    json!({
        "pairs_checked": h.pairs_checked,
        "worst_residual": num(h.worst_residual),
        "worst_pair": h.worst_pair.as_ref().map(|(a, b)| json!([columns_of(a), columns_of(b)])),
        "heuristic": h.heuristic,
    })
}

pub fn certificate_value(c: &ContractionCertificate) -> Value {
    json!({
        "plane": columns_of(&c.plane),
        "direction": columns_of(&c.direction),
        "violation": num(c.violation),
        "point": c.witness.iter().map(|x| num(*x)).collect::<Vec<_>>(),
        "exact": c.exact,
    })
}

pub fn search_value(s: &DirectionSearch) -> Value {
    json!({
        "directions": s.directions.iter().map(certificate_value).collect::<Vec<_>>(),
        "best": certificate_value(&s.best),
        "multiplicity": s.multiplicity(),
        "seeded": s.seeded,
        "seed_defect": num(s.seed_defect),
    })
}

pub fn error_report(kind: &str, message: &str, config: Value) -> Report {
    Report {
        verdict: "error".into(),
        witness: json!({ "kind": kind, "message": message }),
        diagnostics: Value::Null,
        timings: None,
        config_echo: config,
    }
}

pub fn matrix_value(m: &kkit_core::linalg::Matrix) -> Value {
    json!(rows_of(m))
}
