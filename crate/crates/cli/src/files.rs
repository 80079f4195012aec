//! Body, region and plane files.
//!
//! Matrices are row-major arrays of rows; frames are lists of column vectors.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use kkit_core::bodies::Body;
use kkit_core::linalg::{ChartRegion, Matrix, Subspace, Vector};
use kkit_core::quadform::SymmetricForm;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BodySpec {
    Ellipsoid {
        form: Vec<Vec<f64>>,
    },
    Polytope {
        vertices: Vec<Vec<f64>>,
    },
    Pball {
        p: f64,
        /// The body is the image of the unit `p`-ball under `map`.
        map: Vec<Vec<f64>>,
    },
    Cylinder {
        /// Body whose section by `plane` is the cylinder's base.
        base: Box<BodySpec>,
        plane: Vec<Vec<f64>>,
        generatrix: Vec<Vec<f64>>,
    },
    LinearImage {
        map: Vec<Vec<f64>>,
        inner: Box<BodySpec>,
    },
    Intersection {
        members: Vec<BodySpec>,
    },
    Restriction {
        inner: Box<BodySpec>,
        frame: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    /// Columns spanning the base plane.
    pub base: Vec<Vec<f64>>,
    /// Columns spanning the transversal; the orthogonal complement when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transversal: Option<Vec<Vec<f64>>>,
    /// One half-width per chart coordinate, or a single value for all.
    pub half_widths: HalfWidths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HalfWidths {
    Uniform(f64),
    PerAxis(Vec<f64>),
}

/// A plane or line given by its spanning columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub frame: Vec<Vec<f64>>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|e| anyhow!("{}:{}:{}: {}", path.display(), e.line(), e.column(), e))
}

pub fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        bail!("{what}: empty matrix");
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != m) {
        bail!("{what}: row {bad} has {} entries, expected {m}", rows[bad].len());
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.iter().any(|x| !x.is_finite()) {
        bail!("{what}: non-finite entry");
    }
    Ok(Matrix::from_row_slice(n, m, &flat))
}

pub fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn subspace_from_columns(cols: &[Vec<f64>], what: &str) -> Result<Subspace> {
    let n = cols.first().map_or(0, Vec::len);
    if cols.is_empty() || n == 0 {
        bail!("{what}: empty frame");
    }
    let vectors: Vec<Vector> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| {
            if c.len() != n {
                bail!("{what}: column {j} has {} entries, expected {n}", c.len());
            }
            Ok(Vector::from_column_slice(c))
        })
        .collect::<Result<_>>()?;
    let s = Subspace::span(n, &vectors);
    if s.dim() != cols.len() {
        bail!(
            "{what}: columns are linearly dependent (rank {} of {})",
            s.dim(),
            cols.len()
        );
    }
    Ok(s)
}

/// Orthonormal frame columns; a line is signed so its largest entry is positive.
pub fn columns_of(s: &Subspace) -> Vec<Vec<f64>> {
    let f = s.frame();
    let mut cols: Vec<Vec<f64>> = f.column_iter().map(|c| c.iter().copied().collect()).collect();
    if cols.len() == 1 {
        let c = &mut cols[0];
        let lead = c
            .iter()
            .copied()
            .fold(0.0_f64, |a, x| if x.abs() > a.abs() + 1e-12 { x } else { a });
        if lead < 0.0 {
            c.iter_mut().for_each(|x| *x = -*x);
        }
        c.iter_mut().for_each(|x| {
            if *x == 0.0 {
                *x = 0.0;
            }
        });
    }
    cols
}

impl BodySpec {
    pub fn build(&self) -> Result<Body> {
        self.build_at("body")
    }

    fn build_at(&self, at: &str) -> Result<Body> {
        let body = match self {
            BodySpec::Ellipsoid { form } => {
                let q = matrix_from_rows(form, at)?;
                if (&q - q.transpose()).amax() > 1e-12 * q.amax().max(1.0) {
                    bail!("{at}: ellipsoid form must be symmetric");
                }
                Body::ellipsoid(SymmetricForm::new(q))
            }
            BodySpec::Polytope { vertices } => {
                let m = matrix_from_rows(vertices, at)?;
                Body::polytope(m.row_iter().map(|r| r.transpose()).collect())
            }
            BodySpec::Pball { p, map } => Body::pball(*p, matrix_from_rows(map, at)?),
            BodySpec::Cylinder {
                base,
                plane,
                generatrix,
            } => Body::cylinder(
                base.build_at(&format!("{at}.base"))?,
                subspace_from_columns(plane, &format!("{at}.plane"))?,
                subspace_from_columns(generatrix, &format!("{at}.generatrix"))?,
            ),
            BodySpec::LinearImage { map, inner } => {
                Body::linear_image(matrix_from_rows(map, at)?, inner.build_at(&format!("{at}.inner"))?)
            }
            BodySpec::Intersection { members } => Body::intersection(
                members
                    .iter()
                    .enumerate()
                    .map(|(i, m)| m.build_at(&format!("{at}.members[{i}]")))
                    .collect::<Result<_>>()?,
            ),
            BodySpec::Restriction { inner, frame } => Body::restriction(
                inner.build_at(&format!("{at}.inner"))?,
                subspace_from_columns(frame, &format!("{at}.frame"))?,
            ),
        };
        body.map_err(|e| anyhow!("{at}: {e}"))
    }

    pub fn from_body(body: &Body) -> Self {
        match body {
            Body::Ellipsoid(e) => BodySpec::Ellipsoid {
                form: rows_of(&e.form().matrix()),
            },
            Body::Polytope(p) => BodySpec::Polytope {
                vertices: p.vertices().iter().map(|v| v.iter().copied().collect()).collect(),
            },
            Body::PBall(b) => BodySpec::Pball {
                p: b.p(),
                map: rows_of(b.map()),
            },
            Body::Cylinder(c) => BodySpec::Cylinder {
                base: Box::new(Self::from_body(c.base())),
                plane: columns_of(c.plane()),
                generatrix: columns_of(c.generatrix()),
            },
            Body::LinearImage(l) => BodySpec::LinearImage {
                map: rows_of(l.map()),
                inner: Box::new(Self::from_body(l.inner())),
            },
            Body::Intersection(i) => BodySpec::Intersection {
                members: i.members().iter().map(Self::from_body).collect(),
            },
            Body::Restriction(r) => BodySpec::Restriction {
                inner: Box::new(Self::from_body(r.inner())),
                frame: columns_of(r.frame()),
            },
        }
    }
}

impl RegionSpec {
    pub fn build(&self) -> Result<ChartRegion> {
        let base = subspace_from_columns(&self.base, "region.base")?;
        let n = base.ambient_dim();
        let k = base.dim();
        let transversal = match &self.transversal {
            Some(cols) => subspace_from_columns(cols, "region.transversal")?,
            None => base.complement(),
        };
        let d = k * (n - k);
        let widths = match &self.half_widths {
            HalfWidths::Uniform(h) => vec![*h; d],
            HalfWidths::PerAxis(v) => v.clone(),
        };
        ChartRegion::new(base, transversal, widths).map_err(|e| anyhow!("region: {e}"))
    }
}

pub fn load_body(path: &Path) -> Result<Body> {
    parse::<BodySpec>(&read(path)?, path)?
        .build()
        .with_context(|| format!("invalid body in {}", path.display()))
}

pub fn load_region(path: &Path) -> Result<ChartRegion> {
    parse::<RegionSpec>(&read(path)?, path)?
        .build()
        .with_context(|| format!("invalid region in {}", path.display()))
}

pub fn load_frame(path: &Path) -> Result<Subspace> {
    let spec: FrameSpec = parse(&read(path)?, path)?;
    subspace_from_columns(&spec.frame, "frame").with_context(|| format!("invalid frame in {}", path.display()))
}

/// Parses a body from text; errors carry `line:column` positions.
pub fn parse_body(text: &str) -> Result<Body> {
    parse::<BodySpec>(text, Path::new("<input>"))?.build()
}
