//! Dense two-phase simplex for the polytope scaling problem
//! `min Σλ  s.t.  Vλ = x, λ ≥ 0`, whose value is `min{t : x ∈ t·conv(V)}`.
//!
//! Bland's rule is used throughout; polytopes with many vertices per facet are
//! highly degenerate and cycling is otherwise a real risk. The optimal basis
//! is polished by a direct solve so the value is accurate to rounding.

use crate::linalg::{Matrix, Vector};

const PIVOT_EPS: f64 = 1e-12;
const FEAS_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct ScalingSolution {
    pub value: f64,
}

struct Tableau {
    rows: usize,
    cols: usize,
    // rows × (cols + 1); the last column is the right-hand side
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.data[pr * w + pc];
        for c in 0..w {
            self.data[pr * w + c] /= p;
        }
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                for c in 0..w {
                    self.data[r * w + c] -= f * self.data[pr * w + c];
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Minimizes `cost · x` over columns `< allowed`; returns false on iteration blow-up.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> bool {
        let max_iter = 50 * (self.rows + self.cols) + 100;
        for _ in 0..max_iter {
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j] - (0..self.rows).map(|r| cost[self.basis[r]] * self.at(r, j)).sum::<f64>();
                reduced < -PIVOT_EPS
            });
            let Some(j) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, j);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-15 || (ratio <= lratio + 1e-15 && self.basis[r] < self.basis[lr]) {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leave {
                // unbounded cannot happen for a nonnegative cost; treat as done
                None => return true,
                Some((r, _)) => self.pivot(r, j),
            }
        }
        false
    }
}

/// Solves the scaling LP; `None` when `x` is outside the cone spanned by the vertices.
pub(crate) fn scaling_lp(vertices: &[Vector], x: &Vector) -> Option<ScalingSolution> {
    let n = x.len();
    let m = vertices.len();
    if x.iter().all(|c| *c == 0.0) {
        return Some(ScalingSolution { value: 0.0 });
    }
    let cols = m + n;
    let w = cols + 1;
    let mut data = vec![0.0; n * w];
    for r in 0..n {
        let sign = if x[r] < 0.0 { -1.0 } else { 1.0 };
        for (j, v) in vertices.iter().enumerate() {
            data[r * w + j] = sign * v[r];
        }
        data[r * w + m + r] = 1.0;
        data[r * w + cols] = sign * x[r];
    }
    let mut t = Tableau {
        rows: n,
        cols,
        data,
        basis: (m..m + n).collect(),
    };

    let mut phase1 = vec![0.0; cols];
    phase1[m..].iter_mut().for_each(|c| *c = 1.0);
    if !t.optimize(&phase1, cols) {
        return None;
    }
    let infeasibility: f64 = (0..n).filter(|&r| t.basis[r] >= m).map(|r| t.rhs(r)).sum();
    let scale = x.amax().max(1.0);
    if infeasibility > FEAS_EPS * scale {
        return None;
    }
    for r in 0..n {
        if t.basis[r] >= m {
            if let Some(j) = (0..m).find(|&j| !t.basis.contains(&j) && t.at(r, j).abs() > 1e-9) {
                t.pivot(r, j);
            }
        }
    }

    let mut phase2 = vec![0.0; cols];
    phase2[..m].iter_mut().for_each(|c| *c = 1.0);
    if !t.optimize(&phase2, m) {
        return None;
    }

    // polish: solve B λ_B = x on the optimal basis; the value is 1ᵀλ_B
    let basis = t.basis.clone();
    let tableau_value: f64 = (0..n).filter(|&r| basis[r] < m).map(|r| t.rhs(r)).sum();
    if basis.iter().all(|&j| j < m) {
        let b = Matrix::from_fn(n, n, |r, c| vertices[basis[c]][r]);
        if let Some(lambda) = b.lu().solve(x) {
            if lambda.iter().all(|l| *l >= -1e-9) {
                return Some(ScalingSolution { value: lambda.sum() });
            }
        }
    }
    // degenerate basis with a leftover artificial at level zero
    Some(ScalingSolution { value: tableau_value })
}
