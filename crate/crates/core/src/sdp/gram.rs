use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::problem::{ConstraintKind, Layout, SdpProblem};
use crate::error::{Error, Result};
use crate::graph::Biclique;

/// Candidate solution: `M[0][0] = <e, e>`, `M[0][x] = c_x`, `M[x][y] = <u_x, u_y>`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    m: DMatrix<f64>,
}

impl GramMatrix {
    /// Symmetrises by averaging with the transpose.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::ZeroDimension);
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(Self { m: sym })
    }

    pub(crate) fn from_symmetric(m: DMatrix<f64>) -> Self {
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.m[(r, c)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.m.clone()).eigenvalues.min()
    }

    /// Dense text: `gram <dim>` then one whitespace-separated row per line.
    /// Values use the shortest representation that round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!("gram {}\n", self.dim());
        for r in 0..self.dim() {
            let row: Vec<String> = (0..self.dim()).map(|c| format!("{:e}", self.m[(r, c)])).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('c'));
        let (hl, header) = lines.next().ok_or_else(|| perr(0, "empty Gram file".into()))?;
        let mut toks = header.split_whitespace();
        if toks.next() != Some("gram") {
            return Err(perr(hl, "expected `gram <dim>` header".into()));
        }
        let dim: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| perr(hl, "invalid dimension".into()))?;
        if dim == 0 {
            return Err(perr(hl, "dimension must be positive".into()));
        }
        let mut values = Vec::with_capacity(dim * dim);
        let mut rows = 0;
        for (ln, line) in lines {
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| perr(ln, format!("invalid number {t:?}"))))
                .collect::<Result<_>>()?;
            if row.len() != dim {
                return Err(perr(ln, format!("expected {dim} values, found {}", row.len())));
            }
            values.extend(row);
            rows += 1;
        }
        if rows != dim {
            return Err(perr(0, format!("expected {dim} rows, found {rows}")));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, &values))
    }
}

/// The unbounded-gap construction for the weak relaxation on an `n x n`
/// graph: with `f` a unit vector orthogonal to `e`, every `U` vertex gets
/// `(e + f) / 2` and every `V` vertex `(e - f) / 2`, so all cross inner
/// products vanish while each side sums to `n / 2`.
pub fn weak_gap_solution(n: usize) -> GramMatrix {
    let l = Layout { n_u: n, n_v: n };
    let vec_of = |x: usize| -> [f64; 2] {
        if x == 0 {
            [1.0, 0.0]
        } else if l.u_range().contains(&x) {
            [0.5, 0.5]
        } else {
            [0.5, -0.5]
        }
    };
    let dim = l.dim();
    let m = DMatrix::from_fn(dim, dim, |r, c| {
        let (a, b) = (vec_of(r), vec_of(c));
        a[0] * b[0] + a[1] * b[1]
    });
    GramMatrix::from_symmetric(m)
}

/// Integral certificate: members of the biclique get `e`, everyone else `0`.
pub fn indicator_gram(layout: Layout, biclique: &Biclique) -> GramMatrix {
    let dim = layout.dim();
    let mut member = vec![false; dim];
    member[0] = true;
    biclique.left().iter().for_each(|&i| member[layout.u(i)] = true);
    biclique.right().iter().for_each(|&j| member[layout.v(j)] = true);
    let m = DMatrix::from_fn(dim, dim, |r, c| if member[r] && member[c] { 1.0 } else { 0.0 });
    GramMatrix::from_symmetric(m)
}

/// Per-constraint residuals of a candidate against a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    /// Signed `lhs - rhs`, in constraint order.
    pub residuals: Vec<f64>,
    pub max_violation: f64,
    /// Index of the worst constraint, if any constraint is violated at all.
    pub worst: Option<usize>,
    pub max_by_kind: BTreeMap<ConstraintKind, f64>,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl ViolationReport {
    pub fn max_for(&self, kind: ConstraintKind) -> f64 {
        self.max_by_kind.get(&kind).copied().unwrap_or(0.0)
    }
}

/// Passes iff every constraint is within `eps` and the minimum eigenvalue is
/// at least `-eps`.
pub fn check_feasibility(p: &SdpProblem, m: &GramMatrix, eps: f64) -> Result<ViolationReport> {
    if m.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: m.dim(),
        });
    }
    let mut residuals = Vec::with_capacity(p.constraints.len());
    let mut max_violation = 0.0f64;
    let mut worst = None;
    let mut max_by_kind = BTreeMap::new();
    for (idx, c) in p.constraints.iter().enumerate() {
        let res = c.residual(m.matrix());
        let v = c.violation(res);
        residuals.push(res);
        let slot = max_by_kind.entry(c.kind).or_insert(0.0f64);
        *slot = slot.max(v);
        if v > max_violation {
            max_violation = v;
            worst = Some(idx);
        }
    }
    let min_eigenvalue = m.min_eigenvalue();
    let passed = max_violation <= eps && min_eigenvalue >= -eps;
    Ok(ViolationReport {
        residuals,
        max_violation,
        worst,
        max_by_kind,
        min_eigenvalue,
        tolerance: eps,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, empty, planted_instance};
    use crate::sdp::{build_strong_relaxation, build_weak_relaxation};

    #[test]
    fn all_ones_certifies_k22() {
        let g = complete(2, 2).unwrap();
        let p = build_strong_relaxation(&g, 2.0).unwrap();
        let m = GramMatrix::new(DMatrix::from_element(5, 5, 1.0)).unwrap();
        let rep = check_feasibility(&p, &m, 1e-9).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert_eq!(rep.max_violation, 0.0);
        let w = build_weak_relaxation(&g, 2.0).unwrap();
        assert!(check_feasibility(&w, &m, 1e-9).unwrap().passed);
    }

    #[test]
    fn empty_graph_rejects_psd_candidates() {
        let g = empty(2, 2).unwrap();
        let p = build_strong_relaxation(&g, 1.0).unwrap();
        for m in [
            weak_gap_solution(2),
            GramMatrix::new(DMatrix::identity(5, 5)).unwrap(),
            GramMatrix::new(DMatrix::from_element(5, 5, 0.5)).unwrap(),
        ] {
            assert!(!check_feasibility(&p, &m, 1e-6).unwrap().passed);
        }
    }

    #[test]
    fn weak_gap_structure() {
        let m = weak_gap_solution(2);
        assert_eq!(m.dim(), 5);
        let l = Layout { n_u: 2, n_v: 2 };
        for x in 1..5 {
            assert_eq!(m.get(0, x), 0.5);
            assert_eq!(m.get(x, x), 0.5);
        }
        assert_eq!(m.get(l.u(0), l.u(1)), 0.5);
        assert_eq!(m.get(l.v(0), l.v(1)), 0.5);
        assert_eq!(m.get(l.u(0), l.v(1)), 0.0);
        let g = empty(2, 2).unwrap();
        let weak = build_weak_relaxation(&g, 1.0).unwrap();
        let rep = check_feasibility(&weak, &m, 1e-9).unwrap();
        assert!(rep.passed);
        for n in [1, 3, 6] {
            assert!(weak_gap_solution(n).min_eigenvalue() >= -1e-12);
        }
    }

    #[test]
    fn weak_gap_violates_degree_constraint_by_half() {
        let g = empty(2, 2).unwrap();
        let strong = build_strong_relaxation(&g, 1.0).unwrap();
        let rep = check_feasibility(&strong, &weak_gap_solution(2), 1e-6).unwrap();
        assert!(!rep.passed);
        // sum_j <u_i, u_j> - k c_i = 0 - 1 * 0.5
        assert!(rep.max_for(ConstraintKind::DegreeU) >= 0.5);
        assert!(rep.max_for(ConstraintKind::DegreeV) >= 0.5);
        assert_eq!(rep.max_for(ConstraintKind::SumU), 0.0);
    }

    #[test]
    fn indicator_is_exact_certificate() {
        for seed in 0..5 {
            let (g, sol) = planted_instance(8, 3, 0.0, seed).unwrap();
            let p = build_strong_relaxation(&g, 3.0).unwrap();
            let m = indicator_gram(Layout::of(&g), &sol.biclique);
            let rep = check_feasibility(&p, &m, 1e-9).unwrap();
            assert!(rep.passed);
            assert_eq!(rep.max_violation, 0.0);
        }
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let p = build_strong_relaxation(&complete(2, 2).unwrap(), 1.0).unwrap();
        let m = GramMatrix::new(DMatrix::identity(4, 4)).unwrap();
        assert!(matches!(check_feasibility(&p, &m, 1e-6), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = GramMatrix::new(DMatrix::from_fn(4, 4, |r, c| 1.0 / (1.0 + r as f64 + c as f64))).unwrap();
        let back = GramMatrix::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert!(GramMatrix::from_text("gram 2\n1 0\n").is_err());
        assert!(GramMatrix::from_text("gram 2\n1 0\n0 x\n").is_err());
        assert!(GramMatrix::from_text("matrix 2\n").is_err());
    }
}
