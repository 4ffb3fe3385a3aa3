use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

/// Maps the two vertex sides onto the Gram-matrix index space: index 0 is
/// the unit vector `e`, then `U` at `1..=n_u`, then `V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub n_u: usize,
    pub n_v: usize,
}

impl Layout {
    pub fn of(g: &BipartiteGraph) -> Self {
        Self {
            n_u: g.n_u(),
            n_v: g.n_v(),
        }
    }

    pub fn dim(&self) -> usize {
        1 + self.n_u + self.n_v
    }

    pub fn u(&self, i: usize) -> usize {
        1 + i
    }

    pub fn v(&self, j: usize) -> usize {
        1 + self.n_u + j
    }

    pub fn u_range(&self) -> std::ops::Range<usize> {
        1..1 + self.n_u
    }

    pub fn v_range(&self) -> std::ops::Range<usize> {
        1 + self.n_u..self.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Eq,
    Ge,
}

/// Which family of the relaxation a constraint belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// `<e, e> = 1`
    UnitE,
    /// `|u_i|^2 = <u_i, e>`
    NormLink,
    /// `sum_U <u_i, e> = k`
    SumU,
    /// `sum_V <u_j, e> = k`
    SumV,
    /// `<u_i, u_j> = 0` on non-edges
    NonEdge,
    /// `<u_i, u_j> >= 0` on `U x V`
    NonNeg,
    /// `sum_V <u_i, u_j> = k <u_i, e>` for `i` in `U`
    DegreeU,
    /// `sum_U <u_i, u_j> = k <u_j, e>` for `j` in `V`
    DegreeV,
}

/// `sum coeff * M[row][col]  (= | >=)  rhs` over the symmetric matrix, with
/// every term stored on the upper triangle (`row <= col`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
    pub kind: ConstraintKind,
}

impl LinearConstraint {
    fn new(kind: ConstraintKind, relation: Relation, rhs: f64, terms: Vec<(usize, usize, f64)>) -> Self {
        let terms = terms
            .into_iter()
            .map(|(r, c, a)| if r <= c { (r, c, a) } else { (c, r, a) })
            .collect();
        Self {
            terms,
            relation,
            rhs,
            kind,
        }
    }

    /// Signed residual `lhs - rhs`.
    pub fn residual(&self, m: &nalgebra::DMatrix<f64>) -> f64 {
        self.terms.iter().map(|&(r, c, a)| a * m[(r, c)]).sum::<f64>() - self.rhs
    }

    /// Non-negative amount by which the constraint is violated.
    pub fn violation(&self, residual: f64) -> f64 {
        match self.relation {
            Relation::Eq => residual.abs(),
            Relation::Ge => (-residual).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelaxationKind {
    /// Norm, sum, non-edge and non-negativity constraints only.
    Weak,
    /// Weak plus the fractional-degree constraints.
    Strong,
}

/// Feasibility problem over one PSD matrix of dimension `1 + n_u + n_v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub layout: Layout,
    pub k: f64,
    pub relaxation: RelaxationKind,
    pub constraints: Vec<LinearConstraint>,
}

impl SdpProblem {
    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn label(&self) -> String {
        let name = match self.relaxation {
            RelaxationKind::Weak => "weak",
            RelaxationKind::Strong => "strong",
        };
        format!("{name} k={}", self.k)
    }

    /// One constraint per line: `<relation> <rhs> <row>:<col>:<coeff> ...`,
    /// preceded by a `sdp <dim> <count> <label>` header.
    pub fn to_sparse_text(&self) -> String {
        let mut out = format!("sdp {} {} {}\n", self.dim(), self.constraints.len(), self.label());
        for c in &self.constraints {
            let rel = match c.relation {
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = write!(out, "{rel} {:e}", c.rhs);
            for &(r, col, a) in &c.terms {
                let _ = write!(out, " {r}:{col}:{a:e}");
            }
            out.push('\n');
        }
        out
    }
}

fn check_k(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveK(k))
    }
}

fn base_constraints(g: &BipartiteGraph, k: f64) -> Vec<LinearConstraint> {
    use ConstraintKind::*;
    use Relation::*;
    let l = Layout::of(g);
    let mut out = Vec::new();
    out.push(LinearConstraint::new(UnitE, Eq, 1.0, vec![(0, 0, 1.0)]));
    for x in 1..l.dim() {
        out.push(LinearConstraint::new(NormLink, Eq, 0.0, vec![(x, x, 1.0), (0, x, -1.0)]));
    }
    out.push(LinearConstraint::new(SumU, Eq, k, l.u_range().map(|x| (0, x, 1.0)).collect()));
    out.push(LinearConstraint::new(SumV, Eq, k, l.v_range().map(|x| (0, x, 1.0)).collect()));
    for i in 0..g.n_u() {
        for j in 0..g.n_v() {
            if !g.adj(i, j) {
                out.push(LinearConstraint::new(NonEdge, Eq, 0.0, vec![(l.u(i), l.v(j), 1.0)]));
            }
        }
    }
    for i in 0..g.n_u() {
        for j in 0..g.n_v() {
            out.push(LinearConstraint::new(NonNeg, Ge, 0.0, vec![(l.u(i), l.v(j), 1.0)]));
        }
    }
    out
}

/// Relaxation without fractional-degree constraints. It admits `k = n/2` on
/// every graph, including the empty one.
pub fn build_weak_relaxation(g: &BipartiteGraph, k: f64) -> Result<SdpProblem> {
    check_k(k)?;
    Ok(SdpProblem {
        layout: Layout::of(g),
        k,
        relaxation: RelaxationKind::Weak,
        constraints: base_constraints(g, k),
    })
}

/// Weak relaxation plus, for every vertex, "sum of inner products with the
/// other side equals `k` times its mass".
pub fn build_strong_relaxation(g: &BipartiteGraph, k: f64) -> Result<SdpProblem> {
    check_k(k)?;
    let l = Layout::of(g);
    let mut constraints = base_constraints(g, k);
    for i in 0..g.n_u() {
        let mut terms: Vec<_> = (0..g.n_v()).map(|j| (l.u(i), l.v(j), 1.0)).collect();
        terms.push((0, l.u(i), -k));
        constraints.push(LinearConstraint::new(ConstraintKind::DegreeU, Relation::Eq, 0.0, terms));
    }
    for j in 0..g.n_v() {
        let mut terms: Vec<_> = (0..g.n_u()).map(|i| (l.u(i), l.v(j), 1.0)).collect();
        terms.push((0, l.v(j), -k));
        constraints.push(LinearConstraint::new(ConstraintKind::DegreeV, Relation::Eq, 0.0, terms));
    }
    Ok(SdpProblem {
        layout: l,
        k,
        relaxation: RelaxationKind::Strong,
        constraints,
    })
}
