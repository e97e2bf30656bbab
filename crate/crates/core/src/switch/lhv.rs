//! Local-hidden-variable membership for 2×2 binary behaviors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::behavior::Behavior;
use crate::error::{Error, Result};

/// Residual below which the NNLS fit counts as an exact convex decomposition.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// CHSH expression `Σ_xy (−1)^{[x=i ∧ y=j]} E_xy`, optionally negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChshFacet {
    pub minus_x: usize,
    pub minus_y: usize,
    pub negated: bool,
}

impl ChshFacet {
    pub fn all() -> Vec<ChshFacet> {
        let mut out = Vec::with_capacity(8);
        for negated in [false, true] {
            for minus_x in 0..2 {
                for minus_y in 0..2 {
                    out.push(ChshFacet { minus_x, minus_y, negated });
                }
            }
        }
        out
    }

    pub fn value(&self, b: &Behavior) -> f64 {
        let mut s = 0.0;
        for x in 0..2 {
            for y in 0..2 {
                let sign = if x == self.minus_x && y == self.minus_y { -1.0 } else { 1.0 };
                s += sign * b.correlator(x, y);
            }
        }
        if self.negated {
            -s
        } else {
            s
        }
    }
}

/// Deterministic strategy `(α₀, α₁, β₀, β₁)`.
pub type Vertex = [usize; 4];

pub fn vertices() -> Vec<Vertex> {
    (0..16).map(|k| [k >> 3 & 1, k >> 2 & 1, k >> 1 & 1, k & 1]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhvResult {
    pub feasible: bool,
    /// Euclidean residual of the best nonnegative fit.
    pub residual: f64,
    /// Nonzero vertex weights of the fit (reported when feasible).
    pub decomposition: Vec<(Vertex, f64)>,
    /// Largest CHSH facet value (local bound 2).
    pub facet_value: f64,
    pub facet: ChshFacet,
}

/// `min ‖A w − b‖` subject to `w ≥ 0` (Lawson–Hanson active set).
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut w = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12;
    for _ in 0..(3 * n + 10) {
        let grad = a.transpose() * (b - a * &w);
        let cand = (0..n).filter(|&j| !passive[j] && grad[j] > tol).max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = cand else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&k| passive[k]).collect();
            let sub = DMatrix::from_fn(a.nrows(), idx.len(), |r, c| a[(r, idx[c])]);
            let z_sub = sub.clone().svd(true, true).solve(b, 1e-14).expect("SVD solve");
            if idx.iter().enumerate().all(|(c, _)| z_sub[c] > 0.0) {
                for (c, &k) in idx.iter().enumerate() {
                    w[k] = z_sub[c];
                }
                break;
            }
            // step back toward the feasible region
            let mut alpha = f64::INFINITY;
            for (c, &k) in idx.iter().enumerate() {
                if z_sub[c] <= 0.0 {
                    alpha = alpha.min(w[k] / (w[k] - z_sub[c]));
                }
            }
            for (c, &k) in idx.iter().enumerate() {
                w[k] += alpha * (z_sub[c] - w[k]);
                if w[k].abs() < tol {
                    w[k] = 0.0;
                    passive[k] = false;
                }
            }
        }
    }
    w
}

/// Decide membership in the local polytope of the 2-input/2-output scenario.
pub fn lhv_membership(b: &Behavior) -> Result<LhvResult> {
    if b.nx() != 2 || b.ny() != 2 {
        return Err(Error::MalformedBehavior(format!(
            "LHV check needs 2 inputs per side, found {}×{}",
            b.nx(),
            b.ny()
        )));
    }
    let verts = vertices();
    let a = DMatrix::from_fn(16, 16, |row, col| {
        let v = verts[col];
        let (x, y, aa, bb) = (row >> 3 & 1, row >> 2 & 1, row >> 1 & 1, row & 1);
        if v[x] == aa && v[2 + y] == bb {
            1.0
        } else {
            0.0
        }
    });
    let target = DVector::from_fn(16, |row, _| b.p(row >> 1 & 1, row & 1, row >> 3 & 1, row >> 2 & 1));
    let w = nnls(&a, &target);
    let residual = (&a * &w - &target).norm();
    let feasible = residual <= FEASIBILITY_TOL;
    let decomposition = if feasible {
        verts.iter().zip(w.iter()).filter(|(_, &x)| x > 1e-12).map(|(v, &x)| (*v, x)).collect()
    } else {
        Vec::new()
    };
    let (facet, facet_value) = ChshFacet::all()
        .into_iter()
        .map(|f| (f, f.value(b)))
        .max_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap();
    Ok(LhvResult { feasible, residual, decomposition, facet_value, facet })
}
