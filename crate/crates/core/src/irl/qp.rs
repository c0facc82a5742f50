//! Minimum-norm separating hyperplane:
//!
//! ```text
//! minimise ||w||^2  subject to  mu_E . w >= 1,  mu_i . w <= -1
//! ```
//!
//! Solved with the Goldfarb-Idnani dual active-set method. All constraints
//! are rewritten as `a_j . w >= 1` with `a_0 = mu_E` and `a_i = -mu_i`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::NUM_FEATURES;

type Vec5 = [f64; NUM_FEATURES];

const MAX_ITERATIONS: usize = 500;
const FEASIBILITY_TOL: f64 = 1e-11;
const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("active-set solver did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("non-finite input in constraint {0}")]
    NonFinite(usize),
    #[error("singular active-set system")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub w: Vec5,
    pub status: QpStatus,
    /// Lagrange multipliers: index 0 for the expert constraint, then one per
    /// learner in input order.
    pub multipliers: Vec<f64>,
    pub kkt_residual: f64,
}

fn dot(a: &Vec5, b: &Vec5) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &Vec5) -> f64 {
    dot(a, a).sqrt()
}

/// Step directions for adding constraint `np` to the active set `active`:
/// primal `z = (I - N (N'N)^-1 N') np / 2`, dual `r = (N'N)^-1 N' np`.
/// Uses a thin QR of the active normals (Gram-Schmidt, applied twice).
fn directions(constraints: &[Vec5], active: &[usize], np: &Vec5) -> Result<(Vec5, Vec<f64>), QpError> {
    let k = active.len();
    let mut q: Vec<Vec5> = Vec::with_capacity(k);
    let mut r = vec![vec![0.0; k]; k];
    for (j, &c) in active.iter().enumerate() {
        let mut v = constraints[c];
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let proj = dot(qi, &v);
                r[i][j] += proj;
                for (vc, qc) in v.iter_mut().zip(qi) {
                    *vc -= proj * qc;
                }
            }
        }
        let nv = norm(&v);
        if nv == 0.0 {
            return Err(QpError::Singular);
        }
        r[j][j] = nv;
        q.push(v.map(|x| x / nv));
    }
    let mut z = *np;
    let mut qt_np = vec![0.0; k];
    for _ in 0..2 {
        for (i, qi) in q.iter().enumerate() {
            let proj = dot(qi, &z);
            qt_np[i] += proj;
            for (zc, qc) in z.iter_mut().zip(qi) {
                *zc -= proj * qc;
            }
        }
    }
    let mut coef = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r[i][j] * coef[j]).sum();
        coef[i] = (qt_np[i] - s) / r[i][i];
    }
    Ok((z.map(|v| 0.5 * v), coef))
}

/// Max-norm violation of the KKT conditions for `a_j . w >= 1`.
pub fn kkt_residual(constraints: &[Vec5], w: &Vec5, lambda: &[f64]) -> f64 {
    let mut stationarity = w.map(|v| 2.0 * v);
    for (a, l) in constraints.iter().zip(lambda) {
        for (s, ac) in stationarity.iter_mut().zip(a) {
            *s -= l * ac;
        }
    }
    let mut res = stationarity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, &l) in constraints.iter().zip(lambda) {
        let slack = dot(a, w) - 1.0;
        res = res.max((-slack).max(0.0)).max((-l).max(0.0)).max((l * slack).abs());
    }
    res
}

pub fn solve_min_norm_svm(mu_expert: &Vec5, mu_learners: &[Vec5]) -> Result<QpSolution, QpError> {
    let mut constraints = Vec::with_capacity(mu_learners.len() + 1);
    constraints.push(*mu_expert);
    constraints.extend(mu_learners.iter().map(|m| m.map(|v| -v)));
    if let Some(i) = constraints.iter().position(|a| a.iter().any(|v| !v.is_finite())) {
        return Err(QpError::NonFinite(i));
    }

    let m = constraints.len();
    let mut w = [0.0; NUM_FEATURES];
    let mut lambda = vec![0.0; m];
    let mut active: Vec<usize> = Vec::new();

    let infeasible = |w: Vec5, lambda: Vec<f64>| {
        let kkt_residual = kkt_residual(&constraints, &w, &lambda);
        Ok(QpSolution { w, status: QpStatus::Infeasible, multipliers: lambda, kkt_residual })
    };

    let mut iterations = 0;
    loop {
        // Pick the most violated constraint, scaled by its norm.
        let mut pick: Option<(usize, f64)> = None;
        for (j, a) in constraints.iter().enumerate() {
            if active.contains(&j) {
                continue;
            }
            let slack = dot(a, &w) - 1.0;
            let scale = norm(a).max(1.0);
            if slack < -FEASIBILITY_TOL * scale && pick.is_none_or(|(_, s)| slack / scale < s) {
                pick = Some((j, slack / scale));
            }
        }
        let Some((p, _)) = pick else {
            let kkt_residual = kkt_residual(&constraints, &w, &lambda);
            return Ok(QpSolution { w, status: QpStatus::Optimal, multipliers: lambda, kkt_residual });
        };
        let np = constraints[p];

        // Inner loop: keep stepping until p becomes active.
        loop {
            iterations += 1;
            if iterations > MAX_ITERATIONS {
                return Err(QpError::NoConvergence(MAX_ITERATIONS));
            }
            let (z, r) = directions(&constraints, &active, &np)?;
            let slack_p = dot(&np, &w) - 1.0;

            let mut partial: Option<(f64, usize)> = None;
            for (k, (&j, &rk)) in active.iter().zip(&r).enumerate() {
                if rk > 0.0 {
                    let t = lambda[j] / rk;
                    if partial.is_none_or(|(best, _)| t < best) {
                        partial = Some((t, k));
                    }
                }
            }
            let z_degenerate = norm(&z) <= DEGENERACY_TOL * norm(&np).max(1.0);
            let full = if z_degenerate { None } else { Some(-slack_p / dot(&z, &np)) };

            let (t, drop) = match (full, partial) {
                (None, None) => return infeasible(w, lambda),
                (None, Some((t1, k))) => (t1, Some(k)),
                (Some(t2), None) => (t2, None),
                (Some(t2), Some((t1, k))) => {
                    if t1 < t2 {
                        (t1, Some(k))
                    } else {
                        (t2, None)
                    }
                }
            };

            if !z_degenerate {
                for (wc, zc) in w.iter_mut().zip(&z) {
                    *wc += t * zc;
                }
            }
            for (&j, rk) in active.iter().zip(&r) {
                lambda[j] = (lambda[j] - t * rk).max(0.0);
            }
            lambda[p] += t;

            match drop {
                None => {
                    active.push(p);
                    break;
                }
                Some(k) => {
                    let j = active.remove(k);
                    lambda[j] = 0.0;
                }
            }
        }
    }
}
