//! First-order equilibrium check for candidate configurations.
//!
//! A feasible configuration is optimal iff, at every chain vertex, minus
//! the sum of the weighted unit "forces" acting on it lies in the normal
//! cone of its set, and likewise at the hub. The forces are the subgradient
//! blocks, so the residuals here share their implementation with
//! [`crate::subgradient`].
//!
//! Residuals are divided by the total weight meeting at their vertex before
//! the cone test. Normal cones are cones, so this does not change exact
//! membership, but it makes `tol` a dimensionless fraction of the largest
//! force the vertex can feel and the verdict invariant under rescaling all
//! weights.

use serde::{Deserialize, Serialize};

use crate::error::{GhwpError, Result};
use crate::point::Point;
use crate::problem::{Configuration, DisjointnessReport, Problem};
use crate::subgradient::add_unit_term;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Residual {
    Force(Point),
    /// A positively weighted term involves two coincident points, where the
    /// unit-vector formula is undefined.
    Indeterminate,
}

impl Residual {
    pub fn force(&self) -> Option<&Point> {
        match self {
            Residual::Force(p) => Some(p),
            Residual::Indeterminate => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    OptimalWithinTol,
    NotOptimal,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityReport {
    pub tolerance: f64,
    pub chain_residuals: Vec<Residual>,
    pub hub_residual: Residual,
    pub chain_normal_ok: Vec<bool>,
    pub hub_normal_ok: bool,
    /// `|sum_i n_i + n_S|` with `n = -residual`, over determinate blocks.
    pub global_balance_norm: f64,
    pub verdict: Verdict,
    /// Sets closer than the verification tolerance. The equilibrium
    /// characterisation assumes pairwise disjoint sets.
    pub overlaps: DisjointnessReport,
}

impl OptimalityReport {
    pub fn indeterminate_vertices(&self) -> Vec<usize> {
        self.chain_residuals
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, Residual::Indeterminate))
            .map(|(i, _)| i)
            .collect()
    }
}

fn collect_force(terms: &[(f64, &Point, &Point)], dim: usize) -> Residual {
    let mut force = vec![0.0; dim];
    for &(w, from, to) in terms {
        if !add_unit_term(&mut force, w, from, to) && w > 0.0 {
            return Residual::Indeterminate;
        }
    }
    Residual::Force(Point::from_raw(force))
}

/// Sum of weighted unit vectors pulling chain vertex `i` away from its
/// neighbours and from the hub.
pub fn chain_residual(p: &Problem, u: &Configuration, i: usize) -> Result<Residual> {
    p.check_config(u)?;
    if i >= p.len() {
        return Err(GhwpError::invalid(format!(
            "chain index {i} out of range for {} vertices",
            p.len()
        )));
    }
    Ok(chain_residual_unchecked(p, u, i))
}

fn chain_residual_unchecked(p: &Problem, u: &Configuration, i: usize) -> Residual {
    let m = p.len();
    let w = p.weights();
    let a = &u.chain_points;
    collect_force(
        &[
            (w.rho_prev(i), &a[i], &a[(i + m - 1) % m]),
            (w.rho[i], &a[i], &a[(i + 1) % m]),
            (w.omega[i], &a[i], &u.hub_point),
        ],
        p.dim(),
    )
}

pub fn hub_residual(p: &Problem, u: &Configuration) -> Result<Residual> {
    p.check_config(u)?;
    Ok(hub_residual_unchecked(p, u))
}

fn hub_residual_unchecked(p: &Problem, u: &Configuration) -> Residual {
    let terms: Vec<_> = u
        .chain_points
        .iter()
        .zip(&p.weights().omega)
        .map(|(a, &w)| (w, &u.hub_point, a))
        .collect();
    collect_force(&terms, p.dim())
}

/// Checks the equilibrium conditions at `u`, which must be feasible within
/// `tol`.
pub fn verify(p: &Problem, u: &Configuration, tol: f64) -> Result<OptimalityReport> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(GhwpError::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let gap = u.infeasibility(p)?;
    if gap > tol {
        return Err(GhwpError::invalid(format!(
            "configuration is {gap:e} away from the feasible set (tol {tol:e})"
        )));
    }
    let w = p.weights();

    let chain_residuals: Vec<Residual> = (0..p.len())
        .map(|i| chain_residual_unchecked(p, u, i))
        .collect();
    let hub_residual = hub_residual_unchecked(p, u);

    let in_cone = |set: &crate::ConvexSet, at: &Point, r: &Residual, weight: f64| -> Result<bool> {
        match r {
            Residual::Indeterminate => Ok(false),
            Residual::Force(f) => {
                let scale = if weight > 0.0 { -1.0 / weight } else { -1.0 };
                set.normal_cone_contains(at, &f.scale(scale), tol)
            }
        }
    };
    let chain_normal_ok = chain_residuals
        .iter()
        .enumerate()
        .map(|(i, r)| {
            in_cone(
                &p.chain_sets()[i],
                &u.chain_points[i],
                r,
                w.vertex_weight(i),
            )
        })
        .collect::<Result<Vec<bool>>>()?;
    let omega_total: f64 = w.omega.iter().sum();
    let hub_normal_ok = in_cone(p.hub_set(), &u.hub_point, &hub_residual, omega_total)?;

    let mut balance = vec![0.0; p.dim()];
    for f in chain_residuals
        .iter()
        .chain(std::iter::once(&hub_residual))
        .filter_map(Residual::force)
    {
        for (b, c) in balance.iter_mut().zip(f.coords()) {
            *b -= c;
        }
    }
    let global_balance_norm = Point::from_raw(balance).norm();

    let indeterminate = chain_residuals
        .iter()
        .chain(std::iter::once(&hub_residual))
        .any(|r| matches!(r, Residual::Indeterminate));
    let verdict = if indeterminate {
        Verdict::Indeterminate
    } else if hub_normal_ok && chain_normal_ok.iter().all(|&ok| ok) {
        Verdict::OptimalWithinTol
    } else {
        Verdict::NotOptimal
    };

    Ok(OptimalityReport {
        tolerance: tol,
        chain_residuals,
        hub_residual,
        chain_normal_ok,
        hub_normal_ok,
        global_balance_norm,
        verdict,
        overlaps: p.check_pairwise_disjoint(tol)?,
    })
}
