//! Closed-form subgradients of the objective and their uniform bound.

use crate::error::{GhwpError, Result};
use crate::point::Point;
use crate::problem::{Configuration, Problem};

/// Differences shorter than this are treated as coincident points.
pub const COINCIDENCE_THRESHOLD: f64 = 1e-15;

/// How to pick a subgradient when two points coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoincidenceRule {
    /// Drop only the offending unit-vector term (`0` is a subgradient of the
    /// norm at the origin).
    #[default]
    PerTerm,
    /// Zero the whole chain block as soon as one of its terms is degenerate.
    WholeBlock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientVector {
    pub chain_grads: Vec<Point>,
    pub hub_grad: Point,
}

impl SubgradientVector {
    pub fn norm(&self) -> f64 {
        self.as_configuration().norm()
    }

    /// Views the subgradient as a direction in configuration space.
    pub fn as_configuration(&self) -> Configuration {
        Configuration::new(self.chain_grads.clone(), self.hub_grad.clone())
    }

    pub fn into_configuration(self) -> Configuration {
        Configuration::new(self.chain_grads, self.hub_grad)
    }
}

/// Accumulates `weight * (from - to) / |from - to|` into `acc`. Returns
/// false (and adds nothing) when the points coincide.
pub(crate) fn add_unit_term(acc: &mut [f64], weight: f64, from: &Point, to: &Point) -> bool {
    let len = from.distance_to(to);
    if len < COINCIDENCE_THRESHOLD {
        return false;
    }
    if weight != 0.0 {
        for ((g, f), t) in acc.iter_mut().zip(from.coords()).zip(to.coords()) {
            *g += weight * ((f - t) / len);
        }
    }
    true
}

/// Force at chain vertex `i`: the weighted unit vectors pointing from its
/// two chain neighbours and from the hub towards `a_i`.
pub fn chain_subgradient(p: &Problem, u: &Configuration, i: usize) -> Result<Point> {
    chain_subgradient_with(p, u, i, CoincidenceRule::PerTerm)
}

pub fn chain_subgradient_with(
    p: &Problem,
    u: &Configuration,
    i: usize,
    rule: CoincidenceRule,
) -> Result<Point> {
    p.check_config(u)?;
    if i >= p.len() {
        return Err(GhwpError::invalid(format!(
            "chain index {i} out of range for {} vertices",
            p.len()
        )));
    }
    Ok(chain_block(p, u, i, rule))
}

pub(crate) fn chain_block(
    p: &Problem,
    u: &Configuration,
    i: usize,
    rule: CoincidenceRule,
) -> Point {
    let m = p.len();
    let w = p.weights();
    let a = &u.chain_points;
    let prev = &a[(i + m - 1) % m];
    let next = &a[(i + 1) % m];
    let mut g = vec![0.0; p.dim()];
    let all_regular = [
        add_unit_term(&mut g, w.rho_prev(i), &a[i], prev),
        add_unit_term(&mut g, w.rho[i], &a[i], next),
        add_unit_term(&mut g, w.omega[i], &a[i], &u.hub_point),
    ]
    .iter()
    .all(|&ok| ok);
    if rule == CoincidenceRule::WholeBlock && !all_regular {
        g.iter_mut().for_each(|c| *c = 0.0);
    }
    Point::from_raw(g)
}

/// Force at the hub: weighted unit vectors from each chain vertex towards
/// `x`.
pub fn hub_subgradient(p: &Problem, u: &Configuration) -> Result<Point> {
    p.check_config(u)?;
    Ok(hub_block(p, u))
}

pub(crate) fn hub_block(p: &Problem, u: &Configuration) -> Point {
    let mut g = vec![0.0; p.dim()];
    for (a, &w) in u.chain_points.iter().zip(&p.weights().omega) {
        add_unit_term(&mut g, w, &u.hub_point, a);
    }
    Point::from_raw(g)
}

pub fn full_subgradient(p: &Problem, u: &Configuration) -> Result<SubgradientVector> {
    full_subgradient_with(p, u, CoincidenceRule::PerTerm)
}

pub fn full_subgradient_with(
    p: &Problem,
    u: &Configuration,
    rule: CoincidenceRule,
) -> Result<SubgradientVector> {
    p.check_config(u)?;
    Ok(full_unchecked(p, u, rule))
}

pub(crate) fn full_unchecked(
    p: &Problem,
    u: &Configuration,
    rule: CoincidenceRule,
) -> SubgradientVector {
    SubgradientVector {
        chain_grads: (0..p.len()).map(|i| chain_block(p, u, i, rule)).collect(),
        hub_grad: hub_block(p, u),
    }
}

/// Uniform bound on the norm of every subgradient the formulas above can
/// return:
///
/// `G = sqrt(m * (max_j (rho_j + rho_{j+1}) + max_j omega_j)^2 + (sum omega)^2)`
pub fn subgradient_bound(p: &Problem) -> f64 {
    let w = p.weights();
    let m = w.len();
    let max_pair = (0..m)
        .map(|j| w.rho[j] + w.rho[(j + 1) % m])
        .fold(0.0, f64::max);
    let max_omega = w.omega.iter().copied().fold(0.0, f64::max);
    let omega_sum: f64 = w.omega.iter().sum();
    (m as f64 * (max_pair + max_omega).powi(2) + omega_sum.powi(2)).sqrt()
}
