//! Problem definition, objective evaluation and structural diagnostics.
//!
//! Chain indices are zero-based throughout the library and wrap cyclically:
//! vertex `m - 1` is followed by vertex `0`, and `rho[i]` weighs the edge
//! from vertex `i` to vertex `i + 1`.

use std::fmt;

use serde::Serialize;

use crate::error::{GhwpError, Result};
use crate::geometry::ConvexSet;
use crate::point::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    /// Waist weights on the chain edges.
    pub rho: Vec<f64>,
    /// Radial weights on the hub connections.
    pub omega: Vec<f64>,
}

impl Weights {
    pub fn new(rho: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        if rho.len() != omega.len() {
            return Err(GhwpError::structural(
                "omega",
                format!("has {} entries but rho has {}", omega.len(), rho.len()),
            ));
        }
        for (name, w) in [("rho", &rho), ("omega", &omega)] {
            if let Some((i, v)) = w
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
            {
                return Err(GhwpError::structural(
                    format!("{name}[{i}]"),
                    format!("weights must be finite and nonnegative, got {v}"),
                ));
            }
        }
        Ok(Weights { rho, omega })
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Weight of the edge entering vertex `i`.
    pub fn rho_prev(&self, i: usize) -> f64 {
        let m = self.rho.len();
        self.rho[(i + m - 1) % m]
    }

    /// `rho[i-1] + rho[i] + omega[i]`, the largest force vertex `i` can feel.
    pub fn vertex_weight(&self, i: usize) -> f64 {
        self.rho_prev(i) + self.rho[i] + self.omega[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProblemOptions {
    /// Accept two-vertex chains. The perimeter formula is then applied
    /// literally, so the single segment is counted once per weight.
    pub allow_two_chain: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    dim: usize,
    chain_sets: Vec<ConvexSet>,
    hub_set: ConvexSet,
    weights: Weights,
}

impl Problem {
    /// Validates dimensions and lengths. Nondegeneracy is checked separately
    /// (see [`Problem::check_nondegeneracy`]) so degenerate instances can
    /// still be diagnosed; the solver refuses them.
    pub fn new(chain_sets: Vec<ConvexSet>, hub_set: ConvexSet, weights: Weights) -> Result<Self> {
        Self::with_options(chain_sets, hub_set, weights, ProblemOptions::default())
    }

    pub fn with_options(
        chain_sets: Vec<ConvexSet>,
        hub_set: ConvexSet,
        weights: Weights,
        options: ProblemOptions,
    ) -> Result<Self> {
        let m = chain_sets.len();
        let min_len = if options.allow_two_chain { 2 } else { 3 };
        if m < min_len {
            return Err(GhwpError::structural(
                "chain_sets",
                format!("chain needs at least {min_len} sets, got {m}"),
            ));
        }
        if weights.rho.len() != m {
            return Err(GhwpError::structural(
                "rho",
                format!("has {} entries for {m} chain sets", weights.rho.len()),
            ));
        }
        if weights.omega.len() != m {
            return Err(GhwpError::structural(
                "omega",
                format!("has {} entries for {m} chain sets", weights.omega.len()),
            ));
        }
        let dim = hub_set.dim();
        if let Some(i) = chain_sets.iter().position(|s| s.dim() != dim) {
            return Err(GhwpError::structural(
                format!("chain_sets[{i}]"),
                format!(
                    "dimension {} differs from hub dimension {dim}",
                    chain_sets[i].dim()
                ),
            ));
        }
        Ok(Problem {
            dim,
            chain_sets,
            hub_set,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of chain vertices.
    pub fn len(&self) -> usize {
        self.chain_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain_sets.is_empty()
    }

    pub fn chain_sets(&self) -> &[ConvexSet] {
        &self.chain_sets
    }

    pub fn hub_set(&self) -> &ConvexSet {
        &self.hub_set
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Relabels the chain so that vertex `i + 1` becomes vertex `i`.
    pub fn rotated(&self) -> Problem {
        let mut p = self.clone();
        p.chain_sets.rotate_left(1);
        p.weights.rho.rotate_left(1);
        p.weights.omega.rotate_left(1);
        p
    }

    pub fn check_config(&self, u: &Configuration) -> Result<()> {
        if u.chain_points.len() != self.len() {
            return Err(GhwpError::invalid(format!(
                "configuration has {} chain points, problem has {}",
                u.chain_points.len(),
                self.len()
            )));
        }
        for (i, a) in u.chain_points.iter().enumerate() {
            a.check_dim(self.dim, &format!("chain point {i}"))?;
        }
        u.hub_point.check_dim(self.dim, "hub point")
    }

    /// Weighted closed-chain perimeter plus weighted hub distances. Defined
    /// for any configuration of matching shape, feasible or not.
    pub fn objective(&self, u: &Configuration) -> Result<f64> {
        self.check_config(u)?;
        Ok(self.objective_unchecked(u))
    }

    pub(crate) fn objective_unchecked(&self, u: &Configuration) -> f64 {
        let a = &u.chain_points;
        let m = a.len();
        let waist: f64 = (0..m)
            .map(|i| self.weights.rho[i] * a[i].distance_to(&a[(i + 1) % m]))
            .sum();
        let heron: f64 = (0..m)
            .map(|i| self.weights.omega[i] * a[i].distance_to(&u.hub_point))
            .sum();
        waist + heron
    }

    /// Vertices `k` with `rho[k-1] + rho[k] + omega[k] == 0`. Such a vertex
    /// does not appear in the objective at all.
    pub fn check_nondegeneracy(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| self.weights.vertex_weight(k) == 0.0)
            .collect()
    }

    pub fn require_nondegenerate(&self) -> Result<()> {
        let bad = self.check_nondegeneracy();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(GhwpError::structural(
                "weights",
                format!("vertices {bad:?} carry no weight (rho[k-1] + rho[k] + omega[k] = 0)"),
            ))
        }
    }

    /// Splits the chain into components linked by positive waist weights.
    /// Edges are undirected; the hub joins every component that has a
    /// vertex with positive radial weight.
    pub fn connected_components(&self) -> Result<Vec<Component>> {
        self.require_nondegenerate()?;
        let m = self.len();
        let rho = &self.weights.rho;
        if rho.iter().all(|&r| r > 0.0) {
            return Ok(vec![self.component((0..m).collect())]);
        }
        // Start right after a missing edge so every run is contiguous.
        let start = (0..m)
            .find(|&i| rho[i] == 0.0)
            .map(|i| (i + 1) % m)
            .unwrap_or(0);
        let mut components = Vec::new();
        let mut run = Vec::new();
        for step in 0..m {
            let i = (start + step) % m;
            run.push(i);
            if rho[i] == 0.0 {
                components.push(std::mem::take(&mut run));
            }
        }
        let mut components: Vec<Component> = components
            .into_iter()
            .map(|mut idx| {
                idx.sort_unstable();
                self.component(idx)
            })
            .collect();
        components.sort_by_key(|c| c.indices[0]);
        Ok(components)
    }

    fn component(&self, indices: Vec<usize>) -> Component {
        let includes_hub = indices.iter().any(|&k| self.weights.omega[k] > 0.0);
        Component {
            indices,
            includes_hub,
        }
    }

    /// Checks the boundedness conditions that guarantee a minimiser exists:
    /// every component attached to the hub needs a bounded member or a
    /// bounded hub set, every free component needs a bounded member.
    pub fn check_existence(&self) -> Result<ExistenceReport> {
        let components = self.connected_components()?;
        let hub_bounded = self.hub_set.is_bounded();
        let findings = components
            .into_iter()
            .map(|component| {
                let member = component
                    .indices
                    .iter()
                    .copied()
                    .find(|&k| self.chain_sets[k].is_bounded());
                let witness = match (member, component.includes_hub && hub_bounded) {
                    (Some(k), _) => Some(BoundedWitness::Chain(k)),
                    (None, true) => Some(BoundedWitness::Hub),
                    (None, false) => None,
                };
                ComponentExistence { component, witness }
            })
            .collect();
        Ok(ExistenceReport { findings })
    }

    /// Every pair of sets (chain-chain and chain-hub) lying within `margin`
    /// of each other.
    pub fn check_pairwise_disjoint(&self, margin: f64) -> Result<DisjointnessReport> {
        let mut sets: Vec<(SetId, &ConvexSet)> = self
            .chain_sets
            .iter()
            .enumerate()
            .map(|(i, s)| (SetId::Chain(i), s))
            .collect();
        sets.push((SetId::Hub, &self.hub_set));
        let mut close_pairs = Vec::new();
        for (i, (id_a, a)) in sets.iter().enumerate() {
            for (id_b, b) in &sets[i + 1..] {
                let distance = a.set_distance(b)?;
                if distance <= margin {
                    close_pairs.push(ClosePair {
                        first: *id_a,
                        second: *id_b,
                        distance,
                    });
                }
            }
        }
        Ok(DisjointnessReport {
            margin,
            close_pairs,
        })
    }

    /// Strict convexity of every set with positive weights rules out ties
    /// between minimisers. Balls and points are the only strictly convex
    /// shapes here.
    pub fn uniqueness_note(&self) -> Option<&'static str> {
        let strict =
            |s: &ConvexSet| matches!(s, ConvexSet::Ball { .. } | ConvexSet::Singleton { .. });
        let positive = self
            .weights
            .rho
            .iter()
            .chain(&self.weights.omega)
            .all(|&w| w > 0.0);
        (positive && self.chain_sets.iter().all(strict) && strict(&self.hub_set)).then_some(
            "all sets are strictly convex and all weights positive: the minimiser is unique",
        )
    }
}

/// A candidate solution: one point per chain set plus the hub point.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub chain_points: Vec<Point>,
    pub hub_point: Point,
}

impl Configuration {
    pub fn new(chain_points: Vec<Point>, hub_point: Point) -> Self {
        Configuration {
            chain_points,
            hub_point,
        }
    }

    /// All blocks in order `a_0, ..., a_{m-1}, x`.
    pub fn blocks(&self) -> impl Iterator<Item = &Point> {
        self.chain_points
            .iter()
            .chain(std::iter::once(&self.hub_point))
    }

    pub(crate) fn blocks_mut(&mut self) -> impl Iterator<Item = &mut Point> {
        self.chain_points
            .iter_mut()
            .chain(std::iter::once(&mut self.hub_point))
    }

    pub fn dot(&self, other: &Configuration) -> f64 {
        self.blocks()
            .zip(other.blocks())
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance_to(&self, other: &Configuration) -> f64 {
        self.blocks()
            .zip(other.blocks())
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// `self + s * dir`, blockwise.
    pub fn axpy(&self, s: f64, dir: &Configuration) -> Configuration {
        let mut out = self.clone();
        for (a, d) in out.blocks_mut().zip(dir.blocks()) {
            a.add_scaled_in_place(s, d);
        }
        out
    }

    pub fn rotated(&self) -> Configuration {
        let mut c = self.clone();
        c.chain_points.rotate_left(1);
        c
    }

    /// Largest violation of block membership.
    pub fn infeasibility(&self, p: &Problem) -> Result<f64> {
        p.check_config(self)?;
        let mut worst: f64 = 0.0;
        for (a, s) in self.chain_points.iter().zip(p.chain_sets()) {
            worst = worst.max(s.distance(a)?);
        }
        Ok(worst.max(p.hub_set().distance(&self.hub_point)?))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    /// Sorted chain indices.
    pub indices: Vec<usize>,
    pub includes_hub: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundedWitness {
    Chain(usize),
    Hub,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentExistence {
    pub component: Component,
    /// The bounded set that makes the component coercive, if any.
    pub witness: Option<BoundedWitness>,
}

impl ComponentExistence {
    pub fn satisfied(&self) -> bool {
        self.witness.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceReport {
    pub findings: Vec<ComponentExistence>,
}

impl ExistenceReport {
    pub fn satisfied(&self) -> bool {
        self.findings.iter().all(ComponentExistence::satisfied)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SetId {
    Chain(usize),
    Hub,
}

impl fmt::Display for SetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetId::Chain(i) => write!(f, "C{}", i + 1),
            SetId::Hub => write!(f, "S"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosePair {
    pub first: SetId,
    pub second: SetId,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisjointnessReport {
    pub margin: f64,
    pub close_pairs: Vec<ClosePair>,
}

impl DisjointnessReport {
    pub fn is_clear(&self) -> bool {
        self.close_pairs.is_empty()
    }
}
