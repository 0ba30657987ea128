//! Projected subgradient iteration with diminishing steps.
//!
//! Each step evaluates a subgradient `g` at the current configuration `u`,
//! moves to `u - alpha_k g` and projects every block back onto its own set.
//! Subgradient steps do not decrease the objective monotonically, so the
//! solver keeps the best configuration seen so far and returns that one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GhwpError, Result};
use crate::geometry::MEMBERSHIP_TOL;
use crate::problem::{Configuration, Problem};
use crate::subgradient::{full_unchecked, CoincidenceRule};

/// Stagnation tolerances whose first crossing is recorded in every run.
pub const CHECKPOINT_TOLERANCES: [f64; 5] = [1e-4, 1e-6, 1e-8, 1e-10, 1e-12];

/// Every iteration up to this count is traced; later ones are thinned.
pub const TRACE_DENSE_LIMIT: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    /// `c / k`
    Harmonic,
    /// `c / (k + offset)`
    HarmonicOffset { offset: f64 },
    /// `c / sqrt(k)`. The squared steps are not summable, so convergence of
    /// the best objective is not guaranteed. Diagnostic use only.
    SqrtDecay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub step_rule: StepRule,
    pub step_scale: f64,
    /// Stop once `|J(u_{k+1}) - J(u_k)|` drops below this.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Also stop when the subgradient norm drops below `tolerance`.
    pub stop_on_gradient: bool,
    pub trace_stride: usize,
    pub coincidence_rule: CoincidenceRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            step_rule: StepRule::Harmonic,
            step_scale: 1.0,
            tolerance: 1e-12,
            max_iter: 10_000_000,
            stop_on_gradient: false,
            trace_stride: 1,
            coincidence_rule: CoincidenceRule::PerTerm,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_scale.is_finite() && self.step_scale > 0.0) {
            return Err(GhwpError::invalid(format!(
                "step scale must be positive, got {}",
                self.step_scale
            )));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(GhwpError::invalid(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iter == 0 || self.trace_stride == 0 {
            return Err(GhwpError::invalid(
                "max_iter and trace_stride must be positive",
            ));
        }
        if let StepRule::HarmonicOffset { offset } = self.step_rule {
            if !(offset.is_finite() && offset >= 0.0) {
                return Err(GhwpError::invalid(format!(
                    "step offset must be nonnegative, got {offset}"
                )));
            }
        }
        Ok(())
    }

    fn records(&self, k: usize) -> bool {
        k.is_multiple_of(self.trace_stride)
            && (k <= TRACE_DENSE_LIMIT || k.is_multiple_of(k.div_ceil(TRACE_DENSE_LIMIT)))
    }
}

/// Step length for iteration `k`, counting from 1.
pub fn step_size(cfg: &SolverConfig, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(GhwpError::invalid("iterations are counted from 1"));
    }
    let k = k as f64;
    let c = cfg.step_scale;
    Ok(match cfg.step_rule {
        StepRule::Harmonic => c / k,
        StepRule::HarmonicOffset { offset } => c / (k + offset),
        StepRule::SqrtDecay => c / k.sqrt(),
    })
}

/// Projects each block onto its own set; this is the exact projection onto
/// the product of the sets.
pub fn project_feasible(p: &Problem, u: &Configuration) -> Result<Configuration> {
    p.check_config(u)?;
    Ok(project_unchecked(p, u))
}

fn project_unchecked(p: &Problem, u: &Configuration) -> Configuration {
    Configuration {
        chain_points: u
            .chain_points
            .iter()
            .zip(p.chain_sets())
            .map(|(a, s)| s.project_unchecked(a))
            .collect(),
        hub_point: p.hub_set().project_unchecked(&u.hub_point),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    ProjectGiven(Configuration),
    /// One representative point per set (see [`crate::ConvexSet::anchor`]).
    SetAnchors,
}

pub fn initialize(p: &Problem, strategy: &InitStrategy) -> Result<Configuration> {
    match strategy {
        InitStrategy::ProjectGiven(u) => project_feasible(p, u),
        InitStrategy::SetAnchors => Ok(Configuration {
            chain_points: p.chain_sets().iter().map(|s| s.anchor()).collect(),
            hub_point: p.hub_set().anchor(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    /// Objective at the iterate produced by step `k`.
    pub objective: f64,
    pub best_objective: f64,
    pub step: f64,
    /// Norm of the subgradient used in step `k`.
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ObjectiveStagnation,
    GradientSmall,
    MaxIter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub tolerance: f64,
    /// First step whose objective change fell below `tolerance`.
    pub iteration: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub best_config: Configuration,
    pub best_objective: f64,
    pub last_config: Configuration,
    pub initial_objective: f64,
    /// The starting configuration was infeasible and had to be projected.
    pub initial_projected: bool,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub trace: Vec<TraceRecord>,
    pub checkpoints: Vec<Checkpoint>,
}

impl SolveResult {
    pub fn checkpoint(&self, tolerance: f64) -> Option<usize> {
        self.checkpoints
            .iter()
            .find(|c| c.tolerance == tolerance)
            .and_then(|c| c.iteration)
    }
}

/// Outcome of a single projected subgradient step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub k: usize,
    pub step: f64,
    pub grad_norm: f64,
    /// Objective before the step.
    pub previous_objective: f64,
    pub objective: f64,
    pub improved: bool,
}

/// Iteration state. [`solve`] drives it to a stopping rule; callers that
/// want to inspect every iterate can step it by hand.
#[derive(Debug, Clone)]
pub struct Psa<'a> {
    problem: &'a Problem,
    config: SolverConfig,
    k: usize,
    current: Configuration,
    objective: f64,
    best: Configuration,
    best_objective: f64,
}

impl<'a> Psa<'a> {
    /// `start` must be feasible; see [`initialize`].
    pub fn new(problem: &'a Problem, start: Configuration, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        problem.require_nondegenerate()?;
        let gap = start.infeasibility(problem)?;
        if gap > MEMBERSHIP_TOL {
            return Err(GhwpError::invalid(format!(
                "starting configuration is {gap:e} away from the feasible set"
            )));
        }
        let objective = problem.objective_unchecked(&start);
        Ok(Psa {
            problem,
            config,
            k: 0,
            best: start.clone(),
            current: start,
            objective,
            best_objective: objective,
        })
    }

    pub fn current(&self) -> &Configuration {
        &self.current
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn best(&self) -> (&Configuration, f64) {
        (&self.best, self.best_objective)
    }

    /// Number of completed steps.
    pub fn iterations(&self) -> usize {
        self.k
    }

    pub fn step(&mut self) -> StepInfo {
        self.k += 1;
        let k = self.k;
        // k >= 1, so the step is always defined
        let alpha = step_size(&self.config, k).expect("k >= 1");
        let g = full_unchecked(self.problem, &self.current, self.config.coincidence_rule)
            .into_configuration();
        let grad_norm = g.norm();
        let moved = self.current.axpy(-alpha, &g);
        self.current = project_unchecked(self.problem, &moved);
        let previous_objective = self.objective;
        self.objective = self.problem.objective_unchecked(&self.current);
        let improved = self.objective < self.best_objective;
        if improved {
            self.best_objective = self.objective;
            self.best.clone_from(&self.current);
        }
        StepInfo {
            k,
            step: alpha,
            grad_norm,
            previous_objective,
            objective: self.objective,
            improved,
        }
    }
}

/// Runs the projected subgradient method from `u0` until the objective
/// stagnates, the subgradient vanishes (if enabled) or `max_iter` is hit.
/// An infeasible `u0` is projected first.
pub fn solve(p: &Problem, u0: &Configuration, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    p.require_nondegenerate()?;
    let initial_projected = u0.infeasibility(p)? > MEMBERSHIP_TOL;
    let start = if initial_projected {
        project_feasible(p, u0)?
    } else {
        u0.clone()
    };
    let mut psa = Psa::new(p, start, cfg.clone())?;
    let initial_objective = psa.objective();
    if !initial_objective.is_finite() {
        return Err(GhwpError::Numerical {
            iteration: 0,
            message: "objective at the starting configuration is not finite".into(),
            trace: Vec::new(),
        });
    }

    let mut trace = Vec::new();
    let mut checkpoints: Vec<Checkpoint> = CHECKPOINT_TOLERANCES
        .iter()
        .map(|&tolerance| Checkpoint {
            tolerance,
            iteration: None,
        })
        .collect();

    let stop_reason = loop {
        let info = psa.step();
        let record = TraceRecord {
            k: info.k,
            objective: info.objective,
            best_objective: psa.best_objective,
            step: info.step,
            grad_norm: info.grad_norm,
        };
        if !info.objective.is_finite() {
            trace.push(record);
            return Err(GhwpError::Numerical {
                iteration: info.k,
                message: format!("objective became {}", info.objective),
                trace,
            });
        }
        let change = (info.objective - info.previous_objective).abs();
        for c in checkpoints.iter_mut().filter(|c| c.iteration.is_none()) {
            if change < c.tolerance {
                c.iteration = Some(info.k);
            }
        }
        let reason = if cfg.stop_on_gradient && info.grad_norm < cfg.tolerance {
            Some(StopReason::GradientSmall)
        } else if change < cfg.tolerance {
            Some(StopReason::ObjectiveStagnation)
        } else if info.k >= cfg.max_iter {
            Some(StopReason::MaxIter)
        } else {
            None
        };
        if reason.is_some() || cfg.records(info.k) {
            trace.push(record);
        }
        if let Some(reason) = reason {
            break reason;
        }
    };

    let (best, best_objective) = psa.best();
    Ok(SolveResult {
        best_config: best.clone(),
        best_objective,
        last_config: psa.current().clone(),
        initial_objective,
        initial_projected,
        iterations: psa.iterations(),
        stop_reason,
        trace,
        checkpoints,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiStart {
    pub runs: usize,
    /// Half-width of the uniform perturbation applied to every anchor
    /// coordinate before projecting.
    pub perturbation: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStartResult {
    pub winner: usize,
    pub runs: Vec<SolveResult>,
}

impl MultiStartResult {
    pub fn best(&self) -> &SolveResult {
        &self.runs[self.winner]
    }
}

/// Independent solves from perturbed set anchors, run on separate threads.
/// The winner has the lowest best objective; ties go to the lower run
/// index.
pub fn solve_multistart(
    p: &Problem,
    cfg: &SolverConfig,
    ms: &MultiStart,
) -> Result<MultiStartResult> {
    if ms.runs == 0 {
        return Err(GhwpError::invalid("multi-start needs at least one run"));
    }
    let anchors = initialize(p, &InitStrategy::SetAnchors)?;
    let starts: Vec<Configuration> = (0..ms.runs)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(ms.seed.wrapping_add(r as u64));
            let mut u = anchors.clone();
            if ms.perturbation > 0.0 {
                for block in u.blocks_mut() {
                    let shift: Vec<f64> = (0..block.dim())
                        .map(|_| rng.gen_range(-ms.perturbation..=ms.perturbation))
                        .collect();
                    block.add_scaled_in_place(1.0, &crate::Point::from_raw(shift));
                }
            }
            project_unchecked(p, &u)
        })
        .collect();

    let runs = std::thread::scope(|scope| {
        let handles: Vec<_> = starts
            .iter()
            .map(|u0| scope.spawn(move || solve(p, u0, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;

    let winner = runs.iter().enumerate().fold(0, |w, (i, r)| {
        if r.best_objective < runs[w].best_objective {
            i
        } else {
            w
        }
    });
    Ok(MultiStartResult { winner, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::geometry::ConvexSet;
    use crate::problem::Weights;
    use crate::pt;

    #[test]
    fn step_size_examples() {
        let cfg = SolverConfig::default();
        assert_eq!(step_size(&cfg, 1).unwrap(), 1.0);
        assert_eq!(step_size(&cfg, 4).unwrap(), 0.25);
        assert!(matches!(
            step_size(&cfg, 0),
            Err(GhwpError::InvalidInput(_))
        ));
        let offset = SolverConfig {
            step_rule: StepRule::HarmonicOffset { offset: 9.0 },
            ..SolverConfig::default()
        };
        assert_eq!(step_size(&offset, 1).unwrap(), 0.1);
        let sqrt = SolverConfig {
            step_rule: StepRule::SqrtDecay,
            step_scale: 2.0,
            ..SolverConfig::default()
        };
        assert_eq!(step_size(&sqrt, 4).unwrap(), 1.0);
    }

    #[test]
    fn steps_are_positive_and_nonincreasing() {
        for rule in [
            StepRule::Harmonic,
            StepRule::HarmonicOffset { offset: 3.0 },
            StepRule::SqrtDecay,
        ] {
            let cfg = SolverConfig {
                step_rule: rule,
                ..SolverConfig::default()
            };
            let steps: Vec<f64> = (1..2000).map(|k| step_size(&cfg, k).unwrap()).collect();
            assert!(steps.iter().all(|&s| s > 0.0));
            assert!(steps.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn harmonic_partial_sums() {
        // sum 1/k diverges like ln K; sum 1/k^2 stays below pi^2/6
        let cfg = SolverConfig::default();
        let (mut s1, mut s2) = (0.0, 0.0);
        for k in 1..=1_000_000 {
            let a = step_size(&cfg, k).unwrap();
            s1 += a;
            s2 += a * a;
        }
        assert!(s1 > (1_000_000f64).ln());
        assert!(s2 < std::f64::consts::PI.powi(2) / 6.0);
    }

    #[test]
    fn project_feasible_examples() {
        let p = bundled::example1();
        let init = bundled::example1_initial();
        assert_eq!(project_feasible(&p, &init).unwrap(), init);
        let mut u = init.clone();
        u.chain_points[0] = pt![9, -6];
        let projected = project_feasible(&p, &u).unwrap();
        assert_eq!(projected.chain_points[0], pt![8, -6]);
        assert_eq!(projected.chain_points[1..], init.chain_points[1..]);
    }

    #[test]
    fn initialize_examples() {
        let p = bundled::example1();
        let init = bundled::example1_initial();
        assert_eq!(
            initialize(&p, &InitStrategy::ProjectGiven(init.clone())).unwrap(),
            init
        );
        let anchors = initialize(&p, &InitStrategy::SetAnchors).unwrap();
        assert_eq!(
            anchors.chain_points,
            vec![pt![7, -6], pt![4, 5], pt![-3, 4], pt![-6, -4]]
        );
        assert_eq!(anchors.hub_point, pt![1, -1]);

        let sets = (0..3).map(|i| ConvexSet::singleton(pt![i, 1])).collect();
        let hub = ConvexSet::half_space(pt![0, 1], 0.0).unwrap();
        let w = Weights::new(vec![1.0; 3], vec![1.0; 3]).unwrap();
        let p = Problem::new(sets, hub, w).unwrap();
        let anchors = initialize(&p, &InitStrategy::SetAnchors).unwrap();
        assert_eq!(anchors.hub_point, pt![0, 0]);
    }

    #[test]
    fn all_singletons_stop_immediately() {
        let sets = vec![
            ConvexSet::singleton(pt![0, 0]),
            ConvexSet::singleton(pt![4, 0]),
            ConvexSet::singleton(pt![0, 3]),
        ];
        let w = Weights::new(vec![1.0; 3], vec![1.0; 3]).unwrap();
        let p = Problem::new(sets, ConvexSet::singleton(pt![1, 1]), w).unwrap();
        let u0 = Configuration::new(vec![pt![0, 0], pt![4, 0], pt![0, 3]], pt![1, 1]);
        let r = solve(&p, &u0, &SolverConfig::default()).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.stop_reason, StopReason::ObjectiveStagnation);
        assert_eq!(r.best_config, u0);
        assert_eq!(r.best_objective, p.objective(&u0).unwrap());
        assert!(!r.initial_projected);
    }

    #[test]
    fn infeasible_start_is_projected() {
        let p = bundled::example1();
        let mut u0 = bundled::example1_initial();
        u0.chain_points[0] = pt![20, 20];
        let cfg = SolverConfig {
            tolerance: 1e-4,
            ..SolverConfig::default()
        };
        let r = solve(&p, &u0, &cfg).unwrap();
        assert!(r.initial_projected);
        assert!(r.best_config.infeasibility(&p).unwrap() <= MEMBERSHIP_TOL);
        // Psa itself insists on a feasible start
        assert!(Psa::new(&p, u0, cfg).is_err());
    }

    #[test]
    fn degenerate_problem_is_rejected() {
        let sets = (0..3).map(|i| ConvexSet::singleton(pt![i, 0])).collect();
        let w = Weights::new(vec![0.0, 1.0, 1.0], vec![0.0; 3]).unwrap();
        let p = Problem::new(sets, ConvexSet::singleton(pt![0, 0]), w).unwrap();
        let u0 = initialize(&p, &InitStrategy::SetAnchors).unwrap();
        // vertex 0: rho[2] + rho[0] + omega[0] = 1, fine; vertex 1: rho[0] + rho[1] = 1
        assert!(solve(&p, &u0, &SolverConfig::default()).is_ok());
        let w = Weights::new(vec![0.0, 1.0, 0.0], vec![0.0; 3]).unwrap();
        let p = Problem::new(p.chain_sets().to_vec(), p.hub_set().clone(), w).unwrap();
        assert!(matches!(
            solve(&p, &u0, &SolverConfig::default()),
            Err(GhwpError::Structural { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let p = bundled::example1();
        let u0 = bundled::example1_initial();
        for cfg in [
            SolverConfig {
                tolerance: 0.0,
                ..SolverConfig::default()
            },
            SolverConfig {
                step_scale: -1.0,
                ..SolverConfig::default()
            },
            SolverConfig {
                max_iter: 0,
                ..SolverConfig::default()
            },
        ] {
            assert!(matches!(
                solve(&p, &u0, &cfg),
                Err(GhwpError::InvalidInput(_))
            ));
        }
    }

    #[test]
    fn max_iter_and_gradient_stops() {
        let p = bundled::example1();
        let u0 = bundled::example1_initial();
        let cfg = SolverConfig {
            max_iter: 50,
            ..SolverConfig::default()
        };
        let r = solve(&p, &u0, &cfg).unwrap();
        assert_eq!(r.iterations, 50);
        assert_eq!(r.stop_reason, StopReason::MaxIter);
        assert_eq!(r.trace.len(), 50);

        // Hub and chain sit at one point of a shared singleton: g = 0.
        let sets = (0..3)
            .map(|_| ConvexSet::ball(pt![0, 0], 1.0).unwrap())
            .collect();
        let w = Weights::new(vec![1.0; 3], vec![1.0; 3]).unwrap();
        let p = Problem::new(sets, ConvexSet::ball(pt![0, 0], 1.0).unwrap(), w).unwrap();
        let u0 = Configuration::new(vec![pt![0, 0]; 3], pt![0, 0]);
        let cfg = SolverConfig {
            stop_on_gradient: true,
            ..SolverConfig::default()
        };
        let r = solve(&p, &u0, &cfg).unwrap();
        assert_eq!(r.stop_reason, StopReason::GradientSmall);
        assert_eq!(r.best_objective, 0.0);
    }

    #[test]
    fn trace_thinning_is_dense_then_sparse() {
        let cfg = SolverConfig::default();
        assert!((1..=TRACE_DENSE_LIMIT).all(|k| cfg.records(k)));
        assert!(!cfg.records(10_001));
        assert!(cfg.records(10_002));
        assert!(cfg.records(30_000));
        assert!(!cfg.records(30_001));
        let kept = (1..=1_000_000).filter(|&k| cfg.records(k)).count();
        assert!(kept < 60_000, "{kept}");
        let strided = SolverConfig {
            trace_stride: 10,
            ..SolverConfig::default()
        };
        assert!(strided.records(10) && !strided.records(11));
    }

    #[test]
    fn multistart_picks_lowest_and_is_deterministic() {
        let p = bundled::example1();
        let cfg = SolverConfig {
            tolerance: 1e-8,
            ..SolverConfig::default()
        };
        let ms = MultiStart {
            runs: 3,
            perturbation: 0.5,
            seed: 7,
        };
        let a = solve_multistart(&p, &cfg, &ms).unwrap();
        let b = solve_multistart(&p, &cfg, &ms).unwrap();
        assert_eq!(a, b);
        let lowest = a
            .runs
            .iter()
            .map(|r| r.best_objective)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(a.best().best_objective, lowest);
        assert!((lowest - 85.277_273).abs() < 1e-3);
        assert!(solve_multistart(&p, &cfg, &MultiStart { runs: 0, ..ms }).is_err());
    }
}
