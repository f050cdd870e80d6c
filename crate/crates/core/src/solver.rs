//! Optimal control solver for the slope schedule.
//!
//! The state is `α(θ̂)`, the control is `u = α̇ ∈ [0, ū]`, and the running
//! payoff is the virtual surplus. Each iteration integrates the state forward,
//! the costate backward from `λ(θ̄) = 0`, and takes a projected step
//! `u ← clamp(u − γλ, 0, ū)`. With `λ̇ = ∂V_sp/∂α` the costate equals minus
//! the functional gradient of the objective, so the step ascends.

use serde::{Deserialize, Serialize};

use crate::agent::best_participation;
use crate::econ_model::{Problem, TypeGrid};
use crate::error::{Error, Result};
use crate::mechanism::{build_schedule, expected_profit, ProfitBreakdown, RewardSchedule};
use crate::quadrature::trapezoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaSchedule {
    Constant,
    /// `γ_i = γ_0 / (1 + i/100)`: divergent sum, vanishing steps.
    Diminishing,
}

impl GammaSchedule {
    pub fn rate(self, gamma0: f64, iter: usize) -> f64 {
        match self {
            GammaSchedule::Constant => gamma0,
            GammaSchedule::Diminishing => gamma0 / (1.0 + iter as f64 / 100.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ControlInit {
    Constant(f64),
    PerNode(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub alpha0: f64,
    /// Upper control bound; `None` selects [`default_u_bar`].
    pub u_bar: Option<f64>,
    pub u_init: ControlInit,
    pub gamma0: f64,
    pub gamma_schedule: GammaSchedule,
    pub max_iters: usize,
    pub tol_u: f64,
    pub n_grid: usize,
    /// Relative margin below `p` that the state must respect.
    pub alpha_margin: f64,
    /// Iterations at which the state is recorded in the trace.
    pub snapshot_iters: Vec<usize>,
}

impl SolverConfig {
    /// Initial control 0.5, constant step 0.01, sup-norm tolerance 1e-5 on 201 nodes.
    pub fn with_alpha0(alpha0: f64) -> Self {
        Self {
            alpha0,
            u_bar: None,
            u_init: ControlInit::Constant(0.5),
            gamma0: 0.01,
            gamma_schedule: GammaSchedule::Constant,
            max_iters: 1000,
            tol_u: 1e-5,
            n_grid: 201,
            alpha_margin: 1e-6,
            snapshot_iters: Vec::new(),
        }
    }

    pub fn resolved_u_bar(&self, problem: &Problem) -> f64 {
        self.u_bar.unwrap_or_else(|| {
            default_u_bar(
                problem.p(),
                self.alpha0,
                problem.dist.lo(),
                problem.dist.hi(),
            )
        })
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        let p = problem.p();
        if !(self.alpha0 >= 0.0 && self.alpha0 < p) {
            return Err(Error::InvalidParameter {
                name: "alpha0",
                value: self.alpha0,
                reason: "must satisfy 0 <= alpha0 < p",
            });
        }
        let u_bar = self.resolved_u_bar(problem);
        if !(u_bar > 0.0) || !u_bar.is_finite() {
            return Err(Error::InvalidParameter {
                name: "u_bar",
                value: u_bar,
                reason: "must be positive and finite",
            });
        }
        if !(self.gamma0 > 0.0) || !self.gamma0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma0",
                value: self.gamma0,
                reason: "must be positive and finite",
            });
        }
        if !(self.tol_u > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol_u",
                value: self.tol_u,
                reason: "must be positive",
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if !(0.0..1.0).contains(&self.alpha_margin) {
            return Err(Error::InvalidParameter {
                name: "alpha_margin",
                value: self.alpha_margin,
                reason: "must lie in [0, 1)",
            });
        }
        if self.n_grid < TypeGrid::MIN_POINTS {
            return Err(Error::GridTooSmall {
                min: TypeGrid::MIN_POINTS,
                got: self.n_grid,
            });
        }
        match &self.u_init {
            ControlInit::Constant(v) if !v.is_finite() => Err(Error::InvalidParameter {
                name: "u_init",
                value: *v,
                reason: "must be finite",
            }),
            ControlInit::PerNode(v) if v.len() != self.n_grid => Err(Error::LengthMismatch {
                expected: self.n_grid,
                got: v.len(),
            }),
            ControlInit::PerNode(v) if v.iter().any(|x| !x.is_finite()) => {
                Err(Error::InvalidParameter {
                    name: "u_init",
                    value: f64::NAN,
                    reason: "must be finite",
                })
            }
            _ => Ok(()),
        }
    }
}

/// `10·(p − α₀)/(θ̄ − θ̲)`: large enough to sweep the whole feasible range of α.
pub fn default_u_bar(p: f64, alpha0: f64, lo: f64, hi: f64) -> f64 {
    10.0 * (p - alpha0) / (hi - lo)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub u: Vec<f64>,
    pub alpha: Vec<f64>,
    pub lam: Vec<f64>,
    pub objective: f64,
    pub iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Objective at the state integrated from this iteration's control.
    pub objective: f64,
    /// Sup-norm change of the control produced by this iteration's step.
    pub du_sup: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub alpha_nondecreasing: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub schedule: RewardSchedule,
    pub trace: SolveTrace,
    pub state: SolverState,
    /// `false` when `max_iters` ran out; the state is then the best iterate seen.
    pub converged: bool,
    pub u_bar: f64,
    pub profit: ProfitBreakdown,
}

impl Solution {
    pub fn iterations(&self) -> usize {
        self.trace.records.len()
    }
}

/// Forward trapezoid integration of `α̇ = u` from `α(θ̲) = alpha0`.
///
/// Fails once any state value reaches `cost_limit`.
pub fn integrate_state(
    u: &[f64],
    alpha0: f64,
    grid: &TypeGrid,
    cost_limit: f64,
) -> Result<Vec<f64>> {
    if u.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: u.len(),
        });
    }
    let dx = grid.step();
    let mut alpha = Vec::with_capacity(u.len());
    let mut a = alpha0;
    for i in 0..u.len() {
        if i > 0 {
            a += 0.5 * dx * (u[i - 1] + u[i]);
        }
        if !(a < cost_limit) {
            return Err(Error::AlphaExceedsCost {
                index: i,
                alpha: a,
                limit: cost_limit,
            });
        }
        alpha.push(a);
    }
    Ok(alpha)
}

/// Virtual-surplus integrand and its α-derivative at one node, given the
/// density and reciprocal hazard there.
fn node_terms(
    theta: f64,
    alpha: f64,
    density: f64,
    inv_hazard: f64,
    problem: &Problem,
) -> Result<(f64, f64)> {
    let Problem {
        satisfaction: pi,
        revenue: g,
        ..
    } = problem;
    let p = problem.p();
    let x = best_participation(pi, p, theta, alpha)?;
    // At the best response π′(χ) = (p − α)/θ, so π, π″ and g follow from
    // one power each instead of separate evaluations.
    let pi_1 = (p - alpha) / theta;
    let pi_0 = x * pi_1 / (1.0 - pi.z1());
    let pi_2 = -pi.z1() * pi_1 / x;
    let g_1 = g.marginal(x);
    let g_0 = x * g_1 / (1.0 - g.q1());
    let surplus = (g_0 - pi_0 * inv_hazard + theta * pi_0 - p * x) * density;
    let dx_dalpha = -1.0 / (theta * pi_2);
    let slope = density * (g_1 - pi_1 * inv_hazard - alpha) * dx_dalpha;
    Ok((surplus, slope))
}

/// `∂V_sp/∂α` at `(θ̂, α)`, equal to `∂H/∂α`.
pub fn dvsp_dalpha(theta_hat: f64, alpha: f64, problem: &Problem) -> Result<f64> {
    let inv_h = problem.dist.inverse_hazard(theta_hat)?;
    let f = problem.dist.density(theta_hat);
    node_terms(theta_hat, alpha, f, inv_h, problem).map(|(_, d)| d)
}

/// Per-node density and reciprocal hazard, evaluated once per grid.
struct NodeWeights {
    density: Vec<f64>,
    inv_hazard: Vec<f64>,
}

impl NodeWeights {
    fn new(grid: &TypeGrid, problem: &Problem) -> Result<Self> {
        let mut density = Vec::with_capacity(grid.len());
        let mut inv_hazard = Vec::with_capacity(grid.len());
        for &t in grid.nodes() {
            inv_hazard.push(problem.dist.inverse_hazard(t)?);
            density.push(problem.dist.density(t));
        }
        Ok(Self {
            density,
            inv_hazard,
        })
    }

    /// Returns the surplus integrand and its α-derivative at every node.
    fn sweep(
        &self,
        grid: &TypeGrid,
        alpha: &[f64],
        problem: &Problem,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = grid.len();
        let mut surplus = Vec::with_capacity(n);
        let mut slope = Vec::with_capacity(n);
        let weights = self.density.iter().zip(&self.inv_hazard);
        for ((&theta, &a), (&f, &inv_h)) in grid.nodes().iter().zip(alpha).zip(weights) {
            let (s, d) = node_terms(theta, a, f, inv_h, problem)?;
            surplus.push(s);
            slope.push(d);
        }
        Ok((surplus, slope))
    }
}

fn costate_from_slope(slope: &[f64], dx: f64) -> Vec<f64> {
    let n = slope.len();
    let mut lam = vec![0.0; n];
    for k in (0..n - 1).rev() {
        lam[k] = lam[k + 1] - 0.5 * dx * (slope[k] + slope[k + 1]);
    }
    lam
}

/// Backward trapezoid integration of `λ̇ = ∂V_sp/∂α` from `λ(θ̄) = 0`.
pub fn integrate_costate(alpha: &[f64], grid: &TypeGrid, problem: &Problem) -> Result<Vec<f64>> {
    if alpha.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: alpha.len(),
        });
    }
    let weights = NodeWeights::new(grid, problem)?;
    let (_, slope) = weights.sweep(grid, alpha, problem)?;
    Ok(costate_from_slope(&slope, grid.step()))
}

/// `clamp(u − γλ, 0, ū)` node by node.
pub fn gradient_projection_step(u: &[f64], lam: &[f64], gamma: f64, u_bar: f64) -> Vec<f64> {
    u.iter()
        .zip(lam)
        .map(|(&ui, &li)| (ui - gamma * li).clamp(0.0, u_bar))
        .collect()
}

/// Trapezoid integral of the virtual surplus along a state trajectory.
pub fn objective(alpha: &[f64], grid: &TypeGrid, problem: &Problem) -> Result<f64> {
    let weights = NodeWeights::new(grid, problem)?;
    let (surplus, _) = weights.sweep(grid, alpha, problem)?;
    Ok(trapezoid(&surplus, grid.step()))
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Gradient projection on the control until the sup-norm control change
/// drops to `tol_u` or `max_iters` is reached.
pub fn solve(config: &SolverConfig, problem: &Problem) -> Result<Solution> {
    config.validate(problem)?;
    let grid = TypeGrid::for_distribution(&problem.dist, config.n_grid)?;
    let weights = NodeWeights::new(&grid, problem)?;
    let u_bar = config.resolved_u_bar(problem);
    let cost_limit = problem.p() * (1.0 - config.alpha_margin);
    let dx = grid.step();

    let mut u: Vec<f64> = match &config.u_init {
        ControlInit::Constant(v) => vec![v.clamp(0.0, u_bar); grid.len()],
        ControlInit::PerNode(v) => v.iter().map(|x| x.clamp(0.0, u_bar)).collect(),
    };

    let evaluate = |u: &[f64], iter: usize| -> Result<SolverState> {
        let alpha = integrate_state(u, config.alpha0, &grid, cost_limit)?;
        let (surplus, slope) = weights.sweep(&grid, &alpha, problem)?;
        Ok(SolverState {
            u: u.to_vec(),
            lam: costate_from_slope(&slope, dx),
            objective: trapezoid(&surplus, dx),
            alpha,
            iter,
        })
    };

    let mut trace = SolveTrace::default();
    let mut best: Option<SolverState> = None;
    let mut converged = false;

    for iter in 0..config.max_iters {
        let state = evaluate(&u, iter)?;
        if config.snapshot_iters.contains(&iter) {
            trace.snapshots.push((iter, state.alpha.clone()));
        }
        let gamma = config.gamma_schedule.rate(config.gamma0, iter);
        let next = gradient_projection_step(&u, &state.lam, gamma, u_bar);
        let du_sup = sup_distance(&next, &u);
        trace.records.push(IterationRecord {
            iter,
            objective: state.objective,
            du_sup,
            u_min: u.iter().copied().fold(f64::INFINITY, f64::min),
            u_max: u.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            alpha_nondecreasing: state.alpha.windows(2).all(|w| w[1] >= w[0]),
        });
        if best.as_ref().is_none_or(|b| state.objective > b.objective) {
            best = Some(state);
        }
        u = next;
        if du_sup <= config.tol_u {
            converged = true;
            break;
        }
    }

    let last = evaluate(&u, trace.records.len())?;
    let state = match best {
        Some(b) if !converged && b.objective > last.objective => b,
        _ => last,
    };
    let schedule = build_schedule(grid, state.alpha.clone(), problem)?;
    let profit = expected_profit(&schedule, problem)?;
    Ok(Solution {
        schedule,
        trace,
        state,
        converged,
        u_bar,
        profit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Alpha0Candidate {
    pub alpha0: f64,
    pub profit: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Alpha0Search {
    pub best_alpha0: f64,
    pub best_profit: f64,
    /// Successful evaluations in the order they were run.
    pub candidates: Vec<Alpha0Candidate>,
    /// Candidates whose solve returned an error.
    pub failures: Vec<(f64, Error)>,
    pub best: Solution,
}

/// Golden-section search over the initial slope `α(θ̲)`, maximizing the
/// direct expected profit of the solved schedule.
///
/// Both interval ends are evaluated as well, and the best evaluated point is
/// returned. Candidates whose solve fails are skipped.
pub fn optimize_alpha0(
    config: &SolverConfig,
    problem: &Problem,
    interval: (f64, f64),
) -> Result<Alpha0Search> {
    const MAX_EVALS: usize = 40;
    let p = problem.p();
    let (lo, hi) = interval;
    if !(lo >= 0.0 && lo <= hi && hi < p) {
        return Err(Error::InvalidParameter {
            name: "search_interval",
            value: if lo >= 0.0 && lo <= hi { hi } else { lo },
            reason: "must satisfy 0 <= lo <= hi < p",
        });
    }
    let tol = 1e-3 * p;

    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    let mut best: Option<Solution> = None;
    let mut first_error = None;

    let mut eval = |alpha0: f64| -> f64 {
        let cfg = SolverConfig {
            alpha0,
            ..config.clone()
        };
        match solve(&cfg, problem) {
            Ok(sol) => {
                let profit = sol.profit.direct;
                candidates.push(Alpha0Candidate {
                    alpha0,
                    profit,
                    converged: sol.converged,
                });
                if best.as_ref().is_none_or(|b| profit > b.profit.direct) {
                    best = Some(sol);
                }
                profit
            }
            Err(e) => {
                first_error.get_or_insert_with(|| e.clone());
                failures.push((alpha0, e));
                f64::NEG_INFINITY
            }
        }
    };

    eval(lo);
    if hi > lo {
        eval(hi);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = eval(c);
        let mut fd = eval(d);
        let mut used = 4;
        while b - a > tol && used < MAX_EVALS {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = eval(d);
            }
            used += 1;
        }
    }

    match best {
        Some(best) => Ok(Alpha0Search {
            best_alpha0: best.state.alpha[0],
            best_profit: best.profit.direct,
            candidates,
            failures,
            best,
        }),
        None => Err(first_error.expect("at least one candidate was evaluated")),
    }
}
