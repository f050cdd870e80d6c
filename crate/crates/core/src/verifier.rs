//! Certification of a reward schedule on the type grid: individual
//! rationality, incentive compatibility, monotone slope, the envelope
//! identity, and agreement of the two profit forms.

use serde::{Deserialize, Serialize};

use crate::agent::{agent_utility, best_participation};
use crate::econ_model::Problem;
use crate::error::{Error, Result};
use crate::mechanism::{expected_profit, ProfitBreakdown, RewardSchedule};
use crate::quadrature::gauss_legendre5;

/// Utilities within this relative distance of a row maximum count as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// `values[i * n + j]` is the utility of true type `θ_i` announcing `θ_j`
/// and then choosing its best participation against `α(θ_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix {
    thetas: Vec<f64>,
    values: Vec<f64>,
}

impl UtilityMatrix {
    pub fn from_values(thetas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = thetas.len();
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                got: values.len(),
            });
        }
        Ok(Self { thetas, values })
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.get(i, i)).collect()
    }
}

pub fn utility_matrix(schedule: &RewardSchedule, problem: &Problem) -> Result<UtilityMatrix> {
    let p = problem.p();
    let pi = &problem.satisfaction;
    let thetas = schedule.grid().nodes().to_vec();
    let n = thetas.len();
    let mut values = Vec::with_capacity(n * n);
    for &theta in &thetas {
        for (&a, &b) in schedule.alpha().iter().zip(schedule.beta()) {
            let x = best_participation(pi, p, theta, a)?;
            values.push(agent_utility(pi, p, theta, x, a, b)?);
        }
    }
    UtilityMatrix::from_values(thetas, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IcSummary {
    /// Largest distance, in grid steps, from a row's diagonal to the nearest
    /// column attaining the row maximum (within [`TIE_TOLERANCE`]).
    pub max_deviation_steps: usize,
    /// Largest distance from the diagonal to the first exact row maximum.
    /// Flat rows (pooled types) make this large even when truth is optimal.
    pub argmax_deviation_steps: usize,
    /// Largest utility gain from misreporting, `max_j U(i,j) − U(i,i)`.
    pub max_gain: f64,
}

pub fn check_ic(matrix: &UtilityMatrix) -> IcSummary {
    let mut summary = IcSummary {
        max_deviation_steps: 0,
        argmax_deviation_steps: 0,
        max_gain: 0.0,
    };
    for i in 0..matrix.len() {
        let row = matrix.row(i);
        let (argmax, best) =
            row.iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (j, v)| if v > acc.1 { (j, v) } else { acc },
                );
        let floor = best - TIE_TOLERANCE * best.abs().max(1.0);
        let nearest = row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= floor)
            .map(|(j, _)| j.abs_diff(i))
            .min()
            .unwrap_or(0);
        summary.max_deviation_steps = summary.max_deviation_steps.max(nearest);
        summary.argmax_deviation_steps = summary.argmax_deviation_steps.max(argmax.abs_diff(i));
        summary.max_gain = summary.max_gain.max(best - row[i]);
    }
    summary
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IrSummary {
    pub min_diagonal: f64,
    /// `|U(θ̲, θ̲)|`; zero when the participation constraint binds at the bottom.
    pub binding_residual: f64,
    pub passed: bool,
}

pub fn check_ir(matrix: &UtilityMatrix, tol: f64) -> IrSummary {
    let diag = matrix.diagonal();
    let min_diagonal = diag.iter().copied().fold(f64::INFINITY, f64::min);
    IrSummary {
        min_diagonal,
        binding_residual: diag.first().map_or(0.0, |u| u.abs()),
        passed: min_diagonal >= -tol,
    }
}

/// Sup-norm gap between truthful utility and the accumulated satisfaction
/// `∫_{θ̲}^{θ} π(χ(y, α(y))) dy`.
///
/// The integral uses five-point Gauss–Legendre on each cell of the
/// piecewise-linear slope, so the gap measures the quadrature error carried
/// by the stored bias rewards.
pub fn check_envelope(schedule: &RewardSchedule, problem: &Problem) -> Result<f64> {
    let p = problem.p();
    let pi = &problem.satisfaction;
    let nodes = schedule.grid().nodes();
    let mut accumulated = 0.0;
    let mut worst: f64 = 0.0;
    for i in 0..nodes.len() {
        if i > 0 {
            let (t0, t1) = (nodes[i - 1], nodes[i]);
            let (a0, a1) = (schedule.alpha()[i - 1], schedule.alpha()[i]);
            let mut failure = None;
            accumulated += gauss_legendre5(t0, t1, |y| {
                let a = a0 + (a1 - a0) * (y - t0) / (t1 - t0);
                match best_participation(pi, p, y, a) {
                    Ok(x) => pi.value(x),
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
        }
        let (a, b) = (schedule.alpha()[i], schedule.beta()[i]);
        let x = best_participation(pi, p, nodes[i], a)?;
        let truthful = agent_utility(pi, p, nodes[i], x, a, b)?;
        worst = worst.max((truthful - accumulated).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub ir_tol: f64,
    pub binding_tol: f64,
    pub ic_max_steps: usize,
    pub envelope_tol: f64,
    /// Relative to `max(1, |direct profit|)`.
    pub profit_rel_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            ir_tol: 1e-6,
            binding_tol: 1e-3,
            ic_max_steps: 1,
            envelope_tol: 1e-3,
            profit_rel_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub n_grid: usize,
    pub ir_min_diag: f64,
    pub ir_binding_residual: f64,
    pub ic_max_deviation_steps: usize,
    pub ic_argmax_deviation_steps: usize,
    pub ic_max_gain: f64,
    pub alpha_monotone: bool,
    pub envelope_max_residual: f64,
    pub profit: ProfitBreakdown,
    pub profit_residual: f64,
    pub thresholds: Thresholds,
    /// Names of the failed checks, empty when `passed`.
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Runs every check and also returns the utility matrix it built.
pub fn verify_with_matrix(
    schedule: &RewardSchedule,
    problem: &Problem,
    thresholds: &Thresholds,
) -> Result<(VerificationReport, UtilityMatrix)> {
    let matrix = utility_matrix(schedule, problem)?;
    let ir = check_ir(&matrix, thresholds.ir_tol);
    let ic = check_ic(&matrix);
    let envelope = check_envelope(schedule, problem)?;
    let profit = expected_profit(schedule, problem)?;
    let alpha_monotone = schedule.is_alpha_monotone();

    let mut failures = Vec::new();
    if !ir.passed {
        failures.push("ir".to_string());
    }
    if !(ir.binding_residual <= thresholds.binding_tol) {
        failures.push("ir_binding".to_string());
    }
    if ic.max_deviation_steps > thresholds.ic_max_steps {
        failures.push("ic".to_string());
    }
    if !alpha_monotone {
        failures.push("alpha_monotone".to_string());
    }
    if !(envelope <= thresholds.envelope_tol) {
        failures.push("envelope".to_string());
    }
    if !(profit.residual <= thresholds.profit_rel_tol * profit.direct.abs().max(1.0)) {
        failures.push("profit_equivalence".to_string());
    }

    let report = VerificationReport {
        n_grid: matrix.len(),
        ir_min_diag: ir.min_diagonal,
        ir_binding_residual: ir.binding_residual,
        ic_max_deviation_steps: ic.max_deviation_steps,
        ic_argmax_deviation_steps: ic.argmax_deviation_steps,
        ic_max_gain: ic.max_gain,
        alpha_monotone,
        envelope_max_residual: envelope,
        profit,
        profit_residual: profit.residual,
        thresholds: *thresholds,
        passed: failures.is_empty(),
        failures,
    };
    Ok((report, matrix))
}

pub fn verify(
    schedule: &RewardSchedule,
    problem: &Problem,
    thresholds: &Thresholds,
) -> Result<VerificationReport> {
    verify_with_matrix(schedule, problem, thresholds).map(|(r, _)| r)
}
