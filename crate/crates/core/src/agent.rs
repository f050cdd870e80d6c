//! The agent side: utility under a linear reward, closed-form best
//! participation, and an exhaustive best-response search used as an oracle.

use serde::Serialize;

use crate::econ_model::SatisfactionModel;
use crate::error::{Error, Result};
use crate::mechanism::RewardSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentDecision {
    pub x_star: f64,
    pub theta_hat_star: f64,
    pub utility: f64,
}

/// `θ·π(x) − p·x + α·x + β`.
pub fn agent_utility(
    satisfaction: &SatisfactionModel,
    p: f64,
    theta: f64,
    x: f64,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::NegativeParticipation { x });
    }
    Ok(theta * satisfaction.value(x) - p * x + alpha * x + beta)
}

/// Participation level solving `θ·π′(x) = p − α`.
pub fn best_participation(
    satisfaction: &SatisfactionModel,
    p: f64,
    theta: f64,
    alpha: f64,
) -> Result<f64> {
    if !(alpha < p) {
        return Err(Error::UnboundedResponse { alpha, p });
    }
    if satisfaction.z1() == 0.0 {
        return Err(Error::DegenerateSatisfaction);
    }
    Ok(satisfaction.inverse_marginal((p - alpha) / theta))
}

/// Participation grid on `[0, x_max]` where `x_max` is twice the largest
/// closed-form response any type in the schedule's support could give.
pub fn default_x_grid(
    satisfaction: &SatisfactionModel,
    p: f64,
    schedule: &RewardSchedule,
    count: usize,
) -> Result<Vec<f64>> {
    let theta_top = schedule.grid().hi();
    let mut x_max: f64 = 0.0;
    for &a in schedule.alpha() {
        x_max = x_max.max(best_participation(satisfaction, p, theta_top, a)?);
    }
    let x_max = 2.0 * x_max;
    Ok((0..count)
        .map(|i| x_max * i as f64 / (count - 1) as f64)
        .collect())
}

/// Exhaustive maximization of the agent's utility over announced types and
/// participation levels.
///
/// Both grids are scanned in the order given; only a strictly better value
/// replaces the incumbent, so with ascending grids ties go to the smaller
/// announcement and then to the smaller participation level.
pub fn brute_force_best_response(
    satisfaction: &SatisfactionModel,
    p: f64,
    theta: f64,
    schedule: &RewardSchedule,
    x_grid: &[f64],
    theta_hats: &[f64],
) -> Result<AgentDecision> {
    if x_grid.is_empty() || theta_hats.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut best: Option<AgentDecision> = None;
    for &theta_hat in theta_hats {
        let alpha = schedule.alpha_at(theta_hat);
        let beta = schedule.beta_at(theta_hat);
        for &x in x_grid {
            let utility = agent_utility(satisfaction, p, theta, x, alpha, beta)?;
            if best.is_none_or(|b| utility > b.utility) {
                best = Some(AgentDecision {
                    x_star: x,
                    theta_hat_star: theta_hat,
                    utility,
                });
            }
        }
    }
    Ok(best.expect("grids are nonempty"))
}
