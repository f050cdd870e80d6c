//! Reward schedules: information rent, the bias reward recovered from the
//! slope by quadrature, and the publisher's expected profit in direct and
//! virtual-surplus form.

use serde::Serialize;

use crate::agent::best_participation;
use crate::econ_model::{Problem, RevenueModel, SatisfactionModel, TypeGrid};
use crate::error::{Error, Result};
use crate::quadrature::{cumulative_trapezoid, trapezoid};

/// Slope `α` and bias `β` of the linear reward `αx + β` at each grid node,
/// interpolated linearly in between.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardSchedule {
    grid: TypeGrid,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl RewardSchedule {
    /// Only shapes are checked here; monotonicity is a property reported by
    /// the verifier so that invalid schedules can still be represented.
    pub fn new(grid: TypeGrid, alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        for v in [&alpha, &beta] {
            if v.len() != grid.len() {
                return Err(Error::LengthMismatch {
                    expected: grid.len(),
                    got: v.len(),
                });
            }
        }
        Ok(Self { grid, alpha, beta })
    }

    pub fn grid(&self) -> &TypeGrid {
        &self.grid
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    fn interpolate(&self, values: &[f64], theta: f64) -> f64 {
        let (k, s) = self.grid.locate(theta);
        if s == 0.0 {
            values[k]
        } else if s == 1.0 {
            values[k + 1]
        } else {
            values[k] + s * (values[k + 1] - values[k])
        }
    }

    pub fn alpha_at(&self, theta: f64) -> f64 {
        self.interpolate(&self.alpha, theta)
    }

    pub fn beta_at(&self, theta: f64) -> f64 {
        self.interpolate(&self.beta, theta)
    }

    pub fn is_alpha_monotone(&self) -> bool {
        first_decrease(&self.alpha).is_none()
    }

    /// Same schedule with every bias reward shifted by `shift`.
    pub fn with_beta_shift(&self, shift: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            alpha: self.alpha.clone(),
            beta: self.beta.iter().map(|b| b + shift).collect(),
        }
    }

    pub fn into_parts(self) -> (TypeGrid, Vec<f64>, Vec<f64>) {
        (self.grid, self.alpha, self.beta)
    }
}

fn first_decrease(values: &[f64]) -> Option<usize> {
    values.windows(2).position(|w| w[1] < w[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfitBreakdown {
    pub direct: f64,
    #[serde(rename = "virtual")]
    pub virtual_surplus: f64,
    pub residual: f64,
}

/// Information rent `K = αχ + θπ(χ) − pχ` at the best participation level.
pub fn information_rent_k(
    satisfaction: &SatisfactionModel,
    p: f64,
    theta: f64,
    alpha: f64,
) -> Result<f64> {
    let x = best_participation(satisfaction, p, theta, alpha)?;
    Ok(alpha * x + theta * satisfaction.value(x) - p * x)
}

/// `∂K/∂θ`, which by the agent's first-order condition is `π(χ)`.
pub fn k_theta(satisfaction: &SatisfactionModel, p: f64, theta: f64, alpha: f64) -> Result<f64> {
    let x = best_participation(satisfaction, p, theta, alpha)?;
    Ok(satisfaction.value(x))
}

/// `β(θ_j) = ∫_{θ̲}^{θ_j} π(χ(y, α(y))) dy − K(θ_j, α(θ_j))` by cumulative
/// trapezoid, without checking that `alpha` is monotone.
pub fn beta_by_quadrature(
    grid: &TypeGrid,
    alpha: &[f64],
    satisfaction: &SatisfactionModel,
    p: f64,
) -> Result<Vec<f64>> {
    if alpha.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: alpha.len(),
        });
    }
    let nodes = grid.nodes();
    let rent_slope = nodes
        .iter()
        .zip(alpha)
        .map(|(&t, &a)| k_theta(satisfaction, p, t, a))
        .collect::<Result<Vec<_>>>()?;
    let accumulated = cumulative_trapezoid(&rent_slope, grid.step());
    nodes
        .iter()
        .zip(alpha)
        .zip(accumulated)
        .map(|((&t, &a), acc)| Ok(acc - information_rent_k(satisfaction, p, t, a)?))
        .collect()
}

/// Bias rewards making a nondecreasing slope schedule truthful with the IR
/// constraint binding at the lowest type.
pub fn compute_beta(
    grid: &TypeGrid,
    alpha: &[f64],
    satisfaction: &SatisfactionModel,
    p: f64,
) -> Result<Vec<f64>> {
    if let Some(index) = first_decrease(alpha) {
        return Err(Error::NonMonotoneAlpha { index });
    }
    beta_by_quadrature(grid, alpha, satisfaction, p)
}

/// Pairs `alpha` with the bias rewards from [`compute_beta`].
pub fn build_schedule(
    grid: TypeGrid,
    alpha: Vec<f64>,
    problem: &Problem,
) -> Result<RewardSchedule> {
    let beta = compute_beta(&grid, &alpha, &problem.satisfaction, problem.p())?;
    RewardSchedule::new(grid, alpha, beta)
}

/// `g(x) − reward_paid`.
pub fn publisher_utility(revenue: &RevenueModel, x: f64, reward_paid: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::NegativeParticipation { x });
    }
    Ok(revenue.value(x) - reward_paid)
}

/// Pointwise virtual surplus
/// `[g(χ) − π(χ)(1 − F)/f + θ̂π(χ) − pχ]·f(θ̂)`.
pub fn virtual_surplus_integrand(theta_hat: f64, alpha: f64, problem: &Problem) -> Result<f64> {
    let Problem {
        dist,
        satisfaction,
        revenue,
        ..
    } = problem;
    let p = problem.p();
    let x = best_participation(satisfaction, p, theta_hat, alpha)?;
    let inv_h = dist.inverse_hazard(theta_hat)?;
    let pi = satisfaction.value(x);
    Ok((revenue.value(x) - pi * inv_h + theta_hat * pi - p * x) * dist.density(theta_hat))
}

/// Expected publisher profit of a schedule under truthful reporting,
/// computed both directly and through the virtual surplus.
pub fn expected_profit(schedule: &RewardSchedule, problem: &Problem) -> Result<ProfitBreakdown> {
    let p = problem.p();
    let nodes = schedule.grid().nodes();
    let mut direct_terms = Vec::with_capacity(nodes.len());
    let mut virtual_terms = Vec::with_capacity(nodes.len());
    for ((&t, &a), &b) in nodes.iter().zip(schedule.alpha()).zip(schedule.beta()) {
        let x = best_participation(&problem.satisfaction, p, t, a)?;
        let v = publisher_utility(&problem.revenue, x, a * x + b)?;
        direct_terms.push(v * problem.dist.density(t));
        virtual_terms.push(virtual_surplus_integrand(t, a, problem)?);
    }
    let dx = schedule.grid().step();
    let direct = trapezoid(&direct_terms, dx);
    let virtual_surplus = trapezoid(&virtual_terms, dx);
    Ok(ProfitBreakdown {
        direct,
        virtual_surplus,
        residual: (direct - virtual_surplus).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::agent_utility;
    use crate::econ_model::{MarketParams, TypeDistribution};
    use proptest::prelude::*;

    fn problem(z2: f64) -> Problem {
        Problem {
            dist: TypeDistribution::make_uniform(4.0, 6.0).unwrap(),
            satisfaction: SatisfactionModel::new(0.5, z2).unwrap(),
            revenue: RevenueModel::new(0.5).unwrap(),
            market: MarketParams::new(10.0).unwrap(),
        }
    }

    fn smooth_alpha(grid: &TypeGrid) -> Vec<f64> {
        grid.nodes()
            .iter()
            .map(|t| 1.0 + 0.8 * (t - 4.0).powi(2))
            .collect()
    }

    #[test]
    fn information_rent_examples() {
        let pi = SatisfactionModel::new(0.5, 3.0).unwrap();
        assert!((information_rent_k(&pi, 10.0, 4.0, 4.0).unwrap() - 24.0).abs() < 1e-12);
        assert!((k_theta(&pi, 10.0, 4.0, 4.0).unwrap() - 12.0).abs() < 1e-12);
        // K = U − β
        let x = best_participation(&pi, 10.0, 4.7, 2.5).unwrap();
        let u = agent_utility(&pi, 10.0, 4.7, x, 2.5, -3.0).unwrap();
        let k = information_rent_k(&pi, 10.0, 4.7, 2.5).unwrap();
        assert!((k - (u + 3.0)).abs() < 1e-12);
        // χ → 0 as α → −∞
        let k = information_rent_k(&pi, 10.0, 4.0, -1e9).unwrap();
        assert!(k.abs() < 1e-6);
    }

    #[test]
    fn k_theta_matches_finite_difference() {
        let pi = SatisfactionModel::new(0.5, 3.0).unwrap();
        let h = 1e-5;
        let fd = (information_rent_k(&pi, 10.0, 4.0 + h, 4.0).unwrap()
            - information_rent_k(&pi, 10.0, 4.0 - h, 4.0).unwrap())
            / (2.0 * h);
        assert!((fd - 12.0).abs() < 1e-6 * 12.0);
    }

    proptest! {
        #[test]
        fn k_theta_is_the_type_derivative_of_rent(theta in 4.01f64..5.99, alpha in 0.0f64..9.5) {
            let pi = SatisfactionModel::new(0.5, 3.0).unwrap();
            let h = 1e-5;
            let fd = (information_rent_k(&pi, 10.0, theta + h, alpha).unwrap()
                - information_rent_k(&pi, 10.0, theta - h, alpha).unwrap()) / (2.0 * h);
            let exact = k_theta(&pi, 10.0, theta, alpha).unwrap();
            prop_assert!(exact >= 0.0);
            prop_assert!(((fd - exact) / exact).abs() < 1e-6);
        }

        #[test]
        fn beta_recomputation_is_idempotent(increments in proptest::collection::vec(0.0f64..0.05, 50)) {
            let pb = problem(3.0);
            let grid = TypeGrid::uniform(4.0, 6.0, 51).unwrap();
            let mut alpha = vec![1.0];
            for d in &increments { alpha.push(alpha.last().unwrap() + d); }
            let s = build_schedule(grid.clone(), alpha, &pb).unwrap();
            let again = compute_beta(&grid, s.alpha(), &pb.satisfaction, 10.0).unwrap();
            for (a, b) in again.iter().zip(s.beta()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn beta_examples() {
        let pb = problem(3.0);
        let grid = TypeGrid::uniform(4.0, 6.0, 21).unwrap();
        let alpha = vec![4.0; 21];
        let beta = compute_beta(&grid, &alpha, &pb.satisfaction, 10.0).unwrap();
        assert_eq!(
            beta[0],
            -information_rent_k(&pb.satisfaction, 10.0, 4.0, 4.0).unwrap()
        );
        assert!((beta[0] + 24.0).abs() < 1e-12);
        for b in &beta {
            assert!((b - beta[0]).abs() < 1e-9);
        }

        let alpha = smooth_alpha(&grid);
        let s = build_schedule(grid, alpha, &pb).unwrap();
        let x = best_participation(&pb.satisfaction, 10.0, 4.0, s.alpha()[0]).unwrap();
        let u = agent_utility(&pb.satisfaction, 10.0, 4.0, x, s.alpha()[0], s.beta()[0]).unwrap();
        assert!(u.abs() < 1e-12);
    }

    #[test]
    fn compute_beta_rejects_decreasing_alpha() {
        let pb = problem(3.0);
        let grid = TypeGrid::uniform(4.0, 6.0, 5).unwrap();
        assert_eq!(
            compute_beta(&grid, &[1.0, 2.0, 1.5, 3.0, 3.0], &pb.satisfaction, 10.0),
            Err(Error::NonMonotoneAlpha { index: 1 })
        );
        assert!(matches!(
            compute_beta(&grid, &[1.0, 2.0, 3.0, 10.0, 11.0], &pb.satisfaction, 10.0),
            Err(Error::UnboundedResponse { .. })
        ));
    }

    #[test]
    fn publisher_utility_examples() {
        let g = RevenueModel::new(0.5).unwrap();
        assert!((publisher_utility(&g, 4.0, 0.0).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(publisher_utility(&g, 0.0, 2.5).unwrap(), -2.5);
        assert!((publisher_utility(&g, 6.25, 1.0).unwrap() - 4.0).abs() < 1e-12);
        assert!(publisher_utility(&g, -1.0, 0.0).is_err());
    }

    #[test]
    fn virtual_surplus_examples() {
        let pb = problem(3.0);
        // χ = 6.25, π(χ) = 15, 1/h = 1, f = 0.5, g(χ) = 5
        let expected = (5.0 - 15.0 * 1.0 + 5.0 * 15.0 - 10.0 * 6.25) * 0.5;
        let v = virtual_surplus_integrand(5.0, 4.0, &pb).unwrap();
        assert!((v - expected).abs() < 1e-12);

        // no hazard term at the top
        let x = best_participation(&pb.satisfaction, 10.0, 6.0, 2.0).unwrap();
        let top = (pb.revenue.value(x) + 6.0 * pb.satisfaction.value(x) - 10.0 * x) * 0.5;
        assert!((virtual_surplus_integrand(6.0, 2.0, &pb).unwrap() - top).abs() < 1e-12);

        assert!(matches!(
            virtual_surplus_integrand(5.0, 10.0, &pb),
            Err(Error::UnboundedResponse { .. })
        ));
    }

    #[test]
    fn profit_forms_agree_and_converge() {
        let pb = problem(3.0);
        let profit = |n: usize| {
            let grid = TypeGrid::uniform(4.0, 6.0, n).unwrap();
            let alpha = smooth_alpha(&grid);
            expected_profit(&build_schedule(grid, alpha, &pb).unwrap(), &pb).unwrap()
        };
        let p201 = profit(201);
        assert!(p201.residual <= 1e-3 * p201.direct.abs().max(1.0));
        let p401 = profit(401);
        assert!(((p401.direct - p201.direct) / p201.direct).abs() <= 1e-4);
    }

    #[test]
    fn beta_shift_moves_direct_profit_only() {
        let pb = problem(3.0);
        let grid = TypeGrid::uniform(4.0, 6.0, 101).unwrap();
        let s = build_schedule(grid.clone(), smooth_alpha(&grid), &pb).unwrap();
        let base = expected_profit(&s, &pb).unwrap();
        let shifted = expected_profit(&s.with_beta_shift(1.5), &pb).unwrap();
        assert!((base.direct - shifted.direct - 1.5).abs() < 1e-12);
        assert_eq!(base.virtual_surplus, shifted.virtual_surplus);
    }

    #[test]
    fn truthful_utility_is_accumulated_satisfaction() {
        let pb = problem(3.0);
        let grid = TypeGrid::uniform(4.0, 6.0, 201).unwrap();
        let s = build_schedule(grid.clone(), smooth_alpha(&grid), &pb).unwrap();
        let pi_chi: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(s.alpha())
            .map(|(&t, &a)| k_theta(&pb.satisfaction, 10.0, t, a).unwrap())
            .collect();
        let acc = cumulative_trapezoid(&pi_chi, grid.step());
        for (i, &t) in grid.nodes().iter().enumerate() {
            let a = s.alpha()[i];
            let x = best_participation(&pb.satisfaction, 10.0, t, a).unwrap();
            let u = agent_utility(&pb.satisfaction, 10.0, t, x, a, s.beta()[i]).unwrap();
            assert!((u - acc[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn interpolation() {
        let grid = TypeGrid::uniform(4.0, 6.0, 3).unwrap();
        let s =
            RewardSchedule::new(grid.clone(), vec![1.0, 2.0, 4.0], vec![0.0, -1.0, -3.0]).unwrap();
        assert_eq!(s.alpha_at(4.5), 1.5);
        assert_eq!(s.alpha_at(5.5), 3.0);
        assert_eq!(s.beta_at(6.0), -3.0);
        assert!(s.is_alpha_monotone());
        assert!(RewardSchedule::new(grid, vec![1.0], vec![0.0; 3]).is_err());
    }
}
