//! Type distribution, satisfaction and revenue families, market parameters
//! and the discretized type grid.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    Uniform,
    Custom,
}

/// Tabulated density, linearly interpolated, with its exact running integral.
#[derive(Debug, Clone, PartialEq)]
struct DensityTable {
    theta: Vec<f64>,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

impl DensityTable {
    fn cell(&self, theta: f64) -> usize {
        // last index k with theta[k] <= theta, capped so k + 1 is valid
        let k = self.theta.partition_point(|&t| t <= theta);
        k.saturating_sub(1).min(self.theta.len() - 2)
    }

    fn density(&self, theta: f64) -> f64 {
        let k = self.cell(theta);
        let (t0, t1) = (self.theta[k], self.theta[k + 1]);
        let (f0, f1) = (self.density[k], self.density[k + 1]);
        f0 + (f1 - f0) * (theta - t0) / (t1 - t0)
    }

    fn cdf(&self, theta: f64) -> f64 {
        let k = self.cell(theta);
        let t0 = self.theta[k];
        let f0 = self.density[k];
        let ft = self.density(theta);
        (self.cdf[k] + 0.5 * (theta - t0) * (f0 + ft)).min(1.0)
    }
}

/// Distribution of the agent's private type over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeDistribution {
    lo: f64,
    hi: f64,
    kind: DistributionKind,
    table: Option<DensityTable>,
}

fn check_support(lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0) || !lo.is_finite() {
        return Err(Error::NonPositiveSupport { lo });
    }
    if !(hi > lo) || !hi.is_finite() {
        return Err(Error::EmptySupport { lo, hi });
    }
    Ok(())
}

impl TypeDistribution {
    /// Uniform distribution on `[lo, hi]`.
    pub fn make_uniform(lo: f64, hi: f64) -> Result<Self> {
        check_support(lo, hi)?;
        Ok(Self {
            lo,
            hi,
            kind: DistributionKind::Uniform,
            table: None,
        })
    }

    /// Distribution from tabulated density samples.
    ///
    /// The density is interpolated linearly between samples and rescaled to
    /// unit mass. The first and last abscissae define the support.
    pub fn custom(theta: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if theta.len() < 2 {
            return Err(Error::InvalidTable("need at least two samples".into()));
        }
        if theta.len() != density.len() {
            return Err(Error::LengthMismatch {
                expected: theta.len(),
                got: density.len(),
            });
        }
        let lo = theta[0];
        let hi = theta[theta.len() - 1];
        check_support(lo, hi)?;
        if theta.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidTable(
                "abscissae must be strictly increasing".into(),
            ));
        }
        if density.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::InvalidTable(
                "density values must be finite and nonnegative".into(),
            ));
        }

        let mut cdf = Vec::with_capacity(theta.len());
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..theta.len() {
            acc += 0.5 * (theta[i] - theta[i - 1]) * (density[i - 1] + density[i]);
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::InvalidTable("density has zero mass".into()));
        }
        let density: Vec<f64> = density.iter().map(|f| f / acc).collect();
        let mut cdf: Vec<f64> = cdf.iter().map(|c| (c / acc).min(1.0)).collect();
        *cdf.last_mut().unwrap() = 1.0;

        Ok(Self {
            lo,
            hi,
            kind: DistributionKind::Custom,
            table: Some(DensityTable {
                theta,
                density,
                cdf,
            }),
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    /// Tabulated samples of a custom distribution, already normalized.
    pub fn table(&self) -> Option<(&[f64], &[f64])> {
        self.table
            .as_ref()
            .map(|t| (t.theta.as_slice(), t.density.as_slice()))
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lo && theta <= self.hi
    }

    pub fn density(&self, theta: f64) -> f64 {
        if !self.contains(theta) {
            return 0.0;
        }
        match &self.table {
            None => 1.0 / (self.hi - self.lo),
            Some(t) => t.density(theta),
        }
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        if theta <= self.lo {
            return 0.0;
        }
        if theta >= self.hi {
            return 1.0;
        }
        match &self.table {
            None => (theta - self.lo) / (self.hi - self.lo),
            Some(t) => t.cdf(theta),
        }
    }

    /// Reciprocal hazard `(1 - F) / f`, finite (zero) at the upper end of the support.
    pub fn inverse_hazard(&self, theta: f64) -> Result<f64> {
        let f = self.density(theta);
        if !(f > 0.0) {
            return Err(Error::ZeroDensity { theta });
        }
        Ok((1.0 - self.cdf(theta)) / f)
    }

    /// Hazard rate `f / (1 - F)`; infinite at the upper end of the support.
    pub fn hazard(&self, theta: f64) -> f64 {
        self.density(theta) / (1.0 - self.cdf(theta))
    }
}

/// Agent satisfaction `π(x) = z2 / (1 - z1) · x^(1 - z1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatisfactionModel {
    z1: f64,
    z2: f64,
}

impl SatisfactionModel {
    /// `z1 = 0` is accepted so that linear satisfaction can be reported by
    /// [`validate_assumptions`]; the best response is undefined for it.
    pub fn new(z1: f64, z2: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&z1) {
            return Err(Error::InvalidParameter {
                name: "z1",
                value: z1,
                reason: "must lie in [0, 1)",
            });
        }
        if !(z2 > 0.0) || !z2.is_finite() {
            return Err(Error::InvalidParameter {
                name: "z2",
                value: z2,
                reason: "must be positive and finite",
            });
        }
        Ok(Self { z1, z2 })
    }

    pub fn z1(&self) -> f64 {
        self.z1
    }

    pub fn z2(&self) -> f64 {
        self.z2
    }

    pub fn value(&self, x: f64) -> f64 {
        self.z2 / (1.0 - self.z1) * x.powf(1.0 - self.z1)
    }

    pub fn marginal(&self, x: f64) -> f64 {
        self.z2 * x.powf(-self.z1)
    }

    pub fn curvature(&self, x: f64) -> f64 {
        -self.z1 * self.z2 * x.powf(-self.z1 - 1.0)
    }

    /// Inverse of the marginal satisfaction, `Γ(y) = (y / z2)^(-1/z1)`.
    pub fn inverse_marginal(&self, y: f64) -> f64 {
        (y / self.z2).powf(-1.0 / self.z1)
    }
}

/// Publisher revenue `g(x) = x^(1 - q1) / (1 - q1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevenueModel {
    q1: f64,
}

impl RevenueModel {
    pub fn new(q1: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q1) {
            return Err(Error::InvalidParameter {
                name: "q1",
                value: q1,
                reason: "must lie in [0, 1)",
            });
        }
        Ok(Self { q1 })
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }

    pub fn value(&self, x: f64) -> f64 {
        x.powf(1.0 - self.q1) / (1.0 - self.q1)
    }

    pub fn marginal(&self, x: f64) -> f64 {
        x.powf(-self.q1)
    }

    pub fn curvature(&self, x: f64) -> f64 {
        -self.q1 * x.powf(-self.q1 - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    p: f64,
}

impl MarketParams {
    /// `p` is the agent's marginal cost per unit of participation.
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::InvalidParameter {
                name: "p",
                value: p,
                reason: "must be positive and finite",
            });
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Uniformly spaced nodes covering the type support.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeGrid {
    nodes: Vec<f64>,
    step: f64,
}

impl TypeGrid {
    pub const MIN_POINTS: usize = 3;

    pub fn uniform(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if n_points < Self::MIN_POINTS {
            return Err(Error::GridTooSmall {
                min: Self::MIN_POINTS,
                got: n_points,
            });
        }
        check_support(lo, hi)?;
        let step = (hi - lo) / (n_points - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_points).map(|i| lo + i as f64 * step).collect();
        nodes[n_points - 1] = hi;
        Ok(Self { nodes, step })
    }

    pub fn for_distribution(dist: &TypeDistribution, n_points: usize) -> Result<Self> {
        Self::uniform(dist.lo(), dist.hi(), n_points)
    }

    /// Adopts externally supplied nodes, checking that they are uniformly spaced.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n < Self::MIN_POINTS {
            return Err(Error::GridTooSmall {
                min: Self::MIN_POINTS,
                got: n,
            });
        }
        check_support(nodes[0], nodes[n - 1])?;
        let step = (nodes[n - 1] - nodes[0]) / (n - 1) as f64;
        let scale = nodes[n - 1].abs().max(1.0);
        for (i, w) in nodes.windows(2).enumerate() {
            if ((w[1] - w[0]) - step).abs() > 1e-12 * scale {
                return Err(Error::NonUniformGrid(format!(
                    "spacing {} between nodes {i} and {} differs from {step}",
                    w[1] - w[0],
                    i + 1
                )));
            }
        }
        Ok(Self { nodes, step })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index of the cell `[θ_k, θ_{k+1}]` containing `theta` and the local
    /// coordinate in `[0, 1]`. Values outside the grid are clamped.
    pub fn locate(&self, theta: f64) -> (usize, f64) {
        let n = self.nodes.len();
        let s = ((theta - self.lo()) / self.step).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        (k, s - k as f64)
    }
}

/// The full economic instance: type distribution, both revenue families and the cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub dist: TypeDistribution,
    pub satisfaction: SatisfactionModel,
    pub revenue: RevenueModel,
    pub market: MarketParams,
}

impl Problem {
    pub fn p(&self) -> f64 {
        self.market.p()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    SatisfactionNotIncreasing { x: f64 },
    SatisfactionNotStrictlyConcave { x: f64 },
    RevenueNotIncreasing { x: f64 },
    RevenueNotStrictlyConcave { x: f64 },
    ZeroDensity { theta: f64 },
    HazardDecreasing { theta: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SatisfactionNotIncreasing { x } => {
                write!(f, "satisfaction is not increasing at x = {x}")
            }
            Violation::SatisfactionNotStrictlyConcave { x } => {
                write!(f, "satisfaction is not strictly concave at x = {x}")
            }
            Violation::RevenueNotIncreasing { x } => {
                write!(f, "publisher revenue is not increasing at x = {x}")
            }
            Violation::RevenueNotStrictlyConcave { x } => {
                write!(f, "publisher revenue is not strictly concave at x = {x}")
            }
            Violation::ZeroDensity { theta } => write!(f, "density vanishes at theta = {theta}"),
            Violation::HazardDecreasing { theta } => {
                write!(f, "hazard rate decreases after theta = {theta}")
            }
        }
    }
}

/// Log-spaced participation levels on `[1e-3, 1e3]` used for shape checks.
pub fn log_spaced_levels(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (count - 1) as f64))
        .collect()
}

/// Checks monotonicity and strict concavity of both value functions and
/// monotonicity of the hazard rate. Reports at most one violation per category.
pub fn validate_assumptions(
    dist: &TypeDistribution,
    satisfaction: &SatisfactionModel,
    revenue: &RevenueModel,
    grid: &TypeGrid,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let xs = log_spaced_levels(121);

    if let Some(&x) = xs.iter().find(|&&x| !(satisfaction.marginal(x) > 0.0)) {
        out.push(Violation::SatisfactionNotIncreasing { x });
    }
    if let Some(&x) = xs.iter().find(|&&x| !(satisfaction.curvature(x) < 0.0)) {
        out.push(Violation::SatisfactionNotStrictlyConcave { x });
    }
    if let Some(&x) = xs.iter().find(|&&x| !(revenue.marginal(x) > 0.0)) {
        out.push(Violation::RevenueNotIncreasing { x });
    }
    if let Some(&x) = xs.iter().find(|&&x| !(revenue.curvature(x) < 0.0)) {
        out.push(Violation::RevenueNotStrictlyConcave { x });
    }

    let nodes = grid.nodes();
    if let Some(&theta) = nodes.iter().find(|&&t| !(dist.density(t) > 0.0)) {
        out.push(Violation::ZeroDensity { theta });
        return out;
    }
    // the hazard is infinite at the top node, so it is excluded
    let hazards: Vec<f64> = nodes[..nodes.len() - 1]
        .iter()
        .map(|&t| dist.hazard(t))
        .collect();
    for (i, w) in hazards.windows(2).enumerate() {
        if w[1] < w[0] * (1.0 - 1e-12) {
            out.push(Violation::HazardDecreasing { theta: nodes[i] });
            break;
        }
    }
    out
}
