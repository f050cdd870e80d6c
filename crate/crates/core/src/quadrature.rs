//! Composite trapezoid rules on uniform grids and a fixed Gauss–Legendre rule.
//!
//! All sums run left to right so results are reproducible bit for bit.

/// Composite trapezoid integral of equally spaced samples.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            dx * (0.5 * values[0] + interior + 0.5 * values[n - 1])
        }
    }
}

/// Running trapezoid integral; element `j` integrates from node 0 to node `j`.
pub fn cumulative_trapezoid(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * dx * (values[i - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Five-point Gauss–Legendre nodes and weights on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Integrates `f` over `[a, b]` with the five-point Gauss–Legendre rule.
pub fn gauss_legendre5<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL5.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let xs: Vec<f64> = (0..11).map(|i| 1.0 + 0.1 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 2.0).collect();
        // ∫_1^2 (3x - 2) dx = 2.5
        assert!((trapezoid(&ys, 0.1) - 2.5).abs() < 1e-12);
        let cum = cumulative_trapezoid(&ys, 0.1);
        assert_eq!(cum[0], 0.0);
        assert!((cum[10] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn short_inputs() {
        assert_eq!(trapezoid(&[], 1.0), 0.0);
        assert_eq!(trapezoid(&[5.0], 1.0), 0.0);
        assert_eq!(cumulative_trapezoid(&[5.0], 1.0), vec![0.0]);
    }

    #[test]
    fn gauss_legendre_exact_to_degree_nine() {
        let v = gauss_legendre5(0.0, 2.0, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-10);
    }
}
