//! Gauss-type rules on the reference interval `[−1, 1]` and the reference triangle
//! `{(0,0), (1,0), (0,1)}`.

use crate::error::{Error, Result};

/// Highest exactness degree served; beyond this the Newton iteration for the
/// Legendre nodes is no longer trusted to full precision.
pub const MAX_EXACTNESS: usize = 80;

#[derive(Debug, Clone)]
pub struct EdgeRule {
    /// Nodes in `[−1, 1]`.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

#[derive(Debug, Clone)]
pub struct TriangleRule {
    /// Nodes `(ξ, η)` in the reference triangle.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

/// Legendre polynomial `P_n(z)` and its derivative.
fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// `n`-point Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, z);
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

pub fn edge_quadrature(exactness: usize) -> Result<EdgeRule> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::Quadrature(format!(
            "edge exactness {exactness} exceeds the supported maximum {MAX_EXACTNESS}"
        )));
    }
    let n = exactness / 2 + 1;
    let (points, weights) = gauss_legendre(n);
    Ok(EdgeRule { points, weights, exactness })
}

/// Conical (collapsed) product rule: `x = u`, `y = v(1 − u)` with Gauss–Legendre in
/// both directions.
pub fn triangle_quadrature(exactness: usize) -> Result<TriangleRule> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::Quadrature(format!(
            "triangle exactness {exactness} exceeds the supported maximum {MAX_EXACTNESS}"
        )));
    }
    let n = (exactness + 2).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        let u = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let v = 0.5 * (x[j] + 1.0);
            points.push([u, v * (1.0 - u)]);
            weights.push(0.25 * w[i] * w[j] * (1.0 - u));
        }
    }
    Ok(TriangleRule { points, weights, exactness })
}

impl EdgeRule {
    /// Integrates over `[−1, 1]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&s, &w)| w * f(s)).sum()
    }
}

impl TriangleRule {
    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }
}

/// Exact `∫_T ξ^a η^b` over the reference triangle: `a! b! / (a + b + 2)!`.
pub fn reference_triangle_monomial_integral(a: usize, b: usize) -> f64 {
    let mut v = 1.0;
    // a! b! / (a+b+2)! = 1/((a+b+2)(a+b+1) · binom(a+b, a))
    let n = a + b;
    let mut binom = 1.0;
    for i in 0..a.min(b) {
        binom = binom * (n - i) as f64 / (i + 1) as f64;
    }
    v /= (n + 2) as f64 * (n + 1) as f64 * binom;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_point_rule() {
        let r = edge_quadrature(3).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!((r.integrate(|t| t * t) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_area() {
        let r = triangle_quadrature(1).unwrap();
        assert!((r.integrate(|_| 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn triangle_x2y() {
        let r = triangle_quadrature(4).unwrap();
        let v = r.integrate(|p| p[0] * p[0] * p[1]);
        assert!((v - 1.0 / 60.0).abs() < 1e-15);
        assert!((reference_triangle_monomial_integral(2, 1) - 1.0 / 60.0).abs() < 1e-16);
    }

    #[test]
    fn too_high_exactness() {
        assert_eq!(edge_quadrature(500).unwrap_err().kind(), "QuadratureError");
        assert_eq!(triangle_quadrature(81).unwrap_err().kind(), "QuadratureError");
    }

    fn interval_monomial(k: usize) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            2.0 / (k + 1) as f64
        }
    }

    proptest! {
        #[test]
        fn edge_rule_is_exact(deg in 0usize..40, seed in proptest::collection::vec(-1.0f64..1.0, 41)) {
            let r = edge_quadrature(deg).unwrap();
            let got = r.integrate(|s| (0..=deg).map(|k| seed[k] * s.powi(k as i32)).sum());
            let want: f64 = (0..=deg).map(|k| seed[k] * interval_monomial(k)).sum();
            let scale: f64 = (0..=deg).map(|k| seed[k].abs() * interval_monomial(k).max(2.0 / (k + 1) as f64)).sum();
            prop_assert!((got - want).abs() <= 1e-12 * scale.max(1e-300));
        }

        #[test]
        fn triangle_rule_is_exact(deg in 0usize..25, seed in proptest::collection::vec(-1.0f64..1.0, 400)) {
            let r = triangle_quadrature(deg).unwrap();
            let mut terms = vec![];
            let mut i = 0;
            for a in 0..=deg {
                for b in 0..=deg - a {
                    terms.push((a, b, seed[i]));
                    i += 1;
                }
            }
            let got = r.integrate(|p| terms.iter().map(|&(a, b, c)| c * p[0].powi(a as i32) * p[1].powi(b as i32)).sum());
            let want: f64 = terms.iter().map(|&(a, b, c)| c * reference_triangle_monomial_integral(a, b)).sum();
            let scale: f64 = terms.iter().map(|&(a, b, c)| c.abs() * reference_triangle_monomial_integral(a, b)).sum();
            prop_assert!((got - want).abs() <= 1e-12 * scale);
        }
    }
}
