//! Lagrange elements of arbitrary order on the reference triangle.

use nalgebra::DMatrix;

/// Equispaced Lagrange basis of order `r` on `{(0,0), (1,0), (0,1)}`.
///
/// Local node order: the three vertices, then `r − 1` nodes along each edge
/// (v0→v1, v1→v2, v2→v0), then interior nodes.
#[derive(Debug, Clone)]
pub struct LagrangeRef {
    pub order: usize,
    pub nodes: Vec<[f64; 2]>,
    exps: Vec<(usize, usize)>,
    /// `coef[j * n + m]`: coefficient of monomial `m` in basis function `j`.
    coef: Vec<f64>,
}

impl LagrangeRef {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let r = order;
        let rf = r as f64;
        let mut nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        for i in 1..r {
            nodes.push([i as f64 / rf, 0.0]);
        }
        for i in 1..r {
            nodes.push([(r - i) as f64 / rf, i as f64 / rf]);
        }
        for i in 1..r {
            nodes.push([0.0, (r - i) as f64 / rf]);
        }
        for j in 1..r {
            for i in 1..r {
                if i + j < r {
                    nodes.push([i as f64 / rf, j as f64 / rf]);
                }
            }
        }
        let mut exps = Vec::new();
        for d in 0..=r {
            for a in (0..=d).rev() {
                exps.push((a, d - a));
            }
        }
        let n = nodes.len();
        debug_assert_eq!(n, exps.len());
        let v = DMatrix::from_fn(n, n, |i, m| {
            nodes[i][0].powi(exps[m].0 as i32) * nodes[i][1].powi(exps[m].1 as i32)
        });
        let inv = v.try_inverse().expect("Lagrange Vandermonde matrix is invertible");
        // basis_j = Σ_m inv[m, j] x^m
        let mut coef = vec![0.0; n * n];
        for j in 0..n {
            for m in 0..n {
                coef[j * n + m] = inv[(m, j)];
            }
        }
        LagrangeRef { order, nodes, exps, coef }
    }

    pub fn n_local(&self) -> usize {
        self.nodes.len()
    }

    fn powers(&self, x: f64) -> Vec<f64> {
        let mut p = vec![1.0; self.order + 1];
        for i in 1..=self.order {
            p[i] = p[i - 1] * x;
        }
        p
    }

    pub fn eval(&self, xi: [f64; 2]) -> Vec<f64> {
        let n = self.n_local();
        let (px, py) = (self.powers(xi[0]), self.powers(xi[1]));
        let mono: Vec<f64> = self.exps.iter().map(|&(a, b)| px[a] * py[b]).collect();
        (0..n)
            .map(|j| self.coef[j * n..(j + 1) * n].iter().zip(&mono).map(|(c, m)| c * m).sum())
            .collect()
    }

    /// Reference gradients `(∂/∂ξ, ∂/∂η)`.
    pub fn grad(&self, xi: [f64; 2]) -> Vec<[f64; 2]> {
        let n = self.n_local();
        let (px, py) = (self.powers(xi[0]), self.powers(xi[1]));
        let dx: Vec<f64> = self
            .exps
            .iter()
            .map(|&(a, b)| if a == 0 { 0.0 } else { a as f64 * px[a - 1] * py[b] })
            .collect();
        let dy: Vec<f64> = self
            .exps
            .iter()
            .map(|&(a, b)| if b == 0 { 0.0 } else { b as f64 * px[a] * py[b - 1] })
            .collect();
        (0..n)
            .map(|j| {
                let c = &self.coef[j * n..(j + 1) * n];
                [
                    c.iter().zip(&dx).map(|(c, m)| c * m).sum(),
                    c.iter().zip(&dy).map(|(c, m)| c * m).sum(),
                ]
            })
            .collect()
    }
}
