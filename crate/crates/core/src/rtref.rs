//! Raviart–Thomas elements on triangles with explicit polynomial bases; used as an
//! exact reference for the polygonal element.

use nalgebra::DMatrix;

use crate::element::TraceElement;
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};
use crate::hkspace::{build_space, ElementSpec, SpaceBasis};
use crate::element::Element;
use crate::polyspace::{edge_quadrature, family, triangle_quadrature, Monomial2D, Poly2, ProjectorKind};

pub type VecPoly = [Poly2; 2];

/// `(P_k)² ⊕ x·P_[k]` on a triangle, in coordinates centred at its centroid.
#[derive(Debug, Clone)]
pub struct RtSpace {
    pub k: usize,
    pub triangle: Polygon,
    pub origin: Point,
    pub basis: Vec<VecPoly>,
}

pub fn rt_dimension(k: usize) -> usize {
    (k + 1) * (k + 3)
}

fn monomials_total(d: usize) -> impl Iterator<Item = Monomial2D> {
    (0..=d).flat_map(|t| (0..=t).rev().map(move |a| Monomial2D::new(a, t - a)))
}

fn homogeneous(d: usize) -> impl Iterator<Item = Monomial2D> {
    (0..=d).rev().map(move |a| Monomial2D::new(a, d - a))
}

pub fn reference_triangle() -> Polygon {
    Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).expect("reference triangle")
}

pub fn rt_space_basis(k: usize) -> RtSpace {
    rt_space_on(&reference_triangle(), k).expect("reference triangle is a triangle")
}

pub fn rt_space_on(triangle: &Polygon, k: usize) -> Result<RtSpace> {
    if triangle.n_faces() != 3 {
        return Err(Error::Geometry(format!("expected a triangle, got {} vertices", triangle.n_faces())));
    }
    let mut basis = Vec::new();
    for m in monomials_total(k) {
        basis.push([Poly2::monomial(m, 1.0), Poly2::zero()]);
        basis.push([Poly2::zero(), Poly2::monomial(m, 1.0)]);
    }
    for m in homogeneous(k) {
        basis.push([
            Poly2::monomial(Monomial2D::new(m.a + 1, m.b), 1.0),
            Poly2::monomial(Monomial2D::new(m.a, m.b + 1), 1.0),
        ]);
    }
    Ok(RtSpace { k, triangle: triangle.clone(), origin: triangle.centroid(), basis })
}

pub fn divergence(q: &VecPoly) -> Poly2 {
    q[0].dx().add(&q[1].dy()).normalized()
}

fn combine(coeffs: &[f64], basis: &[VecPoly]) -> VecPoly {
    let mut out = [Poly2::zero(), Poly2::zero()];
    for (c, b) in coeffs.iter().zip(basis) {
        if *c != 0.0 {
            out[0] = out[0].add(&b[0].scale(*c));
            out[1] = out[1].add(&b[1].scale(*c));
        }
    }
    [out[0].clone().normalized(), out[1].clone().normalized()]
}

/// Nodal basis dual to edge moments against Legendre polynomials and interior
/// moments against `(P_{k−1})²`.
#[derive(Debug, Clone)]
pub struct RtElement {
    pub space: RtSpace,
    pub duals: Vec<VecPoly>,
    pub transfer: DMatrix<f64>,
    pub kronecker_defect: f64,
    pub n_normal: usize,
}

impl RtElement {
    fn local(&self, x: Point) -> Point {
        [x[0] - self.space.origin[0], x[1] - self.space.origin[1]]
    }

    pub fn value(&self, i: usize, x: Point) -> [f64; 2] {
        let xl = self.local(x);
        [self.duals[i][0].eval(xl), self.duals[i][1].eval(xl)]
    }

    pub fn len(&self) -> usize {
        self.duals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.duals.is_empty()
    }

    /// `σ_i(q)` for any polynomial field in local coordinates.
    pub fn apply_dof(&self, i: usize, q: &VecPoly) -> f64 {
        let sp = &self.space;
        let xl = |x: Point| [x[0] - sp.origin[0], x[1] - sp.origin[1]];
        if i < self.n_normal {
            self.apply_edge_dof(i, &|e, t| {
                let p = xl(sp.triangle.edge(e).point(t));
                [q[0].eval(p), q[1].eval(p)]
            })
        } else {
            let j = i - self.n_normal;
            let kernels = internal_kernels(sp.k);
            let rule = triangle_quadrature(2 * sp.k + 2).expect("moderate exactness");
            let v = sp.triangle.vertices();
            let det = ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[1][1] - v[0][1]) * (v[2][0] - v[0][0])).abs();
            rule.integrate(|xi| {
                let x = [
                    v[0][0] + xi[0] * (v[1][0] - v[0][0]) + xi[1] * (v[2][0] - v[0][0]),
                    v[0][1] + xi[0] * (v[1][1] - v[0][1]) + xi[1] * (v[2][1] - v[0][1]),
                ];
                let p = xl(x);
                q[0].eval(p) * kernels[j][0].eval(p) + q[1].eval(p) * kernels[j][1].eval(p)
            }) * det
        }
    }
}

fn internal_kernels(k: usize) -> Vec<VecPoly> {
    if k == 0 {
        return vec![];
    }
    monomials_total(k - 1)
        .flat_map(|m| {
            [[Poly2::monomial(m, 1.0), Poly2::zero()], [Poly2::zero(), Poly2::monomial(m, 1.0)]]
        })
        .collect()
}

pub fn rt_nodal_basis(k: usize) -> RtElement {
    rt_nodal_basis_on(&reference_triangle(), k).expect("reference triangle")
}

pub fn rt_nodal_basis_on(triangle: &Polygon, k: usize) -> Result<RtElement> {
    let space = rt_space_on(triangle, k)?;
    let n = space.basis.len();
    let mut el = RtElement { space, duals: vec![], transfer: DMatrix::zeros(n, n), kronecker_defect: 0.0, n_normal: 3 * (k + 1) };
    let t = DMatrix::from_fn(n, n, |i, j| el.apply_dof(i, &el.space.basis[j]));
    let c = t
        .clone()
        .full_piv_lu()
        .try_inverse()
        .ok_or_else(|| Error::Unisolvence("Raviart–Thomas transfer matrix is singular".into()))?;
    el.duals = (0..n).map(|i| combine(c.column(i).as_slice(), &el.space.basis)).collect();
    el.transfer = t;
    el.kronecker_defect = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (el.apply_dof(i, &el.duals[j]) - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    Ok(el)
}

impl TraceElement for RtElement {
    fn polygon(&self) -> &Polygon {
        &self.space.triangle
    }
    fn n_basis(&self) -> usize {
        self.len()
    }
    fn edge_dofs(&self, edge: usize) -> std::ops::Range<usize> {
        let k = self.space.k;
        edge * (k + 1)..(edge + 1) * (k + 1)
    }
    fn apply_edge_dof(&self, i: usize, q: &dyn Fn(usize, f64) -> [f64; 2]) -> f64 {
        let k = self.space.k;
        let (e, j) = (i / (k + 1), i % (k + 1));
        let ed = self.space.triangle.edge(e);
        let leg = &family(ProjectorKind::Orthogonal, k)[j];
        let rule = edge_quadrature(2 * k + 2).expect("moderate exactness");
        0.5 * ed.length
            * rule.integrate(|s| {
                let t = 0.5 * (s + 1.0);
                let v = q(e, t);
                (v[0] * ed.normal[0] + v[1] * ed.normal[1]) * leg.eval(s)
            })
    }
    fn dual_trace(&self, i: usize, edge: usize, t: f64) -> [f64; 2] {
        self.value(i, self.space.triangle.edge(edge).point(t))
    }
}

/// Largest coefficient of `div q` above total degree `k`, relative to the largest one.
pub fn divergence_excess(q: &VecPoly, k: usize) -> f64 {
    let d = divergence(q);
    let max = d.terms.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    d.terms.iter().filter(|(m, _)| m.total_degree() > k).map(|(_, c)| c.abs()).fold(0.0, f64::max) / max
}

/// Largest `|φ·n|` over the boundary of the internal duals.
pub fn internal_trace_defect(el: &RtElement) -> f64 {
    let mut d: f64 = 0.0;
    for i in el.n_normal..el.len() {
        for e in 0..3 {
            for s in 0..33 {
                let v = el.dual_trace(i, e, s as f64 / 32.0);
                let n = el.space.triangle.edge(e).normal;
                d = d.max((v[0] * n[0] + v[1] * n[1]).abs());
            }
        }
    }
    d
}

/// Per-edge comparison of normal-trace spans.
#[derive(Debug, Clone)]
pub struct TraceComparison {
    pub k: usize,
    /// `(rank of H_k traces, rank of RT traces, rank of the cross-Gram)` per edge.
    pub ranks: Vec<(usize, usize, usize)>,
}

impl TraceComparison {
    pub fn matches(&self) -> bool {
        self.ranks.iter().all(|&(a, b, c)| a == self.k + 1 && b == self.k + 1 && c == self.k + 1)
    }
}

fn orthonormal_span(samples: &[Vec<f64>], weights: &[f64]) -> DMatrix<f64> {
    // columns of the result: orthonormal basis (in the weighted inner product) of the span
    let m = weights.len();
    let a = DMatrix::from_fn(m, samples.len(), |q, j| samples[j][q] * weights[q].sqrt());
    let svd = a.svd(true, false);
    let u = svd.u.expect("requested U");
    let max = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > 1e-8 * max).count();
    u.columns(0, rank).into_owned()
}

/// Normal traces of the element on `triangle` with `(l1, l2) = (−1, k)` against RT_k.
pub fn rt_compare_normal_traces_on(triangle: &Polygon, k: usize) -> Result<TraceComparison> {
    let spec = ElementSpec::custom(k, -1, k as i32, k as i32 - 1, k as i32 - 1)
        .with_h_target(triangle.diameter() / 8.0);
    let space: SpaceBasis = build_space(triangle, &spec)?;
    let el = Element::from_space(std::sync::Arc::new(space))?;
    let rt = rt_nodal_basis_on(triangle, k)?;
    let rule = edge_quadrature(2 * k + 4)?;
    let ts: Vec<f64> = rule.points.iter().map(|s| 0.5 * (s + 1.0)).collect();
    let mut ranks = Vec::new();
    for e in 0..3 {
        let n = triangle.edge(e).normal;
        let sample = |f: &dyn Fn(f64) -> [f64; 2]| -> Vec<f64> {
            ts.iter().map(|&t| {
                let v = f(t);
                v[0] * n[0] + v[1] * n[1]
            }).collect()
        };
        let hk: Vec<Vec<f64>> = (0..el.len()).map(|i| sample(&|t| el.trace(i, e, t))).collect();
        let rs: Vec<Vec<f64>> = (0..rt.len()).map(|i| sample(&|t| rt.dual_trace(i, e, t))).collect();
        let ua = orthonormal_span(&hk, &rule.weights);
        let ub = orthonormal_span(&rs, &rule.weights);
        let cross = ua.transpose() * &ub;
        let sv = cross.singular_values();
        // principal cosines equal to one ⇔ shared directions
        let shared = sv.iter().filter(|&&s| s > 1.0 - 1e-8).count();
        ranks.push((ua.ncols(), ub.ncols(), shared));
    }
    Ok(TraceComparison { k, ranks })
}

pub fn rt_compare_normal_traces(k: usize) -> Result<TraceComparison> {
    let tri = Polygon::new(vec![[0.0, 0.0], [1.0, 0.15], [0.35, 0.9]])?;
    rt_compare_normal_traces_on(&tri, k)
}
