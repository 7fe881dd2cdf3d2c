//! Lagrange finite-element solver for `Δu = p` in `K`, `u = g` on `∂K`.

pub mod lagrange;
pub mod sparse;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{common_edge, BoundaryTag, Point, SubMesh};
use crate::polyspace::{triangle_quadrature, Poly1, Poly2};

pub use lagrange::LagrangeRef;
use sparse::{nested_dissection, Cholesky, Csr};

/// Relative tolerance on the interior residual checked after every solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Edge-wise polynomial Dirichlet data (in `s = 2t − 1` per edge), possibly
/// discontinuous at the polygon vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub per_edge: Vec<Poly1>,
    /// Edge whose value wins at its two end vertices; other vertices take the average
    /// of the two adjacent edge values.
    pub owner: Option<usize>,
}

impl BoundaryData {
    pub fn zero(n_faces: usize) -> Self {
        BoundaryData { per_edge: vec![Poly1::zero(); n_faces], owner: None }
    }

    pub fn uniform(n_faces: usize, c: f64) -> Self {
        BoundaryData { per_edge: vec![Poly1::constant(c); n_faces], owner: None }
    }

    /// `p · 1_f`: the polynomial on edge `edge`, zero elsewhere.
    pub fn on_edge(n_faces: usize, edge: usize, p: Poly1) -> Self {
        let mut per_edge = vec![Poly1::zero(); n_faces];
        per_edge[edge] = p;
        BoundaryData { per_edge, owner: Some(edge) }
    }

    pub fn per_edge(polys: Vec<Poly1>) -> Self {
        BoundaryData { per_edge: polys, owner: None }
    }

    pub fn is_zero(&self) -> bool {
        self.per_edge.iter().all(Poly1::is_zero)
    }

    #[inline]
    pub fn value(&self, edge: usize, t: f64) -> f64 {
        self.per_edge[edge].eval(2.0 * t - 1.0)
    }

    /// Value imposed at a boundary node.
    pub fn node_value(&self, tag: BoundaryTag) -> f64 {
        let n = self.per_edge.len();
        match tag {
            BoundaryTag::Interior => 0.0,
            BoundaryTag::OnEdge { edge, t } => self.value(edge, t),
            BoundaryTag::Corner { vertex } => {
                let next = vertex;
                let prev = (vertex + n - 1) % n;
                match self.owner {
                    Some(o) if o == next => self.value(next, 0.0),
                    Some(o) if o == prev => self.value(prev, 1.0),
                    _ => 0.5 * (self.value(next, 0.0) + self.value(prev, 1.0)),
                }
            }
        }
    }
}

/// `Δu = rhs(x − origin)` with Dirichlet data `boundary`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonProblem {
    pub rhs: Poly2,
    pub origin: Point,
    pub boundary: BoundaryData,
}

impl PoissonProblem {
    pub fn harmonic(boundary: BoundaryData) -> Self {
        PoissonProblem { rhs: Poly2::zero(), origin: [0.0, 0.0], boundary }
    }
}

/// Affine map of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct CellMap {
    pub x0: Point,
    /// Columns are the two edge vectors from `x0`.
    pub jac: [[f64; 2]; 2],
    pub det: f64,
    /// `J^{-T}`.
    pub jinv_t: [[f64; 2]; 2],
}

impl CellMap {
    pub fn new(p: [Point; 3]) -> Self {
        let jac = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let jinv_t = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        CellMap { x0: p[0], jac, det, jinv_t }
    }

    #[inline]
    pub fn map(&self, xi: [f64; 2]) -> Point {
        [
            self.x0[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.x0[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    #[inline]
    pub fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.jinv_t[0][0] * g[0] + self.jinv_t[0][1] * g[1],
            self.jinv_t[1][0] * g[0] + self.jinv_t[1][1] * g[1],
        ]
    }
}

/// Continuous Lagrange space of order `r` on a sub-mesh, with the factorized
/// interior stiffness matrix shared by every solve.
#[derive(Debug)]
pub struct FeSpace {
    pub mesh: Arc<SubMesh>,
    pub reference: LagrangeRef,
    nloc: usize,
    cell_dofs: Vec<usize>,
    pub coords: Vec<Point>,
    pub tags: Vec<BoundaryTag>,
    maps: Vec<CellMap>,
    interior: Vec<usize>,
    interior_pos: Vec<usize>,
    stiffness: Csr,
    interior_stiffness: Csr,
    boundary_facets: Vec<(usize, usize, usize)>,
    factor: OnceLock<std::result::Result<Cholesky, String>>,
}

impl FeSpace {
    pub fn new(mesh: Arc<SubMesh>, order: usize) -> Result<Arc<FeSpace>> {
        if order == 0 {
            return Err(Error::Usage("finite-element order must be at least 1".into()));
        }
        let r = order;
        let reference = LagrangeRef::new(r);
        let nloc = reference.n_local();
        let nf = mesh.polygon.n_faces();
        let nv = mesh.nodes.len();
        let mut coords = mesh.nodes.clone();
        let mut tags = mesh.tags.clone();

        let mut edge_uses: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edge_uses.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let mut edge_first: HashMap<(usize, usize), usize> = HashMap::new();
        let mut boundary_facets = Vec::new();
        let mut cell_dofs = vec![0usize; mesh.triangles.len() * nloc];
        let maps: Vec<CellMap> =
            (0..mesh.triangles.len()).map(|i| CellMap::new(mesh.triangle_points(i))).collect();
        for (ci, t) in mesh.triangles.iter().enumerate() {
            let local = &mut cell_dofs[ci * nloc..(ci + 1) * nloc];
            local[..3].copy_from_slice(t);
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let first = match edge_first.get(&key) {
                    Some(&f) => f,
                    None => {
                        let f = coords.len();
                        let boundary = edge_uses[&key] == 1;
                        let line = if boundary {
                            Some(common_edge(tags[key.0], tags[key.1], nf).ok_or_else(|| {
                                Error::Mesh(format!(
                                    "boundary mesh edge ({}, {}) does not lie on a polygon edge",
                                    key.0, key.1
                                ))
                            })?)
                        } else {
                            None
                        };
                        if let Some((edge, _, _)) = line {
                            boundary_facets.push((ci, k, edge));
                        }
                        let (pa, pb) = (mesh.nodes[key.0], mesh.nodes[key.1]);
                        for i in 1..r {
                            let f = i as f64 / r as f64;
                            coords.push([pa[0] + f * (pb[0] - pa[0]), pa[1] + f * (pb[1] - pa[1])]);
                            tags.push(match line {
                                Some((edge, ta, tb)) => BoundaryTag::OnEdge { edge, t: ta + f * (tb - ta) },
                                None => BoundaryTag::Interior,
                            });
                        }
                        edge_first.insert(key, f);
                        f
                    }
                };
                for i in 1..r {
                    let g = if a < b { first + i - 1 } else { first + (r - i) - 1 };
                    local[3 + k * (r - 1) + i - 1] = g;
                }
            }
            for (m, node) in reference.nodes.iter().enumerate().skip(3 + 3 * (r - 1)) {
                local[m] = coords.len();
                coords.push(maps[ci].map(*node));
                tags.push(BoundaryTag::Interior);
            }
        }
        let n = coords.len();
        debug_assert!(nv <= n);

        // stiffness: ∫ ∇φ_i · ∇φ_j
        let rule = triangle_quadrature(2 * (r - 1))?;
        let grads: Vec<Vec<[f64; 2]>> = rule.points.iter().map(|&p| reference.grad(p)).collect();
        let local_mats: Vec<Vec<f64>> = maps
            .par_iter()
            .map(|m| {
                let mut k = vec![0.0; nloc * nloc];
                for (q, w) in rule.weights.iter().enumerate() {
                    let g: Vec<[f64; 2]> = grads[q].iter().map(|&g| m.grad(g)).collect();
                    let wq = w * m.det.abs();
                    for i in 0..nloc {
                        for j in 0..nloc {
                            k[i * nloc + j] += wq * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                        }
                    }
                }
                k
            })
            .collect();
        let mut trip = Vec::with_capacity(maps.len() * nloc * nloc);
        for (ci, k) in local_mats.iter().enumerate() {
            let dofs = &cell_dofs[ci * nloc..(ci + 1) * nloc];
            for i in 0..nloc {
                for j in 0..nloc {
                    trip.push((dofs[i], dofs[j], k[i * nloc + j]));
                }
            }
        }
        let stiffness = Csr::from_triplets(n, trip);

        let interior: Vec<usize> = (0..n).filter(|&i| !tags[i].is_boundary()).collect();
        let mut interior_pos = vec![usize::MAX; n];
        for (k, &i) in interior.iter().enumerate() {
            interior_pos[i] = k;
        }
        let mut itrip = Vec::new();
        for (k, &i) in interior.iter().enumerate() {
            for (j, v) in stiffness.row(i) {
                if interior_pos[j] != usize::MAX {
                    itrip.push((k, interior_pos[j], v));
                }
            }
        }
        let interior_stiffness = Csr::from_triplets(interior.len(), itrip);

        Ok(Arc::new(FeSpace {
            mesh,
            reference,
            nloc,
            cell_dofs,
            coords,
            tags,
            maps,
            interior,
            interior_pos,
            stiffness,
            interior_stiffness,
            boundary_facets,
            factor: OnceLock::new(),
        }))
    }

    pub fn order(&self) -> usize {
        self.reference.order
    }

    pub fn n_dofs(&self) -> usize {
        self.coords.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_local(&self) -> usize {
        self.nloc
    }

    pub fn n_cells(&self) -> usize {
        self.maps.len()
    }

    #[inline]
    pub fn cell_dofs(&self, cell: usize) -> &[usize] {
        &self.cell_dofs[cell * self.nloc..(cell + 1) * self.nloc]
    }

    /// `(cell, local edge, polygon edge)` for every mesh edge on the boundary; local
    /// edge `k` joins reference vertices `k` and `k + 1`.
    pub fn boundary_facets(&self) -> &[(usize, usize, usize)] {
        &self.boundary_facets
    }

    #[inline]
    pub fn cell_map(&self, cell: usize) -> &CellMap {
        &self.maps[cell]
    }

    fn factor(&self) -> Result<&Cholesky> {
        self.factor
            .get_or_init(|| {
                let xy: Vec<Point> = self.interior.iter().map(|&i| self.coords[i]).collect();
                let perm = nested_dissection(&self.interior_stiffness, &xy);
                Cholesky::factor(&self.interior_stiffness, perm).map_err(|e| e.to_string())
            })
            .as_ref()
            .map_err(|e| Error::Solve(e.clone()))
    }

    /// Solves one problem on this space.
    pub fn solve(self: &Arc<Self>, prob: &PoissonProblem) -> Result<DiscreteField> {
        let n = self.n_dofs();
        if prob.boundary.per_edge.len() != self.mesh.polygon.n_faces() {
            return Err(Error::Usage(format!(
                "boundary data has {} edges, polygon has {}",
                prob.boundary.per_edge.len(),
                self.mesh.polygon.n_faces()
            )));
        }
        let mut u = vec![0.0; n];
        for i in 0..n {
            if self.tags[i].is_boundary() {
                u[i] = prob.boundary.node_value(self.tags[i]);
            }
        }
        // load: weak form of Δu = p is ∫∇u·∇v = −∫ p v
        let mut load = vec![0.0; n];
        if !prob.rhs.is_zero() {
            let deg = prob.rhs.total_degree().unwrap_or(0) + self.order();
            let rule = triangle_quadrature(deg)?;
            let vals: Vec<Vec<f64>> = rule.points.iter().map(|&p| self.reference.eval(p)).collect();
            for (ci, m) in self.maps.iter().enumerate() {
                let dofs = self.cell_dofs(ci);
                for (q, w) in rule.weights.iter().enumerate() {
                    let x = m.map(rule.points[q]);
                    let p = prob.rhs.eval([x[0] - prob.origin[0], x[1] - prob.origin[1]]);
                    let wq = w * m.det.abs() * p;
                    for (j, &d) in dofs.iter().enumerate() {
                        load[d] -= wq * vals[q][j];
                    }
                }
            }
        }
        let ni = self.interior.len();
        if ni > 0 {
            let mut b = vec![0.0; ni];
            for (k, &i) in self.interior.iter().enumerate() {
                let mut s = load[i];
                for (j, v) in self.stiffness.row(i) {
                    if self.interior_pos[j] == usize::MAX {
                        s -= v * u[j];
                    }
                }
                b[k] = s;
            }
            let x = self.factor()?.solve(&b);
            let r = self.interior_stiffness.matvec(&x);
            let res = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !res.is_finite() || res > RESIDUAL_TOL * bn.max(f64::MIN_POSITIVE) && res > 1e-300 {
                return Err(Error::Solve(format!(
                    "interior residual {res:e} exceeds {RESIDUAL_TOL:e} relative to {bn:e}"
                )));
            }
            for (k, &i) in self.interior.iter().enumerate() {
                u[i] = x[k];
            }
        }
        Ok(DiscreteField { space: Arc::clone(self), values: u, boundary: prob.boundary.clone() })
    }

    /// Solves independent problems concurrently, sharing one factorization.
    pub fn solve_many(self: &Arc<Self>, probs: &[PoissonProblem]) -> Result<Vec<DiscreteField>> {
        if self.n_interior() > 0 {
            self.factor()?;
        }
        probs.par_iter().map(|p| self.solve(p)).collect()
    }
}

/// Builds the order-`r` space on `mesh` and solves `prob`.
pub fn solve_poisson(mesh: Arc<SubMesh>, prob: &PoissonProblem, fe_order: usize) -> Result<DiscreteField> {
    FeSpace::new(mesh, fe_order)?.solve(prob)
}

/// One discrete Poisson solution.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub space: Arc<FeSpace>,
    pub values: Vec<f64>,
    pub boundary: BoundaryData,
}

impl DiscreteField {
    pub fn order(&self) -> usize {
        self.space.order()
    }

    /// Value in cell `cell` at reference coordinates `xi`.
    pub fn cell_value(&self, cell: usize, xi: [f64; 2]) -> f64 {
        let phi = self.space.reference.eval(xi);
        self.space.cell_dofs(cell).iter().zip(&phi).map(|(&d, p)| self.values[d] * p).sum()
    }

    pub fn cell_gradient(&self, cell: usize, xi: [f64; 2]) -> [f64; 2] {
        let g = self.space.reference.grad(xi);
        let mut r = [0.0; 2];
        for (&d, gi) in self.space.cell_dofs(cell).iter().zip(&g) {
            r[0] += self.values[d] * gi[0];
            r[1] += self.values[d] * gi[1];
        }
        self.space.cell_map(cell).grad(r)
    }

    pub fn evaluate(&self, p: Point) -> Result<f64> {
        let (c, xi) = self.space.mesh.locate(p)?;
        Ok(self.cell_value(c, xi))
    }

    pub fn evaluate_gradient(&self, p: Point) -> Result<[f64; 2]> {
        let (c, xi) = self.space.mesh.locate(p)?;
        Ok(self.cell_gradient(c, xi))
    }

    /// The prescribed boundary value along `edge` (exact edge-wise data).
    pub fn trace_on_edge(&self, edge: usize, t: f64) -> f64 {
        self.boundary.value(edge, t)
    }

    /// The finite-element function itself evaluated on the boundary.
    pub fn fe_trace(&self, edge: usize, t: f64) -> Result<f64> {
        self.evaluate(self.space.mesh.polygon.edge(edge).point(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{triangulate, Polygon};
    use crate::polyspace::Monomial2D;
    use proptest::prelude::*;

    fn square() -> Polygon {
        Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
    }

    fn space(p: &Polygon, h: f64, r: usize) -> Arc<FeSpace> {
        FeSpace::new(Arc::new(triangulate(p, h).unwrap()), r).unwrap()
    }

    #[test]
    fn zero_data_zero_solution() {
        let fe = space(&square(), 0.3, 2);
        let u = fe.solve(&PoissonProblem::harmonic(BoundaryData::zero(4))).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constants_are_harmonic() {
        let fe = space(&square(), 0.3, 3);
        let u = fe.solve(&PoissonProblem::harmonic(BoundaryData::uniform(4, 1.0))).unwrap();
        assert!(u.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!((u.evaluate([0.31, 0.72]).unwrap() - 1.0).abs() < 1e-12);
    }

    /// u = x(1 − x): Δu = −2, trace x(1−x) on the horizontal edges.
    fn manufactured(r: usize) -> DiscreteField {
        let p = square();
        let fe = space(&p, 0.3, r);
        // edge 0 runs (0,0)→(1,0): x = t = (s+1)/2 ⇒ x(1−x) = (1 − s²)/4
        // edge 2 runs (1,1)→(0,1): x = 1 − t, same polynomial in s
        let q = Poly1::new(vec![0.25, 0.0, -0.25]);
        let bd = BoundaryData::per_edge(vec![q.clone(), Poly1::zero(), q, Poly1::zero()]);
        let prob = PoissonProblem { rhs: Poly2::constant(-2.0), origin: [0.0, 0.0], boundary: bd };
        fe.solve(&prob).unwrap()
    }

    #[test]
    fn manufactured_quadratic_is_exact() {
        for r in 2..=4 {
            let u = manufactured(r);
            let err = u
                .space
                .coords
                .iter()
                .zip(&u.values)
                .map(|(x, v)| (v - x[0] * (1.0 - x[0])).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "r={r} err={err}");
        }
        let u = manufactured(2);
        let g = u.evaluate_gradient([0.5, 0.3]).unwrap();
        assert!(g[0].abs() < 1e-9 && g[1].abs() < 1e-9);
    }

    #[test]
    fn vertex_values_are_continuous() {
        let u = manufactured(2);
        let mesh = &u.space.mesh;
        // node 4+ are refinement nodes; pick an interior vertex and evaluate in all its triangles
        let v = (0..mesh.nodes.len()).find(|&i| !mesh.tags[i].is_boundary()).unwrap();
        let mut vals = vec![];
        for (ci, t) in mesh.triangles.iter().enumerate() {
            if let Some(k) = t.iter().position(|&x| x == v) {
                let xi = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]][k];
                vals.push(u.cell_value(ci, xi));
            }
        }
        assert!(vals.len() > 1);
        assert!(vals.iter().all(|&x| x == vals[0]));
    }

    #[test]
    fn indicator_trace() {
        let p = square();
        let fe = space(&p, 0.3, 2);
        // t(1−t) with t = (s+1)/2 ⇒ (1 − s²)/4
        let g = BoundaryData::on_edge(4, 0, Poly1::new(vec![0.25, 0.0, -0.25]));
        let u = fe.solve(&PoissonProblem::harmonic(g)).unwrap();
        assert!((u.trace_on_edge(0, 0.5) - 0.25).abs() < 1e-12);
        assert!((u.fe_trace(0, 0.5).unwrap() - 0.25).abs() < 1e-12);
        for e in 1..4 {
            for t in [0.1, 0.5, 0.9] {
                assert_eq!(u.trace_on_edge(e, t), 0.0);
            }
        }
    }

    fn l2_error(r: usize, h: f64) -> f64 {
        // u = x^{r+1} + y^{r+1}; Δu = (r+1) r (x^{r−1} + y^{r−1})
        let p = square();
        let fe = space(&p, h, r);
        let e = (r + 1) as f64;
        let mut per_edge = vec![];
        for edge in p.edges() {
            let x = Poly1::new(vec![(edge.start[0] + edge.end[0]) / 2.0, (edge.end[0] - edge.start[0]) / 2.0]);
            let y = Poly1::new(vec![(edge.start[1] + edge.end[1]) / 2.0, (edge.end[1] - edge.start[1]) / 2.0]);
            per_edge.push(x.pow(r + 1).add(&y.pow(r + 1)));
        }
        let rhs = Poly2::monomial(Monomial2D::new(r - 1, 0), e * r as f64)
            .add(&Poly2::monomial(Monomial2D::new(0, r - 1), e * r as f64));
        let u = fe
            .solve(&PoissonProblem { rhs, origin: [0.0, 0.0], boundary: BoundaryData::per_edge(per_edge) })
            .unwrap();
        let rule = triangle_quadrature(2 * r + 4).unwrap();
        let mut s = 0.0;
        for c in 0..fe.n_cells() {
            let m = fe.cell_map(c);
            for (q, w) in rule.points.iter().zip(&rule.weights) {
                let x = m.map(*q);
                let d = u.cell_value(c, *q) - (x[0].powi(r as i32 + 1) + x[1].powi(r as i32 + 1));
                s += w * m.det.abs() * d * d;
            }
        }
        s.sqrt()
    }

    #[test]
    fn convergence_rate() {
        for r in 1..=3 {
            let e1 = l2_error(r, 0.5);
            let e2 = l2_error(r, 0.25);
            let rate = e1 / e2;
            let want = 2f64.powi(r as i32);
            assert!(rate >= 0.7 * want, "r={r} rate={rate}");
        }
    }

    #[test]
    fn maximum_principle_smoke() {
        let p = Polygon::new(vec![[0.0, 0.0], [2.0, 0.3], [1.0, 0.9], [2.1, 1.8], [0.2, 1.5]]).unwrap();
        let fe = space(&p, p.diameter() / 8.0, 2);
        let g = BoundaryData::on_edge(5, 2, Poly1::constant(1.0));
        let u = fe.solve(&PoissonProblem::harmonic(g)).unwrap();
        assert!(u.values.iter().all(|&v| (-0.05..=1.05).contains(&v)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn superposition(c in proptest::collection::vec(-2.0f64..2.0, 3), a in 0usize..3, b in 0usize..3, edge in 0usize..4) {
            let fe = space(&square(), 0.35, 2);
            let rhs = Poly2::monomial(Monomial2D::new(a, b), c[0]);
            let g = BoundaryData::on_edge(4, edge, Poly1::new(vec![c[1], c[2]]));
            let both = fe.solve(&PoissonProblem { rhs: rhs.clone(), origin: [0.5, 0.5], boundary: g.clone() }).unwrap();
            let p1 = fe.solve(&PoissonProblem { rhs, origin: [0.5, 0.5], boundary: BoundaryData::zero(4) }).unwrap();
            let p2 = fe.solve(&PoissonProblem::harmonic(g)).unwrap();
            let scale = both.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            for i in 0..both.values.len() {
                prop_assert!((both.values[i] - p1.values[i] - p2.values[i]).abs() <= 1e-11 * scale);
            }
        }
    }
}
