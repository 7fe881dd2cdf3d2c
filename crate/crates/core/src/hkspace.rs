//! Generator basis of `H_k(K) = (A_k)² ⊕ x·B_k` and its dimension bookkeeping.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_admissibility, triangulate, AdmissibilityReport, Point, Polygon, DEFAULT_TOL_ANGLE};
use crate::poisson::{BoundaryData, DiscreteField, FeSpace, PoissonProblem};
use crate::polyspace::{
    edge_basis, monomial_basis, triangle_quadrature, Monomial2D, Poly2, ProjectorKind,
    SpaceDescriptor,
};

/// Relative singular-value threshold for numerical rank decisions on Gram matrices.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    General,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalConfig {
    /// Moments only.
    Ia,
    /// One moment per edge replaced by the normal component at the edge midpoint.
    Ib,
}

impl std::str::FromStr for Setting {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "general" => Ok(Setting::General),
            "reduced" => Ok(Setting::Reduced),
            o => Err(format!("unknown setting `{o}`")),
        }
    }
}

impl std::str::FromStr for NormalConfig {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ia" => Ok(NormalConfig::Ia),
            "ib" => Ok(NormalConfig::Ib),
            o => Err(format!("unknown normal configuration `{o}`")),
        }
    }
}

/// Order and coefficients of the element, plus discretization controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementSpec {
    pub k: usize,
    pub l1: i32,
    pub l2: i32,
    pub m1: i32,
    pub m2: i32,
    pub setting: Setting,
    pub normal_config: NormalConfig,
    pub projector: ProjectorKind,
    /// Sub-mesh size; defaults to diameter / 16.
    pub h_target: Option<f64>,
    /// Lagrange order; defaults to `max(2, k + 1)`.
    pub fe_order: Option<usize>,
}

impl ElementSpec {
    /// `(l1, l2, m1, m2) = (0, k, k − 1, k − 1)`.
    pub fn general(k: usize) -> Self {
        let k1 = k as i32 - 1;
        ElementSpec {
            k,
            l1: 0,
            l2: k as i32,
            m1: k1,
            m2: k1,
            setting: Setting::General,
            normal_config: NormalConfig::Ia,
            projector: ProjectorKind::Hermite,
            h_target: None,
            fe_order: None,
        }
    }

    /// Constant boundary data in `A_k`, `l2 = k`, `m1 = m2 = k − 1`.
    pub fn reduced(k: usize) -> Self {
        ElementSpec { setting: Setting::Reduced, ..ElementSpec::general(k) }
    }

    pub fn custom(k: usize, l1: i32, l2: i32, m1: i32, m2: i32) -> Self {
        ElementSpec { l1, l2, m1, m2, ..ElementSpec::general(k) }
    }

    pub fn with_config(mut self, c: NormalConfig) -> Self {
        self.normal_config = c;
        self
    }

    pub fn with_projector(mut self, p: ProjectorKind) -> Self {
        self.projector = p;
        self
    }

    pub fn with_h_target(mut self, h: f64) -> Self {
        self.h_target = Some(h);
        self
    }

    pub fn with_fe_order(mut self, r: usize) -> Self {
        self.fe_order = Some(r);
        self
    }

    /// `l1 ≤ 0` or `l2 = −1`.
    pub fn conditions_set_1(&self) -> bool {
        self.l1 <= 0 || self.l2 == -1
    }

    pub fn fe_order(&self) -> usize {
        self.fe_order
            .unwrap_or_else(|| 2.max(self.k + 1).max((self.l2.max(self.l1) + 1).max(0) as usize))
    }

    pub fn h_target_for(&self, p: &Polygon) -> f64 {
        self.h_target.unwrap_or_else(|| p.diameter() / 16.0)
    }

    /// Degree of the normal traces, `max(l1, l2)`.
    pub fn trace_degree(&self) -> i32 {
        self.l1.max(self.l2)
    }

    fn check_indices(&self) -> Result<()> {
        if [self.l1, self.l2, self.m1, self.m2].iter().any(|&v| v < -1) {
            return Err(Error::Usage("coefficients must be ≥ −1".into()));
        }
        if !self.conditions_set_1() {
            return Err(Error::Admissibility(format!(
                "l1 = {} > 0 with l2 = {} ≠ −1 violates the conformity conditions (l1 ≤ 0 or l2 = −1)",
                self.l1, self.l2
            )));
        }
        Ok(())
    }
}

fn pos(v: i32) -> usize {
    (v + 1).max(0) as usize
}

/// `2(m1+1)² + ((m2+1)² − m2²)`, the last term vanishing for `m2 = −1`.
pub fn internal_dimension(m1: i32, m2: i32) -> usize {
    let a = 2 * pos(m1) * pos(m1);
    let b = if m2 < 0 { 0 } else { 2 * m2 as usize + 1 };
    a + b
}

/// `𝔫(2(l1+1) + (l2+1)) + 2(m1+1)² + (m2+1)² − m2²` (two dimensions).
pub fn dimension(spec: &ElementSpec, n_faces: usize) -> Result<usize> {
    spec.check_indices()?;
    Ok(n_faces * (2 * pos(spec.l1) + pos(spec.l2)) + internal_dimension(spec.m1, spec.m2))
}

/// Dimension of the trace space on one face.
pub fn boundary_trace_dimension(spec: &ElementSpec) -> usize {
    let (l1, l2) = (spec.l1, spec.l2);
    if l1 == -1 {
        pos(l2)
    } else if l2 >= l1 {
        2 * pos(l1) + pos(l2) - l1.max(0) as usize
    } else {
        2 * pos(l1)
    }
}

/// The value `𝔫(k+1) + 2k(k−1) − 1_{k>0}` quoted for the reduced setting.
pub fn reduced_dimension_formula(k: usize, n_faces: usize) -> i64 {
    let k = k as i64;
    n_faces as i64 * (k + 1) + 2 * k * (k - 1) - i64::from(k > 0)
}

/// Number of generators the builder produces for `spec`.
pub fn constructed_count(spec: &ElementSpec, n_faces: usize) -> Result<usize> {
    spec.check_indices()?;
    let a_bnd = match spec.setting {
        Setting::General => 2 * n_faces * pos(spec.l1),
        Setting::Reduced => 2,
    };
    Ok(a_bnd + n_faces * pos(spec.l2) + internal_dimension(spec.m1, spec.m2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    ABoundary,
    AInterior,
    BBoundary,
    BInterior,
}

/// Vector-valued factor multiplying a scalar Poisson solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    E1,
    E2,
    /// The local position `x − c`.
    Position,
}

impl Component {
    #[inline]
    pub fn apply(&self, xl: Point, u: f64) -> [f64; 2] {
        match self {
            Component::E1 => [u, 0.0],
            Component::E2 => [0.0, u],
            Component::Position => [xl[0] * u, xl[1] * u],
        }
    }

    /// `div(c u)` from `u` and `∇u`.
    #[inline]
    pub fn divergence(&self, xl: Point, u: f64, g: [f64; 2]) -> f64 {
        match self {
            Component::E1 => g[0],
            Component::E2 => g[1],
            Component::Position => 2.0 * u + xl[0] * g[0] + xl[1] * g[1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub block: Block,
    pub component: Component,
    /// Index into [`SpaceBasis::fields`].
    pub field: usize,
    /// Supporting edge of boundary generators (none for the reduced constant lift).
    pub edge: Option<usize>,
    /// Projector-basis degree of the boundary data.
    pub degree: Option<usize>,
    /// Right-hand-side monomial of interior generators.
    pub monomial: Option<Monomial2D>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCounts {
    pub a_boundary: usize,
    pub a_interior: usize,
    pub b_boundary: usize,
    pub b_interior: usize,
}

impl BlockCounts {
    pub fn total(&self) -> usize {
        self.a_boundary + self.a_interior + self.b_boundary + self.b_interior
    }
}

/// Ordered generators of `H_k(K)` with the Poisson solutions behind them.
#[derive(Debug)]
pub struct SpaceBasis {
    pub polygon: Arc<Polygon>,
    pub spec: ElementSpec,
    /// Origin of local coordinates (area centroid).
    pub origin: Point,
    pub fe: Arc<FeSpace>,
    pub fields: Vec<DiscreteField>,
    pub generators: Vec<Generator>,
    pub admissibility: AdmissibilityReport,
    /// L² Gram matrix of the generators.
    pub gram: DMatrix<f64>,
}

/// Builds the sub-mesh and Lagrange space used for `spec` on `p`.
pub fn fe_space_for(p: &Polygon, spec: &ElementSpec) -> Result<Arc<FeSpace>> {
    let mesh = triangulate(p, spec.h_target_for(p))?;
    FeSpace::new(Arc::new(mesh), spec.fe_order())
}

pub fn build_space(p: &Polygon, spec: &ElementSpec) -> Result<SpaceBasis> {
    spec.check_indices()?;
    let fe = fe_space_for(p, spec)?;
    build_space_on(fe, spec)
}

/// Builds the space on an existing Lagrange space (the mesh must belong to the polygon).
pub fn build_space_on(fe: Arc<FeSpace>, spec: &ElementSpec) -> Result<SpaceBasis> {
    spec.check_indices()?;
    let polygon = Arc::new(fe.mesh.polygon.clone());
    let n = polygon.n_faces();
    let origin = polygon.centroid();
    let admissibility = check_admissibility(&polygon, DEFAULT_TOL_ANGLE);
    if spec.l2 >= 0 && !admissibility.degenerate_support_edges.is_empty() {
        return Err(Error::Admissibility(format!(
            "x·n vanishes on edges {:?} (their supporting lines pass through the centroid)",
            admissibility.degenerate_support_edges
        )));
    }

    let mut problems: Vec<PoissonProblem> = Vec::new();
    let mut generators: Vec<Generator> = Vec::new();
    let zero_rhs = |bd: BoundaryData| PoissonProblem { rhs: Poly2::zero(), origin, boundary: bd };
    let interior = |m: Monomial2D| PoissonProblem {
        rhs: Poly2::monomial(m, 1.0),
        origin,
        boundary: BoundaryData::zero(n),
    };
    let gen = |block, component, field, edge, degree, monomial| Generator {
        block,
        component,
        field,
        edge,
        degree,
        monomial,
    };

    match spec.setting {
        Setting::General => {
            if spec.l1 >= 0 {
                for e in 0..n {
                    for p in edge_basis(&polygon, origin, e, spec.l1 as usize, spec.projector) {
                        let f = problems.len();
                        problems.push(zero_rhs(BoundaryData::on_edge(n, e, p.poly)));
                        for c in [Component::E1, Component::E2] {
                            generators.push(gen(Block::ABoundary, c, f, Some(e), Some(p.degree), None));
                        }
                    }
                }
            }
        }
        Setting::Reduced => {
            let f = problems.len();
            problems.push(zero_rhs(BoundaryData::uniform(n, 1.0)));
            for c in [Component::E1, Component::E2] {
                generators.push(gen(Block::ABoundary, c, f, None, Some(0), None));
            }
        }
    }
    for m in monomial_basis(&SpaceDescriptor::Q(spec.m1)) {
        let f = problems.len();
        problems.push(interior(m));
        for c in [Component::E1, Component::E2] {
            generators.push(gen(Block::AInterior, c, f, None, None, Some(m)));
        }
    }
    if spec.l2 >= 0 {
        for e in 0..n {
            for p in edge_basis(&polygon, origin, e, spec.l2 as usize, spec.projector) {
                let f = problems.len();
                problems.push(zero_rhs(BoundaryData::on_edge(n, e, p.poly)));
                generators.push(gen(Block::BBoundary, Component::Position, f, Some(e), Some(p.degree), None));
            }
        }
    }
    for m in monomial_basis(&SpaceDescriptor::QExact(spec.m2)) {
        let f = problems.len();
        problems.push(interior(m));
        generators.push(gen(Block::BInterior, Component::Position, f, None, None, Some(m)));
    }

    let fields = fe.solve_many(&problems)?;
    let mut space = SpaceBasis {
        polygon,
        spec: *spec,
        origin,
        fe,
        fields,
        generators,
        admissibility,
        gram: DMatrix::zeros(0, 0),
    };
    space.gram = space.compute_gram()?;
    let (rank, ratio) = space.gram_rank();
    if rank < space.len() {
        return Err(Error::SpaceRank(format!(
            "Gram matrix of {} generators has numerical rank {rank} (σ_min/σ_max = {ratio:e})",
            space.len()
        )));
    }
    Ok(space)
}

impl SpaceBasis {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn n_faces(&self) -> usize {
        self.polygon.n_faces()
    }

    pub fn block_counts(&self) -> BlockCounts {
        let mut c = BlockCounts::default();
        for g in &self.generators {
            match g.block {
                Block::ABoundary => c.a_boundary += 1,
                Block::AInterior => c.a_interior += 1,
                Block::BBoundary => c.b_boundary += 1,
                Block::BInterior => c.b_interior += 1,
            }
        }
        c
    }

    #[inline]
    pub fn local(&self, x: Point) -> Point {
        [x[0] - self.origin[0], x[1] - self.origin[1]]
    }

    /// Exact boundary value of generator `j` on `edge` at parameter `t`.
    pub fn generator_trace(&self, j: usize, edge: usize, t: f64) -> [f64; 2] {
        let g = &self.generators[j];
        let u = self.fields[g.field].trace_on_edge(edge, t);
        if u == 0.0 {
            return [0.0, 0.0];
        }
        let x = self.polygon.edge(edge).point(t);
        g.component.apply(self.local(x), u)
    }

    pub fn generator_value_in_cell(&self, j: usize, cell: usize, xi: [f64; 2]) -> [f64; 2] {
        let g = &self.generators[j];
        let u = self.fields[g.field].cell_value(cell, xi);
        let x = self.fe.cell_map(cell).map(xi);
        g.component.apply(self.local(x), u)
    }

    pub fn generator_value(&self, j: usize, p: Point) -> Result<[f64; 2]> {
        let (c, xi) = self.fe.mesh.locate(p)?;
        Ok(self.generator_value_in_cell(j, c, xi))
    }

    /// Sums `f(cell, x_local, weight, field values, field gradients)` contributions over
    /// all cells in parallel; each call adds into a dense accumulator of size `len`.
    pub(crate) fn accumulate_cells<F>(&self, exactness: usize, want_grad: bool, len: usize, f: F) -> Result<Vec<f64>>
    where
        F: Fn(Point, f64, &[f64], &[[f64; 2]], &mut [f64]) + Sync,
    {
        let rule = triangle_quadrature(exactness)?;
        let vals: Vec<Vec<f64>> = rule.points.iter().map(|&p| self.fe.reference.eval(p)).collect();
        let grads: Vec<Vec<[f64; 2]>> = if want_grad {
            rule.points.iter().map(|&p| self.fe.reference.grad(p)).collect()
        } else {
            vec![]
        };
        let nf = self.fields.len();
        let chunk = 64;
        let n_cells = self.fe.n_cells();
        let parts: Vec<Vec<f64>> = (0..n_cells.div_ceil(chunk))
            .into_par_iter()
            .map(|ci| {
                let mut acc = vec![0.0; len];
                let mut u = vec![0.0; nf];
                let mut g = vec![[0.0; 2]; nf];
                for cell in ci * chunk..((ci + 1) * chunk).min(n_cells) {
                    let m = self.fe.cell_map(cell);
                    let dofs = self.fe.cell_dofs(cell);
                    for (q, w) in rule.weights.iter().enumerate() {
                        let x = self.local(m.map(rule.points[q]));
                        for (fi, field) in self.fields.iter().enumerate() {
                            let mut s = 0.0;
                            for (&d, p) in dofs.iter().zip(&vals[q]) {
                                s += field.values[d] * p;
                            }
                            u[fi] = s;
                            if want_grad {
                                let mut r = [0.0; 2];
                                for (&d, gr) in dofs.iter().zip(&grads[q]) {
                                    r[0] += field.values[d] * gr[0];
                                    r[1] += field.values[d] * gr[1];
                                }
                                g[fi] = m.grad(r);
                            }
                        }
                        f(x, w * m.det.abs(), &u, &g, &mut acc);
                    }
                }
                acc
            })
            .collect();
        let mut total = vec![0.0; len];
        for p in parts {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
        Ok(total)
    }

    fn compute_gram(&self) -> Result<DMatrix<f64>> {
        let n = self.len();
        let gens = &self.generators;
        let acc = self.accumulate_cells(2 * self.fe.order() + 2, false, n * n, |x, w, u, _, acc| {
            let v: Vec<[f64; 2]> = gens.iter().map(|g| g.component.apply(x, u[g.field])).collect();
            for i in 0..n {
                for j in i..n {
                    acc[i * n + j] += w * (v[i][0] * v[j][0] + v[i][1] * v[j][1]);
                }
            }
        })?;
        Ok(DMatrix::from_fn(n, n, |i, j| if i <= j { acc[i * n + j] } else { acc[j * n + i] }))
    }

    /// Numerical rank of the Gram matrix and its `σ_min / σ_max`.
    pub fn gram_rank(&self) -> (usize, f64) {
        if self.is_empty() {
            return (0, 1.0);
        }
        // the Gram matrix squares singular values of the generator family
        let sv = self.gram.singular_values();
        let max = sv.max();
        let rank = sv.iter().filter(|&&s| s.sqrt() > RANK_TOL * max.sqrt()).count();
        (rank, (sv.min() / max).sqrt())
    }

    /// `∫_K q·p` for every generator `q` (columns) and kernel pair `p` (rows); kernels
    /// are evaluated in local coordinates.
    pub fn interior_moments(&self, kernels: &[[Poly2; 2]]) -> Result<DMatrix<f64>> {
        let (nk, ng) = (kernels.len(), self.len());
        if nk == 0 {
            return Ok(DMatrix::zeros(0, ng));
        }
        let deg = kernels
            .iter()
            .flat_map(|p| p.iter().filter_map(|c| c.total_degree()))
            .max()
            .unwrap_or(0);
        let exactness = self.fe.order() + 1 + deg + 2;
        let gens = &self.generators;
        let acc = self.accumulate_cells(exactness, false, nk * ng, |x, w, u, _, acc| {
            for (r, p) in kernels.iter().enumerate() {
                let pv = [p[0].eval(x), p[1].eval(x)];
                for (j, g) in gens.iter().enumerate() {
                    let v = g.component.apply(x, u[g.field]);
                    acc[r * ng + j] += w * (v[0] * pv[0] + v[1] * pv[1]);
                }
            }
        })?;
        Ok(DMatrix::from_fn(nk, ng, |r, j| acc[r * ng + j]))
    }

    /// `(∫ div g_i div g_j, ∫ div g_i)` from finite-element gradients.
    pub fn divergence_gram(&self) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let n = self.len();
        let gens = &self.generators;
        let acc = self.accumulate_cells(2 * self.fe.order() + 2, true, n * n + n, |x, w, u, g, acc| {
            let d: Vec<f64> = gens.iter().map(|q| q.component.divergence(x, u[q.field], g[q.field])).collect();
            for i in 0..n {
                acc[n * n + i] += w * d[i];
                for j in i..n {
                    acc[i * n + j] += w * d[i] * d[j];
                }
            }
        })?;
        let m = DMatrix::from_fn(n, n, |i, j| if i <= j { acc[i * n + j] } else { acc[j * n + i] });
        Ok((m, DVector::from_fn(n, |i, _| acc[n * n + i])))
    }

    /// `∮ g_j·n` using the finite-element boundary values (not the exact data).
    pub fn fe_boundary_flux(&self) -> Result<DVector<f64>> {
        let fe = &self.fe;
        let rule = crate::polyspace::edge_quadrature(2 * fe.order() + 2)?;
        let mut out = DVector::zeros(self.len());
        for &(cell, le, pe) in fe.boundary_facets() {
            let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
            let (a, b) = (corners[le], corners[(le + 1) % 3]);
            let m = fe.cell_map(cell);
            let len = crate::geometry::dist(m.map(a), m.map(b));
            let normal = self.polygon.edge(pe).normal;
            for (s, w) in rule.points.iter().zip(&rule.weights) {
                let f = 0.5 * (s + 1.0);
                let xi = [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])];
                let x = self.local(m.map(xi));
                for (j, g) in self.generators.iter().enumerate() {
                    let u = self.fields[g.field].cell_value(cell, xi);
                    let v = g.component.apply(x, u);
                    out[j] += 0.5 * w * len * (v[0] * normal[0] + v[1] * normal[1]);
                }
            }
        }
        Ok(out)
    }

    /// Largest generator magnitude over the finite-element nodes.
    pub fn scale(&self) -> f64 {
        let mut s: f64 = 0.0;
        for g in &self.generators {
            let f = &self.fields[g.field];
            for (x, &u) in self.fe.coords.iter().zip(&f.values) {
                let v = g.component.apply(self.local(*x), u);
                s = s.max(v[0].abs()).max(v[1].abs());
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Polygon {
        Polygon::new(vec![[0.0, 0.0], [1.0, 0.1], [0.3, 0.9]]).unwrap()
    }

    #[test]
    fn dimension_examples() {
        assert_eq!(dimension(&ElementSpec::general(2), 9).unwrap(), 56);
        assert_eq!(dimension(&ElementSpec::general(1), 9).unwrap(), 39);
        assert_eq!(dimension(&ElementSpec::general(0), 9).unwrap(), 27);
        assert_eq!(dimension(&ElementSpec::general(1), 3).unwrap(), 15);
        for k in 0..6usize {
            let want = 9 * (k + 3) + 2 * k * (k + 1) - usize::from(k > 0);
            assert_eq!(dimension(&ElementSpec::general(k), 9).unwrap(), want);
        }
        let bad = ElementSpec::custom(1, 1, 1, 0, 0);
        assert_eq!(dimension(&bad, 5).unwrap_err().kind(), "AdmissibilityError");
    }

    #[test]
    fn trace_dimension_examples() {
        for k in 0..5 {
            assert_eq!(boundary_trace_dimension(&ElementSpec::general(k)), k + 3);
            assert_eq!(boundary_trace_dimension(&ElementSpec::custom(k, -1, k as i32, 0, 0)), k + 1);
        }
        assert_eq!(boundary_trace_dimension(&ElementSpec::custom(0, 0, -1, 0, 0)), 2);
    }

    #[test]
    fn reduced_counts() {
        assert_eq!(constructed_count(&ElementSpec::reduced(2), 9).unwrap(), 40);
        assert_eq!(reduced_dimension_formula(2, 9), 30);
        assert_eq!(constructed_count(&ElementSpec::reduced(0), 3).unwrap(), 5);
    }

    #[test]
    fn triangle_k0_general() {
        let s = build_space(&tri(), &ElementSpec::general(0).with_h_target(0.3)).unwrap();
        assert_eq!(s.len(), 9);
        let c = s.block_counts();
        assert_eq!((c.a_boundary, c.a_interior, c.b_boundary, c.b_interior), (6, 0, 3, 0));
        assert_eq!(s.gram_rank().0, 9);
    }

    #[test]
    fn boundary_generators_vanish_off_edge() {
        let s = build_space(&tri(), &ElementSpec::general(1).with_h_target(0.3)).unwrap();
        assert_eq!(s.len(), dimension(&s.spec, 3).unwrap());
        for (j, g) in s.generators.iter().enumerate() {
            for e in 0..3 {
                for t in [0.0, 0.25, 0.5, 1.0] {
                    let v = s.generator_trace(j, e, t);
                    let zero = match g.edge {
                        Some(f) => f != e,
                        None => true,
                    };
                    if zero && (t > 0.0 && t < 1.0 || g.edge.is_none()) {
                        assert_eq!(v, [0.0, 0.0], "gen {j} edge {e}");
                    }
                }
            }
        }
    }

    #[test]
    fn interior_generators_vanish_on_boundary_fe() {
        let p = tri();
        for h in [0.3, 0.15] {
            let s = build_space(&p, &ElementSpec::general(2).with_h_target(h)).unwrap();
            for g in s.generators.iter().filter(|g| matches!(g.block, Block::AInterior | Block::BInterior)) {
                for e in 0..3 {
                    for t in [0.1, 0.5, 0.77] {
                        assert!(s.fields[g.field].fe_trace(e, t).unwrap().abs() < 1e-13);
                    }
                }
            }
        }
    }
}
