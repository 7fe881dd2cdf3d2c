//! Degrees of freedom: normal functionals on each edge and internal moments.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_admissibility, Point, Polygon, SubMesh, DEFAULT_TOL_ANGLE};
use crate::hkspace::{boundary_trace_dimension, internal_dimension, ElementSpec, NormalConfig, Setting, SpaceBasis};
use crate::polyspace::{
    build_projection_space_P, edge_basis, edge_quadrature, triangle_quadrature, EdgePolynomial,
    EdgeRule, Poly1, Poly2, TriangleRule,
};

/// Singular-value ratio below which edge kernels count as dependent.
pub const KERNEL_INDEPENDENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DofKind {
    /// `∫_f q_i n_i (x_i − c_i) dγ`.
    CoordinateMoment { edge: usize, component: usize },
    /// `∫_f (q·n) p dγ`.
    GlobalNormalMoment { edge: usize, kernel: EdgePolynomial },
    /// `(q·n)(x_f(t))`.
    PointNormalValue { edge: usize, t: f64 },
    /// `|∂K|⁻¹ ∮ q_i dγ`.
    BoundaryMean { component: usize },
    /// `∫_K q·p dx`, `p` in local coordinates.
    InternalMoment { index: usize, kernel: [Poly2; 2] },
}

impl DofKind {
    pub fn edge(&self) -> Option<usize> {
        match self {
            DofKind::CoordinateMoment { edge, .. }
            | DofKind::GlobalNormalMoment { edge, .. }
            | DofKind::PointNormalValue { edge, .. } => Some(*edge),
            _ => None,
        }
    }

    pub fn is_internal(&self) -> bool {
        matches!(self, DofKind::InternalMoment { .. })
    }

    pub fn label(&self) -> String {
        match self {
            DofKind::CoordinateMoment { edge, component } => format!("coord[{edge}][{component}]"),
            DofKind::GlobalNormalMoment { edge, kernel } => format!("moment[{edge}][{}]", kernel.degree),
            DofKind::PointNormalValue { edge, t } => format!("point[{edge}]@{t}"),
            DofKind::BoundaryMean { component } => format!("mean[{component}]"),
            DofKind::InternalMoment { index, .. } => format!("internal[{index}]"),
        }
    }
}

/// A vector field that the functionals can be applied to.
pub trait VectorField: Sync {
    /// Value on polygon edge `edge` at parameter `t ∈ [0, 1]`.
    fn boundary_value(&self, edge: usize, t: f64) -> [f64; 2];
    /// Value inside sub-mesh cell `cell` at reference point `xi` (physical point `x`).
    fn value_in_cell(&self, cell: usize, xi: [f64; 2], x: Point) -> [f64; 2];
}

/// A field given by a closed-form expression in physical coordinates.
pub struct AnalyticField<F>(pub F);

impl<F: Fn(Point) -> [f64; 2] + Sync> AnalyticField<F> {
    pub fn eval(&self, x: Point) -> [f64; 2] {
        (self.0)(x)
    }
}

/// Pairs an analytic field with a polygon so edge parameters can be mapped.
pub struct OnPolygon<'a, F> {
    pub polygon: &'a Polygon,
    pub field: AnalyticField<F>,
}

impl<F: Fn(Point) -> [f64; 2] + Sync> VectorField for OnPolygon<'_, F> {
    fn boundary_value(&self, edge: usize, t: f64) -> [f64; 2] {
        self.field.eval(self.polygon.edge(edge).point(t))
    }
    fn value_in_cell(&self, _cell: usize, _xi: [f64; 2], x: Point) -> [f64; 2] {
        self.field.eval(x)
    }
}

/// Generator `j` of a space, as a field.
pub struct GeneratorField<'a> {
    pub space: &'a SpaceBasis,
    pub index: usize,
}

impl VectorField for GeneratorField<'_> {
    fn boundary_value(&self, edge: usize, t: f64) -> [f64; 2] {
        self.space.generator_trace(self.index, edge, t)
    }
    fn value_in_cell(&self, cell: usize, xi: [f64; 2], _x: Point) -> [f64; 2] {
        self.space.generator_value_in_cell(self.index, cell, xi)
    }
}

/// Ordered functionals: normal DOFs edge by edge, then boundary means (reduced
/// setting only), then internal moments.
#[derive(Debug, Clone)]
pub struct DofSet {
    pub normal: Vec<Vec<DofKind>>,
    pub extra: Vec<DofKind>,
    pub internal: Vec<DofKind>,
    pub config: NormalConfig,
    pub setting: Setting,
    pub origin: Point,
    pub polygon: Arc<Polygon>,
    pub mesh: Arc<SubMesh>,
    edge_rule: EdgeRule,
    cell_rule: TriangleRule,
}

/// Normal functionals for each edge.
pub fn make_normal_dofs(p: &Polygon, spec: &ElementSpec) -> Result<Vec<Vec<DofKind>>> {
    let n = p.n_faces();
    let origin = p.centroid();
    let deflated = |e: usize, from: usize| -> Vec<DofKind> {
        if spec.l2 < 0 {
            return vec![];
        }
        edge_basis(p, origin, e, spec.l2 as usize, spec.projector)
            .into_iter()
            .skip(from)
            .map(|mut k| {
                let m = k.poly.mean();
                k.poly = k.poly.add(&Poly1::constant(-m));
                DofKind::GlobalNormalMoment { edge: e, kernel: k }
            })
            .collect()
    };
    let misc = |e: usize| match spec.normal_config {
        NormalConfig::Ia => DofKind::GlobalNormalMoment {
            edge: e,
            kernel: EdgePolynomial { edge: e, kind: spec.projector, degree: 0, poly: Poly1::constant(1.0) },
        },
        NormalConfig::Ib => DofKind::PointNormalValue { edge: e, t: 0.5 },
    };
    let coordinate = match (spec.setting, spec.l1) {
        (Setting::Reduced, _) | (_, -1) => false,
        (Setting::General, 0) => true,
        _ => {
            return Err(Error::Usage(format!(
                "normal functionals are provided for l1 ∈ {{−1, 0}}, got l1 = {}",
                spec.l1
            )))
        }
    };
    if coordinate {
        let rep = check_admissibility(p, DEFAULT_TOL_ANGLE);
        if !rep.ok_for_coordinate_dofs {
            return Err(Error::Admissibility(format!(
                "coordinate moments need edges that are not axis-parallel; offending edges {:?}",
                rep.axis_parallel_edges
            )));
        }
    }
    Ok((0..n)
        .map(|e| {
            let mut v = Vec::new();
            if coordinate {
                v.push(DofKind::CoordinateMoment { edge: e, component: 0 });
                v.push(DofKind::CoordinateMoment { edge: e, component: 1 });
            }
            v.push(misc(e));
            v.extend(deflated(e, 1));
            v
        })
        .collect())
}

/// Internal moments against the symmetric projection space.
pub fn make_internal_dofs(spec: &ElementSpec) -> Result<Vec<DofKind>> {
    let k = spec.k as i32;
    if spec.m1 != k - 1 || spec.m2 != k - 1 {
        return Err(Error::Usage(format!(
            "internal moments are provided for m1 = m2 = k − 1, got ({}, {}) with k = {k}",
            spec.m1, spec.m2
        )));
    }
    let ps = build_projection_space_P(spec.k);
    let bound = spec.m1.max(spec.m2 + 1);
    if let Some(d) = ps.max_degree() {
        if d as i32 > bound {
            return Err(Error::Admissibility(format!(
                "internal kernels reach degree {d} > max(m1, m2 + 1) = {bound}"
            )));
        }
    }
    Ok(ps
        .pairs
        .into_iter()
        .enumerate()
        .map(|(index, kernel)| DofKind::InternalMoment { index, kernel })
        .collect())
}

impl DofSet {
    pub fn new(space: &SpaceBasis) -> Result<DofSet> {
        DofSet::with_config(space, space.spec.normal_config)
    }

    /// Functionals for `space` with the normal configuration overridden; the space
    /// itself does not depend on it.
    pub fn with_config(space: &SpaceBasis, config: NormalConfig) -> Result<DofSet> {
        let spec = &space.spec.with_config(config);
        let normal = make_normal_dofs(&space.polygon, spec)?;
        let internal = make_internal_dofs(spec)?;
        let extra = match spec.setting {
            Setting::General => vec![],
            Setting::Reduced => {
                vec![DofKind::BoundaryMean { component: 0 }, DofKind::BoundaryMean { component: 1 }]
            }
        };
        let r = space.fe.order();
        Ok(DofSet {
            normal,
            extra,
            internal,
            config: spec.normal_config,
            setting: spec.setting,
            origin: space.origin,
            polygon: space.polygon.clone(),
            mesh: space.fe.mesh.clone(),
            edge_rule: edge_quadrature(2 * spec.k + 3)?,
            cell_rule: triangle_quadrature((2 * (r + spec.k) + 2).max(4))?,
        })
    }

    pub fn len(&self) -> usize {
        self.n_normal() + self.extra.len() + self.internal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_normal(&self) -> usize {
        self.normal.iter().map(Vec::len).sum()
    }

    /// All functionals in order.
    pub fn all(&self) -> impl Iterator<Item = &DofKind> {
        self.normal.iter().flatten().chain(&self.extra).chain(&self.internal)
    }

    pub fn get(&self, i: usize) -> &DofKind {
        self.all().nth(i).expect("DOF index in range")
    }

    /// Global indices of the normal functionals on `edge`.
    pub fn edge_range(&self, edge: usize) -> std::ops::Range<usize> {
        let start: usize = self.normal[..edge].iter().map(Vec::len).sum();
        start..start + self.normal[edge].len()
    }

    pub fn edge_rule(&self) -> &EdgeRule {
        &self.edge_rule
    }

    /// `∫_f g dγ` with `g` a function of the edge parameter.
    pub fn integrate_edge(&self, edge: usize, g: impl Fn(f64) -> f64) -> f64 {
        let len = self.polygon.edge(edge).length;
        let r = &self.edge_rule;
        0.5 * len * r.points.iter().zip(&r.weights).map(|(s, w)| w * g(0.5 * (s + 1.0))).sum::<f64>()
    }

    /// Applies a boundary functional to a field known only through its edge values.
    pub fn eval_boundary(&self, dof: &DofKind, q: &dyn Fn(usize, f64) -> [f64; 2]) -> f64 {
        let p = &self.polygon;
        match dof {
            DofKind::CoordinateMoment { edge, component: i } => {
                let e = p.edge(*edge);
                let (ni, ci) = (e.normal[*i], self.origin[*i]);
                self.integrate_edge(*edge, |t| q(*edge, t)[*i] * ni * (e.point(t)[*i] - ci))
            }
            DofKind::GlobalNormalMoment { edge, kernel } => {
                let nrm = p.edge(*edge).normal;
                self.integrate_edge(*edge, |t| {
                    let v = q(*edge, t);
                    (v[0] * nrm[0] + v[1] * nrm[1]) * kernel.eval_t(t)
                })
            }
            DofKind::PointNormalValue { edge, t } => {
                let nrm = p.edge(*edge).normal;
                let v = q(*edge, *t);
                v[0] * nrm[0] + v[1] * nrm[1]
            }
            DofKind::BoundaryMean { component } => {
                let s: f64 = (0..p.n_faces()).map(|e| self.integrate_edge(e, |t| q(e, t)[*component])).sum();
                s / p.perimeter()
            }
            DofKind::InternalMoment { .. } => panic!("internal moment is not a boundary functional"),
        }
    }

    /// `σ(q)` for any functional.
    pub fn eval(&self, dof: &DofKind, q: &dyn VectorField) -> f64 {
        match dof {
            DofKind::InternalMoment { kernel, .. } => {
                let r = &self.cell_rule;
                let mut s = 0.0;
                for cell in 0..self.mesh.n_triangles() {
                    let [a, b, c] = self.mesh.triangle_points(cell);
                    let det = ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
                    for (xi, w) in r.points.iter().zip(&r.weights) {
                        let x = [
                            a[0] + xi[0] * (b[0] - a[0]) + xi[1] * (c[0] - a[0]),
                            a[1] + xi[0] * (b[1] - a[1]) + xi[1] * (c[1] - a[1]),
                        ];
                        let xl = [x[0] - self.origin[0], x[1] - self.origin[1]];
                        let v = q.value_in_cell(cell, *xi, x);
                        s += w * det * (v[0] * kernel[0].eval(xl) + v[1] * kernel[1].eval(xl));
                    }
                }
                s
            }
            _ => self.eval_boundary(dof, &|e, t| q.boundary_value(e, t)),
        }
    }

    /// Every functional applied to `q`.
    pub fn eval_all(&self, q: &dyn VectorField) -> Vec<f64> {
        self.all().map(|d| self.eval(d, q)).collect()
    }
}

/// Outcome of the structural checks on a DOF set.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DofValidation {
    pub ok: bool,
    pub violations: Vec<String>,
}

/// Checks counts per edge, internal count, totals, kernel independence and
/// internal kernel degrees against the space.
pub fn validate_dof_set(dofs: &DofSet, space: &SpaceBasis) -> DofValidation {
    let spec = &space.spec;
    let mut v = Vec::new();
    if !spec.conditions_set_1() {
        v.push(format!("l1 = {}, l2 = {} violate the conformity conditions", spec.l1, spec.l2));
    }
    let per_edge = match spec.setting {
        Setting::General => boundary_trace_dimension(spec),
        Setting::Reduced => (spec.l2 + 1).max(0) as usize,
    };
    for (e, list) in dofs.normal.iter().enumerate() {
        if list.len() != per_edge {
            v.push(format!("edge {e}: {} normal functionals, expected {per_edge}", list.len()));
        }
        let kernels: Vec<&Poly1> = list
            .iter()
            .filter_map(|d| match d {
                DofKind::GlobalNormalMoment { kernel, .. } => Some(&kernel.poly),
                _ => None,
            })
            .collect();
        if !kernels.is_empty() {
            let g = DMatrix::from_fn(kernels.len(), kernels.len(), |i, j| kernels[i].mul(kernels[j]).integral());
            let sv = g.singular_values();
            if sv.min() <= KERNEL_INDEPENDENCE_TOL * sv.max() {
                v.push(format!("edge {e}: moment kernels are linearly dependent"));
            }
        }
    }
    let want_int = internal_dimension(spec.m1, spec.m2);
    if dofs.internal.len() != want_int {
        v.push(format!("{} internal functionals, expected {want_int}", dofs.internal.len()));
    }
    if dofs.len() != space.len() {
        v.push(format!("{} functionals for a space of dimension {}", dofs.len(), space.len()));
    }
    let bound = spec.m1.max(spec.m2 + 1);
    for d in &dofs.internal {
        if let DofKind::InternalMoment { index, kernel } = d {
            let deg = kernel.iter().filter_map(|c| c.max_degree()).max().unwrap_or(0);
            if deg as i32 > bound {
                v.push(format!("internal kernel {index} has degree {deg} > {bound}"));
            }
        }
    }
    DofValidation { ok: v.is_empty(), violations: v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hkspace::build_space;

    fn skew_quad() -> Polygon {
        Polygon::new(vec![[0.0, 0.1], [1.0, 0.0], [1.2, 0.9], [0.1, 1.1]]).unwrap()
    }

    #[test]
    fn counts_general_and_reduced() {
        let p = skew_quad();
        for k in 0..3 {
            let n = make_normal_dofs(&p, &ElementSpec::general(k)).unwrap();
            assert!(n.iter().all(|e| e.len() == k + 3));
            let r = make_normal_dofs(&p, &ElementSpec::reduced(k)).unwrap();
            assert!(r.iter().all(|e| e.len() == k + 1));
            assert_eq!(make_internal_dofs(&ElementSpec::general(k)).unwrap().len(), internal_dimension(k as i32 - 1, k as i32 - 1));
        }
    }

    #[test]
    fn axis_parallel_edges_rejected() {
        let sq = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let e = make_normal_dofs(&sq, &ElementSpec::general(1)).unwrap_err();
        assert_eq!(e.kind(), "AdmissibilityError");
        assert!(make_normal_dofs(&sq, &ElementSpec::reduced(1)).is_ok());
    }

    #[test]
    fn moments_of_constant_field() {
        let p = skew_quad();
        let s = build_space(&p, &ElementSpec::general(1).with_h_target(0.3)).unwrap();
        let d = DofSet::new(&s).unwrap();
        let q = OnPolygon { polygon: &p, field: AnalyticField(|_x: Point| [1.0, 2.0]) };
        for e in 0..4 {
            let ed = p.edge(e);
            let flux = (ed.normal[0] + 2.0 * ed.normal[1]) * ed.length;
            let r = d.edge_range(e);
            // misc moment = flux; deflated degree-1 kernel integrates to zero
            assert!((d.eval(d.get(r.start + 2), &q) - flux).abs() < 1e-13);
            assert!(d.eval(d.get(r.start + 3), &q).abs() < 1e-13);
        }
        // ∫_K (1, 2)·(1, 0) = |K|
        let first_int = d.n_normal();
        assert!((d.eval(d.get(first_int), &q) - p.area()).abs() < 1e-12);
        assert!(validate_dof_set(&d, &s).ok);
    }

    #[test]
    fn boundary_mean_of_constant() {
        let p = skew_quad();
        let s = build_space(&p, &ElementSpec::reduced(1).with_h_target(0.3)).unwrap();
        let d = DofSet::new(&s).unwrap();
        let q = OnPolygon { polygon: &p, field: AnalyticField(|_x: Point| [3.0, -1.0]) };
        assert!((d.eval(&d.extra[0], &q) - 3.0).abs() < 1e-13);
        assert!((d.eval(&d.extra[1], &q) + 1.0).abs() < 1e-13);
    }
}
