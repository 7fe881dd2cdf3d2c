//! Transfer matrix, nodal (dual) basis, and the assembled element.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dofs::{DofKind, DofSet, VectorField};
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};
use crate::hkspace::{build_space, ElementSpec, NormalConfig, SpaceBasis};

/// Largest acceptable condition number of the transfer matrix.
pub const MAX_TRANSFER_COND: f64 = 1e12;
/// Relative size under which a normal trace counts as identically zero.
pub const DEFAULT_TOL_ZERO: f64 = 1e-4;
/// Samples per edge used when measuring normal traces.
pub const TRACE_SAMPLES: usize = 33;

/// `T[i][j] = σ_i(g_j)`.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub matrix: DMatrix<f64>,
    pub cond: f64,
}

pub fn assemble_transfer_matrix(space: &SpaceBasis, dofs: &DofSet) -> Result<TransferMatrix> {
    let (nd, ng) = (dofs.len(), space.len());
    if nd != ng {
        return Err(Error::Unisolvence(format!("{nd} functionals for {ng} generators")));
    }
    let mut t = DMatrix::zeros(nd, ng);
    let nb = dofs.n_normal() + dofs.extra.len();
    for (i, d) in dofs.all().take(nb).enumerate() {
        for j in 0..ng {
            t[(i, j)] = dofs.eval_boundary(d, &|e, s| space.generator_trace(j, e, s));
        }
    }
    let kernels: Vec<_> = dofs
        .internal
        .iter()
        .map(|d| match d {
            DofKind::InternalMoment { kernel, .. } => kernel.clone(),
            _ => unreachable!("internal list holds internal moments only"),
        })
        .collect();
    let m = space.interior_moments(&kernels)?;
    t.view_mut((nb, 0), (kernels.len(), ng)).copy_from(&m);
    let cond = condition_number(&t);
    Ok(TransferMatrix { matrix: t, cond })
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.singular_values();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        sv.max() / min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DualClass {
    Normal,
    /// Dual of a normal functional whose normal trace vanishes on every edge.
    DegenerateNormal,
    /// Dual of a boundary-mean functional.
    ConstantLift,
    Internal,
}

/// Columns of `coeffs` are the duals in generator coordinates.
#[derive(Debug, Clone)]
pub struct NodalBasis {
    pub coeffs: DMatrix<f64>,
    pub classes: Vec<DualClass>,
    pub cond: f64,
    pub kronecker_defect: f64,
    /// Largest sampled `|φ_i·n|` over the boundary.
    pub normal_trace_max: Vec<f64>,
}

impl NodalBasis {
    pub fn count(&self, c: DualClass) -> usize {
        self.classes.iter().filter(|&&x| x == c).count()
    }
}

/// Inverts the transfer matrix and classifies the duals.
pub fn build_nodal_basis(tm: &TransferMatrix, space: &SpaceBasis, dofs: &DofSet, tol_zero: f64) -> Result<NodalBasis> {
    if !tm.cond.is_finite() || tm.cond > MAX_TRANSFER_COND {
        return Err(Error::Unisolvence(format!(
            "transfer matrix condition number {:e} exceeds {MAX_TRANSFER_COND:e}",
            tm.cond
        )));
    }
    let coeffs = tm
        .matrix
        .clone()
        .full_piv_lu()
        .try_inverse()
        .ok_or_else(|| Error::Unisolvence("transfer matrix is singular".into()))?;
    let n = coeffs.ncols();
    let prod = &tm.matrix * &coeffs;
    let kronecker_defect = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (prod[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);

    let traces = sampled_generator_normal_traces(space);
    let normal_trace_max: Vec<f64> = (0..n)
        .map(|i| {
            traces
                .iter()
                .map(|row| row.iter().zip(coeffs.column(i).iter()).map(|(g, c)| g * c).sum::<f64>().abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let nn = dofs.n_normal();
    let scale = normal_trace_max[..nn].iter().cloned().fold(0.0, f64::max);
    let classes = (0..n)
        .map(|i| {
            if i < nn {
                if normal_trace_max[i] <= tol_zero * scale {
                    DualClass::DegenerateNormal
                } else {
                    DualClass::Normal
                }
            } else if i < nn + dofs.extra.len() {
                DualClass::ConstantLift
            } else {
                DualClass::Internal
            }
        })
        .collect();
    Ok(NodalBasis { coeffs, classes, cond: tm.cond, kronecker_defect, normal_trace_max })
}

/// Rows: `(edge, sample)` pairs; columns: `g_j·n` at that point.
fn sampled_generator_normal_traces(space: &SpaceBasis) -> Vec<Vec<f64>> {
    let mut rows = Vec::new();
    for e in 0..space.n_faces() {
        let nrm = space.polygon.edge(e).normal;
        for s in 0..TRACE_SAMPLES {
            let t = s as f64 / (TRACE_SAMPLES - 1) as f64;
            rows.push(
                (0..space.len())
                    .map(|j| {
                        let v = space.generator_trace(j, e, t);
                        v[0] * nrm[0] + v[1] * nrm[1]
                    })
                    .collect(),
            );
        }
    }
    rows
}

/// A space, its functionals and the dual basis.
#[derive(Debug)]
pub struct Element {
    pub space: Arc<SpaceBasis>,
    pub dofs: DofSet,
    pub transfer: TransferMatrix,
    pub basis: NodalBasis,
}

impl Element {
    pub fn build(p: &Polygon, spec: &ElementSpec) -> Result<Element> {
        Element::from_space(Arc::new(build_space(p, spec)?))
    }

    pub fn from_space(space: Arc<SpaceBasis>) -> Result<Element> {
        Element::from_space_with_tol(space, DEFAULT_TOL_ZERO)
    }

    pub fn from_space_with_tol(space: Arc<SpaceBasis>, tol_zero: f64) -> Result<Element> {
        let config = space.spec.normal_config;
        Element::with_config(space, config, tol_zero)
    }

    /// Element on a shared space with the given normal configuration.
    pub fn with_config(space: Arc<SpaceBasis>, config: NormalConfig, tol_zero: f64) -> Result<Element> {
        let dofs = DofSet::with_config(&space, config)?;
        let transfer = assemble_transfer_matrix(&space, &dofs)?;
        let basis = build_nodal_basis(&transfer, &space, &dofs, tol_zero)?;
        Ok(Element { space, dofs, transfer, basis })
    }

    pub fn len(&self) -> usize {
        self.basis.coeffs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exact boundary value of dual `i`.
    pub fn trace(&self, i: usize, edge: usize, t: f64) -> [f64; 2] {
        self.combination_trace(self.basis.coeffs.column(i).as_slice(), edge, t)
    }

    /// Boundary value of `Σ_j c_j g_j`.
    pub fn combination_trace(&self, c: &[f64], edge: usize, t: f64) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (j, &cj) in c.iter().enumerate() {
            if cj != 0.0 {
                let g = self.space.generator_trace(j, edge, t);
                v[0] += cj * g[0];
                v[1] += cj * g[1];
            }
        }
        v
    }

    pub fn normal_trace(&self, i: usize, edge: usize, t: f64) -> f64 {
        let v = self.trace(i, edge, t);
        let n = self.space.polygon.edge(edge).normal;
        v[0] * n[0] + v[1] * n[1]
    }

    pub fn value_in_cell(&self, i: usize, cell: usize, xi: [f64; 2]) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (j, &cj) in self.basis.coeffs.column(i).iter().enumerate() {
            let g = self.space.generator_value_in_cell(j, cell, xi);
            v[0] += cj * g[0];
            v[1] += cj * g[1];
        }
        v
    }

    /// Value of dual `i` at a physical point.
    pub fn eval_basis(&self, i: usize, p: Point) -> Result<[f64; 2]> {
        let (c, xi) = self.space.fe.mesh.locate(p)?;
        Ok(self.value_in_cell(i, c, xi))
    }

    pub fn dual(&self, i: usize) -> DualField<'_> {
        DualField { element: self, index: i }
    }

    /// `‖φ_i‖_{L²}` from the generator Gram matrix.
    pub fn l2_norm(&self, i: usize) -> f64 {
        let c = self.basis.coeffs.column(i);
        (c.transpose() * &self.space.gram * c)[(0, 0)].max(0.0).sqrt()
    }
}

/// What the interface check needs from an element: its normal functionals per edge
/// and the exact boundary values of its duals.
pub trait TraceElement {
    fn polygon(&self) -> &Polygon;
    fn n_basis(&self) -> usize;
    /// Indices of the functionals attached to `edge`.
    fn edge_dofs(&self, edge: usize) -> std::ops::Range<usize>;
    /// Applies functional `i` (an edge functional) to a field given by its edge values.
    fn apply_edge_dof(&self, i: usize, q: &dyn Fn(usize, f64) -> [f64; 2]) -> f64;
    fn dual_trace(&self, i: usize, edge: usize, t: f64) -> [f64; 2];
}

impl TraceElement for Element {
    fn polygon(&self) -> &Polygon {
        &self.space.polygon
    }
    fn n_basis(&self) -> usize {
        self.len()
    }
    fn edge_dofs(&self, edge: usize) -> std::ops::Range<usize> {
        self.dofs.edge_range(edge)
    }
    fn apply_edge_dof(&self, i: usize, q: &dyn Fn(usize, f64) -> [f64; 2]) -> f64 {
        self.dofs.eval_boundary(self.dofs.get(i), q)
    }
    fn dual_trace(&self, i: usize, edge: usize, t: f64) -> [f64; 2] {
        self.trace(i, edge, t)
    }
}

/// Dual basis function `i` as a field.
pub struct DualField<'a> {
    pub element: &'a Element,
    pub index: usize,
}

impl VectorField for DualField<'_> {
    fn boundary_value(&self, edge: usize, t: f64) -> [f64; 2] {
        self.element.trace(self.index, edge, t)
    }
    fn value_in_cell(&self, cell: usize, xi: [f64; 2], _x: Point) -> [f64; 2] {
        self.element.value_in_cell(self.index, cell, xi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skew_quad() -> Polygon {
        Polygon::new(vec![[0.0, 0.1], [1.0, 0.0], [1.2, 0.9], [0.1, 1.1]]).unwrap()
    }

    #[test]
    fn duals_are_kronecker() {
        for spec in [ElementSpec::general(0), ElementSpec::general(1), ElementSpec::reduced(1)] {
            let el = Element::build(&skew_quad(), &spec.with_h_target(0.2)).unwrap();
            assert!(el.basis.kronecker_defect < 1e-9, "{:?}: {}", spec.setting, el.basis.kronecker_defect);
            // direct evaluation of a few functionals agrees
            for i in [0, el.len() / 2, el.len() - 1] {
                let d = el.dofs.get(i);
                assert!((el.dofs.eval(d, &el.dual(i)) - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn degenerate_duals_general() {
        let el = Element::build(&skew_quad(), &ElementSpec::general(1).with_h_target(0.2)).unwrap();
        assert_eq!(el.basis.count(DualClass::DegenerateNormal), 2 * 4);
        let el = Element::build(&skew_quad(), &ElementSpec::reduced(1).with_h_target(0.2)).unwrap();
        assert_eq!(el.basis.count(DualClass::DegenerateNormal), 0);
        assert_eq!(el.basis.count(DualClass::ConstantLift), 2);
    }
}
