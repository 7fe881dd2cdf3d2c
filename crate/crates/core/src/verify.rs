//! Property checks on built elements, refinement studies, and the two-cell interface test.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::dofs::{validate_dof_set, DofKind};
use crate::element::{DualClass, Element, TraceElement, TRACE_SAMPLES};
use crate::error::{Error, Result};
use crate::geometry::{check_admissibility, dist, Polygon, DEFAULT_TOL_ANGLE};
use crate::hkspace::{build_space, constructed_count, dimension, reduced_dimension_formula, ElementSpec, NormalConfig, Setting};
use crate::polyspace::{edge_quadrature, ProjectorKind};

/// Every tolerance used by the suite; echoed in each report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub tol_kron: f64,
    pub tol_vanish: f64,
    pub tol_trace_fit: f64,
    pub tol_conformity: f64,
    pub tol_zero: f64,
    pub max_cond: f64,
    /// Required decrease per halving of `h` for Kronecker and conformity defects.
    pub refine_factor: f64,
    /// Required decrease per halving of `h` for internal boundary values.
    pub vanish_factor: f64,
    /// Values below this count as converged for the refinement-decrease tests.
    pub roundoff_floor: f64,
    pub div_stability: f64,
    pub div_theorem_tol: f64,
    pub degenerate_norm_ratio: f64,
    pub ib_tol: f64,
    pub ia_min_spread: f64,
    pub levels: usize,
    pub glue_shear: f64,
    pub glue_edge: usize,
    pub seed: u64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            tol_kron: 1e-6,
            tol_vanish: 1e-6,
            tol_trace_fit: 1e-6,
            tol_conformity: 1e-6,
            tol_zero: 1e-4,
            max_cond: 1e10,
            refine_factor: 1.5,
            vanish_factor: 2.0,
            roundoff_floor: 1e-10,
            div_stability: 0.1,
            div_theorem_tol: 1e-6,
            degenerate_norm_ratio: 1e-3,
            ib_tol: 1e-6,
            ia_min_spread: 0.01,
            levels: 3,
            glue_shear: 0.35,
            glue_edge: 0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
    pub detail: String,
    /// Reported but not part of the overall verdict.
    #[serde(default)]
    pub informational: bool,
}

impl CheckResult {
    pub fn new(name: &str, measured: f64, threshold: f64, pass: bool, detail: impl Into<String>) -> Self {
        CheckResult { name: name.into(), measured, threshold, pass, detail: detail.into(), informational: false }
    }

    /// `measured ≤ threshold`.
    pub fn at_most(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        CheckResult::new(name, measured, threshold, measured <= threshold, detail)
    }

    pub fn info(mut self) -> Self {
        self.informational = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub h: f64,
    pub cells: usize,
    pub kronecker: f64,
    pub vanishing: f64,
    pub conformity: f64,
    pub cond: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedDimensions {
    pub formula: i64,
    pub constructed: usize,
    pub rank: usize,
    pub discrepancy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        ErrorRecord { kind: e.kind().into(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub polygon: Polygon,
    pub spec: ElementSpec,
    pub thresholds: Thresholds,
    pub checks: Vec<CheckResult>,
    pub refinement: Vec<RefinementRow>,
    pub condition_numbers: Vec<(String, f64)>,
    pub reduced_dimension: Option<ReducedDimensions>,
    pub error: Option<ErrorRecord>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        if let Some(e) = &self.error {
            s.push_str(&format!("ERROR {}: {}\n", e.kind, e.message));
        }
        if let Some(r) = &self.reduced_dimension {
            s.push_str(&format!(
                "reduced dimension: formula {} vs constructed {} (rank {}){}\n",
                r.formula,
                r.constructed,
                r.rank,
                if r.discrepancy { " — DISCREPANCY, using rank" } else { "" }
            ));
        }
        for c in &self.checks {
            s.push_str(&format!(
                "{} {:<28} measured {:<12.4e} threshold {:<10.3e} {}\n",
                match (c.pass, c.informational) {
                    (true, _) => "PASS",
                    (false, true) => "INFO",
                    (false, false) => "FAIL",
                },
                c.name,
                c.measured,
                c.threshold,
                c.detail
            ));
        }
        for r in &self.refinement {
            s.push_str(&format!(
                "h {:.4e} cells {:>7} kron {:.3e} vanish {:.3e} glue {:.3e} cond {:.3e}\n",
                r.h, r.cells, r.kronecker, r.vanishing, r.conformity, r.cond
            ));
        }
        s
    }
}

fn ts() -> Vec<f64> {
    (0..TRACE_SAMPLES).map(|s| s as f64 / (TRACE_SAMPLES - 1) as f64).collect()
}

fn normal_of(p: &Polygon, e: usize, v: [f64; 2]) -> f64 {
    let n = p.edge(e).normal;
    v[0] * n[0] + v[1] * n[1]
}

/// Largest boundary magnitude over all duals of normal and mean functionals.
pub fn boundary_scale(el: &Element) -> f64 {
    let mut s: f64 = 0.0;
    for (i, c) in el.basis.classes.iter().enumerate() {
        if *c == DualClass::Internal {
            continue;
        }
        for e in 0..el.space.n_faces() {
            for t in ts() {
                let v = el.trace(i, e, t);
                s = s.max(v[0].abs()).max(v[1].abs());
            }
        }
    }
    s
}

/// `max |σ_i(φ_j) − δ_ij|`.
pub fn kronecker_defect(el: &Element) -> f64 {
    el.basis.kronecker_defect
}

/// Largest boundary value (any component) of an internal dual, relative to
/// [`boundary_scale`].
pub fn internal_vanishing_defect(el: &Element) -> f64 {
    let mut d: f64 = 0.0;
    for (i, c) in el.basis.classes.iter().enumerate() {
        if *c != DualClass::Internal {
            continue;
        }
        for e in 0..el.space.n_faces() {
            for t in ts() {
                let v = el.trace(i, e, t);
                d = d.max(v[0].abs()).max(v[1].abs());
            }
        }
    }
    d / boundary_scale(el).max(f64::MIN_POSITIVE)
}

/// Same as [`internal_vanishing_defect`] but read from the finite-element boundary
/// values instead of the exact data (resolution dependent).
pub fn internal_vanishing_defect_fe(el: &Element) -> Result<f64> {
    let sp = &el.space;
    let mut d: f64 = 0.0;
    for (i, c) in el.basis.classes.iter().enumerate() {
        if *c != DualClass::Internal {
            continue;
        }
        for e in 0..sp.n_faces() {
            for t in ts() {
                let x = sp.polygon.edge(e).point(t);
                let xl = sp.local(x);
                let mut v = [0.0; 2];
                for (j, g) in sp.generators.iter().enumerate() {
                    let u = sp.fields[g.field].fe_trace(e, t)?;
                    let gv = g.component.apply(xl, u);
                    v[0] += el.basis.coeffs[(j, i)] * gv[0];
                    v[1] += el.basis.coeffs[(j, i)] * gv[1];
                }
                d = d.max(v[0].abs()).max(v[1].abs());
            }
        }
    }
    Ok(d / boundary_scale(el).max(f64::MIN_POSITIVE))
}

/// Relative least-squares residual of fitting each normal trace, edge by edge, with
/// polynomials of degree `degree` (negative: the zero space).
pub fn trace_fit_residual(el: &Element, degree: i32) -> f64 {
    let p = &el.space.polygon;
    let rule = edge_quadrature(2 * el.space.spec.k + 8).expect("moderate exactness");
    let ss = &rule.points;
    let w: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let ncol = (degree + 1).max(0) as usize;
    let basis = DMatrix::from_fn(ss.len(), ncol, |q, j| w[q] * ss[q].powi(j as i32));
    let samples: Vec<Vec<DVector<f64>>> = (0..el.len())
        .map(|i| {
            (0..p.n_faces())
                .map(|e| DVector::from_fn(ss.len(), |q, _| w[q] * normal_of(p, e, el.trace(i, e, 0.5 * (ss[q] + 1.0)))))
                .collect()
        })
        .collect();
    // traces below round-off of the whole basis (degenerate duals) are not fitted
    let global = samples.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
    let svd = basis.clone().svd(true, true);
    let mut worst: f64 = 0.0;
    for per_edge in &samples {
        let total = per_edge.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for y in per_edge {
            let res = if ncol == 0 {
                y.norm()
            } else {
                let c = svd.solve(y, 1e-14).expect("least squares");
                (y - &basis * c).norm()
            };
            let yn = y.norm();
            let denom = if yn < 1e-8 * total.max(global) { total.max(global) } else { yn };
            worst = worst.max(res / denom);
        }
    }
    worst
}

/// Numerical rank, per edge, of the normal traces of the non-degenerate duals.
pub fn trace_span_ranks(el: &Element) -> Vec<usize> {
    let p = &el.space.polygon;
    let t = ts();
    (0..p.n_faces())
        .map(|e| {
            let cols: Vec<usize> = (0..el.len())
                .filter(|&i| el.basis.classes[i] == DualClass::Normal)
                .collect();
            let m = DMatrix::from_fn(t.len(), cols.len(), |q, j| normal_of(p, e, el.trace(cols[j], e, t[q])));
            if m.ncols() == 0 {
                return 0;
            }
            let sv = m.singular_values();
            let max = sv.max();
            sv.iter().filter(|&&s| s > 1e-8 * max).count()
        })
        .collect()
}

/// Degenerate-normal duals attached to each edge.
pub fn degeneration_census(el: &Element) -> Vec<usize> {
    let mut out = vec![0; el.space.n_faces()];
    for (i, d) in el.dofs.all().enumerate() {
        if el.basis.classes[i] == DualClass::DegenerateNormal {
            if let Some(e) = d.edge() {
                out[e] += 1;
            }
        }
    }
    out
}

/// `min ‖φ_degenerate‖ / median ‖φ‖` (L² norms over the element).
pub fn degenerate_norm_ratio(el: &Element) -> Option<f64> {
    let mut norms: Vec<f64> = (0..el.len()).map(|i| el.l2_norm(i)).collect();
    let min_deg = (0..el.len())
        .filter(|&i| el.basis.classes[i] == DualClass::DegenerateNormal)
        .map(|i| norms[i])
        .fold(f64::INFINITY, f64::min);
    if !min_deg.is_finite() {
        return None;
    }
    norms.sort_by(f64::total_cmp);
    Some(min_deg / norms[norms.len() / 2])
}

/// Normal trace values of the duals of the constant/midpoint functional of each edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowestOrderScaling {
    /// Normal trace at the edge midpoint, per edge.
    pub midpoint_values: Vec<f64>,
    /// `max − min` of the normal trace along its own edge.
    pub variation: Vec<f64>,
}

pub fn lowest_order_scaling(el: &Element) -> LowestOrderScaling {
    let p = &el.space.polygon;
    let mut midpoint_values = Vec::new();
    let mut variation = Vec::new();
    for (i, d) in el.dofs.all().enumerate() {
        let e = match d {
            DofKind::PointNormalValue { edge, .. } => *edge,
            DofKind::GlobalNormalMoment { edge, kernel } if kernel.degree == 0 => *edge,
            _ => continue,
        };
        let vals: Vec<f64> = ts().iter().map(|&t| el.normal_trace(i, e, t)).collect();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        midpoint_values.push(el.normal_trace(i, e, 0.5));
        variation.push(hi - lo);
        let _ = p;
    }
    LowestOrderScaling { midpoint_values, variation }
}

/// `max |σ(Σ c_i φ_i) − c|` over boundary functionals for random `c`.
pub fn linearity_probe(el: &Element, seed: u64) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let c: Vec<f64> = (0..el.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let coeffs = DVector::from_vec(c.clone());
    let gen = &el.basis.coeffs * coeffs;
    let nb = el.dofs.n_normal() + el.dofs.extra.len();
    el.dofs
        .all()
        .take(nb)
        .enumerate()
        .map(|(i, d)| (el.dofs.eval_boundary(d, &|e, t| el.combination_trace(gen.as_slice(), e, t)) - c[i]).abs())
        .fold(0.0, f64::max)
}

/// Largest jump of each dual's boundary value across the polygon corners.
pub fn vertex_jumps(el: &Element) -> Vec<f64> {
    let n = el.space.n_faces();
    (0..el.len())
        .map(|i| {
            (0..n)
                .map(|v| {
                    let a = el.trace(i, v, 0.0);
                    let b = el.trace(i, (v + n - 1) % n, 1.0);
                    (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Divergence data of the duals from finite-element gradients.
#[derive(Debug, Clone)]
pub struct DivergenceData {
    pub l2_norms: Vec<f64>,
    pub integrals: Vec<f64>,
    /// `∮ φ·n` using the finite-element boundary values.
    pub fe_fluxes: Vec<f64>,
}

pub fn divergence_data(el: &Element) -> Result<DivergenceData> {
    let (dg, di) = el.space.divergence_gram()?;
    let flux = el.space.fe_boundary_flux()?;
    let c = &el.basis.coeffs;
    let n = el.len();
    Ok(DivergenceData {
        l2_norms: (0..n).map(|i| (c.column(i).transpose() * &dg * c.column(i))[(0, 0)].max(0.0).sqrt()).collect(),
        integrals: (0..n).map(|i| c.column(i).dot(&di)).collect(),
        fe_fluxes: (0..n).map(|i| c.column(i).dot(&flux)).collect(),
    })
}

/// The polygon mirrored across `edge` and sheared along it; the edge itself stays fixed.
pub fn glue_partner(p: &Polygon, edge: usize, shear: f64) -> Result<Polygon> {
    let e = p.edge(edge);
    let verts = p
        .vertices()
        .iter()
        .map(|v| {
            let d = (v[0] - e.start[0]) * e.normal[0] + (v[1] - e.start[1]) * e.normal[1];
            let r = [v[0] - 2.0 * d * e.normal[0], v[1] - 2.0 * d * e.normal[1]];
            let dr = -d;
            [r[0] + shear * dr * e.tangent[0], r[1] + shear * dr * e.tangent[1]]
        })
        .collect();
    Polygon::new(verts)
}

/// Finds `(edge of a, edge of b)` with coinciding endpoints in opposite order.
pub fn shared_edge(a: &Polygon, b: &Polygon) -> Result<(usize, usize)> {
    let tol = 1e-10 * a.diameter().max(b.diameter());
    for (i, ea) in a.edges().iter().enumerate() {
        for (j, eb) in b.edges().iter().enumerate() {
            if dist(ea.start, eb.end) <= tol && dist(ea.end, eb.start) <= tol {
                return Ok((i, j));
            }
        }
    }
    Err(Error::Geometry("the polygons do not share an edge with matching endpoints".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlueResult {
    pub edge_a: usize,
    pub edge_b: usize,
    /// `(dof index on a, relative jump)`.
    pub jumps: Vec<(usize, f64)>,
    pub max_jump: f64,
}

/// For every functional of `a` on its shared edge, matches the dual on `a` with the
/// function on `b` whose shared-edge functionals equal those of the same field and
/// whose other functionals vanish, and measures `|q_a·n_a + q_b·n_b|` on the edge.
pub fn interface_jump<A: TraceElement, B: TraceElement>(a: &A, b: &B, mismatch: f64) -> Result<GlueResult> {
    let (ea, eb) = shared_edge(a.polygon(), b.polygon())?;
    let (pa, pb) = (a.polygon(), b.polygon());
    let t = ts();
    let mut norms = Vec::new();
    let mut raw = Vec::new();
    for i in a.edge_dofs(ea) {
        // field on b's edge: t_b ↦ dual_a(1 − t_b)
        let qa = |e: usize, tb: f64| if e == eb { a.dual_trace(i, ea, 1.0 - tb) } else { [0.0, 0.0] };
        let coeffs: Vec<(usize, f64)> =
            b.edge_dofs(eb).map(|m| (m, b.apply_edge_dof(m, &qa) * (1.0 + mismatch))).collect();
        let mut jump: f64 = 0.0;
        let mut norm: f64 = 0.0;
        for &s in &t {
            let na = normal_of(pa, ea, a.dual_trace(i, ea, s));
            let mut qb = [0.0; 2];
            for &(m, c) in &coeffs {
                let v = b.dual_trace(m, eb, 1.0 - s);
                qb[0] += c * v[0];
                qb[1] += c * v[1];
            }
            let nb = normal_of(pb, eb, qb);
            jump = jump.max((na + nb).abs());
            norm = norm.max(na.abs());
        }
        norms.push(norm);
        raw.push((i, jump));
    }
    let edge_scale = norms.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let jumps: Vec<(usize, f64)> = raw
        .into_iter()
        .zip(&norms)
        .map(|((i, j), &n)| (i, j / if n < 1e-8 * edge_scale { edge_scale } else { n }))
        .collect();
    let max_jump = jumps.iter().map(|j| j.1).fold(0.0, f64::max);
    Ok(GlueResult { edge_a: ea, edge_b: eb, jumps, max_jump })
}

/// Builds both elements with the same spec and measures the interface jump.
pub fn check_interface_conformity(p1: &Polygon, p2: &Polygon, spec: &ElementSpec) -> Result<GlueResult> {
    shared_edge(p1, p2)?;
    let a = Element::build(p1, spec)?;
    let b = Element::build(p2, spec)?;
    interface_jump(&a, &b, 0.0)
}

/// Picks a partner for `p` across `edge`, trying a few shears until the partner is
/// admissible for `spec`.
pub fn auto_partner(p: &Polygon, edge: usize, shear: f64, spec: &ElementSpec) -> Result<Polygon> {
    let mut last = None;
    for s in [shear, -shear, 0.5 * shear, 1.7 * shear] {
        match glue_partner(p, edge, s) {
            Ok(q) => {
                let rep = check_admissibility(&q, DEFAULT_TOL_ANGLE);
                let coord_ok = spec.setting == Setting::Reduced || spec.l1 < 0 || rep.ok_for_coordinate_dofs;
                if coord_ok && rep.degenerate_support_edges.is_empty() {
                    return Ok(q);
                }
                last = Some(Error::Admissibility(format!("partner with shear {s} is not admissible")));
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn decreasing(values: &[f64], factor: f64, floor: f64) -> bool {
    values.windows(2).all(|w| (w[0] <= floor && w[1] <= floor) || w[1] <= w[0] / factor)
}

fn fmt_seq(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" → ")
}

/// Condition numbers of the transfer matrix with each projector family.
pub fn conditioning_comparison(p: &Polygon, spec: &ElementSpec) -> Result<Vec<(ProjectorKind, f64)>> {
    let mut out = Vec::new();
    for kind in [ProjectorKind::Hermite, ProjectorKind::Monomial, ProjectorKind::Orthogonal] {
        let el = Element::build(p, &spec.with_projector(kind))?;
        out.push((kind, el.basis.cond));
    }
    Ok(out)
}

/// Runs every check on `p` with `spec` over `thresholds.levels` meshes (h, h/2, …).
pub fn run_suite(p: &Polygon, spec: &ElementSpec, th: &Thresholds) -> VerificationReport {
    let mut report = VerificationReport {
        polygon: p.clone(),
        spec: *spec,
        thresholds: *th,
        checks: vec![],
        refinement: vec![],
        condition_numbers: vec![],
        reduced_dimension: None,
        error: None,
        passed: false,
    };
    if let Err(e) = suite_body(p, spec, th, &mut report) {
        report.error = Some((&e).into());
    }
    report.passed = report.error.is_none() && report.checks.iter().all(|c| c.pass || c.informational);
    report
}

fn suite_body(p: &Polygon, spec: &ElementSpec, th: &Thresholds, r: &mut VerificationReport) -> Result<()> {
    let n = p.n_faces();
    let h0 = spec.h_target_for(p);
    let levels = th.levels.max(1);
    let partner = auto_partner(p, th.glue_edge.min(n - 1), th.glue_shear, spec)?;

    let mut elements: Vec<Element> = Vec::new();
    for l in 0..levels {
        let s = spec.with_h_target(h0 / f64::from(1u32 << l));
        let el = Element::from_space_with_tol(Arc::new(build_space(p, &s)?), th.tol_zero)?;
        let mate = Element::from_space_with_tol(Arc::new(build_space(&partner, &s)?), th.tol_zero)?;
        let glue = interface_jump(&el, &mate, 0.0)?;
        r.refinement.push(RefinementRow {
            h: el.space.fe.mesh.h,
            cells: el.space.fe.n_cells(),
            kronecker: kronecker_defect(&el),
            vanishing: internal_vanishing_defect(&el),
            conformity: glue.max_jump,
            cond: el.basis.cond,
        });
        elements.push(el);
    }
    let el = &elements[0];
    let rows = &r.refinement;
    let col = |f: fn(&RefinementRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();

    // counts
    let (rank, _) = el.space.gram_rank();
    let built = el.space.len();
    let ndofs = el.dofs.len();
    match spec.setting {
        Setting::General => {
            let want = dimension(spec, n)?;
            let ok = built == want && ndofs == want && rank == want;
            r.checks.push(CheckResult::new(
                "dimension",
                rank as f64,
                want as f64,
                ok,
                format!("formula {want}, generators {built}, functionals {ndofs}, Gram rank {rank}"),
            ));
        }
        Setting::Reduced => {
            let constructed = constructed_count(spec, n)?;
            let formula = reduced_dimension_formula(spec.k, n);
            r.reduced_dimension =
                Some(ReducedDimensions { formula, constructed, rank, discrepancy: formula != rank as i64 });
            let ok = built == constructed && ndofs == constructed && rank == constructed;
            r.checks.push(CheckResult::new(
                "dimension",
                rank as f64,
                constructed as f64,
                ok,
                format!("constructed {constructed}, functionals {ndofs}, Gram rank {rank}; quoted formula {formula}"),
            ));
        }
    }
    let val = validate_dof_set(&el.dofs, &el.space);
    r.checks.push(CheckResult::new(
        "dof_structure",
        val.violations.len() as f64,
        0.0,
        val.ok,
        val.violations.join("; "),
    ));
    r.checks.push(CheckResult::at_most("unisolvence", el.basis.cond, th.max_cond, "transfer-matrix condition number"));

    let kron = col(|x| x.kronecker);
    r.checks.push(CheckResult::new(
        "kronecker",
        kron[0],
        th.tol_kron,
        kron[0] <= th.tol_kron && decreasing(&kron, th.refine_factor, th.roundoff_floor),
        fmt_seq(&kron),
    ));
    r.checks.push(CheckResult::at_most("linearity_probe", linearity_probe(el, th.seed), th.tol_kron, format!("seed {}", th.seed)));
    let van = col(|x| x.vanishing);
    r.checks.push(CheckResult::new(
        "internal_vanishing",
        van[0],
        th.tol_vanish,
        van[0] <= th.tol_vanish && decreasing(&van, th.vanish_factor, th.roundoff_floor),
        fmt_seq(&van),
    ));
    let deg = spec.trace_degree();
    let fit = trace_fit_residual(el, deg);
    r.checks.push(CheckResult::at_most("trace_degree", fit, th.tol_trace_fit, format!("fit degree {deg}")));
    let ranks = trace_span_ranks(el);
    let want_rank = (deg + 1).max(0) as usize;
    let worst = ranks.iter().copied().filter(|&x| x != want_rank).min().unwrap_or(want_rank);
    r.checks.push(CheckResult::new(
        "trace_span",
        worst as f64,
        want_rank as f64,
        ranks.iter().all(|&x| x == want_rank),
        format!("per-edge ranks {ranks:?}"),
    ));

    let census = degeneration_census(el);
    let want_deg = match spec.setting {
        Setting::General if spec.l1 == 0 => 2,
        _ => 0,
    };
    r.checks.push(CheckResult::new(
        "degeneration_census",
        census.iter().sum::<usize>() as f64,
        (want_deg * n) as f64,
        census.iter().all(|&c| c == want_deg),
        format!("per edge {census:?}"),
    ));
    if let Some(ratio) = degenerate_norm_ratio(el) {
        r.checks.push(CheckResult::new(
            "degenerate_interior_norm",
            ratio,
            th.degenerate_norm_ratio,
            ratio >= th.degenerate_norm_ratio,
            "min degenerate L² norm / median",
        ));
    }
    if spec.k == 0 {
        let sc = lowest_order_scaling(el);
        match spec.normal_config {
            NormalConfig::Ib => {
                let dev = sc
                    .midpoint_values
                    .iter()
                    .map(|v| (v - 1.0).abs())
                    .chain(sc.variation.iter().copied())
                    .fold(0.0, f64::max);
                r.checks.push(CheckResult::at_most("lowest_order_scaling", dev, th.ib_tol, "|φ·n(mid) − 1| and variation"));
            }
            NormalConfig::Ia => {
                let (lo, hi) = sc
                    .midpoint_values
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                let spread = (hi - lo) / hi.abs().max(lo.abs());
                let var = sc.variation.iter().cloned().fold(0.0, f64::max);
                r.checks.push(CheckResult::new(
                    "lowest_order_scaling",
                    spread,
                    th.ia_min_spread,
                    spread > th.ia_min_spread && var <= th.ib_tol * hi.abs(),
                    format!("relative spread of constant traces across edges; variation {var:.2e}"),
                ));
            }
        }
    }

    let glue = col(|x| x.conformity);
    r.checks.push(CheckResult::new(
        "interface_conformity",
        glue[0],
        th.tol_conformity,
        glue[0] <= th.tol_conformity && decreasing(&glue, th.refine_factor, th.roundoff_floor),
        format!("partner across edge {}: {}", th.glue_edge.min(n - 1), fmt_seq(&glue)),
    ));

    let div0 = divergence_data(el)?;
    if elements.len() > 1 {
        let div1 = divergence_data(&elements[1])?;
        let jumps = vertex_jumps(el);
        let bscale = boundary_scale(el);
        let change = |i: usize| (div1.l2_norms[i] - div0.l2_norms[i]).abs() / div0.l2_norms[i].max(f64::MIN_POSITIVE);
        let (smooth, broken): (Vec<usize>, Vec<usize>) = (0..el.len()).partition(|&i| jumps[i] <= 1e-8 * bscale);
        let worst = smooth.iter().map(|&i| change(i)).fold(0.0, f64::max);
        r.checks.push(CheckResult::at_most(
            "divergence_stability",
            worst,
            th.div_stability,
            format!("max relative change of ‖div φ‖ under h/2 over {} duals with continuous boundary values", smooth.len()),
        ));
        if !broken.is_empty() {
            let worst = broken.iter().map(|&i| change(i)).fold(0.0, f64::max);
            r.checks.push(
                CheckResult::at_most(
                    "divergence_growth_at_corners",
                    worst,
                    th.div_stability,
                    format!(
                        "{} duals jump at a corner; their lifts have |∇u| ~ 1/r there, so ‖div φ‖ grows like √log(1/h)",
                        broken.len()
                    ),
                )
                .info(),
            );
        }
    }
    let scale = div0.fe_fluxes.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let gap = div0
        .integrals
        .iter()
        .zip(&div0.fe_fluxes)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max);
    r.checks.push(CheckResult::at_most("divergence_theorem", gap, th.div_theorem_tol, "|∫div φ − ∮φ·n| / max flux"));

    let cmp = conditioning_comparison(p, spec)?;
    for (k, c) in &cmp {
        r.condition_numbers.push((k.to_string(), *c));
    }
    let (herm, mono) = (cmp[0].1, cmp[1].1);
    r.checks.push(CheckResult::new(
        "conditioning_order",
        herm,
        mono,
        herm <= mono * (1.0 + 1e-9),
        "hermite vs monomial kernels",
    ));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rtref::rt_nodal_basis_on;

    fn pentagon() -> Polygon {
        Polygon::new(vec![[0.0, 0.0], [1.0, 0.1], [1.3, 0.8], [0.6, 1.3], [-0.2, 0.7]]).unwrap()
    }

    #[test]
    fn partner_shares_edge() {
        let p = pentagon();
        for e in 0..5 {
            let q = glue_partner(&p, e, 0.35).unwrap();
            let (a, _) = shared_edge(&p, &q).unwrap();
            assert_eq!(a, e);
            assert!((q.area() - p.area()).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_polygons_rejected() {
        let a = pentagon();
        let b = a.transformed([[1.0, 0.0], [0.0, 1.0]], [5.0, 0.0]).unwrap();
        assert_eq!(shared_edge(&a, &b).unwrap_err().kind(), "GeometryError");
    }

    #[test]
    fn rt_glue_is_exact() {
        let t1 = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [0.2, 0.9]]).unwrap();
        let t2 = Polygon::new(vec![[1.0, 0.0], [1.1, 1.0], [0.2, 0.9]]).unwrap();
        for k in 0..=2 {
            let a = rt_nodal_basis_on(&t1, k).unwrap();
            let b = rt_nodal_basis_on(&t2, k).unwrap();
            let g = interface_jump(&a, &b, 0.0).unwrap();
            assert!(g.max_jump < 1e-12, "k={k}: {}", g.max_jump);
            assert!(interface_jump(&a, &b, 0.5).unwrap().max_jump > 0.1);
        }
    }

    #[test]
    fn triangles_glued_reduced() {
        let t1 = Polygon::new(vec![[0.0, 0.0], [1.0, 0.1], [0.2, 0.9]]).unwrap();
        let t2 = Polygon::new(vec![[1.0, 0.1], [1.1, 1.0], [0.2, 0.9]]).unwrap();
        let spec = ElementSpec::reduced(1).with_h_target(0.15);
        assert!(check_interface_conformity(&t1, &t2, &spec).unwrap().max_jump < 1e-6);
    }

    #[test]
    fn pentagon_glued_to_quadrilateral() {
        let p = pentagon();
        let q = Polygon::new(vec![[1.0, 0.1], [0.0, 0.0], [0.3, -0.9], [1.4, -0.6]]).unwrap();
        let spec = ElementSpec::general(2).with_config(NormalConfig::Ib).with_h_target(0.2);
        let a = Element::build(&p, &spec).unwrap();
        let b = Element::build(&q, &spec).unwrap();
        assert!(interface_jump(&a, &b, 0.0).unwrap().max_jump < 1e-6);
        assert!(interface_jump(&a, &b, 1.0).unwrap().max_jump > 0.5);
    }

    #[test]
    fn negative_controls() {
        let el = Element::build(&pentagon(), &ElementSpec::general(2).with_h_target(0.2)).unwrap();
        assert!(trace_fit_residual(&el, 2) < 1e-8);
        assert!(trace_fit_residual(&el, 1) > 1e-3);
        assert!(internal_vanishing_defect(&el) < 1e-10);
        // perturbing the dual coefficients breaks the vanishing of internal duals
        let mut bad = Element::build(&pentagon(), &ElementSpec::general(1).with_h_target(0.2)).unwrap();
        let n = bad.len();
        for i in 0..n {
            bad.basis.coeffs[(0, i)] += 1e-2;
        }
        assert!(internal_vanishing_defect(&bad) > 1e-4);
    }

    #[test]
    fn suite_on_pentagon() {
        let th = Thresholds { levels: 2, ..Thresholds::default() };
        let r = run_suite(&pentagon(), &ElementSpec::general(1).with_h_target(0.25), &th);
        assert!(r.passed, "{}", r.summary());
        let r = run_suite(&pentagon(), &ElementSpec::reduced(0).with_config(NormalConfig::Ib).with_h_target(0.25), &th);
        assert!(r.passed, "{}", r.summary());
        assert!(r.reduced_dimension.is_some());
    }

    #[test]
    fn square_surfaces_admissibility() {
        let sq = Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let r = run_suite(&sq, &ElementSpec::general(1), &Thresholds::default());
        assert!(!r.passed);
        assert_eq!(r.error.unwrap().kind, "AdmissibilityError");
    }
}
