//! End-to-end acceptance run on the nine-edge polygon in `data/nonagon.json`.
//!
//! Prints one PASS/FAIL line per criterion (written straight to stderr so it shows up
//! without `--nocapture`) and fails if any criterion fails.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use polyhdiv::dofs::{validate_dof_set, DofKind};
use polyhdiv::element::{DualClass, Element, DEFAULT_TOL_ZERO};
use polyhdiv::geometry::{load_polygon, Polygon};
use polyhdiv::hkspace::{build_space, dimension, ElementSpec, NormalConfig, Setting, SpaceBasis};
use polyhdiv::polyspace::{Poly1, ProjectorKind};
use polyhdiv::rtref::{
    divergence_excess, internal_trace_defect, rt_compare_normal_traces, rt_nodal_basis, rt_space_basis,
};
use polyhdiv::verify::{
    auto_partner, degenerate_norm_ratio, degeneration_census, interface_jump, internal_vanishing_defect,
    lowest_order_scaling, run_suite, trace_fit_residual, trace_span_ranks, Thresholds,
};

const SETTINGS: [Setting; 2] = [Setting::General, Setting::Reduced];
const CONFIGS: [NormalConfig; 2] = [NormalConfig::Ia, NormalConfig::Ib];
const LEVELS: usize = 3;
const FLOOR: f64 = 1e-10;

type Key = (Setting, NormalConfig, usize);

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn spec(setting: Setting, config: NormalConfig, k: usize) -> ElementSpec {
    let s = match setting {
        Setting::General => ElementSpec::general(k),
        Setting::Reduced => ElementSpec::reduced(k),
    };
    s.with_config(config)
}

fn line(id: usize, name: &str, pass: bool, detail: &str) {
    let _ = writeln!(
        std::io::stderr(),
        "AC-{id:<2} {} {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

fn decreasing(v: &[f64], factor: f64) -> bool {
    v.windows(2).all(|w| (w[0] <= FLOOR && w[1] <= FLOOR) || w[1] <= w[0] / factor)
}

fn seq(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.1e}")).collect::<Vec<_>>().join("→")
}

struct Fixture {
    polygon: Polygon,
    spaces: BTreeMap<(Setting, usize), Arc<SpaceBasis>>,
    elements: BTreeMap<Key, Element>,
    /// Kronecker and internal-vanishing defects per refinement level.
    kron: BTreeMap<Key, Vec<f64>>,
    vanish: BTreeMap<Key, Vec<f64>>,
}

impl Fixture {
    fn new() -> Fixture {
        let polygon = load_polygon(&data("nonagon.json")).expect("acceptance polygon");
        let mut fx = Fixture {
            polygon,
            spaces: BTreeMap::new(),
            elements: BTreeMap::new(),
            kron: BTreeMap::new(),
            vanish: BTreeMap::new(),
        };
        let h0 = fx.polygon.diameter() / 16.0;
        for setting in SETTINGS {
            for k in 0..=2 {
                for level in 0..LEVELS {
                    let s = spec(setting, NormalConfig::Ia, k).with_h_target(h0 / f64::from(1u32 << level));
                    let space = Arc::new(build_space(&fx.polygon, &s).expect("space builds"));
                    for config in CONFIGS {
                        let el = Element::with_config(space.clone(), config, DEFAULT_TOL_ZERO).expect("element builds");
                        let key = (setting, config, k);
                        fx.kron.entry(key).or_default().push(el.basis.kronecker_defect);
                        fx.vanish.entry(key).or_default().push(internal_vanishing_defect(&el));
                        if level == 0 {
                            fx.elements.insert(key, el);
                        }
                    }
                    if level == 0 {
                        fx.spaces.insert((setting, k), space);
                    }
                }
            }
        }
        fx
    }

    fn keys(&self) -> impl Iterator<Item = &Key> {
        self.elements.keys()
    }
}

fn ac1(fx: &Fixture) -> (bool, String) {
    let mut ok = true;
    let mut parts = vec![];
    for (k, want) in [(0, 27), (1, 39), (2, 56)] {
        let space = &fx.spaces[&(Setting::General, k)];
        let el = &fx.elements[&(Setting::General, NormalConfig::Ia, k)];
        let formula = dimension(&space.spec, 9).unwrap();
        let rank = space.gram_rank().0;
        let all = [formula, space.len(), el.dofs.len(), rank];
        ok &= all.iter().all(|&v| v == want);
        parts.push(format!("k={k}: formula/generators/dofs/rank = {all:?}"));
    }
    (ok, parts.join("; "))
}

fn ac2(fx: &Fixture) -> (bool, String) {
    let mut ok = true;
    let mut worst_cond: f64 = 0.0;
    let mut worst_kron: f64 = 0.0;
    let mut detail = vec![];
    for key in fx.keys() {
        let el = &fx.elements[key];
        let kr = &fx.kron[key];
        worst_cond = worst_cond.max(el.basis.cond);
        worst_kron = worst_kron.max(kr[0]);
        let this = el.basis.cond < 1e10 && kr[0] <= 1e-6 && decreasing(kr, 1.5);
        if !this {
            detail.push(format!("{key:?}: cond {:.2e}, kron {}", el.basis.cond, seq(kr)));
        }
        ok &= this;
    }
    let head = format!("12 configurations, max cond {worst_cond:.3e}, max Kronecker defect {worst_kron:.2e} (refinement within round-off floor {FLOOR:e})");
    (ok, if detail.is_empty() { head } else { format!("{head}; {}", detail.join("; ")) })
}

fn ac3(fx: &Fixture) -> (bool, String) {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut detail = vec![];
    for key in fx.keys() {
        let v = &fx.vanish[key];
        worst = worst.max(v[0]);
        let this = v[0] <= 1e-6 && decreasing(v, 2.0);
        if !this {
            detail.push(format!("{key:?}: {}", seq(v)));
        }
        ok &= this;
    }
    (ok, format!("max internal boundary value / scale {worst:.2e}; {}", detail.join("; ")))
}

fn ac4(fx: &Fixture) -> (bool, String) {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut bad = vec![];
    for key in fx.keys() {
        let el = &fx.elements[key];
        let deg = el.space.spec.trace_degree();
        let fit = trace_fit_residual(el, deg);
        let ranks = trace_span_ranks(el);
        worst = worst.max(fit);
        let this = fit <= 1e-6 && ranks.iter().all(|&r| r == key.2 + 1);
        if !this {
            bad.push(format!("{key:?}: fit {fit:.2e}, ranks {ranks:?}"));
        }
        ok &= this;
    }
    (ok, format!("max relative fit residual {worst:.2e}, every edge spans Q_k; {}", bad.join("; ")))
}

fn ac5(fx: &Fixture) -> (bool, String) {
    let mut ok = true;
    let mut min_ratio = f64::INFINITY;
    let mut bad = vec![];
    for key in fx.keys() {
        let el = &fx.elements[key];
        let census = degeneration_census(el);
        let want = if key.0 == Setting::General { 2 } else { 0 };
        let mut this = census.iter().all(|&c| c == want);
        if let Some(r) = degenerate_norm_ratio(el) {
            min_ratio = min_ratio.min(r);
            this &= r >= 1e-3;
        }
        if key.0 == Setting::Reduced {
            this &= el.basis.count(DualClass::DegenerateNormal) == 0;
        }
        if !this {
            bad.push(format!("{key:?}: {census:?}"));
        }
        ok &= this;
    }
    (
        ok,
        format!("general 2 per edge, reduced 0; min degenerate L² norm / median {min_ratio:.3}; {}", bad.join("; ")),
    )
}

fn ac6(fx: &Fixture) -> (bool, String) {
    let mut ok = true;
    let mut parts = vec![];
    for setting in SETTINGS {
        let ib = lowest_order_scaling(&fx.elements[&(setting, NormalConfig::Ib, 0)]);
        let dev = ib.midpoint_values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        let var = ib.variation.iter().cloned().fold(0.0, f64::max);
        let ia = lowest_order_scaling(&fx.elements[&(setting, NormalConfig::Ia, 0)]);
        let (lo, hi) = ia.midpoint_values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let spread = (hi - lo) / hi.abs();
        let ia_var = ia.variation.iter().cloned().fold(0.0, f64::max);
        ok &= dev <= 1e-6 && var <= 1e-6 && spread > 0.01 && ia_var <= 1e-6 * hi.abs();
        parts.push(format!(
            "{setting:?}: Ib |φ·n−1| {dev:.1e} variation {var:.1e}; Ia values {lo:.3}..{hi:.3} (spread {:.1}%)",
            100.0 * spread
        ));
    }
    (ok, parts.join("; "))
}

fn ac7(fx: &Fixture) -> (bool, String) {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut bad = vec![];
    for setting in SETTINGS {
        for k in 0..=2 {
            let s = spec(setting, NormalConfig::Ia, k);
            let partner = auto_partner(&fx.polygon, 0, 0.35, &s).expect("partner");
            let pspace = Arc::new(build_space(&partner, &s).expect("partner space"));
            for config in CONFIGS {
                let mate = Element::with_config(pspace.clone(), config, DEFAULT_TOL_ZERO).expect("partner element");
                let g = interface_jump(&fx.elements[&(setting, config, k)], &mate, 0.0).expect("shared edge");
                worst = worst.max(g.max_jump);
                if g.max_jump > 1e-6 {
                    bad.push(format!("{setting:?} {config:?} k={k}: {:.2e}", g.max_jump));
                    ok = false;
                }
            }
        }
    }
    (ok, format!("max relative normal-trace jump {worst:.2e} over 12 glued pairs; {}", bad.join("; ")))
}

fn ac8() -> (bool, String) {
    let mut ok = true;
    let mut parts = vec![];
    for (k, want) in [(0, 3), (1, 8), (2, 15)] {
        let dim = rt_space_basis(k).basis.len();
        let el = rt_nodal_basis(k);
        let it = internal_trace_defect(&el);
        let div = el.duals.iter().map(|q| divergence_excess(q, k)).fold(0.0, f64::max);
        let cmp = rt_compare_normal_traces(k).expect("comparison");
        let this = dim == want && el.kronecker_defect <= 1e-12 && it <= 1e-12 && div <= 1e-12 && cmp.matches();
        ok &= this;
        parts.push(format!(
            "k={k}: dim {dim}, kron {:.1e}, internal trace {it:.1e}, div excess {div:.1e}, trace ranks {:?}",
            el.kronecker_defect,
            cmp.ranks.iter().map(|r| r.2).collect::<Vec<_>>()
        ));
    }
    (ok, parts.join("; "))
}

fn ac9(fx: &Fixture) -> (bool, String) {
    let herm = fx.elements[&(Setting::General, NormalConfig::Ia, 2)].basis.cond;
    let mono = Element::build(&fx.polygon, &ElementSpec::general(2).with_projector(ProjectorKind::Monomial))
        .expect("monomial element")
        .basis
        .cond;
    (herm <= mono, format!("cond Hermite {herm:.3e} vs raw monomial {mono:.3e}"))
}

fn ac10(fx: &Fixture) -> (bool, String) {
    let square = load_polygon(&data("square.json")).unwrap();
    let sq = Element::build(&square, &ElementSpec::general(1)).map(|_| ()).unwrap_err();
    let l1 = ElementSpec::custom(1, 1, 1, 0, 0);
    let l1_dim = dimension(&l1, 9).unwrap_err();
    let l1_build = build_space(&fx.polygon, &l1).unwrap_err();
    let el = &fx.elements[&(Setting::General, NormalConfig::Ia, 2)];
    let mut dofs = el.dofs.clone();
    let n = dofs.normal[0].len();
    let dup = dofs.normal[0][n - 2].clone();
    if let DofKind::GlobalNormalMoment { kernel, .. } = &dup {
        assert!(kernel.poly != Poly1::zero());
    }
    dofs.normal[0][n - 1] = dup;
    let v = validate_dof_set(&dofs, &el.space);
    let ok = sq.kind() == "AdmissibilityError"
        && l1_dim.kind() == "AdmissibilityError"
        && l1_build.kind() == "AdmissibilityError"
        && !v.ok
        && v.violations.iter().any(|s| s.contains("dependent"));
    (
        ok,
        format!(
            "square+Ia → {}; l1=1 → {} / {}; duplicated kernel → {:?}",
            sq.kind(),
            l1_dim.kind(),
            l1_build.kind(),
            v.violations
        ),
    )
}

fn ac11(fx: &Fixture) -> (bool, String) {
    let r = run_suite(&fx.polygon, &ElementSpec::reduced(2), &Thresholds::default());
    let Some(d) = r.reduced_dimension.clone() else {
        return (false, "no reduced-dimension record".into());
    };
    let text = r.summary();
    let ok = r.passed
        && d.formula == 30
        && d.rank == 40
        && d.constructed == 40
        && d.discrepancy
        && text.contains("formula 30")
        && text.contains("constructed 40");
    let failing: Vec<_> = r.checks.iter().filter(|c| !c.pass && !c.informational).map(|c| c.name.clone()).collect();
    (
        ok,
        format!(
            "formula {} vs constructed {} / rank {} flagged; suite {} on the rank value {failing:?}",
            d.formula,
            d.constructed,
            d.rank,
            if r.passed { "passes" } else { "FAILS" }
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let fx = Fixture::new();
    let results: Vec<(usize, &str, (bool, String))> = vec![
        (1, "dimension counts", ac1(&fx)),
        (2, "unisolvence", ac2(&fx)),
        (3, "internal vanishing", ac3(&fx)),
        (4, "trace polynomial degree", ac4(&fx)),
        (5, "degeneration census", ac5(&fx)),
        (6, "Ib scaling", ac6(&fx)),
        (7, "interface conformity", ac7(&fx)),
        (8, "Raviart–Thomas oracle", ac8()),
        (9, "conditioning ordering", ac9(&fx)),
        (10, "admissibility enforcement", ac10(&fx)),
        (11, "reduced-dimension discrepancy", ac11(&fx)),
    ];
    for (id, name, (pass, detail)) in &results {
        line(*id, name, *pass, detail);
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.2 .0).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
