use std::f64::consts::TAU;

use polyhdiv::dofs::{make_internal_dofs, make_normal_dofs};
use polyhdiv::element::Element;
use polyhdiv::geometry::Polygon;
use polyhdiv::hkspace::{constructed_count, dimension, ElementSpec};
use proptest::prelude::*;

/// Star-shaped polygon around the origin, rotated by `phase`.
fn star(radii: &[f64], phase: f64) -> Polygon {
    let n = radii.len();
    let v = radii
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let a = phase + TAU * i as f64 / n as f64;
            [r * a.cos(), r * a.sin()]
        })
        .collect();
    Polygon::new(v).unwrap()
}

fn polygon() -> impl Strategy<Value = Polygon> {
    (prop::collection::vec(0.8..1.0f64, 3..8), 0.05..1.0f64).prop_map(|(r, phase)| star(&r, phase))
}

proptest! {
    #[test]
    fn general_dimension_matches_generators(k in 0usize..5, n in 3usize..15) {
        let spec = ElementSpec::general(k);
        prop_assert_eq!(dimension(&spec, n).unwrap(), constructed_count(&spec, n).unwrap());
    }

    #[test]
    fn functionals_match_dimension(p in polygon(), k in 0usize..4) {
        let spec = ElementSpec::general(k);
        let normal: usize = make_normal_dofs(&p, &spec).unwrap().iter().map(Vec::len).sum();
        let internal = make_internal_dofs(&spec).unwrap().len();
        prop_assert_eq!(normal + internal, dimension(&spec, p.n_faces()).unwrap());
    }

    #[test]
    fn edge_normals_point_outward(p in polygon()) {
        prop_assert!(p.area() > 0.0);
        for e in p.edges() {
            let m = e.midpoint();
            let d = 1e-3 * e.length;
            prop_assert!(!p.contains([m[0] + d * e.normal[0], m[1] + d * e.normal[1]]));
            prop_assert!(p.contains([m[0] - d * e.normal[0], m[1] - d * e.normal[1]]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn random_polygons_give_unisolvent_elements(p in polygon(), k in 0usize..2) {
        let spec = ElementSpec::general(k).with_h_target(0.25);
        let el = Element::build(&p, &spec).unwrap();
        prop_assert_eq!(el.len(), dimension(&spec, p.n_faces()).unwrap());
        prop_assert!(el.basis.kronecker_defect < 1e-8, "defect {}", el.basis.kronecker_defect);
    }
}
