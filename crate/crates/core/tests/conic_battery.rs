use std::collections::BTreeMap;

use storm_core::conics::{classify, grid_evaluate, slice_model, Axis, Conic, ConicKind, PARABOLA_TOLERANCE};
use storm_core::implicit::ImplicitModel;
use storm_core::presets::preset;
use storm_core::terms::parse_terms;

fn battery() -> Vec<(&'static str, Conic<f64>, ConicKind)> {
    use ConicKind::*;
    let rot = Conic::new(0.25, 0.0, 1.0, 0.0, 0.0, -1.0).rotated(0.7);
    vec![
        ("circle", Conic::new(1.0, 0.0, 1.0, 0.0, 0.0, -1.0), Ellipse),
        ("axis ellipse", Conic::new(0.25, 0.0, 1.0, 0.0, 0.0, -1.0), Ellipse),
        ("rotated ellipse", rot, Ellipse),
        ("parabola", Conic::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0), Parabola),
        ("hyperbola x", Conic::new(1.0, 0.0, -1.0, 0.0, 0.0, -1.0), Hyperbola),
        ("hyperbola y", Conic::new(-1.0, 0.0, 1.0, 0.0, 0.0, -1.0), Hyperbola),
        ("scaled circle", Conic::new(1.0, 0.0, 1.0, 0.0, 0.0, -1.0).scaled(1e3), Ellipse),
        ("scaled parabola", Conic::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0).scaled(1e-4), Parabola),
        ("line pair", Conic::new(1.0, 0.0, -1.0, 0.0, 0.0, 0.0), Degenerate),
    ]
}

#[test]
fn nine_case_battery() {
    let deg30 = std::f64::consts::PI / 6.0;
    for (name, conic, expected) in battery() {
        assert_eq!(classify(&conic, PARABOLA_TOLERANCE).unwrap(), expected, "{name}");
        for k in [-2.5, 1e-7, 3e5] {
            assert_eq!(classify(&conic.scaled(k), PARABOLA_TOLERANCE).unwrap(), expected, "{name} ×{k}");
        }
        assert_eq!(classify(&conic.rotated(deg30), PARABOLA_TOLERANCE).unwrap(), expected, "{name} 30°");
    }
}

#[test]
fn printed_fourteen_term_model_sliced_to_air_and_water() {
    let coefficients = vec![
        0.0008058, 0.001943, 0.001761, -0.0008463, 0.00000004416, -0.0000009442, -0.0000007349, -0.00000005396,
        -0.0000007829, -0.000000652, 0.0000002316, -0.000001708, 0.0000008201, 0.0000005655,
    ];
    let model = ImplicitModel::new(preset("buoy-14term").unwrap(), coefficients).unwrap();
    let fixed: BTreeMap<String, f64> = [("w".to_string(), 5.0), ("p".to_string(), 1013.0)].into();
    let s = slice_model(&model, "a", "t", &fixed).unwrap();
    // Hand substitution at w = 5, p = 1013.
    let expected = [
        -0.0000007349,
        0.0000005655,
        -0.00000005396,
        0.001761 - 0.000000652 * 5.0 - 0.000001708 * 1013.0,
        -0.0008463 + 0.0000002316 * 5.0 + 0.0000008201 * 1013.0,
        -0.0005850543,
    ];
    let got = [s.conic.a, s.conic.b, s.conic.c, s.conic.d, s.conic.e, s.conic.f];
    for (g, e) in got.iter().zip(expected) {
        assert!((g - e).abs() <= 1e-12, "{got:?}");
    }
    assert_eq!(s.kind, ConicKind::Hyperbola);
}

#[test]
fn circle_grid_hits_unity_on_radius_two() {
    let terms = parse_terms(&["x^2", "y^2"], &["x", "y"]).unwrap();
    let model = ImplicitModel::new(terms, vec![0.25, 0.25]).unwrap();
    let x = Axis::linspace("x", -3.0, 3.0, 7).unwrap();
    let y = Axis::linspace("y", -3.0, 3.0, 7).unwrap();
    let grid = grid_evaluate(&model, x, y, &BTreeMap::new()).unwrap();
    assert_eq!(grid.values.len(), 49);
    for (ix, &xv) in grid.x.values.iter().enumerate() {
        for (iy, &yv) in grid.y.values.iter().enumerate() {
            if xv * xv + yv * yv == 4.0 {
                assert_eq!(grid.at(ix, iy), 1.0);
            }
        }
    }
    assert_eq!(grid.at(1, 3), 1.0);
}
