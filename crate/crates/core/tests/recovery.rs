use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use storm_core::implicit::{evaluate_model, fit_unity, quadratic_in, select_root, ImplicitModel};
use storm_core::presets::preset;
use storm_core::terms::{evaluate, parse_terms, TermDescriptor};
use storm_core::{DesignMatrix32, ImplicitModel32};

type Record = BTreeMap<String, f64>;

fn rel_dist(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    num / b.iter().map(|y| y * y).sum::<f64>().sqrt()
}

fn check_recovery(terms: &[TermDescriptor], truth: &[f64], records: &[Record], target: &str) {
    let design = evaluate::<f64, _>(terms, records).unwrap();
    let model = fit_unity(&design).unwrap();
    assert!(rel_dist(&model.coefficients, truth) <= 1e-6, "{:?} vs {truth:?}", model.coefficients);
    assert!(model.r_squared >= 1.0 - 1e-10, "R² = {}", model.r_squared);
    for rec in records {
        let q = quadratic_in(&model, target, rec).unwrap();
        let truth_value = rec[target];
        let hit = [q.lower, q.upper]
            .into_iter()
            .flatten()
            .any(|r| (r - truth_value).abs() <= 1e-6 * truth_value.abs().max(1.0));
        assert!(hit, "{target} = {truth_value}, roots {:?} {:?}", q.lower, q.upper);
    }
}

fn rec(pairs: &[(&str, f64)]) -> Record {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn circle_recovery() {
    let (h, k, r) = (3.0, -2.0, 1.5);
    let s = r * r - h * h - k * k;
    let terms = parse_terms(&["x", "y", "x^2", "y^2", "xy"], &["x", "y"]).unwrap();
    let truth = [-2.0 * h / s, -2.0 * k / s, 1.0 / s, 1.0 / s, 0.0];
    let records: Vec<Record> = (0..500)
        .map(|i| {
            let th = i as f64 * 0.0127 + 0.3;
            rec(&[("x", h + r * th.cos()), ("y", k + r * th.sin())])
        })
        .collect();
    check_recovery(&terms, &truth, &records, "x");
}

#[test]
fn rotated_ellipse_recovery() {
    let (a, b, phi, h, k) = (4.0, 1.5, 0.6f64, 6.0, 5.0);
    let (s, c) = phi.sin_cos();
    // Expand ((x'c + y's)/a)² + ((−x's + y'c)/b)² = 1 with x' = x − h, y' = y − k.
    let qa = c * c / (a * a) + s * s / (b * b);
    let qb = 2.0 * c * s * (1.0 / (a * a) - 1.0 / (b * b));
    let qc = s * s / (a * a) + c * c / (b * b);
    let qd = -2.0 * qa * h - qb * k;
    let qe = -2.0 * qc * k - qb * h;
    let qf = qa * h * h + qb * h * k + qc * k * k - 1.0;
    let truth: Vec<f64> = [qd, qe, qa, qc, qb].iter().map(|v| -v / qf).collect();
    let terms = parse_terms(&["x", "y", "x^2", "y^2", "xy"], &["x", "y"]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let records: Vec<Record> = (0..500)
        .map(|_| {
            let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let (u, v) = (a * th.cos(), b * th.sin());
            rec(&[("x", h + u * c - v * s), ("y", k + u * s + v * c)])
        })
        .collect();
    check_recovery(&terms, &truth, &records, "x");
    check_recovery(&terms, &truth, &records, "y");
}

#[test]
fn six_variable_recovery() {
    let terms = preset("factor1-wind").unwrap();
    // W, P, W², P², Ww, Wp, Wa, Wt, WP, Pp
    let truth = [
        2.0e-3, 1.0e-4, -1.2e-5, 6.0e-8, 3.0e-5, 1.5e-6, -2.0e-6, 4.0e-5, -2.0e-6, 9.0e-8,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut records = Vec::new();
    while records.len() < 500 {
        let mut r = rec(&[
            ("W", rng.random_range(25.0..140.0)),
            ("P", rng.random_range(920.0..1010.0)),
            ("w", rng.random_range(2.0..20.0)),
            ("p", rng.random_range(1000.0..1025.0)),
            ("a", rng.random_range(20.0..30.0)),
        ]);
        r.insert("t".into(), 0.0);
        let rest = evaluate_model(&ImplicitModel::new(terms.clone(), truth.to_vec()).unwrap(), &r).unwrap();
        let t = (1.0 - rest) / (truth[7] * r["W"]);
        r.insert("t".into(), t);
        records.push(r);
    }
    check_recovery(&terms, &truth, &records, "W");

    let model = fit_unity(&evaluate::<f64, _>(&terms, &records).unwrap()).unwrap();
    for r in &records {
        let q = quadratic_in(&model, "W", r).unwrap();
        let (w_hat, _) = select_root(&q, r["W"]).unwrap();
        assert!((w_hat - r["W"]).abs() <= 1e-6 * r["W"]);
    }
}

#[test]
fn printed_buoy_model_hand_value() {
    let terms = preset("buoy-6term").unwrap();
    let model = ImplicitModel::new(
        terms,
        vec![0.001993, -0.00007051, 0.0003194, -0.000000988, 0.0000004513, 0.000007737],
    )
    .unwrap();
    let u: f64 = evaluate_model(&model, &[("p", 1013.0), ("a", 25.0), ("t", 28.0)]).unwrap();
    // 2.018909 − 0.00176275 + 0.0089432 − 1.013854972 + 0.0002820625 + 0.006065808
    assert!((u - 1.0185823485).abs() < 1e-12, "{u}");
}

#[test]
fn single_precision_fit() {
    let terms = parse_terms(&["x^2", "y^2"], &["x", "y"]).unwrap();
    let records: Vec<BTreeMap<String, f32>> = (0..50)
        .map(|i| {
            let th = i as f32 * 0.13;
            [("x".to_string(), 2.0 * th.cos()), ("y".to_string(), th.sin())].into()
        })
        .collect();
    let design: DesignMatrix32 = evaluate(&terms, &records).unwrap();
    let model: ImplicitModel32 = fit_unity(&design).unwrap();
    assert!((model.coefficients[0] - 0.25).abs() < 1e-4);
    assert!((model.coefficients[1] - 1.0).abs() < 1e-4);
    assert!(model.r_squared > 0.9999);
}
