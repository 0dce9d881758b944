use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;
use storm_core::bins::{bin_means as compute_bins, variability_report, write_bins_csv};
use storm_core::classify::{summarize, CategoryScale};
use storm_core::conics::{grid_evaluate, slice_model, Axis};
use storm_core::factor::{constancy_index, extract_factors, membership_table, DEFAULT_DISPLAY_THRESHOLD};
use storm_core::implicit::{fit_unity, quadratic_in, select_root, select_root_in_band, BinnedReference};
use storm_core::ingest::{
    write_buoys_csv, write_storms_csv, JoinedRecord, RowIssue, BUOY_VARIABLES, STORM_WIND,
    TIMESTAMP_FORMAT,
};
use storm_core::lagscan::{correlation_curve_csv, scan, ScanConfig};
use storm_core::reference::{self, ReferenceCheck};
use storm_core::terms::{evaluate, Variables};
use storm_core::{Error, ImplicitModel64};

use crate::load::{self, Dataset};
use crate::run::{CmdResult, Run, Stage};
use crate::{
    BinMeansArgs, ConicArgs, FitArgs, GridArgs, IngestArgs, LagScanArgs, PcaArgs, PredictArgs, SliceArgs, StatsArgs,
};

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn opt_path(p: &Option<std::path::PathBuf>) -> Option<String> {
    p.as_deref().map(path_str)
}

fn invalid(stage: &'static str, msg: String) -> crate::run::Failure {
    crate::run::Failure { stage, error: Error::InvalidArgument(msg) }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn issue_rows(out: &mut String, source: &str, kind: &str, issues: &[RowIssue]) {
    for i in issues {
        let _ = writeln!(out, "{source},{},{kind},{}", i.line, csv_field(&i.message));
    }
}

pub fn ingest(a: IngestArgs) -> CmdResult {
    if a.storms.is_none() && a.buoys.is_none() {
        return Err(invalid("configure", "ingest needs --storms, --buoys or both".into()));
    }
    let config = json!({ "storms": opt_path(&a.storms), "buoys": opt_path(&a.buoys), "station": a.station });
    let mut run = Run::start("ingest", &a.out.output_dir, config)?;
    let mut issues = String::from("source,line,kind,message\n");
    let mut units = BTreeMap::new();
    if let Some(p) = &a.storms {
        let s = load::storms(p, &mut run)?;
        let mut buf = Vec::new();
        write_storms_csv(&mut buf, &s.readings).stage("write storms")?;
        run.write("storms.csv", buf)?;
        issue_rows(&mut issues, "storms", "error", &s.errors);
        issue_rows(&mut issues, "storms", "lint", &s.lints);
        units.extend(s.units);
    }
    if let Some(p) = &a.buoys {
        let b = load::buoys(p, a.station.as_deref(), &mut run)?;
        let mut buf = Vec::new();
        write_buoys_csv(&mut buf, &b.readings).stage("write buoys")?;
        run.write("buoys.csv", buf)?;
        issue_rows(&mut issues, "buoys", "error", &b.errors);
        units.extend(b.units);
    }
    run.write("issues.csv", issues)?;
    run.write_json("units.json", &units)?;
    run.finish()
}

fn load_scale(path: &Path) -> CmdResult<CategoryScale> {
    let text = fs::read_to_string(path).stage("read scale")?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        CategoryScale::from_json(&text).stage("read scale")
    } else {
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        CategoryScale::from_csv(&name, text.as_bytes()).stage("read scale")
    }
}

pub fn stats(a: StatsArgs) -> CmdResult {
    let config = json!({ "storms": path_str(&a.storms), "scale": opt_path(&a.scale) });
    let mut run = Run::start("stats", &a.out.output_dir, config)?;
    let scale = match &a.scale {
        Some(p) => {
            run.input("scale", p, crate::run::sha256_file(p).stage("read scale")?);
            load_scale(p)?
        }
        None => CategoryScale::conventional(),
    };
    let storms = load::storms(&a.storms, &mut run)?;
    let summary = summarize(&storms.readings, &scale).stage("summarize")?;
    run.count("storms", summary.n_storms);

    let mut csv = String::from("label,storms,readings\n");
    for c in &summary.categories {
        let _ = writeln!(csv, "{},{},{}", csv_field(&c.label), c.storms, c.readings);
    }
    run.write("categories.csv", csv)?;
    run.write_json("storm_summary.json", &summary)?;

    run.check(ReferenceCheck::new("mean_wind_kt", summary.mean_wind, reference::MEAN_WIND_KT));
    run.check(ReferenceCheck::new("mode_wind_kt", summary.mode_wind, reference::MODE_WIND_KT));
    run.check(ReferenceCheck::new("storm_count", summary.n_storms as f64, reference::N_STORMS));
    if summary.categories.len() == reference::CATEGORY_STORMS.len() {
        for (c, &r) in summary.categories.iter().zip(&reference::CATEGORY_STORMS) {
            run.check(ReferenceCheck::new(format!("storms[{}]", c.label), c.storms as f64, r));
        }
    }
    run.finish()
}

fn data_config(d: &crate::Data) -> serde_json::Value {
    json!({
        "storms": path_str(&d.storms),
        "buoys": path_str(&d.buoys),
        "station": d.station,
        "dt": d.dt,
        "tolerance_min": d.tolerance_min,
    })
}

fn terms_config(t: &crate::TermsArg) -> serde_json::Value {
    json!({ "preset": t.preset, "terms": t.terms })
}

pub fn pca(a: PcaArgs) -> CmdResult {
    let config = json!({
        "data": data_config(&a.data),
        "terms": terms_config(&a.terms),
        "rotation": a.rotation.to_string(),
        "factors": a.factors,
    });
    let mut run = Run::start("pca", &a.out.output_dir, config)?;
    let terms = load::terms(&a.terms, None)?;
    let records = load::joined_data(&a.data, &mut run)?;
    let design = evaluate::<f64, JoinedRecord>(&terms, &records).stage("design matrix")?;
    let n_factors = a.factors.min(terms.len());
    let model = extract_factors(&design, n_factors, a.rotation).stage("factor extraction")?;
    run.count("terms", terms.len());
    run.count("retained_factors", model.retained);

    let header: String = (1..=n_factors).map(|j| format!(",F{j}")).collect();
    let mut loadings = format!("term{header}\n");
    for (i, name) in model.term_names.iter().enumerate() {
        loadings.push_str(name);
        for v in model.loadings.row(i) {
            let _ = write!(loadings, ",{v}");
        }
        loadings.push('\n');
    }
    run.write("loadings.csv", loadings)?;

    let mut summary = String::from("factor,ss_loading,proportion,cumulative,retained\n");
    for j in 0..n_factors {
        let _ = writeln!(
            summary,
            "F{},{},{},{},{}",
            j + 1,
            model.ss_loadings[j],
            model.proportion_variance[j],
            model.cumulative_variance[j],
            j < model.retained
        );
    }
    run.write("factor_summary.csv", summary)?;

    let mut membership = format!("term,factor,loading{header}\n");
    for row in membership_table(&model, DEFAULT_DISPLAY_THRESHOLD) {
        let _ = write!(membership, "{},F{},{}", row.term, row.factor + 1, row.loading);
        for c in &row.cells {
            let _ = write!(membership, ",{}", cell(*c));
        }
        membership.push('\n');
    }
    run.write("membership.csv", membership)?;

    for (j, &r) in reference::SS_LOADINGS.iter().enumerate().take(n_factors) {
        run.check(ReferenceCheck::new(format!("ss_loading[F{}]", j + 1), model.ss_loadings[j], r));
    }
    run.finish()
}

pub fn fit(a: FitArgs) -> CmdResult {
    let config = json!({ "data": data_config(&a.data), "terms": terms_config(&a.terms) });
    let mut run = Run::start("fit", &a.out.output_dir, config)?;
    let terms = load::terms(&a.terms, Some("factor1-wind"))?;
    let records = load::joined_data(&a.data, &mut run)?;
    let design = evaluate::<f64, JoinedRecord>(&terms, &records).stage("design matrix")?;
    let model = fit_unity(&design).stage("fit")?;
    run.count("terms", terms.len());
    run.count("r_squared", model.r_squared);
    let mut text = model.to_json().stage("write model")?;
    text.push('\n');
    run.write("model.json", text)?;
    run.finish()
}

pub fn predict(a: PredictArgs) -> CmdResult {
    let config = json!({
        "model": path_str(&a.model),
        "data": data_config(&a.data),
        "target": a.target,
        "band": [a.band_lo, a.band_hi],
        "pressure_bin": a.pressure_bin,
    });
    let mut run = Run::start("predict", &a.out.output_dir, config)?;
    let model = load::model(&a.model, &mut run)?;
    let records = load::joined_data(&a.data, &mut run)?;
    let reference = if a.target == STORM_WIND {
        let pairs = records.iter().filter_map(|r| Some((r.storm.pressure?, r.storm.wind)));
        Some(BinnedReference::from_pairs(pairs, a.pressure_bin).stage("configure")?)
    } else {
        None
    };

    let mut out = String::from(
        "timestamp,storm_id,name,lat,lon,observed,lower,upper,status,selected,selected_label,band_root,band_label\n",
    );
    let mut complex = 0;
    for r in &records {
        let q = quadratic_in(&model, &a.target, r).stage("invert model")?;
        let observed: Option<f64> = r.value(&a.target);
        let selected = observed.and_then(|o| select_root(&q, o).ok());
        if selected.is_none() {
            complex += 1;
        }
        let cond = reference.as_ref().zip(r.storm.pressure).and_then(|(b, p)| b.lookup(p));
        let band = select_root_in_band(&q, a.band_lo, a.band_hi, cond);
        let label = |s: Option<(f64, storm_core::implicit::RootLabel)>| {
            s.map(|(_, l)| format!("{l:?}").to_lowercase()).unwrap_or_default()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.storm.timestamp.format(TIMESTAMP_FORMAT),
            csv_field(&r.storm.storm_id),
            csv_field(&r.storm.storm_name),
            r.storm.lat,
            r.storm.lon,
            cell(observed),
            cell(q.lower),
            cell(q.upper),
            q.status.as_str(),
            cell(selected.map(|s| s.0)),
            label(selected),
            cell(band.map(|s| s.0)),
            label(band),
        );
    }
    run.count("predictions", records.len());
    run.drop_count("no_real_root", complex);
    run.write("predictions.csv", out)?;
    run.finish()
}

fn parse_dt_range(s: &str) -> CmdResult<Vec<i64>> {
    let bad = || invalid("configure", format!("--dt-range `{s}` is not `first..last`"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let lo: i64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: i64 = hi.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
    if lo < 0 || hi < lo {
        return Err(bad());
    }
    Ok((lo..=hi).collect())
}

pub fn lag_scan(a: LagScanArgs) -> CmdResult {
    let config = json!({
        "data": data_config(&a.data),
        "dt_range": a.dt_range,
        "terms": terms_config(&a.terms),
        "target": a.target,
    });
    let mut run = Run::start("lag-scan", &a.out.output_dir, config)?;
    let dts = parse_dt_range(&a.dt_range)?;
    let terms = load::terms(&a.terms, Some("factor1-wind"))?;
    let ds = load::dataset(&a.data.storms, &a.data.buoys, a.data.station.as_deref(), &mut run)?;
    let cfg = ScanConfig { target: a.target.clone(), tolerance: load::tolerance(a.data.tolerance_min)? };
    let result = scan::<f64>(&ds.storms, &ds.buoys, &terms, &dts, &cfg).stage("lag scan")?;
    run.count("lags", result.entries.len());
    run.count("best_lag", result.best_lag);
    run.count("best_correlation", result.best_correlation);

    let mut curve = Vec::new();
    correlation_curve_csv(&result, &mut curve).stage("write curve")?;
    run.write("lag_curve.csv", curve)?;
    run.write_json("lag_scan.json", &result)?;
    run.check(ReferenceCheck::new("peak_correlation", result.best_correlation, reference::PEAK_CORRELATION));
    run.check(ReferenceCheck::new("peak_lag_days", result.best_lag as f64, reference::PEAK_LAG_DAYS));
    run.finish()
}

pub fn bin_means(a: BinMeansArgs) -> CmdResult {
    let mut run = Run::start("bin-means", &a.out.output_dir, json!({ "data": data_config(&a.data) }))?;
    let ds = load::dataset(&a.data.storms, &a.data.buoys, a.data.station.as_deref(), &mut run)?;
    let records = load::joined(&ds, a.data.dt, a.data.tolerance_min, &mut run)?;
    let outcome = compute_bins(&records).stage("bin means")?;
    run.count("bins", outcome.bins.len());
    run.count("wind_lints", outcome.lints.len());
    let mut buf = Vec::new();
    write_bins_csv(&outcome.bins, &mut buf).stage("write bins")?;
    run.write("wind_bins.csv", buf)?;

    let binned = variability_report(&outcome.bins).stage("variability")?;
    let mut out = String::from("variable,constancy\n");
    for row in &binned {
        let _ = writeln!(out, "{},{}", row.variable, row.constancy);
    }
    run.write("variability.csv", out)?;

    let mut raw = String::from("variable,n,constancy\n");
    for var in BUOY_VARIABLES {
        let xs: Vec<f64> = ds.buoys.iter().filter_map(|b| b.get(var)).collect();
        let c = constancy_index(&xs).stage("constancy")?;
        let _ = writeln!(raw, "{var},{},{c}", xs.len());
        if let Some((_, r)) = reference::RAW_CONSTANCY.iter().find(|(n, _)| *n == var) {
            run.check(ReferenceCheck::new(format!("raw_constancy[{var}]"), c, *r));
        }
    }
    run.write("constancy.csv", raw)?;
    for row in &binned {
        if let Some((_, r)) = reference::BIN_CONSTANCY.iter().find(|(n, _)| *n == row.variable) {
            run.check(ReferenceCheck::new(format!("bin_constancy[{}]", row.variable), row.constancy, *r));
        }
    }
    run.finish()
}

fn slice_config(s: &SliceArgs) -> serde_json::Value {
    json!({
        "model": path_str(&s.model),
        "x": s.x,
        "y": s.y,
        "fix": s.fix,
        "storms": opt_path(&s.storms),
        "buoys": opt_path(&s.buoys),
        "station": s.station,
        "dt": s.dt,
        "tolerance_min": s.tolerance_min,
    })
}

struct Slice {
    model: ImplicitModel64,
    fixed: BTreeMap<String, f64>,
    records: Vec<JoinedRecord>,
}

/// Model plus held values: explicit `--fix` first, dataset means for the rest.
fn prepare_slice(s: &SliceArgs, run: &mut Run) -> CmdResult<Slice> {
    let model = load::model(&s.model, run)?;
    let mut fixed = BTreeMap::new();
    for f in &s.fix {
        let (name, value) = f
            .split_once('=')
            .ok_or_else(|| invalid("configure", format!("--fix `{f}` is not `name=value`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| invalid("configure", format!("--fix `{f}` has a non-numeric value")))?;
        fixed.insert(name.trim().to_string(), value);
    }
    let records = match (&s.storms, &s.buoys) {
        (Some(sp), Some(bp)) => {
            let ds: Dataset = load::dataset(sp, bp, s.station.as_deref(), run)?;
            load::joined(&ds, s.dt, s.tolerance_min, run)?
        }
        (None, None) => Vec::new(),
        _ => return Err(invalid("configure", "--storms and --buoys go together".into())),
    };
    for var in model.variables() {
        if var == s.x || var == s.y || fixed.contains_key(var) {
            continue;
        }
        if records.is_empty() {
            return Err(invalid("configure", format!("no value for `{var}`; pass --fix {var}=… or a dataset")));
        }
        let sum: f64 = records.iter().map(|r| r.get(var).unwrap_or(0.0)).sum();
        fixed.insert(var.to_string(), sum / records.len() as f64);
    }
    Ok(Slice { model, fixed, records })
}

pub fn conic(a: ConicArgs) -> CmdResult {
    let mut run = Run::start("conic", &a.out.output_dir, slice_config(&a.slice))?;
    let s = prepare_slice(&a.slice, &mut run)?;
    let slice = slice_model(&s.model, &a.slice.x, &a.slice.y, &s.fixed).stage("slice model")?;
    let c = &slice.conic;
    let doc = json!({
        "var_x": slice.var_x,
        "var_y": slice.var_y,
        "fixed": slice.fixed,
        "coefficients": { "a": c.a, "b": c.b, "c": c.c, "d": c.d, "e": c.e, "f": c.f },
        "discriminant": c.discriminant(),
        "determinant": c.determinant(),
        "kind": slice.kind.to_string(),
        "model_terms": s.model.term_names(),
    });
    run.write_json("conic.json", &doc)?;
    run.finish()
}

fn parse_range(flag: &str, spec: Option<&str>, data: &[f64]) -> CmdResult<(f64, f64, usize)> {
    match spec {
        Some(s) => {
            let parts: Vec<&str> = s.split(':').collect();
            let bad = || invalid("configure", format!("--{flag} `{s}` is not `lo:hi:steps`"));
            let [lo, hi, steps] = parts[..] else { return Err(bad()) };
            Ok((
                lo.trim().parse().map_err(|_| bad())?,
                hi.trim().parse().map_err(|_| bad())?,
                steps.trim().parse().map_err(|_| bad())?,
            ))
        }
        None if !data.is_empty() => {
            let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok((lo, hi, 101))
        }
        None => Err(invalid("configure", format!("--{flag} is required without a dataset"))),
    }
}

pub fn export_grid(a: GridArgs) -> CmdResult {
    let mut config = slice_config(&a.slice);
    config["x_range"] = json!(a.x_range);
    config["y_range"] = json!(a.y_range);
    let mut run = Run::start("export-grid", &a.out.output_dir, config)?;
    let s = prepare_slice(&a.slice, &mut run)?;
    let (vx, vy) = (a.slice.x.as_str(), a.slice.y.as_str());
    let xs: Vec<f64> = s.records.iter().filter_map(|r| r.get(vx)).collect();
    let ys: Vec<f64> = s.records.iter().filter_map(|r| r.get(vy)).collect();
    let (xlo, xhi, xn) = parse_range("x-range", a.x_range.as_deref(), &xs)?;
    let (ylo, yhi, yn) = parse_range("y-range", a.y_range.as_deref(), &ys)?;
    let x = Axis::linspace(vx, xlo, xhi, xn).stage("grid axes")?;
    let y = Axis::linspace(vy, ylo, yhi, yn).stage("grid axes")?;
    let grid = grid_evaluate(&s.model, x, y, &s.fixed).stage("grid evaluation")?;
    let slice = slice_model(&s.model, vx, vy, &s.fixed).stage("slice model")?;

    let mut out = String::from("x,y,u_hat\n");
    for (iy, yv) in grid.y.values.iter().enumerate() {
        for (ix, xv) in grid.x.values.iter().enumerate() {
            let _ = writeln!(out, "{xv},{yv},{}", grid.at(ix, iy));
        }
    }
    run.write("grid.csv", out)?;
    let model_id = crate::run::sha256_file(&a.slice.model).stage("read model")?;
    let sidecar = json!({
        "x": { "name": vx, "lo": xlo, "hi": xhi, "steps": xn },
        "y": { "name": vy, "lo": ylo, "hi": yhi, "steps": yn },
        "fixed": slice.fixed,
        "model_sha256": model_id,
        "model_terms": s.model.term_names(),
        "kind": slice.kind.to_string(),
        "level": 1.0,
    });
    run.write_json("grid.json", &sidecar)?;
    if !s.records.is_empty() {
        let mut scatter = format!("{vx},{vy}\n");
        for r in &s.records {
            let _ = writeln!(scatter, "{},{}", cell(r.get(vx)), cell(r.get(vy)));
        }
        run.write("scatter.csv", scatter)?;
    }
    run.count("grid_points", grid.values.len());
    run.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dt_range_forms() {
        assert_eq!(parse_dt_range("1..36").unwrap().len(), 36);
        assert_eq!(parse_dt_range("0..=2").unwrap(), vec![0, 1, 2]);
        assert!(parse_dt_range("5..1").is_err());
        assert!(parse_dt_range("3").is_err());
    }

    #[test]
    fn quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a, b"), "\"a, b\"");
        assert_eq!(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
    }

    #[test]
    fn explicit_range() {
        assert_eq!(parse_range("x-range", Some("-3:3:7"), &[]).unwrap(), (-3.0, 3.0, 7));
        assert!(parse_range("x-range", None, &[]).is_err());
        assert_eq!(parse_range("x-range", None, &[2.0, -1.0]).unwrap(), (-1.0, 2.0, 101));
    }
}
