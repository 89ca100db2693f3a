//! Deterministic artifact emission: CSV documents with a schema line and
//! echoed parameters, JSON record streams, atomic file writes, and the
//! fixed regression battery behind the `report` command.
//!
//! Everything here is byte-deterministic by construction: floats render
//! through Rust's shortest-roundtrip `Display`, iteration orders are fixed,
//! and the only randomness (Whitney verification sampling) is seeded. Two
//! runs of the same battery must produce identical trees.

use std::fmt::Display;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::core_grid::{
    integrate_strip, moment_constants, MeasureKind, Poly, ScalarField, StripQuadrature,
};
use crate::error::{Error, Result};
use crate::modulus::{cylinder_modulus_at, strip_modulus_at};
use crate::singular::PsingProjector;
use crate::weiss::{calibrate_thresholds, classify, VertexClass};
use crate::whitney::{
    decompose_with, extend, verify_c1, BoundingBox, DecomposeParams, JetData, JetPoint, Modulus,
};

/// Shortest-roundtrip decimal rendering; the one float format every
/// artifact uses.
pub fn cell(x: f64) -> String {
    format!("{x}")
}

/// A CSV document with the fixed layout all commands emit:
///
/// ```text
/// # schema=parobs-<command>-v<version>
/// # key=value            (one line per echoed parameter)
/// col1,col2,...
/// <rows>
/// ```
#[derive(Debug, Clone)]
pub struct CsvDoc {
    schema: String,
    params: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvDoc {
    pub fn new(command: &str, version: u32) -> CsvDoc {
        CsvDoc {
            schema: format!("parobs-{command}-v{version}"),
            params: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Echoes one parameter into the header. Values must be single-line.
    pub fn param(&mut self, key: &str, value: impl Display) -> &mut CsvDoc {
        let v = value.to_string();
        assert!(!key.contains('\n') && !v.contains('\n'));
        self.params.push((key.to_string(), v));
        self
    }

    pub fn columns(&mut self, names: &[&str]) -> &mut CsvDoc {
        assert!(self.columns.is_empty(), "columns set twice");
        self.columns = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut CsvDoc {
        assert_eq!(cells.len(), self.columns.len(), "row width mismatch");
        for c in &cells {
            assert!(!c.contains(',') && !c.contains('\n'), "cell needs quoting: {c}");
        }
        self.rows.push(cells);
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# schema={}", self.schema);
        for (k, v) in &self.params {
            let _ = writeln!(out, "# {k}={v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// A JSON-lines record stream, one serialized record per line.
#[derive(Debug, Default)]
pub struct Records {
    lines: Vec<String>,
}

impl Records {
    pub fn new() -> Records {
        Records::default()
    }

    pub fn push<T: Serialize>(&mut self, record: &T) -> Result<()> {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::Config(format!("record serialization failed: {e}")))?;
        self.lines.push(line);
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(line);
            out.push('\n');
        }
        out
    }
}

/// Writes `contents` to `path` atomically: a temp file in the same
/// directory, then a rename. No partial artifact is ever visible.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let parent = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .ok_or_else(|| Error::Config(format!("output path {} has no parent", path.display())))?;
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Config(format!("output path {} has no file name", path.display())))?;
    let tmp = parent.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn vertex_class_name(label: VertexClass) -> &'static str {
    match label {
        VertexClass::Zero => "zero",
        VertexClass::Regular => "regular",
        VertexClass::Singular => "singular",
        VertexClass::Unresolved => "unresolved",
    }
}

/// The calibration record emitted by the `calibrate` command and the
/// battery: the three vertex-energy levels, the rescaling factor, and the
/// rescaled levels.
pub fn calibration_doc() -> CsvDoc {
    let th = calibrate_thresholds();
    let mut doc = CsvDoc::new("calibrate", 1);
    doc.columns(&["key", "value"]);
    doc.row(vec!["L0".into(), cell(th.zero)]);
    doc.row(vec!["L_reg".into(), cell(th.regular)]);
    doc.row(vec!["L_sing".into(), cell(th.singular)]);
    doc.row(vec!["kappa".into(), cell(th.kappa)]);
    doc.row(vec!["ratio".into(), cell(th.singular / th.regular)]);
    doc.row(vec!["kappa_L_reg".into(), cell(th.kappa * th.regular)]);
    doc.row(vec!["kappa_L_sing".into(), cell(th.kappa * th.singular)]);
    doc
}

fn battery_moments() -> Result<CsvDoc> {
    let mc = moment_constants();
    let quad = StripQuadrature::with_h(1.0 / 16.0);
    let mut doc = CsvDoc::new("moments", 1);
    doc.param("h", cell(quad.h));
    doc.param("r_trunc_factor", cell(quad.r_trunc_factor));
    doc.columns(&["name", "closed_form", "quadrature", "abs_error", "budget"]);

    // Normalization ∫_{S_1} (-t) dγ, shared by all four constants.
    let norm = integrate_strip(|_, t| -t, 1, 1.0, MeasureKind::Gamma, &quad)?;
    let mut push = |name: &str,
                    exact: f64,
                    dim: usize,
                    f: &(dyn Fn(&[f64], f64) -> f64 + Sync)|
     -> Result<()> {
        let raw = integrate_strip(f, dim, 1.0, MeasureKind::GammaBar, &quad)?;
        let v = raw.value / norm.value;
        let budget = (raw.budget + raw.value.abs() * norm.budget / norm.value.abs())
            / norm.value.abs();
        doc.row(vec![
            name.into(),
            cell(exact),
            cell(v),
            cell((v - exact).abs()),
            cell(budget),
        ]);
        Ok(())
    };
    push("a", mc.a, 1, &|x, _| x[0].powi(4))?;
    push("b", mc.b, 2, &|x, _| x[0] * x[0] * x[1] * x[1])?;
    push("c", mc.c, 1, &|x, t| t * x[0] * x[0])?;
    push("d", mc.d, 1, &|_, t| t * t)?;
    doc.row(vec![
        "identity".into(),
        cell(mc.identity_residual()),
        String::new(),
        String::new(),
        String::new(),
    ]);
    Ok(doc)
}

fn battery_classify() -> Result<CsvDoc> {
    let quad = StripQuadrature::with_h(1.0 / 32.0);
    let radii = [0.25, 0.375, 0.5];
    let mut doc = CsvDoc::new("classify", 1);
    doc.param("h", cell(quad.h));
    doc.param("radii", "0.25 0.375 0.5");
    doc.columns(&["fixture", "label", "estimate", "gap"]);
    let fixtures: [(&str, ScalarField); 3] = [
        ("zero", ScalarField::constant(1, 0.0)),
        (
            "regular_half_space",
            ScalarField::closed(1, |x, _| 0.5 * x[0].max(0.0) * x[0].max(0.0)),
        ),
        (
            "singular_time_profile",
            ScalarField::closed(1, |_, t| -t),
        ),
    ];
    for (name, u) in fixtures {
        let res = classify(&u, 1.0, &[0.0], 0.0, &radii, &quad, None)?;
        doc.row(vec![
            name.into(),
            vertex_class_name(res.label).into(),
            cell(res.estimate),
            cell(res.gap),
        ]);
    }
    Ok(doc)
}

fn battery_projection() -> Result<CsvDoc> {
    let projector = PsingProjector::new(1, 1.0)?;
    let mut doc = CsvDoc::new("projection", 1);
    doc.param("dimension", 1);
    doc.param("rho", cell(projector.rho()));
    doc.columns(&["case", "n_value", "iterations", "kkt_residual", "q11", "m"]);
    let cases: [(&str, Poly); 3] = [
        (
            "member_half_x_sq",
            Poly::from_terms(1, vec![(0.5, vec![2], 0)]),
        ),
        (
            "overscaled_x_sq",
            Poly::from_terms(1, vec![(1.0, vec![2], 0)]),
        ),
        (
            "slow_time_slope",
            Poly::from_terms(1, vec![(-0.5, vec![0], 1)]),
        ),
    ];
    for (name, p) in cases {
        let res = projector.project_poly(&p)?;
        doc.row(vec![
            name.into(),
            cell(res.n_value),
            res.iterations.to_string(),
            cell(res.kkt_residual),
            cell(res.polynomial.q().get(0, 0)),
            cell(res.polynomial.m()),
        ]);
    }
    Ok(doc)
}

fn battery_modulus() -> Result<CsvDoc> {
    // f = 1 + x₁: σ₂(r) = r exactly, σ̃₂(r) = r/√3 exactly.
    let f = ScalarField::closed(1, |x, _| 1.0 + x[0]);
    let quad = StripQuadrature::with_h(1.0 / 32.0);
    let (h, tau) = (1.0 / 64.0, 1.0 / 4096.0);
    let mut doc = CsvDoc::new("modulus", 1);
    doc.param("p", 2);
    doc.param("strip_h", cell(quad.h));
    doc.param("cylinder_h", cell(h));
    doc.param("cylinder_tau", cell(tau));
    doc.columns(&["r", "strip", "strip_exact", "cylinder", "cylinder_exact"]);
    for r in [0.25, 0.5, 1.0] {
        let strip = strip_modulus_at(&f, 1.0, 2.0, r, &quad)?;
        let cyl = cylinder_modulus_at(&f, 1.0, 2.0, r, h, tau)?;
        doc.row(vec![
            cell(r),
            cell(strip),
            cell(r),
            cell(cyl),
            cell(r / 3f64.sqrt()),
        ]);
    }
    Ok(doc)
}

fn battery_whitney() -> Result<(CsvDoc, CsvDoc)> {
    let bounds = BoundingBox::new(vec![-1.0], vec![1.0], -1.0, 0.0)?;
    let params = DecomposeParams {
        max_depth: 6,
        ..DecomposeParams::default()
    };
    let dec = decompose_with(vec![(vec![0.0], 0.0)], bounds, params)?;

    let mut cubes = CsvDoc::new("whitney", 1);
    cubes.param("epsilon", cell(dec.epsilon));
    cubes.param("max_depth", dec.max_depth);
    cubes.columns(&["level", "diam", "corner_x1", "corner_t", "nearest"]);
    for (cube, &near) in dec.cubes.iter().zip(&dec.nearest) {
        let (x, t) = cube.corner();
        cubes.row(vec![
            cube.level.to_string(),
            cell(cube.diam()),
            cell(x[0]),
            cell(t),
            near.to_string(),
        ]);
    }

    // Single-point jet: the extension is the tangent plane, so the fitted
    // constants sit at the noise floor and the verdict is frozen.
    let jet = JetData::new(
        vec![JetPoint {
            x: vec![0.0],
            t: 0.0,
            f: 0.25,
            g: vec![0.5],
        }],
        Modulus::Power {
            coefficient: 1.0,
            exponent: 1.0,
        },
    )?;
    let ext = extend(jet, dec)?;
    let report = verify_c1(&ext, 400, 0x5EED)?;
    let audit = &ext.dec.audit;
    let mut summary = CsvDoc::new("whitney-summary", 1);
    summary.param("samples", report.samples);
    summary.param("seed", "0x5EED");
    summary.columns(&["key", "value"]);
    summary.row(vec!["cube_count".into(), ext.dec.cubes.len().to_string()]);
    summary.row(vec!["overlap".into(), audit.overlap.to_string()]);
    summary.row(vec![
        "distance_ratio_max".into(),
        cell(audit.distance_ratio_max),
    ]);
    summary.row(vec![
        "distance_ratio_min".into(),
        cell(audit.distance_ratio_min),
    ]);
    summary.row(vec![
        "dilation_comparability".into(),
        cell(audit.dilation_comparability),
    ]);
    summary.row(vec!["anchor_constant".into(), cell(audit.anchor_constant)]);
    summary.row(vec!["c1".into(), cell(report.c1)]);
    summary.row(vec!["c2".into(), cell(report.c2)]);
    summary.row(vec!["drift".into(), cell(report.drift)]);
    summary.row(vec!["pass".into(), report.pass.to_string()]);
    Ok((cubes, summary))
}

/// Runs the fixed regression battery into `out_dir` and returns the file
/// names written, sorted. The battery exercises every module through small
/// frozen fixtures; its output tree is byte-identical across runs.
pub fn run_battery(out_dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(out_dir)?;
    let (whitney_cubes, whitney_summary) = battery_whitney()?;
    let docs: [(&str, CsvDoc); 6] = [
        ("calibration.csv", calibration_doc()),
        ("moments.csv", battery_moments()?),
        ("classify.csv", battery_classify()?),
        ("projection.csv", battery_projection()?),
        ("modulus.csv", battery_modulus()?),
        ("whitney_cubes.csv", whitney_cubes),
    ];
    let mut names = Vec::new();
    for (name, doc) in docs {
        write_atomic(&out_dir.join(name), &doc.render())?;
        names.push(name.to_string());
    }
    write_atomic(&out_dir.join("whitney.csv"), &whitney_summary.render())?;
    names.push("whitney.csv".to_string());
    names.sort();
    Ok(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_has_schema_then_params_then_columns() {
        let mut doc = CsvDoc::new("demo", 3);
        doc.param("h", cell(0.03125));
        doc.columns(&["r", "value"]);
        doc.row(vec![cell(0.5), cell(-0.25)]);
        assert_eq!(
            doc.render(),
            "# schema=parobs-demo-v3\n# h=0.03125\nr,value\n0.5,-0.25\n"
        );
    }

    #[test]
    fn atomic_write_replaces_the_file_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "first\n").unwrap();
        write_atomic(&path, "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
        let names: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(names, vec!["out.csv"]);
    }

    #[test]
    fn calibration_doc_records_the_frozen_levels() {
        let text = calibration_doc().render();
        assert!(text.starts_with("# schema=parobs-calibrate-v1\n"));
        assert!(text.contains("L0,0\n"));
        assert!(text.contains("L_reg,0.25\n"));
        assert!(text.contains("L_sing,0.5\n"));
        assert!(text.contains("kappa,30\n"));
        assert!(text.contains("kappa_L_reg,7.5\n"));
        assert!(text.contains("kappa_L_sing,15\n"));
    }

    #[test]
    fn record_stream_is_one_json_object_per_line() {
        #[derive(Serialize)]
        struct R {
            label: &'static str,
            value: f64,
        }
        let mut rec = Records::new();
        rec.push(&R { label: "a", value: 0.5 }).unwrap();
        rec.push(&R { label: "b", value: -1.0 }).unwrap();
        assert_eq!(
            rec.render(),
            "{\"label\":\"a\",\"value\":0.5}\n{\"label\":\"b\",\"value\":-1.0}\n"
        );
    }

    #[test]
    fn battery_runs_are_byte_identical() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let names1 = run_battery(d1.path()).unwrap();
        let names2 = run_battery(d2.path()).unwrap();
        assert_eq!(names1, names2);
        assert!(!names1.is_empty());
        for name in &names1 {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "battery artifact {name} differs between runs");
        }
        // The classification battery must land every fixture on its level.
        let text = std::fs::read_to_string(d1.path().join("classify.csv")).unwrap();
        assert!(text.contains("zero,zero,"));
        assert!(text.contains("regular_half_space,regular,"));
        assert!(text.contains("singular_time_profile,singular,"));
        // The member polynomial projects to itself with zero residual.
        let text = std::fs::read_to_string(d1.path().join("projection.csv")).unwrap();
        let member = text
            .lines()
            .find(|l| l.starts_with("member_half_x_sq,"))
            .unwrap();
        let n: f64 = member.split(',').nth(1).unwrap().parse().unwrap();
        assert!(n < 1e-10, "member residual {n}");
    }
}
