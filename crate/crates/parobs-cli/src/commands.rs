//! Subcommand implementations: resolve a config, run the library operation,
//! emit CSV artifacts plus a `records.jsonl` stream into the output
//! directory. Every file goes through an atomic write and nothing is
//! written outside the entry's directory; with a fixed config and seed the
//! whole tree is byte-identical across runs.

use std::path::Path;

use parobs::core_grid::{write_field_json, write_field_text};
use parobs::error::{Error, Result};
use parobs::modulus::{cylinder_modulus, dini_integral, strip_modulus, strip_modulus_at, DiniDepth};
use parobs::obstacle_solver::{extract_free_boundary, growth_diagnostic, solve, ProblemSpec};
use parobs::report::{calibration_doc, cell, run_battery, vertex_class_name, write_atomic, CsvDoc, Records};
use parobs::singular::{frequency_scan, ForcingData, FrequencyParams, PsingProjector};
use parobs::weiss::{classify, weiss_w, WeissParams};
use parobs::whitney::{
    decompose_with, extend, verify_c1, BoundingBox, DecomposeParams, JetData, JetPoint, Modulus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{
    self, echo_quadrature, join_floats, BareFile, ClassifyFile, ModulusFile, SingularFile,
    SolveFile, WeissFile, WhitneyFile, DEFAULT_SEED,
};

/// Where an entry reads relative paths from and writes its artifacts to.
pub struct Ctx<'a> {
    pub out: &'a Path,
    pub base: &'a Path,
}

impl Ctx<'_> {
    fn prepare(&self) -> Result<()> {
        std::fs::create_dir_all(self.out)?;
        Ok(())
    }

    fn emit(&self, name: &str, doc: &CsvDoc) -> Result<()> {
        write_atomic(&self.out.join(name), &doc.render())
    }

    fn emit_records(&self, records: &Records) -> Result<()> {
        write_atomic(&self.out.join("records.jsonl"), &records.render())
    }
}

pub fn calibrate_cmd(cfg: BareFile, ctx: &Ctx) -> Result<()> {
    ctx.prepare()?;
    let mut doc = calibration_doc();
    doc.param("seed", cfg.seed.unwrap_or(DEFAULT_SEED));
    ctx.emit("calibration.csv", &doc)?;

    #[derive(Serialize)]
    struct CalibrateRecord {
        command: &'static str,
        #[serde(rename = "L0")]
        l0: f64,
        #[serde(rename = "L_reg")]
        l_reg: f64,
        #[serde(rename = "L_sing")]
        l_sing: f64,
        kappa: f64,
    }
    let th = parobs::weiss::calibrate_thresholds();
    let mut rec = Records::new();
    rec.push(&CalibrateRecord {
        command: "calibrate",
        l0: th.zero,
        l_reg: th.regular,
        l_sing: th.singular,
        kappa: th.kappa,
    })?;
    ctx.emit_records(&rec)
}

pub fn report_cmd(cfg: BareFile, ctx: &Ctx) -> Result<()> {
    ctx.prepare()?;
    let files = run_battery(ctx.out)?;

    #[derive(Serialize)]
    struct ReportRecord {
        command: &'static str,
        seed: u64,
        files: Vec<String>,
    }
    let mut rec = Records::new();
    rec.push(&ReportRecord {
        command: "report",
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        files,
    })?;
    ctx.emit_records(&rec)
}

pub fn solve_cmd(cfg: SolveFile, ctx: &Ctx) -> Result<()> {
    ctx.prepare()?;
    let spec = ProblemSpec::from_config(&cfg.problem, ctx.base)?;
    let u = solve(&spec)?;
    let gf = u.as_grid().expect("solver output is gridded");

    let format = cfg.output.format.as_deref().unwrap_or("json");
    let mut buf = Vec::new();
    let solution_name = match format {
        "json" => {
            write_field_json(gf, &mut buf)?;
            "solution.json"
        }
        "text" => {
            write_field_text(gf, &mut buf)?;
            "solution.txt"
        }
        other => return Err(Error::Config(format!("unknown solution format `{other}`"))),
    };
    let text = String::from_utf8(buf).expect("field encodings are utf-8");
    write_atomic(&ctx.out.join(solution_name), &text)?;

    let fb = extract_free_boundary(&u, cfg.output.u_tol)?;
    let g = &gf.grid;
    let dim = g.dim();
    let mut doc = CsvDoc::new("free-boundary", 1);
    doc.param("seed", cfg.seed.unwrap_or(DEFAULT_SEED));
    doc.param("dimension", dim);
    doc.param("h", g.h());
    doc.param("tau", g.tau());
    doc.param("T", g.t_depth());
    doc.param("u_tol", fb.u_tol);
    let cols: Vec<String> = (1..=dim)
        .map(|a| format!("x{a}"))
        .chain(["t".to_string()])
        .collect();
    doc.columns(&cols.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    for p in &fb.points {
        let mut row: Vec<String> = p.x.iter().map(|v| cell(*v)).collect();
        row.push(cell(p.t));
        doc.row(row);
    }
    ctx.emit("free_boundary.csv", &doc)?;

    let mut rec = Records::new();
    if let Some(radii) = &cfg.output.growth_radii {
        let x0 = cfg
            .output
            .growth_center
            .clone()
            .unwrap_or_else(|| vec![0.0; dim]);
        let t0 = cfg.output.growth_t0.unwrap_or(0.0);
        let curve = growth_diagnostic(&u, &x0, t0, radii)?;
        let mut gdoc = CsvDoc::new("growth", 1);
        gdoc.param("seed", cfg.seed.unwrap_or(DEFAULT_SEED));
        gdoc.param("center", join_floats(&x0));
        gdoc.param("t0", t0);
        gdoc.param("spread", curve.spread);
        gdoc.columns(&["r", "sup_u", "ratio"]);
        for row in &curve.rows {
            gdoc.row(vec![cell(row.r), cell(row.sup_u), cell(row.ratio)]);
        }
        ctx.emit("growth.csv", &gdoc)?;
    }

    #[derive(Serialize)]
    struct SolveRecord {
        command: &'static str,
        time_levels: usize,
        spatial_nodes: usize,
        u_min: f64,
        u_max: f64,
        free_boundary_points: usize,
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in gf.values() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    rec.push(&SolveRecord {
        command: "solve",
        time_levels: g.times().len(),
        spatial_nodes: g.spatial_count(),
        u_min: lo,
        u_max: hi,
        free_boundary_points: fb.points.len(),
    })?;
    ctx.emit_records(&rec)
}

pub fn weiss_cmd(cfg: WeissFile, ctx: &Ctx) -> Result<()> {
    ctx.prepare()?;
    let dim = cfg.dimension;
    let u = cfg.field.resolve(dim, ctx.base)?;
    let heat = match &cfg.heat {
        Some(spec) => Some(spec.resolve(dim, ctx.base)?),
        None => None,
    };
    let defaults = WeissParams::default();
    let params = WeissParams {
        quad: cfg.quadrature.build(),
        nodes_per_interval: cfg.nodes_per_interval.unwrap_or(defaults.nodes_per_interval),
        floor_fraction: cfg.floor_fraction.unwrap_or(defaults.floor_fraction),
        discretization_coefficient: cfg
            .discretization_coefficient
            .unwrap_or(defaults.discretization_coefficient),
    };
    let report = weiss_w(&u, heat.as_ref(), &cfg.radii, &params)?;

    let header = |doc: &mut CsvDoc| {
        doc.param("seed", cfg.seed.unwrap_or(DEFAULT_SEED));
        doc.param("dimension", dim);
        doc.param("field", cfg.field.describe());
        doc.param(
            "heat",
            cfg.heat
                .as_ref()
                .map(|h| h.describe())
                .unwrap_or_else(|| "derived".into()),
        );
        doc.param("radii", join_floats(&cfg.radii));
        doc.param("nodes_per_interval", params.nodes_per_interval);
        doc.param("floor_fraction", params.floor_fraction);
        doc.param(
            "discretization_coefficient",
            params.discretization_coefficient,
        );
        echo_quadrature(doc, &params.quad);
    };

    let mut doc = CsvDoc::new("weiss", 1);
    header(&mut doc);
    doc.columns(&["r", "energy", "correction", "w", "budget"]);
    for row in &report.rows {
        doc.row(vec![
            cell(row.r),
            cell(row.energy),
            cell(row.correction),
            cell(row.w),
            cell(row.budget),
        ]);
    }
    ctx.emit("weiss.csv", &doc)?;

    let mut inc = CsvDoc::new("weiss-increments", 1);
    header(&mut inc);
    inc.columns(&["r_from", "r_to", "delta_w", "dissipation", "budget"]);
    for row in &report.increments {
        inc.row(vec![
            cell(row.r_from),
            cell(row.r_to),
            cell(row.delta_w),
            cell(row.dissipation),
            cell(row.budget),
        ]);
    }
    ctx.emit("weiss_increments.csv", &inc)?;

    #[derive(Serialize)]
    struct WeissRecord {
        command: &'static str,
        rows: usize,
        monotone_within_budget: bool,
        min_increment_slack: f64,
        max_dissipation_mismatch: f64,
    }
    let mut slack = f64::INFINITY;
    let mut mismatch = 0.0f64;
    for row in &report.increments {
        slack = slack.min(row.delta_w + row.budget);
        mismatch = mismatch.max(((row.delta_w - row.dissipation).abs() - row.budget).max(0.0));
    }
    let mut rec = Records::new();
    rec.push(&WeissRecord {
        command: "weiss",
        rows: report.rows.len(),
        monotone_within_budget: slack >= 0.0,
        min_increment_slack: slack,
        max_dissipation_mismatch: mismatch,
    })?;
    ctx.emit_records(&rec)
}

pub fn classify_cmd(cfg: ClassifyFile, ctx: &Ctx) -> Result<()> {
    ctx.prepare()?;
    let dim = cfg.dimension;
    let u = cfg.field.resolve(dim, ctx.base)?;
    let f0 = cfg.f0.unwrap_or(1.0);
    let x0 = cfg.x0.clone().unwrap_or_else(|| vec![0.0; dim]);
    let t0 = cfg.t0.unwrap_or(0.0);
    let quad = cfg.quadrature.build();
    let res = classify(&u, f0, &x0, t0, &cfg.radii, &quad, cfg.gap_tol)?;

    let mut doc = CsvDoc::new("classify", 1);
    doc.param("seed", cfg.seed.unwrap_or(DEFAULT_SEED));
    doc.param("dimension", dim);
    doc.param("field", cfg.field.describe());
    doc.param("f0", cell(f0));
    doc.param("x0", join_floats(&x0));
    doc.param("t0", cell(t0));
    doc.param("radii", join_floats(&cfg.radii));
    doc.param("gap_tol", cell(res.gap_tol));
    echo_quadrature(&mut doc, &quad);
    doc.columns(&["r", "energy", "budget"]);
    for s in &res.samples {
        doc.row(vec![cell(s.r), cell(s.value), cell(s.budget)]);
    }
    ctx.emit("classify.csv", &doc)?;

    #[derive(Serialize)]
    struct ClassifyRecord {
        command: &'static str,
        label: &'static str,
        estimate: f64,
        gap: f64,
        gap_tol: f64,
        kappa_estimate: f64,
    }
    let mut rec = Records::new();
    rec.push(&ClassifyRecord {
        command: "classify",
        label: vertex_class_name(res.label),
        estimate: res.estimate,
        gap: res.gap,
        gap_tol: res.gap_tol,
        kappa_estimate: res.thresholds.kappa * res.estimate,
    })?;
    ctx.emit_records(&rec)
}

pub fn singular_cmd(cfg: SingularFile, ctx: &Ctx) -> Result<()> {
    ctx.prepare()?;
    let dim = cfg.dimension;
    let u = cfg.field.resolve(dim, ctx.base)?;
    let forcing_field = match &cfg.forcing {
        Some(spec) => Some(spec.resolve(dim, ctx.base)?),
        None => None,
    };
    let forcing = forcing_field.as_ref().map(|f| ForcingData {
        f,
        f0: cfg.f0.unwrap_or(1.0),
    });
    let defaults = FrequencyParams::default();
    let params = FrequencyParams {
        quad: cfg.quadrature.build(),
        nodes_per_interval: cfg.nodes_per_interval.unwrap_or(defaults.nodes_per_interval),
        floor_fraction: cfg.floor_fraction.unwrap_or(defaults.floor_fraction),
    };
    let report = frequency_scan(&u, forcing, &cfg.radii, &params)?;

    let header = |doc: &mut CsvDoc| {
        doc.param("seed", cfg.seed.unwrap_or(DEFAULT_SEED));
        doc.param("dimension", dim);
        doc.param("field", cfg.field.describe());
        doc.param(
            "forcing",
            cfg.forcing
                .as_ref()
                .map(|f| f.describe())
                .unwrap_or_else(|| "exact".into()),
        );
        doc.param("radii", join_floats(&cfg.radii));
        doc.param("nodes_per_interval", params.nodes_per_interval);
        doc.param("floor_fraction", params.floor_fraction);
        echo_quadrature(doc, &params.quad);
    };

    let mut doc = CsvDoc::new("frequency", 1);
    header(&mut doc);
    doc.columns(&["r", "n_bar", "dissipation", "minorant", "forcing_budget"]);
    for row in &report.rows {
        doc.row(vec![
            cell(row.r),
            cell(row.n_bar),
            cell(row.dissipation),
            cell(row.minorant),
            cell(row.forcing_budget),
        ]);
    }
    ctx.emit("frequency.csv", &doc)?;

    let mut inc = CsvDoc::new("frequency-increments", 1);
    header(&mut inc);
    inc.columns(&["r_from", "r_to", "delta_n_bar", "minorant", "forcing_budget"]);
    for row in &report.increments {
        inc.row(vec![
            cell(row.r_from),
            cell(row.r_to),
            cell(row.delta_n_bar),
            cell(row.minorant),
            cell(row.forcing_budget),
        ]);
    }
    ctx.emit("frequency_increments.csv", &inc)?;

    if !cfg.projection_radii.is_empty() {
        let quad = params.quad.clone();
        let mut proj = CsvDoc::new("projection", 1);
        proj.param("seed", cfg.seed.unwrap_or(DEFAULT_SEED));
        proj.param("dimension", dim);
        proj.param("field", cfg.field.describe());
        echo_quadrature(&mut proj, &quad);
        let mut cols = vec![
            "rho".to_string(),
            "n_value".to_string(),
            "iterations".to_string(),
            "kkt_residual".to_string(),
            "m".to_string(),
        ];
        for i in 1..=dim {
            for j in 1..=dim {
                cols.push(format!("q_{i}_{j}"));
            }
        }
        proj.columns(&cols.iter().map(|s| s.as_str()).collect::<Vec<_>>());
        for &rho in &cfg.projection_radii {
            let projector = PsingProjector::new(dim, rho)?;
            let res = projector.project_field(&u, &quad)?;
            let mut row = vec![
                cell(rho),
                cell(res.n_value),
                res.iterations.to_string(),
                cell(res.kkt_residual),
                cell(res.polynomial.m()),
            ];
            for i in 0..dim {
                for j in 0..dim {
                    row.push(cell(res.polynomial.q().get(i, j)));
                }
            }
            proj.row(row);
        }
        ctx.emit("projection.csv", &proj)?;
    }

    #[derive(Serialize)]
    struct SingularRecord {
        command: &'static str,
        rows: usize,
        nondecreasing_within_budget: bool,
        min_increment_slack: f64,
    }
    let mut slack = f64::INFINITY;
    for row in &report.increments {
        slack = slack.min(row.delta_n_bar - row.minorant + row.forcing_budget);
    }
    let mut rec = Records::new();
    rec.push(&SingularRecord {
        command: "singular",
        rows: report.rows.len(),
        nondecreasing_within_budget: slack >= 0.0,
        min_increment_slack: slack,
    })?;
    ctx.emit_records(&rec)
}

pub fn modulus_cmd(cfg: ModulusFile, ctx: &Ctx) -> Result<()> {
    ctx.prepare()?;
    let dim = cfg.dimension;
    let f = cfg.field.resolve(dim, ctx.base)?;
    let f0 = cfg.f0.unwrap_or_else(|| f.value(&vec![0.0; dim], 0.0));
    let p = cfg.p.unwrap_or(2.0);
    let geometry = cfg.geometry.as_deref().unwrap_or("both");
    let (do_strip, do_cyl) = match geometry {
        "strip" => (true, false),
        "cylinder" => (false, true),
        "both" => (true, true),
        other => {
            return Err(Error::Config(format!(
                "unknown geometry `{other}` (expected strip, cylinder, both)"
            )))
        }
    };
    let quad = cfg.quadrature.build();
    let ch = cfg.cylinder_h.unwrap_or(1.0 / 64.0);
    let ctau = cfg.cylinder_tau.unwrap_or(ch * ch);
    let mut radii = cfg.radii.clone();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut doc = CsvDoc::new("modulus", 1);
    doc.param("seed", cfg.seed.unwrap_or(DEFAULT_SEED));
    doc.param("dimension", dim);
    doc.param("field", cfg.field.describe());
    doc.param("f0", cell(f0));
    doc.param("p", cell(p));
    doc.param("geometry", geometry);
    doc.param("cylinder_h", cell(ch));
    doc.param("cylinder_tau", cell(ctau));
    echo_quadrature(&mut doc, &quad);
    doc.columns(&["r", "strip", "cylinder"]);
    for &r in &radii {
        let strip = if do_strip {
            cell(strip_modulus(&f, f0, p, r, &quad)?)
        } else {
            String::new()
        };
        let cyl = if do_cyl {
            cell(cylinder_modulus(&f, f0, p, r, ch, ctau)?)
        } else {
            String::new()
        };
        doc.row(vec![cell(r), strip, cyl]);
    }
    ctx.emit("modulus.csv", &doc)?;

    #[derive(Serialize)]
    struct ModulusRecord<'a> {
        command: &'static str,
        geometry: &'a str,
        p: f64,
        rows: usize,
    }
    let mut rec = Records::new();
    rec.push(&ModulusRecord {
        command: "modulus",
        geometry,
        p,
        rows: radii.len(),
    })?;

    if let Some(dini) = &cfg.dini {
        let r_max = dini
            .r_max
            .unwrap_or_else(|| radii.last().copied().unwrap_or(1.0));
        let depth = match dini.depth.as_deref().unwrap_or("single") {
            "single" => DiniDepth::Single,
            "double" => DiniDepth::Double,
            other => {
                return Err(Error::Config(format!(
                    "unknown dini depth `{other}` (expected single, double)"
                )))
            }
        };
        let res = dini_integral(|r| strip_modulus_at(&f, f0, p, r, &quad), r_max, depth)?;

        #[derive(Serialize)]
        struct DiniRecord {
            command: &'static str,
            r_max: f64,
            depth: &'static str,
            value: f64,
            tail: f64,
            alpha: f64,
            converged: bool,
        }
        rec.push(&DiniRecord {
            command: "modulus.dini",
            r_max,
            depth: match depth {
                DiniDepth::Single => "single",
                DiniDepth::Double => "double",
            },
            value: res.value,
            tail: res.tail,
            alpha: res.alpha,
            converged: res.converged,
        })?;
    }
    ctx.emit_records(&rec)
}

/// Parses jet rows `t x1..xn f g1..gn`; the dimension is inferred from the
/// row width, which must be consistent.
pub fn parse_jet(text: &str) -> Result<Vec<JetPoint>> {
    let mut points = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut values = Vec::new();
        for tok in trimmed.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| {
                Error::Config(format!("jet line {}: bad number `{tok}`", lineno + 1))
            })?);
        }
        let w = values.len();
        if w < 4 || w % 2 != 0 {
            return Err(Error::Config(format!(
                "jet line {}: expected `t x1..xn f g1..gn` (even width ≥ 4), got {w} values",
                lineno + 1
            )));
        }
        if *width.get_or_insert(w) != w {
            return Err(Error::Config(format!(
                "jet line {}: width {w} differs from earlier rows",
                lineno + 1
            )));
        }
        let n = (w - 2) / 2;
        points.push(JetPoint {
            t: values[0],
            x: values[1..1 + n].to_vec(),
            f: values[1 + n],
            g: values[2 + n..].to_vec(),
        });
    }
    if points.is_empty() {
        return Err(Error::Config("jet file contains no data rows".into()));
    }
    Ok(points)
}

/// Parses `--omega L,beta` into the power modulus `ω(d) = L·d^β`.
pub fn parse_omega(text: &str) -> Result<Modulus> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("omega must be `L,beta`, got `{text}`")));
    }
    let coefficient: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad omega coefficient `{}`", parts[0])))?;
    let exponent: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad omega exponent `{}`", parts[1])))?;
    Ok(Modulus::Power {
        coefficient,
        exponent,
    })
}

/// Integral hull of the jet points, padded by one unit on every side.
fn default_bounds(points: &[JetPoint]) -> Result<BoundingBox> {
    let dim = points[0].x.len();
    let mut x_lo = vec![f64::INFINITY; dim];
    let mut x_hi = vec![f64::NEG_INFINITY; dim];
    let (mut t_lo, mut t_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        for a in 0..dim {
            x_lo[a] = x_lo[a].min(p.x[a]);
            x_hi[a] = x_hi[a].max(p.x[a]);
        }
        t_lo = t_lo.min(p.t);
        t_hi = t_hi.max(p.t);
    }
    let lo: Vec<f64> = x_lo.iter().map(|v| v.floor() - 1.0).collect();
    let hi: Vec<f64> = x_hi.iter().map(|v| v.ceil() + 1.0).collect();
    BoundingBox::new(lo, hi, t_lo.floor() - 1.0, t_hi.ceil())
}

pub fn whitney_cmd(cfg: WhitneyFile, jet_path: &Path, omega: &str, ctx: &Ctx) -> Result<()> {
    ctx.prepare()?;
    let text = std::fs::read_to_string(jet_path)
        .map_err(|e| Error::Config(format!("{}: {e}", jet_path.display())))?;
    let points = parse_jet(&text)?;
    let dim = points[0].x.len();
    let omega = parse_omega(omega)?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let samples = cfg.samples.unwrap_or(2000);

    let bounds = match &cfg.bounds {
        Some(b) => BoundingBox::new(b.x_lo.clone(), b.x_hi.clone(), b.t_lo, b.t_hi)?,
        None => default_bounds(&points)?,
    };
    let defaults = DecomposeParams::default();
    let params = DecomposeParams {
        epsilon: cfg.epsilon.unwrap_or(defaults.epsilon),
        max_depth: cfg.max_depth.unwrap_or(defaults.max_depth),
        audit_samples: samples,
        seed,
    };
    let set: Vec<(Vec<f64>, f64)> = points.iter().map(|p| (p.x.clone(), p.t)).collect();
    let dec = decompose_with(set, bounds, params.clone())?;

    let point_count = points.len();
    let (x_lo, x_hi) = (join_floats(&dec.bounds.x_lo), join_floats(&dec.bounds.x_hi));
    let (t_lo, t_hi) = (dec.bounds.t_lo, dec.bounds.t_hi);
    let header = |doc: &mut CsvDoc| {
        doc.param("seed", seed);
        doc.param("dimension", dim);
        doc.param("points", point_count);
        doc.param("epsilon", cell(params.epsilon));
        doc.param("max_depth", params.max_depth);
        doc.param("samples", samples);
        doc.param("x_lo", &x_lo);
        doc.param("x_hi", &x_hi);
        doc.param("t_lo", cell(t_lo));
        doc.param("t_hi", cell(t_hi));
    };

    let mut cubes = CsvDoc::new("whitney", 1);
    header(&mut cubes);
    let mut cols: Vec<String> = vec!["level".into(), "diam".into()];
    for a in 1..=dim {
        cols.push(format!("corner_x{a}"));
    }
    cols.push("corner_t".into());
    cols.push("nearest".into());
    cubes.columns(&cols.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    for (cube, &near) in dec.cubes.iter().zip(&dec.nearest) {
        let (x, t) = cube.corner();
        let mut row = vec![cube.level.to_string(), cell(cube.diam())];
        row.extend(x.iter().map(|v| cell(*v)));
        row.push(cell(t));
        row.push(near.to_string());
        cubes.row(row);
    }
    ctx.emit("whitney_cubes.csv", &cubes)?;

    let jet = JetData::new(points, omega)?;
    let ext = extend(jet, dec)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = &ext.dec.bounds;
    let queries: Vec<(Vec<f64>, f64)> = (0..samples)
        .map(|_| {
            let x = (0..dim)
                .map(|a| rng.random_range(b.x_lo[a]..b.x_hi[a]))
                .collect();
            let t = rng.random_range(b.t_lo..b.t_hi);
            (x, t)
        })
        .collect();
    let outcomes = ext.sample_many(&queries);

    let mut sampled = CsvDoc::new("whitney-extension", 1);
    header(&mut sampled);
    let mut cols: Vec<String> = (1..=dim).map(|a| format!("x{a}")).collect();
    cols.push("t".into());
    cols.push("value".into());
    for a in 1..=dim {
        cols.push(format!("g{a}"));
    }
    cols.push("clamped".into());
    cols.push("fallback".into());
    sampled.columns(&cols.iter().map(|s| s.as_str()).collect::<Vec<_>>());
    for ((x, t), out) in queries.iter().zip(&outcomes) {
        let mut row: Vec<String> = x.iter().map(|v| cell(*v)).collect();
        row.push(cell(*t));
        row.push(cell(out.value));
        row.extend(out.gradient.iter().map(|v| cell(*v)));
        row.push(out.clamped.to_string());
        row.push(out.fallback.to_string());
        sampled.row(row);
    }
    ctx.emit("extension.csv", &sampled)?;

    let report = verify_c1(&ext, samples, seed)?;
    let audit = &ext.dec.audit;

    #[derive(Serialize)]
    struct WhitneyRecord {
        command: &'static str,
        points: usize,
        cubes: usize,
        overlap: usize,
        distance_ratio_min: f64,
        distance_ratio_max: f64,
        dilation_comparability: f64,
        anchor_constant: f64,
        coverage_margin: f64,
        depth_hit: bool,
        c1: f64,
        c2: f64,
        drift: f64,
        pass: bool,
    }
    let mut rec = Records::new();
    rec.push(&WhitneyRecord {
        command: "whitney",
        points: ext.jet.points.len(),
        cubes: ext.dec.cubes.len(),
        overlap: audit.overlap,
        distance_ratio_min: audit.distance_ratio_min,
        distance_ratio_max: audit.distance_ratio_max,
        dilation_comparability: audit.dilation_comparability,
        anchor_constant: audit.anchor_constant,
        coverage_margin: audit.coverage_margin,
        depth_hit: audit.depth_hit,
        c1: report.c1,
        c2: report.c2,
        drift: report.drift,
        pass: report.pass,
    })?;
    ctx.emit_records(&rec)
}

/// Loads, validates, and runs one configured entry of a batch command.
pub fn run_entry(command: &str, path: &Path, out: &Path) -> Result<()> {
    let base = path.parent().filter(|p| !p.as_os_str().is_empty());
    let base = base.unwrap_or_else(|| Path::new("."));
    let ctx = Ctx { out, base };
    match command {
        "solve" => {
            let cfg: SolveFile = config::load(path)?;
            config::check_command(&cfg.command, command)?;
            solve_cmd(cfg, &ctx)
        }
        "weiss" => {
            let cfg: WeissFile = config::load(path)?;
            config::check_command(&cfg.command, command)?;
            weiss_cmd(cfg, &ctx)
        }
        "classify" => {
            let cfg: ClassifyFile = config::load(path)?;
            config::check_command(&cfg.command, command)?;
            classify_cmd(cfg, &ctx)
        }
        "singular" => {
            let cfg: SingularFile = config::load(path)?;
            config::check_command(&cfg.command, command)?;
            singular_cmd(cfg, &ctx)
        }
        "modulus" => {
            let cfg: ModulusFile = config::load(path)?;
            config::check_command(&cfg.command, command)?;
            modulus_cmd(cfg, &ctx)
        }
        other => Err(Error::Config(format!("unknown batch command `{other}`"))),
    }
}
