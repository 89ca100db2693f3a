use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::field::{GriddedField, InterpMode, OutsideMode};
use super::grid::SpaceTimeGrid;
use crate::error::{Error, Result};

/// On-disk field formats.
///
/// Text: one self-describing comment, a header `n h tau t_depth grading`,
/// then one row `t x1 .. xn value` per node in canonical order (time level
/// ascending, then spatial row-major). The spatial box is recovered from the
/// row coordinates. `grading` is `none` or the geometric ratio.
///
/// JSON: the same data as a structured document with the node values in
/// canonical order; this is the form other tools should consume.
const TEXT_COMMENT: &str = "# parobs field: header `n h tau t_depth grading`, rows `t x1 .. xn value`";

fn mode_strings(outside: OutsideMode, interp: InterpMode) -> (&'static str, &'static str) {
    (
        match outside {
            OutsideMode::Zero => "zero",
            OutsideMode::Clamp => "clamp",
        },
        match interp {
            InterpMode::Linear => "linear",
            InterpMode::Quadratic => "quadratic",
        },
    )
}

fn parse_outside(s: &str) -> Result<OutsideMode> {
    match s {
        "zero" => Ok(OutsideMode::Zero),
        "clamp" => Ok(OutsideMode::Clamp),
        other => Err(Error::Config(format!("unknown outside mode `{other}`"))),
    }
}

fn parse_interp(s: &str) -> Result<InterpMode> {
    match s {
        "linear" => Ok(InterpMode::Linear),
        "quadratic" => Ok(InterpMode::Quadratic),
        other => Err(Error::Config(format!("unknown interpolation mode `{other}`"))),
    }
}

pub fn write_field_text(field: &GriddedField, out: &mut dyn Write) -> Result<()> {
    let g = &field.grid;
    writeln!(out, "{TEXT_COMMENT}")?;
    let grading = match g.grading() {
        None => "none".to_string(),
        Some(q) => format!("{q}"),
    };
    writeln!(out, "{} {} {} {} {}", g.dim(), g.h(), g.tau(), g.t_depth(), grading)?;
    let nx = g.spatial_count();
    for (k, &t) in g.times().iter().enumerate() {
        for s in 0..nx {
            let x = g.spatial_coords(s);
            write!(out, "{t}")?;
            for xi in &x {
                write!(out, " {xi}")?;
            }
            writeln!(out, " {}", field.node(k, s))?;
        }
    }
    Ok(())
}

pub fn read_field_text(
    input: &mut dyn Read,
    outside: OutsideMode,
    interp: InterpMode,
) -> Result<GriddedField> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines();

    let header = loop {
        match lines.next() {
            None => return Err(Error::Config("field file is empty".into())),
            Some(line) => {
                let line = line?;
                let trimmed = line.trim();
                if !trimmed.is_empty() && !trimmed.starts_with('#') {
                    break trimmed.to_string();
                }
            }
        }
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 {
        return Err(Error::Config(format!(
            "field header must be `n h tau t_depth grading`, got `{header}`"
        )));
    }
    let dim: usize = parts[0]
        .parse()
        .map_err(|_| Error::Config(format!("bad dimension `{}`", parts[0])))?;
    let parse_f = |s: &str, what: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Config(format!("bad {what} `{s}` in field header")))
    };
    let h = parse_f(parts[1], "h")?;
    let tau = parse_f(parts[2], "tau")?;
    let t_depth = parse_f(parts[3], "t_depth")?;
    let grading = match parts[4] {
        "none" => None,
        other => Some(parse_f(other, "grading")?),
    };

    // First pass: collect rows.
    let mut rows: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = trimmed
            .split_whitespace()
            .map(|s| parse_f(s, "row entry"))
            .collect::<Result<_>>()?;
        if nums.len() != dim + 2 {
            return Err(Error::Config(format!(
                "row `{trimmed}` must have {} entries (t, {} coordinates, value)",
                dim + 2,
                dim
            )));
        }
        rows.push((nums[0], nums[1..1 + dim].to_vec(), nums[1 + dim]));
    }
    if rows.is_empty() {
        return Err(Error::Config("field file has no data rows".into()));
    }

    // Recover the box from the coordinates, then demand canonical order.
    let mut spatial_box = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
    for (_, x, _) in &rows {
        for (a, &xi) in x.iter().enumerate() {
            spatial_box[a].0 = spatial_box[a].0.min(xi);
            spatial_box[a].1 = spatial_box[a].1.max(xi);
        }
    }
    let grid = SpaceTimeGrid::new(&spatial_box, h, t_depth, tau, grading)?;
    if rows.len() != grid.node_count() {
        return Err(Error::Config(format!(
            "field file has {} rows but the grid has {} nodes",
            rows.len(),
            grid.node_count()
        )));
    }
    let nx = grid.spatial_count();
    let mut values = Vec::with_capacity(rows.len());
    for (idx, (t, x, v)) in rows.into_iter().enumerate() {
        let (k, s) = (idx / nx, idx % nx);
        let want_t = grid.times()[k];
        if (t - want_t).abs() > 1e-9 * (1.0 + want_t.abs()) {
            return Err(Error::Config(format!(
                "row {idx}: time {t} does not match canonical node time {want_t}"
            )));
        }
        let want_x = grid.spatial_coords(s);
        for (a, (&got, &want)) in x.iter().zip(&want_x).enumerate() {
            if (got - want).abs() > 1e-9 * (1.0 + want.abs()) {
                return Err(Error::Config(format!(
                    "row {idx}: coordinate {a} is {got}, canonical order expects {want}"
                )));
            }
        }
        values.push(v);
    }
    Ok(GriddedField::new(grid, values, outside, interp))
}

/// Structured-document form of a gridded field.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDocument {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub h: f64,
    pub tau: f64,
    pub t_depth: f64,
    pub grading: Option<f64>,
    pub spatial_box: Vec<[f64; 2]>,
    pub outside: String,
    pub interp: String,
    /// Node values in canonical order (time level ascending, spatial row-major).
    pub values: Vec<f64>,
}

pub fn write_field_json(field: &GriddedField, out: &mut dyn Write) -> Result<()> {
    let g = &field.grid;
    let (outside, interp) = mode_strings(field.outside, field.interp);
    let doc = FieldDocument {
        format: "parobs-field".into(),
        version: 1,
        n: g.dim(),
        h: g.h(),
        tau: g.tau(),
        t_depth: g.t_depth(),
        grading: g.grading(),
        spatial_box: g.spatial_box().iter().map(|&(a, b)| [a, b]).collect(),
        outside: outside.into(),
        interp: interp.into(),
        values: field.values().to_vec(),
    };
    serde_json::to_writer_pretty(&mut *out, &doc)
        .map_err(|e| Error::Config(format!("cannot serialize field: {e}")))?;
    writeln!(out)?;
    Ok(())
}

pub fn read_field_json(input: &mut dyn Read) -> Result<GriddedField> {
    let doc: FieldDocument = serde_json::from_reader(input)
        .map_err(|e| Error::Config(format!("cannot parse field document: {e}")))?;
    if doc.format != "parobs-field" || doc.version != 1 {
        return Err(Error::Config(format!(
            "unsupported field document `{}` version {}",
            doc.format, doc.version
        )));
    }
    let spatial_box: Vec<(f64, f64)> = doc.spatial_box.iter().map(|&[a, b]| (a, b)).collect();
    let grid = SpaceTimeGrid::new(&spatial_box, doc.h, doc.t_depth, doc.tau, doc.grading)?;
    if doc.values.len() != grid.node_count() {
        return Err(Error::Config(format!(
            "field document has {} values but the grid has {} nodes",
            doc.values.len(),
            grid.node_count()
        )));
    }
    Ok(GriddedField::new(
        grid,
        doc.values,
        parse_outside(&doc.outside)?,
        parse_interp(&doc.interp)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_grid::field::ScalarField;

    fn sample_field() -> GriddedField {
        let grid = SpaceTimeGrid::uniform(&[(-1.0, 1.0), (0.0, 0.5)], 0.25, 0.5, 0.125).unwrap();
        ScalarField::closed(2, |x, t| x[0] * x[0] + 3.0 * x[1] - t)
            .sample(&grid, OutsideMode::Zero, InterpMode::Linear)
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let field = sample_field();
        let mut buf = Vec::new();
        write_field_text(&field, &mut buf).unwrap();
        let back = read_field_text(&mut buf.as_slice(), OutsideMode::Zero, InterpMode::Linear).unwrap();
        assert_eq!(back.grid, field.grid);
        assert_eq!(back.values(), field.values());
        // Writing again produces identical bytes.
        let mut buf2 = Vec::new();
        write_field_text(&back, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let field = sample_field();
        let mut buf = Vec::new();
        write_field_json(&field, &mut buf).unwrap();
        let back = read_field_json(&mut buf.as_slice()).unwrap();
        assert_eq!(back.grid, field.grid);
        assert_eq!(back.values(), field.values());
        assert_eq!(back.outside, OutsideMode::Zero);
    }

    #[test]
    fn reader_rejects_permuted_rows() {
        let field = sample_field();
        let mut buf = Vec::new();
        write_field_text(&field, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.swap(2, 3);
        let scrambled = lines.join("\n");
        let err = read_field_text(
            &mut scrambled.as_bytes(),
            OutsideMode::Zero,
            InterpMode::Linear,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn reader_rejects_wrong_node_count() {
        let field = sample_field();
        let mut buf = Vec::new();
        write_field_text(&field, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: Vec<&str> = text.lines().take(text.lines().count() - 1).collect();
        let err = read_field_text(
            &mut truncated.join("\n").as_bytes(),
            OutsideMode::Zero,
            InterpMode::Linear,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
