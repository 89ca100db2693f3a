//! Implicit-Euler / projected-SOR solver for the parabolic obstacle problem
//! `Δu - ∂_t u = f` on `{u > 0}`, `u ≥ 0`, with Dirichlet data.
//!
//! Each time step solves the linear complementarity problem
//! `u ≥ 0`, `A u - b ≥ 0`, `u·(A u - b) = 0` with the M-matrix
//! `A = I/τ - Δ_h`, by projected SOR in red-black order. Red-black makes the
//! sweep deterministic and parallelizable without changing a single update:
//! nodes of one color only read the other color, so the two half-sweeps are
//! order-independent within themselves.

use std::path::Path;

use serde::Deserialize;

use crate::core_grid::{GriddedField, InterpMode, OutsideMode, ScalarField, SpaceTimeGrid};
use crate::error::{Error, Result};
use crate::exec;
use crate::expr::parse_field;
use crate::singular::SingularPolynomial;

/// Projected-SOR parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    /// Over-relaxation factor in `(0, 2)`.
    pub omega: f64,
    /// Convergence tolerance on the complementarity residual
    /// `max_i |min(u_i, (Au - b)_i)|`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            omega: 1.5,
            tol: 1e-10,
            max_sweeps: 10_000,
        }
    }
}

/// A fully specified discrete obstacle problem.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: SpaceTimeGrid,
    /// Forcing; the analysis normalizes `f(0,0) = 1`.
    pub rhs: ScalarField,
    /// Initial data at `t = -T`; must be nonnegative.
    pub initial: ScalarField,
    /// Dirichlet trace on the spatial boundary; must be nonnegative.
    pub boundary: ScalarField,
    pub solver: SolverParams,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        for (what, field) in [("forcing", &self.rhs), ("initial data", &self.initial), ("boundary data", &self.boundary)] {
            if field.dim() != self.grid.dim() {
                return Err(Error::Config(format!(
                    "{what} has dimension {}, grid has {}",
                    field.dim(),
                    self.grid.dim()
                )));
            }
        }
        if !(self.solver.omega > 0.0 && self.solver.omega < 2.0) {
            return Err(Error::Config(format!(
                "over-relaxation factor must lie in (0,2), got {}",
                self.solver.omega
            )));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_sweeps == 0 {
            return Err(Error::Config("solver tolerance and sweep budget must be positive".into()));
        }
        Ok(())
    }
}

/// Marches the implicit-Euler / projected-SOR scheme over all time levels.
///
/// The returned field stores every time slice (initial data included),
/// extends by zero outside the box, and interpolates linearly; switch to
/// quadratic interpolation through [`GriddedField`] when downstream
/// consumers need `O(h³)` point values.
pub fn solve(spec: &ProblemSpec) -> Result<ScalarField> {
    spec.validate()?;
    let g = &spec.grid;
    let nx = g.spatial_count();
    let times = g.times();
    let h2 = g.h() * g.h();
    let dim = g.dim();

    // Precompute per-node spatial coordinates, boundary markers and the
    // red-black split of interior nodes.
    let coords: Vec<Vec<f64>> = (0..nx).map(|s| g.spatial_coords(s)).collect();
    let boundary_mask: Vec<bool> = (0..nx).map(|s| g.is_boundary(&g.decode_spatial(s))).collect();
    let mut colors: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for s in 0..nx {
        if !boundary_mask[s] {
            let parity: usize = g.decode_spatial(s).iter().sum::<usize>() % 2;
            colors[parity].push(s);
        }
    }
    // Flat-index offsets of the ±1 neighbors per axis.
    let mut strides = vec![1usize; dim];
    for a in (0..dim.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * g.axis_count(a + 1);
    }

    let check_nonneg = |vals: &mut [f64], what: &str, t: f64| -> Result<()> {
        for v in vals.iter_mut() {
            if *v < -1e-9 {
                return Err(Error::Precondition(format!(
                    "{what} at t = {t} takes the negative value {v}; the obstacle problem needs nonnegative data"
                )));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(())
    };

    let mut values = Vec::with_capacity(g.node_count());
    let mut prev: Vec<f64> =
        exec::map_indexed(nx, |s| spec.initial.value(&coords[s], times[0]));
    check_nonneg(&mut prev, "initial data", times[0])?;
    values.extend_from_slice(&prev);

    for k in 1..times.len() {
        let t = times[k];
        let tau = t - times[k - 1];
        let diag = 1.0 / tau + 2.0 * dim as f64 / h2;
        let f_slice: Vec<f64> = exec::map_indexed(nx, |s| spec.rhs.value(&coords[s], t));

        // Warm start from the previous slice; boundary nodes take their data.
        let mut u = prev.clone();
        let mut bvals: Vec<f64> = boundary_mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(s, _)| spec.boundary.value(&coords[s], t))
            .collect();
        check_nonneg(&mut bvals, "boundary data", t)?;
        let mut bi = 0;
        for s in 0..nx {
            if boundary_mask[s] {
                u[s] = bvals[bi];
                bi += 1;
            }
        }

        let neighbor_sum = |u: &[f64], s: usize| -> f64 {
            let mut acc = 0.0;
            for &st in &strides {
                acc += u[s - st] + u[s + st];
            }
            acc
        };

        let mut converged = false;
        let mut residual = f64::INFINITY;
        for sweep in 0..spec.solver.max_sweeps {
            for color in &colors {
                // One color only reads the other, so the parallel map is
                // exactly the sequential update.
                let updated: Vec<f64> = exec::map_indexed(color.len(), |i| {
                    let s = color[i];
                    let b = prev[s] / tau - f_slice[s];
                    let rhs = b + neighbor_sum(&u, s) / h2;
                    let unew = (1.0 - spec.solver.omega) * u[s] + spec.solver.omega * rhs / diag;
                    unew.max(0.0)
                });
                for (i, &s) in color.iter().enumerate() {
                    u[s] = updated[i];
                }
            }
            // Complementarity residual over interior nodes.
            residual = colors
                .iter()
                .flatten()
                .map(|&s| {
                    let b = prev[s] / tau - f_slice[s];
                    let au = diag * u[s] - neighbor_sum(&u, s) / h2;
                    (au - b).min(u[s]).abs()
                })
                .fold(0.0f64, f64::max);
            if residual <= spec.solver.tol {
                converged = true;
                let _ = sweep;
                break;
            }
        }
        if !converged {
            return Err(Error::Convergence {
                what: format!("projected SOR at time level {k} (t = {t})"),
                residual,
                iterations: spec.solver.max_sweeps,
            });
        }
        values.extend_from_slice(&u);
        prev = u;
    }

    Ok(ScalarField::from_grid(GriddedField::new(
        g.clone(),
        values,
        OutsideMode::Zero,
        InterpMode::Linear,
    )))
}

/// A free-boundary node: contact (`u ≤ u_tol`) with a non-contact neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeBoundaryPoint {
    pub x: Vec<f64>,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct FreeBoundarySet {
    /// Lexicographic order: time level ascending, then spatial row-major.
    pub points: Vec<FreeBoundaryPoint>,
    pub u_tol: f64,
}

/// Extracts the discrete free boundary of a gridded solution.
///
/// `u_tol` defaults to `h²` (the natural quadratic-growth scale of one
/// cell) when `None`. Neighbors are the ±1 nodes along every spatial axis
/// and the adjacent time levels.
pub fn extract_free_boundary(u: &ScalarField, u_tol: Option<f64>) -> Result<FreeBoundarySet> {
    let gf = u
        .as_grid()
        .ok_or_else(|| Error::Precondition("free-boundary extraction needs a gridded field".into()))?;
    let g = &gf.grid;
    let tol = u_tol.unwrap_or(g.h() * g.h());
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("u_tol must be positive, got {tol}")));
    }
    let nx = g.spatial_count();
    let nt = g.times().len();
    let mut points = Vec::new();
    for k in 0..nt {
        for s in 0..nx {
            if gf.node(k, s) > tol {
                continue;
            }
            let multi = g.decode_spatial(s);
            let mut has_positive_neighbor = false;
            for a in 0..g.dim() {
                for step in [-1isize, 1] {
                    let j = multi[a] as isize + step;
                    if j < 0 || j >= g.axis_count(a) as isize {
                        continue;
                    }
                    let mut m2 = multi.clone();
                    m2[a] = j as usize;
                    if gf.node(k, g.encode_spatial(&m2)) > tol {
                        has_positive_neighbor = true;
                    }
                }
            }
            for dk in [-1isize, 1] {
                let kk = k as isize + dk;
                if kk >= 0 && (kk as usize) < nt && gf.node(kk as usize, s) > tol {
                    has_positive_neighbor = true;
                }
            }
            if has_positive_neighbor {
                points.push(FreeBoundaryPoint {
                    x: g.spatial_coords(s),
                    t: g.times()[k],
                });
            }
        }
    }
    Ok(FreeBoundarySet { points, u_tol: tol })
}

/// One radius of a growth curve: `sup_{Q_r⁻(X₀)} u` and its ratio to `r²`.
#[derive(Debug, Clone)]
pub struct GrowthRow {
    pub r: f64,
    pub sup_u: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct GrowthCurve {
    pub rows: Vec<GrowthRow>,
    /// `max ratio / min ratio` over the radii — near 1 for clean quadratic growth.
    pub spread: f64,
}

/// Probe resolution per radius for closed-form fields (gridded fields use
/// their own nodes).
const PROBE: i64 = 32;

/// Evaluates `r ↦ sup_{B_r(x₀) × (t₀-r², t₀]} u / r²`.
///
/// Bounded ratios certify quadratic growth; ratios bounded away from zero
/// certify nondegeneracy. Both readings are the same curve, so one routine
/// serves the two diagnostics.
pub fn growth_diagnostic(
    u: &ScalarField,
    x0: &[f64],
    t0: f64,
    radii: &[f64],
) -> Result<GrowthCurve> {
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Precondition("growth diagnostic needs positive radii".into()));
    }
    let dim = u.dim();
    if x0.len() != dim {
        return Err(Error::Precondition(format!(
            "base point has dimension {}, field has {}",
            x0.len(),
            dim
        )));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let sup = match u.as_grid() {
            Some(gf) => {
                let g = &gf.grid;
                let nx = g.spatial_count();
                let mut best = f64::NEG_INFINITY;
                for (k, &t) in g.times().iter().enumerate() {
                    if t > t0 + 1e-14 || t <= t0 - r * r - 1e-14 {
                        continue;
                    }
                    for s in 0..nx {
                        let x = g.spatial_coords(s);
                        let d2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
                        if d2 <= r * r * (1.0 + 1e-12) {
                            best = best.max(gf.node(k, s));
                        }
                    }
                }
                if best == f64::NEG_INFINITY {
                    return Err(Error::Precondition(format!(
                        "no grid nodes inside the parabolic cylinder of radius {r} at the base point"
                    )));
                }
                best
            }
            None => {
                let mut best = f64::NEG_INFINITY;
                let mut idx = vec![-PROBE; dim];
                'probe: loop {
                    let x: Vec<f64> = idx
                        .iter()
                        .zip(x0)
                        .map(|(&j, &c)| c + r * j as f64 / PROBE as f64)
                        .collect();
                    let d2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d2 <= r * r * (1.0 + 1e-12) {
                        for kt in 0..=8 {
                            let t = t0 - r * r * kt as f64 / 8.0;
                            best = best.max(u.value(&x, t));
                        }
                    }
                    for a in (0..dim).rev() {
                        idx[a] += 1;
                        if idx[a] <= PROBE {
                            continue 'probe;
                        }
                        idx[a] = -PROBE;
                        if a == 0 {
                            break 'probe;
                        }
                    }
                }
                best
            }
        };
        rows.push(GrowthRow {
            r,
            sup_u: sup,
            ratio: sup / (r * r),
        });
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in &rows {
        lo = lo.min(row.ratio);
        hi = hi.max(row.ratio);
    }
    let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(GrowthCurve { rows, spread })
}

/// Reference vertex profiles with exactly known energies.
#[derive(Debug, Clone)]
pub enum ExactProfile {
    /// Half-space profile `½ max(0, ν·x)²` for a unit direction `ν`.
    Regular { direction: Vec<f64> },
    /// Normalized 2-homogeneous caloric polynomial `½xᵀQx + mt`.
    Singular(SingularPolynomial),
    Zero { dim: usize },
}

impl ExactProfile {
    pub fn regular(direction: &[f64]) -> Result<Self> {
        let norm: f64 = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::Precondition("regular profile direction must be nonzero".into()));
        }
        Ok(ExactProfile::Regular {
            direction: direction.iter().map(|v| v / norm).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ExactProfile::Regular { direction } => direction.len(),
            ExactProfile::Singular(p) => p.dim(),
            ExactProfile::Zero { dim } => *dim,
        }
    }

    pub fn field(&self) -> ScalarField {
        match self {
            ExactProfile::Regular { direction } => {
                let nu = direction.clone();
                let nu2 = direction.clone();
                ScalarField::closed(nu.len(), move |x, _| {
                    let s: f64 = x.iter().zip(&nu).map(|(a, b)| a * b).sum();
                    0.5 * s.max(0.0) * s.max(0.0)
                })
                .with_gradient(move |x, _, out| {
                    let s: f64 = x.iter().zip(&nu2).map(|(a, b)| a * b).sum();
                    let sp = s.max(0.0);
                    for (o, &n) in out.iter_mut().zip(&nu2) {
                        *o = sp * n;
                    }
                })
                .with_time_derivative(|_, _| 0.0)
            }
            ExactProfile::Singular(p) => p.field(),
            ExactProfile::Zero { dim } => ScalarField::constant(*dim, 0.0),
        }
    }

    /// The indicator-weighted forcing `Δu - ∂_t u` this profile solves.
    pub fn heat_value(&self, x: &[f64], _t: f64) -> f64 {
        match self {
            ExactProfile::Regular { direction } => {
                let s: f64 = x.iter().zip(direction).map(|(a, b)| a * b).sum();
                if s > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ExactProfile::Singular(_) => 1.0,
            ExactProfile::Zero { .. } => 0.0,
        }
    }
}

/// TOML configuration of a solve run.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub dimension: usize,
    #[serde(rename = "box")]
    pub spatial_box: Vec<[f64; 2]>,
    pub h: f64,
    pub tau: f64,
    #[serde(rename = "T")]
    pub t_depth: f64,
    pub grading: Option<f64>,
    pub f: SourceSpec,
    pub ic: SourceSpec,
    pub bc: SourceSpec,
    #[serde(default)]
    pub solver: SolverParams,
}

/// A field source: inline expression or a field file on disk.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SourceSpec {
    Expression(String),
    File(FileSource),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSource {
    pub file: String,
    #[serde(default)]
    pub format: Option<String>,
}

impl SourceSpec {
    pub fn resolve(&self, dim: usize, base_dir: &Path) -> Result<ScalarField> {
        match self {
            SourceSpec::Expression(text) => parse_field(text, dim),
            SourceSpec::File(FileSource { file, format }) => {
                let path = base_dir.join(file);
                let mut reader = std::fs::File::open(&path)?;
                let is_json = match format.as_deref() {
                    Some("json") => true,
                    Some("text") => false,
                    None => path.extension().map(|e| e == "json").unwrap_or(false),
                    Some(other) => {
                        return Err(Error::Config(format!("unknown field format `{other}`")))
                    }
                };
                let gf = if is_json {
                    crate::core_grid::read_field_json(&mut reader)?
                } else {
                    crate::core_grid::read_field_text(
                        &mut reader,
                        OutsideMode::Clamp,
                        InterpMode::Linear,
                    )?
                };
                if gf.grid.dim() != dim {
                    return Err(Error::Config(format!(
                        "field file {} has dimension {}, expected {dim}",
                        path.display(),
                        gf.grid.dim()
                    )));
                }
                Ok(ScalarField::from_grid(gf))
            }
        }
    }
}

impl ProblemSpec {
    /// Builds a runnable problem from a parsed configuration; file sources
    /// are resolved relative to `base_dir`.
    pub fn from_config(cfg: &SolveConfig, base_dir: &Path) -> Result<Self> {
        if cfg.spatial_box.len() != cfg.dimension {
            return Err(Error::Config(format!(
                "box lists {} axes but dimension is {}",
                cfg.spatial_box.len(),
                cfg.dimension
            )));
        }
        let spatial_box: Vec<(f64, f64)> = cfg.spatial_box.iter().map(|&[a, b]| (a, b)).collect();
        let grid = SpaceTimeGrid::new(&spatial_box, cfg.h, cfg.t_depth, cfg.tau, cfg.grading)?;
        Ok(ProblemSpec {
            grid,
            rhs: cfg.f.resolve(cfg.dimension, base_dir)?,
            initial: cfg.ic.resolve(cfg.dimension, base_dir)?,
            boundary: cfg.bc.resolve(cfg.dimension, base_dir)?,
            solver: cfg.solver.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regular_profile_problem(h: f64, t_depth: f64) -> ProblemSpec {
        let grid = SpaceTimeGrid::uniform(&[(-1.0, 1.0)], h, t_depth, h * h).unwrap();
        let profile = ExactProfile::regular(&[1.0]).unwrap().field();
        ProblemSpec {
            grid,
            rhs: ScalarField::constant(1, 1.0),
            initial: profile.clone(),
            boundary: profile,
            solver: SolverParams::default(),
        }
    }

    #[test]
    fn stationary_regular_profile_is_a_discrete_fixed_point() {
        // ½(x⁺)² satisfies the discrete complementarity system exactly:
        // the five-point residual vanishes where u > 0 and is +½ ≥ 0 at the
        // kink node, so projected SOR must keep every slice at the profile.
        let spec = regular_profile_problem(1.0 / 16.0, 1.0 / 16.0);
        let u = solve(&spec).unwrap();
        let gf = u.as_grid().unwrap();
        let g = &gf.grid;
        let mut worst = 0.0f64;
        for k in 0..g.times().len() {
            for s in 0..g.spatial_count() {
                let x = g.spatial_coords(s)[0];
                let exact = 0.5 * x.max(0.0) * x.max(0.0);
                worst = worst.max((gf.node(k, s) - exact).abs());
            }
        }
        assert!(worst < 1e-8, "drift from exact fixed point: {worst:.3e}");
    }

    #[test]
    fn stationary_singular_profile_in_two_dimensions() {
        // ½x₁² with m = 0: the contact set is the line x₁ = 0 and the
        // discrete residual is 0 there, so the profile is again exact.
        let grid = SpaceTimeGrid::uniform(&[(-1.0, 1.0), (-1.0, 1.0)], 0.125, 0.0625, 0.015625).unwrap();
        let p = SingularPolynomial::from_rows(2, &[1.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        let profile = p.field();
        let spec = ProblemSpec {
            grid,
            rhs: ScalarField::constant(2, 1.0),
            initial: profile.clone(),
            boundary: profile.clone(),
            solver: SolverParams::default(),
        };
        let u = solve(&spec).unwrap();
        let gf = u.as_grid().unwrap();
        let g = &gf.grid;
        let mut worst = 0.0f64;
        for k in 0..g.times().len() {
            for s in 0..g.spatial_count() {
                let x = g.spatial_coords(s);
                worst = worst.max((gf.node(k, s) - profile.value(&x, 0.0)).abs());
            }
        }
        assert!(worst < 1e-8, "drift from exact fixed point: {worst:.3e}");
    }

    #[test]
    fn free_boundary_of_the_regular_profile_sits_at_the_kink() {
        let spec = regular_profile_problem(1.0 / 16.0, 1.0 / 16.0);
        let u = solve(&spec).unwrap();
        let fb = extract_free_boundary(&u, None).unwrap();
        assert!(!fb.points.is_empty());
        // u(h) = h²/2 ≤ h² = u_tol and u(2h) = 2h² > u_tol: the marked
        // nodes are exactly x = h on every slice.
        for p in &fb.points {
            assert!((p.x[0] - 1.0 / 16.0).abs() < 1e-12, "unexpected point {:?}", p);
        }
        let nt = u.as_grid().unwrap().grid.times().len();
        assert_eq!(fb.points.len(), nt);
    }

    #[test]
    fn growth_diagnostic_is_flat_for_the_regular_profile() {
        let profile = ExactProfile::regular(&[1.0, 0.0]).unwrap().field();
        let curve = growth_diagnostic(&profile, &[0.0, 0.0], 0.0, &[0.1, 0.2, 0.4]).unwrap();
        for row in &curve.rows {
            assert!((row.ratio - 0.5).abs() < 1e-12, "ratio {} at r {}", row.ratio, row.r);
        }
        assert!((curve.spread - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_boundary_data_is_rejected() {
        let grid = SpaceTimeGrid::uniform(&[(-1.0, 1.0)], 0.25, 0.25, 0.0625).unwrap();
        let spec = ProblemSpec {
            grid,
            rhs: ScalarField::constant(1, 1.0),
            initial: ScalarField::constant(1, 0.0),
            boundary: ScalarField::closed(1, |_, t| t),
            solver: SolverParams::default(),
        };
        let err = solve(&spec).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "got {err:?}");
    }

    #[test]
    fn exhausted_sweep_budget_reports_convergence_failure() {
        let mut spec = regular_profile_problem(1.0 / 8.0, 1.0 / 8.0);
        // Start far from the solution and allow a single sweep.
        spec.initial = ScalarField::closed(1, |x, _| 5.0 * (1.0 - x[0] * x[0]));
        spec.solver.max_sweeps = 1;
        spec.solver.tol = 1e-14;
        let err = solve(&spec).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }), "got {err:?}");
    }

    #[test]
    fn solutions_stay_nonnegative() {
        // Strong negative forcing pushes the unconstrained solution below
        // zero; the projection must keep it at the obstacle.
        let grid = SpaceTimeGrid::uniform(&[(-1.0, 1.0)], 0.125, 0.25, 0.015625).unwrap();
        let spec = ProblemSpec {
            grid,
            rhs: ScalarField::constant(1, 4.0),
            initial: ScalarField::closed(1, |x, _| 0.1 * (1.0 - x[0] * x[0])),
            boundary: ScalarField::constant(1, 0.0),
            solver: SolverParams::default(),
        };
        let u = solve(&spec).unwrap();
        let gf = u.as_grid().unwrap();
        assert!(gf.values().iter().all(|&v| v >= 0.0));
        // And the forcing indeed drives it to full contact at the end.
        let last = gf.time_slice(gf.grid.times().len() - 1);
        assert!(last.iter().all(|&v| v == 0.0));
    }
}
