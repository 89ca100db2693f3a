//! Moduli of continuity for the forcing term, in two geometries.
//!
//! The cylinder modulus averages `|f - f(0)|^p` over parabolic cylinders
//! `B_ρ × (-ρ², 0]`; the strip modulus weighs the same deviation by the
//! backward heat kernel over `S_ρ`. They are not equivalent: the strip
//! version can stay bounded — even Dini — while the cylinder version
//! diverges, and the self-similar family in [`remark_family`] exhibits
//! exactly that gap. Both enter the regularity machinery only through
//! Dini-type integrals, computed here on logarithmic grids with power-law
//! tail extrapolation.

use crate::core_grid::{integrate_strip, MeasureKind, ScalarField, StripQuadrature};
use crate::error::{Error, Result};
use crate::exec;

/// Nodes per decade of the `ρ`-grids behind the running suprema.
const SUP_PER_DECADE: usize = 8;
/// Decades scanned below the requested radius when taking a supremum.
const SUP_DECADES: f64 = 2.0;
/// Nodes per decade of the logarithmic Dini grids.
const DINI_PER_DECADE: usize = 64;

/// `(ρ⁻² ∫_{S_ρ} |f - f₀|^p dγ)^{1/p}` at a single radius.
pub fn strip_modulus_at(
    f: &ScalarField,
    f0: f64,
    p: f64,
    rho: f64,
    quad: &StripQuadrature,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Precondition(format!("modulus exponent must be ≥ 1, got {p}")));
    }
    let dim = f.dim();
    let integral = integrate_strip(
        |x, t| (f.value(x, t) - f0).abs().powf(p),
        dim,
        rho,
        MeasureKind::Gamma,
        quad,
    )?;
    Ok((integral.value.max(0.0) / (rho * rho)).powf(1.0 / p))
}

/// Strip modulus: supremum of [`strip_modulus_at`] over `ρ ≤ r`.
///
/// The supremum is taken over a logarithmic grid spanning two decades below
/// `r`; radii smaller than that contribute `O(ρ^{2/p})` for bounded `f` and
/// cannot carry the sup.
pub fn strip_modulus(
    f: &ScalarField,
    f0: f64,
    p: f64,
    r: f64,
    quad: &StripQuadrature,
) -> Result<f64> {
    let mut best = 0.0f64;
    for rho in sup_grid(r, r * 10f64.powf(-SUP_DECADES)) {
        best = best.max(strip_modulus_at(f, f0, p, rho, quad)?);
    }
    Ok(best)
}

/// `(|Q_ρ⁻|⁻¹ ∫_{Q_ρ⁻} |f - f₀|^p)^{1/p}` by the midpoint rule on cells of
/// target size `(h, τ)`.
///
/// The cylinder is `B_ρ × (-ρ², 0]` with the Euclidean ball `B_ρ`; the
/// normalization uses the discrete cell measure, so constants are averaged
/// exactly. The value is a function of the resolution by design: for
/// forcings that are merely strip-integrable the midpoint sum grows without
/// bound as `τ → 0`, and reporting that growth is the point.
pub fn cylinder_modulus_at(
    f: &ScalarField,
    f0: f64,
    p: f64,
    rho: f64,
    h: f64,
    tau: f64,
) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Precondition(format!("modulus exponent must be ≥ 1, got {p}")));
    }
    if !(rho > 0.0 && h > 0.0 && tau > 0.0) {
        return Err(Error::Precondition("cylinder modulus needs positive rho, h, tau".into()));
    }
    let dim = f.dim();
    let m_x = ((2.0 * rho / h).ceil() as usize).max(2);
    let m_t = ((rho * rho / tau).ceil() as usize).max(2);
    let hx = 2.0 * rho / m_x as f64;
    let ht = rho * rho / m_t as f64;
    let mut axis = Vec::with_capacity(m_x);
    for i in 0..m_x {
        axis.push(-rho + (i as f64 + 0.5) * hx);
    }
    let n_space = m_x.pow(dim as u32);
    let rho2 = rho * rho;
    let total = exec::sum_indexed(n_space * m_t, |idx| {
        let (si, ti) = (idx / m_t, idx % m_t);
        let mut x = [0.0f64; 3];
        let mut rem = si;
        let mut norm2 = 0.0;
        for a in (0..dim).rev() {
            x[a] = axis[rem % m_x];
            norm2 += x[a] * x[a];
            rem /= m_x;
        }
        if norm2 > rho2 {
            return 0.0;
        }
        let t = -rho2 + (ti as f64 + 0.5) * ht;
        (f.value(&x[..dim], t) - f0).abs().powf(p)
    });
    let count = exec::sum_indexed(n_space, |si| {
        let mut rem = si;
        let mut norm2 = 0.0;
        for _ in 0..dim {
            let v = axis[rem % m_x];
            norm2 += v * v;
            rem /= m_x;
        }
        if norm2 <= rho2 {
            1.0
        } else {
            0.0
        }
    });
    if count == 0.0 {
        return Err(Error::Precondition("cylinder grid has no cells inside the ball".into()));
    }
    Ok((total / (count * m_t as f64)).powf(1.0 / p))
}

/// Cylinder modulus: supremum of [`cylinder_modulus_at`] over `ρ ≤ r`,
/// floored at radii the `(h, τ)` resolution can still populate.
pub fn cylinder_modulus(
    f: &ScalarField,
    f0: f64,
    p: f64,
    r: f64,
    h: f64,
    tau: f64,
) -> Result<f64> {
    let floor = (2.0 * h).max(2.0 * tau.sqrt()).max(r * 10f64.powf(-SUP_DECADES));
    if floor >= r {
        return cylinder_modulus_at(f, f0, p, r, h, tau);
    }
    let mut best = 0.0f64;
    for rho in sup_grid(r, floor) {
        best = best.max(cylinder_modulus_at(f, f0, p, rho, h, tau)?);
    }
    Ok(best)
}

fn sup_grid(r: f64, floor: f64) -> Vec<f64> {
    let decades = (r / floor).log10().max(0.0);
    let n = (decades * SUP_PER_DECADE as f64).ceil() as usize + 1;
    let (lr, lf) = (r.ln(), floor.ln());
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (lr + (lf - lr) * i as f64 / (n.max(2) - 1) as f64).exp())
        .collect();
    grid[0] = r;
    grid
}

/// A sampled modulus curve with the running supremum already applied.
#[derive(Debug, Clone)]
pub struct ModulusCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

/// Evaluates a single-radius modulus on an ascending ladder and folds in the
/// running supremum, making the curve nondecreasing by construction.
pub fn modulus_curve(
    radii: &[f64],
    mut at: impl FnMut(f64) -> Result<f64>,
) -> Result<ModulusCurve> {
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut values = Vec::with_capacity(rs.len());
    let mut running = 0.0f64;
    for &r in &rs {
        running = running.max(at(r)?);
        values.push(running);
    }
    Ok(ModulusCurve { radii: rs, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiniDepth {
    /// `∫_0^R σ(r)/r dr`.
    Single,
    /// `∫_0^R (1/r) ∫_0^r σ(s)/s ds dr`.
    Double,
}

#[derive(Debug, Clone)]
pub struct DiniResult {
    pub value: f64,
    /// Extrapolated contribution below the resolved grid.
    pub tail: f64,
    /// Power-law exponent fitted at the small-radius end.
    pub alpha: f64,
    /// False when the fitted decay is too slow for the integral to close or
    /// the value refuses to stabilize under grid extension.
    pub converged: bool,
}

/// Dini integral of a modulus on `(0, r_max]` by log-substitution trapezoid.
///
/// The grid spans four decades below `r_max`; the remainder is extrapolated
/// as a power law fitted at the bottom of the grid. A second pass with the
/// grid extended one decade further must agree to 1%, otherwise the result
/// is flagged unconverged.
pub fn dini_integral(
    mut sigma: impl FnMut(f64) -> Result<f64>,
    r_max: f64,
    depth: DiniDepth,
) -> Result<DiniResult> {
    if !(r_max > 0.0) {
        return Err(Error::Precondition("dini integral needs a positive upper radius".into()));
    }
    let coarse = dini_pass(&mut sigma, r_max, 4.0, depth)?;
    let fine = dini_pass(&mut sigma, r_max, 5.0, depth)?;
    let drift = (fine.0 - coarse.0).abs();
    let converged =
        fine.2 && coarse.2 && drift <= 0.01 * (fine.0.abs() + 1e-300);
    Ok(DiniResult {
        value: fine.0,
        tail: fine.1,
        alpha: fine.3,
        converged,
    })
}

/// One quadrature pass; returns (value, tail, tail_ok, alpha).
fn dini_pass(
    sigma: &mut impl FnMut(f64) -> Result<f64>,
    r_max: f64,
    decades: f64,
    depth: DiniDepth,
) -> Result<(f64, f64, bool, f64)> {
    let n = (decades * DINI_PER_DECADE as f64).ceil() as usize + 1;
    let lmax = r_max.ln();
    let lmin = lmax - decades * std::f64::consts::LN_10;
    let du = (lmax - lmin) / (n - 1) as f64;
    // Ascending radii.
    let rs: Vec<f64> = (0..n).map(|i| (lmin + du * i as f64).exp()).collect();
    let mut vals = Vec::with_capacity(n);
    for &r in &rs {
        vals.push(sigma(r)?);
    }
    // Power-law fit at the bottom: σ ~ c r^α over the lowest half-decade.
    let span = DINI_PER_DECADE / 2;
    let (s0, s1) = (vals[0], vals[span]);
    let alpha = if s0 > 1e-300 && s1 > 1e-300 {
        (s1.ln() - s0.ln()) / (rs[span].ln() - rs[0].ln())
    } else {
        f64::INFINITY // identically-zero bottom: tail vanishes
    };
    let tail_ok = alpha > 0.02;
    match depth {
        DiniDepth::Single => {
            let tail = if s0 <= 1e-300 {
                0.0
            } else if tail_ok {
                s0 / alpha
            } else {
                0.0
            };
            let mut acc = tail;
            for i in 1..n {
                acc += 0.5 * du * (vals[i] + vals[i - 1]);
            }
            Ok((acc, tail, tail_ok || s0 <= 1e-300, alpha))
        }
        DiniDepth::Double => {
            let inner_tail = if s0 <= 1e-300 {
                0.0
            } else if tail_ok {
                s0 / alpha
            } else {
                0.0
            };
            let mut inner = Vec::with_capacity(n);
            let mut acc = inner_tail;
            inner.push(acc);
            for i in 1..n {
                acc += 0.5 * du * (vals[i] + vals[i - 1]);
                inner.push(acc);
            }
            let outer_tail = if s0 <= 1e-300 {
                0.0
            } else if tail_ok {
                s0 / (alpha * alpha)
            } else {
                0.0
            };
            let mut total = outer_tail;
            for i in 1..n {
                total += 0.5 * du * (inner[i] + inner[i - 1]);
            }
            Ok((total, outer_tail, tail_ok || s0 <= 1e-300, alpha))
        }
    }
}

/// Self-similar forcing `f(x, t) = |t|^α (x₁/√(-t))⁴` on `t < 0`.
///
/// Its strip modulus is exactly `σ₁(ρ) = 12 ρ^{2α}/(α + 1)` — Dini for every
/// `α > 0` — while the cylinder modulus carries `|t|^{α-2}` against `dx dt`
/// and diverges for `α < 1`: midpoint sums grow like `τ^{α-1}` under time
/// refinement. The pair separates the two geometries.
pub fn remark_family(alpha: f64) -> ScalarField {
    ScalarField::closed(1, move |x, t| {
        if t >= 0.0 {
            return 0.0;
        }
        let y = x[0] / (-t).sqrt();
        (-t).powf(alpha) * y.powi(4)
    })
}

/// Exact strip modulus of [`remark_family`] at exponent `p = 1`.
pub fn remark_family_strip_modulus(alpha: f64, rho: f64) -> f64 {
    12.0 * rho.powf(2.0 * alpha) / (alpha + 1.0)
}

#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub r: f64,
    pub strip: f64,
    /// `σ̃(r) + σ̃(√r) + σ̃(1)·e^{-c/r}`.
    pub envelope: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub c: f64,
    /// Smallest constant `C` with `strip ≤ C · envelope` on the ladder.
    pub c_star: f64,
    pub rows: Vec<ComparisonRow>,
}

/// Checks the one-sided domination of the strip modulus by the cylinder
/// modulus sampled at `r`, `√r` and `1`: the reverse direction is false in
/// general (see [`remark_family`]).
pub fn compare_moduli(
    mut strip: impl FnMut(f64) -> Result<f64>,
    mut cylinder: impl FnMut(f64) -> Result<f64>,
    radii: &[f64],
    c: f64,
) -> Result<ComparisonReport> {
    if !(c > 0.0) {
        return Err(Error::Precondition("comparison decay rate c must be positive".into()));
    }
    let cyl_one = cylinder(1.0)?;
    let mut rows = Vec::with_capacity(radii.len());
    let mut c_star = 0.0f64;
    for &r in radii {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Precondition(format!(
                "comparison radii must lie in (0, 1], got {r}"
            )));
        }
        let lhs = strip(r)?;
        let envelope = cylinder(r)? + cylinder(r.sqrt())? + cyl_one * (-c / r).exp();
        let ratio = if envelope > 0.0 { lhs / envelope } else { f64::INFINITY };
        c_star = c_star.max(ratio);
        rows.push(ComparisonRow {
            r,
            strip: lhs,
            envelope,
            ratio,
        });
    }
    Ok(ComparisonReport { c, c_star, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q32() -> StripQuadrature {
        StripQuadrature::with_h(1.0 / 32.0)
    }

    fn linear_fixture() -> ScalarField {
        // f = 1 + x₁: σ₂(ρ) = ρ exactly, cylinder σ̃₂(ρ) = ρ/√3 exactly.
        ScalarField::closed(1, |x, _| 1.0 + x[0])
    }

    #[test]
    fn strip_modulus_of_linear_forcing_is_the_radius() {
        let f = linear_fixture();
        for rho in [0.25, 0.5, 1.0] {
            let got = strip_modulus_at(&f, 1.0, 2.0, rho, &q32()).unwrap();
            assert_relative_eq!(got, rho, max_relative = 1e-4);
        }
        let sup = strip_modulus(&f, 1.0, 2.0, 0.5, &q32()).unwrap();
        assert_relative_eq!(sup, 0.5, max_relative = 1e-4);
    }

    #[test]
    fn cylinder_modulus_of_linear_forcing_is_radius_over_sqrt3() {
        let f = linear_fixture();
        let got = cylinder_modulus_at(&f, 1.0, 2.0, 0.5, 1.0 / 128.0, 1.0 / 256.0).unwrap();
        assert_relative_eq!(got, 0.5 / 3.0f64.sqrt(), max_relative = 1e-3);
    }

    #[test]
    fn remark_family_strip_modulus_matches_closed_form() {
        let alpha = 0.5;
        let f = remark_family(alpha);
        for rho in [0.25, 0.5] {
            let got = strip_modulus_at(&f, 0.0, 1.0, rho, &q32()).unwrap();
            assert_relative_eq!(
                got,
                remark_family_strip_modulus(alpha, rho),
                max_relative = 5e-3
            );
        }
    }

    #[test]
    fn remark_family_cylinder_modulus_grows_under_refinement() {
        // One parabolic refinement step (h, τ) → (h/4, τ/16) multiplies the
        // divergent time sum by ≈ 4 at α = 1/2.
        let f = remark_family(0.5);
        let coarse = cylinder_modulus_at(&f, 0.0, 1.0, 0.5, 1.0 / 32.0, 1.0 / 64.0).unwrap();
        let fine = cylinder_modulus_at(&f, 0.0, 1.0, 0.5, 1.0 / 128.0, 1.0 / 1024.0).unwrap();
        assert!(
            fine / coarse > 3.0,
            "expected ≈4x growth, got {:.3}",
            fine / coarse
        );
    }

    #[test]
    fn dini_integral_of_power_law_is_inverse_alpha() {
        let single = dini_integral(|r| Ok(r.sqrt()), 1.0, DiniDepth::Single).unwrap();
        assert!(single.converged);
        assert_relative_eq!(single.value, 2.0, max_relative = 1e-3);

        let double = dini_integral(|r| Ok(r.sqrt()), 1.0, DiniDepth::Double).unwrap();
        assert!(double.converged);
        assert_relative_eq!(double.value, 4.0, max_relative = 1e-2);
    }

    #[test]
    fn dini_integral_flags_non_dini_modulus() {
        let got = dini_integral(|_| Ok(1.0), 1.0, DiniDepth::Single).unwrap();
        assert!(!got.converged);
    }

    #[test]
    fn dini_integral_of_zero_is_zero() {
        let got = dini_integral(|_| Ok(0.0), 1.0, DiniDepth::Single).unwrap();
        assert!(got.converged);
        assert_eq!(got.value, 0.0);
    }

    #[test]
    fn comparison_report_bounds_strip_by_cylinder_envelope() {
        let f = linear_fixture();
        let quad = q32();
        let report = compare_moduli(
            |r| strip_modulus(&f, 1.0, 2.0, r, &quad),
            |r| cylinder_modulus(&f, 1.0, 2.0, r, 1.0 / 64.0, 1.0 / 128.0),
            &[0.05, 0.1, 0.2, 0.4, 0.8],
            0.25,
        )
        .unwrap();
        assert!(report.c_star.is_finite());
        assert!(report.c_star > 0.0);
        for row in &report.rows {
            assert!(row.strip <= report.c_star * row.envelope + 1e-12);
        }
    }
}
