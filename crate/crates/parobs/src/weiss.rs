//! Weiss-type monotone energy at a space-time vertex.
//!
//! The central object is
//! `E(r, u) = r⁻⁴ ∫_{S_r} (|∇u|² + 2u + u²/t) dγ`,
//! which is invariant under parabolic rescaling of 2-homogeneous solutions
//! and, corrected by a forcing term, almost monotone in `r`. Its limit at
//! `r → 0` takes exactly three values — the calibration levels below — and
//! classifies the vertex as zero, regular or singular.

use crate::core_grid::{
    integrate_strip, GriddedField, InterpMode, MeasureKind, MomentOracle, OutsideMode, Poly,
    ScalarField, StripQuadrature,
};
use crate::error::{Error, Result};
use crate::exec;

/// Parabolic scaling generator `Lu = x·∇u + 2t ∂_t u - 2u`.
///
/// Vanishes exactly on parabolically 2-homogeneous functions; its square
/// against `γ̄` is the dissipation that drives every monotonicity formula
/// here.
pub fn homogeneity_operator(u: &ScalarField) -> ScalarField {
    let base = u.clone();
    let dim = u.dim();
    ScalarField::closed(dim, move |x, t| {
        let mut grad = [0.0f64; 3];
        base.gradient_into(x, t, &mut grad[..x.len()]);
        let xg: f64 = x.iter().zip(&grad).map(|(a, b)| a * b).sum();
        xg + 2.0 * t * base.time_derivative(x, t) - 2.0 * base.value(x, t)
    })
}

/// Heat-operator residual `Δu - ∂_t u`.
///
/// Gridded fields get the discrete residual of the implicit scheme (centered
/// second differences, backward time difference), which is the quantity the
/// solver actually drove to complementarity; closed-form fields fall back to
/// finite differences with a second-derivative-friendly step.
pub fn heat_residual(u: &ScalarField) -> ScalarField {
    match u.as_grid() {
        Some(gf) => {
            let g = gf.grid.clone();
            let nx = g.spatial_count();
            let nt = g.times().len();
            let h2 = g.h() * g.h();
            let values = exec::map_indexed(g.node_count(), |idx| {
                let (k, s) = (idx / nx, idx % nx);
                let multi = g.decode_spatial(s);
                if g.is_boundary(&multi) {
                    return 0.0;
                }
                let k_eff = k.max(1).min(nt - 1);
                let tau = g.times()[k_eff] - g.times()[k_eff - 1];
                let mut lap = 0.0;
                for a in 0..g.dim() {
                    let mut m2 = multi.clone();
                    m2[a] -= 1;
                    let um = gf.node(k_eff, g.encode_spatial(&m2));
                    m2[a] += 2;
                    let up = gf.node(k_eff, g.encode_spatial(&m2));
                    lap += (um + up - 2.0 * gf.node(k_eff, s)) / h2;
                }
                let dt = (gf.node(k_eff, s) - gf.node(k_eff - 1, s)) / tau;
                lap - dt
            });
            ScalarField::from_grid(GriddedField::new(
                g,
                values,
                OutsideMode::Clamp,
                InterpMode::Linear,
            ))
        }
        None => {
            let base = u.clone();
            let dim = u.dim();
            const EPS: f64 = 1e-4;
            ScalarField::closed(dim, move |x, t| {
                let u0 = base.value(x, t);
                let mut xp = x.to_vec();
                let mut lap = 0.0;
                for a in 0..x.len() {
                    xp[a] = x[a] + EPS;
                    let up = base.value(&xp, t);
                    xp[a] = x[a] - EPS;
                    let um = base.value(&xp, t);
                    xp[a] = x[a];
                    lap += (up + um - 2.0 * u0) / (EPS * EPS);
                }
                let dt = (base.value(x, t + EPS) - base.value(x, t - EPS)) / (2.0 * EPS);
                lap - dt
            })
        }
    }
}

/// `E(r, u)` with its quadrature budget.
#[derive(Debug, Clone)]
pub struct WeissEnergy {
    pub r: f64,
    pub value: f64,
    pub budget: f64,
}

/// Evaluates the vertex energy at one radius.
pub fn weiss_energy(u: &ScalarField, r: f64, quad: &StripQuadrature) -> Result<WeissEnergy> {
    let dim = u.dim();
    // The u²/t term diverges against interpolation noise below a sampled
    // field's time step; keep the bands at or above the resolution.
    let mut quad = quad.clone();
    quad.t_floor_abs = quad.t_floor_abs.max(u.time_resolution());
    let integral = integrate_strip(
        |x, t| {
            let mut grad = [0.0f64; 3];
            u.gradient_into(x, t, &mut grad[..dim]);
            let g2: f64 = grad[..dim].iter().map(|v| v * v).sum();
            let uv = u.value(x, t);
            g2 + 2.0 * uv + uv * uv / t
        },
        dim,
        r,
        MeasureKind::Gamma,
        &quad,
    )?;
    let r4 = r.powi(4);
    Ok(WeissEnergy {
        r,
        value: integral.value / r4,
        budget: integral.budget / r4,
    })
}

/// The three vertex-energy levels and the scale factor `κ` that maps them
/// onto the conventional normalization `(0, 15/2, 15)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub zero: f64,
    pub regular: f64,
    pub singular: f64,
    pub kappa: f64,
}

impl Thresholds {
    pub fn levels(&self) -> [f64; 3] {
        [self.zero, self.regular, self.singular]
    }
}

/// Derives the classification levels from the moment oracle.
///
/// With the probability-density slice normalization the half-space profile
/// `½(x·ν)⁺²` has energy `1/4` and every normalized 2-homogeneous caloric
/// profile `½xᵀQx + mt` (with `tr Q - m = 1`) has energy `1/2`; the ratio 2
/// between the singular and regular levels is normalization-independent.
/// `κ = 30` rescales `(0, 1/4, 1/2)` to `(0, 15/2, 15)`.
pub fn calibrate_thresholds() -> Thresholds {
    // Regular profile, one axis, half-line moments: ∫|∇u|²dγ = ∫2u dγ = 1/2,
    // ∫u²/t dγ = -3/4; all exact dyadic arithmetic.
    let grad_sq = MomentOracle::gaussian_even_half_moment(1, 1.0) / 2.0; // ∫(x⁺)² slice density s/.. folded below
    // Integrate slice densities s·c over s ∈ (0,1]: each strip moment is the
    // oracle value at r = 1.
    let strip_half = |k: u32, tpow: u32| -> f64 {
        // ∫_{S_1} (x⁺)^{2k} t^{tpow} dγ = ½ ∫_{S_1} x^{2k} t^{tpow} dγ.
        0.5 * MomentOracle::strip_moment(&[2 * k], tpow, 1.0, MeasureKind::Gamma).unwrap()
    };
    let _ = grad_sq;
    let e_regular = strip_half(1, 0)      // |∇u|² = (x⁺)²
        + strip_half(1, 0)                 // 2u = (x⁺)²
        - 0.25 * {
            // u²/t = ¼(x⁺)⁴/t: strip moment of (x⁺)⁴ against γ̄ with sign.
            0.5 * MomentOracle::strip_moment(&[4], 0, 1.0, MeasureKind::GammaBar).unwrap()
        };

    // Singular profile ½x² + 0·t in one dimension via exact polynomial moments.
    let p = Poly::from_terms(1, vec![(0.5, vec![2], 0)]);
    let e_singular = energy_of_poly(&p, 1.0);

    let thresholds = Thresholds {
        zero: 0.0,
        regular: e_regular,
        singular: e_singular,
        kappa: 7.5 / e_regular,
    };
    // Frozen calibration: (0, 1/4, 1/2), ratio exactly 2, κ·levels = (0, 15/2, 15).
    assert_eq!(thresholds.regular, 0.25);
    assert_eq!(thresholds.singular, 0.5);
    assert_eq!(thresholds.singular / thresholds.regular, 2.0);
    assert_eq!(thresholds.kappa, 30.0);
    thresholds
}

/// Exact `E(r, p)` for a polynomial via the moment oracle.
pub fn energy_of_poly(p: &Poly, r: f64) -> f64 {
    let grad = p.gradient_square_integral(r, MeasureKind::Gamma).unwrap();
    let lin = p.scale(2.0).strip_integral(r, MeasureKind::Gamma).unwrap();
    let sq = p.mul(p).strip_integral(r, MeasureKind::GammaBar).unwrap();
    (grad + lin - sq) / r.powi(4)
}

/// One evaluated radius of the corrected (almost monotone) energy
/// `W(r) = E(r) - 2R(r)`, `R(r) = ∫_0^r s⁻⁵ ∫_{S_s} Lu (1 - Hu) dγ ds`.
#[derive(Debug, Clone)]
pub struct WeissEvaluation {
    pub r: f64,
    pub energy: f64,
    pub correction: f64,
    pub w: f64,
    pub budget: f64,
}

/// Increment of `W` between consecutive radii, with the dissipation
/// `∫ r⁻⁵ ∫_{S_r} (Lu)² dγ̄ dr` it must reproduce.
#[derive(Debug, Clone)]
pub struct WeissIncrement {
    pub r_from: f64,
    pub r_to: f64,
    pub delta_w: f64,
    pub dissipation: f64,
    pub budget: f64,
}

#[derive(Debug, Clone)]
pub struct WeissReport {
    pub rows: Vec<WeissEvaluation>,
    pub increments: Vec<WeissIncrement>,
}

/// Knobs for [`weiss_w`].
#[derive(Debug, Clone)]
pub struct WeissParams {
    pub quad: StripQuadrature,
    /// Log-spaced correction nodes inserted between consecutive radii.
    pub nodes_per_interval: usize,
    /// Lower cutoff of the correction integral as a fraction of the
    /// smallest radius; the strip below it is power-extrapolated.
    pub floor_fraction: f64,
    /// Coefficient of the `(h² + τ)/r²` discretization heuristic added to
    /// budgets when `u` is gridded.
    pub discretization_coefficient: f64,
}

impl Default for WeissParams {
    fn default() -> Self {
        WeissParams {
            quad: StripQuadrature::default(),
            nodes_per_interval: 4,
            floor_fraction: 0.125,
            discretization_coefficient: 1.0,
        }
    }
}

/// Evaluates `W = E - 2R` on a radius ladder, together with per-interval
/// increments and the `(Lu)²` dissipation they are bounded below by.
///
/// `heat` is the residual `Δu - ∂_t u` entering the correction; pass `None`
/// to derive it from `u` (discretely for gridded fields). The reported
/// budget combines quadrature budgets, correction-tail extrapolation, and —
/// for gridded input — a heuristic `C·(h² + τ)/r²` discretization term; it
/// is an error model, not a proven bound.
pub fn weiss_w(
    u: &ScalarField,
    heat: Option<&ScalarField>,
    radii: &[f64],
    params: &WeissParams,
) -> Result<WeissReport> {
    if radii.len() < 2 {
        return Err(Error::Precondition("the corrected energy needs at least two radii".into()));
    }
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if rs[0] <= 0.0 {
        return Err(Error::Precondition("radii must be positive".into()));
    }
    let dim = u.dim();
    let lu = homogeneity_operator(u);
    let derived_heat;
    let hu = match heat {
        Some(h) => h,
        None => {
            derived_heat = heat_residual(u);
            &derived_heat
        }
    };

    // Discretization heuristic for gridded input.
    let disc = u.as_grid().map(|gf| {
        let g = &gf.grid;
        params.discretization_coefficient * (g.h() * g.h() + g.tau())
    });

    // A sampled field's strip integrals must not band below its time step:
    // deeper slices only see the interpolation/solve noise floor, which the
    // 1/(-t) weight would misread as divergence.
    let mut quad = params.quad.clone();
    quad.t_floor_abs = quad.t_floor_abs.max(u.time_resolution());

    // Master node ladder for the correction integrals: floor → r_max,
    // log-spaced inside every interval, radii included exactly.
    let floor = rs[0] * params.floor_fraction;
    let mut nodes = vec![floor];
    let push_log_nodes = |from: f64, to: f64, count: usize, nodes: &mut Vec<f64>| {
        let lf = from.ln();
        let lt = to.ln();
        for i in 1..=count {
            nodes.push((lf + (lt - lf) * i as f64 / (count + 1) as f64).exp());
        }
        nodes.push(to);
    };
    push_log_nodes(floor, rs[0], 3 * params.nodes_per_interval, &mut nodes);
    for w in rs.windows(2) {
        push_log_nodes(w[0], w[1], params.nodes_per_interval, &mut nodes);
    }

    // g_R(s) = s⁻⁵ ∫_{S_s} Lu (1 - Hu) dγ and g_I(s) = s⁻⁵ ∫_{S_s} (Lu)² dγ̄.
    let mut g_r = Vec::with_capacity(nodes.len());
    let mut g_i = Vec::with_capacity(nodes.len());
    let mut g_budget = Vec::with_capacity(nodes.len());
    for &s in &nodes {
        let correction = integrate_strip(
            |x, t| lu.value(x, t) * (1.0 - hu.value(x, t)),
            dim,
            s,
            MeasureKind::Gamma,
            &quad,
        )?;
        let dissipation = integrate_strip(
            |x, t| {
                let v = lu.value(x, t);
                v * v
            },
            dim,
            s,
            MeasureKind::GammaBar,
            &quad,
        )?;
        let s5 = s.powi(5);
        g_r.push(correction.value / s5);
        g_i.push(dissipation.value / s5);
        g_budget.push((correction.budget + dissipation.budget) / s5);
    }

    // Tail of R below the floor by power extrapolation (exact for powers).
    let mut r_tail = 0.0;
    let mut r_tail_budget = 0.0;
    if g_r[0].abs() > 0.0 && g_r[1].abs() > 0.0 && g_r[0] * g_r[1] > 0.0 {
        let p = (g_r[1].abs().ln() - g_r[0].abs().ln()) / (nodes[1].ln() - nodes[0].ln());
        if p > -0.9 {
            r_tail = nodes[0] * g_r[0] / (p + 1.0);
            r_tail_budget = 0.5 * r_tail.abs();
        } else {
            r_tail_budget = (nodes[0] * g_r[0]).abs();
        }
    }

    // Cumulative trapezoids over the node ladder.
    let mut cum_r = vec![r_tail];
    let mut cum_i = vec![0.0];
    let mut cum_budget = vec![r_tail_budget];
    for i in 1..nodes.len() {
        let w = 0.5 * (nodes[i] - nodes[i - 1]);
        cum_r.push(cum_r[i - 1] + w * (g_r[i] + g_r[i - 1]));
        cum_i.push(cum_i[i - 1] + w * (g_i[i] + g_i[i - 1]));
        cum_budget.push(cum_budget[i - 1] + w * (g_budget[i] + g_budget[i - 1]));
    }

    let node_index = |r: f64| -> usize {
        nodes
            .iter()
            .position(|&s| (s - r).abs() <= 1e-12 * r)
            .expect("radius is a ladder node by construction")
    };

    let mut rows = Vec::with_capacity(rs.len());
    for &r in &rs {
        let e = weiss_energy(u, r, &quad)?;
        let idx = node_index(r);
        let correction = cum_r[idx];
        let mut budget = e.budget + 2.0 * cum_budget[idx];
        if let Some(d) = disc {
            budget += d / (r * r);
        }
        rows.push(WeissEvaluation {
            r,
            energy: e.value,
            correction,
            w: e.value - 2.0 * correction,
            budget,
        });
    }

    let mut increments = Vec::with_capacity(rs.len() - 1);
    for i in 1..rs.len() {
        let (a, b) = (node_index(rs[i - 1]), node_index(rs[i]));
        increments.push(WeissIncrement {
            r_from: rs[i - 1],
            r_to: rs[i],
            delta_w: rows[i].w - rows[i - 1].w,
            dissipation: cum_i[b] - cum_i[a],
            budget: rows[i].budget + rows[i - 1].budget,
        });
    }

    Ok(WeissReport { rows, increments })
}

/// L²(γ̄, S₁) distances between consecutive parabolic rescalings.
#[derive(Debug, Clone)]
pub struct BlowupReport {
    /// Radii in decreasing order.
    pub radii: Vec<f64>,
    /// `‖u_{r_k} - u_{r_{k+1}}‖` for consecutive radii.
    pub distances: Vec<f64>,
    pub tol: f64,
    pub converged: bool,
}

/// Compares the rescalings `u_r(x,t) = u(x₀+rx, t₀+r²t)/r²` along a radius
/// ladder; vanishing distances certify a unique blow-up limit.
pub fn blowup_sequence(
    u: &ScalarField,
    x0: &[f64],
    t0: f64,
    radii: &[f64],
    quad: &StripQuadrature,
    tol: f64,
) -> Result<BlowupReport> {
    if radii.len() < 2 {
        return Err(Error::Precondition("a blow-up sequence needs at least two radii".into()));
    }
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let dim = u.dim();
    let tau = u.time_resolution();
    let rescaled: Vec<ScalarField> = rs.iter().map(|&r| u.parabolic_rescale(x0, t0, r)).collect();
    let mut distances = Vec::with_capacity(rs.len() - 1);
    for (i, pair) in rescaled.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        // In the coordinates of u_r one time step of a sampled u spans
        // tau/r²; bands below that see only interpolation noise, which the
        // 1/(-t) weight would misread as divergence. The smaller radius of
        // the pair dominates.
        let mut q = quad.clone();
        q.t_floor_abs = q.t_floor_abs.max(tau / (rs[i + 1] * rs[i + 1]));
        let d2 = integrate_strip(
            |x, t| {
                let d = a.value(x, t) - b.value(x, t);
                d * d
            },
            dim,
            1.0,
            MeasureKind::GammaBar,
            &q,
        )?;
        distances.push(d2.value.max(0.0).sqrt());
    }
    let converged = distances.last().map(|&d| d < tol).unwrap_or(false);
    Ok(BlowupReport {
        radii: rs,
        distances,
        tol,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexClass {
    Zero,
    Regular,
    Singular,
    Unresolved,
}

#[derive(Debug, Clone)]
pub struct ClassificationResult {
    pub label: VertexClass,
    /// Extrapolated vertex energy.
    pub estimate: f64,
    pub samples: Vec<WeissEnergy>,
    /// Distance from the estimate to the matched level.
    pub gap: f64,
    pub gap_tol: f64,
    pub thresholds: Thresholds,
}

/// Classifies the vertex at `(x₀, t₀)` by the limiting energy.
///
/// Energies are computed on the translated solution normalized by `f₀ =
/// f(x₀, t₀)`, then extrapolated over the three smallest radii (Aitken-Δ²
/// when the differences allow it). A vertex further than `gap_tol` from
/// every calibration level is reported `Unresolved` rather than forced into
/// a class.
pub fn classify(
    u: &ScalarField,
    f0: f64,
    x0: &[f64],
    t0: f64,
    radii: &[f64],
    quad: &StripQuadrature,
    gap_tol: Option<f64>,
) -> Result<ClassificationResult> {
    if !(f0 > 0.0) {
        return Err(Error::Precondition(format!(
            "classification needs a positive forcing value at the vertex, got {f0}"
        )));
    }
    if radii.len() < 3 {
        return Err(Error::Precondition("classification needs at least three radii".into()));
    }
    let thresholds = calibrate_thresholds();
    let gap_tol = gap_tol.unwrap_or(0.1 * thresholds.regular);
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let v = u.translate(x0, t0).scaled(1.0 / f0);
    // The translation hides a sampled u behind a closure; keep its time
    // resolution as the band floor (translation does not rescale time).
    let mut q = quad.clone();
    q.t_floor_abs = q.t_floor_abs.max(u.time_resolution());
    let mut samples = Vec::with_capacity(rs.len());
    for &r in &rs {
        samples.push(weiss_energy(&v, r, &q)?);
    }
    // Aitken Δ² over the three smallest radii.
    let k = samples.len();
    let (e1, e2, e3) = (
        samples[k - 3].value,
        samples[k - 2].value,
        samples[k - 1].value,
    );
    let denom = e1 - 2.0 * e2 + e3;
    let estimate = if denom.abs() > 1e-14 * (e1.abs() + e2.abs() + e3.abs() + 1e-30) {
        let aitken = e3 - (e3 - e2) * (e3 - e2) / denom;
        // Guard against a wild extrapolation when the sequence is not
        // geometric: fall back to the innermost sample.
        if (aitken - e3).abs() <= (e2 - e3).abs() * 4.0 {
            aitken
        } else {
            e3
        }
    } else {
        e3
    };

    let levels = thresholds.levels();
    let labels = [VertexClass::Zero, VertexClass::Regular, VertexClass::Singular];
    let (mut label, mut gap) = (VertexClass::Unresolved, f64::INFINITY);
    for (lv, lb) in levels.iter().zip(labels) {
        let d = (estimate - lv).abs();
        if d < gap {
            gap = d;
            label = lb;
        }
    }
    if gap > gap_tol {
        label = VertexClass::Unresolved;
    }
    Ok(ClassificationResult {
        label,
        estimate,
        samples,
        gap,
        gap_tol,
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obstacle_solver::ExactProfile;
    use crate::singular::SingularPolynomial;
    use approx::assert_relative_eq;

    fn q32() -> StripQuadrature {
        StripQuadrature::with_h(1.0 / 32.0)
    }

    #[test]
    fn calibration_is_frozen() {
        let t = calibrate_thresholds();
        assert_eq!(t.levels(), [0.0, 0.25, 0.5]);
        assert_eq!(t.kappa, 30.0);
        assert_eq!(t.kappa * t.regular, 7.5);
        assert_eq!(t.kappa * t.singular, 15.0);
    }

    #[test]
    fn regular_profile_energy_matches_level_by_quadrature() {
        let u = ExactProfile::regular(&[1.0]).unwrap().field();
        let e = weiss_energy(&u, 1.0, &q32()).unwrap();
        assert_relative_eq!(e.value, 0.25, epsilon = 2e-5);
    }

    #[test]
    fn singular_profile_energies_match_level_by_quadrature() {
        // Three distinct normalized profiles, including a fully degenerate
        // Q and a pure-time one; all must sit at the same level 1/2.
        let fixtures: Vec<ScalarField> = vec![
            SingularPolynomial::from_rows(1, &[1.0], 0.0).unwrap().field(),
            SingularPolynomial::from_rows(1, &[0.0], -1.0).unwrap().field(),
            SingularPolynomial::from_rows(2, &[1.0, 0.0, 0.0, 0.0], 0.0)
                .unwrap()
                .field(),
        ];
        for u in fixtures {
            let e = weiss_energy(&u, 1.0, &q32()).unwrap();
            assert_relative_eq!(e.value, 0.5, epsilon = 5e-5);
        }
    }

    #[test]
    fn energy_is_scale_invariant_under_parabolic_rescaling() {
        // E(rs, u) = E(s, u_r) for any u, not only homogeneous ones.
        let p = Poly::from_terms(1, vec![(1.0, vec![4], 0), (0.3, vec![2], 1)]);
        let u = ScalarField::from_poly(&p);
        let (r, s) = (0.6, 0.8);
        let lhs = weiss_energy(&u, r * s, &q32()).unwrap().value;
        let ur = u.parabolic_rescale(&[0.0], 0.0, r);
        let rhs = weiss_energy(&ur, s, &q32()).unwrap().value;
        // The two sides discretize the same integral on different slice
        // grids, so they agree to quadrature accuracy, not bitwise.
        assert_relative_eq!(lhs, rhs, max_relative = 5e-5);
    }

    #[test]
    fn corrected_energy_is_constant_on_homogeneous_profiles() {
        // Lu ≡ 0 ⇒ R ≡ 0 and W(r) = E(r) = level at every radius.
        let p = SingularPolynomial::from_rows(1, &[1.0], 0.0).unwrap();
        let u = p.field();
        let hu = ScalarField::constant(1, 1.0);
        let report = weiss_w(&u, Some(&hu), &[0.25, 0.5, 1.0], &WeissParams {
            quad: q32(),
            ..Default::default()
        })
        .unwrap();
        for row in &report.rows {
            assert_relative_eq!(row.w, 0.5, epsilon = 1e-4);
            assert!(row.correction.abs() < 1e-10);
        }
        for inc in &report.increments {
            assert!(inc.delta_w >= -inc.budget, "increment {inc:?}");
            assert!(inc.dissipation.abs() < 1e-10);
        }
    }

    #[test]
    fn blowup_distances_vanish_for_exact_profiles() {
        let u = ExactProfile::regular(&[1.0]).unwrap().field();
        let report = blowup_sequence(&u, &[0.0], 0.0, &[0.4, 0.2, 0.1, 0.05], &q32(), 1e-12).unwrap();
        assert!(report.converged);
        for d in &report.distances {
            assert!(*d < 1e-12, "distance {d:.3e}");
        }
    }

    #[test]
    fn classify_recognizes_exact_profiles() {
        let radii = [0.4, 0.2, 0.1, 0.05];
        let sing = SingularPolynomial::from_rows(1, &[1.0], 0.0).unwrap().field();
        let got = classify(&sing, 1.0, &[0.0], 0.0, &radii, &q32(), None).unwrap();
        assert_eq!(got.label, VertexClass::Singular);
        assert!(got.gap < 1e-3);

        let reg = ExactProfile::regular(&[1.0]).unwrap().field();
        let got = classify(&reg, 1.0, &[0.0], 0.0, &radii, &q32(), None).unwrap();
        assert_eq!(got.label, VertexClass::Regular);

        let zero = ScalarField::constant(1, 0.0);
        let got = classify(&zero, 1.0, &[0.0], 0.0, &radii, &q32(), None).unwrap();
        assert_eq!(got.label, VertexClass::Zero);
    }
}
