use super::measure::{kernel_normalization, MeasureKind};
use crate::error::{Error, Result};
use crate::exec;

/// Knobs for Gaussian strip quadrature.
///
/// Time is integrated over geometric bands `[ratio·b, b]` descending from
/// `s = r²`, composite Simpson inside each band; the spatial integral on a
/// slice uses a symmetric uniform grid whose step shrinks with the Gaussian
/// width `√(2s)` (never coarser than `h`), so the kernel core stays resolved
/// arbitrarily close to the vertex. The strip below the innermost band is
/// estimated by geometric continuation of the band values — exact for pure
/// powers of `s` — and both that estimate and the embedded Simpson error are
/// reported in the budget.
#[derive(Debug, Clone)]
pub struct StripQuadrature {
    /// Coarsest spatial step.
    pub h: f64,
    /// Spatial truncation radius as a multiple of `r`.
    pub r_trunc_factor: f64,
    /// Absolute lower bound for the truncation radius (e.g. a box size).
    pub r_trunc_min: f64,
    /// Geometric ratio of consecutive time bands, in `(0, 1)`.
    pub band_ratio: f64,
    /// Innermost band edge as a fraction of `r²`.
    pub delta_min_factor: f64,
    /// Absolute lower bound on band edges, e.g. the time step of an
    /// interpolated field: slices below the resolution of the integrand
    /// carry no information, only its noise floor. Zero disables the bound;
    /// the omitted strip is extrapolated and budgeted as usual.
    pub t_floor_abs: f64,
    /// Simpson panels per band (even, >= 2).
    pub band_panels: usize,
}

impl Default for StripQuadrature {
    fn default() -> Self {
        StripQuadrature {
            h: 1.0 / 64.0,
            r_trunc_factor: 8.0,
            r_trunc_min: 0.0,
            band_ratio: 0.5,
            delta_min_factor: 1e-6,
            t_floor_abs: 0.0,
            band_panels: 4,
        }
    }
}

impl StripQuadrature {
    pub fn with_h(h: f64) -> Self {
        StripQuadrature {
            h,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::Config(format!("quadrature step must be positive, got {}", self.h)));
        }
        if !(self.band_ratio > 0.0 && self.band_ratio < 1.0) {
            return Err(Error::Config(format!(
                "band ratio must lie in (0,1), got {}",
                self.band_ratio
            )));
        }
        if !(self.delta_min_factor > 0.0 && self.delta_min_factor < 1.0) {
            return Err(Error::Config(format!(
                "innermost band fraction must lie in (0,1), got {}",
                self.delta_min_factor
            )));
        }
        if !(self.t_floor_abs >= 0.0 && self.t_floor_abs.is_finite()) {
            return Err(Error::Config(format!(
                "band floor must be finite and nonnegative, got {}",
                self.t_floor_abs
            )));
        }
        if self.band_panels < 2 || self.band_panels % 2 != 0 {
            return Err(Error::Config(format!(
                "band panels must be even and >= 2, got {}",
                self.band_panels
            )));
        }
        Ok(())
    }
}

/// Result of a strip integral with its error accounting.
#[derive(Debug, Clone)]
pub struct StripIntegral {
    /// Quadrature value including the continuation of the innermost strip.
    pub value: f64,
    /// Estimated contribution of the strip below the innermost band
    /// (already included in `value`).
    pub tail_estimate: f64,
    /// Error budget: embedded Simpson differences, a share of the tail
    /// estimate, and the measured boundary-ring truncation bound.
    pub budget: f64,
    /// Per-band contributions, outermost (s near r²) first.
    pub bands: Vec<f64>,
}

/// Maximum spatial nodes per slice before the request is rejected.
const MAX_SLICE_NODES: usize = 1 << 26;

/// One spatial slice: quadrature value plus its truncation budget.
#[derive(Clone, Copy)]
struct SliceEval {
    value: f64,
    /// Bound on the mass beyond the truncation window: the measured
    /// integrand magnitude on the outermost node ring, continued
    /// geometrically with the Gaussian decay per step.
    edge: f64,
}

/// Spatial integral of `f(·, -s) · G(·, s)` over one slice.
///
/// The grid step is `min(h, √(2s)/2)` — at least two nodes per Gaussian
/// standard deviation — and the window is `min(R_abs, 12·√(2s))`, inside
/// which uniform trapezoid (here: plain summation of a periodic-decaying
/// integrand) is spectrally accurate for Gaussian-weighted smooth factors.
fn slice_integral<F>(
    f: &F,
    dim: usize,
    s: f64,
    r_abs: f64,
    h: f64,
    kind: MeasureKind,
) -> Result<SliceEval>
where
    F: Fn(&[f64], f64) -> f64 + Sync,
{
    let sigma = (2.0 * s).sqrt();
    let hs = h.min(0.5 * sigma);
    let rs = r_abs.min(12.0 * sigma);
    let m = (rs / hs).ceil() as usize;
    let per_axis = 2 * m + 1;
    let nodes = per_axis.checked_pow(dim as u32).filter(|&n| n <= MAX_SLICE_NODES);
    let Some(node_count) = nodes else {
        return Err(Error::Precondition(format!(
            "slice quadrature would need {per_axis}^{dim} nodes; raise h or lower the truncation radius"
        )));
    };

    // Per-axis Gaussian factors e^{-x²/(4s)} at x = (j - m)·hs.
    let factors: Vec<f64> = (0..per_axis)
        .map(|j| {
            let x = (j as f64 - m as f64) * hs;
            (-x * x / (4.0 * s)).exp()
        })
        .collect();

    let t = -s;
    let sum = exec::sum_indexed(node_count, |idx| {
        let mut x = [0.0f64; 3];
        let mut weight = 1.0;
        let mut rem = idx;
        for a in (0..dim).rev() {
            let j = rem % per_axis;
            rem /= per_axis;
            x[a] = (j as f64 - m as f64) * hs;
            weight *= factors[j];
        }
        if weight == 0.0 {
            return 0.0;
        }
        weight * f(&x[..dim], t)
    });

    // Boundary-ring magnitude (faces of the window; corner overcount only
    // makes the budget safer).
    let mut ring = 0.0;
    let inner_count = per_axis.pow(dim as u32 - 1);
    let mut x = [0.0f64; 3];
    for a in 0..dim {
        for side in [0usize, per_axis - 1] {
            for idx in 0..inner_count {
                let mut rem = idx;
                let mut weight = 1.0;
                for b in (0..dim).rev() {
                    let j = if b == a {
                        side
                    } else {
                        let j = rem % per_axis;
                        rem /= per_axis;
                        j
                    };
                    x[b] = (j as f64 - m as f64) * hs;
                    weight *= factors[j];
                }
                if weight != 0.0 {
                    ring += (weight * f(&x[..dim], t)).abs();
                }
            }
        }
    }
    // Ratio between consecutive shells beyond the window: Gaussian decay
    // per step with headroom for polynomial growth of the integrand.
    let shell_ratio = ((-(rs * hs) / (2.0 * s)).exp() * (1.0 + hs / rs).powi(8)).min(0.95);

    let mut scale =
        kernel_normalization(dim) * s.powf(-(dim as f64) / 2.0) * hs.powi(dim as i32);
    if matches!(kind, MeasureKind::GammaBar) {
        scale /= s;
    }
    Ok(SliceEval {
        value: sum * scale,
        edge: ring * scale.abs() / (1.0 - shell_ratio),
    })
}

/// `∫_{S_r} f dμ` for `μ ∈ {γ, γ̄, γ^s}` with `S_r = ℝⁿ × (-r², 0]`.
///
/// `f` is the raw integrand *without* the Gaussian weight. Fails with
/// `NonIntegrable` when the band contributions refuse to decay toward the
/// final time, which is how a genuinely divergent `γ̄`-integral shows up.
pub fn integrate_strip<F>(
    f: F,
    dim: usize,
    r: f64,
    kind: MeasureKind,
    q: &StripQuadrature,
) -> Result<StripIntegral>
where
    F: Fn(&[f64], f64) -> f64 + Sync,
{
    q.validate()?;
    if !(r > 0.0) {
        return Err(Error::Precondition(format!("strip radius must be positive, got {r}")));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::Precondition(format!("strip quadrature supports dim 1..=3, got {dim}")));
    }
    let r_abs = (q.r_trunc_factor * r).max(q.r_trunc_min);

    if let MeasureKind::GammaSlice(s) = kind {
        let eval = slice_integral(&f, dim, s, r_abs, q.h, kind)?;
        return Ok(StripIntegral {
            value: eval.value,
            tail_estimate: 0.0,
            budget: eval.edge,
            bands: vec![eval.value],
        });
    }

    // Band edges r² = b_0 > b_1 > ... > b_K with b_K <= delta_min · r²,
    // but never below the absolute resolution floor (at least one band).
    let s_top = r * r;
    let floor = (q.delta_min_factor * s_top)
        .max(q.t_floor_abs)
        .min(s_top * q.band_ratio);
    let n_bands = (((floor / s_top).ln() / q.band_ratio.ln()).ceil() as usize).max(1);

    let mut bands = Vec::with_capacity(n_bands);
    let mut simpson_err = 0.0;
    let mut ring_budget = 0.0;
    let mut hi = s_top;
    let mut slice_hi = slice_integral(&f, dim, hi, r_abs, q.h, kind)?;
    for _ in 0..n_bands {
        let lo = hi * q.band_ratio;
        let panels = q.band_panels;
        let width = hi - lo;
        let step = width / panels as f64;
        // Node values lo..hi; the upper edge is shared with the previous band.
        let mut vals = Vec::with_capacity(panels + 1);
        let mut edges = Vec::with_capacity(panels + 1);
        for i in 0..=panels {
            let eval = if i == panels {
                slice_hi
            } else {
                slice_integral(&f, dim, lo + step * i as f64, r_abs, q.h, kind)?
            };
            vals.push(eval.value);
            edges.push(eval.edge);
        }
        let fine = composite_simpson(&vals, step);
        let coarse_vals: Vec<f64> = vals.iter().copied().step_by(2).collect();
        let coarse = composite_simpson(&coarse_vals, 2.0 * step);
        bands.push(fine);
        simpson_err += (fine - coarse).abs() / 15.0;
        ring_budget += composite_simpson(&edges, step);
        slice_hi = SliceEval { value: vals[0], edge: edges[0] };
        hi = lo;
    }

    let scale: f64 = bands.iter().map(|b| b.abs()).sum();
    let negligible = |b: f64| b.abs() <= 1e-14 * scale || scale == 0.0;
    // A plateau on a noise floor (interpolated fields stall near their solve
    // tolerance) is not divergence; only bands that hold a visible fraction
    // of the mass mean the integrand refuses to close against 1/(-t). The
    // stalled continuation is still charged to the budget below.
    let material = |b: f64| b.abs() > 1e-5 * scale;

    // Divergence: the innermost bands refuse to decay.
    if bands.len() >= 4 {
        let last4 = &bands[bands.len() - 4..];
        let stalled = last4
            .windows(2)
            .all(|w| w[1].abs() >= 0.97 * w[0].abs() && material(w[1]));
        if stalled {
            return Err(Error::NonIntegrable(format!(
                "band contributions near t = 0 do not decay (last bands {:?})",
                &last4
            )));
        }
    }

    // Geometric continuation of the omitted strip below the innermost band.
    let mut tail = 0.0;
    let mut tail_budget = 0.0;
    if let [.., prev, last] = bands[..] {
        if !negligible(last) && prev != 0.0 {
            let rho = last / prev;
            if rho > 0.0 && rho < 0.95 {
                tail = last * rho / (1.0 - rho);
                tail_budget = 0.25 * tail.abs();
            } else {
                // Sign changes or slow decay: do not extrapolate, only budget.
                tail_budget = last.abs();
            }
        }
    }

    let body: f64 = bands.iter().sum();
    let value = body + tail;
    let budget = simpson_err + tail_budget + ring_budget;
    Ok(StripIntegral {
        value,
        tail_estimate: tail,
        budget,
        bands,
    })
}

fn composite_simpson(vals: &[f64], step: f64) -> f64 {
    debug_assert!(vals.len() % 2 == 1 && vals.len() >= 3);
    let mut acc = vals[0] + vals[vals.len() - 1];
    for (i, v) in vals.iter().enumerate().skip(1).take(vals.len() - 2) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * step / 3.0
}

/// Gaussian boundary-tail weight `R^{α+β} ∫_R^∞ s^{n-3} e^{-s²/4} ds`.
///
/// This is the closed-form budget for what a truncated annulus at parabolic
/// distance `R` can contribute to a weighted integral of a profile of
/// degree `α` against a weight of degree `β`; it decays like a Gaussian in
/// `R` and is the quantity to quote when reporting truncation radii.
pub fn boundary_tail(alpha: f64, beta: f64, r_trunc: f64, dim: usize) -> Result<f64> {
    if !(r_trunc > 0.0) {
        return Err(Error::Precondition(format!(
            "tail bound needs a positive truncation radius, got {r_trunc}"
        )));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::Precondition(format!("tail bound supports dim 1..=3, got {dim}")));
    }
    // The integrand dies like e^{-s²/4}; 40 units past R it is below 1e-170.
    let panels = 20_000usize;
    let width = 40.0;
    let step = width / panels as f64;
    let g = |s: f64| s.powf(dim as f64 - 3.0) * (-s * s / 4.0).exp();
    let vals: Vec<f64> = (0..=panels).map(|i| g(r_trunc + step * i as f64)).collect();
    Ok(r_trunc.powf(alpha + beta) * composite_simpson(&vals, step))
}
