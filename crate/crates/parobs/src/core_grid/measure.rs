use crate::error::{Error, Result};

/// Normalization constant of the backward-in-time Gaussian weight.
///
/// With `c_n = (4π)^{-n/2}` every constant-time slice of the weight is a
/// probability density: `∫ G(x, s) dx = 1` for all `s > 0`. All internal
/// moment identities and calibration levels assume this convention.
pub fn kernel_normalization(dim: usize) -> f64 {
    (4.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0)
}

/// Backward heat kernel `G(x, s) = c_n s^{-n/2} exp(-|x|^2 / (4 s))`,
/// evaluated at time `t = -s` with `s > 0`.
pub fn heat_kernel(x: &[f64], s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Precondition(format!(
            "heat kernel needs s > 0 (time t = -s strictly before the vertex), got s = {s}"
        )));
    }
    let n = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok(kernel_normalization(x.len()) * s.powf(-n / 2.0) * (-r2 / (4.0 * s)).exp())
}

/// Which Gaussian-weighted measure an integral is taken against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind {
    /// `dγ = G(x, -t) dx dt` on a strip `ℝⁿ × (-r², 0]`.
    Gamma,
    /// `dγ̄ = G(x, -t) / (-t) dx dt`; the extra `1/(-t)` makes degree-2
    /// parabolic homogeneity the borderline integrable case.
    GammaBar,
    /// Fixed-time slice `dγ^s = G(x, s) dx` at `t = -s`.
    GammaSlice(f64),
}

/// A Gaussian-weighted measure of known kind and spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMeasure {
    pub kind: MeasureKind,
    pub dim: usize,
}

impl WeightedMeasure {
    pub fn new(kind: MeasureKind, dim: usize) -> Result<Self> {
        if let MeasureKind::GammaSlice(s) = kind {
            if !(s > 0.0) {
                return Err(Error::Precondition(format!(
                    "slice measure needs s > 0, got {s}"
                )));
            }
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::Precondition(format!(
                "measures are supported for dim 1..=3, got {dim}"
            )));
        }
        Ok(WeightedMeasure { kind, dim })
    }

    /// `c_n` for this dimension.
    pub fn normalization(&self) -> f64 {
        kernel_normalization(self.dim)
    }

    /// Pointwise density against `dx dt` (or `dx` for a slice) at `(x, t)`.
    pub fn weight(&self, x: &[f64], t: f64) -> Result<f64> {
        match self.kind {
            MeasureKind::Gamma => heat_kernel(x, -t),
            MeasureKind::GammaBar => Ok(heat_kernel(x, -t)? / (-t)),
            MeasureKind::GammaSlice(s) => heat_kernel(x, s),
        }
    }
}
