use super::measure::MeasureKind;
use crate::error::{Error, Result};

/// Closed-form Gaussian moments on slices and strips.
///
/// On the slice `t = -s` the weight is a centered Gaussian with variance
/// `2s` per axis, so `∫ x^{2k} dγ^s = (2k-1)!! (2s)^k` and odd moments
/// vanish. Monomials `x^α t^β` integrate over the strip `S_r` in closed form
/// because the slice moment is a pure power of `s`; these exact values are
/// the reference every quadrature routine is tested against.
pub struct MomentOracle;

/// `(2k-1)!! = 1, 1, 3, 15, 105, ...` (empty product for `k = 0`).
pub fn double_factorial_odd(k: u32) -> f64 {
    (0..k).map(|j| (2 * j + 1) as f64).product()
}

impl MomentOracle {
    /// `∫ x^{2k} dγ^s` along one axis.
    pub fn gaussian_even_moment(k: u32, s: f64) -> f64 {
        double_factorial_odd(k) * (2.0 * s).powi(k as i32)
    }

    /// `∫ x^α dγ^s` over the slice at `t = -s`; zero when any `α_i` is odd.
    pub fn slice_moment(alpha: &[u32], s: f64) -> f64 {
        let mut out = 1.0;
        for &a in alpha {
            if a % 2 == 1 {
                return 0.0;
            }
            out *= Self::gaussian_even_moment(a / 2, s);
        }
        out
    }

    /// Coefficient `C` and power `K` with `∫ x^α dγ^s = C s^K`.
    fn slice_power(alpha: &[u32]) -> Option<(f64, u32)> {
        let mut coeff = 1.0;
        let mut pow = 0u32;
        for &a in alpha {
            if a % 2 == 1 {
                return None;
            }
            let k = a / 2;
            coeff *= double_factorial_odd(k) * 2f64.powi(k as i32);
            pow += k;
        }
        Some((coeff, pow))
    }

    /// `∫_{S_r} x^α t^β dμ` for `μ ∈ {γ, γ̄}`, or the slice moment for a
    /// slice measure (where `t = -s` is fixed).
    ///
    /// Against `γ̄` the constant monomial (`α = 0`, `β = 0`) carries a
    /// logarithmic singularity at `t = 0` and is rejected as non-integrable.
    pub fn strip_moment(alpha: &[u32], beta: u32, r: f64, kind: MeasureKind) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Precondition(format!(
                "strip radius must be positive, got {r}"
            )));
        }
        let sign = if beta % 2 == 0 { 1.0 } else { -1.0 };
        match kind {
            MeasureKind::GammaSlice(s) => {
                Ok(sign * s.powi(beta as i32) * Self::slice_moment(alpha, s))
            }
            MeasureKind::Gamma => {
                let Some((coeff, pow)) = Self::slice_power(alpha) else {
                    return Ok(0.0);
                };
                let p = (beta + pow + 1) as i32;
                Ok(sign * coeff * r.powi(2 * p) / p as f64)
            }
            MeasureKind::GammaBar => {
                let Some((coeff, pow)) = Self::slice_power(alpha) else {
                    return Ok(0.0);
                };
                let p = beta + pow;
                if p == 0 {
                    return Err(Error::NonIntegrable(
                        "constant monomial against the 1/(-t)-weighted strip measure".into(),
                    ));
                }
                Ok(sign * coeff * r.powi(2 * p as i32) / p as f64)
            }
        }
    }

    /// One-axis half-line moment `∫ (x⁺)^{2k} dγ^s = ½ ∫ x^{2k} dγ^s`.
    pub fn gaussian_even_half_moment(k: u32, s: f64) -> f64 {
        0.5 * Self::gaussian_even_moment(k, s)
    }
}

/// The four strip moments that control the almost-monotonicity argument at
/// singular points, normalized by the common factor `∫_{S_1} (-t) dγ = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentConstants {
    /// `∫_{S_1} x_1^4 / (-t) dγ`, normalized.
    pub a: f64,
    /// `∫_{S_1} x_1^2 x_2^2 / (-t) dγ`, normalized.
    pub b: f64,
    /// `∫_{S_1} t x_1^2 / (-t) dγ`, normalized.
    pub c: f64,
    /// `∫_{S_1} t^2 / (-t) dγ`, normalized.
    pub d: f64,
}

impl MomentConstants {
    /// The combination that must vanish for the quadratic form in the
    /// monotonicity proof to be positive semi-definite.
    pub fn identity_residual(&self) -> f64 {
        self.b / 4.0 + self.c + self.d
    }
}

/// Computes the normalized moment quadruple `(a, b, c, d) = (12, 4, -2, 1)`
/// from the closed-form oracle and checks `b/4 + c + d = 0` exactly.
pub fn moment_constants() -> MomentConstants {
    let bar = MeasureKind::GammaBar;
    let norm = -MomentOracle::strip_moment(&[], 1, 1.0, MeasureKind::Gamma).unwrap();
    let a = MomentOracle::strip_moment(&[4], 0, 1.0, bar).unwrap() / norm;
    let b = MomentOracle::strip_moment(&[2, 2], 0, 1.0, bar).unwrap() / norm;
    let c = MomentOracle::strip_moment(&[2], 1, 1.0, bar).unwrap() / norm;
    let d = MomentOracle::strip_moment(&[], 2, 1.0, bar).unwrap() / norm;
    let constants = MomentConstants { a, b, c, d };
    // All four values are dyadic rationals, so the identity holds exactly.
    assert_eq!(constants.identity_residual(), 0.0);
    constants
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_even_moments_match_hand_values() {
        // Dyadic s so the comparison is exact, not up to rounding.
        let s = 0.75;
        assert_eq!(MomentOracle::gaussian_even_moment(0, s), 1.0);
        assert_eq!(MomentOracle::gaussian_even_moment(1, s), 2.0 * s);
        assert_eq!(MomentOracle::gaussian_even_moment(2, s), 12.0 * s * s);
        assert_eq!(MomentOracle::gaussian_even_moment(3, s), 50.625);
        assert_eq!(MomentOracle::gaussian_even_moment(4, s), 531.5625);
    }

    #[test]
    fn mixed_slice_moment_factorizes() {
        let s = 0.25;
        // ∫ x1² x2² dγ^s = (2s)².
        assert_eq!(MomentOracle::slice_moment(&[2, 2], s), 4.0 * s * s);
        assert_eq!(MomentOracle::slice_moment(&[1, 2], s), 0.0);
    }

    #[test]
    fn normalized_constants_are_frozen() {
        let m = moment_constants();
        assert_eq!(m.a, 12.0);
        assert_eq!(m.b, 4.0);
        assert_eq!(m.c, -2.0);
        assert_eq!(m.d, 1.0);
        assert_eq!(m.identity_residual(), 0.0);
    }

    #[test]
    fn gamma_strip_moment_scales_parabolically() {
        // ∫_{S_r} x1² dγ = 2 ∫_0^{r²} s ds = r⁴.
        let v = MomentOracle::strip_moment(&[2], 0, 0.5, MeasureKind::Gamma).unwrap();
        assert_eq!(v, 0.5f64.powi(4));
        // ∫_{S_r} t² dγ = r⁶/3.
        let v = MomentOracle::strip_moment(&[], 2, 2.0, MeasureKind::Gamma).unwrap();
        assert!((v - 64.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn gamma_bar_rejects_constant() {
        assert!(MomentOracle::strip_moment(&[], 0, 1.0, MeasureKind::GammaBar).is_err());
        assert!(MomentOracle::strip_moment(&[0, 0], 0, 1.0, MeasureKind::GammaBar).is_err());
    }
}
