//! Closed-form fields from expression strings.
//!
//! Configuration files give initial data, boundary data and forcing as
//! expressions in the spatial variables `x1..xn` and time `t`, e.g.
//! `0.5*max(0, x1)^2` or `exp(-x1^2) * (1 + t)`. Parsing happens once; the
//! compiled expression is evaluated with a fresh variable binding per call.

use meval::{Context, Expr};

use crate::core_grid::ScalarField;
use crate::error::{Error, Result};

/// Compiles `text` into a closed-form field in `dim` variables plus `t`.
///
/// Derivatives of expression fields use finite differences; supply analytic
/// fields through the library API when derivative accuracy matters.
pub fn parse_field(text: &str, dim: usize) -> Result<ScalarField> {
    let expr: Expr = text
        .parse()
        .map_err(|e| Error::Config(format!("cannot parse expression `{text}`: {e}")))?;

    // Fail now, not at first evaluation: bind every variable and try a point.
    probe(&expr, text, dim)?;

    let text_owned = text.to_string();
    Ok(ScalarField::closed(dim, move |x, t| {
        let mut ctx = Context::new();
        for (a, &xi) in x.iter().enumerate() {
            ctx.var(format!("x{}", a + 1), xi);
        }
        ctx.var("t", t);
        expr.eval_with_context(ctx).unwrap_or_else(|e| {
            panic!("expression `{text_owned}` failed at x={x:?}, t={t}: {e}")
        })
    }))
}

fn probe(expr: &Expr, text: &str, dim: usize) -> Result<()> {
    let mut ctx = Context::new();
    for a in 0..dim {
        ctx.var(format!("x{}", a + 1), 0.1 + 0.1 * a as f64);
    }
    ctx.var("t", -0.5);
    expr.eval_with_context(ctx).map_err(|e| {
        Error::Config(format!(
            "expression `{text}` is not evaluable in x1..x{dim}, t: {e}"
        ))
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_profile_expression() {
        let f = parse_field("0.5*max(0, x1)^2", 1).unwrap();
        assert_relative_eq!(f.value(&[0.4], -0.1), 0.08, max_relative = 1e-12);
        assert_eq!(f.value(&[-0.4], -0.1), 0.0);
    }

    #[test]
    fn binds_all_variables() {
        let f = parse_field("x1*x2 - 2*t", 2).unwrap();
        assert_relative_eq!(f.value(&[3.0, 4.0], -0.5), 13.0, max_relative = 1e-12);
    }

    #[test]
    fn rejects_unknown_variables() {
        assert!(parse_field("x3 + 1", 2).is_err());
        assert!(parse_field("nope(", 1).is_err());
    }
}
