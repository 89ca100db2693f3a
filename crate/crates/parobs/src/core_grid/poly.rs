use std::collections::BTreeMap;

use super::measure::MeasureKind;
use super::moments::MomentOracle;
use crate::error::Result;

/// Space-time polynomial `Σ c · x^α t^β` in canonical form (terms sorted,
/// like terms merged, zero coefficients dropped).
///
/// Polynomials are the exactly-integrable test class: strip and slice
/// integrals reduce to [`MomentOracle`] calls, and the differential
/// operators used throughout (`∇`, `∂_t`, heat operator, parabolic scaling
/// operator) act on them symbolically. Fixtures built from `Poly` therefore
/// have independently known energies, norms and projections.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    dim: usize,
    terms: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub powers: Vec<u32>,
    pub tpow: u32,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Poly { dim, terms: vec![] }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Poly::from_terms(dim, vec![(c, vec![0; dim], 0)])
    }

    pub fn monomial(dim: usize, coeff: f64, powers: Vec<u32>, tpow: u32) -> Self {
        assert_eq!(powers.len(), dim, "monomial powers must match dimension");
        Poly::from_terms(dim, vec![(coeff, powers, tpow)])
    }

    pub fn from_terms(dim: usize, terms: Vec<(f64, Vec<u32>, u32)>) -> Self {
        let mut map: BTreeMap<(Vec<u32>, u32), f64> = BTreeMap::new();
        for (c, powers, tpow) in terms {
            assert_eq!(powers.len(), dim, "term powers must match dimension");
            *map.entry((powers, tpow)).or_insert(0.0) += c;
        }
        let terms = map
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|((powers, tpow), coeff)| Term {
                coeff,
                powers,
                tpow,
            })
            .collect();
        Poly { dim, terms }
    }

    /// `½ xᵀ Q x + m t` for a symmetric matrix given in row-major order.
    pub fn from_quadratic(q: &[f64], dim: usize, m: f64) -> Self {
        assert_eq!(q.len(), dim * dim);
        let mut terms = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                let mut powers = vec![0u32; dim];
                powers[i] += 1;
                powers[j] += 1;
                terms.push((0.5 * q[i * dim + j], powers, 0));
            }
        }
        terms.push((m, vec![0; dim], 1));
        Poly::from_terms(dim, terms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        self.terms
            .iter()
            .map(|term| {
                let mut v = term.coeff;
                for (xi, &p) in x.iter().zip(&term.powers) {
                    v *= xi.powi(p as i32);
                }
                v * t.powi(term.tpow as i32)
            })
            .sum()
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let terms = self
            .terms
            .iter()
            .chain(&other.terms)
            .map(|t| (t.coeff, t.powers.clone(), t.tpow))
            .collect();
        Poly::from_terms(self.dim, terms)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> Poly {
        let terms = self
            .terms
            .iter()
            .map(|t| (t.coeff * c, t.powers.clone(), t.tpow))
            .collect();
        Poly::from_terms(self.dim, terms)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let powers = a
                    .powers
                    .iter()
                    .zip(&b.powers)
                    .map(|(&p, &q)| p + q)
                    .collect();
                terms.push((a.coeff * b.coeff, powers, a.tpow + b.tpow));
            }
        }
        Poly::from_terms(self.dim, terms)
    }

    pub fn partial_x(&self, axis: usize) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.powers[axis] > 0)
            .map(|t| {
                let mut powers = t.powers.clone();
                powers[axis] -= 1;
                (t.coeff * t.powers[axis] as f64, powers, t.tpow)
            })
            .collect();
        Poly::from_terms(self.dim, terms)
    }

    pub fn partial_t(&self) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.tpow > 0)
            .map(|t| (t.coeff * t.tpow as f64, t.powers.clone(), t.tpow - 1))
            .collect();
        Poly::from_terms(self.dim, terms)
    }

    pub fn gradient(&self) -> Vec<Poly> {
        (0..self.dim).map(|a| self.partial_x(a)).collect()
    }

    pub fn laplacian(&self) -> Poly {
        let mut out = Poly::zero(self.dim);
        for a in 0..self.dim {
            out = out.add(&self.partial_x(a).partial_x(a));
        }
        out
    }

    /// Heat operator `Δp - ∂_t p`.
    pub fn heat(&self) -> Poly {
        self.laplacian().sub(&self.partial_t())
    }

    /// Parabolic scaling generator `x·∇p + 2t ∂_t p - 2p`; vanishes exactly
    /// on parabolically 2-homogeneous polynomials.
    pub fn scaling_generator(&self) -> Poly {
        let mut out = Poly::zero(self.dim);
        for a in 0..self.dim {
            let mut powers = vec![0u32; self.dim];
            powers[a] = 1;
            let xa = Poly::monomial(self.dim, 1.0, powers, 0);
            out = out.add(&xa.mul(&self.partial_x(a)));
        }
        let t = Poly::monomial(self.dim, 2.0, vec![0; self.dim], 1);
        out = out.add(&t.mul(&self.partial_t()));
        out.sub(&self.scale(2.0))
    }

    /// Exact `∫_{S_r} p dμ` via the moment oracle.
    pub fn strip_integral(&self, r: f64, kind: MeasureKind) -> Result<f64> {
        let mut total = 0.0;
        for term in &self.terms {
            total += term.coeff * MomentOracle::strip_moment(&term.powers, term.tpow, r, kind)?;
        }
        Ok(total)
    }

    /// Exact `∫_{S_r} |∇p|² dμ`.
    pub fn gradient_square_integral(&self, r: f64, kind: MeasureKind) -> Result<f64> {
        let mut total = 0.0;
        for g in self.gradient() {
            total += g.mul(&g).strip_integral(r, kind)?;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x1sq_plus_t(dim: usize) -> Poly {
        // ½ x1² + t: caloric, 2-homogeneous.
        let mut powers = vec![0u32; dim];
        powers[0] = 2;
        Poly::from_terms(dim, vec![(0.5, powers, 0), (1.0, vec![0; dim], 1)])
    }

    #[test]
    fn scaling_generator_kills_homogeneous_quadratics() {
        let p = x1sq_plus_t(2);
        assert!(p.scaling_generator().is_zero());
        // x1³ is an eigenfunction with eigenvalue 1.
        let c = Poly::monomial(1, 1.0, vec![3], 0);
        assert_eq!(c.scaling_generator(), c);
    }

    #[test]
    fn heat_operator_matches_hand_computation() {
        let p = x1sq_plus_t(3);
        // Δ(½x1²) = 1, ∂_t(t) = 1 → heat = 0.
        assert!(p.heat().is_zero());
        let q = Poly::monomial(1, 1.0, vec![4], 0);
        assert_eq!(q.heat(), Poly::monomial(1, 12.0, vec![2], 0));
    }

    #[test]
    fn strip_integral_agrees_with_oracle_composition() {
        // p = x1² - 3t over S_r against γ: ∫x1² = r⁴, ∫t = -r⁴/2.
        let p = Poly::from_terms(1, vec![(1.0, vec![2], 0), (-3.0, vec![0], 1)]);
        let v = p.strip_integral(0.7, MeasureKind::Gamma).unwrap();
        let r4 = 0.7f64.powi(4);
        assert!((v - (r4 + 1.5 * r4)).abs() < 1e-15);
    }

    #[test]
    fn canonical_form_merges_terms() {
        let p = Poly::from_terms(2, vec![(1.0, vec![1, 1], 0), (2.0, vec![1, 1], 0)]);
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].coeff, 3.0);
        let q = p.sub(&p);
        assert!(q.is_zero());
    }
}
