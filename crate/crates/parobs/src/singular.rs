//! The singular stratum: polynomial cone, projection, frequency scans,
//! stratification and tangent diagnostics.
//!
//! Blow-ups at singular vertices live in the convex cone of normalized
//! caloric polynomials `P = ½xᵀQx + mt` with `Q ⪰ 0`, `m ∈ [-1, 0]` and
//! `tr Q - m = 1`. Everything in this module measures how a solution sits
//! relative to that cone: the Gaussian distance `N` and its running sup,
//! the frequency-type minorant for `N̄`, the eigenvalue stratification of
//! the vertex set, and the flatness ratios behind its graph structure.

use crate::core_grid::{
    integrate_strip, MeasureKind, Poly, ScalarField, StripQuadrature,
};
use crate::error::{Error, Result};
use crate::modulus;
use crate::sym::SymMat;
use crate::weiss::homogeneity_operator;

const CONE_TOL: f64 = 1e-12;

/// A normalized 2-homogeneous caloric polynomial `½xᵀQx + mt` with
/// `Q ⪰ 0`, `m ∈ [-1, 0]` and `tr Q - m = 1`.
///
/// These are exactly the blow-up profiles at singular vertices; the trace
/// identity makes each of them solve `Δp - ∂_t p = 1`.
#[derive(Debug, Clone)]
pub struct SingularPolynomial {
    q: SymMat,
    m: f64,
}

impl SingularPolynomial {
    pub fn new(q: SymMat, m: f64) -> Result<Self> {
        let eig = q.eigen();
        if eig.values[0] < -CONE_TOL {
            return Err(Error::Precondition(format!(
                "quadratic part must be positive semidefinite, found eigenvalue {:+.3e}",
                eig.values[0]
            )));
        }
        if !(-1.0 - CONE_TOL..=CONE_TOL).contains(&m) {
            return Err(Error::Precondition(format!(
                "time slope must lie in [-1, 0], got {m}"
            )));
        }
        let defect = q.trace() - m - 1.0;
        if defect.abs() > CONE_TOL {
            return Err(Error::Precondition(format!(
                "normalization tr Q - m = 1 violated by {defect:+.3e}"
            )));
        }
        Ok(SingularPolynomial { q, m })
    }

    /// Builds from a row-major symmetric matrix (symmetrized if needed).
    pub fn from_rows(dim: usize, rows: &[f64], m: f64) -> Result<Self> {
        Self::new(SymMat::from_rows(dim, rows)?, m)
    }

    pub fn dim(&self) -> usize {
        self.q.n()
    }

    pub fn q(&self) -> &SymMat {
        &self.q
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// Eigenvalues of the quadratic part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.q.eigen().values
    }

    pub fn poly(&self) -> Poly {
        Poly::from_quadratic(self.q.rows(), self.dim(), self.m)
    }

    pub fn field(&self) -> ScalarField {
        ScalarField::from_poly(&self.poly())
    }
}

/// Caloric quadratic basis spanning the affine slice `{tr Q - m = 1}`.
///
/// Coordinates `θ` map isometrically onto the quadratic part:
/// `θ_ii = q_ii ↔ ½x_i² + t` and `θ_ij = √2 q_ij ↔ x_i x_j / √2` for
/// `i < j`, with offset `-t`; Frobenius distance in `Q` equals Euclidean
/// distance in `θ`, so the cone projection of `Q` is the feasible-set
/// projection of `θ`.
fn caloric_basis(dim: usize) -> Vec<Poly> {
    let mut basis = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        let mut powers = vec![0u32; dim];
        powers[i] = 2;
        basis.push(Poly::from_terms(
            dim,
            vec![(0.5, powers, 0), (1.0, vec![0; dim], 1)],
        ));
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut powers = vec![0u32; dim];
            powers[i] = 1;
            powers[j] = 1;
            basis.push(Poly::from_terms(dim, vec![(inv_sqrt2, powers, 0)]));
        }
    }
    basis
}

fn theta_to_sym(dim: usize, theta: &[f64]) -> SymMat {
    let mut q = SymMat::zeros(dim);
    for i in 0..dim {
        q.set(i, i, theta[i]);
    }
    let mut k = dim;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        for j in (i + 1)..dim {
            q.set(i, j, theta[k] * inv_sqrt2);
            k += 1;
        }
    }
    q
}

fn sym_to_theta(q: &SymMat) -> Vec<f64> {
    let n = q.n();
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut theta = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        theta.push(q.get(i, i));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            theta.push(q.get(i, j) * sqrt2);
        }
    }
    theta
}

/// Result of projecting a field onto the polynomial cone at one radius.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub polynomial: SingularPolynomial,
    /// `(ρ⁻⁴ ∫_{S_ρ} (u - P)² dγ̄)^{1/2}` at the minimizer.
    pub n_value: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// Least-squares projector onto the singular cone at a fixed radius.
///
/// Minimizes `∫_{S_ρ} (u - P)² dγ̄` over the cone by projected gradient in
/// the isometric `θ`-coordinates; the feasible-set projection is the exact
/// Frobenius projection onto `{Q ⪰ 0, tr Q ≤ 1}` (eigenvalue floor plus
/// water-filling), so iterates stay feasible and the quadratic objective
/// gives a linear rate. The Gram matrix of the caloric basis is `ρ⁴·I`
/// under `γ̄` — the basis is orthogonal — so in exact arithmetic the solve
/// lands in one step.
#[derive(Debug, Clone)]
pub struct PsingProjector {
    dim: usize,
    rho: f64,
    basis: Vec<Poly>,
    offset: Poly,
    gram: Vec<f64>,
    lipschitz: f64,
    pub kkt_tol: f64,
    pub max_iterations: usize,
}

impl PsingProjector {
    pub fn new(dim: usize, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::Precondition("projection radius must be positive".into()));
        }
        if !(1..=3).contains(&dim) {
            return Err(Error::Precondition(format!(
                "projection supports dimensions 1..=3, got {dim}"
            )));
        }
        let basis = caloric_basis(dim);
        let offset = Poly::from_terms(dim, vec![(-1.0, vec![0; dim], 1)]);
        let d = basis.len();
        let mut gram = vec![0.0; d * d];
        for a in 0..d {
            for b in a..d {
                let v = basis[a]
                    .mul(&basis[b])
                    .strip_integral(rho, MeasureKind::GammaBar)?;
                gram[a * d + b] = v;
                gram[b * d + a] = v;
            }
        }
        let lipschitz = SymMat::from_rows(d, &gram)?.max_eigenvalue();
        Ok(PsingProjector {
            dim,
            rho,
            basis,
            offset,
            gram,
            lipschitz,
            kkt_tol: 1e-9,
            max_iterations: 100_000,
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Projects a polynomial; moments are exact, so the residual norm is
    /// computed without cancellation (zero residual is exactly zero).
    pub fn project_poly(&self, u: &Poly) -> Result<ProjectionResult> {
        let w = u.sub(&self.offset);
        let mut beta = Vec::with_capacity(self.basis.len());
        for b in &self.basis {
            beta.push(w.mul(b).strip_integral(self.rho, MeasureKind::GammaBar)?);
        }
        let (theta, iterations, kkt_residual) = self.solve(&beta)?;
        let polynomial = self.decode(&theta)?;
        let resid = u.sub(&polynomial.poly());
        let n2 = resid
            .mul(&resid)
            .strip_integral(self.rho, MeasureKind::GammaBar)?;
        Ok(ProjectionResult {
            polynomial,
            n_value: (n2.max(0.0) / self.rho.powi(4)).sqrt(),
            iterations,
            kkt_residual,
        })
    }

    /// Projects a general field; inner products and the residual norm come
    /// from strip quadrature.
    pub fn project_field(
        &self,
        u: &ScalarField,
        quad: &StripQuadrature,
    ) -> Result<ProjectionResult> {
        if u.dim() != self.dim {
            return Err(Error::Precondition(format!(
                "field dimension {} does not match projector dimension {}",
                u.dim(),
                self.dim
            )));
        }
        // Sampled fields: keep the γ̄ bands at or above the time step.
        let mut quad = quad.clone();
        quad.t_floor_abs = quad.t_floor_abs.max(u.time_resolution());
        let mut beta = Vec::with_capacity(self.basis.len());
        for b in &self.basis {
            let v = integrate_strip(
                |x, t| (u.value(x, t) + t) * b.eval(x, t),
                self.dim,
                self.rho,
                MeasureKind::GammaBar,
                &quad,
            )?;
            beta.push(v.value);
        }
        let (theta, iterations, kkt_residual) = self.solve(&beta)?;
        let polynomial = self.decode(&theta)?;
        let p = polynomial.poly();
        let n2 = integrate_strip(
            |x, t| {
                let d = u.value(x, t) - p.eval(x, t);
                d * d
            },
            self.dim,
            self.rho,
            MeasureKind::GammaBar,
            &quad,
        )?;
        Ok(ProjectionResult {
            polynomial,
            n_value: (n2.value.max(0.0) / self.rho.powi(4)).sqrt(),
            iterations,
            kkt_residual,
        })
    }

    fn decode(&self, theta: &[f64]) -> Result<SingularPolynomial> {
        let mut q = theta_to_sym(self.dim, theta);
        // The iterate is feasible up to the solver tolerance; snap the tiny
        // violations so the cone validation stays strict.
        let eig = q.eigen();
        let snapped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
        q = eig.reassemble(&snapped);
        let m = (q.trace() - 1.0).clamp(-1.0, 0.0);
        SingularPolynomial::new(q, m)
    }

    /// Projected gradient on `J(θ) = θᵀGθ - 2βᵀθ + const`.
    fn solve(&self, beta: &[f64]) -> Result<(Vec<f64>, usize, f64)> {
        let d = beta.len();
        let step = 1.0 / self.lipschitz;
        let scale = self.rho.powi(4);
        let mut theta = vec![0.0; d];
        for it in 0..self.max_iterations {
            let mut next = vec![0.0; d];
            for a in 0..d {
                let mut g = -beta[a];
                for b in 0..d {
                    g += self.gram[a * d + b] * theta[b];
                }
                next[a] = theta[a] - step * g;
            }
            let projected = sym_to_theta(
                &theta_to_sym(self.dim, &next).project_psd_trace_capped(1.0),
            );
            let moved: f64 = projected
                .iter()
                .zip(&theta)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let kkt = moved * self.lipschitz / scale;
            theta = projected;
            if kkt <= self.kkt_tol {
                return Ok((theta, it + 1, kkt));
            }
        }
        Err(Error::Convergence {
            what: "cone projection gradient mapping".into(),
            residual: f64::NAN,
            iterations: self.max_iterations,
        })
    }
}

/// Brute-force cross-check of [`PsingProjector`] over diagonal matrices.
///
/// Scans `Q = diag(q)` with `q_i ∈ {0, step, 2·step, …}`, `Σq_i ≤ 1` and
/// `m = Σq_i - 1`, evaluating the exact quadratic objective at every grid
/// point; ties resolve to the lexicographically first grid point. Only
/// meaningful when the true minimizer is diagonal.
pub fn diagonal_oracle(u: &Poly, rho: f64, step: f64) -> Result<(SingularPolynomial, f64)> {
    let dim = u.dim();
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::Precondition(format!("oracle step must be in (0, 0.5], got {step}")));
    }
    let basis = caloric_basis(dim);
    let offset = Poly::from_terms(dim, vec![(-1.0, vec![0; dim], 1)]);
    let w = u.sub(&offset);
    // Only the diagonal coordinates can be active on a diagonal grid.
    let mut beta = Vec::with_capacity(dim);
    let mut gram = vec![0.0; dim * dim];
    for a in 0..dim {
        beta.push(w.mul(&basis[a]).strip_integral(rho, MeasureKind::GammaBar)?);
        for b in a..dim {
            let v = basis[a]
                .mul(&basis[b])
                .strip_integral(rho, MeasureKind::GammaBar)?;
            gram[a * dim + b] = v;
            gram[b * dim + a] = v;
        }
    }
    let c = w.mul(&w).strip_integral(rho, MeasureKind::GammaBar)?;
    let levels = (1.0 / step).round() as usize;

    let mut best_q = vec![0.0; dim];
    let mut best_j = f64::INFINITY;
    let mut q = vec![0.0; dim];
    scan_diagonal(
        dim,
        levels,
        step,
        &mut q,
        0,
        levels,
        &mut |q: &[f64]| {
            let mut j = c;
            for a in 0..dim {
                j -= 2.0 * beta[a] * q[a];
                for b in 0..dim {
                    j += gram[a * dim + b] * q[a] * q[b];
                }
            }
            if j < best_j {
                best_j = j;
                best_q.copy_from_slice(q);
            }
        },
    );

    let mut qm = SymMat::zeros(dim);
    for (i, &v) in best_q.iter().enumerate() {
        qm.set(i, i, v);
    }
    let m = (best_q.iter().sum::<f64>() - 1.0).clamp(-1.0, 0.0);
    let polynomial = SingularPolynomial::new(qm, m)?;
    let resid = u.sub(&polynomial.poly());
    let n2 = resid.mul(&resid).strip_integral(rho, MeasureKind::GammaBar)?;
    Ok((polynomial, (n2.max(0.0) / rho.powi(4)).sqrt()))
}

fn scan_diagonal(
    dim: usize,
    levels: usize,
    step: f64,
    q: &mut Vec<f64>,
    axis: usize,
    budget: usize,
    visit: &mut impl FnMut(&[f64]),
) {
    if axis == dim {
        visit(q);
        return;
    }
    for k in 0..=budget {
        q[axis] = k as f64 * step;
        scan_diagonal(dim, levels, step, q, axis + 1, budget - k, visit);
    }
    q[axis] = 0.0;
}

/// One radius of the cone-distance scan.
#[derive(Debug, Clone)]
pub struct ConeDistanceRow {
    pub rho: f64,
    /// Distance at this radius.
    pub n_value: f64,
    /// Running supremum over all radii up to this one.
    pub sup_value: f64,
    pub polynomial: SingularPolynomial,
}

/// Cone distance `N(ρ)` on an ascending ladder together with its running
/// supremum `M(ρ) = sup_{r ≤ ρ} N(r)`; the sup is the quantity the decay
/// machinery controls.
pub fn cone_distance_curve(
    u: &ScalarField,
    radii: &[f64],
    quad: &StripQuadrature,
) -> Result<Vec<ConeDistanceRow>> {
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut rows = Vec::with_capacity(rs.len());
    let mut sup = 0.0f64;
    for &rho in &rs {
        let projector = PsingProjector::new(u.dim(), rho)?;
        let got = projector.project_field(u, quad)?;
        sup = sup.max(got.n_value);
        rows.push(ConeDistanceRow {
            rho,
            n_value: got.n_value,
            sup_value: sup,
            polynomial: got.polynomial,
        });
    }
    Ok(rows)
}

/// Forcing data entering the frequency budget: the deviation `f - f₀`
/// enters through its strip modulus.
pub struct ForcingData<'a> {
    pub f: &'a ScalarField,
    pub f0: f64,
}

#[derive(Debug, Clone)]
pub struct FrequencyRow {
    pub r: f64,
    /// `N̄(r) = r⁻⁴ ∫_{S_r} (u + t)² dγ̄`.
    pub n_bar: f64,
    /// `I(r) = ∫_0^r s⁻⁵ ∫_{S_s} (Lu)² dγ̄ ds`.
    pub dissipation: f64,
    /// Cumulative minorant `∫ (2/r) I(r) dr` from the smallest ladder node.
    pub minorant: f64,
    /// Cumulative forcing budget `4∫ (σ₂/r) D dr + 32 (∫ σ₂/r dr)²`.
    pub forcing_budget: f64,
}

#[derive(Debug, Clone)]
pub struct FrequencyIncrement {
    pub r_from: f64,
    pub r_to: f64,
    pub delta_n_bar: f64,
    pub minorant: f64,
    pub forcing_budget: f64,
}

#[derive(Debug, Clone)]
pub struct FrequencyReport {
    pub rows: Vec<FrequencyRow>,
    pub increments: Vec<FrequencyIncrement>,
}

/// Knobs for [`frequency_scan`].
#[derive(Debug, Clone)]
pub struct FrequencyParams {
    pub quad: StripQuadrature,
    pub nodes_per_interval: usize,
    pub floor_fraction: f64,
}

impl Default for FrequencyParams {
    fn default() -> Self {
        FrequencyParams {
            quad: StripQuadrature::default(),
            nodes_per_interval: 4,
            floor_fraction: 0.125,
        }
    }
}

/// Scans the normalized distance to the reference profile `-t` and its
/// monotonicity minorant.
///
/// `N̄(r)` measures `u - (-t)` in the `γ̄`-norm at scale `r`; its increments
/// are bounded below by `∫ (2/r) I(r) dr` minus a forcing budget built from
/// the strip modulus `σ₂` and the localized deviation size
/// `D(r) = (r⁻⁶ ∫_{B₁×(-r²,0]} (u+t)² dγ)^{1/2}`. With exact forcing the
/// budget vanishes and the increments themselves must be nonnegative.
pub fn frequency_scan(
    u: &ScalarField,
    forcing: Option<ForcingData<'_>>,
    radii: &[f64],
    params: &FrequencyParams,
) -> Result<FrequencyReport> {
    if radii.len() < 2 {
        return Err(Error::Precondition("the frequency scan needs at least two radii".into()));
    }
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if rs[0] <= 0.0 {
        return Err(Error::Precondition("radii must be positive".into()));
    }
    let dim = u.dim();
    let lu = homogeneity_operator(u);
    let w = |x: &[f64], t: f64| u.value(x, t) + t;

    // Sampled fields: never band below the time step, where the 1/(-t)
    // weight sees only the noise floor of the interpolant.
    let mut quad = params.quad.clone();
    quad.t_floor_abs = quad.t_floor_abs.max(u.time_resolution());
    if let Some(fd) = &forcing {
        quad.t_floor_abs = quad.t_floor_abs.max(fd.f.time_resolution());
    }

    // Master ladder, as in the energy scan: floor → r_max with log-spaced
    // interior nodes and the requested radii included exactly.
    let floor = rs[0] * params.floor_fraction;
    let mut nodes = vec![floor];
    let push = |from: f64, to: f64, count: usize, nodes: &mut Vec<f64>| {
        let (lf, lt) = (from.ln(), to.ln());
        for i in 1..=count {
            nodes.push((lf + (lt - lf) * i as f64 / (count + 1) as f64).exp());
        }
        nodes.push(to);
    };
    push(floor, rs[0], 3 * params.nodes_per_interval, &mut nodes);
    for pair in rs.windows(2) {
        push(pair[0], pair[1], params.nodes_per_interval, &mut nodes);
    }

    // Node samples: g(s) = s⁻⁵ ∫ (Lu)² dγ̄, and the budget ingredients.
    let mut g = Vec::with_capacity(nodes.len());
    let mut sigma = Vec::with_capacity(nodes.len());
    let mut dloc = Vec::with_capacity(nodes.len());
    for &s in &nodes {
        let diss = integrate_strip(
            |x, t| {
                let v = lu.value(x, t);
                v * v
            },
            dim,
            s,
            MeasureKind::GammaBar,
            &quad,
        )?;
        g.push(diss.value / s.powi(5));
        if let Some(fd) = &forcing {
            sigma.push(modulus::strip_modulus_at(fd.f, fd.f0, 2.0, s, &quad)?);
            let localized = integrate_strip(
                |x, t| {
                    let n2: f64 = x.iter().map(|v| v * v).sum();
                    if n2 > 1.0 {
                        0.0
                    } else {
                        let v = w(x, t);
                        v * v
                    }
                },
                dim,
                s,
                MeasureKind::Gamma,
                &quad,
            )?;
            dloc.push((localized.value.max(0.0) / s.powi(6)).sqrt());
        } else {
            sigma.push(0.0);
            dloc.push(0.0);
        }
    }

    // I(r): cumulative with a power-law tail below the floor.
    let mut i_tail = 0.0;
    if g[0] > 0.0 && g[1] > 0.0 {
        let p = (g[1].ln() - g[0].ln()) / (nodes[1].ln() - nodes[0].ln());
        if p > -0.9 {
            i_tail = nodes[0] * g[0] / (p + 1.0);
        }
    }
    let mut i_cum = vec![i_tail];
    for k in 1..nodes.len() {
        let wgt = 0.5 * (nodes[k] - nodes[k - 1]);
        i_cum.push(i_cum[k - 1] + wgt * (g[k] + g[k - 1]));
    }

    // Minorant ∫ (2/r) I(r) dr and the two forcing-budget integrals.
    let mut minor = vec![0.0];
    let mut fb_lin = vec![0.0]; // ∫ (σ₂/r) D dr
    let mut fb_log = vec![0.0]; // ∫ σ₂/r dr
    for k in 1..nodes.len() {
        let wgt = 0.5 * (nodes[k] - nodes[k - 1]);
        minor.push(
            minor[k - 1]
                + wgt * (2.0 * i_cum[k] / nodes[k] + 2.0 * i_cum[k - 1] / nodes[k - 1]),
        );
        fb_lin.push(
            fb_lin[k - 1]
                + wgt
                    * (sigma[k] * dloc[k] / nodes[k]
                        + sigma[k - 1] * dloc[k - 1] / nodes[k - 1]),
        );
        fb_log.push(
            fb_log[k - 1] + wgt * (sigma[k] / nodes[k] + sigma[k - 1] / nodes[k - 1]),
        );
    }

    let node_index = |r: f64| -> usize {
        nodes
            .iter()
            .position(|&s| (s - r).abs() <= 1e-12 * r)
            .expect("radius is a ladder node by construction")
    };

    let mut rows = Vec::with_capacity(rs.len());
    for &r in &rs {
        let n_bar = integrate_strip(
            |x, t| {
                let v = w(x, t);
                v * v
            },
            dim,
            r,
            MeasureKind::GammaBar,
            &quad,
        )?;
        let k = node_index(r);
        rows.push(FrequencyRow {
            r,
            n_bar: n_bar.value.max(0.0) / r.powi(4),
            dissipation: i_cum[k],
            minorant: minor[k],
            forcing_budget: 4.0 * fb_lin[k] + 32.0 * fb_log[k] * fb_log[k],
        });
    }

    let mut increments = Vec::with_capacity(rs.len() - 1);
    for k in 1..rs.len() {
        increments.push(FrequencyIncrement {
            r_from: rows[k - 1].r,
            r_to: rows[k].r,
            delta_n_bar: rows[k].n_bar - rows[k - 1].n_bar,
            minorant: rows[k].minorant - rows[k - 1].minorant,
            forcing_budget: rows[k].forcing_budget - rows[k - 1].forcing_budget,
        });
    }

    Ok(FrequencyReport { rows, increments })
}

/// Stratum membership of one vertex, read off its blow-up polynomial.
#[derive(Debug, Clone)]
pub struct StratumLabel {
    /// Number of eigenvalues of `Q` below the spectral threshold.
    pub kernel_dim: usize,
    /// True when the time slope is below `-δ_m`: the vertex belongs to the
    /// time-like stratum, a C²-graph `t = t(x)` rather than a spatial one.
    pub time_like: bool,
    /// Ascending eigenvalues of `Q`.
    pub eigenvalues: Vec<f64>,
    pub m: f64,
}

impl StratumLabel {
    /// Conventional stratum name: `"k+1"` for spatial strata with a
    /// k-dimensional kernel, `"n+0"` for the time-like stratum.
    pub fn name(&self) -> String {
        if self.time_like {
            format!("{}+0", self.eigenvalues.len())
        } else {
            format!("{}+1", self.kernel_dim)
        }
    }
}

/// Classifies a singular vertex into its stratum by eigenvalue counting.
///
/// `delta_q` separates "degenerate" from "definite" spectral directions and
/// `delta_m` decides time-likeness; both default to `1e-2` when `None`.
pub fn stratify(
    p: &SingularPolynomial,
    delta_q: Option<f64>,
    delta_m: Option<f64>,
) -> StratumLabel {
    let dq = delta_q.unwrap_or(1e-2);
    let dm = delta_m.unwrap_or(1e-2);
    let eigenvalues = p.eigenvalues();
    let kernel_dim = eigenvalues.iter().filter(|&&l| l < dq).count();
    StratumLabel {
        kernel_dim,
        time_like: p.m() <= -dm,
        eigenvalues,
        m: p.m(),
    }
}

/// Parabolic length `max(|Δx|, √|Δt|)` of a space-time displacement.
pub fn parabolic_length(dx: &[f64], dt: f64) -> f64 {
    let spatial: f64 = dx.iter().map(|v| v * v).sum::<f64>().sqrt();
    spatial.max(dt.abs().sqrt())
}

/// A vertex with its blow-up polynomial, the input of the tangent
/// diagnostics.
#[derive(Debug, Clone)]
pub struct VertexSample {
    pub x: Vec<f64>,
    pub t: f64,
    pub polynomial: SingularPolynomial,
}

/// Which whitening of pair displacements to measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentMode {
    /// Spatial strata with a `j`-dimensional kernel: removes the projection
    /// of `Δx` onto the span of the `j` smallest spectral directions of the
    /// base vertex (plus the whole time shift) and compares the remainder
    /// with the pair's parabolic distance. The ratio vanishing as pairs
    /// shrink is the C¹-graph property of the stratum.
    Kernel { j: usize },
    /// Time-like stratum: measures `√|Δt| / d` together with the raw
    /// second-order ratio `|Δt| / |Δx|²` whose decay makes `t = t(x)` a C²
    /// graph.
    TimeDeletion,
}

#[derive(Debug, Clone)]
pub struct TangentBucket {
    pub eps: f64,
    /// Ordered pairs with parabolic distance in (0, eps].
    pub pairs: usize,
    pub sup_ratio: f64,
    /// `sup |Δt| / |Δx|²` in time-deletion mode.
    pub sup_second_order: Option<f64>,
}

/// Flatness ratios of a vertex cloud at a ladder of pair scales.
///
/// For each `ε` the supremum runs over ordered pairs at parabolic distance
/// `≤ ε`; decaying bucket suprema witness the graph structure of the
/// stratum at those scales.
pub fn tangent_diagnostic(
    points: &[VertexSample],
    mode: TangentMode,
    delta: f64,
    eps_list: &[f64],
) -> Result<Vec<TangentBucket>> {
    if points.len() < 2 {
        return Err(Error::Precondition("tangent diagnostics need at least two vertices".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Precondition("stratum threshold delta must be positive".into()));
    }
    let dim = points[0].x.len();
    for p in points {
        if p.x.len() != dim || p.polynomial.dim() != dim {
            return Err(Error::Precondition("vertex samples must share one dimension".into()));
        }
    }
    // Per-point preconditions and kernel projectors.
    let mut projectors: Vec<Option<SymMat>> = Vec::with_capacity(points.len());
    match mode {
        TangentMode::Kernel { j } => {
            if j >= dim {
                return Err(Error::Precondition(format!(
                    "kernel index must be below the dimension, got j = {j}, n = {dim}"
                )));
            }
            for (i, p) in points.iter().enumerate() {
                let eig = p.polynomial.q().eigen();
                if eig.values[j] < delta {
                    return Err(Error::Precondition(format!(
                        "vertex {i} is outside the stratum: eigenvalue {} of its \
                         quadratic part is {:.3e} < {delta:.3e}",
                        j + 1,
                        eig.values[j]
                    )));
                }
                projectors.push(Some(eig.span_projector(j)));
            }
        }
        TangentMode::TimeDeletion => {
            for (i, p) in points.iter().enumerate() {
                if p.polynomial.m() > -delta {
                    return Err(Error::Precondition(format!(
                        "vertex {i} is outside the time-like stratum: m = {:.3e} > -{delta:.3e}",
                        p.polynomial.m()
                    )));
                }
                projectors.push(None);
            }
        }
    }

    let mut eps = eps_list.to_vec();
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut buckets: Vec<TangentBucket> = eps
        .iter()
        .map(|&e| TangentBucket {
            eps: e,
            pairs: 0,
            sup_ratio: 0.0,
            sup_second_order: match mode {
                TangentMode::TimeDeletion => Some(0.0),
                _ => None,
            },
        })
        .collect();

    let mut dx = vec![0.0; dim];
    for (a, base) in points.iter().enumerate() {
        for (b, other) in points.iter().enumerate() {
            if a == b {
                continue;
            }
            for k in 0..dim {
                dx[k] = other.x[k] - base.x[k];
            }
            let dt = other.t - base.t;
            let dist = parabolic_length(&dx, dt);
            if dist == 0.0 {
                continue;
            }
            let (ratio, second) = match mode {
                TangentMode::Kernel { .. } => {
                    let proj = projectors[a].as_ref().unwrap().matvec(&dx);
                    let resid2: f64 = dx
                        .iter()
                        .zip(&proj)
                        .map(|(v, p)| (v - p) * (v - p))
                        .sum();
                    (resid2.sqrt() / dist, None)
                }
                TangentMode::TimeDeletion => {
                    let s2: f64 = dx.iter().map(|v| v * v).sum();
                    let second = if s2 > 0.0 { dt.abs() / s2 } else { f64::INFINITY };
                    (dt.abs().sqrt() / dist, Some(second))
                }
            };
            for bucket in buckets.iter_mut() {
                if dist <= bucket.eps {
                    bucket.pairs += 1;
                    bucket.sup_ratio = bucket.sup_ratio.max(ratio);
                    if let (Some(s), Some(v)) = (bucket.sup_second_order.as_mut(), second) {
                        *s = s.max(v);
                    }
                }
            }
        }
    }
    Ok(buckets)
}

/// Constants of the a-priori decay estimate; they come from the underlying
/// compactness argument and are inputs here, not computed.
#[derive(Debug, Clone, Copy)]
pub struct DecayConstants {
    pub c: f64,
    /// Size of the solution at unit scale.
    pub m: f64,
    /// Hölder-type exponent in (0, 1].
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct DecayRow {
    pub r: f64,
    /// `σ_p(r)`.
    pub sigma: f64,
    /// `Σ_p(r) = σ_p(r) + ∫_0^r σ_p(s)/s ds`.
    pub sigma_dini: f64,
    /// `C (M r^α + ∫_0^r Σ_p/s ds + r^α ∫_r^1 Σ_p/s^{1+α} ds)`.
    pub bound: f64,
}

/// Evaluates the modulus-driven decay envelope on a radius ladder.
///
/// All three ingredients are quadratures of the supplied modulus on one
/// logarithmic grid: the Dini sum `Σ_p`, its own Dini integral, and the
/// `α`-weighted tail toward unit scale. Power-law tails below the grid are
/// extrapolated; a modulus too flat to integrate surfaces as a
/// `NonIntegrable` error.
pub fn decay_bound(
    mut sigma: impl FnMut(f64) -> Result<f64>,
    radii: &[f64],
    constants: DecayConstants,
) -> Result<Vec<DecayRow>> {
    if !(constants.alpha > 0.0 && constants.alpha <= 1.0) {
        return Err(Error::Precondition(format!(
            "decay exponent must lie in (0, 1], got {}",
            constants.alpha
        )));
    }
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if rs.is_empty() || rs[0] <= 0.0 || *rs.last().unwrap() > 1.0 {
        return Err(Error::Precondition("decay radii must lie in (0, 1]".into()));
    }

    // One master grid over [r_min·1e-4, 1], 64 nodes per decade, with the
    // requested radii merged in exactly.
    let bottom = rs[0] * 1e-4;
    let decades = (1.0 / bottom).log10();
    let n = (decades * 64.0).ceil() as usize + 1;
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (bottom.ln() + (0.0 - bottom.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid.extend(rs.iter().copied());
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * *b);
    if (*grid.last().unwrap() - 1.0).abs() > 1e-12 {
        grid.push(1.0);
    }

    let mut sig = Vec::with_capacity(grid.len());
    for &r in &grid {
        let v = sigma(r)?;
        if !(v >= 0.0) {
            return Err(Error::Precondition(format!(
                "modulus must be nonnegative, got {v} at r = {r}"
            )));
        }
        sig.push(v);
    }

    // Tail exponent at the bottom of the grid.
    let span = 32.min(grid.len() - 1);
    let tail_alpha = if sig[0] > 1e-300 && sig[span] > 1e-300 {
        (sig[span].ln() - sig[0].ln()) / (grid[span].ln() - grid[0].ln())
    } else {
        f64::INFINITY
    };
    let has_mass = sig[0] > 1e-300;
    if has_mass && tail_alpha <= 0.02 {
        return Err(Error::NonIntegrable(format!(
            "modulus decays like r^{tail_alpha:.3} near zero; its Dini integral diverges"
        )));
    }

    // Σ(r) = σ(r) + ∫_0^r σ/s ds on the grid (log-trapezoid + power tail).
    let dini_tail = if has_mass { sig[0] / tail_alpha } else { 0.0 };
    let mut inner = vec![dini_tail];
    for k in 1..grid.len() {
        let du = (grid[k] / grid[k - 1]).ln();
        inner.push(inner[k - 1] + 0.5 * du * (sig[k] + sig[k - 1]));
    }
    let big: Vec<f64> = sig.iter().zip(&inner).map(|(s, i)| s + i).collect();

    // A(r) = ∫_0^r Σ/s ds. The tail sees Σ ~ σ(1 + 1/α_tail).
    let a_tail = if has_mass {
        (sig[0] + dini_tail) / tail_alpha
    } else {
        0.0
    };
    let mut a_cum = vec![a_tail];
    for k in 1..grid.len() {
        let du = (grid[k] / grid[k - 1]).ln();
        a_cum.push(a_cum[k - 1] + 0.5 * du * (big[k] + big[k - 1]));
    }

    // B(r) = ∫_r^1 Σ(s)/s^{1+α} ds, reverse cumulative.
    let alpha = constants.alpha;
    let mut b_cum = vec![0.0; grid.len()];
    for k in (0..grid.len() - 1).rev() {
        let du = (grid[k + 1] / grid[k]).ln();
        let fk = big[k] / grid[k].powf(alpha);
        let fk1 = big[k + 1] / grid[k + 1].powf(alpha);
        b_cum[k] = b_cum[k + 1] + 0.5 * du * (fk + fk1);
    }

    let locate = |r: f64| -> usize {
        grid.iter()
            .position(|&s| (s - r).abs() <= 1e-12 * r)
            .expect("requested radius was merged into the grid")
    };
    let mut rows = Vec::with_capacity(rs.len());
    for &r in &rs {
        let k = locate(r);
        rows.push(DecayRow {
            r,
            sigma: sig[k],
            sigma_dini: big[k],
            bound: constants.c
                * (constants.m * r.powf(alpha) + a_cum[k] + r.powf(alpha) * b_cum[k]),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn q32() -> StripQuadrature {
        StripQuadrature::with_h(1.0 / 32.0)
    }

    #[test]
    fn cone_membership_is_validated() {
        assert!(SingularPolynomial::from_rows(1, &[1.0], 0.0).is_ok());
        assert!(SingularPolynomial::from_rows(1, &[0.0], -1.0).is_ok());
        assert!(SingularPolynomial::from_rows(2, &[0.5, 0.0, 0.0, 0.3], -0.2).is_ok());
        // Trace identity broken.
        assert!(SingularPolynomial::from_rows(1, &[1.0], -0.5).is_err());
        // Negative direction.
        assert!(SingularPolynomial::from_rows(2, &[2.0, 0.0, 0.0, -0.5], 0.5).is_err());
        // Slope out of range.
        assert!(SingularPolynomial::from_rows(1, &[2.5], 1.5).is_err());
    }

    #[test]
    fn caloric_basis_is_orthogonal_with_gram_rho4() {
        // Under γ̄ the basis satisfies ⟨φ_a, φ_b⟩ = ρ⁴ δ_ab; freezing this
        // pins the whole moment pipeline behind the projector.
        for dim in 1..=3usize {
            let basis = caloric_basis(dim);
            for (a, pa) in basis.iter().enumerate() {
                for (b, pb) in basis.iter().enumerate() {
                    let v = pa.mul(pb).strip_integral(0.7, MeasureKind::GammaBar).unwrap();
                    let expect = if a == b { 0.7f64.powi(4) } else { 0.0 };
                    assert_abs_diff_eq!(v, expect, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn projection_of_cone_member_is_exact() {
        let p = SingularPolynomial::from_rows(2, &[0.4, 0.1, 0.1, 0.35], -0.25).unwrap();
        let projector = PsingProjector::new(2, 0.5).unwrap();
        let got = projector.project_poly(&p.poly()).unwrap();
        assert!(got.n_value < 1e-10, "distance {:.3e}", got.n_value);
        assert!(got.kkt_residual <= 1e-9);
        assert!(got.polynomial.q().frobenius_distance(p.q()) < 1e-9);
        assert_abs_diff_eq!(got.polynomial.m(), p.m(), epsilon = 1e-9);
    }

    #[test]
    fn projection_of_overscaled_profile_hits_the_trace_cap() {
        // u = x₁² wants Q = 2 > cap; the constrained optimum is Q = 1, m = 0
        // with squared distance ‖½x₁²‖² = 3/2 at ρ = 1.
        let u = Poly::from_terms(1, vec![(1.0, vec![2], 0)]);
        let projector = PsingProjector::new(1, 1.0).unwrap();
        let got = projector.project_poly(&u).unwrap();
        assert_abs_diff_eq!(got.polynomial.q().get(0, 0), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(got.polynomial.m(), 0.0, epsilon = 1e-9);
        assert_relative_eq!(got.n_value, 1.5f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn projector_agrees_with_diagonal_oracle() {
        let u = Poly::from_terms(
            2,
            vec![(0.45, vec![2, 0], 0), (0.75, vec![0, 2], 0), (0.2, vec![0, 0], 1)],
        );
        let projector = PsingProjector::new(2, 1.0).unwrap();
        let fast = projector.project_poly(&u).unwrap();
        let (slow_p, slow_n) = diagonal_oracle(&u, 1.0, 1e-3).unwrap();
        assert_abs_diff_eq!(fast.n_value, slow_n, epsilon = 1e-3);
        assert!(fast.polynomial.q().frobenius_distance(slow_p.q()) < 1e-2);
        assert_abs_diff_eq!(fast.polynomial.m(), slow_p.m(), epsilon = 1e-2);
    }

    #[test]
    fn field_projection_matches_poly_projection() {
        let p = SingularPolynomial::from_rows(2, &[0.6, 0.0, 0.0, 0.2], -0.2).unwrap();
        let projector = PsingProjector::new(2, 0.5).unwrap();
        let got = projector.project_field(&p.field(), &q32()).unwrap();
        assert!(got.n_value < 1e-6, "distance {:.3e}", got.n_value);
        assert!(got.polynomial.q().frobenius_distance(p.q()) < 1e-6);
    }

    #[test]
    fn cone_distance_curve_is_zero_on_exact_profiles() {
        // Quadrature path: the distance is zero up to strip-quadrature noise.
        let p = SingularPolynomial::from_rows(1, &[1.0], 0.0).unwrap();
        let rows = cone_distance_curve(&p.field(), &[0.25, 0.5, 1.0], &q32()).unwrap();
        for row in rows {
            assert!(row.n_value < 1e-5, "distance {:.3e}", row.n_value);
            assert!(row.sup_value < 1e-5);
        }
    }

    #[test]
    fn frequency_scan_matches_cubic_perturbation_growth() {
        // u = -t + εw with w = x³ - 6xt. The perturbation is parabolically
        // 3-homogeneous, so Lu = εw and both integrands share the moment
        // ∫_{S_r} w² dγ̄ = 112 r⁶: N̄(r) = 112 ε² r², I(r) = 56 ε² r², and
        // the minorant ∫(2/r)I dr = 56 ε² r² sits below the increment slope.
        let eps = 1e-3;
        let p = Poly::from_terms(
            1,
            vec![(-1.0, vec![0], 1), (eps, vec![3], 0), (-6.0 * eps, vec![1], 1)],
        );
        let u = ScalarField::from_poly(&p);
        let radii = [0.1, 0.2, 0.4, 0.8];
        let report = frequency_scan(
            &u,
            None,
            &radii,
            &FrequencyParams {
                quad: q32(),
                ..Default::default()
            },
        )
        .unwrap();
        for row in &report.rows {
            let expect = 112.0 * eps * eps * row.r * row.r;
            assert_relative_eq!(row.n_bar, expect, max_relative = 1e-2);
            let expect_i = 56.0 * eps * eps * row.r * row.r;
            assert_relative_eq!(row.dissipation, expect_i, max_relative = 2e-2);
            assert_eq!(row.forcing_budget, 0.0);
        }
        for inc in &report.increments {
            assert!(inc.delta_n_bar >= inc.minorant - 1e-12, "{inc:?}");
            assert!(inc.delta_n_bar > 0.0);
        }
    }

    #[test]
    fn stratification_counts_degenerate_directions() {
        let full = SingularPolynomial::from_rows(2, &[0.6, 0.0, 0.0, 0.4], 0.0).unwrap();
        let label = stratify(&full, None, None);
        assert_eq!(label.kernel_dim, 0);
        assert!(!label.time_like);
        assert_eq!(label.name(), "0+1");

        let ridge = SingularPolynomial::from_rows(2, &[1.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        let label = stratify(&ridge, None, None);
        assert_eq!(label.kernel_dim, 1);
        assert_eq!(label.name(), "1+1");

        let time = SingularPolynomial::from_rows(2, &[0.0; 4], -1.0).unwrap();
        let label = stratify(&time, None, None);
        assert_eq!(label.kernel_dim, 2);
        assert!(label.time_like);
        assert_eq!(label.name(), "2+0");
    }

    #[test]
    fn kernel_tangent_ratios_decay_on_a_parabolic_vertex_curve() {
        // Vertices on the curve x₁ = x₂², all carrying Q = diag(1, 0): the
        // kernel direction is e₂ and the residual |Δx₁| is quadratically
        // small against |Δx₂| at dyadic scales.
        let q = SingularPolynomial::from_rows(2, &[1.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        let mut points = Vec::new();
        for j in 0..10 {
            for sign in [-1.0, 1.0] {
                let s: f64 = sign * 2.0f64.powi(-j);
                points.push(VertexSample {
                    x: vec![s * s, s],
                    t: 0.0,
                    polynomial: q.clone(),
                });
            }
        }
        let eps = [1.0, 0.5, 0.25, 0.125, 0.0625];
        let buckets =
            tangent_diagnostic(&points, TangentMode::Kernel { j: 1 }, 1e-2, &eps).unwrap();
        for pair in buckets.windows(2) {
            assert!(pair[1].sup_ratio <= pair[0].sup_ratio + 1e-15);
        }
        assert!(buckets.last().unwrap().pairs > 0);
        assert!(
            buckets.last().unwrap().sup_ratio < 0.2 * buckets[0].sup_ratio,
            "ratios did not decay: {buckets:?}"
        );
    }

    #[test]
    fn time_deletion_ratios_decay_on_a_cubic_time_graph() {
        // Vertices on t = -|x|³ with the pure-time profile: |Δt|/|Δx|² ~ |x|.
        let p = SingularPolynomial::from_rows(1, &[0.0], -1.0).unwrap();
        let mut points = Vec::new();
        for j in 0..12 {
            let x: f64 = 2.0f64.powi(-j);
            points.push(VertexSample {
                x: vec![x],
                t: -x * x * x,
                polynomial: p.clone(),
            });
        }
        let eps = [1.0, 0.25, 0.0625, 0.015625];
        let buckets = tangent_diagnostic(&points, TangentMode::TimeDeletion, 0.5, &eps).unwrap();
        let first = buckets[0].sup_second_order.unwrap();
        let last = buckets.last().unwrap().sup_second_order.unwrap();
        assert!(buckets.last().unwrap().pairs > 0);
        assert!(last < 0.3 * first, "second-order ratios did not decay");
    }

    #[test]
    fn tangent_diagnostics_enforce_stratum_preconditions() {
        let degenerate = SingularPolynomial::from_rows(2, &[1.0, 0.0, 0.0, 0.0], 0.0).unwrap();
        let points = vec![
            VertexSample {
                x: vec![0.0, 0.0],
                t: 0.0,
                polynomial: degenerate.clone(),
            },
            VertexSample {
                x: vec![0.1, 0.0],
                t: 0.0,
                polynomial: degenerate,
            },
        ];
        // j = 0 demands λ₁ ≥ δ, but λ₁ = 0 here.
        let got = tangent_diagnostic(&points, TangentMode::Kernel { j: 0 }, 1e-2, &[1.0]);
        assert!(matches!(got, Err(Error::Precondition(_))));
        // Time-deletion demands m ≤ -δ, but m = 0 here.
        let got = tangent_diagnostic(&points, TangentMode::TimeDeletion, 1e-2, &[1.0]);
        assert!(matches!(got, Err(Error::Precondition(_))));
    }

    #[test]
    fn decay_bound_matches_power_law_closed_form() {
        // σ = r^β: Σ = (1 + 1/β) r^β, A(r) = (1 + 1/β) r^β / β and
        // B(r) = (1 + 1/β)(1 - r^{β-α})/(β-α).
        let beta = 0.75;
        let constants = DecayConstants {
            c: 2.0,
            m: 1.5,
            alpha: 0.5,
        };
        let rows = decay_bound(|r| Ok(r.powf(beta)), &[0.1, 0.3, 0.9], constants).unwrap();
        for row in rows {
            let r = row.r;
            let big = (1.0 + 1.0 / beta) * r.powf(beta);
            assert_relative_eq!(row.sigma_dini, big, max_relative = 1e-3);
            let a = big / beta;
            let b = (1.0 + 1.0 / beta) * (1.0 - r.powf(beta - constants.alpha))
                / (beta - constants.alpha);
            let expect = constants.c
                * (constants.m * r.powf(constants.alpha) + a + r.powf(constants.alpha) * b);
            assert_relative_eq!(row.bound, expect, max_relative = 2e-3);
        }
    }

    #[test]
    fn decay_bound_rejects_non_dini_modulus() {
        let constants = DecayConstants {
            c: 1.0,
            m: 1.0,
            alpha: 0.5,
        };
        let got = decay_bound(|_| Ok(1.0), &[0.5], constants);
        assert!(matches!(got, Err(Error::NonIntegrable(_))));
    }
}
