//! End-to-end acceptance gate. Each test pins one advertised guarantee of
//! the toolkit against an exact anchor or an independent oracle and prints a
//! `criterion N: PASS` line with the measured margin (visible under
//! `--nocapture`).
//!
//! The tests share one mutex so wall-clock budgets are measured without
//! interference, and the expensive solved instance is built once.

use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use parobs::core_grid::{
    integrate_strip, MeasureKind, MomentOracle, Poly, ScalarField, SpaceTimeGrid, StripQuadrature,
};
use parobs::modulus::{
    cylinder_modulus, dini_integral, remark_family, strip_modulus, DiniDepth,
};
use parobs::obstacle_solver::{growth_diagnostic, solve, ExactProfile, ProblemSpec, SolverParams};
use parobs::singular::{
    diagonal_oracle, frequency_scan, ForcingData, FrequencyParams, PsingProjector,
    SingularPolynomial,
};
use parobs::weiss::{blowup_sequence, calibrate_thresholds, weiss_w, WeissParams};
use parobs::whitney::{
    decompose_with, extend, partition_of_unity, verify_c1, BoundingBox, DecomposeParams, JetData,
    JetPoint, Modulus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Serializes the criteria so per-test wall-clock limits mean what they say.
static GATE: Mutex<()> = Mutex::new(());

fn gate() -> MutexGuard<'static, ()> {
    GATE.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (ll, lh) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (ll + (lh - ll) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Solved obstacle instance with forcing 1 and a singular vertex at the
/// origin: data `max(-t + ε x(x² + 6t), 0)` keeps the caloric cubic as the
/// exact interior solution while the obstacle binds only in a thin sliver
/// near the left boundary, far outside every Gaussian window used below.
const SOLVED_EPS: f64 = 0.006;
const SOLVED_H: f64 = 1.0 / 128.0;

fn solved_data() -> ScalarField {
    ScalarField::closed(1, |x, t| {
        (-t + SOLVED_EPS * x[0] * (x[0] * x[0] + 6.0 * t)).max(0.0)
    })
}

fn solved_instance() -> &'static ScalarField {
    static FIELD: OnceLock<ScalarField> = OnceLock::new();
    FIELD.get_or_init(|| {
        let spec = ProblemSpec {
            grid: SpaceTimeGrid::uniform(&[(-1.0, 1.0)], SOLVED_H, 1.0, SOLVED_H * SOLVED_H)
                .unwrap(),
            rhs: ScalarField::constant(1, 1.0),
            initial: solved_data(),
            boundary: solved_data(),
            solver: SolverParams::default(),
        };
        solve(&spec).unwrap()
    })
}

fn singular_field(dim: usize, rows: &[f64], m: f64) -> ScalarField {
    ScalarField::from_poly(&SingularPolynomial::from_rows(dim, rows, m).unwrap().poly())
}

#[test]
fn criterion_01_moment_anchors() {
    let _g = gate();
    let start = Instant::now();

    // Closed form; the constructor itself asserts b/4 + c + d = 0 exactly.
    let exact = parobs::core_grid::moment_constants();
    assert_eq!((exact.a, exact.b, exact.c, exact.d), (12.0, 4.0, -2.0, 1.0));
    assert_eq!(exact.identity_residual(), 0.0);

    // Quadrature at the default resolution (h = 1/64, truncation 8r); the
    // mixed moment b needs two spatial dimensions.
    let quad = StripQuadrature::default();
    let bar = MeasureKind::GammaBar;
    let normalizer = |dim: usize| {
        integrate_strip(|_, t| -t, dim, 1.0, MeasureKind::Gamma, &quad).unwrap().value
    };
    let norm1 = normalizer(1);
    let norm2 = normalizer(2);
    let a = integrate_strip(|x, _| x[0].powi(4), 1, 1.0, bar, &quad).unwrap().value / norm1;
    let b = integrate_strip(|x, _| (x[0] * x[1]).powi(2), 2, 1.0, bar, &quad).unwrap().value
        / norm2;
    let c = integrate_strip(|x, t| x[0] * x[0] * t, 1, 1.0, bar, &quad).unwrap().value / norm1;
    let d = integrate_strip(|_, t| t * t, 1, 1.0, bar, &quad).unwrap().value / norm1;

    let errs = [(a, 12.0), (b, 4.0), (c, -2.0), (d, 1.0)]
        .map(|(got, want)| (got - want).abs());
    for (i, e) in errs.iter().enumerate() {
        assert!(*e <= 1e-3, "moment {i} off by {e}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    let worst = errs.iter().cloned().fold(0.0f64, f64::max);
    println!(
        "criterion 1: PASS — (a,b,c,d) exact in closed form, quadrature off by {worst:.2e} \
         (limit 1e-3) in {elapsed:?}"
    );
}

#[test]
fn criterion_02_classification_levels() {
    let _g = gate();

    // Trimmed correction ladder: only the energy rows are read here.
    let params = WeissParams {
        nodes_per_interval: 2,
        floor_fraction: 0.25,
        ..WeissParams::default()
    };
    let radii = [0.5, 1.0];
    let energy = |u: &ScalarField| -> Vec<f64> {
        weiss_w(u, None, &radii, &params).unwrap().rows.iter().map(|r| r.energy).collect()
    };

    let regular = energy(&ExactProfile::regular(&[1.0]).unwrap().field());
    let half_x_sq = energy(&singular_field(1, &[1.0], 0.0));
    let time_profile = energy(&singular_field(1, &[0.0], -1.0));
    let rank_one_2d = energy(&singular_field(2, &[1.0, 0.0, 0.0, 0.0], 0.0));
    let zero = energy(&ScalarField::constant(1, 0.0));

    let mut worst = 0.0f64;
    for (vals, want, name) in [
        (&regular, 0.25, "regular"),
        (&half_x_sq, 0.5, "half_x_sq"),
        (&time_profile, 0.5, "time_profile"),
        (&rank_one_2d, 0.5, "rank_one_2d"),
        (&zero, 0.0, "zero"),
    ] {
        for v in vals {
            let e = (v - want).abs();
            assert!(e <= 1e-3, "{name}: energy {v} vs {want}");
            worst = worst.max(e);
        }
    }

    // Level ratio from the measured energies at r = 1.
    let ratio = half_x_sq[1] / regular[1];
    assert!((ratio - 2.0).abs() <= 1e-4, "singular:regular ratio {ratio}");

    let th = calibrate_thresholds();
    assert_eq!(th.kappa, 30.0);
    assert_eq!(th.kappa * th.regular, 7.5);
    assert_eq!(th.kappa * th.singular, 15.0);

    println!(
        "criterion 2: PASS — levels (1/4, 1/2, 0) off by {worst:.2e} (limit 1e-3), \
         ratio 2 off by {:.2e} (limit 1e-4), kappa levels (15/2, 15) exact",
        (ratio - 2.0).abs()
    );
}

#[test]
fn criterion_03_w_monotonicity_solved() {
    let _g = gate();
    let start = Instant::now();

    // Radii keep the Gaussian windows essentially inside the solve box
    // [-1, 1]: at r = 0.25 the boundary carries weight e^{-1/(4r²)} ≈ 2e-3,
    // at the dropped r = 0.4 it would be ~0.1 and the clamped extension
    // would corrupt the energy beyond its budget.
    let u = solved_instance();
    let radii = log_spaced(0.05, 0.25, 12);
    let report = weiss_w(u, None, &radii, &WeissParams::default()).unwrap();

    assert_eq!(report.increments.len(), 11);
    let mut min_slack = f64::INFINITY;
    let mut worst_mismatch = 0.0f64;
    for inc in &report.increments {
        let slack = inc.delta_w + inc.budget;
        assert!(
            slack >= 0.0,
            "increment [{}, {}] fell below budget: {} < -{}",
            inc.r_from, inc.r_to, inc.delta_w, inc.budget
        );
        min_slack = min_slack.min(slack);
        let mismatch = (inc.delta_w - inc.dissipation).abs();
        assert!(
            mismatch <= 2.0 * inc.budget,
            "increment [{}, {}] misses the dissipation: |{} - {}| > 2*{}",
            inc.r_from, inc.r_to, inc.delta_w, inc.dissipation, inc.budget
        );
        worst_mismatch = worst_mismatch.max(mismatch - 2.0 * inc.budget);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "criterion 3: PASS — 11 increments ≥ -budget (min slack {min_slack:.2e}) and within \
         2x budget of the dissipation integral, solved + scanned in {elapsed:?}"
    );
}

#[test]
fn criterion_04_blowup_convergence() {
    let _g = gate();
    let quad = StripQuadrature::default();

    // Exact 2-homogeneous profiles: every rescaling coincides, so the
    // distances vanish to roundoff at all radii.
    let radii = [0.4, 0.2, 0.1, 0.05];
    let mut worst_exact = 0.0f64;
    for (u, name) in [
        (ExactProfile::regular(&[1.0]).unwrap().field(), "regular"),
        (singular_field(1, &[1.0], 0.0), "half_x_sq"),
        (singular_field(1, &[0.0], -1.0), "time_profile"),
        (singular_field(2, &[1.0, 0.0, 0.0, 0.0], 0.0), "rank_one_2d"),
    ] {
        let report = blowup_sequence(&u, &vec![0.0; u.dim()], 0.0, &radii, &quad, 1e-12).unwrap();
        for d in &report.distances {
            assert!(*d < 1e-12, "{name}: rescaling distance {d}");
            worst_exact = worst_exact.max(*d);
        }
        assert!(report.converged);
    }

    // Solved singular fixture: the vertex sits under a decaying caloric
    // cubic, so consecutive rescaling distances shrink linearly in r. The
    // ladder stays inside 8·r ≤ 1 so no Gaussian window leaves the box.
    let u = solved_instance();
    let ladder = [0.125, 0.08839, 0.0625, 0.04419, 0.03125];
    let report = blowup_sequence(u, &[0.0], 0.0, &ladder, &quad, 1e-3).unwrap();
    for pair in report.distances.windows(2) {
        assert!(pair[1] < pair[0], "distances not decreasing: {:?}", report.distances);
    }
    assert!(report.distances.iter().all(|d| *d < 1e-3), "{:?}", report.distances);
    assert!(report.converged);

    println!(
        "criterion 4: PASS — exact-profile distances ≤ {worst_exact:.2e} (limit 1e-12); solved \
         fixture distances {:?} decrease monotonically below 1e-3",
        report.distances.iter().map(|d| format!("{d:.2e}")).collect::<Vec<_>>()
    );
}

#[test]
fn criterion_05_projection_oracle() {
    let _g = gate();

    let poly = |dim: usize, terms: Vec<(f64, Vec<u32>, u32)>| Poly::from_terms(dim, terms);
    // Diagonal inputs whose unconstrained least-squares minimizer violates
    // the cone: trace overflow, negative curvature, and a mixed case.
    let instances: Vec<(usize, Poly, &str)> = vec![
        (1, poly(1, vec![(1.0, vec![2], 0)]), "trace_overflow"),
        (1, poly(1, vec![(-0.4, vec![2], 0), (-0.2, vec![0], 1)]), "negative_curvature"),
        (
            2,
            poly(
                2,
                vec![(1.0, vec![2, 0], 0), (0.1, vec![0, 2], 0), (-0.1, vec![0, 0], 1)],
            ),
            "mixed_2d",
        ),
    ];

    let mut worst_n = 0.0f64;
    let mut worst_qm = 0.0f64;
    for (dim, u, name) in &instances {
        let start = Instant::now();
        let projector = PsingProjector::new(*dim, 1.0).unwrap();
        let res = projector.project_poly(u).unwrap();
        let (oracle_poly, oracle_n) = diagonal_oracle(u, 1.0, 0.002).unwrap();

        let dn = (res.n_value - oracle_n).abs();
        assert!(dn <= 1e-3, "{name}: N {} vs oracle {}", res.n_value, oracle_n);
        worst_n = worst_n.max(dn);
        for i in 0..*dim {
            for j in 0..*dim {
                let dq = (res.polynomial.q().get(i, j) - oracle_poly.q().get(i, j)).abs();
                assert!(dq <= 1e-2, "{name}: Q[{i}{j}] off by {dq}");
                worst_qm = worst_qm.max(dq);
            }
        }
        let dm = (res.polynomial.m() - oracle_poly.m()).abs();
        assert!(dm <= 1e-2, "{name}: m off by {dm}");
        worst_qm = worst_qm.max(dm);
        let elapsed = start.elapsed();
        assert!(elapsed.as_secs_f64() < 30.0, "{name} took {elapsed:?}");
    }

    // Members of the cone project to themselves.
    for (dim, rows, m) in [(1, vec![0.6], -0.4), (2, vec![0.5, 0.0, 0.0, 0.1], -0.4)] {
        let member = SingularPolynomial::from_rows(dim, &rows, m).unwrap();
        let res = PsingProjector::new(dim, 1.0).unwrap().project_poly(&member.poly()).unwrap();
        assert!(res.n_value < 1e-10, "member distance {}", res.n_value);
    }

    println!(
        "criterion 5: PASS — 3 infeasible instances within {worst_n:.2e} of the grid oracle in N \
         (limit 1e-3) and {worst_qm:.2e} in (Q, m) (limit 1e-2); members project to < 1e-10"
    );
}

#[test]
fn criterion_06_frequency_monotone() {
    let _g = gate();

    // Cubic perturbation of the time profile; its forcing is 1 + 12εx.
    let eps = 0.01;
    let u = ScalarField::closed(1, move |x, t| -t + eps * x[0] * (x[0] * x[0] - 6.0 * t));
    let f = ScalarField::closed(1, move |x, _| 1.0 + 12.0 * eps * x[0]);
    let radii = log_spaced(0.1, 0.8, 10);
    let report = frequency_scan(
        &u,
        Some(ForcingData { f: &f, f0: 1.0 }),
        &radii,
        &FrequencyParams::default(),
    )
    .unwrap();

    let mut min_slack = f64::INFINITY;
    for inc in &report.increments {
        let slack = inc.delta_n_bar + inc.forcing_budget - inc.minorant;
        assert!(
            slack >= -1e-9,
            "increment [{}, {}]: delta {} < minorant {} - budget {}",
            inc.r_from, inc.r_to, inc.delta_n_bar, inc.minorant, inc.forcing_budget
        );
        min_slack = min_slack.min(slack);
    }

    // Closed form N̄(r) = ε² c r² with c assembled from the moment oracle:
    // (x³ - 6xt)² = x⁶ - 12x⁴t + 36x²t².
    let bar = MeasureKind::GammaBar;
    let c = MomentOracle::strip_moment(&[6], 0, 1.0, bar).unwrap()
        - 12.0 * MomentOracle::strip_moment(&[4], 1, 1.0, bar).unwrap()
        + 36.0 * MomentOracle::strip_moment(&[2], 2, 1.0, bar).unwrap();
    assert_eq!(c, 112.0);
    let mut worst_rel = 0.0f64;
    for row in &report.rows {
        let want = eps * eps * c * row.r * row.r;
        let rel = (row.n_bar - want).abs() / want;
        assert!(rel <= 0.01, "r = {}: N̄ {} vs closed form {want}", row.r, row.n_bar);
        worst_rel = worst_rel.max(rel);
    }

    println!(
        "criterion 6: PASS — 9 increments nondecreasing within budget (min slack \
         {min_slack:.2e}); closed-form ε²·{c}·r² matched within {worst_rel:.2e} (limit 1e-2)"
    );
}

#[test]
fn criterion_07_moduli() {
    let _g = gate();

    // f = x₁ about f₀ = 0: the strip p=2 modulus is exactly r and the
    // cylinder average of x² over B_r × (-r², 0] is r²/3.
    let f = ScalarField::closed(1, |x, _| x[0]);
    let quad = StripQuadrature::default();
    let mut worst = 0.0f64;
    for r in [0.25, 0.5, 1.0] {
        let strip = strip_modulus(&f, 0.0, 2.0, r, &quad).unwrap();
        let cyl = cylinder_modulus(&f, 0.0, 2.0, r, 1.0 / 64.0, 1.0 / 4096.0).unwrap();
        let (es, ec) = ((strip - r).abs(), (cyl - r / 3f64.sqrt()).abs());
        assert!(es <= 1e-3, "strip modulus at {r}: {strip}");
        assert!(ec <= 1e-3, "cylinder modulus at {r}: {cyl}");
        worst = worst.max(es).max(ec);
    }

    // |t|^α (x/√-t)⁴ family at α = 1/2: the cylinder p=1 modulus diverges
    // like τ^{α-1} under refinement while the strip modulus is stable.
    let family = remark_family(0.5);
    let scales = [(1.0 / 32.0, 1.0 / 1024.0), (1.0 / 128.0, 1.0 / 16384.0),
        (1.0 / 512.0, 1.0 / 262144.0)];
    let cyl: Vec<f64> = scales
        .iter()
        .map(|&(h, tau)| cylinder_modulus(&family, 0.0, 1.0, 0.25, h, tau).unwrap())
        .collect();
    assert!(
        cyl[2] >= 10.0 * cyl[0],
        "cylinder modulus grew only {}x under two refinements",
        cyl[2] / cyl[0]
    );
    let strip: Vec<f64> = scales
        .iter()
        .map(|&(h, _)| strip_modulus(&family, 0.0, 1.0, 0.25, &StripQuadrature::with_h(h)).unwrap())
        .collect();
    for pair in strip.windows(2) {
        let drift = (pair[1] - pair[0]).abs() / pair[0];
        assert!(drift < 0.05, "strip modulus drifted {drift} under refinement");
    }

    // Dini estimator recovers ∫₀¹ r^α / r dr = 1/α.
    let mut worst_dini = 0.0f64;
    for alpha in [0.25, 0.5, 1.0] {
        let res = dini_integral(|r| Ok(r.powf(alpha)), 1.0, DiniDepth::Single).unwrap();
        assert!(res.converged);
        let rel = (res.value - 1.0 / alpha).abs() * alpha;
        assert!(rel <= 0.01, "alpha {alpha}: dini {} vs {}", res.value, 1.0 / alpha);
        worst_dini = worst_dini.max(rel);
    }

    println!(
        "criterion 7: PASS — σ₂ = r and σ̃₂ = r/√3 within {worst:.2e} (limit 1e-3); \
         σ̃₁ grew {:.1}x (≥ 10x) with σ₁ stable; Dini 1/α within {worst_dini:.2e} (limit 1e-2)",
        cyl[2] / cyl[0]
    );
}

#[test]
fn criterion_08_whitney() {
    let _g = gate();

    // Quadratic spine: f = ½x² + t carried by {x = 0} with zero gradient;
    // the remainder is compatible with ω(d) = d.
    let spine: Vec<(Vec<f64>, f64)> = (0..=8).map(|j| (vec![0.0], -(j as f64) / 8.0)).collect();
    let spine_points: Vec<JetPoint> = spine
        .iter()
        .map(|(x, t)| JetPoint { x: x.clone(), t: *t, f: *t, g: vec![0.0] })
        .collect();
    let jet = JetData::new(spine_points, Modulus::Power { coefficient: 1.0, exponent: 1.0 })
        .unwrap();
    let bounds = BoundingBox::new(vec![-1.0], vec![1.0], -1.0, 0.0).unwrap();
    let dec = decompose_with(
        spine.clone(),
        bounds,
        DecomposeParams { max_depth: 9, ..DecomposeParams::default() },
    )
    .unwrap();
    let ext = extend(jet, dec).unwrap();
    for (x, t) in &spine {
        let out = ext.evaluate(x, *t);
        assert_eq!(out.value.to_bits(), t.to_bits(), "extension not bit-exact at ({x:?}, {t})");
        assert!(!out.fallback);
    }
    let c1 = verify_c1(&ext, 2000, 0x5EED).unwrap();
    assert!(c1.pass, "{c1:?}");
    assert!(c1.drift < 0.05, "constants drifted {} under doubling", c1.drift);

    // Affine jets are reproduced exactly off the set.
    let positions =
        vec![(vec![-0.5, 0.25], -0.5), (vec![0.5, -0.75], -0.25), (vec![0.125, 0.625], -0.875)];
    let v = [0.7, -0.3];
    let affine_points: Vec<JetPoint> = positions
        .iter()
        .map(|(x, t)| JetPoint {
            x: x.clone(),
            t: *t,
            f: 0.3 + v[0] * x[0] + v[1] * x[1],
            g: v.to_vec(),
        })
        .collect();
    let jet = JetData::new(affine_points.clone(), Modulus::Power { coefficient: 1.0, exponent: 1.0 })
        .unwrap();
    let bounds2 = BoundingBox::new(vec![-1.0, -1.0], vec![1.0, 1.0], -1.0, 0.0).unwrap();
    let dec2 = decompose_with(
        positions,
        bounds2,
        DecomposeParams { max_depth: 6, ..DecomposeParams::default() },
    )
    .unwrap();
    let ext2 = extend(jet, dec2).unwrap();
    for p in &affine_points {
        assert_eq!(ext2.evaluate(&p.x, p.t).value.to_bits(), p.f.to_bits());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_affine = 0.0f64;
    for _ in 0..500 {
        let x = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let t = rng.random_range(-1.0..0.0);
        let got = ext2.evaluate(&x, t).value;
        let want = 0.3 + v[0] * x[0] + v[1] * x[1];
        let e = (got - want).abs();
        assert!(e <= 1e-12, "affine reproduction off by {e} at ({x:?}, {t})");
        worst_affine = worst_affine.max(e);
    }

    // Partition of unity and the decomposition constants on point fixtures.
    let mut overlaps = Vec::new();
    for dim in [1usize, 2] {
        let bounds =
            BoundingBox::new(vec![-1.0; dim], vec![1.0; dim], -1.0, 0.0).unwrap();
        let dec = decompose_with(
            vec![(vec![0.0; dim], 0.0)],
            bounds,
            DecomposeParams { max_depth: if dim == 1 { 10 } else { 7 }, ..Default::default() },
        )
        .unwrap();
        assert!(dec.audit.distance_ratio_max <= 8.0, "ratio {}", dec.audit.distance_ratio_max);
        assert!(dec.audit.distance_ratio_min >= 2.0);
        let bound = 3 * 4usize.pow(dim as u32);
        assert!(dec.audit.overlap <= bound, "overlap {} > {bound}", dec.audit.overlap);
        overlaps.push(dec.audit.overlap);

        if dim == 1 {
            let part = partition_of_unity(&dec);
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut checked = 0usize;
            while checked < 10_000 {
                let x = vec![rng.random_range(-1.0..1.0)];
                let t = rng.random_range(-1.0..0.0);
                if dec.set_distance_to(&x, t) < dec.audit.coverage_margin {
                    continue;
                }
                let sum: f64 = part.evaluate(&x, t).unwrap().iter().map(|(_, w)| w).sum();
                assert!((sum - 1.0).abs() <= 1e-12, "partition sum {sum} at ({x:?}, {t})");
                checked += 1;
            }
        }
    }

    println!(
        "criterion 8: PASS — bit-exact on the set, affine reproduction ≤ {worst_affine:.2e}, \
         partition sums to 1 on 10^4 samples, distance ratios ≤ 8, overlaps {overlaps:?} \
         (bounds 12/48), first-order constants drift {:.3} under doubling",
        c1.drift
    );
}

#[test]
fn criterion_09_growth_bands() {
    let _g = gate();

    let u = solved_instance();
    let radii = [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0];
    let curve = growth_diagnostic(u, &[0.0], 0.0, &radii).unwrap();
    assert_eq!(curve.rows.len(), radii.len());
    for row in &curve.rows {
        assert!(
            (0.1..=10.0).contains(&row.ratio),
            "r = {}: sup u / r² = {} outside [0.1, 10]",
            row.r, row.ratio
        );
    }
    let ratios: Vec<String> = curve.rows.iter().map(|r| format!("{:.3}", r.ratio)).collect();
    println!(
        "criterion 9: PASS — growth/non-degeneracy ratios {ratios:?} within [0.1, 10] over \
         dyadic r in [8h, 1/4] (spread {:.3})",
        curve.spread
    );
}

#[test]
fn criterion_10_determinism() {
    let _g = gate();

    let dir = tempfile::tempdir().unwrap();
    let solve_cfg = dir.path().join("solve.toml");
    std::fs::write(
        &solve_cfg,
        r#"
command = "solve"

[problem]
dimension = 1
box = [[-1.0, 1.0]]
h = 0.03125
tau = 0.0009765625
T = 0.25
f = "1"
ic = "0.5 * max(x1, 0)^2"
bc = "0.5 * max(x1, 0)^2"

[output]
growth_radii = [0.125, 0.25]
"#,
    )
    .unwrap();

    let run = |label: &str| -> Vec<(String, Vec<u8>)> {
        let out_dir = dir.path().join(label);
        let report = Command::new(env!("CARGO_BIN_EXE_parobs"))
            .args(["report", "--out"])
            .arg(out_dir.join("report"))
            .output()
            .unwrap();
        assert!(report.status.success(), "{}", String::from_utf8_lossy(&report.stderr));
        let solve = Command::new(env!("CARGO_BIN_EXE_parobs"))
            .args(["solve", "--config"])
            .arg(&solve_cfg)
            .arg("--out")
            .arg(out_dir.join("solve"))
            .output()
            .unwrap();
        assert!(solve.status.success(), "{}", String::from_utf8_lossy(&solve.stderr));
        tree(&out_dir)
    };

    let first = run("a");
    let second = run("b");
    assert!(!first.is_empty());
    assert_eq!(first.len(), second.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in first.iter().zip(&second) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "{name_a} differs between runs");
    }
    println!(
        "criterion 10: PASS — two full runs (battery + solve) produced byte-identical trees \
         of {} files",
        first.len()
    );
}

/// Every file under `root`, as `(relative path, bytes)`, sorted.
fn tree(root: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_str().unwrap().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}
