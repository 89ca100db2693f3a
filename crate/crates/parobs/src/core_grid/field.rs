use std::sync::{Arc, OnceLock};

use super::grid::SpaceTimeGrid;
use super::poly::Poly;
use crate::exec;

/// How a gridded field extends beyond its spatial box.
///
/// Solutions of the obstacle problem are supported inside the box and extend
/// by zero; coefficient fields extend by their nearest boundary value. In
/// time both modes clamp to `[-T, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutsideMode {
    Zero,
    Clamp,
}

/// Spatial interpolation order of a gridded field.
///
/// `Linear` never overshoots and is the default for obstacle solutions
/// (preserves nonnegativity); `Quadratic` gives the `O(h³)` accuracy needed
/// when rescaled copies of a solution are compared at small radii.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpMode {
    Linear,
    Quadratic,
}

type ValueFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], f64, &mut [f64]) + Send + Sync;

enum Inner {
    Closed {
        dim: usize,
        value: Box<ValueFn>,
        gradient: Option<Box<GradFn>>,
        time_derivative: Option<Box<ValueFn>>,
        fd_step: f64,
    },
    Grid(GriddedField),
}

/// A scalar function of `(x, t)`: either a closed-form expression (with
/// optional analytic derivatives, finite differences otherwise) or values on
/// a [`SpaceTimeGrid`] with interpolation. Cloning is cheap and thread-safe.
#[derive(Clone)]
pub struct ScalarField {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &*self.inner {
            Inner::Closed { dim, .. } => write!(f, "ScalarField::Closed(dim={dim})"),
            Inner::Grid(g) => write!(
                f,
                "ScalarField::Grid(dim={}, nodes={})",
                g.grid.dim(),
                g.grid.node_count()
            ),
        }
    }
}

const DEFAULT_FD_STEP: f64 = 1e-5;

impl ScalarField {
    pub fn closed(dim: usize, value: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            inner: Arc::new(Inner::Closed {
                dim,
                value: Box::new(value),
                gradient: None,
                time_derivative: None,
                fd_step: DEFAULT_FD_STEP,
            }),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        ScalarField::closed(dim, move |_, _| c).with_gradient(|_, _, g| g.fill(0.0)).with_time_derivative(|_, _| 0.0)
    }

    pub fn from_poly(p: &Poly) -> Self {
        let grads = p.gradient();
        let dt = p.partial_t();
        let p = p.clone();
        ScalarField::closed(p.dim(), {
            let p = p.clone();
            move |x, t| p.eval(x, t)
        })
        .with_gradient(move |x, t, out| {
            for (o, g) in out.iter_mut().zip(&grads) {
                *o = g.eval(x, t);
            }
        })
        .with_time_derivative(move |x, t| dt.eval(x, t))
    }

    pub fn from_grid(grid_field: GriddedField) -> Self {
        ScalarField {
            inner: Arc::new(Inner::Grid(grid_field)),
        }
    }

    /// Attaches an analytic gradient, replacing finite differences.
    pub fn with_gradient(
        self,
        g: impl Fn(&[f64], f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        match Arc::try_unwrap(self.inner) {
            Ok(Inner::Closed {
                dim,
                value,
                time_derivative,
                fd_step,
                ..
            }) => ScalarField {
                inner: Arc::new(Inner::Closed {
                    dim,
                    value,
                    gradient: Some(Box::new(g)),
                    time_derivative,
                    fd_step,
                }),
            },
            _ => panic!("with_gradient requires an unshared closed-form field"),
        }
    }

    /// Attaches an analytic time derivative, replacing finite differences.
    pub fn with_time_derivative(
        self,
        dt: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        match Arc::try_unwrap(self.inner) {
            Ok(Inner::Closed {
                dim,
                value,
                gradient,
                fd_step,
                ..
            }) => ScalarField {
                inner: Arc::new(Inner::Closed {
                    dim,
                    value,
                    gradient,
                    time_derivative: Some(Box::new(dt)),
                    fd_step,
                }),
            },
            _ => panic!("with_time_derivative requires an unshared closed-form field"),
        }
    }

    pub fn dim(&self) -> usize {
        match &*self.inner {
            Inner::Closed { dim, .. } => *dim,
            Inner::Grid(g) => g.grid.dim(),
        }
    }

    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        match &*self.inner {
            Inner::Closed { value, .. } => value(x, t),
            Inner::Grid(g) => g.eval(x, t),
        }
    }

    /// Spatial gradient written into `out` (length `dim`).
    pub fn gradient_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        match &*self.inner {
            Inner::Closed {
                value,
                gradient,
                fd_step,
                ..
            } => {
                if let Some(g) = gradient {
                    g(x, t, out);
                } else {
                    let mut xp = x.to_vec();
                    for a in 0..x.len() {
                        xp[a] = x[a] + fd_step;
                        let up = value(&xp, t);
                        xp[a] = x[a] - fd_step;
                        let um = value(&xp, t);
                        xp[a] = x[a];
                        out[a] = (up - um) / (2.0 * fd_step);
                    }
                }
            }
            Inner::Grid(g) => g.gradient_into(x, t, out),
        }
    }

    pub fn gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(x, t, &mut out);
        out
    }

    pub fn time_derivative(&self, x: &[f64], t: f64) -> f64 {
        match &*self.inner {
            Inner::Closed {
                value,
                time_derivative,
                fd_step,
                ..
            } => match time_derivative {
                Some(dt) => dt(x, t),
                None => (value(x, t + fd_step) - value(x, t - fd_step)) / (2.0 * fd_step),
            },
            Inner::Grid(g) => g.time_derivative(x, t),
        }
    }

    pub fn as_grid(&self) -> Option<&GriddedField> {
        match &*self.inner {
            Inner::Grid(g) => Some(g),
            _ => None,
        }
    }

    /// Time step below which this field carries no information: the grid's
    /// `tau` for sampled fields, zero for closed-form ones. Strip quadratures
    /// against `1/(-t)` weights should not band deeper than this.
    pub fn time_resolution(&self) -> f64 {
        match &*self.inner {
            Inner::Grid(g) => g.grid.tau(),
            _ => 0.0,
        }
    }

    /// Samples this field on a grid.
    pub fn sample(&self, grid: &SpaceTimeGrid, outside: OutsideMode, interp: InterpMode) -> GriddedField {
        let nx = grid.spatial_count();
        let values = exec::map_indexed(grid.node_count(), |idx| {
            let k = idx / nx;
            let x = grid.spatial_coords(idx % nx);
            self.value(&x, grid.times()[k])
        });
        GriddedField::new(grid.clone(), values, outside, interp)
    }

    /// Translated view `v(x, t) = u(x0 + x, t0 + t)`.
    pub fn translate(&self, x0: &[f64], t0: f64) -> ScalarField {
        assert_eq!(x0.len(), self.dim());
        let base = self.clone();
        let x0 = x0.to_vec();
        let shift = move |x: &[f64], buf: &mut Vec<f64>| {
            buf.clear();
            buf.extend(x.iter().zip(&x0).map(|(a, b)| a + b));
        };
        let (b1, b2, b3) = (base.clone(), base.clone(), base);
        let (s1, s2, s3) = (shift.clone(), shift.clone(), shift);
        let t0c = t0;
        ScalarField::closed(self.dim(), move |x, t| {
            let mut buf = Vec::with_capacity(x.len());
            s1(x, &mut buf);
            b1.value(&buf, t0c + t)
        })
        .with_gradient(move |x, t, out| {
            let mut buf = Vec::with_capacity(x.len());
            s2(x, &mut buf);
            b2.gradient_into(&buf, t0c + t, out);
        })
        .with_time_derivative(move |x, t| {
            let mut buf = Vec::with_capacity(x.len());
            s3(x, &mut buf);
            b3.time_derivative(&buf, t0c + t)
        })
    }

    /// Parabolic rescaling `u_r(x, t) = u(x0 + r x, t0 + r² t) / r²` about a
    /// base point; preserves solutions of the unit-forcing problem.
    pub fn parabolic_rescale(&self, x0: &[f64], t0: f64, r: f64) -> ScalarField {
        assert!(r > 0.0, "rescaling radius must be positive");
        assert_eq!(x0.len(), self.dim());
        let base = self.clone();
        let x0 = x0.to_vec();
        let map = move |x: &[f64], buf: &mut Vec<f64>| {
            buf.clear();
            buf.extend(x.iter().zip(&x0).map(|(a, b)| b + r * a));
        };
        let (b1, b2, b3) = (base.clone(), base.clone(), base);
        let (m1, m2, m3) = (map.clone(), map.clone(), map);
        ScalarField::closed(self.dim(), move |x, t| {
            let mut buf = Vec::with_capacity(x.len());
            m1(x, &mut buf);
            b1.value(&buf, t0 + r * r * t) / (r * r)
        })
        .with_gradient(move |x, t, out| {
            let mut buf = Vec::with_capacity(x.len());
            m2(x, &mut buf);
            b2.gradient_into(&buf, t0 + r * r * t, out);
            for o in out.iter_mut() {
                *o /= r;
            }
        })
        .with_time_derivative(move |x, t| {
            let mut buf = Vec::with_capacity(x.len());
            m3(x, &mut buf);
            b3.time_derivative(&buf, t0 + r * r * t)
        })
    }

    /// Pointwise `c · u`.
    pub fn scaled(&self, c: f64) -> ScalarField {
        let (b1, b2, b3) = (self.clone(), self.clone(), self.clone());
        ScalarField::closed(self.dim(), move |x, t| c * b1.value(x, t))
            .with_gradient(move |x, t, out| {
                b2.gradient_into(x, t, out);
                for o in out.iter_mut() {
                    *o *= c;
                }
            })
            .with_time_derivative(move |x, t| c * b3.time_derivative(x, t))
    }

    /// Pointwise `u - v`.
    pub fn difference(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.dim(), other.dim());
        let (a1, a2, a3) = (self.clone(), self.clone(), self.clone());
        let (c1, c2, c3) = (other.clone(), other.clone(), other.clone());
        let dim = self.dim();
        ScalarField::closed(dim, move |x, t| a1.value(x, t) - c1.value(x, t))
            .with_gradient(move |x, t, out| {
                a2.gradient_into(x, t, out);
                let mut tmp = vec![0.0; x.len()];
                c2.gradient_into(x, t, &mut tmp);
                for (o, v) in out.iter_mut().zip(&tmp) {
                    *o -= v;
                }
            })
            .with_time_derivative(move |x, t| a3.time_derivative(x, t) - c3.time_derivative(x, t))
    }
}

/// Values on a space-time grid, interpolated between nodes.
pub struct GriddedField {
    // Debug elides the value array; see the manual impl below.
    pub grid: SpaceTimeGrid,
    values: Vec<f64>,
    pub outside: OutsideMode,
    pub interp: InterpMode,
    gradient_grids: OnceLock<Vec<Vec<f64>>>,
    dt_grid: OnceLock<Vec<f64>>,
}

impl std::fmt::Debug for GriddedField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GriddedField")
            .field("grid", &self.grid)
            .field("outside", &self.outside)
            .field("interp", &self.interp)
            .field("values.len", &self.values.len())
            .finish()
    }
}

impl Clone for GriddedField {
    fn clone(&self) -> Self {
        GriddedField {
            grid: self.grid.clone(),
            values: self.values.clone(),
            outside: self.outside,
            interp: self.interp,
            gradient_grids: OnceLock::new(),
            dt_grid: OnceLock::new(),
        }
    }
}

impl GriddedField {
    pub fn new(grid: SpaceTimeGrid, values: Vec<f64>, outside: OutsideMode, interp: InterpMode) -> Self {
        assert_eq!(values.len(), grid.node_count(), "value array must cover every node");
        GriddedField {
            grid,
            values,
            outside,
            interp,
            gradient_grids: OnceLock::new(),
            dt_grid: OnceLock::new(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Node value at time level `k`, flat spatial index `s`.
    pub fn node(&self, k: usize, s: usize) -> f64 {
        self.values[k * self.grid.spatial_count() + s]
    }

    pub fn time_slice(&self, k: usize) -> &[f64] {
        let nx = self.grid.spatial_count();
        &self.values[k * nx..(k + 1) * nx]
    }

    fn clamp_time(&self, t: f64) -> f64 {
        t.clamp(-self.grid.t_depth(), 0.0)
    }

    /// True when `x` lies strictly outside the spatial box (beyond rounding).
    fn outside_box(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.grid.spatial_box())
            .any(|(&xi, &(lo, hi))| xi < lo - 1e-12 || xi > hi + 1e-12)
    }

    /// Per-axis interpolation stencil: up to 3 `(node, weight)` pairs.
    fn axis_stencil(&self, a: usize, x: f64) -> ([(usize, f64); 3], usize) {
        let (lo, _) = self.grid.spatial_box()[a];
        let m = self.grid.axis_count(a);
        let xi = ((x - lo) / self.grid.h()).clamp(0.0, (m - 1) as f64);
        match self.interp {
            InterpMode::Linear => {
                let j = (xi.floor() as usize).min(m - 2);
                let w = xi - j as f64;
                ([(j, 1.0 - w), (j + 1, w), (0, 0.0)], 2)
            }
            InterpMode::Quadratic => {
                let c = (xi.round() as usize).clamp(1, m - 2);
                let d = xi - c as f64;
                (
                    [
                        (c - 1, 0.5 * d * (d - 1.0)),
                        (c, 1.0 - d * d),
                        (c + 1, 0.5 * d * (d + 1.0)),
                    ],
                    3,
                )
            }
        }
    }

    /// Interpolates grid array `vals` (same layout as `values`) at `(x, t)`.
    fn interp_array(&self, vals: &[f64], x: &[f64], t: f64) -> f64 {
        let t = self.clamp_time(t);
        let times = self.grid.times();
        let k_hi = times.partition_point(|&tk| tk < t).min(times.len() - 1).max(1);
        let (t0, t1) = (times[k_hi - 1], times[k_hi]);
        let theta = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);

        let dim = self.grid.dim();
        let mut stencils = [[(0usize, 0.0f64); 3]; 3];
        let mut widths = [0usize; 3];
        for a in 0..dim {
            let (st, w) = self.axis_stencil(a, x[a]);
            stencils[a] = st;
            widths[a] = w;
        }
        let nx = self.grid.spatial_count();
        let slice0 = &vals[(k_hi - 1) * nx..k_hi * nx];
        let slice1 = &vals[k_hi * nx..(k_hi + 1) * nx];

        let mut acc0 = 0.0;
        let mut acc1 = 0.0;
        let mut combo = [0usize; 3];
        'combos: loop {
            let mut weight = 1.0;
            let mut multi = [0usize; 3];
            for a in 0..dim {
                let (j, w) = stencils[a][combo[a]];
                weight *= w;
                multi[a] = j;
            }
            if weight != 0.0 {
                let sidx = self.grid.encode_spatial(&multi[..dim]);
                acc0 += weight * slice0[sidx];
                acc1 += weight * slice1[sidx];
            }
            for a in (0..dim).rev() {
                combo[a] += 1;
                if combo[a] < widths[a] {
                    continue 'combos;
                }
                combo[a] = 0;
                if a == 0 {
                    break 'combos;
                }
            }
        }
        (1.0 - theta) * acc0 + theta * acc1
    }

    /// Clamps `x` into the box for `Clamp` mode; returns `None` when the
    /// point is outside and the mode is `Zero`.
    fn effective_point(&self, x: &[f64]) -> Option<Vec<f64>> {
        if self.outside_box(x) {
            match self.outside {
                OutsideMode::Zero => None,
                OutsideMode::Clamp => Some(
                    x.iter()
                        .zip(self.grid.spatial_box())
                        .map(|(&xi, &(lo, hi))| xi.clamp(lo, hi))
                        .collect(),
                ),
            }
        } else {
            Some(x.to_vec())
        }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self.effective_point(x) {
            None => 0.0,
            Some(xc) => self.interp_array(&self.values, &xc, t),
        }
    }

    fn build_gradient_grids(&self) -> Vec<Vec<f64>> {
        let g = &self.grid;
        let nx = g.spatial_count();
        let h = g.h();
        (0..g.dim())
            .map(|a| {
                exec::map_indexed(g.node_count(), |idx| {
                    let (k, s) = (idx / nx, idx % nx);
                    let mut multi = g.decode_spatial(s);
                    let m = g.axis_count(a);
                    let j = multi[a];
                    let at = |multi: &mut Vec<usize>, jj: usize| -> f64 {
                        multi[a] = jj;
                        let v = self.node(k, g.encode_spatial(multi));
                        multi[a] = j;
                        v
                    };
                    if j == 0 {
                        (-3.0 * at(&mut multi, 0) + 4.0 * at(&mut multi, 1) - at(&mut multi, 2))
                            / (2.0 * h)
                    } else if j == m - 1 {
                        (3.0 * at(&mut multi, m - 1) - 4.0 * at(&mut multi, m - 2)
                            + at(&mut multi, m - 3))
                            / (2.0 * h)
                    } else {
                        (at(&mut multi, j + 1) - at(&mut multi, j - 1)) / (2.0 * h)
                    }
                })
            })
            .collect()
    }

    fn build_dt_grid(&self) -> Vec<f64> {
        let g = &self.grid;
        let nx = g.spatial_count();
        let times = g.times();
        let kmax = times.len() - 1;
        exec::map_indexed(g.node_count(), |idx| {
            let (k, s) = (idx / nx, idx % nx);
            if kmax == 0 {
                return 0.0;
            }
            if k == 0 {
                (self.node(1, s) - self.node(0, s)) / (times[1] - times[0])
            } else if k == kmax {
                (self.node(kmax, s) - self.node(kmax - 1, s)) / (times[kmax] - times[kmax - 1])
            } else {
                // Three-point formula valid for non-uniform (graded) levels.
                let h1 = times[k] - times[k - 1];
                let h2 = times[k + 1] - times[k];
                let (um, u0, up) = (self.node(k - 1, s), self.node(k, s), self.node(k + 1, s));
                -h2 / (h1 * (h1 + h2)) * um + (h2 - h1) / (h1 * h2) * u0
                    + h1 / (h2 * (h1 + h2)) * up
            }
        })
    }

    pub fn gradient_into(&self, x: &[f64], t: f64, out: &mut [f64]) {
        match self.effective_point(x) {
            None => out.fill(0.0),
            Some(xc) => {
                let grids = self.gradient_grids.get_or_init(|| self.build_gradient_grids());
                for (a, grid_a) in grids.iter().enumerate() {
                    out[a] = self.interp_array(grid_a, &xc, t);
                }
            }
        }
    }

    pub fn time_derivative(&self, x: &[f64], t: f64) -> f64 {
        match self.effective_point(x) {
            None => 0.0,
            Some(xc) => {
                let dt = self.dt_grid.get_or_init(|| self.build_dt_grid());
                self.interp_array(dt, &xc, t)
            }
        }
    }
}
