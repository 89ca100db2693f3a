use crate::error::{Error, Result};

/// Tensor-product space-time grid on `box × [-T, 0]`.
///
/// Spatial nodes are uniform with spacing `h` along every axis; each axis
/// extent must be an integer number of cells. Time levels run from `-T` up
/// to `0` inclusive, either uniformly with step `tau` or geometrically graded
/// toward the final time: with grading ratio `q ∈ (0,1)` the levels are
/// `-T·q^j` down to the finest step `tau`, so steps *shrink* by `q` as
/// `t → 0`, which resolves the parabolic scaling of the backward Gaussian
/// weight near the vertex. In the graded case `tau` is the finest step, not
/// the uniform one.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeGrid {
    dim: usize,
    spatial_box: Vec<(f64, f64)>,
    h: f64,
    t_depth: f64,
    tau: f64,
    grading: Option<f64>,
    axis_counts: Vec<usize>,
    times: Vec<f64>,
}

/// Relative slack used when checking that extents divide evenly.
const DIVISIBILITY_TOL: f64 = 1e-9;

impl SpaceTimeGrid {
    /// Uniform-in-time grid.
    pub fn uniform(spatial_box: &[(f64, f64)], h: f64, t_depth: f64, tau: f64) -> Result<Self> {
        Self::new(spatial_box, h, t_depth, tau, None)
    }

    pub fn new(
        spatial_box: &[(f64, f64)],
        h: f64,
        t_depth: f64,
        tau: f64,
        grading: Option<f64>,
    ) -> Result<Self> {
        let dim = spatial_box.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::Config(format!(
                "spatial dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if !(h > 0.0) || !(tau > 0.0) || !(t_depth > 0.0) {
            return Err(Error::Config(format!(
                "grid steps and depth must be positive: h={h}, tau={tau}, t_depth={t_depth}"
            )));
        }
        let mut axis_counts = Vec::with_capacity(dim);
        for (a, &(lo, hi)) in spatial_box.iter().enumerate() {
            if !(hi > lo) {
                return Err(Error::Config(format!(
                    "axis {a}: box must have positive extent, got [{lo}, {hi}]"
                )));
            }
            let cells = (hi - lo) / h;
            let m = cells.round();
            if (cells - m).abs() > DIVISIBILITY_TOL * cells.max(1.0) || m < 2.0 {
                return Err(Error::Config(format!(
                    "axis {a}: extent {} is not an integer number (>= 2) of cells of size h={h}",
                    hi - lo
                )));
            }
            axis_counts.push(m as usize + 1);
        }
        let times = build_times(t_depth, tau, grading)?;
        Ok(SpaceTimeGrid {
            dim,
            spatial_box: spatial_box.to_vec(),
            h,
            t_depth,
            tau,
            grading,
            axis_counts,
            times,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spatial_box(&self) -> &[(f64, f64)] {
        &self.spatial_box
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn t_depth(&self) -> f64 {
        self.t_depth
    }

    pub fn grading(&self) -> Option<f64> {
        self.grading
    }

    /// Time levels, ascending from `-t_depth` to exactly `0.0`.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Nodes along spatial axis `a`.
    pub fn axis_count(&self, a: usize) -> usize {
        self.axis_counts[a]
    }

    pub fn axis_coord(&self, a: usize, j: usize) -> f64 {
        self.spatial_box[a].0 + self.h * j as f64
    }

    /// Total nodes in one time slice.
    pub fn spatial_count(&self) -> usize {
        self.axis_counts.iter().product()
    }

    pub fn node_count(&self) -> usize {
        self.spatial_count() * self.times.len()
    }

    /// Decodes a flat spatial index into per-axis indices (axis 0 slowest).
    pub fn decode_spatial(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0usize; self.dim];
        for a in (0..self.dim).rev() {
            out[a] = idx % self.axis_counts[a];
            idx /= self.axis_counts[a];
        }
        out
    }

    pub fn encode_spatial(&self, multi: &[usize]) -> usize {
        let mut idx = 0usize;
        for a in 0..self.dim {
            idx = idx * self.axis_counts[a] + multi[a];
        }
        idx
    }

    /// Spatial coordinates of a flat spatial index.
    pub fn spatial_coords(&self, idx: usize) -> Vec<f64> {
        self.decode_spatial(idx)
            .iter()
            .enumerate()
            .map(|(a, &j)| self.axis_coord(a, j))
            .collect()
    }

    /// True when the multi-index lies on the spatial boundary of the box.
    pub fn is_boundary(&self, multi: &[usize]) -> bool {
        multi
            .iter()
            .zip(&self.axis_counts)
            .any(|(&j, &m)| j == 0 || j == m - 1)
    }

    pub fn contains(&self, x: &[f64], t: f64) -> bool {
        if x.len() != self.dim || t < -self.t_depth - 1e-12 || t > 1e-12 {
            return false;
        }
        x.iter()
            .zip(&self.spatial_box)
            .all(|(&xi, &(lo, hi))| xi >= lo - 1e-12 && xi <= hi + 1e-12)
    }
}

fn build_times(t_depth: f64, tau: f64, grading: Option<f64>) -> Result<Vec<f64>> {
    match grading {
        None => {
            let steps = t_depth / tau;
            let m = steps.round();
            if (steps - m).abs() > DIVISIBILITY_TOL * steps.max(1.0) || m < 1.0 {
                return Err(Error::Config(format!(
                    "time depth {t_depth} is not an integer number of steps of size tau={tau}"
                )));
            }
            let m = m as usize;
            let mut times: Vec<f64> = (0..=m).map(|k| tau * k as f64 - t_depth).collect();
            times[m] = 0.0;
            Ok(times)
        }
        Some(q) => {
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::Config(format!(
                    "time grading ratio must lie in (0,1), got {q}"
                )));
            }
            // Geometric levels -T·q^j walking toward 0; tau is the finest
            // step, so the walk stops once |t| drops to tau and closes with
            // exactly 0. Steps shrink by the factor q toward the final time.
            if tau >= t_depth {
                return Ok(vec![-t_depth, 0.0]);
            }
            let mut times = vec![-t_depth];
            let mut level = t_depth * q;
            while level > tau * (1.0 + 1e-12) {
                times.push(-level);
                level *= q;
            }
            times.push(-level);
            times.push(0.0);
            Ok(times)
        }
    }
}
