//! Periodic spatial discretization, field storage, interpolation and
//! windowed reductions.
//!
//! The domain is the centered torus `[-L/2, L/2)^n` with `n ∈ {1, 2}`,
//! discretized by `N` equispaced sites per axis (`N` a power of two).
//! Diagnostics that compare against whole-space formulas are restricted to
//! the inner window `|x| ≤ L/4`, where periodic-image contamination of the
//! Poisson extension is `O(t/L)`.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// Maximum number of target components carried by a field.
pub const MAX_M: usize = 3;

/// A point of the domain; only the first `n` entries are meaningful.
pub type Point = [f64; 2];

/// Periodic uniform grid on `[-L/2, L/2)^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    extent: f64,
    points_per_axis: usize,
}

/// Builds a grid, validating `n ∈ {1,2}`, `L > 0`, `N` a power of two ≥ 16.
pub fn make_grid(n: usize, extent: f64, points_per_axis: usize) -> Result<Grid> {
    Grid::new(n, extent, points_per_axis)
}

impl Grid {
    pub fn new(n: usize, extent: f64, points_per_axis: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::Config(format!("unsupported dimension n={n} (want 1 or 2)")));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::Config(format!("domain extent L={extent} must be positive")));
        }
        if points_per_axis < 16 || !points_per_axis.is_power_of_two() {
            return Err(Error::Config(format!(
                "N={points_per_axis} must be a power of two ≥ 16"
            )));
        }
        Ok(Grid { n, extent, points_per_axis })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Grid spacing `Δ = L/N`.
    pub fn spacing(&self) -> f64 {
        self.extent / self.points_per_axis as f64
    }

    /// Total number of sites `N^n`.
    pub fn site_count(&self) -> usize {
        self.points_per_axis.pow(self.n as u32)
    }

    /// Coordinate of axis index `i`: `x_i = -L/2 + iΔ`.
    pub fn axis_coord(&self, i: usize) -> f64 {
        -0.5 * self.extent + i as f64 * self.spacing()
    }

    /// Multi-index of a flat site index (lexicographic, axis 0 slowest).
    pub fn multi_index(&self, site: usize) -> [usize; 2] {
        match self.n {
            1 => [site, 0],
            _ => [site / self.points_per_axis, site % self.points_per_axis],
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        match self.n {
            1 => idx[0],
            _ => idx[0] * self.points_per_axis + idx[1],
        }
    }

    /// Coordinates of a flat site index.
    pub fn site_coord(&self, site: usize) -> Point {
        let mi = self.multi_index(site);
        let mut p = [0.0; 2];
        for a in 0..self.n {
            p[a] = self.axis_coord(mi[a]);
        }
        p
    }

    /// Wraps an axis index into `0..N`.
    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.points_per_axis as isize) as usize
    }

    /// Periodic displacement `a - b` per axis, mapped into `(-L/2, L/2]`.
    pub fn periodic_delta(&self, a: f64, b: f64) -> f64 {
        let mut d = (a - b) % self.extent;
        if d > 0.5 * self.extent {
            d -= self.extent;
        } else if d <= -0.5 * self.extent {
            d += self.extent;
        }
        d
    }

    /// Periodic Euclidean distance between two points.
    pub fn periodic_distance(&self, a: Point, b: Point) -> f64 {
        let mut s = 0.0;
        for ax in 0..self.n {
            let d = self.periodic_delta(a[ax], b[ax]);
            s += d * d;
        }
        s.sqrt()
    }
}

/// Vector-valued samples on a [`Grid`]; `m ∈ {1, 2, 3}` components per site,
/// stored interleaved in site order.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    m: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid, m: usize) -> Self {
        assert!(m >= 1 && m <= MAX_M, "m={m} out of range");
        Field { grid, m, values: vec![0.0; grid.site_count() * m] }
    }

    pub fn constant(grid: Grid, value: &[f64]) -> Self {
        let m = value.len();
        let mut f = Field::zeros(grid, m);
        for s in 0..grid.site_count() {
            f.values[s * m..(s + 1) * m].copy_from_slice(value);
        }
        f
    }

    pub fn from_values(grid: Grid, m: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.site_count() * m {
            return Err(Error::Shape(format!(
                "value count {} != {} sites × {m}",
                values.len(),
                grid.site_count()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Data("field contains non-finite values".into()));
        }
        Ok(Field { grid, m, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, site: usize) -> &[f64] {
        &self.values[site * self.m..(site + 1) * self.m]
    }

    #[inline]
    pub fn comp(&self, site: usize, c: usize) -> f64 {
        self.values[site * self.m + c]
    }

    /// Extracts component `c` as a scalar field.
    pub fn component(&self, c: usize) -> Field {
        let mut out = Field::zeros(self.grid, 1);
        for s in 0..self.grid.site_count() {
            out.values[s] = self.comp(s, c);
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        // Per-site Euclidean magnitude, max over sites.
        let m = self.m;
        (0..self.grid.site_count())
            .map(|s| {
                let v = &self.values[s * m..(s + 1) * m];
                v.iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: f64) -> Field {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    pub fn add_scaled(&mut self, other: &Field, c: f64) {
        assert_eq!(self.values.len(), other.values.len(), "field shape mismatch");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    pub fn sub(&self, other: &Field) -> Field {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    /// Maximum Euclidean distance between values of two fields.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.sub(other).sup_norm()
    }

    /// Cyclically shifts the field by the given site offsets per axis.
    pub fn shift_sites(&self, offsets: [isize; 2]) -> Field {
        let g = self.grid;
        let n_ax = g.points_per_axis();
        let mut out = Field::zeros(g, self.m);
        for s in 0..g.site_count() {
            let mi = g.multi_index(s);
            let mut src = [0usize; 2];
            for a in 0..g.dim() {
                src[a] = g.wrap(mi[a] as isize - offsets[a]);
            }
            if g.dim() == 1 {
                src[1] = 0;
            }
            let src_flat = if g.dim() == 1 { src[0] } else { src[0] * n_ax + src[1] };
            let m = self.m;
            out.values[s * m..(s + 1) * m].copy_from_slice(self.at(src_flat));
        }
        out
    }
}

/// Samples `f` at the grid sites into a field with `m` components.
pub fn sample_function(
    grid: Grid,
    m: usize,
    f: impl Fn(Point) -> [f64; MAX_M],
) -> Result<Field> {
    assert!(m >= 1 && m <= MAX_M, "m={m} out of range");
    let mut values = vec![0.0; grid.site_count() * m];
    for s in 0..grid.site_count() {
        let v = f(grid.site_coord(s));
        for c in 0..m {
            if !v[c].is_finite() {
                return Err(Error::Data(format!(
                    "sampled function produced non-finite value at site {s}"
                )));
            }
            values[s * m + c] = v[c];
        }
    }
    Ok(Field { grid, m, values })
}

// Lagrange weights on the 4-point stencil {-1, 0, 1, 2} at parameter s ∈ [0,1);
// reproduces cubics exactly and is exact at the stencil nodes.
#[inline]
fn lagrange4(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

// Axis position -> (base index, fractional parameter), snapping to sites so
// queries at grid sites return stored values exactly.
#[inline]
fn axis_locate(grid: &Grid, x: f64) -> (isize, f64) {
    let u = (x + 0.5 * grid.extent()) / grid.spacing();
    let mut i = u.floor();
    let mut s = u - i;
    if s < 1e-9 {
        s = 0.0;
    } else if s > 1.0 - 1e-9 {
        i += 1.0;
        s = 0.0;
    }
    (i as isize, s)
}

/// Periodic cubic interpolation of `field` at `point` (wrapped periodically).
///
/// Exact at grid sites and for polynomials of degree ≤ 3 sampled locally.
pub fn interpolate(field: &Field, point: Point) -> [f64; MAX_M] {
    let g = field.grid();
    let m = field.m();
    let mut out = [0.0; MAX_M];
    match g.dim() {
        1 => {
            let (i0, s) = axis_locate(&g, point[0]);
            let w = lagrange4(s);
            for (k, wk) in w.iter().enumerate() {
                if *wk == 0.0 {
                    continue;
                }
                let site = g.wrap(i0 + k as isize - 1);
                for c in 0..m {
                    out[c] += wk * field.comp(site, c);
                }
            }
        }
        _ => {
            let (i0, s0) = axis_locate(&g, point[0]);
            let (i1, s1) = axis_locate(&g, point[1]);
            let w0 = lagrange4(s0);
            let w1 = lagrange4(s1);
            let n_ax = g.points_per_axis();
            for (k0, a0) in w0.iter().enumerate() {
                if *a0 == 0.0 {
                    continue;
                }
                let r0 = g.wrap(i0 + k0 as isize - 1) * n_ax;
                for (k1, a1) in w1.iter().enumerate() {
                    if *a1 == 0.0 {
                        continue;
                    }
                    let site = r0 + g.wrap(i1 + k1 as isize - 1);
                    let w = a0 * a1;
                    for c in 0..m {
                        out[c] += w * field.comp(site, c);
                    }
                }
            }
        }
    }
    out
}

/// Mean of a scalar field over the periodic ball `B_r(center)`, by
/// site-center inclusion (strict `dist < r`), fixed summation order.
pub fn window_average(field: &Field, center: Point, radius: f64) -> Result<f64> {
    let g = field.grid();
    if field.m() != 1 {
        return Err(Error::Shape("window_average expects a scalar field".into()));
    }
    if !(radius > 0.0) || radius > 0.25 * g.extent() {
        return Err(Error::Domain(format!(
            "window radius {radius} outside (0, L/4] with L={}",
            g.extent()
        )));
    }
    let delta = g.spacing();
    let reach = (radius / delta).ceil() as isize;
    let mut sum = 0.0;
    let mut count = 0usize;
    match g.dim() {
        1 => {
            let (i0, _) = axis_locate(&g, center[0]);
            for o in -reach..=reach {
                let site = g.wrap(i0 + o);
                let x = g.axis_coord(site);
                if g.periodic_delta(x, center[0]).abs() < radius {
                    sum += field.values()[site];
                    count += 1;
                }
            }
        }
        _ => {
            let (i0, _) = axis_locate(&g, center[0]);
            let (i1, _) = axis_locate(&g, center[1]);
            let n_ax = g.points_per_axis();
            for o0 in -reach..=reach {
                let r = g.wrap(i0 + o0);
                let d0 = g.periodic_delta(g.axis_coord(r), center[0]);
                if d0.abs() >= radius {
                    continue;
                }
                for o1 in -reach..=reach {
                    let ccol = g.wrap(i1 + o1);
                    let d1 = g.periodic_delta(g.axis_coord(ccol), center[1]);
                    if d0 * d0 + d1 * d1 < radius * radius {
                        sum += field.values()[r * n_ax + ccol];
                        count += 1;
                    }
                }
            }
        }
    }
    if count == 0 {
        return Err(Error::Domain(format!("empty window: no site within {radius} of center")));
    }
    Ok(sum / count as f64)
}

/// Geometrically graded time mesh `t_j = T·ρ^(j+1-M)`, `j = 0..M-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    horizon: f64,
    ratio: f64,
    nodes: Vec<f64>,
}

impl TimeMesh {
    /// Geometric mesh with `count` nodes ending at `horizon`, ratio `ratio`.
    pub fn geometric(horizon: f64, count: usize, ratio: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Config(format!("horizon T={horizon} must be positive")));
        }
        if count < 2 {
            return Err(Error::Config(format!("time mesh needs ≥ 2 nodes, got {count}")));
        }
        if !(ratio > 1.0) {
            return Err(Error::Config(format!("grading ratio ρ={ratio} must exceed 1")));
        }
        let nodes = (0..count)
            .map(|j| horizon * ratio.powi(j as i32 + 1 - count as i32))
            .collect();
        Ok(TimeMesh { horizon, ratio, nodes })
    }

    /// Geometric mesh with endpoints pinned to `[t1, horizon]`.
    pub fn from_range(t1: f64, horizon: f64, count: usize) -> Result<Self> {
        if !(t1 > 0.0 && t1 < horizon) {
            return Err(Error::Config(format!("need 0 < t1={t1} < T={horizon}")));
        }
        let ratio = (horizon / t1).powf(1.0 / (count as f64 - 1.0));
        let mut mesh = TimeMesh::geometric(horizon, count, ratio)?;
        mesh.nodes[0] = t1; // pin exactly against rounding
        Ok(mesh)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, j: usize) -> f64 {
        self.nodes[j]
    }

    /// Index of the node equal to `t` up to relative 1e-9, if any.
    pub fn find_node(&self, t: f64) -> Option<usize> {
        self.nodes
            .iter()
            .position(|&s| (s - t).abs() <= 1e-9 * self.horizon.max(t.abs()))
    }

    /// Trapezoid weights over `nodes[0..=j]` plus the `(0, t1]` head handled
    /// as `t1·g(t1)`; the weights sum to `nodes[j]` exactly in exact
    /// arithmetic. Returns `(weights, head_weight_index0_extra)` folded in:
    /// `weights[0]` already contains the head rectangle.
    pub fn duhamel_weights(&self, j: usize) -> Vec<f64> {
        let t = &self.nodes;
        let mut w = vec![0.0; j + 1];
        w[0] += t[0]; // head surrogate for (0, t1]
        for i in 0..j {
            let half = 0.5 * (t[i + 1] - t[i]);
            w[i] += half;
            w[i + 1] += half;
        }
        w
    }
}

/// A graded time mesh carrying one field per node.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    mesh: TimeMesh,
    frames: Vec<Field>,
}

impl SpaceTimeField {
    pub fn new(mesh: TimeMesh, frames: Vec<Field>) -> Result<Self> {
        if frames.len() != mesh.len() {
            return Err(Error::Shape(format!(
                "frame count {} != mesh node count {}",
                frames.len(),
                mesh.len()
            )));
        }
        if let Some(first) = frames.first() {
            let g = first.grid();
            let m = first.m();
            if !frames.iter().all(|f| f.grid() == g && f.m() == m) {
                return Err(Error::Shape("frames disagree on grid or target dimension".into()));
            }
        }
        Ok(SpaceTimeField { mesh, frames })
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn frames(&self) -> &[Field] {
        &self.frames
    }

    pub fn frame(&self, j: usize) -> &Field {
        &self.frames[j]
    }

    pub fn grid(&self) -> Grid {
        self.frames[0].grid()
    }

    pub fn m(&self) -> usize {
        self.frames[0].m()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Max over frames of the sup distance to another space-time field.
    pub fn sup_distance(&self, other: &SpaceTimeField) -> f64 {
        self.frames
            .iter()
            .zip(&other.frames)
            .map(|(a, b)| a.sup_distance(b))
            .fold(0.0, f64::max)
    }
}

/// Writes a field snapshot as CSV: comment header, one row per site in
/// lexicographic site order, coordinates then components.
pub fn write_field_csv(field: &Field, path: &Path) -> Result<()> {
    let g = field.grid();
    let mut out = String::new();
    writeln!(
        out,
        "# n={},L={},N={},m={}",
        g.dim(),
        g.extent(),
        g.points_per_axis(),
        field.m()
    )
    .expect("string write");
    for s in 0..g.site_count() {
        let p = g.site_coord(s);
        for a in 0..g.dim() {
            if a > 0 {
                out.push(',');
            }
            write!(out, "{}", p[a]).expect("string write");
        }
        for c in 0..field.m() {
            write!(out, ",{}", field.comp(s, c)).expect("string write");
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a field snapshot written by [`write_field_csv`].
pub fn read_field_csv(path: &Path) -> Result<Field> {
    let text = std::fs::read_to_string(path)?;
    let mut header = None;
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if header.is_none() {
                header = Some(rest.trim().to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        rows.push(line.to_string());
    }
    let header = header.ok_or_else(|| Error::Data("missing # header in field CSV".into()))?;
    let mut n = 0;
    let mut extent = 0.0;
    let mut n_axis = 0;
    let mut m = 0;
    for part in header.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Data(format!("bad header entry {part}")))?;
        let v = v.trim();
        match k.trim() {
            "n" => n = v.parse::<usize>().map_err(|e| Error::Data(e.to_string()))?,
            "L" => extent = v.parse::<f64>().map_err(|e| Error::Data(e.to_string()))?,
            "N" => n_axis = v.parse::<usize>().map_err(|e| Error::Data(e.to_string()))?,
            "m" => m = v.parse::<usize>().map_err(|e| Error::Data(e.to_string()))?,
            other => return Err(Error::Data(format!("unknown header key {other}"))),
        }
    }
    let grid = Grid::new(n, extent, n_axis)?;
    if rows.len() != grid.site_count() {
        return Err(Error::Shape(format!(
            "row count {} != site count {}",
            rows.len(),
            grid.site_count()
        )));
    }
    let mut values = vec![0.0; grid.site_count() * m];
    for (s, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        if cols.len() != grid.dim() + m {
            return Err(Error::Shape(format!("row {s} has {} columns", cols.len())));
        }
        for c in 0..m {
            values[s * m + c] = cols[grid.dim() + c]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Data(format!("row {s}: {e}")))?;
        }
    }
    Field::from_values(grid, m, values)
}
