//! Function-space seminorm estimators: the Carleson-type seminorm
//! `[a]_{𝒜_T}` of initial data, the solution-space `X_T` and forcing-space
//! `Y_T` norms, the fractional mean oscillation seminorm `Q₀`, BMO, a
//! discrete Littlewood–Paley Besov seminorm, and the Fubini tail oracle.
//!
//! Suprema over window radii are restricted to dyadic samples and window
//! centers to a strided site subgrid; radius sets are nested across
//! horizons, which makes `T ↦ [a]_{𝒜_T}` monotone by construction. Time
//! integrals use the graded trapezoid rule with the `(0, t₁]` head taken as
//! the rectangle `t₁·g(t₁)`; the head's share of the reported value is
//! recorded in the report components.

use crate::error::{Error, Result};
use crate::fracgrad::{self, Annulus};
use crate::grid::{Field, Grid, SpaceTimeField, TimeMesh};
use crate::spectral::{self, poisson_semigroup};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Location attaining a reported supremum.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ArgSup {
    pub x: Vec<f64>,
    pub scale: f64,
    /// What `scale` means: window radius `r`, time `t`, or dyadic `shell`.
    pub scale_kind: String,
}

/// Value + named components + arg-sup location + sampling descriptors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeminormReport {
    pub value: f64,
    pub components: BTreeMap<String, f64>,
    pub argsup: ArgSup,
    pub mesh: BTreeMap<String, f64>,
}

impl SeminormReport {
    fn new(value: f64) -> Self {
        SeminormReport {
            value,
            components: BTreeMap::new(),
            argsup: ArgSup::default(),
            mesh: BTreeMap::new(),
        }
    }

    pub fn component(&self, name: &str) -> f64 {
        *self.components.get(name).unwrap_or(&f64::NAN)
    }
}

/// Sampling policy for suprema over windows `(x, r)` and inner time meshes.
///
/// Radii are dyadic `{r_max, r_max/2, …}` clamped to `[16Δ, L/4]`; the
/// inner time mesh for radius `r` is geometric with ratio `2^{1/per_octave}`
/// so that dyadic radii share density evaluations node for node.
#[derive(Debug, Clone)]
pub struct SupSampling {
    pub r_set: Vec<f64>,
    pub x_stride: usize,
    pub t_nodes: usize,
    pub t_per_octave: usize,
    pub density_stride: usize,
}

impl SupSampling {
    pub fn for_grid(grid: &Grid, r_max: f64) -> Result<Self> {
        let delta = grid.spacing();
        let floor = 16.0 * delta;
        let cap = 0.25 * grid.extent();
        let mut r = r_max.min(cap);
        let mut r_set = Vec::new();
        while r >= floor * (1.0 - 1e-12) {
            r_set.push(r);
            r *= 0.5;
        }
        if r_set.is_empty() {
            return Err(Error::Domain(format!(
                "no admissible window radii: r_max={r_max} below 16Δ={floor}"
            )));
        }
        Ok(SupSampling {
            r_set,
            x_stride: 4,
            t_nodes: 36,
            t_per_octave: 6,
            density_stride: if grid.dim() == 1 { 1 } else { 2 },
        })
    }

    /// Inner time mesh for window radius `r` (ascending nodes, last = r).
    fn time_nodes(&self, r: f64) -> Vec<f64> {
        let q = self.t_per_octave as f64;
        (0..self.t_nodes)
            .map(|i| r * 2f64.powf(-((self.t_nodes - 1 - i) as f64) / q))
            .collect()
    }

    fn describe(&self, mesh: &mut BTreeMap<String, f64>) {
        mesh.insert("r_max".into(), self.r_set[0]);
        mesh.insert("r_count".into(), self.r_set.len() as f64);
        mesh.insert("x_stride".into(), self.x_stride as f64);
        mesh.insert("t_nodes".into(), self.t_nodes as f64);
        mesh.insert("t_per_octave".into(), self.t_per_octave as f64);
        mesh.insert("density_stride".into(), self.density_stride as f64);
    }
}

// ---------------------------------------------------------------------------
// windowed means over periodic balls, by prefix sums

/// Prefix-sum structure for fast ball means of a scalar field.
pub(crate) struct WindowEngine {
    grid: Grid,
    // 1D: plain prefix over the doubled array; 2D: per-row prefixes, doubled
    prefix: Vec<f64>,
}

impl WindowEngine {
    pub(crate) fn new(scalar: &Field) -> Self {
        let grid = scalar.grid();
        let n = grid.points_per_axis();
        let prefix = match grid.dim() {
            1 => {
                let mut p = vec![0.0; 3 * n + 1];
                for i in 0..3 * n {
                    p[i + 1] = p[i] + scalar.values()[i % n];
                }
                p
            }
            _ => {
                let mut p = vec![0.0; n * (3 * n + 1)];
                for row in 0..n {
                    let base = row * (3 * n + 1);
                    for i in 0..3 * n {
                        p[base + i + 1] = p[base + i] + scalar.values()[row * n + i % n];
                    }
                }
                p
            }
        };
        WindowEngine { grid, prefix }
    }

    // sum of row `row` over axis-1 offsets in [center-halfwidth, center+halfwidth]
    #[inline]
    fn row_sum(&self, row: usize, center: usize, halfwidth: usize) -> f64 {
        let n = self.grid.points_per_axis();
        let lo = center + n - halfwidth;
        let hi = center + n + halfwidth + 1;
        let base = row * (3 * n + 1);
        self.prefix[base + hi] - self.prefix[base + lo]
    }

    /// Mean over the ball of radius `r` centered at the given site
    /// (site-center inclusion, strict `< r`); returns (mean, count).
    pub(crate) fn ball_mean(&self, center_site: usize, r: f64) -> (f64, usize) {
        let g = &self.grid;
        let n = g.points_per_axis();
        let delta = g.spacing();
        let rr = (r / delta) * (r / delta) - 1e-9;
        let o_max = ((r / delta) - 1e-9).floor().max(0.0) as usize;
        match g.dim() {
            1 => {
                let count = 2 * o_max + 1;
                let lo = center_site + n - o_max;
                let hi = center_site + n + o_max + 1;
                ((self.prefix[hi] - self.prefix[lo]) / count as f64, count)
            }
            _ => {
                let c0 = center_site / n;
                let c1 = center_site % n;
                let mut sum = 0.0;
                let mut count = 0usize;
                for dy in -(o_max as isize)..=(o_max as isize) {
                    let row = (c0 as isize + dy).rem_euclid(n as isize) as usize;
                    let rem = rr - (dy * dy) as f64;
                    if rem < 0.0 {
                        continue;
                    }
                    let w = rem.sqrt().floor() as usize;
                    sum += self.row_sum(row, c1, w);
                    count += 2 * w + 1;
                }
                (sum / count as f64, count)
            }
        }
    }
}

// strided center sites on a grid
fn center_sites(grid: &Grid, stride: usize) -> Vec<usize> {
    let n = grid.points_per_axis();
    match grid.dim() {
        1 => (0..n).step_by(stride).collect(),
        _ => {
            let mut v = Vec::new();
            for i0 in (0..n).step_by(stride) {
                for i1 in (0..n).step_by(stride) {
                    v.push(i0 * n + i1);
                }
            }
            v
        }
    }
}

// trapezoid weights on ascending nodes with the (0, t1] head as a rectangle
fn graded_weights(nodes: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; nodes.len()];
    w[0] += nodes[0];
    for i in 0..nodes.len() - 1 {
        let half = 0.5 * (nodes[i + 1] - nodes[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}

// ---------------------------------------------------------------------------
// Carleson seminorm of initial data

/// Shared machinery for `[a]_{𝒜_T}` at every admissible radius: computes
/// the harmonic-extension energy densities once per unique time node and
/// reports, per radius `r`, the windowed Carleson integral supremum.
pub struct CarlesonProfile {
    /// `(r, sup_x I(r,x), argsup center coords, head share at argsup)`
    pub per_radius: Vec<(f64, f64, Vec<f64>, f64)>,
    /// `sup_t t·max_x dens(t)` over the sampled nodes (homogeneous-estimate LHS)
    pub weighted_sup_density: f64,
    sampling: SupSampling,
}

/// Builds the Carleson profile of `a` over all radii in the sampling set.
pub fn carleson_profile(a: &Field, sampling: &SupSampling) -> Result<CarlesonProfile> {
    let grid = a.grid();
    // global log-time lattice: node j ↔ r_max·2^{-j/q}; radius r_k = r_max/2^k
    // uses lattice indices j = k·q + (t_nodes-1-i)
    let q = sampling.t_per_octave;
    let r_max = sampling.r_set[0];
    let n_r = sampling.r_set.len();
    let lattice_len = (n_r - 1) * q + sampling.t_nodes;
    let mut weighted_sup_density: f64 = 0.0;

    let dens_grid = Grid::new(
        grid.dim(),
        grid.extent(),
        grid.points_per_axis() / sampling.density_stride,
    )?;
    let centers = center_sites(&dens_grid, sampling.x_stride);
    let mut means: Vec<Vec<Vec<f64>>> = vec![Vec::new(); lattice_len]; // [j][r_idx][center]

    for (j, slot) in means.iter_mut().enumerate() {
        let t = r_max * 2f64.powf(-(j as f64) / q as f64);
        let v = poisson_semigroup(a, t)?;
        let dens = fracgrad::modulus_sq_strided(&v, &Annulus::full(), sampling.density_stride)?;
        let engine = WindowEngine::new(&dens);
        let coarse_delta = dens.grid().spacing();
        let mut sup_d: f64 = 0.0;
        for &val in dens.values() {
            sup_d = sup_d.max(val);
        }
        weighted_sup_density = weighted_sup_density.max(t * sup_d);
        let mut per_r = vec![Vec::new(); n_r];
        for (k, &r) in sampling.r_set.iter().enumerate() {
            // node j belongs to radius k's mesh iff j ∈ [kq, kq + t_nodes)
            if j < k * q || j >= k * q + sampling.t_nodes {
                continue;
            }
            if r / coarse_delta < 1.0 {
                return Err(Error::Domain(format!(
                    "window radius {r} below density-grid spacing {coarse_delta}"
                )));
            }
            per_r[k] = centers.iter().map(|&c| engine.ball_mean(c, r).0).collect();
        }
        *slot = per_r;
    }

    let mut per_radius = Vec::new();
    for (k, &r) in sampling.r_set.iter().enumerate() {
        let nodes = sampling.time_nodes(r);
        let w = graded_weights(&nodes);
        let mut best = (f64::NEG_INFINITY, 0usize, 0.0f64); // (value, center idx, head part)
        for (ci, _) in centers.iter().enumerate() {
            let mut total = 0.0;
            for (i, wi) in w.iter().enumerate() {
                let j = k * q + (sampling.t_nodes - 1 - i);
                total += wi * means[j][k][ci];
            }
            if total > best.0 {
                let head = nodes[0] * means[k * q + sampling.t_nodes - 1][k][ci];
                best = (total, ci, head);
            }
        }
        let arg = dens_grid.site_coord(centers[best.1]);
        let value = best.0.max(0.0);
        let head_share = if value > 0.0 { best.2 / value } else { 0.0 };
        per_radius.push((r, value, arg[..grid.dim()].to_vec(), head_share));
    }

    Ok(CarlesonProfile {
        per_radius,
        weighted_sup_density,
        sampling: sampling.clone(),
    })
}

impl CarlesonProfile {
    /// `[a]_{𝒜_T}` from the profile: sup over sampled radii `r ≤ T`.
    pub fn seminorm_at(&self, t_horizon: f64) -> Result<SeminormReport> {
        let mut best: Option<&(f64, f64, Vec<f64>, f64)> = None;
        for entry in &self.per_radius {
            if entry.0 <= t_horizon * (1.0 + 1e-12) {
                match best {
                    Some(b) if b.1 >= entry.1 => {}
                    _ => best = Some(entry),
                }
            }
        }
        let entry = best.ok_or_else(|| {
            Error::Domain(format!("no sampled radius below horizon T={t_horizon}"))
        })?;
        let mut rep = SeminormReport::new(entry.1.max(0.0).sqrt());
        rep.components.insert("carleson_sq".into(), entry.1);
        rep.components.insert("head_share".into(), entry.3);
        rep.argsup = ArgSup { x: entry.2.clone(), scale: entry.0, scale_kind: "r".into() };
        self.sampling.describe(&mut rep.mesh);
        rep.mesh.insert("T".into(), t_horizon);
        Ok(rep)
    }
}

/// Carleson-type seminorm `[a]_{𝒜_T}` of initial data: the supremum over
/// parabolic windows of the time-integrated, window-averaged fractional
/// energy density of the harmonic extension `v = p_t ∗ a`.
pub fn carleson_a_seminorm(
    a: &Field,
    t_horizon: f64,
    sampling: &SupSampling,
) -> Result<SeminormReport> {
    let grid = a.grid();
    if t_horizon > grid.extent() / 8.0 * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "horizon T={t_horizon} exceeds inner-window validity L/8={}",
            grid.extent() / 8.0
        )));
    }
    let clamped = SupSampling {
        r_set: sampling
            .r_set
            .iter()
            .copied()
            .filter(|&r| r <= t_horizon * (1.0 + 1e-12))
            .collect(),
        ..sampling.clone()
    };
    if clamped.r_set.is_empty() {
        return Err(Error::Domain(format!(
            "no admissible window radius below T={t_horizon}"
        )));
    }
    let profile = carleson_profile(a, &clamped)?;
    profile.seminorm_at(t_horizon)
}

/// `[a]_{𝒜_T}` for each horizon in `t_list`; non-decreasing in `T` exactly,
/// by nested sampling (all horizons share one radius profile).
pub fn decay_profile(a: &Field, t_list: &[f64], sampling: &SupSampling) -> Result<Vec<(f64, f64)>> {
    let profile = carleson_profile(a, sampling)?;
    t_list
        .iter()
        .map(|&t| Ok((t, profile.seminorm_at(t)?.value)))
        .collect()
}

/// LHS of the homogeneous estimate:
/// `sup_t t·‖d_{1/2}(p_t∗a)‖²_∞` over the sampled Carleson time nodes.
pub fn standard_estimate_sup(a: &Field, sampling: &SupSampling) -> Result<f64> {
    Ok(carleson_profile(a, sampling)?.weighted_sup_density)
}

// ---------------------------------------------------------------------------
// X_T and Y_T space-time norms

fn clamp_radius(grid: &Grid, t: f64) -> f64 {
    let lo = 16.0 * grid.spacing();
    let hi = 0.25 * grid.extent();
    t.clamp(lo, hi)
}

/// `X_T` norm of a space-time field: `‖u‖_∞` plus the four seminorm pieces
/// (weighted sup and Carleson parts of `|d u|` and `|d ∇u|`).
pub fn xt_seminorm(u: &SpaceTimeField, sampling: &SupSampling) -> Result<SeminormReport> {
    let grid = u.grid();
    let mesh = u.mesh();
    let frames = u.frames();
    let stride = sampling.density_stride;

    let mut sup_norm: f64 = 0.0;
    let mut s0_sup = (0.0f64, 0usize); // (value², frame) of sup t|du|²
    let mut s1_sup = (0.0f64, 0usize);
    let mut dens0 = Vec::with_capacity(frames.len());
    let mut dens1 = Vec::with_capacity(frames.len());
    for (j, f) in frames.iter().enumerate() {
        let t = mesh.node(j);
        sup_norm = sup_norm.max(f.sup_norm());
        let d0 = fracgrad::modulus_sq_strided(f, &Annulus::full(), stride)?;
        let d1 = fracgrad::grad_modulus_sq_strided(f, stride)?;
        let m0 = d0.values().iter().cloned().fold(0.0f64, f64::max);
        let m1 = d1.values().iter().cloned().fold(0.0f64, f64::max);
        if t * m0 > s0_sup.0 {
            s0_sup = (t * m0, j);
        }
        if t.powi(3) * m1 > s1_sup.0 {
            s1_sup = (t.powi(3) * m1, j);
        }
        dens0.push(d0);
        dens1.push(d1);
    }

    // Carleson parts: boxes at every frame time, radius clamped to [16Δ, L/4]
    let engines0: Vec<WindowEngine> = dens0.iter().map(WindowEngine::new).collect();
    let engines1: Vec<WindowEngine> = dens1.iter().map(WindowEngine::new).collect();
    let centers = center_sites(&dens0[0].grid(), sampling.x_stride);
    let mut s0_car = (0.0f64, 0usize, 0usize); // (value², frame, center)
    let mut s1_car = (0.0f64, 0usize, 0usize);
    for jt in 0..frames.len() {
        let t = mesh.node(jt);
        let r = clamp_radius(&grid, t);
        let nodes: Vec<f64> = mesh.nodes()[..=jt].to_vec();
        let w = graded_weights(&nodes);
        for (ci, &c) in centers.iter().enumerate() {
            let mut acc0 = 0.0;
            let mut acc1 = 0.0;
            for (i, wi) in w.iter().enumerate() {
                let s = nodes[i];
                acc0 += wi * engines0[i].ball_mean(c, r).0;
                acc1 += wi * s * s * engines1[i].ball_mean(c, r).0;
            }
            if acc0 > s0_car.0 {
                s0_car = (acc0, jt, ci);
            }
            if acc1 > s1_car.0 {
                s1_car = (acc1, jt, ci);
            }
        }
    }

    let p_s0_sup = s0_sup.0.max(0.0).sqrt();
    let p_s0_car = s0_car.0.max(0.0).sqrt();
    let p_s1_sup = s1_sup.0.max(0.0).sqrt();
    let p_s1_car = s1_car.0.max(0.0).sqrt();
    let seminorm = p_s0_sup + p_s0_car + p_s1_sup + p_s1_car;

    let mut rep = SeminormReport::new(sup_norm + seminorm);
    rep.components.insert("sup_norm".into(), sup_norm);
    rep.components.insert("seminorm".into(), seminorm);
    rep.components.insert("s0_sup".into(), p_s0_sup);
    rep.components.insert("s0_carleson".into(), p_s0_car);
    rep.components.insert("s1_sup".into(), p_s1_sup);
    rep.components.insert("s1_carleson".into(), p_s1_car);
    let pieces = [
        (p_s0_sup, mesh.node(s0_sup.1)),
        (p_s0_car, mesh.node(s0_car.1)),
        (p_s1_sup, mesh.node(s1_sup.1)),
        (p_s1_car, mesh.node(s1_car.1)),
    ];
    let dominant = pieces
        .iter()
        .cloned()
        .fold((0.0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
    rep.argsup = ArgSup { x: vec![], scale: dominant.1, scale_kind: "t".into() };
    sampling.describe(&mut rep.mesh);
    rep.mesh.insert("frames".into(), frames.len() as f64);
    rep.mesh.insert("T".into(), mesh.horizon());
    Ok(rep)
}

/// `Y_T` norm of a forcing: `sup t|f|` + Carleson of `|f|` (norm part) and
/// `sup t²|∇f|` + Carleson of `s|∇f|` (seminorm part).
pub fn yt_norm(f: &SpaceTimeField, sampling: &SupSampling) -> Result<SeminormReport> {
    let grid = f.grid();
    let mesh = f.mesh();
    let frames = f.frames();

    // |f| and |∇f| magnitude fields per frame
    let mut mag = Vec::with_capacity(frames.len());
    let mut gmag = Vec::with_capacity(frames.len());
    let mut n_sup = (0.0f64, 0usize);
    let mut s_sup = (0.0f64, 0usize);
    for (j, fr) in frames.iter().enumerate() {
        let t = mesh.node(j);
        let sites = grid.site_count();
        let m = fr.m();
        let mut a = Field::zeros(grid, 1);
        for s in 0..sites {
            let v = fr.at(s);
            a.values_mut()[s] = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        }
        let parts = spectral::gradient(fr);
        let mut gm = Field::zeros(grid, 1);
        for s in 0..sites {
            let mut acc = 0.0;
            for part in &parts {
                for c in 0..m {
                    let d = part.comp(s, c);
                    acc += d * d;
                }
            }
            gm.values_mut()[s] = acc.sqrt();
        }
        let ma = a.values().iter().cloned().fold(0.0f64, f64::max);
        let mg = gm.values().iter().cloned().fold(0.0f64, f64::max);
        if t * ma > n_sup.0 {
            n_sup = (t * ma, j);
        }
        if t * t * mg > s_sup.0 {
            s_sup = (t * t * mg, j);
        }
        mag.push(a);
        gmag.push(gm);
    }

    let engines_m: Vec<WindowEngine> = mag.iter().map(WindowEngine::new).collect();
    let engines_g: Vec<WindowEngine> = gmag.iter().map(WindowEngine::new).collect();
    let centers = center_sites(&grid, sampling.x_stride);
    let mut n_car: f64 = 0.0;
    let mut s_car: f64 = 0.0;
    for jt in 0..frames.len() {
        let t = mesh.node(jt);
        let r = clamp_radius(&grid, t);
        let nodes: Vec<f64> = mesh.nodes()[..=jt].to_vec();
        let w = graded_weights(&nodes);
        for &c in &centers {
            let mut acc_m = 0.0;
            let mut acc_g = 0.0;
            for (i, wi) in w.iter().enumerate() {
                acc_m += wi * engines_m[i].ball_mean(c, r).0;
                acc_g += wi * nodes[i] * engines_g[i].ball_mean(c, r).0;
            }
            n_car = n_car.max(acc_m);
            s_car = s_car.max(acc_g);
        }
    }

    let norm_part = n_sup.0 + n_car;
    let semi_part = s_sup.0 + s_car;
    let mut rep = SeminormReport::new(norm_part + semi_part);
    rep.components.insert("norm_sup".into(), n_sup.0);
    rep.components.insert("norm_carleson".into(), n_car);
    rep.components.insert("semi_sup".into(), s_sup.0);
    rep.components.insert("semi_carleson".into(), s_car);
    rep.argsup = ArgSup { x: vec![], scale: mesh.node(n_sup.1), scale_kind: "t".into() };
    sampling.describe(&mut rep.mesh);
    rep.mesh.insert("T".into(), mesh.horizon());
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Q0, BMO, Besov

/// Fractional mean oscillation seminorm
/// `‖a‖²_{Q₀} = sup_{x,r} r^{-n} ∬_{B_r×B_r} |a(y)−a(z)|² |y−z|^{-n}`.
///
/// Diagonal cells are excluded and compensated by the gradient surrogate,
/// as in the fractional-gradient quadrature.
pub fn q0_seminorm(a: &Field, sampling: &SupSampling) -> Result<SeminormReport> {
    let grid = a.grid();
    let n = grid.points_per_axis();
    let delta = grid.spacing();
    let m = a.m();
    for &r in &sampling.r_set {
        if r > 0.25 * grid.extent() * (1.0 + 1e-12) || r < 16.0 * delta * (1.0 - 1e-12) {
            return Err(Error::Domain(format!("q0 radius {r} outside [16Δ, L/4]")));
        }
    }

    // gradient surrogate for the diagonal cell, per site
    let parts = spectral::gradient(a);
    let c_diag = match grid.dim() {
        1 => delta * delta / 4.0,
        _ => 0.5 * std::f64::consts::PI * (delta / 2.0) * (delta / 2.0),
    };
    let mut diag = vec![0.0; grid.site_count()];
    for (s, d) in diag.iter_mut().enumerate() {
        let mut acc = 0.0;
        for part in &parts {
            for c in 0..m {
                let v = part.comp(s, c);
                acc += v * v;
            }
        }
        *d = acc * c_diag;
    }
    let diag_field = Field::from_values(grid, 1, diag)?;
    let diag_engine = WindowEngine::new(&diag_field);

    let mut best = (0.0f64, 0usize, 0.0f64);
    match grid.dim() {
        1 => {
            // J(x,r) = 2 Σ_{d≥1} (Δ²/(dΔ)) Σ_{z,z+d∈B} g_d(z) + Σ_{y∈B} Δ·diag(y)
            let centers: Vec<usize> = (0..n).step_by(sampling.x_stride).collect();
            for &r in &sampling.r_set {
                let o_max = ((r / delta) - 1e-9).floor() as usize;
                let d_max = 2 * o_max;
                let mut window_sums = vec![0.0f64; centers.len()];
                for d in 1..=d_max {
                    let w = 2.0 * delta * delta / (d as f64 * delta);
                    let mut prefix = vec![0.0; 3 * n + 1];
                    for i in 0..3 * n {
                        let z = i % n;
                        let zp = (z + d) % n;
                        let mut g = 0.0;
                        for c in 0..m {
                            let diff = a.comp(zp, c) - a.comp(z, c);
                            g += diff * diff;
                        }
                        prefix[i + 1] = prefix[i] + g;
                    }
                    for (ci, &cidx) in centers.iter().enumerate() {
                        // z from c-o_max to c+o_max-d keeps z and z+d in the window
                        let lo = cidx + n - o_max;
                        let hi = lo + (2 * o_max - d) + 1;
                        window_sums[ci] += w * (prefix[hi] - prefix[lo]);
                    }
                }
                for (ci, &cidx) in centers.iter().enumerate() {
                    let (dm, dcount) = diag_engine.ball_mean(cidx, r);
                    let j = window_sums[ci] + delta * dm * dcount as f64;
                    let val = j / r;
                    if val > best.0 {
                        best = (val, cidx, r);
                    }
                }
            }
        }
        _ => {
            use rayon::prelude::*;
            let centers = center_sites(&grid, sampling.x_stride);
            let r_max = sampling.r_set[0];
            let d_reach = ((2.0 * r_max / delta).ceil() as isize).min(n as isize / 2);
            // offsets in a half-space, weight doubled (ordered pairs both ways)
            let mut offsets = Vec::new();
            for d0 in 0..=d_reach {
                let d1_lo = if d0 == 0 { 1 } else { -d_reach };
                for d1 in d1_lo..=d_reach {
                    let dd = ((d0 * d0 + d1 * d1) as f64).sqrt() * delta;
                    if dd > 0.0 && dd < 2.0 * r_max {
                        let w = 2.0 * delta.powi(4) / (dd * dd);
                        offsets.push((d0, d1, dd, w));
                    }
                }
            }
            let acc: Vec<Vec<f64>> = offsets
                .par_iter()
                .fold(
                    || vec![vec![0.0f64; centers.len()]; sampling.r_set.len()],
                    |mut acc, &(d0, d1, dd, w)| {
                        let mask = n - 1;
                        // row prefixes of g_d over the tripled column range
                        let mut prefix = vec![0.0f64; n * (3 * n + 1)];
                        for row in 0..n {
                            let base = row * (3 * n + 1);
                            let prow = (row.wrapping_add_signed(d0)) & mask;
                            for i in 0..3 * n {
                                let z1 = i & mask;
                                let zp1 = (z1.wrapping_add_signed(d1)) & mask;
                                let mut g = 0.0;
                                for c in 0..m {
                                    let diff =
                                        a.comp(prow * n + zp1, c) - a.comp(row * n + z1, c);
                                    g += diff * diff;
                                }
                                prefix[base + i + 1] = prefix[base + i] + g;
                            }
                        }
                        for (k, &r) in sampling.r_set.iter().enumerate() {
                            if dd >= 2.0 * r {
                                continue;
                            }
                            let rr = (r / delta) * (r / delta) - 1e-9;
                            let o_max = ((r / delta) - 1e-9).floor() as isize;
                            for (ci, &cs) in centers.iter().enumerate() {
                                let c0 = (cs / n) as isize;
                                let c1 = (cs % n) as isize;
                                let mut sum = 0.0;
                                // rows with both z-row and (z+d)-row inside the disk
                                for dy in -o_max..=o_max {
                                    let dy2 = dy + d0;
                                    if dy2 < -o_max || dy2 > o_max {
                                        continue;
                                    }
                                    let rem1 = rr - (dy * dy) as f64;
                                    let rem2 = rr - (dy2 * dy2) as f64;
                                    if rem1 < 0.0 || rem2 < 0.0 {
                                        continue;
                                    }
                                    let w1 = rem1.sqrt().floor() as isize;
                                    let w2 = rem2.sqrt().floor() as isize;
                                    // columns: z1 ∈ [-w1, w1] ∩ [-w2-d1, w2-d1]
                                    let lo = (-w1).max(-w2 - d1);
                                    let hi = w1.min(w2 - d1);
                                    if lo > hi {
                                        continue;
                                    }
                                    let row = ((c0 + dy).rem_euclid(n as isize)) as usize;
                                    let base = row * (3 * n + 1);
                                    let a_lo = (c1 + n as isize + lo) as usize;
                                    let a_hi = (c1 + n as isize + hi + 1) as usize;
                                    sum += prefix[base + a_hi] - prefix[base + a_lo];
                                }
                                acc[k][ci] += w * sum;
                            }
                        }
                        acc
                    },
                )
                .reduce(
                    || vec![vec![0.0f64; centers.len()]; sampling.r_set.len()],
                    |mut a, b| {
                        for (ra, rb) in a.iter_mut().zip(b) {
                            for (x, y) in ra.iter_mut().zip(rb) {
                                *x += y;
                            }
                        }
                        a
                    },
                );
            for (k, &r) in sampling.r_set.iter().enumerate() {
                for (ci, &cidx) in centers.iter().enumerate() {
                    let (dm, dcount) = diag_engine.ball_mean(cidx, r);
                    let j = acc[k][ci] + delta * delta * dm * dcount as f64;
                    let val = j / (r * r);
                    if val > best.0 {
                        best = (val, cidx, r);
                    }
                }
            }
        }
    }

    let mut rep = SeminormReport::new(best.0.max(0.0).sqrt());
    rep.components.insert("q0_sq".into(), best.0);
    let arg = grid.site_coord(best.1);
    rep.argsup = ArgSup {
        x: arg[..grid.dim()].to_vec(),
        scale: best.2,
        scale_kind: "r".into(),
    };
    sampling.describe(&mut rep.mesh);
    rep.mesh.insert("oscillation_exponent".into(), 2.0);
    Ok(rep)
}

/// BMO seminorm `sup_{x,r} ⨏_{B_r(x)} |a − ā_B|` (classical L¹
/// normalization; the comparison space for `Q₀`).
pub fn bmo_seminorm(a: &Field, sampling: &SupSampling) -> Result<SeminormReport> {
    let grid = a.grid();
    let m = a.m();
    let comp_engines: Vec<WindowEngine> =
        (0..m).map(|c| WindowEngine::new(&a.component(c))).collect();
    let centers = center_sites(&grid, sampling.x_stride);
    let n = grid.points_per_axis();
    let delta = grid.spacing();
    let mut best = (0.0f64, 0usize, 0.0f64);
    for &r in &sampling.r_set {
        let rr = (r / delta) * (r / delta) - 1e-9;
        let o_max = ((r / delta) - 1e-9).floor() as isize;
        for &c in &centers {
            let mean: Vec<f64> = comp_engines.iter().map(|e| e.ball_mean(c, r).0).collect();
            let mut acc = 0.0;
            let mut count = 0usize;
            match grid.dim() {
                1 => {
                    for o in -o_max..=o_max {
                        let s = ((c as isize + o).rem_euclid(n as isize)) as usize;
                        let mut d2 = 0.0;
                        for (cc, mu) in mean.iter().enumerate() {
                            let d = a.comp(s, cc) - mu;
                            d2 += d * d;
                        }
                        acc += d2.sqrt();
                        count += 1;
                    }
                }
                _ => {
                    let c0 = (c / n) as isize;
                    let c1 = (c % n) as isize;
                    for dy in -o_max..=o_max {
                        let rem = rr - (dy * dy) as f64;
                        if rem < 0.0 {
                            continue;
                        }
                        let w = rem.sqrt().floor() as isize;
                        let row = (c0 + dy).rem_euclid(n as isize) as usize;
                        for dx in -w..=w {
                            let col = (c1 + dx).rem_euclid(n as isize) as usize;
                            let s = row * n + col;
                            let mut d2 = 0.0;
                            for (cc, mu) in mean.iter().enumerate() {
                                let d = a.comp(s, cc) - mu;
                                d2 += d * d;
                            }
                            acc += d2.sqrt();
                            count += 1;
                        }
                    }
                }
            }
            let val = acc / count as f64;
            if val > best.0 {
                best = (val, c, r);
            }
        }
    }
    let mut rep = SeminormReport::new(best.0);
    rep.components.insert("oscillation_l1".into(), best.0);
    let arg = grid.site_coord(best.1);
    rep.argsup = ArgSup {
        x: arg[..grid.dim()].to_vec(),
        scale: best.2,
        scale_kind: "r".into(),
    };
    sampling.describe(&mut rep.mesh);
    rep.mesh.insert("oscillation_exponent".into(), 1.0);
    Ok(rep)
}

// smooth radial cutoff: 1 for ρ ≤ 1, 0 for ρ ≥ 2, quintic blend between
fn lp_cutoff(rho: f64) -> f64 {
    if rho <= 1.0 {
        1.0
    } else if rho >= 2.0 {
        0.0
    } else {
        let x = 2.0 - rho;
        x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }
}

/// Dyadic shell weight `ψ_k` at frequency magnitude `xi`; the shells
/// partition unity away from zero frequency.
pub fn besov_shell_weight(xi: f64, k: usize, base: f64) -> f64 {
    let scale = base * 2f64.powi(k as i32);
    lp_cutoff(xi / scale) - lp_cutoff(2.0 * xi / scale)
}

/// Discrete Besov seminorm `sup_k 2^{kn/2} ‖Δ_k a‖_{L²}` over the
/// `log₂(N/4)` available dyadic shells.
pub fn besov_seminorm(a: &Field) -> Result<SeminormReport> {
    let grid = a.grid();
    let spec = spectral::dft(a);
    let sites = grid.site_count();
    let measure = grid.spacing().powi(grid.dim() as i32);
    let base = 2.0 * std::f64::consts::PI / grid.extent();
    let shells = (grid.points_per_axis() / 4).ilog2() as usize;
    let mut rep = SeminormReport::new(0.0);
    let mut best = (0.0f64, 0usize);
    for k in 1..=shells {
        let mut sum = 0.0;
        for c in 0..spec.m() {
            for i in 0..sites {
                let w = besov_shell_weight(spec.freq_norm(i), k, base);
                if w != 0.0 {
                    sum += w * w * spec.coeffs()[c * sites + i].norm_sqr();
                }
            }
        }
        let block_l2 = (measure * sum).sqrt();
        let weighted = 2f64.powf(k as f64 * grid.dim() as f64 / 2.0) * block_l2;
        rep.components.insert(format!("shell_{k:02}"), weighted);
        if weighted > best.0 {
            best = (weighted, k);
        }
    }
    rep.value = best.0;
    rep.argsup = ArgSup { x: vec![], scale: best.1 as f64, scale_kind: "shell".into() };
    rep.mesh.insert("shells".into(), shells as f64);
    rep.mesh.insert("base_frequency".into(), base);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Fubini tail oracle

/// Both sides of the Fubini identity
/// `∫₀¹∫_{B₁}(|d a|^{(t,∞)})² dx dt = ∫_{B₁}∫ min(|h|,1)|a(x+h)−a(x)|²|h|^{-(n+1)} dh dx`;
/// the left side is assembled from annulus moduli on a graded time mesh, so
/// the discrepancy measures pure time-quadrature error.
#[derive(Debug, Clone, Serialize)]
pub struct TailOracle {
    pub time_quadrature_side: f64,
    pub fubini_side: f64,
    pub rel_diff: f64,
}

pub fn tail_carleson_oracle(a: &Field, t_nodes: usize, t_per_octave: usize) -> Result<TailOracle> {
    let grid = a.grid();
    if grid.extent() < 8.0 {
        return Err(Error::Domain(format!(
            "unit window needs L ≥ 8, got {}",
            grid.extent()
        )));
    }
    let delta = grid.spacing();
    let nd = grid.dim() as i32;
    let measure = delta.powi(nd);

    // sites of B_1(0)
    let ball: Vec<usize> = (0..grid.site_count())
        .filter(|&s| {
            let p = grid.site_coord(s);
            let d2: f64 = (0..grid.dim()).map(|ax| p[ax] * p[ax]).sum();
            d2 < 1.0 - 1e-12
        })
        .collect();

    // Fubini side: direct double sum with min(|h|,1) weight + diagonal surrogate
    let m = a.m();
    let parts = spectral::gradient(a);
    let c_diag = match grid.dim() {
        1 => delta * delta / 4.0,
        _ => 0.5 * std::f64::consts::PI * (delta / 2.0) * (delta / 2.0),
    };
    let n = grid.points_per_axis();
    let mask = n - 1;
    let mut rhs = 0.0;
    for &s in &ball {
        let mut acc = 0.0;
        match grid.dim() {
            1 => {
                for o in 1..=(n / 2) {
                    let h = o as f64 * delta;
                    let w = h.min(1.0) * delta / (h * h);
                    let both = o < n / 2;
                    let p = (s + o) & mask;
                    let q = (s + n - o) & mask;
                    for c in 0..m {
                        let d1 = a.comp(p, c) - a.comp(s, c);
                        acc += w * d1 * d1;
                        if both {
                            let d2 = a.comp(q, c) - a.comp(s, c);
                            acc += w * d2 * d2;
                        }
                    }
                }
            }
            _ => {
                let half = (n / 2) as isize;
                let s0 = s / n;
                let s1 = s % n;
                for o0 in (1 - half)..=half {
                    for o1 in (1 - half)..=half {
                        if o0 == 0 && o1 == 0 {
                            continue;
                        }
                        let h = delta * ((o0 * o0 + o1 * o1) as f64).sqrt();
                        if h > 0.5 * grid.extent() * (1.0 + 1e-12) {
                            continue;
                        }
                        let w = h.min(1.0) * delta * delta / (h * h * h);
                        let p0 = (s0.wrapping_add_signed(o0)) & mask;
                        let p1 = (s1.wrapping_add_signed(o1)) & mask;
                        let p = p0 * n + p1;
                        for c in 0..m {
                            let d1 = a.comp(p, c) - a.comp(s, c);
                            acc += w * d1 * d1;
                        }
                    }
                }
            }
        }
        let mut grad2 = 0.0;
        for part in &parts {
            for c in 0..m {
                let v = part.comp(s, c);
                grad2 += v * v;
            }
        }
        // min(|h|,1) → |h| on the diagonal cell: same surrogate as Q0
        rhs += measure * (acc + grad2 * c_diag);
    }
    let half_gamma = 0.5 * spectral::gamma_n(grid.dim());
    rhs *= half_gamma;

    // time-quadrature side: ∫₀¹ Σ_{x∈B₁} (|d a|^{(t,∞)})²(x) Δ^n dt
    let q = t_per_octave as f64;
    let nodes: Vec<f64> = (0..t_nodes)
        .map(|i| 2f64.powf(-((t_nodes - 1 - i) as f64) / q))
        .collect();
    let w = graded_weights(&nodes);
    let mut lhs = 0.0;
    for (i, &t) in nodes.iter().enumerate() {
        let dens = fracgrad::modulus_sq(a, &Annulus::beyond(t))?;
        let integral: f64 = ball.iter().map(|&s| dens.values()[s]).sum::<f64>() * measure;
        lhs += w[i] * integral;
    }

    let rel_diff = (lhs - rhs).abs() / rhs.abs().max(1e-300);
    Ok(TailOracle { time_quadrature_side: lhs, fubini_side: rhs, rel_diff })
}
