//! Off-diagonal fractional-gradient calculus: pointwise squared moduli
//! `|d_{1/2}u|²`, annulus-restricted moduli, off-diagonal inner products,
//! and `|d_{1/2}∇u|²`.
//!
//! The squared modulus is the fractional energy density
//!
//! ```text
//! |d_{1/2}u|²(x) = (γ_n/2) ∫ |u(x+h) − u(x)|² |h|^{-(n+1)} dh
//! ```
//!
//! evaluated by midpoint quadrature over grid offsets `h` with `|h|` in the
//! requested annulus, weight `Δ^n/|h|^{n+1}`. When the annulus reaches down
//! to 0, the omitted inner cell `|h| < Δ/2` is compensated by the
//! first-order Taylor surrogate `|u(x+h) − u(x)|² ≈ (∇u·h)²`, with the
//! gradient supplied spectrally. Offsets are truncated at `|h| = L/2` (the
//! torus injectivity radius); no tail extrapolation is applied, and the
//! discarded-tail bias is available as [`tail_bias_bound`].

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::spectral::{gamma_n, gradient};
use rayon::prelude::*;
use std::f64::consts::PI;

/// A radial shell `(r0, r1]` of offsets; `r1 = None` means "to the torus
/// injectivity radius L/2".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    r0: f64,
    r1: Option<f64>,
}

impl Annulus {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        if !(r0 >= 0.0) || !(r1 > r0) {
            return Err(Error::Domain(format!("invalid annulus ({r0}, {r1})")));
        }
        Ok(Annulus { r0, r1: Some(r1) })
    }

    /// The full shell `(0, L/2]`.
    pub fn full() -> Self {
        Annulus { r0: 0.0, r1: None }
    }

    /// Local part `(0, r]`.
    pub fn local(r: f64) -> Result<Self> {
        Annulus::new(0.0, r)
    }

    /// Non-local part `(r, L/2]`.
    pub fn beyond(r: f64) -> Self {
        Annulus { r0: r, r1: None }
    }

    pub fn inner_radius(&self) -> f64 {
        self.r0
    }

    /// Outer radius after sentinel resolution, validated against `L/2`.
    pub fn resolve_outer(&self, grid: &Grid) -> Result<f64> {
        let half = 0.5 * grid.extent();
        match self.r1 {
            None => Ok(half),
            Some(r1) => {
                if r1 > half * (1.0 + 1e-12) {
                    Err(Error::Domain(format!(
                        "annulus outer radius {r1} exceeds torus injectivity radius {half}"
                    )))
                } else {
                    Ok(r1)
                }
            }
        }
    }

    fn includes_origin_cell(&self) -> bool {
        self.r0 == 0.0
    }
}

// Offset table: per-axis index displacements with quadrature weight
// Δ^n/|h|^{n+1}, |h| in the annulus, each torus offset counted once.
fn offsets_1d(grid: &Grid, ann: &Annulus) -> Result<Vec<(usize, f64, bool)>> {
    let n_ax = grid.points_per_axis();
    let delta = grid.spacing();
    let r1 = ann.resolve_outer(grid)?;
    let mut out = Vec::new();
    for o in 1..=(n_ax / 2) {
        let h = o as f64 * delta;
        if h > ann.r0 && h <= r1 * (1.0 + 1e-12) {
            let w = delta / (h * h);
            // o = N/2 is its own negative on the torus: count once
            out.push((o, w, o < n_ax / 2));
        }
    }
    Ok(out)
}

fn offsets_2d(grid: &Grid, ann: &Annulus) -> Result<Vec<(isize, isize, f64)>> {
    let n_ax = grid.points_per_axis() as isize;
    let delta = grid.spacing();
    let r1 = ann.resolve_outer(grid)?;
    let mut out = Vec::new();
    for o0 in (1 - n_ax / 2)..=(n_ax / 2) {
        for o1 in (1 - n_ax / 2)..=(n_ax / 2) {
            if o0 == 0 && o1 == 0 {
                continue;
            }
            let h = delta * ((o0 * o0 + o1 * o1) as f64).sqrt();
            if h > ann.r0 && h <= r1 * (1.0 + 1e-12) {
                out.push((o0, o1, delta * delta / (h * h * h)));
            }
        }
    }
    Ok(out)
}

// Inner-cell correction density c_n·|∇u·∇v|·Δ at the evaluation sites
// (γ_n/2 applied by the caller); c_1 = 1, c_2 = π/2 (disk of radius Δ/2).
fn inner_correction(u: &Field, v: &Field, stride: usize) -> Vec<f64> {
    let g = u.grid();
    let du = gradient(u);
    let dv = if std::ptr::eq(u, v) { Vec::new() } else { gradient(v) };
    let n_ax = g.points_per_axis();
    let coarse_ax = n_ax / stride;
    let c_n = if g.dim() == 1 { 1.0 } else { PI / 2.0 };
    let factor = c_n * g.spacing();
    let eval_sites = if g.dim() == 1 { coarse_ax } else { coarse_ax * coarse_ax };
    (0..eval_sites)
        .map(|cs| {
            let site = if g.dim() == 1 {
                cs * stride
            } else {
                (cs / coarse_ax) * stride * n_ax + (cs % coarse_ax) * stride
            };
            let mut acc = 0.0;
            for (a, dua) in du.iter().enumerate() {
                let dva = if dv.is_empty() { dua } else { &dv[a] };
                for c in 0..u.m() {
                    acc += dua.comp(site, c) * dva.comp(site, c);
                }
            }
            factor * acc
        })
        .collect()
}

fn coarse_grid(grid: Grid, stride: usize) -> Grid {
    if stride == 1 {
        grid
    } else {
        Grid::new(grid.dim(), grid.extent(), grid.points_per_axis() / stride)
            .expect("coarse grid parameters")
    }
}

fn od_inner_impl(u: &Field, v: &Field, ann: &Annulus, stride: usize) -> Result<Field> {
    if u.grid() != v.grid() || u.m() != v.m() {
        return Err(Error::Shape("off-diagonal product: mismatched grids or m".into()));
    }
    let g = u.grid();
    assert!(stride >= 1 && g.points_per_axis() % stride == 0, "bad stride {stride}");
    let m = u.m();
    let half_gamma = 0.5 * gamma_n(g.dim());
    let correction = if ann.includes_origin_cell() {
        Some(inner_correction(u, v, stride))
    } else {
        ann.resolve_outer(&g)?; // validate even without correction
        None
    };

    let n_ax = g.points_per_axis();
    let mask = n_ax - 1;
    let uv = u.values();
    let vv = v.values();

    let mut values: Vec<f64> = match g.dim() {
        1 => {
            let offs = offsets_1d(&g, ann)?;
            (0..n_ax / stride)
                .into_par_iter()
                .map(|cs| {
                    let i = cs * stride;
                    let mut acc = 0.0;
                    for &(o, w, both) in &offs {
                        let p = (i + o) & mask;
                        let q = (i + n_ax - o) & mask;
                        let mut dot = 0.0;
                        for c in 0..m {
                            let du = uv[p * m + c] - uv[i * m + c];
                            let dv = vv[p * m + c] - vv[i * m + c];
                            dot += du * dv;
                            if both {
                                let du2 = uv[q * m + c] - uv[i * m + c];
                                let dv2 = vv[q * m + c] - vv[i * m + c];
                                dot += du2 * dv2;
                            }
                        }
                        acc += w * dot;
                    }
                    acc
                })
                .collect()
        }
        _ => {
            let offs = offsets_2d(&g, ann)?;
            let coarse_ax = n_ax / stride;
            (0..coarse_ax * coarse_ax)
                .into_par_iter()
                .map(|cs| {
                    let i0 = (cs / coarse_ax) * stride;
                    let i1 = (cs % coarse_ax) * stride;
                    let site = i0 * n_ax + i1;
                    let mut acc = 0.0;
                    for &(o0, o1, w) in &offs {
                        let p0 = (i0.wrapping_add_signed(o0)) & mask;
                        let p1 = (i1.wrapping_add_signed(o1)) & mask;
                        let p = p0 * n_ax + p1;
                        let mut dot = 0.0;
                        for c in 0..m {
                            let du = uv[p * m + c] - uv[site * m + c];
                            let dv = vv[p * m + c] - vv[site * m + c];
                            dot += du * dv;
                        }
                        acc += w * dot;
                    }
                    acc
                })
                .collect()
        }
    };

    if let Some(corr) = correction {
        for (a, c) in values.iter_mut().zip(&corr) {
            *a += c;
        }
    }
    for a in &mut values {
        *a *= half_gamma;
    }
    Field::from_values(coarse_grid(g, stride), 1, values)
}

/// Pointwise off-diagonal inner product `⟨d_{1/2}u, d_{1/2}v⟩_od` over the
/// annulus, as a scalar field.
pub fn od_inner(u: &Field, v: &Field, ann: &Annulus) -> Result<Field> {
    od_inner_impl(u, v, ann, 1)
}

/// Squared modulus `|d_{1/2}u|²` over the annulus.
pub fn modulus_sq(u: &Field, ann: &Annulus) -> Result<Field> {
    od_inner_impl(u, u, ann, 1)
}

/// Squared modulus evaluated on a stride-`s` diagnostic subgrid; the result
/// lives on the coarse grid `(L, N/s)` and can be upsampled by cubic
/// interpolation.
pub fn modulus_sq_strided(u: &Field, ann: &Annulus, stride: usize) -> Result<Field> {
    od_inner_impl(u, u, ann, stride)
}

/// `|d_{1/2}∇u|²`: sum over the spatial-derivative fields of the
/// full-annulus squared modulus.
pub fn grad_modulus_sq(u: &Field) -> Result<Field> {
    grad_modulus_sq_strided(u, 1)
}

pub fn grad_modulus_sq_strided(u: &Field, stride: usize) -> Result<Field> {
    let parts = gradient(u);
    let mut total: Option<Field> = None;
    for part in &parts {
        let m = od_inner_impl(part, part, &Annulus::full(), stride)?;
        match &mut total {
            None => total = Some(m),
            Some(t) => t.add_scaled(&m, 1.0),
        }
    }
    Ok(total.expect("gradient has at least one axis"))
}

/// Max over sites of the additivity defect
/// `|fg²(r0,r1) − fg²(r0,rm) − fg²(rm,r1)|`; exact (≤ rounding) because the
/// three sums share quadrature nodes with disjoint index sets.
pub fn annulus_split_defect(u: &Field, r0: f64, r_mid: f64, r1: f64) -> Result<f64> {
    if !(r0 < r_mid && r_mid < r1) {
        return Err(Error::Domain(format!("need r0 < r_mid < r1, got {r0}, {r_mid}, {r1}")));
    }
    let whole = modulus_sq(u, &Annulus::new(r0, r1)?)?;
    let lo = modulus_sq(u, &Annulus::new(r0, r_mid)?)?;
    let hi = modulus_sq(u, &Annulus::new(r_mid, r1)?)?;
    let mut defect: f64 = 0.0;
    for s in 0..whole.grid().site_count() {
        defect = defect.max((whole.values()[s] - lo.values()[s] - hi.values()[s]).abs());
    }
    Ok(defect)
}

/// Upper bound on the discarded `|h| > L/2` tail of the squared modulus:
/// `(γ_n/2)·4‖u‖²_∞·∫_{|h|>L/2}|h|^{-(n+1)}dh`.
pub fn tail_bias_bound(u: &Field) -> f64 {
    let g = u.grid();
    let half = 0.5 * g.extent();
    let tail_weight = match g.dim() {
        1 => 2.0 / half,
        _ => 2.0 * PI / half,
    };
    0.5 * gamma_n(g.dim()) * 4.0 * u.sup_norm().powi(2) * tail_weight
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{interpolate, make_grid, sample_function};
    use crate::spectral::{convolve, dirichlet_form, poisson_kernel_profile};

    fn winding_wave(grid: Grid, k: i64) -> Field {
        let xi = 2.0 * PI * k as f64 / grid.extent();
        sample_function(grid, 2, |p| [(xi * p[0]).cos(), (xi * p[0]).sin(), 0.0]).unwrap()
    }

    fn random_band(grid: Grid, m: usize, kmin: i64, kmax: i64, seed: u64) -> Field {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<(i64, i64, f64, f64)> = (kmin..=kmax)
            .map(|k| {
                let l = if grid.dim() == 2 { (k * 3).rem_euclid(5) - 2 } else { 0 };
                (k, l, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
            .collect();
        sample_function(grid, m, |p| {
            let mut v = [0.0; 3];
            for (c, val) in v.iter_mut().enumerate().take(m) {
                for (k, l, a, b) in &modes {
                    let base = 2.0 * PI / grid.extent();
                    let arg = base * (*k as f64 * p[0] + *l as f64 * p[1]);
                    *val += a * (arg + c as f64).cos() + b * (arg).sin();
                }
            }
            v
        })
        .unwrap()
    }

    #[test]
    fn constant_field_vanishes() {
        let g = make_grid(1, 8.0, 64).unwrap();
        let c = Field::constant(g, &[0.3, -1.2]);
        for ann in [Annulus::full(), Annulus::new(0.5, 2.0).unwrap()] {
            assert_eq!(modulus_sq(&c, &ann).unwrap().sup_norm(), 0.0);
        }
        let g2 = make_grid(2, 8.0, 32).unwrap();
        let c2 = Field::constant(g2, &[1.0, 0.0]);
        assert_eq!(modulus_sq(&c2, &Annulus::full()).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn wave_density_equals_frequency() {
        // |d u|²(x) = |ξ| for u = (cos ξx, sin ξx); needs L|ξ| ≥ 40π
        let g = make_grid(1, 8.0, 1024).unwrap();
        for k in [26i64, 40] {
            let xi = 2.0 * PI * k as f64 / 8.0;
            let d = modulus_sq(&winding_wave(g, k), &Annulus::full()).unwrap();
            for s in (0..1024).step_by(97) {
                let rel = (d.values()[s] - xi).abs() / xi;
                assert!(rel < 0.01, "k={k} site {s}: {} vs {xi}", d.values()[s]);
            }
        }
    }

    #[test]
    fn poisson_kernel_identity_spot_values() {
        // bare Gagliardo density of p_1: (1/π)/(2x²+2); the modulus carries
        // the extra γ₁/2 normalization
        let g = make_grid(1, 200.0, 4096).unwrap();
        let p = sample_function(g, 1, |x| [poisson_kernel_profile(x[0].abs(), 1), 0.0, 0.0])
            .unwrap();
        let d = modulus_sq(&p, &Annulus::full()).unwrap();
        let half_gamma = 0.5 * gamma_n(1);
        for (x, want_bare) in [(0.0, 1.0 / (2.0 * PI)), (1.0, 1.0 / (4.0 * PI))] {
            let site = ((x + 100.0) / g.spacing()).round() as usize;
            let bare = d.values()[site] / half_gamma;
            assert!(
                (bare - want_bare).abs() / want_bare < 0.02,
                "x={x}: bare {bare} vs {want_bare}"
            );
        }
    }

    #[test]
    fn od_inner_matches_modulus_and_disjoint_components() {
        let g = make_grid(1, 8.0, 256).unwrap();
        let u = random_band(g, 2, 1, 9, 5);
        let ann = Annulus::full();
        let a = od_inner(&u, &u, &ann).unwrap();
        let b = modulus_sq(&u, &ann).unwrap();
        assert_eq!(a.values(), b.values());

        let f = random_band(g, 1, 1, 6, 1);
        let w = random_band(g, 1, 1, 6, 2);
        let mut u1 = Field::zeros(g, 2);
        let mut u2 = Field::zeros(g, 2);
        for s in 0..256 {
            u1.values_mut()[s * 2] = f.values()[s];
            u2.values_mut()[s * 2 + 1] = w.values()[s];
        }
        assert_eq!(od_inner(&u1, &u2, &ann).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn integrated_od_matches_dirichlet_form() {
        // Σ_x ⟨d u, d v⟩_od Δ ≈ ∫ u (−Δ)^{1/2} v  (d·d = (−Δ)^{1/2})
        let g = make_grid(1, 8.0, 1024).unwrap();
        let u = random_band(g, 2, 20, 40, 7);
        let v = random_band(g, 2, 20, 40, 8);
        let od = od_inner(&u, &v, &Annulus::full()).unwrap();
        let lhs: f64 = od.values().iter().sum::<f64>() * g.spacing();
        let rhs = dirichlet_form(&u, &v).unwrap();
        assert!((lhs - rhs).abs() / rhs.abs() < 0.01, "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn grad_modulus_on_waves() {
        let g = make_grid(1, 8.0, 1024).unwrap();
        assert_eq!(
            grad_modulus_sq(&Field::constant(g, &[1.0, 0.0])).unwrap().sup_norm(),
            0.0
        );
        let k = 25i64;
        let xi = 2.0 * PI * k as f64 / 8.0;
        let d = grad_modulus_sq(&winding_wave(g, k)).unwrap();
        for s in (0..1024).step_by(111) {
            let rel = (d.values()[s] - xi.powi(3)).abs() / xi.powi(3);
            assert!(rel < 0.01, "site {s}: {} vs {}", d.values()[s], xi.powi(3));
        }

        // far-separated modes: densities approximately add
        let a = winding_wave(g, 10);
        let b = winding_wave(g, 120);
        let mut sum = a.clone();
        sum.add_scaled(&b, 1.0);
        let da = grad_modulus_sq(&a).unwrap();
        let db = grad_modulus_sq(&b).unwrap();
        let ds = grad_modulus_sq(&sum).unwrap();
        for s in (0..1024).step_by(131) {
            let want = da.values()[s] + db.values()[s];
            let rel = (ds.values()[s] - want).abs() / want;
            assert!(rel < 0.02, "site {s}: {} vs {want}", ds.values()[s]);
        }
    }

    #[test]
    fn split_additivity_is_exact() {
        let g = make_grid(1, 8.0, 512).unwrap();
        let u = random_band(g, 2, 1, 30, 13);
        let scale = modulus_sq(&u, &Annulus::full()).unwrap().sup_norm();
        let defect = annulus_split_defect(&u, 0.0, 1.0, 4.0).unwrap();
        assert!(defect <= 1e-12 * scale.max(1.0), "defect {defect}");

        let g2 = make_grid(2, 8.0, 64).unwrap();
        let u2 = random_band(g2, 2, 1, 6, 17);
        let defect2 = annulus_split_defect(&u2, 0.5, 1.5, 4.0).unwrap();
        assert!(defect2 <= 1e-12, "2d defect {defect2}");
    }

    #[test]
    fn cauchy_schwarz_pointwise() {
        let g = make_grid(1, 8.0, 256).unwrap();
        let u = random_band(g, 2, 1, 12, 3);
        let v = random_band(g, 2, 1, 12, 4);
        let ann = Annulus::full();
        let uv = od_inner(&u, &v, &ann).unwrap();
        let uu = modulus_sq(&u, &ann).unwrap();
        let vv = modulus_sq(&v, &ann).unwrap();
        for s in 0..256 {
            let lhs = uv.values()[s] * uv.values()[s];
            let rhs = uu.values()[s] * vv.values()[s];
            assert!(lhs <= rhs + 1e-12 * rhs.abs().max(1.0), "site {s}");
        }
    }

    #[test]
    fn convolution_domination() {
        // √fg(u∗ρ) ≤ ρ ∗ √fg(u) + slack, ρ ≥ 0 band-limited with unit mass
        let g = make_grid(1, 8.0, 512).unwrap();
        let u = random_band(g, 2, 1, 20, 23);
        // Fejér kernel: nonnegative, band-limited
        let kk = 24usize;
        let mut rho = sample_function(g, 1, |p| {
            let x = p[0];
            let s = (PI * x / 8.0).sin();
            let v = if s.abs() < 1e-14 {
                (kk + 1) as f64
            } else {
                let num = ((kk + 1) as f64 * PI * x / 8.0).sin();
                num * num / ((kk + 1) as f64 * s * s)
            };
            [v, 0.0, 0.0]
        })
        .unwrap();
        let mass: f64 = rho.values().iter().sum::<f64>() * g.spacing();
        rho.scale(1.0 / mass);

        let smoothed = convolve(&u, &rho).unwrap();
        let lhs = modulus_sq(&smoothed, &Annulus::full()).unwrap();
        let mut root = modulus_sq(&u, &Annulus::full()).unwrap();
        for v in root.values_mut() {
            *v = v.sqrt();
        }
        let rhs = convolve(&root, &rho).unwrap();
        let scale = rhs.sup_norm();
        for s in 0..512 {
            let l = lhs.values()[s].max(0.0).sqrt();
            assert!(
                l <= rhs.values()[s] + 1e-3 * scale,
                "site {s}: {l} vs {}",
                rhs.values()[s]
            );
        }
    }

    #[test]
    fn growth_envelope_of_poisson_kernel() {
        // local modulus (0,1): (1+x²)|d p|^{(0,1)}(x) bounded, envelope decays
        let g = make_grid(1, 200.0, 4096).unwrap();
        let p = sample_function(g, 1, |x| [poisson_kernel_profile(x[0].abs(), 1), 0.0, 0.0])
            .unwrap();
        let d = modulus_sq(&p, &Annulus::local(1.0).unwrap()).unwrap();
        let value_at = |x: f64| {
            let site = ((x + 100.0) / g.spacing()).round() as usize;
            d.values()[site].max(0.0).sqrt()
        };
        let mut fitted: f64 = 0.0;
        let mut x = 0.0;
        while x <= 50.0 {
            fitted = fitted.max((1.0 + x * x) * value_at(x));
            x += 0.5;
        }
        assert!(fitted.is_finite() && fitted > 0.0);
        println!("growth-envelope fitted constant: {fitted:.6}");
        // monotone envelope decay along dyadic |x|
        let mut prev = value_at(1.0);
        for x in [2.0, 4.0, 8.0, 16.0, 32.0] {
            let v = value_at(x);
            assert!(v < prev, "envelope not decaying at x={x}");
            prev = v;
        }
    }

    #[test]
    fn half_gradient_scaling_under_coarsening() {
        // u_λ(x) = u(λx) with λ = 2 exact coarsening: fg(u_λ)(x) = 2 fg(u)(2x)
        let lx = 16.0;
        let g = make_grid(1, lx, 2048).unwrap();
        let xi = 2.0 * PI * 32.0 / lx;
        let u = sample_function(g, 2, |p| {
            let phase = xi * p[0] + 0.3 * (2.0 * PI * 4.0 * p[0] / lx).sin();
            [phase.cos(), phase.sin(), 0.0]
        })
        .unwrap();
        let g2 = make_grid(1, lx / 2.0, 1024).unwrap();
        let mut coarse = Field::zeros(g2, 2);
        for s in 0..1024 {
            let v = u.at(2 * s);
            coarse.values_mut()[s * 2] = v[0];
            coarse.values_mut()[s * 2 + 1] = v[1];
        }
        let fine_d = modulus_sq(&u, &Annulus::full()).unwrap();
        let coarse_d = modulus_sq(&coarse, &Annulus::full()).unwrap();
        for s in (0..1024).step_by(53) {
            let want = 2.0 * fine_d.values()[2 * s];
            let got = coarse_d.values()[s];
            assert!((got - want).abs() / want < 0.01, "site {s}: {got} vs {want}");
        }
    }

    #[test]
    fn strided_evaluation_matches_full() {
        let n_ax = 128usize;
        let g = make_grid(2, 8.0, n_ax).unwrap();
        let u = random_band(g, 2, 1, 3, 31);
        let full = modulus_sq(&u, &Annulus::full()).unwrap();
        let coarse = modulus_sq_strided(&u, &Annulus::full(), 2).unwrap();
        assert_eq!(coarse.grid().points_per_axis(), n_ax / 2);
        for cs in 0..(n_ax / 2) * (n_ax / 2) {
            let fine_site = (cs / (n_ax / 2)) * 2 * n_ax + (cs % (n_ax / 2)) * 2;
            assert_eq!(coarse.values()[cs], full.values()[fine_site]);
        }
        // upsampling by interpolation stays close to the true density
        let mut worst: f64 = 0.0;
        for s in 0..n_ax * n_ax {
            let p = g.site_coord(s);
            let up = interpolate(&coarse, p)[0];
            worst = worst.max((up - full.values()[s]).abs());
        }
        assert!(worst < 0.03 * full.sup_norm(), "upsample error {worst}");
    }

    #[test]
    fn annulus_validation_errors() {
        let g = make_grid(1, 8.0, 64).unwrap();
        let u = Field::constant(g, &[1.0]);
        assert!(matches!(Annulus::new(2.0, 1.0), Err(Error::Domain(_))));
        let too_far = Annulus::new(0.0, 5.0).unwrap();
        assert!(matches!(modulus_sq(&u, &too_far), Err(Error::Domain(_))));
        assert!(tail_bias_bound(&u) > 0.0);
    }
}
