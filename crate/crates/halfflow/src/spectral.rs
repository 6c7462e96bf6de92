//! Discrete Fourier transforms, the fractional Laplacian and Poisson
//! semigroup as exact multipliers, closed-form Poisson kernels, spectral
//! gradients, and the half-Dirichlet energy.
//!
//! Transforms are unitary; every integral carries its measure factor `Δ^n`
//! explicitly at the reduction site. Multipliers act on the physical
//! frequencies `ξ_k = 2πk/L`, `k ∈ [-N/2, N/2)` per axis; the Nyquist mode
//! is treated with the `|ξ|` weight like any other (it is zeroed only in
//! first derivatives, where the odd multiplier is ambiguous).

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Fourier coefficients of a [`Field`], component-major, unitary scaling.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Grid,
    m: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Signed integer wavevector of a flat spectral index.
    pub fn wavevector(&self, idx: usize) -> [i64; 2] {
        wavevector(&self.grid, idx)
    }

    /// Physical frequency magnitude `|ξ|` of a flat spectral index.
    pub fn freq_norm(&self, idx: usize) -> f64 {
        freq_norm(&self.grid, idx)
    }

    /// Multiplies every coefficient by `f(|ξ|)` componentwise.
    pub fn apply_radial(&mut self, f: impl Fn(f64) -> f64) {
        let sites = self.grid.site_count();
        let weights: Vec<f64> = (0..sites).map(|i| f(freq_norm(&self.grid, i))).collect();
        for c in 0..self.m {
            let block = &mut self.coeffs[c * sites..(c + 1) * sites];
            for (z, w) in block.iter_mut().zip(&weights) {
                *z *= *w;
            }
        }
    }
}

fn wavevector(grid: &Grid, idx: usize) -> [i64; 2] {
    let n_ax = grid.points_per_axis() as i64;
    let fold = |k: i64| if k < n_ax / 2 { k } else { k - n_ax };
    match grid.dim() {
        1 => [fold(idx as i64), 0],
        _ => [fold(idx as i64 / n_ax), fold(idx as i64 % n_ax)],
    }
}

fn freq_norm(grid: &Grid, idx: usize) -> f64 {
    let k = wavevector(grid, idx);
    let base = 2.0 * PI / grid.extent();
    match grid.dim() {
        1 => base * k[0].unsigned_abs() as f64,
        _ => base * ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt(),
    }
}

fn fft_axis(data: &mut [Complex64], n: usize, rows: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    for r in 0..rows {
        fft.process(&mut data[r * n..(r + 1) * n]);
    }
}

fn transpose(data: &mut Vec<Complex64>, n: usize) {
    let mut out = vec![Complex64::default(); data.len()];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = data[i * n + j];
        }
    }
    *data = std::mem::take(&mut out);
    let _ = out;
}

fn transform_component(grid: &Grid, mut data: Vec<Complex64>, inverse: bool) -> Vec<Complex64> {
    let n = grid.points_per_axis();
    match grid.dim() {
        1 => fft_axis(&mut data, n, 1, inverse),
        _ => {
            fft_axis(&mut data, n, n, inverse);
            transpose(&mut data, n);
            fft_axis(&mut data, n, n, inverse);
            transpose(&mut data, n);
        }
    }
    let scale = 1.0 / (grid.site_count() as f64).sqrt();
    for z in &mut data {
        *z *= scale;
    }
    data
}

/// Forward unitary transform of each component.
pub fn dft(field: &Field) -> SpectralField {
    let grid = field.grid();
    let sites = grid.site_count();
    let m = field.m();
    let mut coeffs = Vec::with_capacity(sites * m);
    for c in 0..m {
        let data: Vec<Complex64> = (0..sites)
            .map(|s| Complex64::new(field.comp(s, c), 0.0))
            .collect();
        coeffs.extend(transform_component(&grid, data, false));
    }
    SpectralField { grid, m, coeffs }
}

/// Inverse unitary transform; the imaginary part is discarded (all
/// multipliers used here preserve conjugate symmetry of real fields).
pub fn idft(spec: &SpectralField) -> Field {
    let grid = spec.grid;
    let sites = grid.site_count();
    let m = spec.m;
    let mut values = vec![0.0; sites * m];
    for c in 0..m {
        let data = spec.coeffs[c * sites..(c + 1) * sites].to_vec();
        let out = transform_component(&grid, data, true);
        for (s, z) in out.iter().enumerate() {
            values[s * m + c] = z.re;
        }
    }
    Field::from_values(grid, m, values).expect("inverse transform produced non-finite values")
}

/// Fractional Laplacian `(−Δ)^s` as the multiplier `|ξ|^{2s}`;
/// supported exponents `s ∈ {1/4, 1/2, 1}`. The zero mode is annihilated.
pub fn frac_laplacian(field: &Field, s: f64) -> Result<Field> {
    if ![0.25, 0.5, 1.0].contains(&s) {
        return Err(Error::Config(format!("unsupported fractional exponent s={s}")));
    }
    let mut spec = dft(field);
    spec.apply_radial(|xi| xi.powf(2.0 * s));
    Ok(idft(&spec))
}

/// Poisson semigroup `S_t` as the multiplier `e^{−t|ξ|}`; `S_0` is the
/// identity and constants are preserved exactly.
pub fn poisson_semigroup(field: &Field, t: f64) -> Result<Field> {
    if t < 0.0 {
        return Err(Error::Domain(format!("semigroup time t={t} must be ≥ 0")));
    }
    if t == 0.0 {
        return Ok(field.clone());
    }
    let mut spec = dft(field);
    spec.apply_radial(|xi| (-t * xi).exp());
    Ok(idft(&spec))
}

/// Dimensional constant `Γ((n+1)/2)/π^{(n+1)/2}` of the Poisson kernel and
/// the fractional-gradient normalization: `γ₁ = 1/π`, `γ₂ = 1/(2π)`.
pub fn gamma_n(n: usize) -> f64 {
    match n {
        1 => 1.0 / PI,
        2 => 1.0 / (2.0 * PI),
        _ => panic!("unsupported dimension {n}"),
    }
}

/// Poisson kernel profile `p(x) = γ_n (1+|x|²)^{-(n+1)/2}` at radius `r`.
pub fn poisson_kernel_profile(r: f64, n: usize) -> f64 {
    gamma_n(n) * (1.0 + r * r).powf(-(n as f64 + 1.0) / 2.0)
}

/// Poisson kernel `p_t(x)` at radius `|x| = r`, evaluated in closed form.
pub fn poisson_kernel(r: f64, t: f64, n: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("kernel time t={t} must be positive")));
    }
    // direct formula; the scaling route t^{-n} p(x/t) is checked against it
    Ok(gamma_n(n) * t / (t * t + r * r).powf((n as f64 + 1.0) / 2.0))
}

/// Spectral gradient: one field per axis, each carrying all `m` components.
/// The Nyquist mode is zeroed (odd multiplier).
pub fn gradient(field: &Field) -> Vec<Field> {
    let grid = field.grid();
    let sites = grid.site_count();
    let m = field.m();
    let spec = dft(field);
    let n_ax = grid.points_per_axis() as i64;
    let base = 2.0 * PI / grid.extent();
    (0..grid.dim())
        .map(|axis| {
            let mut d = spec.clone();
            for c in 0..m {
                for i in 0..sites {
                    let k = wavevector(&grid, i)[axis];
                    let xi = if k == -n_ax / 2 { 0.0 } else { base * k as f64 };
                    d.coeffs[c * sites + i] *= Complex64::new(0.0, xi);
                }
            }
            idft(&d)
        })
        .collect()
}

/// Half-Dirichlet energy `𝓔_{1/2}(u) = ½ ∫ |(−Δ)^{1/4} u|²
/// = ½ Δ^n Σ_ξ |ξ| |û(ξ)|²`.
pub fn energy_half(field: &Field) -> f64 {
    let spec = dft(field);
    let grid = field.grid();
    let sites = grid.site_count();
    let measure = grid.spacing().powi(grid.dim() as i32);
    let mut total = 0.0;
    for c in 0..spec.m {
        for i in 0..sites {
            total += freq_norm(&grid, i) * spec.coeffs[c * sites + i].norm_sqr();
        }
    }
    0.5 * measure * total
}

/// Spectral Dirichlet form `∫ u · (−Δ)^{1/2} v`, symmetric in `(u, v)`.
pub fn dirichlet_form(u: &Field, v: &Field) -> Result<f64> {
    if u.grid() != v.grid() || u.m() != v.m() {
        return Err(Error::Shape("dirichlet_form: mismatched grids or components".into()));
    }
    let su = dft(u);
    let sv = dft(v);
    let grid = u.grid();
    let sites = grid.site_count();
    let measure = grid.spacing().powi(grid.dim() as i32);
    let mut total = 0.0;
    for c in 0..su.m {
        for i in 0..sites {
            let z = su.coeffs[c * sites + i] * sv.coeffs[c * sites + i].conj();
            total += freq_norm(&grid, i) * z.re;
        }
    }
    Ok(measure * total)
}

/// Circular convolution `(u ∗ ρ)(x) = Δ^n Σ_y u(y) ρ(x−y)` via the
/// transform pair; `ρ` is a scalar field sampled at the grid sites and the
/// displacement `x−y` is wrapped periodically.
pub fn convolve(u: &Field, kernel: &Field) -> Result<Field> {
    if kernel.m() != 1 {
        return Err(Error::Shape("convolution kernel must be scalar".into()));
    }
    if u.grid() != kernel.grid() {
        return Err(Error::Shape("convolution: mismatched grids".into()));
    }
    let grid = u.grid();
    let sites = grid.site_count();
    let measure = grid.spacing().powi(grid.dim() as i32);
    // re-index kernel samples by displacement: site of coordinate 0 -> index 0
    let half = (grid.points_per_axis() / 2) as isize;
    let shifted = kernel.shift_sites(if grid.dim() == 1 { [-half, 0] } else { [-half, -half] });
    // unitary-transform convolution theorem carries a √(N^n) factor
    let factor = measure * (sites as f64).sqrt();
    let mut su = dft(u);
    let sk = dft(&shifted);
    for c in 0..su.m {
        for i in 0..sites {
            su.coeffs[c * sites + i] *= sk.coeffs[i] * factor;
        }
    }
    Ok(idft(&su))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample_function};

    fn wave_field(grid: Grid, k: i64) -> Field {
        let xi = 2.0 * PI * k as f64 / grid.extent();
        sample_function(grid, 2, |p| [(xi * p[0]).cos(), (xi * p[0]).sin(), 0.0]).unwrap()
    }

    fn random_band_limited(grid: Grid, m: usize, kmax: i64, seed: u64) -> Field {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<(i64, i64, f64, f64)> = (1..=kmax)
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
                    let phase = base * (*k as f64 * p[0] + *l as f64 * p[1]);
                    *val += a * (phase + c as f64).cos() + b * (phase - 0.2 * c as f64).sin();
                }
            }
            v
        })
        .unwrap()
    }

    #[test]
    fn dft_constant_and_single_mode() {
        let g = make_grid(1, 8.0, 32).unwrap();
        let c = Field::constant(g, &[2.0]);
        let spec = dft(&c);
        for i in 1..32 {
            assert!(spec.coeffs()[i].norm() < 1e-12);
        }
        assert!((spec.coeffs()[0].norm() - 2.0 * 32f64.sqrt()).abs() < 1e-10);

        let w = wave_field(g, 3);
        let sw = dft(&w);
        for i in 0..32 {
            let k = sw.wavevector(i)[0];
            let mag = sw.coeffs()[i].norm();
            if k.abs() == 3 {
                assert!(mag > 1.0);
            } else {
                assert!(mag < 1e-10, "leak at k={k}: {mag}");
            }
        }
    }

    #[test]
    fn roundtrip_is_identity() {
        for (n, nn) in [(1usize, 256usize), (2, 32)] {
            let g = make_grid(n, 10.0, nn).unwrap();
            let f = random_band_limited(g, 2, 5, 7);
            let back = idft(&dft(&f));
            assert!(f.sup_distance(&back) < 1e-12);
        }
    }

    #[test]
    fn frac_laplacian_eigenfunctions() {
        let g = make_grid(1, 8.0, 64).unwrap();
        let c = Field::constant(g, &[1.5, -0.5]);
        let z = frac_laplacian(&c, 0.5).unwrap();
        assert!(z.sup_norm() < 1e-12);

        let w = wave_field(g, 4);
        let xi = 2.0 * PI * 4.0 / 8.0;
        let half = frac_laplacian(&w, 0.5).unwrap();
        assert!(half.sup_distance(&w.scaled(xi)) < 1e-11);
        let full = frac_laplacian(&w, 1.0).unwrap();
        assert!(full.sup_distance(&w.scaled(xi * xi)) < 1e-10);

        assert!(matches!(frac_laplacian(&w, 0.3), Err(Error::Config(_))));
    }

    #[test]
    fn semigroup_identity_decay_and_errors() {
        let g = make_grid(1, 8.0, 64).unwrap();
        let w = wave_field(g, 2);
        assert!(poisson_semigroup(&w, 0.0).unwrap().sup_distance(&w) < 1e-15);
        let xi = 2.0 * PI * 2.0 / 8.0;
        let t = 0.7;
        let s = poisson_semigroup(&w, t).unwrap();
        assert!(s.sup_distance(&w.scaled((-t * xi).exp())) < 1e-12);
        assert!(matches!(poisson_semigroup(&w, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn semigroup_law_and_self_adjointness() {
        let g = make_grid(1, 16.0, 128).unwrap();
        let f = random_band_limited(g, 2, 12, 3);
        for (t, s) in [(0.3, 0.9), (0.05, 0.05), (1.7, 0.2)] {
            let a = poisson_semigroup(&poisson_semigroup(&f, s).unwrap(), t).unwrap();
            let b = poisson_semigroup(&f, t + s).unwrap();
            assert!(a.sup_distance(&b) < 1e-12);
        }

        let u = random_band_limited(g, 1, 10, 11);
        let v = random_band_limited(g, 1, 10, 12);
        let t = 0.4;
        let measure = g.spacing();
        let lhs: f64 = poisson_semigroup(&u, t)
            .unwrap()
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| a * b * measure)
            .sum();
        let rhs: f64 = u
            .values()
            .iter()
            .zip(poisson_semigroup(&v, t).unwrap().values())
            .map(|(a, b)| a * b * measure)
            .sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn maximum_principle_and_mass() {
        let g = make_grid(1, 16.0, 512).unwrap();
        let u = random_band_limited(g, 1, 8, 21);
        let (lo, hi) = u
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        for t in [0.01, 0.1, 1.0, 5.0] {
            let s = poisson_semigroup(&u, t).unwrap();
            for &v in s.values() {
                assert!(v >= lo - 1e-10 && v <= hi + 1e-10, "t={t}: {v} not in [{lo},{hi}]");
            }
        }
        let one = Field::constant(g, &[1.0]);
        let s = poisson_semigroup(&one, 2.0).unwrap();
        for &v in s.values() {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn poisson_kernel_closed_form() {
        assert!((poisson_kernel(0.0, 1.0, 1).unwrap() - 1.0 / PI).abs() < 1e-15);
        // p_t(x) = t/(π(t²+x²)); p_2(2) = 1/(4π)
        assert!((poisson_kernel(2.0, 2.0, 1).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        // scaling identity p_t(x) = t^{-n} p(x/t) against the direct formula
        for n in [1usize, 2] {
            for (r, t) in [(0.0, 0.5), (1.3, 0.7), (4.0, 2.5), (0.2, 3.0)] {
                let direct = poisson_kernel(r, t, n).unwrap();
                let scaled = t.powi(-(n as i32)) * poisson_kernel_profile(r / t, n);
                assert!((direct - scaled).abs() <= 1e-12 * direct.abs().max(1e-300));
            }
        }
        assert!(matches!(poisson_kernel(1.0, 0.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn gradient_constant_wave_and_product() {
        let g = make_grid(1, 8.0, 128).unwrap();
        let c = Field::constant(g, &[1.0, 2.0]);
        assert!(gradient(&c)[0].sup_norm() < 1e-13);

        let w = wave_field(g, 3);
        let xi = 2.0 * PI * 3.0 / 8.0;
        let dw = &gradient(&w)[0];
        // d/dx (cos ξx, sin ξx) = ξ(−sin ξx, cos ξx)
        let want = sample_function(g, 2, |p| {
            [-xi * (xi * p[0]).sin(), xi * (xi * p[0]).cos(), 0.0]
        })
        .unwrap();
        assert!(dw.sup_distance(&want) < 1e-11);

        // product of two low modes vs symbolic derivative
        let a = 2.0 * PI * 2.0 / 8.0;
        let b = 2.0 * PI * 5.0 / 8.0;
        let prod = sample_function(g, 1, |p| [(a * p[0]).sin() * (b * p[0]).cos(), 0.0, 0.0])
            .unwrap();
        let dp = &gradient(&prod)[0];
        let want = sample_function(g, 1, |p| {
            [
                a * (a * p[0]).cos() * (b * p[0]).cos()
                    - b * (a * p[0]).sin() * (b * p[0]).sin(),
                0.0,
                0.0,
            ]
        })
        .unwrap();
        assert!(dp.sup_distance(&want) < 1e-10);
    }

    #[test]
    fn energy_of_unit_wave_and_additivity() {
        let g = make_grid(1, 8.0, 256).unwrap();
        assert_eq!(energy_half(&Field::constant(g, &[2.0, 1.0])), 0.0);

        let k = 5i64;
        let xi = 2.0 * PI * k as f64 / 8.0;
        let w = wave_field(g, k);
        let e = energy_half(&w);
        assert!(
            (e - xi * 8.0 / 2.0).abs() < 1e-10 * e,
            "energy {e} vs {}",
            xi * 8.0 / 2.0
        );

        // orthogonal mode superposition: energies add
        let w2 = wave_field(g, 11);
        let mut sum = w.clone();
        sum.add_scaled(&w2, 1.0);
        let total = energy_half(&sum);
        assert!((total - e - energy_half(&w2)).abs() < 1e-9 * total);
    }

    #[test]
    fn dirichlet_form_identities() {
        let g = make_grid(1, 8.0, 128).unwrap();
        let u = random_band_limited(g, 2, 9, 5);
        let d = dirichlet_form(&u, &u).unwrap();
        assert!((d - 2.0 * energy_half(&u)).abs() < 1e-12 * d.abs().max(1.0));

        let w3 = wave_field(g, 3);
        let w7 = wave_field(g, 7);
        assert!(dirichlet_form(&w3, &w7).unwrap().abs() < 1e-10);

        // same-mode pair: |ξ| L (amplitude product)
        let xi = 2.0 * PI * 3.0 / 8.0;
        let a = w3.scaled(0.7);
        let b = w3.scaled(-1.3);
        let d = dirichlet_form(&a, &b).unwrap();
        assert!((d - xi * 8.0 * 0.7 * (-1.3)).abs() < 1e-9 * d.abs());

        let g2 = make_grid(1, 8.0, 64).unwrap();
        assert!(matches!(
            dirichlet_form(&u, &Field::zeros(g2, 2)),
            Err(Error::Shape(_))
        ));
    }

    fn periodized_kernel(g: Grid, t: f64, images: i32) -> (Field, f64) {
        let mut kernel = Field::zeros(g, 1);
        let mut mass = 0.0;
        for s in 0..g.site_count() {
            let x = g.site_coord(s)[0];
            let mut v = 0.0;
            for img in -images..=images {
                v += poisson_kernel(x + img as f64 * g.extent(), t, 1).unwrap();
            }
            kernel.values_mut()[s] = v;
            mass += v * g.spacing();
        }
        kernel.scale(1.0 / mass);
        (kernel, mass)
    }

    #[test]
    fn kernel_consistency_direct_convolution() {
        // multiplier semigroup vs direct periodized-kernel trapezoid
        // convolution with discrete mass normalization
        let g = make_grid(1, 16.0, 512).unwrap();
        let ext = g.extent();
        let u = random_band_limited(g, 1, 10, 9);
        let (lo, hi) = u
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let osc = hi - lo;
        let delta = g.spacing();
        // dropped-image-mass budget for a ±J truncation:
        // osc(u) × Σ_{|j|>J} (1/π)[arctan((j+1/2)L/t) − arctan((j−1/2)L/t)]
        let budget = |images: i32, t: f64| {
            let mut dropped = 0.0;
            for j in (images + 1)..10_000 {
                dropped += 2.0 / PI
                    * (((j as f64 + 0.5) * ext / t).atan() - ((j as f64 - 0.5) * ext / t).atan());
            }
            1e-4 * (1.0 + u.sup_norm()) + osc * dropped
        };
        for t in [8.0 * delta, 0.5, ext / 10.0] {
            let spectral = poisson_semigroup(&u, t).unwrap();
            for images in [3, 64] {
                let (k, _) = periodized_kernel(g, t, images);
                let err = convolve(&u, &k).unwrap().sup_distance(&spectral);
                let bound = budget(images, t);
                assert!(err < bound, "t={t}: ±{images}-image error {err} over budget {bound}");
            }
        }
    }
}
