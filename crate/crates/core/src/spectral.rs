//! Fourier-in-angle solvers on a [`PolarGrid`].
//!
//! Each angular mode `f_k(r)` of the right-hand side leads to a decoupled radial
//! problem `−(r u_k')'/r + k² u_k/r² = f_k`, discretised by Galerkin in the
//! basis of piecewise homogeneous solutions, which is exact for `f_k = 0`. Harmonic functions are
//! handled in closed form through [`HarmonicSeries`].

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::{Arc, OnceLock};

use gauss_quad::GaussLegendre;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{LabError, Result};
use crate::grid::{GradField, PolarGrid, Quadrature, ScalarField};
use crate::mobius::Complex2;
use crate::norms::DirichletSolve;

/// Energy fraction in the top retained mode above which a field counts as aliased.
pub const ALIASING_THRESHOLD: f64 = 0.01;

/// Radial profile of the `e^{ikθ}` component on every ring.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeProfile {
    pub k: i64,
    pub values: Vec<Complex64>,
}

/// Angular modes `0..=K` of a real field; negative modes follow by conjugation.
#[derive(Debug, Clone)]
pub struct ModalField {
    pub n_theta: usize,
    pub modes: Vec<ModeProfile>,
    /// share of the field's energy carried by `|k| ≥ K` (including discarded modes)
    pub aliasing: f64,
}

impl ModalField {
    pub fn k_max(&self) -> usize {
        self.modes.len() - 1
    }

    /// Profile of mode `k` for any sign of `k`; zero beyond the cap.
    pub fn mode(&self, k: i64) -> Vec<Complex64> {
        let n_r = self.modes[0].values.len();
        match self.modes.get(k.unsigned_abs() as usize) {
            Some(p) if k >= 0 => p.values.clone(),
            Some(p) => p.values.iter().map(|v| v.conj()).collect(),
            None => vec![Complex64::new(0.0, 0.0); n_r],
        }
    }

    pub fn aliasing_warning(&self) -> bool {
        self.aliasing > ALIASING_THRESHOLD
    }
}

/// Default mode cap `n_θ/2 − 1`.
pub fn default_mode_cap(grid: &PolarGrid) -> usize {
    grid.n_theta() / 2 - 1
}

/// Discrete Fourier transform on every ring, `f_k = (1/n) Σ_m f(θ_m) e^{−ikθ_m}`.
pub fn fourier_modes(f: &ScalarField<PolarGrid>, k_max: usize) -> Result<ModalField> {
    let grid = f.grid();
    let (n_r, n_theta) = (grid.n_r(), grid.n_theta());
    if n_theta < 2 * k_max + 2 {
        return Err(LabError::InvalidParameter(format!(
            "mode cap {k_max} needs at least {} angles, grid has {n_theta}",
            2 * k_max + 2
        )));
    }
    let fft = FftPlanner::new().plan_fft_forward(n_theta);
    let mut modes: Vec<ModeProfile> = (0..=k_max)
        .map(|k| ModeProfile {
            k: k as i64,
            values: Vec::with_capacity(n_r),
        })
        .collect();
    let mut total = 0.0;
    let mut top = 0.0;
    let mut buffer = vec![Complex64::new(0.0, 0.0); n_theta];
    for j in 0..n_r {
        for (m, slot) in buffer.iter_mut().enumerate() {
            *slot = Complex64::new(f.at(j, m), 0.0);
        }
        fft.process(&mut buffer);
        let scale = 1.0 / n_theta as f64;
        let ring = grid.ring_measure(j);
        for (k, c) in buffer.iter().enumerate() {
            let e = (c * scale).norm_sqr() * ring;
            total += e;
            let signed = if k <= n_theta / 2 { k } else { n_theta - k };
            if signed >= k_max {
                top += e;
            }
        }
        for (k, profile) in modes.iter_mut().enumerate() {
            profile.values.push(buffer[k] * scale);
        }
    }
    Ok(ModalField {
        n_theta,
        modes,
        aliasing: if total > 0.0 { top / total } else { 0.0 },
    })
}

/// Inverse of [`fourier_modes`].
pub fn synthesize(grid: &Arc<PolarGrid>, modal: &ModalField) -> Result<ScalarField<PolarGrid>> {
    let (n_r, n_theta) = (grid.n_r(), grid.n_theta());
    if modal.n_theta != n_theta || modal.modes[0].values.len() != n_r {
        return Err(LabError::GridMismatch);
    }
    let fft = FftPlanner::new().plan_fft_inverse(n_theta);
    let mut values = vec![0.0; grid.len()];
    let mut buffer = vec![Complex64::new(0.0, 0.0); n_theta];
    for j in 0..n_r {
        buffer
            .iter_mut()
            .for_each(|b| *b = Complex64::new(0.0, 0.0));
        for profile in &modal.modes {
            let k = profile.k as usize;
            let c = profile.values[j];
            if k == 0 {
                buffer[0] = Complex64::new(c.re, 0.0);
            } else if 2 * k == n_theta {
                buffer[k] = Complex64::new(c.re, 0.0);
            } else {
                buffer[k] = c;
                buffer[n_theta - k] = c.conj();
            }
        }
        fft.process(&mut buffer);
        for m in 0..n_theta {
            values[grid.index(j, m)] = buffer[m].re;
        }
    }
    Ok(ScalarField::from_values_unchecked(grid.clone(), values))
}

/// Outer boundary condition of one radial problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialBoundary {
    /// `u_k(1) = 0`
    Dirichlet,
    /// `u_k'(1) = flux`
    Neumann(Complex64),
}

/// Tridiagonal system of mode `k` with its source coupling.
struct RadialSystem {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    /// `rhs_j = mass[j]·(f_{j−1}, f_j, f_{j+1})`
    mass: Vec<[f64; 3]>,
    /// weight of the boundary flux in the last row
    flux: f64,
}

/// `(k coth kL, k/sinh kL)`, the end and coupling weights of the hat energy on
/// a piece of length `L` in `ln r`.
fn piece_weights(k: f64, len: f64) -> (f64, f64) {
    if k == 0.0 {
        (1.0 / len, 1.0 / len)
    } else {
        let x = k * len;
        (k / x.tanh(), k / x.sinh())
    }
}

/// Rising homogeneous hat `sinh(kτ)/sinh(kL)` on `[0, L]`.
fn rise(k: f64, tau: f64, len: f64) -> f64 {
    if k == 0.0 {
        tau / len
    } else {
        (k * (tau - len)).exp() * (-2.0 * k * tau).exp_m1() / (-2.0 * k * len).exp_m1()
    }
}

fn gauss_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(10).unwrap()))
}

/// `∫₀ᴸ g(τ) dτ` for a vector integrand growing at most like `e^{rate·τ}`.
fn quad<const N: usize>(len: f64, rate: f64, mut g: impl FnMut(f64) -> [f64; N]) -> [f64; N] {
    let pieces = ((rate * len).ceil() as usize).max(1);
    let h = len / pieces as f64;
    let mut acc = [0.0; N];
    for p in 0..pieces {
        let mid = (p as f64 + 0.5) * h;
        for &(x, w) in gauss_rule().as_node_weight_pairs() {
            let v = g(mid + 0.5 * h * x);
            for (a, v) in acc.iter_mut().zip(v) {
                *a += 0.5 * h * w * v;
            }
        }
    }
    acc
}

/// Exponent of the source model `r^m × (linear in r²)` on a piece; `m = k`
/// unless `(b/a)^k` would amplify nodal noise.
fn model_exponent(k: f64, len: f64) -> f64 {
    if k * len <= 4.0 {
        k
    } else {
        0.0
    }
}

/// Galerkin system of mode `k` in the basis of piecewise homogeneous solutions
/// `r^{±k}` (`1`, `ln r` for `k = 0`). The stiffness is exact; the source is
/// modelled on each piece as `f_a (r/a)^m (1−λ) + f_b (r/b)^m λ` with `λ` linear
/// in `r²`, and as `f₀ (r/r₀)^k` inside the first ring.
fn radial_system(grid: &PolarGrid, k: usize, dirichlet: bool) -> RadialSystem {
    let n = grid.n_r();
    let t: Vec<f64> = grid.radii().iter().map(|r| r.ln()).collect();
    let kf = k as f64;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut mass = vec![[0.0; 3]; n];

    diag[0] += kf;
    mass[0][1] += (2.0 * t[0]).exp() / (2.0 * kf + 2.0);

    for j in 1..n {
        let len = t[j] - t[j - 1];
        let (e, c) = piece_weights(kf, len);
        diag[j - 1] += e;
        diag[j] += e;
        upper[j - 1] = -c;
        lower[j] = -c;

        let m = model_exponent(kf, len);
        let scale = (2.0 * t[j - 1]).exp();
        let span = (2.0 * len).exp_m1();
        let [rl, rr, fl, fr] = quad(len, kf + m + 4.0, |tau| {
            let lam = (2.0 * tau).exp_m1() / span;
            let w = scale * (2.0 * tau).exp();
            let left = w * (m * tau).exp() * (1.0 - lam);
            let right = w * (m * (tau - len)).exp() * lam;
            let (up, down) = (rise(kf, tau, len), rise(kf, len - tau, len));
            [up * left, up * right, down * left, down * right]
        });
        mass[j][0] += rl;
        mass[j][1] += rr;
        mass[j - 1][1] += fl;
        mass[j - 1][2] += fr;
    }

    let len = -t[n - 1];
    let m = model_exponent(kf, len);
    let scale = (2.0 * t[n - 1]).exp();
    let flux;
    let [outer] = if dirichlet {
        diag[n - 1] += piece_weights(kf, len).0;
        flux = 0.0;
        quad(len, kf + m + 2.0, |tau| {
            [scale * ((2.0 + m) * tau).exp() * rise(kf, len - tau, len)]
        })
    } else {
        diag[n - 1] += kf * (kf * len).tanh();
        flux = 1.0 / (kf * len).cosh();
        quad(len, kf + m + 2.0, |tau| {
            [scale * ((2.0 + m) * tau).exp() * (kf * (tau - len)).cosh() * flux]
        })
    };
    mass[n - 1][1] += outer;
    RadialSystem {
        lower,
        diag,
        upper,
        mass,
        flux,
    }
}

fn thomas(sys: &RadialSystem, rhs: &[Complex64]) -> Vec<Complex64> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    c[0] = sys.upper[0] / sys.diag[0];
    d[0] = rhs[0] / sys.diag[0];
    for j in 1..n {
        let m = sys.diag[j] - sys.lower[j] * c[j - 1];
        c[j] = sys.upper[j] / m;
        d[j] = (rhs[j] - d[j - 1] * sys.lower[j]) / m;
    }
    for j in (0..n - 1).rev() {
        let next = d[j + 1];
        d[j] -= next * c[j];
    }
    d
}

/// Solves the radial problem of mode `k` with source profile `f_k`.
///
/// The `k = 0` Neumann problem is singular; it is solved with `u₀(r₀) = 0`
/// pinned and left for the caller to normalise.
pub fn solve_mode(
    grid: &PolarGrid,
    k: usize,
    f_k: &[Complex64],
    boundary: RadialBoundary,
) -> Vec<Complex64> {
    let n = grid.n_r();
    let dirichlet = matches!(boundary, RadialBoundary::Dirichlet);
    let mut sys = radial_system(grid, k, dirichlet);
    let at = |i: usize| f_k.get(i).copied().unwrap_or_default();
    let mut rhs: Vec<Complex64> = (0..n)
        .map(|j| {
            let w = sys.mass[j];
            let prev = if j > 0 {
                at(j - 1)
            } else {
                Complex64::new(0.0, 0.0)
            };
            prev * w[0] + at(j) * w[1] + at(j + 1) * w[2]
        })
        .collect();
    if let RadialBoundary::Neumann(g) = boundary {
        rhs[n - 1] += g * sys.flux;
        if k == 0 {
            sys.diag[0] = 1.0;
            sys.upper[0] = 0.0;
            rhs[0] = Complex64::new(0.0, 0.0);
        }
    }
    thomas(&sys, &rhs)
}

fn solve_all_modes(
    f: &ScalarField<PolarGrid>,
    boundary: impl Fn(usize) -> RadialBoundary,
) -> Result<ScalarField<PolarGrid>> {
    let grid = f.grid_arc().clone();
    let modal = fourier_modes(f, default_mode_cap(&grid))?;
    let modes = modal
        .modes
        .iter()
        .map(|p| ModeProfile {
            k: p.k,
            values: solve_mode(&grid, p.k as usize, &p.values, boundary(p.k as usize)),
        })
        .collect();
    synthesize(
        &grid,
        &ModalField {
            n_theta: modal.n_theta,
            modes,
            aliasing: modal.aliasing,
        },
    )
}

/// `−Δu = f`, `u = 0` on `∂D`.
pub fn solve_dirichlet_spectral(f: &ScalarField<PolarGrid>) -> Result<ScalarField<PolarGrid>> {
    solve_all_modes(f, |_| RadialBoundary::Dirichlet)
}

/// `−Δv = f`, `∂_ν v = −(1/2π)∫f` on `∂D`, zero mean.
pub fn solve_neumann_spectral(f: &ScalarField<PolarGrid>) -> Result<ScalarField<PolarGrid>> {
    let g = -f.integrate() / (2.0 * PI);
    let zero = Complex64::new(0.0, 0.0);
    let v = solve_all_modes(f, |k| {
        RadialBoundary::Neumann(if k == 0 { Complex64::new(g, 0.0) } else { zero })
    })?;
    Ok(v.zero_mean())
}

/// Spectral Dirichlet solver as a [`DirichletSolve`] implementation.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpectralDirichlet;

impl DirichletSolve<PolarGrid> for SpectralDirichlet {
    fn solve_dirichlet(&self, f: &ScalarField<PolarGrid>) -> Result<ScalarField<PolarGrid>> {
        solve_dirichlet_spectral(f)
    }
}

/// How the outer half-cell enters [`dirichlet_energy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    /// the field vanishes on `r = 1`
    Dirichlet,
    /// the boundary value is extrapolated from the outer rings
    Free,
}

/// Discrete `∫|∇u|²`: the exact energy of the piecewise homogeneous
/// interpolant of each mode, the quadratic form of the radial scheme.
pub fn dirichlet_energy(field: &ScalarField<PolarGrid>, closure: Closure) -> Result<f64> {
    let grid = field.grid();
    let modal = fourier_modes(field, grid.n_theta() / 2 - 1)?;
    let n = grid.n_r();
    let r = grid.radii();
    let t: Vec<f64> = r.iter().map(|r| r.ln()).collect();
    let pair = |k: f64, len: f64, a: Complex64, b: Complex64| {
        let (e, c) = piece_weights(k, len);
        e * (a.norm_sqr() + b.norm_sqr()) - 2.0 * c * (a * b.conj()).re
    };
    let mut energy = 0.0;
    for p in &modal.modes {
        let k = p.k as f64;
        let u = &p.values;
        let mut sum = k * u[0].norm_sqr();
        for j in 1..n {
            sum += pair(k, t[j] - t[j - 1], u[j - 1], u[j]);
        }
        let outer = match closure {
            Closure::Dirichlet => Complex64::new(0.0, 0.0),
            Closure::Free => {
                let x = [r[n - 3], r[n - 2], r[n - 1]];
                let lag = |y: [f64; 3]| lagrange_at_one(x, y);
                Complex64::new(
                    lag([u[n - 3].re, u[n - 2].re, u[n - 1].re]),
                    lag([u[n - 3].im, u[n - 2].im, u[n - 1].im]),
                )
            }
        };
        sum += pair(k, -t[n - 1], u[n - 1], outer);
        energy += if p.k == 0 { 1.0 } else { 2.0 } * 2.0 * PI * sum;
    }
    Ok(energy)
}

fn lagrange_at_one(x: [f64; 3], y: [f64; 3]) -> f64 {
    let l0 = (1.0 - x[1]) * (1.0 - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]));
    let l1 = (1.0 - x[0]) * (1.0 - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]));
    let l2 = (1.0 - x[0]) * (1.0 - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
    l0 * y[0] + l1 * y[1] + l2 * y[2]
}

/// Relative `H¹` seminorm distance `‖∇(a − b)‖/‖∇b‖`.
pub fn relative_h1_error(
    a: &ScalarField<PolarGrid>,
    b: &ScalarField<PolarGrid>,
    closure: Closure,
) -> Result<f64> {
    let diff = a.sub(b)?;
    let denom = dirichlet_energy(b, closure)?;
    if denom == 0.0 {
        return Ok(dirichlet_energy(&diff, closure)?.sqrt());
    }
    Ok((dirichlet_energy(&diff, closure)? / denom).sqrt())
}

/// Boundary Fourier coefficients `ĝ_k = (1/2π)∫ g e^{−ikθ}`, `k = 0..=k_max`.
pub fn boundary_modes(samples: &[f64], k_max: usize) -> Result<Vec<Complex64>> {
    let n = samples.len();
    if n < 2 * k_max + 2 {
        return Err(LabError::InvalidParameter(format!(
            "{n} boundary samples cannot carry {k_max} modes"
        )));
    }
    let mut buffer: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    Ok(buffer[..=k_max].iter().map(|c| c / n as f64).collect())
}

/// Real boundary function from its nonnegative modes, sampled at `θ_m = 2πm/n`.
pub fn boundary_synthesize(modes: &[Complex64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|m| {
            let theta = 2.0 * PI * m as f64 / n as f64;
            let step = Complex64::from_polar(1.0, theta);
            let mut phase = step;
            let mut value = modes[0].re;
            for c in &modes[1..] {
                value += 2.0 * (c * phase).re;
                phase *= step;
            }
            value
        })
        .collect()
}

/// The Dirichlet-to-Neumann map of the disc, `ĝ_k ↦ |k| ĝ_k`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DtNOperator;

impl DtNOperator {
    pub fn apply_modes(&self, modes: &[Complex64]) -> Vec<Complex64> {
        modes
            .iter()
            .enumerate()
            .map(|(k, c)| c * k as f64)
            .collect()
    }

    /// Applies the map to boundary samples, keeping `n/2 − 1` modes.
    pub fn apply(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let modes = boundary_modes(samples, samples.len() / 2 - 1)?;
        Ok(boundary_synthesize(
            &self.apply_modes(&modes),
            samples.len(),
        ))
    }

    /// `⟨Λg, g⟩ = 2π Σ_{k≠0} |k||ĝ_k|²`.
    pub fn quadratic_form(&self, modes: &[Complex64]) -> f64 {
        4.0 * PI
            * modes
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c.norm_sqr())
                .sum::<f64>()
    }
}

/// `H^{-1/2}(∂D)` pairing `2π Σ_{k≠0} |ĝ_k|²/|k|` of mean-free boundary data.
pub fn h_minus_half_squared(modes: &[Complex64]) -> f64 {
    4.0 * PI
        * modes
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.norm_sqr() / k as f64)
            .sum::<f64>()
}

/// Zero-mean harmonic function `h = 2 Re Σ_{k≥1} a_k w^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSeries {
    /// `a_k` for `k = 1, 2, …`
    pub coefficients: Vec<Complex64>,
}

impl HarmonicSeries {
    /// Harmonic function with normal derivative `Σ ĝ_k e^{ikθ}`.
    ///
    /// `flux_modes[0]` is the mean of the data; it must not exceed `tolerance`.
    pub fn from_neumann_modes(flux_modes: &[Complex64], tolerance: f64) -> Result<Self> {
        let mean = flux_modes.first().map_or(0.0, |c| c.norm());
        if mean > tolerance {
            return Err(LabError::Incompatible { mean, tolerance });
        }
        Ok(Self {
            coefficients: flux_modes
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c / k as f64)
                .collect(),
        })
    }

    pub fn eval(&self, w: Complex2) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coefficients.iter().rev() {
            acc = (acc + c) * w;
        }
        2.0 * acc.re
    }

    /// `(∂_x h, ∂_y h) = (2 Re s, −2 Im s)` with `s = Σ k a_k w^{k−1}`.
    pub fn grad(&self, w: Complex2) -> [f64; 2] {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, c) in self.coefficients.iter().enumerate().rev() {
            acc = acc * w + c * (i + 1) as f64;
        }
        [2.0 * acc.re, -2.0 * acc.im]
    }

    /// Value and gradient in one pass.
    pub fn eval_with_grad(&self, w: Complex2) -> (f64, [f64; 2]) {
        let mut value = Complex64::new(0.0, 0.0);
        let mut slope = Complex64::new(0.0, 0.0);
        for (i, c) in self.coefficients.iter().enumerate().rev() {
            value = (value + c) * w;
            slope = slope * w + c * (i + 1) as f64;
        }
        (2.0 * value.re, [2.0 * slope.re, -2.0 * slope.im])
    }

    /// `∫_D |∇h|² = 4π Σ k |a_k|²`.
    pub fn energy(&self) -> f64 {
        4.0 * PI
            * self
                .coefficients
                .iter()
                .enumerate()
                .map(|(i, c)| (i + 1) as f64 * c.norm_sqr())
                .sum::<f64>()
    }

    pub fn sample<G: Quadrature>(&self, grid: &Arc<G>) -> ScalarField<G> {
        ScalarField::from_fn(grid, |w| self.eval(w))
    }

    pub fn sample_grad<G: Quadrature>(&self, grid: &Arc<G>) -> GradField<G> {
        GradField::from_fn(grid, |w| self.grad(w))
    }
}

/// Zero-mean harmonic `h` on `grid` with `∂_ν h = g` for boundary samples `g`.
pub fn harmonic_from_neumann(
    grid: &Arc<PolarGrid>,
    samples: &[f64],
    tolerance: f64,
) -> Result<ScalarField<PolarGrid>> {
    let modes = boundary_modes(samples, samples.len() / 2 - 1)?;
    Ok(HarmonicSeries::from_neumann_modes(&modes, tolerance)?.sample(grid))
}

/// Output of [`neumann_via_correction`].
#[derive(Debug, Clone)]
pub struct CorrectionSplit {
    /// Dirichlet solution
    pub u: ScalarField<PolarGrid>,
    /// harmonic correction with the mean-free flux of `u`
    pub h: ScalarField<PolarGrid>,
    /// `u − h`, shifted to zero mean
    pub v: ScalarField<PolarGrid>,
    pub series: HarmonicSeries,
}

/// Neumann solution assembled as a Dirichlet solve minus a harmonic correction.
pub fn neumann_via_correction(f: &ScalarField<PolarGrid>) -> Result<CorrectionSplit> {
    let grid = f.grid_arc().clone();
    let u = solve_dirichlet_spectral(f)?;
    let flux = crate::green::neumann_flux(&u, f, default_mode_cap(&grid))?;
    let mut modes = flux.modes.clone();
    modes[0] = Complex64::new(0.0, 0.0);
    let series = HarmonicSeries::from_neumann_modes(&modes, 0.0)?;
    let h = series.sample(&grid);
    let v = u.sub(&h)?.zero_mean();
    Ok(CorrectionSplit { u, h, v, series })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n_r: usize, n_theta: usize, grading: f64) -> Arc<PolarGrid> {
        Arc::new(PolarGrid::new(n_r, n_theta, grading).unwrap())
    }

    fn max_err(a: &ScalarField<PolarGrid>, f: impl Fn(Complex2) -> f64) -> f64 {
        a.grid()
            .points()
            .iter()
            .zip(a.values())
            .fold(0.0, |m, (&w, &v)| m.max((v - f(w)).abs()))
    }

    #[test]
    fn pure_modes_stay_pure() {
        let g = grid(16, 32, 0.0);
        let f = ScalarField::from_fn(&g, |w| (3.0 * w.arg()).cos());
        let modal = fourier_modes(&f, 15).unwrap();
        for p in &modal.modes {
            let size: f64 = p.values.iter().map(|v| v.norm()).sum();
            if p.k == 3 {
                assert!(size > 1.0);
            } else {
                assert!(size < 1e-12, "mode {} leaked {size}", p.k);
            }
        }
        let radial = ScalarField::from_fn(&g, |w| w.norm_sqr());
        let modal = fourier_modes(&radial, 15).unwrap();
        assert!(modal.modes[1..]
            .iter()
            .all(|p| p.values.iter().all(|v| v.norm() < 1e-12)));
    }

    #[test]
    fn transform_round_trip() {
        let g = grid(12, 64, 0.5);
        let f = ScalarField::from_fn(&g, |w| {
            let t = w.arg();
            w.norm() * (1.0 + 0.3 * (5.0 * t).sin() - 0.7 * (11.0 * t).cos())
        });
        let back = synthesize(&g, &fourier_modes(&f, 31).unwrap()).unwrap();
        assert!(back.sub(&f).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn too_many_modes_rejected() {
        let g = grid(8, 16, 0.0);
        assert!(fourier_modes(&ScalarField::zeros(&g), 8).is_err());
    }

    #[test]
    fn dirichlet_constant_source() {
        let g = grid(64, 32, 1.0);
        let u = solve_dirichlet_spectral(&ScalarField::constant(&g, 1.0)).unwrap();
        assert!(max_err(&u, |w| (1.0 - w.norm_sqr()) / 4.0) < 1e-4);
        let zero = solve_dirichlet_spectral(&ScalarField::zeros(&g)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    fn manufactured_errors(k: i32) -> Vec<f64> {
        let exact = |w: Complex2| {
            let r = w.norm();
            r.powi(k) * (1.0 - r.powi(6)) * (k as f64 * w.arg()).cos()
        };
        // −Δ(r^k(1−r⁶)cos kθ) = (12k + 36) r^{k+4} cos kθ
        let source = |w: Complex2| {
            (12.0 * k as f64 + 36.0) * w.norm().powi(k + 4) * (k as f64 * w.arg()).cos()
        };
        [40, 80, 160]
            .iter()
            .map(|&n_r| {
                let g = grid(n_r, 16, 0.0);
                let u = solve_dirichlet_spectral(&ScalarField::from_fn(&g, source)).unwrap();
                max_err(&u, exact)
            })
            .collect()
    }

    #[test]
    fn dirichlet_manufactured_modes_are_second_order() {
        for k in [0, 1, 3, 4] {
            let errors = manufactured_errors(k);
            assert!(errors[2] < 1e-4, "k = {k}, errors {errors:?}");
            let rate = (errors[1] / errors[2]).log2();
            assert!(
                rate > 1.8,
                "k = {k}, observed order {rate}, errors {errors:?}"
            );
        }
    }

    #[test]
    fn source_model_class_is_reproduced() {
        // f = 4(k+1) r^k cos kθ lies in the source model, so only round-off remains
        let g = grid(24, 16, 0.0);
        for k in [1, 2, 5] {
            let kf = k as f64;
            let f = ScalarField::from_fn(&g, |w| {
                4.0 * (kf + 1.0) * w.norm().powi(k) * (kf * w.arg()).cos()
            });
            let u = solve_dirichlet_spectral(&f).unwrap();
            let err = max_err(&u, |w| {
                w.norm().powi(k) * (1.0 - w.norm_sqr()) * (kf * w.arg()).cos()
            });
            assert!(err < 1e-12, "k = {k}: {err}");
        }
    }

    #[test]
    fn neumann_constant_source() {
        let g = grid(64, 32, 1.0);
        let c = 2.0;
        let v = solve_neumann_spectral(&ScalarField::constant(&g, c)).unwrap();
        assert!(max_err(&v, |w| -c * w.norm_sqr() / 4.0 + c / 8.0) < 1e-4);
        assert!(
            solve_neumann_spectral(&ScalarField::zeros(&g))
                .unwrap()
                .max_abs()
                == 0.0
        );
    }

    #[test]
    fn harmonic_extension_of_low_modes() {
        let g = grid(32, 64, 0.0);
        let cos1: Vec<f64> = g.angles().iter().map(|t| t.cos()).collect();
        let h = harmonic_from_neumann(&g, &cos1, 1e-12).unwrap();
        assert!(max_err(&h, |w| w.re) < 1e-6);
        let cos2: Vec<f64> = g.angles().iter().map(|t| (2.0 * t).cos()).collect();
        let h2 = harmonic_from_neumann(&g, &cos2, 1e-12).unwrap();
        assert!(max_err(&h2, |w| 0.5 * w.norm_sqr() * (2.0 * w.arg()).cos()) < 1e-6);
        let shifted: Vec<f64> = cos1.iter().map(|c| c + 0.1).collect();
        assert!(matches!(
            harmonic_from_neumann(&g, &shifted, 1e-6),
            Err(LabError::Incompatible { .. })
        ));
    }

    #[test]
    fn harmonic_energy_parseval() {
        let g = grid(128, 128, 0.0);
        let samples: Vec<f64> = g
            .angles()
            .iter()
            .map(|t| t.cos() - 0.5 * (3.0 * t).sin() + 0.25 * (7.0 * t).cos())
            .collect();
        let modes = boundary_modes(&samples, 63).unwrap();
        let series = HarmonicSeries::from_neumann_modes(&modes, 1e-12).unwrap();
        let parseval = h_minus_half_squared(&modes);
        let exact = PI * (1.0 + 0.25 / 3.0 + 0.0625 / 7.0);
        assert!((series.energy() - parseval).abs() < 1e-12);
        assert!((parseval - exact).abs() < 1e-4);
        let grad = series.sample_grad(&g);
        assert!((grad.l2().powi(2) / exact - 1.0).abs() < 1e-2);
    }

    #[test]
    fn dtn_tangential_and_normal_norms_agree() {
        let n = 256;
        let samples: Vec<f64> = (0..n)
            .map(|m| {
                let t = 2.0 * PI * m as f64 / n as f64;
                (2.0 * t).sin() + 0.3 * (9.0 * t).cos()
            })
            .collect();
        let modes = boundary_modes(&samples, n / 2 - 1).unwrap();
        let series = HarmonicSeries::from_neumann_modes(&modes, 1e-12).unwrap();
        // tangential derivative of h on the circle has modes i k a_k
        let tangential: Vec<Complex64> = std::iter::once(Complex64::new(0.0, 0.0))
            .chain(
                series
                    .coefficients
                    .iter()
                    .enumerate()
                    .map(|(i, a)| a * Complex64::new(0.0, (i + 1) as f64)),
            )
            .collect();
        let normal = h_minus_half_squared(&modes);
        assert!((h_minus_half_squared(&tangential) - normal).abs() < 1e-10);
        assert!((normal - series.energy()).abs() < 1e-10);
        let lambda = DtNOperator;
        assert!(lambda.quadratic_form(&modes) >= 0.0);
        let applied = lambda.apply(&samples).unwrap();
        let expected: Vec<f64> = (0..n)
            .map(|m| {
                let t = 2.0 * PI * m as f64 / n as f64;
                2.0 * (2.0 * t).sin() + 2.7 * (9.0 * t).cos()
            })
            .collect();
        for (a, b) in applied.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn correction_of_constant_source() {
        let g = grid(64, 32, 1.0);
        let split = neumann_via_correction(&ScalarField::constant(&g, 1.0)).unwrap();
        assert!(split.h.max_abs() < 1e-8);
        let direct = solve_neumann_spectral(&ScalarField::constant(&g, 1.0)).unwrap();
        assert!(split.v.sub(&direct).unwrap().max_abs() < 1e-3);
    }
}
