//! Green functions of the disc and the solves built on them.
//!
//! With `Q(x, y) = |x|²|y|² − 2x·y + 1 = |y|²|x − y*|²`,
//!
//! ```text
//! G_D(x, y) = (1/2π)[ln|x − y| − ½ ln Q(x, y)]
//! G_N(x, y) = (1/2π)[ln|x − y| + ½ ln Q(x, y)] − |x|²/4 − |y|²/4
//! ```
//!
//! `Q` never divides by `|y|`, so `y = 0` needs no special case.
//!
//! Two solve paths exist. On a [`PolarGrid`] the kernels are expanded in
//! angular modes and integrated exactly over each radial cell against the
//! cell-constant mode profile of `f`. On any [`Quadrature`] grid
//! [`dirichlet_potential`] evaluates the kernel pointwise, with the log
//! singularities near the target and near its reflection integrated
//! analytically over the cell.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::grid::{CellRect, GradField, PolarGrid, Quadrature, ScalarField};
use crate::mobius::Complex2;
use crate::norms::DirichletSolve;
use crate::spectral::{
    default_mode_cap, fourier_modes, synthesize, HarmonicSeries, ModalField, ModeProfile,
};

/// Which Green function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

fn reflection_quadratic(x: Complex2, y: Complex2) -> f64 {
    x.norm_sqr() * y.norm_sqr() - 2.0 * (x.re * y.re + x.im * y.im) + 1.0
}

fn check_distinct(x: Complex2, y: Complex2) -> Result<()> {
    if (x - y).norm() == 0.0 {
        return Err(LabError::Singular(format!(
            "Green function evaluated on the diagonal x = y = {x}"
        )));
    }
    Ok(())
}

/// Dirichlet Green function; vanishes for `|x| = 1`.
pub fn green_dirichlet(x: Complex2, y: Complex2) -> Result<f64> {
    check_distinct(x, y)?;
    Ok(((x - y).norm().ln() - 0.5 * reflection_quadratic(x, y).ln()) / (2.0 * PI))
}

/// Neumann Green function.
pub fn green_neumann(x: Complex2, y: Complex2) -> Result<f64> {
    check_distinct(x, y)?;
    Ok(
        ((x - y).norm().ln() + 0.5 * reflection_quadratic(x, y).ln()) / (2.0 * PI)
            - 0.25 * x.norm_sqr()
            - 0.25 * y.norm_sqr(),
    )
}

fn corner_primitive(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    if r2 == 0.0 {
        return 0.0;
    }
    let mut v = x * y * (r2.ln() - 3.0);
    if x != 0.0 {
        v += x * x * (y / x).atan();
    }
    if y != 0.0 {
        v += y * y * (x / y).atan();
    }
    0.5 * v
}

/// `∫₀^t ln√(s² + τ²) dτ`
fn line_primitive(s: f64, t: f64) -> f64 {
    let r2 = s * s + t * t;
    if r2 == 0.0 {
        return 0.0;
    }
    let mut v = 0.5 * t * r2.ln() - t;
    if s != 0.0 {
        v += s * (t / s).atan();
    }
    v
}

/// `∫_{[−a,a]×[−b,b]} ln|d − (s, t)| ds dt` and its gradient with respect to `d`.
pub fn log_rectangle(a: f64, b: f64, d: [f64; 2]) -> (f64, [f64; 2]) {
    let (x1, x2) = (d[0] - a, d[0] + a);
    let (y1, y2) = (d[1] - b, d[1] + b);
    let value = corner_primitive(x2, y2) - corner_primitive(x1, y2) - corner_primitive(x2, y1)
        + corner_primitive(x1, y1);
    let gx = line_primitive(x2, y2) - line_primitive(x2, y1) - line_primitive(x1, y2)
        + line_primitive(x1, y1);
    let gy = line_primitive(y2, x2) - line_primitive(y2, x1) - line_primitive(y1, x2)
        + line_primitive(y1, x1);
    (value, [gx, gy])
}

/// `∫_rect ln|x − target| dA(x)` with gradient in the target.
pub fn log_cell_integral(rect: &CellRect, target: Complex2) -> (f64, [f64; 2]) {
    let local = (target - rect.center) * rect.axis.conj();
    let (value, g) = log_rectangle(rect.half_radial, rect.half_tangential, [local.re, local.im]);
    let world = Complex2::new(g[0], g[1]) * rect.axis;
    (value, [world.re, world.im])
}

/// `∫_cell ln|x − target| dA(x)` summed over the pieces of a polar cell.
fn log_pieces_integral(pieces: &[CellRect], target: Complex2) -> (f64, [f64; 2]) {
    pieces.iter().fold((0.0, [0.0; 2]), |(v, g), rect| {
        let (pv, pg) = log_cell_integral(rect, target);
        (v + pv, [g[0] + pg[0], g[1] + pg[1]])
    })
}

/// Result of a pointwise potential evaluation.
#[derive(Debug, Clone)]
pub struct Potential<G> {
    pub values: ScalarField<G>,
    pub gradient: GradField<G>,
}

/// Cells closer than this many diameters are integrated analytically.
const NEAR_DIAMETERS: f64 = 2.0;

/// `u(y) = −∫ G_D(x, y) f(x) dA(x)` and `∇u` at every node of the grid of `f`.
pub fn dirichlet_potential<G: Quadrature>(f: &ScalarField<G>) -> Potential<G> {
    let grid = f.grid_arc().clone();
    let points = grid.points();
    let weights = grid.weights();
    let rects: Vec<CellRect> = (0..grid.len()).map(|j| grid.cell(j).rectangle()).collect();
    let pieces: Vec<Vec<CellRect>> = (0..grid.len()).map(|j| grid.cell(j).pieces()).collect();
    let sources: Vec<usize> = (0..grid.len()).filter(|&j| f.values()[j] != 0.0).collect();
    let near2: Vec<f64> = rects
        .iter()
        .map(|r| (NEAR_DIAMETERS * 2.0 * r.half_diagonal()).powi(2))
        .collect();

    let results: Vec<(f64, [f64; 2])> = points
        .par_iter()
        .enumerate()
        .map(|(i, &y)| {
            let y2 = y.norm_sqr();
            let y_star = if y2 > 0.25 { Some(y / y2) } else { None };
            let mut value = 0.0;
            let mut grad = [0.0; 2];
            for &j in &sources {
                let x = points[j];
                let fw = f.values()[j];
                let d = y - x;
                let d2 = d.norm_sqr();
                // free-space part ln|x − y|
                if j == i || d2 < near2[j] {
                    let (v, g) = log_pieces_integral(&pieces[j], y);
                    value += fw * v;
                    grad[0] += fw * g[0];
                    grad[1] += fw * g[1];
                } else {
                    let w = fw * weights[j];
                    value += w * 0.5 * d2.ln();
                    grad[0] += w * d.re / d2;
                    grad[1] += w * d.im / d2;
                }
                // reflected part −½ ln Q(x, y) = −ln|y| − ln|x − y*|
                let near_image = y_star.is_some_and(|ys| (x - ys).norm_sqr() < near2[j]);
                if near_image {
                    let ys = y_star.unwrap_or_default();
                    let area = weights[j];
                    let (v, g) = log_pieces_integral(&pieces[j], ys);
                    value -= fw * (area * 0.5 * y2.ln() + v);
                    // chain rule through y* = y/|y|²: J = (I|y|² − 2yyᵀ)/|y|⁴
                    let inv4 = 1.0 / (y2 * y2);
                    let j11 = (y2 - 2.0 * y.re * y.re) * inv4;
                    let j12 = -2.0 * y.re * y.im * inv4;
                    let j22 = (y2 - 2.0 * y.im * y.im) * inv4;
                    grad[0] -= fw * (area * y.re / y2 + j11 * g[0] + j12 * g[1]);
                    grad[1] -= fw * (area * y.im / y2 + j12 * g[0] + j22 * g[1]);
                } else {
                    let w = fw * weights[j];
                    let x2 = x.norm_sqr();
                    let q = x2 * y2 - 2.0 * (x.re * y.re + x.im * y.im) + 1.0;
                    value -= w * 0.5 * q.ln();
                    grad[0] -= w * (x2 * y.re - x.re) / q;
                    grad[1] -= w * (x2 * y.im - x.im) / q;
                }
            }
            let scale = -1.0 / (2.0 * PI);
            (scale * value, [scale * grad[0], scale * grad[1]])
        })
        .collect();

    let (values, vectors): (Vec<f64>, Vec<[f64; 2]>) = results.into_iter().unzip();
    Potential {
        values: ScalarField::from_values_unchecked(grid.clone(), values),
        gradient: GradField::from_vectors_unchecked(grid, vectors),
    }
}

/// Pointwise Green quadrature as a [`DirichletSolve`] implementation.
#[derive(Debug, Clone, Copy, Default)]
pub struct GreenQuadrature;

impl<G: Quadrature> DirichletSolve<G> for GreenQuadrature {
    fn solve_dirichlet(&self, f: &ScalarField<G>) -> Result<ScalarField<G>> {
        Ok(dirichlet_potential(f).values)
    }
}

/// `∫_a^b r ln r dr`
fn r_log_r(a: f64, b: f64) -> f64 {
    let prim = |r: f64| {
        if r == 0.0 {
            0.0
        } else {
            0.5 * r * r * r.ln() - 0.25 * r * r
        }
    };
    prim(b) - prim(a)
}

/// `∫_a^b G̃_k(r, ρ) r dr` for the scaled modal kernel `G̃_k = [(r_</r_>)^m ∓ (rρ)^m]`
/// (`m ≥ 1`), or `ln r_>` for `m = 0`.
fn modal_cell_integral(m: usize, a: f64, b: f64, rho: f64, image_sign: f64) -> f64 {
    if m == 0 {
        let mut v = 0.0;
        if a < rho {
            let hi = b.min(rho);
            v += rho.ln() * 0.5 * (hi * hi - a * a);
        }
        if b > rho {
            v += r_log_r(a.max(rho), b);
        }
        return v;
    }
    let mi = m as i32;
    let mf = m as f64;
    let mut v = 0.0;
    if a < rho {
        let hi = b.min(rho);
        v += (hi * hi * (hi / rho).powi(mi) - a * a * (a / rho).powi(mi)) / (mf + 2.0);
    }
    if b > rho {
        let lo = a.max(rho);
        v += if m == 2 {
            rho * rho * (b / lo).ln()
        } else {
            (b * b * (rho / b).powi(mi) - lo * lo * (rho / lo).powi(mi)) / (2.0 - mf)
        };
    }
    v + image_sign * rho.powi(mi) * (b.powi(mi + 2) - a.powi(mi + 2)) / (mf + 2.0)
}

fn modal_green_apply(grid: &PolarGrid, modal: &ModalField, kind: BoundaryKind) -> ModalField {
    let n = grid.n_r();
    let (r, e) = (grid.radii(), grid.edges());
    let image_sign = match kind {
        BoundaryKind::Dirichlet => -1.0,
        BoundaryKind::Neumann => 1.0,
    };
    let modes = modal
        .modes
        .par_iter()
        .map(|p| {
            let m = p.k.unsigned_abs() as usize;
            let values = (0..n)
                .map(|i| {
                    let rho = r[i];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..n {
                        let fk = p.values[j];
                        if fk == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        let (a, b) = (e[j], e[j + 1]);
                        let mut w = modal_cell_integral(m, a, b, rho, image_sign);
                        if m == 0 {
                            w = -w;
                            if kind == BoundaryKind::Neumann {
                                w += 0.5
                                    * PI
                                    * ((b.powi(4) - a.powi(4)) / 4.0
                                        + rho * rho * (b * b - a * a) / 2.0);
                            }
                        } else {
                            w /= 2.0 * m as f64;
                        }
                        acc += fk * w;
                    }
                    acc
                })
                .collect();
            ModeProfile { k: p.k, values }
        })
        .collect();
    ModalField {
        n_theta: modal.n_theta,
        modes,
        aliasing: modal.aliasing,
    }
}

/// `u = −∫ G_D f` on a polar grid by modal product integration.
pub fn solve_dirichlet_green(f: &ScalarField<PolarGrid>) -> Result<ScalarField<PolarGrid>> {
    let grid = f.grid_arc().clone();
    let modal = fourier_modes(f, default_mode_cap(&grid))?;
    synthesize(
        &grid,
        &modal_green_apply(&grid, &modal, BoundaryKind::Dirichlet),
    )
}

/// Zero-mean Neumann solution with flux `g = −(1/2π)∫f`, from the representation
/// `v(y) = −∫G_N f − g∫_{∂D} G_N(·, y) + const`.
pub fn solve_neumann_green(f: &ScalarField<PolarGrid>) -> Result<ScalarField<PolarGrid>> {
    let grid = f.grid_arc().clone();
    let modal = fourier_modes(f, default_mode_cap(&grid))?;
    let mut applied = modal_green_apply(&grid, &modal, BoundaryKind::Neumann);
    let g = -f.integrate() / (2.0 * PI);
    for (value, rho) in applied.modes[0].values.iter_mut().zip(grid.radii()) {
        // ∫_{∂D} G_N(x, y) ds_x = −(π/2)(1 + |y|²)
        *value += g * 0.5 * PI * (1.0 + rho * rho);
    }
    Ok(synthesize(&grid, &applied)?.zero_mean())
}

/// Poisson moments `ĝ_k = −(1/2π) ∫ f x̄^k dA`, `k = 0..=k_max`.
///
/// These are the boundary Fourier coefficients of `∂_ν u` for the Dirichlet
/// solution `u` of `−Δu = f`.
pub fn poisson_moments<G: Quadrature>(f: &ScalarField<G>, k_max: usize) -> Vec<Complex64> {
    let points = f.grid().points();
    let weights = f.grid().weights();
    let chunk = 256;
    let partial: Vec<Vec<Complex64>> = (0..points.len())
        .collect::<Vec<_>>()
        .par_chunks(chunk)
        .map(|idx| {
            let mut acc = vec![Complex64::new(0.0, 0.0); k_max + 1];
            for &i in idx {
                let fw = f.values()[i] * weights[i];
                if fw == 0.0 {
                    continue;
                }
                let p = points[i].conj();
                let cutoff = fw.abs() * 1e-18;
                let mut power = Complex64::new(fw, 0.0);
                for slot in acc.iter_mut() {
                    *slot += power;
                    power *= p;
                    if power.norm_sqr() < cutoff * cutoff {
                        break;
                    }
                }
            }
            acc
        })
        .collect();
    let mut moments = vec![Complex64::new(0.0, 0.0); k_max + 1];
    for acc in partial {
        for (m, a) in moments.iter_mut().zip(acc) {
            *m += a;
        }
    }
    moments.iter().map(|m| m * (-1.0 / (2.0 * PI))).collect()
}

/// Neumann solution `u − h` on any grid: `u` is the dense Dirichlet potential,
/// `h` the zero-mean harmonic function carrying the mean-free part of `∂_ν u`.
///
/// The result has constant normal derivative `−(1/2π)∫f`.
#[derive(Debug, Clone)]
pub struct NeumannPotential<G> {
    pub dirichlet: Potential<G>,
    /// `ĝ_k` of `∂_ν u`, `k = 0..=k_max`
    pub flux: Vec<Complex64>,
    pub series: HarmonicSeries,
    /// `u − h`, not shifted to zero mean
    pub values: ScalarField<G>,
    pub gradient: GradField<G>,
}

impl<G: Quadrature> NeumannPotential<G> {
    pub fn zero_mean(&self) -> ScalarField<G> {
        self.values.zero_mean()
    }

    /// `∫|∇(u − h)|² = ∫ f u + ∫|∇h|²`, the cross term vanishing for `u ∈ H¹₀`.
    pub fn energy_identity(&self, f: &ScalarField<G>) -> Result<f64> {
        Ok(f.dot(&self.dirichlet.values)? + self.series.energy())
    }
}

pub fn neumann_potential<G: Quadrature>(
    f: &ScalarField<G>,
    k_max: usize,
) -> Result<NeumannPotential<G>> {
    let grid = f.grid_arc().clone();
    let dirichlet = dirichlet_potential(f);
    let flux = poisson_moments(f, k_max);
    let mut mean_free = flux.clone();
    mean_free[0] = Complex64::new(0.0, 0.0);
    let series = HarmonicSeries::from_neumann_modes(&mean_free, 0.0)?;
    let harmonic: Vec<(f64, [f64; 2])> = grid
        .points()
        .par_iter()
        .map(|&w| series.eval_with_grad(w))
        .collect();
    let values = dirichlet
        .values
        .values()
        .iter()
        .zip(&harmonic)
        .map(|(u, (h, _))| u - h)
        .collect();
    let gradient = dirichlet
        .gradient
        .vectors()
        .iter()
        .zip(&harmonic)
        .map(|(gu, (_, gh))| [gu[0] - gh[0], gu[1] - gh[1]])
        .collect();
    Ok(NeumannPotential {
        values: ScalarField::from_values_unchecked(grid.clone(), values),
        gradient: GradField::from_vectors_unchecked(grid, gradient),
        dirichlet,
        flux,
        series,
    })
}

/// Distributional normal derivative of a solution on `∂D`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFlux {
    pub angles: Vec<f64>,
    pub samples: Vec<f64>,
    /// `(1/2π)∫_{∂D} ∂_ν u`
    pub mean: f64,
    /// Fourier coefficients `0..=K` of the flux
    pub modes: Vec<Complex64>,
}

/// Flux of `u` (with `−Δu = f`) from the defining identity
/// `∫_{∂D} ∂_ν u ψ = ∫ ∇u·∇ψ − ∫ f ψ` tested with `ψ_k = x̄^k`.
///
/// Since `ψ_k` is harmonic, `∫∇u·∇ψ_k = 2π k û_k(1)` with `û_k(1)` the boundary
/// trace coefficient of `u`; it vanishes for Dirichlet solutions.
pub fn neumann_flux(
    u: &ScalarField<PolarGrid>,
    f: &ScalarField<PolarGrid>,
    k_max: usize,
) -> Result<BoundaryFlux> {
    if !u.same_grid(f) {
        return Err(LabError::GridMismatch);
    }
    let grid = u.grid();
    let trace = u.boundary_trace();
    let trace_modes = crate::spectral::boundary_modes(&trace.values, k_max)?;
    let moments = poisson_moments(f, k_max);
    let modes: Vec<Complex64> = moments
        .iter()
        .zip(&trace_modes)
        .enumerate()
        .map(|(k, (m, t))| m + t * k as f64)
        .collect();
    let samples = crate::spectral::boundary_synthesize(&modes, grid.n_theta());
    Ok(BoundaryFlux {
        angles: grid.angles().to_vec(),
        samples,
        mean: modes[0].re,
        modes,
    })
}

/// Residual of the representation formula at probe `y` for a test function `u`,
/// given `u`, `Δu` and `∂_ν u` in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentationResidual {
    /// `u(y) − ∫_D u − [∫ G_N Δu − ∫_{∂D} G_N ∂_ν u + ((1 − π)/2π)∫_{∂D} u]`
    pub corrected: f64,
    /// same without the boundary-average term
    pub printed: f64,
}

/// Evaluates both forms of the Neumann representation formula at `y`.
///
/// With `G_N` as above, `Δ_x G_N = δ_y − 1` and `∂_ν G_N = (1 − π)/2π` on the
/// circle, so Green's second identity carries an extra `((1 − π)/2π)∫_{∂D} u`.
pub fn representation_residual(
    grid: &Arc<PolarGrid>,
    y: Complex2,
    u: impl Fn(Complex2) -> f64,
    laplacian: impl Fn(Complex2) -> f64,
    normal: impl Fn(f64) -> f64,
    boundary_nodes: usize,
) -> Result<RepresentationResidual> {
    let lap = ScalarField::from_fn(grid, &laplacian);
    let interior_mean = ScalarField::from_fn(grid, &u).integrate();
    // G_N(·, y) Δu with the logarithmic part integrated analytically near y
    let mut volume = 0.0;
    for (j, (&x, &w)) in grid.points().iter().zip(grid.weights()).enumerate() {
        let l = lap.values()[j];
        let rect = grid.cell(j).rectangle();
        let near = (x - y).norm() < 2.0 * NEAR_DIAMETERS * rect.half_diagonal();
        let log_part = if near {
            log_pieces_integral(&grid.cell(j).pieces(), y).0
        } else {
            w * (x - y).norm().ln()
        };
        let rest = w
            * (0.5 * reflection_quadratic(x, y).ln() / (2.0 * PI)
                - 0.25 * x.norm_sqr()
                - 0.25 * y.norm_sqr());
        volume += l * (log_part / (2.0 * PI) + rest);
    }
    let dtheta = 2.0 * PI / boundary_nodes as f64;
    let mut flux_term = 0.0;
    let mut boundary_u = 0.0;
    for m in 0..boundary_nodes {
        let t = m as f64 * dtheta;
        let x = Complex2::from_polar(1.0, t);
        flux_term += green_neumann(x, y)? * normal(t) * dtheta;
        boundary_u += u(x) * dtheta;
    }
    let printed = u(y) - interior_mean - (volume - flux_term);
    let corrected = printed - (1.0 - PI) / (2.0 * PI) * boundary_u;
    Ok(RepresentationResidual { corrected, printed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_disc_point(rng: &mut impl Rng) -> Complex2 {
        let r = rng.gen::<f64>().sqrt() * 0.98;
        Complex2::from_polar(r, rng.gen::<f64>() * 2.0 * PI)
    }

    fn grid(n_r: usize, n_theta: usize, grading: f64) -> Arc<PolarGrid> {
        Arc::new(PolarGrid::new(n_r, n_theta, grading).unwrap())
    }

    #[test]
    fn dirichlet_kernel_vanishes_on_circle_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let y = random_disc_point(&mut rng);
            let x = Complex2::from_polar(1.0, rng.gen::<f64>() * 2.0 * PI);
            assert!(green_dirichlet(x, y).unwrap().abs() < 1e-12);
            let z = random_disc_point(&mut rng);
            assert!(
                (green_dirichlet(z, y).unwrap() - green_dirichlet(y, z).unwrap()).abs() < 1e-12
            );
            assert!((green_neumann(z, y).unwrap() - green_neumann(y, z).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn kernels_at_the_origin() {
        let y = Complex2::new(0.5, 0.0);
        let o = Complex2::new(0.0, 0.0);
        let expected = 0.5f64.ln() / (2.0 * PI);
        assert!((green_dirichlet(o, y).unwrap() - expected).abs() < 1e-15);
        assert!((green_dirichlet(y, o).unwrap() - expected).abs() < 1e-15);
        assert!((green_neumann(o, y).unwrap() - (expected - 1.0 / 16.0)).abs() < 1e-15);
        assert!(matches!(green_dirichlet(y, y), Err(LabError::Singular(_))));
        assert!(matches!(green_neumann(y, y), Err(LabError::Singular(_))));
    }

    #[test]
    fn neumann_kernel_has_constant_normal_derivative() {
        let y = Complex2::new(0.2, -0.3);
        let h = 1e-6;
        let flux: Vec<f64> = (0..32)
            .map(|m| {
                let x = Complex2::from_polar(1.0, m as f64 * PI / 16.0);
                (green_neumann(x * (1.0 + h), y).unwrap()
                    - green_neumann(x * (1.0 - h), y).unwrap())
                    / (2.0 * h)
            })
            .collect();
        let spread = flux.iter().cloned().fold(f64::MIN, f64::max)
            - flux.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-4, "spread {spread}");
        assert!((flux[0] - (1.0 - PI) / (2.0 * PI)).abs() < 1e-6);
    }

    #[test]
    fn rectangle_integral_matches_brute_force() {
        let (a, b) = (0.3, 0.1);
        for d in [[0.0, 0.0], [0.1, -0.05], [0.5, 0.2], [0.31, 0.0]] {
            let (value, grad) = log_rectangle(a, b, d);
            let n = 800;
            let mut brute = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let s = -a + (i as f64 + 0.5) * 2.0 * a / n as f64;
                    let t = -b + (j as f64 + 0.5) * 2.0 * b / n as f64;
                    brute += ((d[0] - s).powi(2) + (d[1] - t).powi(2)).sqrt().ln();
                }
            }
            brute *= 4.0 * a * b / (n * n) as f64;
            assert!(
                (value - brute).abs() < 1e-4,
                "d = {d:?}: {value} vs {brute}"
            );
            let h = 1e-6;
            let fx = (log_rectangle(a, b, [d[0] + h, d[1]]).0
                - log_rectangle(a, b, [d[0] - h, d[1]]).0)
                / (2.0 * h);
            let fy = (log_rectangle(a, b, [d[0], d[1] + h]).0
                - log_rectangle(a, b, [d[0], d[1] - h]).0)
                / (2.0 * h);
            assert!((grad[0] - fx).abs() < 1e-6 && (grad[1] - fy).abs() < 1e-6);
        }
    }

    #[test]
    fn modal_dirichlet_constant_source() {
        let g = grid(64, 32, 1.0);
        let u = solve_dirichlet_green(&ScalarField::constant(&g, 1.0)).unwrap();
        for (w, v) in g.points().iter().zip(u.values()) {
            assert!((v - (1.0 - w.norm_sqr()) / 4.0).abs() < 1e-10);
        }
        assert_eq!(
            solve_dirichlet_green(&ScalarField::zeros(&g))
                .unwrap()
                .max_abs(),
            0.0
        );
    }

    #[test]
    fn modal_dirichlet_manufactured_mode() {
        let g = grid(200, 16, 0.0);
        let source = ScalarField::from_fn(&g, |w| 16.0 * w.norm().powi(3) * (3.0 * w.arg()).cos());
        let u = solve_dirichlet_green(&source).unwrap();
        for (w, v) in g.points().iter().zip(u.values()) {
            let r = w.norm();
            assert!((v - r.powi(3) * (1.0 - r * r) * (3.0 * w.arg()).cos()).abs() < 1e-4);
        }
    }

    #[test]
    fn modal_neumann_constant_and_odd_sources() {
        let g = grid(64, 64, 1.0);
        let c = 3.0;
        let v = solve_neumann_green(&ScalarField::constant(&g, c)).unwrap();
        for (w, val) in g.points().iter().zip(v.values()) {
            assert!((val - (-c * w.norm_sqr() / 4.0 + c / 8.0)).abs() < 1e-6);
        }
        assert_eq!(
            solve_neumann_green(&ScalarField::zeros(&g))
                .unwrap()
                .max_abs(),
            0.0
        );
        let odd = ScalarField::from_fn(&g, |w| w.re * (-2.0 * w.norm_sqr()).exp());
        let v = solve_neumann_green(&odd).unwrap();
        let nt = g.n_theta();
        for j in 0..g.n_r() {
            for m in 0..nt {
                // θ ↦ π − θ maps index m to nt/2 − m
                let mirror = (nt / 2 + nt - m) % nt;
                assert!((v.at(j, m) + v.at(j, mirror)).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn flux_of_quadratic_solution() {
        let g = grid(64, 64, 1.0);
        let u = ScalarField::from_fn(&g, |w| (1.0 - w.norm_sqr()) / 4.0);
        let flux = neumann_flux(&u, &ScalarField::constant(&g, 1.0), 31).unwrap();
        assert!((flux.mean + 0.5).abs() < 1e-10);
        assert!(flux.samples.iter().all(|s| (s + 0.5).abs() < 1e-10));
        let zero = neumann_flux(&ScalarField::zeros(&g), &ScalarField::zeros(&g), 31).unwrap();
        assert!(zero.samples.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn flux_of_manufactured_modes() {
        let g = grid(128, 64, 1.0);
        for k in 1..=4i32 {
            let u = ScalarField::from_fn(&g, |w| {
                let r = w.norm();
                r.powi(k) * (1.0 - r * r) * (k as f64 * w.arg()).cos()
            });
            let f = ScalarField::from_fn(&g, |w| {
                4.0 * (k as f64 + 1.0) * w.norm().powi(k) * (k as f64 * w.arg()).cos()
            });
            let flux = neumann_flux(&u, &f, 31).unwrap();
            // ∂_r u(1) = −2 cos kθ, so ĝ_k = −1
            assert!(
                (flux.modes[k as usize] - Complex64::new(-1.0, 0.0)).norm() < 1e-3,
                "k = {k}"
            );
        }
    }

    #[test]
    fn dense_potential_matches_closed_form() {
        let g = grid(48, 96, 0.5);
        let pot = dirichlet_potential(&ScalarField::constant(&g, 1.0));
        for ((w, v), grad) in g
            .points()
            .iter()
            .zip(pot.values.values())
            .zip(pot.gradient.vectors())
        {
            assert!((v - (1.0 - w.norm_sqr()) / 4.0).abs() < 2e-3, "at {w}: {v}");
            assert!(
                (grad[0] + w.re / 2.0).abs() < 2e-3 && (grad[1] + w.im / 2.0).abs() < 2e-3,
                "at {w}: {grad:?}"
            );
        }
    }

    #[test]
    fn neumann_potential_of_constant_source() {
        let g = grid(48, 96, 0.5);
        let f = ScalarField::constant(&g, 1.0);
        let sol = neumann_potential(&f, 32).unwrap();
        // ∂_ν u = −1/2 is already constant, so h = 0 and u − mean = −r²/4 + 1/8
        assert!(sol.series.energy() < 1e-20);
        let v = sol.zero_mean();
        for (w, value) in g.points().iter().zip(v.values()) {
            assert!((value - (0.125 - 0.25 * w.norm_sqr())).abs() < 2e-3);
        }
    }

    #[test]
    fn neumann_potential_energy_identity() {
        let g = grid(64, 128, 0.5);
        let f = ScalarField::from_fn(&g, |w| 1.0 + 3.0 * w.re + w.im * w.im);
        let sol = neumann_potential(&f, 40).unwrap();
        let numeric = sol.gradient.dot(&sol.gradient).unwrap();
        let identity = sol.energy_identity(&f).unwrap();
        assert!(
            (numeric / identity - 1.0).abs() < 1e-2,
            "{numeric} vs {identity}"
        );
        // matches the modal Neumann solve
        let modal = solve_neumann_green(&f).unwrap();
        let diff = sol.zero_mean().sub(&modal).unwrap().max_abs();
        assert!(diff < 5e-3, "{diff}");
    }

    #[test]
    fn representation_formula_for_polynomials() {
        let g = grid(160, 256, 0.0);
        let probes = [
            Complex2::new(0.0, 0.0),
            Complex2::new(0.3, 0.1),
            Complex2::new(-0.5, 0.4),
            Complex2::new(0.1, -0.7),
            Complex2::new(0.6, 0.6),
        ];
        // u = x²y + y⁴: Δu = 2y + 12y², ∂_ν u = x ∂_x u + y ∂_y u on the circle
        let u = |w: Complex2| w.re * w.re * w.im + w.im.powi(4);
        let lap = |w: Complex2| 2.0 * w.im + 12.0 * w.im * w.im;
        let normal = |t: f64| {
            let (s, c) = t.sin_cos();
            c * (2.0 * c * s) + s * (c * c + 4.0 * s.powi(3))
        };
        for y in probes {
            let res = representation_residual(&g, y, u, lap, normal, 2048).unwrap();
            assert!(res.corrected.abs() < 1e-3, "probe {y}: {res:?}");
        }
    }
}
