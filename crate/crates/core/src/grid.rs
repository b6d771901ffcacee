//! Quadrature grids and sampled fields on the unit disc.
//!
//! Two grids are provided. [`PolarGrid`] is a tensor grid centred at the
//! origin (midpoint rule in `r²`, trapezoid rule in `θ`) that carries the
//! Fourier-in-angle solvers. [`ConcentrationGrid`] is polar around the
//! boundary point `−e₂` with dyadic radial grading down to `ε/8`; it resolves
//! the bubble spike for arbitrarily small `ε` at logarithmic cost.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::mobius::{Complex2, CONCENTRATION_POINT};

/// A polar cell `{pole + ρ e^{iθ} : ρ ∈ [ρ_lo, ρ_hi], θ ∈ [θ_lo, θ_hi]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarCell {
    pub pole: Complex2,
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

impl PolarCell {
    pub fn area(&self) -> f64 {
        0.5 * (self.rho_hi * self.rho_hi - self.rho_lo * self.rho_lo)
            * (self.theta_hi - self.theta_lo)
    }

    /// Equal-area rectangle aligned with the radial direction at the cell centroid.
    pub fn rectangle(&self) -> CellRect {
        let theta = 0.5 * (self.theta_lo + self.theta_hi);
        let (lo, hi) = (self.rho_lo, self.rho_hi);
        let rho = (2.0 / 3.0) * (hi * hi + hi * lo + lo * lo) / (hi + lo);
        let radial = self.rho_hi - self.rho_lo;
        let tangential = self.area() / radial;
        CellRect {
            center: self.pole + Complex2::from_polar(rho, theta),
            axis: Complex2::from_polar(1.0, theta),
            half_radial: 0.5 * radial,
            half_tangential: 0.5 * tangential,
        }
    }
}

impl PolarCell {
    /// Rectangles covering the cell; wedge-like cells (`ρ_hi > 2ρ_lo`) are cut
    /// into dyadic radial slices first.
    pub fn pieces(&self) -> Vec<CellRect> {
        let mut out = Vec::new();
        let mut hi = self.rho_hi;
        for _ in 0..8 {
            if hi <= 2.0 * self.rho_lo {
                break;
            }
            out.push(
                PolarCell {
                    rho_lo: 0.5 * hi,
                    rho_hi: hi,
                    ..*self
                }
                .rectangle(),
            );
            hi *= 0.5;
        }
        out.push(
            PolarCell {
                rho_hi: hi,
                ..*self
            }
            .rectangle(),
        );
        out
    }
}

/// Rotated rectangle used for analytic integration of the log kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRect {
    pub center: Complex2,
    /// unit vector along the first (radial) side
    pub axis: Complex2,
    pub half_radial: f64,
    pub half_tangential: f64,
}

impl CellRect {
    pub fn half_diagonal(&self) -> f64 {
        self.half_radial.hypot(self.half_tangential)
    }
}

/// A node set with positive quadrature weights and a polar cell per node.
pub trait Quadrature: Send + Sync + Clone + fmt::Debug {
    fn points(&self) -> &[Complex2];
    fn weights(&self) -> &[f64];
    fn cell(&self, index: usize) -> PolarCell;

    fn len(&self) -> usize {
        self.weights().len()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn total_area(&self) -> f64 {
        self.weights().iter().sum()
    }
}

/// Tensor grid on the disc.
///
/// Radial cells are uniform in `s = 1 − (1 − r²)^{1/(1+grading)}`, so a positive
/// grading clusters rings toward `r = 1` (and hence toward `−e₂`) while keeping the
/// angular direction uniform for the FFT.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    n_r: usize,
    n_theta: usize,
    grading: f64,
    edges: Vec<f64>,
    radii: Vec<f64>,
    angles: Vec<f64>,
    points: Vec<Complex2>,
    weights: Vec<f64>,
}

impl PolarGrid {
    pub fn new(n_r: usize, n_theta: usize, grading: f64) -> Result<Self> {
        if n_r < 4 || n_theta < 4 {
            return Err(LabError::Grid(format!(
                "polar grid needs at least 4 nodes per direction, got {n_r} x {n_theta}"
            )));
        }
        if !(grading >= 0.0) || !grading.is_finite() {
            return Err(LabError::Grid(format!(
                "grading must be >= 0, got {grading}"
            )));
        }
        let q_edges: Vec<f64> = (0..=n_r)
            .map(|j| 1.0 - (1.0 - j as f64 / n_r as f64).powf(1.0 + grading))
            .collect();
        let edges: Vec<f64> = q_edges.iter().map(|q| q.sqrt()).collect();
        let radii: Vec<f64> = q_edges
            .windows(2)
            .map(|w| (0.5 * (w[0] + w[1])).sqrt())
            .collect();
        let dtheta = 2.0 * PI / n_theta as f64;
        let angles: Vec<f64> = (0..n_theta).map(|m| m as f64 * dtheta).collect();
        let mut points = Vec::with_capacity(n_r * n_theta);
        let mut weights = Vec::with_capacity(n_r * n_theta);
        for (j, &r) in radii.iter().enumerate() {
            let w = 0.5 * (q_edges[j + 1] - q_edges[j]) * dtheta;
            for &theta in &angles {
                points.push(Complex2::from_polar(r, theta));
                weights.push(w);
            }
        }
        Ok(Self {
            n_r,
            n_theta,
            grading,
            edges,
            radii,
            angles,
            points,
            weights,
        })
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    /// Node radii, increasing.
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Radial cell edges `0 = e₀ < … < e_{n_r} = 1`.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    /// Flat index of ring `j`, angle `m`.
    pub fn index(&self, j: usize, m: usize) -> usize {
        j * self.n_theta + m
    }

    /// Area of ring `j` divided by `2π`, i.e. `∫_{e_j}^{e_{j+1}} r dr`.
    pub fn ring_measure(&self, j: usize) -> f64 {
        0.5 * (self.edges[j + 1].powi(2) - self.edges[j].powi(2))
    }
}

impl Quadrature for PolarGrid {
    fn points(&self) -> &[Complex2] {
        &self.points
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn cell(&self, index: usize) -> PolarCell {
        let j = index / self.n_theta;
        let m = index % self.n_theta;
        let half = 0.5 * self.dtheta();
        PolarCell {
            pole: Complex2::new(0.0, 0.0),
            rho_lo: self.edges[j],
            rho_hi: self.edges[j + 1],
            theta_lo: self.angles[m] - half,
            theta_hi: self.angles[m] + half,
        }
    }
}

/// Region covered by a [`ConcentrationGrid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extent {
    /// The unit disc, i.e. `ρ < 2 sin θ` around the pole.
    Disc,
    /// The half-disc `{|z| < radius, Im z > 0}` of the upper half-plane.
    HalfPlane { radius: f64 },
}

/// Polar grid around `−e₂` covering the upper half-plane side of the pole.
#[derive(Debug, Clone)]
pub struct ConcentrationGrid {
    epsilon: f64,
    extent: Extent,
    n_theta: usize,
    per_octave: usize,
    ladder: Vec<f64>,
    cells: Vec<PolarCell>,
    points: Vec<Complex2>,
    weights: Vec<f64>,
}

impl ConcentrationGrid {
    /// Builds the grid for scale `epsilon` with `n_theta` angular cells on `(0, π)`
    /// and `per_octave` radial cells per doubling beyond `ε/8`.
    pub fn new(epsilon: f64, n_theta: usize, per_octave: usize, extent: Extent) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(LabError::Grid(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if n_theta < 4 || per_octave < 1 {
            return Err(LabError::Grid(format!(
                "concentration grid needs n_theta >= 4 and per_octave >= 1, got {n_theta}, {per_octave}"
            )));
        }
        let rho_max = match extent {
            Extent::Disc => 2.0,
            Extent::HalfPlane { radius } => {
                if !(radius > epsilon / 8.0) {
                    return Err(LabError::Grid(format!(
                        "half-plane radius {radius} must exceed epsilon/8"
                    )));
                }
                radius
            }
        };
        let core = epsilon / 8.0;
        let mut ladder: Vec<f64> = (0..=4).map(|j| core * j as f64 / 4.0).collect();
        let ratio = 2f64.powf(1.0 / per_octave as f64);
        let mut edge = core;
        while edge < rho_max {
            edge = (edge * ratio).min(rho_max);
            ladder.push(edge);
        }
        if core >= rho_max {
            ladder.retain(|&e| e <= rho_max);
            ladder.push(rho_max);
        }

        let dtheta = PI / n_theta as f64;
        let mut cells = Vec::new();
        for m in 0..n_theta {
            let theta_lo = m as f64 * dtheta;
            let theta_hi = theta_lo + dtheta;
            let theta = theta_lo + 0.5 * dtheta;
            let limit = match extent {
                Extent::Disc => 2.0 * theta.sin(),
                Extent::HalfPlane { radius } => radius,
            };
            for w in ladder.windows(2) {
                if w[0] >= limit {
                    break;
                }
                cells.push(PolarCell {
                    pole: CONCENTRATION_POINT,
                    rho_lo: w[0],
                    rho_hi: w[1].min(limit),
                    theta_lo,
                    theta_hi,
                });
            }
        }
        let points = cells
            .iter()
            .map(|c| {
                let rho = (0.5 * (c.rho_lo * c.rho_lo + c.rho_hi * c.rho_hi)).sqrt();
                c.pole + Complex2::from_polar(rho, 0.5 * (c.theta_lo + c.theta_hi))
            })
            .collect();
        let weights = cells.iter().map(PolarCell::area).collect();
        Ok(Self {
            epsilon,
            extent,
            n_theta,
            per_octave,
            ladder,
            cells,
            points,
            weights,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn per_octave(&self) -> usize {
        self.per_octave
    }

    /// Shared radial edges before clipping.
    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    /// Half-plane coordinates `z = w + i` of the nodes.
    pub fn half_plane_points(&self) -> Vec<Complex2> {
        self.points
            .iter()
            .map(|&w| w + Complex2::new(0.0, 1.0))
            .collect()
    }
}

impl Quadrature for ConcentrationGrid {
    fn points(&self) -> &[Complex2] {
        &self.points
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn cell(&self, index: usize) -> PolarCell {
        self.cells[index]
    }
}

/// Values sampled at the nodes of a grid.
#[derive(Debug)]
pub struct ScalarField<G> {
    grid: Arc<G>,
    values: Vec<f64>,
}

impl<G> Clone for ScalarField<G> {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.clone(),
        }
    }
}

impl<G> ScalarField<G> {
    pub(crate) fn from_values_unchecked(grid: Arc<G>, values: Vec<f64>) -> Self {
        Self { grid, values }
    }

    pub fn grid(&self) -> &G {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<G> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values_unchecked(
            self.grid.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(LabError::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self::from_values_unchecked(self.grid.clone(), values))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + c·other`
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + c * b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl<G: Quadrature> ScalarField<G> {
    /// Wraps `values`; fails when the count differs from the node count or a value is not finite.
    pub fn new(grid: Arc<G>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::Grid(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::Grid(format!("non-finite value at node {i}")));
        }
        Ok(Self::from_values_unchecked(grid, values))
    }

    pub fn zeros(grid: &Arc<G>) -> Self {
        Self::from_values_unchecked(grid.clone(), vec![0.0; grid.len()])
    }

    pub fn constant(grid: &Arc<G>, c: f64) -> Self {
        Self::from_values_unchecked(grid.clone(), vec![c; grid.len()])
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &Arc<G>, f: impl Fn(Complex2) -> f64) -> Self {
        let values = grid.points().iter().map(|&w| f(w)).collect();
        Self::from_values_unchecked(grid.clone(), values)
    }

    /// Quadrature integral `Σ value·weight`.
    pub fn integrate(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v * w)
            .sum()
    }

    /// `∫ self · other`, failing on a grid mismatch.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(LabError::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.grid.weights())
            .map(|((a, b), w)| a * b * w)
            .sum())
    }

    pub fn mean(&self) -> f64 {
        self.integrate() / self.grid.total_area()
    }

    /// Same field with its quadrature mean removed.
    pub fn zero_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    /// Writes a snapshot with columns `r,theta,value` in disc polar coordinates.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,theta,value")?;
        for (w, v) in self.grid.points().iter().zip(&self.values) {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", w.norm(), w.arg(), v)?;
        }
        Ok(())
    }
}

/// Two-vectors sampled at the nodes of a grid.
#[derive(Debug)]
pub struct GradField<G> {
    grid: Arc<G>,
    vectors: Vec<[f64; 2]>,
}

impl<G> Clone for GradField<G> {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            vectors: self.vectors.clone(),
        }
    }
}

impl<G> GradField<G> {
    pub(crate) fn from_vectors_unchecked(grid: Arc<G>, vectors: Vec<[f64; 2]>) -> Self {
        Self { grid, vectors }
    }

    pub fn grid_arc(&self) -> &Arc<G> {
        &self.grid
    }

    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    /// Pointwise Euclidean length.
    pub fn magnitude(&self) -> ScalarField<G> {
        let values = self.vectors.iter().map(|v| v[0].hypot(v[1])).collect();
        ScalarField::from_values_unchecked(self.grid.clone(), values)
    }

    pub fn scale(&self, c: f64) -> Self {
        let vectors = self.vectors.iter().map(|v| [c * v[0], c * v[1]]).collect();
        Self::from_vectors_unchecked(self.grid.clone(), vectors)
    }

    /// `self + c·other`
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        if !Arc::ptr_eq(&self.grid, &other.grid) {
            return Err(LabError::GridMismatch);
        }
        let vectors = self
            .vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| [a[0] + c * b[0], a[1] + c * b[1]])
            .collect();
        Ok(Self::from_vectors_unchecked(self.grid.clone(), vectors))
    }

    /// Pointwise `u × v = u₁v₂ − u₂v₁`, the Jacobian of a field pair.
    pub fn wedge(&self, other: &Self) -> Result<ScalarField<G>> {
        if !Arc::ptr_eq(&self.grid, &other.grid) {
            return Err(LabError::GridMismatch);
        }
        let values = self
            .vectors
            .iter()
            .zip(&other.vectors)
            .map(|(a, b)| a[0] * b[1] - a[1] * b[0])
            .collect();
        Ok(ScalarField::from_values_unchecked(
            self.grid.clone(),
            values,
        ))
    }
}

impl<G: Quadrature> GradField<G> {
    pub fn new(grid: Arc<G>, vectors: Vec<[f64; 2]>) -> Result<Self> {
        if vectors.len() != grid.len() {
            return Err(LabError::Grid(format!(
                "gradient field has {} vectors for {} nodes",
                vectors.len(),
                grid.len()
            )));
        }
        Ok(Self::from_vectors_unchecked(grid, vectors))
    }

    pub fn from_fn(grid: &Arc<G>, f: impl Fn(Complex2) -> [f64; 2]) -> Self {
        let vectors = grid.points().iter().map(|&w| f(w)).collect();
        Self::from_vectors_unchecked(grid.clone(), vectors)
    }

    /// `‖v‖_{L²}`
    pub fn l2(&self) -> f64 {
        self.vectors
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| (v[0] * v[0] + v[1] * v[1]) * w)
            .sum::<f64>()
            .sqrt()
    }

    /// `∫ self · other`
    pub fn dot(&self, other: &Self) -> Result<f64> {
        if !Arc::ptr_eq(&self.grid, &other.grid) {
            return Err(LabError::GridMismatch);
        }
        Ok(self
            .vectors
            .iter()
            .zip(&other.vectors)
            .zip(self.grid.weights())
            .map(|((a, b), w)| (a[0] * b[0] + a[1] * b[1]) * w)
            .sum())
    }
}

/// Boundary samples on the uniform angles of a [`PolarGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub angles: Vec<f64>,
    pub values: Vec<f64>,
    /// trapezoid weight `2π/n`
    pub weight: f64,
}

impl BoundaryTrace {
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.weight
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

fn lagrange3(x: [f64; 3], y: [f64; 3], at: f64) -> f64 {
    let l0 = (at - x[1]) * (at - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]));
    let l1 = (at - x[0]) * (at - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]));
    let l2 = (at - x[0]) * (at - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
    l0 * y[0] + l1 * y[1] + l2 * y[2]
}

/// Derivative at `at` of the quadratic through three points.
fn lagrange3_slope(x: [f64; 3], y: [f64; 3], at: f64) -> f64 {
    let d0 = (2.0 * at - x[1] - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]));
    let d1 = (2.0 * at - x[0] - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]));
    let d2 = (2.0 * at - x[0] - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
    d0 * y[0] + d1 * y[1] + d2 * y[2]
}

impl ScalarField<PolarGrid> {
    /// Value at ring `j`, angle `m`.
    pub fn at(&self, j: usize, m: usize) -> f64 {
        self.values[self.grid.index(j, m)]
    }

    /// Trace on `r = 1` by quadratic extrapolation from the outermost three rings.
    pub fn boundary_trace(&self) -> BoundaryTrace {
        let g = &*self.grid;
        let n = g.n_r();
        let x = [g.radii()[n - 3], g.radii()[n - 2], g.radii()[n - 1]];
        let values = (0..g.n_theta())
            .map(|m| {
                lagrange3(
                    x,
                    [self.at(n - 3, m), self.at(n - 2, m), self.at(n - 1, m)],
                    1.0,
                )
            })
            .collect();
        BoundaryTrace {
            angles: g.angles().to_vec(),
            values,
            weight: g.dtheta(),
        }
    }

    /// Finite-difference gradient: centred in `θ`, three-point in `r`, mapped to Cartesian.
    pub fn gradient_fd(&self) -> GradField<PolarGrid> {
        let g = &*self.grid;
        let (n, nt) = (g.n_r(), g.n_theta());
        let r = g.radii();
        let dtheta = g.dtheta();
        let mut vectors = vec![[0.0; 2]; g.len()];
        for j in 0..n {
            let stencil = if j == 0 {
                [0, 1, 2]
            } else if j == n - 1 {
                [n - 3, n - 2, n - 1]
            } else {
                [j - 1, j, j + 1]
            };
            let x = [r[stencil[0]], r[stencil[1]], r[stencil[2]]];
            for m in 0..nt {
                let y = [
                    self.at(stencil[0], m),
                    self.at(stencil[1], m),
                    self.at(stencil[2], m),
                ];
                let d_r = lagrange3_slope(x, y, r[j]);
                let up = self.at(j, (m + 1) % nt);
                let down = self.at(j, (m + nt - 1) % nt);
                let d_theta = (up - down) / (2.0 * dtheta);
                let (s, c) = g.angles()[m].sin_cos();
                vectors[g.index(j, m)] =
                    [c * d_r - s * d_theta / r[j], s * d_r + c * d_theta / r[j]];
            }
        }
        GradField::from_vectors_unchecked(self.grid.clone(), vectors)
    }
}
