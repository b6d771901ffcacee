//! ε sweeps over the Dirichlet, Neumann and Robin problems driven by the bubble Jacobian.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use wente_core::fem::{mesh_disc_sized, solve_robin, RobinCoeffs, RobinProblem, Sizing, TriMesh};
use wente_core::green::{
    dirichlet_potential, neumann_potential, solve_dirichlet_green, GreenQuadrature,
};
use wente_core::mobius::{bubble_at, bubble_fields, jacobian_density, mobius_derivative_modulus};
use wente_core::norms::{hminus1, lorentz21, lp_norm};
use wente_core::spectral::{relative_h1_error, solve_dirichlet_spectral, Closure};
use wente_core::{
    BubbleSpec, Complex2, ConcentrationGrid, Extent, LabError, PolarGrid, ScalarField,
};

use crate::config::{ConfigError, LabConfig};
use crate::csv::fmt_f64;

/// Column order of the sweep CSV.
pub const SWEEP_COLUMNS: [&str; 20] = [
    "epsilon",
    "alpha",
    "beta",
    "gamma",
    "grad_V_l2",
    "grad_V_l21",
    "mprime_l21",
    "f_l1",
    "f_hminus1",
    "dirichlet_u_linf",
    "dirichlet_grad_l2",
    "dirichlet_grad_l15",
    "neumann_v_linf",
    "neumann_grad_l2",
    "neumann_grad_l15",
    "robin_grad_l2",
    "cross_solver_residual",
    "wente_ratio",
    "cross_solver_flag",
    "status",
];

/// Per-ε quantities shared by every coefficient set.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonData {
    pub epsilon: f64,
    pub grad_v_l2: f64,
    pub grad_v_l21: f64,
    pub mprime_l21: f64,
    pub f_l1: f64,
    pub f_hminus1: f64,
    pub dirichlet_u_linf: f64,
    pub dirichlet_grad_l2: f64,
    /// `‖Du‖_{L^{3/2}}`
    pub dirichlet_grad_l15: f64,
    pub neumann_v_linf: f64,
    pub neumann_grad_l2: f64,
    pub neumann_grad_l15: f64,
    pub cross_solver_residual: f64,
}

impl EpsilonData {
    fn failed(epsilon: f64) -> Self {
        let nan = f64::NAN;
        Self {
            epsilon,
            grad_v_l2: nan,
            grad_v_l21: nan,
            mprime_l21: nan,
            f_l1: nan,
            f_hminus1: nan,
            dirichlet_u_linf: nan,
            dirichlet_grad_l2: nan,
            dirichlet_grad_l15: nan,
            neumann_v_linf: nan,
            neumann_grad_l2: nan,
            neumann_grad_l15: nan,
            cross_solver_residual: nan,
        }
    }

    /// `(‖u‖_∞ + ‖∇u‖₂)/‖∇V‖₂²`
    pub fn wente_ratio(&self) -> f64 {
        (self.dirichlet_u_linf + self.dirichlet_grad_l2) / (self.grad_v_l2 * self.grad_v_l2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub data: EpsilonData,
    pub coeffs: (f64, f64, f64),
    pub robin_grad_l2: f64,
    /// `ok`, or the first solver failure of the row
    pub status: String,
    pub cross_solver_flag: bool,
}

impl SweepRow {
    pub fn fields(&self) -> Vec<String> {
        let d = &self.data;
        let mut out: Vec<String> = [
            d.epsilon,
            self.coeffs.0,
            self.coeffs.1,
            self.coeffs.2,
            d.grad_v_l2,
            d.grad_v_l21,
            d.mprime_l21,
            d.f_l1,
            d.f_hminus1,
            d.dirichlet_u_linf,
            d.dirichlet_grad_l2,
            d.dirichlet_grad_l15,
            d.neumann_v_linf,
            d.neumann_grad_l2,
            d.neumann_grad_l15,
            self.robin_grad_l2,
            d.cross_solver_residual,
            d.wente_ratio(),
        ]
        .iter()
        .map(|&v| fmt_f64(v))
        .collect();
        out.push(if self.cross_solver_flag { "1" } else { "0" }.to_string());
        out.push(self.status.replace([',', '\n'], ";"));
        out
    }
}

/// Fourier cap for the harmonic correction at scale `ε`.
pub fn neumann_modes(epsilon: f64) -> usize {
    (16.0 / epsilon).ceil() as usize
}

fn bubble(cfg: &LabConfig, epsilon: f64) -> Result<BubbleSpec, LabError> {
    BubbleSpec::with_cutoff(epsilon, cfg.r0, cfg.cutoff_inner)
}

/// All mesh-independent quantities of one ladder point.
pub fn epsilon_data(cfg: &LabConfig, epsilon: f64) -> Result<EpsilonData, LabError> {
    let spec = bubble(cfg, epsilon)?;
    let grid = Arc::new(ConcentrationGrid::new(
        epsilon,
        cfg.conc_n_theta,
        cfg.conc_per_octave,
        Extent::Disc,
    )?);
    let fields = bubble_fields(&spec, &grid);
    let grad_norm = fields.grad_norm();
    let f = jacobian_density(&spec, &grid).total();

    let half = Arc::new(ConcentrationGrid::new(
        epsilon,
        cfg.conc_n_theta,
        cfg.conc_per_octave,
        Extent::HalfPlane {
            radius: 1e4 * epsilon,
        },
    )?);
    let mprime = ScalarField::from_fn(&half, |w| {
        mobius_derivative_modulus(w + Complex2::new(0.0, 1.0), epsilon)
    });

    let u = dirichlet_potential(&f);
    let v = neumann_potential(&f, neumann_modes(epsilon))?;
    let cross_solver_residual = cross_solver_residual(cfg, &spec)?;
    Ok(EpsilonData {
        epsilon,
        grad_v_l2: lp_norm(&grad_norm, 2.0)?,
        grad_v_l21: lorentz21(&grad_norm),
        mprime_l21: lorentz21(&mprime),
        f_l1: lp_norm(&f, 1.0)?,
        f_hminus1: hminus1(&f, &GreenQuadrature)?,
        dirichlet_u_linf: u.values.max_abs(),
        dirichlet_grad_l2: u.gradient.l2(),
        dirichlet_grad_l15: lp_norm(&u.gradient.magnitude(), 1.5)?,
        neumann_v_linf: v.zero_mean().max_abs(),
        neumann_grad_l2: v.gradient.l2(),
        neumann_grad_l15: lp_norm(&v.gradient.magnitude(), 1.5)?,
        cross_solver_residual,
    })
}

/// Relative `H¹` distance between the modal Green and the spectral solutions of
/// the bubble problem on the configured polar grid.
pub fn cross_solver_residual(cfg: &LabConfig, spec: &BubbleSpec) -> Result<f64, LabError> {
    let polar = Arc::new(PolarGrid::new(cfg.n_r, cfg.n_theta, cfg.grading)?);
    let f = ScalarField::from_fn(&polar, |w| bubble_at(spec, w).jacobian());
    let green = solve_dirichlet_green(&f)?;
    let spectral = solve_dirichlet_spectral(&f)?;
    relative_h1_error(&green, &spectral, Closure::Dirichlet)
}

/// The fixed graded mesh of a sweep: resolution `fem.h`, refined toward `−e₂`
/// down to `fem.h_min_factor · ε_min`.
pub fn sweep_mesh(cfg: &LabConfig) -> Result<TriMesh, ConfigError> {
    let h_min = (cfg.fem_h_min_factor * cfg.eps_min.min(cfg.eps_max)).min(cfg.fem_h);
    mesh_disc_sized(Sizing::graded(cfg.fem_h, h_min), &cfg.boundary_arcs()?)
        .map_err(|e| ConfigError(e.to_string()))
}

/// Discrete `‖∇v‖₂` of the Robin problem with the bubble Jacobian as source.
pub fn robin_energy(
    mesh: &TriMesh,
    coeffs: RobinCoeffs,
    spec: &BubbleSpec,
) -> Result<f64, LabError> {
    let source = |w: Complex2| bubble_at(spec, w).jacobian();
    let sol = solve_robin(
        mesh,
        coeffs,
        RobinProblem {
            source: Some(&source),
            ..Default::default()
        },
    )?;
    Ok(sol.gradient_norm())
}

/// Rows in ε-descending order, coefficient sets in configured order within each ε.
pub fn run_sweep(cfg: &LabConfig) -> Result<Vec<SweepRow>, ConfigError> {
    cfg.validate()?;
    let mesh = sweep_mesh(cfg)?;
    let coeffs = cfg.robin_coeffs()?;
    let ladder = cfg.ladder();
    let rows: Vec<Vec<SweepRow>> = ladder
        .par_iter()
        .map(|&epsilon| {
            let (data, status) = match epsilon_data(cfg, epsilon) {
                Ok(d) => (d, "ok".to_string()),
                Err(e) => (EpsilonData::failed(epsilon), e.to_string()),
            };
            coeffs
                .iter()
                .map(|&c| {
                    let robin = bubble(cfg, epsilon).and_then(|spec| robin_energy(&mesh, c, &spec));
                    let (robin_grad_l2, status) = match robin {
                        Ok(v) => (v, status.clone()),
                        Err(e) if status == "ok" => (f64::NAN, e.to_string()),
                        Err(_) => (f64::NAN, status.clone()),
                    };
                    let residual = data.cross_solver_residual;
                    SweepRow {
                        cross_solver_flag: !(residual < cfg.cross_solver_tol),
                        data: data.clone(),
                        coeffs: (c.alpha, c.beta, c.gamma),
                        robin_grad_l2,
                        status,
                    }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

pub fn write_sweep<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{}", SWEEP_COLUMNS.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.fields().join(","))?;
    }
    Ok(())
}
