//! Reduced-resolution invariant suite across all modules.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wente_core::fem::solve::manufactured;
use wente_core::fem::{
    assemble, coercivity_check, h1_seminorm_error, mesh_disc, solve_robin, RobinCoeffs,
    RobinProblem, TriMesh,
};
use wente_core::glue::{GlueConfig, GlueState, ThresholdPolicy};
use wente_core::green::{representation_residual, solve_dirichlet_green};
use wente_core::mobius::{
    jacobian_density, mobius_derivative_modulus, mobius_eval, mobius_inverse,
};
use wente_core::norms::{layer_cake_l2_squared, lorentz21, lp_norm};
use wente_core::spectral::{solve_dirichlet_spectral, solve_neumann_spectral, HarmonicSeries};
use wente_core::{
    BubbleSpec, Complex2, ConcentrationGrid, Extent, LabError, PolarGrid, Quadrature, ScalarField,
};

use crate::config::{ConfigError, LabConfig};
use crate::csv::fmt_f64;
use crate::sweep::{cross_solver_residual, neumann_modes};

/// `8√π`
pub const LORENTZ_BOUND: f64 = 14.179_630_807_244_127;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: Relation::AtMost,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: Relation::AtLeast,
        }
    }

    pub fn passed(&self) -> bool {
        match self.relation {
            Relation::AtMost => self.value <= self.threshold,
            Relation::AtLeast => self.value >= self.threshold,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        write!(
            f,
            "{} {} value={} {op} {}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            fmt_f64(self.value),
            fmt_f64(self.threshold)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    /// `|∫_{∂D} g + ∫_D f|` with `g = −(1/2π)∫f`
    pub sign_compatible: f64,
    /// the same with `g = +(1/2π)∫f`
    pub sign_printed: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        writeln!(
            f,
            "neumann sign residuals: compatible (g = -(1/2pi) int f) {}, printed (g = +(1/2pi) int f) {}",
            fmt_f64(self.sign_compatible),
            fmt_f64(self.sign_printed)
        )?;
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

fn c(re: f64, im: f64) -> Complex2 {
    Complex2::new(re, im)
}

fn max_error(field: &ScalarField<PolarGrid>, exact: impl Fn(Complex2) -> f64) -> f64 {
    field
        .grid()
        .points()
        .iter()
        .zip(field.values())
        .map(|(&w, v)| (v - exact(w)).abs())
        .fold(0.0, f64::max)
}

fn mobius_checks(out: &mut Vec<Check>) -> Result<(), LabError> {
    let eps = 1e-2;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let w = Complex2::from_polar(rng.gen::<f64>().sqrt() * 0.98, rng.gen_range(0.0..2.0 * PI));
        let (back, _) = mobius_eval(mobius_inverse(w, eps)?, eps)?;
        worst = worst.max((back - w).norm());
    }
    out.push(Check::at_most("mobius.inverse_round_trip", worst, 1e-9));

    let half = Arc::new(ConcentrationGrid::new(
        eps,
        64,
        8,
        Extent::HalfPlane { radius: 1e4 * eps },
    )?);
    let mprime = ScalarField::from_fn(&half, |w| mobius_derivative_modulus(w + c(0.0, 1.0), eps));
    let area = mprime.map(|v| v * v).integrate();
    out.push(Check::at_most(
        "mobius.conformal_area_relative_error",
        (area / PI - 1.0).abs(),
        1e-2,
    ));
    out.push(Check::at_most(
        "norms.lorentz21_of_mprime",
        lorentz21(&mprime),
        LORENTZ_BOUND,
    ));

    let disc = Arc::new(ConcentrationGrid::new(eps, 64, 6, Extent::Disc)?);
    let mass = jacobian_density(&BubbleSpec::new(eps)?, &disc)
        .total()
        .integrate();
    out.push(Check::at_most(
        "mobius.jacobian_mass_relative_error",
        (mass / PI - 1.0).abs(),
        2e-2,
    ));
    Ok(())
}

fn field_and_norm_checks(out: &mut Vec<Check>) -> Result<(), LabError> {
    let grid = Arc::new(PolarGrid::new(32, 64, 0.0)?);
    out.push(Check::at_most(
        "disc_field.area_error",
        (grid.weights().iter().sum::<f64>() - PI).abs(),
        1e-12,
    ));
    let f = ScalarField::from_fn(&grid, |w| (1.0 - w.norm_sqr()) * (1.0 + w.re));
    let l2sq = lp_norm(&f, 2.0)?.powi(2);
    let cake = layer_cake_l2_squared(&f, 4000);
    out.push(Check::at_most(
        "norms.layer_cake_relative_error",
        (cake / l2sq - 1.0).abs(),
        1e-2,
    ));
    Ok(())
}

fn solver_checks(cfg: &LabConfig, out: &mut Vec<Check>) -> Result<(f64, f64), LabError> {
    let grid = Arc::new(PolarGrid::new(64, 128, 0.0)?);
    let one = ScalarField::constant(&grid, 1.0);
    let exact = |w: Complex2| 0.25 * (1.0 - w.norm_sqr());
    out.push(Check::at_most(
        "green.dirichlet_constant_max_error",
        max_error(&solve_dirichlet_green(&one)?, exact),
        1e-3,
    ));
    out.push(Check::at_most(
        "spectral.dirichlet_constant_max_error",
        max_error(&solve_dirichlet_spectral(&one)?, exact),
        1e-3,
    ));
    let cst = 2.0;
    let v = solve_neumann_spectral(&ScalarField::constant(&grid, cst))?;
    out.push(Check::at_most(
        "spectral.neumann_constant_max_error",
        max_error(&v, |w| -cst * w.norm_sqr() / 4.0 + cst / 8.0),
        1e-3,
    ));
    // Dirichlet data cos θ has ĝ₁ = 1/2
    let ext = HarmonicSeries {
        coefficients: vec![Complex2::new(0.5, 0.0)],
    }
    .sample(&grid);
    out.push(Check::at_most(
        "spectral.harmonic_extension_max_error",
        max_error(&ext, |w| w.re),
        1e-6,
    ));

    let spec = BubbleSpec::with_cutoff(10f64.powf(-1.5), cfg.r0, cfg.cutoff_inner)?;
    out.push(Check::at_most(
        "cross_solver.relative_h1_residual",
        cross_solver_residual(cfg, &spec)?,
        cfg.cross_solver_tol,
    ));

    let u = |w: Complex2| w.re * w.re * w.im + w.im.powi(4);
    let lap = |w: Complex2| 2.0 * w.im + 12.0 * w.im * w.im;
    let normal = |t: f64| {
        let (s, co) = t.sin_cos();
        co * (2.0 * co * s) + s * (co * co + 4.0 * s.powi(3))
    };
    let fine = Arc::new(PolarGrid::new(96, 192, 0.0)?);
    let mut worst: f64 = 0.0;
    for y in [
        c(0.0, 0.0),
        c(0.3, 0.1),
        c(-0.5, 0.4),
        c(0.1, -0.7),
        c(0.6, 0.6),
    ] {
        worst = worst.max(
            representation_residual(&fine, y, u, lap, normal, 2048)?
                .corrected
                .abs(),
        );
    }
    out.push(Check::at_most("green.representation_residual", worst, 1e-3));

    let f = ScalarField::from_fn(&grid, |w| 1.0 + w.re * w.im + w.norm_sqr());
    let total = f.integrate();
    let compatible = (2.0 * PI * (-total / (2.0 * PI)) + total).abs();
    let printed = (2.0 * PI * (total / (2.0 * PI)) + total).abs();
    out.push(Check::at_most(
        "neumann_sign.compatible_residual",
        compatible,
        cfg.verify_tol,
    ));
    out.push(Check::at_most(
        "neumann_sign.printed_residual_vs_twice_mass",
        (printed / (2.0 * total.abs()) - 1.0).abs(),
        1e-12,
    ));
    Ok((compatible, printed))
}

fn manufactured_error(mesh: &TriMesh, coeffs: RobinCoeffs) -> Result<f64, LabError> {
    let g = manufactured::robin_data(coeffs);
    let sol = solve_robin(
        mesh,
        coeffs,
        RobinProblem {
            source: None,
            robin_data: Some(&g),
            dirichlet_data: Some(&manufactured::exact),
        },
    )?;
    Ok(h1_seminorm_error(
        mesh,
        &sol.values,
        &manufactured::gradient,
    ))
}

fn robin_checks(cfg: &LabConfig, out: &mut Vec<Check>) -> Result<(), LabError> {
    let arcs = cfg
        .boundary_arcs()
        .map_err(|e| LabError::InvalidParameter(e.0))?;
    let mesh = mesh_disc(0.2, &arcs)?;
    let fine = mesh.refine()?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<Vec<f64>> = (0..20)
        .map(|_| {
            (0..mesh.n_vertices())
                .map(|i| {
                    if mesh.constrained()[i] {
                        0.0
                    } else {
                        rng.gen_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect();
    for coeffs in cfg
        .robin_coeffs()
        .map_err(|e| LabError::InvalidParameter(e.0))?
    {
        let tag = format!("{}_{}_{}", coeffs.alpha, coeffs.beta, coeffs.gamma);
        let op = assemble(&mesh, coeffs);
        out.push(Check::at_most(
            format!("robin.skew_defect[{tag}]"),
            op.skew_defect(),
            1e-12,
        ));
        let report = coercivity_check(&op, &samples)?;
        out.push(Check::at_least(
            format!("robin.coercivity_margin[{tag}]"),
            report.worst_relative_margin(),
            -1e-8,
        ));
        let (a, b) = (
            manufactured_error(&mesh, coeffs)?,
            manufactured_error(&fine, coeffs)?,
        );
        out.push(Check::at_least(
            format!("robin.manufactured_order[{tag}]"),
            (a / b).log2(),
            0.9,
        ));
    }
    Ok(())
}

fn glue_checks(cfg: &LabConfig, out: &mut Vec<Check>) -> Result<(), LabError> {
    let schedule = vec![10f64.powf(-1.5), 1e-2];
    let grid = Arc::new(ConcentrationGrid::new(1e-2, 32, 3, Extent::Disc)?);
    let config = GlueConfig {
        ladder: schedule.clone(),
        depth: 2,
        policy: ThresholdPolicy::Prescribed(schedule),
        k_max: neumann_modes(1e-2),
        r0: cfg.r0,
        cutoff_inner: cfg.cutoff_inner,
    };
    let mut state = GlueState::new(grid, config)?;
    state.glue_step()?;
    out.push(Check::at_most(
        "glue.level1_remainder",
        state.levels[0].remainder.max_abs(),
        0.0,
    ));
    state.glue_step()?;
    let two = &state.levels[1].checks;
    out.push(Check::at_most(
        "glue.level2_orthogonality",
        two.orthogonality,
        1e-4,
    ));
    out.push(Check::at_most(
        "glue.level2_remainder_l2",
        two.remainder_l2,
        1.0,
    ));
    Ok(())
}

/// Runs the suite; configuration problems are reported before any check runs.
pub fn verify(cfg: &LabConfig) -> Result<VerifyReport, ConfigError> {
    cfg.validate()?;
    let mut checks = Vec::new();
    let record = |name: &str, r: Result<(), LabError>, checks: &mut Vec<Check>| {
        if let Err(e) = r {
            checks.push(Check::at_most(
                format!("{name}.error: {e}"),
                f64::INFINITY,
                0.0,
            ));
        }
    };
    let r = mobius_checks(&mut checks);
    record("mobius", r, &mut checks);
    let r = field_and_norm_checks(&mut checks);
    record("fields", r, &mut checks);
    let (sign_compatible, sign_printed) = match solver_checks(cfg, &mut checks) {
        Ok(v) => v,
        Err(e) => {
            record("solvers", Err(e), &mut checks);
            (f64::NAN, f64::NAN)
        }
    };
    let r = robin_checks(cfg, &mut checks);
    record("robin", r, &mut checks);
    let r = glue_checks(cfg, &mut checks);
    record("glue", r, &mut checks);
    Ok(VerifyReport {
        checks,
        sign_compatible,
        sign_printed,
    })
}
