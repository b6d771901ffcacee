//! Norms of sampled fields: `L^p`, distribution functions, Lorentz `L^{2,1}`
//! and the dual `H^{-1}` norm realised through a Dirichlet solve.

use crate::error::{LabError, Result};
use crate::grid::{Quadrature, ScalarField};

/// Reciprocal of the first zero of `J₀`: the Poincaré constant of the unit disc
/// for `‖ψ‖_{L²} ≤ C‖∇ψ‖_{L²}`, `ψ ∈ H¹₀`.
pub const DISC_POINCARE: f64 = 1.0 / 2.404_825_557_695_773;

/// Homogeneous Dirichlet Poisson solve `−Δu = f`, `u = 0` on `∂D`.
pub trait DirichletSolve<G> {
    fn solve_dirichlet(&self, f: &ScalarField<G>) -> Result<ScalarField<G>>;
}

/// Quadrature `L^p` norm; `p = ∞` gives the maximum modulus.
pub fn lp_norm<G: Quadrature>(field: &ScalarField<G>, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "L^p needs p >= 1, got {p}"
        )));
    }
    if p.is_infinite() {
        return Ok(field.max_abs());
    }
    let sum: f64 = field
        .values()
        .iter()
        .zip(field.grid().weights())
        .map(|(v, w)| v.abs().powf(p) * w)
        .sum();
    Ok(sum.powf(1.0 / p))
}

/// `μ(t) = |{|f| > t}|` as the total weight of nodes above `t`.
pub fn distribution_function<G: Quadrature>(field: &ScalarField<G>, t: f64) -> f64 {
    field
        .values()
        .iter()
        .zip(field.grid().weights())
        .filter(|(v, _)| v.abs() > t)
        .map(|(_, w)| w)
        .sum()
}

/// `‖f‖_{L^{2,1}} = 2∫₀^∞ μ(t)^{1/2} dt`.
///
/// The sampled `μ` is a step function, so the integral is evaluated exactly
/// from the decreasing rearrangement: with values sorted as `v₁ ≥ v₂ ≥ …` and
/// cumulative weights `W_k`, it equals `2 Σ √W_k (v_k − v_{k+1})`.
pub fn lorentz21<G: Quadrature>(field: &ScalarField<G>) -> f64 {
    let mut pairs: Vec<(f64, f64)> = field
        .values()
        .iter()
        .zip(field.grid().weights())
        .map(|(v, &w)| (v.abs(), w))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut cumulative = 0.0;
    let mut total = 0.0;
    for k in 0..pairs.len() {
        cumulative += pairs[k].1;
        let next = pairs.get(k + 1).map_or(0.0, |p| p.0);
        total += cumulative.sqrt() * (pairs[k].0 - next);
    }
    2.0 * total
}

/// Layer-cake value `2∫₀^∞ t μ(t) dt`, which equals `‖f‖²_{L²}` for exact `μ`.
pub fn layer_cake_l2_squared<G: Quadrature>(field: &ScalarField<G>, levels: usize) -> f64 {
    let top = field.max_abs();
    if top == 0.0 {
        return 0.0;
    }
    let dt = top / levels as f64;
    (0..levels)
        .map(|i| {
            let t = (i as f64 + 0.5) * dt;
            2.0 * t * distribution_function(field, t) * dt
        })
        .sum()
}

/// `‖f‖_{H^{-1}} = ‖∇u‖_{L²}` for the Dirichlet solution `u` of `−Δu = f`.
///
/// The energy is evaluated as `(∫ f u)^{1/2}`.
pub fn hminus1<G: Quadrature, S: DirichletSolve<G> + ?Sized>(
    f: &ScalarField<G>,
    solver: &S,
) -> Result<f64> {
    let u = solver.solve_dirichlet(f)?;
    Ok(f.dot(&u)?.max(0.0).sqrt())
}

/// Norm measurements of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub linf: f64,
    pub l2: f64,
    /// `(p, ‖f‖_p)` pairs
    pub lp: Vec<(f64, f64)>,
    pub l21: f64,
    pub hminus1: Option<f64>,
}

impl NormReport {
    pub fn measure<G: Quadrature>(field: &ScalarField<G>, exponents: &[f64]) -> Result<Self> {
        let lp = exponents
            .iter()
            .map(|&p| Ok((p, lp_norm(field, p)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            linf: field.max_abs(),
            l2: lp_norm(field, 2.0)?,
            lp,
            l21: lorentz21(field),
            hminus1: None,
        })
    }

    pub fn with_hminus1<G: Quadrature, S: DirichletSolve<G> + ?Sized>(
        mut self,
        field: &ScalarField<G>,
        solver: &S,
    ) -> Result<Self> {
        self.hminus1 = Some(hminus1(field, solver)?);
        Ok(self)
    }

    pub fn lp(&self, p: f64) -> Option<f64> {
        self.lp.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}
