//! Sparse direct solves, the Robin flux functional and the coercivity check.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{LabError, Result};
use crate::fem::assemble::{
    assemble, boundary_load, load_vector, p1_gradients, quadrature_point, RobinCoeffs,
    RobinOperator, SparseMatrix, TRI_RULE,
};
use crate::fem::mesh::TriMesh;
use crate::mobius::Complex2;

/// Solves `A x = b` restricted to the unconstrained indices; constrained entries of `x` are taken from `fixed`.
fn solve_constrained(
    a: &SparseMatrix,
    b: &[f64],
    constrained: &[bool],
    fixed: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let n = a.n;
    let mut index = vec![usize::MAX; n];
    let mut free = Vec::new();
    for i in 0..n {
        if !constrained[i] {
            index[i] = free.len();
            free.push(i);
        }
    }
    let mut rhs: Vec<f64> = free.iter().map(|&i| b[i]).collect();
    let mut triplets = Vec::with_capacity(a.entries.len());
    for &(r, c, v) in &a.entries {
        if constrained[r] {
            continue;
        }
        if constrained[c] {
            rhs[index[r]] -= v * fixed[c];
        } else {
            triplets.push(Triplet::new(index[r], index[c], v));
        }
    }
    let m = free.len();
    let mut x = fixed.to_vec();
    if m == 0 {
        return Ok((x, 0.0));
    }
    let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &triplets)
        .map_err(|e| LabError::Solver(format!("{e:?}")))?;
    let lu = matrix
        .sp_lu()
        .map_err(|e| LabError::Solver(format!("{e:?}")))?;
    let sol = lu.solve(Col::from_fn(m, |i| rhs[i]));
    if (0..m).any(|i| !sol[i].is_finite()) {
        return Err(LabError::Singular("Robin system".into()));
    }
    for (k, &i) in free.iter().enumerate() {
        x[i] = sol[k];
    }
    // relative residual on the free rows
    let ax = a.mul_vec(&x);
    let (mut res, mut norm) = (0.0f64, 0.0f64);
    for &i in &free {
        res += (ax[i] - b[i]).powi(2);
        norm += b[i].powi(2);
    }
    let relative = if norm > 0.0 {
        (res / norm).sqrt()
    } else {
        res.sqrt()
    };
    Ok((x, relative))
}

/// Data of one Robin problem; missing data are zero.
#[derive(Clone, Copy, Default)]
pub struct RobinProblem<'a> {
    pub source: Option<&'a (dyn Fn(Complex2) -> f64 + Sync)>,
    /// right-hand side `g` of the Robin condition on `E`
    pub robin_data: Option<&'a dyn Fn(Complex2) -> f64>,
    /// boundary values on `∂D ∖ E`
    pub dirichlet_data: Option<&'a dyn Fn(Complex2) -> f64>,
}

/// Nodal P1 solution with the assembled operator.
#[derive(Debug, Clone)]
pub struct FemSolution {
    pub values: Vec<f64>,
    pub operator: RobinOperator,
    /// `‖A u − b‖/‖b‖` over the free rows
    pub residual: f64,
}

impl FemSolution {
    /// `‖∇u_h‖_{L²}`.
    pub fn gradient_norm(&self) -> f64 {
        self.operator
            .stiffness
            .quadratic_form(&self.values)
            .max(0.0)
            .sqrt()
    }
}

/// Solves `α(−Δu) = αf`, `α∂_ν u + β∂_τ u + γu = g` on `E`, `u` prescribed on `∂D ∖ E`.
pub fn solve_robin(
    mesh: &TriMesh,
    coeffs: RobinCoeffs,
    problem: RobinProblem<'_>,
) -> Result<FemSolution> {
    let operator = assemble(mesh, coeffs);
    let n = mesh.n_vertices();
    let mut b = match problem.source {
        Some(f) => load_vector(mesh, f),
        None => vec![0.0; n],
    };
    for v in &mut b {
        *v *= coeffs.alpha;
    }
    if let Some(g) = problem.robin_data {
        for (bi, gi) in b.iter_mut().zip(boundary_load(mesh, g)) {
            *bi += gi;
        }
    }
    let fixed: Vec<f64> = match problem.dirichlet_data {
        Some(d) => (0..n)
            .map(|i| {
                if mesh.constrained()[i] {
                    d(mesh.vertices[i])
                } else {
                    0.0
                }
            })
            .collect(),
        None => vec![0.0; n],
    };
    let (values, residual) = solve_constrained(&operator.matrix(), &b, mesh.constrained(), &fixed)?;
    Ok(FemSolution {
        values,
        operator,
        residual,
    })
}

/// Homogeneous Dirichlet P1 solve on the whole boundary.
pub fn solve_dirichlet_fem(
    mesh: &TriMesh,
    f: &(dyn Fn(Complex2) -> f64 + Sync),
) -> Result<(Vec<f64>, SparseMatrix)> {
    let operator = assemble(mesh, RobinCoeffs::default());
    let b = load_vector(mesh, f);
    let (values, _) = solve_constrained(
        &operator.stiffness,
        &b,
        mesh.on_boundary(),
        &vec![0.0; mesh.n_vertices()],
    )?;
    Ok((values, operator.stiffness))
}

/// `‖∇(u_h − u*)‖_{L²}` with the seven-point rule.
pub fn h1_seminorm_error(
    mesh: &TriMesh,
    values: &[f64],
    exact_grad: &dyn Fn(Complex2) -> [f64; 2],
) -> f64 {
    let mut sum = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (g, area) = p1_gradients(mesh, t);
        let mut gh = [0.0; 2];
        for k in 0..3 {
            gh[0] += values[tri[k]] * g[k][0];
            gh[1] += values[tri[k]] * g[k][1];
        }
        for &(bary, w) in &TRI_RULE {
            let ge = exact_grad(quadrature_point(mesh, t, bary));
            sum += w * area * ((gh[0] - ge[0]).powi(2) + (gh[1] - ge[1]).powi(2));
        }
    }
    sum.sqrt()
}

/// The functional `l(ψ) = α∫_{∂D} ∂_ν u ψ = α(∫∇u·∇ψ − ∫fψ)` of a Dirichlet solution.
#[derive(Debug, Clone)]
pub struct FluxFunctional {
    /// `α(K u − F)` at every vertex; zero up to round-off at interior vertices
    pub nodal: Vec<f64>,
    /// vertices of `E` that are not arc endpoints
    pub arc_vertices: Vec<usize>,
    /// dual norm over test functions vanishing on `∂D ∖ E`, measured by `‖∇ψ‖`
    pub dual_norm: f64,
}

impl FluxFunctional {
    /// `l(1)` summed over the whole boundary.
    pub fn total(&self) -> f64 {
        self.nodal.iter().sum()
    }

    /// Largest `|l(φ_i)|` over interior vertices.
    pub fn interior_defect(&self, mesh: &TriMesh) -> f64 {
        (0..mesh.n_vertices())
            .filter(|&i| !mesh.on_boundary()[i])
            .map(|i| self.nodal[i].abs())
            .fold(0.0, f64::max)
    }
}

pub fn robin_flux_functional(
    mesh: &TriMesh,
    u_dirichlet: &[f64],
    f: &(dyn Fn(Complex2) -> f64 + Sync),
    coeffs: RobinCoeffs,
) -> Result<FluxFunctional> {
    let op = assemble(mesh, coeffs);
    let ku = op.stiffness.mul_vec(u_dirichlet);
    let load = load_vector(mesh, f);
    let nodal: Vec<f64> = ku
        .iter()
        .zip(&load)
        .map(|(k, l)| coeffs.alpha * (k - l))
        .collect();
    let arc_vertices: Vec<usize> = (0..mesh.n_vertices())
        .filter(|&i| mesh.on_boundary()[i] && !mesh.constrained()[i])
        .collect();
    // Riesz representer in the test space: K_Y z = l
    let zeros = vec![0.0; mesh.n_vertices()];
    let (z, _) = solve_constrained(&op.stiffness, &nodal, mesh.constrained(), &zeros)?;
    let dual = (0..mesh.n_vertices())
        .filter(|&i| !mesh.constrained()[i])
        .map(|i| nodal[i] * z[i])
        .sum::<f64>();
    Ok(FluxFunctional {
        nodal,
        arc_vertices,
        dual_norm: dual.max(0.0).sqrt(),
    })
}

/// Outcome of the coercivity check.
#[derive(Debug, Clone, PartialEq)]
pub struct CoercivityReport {
    /// `⟨Bx, x⟩ − α xᵀKx` per sample
    pub margins: Vec<f64>,
    /// `max(⟨Bx,x⟩, αxᵀKx)` per sample, the natural size of the margin
    pub scales: Vec<f64>,
}

impl CoercivityReport {
    /// Smallest margin relative to its scale.
    pub fn worst_relative_margin(&self) -> f64 {
        self.margins
            .iter()
            .zip(&self.scales)
            .map(|(m, s)| if *s > 0.0 { m / s } else { *m })
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn coercivity_check(
    operator: &RobinOperator,
    samples: &[Vec<f64>],
) -> Result<CoercivityReport> {
    let mut margins = Vec::with_capacity(samples.len());
    let mut scales = Vec::with_capacity(samples.len());
    let full = operator.matrix();
    for x in samples {
        if x.len() != operator.stiffness.n {
            return Err(LabError::InvalidParameter(
                "sample length differs from the mesh".into(),
            ));
        }
        if x.iter()
            .zip(&operator.constrained)
            .any(|(v, &c)| c && *v != 0.0)
        {
            return Err(LabError::InvalidParameter(
                "sample does not vanish on the Dirichlet part".into(),
            ));
        }
        let form = full.quadratic_form(x);
        let energy = operator.coeffs.alpha * operator.stiffness.quadratic_form(x);
        margins.push(form - energy);
        scales.push(form.abs().max(energy.abs()));
    }
    Ok(CoercivityReport { margins, scales })
}

/// The harmonic `u* = xy` and its Robin data `α sin2θ + β cos2θ + (γ/2) sin2θ` at boundary points.
pub mod manufactured {
    use super::*;

    pub fn exact(p: Complex2) -> f64 {
        p.re * p.im
    }

    pub fn gradient(p: Complex2) -> [f64; 2] {
        [p.im, p.re]
    }

    pub fn robin_data(coeffs: RobinCoeffs) -> impl Fn(Complex2) -> f64 {
        move |p: Complex2| {
            let t = p.arg();
            coeffs.alpha * (2.0 * t).sin()
                + coeffs.beta * (2.0 * t).cos()
                + coeffs.gamma * 0.5 * (2.0 * t).sin()
        }
    }
}
