//! Gluing concentrating bubbles into a single field pair whose Neumann image
//! leaves `H¹`.
//!
//! Each level orthogonalises a fresh bubble against the solver images of the
//! previous levels (projections `P_n`, `Q_n`), corrects the field pair so its
//! Jacobian reproduces the projected density up to a remainder, and rescales.
//! The dyadic sums `a = Σ 2^{-i} h_i`, `b = Σ 2^{-i} k_i` are then tested
//! against `f_n = Σ 2^{-i} Ay_i/‖Ay_i‖`.
//!
//! Normalisation used here: `h = h̃/λ`, `k = k̃/λ`, `y = ỹ/λ²`, `R = R̃/λ²`,
//! so that `dh ∧ dk = y + R` holds exactly at every level.

use std::io::Write;
use std::sync::Arc;

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{Mat, Side};

use crate::error::{LabError, Result};
use crate::green::neumann_potential;
use crate::grid::{GradField, Quadrature, ScalarField};
use crate::mobius::{bubble_fields, BubbleSpec, Complex2};
use crate::norms::{lorentz21, lp_norm};

/// A scalar field with its gradient.
#[derive(Debug, Clone)]
pub struct FieldPair<G> {
    pub value: ScalarField<G>,
    pub grad: GradField<G>,
}

impl<G: Quadrature> FieldPair<G> {
    pub fn zeros(grid: &Arc<G>) -> Self {
        Self {
            value: ScalarField::zeros(grid),
            grad: GradField::from_fn(grid, |_| [0.0; 2]),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            value: self.value.scale(c),
            grad: self.grad.scale(c),
        }
    }

    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        Ok(Self {
            value: self.value.axpy(c, &other.value)?,
            grad: self.grad.axpy(c, &other.grad)?,
        })
    }

    pub fn zero_mean(&self) -> Self {
        Self {
            value: self.value.zero_mean(),
            grad: self.grad.clone(),
        }
    }

    pub fn wedge(&self, other: &Self) -> Result<ScalarField<G>> {
        self.grad.wedge(&other.grad)
    }

    pub fn sup(&self) -> f64 {
        self.value.max_abs()
    }

    pub fn grad_sup(&self) -> f64 {
        self.grad.magnitude().max_abs()
    }

    pub fn grad_l2(&self) -> f64 {
        self.grad.l2()
    }

    pub fn grad_l21(&self) -> f64 {
        lorentz21(&self.grad.magnitude())
    }

    /// `‖f‖_∞ + ‖df‖_{L^{2,1}}`
    pub fn x_norm(&self) -> f64 {
        self.sup() + self.grad_l21()
    }
}

/// Neumann solver image `Ay` with its gradient; only `∇(Ay)` enters inner products.
#[derive(Debug, Clone)]
pub struct Image<G> {
    /// `u − h` of the Dirichlet/harmonic split, not shifted to zero mean
    pub values: ScalarField<G>,
    pub grad: GradField<G>,
}

impl<G: Quadrature> Image<G> {
    pub fn of(density: &ScalarField<G>, k_max: usize) -> Result<Self> {
        let sol = neumann_potential(density, k_max)?;
        Ok(Self {
            values: sol.values,
            grad: sol.gradient,
        })
    }

    /// `⟨u, v⟩ = ∫ ∇u·∇v`
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.grad.dot(&other.grad)
    }

    pub fn norm(&self) -> f64 {
        self.grad.l2()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            values: self.values.scale(c),
            grad: self.grad.scale(c),
        }
    }

    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        Ok(Self {
            values: self.values.axpy(c, &other.values)?,
            grad: self.grad.axpy(c, &other.grad)?,
        })
    }
}

/// How the selection threshold of each level is enforced.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdPolicy {
    /// `2^{3(n+1)} C_n² (n + 3 + Σ_{j≤n} ‖dh_j‖_∞ + ‖dk_j‖_∞)²`
    Literal,
    /// the literal threshold times `c`, with `c` fixed so that level one is met
    /// exactly by the bubble at `calibration_epsilon`
    DeskScale { calibration_epsilon: f64 },
    /// use the listed `ε` per level regardless of thresholds
    Prescribed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlueConfig {
    /// candidate `ε`, scanned in decreasing order
    pub ladder: Vec<f64>,
    pub depth: usize,
    pub policy: ThresholdPolicy,
    /// Fourier cap of the harmonic correction
    pub k_max: usize,
    pub r0: f64,
    pub cutoff_inner: f64,
}

/// Largest supported depth.
pub const MAX_DEPTH: usize = 4;

impl GlueConfig {
    /// Half-decade ladder `10^{-1} … 10^{-3}` with the desk-scale policy.
    pub fn desk_scale(depth: usize) -> Self {
        let ladder: Vec<f64> = (2..=6).map(|k| 10f64.powf(-0.5 * k as f64)).collect();
        Self {
            k_max: (16.0 / ladder[ladder.len() - 1]).ceil() as usize,
            ladder,
            depth,
            policy: ThresholdPolicy::DeskScale {
                calibration_epsilon: 10f64.powf(-1.5),
            },
            r0: crate::mobius::DEFAULT_R0,
            cutoff_inner: crate::mobius::DEFAULT_CUTOFF_INNER,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return Err(LabError::InvalidParameter(format!(
                "glue depth must lie in 1..={MAX_DEPTH}, got {}",
                self.depth
            )));
        }
        if self.ladder.is_empty() || self.ladder.iter().any(|e| !(*e > 0.0)) {
            return Err(LabError::InvalidParameter(
                "candidate ladder needs positive epsilons".into(),
            ));
        }
        if let ThresholdPolicy::Prescribed(schedule) = &self.policy {
            if schedule.len() < self.depth {
                return Err(LabError::InvalidParameter(
                    "prescribed schedule shorter than depth".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A normalised bubble of the contradicting sequence.
#[derive(Debug, Clone)]
pub struct Candidate<G> {
    pub epsilon: f64,
    /// `a/S`, mean-free
    pub a: FieldPair<G>,
    /// `b/S`, mean-free
    pub b: FieldPair<G>,
    /// `da ∧ db`
    pub density: ScalarField<G>,
    pub image: Image<G>,
    /// normaliser `S`
    pub scale: f64,
}

impl<G: Quadrature> Candidate<G> {
    pub fn new(epsilon: f64, grid: &Arc<G>, config: &GlueConfig) -> Result<Self> {
        let spec = BubbleSpec::with_cutoff(epsilon, config.r0, config.cutoff_inner)?;
        let fields = bubble_fields(&spec, grid);
        let a = FieldPair {
            value: fields.a,
            grad: fields.grad_a,
        }
        .zero_mean();
        let b = FieldPair {
            value: fields.b,
            grad: fields.grad_b,
        }
        .zero_mean();
        // (1) and (3) at level one
        let scale = (a.x_norm() + b.x_norm()).max(a.grad_l2() + b.grad_l2());
        let (a, b) = (a.scale(1.0 / scale), b.scale(1.0 / scale));
        let density = a.wedge(&b)?;
        let image = Image::of(&density, config.k_max)?;
        Ok(Self {
            epsilon,
            a,
            b,
            density,
            image,
            scale,
        })
    }
}

/// Checks of the six construction properties at one level.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LevelChecks {
    /// (i) `‖y‖_{L¹}`
    pub y_l1: f64,
    /// (ii) largest `|⟨Ay_i, Ay⟩|/(‖Ay_i‖‖Ay‖)` against earlier levels
    pub orthogonality: f64,
    /// (iii) `‖Ay‖`, compared with `2^{3i}` and with the scaled bound `c·2^{3i}`
    pub image_norm: f64,
    pub literal_bound: f64,
    pub scaled_bound: f64,
    /// (1) `‖h‖_∞ + ‖dh‖_{L^{2,1}} + ‖k‖_∞ + ‖dk‖_{L^{2,1}}`
    pub x_norm: f64,
    /// (2) `‖R‖_{L²}`
    pub remainder_l2: f64,
    /// (3) `‖dh‖₂ + ‖dk‖₂` and its bound
    pub energy: f64,
    pub energy_bound: f64,
}

impl LevelChecks {
    pub fn property_i(&self) -> bool {
        self.y_l1 <= 1.0 + 1e-12
    }
    pub fn property_ii(&self) -> bool {
        self.orthogonality < 1e-4
    }
    pub fn property_iii_literal(&self) -> bool {
        self.image_norm >= self.literal_bound
    }
    pub fn property_iii_scaled(&self) -> bool {
        self.image_norm >= self.scaled_bound * (1.0 - 1e-12)
    }
    pub fn property_1(&self) -> bool {
        self.x_norm <= 1.0 + 1e-12
    }
    pub fn property_2(&self) -> bool {
        self.remainder_l2 <= 1.0 + 1e-12
    }
    pub fn property_3(&self) -> bool {
        self.energy <= self.energy_bound * (1.0 + 1e-12)
    }

    /// The properties the construction guarantees by itself: (i), (ii), scaled (iii), (2).
    pub fn construction_holds(&self) -> bool {
        self.property_i() && self.property_ii() && self.property_iii_scaled() && self.property_2()
    }

    pub fn all_hold(&self) -> bool {
        self.construction_holds() && self.property_1() && self.property_3()
    }
}

/// One completed level.
#[derive(Debug, Clone)]
pub struct Level<G> {
    pub epsilon: f64,
    pub y: ScalarField<G>,
    pub h: FieldPair<G>,
    pub k: FieldPair<G>,
    pub image: Image<G>,
    pub remainder: ScalarField<G>,
    /// coefficients of `Q_{n} da_m ∧ db_m` in `y_1 … y_n`
    pub alphas: Vec<f64>,
    /// `C_n` used for `λ`; one at the first level
    pub c_n: f64,
    pub lambda: f64,
    /// `‖A(I − Q_n) da_m ∧ db_m‖` before rescaling
    pub projected_norm: f64,
    pub threshold_literal: f64,
    pub threshold_scaled: f64,
    pub checks: LevelChecks,
}

/// State of the inductive construction.
#[derive(Debug, Clone)]
pub struct GlueState<G> {
    pub grid: Arc<G>,
    pub config: GlueConfig,
    pub levels: Vec<Level<G>>,
    /// `max ‖Af‖/‖f‖₂` over the probe set
    pub c_a: f64,
    /// `c` of the desk-scale policy, one otherwise
    pub calibration: f64,
    candidates: Vec<Option<Candidate<G>>>,
}

/// Projection data of one density against the current levels.
#[derive(Debug, Clone)]
pub struct Projection<G> {
    pub alphas: Vec<f64>,
    /// `A(I − Q_n)x`
    pub residual_image: Image<G>,
    /// Gram condition number after diagonal scaling
    pub condition: f64,
}

fn gram_condition(gram: &Mat<f64>) -> Result<f64> {
    let n = gram.nrows();
    let scaled = Mat::from_fn(n, n, |i, j| {
        gram[(i, j)] / (gram[(i, i)] * gram[(j, j)]).sqrt()
    });
    let eig = scaled
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| LabError::Solver(format!("{e:?}")))?;
    let (lo, hi) = (eig[0], eig[n - 1]);
    Ok(if lo > 0.0 { hi / lo } else { f64::INFINITY })
}

const MAX_CONDITION: f64 = 1e8;

impl<G: Quadrature> GlueState<G> {
    pub fn new(grid: Arc<G>, config: GlueConfig) -> Result<Self> {
        config.validate()?;
        let mut ladder = config.ladder.clone();
        ladder.sort_by(|a, b| b.total_cmp(a));
        let config = GlueConfig { ladder, ..config };
        let n = config.ladder.len();
        Ok(Self {
            grid,
            config,
            levels: Vec::new(),
            c_a: 0.0,
            calibration: 1.0,
            candidates: vec![None; n],
        })
    }

    pub fn level(&self) -> usize {
        self.levels.len()
    }

    fn candidate(&mut self, index: usize) -> Result<&Candidate<G>> {
        if self.candidates[index].is_none() {
            let eps = self.config.ladder[index];
            self.candidates[index] = Some(Candidate::new(eps, &self.grid, &self.config)?);
        }
        Ok(self.candidates[index].as_ref().expect("filled above"))
    }

    fn gram(&self) -> Result<Mat<f64>> {
        let n = self.levels.len();
        let mut g = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.levels[i].image.inner(&self.levels[j].image)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Orthogonal projection of `w` onto `span{Ay_1, …, Ay_n}`; returns the coefficients.
    pub fn project_pn(&self, w: &GradField<G>) -> Result<(Vec<f64>, GradField<G>)> {
        let mut out = w.scale(0.0);
        let mut coefficients = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            let norm2 = level.image.inner(&level.image)?;
            let c = level.image.grad.dot(w)? / norm2;
            out = out.axpy(c, &level.image.grad)?;
            coefficients.push(c);
        }
        Ok((coefficients, out))
    }

    /// `Q_n x = Σ α_i y_i` with `P_n A (I − Q_n) x = 0`, given `Ax`.
    pub fn project_qn(&self, image: &Image<G>) -> Result<Projection<G>> {
        let n = self.levels.len();
        if n == 0 {
            return Ok(Projection {
                alphas: Vec::new(),
                residual_image: image.clone(),
                condition: 1.0,
            });
        }
        let gram = self.gram()?;
        let condition = gram_condition(&gram)?;
        if !(condition < MAX_CONDITION) {
            return Err(LabError::IllConditioned(condition));
        }
        let rhs = Mat::from_fn(n, 1, |i, _| {
            self.levels[i].image.inner(image).unwrap_or(f64::NAN)
        });
        let alpha = gram.partial_piv_lu().solve(&rhs);
        let alphas: Vec<f64> = (0..n).map(|i| alpha[(i, 0)]).collect();
        let mut residual_image = image.clone();
        for (level, &a) in self.levels.iter().zip(&alphas) {
            residual_image = residual_image.axpy(-a, &level.image)?;
        }
        Ok(Projection {
            alphas,
            residual_image,
            condition,
        })
    }

    /// `C_n = sup_{‖x‖_{L¹} ≤ 1} Σ|α_i(x)|`.
    ///
    /// `α(x) = G⁻¹ (∫ x w_j)_j` with `w_j = Ay_j`, so the supremum over the
    /// `L¹` ball is attained at point masses and equals `max_p Σ_i |(G⁻¹ w(p))_i|`.
    pub fn coefficient_bound(&self) -> Result<f64> {
        let n = self.levels.len();
        if n == 0 {
            return Ok(1.0);
        }
        let inverse = self.gram()?.partial_piv_lu().inverse();
        let nodes = self.grid.len();
        let mut best: f64 = 0.0;
        for p in 0..nodes {
            let mut total = 0.0;
            for i in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += inverse[(i, j)] * self.levels[j].image.values.values()[p];
                }
                total += s.abs();
            }
            best = best.max(total);
        }
        Ok(best)
    }

    fn sum_grad_sup(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.h.grad_sup() + l.k.grad_sup())
            .sum()
    }

    /// Literal and policy thresholds for the next level.
    pub fn thresholds(&self, c_n: f64) -> (f64, f64) {
        let n = self.levels.len() as f64;
        let base = 2f64.powf(3.0 * (n + 1.0)) * c_n * c_n * (n + 3.0 + self.sum_grad_sup()).powi(2);
        (base, self.calibration * base)
    }

    fn calibrate(&mut self) -> Result<()> {
        self.calibration = match self.config.policy.clone() {
            ThresholdPolicy::DeskScale {
                calibration_epsilon,
            } => {
                let index = self
                    .config
                    .ladder
                    .iter()
                    .position(|e| (e / calibration_epsilon - 1.0).abs() < 1e-9)
                    .ok_or_else(|| {
                        LabError::InvalidParameter(
                            "calibration epsilon is not on the ladder".into(),
                        )
                    })?;
                let norm = self.candidate(index)?.image.norm();
                norm / self.thresholds(1.0).0
            }
            _ => 1.0,
        };
        Ok(())
    }

    /// `max ‖Af‖_{H¹}/‖f‖_{L²}` over smooth probes and the evaluated candidates.
    fn measure_solver_norm(&mut self) -> Result<()> {
        let probes: [fn(Complex2) -> f64; 5] = [
            |w| w.re,
            |w| w.im,
            |w| (w * w).re,
            |w| w.norm_sqr() - 0.5,
            |_| 1.0,
        ];
        let mut best: f64 = 0.0;
        for probe in probes {
            let f = ScalarField::from_fn(&self.grid, probe);
            let image = Image::of(&f, self.config.k_max)?;
            best = best.max(image.norm() / lp_norm(&f, 2.0)?);
        }
        for c in self.candidates.iter().flatten() {
            best = best.max(c.image.norm() / lp_norm(&c.density, 2.0)?);
        }
        self.c_a = best;
        Ok(())
    }

    fn checks(&self, level: &Level<G>, index: usize) -> Result<LevelChecks> {
        let mut orthogonality: f64 = 0.0;
        let norm = level.image.norm();
        for earlier in &self.levels {
            let c = earlier.image.inner(&level.image)?.abs() / (earlier.image.norm() * norm);
            orthogonality = orthogonality.max(c);
        }
        let i = index as f64;
        let prior: f64 = self.sum_grad_sup();
        Ok(LevelChecks {
            y_l1: lp_norm(&level.y, 1.0)?,
            orthogonality,
            image_norm: norm,
            literal_bound: 2f64.powf(3.0 * i),
            scaled_bound: self.calibration * 2f64.powf(3.0 * i),
            x_norm: level.h.x_norm() + level.k.x_norm(),
            remainder_l2: lp_norm(&level.remainder, 2.0)?,
            energy: level.h.grad_l2() + level.k.grad_l2(),
            energy_bound: 1.0 / (1.0 + prior),
        })
    }

    /// Builds the next level from candidate `index`.
    fn extend_with(&mut self, index: usize, c_n: f64, thresholds: (f64, f64)) -> Result<()> {
        let candidate = self.candidate(index)?.clone();
        let projection = self.project_qn(&candidate.image)?;
        let projected_norm = projection.residual_image.norm();
        let n = self.levels.len();
        let level = if n == 0 {
            Level {
                epsilon: candidate.epsilon,
                y: candidate.density.clone(),
                h: candidate.a.clone(),
                k: candidate.b.clone(),
                image: candidate.image.clone(),
                remainder: ScalarField::zeros(&self.grid),
                alphas: Vec::new(),
                c_n,
                lambda: 1.0,
                projected_norm,
                threshold_literal: thresholds.0,
                threshold_scaled: thresholds.1,
                checks: LevelChecks::default(),
            }
        } else {
            let alphas = projection.alphas.clone();
            let mut y = candidate.density.clone();
            let mut h = candidate.a.clone();
            let mut k = candidate.b.clone();
            for (l, &a) in self.levels.iter().zip(&alphas) {
                y = y.axpy(-a, &l.y)?;
                h = h.axpy(-a, &l.h)?;
                k = k.axpy(1.0, &l.k)?;
            }
            let remainder = h.wedge(&k)?.sub(&y)?;
            let lambda = c_n * (n as f64 + 3.0 + self.sum_grad_sup());
            let l2 = lambda * lambda;
            Level {
                epsilon: candidate.epsilon,
                y: y.scale(1.0 / l2),
                h: h.scale(1.0 / lambda),
                k: k.scale(1.0 / lambda),
                image: projection.residual_image.scale(1.0 / l2),
                remainder: remainder.scale(1.0 / l2),
                alphas,
                c_n,
                lambda,
                projected_norm,
                threshold_literal: thresholds.0,
                threshold_scaled: thresholds.1,
                checks: LevelChecks::default(),
            }
        };
        let mut level = level;
        level.checks = self.checks(&level, n + 1)?;
        self.levels.push(level);
        Ok(())
    }

    /// Appends one level according to the threshold policy.
    pub fn glue_step(&mut self) -> Result<()> {
        let n = self.levels.len();
        if n >= self.config.depth {
            return Err(LabError::InvalidParameter(format!(
                "depth {} already reached",
                self.config.depth
            )));
        }
        if n == 0 {
            self.calibrate()?;
        }
        let c_n = self.coefficient_bound()?;
        let thresholds = self.thresholds(c_n);
        // the contradicting sequence is scanned past the last chosen member
        let start = self
            .levels
            .last()
            .and_then(|l| self.config.ladder.iter().position(|&e| e == l.epsilon))
            .map_or(0, |i| i + 1);
        if let ThresholdPolicy::Prescribed(schedule) = &self.config.policy {
            let eps = schedule[n];
            let index = match self
                .config
                .ladder
                .iter()
                .position(|&e| (e / eps - 1.0).abs() < 1e-9)
            {
                Some(i) => i,
                None => {
                    self.config.ladder.push(eps);
                    self.candidates.push(None);
                    self.config.ladder.len() - 1
                }
            };
            return self.extend_with(index, c_n, thresholds);
        }
        let threshold = match self.config.policy {
            ThresholdPolicy::Literal => thresholds.0,
            _ => thresholds.1,
        };
        let mut best: f64 = 0.0;
        for index in start..self.config.ladder.len() {
            let image = self.candidate(index)?.image.clone();
            let norm = self.project_qn(&image)?.residual_image.norm();
            best = best.max(norm);
            // tolerance absorbs the round-off of the calibration itself
            if norm >= threshold * (1.0 - 1e-12) {
                return self.extend_with(index, c_n, thresholds);
            }
        }
        Err(LabError::LadderExhausted {
            level: n + 1,
            best,
            threshold,
        })
    }

    /// Truncated sums `a = Σ_{i≤n} 2^{-i} h_i`, `b = Σ 2^{-i} k_i` and the
    /// unit-energy probes `Ay_i/‖Ay_i‖`.
    pub fn partial_sums(&self, n: usize) -> Result<PartialSums<G>> {
        if n > self.levels.len() {
            return Err(LabError::InvalidParameter(format!(
                "only {} levels available, asked for {n}",
                self.levels.len()
            )));
        }
        let mut a = FieldPair::zeros(&self.grid);
        let mut b = FieldPair::zeros(&self.grid);
        let mut probes = Vec::with_capacity(n);
        for (i, level) in self.levels.iter().take(n).enumerate() {
            let w = 0.5f64.powi(i as i32 + 1);
            a = a.axpy(w, &level.h)?;
            b = b.axpy(w, &level.k)?;
            probes.push(level.image.scale(1.0 / level.image.norm()));
        }
        Ok(PartialSums { a, b, probes })
    }

    /// `∫ ∇f_n·∇A(da ∧ db)` with `(a, b)` summed over every completed level.
    pub fn pairing_growth(&self, n: usize) -> Result<PairingReport> {
        if n == 0 {
            return Ok(PairingReport {
                n,
                value: 0.0,
                c_a: self.c_a,
            });
        }
        let sums = self.partial_sums(self.levels.len())?;
        let target = Image::of(&sums.a.wedge(&sums.b)?, self.config.k_max)?;
        let value = sums
            .probes
            .iter()
            .take(n)
            .enumerate()
            .map(|(i, p)| Ok(0.5f64.powi(i as i32 + 1) * p.inner(&target)?))
            .sum::<Result<f64>>()?;
        Ok(PairingReport {
            n,
            value,
            c_a: self.c_a,
        })
    }

    /// Pairing values for `n = 1..=depth` from one solve of `A(da ∧ db)`.
    pub fn pairing_table(&self) -> Result<Vec<PairingReport>> {
        let depth = self.levels.len();
        if depth == 0 {
            return Ok(Vec::new());
        }
        let sums = self.partial_sums(depth)?;
        let target = Image::of(&sums.a.wedge(&sums.b)?, self.config.k_max)?;
        let mut value = 0.0;
        let mut out = Vec::with_capacity(depth);
        for (i, p) in sums.probes.iter().enumerate() {
            value += 0.5f64.powi(i as i32 + 1) * p.inner(&target)?;
            out.push(PairingReport {
                n: i + 1,
                value,
                c_a: self.c_a,
            });
        }
        Ok(out)
    }

    /// Per-level report table.
    ///
    /// Columns: `level,epsilon,projected_norm,image_norm,remainder_l2,lambda,c_n,
    /// threshold_literal,threshold_scaled,alphas,pairing`, alphas joined by `;`.
    pub fn write_report<W: Write>(
        &self,
        mut out: W,
        pairings: &[PairingReport],
    ) -> std::io::Result<()> {
        writeln!(
            out,
            "level,epsilon,projected_norm,image_norm,remainder_l2,lambda,c_n,threshold_literal,threshold_scaled,alphas,pairing"
        )?;
        for (i, l) in self.levels.iter().enumerate() {
            let alphas: Vec<String> = l.alphas.iter().map(|a| format!("{a:.16e}")).collect();
            let pairing = pairings
                .iter()
                .find(|p| p.n == i + 1)
                .map_or(f64::NAN, |p| p.value);
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
                i + 1,
                l.epsilon,
                l.projected_norm,
                l.checks.image_norm,
                l.checks.remainder_l2,
                l.lambda,
                l.c_n,
                l.threshold_literal,
                l.threshold_scaled,
                alphas.join(";"),
                pairing
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PartialSums<G> {
    pub a: FieldPair<G>,
    pub b: FieldPair<G>,
    pub probes: Vec<Image<G>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingReport {
    pub n: usize,
    pub value: f64,
    pub c_a: f64,
}

impl PairingReport {
    /// `n − 3 C_A`
    pub fn lower_bound(&self) -> f64 {
        self.n as f64 - 3.0 * self.c_a
    }
}

/// Result of a full run: the levels built and the reason for stopping early, if any.
#[derive(Debug)]
pub struct GlueRun<G> {
    pub state: GlueState<G>,
    pub stopped: Option<LabError>,
}

pub fn run_glue<G: Quadrature>(grid: Arc<G>, config: GlueConfig) -> Result<GlueRun<G>> {
    let mut state = GlueState::new(grid, config)?;
    let mut stopped = None;
    while state.level() < state.config.depth {
        match state.glue_step() {
            Ok(()) => {}
            Err(e @ LabError::LadderExhausted { .. }) => {
                stopped = Some(e);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    state.measure_solver_norm()?;
    Ok(GlueRun { state, stopped })
}
