//! Möbius bubbles on the unit disc.
//!
//! The family `m_ε(z) = (z − iε)/(z + iε)` maps the upper half-plane onto the
//! unit disc. Multiplied by a radial cutoff it produces a pair of compactly
//! supported fields `a = φ Re(m_ε − 1)`, `b = φ Im(m_ε − 1)` whose Jacobian
//! concentrates at the boundary point `−e₂` of the disc as `ε → 0`.
//!
//! Public evaluation happens in disc coordinates `w`; the half-plane
//! coordinate is `z = w + i`, so the concentration point `z = 0` is `w = −i`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::grid::{GradField, Quadrature, ScalarField};

/// A point of the plane, with `i = e₂`.
pub type Complex2 = Complex64;

/// Default support radius of the cutoff.
pub const DEFAULT_R0: f64 = 0.5;
/// Default plateau fraction of the cutoff.
pub const DEFAULT_CUTOFF_INNER: f64 = 0.5;

/// The concentration point `−e₂` in disc coordinates.
pub const CONCENTRATION_POINT: Complex2 = Complex2::new(0.0, -1.0);

/// Parameters of one concentrating field pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleSpec {
    pub epsilon: f64,
    pub r0: f64,
    pub cutoff_inner: f64,
}

impl BubbleSpec {
    /// Bubble with the default cutoff (`r0 = 1/2`, plateau on `|z| ≤ r0/2`).
    pub fn new(epsilon: f64) -> Result<Self> {
        Self::with_cutoff(epsilon, DEFAULT_R0, DEFAULT_CUTOFF_INNER)
    }

    pub fn with_cutoff(epsilon: f64, r0: f64, cutoff_inner: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(LabError::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(r0 > 0.0 && r0 < 2.0) {
            return Err(LabError::InvalidParameter(format!(
                "support radius r0 must lie in (0, 2), got {r0}"
            )));
        }
        if !(cutoff_inner > 0.0 && cutoff_inner < 1.0) {
            return Err(LabError::InvalidParameter(format!(
                "cutoff_inner must lie in (0, 1), got {cutoff_inner}"
            )));
        }
        Ok(Self {
            epsilon,
            r0,
            cutoff_inner,
        })
    }

    /// Radius of the plateau where the cutoff is identically one.
    pub fn plateau_radius(&self) -> f64 {
        self.cutoff_inner * self.r0
    }

    /// Whether the disc point `w` lies in the closed support ball `B_{r0}(−e₂)`.
    pub fn in_support(&self, w: Complex2) -> bool {
        (w - CONCENTRATION_POINT).norm() < self.r0
    }
}

/// Evaluates `m_ε(z)` and `m'_ε(z) = 2iε/(z + iε)²`.
pub fn mobius_eval(z: Complex2, epsilon: f64) -> Result<(Complex2, Complex2)> {
    let shifted = z + Complex2::new(0.0, epsilon);
    if shifted.norm() <= f64::MIN_POSITIVE {
        return Err(LabError::Domain(format!(
            "z = {z} is the pole -i*epsilon of the Möbius map"
        )));
    }
    let value = (z - Complex2::new(0.0, epsilon)) / shifted;
    let derivative = Complex2::new(0.0, 2.0 * epsilon) / (shifted * shifted);
    Ok((value, derivative))
}

/// Inverse map `m⁻¹_ε(w) = iε (w + 1)/(1 − w)`.
pub fn mobius_inverse(w: Complex2, epsilon: f64) -> Result<Complex2> {
    let denom = Complex2::new(1.0, 0.0) - w;
    if denom.norm() <= f64::MIN_POSITIVE {
        return Err(LabError::Domain(
            "w = 1 is mapped to the point at infinity".into(),
        ));
    }
    Ok(Complex2::new(0.0, epsilon) * (w + 1.0) / denom)
}

/// `|m'_ε(z)|`, defined for every `z` off the pole.
pub fn mobius_derivative_modulus(z: Complex2, epsilon: f64) -> f64 {
    2.0 * epsilon / (z + Complex2::new(0.0, epsilon)).norm_sqr()
}

fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else if t >= 1.0 {
        (1.0, 0.0)
    } else {
        let value = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let slope = 30.0 * t * t * (1.0 - t) * (1.0 - t);
        (value, slope)
    }
}

/// Radial quintic cutoff in `|z|`: one on the plateau, zero outside `r0`.
///
/// Returns the value and the exact gradient with respect to `z`.
pub fn cutoff(z: Complex2, spec: &BubbleSpec) -> (f64, [f64; 2]) {
    let radius = z.norm();
    let inner = spec.plateau_radius();
    let width = spec.r0 - inner;
    let (value, slope) = smoothstep((spec.r0 - radius) / width);
    if slope == 0.0 || radius == 0.0 {
        return (value, [0.0, 0.0]);
    }
    let d_dr = -slope / width;
    (value, [d_dr * z.re / radius, d_dr * z.im / radius])
}

/// Point values of the bubble pair and its gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BubbleSample {
    pub a: f64,
    pub b: f64,
    pub grad_a: [f64; 2],
    pub grad_b: [f64; 2],
    /// `φ²|m'_ε|²`
    pub concentrating: f64,
    /// cross-term generated by the cutoff gradient
    pub remainder: f64,
}

impl BubbleSample {
    pub fn jacobian(&self) -> f64 {
        self.concentrating + self.remainder
    }

    /// Frobenius norm `|∇V|` of the field pair.
    pub fn grad_norm(&self) -> f64 {
        (self.grad_a[0].powi(2)
            + self.grad_a[1].powi(2)
            + self.grad_b[0].powi(2)
            + self.grad_b[1].powi(2))
        .sqrt()
    }
}

fn cross(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

/// Evaluates the bubble at the disc point `w` (half-plane point `z = w + i`).
pub fn bubble_at(spec: &BubbleSpec, w: Complex2) -> BubbleSample {
    let z = w + Complex2::new(0.0, 1.0);
    let (phi, grad_phi) = cutoff(z, spec);
    if phi == 0.0 {
        return BubbleSample {
            a: 0.0,
            b: 0.0,
            grad_a: [0.0; 2],
            grad_b: [0.0; 2],
            concentrating: 0.0,
            remainder: 0.0,
        };
    }
    // z stays in the closed upper half-plane for disc points, away from -iε.
    let (m, dm) = match mobius_eval(z, spec.epsilon) {
        Ok(pair) => pair,
        Err(_) => unreachable!("disc points never hit the pole"),
    };
    let re = m.re - 1.0;
    let im = m.im;
    // Cauchy-Riemann: ∇Re m = (Re m', −Im m'), ∇Im m = (Im m', Re m').
    let grad_re = [dm.re, -dm.im];
    let grad_im = [dm.im, dm.re];
    let grad_a = [
        re * grad_phi[0] + phi * grad_re[0],
        re * grad_phi[1] + phi * grad_re[1],
    ];
    let grad_b = [
        im * grad_phi[0] + phi * grad_im[0],
        im * grad_phi[1] + phi * grad_im[1],
    ];
    let concentrating = phi * phi * dm.norm_sqr();
    let remainder = phi * (re * cross(grad_phi, grad_im) + im * cross(grad_re, grad_phi));
    BubbleSample {
        a: phi * re,
        b: phi * im,
        grad_a,
        grad_b,
        concentrating,
        remainder,
    }
}

/// Sampled bubble pair on a grid.
#[derive(Debug, Clone)]
pub struct BubbleFields<G> {
    pub a: ScalarField<G>,
    pub b: ScalarField<G>,
    pub grad_a: GradField<G>,
    pub grad_b: GradField<G>,
}

impl<G> BubbleFields<G> {
    /// Pointwise Frobenius norm `|∇V|`.
    pub fn grad_norm(&self) -> ScalarField<G> {
        let values = self
            .grad_a
            .vectors()
            .iter()
            .zip(self.grad_b.vectors())
            .map(|(ga, gb)| (ga[0] * ga[0] + ga[1] * ga[1] + gb[0] * gb[0] + gb[1] * gb[1]).sqrt())
            .collect();
        ScalarField::from_values_unchecked(self.a.grid_arc().clone(), values)
    }
}

/// Samples `a`, `b` and their analytic gradients on every node of `grid`.
pub fn bubble_fields<G: Quadrature>(spec: &BubbleSpec, grid: &Arc<G>) -> BubbleFields<G> {
    let samples: Vec<BubbleSample> = grid.points().iter().map(|&w| bubble_at(spec, w)).collect();
    let a = samples.iter().map(|s| s.a).collect();
    let b = samples.iter().map(|s| s.b).collect();
    let grad_a = samples.iter().map(|s| s.grad_a).collect();
    let grad_b = samples.iter().map(|s| s.grad_b).collect();
    BubbleFields {
        a: ScalarField::from_values_unchecked(grid.clone(), a),
        b: ScalarField::from_values_unchecked(grid.clone(), b),
        grad_a: GradField::from_vectors_unchecked(grid.clone(), grad_a),
        grad_b: GradField::from_vectors_unchecked(grid.clone(), grad_b),
    }
}

/// Jacobian `da ∧ db` split into the concentrating density and the cutoff cross-term.
#[derive(Debug, Clone)]
pub struct JacobianSplit<G> {
    pub concentrating: ScalarField<G>,
    pub remainder: ScalarField<G>,
}

impl<G> JacobianSplit<G> {
    pub fn total(&self) -> ScalarField<G> {
        let values = self
            .concentrating
            .values()
            .iter()
            .zip(self.remainder.values())
            .map(|(c, r)| c + r)
            .collect();
        ScalarField::from_values_unchecked(self.concentrating.grid_arc().clone(), values)
    }
}

pub fn jacobian_density<G: Quadrature>(spec: &BubbleSpec, grid: &Arc<G>) -> JacobianSplit<G> {
    let (concentrating, remainder): (Vec<f64>, Vec<f64>) = grid
        .points()
        .iter()
        .map(|&w| {
            let s = bubble_at(spec, w);
            (s.concentrating, s.remainder)
        })
        .unzip();
    JacobianSplit {
        concentrating: ScalarField::from_values_unchecked(grid.clone(), concentrating),
        remainder: ScalarField::from_values_unchecked(grid.clone(), remainder),
    }
}

/// Radius of the superlevel disc `{|m'_ε| ≥ t} = B_{r(t)}(−iε) ∩ H`, `2ε/r² = t`.
pub fn superlevel_radius(t: f64, epsilon: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(LabError::Domain(format!(
            "level t must be positive, got {t}"
        )));
    }
    Ok((2.0 * epsilon / t).sqrt())
}

/// Exact area of `{z ∈ H : |m'_ε(z)| ≥ t}`: the part of `B_{r(t)}(−iε)` above the real axis.
///
/// Non-positive levels return `+∞` (the whole half-plane).
pub fn exact_distribution(t: f64, epsilon: f64) -> f64 {
    let Ok(r) = superlevel_radius(t, epsilon) else {
        return f64::INFINITY;
    };
    if r <= epsilon {
        return 0.0;
    }
    r * r * (epsilon / r).acos() - epsilon * (r * r - epsilon * epsilon).sqrt()
}

/// Upper bound `π r(t)² = 2πε/t` on the distribution function.
pub fn distribution_bound(t: f64, epsilon: f64) -> f64 {
    2.0 * PI * epsilon / t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex2 {
        Complex2::new(re, im)
    }

    #[test]
    fn mobius_zero_at_i_epsilon() {
        let (value, _) = mobius_eval(c(0.0, 0.3), 0.3).unwrap();
        assert!(value.norm() < 1e-15);
    }

    #[test]
    fn mobius_at_origin_hits_derivative_bound() {
        let eps = 0.05;
        let (value, derivative) = mobius_eval(c(0.0, 0.0), eps).unwrap();
        assert!((value - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((derivative.norm() - 2.0 / eps).abs() < 1e-12);
    }

    #[test]
    fn mobius_far_field_is_nearly_constant() {
        let (value, derivative) = mobius_eval(c(100.0, 0.0), 0.01).unwrap();
        assert!((value - c(1.0, 0.0)).norm() < 3e-4);
        assert!(derivative.norm() < 3e-6);
    }

    #[test]
    fn mobius_pole_is_domain_error() {
        assert!(matches!(
            mobius_eval(c(0.0, -0.2), 0.2),
            Err(LabError::Domain(_))
        ));
    }

    #[test]
    fn inverse_special_points() {
        let eps = 0.07;
        assert!((mobius_inverse(c(0.0, 0.0), eps).unwrap() - c(0.0, eps)).norm() < 1e-15);
        assert!(mobius_inverse(c(-1.0, 0.0), eps).unwrap().norm() < 1e-15);
        assert!(mobius_inverse(c(1.0, 0.0), eps).is_err());
    }

    #[test]
    fn cutoff_plateau_support_and_midpoint() {
        let spec = BubbleSpec::new(0.1).unwrap();
        assert_eq!(cutoff(c(0.0, 0.0), &spec), (1.0, [0.0, 0.0]));
        assert_eq!(cutoff(c(0.5, 0.0), &spec), (0.0, [0.0, 0.0]));
        assert_eq!(cutoff(c(0.0, 0.9), &spec), (0.0, [0.0, 0.0]));
        let (mid, grad) = cutoff(c(0.375, 0.0), &spec);
        assert!((mid - 0.5).abs() < 1e-15);
        // slope of the quintic at t = 1/2 is 15/8 over a width of 1/4
        assert!((grad[0] + 7.5).abs() < 1e-12);
    }

    #[test]
    fn cutoff_gradient_matches_finite_differences() {
        let spec = BubbleSpec::new(0.1).unwrap();
        let h = 1e-6;
        for &(x, y) in &[(0.3, 0.1), (-0.2, 0.25), (0.1, -0.35)] {
            let (_, g) = cutoff(c(x, y), &spec);
            let fx = (cutoff(c(x + h, y), &spec).0 - cutoff(c(x - h, y), &spec).0) / (2.0 * h);
            let fy = (cutoff(c(x, y + h), &spec).0 - cutoff(c(x, y - h), &spec).0) / (2.0 * h);
            assert!((g[0] - fx).abs() < 1e-7 && (g[1] - fy).abs() < 1e-7);
        }
    }

    #[test]
    fn bubble_vanishes_outside_support() {
        let spec = BubbleSpec::new(0.1).unwrap();
        let s = bubble_at(&spec, c(0.6, 0.0));
        assert_eq!(
            (s.a, s.b, s.grad_a, s.grad_b),
            (0.0, 0.0, [0.0; 2], [0.0; 2])
        );
    }

    #[test]
    fn bubble_at_concentration_point() {
        let spec = BubbleSpec::new(0.01).unwrap();
        let s = bubble_at(&spec, CONCENTRATION_POINT);
        assert!((s.a + 2.0).abs() < 1e-14);
        assert!(s.b.abs() < 1e-14);
    }

    #[test]
    fn plateau_point_has_no_remainder() {
        let spec = BubbleSpec::new(0.02).unwrap();
        let w = c(0.05, -0.9);
        let s = bubble_at(&spec, w);
        let z = w + c(0.0, 1.0);
        let expected = mobius_derivative_modulus(z, 0.02).powi(2);
        assert_eq!(s.remainder, 0.0);
        assert!((s.concentrating - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn superlevel_radius_values() {
        let eps = 0.2;
        assert!((superlevel_radius(2.0 / eps, eps).unwrap() - eps).abs() < 1e-15);
        assert!((superlevel_radius(2.0 * eps, eps).unwrap() - 1.0).abs() < 1e-15);
        let r1 = superlevel_radius(3.0, eps).unwrap();
        let r4 = superlevel_radius(12.0, eps).unwrap();
        assert!((r1 / r4 - 2.0).abs() < 1e-14);
        assert!(superlevel_radius(0.0, eps).is_err());
        assert!(superlevel_radius(-1.0, eps).is_err());
    }

    #[test]
    fn exact_distribution_values() {
        assert_eq!(exact_distribution(2.0 / 0.1, 0.1), 0.0);
        assert_eq!(exact_distribution(25.0, 0.1), 0.0);
        let area = exact_distribution(1.0, 1.0);
        assert!((area - (PI / 2.0 - 1.0)).abs() < 1e-14);
        for &t in &[0.5, 3.0, 10.0] {
            assert!(exact_distribution(t, 0.1) <= distribution_bound(t, 0.1));
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(BubbleSpec::new(0.0).is_err());
        assert!(BubbleSpec::with_cutoff(0.1, 2.5, 0.5).is_err());
        assert!(BubbleSpec::with_cutoff(0.1, 0.5, 1.0).is_err());
    }
}
