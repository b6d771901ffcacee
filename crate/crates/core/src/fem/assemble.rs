//! Assembly of the Robin operator `α K + β T + γ M` on a [`TriMesh`].

use crate::error::{LabError, Result};
use crate::fem::mesh::{Marker, TriMesh};
use crate::mobius::Complex2;

/// Coefficients of `α ∂_ν u + β ∂_τ u + γ u = g` on `E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl RobinCoeffs {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0)
            || !beta.is_finite()
            || !(gamma >= 0.0)
            || !alpha.is_finite()
            || !gamma.is_finite()
        {
            return Err(LabError::InvalidParameter(format!(
                "Robin coefficients need alpha > 0, gamma >= 0; got ({alpha}, {beta}, {gamma})"
            )));
        }
        Ok(Self { alpha, beta, gamma })
    }
}

impl Default for RobinCoeffs {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.0,
            gamma: 0.0,
        }
    }
}

/// Square sparse matrix in merged coordinate form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    pub n: usize,
    /// `(row, col, value)`, sorted and free of duplicates
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        Self { n, entries: merged }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(r, c, v)| x[r] * v * x[c]).sum()
    }

    /// `Σ s_i A_i` over matrices of equal size.
    pub fn combine(parts: &[(f64, &SparseMatrix)]) -> Self {
        let n = parts.first().map_or(0, |p| p.1.n);
        let entries = parts
            .iter()
            .filter(|(s, _)| *s != 0.0)
            .flat_map(|(s, m)| m.entries.iter().map(move |&(r, c, v)| (r, c, s * v)))
            .collect();
        Self::from_triplets(n, entries)
    }
}

/// Separately assembled blocks of the Robin operator.
#[derive(Debug, Clone)]
pub struct RobinOperator {
    pub coeffs: RobinCoeffs,
    /// `∫ ∇φ_i·∇φ_j`
    pub stiffness: SparseMatrix,
    /// `∫_E (∂_τ φ_j) φ_i`
    pub tangential: SparseMatrix,
    /// `∫_E φ_i φ_j`
    pub boundary_mass: SparseMatrix,
    pub constrained: Vec<bool>,
}

/// P1 gradients `∇φ_k` on triangle `t` and its area.
pub(crate) fn p1_gradients(mesh: &TriMesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let tri = mesh.triangles[t];
    let p = tri.map(|i| mesh.vertices[i]);
    let area = mesh.signed_area(t);
    let mut grads = [[0.0; 2]; 3];
    for k in 0..3 {
        // ∇φ_k = rot(p_{k+2} − p_{k+1}) / 2A, pointing from the opposite edge toward p_k
        let e = p[(k + 2) % 3] - p[(k + 1) % 3];
        grads[k] = [-e.im / (2.0 * area), e.re / (2.0 * area)];
    }
    (grads, area)
}

pub fn assemble(mesh: &TriMesh, coeffs: RobinCoeffs) -> RobinOperator {
    let n = mesh.n_vertices();
    let mut stiff = Vec::with_capacity(9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (g, area) = p1_gradients(mesh, t);
        for a in 0..3 {
            for b in 0..3 {
                stiff.push((
                    tri[a],
                    tri[b],
                    area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]),
                ));
            }
        }
    }
    let mut tangential = Vec::new();
    let mut mass = Vec::new();
    for e in mesh
        .boundary_edges
        .iter()
        .filter(|e| e.marker == Marker::Robin)
    {
        let (p, q) = (e.from, e.to);
        // constant ∂_τ u = (u_q − u_p)/L paired with the midpoint rule on ψ
        tangential.extend([(p, p, -0.5), (p, q, 0.5), (q, p, -0.5), (q, q, 0.5)]);
        let l = mesh.edge_length(e);
        mass.extend([
            (p, p, l / 3.0),
            (p, q, l / 6.0),
            (q, p, l / 6.0),
            (q, q, l / 3.0),
        ]);
    }
    RobinOperator {
        coeffs,
        stiffness: SparseMatrix::from_triplets(n, stiff),
        tangential: SparseMatrix::from_triplets(n, tangential),
        boundary_mass: SparseMatrix::from_triplets(n, mass),
        constrained: mesh.constrained().to_vec(),
    }
}

impl RobinOperator {
    /// `α K + β T + γ M` without constraints.
    pub fn matrix(&self) -> SparseMatrix {
        let c = self.coeffs;
        SparseMatrix::combine(&[
            (c.alpha, &self.stiffness),
            (c.beta, &self.tangential),
            (c.gamma, &self.boundary_mass),
        ])
    }

    /// `⟨B x, x⟩` for the full operator.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matrix().quadratic_form(x)
    }

    /// Largest `|T_ij + T_ji|` over pairs of free vertices.
    pub fn skew_defect(&self) -> f64 {
        let mut dense = std::collections::HashMap::new();
        for &(r, c, v) in &self.tangential.entries {
            if !self.constrained[r] && !self.constrained[c] {
                *dense.entry((r.min(c), r.max(c))).or_insert(0.0) +=
                    if r == c { 2.0 * v } else { v };
            }
        }
        dense.values().fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// Seven-point degree-five rule on the reference triangle: barycentric points and weights summing to one.
pub(crate) const TRI_RULE: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_769_82;
    const B1: f64 = 0.470_142_064_105_115_1;
    const A2: f64 = 0.797_426_985_353_087_3;
    const B2: f64 = 0.101_286_507_323_456_3;
    const W1: f64 = 0.132_394_152_788_506_2;
    const W2: f64 = 0.125_939_180_544_827_2;
    const C: f64 = 1.0 / 3.0;
    [
        ([C, C, C], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

pub(crate) fn quadrature_point(mesh: &TriMesh, t: usize, bary: [f64; 3]) -> Complex2 {
    let tri = mesh.triangles[t];
    mesh.vertices[tri[0]] * bary[0]
        + mesh.vertices[tri[1]] * bary[1]
        + mesh.vertices[tri[2]] * bary[2]
}

/// Load vector `∫ f φ_i` with the seven-point rule.
pub fn load_vector(mesh: &TriMesh, f: &(dyn Fn(Complex2) -> f64 + Sync)) -> Vec<f64> {
    let mut load = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = mesh.signed_area(t);
        for &(bary, w) in &TRI_RULE {
            let value = f(quadrature_point(mesh, t, bary)) * w * area;
            for k in 0..3 {
                load[tri[k]] += value * bary[k];
            }
        }
    }
    load
}

/// `∫_E g φ_i` with three-point Gauss on each edge.
pub fn boundary_load(mesh: &TriMesh, g: &dyn Fn(Complex2) -> f64) -> Vec<f64> {
    const NODES: [(f64, f64); 3] = [
        (0.112_701_665_379_258_3, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.887_298_334_620_741_7, 5.0 / 18.0),
    ];
    let mut load = vec![0.0; mesh.n_vertices()];
    for e in mesh
        .boundary_edges
        .iter()
        .filter(|e| e.marker == Marker::Robin)
    {
        let (p, q) = (mesh.vertices[e.from], mesh.vertices[e.to]);
        let l = (q - p).norm();
        for &(s, w) in &NODES {
            let value = g(p + (q - p) * s) * w * l;
            load[e.from] += value * (1.0 - s);
            load[e.to] += value * s;
        }
    }
    load
}
