//! Triangulations of the unit disc with marked boundary arcs.

use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use delaunator::{triangulate, Point};

use crate::error::{LabError, Result};
use crate::mobius::{Complex2, CONCENTRATION_POINT};

/// Open angular intervals whose union is the Robin part `E` of the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryArcs {
    arcs: Vec<(f64, f64)>,
}

fn wrap(theta: f64) -> f64 {
    theta.rem_euclid(TAU)
}

impl BoundaryArcs {
    pub fn new(arcs: Vec<(f64, f64)>) -> Result<Self> {
        if arcs.is_empty() {
            return Err(LabError::InvalidParameter(
                "E needs at least one arc".into(),
            ));
        }
        for &(a, b) in &arcs {
            if !(a.is_finite() && b.is_finite() && b > a && b - a < TAU) {
                return Err(LabError::InvalidParameter(format!(
                    "arc ({a}, {b}) is not a proper interval"
                )));
            }
        }
        let total: f64 = arcs.iter().map(|(a, b)| b - a).sum();
        if total >= TAU {
            return Err(LabError::InvalidParameter(format!(
                "arcs cover measure {total} >= 2π"
            )));
        }
        for (i, &(a, b)) in arcs.iter().enumerate() {
            for &(c, d) in &arcs[i + 1..] {
                // disjoint mod 2π iff each start lies outside the other interval
                let inside = |t: f64, lo: f64, hi: f64| {
                    let s = wrap(t - lo);
                    s > 0.0 && s < hi - lo
                };
                if inside(c, a, b) || inside(a, c, d) || wrap(a - c) == 0.0 {
                    return Err(LabError::InvalidParameter(format!(
                        "arcs ({a}, {b}) and ({c}, {d}) overlap"
                    )));
                }
            }
        }
        Ok(Self { arcs })
    }

    /// The single arc `(−3π/4, −π/4)` centred on `−e₂`.
    pub fn default_arc() -> Self {
        Self {
            arcs: vec![(-0.75 * PI, -0.25 * PI)],
        }
    }

    pub fn arcs(&self) -> &[(f64, f64)] {
        &self.arcs
    }

    pub fn measure(&self) -> f64 {
        self.arcs.iter().map(|(a, b)| b - a).sum()
    }

    /// Whether `theta` lies in the open set `E`.
    pub fn contains(&self, theta: f64) -> bool {
        self.arcs.iter().any(|&(a, b)| {
            let s = wrap(theta - a);
            s > 0.0 && s < b - a
        })
    }

    fn endpoints(&self) -> Vec<f64> {
        self.arcs
            .iter()
            .flat_map(|&(a, b)| [wrap(a), wrap(b)])
            .collect()
    }
}

/// Boundary condition carried by a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Marker {
    /// Robin part `E`
    Robin,
    Dirichlet,
}

/// Boundary edge traversed counterclockwise, `from → to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub from: usize,
    pub to: usize,
    pub marker: Marker,
}

/// Local mesh size `s(p) = min(h, max(h_min, c·|p + e₂|))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sizing {
    pub h: f64,
    pub h_min: f64,
    pub rate: f64,
}

impl Sizing {
    pub fn uniform(h: f64) -> Self {
        Self {
            h,
            h_min: h,
            rate: 1.0,
        }
    }

    /// Grading toward `−e₂` with the default rate `0.3`.
    pub fn graded(h: f64, h_min: f64) -> Self {
        Self {
            h,
            h_min,
            rate: 0.3,
        }
    }

    pub fn at(&self, p: Complex2) -> f64 {
        self.size_at_distance((p - CONCENTRATION_POINT).norm())
    }

    fn size_at_distance(&self, rho: f64) -> f64 {
        self.h.min(self.h_min.max(self.rate * rho))
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0
            && self.h <= 0.5
            && self.h_min > 0.0
            && self.h_min <= self.h
            && self.rate > 0.0)
        {
            return Err(LabError::InvalidParameter(format!(
                "invalid mesh sizing {self:?}"
            )));
        }
        Ok(())
    }
}

/// Conforming P1 triangulation of a polygonal disc.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Complex2>,
    /// counterclockwise vertex triples
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// longest edge
    pub h: f64,
    /// true for vertices on a Dirichlet edge, including the arc endpoints
    constrained: Vec<bool>,
    on_boundary: Vec<bool>,
}

impl TriMesh {
    fn build(
        vertices: Vec<Complex2>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let n = vertices.len();
        let mut constrained = vec![false; n];
        let mut on_boundary = vec![false; n];
        for e in &boundary_edges {
            on_boundary[e.from] = true;
            on_boundary[e.to] = true;
            if e.marker == Marker::Dirichlet {
                constrained[e.from] = true;
                constrained[e.to] = true;
            }
        }
        let mut h: f64 = 0.0;
        for t in &triangles {
            for k in 0..3 {
                h = h.max((vertices[t[k]] - vertices[t[(k + 1) % 3]]).norm());
            }
        }
        let mesh = Self {
            vertices,
            triangles,
            boundary_edges,
            h,
            constrained,
            on_boundary,
        };
        if let Some(t) = (0..mesh.triangles.len()).find(|&t| mesh.signed_area(t) <= 0.0) {
            return Err(LabError::Mesh(format!(
                "triangle {t} has non-positive area"
            )));
        }
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * ((b - a).re * (c - a).im - (b - a).im * (c - a).re)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Vertices held at zero (or at prescribed data) in the solves.
    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn on_boundary(&self) -> &[bool] {
        &self.on_boundary
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        (self.vertices[e.to] - self.vertices[e.from]).norm()
    }

    /// Total length of the marked boundary edges.
    pub fn marked_length(&self, marker: Marker) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|e| e.marker == marker)
            .map(|e| self.edge_length(e))
            .sum()
    }

    /// Smallest interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut worst = PI;
        for t in &self.triangles {
            for k in 0..3 {
                let p = self.vertices[t[k]];
                let u = self.vertices[t[(k + 1) % 3]] - p;
                let v = self.vertices[t[(k + 2) % 3]] - p;
                worst = worst.min((u.conj() * v).arg().abs());
            }
        }
        worst
    }

    /// Red refinement: every triangle splits into four, boundary midpoints are
    /// pushed onto the unit circle.
    pub fn refine(&self) -> Result<Self> {
        use std::collections::HashMap;
        let mut vertices = self.vertices.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let boundary: std::collections::HashSet<(usize, usize)> = self
            .boundary_edges
            .iter()
            .map(|e| (e.from.min(e.to), e.from.max(e.to)))
            .collect();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Complex2>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let mut m = 0.5 * (vertices[a] + vertices[b]);
                if boundary.contains(&key) {
                    m /= m.norm();
                }
                vertices.push(m);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let mut edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for e in &self.boundary_edges {
            let m = midpoint(e.from, e.to, &mut vertices);
            edges.push(BoundaryEdge {
                from: e.from,
                to: m,
                marker: e.marker,
            });
            edges.push(BoundaryEdge {
                from: m,
                to: e.to,
                marker: e.marker,
            });
        }
        Self::build(vertices, triangles, edges)
    }

    /// Plain-text snapshot.
    ///
    /// Sections, one record per line:
    /// `v index x y`, `t index v0 v1 v2` (counterclockwise),
    /// `e from to marker` with marker `robin` or `dirichlet`.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# vertices: v index x y")?;
        for (i, p) in self.vertices.iter().enumerate() {
            writeln!(out, "v {i} {:.17e} {:.17e}", p.re, p.im)?;
        }
        writeln!(out, "# triangles: t index v0 v1 v2")?;
        for (i, t) in self.triangles.iter().enumerate() {
            writeln!(out, "t {i} {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(out, "# boundary edges: e from to marker")?;
        for e in &self.boundary_edges {
            let marker = match e.marker {
                Marker::Robin => "robin",
                Marker::Dirichlet => "dirichlet",
            };
            writeln!(out, "e {} {} {marker}", e.from, e.to)?;
        }
        Ok(())
    }
}

/// Angles in `[θ_a, θ_b]` equidistributed in `∫ dθ/s`; endpoints included.
fn distribute_boundary(theta_a: f64, theta_b: f64, sizing: &Sizing) -> Vec<f64> {
    let samples = 64 + ((theta_b - theta_a) / sizing.h_min.min(0.01)).ceil() as usize;
    let dt = (theta_b - theta_a) / samples as f64;
    let mut cumulative = vec![0.0];
    for k in 0..samples {
        let t = theta_a + (k as f64 + 0.5) * dt;
        let last = *cumulative.last().unwrap_or(&0.0);
        cumulative.push(last + dt / sizing.at(Complex2::from_polar(1.0, t)));
    }
    let total = cumulative[samples];
    let count = total.ceil().max(1.0) as usize;
    let mut out = vec![theta_a];
    let mut k = 0;
    for j in 1..count {
        let target = total * j as f64 / count as f64;
        while cumulative[k + 1] < target {
            k += 1;
        }
        let frac = (target - cumulative[k]) / (cumulative[k + 1] - cumulative[k]);
        out.push(theta_a + (k as f64 + frac) * dt);
    }
    out.push(theta_b);
    out
}

/// Triangulates the disc with local size `sizing`, making the arc endpoints vertices.
pub fn mesh_disc_sized(sizing: Sizing, arcs: &BoundaryArcs) -> Result<TriMesh> {
    sizing.validate()?;
    // boundary breakpoints: arc endpoints plus the concentration angle when graded
    let mut breaks = arcs.endpoints();
    if sizing.h_min < sizing.h {
        breaks.push(1.5 * PI);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut boundary_angles = Vec::new();
    for i in 0..breaks.len() {
        let a = breaks[i];
        let b = if i + 1 < breaks.len() {
            breaks[i + 1]
        } else {
            breaks[0] + TAU
        };
        let mut piece = distribute_boundary(a, b, &sizing);
        piece.pop();
        boundary_angles.extend(piece);
    }
    let nb = boundary_angles.len();
    let mut vertices: Vec<Complex2> = boundary_angles
        .iter()
        .map(|&t| Complex2::from_polar(1.0, t))
        .collect();

    // interior points on arcs of circles centred at −e₂
    let mut rho = sizing.h_min;
    while rho < 2.0 {
        let s = sizing.size_at_distance(rho);
        // the circle |x + e₂| = ρ meets the disc for sin φ > ρ/2
        let phi_lo = (0.5 * rho).asin();
        let span = PI - 2.0 * phi_lo;
        let count = ((rho * span) / s).round().max(1.0) as usize;
        for k in 0..count {
            let phi = phi_lo + span * (k as f64 + 0.5) / count as f64;
            let p = CONCENTRATION_POINT + Complex2::from_polar(rho, phi);
            if p.norm() < 1.0 - 0.5 * s {
                vertices.push(p);
            }
        }
        rho += s;
    }

    let points: Vec<Point> = vertices
        .iter()
        .map(|p| Point { x: p.re, y: p.im })
        .collect();
    let tri = triangulate(&points);
    let mut triangles = Vec::with_capacity(tri.triangles.len() / 3);
    for t in tri.triangles.chunks_exact(3) {
        let [a, b, c] = [t[0], t[1], t[2]];
        let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
        let cross = (pb - pa).re * (pc - pa).im - (pb - pa).im * (pc - pa).re;
        if cross.abs() < 1e-14 * (pb - pa).norm_sqr().max((pc - pa).norm_sqr()) {
            continue;
        }
        triangles.push(if cross > 0.0 { [a, b, c] } else { [a, c, b] });
    }

    let mut boundary_edges = Vec::with_capacity(nb);
    for i in 0..nb {
        let j = (i + 1) % nb;
        let (a, mut b) = (boundary_angles[i], boundary_angles[j]);
        if b <= a {
            b += TAU;
        }
        let marker = if arcs.contains(0.5 * (a + b)) {
            Marker::Robin
        } else {
            Marker::Dirichlet
        };
        boundary_edges.push(BoundaryEdge {
            from: i,
            to: j,
            marker,
        });
    }
    for &(a, b) in arcs.arcs() {
        let inside = boundary_angles
            .iter()
            .filter(|&&t| {
                let s = wrap(t - a);
                s > 0.0 && s < b - a - 1e-12
            })
            .count();
        if inside < 1 {
            return Err(LabError::Mesh(format!(
                "arc ({a}, {b}) is thinner than the local mesh size"
            )));
        }
    }
    TriMesh::build(vertices, triangles, boundary_edges)
}

/// Quasi-uniform triangulation with size `h`.
pub fn mesh_disc(h: f64, arcs: &BoundaryArcs) -> Result<TriMesh> {
    mesh_disc_sized(Sizing::uniform(h), arcs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arcs_validation() {
        assert!(BoundaryArcs::new(vec![]).is_err());
        assert!(BoundaryArcs::new(vec![(0.0, TAU)]).is_err());
        assert!(BoundaryArcs::new(vec![(0.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(BoundaryArcs::new(vec![(0.0, 1.0), (0.5 + TAU, 2.0 + TAU)]).is_err());
        assert!(BoundaryArcs::new(vec![(0.0, 1.0), (2.0, 3.0)]).is_ok());
        let e = BoundaryArcs::default_arc();
        assert!(e.contains(-0.5 * PI) && e.contains(1.5 * PI) && !e.contains(0.0));
    }

    #[test]
    fn semicircle_splits_boundary_evenly() {
        let arcs = BoundaryArcs::new(vec![(0.0, PI)]).unwrap();
        let mesh = mesh_disc(0.1, &arcs).unwrap();
        let robin = mesh.marked_length(Marker::Robin);
        let dirichlet = mesh.marked_length(Marker::Dirichlet);
        assert!(
            (robin / dirichlet - 1.0).abs() < 0.02,
            "{robin} vs {dirichlet}"
        );
        let count = |m| mesh.boundary_edges.iter().filter(|e| e.marker == m).count() as f64;
        assert!((count(Marker::Robin) / count(Marker::Dirichlet) - 1.0).abs() < 0.1);
    }

    #[test]
    fn area_converges_quadratically() {
        let arcs = BoundaryArcs::default_arc();
        let coarse = mesh_disc(0.2, &arcs).unwrap();
        let fine = coarse.refine().unwrap();
        let (e0, e1) = (PI - coarse.total_area(), PI - fine.total_area());
        assert!(e0 > 0.0 && e1 > 0.0);
        assert!(e0 / e1 > 3.5, "{e0} {e1}");
        assert!(e0 < coarse.h * coarse.h);
    }

    #[test]
    fn orientation_and_quality() {
        let mesh =
            mesh_disc_sized(Sizing::graded(0.1, 1e-3), &BoundaryArcs::default_arc()).unwrap();
        assert!((0..mesh.triangles.len()).all(|t| mesh.signed_area(t) > 0.0));
        assert!(
            mesh.min_angle() > 10f64.to_radians(),
            "min angle {}",
            mesh.min_angle().to_degrees()
        );
        assert!(mesh
            .vertices
            .iter()
            .any(|p| (*p - CONCENTRATION_POINT).norm() < 1e-12));
    }

    #[test]
    fn arc_endpoints_are_constrained_vertices() {
        let mesh = mesh_disc(0.1, &BoundaryArcs::default_arc()).unwrap();
        for t in [-0.75 * PI, -0.25 * PI] {
            let p = Complex2::from_polar(1.0, t);
            let i = mesh
                .vertices
                .iter()
                .position(|v| (*v - p).norm() < 1e-12)
                .expect("endpoint vertex");
            assert!(mesh.constrained()[i]);
        }
        let bottom = mesh
            .vertices
            .iter()
            .position(|v| (*v - CONCENTRATION_POINT).norm() < 0.06)
            .unwrap();
        assert!(!mesh.constrained()[bottom]);
    }

    #[test]
    fn thin_arc_rejected() {
        let arcs = BoundaryArcs::new(vec![(0.0, 1e-4)]).unwrap();
        assert!(matches!(mesh_disc(0.1, &arcs), Err(LabError::Mesh(_))));
    }

    #[test]
    fn snapshot_lists_every_entity() {
        let mesh = mesh_disc(0.3, &BoundaryArcs::default_arc()).unwrap();
        let mut buf = Vec::new();
        mesh.write_snapshot(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let count = |p: &str| text.lines().filter(|l| l.starts_with(p)).count();
        assert_eq!(count("v "), mesh.n_vertices());
        assert_eq!(count("t "), mesh.triangles.len());
        assert_eq!(count("e "), mesh.boundary_edges.len());
    }
}
