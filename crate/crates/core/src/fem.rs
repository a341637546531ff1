//! Reference-element kernels for bilinear quads and linear segments.

use std::ops::{Index, IndexMut};

use crate::error::{arg, geom, Result};
use crate::geometry::Point;
use crate::scalar::Real;

/// Dense symmetric local matrix of an element with `N` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementMatrix<T, const N: usize> {
    pub entries: [[T; N]; N],
}

impl<T: Real, const N: usize> ElementMatrix<T, N> {
    pub fn zeros() -> Self {
        Self {
            entries: [[T::zero(); N]; N],
        }
    }

    pub fn from_rows(entries: [[T; N]; N]) -> Self {
        Self { entries }
    }

    pub fn scaled(mut self, s: T) -> Self {
        for row in &mut self.entries {
            for v in row {
                *v *= s;
            }
        }
        self
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        let bound = rel_tol * self.max_abs();
        (0..N).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= bound))
    }

    pub fn row_sums(&self) -> [T; N] {
        self.entries.map(|row| row.iter().copied().sum())
    }

    pub fn quadratic_form(&self, x: &[T; N]) -> T {
        let mut acc = T::zero();
        for i in 0..N {
            for j in 0..N {
                acc += x[i] * self[(i, j)] * x[j];
            }
        }
        acc
    }
}

impl<T, const N: usize> Index<(usize, usize)> for ElementMatrix<T, N> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.entries[i][j]
    }
}

impl<T, const N: usize> IndexMut<(usize, usize)> for ElementMatrix<T, N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.entries[i][j]
    }
}

/// Quadrature rule on a reference element.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<T, const D: usize> {
    pub points: Vec<[T; D]>,
    pub weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T, 1> {
    /// Two-point Gauss-Legendre on `[-1, 1]`; exact for cubics.
    pub fn gauss2() -> Self {
        let g = T::one() / T::lit(3.0).sqrt();
        Self {
            points: vec![[-g], [g]],
            weights: vec![T::one(), T::one()],
        }
    }
}

impl<T: Real> QuadratureRule<T, 2> {
    /// Tensor 2x2 Gauss-Legendre on `[-1, 1]^2`.
    pub fn gauss2x2() -> Self {
        let line = QuadratureRule::<T, 1>::gauss2();
        let mut points = Vec::with_capacity(4);
        let mut weights = Vec::with_capacity(4);
        for (py, wy) in line.points.iter().zip(&line.weights) {
            for (px, wx) in line.points.iter().zip(&line.weights) {
                points.push([px[0], py[0]]);
                weights.push(*wx * *wy);
            }
        }
        Self { points, weights }
    }
}

impl<T: Real, const D: usize> QuadratureRule<T, D> {
    pub fn weight_sum(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

// Reference corners of the bilinear quad, counterclockwise.
const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

fn q1_reference_gradients<T: Real>(xi: T, eta: T) -> [[T; 2]; 4] {
    let q = T::lit(0.25);
    CORNERS.map(|[cx, cy]| {
        let (cx, cy) = (T::lit(cx), T::lit(cy));
        [q * cx * (T::one() + cy * eta), q * cy * (T::one() + cx * xi)]
    })
}

pub(crate) fn q1_shape_values<T: Real>(xi: T, eta: T) -> [T; 4] {
    let q = T::lit(0.25);
    CORNERS.map(|[cx, cy]| q * (T::one() + T::lit(cx) * xi) * (T::one() + T::lit(cy) * eta))
}

/// Stiffness `k ∫ ∇φ_a·∇φ_b` of a bilinear quad, 2x2 Gauss.
pub fn q1_stiffness<T: Real>(cell: &[Point<T>; 4], k: T) -> Result<ElementMatrix<T, 4>> {
    let rule = QuadratureRule::<T, 2>::gauss2x2();
    let mut ke = ElementMatrix::zeros();
    for (pt, &w) in rule.points.iter().zip(&rule.weights) {
        let dref = q1_reference_gradients(pt[0], pt[1]);
        // Jacobian of the map from reference to physical coordinates
        let (mut j00, mut j01, mut j10, mut j11) = (T::zero(), T::zero(), T::zero(), T::zero());
        for (g, p) in dref.iter().zip(cell) {
            j00 += g[0] * p.x;
            j01 += g[1] * p.x;
            j10 += g[0] * p.y;
            j11 += g[1] * p.y;
        }
        let det = j00 * j11 - j01 * j10;
        if !(det > T::zero()) {
            return geom(format!("quad {:?} has non-positive Jacobian {det}", cell));
        }
        let inv = T::one() / det;
        let grads = dref.map(|g| [(j11 * g[0] - j10 * g[1]) * inv, (-j01 * g[0] + j00 * g[1]) * inv]);
        let scale = k * w * det;
        for a in 0..4 {
            for b in a..4 {
                let v = scale * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                ke[(a, b)] += v;
                if a != b {
                    ke[(b, a)] += v;
                }
            }
        }
    }
    Ok(ke)
}

/// Stiffness of a linear segment of length `length` with coefficient taken at the midpoint.
pub fn p1_segment_stiffness<T: Real>(length: T, coeff_at_nodes: [T; 2]) -> Result<ElementMatrix<T, 2>> {
    if !(length > T::zero()) {
        return geom(format!("segment length must be positive, got {length}"));
    }
    let c = (coeff_at_nodes[0] + coeff_at_nodes[1]) * T::half() / length;
    Ok(ElementMatrix::from_rows([[c, -c], [-c, c]]))
}

/// Mass `∫ c φ_a φ_b` on a linear segment with `c` linear between the nodal values.
pub fn p1_segment_mass<T: Real>(length: T, coeff_at_nodes: [T; 2]) -> Result<ElementMatrix<T, 2>> {
    if !(length > T::zero()) {
        return geom(format!("segment length must be positive, got {length}"));
    }
    if coeff_at_nodes.iter().any(|c| *c < T::zero() || c.is_nan()) {
        return arg(format!(
            "mass coefficients must be non-negative, got {coeff_at_nodes:?}"
        ));
    }
    let rule = QuadratureRule::<T, 1>::gauss2();
    let mut me = ElementMatrix::zeros();
    for (pt, &w) in rule.points.iter().zip(&rule.weights) {
        let phi = [(T::one() - pt[0]) * T::half(), (T::one() + pt[0]) * T::half()];
        let c = coeff_at_nodes[0] * phi[0] + coeff_at_nodes[1] * phi[1];
        let scale = c * w * length * T::half();
        for a in 0..2 {
            for b in 0..2 {
                me[(a, b)] += scale * phi[a] * phi[b];
            }
        }
    }
    Ok(me)
}

/// Load `∫ h φ_a` over a boundary facet with `h` linear between nodal values.
///
/// A single-point facet (1D boundary) returns the point value.
pub fn facet_load_nodal<T: Real>(facet: &[Point<T>], h_at_nodes: &[T]) -> Result<Vec<T>> {
    match (facet, h_at_nodes) {
        ([_], [h]) => Ok(vec![*h]),
        ([a, b], [ha, hb]) => {
            let len = a.distance(*b);
            if !(len > T::zero()) {
                return geom("boundary facet has zero length");
            }
            let s = len / T::lit(6.0);
            Ok(vec![s * (T::two() * *ha + *hb), s * (*ha + T::two() * *hb)])
        }
        _ => arg("facet load needs one or two nodes with matching values"),
    }
}

/// Load of a constant flux `h` over a boundary facet.
pub fn facet_load<T: Real>(facet: &[Point<T>], h: T) -> Result<Vec<T>> {
    facet_load_nodal(facet, &vec![h; facet.len()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(s: f64, origin: (f64, f64)) -> [Point<f64>; 4] {
        let (x, y) = origin;
        [
            Point::new(x, y),
            Point::new(x + s, y),
            Point::new(x + s, y + s),
            Point::new(x, y + s),
        ]
    }

    /// Independent oracle: closed-form integrals of products of bilinear
    /// gradients on the unit square, via the 1D mass/stiffness factors.
    fn unit_square_oracle() -> [[f64; 4]; 4] {
        // ∫∇φa·∇φb = Kx(a,b) My(a,b) + Mx(a,b) Ky(a,b) with 1D P1 factors.
        let k1 = [[1.0, -1.0], [-1.0, 1.0]];
        let m1 = [[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]];
        let ij = [(0, 0), (1, 0), (1, 1), (0, 1)];
        let mut out = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let (ia, ja) = ij[a];
                let (ib, jb) = ij[b];
                out[a][b] = k1[ia][ib] * m1[ja][jb] + m1[ia][ib] * k1[ja][jb];
            }
        }
        out
    }

    #[test]
    fn q1_unit_square_matches_oracle() {
        let ke = q1_stiffness(&square(1.0, (0.0, 0.0)), 1.0).unwrap();
        let oracle = unit_square_oracle();
        for a in 0..4 {
            for b in 0..4 {
                assert!((ke[(a, b)] - oracle[a][b]).abs() < 1e-14);
            }
        }
        assert!((ke[(0, 0)] - 2.0 / 3.0).abs() < 1e-14);
        assert!((ke[(0, 2)] + 1.0 / 3.0).abs() < 1e-14);
        assert!((ke[(0, 1)] + 1.0 / 6.0).abs() < 1e-14);
        assert!((ke[(0, 3)] + 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn q1_linear_in_k() {
        let c = square(1.0, (0.0, 0.0));
        let k1 = q1_stiffness(&c, 1.0).unwrap();
        let k2 = q1_stiffness(&c, 2.0).unwrap();
        assert_eq!(k2, k1.scaled(2.0));
        assert_eq!(q1_stiffness(&c, 0.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn q1_rejects_degenerate() {
        let flat = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(3.0, 0.0),
        ];
        assert!(q1_stiffness(&flat, 1.0).is_err());
    }

    #[test]
    fn q1_single_precision() {
        let c = [
            Point::new(0.0f32, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let ke = q1_stiffness(&c, 1.0f32).unwrap();
        assert!((ke[(0, 0)] - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn segment_stiffness_examples() {
        let s = p1_segment_stiffness(1.0, [1.0, 1.0]).unwrap();
        assert_eq!(s.entries, [[1.0, -1.0], [-1.0, 1.0]]);
        let s = p1_segment_stiffness(0.5, [2.0, 2.0]).unwrap();
        assert_eq!(s.entries, [[4.0, -4.0], [-4.0, 4.0]]);
        let s = p1_segment_stiffness(1.0, [0.0, 2.0]).unwrap();
        assert_eq!(s.entries, [[1.0, -1.0], [-1.0, 1.0]]);
        assert!(p1_segment_stiffness(0.0, [1.0, 1.0]).is_err());
    }

    #[test]
    fn segment_mass_examples() {
        let close = |m: ElementMatrix<f64, 2>, e: [[f64; 2]; 2]| {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((m[(i, j)] - e[i][j]).abs() < 1e-14, "{m:?}");
                }
            }
        };
        close(p1_segment_mass(1.0, [6.0, 6.0]).unwrap(), [[2.0, 1.0], [1.0, 2.0]]);
        close(p1_segment_mass(1.0, [0.0, 0.0]).unwrap(), [[0.0, 0.0], [0.0, 0.0]]);
        close(p1_segment_mass(2.0, [3.0, 3.0]).unwrap(), [[2.0, 1.0], [1.0, 2.0]]);
        // linear coefficient: exact ∫(c_a φa + c_b φb) φi φj = L/12 [[3ca+cb, ca+cb],[ca+cb, ca+3cb]]
        close(p1_segment_mass(1.0, [0.0, 12.0]).unwrap(), [[1.0, 1.0], [1.0, 3.0]]);
        assert!(p1_segment_mass(1.0, [-1.0, 1.0]).is_err());
    }

    #[test]
    fn facet_loads() {
        let f = [Point::new(0.0, 0.0), Point::new(0.0, 1.0)];
        assert_eq!(facet_load(&f, 1.0).unwrap(), vec![0.5, 0.5]);
        assert_eq!(facet_load(&f, 0.0).unwrap(), vec![0.0, 0.0]);
        let g = [Point::new(0.0_f64, 0.0), Point::new(0.0, 1.0 / 32.0)];
        let l = facet_load(&g, 1.0).unwrap();
        assert!((l[0] - 1.0 / 64.0).abs() < 1e-16 && (l[1] - 1.0 / 64.0).abs() < 1e-16);
        assert_eq!(facet_load(&[Point::new(0.0, 0.0)], 3.0).unwrap(), vec![3.0]);
    }

    #[test]
    fn quadrature_weights() {
        assert!((QuadratureRule::<f64, 1>::gauss2().weight_sum() - 2.0).abs() < 1e-15);
        assert!((QuadratureRule::<f64, 2>::gauss2x2().weight_sum() - 4.0).abs() < 1e-15);
    }
}
