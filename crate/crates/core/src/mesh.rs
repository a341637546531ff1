//! Conforming meshes: 1D intervals of segments and 2D tensor-product grids of quads.

use std::collections::HashMap;

use crate::error::{arg, geom, Result};
use crate::geometry::{BoundaryTag, Point};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellShape {
    /// Two-node segment of a 1D mesh.
    Segment,
    /// Four-node quadrilateral, nodes counterclockwise.
    Quad,
}

impl CellShape {
    pub fn nodes_per_cell(self) -> usize {
        match self {
            Self::Segment => 2,
            Self::Quad => 4,
        }
    }

    pub fn nodes_per_facet(self) -> usize {
        match self {
            Self::Segment => 1,
            Self::Quad => 2,
        }
    }

    pub fn facets_per_cell(self) -> usize {
        self.nodes_per_cell()
    }

    /// Local node indices of local facet `k`.
    pub fn local_facet(self, k: usize) -> [usize; 2] {
        match self {
            Self::Segment => [k, k],
            Self::Quad => [k, (k + 1) % 4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFacet {
    /// Facet nodes; a 1D facet repeats its single node.
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
    /// The one cell owning this facet.
    pub cell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    shape: CellShape,
    vertices: Vec<Point<T>>,
    cell_nodes: Vec<usize>,
    boundary_facets: Vec<BoundaryFacet>,
}

impl<T: Real> Mesh<T> {
    /// Builds a mesh from raw parts and checks its invariants.
    pub fn new(
        shape: CellShape,
        vertices: Vec<Point<T>>,
        cell_nodes: Vec<usize>,
        boundary_facets: Vec<BoundaryFacet>,
    ) -> Result<Self> {
        let mesh = Self {
            shape,
            vertices,
            cell_nodes,
            boundary_facets,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub(crate) fn from_parts_unchecked(
        shape: CellShape,
        vertices: Vec<Point<T>>,
        cell_nodes: Vec<usize>,
        boundary_facets: Vec<BoundaryFacet>,
    ) -> Self {
        Self {
            shape,
            vertices,
            cell_nodes,
            boundary_facets,
        }
    }

    pub fn shape(&self) -> CellShape {
        self.shape
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_nodes.len() / self.shape.nodes_per_cell()
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.shape.nodes_per_cell();
        &self.cell_nodes[c * k..(c + 1) * k]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.cell_nodes.chunks_exact(self.shape.nodes_per_cell())
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point<T>> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_centroid(&self, c: usize) -> Point<T> {
        let nodes = self.cell(c);
        let sum = nodes.iter().fold(Point::default(), |acc, &v| acc + self.vertices[v]);
        sum * (T::one() / T::from_count(nodes.len()))
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.boundary_facets
    }

    pub fn facet_nodes<'a>(&self, facet: &'a BoundaryFacet) -> &'a [usize] {
        &facet.nodes[..self.shape.nodes_per_facet()]
    }

    pub fn bounding_box(&self) -> (Point<T>, Point<T>) {
        let mut lo = Point::new(T::infinity(), T::infinity());
        let mut hi = Point::new(T::neg_infinity(), T::neg_infinity());
        for p in &self.vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> T {
        let (lo, hi) = self.bounding_box();
        lo.distance(hi)
    }

    /// Signed area of a quad cell (length of a segment cell).
    pub fn cell_measure(&self, c: usize) -> T {
        let p = self.cell_points(c);
        match self.shape {
            CellShape::Segment => p[1].x - p[0].x,
            CellShape::Quad => {
                let mut twice = T::zero();
                for k in 0..4 {
                    twice += p[k].cross(p[(k + 1) % 4]);
                }
                twice * T::half()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.shape.nodes_per_cell();
        if self.cell_nodes.is_empty() || !self.cell_nodes.len().is_multiple_of(k) {
            return arg("cell connectivity is empty or not a multiple of the cell size");
        }
        if let Some(p) = self.vertices.iter().find(|p| !p.is_finite()) {
            return geom(format!("non-finite vertex {p}"));
        }
        let nv = self.vertices.len();
        if let Some(&bad) = self.cell_nodes.iter().find(|&&v| v >= nv) {
            return arg(format!("cell references vertex {bad} but mesh has {nv} vertices"));
        }
        for c in 0..self.n_cells() {
            if !(self.cell_measure(c) > T::zero()) {
                return geom(format!("cell {c} is degenerate or clockwise"));
            }
        }
        let topo = MeshTopology::build(self);
        for (i, bf) in self.boundary_facets.iter().enumerate() {
            let key = facet_key(self.facet_nodes(bf));
            let Some(&f) = topo.lookup.get(&key) else {
                return arg(format!("boundary facet {i} is not a facet of the mesh"));
            };
            let cells = &topo.facet_cells[f];
            if cells.len() != 1 || cells[0].0 != bf.cell {
                return arg(format!(
                    "boundary facet {i} must belong to exactly one cell (cell {})",
                    bf.cell
                ));
            }
        }
        Ok(())
    }
}

/// Uniform `nx` by `ny` grid of quads on the rectangle `[lower, upper]`.
pub fn build_structured_quad<T: Real>(nx: usize, ny: usize, lower: Point<T>, upper: Point<T>) -> Result<Mesh<T>> {
    if nx == 0 || ny == 0 {
        return arg("structured grid needs at least one cell per direction");
    }
    if !(upper.x > lower.x && upper.y > lower.y) {
        return arg(format!("upper corner {upper} must exceed lower corner {lower}"));
    }
    let xs = uniform_nodes(lower.x, upper.x, nx);
    let ys = uniform_nodes(lower.y, upper.y, ny);
    build_tensor_quad(&xs, &ys)
}

/// Quad grid over the tensor product of two strictly increasing coordinate lists.
///
/// Vertex `(i, j)` has id `j * xs.len() + i`; cell `(i, j)` has id `j * (xs.len() - 1) + i`.
pub fn build_tensor_quad<T: Real>(xs: &[T], ys: &[T]) -> Result<Mesh<T>> {
    check_increasing(xs, "x")?;
    check_increasing(ys, "y")?;
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let cid = |i: usize, j: usize| j * nx + i;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in ys {
        for &x in xs {
            vertices.push(Point::new(x, y));
        }
    }
    let mut cell_nodes = Vec::with_capacity(4 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cell_nodes.extend_from_slice(&[vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }

    let mut facets = Vec::with_capacity(2 * (nx + ny));
    for j in 0..ny {
        facets.push(BoundaryFacet {
            nodes: [vid(0, j + 1), vid(0, j)],
            tag: BoundaryTag::Left,
            cell: cid(0, j),
        });
    }
    for j in 0..ny {
        facets.push(BoundaryFacet {
            nodes: [vid(nx, j), vid(nx, j + 1)],
            tag: BoundaryTag::Right,
            cell: cid(nx - 1, j),
        });
    }
    for i in 0..nx {
        facets.push(BoundaryFacet {
            nodes: [vid(i, 0), vid(i + 1, 0)],
            tag: BoundaryTag::Bottom,
            cell: cid(i, 0),
        });
    }
    for i in 0..nx {
        facets.push(BoundaryFacet {
            nodes: [vid(i + 1, ny), vid(i, ny)],
            tag: BoundaryTag::Top,
            cell: cid(i, ny - 1),
        });
    }
    Mesh::new(CellShape::Quad, vertices, cell_nodes, facets)
}

/// Uniform mesh of `n` segments on `(0, length)`.
pub fn build_interval<T: Real>(n: usize, length: T) -> Result<Mesh<T>> {
    if n == 0 {
        return arg("interval mesh needs at least one cell");
    }
    if !(length > T::zero()) || !length.is_finite() {
        return arg(format!("interval length must be positive, got {length}"));
    }
    build_graded_interval(&uniform_nodes(T::zero(), length, n))
}

/// Segment mesh through the given strictly increasing node coordinates.
pub fn build_graded_interval<T: Real>(xs: &[T]) -> Result<Mesh<T>> {
    check_increasing(xs, "x")?;
    let n = xs.len() - 1;
    let vertices = xs.iter().map(|&x| Point::on_line(x)).collect();
    let cell_nodes = (0..n).flat_map(|c| [c, c + 1]).collect();
    let facets = vec![
        BoundaryFacet {
            nodes: [0, 0],
            tag: BoundaryTag::Left,
            cell: 0,
        },
        BoundaryFacet {
            nodes: [n, n],
            tag: BoundaryTag::Right,
            cell: n - 1,
        },
    ];
    Mesh::new(CellShape::Segment, vertices, cell_nodes, facets)
}

pub(crate) fn uniform_nodes<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    let h = (b - a) / T::from_count(n);
    (0..=n)
        .map(|i| if i == n { b } else { a + h * T::from_count(i) })
        .collect()
}

fn check_increasing<T: Real>(xs: &[T], axis: &str) -> Result<()> {
    if xs.len() < 2 {
        return arg(format!("{axis}-coordinates need at least two entries"));
    }
    if xs.iter().any(|x| !x.is_finite()) || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return arg(format!("{axis}-coordinates must be finite and strictly increasing"));
    }
    Ok(())
}

pub(crate) fn facet_key(nodes: &[usize]) -> [usize; 2] {
    match *nodes {
        [v] => [v, v],
        [a, b] => [a.min(b), a.max(b)],
        _ => unreachable!("facets have one or two nodes"),
    }
}

/// Facet-level connectivity derived from the cell list.
#[derive(Debug, Clone)]
pub struct MeshTopology {
    /// Sorted node pair of each facet (1D facets repeat the node).
    pub facets: Vec<[usize; 2]>,
    /// `(cell, local facet index)` of the one or two cells sharing each facet.
    pub facet_cells: Vec<Vec<(usize, usize)>>,
    pub vertex_facets: Vec<Vec<usize>>,
    pub vertex_cells: Vec<Vec<usize>>,
    pub(crate) lookup: HashMap<[usize; 2], usize>,
}

impl MeshTopology {
    pub fn build<T: Real>(mesh: &Mesh<T>) -> Self {
        let shape = mesh.shape();
        let mut facets = Vec::new();
        let mut facet_cells: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut lookup = HashMap::new();
        let mut vertex_facets = vec![Vec::new(); mesh.n_vertices()];
        let mut vertex_cells = vec![Vec::new(); mesh.n_vertices()];
        for (c, nodes) in mesh.cells().enumerate() {
            for &v in nodes {
                vertex_cells[v].push(c);
            }
            for k in 0..shape.facets_per_cell() {
                let [i, j] = shape.local_facet(k);
                let key = facet_key(&[nodes[i], nodes[j]][..shape.nodes_per_facet()]);
                let f = *lookup.entry(key).or_insert_with(|| {
                    facets.push(key);
                    facet_cells.push(Vec::with_capacity(2));
                    vertex_facets[key[0]].push(facets.len() - 1);
                    if key[1] != key[0] {
                        vertex_facets[key[1]].push(facets.len() - 1);
                    }
                    facets.len() - 1
                });
                facet_cells[f].push((c, k));
            }
        }
        Self {
            facets,
            facet_cells,
            vertex_facets,
            vertex_cells,
            lookup,
        }
    }

    pub fn facet_between(&self, a: usize, b: usize) -> Option<usize> {
        self.lookup.get(&[a.min(b), a.max(b)]).copied()
    }

    pub fn is_boundary_facet(&self, f: usize) -> bool {
        self.facet_cells[f].len() == 1
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_facets[v].iter().any(|&f| self.is_boundary_facet(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_grid() {
        let m = build_structured_quad(1, 1, Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap();
        assert_eq!(m.n_vertices(), 4);
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.boundary_facets().len(), 4);
    }

    #[test]
    fn unit_square_32() {
        let m = build_structured_quad(32, 32, Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap();
        assert_eq!(m.n_vertices(), 1089);
        assert_eq!(m.n_cells(), 1024);
        assert_eq!(m.boundary_facets().len(), 128);
    }

    #[test]
    fn two_by_one_facets_enumerated() {
        let m = build_structured_quad(2, 1, Point::new(0.0, 0.0), Point::new(2.0, 1.0)).unwrap();
        assert_eq!(m.n_vertices(), 6);
        assert_eq!(m.n_cells(), 2);
        // Independent count: facets of the cell graph with exactly one owner.
        let topo = MeshTopology::build(&m);
        let owned_once = (0..topo.facets.len()).filter(|&f| topo.is_boundary_facet(f)).count();
        assert_eq!(owned_once, 6);
        assert_eq!(m.boundary_facets().len(), 6);
        let count = |t| m.boundary_facets().iter().filter(|f| f.tag == t).count();
        assert_eq!(count(BoundaryTag::Left), 1);
        assert_eq!(count(BoundaryTag::Bottom), 2);
    }

    #[test]
    fn quads_are_counterclockwise() {
        let m = build_structured_quad(3, 2, Point::new(-1.0_f64, 0.0), Point::new(2.0, 0.5)).unwrap();
        for c in 0..m.n_cells() {
            assert!((m.cell_measure(c) - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn bad_extents_rejected() {
        assert!(build_structured_quad(0, 1, Point::new(0.0, 0.0), Point::new(1.0, 1.0)).is_err());
        assert!(build_structured_quad(1, 1, Point::new(0.0, 0.0), Point::new(0.0, 1.0)).is_err());
        assert!(build_structured_quad(1, 1, Point::new(1.0, 0.0), Point::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn interval_vertices() {
        let m = build_interval(1, 1.0).unwrap();
        let xs: Vec<f64> = m.vertices().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 1.0]);

        let m = build_interval(4, 1.0).unwrap();
        let xs: Vec<f64> = m.vertices().iter().map(|p| p.x).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);

        let m = build_interval(10, 2.0_f64).unwrap();
        assert_eq!(m.n_vertices(), 11);
        for w in m.vertices().windows(2) {
            assert!((w[1].x - w[0].x - 0.2).abs() < 1e-14);
        }
        let tags: Vec<_> = m.boundary_facets().iter().map(|f| f.tag).collect();
        assert_eq!(tags, vec![BoundaryTag::Left, BoundaryTag::Right]);
    }

    #[test]
    fn interval_rejects_empty() {
        assert!(build_interval(0, 1.0).is_err());
        assert!(build_interval(3, 0.0).is_err());
    }

    #[test]
    fn invalid_boundary_facet_rejected() {
        let m = build_structured_quad(2, 1, Point::new(0.0, 0.0), Point::new(2.0, 1.0)).unwrap();
        let mut facets = m.boundary_facets().to_vec();
        // interior edge shared by both cells
        facets.push(BoundaryFacet {
            nodes: [1, 4],
            tag: BoundaryTag::Left,
            cell: 0,
        });
        let bad = Mesh::new(
            CellShape::Quad,
            m.vertices().to_vec(),
            m.cells().flatten().copied().collect(),
            facets,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn clockwise_quad_rejected() {
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert!(Mesh::new(CellShape::Quad, v, vec![0, 3, 2, 1], vec![]).is_err());
    }
}
