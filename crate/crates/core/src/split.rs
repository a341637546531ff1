//! Cutting a conforming mesh along fracture paths.
//!
//! Cells are grouped into subdomains by flood fill across non-fracture facets.
//! Every vertex on a fracture is copied once per group of cells that still
//! touch each other around it, so the discrete pressure may jump across the
//! fracture. Each fracture facet becomes an interface element pairing the
//! copies owned by its two flanking cells.

use std::collections::HashMap;

use crate::error::{arg, Error, Result};
use crate::fracture::FractureNetwork;
use crate::geometry::Point;
use crate::mesh::{BoundaryFacet, CellShape, Mesh, MeshTopology};
use crate::scalar::Real;

/// The side-1 and side-2 copies of one interface vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodePair {
    pub side1: usize,
    pub side2: usize,
}

impl NodePair {
    fn swapped(self) -> Self {
        Self {
            side1: self.side2,
            side2: self.side1,
        }
    }
}

/// One mesh edge on a fracture in a 2D split mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceEdge<T> {
    pub fracture_id: usize,
    /// Copies at the two endpoints `a` then `b`, in fracture path order.
    pub node_pairs: [NodePair; 2],
    /// Unit normal pointing from side 1 into side 2.
    pub eta: Point<T>,
    pub length: T,
    pub endpoints: [Point<T>; 2],
    pub aperture_at_nodes: [T; 2],
    /// Flanking cells, side 1 then side 2.
    pub cells: [usize; 2],
}

impl<T: Real> InterfaceEdge<T> {
    pub fn dofs(&self) -> [usize; 4] {
        let [a, b] = self.node_pairs;
        [a.side1, a.side2, b.side1, b.side2]
    }

    pub fn tangent(&self) -> Point<T> {
        (self.endpoints[1] - self.endpoints[0]) * (T::one() / self.length)
    }
}

/// A point interface of a 1D split mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfacePoint<T> {
    pub fracture_id: usize,
    pub pair: NodePair,
    /// +1 when side 2 lies at larger x, -1 otherwise.
    pub eta: T,
    pub location: T,
    pub aperture: T,
    pub cells: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitMesh<T> {
    mesh: Mesh<T>,
    subdomain_of_cell: Vec<usize>,
    n_subdomains: usize,
    n_fractures: usize,
    interface_edges: Vec<InterfaceEdge<T>>,
    interface_points: Vec<InterfacePoint<T>>,
    origin_of_vertex: Vec<usize>,
}

impl<T: Real> SplitMesh<T> {
    /// Post-duplication mesh; one scalar unknown per vertex.
    pub fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn n_subdomains(&self) -> usize {
        self.n_subdomains
    }

    pub fn n_fractures(&self) -> usize {
        self.n_fractures
    }

    pub fn subdomain_of_cell(&self) -> &[usize] {
        &self.subdomain_of_cell
    }

    pub fn interface_edges(&self) -> &[InterfaceEdge<T>] {
        &self.interface_edges
    }

    pub fn interface_points(&self) -> &[InterfacePoint<T>] {
        &self.interface_points
    }

    /// Vertex id in the unsplit mesh that each vertex was copied from.
    pub fn origin_of_vertex(&self) -> &[usize] {
        &self.origin_of_vertex
    }

    /// Groups of vertices copied from the same original vertex, for vertices
    /// that were split.
    pub fn copy_groups(&self) -> Vec<Vec<usize>> {
        let mut by_origin: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (v, &o) in self.origin_of_vertex.iter().enumerate() {
            by_origin.entry(o).or_default().push(v);
        }
        by_origin.into_values().filter(|g| g.len() > 1).collect()
    }

    pub fn edges_of_fracture(&self, j: usize) -> impl Iterator<Item = &InterfaceEdge<T>> + '_ {
        self.interface_edges.iter().filter(move |e| e.fracture_id == j)
    }

    /// Subdomain of the cells referencing each vertex.
    pub fn subdomain_of_vertex(&self) -> Vec<usize> {
        let mut out = vec![usize::MAX; self.n_dofs()];
        for (c, nodes) in self.mesh.cells().enumerate() {
            for &v in nodes {
                if out[v] == usize::MAX {
                    out[v] = self.subdomain_of_cell[c];
                }
            }
        }
        out
    }

    /// Same split with every interface's sides exchanged.
    pub fn with_flipped_interfaces(&self) -> Self {
        let mut out = self.clone();
        for e in &mut out.interface_edges {
            e.node_pairs = e.node_pairs.map(NodePair::swapped);
            e.eta = e.eta * -T::one();
            e.cells.swap(0, 1);
        }
        for p in &mut out.interface_points {
            p.pair = p.pair.swapped();
            p.eta = -p.eta;
            p.cells.swap(0, 1);
        }
        out
    }
}

/// Mesh facet traversed by a fracture, with the direction of travel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TracedFacet {
    facet: usize,
    from: usize,
    to: usize,
}

/// Default conformity tolerance: `1e-12` times the mesh diameter.
pub fn default_tolerance<T: Real>(mesh: &Mesh<T>) -> T {
    T::lit(1e-12) * mesh.diameter().max(T::min_positive_value())
}

/// Mesh facet ids covered by each fracture, in path order.
pub fn check_conformity<T: Real>(mesh: &Mesh<T>, network: &FractureNetwork<T>, tol: T) -> Result<Vec<Vec<usize>>> {
    let topo = MeshTopology::build(mesh);
    let traces = trace_network(mesh, &topo, network, tol)?;
    Ok(traces
        .into_iter()
        .map(|t| t.into_iter().map(|f| f.facet).collect())
        .collect())
}

fn nearest_vertex<T: Real>(mesh: &Mesh<T>, p: Point<T>) -> (usize, T) {
    mesh.vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v.distance(p)))
        .fold(
            (usize::MAX, T::infinity()),
            |best, cur| {
                if cur.1 < best.1 {
                    cur
                } else {
                    best
                }
            },
        )
}

fn trace_network<T: Real>(
    mesh: &Mesh<T>,
    topo: &MeshTopology,
    network: &FractureNetwork<T>,
    tol: T,
) -> Result<Vec<Vec<TracedFacet>>> {
    network
        .fractures
        .iter()
        .enumerate()
        .map(|(j, frac)| match (mesh.shape(), frac.is_point()) {
            (CellShape::Segment, true) => {
                let (v, d) = nearest_vertex(mesh, frac.path()[0]);
                if d > tol {
                    return Err(Error::Conformity {
                        fracture: j,
                        segment: 0,
                        reason: format!("point {} is not a mesh vertex", frac.path()[0].x),
                    });
                }
                let facet = topo.facet_between(v, v).expect("every 1D vertex is a facet");
                Ok(vec![TracedFacet { facet, from: v, to: v }])
            }
            (CellShape::Quad, false) => trace_polyline(mesh, topo, j, frac.path(), tol),
            (CellShape::Segment, false) => arg(format!("fracture {j}: 1D meshes take point inclusions, not polylines")),
            (CellShape::Quad, true) => arg(format!(
                "fracture {j}: 2D meshes need a polyline path, not a single point"
            )),
        })
        .collect()
}

fn trace_polyline<T: Real>(
    mesh: &Mesh<T>,
    topo: &MeshTopology,
    fracture: usize,
    path: &[Point<T>],
    tol: T,
) -> Result<Vec<TracedFacet>> {
    let xs = mesh.vertices();
    let mut out = Vec::new();
    let (mut v, d) = nearest_vertex(mesh, path[0]);
    if d > tol {
        return Err(Error::Conformity {
            fracture,
            segment: 0,
            reason: format!("start point {} is not a mesh vertex", path[0]),
        });
    }
    for (segment, w) in path.windows(2).enumerate() {
        let (p, q) = (w[0], w[1]);
        let len = p.distance(q);
        let dir = (q - p) * (T::one() / len);
        while xs[v].distance(q) > tol {
            let tv = (xs[v] - p).dot(dir);
            let next = topo.vertex_facets[v]
                .iter()
                .filter_map(|&f| {
                    let [a, b] = topo.facets[f];
                    let other = if a == v { b } else { a };
                    let rel = xs[other] - p;
                    let t = rel.dot(dir);
                    let off = rel.cross(dir).abs();
                    (off <= tol && t > tv + tol && t <= len + tol).then_some((f, other, t))
                })
                .min_by(|x, y| x.2.partial_cmp(&y.2).expect("finite coordinates"));
            let Some((facet, to, _)) = next else {
                return Err(Error::Conformity {
                    fracture,
                    segment,
                    reason: format!(
                        "segment {p} -> {q} leaves the mesh edges at {} and crosses a cell interior",
                        xs[v]
                    ),
                });
            };
            out.push(TracedFacet { facet, from: v, to });
            v = to;
        }
    }
    Ok(out)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Keeps the smaller root so representatives are the lowest member.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Splits `mesh` along every fracture of `network`.
pub fn split_mesh<T: Real>(mesh: &Mesh<T>, network: &FractureNetwork<T>) -> Result<SplitMesh<T>> {
    let topo = MeshTopology::build(mesh);
    let traces = trace_network(mesh, &topo, network, default_tolerance(mesh))?;

    let mut fracture_of_facet: HashMap<usize, usize> = HashMap::new();
    for (j, trace) in traces.iter().enumerate() {
        for (k, tf) in trace.iter().enumerate() {
            if topo.is_boundary_facet(tf.facet) {
                return Err(Error::Conformity {
                    fracture: j,
                    segment: k,
                    reason: "fracture runs along the domain boundary".into(),
                });
            }
            if let Some(other) = fracture_of_facet.insert(tf.facet, j) {
                return Err(Error::UnsupportedTopology(format!(
                    "fractures {other} and {j} overlap on a mesh facet"
                )));
            }
        }
    }

    if mesh.shape() == CellShape::Quad {
        for (j, trace) in traces.iter().enumerate() {
            let tips = [trace[0].from, trace[trace.len() - 1].to];
            for tip in tips {
                let on_other = topo.vertex_facets[tip]
                    .iter()
                    .any(|f| fracture_of_facet.get(f).is_some_and(|&o| o != j));
                if !topo.is_boundary_vertex(tip) && !on_other {
                    return Err(Error::UnsupportedTopology(format!(
                        "fracture {j} ends at {} inside a subdomain; fully embedded tips are not supported",
                        mesh.vertices()[tip]
                    )));
                }
            }
        }
    }

    let is_cut = |f: usize| fracture_of_facet.contains_key(&f);

    // Subdomains: flood fill over uncut interior facets.
    let n_cells = mesh.n_cells();
    let mut cell_neighbors = vec![Vec::new(); n_cells];
    for (f, cells) in topo.facet_cells.iter().enumerate() {
        if cells.len() == 2 && !is_cut(f) {
            cell_neighbors[cells[0].0].push(cells[1].0);
            cell_neighbors[cells[1].0].push(cells[0].0);
        }
    }
    let mut subdomain_of_cell = vec![usize::MAX; n_cells];
    let mut n_subdomains = 0;
    let mut stack = Vec::new();
    for seed in 0..n_cells {
        if subdomain_of_cell[seed] != usize::MAX {
            continue;
        }
        subdomain_of_cell[seed] = n_subdomains;
        stack.push(seed);
        while let Some(c) = stack.pop() {
            for &n in &cell_neighbors[c] {
                if subdomain_of_cell[n] == usize::MAX {
                    subdomain_of_cell[n] = n_subdomains;
                    stack.push(n);
                }
            }
        }
        n_subdomains += 1;
    }

    // Vertex copies: one per group of cells around a vertex still joined by uncut facets.
    let mut vertices = mesh.vertices().to_vec();
    let mut origin_of_vertex: Vec<usize> = (0..vertices.len()).collect();
    let mut copy_in_cell: HashMap<(usize, usize), usize> = HashMap::new();
    let mut uf = UnionFind::new(n_cells);
    for v in 0..mesh.n_vertices() {
        let cells = &topo.vertex_cells[v];
        let touches_cut = topo.vertex_facets[v].iter().any(|&f| is_cut(f));
        if !touches_cut {
            continue;
        }
        for &f in &topo.vertex_facets[v] {
            let fc = &topo.facet_cells[f];
            if fc.len() == 2 && !is_cut(f) {
                uf.union(fc[0].0, fc[1].0);
            }
        }
        let mut roots: Vec<usize> = cells.iter().map(|&c| uf.find(c)).collect();
        roots.sort_unstable();
        roots.dedup();
        for (g, &root) in roots.iter().enumerate() {
            let id = if g == 0 {
                v
            } else {
                vertices.push(mesh.vertices()[v]);
                origin_of_vertex.push(v);
                vertices.len() - 1
            };
            for &c in cells {
                if uf.find(c) == root {
                    copy_in_cell.insert((v, c), id);
                }
            }
        }
        // reset the touched entries so later vertices start from singletons
        for &c in cells {
            uf.parent[c] = c;
        }
    }
    let node_in_cell = |v: usize, c: usize| copy_in_cell.get(&(v, c)).copied().unwrap_or(v);

    let shape = mesh.shape();
    let mut cell_nodes = Vec::with_capacity(n_cells * shape.nodes_per_cell());
    for (c, nodes) in mesh.cells().enumerate() {
        cell_nodes.extend(nodes.iter().map(|&v| node_in_cell(v, c)));
    }
    let boundary_facets = mesh
        .boundary_facets()
        .iter()
        .map(|bf| BoundaryFacet {
            nodes: bf.nodes.map(|v| node_in_cell(v, bf.cell)),
            ..*bf
        })
        .collect();

    let mut interface_edges = Vec::new();
    let mut interface_points = Vec::new();
    for (j, trace) in traces.iter().enumerate() {
        let aperture = network.fractures[j].aperture();
        for tf in trace {
            let fc = &topo.facet_cells[tf.facet];
            let (mut c1, mut c2) = (fc[0].0, fc[1].0);
            if (subdomain_of_cell[c2], c2) < (subdomain_of_cell[c1], c1) {
                std::mem::swap(&mut c1, &mut c2);
            }
            let pair = |v: usize| NodePair {
                side1: node_in_cell(v, c1),
                side2: node_in_cell(v, c2),
            };
            let toward_2 = mesh.cell_centroid(c2) - mesh.cell_centroid(c1);
            let (pa, pb) = (mesh.vertices()[tf.from], mesh.vertices()[tf.to]);
            match shape {
                CellShape::Quad => {
                    let length = pa.distance(pb);
                    let mut eta = ((pb - pa) * (T::one() / length)).perp();
                    if eta.dot(toward_2) < T::zero() {
                        eta = eta * -T::one();
                    }
                    interface_edges.push(InterfaceEdge {
                        fracture_id: j,
                        node_pairs: [pair(tf.from), pair(tf.to)],
                        eta,
                        length,
                        endpoints: [pa, pb],
                        aperture_at_nodes: [aperture.eval(pa), aperture.eval(pb)],
                        cells: [c1, c2],
                    });
                }
                CellShape::Segment => interface_points.push(InterfacePoint {
                    fracture_id: j,
                    pair: pair(tf.from),
                    eta: toward_2.x.signum(),
                    location: pa.x,
                    aperture: aperture.eval(pa),
                    cells: [c1, c2],
                }),
            }
        }
    }

    Ok(SplitMesh {
        mesh: Mesh::from_parts_unchecked(shape, vertices, cell_nodes, boundary_facets),
        subdomain_of_cell,
        n_subdomains,
        n_fractures: network.len(),
        interface_edges,
        interface_points,
        origin_of_vertex,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracture::{Aperture, FractureSpec};
    use crate::mesh::{build_interval, build_structured_quad};

    fn unit(n: usize) -> Mesh<f64> {
        build_structured_quad(n, n, Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap()
    }

    fn frac(pts: &[(f64, f64)]) -> FractureSpec<f64> {
        FractureSpec::new(
            pts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            Aperture::Constant(1e-4),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn conformity_vertical_line() {
        let m = unit(32);
        let net = FractureNetwork::new(vec![frac(&[(0.5, 0.0), (0.5, 1.0)])]);
        let edges = check_conformity(&m, &net, 1e-12).unwrap();
        assert_eq!(edges[0].len(), 32);
    }

    #[test]
    fn conformity_off_grid_fails() {
        let m = unit(32);
        let net = FractureNetwork::new(vec![frac(&[(0.51, 0.0), (0.51, 1.0)])]);
        let err = check_conformity(&m, &net, 1e-12).unwrap_err();
        assert!(matches!(err, Error::Conformity { fracture: 0, .. }));
    }

    #[test]
    fn conformity_partial_segment() {
        let m = unit(32);
        let net = FractureNetwork::new(vec![frac(&[(0.5, 0.5), (0.75, 0.5)])]);
        let edges = check_conformity(&m, &net, 1e-12).unwrap();
        // 0.25 / (1/32)
        assert_eq!(edges[0].len(), 8);
    }

    #[test]
    fn diagonal_path_crosses_cells() {
        let m = unit(4);
        let net = FractureNetwork::new(vec![frac(&[(0.0, 0.0), (1.0, 1.0)])]);
        let err = check_conformity(&m, &net, 1e-12).unwrap_err();
        assert!(matches!(err, Error::Conformity { segment: 0, .. }));
    }

    #[test]
    fn single_vertical_split_counts() {
        let m = unit(32);
        let net = FractureNetwork::new(vec![frac(&[(0.5, 0.0), (0.5, 1.0)])]);
        let s = split_mesh(&m, &net).unwrap();
        assert_eq!(s.n_subdomains(), 2);
        assert_eq!(s.n_dofs(), 1089 + 33);
        assert_eq!(s.interface_edges().len(), 32);
        for e in s.interface_edges() {
            assert!((e.eta.x - 1.0).abs() < 1e-15, "side 1 is the left half (subdomain 0)");
            assert!(e.eta.dot(e.tangent()).abs() <= 1e-12);
        }
    }

    #[test]
    fn no_fractures_is_identity() {
        let m = unit(4);
        let s = split_mesh(&m, &FractureNetwork::empty()).unwrap();
        assert_eq!(s.n_subdomains(), 1);
        assert!(s.interface_edges().is_empty());
        assert_eq!(s.mesh(), &m);
    }

    #[test]
    fn embedded_tip_rejected() {
        let m = unit(8);
        let net = FractureNetwork::new(vec![frac(&[(0.5, 0.0), (0.5, 0.5)])]);
        assert!(matches!(split_mesh(&m, &net), Err(Error::UnsupportedTopology(_))));
    }

    #[test]
    fn boundary_fracture_rejected() {
        let m = unit(4);
        let net = FractureNetwork::new(vec![frac(&[(0.0, 0.0), (0.0, 1.0)])]);
        assert!(matches!(split_mesh(&m, &net), Err(Error::Conformity { .. })));
    }

    #[test]
    fn crossing_yields_four_copies() {
        let m = unit(4);
        let net = FractureNetwork::new(vec![frac(&[(0.5, 0.0), (0.5, 1.0)]), frac(&[(0.0, 0.5), (1.0, 0.5)])]);
        let s = split_mesh(&m, &net).unwrap();
        assert_eq!(s.n_subdomains(), 4);
        let center = 12; // vertex (2, 2) of a 5x5 grid
        let copies = s.origin_of_vertex().iter().filter(|&&o| o == center).count();
        assert_eq!(copies, 4);
        // 5 + 5 - 1 vertices on the cross; interior ones doubled, center quadrupled
        assert_eq!(s.n_dofs(), 25 + 8 + 3);
    }

    #[test]
    fn t_junction_yields_three_copies() {
        let m = unit(4);
        let net = FractureNetwork::new(vec![frac(&[(0.5, 0.0), (0.5, 1.0)]), frac(&[(0.5, 0.5), (1.0, 0.5)])]);
        let s = split_mesh(&m, &net).unwrap();
        assert_eq!(s.n_subdomains(), 3);
        let copies = s.origin_of_vertex().iter().filter(|&&o| o == 12).count();
        assert_eq!(copies, 3);
    }

    #[test]
    fn interval_split() {
        let m = build_interval(2, 1.0).unwrap();
        let net = FractureNetwork::new(vec![FractureSpec::point(0.5, Aperture::Constant(1e-4), 1e-4).unwrap()]);
        let s = split_mesh(&m, &net).unwrap();
        assert_eq!(s.n_dofs(), 4);
        assert_eq!(s.n_subdomains(), 2);
        let p = &s.interface_points()[0];
        assert_eq!(p.pair, NodePair { side1: 1, side2: 3 });
        assert_eq!(p.eta, 1.0);
        assert_eq!(s.mesh().cell(1), &[3, 2]);
    }

    #[test]
    fn interval_boundary_point_rejected() {
        let m = build_interval(2, 1.0).unwrap();
        let net = FractureNetwork::new(vec![FractureSpec::point(1.0, Aperture::Constant(1e-4), 1.0).unwrap()]);
        assert!(split_mesh(&m, &net).is_err());
    }
}
