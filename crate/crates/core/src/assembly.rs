//! Global system of the interface weak form.
//!
//! Per subdomain the usual `∫ k ∇p·∇q` stiffness is assembled on the split
//! mesh. On every fracture the six-coefficient interface form adds
//!
//! * `∫ κʲ ∇τ{p}·∇τ{q} + ∫ rʲ {p}{q}` on the average,
//! * `∫ κᵃ ∇τ[p]·∇τ[q] + ∫ rᵃ [p][q]` on the jump,
//!
//! with loads `∫ hʲ {q} + ∫ hᵃ [q]`. Thin inclusions map to `κʲ = ε k_f` and
//! `rᵃ = k_f / ε`, everything else zero. Interface endpoints receive no
//! extra condition (the tangential flux there is natural).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{facet_load_nodal, p1_segment_mass, p1_segment_stiffness, q1_stiffness, ElementMatrix};
use crate::fracture::FractureNetwork;
use crate::geometry::{BoundaryTag, Point};
use crate::mesh::CellShape;
use crate::scalar::Real;
use crate::sparse::{CsrMatrix, TripletMatrix};
use crate::split::SplitMesh;

/// Pointwise values of the six interface coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InterfaceCoefficients<T> {
    /// Tangential diffusion acting on the pressure average (flux-jump condition).
    pub kappa_j: T,
    pub r_j: T,
    pub h_j: T,
    /// Tangential diffusion acting on the pressure jump (flux-average condition).
    pub kappa_a: T,
    pub r_a: T,
    pub h_a: T,
}

impl<T: Real> InterfaceCoefficients<T> {
    pub fn zero() -> Self {
        Self {
            kappa_j: T::zero(),
            r_j: T::zero(),
            h_j: T::zero(),
            kappa_a: T::zero(),
            r_a: T::zero(),
            h_a: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [self.kappa_j, self.r_j, self.kappa_a, self.r_a];
        let all = [self.kappa_j, self.r_j, self.h_j, self.kappa_a, self.r_a, self.h_a];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Configuration(format!(
                "non-finite interface coefficient in {self:?}"
            )));
        }
        if nonneg.iter().any(|v| *v < T::zero()) {
            return Err(Error::Configuration(format!(
                "interface diffusion and reaction coefficients must be non-negative: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Thin-inclusion coefficients at a single point of aperture `eps`.
pub fn thin_inclusion_coeffs<T: Real>(k_f: T, eps: T, eps_floor: T) -> InterfaceCoefficients<T> {
    let eps = eps.max(eps_floor);
    InterfaceCoefficients {
        kappa_j: k_f * eps,
        r_a: k_f / eps,
        ..InterfaceCoefficients::zero()
    }
}

/// Nodal thin-inclusion coefficients on an interface edge.
pub fn fracture_to_coeffs<T: Real>(k_f: T, eps_at_nodes: [T; 2], eps_floor: T) -> [InterfaceCoefficients<T>; 2] {
    eps_at_nodes.map(|eps| thin_inclusion_coeffs(k_f, eps, eps_floor))
}

/// How the interface coefficients of one fracture are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterfaceModel<T> {
    /// The same six coefficients everywhere along the fracture.
    Uniform(InterfaceCoefficients<T>),
    /// Coefficients from the fracture mobility and the local aperture.
    ThinInclusion { mobility: T, eps_floor: T },
}

impl<T: Real> InterfaceModel<T> {
    /// Thin-inclusion model with the default aperture floor,
    /// `1e-12` times the largest aperture on the fracture (or `1e-12` if it is zero).
    pub fn thin_inclusion(split: &SplitMesh<T>, network: &FractureNetwork<T>, j: usize) -> Self {
        let spec = &network.fractures[j];
        let max_eps = split
            .edges_of_fracture(j)
            .flat_map(|e| e.aperture_at_nodes)
            .chain(
                split
                    .interface_points()
                    .iter()
                    .filter(|p| p.fracture_id == j)
                    .map(|p| p.aperture),
            )
            .fold(T::zero(), T::max);
        let scale = if max_eps > T::zero() { max_eps } else { T::one() };
        Self::ThinInclusion {
            mobility: spec.mobility(),
            eps_floor: T::lit(1e-12) * scale,
        }
    }

    /// Thin-inclusion models for every fracture of the network.
    pub fn for_network(split: &SplitMesh<T>, network: &FractureNetwork<T>) -> Vec<Self> {
        (0..network.len())
            .map(|j| Self::thin_inclusion(split, network, j))
            .collect()
    }

    pub fn at_point(&self, aperture: T) -> InterfaceCoefficients<T> {
        match *self {
            Self::Uniform(c) => c,
            Self::ThinInclusion { mobility, eps_floor } => thin_inclusion_coeffs(mobility, aperture, eps_floor),
        }
    }

    pub fn at_nodes(&self, apertures: [T; 2]) -> [InterfaceCoefficients<T>; 2] {
        apertures.map(|a| self.at_point(a))
    }
}

/// Boundary datum: a constant or a function of position evaluated at nodes.
#[derive(Clone)]
pub enum BoundaryValue<T> {
    Constant(T),
    Function(Arc<dyn Fn(Point<T>) -> T + Send + Sync>),
}

impl<T: Real> BoundaryValue<T> {
    pub fn function(f: impl Fn(Point<T>) -> T + Send + Sync + 'static) -> Self {
        Self::Function(Arc::new(f))
    }

    pub fn eval(&self, at: Point<T>) -> T {
        match self {
            Self::Constant(v) => *v,
            Self::Function(f) => f(at),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for BoundaryValue<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl<T> From<T> for BoundaryValue<T> {
    fn from(v: T) -> Self {
        Self::Constant(v)
    }
}

/// Dirichlet (`p = g`) and Neumann (`-u·n = h`) data per boundary side.
/// Untagged sides are homogeneous Neumann.
#[derive(Debug, Clone, Default)]
pub struct BoundaryConditionSet<T> {
    pub dirichlet: BTreeMap<BoundaryTag, BoundaryValue<T>>,
    pub neumann: BTreeMap<BoundaryTag, BoundaryValue<T>>,
}

impl<T: Real> BoundaryConditionSet<T> {
    pub fn new() -> Self {
        Self {
            dirichlet: BTreeMap::new(),
            neumann: BTreeMap::new(),
        }
    }

    pub fn with_dirichlet(mut self, tag: BoundaryTag, g: impl Into<BoundaryValue<T>>) -> Self {
        self.dirichlet.insert(tag, g.into());
        self
    }

    pub fn with_neumann(mut self, tag: BoundaryTag, h: impl Into<BoundaryValue<T>>) -> Self {
        self.neumann.insert(tag, h.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(tag) = self.dirichlet.keys().find(|t| self.neumann.contains_key(t)) {
            return Err(Error::Configuration(format!(
                "boundary `{tag}` has both Dirichlet and Neumann data"
            )));
        }
        if self.dirichlet.is_empty() {
            return Err(Error::Configuration(
                "at least one Dirichlet boundary is required".into(),
            ));
        }
        Ok(())
    }

    pub fn tags(&self) -> impl Iterator<Item = BoundaryTag> + '_ {
        self.dirichlet.keys().chain(self.neumann.keys()).copied()
    }
}

/// Symmetric sparse system with its prescribed values.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem<T> {
    pub matrix: CsrMatrix<T>,
    pub rhs: Vec<T>,
    /// Prescribed value of every constrained DOF.
    pub dirichlet: BTreeMap<usize, T>,
}

impl<T: Real> LinearSystem<T> {
    pub fn n_dofs(&self) -> usize {
        self.rhs.len()
    }
}

/// Assembled system before Dirichlet elimination, with the bookkeeping
/// needed for consistent boundary-flux recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct UnconstrainedSystem<T> {
    pub system: LinearSystem<T>,
    /// Boundary side each constrained DOF is attributed to.
    pub dirichlet_tag: BTreeMap<usize, BoundaryTag>,
    /// Nodal Neumann loads per side, `(dof, load)`.
    pub neumann_loads: BTreeMap<BoundaryTag, Vec<(usize, T)>>,
    /// Sides carrying Dirichlet or Neumann data.
    pub tags: Vec<BoundaryTag>,
}

impl<T: Real> UnconstrainedSystem<T> {
    /// Symmetric elimination: known values move to the right-hand side,
    /// constrained rows and columns are replaced by identity.
    pub fn eliminate(&self) -> LinearSystem<T> {
        let raw = &self.system;
        let fixed = &raw.dirichlet;
        let mut rhs = raw.rhs.clone();
        for (i, r) in rhs.iter_mut().enumerate() {
            if fixed.contains_key(&i) {
                continue;
            }
            for (j, v) in raw.matrix.row(i) {
                if let Some(g) = fixed.get(&j) {
                    *r -= v * *g;
                }
            }
        }
        for (&d, &g) in fixed {
            rhs[d] = g;
        }
        let matrix = raw
            .matrix
            .filter_map(|i, j, v| match (fixed.contains_key(&i), fixed.contains_key(&j)) {
                (false, false) => Some(v),
                (true, _) if i == j => Some(T::one()),
                _ => None,
            });
        LinearSystem {
            matrix,
            rhs,
            dirichlet: fixed.clone(),
        }
    }
}

/// Assembles and eliminates the system for per-subdomain mobilities.
pub fn assemble<T: Real>(
    split: &SplitMesh<T>,
    k_per_subdomain: &[T],
    models: &[InterfaceModel<T>],
    bcs: &BoundaryConditionSet<T>,
) -> Result<LinearSystem<T>> {
    Ok(assemble_unconstrained(split, k_per_subdomain, models, bcs)?.eliminate())
}

/// Assembles without applying Dirichlet conditions.
pub fn assemble_unconstrained<T: Real>(
    split: &SplitMesh<T>,
    k_per_subdomain: &[T],
    models: &[InterfaceModel<T>],
    bcs: &BoundaryConditionSet<T>,
) -> Result<UnconstrainedSystem<T>> {
    if k_per_subdomain.len() != split.n_subdomains() {
        return Err(Error::Configuration(format!(
            "{} mobilities given for {} subdomains",
            k_per_subdomain.len(),
            split.n_subdomains()
        )));
    }
    let k_of_cell: Vec<T> = split.subdomain_of_cell().iter().map(|&s| k_per_subdomain[s]).collect();
    assemble_cellwise(split, &k_of_cell, models, bcs)
}

/// Assembles without Dirichlet conditions for a mobility given per cell.
pub fn assemble_cellwise<T: Real>(
    split: &SplitMesh<T>,
    k_of_cell: &[T],
    models: &[InterfaceModel<T>],
    bcs: &BoundaryConditionSet<T>,
) -> Result<UnconstrainedSystem<T>> {
    let mesh = split.mesh();
    if k_of_cell.len() != mesh.n_cells() {
        return Err(Error::Configuration("one mobility per cell expected".into()));
    }
    if let Some(k) = k_of_cell.iter().find(|k| !(**k > T::zero() && k.is_finite())) {
        return Err(Error::Configuration(format!("mobilities must be positive, got {k}")));
    }
    if models.len() != split.n_fractures() {
        return Err(Error::Configuration(format!(
            "interface coefficients given for {} of {} fractures",
            models.len(),
            split.n_fractures()
        )));
    }
    bcs.validate()?;
    for tag in bcs.tags() {
        if !mesh.boundary_facets().iter().any(|f| f.tag == tag) {
            return Err(Error::Configuration(format!("mesh has no boundary `{tag}`")));
        }
    }

    let n = split.n_dofs();
    // `a` holds the part of the form that vanishes on constants; reaction
    // terms on the mean are kept apart
    let mut a = TripletMatrix::with_capacity(n, 16 * mesh.n_cells());
    let mut reaction = TripletMatrix::new(n);
    let mut rhs = vec![T::zero(); n];
    let verts = mesh.vertices();

    for (c, nodes) in mesh.cells().enumerate() {
        let k = k_of_cell[c];
        match mesh.shape() {
            CellShape::Quad => {
                let pts = [verts[nodes[0]], verts[nodes[1]], verts[nodes[2]], verts[nodes[3]]];
                let ke = q1_stiffness(&pts, k)?;
                a.add_block(&[nodes[0], nodes[1], nodes[2], nodes[3]], &ke.entries);
            }
            CellShape::Segment => {
                let len = verts[nodes[1]].x - verts[nodes[0]].x;
                let ke = p1_segment_stiffness(len, [k, k])?;
                a.add_block(&[nodes[0], nodes[1]], &ke.entries);
            }
        }
    }

    let half = T::half();
    let mean_op = [[half, half, T::zero(), T::zero()], [T::zero(), T::zero(), half, half]];
    let jump_op = [
        [-T::one(), T::one(), T::zero(), T::zero()],
        [T::zero(), T::zero(), -T::one(), T::one()],
    ];
    for edge in split.interface_edges() {
        let [ca, cb] = models[edge.fracture_id].at_nodes(edge.aperture_at_nodes);
        ca.validate()?;
        cb.validate()?;
        let nodal = |f: fn(&InterfaceCoefficients<T>) -> T| [f(&ca), f(&cb)];
        let len = edge.length;
        let mut local = ElementMatrix::<T, 4>::zeros();
        add_projected(&mut local, &p1_segment_stiffness(len, nodal(|c| c.kappa_j))?, &mean_op);
        add_projected(&mut local, &p1_segment_stiffness(len, nodal(|c| c.kappa_a))?, &jump_op);
        add_projected(&mut local, &p1_segment_mass(len, nodal(|c| c.r_a))?, &jump_op);
        let dofs = edge.dofs();
        a.add_block(&dofs, &local.entries);
        if ca.r_j != T::zero() || cb.r_j != T::zero() {
            let mut local = ElementMatrix::<T, 4>::zeros();
            add_projected(&mut local, &p1_segment_mass(len, nodal(|c| c.r_j))?, &mean_op);
            reaction.add_block(&dofs, &local.entries);
        }

        let fj = facet_load_nodal(&edge.endpoints, &nodal(|c| c.h_j))?;
        let fa = facet_load_nodal(&edge.endpoints, &nodal(|c| c.h_a))?;
        for (q, &d) in dofs.iter().enumerate() {
            for node in 0..2 {
                rhs[d] += mean_op[node][q] * fj[node] + jump_op[node][q] * fa[node];
            }
        }
    }
    for pt in split.interface_points() {
        // a point interface: integrals reduce to evaluation, tangential terms vanish
        let c = models[pt.fracture_id].at_point(pt.aperture);
        c.validate()?;
        let (m, j) = ([half, half], [-T::one(), T::one()]);
        let dofs = [pt.pair.side1, pt.pair.side2];
        let mut block = [[T::zero(); 2]; 2];
        let mut mean_block = [[T::zero(); 2]; 2];
        for p in 0..2 {
            for q in 0..2 {
                block[p][q] = c.r_a * j[p] * j[q];
                mean_block[p][q] = c.r_j * m[p] * m[q];
            }
            rhs[dofs[p]] += c.h_j * m[p] + c.h_a * j[p];
        }
        a.add_block(&dofs, &block);
        if c.r_j != T::zero() {
            reaction.add_block(&dofs, &mean_block);
        }
    }

    let mut neumann_loads: BTreeMap<BoundaryTag, Vec<(usize, T)>> = BTreeMap::new();
    let mut dirichlet = BTreeMap::new();
    let mut dirichlet_tag = BTreeMap::new();
    // tag order decides which side owns a DOF shared by two Dirichlet sides
    let mut facets: Vec<_> = mesh.boundary_facets().iter().collect();
    facets.sort_by_key(|f| f.tag);
    for facet in facets {
        let nodes = mesh.facet_nodes(facet);
        if let Some(g) = bcs.dirichlet.get(&facet.tag) {
            for &v in nodes {
                if let std::collections::btree_map::Entry::Vacant(e) = dirichlet.entry(v) {
                    e.insert(g.eval(verts[v]));
                    dirichlet_tag.insert(v, facet.tag);
                }
            }
        } else if let Some(h) = bcs.neumann.get(&facet.tag) {
            let pts: Vec<_> = nodes.iter().map(|&v| verts[v]).collect();
            let hs: Vec<_> = pts.iter().map(|&p| h.eval(p)).collect();
            let load = facet_load_nodal(&pts, &hs)?;
            let entry = neumann_loads.entry(facet.tag).or_default();
            for (&v, l) in nodes.iter().zip(load) {
                rhs[v] += l;
                entry.push((v, l));
            }
        }
    }

    let mut tags: Vec<BoundaryTag> = bcs.tags().collect();
    tags.sort();
    let mut matrix = a.to_csr();
    matrix.close_row_sums();
    if reaction.nnz() > 0 {
        matrix = matrix.add(&reaction.to_csr())?;
    }
    Ok(UnconstrainedSystem {
        system: LinearSystem { matrix, rhs, dirichlet },
        dirichlet_tag,
        neumann_loads,
        tags,
    })
}

/// `local += Pᵀ X P` for a 2x4 projection `P`.
fn add_projected<T: Real>(local: &mut ElementMatrix<T, 4>, x: &ElementMatrix<T, 2>, p: &[[T; 4]; 2]) {
    for r in 0..4 {
        for c in 0..4 {
            let mut acc = T::zero();
            for a in 0..2 {
                for b in 0..2 {
                    acc += p[a][r] * x[(a, b)] * p[b][c];
                }
            }
            local[(r, c)] += acc;
        }
    }
}
