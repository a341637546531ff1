//! Quantities extracted from a nodal solution: pressure profiles along
//! segments, fracture pressure and jump, consistent boundary fluxes.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::assembly::UnconstrainedSystem;
use crate::error::{arg, geom, Result};
use crate::fem::q1_shape_values;
use crate::geometry::{BoundaryTag, Point};
use crate::mesh::CellShape;
use crate::scalar::Real;
use crate::split::{NodePair, SplitMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample<T> {
    /// Arc length from the profile start.
    pub s: T,
    pub point: Point<T>,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile<T> {
    pub segment: (Point<T>, Point<T>),
    pub samples: Vec<ProfileSample<T>>,
}

impl<T: Real> Profile<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn values(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.value).collect()
    }

    /// `max - min` of the sampled values.
    pub fn range(&self) -> T {
        let (lo, hi) = self
            .samples
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), s| {
                (lo.min(s.value), hi.max(s.value))
            });
        if self.samples.is_empty() {
            T::zero()
        } else {
            hi - lo
        }
    }

    /// Same abscissae with values replaced by `f(point)`.
    pub fn map_points(&self, mut f: impl FnMut(Point<T>) -> T) -> Self {
        Self {
            segment: self.segment,
            samples: self
                .samples
                .iter()
                .map(|s| ProfileSample {
                    value: f(s.point),
                    ..*s
                })
                .collect(),
        }
    }

    /// CSV with header `s,x,y,p`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "s,x,y,p")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                s.s.as_f64(),
                s.point.x.as_f64(),
                s.point.y.as_f64(),
                s.value.as_f64()
            )?;
        }
        Ok(())
    }
}

/// Local coordinates of `p` in cell `c`, if the cell contains it.
fn locate_in_cell<T: Real>(split: &SplitMesh<T>, c: usize, p: Point<T>, tol: T) -> Option<Vec<(usize, T)>> {
    let mesh = split.mesh();
    let nodes = mesh.cell(c);
    let pts = mesh.cell_points(c);
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for q in &pts {
        lo = Point::new(lo.x.min(q.x), lo.y.min(q.y));
        hi = Point::new(hi.x.max(q.x), hi.y.max(q.y));
    }
    if p.x < lo.x - tol || p.x > hi.x + tol || p.y < lo.y - tol || p.y > hi.y + tol {
        return None;
    }
    let slack = T::lit(1e-9);
    match mesh.shape() {
        CellShape::Segment => {
            let t = (p.x - pts[0].x) / (pts[1].x - pts[0].x);
            Some(vec![(nodes[0], T::one() - t), (nodes[1], t)])
        }
        CellShape::Quad => {
            // Newton on the bilinear map
            let (mut xi, mut eta) = (T::zero(), T::zero());
            for _ in 0..30 {
                let phi = q1_shape_values(xi, eta);
                let q = T::lit(0.25);
                let dxi = [-(T::one() - eta), T::one() - eta, T::one() + eta, -(T::one() + eta)];
                let deta = [-(T::one() - xi), -(T::one() + xi), T::one() + xi, T::one() - xi];
                let mut f = Point::default();
                let (mut a, mut b, mut cc, mut d) = (T::zero(), T::zero(), T::zero(), T::zero());
                for k in 0..4 {
                    f = f + pts[k] * phi[k];
                    a += q * dxi[k] * pts[k].x;
                    b += q * deta[k] * pts[k].x;
                    cc += q * dxi[k] * pts[k].y;
                    d += q * deta[k] * pts[k].y;
                }
                let r = f - p;
                let det = a * d - b * cc;
                let step_xi = (d * r.x - b * r.y) / det;
                let step_eta = (-cc * r.x + a * r.y) / det;
                xi -= step_xi;
                eta -= step_eta;
                if step_xi.abs().max(step_eta.abs()) < T::epsilon() * T::lit(4.0) {
                    break;
                }
            }
            let lim = T::one() + slack;
            if xi.abs() > lim || eta.abs() > lim {
                return None;
            }
            let phi = q1_shape_values(xi.max(-T::one()).min(T::one()), eta.max(-T::one()).min(T::one()));
            Some(nodes.iter().copied().zip(phi).collect())
        }
    }
}

/// Value at `p`; on an interface the distinct side limits are averaged.
pub fn evaluate_at<T: Real>(split: &SplitMesh<T>, solution: &[T], p: Point<T>) -> Result<T> {
    let tol = T::lit(1e-12) * split.mesh().diameter();
    let cutoff = T::lit(1e-10);
    let mut seen: Vec<(Vec<usize>, T)> = Vec::new();
    for c in 0..split.mesh().n_cells() {
        let Some(weights) = locate_in_cell(split, c, p, tol) else {
            continue;
        };
        let mut key: Vec<usize> = weights
            .iter()
            .filter(|(_, w)| w.abs() > cutoff)
            .map(|(v, _)| *v)
            .collect();
        key.sort_unstable();
        if seen.iter().any(|(k, _)| *k == key) {
            continue;
        }
        let value = weights.iter().map(|(v, w)| solution[*v] * *w).sum();
        seen.push((key, value));
    }
    if seen.is_empty() {
        return geom(format!("point {p} lies outside the mesh"));
    }
    Ok(seen.iter().map(|(_, v)| *v).sum::<T>() / T::from_count(seen.len()))
}

/// `n` equispaced samples of the solution along a segment.
pub fn sample_profile<T: Real>(
    split: &SplitMesh<T>,
    solution: &[T],
    segment: (Point<T>, Point<T>),
    n: usize,
) -> Result<Profile<T>> {
    if n < 2 {
        return arg("a profile needs at least two samples");
    }
    check_solution(split, solution)?;
    let (a, b) = segment;
    let len = a.distance(b);
    if !(len > T::zero()) {
        return arg("profile segment has zero length");
    }
    let samples = (0..n)
        .map(|i| {
            let t = T::from_count(i) / T::from_count(n - 1);
            let point = if i == n - 1 { b } else { a.lerp(b, t) };
            Ok(ProfileSample {
                s: len * t,
                point,
                value: evaluate_at(split, solution, point)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Profile { segment, samples })
}

fn check_solution<T: Real>(split: &SplitMesh<T>, solution: &[T]) -> Result<()> {
    if solution.len() != split.n_dofs() {
        return arg(format!(
            "solution has {} entries for {} DOFs",
            solution.len(),
            split.n_dofs()
        ));
    }
    Ok(())
}

/// Samples `f(pair, orientation)` at every vertex of fracture `j`, averaging
/// the two edges meeting at interior path vertices.
fn fracture_trace<T: Real>(
    split: &SplitMesh<T>,
    solution: &[T],
    j: usize,
    f: impl Fn(NodePair, T) -> T,
) -> Result<Profile<T>> {
    if j >= split.n_fractures() {
        return arg(format!(
            "unknown fracture {j}; the mesh has {} fractures",
            split.n_fractures()
        ));
    }
    check_solution(split, solution)?;
    if let Some(pt) = split.interface_points().iter().find(|p| p.fracture_id == j) {
        let point = Point::on_line(pt.location);
        return Ok(Profile {
            segment: (point, point),
            samples: vec![ProfileSample {
                s: T::zero(),
                point,
                value: f(pt.pair, T::one()),
            }],
        });
    }
    let edges: Vec<_> = split.edges_of_fracture(j).collect();
    let mut samples: Vec<ProfileSample<T>> = Vec::with_capacity(edges.len() + 1);
    let mut s = T::zero();
    let reference = edges[0].eta.dot(edges[0].tangent().perp()).signum();
    for (k, e) in edges.iter().enumerate() {
        let sign = e.eta.dot(e.tangent().perp()).signum() * reference;
        let va = f(e.node_pairs[0], sign);
        let vb = f(e.node_pairs[1], sign);
        if k == 0 {
            samples.push(ProfileSample {
                s,
                point: e.endpoints[0],
                value: va,
            });
        } else {
            let last = samples.last_mut().expect("first vertex pushed");
            last.value = (last.value + va) * T::half();
        }
        s += e.length;
        samples.push(ProfileSample {
            s,
            point: e.endpoints[1],
            value: vb,
        });
    }
    Ok(Profile {
        segment: (edges[0].endpoints[0], edges[edges.len() - 1].endpoints[1]),
        samples,
    })
}

/// Fracture pressure `{p}` at each vertex along fracture `j`.
pub fn fracture_pressure<T: Real>(split: &SplitMesh<T>, solution: &[T], j: usize) -> Result<Profile<T>> {
    fracture_trace(split, solution, j, |pair, _| {
        (solution[pair.side1] + solution[pair.side2]) * T::half()
    })
}

/// Pressure jump `[p]` at each vertex along fracture `j`, oriented by the
/// side-1 to side-2 normal of the fracture's first edge.
pub fn fracture_jump<T: Real>(split: &SplitMesh<T>, solution: &[T], j: usize) -> Result<Profile<T>> {
    fracture_trace(split, solution, j, |pair, sign| {
        sign * (solution[pair.side2] - solution[pair.side1])
    })
}

/// Net boundary inflow `∫ -u·n` through each side carrying boundary data,
/// recovered from the residual of the unconstrained system.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxBalance<T> {
    pub per_tag: BTreeMap<BoundaryTag, T>,
    /// Total positive inflow.
    pub inflow: T,
    /// `|Σ fluxes|`
    pub defect: T,
}

/// Net inflow through `tag`: the residual `A p - f` summed over its
/// constrained DOFs plus its prescribed Neumann loads.
pub fn boundary_flux<T: Real>(system: &UnconstrainedSystem<T>, solution: &[T], tag: BoundaryTag) -> Result<T> {
    if !system.tags.contains(&tag) {
        return arg(format!("boundary `{tag}` carries no boundary data"));
    }
    if solution.len() != system.system.n_dofs() {
        return arg("solution length does not match the system");
    }
    let a = &system.system.matrix;
    let f = &system.system.rhs;
    let mut flux = T::zero();
    for (&d, _) in system.dirichlet_tag.iter().filter(|(_, t)| **t == tag) {
        let ap: T = a.row(d).map(|(j, v)| v * solution[j]).sum();
        flux += ap - f[d];
    }
    if let Some(loads) = system.neumann_loads.get(&tag) {
        flux += loads.iter().map(|(_, l)| *l).sum();
    }
    Ok(flux)
}

pub fn flux_balance<T: Real>(system: &UnconstrainedSystem<T>, solution: &[T]) -> Result<FluxBalance<T>> {
    let mut per_tag = BTreeMap::new();
    for &tag in &system.tags {
        per_tag.insert(tag, boundary_flux(system, solution, tag)?);
    }
    let total: T = per_tag.values().copied().sum();
    let inflow = per_tag.values().map(|v| v.max(T::zero())).sum();
    Ok(FluxBalance {
        per_tag,
        inflow,
        defect: total.abs(),
    })
}

/// Trapezoid-weighted L2 and max-norm differences of two profiles sharing abscissae.
pub fn profile_error<T: Real>(a: &Profile<T>, b: &Profile<T>) -> Result<(T, T)> {
    if a.len() != b.len() || a.is_empty() {
        return arg(format!("profiles have {} and {} samples", a.len(), b.len()));
    }
    let tol = T::lit(1e-12);
    if a.samples
        .iter()
        .zip(&b.samples)
        .any(|(x, y)| (x.s - y.s).abs() > tol * (T::one() + x.s.abs()))
    {
        return arg("profiles are sampled at different arc lengths");
    }
    let d: Vec<T> = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| x.value - y.value)
        .collect();
    let max = d.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let mut sq = T::zero();
    for k in 1..d.len() {
        let h = a.samples[k].s - a.samples[k - 1].s;
        sq += h * T::half() * (d[k] * d[k] + d[k - 1] * d[k - 1]);
    }
    Ok((sq.sqrt(), max))
}

/// CSV with header `vertex,x,y,subdomain,p`, one row per DOF.
pub fn write_solution_csv<T: Real, W: Write>(split: &SplitMesh<T>, solution: &[T], mut w: W) -> io::Result<()> {
    writeln!(w, "vertex,x,y,subdomain,p")?;
    let sub = split.subdomain_of_vertex();
    for (v, p) in split.mesh().vertices().iter().enumerate() {
        writeln!(
            w,
            "{v},{:.16e},{:.16e},{},{:.16e}",
            p.x.as_f64(),
            p.y.as_f64(),
            sub[v],
            solution[v].as_f64()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracture::{Aperture, FractureNetwork, FractureSpec};
    use crate::mesh::build_structured_quad;
    use crate::split::split_mesh;

    fn flat(s: &[f64], v: impl Fn(f64) -> f64) -> Profile<f64> {
        Profile {
            segment: (Point::new(0.0, 0.0), Point::new(*s.last().unwrap(), 0.0)),
            samples: s
                .iter()
                .map(|&s| ProfileSample {
                    s,
                    point: Point::new(s, 0.0),
                    value: v(s),
                })
                .collect(),
        }
    }

    #[test]
    fn profile_error_examples() {
        let s: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let a = flat(&s, |x| x);
        assert_eq!(profile_error(&a, &a).unwrap(), (0.0, 0.0));
        let (l2, max) = profile_error(&flat(&s, |_| 0.25), &flat(&s, |_| 0.0)).unwrap();
        assert!((l2 - 0.25).abs() < 1e-14 && (max - 0.25).abs() < 1e-15);
        let fine: Vec<f64> = (0..=20000).map(|i| i as f64 / 20000.0).collect();
        let (l2, _) = profile_error(&flat(&fine, |x| x), &flat(&fine, |_| 0.0)).unwrap();
        assert!((l2 - 1.0 / 3f64.sqrt()).abs() < 1e-8);
        let shifted: Vec<f64> = s.iter().map(|x| x * 0.5).collect();
        assert!(profile_error(&a, &flat(&shifted, |x| x)).is_err());
    }

    #[test]
    fn constant_solution_profile() {
        let m = build_structured_quad(4, 4, Point::new(0.0_f64, 0.0), Point::new(1.0, 1.0)).unwrap();
        let net = FractureNetwork::new(vec![FractureSpec::new(
            vec![Point::new(0.5, 0.0), Point::new(0.5, 1.0)],
            Aperture::Constant(0.1),
            1.0,
        )
        .unwrap()]);
        let s = split_mesh(&m, &net).unwrap();
        let sol = vec![3.5_f64; s.n_dofs()];
        let p = sample_profile(&s, &sol, (Point::new(0.0, 0.7), Point::new(1.0, 0.7)), 101).unwrap();
        assert!(p.samples.iter().all(|x| (x.value - 3.5).abs() < 1e-14));
        assert!((p.samples[1].s - 0.01).abs() < 1e-15);
        assert_eq!(p.samples[100].s, 1.0);
        let f = fracture_pressure(&s, &sol, 0).unwrap();
        assert_eq!(f.len(), 5);
        assert!(fracture_pressure(&s, &sol, 1).is_err());
        assert!(sample_profile(&s, &sol, (Point::new(0.0, 0.7), Point::new(2.0, 0.7)), 3).is_err());
    }

    #[test]
    fn interface_sample_averages_sides() {
        let m = build_structured_quad(2, 2, Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap();
        let net = FractureNetwork::new(vec![FractureSpec::new(
            vec![Point::new(0.5, 0.0), Point::new(0.5, 1.0)],
            Aperture::Constant(0.1),
            1.0,
        )
        .unwrap()]);
        let s = split_mesh(&m, &net).unwrap();
        let sub = s.subdomain_of_vertex();
        let sol: Vec<f64> = sub.iter().map(|&d| if d == 0 { 1.0 } else { 3.0 }).collect();
        let v = evaluate_at(&s, &sol, Point::new(0.5, 0.3)).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        let v = evaluate_at(&s, &sol, Point::new(0.5, 0.5)).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        let j = fracture_jump(&s, &sol, 0).unwrap();
        assert!(j.samples.iter().all(|x| (x.value - 2.0).abs() < 1e-14));
    }

    #[test]
    fn csv_format() {
        let p = flat(&[0.0, 1.0], |x| x / 3.0);
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "s,x,y,p");
        assert_eq!(lines.len(), 3);
        let p_last: f64 = lines[2].split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(p_last, 1.0 / 3.0);
        assert!(text.ends_with('\n'));
    }
}
