//! Reference solutions: closed-form 1D pressures for the resolved and the
//! interface model, and a 2D solver that meshes the inclusion as a thin band.

use crate::assembly::{assemble_cellwise, BoundaryConditionSet, UnconstrainedSystem};
use crate::error::{arg, Result};
use crate::fracture::{Aperture, FractureNetwork};
use crate::geometry::Point;
use crate::mesh::{build_tensor_quad, uniform_nodes};
use crate::scalar::Real;
use crate::solver::{solve, SolveOptions, SolveReport};
use crate::split::{split_mesh, SplitMesh};

/// Continuous piecewise-linear function on an interval, optionally with one
/// jump where a breakpoint is repeated.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear1D<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
    /// `breakpoints[jump] == breakpoints[jump + 1]`
    jump: Option<usize>,
}

impl<T: Real> PiecewiseLinear1D<T> {
    pub fn new(breakpoints: Vec<T>, values: Vec<T>, jump: Option<usize>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() {
            return arg("need at least two breakpoints with one value each");
        }
        if let Some(j) = jump {
            if j + 1 >= breakpoints.len() || breakpoints[j] != breakpoints[j + 1] {
                return arg(format!("breakpoint {j} is not repeated"));
            }
        }
        for k in 1..breakpoints.len() {
            let repeated = jump == Some(k - 1);
            if !(breakpoints[k] > breakpoints[k - 1] || repeated) {
                return arg("breakpoints must increase strictly away from the jump");
            }
        }
        Ok(Self {
            breakpoints,
            values,
            jump,
        })
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn domain(&self) -> (T, T) {
        (self.breakpoints[0], self.breakpoints[self.breakpoints.len() - 1])
    }

    /// Location and size `right - left` of the jump.
    pub fn jump(&self) -> Option<(T, T)> {
        self.jump
            .map(|j| (self.breakpoints[j], self.values[j + 1] - self.values[j]))
    }

    fn on_piece(&self, k: usize, x: T) -> T {
        let (x0, x1) = (self.breakpoints[k], self.breakpoints[k + 1]);
        let t = (x - x0) / (x1 - x0);
        self.values[k] + (self.values[k + 1] - self.values[k]) * t
    }

    /// Limit from the left; at the left end, the value there.
    pub fn eval_left(&self, x: T) -> T {
        let xs = &self.breakpoints;
        if x <= xs[0] {
            return self.values[0];
        }
        let k = (0..xs.len() - 1)
            .find(|&k| xs[k] < x && x <= xs[k + 1])
            .unwrap_or(xs.len() - 2);
        self.on_piece(k, x.min(xs[k + 1]))
    }

    /// Limit from the right; at the right end, the value there.
    pub fn eval_right(&self, x: T) -> T {
        let xs = &self.breakpoints;
        let last = xs.len() - 1;
        if x >= xs[last] {
            return self.values[last];
        }
        let k = (0..last).rev().find(|&k| xs[k] <= x && x < xs[k + 1]).unwrap_or(0);
        self.on_piece(k, x.max(xs[k]))
    }

    /// Value at `x`; the mean of both limits at the jump.
    pub fn eval(&self, x: T) -> T {
        match self.jump() {
            Some((xj, _)) if x == xj => (self.eval_left(x) + self.eval_right(x)) * T::half(),
            _ => self.eval_left(x),
        }
    }
}

/// 1D medium `[0, length]` with an inclusion of width `eps` centred at
/// `center`, flux `h` entering at `x = 0` and `p = 0` at `x = length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneDimProblem<T> {
    pub length: T,
    pub center: T,
    pub eps: T,
    pub k1: T,
    pub k2: T,
    pub kf: T,
    pub h: T,
}

impl<T: Real> OneDimProblem<T> {
    fn check(&self) -> Result<()> {
        let positive = [self.length, self.eps, self.k1, self.k2, self.kf];
        if positive.iter().any(|v| !(*v > T::zero() && v.is_finite())) || !self.h.is_finite() {
            return arg("length, width and mobilities must be positive and finite");
        }
        Ok(())
    }
}

/// Pressure of the resolved problem where the inclusion has mobility `kf`.
pub fn solve_1d_heterogeneous_analytic<T: Real>(pb: &OneDimProblem<T>) -> Result<PiecewiseLinear1D<T>> {
    pb.check()?;
    let a = pb.center - pb.eps * T::half();
    let b = pb.center + pb.eps * T::half();
    if !(a > T::zero() && b < pb.length) {
        return arg(format!("inclusion [{a}, {b}] does not fit inside (0, {})", pb.length));
    }
    let pb_ = pb.h * (pb.length - b) / pb.k2;
    let pa = pb_ + pb.h * pb.eps / pb.kf;
    let p0 = pa + pb.h * a / pb.k1;
    PiecewiseLinear1D::new(vec![T::zero(), a, b, pb.length], vec![p0, pa, pb_, T::zero()], None)
}

/// Pressure of the interface model: the inclusion collapses to `x = center`
/// where `[p] = -(eps / kf) h`.
pub fn solve_1d_interface_analytic<T: Real>(pb: &OneDimProblem<T>) -> Result<PiecewiseLinear1D<T>> {
    pb.check()?;
    let s = pb.center;
    if !(s > T::zero() && s < pb.length) {
        return arg(format!("interface {s} is not inside (0, {})", pb.length));
    }
    let p2 = pb.h * (pb.length - s) / pb.k2;
    let p1 = p2 + pb.h * pb.eps / pb.kf;
    let p0 = p1 + pb.h * s / pb.k1;
    PiecewiseLinear1D::new(vec![T::zero(), s, s, pb.length], vec![p0, p1, p2, T::zero()], Some(1))
}

/// Rectangular medium crossed by a vertical inclusion resolved as a band of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct EquidimProblem<T> {
    pub lower: Point<T>,
    pub upper: Point<T>,
    /// Uniform cells across the whole width before the band is inserted.
    pub nx_outside: usize,
    pub ny: usize,
    pub band_cells_across: usize,
    pub fracture_x: T,
    /// Vertical extent of the inclusion.
    pub fracture_y: (T, T),
    pub aperture: Aperture<T>,
    pub k_background: T,
    pub kf: T,
}

impl<T: Real> EquidimProblem<T> {
    /// Inclusion spanning the full height with two band cells across.
    pub fn full_height(
        lower: Point<T>,
        upper: Point<T>,
        n: usize,
        fracture_x: T,
        aperture: Aperture<T>,
        k_background: T,
        kf: T,
    ) -> Self {
        Self {
            lower,
            upper,
            nx_outside: n,
            ny: n,
            band_cells_across: 2,
            fracture_x,
            fracture_y: (lower.y, upper.y),
            aperture,
            k_background,
            kf,
        }
    }

    /// x-coordinates: the uniform grid outside the band plus equal band columns.
    pub fn x_nodes(&self) -> Result<Vec<T>> {
        if self.nx_outside == 0 || self.ny == 0 || self.band_cells_across == 0 {
            return arg("cell counts must be positive");
        }
        if !(self.kf > T::zero() && self.k_background > T::zero()) {
            return arg("mobilities must be positive");
        }
        let w = self.aperture.max_value();
        if !(w > T::zero() && w.is_finite()) {
            return arg("aperture must be positive");
        }
        let (x0, x1) = (self.fracture_x - w * T::half(), self.fracture_x + w * T::half());
        if !(x0 > self.lower.x && x1 < self.upper.x) {
            return arg(format!("band [{x0}, {x1}] does not fit inside the domain"));
        }
        let merge = T::lit(1e-12) * (self.upper.x - self.lower.x);
        let mut xs: Vec<T> = uniform_nodes(self.lower.x, self.upper.x, self.nx_outside)
            .into_iter()
            .filter(|x| !(*x > x0 + merge && *x < x1 - merge))
            .collect();
        let nb = self.band_cells_across;
        xs.extend((0..=nb).map(|i| {
            if i == nb {
                x1
            } else {
                x0 + w * T::from_count(i) / T::from_count(nb)
            }
        }));
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
        xs.dedup_by(|a, b| (*a - *b).abs() <= merge);
        Ok(xs)
    }
}

/// Resolved solution together with its mesh and recovered system.
#[derive(Debug, Clone)]
pub struct EquidimSolution<T> {
    pub split: SplitMesh<T>,
    pub k_of_cell: Vec<T>,
    pub system: UnconstrainedSystem<T>,
    pub pressure: Vec<T>,
    pub report: SolveReport,
}

/// Solves the resolved problem; a cell belongs to the inclusion when its
/// centre lies within the local half-aperture of the fracture line.
pub fn solve_equidim_2d<T: Real>(
    pb: &EquidimProblem<T>,
    bcs: &BoundaryConditionSet<T>,
    opts: SolveOptions,
) -> Result<EquidimSolution<T>> {
    let xs = pb.x_nodes()?;
    let ys = uniform_nodes(pb.lower.y, pb.upper.y, pb.ny);
    let mesh = build_tensor_quad(&xs, &ys)?;
    let split = split_mesh(&mesh, &FractureNetwork::empty())?;
    let (y0, y1) = pb.fracture_y;
    let k_of_cell: Vec<T> = (0..mesh.n_cells())
        .map(|c| {
            let m = mesh.cell_centroid(c);
            let on_line = Point::new(pb.fracture_x, m.y);
            let inside = m.y > y0 && m.y < y1 && (m.x - pb.fracture_x).abs() < pb.aperture.eval(on_line) * T::half();
            if inside {
                pb.kf
            } else {
                pb.k_background
            }
        })
        .collect();
    let system = assemble_cellwise(&split, &k_of_cell, &[], bcs)?;
    let reduced = system.eliminate();
    let (pressure, report) = solve(&reduced.matrix, &reduced.rhs, opts)?;
    Ok(EquidimSolution {
        split,
        k_of_cell,
        system,
        pressure,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryTag;

    fn thin_layer(h: f64) -> OneDimProblem<f64> {
        OneDimProblem {
            length: 1.0,
            center: 0.5,
            eps: 1e-4,
            k1: 1.0,
            k2: 1.0,
            kf: 1e-4,
            h,
        }
    }

    #[test]
    fn heterogeneous_examples() {
        let p = solve_1d_heterogeneous_analytic(&thin_layer(1.0)).unwrap();
        assert!((p.eval(0.0) - 1.9999).abs() < 1e-12);
        assert_eq!(p.eval(1.0), 0.0);
        let uniform = OneDimProblem {
            eps: 0.2,
            kf: 1.0,
            ..thin_layer(1.0)
        };
        let p = solve_1d_heterogeneous_analytic(&uniform).unwrap();
        for x in [0.0, 0.13, 0.45, 0.5, 0.77, 1.0] {
            assert!((p.eval(x) - (1.0 - x)).abs() < 1e-14);
        }
        let p = solve_1d_heterogeneous_analytic(&thin_layer(0.0)).unwrap();
        assert!(p.values().iter().all(|v| *v == 0.0));
        let wide = OneDimProblem {
            eps: 1.0,
            ..thin_layer(1.0)
        };
        assert!(solve_1d_heterogeneous_analytic(&wide).is_err());
    }

    #[test]
    fn interface_examples() {
        let p = solve_1d_interface_analytic(&thin_layer(1.0)).unwrap();
        let (at, jump) = p.jump().unwrap();
        assert_eq!(at, 0.5);
        assert!((jump + 1.0).abs() < 1e-12);
        assert!((p.eval(0.0) - 2.0).abs() < 1e-12);
        assert!((p.eval_left(0.5) - 1.5).abs() < 1e-12);
        assert!((p.eval_right(0.5) - 0.5).abs() < 1e-12);
        assert!((p.eval(0.5) - 1.0).abs() < 1e-12);
        for eps in [1e-1, 1e-3, 1e-6] {
            let pb = OneDimProblem {
                eps,
                kf: eps,
                ..thin_layer(1.0)
            };
            let (_, j) = solve_1d_interface_analytic(&pb).unwrap().jump().unwrap();
            assert!((j + 1.0).abs() < 1e-12);
        }
        let p = solve_1d_interface_analytic(&thin_layer(0.0)).unwrap();
        assert_eq!(p.jump().unwrap().1, 0.0);
        let outside = OneDimProblem {
            center: 1.5,
            ..thin_layer(1.0)
        };
        assert!(solve_1d_interface_analytic(&outside).is_err());
    }

    #[test]
    fn piecewise_validation() {
        assert!(PiecewiseLinear1D::new(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0], None).is_err());
        assert!(PiecewiseLinear1D::new(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0], Some(1)).is_ok());
        assert!(PiecewiseLinear1D::new(vec![0.0, 1.0], vec![0.0], None).is_err());
    }

    #[test]
    fn band_node_count() {
        let pb = EquidimProblem::full_height(
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            1000,
            0.5,
            Aperture::Constant(1e-4),
            1.0,
            1e-4,
        );
        assert_eq!(pb.x_nodes().unwrap().len() - 1, 1002);
        let wide = EquidimProblem {
            aperture: Aperture::Constant(1.5),
            ..pb
        };
        assert!(wide.x_nodes().is_err());
    }

    fn one_dim_bcs() -> BoundaryConditionSet<f64> {
        BoundaryConditionSet::new()
            .with_neumann(BoundaryTag::Left, 1.0)
            .with_dirichlet(BoundaryTag::Right, 0.0)
    }

    #[test]
    fn equidim_matches_1d() {
        for kf in [1e-2, 1e2] {
            let pb = EquidimProblem::full_height(
                Point::new(0.0, 0.0),
                Point::new(1.0, 1.0),
                20,
                0.5,
                Aperture::Constant(1e-2),
                1.0,
                kf,
            );
            let opts = SolveOptions {
                tol: 1e-14,
                max_iter: None,
            };
            let sol = solve_equidim_2d(&pb, &one_dim_bcs(), opts).unwrap();
            let exact = solve_1d_heterogeneous_analytic(&OneDimProblem {
                length: 1.0,
                center: 0.5,
                eps: 1e-2,
                k1: 1.0,
                k2: 1.0,
                kf,
                h: 1.0,
            })
            .unwrap();
            let verts = sol.split.mesh().vertices();
            let err = verts
                .iter()
                .zip(&sol.pressure)
                .map(|(v, p)| (p - exact.eval(v.x)).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "kf {kf}: {err}");
        }
    }

    #[test]
    fn equidim_uniform_band_is_invisible() {
        let bcs = BoundaryConditionSet::new()
            .with_dirichlet(BoundaryTag::Left, 1.0_f64)
            .with_dirichlet(BoundaryTag::Right, 0.0);
        let pb = EquidimProblem::full_height(
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            10,
            0.5,
            Aperture::Constant(0.5),
            1.0,
            1.0,
        );
        let sol = solve_equidim_2d(&pb, &bcs, SolveOptions::default()).unwrap();
        for (v, p) in sol.split.mesh().vertices().iter().zip(&sol.pressure) {
            assert!((p - (1.0 - v.x)).abs() < 1e-10);
        }
    }
}
