//! Thin inclusions: geometry, aperture profile and mobility of each fracture.

use crate::error::{arg, Result};
use crate::geometry::Point;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aperture<T> {
    Constant(T),
    /// Aperture of an ellipse with the given axes, measured across its major axis.
    /// The fracture path is expected to run along that axis through `center`.
    Elliptical {
        center: Point<T>,
        major: T,
        minor: T,
    },
}

impl<T: Real> Aperture<T> {
    pub fn eval(&self, at: Point<T>) -> T {
        match *self {
            Self::Constant(eps) => eps,
            Self::Elliptical { center, major, minor } => {
                let r = at.distance(center) / (major * T::half());
                minor * (T::one() - r * r).max(T::zero()).sqrt()
            }
        }
    }

    pub fn max_value(&self) -> T {
        match *self {
            Self::Constant(eps) => eps,
            Self::Elliptical { minor, .. } => minor,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant(eps) if !(eps > T::zero() && eps.is_finite()) => {
                arg(format!("constant aperture must be positive, got {eps}"))
            }
            Self::Elliptical { center, major, minor }
                if !(major > T::zero() && minor > T::zero() && center.is_finite()) =>
            {
                arg("elliptical aperture needs positive axes and a finite center")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractureSpec<T> {
    path: Vec<Point<T>>,
    aperture: Aperture<T>,
    mobility: T,
}

impl<T: Real> FractureSpec<T> {
    /// Straight-segment polyline fracture for 2D meshes.
    pub fn new(path: Vec<Point<T>>, aperture: Aperture<T>, mobility: T) -> Result<Self> {
        if path.len() < 2 {
            return arg("a fracture path needs at least two points");
        }
        if path.windows(2).any(|w| w[0] == w[1]) {
            return arg("consecutive fracture path points must be distinct");
        }
        Self::checked(path, aperture, mobility)
    }

    /// Point inclusion at `x` for 1D interval meshes.
    pub fn point(x: T, aperture: Aperture<T>, mobility: T) -> Result<Self> {
        Self::checked(vec![Point::on_line(x)], aperture, mobility)
    }

    fn checked(path: Vec<Point<T>>, aperture: Aperture<T>, mobility: T) -> Result<Self> {
        if path.iter().any(|p| !p.is_finite()) {
            return arg("fracture path has non-finite coordinates");
        }
        aperture.validate()?;
        if !(mobility > T::zero() && mobility.is_finite()) {
            return arg(format!("fracture mobility must be positive, got {mobility}"));
        }
        Ok(Self {
            path,
            aperture,
            mobility,
        })
    }

    pub fn path(&self) -> &[Point<T>] {
        &self.path
    }

    pub fn aperture(&self) -> &Aperture<T> {
        &self.aperture
    }

    pub fn mobility(&self) -> T {
        self.mobility
    }

    pub fn is_point(&self) -> bool {
        self.path.len() == 1
    }

    pub fn length(&self) -> T {
        self.path.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FractureNetwork<T> {
    pub fractures: Vec<FractureSpec<T>>,
}

impl<T: Real> FractureNetwork<T> {
    pub fn new(fractures: Vec<FractureSpec<T>>) -> Self {
        Self { fractures }
    }

    pub fn empty() -> Self {
        Self { fractures: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.fractures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractures.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_profile() {
        let a = Aperture::Elliptical {
            center: Point::new(0.5_f64, 0.5),
            major: 1.0 + 1e-4,
            minor: 1e-4,
        };
        assert!((a.eval(Point::new(0.5, 0.5)) - 1e-4).abs() < 1e-18);
        let tip = a.eval(Point::new(0.5, 1.0));
        assert!(tip > 0.0 && tip < 2e-6);
        assert_eq!(a.eval(Point::new(0.5, 2.0)), 0.0);
        // symmetric about the center
        assert!((a.eval(Point::new(0.5, 0.3)) - a.eval(Point::new(0.5, 0.7))).abs() < 1e-18);
    }

    #[test]
    fn invalid_specs() {
        let p = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        assert!(FractureSpec::new(p.clone(), Aperture::Constant(0.0), 1.0).is_err());
        assert!(FractureSpec::new(p.clone(), Aperture::Constant(1e-4), 0.0).is_err());
        assert!(FractureSpec::new(vec![p[0]], Aperture::Constant(1e-4), 1.0).is_err());
        assert!(FractureSpec::new(vec![p[0], p[0]], Aperture::Constant(1e-4), 1.0).is_err());
        assert!(FractureSpec::new(p, Aperture::Constant(1e-4), 1.0).is_ok());
    }
}
