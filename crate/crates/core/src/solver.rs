//! Symmetric positive-definite solvers: preconditioned conjugate gradient
//! (point or block Jacobi), and dense Cholesky for small systems.

use std::fmt;

use crate::error::{arg, Error, Result};
use crate::scalar::Real;
use crate::sparse::CsrMatrix;

/// Systems at or below this size fall back to dense Cholesky when CG fails.
pub const DENSE_FALLBACK_MAX_DOFS: usize = 500;

/// CG gives up after this many residual restarts without progress.
const STALL_RESTARTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    ConjugateGradient,
    DenseCholesky,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub method: SolveMethod,
    pub iterations: usize,
    /// `‖b - A x‖ / ‖b‖` recomputed from the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
    /// Preconditioned residual norm `sqrt(rᵀ M⁻¹ r)` relative to its initial value, per iteration.
    pub preconditioned_history: Vec<f64>,
    /// Energy `½ xᵀA x - bᵀx` of each iterate, starting from `x = 0`.
    pub energy_history: Vec<f64>,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} after {} iterations, relative residual {:.3e}, converged: {}",
            self.method, self.iterations, self.relative_residual, self.converged
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    /// Defaults to ten times the system size.
    pub max_iter: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn residual<T: Real>(a: &CsrMatrix<T>, x: &[T], b: &[T]) -> Vec<T> {
    let ax = a.mul_vec(x);
    b.iter().zip(ax).map(|(bi, axi)| *bi - axi).collect()
}

/// Block-diagonal preconditioner: the exact inverse of the diagonal blocks
/// of `A` over a partition of the unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Preconditioner<T> {
    /// `(dofs, inverse block)` for groups of two or more unknowns.
    blocks: Vec<(Vec<usize>, Vec<Vec<T>>)>,
    /// Inverse diagonal for the remaining unknowns, zero inside blocks.
    inv_diag: Vec<T>,
}

impl<T: Real> Preconditioner<T> {
    /// Point Jacobi; non-positive diagonal entries are left unscaled.
    pub fn jacobi(a: &CsrMatrix<T>) -> Self {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .map(|d| if d > T::zero() { T::one() / d } else { T::one() })
            .collect();
        Self {
            blocks: Vec::new(),
            inv_diag,
        }
    }

    /// Block Jacobi over `groups`; unknowns outside every group get point
    /// Jacobi. A block that is not positive definite falls back to its diagonal.
    pub fn block_jacobi(a: &CsrMatrix<T>, groups: &[Vec<usize>]) -> Result<Self> {
        let mut pc = Self::jacobi(a);
        let mut used = vec![false; a.dim()];
        for g in groups.iter().filter(|g| g.len() > 1) {
            for &d in g {
                if d >= a.dim() || std::mem::replace(&mut used[d], true) {
                    return arg(format!("preconditioner group has an invalid or repeated unknown {d}"));
                }
            }
            let block: Vec<Vec<T>> = g.iter().map(|&i| g.iter().map(|&j| a.get(i, j)).collect()).collect();
            let m = g.len();
            let mut inv = vec![vec![T::zero(); m]; m];
            let mut ok = true;
            for c in 0..m {
                let mut e = vec![T::zero(); m];
                e[c] = T::one();
                match cholesky_solve(&block, &e) {
                    Ok(col) => (0..m).for_each(|r| inv[r][c] = col[r]),
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                for &d in g {
                    pc.inv_diag[d] = T::zero();
                }
                pc.blocks.push((g.clone(), inv));
            }
        }
        Ok(pc)
    }

    pub fn dim(&self) -> usize {
        self.inv_diag.len()
    }

    /// `z = M⁻¹ r`
    pub fn apply(&self, r: &[T], z: &mut [T]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = *ri * *di;
        }
        for (dofs, inv) in &self.blocks {
            for (row, &i) in inv.iter().zip(dofs) {
                z[i] = row.iter().zip(dofs).map(|(v, &j)| *v * r[j]).sum();
            }
        }
    }
}

/// Jacobi-preconditioned conjugate gradient from a zero initial guess.
pub fn cg_solve<T: Real>(a: &CsrMatrix<T>, b: &[T], tol: f64, max_iter: usize) -> Result<(Vec<T>, SolveReport)> {
    pcg_solve(a, b, &Preconditioner::jacobi(a), tol, max_iter)
}

/// Preconditioned conjugate gradient from a zero initial guess.
///
/// When the recurrence residual reaches `tol`, the true residual is
/// recomputed; if it has drifted above `tol` the iteration restarts from the
/// current iterate.
pub fn pcg_solve<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    pc: &Preconditioner<T>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<T>, SolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return arg(format!("right-hand side has length {} for a {n}x{n} matrix", b.len()));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return arg(format!("tolerance must lie in (0, 1), got {tol}"));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("right-hand side is not finite".into()));
    }
    if pc.dim() != n {
        return arg("preconditioner size does not match the matrix");
    }
    let precondition = |r: &[T], z: &mut [T]| pc.apply(r, z);

    let mut x = vec![T::zero(); n];
    let bnorm = norm(b);
    let mut report = SolveReport {
        method: SolveMethod::ConjugateGradient,
        iterations: 0,
        relative_residual: 0.0,
        converged: true,
        preconditioned_history: Vec::new(),
        energy_history: vec![0.0],
    };
    if bnorm == T::zero() {
        return Ok((x, report));
    }
    let target = T::lit(tol) * bnorm;

    let mut r = b.to_vec();
    let mut z = vec![T::zero(); n];
    let mut ap = vec![T::zero(); n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let rz0 = rz;
    report.preconditioned_history.push(1.0);

    let mut converged = false;
    // restarts that failed to improve the best true residual; the iterate is
    // at the rounding floor of `A x` once these pile up
    let mut best_true = T::infinity();
    let mut stalled = 0;
    while report.iterations < max_iter {
        report.iterations += 1;
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || !rz.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite value in CG at iteration {}",
                report.iterations
            )));
        }
        if pap <= T::zero() {
            return Err(Error::Numerical(format!(
                "matrix is not positive definite (pᵀAp = {pap})"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        // Ax = b - r
        let energy = -T::half()
            * x.iter()
                .zip(b.iter().zip(&r))
                .map(|(xi, (bi, ri))| *xi * (*bi + *ri))
                .sum::<T>();
        report.energy_history.push(energy.as_f64());
        let restart = norm(&r) <= target;
        if restart {
            r = residual(a, &x, b);
            let true_norm = norm(&r);
            if true_norm <= target {
                converged = true;
                break;
            }
            if true_norm < T::lit(0.9) * best_true {
                best_true = true_norm;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= STALL_RESTARTS {
                    break;
                }
            }
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        report.preconditioned_history.push((rz_new / rz0).abs().sqrt().as_f64());
        if restart {
            p.copy_from_slice(&z);
        } else {
            let beta = rz_new / rz;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        rz = rz_new;
    }
    report.relative_residual = (norm(&residual(a, &x, b)) / bnorm).as_f64();
    report.converged = converged;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("CG produced non-finite values".into()));
    }
    if !converged {
        return Err(Error::Solver(report));
    }
    Ok((x, report))
}

/// Solves a dense SPD system by Cholesky factorization.
pub fn cholesky_solve<T: Real>(a: &[Vec<T>], b: &[T]) -> Result<Vec<T>> {
    let n = a.len();
    if b.len() != n || a.iter().any(|row| row.len() != n) {
        return arg("dense system dimensions do not match");
    }
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: T = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > T::zero()) {
                    return Err(Error::Numerical(format!(
                        "matrix is not positive definite (pivot {i} = {d})"
                    )));
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let s: T = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let s: T = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Ok(x)
}

/// Jacobi CG with a dense Cholesky fallback for small systems that CG fails on.
pub fn solve<T: Real>(a: &CsrMatrix<T>, b: &[T], opts: SolveOptions) -> Result<(Vec<T>, SolveReport)> {
    solve_preconditioned(a, b, &Preconditioner::jacobi(a), opts)
}

/// As [`solve`] with a given preconditioner.
pub fn solve_preconditioned<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    pc: &Preconditioner<T>,
    opts: SolveOptions,
) -> Result<(Vec<T>, SolveReport)> {
    let max_iter = opts.max_iter.unwrap_or(10 * a.dim().max(1));
    match pcg_solve(a, b, pc, opts.tol, max_iter) {
        Err(Error::Solver(cg_report)) if a.dim() <= DENSE_FALLBACK_MAX_DOFS => {
            let x = cholesky_solve(&a.to_dense(), b)?;
            let bnorm = norm(b);
            let rel = if bnorm > T::zero() {
                (norm(&residual(a, &x, b)) / bnorm).as_f64()
            } else {
                0.0
            };
            Ok((
                x,
                SolveReport {
                    method: SolveMethod::DenseCholesky,
                    iterations: cg_report.iterations,
                    relative_residual: rel,
                    converged: rel <= opts.tol,
                    preconditioned_history: cg_report.preconditioned_history,
                    energy_history: cg_report.energy_history,
                },
            ))
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_in_one_iteration() {
        let a = CsrMatrix::<f64>::identity(5);
        let b = vec![1.0, -2.0, 3.5, 0.25, 7.0];
        let (x, rep) = cg_solve(&a, &b, 1e-12, 10).unwrap();
        assert_eq!(x, b);
        assert!(rep.iterations <= 1);
    }

    #[test]
    fn two_by_two_hand_solution() {
        let a = CsrMatrix::from_dense(&[vec![4.0_f64, 1.0], vec![1.0, 3.0]]).unwrap();
        let (x, rep) = cg_solve(&a, &[1.0, 2.0], 1e-14, 10).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
        assert!(rep.converged && rep.relative_residual <= 1e-14);
        let xc = cholesky_solve(&a.to_dense(), &[1.0, 2.0]).unwrap();
        assert!((xc[0] - 1.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rhs() {
        let a = CsrMatrix::<f64>::identity(3);
        let (x, rep) = cg_solve(&a, &[0.0; 3], 1e-10, 10).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn non_convergence_reports() {
        let n = 50;
        let mut t = crate::sparse::TripletMatrix::new(n);
        for i in 0..n {
            t.push(i, i, 2.0);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
        }
        let a = t.to_csr();
        let b = vec![1.0_f64; n];
        match cg_solve(&a, &b, 1e-12, 3) {
            Err(Error::Solver(rep)) => {
                assert_eq!(rep.iterations, 3);
                assert!(!rep.converged);
            }
            other => panic!("expected solver error, got {other:?}"),
        }
        // the fallback recovers small systems
        let (x, rep) = solve(
            &a,
            &b,
            SolveOptions {
                tol: 1e-12,
                max_iter: Some(3),
            },
        )
        .unwrap();
        assert_eq!(rep.method, SolveMethod::DenseCholesky);
        assert!(rep.converged);
        assert!((x[0] - 25.0).abs() < 1e-9);
    }

    #[test]
    fn indefinite_detected() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(matches!(cg_solve(&a, &[0.0, 1.0], 1e-10, 10), Err(Error::Numerical(_))));
        assert!(cholesky_solve(&a.to_dense(), &[0.0, 1.0]).is_err());
    }

    #[test]
    fn bad_arguments() {
        let a = CsrMatrix::<f64>::identity(2);
        assert!(cg_solve(&a, &[1.0], 1e-10, 10).is_err());
        assert!(cg_solve(&a, &[1.0, 1.0], 0.0, 10).is_err());
        assert!(matches!(
            cg_solve(&a, &[f64::NAN, 1.0], 1e-10, 10),
            Err(Error::Numerical(_))
        ));
    }

    fn coupled_pairs() -> CsrMatrix<f64> {
        // two stiff pairs joined by a soft spring
        CsrMatrix::from_dense(&[
            vec![1e8 + 1.0, -1e8, 0.0, 0.0],
            vec![-1e8, 1e8 + 2.0, -1.0, 0.0],
            vec![0.0, -1.0, 1e8 + 2.0, -1e8],
            vec![0.0, 0.0, -1e8, 1e8 + 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn block_preconditioner_inverts_its_blocks() {
        let a = CsrMatrix::from_dense(&[vec![4.0_f64, 1.0, 0.0], vec![1.0, 3.0, 0.0], vec![0.0, 0.0, 2.0]]).unwrap();
        let pc = Preconditioner::block_jacobi(&a, &[vec![0, 1]]).unwrap();
        let (x, rep) = pcg_solve(&a, &[1.0, 2.0, 4.0], &pc, 1e-14, 5).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-15 && (x[2] - 2.0).abs() < 1e-15);
        assert!(Preconditioner::block_jacobi(&a, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(Preconditioner::block_jacobi(&a, &[vec![0, 7]]).is_err());
    }

    #[test]
    fn block_preconditioner_on_stiff_pairs() {
        let a = coupled_pairs();
        let b = [1.0, 0.0, 0.0, -1.0];
        let exact = cholesky_solve(&a.to_dense(), &b).unwrap();
        let pc = Preconditioner::block_jacobi(&a, &[vec![0, 1], vec![2, 3]]).unwrap();
        let (x, rep) = pcg_solve(&a, &b, &pc, 1e-7, 20).unwrap();
        assert!(rep.converged);
        for (u, v) in x.iter().zip(&exact) {
            assert!((u - v).abs() < 1e-8 * v.abs().max(1.0));
        }
    }

    #[test]
    fn energy_decreases() {
        let n = 40;
        let mut t = crate::sparse::TripletMatrix::new(n);
        for i in 0..n {
            t.push(i, i, 2.0_f64 + (i % 3) as f64);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
        }
        let a = t.to_csr();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let (_, rep) = cg_solve(&a, &b, 1e-12, 200).unwrap();
        assert_eq!(rep.energy_history.len(), rep.iterations + 1);
        for w in rep.energy_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
    }
}
