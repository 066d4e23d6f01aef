//! Independent finite-difference eigensolver.
//!
//! Discretizes -(ħ²/2m)ψ″ + Vψ = Eψ on N interior points of [a,b] with
//! Dirichlet walls using the 3-point stencil, then finds eigenvalues of the
//! resulting symmetric tridiagonal matrix by bisection on its Sturm
//! sequence and the eigenvector by shifted inverse iteration. Nothing here
//! touches the expression or mapping machinery, so evolved results can be
//! checked against it without circularity.

use super::{PotentialSpec, ProblemSpec, QuantumError};
use crate::expr::RbfConfig;

const MIN_GRID: usize = 10;
const MAX_BISECTIONS: usize = 300;

struct Tridiagonal {
    /// Diagonal entries.
    diag: Vec<f64>,
    /// Off-diagonal entry (constant for the uniform grid).
    off: f64,
    /// Grid spacing.
    h: f64,
}

fn discretize(problem: &ProblemSpec, rbf: &RbfConfig, n: usize) -> Result<Tridiagonal, QuantumError> {
    problem.validate()?;
    if n < MIN_GRID {
        return Err(QuantumError::GridTooSmall { min: MIN_GRID });
    }
    let h = (problem.b - problem.a) / (n as f64 + 1.0);
    let kinetic = problem.hbar * problem.hbar / (2.0 * problem.mass * h * h);
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let x = problem.a + (i as f64 + 1.0) * h;
        let v = match &problem.potential {
            PotentialSpec::InfiniteWell => 0.0,
            other => other.value_at(x, rbf).map_err(|_| QuantumError::PotentialNotFinite)?,
        };
        if !v.is_finite() {
            return Err(QuantumError::PotentialNotFinite);
        }
        diag.push(2.0 * kinetic + v);
    }
    Ok(Tridiagonal { diag, off: -kinetic, h })
}

/// Number of eigenvalues strictly below `lambda`, via the Sturm sequence of
/// the shifted matrix.
fn count_below(t: &Tridiagonal, lambda: f64) -> usize {
    let off2 = t.off * t.off;
    let pivmin = 1e-300_f64.max(f64::EPSILON * t.diag.iter().fold(0.0f64, |m, d| m.max(d.abs())));
    let mut count = 0;
    let mut q = 0.0;
    for (i, &d) in t.diag.iter().enumerate() {
        q = if i == 0 { d - lambda } else { d - lambda - off2 / q };
        if q < 0.0 {
            count += 1;
        }
        if q.abs() < pivmin {
            q = -pivmin;
        }
    }
    count
}

/// The `index`-th eigenvalue (0 = smallest) of the discretized Hamiltonian.
pub fn fd_eigenvalue(
    problem: &ProblemSpec,
    rbf: &RbfConfig,
    n: usize,
    index: usize,
) -> Result<f64, QuantumError> {
    let t = discretize(problem, rbf, n)?;
    let radius = 2.0 * t.off.abs();
    let mut lo = t.diag.iter().cloned().fold(f64::INFINITY, f64::min) - radius;
    let mut hi = t.diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + radius;
    let tol = 1e-12 * hi.abs().max(lo.abs()).max(1.0);

    let mut iterations = 0;
    while hi - lo > tol {
        iterations += 1;
        if iterations > MAX_BISECTIONS {
            return Err(QuantumError::NoConvergence);
        }
        let mid = 0.5 * (lo + hi);
        if count_below(&t, mid) >= index + 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Ground-state energy and grid eigenvector, normalized so Σψ²·h = 1.
pub fn fd_ground_state(
    problem: &ProblemSpec,
    rbf: &RbfConfig,
    n: usize,
) -> Result<(f64, Vec<f64>), QuantumError> {
    let energy = fd_eigenvalue(problem, rbf, n, 0)?;
    let t = discretize(problem, rbf, n)?;
    let psi = inverse_iteration(&t, energy)?;
    Ok((energy, psi))
}

/// Solve (T - shift·I) out = rhs with the Thomas algorithm, guarding tiny
/// pivots. Near-singularity at an eigenvalue shift is what makes inverse
/// iteration converge, so huge solutions are expected and fine.
fn solve_shifted(t: &Tridiagonal, shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = t.diag.len();
    let pivmin = 1e-300_f64.max(f64::EPSILON * t.diag.iter().fold(0.0f64, |m, d| m.max(d.abs())));
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = t.diag[0] - shift;
    if pivot.abs() < pivmin {
        pivot = pivmin;
    }
    c[0] = t.off / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        let mut denom = t.diag[i] - shift - t.off * c[i - 1];
        if denom.abs() < pivmin {
            denom = pivmin;
        }
        c[i] = t.off / denom;
        d[i] = (rhs[i] - t.off * d[i - 1]) / denom;
    }
    let mut out = vec![0.0; n];
    out[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = d[i] - c[i] * out[i + 1];
    }
    out
}

fn inverse_iteration(t: &Tridiagonal, energy: f64) -> Result<Vec<f64>, QuantumError> {
    let n = t.diag.len();
    // The all-ones start vector has a large overlap with a nodeless ground
    // state.
    let mut v: Vec<f64> = vec![1.0; n];
    normalize(&mut v, t.h)?;
    for _ in 0..4 {
        v = solve_shifted(t, energy, &v);
        normalize(&mut v, t.h)?;
    }
    // Fix the sign so the dominant lobe is positive.
    let peak = v.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if peak < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    Ok(v)
}

fn normalize(v: &mut [f64], h: f64) -> Result<(), QuantumError> {
    let norm = (v.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return Err(QuantumError::NoConvergence);
    }
    for x in v.iter_mut() {
        *x /= norm;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rbf() -> RbfConfig {
        RbfConfig::default()
    }

    #[test]
    fn box_ground_energy_matches_analytic() {
        let p = ProblemSpec::infinite_well();
        let (e0, _) = fd_ground_state(&p, &rbf(), 2000).unwrap();
        assert!((e0 - PI * PI / 2.0).abs() < 1e-3, "{e0}");
    }

    #[test]
    fn box_second_eigenvalue_matches_analytic() {
        let p = ProblemSpec::infinite_well();
        let e1 = fd_eigenvalue(&p, &rbf(), 2000, 1).unwrap();
        assert!((e1 - 2.0 * PI * PI).abs() < 1e-2, "{e1}");
    }

    #[test]
    fn harmonic_ground_energy_matches_analytic() {
        let mut p = ProblemSpec::harmonic();
        p.a = -8.0;
        p.b = 8.0;
        let (e0, _) = fd_ground_state(&p, &rbf(), 2000).unwrap();
        assert!((e0 - 0.5).abs() < 1e-3, "{e0}");
    }

    #[test]
    fn ground_state_vector_matches_box_eigenfunction() {
        let p = ProblemSpec::infinite_well();
        let n = 500;
        let (_, psi) = fd_ground_state(&p, &rbf(), n).unwrap();
        let h = 1.0 / (n as f64 + 1.0);
        // Continuum ground state √2 sin(πx), same normalization.
        for (i, &v) in psi.iter().enumerate().step_by(50) {
            let x = (i as f64 + 1.0) * h;
            let want = 2.0f64.sqrt() * (PI * x).sin();
            assert!((v - want).abs() < 1e-3, "at {x}: {v} vs {want}");
        }
    }

    #[test]
    fn grid_vector_is_normalized() {
        let p = ProblemSpec::harmonic();
        let n = 800;
        let (_, psi) = fd_ground_state(&p, &rbf(), n).unwrap();
        let h = 10.0 / (n as f64 + 1.0);
        let norm: f64 = psi.iter().map(|x| x * x).sum::<f64>() * h;
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_tiny_grids() {
        let p = ProblemSpec::infinite_well();
        assert_eq!(
            fd_ground_state(&p, &rbf(), 5).unwrap_err(),
            QuantumError::GridTooSmall { min: 10 }
        );
    }

    #[test]
    fn custom_potential_with_domain_error_is_rejected() {
        let mut p = ProblemSpec::infinite_well();
        p.potential = PotentialSpec::Custom {
            expr: crate::expr::parse_expression("log(0-x)").unwrap(),
        };
        assert_eq!(
            fd_ground_state(&p, &rbf(), 100).unwrap_err(),
            QuantumError::PotentialNotFinite
        );
    }

    #[test]
    fn eigenvalues_are_ordered() {
        let p = ProblemSpec::infinite_well();
        let e: Vec<f64> =
            (0..4).map(|k| fd_eigenvalue(&p, &rbf(), 400, k).unwrap()).collect();
        assert!(e.windows(2).all(|w| w[0] < w[1]), "{e:?}");
        // n²π²/2 spectrum.
        for (k, ek) in e.iter().enumerate() {
            let want = ((k + 1) * (k + 1)) as f64 * PI * PI / 2.0;
            assert!((ek - want).abs() / want < 1e-3, "level {k}: {ek} vs {want}");
        }
    }
}
