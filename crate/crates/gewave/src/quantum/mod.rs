//! 1-D time-independent Schrödinger problems and the residual fitness.
//!
//! A trial wavefunction ψ is scored by how well it solves Hψ = Eψ with
//! H = -(ħ²/2m) d²/dx² + V(x). The residual L(ψ) = Hψ - Eψ is sampled at T
//! equidistant interior collocation points and summed (squared by default),
//! then a normalization penalty λ(∫ψ² - 1)² and, for the infinite well, a
//! wall penalty μ(ψ(a)² + ψ(b)²) are added. Any evaluation failure anywhere
//! converts the whole score into one large penalty value. Lower is better;
//! an exact normalized eigenpair scores ~0.
//!
//! [`oracle`] holds an independent finite-difference eigensolver used to
//! validate evolved energies without trusting any of the symbolic path.

pub mod oracle;

pub use oracle::{fd_eigenvalue, fd_ground_state};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{differentiate, evaluate, DomainError, Env, Expression, RbfConfig, Var};

/// Simpson panel count used for all internal integrals.
pub const DEFAULT_QUAD_PANELS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("domain must satisfy a < b")]
    InvalidDomain,
    #[error("wavefunction norm is too small for a Rayleigh quotient")]
    NearZeroNorm,
    #[error("grid size must be at least {min}")]
    GridTooSmall { min: usize },
    #[error("potential is not finite on the interior grid")]
    PotentialNotFinite,
    #[error("eigenvalue bisection did not converge")]
    NoConvergence,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// The potential V(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// V = 0 on the open interval; infinitely high walls at the domain
    /// endpoints, enforced through the boundary penalty rather than by
    /// evaluating an infinite V.
    InfiniteWell,
    /// V(x) = ω²x²/2, ω > 0.
    Harmonic { omega: f64 },
    /// Arbitrary expression in x.
    Custom { expr: Expression },
}

impl PotentialSpec {
    pub fn value_at(&self, x: f64, rbf: &RbfConfig) -> Result<f64, DomainError> {
        match self {
            PotentialSpec::InfiniteWell => Ok(0.0),
            PotentialSpec::Harmonic { omega } => Ok(0.5 * omega * omega * x * x),
            PotentialSpec::Custom { expr } => evaluate(expr, &Env::x(x), rbf),
        }
    }
}

/// How the energy E in the residual is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMode {
    /// E is known and held fixed.
    Fixed(f64),
    /// E is estimated per candidate by the Rayleigh quotient ∫ψHψ / ∫ψ².
    Rayleigh,
}

/// Which integral the normalization penalty constrains to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormConvention {
    /// ∫ψ² = 1, the physical normalization. Default.
    PsiSquared,
    /// ∫ψ = 1 taken literally.
    PsiLiteral,
}

/// How per-point residuals are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualForm {
    /// Sum of squared residuals. Default: signed residuals cancel and give
    /// no meaningful minimization target.
    Squared,
    /// Sum of absolute residuals, for comparison runs.
    Abs,
}

/// Full problem definition: domain, potential, energy handling, physical
/// constants, and fitness weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub a: f64,
    pub b: f64,
    pub potential: PotentialSpec,
    pub energy_mode: EnergyMode,
    pub hbar: f64,
    pub mass: f64,
    /// Collocation point count T.
    pub collocation_count: usize,
    /// Weight of the normalization penalty.
    pub lambda_norm: f64,
    /// Weight of the wall penalty (infinite well only).
    pub mu_boundary: f64,
    /// Fitness assigned to rejected or unevaluable candidates. Must exceed
    /// every attainable valid total.
    pub penalty_fitness: f64,
    pub norm_convention: NormConvention,
    pub residual_form: ResidualForm,
}

impl ProblemSpec {
    /// Infinite square well on [0,1] with the known ground energy π²/2.
    pub fn infinite_well() -> ProblemSpec {
        ProblemSpec {
            a: 0.0,
            b: 1.0,
            potential: PotentialSpec::InfiniteWell,
            energy_mode: EnergyMode::Fixed(std::f64::consts::PI * std::f64::consts::PI / 2.0),
            ..ProblemSpec::defaults()
        }
    }

    /// Harmonic oscillator at desk scale: ω = 1 on [-5, 5], E = ω/2.
    pub fn harmonic() -> ProblemSpec {
        ProblemSpec {
            a: -5.0,
            b: 5.0,
            potential: PotentialSpec::Harmonic { omega: 1.0 },
            energy_mode: EnergyMode::Fixed(0.5),
            ..ProblemSpec::defaults()
        }
    }

    /// Harmonic oscillator with the published constant ω = √20·10² on
    /// [-0.5, 0.5].
    pub fn harmonic_paper() -> ProblemSpec {
        let omega = 20f64.sqrt() * 100.0;
        ProblemSpec {
            a: -0.5,
            b: 0.5,
            potential: PotentialSpec::Harmonic { omega },
            energy_mode: EnergyMode::Fixed(omega / 2.0),
            ..ProblemSpec::defaults()
        }
    }

    fn defaults() -> ProblemSpec {
        ProblemSpec {
            a: 0.0,
            b: 1.0,
            potential: PotentialSpec::InfiniteWell,
            energy_mode: EnergyMode::Rayleigh,
            hbar: 1.0,
            mass: 1.0,
            collocation_count: 100,
            lambda_norm: 100.0,
            mu_boundary: 100.0,
            penalty_fitness: 1e10,
            norm_convention: NormConvention::PsiSquared,
            residual_form: ResidualForm::Squared,
        }
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        if !(self.a < self.b) {
            return Err(QuantumError::InvalidDomain);
        }
        Ok(())
    }
}

/// Fitness breakdown for one candidate wavefunction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub residual_sse: f64,
    pub norm_penalty: f64,
    pub boundary_penalty: f64,
    /// Sum of the three components when valid; the penalty fitness when not.
    pub total: f64,
    pub energy_used: f64,
    pub valid: bool,
}

impl FitnessReport {
    pub fn penalty(penalty_fitness: f64) -> FitnessReport {
        FitnessReport {
            residual_sse: 0.0,
            norm_penalty: 0.0,
            boundary_penalty: 0.0,
            total: penalty_fitness,
            energy_used: 0.0,
            valid: false,
        }
    }
}

/// The T equidistant interior points x_j = a + j(b-a)/(T+1), j = 1..T.
/// Staying strictly inside (a,b) keeps infinite-well walls out of the
/// sample set.
pub fn collocation_points(a: f64, b: f64, t: usize) -> Result<Vec<f64>, QuantumError> {
    if !(a < b) {
        return Err(QuantumError::InvalidDomain);
    }
    let step = (b - a) / (t as f64 + 1.0);
    Ok((1..=t).map(|j| a + j as f64 * step).collect())
}

/// Apply H = -(ħ²/2m) d²/dx² + V(x) to ψ at a point strictly inside (a,b).
pub fn apply_hamiltonian(
    psi: &Expression,
    problem: &ProblemSpec,
    rbf: &RbfConfig,
    x: f64,
) -> Result<f64, DomainError> {
    let psi_dd = differentiate(&differentiate(psi, Var::X, rbf), Var::X, rbf);
    hamiltonian_at(psi, &psi_dd, problem, rbf, x)
}

fn hamiltonian_at(
    psi: &Expression,
    psi_dd: &Expression,
    problem: &ProblemSpec,
    rbf: &RbfConfig,
    x: f64,
) -> Result<f64, DomainError> {
    let env = Env::x(x);
    let kinetic = -(problem.hbar * problem.hbar) / (2.0 * problem.mass);
    let v = kinetic * evaluate(psi_dd, &env, rbf)?
        + problem.potential.value_at(x, rbf)? * evaluate(psi, &env, rbf)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DomainError::NonFinite)
    }
}

/// The residual L(ψ)(x) = (Hψ)(x) - E·ψ(x).
pub fn residual(
    psi: &Expression,
    problem: &ProblemSpec,
    rbf: &RbfConfig,
    energy: f64,
    x: f64,
) -> Result<f64, DomainError> {
    let h = apply_hamiltonian(psi, problem, rbf, x)?;
    let p = evaluate(psi, &Env::x(x), rbf)?;
    let v = h - energy * p;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DomainError::NonFinite)
    }
}

/// Composite Simpson estimate of ∫_a^b f with `panels` panels (≥ 2, even).
pub fn quadrature<F>(f: F, a: f64, b: f64, panels: usize) -> Result<f64, DomainError>
where
    F: Fn(f64) -> Result<f64, DomainError>,
{
    assert!(panels >= 2 && panels % 2 == 0, "panel count must be even and at least 2");
    assert!(a < b, "integration bounds must satisfy a < b");
    let h = (b - a) / panels as f64;
    let mut sum = f(a)? + f(b)?;
    for i in 1..panels {
        let x = a + i as f64 * h;
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(x)?;
    }
    let v = sum * h / 3.0;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DomainError::NonFinite)
    }
}

/// Rayleigh-quotient energy estimate E = ∫ψ·(Hψ) / ∫ψ² over [a,b].
pub fn rayleigh_energy(
    psi: &Expression,
    problem: &ProblemSpec,
    rbf: &RbfConfig,
) -> Result<f64, QuantumError> {
    problem.validate()?;
    let psi_dd = differentiate(&differentiate(psi, Var::X, rbf), Var::X, rbf);
    rayleigh_energy_prepared(psi, &psi_dd, problem, rbf)
}

fn rayleigh_energy_prepared(
    psi: &Expression,
    psi_dd: &Expression,
    problem: &ProblemSpec,
    rbf: &RbfConfig,
) -> Result<f64, QuantumError> {
    let norm = quadrature(
        |x| evaluate(psi, &Env::x(x), rbf).map(|v| v * v),
        problem.a,
        problem.b,
        DEFAULT_QUAD_PANELS,
    )?;
    if norm.abs() <= 1e-12 {
        return Err(QuantumError::NearZeroNorm);
    }
    let overlap = quadrature(
        |x| {
            let p = evaluate(psi, &Env::x(x), rbf)?;
            let h = hamiltonian_at(psi, psi_dd, problem, rbf, x)?;
            Ok(p * h)
        },
        problem.a,
        problem.b,
        DEFAULT_QUAD_PANELS,
    )?;
    let e = overlap / norm;
    if e.is_finite() {
        Ok(e)
    } else {
        Err(QuantumError::Domain(DomainError::NonFinite))
    }
}

/// Score a candidate wavefunction. Never fails: every rejection, domain
/// error, or invalid configuration is encoded as the penalty fitness.
pub fn fitness(psi: &Expression, problem: &ProblemSpec, rbf: &RbfConfig) -> FitnessReport {
    match fitness_inner(psi, problem, rbf) {
        Ok(report) => report,
        Err(_) => FitnessReport::penalty(problem.penalty_fitness),
    }
}

fn fitness_inner(
    psi: &Expression,
    problem: &ProblemSpec,
    rbf: &RbfConfig,
) -> Result<FitnessReport, QuantumError> {
    problem.validate()?;
    let psi_dd = differentiate(&differentiate(psi, Var::X, rbf), Var::X, rbf);

    let energy = match problem.energy_mode {
        EnergyMode::Fixed(e) => e,
        EnergyMode::Rayleigh => rayleigh_energy_prepared(psi, &psi_dd, problem, rbf)?,
    };

    let mut residual_sse = 0.0;
    for x in collocation_points(problem.a, problem.b, problem.collocation_count)? {
        let env = Env::x(x);
        let r = hamiltonian_at(psi, &psi_dd, problem, rbf, x)?
            - energy * evaluate(psi, &env, rbf)?;
        if !r.is_finite() {
            return Err(QuantumError::Domain(DomainError::NonFinite));
        }
        residual_sse += match problem.residual_form {
            ResidualForm::Squared => r * r,
            ResidualForm::Abs => r.abs(),
        };
    }

    let q = match problem.norm_convention {
        NormConvention::PsiSquared => quadrature(
            |x| evaluate(psi, &Env::x(x), rbf).map(|v| v * v),
            problem.a,
            problem.b,
            DEFAULT_QUAD_PANELS,
        )?,
        NormConvention::PsiLiteral => quadrature(
            |x| evaluate(psi, &Env::x(x), rbf),
            problem.a,
            problem.b,
            DEFAULT_QUAD_PANELS,
        )?,
    };
    let norm_penalty = problem.lambda_norm * (q - 1.0) * (q - 1.0);

    let boundary_penalty = match problem.potential {
        PotentialSpec::InfiniteWell => {
            let pa = evaluate(psi, &Env::x(problem.a), rbf)?;
            let pb = evaluate(psi, &Env::x(problem.b), rbf)?;
            problem.mu_boundary * (pa * pa + pb * pb)
        }
        _ => 0.0,
    };

    let total = residual_sse + norm_penalty + boundary_penalty;
    if !total.is_finite() {
        return Err(QuantumError::Domain(DomainError::NonFinite));
    }
    Ok(FitnessReport {
        residual_sse,
        norm_penalty,
        boundary_penalty,
        total,
        energy_used: energy,
        valid: true,
    })
}
