//! Primal, adjoint and sensitivity solves for `(γA + M + μD) U = μ S`, and
//! the constraint functional `F(μ) = δᵀ A U`.

use std::io::Write;

use crate::assembly::AssembledSystem;
use crate::csv::{fmt_num, Provenance};
use crate::error::{FpError, Result};
use crate::tridiag::{dot, norm_inf, Tridiagonal, TridiagonalLu};

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub mu: f64,
    /// Nodal values at the unknown nodes.
    pub u: Vec<f64>,
    /// `F(μ) = δᵀ A U`.
    pub f_value: f64,
    /// Normwise backward error `‖K U - μ S‖∞ / (‖K‖∞ ‖U‖∞ + ‖μ S‖∞)`.
    pub residual: f64,
    /// Most negative nodal value (zero if none).
    pub min_value: f64,
}

impl SolveResult {
    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.u)
    }

    /// `min U / ‖U‖∞`, the scale-free positivity diagnostic.
    pub fn relative_undershoot(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            self.min_value / scale
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdjointResult {
    pub mu: f64,
    pub psi: Vec<f64>,
    /// `μ Ψᵀ S`.
    pub duality_value: f64,
}

impl AdjointResult {
    /// True when `Ψ` does not increase along `r` (up to `tol · ‖Ψ‖∞`).
    pub fn is_nonincreasing(&self, tol: f64) -> bool {
        let slack = tol * norm_inf(&self.psi);
        self.psi.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

#[derive(Debug, Clone)]
pub struct SensitivityResult {
    pub mu: f64,
    pub u_prime: Vec<f64>,
    /// `F'(μ) = δᵀ A U'`.
    pub fprime_value: f64,
}

fn check_mu(mu: f64) -> Result<()> {
    if mu.is_finite() && mu >= 0.0 {
        Ok(())
    } else {
        Err(FpError::param(format!("mu must be finite and >= 0, got {mu}")))
    }
}

/// Backward-error bound accepted from a direct solve.
pub const SOLVER_TOLERANCE: f64 = 1e-12;

fn relative_residual(k: &Tridiagonal, x: &[f64], rhs: &[f64]) -> f64 {
    let kx = k.matvec(x);
    let r: Vec<f64> = kx.iter().zip(rhs).map(|(a, b)| a - b).collect();
    let scale = k.norm_inf() * norm_inf(x) + norm_inf(rhs);
    if scale == 0.0 {
        0.0
    } else {
        norm_inf(&r) / scale
    }
}

/// Factored system at one value of `μ`, shared by the primal and sensitivity
/// solves.
pub struct FactoredSystem<'a> {
    sys: &'a AssembledSystem,
    mu: f64,
    matrix: Tridiagonal,
    lu: TridiagonalLu,
}

impl<'a> FactoredSystem<'a> {
    pub fn new(sys: &'a AssembledSystem, mu: f64) -> Result<Self> {
        check_mu(mu)?;
        let matrix = sys.system_matrix(mu);
        let lu = matrix.factor()?;
        Ok(Self { sys, mu, matrix, lu })
    }

    pub fn matrix(&self) -> &Tridiagonal {
        &self.matrix
    }

    pub fn primal(&self) -> Result<SolveResult> {
        let sys = self.sys;
        let rhs: Vec<f64> = sys.load.iter().map(|s| self.mu * s).collect();
        let mut u = rhs.clone();
        self.lu.solve_in_place(&mut u)?;
        let residual = relative_residual(&self.matrix, &u, &rhs);
        let min_value = u.iter().copied().fold(0.0, f64::min);
        Ok(SolveResult {
            mu: self.mu,
            f_value: sys.inner(&sys.kernel, &u),
            u,
            residual,
            min_value,
        })
    }

    /// Solves `K U' = S - D U` for the primal solution `u` at the same `μ`.
    pub fn sensitivity(&self, u: &[f64]) -> Result<SensitivityResult> {
        let sys = self.sys;
        if u.len() != sys.size() {
            return Err(FpError::DimensionMismatch {
                expected: sys.size(),
                found: u.len(),
            });
        }
        let du = sys.drift().matvec(u);
        let mut u_prime: Vec<f64> = sys.load.iter().zip(&du).map(|(s, d)| s - d).collect();
        self.lu.solve_in_place(&mut u_prime)?;
        Ok(SensitivityResult {
            mu: self.mu,
            fprime_value: sys.inner(&sys.kernel, &u_prime),
            u_prime,
        })
    }
}

pub fn solve_primal(sys: &AssembledSystem, mu: f64) -> Result<SolveResult> {
    FactoredSystem::new(sys, mu)?.primal()
}

/// Solves `Kᵀ Ψ = A δ`.
pub fn solve_adjoint(sys: &AssembledSystem, mu: f64) -> Result<AdjointResult> {
    check_mu(mu)?;
    let kt = sys.system_matrix(mu).transpose();
    let rhs = sys.mass.matvec(&sys.kernel);
    let psi = kt.solve(&rhs)?;
    Ok(AdjointResult {
        mu,
        duality_value: mu * dot(&psi, &sys.load),
        psi,
    })
}

pub fn solve_sensitivity(sys: &AssembledSystem, mu: f64, u: &[f64]) -> Result<SensitivityResult> {
    FactoredSystem::new(sys, mu)?.sensitivity(u)
}

/// `(F(μ), F'(μ))` from one factorization.
pub fn evaluate(sys: &AssembledSystem, mu: f64) -> Result<(SolveResult, SensitivityResult)> {
    let fs = FactoredSystem::new(sys, mu)?;
    let primal = fs.primal()?;
    let sens = fs.sensitivity(&primal.u)?;
    Ok((primal, sens))
}

/// Per-node CSV `r, u, psi, uprime`, including the Dirichlet node at `r = R`.
pub fn write_solution_csv<W: Write>(
    sys: &AssembledSystem,
    primal: &SolveResult,
    adjoint: &AdjointResult,
    sens: &SensitivityResult,
    mut out: W,
) -> Result<()> {
    let mesh = &sys.mesh;
    let prov = Provenance::new()
        .with("artifact", "solution")
        .with("mu", fmt_num(primal.mu))
        .with("gamma", fmt_num(sys.gamma))
        .with("n", mesh.dim())
        .with("N", mesh.n_intervals())
        .with("radius", fmt_num(mesh.radius()))
        .with("F", fmt_num(primal.f_value))
        .with("load_style", sys.options.load_style)
        .with("drift_style", sys.options.drift_style);
    writeln!(out, "{prov}")?;
    writeln!(out, "r,u,psi,uprime")?;
    for j in 0..mesh.n_nodes() {
        let pick = |v: &[f64]| v.get(j).copied().unwrap_or(0.0);
        writeln!(
            out,
            "{},{},{},{}",
            fmt_num(mesh.node(j)),
            fmt_num(pick(&primal.u)),
            fmt_num(pick(&adjoint.psi)),
            fmt_num(pick(&sens.u_prime))
        )?;
    }
    Ok(())
}
