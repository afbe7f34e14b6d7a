//! Closed-form checks: mass and even-moment identities for `Φ = r²`, the
//! second-moment bound, and the large-`μ` slope of `F`.

use std::io::Write;

use rayon::prelude::*;

use crate::assembly::{assemble, AssembledSystem};
use crate::csv::{fmt_num, Provenance};
use crate::error::{FpError, Result};
use crate::mesh::RadialMesh;
use crate::model::{check_hypotheses, ModelSpec, PotentialSpec, SourceSpec};
use crate::solver::{solve_primal, SolveResult};

/// Nodes required inside the concentration radius `(Λμ)^(-1/2)`.
pub const RESOLUTION_NODES: usize = 10;

/// `μ ∫S / γ`.
pub fn mass_prefactor(mu: f64, gamma: f64, source_integral: f64) -> f64 {
    mu * source_integral / gamma
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactMoments {
    pub m0: f64,
    pub m2: f64,
    pub m4: f64,
}

fn source_moments(source: &SourceSpec, dim: usize) -> Result<[f64; 3]> {
    match (source.moment(0, dim), source.moment(2, dim), source.moment(4, dim)) {
        (Some(s0), Some(s2), Some(s4)) => Ok([s0, s2, s4]),
        _ => Err(FpError::param("closed-form moments need an indicator source")),
    }
}

/// Moments `∫ r^k u r^(n-1) dr`, `k = 0, 2, 4`, of the whole-space solution
/// for `Φ = r²`.
pub fn exact_moments(model: &ModelSpec, mu: f64) -> Result<ExactMoments> {
    if model.potential != (PotentialSpec::Quadratic { a: 1.0 }) {
        return Err(FpError::param(format!(
            "closed-form moments need potential quadratic:1, got {}",
            model.potential
        )));
    }
    let [s0, s2, s4] = source_moments(&model.source, model.dim)?;
    let g = model.gamma;
    let n = model.dim as f64;
    let shifted = s2 + 2.0 * n / g * s0;
    Ok(ExactMoments {
        m0: mass_prefactor(mu, g, s0),
        m2: mu / (g + 4.0 * mu) * shifted,
        m4: s4 * mu / (g + 8.0 * mu)
            + (4.0 * n + 8.0) * shifted * mu / ((g + 8.0 * mu) * (g + 4.0 * mu)),
    })
}

/// `∫(2n/γ + r²)S / (2Λ)`, the uniform-in-`μ` bound on the second moment.
pub fn second_moment_bound(model: &ModelSpec, lambda: f64) -> Result<f64> {
    let [s0, s2, _] = source_moments(&model.source, model.dim)?;
    Ok((2.0 * model.dim as f64 / model.gamma * s0 + s2) / (2.0 * lambda))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub mu: f64,
    pub m0: f64,
    pub m2: f64,
    pub m4: f64,
    /// Only for `Φ = r²` with an indicator source.
    pub exact: Option<ExactMoments>,
}

fn rel_error(value: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        value.abs()
    } else {
        (value - exact).abs() / exact.abs()
    }
}

impl MomentReport {
    /// `|m_k - exact_k| / |exact_k|` for `k = 0, 2, 4`.
    pub fn rel_errors(&self) -> Option<[f64; 3]> {
        self.exact.map(|e| {
            [
                rel_error(self.m0, e.m0),
                rel_error(self.m2, e.m2),
                rel_error(self.m4, e.m4),
            ]
        })
    }

    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("mu".to_string(), fmt_num(self.mu)),
            ("m0".to_string(), fmt_num(self.m0)),
            ("m2".to_string(), fmt_num(self.m2)),
            ("m4".to_string(), fmt_num(self.m4)),
        ];
        if let (Some(e), Some(r)) = (self.exact, self.rel_errors()) {
            kv.extend([
                ("m0_exact".to_string(), fmt_num(e.m0)),
                ("m2_exact".to_string(), fmt_num(e.m2)),
                ("m4_exact".to_string(), fmt_num(e.m4)),
                ("m0_rel_error".to_string(), fmt_num(r[0])),
                ("m2_rel_error".to_string(), fmt_num(r[1])),
                ("m4_rel_error".to_string(), fmt_num(r[2])),
            ]);
        }
        kv
    }
}

/// Discrete moments `(r^k)ᵀ A U` of a primal solve.
pub fn check_moments(
    sys: &AssembledSystem,
    solve: &SolveResult,
    model: &ModelSpec,
) -> Result<MomentReport> {
    if solve.u.len() != sys.size() {
        return Err(FpError::DimensionMismatch {
            expected: sys.size(),
            found: solve.u.len(),
        });
    }
    let r = sys.mesh.unknown_nodes();
    let moment = |k: i32| {
        let rk: Vec<f64> = r.iter().map(|x| x.powi(k)).collect();
        sys.inner(&rk, &solve.u)
    };
    Ok(MomentReport {
        mu: solve.mu,
        m0: moment(0),
        m2: moment(2),
        m4: moment(4),
        exact: exact_moments(model, solve.mu).ok(),
    })
}

/// Curvature scale `Λ` for the resolution proxy: the sampled lower Hessian
/// bound when positive, otherwise `Φ''(0)`.
pub fn concentration_scale(model: &ModelSpec, mesh: &RadialMesh) -> Result<f64> {
    let report = check_hypotheses(model, mesh)?;
    let lambda = if report.lambda_est > 0.0 {
        report.lambda_est
    } else {
        model.potential.curvature_at_origin()
    };
    Ok(lambda)
}

/// `(Λμ)^(-1/2)`.
pub fn concentration_radius(lambda: f64, mu: f64) -> f64 {
    (lambda * mu).powf(-0.5)
}

/// At least [`RESOLUTION_NODES`] nodes lie within the concentration radius.
pub fn is_resolved(mesh: &RadialMesh, lambda: f64, mu: f64) -> bool {
    if !(lambda > 0.0) || mu == 0.0 {
        return true;
    }
    mesh.nodes_within(concentration_radius(lambda, mu)) >= RESOLUTION_NODES
}

/// Smallest interval count whose mesh satisfies [`is_resolved`].
pub fn required_intervals(dim: usize, radius: f64, lambda: f64, mu: f64) -> Result<usize> {
    let rc = concentration_radius(lambda, mu);
    let guess = ((RESOLUTION_NODES - 1) as f64 * radius / rc).ceil().max(2.0) as usize;
    let mut n = guess.saturating_sub(2).max(2);
    while !is_resolved(&RadialMesh::with_radius(n, dim, radius)?, lambda, mu) {
        n += 1;
    }
    Ok(n)
}

/// `δ(0) ⟨S⟩ / γ` with `⟨S⟩ = ∫ S r^(n-1) dr`; falls back to `1ᵀ load` for
/// tabulated sources.
pub fn laplace_slope(model: &ModelSpec, sys: &AssembledSystem) -> f64 {
    let mass = model
        .source
        .moment(0, model.dim)
        .unwrap_or_else(|| sys.load.iter().sum());
    model.kernel_at_origin() * mass / model.gamma
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoteSample {
    pub mu: f64,
    pub n_intervals: usize,
    pub f_value: f64,
    /// `F(μ) / μ`.
    pub ratio: f64,
    pub rel_deviation: f64,
    pub resolved: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoteReport {
    pub predicted_slope: f64,
    pub samples: Vec<AsymptoteSample>,
}

impl AsymptoteReport {
    pub fn mu_samples(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.mu).collect()
    }

    pub fn rel_deviations(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.rel_deviation).collect()
    }

    /// Strictly decreasing deviation along increasing `μ`.
    pub fn deviation_decreasing(&self) -> bool {
        self.samples
            .windows(2)
            .all(|w| w[1].rel_deviation < w[0].rel_deviation)
    }

    pub fn all_resolved(&self) -> bool {
        self.samples.iter().all(|s| s.resolved)
    }

    pub fn final_deviation(&self) -> Option<f64> {
        self.samples.last().map(|s| s.rel_deviation)
    }

    pub fn write_csv<W: Write>(&self, provenance: &Provenance, mut out: W) -> Result<()> {
        writeln!(out, "{provenance}")?;
        writeln!(out, "mu,n_intervals,F,ratio,predicted_slope,rel_deviation,resolved")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_num(s.mu),
                s.n_intervals,
                fmt_num(s.f_value),
                fmt_num(s.ratio),
                fmt_num(self.predicted_slope),
                fmt_num(s.rel_deviation),
                s.resolved
            )?;
        }
        Ok(())
    }
}

fn deviation(ratio: f64, slope: f64) -> f64 {
    if slope == 0.0 {
        ratio.abs()
    } else {
        (ratio - slope).abs() / slope.abs()
    }
}

fn sample_at(sys: &AssembledSystem, lambda: f64, slope: f64, mu: f64) -> Result<AsymptoteSample> {
    if !(mu > 0.0) {
        return Err(FpError::param(format!("asymptote samples need mu > 0, got {mu}")));
    }
    let f = solve_primal(sys, mu)?.f_value;
    let ratio = f / mu;
    Ok(AsymptoteSample {
        mu,
        n_intervals: sys.mesh.n_intervals(),
        f_value: f,
        ratio,
        rel_deviation: deviation(ratio, slope),
        resolved: is_resolved(&sys.mesh, lambda, mu),
    })
}

/// `F(μ)/μ` against `δ(0)⟨S⟩/γ` on one fixed mesh; each sample records
/// whether the mesh resolves its concentration radius.
pub fn check_asymptote(
    model: &ModelSpec,
    mesh: &RadialMesh,
    mu_samples: &[f64],
) -> Result<AsymptoteReport> {
    let sys = assemble(model, mesh)?;
    let lambda = concentration_scale(model, mesh)?;
    let slope = laplace_slope(model, &sys);
    let samples = mu_samples
        .par_iter()
        .map(|&mu| sample_at(&sys, lambda, slope, mu))
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoteReport {
        predicted_slope: slope,
        samples,
    })
}

/// Like [`check_asymptote`], refining the mesh per sample so that the
/// resolution proxy holds, with at least `min_intervals` intervals.
pub fn check_asymptote_resolved(
    model: &ModelSpec,
    radius: f64,
    min_intervals: usize,
    mu_samples: &[f64],
) -> Result<AsymptoteReport> {
    let base = RadialMesh::with_radius(min_intervals, model.dim, radius)?;
    let lambda = concentration_scale(model, &base)?;
    let slope = laplace_slope(model, &assemble(model, &base)?);
    let samples = mu_samples
        .par_iter()
        .map(|&mu| {
            let n = required_intervals(model.dim, radius, lambda, mu)?.max(min_intervals);
            let sys = assemble(model, &RadialMesh::with_radius(n, model.dim, radius)?)?;
            sample_at(&sys, lambda, slope, mu)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoteReport {
        predicted_slope: slope,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KernelSpec, PotentialSpec};
    use std::f64::consts::PI;

    fn unit_quadratic() -> ModelSpec {
        ModelSpec::main_preset().with_potential(PotentialSpec::Quadratic { a: 1.0 })
    }

    #[test]
    fn mass_prefactor_examples() {
        assert_eq!(mass_prefactor(0.0, 1.0, 5.0), 0.0);
        assert!((mass_prefactor(2.0, 1.0, 0.0326667) - 0.0653334).abs() < 1e-12);
        assert_eq!(mass_prefactor(4.0, 2.0, 0.3), 2.0 * mass_prefactor(2.0, 2.0, 0.3));
    }

    #[test]
    fn exact_moments_at_zero_and_mass() {
        let m = unit_quadratic();
        assert_eq!(exact_moments(&m, 0.0).unwrap(), ExactMoments { m0: 0.0, m2: 0.0, m4: 0.0 });
        let e = exact_moments(&m, 3.0).unwrap();
        assert!((e.m0 - 3.0 * (0.125 - 0.027) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn second_moment_saturates_at_bound() {
        let m = unit_quadratic();
        let bound = second_moment_bound(&m, 2.0).unwrap();
        let far = exact_moments(&m, 1e12).unwrap().m2;
        assert!((far - bound).abs() / bound < 1e-10);
        assert!(exact_moments(&m, 10.0).unwrap().m2 < bound);
    }

    #[test]
    fn exact_moments_reject_other_potentials() {
        assert!(exact_moments(&ModelSpec::main_preset(), 1.0).is_err());
    }

    #[test]
    fn discrete_moments_vanish_at_zero() {
        let m = unit_quadratic();
        let sys = assemble(&m, &RadialMesh::new(100, 3).unwrap()).unwrap();
        let r = check_moments(&sys, &solve_primal(&sys, 0.0).unwrap(), &m).unwrap();
        assert_eq!((r.m0, r.m2, r.m4), (0.0, 0.0, 0.0));
        assert_eq!(r.rel_errors().unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn slope_of_main_preset() {
        let m = ModelSpec::main_preset();
        let sys = assemble(&m, &RadialMesh::new(10, 3).unwrap()).unwrap();
        let expected = (4.0 * PI * 1e-3f64).powf(-1.5) * (0.125 - 0.027) / 3.0;
        assert!((laplace_slope(&m, &sys) - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn slope_vanishes_for_kernel_away_from_origin() {
        let m = ModelSpec::main_preset().with_kernel(KernelSpec::ShiftedGaussian { eps: 1e-3, r1: 0.1 });
        let sys = assemble(&m, &RadialMesh::new(10, 3).unwrap()).unwrap();
        assert!(laplace_slope(&m, &sys) < 1e-2);
    }

    #[test]
    fn resolution_proxy() {
        // Λ = 4, μ = 1e4: radius 5e-3 needs h <= 5e-3 / 9.
        let n = required_intervals(3, 1.0, 4.0, 1e4).unwrap();
        assert!(is_resolved(&RadialMesh::new(n, 3).unwrap(), 4.0, 1e4));
        assert!(!is_resolved(&RadialMesh::new(n - 1, 3).unwrap(), 4.0, 1e4));
        assert!((1795..=1805).contains(&n), "{n}");
        assert!(is_resolved(&RadialMesh::new(2, 3).unwrap(), 4.0, 0.0));
    }

    #[test]
    fn concentration_scale_of_presets() {
        let mesh = RadialMesh::new(200, 3).unwrap();
        let lam = concentration_scale(&ModelSpec::main_preset(), &mesh).unwrap();
        assert!((lam - 4.0).abs() < 1e-12);
    }
}
