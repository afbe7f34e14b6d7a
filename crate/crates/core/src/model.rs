//! Problem data `(Φ, δ, S, γ)` and sample-based checks of the structural
//! hypotheses on the potential and the constraint kernel.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{FpError, Result};
use crate::mesh::RadialMesh;

/// Nodal values of `Φ`, `Φ'`, `Φ''` on all `N + 1` mesh nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// `Φ(r) = a r²`.
    Quadratic { a: f64 },
    /// `Φ(r) = a r² (r - r_c)²`.
    DoubleWell { a: f64, r_c: f64 },
    Custom(TabulatedPotential),
}

impl PotentialSpec {
    /// `(Φ, Φ', Φ'')` at `r`; `None` for tabulated potentials.
    pub fn eval(&self, r: f64) -> Option<(f64, f64, f64)> {
        match *self {
            PotentialSpec::Quadratic { a } => Some((a * r * r, 2.0 * a * r, 2.0 * a)),
            PotentialSpec::DoubleWell { a, r_c } => {
                let s = r - r_c;
                Some((
                    a * r * r * s * s,
                    2.0 * a * r * s * (2.0 * r - r_c),
                    a * (12.0 * r * r - 12.0 * r_c * r + 2.0 * r_c * r_c),
                ))
            }
            PotentialSpec::Custom(_) => None,
        }
    }

    /// Curvature at the origin, the scale of the Gibbs concentration.
    pub fn curvature_at_origin(&self) -> f64 {
        match self {
            PotentialSpec::Custom(t) => t.d2phi.first().copied().unwrap_or(f64::NAN),
            p => p.eval(0.0).map(|v| v.2).unwrap_or(f64::NAN),
        }
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Quadratic { a } => write!(f, "quadratic:{a}"),
            PotentialSpec::DoubleWell { a, r_c } => write!(f, "doublewell:{a}:{r_c}"),
            PotentialSpec::Custom(_) => write!(f, "custom"),
        }
    }
}

/// Constraint kernel `δ`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `e^(-r²/ε) / (4πε)^(n/2)`.
    GaussianAtOrigin { eps: f64 },
    /// `e^(-(r-r₁)²/ε) / (4πε)^(n/2)`.
    ShiftedGaussian { eps: f64, r1: f64 },
    /// `ε r⁴`.
    QuarticTail { eps: f64 },
    /// Nodal values on all `N + 1` nodes.
    Custom(Vec<f64>),
}

impl KernelSpec {
    /// `(δ, δ')` at `r` in dimension `dim`; `None` for tabulated kernels.
    pub fn eval(&self, r: f64, dim: usize) -> Option<(f64, f64)> {
        let norm = |eps: f64| (4.0 * PI * eps).powf(-(dim as f64) / 2.0);
        match *self {
            KernelSpec::GaussianAtOrigin { eps } => {
                let v = (-r * r / eps).exp() * norm(eps);
                Some((v, -2.0 * r / eps * v))
            }
            KernelSpec::ShiftedGaussian { eps, r1 } => {
                let s = r - r1;
                let v = (-s * s / eps).exp() * norm(eps);
                Some((v, -2.0 * s / eps * v))
            }
            KernelSpec::QuarticTail { eps } => Some((eps * r.powi(4), 4.0 * eps * r.powi(3))),
            KernelSpec::Custom(_) => None,
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::GaussianAtOrigin { eps } => write!(f, "gauss0:{eps:e}"),
            KernelSpec::ShiftedGaussian { eps, r1 } => write!(f, "gauss:{eps:e}:{r1}"),
            KernelSpec::QuarticTail { eps } => write!(f, "quartic:{eps:e}"),
            KernelSpec::Custom(_) => write!(f, "custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    /// `S = 1` on `[lo, hi]`.
    Indicator { lo: f64, hi: f64 },
    /// Nodal values on all `N + 1` nodes, interpolated by P1 hats.
    Custom(Vec<f64>),
}

impl SourceSpec {
    pub fn eval(&self, r: f64) -> Option<f64> {
        match *self {
            SourceSpec::Indicator { lo, hi } => Some(if (lo..=hi).contains(&r) { 1.0 } else { 0.0 }),
            SourceSpec::Custom(_) => None,
        }
    }

    /// `∫ r^k S r^(n-1) dr` in closed form (indicator only).
    pub fn moment(&self, k: u32, dim: usize) -> Option<f64> {
        match *self {
            SourceSpec::Indicator { lo, hi } => {
                let p = (k as usize + dim) as i32;
                Some((hi.powi(p) - lo.powi(p)) / p as f64)
            }
            SourceSpec::Custom(_) => None,
        }
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::Indicator { lo, hi } => write!(f, "indicator:{lo}:{hi}"),
            SourceSpec::Custom(_) => write!(f, "custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub potential: PotentialSpec,
    pub kernel: KernelSpec,
    pub source: SourceSpec,
    pub gamma: f64,
    pub dim: usize,
}

impl ModelSpec {
    pub fn new(
        potential: PotentialSpec,
        kernel: KernelSpec,
        source: SourceSpec,
        gamma: f64,
        dim: usize,
    ) -> Result<Self> {
        let model = Self {
            potential,
            kernel,
            source,
            gamma,
            dim,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(FpError::param(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.dim < 1 {
            return Err(FpError::param("dim must be at least 1"));
        }
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(FpError::param(format!("{name} must be positive, got {v}")))
            }
        };
        match self.potential {
            PotentialSpec::Quadratic { a } => positive("potential coefficient", a)?,
            PotentialSpec::DoubleWell { a, r_c } => {
                positive("potential coefficient", a)?;
                positive("well radius", r_c)?;
            }
            PotentialSpec::Custom(_) => {}
        }
        match self.kernel {
            KernelSpec::GaussianAtOrigin { eps } | KernelSpec::QuarticTail { eps } => {
                positive("kernel width", eps)?
            }
            KernelSpec::ShiftedGaussian { eps, r1 } => {
                positive("kernel width", eps)?;
                if !(r1.is_finite() && r1 >= 0.0) {
                    return Err(FpError::param(format!("kernel shift must be >= 0, got {r1}")));
                }
            }
            KernelSpec::Custom(_) => {}
        }
        if let SourceSpec::Indicator { lo, hi } = self.source {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                return Err(FpError::param(format!(
                    "indicator bounds must satisfy 0 <= lo <= hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// The confining configuration: `Φ = 2r²`, Gaussian kernel at the
    /// origin with `ε = 10⁻³`, `S = 1` on `[0.3, 0.5]`, `γ = 1`, `n = 3`.
    pub fn main_preset() -> Self {
        Self {
            potential: PotentialSpec::Quadratic { a: 2.0 },
            kernel: KernelSpec::GaussianAtOrigin { eps: 1e-3 },
            source: SourceSpec::Indicator { lo: 0.3, hi: 0.5 },
            gamma: 1.0,
            dim: 3,
        }
    }

    pub fn with_potential(mut self, potential: PotentialSpec) -> Self {
        self.potential = potential;
        self
    }

    pub fn with_kernel(mut self, kernel: KernelSpec) -> Self {
        self.kernel = kernel;
        self
    }

    /// `δ(0)`.
    pub fn kernel_at_origin(&self) -> f64 {
        match &self.kernel {
            KernelSpec::Custom(v) => v.first().copied().unwrap_or(f64::NAN),
            k => k.eval(0.0, self.dim).map(|v| v.0).unwrap_or(f64::NAN),
        }
    }
}

/// Nodal tables on all `N + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalTables {
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
    pub delta: Vec<f64>,
    pub source: Vec<f64>,
}

fn check_len(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(FpError::param(format!(
            "custom {name} table has {} entries, mesh has {n} nodes",
            v.len()
        )));
    }
    Ok(())
}

pub fn evaluate_model(model: &ModelSpec, mesh: &RadialMesh) -> Result<NodalTables> {
    model.validate()?;
    if model.dim != mesh.dim() {
        return Err(FpError::param(format!(
            "model dimension {} differs from mesh dimension {}",
            model.dim,
            mesh.dim()
        )));
    }
    let r = mesh.nodes();
    let n = r.len();
    let (phi, dphi, d2phi) = match &model.potential {
        PotentialSpec::Custom(t) => {
            check_len("potential", &t.phi, n)?;
            check_len("potential derivative", &t.dphi, n)?;
            check_len("potential second derivative", &t.d2phi, n)?;
            (t.phi.clone(), t.dphi.clone(), t.d2phi.clone())
        }
        p => {
            let mut out = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
            for &x in &r {
                let (a, b, c) = p.eval(x).expect("closed-form potential");
                out.0.push(a);
                out.1.push(b);
                out.2.push(c);
            }
            out
        }
    };
    let delta = match &model.kernel {
        KernelSpec::Custom(v) => {
            check_len("kernel", v, n)?;
            v.clone()
        }
        k => r.iter().map(|&x| k.eval(x, model.dim).unwrap().0).collect(),
    };
    let source = match &model.source {
        SourceSpec::Custom(v) => {
            check_len("source", v, n)?;
            v.clone()
        }
        s => r.iter().map(|&x| s.eval(x).unwrap()).collect(),
    };
    Ok(NodalTables {
        r,
        phi,
        dphi,
        d2phi,
        delta,
        source,
    })
}

/// Where a sampled hypothesis first fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    /// Left mesh node of the sample.
    pub node: usize,
    pub r: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// Uniformly positive, bounded Hessian and `∇Φ(0) = 0`.
    pub hphi_ok: bool,
    pub lambda_est: f64,
    pub m_est: f64,
    pub hphi_violation: Option<Violation>,
    pub phi_nonnegative: bool,
    pub phi_violation: Option<Violation>,
    /// All three radial compatibility conditions.
    pub hcm_ok: bool,
    pub dphi_violation: Option<Violation>,
    pub d2phi_violation: Option<Violation>,
    pub ddelta_violation: Option<Violation>,
    pub delta_positive_near_origin: bool,
    pub near_origin_violation: Option<Violation>,
}

impl HypothesisReport {
    pub fn dphi_nonneg(&self) -> bool {
        self.dphi_violation.is_none()
    }

    pub fn d2phi_nonneg(&self) -> bool {
        self.d2phi_violation.is_none()
    }

    pub fn ddelta_nonpos(&self) -> bool {
        self.ddelta_violation.is_none()
    }

    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let flag = |b: bool| b.to_string();
        let at = |v: &Option<Violation>| match v {
            Some(v) => format!("r={:e}", v.r),
            None => "none".to_string(),
        };
        vec![
            ("hphi_ok".into(), flag(self.hphi_ok)),
            ("hphi_lambda_est".into(), format!("{:e}", self.lambda_est)),
            ("hphi_m_est".into(), format!("{:e}", self.m_est)),
            ("hphi_first_violation".into(), at(&self.hphi_violation)),
            ("phi_nonnegative".into(), flag(self.phi_nonnegative)),
            ("hcm_ok".into(), flag(self.hcm_ok)),
            ("hcm_dphi_nonneg".into(), flag(self.dphi_nonneg())),
            ("hcm_dphi_first_violation".into(), at(&self.dphi_violation)),
            ("hcm_d2phi_nonneg".into(), flag(self.d2phi_nonneg())),
            ("hcm_d2phi_first_violation".into(), at(&self.d2phi_violation)),
            ("hcm_ddelta_nonpos".into(), flag(self.ddelta_nonpos())),
            ("hcm_ddelta_first_violation".into(), at(&self.ddelta_violation)),
            (
                "delta_positive_near_origin".into(),
                flag(self.delta_positive_near_origin),
            ),
        ]
    }
}

struct Sample {
    node: usize,
    r: f64,
    phi: f64,
    dphi: f64,
    d2phi: f64,
    delta: f64,
    ddelta: f64,
}

fn samples(model: &ModelSpec, mesh: &RadialMesh) -> Result<Vec<Sample>> {
    let tables = evaluate_model(model, mesh)?;
    let n = mesh.n_nodes();
    let h = mesh.h();
    let closed = !matches!(model.potential, PotentialSpec::Custom(_))
        && !matches!(model.kernel, KernelSpec::Custom(_));

    // Tabulated kernels get one-sided differences at the ends.
    let kernel_slope = |j: usize| -> f64 {
        let d = &tables.delta;
        if j == 0 {
            (d[1] - d[0]) / h
        } else if j == n - 1 {
            (d[j] - d[j - 1]) / h
        } else {
            (d[j + 1] - d[j - 1]) / (2.0 * h)
        }
    };
    let ddelta_at = |j: usize| -> f64 {
        match model.kernel.eval(tables.r[j], model.dim) {
            Some((_, d)) => d,
            None => kernel_slope(j),
        }
    };

    let mut out = Vec::with_capacity(2 * n);
    for j in 0..n {
        out.push(Sample {
            node: j,
            r: tables.r[j],
            phi: tables.phi[j],
            dphi: tables.dphi[j],
            d2phi: tables.d2phi[j],
            delta: tables.delta[j],
            ddelta: ddelta_at(j),
        });
        if closed && j + 1 < n {
            let r = 0.5 * (tables.r[j] + tables.r[j + 1]);
            let (phi, dphi, d2phi) = model.potential.eval(r).unwrap();
            let (delta, ddelta) = model.kernel.eval(r, model.dim).unwrap();
            out.push(Sample {
                node: j,
                r,
                phi,
                dphi,
                d2phi,
                delta,
                ddelta,
            });
        }
    }
    Ok(out)
}

pub fn check_hypotheses(model: &ModelSpec, mesh: &RadialMesh) -> Result<HypothesisReport> {
    let samples = samples(model, mesh)?;
    let scale = |f: fn(&Sample) -> f64| samples.iter().map(f).fold(0.0, |m: f64, v| m.max(v.abs()));
    // Tolerances only absorb rounding in tabulated data.
    let tol_phi = 1e-12 * scale(|s| s.phi);
    let tol_dphi = 1e-12 * scale(|s| s.dphi);
    let tol_d2phi = 1e-12 * scale(|s| s.d2phi);
    let tol_ddelta = 1e-12 * scale(|s| s.ddelta);

    let first = |pred: &dyn Fn(&Sample) -> Option<f64>| -> Option<Violation> {
        samples.iter().find_map(|s| {
            pred(s).map(|value| Violation {
                node: s.node,
                r: s.r,
                value,
            })
        })
    };

    // Radial Hessian eigenvalues: Φ'' and Φ'/r (→ Φ''(0) at the origin).
    let eigs = |s: &Sample| -> (f64, f64) {
        let tangential = if s.r > 0.0 { s.dphi / s.r } else { s.d2phi };
        (s.d2phi, tangential)
    };
    let mut lambda_est = f64::INFINITY;
    let mut m_est = f64::NEG_INFINITY;
    for s in &samples {
        let (a, b) = eigs(s);
        lambda_est = lambda_est.min(a.min(b));
        m_est = m_est.max(a.max(b));
    }
    let grad_origin = samples[0].dphi;
    let hphi_violation = if grad_origin.abs() > tol_dphi.max(f64::MIN_POSITIVE) {
        Some(Violation {
            node: 0,
            r: 0.0,
            value: grad_origin,
        })
    } else {
        first(&|s| {
            let (a, b) = eigs(s);
            (a.min(b) <= 0.0).then_some(a.min(b))
        })
    };
    let hphi_ok = hphi_violation.is_none() && lambda_est > 0.0 && m_est.is_finite();

    let phi_violation = first(&|s| (s.phi < -tol_phi).then_some(s.phi));
    let dphi_violation = first(&|s| (s.dphi < -tol_dphi).then_some(s.dphi));
    let d2phi_violation = first(&|s| (s.d2phi < -tol_d2phi).then_some(s.d2phi));
    let ddelta_violation = first(&|s| (s.ddelta > tol_ddelta).then_some(s.ddelta));
    let hcm_ok = dphi_violation.is_none() && d2phi_violation.is_none() && ddelta_violation.is_none();

    // δ ≥ δ(0)/2 on [0, 5h].
    let delta0 = samples[0].delta;
    let r_test = 5.0 * mesh.h();
    let near_origin_violation = if delta0 <= 0.0 {
        Some(Violation {
            node: 0,
            r: 0.0,
            value: delta0,
        })
    } else {
        first(&|s| (s.r <= r_test * (1.0 + 1e-12) && s.delta < 0.5 * delta0).then_some(s.delta))
    };

    Ok(HypothesisReport {
        hphi_ok,
        lambda_est,
        m_est,
        hphi_violation,
        phi_nonnegative: phi_violation.is_none(),
        phi_violation,
        hcm_ok,
        dphi_violation,
        d2phi_violation,
        ddelta_violation,
        delta_positive_near_origin: near_origin_violation.is_none(),
        near_origin_violation,
    })
}
