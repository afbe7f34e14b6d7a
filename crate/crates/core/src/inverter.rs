//! Root finding for `F(μ) = ℓ` and sampled monotonicity scans of `F`.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::assembly::{assemble, AssembledSystem};
use crate::csv::{fmt_num, Provenance};
use crate::error::{FpError, Result};
use crate::mesh::RadialMesh;
use crate::model::ModelSpec;
use crate::solver::evaluate;

pub const DEFAULT_MU_MAX: f64 = 1e8;
const MAX_ITERATIONS: usize = 200;

/// `10⁻⁸ · max(1, ℓ)`.
pub fn default_tolerance(ell: f64) -> f64 {
    1e-8 * ell.max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// `F(μ) < ℓ` for every tried `μ ≤ μ_max`.
    NoBracket,
    /// Converged, but the supplied scan found sign changes of `F'`, so the
    /// root need not be unique.
    NonMonotoneWarning,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::NoBracket => "no_bracket",
            Status::NonMonotoneWarning => "non_monotone_warning",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct InvertOptions {
    pub mu_max: f64,
    /// `None` selects [`default_tolerance`].
    pub tol_f: Option<f64>,
}

impl Default for InvertOptions {
    fn default() -> Self {
        Self {
            mu_max: DEFAULT_MU_MAX,
            tol_f: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InversionReport {
    pub ell: f64,
    pub tol_f: f64,
    pub mu_found: f64,
    pub f_at_mu: f64,
    /// Final bracket `(μ_lo, μ_hi)`.
    pub bracket: (f64, f64),
    /// `(F(μ_lo), F(μ_hi))` when the bracket was accepted.
    pub bracket_values: (f64, f64),
    pub n_solves: usize,
    pub bracket_doublings: usize,
    pub newton_steps: usize,
    pub bisection_steps: usize,
    pub status: Status,
}

impl InversionReport {
    /// True when `mu_found` meets the function tolerance.
    pub fn is_root(&self) -> bool {
        self.status != Status::NoBracket && (self.f_at_mu - self.ell).abs() <= self.tol_f
    }

    pub fn to_key_values(&self) -> Vec<(String, String)> {
        vec![
            ("status".into(), self.status.to_string()),
            ("ell".into(), fmt_num(self.ell)),
            ("tol_f".into(), fmt_num(self.tol_f)),
            ("mu_found".into(), fmt_num(self.mu_found)),
            ("f_at_mu".into(), fmt_num(self.f_at_mu)),
            ("bracket_lo".into(), fmt_num(self.bracket.0)),
            ("bracket_hi".into(), fmt_num(self.bracket.1)),
            ("n_solves".into(), self.n_solves.to_string()),
            ("bracket_doublings".into(), self.bracket_doublings.to_string()),
            ("newton_steps".into(), self.newton_steps.to_string()),
            ("bisection_steps".into(), self.bisection_steps.to_string()),
        ]
    }
}

pub fn invert(
    model: &ModelSpec,
    mesh: &RadialMesh,
    ell: f64,
    options: InvertOptions,
    prescan: Option<&MonotonicityScan>,
) -> Result<InversionReport> {
    invert_system(&assemble(model, mesh)?, ell, options, prescan)
}

/// Finds the first crossing of level `ℓ` reached by doubling `μ_hi` from 1,
/// then refines it with Newton steps safeguarded by bisection.
pub fn invert_system(
    sys: &AssembledSystem,
    ell: f64,
    options: InvertOptions,
    prescan: Option<&MonotonicityScan>,
) -> Result<InversionReport> {
    if !(ell.is_finite() && ell >= 0.0) {
        return Err(FpError::param(format!("ell must be finite and >= 0, got {ell}")));
    }
    let tol_f = options.tol_f.unwrap_or_else(|| default_tolerance(ell));
    if !(tol_f > 0.0) {
        return Err(FpError::param(format!("tol_f must be > 0, got {tol_f}")));
    }
    if !(options.mu_max > 0.0) {
        return Err(FpError::param(format!("mu_max must be > 0, got {}", options.mu_max)));
    }

    let mut report = InversionReport {
        ell,
        tol_f,
        mu_found: 0.0,
        f_at_mu: 0.0,
        bracket: (0.0, 0.0),
        bracket_values: (0.0, 0.0),
        n_solves: 0,
        bracket_doublings: 0,
        newton_steps: 0,
        bisection_steps: 0,
        status: Status::Converged,
    };
    if ell == 0.0 {
        return Ok(report);
    }

    let eval = |mu: f64, report: &mut InversionReport| -> Result<(f64, f64)> {
        report.n_solves += 1;
        let (p, s) = evaluate(sys, mu)?;
        Ok((p.f_value, s.fprime_value))
    };

    // F(0) = 0 < ℓ, so μ = 0 is a valid lower end.
    let (mut lo, mut f_lo) = (0.0, 0.0);
    let mut hi = 1.0f64.min(options.mu_max);
    let (mut f_hi, mut fp_hi) = eval(hi, &mut report)?;
    while f_hi < ell {
        if hi >= options.mu_max {
            report.status = Status::NoBracket;
            report.mu_found = hi;
            report.f_at_mu = f_hi;
            report.bracket = (lo, hi);
            report.bracket_values = (f_lo, f_hi);
            return Ok(report);
        }
        lo = hi;
        f_lo = f_hi;
        hi = (2.0 * hi).min(options.mu_max);
        report.bracket_doublings += 1;
        (f_hi, fp_hi) = eval(hi, &mut report)?;
    }
    report.bracket_values = (f_lo, f_hi);

    let (mut mu, mut f, mut fp) = (hi, f_hi, fp_hi);
    for _ in 0..MAX_ITERATIONS {
        if (f - ell).abs() <= tol_f {
            report.mu_found = mu;
            report.f_at_mu = f;
            report.bracket = (lo, hi);
            if prescan.is_some_and(|s| !s.is_monotone()) {
                report.status = Status::NonMonotoneWarning;
            }
            return Ok(report);
        }
        let newton = mu - (f - ell) / fp;
        let next = if fp != 0.0 && newton.is_finite() && newton > lo && newton < hi {
            report.newton_steps += 1;
            newton
        } else {
            report.bisection_steps += 1;
            0.5 * (lo + hi)
        };
        if next <= lo || next >= hi {
            break;
        }
        (f, fp) = eval(next, &mut report)?;
        mu = next;
        if f < ell {
            lo = mu;
        } else {
            hi = mu;
        }
    }
    Err(FpError::Stalled {
        iterations: report.n_solves,
        lo,
        hi,
    })
}

#[derive(Debug, Clone)]
pub struct MonotonicityScan {
    pub mu_grid: Vec<f64>,
    pub f_values: Vec<f64>,
    pub fprime_values: Vec<f64>,
    /// Grid intervals `(i, j)` where `F'` changes sign between two nonzero
    /// samples with only zero samples in between.
    pub sign_changes: Vec<(usize, usize)>,
}

/// `n` points from `lo` to `hi`: geometric when `lo > 0`, equidistant when
/// `lo = 0`.
pub fn scan_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(FpError::param(format!("need 0 <= mu_lo < mu_hi, got [{lo}, {hi}]")));
    }
    if n < 3 {
        return Err(FpError::param(format!("need at least 3 samples, got {n}")));
    }
    let last = (n - 1) as f64;
    let grid = (0..n)
        .map(|k| {
            let t = k as f64 / last;
            if k == n - 1 {
                hi
            } else if lo > 0.0 {
                lo * (hi / lo).powf(t)
            } else {
                hi * t
            }
        })
        .collect();
    Ok(grid)
}

fn sign_changes(values: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut last: Option<(usize, bool)> = None;
    for (i, &v) in values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let positive = v > 0.0;
        if let Some((j, p)) = last {
            if p != positive {
                out.push((j, i));
            }
        }
        last = Some((i, positive));
    }
    out
}

pub fn scan_monotonicity(
    model: &ModelSpec,
    mesh: &RadialMesh,
    mu_lo: f64,
    mu_hi: f64,
    n_samples: usize,
) -> Result<MonotonicityScan> {
    scan_system(&assemble(model, mesh)?, mu_lo, mu_hi, n_samples)
}

pub fn scan_system(
    sys: &AssembledSystem,
    mu_lo: f64,
    mu_hi: f64,
    n_samples: usize,
) -> Result<MonotonicityScan> {
    scan_points(sys, scan_grid(mu_lo, mu_hi, n_samples)?)
}

/// Scan over an explicit grid, which must be strictly increasing.
pub fn scan_points(sys: &AssembledSystem, mu_grid: Vec<f64>) -> Result<MonotonicityScan> {
    if mu_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FpError::param("scan grid must be strictly increasing"));
    }
    let values = mu_grid
        .par_iter()
        .map(|&mu| evaluate(sys, mu).map(|(p, s)| (p.f_value, s.fprime_value)))
        .collect::<Result<Vec<_>>>()?;
    let (f_values, fprime_values): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
    Ok(MonotonicityScan {
        sign_changes: sign_changes(&fprime_values),
        mu_grid,
        f_values,
        fprime_values,
    })
}

impl MonotonicityScan {
    pub fn len(&self) -> usize {
        self.mu_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu_grid.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.sign_changes.is_empty()
    }

    pub fn max_f(&self) -> f64 {
        self.f_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sample indices `i` with `F` crossing `ell` on `[μ_i, μ_(i+1)]`.
    pub fn level_crossings(&self, ell: f64) -> Vec<usize> {
        self.f_values
            .windows(2)
            .enumerate()
            .filter(|(_, w)| (w[0] < ell) != (w[1] < ell))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, provenance: &Provenance, mut out: W) -> Result<()> {
        writeln!(out, "{provenance}")?;
        writeln!(out, "mu,F,Fprime")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{}",
                fmt_num(self.mu_grid[i]),
                fmt_num(self.f_values[i]),
                fmt_num(self.fprime_values[i])
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn main_system(n: usize) -> AssembledSystem {
        assemble(&ModelSpec::main_preset(), &RadialMesh::new(n, 3).unwrap()).unwrap()
    }

    #[test]
    fn zero_target_needs_no_solve() {
        let r = invert_system(&main_system(50), 0.0, InvertOptions::default(), None).unwrap();
        assert_eq!(r.mu_found, 0.0);
        assert_eq!(r.n_solves, 0);
        assert_eq!(r.status, Status::Converged);
    }

    #[test]
    fn recovers_forward_value() {
        let sys = main_system(400);
        let target = evaluate(&sys, 5.0).unwrap().0.f_value;
        let r = invert_system(&sys, target, InvertOptions::default(), None).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.is_root());
        assert!((r.mu_found - 5.0).abs() / 5.0 < 1e-6, "{}", r.mu_found);
        assert!(r.bracket.0 <= r.mu_found && r.mu_found <= r.bracket.1);
        assert!(r.bracket_values.0 <= target && r.bracket_values.1 >= target);
    }

    #[test]
    fn unreachable_target_reports_no_bracket() {
        let sys = main_system(100);
        let opts = InvertOptions {
            mu_max: 10.0,
            tol_f: None,
        };
        let r = invert_system(&sys, 1e6, opts, None).unwrap();
        assert_eq!(r.status, Status::NoBracket);
        assert!(!r.is_root());
        assert_eq!(r.bracket.1, 10.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let sys = main_system(20);
        assert!(invert_system(&sys, -1.0, InvertOptions::default(), None).is_err());
        let opts = InvertOptions {
            mu_max: 1.0,
            tol_f: Some(0.0),
        };
        assert!(invert_system(&sys, 1.0, opts, None).is_err());
    }

    #[test]
    fn grid_spacing() {
        let g = scan_grid(0.0, 10.0, 11).unwrap();
        assert_eq!(g[0], 0.0);
        assert!((g[3] - 3.0).abs() < 1e-14);
        assert_eq!(g[10], 10.0);
        let g = scan_grid(1e-2, 1e2, 5).unwrap();
        for (a, e) in g.iter().zip([1e-2, 1e-1, 1.0, 1e1, 1e2]) {
            assert!((a - e).abs() <= 1e-14 * e);
        }
        assert!(scan_grid(1.0, 1.0, 5).is_err());
        assert!(scan_grid(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn sign_change_detection_skips_zeros() {
        assert!(sign_changes(&[1.0, 2.0, 0.0, 3.0]).is_empty());
        assert_eq!(sign_changes(&[1.0, 0.0, -1.0, -2.0, 4.0]), vec![(0, 2), (3, 4)]);
        assert!(sign_changes(&[0.0, 0.0]).is_empty());
    }

    #[test]
    fn main_preset_scan_is_monotone() {
        let scan = scan_system(&main_system(400), 0.0, 20.0, 11).unwrap();
        assert!(scan.is_monotone());
        assert_eq!(scan.f_values[0], 0.0);
        assert_eq!(scan.level_crossings(scan.f_values[5] * 1.0001).len(), 1);
    }

    #[test]
    fn warning_is_attached_from_prescan() {
        let sys = main_system(200);
        let fake = MonotonicityScan {
            mu_grid: vec![0.0, 1.0, 2.0],
            f_values: vec![0.0, 1.0, 0.5],
            fprime_values: vec![1.0, -1.0, -1.0],
            sign_changes: vec![(0, 1)],
        };
        let target = evaluate(&sys, 2.0).unwrap().0.f_value;
        let r = invert_system(&sys, target, InvertOptions::default(), Some(&fake)).unwrap();
        assert_eq!(r.status, Status::NonMonotoneWarning);
        assert!(r.is_root());
    }
}
