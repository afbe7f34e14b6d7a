//! Preset experiments and config-driven runs that write CSV and key=value
//! artifacts into an output directory.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::assembly::{assemble_with, AssembledSystem, AssemblyOptions};
use crate::config::{RunConfig, DEFAULT_INTERVALS};
use crate::csv::{fmt_num, key_value_block, Provenance};
use crate::error::{FpError, Result};
use crate::inverter::{invert_system, scan_system, InvertOptions, MonotonicityScan, Status};
use crate::mesh::RadialMesh;
use crate::model::{check_hypotheses, KernelSpec, ModelSpec, PotentialSpec, SourceSpec};
use crate::oracles::{
    check_asymptote, check_moments, concentration_scale, is_resolved, laplace_slope,
    mass_prefactor, required_intervals,
};
use crate::solver::{solve_adjoint, solve_primal, write_solution_csv, FactoredSystem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Growth below this fraction of the main preset's slope counts as sublinear.
pub const SUBLINEAR_FRACTION: f64 = 1e-2;

pub fn exit_code(err: &FpError) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    FigOk1,
    FigOk2,
    FigDelta4,
    FigBad,
    FigBad2,
}

impl PresetName {
    pub const ALL: [PresetName; 5] = [
        PresetName::FigOk1,
        PresetName::FigOk2,
        PresetName::FigDelta4,
        PresetName::FigBad,
        PresetName::FigBad2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::FigOk1 => "fig_ok1",
            PresetName::FigOk2 => "fig_ok2",
            PresetName::FigDelta4 => "fig_delta4",
            PresetName::FigBad => "fig_bad",
            PresetName::FigBad2 => "fig_bad2",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| FpError::param(format!("unknown preset `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSpec {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPreset {
    pub name: PresetName,
    pub model: ModelSpec,
    pub scan: ScanSpec,
    pub profile_mus: Vec<f64>,
    pub outputs: [&'static str; 3],
}

pub const PRESET_OUTPUTS: [&str; 3] = ["profiles.csv", "fscan.csv", "summary.txt"];
const SCAN_SAMPLES: usize = 60;

fn base_model(potential: PotentialSpec, kernel: KernelSpec) -> ModelSpec {
    ModelSpec {
        potential,
        kernel,
        source: SourceSpec::Indicator { lo: 0.3, hi: 0.5 },
        gamma: 1.0,
        dim: 3,
    }
}

pub fn preset(name: PresetName) -> ExperimentPreset {
    let quadratic = PotentialSpec::Quadratic { a: 2.0 };
    let gauss0 = KernelSpec::GaussianAtOrigin { eps: 1e-3 };
    let linear = |hi: f64| ScanSpec {
        lo: 0.0,
        hi,
        samples: SCAN_SAMPLES,
    };
    let (model, scan, profile_mus) = match name {
        PresetName::FigOk1 => (
            base_model(quadratic, gauss0),
            linear(10.0),
            (1..=10).map(f64::from).collect(),
        ),
        PresetName::FigOk2 => (
            base_model(quadratic, gauss0),
            ScanSpec {
                lo: 1e-2,
                hi: 1e7,
                samples: SCAN_SAMPLES,
            },
            vec![1e-2, 1.0, 1e2, 1e4, 1e6],
        ),
        PresetName::FigDelta4 => (
            base_model(quadratic, KernelSpec::QuarticTail { eps: 1e-3 }),
            linear(500.0),
            vec![100.0, 200.0, 300.0, 400.0, 500.0],
        ),
        PresetName::FigBad => (
            base_model(
                PotentialSpec::DoubleWell { a: 2.0, r_c: 0.2 },
                KernelSpec::ShiftedGaussian { eps: 1e-3, r1: 0.05 },
            ),
            linear(1.5e5),
            vec![1e3, 1e4, 5e4, 1e5, 1.5e5],
        ),
        PresetName::FigBad2 => (
            base_model(quadratic, KernelSpec::ShiftedGaussian { eps: 1e-3, r1: 0.1 }),
            linear(2500.0),
            vec![500.0, 1000.0, 1500.0, 2000.0, 2500.0],
        ),
    };
    ExperimentPreset {
        name,
        model,
        scan,
        profile_mus,
        outputs: PRESET_OUTPUTS,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub n_intervals: usize,
    pub radius: f64,
    pub assembly: AssemblyOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            n_intervals: DEFAULT_INTERVALS,
            radius: 1.0,
            assembly: AssemblyOptions::default(),
        }
    }
}

fn model_provenance(model: &ModelSpec, sys: &AssembledSystem) -> Provenance {
    Provenance::new()
        .with("potential", &model.potential)
        .with("kernel", &model.kernel)
        .with("source", &model.source)
        .with("gamma", fmt_num(model.gamma))
        .with("dim", model.dim)
        .with("n_intervals", sys.mesh.n_intervals())
        .with("radius", fmt_num(sys.mesh.radius()))
        .with("load_style", sys.options.load_style)
        .with("drift_style", sys.options.drift_style)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn kv(key: &str, value: impl fmt::Display) -> (String, String) {
    (key.to_string(), value.to_string())
}

fn join(values: impl IntoIterator<Item = String>) -> String {
    let v: Vec<String> = values.into_iter().collect();
    if v.is_empty() {
        "none".to_string()
    } else {
        v.join(";")
    }
}

/// Nodal profiles `u_μ` including the boundary node, one column per `μ`.
#[derive(Debug, Clone)]
pub struct Profiles {
    pub mus: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
}

impl Profiles {
    pub fn compute(sys: &AssembledSystem, mus: &[f64]) -> Result<Self> {
        let columns = mus
            .par_iter()
            .map(|&mu| solve_primal(sys, mu).map(|s| s.u))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mus: mus.to_vec(),
            columns,
        })
    }

    pub fn origin_values(&self) -> Vec<f64> {
        self.columns.iter().map(|c| c[0]).collect()
    }

    pub fn origin_increasing(&self) -> bool {
        self.origin_values().windows(2).all(|w| w[1] > w[0])
    }

    pub fn write_csv<W: Write>(
        &self,
        mesh: &RadialMesh,
        provenance: &Provenance,
        mut out: W,
    ) -> Result<()> {
        writeln!(out, "{provenance}")?;
        let header: Vec<String> = self.mus.iter().map(|m| format!("u_{}", fmt_num(*m))).collect();
        writeln!(out, "r,{}", header.join(","))?;
        for j in 0..mesh.n_nodes() {
            let row: Vec<String> = self
                .columns
                .iter()
                .map(|c| fmt_num(c.get(j).copied().unwrap_or(0.0)))
                .collect();
            writeln!(out, "{},{}", fmt_num(mesh.node(j)), row.join(","))?;
        }
        Ok(())
    }
}

/// Scan diagnostics shared by preset summaries and `scan` runs.
fn scan_summary(
    model: &ModelSpec,
    sys: &AssembledSystem,
    scan: &MonotonicityScan,
) -> Result<Vec<(String, String)>> {
    let lambda = concentration_scale(model, &sys.mesh)?;
    let resolved: Vec<bool> = scan
        .mu_grid
        .iter()
        .map(|&mu| is_resolved(&sys.mesh, lambda, mu))
        .collect();
    let unresolved: Vec<f64> = scan
        .mu_grid
        .iter()
        .zip(&resolved)
        .filter(|(_, r)| !**r)
        .map(|(m, _)| *m)
        .collect();
    let resolved_changes = scan
        .sign_changes
        .iter()
        .filter(|(a, b)| resolved[*a] && resolved[*b])
        .count();
    let mu_end = *scan.mu_grid.last().unwrap();
    let f_end = *scan.f_values.last().unwrap();
    let slope = laplace_slope(model, sys);
    let main = ModelSpec::main_preset();
    let main_slope = laplace_slope(&main, &assemble_with(&main, &sys.mesh, sys.options)?);
    let growth = f_end / mu_end;

    Ok(vec![
        kv("scan_mu_lo", fmt_num(scan.mu_grid[0])),
        kv("scan_mu_hi", fmt_num(mu_end)),
        kv("scan_samples", scan.len()),
        kv("fprime_sign_changes", scan.sign_changes.len()),
        kv(
            "fprime_sign_change_intervals",
            join(scan.sign_changes.iter().map(|(a, b)| {
                format!("{}:{}", fmt_num(scan.mu_grid[*a]), fmt_num(scan.mu_grid[*b]))
            })),
        ),
        kv("monotone", scan.is_monotone()),
        kv("non_monotone_warning", !scan.is_monotone()),
        kv("f_max", fmt_num(scan.max_f())),
        kv("f_end", fmt_num(f_end)),
        kv("f_end_over_mu", fmt_num(growth)),
        kv("predicted_slope", fmt_num(slope)),
        kv("main_preset_slope", fmt_num(main_slope)),
        kv("growth_vs_main_slope", fmt_num(growth / main_slope)),
        kv("sublinear_growth", growth < SUBLINEAR_FRACTION * main_slope),
        kv("resolution_lambda", fmt_num(lambda)),
        kv("resolution_unresolved_samples", unresolved.len()),
        kv(
            "resolution_first_unresolved_mu",
            unresolved.first().map_or("none".to_string(), |m| fmt_num(*m)),
        ),
        kv(
            "resolution_required_intervals_at_mu_hi",
            if lambda > 0.0 {
                required_intervals(model.dim, sys.mesh.radius(), lambda, mu_end)?.to_string()
            } else {
                "n/a".to_string()
            },
        ),
        kv("fprime_sign_changes_resolved", resolved_changes),
    ])
}

#[derive(Debug, Clone)]
pub struct PresetOutcome {
    pub preset: ExperimentPreset,
    pub scan: MonotonicityScan,
    pub profiles: Profiles,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

pub fn run_preset(name: PresetName, options: &RunOptions, out_dir: &Path) -> Result<PresetOutcome> {
    let preset = preset(name);
    let model = &preset.model;
    let mesh = RadialMesh::with_radius(options.n_intervals, model.dim, options.radius)?;
    let sys = assemble_with(model, &mesh, options.assembly)?;
    fs::create_dir_all(out_dir)?;

    let profiles = Profiles::compute(&sys, &preset.profile_mus)?;
    let scan = scan_system(&sys, preset.scan.lo, preset.scan.hi, preset.scan.samples)?;
    let hyp = check_hypotheses(model, &mesh)?;

    let prov = model_provenance(model, &sys).with("preset", name);
    let paths: Vec<PathBuf> = preset.outputs.iter().map(|f| out_dir.join(f)).collect();

    let mut w = create(&paths[0])?;
    profiles.write_csv(&mesh, &prov.clone().with("artifact", "profiles"), &mut w)?;
    w.flush()?;

    let mut w = create(&paths[1])?;
    scan.write_csv(&prov.clone().with("artifact", "fscan"), &mut w)?;
    w.flush()?;

    let mut entries = vec![kv("preset", name)];
    entries.extend(hyp.to_key_values());
    entries.extend(scan_summary(model, &sys, &scan)?);
    entries.push(kv(
        "profile_mus",
        join(profiles.mus.iter().map(|m| fmt_num(*m))),
    ));
    entries.push(kv(
        "profile_origin_values",
        join(profiles.origin_values().into_iter().map(fmt_num)),
    ));
    entries.push(kv("profile_origin_increasing", profiles.origin_increasing()));
    let summary = format!(
        "{}\n{}",
        prov.with("artifact", "summary"),
        key_value_block(&entries)
    );
    fs::write(&paths[2], &summary)?;

    Ok(PresetOutcome {
        preset,
        scan,
        profiles,
        summary,
        artifacts: paths,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Scan,
    Invert,
    Moments,
    Asymptote,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Solve => "solve",
            Command::Scan => "scan",
            Command::Invert => "invert",
            Command::Moments => "moments",
            Command::Asymptote => "asymptote",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct CustomOptions {
    pub mu: Option<f64>,
    pub ell: Option<f64>,
    pub mu_lo: Option<f64>,
    pub mu_hi: Option<f64>,
    pub samples: Option<usize>,
    pub mu_max: Option<f64>,
    pub assembly: AssemblyOptions,
    pub dump_solution: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct CustomOutcome {
    pub summary: String,
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
}

fn require<T>(value: Option<T>, flag: &str, command: Command) -> Result<T> {
    value.ok_or_else(|| FpError::param(format!("`{command}` requires {flag}")))
}

/// Runs one command on a configured model, writing `summary.txt` and the
/// command's artifacts into `out_dir`.
pub fn run_custom(
    config: &RunConfig,
    command: Command,
    options: &CustomOptions,
    out_dir: &Path,
) -> Result<CustomOutcome> {
    let model = &config.model;
    let mesh = config.mesh()?;
    let sys = assemble_with(model, &mesh, options.assembly)?;
    fs::create_dir_all(out_dir)?;
    let prov = model_provenance(model, &sys).with("command", command);
    let mut artifacts = Vec::new();
    let mut exit = EXIT_OK;

    let entries = match command {
        Command::Solve => {
            let mu = require(options.mu, "--mu", command)?;
            let factored = FactoredSystem::new(&sys, mu)?;
            let primal = factored.primal()?;
            let sens = factored.sensitivity(&primal.u)?;
            let adjoint = solve_adjoint(&sys, mu)?;
            if let Some(path) = &options.dump_solution {
                let mut w = create(path)?;
                write_solution_csv(&sys, &primal, &adjoint, &sens, &mut w)?;
                w.flush()?;
                artifacts.push(path.clone());
            }
            let ones = vec![1.0; sys.size()];
            let mass = model.gamma * sys.inner(&ones, &primal.u);
            let drive = mu * sys.load.iter().sum::<f64>();
            let gap = (mass - drive).abs() / drive.abs().max(f64::MIN_POSITIVE);
            let mut e = vec![
                kv("mu", fmt_num(mu)),
                kv("F", fmt_num(primal.f_value)),
                kv("Fprime", fmt_num(sens.fprime_value)),
                kv("duality_value", fmt_num(adjoint.duality_value)),
                kv("residual", fmt_num(primal.residual)),
                kv("min_value", fmt_num(primal.min_value)),
                kv("relative_undershoot", fmt_num(primal.relative_undershoot())),
                kv("mass_gamma_int_u", fmt_num(mass)),
                kv("mass_mu_int_load", fmt_num(drive)),
                kv("mass_identity_rel_gap", fmt_num(if drive == 0.0 { mass.abs() } else { gap })),
            ];
            if let Some(s0) = model.source.moment(0, model.dim) {
                e.push(kv("mass_prefactor_exact", fmt_num(mass_prefactor(mu, model.gamma, s0))));
            }
            e
        }
        Command::Scan => {
            let lo = options.mu_lo.unwrap_or(0.0);
            let hi = require(options.mu_hi, "--mu-hi", command)?;
            let scan = scan_system(&sys, lo, hi, options.samples.unwrap_or(SCAN_SAMPLES))?;
            let path = out_dir.join("fscan.csv");
            let mut w = create(&path)?;
            scan.write_csv(&prov.clone().with("artifact", "fscan"), &mut w)?;
            w.flush()?;
            artifacts.push(path);
            scan_summary(model, &sys, &scan)?
        }
        Command::Invert => {
            let ell = require(options.ell, "--ell", command)?;
            let prescan = match options.mu_hi {
                Some(hi) => Some(scan_system(
                    &sys,
                    options.mu_lo.unwrap_or(0.0),
                    hi,
                    options.samples.unwrap_or(SCAN_SAMPLES),
                )?),
                None => None,
            };
            let inv_opts = InvertOptions {
                mu_max: options.mu_max.unwrap_or(crate::inverter::DEFAULT_MU_MAX),
                tol_f: None,
            };
            let report = invert_system(&sys, ell, inv_opts, prescan.as_ref())?;
            if report.status == Status::NoBracket {
                exit = EXIT_NUMERICAL;
            }
            let mut e = report.to_key_values();
            if let Some(scan) = &prescan {
                e.push(kv("prescan_sign_changes", scan.sign_changes.len()));
                e.push(kv(
                    "prescan_level_crossings",
                    join(scan.level_crossings(ell).iter().map(|&i| {
                        format!("{}:{}", fmt_num(scan.mu_grid[i]), fmt_num(scan.mu_grid[i + 1]))
                    })),
                ));
            }
            let path = out_dir.join("inversion.txt");
            fs::write(&path, key_value_block(&e))?;
            artifacts.push(path);
            e
        }
        Command::Moments => {
            let mu = require(options.mu, "--mu", command)?;
            let solve = solve_primal(&sys, mu)?;
            check_moments(&sys, &solve, model)?.to_key_values()
        }
        Command::Asymptote => {
            let lo = options.mu_lo.unwrap_or(1e2);
            let hi = options.mu_hi.unwrap_or(1e4);
            let grid = crate::inverter::scan_grid(lo, hi, options.samples.unwrap_or(3))?;
            let report = check_asymptote(model, &mesh, &grid)?;
            let path = out_dir.join("asymptote.csv");
            let mut w = create(&path)?;
            report.write_csv(&prov.clone().with("artifact", "asymptote"), &mut w)?;
            w.flush()?;
            artifacts.push(path);
            vec![
                kv("predicted_slope", fmt_num(report.predicted_slope)),
                kv("deviation_decreasing", report.deviation_decreasing()),
                kv("final_rel_deviation", report.final_deviation().map_or("none".into(), fmt_num)),
                kv("all_resolved", report.all_resolved()),
            ]
        }
    };

    let summary = format!(
        "{}\n{}",
        prov.with("artifact", "summary"),
        key_value_block(&entries)
    );
    let path = out_dir.join("summary.txt");
    fs::write(&path, &summary)?;
    artifacts.push(path);
    Ok(CustomOutcome {
        summary,
        exit_code: exit,
        artifacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_names_round_trip() {
        for p in PresetName::ALL {
            assert_eq!(p.as_str().parse::<PresetName>().unwrap(), p);
        }
        assert!("fig_ok3".parse::<PresetName>().is_err());
    }

    #[test]
    fn presets_share_the_frozen_data() {
        for p in PresetName::ALL {
            let m = preset(p).model;
            assert_eq!((m.dim, m.gamma), (3, 1.0));
            assert_eq!(m.source, SourceSpec::Indicator { lo: 0.3, hi: 0.5 });
            m.validate().unwrap();
        }
        assert_eq!(preset(PresetName::FigOk1).profile_mus.len(), 10);
        assert_eq!(preset(PresetName::FigOk2).scan.hi, 1e7);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&FpError::param("x")), EXIT_USAGE);
        assert_eq!(exit_code(&FpError::SingularPivot { row: 0 }), EXIT_NUMERICAL);
    }

    #[test]
    fn preset_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            n_intervals: 200,
            ..RunOptions::default()
        };
        let out = run_preset(PresetName::FigOk1, &opts, dir.path()).unwrap();
        for a in &out.artifacts {
            let text = fs::read_to_string(a).unwrap();
            assert!(text.starts_with("# "), "{}", a.display());
        }
        assert!(out.profiles.origin_increasing());
        assert!(out.summary.contains("monotone=true"));
    }

    #[test]
    fn custom_commands_require_their_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            model: ModelSpec::main_preset(),
            n_intervals: 50,
            radius: 1.0,
        };
        let opts = CustomOptions::default();
        assert!(run_custom(&cfg, Command::Solve, &opts, dir.path()).is_err());
        assert!(run_custom(&cfg, Command::Invert, &opts, dir.path()).is_err());
        let opts = CustomOptions {
            ell: Some(0.0),
            ..CustomOptions::default()
        };
        let out = run_custom(&cfg, Command::Invert, &opts, dir.path()).unwrap();
        assert!(out.summary.contains("mu_found=0e0"));
        assert_eq!(out.exit_code, EXIT_OK);
    }
}
