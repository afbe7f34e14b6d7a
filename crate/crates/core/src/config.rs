//! Plain `key=value` run configuration.
//!
//! ```text
//! potential=quadratic:2.0
//! kernel=gauss0:1e-3
//! source=indicator:0.3:0.5
//! gamma=1.0
//! dim=3
//! n_intervals=2000
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. `radius` (default 1)
//! extends the radial domain to `[0, radius]`.

use std::path::Path;
use std::str::FromStr;

use crate::error::{FpError, Result};
use crate::mesh::RadialMesh;
use crate::model::{KernelSpec, ModelSpec, PotentialSpec, SourceSpec};

pub const DEFAULT_INTERVALS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub n_intervals: usize,
    pub radius: f64,
}

impl RunConfig {
    pub fn mesh(&self) -> Result<RadialMesh> {
        RadialMesh::with_radius(self.n_intervals, self.model.dim, self.radius)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    pub fn to_config_string(&self) -> String {
        format!(
            "potential={}\nkernel={}\nsource={}\ngamma={}\ndim={}\nn_intervals={}\nradius={}\n",
            self.model.potential,
            self.model.kernel,
            self.model.source,
            self.model.gamma,
            self.model.dim,
            self.n_intervals,
            self.radius
        )
    }
}

fn numbers(spec: &str, expected: usize) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != expected + 1 {
        return Err(format!(
            "`{}` takes {expected} parameter(s), got {}",
            parts[0],
            parts.len() - 1
        ));
    }
    parts[1..]
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{p}` is not a number"))
        })
        .collect()
}

fn parse_potential(v: &str) -> std::result::Result<PotentialSpec, String> {
    match v.split(':').next().unwrap_or("") {
        "quadratic" => Ok(PotentialSpec::Quadratic { a: numbers(v, 1)?[0] }),
        "doublewell" => {
            let p = numbers(v, 2)?;
            Ok(PotentialSpec::DoubleWell { a: p[0], r_c: p[1] })
        }
        other => Err(format!("unknown potential `{other}`")),
    }
}

fn parse_kernel(v: &str) -> std::result::Result<KernelSpec, String> {
    match v.split(':').next().unwrap_or("") {
        "gauss0" => Ok(KernelSpec::GaussianAtOrigin { eps: numbers(v, 1)?[0] }),
        "gauss" => {
            let p = numbers(v, 2)?;
            Ok(KernelSpec::ShiftedGaussian { eps: p[0], r1: p[1] })
        }
        "quartic" => Ok(KernelSpec::QuarticTail { eps: numbers(v, 1)?[0] }),
        other => Err(format!("unknown kernel `{other}`")),
    }
}

fn parse_source(v: &str) -> std::result::Result<SourceSpec, String> {
    match v.split(':').next().unwrap_or("") {
        "indicator" => {
            let p = numbers(v, 2)?;
            Ok(SourceSpec::Indicator { lo: p[0], hi: p[1] })
        }
        other => Err(format!("unknown source `{other}`")),
    }
}

impl FromStr for RunConfig {
    type Err = FpError;

    fn from_str(text: &str) -> Result<Self> {
        let mut potential = None;
        let mut kernel = None;
        let mut source = None;
        let mut gamma = 1.0;
        let mut dim = 3usize;
        let mut n_intervals = DEFAULT_INTERVALS;
        let mut radius = 1.0;

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| FpError::Config {
                line: idx + 1,
                content: raw.to_string(),
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key=value".into()))?;
            let value = value.trim();
            match key.trim() {
                "potential" => potential = Some(parse_potential(value).map_err(err)?),
                "kernel" => kernel = Some(parse_kernel(value).map_err(err)?),
                "source" => source = Some(parse_source(value).map_err(err)?),
                "gamma" => gamma = value.parse().map_err(|_| err("gamma is not a number".into()))?,
                "dim" => dim = value.parse().map_err(|_| err("dim is not an integer".into()))?,
                "n_intervals" => {
                    n_intervals = value
                        .parse()
                        .map_err(|_| err("n_intervals is not an integer".into()))?
                }
                "radius" => radius = value.parse().map_err(|_| err("radius is not a number".into()))?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }

        let missing = |name: &str| FpError::Config {
            line: 0,
            content: String::new(),
            message: format!("missing required key `{name}`"),
        };
        let model = ModelSpec::new(
            potential.ok_or_else(|| missing("potential"))?,
            kernel.ok_or_else(|| missing("kernel"))?,
            source.ok_or_else(|| missing("source"))?,
            gamma,
            dim,
        )?;
        let cfg = RunConfig {
            model,
            n_intervals,
            radius,
        };
        cfg.mesh()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAIN: &str = "potential=quadratic:2.0\nkernel=gauss0:1e-3\nsource=indicator:0.3:0.5\ngamma=1.0\ndim=3\nn_intervals=500\n";

    #[test]
    fn parses_main_configuration() {
        let cfg: RunConfig = MAIN.parse().unwrap();
        assert_eq!(cfg.model, ModelSpec::main_preset());
        assert_eq!(cfg.n_intervals, 500);
        assert_eq!(cfg.radius, 1.0);
    }

    #[test]
    fn parses_every_preset_form() {
        let text = "# comment\npotential=doublewell:2.0:0.2\n\nkernel=gauss:1e-3:0.05\nsource=indicator:0.3:0.5\n";
        let cfg: RunConfig = text.parse().unwrap();
        assert_eq!(cfg.model.potential, PotentialSpec::DoubleWell { a: 2.0, r_c: 0.2 });
        assert_eq!(cfg.model.kernel, KernelSpec::ShiftedGaussian { eps: 1e-3, r1: 0.05 });
        let cfg: RunConfig = "potential=quadratic:2\nkernel=quartic:1e-3\nsource=indicator:0.3:0.5"
            .parse()
            .unwrap();
        assert_eq!(cfg.model.kernel, KernelSpec::QuarticTail { eps: 1e-3 });
    }

    #[test]
    fn unknown_key_reports_offending_line() {
        let text = format!("{MAIN}colour=blue\n");
        match text.parse::<RunConfig>() {
            Err(FpError::Config { line, content, .. }) => {
                assert_eq!(line, 7);
                assert_eq!(content, "colour=blue");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_values_are_config_errors() {
        for bad in [
            "potential=quadratic",
            "potential=cubic:1",
            "kernel=gauss0:abc",
            "gamma=fast",
            "no equals sign",
        ] {
            let err = format!("{MAIN}{bad}\n").parse::<RunConfig>().unwrap_err();
            assert!(matches!(err, FpError::Config { .. }), "{bad}: {err}");
        }
    }

    #[test]
    fn missing_required_key_is_an_error() {
        assert!("kernel=gauss0:1e-3\nsource=indicator:0.3:0.5".parse::<RunConfig>().is_err());
    }

    #[test]
    fn config_string_round_trips() {
        let cfg: RunConfig = MAIN.parse().unwrap();
        let again: RunConfig = cfg.to_config_string().parse().unwrap();
        assert_eq!(cfg, again);
    }
}
