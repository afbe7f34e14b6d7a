//! Assembly of the mass matrix `A`, stiffness matrix `M`, centred drift
//! matrix `C` and load vector in the measure `r^(n-1) dr`.
//!
//! With `g = r^(n-1) Φ'`, `C` is skew-symmetric with `C[j, j+1] = g(r_{j+1}) / 2`.
//! `C` alone only carries the skew part of the drift. The conservative drift
//! used by default is `D = R - C`, where the diagonal `R[j] = -(g_{j+1} - g_j) / 2`
//! gives `D` zero column sums in the interior; `D` is then the centred flux
//! `g_{j+1} (U_j + U_{j+1}) / 2` through the face between nodes `j` and `j + 1`.
//! The system matrix is `γA + M + μD`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::csv::{fmt_num, Provenance};
use crate::error::{FpError, Result};
use crate::mesh::RadialMesh;
use crate::model::{evaluate_model, ModelSpec, SourceSpec};
use crate::tridiag::Tridiagonal;

/// How the source is tested against the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoadStyle {
    /// `∫ S χ_j r^(n-1) dr`.
    #[default]
    Hat,
    /// `∫ S r^(n-1) dr` over the cell `[jh, (j+1)h]`.
    Cell,
}

/// How the drift enters the system matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftStyle {
    /// `R - C`, mass conserving.
    #[default]
    Conservative,
    /// `-C` only.
    Skew,
}

macro_rules! str_enum {
    ($ty:ty, $($variant:path => $name:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match self { $($variant => f.write_str($name)),+ }
            }
        }
        impl FromStr for $ty {
            type Err = FpError;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(FpError::param(format!(
                        "unknown {} `{other}`", stringify!($ty)
                    ))),
                }
            }
        }
    };
}

str_enum!(LoadStyle, LoadStyle::Hat => "hat", LoadStyle::Cell => "cell");
str_enum!(DriftStyle, DriftStyle::Conservative => "conservative", DriftStyle::Skew => "skew");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AssemblyOptions {
    pub load_style: LoadStyle,
    pub drift_style: DriftStyle,
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub mesh: RadialMesh,
    pub gamma: f64,
    pub options: AssemblyOptions,
    /// `A[i, j] = ∫ χ_i χ_j r^(n-1) dr`.
    pub mass: Tridiagonal,
    /// `M[i, j] = ∫ χ'_i χ'_j r^(n-1) dr`.
    pub stiffness: Tridiagonal,
    /// Skew-symmetric centred drift `C`.
    pub drift_skew: Tridiagonal,
    /// Diagonal `R`; all zeros for [`DriftStyle::Skew`].
    pub drift_correction: Vec<f64>,
    pub load: Vec<f64>,
    /// `δ` at the unknown nodes.
    pub kernel: Vec<f64>,
}

impl AssembledSystem {
    pub fn size(&self) -> usize {
        self.load.len()
    }

    /// The drift matrix `D` entering `γA + M + μD`.
    pub fn drift(&self) -> Tridiagonal {
        let mut d = self.drift_skew.scaled(-1.0);
        d.add_to_diag(1.0, &self.drift_correction);
        d
    }

    pub fn system_matrix(&self, mu: f64) -> Tridiagonal {
        system_matrix(self, mu, self.gamma)
    }

    /// `fᵀ A g`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.mass.symmetric_form(f, g)
    }

    /// Writes `index, sub, diag, super, load` rows of the system matrix at `mu`.
    pub fn write_csv<W: Write>(&self, mu: f64, mut out: W) -> Result<()> {
        let k = self.system_matrix(mu);
        let prov = Provenance::new()
            .with("artifact", "system")
            .with("mu", fmt_num(mu))
            .with("gamma", fmt_num(self.gamma))
            .with("dim", self.mesh.dim())
            .with("n_intervals", self.mesh.n_intervals())
            .with("radius", fmt_num(self.mesh.radius()))
            .with("load_style", self.options.load_style)
            .with("drift_style", self.options.drift_style);
        writeln!(out, "{prov}")?;
        writeln!(out, "index,sub,diag,super,load")?;
        let n = self.size();
        for i in 0..n {
            let sub = if i > 0 { k.sub[i - 1] } else { 0.0 };
            let sup = if i + 1 < n { k.sup[i] } else { 0.0 };
            writeln!(
                out,
                "{i},{},{},{},{}",
                fmt_num(sub),
                fmt_num(k.diag[i]),
                fmt_num(sup),
                fmt_num(self.load[i])
            )?;
        }
        Ok(())
    }
}

/// P1 mass matrix on the unknown nodes.
pub fn mass_matrix(mesh: &RadialMesh) -> Tridiagonal {
    let n = mesh.n_unknowns();
    let mut a = Tridiagonal::zeros(n);
    for c in 0..mesh.n_intervals() {
        let cell = mesh.cell(c);
        a.diag[c] += cell.mass_ll();
        if c + 1 < n {
            a.diag[c + 1] += cell.mass_rr();
            let off = cell.mass_lr();
            a.sup[c] = off;
            a.sub[c] = off;
        }
    }
    a
}

/// P1 stiffness matrix on the unknown nodes.
pub fn stiffness_matrix(mesh: &RadialMesh) -> Tridiagonal {
    let n = mesh.n_unknowns();
    let mut m = Tridiagonal::zeros(n);
    for c in 0..mesh.n_intervals() {
        let k = mesh.cell(c).stiffness();
        m.diag[c] += k;
        if c + 1 < n {
            m.diag[c + 1] += k;
            m.sup[c] = -k;
            m.sub[c] = -k;
        }
    }
    m
}

fn load_vector(
    source: &SourceSpec,
    nodal: &[f64],
    mesh: &RadialMesh,
    style: LoadStyle,
) -> Vec<f64> {
    let n = mesh.n_unknowns();
    let h = mesh.h();
    let mut load = vec![0.0; n];
    for c in 0..mesh.n_intervals() {
        let a = mesh.node(c);
        let b = mesh.node(c + 1);
        let cell = mesh.cell(c);
        match (source, style) {
            (SourceSpec::Indicator { lo, hi }, _) => {
                let s = lo.max(a);
                let e = hi.min(b);
                if s >= e {
                    continue;
                }
                match style {
                    LoadStyle::Hat => {
                        let (left, right) = cell.partial_hat_integrals((s - a) / h, (e - a) / h);
                        load[c] += left;
                        if c + 1 < n {
                            load[c + 1] += right;
                        }
                    }
                    LoadStyle::Cell => load[c] += mesh.weighted_length(s, e),
                }
            }
            (SourceSpec::Custom(_), LoadStyle::Hat) => {
                let (sl, sr) = (nodal[c], nodal[c + 1]);
                load[c] += cell.mass_ll() * sl + cell.mass_lr() * sr;
                if c + 1 < n {
                    load[c + 1] += cell.mass_lr() * sl + cell.mass_rr() * sr;
                }
            }
            (SourceSpec::Custom(_), LoadStyle::Cell) => {
                let (sl, sr) = (nodal[c], nodal[c + 1]);
                load[c] += (cell.mass_ll() + cell.mass_lr()) * sl
                    + (cell.mass_lr() + cell.mass_rr()) * sr;
            }
        }
    }
    load
}

pub fn assemble(model: &ModelSpec, mesh: &RadialMesh) -> Result<AssembledSystem> {
    assemble_with(model, mesh, AssemblyOptions::default())
}

pub fn assemble_with(
    model: &ModelSpec,
    mesh: &RadialMesh,
    options: AssemblyOptions,
) -> Result<AssembledSystem> {
    let tables = evaluate_model(model, mesh)?;
    let n = mesh.n_unknowns();

    let g: Vec<f64> = tables
        .r
        .iter()
        .zip(&tables.dphi)
        .map(|(&r, &dphi)| mesh.weight(r) * dphi)
        .collect();

    let mut drift_skew = Tridiagonal::zeros(n);
    for j in 0..n - 1 {
        let c = 0.5 * g[j + 1];
        drift_skew.sup[j] = c;
        drift_skew.sub[j] = -c;
    }
    let drift_correction = match options.drift_style {
        DriftStyle::Conservative => (0..n).map(|j| -0.5 * (g[j + 1] - g[j])).collect(),
        DriftStyle::Skew => vec![0.0; n],
    };

    Ok(AssembledSystem {
        mesh: *mesh,
        gamma: model.gamma,
        options,
        mass: mass_matrix(mesh),
        stiffness: stiffness_matrix(mesh),
        drift_skew,
        drift_correction,
        load: load_vector(&model.source, &tables.source, mesh, options.load_style),
        kernel: tables.delta[..n].to_vec(),
    })
}

/// `γA - μC + M` plus `μR` for the conservative drift.
pub fn system_matrix(sys: &AssembledSystem, mu: f64, gamma: f64) -> Tridiagonal {
    let mut k = sys.mass.combine(gamma, &sys.stiffness, 1.0);
    if mu != 0.0 {
        k = k.combine(1.0, &sys.drift(), mu);
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PotentialSpec;

    #[test]
    fn one_dimensional_interior_entries() {
        let mesh = RadialMesh::new(10, 1).unwrap();
        let h = mesh.h();
        let a = mass_matrix(&mesh);
        let m = stiffness_matrix(&mesh);
        for j in 1..9 {
            assert!((a.diag[j] - 2.0 * h / 3.0).abs() < 1e-15);
            assert!((a.sup[j] - h / 6.0).abs() < 1e-15);
            assert!((m.diag[j] - 2.0 / h).abs() < 1e-12);
            assert!((m.sup[j] + 1.0 / h).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_entry_for_quadratic_potential() {
        let mut model = ModelSpec::main_preset();
        model.potential = PotentialSpec::Quadratic { a: 2.0 };
        let mesh = RadialMesh::new(10, 3).unwrap();
        let sys = assemble(&model, &mesh).unwrap();
        assert!((sys.drift_skew.sup[0] - 2e-3).abs() < 1e-17);
        assert_eq!(sys.drift_skew.sub[0], -sys.drift_skew.sup[0]);
        assert_eq!(sys.drift_skew.max_symmetric_part(), 0.0);
    }

    #[test]
    fn conservative_drift_has_zero_interior_column_sums() {
        let mesh = RadialMesh::new(50, 3).unwrap();
        let sys = assemble(&ModelSpec::main_preset(), &mesh).unwrap();
        let d = sys.drift();
        let n = sys.size();
        for k in 0..n - 1 {
            let mut col = d.diag[k];
            if k > 0 {
                col += d.sup[k - 1];
            }
            col += d.sub[k];
            assert!(col.abs() < 1e-15, "column {k}: {col}");
        }
    }

    #[test]
    fn indicator_load_at_interior_node() {
        let mesh = RadialMesh::new(10, 3).unwrap();
        let sys = assemble(&ModelSpec::main_preset(), &mesh).unwrap();
        // ∫_{0.3}^{0.4} (r - 0.3)/0.1 r² dr + ∫_{0.4}^{0.5} (0.5 - r)/0.1 r² dr
        let up = |r: f64| (r.powi(4) / 4.0 - 0.3 * r.powi(3) / 3.0) / 0.1;
        let down = |r: f64| (0.5 * r.powi(3) / 3.0 - r.powi(4) / 4.0) / 0.1;
        let expected = up(0.4) - up(0.3) + down(0.5) - down(0.4);
        assert!((sys.load[4] - expected).abs() < 1e-15, "{} vs {expected}", sys.load[4]);
    }

    #[test]
    fn both_load_styles_carry_the_full_source_mass() {
        let mesh = RadialMesh::new(37, 3).unwrap();
        let exact = (0.125 - 0.027) / 3.0;
        for style in [LoadStyle::Hat, LoadStyle::Cell] {
            let opts = AssemblyOptions {
                load_style: style,
                ..Default::default()
            };
            let sys = assemble_with(&ModelSpec::main_preset(), &mesh, opts).unwrap();
            let total: f64 = sys.load.iter().sum();
            assert!((total - exact).abs() < 1e-15, "{style}: {total}");
        }
    }

    #[test]
    fn zero_mu_system_is_gamma_mass_plus_stiffness() {
        let mesh = RadialMesh::new(20, 3).unwrap();
        let sys = assemble(&ModelSpec::main_preset(), &mesh).unwrap();
        let k = system_matrix(&sys, 0.0, 1.0);
        let expected = sys.mass.combine(1.0, &sys.stiffness, 1.0);
        assert_eq!(k, expected);
    }

    #[test]
    fn style_names_parse() {
        assert_eq!("cell".parse::<LoadStyle>().unwrap(), LoadStyle::Cell);
        assert_eq!("skew".parse::<DriftStyle>().unwrap(), DriftStyle::Skew);
        assert!("upwind".parse::<DriftStyle>().is_err());
    }
}
