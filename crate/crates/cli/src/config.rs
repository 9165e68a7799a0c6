//! Run configuration: a TOML file with a `[params]` table of fixed physical
//! inputs, optional `[[sweep]]` axes and per-scenario tables.
//!
//! Frequencies and rates are in units of `Γ_m` unless noted. `g0` is the
//! lab-frame `g₀/Γ_m` of the (modulated) coupling.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use vrp_core::analytics::{Rates, SystemParams};
use vrp_core::effective::{MatterKind, Occupations};
use vrp_core::validation::{default_grid, ValidationOptions, ValidationPoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Spectrum,
    Steady,
    Analytic,
    Sweep,
    Validate,
    Bounds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Fig1a,
    Fig1b,
}

/// Fixed physical inputs. Anything left out takes the ideal-point default
/// (`η = 0.1`, `g0 = 600`, `ω_m = 1000`, `κ± = 0.5`, vacuum baths, resonant
/// modulation, spin matter).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamTable {
    /// Light-matter ratio `Ω/ω`.
    pub eta: Option<f64>,
    /// Lab-frame coupling `g₀/Γ_m`.
    pub g0: Option<f64>,
    /// Cavity frequency.
    pub omega: Option<f64>,
    /// Mechanical frequency.
    pub omega_m: Option<f64>,
    /// Mechanical damping; sets the unit.
    pub gamma_m: Option<f64>,
    /// `ω_m − ω_d`.
    pub delta: Option<f64>,
    /// Common polariton occupation; sets both branches.
    pub n_bar: Option<f64>,
    pub n_plus: Option<f64>,
    pub n_minus: Option<f64>,
    /// Mechanical bath occupation.
    pub n_m: Option<f64>,
    pub kappa_plus: Option<f64>,
    pub kappa_minus: Option<f64>,
    /// Polariton rate at `η = 0`, used for the `β` of `n_SQL`.
    pub kappa_eta0: Option<f64>,
    pub matter: Option<MatterKind>,
    pub modulated: Option<bool>,
    pub zero_point: Option<bool>,
}

/// Names accepted by `[[sweep]] param`.
pub const SWEEPABLE: [&str; 13] = [
    "eta",
    "g0",
    "omega",
    "omega_m",
    "gamma_m",
    "delta",
    "n_bar",
    "n_plus",
    "n_minus",
    "n_m",
    "kappa_plus",
    "kappa_minus",
    "kappa_eta0",
];

impl ParamTable {
    fn fixed_names(&self) -> Vec<&'static str> {
        let v = [
            self.eta,
            self.g0,
            self.omega,
            self.omega_m,
            self.gamma_m,
            self.delta,
            self.n_bar,
            self.n_plus,
            self.n_minus,
            self.n_m,
            self.kappa_plus,
            self.kappa_minus,
            self.kappa_eta0,
        ];
        SWEEPABLE.iter().zip(v).filter(|(_, x)| x.is_some()).map(|(n, _)| *n).collect()
    }

    fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "eta" => &mut self.eta,
            "g0" => &mut self.g0,
            "omega" => &mut self.omega,
            "omega_m" => &mut self.omega_m,
            "gamma_m" => &mut self.gamma_m,
            "delta" => &mut self.delta,
            "n_bar" => &mut self.n_bar,
            "n_plus" => &mut self.n_plus,
            "n_minus" => &mut self.n_minus,
            "n_m" => &mut self.n_m,
            "kappa_plus" => &mut self.kappa_plus,
            "kappa_minus" => &mut self.kappa_minus,
            "kappa_eta0" => &mut self.kappa_eta0,
            _ => bail!("unknown parameter `{name}`; sweepable: {}", SWEEPABLE.join(", ")),
        };
        *slot = Some(value);
        Ok(())
    }

    pub fn system_params(&self) -> Result<SystemParams> {
        let mut sp = SystemParams::ideal(self.eta.unwrap_or(0.1), self.g0.unwrap_or(600.0));
        if self.n_bar.is_some() && (self.n_plus.is_some() || self.n_minus.is_some()) {
            bail!("set either n_bar or n_plus/n_minus, not both");
        }
        sp.omega = self.omega.unwrap_or(sp.omega);
        sp.omega_m = self.omega_m.unwrap_or(sp.omega_m);
        sp.gamma_m = self.gamma_m.unwrap_or(sp.gamma_m);
        // g0 is given per unit Γ_m
        sp.g0 *= sp.gamma_m;
        sp.delta = self.delta.unwrap_or(sp.delta);
        sp.n_m = self.n_m.unwrap_or(sp.n_m);
        let n = self.n_bar.unwrap_or(0.0);
        sp.occupations = Occupations::Direct {
            n_plus: self.n_plus.unwrap_or(n),
            n_minus: self.n_minus.unwrap_or(n),
        };
        let half = 0.5 * sp.gamma_m;
        sp.rates = Rates::Polariton {
            kappa_plus: self.kappa_plus.unwrap_or(half),
            kappa_minus: self.kappa_minus.unwrap_or(half),
        };
        sp.kappa_eta0 = self.kappa_eta0;
        sp.matter_kind = self.matter.unwrap_or(sp.matter_kind);
        sp.modulated = self.modulated.unwrap_or(sp.modulated);
        sp.zero_point = self.zero_point.unwrap_or(sp.zero_point);
        Ok(sp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Linear,
    Log,
    List,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    pub grid: GridKind,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
    pub values: Option<Vec<f64>>,
}

impl SweepAxis {
    pub fn values(&self) -> Result<Vec<f64>> {
        let p = &self.param;
        if self.grid == GridKind::List {
            let v = self.values.clone().with_context(|| format!("axis `{p}`: list grid needs `values`"))?;
            ensure!(!v.is_empty(), "axis `{p}`: empty value list");
            return Ok(v);
        }
        let (Some(a), Some(b), Some(n)) = (self.start, self.stop, self.count) else {
            bail!("axis `{p}`: linear and log grids need start, stop and count");
        };
        ensure!(n >= 1, "axis `{p}`: count must be at least 1");
        if n == 1 {
            return Ok(vec![a]);
        }
        let t = |i: usize| i as f64 / (n - 1) as f64;
        Ok(match self.grid {
            GridKind::Linear => (0..n).map(|i| a + (b - a) * t(i)).collect(),
            GridKind::Log => {
                ensure!(a > 0.0 && b > 0.0, "axis `{p}`: log grid needs positive endpoints");
                let (la, lb) = (a.log10(), b.log10());
                (0..n).map(|i| 10f64.powf(la + (lb - la) * t(i))).collect()
            }
            GridKind::List => unreachable!(),
        })
    }
}

/// Mechanical truncation and solver settings for `steady` and `validate`, and
/// the Fock cutoff for `spectrum`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub n_fock: usize,
    /// Dressed levels kept by `spectrum`.
    pub levels: usize,
    /// Polariton cutoffs; chosen from the thermal tail when absent.
    pub p_plus: Option<usize>,
    pub p_minus: Option<usize>,
    /// Mechanical cutoff for `steady`; sized from the predicted variance when absent.
    pub n_mech: Option<usize>,
    pub tol: f64,
    pub max_unknowns: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            n_fock: 30,
            levels: 6,
            p_plus: None,
            p_minus: None,
            n_mech: None,
            tol: 1e-10,
            max_unknowns: 2_000_000,
        }
    }
}

/// Grid and thresholds of the `validate` scenario. Lists default to the full
/// factorial acceptance grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateTable {
    pub eta: Vec<f64>,
    pub n_bar: Vec<f64>,
    pub eta_bar_m: Vec<f64>,
    pub q: Vec<f64>,
    pub n_m: Vec<f64>,
    pub rel_tol: f64,
    pub abs_floor: f64,
    pub n_mech_min: usize,
    pub n_mech_max: usize,
    pub leak_tol: f64,
    pub tail_tol: f64,
}

impl Default for ValidateTable {
    fn default() -> Self {
        let o = ValidationOptions::default();
        Self {
            eta: vec![0.0, 0.1],
            n_bar: vec![0.0, 0.1, 0.5],
            eta_bar_m: vec![0.5, 1.0, 5.0],
            q: vec![0.0, 1.0],
            n_m: vec![0.0, 0.5],
            rel_tol: o.rel_tol,
            abs_floor: o.abs_floor,
            n_mech_min: o.n_mech_min,
            n_mech_max: o.n_mech_max,
            leak_tol: o.leak_tol,
            tail_tol: o.tail_tol,
        }
    }
}

impl ValidateTable {
    pub fn points(&self) -> Vec<ValidationPoint> {
        if *self == Self::default() {
            return default_grid();
        }
        let mut out = Vec::new();
        for &eta in &self.eta {
            for &n_bar in &self.n_bar {
                for &eta_bar_m in &self.eta_bar_m {
                    for &q in &self.q {
                        for &n_m in &self.n_m {
                            out.push(ValidationPoint {
                                eta,
                                n_bar,
                                eta_bar_m,
                                q,
                                n_m,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn options(&self, numerics: &Numerics) -> ValidationOptions {
        let d = ValidationOptions::default();
        ValidationOptions {
            rel_tol: self.rel_tol,
            abs_floor: self.abs_floor,
            n_mech_min: self.n_mech_min,
            n_mech_max: self.n_mech_max,
            leak_tol: self.leak_tol,
            tail_tol: self.tail_tol,
            oracle: vrp_core::oracle::OracleOptions {
                tol: numerics.tol,
                max_unknowns: numerics.max_unknowns,
                ..d.oracle
            },
            ..d
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub params: ParamTable,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub validate: ValidateTable,
    /// Output directory; `--out` and `VRPSIM_OUT_DIR` take precedence.
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    /// Also write the phasor table of the fig1b inset.
    #[serde(default)]
    pub phasors: bool,
    /// Set by presets and echoed in the manifest.
    #[serde(default)]
    pub notes: Vec<String>,
}

/// One grid point: the swept values in axis order and the resulting inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub swept: Vec<f64>,
    pub params: SystemParams,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("invalid config")?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let fixed: BTreeSet<_> = self.params.fixed_names().into_iter().collect();
        let mut seen = BTreeSet::new();
        for axis in &self.sweep {
            let p = axis.param.as_str();
            ensure!(SWEEPABLE.contains(&p), "unknown sweep parameter `{p}`; sweepable: {}", SWEEPABLE.join(", "));
            ensure!(!fixed.contains(p), "`{p}` is both fixed in [params] and swept");
            ensure!(seen.insert(p), "`{p}` appears in more than one sweep axis");
            axis.values()?;
        }
        self.params.system_params()?;
        Ok(())
    }

    pub fn axis_names(&self) -> Vec<String> {
        self.sweep.iter().map(|a| a.param.clone()).collect()
    }

    /// Cartesian product of the axes, first axis slowest.
    pub fn grid(&self) -> Result<Vec<GridPoint>> {
        let axes = self.sweep.iter().map(|a| a.values()).collect::<Result<Vec<_>>>()?;
        let mut combos: Vec<Vec<f64>> = vec![Vec::new()];
        for values in &axes {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |&v| {
                        let mut c = c.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        combos
            .into_iter()
            .map(|swept| {
                let mut table = self.params.clone();
                for (axis, &v) in self.sweep.iter().zip(&swept) {
                    table.set(&axis.param, v)?;
                }
                Ok(GridPoint {
                    params: table.system_params()?,
                    swept,
                })
            })
            .collect()
    }

    /// The η = 0 and η = 0.1 visibility curves at g0/Γ_m ∈ {2, 3, 16}·(2/η²)
    /// of η = 0.1, over n̄ from 1e-8 to 10 (20 points per decade). The figure
    /// starts at 1e-4; the lower decades show the ground-state plateau at
    /// the preset rates.
    pub fn fig1a() -> Self {
        Self {
            sweep: vec![
                SweepAxis {
                    param: "eta".into(),
                    grid: GridKind::List,
                    start: None,
                    stop: None,
                    count: None,
                    values: Some(vec![0.0, 0.1]),
                },
                SweepAxis {
                    param: "g0".into(),
                    grid: GridKind::List,
                    start: None,
                    stop: None,
                    count: None,
                    values: Some(vec![400.0, 600.0, 3200.0]),
                },
                SweepAxis {
                    param: "n_bar".into(),
                    grid: GridKind::Log,
                    start: Some(1e-8),
                    stop: Some(10.0),
                    count: Some(181),
                    values: None,
                },
            ],
            notes: preset_notes(),
            ..Self::default()
        }
    }

    /// Phasor table at g0/Γ_m = 16·(2/η²), η = 0.1; the n̄ values are
    /// 0, n_max/2, n_max and 2 n_max of that point.
    pub fn fig1b() -> Self {
        let mut notes = preset_notes();
        notes.push("fig1b occupations are 0, n_max/2, n_max, 2 n_max (artifact choice; the figure does not list them)".into());
        Self {
            params: ParamTable {
                eta: Some(0.1),
                g0: Some(3200.0),
                ..ParamTable::default()
            },
            phasors: true,
            notes,
            ..Self::default()
        }
    }

    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Fig1a => Self::fig1a(),
            Preset::Fig1b => Self::fig1b(),
        }
    }

    /// Preset values under the keys the user file sets explicitly.
    pub fn overlay(mut self, user: RunConfig) -> Result<Self> {
        let u = user.params;
        macro_rules! take {
            ($($f:ident),*) => {$( if u.$f.is_some() { self.params.$f = u.$f; } )*};
        }
        take!(
            eta, g0, omega, omega_m, gamma_m, delta, n_bar, n_plus, n_minus, n_m, kappa_plus, kappa_minus, kappa_eta0,
            matter, modulated, zero_point
        );
        // a user axis or fixed value replaces the preset axis of the same name
        let user_axes: BTreeSet<_> = user.sweep.iter().map(|a| a.param.clone()).collect();
        let user_fixed = u.fixed_names();
        self.sweep
            .retain(|a| !user_axes.contains(&a.param) && !user_fixed.contains(&a.param.as_str()));
        self.sweep.extend(user.sweep);
        self.numerics = user.numerics;
        self.validate = user.validate;
        self.out = user.out.or(self.out);
        self.workers = user.workers.or(self.workers);
        self.phasors |= user.phasors;
        self.notes.extend(user.notes);
        self.check()?;
        Ok(self)
    }
}

fn preset_notes() -> Vec<String> {
    vec![
        "preset defaults kappa_plus = kappa_minus = 0.5 Gamma_m and n_m = 0 are artifact choices, not published figure values".into(),
    ]
}
