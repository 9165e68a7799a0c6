//! Scenario drivers, output files and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use vrp_core::analytics::{resolve, Resolved, SystemParams, VisibilityReport};
use vrp_core::effective::{rwa_validity, Occupations};
use vrp_core::eigen::EigenSolver;
use vrp_core::oracle::{polariton_cutoff, solve, OracleOptions, OracleTruncation};
use vrp_core::rabi::{extract_matrix_elements, DressedSpectrum, RabiParams};
use vrp_core::validation::{
    adequate, compare, initial_n_mech, oracle_model, validate_point, Outcome, PointReport, ValidationOptions,
    ValidationSummary,
};

use crate::config::{RunConfig, Scenario};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Full round-trip decimal: 17 significant digits.
pub fn fmt(x: f64) -> String {
    // no signed zeros in the data files
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

pub struct Outcomes {
    /// Process exit status.
    pub success: bool,
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    artifact: &'static str,
    version: &'static str,
    scenario: Scenario,
    state: &'static str,
    started: String,
    finished: Option<String>,
    config: &'a RunConfig,
    notes: &'a [String],
    points: Vec<Value>,
    files: Vec<FileEntry>,
}

struct Run<'a> {
    dir: PathBuf,
    manifest: Manifest<'a>,
}

impl<'a> Run<'a> {
    fn start(dir: &Path, scenario: Scenario, config: &'a RunConfig) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let run = Self {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                artifact: "vrpsim",
                version: VERSION,
                scenario,
                state: "running",
                started: chrono::Utc::now().to_rfc3339(),
                finished: None,
                config,
                notes: &config.notes,
                points: Vec::new(),
                files: Vec::new(),
            },
        };
        run.write_manifest()?;
        Ok(run)
    }

    fn write_manifest(&self) -> Result<()> {
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    fn file(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.files.push(FileEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        self.file(name, &bytes)
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.file(name, text.as_bytes())
    }

    fn finish(mut self, state: &'static str) -> Result<()> {
        self.manifest.state = state;
        self.manifest.finished = Some(chrono::Utc::now().to_rfc3339());
        self.write_manifest()
    }
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n.max(1));
    }
    Ok(b.build()?)
}

pub fn execute(scenario: Scenario, config: &RunConfig, dir: &Path) -> Result<Outcomes> {
    if scenario != Scenario::Sweep && !config.sweep.is_empty() {
        anyhow::bail!("sweep axes are only used by the sweep scenario");
    }
    let mut run = Run::start(dir, scenario, config)?;
    let result = match scenario {
        Scenario::Spectrum => spectrum(config, &mut run),
        Scenario::Steady => steady(config, &mut run),
        Scenario::Analytic => analytic(config, &mut run),
        Scenario::Sweep => sweep(config, &mut run),
        Scenario::Validate => validate(config, &mut run),
        Scenario::Bounds => bounds_report(config, &mut run),
    };
    match result {
        Ok(out) => {
            run.finish(if out.success { "complete" } else { "complete-with-failures" })?;
            Ok(out)
        }
        Err(e) => {
            run.finish("failed")?;
            Err(e)
        }
    }
}

const SWEEP_COLUMNS: [&str; 14] = [
    "Xt_avg",
    "X_avg",
    "Xt_GS",
    "Xt_thermal",
    "var_Xt",
    "var_X",
    "F",
    "F_GS",
    "F_thermal",
    "n_GS",
    "n_SQL",
    "n_max",
    "eta_m_SQL",
    "var_Xt_bound",
];

fn sweep_row(r: &Resolved, v: &VisibilityReport) -> Vec<String> {
    let m = r.moments();
    let b = &v.bounds;
    vec![
        fmt(m.xt_avg),
        fmt(m.x_avg),
        fmt(v.xt_gs),
        fmt(v.xt_thermal),
        fmt(m.var_xt),
        fmt(m.var_x),
        fmt(v.f),
        fmt(v.f_gs),
        fmt(v.f_thermal),
        fmt(b.n_gs),
        fmt(b.n_sql),
        fmt(b.n_max),
        fmt_opt(b.eta_m_sql),
        fmt(m.var_xt_bound),
    ]
}

fn evaluate(sp: &SystemParams) -> Result<(Resolved, VisibilityReport)> {
    let r = resolve(sp)?;
    let v = r.visibility(vrp_core::analytics::Eta0BetaConvention::Standard)?;
    Ok((r, v))
}

fn sweep(config: &RunConfig, run: &mut Run) -> Result<Outcomes> {
    let grid = config.grid()?;
    let rows: Vec<Result<Vec<String>>> = pool(config.workers)?.install(|| {
        grid.par_iter()
            .map(|p| {
                let (r, v) = evaluate(&p.params)?;
                let mut row: Vec<String> = p.swept.iter().map(|&x| fmt(x)).collect();
                row.extend(sweep_row(&r, &v));
                Ok(row)
            })
            .collect()
    });
    let mut ok = Vec::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        match r {
            Ok(row) => {
                run.manifest.points.push(json!({"index": i, "status": "ok"}));
                ok.push(row);
            }
            Err(e) => {
                run.manifest.points.push(json!({"index": i, "status": "error", "error": e.to_string()}));
            }
        }
    }
    let mut header = config.axis_names();
    header.extend(SWEEP_COLUMNS.iter().map(|s| s.to_string()));
    run.csv("sweep.csv", &header, &ok)?;
    if config.phasors {
        phasors(config, run)?;
    }
    Ok(Outcomes {
        success: ok.len() == grid.len(),
    })
}

/// The fig1b phasor table: means and standard deviations of both quadratures.
fn phasors(config: &RunConfig, run: &mut Run) -> Result<()> {
    let base = config.params.system_params()?;
    let n_max = resolve(&base)?.bounds().n_max;
    let mut rows = Vec::new();
    for n in [0.0, 0.5 * n_max, n_max, 2.0 * n_max] {
        let (r, _) = evaluate(&base.with_occupation(n))?;
        let m = r.moments();
        rows.push(vec![fmt(n), fmt(m.xt_avg), fmt(m.x_avg), fmt(m.var_xt.sqrt()), fmt(m.var_x.sqrt())]);
    }
    let header = ["n_bar", "Xt_avg", "X_avg", "delta_Xt", "delta_X"].map(String::from);
    run.csv("phasors.csv", &header, &rows)
}

fn analytic(config: &RunConfig, run: &mut Run) -> Result<Outcomes> {
    let sp = config.params.system_params()?;
    let (r, v) = evaluate(&sp)?;
    let header: Vec<String> = SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect();
    run.csv("analytic.csv", &header, &[sweep_row(&r, &v)])?;
    run.json(
        "analytic.json",
        &json!({"resolved": r, "moments": r.moments(), "joint_moments": r.joint_moments(), "visibility": v}),
    )?;
    run.manifest.points.push(json!({"index": 0, "status": "ok"}));
    Ok(Outcomes { success: true })
}

fn spectrum(config: &RunConfig, run: &mut Run) -> Result<Outcomes> {
    let sp = config.params.system_params()?;
    let n = &config.numerics;
    let spec = DressedSpectrum::compute(RabiParams::new(sp.omega, sp.eta)?, n.n_fock, n.levels.max(3), EigenSolver::Auto)?;
    let e0 = spec.energies[0];
    let rows: Vec<Vec<String>> = spec
        .energies
        .iter()
        .enumerate()
        .map(|(i, &e)| vec![i.to_string(), fmt(e), fmt((e - e0) / sp.omega)])
        .collect();
    run.csv("spectrum.csv", &["level", "energy", "excitation_over_omega"].map(String::from), &rows)?;
    let ext = extract_matrix_elements(&spec)?;
    let rows: Vec<Vec<String>> = match ext.resolved() {
        Some(m) => m.fields().iter().map(|(k, v)| vec![k.to_string(), fmt(*v)]).collect(),
        None => vec![vec!["xi".into(), fmt(vrp_core::rabi::ground_state_photon_number(&spec)?)]],
    };
    run.csv("matrix_elements.csv", &["name", "value"].map(String::from), &rows)?;
    run.manifest
        .points
        .push(json!({"index": 0, "status": "ok", "n_fock": n.n_fock, "degenerate": ext.resolved().is_none()}));
    Ok(Outcomes { success: true })
}

fn steady(config: &RunConfig, run: &mut Run) -> Result<Outcomes> {
    let sp = config.params.system_params()?;
    let r = resolve(&sp)?;
    let n = &config.numerics;
    let vopts = config.validate.options(n);
    let trunc = OracleTruncation {
        p_plus: n.p_plus.unwrap_or_else(|| polariton_cutoff(r.n_plus, vopts.polariton_tol)),
        p_minus: n.p_minus.unwrap_or_else(|| polariton_cutoff(r.n_minus, vopts.polariton_tol)),
        n_mech: n.n_mech.unwrap_or_else(|| initial_n_mech(&r, &vopts)),
    };
    let opts = OracleOptions {
        tol: n.tol,
        max_unknowns: n.max_unknowns,
        ..OracleOptions::default()
    };
    let sol = solve(&oracle_model(&r), &trunc, &opts)?;
    let ok = adequate(&sol, &vopts);
    let rows: Vec<Vec<String>> = compare(&r, &sol, &vopts)
        .iter()
        .map(|c| vec![c.name.clone(), fmt(c.numeric), fmt(c.analytic), fmt(c.rel_error)])
        .collect();
    run.csv("steady.csv", &["quantity", "numeric", "analytic", "rel_error"].map(String::from), &rows)?;
    run.json("steady.json", &json!({"truncation": trunc, "solution": sol, "adequate": ok}))?;
    run.manifest.points.push(json!({
        "index": 0,
        "status": if ok { "ok" } else { "truncation-inadequate" },
        "truncation": trunc,
        "residual": sol.residual,
        "trace_leak": sol.trace_leak,
        "tail_population": sol.tail_population,
    }));
    if !ok {
        eprintln!(
            "warning: truncation inadequate (leak {:.2e}, tail {:.2e}); raise numerics.n_mech",
            sol.trace_leak, sol.tail_population
        );
    }
    Ok(Outcomes { success: true })
}

fn point_status(p: &PointReport) -> &'static str {
    match p.passed() {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "excluded",
    }
}

fn validate(config: &RunConfig, run: &mut Run) -> Result<Outcomes> {
    let points = config.validate.points();
    let opts: ValidationOptions = config.validate.options(&config.numerics);
    let reports: Vec<Result<PointReport>> = pool(config.workers)?
        .install(|| points.par_iter().map(|p| Ok(validate_point(p, &opts)?)).collect());
    let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = ValidationSummary::from_reports(reports);
    let mut rows = Vec::new();
    for (i, p) in summary.points.iter().enumerate() {
        let pt = &p.point;
        let key = [pt.eta, pt.n_bar, pt.eta_bar_m, pt.q, pt.n_m].map(fmt);
        run.manifest.points.push(json!({
            "index": i,
            "status": point_status(p),
            "truncation": p.truncation,
            "residual": p.residual,
            "trace_leak": p.trace_leak,
            "tail_population": p.tail_population,
        }));
        match &p.outcome {
            Outcome::Checked { comparisons, .. } => {
                for c in comparisons {
                    let mut row = key.to_vec();
                    row.extend([
                        c.name.clone(),
                        fmt(c.analytic),
                        fmt(c.numeric),
                        fmt(c.rel_error),
                        if c.pass { "pass" } else { "fail" }.to_string(),
                    ]);
                    rows.push(row);
                }
            }
            Outcome::Excluded { .. } => {
                let mut row = key.to_vec();
                row.extend(["".into(), "".into(), "".into(), "".into(), "excluded".into()]);
                rows.push(row);
            }
        }
    }
    let header =
        ["eta", "n_bar", "eta_bar_m", "q", "n_m", "quantity", "analytic", "numeric", "rel_error", "status"].map(String::from);
    run.csv("validation.csv", &header, &rows)?;
    // timings vary run to run, so they stay out of the checksummed report
    let mut report = serde_json::to_value(&summary)?;
    if let Some(ps) = report.get_mut("points").and_then(Value::as_array_mut) {
        for p in ps.iter_mut().filter_map(Value::as_object_mut) {
            p.remove("seconds");
        }
    }
    run.json("validation.json", &report)?;
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "validation: {} passed, {} failed, {} excluded of {}",
        summary.passed,
        summary.failed,
        summary.excluded,
        summary.points.len()
    )?;
    for p in summary.points.iter().filter(|p| p.passed() != Some(true)) {
        let why = match &p.outcome {
            Outcome::Excluded { reason } => reason.clone(),
            Outcome::Checked { comparisons, .. } => comparisons
                .iter()
                .filter(|c| !c.pass)
                .map(|c| format!("{} rel {:.2e}", c.name, c.rel_error))
                .collect::<Vec<_>>()
                .join(", "),
        };
        writeln!(out, "  {} {:?}: {why}", point_status(p), p.point)?;
    }
    Ok(Outcomes {
        success: summary.all_pass(),
    })
}

#[derive(Serialize)]
struct Condition {
    holds: bool,
    value: f64,
    limit: Option<f64>,
}

fn bounds_report(config: &RunConfig, run: &mut Run) -> Result<Outcomes> {
    let sp = config.params.system_params()?;
    let r = resolve(&sp)?;
    let b = r.bounds();
    let Occupations::Direct { n_plus, n_minus } = sp.occupations else {
        unreachable!("the cli always sets occupations directly")
    };
    let n = n_plus.max(n_minus);
    let eta_bar_m = sp.eta_bar_m();
    let ground = Condition {
        holds: n < b.n_gs,
        value: n,
        limit: Some(b.n_gs),
    };
    let sql = Condition {
        holds: n < b.n_sql,
        value: n,
        limit: Some(b.n_sql),
    };
    let coupling = Condition {
        holds: b.eta_m_sql.is_some_and(|t| eta_bar_m > t),
        value: eta_bar_m,
        limit: b.eta_m_sql,
    };
    let failing: Vec<&str> = [("ground-state", &ground), ("sql-occupation", &sql), ("coupling", &coupling)]
        .iter()
        .filter(|(_, c)| !c.holds)
        .map(|(name, _)| *name)
        .collect();
    let verdict = if failing.is_empty() { "observable" } else { "not-observable" };
    let rwa = rwa_validity(sp.g0, sp.omega, sp.eta).ok();
    let report = json!({
        "verdict": verdict,
        "failing": failing,
        "ground_state": ground,
        "sql_occupation": sql,
        "coupling": coupling,
        "bounds": b,
        "rwa": rwa,
    });
    run.json("bounds.json", &report)?;
    run.manifest.points.push(json!({"index": 0, "status": "ok"}));
    let mut out = std::io::stdout().lock();
    writeln!(out, "verdict: {verdict}")?;
    writeln!(out, "  n = {n:.6e} < n_GS  = {:.6e}: {}", b.n_gs, ground.holds)?;
    writeln!(out, "  n = {n:.6e} < n_SQL = {:.6e}: {}", b.n_sql, sql.holds)?;
    match b.eta_m_sql {
        Some(t) => writeln!(out, "  g0/Gamma_m = {eta_bar_m:.6e} > {t:.6e}: {}", coupling.holds)?,
        None => writeln!(out, "  g0/Gamma_m threshold unattainable: thermal noise exceeds the ground-state signal")?,
    }
    match rwa {
        Some(c) => writeln!(out, "  RWA g0/(omega eta^3) = {:.3e}: {:?}", c.ratio, c.verdict)?,
        None => writeln!(out, "  RWA check undefined at eta = 0")?,
    }
    Ok(Outcomes { success: true })
}
