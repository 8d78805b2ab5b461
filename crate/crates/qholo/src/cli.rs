//! Command-line runs: config parsing, the scan pipelines and file output.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    cfi_scaling_scan, darkport_fraction, fit_power_wavelength, fit_quartic_wavelength,
    fit_single_exponential, fit_squeeze_decay, fringe_visibility, lineout, CfiPipeline, ScalingFit,
    Spectrum,
};
use crate::ensemble::{ensemble_lineout, ensemble_pmd_with, EnsembleConfig, EnsembleReport, LineoutSpec};
use crate::error::{Error, Result};
use crate::field_model::{to_atomic_units, FieldConstants, LaserParams};
use crate::gaussian_optics::SqueezedState;
use crate::sfa_engine::{MomentumGrid, SfaOptions};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "qholo", version, about = "Photoelectron holography driven by squeezed light")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Ensemble seed (overrides `ensemble_config.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Ensemble-averaged momentum distribution on the 2D grid.
    Pmd,
    /// Fine ensemble lineout at fixed p_perp.
    Lineout,
    /// Fringe visibility against squeezing for PS, AS and CS light.
    VisibilityScan,
    /// Fringe visibility against wavelength at fixed intensity.
    WavelengthScan,
    /// Classical Fisher information of r for phase-squeezed light.
    Fisher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    Pmd,
    Lineout,
    Visibility,
    Fisher,
}

/// Quantum state of the driver; `alpha` is written as [re, im].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateSection {
    pub alpha: C64,
    pub r: f64,
    pub theta: f64,
}

impl Default for StateSection {
    fn default() -> Self {
        Self { alpha: C64::new(120.0, 0.0), r: 0.0, theta: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    /// Squeezing values for `visibility-scan`.
    pub r_values: Vec<f64>,
    /// Wavelengths in μm for `wavelength-scan`.
    pub wavelengths_um: Vec<f64>,
    /// Squeezing used by `wavelength-scan`.
    pub wavelength_r: f64,
    /// Squeezing values for `fisher`.
    pub fisher_r_values: Vec<f64>,
    /// Longitudinal momentum where visibilities are read.
    pub pz: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            r_values: (0..=6).map(|i| 0.25 * i as f64).collect(),
            wavelengths_um: vec![0.8, 1.2, 1.6, 2.0],
            wavelength_r: 1.0,
            fisher_r_values: vec![0.0, 0.5, 0.75, 1.0, 1.25, 1.5],
            pz: 0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Output spacing of visibility curves (a.u.).
    pub window_width: f64,
    /// Finite-difference step in r.
    pub delta: f64,
    /// Probability floor of the Fisher map, relative to total yield.
    pub floor: f64,
    /// Repeat the Fisher evaluation at half the step.
    pub richardson: bool,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { window_width: 0.01, delta: 0.05, floor: 1e-12, richardson: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// Extra products of `pmd`; `lineout` adds the lowest-p_perp row.
    pub emit: Vec<Emit>,
    pub laser_params: LaserParams,
    pub squeezed_state: StateSection,
    pub momentum_grid: MomentumGrid,
    pub ensemble_config: EnsembleConfig,
    pub sfa: SfaOptions,
    pub lineout: LineoutSpec,
    pub scan: ScanSection,
    pub analysis: AnalysisSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            emit: vec![Emit::Pmd],
            laser_params: LaserParams::default(),
            squeezed_state: StateSection::default(),
            momentum_grid: MomentumGrid::default(),
            ensemble_config: EnsembleConfig::default(),
            sfa: SfaOptions::default(),
            lineout: LineoutSpec::default(),
            scan: ScanSection::default(),
            analysis: AnalysisSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn state(&self) -> Result<SqueezedState> {
        let s = &self.squeezed_state;
        SqueezedState::new(s.alpha, s.r, s.theta)
    }

    pub fn validate(&self, command: Command) -> Result<()> {
        self.laser_params.validate()?;
        self.state()?;
        self.momentum_grid.validate()?;
        self.ensemble_config.validate()?;
        self.lineout.validate()?;
        let a = &self.analysis;
        if !(a.window_width > 0.0 && a.delta > 0.0 && a.floor >= 0.0) {
            return Err(Error::Config("analysis needs window_width > 0, delta > 0, floor >= 0".into()));
        }
        let scan = &self.scan;
        let empty = match command {
            Command::VisibilityScan => scan.r_values.is_empty(),
            Command::WavelengthScan => scan.wavelengths_um.is_empty(),
            Command::Fisher => scan.fisher_r_values.iter().filter(|&&r| r >= 0.5).count() < 3,
            _ => false,
        };
        if empty {
            return Err(Error::Config("scan list missing or too short for this command".into()));
        }
        if scan.r_values.iter().chain(&scan.fisher_r_values).any(|r| !(*r >= 0.0)) {
            return Err(Error::Config("squeezing values must be nonnegative".into()));
        }
        if scan.wavelengths_um.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::Config("wavelengths must be positive".into()));
        }
        Ok(())
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) => 2,
        Error::Numerical(_) => 3,
        Error::Io { .. } => 4,
    }
}

/// Labelled squeezing family: amplitude squeezing at θ = 0, phase at θ = π.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateLabel {
    Ps,
    As,
    Cs,
}

impl StateLabel {
    pub const ALL: [StateLabel; 3] = [StateLabel::Ps, StateLabel::As, StateLabel::Cs];

    pub fn name(self) -> &'static str {
        match self {
            StateLabel::Ps => "PS",
            StateLabel::As => "AS",
            StateLabel::Cs => "CS",
        }
    }

    pub fn state(self, alpha: C64, r: f64) -> Result<SqueezedState> {
        match self {
            StateLabel::Ps => SqueezedState::new(alpha, r, PI),
            StateLabel::As => SqueezedState::new(alpha, r, 0.0),
            StateLabel::Cs => Ok(SqueezedState::coherent(alpha)),
        }
    }
}

/// Visibility of an ensemble lineout at `pz`. Fringes washed out below
/// detection read as zero.
#[allow(clippy::too_many_arguments)]
pub fn lineout_visibility(
    state: &SqueezedState,
    laser: &LaserParams,
    spec: &LineoutSpec,
    ens: &EnsembleConfig,
    sfa: &SfaOptions,
    pz: f64,
    window_width: f64,
) -> Result<(f64, EnsembleReport)> {
    let (spectrum, report) = ensemble_lineout(state, laser, spec, ens, sfa)?;
    let v = fringe_visibility(&spectrum, window_width).at(pz).unwrap_or(0.0);
    Ok((v, report))
}

/// Displacement that keeps the classical intensity fixed at another
/// wavelength: the photon number grows as λ/λ_ref.
pub fn alpha_at_wavelength(alpha: C64, reference_nm: f64, wavelength_nm: f64) -> C64 {
    alpha * (wavelength_nm / reference_nm).sqrt()
}

#[derive(Debug, Clone, Serialize)]
struct ReportSummary {
    label: String,
    realized_samples: usize,
    dropped_nodes: usize,
    reseeded_nodes: usize,
    clamped_nodes: usize,
    dropped_seeds: usize,
    max_standard_error: Option<f64>,
    wall_time: f64,
}

fn summary(label: impl Into<String>, r: &EnsembleReport) -> ReportSummary {
    ReportSummary {
        label: label.into(),
        realized_samples: r.realized_samples,
        dropped_nodes: r.dropped_nodes,
        reseeded_nodes: r.reseeded_nodes,
        clamped_nodes: r.clamped_nodes,
        dropped_seeds: r.dropped_seeds,
        max_standard_error: r
            .statistical_error_map
            .as_ref()
            .map(|m| m.iter().copied().fold(0.0, f64::max)),
        wall_time: r.wall_time,
    }
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    schema_version: u32,
    version: &'static str,
    command: Command,
    config: &'a RunConfig,
    constants: FieldConstants,
    files: Vec<String>,
    reports: Vec<ReportSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extra: Option<serde_json::Value>,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|source| Error::Io { path, source })
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
    body.push('\n');
    write_file(dir, name, &body)
}

fn pmd_csv(grid: &MomentumGrid, values: &[f64], column: &str) -> String {
    let mut s = format!("pz,pperp,{column}\n");
    for (n, v) in values.iter().enumerate() {
        let p = grid.node(n);
        let _ = writeln!(s, "{},{},{}", num(p.pz), num(p.pperp), num(*v));
    }
    s
}

fn lineout_csv(sp: &Spectrum) -> String {
    let mut s = String::from("pz,value\n");
    for (z, v) in sp.pz.iter().zip(&sp.values) {
        let _ = writeln!(s, "{},{}", num(*z), num(*v));
    }
    s
}

struct Outputs {
    files: Vec<String>,
    reports: Vec<ReportSummary>,
    extra: Option<serde_json::Value>,
}

fn cmd_pmd(cfg: &RunConfig, dir: &Path) -> Result<Outputs> {
    let state = cfg.state()?;
    let (pmd, report) =
        ensemble_pmd_with(&state, &cfg.laser_params, &cfg.momentum_grid, &cfg.ensemble_config, &cfg.sfa)?;
    write_file(dir, "pmd.csv", &pmd_csv(&pmd.grid, &pmd.values, "value"))?;
    let mut files = vec!["pmd.csv".to_string()];
    if cfg.emit.contains(&Emit::Lineout) {
        let row = lineout(&pmd, cfg.momentum_grid.pperp_min)?;
        write_file(dir, "lineout.csv", &lineout_csv(&row))?;
        files.push("lineout.csv".into());
    }
    Ok(Outputs { files, reports: vec![summary("pmd", &report)], extra: None })
}

fn cmd_lineout(cfg: &RunConfig, dir: &Path) -> Result<Outputs> {
    let state = cfg.state()?;
    let (sp, report) = ensemble_lineout(&state, &cfg.laser_params, &cfg.lineout, &cfg.ensemble_config, &cfg.sfa)?;
    write_file(dir, "lineout.csv", &lineout_csv(&sp))?;
    Ok(Outputs { files: vec!["lineout.csv".into()], reports: vec![summary("lineout", &report)], extra: None })
}

#[derive(Debug, Serialize)]
struct RFits {
    state: &'static str,
    pz: f64,
    squeeze_decay: Option<ScalingFit>,
    single_exponential: Option<ScalingFit>,
}

fn cmd_visibility_scan(cfg: &RunConfig, dir: &Path) -> Result<Outputs> {
    let scan = &cfg.scan;
    let alpha = cfg.squeezed_state.alpha;
    let mut csv = String::from("state,r,pz,visibility\n");
    let mut reports = Vec::new();
    let mut ps = Vec::new();
    // the coherent state does not depend on r
    let (v_cs, rep) = lineout_visibility(
        &StateLabel::Cs.state(alpha, 0.0)?,
        &cfg.laser_params,
        &cfg.lineout,
        &cfg.ensemble_config,
        &cfg.sfa,
        scan.pz,
        cfg.analysis.window_width,
    )?;
    reports.push(summary("CS", &rep));
    for label in StateLabel::ALL {
        for &r in &scan.r_values {
            let v = if label == StateLabel::Cs {
                v_cs
            } else {
                let (v, rep) = lineout_visibility(
                    &label.state(alpha, r)?,
                    &cfg.laser_params,
                    &cfg.lineout,
                    &cfg.ensemble_config,
                    &cfg.sfa,
                    scan.pz,
                    cfg.analysis.window_width,
                )?;
                reports.push(summary(format!("{} r={r}", label.name()), &rep));
                v
            };
            if label == StateLabel::Ps {
                ps.push((r, v));
            }
            let _ = writeln!(csv, "{},{},{},{}", label.name(), num(r), num(scan.pz), num(v));
        }
    }
    write_file(dir, "visibility_vs_r.csv", &csv)?;
    let fits = RFits {
        state: "PS",
        pz: scan.pz,
        squeeze_decay: fit_squeeze_decay(&ps).ok(),
        single_exponential: fit_single_exponential(&ps).ok(),
    };
    write_json(dir, "fit.json", &fits)?;
    Ok(Outputs { files: vec!["visibility_vs_r.csv".into(), "fit.json".into()], reports, extra: None })
}

#[derive(Debug, Serialize)]
struct LambdaFits {
    state: &'static str,
    r: f64,
    pz: f64,
    quartic: Option<ScalingFit>,
    square: Option<ScalingFit>,
    cubic: Option<ScalingFit>,
}

fn cmd_wavelength_scan(cfg: &RunConfig, dir: &Path) -> Result<Outputs> {
    let scan = &cfg.scan;
    let base = cfg.laser_params;
    let mut csv = String::from("state,lambda_um,visibility\n");
    let mut reports = Vec::new();
    let mut fits = Vec::new();
    for label in StateLabel::ALL {
        let mut pts = Vec::new();
        for &lam in &scan.wavelengths_um {
            let laser = LaserParams { wavelength_nm: 1000.0 * lam, ..base };
            let alpha = alpha_at_wavelength(cfg.squeezed_state.alpha, base.wavelength_nm, laser.wavelength_nm);
            let (v, rep) = lineout_visibility(
                &label.state(alpha, scan.wavelength_r)?,
                &laser,
                &cfg.lineout,
                &cfg.ensemble_config,
                &cfg.sfa,
                scan.pz,
                cfg.analysis.window_width,
            )?;
            reports.push(summary(format!("{} lambda={lam}", label.name()), &rep));
            pts.push((lam, v));
            let _ = writeln!(csv, "{},{},{}", label.name(), num(lam), num(v));
        }
        fits.push(LambdaFits {
            state: label.name(),
            r: if label == StateLabel::Cs { 0.0 } else { scan.wavelength_r },
            pz: scan.pz,
            quartic: fit_quartic_wavelength(&pts).ok(),
            square: fit_power_wavelength(&pts, 2).ok(),
            cubic: fit_power_wavelength(&pts, 3).ok(),
        });
    }
    write_file(dir, "visibility_vs_lambda.csv", &csv)?;
    write_json(dir, "fit.json", &fits)?;
    Ok(Outputs { files: vec!["visibility_vs_lambda.csv".into(), "fit.json".into()], reports, extra: None })
}

#[derive(Debug, Serialize)]
struct DarkPortFile {
    r: f64,
    fisher_fraction: f64,
    yield_fraction: f64,
    p_2up: f64,
}

fn cmd_fisher(cfg: &RunConfig, dir: &Path) -> Result<Outputs> {
    let pipe = CfiPipeline {
        laser: cfg.laser_params,
        grid: cfg.momentum_grid,
        alpha: cfg.squeezed_state.alpha,
        theta: PI,
        ensemble: cfg.ensemble_config,
        sfa: cfg.sfa,
        delta: cfg.analysis.delta,
        floor: cfg.analysis.floor,
        richardson: cfg.analysis.richardson,
    };
    let mut rs = cfg.scan.fisher_r_values.clone();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    let scan = cfi_scaling_scan(&rs, &pipe)?;
    let sql = match scan.rows.iter().find(|row| row.r == 0.0) {
        Some(row) => row.cfi,
        None => pipe.evaluate(0.0)?.0.cfi,
    };
    let mut csv = String::from("r,cfi,cfi_over_sql\n");
    for row in &scan.rows {
        let _ = writeln!(csv, "{},{},{}", num(row.r), num(row.cfi), num(row.cfi / sql));
    }
    write_file(dir, "fisher_vs_r.csv", &csv)?;
    let last = scan.maps.last().expect("scan has at least three rows");
    write_file(dir, "fisher_map.csv", &pmd_csv(&last.grid, &last.density, "density"))?;

    let constants = to_atomic_units(&cfg.laser_params)?;
    let at = scan.rows.iter().position(|row| row.r == 1.0).unwrap_or(scan.rows.len() - 1);
    let dp = darkport_fraction(&scan.maps[at], &constants);
    write_json(
        dir,
        "darkport.json",
        &DarkPortFile {
            r: scan.rows[at].r,
            fisher_fraction: dp.fisher_fraction,
            yield_fraction: dp.yield_fraction,
            p_2up: dp.p_2up,
        },
    )?;
    let extra = serde_json::json!({
        "slope": scan.slope,
        "sql_cfi": sql,
        "rows": scan.rows,
        "excluded_bins": scan.maps.iter().map(|m| m.excluded_bins).collect::<Vec<_>>(),
    });
    Ok(Outputs {
        files: vec!["fisher_vs_r.csv".into(), "fisher_map.csv".into(), "darkport.json".into()],
        reports: Vec::new(),
        extra: Some(extra),
    })
}

/// Run one command with a fully resolved config; writes into `cfg.output_dir`.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<()> {
    cfg.validate(command)?;
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let out = match command {
        Command::Pmd => cmd_pmd(cfg, dir)?,
        Command::Lineout => cmd_lineout(cfg, dir)?,
        Command::VisibilityScan => cmd_visibility_scan(cfg, dir)?,
        Command::WavelengthScan => cmd_wavelength_scan(cfg, dir)?,
        Command::Fisher => cmd_fisher(cfg, dir)?,
    };
    let meta = Meta {
        schema_version: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: cfg,
        constants: to_atomic_units(&cfg.laser_params)?,
        files: out.files,
        reports: out.reports,
        extra: out.extra,
    };
    write_json(dir, "meta.json", &meta)
}

/// Parse flags, apply overrides and run.
pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.ensemble_config.seed = seed;
    }
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| execute(cli.command, &cfg))
        }
        None => execute(cli.command, &cfg),
    }
}
