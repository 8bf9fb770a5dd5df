//! Configured parameter sweeps: TOML config in, CSV/JSON curves and a JSON
//! manifest out.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hyperradial::{self, WindowFactors};
use crate::numerics::{geomspace, linspace};
use crate::potentials::Family;
use crate::threebody::{self, BorromeanWindow, SvmOptions, ThreeBodyOptions};
use crate::twobody::{self, fmt_value, HPoint, ThresholdCurve, ThresholdOptions, ThresholdPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range(GridRange),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range(GridRange {
                min,
                max,
                count,
                spacing,
            }) => {
                if *count == 1 && min == max {
                    vec![*min]
                } else if *count < 2 || !(min < max) {
                    return Err(Error::Config(format!(
                        "grid range needs min < max and count >= 2, got [{min}, {max}] x {count}"
                    )));
                } else {
                    match spacing {
                        Spacing::Linear => linspace(*min, *max, *count),
                        Spacing::Log if *min > 0.0 => geomspace(*min, *max, *count),
                        Spacing::Log => return Err(Error::Config("log spacing needs min > 0".into())),
                    }
                }
            }
        };
        if v.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("grid must be finite and strictly increasing".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVariable {
    LambdaMinus,
    S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub variable: ScanVariable,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub budget: usize,
    pub seed: Option<u64>,
    /// Relative bracket width of three-body threshold searches.
    pub tol: f64,
    pub trials: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub eps_bind: f64,
    pub cond_max: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        let t = ThreeBodyOptions::default();
        SvmConfig {
            budget: t.budget,
            seed: None,
            tol: t.tol,
            trials: t.svm.trials,
            alpha_min: t.svm.alpha_min,
            alpha_max: t.svm.alpha_max,
            eps_bind: t.svm.eps_bind,
            cond_max: t.svm.cond_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub twobody: ThresholdOptions,
    pub svm: SvmConfig,
    pub hyperradial: WindowFactors,
    /// Repulsion at which the asymptotic attractions are evaluated.
    pub asymptote_lambda_plus: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            twobody: ThresholdOptions::default(),
            svm: SvmConfig::default(),
            hyperradial: WindowFactors::default(),
            asymptote_lambda_plus: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub potential: Option<Family>,
    pub scan: ScanConfig,
    #[serde(default)]
    pub solvers: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scan.grid.values()?;
        let t = &self.solvers.twobody;
        let s = &self.solvers.svm;
        let positive = [
            ("twobody.tol", t.tol),
            ("twobody.ceiling", t.ceiling),
            ("svm.tol", s.tol),
            ("svm.eps_bind", s.eps_bind),
            ("svm.alpha_min", s.alpha_min),
            ("asymptote_lambda_plus", self.solvers.asymptote_lambda_plus),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if s.budget == 0 || s.trials == 0 {
            return Err(Error::Config("svm.budget and svm.trials must be positive".into()));
        }
        let f = &self.output.formats;
        if f.is_empty() || (1..f.len()).any(|i| f[..i].contains(&f[i])) {
            return Err(Error::Config("output.formats must be nonempty without repeats".into()));
        }
        if let Some(Family::Shape { shape, .. }) = &self.potential {
            shape.validate()?;
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON of every numeric-relevant field.
    pub fn digest(&self, command: Command) -> String {
        #[derive(Serialize)]
        struct Relevant<'a> {
            command: &'a str,
            potential: &'a Option<Family>,
            scan: &'a ScanConfig,
            solvers: &'a SolverConfig,
        }
        let json = serde_json::to_string(&Relevant {
            command: command.name(),
            potential: &self.potential,
            scan: &self.scan,
            solvers: &self.solvers,
        })
        .expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn three_body_options(&self) -> Result<ThreeBodyOptions> {
        let s = &self.solvers.svm;
        let seed = s
            .seed
            .ok_or_else(|| Error::Config("svm.seed is required for three-body runs (or pass --seed)".into()))?;
        Ok(ThreeBodyOptions {
            budget: s.budget,
            seed,
            tol: s.tol,
            svm: SvmOptions {
                trials: s.trials,
                alpha_min: s.alpha_min,
                alpha_max: s.alpha_max,
                eps_bind: s.eps_bind,
                cond_max: s.cond_max,
                ..SvmOptions::default()
            },
            two_body: self.solvers.twobody,
        })
    }

    fn family(&self) -> Result<&Family> {
        self.potential
            .as_ref()
            .ok_or_else(|| Error::Config("this command needs a [potential] family".into()))
    }

    fn expect_variable(&self, v: ScanVariable) -> Result<()> {
        if self.scan.variable != v {
            return Err(Error::Config(format!(
                "this command scans {v:?}, config scans {:?}",
                self.scan.variable
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    TwoThreshold,
    ThreeThreshold,
    HCurve,
    WindowScan,
    Fig1,
    Fig2,
    Fig2a,
    Fig3,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::TwoThreshold => "two-threshold",
            Command::ThreeThreshold => "three-threshold",
            Command::HCurve => "h-curve",
            Command::WindowScan => "window-scan",
            Command::Fig1 => "fig1",
            Command::Fig2 => "fig2",
            Command::Fig2a => "fig2a",
            Command::Fig3 => "fig3",
        }
    }

    /// Built-in configuration for the figure commands.
    pub fn default_config(self) -> Option<SweepConfig> {
        let range = |variable, min, max, count, spacing| ScanConfig {
            variable,
            grid: GridSpec::Range(GridRange {
                min,
                max,
                count,
                spacing,
            }),
        };
        let (potential, scan) = match self {
            Command::Fig1 => (None, range(ScanVariable::S, 1e-4, 0.99, 60, Spacing::Log)),
            Command::Fig2 => (None, range(ScanVariable::LambdaMinus, 0.1, 8.0, 40, Spacing::Linear)),
            Command::Fig2a => (None, range(ScanVariable::S, 0.02, 0.98, 49, Spacing::Linear)),
            Command::Fig3 => (
                Some(Family::fig3()),
                range(ScanVariable::LambdaMinus, 0.05, 1.2, 24, Spacing::Linear),
            ),
            _ => return None,
        };
        let mut solvers = SolverConfig::default();
        solvers.svm.seed = Some(1);
        Some(SweepConfig {
            potential,
            scan,
            solvers,
            output: OutputConfig::default(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointStatus {
    pub index: usize,
    pub value: f64,
    pub ok: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanManifest {
    pub command: String,
    pub config_digest: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub jobs: usize,
    pub points: Vec<PointStatus>,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

impl ScanManifest {
    pub fn failed(&self) -> usize {
        self.points.iter().filter(|p| !p.ok).count()
    }
}

/// Evaluate `f` over `values` on `jobs` threads, results in input order.
pub fn map_ordered<T: Send>(
    values: &[f64],
    jobs: usize,
    f: impl Fn(f64) -> Result<T> + Sync,
) -> Result<Vec<Result<T>>> {
    if jobs <= 1 {
        return Ok(values.iter().map(|&v| f(v)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| values.par_iter().map(|&v| f(v)).collect()))
}

struct Run<'a> {
    cfg: &'a SweepConfig,
    dir: &'a Path,
    outputs: Vec<String>,
    points: Vec<PointStatus>,
}

impl Run<'_> {
    fn emit<T: Serialize>(
        &mut self,
        stem: &str,
        rows: &[T],
        csv: impl FnOnce(&mut dyn Write) -> Result<()>,
    ) -> Result<()> {
        let mut csv = Some(csv);
        for fmt in &self.cfg.output.formats {
            let name = match fmt {
                Format::Csv => format!("{stem}.csv"),
                Format::Json => format!("{stem}.json"),
            };
            let mut w = BufWriter::new(File::create(self.dir.join(&name))?);
            match fmt {
                Format::Csv => {
                    if let Some(f) = csv.take() {
                        f(&mut w)?;
                    }
                }
                Format::Json => {
                    serde_json::to_writer_pretty(&mut w, rows).map_err(|e| Error::Io(e.to_string()))?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
            self.outputs.push(name);
        }
        Ok(())
    }

    /// Record per-point outcomes; invariant violations abort the run.
    fn collect<T>(&mut self, values: &[f64], results: Vec<Result<T>>) -> Result<Vec<T>> {
        let mut ok = Vec::new();
        for (i, (v, r)) in values.iter().zip(results).enumerate() {
            match r {
                Ok(t) => {
                    self.points.push(PointStatus {
                        index: i,
                        value: *v,
                        ok: true,
                        error: None,
                    });
                    ok.push(t);
                }
                Err(e @ Error::Invariant(_)) => return Err(e),
                Err(e) => self.points.push(PointStatus {
                    index: i,
                    value: *v,
                    ok: false,
                    error: Some(e.to_string()),
                }),
            }
        }
        Ok(ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct AsymptoteRow<'a> {
    family: &'a str,
    lambda_minus_cr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct Fig3Asymptotes {
    lambda_plus: f64,
    lambda_minus_cr: f64,
    #[serde(rename = "Lambda_minus_cr")]
    big_lambda_minus_cr: f64,
    ratio: f64,
}

fn write_points_csv(rows: &[ThresholdPoint], w: &mut dyn Write) -> Result<()> {
    ThresholdCurve {
        points: rows.to_vec(),
        lambda_minus_cr: None,
    }
    .write_csv(w)
}

/// Run `command` with `cfg`, writing into `out` (created if needed).
pub fn run(command: Command, cfg: &SweepConfig, out: &Path, jobs: usize) -> Result<ScanManifest> {
    cfg.validate()?;
    let start = Instant::now();
    std::fs::create_dir_all(out)?;
    let values = cfg.scan.grid.values()?;
    let jobs = jobs.max(1);
    let mut run = Run {
        cfg,
        dir: out,
        outputs: Vec::new(),
        points: Vec::new(),
    };
    let two = cfg.solvers.twobody;
    match command {
        Command::TwoThreshold => {
            cfg.expect_variable(ScanVariable::LambdaMinus)?;
            let fam = cfg.family()?;
            let res = map_ordered(&values, jobs, |lm| twobody::critical_lambda_plus(fam, lm, &two))?;
            let rows = run.collect(&values, res)?;
            run.emit("two_threshold", &rows, |w| write_points_csv(&rows, w))?;
        }
        Command::ThreeThreshold => {
            cfg.expect_variable(ScanVariable::LambdaMinus)?;
            let fam = cfg.family()?;
            let opts = cfg.three_body_options()?;
            let res = map_ordered(&values, jobs, |lm| {
                Ok(threebody::critical_three_body_lambda_plus(fam, lm, &opts)?.point)
            })?;
            let rows = run.collect(&values, res)?;
            run.emit("three_threshold", &rows, |w| write_points_csv(&rows, w))?;
        }
        Command::WindowScan | Command::Fig3 => {
            cfg.expect_variable(ScanVariable::LambdaMinus)?;
            let fam = cfg.family()?;
            let opts = cfg.three_body_options()?;
            let res = map_ordered(&values, jobs, |lm| threebody::borromean_point(fam, lm, &opts))?;
            let rows: Vec<BorromeanWindow> = run.collect(&values, res)?;
            if command == Command::WindowScan {
                run.emit("window_scan", &rows, |w| threebody::write_scan_csv(&rows, w))?;
            } else {
                run.emit("fig3", &rows, |w| threebody::write_scan_csv(&rows, w))?;
                let line: Vec<ThresholdPoint> = values
                    .iter()
                    .map(|&lm| ThresholdPoint {
                        lambda_minus: lm,
                        lambda_plus_cr: lm,
                        method: twobody::Method::AnalyticDeltaShell,
                        residual: 0.0,
                    })
                    .collect();
                run.emit("fig3_delta_shell", &line, |w| write_points_csv(&line, w))?;
                let lp = cfg.solvers.asymptote_lambda_plus;
                let (big, small) = threebody::critical_three_body_lambda_minus(fam, lp, &opts)?;
                let row = [Fig3Asymptotes {
                    lambda_plus: lp,
                    lambda_minus_cr: small,
                    big_lambda_minus_cr: big,
                    ratio: big / small,
                }];
                run.emit("fig3_asymptotes", &row, |w| {
                    writeln!(w, "lambda_plus,lambda_minus_cr,Lambda_minus_cr,ratio")?;
                    writeln!(
                        w,
                        "{},{},{},{}",
                        fmt_value(lp),
                        fmt_value(small),
                        fmt_value(big),
                        fmt_value(big / small)
                    )?;
                    Ok(())
                })?;
            }
        }
        Command::HCurve | Command::Fig1 => {
            cfg.expect_variable(ScanVariable::S)?;
            let res = map_ordered(&values, jobs, |s| Ok(HPoint { s, h: twobody::h_of_s(s)? }))?;
            let rows = run.collect(&values, res)?;
            let stem = if command == Command::Fig1 { "fig1_h" } else { "h_curve" };
            run.emit(stem, &rows, |w| twobody::write_h_csv(&rows, w))?;
            if command == Command::Fig1 {
                let deep = twobody::deep_barrier_k1rs(twobody::Dim::Two)?.powi(2);
                let line: Vec<HPoint> = values.iter().map(|&s| HPoint { s, h: deep }).collect();
                run.emit("fig1_deep_barrier", &line, |w| twobody::write_h_csv(&line, w))?;
            }
        }
        Command::Fig2 => {
            cfg.expect_variable(ScanVariable::LambdaMinus)?;
            let families = [
                ("barrier", Family::SquareWellBarrier { rs: 1.0, rl: 2.0 }),
                ("core", Family::CoreWell { rs: 1.0, rl: 2.0 }),
            ];
            let mut asymptotes = Vec::new();
            for (name, fam) in &families {
                let res = map_ordered(&values, jobs, |lm| twobody::critical_lambda_plus(fam, lm, &two))?;
                let rows = run.collect(&values, res)?;
                run.emit(&format!("fig2_{name}"), &rows, |w| write_points_csv(&rows, w))?;
                asymptotes.push(AsymptoteRow {
                    family: name,
                    lambda_minus_cr: twobody::asymptote_lambda_minus(fam)?,
                });
            }
            run.emit("fig2_asymptotes", &asymptotes, |w| {
                writeln!(w, "family,lambda_minus_cr")?;
                for a in &asymptotes {
                    writeln!(w, "{},{}", a.family, fmt_value(a.lambda_minus_cr))?;
                }
                Ok(())
            })?;
        }
        Command::Fig2a => {
            cfg.expect_variable(ScanVariable::S)?;
            let factors = cfg.solvers.hyperradial;
            let res = map_ordered(&values, jobs, |s| hyperradial::window_estimates_with(&[s], &factors))?;
            let rows: Vec<_> = run.collect(&values, res)?.into_iter().flatten().collect();
            run.emit("fig2a", &rows, |w| hyperradial::write_fig2a_csv(&rows, w))?;
        }
    }
    let uses_svm = matches!(command, Command::ThreeThreshold | Command::WindowScan | Command::Fig3);
    let manifest = ScanManifest {
        command: command.name().into(),
        config_digest: cfg.digest(command),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: if uses_svm { cfg.solvers.svm.seed } else { None },
        jobs,
        points: run.points,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: run.outputs,
    };
    let f = BufWriter::new(File::create(out.join("manifest.json"))?);
    serde_json::to_writer_pretty(f, &manifest).map_err(|e| Error::Io(e.to_string()))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[potential]
family = "SquareWellBarrier"
Rs = 1.0
Rl = 2.0

[scan]
variable = "lambda_minus"
grid = { min = 0.5, max = 2.0, count = 4, spacing = "linear" }
"#;

    #[test]
    fn parses_and_defaults() {
        let cfg = SweepConfig::from_toml_str(BASIC).unwrap();
        assert_eq!(cfg.scan.grid.values().unwrap(), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(cfg.solvers, SolverConfig::default());
        assert_eq!(cfg.output.formats, vec![Format::Csv]);
    }

    #[test]
    fn unknown_keys_and_bad_grids_are_config_errors() {
        let extra = format!("{BASIC}\n[solvers.twobody]\ntol = 1e-9\nfoo = 1\n");
        assert!(matches!(SweepConfig::from_toml_str(&extra), Err(Error::Config(_))));
        let bad = BASIC.replace("min = 0.5, max = 2.0", "min = 2.0, max = 0.5");
        assert!(matches!(SweepConfig::from_toml_str(&bad), Err(Error::Config(_))));
        let unordered = BASIC.replace(
            "grid = { min = 0.5, max = 2.0, count = 4, spacing = \"linear\" }",
            "grid = [1.0, 0.5]",
        );
        assert!(matches!(SweepConfig::from_toml_str(&unordered), Err(Error::Config(_))));
    }

    #[test]
    fn digest_tracks_numeric_fields_only() {
        let a = SweepConfig::from_toml_str(BASIC).unwrap();
        let mut b = a.clone();
        b.output.directory = PathBuf::from("elsewhere");
        assert_eq!(a.digest(Command::TwoThreshold), b.digest(Command::TwoThreshold));
        b.solvers.twobody.tol = 1e-8;
        assert_ne!(a.digest(Command::TwoThreshold), b.digest(Command::TwoThreshold));
        assert_ne!(a.digest(Command::TwoThreshold), a.digest(Command::ThreeThreshold));
    }

    #[test]
    fn seed_required_for_svm() {
        let cfg = SweepConfig::from_toml_str(BASIC).unwrap();
        assert!(matches!(cfg.three_body_options(), Err(Error::Config(_))));
    }

    #[test]
    fn ordered_parallel_map() {
        let xs: Vec<f64> = (0..50).map(f64::from).collect();
        let seq = map_ordered(&xs, 1, |x| Ok(x * x)).unwrap();
        let par = map_ordered(&xs, 4, |x| Ok(x * x)).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn two_threshold_run_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = SweepConfig::from_toml_str(BASIC).unwrap();
        cfg.output.formats = vec![Format::Csv, Format::Json];
        let m = run(Command::TwoThreshold, &cfg, dir.path(), 2).unwrap();
        assert_eq!(m.failed(), 0);
        assert_eq!(m.outputs, vec!["two_threshold.csv", "two_threshold.json"]);
        let csv = std::fs::read_to_string(dir.path().join("two_threshold.csv")).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(dir.path().join("manifest.json").exists());
    }
}
