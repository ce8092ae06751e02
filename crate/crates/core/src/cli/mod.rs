//! Command-line driver: config resolution, computation and artifact output.
//!
//! ```text
//! finite-key-lab <mode> [--config <path>] [--out <dir>] [--seed <u64>] [--svg] [overrides]
//! ```
//!
//! Every run writes `<out>/<mode>.csv` and `<out>/<mode>.meta.json`, plus
//! `<out>/<mode>.svg` for the sweep modes when `--svg` is set. Exit status
//! is 1 for an invalid configuration and 2 for I/O failures.

pub mod config;
pub mod output;
pub mod svg;

use std::path::{Path, PathBuf};

use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::entropy::ProbabilityDistribution;
use crate::jq::{self, CountVector};
use crate::qkd::sweep_qkd;
use crate::qrng::sweep_qrng;
use crate::sampling::{self, SampleWord, SamplingSpec, Strategy};

pub use config::{Mode, Resolved, ResolvedRun, RunConfig};
use config::{parse_count, ChannelConfig, Count, D0Config, D0Name, GridSpec, StatisticsName, TestSizeConfig};
use output::{Cell, Table};

#[derive(Debug, Parser)]
#[command(name = "finite-key-lab", version, about = "Finite-key bounds, rates and their verification")]
pub struct Cli {
    #[arg(value_enum)]
    pub mode: Mode,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: current directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_count)]
    pub seed: Option<u64>,
    /// Also write an SVG chart (sweep and convergence modes).
    #[arg(long)]
    pub svg: bool,

    #[arg(long)]
    pub d: Option<u32>,
    /// Depolarizing parameter Q.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub p_vac: Option<f64>,
    /// Explicit count fractions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    /// Explicit grid values, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_count)]
    pub n_values: Option<Vec<u64>>,
    /// Log-spaced grid as START:STOP:POINTS.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(u64, u64, u64)>,
    /// Test size: a fraction of N below 1, otherwise an absolute count.
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub epsilon_l2: Option<f64>,
    #[arg(long)]
    pub epsilon_prior: Option<f64>,
    #[arg(long)]
    pub ec_efficiency: Option<f64>,
    /// `uniform-mismatch`, `symbol-offset`, or a fixed numeric value.
    #[arg(long, value_parser = parse_d0)]
    pub d0: Option<D0Config>,
    #[arg(long, value_enum)]
    pub statistics: Option<StatisticsName>,
    #[arg(long, value_parser = parse_count)]
    pub n: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Include the exact count (jq-bound).
    #[arg(long, overrides_with = "no_exact")]
    pub exact: bool,
    #[arg(long)]
    pub no_exact: bool,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Option<Strategy>,
    #[arg(long, value_parser = parse_count)]
    pub trials: Option<u64>,
    #[arg(long, value_parser = parse_count)]
    pub states: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub word: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub word_b: Option<Vec<u32>>,
}

fn parse_grid(s: &str) -> Result<(u64, u64, u64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected START:STOP:POINTS, got {s:?}"));
    }
    Ok((parse_count(parts[0])?, parse_count(parts[1])?, parse_count(parts[2])?))
}

fn parse_d0(s: &str) -> Result<D0Config, String> {
    match s {
        "uniform-mismatch" => Ok(D0Config::Named(D0Name::UniformMismatch)),
        "symbol-offset" => Ok(D0Config::Named(D0Name::SymbolOffset)),
        _ => s
            .parse::<f64>()
            .map(D0Config::Value)
            .map_err(|_| format!("unknown d0 model {s:?}")),
    }
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    Strategy::ALL
        .into_iter()
        .find(|st| st.name() == s)
        .ok_or_else(|| format!("unknown strategy {s:?} (psi0, psi1, psi2, psi2plus0)"))
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl Cli {
    /// Loads the config file (if any) and layers the flags on top.
    pub fn merged_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
                RunConfig::parse(&text).map_err(CliError::Config)?
            }
            None => RunConfig::default(),
        };
        self.apply_overrides(&mut cfg);
        Ok(cfg)
    }

    fn apply_overrides(&self, cfg: &mut RunConfig) {
        if let Some(fr) = &self.fractions {
            cfg.channel = Some(ChannelConfig::Explicit { fractions: fr.clone() });
        } else if self.q.is_some() || self.p_vac.is_some() || (self.d.is_some() && is_sweep(self.mode)) {
            let (mut d, mut q, mut p_vac) = match (&cfg.channel, self.mode) {
                (Some(ChannelConfig::Depolarizing { d, q }), _) => (*d, *q, None),
                (Some(ChannelConfig::LossyDepolarizing { d, q, p_vac }), _) => (*d, *q, Some(*p_vac)),
                (_, Mode::QkdSweep) => (4, 0.1, None),
                _ => (4, 0.2, None),
            };
            d = self.d.unwrap_or(d);
            q = self.q.unwrap_or(q);
            // qkd-sweep takes the lossy-curve p_vac from the top level unless
            // the channel itself is lossy
            if self.mode != Mode::QkdSweep || p_vac.is_some() {
                p_vac = self.p_vac.or(p_vac);
            }
            cfg.channel = Some(match p_vac {
                Some(p_vac) => ChannelConfig::LossyDepolarizing { d, q, p_vac },
                None => ChannelConfig::Depolarizing { d, q },
            });
        }
        if self.mode == Mode::QkdSweep && self.p_vac.is_some() {
            cfg.p_vac = self.p_vac;
        }
        if let Some(v) = &self.n_values {
            cfg.grid = Some(GridSpec::List(v.iter().map(|&x| Count(x)).collect()));
        }
        if let Some((start, stop, points)) = self.grid {
            cfg.grid = Some(GridSpec::LogRange {
                start: Count(start),
                stop: Count(stop),
                points: Count(points),
            });
        }
        macro_rules! set {
            ($($field:ident),*) => { $( if self.$field.is_some() { cfg.$field = self.$field.clone(); } )* };
        }
        set!(epsilon, beta, epsilon_l2, epsilon_prior, ec_efficiency, d0, statistics, delta, strategy, d, word, word_b, out);
        if let Some(m) = self.m {
            cfg.m = Some(TestSizeConfig(m));
        }
        if let Some(s) = self.seed {
            cfg.seed = Some(Count(s));
        }
        if let Some(n) = self.n {
            cfg.n = Some(Count(n));
        }
        if let Some(t) = self.trials {
            cfg.trials = Some(Count(t));
        }
        if let Some(t) = self.states {
            cfg.states = Some(Count(t));
        }
        if self.svg {
            cfg.svg = Some(true);
        }
        if self.exact {
            cfg.exact = Some(true);
        }
        if self.no_exact {
            cfg.exact = Some(false);
        }
    }
}

fn is_sweep(mode: Mode) -> bool {
    matches!(mode, Mode::QrngSweep | Mode::QkdSweep)
}

/// Everything a run produces, before it touches the filesystem.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub mode: Mode,
    pub csv: String,
    pub meta: String,
    pub svg: Option<String>,
    pub summary: Vec<String>,
}

/// Computes the artifacts of a resolved run.
pub fn execute(run: &ResolvedRun) -> Result<Artifacts, CliError> {
    let err = |e: crate::Error| CliError::Config(e.to_string());
    let (mode, table, summary, chart) = match &run.body {
        Resolved::QrngSweep(r) => {
            let model = r.channel.build().map_err(err)?;
            let rows = sweep_qrng(&model, &r.n_values, &r.template).map_err(err)?;
            let mut t = Table::new([
                "N", "n", "m", "delta", "delta_prime", "d0", "ell_ours", "ell_l1", "ell_l2", "rate_ours", "rate_l1",
                "rate_l2",
            ]);
            for row in &rows {
                t.push(vec![
                    row.total.into(),
                    row.n.into(),
                    row.m.into(),
                    row.delta.into(),
                    row.delta_prime.into(),
                    row.d0.into(),
                    row.ell_ours.into(),
                    row.ell_l1.into(),
                    row.ell_l2.into(),
                    row.rate_ours.into(),
                    row.rate_l1.into(),
                    row.rate_l2.into(),
                ]);
            }
            let summary = vec![format!("{} rows", rows.len())];
            (Mode::QrngSweep, t, summary, Some(("QRNG bit rates", "N", "rate (bits/signal)", "N", vec!["rate_ours", "rate_l1", "rate_l2"])))
        }
        Resolved::QkdSweep(r) => {
            let model = r.channel.build().map_err(err)?;
            let rows = sweep_qkd(&model, &r.n_values, &r.template).map_err(err)?;
            let mut t = Table::new([
                "N", "n", "m", "delta", "nu", "p_vac", "ell_ours", "ell_prior", "ell_ours_lossy", "rate_ours",
                "rate_prior", "rate_asym", "rate_ours_lossy",
            ]);
            for row in &rows {
                t.push(vec![
                    row.total.into(),
                    row.n.into(),
                    row.m.into(),
                    row.delta.into(),
                    row.nu.into(),
                    row.p_vac.into(),
                    row.ell_ours.into(),
                    row.ell_prior.into(),
                    row.ell_ours_lossy.into(),
                    row.rate_ours.into(),
                    row.rate_prior.into(),
                    row.rate_asym.into(),
                    row.rate_ours_lossy.into(),
                ]);
            }
            let summary = vec![format!("{} rows", rows.len())];
            (
                Mode::QkdSweep,
                t,
                summary,
                Some(("HD-BB84 key rates", "N", "rate (bits/signal)", "N", vec!["rate_ours", "rate_prior", "rate_asym", "rate_ours_lossy"])),
            )
        }
        Resolved::JqBound(r) => {
            let c = CountVector::new(r.fractions.clone(), None).map_err(err)?;
            let report = if r.exact {
                jq::log_jq_bound_with_exact(&c, r.n, r.delta)
            } else {
                jq::log_jq_bound(&c, r.n, r.delta)
            }
            .map_err(err)?;
            let count = if r.exact { jq::jq_exact_count(&c, r.n, r.delta).map_err(err)? } else { None };
            let mut cols: Vec<String> = ["n", "d", "delta", "log_f", "log_g", "log_min", "log_exact", "exact_count", "exact_le_min"]
                .map(String::from)
                .to_vec();
            cols.extend((0..c.d()).map(|i| format!("nu_{i}")));
            let mut t = Table::new(cols);
            let holds = report.log_exact.map(|e| e <= report.log_min + 1e-9);
            let mut row: Vec<Cell> = vec![
                r.n.into(),
                u64::from(c.d()).into(),
                r.delta.into(),
                report.log_f.into(),
                report.log_g.into(),
                report.log_min.into(),
                report.log_exact.into(),
                count.map_or(Cell::Empty, |v| Cell::Text(v.to_string())),
                holds.map_or(Cell::Empty, Cell::Bool),
            ];
            row.extend(report.nu.iter().map(|&v| Cell::Float(v)));
            t.push(row);
            let summary = vec![match holds {
                Some(true) => "exact log2|J_q| <= min(F, G): ok".to_string(),
                Some(false) => "exact log2|J_q| exceeds min(F, G)".to_string(),
                None => format!("log2|J_q| <= {}", output::format_float(report.log_min)),
            }];
            (Mode::JqBound, t, summary, None)
        }
        Resolved::SampleVerify(r) => sample_verify(r, run.seed)?,
        Resolved::MuDemo(r) => {
            let mut t = Table::new(["state", "kind", "d", "h_z", "h_x", "sum", "gamma", "slack"]);
            let d = r.d as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
            let mut min_slack = f64::INFINITY;
            let mut basis_dev: f64 = 0.0;
            let total = d as u64 + r.states;
            for i in 0..total {
                let (kind, state) = if (i as usize) < d {
                    ("basis", jq::basis_state(d, i as usize))
                } else {
                    ("random", jq::random_state(d, &mut rng))
                };
                let demo = jq::maassen_uffink_demo(&state).map_err(err)?;
                let slack = demo.sum() - demo.gamma;
                if kind == "basis" {
                    basis_dev = basis_dev.max(slack.abs());
                }
                min_slack = min_slack.min(slack);
                t.push(vec![
                    i.into(),
                    Cell::Text(kind.into()),
                    u64::from(r.d).into(),
                    demo.h_z.into(),
                    demo.h_x.into(),
                    demo.sum().into(),
                    demo.gamma.into(),
                    slack.into(),
                ]);
            }
            let summary = vec![
                format!("min(H_Z + H_X - log2 d) = {}", output::format_float(min_slack)),
                format!("max basis-state deviation = {}", output::format_float(basis_dev)),
            ];
            (Mode::MuDemo, t, summary, None)
        }
        Resolved::Convergence(r) => {
            let p = ProbabilityDistribution::new(r.fractions.clone()).map_err(err)?;
            let rows = jq::convergence_report(&p, &r.n_values, r.epsilon).map_err(err)?;
            let mut t = Table::new(["n", "delta", "f_per_n", "g_per_n", "shannon", "ratio"]);
            for row in &rows {
                t.push(vec![
                    row.n.into(),
                    row.delta.into(),
                    row.f_per_n.into(),
                    row.g_per_n.into(),
                    row.shannon.into(),
                    row.ratio.into(),
                ]);
            }
            let summary = vec![format!("{} rows", rows.len())];
            (Mode::Convergence, t, summary, Some(("Bound convergence", "n", "bits per symbol", "n", vec!["f_per_n", "g_per_n", "shannon"])))
        }
    };

    let resolved_json = serde_json::to_string(run).expect("resolved config serializes");
    let header = vec![
        format!("finite-key-lab {} {}", run.version, mode.name()),
        format!("seed: {}", run.seed),
        format!("config: {resolved_json}"),
    ];
    let csv = table.to_csv(&header);
    let meta = serde_json::to_string_pretty(&json!({
        "tool": "finite-key-lab",
        "version": run.version,
        "mode": mode.name(),
        "seed": run.seed,
        "config": run,
        "columns": table.columns,
        "rows": table.rows.len(),
        "summary": summary,
    }))
    .expect("metadata serializes")
        + "\n";
    let svg = match (run.svg, chart) {
        (true, Some((title, x_label, y_label, x_col, series))) => Some(chart_from_table(&table, title, x_label, y_label, x_col, &series)),
        _ => None,
    };
    Ok(Artifacts {
        mode,
        csv,
        meta,
        svg,
        summary,
    })
}

fn chart_from_table(table: &Table, title: &str, x_label: &str, y_label: &str, x_col: &str, series: &[&str]) -> String {
    let column = |name: &str| -> Vec<f64> {
        let i = table.column(name).expect("chart column exists");
        table.rows.iter().map(|r| r[i].as_f64().unwrap_or(f64::NAN)).collect()
    };
    let x = column(x_col);
    let series: Vec<svg::Series> = series.iter().map(|&name| svg::Series { name, values: column(name) }).collect();
    svg::line_chart(title, x_label, y_label, &x, &series)
}

fn word_text(w: &[u32], d: u32) -> String {
    if d <= 10 {
        w.iter().map(|s| char::from_digit(*s, 10).unwrap()).collect()
    } else {
        w.iter().map(u32::to_string).collect::<Vec<_>>().join(".")
    }
}

type ModeOutput = (Mode, Table, Vec<String>, Option<(&'static str, &'static str, &'static str, &'static str, Vec<&'static str>)>);

fn sample_verify(r: &config::SampleResolved, seed: u64) -> Result<ModeOutput, CliError> {
    let err = |e: crate::Error| CliError::Config(e.to_string());
    let spec = SamplingSpec::new(r.strategy, r.n, r.m, r.d, r.delta).map_err(err)?;
    let words = match (&r.word, &r.word_b) {
        (Some(a), Some(b)) => vec![SampleWord::Pair(a.clone(), b.clone())],
        (Some(a), None) => vec![SampleWord::Single(a.clone())],
        _ => sampling::count_class_representatives(&spec),
    };
    let bound = sampling::epsilon_cl(&spec).map_err(err)?;
    let mut t = Table::new([
        "class", "word_a", "word_b", "analytic_bound", "exact", "empirical", "std_error", "sigma_exact", "bound_holds",
        "within_3sigma",
    ]);
    let (mut bound_fail, mut mc_fail) = (0u64, 0u64);
    for (i, word) in words.iter().enumerate() {
        let exact = sampling::exact_failure_probability(word, &spec).map_err(err)?;
        let est = sampling::empirical_failure_probability(word, &spec, r.trials, seed.wrapping_add(i as u64)).map_err(err)?;
        let emp = est.empirical.unwrap_or(f64::NAN);
        let sigma = (exact * (1.0 - exact) / r.trials as f64).sqrt();
        let holds = exact <= bound;
        let within = (emp - exact).abs() <= 3.0 * sigma;
        bound_fail += u64::from(!holds);
        mc_fail += u64::from(!within);
        let (a, b) = match word {
            SampleWord::Single(a) => (word_text(a, r.d), String::new()),
            SampleWord::Pair(a, b) => (word_text(a, r.d), word_text(b, r.d)),
        };
        t.push(vec![
            (i as u64).into(),
            a.into(),
            b.into(),
            bound.into(),
            exact.into(),
            emp.into(),
            est.std_error.into(),
            sigma.into(),
            holds.into(),
            within.into(),
        ]);
    }
    let summary = vec![
        format!("{} words checked", words.len()),
        format!("exact > analytic bound: {bound_fail}"),
        format!("Monte Carlo outside 3 sigma: {mc_fail}"),
    ];
    Ok((Mode::SampleVerify, t, summary, None))
}

/// Writes the artifacts into `dir`, creating it if needed.
pub fn write_artifacts(artifacts: &Artifacts, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let io = |p: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let name = artifacts.mode.name();
    let mut written = Vec::new();
    let mut put = |file: String, body: &str| -> Result<(), CliError> {
        let path = dir.join(file);
        std::fs::write(&path, body).map_err(|e| io(&path, e))?;
        written.push(path);
        Ok(())
    };
    put(format!("{name}.csv"), &artifacts.csv)?;
    put(format!("{name}.meta.json"), &artifacts.meta)?;
    if let Some(svg) = &artifacts.svg {
        put(format!("{name}.svg"), svg)?;
    }
    Ok(written)
}

/// Full run for already-parsed arguments.
pub fn run(cli: &Cli) -> Result<Artifacts, CliError> {
    let cfg = cli.merged_config()?;
    let resolved = cfg.resolve(cli.mode).map_err(CliError::Config)?;
    if resolved.svg && !matches!(cli.mode, Mode::QrngSweep | Mode::QkdSweep | Mode::Convergence) {
        eprintln!("note: no chart for mode {}", cli.mode.name());
    }
    let artifacts = execute(&resolved)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    for path in write_artifacts(&artifacts, &dir)? {
        println!("wrote {}", path.display());
    }
    for line in &artifacts.summary {
        println!("{line}");
    }
    Ok(artifacts)
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
