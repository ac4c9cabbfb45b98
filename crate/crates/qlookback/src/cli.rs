//! Configuration files, subcommands and artifact output.
//!
//! Configurations are sectioned key-value text (`[section]`, `key = value`,
//! `#` comments). Unknown sections or keys are rejected with the offending
//! line number. Command-line overrides mirror the config keys as
//! `--section.key value` (or `--set section.key=value`), and every run
//! writes its fully resolved configuration beside the outputs; artifacts
//! embed the FNV-1a hash of that resolved text.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::market::{MarketParams, MonitoringSchedule, SpatialGrid};
use crate::operators::{assemble_m2_segment, build_hc, build_hj};
use crate::oracles::{fd_solve, mc_price, FdScheme, McConfig, PriceCurve};
use crate::pauli::{decompose, mean_term_count, PauliSum};
use crate::pipeline::{
    fit_initial_params, required_qubits, run, AnsatzSpec, Engine, FitOptions, Method, RunSpec,
    ShotMode,
};
use crate::qsim::{build_ansatz, encode_state, overlap_sampled};

/// Environment variable naming the output root; the configured output
/// directory is created beneath it.
pub const OUTPUT_ROOT_ENV: &str = "QLOOKBACK_OUT";

/// Audit targets for the operator term counts (4 computational qubits).
pub const REFERENCE_COUNT_HC: usize = 208;
pub const REFERENCE_COUNT_HJ: usize = 192;
pub const REFERENCE_COUNT_M2_T2: f64 = 456.0;
pub const REFERENCE_COUNT_M2_T4: f64 = 2180.0;

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct Config {
    // [market]
    pub rate: f64,
    pub sigma: f64,
    pub spot: f64,
    pub maturity_years: u32,
    // [schedule]
    pub intervals: Option<usize>,
    // [grid]
    pub grid_n: usize,
    pub z_max: f64,
    // [run]
    pub method: Method,
    pub engine: Engine,
    pub ansatz_params: usize,
    pub dt: f64,
    pub h: f64,
    pub shots: ShotMode,
    pub seed: u64,
    pub refit_segments: bool,
    pub track_oracle: bool,
    // [fit]
    pub fit: FitOptions,
    // [mc]
    pub mc_paths: u64,
    pub mc_seed: u64,
    pub mc_steps_per_interval: u32,
    pub mc_antithetic: bool,
    pub mc_include_final_fixing: bool,
    // [benchmark]
    pub benchmark_engines: Vec<String>,
    // [pauli]
    pub prune: f64,
    // [output]
    pub out_dir: String,
    pub verbosity: u8,
    /// Keys that were set explicitly (section.key).
    explicit: BTreeSet<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            rate: 0.05,
            sigma: 0.2,
            spot: 100.0,
            maturity_years: 2,
            intervals: None,
            grid_n: 16,
            z_max: crate::market::DEFAULT_Z_MAX,
            method: Method::M2,
            engine: Engine::Expm,
            ansatz_params: 100,
            dt: 0.01,
            h: crate::operators::DEFAULT_JUMP_WINDOW,
            shots: ShotMode::Exact,
            seed: 7,
            refit_segments: false,
            track_oracle: false,
            fit: FitOptions::default(),
            mc_paths: 1_000_000,
            mc_seed: 99,
            mc_steps_per_interval: 1,
            mc_antithetic: true,
            mc_include_final_fixing: true,
            benchmark_engines: vec!["expm-m1".into(), "expm-m2".into()],
            prune: crate::pauli::DEFAULT_PRUNE_THRESHOLD,
            out_dir: "out".into(),
            verbosity: 1,
            explicit: BTreeSet::new(),
        }
    }
}

fn parse_value<T: std::str::FromStr>(value: &str, line: usize, what: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Config {
        line,
        message: format!("cannot parse {what} from '{value}'"),
    })
}

impl Config {
    /// Parse sectioned key-value text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Config::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(Error::Config {
                    line: line_no,
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Config {
                line: line_no,
                message: "expected 'key = value'".into(),
            })?;
            config.set(&section, key.trim(), value.trim(), line_no)?;
        }
        Ok(config)
    }

    pub fn was_set(&self, path: &str) -> bool {
        self.explicit.contains(path)
    }

    /// Apply one `section.key = value` assignment.
    pub fn set(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<()> {
        let path = format!("{section}.{key}");
        match path.as_str() {
            "market.r" => self.rate = parse_value(value, line, "market.r")?,
            "market.sigma" => self.sigma = parse_value(value, line, "market.sigma")?,
            "market.s0" => self.spot = parse_value(value, line, "market.s0")?,
            "market.t" => self.maturity_years = parse_value(value, line, "market.t")?,
            "schedule.intervals" => {
                self.intervals = Some(parse_value(value, line, "schedule.intervals")?)
            }
            "grid.n" => self.grid_n = parse_value(value, line, "grid.n")?,
            "grid.z_max" => self.z_max = parse_value(value, line, "grid.z_max")?,
            "run.method" => {
                self.method = match value {
                    "m1" => Method::M1,
                    "m2" => Method::M2,
                    other => {
                        return Err(Error::Config {
                            line,
                            message: format!("run.method must be m1 or m2, got '{other}'"),
                        })
                    }
                }
            }
            "run.engine" => {
                self.engine = match value {
                    "expm" => Engine::Expm,
                    "varqite" => Engine::Varqite,
                    other => {
                        return Err(Error::Config {
                            line,
                            message: format!("run.engine must be expm or varqite, got '{other}'"),
                        })
                    }
                }
            }
            "run.ansatz_params" => {
                self.ansatz_params = parse_value(value, line, "run.ansatz_params")?
            }
            "run.dt" => self.dt = parse_value(value, line, "run.dt")?,
            "run.h" => self.h = parse_value(value, line, "run.h")?,
            "run.shots" => {
                self.shots = if value == "exact" {
                    ShotMode::Exact
                } else {
                    ShotMode::Shots(parse_value(value, line, "run.shots")?)
                }
            }
            "run.seed" => self.seed = parse_value(value, line, "run.seed")?,
            "run.refit_segments" => {
                self.refit_segments = parse_value(value, line, "run.refit_segments")?
            }
            "run.track_oracle" => {
                self.track_oracle = parse_value(value, line, "run.track_oracle")?
            }
            "fit.threshold" => self.fit.threshold = parse_value(value, line, "fit.threshold")?,
            "fit.max_restarts" => {
                self.fit.max_restarts = parse_value(value, line, "fit.max_restarts")?
            }
            "fit.max_iters" => self.fit.max_iters = parse_value(value, line, "fit.max_iters")?,
            "fit.seed" => self.fit.seed = parse_value(value, line, "fit.seed")?,
            "mc.paths" => self.mc_paths = parse_value(value, line, "mc.paths")?,
            "mc.seed" => self.mc_seed = parse_value(value, line, "mc.seed")?,
            "mc.steps_per_interval" => {
                self.mc_steps_per_interval = parse_value(value, line, "mc.steps_per_interval")?
            }
            "mc.antithetic" => self.mc_antithetic = parse_value(value, line, "mc.antithetic")?,
            "mc.include_final_fixing" => {
                self.mc_include_final_fixing =
                    parse_value(value, line, "mc.include_final_fixing")?
            }
            "benchmark.engines" => {
                self.benchmark_engines =
                    value.split(',').map(|s| s.trim().to_string()).collect()
            }
            "pauli.prune" => self.prune = parse_value(value, line, "pauli.prune")?,
            "output.dir" => self.out_dir = value.to_string(),
            "output.verbosity" => self.verbosity = parse_value(value, line, "output.verbosity")?,
            _ => {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key '{path}'"),
                })
            }
        }
        self.explicit.insert(path);
        Ok(())
    }

    /// Canonical resolved text: every key, fixed order.
    pub fn resolved_text(&self) -> String {
        let mut s = self.numerical_text();
        let _ = write!(
            s,
            "\n[output]\ndir = {}\nverbosity = {}\n",
            self.out_dir, self.verbosity
        );
        s
    }

    /// The sections that determine results (everything except `[output]`);
    /// this is what the artifact hash covers, so relocating outputs does
    /// not change their embedded identity.
    pub fn numerical_text(&self) -> String {
        let mut s = String::new();
        let shots = match self.shots {
            ShotMode::Exact => "exact".to_string(),
            ShotMode::Shots(k) => k.to_string(),
        };
        let method = match self.method {
            Method::M1 => "m1",
            Method::M2 => "m2",
        };
        let engine = match self.engine {
            Engine::Expm => "expm",
            Engine::Varqite => "varqite",
        };
        let _ = write!(
            s,
            "[market]\nr = {}\nsigma = {}\ns0 = {}\nt = {}\n\n\
             [schedule]\nintervals = {}\n\n\
             [grid]\nn = {}\nz_max = {}\n\n\
             [run]\nmethod = {}\nengine = {}\nansatz_params = {}\ndt = {}\nh = {}\n\
             shots = {}\nseed = {}\nrefit_segments = {}\ntrack_oracle = {}\n\n\
             [fit]\nthreshold = {}\nmax_restarts = {}\nmax_iters = {}\nseed = {}\n\n\
             [mc]\npaths = {}\nseed = {}\nsteps_per_interval = {}\nantithetic = {}\n\
             include_final_fixing = {}\n\n\
             [benchmark]\nengines = {}\n\n\
             [pauli]\nprune = {}\n",
            self.rate,
            self.sigma,
            self.spot,
            self.maturity_years,
            self.intervals.unwrap_or(self.maturity_years as usize),
            self.grid_n,
            self.z_max,
            method,
            engine,
            self.ansatz_params,
            self.dt,
            self.h,
            shots,
            self.seed,
            self.refit_segments,
            self.track_oracle,
            self.fit.threshold,
            self.fit.max_restarts,
            self.fit.max_iters,
            self.fit.seed,
            self.mc_paths,
            self.mc_seed,
            self.mc_steps_per_interval,
            self.mc_antithetic,
            self.mc_include_final_fixing,
            self.benchmark_engines.join(","),
            self.prune,
        );
        s
    }

    /// FNV-1a hash of the numerical sections, hex-encoded.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.numerical_text().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        format!("{h:016x}")
    }

    pub fn market_params(&self) -> Result<MarketParams> {
        MarketParams::new(self.rate, self.sigma, self.spot, self.maturity_years)
    }

    pub fn schedule(&self) -> Result<MonitoringSchedule> {
        let params = self.market_params()?;
        match self.intervals {
            Some(n) => MonitoringSchedule::uniform(n, params.maturity()),
            None => MonitoringSchedule::annual(&params),
        }
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.grid_n, self.z_max)
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            paths: self.mc_paths,
            seed: self.mc_seed,
            steps_per_interval: self.mc_steps_per_interval,
            antithetic: self.mc_antithetic,
            include_final_fixing: self.mc_include_final_fixing,
        }
    }

    pub fn run_spec(&self) -> Result<RunSpec> {
        let params = self.market_params()?;
        let schedule = self.schedule()?;
        let grid = self.grid()?;
        let qubits = required_qubits(self.method, &grid, &schedule)?;
        Ok(RunSpec {
            method: self.method,
            engine: self.engine,
            params,
            schedule,
            grid,
            ansatz: AnsatzSpec {
                qubits,
                params: self.ansatz_params,
            },
            dt: self.dt,
            h: self.h,
            shots: self.shots,
            seed: self.seed,
            refit_segments: self.refit_segments,
            track_oracle: self.track_oracle,
            fit: self.fit,
        })
    }

    /// Output directory under the configured root.
    pub fn out_path(&self) -> PathBuf {
        match std::env::var(OUTPUT_ROOT_ENV) {
            Ok(root) if !root.is_empty() => Path::new(&root).join(&self.out_dir),
            _ => PathBuf::from(&self.out_dir),
        }
    }
}

/// Parsed command line: subcommand plus resolved config.
struct Invocation {
    command: String,
    config: Config,
}

fn parse_args(args: &[String]) -> Result<Invocation> {
    let command = args
        .first()
        .ok_or_else(|| Error::ConfigValue(usage()))?
        .clone();
    let mut config: Option<Config> = None;
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut i = 1;
    while i < args.len() {
        let arg = &args[i];
        let take_value = |i: &mut usize| -> Result<String> {
            *i += 1;
            args.get(*i)
                .cloned()
                .ok_or_else(|| Error::ConfigValue(format!("flag '{arg}' needs a value")))
        };
        if arg == "--config" {
            let path = take_value(&mut i)?;
            let text = std::fs::read_to_string(&path)?;
            config = Some(Config::parse(&text)?);
        } else if arg == "--set" {
            let kv = take_value(&mut i)?;
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::ConfigValue(format!("--set expects key=value, got '{kv}'")))?;
            overrides.push((k.to_string(), v.to_string()));
        } else if arg == "--out" {
            let dir = take_value(&mut i)?;
            overrides.push(("output.dir".into(), dir));
        } else if let Some(rest) = arg.strip_prefix("--") {
            if !rest.contains('.') {
                return Err(Error::ConfigValue(format!("unknown flag '{arg}'\n{}", usage())));
            }
            let (k, v) = match rest.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => (rest.to_string(), take_value(&mut i)?),
            };
            overrides.push((k, v));
        } else {
            return Err(Error::ConfigValue(format!(
                "unexpected argument '{arg}'\n{}",
                usage()
            )));
        }
        i += 1;
    }
    let mut config = config.unwrap_or_default();
    for (k, v) in overrides {
        let (section, key) = k
            .split_once('.')
            .ok_or_else(|| Error::ConfigValue(format!("override key '{k}' needs a section")))?;
        config.set(section, key, &v, 0).map_err(|e| match e {
            Error::Config { message, .. } => {
                Error::ConfigValue(format!("in override '--{k}': {message}"))
            }
            other => other,
        })?;
    }
    Ok(Invocation { command, config })
}

fn usage() -> String {
    "usage: qlookback <price|benchmark|pauli-audit|fit-ansatz> \
     [--config FILE] [--set section.key=value] [--section.key value] [--out DIR]"
        .to_string()
}

/// Run the CLI; returns the process exit code.
pub fn run_cli(args: &[String]) -> i32 {
    let invocation = match parse_args(args) {
        Ok(inv) => inv,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let result = match invocation.command.as_str() {
        "price" => cmd_price(&invocation.config),
        "benchmark" => cmd_benchmark(&invocation.config),
        "pauli-audit" => cmd_pauli_audit(&invocation.config),
        "fit-ansatz" => cmd_fit_ansatz(&invocation.config),
        other => {
            eprintln!("error: unknown subcommand '{other}'\n{}", usage());
            return 2;
        }
    };
    match result {
        Ok(()) => 0,
        Err(e @ (Error::Config { .. } | Error::ConfigValue(_) | Error::InvalidRunSpec(_))) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn write_artifact(dir: &Path, name: &str, hash: &str, body: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let content = if name.ends_with(".csv") || name.ends_with(".txt") {
        format!("# config_hash={hash}\n{body}")
    } else {
        body.to_string()
    };
    std::fs::write(&path, content)?;
    Ok(path)
}

fn write_resolved_config(config: &Config, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("resolved.config"), config.resolved_text())?;
    Ok(())
}

/// `price`: one pricing run, curve CSV plus JSON manifest.
pub fn cmd_price(config: &Config) -> Result<()> {
    let spec = config.run_spec()?;
    spec.validate()?;
    let dir = config.out_path();
    let hash = config.hash();
    write_resolved_config(config, &dir)?;
    let output = run(&spec)?;
    let stem = format!(
        "price_{}_{}",
        match spec.method {
            Method::M1 => "m1",
            Method::M2 => "m2",
        },
        match spec.engine {
            Engine::Expm => "expm",
            Engine::Varqite => "varqite",
        }
    );
    let csv = write_artifact(&dir, &format!("{stem}.csv"), &hash, &output.curve.to_csv())?;
    if !output.step_log.is_empty() {
        write_artifact(
            &dir,
            &format!("{stem}_steps.csv"),
            &hash,
            &crate::varqite::diagnostics_csv(&output.step_log),
        )?;
    }
    let manifest = serde_json::json!({
        "config_hash": hash,
        "version": {
            "package": env!("CARGO_PKG_VERSION"),
            "git": env!("QLOOKBACK_GIT_DESCRIBE"),
        },
        "manifest": output.manifest,
        "curve": output.curve,
    });
    write_artifact(
        &dir,
        &format!("{stem}.json"),
        &hash,
        &serde_json::to_string_pretty(&manifest)?,
    )?;
    if config.verbosity > 0 {
        println!("wrote {}", csv.display());
        let anchor = output.curve.values[0];
        println!(
            "u(T, 0) = {anchor:.6}; {} grid points; config {hash}",
            output.curve.zs.len()
        );
    }
    Ok(())
}

fn benchmark_engine_curve(name: &str, config: &Config) -> Result<PriceCurve> {
    let mut spec = config.run_spec()?;
    let (method, engine) = match name {
        "expm-m1" => (Method::M1, Engine::Expm),
        "expm-m2" => (Method::M2, Engine::Expm),
        "varqite-m1" => (Method::M1, Engine::Varqite),
        "varqite-m2" => (Method::M2, Engine::Varqite),
        other => {
            return Err(Error::ConfigValue(format!(
                "unknown benchmark engine '{other}' \
                 (expected expm-m1, expm-m2, varqite-m1, varqite-m2)"
            )))
        }
    };
    spec.method = method;
    spec.engine = engine;
    spec.ansatz.qubits = required_qubits(method, &spec.grid, &spec.schedule)?;
    Ok(run(&spec)?.curve)
}

/// `benchmark`: requested engines plus the finite-difference and Monte
/// Carlo references on one grid; wide CSV and a deviation summary.
pub fn cmd_benchmark(config: &Config) -> Result<()> {
    for key in ["market.r", "market.sigma"] {
        if !config.was_set(key) {
            return Err(Error::ConfigValue(format!(
                "benchmark runs require '{key}' to be set explicitly \
                 (the built-in defaults are artifact conventions, not calibrated values)"
            )));
        }
    }
    if config.mc_paths < 10_000 {
        return Err(Error::ConfigValue(format!(
            "benchmark mode needs mc.paths >= 10000, got {}",
            config.mc_paths
        )));
    }
    let dir = config.out_path();
    let hash = config.hash();
    write_resolved_config(config, &dir)?;

    let params = config.market_params()?;
    let schedule = config.schedule()?;
    let grid = config.grid()?;
    let mut columns: Vec<PriceCurve> = Vec::new();
    for name in &config.benchmark_engines {
        columns.push(benchmark_engine_curve(name, config)?);
    }
    let fd_dt = config.dt.min(1e-3);
    columns.push(fd_solve(&params, &schedule, &grid, fd_dt, FdScheme::Implicit)?);
    let mc = mc_price(&params, &schedule, &config.mc_config(), grid.points())?;

    // Wide CSV: z, one column per engine, then the MC mean and stderr.
    let mut csv = String::from("z");
    for c in &columns {
        let _ = write!(csv, ",{}", c.provenance);
    }
    csv.push_str(",mc,mc_stderr\n");
    let stderr = mc.stderr.as_ref().expect("mc curves carry stderr");
    for (i, &z) in grid.points().iter().enumerate() {
        let _ = write!(csv, "{z:.17e}");
        for c in &columns {
            let _ = write!(csv, ",{:.17e}", c.values[i]);
        }
        let _ = writeln!(csv, ",{:.17e},{:.17e}", mc.values[i], stderr[i]);
    }
    write_artifact(&dir, "benchmark.csv", &hash, &csv)?;

    // Summary: pairwise max deviations and the 3σ band verdict at the
    // canonical probe points.
    let mut summary = String::from("pair,max_abs_deviation\n");
    let mut all: Vec<&PriceCurve> = columns.iter().collect();
    all.push(&mc);
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let _ = writeln!(
                summary,
                "{}|{},{:.6e}",
                all[i].provenance,
                all[j].provenance,
                all[i].max_abs_deviation(all[j])
            );
        }
    }
    summary.push_str("column,probe_z,deviation,band_3sigma,within\n");
    for c in &columns {
        for &z in &[0.5, 1.0, 1.5] {
            let (Some(v), Some(m)) = (c.value_at(z), mc.value_at(z)) else {
                continue;
            };
            let idx = grid.points().iter().position(|&p| (p - z).abs() < 1e-12);
            let band = idx.map(|i| 3.0 * stderr[i]).unwrap_or(f64::NAN);
            let dev = (v - m).abs();
            let _ = writeln!(
                summary,
                "{},{z},{dev:.6e},{band:.6e},{}",
                c.provenance,
                dev <= band
            );
        }
    }
    write_artifact(&dir, "benchmark_summary.csv", &hash, &summary)?;
    if config.verbosity > 0 {
        println!("wrote {}", dir.join("benchmark.csv").display());
        print!("{summary}");
    }
    Ok(())
}

/// Measured term counts for the audit.
#[derive(Debug, Clone)]
pub struct PauliAudit {
    pub hc_terms: usize,
    pub hj_terms: usize,
    pub m2_mean_t2: f64,
    pub m2_mean_t4: f64,
    pub hc_sum: PauliSum,
    pub hj_sum: PauliSum,
}

/// Decompose the continuous and jump operators on the 4-computational-
/// qubit grid plus every stacked segment operator for maturities 2 and 4.
pub fn pauli_audit(config: &Config) -> Result<PauliAudit> {
    let grid = SpatialGrid::new(16, config.z_max)?;
    let base = config.market_params()?;
    let hc = build_hc(&grid, &base)?;
    let hj = build_hj(&grid, &base, config.h)?;
    let hc_sum = decompose(&hc.hamiltonian(), config.prune);
    let hj_sum = decompose(&hj.hamiltonian(), config.prune);
    let mut means = [0.0; 2];
    for (slot, t) in [(0usize, 2u32), (1, 4)] {
        let params = MarketParams::new(base.rate, base.sigma, base.spot, t)?;
        let schedule = MonitoringSchedule::annual(&params)?;
        let sums: Vec<PauliSum> = (0..schedule.num_intervals())
            .map(|j| {
                assemble_m2_segment(j, &grid, &params, &schedule)
                    .map(|op| decompose(&op.hamiltonian(), config.prune))
            })
            .collect::<Result<_>>()?;
        means[slot] = mean_term_count(&sums);
    }
    Ok(PauliAudit {
        hc_terms: hc_sum.term_count(),
        hj_terms: hj_sum.term_count(),
        m2_mean_t2: means[0],
        m2_mean_t4: means[1],
        hc_sum,
        hj_sum,
    })
}

/// Count invariance sweep over market parameters; returns the distinct
/// (hc, hj, m2-t2-mean) triples observed.
pub fn pauli_count_sweep(config: &Config) -> Result<Vec<(usize, usize, f64)>> {
    let mut seen = Vec::new();
    for &(r, sigma) in &[(0.05, 0.2), (0.01, 0.35), (0.08, 0.15), (0.03, 0.5)] {
        let mut c = config.clone();
        c.rate = r;
        c.sigma = sigma;
        let audit = pauli_audit(&c)?;
        let triple = (audit.hc_terms, audit.hj_terms, audit.m2_mean_t2);
        if !seen.contains(&triple) {
            seen.push(triple);
        }
    }
    Ok(seen)
}

/// `pauli-audit`: term-count report against the embedded reference
/// counts, with term exports and an invariance sweep.
pub fn cmd_pauli_audit(config: &Config) -> Result<()> {
    let dir = config.out_path();
    let hash = config.hash();
    write_resolved_config(config, &dir)?;
    let audit = pauli_audit(config)?;
    let sweep = pauli_count_sweep(config)?;

    let mut report = String::new();
    let _ = writeln!(report, "operator,measured,target,match");
    let rows = [
        ("hc", audit.hc_terms as f64, REFERENCE_COUNT_HC as f64),
        ("hj", audit.hj_terms as f64, REFERENCE_COUNT_HJ as f64),
        ("m2-mean-t2", audit.m2_mean_t2, REFERENCE_COUNT_M2_T2),
        ("m2-mean-t4", audit.m2_mean_t4, REFERENCE_COUNT_M2_T4),
    ];
    for (name, measured, target) in rows {
        let _ = writeln!(report, "{name},{measured},{target},{}", measured == target);
    }
    let _ = writeln!(report);
    let _ = writeln!(report, "invariance sweep over (r, sigma): {} distinct count triples", sweep.len());
    for (hc, hj, m2) in &sweep {
        let _ = writeln!(report, "  hc={hc} hj={hj} m2-mean-t2={m2}");
    }
    let _ = writeln!(report);
    let _ = writeln!(
        report,
        "deviation analysis: counts depend only on the sparsity pattern for generic\n\
         coefficients (term count = 16 x number of distinct row-XOR-column masks on\n\
         4 qubits). The continuous operator has 6 masks (94 terms after two\n\
         structural cancellations); the jump operator has 13 masks (208 terms, the\n\
         value the reference lists for the continuous operator); dropping or merging\n\
         the jump operator's west column gives 12 masks (192 terms, the value the\n\
         reference lists for the jump operator). The stacked-segment means match the\n\
         reference exactly, so the grid, pin index and block layout agree; the two\n\
         single-operator reference rows do not correspond to the operators as\n\
         specified. Counts are invariant over the sweep above; the only sensitive\n\
         parameter found is the degenerate r = 0, which removes the rate mask."
    );
    write_artifact(&dir, "pauli_audit.txt", &hash, &report)?;
    write_artifact(&dir, "hc_terms.txt", &hash, &audit.hc_sum.export_terms())?;
    write_artifact(&dir, "hj_terms.txt", &hash, &audit.hj_sum.export_terms())?;
    if config.verbosity > 0 {
        print!("{report}");
    }
    Ok(())
}

/// `fit-ansatz`: fit the initial state for the configured run and write
/// the parameters.
pub fn cmd_fit_ansatz(config: &Config) -> Result<()> {
    let spec = config.run_spec()?;
    spec.validate()?;
    let dir = config.out_path();
    let hash = config.hash();
    write_resolved_config(config, &dir)?;

    let mut initial = crate::market::payoff(&spec.grid);
    if spec.method == Method::M2 {
        initial.resize(
            spec.grid.len() * crate::operators::m2_block_count(&spec.schedule),
            0.0,
        );
    }
    let circuit = build_ansatz(spec.ansatz.qubits, spec.ansatz.params)?;
    let target = encode_state(&initial, spec.ansatz.qubits)?;
    let fit = fit_initial_params(&circuit, &target, None, &spec.fit)?;

    let sampled_cost = match spec.shots {
        ShotMode::Exact => None,
        ShotMode::Shots(shots) => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
            let prepared = circuit.apply(&fit.theta)?;
            Some(1.0 - overlap_sampled(&prepared, &target, shots, &mut rng)?)
        }
    };
    let body = serde_json::json!({
        "config_hash": hash,
        "qubits": spec.ansatz.qubits,
        "params": spec.ansatz.params,
        "cost": fit.cost,
        "sampled_cost": sampled_cost,
        "converged": fit.converged,
        "restarts_used": fit.restarts_used,
        "evaluations": fit.evaluations,
        "theta": fit.theta,
        "circuit": circuit.dump(),
    });
    write_artifact(&dir, "ansatz_fit.json", &hash, &serde_json::to_string_pretty(&body)?)?;
    if config.verbosity > 0 {
        println!(
            "fit cost {:.3e} ({} restarts, {} evaluations), converged = {}",
            fit.cost, fit.restarts_used, fit.evaluations, fit.converged
        );
    }
    if !fit.converged {
        return Err(Error::FitThreshold {
            cost: fit.cost,
            threshold: spec.fit.threshold,
            restarts: fit.restarts_used,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_rejects_unknown_keys_with_line_numbers() {
        let text = "[market]\nr = 0.05\n\n[mystery]\nx = 1\n";
        match Config::parse(text) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 5);
                assert!(message.contains("mystery.x"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn parse_round_trips_through_resolved_text() {
        let text = "[market]\nr = 0.03\nsigma = 0.25\n[run]\nmethod = m1\nengine = varqite\n";
        let config = Config::parse(text).unwrap();
        assert_eq!(config.rate, 0.03);
        assert!(config.was_set("market.r"));
        assert!(!config.was_set("market.s0"));
        let resolved = Config::parse(&config.resolved_text()).unwrap();
        assert_eq!(resolved.hash(), config.hash());
        assert_eq!(resolved.method, Method::M1);
        assert_eq!(resolved.engine, Engine::Varqite);
    }

    #[test]
    fn parse_value_errors_carry_line() {
        let text = "[grid]\nn = sixteen\n";
        match Config::parse(text) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn args_build_overrides() {
        let args: Vec<String> = ["price", "--set", "market.r=0.07", "--grid.n", "256"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let inv = parse_args(&args).unwrap();
        assert_eq!(inv.command, "price");
        assert_eq!(inv.config.rate, 0.07);
        assert_eq!(inv.config.grid_n, 256);
        assert!(parse_args(&["price".into(), "--bogus".into()]).is_err());
    }

    #[test]
    fn shots_parse_both_forms() {
        let mut config = Config::default();
        config.set("run", "shots", "exact", 1).unwrap();
        assert_eq!(config.shots, ShotMode::Exact);
        config.set("run", "shots", "10000", 1).unwrap();
        assert_eq!(config.shots, ShotMode::Shots(10000));
        assert!(config.set("run", "shots", "many", 1).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.hash(), b.hash());
        b.set("market", "r", "0.06", 1).unwrap();
        assert_ne!(a.hash(), b.hash());
    }
}
