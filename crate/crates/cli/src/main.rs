use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dzl_core::acceptance::{self, annulus_test_field};
use dzl_core::bootstrap::bootstrap_trace;
use dzl_core::clifford::check_clifford;
use dzl_core::field::{make_grid, profiles, random_band_limited, random_field, sample, GridSpec};
use dzl_core::freeop::{apply_a_quadrature_padded, apply_a_spectral, verify_ah0_identity, verify_pairing_identity};
use dzl_core::kernelnorm::{scale_sweep, Agreement, NwKernelSpec, SweepConfig};
use dzl_core::potential::{loss_yau, PotentialSpec};
use dzl_core::rational::Rational;
use dzl_core::resonance::{
    birman_schwinger_spectrum, classify_threshold_state, cluster_overlap, coupling_thresholds_from, decay_fit, default_shells,
    zero_modes_from, ClassifyConfig, EigenConfig, ThresholdKind,
};
use dzl_core::LabError;

const OUTPUT_ROOT_ENV: &str = "DZL_OUTPUT_ROOT";

const DEFAULTS: &[(&str, &str)] = &[("L", "16"), ("N", "32"), ("seed", "20240301"), ("emit", "json,csv")];

const TOLERANCES: &[(&str, f64)] = &[
    ("ah0", 1e-10),
    ("pairing", 1e-8),
    ("spectral_quadrature", 0.05),
    ("eigen", 1e-8),
    ("zero_mode", 0.1),
    ("gate", 0.2),
];

const KEYS: &[&str] = &[
    "L", "N", "seed", "emit", "output_dir", "potential", "amp", "rho", "q", "a", "b", "d", "p", "scale", "scales", "only", "json",
];

#[derive(Parser)]
#[command(name = "dzl", version, about = "Zero-mode experiments for the 3D massless Dirac operator")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Defaults to $DZL_OUTPUT_ROOT, then `runs`.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Box half-width.
    #[arg(short = 'L', long = "half-width", global = true)]
    half_width: Option<f64>,
    /// Grid points per axis.
    #[arg(short = 'N', long, global = true)]
    points: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance override, `name=value`.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tolerances: Vec<String>,
    /// File formats to write, from `json,csv`.
    #[arg(long, global = true)]
    emit: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the anticommutation relations of the alpha matrices.
    CliffordCheck {
        #[arg(long)]
        json: bool,
    },
    /// Check the inverse identity, the pairing identity and spectral against quadrature A.
    VerifyFreeop,
    /// Sweep the norm of a weighted kernel operator over box sizes.
    NwSweep {
        #[arg(long, allow_hyphen_values = true)]
        a: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
        #[arg(long)]
        d: Option<u32>,
        #[arg(long)]
        p: Option<String>,
        /// Comma-separated half-widths.
        #[arg(long)]
        scales: Option<String>,
    },
    /// Print the exact weight bootstrap for decay rate rho.
    Bootstrap {
        #[arg(long, allow_hyphen_values = true)]
        rho: Option<String>,
    },
    /// Search for zero modes of H0 + Q and classify them.
    ZeroMode {
        /// zero, loss-yau, scalar-decay, em or file:PATH, with optional `:key=value,...`.
        #[arg(long)]
        potential: Option<String>,
        #[arg(long)]
        amp: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        scale: Option<f64>,
        /// Skip the larger-box companion used for the weighted-norm trend.
        #[arg(long)]
        no_companion: bool,
    },
    /// Run the acceptance suite.
    Acceptance {
        /// Only criteria whose name contains this string.
        #[arg(long)]
        only: Option<String>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Check(String),
    Violation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Check(_) => 1,
            Failure::Violation(_) => 3,
        }
    }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Parse(_) | LabError::Domain(_) | LabError::InvalidSpec(_) | LabError::InvalidGrid(_) | LabError::CostGuard { .. } => {
                Failure::Usage(e.to_string())
            }
            e => Failure::Check(e.to_string()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Check(format!("{e:#}"))
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Resolved settings of one run, written beside its outputs as `config.txt`.
#[derive(Debug, Clone)]
struct RunConfig {
    values: BTreeMap<String, String>,
}

fn parse_config_file(path: &Path) -> std::result::Result<BTreeMap<String, String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("{}:{}: expected `key = value`", path.display(), n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    fn resolve(common: &Common, command: &Command) -> std::result::Result<RunConfig, Failure> {
        let mut values: BTreeMap<String, String> = DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for (k, v) in TOLERANCES {
            values.insert(format!("tol.{k}"), format!("{v:e}"));
        }
        if let Some(path) = &common.config {
            for (k, v) in parse_config_file(path)? {
                let known = KEYS.contains(&k.as_str()) || k.strip_prefix("tol.").is_some_and(|t| TOLERANCES.iter().any(|(n, _)| *n == t));
                if !known {
                    return Err(Failure::Usage(format!("unknown config key `{k}`")));
                }
                values.insert(k, v);
            }
        }
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        };
        set("L", common.half_width.map(|v| v.to_string()));
        set("N", common.points.map(|v| v.to_string()));
        set("seed", common.seed.map(|v| v.to_string()));
        set("emit", common.emit.clone());
        set("output_dir", common.output_dir.as_ref().map(|p| p.display().to_string()));
        match command {
            Command::CliffordCheck { json } => set("json", json.then(|| "true".into())),
            Command::VerifyFreeop => {}
            Command::NwSweep { a, b, d, p, scales } => {
                set("a", a.clone());
                set("b", b.clone());
                set("d", d.map(|v| v.to_string()));
                set("p", p.clone());
                set("scales", scales.clone());
            }
            Command::Bootstrap { rho } => set("rho", rho.clone()),
            Command::ZeroMode { potential, amp, rho, q, a, scale, .. } => {
                set("potential", potential.clone());
                set("amp", amp.map(|v| v.to_string()));
                set("rho", rho.map(|v| v.to_string()));
                set("q", q.map(|v| v.to_string()));
                set("a", a.map(|v| v.to_string()));
                set("scale", scale.map(|v| v.to_string()));
            }
            Command::Acceptance { only } => set("only", only.clone()),
        }
        for t in &common.tolerances {
            let (k, v) = t.split_once('=').ok_or_else(|| Failure::Usage(format!("--tol expects NAME=VALUE, got `{t}`")))?;
            if !TOLERANCES.iter().any(|(n, _)| *n == k) {
                let names: Vec<&str> = TOLERANCES.iter().map(|(n, _)| *n).collect();
                return Err(Failure::Usage(format!("unknown tolerance `{k}`; known: {}", names.join(", "))));
            }
            values.insert(format!("tol.{k}"), v.to_string());
        }
        Ok(RunConfig { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> std::result::Result<Option<T>, Failure> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| Failure::Usage(format!("bad value for `{key}`: `{v}`"))))
            .transpose()
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> std::result::Result<T, Failure> {
        self.parse(key)?.ok_or_else(|| Failure::Usage(format!("missing `{key}`")))
    }

    fn grid(&self) -> std::result::Result<GridSpec, Failure> {
        Ok(make_grid(self.require("L")?, self.require("N")?)?)
    }

    fn seed(&self) -> std::result::Result<u64, Failure> {
        self.require("seed")
    }

    fn tol(&self, name: &str) -> std::result::Result<f64, Failure> {
        let v: f64 = self.require(&format!("tol.{name}"))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(Failure::Usage(format!("tolerance `{name}` must be a non-negative number")));
        }
        Ok(v)
    }

    fn emits(&self, format: &str) -> bool {
        self.get("emit").is_some_and(|e| e.split(',').any(|f| f.trim() == format))
    }

    fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Output directory of one run: `<root>/<command>-<settings>`.
struct Run {
    dir: PathBuf,
    config: RunConfig,
}

impl Run {
    fn open(config: RunConfig, command: &str, tag: &str) -> anyhow::Result<Run> {
        let root = config
            .get("output_dir")
            .map(PathBuf::from)
            .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"));
        let slug: String = format!("{command}-L{}-N{}-s{}{tag}", config.get("L").unwrap_or(""), config.get("N").unwrap_or(""), config.get("seed").unwrap_or(""))
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
            .collect();
        let dir = root.join(slug);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("config.txt"), config.to_text())?;
        Ok(Run { dir, config })
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<()> {
        if self.config.emits("json") {
            fs::write(self.dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
        }
        Ok(())
    }

    fn csv(&self, name: &str, text: &str) -> anyhow::Result<()> {
        if self.config.emits("csv") {
            fs::write(self.dir.join(name), text)?;
        }
        Ok(())
    }
}

fn clifford_check(cfg: RunConfig) -> Outcome {
    let report = check_clifford();
    let run = Run::open(cfg, "clifford-check", "")?;
    run.json("clifford.json", &report)?;
    if run.config.get("json") == Some("true") {
        println!("{}", serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?);
    } else {
        for p in &report.pairs {
            println!("a{} a{} + a{} a{}: deviation {:e}", p.j, p.k, p.k, p.j, p.deviation);
        }
        println!("max deviation {:e}", report.max_deviation);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!("anticommutation deviation {:e}", report.max_deviation)))
    }
}

#[derive(Serialize)]
struct NamedCheck {
    name: &'static str,
    value: f64,
    tolerance: f64,
    passed: bool,
}

fn verify_freeop(cfg: RunConfig) -> Outcome {
    let g = cfg.grid()?;
    let seed = cfg.seed()?;
    let f = random_band_limited(&g, seed, (g.points / 4).clamp(1, 6), true)?;
    let ah0 = verify_ah0_identity(&f)?;
    let pairing = verify_pairing_identity(&random_field(&g, seed + 1), &annulus_test_field(&g, seed + 2))?.relative_gap();
    let bump = sample(profiles::mean_zero_bump(2.5, 0), &g)?;
    let quad = apply_a_quadrature_padded(&bump)?;
    let spectral = apply_a_spectral(&bump)?.field.sub(&quad)?.norm() / quad.norm();
    let mut checks = Vec::new();
    for (name, value) in [("ah0", ah0), ("pairing", pairing), ("spectral_quadrature", spectral)] {
        let tolerance = cfg.tol(name)?;
        checks.push(NamedCheck { name, value, tolerance, passed: value <= tolerance });
    }
    let run = Run::open(cfg, "verify-freeop", "")?;
    run.json("freeop.json", &checks)?;
    for c in &checks {
        println!("{} {}: {:.6e} (tolerance {:e})", if c.passed { "ok  " } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("failing check: {}", failed.join(", "))))
    }
}

fn nw_sweep(cfg: RunConfig) -> Outcome {
    let a: Rational = cfg.require("a")?;
    let b: Rational = cfg.require("b")?;
    let d: u32 = cfg.parse("d")?.unwrap_or(3);
    let p: Rational = cfg.parse("p")?.unwrap_or(Rational::integer(2));
    let spec = NwKernelSpec::new(a, b, d, p)?;
    let scales: Vec<f64> = cfg
        .get("scales")
        .unwrap_or("8,16,32")
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| Failure::Usage(format!("bad scale `{s}`"))))
        .collect::<std::result::Result<_, _>>()?;
    let sweep = SweepConfig { seed: cfg.seed()?, ..SweepConfig::default() };
    let report = scale_sweep(&spec, &scales, &sweep)?;
    let run = Run::open(cfg, "nw-sweep", &format!("-a{a}-b{b}-d{d}-p{p}"))?;
    run.csv("sweep.csv", &report.to_csv())?;
    run.json("sweep.json", &report)?;
    print!("{}", report.to_csv());
    println!(
        "agreement: {:?} (criterion {:?}, sweep {:?}{})",
        report.agreement,
        report.criterion_class,
        report.growth_class,
        if report.boundary { ", boundary case" } else { "" }
    );
    match report.agreement {
        Agreement::Agree => Ok(()),
        Agreement::Inconclusive if report.boundary => Ok(()),
        other => Err(Failure::Check(format!("sweep {:?} against criterion {:?}: {other:?}", report.growth_class, report.criterion_class))),
    }
}

fn bootstrap(cfg: RunConfig) -> Outcome {
    let rho: Rational = cfg.require("rho")?;
    let trace = bootstrap_trace(rho)?;
    let run = Run::open(cfg, "bootstrap", &format!("-rho{rho}"))?;
    let json = trace.to_json();
    if run.config.emits("json") {
        fs::write(run.dir.join("trace.json"), format!("{json}\n")).map_err(anyhow::Error::from)?;
    }
    fs::write(run.dir.join("trace.txt"), trace.table()).map_err(anyhow::Error::from)?;
    println!("{json}");
    print!("{}", trace.table());
    Ok(())
}

fn potential_spec(cfg: &RunConfig) -> std::result::Result<PotentialSpec, Failure> {
    let name = cfg.get("potential").unwrap_or("loss-yau");
    if name.contains(':') {
        return Ok(name.parse()?);
    }
    let params: Vec<String> = ["amp", "rho", "q", "a", "scale"]
        .iter()
        .filter_map(|k| cfg.get(k).map(|v| format!("{k}={v}")))
        .collect();
    if params.is_empty() {
        Ok(name.parse()?)
    } else {
        Ok(format!("{name}:{}", params.join(",")).parse()?)
    }
}

#[derive(Serialize)]
struct ModeRecord {
    file: String,
    kind: Option<ThresholdKind>,
    sigma: Option<f64>,
    residual: Option<f64>,
    mu_check: Option<serde_json::Value>,
    error: Option<String>,
}

#[derive(Serialize)]
struct EigenSummary {
    potential: String,
    eigenvalues: Vec<[f64; 2]>,
    residuals: Vec<f64>,
    converged: bool,
    iterations: usize,
    applications: usize,
    coupling_thresholds: Vec<f64>,
    /// Projection of the built-in Loss–Yau mode onto the mode span.
    overlap_with_loss_yau: Option<f64>,
    modes: Vec<ModeRecord>,
}

/// Grid with about 1.5 times the half-width at the same spacing.
fn companion_grid(g: &GridSpec) -> std::result::Result<GridSpec, Failure> {
    let n = ((g.points * 3 / 2) + 1) / 2 * 2;
    Ok(make_grid(g.half_width * n as f64 / g.points as f64, n)?)
}

fn zero_mode(cfg: RunConfig, no_companion: bool) -> Outcome {
    let g = cfg.grid()?;
    let spec = potential_spec(&cfg)?;
    let eig = EigenConfig { tol: cfg.tol("eigen")?, seed: cfg.seed()?, ..EigenConfig::default() };
    let classify = ClassifyConfig { gate: cfg.tol("gate")?, ..ClassifyConfig::default() };
    let tol = cfg.tol("zero_mode")?;

    let q = spec.build(&g)?;
    let report = birman_schwinger_spectrum(&q, &eig)?;
    let modes = zero_modes_from(&report, &q, tol)?;
    let companion = if modes.is_empty() || no_companion || matches!(spec, PotentialSpec::File { .. }) {
        None
    } else {
        let big = companion_grid(&g)?;
        let ql = spec.build(&big)?;
        zero_modes_from(&birman_schwinger_spectrum(&ql, &eig)?, &ql, tol)?.into_iter().next()
    };

    let tag = format!("-{spec}");
    let run = Run::open(cfg, "zero-mode", &tag)?;
    let mut records = Vec::new();
    let mut kinds = Vec::new();
    for (k, m) in modes.iter().enumerate() {
        let file = format!("mode_{k}.dzl1");
        let out = fs::File::create(run.dir.join(&file)).map_err(anyhow::Error::from)?;
        m.write_dzl1(BufWriter::new(out))?;
        match classify_threshold_state(m, &q, companion.as_ref(), &classify) {
            Ok(c) => {
                if let Ok(fit) = decay_fit(m, &default_shells(&g)) {
                    run.csv(&format!("decay_{k}.csv"), &fit.to_csv())?;
                }
                kinds.push(Some(c.kind));
                records.push(ModeRecord {
                    file,
                    kind: Some(c.kind),
                    sigma: Some(c.sigma),
                    residual: Some(c.residual),
                    mu_check: serde_json::to_value(&c.mu_check).ok(),
                    error: None,
                });
            }
            Err(e) => {
                kinds.push(None);
                records.push(ModeRecord { file, kind: None, sigma: None, residual: None, mu_check: None, error: Some(e.to_string()) });
            }
        }
    }
    let overlap_with_loss_yau = match (&spec, modes.is_empty()) {
        (PotentialSpec::LossYau { .. }, false) => Some(cluster_overlap(&modes, &loss_yau(&g).spinor)?),
        _ => None,
    };
    let summary = EigenSummary {
        potential: spec.to_string(),
        eigenvalues: report.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
        residuals: report.residuals.clone(),
        converged: report.converged,
        iterations: report.iterations,
        applications: report.applications,
        coupling_thresholds: coupling_thresholds_from(&report).thresholds,
        overlap_with_loss_yau,
        modes: records,
    };
    run.json("eigenreport.json", &summary)?;

    println!("potential {}", summary.potential);
    for (z, r) in summary.eigenvalues.iter().zip(&summary.residuals) {
        println!("  lambda = {:+.8} {:+.8}i  residual {:.2e}", z[0], z[1], r);
    }
    if let Some(o) = overlap_with_loss_yau {
        println!("overlap with the Loss-Yau mode: {o:.4}");
    }
    println!("{} zero mode(s)", summary.modes.len());
    for m in &summary.modes {
        match (&m.kind, &m.error) {
            (Some(kind), _) => println!(
                "  {}: {} sigma {:.3} residual {:.3e}",
                m.file,
                serde_json::to_string(kind).unwrap_or_default().trim_matches('"'),
                m.sigma.unwrap_or(f64::NAN),
                m.residual.unwrap_or(f64::NAN)
            ),
            (None, Some(e)) => println!("  {}: {e}", m.file),
            _ => {}
        }
    }
    if kinds.contains(&Some(ThresholdKind::ResonanceCandidate)) {
        return Err(Failure::Violation("resonance_candidate classification".into()));
    }
    if kinds.iter().all(|k| *k == Some(ThresholdKind::ZeroMode)) {
        Ok(())
    } else {
        Err(Failure::Check("some modes are inconclusive or failed classification".into()))
    }
}

fn run_acceptance(cfg: RunConfig) -> Outcome {
    let only = cfg.get("only").map(str::to_string);
    let outcomes = acceptance::run(only.as_deref())?;
    if outcomes.is_empty() {
        return Err(Failure::Usage(format!("no criterion matches `{}`; known: {}", only.unwrap_or_default(), acceptance::NAMES.join(", "))));
    }
    let tag = only.as_ref().map(|o| format!("-{o}")).unwrap_or_default();
    let run = Run::open(cfg, "acceptance", &tag)?;
    run.json("acceptance.json", &outcomes)?;
    for o in &outcomes {
        println!("{}", o.line());
        print!("{}", o.details());
    }
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.to_string()).collect();
    println!("{} of {} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("failing criteria: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = RunConfig::resolve(&cli.common, &cli.command).and_then(|cfg| match cli.command {
        Command::CliffordCheck { .. } => clifford_check(cfg),
        Command::VerifyFreeop => verify_freeop(cfg),
        Command::NwSweep { .. } => nw_sweep(cfg),
        Command::Bootstrap { .. } => bootstrap(cfg),
        Command::ZeroMode { no_companion, .. } => zero_mode(cfg, no_companion),
        Command::Acceptance { .. } => run_acceptance(cfg),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(m) | Failure::Check(m) | Failure::Violation(m)) = &f;
            eprintln!("dzl: {m}");
            ExitCode::from(f.code())
        }
    }
}
