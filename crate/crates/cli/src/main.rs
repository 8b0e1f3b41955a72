//! `intervaldyn` command-line front end.

mod artifact;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use intervaldyn::conjugacy::{self, ConjugacyMode};
use intervaldyn::design::{self, ScheduleConfig};
use intervaldyn::hofbauer::{self, TowerConfig};
use intervaldyn::induced;
use intervaldyn::lyapunov::{self, ScanConfig};
use intervaldyn::{hp, symbolic, Fidelity, IntervalMap, MapSpec};

use artifact::{Artifact, UsageError};

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "intervaldyn",
    version,
    about = "Lyapunov exponents, towers and conjugacies of interval maps"
)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FidelityArg::Fast)]
    fidelity: FidelityArg,
    /// Write the JSON schemas of all artifacts into this directory.
    #[arg(long, global = true)]
    json_schema_dir: Option<PathBuf>,
    /// Omitted when only exporting schemas.
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FidelityArg {
    Fast,
    High,
}

impl From<FidelityArg> for Fidelity {
    fn from(f: FidelityArg) -> Self {
        match f {
            FidelityArg::Fast => Fidelity::Fast,
            FidelityArg::High => Fidelity::High,
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Build a Hofbauer tower and export it as JSON or DOT.
    Tower(TowerArgs),
    /// Finite-time Lyapunov profile of a random or given point (CSV).
    Lyap(LyapArgs),
    /// Conjugacies between kneading-equivalent maps.
    #[command(subcommand)]
    Conj(ConjCommand),
    /// Points whose lower exponent changes sign under conjugacy.
    #[command(subcommand)]
    Design(DesignCommand),
    /// Induced Markov maps over the closest-precritical partition.
    #[command(subcommand)]
    Induce(InduceCommand),
    /// Cutting times and closest precritical points.
    Kneading(KneadingArgs),
    /// Scan a family for negative exponents without attracting cycles (JSON lines).
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum TowerFormat {
    Json,
    Dot,
}

#[derive(Debug, Args, Serialize)]
struct TowerArgs {
    /// Map, e.g. `tent:1.8`, `logistic:4`, `sine`.
    #[arg(long, value_parser = parse_map)]
    map: MapSpec,
    #[arg(long, value_parser = parse_count, default_value = "10")]
    depth_cap: usize,
    #[arg(long, value_parser = parse_count, default_value_t = hofbauer::NODE_LIMIT)]
    node_limit: usize,
    #[arg(long, default_value_t = hofbauer::EPS_ID)]
    eps_id: f64,
    /// Defaults to `dot` when `--out` ends in `.dot`, else `json`.
    #[arg(long, value_enum)]
    format: Option<TowerFormat>,
}

#[derive(Debug, Args, Serialize)]
struct LyapArgs {
    #[arg(long, value_parser = parse_map)]
    map: MapSpec,
    /// Orbit length; scientific notation such as `1e6` is accepted.
    #[arg(long, value_parser = parse_count, default_value = "1e4")]
    n: usize,
    /// Start point; drawn uniformly from the domain with `--seed` when absent.
    #[arg(long)]
    x: Option<f64>,
    #[arg(long, value_parser = parse_count, default_value_t = lyapunov::BURN_IN)]
    burn_in: usize,
    /// Comma-separated `n` values; a 1-2-5 grid up to `N` when absent.
    #[arg(long, value_parser = parse_count, value_delimiter = ',')]
    checkpoints: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Auto,
    Explicit,
    Itinerary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ExperimentKind {
    /// Exponent of a typical orbit and of its transport.
    Sign,
    /// Exponents of the attracting cycles capturing both critical orbits.
    Cycles,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ConjCommand {
    /// Evaluate `h(x)`.
    Eval {
        #[arg(long, value_parser = parse_map)]
        from: MapSpec,
        #[arg(long, value_parser = parse_map)]
        to: MapSpec,
        #[arg(long)]
        x: f64,
        #[arg(long, value_parser = parse_count, default_value = "48")]
        depth: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
        mode: ModeArg,
    },
    /// Compare exponents across the conjugacy.
    Experiment {
        #[arg(long, value_parser = parse_map)]
        from: MapSpec,
        #[arg(long, value_parser = parse_map)]
        to: MapSpec,
        #[arg(long, value_parser = parse_count, default_value = "1e5")]
        samples: usize,
        #[arg(long, value_parser = parse_count, default_value = "48")]
        depth: usize,
        #[arg(long, value_enum, default_value_t = ExperimentKind::Sign)]
        kind: ExperimentKind,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum DesignCommand {
    /// Build the block schedule, design both points and profile them.
    Run {
        #[arg(long, value_parser = parse_count, default_value = "200")]
        n1: usize,
        #[arg(long, value_parser = parse_count, default_value = "2")]
        depth: usize,
        #[arg(long, value_parser = parse_map, default_value = "logistic:4")]
        map: MapSpec,
        #[arg(long, value_parser = parse_map, default_value = "sine")]
        conjugate: MapSpec,
        #[arg(long, default_value_t = 10.0)]
        ratio: f64,
        #[arg(long, default_value_t = 1.1)]
        dwell: f64,
        /// Precision cap in bits for the shadow orbits.
        #[arg(long, value_parser = parse_count, default_value_t = design::DEFAULT_MAX_BITS as usize)]
        max_bits: usize,
        /// Also write the full JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ReportFormat {
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum InduceCommand {
    /// Branches, images, distortions and property flags.
    Build {
        #[arg(long, value_parser = parse_map)]
        map: MapSpec,
        #[arg(long, value_parser = parse_count, default_value = "10")]
        k: usize,
        #[arg(long, value_parser = parse_count, default_value_t = induced::DISTORTION_GRID)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        report: ReportFormat,
    },
    /// `χ_n`, `t_n` and both sides of the exponent decomposition for one point.
    Profile {
        #[arg(long, value_parser = parse_map)]
        map: MapSpec,
        #[arg(long, value_parser = parse_count, default_value = "40")]
        k: usize,
        /// Start point; drawn from the built branches with `--seed` when absent.
        #[arg(long)]
        x: Option<f64>,
        #[arg(long, value_parser = parse_count, default_value = "20")]
        n: usize,
    },
}

#[derive(Debug, Args, Serialize)]
struct KneadingArgs {
    #[arg(long, value_parser = parse_map)]
    map: MapSpec,
    #[arg(long, value_parser = parse_count, default_value = "20")]
    k: usize,
    #[arg(long, value_parser = parse_count, default_value_t = symbolic::KNEADING_SEARCH_LIMIT)]
    search_limit: usize,
}

#[derive(Debug, Args, Serialize)]
struct ScanArgs {
    #[arg(long, default_value = "logistic")]
    family: String,
    #[arg(long, default_value_t = 2.2)]
    from: f64,
    #[arg(long, default_value_t = 4.0)]
    to: f64,
    #[arg(long, value_parser = parse_count, default_value = "25")]
    params: usize,
    #[arg(long, value_parser = parse_count, default_value = "4")]
    trials: usize,
    #[arg(long, value_parser = parse_count, default_value = "1e4")]
    n: usize,
    #[arg(long, value_parser = parse_count, default_value_t = lyapunov::BURN_IN)]
    burn_in: usize,
    #[arg(long, default_value_t = -0.05, allow_hyphen_values = true)]
    threshold: f64,
}

fn parse_map(s: &str) -> std::result::Result<MapSpec, String> {
    let spec: MapSpec = s.parse().map_err(|e| format!("{e}"))?;
    spec.build().map_err(|e| format!("{e}"))?;
    Ok(spec)
}

/// Non-negative integers, also in scientific notation (`1e6`).
fn parse_count(s: &str) -> std::result::Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a count"))?;
    if !(v >= 0.0 && v.fract() == 0.0 && v <= 9.007_199_254_740_992e15) {
        return Err(format!("`{s}` is not a non-negative integer"));
    }
    Ok(v as usize)
}

fn build(spec: &MapSpec) -> Result<IntervalMap> {
    Ok(spec.build()?)
}

/// `1, 2, 5, 10, 20, …` up to `n`, and `n`.
fn default_checkpoints(n: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut scale = 1usize;
    'outer: loop {
        for m in [1, 2, 5] {
            match scale.checked_mul(m) {
                Some(k) if k <= n => v.push(k),
                _ => break 'outer,
            }
        }
        scale = match scale.checked_mul(10) {
            Some(s) => s,
            None => break,
        };
    }
    if v.last() != Some(&n) {
        v.push(n);
    }
    v
}

fn run(cli: &Cli) -> Result<()> {
    let config = serde_json::to_value(cli)?;
    if let Some(dir) = &cli.json_schema_dir {
        artifact::write_schemas(dir)?;
    }
    let Some(command) = &cli.command else {
        if cli.json_schema_dir.is_some() {
            return Ok(());
        }
        bail!(UsageError("a subcommand is required; see --help".into()));
    };
    let out = cli.out.as_deref();
    let fidelity = Fidelity::from(cli.fidelity);
    match command {
        Command::Tower(a) => {
            let map = build(&a.map)?;
            if a.eps_id.is_nan() || a.eps_id < 0.0 {
                bail!(UsageError("--eps-id must be non-negative".into()));
            }
            let cfg = TowerConfig {
                node_limit: a.node_limit,
                eps_id: a.eps_id,
                ..TowerConfig::new(a.depth_cap)
            };
            let tower = hofbauer::build_tower_with(&map, &cfg);
            let dot = match a.format {
                Some(f) => f == TowerFormat::Dot,
                None => out.is_some_and(|p| p.extension().is_some_and(|e| e == "dot")),
            };
            if dot {
                Artifact::dot(&config, &tower.to_dot()).write(out)
            } else {
                Artifact::json("tower", &config, &tower.export())?.write(out)
            }
        }
        Command::Lyap(a) => {
            let map = build(&a.map)?;
            if a.n == 0 {
                bail!(UsageError("--n must be at least 1".into()));
            }
            if let Some(&bad) = a.checkpoints.iter().find(|&&k| k == 0 || k > a.n) {
                bail!(UsageError(format!("checkpoint {bad} outside [1, {}]", a.n)));
            }
            let dom = map.domain();
            let x0 = match a.x {
                Some(x) => x,
                None => ChaCha8Rng::seed_from_u64(cli.seed).gen_range(dom.lo..dom.hi),
            };
            let orbit = map.orbit(x0, a.burn_in)?;
            let x = orbit[a.burn_in];
            let cps = if a.checkpoints.is_empty() {
                default_checkpoints(a.n)
            } else {
                a.checkpoints.clone()
            };
            let p = lyapunov::profile_with(&map, x, a.n, &cps, fidelity)?;
            let rows = p
                .checkpoints
                .iter()
                .map(|&(n, l)| vec![n.to_string(), artifact::real(l)]);
            Artifact::csv(&config, &["n", "lambda_n"], rows)?.write(out)
        }
        Command::Conj(ConjCommand::Eval {
            from,
            to,
            x,
            depth,
            mode,
        }) => {
            let (f, g) = (build(from)?, build(to)?);
            let h = match mode {
                ModeArg::Auto => conjugacy::make_conjugacy_auto(&f, &g, *depth)?,
                ModeArg::Explicit => conjugacy::make_conjugacy(&f, &g, ConjugacyMode::Explicit, *depth)?,
                ModeArg::Itinerary => conjugacy::make_conjugacy(&f, &g, ConjugacyMode::Itinerary, *depth)?,
            };
            #[derive(Serialize)]
            struct Eval {
                x: f64,
                mode: ConjugacyMode,
                #[serde(flatten)]
                h: conjugacy::HValue,
            }
            let result = Eval {
                x: *x,
                mode: h.mode,
                h: h.eval(*x)?,
            };
            Artifact::json("conj-eval", &config, &result)?.write(out)
        }
        Command::Conj(ConjCommand::Experiment {
            from,
            to,
            samples,
            depth,
            kind,
        }) => {
            let (f, g) = (build(from)?, build(to)?);
            match kind {
                ExperimentKind::Sign => {
                    let r = conjugacy::sign_invariance_experiment(&f, &g, *samples, *depth, cli.seed)?;
                    Artifact::json("conj-sign", &config, &r)?.write(out)
                }
                ExperimentKind::Cycles => {
                    let r = conjugacy::atomic_cycle_experiment(&f, &g, *depth)?;
                    Artifact::json("conj-cycles", &config, &r)?.write(out)
                }
            }
        }
        Command::Design(DesignCommand::Run {
            n1,
            depth,
            map,
            conjugate,
            ratio,
            dwell,
            max_bits,
            report,
        }) => {
            let (f, g) = (build(map)?, build(conjugate)?);
            let cfg = ScheduleConfig {
                ratio: *ratio,
                dwell: *dwell,
                ..ScheduleConfig::new(*n1, *depth)
            };
            let bits = u32::try_from(*max_bits).context("--max-bits too large")?;
            let r = design::counterexample_experiment(&f, &g, &cfg, bits)?;
            if let Some(path) = report {
                Artifact::json("design", &config, &r)?.write(Some(path))?;
            }
            let label_f = r.f.to_string();
            let label_g = r.g.to_string();
            let rows = r
                .profile
                .checkpoints
                .iter()
                .map(|&(n, l)| vec![n.to_string(), artifact::real(l), label_f.clone()])
                .chain(
                    r.profile_conjugate
                        .checkpoints
                        .iter()
                        .map(|&(n, l)| vec![n.to_string(), artifact::real(l), label_g.clone()]),
                );
            Artifact::csv(&config, &["n", "lambda_n", "map"], rows)?.write(out)
        }
        Command::Induce(InduceCommand::Build { map, k, grid, .. }) => {
            let m = build(map)?;
            if *grid == 0 {
                bail!(UsageError("--grid must be positive".into()));
            }
            let im = induced::build_induced_with(&m, *k, *grid)?;
            let rows = induced::distortion_report(&im, &m)?;
            #[derive(Serialize)]
            struct Report<'a> {
                #[serde(flatten)]
                induced: &'a induced::InducedMap,
                distortion: Vec<induced::DistortionRow>,
            }
            let r = Report {
                induced: &im,
                distortion: rows,
            };
            Artifact::json("induce", &config, &r)?.write(out)
        }
        Command::Induce(InduceCommand::Profile { map, k, x, n }) => {
            let m = build(map)?;
            let im = induced::build_induced(&m, *k)?;
            let x = match x {
                Some(x) => *x,
                None => {
                    let (l, r) = im.coverage();
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                    let side = if rng.gen_bool(0.5) { l } else { r };
                    rng.gen_range(side.lo..side.hi)
                }
            };
            let it = induced::induced_profile(&im, &m, x, *n, fidelity)?;
            Artifact::json("induce-profile", &config, &it)?.write(out)
        }
        Command::Kneading(a) => {
            let m = build(&a.map)?;
            let kd = symbolic::kneading_with_limit(&m, a.k, a.search_limit)?;
            let len = (a.k + 1).max(32);
            let seq = hp::kneading_sequence(&m, len)?;
            #[derive(Serialize)]
            struct Report<'a> {
                #[serde(flatten)]
                kneading: &'a intervaldyn::KneadingData,
                kneading_sequence: String,
                checks: Vec<String>,
            }
            let r = Report {
                kneading: &kd,
                kneading_sequence: symbolic::Itinerary {
                    symbols: seq,
                    source: m.eval(kd.c),
                }
                .to_string(),
                checks: kd.check(&m),
            };
            Artifact::json("kneading", &config, &r)?.write(out)
        }
        Command::Scan(a) => {
            let family = a.family.parse().map_err(|e| UsageError(format!("{e}")))?;
            if a.n == 0 {
                bail!(UsageError("--n must be at least 1".into()));
            }
            let cfg = ScanConfig {
                burn_in: a.burn_in,
                n: a.n,
                threshold: a.threshold,
                seed: cli.seed,
                ..ScanConfig::default()
            };
            let params = lyapunov::linspace(a.from, a.to, a.params);
            let report = lyapunov::attractor_scan(family, &params, a.trials, &cfg)?;
            Artifact::scan_lines(&config, &report)?.write(out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            eprintln!("\n{}", Cli::command_usage());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

impl Cli {
    fn command_usage() -> String {
        use clap::CommandFactory;
        Cli::command().render_usage().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e6"), Ok(1_000_000));
        assert_eq!(parse_count("200"), Ok(200));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn checkpoint_grid() {
        assert_eq!(
            default_checkpoints(1000),
            vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]
        );
        assert_eq!(default_checkpoints(30), vec![1, 2, 5, 10, 20, 30]);
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
