use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use roi_explore::explorer::Faults;
use roi_explore::geometry::{is_fat, shapes, verify_at_resolution, FatPolygon, DEFAULT_RESOLUTION};
use roi_explore::grid_world::GridRoi;
use roi_explore::harness::{
    run_sweep, run_trial, run_verification_with, trial_world, ExperimentConfig, SweepKind, SweepResult, Tier, TrialRow,
};
use roi_explore::sensing::{finish_noisy, load_resume_state, noisy_explorer, save_resume_state, SensorModel};

#[derive(Parser)]
#[command(
    name = "roi-explore",
    version,
    about = "Multi-robot DFS exploration of unknown grid regions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Seeded parameter sweep; one row per trial.
    Sweep(SweepArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
    /// Explore one scenario with perfect sensing.
    Explore(ExploreArgs),
    /// Explore one scenario with the noisy classifier, optionally pausing and resuming.
    NoisyExplore(NoisyArgs),
    /// Check the grid approximation bounds on fat polygons.
    GeometryCheck(GeometryArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepChoice {
    Cells,
    Robots,
    SpeedRatio,
    Single,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultChoice {
    SkipInteriorMarking,
}

#[derive(Args)]
struct Output {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Output {
    fn emit(&self, text: &str) -> Result<()> {
        let text = format!("{}\n", text.trim_end());
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "single")]
    sweep: SweepChoice,
    /// Comma-separated sweep values; defaults to the built-in grid.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<f64>,
    #[arg(long, default_value_t = 120)]
    cells: usize,
    #[arg(long, default_value_t = 20)]
    robots: usize,
    #[arg(long, default_value_t = 2.5)]
    speed_ratio: f64,
    #[arg(long, default_value_t = 100)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    /// Larger corpora plus the exhaustive and sensing checks.
    #[arg(long)]
    full: bool,
    #[arg(long, value_enum)]
    inject_fault: Option<FaultChoice>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
#[group(multiple = false)]
struct Source {
    /// Scenario JSON file.
    #[arg(long)]
    map: Option<PathBuf>,
    /// Frontier-grown ROI of C cells translating at S_p = 1.
    #[arg(long, num_args = 2, value_names = ["C", "SEED"])]
    random: Option<Vec<u64>>,
}

impl Source {
    fn load(&self) -> Result<GridRoi> {
        if let Some(path) = &self.map {
            let text = read(path)?;
            return GridRoi::from_json(&text).with_context(|| format!("loading {}", path.display()));
        }
        match self.random.as_deref() {
            Some(&[c, seed]) => Ok(trial_world(c as usize, seed)?),
            _ => bail!("need one of --map FILE or --random C SEED"),
        }
    }
}

/// S_r = ratio·S_p, or the ratio itself for a static ROI.
fn robot_speed(world: &GridRoi, ratio: f64) -> Result<f64> {
    if !(ratio.is_finite() && ratio > 1.0) {
        bail!("speed ratio {ratio} must exceed 1");
    }
    let sp = world.roi_speed();
    Ok(if sp > 0.0 { ratio * sp } else { ratio })
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 20)]
    robots: usize,
    #[arg(long, default_value_t = 2.5)]
    speed_ratio: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Include trajectories and the tree in JSON output.
    #[arg(long)]
    full: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct NoisyArgs {
    #[command(flatten)]
    source: Source,
    /// Continue from a saved state instead of starting a scenario.
    #[arg(long, conflicts_with_all = ["map", "random"])]
    resume: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    robots: usize,
    #[arg(long, default_value_t = 2.5)]
    speed_ratio: f64,
    /// Sensor RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 27.0 / 483.0)]
    p_fp: f64,
    #[arg(long, default_value_t = 53.0 / 483.0)]
    p_fn: f64,
    /// Stop after this many event batches and write the state to --save.
    #[arg(long, requires = "save")]
    stop_after: Option<u64>,
    #[arg(long)]
    save: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct PolygonSource {
    /// Polygon JSON file: {"outer": [[x, y], ...], "holes": [...]}.
    #[arg(long)]
    polygon: Option<PathBuf>,
    /// N random fat disk unions from SEED.
    #[arg(long, num_args = 2, value_names = ["N", "SEED"])]
    random: Option<Vec<u64>>,
}

#[derive(Args)]
struct GeometryArgs {
    #[command(flatten)]
    source: PolygonSource,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: f64,
    #[command(flatten)]
    output: Output,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn sweep(a: SweepArgs) -> Result<bool> {
    let config = ExperimentConfig {
        sweep: match a.sweep {
            SweepChoice::Cells => SweepKind::Cells,
            SweepChoice::Robots => SweepKind::Robots,
            SweepChoice::SpeedRatio => SweepKind::SpeedRatio,
            SweepChoice::Single => SweepKind::Single,
        },
        cells: a.cells,
        robots: a.robots,
        speed_ratio: a.speed_ratio,
        trials: a.trials,
        master_seed: a.seed,
        grid: a.grid,
    };
    let result = run_sweep(&config)?;
    for f in &result.flagged {
        eprintln!(
            "flagged {} at {} trial {} seed {}",
            f.check, f.sweep_param, f.trial, f.seed
        );
    }
    for p in &result.points {
        eprintln!(
            "{:>8} mean {:.3} min {:.3} max {:.3}",
            p.sweep_param, p.alg_time_mean, p.alg_time_min, p.alg_time_max
        );
    }
    let text = match a.format {
        Format::Csv => result.to_csv()?,
        Format::Json => result.to_json(),
    };
    a.output.emit(&text)?;
    Ok(result.all_checks_pass())
}

fn verify(a: VerifyArgs) -> Result<bool> {
    let tier = if a.full { Tier::Full } else { Tier::Quick };
    let faults = Faults {
        skip_interior_marking: matches!(a.inject_fault, Some(FaultChoice::SkipInteriorMarking)),
    };
    let report = run_verification_with(tier, faults)?;
    for c in &report.checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        eprintln!("{mark} {} ({}/{} failing) {}", c.name, c.failures, c.cases, c.detail);
        for h in &c.failing {
            eprintln!("     {h}");
        }
    }
    a.output.emit(&report.to_json())?;
    Ok(report.passed())
}

fn explore(a: ExploreArgs) -> Result<bool> {
    let world = a.source.load()?;
    let speed = robot_speed(&world, a.speed_ratio)?;
    let seed = a.source.random.as_ref().map_or(0, |r| r[1]);
    let o = run_trial(&world, a.robots, speed, 0.0, 0, seed, Faults::default())?;
    let checks = json!({
        "complete": o.complete,
        "upper_bound": o.upper_ok(),
        "lower_bound_grid": o.lower_grid_ok(),
        "lawnmower_bound": o.lawnmower_ok(),
        "reward_lower": o.audit.lower_ok,
        "reward_upper": o.audit.upper_ok,
    });
    let passed = checks.as_object().expect("object").values().all(|v| v == &json!(true));
    let text = match a.format {
        Format::Csv => csv_line(&o.row)?,
        Format::Json => {
            let mut doc = json!({ "row": o.row, "audit": o.audit, "checks": checks });
            if a.full {
                doc["run"] = serde_json::to_value(&o.run)?;
            }
            serde_json::to_string_pretty(&doc)?
        }
    };
    if !passed {
        eprintln!("some checks failed: {checks}");
    }
    a.output.emit(&text)?;
    Ok(passed)
}

fn csv_line(row: &TrialRow) -> Result<String> {
    let result = SweepResult {
        config: ExperimentConfig::default(),
        points: Vec::new(),
        rows: vec![row.clone()],
        flagged: Vec::new(),
    };
    Ok(result.to_csv()?)
}

fn noisy(a: NoisyArgs) -> Result<bool> {
    let mut explorer = match (&a.resume, &a.source) {
        (Some(path), _) => load_resume_state(&read(path)?).with_context(|| format!("resuming {}", path.display()))?,
        (None, src) => {
            let world = src.load()?;
            let speed = robot_speed(&world, a.speed_ratio)?;
            let model = SensorModel::new(a.p_fp, a.p_fn, a.seed)?;
            noisy_explorer(&world, a.robots, speed, model)?
        }
    };
    if let Some(limit) = a.stop_after {
        let mut n = 0;
        while n < limit && explorer.advance()? {
            n += 1;
        }
        let path = a.save.as_ref().expect("clap enforces --save");
        fs::write(path, save_resume_state(&explorer)).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("saved after {n} batches at t = {}", explorer.clock());
        if !explorer.is_finished() {
            return Ok(true);
        }
    }
    let outcome = finish_noisy(explorer)?;
    let root = outcome.run.tree.root();
    let home = outcome
        .run
        .trajectories
        .iter()
        .all(|t| t.last().map(|e| e.0) == Some(root));
    let passed = outcome.run.tree.all_explored() && home;
    eprintln!(
        "alg_time {} iou {:.4} unreached {}",
        outcome.run.alg_time,
        outcome.iou,
        outcome.unreached_roi_cells.len()
    );
    a.output.emit(&serde_json::to_string_pretty(&outcome)?)?;
    Ok(passed)
}

fn geometry(a: GeometryArgs) -> Result<bool> {
    let shapes: Vec<FatPolygon> = match (&a.source.polygon, a.source.random.as_deref()) {
        (Some(path), _) => vec![FatPolygon::from_json(&read(path)?)?],
        (None, Some(&[n, seed])) => shapes::random_fat_corpus(n as usize, seed),
        _ => bail!("need --polygon FILE or --random N SEED"),
    };
    let mut passed = true;
    let mut reports = Vec::new();
    for (i, p) in shapes.iter().enumerate() {
        let fat = is_fat(p, 3);
        let r = verify_at_resolution(p, a.resolution)?;
        // The bounds only claim anything for fat shapes.
        let ok = !fat || (r.lemma3_ok && r.lemma4_ok);
        if !ok {
            eprintln!("shape {i}: C_out {} C_in {} C_best {}", r.c_out, r.c_in, r.c_best);
        }
        passed &= ok;
        reports.push(json!({ "shape": i, "fat": fat, "report": r }));
    }
    eprintln!("{} shapes checked", reports.len());
    a.output.emit(&serde_json::to_string_pretty(&reports)?)?;
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Verify(a) => verify(a),
        Command::Explore(a) => explore(a),
        Command::NoisyExplore(a) => noisy(a),
        Command::GeometryCheck(a) => geometry(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
