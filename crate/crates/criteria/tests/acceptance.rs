use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use roi_explore::analysis::{audit_rewards, special_case_bound, SpecialCase};
use roi_explore::explorer::{explore, Faults};
use roi_explore::geometry::shapes::{random_fat_corpus, stadium};
use roi_explore::geometry::{is_fat, verify_approximation_bounds, ApproximationReport};
use roi_explore::grid_world::{Cell, GridRoi};
use roi_explore::harness::{
    competitive_worlds, run_sweep, run_trial, trial_seed, trial_world, within, CompetitiveOutcome, ExperimentConfig,
    HarnessError, SweepKind, SweepResult, TrialRow,
};
use roi_explore::sensing::{
    classify_cell, detect_once, finish_noisy, load_resume_state, noisy_explorer, save_resume_state, NoisyExplorer,
    NoisyOutcome, SensorModel,
};

const SEED: u64 = 2024;
const SHOWN: usize = 3;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

/// "k/n failing" plus the first few handles.
fn failures(label: &str, cases: usize, bad: &[String]) -> String {
    let mut s = format!("{label}: {}/{cases} failing", bad.len());
    if !bad.is_empty() {
        let shown: Vec<&str> = bad.iter().take(SHOWN).map(String::as_str).collect();
        s.push_str(&format!(" [{}]", shown.join("; ")));
    }
    s
}

fn row_handle(r: &TrialRow) -> String {
    format!("param {} trial {} seed {}", r.sweep_param, r.trial, r.seed)
}

fn three_sigma(hits: u64, draws: u64, p: f64) -> (bool, f64) {
    let sigma = (p * (1.0 - p) / draws as f64).sqrt();
    let z = (hits as f64 / draws as f64 - p) / sigma;
    (z.abs() <= 3.0, z)
}

struct Sweeps {
    defaults: Result<SweepResult, HarnessError>,
    defaults_secs: f64,
    sweeps: Vec<(SweepKind, Result<SweepResult, HarnessError>)>,
}

impl Sweeps {
    fn run() -> Self {
        let start = Instant::now();
        let defaults = run_sweep(&ExperimentConfig::sweep(SweepKind::Single, 100, SEED));
        let defaults_secs = start.elapsed().as_secs_f64();
        let sweeps = [SweepKind::Cells, SweepKind::Robots, SweepKind::SpeedRatio]
            .into_iter()
            .map(|k| (k, run_sweep(&ExperimentConfig::sweep(k, 100, SEED))))
            .collect();
        Sweeps {
            defaults,
            defaults_secs,
            sweeps,
        }
    }

    fn all(&self) -> impl Iterator<Item = (String, &Result<SweepResult, HarnessError>)> {
        std::iter::once(("defaults".to_string(), &self.defaults))
            .chain(self.sweeps.iter().map(|(k, r)| (format!("{k:?}"), r)))
    }
}

fn completeness(s: &Sweeps) -> Verdict {
    let complete = match &s.defaults {
        Ok(r) => r
            .rows
            .iter()
            .map(|row| {
                let w = trial_world(row.cells, row.seed).expect("valid world");
                explore(&w, row.robots, row.robot_speed).is_ok_and(|run| run.is_complete(&w))
            })
            .filter(|ok| *ok)
            .count(),
        Err(e) => return verdict(false, format!("sweep aborted: {e}")),
    };
    verdict(
        complete == 100 && s.defaults_secs < 10.0,
        format!(
            "{complete}/100 complete with robots home, {:.2} s for the sweep",
            s.defaults_secs
        ),
    )
}

/// Checks a per-row predicate over every sweep. A sweep that aborted on a
/// proven bound fails the check outright.
fn over_sweeps(s: &Sweeps, name: &str, abort_check: &str, ok: impl Fn(&TrialRow) -> bool) -> (bool, String) {
    let mut passed = true;
    let mut parts = Vec::new();
    for (label, r) in s.all() {
        match r {
            Ok(r) => {
                let bad: Vec<String> = r.rows.iter().filter(|row| !ok(row)).map(row_handle).collect();
                passed &= bad.is_empty();
                parts.push(failures(&label, r.rows.len(), &bad));
            }
            Err(e) => {
                let mine = matches!(e, HarnessError::Violation { check, .. } if *check == abort_check);
                passed = false;
                parts.push(format!(
                    "{label}: aborted{} ({e})",
                    if mine { "" } else { " on another check" }
                ));
            }
        }
    }
    (passed, format!("{name} {}", parts.join(", ")))
}

fn upper(s: &Sweeps) -> Verdict {
    let (p, d) = over_sweeps(s, "alg_time <= upper bound;", "upper_bound", |r| {
        within(r.alg_time, r.upper_bound)
    });
    verdict(p, d)
}

fn lower(s: &Sweeps) -> Verdict {
    let (g, dg) = over_sweeps(s, "grid bound;", "lower_bound_grid", |r| {
        within(r.lower_bound_grid, r.alg_time)
    });
    let (l, dl) = over_sweeps(s, "lawnmower;", "lawnmower_bound", |r| {
        within(r.lawnmower_bound, r.alg_time)
    });
    verdict(g && l, format!("{dg} | {dl}"))
}

fn competitive(outcomes: &[CompetitiveOutcome]) -> Verdict {
    let bad: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.competitive_ok())
        .map(|o| o.handle())
        .collect();
    let anchor = GridRoi::stationary(
        [(0, 0), (1, 0), (0, 1), (1, 1)].map(|(x, y)| Cell::new(x, y)),
        Cell::new(0, 0),
    )
    .expect("block is connected");
    let a = CompetitiveOutcome::evaluate(&anchor).expect("anchor evaluates");
    let anchor_ok = a.alg[0] == 6.0 && a.opt[0] == 4.0 && a.rhs[0] == 10.0;
    verdict(
        bad.is_empty() && anchor_ok,
        format!(
            "{}; anchor 2x2 R=1 alg {} OPT {} rhs {}",
            failures("worlds x R in {1,2}", outcomes.len(), &bad),
            a.alg[0],
            a.opt[0],
            a.rhs[0]
        ),
    )
}

fn rewards(s: &Sweeps, outcomes: &[CompetitiveOutcome]) -> Verdict {
    let trial_bad: Vec<String> = match &s.defaults {
        Ok(r) => r
            .rows
            .iter()
            .filter(|row| {
                let w = trial_world(row.cells, row.seed).expect("valid world");
                let o = run_trial(
                    &w,
                    row.robots,
                    row.robot_speed,
                    0.0,
                    row.trial,
                    row.seed,
                    Faults::default(),
                );
                !o.is_ok_and(|o| o.audit.ok())
            })
            .map(row_handle)
            .collect(),
        Err(e) => vec![format!("sweep aborted: {e}")],
    };
    let mut small_bad = Vec::new();
    let (mut lower_bad, mut upper_bad) = ([0usize; 2], [0usize; 2]);
    for o in outcomes {
        for i in 0..2 {
            let a = &o.audits[i];
            lower_bad[i] += usize::from(!a.lower_ok);
            upper_bad[i] += usize::from(!a.upper_ok);
            if !a.ok() {
                small_bad.push(format!("R={} {}", i + 1, o.handle()));
            }
        }
    }
    let path_bad: Vec<String> = (2..=12)
        .filter(|&k| {
            let w = GridRoi::stationary((0..k).map(|x| Cell::new(x, 0)), Cell::new(0, 0)).expect("path");
            let run = explore(&w, 1, 1.0).expect("path explores");
            let a = audit_rewards(&run);
            let edges = (k - 1) as f64;
            !(a.lhs == edges && a.collected == edges && a.rhs == edges && run.ledger.capacity() == (k - 1) as u32)
        })
        .map(|k| format!("k={k}"))
        .collect();
    let passed = trial_bad.is_empty() && small_bad.is_empty() && path_bad.is_empty();
    verdict(
        passed,
        format!(
            "{}; {} (lower side fails R=1 {} R=2 {}, upper side fails R=1 {} R=2 {}); {}",
            failures("defaults trials", 100, &trial_bad),
            failures("small worlds", 2 * outcomes.len(), &small_bad),
            lower_bad[0],
            lower_bad[1],
            upper_bad[0],
            upper_bad[1],
            failures("path lhs = total = rhs = k - 1, k in 2..=12", 11, &path_bad)
        ),
    )
}

fn geometry() -> Verdict {
    let shapes = random_fat_corpus(200, SEED);
    let reports: Vec<ApproximationReport> = shapes
        .par_iter()
        .map(|p| verify_approximation_bounds(p).expect("corpus shapes rasterize"))
        .collect();
    let not_fat = shapes.iter().filter(|p| !is_fat(p, 3)).count();
    let l3: Vec<String> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.lemma3_ok)
        .map(|(i, r)| format!("shape {i} C_out {} C_in {}", r.c_out, r.c_in))
        .collect();
    let l4: Vec<String> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.lemma4_ok)
        .map(|(i, r)| format!("shape {i} C_in {} C_best {}", r.c_in, r.c_best))
        .collect();
    let witness = stadium(10);
    let w = verify_approximation_bounds(&witness).expect("stadium rasterizes");
    let witness_ok = is_fat(&witness, 3) && w.c_in == 10 && w.c_out == 36 && w.lemma3_ok && w.lemma4_ok;
    verdict(
        not_fat == 0 && l3.is_empty() && l4.is_empty() && witness_ok,
        format!(
            "{}; {}; witness C_out {} = 3*{} + 6 fat {}; non-fat in corpus {not_fat}",
            failures("C_out <= 3 C_in + 6", 200, &l3),
            failures("C_in <= 6 C_best", 200, &l4),
            w.c_out,
            w.c_in,
            is_fat(&witness, 3)
        ),
    )
}

fn single_robot_translating() -> Verdict {
    let ratios = [1.5, 2.5, 4.0];
    let cases: Vec<(u64, f64)> = ratios
        .iter()
        .enumerate()
        .flat_map(|(p, &r)| (0..100).map(move |t| (trial_seed(SEED, 10 + p, t), r)))
        .collect();
    let bad: Vec<String> = cases
        .par_iter()
        .filter_map(|&(seed, ratio)| {
            let w = trial_world(120, seed).expect("valid world");
            let sp = w.roi_speed();
            let sr = ratio * sp;
            let run = explore(&w, 1, sr).expect("single robot explores");
            let c = w.cell_count();
            let loose = special_case_bound(SpecialCase::Srtr, c, run.d_max(), 1, sr, sp).expect("case applies");
            let tight = special_case_bound(SpecialCase::SrtrTight, c, run.d_max(), 1, sr, sp).expect("case applies");
            let frac = sr / (sr + sp);
            let ok = within(run.alg_time, tight)
                && within(tight, loose)
                && (tight / loose - frac).abs() <= 1e-12
                && frac > 0.5
                && frac <= 1.0;
            (!ok).then(|| {
                format!(
                    "seed {seed} ratio {ratio}: alg {} tight {tight} loose {loose}",
                    run.alg_time
                )
            })
        })
        .collect();
    verdict(
        bad.is_empty(),
        failures(
            "alg <= SRTR_tight <= SRTR, ratio S_r/(S_r+S_p), ratios 1.5/2.5/4",
            cases.len(),
            &bad,
        ),
    )
}

fn halving(outcomes: &[CompetitiveOutcome]) -> Verdict {
    let bad: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.halving_ok())
        .map(|o| o.handle())
        .collect();
    verdict(
        bad.is_empty(),
        failures("OPT(2) <= OPT(1) <= 2 OPT(2)", outcomes.len(), &bad),
    )
}

fn trends(s: &Sweeps) -> Verdict {
    let mut passed = true;
    let mut parts = Vec::new();
    for (kind, r) in &s.sweeps {
        let Ok(r) = r else {
            passed = false;
            parts.push(format!("{kind:?}: aborted"));
            continue;
        };
        let means: Vec<f64> = r.points.iter().map(|p| p.alg_time_mean).collect();
        let ok = means.windows(2).all(|w| match kind {
            SweepKind::Cells => w[1] > w[0],
            SweepKind::Robots => w[1] <= w[0],
            _ => w[1] < w[0],
        });
        passed &= ok;
        let shown: Vec<String> = means.iter().map(|m| format!("{m:.2}")).collect();
        parts.push(format!("{kind:?} [{}]", shown.join(" ")));
    }
    verdict(passed, parts.join(", "))
}

/// One noisy run with reloads from serialized state before the given batch
/// numbers. Also reports whether the believed ROI ever shrank.
fn noisy_run(mut ex: NoisyExplorer, cuts: &BTreeSet<u64>) -> (NoisyOutcome, bool) {
    let mut monotone = true;
    let mut seen = ex.sensor().belief().believed_roi();
    let mut batch = 0;
    loop {
        if cuts.contains(&batch) {
            ex = load_resume_state(&save_resume_state(&ex)).expect("state reloads");
        }
        if !ex.advance().expect("noisy run advances") {
            break;
        }
        batch += 1;
        let now = ex.sensor().belief().believed_roi();
        monotone &= seen.is_subset(&now);
        seen = now;
    }
    (finish_noisy(ex).expect("noisy run finishes"), monotone)
}

struct NoisyRuns {
    monotone_bad: Vec<String>,
    resume_bad: Vec<String>,
    save_points: usize,
}

fn noisy_runs() -> NoisyRuns {
    let results: Vec<(String, bool, bool, usize)> = (0..20u32)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(SEED, 20, i);
            let world = trial_world(120, seed).expect("valid world");
            let model = SensorModel::field(seed);
            let start = || noisy_explorer(&world, 4, 2.5, model).expect("noisy explorer starts");
            let mut probe = start();
            let mut batches = 0u64;
            while probe.advance().expect("noisy run advances") {
                batches += 1;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut cuts = BTreeSet::new();
            while cuts.len() < 6.min(batches.saturating_sub(1) as usize) {
                cuts.insert(rng.gen_range(1..batches));
            }
            let (whole, m1) = noisy_run(start(), &BTreeSet::new());
            let (split, m2) = noisy_run(start(), &cuts);
            let map = |o: &NoisyOutcome| serde_json::to_string(&o.belief_map).expect("map serializes");
            let tree = |o: &NoisyOutcome| serde_json::to_string(&o.run.tree).expect("tree serializes");
            let same = map(&whole) == map(&split) && tree(&whole) == tree(&split);
            (format!("seed {seed}"), m1 && m2, same, cuts.len())
        })
        .collect();
    NoisyRuns {
        monotone_bad: results.iter().filter(|r| !r.1).map(|r| r.0.clone()).collect(),
        resume_bad: results
            .iter()
            .filter(|r| !r.2 || r.3 != 6)
            .map(|r| r.0.clone())
            .collect(),
        save_points: results.iter().map(|r| r.3).sum(),
    }
}

fn sensing(runs: &NoisyRuns) -> Verdict {
    let draws = 100_000u64;
    let field = SensorModel::field(SEED);
    let mut rng = field.rng();
    let fp = (0..draws).filter(|_| detect_once(false, &field, &mut rng)).count() as u64;
    let fn_ = (0..draws).filter(|_| !detect_once(true, &field, &mut rng)).count() as u64;
    let (fp_ok, fp_z) = three_sigma(fp, draws, field.p_fp);
    let (fn_ok, fn_z) = three_sigma(fn_, draws, field.p_fn);
    let lossy = SensorModel::new(0.0, 0.2, SEED).expect("valid rates");
    let mut rng = lossy.rng();
    let missed = (0..draws).filter(|_| !classify_cell(true, &lossy, &mut rng)).count() as u64;
    let (miss_ok, miss_z) = three_sigma(missed, draws, 0.05792);
    verdict(
        fp_ok && fn_ok && miss_ok && runs.monotone_bad.is_empty(),
        format!(
            "fp {fp}/{draws} (z {fp_z:+.2}), fn {fn_}/{draws} (z {fn_z:+.2}), cell miss {missed}/{draws} (z {miss_z:+.2}); {}",
            failures("monotone beliefs", 20, &runs.monotone_bad)
        ),
    )
}

fn resume(runs: &NoisyRuns) -> Verdict {
    verdict(
        runs.resume_bad.is_empty(),
        format!(
            "{}, {} save points in total",
            failures("identical map and tree after reloads", 20, &runs.resume_bad),
            runs.save_points
        ),
    )
}

fn determinism() -> Verdict {
    let config = ExperimentConfig::sweep(SweepKind::Cells, 100, SEED + 1);
    let csv = || run_sweep(&config).and_then(|r| r.to_csv());
    match (csv(), csv()) {
        (Ok(a), Ok(b)) => verdict(a == b, format!("CELLS sweep, {} bytes, identical {}", a.len(), a == b)),
        (Err(e), _) | (_, Err(e)) => verdict(false, format!("sweep failed: {e}")),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let sweeps = Sweeps::run();
    let worlds = competitive_worlds(200, SEED);
    let outcomes: Vec<CompetitiveOutcome> = worlds
        .par_iter()
        .map(|w| CompetitiveOutcome::evaluate(w).expect("small world evaluates"))
        .collect();
    let runs = noisy_runs();

    let results = [
        ("completeness and termination", completeness(&sweeps)),
        ("upper bound", upper(&sweeps)),
        ("lower bounds", lower(&sweeps)),
        ("competitive ratio against OPT", competitive(&outcomes)),
        ("reward audit", rewards(&sweeps, &outcomes)),
        ("grid approximation of fat shapes", geometry()),
        ("single robot, translating ROI", single_robot_translating()),
        ("one versus two robot optimum", halving(&outcomes)),
        ("sweep trends", trends(&sweeps)),
        ("sensing statistics", sensing(&runs)),
        ("resume round trip", resume(&runs)),
        ("determinism", determinism()),
    ];
    let mut all = true;
    for (i, (name, v)) in results.iter().enumerate() {
        all &= v.passed;
        println!(
            "{} criterion {:>2} {name}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    let passed = results.iter().filter(|(_, v)| v.passed).count();
    println!("{passed}/12 criteria pass ({:.1} s)", started.elapsed().as_secs_f64());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
