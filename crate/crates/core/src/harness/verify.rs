use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trial, trial_seed, trial_world, within, HarnessError, TrialOutcome};
use crate::analysis::{audit_rewards, brute_force_opt, competitive_rhs, RewardAudit, Variant};
use crate::explorer::{explore, Faults};
use crate::geometry::shapes::random_fat_corpus;
use crate::geometry::verify_approximation_bounds;
use crate::grid_world::{fixed_polyominoes, generate_random_roi, Cell, Direction, GridRoi};
use crate::sensing::{
    classify_cell, detect_once, finish_noisy, load_resume_state, noisy_explorer, save_resume_state, SensorModel,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Tier {
    Quick,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub failures: usize,
    /// Reproduction handles for the first failures.
    pub failing: Vec<String>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tier: Tier,
    pub faults: Faults,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

const MAX_LISTED: usize = 20;
const VERIFY_SEED: u64 = 0x5EED;

fn tally(name: &str, results: impl IntoIterator<Item = (bool, String)>, detail: String) -> CheckResult {
    let mut cases = 0;
    let mut failing = Vec::new();
    let mut failures = 0;
    for (ok, handle) in results {
        cases += 1;
        if !ok {
            failures += 1;
            if failing.len() < MAX_LISTED {
                failing.push(handle);
            }
        }
    }
    CheckResult {
        name: name.to_string(),
        passed: failures == 0,
        cases,
        failures,
        failing,
        detail,
    }
}

/// Small worlds for the exact-optimum comparison. Every fixed polyomino up to
/// six cells is taken from every start cell, static and translating in each
/// direction at S_p = 0.5; `random` frontier-grown worlds of two to six
/// cells follow, each static and translating.
pub fn competitive_worlds(random: usize, seed: u64) -> Vec<GridRoi> {
    let mut worlds = Vec::new();
    let mut push_all = |w: GridRoi, dirs: &[Direction]| {
        worlds.push(w.clone());
        for &d in dirs {
            worlds.push(w.clone().with_motion(d, 0.5).expect("valid speed"));
        }
    };
    for size in 1..=6 {
        for shape in fixed_polyominoes(size) {
            for &start in &shape {
                let w = GridRoi::stationary(shape.iter().copied(), start).expect("polyomino is connected");
                push_all(w, &Direction::SENSE_ORDER);
            }
        }
    }
    for i in 0..random {
        let s = trial_seed(seed, 1, i as u32);
        let size = 2 + (s % 5) as usize;
        let w = generate_random_roi(size, s);
        let d = w.translation_dir();
        push_all(w, &[d]);
    }
    worlds
}

/// Speeds used with the small worlds.
pub fn oracle_robot_speed(world: &GridRoi) -> f64 {
    if world.roi_speed() == 0.0 {
        1.0
    } else {
        1.5
    }
}

#[derive(Clone, Debug)]
pub struct CompetitiveOutcome {
    pub world: GridRoi,
    /// Indexed by robot count minus one.
    pub opt: [f64; 2],
    pub alg: [f64; 2],
    pub rhs: [f64; 2],
    pub audits: [RewardAudit; 2],
}

impl CompetitiveOutcome {
    pub fn evaluate(world: &GridRoi) -> Result<Self, HarnessError> {
        let sr = oracle_robot_speed(world);
        let sp = world.roi_speed();
        let mut opt = [0.0; 2];
        let mut alg = [0.0; 2];
        let mut rhs = [0.0; 2];
        let mut audits = Vec::with_capacity(2);
        for r in 1..=2 {
            let o = brute_force_opt(world, r, sr).map_err(|e| HarnessError::Config(e.to_string()))?;
            let run = explore(world, r, sr).map_err(|source| HarnessError::Explore { seed: 0, source })?;
            opt[r - 1] = o;
            alg[r - 1] = run.alg_time;
            rhs[r - 1] = competitive_rhs(o, r, sr, sp, Variant::Grid)?;
            audits.push(audit_rewards(&run));
        }
        Ok(CompetitiveOutcome {
            world: world.clone(),
            opt,
            alg,
            rhs,
            audits: [audits[0], audits[1]],
        })
    }

    pub fn competitive_ok(&self) -> bool {
        (0..2).all(|i| within(self.alg[i], self.rhs[i]))
    }

    /// OPT with two robots ≤ OPT with one ≤ twice OPT with two.
    pub fn halving_ok(&self) -> bool {
        within(self.opt[1], self.opt[0]) && within(self.opt[0], 2.0 * self.opt[1])
    }

    pub fn handle(&self) -> String {
        let cells: Vec<String> = self
            .world
            .cells()
            .iter()
            .map(|c| format!("({},{})", c.x, c.y))
            .collect();
        format!(
            "cells [{}] start ({},{}) S_p {} dir {:?}",
            cells.join(" "),
            self.world.start_cell().x,
            self.world.start_cell().y,
            self.world.roi_speed(),
            self.world.translation_dir()
        )
    }
}

fn three_sigma(hits: u64, draws: u64, p: f64) -> bool {
    let sigma = (p * (1.0 - p) / draws as f64).sqrt();
    (hits as f64 / draws as f64 - p).abs() <= 3.0 * sigma
}

pub fn run_verification(tier: Tier) -> Result<VerificationReport, HarnessError> {
    run_verification_with(tier, Faults::default())
}

/// Run the suite with the given explorer defects switched on.
pub fn run_verification_with(tier: Tier, faults: Faults) -> Result<VerificationReport, HarnessError> {
    let full = tier == Tier::Full;
    let mut checks = Vec::new();

    let worlds = competitive_worlds(if full { 200 } else { 50 }, VERIFY_SEED);
    let outcomes: Vec<CompetitiveOutcome> = worlds
        .par_iter()
        .map(CompetitiveOutcome::evaluate)
        .collect::<Result<_, _>>()?;
    checks.push(tally(
        "competitive_ratio_grid",
        outcomes.iter().map(|o| (o.competitive_ok(), o.handle())),
        "alg_time <= competitive_rhs(OPT, GRID) for R in {1, 2}".into(),
    ));
    if full {
        checks.push(tally(
            "two_robot_optimum",
            outcomes.iter().map(|o| (o.halving_ok(), o.handle())),
            "OPT(2) <= OPT(1) <= 2 OPT(2)".into(),
        ));
        checks.push(tally(
            "reward_audit_small",
            outcomes
                .iter()
                .flat_map(|o| (0..2).map(move |i| (o.audits[i].ok(), format!("R={} {}", i + 1, o.handle())))),
            "both sides of the reward inequality on the small worlds".into(),
        ));
    }

    let shapes = random_fat_corpus(if full { 200 } else { 50 }, VERIFY_SEED);
    let reports: Vec<_> = shapes
        .par_iter()
        .map(verify_approximation_bounds)
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    checks.push(tally(
        "outer_vs_inner_cells",
        reports
            .iter()
            .enumerate()
            .map(|(i, r)| (r.lemma3_ok, format!("shape {i}: C_out {} C_in {}", r.c_out, r.c_in))),
        format!("C_out <= 3 C_in + 6 on fat shapes from corpus seed {VERIFY_SEED}"),
    ));
    checks.push(tally(
        "inner_vs_best_grid",
        reports
            .iter()
            .enumerate()
            .map(|(i, r)| (r.lemma4_ok, format!("shape {i}: C_in {} C_best {}", r.c_in, r.c_best))),
        "C_in <= 6 C_best with offsets at resolution 0.05".into(),
    ));

    let trials = if full { 100 } else { 20 };
    let runs: Vec<(u64, Result<TrialOutcome, HarnessError>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(VERIFY_SEED, 0, t);
            let o = trial_world(120, seed)
                .map_err(HarnessError::from)
                .and_then(|w| run_trial(&w, 20, 2.5, 0.0, t, seed, faults));
            (seed, o)
        })
        .collect();
    let handle = |s: &u64, e: Option<&HarnessError>| match e {
        Some(e) => format!("seed {s}: {e}"),
        None => format!("seed {s}"),
    };
    let per_trial = |f: fn(&TrialOutcome) -> bool| {
        runs.iter()
            .map(|(s, o)| match o {
                Ok(o) => (f(o), handle(s, None)),
                Err(e) => (false, handle(s, Some(e))),
            })
            .collect::<Vec<_>>()
    };
    let defaults = "C = 120, R = 20, ratio 2.5";
    checks.push(tally(
        "completeness",
        per_trial(|o| o.complete),
        format!("{defaults}: every cell explored, robots home"),
    ));
    checks.push(tally(
        "upper_bound",
        per_trial(|o| o.upper_ok()),
        format!("{defaults}: alg_time <= upper bound"),
    ));
    checks.push(tally(
        "lower_bound_grid",
        per_trial(|o| o.lower_grid_ok()),
        defaults.to_string(),
    ));
    checks.push(tally(
        "lawnmower_bound",
        per_trial(|o| o.lawnmower_ok()),
        defaults.to_string(),
    ));
    checks.push(tally("reward_audit", per_trial(|o| o.audit.ok()), defaults.to_string()));

    if full {
        checks.extend(sensing_checks());
    }
    Ok(VerificationReport { tier, faults, checks })
}

fn sensing_checks() -> Vec<CheckResult> {
    let draws = 100_000u64;
    let field = SensorModel::field(VERIFY_SEED);
    let mut rng = field.rng();
    let fp = (0..draws).filter(|_| detect_once(false, &field, &mut rng)).count() as u64;
    let fn_ = (0..draws).filter(|_| !detect_once(true, &field, &mut rng)).count() as u64;
    let rates = tally(
        "detection_error_rates",
        [
            (three_sigma(fp, draws, field.p_fp), format!("fp {fp}/{draws}")),
            (three_sigma(fn_, draws, field.p_fn), format!("fn {fn_}/{draws}")),
        ],
        "per-image error rates within 3 sigma".into(),
    );
    let lossy = SensorModel::new(0.0, 0.2, VERIFY_SEED).expect("valid rates");
    let mut rng = lossy.rng();
    let missed = (0..draws).filter(|_| !classify_cell(true, &lossy, &mut rng)).count() as u64;
    let miss = tally(
        "cell_miss_rate",
        [(three_sigma(missed, draws, 0.05792), format!("missed {missed}/{draws}"))],
        "cell-level miss rate for p_fn = 0.2 within 3 sigma of 0.05792".into(),
    );

    let results: Vec<(bool, bool, String)> = (0..10u32)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(VERIFY_SEED, 2, i);
            let world = trial_world(80, seed).expect("valid world");
            let model = SensorModel::field(seed);
            let handle = format!("seed {seed}");
            let Ok(mut ex) = noisy_explorer(&world, 4, 2.5, model) else {
                return (false, false, handle);
            };
            let mut monotone = true;
            let mut seen: BTreeSet<Cell> = ex.sensor().belief().believed_roi();
            let mut rng = model.rng();
            loop {
                match ex.advance() {
                    Ok(true) => {}
                    Ok(false) => break,
                    Err(_) => return (false, false, handle),
                }
                let now = ex.sensor().belief().believed_roi();
                monotone &= seen.is_subset(&now);
                seen = now;
                if rng.gen_bool(0.2) {
                    match load_resume_state(&save_resume_state(&ex)) {
                        Ok(back) => ex = back,
                        Err(_) => return (monotone, false, handle),
                    }
                }
            }
            let split = finish_noisy(ex);
            let whole = noisy_explorer(&world, 4, 2.5, model).and_then(finish_noisy);
            let same = match (split, whole) {
                (Ok(a), Ok(b)) => {
                    serde_json::to_string(&a.belief_map).ok() == serde_json::to_string(&b.belief_map).ok()
                        && serde_json::to_string(&a.run.tree).ok() == serde_json::to_string(&b.run.tree).ok()
                }
                _ => false,
            };
            (monotone, same, handle)
        })
        .collect();
    let monotone = tally(
        "belief_monotone",
        results.iter().map(|(m, _, h)| (*m, h.clone())),
        "believed ROI never shrinks between events".into(),
    );
    let resume = tally(
        "resume_round_trip",
        results.iter().map(|(_, s, h)| (*s, h.clone())),
        "save and reload between events leaves map and tree unchanged".into(),
    );
    vec![rates, miss, monotone, resume]
}
