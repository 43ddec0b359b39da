use arbiter_core::arbiter::{play_rounds, winner_distribution, PLAYERS};
use arbiter_core::duel::{expected_payoffs, payoff_surface, play_game, strategy_gate};
use arbiter_core::ga::{evolve, verify_strategy_set};
use arbiter_core::grover::{grover_search, pipeline_rounds};
use arbiter_core::Error;
use serde_json::json;

use crate::output::{json, pipeline_csv, rounds_csv, surface_csv, Artifact};
use crate::scenario::{Plan, Scenario};
use crate::CliError;

/// Files produced by a run, plus a failure to report after they are
/// written (a verification that did not pass).
#[derive(Debug)]
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub failure: Option<CliError>,
}

fn runtime(e: Error) -> CliError {
    CliError::Runtime(e.to_string())
}

fn artifact(name: &str, contents: Vec<u8>) -> Artifact {
    Artifact { name: name.into(), contents }
}

fn frequencies(winners: impl Iterator<Item = usize>, rounds: usize) -> [f64; PLAYERS] {
    let mut counts = [0usize; PLAYERS];
    for w in winners {
        counts[w - 1] += 1;
    }
    counts.map(|c| c as f64 / rounds as f64)
}

pub fn run_scenario(s: &Scenario) -> Result<Outcome, CliError> {
    let seed = s.seed;
    let mut failure = None;
    let artifacts = match &s.plan {
        Plan::Duel { model, a, b, table } => {
            let ua = strategy_gate(a).map_err(runtime)?;
            let ub = strategy_gate(b).map_err(runtime)?;
            let d = play_game(model, &ua, &ub).map_err(runtime)?;
            let (pa, pb) = expected_payoffs(&d, table);
            let report = json!({
                "model": model,
                "player_a": a,
                "player_b": b,
                "payoff_table": table,
                "distribution": d,
                "payoff_A": pa,
                "payoff_B": pb,
            });
            vec![artifact("duel.json", json(&report)?)]
        }
        Plan::Surface { model, sweep, fixed, table } => {
            let surface = payoff_surface(model, sweep, fixed, table).map_err(runtime)?;
            vec![artifact("surface.csv", surface_csv(&surface)?)]
        }
        Plan::Arbiter { strategies, data, rounds } => {
            let log = play_rounds(&strategies.0, data, seed, *rounds).map_err(runtime)?;
            let summary = json!({
                "rounds": rounds,
                "seed": seed,
                "data": data,
                "expected": winner_distribution(&strategies.0),
                "frequencies": frequencies(log.iter().map(|r| r.winner), *rounds),
            });
            vec![artifact("rounds.csv", rounds_csv(&log)?), artifact("arbiter.json", json(&summary)?)]
        }
        Plan::Optimize { target, config } => {
            let run = evolve(target, config).map_err(runtime)?;
            let report = json!({
                "config": config,
                "target": target,
                "achieved": run.achieved,
                "deviations": run.achieved.deviations(target.values()),
                "max_abs_deviation": run.achieved.max_abs_deviation(target.values()),
                "fitness": run.fitness,
                "angles": run.chromosome.angles(),
                "fitness_trace": run.fitness_trace,
            });
            vec![artifact("optimize.json", json(&report)?), artifact("strategies.json", json(&run.best.to_matrices())?)]
        }
        Plan::Verify { matrices, expected, tolerance } => {
            let report = verify_strategy_set(matrices, expected, *tolerance).map_err(runtime)?;
            if !report.pass {
                failure = Some(CliError::Runtime(format!(
                    "max deviation {:.3e} exceeds tolerance {tolerance:e}",
                    report.max_abs_deviation
                )));
            }
            vec![artifact("verify.json", json(&report)?)]
        }
        Plan::Grover { spec, iterations } => {
            let report = grover_search(spec, *iterations, seed).map_err(runtime)?;
            vec![artifact("grover.json", json(&report)?)]
        }
        Plan::Pipeline { strategies, data, f, rounds } => {
            let log = pipeline_rounds(strategies, data, f, seed, *rounds).map_err(runtime)?;
            let summary = json!({
                "rounds": rounds,
                "seed": seed,
                "data": data,
                "expected": winner_distribution(&strategies.0),
                "frequencies": frequencies(log.iter().map(|r| r.winner), *rounds),
            });
            vec![artifact("pipeline.csv", pipeline_csv(&log)?), artifact("pipeline.json", json(&summary)?)]
        }
    };
    Ok(Outcome { artifacts, failure })
}
