//! Strict scenario documents. Parsing rejects unknown and duplicate keys,
//! keys the mode does not use, and out-of-range values, so an accepted
//! [`Scenario`] always runs without downstream precondition errors.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::{Path, PathBuf};

use arbiter_core::arbiter::{PlayerData, WinnerDistribution, DATA_WIDTH, PLAYERS};
use arbiter_core::duel::{strategy_gate, GameModel, PayoffTable, StrategyAngles, Sweep, SweepAxis, Variant};
use arbiter_core::ga::{reference, GaConfig, PriorityVector, StrategyMatrices, StrategySet};
use arbiter_core::grover::{Iterations, OracleSpec, TruthTable, TruthTableDoc, MAX_SEARCH_QUBITS};
use arbiter_core::qstate::RngSeed;
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Duel,
    Surface,
    Arbiter,
    Optimize,
    Verify,
    Grover,
    Pipeline,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Duel => "duel",
            Mode::Surface => "surface",
            Mode::Arbiter => "arbiter",
            Mode::Optimize => "optimize",
            Mode::Verify => "verify",
            Mode::Grover => "grover",
            Mode::Pipeline => "pipeline",
        }
    }

    fn uses_seed(self) -> bool {
        matches!(self, Mode::Arbiter | Mode::Optimize | Mode::Grover | Mode::Pipeline)
    }

    /// Keys accepted besides `mode` and `out`.
    fn fields(self) -> &'static [&'static str] {
        match self {
            Mode::Duel => &["model", "gamma", "player_a", "player_b", "payoff"],
            Mode::Surface => &["model", "gamma", "player_a", "player_b", "payoff", "sweep"],
            Mode::Arbiter => &["seed", "strategies", "angles", "data", "rounds"],
            Mode::Optimize => &["seed", "eps", "ga"],
            Mode::Verify => &["strategies", "expected", "tolerance"],
            Mode::Grover => &["seed", "truth_table", "y", "iterations"],
            Mode::Pipeline => &["seed", "strategies", "angles", "data", "rounds", "truth_table"],
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnglesDoc {
    theta: f64,
    phi: f64,
    psi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PayoffDoc {
    Preset(String),
    Table(PayoffTable),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepDoc {
    axis1: SweepAxis,
    axis2: SweepAxis,
    points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StrategiesDoc {
    Named(String),
    Matrices(Box<StrategyMatrices>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaDoc {
    population: Option<usize>,
    generations: Option<usize>,
    mutation_rate: Option<f64>,
    crossover_rate: Option<f64>,
    elitism: Option<usize>,
    tournament_size: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TableRef {
    Path(PathBuf),
    Inline(TruthTableDoc),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum IterationsDoc {
    Count(usize),
    Word(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    mode: Option<Mode>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    model: Option<Variant>,
    gamma: Option<f64>,
    player_a: Option<AnglesDoc>,
    player_b: Option<AnglesDoc>,
    payoff: Option<PayoffDoc>,
    sweep: Option<SweepDoc>,
    strategies: Option<StrategiesDoc>,
    angles: Option<Vec<AnglesDoc>>,
    data: Option<Vec<String>>,
    rounds: Option<usize>,
    eps: Option<Vec<f64>>,
    ga: Option<GaDoc>,
    expected: Option<Vec<f64>>,
    tolerance: Option<f64>,
    truth_table: Option<TableRef>,
    y: Option<String>,
    iterations: Option<IterationsDoc>,
}

impl RawScenario {
    fn present(&self) -> Vec<&'static str> {
        let keys = [
            ("seed", self.seed.is_some()),
            ("model", self.model.is_some()),
            ("gamma", self.gamma.is_some()),
            ("player_a", self.player_a.is_some()),
            ("player_b", self.player_b.is_some()),
            ("payoff", self.payoff.is_some()),
            ("sweep", self.sweep.is_some()),
            ("strategies", self.strategies.is_some()),
            ("angles", self.angles.is_some()),
            ("data", self.data.is_some()),
            ("rounds", self.rounds.is_some()),
            ("eps", self.eps.is_some()),
            ("ga", self.ga.is_some()),
            ("expected", self.expected.is_some()),
            ("tolerance", self.tolerance.is_some()),
            ("truth_table", self.truth_table.is_some()),
            ("y", self.y.is_some()),
            ("iterations", self.iterations.is_some()),
        ];
        keys.iter().filter(|(_, p)| *p).map(|(k, _)| *k).collect()
    }
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub mode: Mode,
    /// Output directory from the document, resolved against its location.
    pub out: Option<PathBuf>,
    pub seed: RngSeed,
    pub plan: Plan,
}

#[derive(Clone, Debug)]
pub enum Plan {
    Duel { model: GameModel, a: StrategyAngles, b: StrategyAngles, table: PayoffTable },
    Surface { model: GameModel, sweep: Sweep, fixed: (StrategyAngles, StrategyAngles), table: PayoffTable },
    Arbiter { strategies: StrategySet, data: PlayerData, rounds: usize },
    Optimize { target: PriorityVector, config: GaConfig },
    Verify { matrices: StrategyMatrices, expected: WinnerDistribution, tolerance: f64 },
    Grover { spec: OracleSpec, iterations: Iterations },
    Pipeline { strategies: StrategySet, data: PlayerData, f: TruthTable, rounds: usize },
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn field(name: &str) -> impl Fn(arbiter_core::Error) -> CliError + '_ {
    move |e| invalid(format!("{name}: {}", e.detail()))
}

fn required<T>(v: Option<T>, name: &str, mode: Mode) -> Result<T, CliError> {
    v.ok_or_else(|| invalid(format!("{name} is required for mode {mode}")))
}

/// Parses and validates a scenario for `mode`. Relative paths inside the
/// document resolve against `base`; `seed_override` replaces the
/// document's seed.
pub fn parse_scenario(text: &str, mode: Mode, base: &Path, seed_override: Option<u64>) -> Result<Scenario, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." || path.is_empty() {
            invalid(inner.to_string())
        } else {
            invalid(format!("{path}: {inner}"))
        }
    })?;
    de.end().map_err(|e| invalid(e.to_string()))?;

    if let Some(m) = raw.mode {
        if m != mode {
            return Err(invalid(format!("mode: scenario is for {m}, invoked as {mode}")));
        }
    }
    for key in raw.present() {
        if !mode.fields().contains(&key) {
            return Err(invalid(format!("{key} is not used by mode {mode}")));
        }
    }
    if seed_override.is_some() && !mode.uses_seed() {
        return Err(invalid(format!("--seed is not used by mode {mode}")));
    }

    let seed = RngSeed(seed_override.or(raw.seed).unwrap_or(0));
    let out = raw.out.as_ref().map(|p| base.join(p));
    let plan = match mode {
        Mode::Duel => {
            let model = game_model(&raw, mode)?;
            let (a, b) = duel_angles(&raw)?;
            Plan::Duel { model, a, b, table: payoff(&raw)? }
        }
        Mode::Surface => {
            let model = game_model(&raw, mode)?;
            let doc = required(raw.sweep.as_ref(), "sweep", mode)?;
            let sweep =
                Sweep { axis1: doc.axis1, axis2: doc.axis2, points: doc.points.unwrap_or(Sweep::DEFAULT_POINTS) };
            if sweep.points < 2 {
                return Err(invalid(format!("sweep.points must be at least 2, got {}", sweep.points)));
            }
            if sweep.axis1 == sweep.axis2 {
                return Err(invalid(format!("sweep.axis2: both axes are {}", sweep.axis1)));
            }
            Plan::Surface { model, sweep, fixed: duel_angles(&raw)?, table: payoff(&raw)? }
        }
        Mode::Arbiter => Plan::Arbiter {
            strategies: strategy_set(&raw, mode)?,
            data: player_data(&raw)?,
            rounds: rounds(&raw, mode)?,
        },
        Mode::Optimize => {
            let eps = required(raw.eps.as_deref(), "eps", mode)?;
            let eps: [f64; PLAYERS] =
                eps.try_into().map_err(|_| invalid(format!("eps must have {PLAYERS} entries, got {}", eps.len())))?;
            let target = PriorityVector::new(eps).map_err(|e| invalid(e.detail()))?;
            let config = ga_config(raw.ga.as_ref(), seed)?;
            Plan::Optimize { target, config }
        }
        Mode::Verify => verify_plan(&raw, mode)?,
        Mode::Grover => {
            let f = truth_table(&raw, mode, base)?;
            if f.n_in() > MAX_SEARCH_QUBITS {
                return Err(invalid(format!(
                    "truth_table: {} input bits exceed the search limit of {MAX_SEARCH_QUBITS}",
                    f.n_in()
                )));
            }
            let y = required(raw.y.as_deref(), "y", mode)?;
            let spec = OracleSpec::new(f, y).map_err(field("y"))?;
            let iterations = match &raw.iterations {
                None => Iterations::Auto,
                Some(IterationsDoc::Count(k)) => Iterations::Fixed(*k),
                Some(IterationsDoc::Word(w)) if w == "auto" => Iterations::Auto,
                Some(IterationsDoc::Word(w)) => {
                    return Err(invalid(format!("iterations: expected \"auto\" or a count, got {w:?}")))
                }
            };
            Plan::Grover { spec, iterations }
        }
        Mode::Pipeline => {
            let f = truth_table(&raw, mode, base)?;
            if f.n_out() != DATA_WIDTH {
                return Err(invalid(format!(
                    "truth_table: output width {} must equal the data width {DATA_WIDTH}",
                    f.n_out()
                )));
            }
            if f.n_in() > MAX_SEARCH_QUBITS {
                return Err(invalid(format!(
                    "truth_table: {} input bits exceed the search limit of {MAX_SEARCH_QUBITS}",
                    f.n_in()
                )));
            }
            Plan::Pipeline {
                strategies: strategy_set(&raw, mode)?,
                data: player_data(&raw)?,
                f,
                rounds: rounds(&raw, mode)?,
            }
        }
    };
    Ok(Scenario { mode, out, seed, plan })
}

fn game_model(raw: &RawScenario, mode: Mode) -> Result<GameModel, CliError> {
    let variant = required(raw.model, "model", mode)?;
    GameModel::new(variant, raw.gamma.unwrap_or(FRAC_PI_2)).map_err(field("gamma"))
}

fn angles(doc: Option<&AnglesDoc>, name: &str) -> Result<StrategyAngles, CliError> {
    match doc {
        None => Ok(StrategyAngles::default()),
        Some(d) => StrategyAngles::new(d.theta, d.phi, d.psi).map_err(field(name)),
    }
}

fn duel_angles(raw: &RawScenario) -> Result<(StrategyAngles, StrategyAngles), CliError> {
    Ok((angles(raw.player_a.as_ref(), "player_a")?, angles(raw.player_b.as_ref(), "player_b")?))
}

fn payoff(raw: &RawScenario) -> Result<PayoffTable, CliError> {
    let table = match &raw.payoff {
        None => PayoffTable::prisoners_dilemma(),
        Some(PayoffDoc::Preset(name)) => PayoffTable::preset(name).map_err(field("payoff"))?,
        Some(PayoffDoc::Table(t)) => *t,
    };
    table.validate().map_err(field("payoff"))?;
    Ok(table)
}

fn named_matrices(name: &str) -> Result<(StrategyMatrices, Option<[f64; PLAYERS]>), CliError> {
    match name {
        "identity" => Ok((StrategySet::identity().to_matrices(), Some([1.0, 0.0, 0.0, 0.0]))),
        "hadamard" => Ok((StrategySet::hadamard().to_matrices(), Some([0.25; PLAYERS]))),
        other => {
            let r = reference::by_name(other).map_err(field("strategies"))?;
            Ok((r.matrices, Some(r.reported)))
        }
    }
}

fn strategy_set(raw: &RawScenario, mode: Mode) -> Result<StrategySet, CliError> {
    match (&raw.strategies, &raw.angles) {
        (Some(_), Some(_)) => Err(invalid("strategies and angles are mutually exclusive")),
        (None, None) => Err(invalid(format!("strategies or angles is required for mode {mode}"))),
        (None, Some(list)) => {
            if list.len() != PLAYERS {
                return Err(invalid(format!("angles must have {PLAYERS} entries, got {}", list.len())));
            }
            let mut gates = StrategySet::identity().0;
            for (k, doc) in list.iter().enumerate() {
                let name = format!("angles[{k}]");
                let a = angles(Some(doc), &name)?;
                gates[k] = strategy_gate(&a).map_err(field(&name))?;
            }
            Ok(StrategySet(gates))
        }
        (Some(doc), None) => {
            let matrices = match doc {
                StrategiesDoc::Named(name) => named_matrices(name)?.0,
                StrategiesDoc::Matrices(m) => (**m).clone(),
            };
            Ok(matrices.project().map_err(field("strategies"))?.0)
        }
    }
}

fn player_data(raw: &RawScenario) -> Result<PlayerData, CliError> {
    match &raw.data {
        None => Ok(PlayerData::reference()),
        Some(v) => PlayerData::try_from(v.clone()).map_err(field("data")),
    }
}

fn rounds(raw: &RawScenario, mode: Mode) -> Result<usize, CliError> {
    match required(raw.rounds, "rounds", mode)? {
        0 => Err(invalid("rounds must be at least 1")),
        n => Ok(n),
    }
}

fn ga_config(doc: Option<&GaDoc>, seed: RngSeed) -> Result<GaConfig, CliError> {
    let d = GaConfig::default();
    let empty = GaDoc::default();
    let doc = doc.unwrap_or(&empty);
    let config = GaConfig {
        population: doc.population.unwrap_or(d.population),
        generations: doc.generations.unwrap_or(d.generations),
        mutation_rate: doc.mutation_rate.unwrap_or(d.mutation_rate),
        crossover_rate: doc.crossover_rate.unwrap_or(d.crossover_rate),
        elitism: doc.elitism.unwrap_or(d.elitism),
        tournament_size: doc.tournament_size.unwrap_or(d.tournament_size),
        seed,
    };
    config.validate().map_err(field("ga"))?;
    Ok(config)
}

fn verify_plan(raw: &RawScenario, mode: Mode) -> Result<Plan, CliError> {
    let (matrices, reported) = match required(raw.strategies.as_ref(), "strategies", mode)? {
        StrategiesDoc::Named(name) => named_matrices(name)?,
        StrategiesDoc::Matrices(m) => ((**m).clone(), None),
    };
    matrices.project().map_err(field("strategies"))?;
    let expected = match (&raw.expected, reported) {
        (Some(v), _) => {
            let arr: [f64; PLAYERS] = v
                .as_slice()
                .try_into()
                .map_err(|_| invalid(format!("expected must have {PLAYERS} entries, got {}", v.len())))?;
            if let Some(k) = arr.iter().position(|p| !(0.0..=1.0).contains(p)) {
                return Err(invalid(format!("expected[{k}] out of [0,1]")));
            }
            arr
        }
        (None, Some(r)) => r,
        (None, None) => return Err(invalid("expected is required when strategies are given as matrices")),
    };
    let tolerance = raw.tolerance.unwrap_or(2e-3);
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tolerance}")));
    }
    Ok(Plan::Verify { matrices, expected: WinnerDistribution(expected), tolerance })
}

fn truth_table(raw: &RawScenario, mode: Mode, base: &Path) -> Result<TruthTable, CliError> {
    let doc = match required(raw.truth_table.as_ref(), "truth_table", mode)? {
        TableRef::Inline(doc) => doc.clone(),
        TableRef::Path(p) => {
            let path = base.join(p);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| invalid(format!("truth_table: cannot read {}: {e}", path.display())))?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize(de)
                .map_err(|e| invalid(format!("truth_table {}: {}: {}", path.display(), e.path(), e.inner())))?
        }
    };
    TruthTable::try_from(doc).map_err(field("truth_table"))
}
