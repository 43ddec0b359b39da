//! Genetic-algorithm search for strategy sets whose winner distribution
//! matches a priority vector.
//!
//! A chromosome holds three 12-bit fixed-point angles `(θ, φ, ψ)` per
//! player, most significant bit first, players 1..4 in order. Operators are
//! tournament selection, single-point crossover, per-bit mutation and
//! elitism; randomness comes from one seeded stream consumed sequentially,
//! while fitness evaluation of a generation may run in parallel.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arbiter::{winner_distribution, WinnerDistribution, PLAYERS};
use crate::duel::{gate_from_angles, StrategyAngles};
use crate::error::{Error, Result};
use crate::par;
use crate::qstate::{Amplitude, Gate, RngSeed};

pub const FIELD_BITS: usize = 12;
pub const ANGLES_PER_PLAYER: usize = 3;
pub const CHROMOSOME_BITS: usize = FIELD_BITS * ANGLES_PER_PLAYER * PLAYERS;
const LEVELS: f64 = (1 << FIELD_BITS) as f64;

/// Target win probability per player, each in `[0, 1]`. Not required to
/// sum to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; PLAYERS]", into = "[f64; PLAYERS]")]
pub struct PriorityVector([f64; PLAYERS]);

impl PriorityVector {
    pub fn new(eps: [f64; PLAYERS]) -> Result<Self> {
        for (k, &e) in eps.iter().enumerate() {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::Parameter(format!("eps[{k}] out of [0,1]")));
            }
        }
        Ok(PriorityVector(eps))
    }

    pub fn values(&self) -> &[f64; PLAYERS] {
        &self.0
    }
}

impl TryFrom<[f64; PLAYERS]> for PriorityVector {
    type Error = Error;

    fn try_from(eps: [f64; PLAYERS]) -> Result<Self> {
        PriorityVector::new(eps)
    }
}

impl From<PriorityVector> for [f64; PLAYERS] {
    fn from(p: PriorityVector) -> Self {
        p.0
    }
}

/// Fixed-length genotype; every bit pattern decodes to a valid strategy set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chromosome {
    bits: Vec<bool>,
}

impl Chromosome {
    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        if bits.len() != CHROMOSOME_BITS {
            return Err(Error::Size(format!("chromosome has {} bits, expected {CHROMOSOME_BITS}", bits.len())));
        }
        Ok(Chromosome { bits })
    }

    pub fn zeros() -> Self {
        Chromosome { bits: vec![false; CHROMOSOME_BITS] }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Chromosome { bits: (0..CHROMOSOME_BITS).map(|_| rng.gen()).collect() }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Raw 12-bit value of `field` (player-major, then θ, φ, ψ).
    pub fn field(&self, field: usize) -> u16 {
        self.bits[field * FIELD_BITS..(field + 1) * FIELD_BITS].iter().fold(0u16, |acc, &b| acc << 1 | u16::from(b))
    }

    pub fn set_field(&mut self, field: usize, value: u16) {
        assert!(value < 1 << FIELD_BITS, "field value {value} exceeds 12 bits");
        for j in 0..FIELD_BITS {
            self.bits[field * FIELD_BITS + j] = value >> (FIELD_BITS - 1 - j) & 1 == 1;
        }
    }

    /// Quantizes angles to the nearest representable level.
    pub fn encode(angles: &[StrategyAngles; PLAYERS]) -> Result<Self> {
        let mut c = Chromosome::zeros();
        for (k, a) in angles.iter().enumerate() {
            a.validate()?;
            for (slot, (v, span)) in [(a.theta, PI), (a.phi, TAU), (a.psi, TAU)].into_iter().enumerate() {
                let level = (v / span * LEVELS).round().min(LEVELS - 1.0) as u16;
                c.set_field(k * ANGLES_PER_PLAYER + slot, level);
            }
        }
        Ok(c)
    }

    /// Angles `span · v / 4096`: θ spans π, φ and ψ span 2π.
    pub fn angles(&self) -> [StrategyAngles; PLAYERS] {
        std::array::from_fn(|k| {
            let f = |slot: usize, span: f64| span * f64::from(self.field(k * ANGLES_PER_PLAYER + slot)) / LEVELS;
            StrategyAngles { theta: f(0, PI), phi: f(1, TAU), psi: f(2, TAU) }
        })
    }
}

/// Four strategy unitaries, player 1 first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrategySet(pub [Gate; PLAYERS]);

impl StrategySet {
    pub fn identity() -> Self {
        StrategySet([Gate::identity(); PLAYERS])
    }

    pub fn hadamard() -> Self {
        StrategySet([Gate::hadamard(); PLAYERS])
    }

    pub fn gates(&self) -> &[Gate; PLAYERS] {
        &self.0
    }

    pub fn to_matrices(&self) -> StrategyMatrices {
        StrategyMatrices { players: self.0.map(|g| g.matrix().map(|row| row.map(|z| [z.re, z.im]))) }
    }
}

/// Builds the strategy set encoded by a chromosome.
pub fn decode(chromosome: &Chromosome) -> StrategySet {
    StrategySet(chromosome.angles().map(|a| gate_from_angles(a.theta, a.phi, a.psi)))
}

/// Serialized strategy set: per player a 2×2 matrix of `[re, im]` pairs,
/// row by row. Entries may be rounded and need not be exactly unitary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyMatrices {
    pub players: [[[[f64; 2]; 2]; 2]; PLAYERS],
}

impl StrategyMatrices {
    fn complex(&self, k: usize) -> [[Amplitude; 2]; 2] {
        self.players[k].map(|row| row.map(|[re, im]| Amplitude::new(re, im)))
    }

    /// Accepts the matrices only if each is unitary within 1e-10.
    pub fn to_strategy_set(&self) -> Result<StrategySet> {
        let gates: Vec<Gate> = (0..PLAYERS)
            .map(|k| Gate::new(self.complex(k)).map_err(|e| Error::Data(format!("player {}: {e}", k + 1))))
            .collect::<Result<_>>()?;
        Ok(StrategySet(gates.try_into().expect("four gates")))
    }

    /// Projects each matrix to its nearest unitary. Matrices farther than
    /// [`MAX_PROJECTION_DISTANCE`] from every unitary are rejected.
    pub fn project(&self) -> Result<(StrategySet, [f64; PLAYERS])> {
        let mut gates = [Gate::identity(); PLAYERS];
        let mut dists = [0.0; PLAYERS];
        for k in 0..PLAYERS {
            let (g, d) =
                Gate::nearest_unitary(self.complex(k)).map_err(|e| Error::Data(format!("player {}: {e}", k + 1)))?;
            if d > MAX_PROJECTION_DISTANCE {
                return Err(Error::Data(format!("player {} matrix is {d:.4} away from the nearest unitary", k + 1)));
            }
            gates[k] = g;
            dists[k] = d;
        }
        Ok((StrategySet(gates), dists))
    }
}

/// Largest entrywise correction accepted when re-unitarizing input matrices.
pub const MAX_PROJECTION_DISTANCE: f64 = 0.01;

/// L1 distance between the set's winner distribution and the target.
pub fn fitness(candidate: &StrategySet, target: &PriorityVector) -> f64 {
    let p = winner_distribution(&candidate.0);
    p.0.iter().zip(target.0).map(|(p, e)| (p - e).abs()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub mutation_rate: f64,
    pub crossover_rate: f64,
    pub elitism: usize,
    pub tournament_size: usize,
    pub seed: RngSeed,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 100,
            generations: 1000,
            mutation_rate: 1.0 / CHROMOSOME_BITS as f64,
            crossover_rate: 0.9,
            elitism: 1,
            tournament_size: 2,
            seed: RngSeed(0),
        }
    }
}

impl GaConfig {
    pub fn with_seed(seed: u64) -> Self {
        GaConfig { seed: RngSeed(seed), ..GaConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Parameter(format!("population {} < 2", self.population)));
        }
        if self.elitism >= self.population {
            return Err(Error::Parameter(format!(
                "elitism {} must be below population {}",
                self.elitism, self.population
            )));
        }
        if self.tournament_size == 0 {
            return Err(Error::Parameter("tournament size must be ≥ 1".into()));
        }
        for (name, r) in [("mutation_rate", self.mutation_rate), ("crossover_rate", self.crossover_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Parameter(format!("{name} = {r} outside [0,1]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub best: StrategySet,
    pub chromosome: Chromosome,
    pub achieved: WinnerDistribution,
    pub fitness: f64,
    /// Best fitness in the population; entry 0 is the initial population,
    /// entry `g` the population after generation `g`.
    pub fitness_trace: Vec<f64>,
}

fn tournament<R: Rng + ?Sized>(fit: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..fit.len());
    for _ in 1..size {
        let challenger = rng.gen_range(0..fit.len());
        if fit[challenger] < fit[best] {
            best = challenger;
        }
    }
    best
}

/// Index order by ascending fitness, ties broken by index.
fn ranking(fit: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fit.len()).collect();
    order.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]).then(a.cmp(&b)));
    order
}

/// Runs the genetic algorithm. Identical `(target, config)` give identical
/// results with or without the `parallel` feature.
pub fn evolve(target: &PriorityVector, config: &GaConfig) -> Result<Evolution> {
    config.validate()?;
    let mut rng = config.seed.rng();
    let evaluate = |pop: &[Chromosome]| par::map_slice(pop, |c| fitness(&decode(c), target));

    let mut population: Vec<Chromosome> = (0..config.population).map(|_| Chromosome::random(&mut rng)).collect();
    let mut fit = evaluate(&population);
    let mut trace = Vec::with_capacity(config.generations + 1);
    trace.push(fit.iter().copied().fold(f64::INFINITY, f64::min));

    for _ in 0..config.generations {
        let order = ranking(&fit);
        let mut next: Vec<Chromosome> = order[..config.elitism].iter().map(|&i| population[i].clone()).collect();
        while next.len() < config.population {
            let pa = &population[tournament(&fit, config.tournament_size, &mut rng)];
            let pb = &population[tournament(&fit, config.tournament_size, &mut rng)];
            let (mut ca, mut cb) = if rng.gen_bool(config.crossover_rate) {
                let point = rng.gen_range(1..CHROMOSOME_BITS);
                crossover(pa, pb, point)
            } else {
                (pa.clone(), pb.clone())
            };
            mutate(&mut ca, config.mutation_rate, &mut rng);
            mutate(&mut cb, config.mutation_rate, &mut rng);
            next.push(ca);
            if next.len() < config.population {
                next.push(cb);
            }
        }
        population = next;
        fit = evaluate(&population);
        trace.push(fit.iter().copied().fold(f64::INFINITY, f64::min));
    }

    let best_idx = ranking(&fit)[0];
    let chromosome = population.swap_remove(best_idx);
    let best = decode(&chromosome);
    Ok(Evolution {
        achieved: winner_distribution(&best.0),
        fitness: fit[best_idx],
        best,
        chromosome,
        fitness_trace: trace,
    })
}

/// Single-point crossover: children take `[..point]` from one parent and
/// `[point..]` from the other.
pub fn crossover(a: &Chromosome, b: &Chromosome, point: usize) -> (Chromosome, Chromosome) {
    let mut ca = a.bits[..point].to_vec();
    ca.extend_from_slice(&b.bits[point..]);
    let mut cb = b.bits[..point].to_vec();
    cb.extend_from_slice(&a.bits[point..]);
    (Chromosome { bits: ca }, Chromosome { bits: cb })
}

fn mutate<R: Rng + ?Sized>(c: &mut Chromosome, rate: f64, rng: &mut R) {
    if rate <= 0.0 {
        return;
    }
    for bit in c.bits.iter_mut() {
        if rng.gen_bool(rate) {
            *bit = !*bit;
        }
    }
}

/// Outcome of checking a strategy set against an expected distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub tolerance: f64,
    pub expected: [f64; PLAYERS],
    pub achieved: [f64; PLAYERS],
    pub deviations: [f64; PLAYERS],
    pub max_abs_deviation: f64,
    /// Entrywise correction applied to each matrix when re-unitarizing.
    pub projection_distance: [f64; PLAYERS],
}

/// Re-unitarizes the matrices, evaluates the winner distribution and
/// compares it componentwise with `expected`.
pub fn verify_strategy_set(set: &StrategyMatrices, expected: &WinnerDistribution, tol: f64) -> Result<VerifyReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Parameter(format!("tolerance {tol} must be positive")));
    }
    let (gates, projection_distance) = set.project()?;
    let achieved = winner_distribution(&gates.0);
    let deviations = achieved.deviations(&expected.0);
    let max_abs_deviation = deviations.iter().map(|d| d.abs()).fold(0.0, f64::max);
    Ok(VerifyReport {
        pass: max_abs_deviation <= tol,
        tolerance: tol,
        expected: expected.0,
        achieved: achieved.0,
        deviations,
        max_abs_deviation,
        projection_distance,
    })
}

/// Reference strategy sets (four-decimal matrices) with the priority vector
/// they were searched for and their expected winner distribution.
pub mod reference {
    use super::*;

    #[derive(Clone, Debug)]
    pub struct ReferenceSet {
        pub name: &'static str,
        pub target: [f64; PLAYERS],
        pub reported: [f64; PLAYERS],
        pub matrices: StrategyMatrices,
    }

    /// Builds `[[α, β], [−β*, α*]]` from the given top row and checks it
    /// against the given bottom row.
    fn su2(top: [[f64; 2]; 2], bottom: [[f64; 2]; 2]) -> [[[f64; 2]; 2]; 2] {
        let [[ar, ai], [br, bi]] = top;
        debug_assert_eq!(bottom, [[-br, bi], [ar, -ai]]);
        [top, bottom]
    }

    pub fn descending_a() -> ReferenceSet {
        ReferenceSet {
            name: "descending-a",
            target: [0.4, 0.3, 0.2, 0.1],
            reported: [0.4010, 0.2990, 0.1935, 0.1065],
            matrices: StrategyMatrices {
                players: [
                    su2([[-0.0038, -0.4920], [0.8361, 0.2427]], [[-0.8361, 0.2427], [-0.0038, 0.4920]]),
                    su2([[-0.2486, -0.7967], [0.5318, -0.1438]], [[-0.5318, -0.1438], [-0.2486, 0.7967]]),
                    su2([[-0.1978, 0.0281], [-0.3488, 0.9157]], [[0.3488, 0.9157], [-0.1978, -0.0281]]),
                    su2([[-0.7550, 0.4130], [0.1562, -0.4847]], [[-0.1562, -0.4847], [-0.7550, -0.4130]]),
                ],
            },
        }
    }

    pub fn descending_b() -> ReferenceSet {
        ReferenceSet {
            name: "descending-b",
            target: [0.4, 0.3, 0.2, 0.1],
            reported: [0.4009, 0.2996, 0.1934, 0.1061],
            matrices: StrategyMatrices {
                players: [
                    su2([[0.1769, 0.3634], [0.8405, -0.3607]], [[-0.8405, -0.3607], [0.1769, -0.3634]]),
                    su2([[-0.7518, 0.4023], [0.3505, 0.3874]], [[-0.3505, 0.3874], [-0.7518, -0.4023]]),
                    su2([[-0.2903, 0.2477], [0.8993, -0.2138]], [[-0.8993, -0.2138], [-0.2903, -0.2477]]),
                    su2([[0.7454, -0.3901], [-0.2846, -0.4597]], [[0.2846, -0.4597], [0.7454, 0.3901]]),
                ],
            },
        }
    }

    pub fn middle_heavy() -> ReferenceSet {
        ReferenceSet {
            name: "middle-heavy",
            target: [0.15, 0.35, 0.35, 0.14],
            reported: [0.1548, 0.3496, 0.3497, 0.1459],
            matrices: StrategyMatrices {
                players: [
                    su2([[-0.2432, 0.8720], [-0.4180, 0.0762]], [[0.4180, 0.0762], [-0.2432, -0.8720]]),
                    su2([[-0.1250, -0.1227], [-0.9785, 0.1093]], [[0.9785, 0.1093], [-0.1250, 0.1227]]),
                    su2([[0.3280, -0.8451], [0.3140, 0.2821]], [[-0.3140, 0.2821], [0.3280, 0.8451]]),
                    su2([[0.6939, 0.1171], [0.6621, -0.2578]], [[-0.6621, -0.2578], [0.6939, -0.1171]]),
                ],
            },
        }
    }

    pub fn all() -> [ReferenceSet; 3] {
        [descending_a(), descending_b(), middle_heavy()]
    }

    pub fn by_name(name: &str) -> Result<ReferenceSet> {
        all()
            .into_iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::Parameter(format!("unknown reference set {name:?}")))
    }
}
