//! Function inversion by Grover search with a configurable oracle.
//!
//! The oracle computes `f(x)` into a work register, compares it with a
//! target register loaded with `y` using a reversible bit-string comparator,
//! kicks a phase back when the comparator reports equality, and then
//! uncomputes everything so that only the sign of `|x⟩` changes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::arbiter::{play_round, GameRoundResult, PlayerData, RoundSampler, DATA_WIDTH};
use crate::error::{Error, Result};
use crate::ga::StrategySet;
use crate::par;
use crate::qstate::{bits_to_string, extract_bits, parse_bits, Gate, RngSeed, StateVector, MAX_QUBITS};

/// Largest search register accepted by [`grover_search`].
pub const MAX_SEARCH_QUBITS: usize = 12;
/// Largest input width for the comparator reversibility check.
pub const MAX_COMPARATOR_BITS: usize = 6;
/// Fresh Grover runs attempted by the pipeline before giving up.
pub const PIPELINE_RETRIES: usize = 8;

/// Lookup table of `f : {0,1}^n_in → {0,1}^n_out`, indexed by `x`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TruthTableDoc", into = "TruthTableDoc")]
pub struct TruthTable {
    n_in: usize,
    n_out: usize,
    table: Vec<usize>,
}

/// On-disk form: `{"n_in": .., "n_out": .., "table": ["0101", ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthTableDoc {
    pub n_in: usize,
    pub n_out: usize,
    pub table: Vec<String>,
}

impl TryFrom<TruthTableDoc> for TruthTable {
    type Error = Error;

    fn try_from(doc: TruthTableDoc) -> Result<Self> {
        if doc.table.len() != 1usize.checked_shl(doc.n_in as u32).unwrap_or(0) {
            return Err(Error::Size(format!("table has {} entries, expected 2^{}", doc.table.len(), doc.n_in)));
        }
        let mut table = Vec::with_capacity(doc.table.len());
        for (x, s) in doc.table.iter().enumerate() {
            if s.len() != doc.n_out {
                return Err(Error::Size(format!("table[{x}] = {s:?} is not {} bits", doc.n_out)));
            }
            table.push(parse_bits(s)?);
        }
        TruthTable::new(doc.n_in, doc.n_out, table)
    }
}

impl From<TruthTable> for TruthTableDoc {
    fn from(t: TruthTable) -> Self {
        TruthTableDoc {
            n_in: t.n_in,
            n_out: t.n_out,
            table: t.table.iter().map(|&v| bits_to_string(v, t.n_out)).collect(),
        }
    }
}

impl TruthTable {
    pub fn new(n_in: usize, n_out: usize, table: Vec<usize>) -> Result<Self> {
        if !(1..=MAX_SEARCH_QUBITS).contains(&n_in) || !(1..=MAX_SEARCH_QUBITS).contains(&n_out) {
            return Err(Error::Size(format!(
                "widths n_in = {n_in}, n_out = {n_out} must lie in 1..={MAX_SEARCH_QUBITS}"
            )));
        }
        if table.len() != 1 << n_in {
            return Err(Error::Size(format!("table has {} entries, expected {}", table.len(), 1 << n_in)));
        }
        if let Some(x) = table.iter().position(|&v| v >> n_out != 0) {
            return Err(Error::Size(format!("table[{x}] does not fit in {n_out} bits")));
        }
        Ok(TruthTable { n_in, n_out, table })
    }

    pub fn from_fn<F: Fn(usize) -> usize>(n_in: usize, n_out: usize, f: F) -> Result<Self> {
        let mask = (1usize << n_out) - 1;
        Self::new(n_in, n_out, (0..1usize << n_in).map(|x| f(x) & mask).collect())
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_fn(n, n, |x| x)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn eval(&self, x: usize) -> usize {
        self.table[x]
    }

    pub fn preimages(&self, y: usize) -> Vec<usize> {
        (0..self.table.len()).filter(|&x| self.table[x] == y).collect()
    }
}

/// Comparator output bits: `(1,0)` for a > b, `(0,1)` for a < b, `(0,0)`
/// for equality. `(1,1)` never occurs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparatorResult {
    pub o1: u8,
    pub o2: u8,
}

impl ComparatorResult {
    pub const GREATER: Self = ComparatorResult { o1: 1, o2: 0 };
    pub const LESS: Self = ComparatorResult { o1: 0, o2: 1 };
    pub const EQUAL: Self = ComparatorResult { o1: 0, o2: 0 };

    fn of(a: usize, b: usize) -> Self {
        match a.cmp(&b) {
            std::cmp::Ordering::Greater => Self::GREATER,
            std::cmp::Ordering::Less => Self::LESS,
            std::cmp::Ordering::Equal => Self::EQUAL,
        }
    }

    fn code(self) -> usize {
        usize::from(self.o1) << 1 | usize::from(self.o2)
    }
}

/// Compares two equal-length bit strings as unsigned integers, leftmost bit
/// most significant.
pub fn qbsc_compare(a: &str, b: &str) -> Result<ComparatorResult> {
    if a.len() != b.len() {
        return Err(Error::Size(format!("cannot compare {}-bit and {}-bit strings", a.len(), b.len())));
    }
    Ok(ComparatorResult::of(parse_bits(a)?, parse_bits(b)?))
}

/// Qubit positions used by the reversible comparator inside a register.
#[derive(Clone, Debug)]
struct ComparatorWires {
    a: Vec<usize>,
    b: Vec<usize>,
    o1: usize,
    o2: usize,
}

impl ComparatorWires {
    /// `|a⟩|b⟩|o1 o2⟩ → |a⟩|b⟩|o1 ⊕ [a>b], o2 ⊕ [a<b]⟩`. Self-inverse.
    fn apply(&self, state: &mut StateVector) -> Result<()> {
        let (m1, m2) = (state.mask(self.o1), state.mask(self.o2));
        let n = state.n_qubits();
        state.apply_basis_map(|i| {
            let r = ComparatorResult::of(extract_bits(n, i, &self.a), extract_bits(n, i, &self.b));
            let mut j = i;
            if r.o1 == 1 {
                j ^= m1;
            }
            if r.o2 == 1 {
                j ^= m2;
            }
            j
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComparatorCheck {
    pub n: usize,
    pub pass: bool,
    /// Distinct outputs over all `2^{2n}` inputs with cleared outputs.
    pub distinct_outputs: usize,
    /// Output bits agree with [`qbsc_compare`] on every pair.
    pub matches_compare: bool,
}

/// Runs the comparator on every `(a, b)` pair with cleared output bits and
/// checks that the map is injective and agrees with integer comparison.
pub fn qbsc_unitary_check(n: usize) -> Result<ComparatorCheck> {
    if !(1..=MAX_COMPARATOR_BITS).contains(&n) {
        return Err(Error::Size(format!("comparator width {n} outside 1..={MAX_COMPARATOR_BITS}")));
    }
    let total = 2 * n + 2;
    let wires = ComparatorWires { a: (0..n).collect(), b: (n..2 * n).collect(), o1: 2 * n, o2: 2 * n + 1 };
    let mut seen = vec![false; 1 << total];
    let mut distinct = 0;
    let mut matches = true;
    for a in 0..1usize << n {
        for b in 0..1usize << n {
            let input = (a << n | b) << 2;
            let mut s = StateVector::basis(total, input)?;
            wires.apply(&mut s)?;
            let out = s.amplitudes().iter().position(|z| z.norm_sqr() > 0.5).expect("basis state stays a basis state");
            if !seen[out] {
                seen[out] = true;
                distinct += 1;
            }
            let expect = qbsc_compare(&bits_to_string(a, n), &bits_to_string(b, n))?;
            matches &= out >> 2 == a << n | b && out & 3 == expect.code();
        }
    }
    Ok(ComparatorCheck {
        n,
        pass: matches && distinct == 1 << (2 * n),
        distinct_outputs: distinct,
        matches_compare: matches,
    })
}

/// Function and target whose preimages the oracle marks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleSpec {
    pub f: TruthTable,
    pub y: usize,
}

impl OracleSpec {
    pub fn new(f: TruthTable, y: &str) -> Result<Self> {
        if y.len() != f.n_out() {
            return Err(Error::Size(format!("target {y:?} is not {} bits", f.n_out())));
        }
        Ok(OracleSpec { y: parse_bits(y)?, f })
    }
}

/// Phase oracle `|x⟩ → (−1)^{[f(x) = y]} |x⟩` on the search register.
#[derive(Clone, Debug)]
pub struct Oracle {
    spec: OracleSpec,
    marked: Vec<bool>,
}

/// Register layout of the full comparator-based oracle circuit.
#[derive(Clone, Debug)]
pub struct OracleLayout {
    pub x: Vec<usize>,
    pub work: Vec<usize>,
    pub target: Vec<usize>,
    pub o1: usize,
    pub o2: usize,
    pub phase: usize,
}

impl OracleLayout {
    pub fn new(n_in: usize, n_out: usize) -> Self {
        let x: Vec<usize> = (0..n_in).collect();
        let work: Vec<usize> = (n_in..n_in + n_out).collect();
        let target: Vec<usize> = (n_in + n_out..n_in + 2 * n_out).collect();
        let base = n_in + 2 * n_out;
        OracleLayout { x, work, target, o1: base, o2: base + 1, phase: base + 2 }
    }

    pub fn total_qubits(&self) -> usize {
        self.phase + 1
    }

    pub fn ancillas(&self) -> Vec<usize> {
        let mut v = self.work.clone();
        v.extend(&self.target);
        v.extend([self.o1, self.o2, self.phase]);
        v
    }
}

impl Oracle {
    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn is_marked(&self, x: usize) -> bool {
        self.marked[x]
    }

    pub fn marked_count(&self) -> usize {
        self.marked.iter().filter(|&&m| m).count()
    }

    /// Phase-flip form on an `n_in`-qubit search register.
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        if state.n_qubits() != self.spec.f.n_in() {
            return Err(Error::Size(format!(
                "oracle acts on {} qubits, state has {}",
                self.spec.f.n_in(),
                state.n_qubits()
            )));
        }
        state.apply_phase_flip(|x| self.marked[x]);
        Ok(())
    }

    /// Full construction on a register laid out as [`OracleLayout`]:
    /// load `y`, compute `f`, compare, kick back a phase on equality,
    /// uncompute. Ancillas must start (and end) in `|0…0⟩`.
    pub fn apply_circuit(&self, state: &mut StateVector, layout: &OracleLayout) -> Result<()> {
        let f = &self.spec.f;
        let n_out = f.n_out();
        let x = layout.x.clone();
        let work_masks: Vec<usize> = layout.work.iter().map(|&q| state.mask(q)).collect();
        let n = state.n_qubits();
        let uf = |state: &mut StateVector| -> Result<()> {
            state.apply_basis_map(|i| {
                let fx = f.eval(extract_bits(n, i, &x));
                (0..n_out).fold(i, |j, k| if fx >> (n_out - 1 - k) & 1 == 1 { j ^ work_masks[k] } else { j })
            })
        };
        let load_target = |state: &mut StateVector| -> Result<()> {
            for (k, &q) in layout.target.iter().enumerate() {
                if self.spec.y >> (n_out - 1 - k) & 1 == 1 {
                    state.apply_single(&Gate::pauli_x(), q)?;
                }
            }
            Ok(())
        };
        let comparator =
            ComparatorWires { a: layout.work.clone(), b: layout.target.clone(), o1: layout.o1, o2: layout.o2 };

        load_target(state)?;
        uf(state)?;
        comparator.apply(state)?;
        // phase ancilla in |−⟩, flipped when (O1, O2) = (0, 0)
        state.apply_single(&Gate::pauli_x(), layout.phase)?;
        state.apply_single(&Gate::hadamard(), layout.phase)?;
        let (m1, m2, mp) = (state.mask(layout.o1), state.mask(layout.o2), state.mask(layout.phase));
        state.apply_basis_map(|i| if i & (m1 | m2) == 0 { i ^ mp } else { i })?;
        state.apply_single(&Gate::hadamard(), layout.phase)?;
        state.apply_single(&Gate::pauli_x(), layout.phase)?;
        comparator.apply(state)?;
        uf(state)?;
        load_target(state)
    }
}

/// Builds the oracle for `spec`. When the full comparator circuit fits in
/// the simulator, it is run once on the uniform superposition and its
/// phase pattern is cross-checked against `f(x) = y`.
pub fn build_oracle(spec: &OracleSpec) -> Result<Oracle> {
    let f = &spec.f;
    let marked: Vec<bool> = (0..1usize << f.n_in()).map(|x| f.eval(x) == spec.y).collect();
    let oracle = Oracle { spec: spec.clone(), marked };

    let layout = OracleLayout::new(f.n_in(), f.n_out());
    if layout.total_qubits() <= MAX_QUBITS {
        let mut state = StateVector::new(layout.total_qubits())?;
        for &q in &layout.x {
            state.apply_single(&Gate::hadamard(), q)?;
        }
        oracle.apply_circuit(&mut state, &layout)?;
        let amp = 1.0 / ((1usize << f.n_in()) as f64).sqrt();
        let shift = layout.total_qubits() - f.n_in();
        for x in 0..1usize << f.n_in() {
            let want = if oracle.marked[x] { -amp } else { amp };
            let got = state.amplitude(x << shift);
            if (got.re - want).abs() > 1e-9 || got.im.abs() > 1e-9 {
                return Err(Error::Gate(format!("oracle circuit disagrees with f at x = {x}")));
            }
        }
    }
    Ok(oracle)
}

/// Number of Grover iterations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Iterations {
    /// `floor((π/4)·sqrt(N/M))` for `M` marked states out of `N`.
    Auto,
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroverReport {
    pub n_in: usize,
    pub marked: usize,
    pub iterations: usize,
    /// Exact probability of measuring a marked state.
    pub success_probability: f64,
    pub sample: String,
    pub sample_is_solution: bool,
}

fn hadamard_all(state: &mut StateVector) -> Result<()> {
    for q in 0..state.n_qubits() {
        state.apply_single(&Gate::hadamard(), q)?;
    }
    Ok(())
}

/// Reflection about the uniform superposition, `2|s⟩⟨s| − I`.
pub fn apply_diffusion(state: &mut StateVector) -> Result<()> {
    hadamard_all(state)?;
    state.apply_phase_flip(|i| i != 0);
    hadamard_all(state)
}

pub fn auto_iterations(n: usize, marked: usize) -> usize {
    ((PI / 4.0) * (n as f64 / marked as f64).sqrt()).floor() as usize
}

/// Prepares the uniform superposition, applies the chosen number of
/// oracle + diffusion rounds and measures once.
pub fn grover_search(spec: &OracleSpec, iterations: Iterations, seed: RngSeed) -> Result<GroverReport> {
    let n_in = spec.f.n_in();
    if n_in > MAX_SEARCH_QUBITS {
        return Err(Error::Size(format!("search register of {n_in} qubits exceeds {MAX_SEARCH_QUBITS}")));
    }
    search_with(&build_oracle(spec)?, iterations, seed)
}

/// [`grover_search`] with a prebuilt oracle.
pub fn search_with(oracle: &Oracle, iterations: Iterations, seed: RngSeed) -> Result<GroverReport> {
    let spec = oracle.spec();
    let n_in = spec.f.n_in();
    let marked = oracle.marked_count();
    let k = match iterations {
        Iterations::Fixed(k) => k,
        Iterations::Auto if marked == 0 => {
            return Err(Error::NoSolution(format!("no x has f(x) = {}", bits_to_string(spec.y, spec.f.n_out()))))
        }
        Iterations::Auto => auto_iterations(1 << n_in, marked),
    };
    let mut state = StateVector::new(n_in)?;
    hadamard_all(&mut state)?;
    for _ in 0..k {
        oracle.apply(&mut state)?;
        apply_diffusion(&mut state)?;
    }
    let success_probability =
        state.amplitudes().iter().enumerate().filter(|(x, _)| oracle.is_marked(*x)).map(|(_, a)| a.norm_sqr()).sum();
    let all: Vec<usize> = (0..n_in).collect();
    let x = state.sample_with(&all, &mut seed.rng())?;
    Ok(GroverReport {
        n_in,
        marked,
        iterations: k,
        success_probability,
        sample: bits_to_string(x, n_in),
        sample_is_solution: oracle.is_marked(x),
    })
}

/// Finds `x` with `f(x) = y`, rerunning the search (attempt `r` seeded with
/// `seed.derive(r)`) until the classical check passes.
pub fn invert_function(f: &TruthTable, y: &str, seed: RngSeed, max_retries: usize) -> Result<String> {
    let spec = OracleSpec::new(f.clone(), y)?;
    if f.preimages(spec.y).is_empty() {
        return Err(Error::NoSolution(format!("no x has f(x) = {y}")));
    }
    invert_with(&build_oracle(&spec)?, seed, max_retries)
}

fn invert_with(oracle: &Oracle, seed: RngSeed, max_retries: usize) -> Result<String> {
    let spec = oracle.spec();
    let y = bits_to_string(spec.y, spec.f.n_out());
    if oracle.marked_count() == 0 {
        return Err(Error::NoSolution(format!("no x has f(x) = {y}")));
    }
    for attempt in 0..=max_retries {
        let report = search_with(oracle, Iterations::Auto, seed.derive(attempt as u64))?;
        let x = parse_bits(&report.sample)?;
        // classical recheck, independent of the oracle's marking
        if spec.f.eval(x) == spec.y {
            return Ok(report.sample);
        }
    }
    Err(Error::SearchFailure(format!("no preimage of {y} found in {} attempts", max_retries + 1)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PipelineResult {
    pub winner: usize,
    pub id_bus: String,
    pub y: String,
    pub x: String,
}

fn check_pipeline_width(f: &TruthTable) -> Result<()> {
    if f.n_out() != DATA_WIDTH {
        return Err(Error::Size(format!("function output width {} must equal the data width {DATA_WIDTH}", f.n_out())));
    }
    Ok(())
}

fn tag_winner(winner: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NoSolution(m) => Error::NoSolution(format!("winner {winner}: {m}")),
        Error::SearchFailure(m) => Error::SearchFailure(format!("winner {winner}: {m}")),
        other => other,
    }
}

/// Plays one arbitration round and inverts `f` on the winner's data bus.
/// The game draws from `seed.derive(0)`, the search from `seed.derive(1)`.
pub fn pipeline_round(
    strategies: &StrategySet,
    data: &PlayerData,
    f: &TruthTable,
    seed: RngSeed,
) -> Result<PipelineResult> {
    check_pipeline_width(f)?;
    let round = play_round(&strategies.0, data, seed.derive(0))?;
    let x = invert_function(f, &round.data_bus, seed.derive(1), PIPELINE_RETRIES).map_err(tag_winner(round.winner))?;
    Ok(PipelineResult { winner: round.winner, id_bus: round.id_bus, y: round.data_bus, x })
}

/// Runs `rounds` pipeline rounds; round `r` equals
/// `pipeline_round(.., seed.derive(r))`. The game is simulated once and one
/// oracle is built per distinct data-bus value.
pub fn pipeline_rounds(
    strategies: &StrategySet,
    data: &PlayerData,
    f: &TruthTable,
    seed: RngSeed,
    rounds: usize,
) -> Result<Vec<PipelineResult>> {
    check_pipeline_width(f)?;
    let sampler = RoundSampler::new(&strategies.0, data)?;
    let games: Vec<GameRoundResult> = par::map_range(rounds, |r| sampler.sample(seed.derive(r as u64).derive(0)))
        .into_iter()
        .collect::<Result<_>>()?;

    let mut oracles: BTreeMap<String, Result<Oracle>> = BTreeMap::new();
    for g in &games {
        oracles.entry(g.data_bus.clone()).or_insert_with(|| {
            let spec = OracleSpec::new(f.clone(), &g.data_bus)?;
            build_oracle(&spec)
        });
    }

    par::map_range(rounds, |r| {
        let g = &games[r];
        let oracle = oracles[&g.data_bus].as_ref().map_err(|e| e.clone())?;
        let x = invert_with(oracle, seed.derive(r as u64).derive(1), PIPELINE_RETRIES).map_err(tag_winner(g.winner))?;
        Ok(PipelineResult { winner: g.winner, id_bus: g.id_bus.clone(), y: g.data_bus.clone(), x })
    })
    .into_iter()
    .collect()
}
