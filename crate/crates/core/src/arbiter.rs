//! Four-player access-controller game.
//!
//! Register layout (12 qubits): strategy register 0–3, identification bus
//! 4–7, data bus 8–11. Each player's strategy acts on its strategy qubit;
//! the decoder writes the one-hot winner code onto the identification bus,
//! and each player's CNOT grid copies its data string onto the data bus
//! when its identification qubit is set.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::duel::strategy_amplitudes;
use crate::error::{Error, Result};
use crate::par;
use crate::qstate::{bits_to_string, extract_bits, parse_bits, Gate, RngSeed, StateVector};

pub const PLAYERS: usize = 4;
pub const DATA_WIDTH: usize = 4;
pub const STRATEGY_QUBITS: [usize; 4] = [0, 1, 2, 3];
pub const ID_QUBITS: [usize; 4] = [4, 5, 6, 7];
pub const DATA_QUBITS: [usize; 4] = [8, 9, 10, 11];
pub const REGISTER_QUBITS: usize = 12;

const CLEAR_TOL: f64 = 1e-12;

/// Per-player data strings, player 1 first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct PlayerData {
    words: [usize; PLAYERS],
}

impl PlayerData {
    pub fn new(bits: [&str; PLAYERS]) -> Result<Self> {
        let mut words = [0; PLAYERS];
        for (k, b) in bits.iter().enumerate() {
            if b.len() != DATA_WIDTH {
                return Err(Error::Size(format!("player {} data {b:?} is not {DATA_WIDTH} bits", k + 1)));
            }
            words[k] = parse_bits(b)?;
        }
        Ok(PlayerData { words })
    }

    /// The data strings 1001, 0001, 1000, 1111.
    pub fn reference() -> Self {
        PlayerData { words: [0b1001, 0b0001, 0b1000, 0b1111] }
    }

    /// Data word of `player` (1-based).
    pub fn word(&self, player: usize) -> usize {
        self.words[player - 1]
    }

    pub fn bits(&self, player: usize) -> String {
        bits_to_string(self.word(player), DATA_WIDTH)
    }
}

impl TryFrom<Vec<String>> for PlayerData {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        let arr: [String; PLAYERS] = v
            .try_into()
            .map_err(|v: Vec<String>| Error::Size(format!("expected {PLAYERS} data strings, got {}", v.len())))?;
        PlayerData::new([&arr[0], &arr[1], &arr[2], &arr[3]])
    }
}

impl From<PlayerData> for Vec<String> {
    fn from(d: PlayerData) -> Self {
        (1..=PLAYERS).map(|k| d.bits(k)).collect()
    }
}

/// Probability of each player winning a round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WinnerDistribution(pub [f64; PLAYERS]);

impl WinnerDistribution {
    /// Win probability of `player` (1-based).
    pub fn p(&self, player: usize) -> f64 {
        self.0[player - 1]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn deviations(&self, other: &[f64; PLAYERS]) -> [f64; PLAYERS] {
        std::array::from_fn(|k| self.0[k] - other[k])
    }

    pub fn max_abs_deviation(&self, other: &[f64; PLAYERS]) -> f64 {
        self.deviations(other).iter().map(|d| d.abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for WinnerDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "({a:.4}, {b:.4}, {c:.4}, {d:.4})")
    }
}

/// Which strategy-register pattern elects which player.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WinnerMap {
    table: [u8; 16],
}

impl Default for WinnerMap {
    /// Player 1 ↔ {0000, 0111, 1010, 1101}, player 2 ↔ {0001, 0100, 1011, 1110},
    /// player 3 ↔ {0010, 0101, 1000, 1111}, player 4 ↔ {0011, 0110, 1001, 1100}.
    fn default() -> Self {
        WinnerMap::from_groups([
            [0b0000, 0b0111, 0b1010, 0b1101],
            [0b0001, 0b0100, 0b1011, 0b1110],
            [0b0010, 0b0101, 0b1000, 0b1111],
            [0b0011, 0b0110, 0b1001, 0b1100],
        ])
        .expect("default grouping is a partition")
    }
}

impl WinnerMap {
    /// Builds a map from four groups of four patterns each.
    pub fn from_groups(groups: [[usize; 4]; PLAYERS]) -> Result<Self> {
        let mut table = [0u8; 16];
        for (k, group) in groups.iter().enumerate() {
            for &pattern in group {
                if pattern >= 16 {
                    return Err(Error::Data(format!("pattern {pattern} is not 4 bits")));
                }
                if table[pattern] != 0 {
                    return Err(Error::Data(format!("pattern {} assigned twice", bits_to_string(pattern, 4))));
                }
                table[pattern] = k as u8 + 1;
            }
        }
        Ok(WinnerMap { table })
    }

    /// Winner (1-based) elected by a strategy-register pattern.
    pub fn winner(&self, pattern: usize) -> usize {
        usize::from(self.table[pattern])
    }

    pub fn group(&self, player: usize) -> Vec<usize> {
        (0..16).filter(|&s| self.winner(s) == player).collect()
    }
}

/// One measured round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRoundResult {
    pub winner: usize,
    pub id_bus: String,
    pub data_bus: String,
}

/// One-hot identification code of `player`: player 1 is `1000`.
pub fn one_hot(player: usize) -> usize {
    1 << (PLAYERS - player)
}

fn require_clear(state: &StateVector, qubits: &[usize], what: &str) -> Result<()> {
    state.check_distinct(qubits)?;
    let mask = qubits.iter().fold(0, |m, &q| m | state.mask(q));
    let stray: f64 =
        state.amplitudes().iter().enumerate().filter(|(i, _)| i & mask != 0).map(|(_, a)| a.norm_sqr()).sum();
    if stray > CLEAR_TOL {
        return Err(Error::Precondition(format!("{what} is not |0000⟩ (population {stray:.3e} outside it)")));
    }
    Ok(())
}

/// Puts four cleared qubits into `(|1000⟩ + |0100⟩ + |0010⟩ + |0001⟩)/2`.
pub fn prepare_w_state(state: &mut StateVector, qubits: [usize; 4]) -> Result<()> {
    require_clear(state, &qubits, "W-state target register")?;
    let masks = qubits.map(|q| state.mask(q));
    let mut amps = vec![Default::default(); state.amplitudes().len()];
    for (i, &amp) in state.amplitudes().iter().enumerate() {
        if amp == Default::default() {
            continue;
        }
        for m in masks {
            amps[i | m] += amp * 0.5;
        }
    }
    *state = StateVector::from_amplitudes(amps)?;
    Ok(())
}

/// `|s⟩|0000⟩ → |s⟩|one-hot(winner(s))⟩` on the strategy and identification
/// registers, extended linearly.
pub fn apply_winner_decoder(
    state: &mut StateVector,
    strategy_qubits: [usize; 4],
    id_qubits: [usize; 4],
    map: &WinnerMap,
) -> Result<()> {
    let mut all = strategy_qubits.to_vec();
    all.extend_from_slice(&id_qubits);
    state.check_distinct(&all)?;
    require_clear(state, &id_qubits, "identification bus")?;
    let id_masks = id_qubits.map(|q| state.mask(q));
    let n = state.n_qubits();
    // XOR into the id bus is its own inverse, so the map is a permutation.
    let code = |i: usize| id_masks[map.winner(extract_bits(n, i, &strategy_qubits)) - 1];
    state.apply_basis_map(|i| i ^ code(i))
}

/// Player `k`'s grid: one CNOT from id qubit `k` to data qubit `j` for every
/// set bit `j` of its data word.
pub fn apply_data_grid(
    state: &mut StateVector,
    id_qubits: [usize; 4],
    data_qubits: [usize; 4],
    data: &PlayerData,
) -> Result<()> {
    let mut all = id_qubits.to_vec();
    all.extend_from_slice(&data_qubits);
    state.check_distinct(&all)?;
    require_clear(state, &data_qubits, "data bus")?;
    for player in 1..=PLAYERS {
        let word = data.word(player);
        for (j, &dq) in data_qubits.iter().enumerate() {
            if word >> (DATA_WIDTH - 1 - j) & 1 == 1 {
                state.apply_cnot(id_qubits[player - 1], dq)?;
            }
        }
    }
    Ok(())
}

/// Closed-form winner probabilities from the strategies' `|a_k|², |b_k|²`.
pub fn winner_distribution(strategies: &[Gate; PLAYERS]) -> WinnerDistribution {
    winner_distribution_with_map(strategies, &WinnerMap::default())
}

pub fn winner_distribution_with_map(strategies: &[Gate; PLAYERS], map: &WinnerMap) -> WinnerDistribution {
    let b2: [f64; PLAYERS] = std::array::from_fn(|k| strategy_amplitudes(&strategies[k]).b.norm_sqr());
    winner_distribution_from_flip_probs(&b2, map)
}

/// Winner probabilities given each player's `|b_k|²`, the probability of
/// its strategy qubit reading 1.
pub fn winner_distribution_from_flip_probs(b2: &[f64; PLAYERS], map: &WinnerMap) -> WinnerDistribution {
    let mut p = [0.0; PLAYERS];
    for pattern in 0..16usize {
        let weight: f64 =
            (0..PLAYERS).map(|k| if pattern >> (PLAYERS - 1 - k) & 1 == 1 { b2[k] } else { 1.0 - b2[k] }).product();
        p[map.winner(pattern) - 1] += weight;
    }
    WinnerDistribution(p)
}

/// Builds the final 12-qubit state: strategy layer, winner decoder, data grids.
pub fn build_game_state(strategies: &[Gate; PLAYERS], data: &PlayerData, map: &WinnerMap) -> Result<StateVector> {
    let mut state = StateVector::new(REGISTER_QUBITS)?;
    for (gate, &q) in strategies.iter().zip(&STRATEGY_QUBITS) {
        state.apply_single(gate, q)?;
    }
    apply_winner_decoder(&mut state, STRATEGY_QUBITS, ID_QUBITS, map)?;
    apply_data_grid(&mut state, ID_QUBITS, DATA_QUBITS, data)?;
    Ok(state)
}

/// Winner distribution read off the identification bus of the simulated circuit.
pub fn simulated_winner_distribution(strategies: &[Gate; PLAYERS], map: &WinnerMap) -> Result<WinnerDistribution> {
    let state = build_game_state(strategies, &PlayerData::reference(), map)?;
    let id = state.probabilities(&ID_QUBITS)?;
    Ok(WinnerDistribution(std::array::from_fn(|k| id[one_hot(k + 1)])))
}

fn decode_round(outcome: usize) -> Result<GameRoundResult> {
    let id = outcome >> DATA_WIDTH;
    let data = outcome & ((1 << DATA_WIDTH) - 1);
    if id.count_ones() != 1 {
        return Err(Error::Data(format!("identification bus {} is not one-hot", bits_to_string(id, PLAYERS))));
    }
    Ok(GameRoundResult {
        winner: PLAYERS - id.trailing_zeros() as usize,
        id_bus: bits_to_string(id, PLAYERS),
        data_bus: bits_to_string(data, DATA_WIDTH),
    })
}

/// Joint distribution of the identification and data buses for a fixed
/// strategy set, ready to be sampled many times.
#[derive(Clone, Debug)]
pub struct RoundSampler {
    probs: Vec<f64>,
}

impl RoundSampler {
    pub fn new(strategies: &[Gate; PLAYERS], data: &PlayerData) -> Result<Self> {
        let state = build_game_state(strategies, data, &WinnerMap::default())?;
        let buses: Vec<usize> = ID_QUBITS.iter().chain(&DATA_QUBITS).copied().collect();
        Ok(RoundSampler { probs: state.probabilities(&buses)? })
    }

    /// Measures both buses once, drawing from `seed`.
    pub fn sample(&self, seed: RngSeed) -> Result<GameRoundResult> {
        decode_round(crate::qstate::draw(&self.probs, &mut seed.rng()))
    }
}

/// Plays one seeded round and measures both buses.
pub fn play_round(strategies: &[Gate; PLAYERS], data: &PlayerData, seed: RngSeed) -> Result<GameRoundResult> {
    RoundSampler::new(strategies, data)?.sample(seed)
}

/// Plays `rounds` independent rounds; round `r` is exactly
/// `play_round(.., seed.derive(r))`. The circuit is simulated once and the
/// rounds are sampled in parallel.
pub fn play_rounds(
    strategies: &[Gate; PLAYERS],
    data: &PlayerData,
    seed: RngSeed,
    rounds: usize,
) -> Result<Vec<GameRoundResult>> {
    let sampler = RoundSampler::new(strategies, data)?;
    par::map_range(rounds, |r| sampler.sample(seed.derive(r as u64))).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::Amplitude;

    #[test]
    fn w_state_from_zero() {
        let mut s = StateVector::new(4).unwrap();
        prepare_w_state(&mut s, [0, 1, 2, 3]).unwrap();
        for (i, a) in s.amplitudes().iter().enumerate() {
            let want = if i.count_ones() == 1 { 0.5 } else { 0.0 };
            assert!((a - Amplitude::new(want, 0.0)).norm() < 1e-15, "index {i}");
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
        for q in 0..4 {
            let p = s.probabilities(&[q]).unwrap();
            assert!((p[1] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn w_state_requires_clear_register() {
        let mut s = StateVector::from_bits("0100").unwrap();
        assert!(matches!(prepare_w_state(&mut s, [0, 1, 2, 3]), Err(Error::Precondition(_))));
    }

    #[test]
    fn decoder_basis_examples() {
        let map = WinnerMap::default();
        let mut s = StateVector::from_bits("00000000").unwrap();
        apply_winner_decoder(&mut s, [0, 1, 2, 3], [4, 5, 6, 7], &map).unwrap();
        assert_eq!(s, StateVector::from_bits("00001000").unwrap());

        let mut s = StateVector::from_bits("00010000").unwrap();
        apply_winner_decoder(&mut s, [0, 1, 2, 3], [4, 5, 6, 7], &map).unwrap();
        assert_eq!(s, StateVector::from_bits("00010100").unwrap());
    }

    #[test]
    fn decoder_is_linear() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Amplitude::default(); 256];
        amps[0b0000_0000] = Amplitude::new(h, 0.0);
        amps[0b1111_0000] = Amplitude::new(h, 0.0);
        let mut s = StateVector::from_amplitudes(amps).unwrap();
        apply_winner_decoder(&mut s, [0, 1, 2, 3], [4, 5, 6, 7], &WinnerMap::default()).unwrap();
        assert!((s.amplitude(0b0000_1000).re - h).abs() < 1e-15);
        assert!((s.amplitude(0b1111_0010).re - h).abs() < 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn decoder_requires_clear_id_bus() {
        let mut s = StateVector::from_bits("00000001").unwrap();
        let r = apply_winner_decoder(&mut s, [0, 1, 2, 3], [4, 5, 6, 7], &WinnerMap::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn data_grid_examples() {
        let data = PlayerData::reference();
        let mut s = StateVector::from_bits("10000000").unwrap();
        apply_data_grid(&mut s, [0, 1, 2, 3], [4, 5, 6, 7], &data).unwrap();
        assert_eq!(s, StateVector::from_bits("10001001").unwrap());

        let mut s = StateVector::from_bits("00100000").unwrap();
        apply_data_grid(&mut s, [0, 1, 2, 3], [4, 5, 6, 7], &data).unwrap();
        assert_eq!(s, StateVector::from_bits("00101000").unwrap());

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Amplitude::default(); 256];
        amps[0b1000_0000] = Amplitude::new(h, 0.0);
        amps[0b0100_0000] = Amplitude::new(h, 0.0);
        let mut s = StateVector::from_amplitudes(amps).unwrap();
        apply_data_grid(&mut s, [0, 1, 2, 3], [4, 5, 6, 7], &data).unwrap();
        assert!((s.amplitude(0b1000_1001).re - h).abs() < 1e-15);
        assert!((s.amplitude(0b0100_0001).re - h).abs() < 1e-15);

        let mut dirty = StateVector::from_bits("10000001").unwrap();
        let r = apply_data_grid(&mut dirty, [0, 1, 2, 3], [4, 5, 6, 7], &data);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn winner_map_matches_reference_grouping() {
        let map = WinnerMap::default();
        let expect = [
            ["0000", "0111", "1010", "1101"],
            ["0001", "0100", "1011", "1110"],
            ["0010", "0101", "1000", "1111"],
            ["0011", "0110", "1001", "1100"],
        ];
        for (k, group) in expect.iter().enumerate() {
            let mut want: Vec<usize> = group.iter().map(|b| parse_bits(b).unwrap()).collect();
            want.sort();
            assert_eq!(map.group(k + 1), want);
        }
        assert!(WinnerMap::from_groups([[0, 1, 2, 3], [3, 4, 5, 6], [7, 8, 9, 10], [11, 12, 13, 14]]).is_err());
    }

    #[test]
    fn winner_distribution_examples() {
        let d = winner_distribution(&[Gate::identity(); 4]);
        assert_eq!(d.0, [1.0, 0.0, 0.0, 0.0]);
        let d = winner_distribution(&[Gate::hadamard(); 4]);
        for p in d.0 {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_round_is_forced() {
        let data = PlayerData::reference();
        for seed in 0..10 {
            let r = play_round(&[Gate::identity(); 4], &data, RngSeed(seed)).unwrap();
            assert_eq!(r, GameRoundResult { winner: 1, id_bus: "1000".into(), data_bus: "1001".into() });
        }
    }

    #[test]
    fn rounds_are_seeded() {
        let data = PlayerData::reference();
        let h = [Gate::hadamard(); 4];
        assert_eq!(play_round(&h, &data, RngSeed(3)).unwrap(), play_round(&h, &data, RngSeed(3)).unwrap());
        let batch = play_rounds(&h, &data, RngSeed(9), 50).unwrap();
        assert_eq!(batch, play_rounds(&h, &data, RngSeed(9), 50).unwrap());
        for (r, round) in batch.iter().enumerate().take(5) {
            assert_eq!(round, &play_round(&h, &data, RngSeed(9).derive(r as u64)).unwrap());
        }
    }

    #[test]
    fn player_data_parsing() {
        assert_eq!(PlayerData::new(["1001", "0001", "1000", "1111"]).unwrap(), PlayerData::reference());
        assert!(matches!(PlayerData::new(["101", "0001", "1000", "1111"]), Err(Error::Size(_))));
        assert!(PlayerData::new(["10a1", "0001", "1000", "1111"]).is_err());
        let v: Vec<String> = PlayerData::reference().into();
        assert_eq!(v, ["1001", "0001", "1000", "1111"]);
        assert!(PlayerData::try_from(vec!["1001".to_string()]).is_err());
    }
}
