use std::f64::consts::{PI, TAU};

use arbiter_core::arbiter::{winner_distribution, PlayerData, PLAYERS};
use arbiter_core::duel::{
    balanced_gate, expected_payoffs, play_game, strategy_amplitudes, strategy_gate, GameModel, PayoffTable,
    StrategyAngles,
};
use arbiter_core::ga::{decode, evolve, Chromosome, GaConfig, PriorityVector, StrategySet, CHROMOSOME_BITS};
use arbiter_core::grover::{
    build_oracle, grover_search, pipeline_round, qbsc_compare, Iterations, OracleLayout, OracleSpec, TruthTable,
};
use arbiter_core::qstate::{bits_to_string, Amplitude, Gate, RngSeed, StateVector};
use arbiter_core::Error;
use proptest::prelude::*;
use rand::Rng;

#[derive(Clone, Debug)]
enum Op {
    Single(StrategyAngles, usize),
    Cnot(usize, usize),
    Entangler(usize, usize, f64),
}

fn angles() -> impl Strategy<Value = StrategyAngles> {
    (0.0..=PI, 0.0..TAU, 0.0..TAU).prop_map(|(t, p, s)| StrategyAngles::new(t, p, s).unwrap())
}

fn op(n: usize) -> impl Strategy<Value = Op> {
    let pair = (0..n, 1..n).prop_map(move |(a, d)| (a, (a + d) % n));
    prop_oneof![
        (angles(), 0..n).prop_map(|(a, q)| Op::Single(a, q)),
        pair.clone().prop_map(|(c, t)| Op::Cnot(c, t)),
        (pair, 0.01..PI - 0.01).prop_map(|((a, b), g)| Op::Entangler(a, b, g)),
    ]
}

fn circuit() -> impl Strategy<Value = (usize, Vec<Op>)> {
    (2usize..=12).prop_flat_map(|n| (Just(n), prop::collection::vec(op(n), 0..=50)))
}

fn apply(state: &mut StateVector, op: &Op) {
    match *op {
        Op::Single(a, q) => state.apply_single(&strategy_gate(&a).unwrap(), q).unwrap(),
        Op::Cnot(c, t) => state.apply_cnot(c, t).unwrap(),
        Op::Entangler(a, b, g) => state.apply_entangler(a, b, g).unwrap(),
    }
}

fn undo(state: &mut StateVector, op: &Op) {
    match *op {
        Op::Single(a, q) => state.apply_single(&strategy_gate(&a).unwrap().adjoint(), q).unwrap(),
        Op::Cnot(c, t) => state.apply_cnot(c, t).unwrap(),
        Op::Entangler(a, b, g) => state.apply_entangler_adjoint(a, b, g).unwrap(),
    }
}

fn random_state(n: usize, seed: u64) -> StateVector {
    let mut rng = RngSeed(seed).rng();
    let raw: Vec<Amplitude> =
        (0..1 << n).map(|_| Amplitude::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(raw.into_iter().map(|a| a / norm).collect()).unwrap()
}

fn max_diff(a: &[Amplitude], b: &[Amplitude]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn norm_is_preserved((n, ops) in circuit(), seed in any::<u64>()) {
        let mut state = StateVector::new(n).unwrap();
        state.apply_single(&Gate::hadamard(), seed as usize % n).unwrap();
        for o in &ops {
            apply(&mut state, o);
        }
        prop_assert_eq!(state.amplitudes().len(), 1 << n);
        prop_assert!((state.norm_sqr() - 1.0).abs() <= 1e-10);
        prop_assert!(state.amplitudes().iter().all(|a| a.re.is_finite() && a.im.is_finite()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gate_then_adjoint_is_identity((n, ops) in circuit(), seed in any::<u64>()) {
        let start = random_state(n, seed);
        let mut state = start.clone();
        for o in &ops {
            apply(&mut state, o);
        }
        for o in ops.iter().rev() {
            undo(&mut state, o);
        }
        prop_assert!(max_diff(state.amplitudes(), start.amplitudes()) <= 1e-12);
    }

    #[test]
    fn single_qubit_gates_are_linear(
        a in angles(),
        n in 1usize..=6,
        q in 0usize..6,
        x in 0usize..64,
        y in 0usize..64,
        alpha in (-1.0f64..1.0, -1.0f64..1.0),
        beta in (-1.0f64..1.0, -1.0f64..1.0),
    ) {
        let (q, x, y) = (q % n, x % (1 << n), y % (1 << n));
        prop_assume!(x != y);
        let (alpha, beta) = (Amplitude::new(alpha.0, alpha.1), Amplitude::new(beta.0, beta.1));
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        prop_assume!(norm > 1e-3);
        let (alpha, beta) = (alpha / norm, beta / norm);
        let g = strategy_gate(&a).unwrap();

        let mut amps = vec![Amplitude::new(0.0, 0.0); 1 << n];
        amps[x] = alpha;
        amps[y] = beta;
        let mut mixed = StateVector::from_amplitudes(amps).unwrap();
        mixed.apply_single(&g, q).unwrap();

        let mut sx = StateVector::basis(n, x).unwrap();
        let mut sy = StateVector::basis(n, y).unwrap();
        sx.apply_single(&g, q).unwrap();
        sy.apply_single(&g, q).unwrap();
        let combined: Vec<Amplitude> = sx.amplitudes().iter().zip(sy.amplitudes()).map(|(u, v)| alpha * u + beta * v).collect();
        prop_assert!(max_diff(mixed.amplitudes(), &combined) <= 1e-12);
    }

    #[test]
    fn strategy_gates_are_unitary(a in angles()) {
        let g = strategy_gate(&a).unwrap();
        let m = g.compose(&g.adjoint());
        let m = m.matrix();
        for (i, row) in m.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((z.re - want).abs() <= 1e-12 && z.im.abs() <= 1e-12);
            }
        }
        let amp = strategy_amplitudes(&g);
        prop_assert!((amp.a.norm_sqr() + amp.b.norm_sqr() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn simplified_outcomes_stay_in_half_range(pa in 0.0..TAU, sa in 0.0..TAU, pb in 0.0..TAU, sb in 0.0..TAU) {
        let d = play_game(&GameModel::simplified(), &balanced_gate(pa, sa), &balanced_gate(pb, sb)).unwrap();
        for p in d.as_array() {
            prop_assert!((0.0..=0.5 + 1e-12).contains(&p));
        }
        prop_assert!((d.as_array().iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        prop_assert!((d.dd - (0.5 - d.cc)).abs() <= 1e-12);
        prop_assert!((d.cd - (0.5 - d.dc)).abs() <= 1e-12);
    }

    #[test]
    fn balanced_difference_gives_equal_payoffs(pa in 0.0..TAU, sa in 0.0..TAU, pb in 0.0..TAU, turns in -2i32..=2) {
        // (φB − φA) + (ψB − ψA) = kπ
        let sb = sa + pa - pb + f64::from(turns) * PI;
        let d = play_game(&GameModel::simplified(), &balanced_gate(pa, sa), &balanced_gate(pb, sb)).unwrap();
        prop_assert!((d.cd - d.dc).abs() <= 1e-12);
        let (a, b) = expected_payoffs(&d, &PayoffTable::prisoners_dilemma());
        prop_assert!((a - b).abs() <= 1e-10);
    }

    #[test]
    fn original_outcomes_are_normalized(a in angles(), b in angles(), gamma in 0.01..PI - 0.01) {
        let model = GameModel::new(arbiter_core::duel::Variant::Original, gamma).unwrap();
        let d = play_game(&model, &strategy_gate(&a).unwrap(), &strategy_gate(&b).unwrap()).unwrap();
        prop_assert!(d.as_array().iter().all(|p| (0.0..=1.0 + 1e-12).contains(p)));
        prop_assert!((d.as_array().iter().sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn winner_distribution_is_phase_invariant(set in prop::array::uniform4(angles()), phases in prop::array::uniform4((0.0..TAU, 0.0..TAU))) {
        let gates = set.map(|a| strategy_gate(&a).unwrap());
        let base = winner_distribution(&gates);
        prop_assert!((base.total() - 1.0).abs() <= 1e-10);
        let shifted: [Gate; PLAYERS] = std::array::from_fn(|k| {
            let (u, v) = phases[k];
            let m = *gates[k].matrix();
            let (eu, ev) = (Amplitude::from_polar(1.0, u), Amplitude::from_polar(1.0, v));
            Gate::new([[m[0][0] * eu, m[0][1] * ev], [m[1][0] * eu, m[1][1] * ev]]).unwrap()
        });
        prop_assert!(winner_distribution(&shifted).max_abs_deviation(&base.0) <= 1e-12);
    }

    #[test]
    fn chromosome_round_trips(bits in prop::collection::vec(any::<bool>(), CHROMOSOME_BITS)) {
        let c = Chromosome::from_bits(bits).unwrap();
        let angles = c.angles();
        for a in &angles {
            prop_assert!(a.validate().is_ok());
        }
        prop_assert_eq!(Chromosome::encode(&angles).unwrap(), c.clone());
        let set = decode(&c);
        prop_assert!((winner_distribution(set.gates()).total() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn same_seed_same_samples(seed in any::<u64>(), n in 1usize..=8) {
        let state = random_state(n, seed ^ 0x5eed);
        let qubits: Vec<usize> = (0..n).collect();
        prop_assert_eq!(
            state.sample_many(&qubits, RngSeed(seed), 50).unwrap(),
            state.sample_many(&qubits, RngSeed(seed), 50).unwrap()
        );
    }
}

#[test]
fn sampling_matches_probabilities() {
    let n = 3;
    let state = random_state(n, 99);
    let qubits: Vec<usize> = (0..n).collect();
    let probs = state.probabilities(&qubits).unwrap();
    let draws = 10_000;
    let samples = state.sample_many(&qubits, RngSeed(5), draws).unwrap();
    for (outcome, p) in probs.iter().enumerate() {
        let freq = samples.iter().filter(|&&s| s == outcome).count() as f64 / draws as f64;
        let bound = 3.0 * (p * (1.0 - p) / draws as f64).sqrt();
        assert!((freq - p).abs() <= bound, "outcome {outcome}: {freq} vs {p}");
    }
}

#[test]
fn comparator_is_total_for_small_widths() {
    for n in 1..=4 {
        for a in 0..1usize << n {
            for b in 0..1usize << n {
                let c = qbsc_compare(&bits_to_string(a, n), &bits_to_string(b, n)).unwrap();
                assert_ne!((c.o1, c.o2), (1, 1));
                assert_eq!(c.o1 == 1, a > b);
                assert_eq!(c.o2 == 1, a < b);
            }
        }
    }
}

fn truth_table() -> impl Strategy<Value = (TruthTable, usize)> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(n_in, n_out)| {
        (prop::collection::vec(0..1usize << n_out, 1 << n_in), 0..1usize << n_out)
            .prop_map(move |(t, y)| (TruthTable::new(n_in, n_out, t).unwrap(), y))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn oracle_circuit_is_an_involution_with_clean_ancillas((f, y) in truth_table(), seed in any::<u64>()) {
        let (n_in, n_out) = (f.n_in(), f.n_out());
        let oracle = build_oracle(&OracleSpec::new(f, &bits_to_string(y, n_out)).unwrap()).unwrap();
        let layout = OracleLayout::new(n_in, n_out);
        let n = layout.total_qubits();
        let shift = n - n_in;

        let search = random_state(n_in, seed);
        let mut amps = vec![Amplitude::new(0.0, 0.0); 1 << n];
        for (x, a) in search.amplitudes().iter().enumerate() {
            amps[x << shift] = *a;
        }
        let start = StateVector::from_amplitudes(amps).unwrap();

        let mut once = start.clone();
        oracle.apply_circuit(&mut once, &layout).unwrap();
        let anc = once.probabilities(&layout.ancillas()).unwrap();
        prop_assert!(anc[1..].iter().all(|&p| p <= 1e-12));
        for x in 0..1usize << n_in {
            let sign = if oracle.is_marked(x) { -1.0 } else { 1.0 };
            prop_assert!((once.amplitude(x << shift) - search.amplitude(x) * sign).norm() <= 1e-12);
        }

        let mut twice = once.clone();
        oracle.apply_circuit(&mut twice, &layout).unwrap();
        prop_assert!(max_diff(twice.amplitudes(), start.amplitudes()) <= 1e-12);
    }

    #[test]
    fn grover_matches_closed_form(n in 1usize..=8, marks in prop::collection::vec(any::<bool>(), 256), k in 0usize..=20) {
        let f = TruthTable::from_fn(n, 1, |x| usize::from(marks[x])).unwrap();
        let m = (0..1usize << n).filter(|&x| marks[x]).count();
        let r = grover_search(&OracleSpec::new(f, "1").unwrap(), Iterations::Fixed(k), RngSeed(1)).unwrap();
        let theta = (m as f64 / (1usize << n) as f64).sqrt().asin();
        let want = ((2 * k + 1) as f64 * theta).sin().powi(2);
        prop_assert!((r.success_probability - want).abs() <= 1e-10, "{} vs {}", r.success_probability, want);
    }

    #[test]
    fn pipeline_answers_are_sound(set in prop::array::uniform4(angles()), table in prop::collection::vec(0usize..16, 16), seed in any::<u64>()) {
        let f = TruthTable::new(4, 4, table).unwrap();
        let strategies = StrategySet(set.map(|a| strategy_gate(&a).unwrap()));
        match pipeline_round(&strategies, &PlayerData::reference(), &f, RngSeed(seed)) {
            Ok(r) => {
                let x = usize::from_str_radix(&r.x, 2).unwrap();
                prop_assert_eq!(bits_to_string(f.eval(x), 4), r.y);
            }
            Err(Error::NoSolution(_)) | Err(Error::SearchFailure(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn ga_is_deterministic_and_monotone(seed in any::<u64>()) {
        let target = PriorityVector::new([0.1, 0.2, 0.3, 0.4]).unwrap();
        let config = GaConfig { population: 20, generations: 30, ..GaConfig::with_seed(seed) };
        let a = evolve(&target, &config).unwrap();
        let b = evolve(&target, &config).unwrap();
        prop_assert_eq!(&a.chromosome, &b.chromosome);
        prop_assert_eq!(&a.fitness_trace, &b.fitness_trace);
        prop_assert!(a.fitness_trace.windows(2).all(|w| w[1] <= w[0]));
    }
}

/// Targets drawn as winner distributions of random strategy sets are
/// reachable by construction; see the ledger for arbitrary simplex points.
#[test]
fn ga_reaches_reachable_targets() {
    let mut rng = RngSeed(2024).rng();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let gates: [Gate; PLAYERS] = std::array::from_fn(|_| {
            let a =
                StrategyAngles::new(rng.gen_range(0.0..=PI), rng.gen_range(0.0..TAU), rng.gen_range(0.0..TAU)).unwrap();
            strategy_gate(&a).unwrap()
        });
        let target = PriorityVector::new(winner_distribution(&gates).0).unwrap();
        let run = evolve(&target, &GaConfig::with_seed(i)).unwrap();
        worst = worst.max(run.fitness);
    }
    assert!(worst <= 0.05, "worst fitness {worst}");
}

#[test]
fn identity_set_verifies_against_forced_winner() {
    let report = arbiter_core::ga::verify_strategy_set(
        &StrategySet::identity().to_matrices(),
        &arbiter_core::arbiter::WinnerDistribution([1.0, 0.0, 0.0, 0.0]),
        1e-12,
    )
    .unwrap();
    assert!(report.pass);
    assert_eq!(report.max_abs_deviation, 0.0);
}
