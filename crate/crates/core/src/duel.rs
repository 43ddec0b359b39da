//! Two-player quantum games: the original entangle/disentangle circuit and
//! the simplified circuit without the disentangler.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::qstate::{check_gamma, Amplitude, Gate, StateVector};

/// Parameters of a single-qubit strategy: `theta ∈ [0, π]`, `phi, psi ∈ [0, 2π)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyAngles {
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
}

impl StrategyAngles {
    pub fn new(theta: f64, phi: f64, psi: f64) -> Result<Self> {
        let angles = StrategyAngles { theta, phi, psi };
        angles.validate()?;
        Ok(angles)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::Parameter(format!("theta = {} outside [0, π]", self.theta)));
        }
        for (name, v) in [("phi", self.phi), ("psi", self.psi)] {
            if !(0.0..TAU).contains(&v) {
                return Err(Error::Parameter(format!("{name} = {v} outside [0, 2π)")));
            }
        }
        Ok(())
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Strategy unitary
/// `[[e^{iφ}·cos(θ/2), −e^{iψ}·sin(θ/2)], [e^{−iψ}·sin(θ/2), e^{−iφ}·cos(θ/2)]]`.
pub fn strategy_gate(angles: &StrategyAngles) -> Result<Gate> {
    angles.validate()?;
    Ok(gate_from_angles(angles.theta, angles.phi, angles.psi))
}

pub(crate) fn gate_from_angles(theta: f64, phi: f64, psi: f64) -> Gate {
    let (s, c) = (theta / 2.0).sin_cos();
    let e = |x: f64| Amplitude::from_polar(1.0, x);
    Gate::from_unitary([[e(phi) * c, -e(psi) * s], [e(-psi) * s, e(-phi) * c]])
}

/// The `θ = π/2` slice, `(1/√2)·[[e^{iφ}, −e^{iψ}], [e^{−iψ}, e^{−iφ}]]`.
/// Angles are taken modulo 2π.
pub fn balanced_gate(phi: f64, psi: f64) -> Gate {
    gate_from_angles(PI / 2.0, wrap_angle(phi), wrap_angle(psi))
}

/// A strategy's action on `|0⟩`: `U|0⟩ = a|0⟩ + b|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrategyAmplitudes {
    pub a: Amplitude,
    pub b: Amplitude,
}

/// First column of the strategy matrix.
pub fn strategy_amplitudes(gate: &Gate) -> StrategyAmplitudes {
    let m = gate.matrix();
    StrategyAmplitudes { a: m[0][0], b: m[1][0] }
}

/// Which circuit realizes the game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Entangler, strategies, disentangler, measurement.
    Original,
    /// Strategies, entangler, measurement.
    Simplified,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Variant::Original),
            "simplified" => Ok(Variant::Simplified),
            other => Err(Error::Parameter(format!("unknown game model {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameModel {
    pub variant: Variant,
    pub gamma: f64,
}

impl GameModel {
    pub fn new(variant: Variant, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(GameModel { variant, gamma })
    }

    pub fn original() -> Self {
        GameModel { variant: Variant::Original, gamma: PI / 2.0 }
    }

    pub fn simplified() -> Self {
        GameModel { variant: Variant::Simplified, gamma: PI / 2.0 }
    }
}

/// Probabilities of the outcomes 00, 01, 10, 11 read as CC, CD, DC, DD.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub cc: f64,
    pub cd: f64,
    pub dc: f64,
    pub dd: f64,
}

impl OutcomeDistribution {
    pub fn as_array(&self) -> [f64; 4] {
        [self.cc, self.cd, self.dc, self.dd]
    }

    pub fn from_array(p: [f64; 4]) -> Self {
        OutcomeDistribution { cc: p[0], cd: p[1], dc: p[2], dd: p[3] }
    }

    pub fn max_abs_diff(&self, other: &OutcomeDistribution) -> f64 {
        self.as_array().iter().zip(other.as_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Simulates the chosen circuit on `|00⟩` with player A on qubit 0.
pub fn play_game(model: &GameModel, ua: &Gate, ub: &Gate) -> Result<OutcomeDistribution> {
    check_gamma(model.gamma)?;
    let mut state = StateVector::new(2)?;
    match model.variant {
        Variant::Original => {
            state.apply_entangler(0, 1, model.gamma)?;
            state.apply_single(ua, 0)?;
            state.apply_single(ub, 1)?;
            state.apply_entangler_adjoint(0, 1, model.gamma)?;
        }
        Variant::Simplified => {
            state.apply_single(ua, 0)?;
            state.apply_single(ub, 1)?;
            state.apply_entangler(0, 1, model.gamma)?;
        }
    }
    let p = state.probabilities(&[0, 1])?;
    Ok(OutcomeDistribution::from_array([p[0], p[1], p[2], p[3]]))
}

/// Closed-form outcome probabilities of the simplified game at `γ = π/2`
/// with balanced strategies ([`balanced_gate`]).
pub fn closed_form_distribution(phi_a: f64, psi_a: f64, phi_b: f64, psi_b: f64) -> OutcomeDistribution {
    let sum = wrap_angle((phi_b + phi_a) + (psi_b + psi_a)).sin();
    let diff = wrap_angle((phi_b - phi_a) + (psi_b - psi_a)).sin();
    OutcomeDistribution {
        cc: 0.25 * (1.0 + sum),
        cd: 0.25 * (1.0 - diff),
        dc: 0.25 * (1.0 + diff),
        dd: 0.25 * (1.0 - sum),
    }
}

/// Payoffs `(A, B)` for each outcome.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffTable {
    pub cc: (f64, f64),
    pub cd: (f64, f64),
    pub dc: (f64, f64),
    pub dd: (f64, f64),
}

impl PayoffTable {
    pub const PRISONERS_DILEMMA: &'static str = "prisoners-dilemma";

    pub fn prisoners_dilemma() -> Self {
        PayoffTable { cc: (3.0, 3.0), cd: (0.0, 5.0), dc: (5.0, 0.0), dd: (1.0, 1.0) }
    }

    /// Looks up a built-in table by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            Self::PRISONERS_DILEMMA => Ok(Self::prisoners_dilemma()),
            other => Err(Error::Parameter(format!("unknown payoff table {other:?}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.cc, self.cd, self.dc, self.dd];
        if all.iter().all(|(a, b)| a.is_finite() && b.is_finite()) {
            Ok(())
        } else {
            Err(Error::Parameter("payoff table has non-finite entries".into()))
        }
    }
}

/// Expected payoffs `(⟨$_A⟩, ⟨$_B⟩)`.
pub fn expected_payoffs(dist: &OutcomeDistribution, table: &PayoffTable) -> (f64, f64) {
    let cells = [(dist.cc, table.cc), (dist.cd, table.cd), (dist.dc, table.dc), (dist.dd, table.dd)];
    cells.iter().fold((0.0, 0.0), |(a, b), &(p, (pa, pb))| (a + p * pa, b + p * pb))
}

/// One swept strategy parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "theta_A")]
    ThetaA,
    #[serde(rename = "phi_A")]
    PhiA,
    #[serde(rename = "psi_A")]
    PsiA,
    #[serde(rename = "theta_B")]
    ThetaB,
    #[serde(rename = "phi_B")]
    PhiB,
    #[serde(rename = "psi_B")]
    PsiB,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] =
        [SweepAxis::ThetaA, SweepAxis::PhiA, SweepAxis::PsiA, SweepAxis::ThetaB, SweepAxis::PhiB, SweepAxis::PsiB];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::ThetaA => "theta_A",
            SweepAxis::PhiA => "phi_A",
            SweepAxis::PsiA => "psi_A",
            SweepAxis::ThetaB => "theta_B",
            SweepAxis::PhiB => "phi_B",
            SweepAxis::PsiB => "psi_B",
        }
    }

    fn is_theta(self) -> bool {
        matches!(self, SweepAxis::ThetaA | SweepAxis::ThetaB)
    }

    /// Grid value `k` of `points`. θ axes include both ends of `[0, π]`;
    /// the periodic phase axes cover `[0, 2π)` with step `2π/points`.
    pub fn grid_value(self, k: usize, points: usize) -> f64 {
        if self.is_theta() {
            PI * k as f64 / (points - 1) as f64
        } else {
            TAU * k as f64 / points as f64
        }
    }

    fn set(self, angles: &mut (StrategyAngles, StrategyAngles), v: f64) {
        let (a, b) = angles;
        match self {
            SweepAxis::ThetaA => a.theta = v,
            SweepAxis::PhiA => a.phi = v,
            SweepAxis::PsiA => a.psi = v,
            SweepAxis::ThetaB => b.theta = v,
            SweepAxis::PhiB => b.phi = v,
            SweepAxis::PsiB => b.psi = v,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown sweep axis {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
    /// Grid points per axis.
    pub points: usize,
}

impl Sweep {
    pub const DEFAULT_POINTS: usize = 64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub axis1_value: f64,
    pub axis2_value: f64,
    pub payoff_a: f64,
    pub payoff_b: f64,
}

/// Payoff grid in row-major order (`axis1` outer).
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffSurface {
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
    pub points: Vec<SurfacePoint>,
}

/// Expected payoffs over a 2-D grid of strategy parameters. Angles not on a
/// swept axis come from `fixed`.
pub fn payoff_surface(
    model: &GameModel,
    sweep: &Sweep,
    fixed: &(StrategyAngles, StrategyAngles),
    table: &PayoffTable,
) -> Result<PayoffSurface> {
    check_gamma(model.gamma)?;
    if sweep.points < 2 {
        return Err(Error::Parameter(format!("grid needs ≥ 2 points per axis, got {}", sweep.points)));
    }
    if sweep.axis1 == sweep.axis2 {
        return Err(Error::Parameter(format!("both sweep axes are {}", sweep.axis1)));
    }
    fixed.0.validate()?;
    fixed.1.validate()?;
    table.validate()?;

    let n = sweep.points;
    let results = par::map_range(n * n, |idx| {
        let (i, j) = (idx / n, idx % n);
        let v1 = sweep.axis1.grid_value(i, n);
        let v2 = sweep.axis2.grid_value(j, n);
        let mut angles = *fixed;
        sweep.axis1.set(&mut angles, v1);
        sweep.axis2.set(&mut angles, v2);
        let ua = gate_from_angles(angles.0.theta, angles.0.phi, angles.0.psi);
        let ub = gate_from_angles(angles.1.theta, angles.1.phi, angles.1.psi);
        play_game(model, &ua, &ub).map(|dist| {
            let (payoff_a, payoff_b) = expected_payoffs(&dist, table);
            SurfacePoint { axis1_value: v1, axis2_value: v2, payoff_a, payoff_b }
        })
    });
    Ok(PayoffSurface { axis1: sweep.axis1, axis2: sweep.axis2, points: results.into_iter().collect::<Result<_>>()? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

    fn close(a: Amplitude, b: Amplitude) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn strategy_gate_examples() {
        let id = strategy_gate(&StrategyAngles::default()).unwrap();
        assert_eq!(id.matrix(), Gate::identity().matrix());

        let g = strategy_gate(&StrategyAngles::new(PI, 0.0, 0.0).unwrap()).unwrap();
        let m = g.matrix();
        assert!(close(m[0][0], Amplitude::new(0.0, 0.0)));
        assert!(close(m[0][1], Amplitude::new(-1.0, 0.0)));
        assert!(close(m[1][0], Amplitude::new(1.0, 0.0)));
        assert!(close(m[1][1], Amplitude::new(0.0, 0.0)));

        let (phi, psi) = (0.7, 2.9);
        let g = strategy_gate(&StrategyAngles::new(FRAC_PI_2, phi, psi).unwrap()).unwrap();
        let h = FRAC_1_SQRT_2;
        let e = |x: f64| Amplitude::from_polar(h, x);
        let m = g.matrix();
        assert!(close(m[0][0], e(phi)));
        assert!(close(m[0][1], -e(psi)));
        assert!(close(m[1][0], e(-psi)));
        assert!(close(m[1][1], e(-phi)));
    }

    #[test]
    fn angle_ranges_are_enforced() {
        assert!(StrategyAngles::new(-0.1, 0.0, 0.0).is_err());
        assert!(StrategyAngles::new(PI + 1e-9, 0.0, 0.0).is_err());
        assert!(StrategyAngles::new(0.0, TAU, 0.0).is_err());
        assert!(StrategyAngles::new(0.0, 0.0, -1e-3).is_err());
        assert!(StrategyAngles::new(PI, 6.2, 0.0).is_ok());
    }

    #[test]
    fn amplitudes_are_first_column() {
        let s = strategy_amplitudes(&Gate::identity());
        assert_eq!((s.a, s.b), (Amplitude::new(1.0, 0.0), Amplitude::new(0.0, 0.0)));
        let s = strategy_amplitudes(&Gate::hadamard());
        assert!(close(s.a, Amplitude::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(s.b, Amplitude::new(FRAC_1_SQRT_2, 0.0)));
        let g = strategy_gate(&StrategyAngles::new(FRAC_PI_2, FRAC_PI_4, 0.0).unwrap()).unwrap();
        let s = strategy_amplitudes(&g);
        assert!(close(s.a, Amplitude::from_polar(FRAC_1_SQRT_2, FRAC_PI_4)));
        assert!(close(s.b, Amplitude::new(FRAC_1_SQRT_2, 0.0)));
    }

    #[test]
    fn play_game_examples() {
        let id = Gate::identity();
        let d = play_game(&GameModel::original(), &id, &id).unwrap();
        assert!((d.cc - 1.0).abs() < 1e-15);

        let d = play_game(&GameModel::simplified(), &id, &id).unwrap();
        assert!((d.cc - 0.5).abs() < 1e-15 && (d.dd - 0.5).abs() < 1e-15);
        assert!(d.cd.abs() < 1e-15 && d.dc.abs() < 1e-15);

        let g = balanced_gate(FRAC_PI_8, FRAC_PI_8);
        let d = play_game(&GameModel::simplified(), &g, &g).unwrap();
        assert!(d.dd < 1e-15, "p_dd = {}", d.dd);
    }

    #[test]
    fn bad_gamma_is_rejected() {
        assert!(GameModel::new(Variant::Original, 0.0).is_err());
        let bad = GameModel { variant: Variant::Simplified, gamma: 3.5 };
        let id = Gate::identity();
        assert!(matches!(play_game(&bad, &id, &id), Err(Error::Parameter(_))));
    }

    #[test]
    fn closed_form_examples() {
        let d = closed_form_distribution(0.0, 0.0, 0.0, 0.0);
        assert_eq!(d.as_array(), [0.25; 4]);
        let d = closed_form_distribution(FRAC_PI_8, FRAC_PI_8, FRAC_PI_8, FRAC_PI_8);
        let want = [0.5, 0.25, 0.25, 0.0];
        for (got, w) in d.as_array().iter().zip(want) {
            assert!((got - w).abs() < 1e-15);
        }
    }

    #[test]
    fn expected_payoff_examples() {
        let t = PayoffTable::prisoners_dilemma();
        let at = |p: [f64; 4]| expected_payoffs(&OutcomeDistribution::from_array(p), &t);
        assert_eq!(at([1.0, 0.0, 0.0, 0.0]), (3.0, 3.0));
        assert_eq!(at([0.0, 0.0, 0.0, 1.0]), (1.0, 1.0));
        assert_eq!(at([0.25; 4]), (2.25, 2.25));
        assert_eq!(at([0.0, 1.0, 0.0, 0.0]), (0.0, 5.0));
    }

    #[test]
    fn preset_lookup() {
        assert_eq!(PayoffTable::preset("prisoners-dilemma").unwrap(), PayoffTable::prisoners_dilemma());
        assert!(PayoffTable::preset("chicken").is_err());
    }

    #[test]
    fn surface_corners() {
        let t = PayoffTable::prisoners_dilemma();
        let sweep = Sweep { axis1: SweepAxis::ThetaA, axis2: SweepAxis::ThetaB, points: 33 };
        let fixed = (StrategyAngles::default(), StrategyAngles::default());

        let s = payoff_surface(&GameModel::original(), &sweep, &fixed, &t).unwrap();
        assert_eq!(s.points.len(), 1089);
        let p = s.points[0];
        assert!((p.payoff_a - 3.0).abs() < 1e-12 && (p.payoff_b - 3.0).abs() < 1e-12);

        let s = payoff_surface(&GameModel::simplified(), &sweep, &fixed, &t).unwrap();
        let p = s.points[0];
        assert!((p.payoff_a - 2.0).abs() < 1e-12 && (p.payoff_b - 2.0).abs() < 1e-12);
        let last = s.points.last().unwrap();
        assert!((last.axis1_value - PI).abs() < 1e-15 && (last.axis2_value - PI).abs() < 1e-15);
    }

    #[test]
    fn surface_rejects_bad_sweeps() {
        let t = PayoffTable::prisoners_dilemma();
        let fixed = (StrategyAngles::default(), StrategyAngles::default());
        let one = Sweep { axis1: SweepAxis::ThetaA, axis2: SweepAxis::PhiB, points: 1 };
        assert!(payoff_surface(&GameModel::original(), &one, &fixed, &t).is_err());
        let same = Sweep { axis1: SweepAxis::PhiA, axis2: SweepAxis::PhiA, points: 4 };
        assert!(payoff_surface(&GameModel::original(), &same, &fixed, &t).is_err());
        assert!(matches!("lambda_A".parse::<SweepAxis>(), Err(Error::Parameter(_))));
        assert_eq!("psi_B".parse::<SweepAxis>().unwrap(), SweepAxis::PsiB);
    }

    #[test]
    fn phase_axes_do_not_repeat_endpoint() {
        assert_eq!(SweepAxis::PhiA.grid_value(0, 4), 0.0);
        assert!((SweepAxis::PhiA.grid_value(3, 4) - 1.5 * PI).abs() < 1e-15);
    }
}
