//! Measurement-induced entanglement and teleportation between ensembles.
//!
//! A Bell measurement is two rounds of the same optical setup: a strong pulse
//! crosses sample `a`, suffers transmission loss, crosses sample `b`, suffers
//! detector loss, and its X quadrature is measured. Since `X_out = X_in -
//! κ(P_a + P_b)` for an ideal pass, round one reads `P_a + P_b`. Between the
//! rounds sample `a` is rotated by `-π/2` (`X → -P`, `P → X`) and sample `b`
//! by `+π/2` (`X → P`, `P → -X`), so the first-round observable becomes
//! `-(X_a - X_b)` and round two reads the old `X_a - X_b`.
//!
//! Teleportation runs the same measurement on the local pair (1, 3) and
//! displaces sample 2 by a linear function of both outcomes. The reported
//! fidelity is that of the unconditional output (averaged over outcomes),
//! computed exactly by keeping the measured light quadratures in the
//! register and forming the feed-forward combination.

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Vector2};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{
    GaussianState, MeasurementRecord, Mode, ModeIndex, ModeKind, OutcomeSource, Quadrature, QUARTER_TURN,
};
use crate::interaction::{apply_pass, ChannelParams};

pub const SAMPLE_1: &str = "atom1";
pub const SAMPLE_2: &str = "atom2";
pub const SAMPLE_3: &str = "atom3";

/// Default `κ₁/κ₂` for the asymmetric scheme.
pub const DEFAULT_KAPPA1_RATIO: f64 = 10.0;

/// Parameters of one measurement round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundPlan {
    pub kappa: f64,
    pub eps_p: f64,
    pub eps_a: f64,
    /// Light loss between the first and the second sample.
    pub eta_t: f64,
    /// Detector inefficiency, applied as loss just before the homodyne.
    pub eta_d: f64,
}

impl RoundPlan {
    pub fn ideal(kappa: f64) -> Self {
        RoundPlan { kappa, eps_p: 0.0, eps_a: 0.0, eta_t: 0.0, eta_d: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return invalid(format!("round kappa must be finite and >= 0, got {}", self.kappa));
        }
        for (name, v) in [("eps_p", self.eps_p), ("eps_a", self.eps_a), ("eta_t", self.eta_t), ("eta_d", self.eta_d)] {
            if !(0.0..1.0).contains(&v) {
                return invalid(format!("{name} = {v} outside [0, 1)"));
            }
        }
        Ok(())
    }

    fn channel(&self) -> Result<ChannelParams> {
        ChannelParams::new(self.kappa, self.eps_p, self.eps_a)
    }
}

/// How homodyne outcomes are produced for a run.
pub enum Outcomes<'a> {
    Sample(&'a mut dyn RngCore),
    /// Values consumed in measurement order.
    Forced(Vec<f64>),
}

impl Outcomes<'_> {
    fn next_source(&mut self, index: usize) -> Result<OutcomeSource<'_>> {
        match self {
            Outcomes::Sample(rng) => Ok(OutcomeSource::Sample(&mut **rng)),
            Outcomes::Forced(values) => values
                .get(index)
                .copied()
                .map(OutcomeSource::Forced)
                .ok_or_else(|| Error::InvalidArgument(format!("no forced outcome for measurement {index}"))),
        }
    }
}

enum Readout<'r, 'a> {
    Condition(&'r mut Outcomes<'a>, usize),
    Defer,
}

struct RoundResult {
    state: GaussianState,
    record: Option<MeasurementRecord>,
    light: String,
}

fn run_round(
    state: &GaussianState,
    first: &str,
    second: &str,
    plan: &RoundPlan,
    tag: &str,
    readout: Readout<'_, '_>,
) -> Result<RoundResult> {
    plan.validate()?;
    let channel = plan.channel()?;
    let light_name = format!("light:{tag}");
    let mut s = state.with_vacuum_mode(Mode::new(ModeKind::Light, light_name.clone()))?;
    let light = s.find(&light_name)?;
    s = apply_pass(&s, light, s.find(first)?, &channel)?;
    s = s.loss_channel(light, plan.eta_t)?;
    s = apply_pass(&s, light, s.find(second)?, &channel)?;
    s = s.loss_channel(light, plan.eta_d)?;
    match readout {
        Readout::Defer => Ok(RoundResult { state: s, record: None, light: light_name }),
        Readout::Condition(outcomes, index) => {
            let (outcome, posterior) = s.homodyne(light, Quadrature::X, outcomes.next_source(index)?)?;
            let record = MeasurementRecord {
                mode: light,
                mode_name: light_name.clone(),
                quadrature: Quadrature::X,
                outcome,
                round_tag: tag.to_string(),
            };
            Ok(RoundResult { state: posterior, record: Some(record), light: light_name })
        }
    }
}

/// Rotations applied to the two samples between the rounds.
pub const ROTATION_FIRST_SAMPLE: f64 = -QUARTER_TURN;
pub const ROTATION_SECOND_SAMPLE: f64 = QUARTER_TURN;

fn rotate_pair(state: &GaussianState, a: &str, b: &str) -> Result<GaussianState> {
    state.rotate(state.find(a)?, ROTATION_FIRST_SAMPLE)?.rotate(state.find(b)?, ROTATION_SECOND_SAMPLE)
}

/// Outcome of an entanglement or teleportation run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProtocolReport {
    /// Squeezing parameter; `-¼ ln(epr_x · epr_p)`, which reduces to
    /// `½ ln(1 + 2κ²)` in the ideal symmetric case.
    pub r: f64,
    /// `Var(X₁ - X₂)` of the entangled pair.
    pub epr_x: f64,
    /// `Var(P₁ + P₂)` of the entangled pair.
    pub epr_p: f64,
    /// Unconditional teleportation fidelity, when a teleportation ran.
    pub fidelity: Option<f64>,
    /// Fidelity of the output conditioned on the recorded outcomes.
    pub conditional_fidelity: Option<f64>,
    pub records: Vec<MeasurementRecord>,
    pub seed: Option<u64>,
    pub config_echo: BTreeMap<String, String>,
}

/// EPR variances `(Var(X_a - X_b), Var(P_a + P_b))`.
pub fn epr_variances(state: &GaussianState, a: &str, b: &str) -> Result<(f64, f64)> {
    let (ia, ib) = (state.find(a)?, state.find(b)?);
    let cx = state.combination(&[(ia, Quadrature::X, 1.0), (ib, Quadrature::X, -1.0)])?;
    let cp = state.combination(&[(ia, Quadrature::P, 1.0), (ib, Quadrature::P, 1.0)])?;
    Ok((state.variance_of(&cx)?, state.variance_of(&cp)?))
}

fn squeezing_from_variances(epr_x: f64, epr_p: f64) -> f64 {
    -0.25 * (epr_x * epr_p).ln()
}

/// Generates entanglement between two fresh ensembles by a nonlocal Bell measurement.
///
/// Returns the conditional state of `atom1`, `atom2` (in the rotated frame
/// after round one) and the report.
pub fn entangle(
    round1: &RoundPlan,
    round2: &RoundPlan,
    outcomes: &mut Outcomes<'_>,
) -> Result<(GaussianState, ProtocolReport)> {
    let state =
        GaussianState::vacuum_with(vec![Mode::new(ModeKind::Atom, SAMPLE_1), Mode::new(ModeKind::Atom, SAMPLE_2)])?;
    let (state, records) = bell_measurement(&state, SAMPLE_1, SAMPLE_2, round1, round2, "entangle", outcomes, 0)?;
    let (epr_x, epr_p) = epr_variances(&state, SAMPLE_1, SAMPLE_2)?;
    let report = ProtocolReport {
        r: squeezing_from_variances(epr_x, epr_p),
        epr_x,
        epr_p,
        fidelity: None,
        conditional_fidelity: None,
        records,
        seed: None,
        config_echo: BTreeMap::new(),
    };
    Ok((state, report))
}

#[allow(clippy::too_many_arguments)]
fn bell_measurement(
    state: &GaussianState,
    a: &str,
    b: &str,
    round1: &RoundPlan,
    round2: &RoundPlan,
    tag: &str,
    outcomes: &mut Outcomes<'_>,
    first_index: usize,
) -> Result<(GaussianState, Vec<MeasurementRecord>)> {
    let r1 = run_round(state, a, b, round1, &format!("{tag}:1"), Readout::Condition(outcomes, first_index))?;
    let rotated = rotate_pair(&r1.state, a, b)?;
    let r2 = run_round(&rotated, a, b, round2, &format!("{tag}:2"), Readout::Condition(outcomes, first_index + 1))?;
    let records = r1.record.into_iter().chain(r2.record).collect();
    Ok((r2.state, records))
}

/// Same measurement with both light pulses kept in the register, unmeasured.
/// Returns the state and the names of the two light modes.
fn deferred_bell_measurement(
    state: &GaussianState,
    a: &str,
    b: &str,
    round1: &RoundPlan,
    round2: &RoundPlan,
    tag: &str,
) -> Result<(GaussianState, [String; 2])> {
    let r1 = run_round(state, a, b, round1, &format!("{tag}:1"), Readout::Defer)?;
    let rotated = rotate_pair(&r1.state, a, b)?;
    let r2 = run_round(&rotated, a, b, round2, &format!("{tag}:2"), Readout::Defer)?;
    Ok((r2.state, [r1.light, r2.light]))
}

/// Linear feed-forward from the two local outcomes to the receiver:
/// `(dx, dp) = matrix · (m₁, m₂) + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gain {
    pub matrix: [[f64; 2]; 2],
    pub offset: [f64; 2],
}

impl Gain {
    /// `dx = gx · m₂`, `dp = gp · m₁` with no offset.
    pub fn crossed(gx: f64, gp: f64) -> Self {
        Gain { matrix: [[0.0, gx], [gp, 0.0]], offset: [0.0, 0.0] }
    }

    fn as_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.matrix[0][0], self.matrix[0][1], self.matrix[1][0], self.matrix[1][1])
    }

    fn displacement(&self, outcomes: Vector2<f64>) -> Vector2<f64> {
        self.as_matrix() * outcomes + Vector2::new(self.offset[0], self.offset[1])
    }
}

/// Joint moments of `(X₂, P₂, X_L1, X_L2)` before feed-forward.
struct Prefeed {
    receiver_mean: Vector2<f64>,
    light_mean: Vector2<f64>,
    /// Covariance of `(X₂, P₂, X_L1, X_L2)`.
    cov: nalgebra::Matrix4<f64>,
}

fn prefeed(entangled: &GaussianState, input: (f64, f64), local1: &RoundPlan, local2: &RoundPlan) -> Result<Prefeed> {
    let s = entangled.with_coherent_mode(Mode::new(ModeKind::Atom, SAMPLE_3), input.0, input.1)?;
    let (s, [l1, l2]) = deferred_bell_measurement(&s, SAMPLE_1, SAMPLE_3, local1, local2, "local")?;
    let rx = s.find(SAMPLE_2)?;
    let idx = [rx.x(), rx.p(), s.find(&l1)?.x(), s.find(&l2)?.x()];
    let mean = s.mean();
    let cov = nalgebra::Matrix4::from_fn(|i, j| s.cov()[(idx[i], idx[j])]);
    Ok(Prefeed {
        receiver_mean: Vector2::new(mean[idx[0]], mean[idx[1]]),
        light_mean: Vector2::new(mean[idx[2]], mean[idx[3]]),
        cov,
    })
}

/// Gain giving unit end-to-end mean transfer: the unconditional output mean
/// equals the input mean for every input. Obtained from the affine
/// input-to-mean map of the deferred pipeline by a 2×2 solve.
pub fn calibrate_gain(entangled: &GaussianState, local1: &RoundPlan, local2: &RoundPlan) -> Result<Gain> {
    let base = prefeed(entangled, (0.0, 0.0), local1, local2)?;
    let ex = prefeed(entangled, (1.0, 0.0), local1, local2)?;
    let ep = prefeed(entangled, (0.0, 1.0), local1, local2)?;
    let c = Matrix2::from_columns(&[ex.light_mean - base.light_mean, ep.light_mean - base.light_mean]);
    let a = Matrix2::from_columns(&[ex.receiver_mean - base.receiver_mean, ep.receiver_mean - base.receiver_mean]);
    let c_inv = c.try_inverse().ok_or_else(|| {
        Error::NumericalDegeneracy("outcomes carry no information about the input; gain undefined".into())
    })?;
    let g = (Matrix2::identity() - a) * c_inv;
    let offset = -(base.receiver_mean + g * base.light_mean);
    Ok(Gain { matrix: [[g[(0, 0)], g[(0, 1)]], [g[(1, 0)], g[(1, 1)]]], offset: [offset[0], offset[1]] })
}

/// Unconditional output of the receiver for a given gain.
pub fn teleport_unconditional(
    entangled: &GaussianState,
    input: (f64, f64),
    local1: &RoundPlan,
    local2: &RoundPlan,
    gain: &Gain,
) -> Result<GaussianState> {
    let pf = prefeed(entangled, input, local1, local2)?;
    let g = gain.as_matrix();
    #[rustfmt::skip]
    let t = nalgebra::Matrix2x4::new(
        1.0, 0.0, g[(0, 0)], g[(0, 1)],
        0.0, 1.0, g[(1, 0)], g[(1, 1)],
    );
    let mean = pf.receiver_mean + gain.displacement(pf.light_mean);
    let cov = t * pf.cov * t.transpose();
    GaussianState::from_moments(
        vec![Mode::new(ModeKind::Atom, SAMPLE_2)],
        nalgebra::DVector::from_column_slice(mean.as_slice()),
        nalgebra::DMatrix::from_column_slice(2, 2, cov.as_slice()),
    )
}

/// Teleports the coherent state `input` of sample 3 onto sample 2.
///
/// `entangled` must hold `atom1` and `atom2`. The local Bell measurement on
/// (1, 3) uses `local1` for the first round and `local2` for the second. With
/// `gain = None` the unit-transfer gain from [`calibrate_gain`] is used.
///
/// The returned state is the unconditional receiver state; the report also
/// carries one conditional run drawn from `outcomes`.
pub fn teleport(
    entangled: &GaussianState,
    input: (f64, f64),
    local1: &RoundPlan,
    local2: &RoundPlan,
    gain: Option<Gain>,
    outcomes: &mut Outcomes<'_>,
) -> Result<(GaussianState, ProtocolReport)> {
    let gain = match gain {
        Some(g) => g,
        None => calibrate_gain(entangled, local1, local2)?,
    };
    let (epr_x, epr_p) = epr_variances(entangled, SAMPLE_1, SAMPLE_2)?;
    let output = teleport_unconditional(entangled, input, local1, local2, &gain)?;
    let fidelity = output.fidelity_coherent(ModeIndex(0), input)?;

    let s = entangled.with_coherent_mode(Mode::new(ModeKind::Atom, SAMPLE_3), input.0, input.1)?;
    let (s, records) = bell_measurement(&s, SAMPLE_1, SAMPLE_3, local1, local2, "local", outcomes, 0)?;
    let m = Vector2::new(records[0].outcome, records[1].outcome);
    let d = gain.displacement(m);
    let rx = s.find(SAMPLE_2)?;
    let conditional = s.displace(rx, d[0], d[1])?;
    let conditional_fidelity = conditional.fidelity_coherent(rx, input)?;

    let report = ProtocolReport {
        r: squeezing_from_variances(epr_x, epr_p),
        epr_x,
        epr_p,
        fidelity: Some(fidelity),
        conditional_fidelity: Some(conditional_fidelity),
        records,
        seed: None,
        config_echo: BTreeMap::new(),
    };
    Ok((output, report))
}

/// `r = ½ ln(1 + 2κ²)`.
pub fn squeezing_parameter(kappa: f64) -> Result<f64> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return invalid(format!("kappa must be finite and >= 0, got {kappa}"));
    }
    Ok(0.5 * (1.0 + 2.0 * kappa * kappa).ln())
}

/// Loss-free teleportation fidelity `1 / (1 + 1/(1+2κ²) + 1/(2κ²))`.
pub fn fidelity_ideal(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return invalid(format!("kappa must be finite and > 0, got {kappa}"));
    }
    let k2 = kappa * kappa;
    Ok(1.0 / (1.0 + 1.0 / (1.0 + 2.0 * k2) + 1.0 / (2.0 * k2)))
}

/// Approximate fidelity of the asymmetric scheme under transmission loss,
/// `2 / (2 + 1/κ₂² + κ₂² η_t)`.
pub fn fidelity_lossy(kappa2: f64, eta_t: f64) -> Result<f64> {
    if !(kappa2 > 0.0) || !kappa2.is_finite() {
        return invalid(format!("kappa2 must be finite and > 0, got {kappa2}"));
    }
    if !(0.0..1.0).contains(&eta_t) {
        return invalid(format!("eta_t = {eta_t} outside [0, 1)"));
    }
    let k2 = kappa2 * kappa2;
    Ok(2.0 / (2.0 + 1.0 / k2 + k2 * eta_t))
}

/// `κ₂* = η_t^(-1/4)`, maximizing [`fidelity_lossy`].
pub fn optimal_kappa2(eta_t: f64) -> Result<f64> {
    if !(eta_t > 0.0 && eta_t < 1.0) {
        return invalid(format!("optimal kappa2 needs 0 < eta_t < 1, got {eta_t}"));
    }
    Ok(eta_t.powf(-0.25))
}

/// Upper bound `1 / (1 + √η_t)` reached at [`optimal_kappa2`].
pub fn lossy_bound(eta_t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta_t) {
        return invalid(format!("eta_t = {eta_t} outside [0, 1)"));
    }
    Ok(1.0 / (1.0 + eta_t.sqrt()))
}

/// True iff the fidelity beats the best classical measure-and-prepare scheme
/// for coherent inputs (strictly above 1/2).
pub fn classical_bound_check(fidelity: f64) -> bool {
    fidelity > 0.5
}

/// The four round plans of a complete teleportation experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    pub entangle: [RoundPlan; 2],
    pub local: [RoundPlan; 2],
}

/// Noise shared by every round of a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Noise {
    pub eps_p: f64,
    pub eps_a: f64,
    pub eta_t: f64,
    pub eta_d: f64,
    /// Transmission loss inside the local Bell measurement on (1, 3).
    pub local_eta_t: f64,
}

impl Scheme {
    fn plan(kappa: f64, eta_t: f64, noise: &Noise) -> RoundPlan {
        RoundPlan { kappa, eps_p: noise.eps_p, eps_a: noise.eps_a, eta_t, eta_d: noise.eta_d }
    }

    /// Same κ in all four rounds.
    pub fn symmetric(kappa: f64, noise: Noise) -> Self {
        Scheme {
            entangle: [Self::plan(kappa, noise.eta_t, &noise), Self::plan(kappa, noise.eta_t, &noise)],
            local: [Self::plan(kappa, noise.local_eta_t, &noise), Self::plan(kappa, noise.local_eta_t, &noise)],
        }
    }

    /// Large κ₁ first and κ₂ second when entangling; the reverse order in the
    /// local Bell measurement.
    pub fn asymmetric(kappa1: f64, kappa2: f64, noise: Noise) -> Self {
        Scheme {
            entangle: [Self::plan(kappa1, noise.eta_t, &noise), Self::plan(kappa2, noise.eta_t, &noise)],
            local: [Self::plan(kappa2, noise.local_eta_t, &noise), Self::plan(kappa1, noise.local_eta_t, &noise)],
        }
    }
}

/// Unconditional fidelity of a full run (entangle, then teleport `input`) at calibrated gain.
pub fn scheme_fidelity(scheme: &Scheme, input: (f64, f64)) -> Result<f64> {
    // covariances do not depend on the outcomes; condition on zeros
    let mut zeros = Outcomes::Forced(vec![0.0; 2]);
    let (entangled, _) = entangle(&scheme.entangle[0], &scheme.entangle[1], &mut zeros)?;
    let gain = calibrate_gain(&entangled, &scheme.local[0], &scheme.local[1])?;
    let out = teleport_unconditional(&entangled, input, &scheme.local[0], &scheme.local[1], &gain)?;
    out.fidelity_coherent(ModeIndex(0), input)
}
