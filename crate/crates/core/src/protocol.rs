//! The two-qubit remote state preparation protocol.
//!
//! Alice holds particles 1 and 3, Bob holds 2 and 4. The shared channel is
//! `(a|00> + b|11>)_12 ⊗ (c|00> + d|11>)_34`; the maximally entangled case is
//! `a = b = c = d = 1/√2` and runs through the same code path, where the
//! auxiliary stage degenerates into a deterministic success.
//!
//! Register layout used everywhere in this module:
//! - channel state: particle order `(1, 3, 2, 4)`, Alice on qubits 0 and 1;
//! - Bob's register: `(2, 4)`;
//! - auxiliary stage: `(2, 4, a)`.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::qstate::{
    apply_unitary, fidelity_up_to_phase, inner, permute_qubits, project_subsystem, tensor,
    Amplitude, StateError, StateVector, UnitaryMatrix,
};

/// Tolerance on user-supplied coefficients.
pub const INPUT_TOLERANCE: f64 = 1e-9;

/// A target whose squared norm is within this window of one is rescaled
/// instead of rejected.
pub const RENORMALIZE_WINDOW: f64 = 1e-6;

/// Branches with probability at or below this cannot be forced.
pub const DEGENERATE_PROBABILITY: f64 = 1e-20;

/// Alice's qubits inside the channel state.
pub const ALICE_QUBITS: [usize; 2] = [0, 1];

/// Particle order `(1, 2, 3, 4)` -> `(1, 3, 2, 4)`.
pub const CHANNEL_PERMUTATION: [usize; 4] = [0, 2, 1, 3];

/// The auxiliary qubit inside the `(2, 4, a)` register.
pub const AUX_QUBIT: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("alpha must be real, found imaginary part {0:e}")]
    NonRealAlpha(f64),
    #[error("gamma must be real, found imaginary part {0:e}")]
    NonRealGamma(f64),
    #[error("target norm squared is {0}, expected 1")]
    TargetNorm(f64),
    #[error("conj(beta)*delta must be real, found imaginary part {0:e}")]
    ComplexBetaDelta(f64),
    #[error("channel pair ({first}, {second}) has norm squared {norm_sqr}, expected 1")]
    ChannelNorm {
        first: f64,
        second: f64,
        norm_sqr: f64,
    },
    #[error("channel pair ({first}, {second}) must satisfy |{first}| <= {second} with {second} > 0")]
    ChannelOrdering { first: f64, second: f64 },
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("branch {outcome} has probability {probability:e} and cannot be selected")]
    DegenerateBranch { outcome: String, probability: f64 },
    #[error(transparent)]
    Uncorrectable(#[from] Uncorrectable),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Bob cannot turn this branch into the target without knowing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("outcome {0} has no target-independent correction")]
pub struct Uncorrectable(pub AliceOutcome);

/// Result of Alice's measurement; doubles as her two-bit classical message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AliceOutcome {
    Phi,
    PhiPerp,
    Psi,
    PsiPerp,
}

impl AliceOutcome {
    pub const ALL: [AliceOutcome; 4] = [
        AliceOutcome::Phi,
        AliceOutcome::PhiPerp,
        AliceOutcome::Psi,
        AliceOutcome::PsiPerp,
    ];

    /// Two-bit message value, also the index into [`MeasurementBasis`].
    pub fn bits(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_correctable(self) -> bool {
        matches!(self, AliceOutcome::PhiPerp | AliceOutcome::PsiPerp)
    }

    pub fn label(self) -> &'static str {
        match self {
            AliceOutcome::Phi => "phi",
            AliceOutcome::PhiPerp => "phi-perp",
            AliceOutcome::Psi => "psi",
            AliceOutcome::PsiPerp => "psi-perp",
        }
    }
}

impl fmt::Display for AliceOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown outcome label {0:?}")]
pub struct UnknownLabel(pub String);

impl FromStr for AliceOutcome {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AliceOutcome::ALL
            .into_iter()
            .find(|o| o.label() == s)
            .ok_or_else(|| UnknownLabel(s.to_owned()))
    }
}

/// Bob's computational-basis measurement on the auxiliary qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuxOutcome {
    Aux0,
    Aux1,
}

impl AuxOutcome {
    pub fn bit(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for AuxOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bit())
    }
}

impl FromStr for AuxOutcome {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" => Ok(AuxOutcome::Aux0),
            "1" => Ok(AuxOutcome::Aux1),
            _ => Err(UnknownLabel(s.to_owned())),
        }
    }
}

/// Outcome of one named constraint check on raw target coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub name: &'static str,
    /// The quantity compared against `tolerance`.
    pub deviation: f64,
    pub tolerance: f64,
    pub satisfied: bool,
}

/// The state `α|00> + β|01> + γ|10> + δ|11>` Alice wants Bob to hold.
///
/// `α` and `γ` are real, `β` and `δ` complex with `conj(β)·δ` real. Those
/// reality constraints are what make the measurement basis orthonormal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    alpha: f64,
    beta: Amplitude,
    gamma: f64,
    delta: Amplitude,
}

impl TargetState {
    /// Checks each constraint on raw coefficients without failing early.
    /// `conj(β)·δ` is evaluated on the rescaled coefficients when the norm
    /// is nonzero.
    pub fn check_constraints(raw: [Amplitude; 4]) -> Vec<ConstraintCheck> {
        let norm_sqr: f64 = raw.iter().map(|a| a.norm_sqr()).sum();
        let scale = if norm_sqr > 0.0 { norm_sqr.sqrt() } else { 1.0 };
        let beta_delta = (raw[1] / scale).conj() * (raw[3] / scale);
        let check = |name, deviation: f64, tolerance| ConstraintCheck {
            name,
            deviation,
            tolerance,
            satisfied: deviation.is_finite() && deviation <= tolerance,
        };
        vec![
            check("alpha_real", raw[0].im.abs(), INPUT_TOLERANCE),
            check("gamma_real", raw[2].im.abs(), INPUT_TOLERANCE),
            check("normalized", (norm_sqr - 1.0).abs(), RENORMALIZE_WINDOW),
            check("beta_conj_delta_real", beta_delta.im.abs(), INPUT_TOLERANCE),
        ]
    }

    /// Validates raw `(α, β, γ, δ)`, rescaling to unit norm when the norm
    /// is within [`RENORMALIZE_WINDOW`] of one.
    pub fn validate(raw: [Amplitude; 4]) -> Result<Self, ProtocolError> {
        if raw.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(ProtocolError::NonFinite);
        }
        if raw[0].im.abs() > INPUT_TOLERANCE {
            return Err(ProtocolError::NonRealAlpha(raw[0].im));
        }
        if raw[2].im.abs() > INPUT_TOLERANCE {
            return Err(ProtocolError::NonRealGamma(raw[2].im));
        }
        let norm_sqr: f64 = raw.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > RENORMALIZE_WINDOW {
            return Err(ProtocolError::TargetNorm(norm_sqr));
        }
        let n = norm_sqr.sqrt();
        let target = Self {
            alpha: raw[0].re / n,
            beta: raw[1] / n,
            gamma: raw[2].re / n,
            delta: raw[3] / n,
        };
        let bd = target.beta.conj() * target.delta;
        if bd.im.abs() > INPUT_TOLERANCE {
            return Err(ProtocolError::ComplexBetaDelta(bd.im));
        }
        Ok(target)
    }

    pub fn new(
        alpha: f64,
        beta: Amplitude,
        gamma: f64,
        delta: Amplitude,
    ) -> Result<Self, ProtocolError> {
        Self::validate([
            Amplitude::new(alpha, 0.0),
            beta,
            Amplitude::new(gamma, 0.0),
            delta,
        ])
    }

    /// Draws a valid target: real `α, γ`, and `β, δ` sharing one random phase.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let v: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-3 {
                continue;
            }
            let phase = Amplitude::from_polar(1.0, rng.random_range(0.0..TAU));
            return Self {
                alpha: v[0] / n,
                beta: phase * (v[1] / n),
                gamma: v[2] / n,
                delta: phase * (v[3] / n),
            };
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> Amplitude {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> Amplitude {
        self.delta
    }

    pub fn amplitudes(&self) -> [Amplitude; 4] {
        [
            Amplitude::new(self.alpha, 0.0),
            self.beta,
            Amplitude::new(self.gamma, 0.0),
            self.delta,
        ]
    }

    pub fn state(&self) -> StateVector {
        StateVector::new(self.amplitudes().to_vec()).expect("validated target is a 2-qubit state")
    }
}

/// Real coefficients of the two channel pairs `a|00>+b|11>` and `c|00>+d|11>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPair {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl ChannelPair {
    /// Requires unit norm per pair, `|a| <= b` and `|c| <= d` with `b, d > 0`.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, ProtocolError> {
        Self::check_pair(a, b)?;
        Self::check_pair(c, d)?;
        Ok(Self { a, b, c, d })
    }

    fn check_pair(first: f64, second: f64) -> Result<(), ProtocolError> {
        if !first.is_finite() || !second.is_finite() {
            return Err(ProtocolError::NonFinite);
        }
        let norm_sqr = first * first + second * second;
        if (norm_sqr - 1.0).abs() > INPUT_TOLERANCE {
            return Err(ProtocolError::ChannelNorm {
                first,
                second,
                norm_sqr,
            });
        }
        if second <= 0.0 || first.abs() > second + INPUT_TOLERANCE {
            return Err(ProtocolError::ChannelOrdering { first, second });
        }
        Ok(())
    }

    /// Derives `b = √(1−a²)` and `d = √(1−c²)`.
    pub fn from_ac(a: f64, c: f64) -> Result<Self, ProtocolError> {
        if !a.is_finite() || !c.is_finite() {
            return Err(ProtocolError::NonFinite);
        }
        let b = (1.0 - a * a).max(0.0).sqrt();
        let d = (1.0 - c * c).max(0.0).sqrt();
        Self::new(a, b, c, d)
    }

    /// Two maximally entangled pairs.
    pub fn epr() -> Self {
        Self {
            a: FRAC_1_SQRT_2,
            b: FRAC_1_SQRT_2,
            c: FRAC_1_SQRT_2,
            d: FRAC_1_SQRT_2,
        }
    }

    /// Uniform `a, c` in `[-1/√2, 1/√2]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let a = rng.random_range(-FRAC_1_SQRT_2..=FRAC_1_SQRT_2);
        let c = rng.random_range(-FRAC_1_SQRT_2..=FRAC_1_SQRT_2);
        Self::from_ac(a, c).expect("sampled inside the valid box")
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }
}

/// Alice's basis on particles (1, 3), indexed by [`AliceOutcome`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    vectors: [StateVector; 4],
}

impl MeasurementBasis {
    /// Substitutes raw coefficients into the basis formulas without any
    /// validation. Orthonormality only holds for a valid target.
    pub fn from_raw(raw: [Amplitude; 4]) -> Self {
        let [al, be, ga, de] = raw;
        let v = |amps: [Amplitude; 4]| {
            StateVector::new(amps.to_vec()).expect("four finite amplitudes")
        };
        Self {
            vectors: [
                v([al, be, ga, de]),
                v([-de.conj(), ga, -be.conj(), al]),
                v([ga, de, -al, -be]),
                v([be.conj(), -al, -de.conj(), ga]),
            ],
        }
    }

    pub fn get(&self, outcome: AliceOutcome) -> &StateVector {
        &self.vectors[outcome.index()]
    }

    pub fn vectors(&self) -> &[StateVector; 4] {
        &self.vectors
    }

    /// Largest entrywise deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, x) in self.vectors.iter().enumerate() {
            for (j, y) in self.vectors.iter().enumerate() {
                let g = inner(x, y).expect("same dimension");
                let e = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - e).norm());
            }
        }
        worst
    }
}

pub fn build_measurement_basis(target: &TargetState) -> MeasurementBasis {
    MeasurementBasis::from_raw(target.amplitudes())
}

/// Channel state in particle order `(1, 3, 2, 4)`.
pub fn build_channel_state(ch: &ChannelPair) -> StateVector {
    let pair = |x: f64, y: f64| StateVector::from_real(&[x, 0.0, 0.0, y]).expect("2-qubit pair");
    let product = tensor(&pair(ch.a, ch.b), &pair(ch.c, ch.d)).expect("4 qubits fit");
    permute_qubits(&product, &CHANNEL_PERMUTATION).expect("fixed bijection")
}

/// Unnormalized Bob residual and probability for every Alice outcome.
pub fn alice_branches(
    channel_state: &StateVector,
    basis: &MeasurementBasis,
) -> Result<[(StateVector, f64); 4], ProtocolError> {
    let project = |o: AliceOutcome| project_subsystem(channel_state, basis.get(o), &ALICE_QUBITS);
    Ok([
        project(AliceOutcome::Phi)?,
        project(AliceOutcome::PhiPerp)?,
        project(AliceOutcome::Psi)?,
        project(AliceOutcome::PsiPerp)?,
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AliceMeasurement {
    pub outcome: AliceOutcome,
    /// Normalized state of particles (2, 4).
    pub bob_state: StateVector,
    pub probability: f64,
}

/// Alice measures particles (1, 3). `forced` selects a branch
/// deterministically; otherwise one uniform draw from `rng` picks a branch
/// with the exact branch probabilities.
pub fn alice_measure<R: Rng + ?Sized>(
    channel_state: &StateVector,
    basis: &MeasurementBasis,
    forced: Option<AliceOutcome>,
    rng: &mut R,
) -> Result<AliceMeasurement, ProtocolError> {
    let branches = alice_branches(channel_state, basis)?;
    let outcome = match forced {
        Some(o) => o,
        None => {
            let probs: Vec<f64> = branches.iter().map(|(_, p)| *p).collect();
            AliceOutcome::ALL[sample_index(&probs, rng.random::<f64>())]
        }
    };
    let (residual, probability) = &branches[outcome.index()];
    if *probability <= DEGENERATE_PROBABILITY {
        return Err(ProtocolError::DegenerateBranch {
            outcome: outcome.to_string(),
            probability: *probability,
        });
    }
    Ok(AliceMeasurement {
        outcome,
        bob_state: residual.normalize()?,
        probability: *probability,
    })
}

/// Picks index `k` with `Σ_{j<k} p_j <= u·Σp < Σ_{j<=k} p_j`, never
/// returning a zero-weight index.
fn sample_index(probs: &[f64], u: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let threshold = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p <= DEGENERATE_PROBABILITY {
            continue;
        }
        acc += p;
        last = k;
        if threshold < acc {
            return k;
        }
    }
    last
}

fn real_2x2(m: [f64; 4]) -> UnitaryMatrix {
    UnitaryMatrix::from_real(2, &m).expect("2x2")
}

const PAULI_X: [f64; 4] = [0.0, 1.0, 1.0, 0.0];
const PAULI_Z: [f64; 4] = [1.0, 0.0, 0.0, -1.0];
/// `|0><1| - |1><0|`
const LOWER_FLIP: [f64; 4] = [0.0, 1.0, -1.0, 0.0];
/// `-|0><1| + |1><0|`
const RAISE_FLIP: [f64; 4] = [0.0, -1.0, 1.0, 0.0];

/// `X ⊗ (|0><1| − |1><0|)` on (2, 4), used after a `PhiPerp` outcome.
pub fn phi_perp_correction() -> UnitaryMatrix {
    real_2x2(PAULI_X).kron(&real_2x2(LOWER_FLIP))
}

/// `Z ⊗ (−|0><1| + |1><0|)` on (2, 4), used after a `PsiPerp` outcome.
pub fn psi_perp_correction() -> UnitaryMatrix {
    real_2x2(PAULI_Z).kron(&real_2x2(RAISE_FLIP))
}

/// `Z ⊗ (|0><1| − |1><0|)`: the `PsiPerp` correction with the opposite
/// overall sign. It prepares `−|target>`, the same physical state.
pub fn psi_perp_correction_sign_flipped() -> UnitaryMatrix {
    real_2x2(PAULI_Z).kron(&real_2x2(LOWER_FLIP))
}

/// Correction Bob applies on receiving Alice's message.
pub fn bob_primary_correction(outcome: AliceOutcome) -> Result<UnitaryMatrix, Uncorrectable> {
    match outcome {
        AliceOutcome::PhiPerp => Ok(phi_perp_correction()),
        AliceOutcome::PsiPerp => Ok(psi_perp_correction()),
        other => Err(Uncorrectable(other)),
    }
}

/// `[[r, s], [s, −r]]` with `s = √(1 − r²)`.
fn reflection_block(ratio: f64) -> [[f64; 2]; 2] {
    let s = (1.0 - ratio * ratio).max(0.0).sqrt();
    [[ratio, s], [s, -ratio]]
}

/// Block-diagonal 8x8 unitary on `(2, 4, a)` that equalizes the channel
/// weights. Block order follows the ordering of the corrected amplitudes:
///
/// - `PhiPerp`: `ac/bd`, `a/b`, `c/d`, then the diagonal `(1, −1)`;
/// - `PsiPerp`: `c/d`, `(1, −1)`, `ac/bd`, `a/b`.
pub fn build_aux_unitary(ch: &ChannelPair, outcome: AliceOutcome) -> Result<UnitaryMatrix, ProtocolError> {
    let acbd = reflection_block((ch.a * ch.c) / (ch.b * ch.d));
    let ab = reflection_block(ch.a / ch.b);
    let cd = reflection_block(ch.c / ch.d);
    let sign = [[1.0, 0.0], [0.0, -1.0]];
    let blocks = match outcome {
        AliceOutcome::PhiPerp => [acbd, ab, cd, sign],
        AliceOutcome::PsiPerp => [cd, sign, acbd, ab],
        other => return Err(Uncorrectable(other).into()),
    };
    Ok(UnitaryMatrix::block_diagonal(&blocks)?)
}

/// State of `(2, 4, a)` after appending `|0>_a` and applying the auxiliary
/// unitary, before Bob measures `a`.
pub fn aux_joint_state(
    corrected_state: &StateVector,
    ch: &ChannelPair,
    outcome: AliceOutcome,
) -> Result<StateVector, ProtocolError> {
    let u = build_aux_unitary(ch, outcome)?;
    let with_aux = tensor(corrected_state, &StateVector::basis(1, 0)?)?;
    Ok(apply_unitary(&with_aux, &u, &[0, 1, 2])?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuxMeasurement {
    pub outcome: AuxOutcome,
    /// Normalized state of particles (2, 4) after the auxiliary measurement.
    pub final_state: StateVector,
    /// Probability of `outcome` conditioned on Alice's branch.
    pub probability: f64,
}

/// Appends the auxiliary qubit, applies the auxiliary unitary and measures
/// `a` in the computational basis. `Aux0` leaves Bob with the target.
pub fn bob_aux_stage<R: Rng + ?Sized>(
    corrected_state: &StateVector,
    ch: &ChannelPair,
    outcome: AliceOutcome,
    forced: Option<AuxOutcome>,
    rng: &mut R,
) -> Result<AuxMeasurement, ProtocolError> {
    let joint = aux_joint_state(corrected_state, ch, outcome)?;
    let (r0, p0) = project_subsystem(&joint, &StateVector::basis(1, 0)?, &[AUX_QUBIT])?;
    let (r1, p1) = project_subsystem(&joint, &StateVector::basis(1, 1)?, &[AUX_QUBIT])?;
    let aux = match forced {
        Some(a) => a,
        None => match sample_index(&[p0, p1], rng.random::<f64>()) {
            0 => AuxOutcome::Aux0,
            _ => AuxOutcome::Aux1,
        },
    };
    let (residual, probability) = match aux {
        AuxOutcome::Aux0 => (r0, p0),
        AuxOutcome::Aux1 => (r1, p1),
    };
    if probability <= DEGENERATE_PROBABILITY {
        return Err(ProtocolError::DegenerateBranch {
            outcome: format!("aux {aux}"),
            probability,
        });
    }
    Ok(AuxMeasurement {
        outcome: aux,
        final_state: residual.normalize()?,
        probability,
    })
}

/// Forced outcomes for a run; `None` entries are sampled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub alice: Option<AliceOutcome>,
    pub aux: Option<AuxOutcome>,
}

impl RunOptions {
    pub fn forced(alice: AliceOutcome, aux: Option<AuxOutcome>) -> Self {
        Self {
            alice: Some(alice),
            aux,
        }
    }
}

/// Trace of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub alice_outcome: AliceOutcome,
    pub alice_probability: f64,
    /// Whether Bob had a correction for Alice's outcome.
    pub corrected: bool,
    pub aux_outcome: Option<AuxOutcome>,
    pub aux_probability: Option<f64>,
    pub final_bob_state: StateVector,
    pub fidelity_to_target: f64,
    pub success: bool,
}

impl ProtocolResult {
    /// Probability of this exact trace.
    pub fn joint_probability(&self) -> f64 {
        self.alice_probability * self.aux_probability.unwrap_or(1.0)
    }
}

/// Runs the whole protocol once.
pub fn run_protocol<R: Rng + ?Sized>(
    target: &TargetState,
    ch: &ChannelPair,
    options: RunOptions,
    rng: &mut R,
) -> Result<ProtocolResult, ProtocolError> {
    let basis = build_measurement_basis(target);
    let channel = build_channel_state(ch);
    let alice = alice_measure(&channel, &basis, options.alice, rng)?;

    let (corrected, aux_outcome, aux_probability, final_bob_state) =
        match bob_primary_correction(alice.outcome) {
            Ok(u) => {
                let corrected_state = apply_unitary(&alice.bob_state, &u, &[0, 1])?;
                let aux = bob_aux_stage(&corrected_state, ch, alice.outcome, options.aux, rng)?;
                (true, Some(aux.outcome), Some(aux.probability), aux.final_state)
            }
            Err(Uncorrectable(_)) => (false, None, None, alice.bob_state),
        };

    let fidelity_to_target = fidelity_up_to_phase(&final_bob_state, &target.state())?;
    Ok(ProtocolResult {
        alice_outcome: alice.outcome,
        alice_probability: alice.probability,
        corrected,
        aux_outcome,
        aux_probability,
        final_bob_state,
        fidelity_to_target,
        success: corrected && aux_outcome == Some(AuxOutcome::Aux0),
    })
}
