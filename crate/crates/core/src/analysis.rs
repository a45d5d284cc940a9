//! Exact branch analysis, the closed-form success probability and seeded
//! Monte Carlo estimation.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::protocol::{
    aux_joint_state, alice_branches, bob_primary_correction, build_channel_state,
    build_measurement_basis, run_protocol, AliceOutcome, ChannelPair, ProtocolError, RunOptions,
    TargetState, AUX_QUBIT, DEGENERATE_PROBABILITY,
};
use crate::qstate::{apply_unitary, project_subsystem, tensor, Amplitude, StateVector};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("grid step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// Per-outcome probabilities and success weights, indexed by
/// [`AliceOutcome::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct BranchReport {
    pub probabilities: [f64; 4],
    /// Joint probability of the outcome followed by a successful auxiliary
    /// measurement; zero for uncorrectable outcomes.
    pub success: [f64; 4],
    pub total_success: f64,
}

impl BranchReport {
    pub fn probability(&self, outcome: AliceOutcome) -> f64 {
        self.probabilities[outcome.index()]
    }

    pub fn success_of(&self, outcome: AliceOutcome) -> f64 {
        self.success[outcome.index()]
    }
}

/// `2 (a c)^2`.
pub fn closed_form_success(ch: &ChannelPair) -> f64 {
    let ac = ch.a() * ch.c();
    2.0 * ac * ac
}

/// Branch probabilities and success weights computed by pushing exact
/// amplitudes through the protocol stages.
pub fn exact_branch_report(
    target: &TargetState,
    ch: &ChannelPair,
) -> Result<BranchReport, ProtocolError> {
    let basis = build_measurement_basis(target);
    let branches = alice_branches(&build_channel_state(ch), &basis)?;
    let mut probabilities = [0.0; 4];
    let mut success = [0.0; 4];
    for outcome in AliceOutcome::ALL {
        let (residual, p) = &branches[outcome.index()];
        probabilities[outcome.index()] = *p;
        let Ok(u) = bob_primary_correction(outcome) else {
            continue;
        };
        if *p <= DEGENERATE_PROBABILITY {
            continue;
        }
        let corrected = apply_unitary(&residual.normalize()?, &u, &[0, 1])?;
        let joint = aux_joint_state(&corrected, ch, outcome)?;
        let (_, p0) = project_subsystem(&joint, &StateVector::basis(1, 0)?, &[AUX_QUBIT])?;
        success[outcome.index()] = p * p0;
    }
    let total_success: f64 = success.iter().sum();
    debug_assert!((total_success - closed_form_success(ch)).abs() <= 1e-10);
    Ok(BranchReport {
        probabilities,
        success,
        total_success,
    })
}

/// Bob's unnormalized states for each outcome, written directly from the
/// expansion of the channel in Alice's basis (no projection involved):
///
/// ```text
/// Phi      ac α |00> + ad β*|01> + bc γ |10> + bd δ*|11>
/// PhiPerp −ac δ |00> + ad γ |01> − bc β |10> + bd α |11>
/// Psi      ac γ |00> + ad δ*|01> − bc α |10> − bd β*|11>
/// PsiPerp  ac β |00> − ad α |01> − bc δ |10> + bd γ |11>
/// ```
pub fn printed_branch_states(target: &TargetState, ch: &ChannelPair) -> [StateVector; 4] {
    let [al, be, ga, de] = target.amplitudes();
    let (ac, ad, bc, bd) = (
        ch.a() * ch.c(),
        ch.a() * ch.d(),
        ch.b() * ch.c(),
        ch.b() * ch.d(),
    );
    let ket = |v: [Amplitude; 4]| {
        StateVector::unnormalized(vec![v[0] * ac, v[1] * ad, v[2] * bc, v[3] * bd])
            .expect("four finite amplitudes")
    };
    [
        ket([al, be.conj(), ga, de.conj()]),
        ket([-de, ga, -be, al]),
        ket([ga, de.conj(), -al, -be.conj()]),
        ket([be, -al, -de, ga]),
    ]
}

/// Branch weights for the two correctable outcomes as closed-form sums,
/// `(PhiPerp, PsiPerp)`.
pub fn printed_correctable_probabilities(target: &TargetState, ch: &ChannelPair) -> (f64, f64) {
    let (a, b, c, d) = (ch.a(), ch.b(), ch.c(), ch.d());
    let al = target.alpha().powi(2);
    let be = target.beta().norm_sqr();
    let ga = target.gamma().powi(2);
    let de = target.delta().norm_sqr();
    let sq = |x: f64| x * x;
    let phi_perp = sq(b * d) * al + sq(b * c) * be + sq(a * d) * ga + sq(a * c) * de;
    let psi_perp = sq(a * d) * al + sq(a * c) * be + sq(b * d) * ga + sq(b * c) * de;
    (phi_perp, psi_perp)
}

/// Rebuilds the channel as `Σ_k |basis_k>_13 ⊗ |branch_k>_24` from the
/// closed-form branch states and returns the largest entrywise deviation
/// from the directly built channel state.
pub fn oracle_reconstruct(target: &TargetState, ch: &ChannelPair) -> Result<f64, ProtocolError> {
    let basis = build_measurement_basis(target);
    let branches = printed_branch_states(target, ch);
    let mut sum = StateVector::unnormalized(vec![Amplitude::new(0.0, 0.0); 16])?;
    for (b, k) in basis.vectors().iter().zip(&branches) {
        sum = sum.add(&tensor(b, k)?)?;
    }
    Ok(sum.max_abs_diff(&build_channel_state(ch))?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub trials: u64,
    pub successes: u64,
    pub estimated_rate: f64,
    /// `√(p̂(1−p̂)/N)`
    pub standard_error: f64,
    pub seed: u64,
}

/// Generator for trial `index`: stream `index` of the ChaCha8 keyed by
/// `seed`. Every trial is a pure function of `(seed, index)`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `trials` independent sampled protocol runs in parallel. The result
/// does not depend on scheduling.
pub fn monte_carlo(
    target: &TargetState,
    ch: &ChannelPair,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloSummary, AnalysisError> {
    if trials == 0 {
        return Err(AnalysisError::ZeroTrials);
    }
    let successes = (0..trials)
        .into_par_iter()
        .map(|i| {
            let res = run_protocol(target, ch, RunOptions::default(), &mut trial_rng(seed, i))?;
            Ok(u64::from(res.success))
        })
        .try_reduce(|| 0, |x, y| Ok(x + y))
        .map_err(AnalysisError::Protocol)?;
    let n = trials as f64;
    let rate = successes as f64 / n;
    Ok(MonteCarloSummary {
        trials,
        successes,
        estimated_rate: rate,
        standard_error: (rate * (1.0 - rate) / n).sqrt(),
        seed,
    })
}

/// Channel coefficients `0, step, 2·step, …` up to and including `1/√2`
/// (with a `1e-12` allowance for accumulated rounding).
pub fn channel_grid(step: f64) -> Result<Vec<f64>, AnalysisError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(AnalysisError::BadStep(step));
    }
    Ok((0..)
        .map(|i| i as f64 * step)
        .take_while(|&x| x <= FRAC_1_SQRT_2 + 1e-12)
        .map(|x| x.min(FRAC_1_SQRT_2))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub a: f64,
    pub c: f64,
    pub closed_form: f64,
    pub monte_carlo: Option<MonteCarloSummary>,
}

/// Monte Carlo settings for a sweep; trial seeds are offset by the grid
/// point's row index so points are independent.
#[derive(Debug, Clone, Copy)]
pub struct SweepSampling<'t> {
    pub target: &'t TargetState,
    pub trials: u64,
    pub seed: u64,
}

/// Rows in `a`-major order over `channel_grid(step)²`.
pub fn sweep(step: f64, sampling: Option<SweepSampling<'_>>) -> Result<Vec<SweepRow>, AnalysisError> {
    let grid = channel_grid(step)?;
    let mut rows = Vec::with_capacity(grid.len() * grid.len());
    for &a in &grid {
        for &c in &grid {
            let ch = ChannelPair::from_ac(a, c)?;
            let monte_carlo = match sampling {
                Some(s) => {
                    let seed = s.seed.wrapping_add(rows.len() as u64);
                    Some(monte_carlo(s.target, &ch, s.trials, seed)?)
                }
                None => None,
            };
            rows.push(SweepRow {
                a,
                c,
                closed_form: closed_form_success(&ch),
                monte_carlo,
            });
        }
    }
    Ok(rows)
}
