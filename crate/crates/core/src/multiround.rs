//! The k-round game with myopic per-round equilibria.
//!
//! The `m` items are split into bundles `m^1..m^k`. In round `t` each player
//! values items by its marginal valuation given what it already holds, and
//! the players play an equilibrium of that round's single-round game. The
//! round game is built only from current marginals and `m^t`, so no round
//! sees the size of later bundles.
//!
//! `Δ^t` is the largest value any player has for one more item entering
//! round `t`; `Δ^{k+1}` is recorded after the last round.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{best_response_dynamics, compute_nash, verify_nash};
use crate::error::{GameError, Result};
use crate::mechanism::{dp_optimal_value, hrg_allocate, Allocation, StrategyProfile};
use crate::numeric::{le_tol, INEQUALITY_TOLERANCE};
use crate::valuation::GameInstance;

/// How bundle sizes are derived when `m` is not a multiple of `k(k+1)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sizing {
    /// Exact `m^t = t·m^1`; indivisible `m` is an error.
    Strict,
    /// Floor of the ideal sizes, remainder handed out from the last round
    /// backwards.
    Rounded,
}

/// Bundle sizes `m^1..m^k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiRoundConfig {
    bundle_sizes: Vec<usize>,
}

impl MultiRoundConfig {
    pub fn new(bundle_sizes: Vec<usize>) -> Result<Self> {
        if bundle_sizes.is_empty() {
            return Err(GameError::InvalidArgument(
                "at least one round is required".into(),
            ));
        }
        if bundle_sizes.contains(&0) {
            return Err(GameError::InvalidArgument(format!(
                "bundle sizes must be positive: {bundle_sizes:?}"
            )));
        }
        Ok(Self { bundle_sizes })
    }

    pub fn k(&self) -> usize {
        self.bundle_sizes.len()
    }

    pub fn bundle_sizes(&self) -> &[usize] {
        &self.bundle_sizes
    }

    pub fn total(&self) -> usize {
        self.bundle_sizes.iter().sum()
    }

    /// `y_t = m^t / m^1`.
    pub fn ratios(&self) -> Vec<f64> {
        let first = self.bundle_sizes[0] as f64;
        self.bundle_sizes
            .iter()
            .map(|&s| s as f64 / first)
            .collect()
    }
}

/// Bundles growing linearly, `m^t ∝ t`, summing to `m`.
pub fn bundle_sizes_ratio_t(m: usize, k: usize, sizing: Sizing) -> Result<MultiRoundConfig> {
    if k == 0 {
        return Err(GameError::InvalidArgument("k must be at least 1".into()));
    }
    let triangle = k * (k + 1) / 2;
    match sizing {
        Sizing::Strict => {
            if m == 0 || !m.is_multiple_of(triangle) {
                return Err(GameError::Indivisible {
                    m,
                    k,
                    required: triangle,
                });
            }
            let unit = m / triangle;
            MultiRoundConfig::new((1..=k).map(|t| t * unit).collect())
        }
        Sizing::Rounded => {
            let mut sizes: Vec<usize> = (1..=k).map(|t| t * m / triangle).collect();
            let mut remainder = m - sizes.iter().sum::<usize>();
            for s in sizes.iter_mut().rev() {
                if remainder == 0 {
                    break;
                }
                *s += 1;
                remainder -= 1;
            }
            MultiRoundConfig::new(sizes)
        }
    }
}

/// How each round's equilibrium is selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundPlay {
    /// The constructed equilibrium of [`compute_nash`].
    ComputeNash,
    /// The fixed point reached by best-response dynamics from the empty
    /// profile, capped at the given number of passes.
    BestResponse { max_passes: usize },
}

/// One round of a [`RoundTrace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub items: usize,
    pub requests: StrategyProfile,
    pub allocation: Allocation,
    /// `α_i^t` after this round.
    pub cumulative: Vec<usize>,
    /// `Δ^t`, measured before the round is played.
    pub delta: f64,
    /// `sw(s^t)`: sum of marginal values of the round's allocation.
    pub welfare: f64,
    /// No player had positive marginal value; nothing was allocated.
    pub skipped: bool,
    /// The round profile passed the deviation check in its round game.
    pub nash_verified: bool,
}

/// Full record of a k-round run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub bundle_sizes: Vec<usize>,
    pub rounds: Vec<RoundRecord>,
    /// `Δ^{k+1}`.
    pub final_delta: f64,
    /// `sw(s) = Σ_i v_i(α_i^k)`.
    pub total_welfare: f64,
}

impl RoundTrace {
    pub fn k(&self) -> usize {
        self.rounds.len()
    }

    /// `Δ^1, ..., Δ^{k+1}`.
    pub fn deltas(&self) -> Vec<f64> {
        self.rounds
            .iter()
            .map(|r| r.delta)
            .chain(std::iter::once(self.final_delta))
            .collect()
    }

    /// `α_i^k`.
    pub fn final_counts(&self) -> &[usize] {
        self.rounds
            .last()
            .map(|r| r.cumulative.as_slice())
            .unwrap_or(&[])
    }

    pub fn all_rounds_verified(&self) -> bool {
        self.rounds.iter().all(|r| r.nash_verified)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Largest next-item value over all players holding `held`.
fn max_next_item_value(instance: &GameInstance, held: &[usize]) -> f64 {
    held.iter()
        .enumerate()
        .map(|(i, &a)| instance.valuation(i).increment(a + 1))
        .fold(0.0, f64::max)
}

/// Plays the k-round game with [`compute_nash`] in every round.
pub fn run_multiround(instance: &GameInstance, config: &MultiRoundConfig) -> Result<RoundTrace> {
    run_multiround_with(instance, config, RoundPlay::ComputeNash)
}

pub fn run_multiround_with(
    instance: &GameInstance,
    config: &MultiRoundConfig,
    play: RoundPlay,
) -> Result<RoundTrace> {
    if config.total() != instance.m() {
        return Err(GameError::InvalidArgument(format!(
            "bundles sum to {} but the instance has {} items",
            config.total(),
            instance.m()
        )));
    }
    instance.validate()?;
    let n = instance.n();
    let mut held = vec![0usize; n];
    let mut rounds = Vec::with_capacity(config.k());

    for (t, &items) in config.bundle_sizes().iter().enumerate() {
        let delta = max_next_item_value(instance, &held);
        // Each player still has at least `items` unallocated items ahead of it.
        let marginals = instance
            .valuations()
            .iter()
            .zip(&held)
            .map(|(v, &a)| v.marginal(a).map(|mv| mv.truncated(items)))
            .collect::<Result<Vec<_>>>()?;
        let game = GameInstance::new(items, marginals)?;

        let (requests, allocation, nash_verified) = if delta > 0.0 {
            let requests = match play {
                RoundPlay::ComputeNash => compute_nash(&game)?.profile,
                RoundPlay::BestResponse { max_passes } => {
                    best_response_dynamics(&game, &StrategyProfile::empty(n), max_passes)?.profile
                }
            };
            let allocation = hrg_allocate(&requests, items);
            let verified = verify_nash(&game, &requests);
            (requests, allocation, verified)
        } else {
            (StrategyProfile::empty(n), Allocation::new(vec![0; n]), true)
        };

        let welfare = (0..n).map(|i| game.value(i, allocation.get(i))).sum();
        for (h, &x) in held.iter_mut().zip(allocation.counts()) {
            *h += x;
        }
        rounds.push(RoundRecord {
            round: t + 1,
            items,
            requests,
            allocation,
            cumulative: held.clone(),
            delta,
            welfare,
            skipped: delta <= 0.0,
            nash_verified,
        });
    }

    let final_delta = max_next_item_value(instance, &held);
    let total_welfare = (0..n).map(|i| instance.value(i, held[i])).sum();
    Ok(RoundTrace {
        bundle_sizes: config.bundle_sizes().to_vec(),
        rounds,
        final_delta,
        total_welfare,
    })
}

/// `Δ^t ≥ sw(s^t)/m^t ≥ Δ^{t+1}` for every round.
pub fn check_lemma_descdelta(trace: &RoundTrace) -> bool {
    let deltas = trace.deltas();
    trace.rounds.iter().enumerate().all(|(t, r)| {
        let per_item = r.welfare / r.items as f64;
        le_tol(per_item, deltas[t], INEQUALITY_TOLERANCE)
            && le_tol(deltas[t + 1], per_item, INEQUALITY_TOLERANCE)
    })
}

/// `Δ^1 ≥ Δ^2 ≥ ... ≥ Δ^{k+1} ≥ 0`.
pub fn deltas_nonincreasing(trace: &RoundTrace) -> bool {
    let d = trace.deltas();
    d.iter().all(|&x| x >= 0.0) && d.windows(2).all(|w| w[1] <= w[0])
}

/// Right-hand side of the welfare bound
/// `sw(s) + Δ^{k+1} · Σ_t (m^t − sw(s^t)/Δ^t)`, with `sw(s^t)/Δ^t` read as 0
/// for rounds where `Δ^t = 0`.
pub fn lemma_bound_rhs(trace: &RoundTrace) -> f64 {
    let slack: f64 = trace
        .rounds
        .iter()
        .map(|r| {
            let served = if r.delta > 0.0 {
                r.welfare / r.delta
            } else {
                0.0
            };
            r.items as f64 - served
        })
        .sum();
    trace.total_welfare + trace.final_delta * slack
}

/// `sw(OPT) ≤ sw(s) + Δ^{k+1} · Σ_t (m^t − sw(s^t)/Δ^t)` with `sw(OPT)` from
/// the dynamic program.
pub fn check_lemma_bound(instance: &GameInstance, trace: &RoundTrace) -> bool {
    le_tol(
        dp_optimal_value(instance),
        lemma_bound_rhs(trace),
        INEQUALITY_TOLERANCE,
    )
}

/// `sw(OPT) / sw(s)`. 1 when both are zero, `+∞` when only the trace
/// welfare is.
pub fn poa_ratio(instance: &GameInstance, trace: &RoundTrace) -> f64 {
    ratio_or_sentinel(dp_optimal_value(instance), trace.total_welfare)
}

/// `opt / achieved` with the same conventions as [`poa_ratio`].
pub fn ratio_or_sentinel(opt: f64, achieved: f64) -> f64 {
    if achieved > 0.0 {
        opt / achieved
    } else if opt > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::social_welfare;
    use crate::valuation::{gen_poa2_worstcase, gen_random_concave, Valuation};
    use proptest::prelude::*;

    #[test]
    fn ratio_sizing_examples() {
        assert_eq!(
            bundle_sizes_ratio_t(60, 3, Sizing::Strict)
                .unwrap()
                .bundle_sizes(),
            &[10, 20, 30]
        );
        assert_eq!(
            bundle_sizes_ratio_t(6, 1, Sizing::Strict)
                .unwrap()
                .bundle_sizes(),
            &[6]
        );
        assert_eq!(
            bundle_sizes_ratio_t(7, 3, Sizing::Strict),
            Err(GameError::Indivisible {
                m: 7,
                k: 3,
                required: 6
            })
        );
        assert!(bundle_sizes_ratio_t(6, 0, Sizing::Strict).is_err());
        let c = bundle_sizes_ratio_t(60, 3, Sizing::Strict).unwrap();
        assert_eq!(c.ratios(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rounded_sizing() {
        // Ideal sizes 7/6, 14/6, 21/6 floor to 1, 2, 3; the spare item goes last.
        let c = bundle_sizes_ratio_t(7, 3, Sizing::Rounded).unwrap();
        assert_eq!(c.bundle_sizes(), &[1, 2, 4]);
        let c = bundle_sizes_ratio_t(11, 3, Sizing::Rounded).unwrap();
        assert_eq!(c.bundle_sizes(), &[1, 4, 6]);
        assert_eq!(
            bundle_sizes_ratio_t(60, 3, Sizing::Rounded).unwrap(),
            bundle_sizes_ratio_t(60, 3, Sizing::Strict).unwrap()
        );
        // Too few items to give the first round anything.
        assert!(bundle_sizes_ratio_t(3, 3, Sizing::Rounded).is_err());
    }

    #[test]
    fn single_round_reduces_to_one_shot_game() {
        for seed in 0..30 {
            let inst = gen_random_concave(9, 3, seed, 8.0).unwrap();
            let trace = run_multiround(&inst, &MultiRoundConfig::new(vec![9]).unwrap()).unwrap();
            let eq = compute_nash(&inst).unwrap();
            assert_eq!(trace.total_welfare, social_welfare(&inst, &eq.allocation));
            assert_eq!(trace.rounds[0].allocation, eq.allocation);
        }
    }

    #[test]
    fn poa2_two_rounds() {
        let inst = gen_poa2_worstcase(12).unwrap();
        let config = MultiRoundConfig::new(vec![4, 8]).unwrap();
        let trace = run_multiround(&inst, &config).unwrap();
        // Round 1: player 1 certifies all 4 items (ratio 12/4 = 3 beats 1).
        assert_eq!(trace.rounds[0].allocation.counts(), &[4, 0]);
        // Round 2: player 1 has nothing left to gain, player 2 takes all 8.
        assert_eq!(trace.rounds[1].allocation.counts(), &[0, 8]);
        assert_eq!(trace.deltas(), vec![12.0, 1.0, 1.0]);
        assert_eq!(trace.total_welfare, 20.0);
        assert_eq!(poa_ratio(&inst, &trace), 23.0 / 20.0);
        assert!(poa_ratio(&inst, &trace) <= 1.5);
        assert!(check_lemma_descdelta(&trace));
        assert!(check_lemma_bound(&inst, &trace));
        assert!(trace.all_rounds_verified());
    }

    #[test]
    fn poa2_ratio_sizing_two_rounds() {
        let inst = gen_poa2_worstcase(12).unwrap();
        let config = bundle_sizes_ratio_t(12, 2, Sizing::Strict).unwrap();
        assert_eq!(config.bundle_sizes(), &[4, 8]);
        let trace = run_multiround(&inst, &config).unwrap();
        assert!(check_lemma_bound(&inst, &trace));
    }

    #[test]
    fn poa2_single_round_ratio() {
        let inst = gen_poa2_worstcase(10).unwrap();
        let trace = run_multiround(&inst, &MultiRoundConfig::new(vec![10]).unwrap()).unwrap();
        assert_eq!(poa_ratio(&inst, &trace), 1.9);
    }

    #[test]
    fn optimal_trace_has_unit_ratio_and_tight_bound() {
        // Identical linear valuations: any full allocation is optimal.
        let linear: Vec<f64> = (0..=6).map(|x| x as f64).collect();
        let inst = GameInstance::new(6, vec![Valuation::new(linear); 3]).unwrap();
        let trace =
            run_multiround(&inst, &bundle_sizes_ratio_t(6, 3, Sizing::Strict).unwrap()).unwrap();
        assert_eq!(poa_ratio(&inst, &trace), 1.0);
        assert!(check_lemma_bound(&inst, &trace));
        assert_eq!(dp_optimal_value(&inst), trace.total_welfare);
        assert!(lemma_bound_rhs(&trace) >= dp_optimal_value(&inst));
    }

    #[test]
    fn zero_marginal_rounds_are_skipped() {
        let inst = GameInstance::new(
            3,
            vec![
                Valuation::new(vec![0.0, 2.0, 2.0, 2.0]),
                Valuation::new(vec![0.0; 4]),
            ],
        )
        .unwrap();
        let trace = run_multiround(&inst, &MultiRoundConfig::new(vec![1, 2]).unwrap()).unwrap();
        assert!(!trace.rounds[0].skipped);
        assert!(trace.rounds[1].skipped);
        assert_eq!(trace.rounds[1].allocation.counts(), &[0, 0]);
        assert_eq!(trace.final_delta, 0.0);
        assert!(check_lemma_descdelta(&trace));
        assert!(check_lemma_bound(&inst, &trace));
        assert_eq!(poa_ratio(&inst, &trace), 1.0);

        let zeros = GameInstance::new(2, vec![Valuation::new(vec![0.0; 3])]).unwrap();
        let trace = run_multiround(&zeros, &MultiRoundConfig::new(vec![2]).unwrap()).unwrap();
        assert_eq!(poa_ratio(&zeros, &trace), 1.0);
    }

    #[test]
    fn descdelta_negative_control() {
        let inst = gen_poa2_worstcase(12).unwrap();
        let mut trace = run_multiround(&inst, &MultiRoundConfig::new(vec![4, 8]).unwrap()).unwrap();
        // Pretend round 1 earned less per item than the next round's Δ.
        trace.rounds[0].welfare = 0.5 * trace.rounds[0].items as f64;
        assert!(!check_lemma_descdelta(&trace));
    }

    #[test]
    fn mismatched_config_is_rejected() {
        let inst = gen_poa2_worstcase(12).unwrap();
        assert!(run_multiround(&inst, &MultiRoundConfig::new(vec![4, 4]).unwrap()).is_err());
        assert!(MultiRoundConfig::new(vec![]).is_err());
        assert!(MultiRoundConfig::new(vec![3, 0]).is_err());
    }

    #[test]
    fn best_response_play_records_verified_rounds() {
        let inst = gen_poa2_worstcase(12).unwrap();
        let config = MultiRoundConfig::new(vec![4, 8]).unwrap();
        let trace = run_multiround_with(&inst, &config, RoundPlay::BestResponse { max_passes: 50 })
            .unwrap();
        assert!(trace.all_rounds_verified());
        assert!(check_lemma_bound(&inst, &trace));
    }

    #[test]
    fn trace_json_has_per_round_arrays() {
        let inst = gen_poa2_worstcase(12).unwrap();
        let trace = run_multiround(&inst, &MultiRoundConfig::new(vec![4, 8]).unwrap()).unwrap();
        let json: serde_json::Value = serde_json::from_str(&trace.to_json()).unwrap();
        assert_eq!(json["rounds"][0]["allocation"], serde_json::json!([4, 0]));
        assert_eq!(json["rounds"][1]["requests"][1]["quantity"], 8);
        assert_eq!(json["final_delta"], 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(150))]

        #[test]
        fn traces_satisfy_round_invariants(
            k in 1usize..5, unit in 1usize..4, n in 1usize..5, seed in any::<u64>(),
        ) {
            let m = unit * k * (k + 1) / 2;
            let inst = gen_random_concave(m, n, seed, 10.0).unwrap();
            let config = bundle_sizes_ratio_t(m, k, Sizing::Strict).unwrap();
            let trace = run_multiround(&inst, &config).unwrap();
            let mut prev = vec![0; n];
            for r in &trace.rounds {
                for i in 0..n {
                    prop_assert_eq!(r.cumulative[i], prev[i] + r.allocation.get(i));
                }
                if r.delta > 0.0 {
                    prop_assert_eq!(r.allocation.total(), r.items);
                }
                prev = r.cumulative.clone();
            }
            prop_assert!(trace.all_rounds_verified());
            prop_assert!(deltas_nonincreasing(&trace));
            prop_assert!(check_lemma_descdelta(&trace));
            prop_assert!(check_lemma_bound(&inst, &trace));
            prop_assert!(poa_ratio(&inst, &trace) <= 1.0 + 1.0 / k as f64 + 1e-9);
        }
    }
}
