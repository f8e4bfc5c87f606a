//! Pure Nash equilibria of the single-round greedy game.
//!
//! [`compute_nash`] builds an equilibrium directly: every player `i` is
//! certified the largest count `α_i` it can be sure to receive whatever the
//! others request, found by binary search over [`is_satisfiable`]. The
//! certified requests allocate every item and each player receives exactly
//! its request.
//!
//! Deviations are always evaluated with truthful declarations
//! `(x', v_i(x'))`. Under the greedy mechanism a higher declared value only
//! moves a request earlier in the order, so for a fixed quantity the
//! truthful declaration weakly dominates any lower one.
//! [`DeviationSpace::ValueGrid`] sweeps lower declarations as well, which is
//! how that reduction is tested.

use std::cell::Cell;
use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::mechanism::{
    hrg_allocate, optimal_allocation, Allocation, HrgScratch, Request, StrategyProfile,
};
use crate::numeric::{cmp_ratio, le_tol, INEQUALITY_TOLERANCE};
use crate::valuation::GameInstance;

/// Valuation table reads, counted.
struct Lookups<'a> {
    instance: &'a GameInstance,
    count: Cell<u64>,
}

impl<'a> Lookups<'a> {
    fn new(instance: &'a GameInstance) -> Self {
        Self {
            instance,
            count: Cell::new(0),
        }
    }

    #[inline]
    fn value(&self, i: usize, x: usize) -> f64 {
        self.count.set(self.count.get() + 1);
        self.instance.value(i, x)
    }

    /// Largest `x ∈ 1..=m` whose ratio `v_j(x)/x` is at least (or, when
    /// `strict`, above) `value/qty`; 0 if there is none. The ratio of a
    /// concave normalized table is nonincreasing, so the satisfying `x` form
    /// a prefix.
    fn max_quantity_above(&self, j: usize, value: f64, qty: usize, strict: bool) -> usize {
        let passes = |x: usize| {
            let ord = cmp_ratio(self.value(j, x), x, value, qty);
            if strict {
                ord == Ordering::Greater
            } else {
                ord != Ordering::Less
            }
        };
        // Invariant: passes(lo) (with lo = 0 as a sentinel), !passes(hi + 1).
        let (mut lo, mut hi) = (0, self.instance.m());
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if passes(mid) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    }

    fn is_satisfiable(&self, i: usize, alpha: usize) -> bool {
        let m = self.instance.m();
        let value = self.value(i, alpha);
        let mut claimed = 0;
        for j in 0..self.instance.n() {
            if j != i {
                // Players before i win ties against it, players after do not.
                claimed += self.max_quantity_above(j, value, alpha, j > i);
            }
        }
        claimed <= m - alpha
    }

    /// Smallest `x ≥ 1` with `v_i(x) > 0`, if any.
    fn first_positive(&self, i: usize) -> Option<usize> {
        let m = self.instance.m();
        if self.value(i, m) <= 0.0 {
            return None;
        }
        let (mut lo, mut hi) = (1, m);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.value(i, mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    }

    fn certified_count(&self, i: usize) -> usize {
        let Some(first) = self.first_positive(i) else {
            return 0;
        };
        if !self.is_satisfiable(i, first) {
            return 0;
        }
        let (mut lo, mut hi) = (first, self.instance.m());
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if self.is_satisfiable(i, mid) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    }
}

/// Whether player `i` requesting `(alpha, v_i(alpha))` is guaranteed
/// `alpha` items no matter what the others request.
///
/// Every other player `j` is charged the largest quantity it could request
/// while still being served before `i`: at a ratio at least `i`'s if
/// `j < i`, strictly above it if `j > i`. The test passes iff those charges
/// leave `alpha` items.
pub fn is_satisfiable(instance: &GameInstance, i: usize, alpha: usize) -> Result<bool> {
    if i >= instance.n() {
        return Err(GameError::OutOfRange {
            what: "player",
            value: i,
            min: 0,
            max: instance.n() - 1,
        });
    }
    if alpha == 0 || alpha > instance.m() {
        return Err(GameError::OutOfRange {
            what: "alpha",
            value: alpha,
            min: 1,
            max: instance.m(),
        });
    }
    if instance.value(i, alpha) <= 0.0 {
        return Err(GameError::InvalidArgument(format!(
            "player {i} has zero value for {alpha} items"
        )));
    }
    Ok(Lookups::new(instance).is_satisfiable(i, alpha))
}

/// Output of [`compute_nash`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumResult {
    pub profile: StrategyProfile,
    pub allocation: Allocation,
    /// Certified count `α_i` per player.
    pub certified: Vec<usize>,
    /// Set when every valuation is identically zero; the profile is then
    /// all-zero.
    pub degenerate: bool,
}

impl EquilibriumResult {
    /// Each player is allocated exactly its certified count and, unless the
    /// instance is degenerate, all `m` items are allocated.
    pub fn invariants_hold(&self, m: usize) -> bool {
        let exact = self.allocation.counts() == &self.certified[..];
        let total: usize = self.certified.iter().sum();
        exact && (self.degenerate || total == m)
    }
}

/// Equilibrium profile `((α_i, v_i(α_i)))_i` with `α_i` the largest count
/// passing [`is_satisfiable`] (0 when none does).
pub fn compute_nash(instance: &GameInstance) -> Result<EquilibriumResult> {
    compute_nash_counted(instance).map(|(result, _)| result)
}

/// [`compute_nash`] plus the number of valuation lookups it performed.
pub fn compute_nash_counted(instance: &GameInstance) -> Result<(EquilibriumResult, u64)> {
    instance.validate()?;
    let lookups = Lookups::new(instance);
    let certified: Vec<usize> = (0..instance.n())
        .map(|i| lookups.certified_count(i))
        .collect();
    let degenerate = (0..instance.n()).all(|i| instance.value(i, instance.m()) == 0.0);
    let profile = StrategyProfile::new(
        certified
            .iter()
            .enumerate()
            .map(|(i, &a)| Request::truthful(instance, i, a))
            .collect(),
    );
    let allocation = hrg_allocate(&profile, instance.m());
    let result = EquilibriumResult {
        profile,
        allocation,
        certified,
        degenerate,
    };
    Ok((result, lookups.count.get()))
}

/// Which unilateral deviations [`verify_nash_with`] tries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviationSpace {
    /// `(x', v_i(x'))` for every `x' ∈ 0..=m`.
    Truthful,
    /// `(x', v_i(x')·s/steps)` for every `x'` and `s ∈ 0..=steps`.
    ValueGrid(usize),
}

/// An improving unilateral deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub player: usize,
    pub request: Request,
    pub current_payoff: f64,
    pub deviation_payoff: f64,
}

/// First improving truthful deviation from `profile`, if any.
pub fn find_improving_deviation(
    instance: &GameInstance,
    profile: &StrategyProfile,
    space: DeviationSpace,
) -> Option<Deviation> {
    let (n, m) = (instance.n(), instance.m());
    let mut scratch = HrgScratch::default();
    let mut counts = vec![0; n];
    scratch.allocate_into(profile.requests(), m, &mut counts);
    let current: Vec<f64> = (0..n).map(|i| instance.value(i, counts[i])).collect();
    let mut trial = profile.requests().to_vec();
    for i in 0..n {
        let original = trial[i];
        for x in 0..=m {
            let top = instance.value(i, x);
            let declarations: Vec<f64> = match space {
                DeviationSpace::Truthful => vec![top],
                DeviationSpace::ValueGrid(steps) if x > 0 && steps > 0 => {
                    (0..=steps).map(|s| top * s as f64 / steps as f64).collect()
                }
                DeviationSpace::ValueGrid(_) => vec![top],
            };
            for d in declarations {
                trial[i] = Request::new(x, if x == 0 { 0.0 } else { d });
                scratch.allocate_into(&trial, m, &mut counts);
                let gained = instance.value(i, counts[i]);
                if gained > current[i] {
                    return Some(Deviation {
                        player: i,
                        request: trial[i],
                        current_payoff: current[i],
                        deviation_payoff: gained,
                    });
                }
            }
        }
        trial[i] = original;
    }
    None
}

/// Whether no player can raise its true payoff by changing its request.
/// Profiles that are not valid for `instance` are never equilibria.
pub fn verify_nash(instance: &GameInstance, profile: &StrategyProfile) -> bool {
    verify_nash_with(instance, profile, DeviationSpace::Truthful)
}

pub fn verify_nash_with(
    instance: &GameInstance,
    profile: &StrategyProfile,
    space: DeviationSpace,
) -> bool {
    profile.validate_against(instance).is_ok()
        && find_improving_deviation(instance, profile, space).is_none()
}

/// Best truthful request for player `i` against the others' fixed requests.
/// Ties go to the smallest quantity.
pub fn best_response(
    instance: &GameInstance,
    profile: &StrategyProfile,
    i: usize,
) -> Result<Request> {
    best_response_with_payoff(instance, profile, i).map(|(r, _)| r)
}

fn best_response_with_payoff(
    instance: &GameInstance,
    profile: &StrategyProfile,
    i: usize,
) -> Result<(Request, f64)> {
    if i >= instance.n() || profile.len() != instance.n() {
        return Err(GameError::OutOfRange {
            what: "player",
            value: i,
            min: 0,
            max: instance.n() - 1,
        });
    }
    let m = instance.m();
    let mut scratch = HrgScratch::default();
    let mut counts = vec![0; instance.n()];
    let mut trial = profile.requests().to_vec();
    let mut best = (Request::NONE, f64::NEG_INFINITY);
    for x in 0..=m {
        trial[i] = Request::truthful(instance, i, x);
        scratch.allocate_into(&trial, m, &mut counts);
        let u = instance.value(i, counts[i]);
        if u > best.1 {
            best = (trial[i], u);
        }
    }
    Ok(best)
}

/// Result of [`best_response_dynamics`].
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsOutcome {
    pub profile: StrategyProfile,
    pub converged: bool,
    /// Passes performed, including the final pass without changes.
    pub rounds_used: usize,
}

/// Round-robin best responses in player order.
///
/// A player switches only when its best response strictly beats its current
/// payoff. The dynamics stop after a pass without switches, or after
/// `max_rounds` passes.
pub fn best_response_dynamics(
    instance: &GameInstance,
    initial: &StrategyProfile,
    max_rounds: usize,
) -> Result<DynamicsOutcome> {
    if max_rounds == 0 {
        return Err(GameError::InvalidArgument(
            "max_rounds must be at least 1".into(),
        ));
    }
    initial.validate_against(instance)?;
    let m = instance.m();
    let mut profile = initial.clone();
    let mut counts = vec![0; instance.n()];
    let mut scratch = HrgScratch::default();
    for pass in 1..=max_rounds {
        let mut changed = false;
        for i in 0..instance.n() {
            scratch.allocate_into(profile.requests(), m, &mut counts);
            let current = instance.value(i, counts[i]);
            let (request, u) = best_response_with_payoff(instance, &profile, i)?;
            if u > current {
                profile.set(i, request);
                changed = true;
            }
        }
        if !changed {
            return Ok(DynamicsOutcome {
                profile,
                converged: true,
                rounds_used: pass,
            });
        }
    }
    Ok(DynamicsOutcome {
        profile,
        converged: false,
        rounds_used: max_rounds,
    })
}

/// Precomputed optimal side of the smoothness inequality for one valuation
/// profile `v`, reusable across many `(w, s)` pairs.
pub struct SmoothnessProbe {
    v: GameInstance,
    optimal: Vec<Request>,
    optimal_welfare: f64,
    scratch: HrgScratch,
    counts: Vec<usize>,
    trial: Vec<Request>,
}

impl SmoothnessProbe {
    pub fn new(v: &GameInstance) -> Result<Self> {
        let opt = optimal_allocation(v)?;
        let optimal: Vec<Request> = (0..v.n())
            .map(|i| Request::truthful(v, i, opt.get(i)))
            .collect();
        let mut scratch = HrgScratch::default();
        let mut counts = vec![0; v.n()];
        scratch.allocate_into(&optimal, v.m(), &mut counts);
        let optimal_welfare = (0..v.n()).map(|i| v.value(i, counts[i])).sum();
        Ok(Self {
            v: v.clone(),
            optimal,
            optimal_welfare,
            scratch,
            counts,
            trial: Vec::with_capacity(v.n()),
        })
    }

    /// `(Σ_i u_i(v_i; o_i, s_-i), sw(v; O(v)), sw(w; s))`. Inputs are not
    /// validated.
    pub fn terms(&mut self, w: &GameInstance, s: &[Request]) -> (f64, f64, f64) {
        let m = self.v.m();
        self.scratch.allocate_into(s, m, &mut self.counts);
        let current: f64 = (0..s.len()).map(|i| w.value(i, self.counts[i])).sum();
        let mut deviations = 0.0;
        for i in 0..s.len() {
            self.trial.clear();
            self.trial.extend_from_slice(s);
            self.trial[i] = self.optimal[i];
            self.scratch.allocate_into(&self.trial, m, &mut self.counts);
            deviations += self.v.value(i, self.counts[i]);
        }
        (deviations, self.optimal_welfare, current)
    }

    /// The (1, 1)-smoothness inequality for `(w, s)`.
    pub fn holds(&mut self, w: &GameInstance, s: &[Request]) -> bool {
        let (lhs, opt, current) = self.terms(w, s);
        le_tol(opt - current, lhs, INEQUALITY_TOLERANCE)
    }
}

/// Checks `Σ_i u_i(v_i; o_i, s_-i) ≥ sw(v; O(v)) − sw(w; s)` where `O(v)`
/// requests the optimal allocation for `v` truthfully.
pub fn smoothness_check(v: &GameInstance, w: &GameInstance, s: &StrategyProfile) -> Result<bool> {
    if v.n() != w.n() || v.m() != w.m() {
        return Err(GameError::InvalidInstance(
            "v and w must have the same players and items".into(),
        ));
    }
    s.validate_against(v)?;
    s.validate_against(w)?;
    Ok(SmoothnessProbe::new(v)?.holds(w, s.requests()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::social_welfare;
    use crate::valuation::{gen_poa2_worstcase, gen_random_concave, Valuation};
    use proptest::prelude::*;

    fn profile(reqs: &[(usize, f64)]) -> StrategyProfile {
        StrategyProfile::new(reqs.iter().map(|&(q, d)| Request::new(q, d)).collect())
    }

    fn single(values: &[f64]) -> GameInstance {
        GameInstance::new(values.len() - 1, vec![Valuation::new(values.to_vec())]).unwrap()
    }

    #[test]
    fn satisfiable_examples() {
        let inst = gen_poa2_worstcase(10).unwrap();
        assert!(is_satisfiable(&inst, 0, 10).unwrap());
        assert!(!is_satisfiable(&inst, 1, 1).unwrap());
        let one = single(&[0.0, 3.0, 5.0, 6.0]);
        for a in 1..=3 {
            assert!(is_satisfiable(&one, 0, a).unwrap());
        }
    }

    #[test]
    fn satisfiable_domain_errors() {
        let inst = gen_poa2_worstcase(4).unwrap();
        assert!(is_satisfiable(&inst, 0, 0).is_err());
        assert!(is_satisfiable(&inst, 0, 5).is_err());
        assert!(is_satisfiable(&inst, 2, 1).is_err());
        let flat = single(&[0.0, 0.0, 1.0]);
        assert!(is_satisfiable(&flat, 0, 1).is_err());
    }

    /// Direct transcription with linear scans instead of binary searches.
    fn satisfiable_oracle(inst: &GameInstance, i: usize, alpha: usize) -> bool {
        let r = inst.value(i, alpha) / alpha as f64;
        let mut claimed = 0;
        for j in 0..inst.n() {
            if j == i {
                continue;
            }
            let x = (1..=inst.m())
                .filter(|&x| {
                    let rj = inst.value(j, x) / x as f64;
                    if j < i {
                        rj >= r
                    } else {
                        rj > r
                    }
                })
                .max()
                .unwrap_or(0);
            claimed += x;
        }
        claimed <= inst.m() - alpha
    }

    #[test]
    fn satisfiable_matches_linear_scan_on_integer_tables() {
        // Integer tables with small increments: ratios compare exactly either way.
        let mut seed = 0;
        for m in 1..=8 {
            for n in 1..=3 {
                for _ in 0..20 {
                    seed += 1;
                    let inst = gen_random_concave(m, n, seed, 3.0).unwrap();
                    let inst = GameInstance::new(
                        m,
                        inst.valuations()
                            .iter()
                            .map(|v| {
                                let incs: Vec<f64> =
                                    (1..=m).map(|x| v.increment(x).floor()).collect();
                                Valuation::from_increments(&incs)
                            })
                            .collect(),
                    )
                    .unwrap();
                    for i in 0..n {
                        for a in 1..=m {
                            if inst.value(i, a) > 0.0 {
                                assert_eq!(
                                    is_satisfiable(&inst, i, a).unwrap(),
                                    satisfiable_oracle(&inst, i, a),
                                    "{inst:?} i={i} a={a}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn compute_nash_poa2() {
        let inst = gen_poa2_worstcase(10).unwrap();
        let eq = compute_nash(&inst).unwrap();
        assert_eq!(eq.certified, vec![10, 0]);
        assert_eq!(eq.allocation.counts(), &[10, 0]);
        assert_eq!(eq.profile, profile(&[(10, 10.0), (0, 0.0)]));
        assert!(eq.invariants_hold(10));
        assert!(!eq.degenerate);
        assert!(verify_nash(&inst, &eq.profile));
    }

    #[test]
    fn compute_nash_poa2_matches_exhaustive_deviation_oracle() {
        // Every pure profile of truthful requests; the equilibria among them.
        let inst = gen_poa2_worstcase(10).unwrap();
        let mut equilibria = Vec::new();
        for a in 0..=10 {
            for b in 0..=10 {
                let p = profile(&[(a, inst.value(0, a)), (b, inst.value(1, b))]);
                let alloc = hrg_allocate(&p, 10);
                let stable = (0..2).all(|i| {
                    (0..=10).all(|x| {
                        let q = p.with(i, Request::truthful(&inst, i, x));
                        inst.value(i, hrg_allocate(&q, 10).get(i)) <= inst.value(i, alloc.get(i))
                    })
                });
                if stable {
                    equilibria.push((a, b));
                }
            }
        }
        assert!(equilibria.contains(&(10, 0)));
        let eq = compute_nash(&inst).unwrap();
        assert!(equilibria.contains(&(eq.certified[0], eq.certified[1])));
    }

    #[test]
    fn compute_nash_single_player() {
        let inst = single(&[0.0, 3.0, 5.0, 6.0]);
        let eq = compute_nash(&inst).unwrap();
        assert_eq!(eq.certified, vec![3]);
        assert_eq!(eq.profile.get(0), Request::new(3, 6.0));
    }

    #[test]
    fn compute_nash_degenerate_and_partially_zero() {
        let zeros = GameInstance::new(3, vec![Valuation::new(vec![0.0; 4]); 2]).unwrap();
        let eq = compute_nash(&zeros).unwrap();
        assert!(eq.degenerate);
        assert_eq!(eq.certified, vec![0, 0]);
        assert_eq!(eq.profile, StrategyProfile::empty(2));

        let mixed = GameInstance::new(
            3,
            vec![
                Valuation::new(vec![0.0; 4]),
                Valuation::new(vec![0.0, 1.0, 1.5, 2.0]),
            ],
        )
        .unwrap();
        let eq = compute_nash(&mixed).unwrap();
        assert_eq!(eq.certified, vec![0, 3]);
        assert!(eq.invariants_hold(3));
        assert!(verify_nash(&mixed, &eq.profile));
    }

    #[test]
    fn compute_nash_rejects_invalid_valuations() {
        let bad = GameInstance::new(2, vec![Valuation::new(vec![0.0, 1.0, 3.0])]).unwrap();
        assert!(compute_nash(&bad).is_err());
    }

    #[test]
    fn verify_nash_examples() {
        let inst = gen_poa2_worstcase(10).unwrap();
        assert!(verify_nash(&inst, &profile(&[(10, 10.0), (10, 10.0)])));
        // Allocation (1, 9): player 1 already has its maximum value and
        // player 2 cannot outrank ratio 10, so this is an equilibrium too.
        assert!(verify_nash(&inst, &profile(&[(1, 10.0), (10, 10.0)])));
        assert!(!verify_nash(&inst, &profile(&[(0, 0.0), (10, 10.0)])));
        let one = single(&[0.0, 3.0, 5.0, 6.0]);
        assert!(!verify_nash(&one, &profile(&[(2, 5.0)])));
        assert!(verify_nash(&one, &profile(&[(3, 6.0)])));
        // Invalid profiles are rejected rather than evaluated.
        assert!(!verify_nash(&one, &profile(&[(3, 7.0)])));
    }

    #[test]
    fn improving_deviation_is_reported() {
        let inst = gen_poa2_worstcase(10).unwrap();
        let dev = find_improving_deviation(
            &inst,
            &profile(&[(0, 0.0), (10, 10.0)]),
            DeviationSpace::Truthful,
        )
        .unwrap();
        assert_eq!(dev.player, 0);
        assert_eq!(dev.request, Request::new(1, 10.0));
        assert!(dev.deviation_payoff > dev.current_payoff);
    }

    #[test]
    fn best_response_examples() {
        let inst = gen_poa2_worstcase(10).unwrap();
        let p = profile(&[(10, 10.0), (10, 10.0)]);
        assert_eq!(best_response(&inst, &p, 1).unwrap(), Request::NONE);

        let one = single(&[0.0, 3.0, 5.0, 6.0]);
        assert_eq!(
            best_response(&one, &StrategyProfile::empty(1), 0).unwrap(),
            Request::new(3, 6.0)
        );

        let linear: Vec<f64> = (0..=4).map(|x| x as f64).collect();
        let two = GameInstance::new(4, vec![Valuation::new(linear.clone()); 2]).unwrap();
        assert_eq!(
            best_response(&two, &StrategyProfile::empty(2), 1).unwrap(),
            Request::new(4, 4.0)
        );
    }

    #[test]
    fn dynamics_from_empty_profile_on_poa2() {
        let inst = gen_poa2_worstcase(10).unwrap();
        let out = best_response_dynamics(&inst, &StrategyProfile::empty(2), 50).unwrap();
        assert!(out.converged);
        assert!(verify_nash(&inst, &out.profile));
        assert_eq!(out.profile, profile(&[(1, 10.0), (9, 9.0)]));
        assert_eq!(social_welfare(&inst, &hrg_allocate(&out.profile, 10)), 19.0);
    }

    #[test]
    fn dynamics_fixed_point_and_preconditions() {
        let inst = gen_poa2_worstcase(10).unwrap();
        let eq = compute_nash(&inst).unwrap();
        let out = best_response_dynamics(&inst, &eq.profile, 10).unwrap();
        assert!(out.converged);
        assert_eq!(out.rounds_used, 1);
        assert_eq!(out.profile, eq.profile);
        assert!(best_response_dynamics(&inst, &eq.profile, 0).is_err());
    }

    #[test]
    fn smoothness_examples() {
        let inst = gen_poa2_worstcase(10).unwrap();
        let opt = optimal_allocation(&inst).unwrap();
        let o = StrategyProfile::new(
            (0..2)
                .map(|i| Request::truthful(&inst, i, opt.get(i)))
                .collect(),
        );
        assert!(smoothness_check(&inst, &inst, &o).unwrap());
        let s = profile(&[(10, 10.0), (10, 10.0)]);
        assert!(smoothness_check(&inst, &inst, &s).unwrap());

        // Player 1 deviating to (1, 10) gets its item; player 2 deviating to
        // (9, 9) loses the ratio-1 tie to player 1 and gets nothing.
        let mut probe = SmoothnessProbe::new(&inst).unwrap();
        let (lhs, opt_w, cur) = probe.terms(&inst, s.requests());
        assert_eq!((lhs, opt_w, cur), (10.0, 19.0, 10.0));
    }

    #[test]
    fn smoothness_rejects_invalid_strategies() {
        let inst = gen_poa2_worstcase(4).unwrap();
        let w = GameInstance::new(
            4,
            vec![
                Valuation::new(vec![0.0, 1.0, 1.0, 1.0, 1.0]),
                inst.valuation(1).clone(),
            ],
        )
        .unwrap();
        let s = profile(&[(4, 4.0), (0, 0.0)]);
        assert!(smoothness_check(&inst, &w, &s).is_err());
        assert!(smoothness_check(&inst, &gen_poa2_worstcase(5).unwrap(), &s).is_err());
    }

    #[test]
    fn truthful_deviations_dominate_on_small_instances() {
        for seed in 0..40 {
            let inst = gen_random_concave(5, 3, seed, 4.0).unwrap();
            let eq = compute_nash(&inst).unwrap();
            assert!(verify_nash_with(
                &inst,
                &eq.profile,
                DeviationSpace::ValueGrid(8)
            ));
        }
    }

    #[test]
    fn satisfiable_is_monotone_in_alpha() {
        for seed in 0..200 {
            let inst =
                gen_random_concave(1 + (seed as usize % 12), 1 + (seed as usize % 4), seed, 5.0)
                    .unwrap();
            for i in 0..inst.n() {
                let mut failed = false;
                for a in 1..=inst.m() {
                    if inst.value(i, a) <= 0.0 {
                        continue;
                    }
                    let ok = is_satisfiable(&inst, i, a).unwrap();
                    assert!(!(failed && ok), "seed {seed} player {i} alpha {a}");
                    failed |= !ok;
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn compute_nash_is_an_equilibrium(m in 1usize..12, n in 1usize..4, seed in any::<u64>()) {
            let inst = gen_random_concave(m, n, seed, 10.0).unwrap();
            let eq = compute_nash(&inst).unwrap();
            prop_assert!(eq.invariants_hold(m));
            prop_assert!(verify_nash(&inst, &eq.profile));
        }

        #[test]
        fn converged_dynamics_are_equilibria(m in 1usize..10, n in 1usize..4, seed in any::<u64>()) {
            let inst = gen_random_concave(m, n, seed, 10.0).unwrap();
            let out = best_response_dynamics(&inst, &StrategyProfile::empty(n), 50).unwrap();
            if out.converged {
                prop_assert!(verify_nash(&inst, &out.profile));
            }
        }
    }
}
