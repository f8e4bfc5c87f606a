//! Allocation mechanisms and welfare accounting.
//!
//! [`hrg_allocate`] is the Highest Ratio Greedy mechanism the game is played
//! under. [`optimal_knapsack_mechanism`] solves the 0/1 knapsack induced by
//! the requests exactly and serves as the bad baseline. The welfare optimum
//! is computed twice, by [`optimal_allocation`] (marginal greedy, valid for
//! concave valuations) and by [`dp_optimal_value`] (a dynamic program that
//! makes no concavity assumption), so each can check the other.

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::numeric::cmp_ratio;
use crate::valuation::GameInstance;

/// A request `(quantity, declared value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub quantity: usize,
    pub declared_value: f64,
}

impl Request {
    pub const NONE: Request = Request {
        quantity: 0,
        declared_value: 0.0,
    };

    pub fn new(quantity: usize, declared_value: f64) -> Self {
        Self {
            quantity,
            declared_value,
        }
    }

    /// Request for `quantity` items declaring the true value `v_i(quantity)`.
    pub fn truthful(instance: &GameInstance, player: usize, quantity: usize) -> Self {
        Self::new(quantity, instance.value(player, quantity))
    }
}

/// One request per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile {
    requests: Vec<Request>,
}

impl StrategyProfile {
    pub fn new(requests: Vec<Request>) -> Self {
        Self { requests }
    }

    /// Every player requests nothing.
    pub fn empty(n: usize) -> Self {
        Self::new(vec![Request::NONE; n])
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn get(&self, i: usize) -> Request {
        self.requests[i]
    }

    pub fn set(&mut self, i: usize, request: Request) {
        self.requests[i] = request;
    }

    /// The profile with player `i`'s request replaced.
    pub fn with(&self, i: usize, request: Request) -> Self {
        let mut next = self.clone();
        next.requests[i] = request;
        next
    }

    /// Checks shape and validity against `instance`: one request per player,
    /// quantities within `0..=m`, zero quantity declares zero, and no declared
    /// value exceeds the true value.
    pub fn validate_against(&self, instance: &GameInstance) -> Result<()> {
        if self.len() != instance.n() {
            return Err(GameError::InvalidProfile(format!(
                "profile has {} requests for {} players",
                self.len(),
                instance.n()
            )));
        }
        for (i, r) in self.requests.iter().enumerate() {
            if r.quantity > instance.m() {
                return Err(GameError::InvalidProfile(format!(
                    "player {} requests {} of {} items",
                    i,
                    r.quantity,
                    instance.m()
                )));
            }
            if !(r.declared_value >= 0.0 && r.declared_value.is_finite()) {
                return Err(GameError::InvalidProfile(format!(
                    "player {} declares {}",
                    i, r.declared_value
                )));
            }
            if r.quantity == 0 && r.declared_value != 0.0 {
                return Err(GameError::InvalidProfile(format!(
                    "player {} declares a positive value for zero items",
                    i
                )));
            }
            if r.declared_value > instance.value(i, r.quantity) {
                return Err(GameError::InvalidProfile(format!(
                    "player {} declares {} above its true value {} for {} items",
                    i,
                    r.declared_value,
                    instance.value(i, r.quantity),
                    r.quantity
                )));
            }
        }
        Ok(())
    }
}

/// Item counts per player.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation {
    counts: Vec<usize>,
}

impl Allocation {
    pub fn new(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn get(&self, i: usize) -> usize {
        self.counts[i]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Reusable buffers for running the greedy mechanism many times.
#[derive(Debug, Default)]
pub(crate) struct HrgScratch {
    order: Vec<usize>,
}

impl HrgScratch {
    /// Writes the greedy allocation of `requests` over `m` items into `out`.
    pub(crate) fn allocate_into(&mut self, requests: &[Request], m: usize, out: &mut [usize]) {
        self.allocate_ranked_into(requests, None, m, out)
    }

    fn allocate_ranked_into(
        &mut self,
        requests: &[Request],
        priority: Option<&[usize]>,
        m: usize,
        out: &mut [usize],
    ) {
        self.order.clear();
        self.order
            .extend((0..requests.len()).filter(|&i| requests[i].quantity > 0));
        match priority {
            // Stable sort: equal ratios keep ascending player order.
            None => self.order.sort_by(|&a, &b| {
                let (ra, rb) = (requests[a], requests[b]);
                cmp_ratio(
                    rb.declared_value,
                    rb.quantity,
                    ra.declared_value,
                    ra.quantity,
                )
            }),
            Some(rank) => self.order.sort_by(|&a, &b| {
                let (ra, rb) = (requests[a], requests[b]);
                cmp_ratio(
                    rb.declared_value,
                    rb.quantity,
                    ra.declared_value,
                    ra.quantity,
                )
                .then(rank[a].cmp(&rank[b]))
            }),
        }
        out.iter_mut().for_each(|c| *c = 0);
        let mut remaining = m;
        for &i in &self.order {
            if remaining == 0 {
                break;
            }
            let granted = requests[i].quantity.min(remaining);
            out[i] = granted;
            remaining -= granted;
        }
    }
}

/// Highest Ratio Greedy: grants requests in descending order of declared
/// value per item, lower player index first on ties. The request that
/// crosses the capacity gets whatever integer number of items is left.
pub fn hrg_allocate(profile: &StrategyProfile, m: usize) -> Allocation {
    let mut counts = vec![0; profile.len()];
    HrgScratch::default().allocate_into(profile.requests(), m, &mut counts);
    Allocation::new(counts)
}

/// Greedy allocation where ties are broken by `priority[i]` (lower first)
/// instead of by position. `hrg_allocate` is the case `priority[i] = i`.
pub fn hrg_allocate_ranked(requests: &[Request], priority: &[usize], m: usize) -> Allocation {
    assert_eq!(requests.len(), priority.len(), "one priority per request");
    let mut counts = vec![0; requests.len()];
    HrgScratch::default().allocate_ranked_into(requests, Some(priority), m, &mut counts);
    Allocation::new(counts)
}

/// True value `v_i(X_i)` of player `i` under `allocation`.
pub fn payoff(instance: &GameInstance, allocation: &Allocation, i: usize) -> Result<f64> {
    if i >= instance.n() || i >= allocation.counts.len() {
        return Err(GameError::OutOfRange {
            what: "player",
            value: i,
            min: 0,
            max: instance.n().saturating_sub(1),
        });
    }
    let x = allocation.counts[i];
    if x > instance.m() {
        return Err(GameError::OutOfRange {
            what: "allocated count",
            value: x,
            min: 0,
            max: instance.m(),
        });
    }
    Ok(instance.value(i, x))
}

/// Sum of true values at the allocated counts.
pub fn social_welfare(instance: &GameInstance, allocation: &Allocation) -> f64 {
    allocation
        .counts
        .iter()
        .enumerate()
        .map(|(i, &x)| instance.value(i, x))
        .sum()
}

/// Solves the knapsack with item sizes `x_i` and values `ṽ_i(x_i)` exactly.
/// Each player receives its full request or nothing. Among optimal subsets
/// the one that includes lower-index players first wins.
pub fn optimal_knapsack_mechanism(profile: &StrategyProfile, m: usize) -> Allocation {
    let reqs = profile.requests();
    let n = reqs.len();
    let width = m + 1;
    // best[c]: optimum over players i..n with capacity c, rolled from the back.
    let mut best = vec![0.0_f64; width];
    let mut take = vec![false; n * width];
    for i in (0..n).rev() {
        let Request {
            quantity: q,
            declared_value: d,
        } = reqs[i];
        let prev = best.clone();
        for c in 0..width {
            if q <= c {
                let with = d + prev[c - q];
                if with >= prev[c] {
                    best[c] = with;
                    take[i * width + c] = true;
                }
            }
        }
    }
    let mut counts = vec![0; n];
    let mut c = m;
    for (i, r) in reqs.iter().enumerate() {
        if take[i * width + c] {
            counts[i] = r.quantity;
            c -= r.quantity;
        }
    }
    Allocation::new(counts)
}

/// Welfare-optimal allocation by marginal greedy: each item goes to the
/// player with the highest next marginal value (lower index on ties), until
/// all items are placed or no marginal value is positive.
///
/// Optimal because every valuation has diminishing returns.
pub fn optimal_allocation(instance: &GameInstance) -> Result<Allocation> {
    instance.validate()?;
    let (n, m) = (instance.n(), instance.m());
    let mut counts = vec![0; n];
    for _ in 0..m {
        let mut best: Option<(usize, f64)> = None;
        for (i, &held) in counts.iter().enumerate() {
            if held == m {
                continue;
            }
            let gain = instance.valuation(i).increment(held + 1);
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        match best {
            Some((i, gain)) if gain > 0.0 => counts[i] += 1,
            _ => break,
        }
    }
    Ok(Allocation::new(counts))
}

/// Maximum social welfare by dynamic programming over
/// `(players so far, items used)`. Correct for any nondecreasing tables;
/// used as the oracle for [`optimal_allocation`].
pub fn dp_optimal_value(instance: &GameInstance) -> f64 {
    let (n, m) = (instance.n(), instance.m());
    let mut best = vec![0.0_f64; m + 1];
    for i in 0..n {
        let v = instance.valuation(i).values();
        if i + 1 == n {
            return (0..=m)
                .map(|x| best[m - x] + v[x])
                .fold(f64::NEG_INFINITY, f64::max);
        }
        let mut next = vec![f64::NEG_INFINITY; m + 1];
        for (c, slot) in next.iter_mut().enumerate() {
            for x in 0..=c {
                let cand = best[c - x] + v[x];
                if cand > *slot {
                    *slot = cand;
                }
            }
        }
        best = next;
    }
    unreachable!("instances have at least one player")
}
