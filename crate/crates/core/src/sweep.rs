//! Batch experiments: instance corpora, multi-round sweeps and the
//! exhaustive smoothness enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::eval_theorem2_bound;
use crate::equilibrium::SmoothnessProbe;
use crate::error::{GameError, Result};
use crate::mechanism::{dp_optimal_value, Request};
use crate::multiround::{
    bundle_sizes_ratio_t, check_lemma_bound, check_lemma_descdelta, deltas_nonincreasing,
    ratio_or_sentinel, run_multiround, Sizing,
};
use crate::numeric::{le_tol, sig9, INEQUALITY_TOLERANCE};
use crate::valuation::{gen_random_concave, GameInstance, Valuation};

/// `count` random concave instances. Instance `j` uses seed `base_seed + j`,
/// which also draws its `n ∈ 1..=max_n` and `m ∈ 1..=max_m`.
pub fn random_corpus(
    count: usize,
    base_seed: u64,
    max_n: usize,
    max_m: usize,
    max_increment: f64,
) -> Result<Vec<(u64, GameInstance)>> {
    random_corpus_multiple(count, base_seed, max_n, max_m, 1, max_increment)
}

/// Like [`random_corpus`], but every `m` is a multiple of `multiple`.
pub fn random_corpus_multiple(
    count: usize,
    base_seed: u64,
    max_n: usize,
    max_m: usize,
    multiple: usize,
    max_increment: f64,
) -> Result<Vec<(u64, GameInstance)>> {
    if multiple == 0 || max_m < multiple || max_n == 0 {
        return Err(GameError::InvalidArgument(format!(
            "need max_n ≥ 1 and max_m ≥ {multiple} (got max_n = {max_n}, max_m = {max_m})"
        )));
    }
    (0..count)
        .map(|j| {
            let seed = base_seed.wrapping_add(j as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
            let n = rng.gen_range(1..=max_n);
            let m = multiple * rng.gen_range(1..=max_m / multiple);
            gen_random_concave(m, n, seed, max_increment).map(|inst| (seed, inst))
        })
        .collect()
}

/// One `(instance, k)` evaluation of the k-round game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub sw_opt: f64,
    pub sw_ne: f64,
    pub ratio: f64,
    pub theorem2_bound: f64,
    pub lemma2_ok: bool,
    pub lemma3_ok: bool,
    pub deltas_ok: bool,
    pub rounds_verified: bool,
}

impl SweepRow {
    /// `1 + 1/k`.
    pub fn round_count_bound(&self) -> f64 {
        1.0 + 1.0 / self.k as f64
    }

    /// Every checked inequality holds: the ratio is within `1 + 1/k` and the
    /// per-trace bound, both trace checks hold, `Δ` is nonincreasing and every round
    /// profile is an equilibrium of its round game.
    pub fn all_claims_hold(&self) -> bool {
        self.ratio <= self.round_count_bound() + INEQUALITY_TOLERANCE
            && le_tol(self.ratio, self.theorem2_bound, INEQUALITY_TOLERANCE)
            && self.lemma2_ok
            && self.lemma3_ok
            && self.deltas_ok
            && self.rounds_verified
    }
}

/// Runs the k-round game on `instance` with ratio-t bundles.
pub fn evaluate(instance: &GameInstance, seed: u64, k: usize, sizing: Sizing) -> Result<SweepRow> {
    let config = bundle_sizes_ratio_t(instance.m(), k, sizing)?;
    let trace = run_multiround(instance, &config)?;
    let sw_opt = dp_optimal_value(instance);
    Ok(SweepRow {
        seed,
        n: instance.n(),
        m: instance.m(),
        k,
        sw_opt,
        sw_ne: trace.total_welfare,
        ratio: ratio_or_sentinel(sw_opt, trace.total_welfare),
        theorem2_bound: eval_theorem2_bound(&trace),
        lemma2_ok: check_lemma_descdelta(&trace),
        lemma3_ok: check_lemma_bound(instance, &trace),
        deltas_ok: deltas_nonincreasing(&trace),
        rounds_verified: trace.all_rounds_verified(),
    })
}

/// A row that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedRow {
    pub seed: u64,
    pub k: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<SkippedRow>,
}

impl SweepOutcome {
    /// Largest ratio per `k`, in ascending `k`.
    pub fn max_ratio_per_k(&self) -> Vec<(usize, f64)> {
        let mut ks: Vec<usize> = self.rows.iter().map(|r| r.k).collect();
        ks.sort_unstable();
        ks.dedup();
        ks.into_iter()
            .map(|k| {
                let max = self
                    .rows
                    .iter()
                    .filter(|r| r.k == k)
                    .map(|r| r.ratio)
                    .fold(f64::NEG_INFINITY, f64::max);
                (k, max)
            })
            .collect()
    }

    pub fn violations(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| !r.all_claims_hold())
    }
}

/// Evaluates every `(instance, k)` pair concurrently. Rows come back ordered
/// by `(seed, k)`.
pub fn run_sweep(instances: &[(u64, GameInstance)], ks: &[usize], sizing: Sizing) -> SweepOutcome {
    let mut jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|j| ks.iter().map(move |&k| (j, k)))
        .collect();
    jobs.sort_by_key(|&(j, k)| (instances[j].0, k));
    let results: Vec<std::result::Result<SweepRow, SkippedRow>> = jobs
        .par_iter()
        .map(|&(j, k)| {
            let (seed, inst) = &instances[j];
            evaluate(inst, *seed, k, sizing).map_err(|e| SkippedRow {
                seed: *seed,
                k,
                reason: e.to_string(),
            })
        })
        .collect();
    let mut outcome = SweepOutcome::default();
    for r in results {
        match r {
            Ok(row) => outcome.rows.push(row),
            Err(skip) => outcome.skipped.push(skip),
        }
    }
    outcome
}

pub const CSV_HEADER: &str = "seed,n,m,k,sw_opt,sw_ne,ratio,theorem2_bound,lemma2_ok,lemma3_ok";

/// CSV report: header, one row per evaluation, then one `summary` row per
/// `k` carrying the maximum ratio. Welfare uses shortest round-trip
/// formatting and ratios nine significant digits.
pub fn to_csv(outcome: &SweepOutcome) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &outcome.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.seed,
            r.n,
            r.m,
            r.k,
            r.sw_opt,
            r.sw_ne,
            sig9(r.ratio),
            sig9(r.theorem2_bound),
            r.lemma2_ok,
            r.lemma3_ok
        ));
    }
    for (k, max) in outcome.max_ratio_per_k() {
        out.push_str(&format!("summary,,,{},,,{},,,\n", k, sig9(max)));
    }
    out
}

/// A `(v, w, s)` triple on `m` items for which the inequality fails.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessCounterexample {
    pub m: usize,
    pub v: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub s: Vec<Request>,
}

/// Totals of the exhaustive smoothness enumeration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SmoothnessReport {
    pub triples: u64,
    pub violations: u64,
    pub first_violation: Option<SmoothnessCounterexample>,
}

/// All integer valuation tables on `0..=m` whose increments are drawn from
/// `increments` and are nonincreasing.
pub fn integer_concave_tables(m: usize, increments: &[u32]) -> Vec<Valuation> {
    let mut levels: Vec<u32> = increments.to_vec();
    levels.sort_unstable_by(|a, b| b.cmp(a));
    levels.dedup();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(m);
    fn rec(
        m: usize,
        levels: &[u32],
        start: usize,
        current: &mut Vec<f64>,
        out: &mut Vec<Valuation>,
    ) {
        if current.len() == m {
            out.push(Valuation::from_increments(current));
            return;
        }
        for (idx, &lvl) in levels.iter().enumerate().skip(start) {
            current.push(lvl as f64);
            rec(m, levels, idx, current, out);
            current.pop();
        }
    }
    rec(m, &levels, 0, &mut current, &mut out);
    out
}

/// Requests `(x, d)` with integer `d ≤ min(v(x), w(x))`.
fn joint_valid_requests(v: &Valuation, w: &Valuation) -> Vec<Request> {
    let mut out = vec![Request::NONE];
    for x in 1..=v.domain() {
        let cap = v.value(x).min(w.value(x)).floor() as u64;
        out.extend((0..=cap).map(|d| Request::new(x, d as f64)));
    }
    out
}

fn product<T: Clone>(choices: &[Vec<T>]) -> Vec<Vec<T>> {
    choices.iter().fold(vec![Vec::new()], |acc, opts| {
        acc.iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut next = prefix.clone();
                    next.push(o.clone());
                    next
                })
            })
            .collect()
    })
}

/// Checks the smoothness inequality for every `(v, w, s)` with `n` players,
/// `m ∈ 1..=max_m`, valuation increments from `increments`, and integer
/// declarations valid for both `v` and `w`.
pub fn smoothness_exhaustive(
    n: usize,
    max_m: usize,
    increments: &[u32],
) -> Result<SmoothnessReport> {
    let mut report = SmoothnessReport::default();
    for m in 1..=max_m {
        let tables = integer_concave_tables(m, increments);
        let profiles: Vec<GameInstance> = product(&vec![tables.clone(); n])
            .into_iter()
            .map(|vals| GameInstance::new(m, vals))
            .collect::<Result<_>>()?;
        let partial: Vec<SmoothnessReport> = profiles
            .par_iter()
            .map(|v| -> Result<SmoothnessReport> {
                let mut probe = SmoothnessProbe::new(v)?;
                let mut local = SmoothnessReport::default();
                for w in &profiles {
                    let per_player: Vec<Vec<Request>> = (0..n)
                        .map(|i| joint_valid_requests(v.valuation(i), w.valuation(i)))
                        .collect();
                    let mut idx = vec![0usize; n];
                    let mut s: Vec<Request> = per_player.iter().map(|c| c[0]).collect();
                    loop {
                        local.triples += 1;
                        if !probe.holds(w, &s) {
                            local.violations += 1;
                            if local.first_violation.is_none() {
                                local.first_violation = Some(SmoothnessCounterexample {
                                    m,
                                    v: v.valuations().iter().map(|t| t.values().to_vec()).collect(),
                                    w: w.valuations().iter().map(|t| t.values().to_vec()).collect(),
                                    s: s.clone(),
                                });
                            }
                        }
                        // Odometer over the per-player choices.
                        let mut p = 0;
                        loop {
                            if p == n {
                                break;
                            }
                            idx[p] += 1;
                            if idx[p] < per_player[p].len() {
                                s[p] = per_player[p][idx[p]];
                                break;
                            }
                            idx[p] = 0;
                            s[p] = per_player[p][0];
                            p += 1;
                        }
                        if p == n {
                            break;
                        }
                    }
                }
                Ok(local)
            })
            .collect::<Result<_>>()?;
        for part in partial {
            report.triples += part.triples;
            report.violations += part.violations;
            if report.first_violation.is_none() {
                report.first_violation = part.first_violation;
            }
        }
    }
    Ok(report)
}
