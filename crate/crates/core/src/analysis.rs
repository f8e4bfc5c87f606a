//! Closed-form price-of-anarchy bound expressions.
//!
//! For `x_i ≥ 1` and bundle ratios `y_i ≥ 0`,
//!
//! ```text
//! G(x, y) = Σ_i y_i (1 − 1/x_i) / Σ_i y_i Π_{j>i} x_j
//! F(x)    = G(x, (1, 2, ..., k))
//! ```
//!
//! A k-round trace instantiates `G` with `x_t = Δ^t/Δ^{t+1}` and
//! `y_t = m^t/m^1`, and `1 + G` then bounds its welfare ratio. The supremum
//! of `F` is `1/k`, approached as `x_1 → ∞` with `x_i = i/(i−1)` for `i ≥ 2`
//! and never attained. With `z_i = Π_{j>i} x_j` the gap
//! `denominator(F) − k·numerator(F)` equals
//!
//! ```text
//! C(z) = Σ_i (i z_i + i k z_i/z_{i−1}) − k Σ_i i,   z_k = 1, z_0 = x_1 z_1
//! ```
//!
//! which vanishes at `z_i = k/i` in the `x_1 → ∞` limit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GameError, Result};
use crate::multiround::RoundTrace;

/// Cap on the unbounded `x_1` direction.
pub const DEFAULT_X_MAX: f64 = 1e6;

fn check_x(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(GameError::InvalidArgument("x must be non-empty".into()));
    }
    if let Some(bad) = x.iter().find(|&&v| !(1.0..).contains(&v)) {
        return Err(GameError::InvalidArgument(format!(
            "x_i must be at least 1, got {bad}"
        )));
    }
    Ok(())
}

/// `F(x)` with the ratio-t weights `1, 2, ..., k`.
pub fn eval_f(x: &[f64]) -> Result<f64> {
    check_x(x)?;
    let numerator: f64 = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| (i + 1) as f64 * (1.0 - 1.0 / xi))
        .sum();
    // Horner form: ((1·x_2 + 2)·x_3 + 3)·x_4 + ... + k.
    let denominator = x
        .iter()
        .enumerate()
        .skip(1)
        .fold(1.0, |acc, (i, &xi)| acc * xi + (i + 1) as f64);
    Ok(numerator / denominator)
}

/// `G(x, y)` for arbitrary nonnegative weights, not all zero.
pub fn eval_g(x: &[f64], y: &[f64]) -> Result<f64> {
    check_x(x)?;
    if x.len() != y.len() {
        return Err(GameError::InvalidArgument(format!(
            "x has {} entries but y has {}",
            x.len(),
            y.len()
        )));
    }
    if y.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(GameError::InvalidArgument(
            "y_i must be nonnegative and finite".into(),
        ));
    }
    if y.iter().all(|&v| v == 0.0) {
        return Err(GameError::InvalidArgument("y must not be all zero".into()));
    }
    Ok(g_unchecked(x, y))
}

fn g_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len();
    let numerator: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| yi * (1.0 - 1.0 / xi))
        .sum();
    let mut suffix = 1.0;
    let mut denominator = 0.0;
    for i in (0..k).rev() {
        denominator += y[i] * suffix;
        suffix *= x[i];
    }
    numerator / denominator
}

/// `C(z)` for `z = (z_1, ..., z_{k−1})`, so `k = z.len() + 1`.
///
/// `x1` fixes `z_0 = x1·z_1`; pass `f64::INFINITY` for the `x_1 → ∞` limit,
/// where the `i = 1` ratio term vanishes.
pub fn eval_c(z: &[f64], x1: f64) -> f64 {
    let k = z.len() + 1;
    let kf = k as f64;
    let at = |i: usize| if i == k { 1.0 } else { z[i - 1] };
    let mut total = 0.0;
    for i in 1..=k {
        let fi = i as f64;
        let ratio = if i == 1 { 1.0 / x1 } else { at(i) / at(i - 1) };
        total += fi * at(i) + fi * kf * ratio;
    }
    total - kf * (k * (k + 1) / 2) as f64
}

/// `z_i = Π_{j>i} x_j` for `i = 1..k−1`.
pub fn z_from_x(x: &[f64]) -> Vec<f64> {
    let k = x.len();
    let mut z = vec![1.0; k.saturating_sub(1)];
    let mut suffix = 1.0;
    for i in (1..k).rev() {
        suffix *= x[i];
        z[i - 1] = suffix;
    }
    z
}

/// The stationary point `z_i = k/i`, `i = 1..k−1`.
pub fn stationary_point(k: usize) -> Vec<f64> {
    (1..k).map(|i| k as f64 / i as f64).collect()
}

/// `|C(k/i)|` in the `x_1 → ∞` limit.
pub fn stationarity_residual(k: usize) -> f64 {
    eval_c(&stationary_point(k), f64::INFINITY).abs()
}

/// `x_1 = x_max`, `x_i = i/(i−1)`: the point whose limit attains `1/k`.
pub fn analytic_seed(k: usize, x_max: f64) -> Vec<f64> {
    (1..=k)
        .map(|i| {
            if i == 1 {
                x_max
            } else {
                i as f64 / (i - 1) as f64
            }
        })
        .collect()
}

/// Outcome of a supremum search.
#[derive(Debug, Clone, PartialEq)]
pub struct SupSearch {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub evaluations: usize,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const LINE_EVALS: usize = 48;
const MAX_SWEEPS: usize = 60;

struct Search<'f> {
    objective: &'f dyn Fn(&[f64]) -> f64,
    log_max: f64,
    evaluations: usize,
    budget: usize,
}

impl Search<'_> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        (self.objective)(x)
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }

    /// Golden-section search over `ln x_c ∈ [0, ln x_max]`, also trying both
    /// endpoints. Returns the best coordinate value and objective found.
    fn line_search(&mut self, x: &mut [f64], c: usize) -> (f64, f64) {
        let original = x[c];
        let at = |s: &mut Self, u: f64, x: &mut [f64]| {
            x[c] = u.exp().max(1.0);
            (x[c], s.eval(x))
        };
        let mut best = at(self, 0.0, x);
        let hi_end = at(self, self.log_max, x);
        if hi_end.1 > best.1 {
            best = hi_end;
        }
        let (mut a, mut b) = (0.0, self.log_max);
        let mut u1 = b - GOLDEN * (b - a);
        let mut u2 = a + GOLDEN * (b - a);
        let mut f1 = at(self, u1, x);
        let mut f2 = at(self, u2, x);
        for _ in 0..LINE_EVALS {
            if self.exhausted() {
                break;
            }
            for cand in [f1, f2] {
                if cand.1 > best.1 {
                    best = cand;
                }
            }
            if f1.1 >= f2.1 {
                b = u2;
                u2 = u1;
                f2 = f1;
                u1 = b - GOLDEN * (b - a);
                f1 = at(self, u1, x);
            } else {
                a = u1;
                u1 = u2;
                f1 = f2;
                u2 = a + GOLDEN * (b - a);
                f2 = at(self, u2, x);
            }
        }
        for cand in [f1, f2] {
            if cand.1 > best.1 {
                best = cand;
            }
        }
        x[c] = original;
        best
    }

    fn ascend(&mut self, start: Vec<f64>) -> (Vec<f64>, f64) {
        let mut x = start;
        let mut value = self.eval(&x);
        for _ in 0..MAX_SWEEPS {
            let mut improved = false;
            for c in 0..x.len() {
                if self.exhausted() {
                    return (x, value);
                }
                let (xc, fc) = self.line_search(&mut x, c);
                if fc > value {
                    improved |= fc - value > 1e-15 * value.abs().max(1e-300);
                    x[c] = xc;
                    value = fc;
                }
            }
            if !improved {
                break;
            }
        }
        (x, value)
    }
}

/// Multi-start coordinate ascent of `objective` over `[1, x_max]^k`, with
/// at most `budget` objective evaluations. The first start is `seeds[0]`
/// and so on; the remaining budget goes to log-uniform random starts drawn
/// from `rng_seed`.
fn multistart(
    objective: &dyn Fn(&[f64]) -> f64,
    k: usize,
    seeds: Vec<Vec<f64>>,
    budget: usize,
    x_max: f64,
    rng_seed: u64,
) -> SupSearch {
    let mut search = Search {
        objective,
        log_max: x_max.ln(),
        evaluations: 0,
        budget: budget.max(1),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut seeds = seeds.into_iter();
    while !search.exhausted() {
        let start = seeds.next().unwrap_or_else(|| {
            (0..k)
                .map(|_| rng.gen_range(0.0..=search.log_max).exp().max(1.0))
                .collect()
        });
        let (x, v) = search.ascend(start);
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((x, v));
        }
    }
    let (best_x, best_value) = best.expect("at least one start runs");
    SupSearch {
        best_x,
        best_value,
        evaluations: search.evaluations,
    }
}

/// Numerical supremum of `F` over `[1, DEFAULT_X_MAX]^k`.
pub fn sup_search_f(k: usize, budget: usize) -> Result<SupSearch> {
    sup_search_f_with(k, budget, DEFAULT_X_MAX)
}

pub fn sup_search_f_with(k: usize, budget: usize, x_max: f64) -> Result<SupSearch> {
    if k == 0 || budget == 0 {
        return Err(GameError::InvalidArgument(
            "k and budget must be at least 1".into(),
        ));
    }
    if !(x_max > 1.0 && x_max.is_finite()) {
        return Err(GameError::InvalidArgument(
            "x_max must be finite and above 1".into(),
        ));
    }
    let f = |x: &[f64]| eval_f(x).unwrap_or(f64::NEG_INFINITY);
    Ok(multistart(
        &f,
        k,
        vec![analytic_seed(k, x_max)],
        budget,
        x_max,
        k as u64,
    ))
}

/// Numerical supremum of `G(·, y)` over `[1, x_max]^k`.
pub fn sup_search_g(y: &[f64], budget: usize, x_max: f64, rng_seed: u64) -> Result<SupSearch> {
    let k = y.len();
    eval_g(&vec![1.0; k], y)?;
    if budget == 0 || !(x_max > 1.0 && x_max.is_finite()) {
        return Err(GameError::InvalidArgument(
            "budget ≥ 1 and finite x_max > 1 required".into(),
        ));
    }
    let g = |x: &[f64]| g_unchecked(x, y);
    let mut pinned = vec![1.0; k];
    pinned[0] = x_max;
    Ok(multistart(
        &g,
        k,
        vec![analytic_seed(k, x_max), pinned],
        budget,
        x_max,
        rng_seed,
    ))
}

/// Smallest supremum of `G(·, y)` over `samples` random bundle-ratio vectors
/// (plus the ratio-t vector), as `(y, sup)`.
pub fn min_sup_over_sampled_y(
    k: usize,
    samples: usize,
    budget: usize,
    x_max: f64,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    if k == 0 {
        return Err(GameError::InvalidArgument("k must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<Vec<f64>> = vec![(1..=k).map(|t| t as f64).collect()];
    for _ in 0..samples {
        let mut y: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0)).collect();
        y[0] = y[0].max(1e-3);
        candidates.push(y);
    }
    let mut worst: Option<(Vec<f64>, f64)> = None;
    for (s, y) in candidates.into_iter().enumerate() {
        let found = sup_search_g(&y, budget, x_max, seed ^ s as u64)?;
        if worst.as_ref().is_none_or(|(_, w)| found.best_value < *w) {
            worst = Some((y, found.best_value));
        }
    }
    Ok(worst.expect("ratio-t candidate is always present"))
}

/// `1 + G(x, y)` with `x_t = Δ^t/Δ^{t+1}` and `y_t = m^t/m^1` taken from the
/// trace. When `Δ^{k+1} = 0` the slack term vanishes and the bound
/// is exactly 1.
pub fn eval_theorem2_bound(trace: &RoundTrace) -> f64 {
    let deltas = trace.deltas();
    if trace.final_delta <= 0.0 || trace.bundle_sizes.is_empty() {
        return 1.0;
    }
    let x: Vec<f64> = deltas.windows(2).map(|w| (w[0] / w[1]).max(1.0)).collect();
    let first = trace.bundle_sizes[0] as f64;
    let y: Vec<f64> = trace
        .bundle_sizes
        .iter()
        .map(|&s| s as f64 / first)
        .collect();
    1.0 + g_unchecked(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn random_starts_alone_reach_window() {
        let f = |x: &[f64]| eval_f(x).unwrap_or(f64::NEG_INFINITY);
        for k in 1..=6 {
            let found = multistart(&f, k, Vec::new(), 200_000, DEFAULT_X_MAX, 99 + k as u64);
            let target = 1.0 / k as f64;
            assert!(found.best_value >= target - 1e-4 && found.best_value <= target + 1e-6);
        }
    }

    #[test]
    fn f_examples() {
        let v = eval_f(&[1e6, 2.0]).unwrap();
        assert!((v - 0.49999975).abs() < 1e-12, "{v}");
        for k in 1..6 {
            assert_eq!(eval_f(&vec![1.0; k]).unwrap(), 0.0);
        }
        let single = eval_f(&[4.0]).unwrap();
        assert_eq!(single, 0.75);
        assert!(eval_f(&[1e12]).unwrap() < 1.0);
        assert!(eval_f(&[]).is_err());
        assert!(eval_f(&[0.5, 2.0]).is_err());
    }

    #[test]
    fn g_examples() {
        let v = eval_g(&[1e6, 1e6], &[1.0, 1.0]).unwrap();
        let want = (2.0 - 2e-6) / (1e6 + 1.0);
        assert!((v - want).abs() < 1e-18);
        assert_eq!(eval_g(&[1.0, 1.0, 1.0], &[0.2, 0.0, 5.0]).unwrap(), 0.0);
        assert!(eval_g(&[2.0, 2.0], &[0.0, 0.0]).is_err());
        assert!(eval_g(&[2.0, 2.0], &[1.0]).is_err());
        assert!(eval_g(&[2.0], &[-1.0]).is_err());
    }

    #[test]
    fn uniform_weights_beat_one_over_k() {
        // For y = (1, 1) the sup over x exceeds 1/2, located by grid + search.
        let y = [1.0, 1.0];
        let mut grid_best = f64::NEG_INFINITY;
        for a in 0..=60 {
            for b in 0..=60 {
                let x = [10f64.powf(a as f64 / 10.0), 10f64.powf(b as f64 / 10.0)];
                grid_best = grid_best.max(eval_g(&x, &y).unwrap());
            }
        }
        let found = sup_search_g(&y, 5_000, DEFAULT_X_MAX, 3).unwrap();
        assert!(grid_best > 0.5);
        assert!(found.best_value >= grid_best - 1e-6);
    }

    #[test]
    fn seed_value_is_exact() {
        for k in 1..=6 {
            let v = eval_f(&analytic_seed(k, 1e6)).unwrap();
            let kf = k as f64;
            assert!((v - (1.0 / kf - 1.0 / (1e6 * kf * kf))).abs() < 1e-14);
        }
    }

    #[test]
    fn sup_search_examples() {
        let s = sup_search_f(3, 10_000).unwrap();
        assert!(s.best_value >= 1.0 / 3.0 - 1e-4 && s.best_value <= 1.0 / 3.0 + 1e-6);
        assert!(s.evaluations <= 10_000);
        let one = sup_search_f(1, 500).unwrap();
        assert!(one.best_value > 1.0 - 1e-5);
        let bigger = sup_search_f_with(1, 500, 1e9).unwrap();
        assert!(bigger.best_value > one.best_value);
        assert!(sup_search_f(0, 10).is_err());
        assert!(sup_search_f(2, 0).is_err());
    }

    #[test]
    fn stationary_point_zeroes_c() {
        for k in 1..=8 {
            assert!(stationarity_residual(k) <= 1e-9, "k={k}");
        }
        // k = 1 with finite x_1: C = 1/x_1.
        assert_eq!(eval_c(&[], 4.0), 0.25);
    }

    #[test]
    fn min_sup_over_y_is_at_least_one_over_k() {
        for k in 1..=3 {
            let (_, v) = min_sup_over_sampled_y(k, 6, 3_000, DEFAULT_X_MAX, 17).unwrap();
            assert!(v >= 1.0 / k as f64 - 1e-4, "k={k} v={v}");
        }
    }

    fn arb_x() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..6.0, 1..7)
            .prop_map(|v| v.into_iter().map(|e| 10f64.powf(e)).collect())
    }

    proptest! {
        #[test]
        fn f_stays_below_one_over_k(x in arb_x()) {
            let k = x.len() as f64;
            prop_assert!(eval_f(&x).unwrap() < 1.0 / k);
        }

        #[test]
        fn g_with_ratio_t_weights_is_f(x in arb_x()) {
            let y: Vec<f64> = (1..=x.len()).map(|t| t as f64).collect();
            let f = eval_f(&x).unwrap();
            let g = eval_g(&x, &y).unwrap();
            prop_assert!((f - g).abs() <= 1e-14 * f.abs().max(1e-300) + 1e-300);
        }

        #[test]
        fn c_equals_denominator_minus_k_numerator(x in arb_x()) {
            let k = x.len();
            let numerator: f64 = x.iter().enumerate().map(|(i, &xi)| (i + 1) as f64 * (1.0 - 1.0 / xi)).sum();
            let denominator = numerator / eval_f(&x).unwrap();
            let c = eval_c(&z_from_x(&x), x[0]);
            let want = denominator - k as f64 * numerator;
            prop_assert!((c - want).abs() <= 1e-9 * denominator.max(1.0));
        }

        #[test]
        fn c_is_nonnegative(z in prop::collection::vec(-6.0f64..6.0, 0..6), finite in any::<bool>()) {
            let z: Vec<f64> = z.into_iter().map(|e| 10f64.powf(e)).collect();
            let x1 = if finite { 1.0 + z.len() as f64 } else { f64::INFINITY };
            let c = eval_c(&z, x1);
            let scale = z.iter().fold(1.0f64, |a, &b| a.max(b)) * 100.0;
            prop_assert!(c >= -1e-12 * scale, "C = {}", c);
        }
    }
}
