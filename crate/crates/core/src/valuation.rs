//! Valuation tables, game instances and instance generators.
//!
//! A valuation maps an item count `x ∈ {0..m}` to the value an agent derives
//! from receiving `x` items. Every valuation the game reasons about is
//! normalized (`v(0) = 0`), nondecreasing and has diminishing marginal
//! returns. Tables are stored densely; generators only ever produce tables
//! that satisfy all three properties.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::numeric::CONCAVITY_TOLERANCE;

/// Which valuation property failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// The table is empty.
    Empty,
    /// A value is NaN or infinite.
    NonFinite,
    /// `v(0) != 0`.
    Normalization,
    /// `v(x) < v(x - 1)`.
    Monotonicity,
    /// The increment into `x` exceeds the increment into `x - 1`.
    Concavity,
}

/// First failing index of a valuation table and the property that failed
/// there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::Empty => "empty table",
            ViolationKind::NonFinite => "value is not finite",
            ViolationKind::Normalization => "v(0) must be 0",
            ViolationKind::Monotonicity => "value decreases",
            ViolationKind::Concavity => "marginal value increases",
        };
        write!(f, "{} at x={}", what, self.index)
    }
}

/// A valuation table on `0..=domain()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Valuation {
    values: Vec<f64>,
}

impl Valuation {
    /// Wraps a table without checking it; see [`Valuation::validate`].
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Wraps a table, rejecting it unless [`Valuation::validate`] passes.
    pub fn checked(values: Vec<f64>) -> std::result::Result<Self, Violation> {
        let v = Self::new(values);
        v.validate()?;
        Ok(v)
    }

    /// Builds the table whose increments are `increments[0], increments[1], ...`.
    pub fn from_increments(increments: &[f64]) -> Self {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut acc = 0.0;
        values.push(acc);
        for inc in increments {
            acc += inc;
            values.push(acc);
        }
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest item count the table is defined for.
    pub fn domain(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    /// `v(x)`. Panics if `x > domain()`.
    #[inline]
    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    /// Value of the `x`-th item, `v(x) - v(x - 1)`, or 0 when `x` is 0 or
    /// beyond the domain.
    pub fn increment(&self, x: usize) -> f64 {
        if x == 0 || x > self.domain() {
            0.0
        } else {
            self.values[x] - self.values[x - 1]
        }
    }

    /// Checks normalization, monotonicity and diminishing returns with the
    /// default concavity tolerance.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        self.validate_with(CONCAVITY_TOLERANCE)
    }

    /// Like [`Valuation::validate`] with an explicit absolute tolerance on
    /// the concavity inequality. Reports the first failing index.
    pub fn validate_with(&self, tol: f64) -> std::result::Result<(), Violation> {
        let v = &self.values;
        if v.is_empty() {
            return Err(Violation {
                index: 0,
                kind: ViolationKind::Empty,
            });
        }
        for x in 0..v.len() {
            if !v[x].is_finite() {
                return Err(Violation {
                    index: x,
                    kind: ViolationKind::NonFinite,
                });
            }
            if x == 0 {
                if v[0] != 0.0 {
                    return Err(Violation {
                        index: 0,
                        kind: ViolationKind::Normalization,
                    });
                }
                continue;
            }
            if v[x] < v[x - 1] {
                return Err(Violation {
                    index: x,
                    kind: ViolationKind::Monotonicity,
                });
            }
            if x >= 2 && v[x] - v[x - 1] > v[x - 1] - v[x - 2] + tol {
                return Err(Violation {
                    index: x,
                    kind: ViolationKind::Concavity,
                });
            }
        }
        Ok(())
    }

    /// Marginal valuation after `alpha` items are already held:
    /// `x ↦ v(x + alpha) - v(alpha)` on `0..=domain() - alpha`.
    pub fn marginal(&self, alpha: usize) -> Result<Valuation> {
        let m = self.domain();
        if alpha > m || self.values.is_empty() {
            return Err(GameError::OutOfRange {
                what: "alpha",
                value: alpha,
                min: 0,
                max: m,
            });
        }
        let base = self.values[alpha];
        Ok(Valuation {
            values: self.values[alpha..].iter().map(|v| v - base).collect(),
        })
    }

    /// The table restricted to `0..=domain`.
    pub fn truncated(&self, domain: usize) -> Valuation {
        Valuation {
            values: self.values[..=domain.min(self.domain())].to_vec(),
        }
    }
}

/// `n` valuations over a common item count `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct GameInstance {
    m: usize,
    valuations: Vec<Valuation>,
}

/// On-disk instance layout: `{"m": int, "valuations": [[real, ...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub m: usize,
    pub valuations: Vec<Vec<f64>>,
}

impl TryFrom<InstanceFile> for GameInstance {
    type Error = GameError;

    fn try_from(file: InstanceFile) -> Result<Self> {
        GameInstance::new(
            file.m,
            file.valuations.into_iter().map(Valuation::new).collect(),
        )
    }
}

impl From<GameInstance> for InstanceFile {
    fn from(inst: GameInstance) -> Self {
        InstanceFile {
            m: inst.m,
            valuations: inst.valuations.into_iter().map(|v| v.values).collect(),
        }
    }
}

impl GameInstance {
    /// Checks `n ≥ 1`, `m ≥ 1` and that every table covers exactly `0..=m`.
    /// Concavity is not enforced here; see [`GameInstance::validate`].
    pub fn new(m: usize, valuations: Vec<Valuation>) -> Result<Self> {
        if m == 0 {
            return Err(GameError::InvalidInstance("m must be at least 1".into()));
        }
        if valuations.is_empty() {
            return Err(GameError::InvalidInstance(
                "at least one valuation is required".into(),
            ));
        }
        for (i, v) in valuations.iter().enumerate() {
            if v.values.len() != m + 1 {
                return Err(GameError::InvalidInstance(format!(
                    "valuation {} has {} entries, expected m + 1 = {}",
                    i,
                    v.values.len(),
                    m + 1
                )));
            }
        }
        Ok(Self { m, valuations })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.valuations.len()
    }

    pub fn valuations(&self) -> &[Valuation] {
        &self.valuations
    }

    pub fn valuation(&self, i: usize) -> &Valuation {
        &self.valuations[i]
    }

    #[inline]
    pub fn value(&self, i: usize, x: usize) -> f64 {
        self.valuations[i].values[x]
    }

    /// Validates every table, reporting the first failing player.
    pub fn validate(&self) -> Result<()> {
        for (player, v) in self.valuations.iter().enumerate() {
            v.validate()
                .map_err(|violation| GameError::InvalidValuation { player, violation })?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| GameError::InvalidInstance(e.to_string()))
    }
}

/// Random instance with `n` concave valuations on `0..=m`.
///
/// Each valuation is the prefix sum of `m` increments drawn uniformly from
/// `[0, max_increment]`, sorted in descending order. Increments are drawn on
/// a dyadic grid (about 1/1024 of `max_increment`) so that every table
/// entry, and every ratio comparison on it, is exact in `f64`.
pub fn gen_random_concave(
    m: usize,
    n: usize,
    seed: u64,
    max_increment: f64,
) -> Result<GameInstance> {
    if m == 0 || n == 0 {
        return Err(GameError::InvalidArgument(
            "m and n must be at least 1".into(),
        ));
    }
    if !(max_increment > 0.0 && max_increment.is_finite()) {
        return Err(GameError::InvalidArgument(
            "max_increment must be positive and finite".into(),
        ));
    }
    let step = 2f64.powi(max_increment.log2().floor() as i32 - 10);
    let units = (max_increment / step).floor() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let valuations = (0..n)
        .map(|_| {
            let mut incs: Vec<u64> = (0..m).map(|_| rng.gen_range(0..=units)).collect();
            incs.sort_unstable_by(|a, b| b.cmp(a));
            let incs: Vec<f64> = incs.into_iter().map(|u| u as f64 * step).collect();
            Valuation::from_increments(&incs)
        })
        .collect();
    GameInstance::new(m, valuations)
}

/// Two players on `m` items: `v1(x) = m` and `v2(x) = x` for `x > 0`.
///
/// Requesting everything is an equilibrium with welfare `m` while the
/// optimum is `2m - 1`.
pub fn gen_poa2_worstcase(m: usize) -> Result<GameInstance> {
    if m < 2 {
        return Err(GameError::OutOfRange {
            what: "m",
            value: m,
            min: 2,
            max: usize::MAX,
        });
    }
    let v1 = (0..=m)
        .map(|x| if x == 0 { 0.0 } else { m as f64 })
        .collect();
    let v2 = (0..=m).map(|x| x as f64).collect();
    GameInstance::new(m, vec![Valuation::new(v1), Valuation::new(v2)])
}

/// `n` identical players on `m = n` items with `v(x) = 1 + x·eps` for
/// `x > 0`.
pub fn gen_unbounded_worstcase(n: usize, eps: f64) -> Result<GameInstance> {
    if n == 0 {
        return Err(GameError::InvalidArgument("n must be at least 1".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(GameError::InvalidArgument("eps must be positive".into()));
    }
    let table: Vec<f64> = (0..=n)
        .map(|x| if x == 0 { 0.0 } else { 1.0 + x as f64 * eps })
        .collect();
    GameInstance::new(n, vec![Valuation::new(table); n])
}
