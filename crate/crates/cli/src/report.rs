use std::fmt::Write as _;

use funding_game::analysis::SupSearch;
use funding_game::equilibrium::EquilibriumResult;
use funding_game::multiround::RoundTrace;
use funding_game::numeric::sig9;
use funding_game::sweep::SweepRow;
use funding_game::valuation::GameInstance;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct PlayerLine {
    pub player: usize,
    pub alpha: usize,
    pub value: f64,
    pub allocated: usize,
}

#[derive(Debug, Serialize)]
pub struct NashReport {
    pub n: usize,
    pub m: usize,
    pub players: Vec<PlayerLine>,
    pub allocation: Vec<usize>,
    pub welfare: f64,
    pub opt: f64,
    pub ratio: f64,
    pub degenerate: bool,
    pub nash: bool,
}

impl NashReport {
    pub fn new(
        instance: &GameInstance,
        eq: &EquilibriumResult,
        welfare: f64,
        opt: f64,
        ratio: f64,
        nash: bool,
    ) -> Self {
        let players = eq
            .profile
            .requests()
            .iter()
            .enumerate()
            .map(|(i, r)| PlayerLine {
                player: i,
                alpha: eq.certified[i],
                value: r.declared_value,
                allocated: eq.allocation.get(i),
            })
            .collect();
        Self {
            n: instance.n(),
            m: instance.m(),
            players,
            allocation: eq.allocation.counts().to_vec(),
            welfare,
            opt,
            ratio,
            degenerate: eq.degenerate,
            nash,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("n = {}, m = {}\n", self.n, self.m);
        s.push_str("player\talpha\tvalue\tallocated\n");
        for p in &self.players {
            let _ = writeln!(s, "{}\t{}\t{}\t{}", p.player, p.alpha, p.value, p.allocated);
        }
        let alloc: Vec<String> = self.allocation.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "allocation: {}", alloc.join(" "));
        let _ = writeln!(s, "welfare: {}", self.welfare);
        let _ = writeln!(s, "opt: {}", self.opt);
        let _ = writeln!(s, "ratio: {}", sig9(self.ratio));
        let _ = writeln!(s, "nash: {}", self.nash);
        s
    }
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    #[serde(flatten)]
    pub row: SweepRow,
    pub trace: RoundTrace,
}

#[derive(Debug, Serialize)]
pub struct BoundsRow {
    pub k: usize,
    pub target: f64,
    pub best_value: f64,
    pub gap: f64,
    pub residual: f64,
    pub evaluations: usize,
    pub best_x: Vec<f64>,
}

impl BoundsRow {
    pub fn new(k: usize, found: SupSearch, residual: f64) -> Self {
        let target = 1.0 / k as f64;
        Self {
            k,
            target,
            best_value: found.best_value,
            gap: target - found.best_value,
            residual,
            evaluations: found.evaluations,
            best_x: found.best_x,
        }
    }
}

pub fn bounds_csv(rows: &[BoundsRow]) -> String {
    let mut s = String::from("k,target,best_value,gap,residual,evaluations\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.k,
            sig9(r.target),
            sig9(r.best_value),
            r.gap,
            r.residual,
            r.evaluations
        );
    }
    s
}

pub fn bounds_text(rows: &[BoundsRow], x_max: f64) -> String {
    let mut s = format!("x_max = {x_max}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "k = {}: sup F ≈ {} (1/k = {}, gap {:.3e}), residual {:.3e}, {} evaluations",
            r.k,
            sig9(r.best_value),
            sig9(r.target),
            r.gap,
            r.residual,
            r.evaluations
        );
    }
    s
}
