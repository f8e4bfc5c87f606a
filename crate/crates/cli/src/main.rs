//! `funding-game`: generate instances, compute equilibria, run multi-round
//! sweeps and check the analytic bounds from the command line.

mod args;
mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use funding_game::analysis::{stationarity_residual, sup_search_f_with, DEFAULT_X_MAX};
use funding_game::equilibrium::{compute_nash, verify_nash};
use funding_game::mechanism::{dp_optimal_value, social_welfare};
use funding_game::multiround::ratio_or_sentinel;
use funding_game::sweep::{
    evaluate, random_corpus, random_corpus_multiple, run_sweep, to_csv, SweepOutcome,
};
use funding_game::valuation::{
    gen_poa2_worstcase, gen_random_concave, gen_unbounded_worstcase, GameInstance,
};
use funding_game::GameError;

use args::{
    BoundsArgs, Cli, Command, Family, Format, GenArgs, GeneratorArgs, NashArgs, SimulateArgs,
    SweepArgs,
};
use report::{BoundsRow, NashReport, SimulateReport};

/// Distinguished failure classes, each with its own exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(String),
    Violation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Violation(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Validation(m) | Failure::Violation(m) => m,
        }
    }
}

impl From<GameError> for Failure {
    fn from(e: GameError) -> Self {
        match e {
            GameError::InvalidArgument(_) | GameError::OutOfRange { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Validation(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Nash(a) => cmd_nash(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Bounds(a) => cmd_bounds(&a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn generate(g: &GeneratorArgs, family: Family) -> CliResult<GameInstance> {
    let need = |v: Option<usize>, flag: &str| {
        v.ok_or_else(|| Failure::Usage(format!("--family {} requires --{flag}", family.name())))
    };
    let instance = match family {
        Family::RandomConcave => {
            let seed = g
                .seed
                .ok_or_else(|| Failure::Usage("--family random-concave requires --seed".into()))?;
            gen_random_concave(need(g.m, "m")?, need(g.n, "n")?, seed, g.max_increment)?
        }
        Family::Poa2 => {
            if g.n.is_some_and(|n| n != 2) {
                return Err(Failure::Usage("--family poa2 always has n = 2".into()));
            }
            gen_poa2_worstcase(need(g.m, "m")?)?
        }
        Family::Unbounded => {
            let n = need(g.n, "n")?;
            if g.m.is_some_and(|m| m != n) {
                return Err(Failure::Usage("--family unbounded always has m = n".into()));
            }
            gen_unbounded_worstcase(n, g.eps)?
        }
    };
    Ok(instance)
}

fn load_instance(path: &Path) -> CliResult<GameInstance> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    let instance = GameInstance::from_json(&text)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    instance
        .validate()
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    Ok(instance)
}

/// The instance named by `--instance`, or built from the generator flags.
fn resolve_instance(path: Option<&PathBuf>, g: &GeneratorArgs) -> CliResult<GameInstance> {
    match (path, g.family) {
        (Some(p), None) => load_instance(p),
        (None, Some(family)) => {
            let inst = generate(g, family)?;
            inst.validate()?;
            Ok(inst)
        }
        (Some(_), Some(_)) => Err(Failure::Usage(
            "use either --instance or --family, not both".into(),
        )),
        (None, None) => Err(Failure::Usage(
            "an instance is required: pass --instance FILE or --family".into(),
        )),
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes the instance next to `out` (or into the working directory) and
/// returns the path, for triage of a falsified inequality.
fn dump_instance(instance: &GameInstance, out: Option<&PathBuf>, tag: &str) -> PathBuf {
    let dir = out
        .and_then(|p| p.parent())
        .filter(|d| !d.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let path = dir.join(format!("funding-game-violation-{tag}.json"));
    if let Err(e) = fs::write(&path, instance.to_json() + "\n") {
        eprintln!(
            "warning: could not dump instance to {}: {e}",
            path.display()
        );
    }
    path
}

fn require_format(
    format: Option<Format>,
    allowed: &[Format],
    default: Format,
) -> CliResult<Format> {
    let f = format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Failure::Usage(format!(
            "--format {} is not supported by this command",
            f.name()
        )))
    }
}

fn cmd_gen(a: &GenArgs) -> CliResult<()> {
    let family = a
        .generator
        .family
        .ok_or_else(|| Failure::Usage("gen requires --family".into()))?;
    let instance = generate(&a.generator, family)?;
    let status = match instance.validate() {
        Ok(()) => "valid".to_string(),
        Err(e) => format!("INVALID ({e})"),
    };
    emit(a.out.as_ref(), &(instance.to_json() + "\n"))?;
    let summary = format!(
        "{} instance: n = {}, m = {}, {status}",
        family.name(),
        instance.n(),
        instance.m()
    );
    match &a.out {
        Some(p) => println!("wrote {}: {summary}", p.display()),
        None => eprintln!("{summary}"),
    }
    if status == "valid" {
        Ok(())
    } else {
        Err(Failure::Validation(
            "generated instance failed validation".into(),
        ))
    }
}

fn cmd_nash(a: &NashArgs) -> CliResult<()> {
    let format = require_format(a.format, &[Format::Text, Format::Json], Format::Text)?;
    let instance = resolve_instance(a.instance.as_ref(), &a.generator)?;
    let eq = compute_nash(&instance)?;
    let verdict = verify_nash(&instance, &eq.profile);
    let welfare = social_welfare(&instance, &eq.allocation);
    let opt = dp_optimal_value(&instance);
    let report = NashReport::new(
        &instance,
        &eq,
        welfare,
        opt,
        ratio_or_sentinel(opt, welfare),
        verdict,
    );
    let text = match format {
        Format::Json => report.to_json(),
        _ => report.to_text(),
    };
    emit(a.out.as_ref(), &text)?;
    if verdict {
        Ok(())
    } else {
        let path = dump_instance(&instance, a.out.as_ref(), "nash");
        Err(Failure::Violation(format!(
            "constructed profile is not an equilibrium; instance written to {}",
            path.display()
        )))
    }
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    require_format(a.format, &[Format::Json], Format::Json)?;
    let instance = resolve_instance(a.instance.as_ref(), &a.generator)?;
    let mut reports = Vec::with_capacity(a.k.len());
    for &k in &a.k {
        let config =
            funding_game::multiround::bundle_sizes_ratio_t(instance.m(), k, a.sizing.into())?;
        let trace = funding_game::multiround::run_multiround(&instance, &config)?;
        let row = evaluate(&instance, a.generator.seed.unwrap_or(0), k, a.sizing.into())?;
        reports.push(SimulateReport { row, trace });
    }
    let text = serde_json::to_string_pretty(&reports).expect("report serializes") + "\n";
    emit(a.out.as_ref(), &text)?;
    if let Some(bad) = reports.iter().find(|r| !r.row.all_claims_hold()) {
        let path = dump_instance(&instance, a.out.as_ref(), &format!("k{}", bad.row.k));
        return Err(Failure::Violation(format!(
            "k = {}: a bound check failed (ratio {}); instance written to {}",
            bad.row.k,
            bad.row.ratio,
            path.display()
        )));
    }
    Ok(())
}

fn sweep_instances(a: &SweepArgs, k: Option<usize>) -> CliResult<Vec<(u64, GameInstance)>> {
    let count = a.instances;
    let seeds = (0..count as u64).map(|j| a.seed.wrapping_add(j));
    let built = match a.family {
        Family::RandomConcave => match k {
            Some(k) => {
                random_corpus_multiple(count, a.seed, a.n, a.m, k * (k + 1) / 2, a.max_increment)?
            }
            None => random_corpus(count, a.seed, a.n, a.m, a.max_increment)?,
        },
        Family::Poa2 => seeds
            .zip(2..)
            .map(|(s, m)| gen_poa2_worstcase(m).map(|i| (s, i)))
            .collect::<Result<_, _>>()?,
        Family::Unbounded => seeds
            .zip(2..)
            .map(|(s, n)| gen_unbounded_worstcase(n, a.eps).map(|i| (s, i)))
            .collect::<Result<_, _>>()?,
    };
    Ok(built)
}

fn cmd_sweep(a: &SweepArgs) -> CliResult<()> {
    let format = require_format(a.format, &[Format::Csv, Format::Json], Format::Csv)?;
    let sizing = a.sizing.into();
    let mut outcome = SweepOutcome::default();
    let mut instances = Vec::new();
    if a.divisible && a.instances > 0 {
        for &k in &a.k {
            let corpus = sweep_instances(a, Some(k))?;
            let part = run_sweep(&corpus, &[k], sizing);
            outcome.rows.extend(part.rows);
            outcome.skipped.extend(part.skipped);
            instances.extend(corpus.into_iter().map(|c| (k, c)));
        }
        outcome.rows.sort_by_key(|r| (r.seed, r.k));
    } else {
        let corpus = sweep_instances(a, None)?;
        outcome = run_sweep(&corpus, &a.k, sizing);
        instances.extend(
            a.k.iter()
                .flat_map(|&k| corpus.iter().cloned().map(move |c| (k, c))),
        );
    }
    for s in &outcome.skipped {
        eprintln!("skipped seed {} k {}: {}", s.seed, s.k, s.reason);
    }
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&outcome.rows).expect("rows serialize") + "\n",
        _ => to_csv(&outcome),
    };
    emit(a.out.as_ref(), &text)?;
    if let Some(bad) = outcome.violations().next() {
        let instance = instances
            .iter()
            .find(|(k, (s, _))| *k == bad.k && *s == bad.seed)
            .map(|(_, (_, i))| i)
            .expect("violating row has an instance");
        let path = dump_instance(
            instance,
            a.out.as_ref(),
            &format!("seed{}-k{}", bad.seed, bad.k),
        );
        return Err(Failure::Violation(format!(
            "seed {} k {}: ratio {} breaks a checked bound; instance written to {}",
            bad.seed,
            bad.k,
            bad.ratio,
            path.display()
        )));
    }
    Ok(())
}

fn x_max_from_env() -> CliResult<f64> {
    match std::env::var("FUNDING_GAME_XMAX") {
        Err(_) => Ok(DEFAULT_X_MAX),
        Ok(raw) => match raw.trim().parse::<f64>() {
            Ok(x) if x > 1.0 && x.is_finite() => Ok(x),
            _ => Err(Failure::Usage(format!(
                "FUNDING_GAME_XMAX must be a finite number above 1 (got {raw:?})"
            ))),
        },
    }
}

/// Upper slack on the searched supremum and the residual tolerance.
const SUP_UPPER_SLACK: f64 = 1e-6;
const RESIDUAL_TOLERANCE: f64 = 1e-9;

fn cmd_bounds(a: &BoundsArgs) -> CliResult<()> {
    let format = require_format(
        a.format,
        &[Format::Text, Format::Json, Format::Csv],
        Format::Text,
    )?;
    let x_max = x_max_from_env()?;
    let mut rows = Vec::with_capacity(a.k.len());
    for &k in &a.k {
        let found = sup_search_f_with(k, a.budget, x_max)?;
        rows.push(BoundsRow::new(k, found, stationarity_residual(k)));
    }
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
        Format::Csv => report::bounds_csv(&rows),
        Format::Text => report::bounds_text(&rows, x_max),
    };
    emit(a.out.as_ref(), &text)?;
    if let Some(bad) = rows.iter().find(|r| {
        r.best_value > r.target + SUP_UPPER_SLACK || r.residual.abs() > RESIDUAL_TOLERANCE
    }) {
        return Err(Failure::Violation(format!(
            "k = {}: sup estimate {} or residual {} exceeds the claimed value",
            bad.k, bad.best_value, bad.residual
        )));
    }
    Ok(())
}
