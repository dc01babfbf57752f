use std::fmt;
use std::path::{Path, PathBuf};

use bwbroker_core::conformance::merge;
use bwbroker_core::io::{
    parse_scenario, read_events, rounded_json, summary_json, table_csv, table_json,
    time_series_csv, transparency_report, write_events, write_file, ComparisonTable, IoError,
    TableColumn,
};
use bwbroker_core::{
    average, check_exceptionality, check_non_discrimination, compare_proportionality,
    time_series, BamModel, ClassId, ConformanceReport, LinkState, Requirement, Scenario,
    SimOutput,
};
use rayon::prelude::*;

use crate::{CheckArgs, Common, ReportFormat, RunArgs, SweepArgs, TransparencyArgs};

#[derive(Debug)]
pub enum CliError {
    Input(IoError),
    Run(String),
    Write(IoError),
    Conformance(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 3,
            CliError::Run(_) => 4,
            CliError::Write(_) => 5,
            CliError::Conformance(_) => 6,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(e) | CliError::Write(e) => write!(f, "{e}"),
            CliError::Run(m) => write!(f, "simulation failed: {m}"),
            CliError::Conformance(m) => write!(f, "conformance failed: {m}"),
        }
    }
}

/// Input errors map to 3, anything else from the file system to 5.
fn classify(e: IoError) -> CliError {
    if e.is_input_error() {
        CliError::Input(e)
    } else {
        CliError::Write(e)
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    write_file(path, contents.as_bytes()).map_err(CliError::Write)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seeds(pub Vec<u64>);

/// Parses `1-10`, `3` or `1,4,7-9` into an ordered list of seeds.
pub fn parse_seeds(s: &str) -> Result<Seeds, String> {
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || format!("bad seed list `{s}`");
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                seeds.extend(a..=b);
            }
            None => seeds.push(part.parse().map_err(|_| bad())?),
        }
    }
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(Seeds(seeds))
}

fn load(path: &Path) -> Result<Scenario, CliError> {
    parse_scenario(path).map_err(classify)
}

struct Plan {
    scenario: Scenario,
    models: Vec<BamModel>,
    seeds: Vec<u64>,
    dir: PathBuf,
}

fn plan(scenario: Scenario, common: &Common, default_models: &[BamModel]) -> Plan {
    let mut models = if common.model.is_empty() {
        default_models.to_vec()
    } else {
        common.model.clone()
    };
    let mut seen = Vec::new();
    models.retain(|m| {
        let new = !seen.contains(m);
        seen.push(*m);
        new
    });
    let seeds = common.seeds.clone().map_or_else(|| scenario.seeds.clone(), |s| s.0);
    let dir = common.out.join(&scenario.name);
    Plan {
        scenario,
        models,
        seeds,
        dir,
    }
}

fn write_transparency(scenario: &Scenario, dir: &Path) -> Result<(), CliError> {
    let report = transparency_report(scenario);
    write(&dir.join("transparency.txt"), &report.to_text())?;
    write(&dir.join("transparency.json"), &rounded_json(&report))
}

/// Runs every (model, seed) pair of a plan in parallel, ordered by model
/// then seed.
fn simulate_all(plan: &Plan) -> Result<Vec<(BamModel, u64, SimOutput)>, CliError> {
    let jobs: Vec<(BamModel, u64)> = plan
        .models
        .iter()
        .flat_map(|&m| plan.seeds.iter().map(move |&s| (m, s)))
        .collect();
    jobs.par_iter()
        .map(|&(model, seed)| {
            bwbroker_core::run(&plan.scenario.with_model(model), seed)
                .map(|out| (model, seed, out))
                .map_err(|e| CliError::Run(format!("{model} seed {seed}: {e}")))
        })
        .collect()
}

/// Writes summaries, the comparison table and per-model conformance
/// reports; returns the reports.
fn report(
    plan: &Plan,
    outputs: &[(BamModel, u64, SimOutput)],
    common: &Common,
) -> Result<Vec<ConformanceReport>, CliError> {
    let scenario = &plan.scenario;
    let of = |m: BamModel| outputs.iter().filter(move |(om, _, _)| *om == m);
    let mut columns = Vec::new();
    let mut reports = Vec::new();
    for &model in &plan.models {
        let ms = scenario.with_model(model);
        let summaries: Vec<_> = of(model).map(|(_, _, o)| o.summary.clone()).collect();
        for (_, seed, o) in of(model) {
            write(
                &plan.dir.join(model.name()).join(format!("seed-{seed}")).join("summary.json"),
                &summary_json(&o.summary),
            )?;
        }
        let avg = average(&summaries);
        write(&plan.dir.join(model.name()).join("average.json"), &rounded_json(&avg))?;
        columns.push(TableColumn {
            label: model.name().to_uppercase(),
            average: avg,
        });

        let exceptionality = of(model)
            .map(|(_, seed, o)| {
                check_exceptionality(&o.log, &ms)
                    .map_err(|e| CliError::Run(format!("{model} seed {seed}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let reference = ms
            .link_config(ms.observed_link)
            .expect("validated scenario has its observed link");
        let classes: Vec<ClassId> = reference.classes().iter().map(|c| c.class).collect();
        let non_discrimination = check_non_discrimination(
            &LinkState::new(reference),
            &classes,
            ms.demand,
            common.probes,
            plan.seeds.first().copied().unwrap_or(0),
        );
        let proportionality = if model != BamModel::Frfs && plan.models.contains(&BamModel::Frfs) {
            let pairs: Vec<_> = of(model)
                .map(|(_, seed, o)| {
                    let frfs = of(BamModel::Frfs)
                        .find(|(_, s, _)| s == seed)
                        .map(|(_, _, f)| f.log.clone())
                        .expect("every model runs every seed");
                    (o.log.clone(), frfs)
                })
                .collect();
            Some(
                compare_proportionality(&ms, &pairs, common.band)
                    .map_err(|e| CliError::Run(e.to_string()))?,
            )
        } else {
            None
        };
        let report = ConformanceReport {
            scenario: scenario.name.clone(),
            model: model.name().to_string(),
            seeds: plan.seeds.clone(),
            exceptionality: merge(Requirement::Exceptionality, exceptionality),
            non_discrimination,
            proportionality,
        };
        write(&plan.dir.join(model.name()).join("conformance.json"), &rounded_json(&report))?;
        reports.push(report);
    }

    let table = ComparisonTable { columns };
    if common.format.csv() {
        write(&plan.dir.join("table.csv"), &table_csv(&table))?;
    }
    if common.format.json() {
        write(&plan.dir.join("table.json"), &table_json(&table))?;
    }
    println!("{} ({} seeds) -> {}", scenario.name, plan.seeds.len(), plan.dir.display());
    print!("{}", table_csv(&table));
    for r in &reports {
        let verdicts: Vec<String> = r
            .verdicts()
            .iter()
            .map(|v| format!("{} {}", v.requirement.name(), if v.passed { "PASS" } else { "FAIL" }))
            .collect();
        println!("{}: {}", r.model, verdicts.join(", "));
    }
    Ok(reports)
}

fn strict_outcome(reports: &[ConformanceReport], strict: bool) -> Result<(), CliError> {
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| format!("{} {}", r.scenario, r.model))
        .collect();
    if strict && !failed.is_empty() {
        return Err(CliError::Conformance(failed.join(", ")));
    }
    Ok(())
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let scenario = load(&args.scenario)?;
    let default = [scenario.model()];
    let plan = plan(scenario, &args.common, &default);
    write_transparency(&plan.scenario, &plan.dir)?;
    if args.transparency_only {
        println!("{}", plan.dir.join("transparency.txt").display());
        return Ok(());
    }
    if args.bucket_seconds == 0 {
        return Err(CliError::Run("--bucket-seconds must be positive".into()));
    }
    let outputs = simulate_all(&plan)?;
    for (model, seed, o) in &outputs {
        let dir = plan.dir.join(model.name()).join(format!("seed-{seed}"));
        write_events(&dir.join("events.csv"), &o.log).map_err(CliError::Write)?;
        let buckets = time_series(&o.log, &plan.scenario.with_model(*model), args.bucket_seconds * 1000);
        write(&dir.join("timeseries.csv"), &time_series_csv(&buckets))?;
    }
    let reports = report(&plan, &outputs, &args.common)?;
    strict_outcome(&reports, args.common.strict)
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let scenarios = args
        .scenario
        .iter()
        .map(|p| load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut reports = Vec::new();
    for scenario in scenarios {
        let plan = plan(scenario, &args.common, &BamModel::ALL);
        let outputs = simulate_all(&plan)?;
        reports.extend(report(&plan, &outputs, &args.common)?);
    }
    strict_outcome(&reports, args.common.strict)
}

pub fn check(args: &CheckArgs) -> Result<(), CliError> {
    let scenario = load(&args.scenario)?;
    let log = read_events(&args.events).map_err(classify)?;
    if !log.header.scenario.is_empty() && log.header.scenario != scenario.name {
        eprintln!(
            "bwbroker: warning: events file is from scenario `{}`, checking against `{}`",
            log.header.scenario, scenario.name
        );
    }
    let model = log.header.model.parse().unwrap_or_else(|_| scenario.model());
    let verdict = check_exceptionality(&log, &scenario.with_model(model)).map_err(|e| {
        CliError::Input(IoError::Events(e.to_string()))
    })?;
    if let Some(out) = &args.out {
        write(out, &rounded_json(&verdict))?;
    }
    println!(
        "exceptionality {}: {} cases checked, {} violations",
        if verdict.passed { "PASS" } else { "FAIL" },
        verdict.checked,
        verdict.counterexamples.len()
    );
    for c in &verdict.counterexamples {
        println!("  {c}");
    }
    if verdict.passed {
        Ok(())
    } else {
        Err(CliError::Conformance(format!("{}", args.events.display())))
    }
}

pub fn transparency(args: &TransparencyArgs) -> Result<(), CliError> {
    let report = transparency_report(&load(&args.scenario)?);
    let text = match args.format {
        ReportFormat::Text => report.to_text(),
        ReportFormat::Json => rounded_json(&report),
    };
    match &args.out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::parse_seeds;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("1-3").unwrap().0, vec![1, 2, 3]);
        assert_eq!(parse_seeds("5, 1,7-8").unwrap().0, vec![5, 1, 7, 8]);
        assert!(parse_seeds("3-1").is_err());
        assert!(parse_seeds("x").is_err());
        assert!(parse_seeds("").is_err());
    }
}
