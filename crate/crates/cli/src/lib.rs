//! Command-line front end: instance files in, JSON reports out.

pub mod files;

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::thread;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Map, Value};

use rasched::approx::{lemma_checks, solve, trace, LemmaCheck};
use rasched::exact::{optimal_makespan, optimal_min_load, Optimum, SearchBudget};
use rasched::lff::{lff_schedule, lower_bound};
use rasched::lp::{integer, RoundingParams};
use rasched::reductions::formula::{sat_brute_force, SatStarFormula};
use rasched::reductions::{reduce, schedule_from_assignment, GadgetKind, GadgetModel, Lrs3Numeric};
use rasched::{makespan, min_load, validate, Eligibility, Schedule, TargetMode};

use files::{InstanceFile, LoadedInstance, ScheduleFile};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARSE: u8 = 1;
pub const EXIT_SHAPE: u8 = 2;
pub const EXIT_PARAMS: u8 = 3;
pub const EXIT_BUDGET: u8 = 4;
pub const EXIT_FAULT: u8 = 5;
pub const EXIT_CHECK_FAILED: u8 = 6;
pub const EXIT_USAGE: u8 = 7;

const EXIT_CODES: &str = "Exit codes:
  0  success
  1  unreadable or malformed input file
  2  instance shape rejected (invalid instance, or not interval-restricted where required)
  3  parameter inequality violated
  4  search budget exhausted
  5  internal invariant fault, or LRS3 classification mismatch
  6  verification failed (schedule invalid, or no satisfying assignment for a witness)
  7  bad command line";

#[derive(Debug, Parser)]
#[command(name = "rasched", version, about = "Interval-restricted makespan scheduling tools", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// LP rounding with binary search over the makespan guess.
    Solve(SolveArgs),
    /// Least-flexible-first sweep and its lower bound.
    Lff { instance: PathBuf },
    /// Exact optimum by branch and bound.
    Opt(OptArgs),
    /// Check a schedule against an instance.
    Verify(VerifyArgs),
    /// Build a gadget instance from a 3-SAT* formula.
    Gen(GenArgs),
    /// Check the rank-three processing times against the gadget eligibility.
    #[command(name = "lrs3-check")]
    Lrs3Check(Lrs3Args),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// One or more instance files; several files produce a JSON array.
    #[arg(required = true)]
    pub instances: Vec<PathBuf>,
    /// Load cap parameter, written a/b.
    #[arg(long, default_value = "1/24")]
    pub gamma: String,
    /// Large/huge threshold parameter, written a/b.
    #[arg(long, default_value = "1/24")]
    pub xi: String,
    /// Include the rounding event trace.
    #[arg(long)]
    pub trace: bool,
    /// Worker threads for several instance files.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    Makespan,
    Minload,
}

#[derive(Debug, Args)]
pub struct OptArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "makespan")]
    pub objective: Objective,
    /// Search node limit.
    #[arg(long, default_value_t = 5_000_000)]
    pub budget: u64,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 30)]
    pub time_limit: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub instance: PathBuf,
    /// JSON file with a "schedule" array (a report works too).
    pub schedule: PathBuf,
    /// Every machine load must equal T.
    #[arg(long, conflicts_with = "atmost", required_unless_present = "atmost")]
    pub exact: Option<u64>,
    /// Every machine load must be at most T.
    #[arg(long)]
    pub atmost: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reduction {
    Simple,
    Rar3,
    Rar2,
    Rai,
    Lrs3ra,
}

impl Reduction {
    fn kind(self) -> GadgetKind {
        match self {
            Reduction::Simple => GadgetKind::Simple,
            Reduction::Rar3 => GadgetKind::Rar3,
            Reduction::Rar2 => GadgetKind::Rar2,
            Reduction::Rai => GadgetKind::Rai,
            Reduction::Lrs3ra => GadgetKind::Lrs3Ra,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub reduction: Reduction,
    /// Formula file: one clause per line, `k: l1 l2 l3`.
    pub formula: PathBuf,
    /// Instance file to write; names go to `<out>.names.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the schedule of the first satisfying assignment here.
    #[arg(long)]
    pub witness: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Lrs3Args {
    pub formula: PathBuf,
    #[arg(long, default_value = "1/2")]
    pub delta: String,
    #[arg(long, default_value = "8")]
    pub cap: String,
}

/// What the process prints and returns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub checked: usize,
    pub violations: Vec<String>,
}

impl CheckEntry {
    fn single(name: &str, violations: Vec<String>, checked: usize) -> Self {
        CheckEntry {
            name: name.into(),
            passed: violations.is_empty(),
            checked,
            violations,
        }
    }
}

impl From<LemmaCheck> for CheckEntry {
    fn from(c: LemmaCheck) -> Self {
        CheckEntry {
            passed: c.passed(),
            name: c.name,
            checked: c.checked,
            violations: c.violations,
        }
    }
}

/// The JSON report every command prints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultReport {
    pub command: String,
    pub instance_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_star: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub makespan: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_load: Option<u64>,
    #[serde(rename = "bound_L", skip_serializing_if = "Option::is_none")]
    pub bound_l: Option<String>,
    pub lemma_checks: Vec<CheckEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<usize>>,
    /// Command-specific fields, kept in key order.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl ResultReport {
    fn new(command: &str, instance_digest: String) -> Self {
        ResultReport {
            command: command.into(),
            instance_digest,
            t_star: None,
            makespan: None,
            min_load: None,
            bound_l: None,
            lemma_checks: Vec::new(),
            schedule: None,
            extra: Map::new(),
        }
    }

    fn all_passed(&self) -> bool {
        self.lemma_checks.iter().all(|c| c.passed)
    }
}

fn to_json(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports always serialize");
    text.push('\n');
    text
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<(InstanceFile, LoadedInstance), CliError> {
    let file = InstanceFile::parse(&read(path)?)
        .map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
    let loaded = file
        .load()
        .map_err(|e| CliError::new(EXIT_SHAPE, format!("{}: {e}", path.display())))?;
    Ok((file, loaded))
}

fn read_formula(path: &Path) -> Result<SatStarFormula, CliError> {
    SatStarFormula::parse(&read(path)?).map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", path.display())))
}

/// Parses `a/b` or `a`; decimals are rejected.
pub fn parse_rational(flag: &str, text: &str) -> Result<BigRational, CliError> {
    let bad = || CliError::new(EXIT_PARAMS, format!("--{flag} {text}: expected an integer or a/b"));
    if text.contains('.') {
        return Err(bad());
    }
    let (num, den) = match text.split_once('/') {
        Some((a, b)) => (a, b),
        None => (text, "1"),
    };
    let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
    let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
    if den == BigInt::from(0) {
        return Err(bad());
    }
    Ok(BigRational::new(num, den))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::new(EXIT_FAULT, format!("{}: {e}", path.display())))
}

fn cmd_solve_one(path: &Path, params: &RoundingParams, with_trace: bool) -> Result<ResultReport, CliError> {
    let (file, loaded) = read_instance(path)?;
    let inst = loaded
        .interval()
        .map_err(|e| CliError::new(EXIT_SHAPE, e.to_string()))?
        .ok_or_else(|| CliError::new(EXIT_SHAPE, format!("{}: eligible sets are not intervals", path.display())))?;
    let mut report = ResultReport::new("solve", file.digest());
    report.bound_l = Some(lower_bound(&inst).value.to_string());
    if inst.job_count() == 0 {
        report.t_star = Some(0);
        report.makespan = Some(0);
        report.schedule = Some(Vec::new());
        return Ok(report);
    }
    let sol = solve(&inst, params).map_err(|e| CliError::new(EXIT_FAULT, e.to_string()))?;
    let span = makespan(&inst, &sol.schedule);
    report.t_star = Some(sol.t_star);
    report.makespan = Some(span);
    report.lemma_checks = lemma_checks(&inst, params, &sol.lp_cert, &sol.rounding)
        .into_iter()
        .map(CheckEntry::from)
        .collect();
    let cap = params.load_cap(sol.t_star);
    let over = if integer(span) <= cap {
        Vec::new()
    } else {
        vec![format!("makespan {span} exceeds {cap}")]
    };
    report.lemma_checks.push(CheckEntry::single("makespan_cap", over, 1));
    report.schedule = Some(sol.schedule.assignment().to_vec());
    if with_trace {
        let events = trace(&inst, params, &sol.lp_cert, &sol.rounding);
        report.extra.insert("trace".into(), serde_json::to_value(events).expect("events serialize"));
    }
    if !report.all_passed() {
        return Err(CliError::new(EXIT_FAULT, to_json(&report)));
    }
    Ok(report)
}

fn cmd_solve(args: &SolveArgs) -> Result<String, CliError> {
    let gamma = parse_rational("gamma", &args.gamma)?;
    let xi = parse_rational("xi", &args.xi)?;
    let params = RoundingParams::new(gamma, xi).map_err(|e| CliError::new(EXIT_PARAMS, e.to_string()))?;
    if args.instances.len() == 1 {
        return Ok(to_json(&cmd_solve_one(&args.instances[0], &params, args.trace)?));
    }
    let workers = args.jobs.clamp(1, args.instances.len());
    let mut results: Vec<Option<Result<ResultReport, CliError>>> = vec![None; args.instances.len()];
    thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let params = &params;
                scope.spawn(move || {
                    (w..args.instances.len())
                        .step_by(workers)
                        .map(|x| (x, cmd_solve_one(&args.instances[x], params, args.trace)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (x, r) in h.join().expect("solver threads do not panic") {
                results[x] = Some(r);
            }
        }
    });
    let reports = results
        .into_iter()
        .map(|r| r.expect("every file is handled"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(to_json(&reports))
}

fn cmd_lff(path: &Path) -> Result<String, CliError> {
    let (file, loaded) = read_instance(path)?;
    let inst = loaded
        .interval()
        .map_err(|e| CliError::new(EXIT_SHAPE, e.to_string()))?
        .ok_or_else(|| CliError::new(EXIT_SHAPE, format!("{}: eligible sets are not intervals", path.display())))?;
    let sched = lff_schedule(&inst).map_err(|e| CliError::new(EXIT_FAULT, e.to_string()))?;
    let bound = lower_bound(&inst);
    let cap = &bound.value + integer(inst.max_size());
    let loads = sched.loads(&inst);
    let over: Vec<String> = loads
        .iter()
        .enumerate()
        .filter(|(_, &l)| integer(l) > cap)
        .map(|(i, l)| format!("machine {i} load {l} exceeds {cap}"))
        .collect();
    let report_check = validate(&inst, &sched, None, TargetMode::AtMost);
    let invalid: Vec<String> = report_check.violations.iter().map(|v| format!("{v:?}")).collect();
    let mut report = ResultReport::new("lff", file.digest());
    report.makespan = Some(makespan(&inst, &sched));
    report.bound_l = Some(bound.value.to_string());
    report.lemma_checks = vec![
        CheckEntry::single("schedule_eligible", invalid, inst.job_count()),
        CheckEntry::single("load_within_bound_plus_max_size", over, loads.len()),
    ];
    report.schedule = Some(sched.assignment().to_vec());
    if let Some(w) = bound.witness {
        report
            .extra
            .insert("bound_witness".into(), serde_json::to_value(w).expect("witness serializes"));
    }
    if !report.all_passed() {
        return Err(CliError::new(EXIT_FAULT, to_json(&report)));
    }
    Ok(to_json(&report))
}

fn cmd_opt(args: &OptArgs) -> Result<Outcome, CliError> {
    if args.budget == 0 || args.time_limit == 0 {
        return Err(CliError::new(EXIT_PARAMS, "budget > 0 and time limit > 0 fail"));
    }
    let (file, loaded) = read_instance(&args.instance)?;
    let inst = loaded.restricted().map_err(|e| CliError::new(EXIT_SHAPE, e.to_string()))?;
    let budget = SearchBudget::new(args.budget, Duration::from_secs(args.time_limit));
    let outcome = match args.objective {
        Objective::Makespan => optimal_makespan(&inst, budget),
        Objective::Minload => optimal_min_load(&inst, budget),
    };
    let mut report = ResultReport::new("opt", file.digest());
    let (status, sched, code) = match outcome {
        Optimum::Solved { schedule, .. } => ("optimal", Some(schedule), EXIT_OK),
        Optimum::Unknown { best } => ("budget_exhausted", best.map(|(_, s)| s), EXIT_BUDGET),
    };
    report.extra.insert("status".into(), json!(status));
    report
        .extra
        .insert("objective".into(), json!(match args.objective {
            Objective::Makespan => "makespan",
            Objective::Minload => "minload",
        }));
    if let Some(s) = &sched {
        let check = validate(&inst, s, None, TargetMode::AtMost);
        let invalid = check.violations.iter().map(|v| format!("{v:?}")).collect();
        report.lemma_checks.push(CheckEntry::single("schedule_eligible", invalid, inst.job_count()));
        match args.objective {
            Objective::Makespan => report.makespan = Some(makespan(&inst, s)),
            Objective::Minload => report.min_load = Some(min_load(&inst, s)),
        }
        report.schedule = Some(s.assignment().to_vec());
    }
    if !report.all_passed() {
        return Err(CliError::new(EXIT_FAULT, to_json(&report)));
    }
    let stderr = if code == EXIT_BUDGET {
        "search budget exhausted; the reported schedule is the best found\n".into()
    } else {
        String::new()
    };
    Ok(Outcome {
        stdout: to_json(&report),
        stderr,
        code,
    })
}

fn cmd_verify(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let (file, loaded) = read_instance(&args.instance)?;
    let inst = loaded.restricted().map_err(|e| CliError::new(EXIT_SHAPE, e.to_string()))?;
    let sched: ScheduleFile = serde_json::from_str(&read(&args.schedule)?)
        .map_err(|e| CliError::new(EXIT_PARSE, format!("{}: {e}", args.schedule.display())))?;
    let (target, mode) = match (args.exact, args.atmost) {
        (Some(t), _) => (t, TargetMode::Exact),
        (_, Some(t)) => (t, TargetMode::AtMost),
        _ => unreachable!("clap requires one target"),
    };
    let result = validate(&inst, &Schedule::new(sched.schedule.clone()), Some(target), mode);
    let mut report = ResultReport::new("verify", file.digest());
    let violations = result.violations.iter().map(|v| format!("{v:?}")).collect();
    let name = match mode {
        TargetMode::Exact => "loads_equal_target",
        TargetMode::AtMost => "loads_within_target",
    };
    report.lemma_checks.push(CheckEntry::single(name, violations, inst.machine_count()));
    if result.violations.is_empty() {
        report.makespan = result.loads.iter().copied().max();
        report.min_load = result.loads.iter().copied().min();
    }
    report.schedule = Some(sched.schedule);
    report.extra.insert("loads".into(), json!(result.loads));
    report.extra.insert("target".into(), json!(target));
    let code = if result.passed() { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok(Outcome {
        stdout: to_json(&report),
        stderr: if code == EXIT_OK { String::new() } else { "schedule fails verification\n".into() },
        code,
    })
}

fn names_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".names.json");
    PathBuf::from(name)
}

fn cmd_gen(args: &GenArgs) -> Result<String, CliError> {
    let formula = read_formula(&args.formula)?;
    let kind = args.reduction.kind();
    let gadget = reduce(kind, &formula);
    let file = match &gadget.model {
        GadgetModel::Restricted(r) => InstanceFile::from_restricted(r),
        GadgetModel::Resource(r) => InstanceFile::from_resource(r),
        GadgetModel::Interval(r) => InstanceFile::from_rai(r),
    };
    write(&args.out, &file.pretty())?;
    let names = json!({
        "reduction": kind.name(),
        "target_T": gadget.target,
        "machines": gadget.machine_names(),
        "jobs": gadget.job_names(),
    });
    write(&names_path(&args.out), &to_json(&names))?;
    let mut report = ResultReport::new("gen", file.digest());
    let inst = gadget.restricted();
    let total = inst.total_size();
    let expected = gadget.target * inst.machine_count() as u64;
    let mass = if total == expected {
        Vec::new()
    } else {
        vec![format!("total size {total} differs from {expected}")]
    };
    report.lemma_checks.push(CheckEntry::single("mass_identity", mass, 1));
    report.extra.insert("reduction".into(), json!(kind.name()));
    report.extra.insert("target_T".into(), json!(gadget.target));
    report.extra.insert("machine_count".into(), json!(inst.machine_count()));
    report.extra.insert("job_count".into(), json!(inst.job_count()));
    report.extra.insert("total_size".into(), json!(total));
    if !report.all_passed() {
        return Err(CliError::new(EXIT_FAULT, to_json(&report)));
    }
    if let Some(path) = &args.witness {
        let assignment = sat_brute_force(&formula)
            .map_err(|e| CliError::new(EXIT_PARAMS, e.to_string()))?
            .ok_or_else(|| CliError::new(EXIT_CHECK_FAILED, "formula is unsatisfiable; no witness schedule exists"))?;
        let sched = schedule_from_assignment(&gadget, &formula, &assignment)
            .map_err(|e| CliError::new(EXIT_FAULT, e.to_string()))?;
        write(path, &to_json(&ScheduleFile {
            schedule: sched.assignment().to_vec(),
        }))?;
        report.extra.insert("witness_assignment".into(), json!(assignment));
    }
    Ok(to_json(&report))
}

fn cmd_lrs3_check(args: &Lrs3Args) -> Result<Outcome, CliError> {
    let formula = read_formula(&args.formula)?;
    let delta = parse_rational("delta", &args.delta)?;
    let cap = parse_rational("cap", &args.cap)?;
    let gadget = reduce(GadgetKind::Lrs3Ra, &formula);
    let mut numeric = Lrs3Numeric::new(&formula, &gadget, delta, cap).map_err(|e| CliError::new(EXIT_PARAMS, e.to_string()))?;
    let check = numeric.check(&gadget);
    let file = match &gadget.model {
        GadgetModel::Restricted(r) => InstanceFile::from_restricted(r),
        _ => unreachable!("the rank-three gadget is a restricted instance"),
    };
    let mut report = ResultReport::new("lrs3-check", file.digest());
    let faults: Vec<String> = check.faults.iter().map(ToString::to_string).collect();
    report.lemma_checks.push(CheckEntry::single("trichotomy", faults, check.pairs));
    report.extra.insert(
        "table".into(),
        json!({
            "pairs": check.pairs,
            "full_evaluations": check.full_evaluations,
            "shortcuts": check.shortcuts,
            "eligible": check.eligible,
            "blocked": check.pairs - check.eligible,
        }),
    );
    report.extra.insert("epsilon".into(), json!(numeric.eps.to_string()));
    report.extra.insert("base_N".into(), json!(numeric.base.to_string()));
    let code = if check.passed() { EXIT_OK } else { EXIT_FAULT };
    Ok(Outcome {
        stdout: to_json(&report),
        stderr: if code == EXIT_OK { String::new() } else { "classification mismatch\n".into() },
        code,
    })
}

fn ok(stdout: String) -> Outcome {
    Outcome {
        stdout,
        stderr: String::new(),
        code: EXIT_OK,
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a).map(ok),
        Command::Lff { instance } => cmd_lff(instance).map(ok),
        Command::Opt(a) => cmd_opt(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Gen(a) => cmd_gen(a).map(ok),
        Command::Lrs3Check(a) => cmd_lrs3_check(a),
    };
    result.unwrap_or_else(|e| Outcome {
        stdout: String::new(),
        stderr: format!("error: {}\n", e.message.trim_end()),
        code: e.code,
    })
}
