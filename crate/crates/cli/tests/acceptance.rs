//! Acceptance run: one pass/fail line per criterion, nonzero exit on any failure.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rasched::approx::{lemma_checks, solve};
use rasched::corpus::{corpus, CorpusShape};
use rasched::exact::{exists_exact_t_schedule, optimal_makespan, ExactSearch, Optimum, SearchBudget};
use rasched::lff::{lff_schedule, lower_bound};
use rasched::lp::{feasible_at, integer, RoundingParams};
use rasched::model::rai_to_restricted;
use rasched::reductions::formula::{all_satisfying, random_formula, sat_brute_force, SatStarFormula};
use rasched::reductions::{
    assignment_from_schedule, reduce, schedule_from_assignment, GadgetKind, JobKey, Lrs3Class, Lrs3Numeric, MachineKey,
};
use rasched::{makespan, validate, Eligibility, RaiInstance, TargetMode};
use rasched_cli::files::InstanceFile;

const CORPUS_SEED: u64 = 2024;
const CORPUS_SIZE: usize = 200;
/// Instances with OPT at the integer lower bound needed for the LP spot set.
const TIGHT_SPOT_MIN: usize = 20;
const RANDOM_FORMULAS: usize = 12;

/// The five rounding invariants that must never report a violation.
const ROUNDING_INVARIANTS: [&str; 5] = [
    "huge_bound",
    "large_bound",
    "region_candidates",
    "one_big_job_per_machine",
    "small_cap",
];

struct Verdict {
    failures: Vec<String>,
    note: String,
}

impl Verdict {
    fn new() -> Self {
        Verdict {
            failures: Vec::new(),
            note: String::new(),
        }
    }

    fn require(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(message());
        }
    }
}

struct Solved {
    inst: RaiInstance,
    opt: u64,
}

fn budget() -> SearchBudget {
    SearchBudget::new(20_000_000, Duration::from_secs(120))
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn pow(base: &BigRational, e: usize) -> BigRational {
    (0..e).fold(rat(1, 1), |acc, _| acc * base)
}

fn ceil_u64(q: &BigRational) -> u64 {
    u64::try_from(q.ceil().to_integer()).expect("bounds fit in u64")
}

fn solve_corpus(v: &mut Verdict) -> Vec<Solved> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    let mut solved = Vec::new();
    for (x, inst) in corpus(&CorpusShape::default(), CORPUS_SIZE, &mut rng).into_iter().enumerate() {
        match optimal_makespan(&inst, budget()) {
            Optimum::Solved { opt, .. } => solved.push(Solved { inst, opt }),
            Optimum::Unknown { .. } => v.failures.push(format!("instance {x}: exact search ran out of budget")),
        }
    }
    solved
}

fn approximation(corpus: &[Solved]) -> (Verdict, Verdict) {
    let params = RoundingParams::default();
    let mut guarantee = Verdict::new();
    let mut invariants = Verdict::new();
    let factor = rat(47, 24);
    for (x, s) in corpus.iter().enumerate() {
        let sol = match solve(&s.inst, &params) {
            Ok(sol) => sol,
            Err(e) => {
                guarantee.failures.push(format!("instance {x}: {e}"));
                continue;
            }
        };
        let span = integer(makespan(&s.inst, &sol.schedule));
        guarantee.require(validate(&s.inst, &sol.schedule, None, TargetMode::AtMost).passed(), || {
            format!("instance {x}: invalid schedule")
        });
        guarantee.require(span <= &factor * integer(sol.t_star), || {
            format!("instance {x}: makespan {span} above (47/24) * {}", sol.t_star)
        });
        guarantee.require(sol.t_star <= s.opt, || format!("instance {x}: t_star {} above OPT {}", sol.t_star, s.opt));
        guarantee.require(span <= &factor * integer(s.opt), || format!("instance {x}: makespan {span} above (47/24) OPT"));
        for check in lemma_checks(&s.inst, &params, &sol.lp_cert, &sol.rounding) {
            if ROUNDING_INVARIANTS.contains(&check.name.as_str()) {
                invariants.require(check.passed(), || format!("instance {x}: {} {:?}", check.name, check.violations));
            }
        }
    }
    guarantee.note = format!("{} instances", corpus.len());
    invariants.note = format!("{} invariants x {} instances", ROUNDING_INVARIANTS.len(), corpus.len());
    (guarantee, invariants)
}

fn lff_guarantee(corpus: &[Solved]) -> Verdict {
    let mut v = Verdict::new();
    for (x, s) in corpus.iter().enumerate() {
        let sched = match lff_schedule(&s.inst) {
            Ok(sched) => sched,
            Err(e) => {
                v.failures.push(format!("instance {x}: {e}"));
                continue;
            }
        };
        let bound = lower_bound(&s.inst).value;
        let cap = &bound + integer(s.inst.max_size());
        v.require(sched.len() == s.inst.job_count(), || format!("instance {x}: not every job placed"));
        v.require(validate(&s.inst, &sched, None, TargetMode::AtMost).passed(), || {
            format!("instance {x}: invalid schedule")
        });
        for (i, load) in sched.loads(&s.inst).into_iter().enumerate() {
            v.require(integer(load) <= cap, || format!("instance {x}: machine {i} load {load} above {cap}"));
        }
        v.require(makespan(&s.inst, &sched) <= 2 * s.opt, || format!("instance {x}: makespan above 2 OPT"));
        v.require(bound <= integer(s.opt), || format!("instance {x}: bound {bound} above OPT {}", s.opt));
    }
    v.note = format!("{} instances", corpus.len());
    v
}

fn relaxation(corpus: &[Solved]) -> Verdict {
    let params = RoundingParams::default();
    let mut v = Verdict::new();
    let mut tight = 0;
    for (x, s) in corpus.iter().enumerate() {
        v.require(feasible_at(&s.inst, s.opt, &params).is_some(), || format!("instance {x}: LP infeasible at OPT"));
        if s.opt > 0 && ceil_u64(&lower_bound(&s.inst).value) == s.opt {
            tight += 1;
            v.require(feasible_at(&s.inst, s.opt - 1, &params).is_none(), || {
                format!("instance {x}: LP feasible at OPT - 1")
            });
        }
    }
    v.require(tight >= TIGHT_SPOT_MIN, || format!("only {tight} instances with OPT at the lower bound"));
    v.note = format!("{} feasible at OPT, {tight} infeasible at OPT - 1", corpus.len());
    v
}

fn mass_factor(kind: GadgetKind) -> u64 {
    match kind {
        GadgetKind::Rar2 => 7,
        GadgetKind::Rai => 8,
        _ => 2,
    }
}

fn mass_identities() -> Verdict {
    let mut v = Verdict::new();
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    let mut formulas = vec![SatStarFormula::minimal()];
    formulas.extend((0..RANDOM_FORMULAS).map(|x| random_formula([3, 6, 9][x % 3], &mut rng)));
    for (x, f) in formulas.iter().enumerate() {
        for kind in GadgetKind::ALL {
            let g = reduce(kind, f);
            let inst = g.restricted();
            let expected = mass_factor(kind) * inst.machine_count() as u64;
            v.require(inst.total_size() == expected, || {
                format!("formula {x} {}: total {} vs {expected}", kind.name(), inst.total_size())
            });
        }
    }
    v.note = format!("{} formulas x {} reductions", formulas.len(), GadgetKind::ALL.len());
    v
}

fn constructive() -> Verdict {
    let mut v = Verdict::new();
    let f = SatStarFormula::minimal();
    let assignments = all_satisfying(&f).expect("minimal formula is small");
    v.require(!assignments.is_empty(), || "minimal formula has no satisfying assignment".into());
    v.require(sat_brute_force(&f).ok().flatten().is_some(), || "brute force finds nothing".into());
    for kind in GadgetKind::ALL {
        let g = reduce(kind, &f);
        v.require(g.target == kind.target(), || format!("{}: target {}", kind.name(), g.target));
        for a in &assignments {
            let sched = match schedule_from_assignment(&g, &f, a) {
                Ok(s) => s,
                Err(e) => {
                    v.failures.push(format!("{} {a:?}: {e}", kind.name()));
                    continue;
                }
            };
            v.require(validate(g.restricted(), &sched, Some(g.target), TargetMode::Exact).passed(), || {
                format!("{} {a:?}: not a {}-schedule", kind.name(), g.target)
            });
            v.require(assignment_from_schedule(&g, &f, &sched).as_ref() == Ok(a), || {
                format!("{} {a:?}: extraction differs", kind.name())
            });
        }
    }
    v.note = format!("{} assignments x {} reductions", assignments.len(), GadgetKind::ALL.len());
    v
}

fn unsatisfiable_formula() -> Option<SatStarFormula> {
    (0..20_000u64).find_map(|seed| {
        let f = random_formula(3, &mut ChaCha8Rng::seed_from_u64(seed));
        matches!(sat_brute_force(&f), Ok(None)).then_some(f)
    })
}

fn search_direction() -> Verdict {
    let mut v = Verdict::new();
    let f = SatStarFormula::minimal();
    for kind in [GadgetKind::Simple, GadgetKind::Rar3] {
        let g = reduce(kind, &f);
        match exists_exact_t_schedule(g.restricted(), g.target, budget()) {
            ExactSearch::Found(s) => v.require(
                validate(g.restricted(), &s, Some(g.target), TargetMode::Exact).passed(),
                || format!("{}: found schedule is not exact", kind.name()),
            ),
            other => v.failures.push(format!("{}: {other:?}", kind.name())),
        }
    }
    match unsatisfiable_formula() {
        Some(u) => {
            let g = reduce(GadgetKind::Simple, &u);
            let result = exists_exact_t_schedule(g.restricted(), g.target, budget());
            v.require(result == ExactSearch::Absent, || format!("unsatisfiable formula: {result:?}"));
            v.note = format!("minimal formula found for simple and rar3, absent for {}", u.to_text().trim().replace('\n', "; "));
        }
        None => v.failures.push("no unsatisfiable formula with three variables found".into()),
    }
    v
}

fn trichotomy() -> Verdict {
    let mut v = Verdict::new();
    let f = SatStarFormula::minimal();
    let g = reduce(GadgetKind::Lrs3Ra, &f);
    let mut num = match Lrs3Numeric::new(&f, &g, rat(1, 2), rat(8, 1)) {
        Ok(num) => num,
        Err(e) => {
            v.failures.push(e.to_string());
            return v;
        }
    };
    let report = num.check(&g);
    for fault in report.faults.iter().take(5) {
        v.failures.push(fault.to_string());
    }
    let inst = g.restricted();
    let expected_eligible: usize = (0..inst.job_count()).map(|j| inst.eligible(j).len()).sum();
    v.require(report.pairs == inst.job_count() * inst.machine_count(), || "not every pair evaluated".into());
    v.require(report.eligible == expected_eligible, || format!("{} eligible vs {expected_eligible}", report.eligible));

    let nn = num.base.clone();
    let inv = nn.recip();
    for j in 0..f.variable_count() {
        let tj = g.job(JobKey::Truth { j }).expect("truth job");
        let t0 = g.machine(MachineKey::Truth { j, q: 0 }).expect("truth machine");
        let t1 = g.machine(MachineKey::Truth { j, q: 1 }).expect("truth machine");
        let low = rat(2, 1) * pow(&inv, 4) + rat(2, 1);
        let high = rat(2, 1) + rat(2, 1) * &inv;
        v.require(num.processing_time(tj, t0) == low, || format!("TJob({j}) on TMach({j},0)"));
        v.require(num.processing_time(tj, t1) == high, || format!("TJob({j}) on TMach({j},1)"));
        v.require(num.classify(&g, tj, t0) == Ok(Lrs3Class::Eligible(2)), || format!("TJob({j}) class"));
    }
    for (i, c) in f.clauses().iter().enumerate() {
        for s in 0..3 {
            let job = g.job(JobKey::Clause { i, s }).expect("clause job");
            let phi = [1, 3 - i64::from(c.kind), 2][s];
            for s2 in 0..3 {
                let m = g.machine(MachineKey::Clause { i, s: s2 }).expect("clause machine");
                let expected = &num.eps * pow(&inv, 2 * (2 - s2)) + rat(phi, 1);
                v.require(num.processing_time(job, m) == expected, || format!("CJob({i},{s}) on CMach({i},{s2})"));
            }
        }
    }
    v.note = format!(
        "{} pairs, {} exact, {} by dominant exponent",
        report.pairs, report.full_evaluations, report.shortcuts
    );
    v
}

fn run_twice(v: &mut Verdict, label: &str, args: &[&str], outputs: &[&Path]) {
    let run = || {
        let out = Command::new(env!("CARGO_BIN_EXE_rasched"))
            .args(args)
            .output()
            .expect("binary runs");
        let files: Vec<Vec<u8>> = outputs.iter().map(|p| fs::read(p).unwrap_or_default()).collect();
        (out.status.code(), out.stdout, out.stderr, files)
    };
    let first = run();
    let second = run();
    v.require(first.0 == Some(0), || format!("{label}: exit {:?}: {}", first.0, String::from_utf8_lossy(&first.2)));
    v.require(!first.1.is_empty(), || format!("{label}: empty report"));
    v.require(first == second, || format!("{label}: runs differ"));
}

fn determinism() -> Verdict {
    let mut v = Verdict::new();
    let dir = tempfile::tempdir().expect("temp dir");
    let path = |name: &str| dir.path().join(name);
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 1);
    let instances = corpus(&CorpusShape::default(), 3, &mut rng);
    let mut names = Vec::new();
    for (x, inst) in instances.iter().enumerate() {
        let name = format!("inst{x}.json");
        fs::write(path(&name), InstanceFile::from_rai(inst).pretty()).expect("write instance");
        names.push(path(&name).display().to_string());
    }
    fs::write(
        path("restricted.json"),
        InstanceFile::from_restricted(&rai_to_restricted(&instances[0])).pretty(),
    )
    .expect("write instance");
    fs::write(path("formula.txt"), SatStarFormula::minimal().to_text()).expect("write formula");
    let first = names[0].as_str();
    let restricted = path("restricted.json").display().to_string();
    let formula = path("formula.txt").display().to_string();
    let out = path("gadget.json").display().to_string();
    let witness = path("witness.json").display().to_string();

    let mut solve_all = vec!["solve", "--jobs", "3"];
    solve_all.extend(names.iter().map(String::as_str));
    run_twice(&mut v, "solve", &["solve", "--trace", first], &[]);
    run_twice(&mut v, "solve batch", &solve_all, &[]);
    run_twice(&mut v, "lff", &["lff", first], &[]);
    run_twice(&mut v, "opt", &["opt", &restricted], &[]);
    run_twice(&mut v, "opt minload", &["opt", first, "--objective", "minload"], &[]);
    for kind in GadgetKind::ALL {
        let args = ["gen", "--reduction", kind.name(), &formula, "--out", &out, "--witness", &witness];
        let names_file = path("gadget.json.names.json");
        run_twice(&mut v, kind.name(), &args, &[path("gadget.json").as_path(), names_file.as_path(), path("witness.json").as_path()]);
        let target = kind.target().to_string();
        run_twice(&mut v, "verify", &["verify", &out, &witness, "--exact", &target], &[]);
    }
    run_twice(&mut v, "lrs3-check", &["lrs3-check", &formula], &[]);
    v.note = "solve, lff, opt, gen, verify and lrs3-check".into();
    v
}

fn report(number: usize, name: &str, started: Instant, v: &Verdict) -> bool {
    let status = if v.failures.is_empty() { "PASS" } else { "FAIL" };
    println!(
        "criterion {number} {name}: {status} ({}; {:.1}s)",
        v.note,
        started.elapsed().as_secs_f64()
    );
    for f in v.failures.iter().take(10) {
        println!("    {f}");
    }
    v.failures.is_empty()
}

fn main() -> ExitCode {
    let mut passed = true;
    let started = Instant::now();
    let mut corpus_verdict = Verdict::new();
    let solved = solve_corpus(&mut corpus_verdict);

    let (mut guarantee, invariants) = approximation(&solved);
    guarantee.failures.extend(corpus_verdict.failures);
    passed &= report(1, "approximation guarantee", started, &guarantee);
    passed &= report(2, "rounding invariants", started, &invariants);
    let t = Instant::now();
    passed &= report(3, "lff guarantee", t, &lff_guarantee(&solved));
    let t = Instant::now();
    passed &= report(4, "relaxation soundness", t, &relaxation(&solved));
    let t = Instant::now();
    passed &= report(5, "mass identities", t, &mass_identities());
    let t = Instant::now();
    passed &= report(6, "constructive correspondence", t, &constructive());
    let t = Instant::now();
    passed &= report(7, "search correspondence", t, &search_direction());
    let t = Instant::now();
    passed &= report(8, "rank-three trichotomy", t, &trichotomy());
    let t = Instant::now();
    passed &= report(9, "determinism", t, &determinism());

    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
