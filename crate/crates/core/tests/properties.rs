//! Invariants checked on generated instances and formulas.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rasched::approx::{lemma_checks, solve};
use rasched::corpus::{random_rai, CorpusShape};
use rasched::exact::{exists_exact_t_schedule, optimal_makespan, ExactSearch, SearchBudget};
use rasched::lff::{lff_schedule, lower_bound};
use rasched::lp::{feasible_at, integer, rational, RoundingParams};
use rasched::reductions::formula::{all_satisfying, kappa, random_formula, sat_brute_force, SatStarFormula};
use rasched::reductions::{assignment_from_schedule, reduce, schedule_from_assignment, GadgetKind};
use rasched::{makespan, validate, Eligibility, RaiInstance, TargetMode};

fn instance(seed: u64) -> RaiInstance {
    random_rai(&CorpusShape::default(), &mut ChaCha8Rng::seed_from_u64(seed))
}

fn small_instance(seed: u64) -> RaiInstance {
    let shape = CorpusShape {
        machines: 2..=4,
        jobs: 1..=7,
        sizes: 1..=12,
    };
    random_rai(&shape, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rounding_respects_its_cap_and_the_optimum(seed in any::<u64>()) {
        let inst = small_instance(seed);
        let params = RoundingParams::default();
        let sol = solve(&inst, &params).unwrap();
        let opt = optimal_makespan(&inst, SearchBudget::default()).opt().unwrap();
        prop_assert!(sol.t_star <= opt);
        prop_assert!(integer(makespan(&inst, &sol.schedule)) <= params.load_cap(sol.t_star));
        prop_assert!(validate(&inst, &sol.schedule, None, TargetMode::AtMost).passed());
        for check in lemma_checks(&inst, &params, &sol.lp_cert, &sol.rounding) {
            prop_assert!(check.passed(), "{}: {:?}", check.name, check.violations);
        }
    }

    #[test]
    fn lp_feasibility_is_monotone_in_t(seed in any::<u64>()) {
        let inst = small_instance(seed);
        let params = RoundingParams::default();
        let total = inst.total_size();
        let mut seen = false;
        for t in inst.max_size()..=total {
            let feasible = feasible_at(&inst, t, &params).is_some();
            prop_assert!(!seen || feasible, "feasible below {t} but not at it");
            seen |= feasible;
        }
        prop_assert!(seen);
    }

    #[test]
    fn lff_stays_within_bound_plus_largest_job(seed in any::<u64>()) {
        let inst = instance(seed);
        let sched = lff_schedule(&inst).unwrap();
        let bound = lower_bound(&inst).value;
        let cap = &bound + integer(inst.max_size());
        prop_assert!(validate(&inst, &sched, None, TargetMode::AtMost).passed());
        for load in sched.loads(&inst) {
            prop_assert!(integer(load) <= cap);
        }
    }

    #[test]
    fn optimum_sits_between_bound_and_lff(seed in any::<u64>()) {
        let inst = small_instance(seed);
        let opt = optimal_makespan(&inst, SearchBudget::default()).opt().unwrap();
        prop_assert!(lower_bound(&inst).value <= integer(opt));
        let lff = makespan(&inst, &lff_schedule(&inst).unwrap());
        prop_assert!(opt <= lff && lff <= 2 * opt);
        prop_assert!(feasible_at(&inst, opt, &RoundingParams::default()).is_some());
    }

    #[test]
    fn formula_text_round_trips(seed in any::<u64>(), n in prop::sample::select(vec![3usize, 6, 9])) {
        let f = random_formula(n, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(SatStarFormula::parse(&f.to_text()).unwrap(), f.clone());
        let kap = kappa(&f);
        for j in 0..n {
            for t in 0..4 {
                let (i, s) = kap.get(j, t);
                prop_assert_eq!(kap.inverse(i, s), (j, t));
                let lit = f.clauses()[i].literals[s];
                prop_assert_eq!((lit.var, lit.positive), (j, t < 2));
            }
        }
    }

    #[test]
    fn gadget_masses_are_exact(seed in any::<u64>(), n in prop::sample::select(vec![3usize, 6])) {
        let f = random_formula(n, &mut ChaCha8Rng::seed_from_u64(seed));
        for kind in GadgetKind::ALL {
            let g = reduce(kind, &f);
            let r = g.restricted();
            prop_assert_eq!(r.total_size(), kind.target() * r.machine_count() as u64, "{}", kind);
        }
    }

    #[test]
    fn satisfying_assignments_round_trip(seed in any::<u64>()) {
        let f = random_formula(3, &mut ChaCha8Rng::seed_from_u64(seed));
        for kind in GadgetKind::ALL {
            let g = reduce(kind, &f);
            for a in all_satisfying(&f).unwrap() {
                let sched = schedule_from_assignment(&g, &f, &a).unwrap();
                prop_assert!(validate(g.restricted(), &sched, Some(g.target), TargetMode::Exact).passed());
                prop_assert_eq!(assignment_from_schedule(&g, &f, &sched).unwrap(), a);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exact_search_agrees_with_brute_force(seed in any::<u64>()) {
        let f = random_formula(3, &mut ChaCha8Rng::seed_from_u64(seed));
        let sat = sat_brute_force(&f).unwrap().is_some();
        for kind in [GadgetKind::Simple, GadgetKind::Rar3] {
            let g = reduce(kind, &f);
            match exists_exact_t_schedule(g.restricted(), g.target, SearchBudget::default()) {
                ExactSearch::Found(s) => {
                    prop_assert!(sat);
                    prop_assert!(assignment_from_schedule(&g, &f, &s).is_ok());
                }
                ExactSearch::Absent => prop_assert!(!sat),
                ExactSearch::Unknown => prop_assert!(false, "budget exhausted"),
            }
        }
    }
}

#[test]
fn parameter_inequalities_are_enforced() {
    assert!(RoundingParams::new(rational(1, 4), rational(1, 24)).is_err());
    assert!(RoundingParams::new(rational(1, 24), rational(1, 24)).is_ok());
}
