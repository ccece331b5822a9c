//! The basic gadget and its two resource-constrained variants.

use super::formula::{kappa, SatStarFormula};
use super::{GadgetInstance, GadgetKind, GadgetModel, JobKey, MachineKey, Placement, ReductionError, Truth};
use crate::model::{ResourceInstance, ResourceJob, RestrictedInstance};

/// Truth machines in `(j, q)` order followed by clause machines in `(i, s)` order.
fn basic_machines(formula: &SatStarFormula) -> Vec<MachineKey> {
    let n = formula.variable_count();
    let truth = (0..n).flat_map(|j| (0..2).map(move |q| MachineKey::Truth { j, q }));
    let clause = (0..formula.clauses().len()).flat_map(|i| (0..3).map(move |s| MachineKey::Clause { i, s }));
    truth.chain(clause).collect()
}

/// Clause job sizes of the basic gadget: 1, then 2 for a 1-in-3 clause or 1
/// otherwise, then 2.
fn basic_clause_size(kind: u8, s: usize) -> u64 {
    match s {
        0 => 1,
        1 if kind == 1 => 2,
        1 => 1,
        _ => 2,
    }
}

/// Jobs of the basic gadget with their sizes, in the order shared by both
/// the restricted and the three-resource variants.
fn basic_jobs(formula: &SatStarFormula) -> Vec<(JobKey, u64)> {
    let n = formula.variable_count();
    let mut jobs: Vec<(JobKey, u64)> = (0..n).map(|j| (JobKey::Truth { j }, 2)).collect();
    for j in 0..n {
        for t in 0..4 {
            jobs.push((JobKey::Var { j, t }, 1));
        }
    }
    for (i, c) in formula.clauses().iter().enumerate() {
        for s in 0..3 {
            jobs.push((JobKey::Clause { i, s }, basic_clause_size(c.kind, s)));
        }
    }
    jobs
}

pub fn reduce_simple(formula: &SatStarFormula) -> GadgetInstance {
    let kap = kappa(formula);
    let machines = basic_machines(formula);
    let index = |key: MachineKey| machines.iter().position(|&m| m == key).expect("machine exists");
    let jobs = basic_jobs(formula);
    let sets = jobs.iter().map(|&(key, size)| {
        let eligible = match key {
            JobKey::Truth { j } => vec![index(MachineKey::Truth { j, q: 0 }), index(MachineKey::Truth { j, q: 1 })],
            JobKey::Var { j, t } => {
                let (i, s) = kap.get(j, t);
                vec![index(MachineKey::Truth { j, q: t / 2 }), index(MachineKey::Clause { i, s })]
            }
            JobKey::Clause { i, .. } => (0..3).map(|s| index(MachineKey::Clause { i, s })).collect(),
            _ => unreachable!("basic gadget has no {key}"),
        };
        (size, eligible)
    });
    let inst = RestrictedInstance::from_sets(machines.len(), sets).expect("basic gadget is well formed");
    let keys = jobs.iter().map(|&(k, _)| k).collect();
    GadgetInstance::assemble(GadgetKind::Simple, GadgetModel::Restricted(inst), machines, keys)
}

pub fn reduce_rar3(formula: &SatStarFormula) -> GadgetInstance {
    let n = formula.variable_count() as u64;
    let kap = kappa(formula);
    let machines = basic_machines(formula);
    let capacities = machines
        .iter()
        .map(|&m| match m {
            MachineKey::Truth { j, q: 0 } => vec![4 * j as u64 + 1, 4 * n - 4 * j as u64, 1],
            MachineKey::Truth { j, .. } => vec![4 * j as u64 + 3, 4 * n - 4 * j as u64, 0],
            MachineKey::Clause { i, s } => {
                let (j, t) = kap.inverse(i, s);
                let slot = (4 * j + t) as u64;
                vec![slot, 4 * n - slot, 2 + i as u64]
            }
            _ => unreachable!(),
        })
        .collect();
    let jobs = basic_jobs(formula);
    let resource_jobs = jobs
        .iter()
        .enumerate()
        .map(|(id, &(key, size))| {
            let demand = match key {
                // A first-resource demand of 4j + 1 keeps the job off the
                // clause machine of slot (j, 0).
                JobKey::Truth { j } => vec![4 * j as u64 + 1, 4 * n - 4 * j as u64, 0],
                JobKey::Var { j, t } => {
                    let slot = (4 * j + t) as u64;
                    vec![slot, 4 * n - slot, 1 - (t / 2) as u64]
                }
                JobKey::Clause { i, .. } => vec![0, 0, 2 + i as u64],
                _ => unreachable!(),
            };
            ResourceJob { id, size, demand }
        })
        .collect();
    let inst = ResourceInstance::new(3, capacities, resource_jobs).expect("three-resource gadget is well formed");
    let keys = jobs.iter().map(|&(k, _)| k).collect();
    GadgetInstance::assemble(GadgetKind::Rar3, GadgetModel::Resource(inst), machines, keys)
}

pub fn reduce_rar2(formula: &SatStarFormula) -> GadgetInstance {
    let nv = formula.variable_count();
    let n = nv as u64;
    let kap = kappa(formula);
    let machines = basic_machines(formula);
    let capacities = machines
        .iter()
        .map(|&m| match m {
            MachineKey::Truth { j, q } => {
                let r = (2 * j + q) as u64;
                vec![r, 6 * n - r]
            }
            MachineKey::Clause { i, s } => {
                let (j, t) = kap.inverse(i, s);
                vec![2 * n + i as u64, (4 * j + t) as u64]
            }
            _ => unreachable!(),
        })
        .collect();
    let mut jobs: Vec<(JobKey, u64, Vec<u64>)> = Vec::new();
    for j in 0..nv {
        let r = 2 * j as u64;
        jobs.push((JobKey::TruthPart { j, l: 0 }, 1, vec![r, 6 * n - r]));
        jobs.push((JobKey::TruthPart { j, l: 1 }, 1, vec![r + 1, 6 * n - r - 1]));
        jobs.push((JobKey::TruthPart { j, l: 2 }, 2, vec![r, 6 * n - r - 1]));
    }
    for j in 0..nv {
        for t in 0..4 {
            for value in [true, false] {
                let demand = vec![(2 * j + t / 2) as u64, (4 * j + t) as u64];
                jobs.push((JobKey::VarValued { j, t, value }, 2 + u64::from(value), demand));
            }
        }
    }
    for (i, c) in formula.clauses().iter().enumerate() {
        let offsets = [0, u64::from(c.kind) - 1, 1];
        for (s, offset) in offsets.into_iter().enumerate() {
            jobs.push((JobKey::Clause { i, s }, 4 + offset, vec![2 * n + i as u64, 0]));
        }
    }
    let resource_jobs = jobs
        .iter()
        .enumerate()
        .map(|(id, (_, size, demand))| ResourceJob {
            id,
            size: *size,
            demand: demand.clone(),
        })
        .collect();
    let inst = ResourceInstance::new(2, capacities, resource_jobs).expect("two-resource gadget is well formed");
    let keys = jobs.iter().map(|(k, _, _)| *k).collect();
    GadgetInstance::assemble(GadgetKind::Rar2, GadgetModel::Resource(inst), machines, keys)
}

/// Truth job on `TMach(j, 0)` for a true variable; a variable job goes to its
/// clause machine exactly when its literal is true.
pub(crate) fn place_simple(truth: &Truth, n: usize, p: &mut Placement) -> Result<(), ReductionError> {
    for j in 0..n {
        let q = usize::from(!truth.assignment[j]);
        p.put(JobKey::Truth { j }, MachineKey::Truth { j, q })?;
        for t in 0..4 {
            let target = if truth.literal(j, t) {
                let (i, s) = truth.kappa.get(j, t);
                MachineKey::Clause { i, s }
            } else {
                MachineKey::Truth { j, q: t / 2 }
            };
            p.put(JobKey::Var { j, t }, target)?;
        }
    }
    Ok(())
}

/// The size-2 truth job joins `TMach(j, 1)` for a true variable; the variable
/// job whose value differs from its literal goes to the clause machine.
pub(crate) fn place_rar2(truth: &Truth, n: usize, p: &mut Placement) -> Result<(), ReductionError> {
    for j in 0..n {
        p.put(JobKey::TruthPart { j, l: 0 }, MachineKey::Truth { j, q: 0 })?;
        p.put(JobKey::TruthPart { j, l: 1 }, MachineKey::Truth { j, q: 1 })?;
        let q = usize::from(truth.assignment[j]);
        p.put(JobKey::TruthPart { j, l: 2 }, MachineKey::Truth { j, q })?;
        for t in 0..4 {
            let (i, s) = truth.kappa.get(j, t);
            for value in [true, false] {
                let target = if value != truth.literal(j, t) {
                    MachineKey::Clause { i, s }
                } else {
                    MachineKey::Truth { j, q: t / 2 }
                };
                p.put(JobKey::VarValued { j, t, value }, target)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Eligibility;
    use crate::reductions::formula::all_satisfying;
    use crate::reductions::{assignment_from_schedule, schedule_from_assignment};

    #[test]
    fn simple_sizes_and_counts() {
        let f = SatStarFormula::minimal();
        let g = reduce_simple(&f);
        let r = g.restricted();
        assert_eq!(r.machine_count(), 18);
        assert_eq!(r.total_size(), 36);
        let v = g.job(JobKey::Var { j: 0, t: 3 }).unwrap();
        assert_eq!(r.eligible(v).len(), 2);
        for (i, c) in f.clauses().iter().enumerate() {
            let cj = g.job(JobKey::Clause { i, s: 1 }).unwrap();
            assert_eq!(r.size(cj) == 2, c.kind == 1);
        }
    }

    #[test]
    fn rar3_matches_simple_eligibility() {
        let f = SatStarFormula::minimal();
        let simple = reduce_simple(&f);
        let rar3 = reduce_rar3(&f);
        assert_eq!(simple.machines, rar3.machines);
        assert_eq!(simple.jobs, rar3.jobs);
        for (x, key) in simple.jobs.iter().enumerate() {
            if matches!(key, JobKey::Truth { .. } | JobKey::Var { .. }) {
                assert_eq!(simple.restricted().eligible(x), rar3.restricted().eligible(x), "{key}");
            }
        }
        let GadgetModel::Resource(inst) = &rar3.model else { panic!() };
        let t1 = rar3.machine(MachineKey::Truth { j: 1, q: 1 }).unwrap();
        assert_eq!(inst.capacities()[t1], vec![7, 8, 0]);
        assert_eq!(rar3.restricted().total_size(), 2 * 18);
    }

    #[test]
    fn rar2_sizes_and_mass() {
        let f = SatStarFormula::minimal();
        let g = reduce_rar2(&f);
        let GadgetModel::Resource(inst) = &g.model else { panic!() };
        let n = 3;
        for j in 0..n {
            let x = g.job(JobKey::TruthPart { j, l: 2 }).unwrap();
            assert_eq!(inst.jobs()[x].size, 2);
            assert_eq!(inst.jobs()[x].demand, vec![2 * j as u64, 6 * n as u64 - (2 * j as u64 + 1)]);
            let top = g.job(JobKey::VarValued { j, t: 0, value: true }).unwrap();
            assert_eq!(inst.jobs()[top].size, 3);
        }
        assert_eq!(g.restricted().machine_count(), 18);
        assert_eq!(g.restricted().total_size(), 126);
    }

    #[test]
    fn round_trips_on_minimal_formula() {
        let f = SatStarFormula::minimal();
        for g in [reduce_simple(&f), reduce_rar3(&f), reduce_rar2(&f)] {
            for a in all_satisfying(&f).unwrap() {
                let sched = schedule_from_assignment(&g, &f, &a).unwrap();
                assert_eq!(assignment_from_schedule(&g, &f, &sched).unwrap(), a, "{}", g.kind);
            }
            assert_eq!(
                schedule_from_assignment(&g, &f, &[true, true, true]),
                Err(ReductionError::Unsatisfying)
            );
        }
    }
}
