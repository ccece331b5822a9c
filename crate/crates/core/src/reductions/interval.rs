//! The interval gadget: truth, gateway, sorting and clause machines on a line.

use std::collections::HashMap;

use super::bubble::BubbleTrace;
use super::formula::{kappa, SatStarFormula};
use super::{GadgetInstance, GadgetKind, GadgetModel, JobKey, MachineKey, Placement, ReductionError, Truth};
use crate::model::RaiInstance;

fn machine_order(n: usize, clauses: usize, trace: &BubbleTrace) -> Vec<MachineKey> {
    let k = trace.k();
    let mut machines: Vec<MachineKey> = (0..n)
        .flat_map(|j| (0..2).map(move |q| MachineKey::Truth { j, q }))
        .collect();
    let start = &trace.orders[0];
    machines.extend(start.iter().rev().map(|&(j, t)| MachineKey::BackwardGate { j, t }));
    machines.extend(start.iter().map(|&(j, t)| MachineKey::ForwardGate { j, t }));
    for l in 0..k {
        machines.extend(trace.orders[l].iter().rev().map(|&(j, t)| MachineKey::BackwardSort { l, j, t }));
        machines.extend(trace.orders[l + 1].iter().map(|&(j, t)| MachineKey::ForwardSort { l, j, t }));
    }
    machines.extend(
        (0..clauses)
            .rev()
            .flat_map(|i| (0..3).rev().map(move |s| MachineKey::Clause { i, s })),
    );
    machines
}

pub fn reduce_rai(formula: &SatStarFormula) -> GadgetInstance {
    let n = formula.variable_count();
    let kap = kappa(formula);
    let trace = BubbleTrace::new(n, &kap);
    let k = trace.k();
    let machines = machine_order(n, formula.clauses().len(), &trace);
    let position: HashMap<MachineKey, usize> = machines.iter().enumerate().map(|(x, &m)| (m, x)).collect();
    let index = |key: MachineKey| position[&key];
    let mut jobs: Vec<(JobKey, u64, MachineKey, MachineKey)> = Vec::new();
    for j in 0..n {
        let (first, last) = (MachineKey::Truth { j, q: 0 }, MachineKey::Truth { j, q: 1 });
        jobs.push((JobKey::Truth { j }, 2, first, last));
    }
    for j in 0..n {
        for t in 0..4 {
            for value in [true, false] {
                let size = if value { 3 } else { 2 };
                let span = (MachineKey::Truth { j, q: t / 2 }, MachineKey::BackwardGate { j, t });
                jobs.push((JobKey::VarValued { j, t, value }, size, span.0, span.1));
            }
        }
    }
    for j in 0..n {
        for t in 0..4 {
            for value in [true, false] {
                let size = if value { 4 } else { 5 };
                let span = (MachineKey::BackwardGate { j, t }, MachineKey::ForwardGate { j, t });
                jobs.push((JobKey::Gate { j, t, value }, size, span.0, span.1));
            }
        }
    }
    for l in 0..=k {
        for j in 0..n {
            for t in 0..4 {
                let first = if l == 0 {
                    MachineKey::ForwardGate { j, t }
                } else {
                    MachineKey::ForwardSort { l: l - 1, j, t }
                };
                let last = if l < k {
                    MachineKey::BackwardSort { l, j, t }
                } else {
                    let (i, s) = kap.get(j, t);
                    MachineKey::Clause { i, s }
                };
                for value in [true, false] {
                    let size = if value { 2 } else { 1 };
                    jobs.push((JobKey::Bridge { l, j, t, value }, size, first, last));
                }
            }
        }
    }
    for l in 0..k {
        let rising = trace.rising(l);
        for j in 0..n {
            for t in 0..4 {
                let span = (MachineKey::BackwardSort { l, j, t }, MachineKey::ForwardSort { l, j, t });
                for value in [true, false] {
                    let size = match ((j, t) == rising, value) {
                        (true, true) => 3,
                        (true, false) => 4,
                        (false, true) => 6,
                        (false, false) => 7,
                    };
                    jobs.push((JobKey::SortValued { l, j, t, value }, size, span.0, span.1));
                }
            }
        }
    }
    for (i, c) in formula.clauses().iter().enumerate() {
        let sizes = [7, 8 - u64::from(c.kind), 6];
        for (s, size) in sizes.into_iter().enumerate() {
            let span = (MachineKey::Clause { i, s: 2 }, MachineKey::Clause { i, s: 0 });
            jobs.push((JobKey::Clause { i, s }, size, span.0, span.1));
        }
    }
    let mut private = |machine: MachineKey, size: u64| {
        jobs.push((JobKey::Private { machine }, size, machine, machine));
    };
    for j in 0..n {
        for q in 0..2 {
            private(MachineKey::Truth { j, q }, 2);
        }
    }
    for j in 0..n {
        for t in 0..4 {
            private(MachineKey::BackwardGate { j, t }, 1);
            private(MachineKey::ForwardGate { j, t }, 2);
        }
    }
    for l in 0..k {
        let (j, t) = trace.rising(l);
        private(MachineKey::BackwardSort { l, j, t }, 3);
        private(MachineKey::ForwardSort { l, j, t }, 3);
    }
    let inst = RaiInstance::from_intervals(
        machines.len(),
        jobs.iter().map(|&(_, size, first, last)| (size, index(first), index(last))),
    )
    .expect("interval gadget is well formed");
    let keys = jobs.iter().map(|&(key, ..)| key).collect();
    GadgetInstance::assemble(GadgetKind::Rai, GadgetModel::Interval(inst), machines, keys)
}

/// Every job pair carrying the value of occurrence `(j, t)` splits across its
/// two end machines. Variable and bridge jobs whose value equals the literal
/// sit on their last machine, gateway and sorting jobs on their first.
pub(crate) fn place_rai(truth: &Truth, trace: &BubbleTrace, n: usize, p: &mut Placement) -> Result<(), ReductionError> {
    let k = trace.k();
    for j in 0..n {
        let q = usize::from(!truth.assignment[j]);
        p.put(JobKey::Truth { j }, MachineKey::Truth { j, q })?;
        for t in 0..4 {
            let out = truth.literal(j, t);
            for value in [true, false] {
                let agrees = value == out;
                let var = if agrees {
                    MachineKey::BackwardGate { j, t }
                } else {
                    MachineKey::Truth { j, q: t / 2 }
                };
                p.put(JobKey::VarValued { j, t, value }, var)?;
                let gate = if agrees {
                    MachineKey::BackwardGate { j, t }
                } else {
                    MachineKey::ForwardGate { j, t }
                };
                p.put(JobKey::Gate { j, t, value }, gate)?;
                for l in 0..=k {
                    let bridge = match (agrees, l) {
                        (false, 0) => MachineKey::ForwardGate { j, t },
                        (false, _) => MachineKey::ForwardSort { l: l - 1, j, t },
                        (true, l) if l < k => MachineKey::BackwardSort { l, j, t },
                        (true, _) => {
                            let (i, s) = truth.kappa.get(j, t);
                            MachineKey::Clause { i, s }
                        }
                    };
                    p.put(JobKey::Bridge { l, j, t, value }, bridge)?;
                }
                for l in 0..k {
                    let sort = if agrees {
                        MachineKey::BackwardSort { l, j, t }
                    } else {
                        MachineKey::ForwardSort { l, j, t }
                    };
                    p.put(JobKey::SortValued { l, j, t, value }, sort)?;
                }
            }
        }
    }
    Ok(())
}
