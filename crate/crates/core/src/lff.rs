//! Least-flexible-first: sweep the machines left to right and always take the job
//! whose interval ends first.

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::lp::{integer, Rational};
use crate::model::{Eligibility, RaiInstance, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LffWitness {
    Job { id: usize },
    Interval { first: usize, last: usize },
}

/// The lower bound `max(max size, max interval average)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LffBound {
    pub value: Rational,
    pub witness: Option<LffWitness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LffFault {
    #[error("job {0} was left unplaced by the sweep")]
    Unplaced(usize),
}

pub fn lower_bound(inst: &RaiInstance) -> LffBound {
    let mut best = LffBound {
        value: Rational::zero(),
        witness: None,
    };
    for job in inst.jobs() {
        let p = integer(job.size);
        if p > best.value {
            best = LffBound {
                value: p,
                witness: Some(LffWitness::Job { id: job.id }),
            };
        }
    }
    let m = inst.machine_count();
    let mut ending: Vec<Vec<(usize, u64)>> = vec![Vec::new(); m];
    for job in inst.jobs() {
        ending[job.last].push((job.first, job.size));
    }
    for l in 0..m {
        let mut load = 0u64;
        for (r, jobs) in ending.iter().enumerate().skip(l) {
            load += jobs
                .iter()
                .filter(|(first, _)| *first >= l)
                .map(|(_, p)| p)
                .sum::<u64>();
            let avg = Rational::new(load.into(), ((r - l + 1) as u64).into());
            if avg > best.value {
                best = LffBound {
                    value: avg,
                    witness: Some(LffWitness::Interval { first: l, last: r }),
                };
            }
        }
    }
    best
}

/// Jobs sorted least flexible first: by right end, then id.
pub(crate) fn flexibility_order(inst: &RaiInstance, jobs: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut order: Vec<usize> = jobs.collect();
    order.sort_by_key(|&j| (inst.job(j).last, j));
    order
}

pub fn lff_schedule(inst: &RaiInstance) -> Result<Schedule, LffFault> {
    let bound = lower_bound(inst).value;
    let order = flexibility_order(inst, 0..inst.job_count());
    let mut assignment = vec![usize::MAX; inst.job_count()];
    for machine in 0..inst.machine_count() {
        let mut load = 0u64;
        for &j in &order {
            if integer(load) > bound {
                break;
            }
            let job = inst.job(j);
            if assignment[j] == usize::MAX && job.first <= machine && machine <= job.last {
                assignment[j] = machine;
                load += job.size;
            }
        }
    }
    if let Some(j) = assignment.iter().position(|&i| i == usize::MAX) {
        return Err(LffFault::Unplaced(j));
    }
    Ok(Schedule::new(assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::rational;
    use crate::model::makespan;

    #[test]
    fn bound_ties_keep_the_job_witness() {
        let inst = RaiInstance::from_intervals(2, [(2, 0, 0), (2, 0, 1)]).unwrap();
        let b = lower_bound(&inst);
        assert_eq!(b.value, integer(2));
        assert_eq!(b.witness, Some(LffWitness::Job { id: 0 }));
    }

    #[test]
    fn bound_examples() {
        let inst = RaiInstance::from_intervals(5, [(9, 2, 2)]).unwrap();
        assert_eq!(lower_bound(&inst).value, integer(9));
        let inst = RaiInstance::from_intervals(1, [(1, 0, 0), (1, 0, 0), (1, 0, 0)]).unwrap();
        let b = lower_bound(&inst);
        assert_eq!(b.value, integer(3));
        assert_eq!(b.witness, Some(LffWitness::Interval { first: 0, last: 0 }));
        let inst = RaiInstance::from_intervals(2, [(3, 0, 1), (2, 0, 1)]).unwrap();
        assert_eq!(lower_bound(&inst).value, integer(3));
        let inst = RaiInstance::from_intervals(2, [(3, 0, 1), (2, 0, 1), (2, 0, 1)]).unwrap();
        assert_eq!(lower_bound(&inst).value, rational(7, 2));
        let empty = RaiInstance::from_intervals(2, []).unwrap();
        assert_eq!(lower_bound(&empty).witness, None);
    }

    #[test]
    fn hand_trace_of_the_sweep() {
        let inst = RaiInstance::from_intervals(2, [(2, 0, 0), (2, 0, 1)]).unwrap();
        let s = lff_schedule(&inst).unwrap();
        assert_eq!(s.assignment(), &[0, 0]);
        assert_eq!(makespan(&inst, &s), 4);
    }

    #[test]
    fn forced_and_single_machine() {
        let inst = RaiInstance::from_intervals(3, [(5, 2, 2), (1, 0, 0), (4, 1, 1)]).unwrap();
        assert_eq!(lff_schedule(&inst).unwrap().assignment(), &[2, 0, 1]);
        let inst = RaiInstance::from_intervals(1, [(5, 0, 0), (1, 0, 0)]).unwrap();
        assert_eq!(lff_schedule(&inst).unwrap().assignment(), &[0, 0]);
    }
}
