//! Exact search oracles for small instances.
//!
//! All three searches branch in a fixed order so failures reproduce:
//! jobs by decreasing size then id, machines by index.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::model::{Eligibility, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub node_limit: u64,
    pub time_limit: Duration,
}

impl SearchBudget {
    pub fn new(node_limit: u64, time_limit: Duration) -> Self {
        assert!(node_limit > 0 && !time_limit.is_zero(), "budget must be positive");
        SearchBudget {
            node_limit,
            time_limit,
        }
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget::new(5_000_000, Duration::from_secs(30))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Optimum {
    Solved { opt: u64, schedule: Schedule },
    /// The budget ran out; `best` is the incumbent, which need not be optimal.
    Unknown { best: Option<(u64, Schedule)> },
}

impl Optimum {
    pub fn opt(&self) -> Option<u64> {
        match self {
            Optimum::Solved { opt, .. } => Some(*opt),
            Optimum::Unknown { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExactSearch {
    Found(Schedule),
    Absent,
    Unknown,
}

struct Meter {
    nodes: u64,
    budget: SearchBudget,
    start: Instant,
    exhausted: bool,
}

impl Meter {
    fn new(budget: SearchBudget) -> Self {
        Meter {
            nodes: 0,
            budget,
            start: Instant::now(),
            exhausted: false,
        }
    }

    /// Counts a node; returns false once the budget is gone.
    fn tick(&mut self) -> bool {
        if self.exhausted {
            return false;
        }
        self.nodes += 1;
        if self.nodes > self.budget.node_limit
            || (self.nodes.is_multiple_of(1024) && self.start.elapsed() > self.budget.time_limit)
        {
            self.exhausted = true;
        }
        !self.exhausted
    }
}

fn eligible_lists(inst: &impl Eligibility) -> Vec<Vec<usize>> {
    (0..inst.job_count())
        .map(|j| {
            (0..inst.machine_count())
                .filter(|&i| inst.is_eligible(j, i))
                .collect()
        })
        .collect()
}

fn by_decreasing_size(inst: &impl Eligibility) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.job_count()).collect();
    order.sort_by_key(|&j| (std::cmp::Reverse(inst.size(j)), j));
    order
}

fn greedy(inst: &impl Eligibility, order: &[usize], elig: &[Vec<usize>]) -> Vec<usize> {
    let mut loads = vec![0u64; inst.machine_count()];
    let mut assignment = vec![0; inst.job_count()];
    for &j in order {
        let &i = elig[j]
            .iter()
            .min_by_key(|&&i| (loads[i], i))
            .expect("every job is eligible somewhere");
        assignment[j] = i;
        loads[i] += inst.size(j);
    }
    assignment
}

struct MakespanSearch<'a, I: Eligibility> {
    inst: &'a I,
    order: Vec<usize>,
    elig: Vec<Vec<usize>>,
    /// Total size of `order[k..]`.
    suffix: Vec<u64>,
    loads: Vec<u64>,
    current: Vec<usize>,
    best: u64,
    best_assignment: Vec<usize>,
    meter: Meter,
}

impl<I: Eligibility> MakespanSearch<'_, I> {
    fn bound(&self, k: usize) -> u64 {
        let m = self.loads.len() as u64;
        let placed: u64 = self.loads.iter().sum();
        let peak = self.loads.iter().copied().max().unwrap_or(0);
        peak.max((placed + self.suffix[k]).div_ceil(m))
    }

    fn descend(&mut self, k: usize) {
        if !self.meter.tick() {
            return;
        }
        if k == self.order.len() {
            let peak = self.loads.iter().copied().max().unwrap_or(0);
            if peak < self.best {
                self.best = peak;
                self.best_assignment = self.current.clone();
            }
            return;
        }
        if self.bound(k) >= self.best {
            return;
        }
        let j = self.order[k];
        let p = self.inst.size(j);
        for idx in 0..self.elig[j].len() {
            let i = self.elig[j][idx];
            if self.loads[i] + p >= self.best {
                continue;
            }
            self.loads[i] += p;
            self.current[j] = i;
            self.descend(k + 1);
            self.loads[i] -= p;
            if self.meter.exhausted {
                return;
            }
        }
    }
}

/// Minimum makespan by branch-and-bound.
pub fn optimal_makespan(inst: &impl Eligibility, budget: SearchBudget) -> Optimum {
    let m = inst.machine_count();
    let n = inst.job_count();
    let elig = eligible_lists(inst);
    assert!(elig.iter().all(|e| !e.is_empty()), "every job must be eligible somewhere");
    if n == 0 {
        return Optimum::Solved {
            opt: 0,
            schedule: Schedule::new(Vec::new()),
        };
    }
    let order = by_decreasing_size(inst);
    let start = greedy(inst, &order, &elig);
    let start_peak = Schedule::new(start.clone()).loads(inst).into_iter().max().unwrap_or(0);
    let mut suffix = vec![0u64; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + inst.size(order[k]);
    }
    let mut search = MakespanSearch {
        inst,
        order,
        elig,
        suffix,
        loads: vec![0; m],
        current: vec![0; n],
        best: start_peak,
        best_assignment: start,
        meter: Meter::new(budget),
    };
    search.descend(0);
    let schedule = Schedule::new(search.best_assignment);
    if search.meter.exhausted {
        Optimum::Unknown {
            best: Some((search.best, schedule)),
        }
    } else {
        Optimum::Solved {
            opt: search.best,
            schedule,
        }
    }
}

struct MinLoadSearch<'a, I: Eligibility> {
    inst: &'a I,
    order: Vec<usize>,
    elig: Vec<Vec<usize>>,
    suffix: Vec<u64>,
    /// `reach[k][i]`: total size of `order[k..]` eligible on machine `i`.
    reach: Vec<Vec<u64>>,
    loads: Vec<u64>,
    current: Vec<usize>,
    best: u64,
    best_assignment: Vec<usize>,
    meter: Meter,
}

impl<I: Eligibility> MinLoadSearch<'_, I> {
    fn bound(&self, k: usize) -> u64 {
        let m = self.loads.len() as u64;
        let placed: u64 = self.loads.iter().sum();
        let even = (placed + self.suffix[k]) / m;
        let each = self
            .loads
            .iter()
            .zip(&self.reach[k])
            .map(|(l, r)| l + r)
            .min()
            .unwrap_or(0);
        even.min(each)
    }

    fn descend(&mut self, k: usize) {
        if !self.meter.tick() {
            return;
        }
        if k == self.order.len() {
            let low = self.loads.iter().copied().min().unwrap_or(0);
            if low > self.best {
                self.best = low;
                self.best_assignment = self.current.clone();
            }
            return;
        }
        if self.bound(k) <= self.best {
            return;
        }
        let j = self.order[k];
        let p = self.inst.size(j);
        for idx in 0..self.elig[j].len() {
            let i = self.elig[j][idx];
            self.loads[i] += p;
            self.current[j] = i;
            self.descend(k + 1);
            self.loads[i] -= p;
            if self.meter.exhausted {
                return;
            }
        }
    }
}

/// Maximum over schedules of the minimum machine load.
pub fn optimal_min_load(inst: &impl Eligibility, budget: SearchBudget) -> Optimum {
    let m = inst.machine_count();
    let n = inst.job_count();
    let elig = eligible_lists(inst);
    assert!(elig.iter().all(|e| !e.is_empty()), "every job must be eligible somewhere");
    let order = by_decreasing_size(inst);
    let start = greedy(inst, &order, &elig);
    let start_low = Schedule::new(start.clone()).loads(inst).into_iter().min().unwrap_or(0);
    let mut suffix = vec![0u64; n + 1];
    let mut reach = vec![vec![0u64; m]; n + 1];
    for k in (0..n).rev() {
        let j = order[k];
        suffix[k] = suffix[k + 1] + inst.size(j);
        reach[k] = reach[k + 1].clone();
        for &i in &elig[j] {
            reach[k][i] += inst.size(j);
        }
    }
    let mut search = MinLoadSearch {
        inst,
        order,
        elig,
        suffix,
        reach,
        loads: vec![0; m],
        current: vec![0; n],
        best: start_low,
        best_assignment: start,
        meter: Meter::new(budget),
    };
    search.descend(0);
    let schedule = Schedule::new(search.best_assignment);
    if search.meter.exhausted {
        Optimum::Unknown {
            best: Some((search.best, schedule)),
        }
    } else {
        Optimum::Solved {
            opt: search.best,
            schedule,
        }
    }
}

/// Jobs with the same size and eligible set are interchangeable; the search
/// hands out each class's jobs to machines in nondecreasing machine order.
struct JobClass {
    size: u64,
    machines: Vec<usize>,
    jobs: Vec<usize>,
    next: usize,
    /// Lowest machine index the next job of this class may take.
    floor: usize,
}

struct ExactTSearch {
    target: u64,
    classes: Vec<JobClass>,
    loads: Vec<u64>,
    assignment: Vec<usize>,
    meter: Meter,
}

impl ExactTSearch {
    fn options(&self, c: usize) -> Vec<usize> {
        let class = &self.classes[c];
        class
            .machines
            .iter()
            .copied()
            .filter(|&i| i >= class.floor && self.loads[i] + class.size <= self.target)
            .collect()
    }

    /// Every machine must still be able to reach the target with what is left.
    fn can_fill(&self) -> bool {
        let m = self.loads.len();
        let mut supply = vec![0u64; m];
        for class in &self.classes {
            let left = (class.jobs.len() - class.next) as u64;
            if left == 0 {
                continue;
            }
            for &i in &class.machines {
                if class.size <= self.target - self.loads[i] {
                    supply[i] += class.size * left;
                }
            }
        }
        (0..m).all(|i| supply[i] >= self.target - self.loads[i])
    }

    fn descend(&mut self) -> bool {
        if !self.meter.tick() {
            return false;
        }
        // Most constrained class first; a class with one option is forced.
        let mut pick: Option<(usize, Vec<usize>)> = None;
        for c in 0..self.classes.len() {
            if self.classes[c].next == self.classes[c].jobs.len() {
                continue;
            }
            let opts = self.options(c);
            if opts.is_empty() {
                return false;
            }
            let better = match &pick {
                None => true,
                Some((_, best)) => opts.len() < best.len(),
            };
            if better {
                let forced = opts.len() == 1;
                pick = Some((c, opts));
                if forced {
                    break;
                }
            }
        }
        let Some((c, opts)) = pick else {
            return self.loads.iter().all(|&l| l == self.target);
        };
        if !self.can_fill() {
            return false;
        }
        let size = self.classes[c].size;
        let job = self.classes[c].jobs[self.classes[c].next];
        let old_floor = self.classes[c].floor;
        self.classes[c].next += 1;
        for i in opts {
            self.classes[c].floor = i;
            self.loads[i] += size;
            self.assignment[job] = i;
            if self.descend() {
                return true;
            }
            self.loads[i] -= size;
            if self.meter.exhausted {
                break;
            }
        }
        self.classes[c].floor = old_floor;
        self.classes[c].next -= 1;
        false
    }
}

/// Looks for a schedule giving every machine load exactly `target`.
pub fn exists_exact_t_schedule(inst: &impl Eligibility, target: u64, budget: SearchBudget) -> ExactSearch {
    let m = inst.machine_count() as u64;
    if m.checked_mul(target) != Some(inst.total_size()) {
        return ExactSearch::Absent;
    }
    let elig = eligible_lists(inst);
    let mut grouped: BTreeMap<(std::cmp::Reverse<u64>, Vec<usize>), Vec<usize>> = BTreeMap::new();
    for (j, set) in elig.iter().enumerate() {
        grouped
            .entry((std::cmp::Reverse(inst.size(j)), set.clone()))
            .or_default()
            .push(j);
    }
    let classes = grouped
        .into_iter()
        .map(|((size, machines), jobs)| JobClass {
            size: size.0,
            machines,
            jobs,
            next: 0,
            floor: 0,
        })
        .collect();
    let mut search = ExactTSearch {
        target,
        classes,
        loads: vec![0; inst.machine_count()],
        assignment: vec![0; inst.job_count()],
        meter: Meter::new(budget),
    };
    if search.descend() {
        ExactSearch::Found(Schedule::new(search.assignment))
    } else if search.meter.exhausted {
        ExactSearch::Unknown
    } else {
        ExactSearch::Absent
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, RestrictedInstance, TargetMode};

    fn everywhere(m: usize, sizes: &[u64]) -> RestrictedInstance {
        RestrictedInstance::from_sets(m, sizes.iter().map(|&p| (p, (0..m).collect::<Vec<_>>()))).unwrap()
    }

    #[test]
    fn makespan_examples() {
        let b = SearchBudget::default();
        assert_eq!(optimal_makespan(&everywhere(2, &[2, 2, 2]), b).opt(), Some(4));
        assert_eq!(optimal_makespan(&everywhere(1, &[3, 5, 1]), b).opt(), Some(9));
        let forced = RestrictedInstance::from_sets(3, [(4, vec![0]), (3, vec![1]), (2, vec![1]), (1, vec![2])]).unwrap();
        assert_eq!(optimal_makespan(&forced, b).opt(), Some(5));
        assert_eq!(optimal_makespan(&everywhere(3, &[3, 3, 2, 2, 2]), b).opt(), Some(5));
        assert_eq!(optimal_makespan(&everywhere(2, &[3, 3, 2, 2, 2]), b).opt(), Some(6));
    }

    #[test]
    fn min_load_examples() {
        let b = SearchBudget::default();
        assert_eq!(optimal_min_load(&everywhere(2, &[2, 2, 2]), b).opt(), Some(2));
        let idle = RestrictedInstance::from_sets(2, [(5, vec![0])]).unwrap();
        assert_eq!(optimal_min_load(&idle, b).opt(), Some(0));
        assert_eq!(optimal_min_load(&everywhere(2, &[3, 3, 2, 2, 2]), b).opt(), Some(6));
    }

    #[test]
    fn exact_t_examples() {
        let b = SearchBudget::default();
        let one = everywhere(1, &[3, 4]);
        let ExactSearch::Found(s) = exists_exact_t_schedule(&one, 7, b) else {
            panic!("expected a schedule");
        };
        assert!(validate(&one, &s, Some(7), TargetMode::Exact).passed());
        assert_eq!(exists_exact_t_schedule(&one, 6, b), ExactSearch::Absent);
        let two = everywhere(2, &[3, 3, 2, 2]);
        let ExactSearch::Found(s) = exists_exact_t_schedule(&two, 5, b) else {
            panic!("expected a schedule");
        };
        assert!(validate(&two, &s, Some(5), TargetMode::Exact).passed());
        assert_eq!(exists_exact_t_schedule(&everywhere(2, &[4, 1, 1]), 3, b), ExactSearch::Absent);
    }

    #[test]
    fn tiny_budget_reports_unknown() {
        let b = SearchBudget::new(1, Duration::from_secs(1));
        let inst = everywhere(2, &[3, 3, 2, 2, 2]);
        assert!(matches!(optimal_makespan(&inst, b), Optimum::Unknown { .. }));
        assert_eq!(exists_exact_t_schedule(&everywhere(2, &[3, 3, 2, 2]), 5, b), ExactSearch::Unknown);
    }
}
