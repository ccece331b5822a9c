//! Rounding an LP solution in four phases (huge, regions, large, small) and the
//! binary search over the candidate makespan.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::lff::{flexibility_order, lower_bound};
use crate::lp::{self, classes, integer, FractionalAssignment, Rational, RoundingParams, SizeClass};
use crate::model::{validate, Eligibility, RaiInstance, Schedule, TargetMode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoundingFault {
    #[error("huge jobs left unplaced: {0:?}")]
    HugeUnplaced(Vec<usize>),
    #[error("region [{0}, {1}] contains no candidate machine")]
    RegionWithoutCandidate(usize, usize),
    #[error("large jobs left unplaced: {0:?}")]
    LargeUnplaced(Vec<usize>),
    #[error("small job {0} could not be placed under the load cap")]
    SmallUnplaced(usize),
    #[error("the LP is infeasible at the upper bound {0}")]
    UpperBoundInfeasible(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HugePlacement {
    pub placed: BTreeMap<usize, usize>,
    /// Machines where the running huge mass reaches a new integer.
    pub trigger_machines: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Regions {
    /// Machines where the running large mass reaches a new integer.
    pub borders: Vec<usize>,
    /// Left-most machine with positive large mass.
    pub anchor: Option<usize>,
    /// Disjoint inclusive machine ranges, left to right.
    pub regions: Vec<(usize, usize)>,
    pub candidates: BTreeSet<usize>,
}

impl Regions {
    /// The original outer borders of region `s` before overlaps were resolved.
    pub fn outer(&self, s: usize) -> (usize, usize) {
        let left = if s == 0 {
            self.anchor.expect("regions exist only with an anchor")
        } else {
            self.borders[s - 1]
        };
        (left, self.borders[s])
    }

    pub fn region_of(&self, machine: usize) -> Option<usize> {
        self.regions
            .iter()
            .position(|&(l, r)| l <= machine && machine <= r)
    }
}

fn running_floors(mass: &[Rational]) -> Vec<(Rational, bool)> {
    let mut cum = Rational::zero();
    let mut prev_floor = Rational::zero();
    mass.iter()
        .map(|v| {
            cum += v;
            let floor = cum.floor();
            let hit = floor > prev_floor;
            prev_floor = floor;
            (cum.clone(), hit)
        })
        .collect()
}

pub fn place_huge(
    inst: &RaiInstance,
    t: u64,
    xi: &Rational,
    x: &FractionalAssignment,
) -> Result<HugePlacement, RoundingFault> {
    let class = classes(inst, t, xi);
    let mass = x.class_mass(&class, &[SizeClass::Huge]);
    let huge: Vec<usize> = (0..inst.job_count())
        .filter(|&j| class[j] == SizeClass::Huge)
        .collect();
    let order = flexibility_order(inst, huge.iter().copied());
    let mut out = HugePlacement::default();
    for (machine, (_, hit)) in running_floors(&mass).into_iter().enumerate() {
        if !hit {
            continue;
        }
        out.trigger_machines.push(machine);
        let pick = order.iter().copied().find(|j| {
            !out.placed.contains_key(j) && inst.is_eligible(*j, machine)
        });
        if let Some(j) = pick {
            out.placed.insert(j, machine);
        }
    }
    let missing: Vec<usize> = huge
        .into_iter()
        .filter(|j| !out.placed.contains_key(j))
        .collect();
    if !missing.is_empty() {
        return Err(RoundingFault::HugeUnplaced(missing));
    }
    Ok(out)
}

pub fn map_regions(
    inst: &RaiInstance,
    t: u64,
    xi: &Rational,
    x: &FractionalAssignment,
    hp: &HugePlacement,
) -> Result<Regions, RoundingFault> {
    let class = classes(inst, t, xi);
    let large = x.class_mass(&class, &[SizeClass::Large]);
    let big = x.class_mass(&class, &[SizeClass::Large, SizeClass::Huge]);
    let with_huge: BTreeSet<usize> = hp.placed.values().copied().collect();
    let candidates: BTreeSet<usize> = (0..inst.machine_count())
        .filter(|i| big[*i].is_positive() && !with_huge.contains(i))
        .collect();
    let borders: Vec<usize> = running_floors(&large)
        .into_iter()
        .enumerate()
        .filter(|(_, (_, hit))| *hit)
        .map(|(i, _)| i)
        .collect();
    let anchor = large.iter().position(|v| v.is_positive());
    let mut out = Regions {
        borders,
        anchor,
        regions: Vec::new(),
        candidates,
    };
    let q = out.borders.len();
    if q == 0 {
        return Ok(out);
    }
    out.regions = (0..q).map(|s| out.outer(s)).collect();
    for s in 0..q.saturating_sub(1) {
        let (left, shared) = out.regions[s];
        let has_candidate = out.candidates.range(left..shared).next().is_some();
        if has_candidate {
            out.regions[s].1 = shared - 1;
        } else {
            out.regions[s + 1].0 = shared + 1;
        }
    }
    for &(l, r) in &out.regions {
        if out.candidates.range(l..=r).next().is_none() {
            return Err(RoundingFault::RegionWithoutCandidate(l, r));
        }
    }
    Ok(out)
}

pub fn place_large(
    inst: &RaiInstance,
    t: u64,
    xi: &Rational,
    regions: &Regions,
    hp: &HugePlacement,
) -> Result<BTreeMap<usize, usize>, RoundingFault> {
    let class = classes(inst, t, xi);
    let large: Vec<usize> = (0..inst.job_count())
        .filter(|&j| class[j] == SizeClass::Large)
        .collect();
    let order = flexibility_order(inst, large.iter().copied());
    let mut used: BTreeSet<usize> = hp.placed.values().copied().collect();
    let mut placed = BTreeMap::new();
    for &(l, r) in &regions.regions {
        for _ in 0..2 {
            let free: Vec<usize> = regions
                .candidates
                .range(l..=r)
                .copied()
                .filter(|i| !used.contains(i))
                .collect();
            let pick = order.iter().copied().find_map(|j| {
                if placed.contains_key(&j) {
                    return None;
                }
                free.iter()
                    .copied()
                    .find(|&i| inst.is_eligible(j, i))
                    .map(|i| (j, i))
            });
            match pick {
                Some((j, i)) => {
                    placed.insert(j, i);
                    used.insert(i);
                }
                None => break,
            }
        }
    }
    let missing: Vec<usize> = large
        .into_iter()
        .filter(|j| !placed.contains_key(j))
        .collect();
    if !missing.is_empty() {
        return Err(RoundingFault::LargeUnplaced(missing));
    }
    Ok(placed)
}

#[allow(clippy::needless_range_loop)]
pub fn place_small(
    inst: &RaiInstance,
    t: u64,
    params: &RoundingParams,
    partial: &BTreeMap<usize, usize>,
) -> Result<Schedule, RoundingFault> {
    let cap = params.load_cap(t);
    let mut assignment = vec![usize::MAX; inst.job_count()];
    let mut loads = vec![0u64; inst.machine_count()];
    for (&j, &i) in partial {
        assignment[j] = i;
        loads[i] += inst.size(j);
    }
    let order = flexibility_order(inst, (0..inst.job_count()).filter(|j| !partial.contains_key(j)));
    for machine in 0..inst.machine_count() {
        for &j in &order {
            if assignment[j] != usize::MAX || !inst.is_eligible(j, machine) {
                continue;
            }
            if integer(loads[machine] + inst.size(j)) > cap {
                break;
            }
            assignment[j] = machine;
            loads[machine] += inst.size(j);
        }
    }
    if let Some(j) = assignment.iter().position(|&i| i == usize::MAX) {
        return Err(RoundingFault::SmallUnplaced(j));
    }
    Ok(Schedule::new(assignment))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub phase: &'static str,
    pub machine: usize,
    pub job: Option<usize>,
    /// Running fractional mass at this machine, where the phase uses one.
    pub cumulative: Option<String>,
    pub floor: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rounding {
    pub t: u64,
    pub huge: HugePlacement,
    pub regions: Regions,
    pub large: BTreeMap<usize, usize>,
    pub schedule: Schedule,
}

pub fn round(
    inst: &RaiInstance,
    t: u64,
    params: &RoundingParams,
    x: &FractionalAssignment,
) -> Result<Rounding, RoundingFault> {
    let huge = place_huge(inst, t, params.xi(), x)?;
    let has_large = classes(inst, t, params.xi()).contains(&SizeClass::Large);
    let regions = if has_large {
        map_regions(inst, t, params.xi(), x, &huge)?
    } else {
        Regions::default()
    };
    let large = place_large(inst, t, params.xi(), &regions, &huge)?;
    let mut partial = huge.placed.clone();
    partial.extend(large.iter().map(|(&j, &i)| (j, i)));
    let schedule = place_small(inst, t, params, &partial)?;
    Ok(Rounding {
        t,
        huge,
        regions,
        large,
        schedule,
    })
}

/// Replays the rounding as a flat list of events.
pub fn trace(inst: &RaiInstance, params: &RoundingParams, x: &FractionalAssignment, r: &Rounding) -> Vec<TraceEvent> {
    let class = classes(inst, r.t, params.xi());
    let mut events = Vec::new();
    let huge_mass = x.class_mass(&class, &[SizeClass::Huge]);
    let huge_at: BTreeMap<usize, usize> = r.huge.placed.iter().map(|(&j, &i)| (i, j)).collect();
    for (machine, (cum, hit)) in running_floors(&huge_mass).into_iter().enumerate() {
        if hit {
            events.push(TraceEvent {
                phase: "huge",
                machine,
                job: huge_at.get(&machine).copied(),
                floor: Some(cum.floor().to_string()),
                cumulative: Some(cum.to_string()),
            });
        }
    }
    let large_mass = x.class_mass(&class, &[SizeClass::Large]);
    for (machine, (cum, hit)) in running_floors(&large_mass).into_iter().enumerate() {
        if hit {
            events.push(TraceEvent {
                phase: "border",
                machine,
                job: None,
                floor: Some(cum.floor().to_string()),
                cumulative: Some(cum.to_string()),
            });
        }
    }
    let mut large: Vec<(usize, usize)> = r.large.iter().map(|(&j, &i)| (i, j)).collect();
    large.sort();
    for (machine, job) in large {
        events.push(TraceEvent {
            phase: "large",
            machine,
            job: Some(job),
            cumulative: None,
            floor: None,
        });
    }
    let mut small: Vec<(usize, usize)> = r
        .schedule
        .assignment()
        .iter()
        .enumerate()
        .filter(|(j, _)| class[*j] == SizeClass::Small)
        .map(|(j, &i)| (i, j))
        .collect();
    small.sort_by_key(|&(i, j)| (i, inst.job(j).last, j));
    for (machine, job) in small {
        events.push(TraceEvent {
            phase: "small",
            machine,
            job: Some(job),
            cumulative: None,
            floor: None,
        });
    }
    events
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    pub checked: usize,
    pub violations: Vec<String>,
}

impl LemmaCheck {
    fn new(name: &str) -> Self {
        LemmaCheck {
            name: name.to_string(),
            checked: 0,
            violations: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, message: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations.push(message());
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-checks every invariant the rounding is supposed to maintain.
pub fn lemma_checks(
    inst: &RaiInstance,
    params: &RoundingParams,
    x: &FractionalAssignment,
    r: &Rounding,
) -> Vec<LemmaCheck> {
    let t = r.t;
    let m = inst.machine_count();
    let class = classes(inst, t, params.xi());
    let sched = &r.schedule;

    let mut lp_check = LemmaCheck::new("lp_constraints");
    for v in lp::check_constraints(inst, params, x) {
        lp_check.check(false, || v);
    }
    lp_check.checked += 1;

    let mut schedule_valid = LemmaCheck::new("schedule_eligible");
    for v in validate(inst, sched, None, TargetMode::AtMost).violations {
        schedule_valid.check(false, || format!("{v:?}"));
    }
    schedule_valid.checked += 1;

    let rounded_count = |wanted: SizeClass| -> Vec<u64> {
        let mut counts = vec![0u64; m];
        for (j, &i) in sched.assignment().iter().enumerate() {
            if class[j] == wanted && i < m {
                counts[i] += 1;
            }
        }
        counts
    };
    let huge_frac = x.class_mass(&class, &[SizeClass::Huge]);
    let large_frac = x.class_mass(&class, &[SizeClass::Large]);
    let big_frac = x.class_mass(&class, &[SizeClass::Large, SizeClass::Huge]);
    let huge_round = rounded_count(SizeClass::Huge);
    let large_round = rounded_count(SizeClass::Large);

    let mut huge_bound = LemmaCheck::new("huge_bound");
    let mut large_bound = LemmaCheck::new("large_bound");
    for l in 0..m {
        let (mut hf, mut lf) = (Rational::zero(), Rational::zero());
        let (mut hr, mut lr) = (0u64, 0u64);
        for rr in l..m {
            hf += &huge_frac[rr];
            lf += &large_frac[rr];
            hr += huge_round[rr];
            lr += large_round[rr];
            huge_bound.check(integer(hr) <= hf.ceil(), || {
                format!("[{l}, {rr}]: {hr} rounded huge jobs > ceil({hf})")
            });
            let limit = (&lf + integer(2)) * integer(2);
            large_bound.check(integer(lr) < limit, || {
                format!("[{l}, {rr}]: {lr} rounded large jobs >= 2 ({lf} + 2)")
            });
        }
    }

    let mut one_big = LemmaCheck::new("one_big_job_per_machine");
    for i in 0..m {
        let count = huge_round[i] + large_round[i];
        one_big.check(count <= 1, || format!("machine {i} holds {count} big jobs"));
        one_big.check(count == 0 || big_frac[i].is_positive(), || {
            format!("machine {i} holds a big job without fractional big mass")
        });
    }

    let regions = &r.regions;
    let mut region_check = LemmaCheck::new("region_candidates");
    for (s, &(a, b)) in regions.regions.iter().enumerate() {
        region_check.check(a <= b, || format!("region {s} is empty"));
        region_check.check(regions.candidates.range(a..=b).next().is_some(), || {
            format!("region {s} = [{a}, {b}] has no candidate")
        });
        if s > 0 {
            let prev = regions.regions[s - 1].1;
            region_check.check(prev < a, || format!("regions {} and {s} overlap", s - 1));
        }
    }
    for &c in &regions.candidates {
        region_check.check(big_frac[c].is_positive() && huge_round[c] == 0, || {
            format!("machine {c} is not a valid candidate")
        });
    }

    let mut window = LemmaCheck::new("fractional_window");
    let mut window_tight = LemmaCheck::new("fractional_window_refined");
    let q = regions.regions.len();
    let mut prefix = vec![Rational::zero()];
    for v in &large_frac {
        let next = prefix.last().unwrap() + v;
        prefix.push(next);
    }
    for s in 0..q {
        let (outer_left, _) = regions.outer(s);
        for tt in s..q {
            let (_, outer_right) = regions.outer(tt);
            let k = integer((tt - s + 1) as u64);
            let (l0, l1) = regions.regions[s];
            let (r0, r1) = regions.regions[tt];
            for l in l0..=l1 {
                for rr in r0.max(l)..=r1 {
                    let frac = &prefix[rr + 1] - &prefix[l];
                    window.check(&k - integer(2) < frac && frac < &k + integer(2), || {
                        format!("[{l}, {rr}] spans {k} regions with large mass {frac}")
                    });
                    let inner_left = l > outer_left;
                    let inner_right = rr < outer_right;
                    if inner_left && inner_right {
                        window_tight.check(frac < k, || {
                            format!("[{l}, {rr}] strictly inside spans {k} regions with large mass {frac}")
                        });
                    } else if inner_left || inner_right {
                        window_tight.check(frac < &k + Rational::one(), || {
                            format!("[{l}, {rr}] spans {k} regions with large mass {frac}")
                        });
                    }
                }
            }
        }
    }

    let cap = params.load_cap(t);
    let mut small_cap = LemmaCheck::new("small_cap");
    for (i, load) in sched.loads(inst).into_iter().enumerate() {
        small_cap.check(integer(load) <= cap, || format!("machine {i} load {load} > {cap}"));
    }

    vec![
        lp_check,
        schedule_valid,
        huge_bound,
        large_bound,
        one_big,
        region_check,
        window,
        window_tight,
        small_cap,
    ]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub t_star: u64,
    pub schedule: Schedule,
    pub lp_cert: FractionalAssignment,
    pub rounding: Rounding,
}

/// Search bounds `(max(max size, ceil L), total size)`.
pub fn search_bounds(inst: &RaiInstance) -> (u64, u64) {
    let l = lower_bound(inst).value.ceil().to_integer();
    let lower = u64::try_from(l).expect("bound fits the total size");
    (lower.max(inst.max_size()), inst.total_size())
}

pub fn solve(inst: &RaiInstance, params: &RoundingParams) -> Result<Solution, RoundingFault> {
    let (lower, upper) = search_bounds(inst);
    let mut hi = upper;
    let mut cert = lp::feasible_at(inst, upper, params)
        .ok_or(RoundingFault::UpperBoundInfeasible(upper))?;
    let mut lo = lower;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        match lp::feasible_at(inst, mid, params) {
            Some(x) => {
                hi = mid;
                cert = x;
            }
            None => lo = mid + 1,
        }
    }
    let rounding = round(inst, hi, params, &cert)?;
    Ok(Solution {
        t_star: hi,
        schedule: rounding.schedule.clone(),
        lp_cert: cert,
        rounding,
    })
}
