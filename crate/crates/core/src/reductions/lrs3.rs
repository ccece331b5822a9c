//! The rank-three gadget: a restricted assignment instance whose eligibility
//! is reproduced by exact processing times of rank three.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use super::bubble::BubbleTrace;
use super::formula::{kappa, OccurrenceMap, SatStarFormula};
use super::{GadgetInstance, GadgetKind, GadgetModel, JobKey, MachineKey, Placement, ReductionError, Truth};
use crate::model::{Eligibility, RestrictedInstance};

/// Whether sorting machine `(l, q, j, t)` carries a private load of 1.
fn sort_has_load(trace: &BubbleTrace, l: usize, q: usize, slot: (usize, usize)) -> bool {
    let (up, down) = (trace.rising(l), trace.falling(l));
    !(slot == up || (q == 2 && slot == down))
}

pub fn reduce_lrs3_ra(formula: &SatStarFormula) -> GadgetInstance {
    let n = formula.variable_count();
    let kap = kappa(formula);
    let trace = BubbleTrace::new(n, &kap);
    let k = trace.k();
    let mut machines: Vec<MachineKey> = (0..n)
        .flat_map(|j| (0..2).map(move |q| MachineKey::Truth { j, q }))
        .collect();
    for l in 0..k {
        for q in 0..3 {
            for j in 0..n {
                for t in 0..4 {
                    machines.push(MachineKey::Sort { l, q, j, t });
                }
            }
            machines.push(MachineKey::Amp { l, q });
        }
    }
    for i in 0..formula.clauses().len() {
        for s in 0..3 {
            machines.push(MachineKey::Clause { i, s });
        }
    }
    let position: HashMap<MachineKey, usize> = machines.iter().enumerate().map(|(x, &m)| (m, x)).collect();
    let mut jobs: Vec<(JobKey, u64, Vec<MachineKey>)> = Vec::new();
    for j in 0..n {
        let set = vec![MachineKey::Truth { j, q: 0 }, MachineKey::Truth { j, q: 1 }];
        jobs.push((JobKey::Truth { j }, 2, set));
    }
    for j in 0..n {
        for t in 0..4 {
            let right = if k > 0 {
                MachineKey::Sort { l: 0, q: 0, j, t }
            } else {
                let (i, s) = kap.get(j, t);
                MachineKey::Clause { i, s }
            };
            jobs.push((JobKey::Var { j, t }, 1, vec![MachineKey::Truth { j, q: t / 2 }, right]));
        }
    }
    for l in 0..k {
        let (up, down) = (trace.rising(l), trace.falling(l));
        let sort = |q: usize, (j, t): (usize, usize)| MachineKey::Sort { l, q, j, t };
        for q in 0..3 {
            for j in 0..n {
                for t in 0..4 {
                    let slot = (j, t);
                    let size = if slot == up && q < 2 { 2 } else { 1 };
                    let set = if q == 0 && slot == up {
                        vec![sort(0, up), sort(0, down), sort(1, up)]
                    } else if q == 0 && slot == down {
                        vec![sort(0, down), sort(1, down), sort(1, up)]
                    } else {
                        vec![sort(q, slot), lrs3_right(&kap, k, l, q, slot)]
                    };
                    jobs.push((JobKey::Sort { l, q, j, t }, size, set));
                }
            }
        }
    }
    for l in 0..k {
        for q in 0..3 {
            for j in 0..n {
                for t in 0..4 {
                    if sort_has_load(&trace, l, q, (j, t)) {
                        let machine = MachineKey::Sort { l, q, j, t };
                        jobs.push((JobKey::Private { machine }, 1, vec![machine]));
                    }
                }
            }
        }
    }
    for l in 0..k {
        let (up, down) = (trace.rising(l), trace.falling(l));
        let amp = |q| MachineKey::Amp { l, q };
        for q in 0..2 {
            jobs.push((JobKey::AmpBridge { l, q }, 1, vec![amp(q), amp(q + 1)]));
        }
        let shift = [
            vec![amp(0), MachineKey::Sort { l, q: 0, j: up.0, t: up.1 }],
            vec![amp(2), MachineKey::Sort { l, q: 2, j: down.0, t: down.1 }],
            vec![
                MachineKey::Sort { l, q: 2, j: down.0, t: down.1 },
                MachineKey::Sort { l, q: 2, j: up.0, t: up.1 },
            ],
        ];
        for (q, set) in shift.into_iter().enumerate() {
            jobs.push((JobKey::AmpShift { l, q }, 1, set));
        }
        for q in 0..3 {
            jobs.push((JobKey::Private { machine: amp(q) }, 1, vec![amp(q)]));
        }
    }
    for (i, c) in formula.clauses().iter().enumerate() {
        let sizes = [1, if c.kind == 1 { 2 } else { 1 }, 2];
        let set: Vec<MachineKey> = (0..3).map(|s| MachineKey::Clause { i, s }).collect();
        for (s, size) in sizes.into_iter().enumerate() {
            jobs.push((JobKey::Clause { i, s }, size, set.clone()));
        }
    }
    let inst = RestrictedInstance::from_sets(
        machines.len(),
        jobs.iter()
            .map(|(_, size, set)| (*size, set.iter().map(|m| position[m]).collect())),
    )
    .expect("rank-three gadget is well formed");
    let keys = jobs.iter().map(|(key, ..)| *key).collect();
    GadgetInstance::assemble(GadgetKind::Lrs3Ra, GadgetModel::Restricted(inst), machines, keys)
}

/// The machine a generic sorting job moves to when its value travels on.
fn lrs3_right(kap: &OccurrenceMap, k: usize, l: usize, q: usize, (j, t): (usize, usize)) -> MachineKey {
    if (l, q) == (k - 1, 2) {
        let (i, s) = kap.get(j, t);
        MachineKey::Clause { i, s }
    } else {
        MachineKey::Sort {
            l: l + q / 2,
            q: (q + 1) % 3,
            j,
            t,
        }
    }
}

/// A true occurrence travels right through every sorting block; a false one
/// stays put. The amplifier jobs absorb the size-2 sorting jobs of the rising
/// slot.
pub(crate) fn place_lrs3(truth: &Truth, trace: &BubbleTrace, n: usize, p: &mut Placement) -> Result<(), ReductionError> {
    let k = trace.k();
    for j in 0..n {
        let q = usize::from(!truth.assignment[j]);
        p.put(JobKey::Truth { j }, MachineKey::Truth { j, q })?;
        for t in 0..4 {
            let target = match (truth.literal(j, t), k) {
                (false, _) => MachineKey::Truth { j, q: t / 2 },
                (true, 0) => {
                    let (i, s) = truth.kappa.get(j, t);
                    MachineKey::Clause { i, s }
                }
                (true, _) => MachineKey::Sort { l: 0, q: 0, j, t },
            };
            p.put(JobKey::Var { j, t }, target)?;
        }
    }
    for l in 0..k {
        let (up, down) = (trace.rising(l), trace.falling(l));
        for j in 0..n {
            for t in 0..4 {
                let slot = (j, t);
                let out = truth.literal(j, t);
                for q in 0..3 {
                    let target = if !out {
                        MachineKey::Sort { l, q, j, t }
                    } else if q == 0 && (slot == up || slot == down) {
                        MachineKey::Sort { l, q: 1, j, t }
                    } else {
                        lrs3_right(&truth.kappa, k, l, q, slot)
                    };
                    p.put(JobKey::Sort { l, q, j, t }, target)?;
                }
            }
        }
        let amp = |q| MachineKey::Amp { l, q };
        let s2_down = MachineKey::Sort { l, q: 2, j: down.0, t: down.1 };
        let s2_up = MachineKey::Sort { l, q: 2, j: up.0, t: up.1 };
        if truth.literal(up.0, up.1) {
            p.put(JobKey::AmpShift { l, q: 0 }, MachineKey::Sort { l, q: 0, j: up.0, t: up.1 })?;
            p.put(JobKey::AmpBridge { l, q: 0 }, amp(0))?;
            p.put(JobKey::AmpBridge { l, q: 1 }, amp(1))?;
            p.put(JobKey::AmpShift { l, q: 1 }, amp(2))?;
            p.put(JobKey::AmpShift { l, q: 2 }, s2_down)?;
        } else {
            p.put(JobKey::AmpShift { l, q: 0 }, amp(0))?;
            p.put(JobKey::AmpBridge { l, q: 0 }, amp(1))?;
            p.put(JobKey::AmpBridge { l, q: 1 }, amp(2))?;
            p.put(JobKey::AmpShift { l, q: 1 }, s2_down)?;
            p.put(JobKey::AmpShift { l, q: 2 }, s2_up)?;
        }
    }
    Ok(())
}

/// One summand `coef * N^exp` of a size vector entry.
type Term = (BigRational, i64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Lrs3Fault {
    #[error("delta must lie in (0, 1] and the cap must be at least 1")]
    BadParameters,
    #[error("the formula needs no sorting step, so the gadget has no rank-three realisation to check")]
    NoSortingSteps,
    #[error("{job} on {machine}: processing time {value} is neither within delta of {size} nor above the cap")]
    Neither {
        job: String,
        machine: String,
        size: u64,
        value: String,
    },
    #[error("{job} on {machine}: classified {found} but the gadget says {expected}")]
    Mismatch {
        job: String,
        machine: String,
        found: String,
        expected: String,
    },
    #[error("{job} on {machine}: shortcut and full evaluation disagree")]
    ShortcutDisagrees { job: String, machine: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lrs3Class {
    /// Processing time within `[p, p + delta]` of the restricted size `p`.
    Eligible(u64),
    /// Processing time above the cap.
    Blocked,
}

/// Exact speed and size vectors of the rank-three realisation.
#[derive(Debug, Clone)]
pub struct Lrs3Numeric {
    pub delta: BigRational,
    pub cap: BigRational,
    pub eps: BigRational,
    pub base: BigRational,
    pub big_c: i64,
    /// Exponent of `N` in each speed entry, per machine.
    speeds: Vec<[i64; 3]>,
    /// Size vector entries per job; `None` is a zero entry.
    sizes: Vec<[Option<Term>; 3]>,
    /// Block of every machine: truth 0, sorting blocks from 1, clause last.
    blocks: Vec<usize>,
    powers: HashMap<i64, BigRational>,
}

impl Lrs3Numeric {
    pub fn new(
        formula: &SatStarFormula,
        gadget: &GadgetInstance,
        delta: BigRational,
        cap: BigRational,
    ) -> Result<Self, Lrs3Fault> {
        if delta <= BigRational::zero() || delta > BigRational::one() || cap < BigRational::one() {
            return Err(Lrs3Fault::BadParameters);
        }
        let n = formula.variable_count();
        let kap = kappa(formula);
        let trace = BubbleTrace::new(n, &kap);
        let k = trace.k();
        if k == 0 {
            return Err(Lrs3Fault::NoSortingSteps);
        }
        let eps = &delta / BigRational::from_integer(BigInt::from(2));
        let base = &cap / &eps;
        let c = 16 * n as i64;
        let kk = k as i64;
        let iota = |l: usize, j: usize, t: usize| trace.iota(l, j, t) as i64;
        let star = |l: usize| trace.iota_star(l) as i64;
        let one = BigRational::one();
        let two = BigRational::from_integer(BigInt::from(2));
        let speeds = gadget
            .machines
            .iter()
            .map(|&m| match m {
                MachineKey::Truth { j, q } => {
                    let r = (2 * j + q) as i64;
                    [2 * (4 * j + 2 * q) as i64, -(c + r), c - r]
                }
                MachineKey::Sort { l, q, j, t } => {
                    let a = iota(l + q.div_ceil(2), j, t);
                    let b = (3 * l + q) as i64;
                    [2 * a, b * c - 2 * a, -(b * c + 2 * a)]
                }
                MachineKey::Amp { l, q } => {
                    let a = star(l);
                    let b = (3 * l + q) as i64;
                    [2 * a - 1, b * c - 2 * a + 1, -(b * c + 2 * a - 1)]
                }
                MachineKey::Clause { i, s } => {
                    let r = (3 * i + s) as i64;
                    [2 * r, 3 * kk * c - 2 * r, -(3 * kk * c + i as i64)]
                }
                _ => unreachable!("no {m} in the rank-three gadget"),
            })
            .collect();
        let blocks = gadget
            .machines
            .iter()
            .map(|&m| match m {
                MachineKey::Truth { .. } => 0,
                MachineKey::Sort { l, q, .. } | MachineKey::Amp { l, q } => 1 + 3 * l + q,
                _ => 3 * k + 1,
            })
            .collect();
        let term = |coef: &BigRational, exp: i64| Some((coef.clone(), exp));
        let sizes = gadget
            .jobs
            .iter()
            .map(|&job| match job {
                JobKey::Truth { j } => {
                    let j = j as i64;
                    [term(&two, -2 * (4 * j + 2)), term(&two, c + 2 * j), None]
                }
                JobKey::Var { j, t } => {
                    let slot = (4 * j + t) as i64;
                    [
                        term(&eps, -2 * slot),
                        term(&one, 2 * slot),
                        term(&one, -c + 2 * j as i64 + (t / 2) as i64),
                    ]
                }
                JobKey::Sort { l, q, j, t } => {
                    let (up, down) = (trace.rising(l), trace.falling(l));
                    let a = star(l);
                    let b = (3 * l) as i64;
                    match (q, (j, t)) {
                        (0, s) if s == up => [
                            term(&two, -2 * (a + 1)),
                            term(&eps, -(b + 1) * c + 2 * (a + 1)),
                            term(&two, b * c + 2 * a),
                        ],
                        (0, s) if s == down => [
                            term(&one, -2 * (a + 1)),
                            term(&one, -(b + 1) * c + 2 * a),
                            term(&eps, b * c + 2 * (a + 1)),
                        ],
                        (1, s) if s == up => [
                            term(&eps, -2 * (a + 1)),
                            term(&two, -(b + 2) * c + 2 * (a + 1)),
                            term(&two, (b + 1) * c + 2 * (a + 1)),
                        ],
                        _ => {
                            let a = iota(l + 1, j, t);
                            let b = (3 * l + q) as i64;
                            [
                                term(&eps, -2 * a),
                                term(&one, -(b + 1) * c + 2 * a),
                                term(&one, b * c + 2 * a),
                            ]
                        }
                    }
                }
                JobKey::AmpBridge { l, q } => {
                    let a = star(l);
                    let b = (3 * l + q) as i64;
                    [
                        term(&eps, -2 * a + 1),
                        term(&one, -(b + 1) * c + 2 * a - 1),
                        term(&one, b * c + 2 * a - 1),
                    ]
                }
                JobKey::AmpShift { l, q } => {
                    let a = star(l);
                    let b = (3 * l) as i64;
                    match q {
                        0 => [
                            term(&one, -2 * a),
                            term(&eps, -b * c + 2 * a - 1),
                            term(&one, b * c + 2 * a - 1),
                        ],
                        1 => [
                            term(&one, -2 * a),
                            term(&eps, -(b + 2) * c + 2 * a - 1),
                            term(&one, (b + 2) * c + 2 * a - 1),
                        ],
                        _ => [
                            term(&one, -2 * (a + 1)),
                            term(&eps, -(b + 2) * c + 2 * a),
                            term(&one, (b + 2) * c + 2 * a),
                        ],
                    }
                }
                JobKey::Private {
                    machine: MachineKey::Sort { l, q, j, t },
                } => {
                    let a = iota(l + q.div_ceil(2), j, t);
                    let b = (3 * l + q) as i64;
                    [term(&one, -2 * a), term(&eps, -b * c + 2 * a), term(&eps, b * c + 2 * a)]
                }
                JobKey::Private {
                    machine: MachineKey::Amp { l, q },
                } => {
                    let a = star(l);
                    let b = (3 * l + q) as i64;
                    [
                        term(&one, -2 * a + 1),
                        term(&eps, -b * c + 2 * a - 1),
                        term(&eps, b * c + 2 * a - 1),
                    ]
                }
                JobKey::Clause { i, s } => {
                    let kind = u64::from(formula.clauses()[i].kind);
                    let phi = [1, 3 - kind, 2][s];
                    let phi = BigRational::from_integer(BigInt::from(phi));
                    [
                        term(&eps, -2 * (3 * i as i64 + 2)),
                        None,
                        term(&phi, 3 * kk * c + i as i64),
                    ]
                }
                _ => unreachable!("no {job} in the rank-three gadget"),
            })
            .collect();
        Ok(Lrs3Numeric {
            delta,
            cap,
            eps,
            base,
            big_c: c,
            speeds,
            sizes,
            blocks,
            powers: HashMap::new(),
        })
    }

    /// Default parameters: delta 1/2 and cap 8, so epsilon is 1/4 and N is 32.
    pub fn with_defaults(formula: &SatStarFormula, gadget: &GadgetInstance) -> Result<Self, Lrs3Fault> {
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        Lrs3Numeric::new(formula, gadget, half, BigRational::from_integer(BigInt::from(8)))
    }

    fn power(&mut self, exp: i64) -> BigRational {
        if let Some(v) = self.powers.get(&exp) {
            return v.clone();
        }
        let v = if exp >= 0 {
            num_traits::pow(self.base.clone(), exp as usize)
        } else {
            num_traits::pow(self.base.recip(), (-exp) as usize)
        };
        self.powers.insert(exp, v.clone());
        v
    }

    /// Exact processing time `sum_d size_d(job) * speed_d(machine)`.
    pub fn processing_time(&mut self, job: usize, machine: usize) -> BigRational {
        let mut total = BigRational::zero();
        for d in 0..3 {
            if let Some((coef, exp)) = self.sizes[job][d].clone() {
                total += coef * self.power(exp + self.speeds[machine][d]);
            }
        }
        total
    }

    /// Largest exponent of `N` among the nonzero summands.
    fn dominant_exponent(&self, job: usize, machine: usize) -> i64 {
        (0..3)
            .filter_map(|d| self.sizes[job][d].as_ref().map(|(_, e)| e + self.speeds[machine][d]))
            .max()
            .unwrap_or(i64::MIN)
    }

    /// Every coefficient is at least epsilon, so a summand `N^2` or larger
    /// already exceeds the cap: `eps * N^2 = cap^2 / eps > cap`.
    pub fn shortcut_blocked(&self, job: usize, machine: usize) -> bool {
        self.dominant_exponent(job, machine) >= 2
    }

    pub fn classify(&mut self, gadget: &GadgetInstance, job: usize, machine: usize) -> Result<Lrs3Class, Lrs3Fault> {
        let size = gadget.restricted().size(job);
        let value = self.processing_time(job, machine);
        let p = BigRational::from_integer(BigInt::from(size));
        let eligible = p <= value && value <= &p + &self.delta;
        let blocked = value > self.cap;
        match (eligible, blocked) {
            (true, false) => Ok(Lrs3Class::Eligible(size)),
            (false, true) => Ok(Lrs3Class::Blocked),
            _ => Err(Lrs3Fault::Neither {
                job: gadget.jobs[job].to_string(),
                machine: gadget.machines[machine].to_string(),
                size,
                value: value.to_string(),
            }),
        }
    }

    pub fn block_of(&self, machine: usize) -> usize {
        self.blocks[machine]
    }
}

/// Tally of a full trichotomy check.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lrs3Check {
    pub pairs: usize,
    pub full_evaluations: usize,
    pub shortcuts: usize,
    pub eligible: usize,
    pub faults: Vec<Lrs3Fault>,
}

impl Lrs3Check {
    pub fn passed(&self) -> bool {
        self.faults.is_empty()
    }
}

impl Lrs3Numeric {
    /// Compares the classification of every job and machine pair with the
    /// gadget's eligibility. Pairs in blocks near a job's eligible machines and
    /// in three fixed distant blocks are evaluated exactly; the rest use the
    /// dominant exponent, falling back to exact evaluation when it is
    /// inconclusive.
    pub fn check(&mut self, gadget: &GadgetInstance) -> Lrs3Check {
        let inst = gadget.restricted();
        let last_block = self.blocks.iter().copied().max().unwrap_or(0);
        let samples = [0, last_block / 2, last_block];
        let mut by_block: Vec<Vec<usize>> = vec![Vec::new(); last_block + 1];
        for (m, &b) in self.blocks.iter().enumerate() {
            by_block[b].push(m);
        }
        let mut report = Lrs3Check::default();
        for job in 0..inst.job_count() {
            let eligible = inst.eligible(job);
            let lo = eligible.iter().map(|&m| self.blocks[m]).min().unwrap_or(0);
            let hi = eligible.iter().map(|&m| self.blocks[m]).max().unwrap_or(0);
            for (b, machines) in by_block.iter().enumerate() {
                let near = b + 1 >= lo && b <= hi + 1;
                let full = near || samples.contains(&b);
                for &m in machines {
                    report.pairs += 1;
                    let expected = eligible.binary_search(&m).is_ok();
                    let shortcut = self.shortcut_blocked(job, m);
                    let class = if full || !shortcut {
                        report.full_evaluations += 1;
                        match self.classify(gadget, job, m) {
                            Ok(class) => {
                                if shortcut && class != Lrs3Class::Blocked {
                                    report.faults.push(Lrs3Fault::ShortcutDisagrees {
                                        job: gadget.jobs[job].to_string(),
                                        machine: gadget.machines[m].to_string(),
                                    });
                                }
                                class
                            }
                            Err(fault) => {
                                report.faults.push(fault);
                                continue;
                            }
                        }
                    } else {
                        report.shortcuts += 1;
                        Lrs3Class::Blocked
                    };
                    let found = matches!(class, Lrs3Class::Eligible(_));
                    report.eligible += usize::from(found);
                    if found != expected {
                        let word = |e: bool| if e { "eligible" } else { "blocked" }.to_string();
                        report.faults.push(Lrs3Fault::Mismatch {
                            job: gadget.jobs[job].to_string(),
                            machine: gadget.machines[m].to_string(),
                            found: word(found),
                            expected: word(expected),
                        });
                    }
                }
            }
        }
        report
    }
}
