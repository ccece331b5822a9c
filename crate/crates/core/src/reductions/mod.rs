//! Gadget reductions from 3-SAT* to scheduling, together with the constructive
//! schedule builders and the assignment extraction that invert them.

pub mod bubble;
pub mod formula;
pub mod interval;
pub mod lrs3;
pub mod resource;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::model::{
    validate, Eligibility, RaiInstance, ResourceInstance, RestrictedInstance, Schedule, TargetMode,
};
use bubble::BubbleTrace;
use formula::{evaluate, kappa, OccurrenceMap, SatStarFormula};

pub use interval::reduce_rai;
pub use lrs3::{reduce_lrs3_ra, Lrs3Check, Lrs3Class, Lrs3Fault, Lrs3Numeric};
pub use resource::{reduce_rar2, reduce_rar3, reduce_simple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MachineKey {
    Truth { j: usize, q: usize },
    Clause { i: usize, s: usize },
    BackwardGate { j: usize, t: usize },
    ForwardGate { j: usize, t: usize },
    BackwardSort { l: usize, j: usize, t: usize },
    ForwardSort { l: usize, j: usize, t: usize },
    Sort { l: usize, q: usize, j: usize, t: usize },
    Amp { l: usize, q: usize },
}

impl fmt::Display for MachineKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MachineKey::Truth { j, q } => write!(f, "TMach({j},{q})"),
            MachineKey::Clause { i, s } => write!(f, "CMach({i},{s})"),
            MachineKey::BackwardGate { j, t } => write!(f, "BGMach({j},{t})"),
            MachineKey::ForwardGate { j, t } => write!(f, "FGMach({j},{t})"),
            MachineKey::BackwardSort { l, j, t } => write!(f, "BSMach({l},{j},{t})"),
            MachineKey::ForwardSort { l, j, t } => write!(f, "FSMach({l},{j},{t})"),
            MachineKey::Sort { l, q, j, t } => write!(f, "SMach({l},{q},{j},{t})"),
            MachineKey::Amp { l, q } => write!(f, "AMach({l},{q})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JobKey {
    Truth { j: usize },
    TruthPart { j: usize, l: usize },
    Var { j: usize, t: usize },
    VarValued { j: usize, t: usize, value: bool },
    Clause { i: usize, s: usize },
    Gate { j: usize, t: usize, value: bool },
    Bridge { l: usize, j: usize, t: usize, value: bool },
    SortValued { l: usize, j: usize, t: usize, value: bool },
    Sort { l: usize, q: usize, j: usize, t: usize },
    AmpBridge { l: usize, q: usize },
    AmpShift { l: usize, q: usize },
    /// A job eligible on a single machine only.
    Private { machine: MachineKey },
}

fn truth_sign(value: bool) -> char {
    if value {
        'T'
    } else {
        'F'
    }
}

impl fmt::Display for JobKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            JobKey::Truth { j } => write!(f, "TJob({j})"),
            JobKey::TruthPart { j, l } => write!(f, "TJob({j},{l})"),
            JobKey::Var { j, t } => write!(f, "VJob({j},{t})"),
            JobKey::VarValued { j, t, value } => write!(f, "VJob({j},{t},{})", truth_sign(value)),
            JobKey::Clause { i, s } => write!(f, "CJob({i},{s})"),
            JobKey::Gate { j, t, value } => write!(f, "GJob({j},{t},{})", truth_sign(value)),
            JobKey::Bridge { l, j, t, value } => {
                write!(f, "BJob({l},{j},{t},{})", truth_sign(value))
            }
            JobKey::SortValued { l, j, t, value } => {
                write!(f, "SJob({l},{j},{t},{})", truth_sign(value))
            }
            JobKey::Sort { l, q, j, t } => write!(f, "SJob({l},{q},{j},{t})"),
            JobKey::AmpBridge { l, q } => write!(f, "ABJob({l},{q})"),
            JobKey::AmpShift { l, q } => write!(f, "ASJob({l},{q})"),
            JobKey::Private { machine } => write!(f, "Load({machine})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GadgetKind {
    Simple,
    Rar3,
    Rar2,
    Rai,
    Lrs3Ra,
}

impl GadgetKind {
    pub const ALL: [GadgetKind; 5] = [
        GadgetKind::Simple,
        GadgetKind::Rar3,
        GadgetKind::Rar2,
        GadgetKind::Rai,
        GadgetKind::Lrs3Ra,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GadgetKind::Simple => "simple",
            GadgetKind::Rar3 => "rar3",
            GadgetKind::Rar2 => "rar2",
            GadgetKind::Rai => "rai",
            GadgetKind::Lrs3Ra => "lrs3ra",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        GadgetKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Load every machine carries in a schedule witnessing satisfiability.
    pub fn target(self) -> u64 {
        match self {
            GadgetKind::Simple | GadgetKind::Rar3 | GadgetKind::Lrs3Ra => 2,
            GadgetKind::Rar2 => 7,
            GadgetKind::Rai => 8,
        }
    }
}

impl fmt::Display for GadgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The scheduling instance a gadget is expressed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GadgetModel {
    Restricted(RestrictedInstance),
    Resource(ResourceInstance),
    Interval(RaiInstance),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ReductionError {
    #[error("assignment has {found} values but the formula has {expected} variables")]
    AssignmentLength { expected: usize, found: usize },
    #[error("assignment does not satisfy the formula")]
    Unsatisfying,
    #[error("schedule is not an exact {target}-schedule")]
    NotExact { target: u64 },
    #[error("gadget does not belong to this formula: {0}")]
    Mismatch(String),
    #[error("internal fault: {0}")]
    Fault(String),
}

#[derive(Debug, Clone)]
pub struct GadgetInstance {
    pub kind: GadgetKind,
    pub model: GadgetModel,
    pub target: u64,
    pub machines: Vec<MachineKey>,
    pub jobs: Vec<JobKey>,
    restricted: RestrictedInstance,
    machine_index: HashMap<MachineKey, usize>,
    job_index: HashMap<JobKey, usize>,
}

impl GadgetInstance {
    pub(crate) fn assemble(
        kind: GadgetKind,
        model: GadgetModel,
        machines: Vec<MachineKey>,
        jobs: Vec<JobKey>,
    ) -> Self {
        let restricted = match &model {
            GadgetModel::Restricted(r) => r.clone(),
            GadgetModel::Resource(r) => crate::model::resource_to_restricted(r)
                .expect("gadget demands yield a valid restricted instance"),
            GadgetModel::Interval(r) => crate::model::rai_to_restricted(r),
        };
        assert_eq!(restricted.machine_count(), machines.len());
        assert_eq!(restricted.job_count(), jobs.len());
        let machine_index = machines.iter().enumerate().map(|(x, &k)| (k, x)).collect();
        let job_index = jobs.iter().enumerate().map(|(x, &k)| (k, x)).collect();
        GadgetInstance {
            kind,
            model,
            target: kind.target(),
            machines,
            jobs,
            restricted,
            machine_index,
            job_index,
        }
    }

    /// Explicit eligibility sets, whatever the underlying model.
    pub fn restricted(&self) -> &RestrictedInstance {
        &self.restricted
    }

    pub fn machine(&self, key: MachineKey) -> Option<usize> {
        self.machine_index.get(&key).copied()
    }

    pub fn job(&self, key: JobKey) -> Option<usize> {
        self.job_index.get(&key).copied()
    }

    pub fn machine_names(&self) -> Vec<String> {
        self.machines.iter().map(ToString::to_string).collect()
    }

    pub fn job_names(&self) -> Vec<String> {
        self.jobs.iter().map(ToString::to_string).collect()
    }
}

pub fn reduce(kind: GadgetKind, formula: &SatStarFormula) -> GadgetInstance {
    match kind {
        GadgetKind::Simple => reduce_simple(formula),
        GadgetKind::Rar3 => reduce_rar3(formula),
        GadgetKind::Rar2 => reduce_rar2(formula),
        GadgetKind::Rai => reduce_rai(formula),
        GadgetKind::Lrs3Ra => reduce_lrs3_ra(formula),
    }
}

/// Everything a builder needs to know about a formula and an assignment.
pub(crate) struct Truth<'a> {
    pub kappa: OccurrenceMap,
    pub assignment: &'a [bool],
}

impl Truth<'_> {
    /// Truth value of occurrence slot `(j, t)`.
    pub fn literal(&self, j: usize, t: usize) -> bool {
        self.assignment[j] == (t < 2)
    }
}

/// Job placements collected by symbolic name before being turned into a schedule.
pub(crate) struct Placement<'g> {
    gadget: &'g GadgetInstance,
    machine_of: Vec<Option<usize>>,
}

impl<'g> Placement<'g> {
    fn new(gadget: &'g GadgetInstance) -> Self {
        Placement {
            gadget,
            machine_of: vec![None; gadget.jobs.len()],
        }
    }

    pub fn put(&mut self, job: JobKey, machine: MachineKey) -> Result<(), ReductionError> {
        let j = self
            .gadget
            .job(job)
            .ok_or_else(|| ReductionError::Fault(format!("unknown job {job}")))?;
        let m = self
            .gadget
            .machine(machine)
            .ok_or_else(|| ReductionError::Fault(format!("unknown machine {machine}")))?;
        self.machine_of[j] = Some(m);
        Ok(())
    }

    /// Gives every clause machine the clause job that tops it up to the target.
    fn fill_clauses(&mut self, formula: &SatStarFormula) -> Result<(), ReductionError> {
        let inst = self.gadget.restricted();
        let mut loads = vec![0u64; inst.machine_count()];
        for (j, m) in self.machine_of.iter().enumerate() {
            if let Some(m) = *m {
                loads[m] += inst.size(j);
            }
        }
        for i in 0..formula.clauses().len() {
            let mut free: Vec<usize> = (0..3)
                .filter_map(|s| self.gadget.job(JobKey::Clause { i, s }))
                .filter(|&j| self.machine_of[j].is_none())
                .collect();
            for s in 0..3 {
                let m = self.gadget.machine(MachineKey::Clause { i, s }).ok_or_else(|| {
                    ReductionError::Fault(format!("missing clause machine ({i},{s})"))
                })?;
                let need = self.gadget.target.checked_sub(loads[m]).ok_or_else(|| {
                    ReductionError::Fault(format!("CMach({i},{s}) already overloaded"))
                })?;
                let pick = free
                    .iter()
                    .position(|&j| inst.size(j) == need && inst.is_eligible(j, m))
                    .ok_or_else(|| {
                        ReductionError::Fault(format!("no clause job of size {need} for CMach({i},{s})"))
                    })?;
                let j = free.remove(pick);
                self.machine_of[j] = Some(m);
                loads[m] += need;
            }
        }
        Ok(())
    }

    fn finish(self) -> Result<Schedule, ReductionError> {
        let assignment = self
            .machine_of
            .iter()
            .enumerate()
            .map(|(j, m)| {
                m.ok_or_else(|| ReductionError::Fault(format!("{} left unplaced", self.gadget.jobs[j])))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Schedule::new(assignment))
    }
}

fn check_shape(g: &GadgetInstance, formula: &SatStarFormula) -> Result<(), ReductionError> {
    let rebuilt = reduce(g.kind, formula);
    if rebuilt.machines != g.machines || rebuilt.jobs != g.jobs {
        return Err(ReductionError::Mismatch(format!(
            "{} machines and {} jobs expected, found {} and {}",
            rebuilt.machines.len(),
            rebuilt.jobs.len(),
            g.machines.len(),
            g.jobs.len()
        )));
    }
    Ok(())
}

/// Builds the exact target schedule that a satisfying assignment induces.
pub fn schedule_from_assignment(
    g: &GadgetInstance,
    formula: &SatStarFormula,
    assignment: &[bool],
) -> Result<Schedule, ReductionError> {
    let n = formula.variable_count();
    if assignment.len() != n {
        return Err(ReductionError::AssignmentLength {
            expected: n,
            found: assignment.len(),
        });
    }
    if !evaluate(formula, assignment) {
        return Err(ReductionError::Unsatisfying);
    }
    check_shape(g, formula)?;
    let truth = Truth {
        kappa: kappa(formula),
        assignment,
    };
    let mut placement = Placement::new(g);
    for (x, job) in g.jobs.iter().enumerate() {
        if let JobKey::Private { machine } = *job {
            placement.machine_of[x] = g.machine(machine);
        }
    }
    match g.kind {
        GadgetKind::Simple | GadgetKind::Rar3 => resource::place_simple(&truth, n, &mut placement)?,
        GadgetKind::Rar2 => resource::place_rar2(&truth, n, &mut placement)?,
        GadgetKind::Rai => {
            let trace = BubbleTrace::new(n, &truth.kappa);
            interval::place_rai(&truth, &trace, n, &mut placement)?
        }
        GadgetKind::Lrs3Ra => {
            let trace = BubbleTrace::new(n, &truth.kappa);
            lrs3::place_lrs3(&truth, &trace, n, &mut placement)?
        }
    }
    placement.fill_clauses(formula)?;
    let schedule = placement.finish()?;
    let report = validate(g.restricted(), &schedule, Some(g.target), TargetMode::Exact);
    if !report.passed() {
        return Err(ReductionError::Fault(format!(
            "constructed schedule fails validation: {:?}",
            report.violations.first()
        )));
    }
    Ok(schedule)
}

/// Reads the truth assignment off an exact target schedule.
pub fn assignment_from_schedule(
    g: &GadgetInstance,
    formula: &SatStarFormula,
    schedule: &Schedule,
) -> Result<Vec<bool>, ReductionError> {
    check_shape(g, formula)?;
    let report = validate(g.restricted(), schedule, Some(g.target), TargetMode::Exact);
    if !report.passed() {
        return Err(ReductionError::NotExact { target: g.target });
    }
    let on = |job: JobKey, machine: MachineKey| -> Result<bool, ReductionError> {
        let j = g
            .job(job)
            .ok_or_else(|| ReductionError::Fault(format!("unknown job {job}")))?;
        Ok(g.machine(machine) == Some(schedule.machine_of(j)))
    };
    let assignment = (0..formula.variable_count())
        .map(|j| match g.kind {
            GadgetKind::Rar2 => on(JobKey::TruthPart { j, l: 2 }, MachineKey::Truth { j, q: 1 }),
            _ => on(JobKey::Truth { j }, MachineKey::Truth { j, q: 0 }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if !evaluate(formula, &assignment) {
        return Err(ReductionError::Fault(
            "extracted assignment does not satisfy the formula".into(),
        ));
    }
    Ok(assignment)
}
