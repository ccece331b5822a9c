//! Instances, schedules and schedule validation.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("an instance needs at least one machine")]
    NoMachines,
    #[error("job at position {index} has id {id}; ids must be dense 0..n-1 in order")]
    IdNotDense { index: usize, id: usize },
    #[error("job {0} has size zero")]
    ZeroSize(usize),
    #[error("job {job} has interval [{first}, {last}] which does not fit {machines} machines")]
    BadInterval {
        job: usize,
        first: usize,
        last: usize,
        machines: usize,
    },
    #[error("job {job} lists machine {machine} but the instance has {machines} machines")]
    MachineOutOfRange {
        job: usize,
        machine: usize,
        machines: usize,
    },
    #[error("job {0} is eligible on no machine")]
    EligibleNowhere(usize),
    #[error("{what} has {found} entries but the instance declares {expected} resources")]
    VectorLength {
        what: String,
        found: usize,
        expected: usize,
    },
    #[error("interval [{l}, {r}] is empty or outside the machine range")]
    BadQuery { l: usize, r: usize },
    #[error("total job size overflows 64 bits")]
    SizeOverflow,
}

/// Read access shared by every instance flavour that has a fixed eligibility relation.
pub trait Eligibility {
    fn machine_count(&self) -> usize;
    fn job_count(&self) -> usize;
    fn size(&self, job: usize) -> u64;
    fn is_eligible(&self, job: usize, machine: usize) -> bool;

    fn total_size(&self) -> u64 {
        (0..self.job_count()).map(|j| self.size(j)).sum()
    }

    fn max_size(&self) -> u64 {
        (0..self.job_count()).map(|j| self.size(j)).max().unwrap_or(0)
    }
}

fn checked_total(sizes: impl Iterator<Item = u64>) -> Result<u64, InstanceError> {
    sizes
        .into_iter()
        .try_fold(0u64, |acc, p| acc.checked_add(p))
        .ok_or(InstanceError::SizeOverflow)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RaiJob {
    pub id: usize,
    pub size: u64,
    pub first: usize,
    pub last: usize,
}

/// Jobs whose eligible machines form a contiguous range of the machine order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaiInstance {
    machine_count: usize,
    jobs: Vec<RaiJob>,
}

impl RaiInstance {
    pub fn new(machine_count: usize, jobs: Vec<RaiJob>) -> Result<Self, InstanceError> {
        if machine_count == 0 {
            return Err(InstanceError::NoMachines);
        }
        for (index, job) in jobs.iter().enumerate() {
            if job.id != index {
                return Err(InstanceError::IdNotDense { index, id: job.id });
            }
            if job.size == 0 {
                return Err(InstanceError::ZeroSize(job.id));
            }
            if job.first > job.last || job.last >= machine_count {
                return Err(InstanceError::BadInterval {
                    job: job.id,
                    first: job.first,
                    last: job.last,
                    machines: machine_count,
                });
            }
        }
        checked_total(jobs.iter().map(|j| j.size))?;
        Ok(RaiInstance {
            machine_count,
            jobs,
        })
    }

    /// Builds an instance from `(size, first, last)` triples, numbering jobs in order.
    pub fn from_intervals(
        machine_count: usize,
        jobs: impl IntoIterator<Item = (u64, usize, usize)>,
    ) -> Result<Self, InstanceError> {
        let jobs = jobs
            .into_iter()
            .enumerate()
            .map(|(id, (size, first, last))| RaiJob {
                id,
                size,
                first,
                last,
            })
            .collect();
        RaiInstance::new(machine_count, jobs)
    }

    pub fn jobs(&self) -> &[RaiJob] {
        &self.jobs
    }

    pub fn job(&self, id: usize) -> &RaiJob {
        &self.jobs[id]
    }
}

impl Eligibility for RaiInstance {
    fn machine_count(&self) -> usize {
        self.machine_count
    }
    fn job_count(&self) -> usize {
        self.jobs.len()
    }
    fn size(&self, job: usize) -> u64 {
        self.jobs[job].size
    }
    fn is_eligible(&self, job: usize, machine: usize) -> bool {
        let j = &self.jobs[job];
        j.first <= machine && machine <= j.last
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RestrictedJob {
    pub id: usize,
    pub size: u64,
    /// Sorted, without duplicates.
    pub eligible: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedInstance {
    machine_count: usize,
    jobs: Vec<RestrictedJob>,
}

impl RestrictedInstance {
    pub fn new(machine_count: usize, mut jobs: Vec<RestrictedJob>) -> Result<Self, InstanceError> {
        if machine_count == 0 {
            return Err(InstanceError::NoMachines);
        }
        for (index, job) in jobs.iter_mut().enumerate() {
            if job.id != index {
                return Err(InstanceError::IdNotDense { index, id: job.id });
            }
            if job.size == 0 {
                return Err(InstanceError::ZeroSize(job.id));
            }
            job.eligible.sort_unstable();
            job.eligible.dedup();
            if job.eligible.is_empty() {
                return Err(InstanceError::EligibleNowhere(job.id));
            }
            if let Some(&machine) = job.eligible.last() {
                if machine >= machine_count {
                    return Err(InstanceError::MachineOutOfRange {
                        job: job.id,
                        machine,
                        machines: machine_count,
                    });
                }
            }
        }
        checked_total(jobs.iter().map(|j| j.size))?;
        Ok(RestrictedInstance {
            machine_count,
            jobs,
        })
    }

    /// Builds an instance from `(size, eligible)` pairs, numbering jobs in order.
    pub fn from_sets(
        machine_count: usize,
        jobs: impl IntoIterator<Item = (u64, Vec<usize>)>,
    ) -> Result<Self, InstanceError> {
        let jobs = jobs
            .into_iter()
            .enumerate()
            .map(|(id, (size, eligible))| RestrictedJob { id, size, eligible })
            .collect();
        RestrictedInstance::new(machine_count, jobs)
    }

    pub fn jobs(&self) -> &[RestrictedJob] {
        &self.jobs
    }

    pub fn job(&self, id: usize) -> &RestrictedJob {
        &self.jobs[id]
    }

    pub fn eligible(&self, job: usize) -> &[usize] {
        &self.jobs[job].eligible
    }
}

impl Eligibility for RestrictedInstance {
    fn machine_count(&self) -> usize {
        self.machine_count
    }
    fn job_count(&self) -> usize {
        self.jobs.len()
    }
    fn size(&self, job: usize) -> u64 {
        self.jobs[job].size
    }
    fn is_eligible(&self, job: usize, machine: usize) -> bool {
        self.jobs[job].eligible.binary_search(&machine).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ResourceJob {
    pub id: usize,
    pub size: u64,
    pub demand: Vec<u64>,
}

/// Eligibility is implied: a job fits a machine when every demand is within capacity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceInstance {
    resource_count: usize,
    capacities: Vec<Vec<u64>>,
    jobs: Vec<ResourceJob>,
}

impl ResourceInstance {
    pub fn new(
        resource_count: usize,
        capacities: Vec<Vec<u64>>,
        jobs: Vec<ResourceJob>,
    ) -> Result<Self, InstanceError> {
        if capacities.is_empty() {
            return Err(InstanceError::NoMachines);
        }
        for (i, caps) in capacities.iter().enumerate() {
            if caps.len() != resource_count {
                return Err(InstanceError::VectorLength {
                    what: format!("capacity vector of machine {i}"),
                    found: caps.len(),
                    expected: resource_count,
                });
            }
        }
        for (index, job) in jobs.iter().enumerate() {
            if job.id != index {
                return Err(InstanceError::IdNotDense { index, id: job.id });
            }
            if job.size == 0 {
                return Err(InstanceError::ZeroSize(job.id));
            }
            if job.demand.len() != resource_count {
                return Err(InstanceError::VectorLength {
                    what: format!("demand vector of job {}", job.id),
                    found: job.demand.len(),
                    expected: resource_count,
                });
            }
        }
        checked_total(jobs.iter().map(|j| j.size))?;
        Ok(ResourceInstance {
            resource_count,
            capacities,
            jobs,
        })
    }

    pub fn resource_count(&self) -> usize {
        self.resource_count
    }

    pub fn capacities(&self) -> &[Vec<u64>] {
        &self.capacities
    }

    pub fn jobs(&self) -> &[ResourceJob] {
        &self.jobs
    }

    pub fn fits(&self, job: usize, machine: usize) -> bool {
        self.jobs[job]
            .demand
            .iter()
            .zip(&self.capacities[machine])
            .all(|(d, c)| d <= c)
    }
}

impl Eligibility for ResourceInstance {
    fn machine_count(&self) -> usize {
        self.capacities.len()
    }
    fn job_count(&self) -> usize {
        self.jobs.len()
    }
    fn size(&self, job: usize) -> u64 {
        self.jobs[job].size
    }
    fn is_eligible(&self, job: usize, machine: usize) -> bool {
        self.fits(job, machine)
    }
}

pub fn resource_to_restricted(inst: &ResourceInstance) -> Result<RestrictedInstance, InstanceError> {
    let m = inst.machine_count();
    let jobs = inst
        .jobs()
        .iter()
        .map(|job| RestrictedJob {
            id: job.id,
            size: job.size,
            eligible: (0..m).filter(|&i| inst.fits(job.id, i)).collect(),
        })
        .collect();
    RestrictedInstance::new(m, jobs)
}

pub fn rai_to_restricted(inst: &RaiInstance) -> RestrictedInstance {
    let jobs = inst
        .jobs()
        .iter()
        .map(|job| RestrictedJob {
            id: job.id,
            size: job.size,
            eligible: (job.first..=job.last).collect(),
        })
        .collect();
    RestrictedInstance::new(inst.machine_count(), jobs).expect("interval jobs are never empty")
}

/// Returns the interval form when every eligible set is a contiguous index range.
pub fn as_interval(inst: &RestrictedInstance) -> Option<RaiInstance> {
    let mut jobs = Vec::with_capacity(inst.job_count());
    for job in inst.jobs() {
        let first = *job.eligible.first()?;
        let last = *job.eligible.last()?;
        if last - first + 1 != job.eligible.len() {
            return None;
        }
        jobs.push(RaiJob {
            id: job.id,
            size: job.size,
            first,
            last,
        });
    }
    RaiInstance::new(inst.machine_count(), jobs).ok()
}

/// Total size of the jobs whose whole interval lies inside machines `l..=r`.
pub fn interval_load(inst: &RaiInstance, l: usize, r: usize) -> Result<u64, InstanceError> {
    if l > r || r >= inst.machine_count() {
        return Err(InstanceError::BadQuery { l, r });
    }
    Ok(inst
        .jobs()
        .iter()
        .filter(|j| l <= j.first && j.last <= r)
        .map(|j| j.size)
        .sum())
}

/// A total assignment of jobs to machines, indexed by job id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Schedule {
    assignment: Vec<usize>,
}

impl Schedule {
    pub fn new(assignment: Vec<usize>) -> Self {
        Schedule { assignment }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn machine_of(&self, job: usize) -> usize {
        self.assignment[job]
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Per-machine loads; assignments to machines past `machine_count` are ignored.
    pub fn loads(&self, inst: &impl Eligibility) -> Vec<u64> {
        let mut loads = vec![0u64; inst.machine_count()];
        for (job, &machine) in self.assignment.iter().enumerate() {
            if job < inst.job_count() && machine < loads.len() {
                loads[machine] += inst.size(job);
            }
        }
        loads
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TargetMode {
    AtMost,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    WrongLength { expected: usize, found: usize },
    MachineOutOfRange { job: usize, machine: usize },
    Ineligible { job: usize, machine: usize },
    Overloaded { machine: usize, load: u64, target: u64 },
    LoadMismatch { machine: usize, load: u64, target: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub loads: Vec<u64>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(
    inst: &impl Eligibility,
    sched: &Schedule,
    target: Option<u64>,
    mode: TargetMode,
) -> ValidationReport {
    let mut violations = Vec::new();
    if sched.len() != inst.job_count() {
        violations.push(Violation::WrongLength {
            expected: inst.job_count(),
            found: sched.len(),
        });
    }
    for (job, &machine) in sched.assignment().iter().enumerate().take(inst.job_count()) {
        if machine >= inst.machine_count() {
            violations.push(Violation::MachineOutOfRange { job, machine });
        } else if !inst.is_eligible(job, machine) {
            violations.push(Violation::Ineligible { job, machine });
        }
    }
    let loads = sched.loads(inst);
    if let Some(target) = target {
        for (machine, &load) in loads.iter().enumerate() {
            match mode {
                TargetMode::AtMost if load > target => violations.push(Violation::Overloaded {
                    machine,
                    load,
                    target,
                }),
                TargetMode::Exact if load != target => {
                    violations.push(Violation::LoadMismatch {
                        machine,
                        load,
                        target,
                    })
                }
                _ => {}
            }
        }
    }
    ValidationReport { loads, violations }
}

pub fn makespan(inst: &impl Eligibility, sched: &Schedule) -> u64 {
    sched.loads(inst).into_iter().max().unwrap_or(0)
}

pub fn min_load(inst: &impl Eligibility, sched: &Schedule) -> u64 {
    sched.loads(inst).into_iter().min().unwrap_or(0)
}
