//! JSON instance and schedule files.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rasched::model::{as_interval, rai_to_restricted, resource_to_restricted};
use rasched::{InstanceError, RaiInstance, RaiJob, ResourceInstance, ResourceJob, RestrictedInstance, RestrictedJob};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaiJobEntry {
    pub id: usize,
    pub size: u64,
    pub first: usize,
    pub last: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestrictedJobEntry {
    pub id: usize,
    pub size: u64,
    pub eligible: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceJobEntry {
    pub id: usize,
    pub size: u64,
    pub demand: Vec<u64>,
}

/// An instance file. Rai and restricted files give the machine count;
/// resource files list one capacity vector per machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceFile {
    Rai {
        machines: usize,
        jobs: Vec<RaiJobEntry>,
    },
    Restricted {
        machines: usize,
        jobs: Vec<RestrictedJobEntry>,
    },
    Resource {
        resources: usize,
        machines: Vec<Vec<u64>>,
        jobs: Vec<ResourceJobEntry>,
    },
}

/// A validated instance in whichever model the file used.
#[derive(Debug, Clone)]
pub enum LoadedInstance {
    Rai(RaiInstance),
    Restricted(RestrictedInstance),
    Resource(ResourceInstance),
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Canonical compact JSON; the digest is taken over this text.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("instance files always serialize")
    }

    pub fn pretty(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("instance files always serialize");
        text.push('\n');
        text
    }

    pub fn digest(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn load(&self) -> Result<LoadedInstance, InstanceError> {
        Ok(match self {
            InstanceFile::Rai { machines, jobs } => LoadedInstance::Rai(RaiInstance::new(
                *machines,
                jobs.iter()
                    .map(|j| RaiJob {
                        id: j.id,
                        size: j.size,
                        first: j.first,
                        last: j.last,
                    })
                    .collect(),
            )?),
            InstanceFile::Restricted { machines, jobs } => LoadedInstance::Restricted(RestrictedInstance::new(
                *machines,
                jobs.iter()
                    .map(|j| RestrictedJob {
                        id: j.id,
                        size: j.size,
                        eligible: j.eligible.clone(),
                    })
                    .collect(),
            )?),
            InstanceFile::Resource {
                resources,
                machines,
                jobs,
            } => LoadedInstance::Resource(ResourceInstance::new(
                *resources,
                machines.clone(),
                jobs.iter()
                    .map(|j| ResourceJob {
                        id: j.id,
                        size: j.size,
                        demand: j.demand.clone(),
                    })
                    .collect(),
            )?),
        })
    }

    pub fn from_rai(inst: &RaiInstance) -> Self {
        InstanceFile::Rai {
            machines: rasched::Eligibility::machine_count(inst),
            jobs: inst
                .jobs()
                .iter()
                .map(|j| RaiJobEntry {
                    id: j.id,
                    size: j.size,
                    first: j.first,
                    last: j.last,
                })
                .collect(),
        }
    }

    pub fn from_restricted(inst: &RestrictedInstance) -> Self {
        InstanceFile::Restricted {
            machines: rasched::Eligibility::machine_count(inst),
            jobs: inst
                .jobs()
                .iter()
                .map(|j| RestrictedJobEntry {
                    id: j.id,
                    size: j.size,
                    eligible: j.eligible.clone(),
                })
                .collect(),
        }
    }

    pub fn from_resource(inst: &ResourceInstance) -> Self {
        InstanceFile::Resource {
            resources: inst.resource_count(),
            machines: inst.capacities().to_vec(),
            jobs: inst
                .jobs()
                .iter()
                .map(|j| ResourceJobEntry {
                    id: j.id,
                    size: j.size,
                    demand: j.demand.clone(),
                })
                .collect(),
        }
    }
}

impl LoadedInstance {
    /// Explicit eligibility sets.
    pub fn restricted(&self) -> Result<RestrictedInstance, InstanceError> {
        match self {
            LoadedInstance::Rai(r) => Ok(rai_to_restricted(r)),
            LoadedInstance::Restricted(r) => Ok(r.clone()),
            LoadedInstance::Resource(r) => resource_to_restricted(r),
        }
    }

    /// The interval view, if every eligible set is contiguous.
    pub fn interval(&self) -> Result<Option<RaiInstance>, InstanceError> {
        match self {
            LoadedInstance::Rai(r) => Ok(Some(r.clone())),
            other => Ok(as_interval(&other.restricted()?)),
        }
    }
}

/// A schedule file: the job-to-machine array, optionally inside a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub schedule: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_every_format() {
        let texts = [
            r#"{"format":"rai","machines":2,"jobs":[{"id":0,"size":3,"first":0,"last":1}]}"#,
            r#"{"format":"restricted","machines":3,"jobs":[{"id":0,"size":1,"eligible":[0,2]}]}"#,
            r#"{"format":"resource","resources":1,"machines":[[2],[0]],"jobs":[{"id":0,"size":4,"demand":[1]}]}"#,
        ];
        for text in texts {
            let f = InstanceFile::parse(text).unwrap();
            assert_eq!(f.canonical(), text);
            assert_eq!(InstanceFile::parse(&f.pretty()).unwrap(), f);
            assert!(f.load().is_ok());
        }
    }

    #[test]
    fn rejects_unknown_format_and_fields() {
        assert!(InstanceFile::parse(r#"{"format":"other","machines":1,"jobs":[]}"#).is_err());
        assert!(InstanceFile::parse(r#"{"format":"rai","machines":1,"jobs":[],"x":1}"#).is_err());
        assert!(InstanceFile::parse(r#"{"format":"rai","machines":1,"jobs":[{"id":0,"size":1.5,"first":0,"last":0}]}"#).is_err());
    }
}
