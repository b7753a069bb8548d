//! Background jobs on a bounded worker pool. Clients poll by id.

use std::collections::HashMap;
use std::future::Future;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::error::{ErrorBody, Result, ServiceError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Expand,
    Edit,
    Vary,
    Blend,
    Analyze,
    Thumbnail,
    Map,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Partial,
    Done,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Partial | JobState::Done | JobState::Failed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub kind: JobKind,
    pub project_id: Option<String>,
    pub state: JobState,
    pub progress: f64,
    pub result_ids: Vec<String>,
    pub error: Option<ErrorBody>,
    /// Non-fatal problems, e.g. why a result is partial.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl Job {
    /// `result_ids` is non-empty exactly when the job ended done or partial.
    pub fn check(&self) -> std::result::Result<(), String> {
        let has = !self.result_ids.is_empty();
        let should = matches!(self.state, JobState::Done | JobState::Partial);
        if has != should {
            return Err(format!("{:?} job with {} results", self.state, self.result_ids.len()));
        }
        if !(0.0..=1.0).contains(&self.progress) {
            return Err(format!("progress {} outside [0, 1]", self.progress));
        }
        Ok(())
    }
}

/// What a finished job hands back.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JobOutput {
    pub result_ids: Vec<String>,
    pub partial: bool,
    pub warnings: Vec<String>,
}

impl JobOutput {
    pub fn done(ids: Vec<String>) -> Self {
        Self { result_ids: ids, ..Self::default() }
    }
}

type Table = Arc<RwLock<HashMap<String, Job>>>;

/// Lets a running job report progress.
#[derive(Clone)]
pub struct Progress {
    table: Table,
    id: String,
}

impl Progress {
    pub fn set(&self, fraction: f64) {
        if let Some(job) = self.table.write().expect("job table poisoned").get_mut(&self.id) {
            job.progress = fraction.clamp(job.progress, 1.0);
        }
    }
}

#[derive(Clone)]
pub struct JobManager {
    table: Table,
    workers: Arc<Semaphore>,
}

impl JobManager {
    pub fn new(workers: usize) -> Self {
        Self { table: Arc::default(), workers: Arc::new(Semaphore::new(workers.max(1))) }
    }

    pub fn get(&self, id: &str) -> Result<Job> {
        self.table
            .read()
            .expect("job table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::not_found("job", id))
    }

    pub fn list(&self) -> Vec<Job> {
        let mut jobs: Vec<Job> = self.table.read().expect("job table poisoned").values().cloned().collect();
        jobs.sort_by(|a, b| a.id.cmp(&b.id));
        jobs
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut Job)) {
        if let Some(job) = self.table.write().expect("job table poisoned").get_mut(id) {
            f(job);
        }
    }

    /// Queues `work`; it starts once a worker is free. Must be called inside a
    /// tokio runtime.
    pub fn submit<F, Fut>(&self, kind: JobKind, project_id: Option<String>, work: F) -> Job
    where
        F: FnOnce(Progress) -> Fut + Send + 'static,
        Fut: Future<Output = Result<JobOutput>> + Send + 'static,
    {
        let id = format!("job_{}", uuid::Uuid::new_v4().simple());
        let job = Job {
            id: id.clone(),
            kind,
            project_id,
            state: JobState::Queued,
            progress: 0.0,
            result_ids: Vec::new(),
            error: None,
            warnings: Vec::new(),
        };
        self.table.write().expect("job table poisoned").insert(id.clone(), job.clone());
        let this = self.clone();
        tokio::spawn(async move {
            let Ok(_permit) = this.workers.clone().acquire_owned().await else {
                this.update(&id, |j| {
                    j.state = JobState::Failed;
                    j.error = Some(ServiceError::Shutdown.body());
                });
                return;
            };
            this.update(&id, |j| j.state = JobState::Running);
            let progress = Progress { table: this.table.clone(), id: id.clone() };
            let outcome = tokio::spawn(work(progress)).await;
            this.update(&id, |j| match outcome {
                Ok(Ok(out)) if !out.result_ids.is_empty() => {
                    j.state = if out.partial { JobState::Partial } else { JobState::Done };
                    j.progress = 1.0;
                    j.result_ids = out.result_ids;
                    j.warnings = out.warnings;
                }
                Ok(Ok(out)) => {
                    j.state = JobState::Failed;
                    j.warnings = out.warnings;
                    j.error = Some(ErrorBody {
                        code: "empty_result".into(),
                        message: "the job produced nothing".into(),
                        details: serde_json::Value::Null,
                    });
                }
                Ok(Err(e)) => {
                    tracing::warn!(job = %j.id, error = %e, "job failed");
                    j.state = JobState::Failed;
                    j.error = Some(e.body());
                }
                Err(panic) => {
                    j.state = JobState::Failed;
                    j.error = Some(ErrorBody {
                        code: "internal".into(),
                        message: format!("job aborted: {panic}"),
                        details: serde_json::Value::Null,
                    });
                }
            });
        });
        job
    }

    /// Polls until the job is terminal.
    pub async fn wait(&self, id: &str) -> Result<Job> {
        loop {
            let job = self.get(id)?;
            if job.state.is_terminal() {
                return Ok(job);
            }
            tokio::time::sleep(std::time::Duration::from_millis(10)).await;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test]
    async fn lifecycle_and_invariant() {
        let jobs = JobManager::new(2);
        let ok = jobs.submit(JobKind::Analyze, None, |p| async move {
            p.set(0.5);
            Ok(JobOutput::done(vec!["a".into()]))
        });
        assert_eq!(ok.state, JobState::Queued);
        let ok = jobs.wait(&ok.id).await.unwrap();
        assert_eq!(ok.state, JobState::Done);
        assert_eq!(ok.progress, 1.0);
        ok.check().unwrap();

        let partial = jobs.submit(JobKind::Expand, None, |_| async {
            Ok(JobOutput { result_ids: vec!["x".into()], partial: true, warnings: vec!["dropped".into()] })
        });
        let partial = jobs.wait(&partial.id).await.unwrap();
        assert_eq!(partial.state, JobState::Partial);
        partial.check().unwrap();

        let failed = jobs.submit(JobKind::Map, None, |_| async { Err(ServiceError::BadRequest("no".into())) });
        let failed = jobs.wait(&failed.id).await.unwrap();
        assert_eq!(failed.state, JobState::Failed);
        assert_eq!(failed.error.as_ref().unwrap().code, "bad_request");
        failed.check().unwrap();

        let empty = jobs.submit(JobKind::Map, None, |_| async { Ok(JobOutput::default()) });
        let empty = jobs.wait(&empty.id).await.unwrap();
        assert_eq!(empty.state, JobState::Failed);
        empty.check().unwrap();
    }

    #[tokio::test]
    async fn panics_fail_the_job() {
        let jobs = JobManager::new(1);
        let j = jobs.submit(JobKind::Vary, None, |_| async { panic!("boom") });
        let j = jobs.wait(&j.id).await.unwrap();
        assert_eq!(j.state, JobState::Failed);
        assert_eq!(j.error.unwrap().code, "internal");
    }

    #[tokio::test]
    async fn pool_bounds_concurrency() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let jobs = JobManager::new(2);
        let live = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let ids: Vec<String> = (0..8)
            .map(|i| {
                let (live, peak) = (live.clone(), peak.clone());
                jobs.submit(JobKind::Analyze, None, move |_| async move {
                    let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    tokio::time::sleep(std::time::Duration::from_millis(20)).await;
                    live.fetch_sub(1, Ordering::SeqCst);
                    Ok(JobOutput::done(vec![i.to_string()]))
                })
                .id
            })
            .collect();
        for id in ids {
            assert_eq!(jobs.wait(&id).await.unwrap().state, JobState::Done);
        }
        assert_eq!(peak.load(Ordering::SeqCst), 2);
    }
}
