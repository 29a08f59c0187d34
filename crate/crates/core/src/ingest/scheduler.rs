//! Periodic feed polling under an injectable clock.
//!
//! Each source is polled at `t0` and then at `t0 + k * interval`. A tick
//! never starts before the previous tick of the same source finished; if
//! a tick overruns, the missed slots are skipped rather than queued.

use std::future::Future;

use async_trait::async_trait;
use chrono::{DateTime, Duration, Utc};
use parking_lot::Mutex;
use tokio::sync::watch;

use super::{FeedSource, IngestError, IngestReport};

#[async_trait]
pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;

    /// Waits until `t`. Returns `false` if the scheduler should stop instead.
    async fn sleep_until(&self, t: DateTime<Utc>) -> bool;
}

/// Virtual time that jumps forward on every sleep, up to an inclusive horizon.
pub struct SimulatedClock {
    now: Mutex<DateTime<Utc>>,
    horizon: DateTime<Utc>,
}

impl SimulatedClock {
    pub fn new(start: DateTime<Utc>, window: Duration) -> Self {
        Self { now: Mutex::new(start), horizon: start + window }
    }

    /// Moves time forward, e.g. to model a slow tick.
    pub fn advance(&self, by: Duration) {
        *self.now.lock() += by;
    }
}

#[async_trait]
impl Clock for SimulatedClock {
    fn now(&self) -> DateTime<Utc> {
        *self.now.lock()
    }

    async fn sleep_until(&self, t: DateTime<Utc>) -> bool {
        if t > self.horizon {
            return false;
        }
        let mut now = self.now.lock();
        if t > *now {
            *now = t;
        }
        true
    }
}

/// Wall-clock time; stops when the shutdown channel flips to `true`.
pub struct SystemClock {
    shutdown: watch::Receiver<bool>,
}

impl SystemClock {
    pub fn new(shutdown: watch::Receiver<bool>) -> Self {
        Self { shutdown }
    }
}

#[async_trait]
impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }

    async fn sleep_until(&self, t: DateTime<Utc>) -> bool {
        let mut shutdown = self.shutdown.clone();
        if *shutdown.borrow() {
            return false;
        }
        let wait = (t - Utc::now()).to_std().unwrap_or_default();
        tokio::select! {
            _ = tokio::time::sleep(wait) => !*shutdown.borrow(),
            _ = shutdown.changed() => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TickOutcome {
    pub source_id: String,
    pub due: DateTime<Utc>,
    pub result: Result<(usize, usize), String>,
}

/// Polls `sources` until the clock says stop; returns every tick's outcome.
///
/// `job` performs one fetch + ingest. Failures are logged and the source is
/// simply tried again at its next slot.
pub async fn run_scheduler<F, Fut>(sources: &[FeedSource], clock: &dyn Clock, mut job: F) -> Vec<TickOutcome>
where
    F: FnMut(&FeedSource, DateTime<Utc>) -> Fut,
    Fut: Future<Output = Result<IngestReport, IngestError>>,
{
    let t0 = clock.now();
    let mut next_due: Vec<DateTime<Utc>> = vec![t0; sources.len()];
    let mut log = Vec::new();
    while let Some((i, due)) = next_due.iter().copied().enumerate().min_by_key(|&(i, due)| (due, i)) {
        if !clock.sleep_until(due).await {
            break;
        }
        let source = &sources[i];
        let result = match job(source, due).await {
            Ok(report) => Ok((report.created, report.merged)),
            Err(e) => {
                tracing::warn!(source = %source.id, error = %e, "scheduled ingest failed");
                Err(e.to_string())
            }
        };
        log.push(TickOutcome { source_id: source.id.clone(), due, result });

        let interval = Duration::seconds(i64::try_from(source.interval_s.max(1)).unwrap_or(i64::MAX));
        let mut next = due + interval;
        let now = clock.now();
        while next < now {
            next += interval;
        }
        next_due[i] = next;
    }
    log
}
