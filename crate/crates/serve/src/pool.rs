//! Worker pool implementing the high-stability serving profile: N
//! independent pipeline instances behind a bounded queue, with per-request
//! instance affinity and 503 on saturation.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use tokio::sync::Semaphore;

/// Pool failure modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PoolError {
    /// Queue depth exceeded; clients should retry later.
    Saturated,
    /// The job panicked or the runtime is shutting down.
    Join(String),
}

pub struct WorkerPool {
    permits: Arc<Semaphore>,
    free_instances: Arc<Mutex<Vec<usize>>>,
    queued: Arc<AtomicUsize>,
    max_queue: usize,
    parallelism: usize,
}

impl WorkerPool {
    pub fn new(parallelism: usize, max_queue: usize) -> Self {
        assert!(parallelism >= 1, "parallelism must be >= 1");
        Self {
            permits: Arc::new(Semaphore::new(parallelism)),
            free_instances: Arc::new(Mutex::new((0..parallelism).collect())),
            queued: Arc::new(AtomicUsize::new(0)),
            max_queue,
            parallelism,
        }
    }

    pub fn parallelism(&self) -> usize {
        self.parallelism
    }

    /// Runs a blocking job on one checked-out instance. The closure receives
    /// the instance id; the instance returns to the pool afterwards.
    pub async fn run<F, T>(&self, job: F) -> Result<T, PoolError>
    where
        F: FnOnce(usize) -> T + Send + 'static,
        T: Send + 'static,
    {
        let permit = match self.permits.clone().try_acquire_owned() {
            Ok(permit) => permit,
            Err(_) => {
                // All instances busy: wait in the bounded queue.
                if self.queued.load(Ordering::SeqCst) >= self.max_queue {
                    return Err(PoolError::Saturated);
                }
                self.queued.fetch_add(1, Ordering::SeqCst);
                let acquired = self.permits.clone().acquire_owned().await;
                self.queued.fetch_sub(1, Ordering::SeqCst);
                acquired.map_err(|e| PoolError::Join(e.to_string()))?
            }
        };

        let instance = self
            .free_instances
            .lock()
            .expect("pool lock poisoned")
            .pop()
            .expect("permit held implies a free instance");

        let free_instances = self.free_instances.clone();
        let result = tokio::task::spawn_blocking(move || job(instance)).await;

        free_instances
            .lock()
            .expect("pool lock poisoned")
            .push(instance);
        drop(permit);

        result.map_err(|e| PoolError::Join(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[tokio::test]
    async fn serialized_requests_both_succeed() {
        let pool = Arc::new(WorkerPool::new(1, 4));
        let a = pool.run(|id| id);
        let b = pool.run(|id| id);
        let (ra, rb) = tokio::join!(a, b);
        assert_eq!(ra.unwrap(), 0);
        assert_eq!(rb.unwrap(), 0);
    }

    #[tokio::test]
    async fn saturation_yields_error() {
        let pool = Arc::new(WorkerPool::new(1, 0));
        let blocker = {
            let pool = pool.clone();
            tokio::spawn(async move {
                pool.run(|_| std::thread::sleep(Duration::from_millis(300)))
                    .await
            })
        };
        tokio::time::sleep(Duration::from_millis(50)).await;
        // Queue depth 0 and the only instance busy: immediate saturation.
        let second = pool.run(|_| ()).await;
        assert_eq!(second.unwrap_err(), PoolError::Saturated);
        blocker.await.unwrap().unwrap();
    }

    #[tokio::test]
    async fn instances_are_distinct_under_load() {
        let pool = Arc::new(WorkerPool::new(2, 8));
        let mut handles = Vec::new();
        for _ in 0..2 {
            let pool = pool.clone();
            handles.push(tokio::spawn(async move {
                pool.run(|id| {
                    std::thread::sleep(Duration::from_millis(100));
                    id
                })
                .await
            }));
        }
        let mut ids = Vec::new();
        for h in handles {
            ids.push(h.await.unwrap().unwrap());
        }
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1]);
    }
}
