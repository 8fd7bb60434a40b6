//! Persistent worker threads that run one broadcast job at a time.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;

use crate::error::{Error, Result};

type Job = dyn Fn(usize) + Sync;

struct Slot {
    generation: u64,
    job: Option<*const Job>,
    pending: usize,
    panicked: bool,
    stop: bool,
}

// The raw job pointer is only dereferenced while `broadcast` is blocked
// waiting for `pending` to reach zero, so the borrowed closure outlives
// every use.
unsafe impl Send for Slot {}

struct Shared {
    slot: Mutex<Slot>,
    start: Condvar,
    finished: Condvar,
}

pub(crate) struct WorkerPool {
    shared: Arc<Shared>,
    handles: Vec<JoinHandle<()>>,
}

impl WorkerPool {
    /// Spawns `n` workers. `init(tid)` runs once on each worker before it
    /// accepts jobs; its error aborts construction.
    pub(crate) fn new(
        n: usize,
        init: impl Fn(usize) -> Result<()> + Send + Sync + 'static,
    ) -> Result<Self> {
        let shared = Arc::new(Shared {
            slot: Mutex::new(Slot {
                generation: 0,
                job: None,
                pending: 0,
                panicked: false,
                stop: false,
            }),
            start: Condvar::new(),
            finished: Condvar::new(),
        });
        let init = Arc::new(init);
        let (tx, rx) = std::sync::mpsc::channel();
        let mut pool = WorkerPool {
            shared: Arc::clone(&shared),
            handles: Vec::with_capacity(n),
        };
        for tid in 0..n {
            let shared = Arc::clone(&shared);
            let init = Arc::clone(&init);
            let tx = tx.clone();
            let handle = std::thread::Builder::new()
                .name(format!("aidsched-{tid}"))
                .spawn(move || {
                    let ok = init(tid);
                    let failed = ok.is_err();
                    let _ = tx.send(ok);
                    if !failed {
                        worker_loop(&shared, tid);
                    }
                })
                .map_err(Error::Spawn)?;
            pool.handles.push(handle);
        }
        drop(tx);
        for _ in 0..n {
            match rx.recv() {
                Ok(Ok(())) => {}
                Ok(Err(e)) => return Err(e),
                Err(_) => return Err(Error::InvalidRuntime("worker exited during startup".into())),
            }
        }
        Ok(pool)
    }

    pub(crate) fn len(&self) -> usize {
        self.handles.len()
    }

    /// Runs `job(tid)` on every worker and returns once all have finished.
    /// Returns false if some invocation panicked.
    pub(crate) fn broadcast(&self, job: &(dyn Fn(usize) + Sync)) -> bool {
        let ptr: *const Job = unsafe { std::mem::transmute::<&(dyn Fn(usize) + Sync), &'static Job>(job) };
        let mut slot = self.shared.slot.lock().unwrap();
        slot.job = Some(ptr);
        slot.pending = self.handles.len();
        slot.panicked = false;
        slot.generation += 1;
        self.shared.start.notify_all();
        while slot.pending > 0 {
            slot = self.shared.finished.wait(slot).unwrap();
        }
        slot.job = None;
        !slot.panicked
    }
}

fn worker_loop(shared: &Shared, tid: usize) {
    let mut seen = 0;
    loop {
        let job = {
            let mut slot = shared.slot.lock().unwrap();
            while slot.generation == seen && !slot.stop {
                slot = shared.start.wait(slot).unwrap();
            }
            if slot.stop {
                return;
            }
            seen = slot.generation;
            slot.job.expect("job set with generation bump")
        };
        let job = unsafe { &*job };
        let ok = catch_unwind(AssertUnwindSafe(|| job(tid))).is_ok();
        let mut slot = shared.slot.lock().unwrap();
        if !ok {
            slot.panicked = true;
        }
        slot.pending -= 1;
        if slot.pending == 0 {
            shared.finished.notify_all();
        }
    }
}

impl Drop for WorkerPool {
    fn drop(&mut self) {
        {
            let mut slot = self.shared.slot.lock().unwrap();
            slot.stop = true;
            self.shared.start.notify_all();
        }
        for h in self.handles.drain(..) {
            let _ = h.join();
        }
    }
}
