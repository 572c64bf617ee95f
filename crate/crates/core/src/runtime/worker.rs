use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;

use tokio::sync::oneshot;

use crate::ingest::Frame;
use crate::vision::{run_stage, Stage, StageKind, StageResult};

type Job = (Arc<Frame>, oneshot::Sender<StageResult>);

/// Dedicated thread per stage. A stage still busy with an earlier frame is
/// not interrupted; new frames skip it until it finishes.
pub(crate) struct StageWorker {
    kind: StageKind,
    busy: Arc<AtomicBool>,
    jobs: mpsc::Sender<Job>,
}

impl StageWorker {
    pub(crate) fn spawn(stage: Arc<dyn Stage>) -> std::io::Result<Self> {
        let kind = stage.kind();
        let busy = Arc::new(AtomicBool::new(false));
        let (jobs, rx) = mpsc::channel::<Job>();
        let flag = busy.clone();
        std::thread::Builder::new()
            .name(format!("stage-{kind}"))
            .spawn(move || {
                while let Ok((frame, reply)) = rx.recv() {
                    let result = run_stage(stage.as_ref(), &frame);
                    flag.store(false, Ordering::SeqCst);
                    // receiver gone means the frame already timed out
                    let _ = reply.send(result);
                }
            })?;
        Ok(Self { kind, busy, jobs })
    }

    pub(crate) fn kind(&self) -> StageKind {
        self.kind
    }

    /// `None` when the worker is still occupied.
    pub(crate) fn dispatch(&self, frame: Arc<Frame>) -> Option<oneshot::Receiver<StageResult>> {
        if self
            .busy
            .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
            .is_err()
        {
            return None;
        }
        let (tx, rx) = oneshot::channel();
        if self.jobs.send((frame, tx)).is_err() {
            self.busy.store(false, Ordering::SeqCst);
            return None;
        }
        Some(rx)
    }
}
