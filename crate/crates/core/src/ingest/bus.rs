use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::Duration;

use tokio::sync::Notify;

use super::Frame;

/// Items carried by the bus report an id so evictions can be named.
pub trait Sequenced {
    fn seq(&self) -> u64;
}

impl Sequenced for Frame {
    fn seq(&self) -> u64 {
        self.id
    }
}

impl Sequenced for u64 {
    fn seq(&self) -> u64 {
        *self
    }
}

impl<T: Sequenced> Sequenced for Arc<T> {
    fn seq(&self) -> u64 {
        (**self).seq()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushOutcome {
    Stored,
    StoredDroppingOldest(u64),
}

/// Consistent snapshot of the bus counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct BusStats {
    pub capacity: usize,
    pub occupancy: usize,
    pub enqueued: u64,
    pub dequeued: u64,
    pub dropped: u64,
}

impl BusStats {
    /// `enqueued = dequeued + dropped + occupancy`
    pub fn is_conserved(&self) -> bool {
        self.enqueued == self.dequeued + self.dropped + self.occupancy as u64
    }
}

struct Inner<T> {
    queue: VecDeque<T>,
    closed: bool,
    enqueued: u64,
    dequeued: u64,
    dropped: u64,
}

/// Bounded frame queue with drop-oldest backpressure.
///
/// `push` never blocks: when full, the oldest occupant is evicted. Counters
/// live under the same lock as the queue, so every snapshot satisfies the
/// conservation identity.
pub struct FrameBus<T> {
    capacity: usize,
    inner: Mutex<Inner<T>>,
    available: Condvar,
    item_ready: Notify,
    space_ready: Notify,
}

impl<T: Sequenced> FrameBus<T> {
    pub const DEFAULT_CAPACITY: usize = 4;

    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "bus capacity must be positive");
        Self {
            capacity,
            inner: Mutex::new(Inner {
                queue: VecDeque::with_capacity(capacity),
                closed: false,
                enqueued: 0,
                dequeued: 0,
                dropped: 0,
            }),
            available: Condvar::new(),
            item_ready: Notify::new(),
            space_ready: Notify::new(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, Inner<T>> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&self, item: T) -> PushOutcome {
        let outcome = {
            let mut g = self.lock();
            let outcome = if g.queue.len() == self.capacity {
                let old = g.queue.pop_front().expect("full queue has a front");
                g.dropped += 1;
                PushOutcome::StoredDroppingOldest(old.seq())
            } else {
                PushOutcome::Stored
            };
            g.queue.push_back(item);
            g.enqueued += 1;
            outcome
        };
        self.available.notify_one();
        self.item_ready.notify_one();
        outcome
    }

    /// Waits for a free slot before pushing. Used by lossless replay sources.
    pub async fn push_when_space(&self, item: T) {
        loop {
            let notified = self.space_ready.notified();
            tokio::pin!(notified);
            notified.as_mut().enable();
            {
                let g = self.lock();
                if g.queue.len() < self.capacity || g.closed {
                    drop(g);
                    self.push(item);
                    return;
                }
            }
            notified.await;
        }
    }

    fn take(&self, g: &mut Inner<T>) -> Option<T> {
        let item = g.queue.pop_front();
        if item.is_some() {
            g.dequeued += 1;
            self.space_ready.notify_one();
        }
        item
    }

    pub fn try_pop(&self) -> Option<T> {
        let mut g = self.lock();
        self.take(&mut g)
    }

    /// Blocks the calling thread for up to `timeout`.
    pub fn pop_timeout(&self, timeout: Duration) -> Option<T> {
        let g = self.lock();
        let (mut g, _) = self
            .available
            .wait_timeout_while(g, timeout, |inner| inner.queue.is_empty() && !inner.closed)
            .unwrap_or_else(|e| e.into_inner());
        self.take(&mut g)
    }

    /// Waits for the next item; `None` once the bus is closed and drained.
    pub async fn pop(&self) -> Option<T> {
        loop {
            let notified = self.item_ready.notified();
            tokio::pin!(notified);
            notified.as_mut().enable();
            {
                let mut g = self.lock();
                if let Some(item) = self.take(&mut g) {
                    return Some(item);
                }
                if g.closed {
                    return None;
                }
            }
            notified.await;
        }
    }

    /// Marks the producer side finished; consumers drain what is left.
    pub fn close(&self) {
        self.lock().closed = true;
        self.available.notify_all();
        self.item_ready.notify_one();
        self.space_ready.notify_one();
    }

    pub fn is_closed(&self) -> bool {
        self.lock().closed
    }

    pub fn stats(&self) -> BusStats {
        let g = self.lock();
        BusStats {
            capacity: self.capacity,
            occupancy: g.queue.len(),
            enqueued: g.enqueued,
            dequeued: g.dequeued,
            dropped: g.dropped,
        }
    }

    pub fn ids(&self) -> Vec<u64> {
        self.lock().queue.iter().map(Sequenced::seq).collect()
    }
}
