use std::time::{Duration, Instant};

/// Millisecond monotonic clock anchored at construction.
#[derive(Debug, Clone, Copy)]
pub struct MonoClock {
    epoch: Instant,
}

impl MonoClock {
    pub fn new() -> Self {
        Self {
            epoch: Instant::now(),
        }
    }

    pub fn now_ms(&self) -> u64 {
        self.epoch.elapsed().as_millis() as u64
    }

    /// Fractional milliseconds elapsed since `start`.
    pub fn elapsed_ms(start: Instant) -> f64 {
        duration_ms(start.elapsed())
    }
}

impl Default for MonoClock {
    fn default() -> Self {
        Self::new()
    }
}

pub fn duration_ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}
