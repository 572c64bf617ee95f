use serde::Serialize;

use super::AudioArtifact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaybackOutcome {
    Completed,
    Preempted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlaybackEntry {
    pub text: String,
    pub priority: i32,
    pub arrival_ms: u64,
    pub start_ms: u64,
    pub end_ms: u64,
    pub outcome: PlaybackOutcome,
}

struct Queued {
    artifact: AudioArtifact,
    arrival_ms: u64,
    seq: u64,
}

struct Playing {
    item: Queued,
    start_ms: u64,
    end_ms: u64,
}

/// Serialized audio sink on a simulated clock. One artifact plays at a time,
/// picked by (priority, created_at, arrival order); a priority-0 arrival
/// cuts off anything less urgent that is playing.
#[derive(Default)]
pub struct PlaybackQueue {
    pending: Vec<Queued>,
    playing: Option<Playing>,
    log: Vec<PlaybackEntry>,
    now_ms: u64,
    seq: u64,
}

impl PlaybackQueue {
    pub fn new() -> Self {
        Self::default()
    }

    fn finish(&mut self, p: Playing, end_ms: u64, outcome: PlaybackOutcome) {
        self.log.push(PlaybackEntry {
            text: p.item.artifact.text,
            priority: p.item.artifact.priority,
            arrival_ms: p.item.arrival_ms,
            start_ms: p.start_ms,
            end_ms,
            outcome,
        });
    }

    fn start_next(&mut self) {
        if self.playing.is_some() || self.pending.is_empty() {
            return;
        }
        let idx = (0..self.pending.len())
            .min_by_key(|&i| {
                let q = &self.pending[i];
                (q.artifact.priority, q.artifact.created_at_ms, q.seq)
            })
            .expect("pending is non-empty");
        let item = self.pending.swap_remove(idx);
        let start_ms = self.now_ms.max(item.arrival_ms);
        let end_ms = start_ms + item.artifact.duration_ms;
        self.playing = Some(Playing {
            item,
            start_ms,
            end_ms,
        });
    }

    /// Moves the clock to `t_ms`, completing and starting playback on the way.
    pub fn advance_to(&mut self, t_ms: u64) {
        loop {
            self.start_next();
            match &self.playing {
                Some(p) if p.end_ms <= t_ms => {
                    let p = self.playing.take().expect("checked above");
                    self.now_ms = p.end_ms;
                    let end = p.end_ms;
                    self.finish(p, end, PlaybackOutcome::Completed);
                }
                _ => break,
            }
        }
        self.now_ms = self.now_ms.max(t_ms);
    }

    pub fn submit(&mut self, artifact: AudioArtifact, arrival_ms: u64) {
        self.advance_to(arrival_ms);
        let urgent = artifact.priority == 0;
        self.pending.push(Queued {
            artifact,
            arrival_ms,
            seq: self.seq,
        });
        self.seq += 1;
        if urgent
            && self
                .playing
                .as_ref()
                .is_some_and(|p| p.item.artifact.priority >= 1)
        {
            let p = self.playing.take().expect("checked above");
            self.finish(p, self.now_ms, PlaybackOutcome::Preempted);
        }
        self.start_next();
    }

    /// Plays everything still queued to completion.
    pub fn drain(&mut self) {
        while self.playing.is_some() || !self.pending.is_empty() {
            self.start_next();
            let end = self.playing.as_ref().map_or(self.now_ms, |p| p.end_ms);
            self.advance_to(end);
        }
    }

    pub fn log(&self) -> &[PlaybackEntry] {
        &self.log
    }

    pub fn into_log(self) -> Vec<PlaybackEntry> {
        self.log
    }
}

/// Runs a whole arrival schedule `(arrival_ms, artifact)` and returns the log.
pub fn playback_queue_run(mut arrivals: Vec<(u64, AudioArtifact)>) -> Vec<PlaybackEntry> {
    arrivals.sort_by_key(|(t, _)| *t);
    let mut q = PlaybackQueue::new();
    for (t, a) in arrivals {
        q.submit(a, t);
    }
    q.drain();
    q.into_log()
}
