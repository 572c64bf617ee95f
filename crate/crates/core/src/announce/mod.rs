//! Turns stage results into spoken feedback: phrasing and priorities,
//! cooldown-based deduplication, text-to-speech synthesis with an offline
//! transcript fallback, and a serialized playback queue.

mod cooldown;
mod playback;
mod render;
mod tts;

pub use cooldown::{filter_cooldown, CooldownRegistry, DEFAULT_COOLDOWN_MS};
pub use playback::{playback_queue_run, PlaybackEntry, PlaybackOutcome, PlaybackQueue};
pub use render::{render_announcements, AnnouncePolicy, Announcement};
pub use tts::{
    duration_estimate_ms, ArtifactPayload, AudioArtifact, LanguageSet, SinkConfig, TtsClient,
    TtsError, TtsMode, TtsRequest,
};
