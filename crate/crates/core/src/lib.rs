//! Assistive-vision pipeline runtime.
//!
//! A simulated camera device streams JPEG frames over HTTP multipart
//! (`camsim`), the host side parses and buffers them with drop-oldest
//! backpressure (`ingest`), detection stages run per frame (`vision`), and
//! results become prioritized, cooldown-gated spoken announcements
//! (`announce`). `runtime` wires the stages together, writes the per-frame
//! event log and computes latency statistics.

pub mod announce;
pub mod camsim;
pub mod clock;
pub mod ingest;
pub mod runtime;
pub mod synth;
pub mod vision;

pub use clock::MonoClock;
