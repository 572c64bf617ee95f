//! Host-side ingestion: MJPEG stream client, incremental multipart parser,
//! JPEG decoding into [`Frame`]s and the drop-oldest [`FrameBus`].

mod bus;
mod frame;
mod multipart;
mod session;

pub use bus::{BusStats, FrameBus, PushOutcome};
pub use frame::{decode_frame, DecodeError, Frame};
pub use multipart::{
    boundary_from_content_type, parse_multipart, MultipartError, MultipartParser, ParseOutcome,
    DEFAULT_SCAN_BUDGET,
};
pub use session::{
    backoff_delay, replay_dir, replay_source_set, stream_session, SessionOptions, SessionReport,
    Source,
};
