//! MJPEG multipart wire format.
//!
//! Each part is `\r\n--<boundary>\r\nContent-Type: image/jpeg\r\nContent-Length: <n>\r\n\r\n<payload>`
//! and a finite stream ends with `\r\n--<boundary>--\r\n`.

use super::CamError;

pub const DEFAULT_BOUNDARY: &str = "drishtiframe";
pub const DEFAULT_CAPTURE_PATH: &str = "/capture";
pub const DEFAULT_STREAM_PATH: &str = "/stream";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamConfig {
    pub boundary: String,
    pub port: u16,
    pub capture_path: String,
    pub stream_path: String,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            boundary: DEFAULT_BOUNDARY.to_string(),
            port: 8080,
            capture_path: DEFAULT_CAPTURE_PATH.to_string(),
            stream_path: DEFAULT_STREAM_PATH.to_string(),
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<(), CamError> {
        validate_boundary(&self.boundary)
    }

    pub fn content_type(&self) -> String {
        format!("multipart/x-mixed-replace; boundary={}", self.boundary)
    }
}

fn is_bchar(c: char) -> bool {
    c.is_ascii_alphanumeric() || "'()+_,-./:=? ".contains(c)
}

/// RFC 2046 boundary rules, plus the boundary must not collide with the
/// part header block we emit.
pub fn validate_boundary(boundary: &str) -> Result<(), CamError> {
    let bad = |why| Err(CamError::InvalidBoundary(boundary.to_string(), why));
    if boundary.is_empty() || boundary.len() > 70 {
        return bad("length must be 1..=70");
    }
    if !boundary.chars().all(is_bchar) {
        return bad("contains characters not allowed in a MIME boundary");
    }
    if boundary.ends_with(' ') {
        return bad("must not end with a space");
    }
    // Content-Length digits vary per part; checking the fixed header text and
    // a digit-only boundary covers every possible header block.
    let fixed = "\r\nContent-Type: image/jpeg\r\nContent-Length: \r\n\r\n";
    if fixed.contains(boundary) || boundary.bytes().all(|b| b.is_ascii_digit()) {
        return bad("occurs inside the part header block");
    }
    Ok(())
}

pub fn part_header(boundary: &str, len: usize) -> String {
    format!("\r\n--{boundary}\r\nContent-Type: image/jpeg\r\nContent-Length: {len}\r\n\r\n")
}

/// Serializes one part: header block immediately followed by the payload.
pub fn encode_part(boundary: &str, payload: &[u8]) -> Vec<u8> {
    let header = part_header(boundary, payload.len());
    let mut out = Vec::with_capacity(header.len() + payload.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(payload);
    out
}

pub fn terminator(boundary: &str) -> Vec<u8> {
    format!("\r\n--{boundary}--\r\n").into_bytes()
}

/// A complete finite stream: every part followed by the terminator.
pub fn encode_stream<P: AsRef<[u8]>>(boundary: &str, payloads: &[P]) -> Vec<u8> {
    let mut out = Vec::new();
    for p in payloads {
        out.extend_from_slice(&encode_part(boundary, p.as_ref()));
    }
    out.extend_from_slice(&terminator(boundary));
    out
}
