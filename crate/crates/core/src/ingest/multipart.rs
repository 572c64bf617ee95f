use bytes::{Buf, Bytes, BytesMut};
use memchr::memmem;

/// Bytes the parser will scan for a delimiter before giving up.
pub const DEFAULT_SCAN_BUDGET: usize = 16 * 1024 * 1024;
const MAX_HEADER_BLOCK: usize = 16 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MultipartError {
    #[error("malformed part: {0}")]
    MalformedPart(String),
    #[error("no boundary delimiter found within {0} bytes")]
    BoundaryNotFound(usize),
    #[error("stream ended in the middle of a part")]
    TruncatedPart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    SeekDelimiter,
    Headers,
    Body(Option<usize>),
    Done,
    Failed,
}

/// Incremental `multipart/x-mixed-replace` parser.
///
/// Feed arbitrary chunks with [`push`](Self::push), drain complete bodies
/// with [`next_part`](Self::next_part), and call [`finish`](Self::finish)
/// once the byte stream ends. Output does not depend on how the input was
/// chunked.
#[derive(Debug)]
pub struct MultipartParser {
    /// `--boundary`
    delimiter: Vec<u8>,
    /// `\r\n--boundary`, the end of a body without Content-Length
    body_delimiter: Vec<u8>,
    buf: BytesMut,
    state: State,
    scan_budget: usize,
    scanned: usize,
}

impl MultipartParser {
    pub fn new(boundary: &str) -> Self {
        Self::with_scan_budget(boundary, DEFAULT_SCAN_BUDGET)
    }

    pub fn with_scan_budget(boundary: &str, scan_budget: usize) -> Self {
        let delimiter = format!("--{boundary}").into_bytes();
        let mut body_delimiter = b"\r\n".to_vec();
        body_delimiter.extend_from_slice(&delimiter);
        Self {
            delimiter,
            body_delimiter,
            buf: BytesMut::new(),
            state: State::SeekDelimiter,
            scan_budget,
            scanned: 0,
        }
    }

    pub fn push(&mut self, chunk: &[u8]) {
        if !matches!(self.state, State::Done | State::Failed) {
            self.buf.extend_from_slice(chunk);
        }
    }

    /// True once the closing `--boundary--` has been seen.
    pub fn is_done(&self) -> bool {
        self.state == State::Done
    }

    fn fail(&mut self, err: MultipartError) -> Result<Option<Bytes>, MultipartError> {
        self.state = State::Failed;
        self.buf.clear();
        Err(err)
    }

    /// Returns the next complete body, `Ok(None)` when more input is needed.
    pub fn next_part(&mut self) -> Result<Option<Bytes>, MultipartError> {
        loop {
            match self.state {
                State::Done | State::Failed => return Ok(None),
                State::SeekDelimiter => {
                    let dlen = self.delimiter.len();
                    match memmem::find(&self.buf, &self.delimiter) {
                        Some(pos) => {
                            if self.buf.len() < pos + dlen + 2 {
                                return Ok(None);
                            }
                            match &self.buf[pos + dlen..pos + dlen + 2] {
                                b"\r\n" => {
                                    // keep the CRLF so an empty header block is "\r\n\r\n"
                                    self.buf.advance(pos + dlen);
                                    self.scanned = 0;
                                    self.state = State::Headers;
                                }
                                b"--" => {
                                    self.buf.clear();
                                    self.state = State::Done;
                                    return Ok(None);
                                }
                                _ => {
                                    // longer token sharing our prefix; not a delimiter
                                    self.scanned += pos + 1;
                                    self.buf.advance(pos + 1);
                                }
                            }
                        }
                        None => {
                            let keep = dlen.saturating_sub(1).min(self.buf.len());
                            let drop = self.buf.len() - keep;
                            self.scanned += drop;
                            self.buf.advance(drop);
                            if self.scanned > self.scan_budget {
                                return self
                                    .fail(MultipartError::BoundaryNotFound(self.scan_budget));
                            }
                            return Ok(None);
                        }
                    }
                }
                State::Headers => match memmem::find(&self.buf, b"\r\n\r\n") {
                    Some(end) => {
                        let block = self.buf[2.min(end)..end].to_vec();
                        match self.parse_headers(&block) {
                            Ok(len) => {
                                self.buf.advance(end + 4);
                                self.state = State::Body(len);
                            }
                            Err(e) => return self.fail(e),
                        }
                    }
                    None => {
                        if memmem::find(&self.buf, &self.body_delimiter).is_some() {
                            return self.fail(MultipartError::MalformedPart(
                                "next delimiter reached before the blank line ending the headers"
                                    .into(),
                            ));
                        }
                        if self.buf.len() > MAX_HEADER_BLOCK {
                            return self.fail(MultipartError::MalformedPart(format!(
                                "header block exceeds {MAX_HEADER_BLOCK} bytes without a blank line"
                            )));
                        }
                        return Ok(None);
                    }
                },
                State::Body(Some(len)) => {
                    if self.buf.len() < len {
                        return Ok(None);
                    }
                    let body = self.buf.split_to(len).freeze();
                    self.state = State::SeekDelimiter;
                    return Ok(Some(body));
                }
                State::Body(None) => match memmem::find(&self.buf, &self.body_delimiter) {
                    Some(pos) => {
                        let body = self.buf.split_to(pos).freeze();
                        self.state = State::SeekDelimiter;
                        return Ok(Some(body));
                    }
                    None => {
                        if self.buf.len() > self.scan_budget {
                            return self.fail(MultipartError::BoundaryNotFound(self.scan_budget));
                        }
                        return Ok(None);
                    }
                },
            }
        }
    }

    fn parse_headers(&self, block: &[u8]) -> Result<Option<usize>, MultipartError> {
        if memmem::find(block, &self.body_delimiter).is_some() {
            return Err(MultipartError::MalformedPart(
                "missing blank line between headers and body".into(),
            ));
        }
        let text = std::str::from_utf8(block)
            .map_err(|_| MultipartError::MalformedPart("non-UTF-8 header block".into()))?;
        let mut content_length = None;
        for line in text.split("\r\n").filter(|l| !l.is_empty()) {
            let (name, value) = line.split_once(':').ok_or_else(|| {
                MultipartError::MalformedPart(format!("header line without ':': {line:?}"))
            })?;
            if name.trim().eq_ignore_ascii_case("content-length") {
                let n = value.trim().parse::<usize>().map_err(|_| {
                    MultipartError::MalformedPart(format!("bad Content-Length {:?}", value.trim()))
                })?;
                content_length = Some(n);
            }
        }
        Ok(content_length)
    }

    /// Signals end of input. Errors if the stream stopped inside a part.
    pub fn finish(&mut self) -> Result<(), MultipartError> {
        match self.state {
            State::Headers | State::Body(_) => {
                self.state = State::Failed;
                Err(MultipartError::TruncatedPart)
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ParseOutcome {
    pub parts: Vec<Bytes>,
    pub error: Option<MultipartError>,
}

/// Parses a complete byte stream delivered as `chunks`. Parsing stops at the
/// first error; parts recovered before it are kept.
pub fn parse_multipart<I, C>(chunks: I, boundary: &str) -> ParseOutcome
where
    I: IntoIterator<Item = C>,
    C: AsRef<[u8]>,
{
    let mut parser = MultipartParser::new(boundary);
    let mut out = ParseOutcome::default();
    for chunk in chunks {
        parser.push(chunk.as_ref());
        loop {
            match parser.next_part() {
                Ok(Some(part)) => out.parts.push(part),
                Ok(None) => break,
                Err(e) => {
                    out.error = Some(e);
                    return out;
                }
            }
        }
    }
    if let Err(e) = parser.finish() {
        out.error = Some(e);
    }
    out
}

/// Extracts the boundary parameter from a multipart Content-Type value.
pub fn boundary_from_content_type(value: &str) -> Option<String> {
    value.split(';').skip(1).find_map(|param| {
        let (k, v) = param.split_once('=')?;
        if !k.trim().eq_ignore_ascii_case("boundary") {
            return None;
        }
        let v = v.trim().trim_matches('"');
        let v = v.strip_prefix("--").unwrap_or(v);
        (!v.is_empty()).then(|| v.to_string())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camsim::wire::{encode_part, encode_stream, terminator};
    use proptest::prelude::*;

    const B: &str = "drishtiframe";

    #[test]
    fn single_part_byte_chunks() {
        let body = b"\xFF\xD8hello\xFF\xD9".to_vec();
        let wire = encode_part(B, &body);
        let out = parse_multipart(wire.chunks(1), B);
        assert_eq!(out.error, None);
        assert_eq!(out.parts, vec![Bytes::from(body)]);
    }

    #[test]
    fn cut_after_second_headers_is_truncated() {
        let mut wire = encode_part(B, b"first");
        let second = encode_part(B, b"second-body");
        let header_len = second.len() - b"second-body".len();
        wire.extend_from_slice(&second[..header_len]);
        let out = parse_multipart([&wire], B);
        assert_eq!(out.parts, vec![Bytes::from_static(b"first")]);
        assert_eq!(out.error, Some(MultipartError::TruncatedPart));
    }

    #[test]
    fn terminator_ends_stream() {
        let wire = encode_stream(B, &[b"a".as_slice(), b"bb"]);
        let mut p = MultipartParser::new(B);
        p.push(&wire);
        assert_eq!(p.next_part().unwrap().unwrap().as_ref(), b"a");
        assert_eq!(p.next_part().unwrap().unwrap().as_ref(), b"bb");
        assert_eq!(p.next_part().unwrap(), None);
        assert!(p.is_done());
        assert!(p.finish().is_ok());
    }

    #[test]
    fn body_without_content_length_scans_for_delimiter() {
        let mut wire = b"--drishtiframe\r\nContent-Type: image/jpeg\r\n\r\nabc".to_vec();
        wire.extend_from_slice(&terminator(B));
        let out = parse_multipart(wire.chunks(3), B);
        assert_eq!(out.error, None);
        assert_eq!(out.parts, vec![Bytes::from_static(b"abc")]);
    }

    #[test]
    fn empty_header_block_is_legal() {
        let mut wire = b"--drishtiframe\r\n\r\nxyz".to_vec();
        wire.extend_from_slice(&terminator(B));
        let out = parse_multipart([&wire], B);
        assert_eq!(out.parts, vec![Bytes::from_static(b"xyz")]);
    }

    #[test]
    fn missing_blank_line_is_malformed() {
        let mut wire = b"\r\n--drishtiframe\r\nContent-Type: image/jpeg\r\nbody bytes".to_vec();
        wire.extend_from_slice(&encode_part(B, b"next"));
        let out = parse_multipart([&wire], B);
        assert!(
            matches!(out.error, Some(MultipartError::MalformedPart(_))),
            "{out:?}"
        );
    }

    #[test]
    fn bad_content_length_is_malformed() {
        let wire = b"--drishtiframe\r\nContent-Length: lots\r\n\r\nabc".to_vec();
        let out = parse_multipart([&wire], B);
        assert!(matches!(out.error, Some(MultipartError::MalformedPart(_))));
    }

    #[test]
    fn scan_budget_is_enforced() {
        let mut p = MultipartParser::with_scan_budget(B, 1024);
        p.push(&vec![b'x'; 4096]);
        assert_eq!(p.next_part(), Err(MultipartError::BoundaryNotFound(1024)));
    }

    #[test]
    fn preamble_and_lookalike_tokens_are_skipped() {
        let mut wire = b"preamble --drishtiframeX junk".to_vec();
        wire.extend_from_slice(&encode_stream(B, &[b"ok".as_slice()]));
        let out = parse_multipart(wire.chunks(5), B);
        assert_eq!(out.error, None);
        assert_eq!(out.parts, vec![Bytes::from_static(b"ok")]);
    }

    #[test]
    fn boundary_param_extraction() {
        assert_eq!(
            boundary_from_content_type("multipart/x-mixed-replace; boundary=drishtiframe")
                .as_deref(),
            Some("drishtiframe")
        );
        assert_eq!(
            boundary_from_content_type("multipart/x-mixed-replace;boundary=\"--frame\"").as_deref(),
            Some("frame")
        );
        assert_eq!(boundary_from_content_type("image/jpeg"), None);
    }

    proptest! {
        #[test]
        fn chunking_does_not_change_output(
            payloads in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..512), 1..8),
            cuts in prop::collection::vec(any::<prop::sample::Index>(), 0..16),
        ) {
            let wire = encode_stream(B, &payloads);
            let whole = parse_multipart([&wire], B);
            let mut points: Vec<usize> = cuts.iter().map(|i| i.index(wire.len() + 1)).collect();
            points.push(0);
            points.push(wire.len());
            points.sort_unstable();
            points.dedup();
            let chunks: Vec<&[u8]> = points.windows(2).map(|w| &wire[w[0]..w[1]]).collect();
            let split = parse_multipart(chunks, B);
            prop_assert_eq!(&whole, &split);
            prop_assert_eq!(whole.error, None);
            let expected: Vec<Bytes> = payloads.into_iter().map(Bytes::from).collect();
            prop_assert_eq!(whole.parts, expected);
        }
    }
}
