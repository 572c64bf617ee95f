use bytes::Bytes;

/// One captured image flowing through the pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub id: u64,
    pub capture_ts_ms: u64,
    pub payload: Bytes,
    pub width: u32,
    pub height: u32,
    /// Row-major 8-bit RGB, `width * height * 3` bytes.
    pub pixels: Vec<u8>,
}

impl Frame {
    /// Builds a frame straight from a raster, without an encoded payload.
    pub fn from_rgb(id: u64, capture_ts_ms: u64, width: u32, height: u32, pixels: Vec<u8>) -> Self {
        assert_eq!(
            pixels.len(),
            width as usize * height as usize * 3,
            "raster length must be width * height * 3"
        );
        Self {
            id,
            capture_ts_ms,
            payload: Bytes::new(),
            width,
            height,
            pixels,
        }
    }

    pub fn rgb(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("not a JPEG stream")]
    NotJpeg,
    #[error("truncated JPEG")]
    Truncated,
    #[error("unsupported JPEG coding process (SOF{0}); only baseline is accepted")]
    Unsupported(u8),
    #[error("JPEG has no frame header")]
    MissingFrameHeader,
    #[error("decoder failed: {0}")]
    Decoder(String),
    #[error("decoded size {got:?} disagrees with header {header:?}")]
    DimensionMismatch { header: (u32, u32), got: (u32, u32) },
}

/// Walks marker segments up to the first SOFn and returns (width, height).
fn sof_dimensions(data: &[u8]) -> Result<(u32, u32), DecodeError> {
    if data.len() < 2 || data[0] != 0xFF || data[1] != 0xD8 {
        return Err(DecodeError::NotJpeg);
    }
    let mut i = 2;
    loop {
        // fill bytes between segments
        while i < data.len() && data[i] == 0xFF && data.get(i + 1) == Some(&0xFF) {
            i += 1;
        }
        if i + 4 > data.len() {
            return Err(DecodeError::Truncated);
        }
        if data[i] != 0xFF {
            return Err(DecodeError::Decoder(format!(
                "expected marker at offset {i}"
            )));
        }
        let marker = data[i + 1];
        match marker {
            0xD9 | 0xDA => return Err(DecodeError::MissingFrameHeader),
            0x01 | 0xD0..=0xD7 => {
                i += 2;
                continue;
            }
            _ => {}
        }
        let seg_len = u16::from_be_bytes([data[i + 2], data[i + 3]]) as usize;
        if seg_len < 2 || i + 2 + seg_len > data.len() {
            return Err(DecodeError::Truncated);
        }
        if (0xC0..=0xCF).contains(&marker) && !matches!(marker, 0xC4 | 0xC8 | 0xCC) {
            if !matches!(marker, 0xC0 | 0xC1) {
                return Err(DecodeError::Unsupported(marker - 0xC0));
            }
            if seg_len < 7 {
                return Err(DecodeError::Truncated);
            }
            let h = u16::from_be_bytes([data[i + 5], data[i + 6]]) as u32;
            let w = u16::from_be_bytes([data[i + 7], data[i + 8]]) as u32;
            return Ok((w, h));
        }
        i += 2 + seg_len;
    }
}

/// Decodes a baseline JPEG payload into a [`Frame`].
pub fn decode_frame(payload: Bytes, id: u64, capture_ts_ms: u64) -> Result<Frame, DecodeError> {
    let (w, h) = sof_dimensions(&payload)?;
    if !payload.ends_with(&[0xFF, 0xD9]) {
        return Err(DecodeError::Truncated);
    }
    let img = image::load_from_memory_with_format(&payload, image::ImageFormat::Jpeg)
        .map_err(|e| DecodeError::Decoder(e.to_string()))?
        .to_rgb8();
    if img.dimensions() != (w, h) {
        return Err(DecodeError::DimensionMismatch {
            header: (w, h),
            got: img.dimensions(),
        });
    }
    Ok(Frame {
        id,
        capture_ts_ms,
        payload,
        width: w,
        height: h,
        pixels: img.into_raw(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::encode_jpeg;

    #[test]
    fn solid_red_2x2() {
        let jpeg = encode_jpeg(2, 2, &[255, 0, 0].repeat(4), 100);
        let f = decode_frame(Bytes::from(jpeg), 7, 11).unwrap();
        assert_eq!((f.width, f.height, f.id, f.capture_ts_ms), (2, 2, 7, 11));
        assert_eq!(f.pixels.len(), 12);
        for px in f.pixels.chunks(3) {
            assert!(px[0] >= 251 && px[1] <= 4 && px[2] <= 4, "{px:?}");
        }
    }

    #[test]
    fn gradient_8x8_dimensions() {
        let raster: Vec<u8> = (0..64u32)
            .flat_map(|i| [(i * 4) as u8, (255 - i * 4) as u8, 128])
            .collect();
        let jpeg = encode_jpeg(8, 8, &raster, 90);
        let f = decode_frame(Bytes::from(jpeg), 0, 0).unwrap();
        assert_eq!((f.width, f.height), (8, 8));
        assert_eq!(f.pixels.len(), 192);
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let jpeg = encode_jpeg(8, 8, &[10u8; 192], 90);
        let cut = Bytes::copy_from_slice(&jpeg[..jpeg.len() / 2]);
        assert!(decode_frame(cut, 0, 0).is_err());
        assert_eq!(
            decode_frame(Bytes::from_static(b"\x00\x01"), 0, 0),
            Err(DecodeError::NotJpeg)
        );
    }

    #[test]
    fn progressive_is_rejected() {
        // SOI, SOF2 (progressive) with 8x8 dims, EOI
        let data = Bytes::from_static(&[
            0xFF, 0xD8, 0xFF, 0xC2, 0x00, 0x0B, 0x08, 0x00, 0x08, 0x00, 0x08, 0x01, 0x01, 0x11,
            0x00, 0xFF, 0xD9,
        ]);
        assert_eq!(decode_frame(data, 0, 0), Err(DecodeError::Unsupported(2)));
    }
}
