//! Reference text recognizer: exact matching of 5x7 bitmap glyphs on a
//! fixed 6x8 cell grid.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::BBox;
use crate::ingest::Frame;

pub const GLYPH_WIDTH: u32 = 5;
pub const GLYPH_HEIGHT: u32 = 7;
/// Glyph plus a one-pixel gutter on the right and bottom.
pub const CELL_WIDTH: u32 = 6;
pub const CELL_HEIGHT: u32 = 8;

/// Rows top to bottom; bit 4 is the leftmost column.
type Glyph = [u8; 7];

#[rustfmt::skip]
const BUILTIN: [(char, Glyph); 36] = [
    ('A', [0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001]),
    ('B', [0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110]),
    ('C', [0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110]),
    ('D', [0b11100, 0b10010, 0b10001, 0b10001, 0b10001, 0b10010, 0b11100]),
    ('E', [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111]),
    ('F', [0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000]),
    ('G', [0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111]),
    ('H', [0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001]),
    ('I', [0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110]),
    ('J', [0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100]),
    ('K', [0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001]),
    ('L', [0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111]),
    ('M', [0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001]),
    ('N', [0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001]),
    ('O', [0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110]),
    ('P', [0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000]),
    ('Q', [0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101]),
    ('R', [0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001]),
    ('S', [0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110]),
    ('T', [0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100]),
    ('U', [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110]),
    ('V', [0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100]),
    ('W', [0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010]),
    ('X', [0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001]),
    ('Y', [0b10001, 0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100]),
    ('Z', [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111]),
    ('0', [0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110]),
    ('1', [0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110]),
    ('2', [0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111]),
    ('3', [0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110]),
    ('4', [0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010]),
    ('5', [0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110]),
    ('6', [0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110]),
    ('7', [0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000]),
    ('8', [0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110]),
    ('9', [0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100]),
];

#[derive(Debug, Clone)]
pub struct BitmapFont {
    glyphs: HashMap<char, Glyph>,
    lookup: HashMap<Glyph, char>,
}

impl BitmapFont {
    /// A–Z and 0–9.
    pub fn builtin() -> Self {
        Self::from_glyphs(BUILTIN.iter().copied())
    }

    pub fn from_glyphs(glyphs: impl IntoIterator<Item = (char, Glyph)>) -> Self {
        let glyphs: HashMap<char, Glyph> = glyphs.into_iter().collect();
        let lookup = glyphs.iter().map(|(c, g)| (*g, *c)).collect();
        Self { glyphs, lookup }
    }

    pub fn alphabet(&self) -> Vec<char> {
        let mut chars: Vec<char> = self.glyphs.keys().copied().collect();
        chars.sort_unstable();
        chars
    }

    pub fn glyph(&self, c: char) -> Option<&Glyph> {
        self.glyphs.get(&c)
    }

    fn matches(&self, g: &Glyph) -> Option<char> {
        self.lookup.get(g).copied()
    }
}

impl Default for BitmapFont {
    fn default() -> Self {
        Self::builtin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextLine {
    pub text: String,
    pub bbox: BBox,
}

/// Renders lines of text in black on white, one cell row per line. Sized to
/// fit the longest line. Characters missing from the font render blank.
pub fn render_text(lines: &[&str], font: &BitmapFont) -> Frame {
    let cols = lines
        .iter()
        .map(|l| l.chars().count())
        .max()
        .unwrap_or(0)
        .max(1) as u32;
    let rows = lines.len().max(1) as u32;
    let (width, height) = (cols * CELL_WIDTH, rows * CELL_HEIGHT);
    let mut pixels = vec![255u8; (width * height * 3) as usize];
    for (row, line) in lines.iter().enumerate() {
        for (col, ch) in line.chars().enumerate() {
            let Some(glyph) = font.glyph(ch) else {
                continue;
            };
            for (gy, bits) in glyph.iter().enumerate() {
                for gx in 0..GLYPH_WIDTH {
                    if bits & (1 << (GLYPH_WIDTH - 1 - gx)) != 0 {
                        let x = col as u32 * CELL_WIDTH + gx;
                        let y = row as u32 * CELL_HEIGHT + gy as u32;
                        let i = ((y * width + x) * 3) as usize;
                        pixels[i..i + 3].fill(0);
                    }
                }
            }
        }
    }
    Frame::from_rgb(0, 0, width, height, pixels)
}

fn is_ink([r, g, b]: [u8; 3]) -> bool {
    let luma = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
    luma < 128.0
}

/// Scans every full 6x8 cell, matching its 5x7 glyph area exactly. Each row
/// with at least one match becomes a line; unmatched cells read as spaces
/// and are trimmed from both ends.
pub fn recognize_text(frame: &Frame, font: &BitmapFont) -> Vec<TextLine> {
    let cols = frame.width / CELL_WIDTH;
    let rows = frame.height / CELL_HEIGHT;
    let mut out = Vec::new();
    for row in 0..rows {
        let mut text = String::new();
        let mut first = None;
        let mut last = 0;
        for col in 0..cols {
            let mut glyph = [0u8; 7];
            for (gy, bits) in glyph.iter_mut().enumerate() {
                for gx in 0..GLYPH_WIDTH {
                    let px = frame.rgb(col * CELL_WIDTH + gx, row * CELL_HEIGHT + gy as u32);
                    if is_ink(px) {
                        *bits |= 1 << (GLYPH_WIDTH - 1 - gx);
                    }
                }
            }
            match font.matches(&glyph) {
                Some(c) => {
                    first.get_or_insert(col);
                    last = col;
                    text.push(c);
                }
                None => text.push(' '),
            }
        }
        if let Some(first) = first {
            let text = text.trim().to_string();
            out.push(TextLine {
                text,
                bbox: BBox::new(
                    (first * CELL_WIDTH) as f64,
                    (row * CELL_HEIGHT) as f64,
                    ((last - first) * CELL_WIDTH + GLYPH_WIDTH) as f64,
                    GLYPH_HEIGHT as f64,
                ),
            });
        }
    }
    out
}
