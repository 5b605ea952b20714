//! PGM images and CSV reports.
//!
//! The PGM reader accepts both netpbm greymap variants: `P2` (ASCII) and
//! `P5` (binary), with arbitrary header comments, any maxval in
//! `1..=65535`, and two-byte big-endian samples when maxval exceeds 255.
//! Every parse error names the byte offset it was detected at; malformed
//! input never panics.
//!
//! The writer is canonical: one fixed header layout, maxval 255, samples
//! clamped to `[0, 255]` and rounded half-up. Writing the result of a read
//! back out therefore reproduces a canonically-written file byte for byte.

use std::fmt::Write as _;

use thiserror::Error;

use crate::flows::FlowReport;
use crate::grid::Grid;
use crate::harness::PropertyResult;
use crate::Image64;

/// Largest width/height/maxval token the parser accepts. Far beyond any real
/// image, but small enough that `width * height` cannot overflow.
const MAX_HEADER_NUMBER: u64 = u32::MAX as u64;

/// Comment line embedded by the canonical writer, documenting the
/// quantisation applied to the grey values.
const CANONICAL_COMMENT: &str = "# grey values clamped to [0, 255], rounded half-up";

/// Parse failure, located by the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PgmError {
    #[error("unsupported magic {found:?} at byte {offset}; expected \"P2\" or \"P5\"")]
    UnsupportedMagic { offset: usize, found: String },
    #[error("malformed header at byte {offset}: {reason}")]
    MalformedHeader { offset: usize, reason: String },
    #[error("malformed payload at byte {offset}: {reason}")]
    MalformedPayload { offset: usize, reason: String },
    #[error("truncated payload at byte {offset}: {missing_samples} sample(s) missing")]
    TruncatedPayload {
        offset: usize,
        missing_samples: usize,
    },
}

impl PgmError {
    /// Byte offset the error was detected at.
    pub fn offset(&self) -> usize {
        match self {
            PgmError::UnsupportedMagic { offset, .. }
            | PgmError::MalformedHeader { offset, .. }
            | PgmError::MalformedPayload { offset, .. }
            | PgmError::TruncatedPayload { offset, .. } => *offset,
        }
    }
}

/// The two greymap encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmMode {
    /// `P2`: whitespace-separated decimal samples.
    Ascii,
    /// `P5`: raw samples, one byte each (two big-endian bytes if maxval
    /// exceeds 255).
    Binary,
}

/// A decoded PGM file: encoding, dimensions, maxval and row-major samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmImage {
    pub mode: PgmMode,
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

fn is_pgm_whitespace(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.data.get(self.pos).copied()
    }

    /// Skips whitespace and `#` comments (which run to end of line).
    fn skip_separators(&mut self) {
        while let Some(b) = self.peek() {
            if is_pgm_whitespace(b) {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(c) = self.peek() {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// Reads one decimal number. The token must start with a digit and end
    /// at whitespace, a comment or end of input.
    fn parse_number(
        &mut self,
        what: &str,
        err: impl Fn(usize, String) -> PgmError,
    ) -> Result<(u64, usize), PgmError> {
        self.skip_separators();
        let start = self.pos;
        let mut value: u64 = 0;
        let mut digits = 0;
        while let Some(b) = self.peek() {
            if b.is_ascii_digit() {
                value = value * 10 + u64::from(b - b'0');
                digits += 1;
                if value > MAX_HEADER_NUMBER {
                    return Err(err(start, format!("{what} is out of range")));
                }
                self.pos += 1;
            } else {
                break;
            }
        }
        if digits == 0 {
            return Err(err(
                self.pos,
                match self.peek() {
                    Some(b) => format!("expected {what}, found {:?}", char::from(b)),
                    None => format!("expected {what}, found end of input"),
                },
            ));
        }
        match self.peek() {
            None => {}
            Some(b) if is_pgm_whitespace(b) || b == b'#' => {}
            Some(b) => {
                return Err(err(
                    self.pos,
                    format!("unexpected {:?} in {what}", char::from(b)),
                ));
            }
        }
        Ok((value, start))
    }
}

impl PgmImage {
    /// Decodes a PGM file from raw bytes.
    pub fn parse(data: &[u8]) -> Result<PgmImage, PgmError> {
        let mode = match data {
            [b'P', b'2', ..] => PgmMode::Ascii,
            [b'P', b'5', ..] => PgmMode::Binary,
            _ => {
                return Err(PgmError::UnsupportedMagic {
                    offset: 0,
                    found: String::from_utf8_lossy(&data[..data.len().min(2)]).into_owned(),
                });
            }
        };
        let mut cur = Cursor { data, pos: 2 };
        if let Some(b) = cur.peek() {
            if !is_pgm_whitespace(b) && b != b'#' {
                return Err(PgmError::UnsupportedMagic {
                    offset: 0,
                    found: String::from_utf8_lossy(&data[..data.len().min(3)]).into_owned(),
                });
            }
        }

        let header_err = |offset, reason| PgmError::MalformedHeader { offset, reason };
        let (width, wpos) = cur.parse_number("width", header_err)?;
        let (height, hpos) = cur.parse_number("height", header_err)?;
        let (maxval, mpos) = cur.parse_number("maxval", header_err)?;
        if width == 0 {
            return Err(header_err(wpos, "width must be positive".into()));
        }
        if height == 0 {
            return Err(header_err(hpos, "height must be positive".into()));
        }
        if maxval == 0 || maxval > 65535 {
            return Err(header_err(
                mpos,
                format!("maxval {maxval} is outside 1..=65535"),
            ));
        }
        let (width, height, maxval) = (width as usize, height as usize, maxval as u16);
        let total = width
            .checked_mul(height)
            .ok_or_else(|| header_err(wpos, "width * height overflows".into()))?;

        let samples = match mode {
            PgmMode::Ascii => {
                let payload_err = |offset, reason| PgmError::MalformedPayload { offset, reason };
                // Each ASCII sample consumes at least one input byte, so this
                // capacity is safe even when the header lies about the size.
                let mut samples = Vec::with_capacity(total.min(data.len()));
                for k in 0..total {
                    cur.skip_separators();
                    if cur.peek().is_none() {
                        return Err(PgmError::TruncatedPayload {
                            offset: cur.pos,
                            missing_samples: total - k,
                        });
                    }
                    let (v, vpos) = cur.parse_number("sample", payload_err)?;
                    if v > u64::from(maxval) {
                        return Err(payload_err(
                            vpos,
                            format!("sample {v} exceeds maxval {maxval}"),
                        ));
                    }
                    samples.push(v as u16);
                }
                cur.skip_separators();
                if cur.peek().is_some() {
                    return Err(payload_err(cur.pos, "trailing data after samples".into()));
                }
                samples
            }
            PgmMode::Binary => {
                // Exactly one whitespace byte separates the maxval from the
                // raster; anything else would eat a sample byte.
                match cur.peek() {
                    Some(b) if is_pgm_whitespace(b) => cur.pos += 1,
                    _ => {
                        return Err(header_err(
                            cur.pos,
                            "expected a single whitespace byte after maxval".into(),
                        ));
                    }
                }
                let bytes_per = if maxval > 255 { 2 } else { 1 };
                let available = data.len() - cur.pos;
                let expected = total * bytes_per;
                if available < expected {
                    return Err(PgmError::TruncatedPayload {
                        offset: data.len(),
                        missing_samples: total - available / bytes_per,
                    });
                }
                if available > expected {
                    return Err(PgmError::MalformedPayload {
                        offset: cur.pos + expected,
                        reason: "trailing data after samples".into(),
                    });
                }
                let mut samples = Vec::with_capacity(total);
                for k in 0..total {
                    let at = cur.pos + k * bytes_per;
                    let v = if bytes_per == 2 {
                        (u16::from(data[at]) << 8) | u16::from(data[at + 1])
                    } else {
                        u16::from(data[at])
                    };
                    if v > maxval {
                        return Err(PgmError::MalformedPayload {
                            offset: at,
                            reason: format!("sample {v} exceeds maxval {maxval}"),
                        });
                    }
                    samples.push(v);
                }
                samples
            }
        };

        Ok(PgmImage {
            mode,
            width,
            height,
            maxval,
            samples,
        })
    }

    /// Converts the samples to a unit-spacing grey image.
    pub fn to_image(&self) -> crate::Result<Image64> {
        let values = self.samples.iter().map(|&v| f64::from(v)).collect();
        Image64::new(self.width, self.height, values, 1.0)
    }

    /// Quantises an image for writing: maxval 255, values clamped and
    /// rounded half-up (`0.5` ties go towards `255`).
    pub fn from_image(img: &Image64, mode: PgmMode) -> PgmImage {
        let samples = img
            .values()
            .iter()
            .map(|&v| (v + 0.5).floor().clamp(0.0, 255.0) as u16)
            .collect();
        PgmImage {
            mode,
            width: img.width(),
            height: img.height(),
            maxval: 255,
            samples,
        }
    }

    /// Serialises in canonical form: fixed header layout, ASCII samples laid
    /// out one image row per line, binary samples big-endian when maxval
    /// exceeds 255.
    pub fn encode(&self) -> Vec<u8> {
        let magic = match self.mode {
            PgmMode::Ascii => "P2",
            PgmMode::Binary => "P5",
        };
        let mut out = format!(
            "{magic}\n{CANONICAL_COMMENT}\n{} {}\n{}\n",
            self.width, self.height, self.maxval
        )
        .into_bytes();
        match self.mode {
            PgmMode::Ascii => {
                let mut text = String::new();
                for row in self.samples.chunks(self.width) {
                    for (i, v) in row.iter().enumerate() {
                        if i > 0 {
                            text.push(' ');
                        }
                        let _ = write!(text, "{v}");
                    }
                    text.push('\n');
                }
                out.extend_from_slice(text.as_bytes());
            }
            PgmMode::Binary => {
                if self.maxval > 255 {
                    for v in &self.samples {
                        out.extend_from_slice(&v.to_be_bytes());
                    }
                } else {
                    out.extend(self.samples.iter().map(|&v| v as u8));
                }
            }
        }
        out
    }
}

/// Decodes PGM bytes straight to a grey image with unit spacing.
pub fn read_pgm(data: &[u8]) -> Result<Image64, PgmError> {
    let pgm = PgmImage::parse(data)?;
    Ok(pgm.to_image().expect("parsed dimensions are valid"))
}

/// Encodes an image as a canonical PGM file (see [`PgmImage::from_image`]).
pub fn write_pgm(img: &Image64, mode: PgmMode) -> Vec<u8> {
    PgmImage::from_image(img, mode).encode()
}

/// Renders a flow report as CSV: a header row, then one row per iteration.
/// Numbers use plain decimal-point formatting regardless of locale.
pub fn flow_report_csv(report: &FlowReport) -> String {
    let mut out = String::from("iteration,max_update,min,max,maxmin_violation,elapsed_secs\n");
    for it in &report.iterations {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            it.iteration, it.max_update, it.min, it.max, it.maxmin_violation, it.elapsed_secs
        );
    }
    out
}

/// Renders property-check results as CSV, one row per property.
pub fn property_results_csv(results: &[PropertyResult]) -> String {
    let mut out = String::from("property,trials,failures,worst_violation,seed,tolerance,status\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.property,
            r.trials,
            r.failures,
            r.worst_violation,
            r.seed,
            r.tolerance,
            if r.passed() { "pass" } else { "fail" }
        );
    }
    out
}
