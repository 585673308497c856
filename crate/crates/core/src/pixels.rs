//! Pixel depth and foot-row detection.
//!
//! Rows count from 0 at the image top. The pixel depth of an object is the
//! number of rows between its foot and the bottom edge: `R - r`.

use crate::error::{Error, Result};

/// Row-major grayscale image with `gray_levels` intensity levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    rows: usize,
    cols: usize,
    gray_levels: u32,
    samples: Vec<u16>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, gray_levels: u32, samples: Vec<u16>) -> Result<Self> {
        if !(2..=65536).contains(&gray_levels) {
            return Err(Error::Image(format!(
                "unsupported gray level count {gray_levels}"
            )));
        }
        if samples.len() != rows * cols {
            return Err(Error::Image(format!(
                "{} samples for a {rows}x{cols} image",
                samples.len()
            )));
        }
        if let Some(v) = samples.iter().find(|&&v| u32::from(v) >= gray_levels) {
            return Err(Error::Image(format!(
                "sample {v} outside [0, {}]",
                gray_levels - 1
            )));
        }
        Ok(Self {
            rows,
            cols,
            gray_levels,
            samples,
        })
    }

    /// All-zero image.
    pub fn blank(rows: usize, cols: usize, gray_levels: u32) -> Result<Self> {
        Self::new(rows, cols, gray_levels, vec![0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn gray_levels(&self) -> u32 {
        self.gray_levels
    }

    pub fn samples(&self) -> &[u16] {
        &self.samples
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.samples[row * self.cols + col]
    }

    /// Sets one sample, clamped to the top gray level.
    pub fn set(&mut self, row: usize, col: usize, value: u16) {
        let max = (self.gray_levels - 1) as u16;
        self.samples[row * self.cols + col] = value.min(max);
    }

    pub fn row(&self, row: usize) -> &[u16] {
        &self.samples[row * self.cols..(row + 1) * self.cols]
    }

    pub fn mirrored_horizontally(&self) -> Self {
        let mut samples = Vec::with_capacity(self.samples.len());
        for r in 0..self.rows {
            samples.extend(self.row(r).iter().rev());
        }
        Self { samples, ..*self }
    }

    /// Reads a portable graymap, plain (`P2`) or raw (`P5`).
    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let mut cursor = PgmCursor { bytes, pos: 0 };
        let magic = cursor.token()?;
        let raw = match magic.as_slice() {
            b"P2" => false,
            b"P5" => true,
            other => {
                return Err(Error::Image(format!(
                    "unsupported magic `{}`",
                    String::from_utf8_lossy(other)
                )))
            }
        };
        let cols = cursor.number()? as usize;
        let rows = cursor.number()? as usize;
        let maxval = cursor.number()?;
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Image(format!("invalid maxval {maxval}")));
        }

        let count = rows * cols;
        let samples = if raw {
            // exactly one whitespace byte separates the header from the raster
            cursor.pos += 1;
            let width = if maxval < 256 { 1 } else { 2 };
            let data = cursor
                .bytes
                .get(cursor.pos..cursor.pos + count * width)
                .ok_or_else(|| Error::Image("truncated raster".into()))?;
            if width == 1 {
                data.iter().map(|&b| u16::from(b)).collect()
            } else {
                data.chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]))
                    .collect()
            }
        } else {
            (0..count)
                .map(|_| cursor.number().map(|v| v as u16))
                .collect::<Result<Vec<_>>>()?
        };
        Self::new(rows, cols, maxval + 1, samples)
    }

    /// Writes a plain (`P2`) graymap.
    pub fn to_pgm_plain(&self) -> String {
        let mut out = format!(
            "P2\n{} {}\n{}\n",
            self.cols,
            self.rows,
            self.gray_levels - 1
        );
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(u16::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

struct PgmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmCursor<'_> {
    fn token(&mut self) -> Result<Vec<u8>> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.bytes.get(self.pos) == Some(&b'#') {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Image("unexpected end of header".into()));
        }
        Ok(self.bytes[start..self.pos].to_vec())
    }

    fn number(&mut self) -> Result<u32> {
        let tok = self.token()?;
        std::str::from_utf8(&tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Image(format!("bad number `{}`", String::from_utf8_lossy(&tok))))
    }
}

/// `R - r`. Fails when the foot row lies outside `[0, R]`.
pub fn compute_pixel_depth(image_height: i64, foot_row: i64) -> Result<u32> {
    if image_height < 0 || foot_row < 0 || foot_row > image_height {
        return Err(Error::Domain(format!(
            "foot row {foot_row} outside [0, {image_height}]"
        )));
    }
    u32::try_from(image_height - foot_row).map_err(|_| {
        Error::Domain(format!(
            "pixel depth too large for image height {image_height}"
        ))
    })
}

/// Lowest row (largest index) holding any sample strictly brighter than
/// `background_threshold`.
pub fn find_foot_row(image: &GrayImage, background_threshold: u32) -> Result<usize> {
    (0..image.rows())
        .rev()
        .find(|&r| {
            image
                .row(r)
                .iter()
                .any(|&v| u32::from(v) > background_threshold)
        })
        .ok_or(Error::ObjectNotFound {
            threshold: background_threshold,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn with_block(
        rows: usize,
        cols: usize,
        top: usize,
        bottom: usize,
        left: usize,
        right: usize,
    ) -> GrayImage {
        let mut img = GrayImage::blank(rows, cols, 256).unwrap();
        for r in top..=bottom {
            for c in left..=right {
                img.set(r, c, 200);
            }
        }
        img
    }

    #[test]
    fn pixel_depth_examples() {
        assert_eq!(compute_pixel_depth(1944, 1889).unwrap(), 55);
        assert_eq!(compute_pixel_depth(1944, 1944).unwrap(), 0);
        assert_eq!(compute_pixel_depth(1944, 1507).unwrap(), 437);
    }

    #[test]
    fn pixel_depth_domain_errors() {
        assert!(matches!(
            compute_pixel_depth(1944, 1945),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            compute_pixel_depth(1944, -1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn foot_of_block() {
        let img = with_block(10, 10, 2, 6, 3, 5);
        assert_eq!(find_foot_row(&img, 50).unwrap(), 6);
    }

    #[test]
    fn empty_scene() {
        let img = GrayImage::blank(10, 10, 256).unwrap();
        assert!(matches!(
            find_foot_row(&img, 0),
            Err(Error::ObjectNotFound { threshold: 0 })
        ));
    }

    #[test]
    fn single_bright_pixel() {
        let mut img = GrayImage::blank(10, 10, 256).unwrap();
        img.set(7, 4, 1);
        assert_eq!(find_foot_row(&img, 0).unwrap(), 7);
    }

    #[test]
    fn sample_range_checked() {
        assert!(GrayImage::new(1, 2, 16, vec![3, 16]).is_err());
        assert!(GrayImage::new(1, 2, 16, vec![3]).is_err());
    }

    #[test]
    fn plain_pgm_round_trip() {
        let img = with_block(6, 4, 1, 3, 0, 1);
        let back = GrayImage::from_pgm(img.to_pgm_plain().as_bytes()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn raw_pgm_with_comment() {
        let mut bytes = b"P5\n# synthetic\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 0, 0, 0, 90, 0]);
        let img = GrayImage::from_pgm(&bytes).unwrap();
        assert_eq!((img.rows(), img.cols(), img.gray_levels()), (2, 3, 256));
        assert_eq!(find_foot_row(&img, 50).unwrap(), 1);
    }

    #[test]
    fn raw_pgm_sixteen_bit() {
        let mut bytes = b"P5 1 2 1023\n".to_vec();
        bytes.extend_from_slice(&[0x03, 0xFF, 0x00, 0x01]);
        let img = GrayImage::from_pgm(&bytes).unwrap();
        assert_eq!(img.samples(), &[1023, 1]);
    }

    #[test]
    fn truncated_raw_pgm_fails() {
        assert!(GrayImage::from_pgm(b"P5 3 3 255\n\x00\x00").is_err());
        assert!(GrayImage::from_pgm(b"P6 1 1 255\n\x00").is_err());
    }

    proptest! {
        #[test]
        fn pixel_depth_boundaries(r in 0i64..100_000) {
            prop_assert_eq!(compute_pixel_depth(r, r).unwrap(), 0);
            prop_assert_eq!(i64::from(compute_pixel_depth(r, 0).unwrap()), r);
        }

        #[test]
        fn foot_row_mirror_invariant(
            rows in 1usize..24, cols in 1usize..24,
            points in proptest::collection::vec((0usize..24, 0usize..24, 0u16..256), 0..20),
        ) {
            let mut img = GrayImage::blank(rows, cols, 256).unwrap();
            for (r, c, v) in points {
                img.set(r % rows, c % cols, v);
            }
            let a = find_foot_row(&img, 40).ok();
            let b = find_foot_row(&img.mirrored_horizontally(), 40).ok();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn lower_object_has_smaller_pixel_depth(height in 1usize..8, start in 0usize..30, shift in 1usize..10) {
            let rows = 48;
            let top = start;
            let place = |offset: usize| with_block(rows, 8, top + offset, top + offset + height - 1, 2, 4);
            let depth = |img: &GrayImage| {
                let foot = find_foot_row(img, 50).unwrap();
                compute_pixel_depth(rows as i64, foot as i64).unwrap()
            };
            prop_assert!(depth(&place(shift)) <= depth(&place(0)));
        }
    }
}
