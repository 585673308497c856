//! Calibration observations: one photographed marker per row, real depth
//! against pixel depth, for a single camera at a single mounting height.

use std::fmt;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "photo_id,actual_depth_cm,pixel_depth,R,r";

/// One photographed line or object.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationObservation {
    /// Opaque label, e.g. the photograph number.
    pub photo_id: String,
    /// Measured ground distance in cm.
    pub actual_depth: f64,
    /// Image height `R` in pixels.
    pub image_height: u32,
    /// Row of the object's foot, counted from the image top.
    pub foot_row: u32,
    /// `R - r`.
    pub pixel_depth: u32,
}

impl CalibrationObservation {
    /// Builds an observation, deriving the pixel depth from `R` and `r`.
    pub fn new(
        photo_id: impl Into<String>,
        actual_depth: f64,
        image_height: u32,
        foot_row: u32,
    ) -> Result<Self> {
        if foot_row > image_height {
            return Err(Error::Domain(format!(
                "foot row {foot_row} exceeds image height {image_height}"
            )));
        }
        if !(actual_depth.is_finite() && actual_depth > 0.0) {
            return Err(Error::Domain(format!(
                "actual depth must be positive, got {actual_depth}"
            )));
        }
        Ok(Self {
            photo_id: photo_id.into(),
            actual_depth,
            image_height,
            foot_row,
            pixel_depth: image_height - foot_row,
        })
    }
}

/// Observations for one camera at one height `h`, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet {
    /// Camera height `h` in cm.
    pub camera_height: f64,
    /// Closest sight distance in cm, when known.
    pub x0: Option<f64>,
    pub observations: Vec<CalibrationObservation>,
}

impl CalibrationSet {
    pub fn new(
        camera_height: f64,
        x0: Option<f64>,
        observations: Vec<CalibrationObservation>,
    ) -> Self {
        Self {
            camera_height,
            x0,
            observations,
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Pixel depths as abscissae for fitting.
    pub fn pixel_depths(&self) -> Vec<f64> {
        self.observations
            .iter()
            .map(|o| f64::from(o.pixel_depth))
            .collect()
    }

    /// Real depths as ordinates for fitting.
    pub fn actual_depths(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.actual_depth).collect()
    }

    /// Writes the set in the same CSV dialect [`parse_calibration_csv`] reads.
    /// Height and X₀ are not part of the row format and are not emitted.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.observations.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for o in &self.observations {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                o.photo_id, o.actual_depth, o.pixel_depth, o.image_height, o.foot_row
            ));
        }
        out
    }
}

/// Parses `photo_id,actual_depth_cm,pixel_depth,R,r` rows.
///
/// Blank lines and lines starting with `#` are skipped. The first remaining
/// line must be the header. Errors carry the 1-based line number.
pub fn parse_calibration_csv(text: &str, camera_height: f64) -> Result<CalibrationSet> {
    if !(camera_height.is_finite() && camera_height > 0.0) {
        return Err(Error::Domain(format!(
            "camera height must be positive, got {camera_height}"
        )));
    }

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| Error::InsufficientData("empty calibration file".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns != CSV_HEADER.split(',').collect::<Vec<_>>() {
        return Err(Error::Parse {
            line: header_line,
            message: format!("expected header `{CSV_HEADER}`, found `{header}`"),
        });
    }

    let mut observations = Vec::new();
    for (line, row) in lines {
        observations.push(parse_row(line, row)?);
    }
    if observations.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} data row(s); at least 2 required",
            observations.len()
        )));
    }
    Ok(CalibrationSet::new(camera_height, None, observations))
}

fn parse_row(line: usize, row: &str) -> Result<CalibrationObservation> {
    let fields: Vec<&str> = row.split(',').map(str::trim).collect();
    if fields.len() != 5 {
        return Err(Error::Parse {
            line,
            message: format!("expected 5 fields, found {}", fields.len()),
        });
    }
    let bad = |what: &str, raw: &str| Error::Parse {
        line,
        message: format!("invalid {what} `{raw}`"),
    };

    let actual_depth: f64 = fields[1]
        .parse()
        .map_err(|_| bad("actual_depth_cm", fields[1]))?;
    if !(actual_depth.is_finite() && actual_depth > 0.0) {
        return Err(bad("actual_depth_cm", fields[1]));
    }
    let pixel_depth: i64 = fields[2]
        .parse()
        .map_err(|_| bad("pixel_depth", fields[2]))?;
    let image_height: u32 = fields[3].parse().map_err(|_| bad("R", fields[3]))?;
    let foot_row: u32 = fields[4].parse().map_err(|_| bad("r", fields[4]))?;
    if foot_row > image_height {
        return Err(Error::Parse {
            line,
            message: format!("foot row {foot_row} exceeds image height {image_height}"),
        });
    }

    let expected = i64::from(image_height) - i64::from(foot_row);
    if pixel_depth != expected {
        return Err(Error::Consistency {
            line,
            pixel_depth,
            expected,
        });
    }

    Ok(CalibrationObservation {
        photo_id: fields[0].to_string(),
        actual_depth,
        image_height,
        foot_row,
        pixel_depth: expected as u32,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

/// A validation result. `row` is the 0-based index into the set's
/// observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub severity: Severity,
    pub row: Option<usize>,
    pub message: String,
}

impl Finding {
    fn error(row: Option<usize>, message: String) -> Self {
        Self {
            severity: Severity::Error,
            row,
            message,
        }
    }

    fn warning(row: Option<usize>, message: String) -> Self {
        Self {
            severity: Severity::Warning,
            row,
            message,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match self.row {
            Some(row) => write!(f, "{tag} (row {row}): {}", self.message),
            None => write!(f, "{tag}: {}", self.message),
        }
    }
}

/// Checks a set for internal consistency. An empty result means clean.
///
/// Sorting by actual depth should give strictly increasing pixel depth;
/// violations are warnings only.
pub fn validate_set(set: &CalibrationSet) -> Vec<Finding> {
    let mut findings = Vec::new();

    if !(set.camera_height.is_finite() && set.camera_height > 0.0) {
        findings.push(Finding::error(
            None,
            format!("camera height must be positive, got {}", set.camera_height),
        ));
    }
    if set.observations.len() < 2 {
        findings.push(Finding::error(
            None,
            format!(
                "{} observation(s); at least 2 required",
                set.observations.len()
            ),
        ));
    }

    for (i, o) in set.observations.iter().enumerate() {
        if !(o.actual_depth.is_finite() && o.actual_depth > 0.0) {
            findings.push(Finding::error(
                Some(i),
                format!("actual depth must be positive, got {}", o.actual_depth),
            ));
        }
        if o.foot_row > o.image_height {
            findings.push(Finding::error(
                Some(i),
                format!(
                    "foot row {} exceeds image height {}",
                    o.foot_row, o.image_height
                ),
            ));
        } else if o.pixel_depth != o.image_height - o.foot_row {
            findings.push(Finding::error(
                Some(i),
                format!(
                    "pixel depth {} != R - r = {}",
                    o.pixel_depth,
                    o.image_height - o.foot_row
                ),
            ));
        }
    }

    let mut order: Vec<usize> = (0..set.observations.len()).collect();
    order.sort_by(|&a, &b| {
        set.observations[a]
            .actual_depth
            .total_cmp(&set.observations[b].actual_depth)
    });
    for pair in order.windows(2) {
        let (prev, next) = (&set.observations[pair[0]], &set.observations[pair[1]]);
        if next.pixel_depth <= prev.pixel_depth {
            findings.push(Finding::warning(
                Some(pair[1]),
                format!(
                    "pixel depth not increasing with distance: {} cm -> {} px, then {} cm -> {} px",
                    prev.actual_depth, prev.pixel_depth, next.actual_depth, next.pixel_depth
                ),
            ));
        }
    }

    findings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use proptest::prelude::*;

    fn one_row(row: &str) -> Result<CalibrationSet> {
        parse_calibration_csv(
            &format!("{CSV_HEADER}\n{row}\n5712,480,108,1944,1836\n"),
            96.5,
        )
    }

    #[test]
    fn parses_first_appendix_a_row() {
        let set = one_row("5711,450,55,1944,1889").unwrap();
        let o = &set.observations[0];
        assert_eq!(o.photo_id, "5711");
        assert_eq!(o.pixel_depth, 55);
        assert_eq!(o.actual_depth, 450.0);
    }

    #[test]
    fn parses_last_appendix_b_row() {
        let set = one_row("6284,1080,505,1944,1439").unwrap();
        assert_eq!(set.observations[0].pixel_depth, 505);
    }

    #[test]
    fn inconsistent_pixel_depth_is_rejected_with_line() {
        match one_row("9999,500,100,1944,1800") {
            Err(Error::Consistency {
                line,
                pixel_depth,
                expected,
            }) => {
                assert_eq!(line, 2);
                assert_eq!(pixel_depth, 100);
                assert_eq!(expected, 144);
            }
            other => panic!("expected consistency error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_number_reports_line() {
        let text = format!("# comment\n\n{CSV_HEADER}\n1,450,55,1944,1889\n2,abc,10,20,10\n");
        match parse_calibration_csv(&text, 100.0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn single_row_is_insufficient() {
        let text = format!("{CSV_HEADER}\n1,450,55,1944,1889\n");
        assert!(matches!(
            parse_calibration_csv(&text, 100.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let text = "id,depth,px,R,r\n1,450,55,1944,1889\n2,480,108,1944,1836\n";
        assert!(matches!(
            parse_calibration_csv(text, 100.0),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn appendix_sets_are_clean() {
        for (name, set) in datasets::all() {
            let findings = validate_set(&set);
            assert!(findings.is_empty(), "{name}: {findings:?}");
            assert_eq!(set.len(), 15);
        }
        let c = datasets::appendix_c();
        let px = c.pixel_depths();
        assert_eq!(px.first(), Some(&76.0));
        assert_eq!(px.last(), Some(&469.0));
    }

    #[test]
    fn duplicate_depth_with_decreasing_pixels_warns() {
        let set = CalibrationSet::new(
            100.0,
            None,
            vec![
                CalibrationObservation::new("a", 450.0, 1944, 1889).unwrap(),
                CalibrationObservation::new("b", 450.0, 1944, 1894).unwrap(),
            ],
        );
        let findings = validate_set(&set);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].severity, Severity::Warning);
        assert_eq!(findings[0].row, Some(1));
    }

    #[test]
    fn single_observation_set_is_an_error() {
        let set = CalibrationSet::new(
            100.0,
            None,
            vec![CalibrationObservation::new("a", 450.0, 1944, 1889).unwrap()],
        );
        let findings = validate_set(&set);
        assert!(findings.iter().any(Finding::is_error));
    }

    #[test]
    fn tampered_observation_is_caught() {
        let mut set = datasets::appendix_a();
        set.observations[3].pixel_depth += 1;
        let findings = validate_set(&set);
        assert!(findings.iter().any(|f| f.is_error() && f.row == Some(3)));
    }

    fn observation() -> impl Strategy<Value = CalibrationObservation> {
        ("[0-9a-z]{1,8}", 1u32..100_000, 1u32..4000)
            .prop_flat_map(|(id, depth_mm, rows)| (Just(id), Just(depth_mm), Just(rows), 0..=rows))
            .prop_map(|(id, depth_mm, rows, foot)| {
                CalibrationObservation::new(id, f64::from(depth_mm) / 10.0, rows, foot).unwrap()
            })
    }

    proptest! {
        #[test]
        fn csv_round_trip(obs in proptest::collection::vec(observation(), 2..30)) {
            let set = CalibrationSet::new(118.0, None, obs);
            let back = parse_calibration_csv(&set.to_csv(), 118.0).unwrap();
            prop_assert_eq!(back, set);
        }

        #[test]
        fn parsed_pixel_depth_is_exact_difference(obs in proptest::collection::vec(observation(), 2..10)) {
            let set = CalibrationSet::new(1.0, None, obs);
            for o in parse_calibration_csv(&set.to_csv(), 1.0).unwrap().observations {
                prop_assert_eq!(o.image_height - o.foot_row, o.pixel_depth);
            }
        }
    }
}
