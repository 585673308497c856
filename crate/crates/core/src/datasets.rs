//! The three published calibration tables (one camera, three mounting heights).

use crate::caldata::{parse_calibration_csv, CalibrationSet};

pub const APPENDIX_A_CSV: &str = include_str!("../data/appendix_a.csv");
pub const APPENDIX_B_CSV: &str = include_str!("../data/appendix_b.csv");
pub const APPENDIX_C_CSV: &str = include_str!("../data/appendix_c.csv");

fn load(csv: &str, height: f64, x0: f64) -> CalibrationSet {
    let mut set = parse_calibration_csv(csv, height).expect("bundled table parses");
    set.x0 = Some(x0);
    set
}

/// h = 96.5 cm, X₀ = 415 cm.
pub fn appendix_a() -> CalibrationSet {
    load(APPENDIX_A_CSV, 96.5, 415.0)
}

/// h = 118 cm, X₀ = 370 cm.
pub fn appendix_b() -> CalibrationSet {
    load(APPENDIX_B_CSV, 118.0, 370.0)
}

/// h = 141.8 cm, X₀ = 600 cm.
pub fn appendix_c() -> CalibrationSet {
    load(APPENDIX_C_CSV, 141.8, 600.0)
}

pub fn all() -> [(&'static str, CalibrationSet); 3] {
    [
        ("A", appendix_a()),
        ("B", appendix_b()),
        ("C", appendix_c()),
    ]
}
