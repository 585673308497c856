//! Analytic camera models used as oracles.
//!
//! [`GroundPlaneCamera`] is an ideal pinhole with a horizontal optical axis
//! at height `h`. A ground point at distance `s` images `f·h/s` rows below
//! the image center, so its pixel depth is `R/2 - f·h/s`; the bottom row
//! sees the ground at `X₀ = f·h/(R/2)`.
//!
//! [`DefocusCamera`] holds the thin-lens parameters relating the blur disc
//! width of a point to its distance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::caldata::{CalibrationObservation, CalibrationSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundPlaneCamera<T> {
    focal_px: T,
    height: T,
    image_rows: u32,
}

impl<T: Scalar> GroundPlaneCamera<T> {
    pub fn new(focal_px: T, height: T, image_rows: u32) -> Result<Self> {
        if !(focal_px > T::zero() && focal_px.is_finite()) {
            return Err(Error::Domain(format!(
                "focal length must be positive, got {focal_px}"
            )));
        }
        if !(height > T::zero() && height.is_finite()) {
            return Err(Error::Domain(format!(
                "camera height must be positive, got {height}"
            )));
        }
        if image_rows == 0 || image_rows % 2 != 0 {
            return Err(Error::Domain(format!(
                "image rows must be even and positive, got {image_rows}"
            )));
        }
        Ok(Self {
            focal_px,
            height,
            image_rows,
        })
    }

    pub fn focal_px(&self) -> T {
        self.focal_px
    }

    pub fn height(&self) -> T {
        self.height
    }

    pub fn image_rows(&self) -> u32 {
        self.image_rows
    }

    /// Rows from the bottom edge to the horizon, `R/2`.
    pub fn horizon(&self) -> T {
        T::from_u32(self.image_rows / 2).expect("row count representable")
    }

    /// Closest visible ground distance.
    pub fn x0(&self) -> T {
        self.focal_px * self.height / self.horizon()
    }

    /// Pixel depth (real-valued) of the ground point at distance `s`.
    pub fn project_ground_point(&self, s: T) -> Result<T> {
        let x0 = self.x0();
        if !(s >= x0) {
            return Err(Error::OutOfView {
                distance: s.to_f64().unwrap_or(f64::NAN),
                x0: x0.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.horizon() - self.focal_px * self.height / s)
    }

    /// Ground distance imaged at `pixel_depth`.
    pub fn invert_projection(&self, pixel_depth: T) -> Result<T> {
        let horizon = self.horizon();
        if !(pixel_depth >= T::zero()) {
            return Err(Error::Domain(format!(
                "pixel depth must be non-negative, got {pixel_depth}"
            )));
        }
        if pixel_depth >= horizon {
            return Err(Error::Horizon {
                pixel_depth: pixel_depth.to_f64().unwrap_or(f64::NAN),
                horizon: horizon.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.focal_px * self.height / (horizon - pixel_depth))
    }
}

/// Simulates a calibration session: one observation per distance, with
/// Gaussian row noise of `noise_sigma` pixels, rounded to whole rows and
/// clamped to the image. Deterministic for a given `seed`.
pub fn generate_synthetic_set<T: Scalar>(
    cam: &GroundPlaneCamera<T>,
    distances: &[T],
    noise_sigma: T,
    seed: u64,
) -> Result<CalibrationSet> {
    let sigma = noise_sigma.to_f64().unwrap_or(f64::NAN);
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!(
            "noise sigma must be non-negative, got {noise_sigma}"
        )));
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = cam.image_rows();

    let mut observations = Vec::with_capacity(distances.len());
    for (i, &s) in distances.iter().enumerate() {
        let ideal = cam.project_ground_point(s)?.to_f64().unwrap_or(f64::NAN);
        let jitter = if sigma > 0.0 {
            noise.sample(&mut rng)
        } else {
            0.0
        };
        let pixel_depth = (ideal + jitter).round().clamp(0.0, f64::from(rows)) as u32;
        observations.push(CalibrationObservation::new(
            format!("sim{:03}", i + 1),
            s.to_f64().unwrap_or(f64::NAN),
            rows,
            rows - pixel_depth,
        )?);
    }
    Ok(CalibrationSet::new(
        cam.height().to_f64().unwrap_or(f64::NAN),
        cam.x0().to_f64(),
        observations,
    ))
}

/// Thin-lens defocus parameters: aperture `w`, lens parameter `d`, offset `c`
/// and focused distance `U`, all in one length unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefocusCamera<T> {
    aperture: T,
    lens_param: T,
    offset: T,
    focus_distance: T,
}

/// Which side of the focused distance an object lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FocusSide {
    /// `s < U`
    Near,
    /// `s > U`
    Far,
}

impl<T: Scalar> DefocusCamera<T> {
    pub fn new(aperture: T, lens_param: T, offset: T, focus_distance: T) -> Result<Self> {
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !positive(aperture) || !positive(lens_param) || !positive(focus_distance) {
            return Err(Error::Domain("w, d and U must be positive".into()));
        }
        if !(offset.is_finite() && focus_distance + offset > T::zero()) {
            return Err(Error::Domain("U + c must be positive".into()));
        }
        Ok(Self {
            aperture,
            lens_param,
            offset,
            focus_distance,
        })
    }

    pub fn aperture(&self) -> T {
        self.aperture
    }

    pub fn lens_param(&self) -> T {
        self.lens_param
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn focus_distance(&self) -> T {
        self.focus_distance
    }

    /// `B = w / d`.
    pub fn blur_ratio(&self) -> T {
        self.aperture / self.lens_param
    }

    fn wd(&self) -> T {
        self.aperture * self.lens_param
    }

    /// Blur disc width `b = w·d·|1/(s+c) - 1/(U+c)|`.
    pub fn blur_width(&self, s: T) -> Result<T> {
        let sc = s + self.offset;
        if !(sc > T::zero()) {
            return Err(Error::Domain(format!("s + c must be positive, got {sc}")));
        }
        let uc = self.focus_distance + self.offset;
        Ok(self.wd() * (T::one() / sc - T::one() / uc).abs())
    }

    /// Object distance producing blur `b` on the given side of focus.
    pub fn depth_from_blur(&self, b: T, side: FocusSide) -> Result<T> {
        if !(b >= T::zero() && b.is_finite()) {
            return Err(Error::Domain(format!("blur must be non-negative, got {b}")));
        }
        let wd = self.wd();
        let uc = self.focus_distance + self.offset;
        let denom = match side {
            FocusSide::Near => wd + b * uc,
            FocusSide::Far => wd - b * uc,
        };
        if !(denom > T::zero()) {
            return Err(Error::OutOfRangeBlur {
                blur: b.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(wd * uc / denom - self.offset)
    }
}
