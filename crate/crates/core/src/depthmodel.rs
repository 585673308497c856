//! Camera profiles: a fitted polynomial bound to one camera and mounting
//! height, with depth, monotonicity and velocity queries on top.

use serde::{Deserialize, Serialize};

use crate::caldata::{validate_set, CalibrationSet};
use crate::error::{Error, Result};
use crate::polyfit::{fit_polynomial, sweep_degrees, AbscissaScale, FitStats, PolynomialModel};

pub const FORMAT_VERSION: u32 = 1;

/// How the polynomial degree is chosen during calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreePolicy {
    Fixed(usize),
    /// Sweep `min..=max` and keep the lowest dof-adjusted RMSE.
    Auto {
        min: usize,
        max: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraProfile {
    pub camera_label: String,
    pub camera_height: f64,
    pub x0: Option<f64>,
    pub model: PolynomialModel<f64>,
    pub stats: FitStats<f64>,
    /// Smallest and largest calibrated pixel depth.
    pub pixel_range: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthEstimate {
    pub depth: f64,
    /// The query lies outside the calibrated pixel range.
    pub extrapolated: bool,
    /// Fit RMSE, in cm.
    pub uncertainty: f64,
}

/// Fits the calibration set under `policy`. Aborts on any error-severity
/// validation finding; warnings pass through.
pub fn calibrate(
    set: &CalibrationSet,
    policy: DegreePolicy,
    camera_label: impl Into<String>,
) -> Result<CameraProfile> {
    let errors: Vec<_> = validate_set(set)
        .into_iter()
        .filter(|f| f.is_error())
        .collect();
    if !errors.is_empty() {
        return Err(Error::Validation(errors));
    }
    let xs = set.pixel_depths();
    let ys = set.actual_depths();
    let fit = match policy {
        DegreePolicy::Fixed(degree) => fit_polynomial(&xs, &ys, degree)?,
        DegreePolicy::Auto { min, max } => {
            let mut report = sweep_degrees(&xs, &ys, min, max)?;
            report.ranked.swap_remove(0).fit
        }
    };
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CameraProfile {
        camera_label: camera_label.into(),
        camera_height: set.camera_height,
        x0: set.x0,
        model: fit.model,
        stats: fit.stats,
        pixel_range: (lo, hi),
    })
}

impl CameraProfile {
    pub fn degree(&self) -> usize {
        self.model.degree()
    }

    pub fn in_range(&self, pixel_depth: f64) -> bool {
        self.pixel_range.0 <= pixel_depth && pixel_depth <= self.pixel_range.1
    }
}

/// Real depth for a pixel depth, flagged when outside the calibrated range.
pub fn predict_depth(profile: &CameraProfile, pixel_depth: f64) -> Result<DepthEstimate> {
    if !(pixel_depth.is_finite() && pixel_depth >= 0.0) {
        return Err(Error::Domain(format!(
            "pixel depth must be finite and non-negative, got {pixel_depth}"
        )));
    }
    Ok(DepthEstimate {
        depth: profile.model.evaluate(pixel_depth),
        extrapolated: !profile.in_range(pixel_depth),
        uncertainty: profile.stats.rmse,
    })
}

/// An adjacent pair of 1-pixel samples where predicted depth drops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityViolation {
    pub from_pixel: f64,
    pub to_pixel: f64,
    pub from_depth: f64,
    pub to_depth: f64,
}

/// Samples the model at 1-pixel steps across the calibrated range and
/// reports every strict decrease.
pub fn check_monotonic(profile: &CameraProfile) -> Vec<MonotonicityViolation> {
    let (lo, hi) = profile.pixel_range;
    let steps = (hi - lo).floor() as usize;
    let samples: Vec<(f64, f64)> = (0..=steps)
        .map(|k| {
            let x = lo + k as f64;
            (x, profile.model.evaluate(x))
        })
        .collect();
    samples
        .windows(2)
        .filter(|w| w[1].1 < w[0].1)
        .map(|w| MonotonicityViolation {
            from_pixel: w[0].0,
            to_pixel: w[1].0,
            from_depth: w[0].1,
            to_depth: w[1].1,
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct ScaleDocument {
    mu: f64,
    sigma: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct StatsDocument {
    n: usize,
    p: usize,
    sse: f64,
    sst: f64,
    rmse: f64,
    r2: f64,
    adj_r2: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileDocument {
    format_version: u32,
    camera_label: String,
    height_cm: f64,
    x0_cm: Option<f64>,
    degree: usize,
    /// Ascending power order.
    coeffs_raw: Vec<f64>,
    /// Scaled-basis coefficients, ascending. Optional on input; derived from
    /// `coeffs_raw` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coeffs_scaled: Option<Vec<f64>>,
    scale: ScaleDocument,
    stats: StatsDocument,
    pixel_range: [f64; 2],
}

/// Serializes a profile as a UTF-8 JSON document.
pub fn save_profile(profile: &CameraProfile) -> String {
    let scale = profile.model.scale();
    let s = &profile.stats;
    let doc = ProfileDocument {
        format_version: FORMAT_VERSION,
        camera_label: profile.camera_label.clone(),
        height_cm: profile.camera_height,
        x0_cm: profile.x0,
        degree: profile.degree(),
        coeffs_raw: profile.model.coeffs_raw().to_vec(),
        coeffs_scaled: Some(profile.model.coeffs_scaled().to_vec()),
        scale: ScaleDocument {
            mu: scale.mu,
            sigma: scale.sigma,
        },
        stats: StatsDocument {
            n: s.n,
            p: s.p,
            sse: s.sse,
            sst: s.sst,
            rmse: s.rmse,
            r2: s.r_squared,
            adj_r2: s.adj_r_squared,
        },
        pixel_range: [profile.pixel_range.0, profile.pixel_range.1],
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("profile document serializes");
    out.push('\n');
    out
}

/// Parses a profile document, checking schema and internal arity.
pub fn load_profile(text: &str) -> Result<CameraProfile> {
    let doc: ProfileDocument =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            doc.format_version
        )));
    }
    if doc.coeffs_raw.len() != doc.degree + 1 {
        return Err(Error::Format(format!(
            "degree {} requires {} coefficients in `coeffs_raw`, found {}",
            doc.degree,
            doc.degree + 1,
            doc.coeffs_raw.len()
        )));
    }
    if doc.stats.p != doc.degree + 1 {
        return Err(Error::Format(format!(
            "`stats.p` is {} but degree {} has {} parameters",
            doc.stats.p,
            doc.degree,
            doc.degree + 1
        )));
    }
    if doc.stats.n < doc.degree + 2 {
        return Err(Error::Format(format!(
            "`stats.n` = {} is too small for degree {}",
            doc.stats.n, doc.degree
        )));
    }
    let [lo, hi] = doc.pixel_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Format(format!("invalid `pixel_range` [{lo}, {hi}]")));
    }
    let scale = AbscissaScale {
        mu: doc.scale.mu,
        sigma: doc.scale.sigma,
    };
    let bad_scale = |e: Error| Error::Format(format!("invalid `scale`: {e}"));
    let model = match doc.coeffs_scaled {
        Some(scaled) => {
            if scaled.len() != doc.degree + 1 {
                return Err(Error::Format(format!(
                    "degree {} requires {} coefficients in `coeffs_scaled`, found {}",
                    doc.degree,
                    doc.degree + 1,
                    scaled.len()
                )));
            }
            PolynomialModel::from_parts(doc.coeffs_raw, scaled, scale).map_err(bad_scale)?
        }
        None => PolynomialModel::from_raw(doc.coeffs_raw, scale).map_err(bad_scale)?,
    };
    let s = doc.stats;
    Ok(CameraProfile {
        camera_label: doc.camera_label,
        camera_height: doc.height_cm,
        x0: doc.x0_cm,
        model,
        stats: FitStats {
            n: s.n,
            p: s.p,
            sse: s.sse,
            sst: s.sst,
            rmse: s.rmse,
            r_squared: s.r2,
            adj_r_squared: s.adj_r2,
        },
        pixel_range: (lo, hi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocitySample {
    pub t: f64,
    pub depth: f64,
    /// cm/s; negative means approaching the camera.
    pub velocity: f64,
}

/// Depth per `(t, pixel_depth)` sample and its rate of change: central
/// differences inside, one-sided differences at the two ends.
pub fn estimate_velocity(
    profile: &CameraProfile,
    samples: &[(f64, f64)],
) -> Result<Vec<VelocitySample>> {
    if samples.len() < 2 {
        return Err(Error::Domain(format!(
            "velocity needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if let Some(i) = samples.windows(2).position(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Domain(format!(
            "timestamps must strictly increase (sample {})",
            i + 1
        )));
    }
    let depths = samples
        .iter()
        .map(|&(_, px)| predict_depth(profile, px).map(|e| e.depth))
        .collect::<Result<Vec<_>>>()?;
    let t: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let last = samples.len() - 1;
    Ok((0..=last)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == last => (last - 1, last),
                i => (i - 1, i + 1),
            };
            VelocitySample {
                t: t[i],
                depth: depths[i],
                velocity: (depths[b] - depths[a]) / (t[b] - t[a]),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caldata::CalibrationObservation;
    use crate::datasets;
    use proptest::prelude::*;

    fn profile_a() -> CameraProfile {
        calibrate(&datasets::appendix_a(), DegreePolicy::Fixed(8), "sony-a").unwrap()
    }

    /// Profile whose model is `y = x` over [0, 1000].
    fn identity_profile() -> CameraProfile {
        CameraProfile {
            camera_label: "id".into(),
            camera_height: 100.0,
            x0: None,
            model: PolynomialModel::from_raw(vec![0.0, 1.0], AbscissaScale::identity()).unwrap(),
            stats: FitStats {
                n: 3,
                p: 2,
                sse: 0.0,
                sst: 1.0,
                rmse: 0.0,
                r_squared: 1.0,
                adj_r_squared: 1.0,
            },
            pixel_range: (0.0, 1000.0),
        }
    }

    #[test]
    fn calibrate_fixed_degree() {
        let a = profile_a();
        assert_eq!(a.degree(), 8);
        assert!((a.stats.rmse - 12.86).abs() < 0.05);
        assert_eq!(a.pixel_range, (55.0, 534.0));
        assert_eq!(a.x0, Some(415.0));
    }

    #[test]
    fn calibrate_auto_uses_sweep_winner() {
        let set = datasets::appendix_c();
        let p = calibrate(&set, DegreePolicy::Auto { min: 6, max: 9 }, "c").unwrap();
        let report = sweep_degrees(&set.pixel_depths(), &set.actual_depths(), 6, 9).unwrap();
        assert_eq!(p.degree(), report.best_degree);
        assert_eq!(p.stats, report.best().fit.stats);
    }

    #[test]
    fn calibrate_rejects_too_few_points() {
        let set = CalibrationSet::new(
            100.0,
            None,
            vec![
                CalibrationObservation::new("1", 450.0, 1944, 1889).unwrap(),
                CalibrationObservation::new("2", 480.0, 1944, 1836).unwrap(),
            ],
        );
        assert!(matches!(
            calibrate(&set, DegreePolicy::Fixed(2), "x"),
            Err(Error::InsufficientDof { n: 2, p: 3 })
        ));
    }

    #[test]
    fn calibrate_aborts_on_validation_errors() {
        let mut set = datasets::appendix_b();
        set.observations[0].pixel_depth = 7;
        assert!(matches!(
            calibrate(&set, DegreePolicy::Fixed(3), "x"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn predictions() {
        let a = profile_a();
        let near = predict_depth(&a, 55.0).unwrap();
        assert!((near.depth - 450.0).abs() < 3.0 * 12.86);
        assert!(!near.extrapolated);
        assert_eq!(near.uncertainty, a.stats.rmse);
        assert!(predict_depth(&a, 600.0).unwrap().extrapolated);
        assert!(predict_depth(&a, 54.0).unwrap().extrapolated);
        assert!(matches!(predict_depth(&a, -5.0), Err(Error::Domain(_))));
        assert!(predict_depth(&a, f64::NAN).is_err());
    }

    #[test]
    fn appendix_a_profile_is_monotone() {
        assert!(check_monotonic(&profile_a()).is_empty());
    }

    #[test]
    fn appendix_b_profile_turns_over_after_first_point() {
        // the degree-7 refit falls from 132 px to about 152 px before climbing to 202 px
        let b = calibrate(&datasets::appendix_b(), DegreePolicy::Fixed(7), "b").unwrap();
        let v = check_monotonic(&b);
        assert_eq!(v.len(), 20);
        for w in &v {
            assert!(w.from_pixel >= 132.0 && w.to_pixel <= 152.0, "{w:?}");
            assert!(w.to_depth < w.from_depth);
        }
    }

    #[test]
    fn wiggly_cubic_is_flagged() {
        // y = x³ - 30x² + 200x falls between its turning points near 4.2 and 15.8
        let model =
            PolynomialModel::from_raw(vec![0.0, 200.0, -30.0, 1.0], AbscissaScale::identity())
                .unwrap();
        let p = CameraProfile {
            model,
            pixel_range: (0.0, 20.0),
            ..identity_profile()
        };
        let v = check_monotonic(&p);
        assert!(!v.is_empty());
        assert!(v.iter().all(|w| w.from_pixel >= 4.0 && w.to_pixel <= 17.0));
    }

    #[test]
    fn constant_model_has_no_violations() {
        let p = CameraProfile {
            model: PolynomialModel::from_raw(vec![5.0], AbscissaScale::identity()).unwrap(),
            ..identity_profile()
        };
        assert!(check_monotonic(&p).is_empty());
    }

    #[test]
    fn profile_round_trip() {
        let a = profile_a();
        let text = save_profile(&a);
        let back = load_profile(&text).unwrap();
        assert_eq!(back, a);
        for x in [55.0, 300.0, 534.0] {
            assert_eq!(
                predict_depth(&back, x).unwrap(),
                predict_depth(&a, x).unwrap()
            );
        }
    }

    #[test]
    fn profile_without_scaled_coefficients_still_loads() {
        let a = profile_a();
        let mut doc: serde_json::Value = serde_json::from_str(&save_profile(&a)).unwrap();
        doc.as_object_mut().unwrap().remove("coeffs_scaled");
        let back = load_profile(&doc.to_string()).unwrap();
        for x in [55.0, 300.0, 534.0] {
            let (p, q) = (a.model.evaluate(x), back.model.evaluate(x));
            assert!((p - q).abs() < 1e-9 * q.abs(), "{p} vs {q}");
        }
    }

    #[test]
    fn profile_format_errors() {
        let a = profile_a();
        let doc: serde_json::Value = serde_json::from_str(&save_profile(&a)).unwrap();

        let mut missing = doc.clone();
        missing.as_object_mut().unwrap().remove("coeffs_raw");
        match load_profile(&missing.to_string()) {
            Err(Error::Format(msg)) => assert!(msg.contains("coeffs_raw"), "{msg}"),
            other => panic!("expected format error, got {other:?}"),
        }

        let mut short = doc.clone();
        short["coeffs_raw"].as_array_mut().unwrap().pop();
        match load_profile(&short.to_string()) {
            Err(Error::Format(msg)) => assert!(msg.contains("degree 8"), "{msg}"),
            other => panic!("expected arity error, got {other:?}"),
        }

        let mut version = doc.clone();
        version["format_version"] = 2.into();
        assert!(matches!(
            load_profile(&version.to_string()),
            Err(Error::Format(_))
        ));

        let mut sigma = doc.clone();
        sigma["scale"]["sigma"] = 0.0.into();
        assert!(matches!(
            load_profile(&sigma.to_string()),
            Err(Error::Format(_))
        ));

        let mut range = doc;
        range["pixel_range"] = serde_json::json!([10.0, 10.0]);
        assert!(matches!(
            load_profile(&range.to_string()),
            Err(Error::Format(_))
        ));

        assert!(matches!(load_profile("not json"), Err(Error::Format(_))));
    }

    #[test]
    fn velocity_two_points() {
        // identity model: pixel depth is the depth in cm
        let v = estimate_velocity(&identity_profile(), &[(0.0, 500.0), (1.0, 450.0)]).unwrap();
        assert_eq!(v[0].velocity, -50.0);
        assert_eq!(v[1].velocity, -50.0);
    }

    #[test]
    fn velocity_constant_and_central() {
        let p = identity_profile();
        let still: Vec<(f64, f64)> = (0..5).map(|i| (f64::from(i), 300.0)).collect();
        assert!(estimate_velocity(&p, &still)
            .unwrap()
            .iter()
            .all(|s| s.velocity == 0.0));

        let v = estimate_velocity(&p, &[(0.0, 400.0), (1.0, 450.0), (2.0, 520.0)]).unwrap();
        assert_eq!(v[1].velocity, 60.0);
        assert_eq!(v[0].velocity, 50.0);
        assert_eq!(v[2].velocity, 70.0);
    }

    #[test]
    fn velocity_errors() {
        let p = identity_profile();
        assert!(estimate_velocity(&p, &[(0.0, 1.0)]).is_err());
        assert!(estimate_velocity(&p, &[(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(estimate_velocity(&p, &[(1.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(estimate_velocity(&p, &[(0.0, 1.0), (1.0, -2.0)]).is_err());
    }

    proptest! {
        #[test]
        fn extrapolation_flag_is_range_complement(x in 0.0f64..2000.0) {
            let a = profile_a();
            let est = predict_depth(&a, x).unwrap();
            prop_assert_eq!(est.extrapolated, !(55.0..=534.0).contains(&x));
        }

        #[test]
        fn saved_predictions_survive(x in 55.0f64..534.0) {
            let a = profile_a();
            let back = load_profile(&save_profile(&a)).unwrap();
            let (p, q) = (a.model.evaluate(x), back.model.evaluate(x));
            prop_assert!((p - q).abs() <= 1e-12 * p.abs());
        }

        #[test]
        fn time_reversal_negates_velocity(
            steps in proptest::collection::vec((0.1f64..3.0, 60.0f64..530.0), 2..12),
        ) {
            let a = profile_a();
            let mut t = 0.0;
            let forward: Vec<(f64, f64)> = steps.iter().map(|&(dt, px)| { t += dt; (t, px) }).collect();
            let end = t;
            let backward: Vec<(f64, f64)> = forward.iter().rev().map(|&(t, px)| (end - t, px)).collect();
            let f = estimate_velocity(&a, &forward).unwrap();
            let b = estimate_velocity(&a, &backward).unwrap();
            for (x, y) in f.iter().zip(b.iter().rev()) {
                prop_assert!((x.velocity + y.velocity).abs() <= 1e-9 * (1.0 + x.velocity.abs()));
            }
        }
    }
}
