//! The `polydepth` command line.
//!
//! Every subcommand returns a [`CommandOutcome`] rather than printing, so the
//! binary is a thin shell around [`run`] and tests drive commands directly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::caldata::{parse_calibration_csv, validate_set, Severity};
use crate::depthmodel::{
    calibrate, estimate_velocity, load_profile, predict_depth, save_profile, DegreePolicy,
};
use crate::optics::{generate_synthetic_set, DefocusCamera, FocusSide, GroundPlaneCamera};
use crate::pixels::{compute_pixel_depth, find_foot_row, GrayImage};
use crate::polyfit::{confidence_intervals, sweep_degrees};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub report: String,
    /// Data file written by the command, if any.
    pub artifact: Option<PathBuf>,
}

impl CommandOutcome {
    fn ok(report: String, artifact: Option<PathBuf>) -> Self {
        Self {
            exit_code: 0,
            report,
            artifact,
        }
    }

    fn failed(err: &anyhow::Error) -> Self {
        Self {
            exit_code: 1,
            report: format!("error: {err:#}\n"),
            artifact: None,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "polydepth",
    version,
    about = "Estimate object distance from pixel depth with a calibrated polynomial"
)]
pub struct Cli {
    /// Write the command's plot-ready CSV to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub csv_out: Option<PathBuf>,

    /// Only report errors.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a camera profile from a calibration CSV.
    ///
    /// CSV out columns: pixel_depth,actual_depth_cm,fitted_cm,residual_cm
    Calibrate(CalibrateArgs),
    /// Compare polynomial degrees on a calibration CSV.
    ///
    /// CSV out columns: degree,sse,rmse,r2,adj_r2
    Sweep(SweepArgs),
    /// Predict depth for pixel depths using a saved profile.
    ///
    /// CSV out columns: pixel_depth,depth_cm,uncertainty_cm,extrapolated
    Predict(PredictArgs),
    /// Generate a calibration CSV from an ideal ground-plane camera.
    ///
    /// CSV out columns: photo_id,actual_depth_cm,pixel_depth,R,r
    Simulate(SimulateArgs),
    /// Depth and velocity over a timed sequence of pixel depths.
    ///
    /// Input columns: t_s,pixel_depth. CSV out columns:
    /// t_s,pixel_depth,depth_cm,velocity_cm_s
    Velocity(VelocityArgs),
    /// Thin-lens blur width for a distance, or distance for a blur width.
    ///
    /// CSV out columns: s,b
    Blur(BlurArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("policy").required(true).args(["degree", "auto"])))]
pub struct CalibrateArgs {
    /// Calibration CSV (photo_id,actual_depth_cm,pixel_depth,R,r).
    #[arg(long, value_name = "PATH")]
    pub csv: PathBuf,
    /// Camera height above the ground in cm.
    #[arg(long)]
    pub height: f64,
    /// Closest sight distance in cm, stored with the profile.
    #[arg(long)]
    pub x0: Option<f64>,
    /// Fit exactly this degree.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Sweep degrees MIN:MAX and keep the lowest RMSE.
    #[arg(long, value_name = "MIN:MAX", value_parser = parse_degree_range)]
    pub auto: Option<(usize, usize)>,
    /// Camera label stored in the profile.
    #[arg(long, default_value = "camera")]
    pub label: String,
    /// Profile output path.
    #[arg(short, long, value_name = "PATH")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_name = "PATH")]
    pub csv: PathBuf,
    #[arg(long)]
    pub height: f64,
    /// Degree range MIN:MAX.
    #[arg(long, value_name = "MIN:MAX", default_value = "1:9", value_parser = parse_degree_range)]
    pub range: (usize, usize),
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Saved camera profile.
    pub profile: PathBuf,
    /// Pixel depths to evaluate.
    #[arg(allow_negative_numbers = true)]
    pub pixel_depths: Vec<f64>,
    /// Also measure the pixel depth of the object in this PGM image.
    #[arg(long, value_name = "PATH")]
    pub pgm: Option<PathBuf>,
    /// Background threshold for foot detection in `--pgm`.
    #[arg(long, default_value_t = 0)]
    pub threshold: u32,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Focal length in pixels.
    #[arg(long)]
    pub f: f64,
    /// Camera height in cm.
    #[arg(long)]
    pub h: f64,
    /// Image height in pixels (even).
    #[arg(long)]
    pub rows: u32,
    /// Gaussian row noise, in pixels.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ground distances in cm, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub dist: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct VelocityArgs {
    pub profile: PathBuf,
    /// CSV with header t_s,pixel_depth.
    pub samples: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Side {
    Near,
    Far,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("query").required(true).args(["s", "b"])))]
pub struct BlurArgs {
    /// Product w·d; equivalent to --w WD --d 1.
    #[arg(long, conflicts_with_all = ["w", "d"])]
    pub wd: Option<f64>,
    /// Aperture w.
    #[arg(long, requires = "d")]
    pub w: Option<f64>,
    /// Lens parameter d.
    #[arg(long, requires = "w")]
    pub d: Option<f64>,
    /// Offset c.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c: f64,
    /// Focused distance U.
    #[arg(long = "U", id = "focus")]
    pub focus: f64,
    /// Object distance: report its blur width.
    #[arg(long)]
    pub s: Option<f64>,
    /// Blur width: report the object distance on `--side`.
    #[arg(long, requires = "side")]
    pub b: Option<f64>,
    #[arg(long, value_enum)]
    pub side: Option<Side>,
}

fn parse_degree_range(raw: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = raw
        .split_once(':')
        .ok_or_else(|| format!("expected MIN:MAX, got `{raw}`"))?;
    let lo: usize = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad degree `{lo}`"))?;
    let hi: usize = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad degree `{hi}`"))?;
    if lo > hi {
        return Err(format!("empty degree range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

/// Parses arguments (including the program name) and runs the command.
pub fn run<I, S>(args: I) -> CommandOutcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => CommandOutcome {
            exit_code: e.exit_code(),
            report: e.render().to_string(),
            artifact: None,
        },
    }
}

pub fn execute(cli: &Cli) -> CommandOutcome {
    let csv_out = cli.csv_out.as_deref();
    let result = match &cli.command {
        Command::Calibrate(a) => run_calibrate(a, csv_out),
        Command::Sweep(a) => run_sweep(a, csv_out),
        Command::Predict(a) => run_predict(a, csv_out),
        Command::Simulate(a) => run_simulate(a, csv_out),
        Command::Velocity(a) => run_velocity(a, csv_out),
        Command::Blur(a) => run_blur(a, csv_out),
    };
    match result {
        Ok(mut outcome) => {
            if cli.quiet {
                outcome.report.clear();
            }
            outcome
        }
        Err(e) => CommandOutcome::failed(&e),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_artifact(path: Option<&Path>, contents: &str) -> anyhow::Result<Option<PathBuf>> {
    match path {
        Some(p) => {
            fs::write(p, contents).with_context(|| format!("writing {}", p.display()))?;
            Ok(Some(p.to_path_buf()))
        }
        None => Ok(None),
    }
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

pub fn run_calibrate(
    args: &CalibrateArgs,
    csv_out: Option<&Path>,
) -> anyhow::Result<CommandOutcome> {
    let mut set = parse_calibration_csv(&read(&args.csv)?, args.height)
        .with_context(|| format!("parsing {}", args.csv.display()))?;
    set.x0 = args.x0;
    let policy = match (args.degree, args.auto) {
        (Some(d), _) => DegreePolicy::Fixed(d),
        (None, Some((min, max))) => DegreePolicy::Auto { min, max },
        (None, None) => bail!("one of --degree or --auto is required"),
    };

    let mut report = String::new();
    let findings = validate_set(&set);
    for f in findings.iter().filter(|f| f.severity == Severity::Warning) {
        writeln!(report, "{f}")?;
    }

    if let DegreePolicy::Auto { min, max } = policy {
        let sweep = sweep_degrees(&set.pixel_depths(), &set.actual_depths(), min, max)?;
        report.push_str(&sweep_table(&sweep));
    }

    let profile = calibrate(&set, policy, args.label.clone())?;
    let xs = set.pixel_depths();
    let ys = set.actual_depths();
    let intervals = confidence_intervals(&profile.model, &xs, &ys, 0.95)?;
    let s = &profile.stats;
    let degree = profile.degree();

    writeln!(report, "camera: {}", profile.camera_label)?;
    writeln!(report, "height: {} cm", profile.camera_height)?;
    writeln!(report, "observations: {}", s.n)?;
    writeln!(report, "degree: {degree}")?;
    writeln!(report, "coefficients (highest power first, 95% bounds):")?;
    for (k, ci) in intervals.iter().rev().enumerate() {
        writeln!(
            report,
            "  p{} = {}  ({}, {})",
            k + 1,
            sci(ci.estimate),
            sci(ci.lower),
            sci(ci.upper)
        )?;
    }
    writeln!(report, "SSE: {:.3}", s.sse)?;
    writeln!(report, "R-square: {:.4}", s.r_squared)?;
    writeln!(report, "Adjusted R-square: {:.4}", s.adj_r_squared)?;
    writeln!(report, "RMSE: {:.2}", s.rmse)?;

    fs::write(&args.output, save_profile(&profile))
        .with_context(|| format!("writing {}", args.output.display()))?;
    writeln!(report, "profile: {}", args.output.display())?;

    let mut csv = String::from("pixel_depth,actual_depth_cm,fitted_cm,residual_cm\n");
    for (&x, &y) in xs.iter().zip(&ys) {
        let fitted = profile.model.evaluate(x);
        writeln!(csv, "{x},{y},{fitted},{}", y - fitted)?;
    }
    let artifact = write_artifact(csv_out, &csv)?;
    Ok(CommandOutcome::ok(
        report,
        artifact.or(Some(args.output.clone())),
    ))
}

fn sweep_table(sweep: &crate::polyfit::SweepReport<f64>) -> String {
    let mut out = String::from("degree        SSE      RMSE  R-square  Adj R-square\n");
    let mut entries: Vec<_> = sweep.ranked.iter().collect();
    entries.sort_by_key(|e| e.degree);
    for e in entries {
        let s = &e.fit.stats;
        let mark = if e.degree == sweep.best_degree {
            " *"
        } else {
            ""
        };
        out.push_str(&format!(
            "{:>6} {:>10.3} {:>9.3} {:>9.5} {:>13.5}{mark}\n",
            e.degree, s.sse, s.rmse, s.r_squared, s.adj_r_squared
        ));
    }
    for skip in &sweep.skipped {
        out.push_str(&format!("{:>6} skipped: {}\n", skip.degree, skip.reason));
    }
    out.push_str(&format!("selected degree: {}\n", sweep.best_degree));
    out
}

pub fn run_sweep(args: &SweepArgs, csv_out: Option<&Path>) -> anyhow::Result<CommandOutcome> {
    let set = parse_calibration_csv(&read(&args.csv)?, args.height)
        .with_context(|| format!("parsing {}", args.csv.display()))?;
    let (min, max) = args.range;
    let sweep = sweep_degrees(&set.pixel_depths(), &set.actual_depths(), min, max)?;
    let mut csv = String::from("degree,sse,rmse,r2,adj_r2\n");
    let mut entries: Vec<_> = sweep.ranked.iter().collect();
    entries.sort_by_key(|e| e.degree);
    for e in entries {
        let s = &e.fit.stats;
        writeln!(
            csv,
            "{},{},{},{},{}",
            e.degree, s.sse, s.rmse, s.r_squared, s.adj_r_squared
        )?;
    }
    let artifact = write_artifact(csv_out, &csv)?;
    Ok(CommandOutcome::ok(sweep_table(&sweep), artifact))
}

pub fn run_predict(args: &PredictArgs, csv_out: Option<&Path>) -> anyhow::Result<CommandOutcome> {
    let profile = load_profile(&read(&args.profile)?)
        .with_context(|| format!("loading {}", args.profile.display()))?;
    let mut queries = args.pixel_depths.clone();
    let mut report = String::new();
    if let Some(path) = &args.pgm {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let image = GrayImage::from_pgm(&bytes)?;
        let foot = find_foot_row(&image, args.threshold)?;
        let px = compute_pixel_depth(image.rows() as i64, foot as i64)?;
        writeln!(
            report,
            "{}: foot row {foot}, pixel depth {px}",
            path.display()
        )?;
        queries.push(f64::from(px));
    }
    if queries.is_empty() {
        bail!("no pixel depths given");
    }

    let mut csv = String::from("pixel_depth,depth_cm,uncertainty_cm,extrapolated\n");
    for &x in &queries {
        let est = predict_depth(&profile, x)?;
        writeln!(
            report,
            "pixel_depth {x}: depth {:.2} cm  +/- {:.2} cm{}",
            est.depth,
            est.uncertainty,
            if est.extrapolated {
                "  [extrapolated]"
            } else {
                ""
            }
        )?;
        writeln!(
            csv,
            "{x},{},{},{}",
            est.depth, est.uncertainty, est.extrapolated
        )?;
    }
    let artifact = write_artifact(csv_out, &csv)?;
    Ok(CommandOutcome::ok(report, artifact))
}

pub fn run_simulate(args: &SimulateArgs, csv_out: Option<&Path>) -> anyhow::Result<CommandOutcome> {
    let cam = GroundPlaneCamera::new(args.f, args.h, args.rows)?;
    let set = generate_synthetic_set(&cam, &args.dist, args.noise, args.seed)?;
    let csv = set.to_csv();
    let mut report = format!("# X0 = {} cm\n", cam.x0());
    report.push_str(&csv);
    let artifact = write_artifact(csv_out, &csv)?;
    Ok(CommandOutcome::ok(report, artifact))
}

fn parse_velocity_samples(text: &str) -> anyhow::Result<Vec<(f64, f64)>> {
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match rows.next() {
        Some((_, "t_s,pixel_depth")) => {}
        Some((line, other)) => {
            bail!("line {line}: expected header `t_s,pixel_depth`, found `{other}`")
        }
        None => bail!("empty sample file"),
    }
    rows.map(|(line, row)| {
        let (t, px) = row
            .split_once(',')
            .with_context(|| format!("line {line}: expected 2 fields"))?;
        let t: f64 = t
            .trim()
            .parse()
            .with_context(|| format!("line {line}: bad time `{t}`"))?;
        let px: f64 = px
            .trim()
            .parse()
            .with_context(|| format!("line {line}: bad pixel depth `{px}`"))?;
        Ok((t, px))
    })
    .collect()
}

pub fn run_velocity(args: &VelocityArgs, csv_out: Option<&Path>) -> anyhow::Result<CommandOutcome> {
    let profile = load_profile(&read(&args.profile)?)
        .with_context(|| format!("loading {}", args.profile.display()))?;
    let samples = parse_velocity_samples(&read(&args.samples)?)
        .with_context(|| format!("parsing {}", args.samples.display()))?;
    let track = estimate_velocity(&profile, &samples)?;
    let mut csv = String::from("t_s,pixel_depth,depth_cm,velocity_cm_s\n");
    for (v, (_, px)) in track.iter().zip(&samples) {
        writeln!(csv, "{},{px},{},{}", v.t, v.depth, v.velocity)?;
    }
    let artifact = write_artifact(csv_out, &csv)?;
    Ok(CommandOutcome::ok(csv, artifact))
}

pub fn run_blur(args: &BlurArgs, csv_out: Option<&Path>) -> anyhow::Result<CommandOutcome> {
    let (w, d) = match (args.wd, args.w, args.d) {
        (Some(wd), _, _) => (wd, 1.0),
        (None, Some(w), Some(d)) => (w, d),
        _ => bail!("give either --wd or both --w and --d"),
    };
    let cam = DefocusCamera::new(w, d, args.c, args.focus)?;
    let (s, b) = match (args.s, args.b) {
        (Some(s), _) => (s, cam.blur_width(s)?),
        (None, Some(b)) => {
            let side = match args.side {
                Some(Side::Near) => FocusSide::Near,
                Some(Side::Far) => FocusSide::Far,
                None => bail!("--b requires --side"),
            };
            (cam.depth_from_blur(b, side)?, b)
        }
        (None, None) => bail!("give --s or --b"),
    };
    let report = if args.s.is_some() {
        format!("b = {b}\n")
    } else {
        format!("s = {s}\n")
    };
    let artifact = write_artifact(csv_out, &format!("s,b\n{s},{b}\n"))?;
    Ok(CommandOutcome::ok(report, artifact))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_range_parser() {
        assert_eq!(parse_degree_range("6:9"), Ok((6, 9)));
        assert!(parse_degree_range("9:6").is_err());
        assert!(parse_degree_range("6").is_err());
        assert!(parse_degree_range("a:9").is_err());
    }

    #[test]
    fn velocity_sample_parser() {
        let rows = parse_velocity_samples("# track\nt_s,pixel_depth\n0,100\n0.5, 120\n").unwrap();
        assert_eq!(rows, vec![(0.0, 100.0), (0.5, 120.0)]);
        assert!(parse_velocity_samples("t,px\n0,1\n").is_err());
        assert!(parse_velocity_samples("t_s,pixel_depth\n0;1\n").is_err());
    }

    #[test]
    fn scientific_four_digits() {
        assert_eq!(sci(3.499e-14), "3.499e-14");
        assert_eq!(sci(4276.0), "4.276e3");
    }
}
