//! Least-squares polynomial fitting of real depth against pixel depth.
//!
//! Fits always run on a centered and scaled abscissa `z = (x - μ) / σ`, with
//! `μ` the mean of the abscissae and `σ` their sample standard deviation. On
//! pixel depths of several hundred a degree-8 Vandermonde in raw `x` is far
//! too ill-conditioned to solve directly. Coefficients are then mapped back to
//! the raw basis `y = Σ aₙ xⁿ` for reporting.
//!
//! Storage order is ascending power everywhere; reports print the highest
//! power first.

mod qr;
pub mod student_t;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use qr::{HouseholderQr, Matrix};
pub use student_t::{incomplete_beta, ln_gamma, t_cdf, t_quantile};

/// Affine map from raw abscissa to the fitting basis: `z = (x - mu) / sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbscissaScale<T> {
    pub mu: T,
    pub sigma: T,
}

impl<T: Scalar> AbscissaScale<T> {
    pub fn identity() -> Self {
        Self {
            mu: T::zero(),
            sigma: T::one(),
        }
    }

    /// Mean and sample standard deviation of `xs`; `sigma` falls back to 1
    /// when the spread is zero.
    pub fn from_data(xs: &[T]) -> Self {
        let n = T::from_usize_lossy(xs.len());
        let mu = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
        let ss = xs.iter().fold(T::zero(), |a, &x| a + (x - mu) * (x - mu));
        let sigma = if xs.len() > 1 {
            (ss / (n - T::one())).sqrt()
        } else {
            T::zero()
        };
        let sigma = if sigma > T::zero() && sigma.is_finite() {
            sigma
        } else {
            T::one()
        };
        Self { mu, sigma }
    }

    #[inline]
    pub fn apply(&self, x: T) -> T {
        (x - self.mu) / self.sigma
    }
}

/// Fitted polynomial in both the raw and the scaled basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialModel<T> {
    coeffs_raw: Vec<T>,
    coeffs_scaled: Vec<T>,
    scale: AbscissaScale<T>,
}

impl<T: Scalar> PolynomialModel<T> {
    /// Builds a model from scaled-basis coefficients (ascending powers of `z`).
    pub fn from_scaled(coeffs_scaled: Vec<T>, scale: AbscissaScale<T>) -> Result<Self> {
        check_scale(&scale)?;
        check_coeffs(&coeffs_scaled)?;
        let coeffs_raw = scaled_to_raw(&coeffs_scaled, &scale);
        Ok(Self {
            coeffs_raw,
            coeffs_scaled,
            scale,
        })
    }

    /// Builds a model from raw-basis coefficients (ascending powers of `x`),
    /// deriving the scaled-basis coefficients for the given scale.
    pub fn from_raw(coeffs_raw: Vec<T>, scale: AbscissaScale<T>) -> Result<Self> {
        check_scale(&scale)?;
        check_coeffs(&coeffs_raw)?;
        let coeffs_scaled = raw_to_scaled(&coeffs_raw, &scale);
        Ok(Self {
            coeffs_raw,
            coeffs_scaled,
            scale,
        })
    }

    /// Builds a model from both coefficient sets as persisted. Arity must
    /// agree; numeric agreement between the two is the caller's concern.
    pub fn from_parts(
        coeffs_raw: Vec<T>,
        coeffs_scaled: Vec<T>,
        scale: AbscissaScale<T>,
    ) -> Result<Self> {
        check_scale(&scale)?;
        check_coeffs(&coeffs_raw)?;
        if coeffs_raw.len() != coeffs_scaled.len() {
            return Err(Error::Format(format!(
                "{} raw coefficients but {} scaled coefficients",
                coeffs_raw.len(),
                coeffs_scaled.len()
            )));
        }
        Ok(Self {
            coeffs_raw,
            coeffs_scaled,
            scale,
        })
    }

    pub fn degree(&self) -> usize {
        self.coeffs_raw.len() - 1
    }

    /// `a₀ … a_M`, ascending.
    pub fn coeffs_raw(&self) -> &[T] {
        &self.coeffs_raw
    }

    /// Coefficients of `z⁰ … z^M`.
    pub fn coeffs_scaled(&self) -> &[T] {
        &self.coeffs_scaled
    }

    pub fn scale(&self) -> AbscissaScale<T> {
        self.scale
    }

    /// `Σ aₙ xⁿ`, by Horner's rule on the scaled basis.
    pub fn evaluate(&self, x: T) -> T {
        horner(&self.coeffs_scaled, self.scale.apply(x))
    }

    /// Same polynomial, by Horner's rule on the raw coefficients.
    pub fn evaluate_raw(&self, x: T) -> T {
        horner(&self.coeffs_raw, x)
    }
}

fn check_scale<T: Scalar>(scale: &AbscissaScale<T>) -> Result<()> {
    if !(scale.sigma > T::zero() && scale.sigma.is_finite() && scale.mu.is_finite()) {
        return Err(Error::Domain(format!(
            "invalid abscissa scale mu={} sigma={}",
            scale.mu, scale.sigma
        )));
    }
    Ok(())
}

fn check_coeffs<T: Scalar>(coeffs: &[T]) -> Result<()> {
    if coeffs.is_empty() {
        return Err(Error::Domain(
            "polynomial needs at least one coefficient".into(),
        ));
    }
    Ok(())
}

pub fn horner<T: Scalar>(coeffs: &[T], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

/// Row `j` holds the weights of each scaled coefficient `c_k` in raw `a_j`:
/// `a_j = Σ_k C(k, j) (-μ)^(k-j) σ^(-k) c_k`.
fn scaled_to_raw_matrix<T: Scalar>(degree: usize, scale: &AbscissaScale<T>) -> Vec<Vec<T>> {
    let binom = binomials::<T>(degree);
    let neg_mu = -scale.mu;
    let inv_sigma = T::one() / scale.sigma;
    let mut t = vec![vec![T::zero(); degree + 1]; degree + 1];
    for k in 0..=degree {
        let sk = inv_sigma.powi(k as i32);
        for (j, row) in t.iter_mut().enumerate().take(k + 1) {
            row[k] = binom[k][j] * neg_mu.powi((k - j) as i32) * sk;
        }
    }
    t
}

fn scaled_to_raw<T: Scalar>(scaled: &[T], scale: &AbscissaScale<T>) -> Vec<T> {
    let t = scaled_to_raw_matrix(scaled.len() - 1, scale);
    t.iter()
        .map(|row| {
            row.iter()
                .zip(scaled)
                .fold(T::zero(), |a, (&w, &c)| a + w * c)
        })
        .collect()
}

/// `c_k = Σ_{j≥k} C(j, k) μ^(j-k) σ^k a_j`.
fn raw_to_scaled<T: Scalar>(raw: &[T], scale: &AbscissaScale<T>) -> Vec<T> {
    let degree = raw.len() - 1;
    let binom = binomials::<T>(degree);
    (0..=degree)
        .map(|k| {
            let sk = scale.sigma.powi(k as i32);
            (k..=degree).fold(T::zero(), |acc, j| {
                acc + binom[j][k] * scale.mu.powi((j - k) as i32) * sk * raw[j]
            })
        })
        .collect()
}

fn binomials<T: Scalar>(n: usize) -> Vec<Vec<T>> {
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = vec![T::one(); i + 1];
        for j in 1..i {
            row[j] = rows[i - 1][j - 1] + rows[i - 1][j];
        }
        rows.push(row);
    }
    rows
}

/// Goodness-of-fit summary. `rmse` uses `n - p` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitStats<T> {
    pub n: usize,
    pub p: usize,
    pub sse: T,
    pub sst: T,
    pub rmse: T,
    pub r_squared: T,
    pub adj_r_squared: T,
}

impl<T: Scalar> FitStats<T> {
    /// `sum_y2` is `Σ y²`, used to decide whether a residual is rounding
    /// noise when the ordinates have no variance.
    fn from_sums(n: usize, p: usize, sse: T, sst: T, sum_y2: T) -> Self {
        let dof = T::from_usize_lossy(n - p);
        let rmse = (sse / dof).sqrt();
        let (r_squared, adj_r_squared) = if sse == T::zero() {
            (T::one(), T::one())
        } else if sst == T::zero() {
            if sse <= T::epsilon() * sum_y2 {
                (T::one(), T::one())
            } else {
                (T::neg_infinity(), T::neg_infinity())
            }
        } else {
            let total_dof = T::from_usize_lossy(n - 1);
            (
                T::one() - sse / sst,
                T::one() - (sse / dof) / (sst / total_dof),
            )
        };
        Self {
            n,
            p,
            sse,
            sst,
            rmse,
            r_squared,
            adj_r_squared,
        }
    }

    /// `n - p`.
    pub fn dof(&self) -> usize {
        self.n - self.p
    }

    /// The ordinates have zero variance, so R² is only defined by convention.
    pub fn is_degenerate(&self) -> bool {
        self.sst == T::zero()
    }
}

/// A model together with its statistics on the data it was fitted to.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFit<T> {
    pub model: PolynomialModel<T>,
    pub stats: FitStats<T>,
}

fn check_lengths<T>(xs: &[T], ys: &[T]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Domain(format!(
            "{} abscissae but {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    Ok(())
}

fn check_finite<T: Scalar>(values: &[T]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Domain(format!("non-finite value at index {i}"))),
        None => Ok(()),
    }
}

/// Least-squares polynomial of the given degree through `(xs, ys)`.
///
/// Requires `n > degree + 1` so at least one residual degree of freedom
/// remains, and at least two distinct abscissae.
pub fn fit_polynomial<T: Scalar>(xs: &[T], ys: &[T], degree: usize) -> Result<PolynomialFit<T>> {
    check_lengths(xs, ys)?;
    check_finite(xs)?;
    check_finite(ys)?;
    let (n, p) = (xs.len(), degree + 1);
    if n <= p {
        return Err(Error::InsufficientDof { n, p });
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::RankDeficient("all abscissae are identical".into()));
    }

    let scale = AbscissaScale::from_data(xs);
    let zs: Vec<T> = xs.iter().map(|&x| scale.apply(x)).collect();
    let qr = HouseholderQr::new(Matrix::vandermonde(&zs, degree))?;
    let coeffs_scaled = qr.solve(ys)?;
    let model = PolynomialModel::from_scaled(coeffs_scaled, scale)?;
    let stats = goodness_of_fit(&model, xs, ys)?;
    Ok(PolynomialFit { model, stats })
}

/// SSE, SST, RMSE, R² and adjusted R² of `model` on `(xs, ys)`.
pub fn goodness_of_fit<T: Scalar>(
    model: &PolynomialModel<T>,
    xs: &[T],
    ys: &[T],
) -> Result<FitStats<T>> {
    check_lengths(xs, ys)?;
    let (n, p) = (xs.len(), model.degree() + 1);
    if n <= p {
        return Err(Error::InsufficientDof { n, p });
    }
    let mean = ys.iter().fold(T::zero(), |a, &y| a + y) / T::from_usize_lossy(n);
    let (sse, sst, sum_y2) = xs.iter().zip(ys).fold(
        (T::zero(), T::zero(), T::zero()),
        |(sse, sst, sum_y2), (&x, &y)| {
            let r = y - model.evaluate(x);
            let d = y - mean;
            (sse + r * r, sst + d * d, sum_y2 + y * y)
        },
    );
    Ok(FitStats::from_sums(n, p, sse, sst, sum_y2))
}

/// Two-sided confidence interval for one raw-basis coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientInterval<T> {
    /// Power of `x` this coefficient multiplies.
    pub index: usize,
    pub estimate: T,
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> CoefficientInterval<T> {
    pub fn half_width(&self) -> T {
        (self.upper - self.lower) / T::lit(2.0)
    }

    pub fn contains(&self, value: T) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Coefficient intervals at the given confidence `level`, in ascending power
/// order.
///
/// The covariance `(ZᵀZ)⁻¹ · sse/(n-p)` is formed in the scaled basis and
/// propagated through the linear map to raw coefficients.
pub fn confidence_intervals<T: Scalar>(
    model: &PolynomialModel<T>,
    xs: &[T],
    ys: &[T],
    level: T,
) -> Result<Vec<CoefficientInterval<T>>> {
    if !(level > T::zero() && level < T::one()) {
        return Err(Error::Domain(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let stats = goodness_of_fit(model, xs, ys)?;
    let degree = model.degree();
    let scale = model.scale();
    let zs: Vec<T> = xs.iter().map(|&x| scale.apply(x)).collect();
    let qr = HouseholderQr::new(Matrix::vandermonde(&zs, degree))?;
    let unscaled_cov = qr.normal_inverse()?;

    let variance = stats.sse / T::from_usize_lossy(stats.dof());
    let two = T::lit(2.0);
    let dof =
        u32::try_from(stats.dof()).map_err(|_| Error::Domain("too many observations".into()))?;
    let t = t_quantile(T::one() - (T::one() - level) / two, dof)?;

    let transform = scaled_to_raw_matrix(degree, &scale);
    Ok(transform
        .iter()
        .enumerate()
        .map(|(i, row)| {
            // rowᵀ Σ row
            let mut var = T::zero();
            for (k, &wk) in row.iter().enumerate() {
                for (l, &wl) in row.iter().enumerate() {
                    var = var + wk * unscaled_cov[k][l] * wl;
                }
            }
            let half = t * (var.max(T::zero()) * variance).sqrt();
            let estimate = model.coeffs_raw()[i];
            CoefficientInterval {
                index: i,
                estimate,
                lower: estimate - half,
                upper: estimate + half,
            }
        })
        .collect())
}

/// One admissible candidate in a degree sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry<T> {
    pub degree: usize,
    pub fit: PolynomialFit<T>,
}

/// A candidate degree left out of the sweep, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedDegree {
    pub degree: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport<T> {
    /// Best first; the remainder by ascending RMSE, then degree.
    pub ranked: Vec<SweepEntry<T>>,
    pub skipped: Vec<SkippedDegree>,
    pub best_degree: usize,
}

impl<T: Scalar> SweepReport<T> {
    pub fn best(&self) -> &SweepEntry<T> {
        &self.ranked[0]
    }

    pub fn entry(&self, degree: usize) -> Option<&SweepEntry<T>> {
        self.ranked.iter().find(|e| e.degree == degree)
    }
}

/// Fits every degree in `d_min..=d_max` and picks the lowest dof-adjusted
/// RMSE. RMSEs within a relative `1e-9` of each other (measured against the
/// larger RMSE or the RMS of `ys`, whichever is greater) count as tied and
/// go to the lower degree.
pub fn sweep_degrees<T: Scalar>(
    xs: &[T],
    ys: &[T],
    d_min: usize,
    d_max: usize,
) -> Result<SweepReport<T>> {
    if d_min < 1 || d_min > d_max {
        return Err(Error::Domain(format!(
            "invalid degree range {d_min}..={d_max}"
        )));
    }
    check_lengths(xs, ys)?;
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for degree in d_min..=d_max {
        if xs.len() <= degree + 1 {
            skipped.push(SkippedDegree {
                degree,
                reason: format!(
                    "{} observations leave no residual degree of freedom",
                    xs.len()
                ),
            });
            continue;
        }
        match fit_polynomial(xs, ys, degree) {
            Ok(fit) => entries.push(SweepEntry { degree, fit }),
            Err(e @ Error::RankDeficient(_)) => skipped.push(SkippedDegree {
                degree,
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if entries.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no admissible degree in {d_min}..={d_max} for {} observations",
            xs.len()
        )));
    }

    let y_rms =
        (ys.iter().fold(T::zero(), |a, &y| a + y * y) / T::from_usize_lossy(ys.len())).sqrt();
    let rel = T::lit(1e-9);
    // candidates are in ascending degree, so a strict improvement is needed to move up
    let mut best = 0;
    for (i, e) in entries.iter().enumerate().skip(1) {
        let (a, b) = (e.fit.stats.rmse, entries[best].fit.stats.rmse);
        let tol = rel * a.max(b).max(y_rms);
        if a < b - tol {
            best = i;
        }
    }
    let best_entry = entries.remove(best);
    let best_degree = best_entry.degree;
    entries.sort_by(|a, b| {
        a.fit
            .stats
            .rmse
            .partial_cmp(&b.fit.stats.rmse)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.degree.cmp(&b.degree))
    });
    let mut ranked = Vec::with_capacity(entries.len() + 1);
    ranked.push(best_entry);
    ranked.extend(entries);
    Ok(SweepReport {
        ranked,
        skipped,
        best_degree,
    })
}
