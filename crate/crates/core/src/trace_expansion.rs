//! Relative heat traces and their small-time expansion
//! `R(t) ~ a0/t + (a10 + a11 log t)/√t + a2 + O(√t)`.

use crate::error::{domain, Error, Result};
use crate::special::EULER_GAMMA;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

/// Coefficients of `a0 t⁻¹ + (a10 + a11 log t) t^{-1/2} + a2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoeffs {
    pub a0: f64,
    pub a10: f64,
    pub a11: f64,
    pub a2: f64,
}

impl ExpansionCoeffs {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_finite(&self) -> bool {
        self.a0.is_finite() && self.a10.is_finite() && self.a11.is_finite() && self.a2.is_finite()
    }

    fn as_array(&self) -> [f64; 4] {
        [self.a0, self.a10, self.a11, self.a2]
    }
}

impl std::ops::Add for ExpansionCoeffs {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { a0: self.a0 + o.a0, a10: self.a10 + o.a10, a11: self.a11 + o.a11, a2: self.a2 + o.a2 }
    }
}

/// Small-t coefficients of the relative trace of a surface of area `area`,
/// Euler characteristic `euler_char` and `cusps` cusps against the model
/// cusp operator:
///
/// `a0 = A/4π`, `a10 = γm/(2√(4π))`, `a11 = m/(2√(4π))`, `a2 = χ/6 + m/4`.
pub fn expansion_from_geometry(area: f64, euler_char: i64, cusps: u32) -> Result<ExpansionCoeffs> {
    if !(area.is_finite() && area > 0.0) {
        return domain(format!("area must be positive, got {area}"));
    }
    if cusps == 0 {
        return domain("at least one cusp is required");
    }
    let m = f64::from(cusps);
    let root = (4.0 * PI).sqrt();
    Ok(ExpansionCoeffs {
        a0: area / (4.0 * PI),
        a10: EULER_GAMMA * m / (2.0 * root),
        a11: m / (2.0 * root),
        a2: euler_char as f64 / 6.0 + m / 4.0,
    })
}

/// `a0/t + (a10 + a11 log t)/√t + a2`. The kernel offset is not subtracted.
pub fn eval_expansion(coeffs: &ExpansionCoeffs, t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return domain(format!("time must be finite and positive, got {t}"));
    }
    Ok(expansion_unchecked(coeffs, t))
}

#[inline]
pub(crate) fn expansion_unchecked(c: &ExpansionCoeffs, t: f64) -> f64 {
    c.a0 / t + (c.a10 + c.a11 * t.ln()) / t.sqrt() + c.a2
}

type TraceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A relative heat trace `t ↦ R(t)` together with its small-t coefficients,
/// kernel offset `h` (the large-t limit) and exponential approach rate.
///
/// The evaluation closure must be safe to call concurrently.
#[derive(Clone)]
pub struct RelativeTrace {
    eval: TraceFn,
    pub coeffs: ExpansionCoeffs,
    pub kernel_offset: i64,
    pub decay_rate: f64,
}

impl std::fmt::Debug for RelativeTrace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RelativeTrace")
            .field("coeffs", &self.coeffs)
            .field("kernel_offset", &self.kernel_offset)
            .field("decay_rate", &self.decay_rate)
            .finish_non_exhaustive()
    }
}

impl RelativeTrace {
    pub fn new<F>(eval: F, coeffs: ExpansionCoeffs, kernel_offset: i64, decay_rate: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { eval: Arc::new(eval), coeffs, kernel_offset, decay_rate }
    }

    /// `R ≡ h`.
    pub fn constant(h: i64) -> Self {
        let value = h as f64;
        Self::new(move |_| value, ExpansionCoeffs { a2: value, ..ExpansionCoeffs::zero() }, h, 1.0)
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    /// `ϑ(t) = R(t) − h − a0/t − (a10 + a11 log t)/√t − (a2 − h)`; `O(√t)` for
    /// a consistent model.
    pub fn remainder(&self, t: f64) -> f64 {
        self.value(t) - expansion_unchecked(&self.coeffs, t)
    }

    /// Build a trace from sampled values.
    ///
    /// Between samples the remainder quotient `ϑ(t)/√t` is interpolated
    /// linearly in `log t`; below the first sample it is held constant. Past the
    /// last sample the trace relaxes to `h` at `decay_rate`, which is fitted from
    /// samples with `t ≥ 1` when not supplied.
    pub fn from_samples(
        samples: &[(f64, f64)],
        coeffs: ExpansionCoeffs,
        kernel_offset: i64,
        decay_rate: Option<f64>,
    ) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = samples.to_vec();
        if pts.len() < 2 {
            return domain("at least two samples are required");
        }
        if pts.iter().any(|&(t, v)| !(t.is_finite() && t > 0.0 && v.is_finite())) {
            return domain("samples must have finite values at positive times");
        }
        pts.sort_by(|x, y| x.0.total_cmp(&y.0));
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return domain("duplicate sample times");
        }
        let h = kernel_offset as f64;
        let rate = match decay_rate {
            Some(c) => c,
            None => {
                let tail: Vec<(f64, f64)> = pts.iter().copied().filter(|&(t, _)| t >= 1.0).collect();
                match fit_decay(&tail, h) {
                    Some((c, _)) if c > 0.0 => c,
                    _ => {
                        return Err(Error::Model(
                            "cannot infer a large-t decay rate from the samples; supply one".into(),
                        ))
                    }
                }
            }
        };
        let nodes: Vec<(f64, f64)> =
            pts.iter().map(|&(t, v)| (t.ln(), (v - expansion_unchecked(&coeffs, t)) / t.sqrt())).collect();
        let (t_last, v_last) = *pts.last().expect("non-empty");
        let eval = move |t: f64| -> f64 {
            if t > t_last {
                return h + (v_last - h) * (-rate * (t - t_last)).exp();
            }
            let x = t.ln();
            let q = if x <= nodes[0].0 {
                nodes[0].1
            } else {
                let k = nodes.partition_point(|n| n.0 < x).min(nodes.len() - 1);
                let (x0, q0) = nodes[k - 1];
                let (x1, q1) = nodes[k];
                q0 + (q1 - q0) * (x - x0) / (x1 - x0)
            };
            expansion_unchecked(&coeffs, t) + q * t.sqrt()
        };
        Ok(Self::new(eval, coeffs, kernel_offset, rate))
    }
}

impl std::ops::Add for RelativeTrace {
    type Output = RelativeTrace;
    fn add(self, other: RelativeTrace) -> RelativeTrace {
        let (f, g) = (self.eval, other.eval);
        RelativeTrace {
            eval: Arc::new(move |t| f(t) + g(t)),
            coeffs: self.coeffs + other.coeffs,
            kernel_offset: self.kernel_offset + other.kernel_offset,
            decay_rate: self.decay_rate.min(other.decay_rate),
        }
    }
}

/// Options for [`fit_expansion`].
#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    /// Number of remainder terms `√t, t, t^{3/2}` fitted alongside the four
    /// expansion coefficients (0 to 3).
    pub remainder_terms: usize,
    /// Largest acceptable condition number of the column-scaled design.
    pub max_condition: f64,
    /// Largest acceptable ratio of the widest to the median gap in `log t`.
    pub max_gap_ratio: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { remainder_terms: 3, max_condition: 1e10, max_gap_ratio: 4.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub coeffs: ExpansionCoeffs,
    /// Coefficients of the fitted `√t, t, t^{3/2}` remainder terms.
    pub remainder_coeffs: Vec<f64>,
    /// `max |R(t) − expansion(t)| / √t` over the samples.
    pub max_remainder_ratio: f64,
    /// Largest absolute residual of the full weighted fit.
    pub max_residual: f64,
    pub condition: f64,
    pub samples: usize,
}

/// Weighted least-squares fit of the expansion coefficients to `(t, R(t))`
/// samples.
///
/// Rows are weighted by `√t`. Samples must lie on a (near) geometric grid
/// covering at least two decades below `t = 0.1`.
pub fn fit_expansion(samples: &[(f64, f64)], opts: FitOptions) -> Result<FitReport> {
    if opts.remainder_terms > 3 {
        return domain("at most three remainder terms are supported");
    }
    let n_basis = 4 + opts.remainder_terms;
    if samples.len() < 8.max(n_basis + 1) {
        return domain(format!("need at least {} samples, got {}", 8.max(n_basis + 1), samples.len()));
    }
    if samples.iter().any(|&(t, v)| !(t.is_finite() && t > 0.0 && v.is_finite())) {
        return domain("samples must have finite values at positive times");
    }
    let mut pts = samples.to_vec();
    pts.sort_by(|x, y| x.0.total_cmp(&y.0));
    let small: Vec<f64> = pts.iter().map(|p| p.0).filter(|&t| t < 0.1).collect();
    if small.len() < 2 || small[small.len() - 1] / small[0] < 100.0 * (1.0 - 1e-12) {
        return domain("samples must span at least two decades of t below 0.1");
    }

    let basis = |t: f64| -> [f64; 7] {
        let r = t.sqrt();
        [1.0 / t, 1.0 / r, t.ln() / r, 1.0, r, t, t * r]
    };
    let rows = pts.len();
    let mut design = DMatrix::<f64>::zeros(rows, n_basis);
    let mut rhs = DVector::<f64>::zeros(rows);
    for (i, &(t, v)) in pts.iter().enumerate() {
        let w = t.sqrt();
        let b = basis(t);
        for j in 0..n_basis {
            design[(i, j)] = w * b[j];
        }
        rhs[i] = w * v;
    }
    let scales: Vec<f64> = (0..n_basis).map(|j| design.column(j).norm()).collect();
    for (j, s) in scales.iter().enumerate() {
        if *s == 0.0 {
            return Err(Error::Conditioning { condition: f64::INFINITY, reason: format!("basis column {j} vanishes") });
        }
        design.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    let gaps: Vec<f64> = pts.windows(2).map(|w| (w[1].0 / w[0].0).ln()).collect();
    if gaps.iter().any(|&g| g <= 0.0) {
        return Err(Error::Conditioning { condition, reason: "duplicate sample times".into() });
    }
    let mut sorted = gaps.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let widest = sorted[sorted.len() - 1];
    if widest > opts.max_gap_ratio * median {
        return Err(Error::Conditioning {
            condition,
            reason: format!("sample spacing is not geometric: widest log-gap {widest:.3e} vs median {median:.3e}"),
        });
    }
    if condition > opts.max_condition {
        return Err(Error::Conditioning { condition, reason: "basis is numerically collinear".into() });
    }

    let scaled = svd.solve(&rhs, 0.0).map_err(|e| Error::Conditioning { condition, reason: e.to_string() })?;
    let x: Vec<f64> = (0..n_basis).map(|j| scaled[j] / scales[j]).collect();
    let coeffs = ExpansionCoeffs { a0: x[0], a10: x[1], a11: x[2], a2: x[3] };

    let mut max_ratio = 0.0f64;
    let mut max_residual = 0.0f64;
    for &(t, v) in &pts {
        let b = basis(t);
        let full: f64 = (0..n_basis).map(|j| x[j] * b[j]).sum();
        max_residual = max_residual.max((v - full).abs());
        max_ratio = max_ratio.max((v - expansion_unchecked(&coeffs, t)).abs() / t.sqrt());
    }
    Ok(FitReport {
        coeffs,
        remainder_coeffs: x[4..].to_vec(),
        max_remainder_ratio: max_ratio,
        max_residual,
        condition,
        samples: rows,
    })
}

/// Outcome of a large-t decay fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayReport {
    /// `R(t) = h` at every grid point.
    ExactPlateau,
    /// `log|R(t) − h| ≈ intercept − rate · t`.
    Exponential {
        rate: f64,
        intercept: f64,
        /// `|R − h|` is non-increasing along the grid.
        monotone: bool,
        points: usize,
    },
}

/// Least-squares slope of `log|R − h|` against `t`.
fn fit_decay(points: &[(f64, f64)], h: f64) -> Option<(f64, f64)> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|&(t, v)| {
            let d = (v - h).abs();
            (d > 0.0 && d.is_finite()).then(|| (t, d.ln()))
        })
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mt = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((-slope, ml - slope * mt))
}

/// Fit the exponential approach of `R(t)` to its kernel offset on `t_grid`.
pub fn check_large_t(trace: &RelativeTrace, t_grid: &[f64]) -> Result<DecayReport> {
    if t_grid.len() < 2 {
        return domain("decay grid needs at least two points");
    }
    if t_grid[0] < 1.0 || t_grid.windows(2).any(|w| !(w[1] > w[0])) || !t_grid.iter().all(|t| t.is_finite()) {
        return domain("decay grid must be increasing and start at t >= 1");
    }
    let h = trace.kernel_offset as f64;
    let points: Vec<(f64, f64)> = t_grid.iter().map(|&t| (t, trace.value(t))).collect();
    if points.iter().all(|&(_, v)| v == h) {
        return Ok(DecayReport::ExactPlateau);
    }
    let usable = points.iter().filter(|p| (p.1 - h).abs() > 0.0).count();
    let (rate, intercept) = fit_decay(&points, h)
        .ok_or_else(|| Error::Model("fewer than two grid points differ from the kernel offset".into()))?;
    let monotone = points.windows(2).all(|w| (w[1].1 - h).abs() <= (w[0].1 - h).abs());
    Ok(DecayReport::Exponential { rate, intercept, monotone, points: usable })
}

/// Read `(t, value)` samples: two numeric columns, optional header line,
/// `#` comments.
pub fn read_samples_csv<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("CSV record {}: {e}", i + 1)))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse(format!("CSV record {}: expected 2 columns, found {}", i + 1, record.len())));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(t), Ok(v)) => out.push((t, v)),
            _ if i == 0 && out.is_empty() => continue, // header
            _ => return Err(Error::Parse(format!("CSV record {}: non-numeric field in {:?}", i + 1, record))),
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("no numeric samples found".into()));
    }
    Ok(out)
}

pub fn read_samples_file(path: &Path) -> Result<Vec<(f64, f64)>> {
    let file = std::fs::File::open(path)?;
    read_samples_csv(file)
}

/// Geometric grid of `count` points from `start` to `stop` inclusive.
pub fn geometric_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let ratio = (stop / start).ln() / (count - 1) as f64;
    (0..count).map(|i| if i + 1 == count { stop } else { start * (ratio * i as f64).exp() }).collect()
}

impl FitReport {
    /// Largest absolute coefficient difference against `other`.
    pub fn max_coeff_error(&self, other: &ExpansionCoeffs) -> f64 {
        self.coeffs.as_array().iter().zip(other.as_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}
