//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Panels are refined worst-first; the final sum is taken in left-to-right
//! panel order with Neumaier compensation, so results are bit-reproducible.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

/// Values that can be integrated: reals and complex numbers.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: QuadValue> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }
}

impl CompensatedSum<f64> {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl CompensatedSum<Complex64> {
    pub fn add(&mut self, x: Complex64) {
        let mut re = CompensatedSum { sum: self.sum.re, comp: self.comp.re };
        let mut im = CompensatedSum { sum: self.sum.im, comp: self.comp.im };
        re.add(x.re);
        im.add(x.im);
        self.sum = Complex64::new(re.sum, im.sum);
        self.comp = Complex64::new(re.comp, im.comp);
    }
    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

/// Sum a slice of reals with Neumaier compensation.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::<f64>::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-12, max_panels: 4000 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
    pub evaluations: usize,
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Clone, Copy, Debug)]
struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

/// One G7/K15 rule application with the QUADPACK error heuristic.
fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> Panel<T> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = fc.magnitude() * WGK[7];
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k = res_k + (f1 + f2) * WGK[j];
        res_abs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            res_g = res_g + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).magnitude();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).magnitude();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * res_abs;
    if roundoff > f64::MIN_POSITIVE {
        error = error.max(roundoff);
    }
    Panel { a, b, value, error }
}

struct ByError<T>(usize, Panel<T>);

impl<T> PartialEq for ByError<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T> Eq for ByError<T> {}
impl<T> PartialOrd for ByError<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for ByError<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.1.error.total_cmp(&other.1.error).then_with(|| other.0.cmp(&self.0))
    }
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
    CompensatedSum<T>: Summable<T>,
{
    integrate_with_breaks(f, &[a, b], opts)
}

/// Integrate `f` over `[points[0], points[last]]`, starting from one panel per
/// consecutive pair of break points (use them at kinks or known peaks).
pub fn integrate_with_breaks<T, F>(f: F, points: &[f64], opts: QuadOptions) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
    CompensatedSum<T>: Summable<T>,
{
    if points.len() < 2 || points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Domain("integration limits must be finite".into()));
    }
    if points.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("break points must be non-decreasing".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut evaluations = 0usize;
    for w in points.windows(2) {
        if w[1] > w[0] {
            heap.push(ByError(seq, gk15(&f, w[0], w[1])));
            seq += 1;
            evaluations += 15;
        }
    }
    loop {
        let rough = heap.iter().fold(T::zero(), |acc, p| acc + p.1.value);
        let err: f64 = heap.iter().map(|p| p.1.error).sum();
        let target = opts.abs_tol.max(opts.rel_tol * rough.magnitude());
        if err <= target || heap.is_empty() {
            let value = sum_panels(heap.iter().map(|p| &p.1));
            return Ok(Estimate { value, error: err, panels: heap.len(), evaluations });
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::Convergence { estimate: err, target, panels: heap.len() });
        }
        let ByError(_, worst) = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further in floating point
            return Err(Error::Convergence { estimate: err, target, panels: heap.len() + 1 });
        }
        heap.push(ByError(seq, gk15(&f, worst.a, mid)));
        heap.push(ByError(seq + 1, gk15(&f, mid, worst.b)));
        seq += 2;
        evaluations += 30;
    }
}

/// Panel summation in increasing left-endpoint order.
fn sum_panels<'a, T: QuadValue + 'a>(panels: impl Iterator<Item = &'a Panel<T>>) -> T
where
    CompensatedSum<T>: Summable<T>,
{
    let mut ps: Vec<&Panel<T>> = panels.collect();
    ps.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut acc = CompensatedSum::<T>::default();
    for p in ps {
        acc.push(p.value);
    }
    acc.total()
}

/// Glue so the generic integrator can use the concrete compensated sums.
pub trait Summable<T> {
    fn push(&mut self, x: T);
    fn total(&self) -> T;
}

impl Summable<f64> for CompensatedSum<f64> {
    fn push(&mut self, x: f64) {
        self.add(x)
    }
    fn total(&self) -> f64 {
        self.value()
    }
}

impl Summable<Complex64> for CompensatedSum<Complex64> {
    fn push(&mut self, x: Complex64) {
        self.add(x)
    }
    fn total(&self) -> Complex64 {
        self.value()
    }
}
