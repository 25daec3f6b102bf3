//! One-dimensional quadrature rules: adaptive Gauss–Kronrod, composite
//! Gauss–Legendre, and the sinh substitution used for every unbounded axis.

use std::collections::{BinaryHeap, HashMap};
use std::ops::{Add, AddAssign, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values a quadrature rule can accumulate.
pub trait Scalar:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + AddAssign
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
    fn finite(self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Stopping rule: the error estimate must fall below `max(abs, rel·|I|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }

    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    /// Integral of `|f|`, the scale against which rounding error is judged.
    pub magnitude: f64,
    pub evals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy)]
struct Piece<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    magnitude: f64,
}

impl<T> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl<T> Eq for Piece<T> {}
impl<T> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk15<T: Scalar, F: FnMut(f64) -> Result<T>>(f: &mut F, a: f64, b: f64) -> Result<Piece<T>> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = fc.modulus() * WGK[7];
    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += (f1 + f2) * WGK[j];
        resabs += (f1.modulus() + f2.modulus()) * WGK[j];
        if j % 2 == 1 {
            resg += (f1 + f2) * WG[j / 2];
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = (fc - reskh).modulus() * WGK[7];
    for j in 0..7 {
        resasc += ((fv1[j] - reskh).modulus() + (fv2[j] - reskh).modulus()) * WGK[j];
    }
    let resasc = resasc * half.abs();
    let resabs = resabs * half.abs();
    let mut err = ((resk - resg) * half).modulus();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    let value = resk * half;
    if !value.finite() || !err.is_finite() {
        return Err(Error::NonConvergence {
            context: format!("non-finite integrand on [{a:.6e}, {b:.6e}]"),
            error: f64::INFINITY,
            target: 0.0,
        });
    }
    Ok(Piece {
        a,
        b,
        value,
        error: err,
        magnitude: resabs,
    })
}

/// Globally adaptive Gauss–Kronrod (7, 15) integration over `[breaks[0], breaks[last]]`.
///
/// The initial partition is the list of breakpoints; the piece with the largest error
/// estimate is bisected until the summed estimate meets `tol` or `max_pieces` is reached.
/// Rounding error is accounted for by also accepting `64 ε ∫|f|`.
pub fn adaptive<T, F>(
    mut f: F,
    breaks: &[f64],
    tol: Tolerance,
    max_pieces: usize,
) -> Result<Estimate<T>>
where
    T: Scalar,
    F: FnMut(f64) -> Result<T>,
{
    assert!(breaks.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&mut f, w[0], w[1])?);
            evals += 15;
        }
    }
    if heap.is_empty() {
        return Ok(Estimate {
            value: T::zero(),
            error: 0.0,
            magnitude: 0.0,
            evals,
        });
    }
    let (mut value, mut error, mut magnitude) = totals(heap.iter());
    loop {
        let target = tol
            .abs
            .max(tol.rel * value.modulus())
            .max(64.0 * f64::EPSILON * magnitude);
        if error <= target {
            let (value, error, magnitude) = totals(heap.iter());
            return Ok(Estimate {
                value,
                error,
                magnitude,
                evals,
            });
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if heap.len() + 2 > max_pieces || !(mid > worst.a && mid < worst.b) {
            return Err(Error::NonConvergence {
                context: format!(
                    "adaptive quadrature on [{:.4e}, {:.4e}]",
                    breaks[0],
                    breaks[breaks.len() - 1]
                ),
                error,
                target,
            });
        }
        let left = gk15(&mut f, worst.a, mid)?;
        let right = gk15(&mut f, mid, worst.b)?;
        evals += 30;
        value = value - worst.value + left.value + right.value;
        error = (error - worst.error + left.error + right.error).max(0.0);
        magnitude = magnitude - worst.magnitude + left.magnitude + right.magnitude;
        heap.push(left);
        heap.push(right);
    }
}

fn totals<'a, T: Scalar + 'a>(pieces: impl Iterator<Item = &'a Piece<T>>) -> (T, f64, f64) {
    let mut sorted: Vec<&Piece<T>> = pieces.collect();
    sorted.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut v = T::zero();
    let mut e = 0.0;
    let mut m = 0.0;
    for p in sorted {
        v += p.value;
        e += p.error;
        m += p.magnitude;
    }
    (v, e, m)
}

/// [`adaptive`] for an infallible real integrand.
pub fn adaptive_real<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    tol: Tolerance,
    max_pieces: usize,
) -> Result<Estimate<f64>> {
    adaptive(|x| Ok(f(x)), breaks, tol, max_pieces)
}

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, cached per order.
pub fn gauss_legendre(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("rule cache").get(&n) {
        return r.clone();
    }
    let rule = Arc::new(legendre_rule(n));
    cache.lock().expect("rule cache").insert(n, rule.clone());
    rule
}

fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    // (P_n(z), P_n'(z)) by the three-term recurrence
    let eval = |z: f64| {
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
    };
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = eval(z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = eval(z);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Composite Gauss–Legendre rule: `panels` equal panels between consecutive breakpoints,
/// `nodes` points per panel.
pub fn composite<T, F>(mut f: F, breaks: &[f64], panels_per_unit: f64, nodes: usize) -> Result<T>
where
    T: Scalar,
    F: FnMut(f64) -> Result<T>,
{
    let rule = gauss_legendre(nodes);
    let mut total = T::zero();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let panels = ((b - a) * panels_per_unit).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for k in 0..panels {
            let lo = a + k as f64 * h;
            let mut acc = T::zero();
            for (xi, wi) in rule.0.iter().zip(&rule.1) {
                acc += f(lo + 0.5 * h * (xi + 1.0))? * *wi;
            }
            total += acc * (0.5 * h);
        }
    }
    Ok(total)
}

/// Composite rule repeated with doubled node counts until two successive values agree.
///
/// The error estimate is `|Q(N) - Q(2N)|`; after `doublings` refinements without meeting
/// `tol` the result is a nonconvergence error.
pub fn composite_refined<T, F>(
    mut f: F,
    breaks: &[f64],
    panels_per_unit: f64,
    nodes: usize,
    tol: Tolerance,
    doublings: usize,
) -> Result<Estimate<T>>
where
    T: Scalar,
    F: FnMut(f64) -> Result<T>,
{
    let mut n = nodes;
    let mut prev = composite(&mut f, breaks, panels_per_unit, n)?;
    let mut evals = 0;
    let mut err = f64::INFINITY;
    for _ in 0..doublings {
        n *= 2;
        let next = composite(&mut f, breaks, panels_per_unit, n)?;
        evals += n;
        err = (next - prev).modulus();
        prev = next;
        let target = tol.abs.max(tol.rel * prev.modulus());
        if err <= target {
            return Ok(Estimate {
                value: prev,
                error: err,
                magnitude: prev.modulus(),
                evals,
            });
        }
    }
    Err(Error::NonConvergence {
        context: "composite Gauss-Legendre refinement".into(),
        error: err,
        target: tol.abs.max(tol.rel * prev.modulus()),
    })
}

/// The substitution `m = center + scale · sinh(u)` mapping `ℝ` onto `ℝ`.
///
/// Algebraic tails of `m` become exponential tails in `u`, so a finite `u`-interval
/// captures the whole line to double precision.
#[derive(Debug, Clone, Copy)]
pub struct SinhAxis {
    pub center: f64,
    pub scale: f64,
}

impl SinhAxis {
    pub fn new(center: f64, scale: f64) -> Self {
        debug_assert!(scale > 0.0);
        Self { center, scale }
    }

    /// Point and Jacobian `dm/du`.
    #[inline]
    pub fn map(&self, u: f64) -> (f64, f64) {
        (self.center + self.scale * u.sinh(), self.scale * u.cosh())
    }

    pub fn inverse(&self, m: f64) -> f64 {
        ((m - self.center) / self.scale).asinh()
    }

    /// `u`-breakpoints covering `[lo, hi]` in `m`, with unit-spaced interior breaks near the
    /// center and at the given special points.
    pub fn breaks(&self, lo: f64, hi: f64, special: &[f64]) -> Vec<f64> {
        let ulo = self.inverse(lo);
        let uhi = self.inverse(hi);
        let mut b = vec![ulo, uhi];
        for &s in special {
            let u = self.inverse(s);
            if u > ulo && u < uhi {
                b.push(u);
            }
        }
        let mut u = ulo.ceil();
        while u < uhi {
            b.push(u);
            u += 4.0;
        }
        b.push(0.0f64.clamp(ulo, uhi));
        b.sort_by(f64::total_cmp);
        b.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
        b
    }
}

/// Samples at `x_i = i·step`, `i = 0, 1, …`, read back by six-point Lagrange interpolation.
#[derive(Debug, Clone)]
pub struct UniformTable<T> {
    step: f64,
    values: Vec<T>,
}

impl<T: Scalar> UniformTable<T> {
    pub fn new(step: f64, values: Vec<T>) -> Result<Self> {
        if !(step > 0.0) || values.len() < 6 {
            return Err(Error::InvalidArgument(
                "interpolation table needs a positive step and six nodes".into(),
            ));
        }
        Ok(Self { step, values })
    }

    /// Tabulates `f` on `[0, x_max]` with two spare nodes beyond.
    pub fn build<F>(step: f64, x_max: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<T> + Sync,
    {
        let n = ((x_max / step).ceil() as usize + 3).max(6);
        let nodes: Vec<usize> = (0..n).collect();
        Self::new(
            step,
            crate::exec::try_par_map(&nodes, |&i| f(i as f64 * step))?,
        )
    }

    /// Largest abscissa served without extrapolation.
    pub fn x_max(&self) -> f64 {
        (self.values.len() - 3) as f64 * self.step
    }

    /// First node and weights of the six-point stencil at `x`; shared by tables on the same grid.
    pub fn stencil(&self, x: f64) -> Result<(usize, [f64; 6])> {
        if !(0.0..=self.x_max()).contains(&x) {
            return Err(Error::Domain(format!(
                "{x} outside the table range [0, {}]",
                self.x_max()
            )));
        }
        let u = x / self.step;
        let i0 = (u.floor() as usize)
            .saturating_sub(2)
            .min(self.values.len() - 6);
        let mut w = [1.0; 6];
        for (j, wj) in w.iter_mut().enumerate() {
            for l in 0..6 {
                if l != j {
                    *wj *= (u - (i0 + l) as f64) / (j as f64 - l as f64);
                }
            }
        }
        Ok((i0, w))
    }

    pub fn eval_stencil(&self, (i0, w): (usize, [f64; 6])) -> T {
        let mut acc = T::zero();
        for (j, wj) in w.iter().enumerate() {
            acc += self.values[i0 + j] * *wj;
        }
        acc
    }

    pub fn eval(&self, x: f64) -> Result<T> {
        Ok(self.eval_stencil(self.stencil(x)?))
    }
}
