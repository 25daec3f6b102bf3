//! Poisson transform, spherical functions, Helgason Fourier transform, radial
//! convolution and the Laplace–Beltrami residual.
//!
//! The Poisson transform has two implementations that share no kernel code:
//! [`poisson_psi`] integrates the explicit kernel
//! `[e^{-4t} + 2c e^{-2t}|V|² + |m̄|⁴]^{-(iλ+ρ)/2}` against the `N̄`-representation `ψ`,
//! while [`poisson_direct`] integrates `e^{(iλ+ρ)A(x,b)} F(b)` with `A` assembled from
//! Iwasawa projections.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::exec::try_par_map;
use crate::measure::{self, Focus, QuadratureSpec, Space, XRegion};
use crate::model::{gamma_half, Coords, NbarPoint, SpectralParam, XPointNA};
use crate::quad::{self, Tolerance, UniformTable};

pub type ChartFn = Arc<dyn Fn(&NbarPoint) -> Result<Complex64> + Send + Sync>;
pub type XFn = Arc<dyn Fn(&XPointNA) -> Complex64 + Send + Sync>;
pub type ProfileFn = Arc<dyn Fn(f64) -> Result<Complex64> + Send + Sync>;

const MAX_PIECES: usize = 4000;

pub(crate) fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// A boundary datum `F` on `K/M`, carried through its `N̄`-representation
/// `ψ(m̄) = F(k(m̄)M) e^{(iλ-ρ)H(m̄)}`.
#[derive(Clone)]
pub struct BoundaryFunction {
    pub lambda_tag: SpectralParam,
    psi: ChartFn,
    chart: Option<ChartFn>,
    /// Centre and `V` scale of the features of `ψ`, when known.
    pub focus: Option<(Coords, f64)>,
}

impl fmt::Debug for BoundaryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryFunction")
            .field("lambda_tag", &self.lambda_tag)
            .field("has_chart", &self.chart.is_some())
            .field("focus", &self.focus)
            .finish()
    }
}

impl BoundaryFunction {
    /// From the chart `F ∘ k`.
    pub fn from_chart(space: &Space, lambda: SpectralParam, chart: ChartFn) -> Self {
        let p = space.params;
        let exponent = Complex64::new(0.0, 1.0) * lambda.as_complex() - p.rho;
        let c2 = chart.clone();
        let psi: ChartFn =
            Arc::new(move |n: &NbarPoint| Ok(c2(n)? * (exponent * p.iwasawa_h(n)).exp()));
        Self {
            lambda_tag: lambda,
            psi,
            chart: Some(chart),
            focus: None,
        }
    }

    /// From `ψ` alone; the direct Poisson path is unavailable for such data.
    pub fn from_psi(lambda: SpectralParam, psi: ChartFn) -> Self {
        Self {
            lambda_tag: lambda,
            psi,
            chart: None,
            focus: None,
        }
    }

    /// The constant function `1`.
    pub fn one(space: &Space, lambda: SpectralParam) -> Self {
        Self::from_chart(space, lambda, Arc::new(|_| Ok(cx(1.0))))
    }

    pub fn with_focus(mut self, center: &[f64], scale: f64) -> Self {
        self.focus = Some((SmallVec::from_slice(center), scale));
        self
    }

    pub fn psi(&self, n: &NbarPoint) -> Result<Complex64> {
        (self.psi)(n)
    }

    pub fn chart(&self, n: &NbarPoint) -> Result<Option<Complex64>> {
        self.chart.as_ref().map(|c| c(n)).transpose()
    }

    pub fn has_chart(&self) -> bool {
        self.chart.is_some()
    }

    /// `k · F`.
    pub fn scaled(&self, k: Complex64) -> Self {
        let psi = self.psi.clone();
        let chart = self.chart.clone();
        Self {
            lambda_tag: self.lambda_tag,
            psi: Arc::new(move |n| Ok(psi(n)? * k)),
            chart: chart.map(|c| -> ChartFn { Arc::new(move |n| Ok(c(n)? * k)) }),
            focus: self.focus.clone(),
        }
    }

    fn nbar_focus(&self, space: &Space) -> Focus {
        match &self.focus {
            Some((c, s)) => Focus::at(c, *s).with_point(c),
            None => Focus::origin(space),
        }
    }

    /// `‖F‖_{L²(K/M)}`.
    pub fn l2_boundary(&self, space: &Space, q: &QuadratureSpec) -> Result<f64> {
        let chart = self
            .chart
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("boundary norm needs the chart of F".into()))?;
        let p = space.params;
        let r = measure::integrate_nbar_focused(
            space,
            |n| Ok(cx(chart(n)?.norm_sqr() * p.boundary_weight(n))),
            q,
            &self.nbar_focus(space),
            0.0,
        )?;
        Ok(r.value.re.sqrt())
    }

    /// `‖ψ‖_{L²(N̄)}`.
    pub fn l2_psi(&self, space: &Space, q: &QuadratureSpec) -> Result<f64> {
        let r = measure::integrate_nbar_focused(
            space,
            |n| Ok(cx(self.psi(n)?.norm_sqr())),
            q,
            &self.nbar_focus(space),
            0.0,
        )?;
        Ok(r.value.re.sqrt())
    }
}

fn check_tag(b: &BoundaryFunction, lambda: SpectralParam) -> Result<()> {
    if b.lambda_tag != lambda {
        return Err(Error::InvalidArgument(format!(
            "boundary function was built for λ = {:?}, evaluated at {:?}",
            b.lambda_tag, lambda
        )));
    }
    Ok(())
}

fn poisson_exponent(space: &Space, lambda: SpectralParam) -> Complex64 {
    Complex64::new(0.0, 1.0) * lambda.as_complex() + space.params.rho
}

/// Scale of the Poisson kernel around its peak at height `t`.
fn kernel_scale(space: &Space, t: f64) -> f64 {
    (-t).exp().min(1.0) * space.unit_scale()
}

/// `P_λF(x)` from the explicit kernel against `ψ(n̄ m̄)`.
pub fn poisson_psi(
    space: &Space,
    b: &BoundaryFunction,
    lambda: SpectralParam,
    x: &XPointNA,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    check_tag(b, lambda)?;
    let p = space.params;
    let at_identity = x.nbar.is_identity();
    if !at_identity {
        p.require_abelian("the Poisson transform away from the identity")?;
    }
    let s = poisson_exponent(space, lambda);
    let t = x.t;
    let e2 = (-2.0 * t).exp();
    let e4 = e2 * e2;
    let kernel = |m: &NbarPoint| {
        let nm = p.homog_norm(m);
        let base = e4 + 2.0 * p.c * e2 * m.v_norm_sq() + nm * nm * nm * nm;
        (-s * (t + 0.5 * base.ln())).exp()
    };
    let dim = space.dim();
    let mut focus = Focus::at(&vec![0.0; dim], kernel_scale(space, t));
    let shift: Vec<f64> = x.nbar.v.iter().chain(x.nbar.z.iter()).map(|v| -v).collect();
    focus = focus.with_point(&shift);
    if let Some((c, _)) = &b.focus {
        let feature: Vec<f64> = c.iter().zip(&shift).map(|(a, s)| a + s).collect();
        focus = focus.with_point(&feature);
    }
    let r = measure::integrate_nbar_focused(
        space,
        |m| {
            let nm = if at_identity {
                m.clone()
            } else {
                p.nbar_mul(&x.nbar, m)?
            };
            Ok(kernel(m) * b.psi(&nm)?)
        },
        q,
        &focus,
        lambda.re,
    )?;
    Ok(r.value)
}

/// `P_λF(x) = ∫ e^{(iλ+ρ)A(x,b)} F(b) db` through the boundary chart.
pub fn poisson_direct(
    space: &Space,
    b: &BoundaryFunction,
    lambda: SpectralParam,
    x: &XPointNA,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    check_tag(b, lambda)?;
    let chart = b.chart.as_ref().ok_or_else(|| {
        Error::InvalidArgument("the direct Poisson path needs the chart of F".into())
    })?;
    let p = space.params;
    p.require_abelian("the direct Poisson path")?;
    let s = poisson_exponent(space, lambda);
    let center: Vec<f64> = x.nbar.v.to_vec();
    let mut focus =
        Focus::at(&center, kernel_scale(space, x.t)).with_point(&vec![0.0; space.dim()]);
    if let Some((c, _)) = &b.focus {
        focus = focus.with_point(c);
    }
    let r = measure::integrate_nbar_focused(
        space,
        |m| {
            let a = p.boundary_a(x, m)?;
            Ok((s * a).exp() * chart(m)? * p.boundary_weight(m))
        },
        q,
        &focus,
        lambda.re,
    )?;
    Ok(r.value)
}

/// `∫_{S^{m1}} w(θ) dω` normalisation for functions of the colatitude.
fn colatitude_mass(m1: usize) -> f64 {
    PI.sqrt() * gamma_half(m1) / gamma_half(m1 + 1)
}

/// Breakpoints in the colatitude resolving a peak of width `w` at `θ = 0`.
fn peak_breaks(w: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = w;
    while x < 0.5 * PI {
        b.push(x);
        x *= 4.0;
    }
    b.extend([0.5 * PI, PI]);
    b
}

fn phi_tolerance(q: &QuadratureSpec) -> Tolerance {
    Tolerance::new(0.0, q.tail_tolerance.min(1e-12))
}

/// Spherical function `φ_λ(a_t) = P_λ1(a_t)`, even in `t`.
pub fn spherical_phi(
    space: &Space,
    lambda: SpectralParam,
    t: f64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    if space.params.m2 == 0 {
        spherical_phi_k(space, lambda, t, q)
    } else {
        let one = BoundaryFunction::one(space, lambda);
        poisson_psi(
            space,
            &one,
            lambda,
            &XPointNA::new(NbarPoint::identity(&space.params), t.abs()),
            q,
        )
    }
}

/// `φ_λ(a_t) = ∫_K (cosh t - sinh t cos θ)^{-(iλ+ρ)} dk` (`m2 = 0`).
pub fn spherical_phi_k(
    space: &Space,
    lambda: SpectralParam,
    t: f64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    let p = space.params;
    p.require_abelian("the K-integral for φ_λ")?;
    let t = t.abs();
    if t == 0.0 {
        return Ok(cx(1.0));
    }
    let s = poisson_exponent(space, lambda);
    let e = (-2.0 * t).exp();
    let m1 = p.m1 as i32;
    // cosh t - sinh t cos θ = e^t (e^{-2t} + (1 - e^{-2t}) sin²(θ/2))
    let est = quad::adaptive(
        |th: f64| {
            let h = (0.5 * th).sin();
            let log_base = t + (e + (1.0 - e) * h * h).ln();
            Ok((-s * log_base).exp() * th.sin().powi(m1 - 1))
        },
        &peak_breaks(2.0 * (-t).exp()),
        phi_tolerance(q),
        MAX_PIECES,
    )?;
    Ok(est.value / colatitude_mass(p.m1))
}

/// A radial function `g(r) = e^{-decay·r} · scaled(r)`, optionally supported in `[0, support]`.
#[derive(Clone)]
pub struct RadialFunction {
    scaled: ProfileFn,
    pub decay: f64,
    pub support: Option<f64>,
}

impl fmt::Debug for RadialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialFunction")
            .field("decay", &self.decay)
            .field("support", &self.support)
            .finish()
    }
}

impl RadialFunction {
    pub fn new(decay: f64, scaled: ProfileFn) -> Self {
        Self {
            scaled,
            decay,
            support: None,
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Self::new(0.0, Arc::new(move |r| Ok(cx(f(r)))))
    }

    pub fn with_support(mut self, r: f64) -> Self {
        self.support = Some(r);
        self
    }

    pub fn eval(&self, r: f64) -> Result<Complex64> {
        if self.support.is_some_and(|s| r > s) {
            return Ok(cx(0.0));
        }
        Ok((self.scaled)(r)? * (-self.decay * r).exp())
    }

    /// `e^{decay·r} g(r)`.
    pub fn eval_scaled(&self, r: f64) -> Result<Complex64> {
        if self.support.is_some_and(|s| r > s) {
            return Ok(cx(0.0));
        }
        (self.scaled)(r)
    }

    /// The spherical function as a radial function.
    pub fn spherical(space: &Space, lambda: SpectralParam, q: &QuadratureSpec) -> Self {
        let space = space.clone();
        let q = *q;
        let rho = space.params.rho;
        Self::new(
            rho,
            Arc::new(move |r| Ok(spherical_phi(&space, lambda, r, &q)? * (rho * r).exp())),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialKernel {
    /// `κ_p(r) = e^{-2ρr/p'}` for `1 ≤ p ≤ 2`.
    Kappa(f64),
    /// `e^{-ρr} (1 + r)^{-3/2}`.
    Counterexample,
    /// `(1 + r) e^{-ρr}`.
    Phi0Comparator,
}

pub fn radial_kernels(space: &Space, which: RadialKernel) -> Result<RadialFunction> {
    let rho = space.params.rho;
    Ok(match which {
        RadialKernel::Kappa(pval) => {
            if !(1.0..=2.0).contains(&pval) {
                return Err(Error::InvalidArgument(format!(
                    "κ_p needs 1 ≤ p ≤ 2, got {pval}"
                )));
            }
            // 1/p' = 1 - 1/p
            RadialFunction::new(2.0 * rho * (1.0 - 1.0 / pval), Arc::new(|_| Ok(cx(1.0))))
        }
        RadialKernel::Counterexample => {
            RadialFunction::new(rho, Arc::new(|r| Ok(cx((1.0 + r).powf(-1.5)))))
        }
        RadialKernel::Phi0Comparator => RadialFunction::new(rho, Arc::new(|r| Ok(cx(1.0 + r)))),
    })
}

/// `ln sinh x` for `x ≥ 0`, finite for large `x`.
fn ln_sinh(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x < 20.0 {
        x.sinh().ln()
    } else {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `r(a_{-t} k_θ a_s · o)` from `sinh²(r/2) = sinh²((t-s)/2) + sinh t sinh s sin²(θ/2)`.
pub fn composed_distance(t: f64, s: f64, theta: f64) -> f64 {
    let h = (0.5 * theta).sin();
    let d = (t - s).abs();
    if t + s < 600.0 {
        let a = (0.5 * d).sinh().powi(2) + t.sinh() * s.sinh() * h * h;
        return 2.0 * a.sqrt().asinh();
    }
    let l = log_add_exp(
        2.0 * ln_sinh(0.5 * d),
        ln_sinh(t) + ln_sinh(s) + 2.0 * h.abs().ln(),
    );
    if l > 60.0 {
        l + 4f64.ln()
    } else {
        2.0 * (0.5 * l).exp().asinh()
    }
}

/// `e^{decay·t} ∫_K g(r(a_{-t} k a_s)) dk` for `m2 = 0`.
fn k_average_scaled(
    space: &Space,
    g: &RadialFunction,
    t: f64,
    s: f64,
    tol: Tolerance,
) -> Result<Complex64> {
    let p = space.params;
    p.require_abelian("the K-average")?;
    let m1 = p.m1 as i32;
    let width = 2.0 * (-t.min(s)).exp();
    // r - t carries an absolute rounding error of order ε·max(t, s)
    let tol = Tolerance::new(
        tol.abs,
        tol.rel.max(100.0 * f64::EPSILON * t.max(s).max(1.0)),
    );
    let est = quad::adaptive(
        |th: f64| {
            let r = composed_distance(t, s, th);
            Ok(g.eval_scaled(r)? * (-g.decay * (r - t)).exp() * th.sin().powi(m1 - 1))
        },
        &peak_breaks(width),
        tol,
        MAX_PIECES,
    )?;
    Ok(est.value / colatitude_mass(p.m1))
}

/// `∫_K g(a_{-t} k a_s) dk`.
pub fn k_average(
    space: &Space,
    g: &RadialFunction,
    t: f64,
    s: f64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    Ok(k_average_scaled(space, g, t, s, phi_tolerance(q))? * (-g.decay * t).exp())
}

/// `f ∗ g(a_s) = ∫_X f(y) g(y⁻¹ a_s) dy` for radial `f`, `g` (`m2 = 0`).
pub fn convolve_radial(
    space: &Space,
    f: &RadialFunction,
    g: &RadialFunction,
    s: f64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    let cartan = space.cartan()?;
    q.validate()?;
    let p = space.params;
    let m1 = p.m1 as i32;
    let growth = p.m1 as f64 - f.decay - g.decay;
    let inner_tol = Tolerance::new(0.0, (0.1 * q.tail_tolerance).max(1e-14));
    let integrand = |t: f64| -> Result<Complex64> {
        let fs = f.eval_scaled(t)?;
        if fs == cx(0.0) {
            return Ok(fs);
        }
        let ks = k_average_scaled(space, g, t, s, inner_tol)?;
        // sinh^{m1} t = e^{m1 t} ((1 - e^{-2t})/2)^{m1}
        let shape = (0.5 * (-(-2.0 * t).exp_m1())).powi(m1);
        Ok(fs * ks * (growth * t).exp() * shape)
    };
    let t_c = (2.0 * s).max(10.0);
    let mut breaks = vec![0.0, 1.0];
    if s > 0.0 {
        breaks.push(s);
    }
    let end = f.support.map_or(t_c, |r| r.min(t_c));
    breaks.push(end);
    breaks.retain(|&b| b <= end);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let head = quad::adaptive(integrand, &breaks, q.tol(), MAX_PIECES)?;
    let mut total = head.value;
    if f.support.is_none_or(|r| r > t_c) {
        // t = t_c + (1 + t_c)(1/w² - 1), w ∈ (0, 1]
        let tail = quad::adaptive(
            |w: f64| {
                let t = t_c + (1.0 + t_c) * (1.0 / (w * w) - 1.0);
                if f.support.is_some_and(|r| t > r) {
                    return Ok(cx(0.0));
                }
                Ok(integrand(t)? * (2.0 * (1.0 + t_c) / (w * w * w)))
            },
            &[0.0, 0.25, 0.5, 1.0],
            Tolerance::new(q.tail_tolerance * head.value.norm(), q.tail_tolerance),
            MAX_PIECES,
        )?;
        total += tail.value;
    }
    Ok(total * cartan)
}

/// A function on `X` with a region containing its support.
#[derive(Clone)]
pub struct XFunction {
    f: XFn,
    pub region: XRegion,
    /// Radial profile and centre when `f(x) = g(d(x, x₀))`.
    pub profile: Option<(RadialFunction, XPointNA)>,
}

impl fmt::Debug for XFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("XFunction")
            .field("region", &self.region)
            .field("profile", &self.profile)
            .finish()
    }
}

impl XFunction {
    pub fn new(f: XFn, region: XRegion) -> Self {
        Self {
            f,
            region,
            profile: None,
        }
    }

    /// `g(d(x, x₀))` for a profile supported in `[0, support]`.
    pub fn translated(space: &Space, g: RadialFunction, center: XPointNA, support: f64) -> Self {
        let p = space.params;
        let g = g.with_support(support);
        let g2 = g.clone();
        let c2 = center.clone();
        let f: XFn = Arc::new(move |x| {
            let d = p.distance(&c2, x).unwrap_or(f64::INFINITY);
            g2.eval(d).unwrap_or(Complex64::new(f64::NAN, 0.0))
        });
        let region = XRegion::ball(&center.nbar.v, center.t, support);
        Self {
            f,
            region,
            profile: Some((g, center)),
        }
    }

    pub fn radial(space: &Space, g: RadialFunction, support: f64) -> Self {
        Self::translated(space, g, XPointNA::origin(&space.params), support)
    }

    pub fn eval(&self, x: &XPointNA) -> Complex64 {
        (self.f)(x)
    }

    pub fn radial_profile(&self) -> Option<&RadialFunction> {
        match &self.profile {
            Some((g, c)) if c.t == 0.0 && c.nbar.is_identity() => Some(g),
            _ => None,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        let f = self.f.clone();
        let profile = self.profile.as_ref().map(|(g, c)| {
            let s = g.scaled.clone();
            (
                RadialFunction {
                    scaled: Arc::new(move |r| Ok(s(r)? * k)),
                    decay: g.decay,
                    support: g.support,
                },
                c.clone(),
            )
        });
        Self {
            f: Arc::new(move |x| f(x) * k),
            region: self.region.clone(),
            profile,
        }
    }
}

/// `f̃(λ, b) = ∫_X f(x) e^{(iλ+ρ)A(x,b)} dx` at the chart point `b`.
pub fn helgason_ft(
    space: &Space,
    f: &XFunction,
    lambda: SpectralParam,
    b: &NbarPoint,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    let p = space.params;
    let s = poisson_exponent(space, lambda);
    let r = measure::integrate_x_na_fallible(
        space,
        |x| {
            let v = f.eval(x);
            if v == cx(0.0) {
                return Ok(v);
            }
            Ok(v * (s * p.boundary_a(x, b)?).exp())
        },
        q,
        &f.region,
        lambda.re,
    )?;
    Ok(r.value)
}

/// `f̃(λ, ·)` as a boundary function.
pub fn helgason_boundary(
    space: &Space,
    f: &XFunction,
    lambda: SpectralParam,
    tag: SpectralParam,
    q: &QuadratureSpec,
) -> BoundaryFunction {
    let space2 = space.clone();
    let f = f.clone();
    let q = *q;
    BoundaryFunction::from_chart(
        space,
        tag,
        Arc::new(move |b| helgason_ft(&space2, &f, lambda, b, &q)),
    )
}

/// Both evaluations of `f ∗ φ_λ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralValue {
    /// `P_λ(f̃(-λ, ·))(x)`.
    pub via_poisson: Complex64,
    /// `∫ f(y) φ_λ(d(y, x)) dy`, for radial `f`.
    pub via_convolution: Option<Complex64>,
}

pub fn spectral_projection(
    space: &Space,
    f: &XFunction,
    lambda: SpectralParam,
    x: &XPointNA,
    q: &QuadratureSpec,
) -> Result<SpectralValue> {
    let minus = SpectralParam {
        re: -lambda.re,
        im: -lambda.im,
    };
    let g = helgason_boundary(space, f, minus, lambda, q);
    let via_poisson = poisson_direct(space, &g, lambda, x, q)?;
    let via_convolution = match f.radial_profile() {
        Some(prof) => {
            let phi = RadialFunction::spherical(space, lambda, q);
            let s = space.params.distance_from_origin(x)?;
            Some(convolve_radial(space, prof, &phi, s, q)?)
        }
        None => None,
    };
    Ok(SpectralValue {
        via_poisson,
        via_convolution,
    })
}

/// `max |Δu + (λ² + ρ²) u| / (|u| + 1e-12)` over the samples, by central differences in
/// the half-space chart with hyperbolic step `h` (Euclidean step `h·y` at height `y`).
///
/// The residual is recomputed at `h/2`; growth by more than a factor 10 means rounding
/// dominates and is reported as [`Error::StepTooSmall`].
pub fn laplace_residual<U>(
    space: &Space,
    u: U,
    lambda: f64,
    samples: &[XPointNA],
    h: f64,
) -> Result<f64>
where
    U: Fn(&XPointNA) -> Result<Complex64> + Sync,
{
    let p = space.params;
    p.require_abelian("the Laplace-Beltrami operator in the half-space chart")?;
    let coarse = residual_at(space, &u, lambda, samples, h)?;
    let fine = residual_at(space, &u, lambda, samples, 0.5 * h)?;
    if fine > 10.0 * coarse && fine > 1e-12 {
        return Err(Error::StepTooSmall { coarse, fine });
    }
    Ok(coarse)
}

fn residual_at<U>(space: &Space, u: &U, lambda: f64, samples: &[XPointNA], h: f64) -> Result<f64>
where
    U: Fn(&XPointNA) -> Result<Complex64> + Sync,
{
    let p = space.params;
    let eig = lambda * lambda + p.rho * p.rho;
    let sc = p.c.sqrt();
    let per_point = try_par_map(samples, |x| -> Result<f64> {
        let y = x.height();
        let d = h * y;
        let u0 = u(x)?;
        let at = |dv: &[f64], dy: f64| -> Result<Complex64> {
            let v: Coords = x.nbar.v.iter().zip(dv).map(|(a, b)| a + b / sc).collect();
            u(&XPointNA::new(
                NbarPoint {
                    v,
                    z: SmallVec::new(),
                },
                -(y + dy).ln(),
            ))
        };
        let zero = vec![0.0; p.m1];
        let mut lap = Complex64::new(0.0, 0.0);
        for k in 0..p.m1 {
            let mut e = zero.clone();
            e[k] = d;
            let plus = at(&e, 0.0)?;
            e[k] = -d;
            let minus = at(&e, 0.0)?;
            lap += (plus + minus - u0 * 2.0) / (d * d);
        }
        let up = at(&zero, d)?;
        let down = at(&zero, -d)?;
        lap += (up + down - u0 * 2.0) / (d * d);
        let dy = (up - down) / (2.0 * d);
        let op = lap * (y * y) - dy * ((p.m1 as f64 - 1.0) * y);
        Ok((op + u0 * eig).norm() / (u0.norm() + 1e-12))
    })?;
    Ok(per_point.into_iter().fold(0.0, f64::max))
}

/// Angles `θ_j = 2π(j + ½)/n` of the circle boundary of `H²` with their chart points;
/// the offset keeps every node away from the point at infinity `θ = π`.
pub fn circle_nodes(space: &Space, n: usize) -> Vec<(f64, NbarPoint)> {
    let s = space.params.c.sqrt();
    (0..n)
        .map(|j| {
            let th = 2.0 * PI * (j as f64 + 0.5) / n as f64 - PI;
            (th, NbarPoint::from_v(&[(0.5 * th).tan() / s]))
        })
        .collect()
}

/// Coefficients `c_k`, `|k| < n/2`, of the trigonometric interpolant of samples taken
/// at [`circle_nodes`].
pub fn circle_coefficients(samples: &[Complex64]) -> Vec<(i64, Complex64)> {
    let n = samples.len();
    let half = (n / 2) as i64;
    (-half + 1..half)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, v) in samples.iter().enumerate() {
                let th = 2.0 * PI * (j as f64 + 0.5) / n as f64 - PI;
                acc += v * Complex64::from_polar(1.0, -(k as f64) * th);
            }
            (k, acc / n as f64)
        })
        .collect()
}

/// Angle of the boundary point `k(n̄)M` on the circle, `θ = 2 atan(√c V)`.
pub fn circle_angle(space: &Space, n: &NbarPoint) -> f64 {
    2.0 * (space.params.c.sqrt() * n.v[0]).atan()
}

/// Boundary function on `H²` given by a trigonometric polynomial in the circle angle.
pub fn trig_boundary(
    space: &Space,
    lambda: SpectralParam,
    coeffs: Vec<(i64, Complex64)>,
) -> BoundaryFunction {
    let sp = space.clone();
    BoundaryFunction::from_chart(
        space,
        lambda,
        Arc::new(move |n| {
            let th = circle_angle(&sp, n);
            Ok(coeffs
                .iter()
                .map(|(k, a)| a * Complex64::from_polar(1.0, *k as f64 * th))
                .sum())
        }),
    )
}

/// `Φ_k(r) = ∫_K (cosh r - sinh r cos θ)^{-(iλ+ρ)} e^{ikθ} dk` on `H²`, so that
/// `P_λ(Σ a_k e^{ikθ})` at polar coordinates `(r, α)` is `Σ a_k e^{ikα} Φ_k(r)`.
pub fn poisson_mode(
    space: &Space,
    lambda: SpectralParam,
    k: i64,
    r: f64,
    q: &QuadratureSpec,
) -> Result<Complex64> {
    let p = space.params;
    if p.m1 != 1 || p.m2 != 0 {
        return Err(Error::Unsupported(
            "rotational Poisson modes exist on H² only".into(),
        ));
    }
    let r = r.abs();
    if r == 0.0 {
        return Ok(cx(if k == 0 { 1.0 } else { 0.0 }));
    }
    let s = poisson_exponent(space, lambda);
    let e = (-2.0 * r).exp();
    let kf = k as f64;
    let est = quad::adaptive(
        |th: f64| {
            let h = (0.5 * th).sin();
            let log_base = r + (e + (1.0 - e) * h * h).ln();
            Ok((-s * log_base).exp() * (kf * th).cos())
        },
        &peak_breaks(2.0 * (-r).exp()),
        phi_tolerance(q),
        MAX_PIECES,
    )?;
    Ok(est.value / PI)
}

/// Tabulated [`poisson_mode`] values `e^{ρr} Φ_k(r)` on a uniform radial grid.
#[derive(Debug, Clone)]
pub struct PoissonModes {
    pub lambda: SpectralParam,
    rho: f64,
    table: Vec<UniformTable<Complex64>>,
}

impl PoissonModes {
    pub fn build(
        space: &Space,
        lambda: SpectralParam,
        max_k: usize,
        r_max: f64,
        step: f64,
        q: &QuadratureSpec,
    ) -> Result<Self> {
        if !(r_max > 0.0) {
            return Err(Error::InvalidArgument(
                "mode table needs a positive range".into(),
            ));
        }
        let rho = space.params.rho;
        let table = (0..=max_k as i64)
            .map(|k| {
                UniformTable::build(step, r_max, |r| {
                    Ok(poisson_mode(space, lambda, k, r, q)? * (rho * r).exp())
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { lambda, rho, table })
    }

    pub fn r_max(&self) -> f64 {
        self.table[0].x_max()
    }

    pub fn max_k(&self) -> usize {
        self.table.len() - 1
    }

    pub fn mode(&self, k: i64, r: f64) -> Result<Complex64> {
        let row = self
            .table
            .get(k.unsigned_abs() as usize)
            .ok_or_else(|| Error::Domain(format!("mode {k} not tabulated")))?;
        Ok(row.eval(r)? * (-self.rho * r).exp())
    }

    /// `P_λF(x)` for `F = Σ a_k e^{ikθ}`.
    pub fn evaluate(
        &self,
        space: &Space,
        coeffs: &[(i64, Complex64)],
        x: &XPointNA,
    ) -> Result<Complex64> {
        let polar = space.params.na_to_polar(x)?;
        let alpha = polar.omega[0].atan2(polar.omega[1]);
        let st = self.table[0].stencil(polar.t)?;
        let mut acc = cx(0.0);
        for (k, a) in coeffs {
            let row = self
                .table
                .get(k.unsigned_abs() as usize)
                .ok_or_else(|| Error::Domain(format!("mode {k} not tabulated")))?;
            acc += a * Complex64::from_polar(1.0, *k as f64 * alpha) * row.eval_stencil(st);
        }
        Ok(acc * (-self.rho * polar.t).exp())
    }

    /// Normalized circle mean of `|P_λF|²` at radius `r`: `Σ |a_k|² |Φ_k(r)|²`.
    pub fn circle_mean_sq(&self, coeffs: &[(i64, Complex64)], r: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (k, a) in coeffs {
            acc += a.norm_sqr() * self.mode(*k, r)?.norm_sqr();
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn phi_at_zero_and_symmetry() {
        for s in [Space::h2(), Space::h3()] {
            for l in [0.5, 1.0, 2.0] {
                let lp = SpectralParam::real(l);
                let lm = SpectralParam::real(-l);
                assert_eq!(spherical_phi(&s, lp, 0.0, &q()).unwrap(), cx(1.0));
                for t in [0.3, 2.0, 9.0] {
                    let a = spherical_phi(&s, lp, t, &q()).unwrap();
                    let b = spherical_phi(&s, lm, t, &q()).unwrap();
                    assert!((a - b).norm() < 1e-12, "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn phi_h3_closed_form() {
        let s = Space::h3();
        for k in 0..=50 {
            let t = 0.1 + 9.9 * k as f64 / 50.0;
            let v = spherical_phi(&s, SpectralParam::real(1.0), t, &q()).unwrap();
            assert!((v - cx(t.sin() / t.sinh())).norm() < 1e-10, "t={t}: {v}");
        }
    }

    #[test]
    fn phi_at_i_rho_is_one() {
        let s = Space::h2();
        let l = SpectralParam { re: 0.0, im: 0.5 };
        let v = spherical_phi(&s, l, 3.0, &q()).unwrap();
        assert!((v - cx(1.0)).norm() < 1e-12);
    }

    #[test]
    fn phi_from_nbar_matches_k_integral() {
        let s = Space::h2();
        let l = SpectralParam::real(1.0);
        let one = BoundaryFunction::one(&s, l);
        for t in [0.0, 0.7, 4.0, 12.0] {
            let x = XPointNA::new(NbarPoint::from_v(&[0.0]), t);
            let a = poisson_psi(&s, &one, l, &x, &q()).unwrap();
            let b = poisson_direct(&s, &one, l, &x, &q()).unwrap();
            let c = spherical_phi_k(&s, l, t, &q()).unwrap();
            assert!(
                (a - c).norm() < 1e-9 * c.norm().max(1e-3),
                "t={t}: {a} vs {c}"
            );
            assert!(
                (b - c).norm() < 1e-9 * c.norm().max(1e-3),
                "t={t}: {b} vs {c}"
            );
        }
    }

    #[test]
    fn poisson_paths_agree_off_axis() {
        let s = Space::h2();
        let l = SpectralParam::real(1.0);
        let f = trig_boundary(
            &s,
            l,
            vec![
                (-1, Complex64::new(0.3, 0.1)),
                (0, cx(1.0)),
                (2, Complex64::new(0.0, -0.5)),
            ],
        );
        for (v, t) in [(1.3, -2.0), (-4.0, 0.5), (0.2, 6.0), (10.0, 3.0)] {
            let x = XPointNA::new(NbarPoint::from_v(&[v]), t);
            let a = poisson_psi(&s, &f, l, &x, &q()).unwrap();
            let b = poisson_direct(&s, &f, l, &x, &q()).unwrap();
            assert!((a - b).norm() < 1e-9 * a.norm(), "{a} vs {b}");
        }
    }

    #[test]
    fn poisson_at_i_rho_is_one() {
        let s = Space::h2();
        let l = SpectralParam { re: 0.0, im: 0.5 };
        let one = BoundaryFunction::one(&s, l);
        let x = XPointNA::new(NbarPoint::from_v(&[2.0]), 1.5);
        let v = poisson_psi(&s, &one, l, &x, &q()).unwrap();
        assert!((v - cx(1.0)).norm() < 1e-9);
    }

    #[test]
    fn psi_isometry() {
        let s = Space::h2();
        let l = SpectralParam::real(1.0);
        let f = trig_boundary(&s, l, vec![(0, cx(1.0)), (3, Complex64::new(0.0, 2.0))]);
        let a = f.l2_boundary(&s, &q()).unwrap();
        let b = f.l2_psi(&s, &q()).unwrap();
        assert!((a - 5f64.sqrt()).abs() < 1e-9);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn kernels() {
        let s = Space::h2();
        let k2 = radial_kernels(&s, RadialKernel::Kappa(2.0)).unwrap();
        assert_eq!(k2.eval(0.0).unwrap(), cx(1.0));
        assert!((k2.eval(3.0).unwrap().re - (-1.5f64).exp()).abs() < 1e-15);
        let f = radial_kernels(&s, RadialKernel::Counterexample).unwrap();
        assert_eq!(f.eval(0.0).unwrap(), cx(1.0));
        let c = radial_kernels(&s, RadialKernel::Phi0Comparator).unwrap();
        assert!((c.eval(1.0).unwrap().re - 2.0 * (-0.5f64).exp()).abs() < 1e-15);
        assert!(radial_kernels(&s, RadialKernel::Kappa(3.0)).is_err());
    }

    #[test]
    fn composed_distance_forms_agree() {
        for (t, s, th) in [
            (1.0, 2.0, 0.3),
            (5.0, 5.0, 1e-3),
            (0.0, 3.0, 2.0),
            (40.0, 10.0, 1.0),
        ] {
            let cosh_r = f64::cosh(t) * f64::cosh(s) - f64::sinh(t) * f64::sinh(s) * f64::cos(th);
            assert!((composed_distance(t, s, th) - cosh_r.acosh()).abs() < 1e-8);
        }
        let a = composed_distance(400.0, 300.0, 0.5);
        let b = composed_distance(400.0 - 1e-9, 300.0, 0.5);
        assert!((a - b).abs() < 1e-6);
        // large arguments: r ≈ t + s + 2 ln sin(θ/2)
        let r = composed_distance(500.0, 400.0, 1.0);
        assert!((r - (900.0 + 2.0 * f64::ln(f64::sin(0.5)))).abs() < 1e-9);
    }

    #[test]
    fn functional_equation_phi0() {
        let s = Space::h2();
        let l0 = SpectralParam::real(0.0);
        let phi0 = RadialFunction::spherical(&s, l0, &q());
        let lhs = k_average(&s, &phi0, 1.0, 1.0, &q()).unwrap();
        let p1 = spherical_phi(&s, l0, 1.0, &q()).unwrap();
        assert!((lhs - p1 * p1).norm() < 1e-9, "{lhs} vs {}", p1 * p1);
    }

    #[test]
    fn convolution_at_origin() {
        let q = q();
        let s = Space::h2().calibrated(&q).unwrap();
        let f = RadialFunction::from_fn(|r| (-r * r).exp());
        let g = RadialFunction::from_fn(|r| 1.0 / (1.0 + r * r));
        let v = convolve_radial(&s, &f, &g, 0.0, &q).unwrap();
        let want = measure::integrate_radial(
            &s,
            |r| cx((-r * r).exp() / (1.0 + r * r)),
            &q,
            &[0.0, 1.0, 3.0, 8.0],
        )
        .unwrap();
        assert!((v - want.value).norm() < 1e-9 * want.value.norm());
        let zero = RadialFunction::from_fn(|_| 0.0);
        assert_eq!(convolve_radial(&s, &f, &zero, 1.0, &q).unwrap(), cx(0.0));
    }

    #[test]
    fn residual_of_h3_closed_form() {
        let s = Space::h3();
        let p = s.params;
        let u = |x: &XPointNA| {
            Ok(cx({
                let r = p.distance_from_origin(x).unwrap();
                if r < 1e-8 {
                    1.0
                } else {
                    r.sin() / r.sinh()
                }
            }))
        };
        let samples: Vec<XPointNA> = (0..10)
            .flat_map(|i| {
                (0..10).map(move |j| {
                    XPointNA::new(
                        NbarPoint::from_v(&[0.3 * i as f64 - 1.2, 0.5]),
                        0.2 * j as f64 - 0.9,
                    )
                })
            })
            .collect();
        let r = laplace_residual(&s, u, 1.0, &samples, 1e-3).unwrap();
        assert!(r < 1e-4, "{r}");
        assert_eq!(
            laplace_residual(&s, |_| Ok(cx(0.0)), 1.0, &samples, 1e-3).unwrap(),
            0.0
        );
    }

    #[test]
    fn residual_detects_cancellation() {
        let s = Space::h2();
        let p = s.params;
        let x0 = XPointNA::new(NbarPoint::from_v(&[0.4]), 0.3);
        let h = 1e-3;
        let d = h * x0.height();
        // noise that vanishes on the stencil of step h and peaks on the stencil of step h/2
        let u = |x: &XPointNA| {
            let r = p.distance_from_origin(x).unwrap();
            let dx = p.c.sqrt() * (x.nbar.v[0] - x0.nbar.v[0]);
            let dy = x.height() - x0.height();
            let noise = 1e-6 * ((PI * dx / d).sin().powi(2) + (PI * dy / d).sin().powi(2));
            spherical_phi_k(&s, SpectralParam::real(1.0), r, &QuadratureSpec::default())
                .map(|v| v + noise)
        };
        let r = laplace_residual(&s, u, 1.0, std::slice::from_ref(&x0), h);
        assert!(matches!(r, Err(Error::StepTooSmall { .. })), "{r:?}");
    }

    #[test]
    fn circle_interpolation() {
        let s = Space::h2();
        let coeffs = vec![
            (-2i64, Complex64::new(0.5, 0.0)),
            (1, Complex64::new(0.0, 1.0)),
            (7, cx(0.25)),
        ];
        let b = trig_boundary(&s, SpectralParam::real(1.0), coeffs.clone());
        let nodes = circle_nodes(&s, 16);
        let samples: Vec<Complex64> = nodes
            .iter()
            .map(|(_, n)| b.chart(n).unwrap().unwrap())
            .collect();
        for (k, c) in circle_coefficients(&samples) {
            let want = coeffs
                .iter()
                .find(|(kk, _)| *kk == k)
                .map_or(cx(0.0), |(_, a)| *a);
            assert!((c - want).norm() < 1e-14, "{k}: {c}");
        }
        for (th, n) in &nodes {
            assert!((circle_angle(&s, n) - th).abs() < 1e-14);
        }
    }

    #[test]
    fn mode_table_matches_nbar_path() {
        let s = Space::h2();
        let l = SpectralParam::real(1.0);
        let coeffs = vec![
            (-2, Complex64::new(0.3, -0.1)),
            (0, cx(0.8)),
            (1, Complex64::new(-0.2, 0.5)),
            (3, cx(0.25)),
        ];
        let b = trig_boundary(&s, l, coeffs.clone());
        let modes = PoissonModes::build(&s, l, 3, 12.0, 1.0 / 32.0, &q()).unwrap();
        for (v, t) in [(0.0, 0.0), (0.7, -1.3), (-3.0, 2.5), (5.0, 4.0), (0.2, 7.5)] {
            let x = XPointNA::new(NbarPoint::from_v(&[v]), t);
            let a = modes.evaluate(&s, &coeffs, &x).unwrap();
            let want = poisson_psi(&s, &b, l, &x, &q()).unwrap();
            assert!(
                (a - want).norm() < 1e-8 * (1.0 + want.norm()),
                "{v} {t}: {a} {want}"
            );
        }
        for r in [0.0, 0.4, 3.3, 11.9] {
            let phi = spherical_phi(&s, l, r, &q()).unwrap();
            assert!((modes.mode(0, r).unwrap() - phi).norm() < 1e-10);
        }
        assert!(matches!(modes.mode(0, 13.0), Err(Error::Domain(_))));
        assert!(matches!(
            poisson_mode(&Space::h3(), l, 0, 1.0, &q()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn circle_mean_is_parseval() {
        let s = Space::h2();
        let l = SpectralParam::real(0.5);
        let coeffs = vec![
            (-1, Complex64::new(0.3, -0.4)),
            (0, cx(1.0)),
            (2, Complex64::new(0.0, 0.7)),
        ];
        let modes = PoissonModes::build(&s, l, 2, 4.0, 1.0 / 32.0, &q()).unwrap();
        let r = 2.7;
        let n = 64;
        let mut mean = 0.0;
        for j in 0..n {
            let a = 2.0 * PI * j as f64 / n as f64;
            let omega: Coords = smallvec::smallvec![a.sin(), a.cos()];
            let x = s
                .params
                .polar_to_na(&crate::model::XPointPolar { t: r, omega })
                .unwrap();
            mean += modes.evaluate(&s, &coeffs, &x).unwrap().norm_sqr() / n as f64;
        }
        let want = modes.circle_mean_sq(&coeffs, r).unwrap();
        assert!((mean - want).abs() < 1e-12 * want);
    }
}
