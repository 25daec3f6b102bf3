//! Integration over `N̄`, over `X` in horospherical and polar coordinates, and over
//! the boundary `K/M`.
//!
//! Measures: `dn̄ = γ dV dZ`, so that `∫ e^{-2ρH} dn̄ = 1`; on `X`,
//! `dμ = κ γ e^{2ρt} dV dt` with `κ = c^{m1/2}`, which is `γ` times the Riemannian
//! volume; in polar coordinates `dμ = C_cartan sinh^{m1}(r) dr dω` with `dω` the
//! normalised sphere measure.
//!
//! Every unbounded axis is integrated through a sinh substitution around a focus, so
//! the algebraic tails of kernels and boundary weights are covered to double precision
//! unless `truncation_radius` clips the box.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::model::{self, Coords, NbarPoint, SpaceParams, XPointNA, XPointPolar};
use crate::quad::{self, Estimate, SinhAxis, Tolerance};

/// Serde for reals that may be `+∞`, written as the string `"inf"`.
pub(crate) mod extended_float {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Raw::Text(t) => Err(D::Error::custom(format!(
                "expected a number or \"inf\", got \"{t}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Composite Gauss–Legendre in the sinh variable, refined by doubling.
    TensorGauss,
    /// Globally adaptive Gauss–Kronrod on each axis.
    AdaptiveSubdivision,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Half-width of the `V`/`Z` box; `f64::INFINITY` integrates over the whole group.
    #[serde(with = "extended_float")]
    pub truncation_radius: f64,
    pub nodes_per_axis: usize,
    /// Relative accuracy target of every integral.
    pub tail_tolerance: f64,
    pub scheme: Scheme,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            truncation_radius: f64::INFINITY,
            nodes_per_axis: 16,
            tail_tolerance: 1e-11,
            scheme: Scheme::AdaptiveSubdivision,
        }
    }
}

const MAX_PIECES: usize = 4000;
const TENSOR_DOUBLINGS: usize = 3;

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_axis < 8 {
            return Err(Error::Config(format!(
                "nodes_per_axis must be at least 8, got {}",
                self.nodes_per_axis
            )));
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance <= 1e-3) {
            return Err(Error::Config(format!(
                "tail_tolerance must lie in (0, 1e-3], got {}",
                self.tail_tolerance
            )));
        }
        if !(self.truncation_radius > 0.0) {
            return Err(Error::Config("truncation_radius must be positive".into()));
        }
        Ok(())
    }

    pub fn tensor(nodes: usize, tail_tolerance: f64) -> Self {
        Self {
            nodes_per_axis: nodes,
            tail_tolerance,
            scheme: Scheme::TensorGauss,
            ..Self::default()
        }
    }

    pub fn with_tolerance(self, tail_tolerance: f64) -> Self {
        Self {
            tail_tolerance,
            ..self
        }
    }

    pub(crate) fn tol(&self) -> Tolerance {
        Tolerance::new(0.0, self.tail_tolerance)
    }

    /// Nodes per unit of the sinh variable for an oscillation rate `λ`.
    pub(crate) fn nodes_for(&self, lambda: f64) -> usize {
        self.nodes_per_axis * (1.0 + lambda.abs()).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationResult {
    pub value: Complex64,
    pub abs_error_estimate: f64,
    pub nodes_used: usize,
}

impl IntegrationResult {
    pub fn zero() -> Self {
        Self {
            value: Complex64::new(0.0, 0.0),
            abs_error_estimate: 0.0,
            nodes_used: 0,
        }
    }

    fn scaled(e: Estimate<Complex64>, s: f64) -> Self {
        Self {
            value: e.value * s,
            abs_error_estimate: e.error * s.abs(),
            nodes_used: e.evals,
        }
    }
}

/// A rank-one space together with its measure constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Space {
    pub params: SpaceParams,
    pub gamma: f64,
    cartan: Option<f64>,
}

impl Space {
    pub fn new(params: SpaceParams) -> Result<Self> {
        Ok(Self {
            gamma: model::nbar_normalization(&params)?,
            params,
            cartan: None,
        })
    }

    pub fn h2() -> Self {
        Self::new(SpaceParams::h2()).expect("closed form")
    }

    pub fn h3() -> Self {
        Self::new(SpaceParams::h3()).expect("closed form")
    }

    pub fn cartan(&self) -> Result<f64> {
        self.cartan.ok_or(Error::Uncalibrated)
    }

    pub fn with_cartan(mut self, value: f64) -> Self {
        self.cartan = Some(value);
        self
    }

    /// Runs [`calibrate_cartan`] and stores the constant. Results are memoized per
    /// process for each space and quadrature setting.
    pub fn calibrated(mut self, q: &QuadratureSpec) -> Result<Self> {
        type Key = (usize, usize, u64, u64, usize, Scheme);
        static CACHE: OnceLock<Mutex<HashMap<Key, f64>>> = OnceLock::new();
        let key = (
            self.params.m1,
            self.params.m2,
            q.tail_tolerance.to_bits(),
            q.truncation_radius.to_bits(),
            q.nodes_per_axis,
            q.scheme,
        );
        let cache = CACHE.get_or_init(Default::default);
        let hit = cache.lock().ok().and_then(|m| m.get(&key).copied());
        let value = match hit {
            Some(v) => v,
            None => {
                let v = calibrate_cartan(&self, q)?;
                if let Ok(mut m) = cache.lock() {
                    m.insert(key, v);
                }
                v
            }
        };
        self.cartan = Some(value);
        Ok(self)
    }

    /// Density of `μ_X` with respect to `dV dt` at height `t`.
    pub fn na_density(&self, t: f64) -> f64 {
        self.params.c.powf(self.params.m1 as f64 / 2.0)
            * self.gamma
            * (2.0 * self.params.rho * t).exp()
    }

    /// Natural `V` length scale `1/√c`.
    pub fn unit_scale(&self) -> f64 {
        1.0 / self.params.c.sqrt()
    }

    pub fn dim(&self) -> usize {
        self.params.m1 + self.params.m2
    }
}

/// Where an `N̄` integrand lives: sinh axes centred at `center` with scale `scale`,
/// extra breakpoints on spheres `|V - center| = r` and at the coordinates of `points`.
/// With `support` the integration runs over the ball `|V - center| ≤ support` only.
#[derive(Debug, Clone, PartialEq)]
pub struct Focus {
    pub center: Coords,
    pub scale: f64,
    pub radii: Vec<f64>,
    pub points: Vec<Coords>,
    pub support: Option<f64>,
}

impl Focus {
    pub fn at(center: &[f64], scale: f64) -> Self {
        Self {
            center: SmallVec::from_slice(center),
            scale,
            radii: Vec::new(),
            points: Vec::new(),
            support: None,
        }
    }

    pub fn origin(space: &Space) -> Self {
        Self::at(&vec![0.0; space.dim()], space.unit_scale())
    }

    pub fn with_point(mut self, p: &[f64]) -> Self {
        self.points.push(SmallVec::from_slice(p));
        self
    }

    pub fn with_radius(mut self, r: f64) -> Self {
        self.radii.push(r);
        self
    }

    pub fn with_support(mut self, r: f64) -> Self {
        self.support = Some(r);
        self.radii.push(r);
        self
    }
}

/// Reach of an untruncated sinh axis relative to the focus.
const REACH: f64 = 1e15;

struct Nested<'a> {
    focus: &'a Focus,
    q: &'a QuadratureSpec,
    dim: usize,
    split: usize,
    nodes: usize,
    offset: usize,
}

impl Nested<'_> {
    fn axis(&self, k: usize) -> SinhAxis {
        // Z-directions scale quadratically under dilation
        let s = if k < self.split {
            self.focus.scale
        } else {
            self.focus.scale * self.focus.scale
        };
        SinhAxis::new(self.focus.center[k], s)
    }

    /// `u`-breakpoints on axis `k` given the earlier coordinates.
    fn breaks(&self, k: usize, prefix: &[f64]) -> Vec<f64> {
        let ax = self.axis(k);
        let c = &self.focus.center;
        let s: f64 = prefix
            .iter()
            .zip(c.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        let (lo, hi) = match self.focus.support {
            Some(r) => {
                let h = (r * r - s).max(0.0).sqrt();
                (c[k] - h, c[k] + h)
            }
            None if self.q.truncation_radius.is_finite() => {
                (-self.q.truncation_radius, self.q.truncation_radius)
            }
            None => {
                let reach = REACH * self.focus.scale.max(c[k].abs()).max(1.0);
                (c[k] - reach, c[k] + reach)
            }
        };
        let mut special: Vec<f64> = Vec::new();
        for &r in &self.focus.radii {
            if r * r > s {
                let h = (r * r - s).sqrt();
                special.push(c[k] - h);
                special.push(c[k] + h);
            }
        }
        special.extend(self.focus.points.iter().map(|p| p[k]));
        ax.breaks(lo, hi, &special)
    }

    fn adaptive<F>(&self, k: usize, prefix: &mut Coords, f: &F) -> Result<Estimate<Complex64>>
    where
        F: Fn(&[f64]) -> Result<Complex64>,
    {
        let ax = self.axis(k);
        let breaks = self.breaks(k, prefix);
        if breaks.len() < 2 || breaks[breaks.len() - 1] <= breaks[0] {
            return Ok(Estimate {
                value: Complex64::new(0.0, 0.0),
                error: 0.0,
                magnitude: 0.0,
                evals: 0,
            });
        }
        // inner axes are resolved one digit beyond their parent so the parent sees a smooth integrand
        let depth = (k + self.offset) as i32;
        let tol = Tolerance::new(0.0, (self.q.tail_tolerance * 0.1f64.powi(depth)).max(1e-14));
        let mut evals = 0usize;
        let mut est = quad::adaptive(
            |u| {
                let (x, j) = ax.map(u);
                prefix.push(x);
                let r = if k + 1 == self.dim {
                    evals += 1;
                    f(prefix)
                } else {
                    self.adaptive(k + 1, prefix, f).map(|e| {
                        evals += e.evals;
                        e.value
                    })
                };
                prefix.pop();
                Ok(r? * j)
            },
            &breaks,
            tol,
            MAX_PIECES,
        )?;
        est.evals = evals;
        Ok(est)
    }

    fn tensor<F>(&self, k: usize, prefix: &mut Coords, f: &F, nodes: usize) -> Result<Complex64>
    where
        F: Fn(&[f64]) -> Result<Complex64>,
    {
        let ax = self.axis(k);
        let breaks = self.breaks(k, prefix);
        if breaks.len() < 2 || breaks[breaks.len() - 1] <= breaks[0] {
            return Ok(Complex64::new(0.0, 0.0));
        }
        quad::composite(
            |u| {
                let (x, j) = ax.map(u);
                prefix.push(x);
                let r = if k + 1 == self.dim {
                    f(prefix)
                } else {
                    self.tensor(k + 1, prefix, f, nodes)
                };
                prefix.pop();
                Ok(r? * j)
            },
            &breaks,
            1.0,
            nodes,
        )
    }

    fn run<F>(&self, f: &F) -> Result<Estimate<Complex64>>
    where
        F: Fn(&[f64]) -> Result<Complex64>,
    {
        let mut prefix = Coords::new();
        match self.q.scheme {
            Scheme::AdaptiveSubdivision => self.adaptive(0, &mut prefix, f),
            Scheme::TensorGauss => {
                let mut n = self.nodes;
                let mut prev = self.tensor(0, &mut prefix, f, n)?;
                let mut err = f64::INFINITY;
                for _ in 0..TENSOR_DOUBLINGS {
                    n *= 2;
                    let next = self.tensor(0, &mut prefix, f, n)?;
                    err = (next - prev).norm();
                    prev = next;
                    if err <= self.q.tail_tolerance * prev.norm() {
                        return Ok(Estimate {
                            value: prev,
                            error: err,
                            magnitude: prev.norm(),
                            evals: n,
                        });
                    }
                }
                // accept an integral that is zero to rounding
                if err <= 1e3 * f64::EPSILON {
                    return Ok(Estimate {
                        value: prev,
                        error: err,
                        magnitude: prev.norm(),
                        evals: n,
                    });
                }
                Err(Error::NonConvergence {
                    context: "tensor Gauss-Legendre over N̄".into(),
                    error: err,
                    target: self.q.tail_tolerance * prev.norm(),
                })
            }
        }
    }
}

fn point_from(p: &SpaceParams, coords: &[f64]) -> NbarPoint {
    NbarPoint::new(&coords[..p.m1], &coords[p.m1..])
}

/// `∫_{N̄} f dn̄` with the default focus at the identity.
pub fn integrate_nbar<F>(space: &Space, f: F, q: &QuadratureSpec) -> Result<IntegrationResult>
where
    F: Fn(&NbarPoint) -> Complex64,
{
    integrate_nbar_focused(space, |n| Ok(f(n)), q, &Focus::origin(space), 0.0)
}

/// `∫_{N̄} f dn̄` around an explicit focus, for a fallible integrand with oscillation rate `lambda`.
pub fn integrate_nbar_focused<F>(
    space: &Space,
    f: F,
    q: &QuadratureSpec,
    focus: &Focus,
    lambda: f64,
) -> Result<IntegrationResult>
where
    F: Fn(&NbarPoint) -> Result<Complex64>,
{
    q.validate()?;
    let p = &space.params;
    let nested = Nested {
        focus,
        q,
        dim: space.dim(),
        split: p.m1,
        nodes: q.nodes_for(lambda),
        offset: 0,
    };
    let est = nested.run(&|c: &[f64]| f(&point_from(p, c)))?;
    Ok(IntegrationResult::scaled(est, space.gamma))
}

/// `∫_{K/M} F db` through the chart: `∫_{N̄} F(k(n̄)M) e^{-2ρH(n̄)} dn̄`.
pub fn integrate_km<F>(space: &Space, f: F, q: &QuadratureSpec) -> Result<IntegrationResult>
where
    F: Fn(&NbarPoint) -> Complex64,
{
    integrate_nbar(space, |n| f(n) * space.params.boundary_weight(n), q)
}

/// Integration region on `X` in horospherical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct XRegion {
    /// Breakpoints in `t`; the first and last bound the integral.
    pub t_breaks: Vec<f64>,
    pub center: Coords,
    /// Geodesic ball `B((center, t0), r)` containing the support, if any.
    pub ball: Option<(f64, f64)>,
    /// `V` scale of the integrand at height `t = 0`; scaled by `e^{-t}` below it.
    pub scale: Option<f64>,
    /// Spheres `|V - center| = r` across which the integrand may jump.
    pub radii: Vec<f64>,
}

impl XRegion {
    /// `N̄ × [t_lo, t_hi]`.
    pub fn slab(t_lo: f64, t_hi: f64) -> Self {
        Self {
            t_breaks: vec![t_lo, t_hi],
            center: SmallVec::new(),
            ball: None,
            scale: None,
            radii: Vec::new(),
        }
    }

    /// A geodesic ball around `(center, t0)`.
    pub fn ball(center: &[f64], t0: f64, r: f64) -> Self {
        Self {
            t_breaks: vec![t0 - r, t0, t0 + r],
            center: SmallVec::from_slice(center),
            ball: Some((t0, r)),
            scale: None,
            radii: Vec::new(),
        }
    }

    pub fn with_breaks(mut self, extra: &[f64]) -> Self {
        let (lo, hi) = (self.t_breaks[0], self.t_breaks[self.t_breaks.len() - 1]);
        self.t_breaks
            .extend(extra.iter().copied().filter(|&t| t > lo && t < hi));
        self.t_breaks.sort_by(f64::total_cmp);
        self.t_breaks.dedup();
        self
    }

    pub fn with_radius(mut self, r: f64) -> Self {
        self.radii.push(r);
        self
    }

    pub fn centered(mut self, center: &[f64]) -> Self {
        self.center = SmallVec::from_slice(center);
        self
    }

    fn focus(&self, space: &Space, t: f64) -> Focus {
        let m1 = space.params.m1;
        let center: Coords = if self.center.is_empty() {
            SmallVec::from_elem(0.0, m1)
        } else {
            self.center.clone()
        };
        let y = (-t).exp();
        let base = self.scale.unwrap_or(space.unit_scale()) * y.min(1.0);
        let mut f = Focus::at(&center, base);
        f.radii.extend(self.radii.iter().copied());
        if let Some((t0, r)) = self.ball {
            // the ball is the Euclidean disc of centre (x0, y0 cosh r) and radius y0 sinh r
            let y0 = (-t0).exp();
            let h2 = (y0 * r.sinh()).powi(2) - (y - y0 * r.cosh()).powi(2);
            let h = h2.max(0.0).sqrt() * space.unit_scale();
            f.scale = base.min(h.max(1e-300));
            f = f.with_support(h);
        }
        f
    }
}

/// `∫_X f dμ` over a horospherical region (`m2 = 0`).
pub fn integrate_x_na<F>(
    space: &Space,
    f: F,
    q: &QuadratureSpec,
    region: &XRegion,
) -> Result<IntegrationResult>
where
    F: Fn(&XPointNA) -> Complex64,
{
    integrate_x_na_fallible(space, |x| Ok(f(x)), q, region, 0.0)
}

pub fn integrate_x_na_fallible<F>(
    space: &Space,
    f: F,
    q: &QuadratureSpec,
    region: &XRegion,
    lambda: f64,
) -> Result<IntegrationResult>
where
    F: Fn(&XPointNA) -> Result<Complex64>,
{
    q.validate()?;
    space.params.require_abelian("integration over X")?;
    let p = &space.params;
    let slice = |t: f64| -> Result<Estimate<Complex64>> {
        let focus = region.focus(space, t);
        let nested = Nested {
            focus: &focus,
            q,
            dim: p.m1,
            split: p.m1,
            nodes: q.nodes_for(lambda),
            offset: 1,
        };
        let est = nested.run(&|c: &[f64]| f(&XPointNA::new(NbarPoint::from_v(c), t)))?;
        let w = space.na_density(t);
        Ok(Estimate {
            value: est.value * w,
            error: est.error * w,
            magnitude: est.magnitude * w,
            evals: est.evals,
        })
    };
    let est = match q.scheme {
        Scheme::AdaptiveSubdivision => {
            let mut evals = 0;
            let mut e = quad::adaptive(
                |t| {
                    let s = slice(t)?;
                    evals += s.evals;
                    Ok(s.value)
                },
                &region.t_breaks,
                q.tol(),
                MAX_PIECES,
            )?;
            e.evals = evals;
            e
        }
        Scheme::TensorGauss => quad::composite_refined(
            |t| slice(t).map(|s| s.value),
            &region.t_breaks,
            1.0,
            q.nodes_for(lambda),
            q.tol(),
            TENSOR_DOUBLINGS,
        )?,
    };
    Ok(IntegrationResult::scaled(est, 1.0))
}

/// Normalised integral over the sphere `S^{m1}` (`m1 ∈ {1, 2}`).
fn sphere_integral<F>(m1: usize, f: F, q: &QuadratureSpec) -> Result<Estimate<Complex64>>
where
    F: Fn(&[f64]) -> Result<Complex64>,
{
    let tol = q.tol();
    let quarter = [0.0, 0.5 * PI, PI, 1.5 * PI, 2.0 * PI];
    match m1 {
        1 => {
            let e = quad::adaptive(
                |th: f64| f(&[th.sin(), th.cos()]),
                &quarter,
                tol,
                MAX_PIECES,
            )?;
            Ok(Estimate {
                value: e.value / (2.0 * PI),
                error: e.error / (2.0 * PI),
                ..e
            })
        }
        2 => {
            let e = quad::adaptive(
                |th: f64| {
                    let (s, c) = th.sin_cos();
                    let inner = quad::adaptive(
                        |ph: f64| f(&[s * ph.cos(), s * ph.sin(), c]),
                        &quarter,
                        tol,
                        MAX_PIECES,
                    )?;
                    Ok(inner.value * s)
                },
                &[0.0, 0.25 * PI, 0.5 * PI, 0.75 * PI, PI],
                tol,
                MAX_PIECES,
            )?;
            Ok(Estimate {
                value: e.value / (4.0 * PI),
                error: e.error / (4.0 * PI),
                ..e
            })
        }
        _ => Err(Error::Unsupported(format!(
            "sphere integration for m1 = {m1}"
        ))),
    }
}

/// `C_cartan ∫_{r_breaks} sinh^{m1}(r) ∫_{S^{m1}} f dω dr` (`m2 = 0`).
pub fn integrate_x_polar<F>(
    space: &Space,
    f: F,
    q: &QuadratureSpec,
    r_breaks: &[f64],
) -> Result<IntegrationResult>
where
    F: Fn(&XPointPolar) -> Complex64,
{
    let cartan = space.cartan()?;
    let raw = polar_raw(space, |x| Ok(f(x)), q, r_breaks)?;
    Ok(IntegrationResult::scaled(raw, cartan))
}

fn polar_raw<F>(
    space: &Space,
    f: F,
    q: &QuadratureSpec,
    r_breaks: &[f64],
) -> Result<Estimate<Complex64>>
where
    F: Fn(&XPointPolar) -> Result<Complex64>,
{
    q.validate()?;
    let p = &space.params;
    p.require_abelian("polar integration")?;
    quad::adaptive(
        |r: f64| {
            let s = sphere_integral(
                p.m1,
                |w| {
                    f(&XPointPolar {
                        t: r,
                        omega: SmallVec::from_slice(w),
                    })
                },
                q,
            )?;
            Ok(s.value * r.sinh().powi(p.m1 as i32))
        },
        r_breaks,
        q.tol(),
        MAX_PIECES,
    )
}

/// `∫_X g(r(x)) dμ` for a radial integrand.
pub fn integrate_radial<F>(
    space: &Space,
    g: F,
    q: &QuadratureSpec,
    r_breaks: &[f64],
) -> Result<IntegrationResult>
where
    F: Fn(f64) -> Complex64,
{
    let cartan = space.cartan()?;
    q.validate()?;
    let m1 = space.params.m1 as i32;
    let est = quad::adaptive(
        |r: f64| Ok(g(r) * r.sinh().powi(m1)),
        r_breaks,
        q.tol(),
        MAX_PIECES,
    )?;
    Ok(IntegrationResult::scaled(est, cartan))
}

/// Radius of the reference bump `e^{-r²}` beyond which it is below `1e-21`.
const BUMP_REACH: f64 = 7.0;

/// The polar constant making polar and horospherical integrals of the reference bump agree.
pub fn calibrate_cartan(space: &Space, q: &QuadratureSpec) -> Result<f64> {
    calibrate_with_amplitude(space, q, 1.0)
}

fn calibrate_with_amplitude(space: &Space, q: &QuadratureSpec, amplitude: f64) -> Result<f64> {
    let p = &space.params;
    p.require_abelian("Cartan calibration")?;
    let q = q.with_tolerance(q.tail_tolerance.min(1e-12));
    let bump = |r: f64| amplitude * (-r * r).exp();
    let region = XRegion::ball(&vec![0.0; p.m1], 0.0, BUMP_REACH);
    let na = integrate_x_na(
        space,
        |x| {
            Complex64::new(
                bump(p.distance_from_origin(x).unwrap_or(f64::INFINITY)),
                0.0,
            )
        },
        &q,
        &region,
    )?;
    let polar = polar_raw(
        space,
        |x| Ok(Complex64::new(bump(x.t), 0.0)),
        &q,
        &[0.0, 1.0, 2.0, BUMP_REACH],
    )?;
    Ok(na.value.re / polar.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        let json = serde_json::to_string(&QuadratureSpec::default()).unwrap();
        assert!(json.contains("\"truncation_radius\":\"inf\""));
        assert_eq!(
            serde_json::from_str::<QuadratureSpec>(&json).unwrap(),
            QuadratureSpec::default()
        );
        let bad = QuadratureSpec {
            nodes_per_axis: 4,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let bad = QuadratureSpec {
            tail_tolerance: 1e-2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn boundary_mass_is_one() {
        let q = QuadratureSpec::default();
        for s in [Space::h2(), Space::h3()] {
            let m = integrate_km(&s, |_| c(1.0), &q).unwrap();
            assert!((m.value.re - 1.0).abs() < 1e-10, "{:?}", m);
        }
    }

    #[test]
    fn nbar_ball_measure_h2() {
        // {c²V⁴ ≤ 1} = {|V| ≤ 2}, of Lebesgue length 4
        let s = Space::h2();
        let q = QuadratureSpec::default();
        let f = |n: &NbarPoint| {
            if s.params.homog_norm(n) <= 1.0 {
                c(1.0)
            } else {
                c(0.0)
            }
        };
        let r = integrate_nbar_focused(
            &s,
            |n| Ok(f(n)),
            &q,
            &Focus::origin(&s).with_radius(2.0),
            0.0,
        )
        .unwrap();
        assert!((r.value.re - 4.0 / (2.0 * PI)).abs() < 1e-12);
        let z = integrate_nbar(&s, |_| c(0.0), &q).unwrap();
        assert_eq!(z.value, c(0.0));
    }

    #[test]
    fn weight_cancellation() {
        let s = Space::h2();
        let q = QuadratureSpec::default();
        let p = s.params;
        let f = |n: &NbarPoint| {
            if p.homog_norm(n) <= 1.0 {
                c((2.0 * p.rho * p.iwasawa_h(n)).exp())
            } else {
                c(0.0)
            }
        };
        let r = integrate_nbar_focused(
            &s,
            |n| Ok(f(n) * p.boundary_weight(n)),
            &q,
            &Focus::origin(&s).with_radius(2.0),
            0.0,
        )
        .unwrap();
        assert!((r.value.re - 4.0 / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn tensor_scheme_matches_adaptive() {
        let s = Space::h3();
        let q = QuadratureSpec::tensor(16, 1e-10);
        let m = integrate_km(&s, |_| c(1.0), &q).unwrap();
        assert!((m.value.re - 1.0).abs() < 1e-9, "{:?}", m);
    }

    #[test]
    fn product_slab() {
        // χ_{t∈[0,1]} χ_{|n̄|≤1} on H²: (∫₀¹ e^{t} dt) · κ · (4/2π)
        let s = Space::h2();
        let q = QuadratureSpec::default();
        let p = s.params;
        let r = integrate_x_na(
            &s,
            |x| {
                if p.homog_norm(&x.nbar) <= 1.0 {
                    c(1.0)
                } else {
                    c(0.0)
                }
            },
            &q,
            &XRegion::slab(0.0, 1.0).with_radius(2.0),
        );
        let want = (1f64.exp() - 1.0) * p.c.sqrt() * 4.0 / (2.0 * PI);
        assert!((r.unwrap().value.re - want).abs() < 1e-8);
    }

    #[test]
    fn polar_needs_calibration() {
        let s = Space::h2();
        let r = integrate_x_polar(&s, |_| c(1.0), &QuadratureSpec::default(), &[0.0, 1.0]);
        assert!(matches!(r, Err(Error::Uncalibrated)));
    }

    #[test]
    fn calibration_values() {
        let q = QuadratureSpec::default();
        let h2 = Space::h2().calibrated(&q).unwrap();
        assert!((h2.cartan().unwrap() - 1.0).abs() < 1e-9);
        for r in [1.0, 2.0, 5.0] {
            let v = integrate_x_polar(&h2, |_| c(1.0), &q, &[0.0, r]).unwrap();
            assert!((v.value.re - (f64::cosh(r) - 1.0)).abs() < 1e-8 * f64::cosh(r));
        }
        let again = calibrate_cartan(&h2, &q).unwrap();
        assert!((again - h2.cartan().unwrap()).abs() < 1e-12);
        let seven = calibrate_with_amplitude(&h2, &q, 7.0).unwrap();
        assert!((seven - h2.cartan().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn calibration_h3() {
        let q = QuadratureSpec::default();
        let h3 = Space::h3().calibrated(&q).unwrap();
        assert!(
            (h3.cartan().unwrap() - 0.5).abs() < 1e-8,
            "{}",
            h3.cartan().unwrap()
        );
    }
}
