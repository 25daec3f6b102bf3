//! Structure constants and geometry of a real rank-one symmetric space.
//!
//! Points of the nilpotent group `N̄ ≅ ℝ^{m1} × ℝ^{m2}` are written `(V, Z)`.
//! The space `X` is parametrised either in horospherical coordinates
//! `x = n̄ a_t · o` ([`XPointNA`]) or in geodesic polar coordinates
//! ([`XPointPolar`]). For `m2 = 0` the horospherical chart is the upper
//! half-space with `x = √c · V` and `y = e^{-t}`, and the hyperbolic metric reads
//! `(c |dV|² + dy²) / y²`.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};

pub type Coords = SmallVec<[f64; 3]>;

/// The rank-one structure constants every formula consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub m1: usize,
    pub m2: usize,
    pub rho: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub c: f64,
}

/// Builds the structure constants for root multiplicities `(m1, m2)`.
///
/// `c = 1 / (4 (m1 + 4 m2))` is the constant that makes the norm, the
/// Iwasawa projection and the Poisson kernel algebra consistent.
pub fn derive_params(m1: usize, m2: usize) -> Result<SpaceParams> {
    if m1 == 0 {
        return Err(Error::InvalidParams("m1 must be at least 1".into()));
    }
    let rho = (m1 + 2 * m2) as f64 / 2.0;
    Ok(SpaceParams {
        m1,
        m2,
        rho,
        q: 2.0 * rho,
        c: 1.0 / (4.0 * (m1 + 4 * m2) as f64),
    })
}

/// A point `(V, Z)` of `N̄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbarPoint {
    pub v: Coords,
    pub z: Coords,
}

impl NbarPoint {
    pub fn identity(p: &SpaceParams) -> Self {
        Self {
            v: SmallVec::from_elem(0.0, p.m1),
            z: SmallVec::from_elem(0.0, p.m2),
        }
    }

    pub fn new(v: &[f64], z: &[f64]) -> Self {
        Self {
            v: SmallVec::from_slice(v),
            z: SmallVec::from_slice(z),
        }
    }

    /// Point with `Z = 0`.
    pub fn from_v(v: &[f64]) -> Self {
        Self::new(v, &[])
    }

    pub fn v_norm_sq(&self) -> f64 {
        self.v.iter().map(|x| x * x).sum()
    }

    pub fn z_norm_sq(&self) -> f64 {
        self.z.iter().map(|x| x * x).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.v.iter().chain(self.z.iter()).all(|&x| x == 0.0)
    }

    fn check(&self, p: &SpaceParams) {
        debug_assert_eq!(self.v.len(), p.m1, "V has wrong dimension");
        debug_assert_eq!(self.z.len(), p.m2, "Z has wrong dimension");
    }
}

/// Horospherical coordinates `x = n̄ a_t · o`; the base point is `(e, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XPointNA {
    pub nbar: NbarPoint,
    pub t: f64,
}

impl XPointNA {
    pub fn new(nbar: NbarPoint, t: f64) -> Self {
        Self { nbar, t }
    }

    pub fn origin(p: &SpaceParams) -> Self {
        Self::new(NbarPoint::identity(p), 0.0)
    }

    /// Half-space height `y = e^{-t}`.
    pub fn height(&self) -> f64 {
        (-self.t).exp()
    }
}

/// Geodesic polar coordinates: distance `t` from `o` and a unit direction
/// `omega ∈ S^{m1}`. The last component of `omega` points along `a_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XPointPolar {
    pub t: f64,
    pub omega: Coords,
}

/// Spectral parameter `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParam {
    pub re: f64,
    pub im: f64,
}

impl SpectralParam {
    pub fn real(lambda: f64) -> Self {
        Self {
            re: lambda,
            im: 0.0,
        }
    }

    pub fn as_complex(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re, self.im)
    }

    /// Main-estimate operations need a nonzero real parameter.
    pub fn require_real_nonzero(&self) -> Result<f64> {
        if self.im != 0.0 || self.re == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "spectral parameter must be real and nonzero, got {}+{}i",
                self.re, self.im
            )));
        }
        Ok(self.re)
    }
}

impl SpaceParams {
    pub fn h2() -> Self {
        derive_params(1, 0).expect("valid")
    }

    pub fn h3() -> Self {
        derive_params(2, 0).expect("valid")
    }

    pub fn require_abelian(&self, what: &str) -> Result<()> {
        if self.m2 != 0 {
            return Err(Error::Unsupported(format!(
                "{what} needs the abelian case m2 = 0 (got m2 = {})",
                self.m2
            )));
        }
        Ok(())
    }

    /// Homogeneous norm `(c²|V|⁴ + 4c|Z|²)^{1/4}`.
    pub fn homog_norm(&self, n: &NbarPoint) -> f64 {
        n.check(self);
        let v2 = n.v_norm_sq();
        (self.c * self.c * v2 * v2 + 4.0 * self.c * n.z_norm_sq()).powf(0.25)
    }

    /// Dilation `δ_t(V, Z) = (e^t V, e^{2t} Z)`.
    pub fn dilate(&self, t: f64, n: &NbarPoint) -> NbarPoint {
        let s = t.exp();
        let s2 = (2.0 * t).exp();
        NbarPoint {
            v: n.v.iter().map(|x| s * x).collect(),
            z: n.z.iter().map(|x| s2 * x).collect(),
        }
    }

    pub fn nbar_mul(&self, a: &NbarPoint, b: &NbarPoint) -> Result<NbarPoint> {
        self.require_abelian("the N̄ group product")?;
        Ok(NbarPoint {
            v: a.v.iter().zip(&b.v).map(|(x, y)| x + y).collect(),
            z: SmallVec::new(),
        })
    }

    pub fn nbar_inv(&self, a: &NbarPoint) -> Result<NbarPoint> {
        self.require_abelian("the N̄ group inverse")?;
        Ok(NbarPoint {
            v: a.v.iter().map(|x| -x).collect(),
            z: SmallVec::new(),
        })
    }

    /// Iwasawa projection `H(n̄) = ½ ln[(1 + c|V|²)² + 4c|Z|²]`.
    pub fn iwasawa_h(&self, n: &NbarPoint) -> f64 {
        n.check(self);
        let a = self.c * n.v_norm_sq();
        let b = 4.0 * self.c * n.z_norm_sq();
        0.5 * (2.0 * a + a * a + b).ln_1p()
    }

    /// `e^{-2ρ H(n̄)}`, the density of the boundary measure in the `N̄` chart.
    pub fn boundary_weight(&self, n: &NbarPoint) -> f64 {
        (-2.0 * self.rho * self.iwasawa_h(n)).exp()
    }

    /// `A(x, b) = -H(δ_t(n̄⁻¹ m̄)) + H(m̄) + t` for `x = n̄ a_t · o` and `b = k(m̄)M`.
    pub fn boundary_a(&self, x: &XPointNA, b: &NbarPoint) -> Result<f64> {
        let rel = self.nbar_mul(&self.nbar_inv(&x.nbar)?, b)?;
        Ok(-self.iwasawa_h(&self.dilate(x.t, &rel)) + self.iwasawa_h(b) + x.t)
    }

    /// Half-space coordinate `x = √c V`.
    fn half_space_x(&self, n: &NbarPoint) -> Coords {
        let s = self.c.sqrt();
        n.v.iter().map(|v| s * v).collect()
    }

    /// Point of the boundary sphere `S^{m1}` corresponding to `k(n̄)M`.
    pub fn boundary_point(&self, n: &NbarPoint) -> Result<Coords> {
        self.require_abelian("the boundary sphere chart")?;
        let x = self.half_space_x(n);
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let d = 1.0 + r2;
        let mut omega: Coords = x.iter().map(|v| 2.0 * v / d).collect();
        omega.push((1.0 - r2) / d);
        Ok(omega)
    }

    /// Inverse of [`Self::boundary_point`]; `None` at the point at infinity.
    pub fn boundary_chart(&self, omega: &[f64]) -> Result<Option<NbarPoint>> {
        self.require_abelian("the boundary sphere chart")?;
        let (last, head) = omega.split_last().expect("nonempty direction");
        let head_sq: f64 = head.iter().map(|v| v * v).sum();
        // 1 + ω_n, computed without cancellation near the south pole
        let one_plus = if *last >= 0.0 {
            1.0 + last
        } else {
            head_sq / (1.0 - last)
        };
        if one_plus <= 0.0 {
            return Ok(None);
        }
        let s = self.c.sqrt();
        let v: Coords = head.iter().map(|w| w / one_plus / s).collect();
        Ok(Some(NbarPoint {
            v,
            z: SmallVec::new(),
        }))
    }

    /// Riemannian distance between two points (`m2 = 0`).
    pub fn distance(&self, a: &XPointNA, b: &XPointNA) -> Result<f64> {
        self.require_abelian("the distance formula")?;
        let ya = a.height();
        let yb = b.height();
        let dv: f64 = a
            .nbar
            .v
            .iter()
            .zip(&b.nbar.v)
            .map(|(p, q)| (p - q) * (p - q))
            .sum();
        let dy = ya - yb;
        let chord = (self.c * dv + dy * dy).sqrt();
        Ok(2.0 * (chord / (2.0 * (ya * yb).sqrt())).asinh())
    }

    pub fn distance_from_origin(&self, x: &XPointNA) -> Result<f64> {
        self.distance(&XPointNA::origin(self), x)
    }

    /// Converts geodesic polar coordinates to horospherical ones through the ball model.
    pub fn polar_to_na(&self, x: &XPointPolar) -> Result<XPointNA> {
        self.require_abelian("polar coordinates")?;
        if x.omega.len() != self.m1 + 1 {
            return Err(Error::InvalidArgument(
                "direction has wrong dimension".into(),
            ));
        }
        let r = x.t;
        let tau = (r / 2.0).tanh();
        let one_minus_tau = 2.0 / (r.exp() + 1.0);
        let (wn, head) = x.omega.split_last().expect("nonempty");
        let head_sq: f64 = head.iter().map(|v| v * v).sum();
        let one_plus_wn = if *wn >= 0.0 {
            1.0 + wn
        } else {
            head_sq / (1.0 - wn)
        };
        // |ξ'|² + (1 + ξ_n)² = (1 - τ)² + 2τ(1 + ω_n)
        let den = one_minus_tau * one_minus_tau + 2.0 * tau * one_plus_wn;
        let sech_half = 1.0 / (r / 2.0).cosh();
        let y = sech_half * sech_half / den;
        let s = self.c.sqrt();
        let v: Coords = head.iter().map(|w| 2.0 * tau * w / den / s).collect();
        Ok(XPointNA::new(
            NbarPoint {
                v,
                z: SmallVec::new(),
            },
            -y.ln(),
        ))
    }

    pub fn na_to_polar(&self, x: &XPointNA) -> Result<XPointPolar> {
        self.require_abelian("polar coordinates")?;
        let r = self.distance_from_origin(x)?;
        let y = x.height();
        let hx = self.half_space_x(&x.nbar);
        let x2: f64 = hx.iter().map(|v| v * v).sum();
        let den = x2 + (1.0 + y) * (1.0 + y);
        let mut xi: Coords = hx.iter().map(|v| 2.0 * v / den).collect();
        xi.push((1.0 - x2 - y * y) / den);
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let omega = if norm > 0.0 {
            xi.iter().map(|v| v / norm).collect()
        } else {
            let mut o: Coords = SmallVec::from_elem(0.0, self.m1);
            o.push(1.0);
            o
        };
        Ok(XPointPolar { t: r, omega })
    }
}

/// `Γ(k/2)` for a positive integer `k`.
pub(crate) fn gamma_half(k: usize) -> f64 {
    assert!(k > 0);
    let mut g = if k.is_multiple_of(2) {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let mut a = if k.is_multiple_of(2) { 1.0 } else { 0.5 };
    while 2.0 * a < k as f64 {
        g *= a;
        a += 1.0;
    }
    g
}

/// Surface area of the unit sphere `S^k ⊂ ℝ^{k+1}`.
pub(crate) fn sphere_area(k: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf((k + 1) as f64 / 2.0) / gamma_half(k + 1)
}

/// Volume of the unit ball in `ℝ^k`.
pub(crate) fn unit_ball_volume(k: usize) -> f64 {
    sphere_area(k - 1) / k as f64
}

/// The constant `γ` with `γ ∫ e^{-2ρH(n̄)} dV dZ = 1`.
///
/// Closed form for `m2 = 0`; a two-dimensional radial quadrature otherwise.
pub fn nbar_normalization(p: &SpaceParams) -> Result<f64> {
    if p.m2 == 0 {
        let m = p.m1;
        let total =
            p.c.powf(-(m as f64) / 2.0) * std::f64::consts::PI.powf(m as f64 / 2.0) * gamma_half(m)
                / gamma_half(2 * m);
        return Ok(1.0 / total);
    }
    let sv = sphere_area(p.m1 - 1);
    let sz = sphere_area(p.m2 - 1);
    let tol = Tolerance::relative(1e-13);
    let breaks = [0.0, 2.0, 10.0, 45.0];
    // (a, b) = (|V|, |Z|) = (sinh u, sinh w)
    let est = quad::adaptive(
        |u: f64| {
            let a = u.sinh();
            let inner = |w: f64| {
                let b = w.sinh();
                let base = (1.0 + p.c * a * a).powi(2) + 4.0 * p.c * b * b;
                base.powf(-p.rho) * b.powi(p.m2 as i32 - 1) * w.cosh()
            };
            let z = quad::adaptive_real(&inner, &breaks, tol, 2000)?.value;
            Ok(z * a.powi(p.m1 as i32 - 1) * u.cosh())
        },
        &breaks,
        tol,
        2000,
    )?;
    Ok(1.0 / (sv * sz * est.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derived_constants() {
        let p = derive_params(1, 0).unwrap();
        assert_eq!((p.rho, p.q, p.c), (0.5, 1.0, 0.25));
        let p = derive_params(2, 0).unwrap();
        assert_eq!((p.rho, p.q, p.c), (1.0, 2.0, 0.125));
        let p = derive_params(2, 1).unwrap();
        assert_eq!((p.rho, p.q), (2.0, 4.0));
        assert!((p.c - 1.0 / 24.0).abs() < 1e-16);
        assert!(matches!(derive_params(0, 1), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn norm_examples() {
        let p = SpaceParams::h2();
        assert_eq!(p.homog_norm(&NbarPoint::identity(&p)), 0.0);
        assert!((p.homog_norm(&NbarPoint::from_v(&[2.0])) - 1.0).abs() < 1e-15);
        let n = NbarPoint::from_v(&[-0.7]);
        let d = p.dilate(2f64.ln(), &n);
        assert!((p.homog_norm(&d) - 2.0 * p.homog_norm(&n)).abs() < 1e-15);
    }

    #[test]
    fn dilation_examples() {
        let p = SpaceParams::h2();
        let n = NbarPoint::from_v(&[1.0]);
        assert_eq!(p.dilate(0.0, &n), n);
        assert!((p.dilate(1.0, &n).v[0] - std::f64::consts::E).abs() < 1e-15);
        let q = derive_params(2, 1).unwrap();
        let m = NbarPoint::new(&[0.3, -1.0], &[2.0]);
        let a = q.dilate(0.4, &q.dilate(-1.1, &m));
        let b = q.dilate(-0.7, &m);
        for (x, y) in a.v.iter().chain(&a.z).zip(b.v.iter().chain(&b.z)) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn group_law() {
        let p = SpaceParams::h2();
        let a = NbarPoint::from_v(&[1.0]);
        let b = NbarPoint::from_v(&[2.0]);
        assert_eq!(p.nbar_mul(&a, &b).unwrap(), NbarPoint::from_v(&[3.0]));
        assert!(p
            .nbar_mul(&a, &p.nbar_inv(&a).unwrap())
            .unwrap()
            .is_identity());
        let ab = p.dilate(0.8, &p.nbar_mul(&a, &b).unwrap());
        let ab2 = p.nbar_mul(&p.dilate(0.8, &a), &p.dilate(0.8, &b)).unwrap();
        assert!((ab.v[0] - ab2.v[0]).abs() < 1e-14);
        let q = derive_params(2, 1).unwrap();
        let m = NbarPoint::new(&[0.0, 0.0], &[1.0]);
        assert!(matches!(q.nbar_mul(&m, &m), Err(Error::Unsupported(_))));
    }

    #[test]
    fn iwasawa_examples() {
        let p = SpaceParams::h2();
        assert_eq!(p.iwasawa_h(&NbarPoint::identity(&p)), 0.0);
        assert!((p.iwasawa_h(&NbarPoint::from_v(&[2.0])) - 2f64.ln()).abs() < 1e-15);
        let p = SpaceParams::h3();
        let s = 8f64.sqrt() / 2f64.sqrt();
        let n = NbarPoint::from_v(&[s, s]);
        assert!((n.v_norm_sq() - 8.0).abs() < 1e-12);
        assert!((p.iwasawa_h(&n) - 2f64.ln()).abs() < 1e-14);
    }

    /// QR oracle in SL(2,ℝ): [[1,0],[x,1]] = k·diag(e^s, e^-s)·n with e^s the norm of
    /// the first column, and one unit of t moves the half-plane height by e^{-t}, i.e. 2s.
    #[test]
    fn iwasawa_matches_sl2_qr() {
        let p = SpaceParams::h2();
        for &vv in &[0.1, 0.5, 2.0, 7.5, -3.0] {
            let w = p.c.sqrt() * vv;
            let col_norm = (1.0 + w * w).sqrt();
            let s = col_norm.ln();
            let h = 2.0 * s;
            assert!((p.iwasawa_h(&NbarPoint::from_v(&[vv])) - h).abs() < 1e-14);
        }
    }

    #[test]
    fn normalization_closed_forms() {
        assert!((nbar_normalization(&SpaceParams::h2()).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((nbar_normalization(&SpaceParams::h3()).unwrap() - 1.0 / (8.0 * PI)).abs() < 1e-15);
    }

    /// m1 = 2, m2 = 1: integrate over Z first,
    /// ∫ℝ (A² + 4c z²)^{-2} dz = π / (4 √c A³), then
    /// ∫ℝ² (1 + c|V|²)^{-3} dV = π / (2c), so the total is π² / (8 c^{3/2}).
    #[test]
    fn normalization_quadrature_fallback() {
        let p = derive_params(2, 1).unwrap();
        let expected = 8.0 * p.c.powf(1.5) / (PI * PI);
        let got = nbar_normalization(&p).unwrap();
        assert!(
            (got - expected).abs() < 1e-10 * expected,
            "{got} vs {expected}"
        );
    }

    #[test]
    fn sphere_chart_roundtrip() {
        for p in [SpaceParams::h2(), SpaceParams::h3()] {
            let n = if p.m1 == 1 {
                NbarPoint::from_v(&[3.7])
            } else {
                NbarPoint::from_v(&[-1.2, 0.4])
            };
            let w = p.boundary_point(&n).unwrap();
            assert!((w.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
            let back = p.boundary_chart(&w).unwrap().unwrap();
            for (a, b) in back.v.iter().zip(&n.v) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn distance_checks() {
        let p = SpaceParams::h2();
        let o = XPointNA::origin(&p);
        let x = XPointNA::new(NbarPoint::from_v(&[0.0]), 2.5);
        assert!((p.distance(&o, &x).unwrap() - 2.5).abs() < 1e-14);
        // hyperboloid model: the half-plane point (u, y) lifts to
        // ((u² + y² + 1)/(2y), (u² + y² - 1)/(2y), u/y) and cosh d = -<a, b>
        let lift = |u: f64, y: f64| {
            [
                (u * u + y * y + 1.0) / (2.0 * y),
                (u * u + y * y - 1.0) / (2.0 * y),
                u / y,
            ]
        };
        let a = XPointNA::new(NbarPoint::from_v(&[1.3]), -0.4);
        let b = XPointNA::new(NbarPoint::from_v(&[-2.1]), 1.1);
        let la = lift(0.5 * 1.3, a.height());
        let lb = lift(-0.5 * 2.1, b.height());
        let cosh_d = la[0] * lb[0] - la[1] * lb[1] - la[2] * lb[2];
        assert!((p.distance(&a, &b).unwrap() - cosh_d.acosh()).abs() < 1e-12);
    }

    #[test]
    fn polar_roundtrip() {
        for p in [SpaceParams::h2(), SpaceParams::h3()] {
            for &(r, ang) in &[(0.3, 0.2), (2.0, 2.9), (7.0, -1.0), (25.0, 3.1)] {
                let omega: Coords = if p.m1 == 1 {
                    SmallVec::from_slice(&[f64::sin(ang), f64::cos(ang)])
                } else {
                    SmallVec::from_slice(&[f64::sin(ang) * 0.6, f64::sin(ang) * 0.8, f64::cos(ang)])
                };
                let x = p
                    .polar_to_na(&XPointPolar {
                        t: r,
                        omega: omega.clone(),
                    })
                    .unwrap();
                assert!((p.distance_from_origin(&x).unwrap() - r).abs() < 1e-9 * r.max(1.0));
                let back = p.na_to_polar(&x).unwrap();
                for (a, b) in back.omega.iter().zip(&omega) {
                    assert!((a - b).abs() < 1e-8, "{a} {b} at r={r}");
                }
            }
        }
    }

    #[test]
    fn polar_axis_is_a_t() {
        let p = SpaceParams::h2();
        let x = p
            .polar_to_na(&XPointPolar {
                t: 1.7,
                omega: SmallVec::from_slice(&[0.0, 1.0]),
            })
            .unwrap();
        assert!((x.t - 1.7).abs() < 1e-14 && x.nbar.v[0].abs() < 1e-15);
    }
}
