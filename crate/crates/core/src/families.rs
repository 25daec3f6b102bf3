//! Seeded test families: boundary data, `N̄` test functions and bumps on `X`.
//!
//! Every family is a pure function of its seed (ChaCha8 stream), so reports that
//! record the seed are reproducible.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::Space;
use crate::model::{NbarPoint, SpectralParam, XPointNA};
use crate::transforms::{trig_boundary, BoundaryFunction, RadialFunction, XFunction};

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn unit_complex(r: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

/// A trigonometric polynomial `Σ a_k e^{ikθ}` on the circle boundary of `H²`.
#[derive(Debug, Clone)]
pub struct TrigSample {
    pub coeffs: Vec<(i64, Complex64)>,
    pub boundary: BoundaryFunction,
}

impl TrigSample {
    /// `‖F‖_{L²(K/M)}` by Parseval.
    pub fn norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.1.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_degree(&self) -> usize {
        self.coeffs
            .iter()
            .map(|c| c.0.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Coefficients for `|k| ≤ degree` with amplitude decaying like `1/(1+|k|)`.
pub fn trig_coefficients(seed: u64, index: u64, degree: usize) -> Vec<(i64, Complex64)> {
    let mut r = rng(seed, index);
    let d = degree as i64;
    (-d..=d)
        .map(|k| (k, unit_complex(&mut r) / (1.0 + k.abs() as f64)))
        .collect()
}

pub fn trig_family(
    space: &Space,
    lambda: SpectralParam,
    seed: u64,
    count: usize,
    degree: usize,
) -> Result<Vec<TrigSample>> {
    if space.params.m1 != 1 || space.params.m2 != 0 {
        return Err(Error::Unsupported(
            "trigonometric boundary data live on H²".into(),
        ));
    }
    Ok((0..count as u64)
        .map(|i| {
            let coeffs = trig_coefficients(seed, i, degree);
            TrigSample {
                boundary: trig_boundary(space, lambda, coeffs.clone()),
                coeffs,
            }
        })
        .collect())
}

/// `F(ω) = a + b·ω + e ω₀ω₁` on the sphere boundary of `H³`, with its `L²(K/M)` norm.
pub fn sphere_family(
    space: &Space,
    lambda: SpectralParam,
    seed: u64,
    count: usize,
) -> Result<Vec<(BoundaryFunction, f64)>> {
    if space.params.m1 != 2 || space.params.m2 != 0 {
        return Err(Error::Unsupported(
            "sphere polynomials are built for H³".into(),
        ));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count as u64 {
        let mut r = rng(seed, 1000 + i);
        let a = unit_complex(&mut r);
        let b = [
            unit_complex(&mut r),
            unit_complex(&mut r),
            unit_complex(&mut r),
        ];
        let e = unit_complex(&mut r);
        // normalized sphere moments: ⟨ω_i²⟩ = 1/3, ⟨ω₀²ω₁²⟩ = 1/15
        let norm = (a.norm_sqr()
            + b.iter().map(|z| z.norm_sqr()).sum::<f64>() / 3.0
            + e.norm_sqr() / 15.0)
            .sqrt();
        let p = space.params;
        let f = BoundaryFunction::from_chart(
            space,
            lambda,
            Arc::new(move |n: &NbarPoint| {
                let w = p.boundary_point(n)?;
                Ok(a + b[0] * w[0] + b[1] * w[1] + b[2] * w[2] + e * w[0] * w[1])
            }),
        );
        out.push((f, norm));
    }
    Ok(out)
}

/// `ψ(V) = exp(-|V - v₀|²/(2σ²)) e^{iβ·V}` on `N̄` (`m2 = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPsi {
    pub center: Vec<f64>,
    pub width: f64,
    pub frequency: Vec<f64>,
}

impl GaussianPsi {
    pub fn eval(&self, n: &NbarPoint) -> Complex64 {
        let mut d2 = 0.0;
        let mut phase = 0.0;
        for ((v, c), b) in n.v.iter().zip(&self.center).zip(&self.frequency) {
            d2 += (v - c) * (v - c);
            phase += b * v;
        }
        Complex64::from_polar((-0.5 * d2 / (self.width * self.width)).exp(), phase)
    }

    /// `‖ψ‖_{L²(N̄)} = (γ (σ√π)^{m1})^{1/2}`.
    pub fn norm(&self, space: &Space) -> f64 {
        (space.gamma * (self.width * std::f64::consts::PI.sqrt()).powi(self.center.len() as i32))
            .sqrt()
    }

    pub fn boundary(&self, lambda: SpectralParam) -> BoundaryFunction {
        let g = self.clone();
        BoundaryFunction::from_psi(lambda, Arc::new(move |n| Ok(g.eval(n))))
            .with_focus(&self.center, self.width)
    }
}

pub fn gaussian_psi_family(space: &Space, seed: u64, count: usize) -> Result<Vec<GaussianPsi>> {
    space
        .params
        .require_abelian("Gaussian test functions on N̄")?;
    let m1 = space.params.m1;
    let mut r = rng(seed, 2000);
    Ok((0..count)
        .map(|_| GaussianPsi {
            center: (0..m1).map(|_| r.gen_range(-3.0..3.0)).collect(),
            width: r.gen_range(0.3..2.0),
            frequency: (0..m1).map(|_| r.gen_range(-2.0..2.0)).collect(),
        })
        .collect())
}

/// A Gaussian bump `A exp(-d(x, x₀)²/σ²)` on `X`, cut at `6σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center_v: Vec<f64>,
    pub center_t: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn support(&self) -> f64 {
        6.0 * self.width
    }

    pub fn profile(&self) -> RadialFunction {
        let (a, w) = (self.amplitude, self.width);
        RadialFunction::from_fn(move |r| a * (-(r * r) / (w * w)).exp())
    }

    pub fn center(&self) -> XPointNA {
        XPointNA::new(NbarPoint::from_v(&self.center_v), self.center_t)
    }

    pub fn is_radial(&self) -> bool {
        self.center_t == 0.0 && self.center_v.iter().all(|v| *v == 0.0)
    }

    pub fn function(&self, space: &Space) -> XFunction {
        XFunction::translated(space, self.profile(), self.center(), self.support())
    }
}

/// `count` bumps; the first half centred at `o`, the rest off-centre.
pub fn bump_family(space: &Space, seed: u64, count: usize) -> Result<Vec<Bump>> {
    space.params.require_abelian("bumps on X")?;
    let m1 = space.params.m1;
    let mut r = rng(seed, 3000);
    Ok((0..count)
        .map(|i| {
            let radial = i < count.div_ceil(2);
            let width = r.gen_range(0.25..0.6);
            let amplitude = r.gen_range(0.5..2.0);
            let (center_v, center_t) = if radial {
                (vec![0.0; m1], 0.0)
            } else {
                (
                    (0..m1).map(|_| r.gen_range(-1.5..1.5)).collect(),
                    r.gen_range(-1.0..1.0),
                )
            };
            Bump {
                center_v,
                center_t,
                width,
                amplitude,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::QuadratureSpec;

    #[test]
    fn families_are_deterministic() {
        let s = Space::h2();
        let l = SpectralParam::real(1.0);
        let a = trig_family(&s, l, 7, 3, 3).unwrap();
        let b = trig_family(&s, l, 7, 3, 3).unwrap();
        assert_eq!(a[2].coeffs, b[2].coeffs);
        assert_ne!(a[0].coeffs, a[1].coeffs);
        assert_eq!(a[0].max_degree(), 3);
        assert_eq!(
            gaussian_psi_family(&s, 1, 4).unwrap(),
            gaussian_psi_family(&s, 1, 4).unwrap()
        );
        assert_eq!(
            bump_family(&s, 1, 4).unwrap(),
            bump_family(&s, 1, 4).unwrap()
        );
        assert!(trig_family(&Space::h3(), l, 7, 1, 1).is_err());
    }

    #[test]
    fn trig_norm_matches_quadrature() {
        let s = Space::h2();
        let f = &trig_family(&s, SpectralParam::real(1.0), 11, 1, 3).unwrap()[0];
        let q = QuadratureSpec::default();
        let direct = f.boundary.l2_boundary(&s, &q).unwrap();
        assert!((direct - f.norm()).abs() < 1e-8 * f.norm());
    }

    #[test]
    fn sphere_norm_matches_quadrature() {
        let s = Space::h3();
        let q = QuadratureSpec::default().with_tolerance(1e-10);
        let (f, norm) = &sphere_family(&s, SpectralParam::real(1.0), 5, 1).unwrap()[0];
        let direct = f.l2_boundary(&s, &q).unwrap();
        assert!((direct - norm).abs() < 1e-6 * norm, "{direct} {norm}");
    }

    #[test]
    fn gaussian_norm_matches_quadrature() {
        let s = Space::h2();
        let q = QuadratureSpec::default();
        for g in gaussian_psi_family(&s, 3, 3).unwrap() {
            let b = g.boundary(SpectralParam::real(1.0));
            let direct = b.l2_psi(&s, &q).unwrap();
            assert!((direct - g.norm(&s)).abs() < 1e-8 * direct);
        }
    }

    #[test]
    fn bump_halves() {
        let b = bump_family(&Space::h2(), 9, 5).unwrap();
        assert_eq!(b.iter().filter(|x| x.is_radial()).count(), 3);
        assert!(b[0].function(&Space::h2()).radial_profile().is_some());
        assert!(b[4].function(&Space::h2()).radial_profile().is_none());
    }
}
