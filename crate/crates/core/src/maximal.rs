//! Maximal functions on `N̄` (`m2 = 0`): the Hardy–Littlewood maximal operator over
//! homogeneous balls, truncations of the oscillatory kernel `|n̄|^{-(Q+2iλ)}`, their
//! maximal truncation, the Poisson kernel comparison and the pointwise domination of
//! Poisson transforms.
//!
//! Integrals over `N̄` are written in polar form in `V`: a sphere mean `A(R)` of the
//! integrand around `n̄` followed by a radial integral. For `m1 = 1` the sphere mean is
//! the even part of `ψ` about `n̄`, so odd parts cancel exactly.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::try_par_map;
use crate::measure::{QuadratureSpec, Space};
use crate::model::{self, NbarPoint, SpectralParam, XPointNA};
use crate::quad::{self, Tolerance};
use crate::transforms::{poisson_psi, BoundaryFunction};

const MAX_PIECES: usize = 400;

fn cx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Relative target from the quadrature settings; the absolute floor stops refinement in the far tails
/// of unit-size test functions.
fn tol(q: &QuadratureSpec) -> Tolerance {
    Tolerance::new(1e-15, q.tail_tolerance.clamp(1e-12, 1e-8))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedKernelSpec {
    pub lambda: f64,
    pub eta: f64,
}

impl TruncatedKernelSpec {
    pub fn new(lambda: f64, eta: f64) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidArgument(
                "truncated kernels need λ ≠ 0".into(),
            ));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "truncation radius must be positive, got {eta}"
            )));
        }
        Ok(Self { lambda, eta })
    }
}

/// `K_λ(n̄) = |n̄|^{-(Q+2iλ)}`.
pub fn kernel(space: &Space, lambda: f64, n: &NbarPoint) -> Complex64 {
    let p = space.params;
    let r = p.homog_norm(n);
    Complex64::new(-p.q, -2.0 * lambda).scale(r.ln()).exp()
}

/// `per_decade` log-spaced points from `lo` to `hi`, both included.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).round().max(1.0) as usize;
    (0..=n)
        .map(|i| lo * (hi / lo).powf(i as f64 / n as f64))
        .collect()
}

fn require_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "{what} grid must be positive and increasing"
        )));
    }
    Ok(())
}

/// Normalized mean of `g` over the sphere `|V - V(n̄)| = r`.
fn sphere_mean<G>(m1: usize, g: &G, n: &NbarPoint, r: f64, q: &QuadratureSpec) -> Result<Complex64>
where
    G: Fn(&NbarPoint) -> Result<Complex64>,
{
    let v = &n.v;
    match m1 {
        1 => Ok((g(&NbarPoint::from_v(&[v[0] + r]))? + g(&NbarPoint::from_v(&[v[0] - r]))?) * 0.5),
        2 => {
            let est = quad::adaptive(
                |th: f64| {
                    g(&NbarPoint::from_v(&[
                        v[0] + r * th.cos(),
                        v[1] + r * th.sin(),
                    ]))
                },
                &[0.0, 0.5 * PI, PI, 1.5 * PI, 2.0 * PI],
                tol(q),
                MAX_PIECES,
            )?;
            Ok(est.value / (2.0 * PI))
        }
        _ => Err(Error::Unsupported(format!("sphere means for m1 = {m1}"))),
    }
}

fn check_space(space: &Space) -> Result<usize> {
    space.params.require_abelian("maximal operators on N̄")?;
    let m1 = space.params.m1;
    if m1 > 2 {
        return Err(Error::Unsupported(format!(
            "maximal operators for m1 = {m1}"
        )));
    }
    Ok(m1)
}

/// `M₀ψ(n̄) = max_{r ∈ r_grid} |B(r)|⁻¹ ∫_{B(r)} |ψ(n̄ m̄)| dm̄`, `B(r) = {|m̄| ≤ r}`.
pub fn hl_maximal<P>(
    space: &Space,
    psi: &P,
    n: &NbarPoint,
    r_grid: &[f64],
    q: &QuadratureSpec,
) -> Result<f64>
where
    P: Fn(&NbarPoint) -> Result<Complex64>,
{
    let m1 = check_space(space)?;
    require_grid(r_grid, "ball radius")?;
    let sqrt_c = space.params.c.sqrt();
    let area = model::sphere_area(m1 - 1);
    let ball = model::unit_ball_volume(m1);
    let abs = |m: &NbarPoint| psi(m).map(|v| cx(v.norm()));
    let shell = |a: f64, b: f64| -> Result<f64> {
        let est = quad::adaptive(
            |rr: f64| Ok(sphere_mean(m1, &abs, n, rr, q)? * (area * rr.powi(m1 as i32 - 1))),
            &[a, b],
            tol(q),
            MAX_PIECES,
        )?;
        Ok(est.value.re)
    };
    let mut acc = 0.0;
    let mut prev = 0.0;
    let mut best = 0.0f64;
    for &r in r_grid {
        let rv = r / sqrt_c;
        acc += shell(prev, rv)?;
        prev = rv;
        best = best.max(acc / (ball * rv.powi(m1 as i32)));
    }
    Ok(best)
}

/// `T_η ψ(n̄)` for every `η` of an increasing grid, accumulated from the outside in.
pub fn t_eta_profile<P>(
    space: &Space,
    psi: &P,
    lambda: f64,
    n: &NbarPoint,
    eta_grid: &[f64],
    q: &QuadratureSpec,
) -> Result<Vec<Complex64>>
where
    P: Fn(&NbarPoint) -> Result<Complex64>,
{
    let m1 = check_space(space)?;
    TruncatedKernelSpec::new(lambda, eta_grid.first().copied().unwrap_or(1.0))?;
    require_grid(eta_grid, "truncation")?;
    let p = space.params;
    let sqrt_c = p.c.sqrt();
    let i2l = Complex64::new(0.0, 2.0 * lambda);
    // γ |S^{m1-1}| c^{-(m1/2 + iλ)}
    let pref = Complex64::new(-(m1 as f64) / 2.0, -lambda)
        .scale(p.c.ln())
        .exp()
        * (space.gamma * model::sphere_area(m1 - 1));
    let centre = psi(n)?;
    let a = |r: f64| sphere_mean(m1, psi, n, r, q);

    let r_last = eta_grid[eta_grid.len() - 1] / sqrt_c;
    // ∫_{R}^∞ A(R') R'^{-1-2iλ} dR' with R' = R/w
    let tail = quad::adaptive(
        |w: f64| {
            let rr = r_last / w;
            Ok(a(rr)? * (-i2l * rr.ln()).exp() / w)
        },
        &[0.0, 1e-3, 1e-2, 0.1, 0.3, 1.0],
        tol(q),
        MAX_PIECES,
    )?
    .value;

    let mut values = vec![cx(0.0); eta_grid.len()];
    let mut acc = tail;
    values[eta_grid.len() - 1] = acc;
    for j in (0..eta_grid.len() - 1).rev() {
        let (lo, hi) = (eta_grid[j] / sqrt_c, eta_grid[j + 1] / sqrt_c);
        // subtracting ψ(n̄) keeps the integrand small as R → 0
        let panel = quad::adaptive(
            |u: f64| Ok((a(u.exp())? - centre) * (-i2l * u).exp()),
            &[lo.ln(), hi.ln()],
            tol(q),
            MAX_PIECES,
        )?
        .value;
        let exact = centre * ((-i2l * hi.ln()).exp() - (-i2l * lo.ln()).exp()) / (-i2l);
        acc += panel + exact;
        values[j] = acc;
    }
    Ok(values.into_iter().map(|v| v * pref).collect())
}

/// `T_η ψ(n̄) = ∫_{|n̄₁| ≥ η} ψ(n̄ n̄₁) |n̄₁|^{-(Q+2iλ)} dn̄₁`.
pub fn t_eta<P>(
    space: &Space,
    psi: &P,
    spec: TruncatedKernelSpec,
    n: &NbarPoint,
    q: &QuadratureSpec,
) -> Result<Complex64>
where
    P: Fn(&NbarPoint) -> Result<Complex64>,
{
    Ok(t_eta_profile(space, psi, spec.lambda, n, &[spec.eta], q)?[0])
}

/// `T*ψ(n̄) = max_{η ∈ grid} |T_η ψ(n̄)|`.
pub fn t_star<P>(
    space: &Space,
    psi: &P,
    lambda: f64,
    n: &NbarPoint,
    eta_grid: &[f64],
    q: &QuadratureSpec,
) -> Result<f64>
where
    P: Fn(&NbarPoint) -> Result<Complex64>,
{
    Ok(t_eta_profile(space, psi, lambda, n, eta_grid, q)?
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max))
}

/// `(lhs, rhs)` of the comparison between the Poisson kernel at height `t` and `K_λ`.
pub fn kernel_compare(space: &Space, lambda: f64, t: f64, m: &NbarPoint) -> Result<(f64, f64)> {
    let p = space.params;
    p.require_abelian("the kernel comparison")?;
    let nm = p.homog_norm(m);
    if nm <= (-t).exp() {
        return Err(Error::Domain(format!(
            "|m| = {nm} must exceed e^-t = {}",
            (-t).exp()
        )));
    }
    let e2 = (-2.0 * t).exp();
    let n4 = nm.powi(4);
    // B = |m|⁴ (1 + δ); lhs = |m|^{-Q} |(1 + δ)^{-s/2} - 1|
    let delta = (e2 * e2 + 2.0 * p.c * e2 * m.v_norm_sq()) / n4;
    let s = Complex64::new(p.rho, lambda);
    let z = -s * 0.5 * delta.ln_1p();
    let lhs = nm.powf(-p.q) * expm1(z).norm();
    let rhs = (-t).exp() / nm.powf(p.q + 1.0);
    Ok((lhs, rhs))
}

fn expm1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0))))
    } else {
        z.exp() - 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSweep {
    pub sup_ratio: f64,
    pub argmax: (f64, f64),
    /// Ratio at `|m| = 10` and `|m| = 10³`, at the last sweep height.
    pub ratio_at_10: f64,
    pub ratio_at_1000: f64,
}

/// `sup lhs/rhs` over heights `t_values` and `|m|` log-spaced in `(e^{-t}, m_max]` (`m1 = 1`).
pub fn kernel_sweep(
    space: &Space,
    lambda: f64,
    t_values: &[f64],
    per_decade: usize,
    m_max: f64,
) -> Result<KernelSweep> {
    if space.params.m1 != 1 {
        return Err(Error::Unsupported(
            "the kernel sweep uses m1 = 1 points".into(),
        ));
    }
    let sqrt_c = space.params.c.sqrt();
    let ratio = |t: f64, nm: f64| -> Result<f64> {
        let (l, r) = kernel_compare(space, lambda, t, &NbarPoint::from_v(&[nm / sqrt_c]))?;
        Ok(l / r)
    };
    let mut best = (0.0, (0.0, 0.0));
    for &t in t_values {
        let lo = (-t).exp() * (1.0 + 1e-9);
        for nm in log_grid(lo, m_max, per_decade) {
            let v = ratio(t, nm)?;
            if v > best.0 {
                best = (v, (t, nm));
            }
        }
    }
    let t_last = *t_values
        .last()
        .ok_or_else(|| Error::InvalidArgument("empty height list".into()))?;
    Ok(KernelSweep {
        sup_ratio: best.0,
        argmax: best.1,
        ratio_at_10: ratio(t_last, 10.0)?,
        ratio_at_1000: ratio(t_last, 1e3)?,
    })
}

/// Sample points `(V, t)` for the domination sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationGrid {
    pub v_values: Vec<f64>,
    pub t_values: Vec<f64>,
    /// Points per decade of the `r` and `η` grids.
    pub per_decade: usize,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64)
        .collect()
}

impl DominationGrid {
    pub fn uniform(
        v_max: f64,
        nv: usize,
        t_lo: f64,
        t_hi: f64,
        nt: usize,
        per_decade: usize,
    ) -> Self {
        Self {
            v_values: linspace(-v_max, v_max, nv),
            t_values: linspace(t_lo, t_hi, nt),
            per_decade,
        }
    }

    /// Midpoints inserted on both axes; the maximal-function grids doubled.
    pub fn refined(&self) -> Self {
        let mid = |xs: &[f64]| {
            let mut out = Vec::with_capacity(2 * xs.len());
            for w in xs.windows(2) {
                out.extend([w[0], 0.5 * (w[0] + w[1])]);
            }
            out.extend(xs.last());
            out
        };
        Self {
            v_values: mid(&self.v_values),
            t_values: mid(&self.t_values),
            per_decade: 2 * self.per_decade,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationResult {
    pub c_dom: f64,
    pub argmax: (f64, f64),
    /// `(V, M₀ψ, T*ψ)` per sampled `V`.
    pub maximal: Vec<(f64, f64, f64)>,
}

/// `max |u(n̄ a_t)| e^{ρt} / (M₀ψ(n̄) + T*ψ(n̄) + 1e-12)` over the grid (`m1 = 1`).
pub fn domination_with<P, U>(
    space: &Space,
    psi: &P,
    u: &U,
    lambda: f64,
    grid: &DominationGrid,
    q: &QuadratureSpec,
) -> Result<DominationResult>
where
    P: Fn(&NbarPoint) -> Result<Complex64> + Sync,
    U: Fn(&XPointNA) -> Result<Complex64> + Sync,
{
    if space.params.m1 != 1 || space.params.m2 != 0 {
        return Err(Error::Unsupported("the domination sweep runs on H²".into()));
    }
    let rho = space.params.rho;
    let r_grid = log_grid(1e-3, 1e2, grid.per_decade);
    let maximal = try_par_map(&grid.v_values, |&v| -> Result<(f64, f64, f64)> {
        let n = NbarPoint::from_v(&[v]);
        Ok((
            v,
            hl_maximal(space, psi, &n, &r_grid, q)?,
            t_star(space, psi, lambda, &n, &r_grid, q)?,
        ))
    })?;
    let mut best = (0.0, (0.0, 0.0));
    for &(v, m0, ts) in &maximal {
        let n = NbarPoint::from_v(&[v]);
        let vals = try_par_map(&grid.t_values, |&t| {
            u(&XPointNA::new(n.clone(), t)).map(|z| z.norm() * (rho * t).exp())
        })?;
        for (&t, val) in grid.t_values.iter().zip(vals) {
            let ratio = val / (m0 + ts + 1e-12);
            if ratio > best.0 {
                best = (ratio, (v, t));
            }
        }
    }
    Ok(DominationResult {
        c_dom: best.0,
        argmax: best.1,
        maximal,
    })
}

/// [`domination_with`] for `u = P_λF` evaluated through the `N̄` Poisson kernel.
pub fn domination_check(
    space: &Space,
    b: &BoundaryFunction,
    lambda: SpectralParam,
    grid: &DominationGrid,
    q: &QuadratureSpec,
) -> Result<DominationResult> {
    let l = lambda.require_real_nonzero()?;
    domination_with(
        space,
        &|n: &NbarPoint| b.psi(n),
        &|x: &XPointNA| poisson_psi(space, b, lambda, x, q),
        l,
        grid,
        q,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn gauss(n: &NbarPoint) -> Result<Complex64> {
        let v = n.v[0];
        Ok(Complex64::from_polar(
            (-(v - 0.5) * (v - 0.5)).exp(),
            0.7 * v,
        ))
    }

    #[test]
    fn spec_validation() {
        assert!(TruncatedKernelSpec::new(0.0, 1.0).is_err());
        assert!(TruncatedKernelSpec::new(1.0, 0.0).is_err());
        assert!(TruncatedKernelSpec::new(1.0, 2.0).is_ok());
        assert_eq!(log_grid(1e-3, 1e2, 64).len(), 321);
    }

    #[test]
    fn maximal_of_constant_and_indicator() {
        let s = Space::h2();
        let grid = log_grid(1e-2, 10.0, 16);
        let one = |_: &NbarPoint| Ok(cx(1.0));
        let m = hl_maximal(&s, &one, &NbarPoint::from_v(&[3.0]), &grid, &q()).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        // B(1) = {|V| ≤ 2} on H²
        let ind = |n: &NbarPoint| Ok(cx(if n.v[0].abs() <= 2.0 { 1.0 } else { 0.0 }));
        let m = hl_maximal(&s, &ind, &NbarPoint::from_v(&[0.0]), &grid, &q()).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        let h3 = Space::h3();
        let m = hl_maximal(
            &h3,
            &one,
            &NbarPoint::from_v(&[0.3, -1.0]),
            &log_grid(0.1, 10.0, 4),
            &q(),
        )
        .unwrap();
        assert!((m - 1.0).abs() < 1e-10);
    }

    #[test]
    fn maximal_dominates_value() {
        let s = Space::h2();
        let grid = log_grid(1e-4, 1e2, 64);
        for v in [-1.0, 0.5, 2.0] {
            let n = NbarPoint::from_v(&[v]);
            let m = hl_maximal(&s, &gauss, &n, &grid, &q()).unwrap();
            assert!(m >= gauss(&n).unwrap().norm() * 0.99);
        }
    }

    #[test]
    fn t_eta_zero_and_odd() {
        let s = Space::h2();
        let zero = |_: &NbarPoint| Ok(cx(0.0));
        let spec = TruncatedKernelSpec::new(1.0, 0.5).unwrap();
        let o = NbarPoint::from_v(&[0.0]);
        assert_eq!(t_eta(&s, &zero, spec, &o, &q()).unwrap(), cx(0.0));
        assert_eq!(
            t_star(&s, &zero, 1.0, &o, &log_grid(1e-3, 1e2, 8), &q()).unwrap(),
            0.0
        );
        let odd = |n: &NbarPoint| Ok(cx(n.v[0] * (-n.v[0] * n.v[0]).exp()));
        assert!(t_eta(&s, &odd, spec, &o, &q()).unwrap().norm() < 1e-14);
    }

    #[test]
    fn t_eta_shell_oracle() {
        // ψ = χ{1 ≤ |n̄| ≤ 2}, i.e. 2 ≤ |V| ≤ 4 on H², n̄ = 0, λ = 1, η = 1
        let s = Space::h2();
        let shell = |n: &NbarPoint| {
            Ok(cx(if (2.0..=4.0).contains(&n.v[0].abs()) {
                1.0
            } else {
                0.0
            }))
        };
        let spec = TruncatedKernelSpec::new(1.0, 1.0).unwrap();
        let v = t_eta(&s, &shell, spec, &NbarPoint::from_v(&[0.0]), &q()).unwrap();
        // γ · 2 ∫_2^4 (V/2)^{-(1+2i)} dV by an independent composite Simpson sum
        let n = 200_000;
        let h = 2.0 / n as f64;
        let f = |x: f64| Complex64::new(0.0, -2.0).scale((x / 2.0).ln()).exp() / (x / 2.0);
        let mut acc = f(2.0) + f(4.0);
        for i in 1..n {
            acc += f(2.0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let oracle = acc * (h / 3.0) * 2.0 * s.gamma;
        // frozen value 4γ(1 - 2^{-2i})/(2i)
        let frozen = Complex64::new(0.0, -2.0 * 2f64.ln()).exp();
        let frozen = (cx(1.0) - frozen) * 4.0 * s.gamma / Complex64::new(0.0, 2.0);
        assert!((oracle - frozen).norm() < 1e-12);
        assert!((v - frozen).norm() < 1e-9, "{v} {frozen}");
    }

    #[test]
    fn t_star_dominates_members() {
        let s = Space::h2();
        let grid = log_grid(1e-3, 1e2, 16);
        let n = NbarPoint::from_v(&[0.2]);
        let prof = t_eta_profile(&s, &gauss, 1.0, &n, &grid, &q()).unwrap();
        let ts = t_star(&s, &gauss, 1.0, &n, &grid, &q()).unwrap();
        for (eta, v) in grid.iter().zip(&prof) {
            assert!(ts >= v.norm());
            let single = t_eta(
                &s,
                &gauss,
                TruncatedKernelSpec::new(1.0, *eta).unwrap(),
                &n,
                &q(),
            )
            .unwrap();
            assert!((single - v).norm() < 1e-8 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn t_eta_matches_direct_quadrature() {
        let s = Space::h3();
        let psi = |n: &NbarPoint| {
            Ok(Complex64::new(
                (-(n.v[0] - 0.3).powi(2) - n.v[1].powi(2)).exp(),
                0.0,
            ))
        };
        let n = NbarPoint::from_v(&[0.1, 0.2]);
        let eta = 0.4;
        let v = t_eta(
            &s,
            &psi,
            TruncatedKernelSpec::new(1.0, eta).unwrap(),
            &n,
            &q(),
        )
        .unwrap();
        // independent Cartesian quadrature over the V-plane outside the truncation disc
        let rv = eta / s.params.c.sqrt();
        let f = |x: f64, y: f64| {
            let m = NbarPoint::from_v(&[x, y]);
            if x.hypot(y) < rv {
                return cx(0.0);
            }
            psi(&NbarPoint::from_v(&[0.1 + x, 0.2 + y])).unwrap() * kernel(&s, 1.0, &m)
        };
        let inner = |x: f64| {
            let mut br = vec![-8.0, 8.0];
            if x.abs() < rv {
                let h = (rv * rv - x * x).sqrt();
                br = vec![-8.0, -h, h, 8.0];
            }
            quad::adaptive(
                |y: f64| Ok(f(x, y)),
                &br,
                Tolerance::new(1e-13, 1e-11),
                2000,
            )
            .unwrap()
            .value
        };
        let direct = quad::adaptive(
            |x: f64| Ok(inner(x)),
            &[-8.0, -rv, 0.0, rv, 8.0],
            Tolerance::new(1e-12, 1e-10),
            2000,
        )
        .unwrap()
        .value
            * s.gamma;
        assert!((v - direct).norm() < 1e-7 * direct.norm(), "{v} {direct}");
    }

    #[test]
    fn sublinear_and_homogeneous() {
        let s = Space::h2();
        let grid = log_grid(1e-3, 1e2, 16);
        let other = |n: &NbarPoint| Ok(Complex64::new(0.0, 1.0) / (1.0 + n.v[0] * n.v[0]));
        let sum = |n: &NbarPoint| Ok(gauss(n)? + other(n)?);
        let scaled = |n: &NbarPoint| Ok(gauss(n)? * Complex64::new(-3.0, 4.0));
        for v in [-2.0, 0.0, 1.5] {
            let n = NbarPoint::from_v(&[v]);
            let m = |f: &dyn Fn(&NbarPoint) -> Result<Complex64>| {
                hl_maximal(&s, &f, &n, &grid, &q()).unwrap()
            };
            let t = |f: &dyn Fn(&NbarPoint) -> Result<Complex64>| {
                t_star(&s, &f, 1.0, &n, &grid, &q()).unwrap()
            };
            assert!(m(&sum) <= m(&gauss) + m(&other) + 1e-10);
            assert!(t(&sum) <= t(&gauss) + t(&other) + 1e-10);
            assert!((m(&scaled) - 5.0 * m(&gauss)).abs() <= 1e-12 * m(&scaled));
            assert!((t(&scaled) - 5.0 * t(&gauss)).abs() <= 1e-12 * t(&scaled));
        }
    }

    #[test]
    fn kernel_dilation_covariance() {
        let s = Space::h3();
        let n = NbarPoint::from_v(&[0.4, -1.2]);
        for t in [-1.0, 0.5, 2.0] {
            let lhs = kernel(&s, 1.0, &s.params.dilate(t, &n));
            let rhs = kernel(&s, 1.0, &n) * Complex64::new(-s.params.q, -2.0).scale(t).exp();
            assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
        }
    }

    #[test]
    fn compare_domain_and_bounds() {
        let s = Space::h2();
        // |m| = √c |V| = 1 at V = 2
        let (l, r) = kernel_compare(&s, 1.0, 1.0, &NbarPoint::from_v(&[2.0])).unwrap();
        assert!(l.is_finite() && r > 0.0);
        assert!(matches!(
            kernel_compare(&s, 1.0, 0.0, &NbarPoint::from_v(&[1.0])),
            Err(Error::Domain(_))
        ));
        // direct evaluation of the bracket
        let t = 1.0f64;
        let v = 2.0f64;
        let b = (-4.0 * t).exp() + 2.0 * s.params.c * (-2.0 * t).exp() * v * v + 1.0;
        let direct = (Complex64::new(-0.5, -1.0) * 0.5 * b.ln()).exp() - 1.0;
        assert!((l - direct.norm()).abs() < 1e-14);
        let sw = kernel_sweep(&s, 1.0, &[0.0, 1.0, 5.0], 16, 1e3).unwrap();
        assert!(sw.sup_ratio.is_finite() && sw.ratio_at_1000 < 10.0 * sw.ratio_at_10);
    }

    #[test]
    fn domination_zero_and_scaling() {
        let s = Space::h2();
        let l = SpectralParam::real(1.0);
        let grid = DominationGrid::uniform(2.0, 3, 0.0, 4.0, 3, 8);
        let zero = BoundaryFunction::from_psi(l, std::sync::Arc::new(|_| Ok(cx(0.0))));
        assert_eq!(
            domination_check(&s, &zero, l, &grid, &q()).unwrap().c_dom,
            0.0
        );
        let b = crate::transforms::trig_boundary(
            &s,
            l,
            vec![(0, cx(1.0)), (1, Complex64::new(0.3, 0.2))],
        );
        let a = domination_check(&s, &b, l, &grid, &q()).unwrap().c_dom;
        let b7 = domination_check(&s, &b.scaled(cx(7.0)), l, &grid, &q())
            .unwrap()
            .c_dom;
        assert!(a > 0.0 && a.is_finite());
        assert!((a - b7).abs() < 1e-10 * a, "{a} {b7}");
        assert_eq!(grid.refined().v_values.len(), 5);
    }
}
