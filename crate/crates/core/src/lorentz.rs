//! Distribution functions, decreasing rearrangements and Lorentz norms of weighted
//! samples, weak-L² norms on gridded pieces of `X`, and the ball-growth functional.
//!
//! All computations act on the exact rearrangement of a step function: values are
//! sorted in decreasing order and equal values merged, giving steps `(v_i, T_i)` with
//! `T_i` the cumulative mass.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::try_par_map;
use crate::measure::{QuadratureSpec, Space};
use crate::model::{NbarPoint, XPointNA};
use crate::quad::{self, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainTag {
    XNa,
    Nbar,
    Abstract,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSamples {
    entries: Vec<(f64, f64)>,
    pub domain: DomainTag,
}

impl WeightedSamples {
    pub fn new(domain: DomainTag) -> Self {
        Self {
            entries: Vec::new(),
            domain,
        }
    }

    pub fn from_entries(entries: Vec<(f64, f64)>, domain: DomainTag) -> Result<Self> {
        let mut ws = Self::new(domain);
        for (v, w) in entries {
            ws.push(v, w)?;
        }
        Ok(ws)
    }

    pub fn push(&mut self, value: f64, weight: f64) -> Result<()> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample weight must be positive and finite, got {weight}"
            )));
        }
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample value must be finite and nonnegative, got {value}"
            )));
        }
        self.entries.push((value, weight));
        Ok(())
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// `Σ value^p · weight`.
    pub fn power_sum(&self, p: f64) -> f64 {
        self.entries.iter().map(|(v, w)| v.powf(p) * w).sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|&(v, w)| (v * k.abs(), w))
                .collect(),
            domain: self.domain,
        }
    }

    /// Steps `(v_i, T_i)` of the rearrangement, `v_1 > v_2 > … > 0`.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let mut sorted: Vec<(f64, f64)> =
            self.entries.iter().copied().filter(|e| e.0 > 0.0).collect();
        sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut steps: Vec<(f64, f64)> = Vec::new();
        let mut mass = 0.0;
        for (v, w) in sorted {
            mass += w;
            match steps.last_mut() {
                Some(last) if last.0 == v => last.1 = mass,
                _ => steps.push((v, mass)),
            }
        }
        steps
    }

    /// Writes `value,weight` rows with a header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["value", "weight"])?;
        for (v, m) in &self.entries {
            out.write_record([format!("{v:.16e}"), format!("{m:.16e}")])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `d_f(s)`: mass of `{value > s}`.
pub fn distribution(ws: &WeightedSamples, s: f64) -> f64 {
    ws.entries.iter().filter(|e| e.0 > s).map(|e| e.1).sum()
}

/// `f*(t) = inf{s : d_f(s) ≤ t}`.
pub fn rearrangement(ws: &WeightedSamples, t: f64) -> f64 {
    rearrangement_of(&ws.steps(), t)
}

fn rearrangement_of(steps: &[(f64, f64)], t: f64) -> f64 {
    // first step whose cumulative mass exceeds t
    let i = steps.partition_point(|s| s.1 <= t);
    steps.get(i).map_or(0.0, |s| s.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzIndex {
    pub p: f64,
    /// `f64::INFINITY` selects the weak norm.
    pub q: f64,
}

impl LorentzIndex {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) || !(q >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid Lorentz index ({p}, {q})"
            )));
        }
        Ok(Self { p, q })
    }

    pub fn weak(p: f64) -> Self {
        Self {
            p,
            q: f64::INFINITY,
        }
    }
}

/// `‖f‖_{p,q} = (q/p ∫ [t^{1/p} f*(t)]^q dt/t)^{1/q}`, or `sup_t t^{1/p} f*(t)` for `q = ∞`,
/// evaluated exactly on the step function `f*`.
pub fn lorentz_norm(ws: &WeightedSamples, idx: LorentzIndex) -> f64 {
    lorentz_of_steps(&ws.steps(), idx)
}

fn lorentz_of_steps(steps: &[(f64, f64)], idx: LorentzIndex) -> f64 {
    if idx.q.is_infinite() {
        return steps
            .iter()
            .map(|&(v, t)| v * t.powf(1.0 / idx.p))
            .fold(0.0, f64::max);
    }
    let e = idx.q / idx.p;
    let mut prev = 0.0f64;
    let mut sum = 0.0;
    for &(v, t) in steps {
        let tp = t.powf(e);
        sum += v.powf(idx.q) * (tp - prev);
        prev = tp;
    }
    sum.powf(1.0 / idx.q)
}

/// Rectangular grid of cells on `V-box × [t_lo, t_hi]` (`m2 = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaGrid {
    pub v_max: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub dv: f64,
    pub dt: f64,
}

impl NaGrid {
    pub fn new(v_max: f64, t_lo: f64, t_hi: f64, dv: f64, dt: f64) -> Self {
        Self {
            v_max,
            t_lo,
            t_hi,
            dv,
            dt,
        }
    }

    pub fn refined(&self) -> Self {
        Self {
            dv: 0.5 * self.dv,
            dt: 0.5 * self.dt,
            ..self.clone()
        }
    }

    fn axis(lo: f64, hi: f64, d: f64) -> Vec<(f64, f64)> {
        let n = ((hi - lo) / d).round().max(1.0) as usize;
        let h = (hi - lo) / n as f64;
        (0..n)
            .map(|i| (lo + i as f64 * h, lo + (i + 1) as f64 * h))
            .collect()
    }

    /// Cell centres with their `μ_X`-masses.
    pub fn cells(&self, space: &Space) -> Vec<(XPointNA, f64)> {
        let m1 = space.params.m1;
        let two_rho = 2.0 * space.params.rho;
        let vs = Self::axis(-self.v_max, self.v_max, self.dv);
        let ts = Self::axis(self.t_lo, self.t_hi, self.dt);
        let kappa_gamma = space.na_density(0.0);
        let mut out = Vec::new();
        let mut idx = vec![0usize; m1];
        loop {
            let v: Vec<f64> = idx.iter().map(|&i| 0.5 * (vs[i].0 + vs[i].1)).collect();
            let vol: f64 = idx.iter().map(|&i| vs[i].1 - vs[i].0).product();
            for &(a, b) in &ts {
                let mass =
                    kappa_gamma * vol * ((two_rho * b).exp() - (two_rho * a).exp()) / two_rho;
                out.push((XPointNA::new(NbarPoint::from_v(&v), 0.5 * (a + b)), mass));
            }
            let mut k = 0;
            loop {
                if k == m1 {
                    return out;
                }
                idx[k] += 1;
                if idx[k] < vs.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// Samples of `|u|` on the grid cells.
pub fn samples_on_grid<U>(space: &Space, u: U, grid: &NaGrid) -> Result<WeightedSamples>
where
    U: Fn(&XPointNA) -> Result<Complex64> + Sync,
{
    space.params.require_abelian("grids on X")?;
    let cells = grid.cells(space);
    let values = try_par_map(&cells, |(x, _)| u(x).map(|v| v.norm()))?;
    let mut ws = WeightedSamples::new(DomainTag::XNa);
    for (v, (_, m)) in values.into_iter().zip(cells) {
        ws.push(v, m)?;
    }
    Ok(ws)
}

/// Partial `‖u‖_{2,∞}` on the gridded piece of `X`.
pub fn weak_norm_on_x<U>(space: &Space, u: U, grid: &NaGrid) -> Result<f64>
where
    U: Fn(&XPointNA) -> Result<Complex64> + Sync,
{
    Ok(lorentz_norm(
        &samples_on_grid(space, u, grid)?,
        LorentzIndex::weak(2.0),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedNorm {
    pub coarse: f64,
    pub fine: f64,
    /// Relative change in percent.
    pub change: f64,
}

/// [`weak_norm_on_x`] on the grid and its refinement; a change above 10% is an error.
pub fn weak_norm_checked<U>(space: &Space, u: U, grid: &NaGrid) -> Result<RefinedNorm>
where
    U: Fn(&XPointNA) -> Result<Complex64> + Sync,
{
    let coarse = weak_norm_on_x(space, &u, grid)?;
    let fine = weak_norm_on_x(space, &u, &grid.refined())?;
    let change = if fine == 0.0 {
        0.0
    } else {
        100.0 * (fine - coarse).abs() / fine
    };
    if change > 10.0 {
        return Err(Error::GridTooCoarse { change });
    }
    Ok(RefinedNorm {
        coarse,
        fine,
        change,
    })
}

/// Samples of a radial function on shells `[r_i, r_{i+1}]` of `[0, r_max]`, masses exact.
pub fn radial_samples<G>(space: &Space, g: G, r_max: f64, dr: f64) -> Result<WeightedSamples>
where
    G: Fn(f64) -> Result<f64> + Sync,
{
    let cartan = space.cartan()?;
    let m1 = space.params.m1 as i32;
    let n = (r_max / dr).round().max(1.0) as usize;
    let h = r_max / n as f64;
    let shells: Vec<usize> = (0..n).collect();
    let rows = try_par_map(&shells, |&i| -> Result<(f64, f64)> {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let mass = shell_mass(m1, a, b)? * cartan;
        Ok((g(0.5 * (a + b))?.abs(), mass))
    })?;
    let mut ws = WeightedSamples::new(DomainTag::XNa);
    for (v, m) in rows {
        ws.push(v, m)?;
    }
    Ok(ws)
}

/// `∫_a^b sinh^{m1} r dr`.
fn shell_mass(m1: i32, a: f64, b: f64) -> Result<f64> {
    Ok(match m1 {
        1 => b.cosh() - a.cosh(),
        2 => 0.25 * ((2.0 * b).sinh() - (2.0 * a).sinh()) - 0.5 * (b - a),
        _ => {
            quad::adaptive_real(
                &|r: f64| r.sinh().powi(m1),
                &[a, b],
                Tolerance::relative(1e-14),
                100,
            )?
            .value
        }
    })
}

/// Values `(1/R) ∫_{B(o,R)} |u|² dμ` for each `R`, and trend of the last third.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub values: Vec<(f64, f64)>,
    pub running_sup: Vec<f64>,
    /// Least-squares slope of value against `R` over the last third of the list.
    pub trend: f64,
}

impl GrowthProfile {
    pub fn max(&self) -> f64 {
        self.running_sup.last().copied().unwrap_or(0.0)
    }

    pub fn value_at(&self, r: f64) -> Option<f64> {
        self.values
            .iter()
            .find(|v| (v.0 - r).abs() < 1e-12)
            .map(|v| v.1)
    }
}

/// `M(u)`-type growth profile from the normalized spherical means `S(r)` of `|u|²` at radius `r`.
pub fn m_functional<S>(
    space: &Space,
    sphere_mean_sq: S,
    r_list: &[f64],
    q: &QuadratureSpec,
) -> Result<GrowthProfile>
where
    S: Fn(f64) -> Result<f64>,
{
    if r_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("R list must be increasing".into()));
    }
    let cartan = space.cartan()?;
    let m1 = space.params.m1 as i32;
    let mut values = Vec::new();
    let mut running = Vec::new();
    let mut acc = 0.0;
    let mut prev = 0.0f64;
    let mut sup = 0.0f64;
    for &r in r_list {
        let mut breaks = vec![prev];
        let mut b = prev.floor() + 1.0;
        while b < r {
            breaks.push(b);
            b += 1.0;
        }
        breaks.push(r);
        let shell = quad::adaptive(
            |t: f64| Ok(sphere_mean_sq(t)? * t.sinh().powi(m1)),
            &breaks,
            Tolerance::new(0.0, q.tail_tolerance.max(1e-12)),
            4000,
        )?;
        acc += shell.value;
        prev = r;
        let v = cartan * acc / r;
        sup = sup.max(v);
        values.push((r, v));
        running.push(sup);
    }
    let k = values.len().div_ceil(3).max(2).min(values.len());
    let tail = &values[values.len() - k..];
    Ok(GrowthProfile {
        trend: slope(tail),
        values,
        running_sup: running,
    })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return 0.0;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(e: &[(f64, f64)]) -> WeightedSamples {
        WeightedSamples::from_entries(e.to_vec(), DomainTag::Abstract).unwrap()
    }

    #[test]
    fn distribution_examples() {
        let z = ws(&[(0.0, 1.0), (0.0, 2.0)]);
        assert_eq!(distribution(&z, 0.5), 0.0);
        let one = ws(&[(2.0, 3.0)]);
        assert_eq!(distribution(&one, 1.0), 3.0);
        assert_eq!(distribution(&one, 2.0), 0.0);
    }

    #[test]
    fn rearrangement_examples() {
        let one = ws(&[(2.0, 3.0)]);
        assert_eq!(rearrangement(&one, 1.0), 2.0);
        assert_eq!(rearrangement(&one, 2.999), 2.0);
        assert_eq!(rearrangement(&one, 3.0), 0.0);
        let ind = ws(&[(1.0, 0.5), (1.0, 1.5), (1.0, 2.0)]);
        assert_eq!(ind.steps(), vec![(1.0, 4.0)]);
        assert_eq!(rearrangement(&ind, 3.9), 1.0);
        assert_eq!(rearrangement(&ind, 4.0), 0.0);
    }

    #[test]
    fn norm_examples() {
        let ind = ws(&[(1.0, 4.0)]);
        assert_eq!(lorentz_norm(&ind, LorentzIndex::weak(2.0)), 2.0);
        let s = ws(&[(3.0, 0.5), (1.0, 2.0), (2.5, 1.0), (1.0, 0.25)]);
        let direct = s.power_sum(2.0).sqrt();
        let l22 = lorentz_norm(&s, LorentzIndex::new(2.0, 2.0).unwrap());
        assert!((l22 - direct).abs() < 1e-12 * direct);
        assert_eq!(
            lorentz_norm(
                &WeightedSamples::new(DomainTag::Abstract),
                LorentzIndex::weak(2.0)
            ),
            0.0
        );
    }

    #[test]
    fn rejects_bad_samples() {
        let mut w = WeightedSamples::new(DomainTag::Abstract);
        assert!(w.push(1.0, 0.0).is_err());
        assert!(w.push(f64::NAN, 1.0).is_err());
        assert!(LorentzIndex::new(0.5, 2.0).is_err());
    }

    #[test]
    fn grid_cells_cover_mass() {
        let s = Space::h2();
        let g = NaGrid::new(2.0, 0.0, 1.0, 0.25, 0.1);
        let total: f64 = g.cells(&s).iter().map(|c| c.1).sum();
        let want = s.na_density(0.0) * 4.0 * (1f64.exp() - 1.0);
        assert!((total - want).abs() < 1e-12 * want);
        let h3 = Space::h3();
        assert_eq!(g.cells(&h3).len(), 16 * 16 * 10);
    }

    #[test]
    fn indicator_weak_norm_on_x() {
        let s = Space::h2();
        // the grid piece itself has mass m; the indicator has weak norm √m
        let g = NaGrid::new(2.0, 0.0, 1.0, 0.25, 0.1);
        let m: f64 = g.cells(&s).iter().map(|c| c.1).sum();
        let w = weak_norm_on_x(&s, |_| Ok(Complex64::new(1.0, 0.0)), &g).unwrap();
        assert!((w - m.sqrt()).abs() < 1e-12);
        assert_eq!(
            weak_norm_on_x(&s, |_| Ok(Complex64::new(0.0, 0.0)), &g).unwrap(),
            0.0
        );
    }

    #[test]
    fn shell_masses() {
        let quad2 = quad::adaptive_real(
            &|r: f64| r.sinh().powi(2),
            &[0.3, 1.7],
            Tolerance::relative(1e-14),
            100,
        )
        .unwrap();
        assert!((shell_mass(2, 0.3, 1.7).unwrap() - quad2.value).abs() < 1e-13);
        assert!((shell_mass(1, 0.0, 2.0).unwrap() - (2f64.cosh() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn csv_roundtrip_header() {
        let s = ws(&[(1.5, 0.25)]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "value,weight\n1.5000000000000000e0,2.5000000000000000e-1\n"
        );
    }

    #[test]
    fn growth_of_constant() {
        // u ≡ 1 on H²: (1/R) ∫_{B_R} 1 = (cosh R - 1)/R
        let q = QuadratureSpec::default();
        let s = Space::h2().with_cartan(1.0);
        let g = m_functional(&s, |_| Ok(1.0), &[1.0, 2.0, 3.0], &q).unwrap();
        for (r, v) in &g.values {
            assert!((v - (r.cosh() - 1.0) / r).abs() < 1e-10);
        }
        assert!(g.trend > 0.0);
        let z = m_functional(&s, |_| Ok(0.0), &[1.0, 2.0], &q).unwrap();
        assert!(z.values.iter().all(|v| v.1 == 0.0));
    }
}
