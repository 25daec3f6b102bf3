//! Experiment drivers. Each records its constants (with grid deltas), its pass/fail
//! verdicts and its data tables in an [`ExperimentOutput`].

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::exec::try_par_map;
use crate::families::{bump_family, gaussian_psi_family, sphere_family, trig_family, Bump};
use crate::lorentz::{
    lorentz_norm, m_functional, radial_samples, samples_on_grid, weak_norm_on_x, LorentzIndex,
    NaGrid,
};
use crate::maximal::{
    domination_with, hl_maximal, kernel_compare, kernel_sweep, log_grid, t_star, DominationGrid,
};
use crate::measure::{
    calibrate_cartan, integrate_km, integrate_x_na, integrate_x_na_fallible, integrate_x_polar,
    QuadratureSpec, Space, XRegion,
};
use crate::model::{NbarPoint, SpaceParams, SpectralParam, XPointNA};
use crate::quad::UniformTable;
use crate::report::{ExperimentOutput, ExperimentReport, Table};
use crate::transforms::{
    circle_coefficients, circle_nodes, convolve_radial, helgason_ft, laplace_residual,
    poisson_direct, poisson_psi, radial_kernels, spectral_projection, spherical_phi,
    BoundaryFunction, PoissonModes, RadialKernel, XFunction,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Calibrate,
    Spherical,
    PoissonEigen,
    WeakL2,
    Restriction,
    Duality,
    Spectral,
    Counterexample,
    Tstar,
    KernelCompare,
    Growth,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Calibrate,
        Experiment::Spherical,
        Experiment::PoissonEigen,
        Experiment::WeakL2,
        Experiment::Restriction,
        Experiment::Duality,
        Experiment::Spectral,
        Experiment::Counterexample,
        Experiment::Tstar,
        Experiment::KernelCompare,
        Experiment::Growth,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Calibrate => "calibrate",
            Experiment::Spherical => "spherical",
            Experiment::PoissonEigen => "poisson-eigen",
            Experiment::WeakL2 => "weak-l2",
            Experiment::Restriction => "restriction",
            Experiment::Duality => "duality",
            Experiment::Spectral => "spectral",
            Experiment::Counterexample => "counterexample",
            Experiment::Tstar => "tstar",
            Experiment::KernelCompare => "kernel-compare",
            Experiment::Growth => "growth",
        }
    }

    /// Experiments where `λ = 0` is a meaningful contrast run.
    fn allows_zero(self) -> bool {
        matches!(
            self,
            Experiment::Calibrate
                | Experiment::Spherical
                | Experiment::WeakL2
                | Experiment::Counterexample
                | Experiment::Growth
        )
    }

    fn needs_h2(self) -> bool {
        !matches!(
            self,
            Experiment::Calibrate
                | Experiment::Spherical
                | Experiment::PoissonEigen
                | Experiment::Counterexample
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

/// An experiment's output; `error` is set when it aborted, in which case the report
/// holds the partial results and `pass["completed"] = false`.
#[derive(Debug)]
pub struct Run {
    pub output: ExperimentOutput,
    pub error: Option<Error>,
}

impl Run {
    pub fn report(&self) -> &ExperimentReport {
        &self.output.report
    }

    pub fn passed(&self) -> bool {
        self.error.is_none() && self.output.report.all_passed()
    }
}

struct Ctx<'a> {
    cfg: &'a Config,
    space: Space,
    q: QuadratureSpec,
    lambda: SpectralParam,
}

impl Ctx<'_> {
    fn l(&self) -> f64 {
        self.lambda.re
    }
}

struct Sink {
    report: ExperimentReport,
    tables: Vec<Table>,
}

impl Sink {
    fn constant(&mut self, name: &str, value: f64, delta: f64) {
        self.report.constant(name, value, delta);
    }

    fn check(&mut self, name: &str, ok: bool) {
        self.report.check(name, ok);
    }
}

/// Runs one experiment. Configuration problems are errors; failures inside the
/// experiment produce a partial report marked as not completed.
pub fn run_experiment(which: Experiment, cfg: &Config) -> Result<Run> {
    cfg.validate()?;
    if cfg.lambda == 0.0 && !which.allows_zero() {
        return Err(Error::Config(format!(
            "λ = 0 is only a contrast run; {which} needs λ ≠ 0"
        )));
    }
    let base = cfg.space.space();
    if which.needs_h2() && base.params.m1 != 1 {
        return Err(Error::Config(format!("{which} runs on h2")));
    }
    let q = cfg.quadrature();
    let start = Instant::now();
    let mut sink = Sink {
        report: ExperimentReport::new(
            which.id(),
            base.params,
            cfg.lambda,
            vec![q, coarse(&q)],
            cfg.seed,
        ),
        tables: Vec::new(),
    };
    let result = base.calibrated(&q).and_then(|space| {
        let ctx = Ctx {
            cfg,
            space,
            q,
            lambda: SpectralParam::real(cfg.lambda),
        };
        match which {
            Experiment::Calibrate => calibrate(&ctx, &mut sink),
            Experiment::Spherical => spherical(&ctx, &mut sink),
            Experiment::PoissonEigen => poisson_eigen(&ctx, &mut sink),
            Experiment::WeakL2 => weak_l2(&ctx, &mut sink),
            Experiment::Restriction => restriction(&ctx, &mut sink),
            Experiment::Duality => duality(&ctx, &mut sink),
            Experiment::Spectral => spectral(&ctx, &mut sink),
            Experiment::Counterexample => counterexample(&ctx, &mut sink),
            Experiment::Tstar => tstar(&ctx, &mut sink),
            Experiment::KernelCompare => kernel_comparison(&ctx, &mut sink),
            Experiment::Growth => growth(&ctx, &mut sink),
        }
    });
    sink.check("completed", result.is_ok());
    if cfg.record_runtime {
        sink.report.runtime_ms = start.elapsed().as_millis() as u64;
    }
    Ok(Run {
        output: ExperimentOutput {
            report: sink.report,
            tables: sink.tables,
        },
        error: result.err(),
    })
}

/// Every experiment in order; configuration errors of single experiments (such as an
/// `h3` space for an `h2`-only experiment) are skipped.
pub fn run_all(cfg: &Config) -> Result<Vec<Run>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for e in Experiment::ALL {
        match run_experiment(e, cfg) {
            Ok(r) => out.push(r),
            Err(Error::Config(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// The looser quadrature used to estimate grid deltas.
fn coarse(q: &QuadratureSpec) -> QuadratureSpec {
    q.with_tolerance((100.0 * q.tail_tolerance).min(1e-6))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64)
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

/// Largest distance from `o` over a grid, plus a margin for mode tables.
fn grid_reach(p: &SpaceParams, grid: &NaGrid) -> Result<f64> {
    let mut r = 0.0f64;
    for v in [-grid.v_max, grid.v_max] {
        for t in [grid.t_lo, grid.t_hi] {
            r = r.max(p.distance_from_origin(&XPointNA::new(NbarPoint::from_v(&[v]), t))?);
        }
    }
    Ok(r + 1.0)
}

const MODE_STEP: f64 = 1.0 / 32.0;

fn pt(v: f64, t: f64) -> XPointNA {
    XPointNA::new(NbarPoint::from_v(&[v]), t)
}

fn c64(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

// ---------------------------------------------------------------- calibrate

fn ball_volume(m1: usize, r: f64) -> f64 {
    match m1 {
        1 => r.cosh() - 1.0,
        _ => 0.5 * (0.25 * (2.0 * r).sinh() - 0.5 * r),
    }
}

fn calibrate(ctx: &Ctx, out: &mut Sink) -> Result<()> {
    let s = &ctx.space;
    let q = ctx.q;
    let cq = coarse(&q);

    let mut worst_km: f64 = 0.0;
    let mut km_delta: f64 = 0.0;
    for sp in [Space::h2(), Space::h3()] {
        let v = integrate_km(&sp, |_| Complex64::new(1.0, 0.0), &q)?
            .value
            .re;
        let vc = integrate_km(&sp, |_| Complex64::new(1.0, 0.0), &cq)?
            .value
            .re;
        worst_km = worst_km.max((v - 1.0).abs());
        km_delta = km_delta.max((v - vc).abs());
    }
    out.constant("km_mass_max_err", worst_km, km_delta);
    out.check("km_mass_1e-8", worst_km < 1e-8);

    let cartan = s.cartan()?;
    out.constant("cartan", cartan, (calibrate_cartan(s, &cq)? - cartan).abs());

    let bumps: Vec<Bump> = bump_family(s, ctx.cfg.seed, 20)?
        .into_iter()
        .filter(Bump::is_radial)
        .collect();
    let mut table = Table::new("bumps", &["width", "amplitude", "na", "polar", "rel_diff"]);
    let mut worst: f64 = 0.0;
    let mut worst_coarse: f64 = 0.0;
    let p = s.params;
    for b in &bumps {
        let f = b.function(s);
        let prof = b.profile();
        let breaks = [0.0, 0.5 * b.support(), b.support()];
        let pair = |q: &QuadratureSpec| -> Result<(f64, f64)> {
            let na = integrate_x_na(
                s,
                |x| f.eval(x),
                q,
                &XRegion::ball(&vec![0.0; p.m1], 0.0, b.support()),
            )?
            .value
            .re;
            let polar = integrate_x_polar(s, |x| prof.eval(x.t).unwrap_or_default(), q, &breaks)?
                .value
                .re;
            Ok((na, polar))
        };
        let (na, polar) = pair(&q)?;
        let (nac, polc) = pair(&cq)?;
        let d = rel(na, polar);
        worst = worst.max(d);
        worst_coarse = worst_coarse.max(rel(nac, polc));
        table.push(vec![b.width, b.amplitude, na, polar, d]);
    }
    out.tables.push(table);
    out.constant("na_polar_max_rel_diff", worst, (worst - worst_coarse).abs());
    out.check("na_polar_1e-6", worst < 1e-6);

    let mut vols = Table::new(
        "ball_volumes",
        &["radius", "quadrature", "exact", "rel_err"],
    );
    let mut worst_vol: f64 = 0.0;
    let mut vol_delta: f64 = 0.0;
    for r in [1.0, 2.0, 5.0] {
        let region = XRegion::ball(&vec![0.0; p.m1], 0.0, r);
        let one = |x: &XPointNA| {
            Complex64::new(
                if p.distance_from_origin(x).is_ok_and(|d| d <= r) {
                    1.0
                } else {
                    0.0
                },
                0.0,
            )
        };
        let v = integrate_x_na(s, one, &q, &region)?.value.re;
        let vc = integrate_x_na(s, one, &cq, &region)?.value.re;
        let exact = ball_volume(p.m1, r);
        worst_vol = worst_vol.max(rel(v, exact));
        vol_delta = vol_delta.max(rel(v, vc));
        vols.push(vec![r, v, exact, rel(v, exact)]);
    }
    out.tables.push(vols);
    out.constant("ball_volume_max_rel_err", worst_vol, vol_delta);
    out.check("ball_volume_1e-8", worst_vol < 1e-8);
    Ok(())
}

// ---------------------------------------------------------------- spherical

fn spherical(ctx: &Ctx, out: &mut Sink) -> Result<()> {
    let s = &ctx.space;
    let l = ctx.l();
    let cq = coarse(&ctx.q);
    let ts = linspace(0.1, 10.0, 100);
    let closed = |t: f64| {
        if l == 0.0 {
            t / t.sinh()
        } else {
            (l * t).sin() / (l * t.sinh())
        }
    };
    let h3 = s.params.m1 == 2;
    let one = BoundaryFunction::one(s, ctx.lambda);
    let comparator = |t: f64| -> Result<Complex64> {
        if h3 {
            Ok(Complex64::new(closed(t), 0.0))
        } else {
            poisson_psi(s, &one, ctx.lambda, &pt(0.0, t), &ctx.q)
        }
    };
    let rows = try_par_map(
        &ts,
        |&t| -> Result<(f64, Complex64, Complex64, Complex64)> {
            Ok((
                t,
                spherical_phi(s, ctx.lambda, t, &ctx.q)?,
                spherical_phi(s, ctx.lambda, t, &cq)?,
                comparator(t)?,
            ))
        },
    )?;
    let mut table = Table::new("phi", &["t", "re_phi", "im_phi", "comparator"]);
    let mut err: f64 = 0.0;
    let mut delta: f64 = 0.0;
    for (t, phi, phic, cmp) in rows {
        err = err.max((phi - cmp).norm());
        delta = delta.max((phi - phic).norm());
        table.push(vec![t, phi.re, phi.im, cmp.re]);
    }
    out.tables.push(table);
    out.constant("phi_max_abs_err", err, delta);
    out.check("oracle_1e-6", err < 1e-6);

    // φ(0) through the N̄ integral (the K route is exact there), and φ_λ = φ_{-λ}.
    let mut zero_err: f64 = 0.0;
    let mut sym: f64 = 0.0;
    for sp in [Space::h2(), Space::h3()] {
        for l in [0.5, 1.0, 2.0] {
            let lam = SpectralParam::real(l);
            let at_o = poisson_psi(
                &sp,
                &BoundaryFunction::one(&sp, lam),
                lam,
                &XPointNA::origin(&sp.params),
                &ctx.q,
            )?;
            zero_err = zero_err.max((at_o - 1.0).norm());
            let gaps = try_par_map(
                &ts[..ts.len()]
                    .iter()
                    .step_by(10)
                    .copied()
                    .collect::<Vec<_>>(),
                |&t| -> Result<f64> {
                    Ok((spherical_phi(&sp, lam, t, &ctx.q)?
                        - spherical_phi(&sp, SpectralParam::real(-l), t, &ctx.q)?)
                    .norm())
                },
            )?;
            sym = sym.max(max_of(gaps));
        }
    }
    out.constant("phi_zero_err", zero_err, 0.0);
    out.constant("phi_symmetry_max_gap", sym, 0.0);
    out.check("normalization_1e-8", zero_err < 1e-8);
    out.check("symmetry_1e-10", sym < 1e-10);
    Ok(())
}

// ---------------------------------------------------------------- poisson-eigen

fn poisson_eigen(ctx: &Ctx, out: &mut Sink) -> Result<()> {
    let s = &ctx.space;
    let q = ctx.q;
    let cq = coarse(&q);
    let seed = ctx.cfg.seed;
    let l = ctx.l();

    let (family, points): (Vec<BoundaryFunction>, Vec<XPointNA>) = if s.params.m1 == 1 {
        let fam = trig_family(s, ctx.lambda, seed, 5, 3)?
            .into_iter()
            .map(|f| f.boundary)
            .collect();
        let mut pts = Vec::new();
        for v in linspace(-4.0, 4.0, 10) {
            for t in linspace(-2.0, 6.0, 10) {
                pts.push(pt(v, t));
            }
        }
        (fam, pts)
    } else {
        let fam = sphere_family(s, ctx.lambda, seed, 2)?
            .into_iter()
            .map(|f| f.0)
            .collect();
        let mut pts = Vec::new();
        for v in [[0.0, 0.0], [1.0, -0.5], [-2.0, 1.0]] {
            for t in [-1.0, 0.5, 2.0] {
                pts.push(XPointNA::new(NbarPoint::from_v(&v), t));
            }
        }
        (fam, pts)
    };

    let mut table = Table::new(
        "dual_path",
        &[
            "index",
            "point",
            "re_psi",
            "im_psi",
            "re_direct",
            "im_direct",
        ],
    );
    let mut worst: f64 = 0.0;
    let mut worst_coarse: f64 = 0.0;
    for (i, f) in family.iter().enumerate() {
        let vals = try_par_map(&points, |x| -> Result<(Complex64, Complex64)> {
            Ok((
                poisson_psi(s, f, ctx.lambda, x, &q)?,
                poisson_direct(s, f, ctx.lambda, x, &q)?,
            ))
        })?;
        let scale = max_of(vals.iter().map(|v| v.0.norm()));
        let gap = max_of(vals.iter().map(|v| (v.0 - v.1).norm())) / scale;
        worst = worst.max(gap);
        for (j, (a, b)) in vals.iter().enumerate() {
            let [ar, ai] = c64(*a);
            let [br, bi] = c64(*b);
            table.push(vec![i as f64, j as f64, ar, ai, br, bi]);
        }
        if i == 0 {
            let vals = try_par_map(&points, |x| -> Result<(Complex64, Complex64)> {
                Ok((
                    poisson_psi(s, f, ctx.lambda, x, &cq)?,
                    poisson_direct(s, f, ctx.lambda, x, &cq)?,
                ))
            })?;
            let scale = max_of(vals.iter().map(|v| v.0.norm()));
            worst_coarse = max_of(vals.iter().map(|v| (v.0 - v.1).norm())) / scale;
        }
    }
    out.tables.push(table);
    out.constant(
        "dual_path_sup_rel_diff",
        worst,
        (worst - worst_coarse).abs(),
    );
    out.check("dual_path_1e-6", worst < 1e-6);

    // Eigen-equation for P_λF on this space.
    let h = 1e-3;
    let tight = q.with_tolerance(q.tail_tolerance.min(1e-13));
    let f0 = &family[0];
    let samples: Vec<XPointNA> = if s.params.m1 == 1 {
        let mut v = Vec::new();
        for a in linspace(-3.0, 3.0, 10) {
            for t in linspace(-2.0, 4.0, 10) {
                v.push(pt(a, t));
            }
        }
        v
    } else {
        points.clone()
    };
    let u = |x: &XPointNA| poisson_psi(s, f0, ctx.lambda, x, &tight);
    let res = laplace_residual(s, u, l, &samples, h)?;
    let res2 = laplace_residual(s, u, l, &samples, 2.0 * h)?;
    out.constant("poisson_residual", res, (res - res2).abs());
    out.check("poisson_residual_1e-3", res < 1e-3);

    // H³ radial closed form φ_λ(r) = sin λr / (λ sinh r).
    let h3 = Space::h3();
    let p3 = h3.params;
    let closed = move |x: &XPointNA| -> Result<Complex64> {
        let r = p3.distance_from_origin(x)?;
        let v = if r == 0.0 {
            1.0
        } else if l == 0.0 {
            r / r.sinh()
        } else {
            (l * r).sin() / (l * r.sinh())
        };
        Ok(Complex64::new(v, 0.0))
    };
    let mut radial_pts = Vec::new();
    for a in linspace(-2.0, 2.0, 5) {
        for b in linspace(-2.0, 2.0, 5) {
            for t in linspace(-1.5, 2.5, 4) {
                radial_pts.push(XPointNA::new(NbarPoint::from_v(&[a, b]), t));
            }
        }
    }
    let rres = laplace_residual(&h3, closed, l, &radial_pts, h)?;
    let rres2 = laplace_residual(&h3, closed, l, &radial_pts, 2.0 * h)?;
    out.constant("h3_radial_residual", rres, (rres - rres2).abs());
    out.check("h3_radial_residual_1e-3", rres < 1e-3);
    Ok(())
}

// ---------------------------------------------------------------- weak-l2

fn weak_l2(ctx: &Ctx, out: &mut Sink) -> Result<()> {
    let s = &ctx.space;
    let p = s.params;
    let cfg = ctx.cfg;
    let (t, vmax) = (cfg.t_max, cfg.v_max);

    if ctx.l() != 0.0 {
        let base = NaGrid::new(vmax, -t, t, 0.2, 0.2);
        let doubled = NaGrid::new(vmax, -2.0 * t, 2.0 * t, 0.2, 0.2);
        let modes = PoissonModes::build(
            s,
            ctx.lambda,
            3,
            grid_reach(&p, &doubled)?,
            MODE_STEP,
            &ctx.q,
        )?;
        let family = trig_family(s, ctx.lambda, cfg.seed, 20, 3)?;
        let mut table = Table::new(
            "family",
            &[
                "index",
                "f_norm",
                "ratio",
                "ratio_doubled",
                "ratio_refined",
                "ratio_doubled_refined",
            ],
        );
        let mut ratios = Vec::new();
        for (i, f) in family.iter().enumerate() {
            let u = |x: &XPointNA| modes.evaluate(s, &f.coeffs, x);
            let n = f.norm();
            let mut row = [0.0; 4];
            for (slot, g) in
                row.iter_mut()
                    .zip([&base, &doubled, &base.refined(), &doubled.refined()])
            {
                *slot = weak_norm_on_x(s, u, g)? / n;
            }
            table.push(vec![i as f64, n, row[0], row[1], row[2], row[3]]);
            ratios.push(row);
            if i == 0 {
                let ws = samples_on_grid(s, u, &base)?;
                let mut samples = Table::new("samples", &["value", "weight"]);
                for &(v, w) in ws.entries() {
                    samples.push(vec![v, w]);
                }
                out.tables.push(samples);
                let l22 = lorentz_norm(&ws, LorentzIndex::new(2.0, 2.0)?);
                let direct = ws.power_sum(2.0).sqrt();
                let l21 = lorentz_norm(&ws, LorentzIndex::new(2.0, 1.0)?);
                let l2inf = lorentz_norm(&ws, LorentzIndex::weak(2.0));
                out.constant("lorentz_22_vs_l2", rel(l22, direct), 0.0);
                out.check("lorentz_22_matches_l2_1e-12", rel(l22, direct) < 1e-12);
                out.check("lorentz_ordering", l21 >= l22 && l22 >= l2inf);
            }
        }
        out.tables.push(table);
        let max_ratio = max_of(ratios.iter().map(|r| r[0]));
        let max_refined = max_of(ratios.iter().map(|r| r[2]));
        let growth = max_of(ratios.iter().map(|r| r[1] / r[0] - 1.0));
        let growth_refined = max_of(ratios.iter().map(|r| r[3] / r[2] - 1.0));
        let refine = rel(max_refined, max_ratio);
        out.constant("max_weak_ratio", max_ratio, (max_refined - max_ratio).abs());
        out.constant(
            "worst_domain_growth",
            growth,
            (growth_refined - growth).abs(),
        );
        out.constant("max_ratio_refinement_change", refine, 0.0);
        out.check(
            "weak_ratio_finite",
            ratios.iter().flatten().all(|v| v.is_finite()),
        );
        out.check("domain_growth_lt_5pct", growth < 0.05);
        out.check("refinement_stable_10pct", refine < 0.10);
    }

    // Contrast: φ_λ over λ → 0, t-domains ±10 and ±30.
    let lambdas = [1.0, 0.5, 0.25, 0.125, 0.0];
    let near = NaGrid::new(vmax, -10.0, 10.0, 0.2, 0.2);
    let far = NaGrid::new(vmax, -30.0, 30.0, 0.2, 0.2);
    let reach = grid_reach(&p, &far)?;
    let mut table = Table::new("contrast", &["lambda", "t_max", "weak_norm"]);
    let mut at = Vec::new();
    for l in lambdas {
        let modes = PoissonModes::build(s, SpectralParam::real(l), 0, reach, MODE_STEP, &ctx.q)?;
        let one = [(0i64, Complex64::new(1.0, 0.0))];
        let u = |x: &XPointNA| modes.evaluate(s, &one, x);
        let a = weak_norm_on_x(s, u, &near)?;
        let b = weak_norm_on_x(s, u, &far)?;
        table.push(vec![l, 10.0, a]);
        table.push(vec![l, 30.0, b]);
        at.push((l, a, b));
    }
    out.tables.push(table);
    for &(l, a, b) in &at {
        out.constant(&format!("phi_weak_norm_T10_lambda_{l}"), a, b - a);
    }
    let g0 = at[4].2 / at[4].1 - 1.0;
    let g1 = at[0].2 / at[0].1 - 1.0;
    out.constant("phi0_growth_10_30", g0, 0.0);
    out.constant("phi1_growth_10_30", g1, 0.0);
    let monotone = at[..4].windows(2).all(|w| w[1].1 > w[0].1);
    if ctx.l() == 0.0 {
        out.check("expected_fail.phi0_growth_ge_20pct", g0 >= 0.2);
    } else {
        out.check("lambda0_growth_ge_20pct", g0 >= 0.2);
        out.check("lambda1_growth_lt_5pct", g1 < 0.05);
        out.check("monotone_in_lambda", monotone);
    }
    Ok(())
}

// ---------------------------------------------------------------- restriction / duality / spectral

/// `f̃(λ, θ_j)` at the `n` circle nodes.
fn circle_ft(
    space: &Space,
    f: &XFunction,
    lambda: SpectralParam,
    n: usize,
    q: &QuadratureSpec,
) -> Result<Vec<Complex64>> {
    let nodes = circle_nodes(space, n);
    try_par_map(&nodes, |(_, b)| helgason_ft(space, f, lambda, b, q))
}

fn rms(xs: &[Complex64]) -> f64 {
    (xs.iter().map(|z| z.norm_sqr()).sum::<f64>() / xs.len() as f64).sqrt()
}

/// `‖f‖_{2,1}` of a bump from its radial profile on shells of width `dr`.
fn bump_norm21(space: &Space, b: &Bump, dr: f64) -> Result<f64> {
    let prof = b.profile();
    let ws = radial_samples(space, |r| Ok(prof.eval(r)?.norm()), b.support(), dr)?;
    Ok(lorentz_norm(&ws, LorentzIndex::new(2.0, 1.0)?))
}

fn restriction(ctx: &Ctx, out: &mut Sink) -> Result<()> {
    let s = &ctx.space;
    let bumps = bump_family(s, ctx.cfg.seed, 6)?;
    let mut table = Table::new(
        "family",
        &[
            "index",
            "radial",
            "width",
            "amplitude",
            "ft_norm",
            "ft_norm_coarse",
            "norm21",
            "norm21_coarse",
            "ratio",
            "ratio_coarse",
        ],
    );
    let mut fine = Vec::new();
    let mut coarse_r = Vec::new();
    let mut translation: f64 = 0.0;
    for (i, b) in bumps.iter().enumerate() {
        let f = b.function(s);
        let ft = rms(&circle_ft(s, &f, ctx.lambda, 64, &ctx.q)?);
        let ftc = rms(&circle_ft(s, &f, ctx.lambda, 32, &ctx.q)?);
        let n21 = bump_norm21(s, b, 0.001)?;
        let n21c = bump_norm21(s, b, 0.002)?;
        table.push(vec![
            i as f64,
            b.is_radial() as u8 as f64,
            b.width,
            b.amplitude,
            ft,
            ftc,
            n21,
            n21c,
            ft / n21,
            ftc / n21c,
        ]);
        fine.push(ft / n21);
        coarse_r.push(ftc / n21c);
        if !b.is_radial() {
            let centred = Bump {
                center_v: vec![0.0; b.center_v.len()],
                center_t: 0.0,
                ..b.clone()
            };
            let at_o = helgason_ft(
                s,
                &centred.function(s),
                ctx.lambda,
                &NbarPoint::from_v(&[0.0]),
                &ctx.q,
            )?
            .norm();
            translation = translation.max(rel(ft, at_o));
        }
    }
    out.tables.push(table);
    let max_ratio = max_of(fine.iter().copied());
    let min_ratio = fine.iter().copied().fold(f64::INFINITY, f64::min);
    let refine = max_of(fine.iter().zip(&coarse_r).map(|(a, b)| rel(*b, *a)));
    out.constant(
        "max_ratio",
        max_ratio,
        (max_of(coarse_r.iter().copied()) - max_ratio).abs(),
    );
    out.constant("min_ratio", min_ratio, 0.0);
    out.constant("worst_refinement_change", refine, 0.0);
    out.constant("translation_max_rel_diff", translation, 0.0);
    out.check(
        "ratio_bounded",
        fine.iter().all(|r| r.is_finite() && *r > 0.0),
    );
    out.check("refinement_stable_10pct", refine < 0.10);
    out.check("translation_invariant_1pct", translation < 0.01);
    Ok(())
}

/// Reach of a mode table covering a bump's support and the given points.
fn bump_reach(p: &SpaceParams, bumps: &[Bump]) -> Result<f64> {
    let mut r = 0.0f64;
    for b in bumps {
        r = r.max(p.distance_from_origin(&b.center())? + b.support());
    }
    Ok(r + 1.0)
}

fn duality(ctx: &Ctx, out: &mut Sink) -> Result<()> {
    let s = &ctx.space;
    let seed = ctx.cfg.seed;
    let bumps = bump_family(s, seed, 5)?;
    let family = trig_family(s, ctx.lambda, seed, 5, 3)?;
    let modes = PoissonModes::build(
        s,
        ctx.lambda,
        3,
        bump_reach(&s.params, &bumps)?,
        MODE_STEP,
        &ctx.q,
    )?;
    let mut table = Table::new(
        "pairs",
        &["index", "re_lhs", "im_lhs", "re_rhs", "im_rhs", "rel_err"],
    );
    let mut worst: f64 = 0.0;
    let mut worst_coarse: f64 = 0.0;
    for (i, (b, tf)) in bumps.iter().zip(&family).enumerate() {
        let f = b.function(s);
        let lhs = integrate_x_na_fallible(
            s,
            |x| Ok(f.eval(x) * modes.evaluate(s, &tf.coeffs, x)?),
            &ctx.q,
            &f.region,
            ctx.l(),
        )?
        .value;
        let pairing = |n: usize| -> Result<Complex64> {
            let ft = circle_ft(s, &f, ctx.lambda, n, &ctx.q)?;
            let mut acc = Complex64::new(0.0, 0.0);
            for ((_, b), v) in circle_nodes(s, n).iter().zip(ft) {
                acc += v * tf.boundary.chart(b)?.unwrap_or_default();
            }
            Ok(acc / n as f64)
        };
        let rhs = pairing(64)?;
        let rhs_c = pairing(32)?;
        let e = (lhs - rhs).norm() / rhs.norm();
        worst = worst.max(e);
        worst_coarse = worst_coarse.max((lhs - rhs_c).norm() / rhs_c.norm());
        let [lr, li] = c64(lhs);
        let [rr, ri] = c64(rhs);
        table.push(vec![i as f64, lr, li, rr, ri, e]);
    }
    out.tables.push(table);
    out.constant("max_rel_err", worst, (worst_coarse - worst).abs());
    out.check("duality_1e-5", worst < 1e-5);
    Ok(())
}

fn spectral(ctx: &Ctx, out: &mut Sink) -> Result<()> {
    let s = &ctx.space;
    let p = s.params;
    let cfg = ctx.cfg;
    let minus = SpectralParam::real(-ctx.l());
    let bumps = bump_family(s, cfg.seed, 6)?;
    let base = NaGrid::new(cfg.v_max, -cfg.t_max, cfg.t_max, 0.2, 0.2);
    let doubled = NaGrid::new(cfg.v_max, -2.0 * cfg.t_max, 2.0 * cfg.t_max, 0.2, 0.2);
    let probes = [
        pt(0.0, 0.0),
        pt(0.7, 0.3),
        pt(-1.2, -0.5),
        pt(2.0, 1.0),
        pt(-0.3, 1.5),
    ];

    let nodes = 128;
    let coeffs: Vec<Vec<(i64, Complex64)>> = bumps
        .iter()
        .map(|b| {
            let c = circle_coefficients(&circle_ft(s, &b.function(s), minus, nodes, &ctx.q)?);
            let top = max_of(c.iter().map(|x| x.1.norm()));
            Ok(c.into_iter().filter(|x| x.1.norm() > 1e-14 * top).collect())
        })
        .collect::<Result<_>>()?;
    let max_k = coeffs
        .iter()
        .flatten()
        .map(|c| c.0.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let reach = grid_reach(&p, &doubled)?.max(bump_reach(&p, &bumps)? + 3.0);
    let modes = PoissonModes::build(s, ctx.lambda, max_k, reach, MODE_STEP, &ctx.q)?;
    let phi = |r: f64| modes.mode(0, r);

    let mut table = Table::new(
        "family",
        &[
            "index",
            "radial",
            "norm21",
            "weak",
            "weak_doubled",
            "weak_refined",
            "identity_rel_err",
        ],
    );
    let mut ratios = Vec::new();
    let mut identity: f64 = 0.0;
    for (i, (b, c)) in bumps.iter().zip(&coeffs).enumerate() {
        let f = b.function(s);
        let u = |x: &XPointNA| modes.evaluate(s, c, x);
        let n21 = bump_norm21(s, b, 0.001)?;
        let w = weak_norm_on_x(s, u, &base)?;
        let wd = weak_norm_on_x(s, u, &doubled)?;
        let wr = weak_norm_on_x(s, u, &base.refined())?;
        let pairs = try_par_map(&probes, |x| -> Result<(Complex64, Complex64)> {
            let direct = match f.radial_profile() {
                Some(prof) => {
                    let sph = crate::transforms::RadialFunction::spherical(s, ctx.lambda, &ctx.q);
                    convolve_radial(s, prof, &sph, p.distance_from_origin(x)?, &ctx.q)?
                }
                None => {
                    integrate_x_na_fallible(
                        s,
                        |y| Ok(f.eval(y) * phi(p.distance(x, y)?)?),
                        &ctx.q,
                        &f.region,
                        ctx.l(),
                    )?
                    .value
                }
            };
            Ok((u(x)?, direct))
        })?;
        let scale = max_of(pairs.iter().map(|v| v.1.norm()));
        let e = max_of(pairs.iter().map(|v| (v.0 - v.1).norm())) / scale;
        identity = identity.max(e);
        table.push(vec![
            i as f64,
            b.is_radial() as u8 as f64,
            n21,
            w,
            wd,
            wr,
            e,
        ]);
        ratios.push((w / n21, wd / n21, wr / n21));
    }
    out.tables.push(table);
    let max_ratio = max_of(ratios.iter().map(|r| r.0));
    let max_refined = max_of(ratios.iter().map(|r| r.2));
    let growth = max_of(ratios.iter().map(|r| r.1 / r.0 - 1.0));
    out.constant("max_ratio", max_ratio, (max_refined - max_ratio).abs());
    out.constant("worst_domain_growth", growth, 0.0);
    out.constant("identity_max_rel_err", identity, 0.0);
    out.check(
        "ratio_bounded",
        ratios.iter().all(|r| r.0.is_finite() && r.0 > 0.0),
    );
    out.check("domain_growth_lt_5pct", growth < 0.05);
    out.check("identity_1e-5", identity < 1e-5);

    // The generic path (Poisson transform of the boundary Fourier transform) at one point.
    let f0 = bumps[0].function(s);
    let x = pt(0.5, 0.25);
    let v = spectral_projection(s, &f0, ctx.lambda, &x, &ctx.q)?;
    let conv = v
        .via_convolution
        .ok_or_else(|| Error::InvalidArgument("first bump must be radial".into()))?;
    let e = (v.via_poisson - conv).norm() / conv.norm();
    out.constant("generic_identity_rel_err", e, 0.0);
    out.check("generic_identity_1e-5", e < 1e-5);
    Ok(())
}

// ---------------------------------------------------------------- counterexample

fn counterexample(ctx: &Ctx, out: &mut Sink) -> Result<()> {
    let s = &ctx.space;
    let rho = s.params.rho;
    let f = radial_kernels(s, RadialKernel::Counterexample)?;
    let k2 = radial_kernels(s, RadialKernel::Kappa(2.0))?;

    let norm21 = |r_max: f64, dr: f64| -> Result<f64> {
        let ws = radial_samples(s, |r| Ok(f.eval(r)?.norm()), r_max, dr)?;
        Ok(lorentz_norm(&ws, LorentzIndex::new(2.0, 1.0)?))
    };
    let a = norm21(300.0, 0.01)?;
    let b = norm21(600.0, 0.01)?;
    let bc = norm21(600.0, 0.02)?;
    let change = rel(a, b);
    out.constant("norm21_R300", a, 0.0);
    out.constant("norm21_R600", b, (bc - b).abs());
    out.constant("norm21_domain_change", change, 0.0);
    out.check("norm21_domain_stable_2pct", b.is_finite() && change < 0.02);

    // h(s) = (f ∗ κ₂)(a_s) e^{ρs}, tabulated.
    let h = UniformTable::build(0.25, 41.0, |t| {
        Ok(convolve_radial(s, &f, &k2, t, &ctx.q)?.re * (rho * t).exp())
    })?;
    let mut table = Table::new("lower_bound", &["s", "conv_scaled", "g"]);
    let mut c = f64::INFINITY;
    for sv in linspace(5.0, 40.0, 701) {
        let hv = h.eval(sv)?;
        let g = hv / sv.sqrt();
        c = c.min(g);
        table.push(vec![sv, hv, g]);
    }
    out.tables.push(table);
    let c_coarse = linspace(5.0, 40.0, 36)
        .into_iter()
        .map(|sv| h.eval(sv).map(|v| v / sv.sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let c_coarse = c_coarse.into_iter().fold(f64::INFINITY, f64::min);
    out.constant("lower_bound_c", c, (c_coarse - c).abs());
    out.check("lower_bound_positive", c > 0.0);

    let weak = |t: f64, dr: f64| -> Result<f64> {
        let ws = radial_samples(s, |r| Ok(h.eval(r)?.abs() * (-rho * r).exp()), t, dr)?;
        Ok(lorentz_norm(&ws, LorentzIndex::weak(2.0)))
    };
    let w20 = weak(20.0, 0.01)?;
    let w40 = weak(40.0, 0.01)?;
    let w40c = weak(40.0, 0.02)?;
    let g = w40 / w20 - 1.0;
    out.constant("weak_T20", w20, 0.0);
    out.constant("weak_T40", w40, (w40c - w40).abs());
    out.constant("weak_growth_20_40", g, 0.0);
    out.check("weak_growth_ge_20pct", g >= 0.2);
    Ok(())
}

// ---------------------------------------------------------------- tstar

/// `‖g‖_{L²(N̄)}` on a sinh-mapped line `V = ℓ sinh u`, `|V| ≤ v_max`, trapezoid in `u`.
fn line_norm(space: &Space, values: &[f64], du: f64, scale: f64, us: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, (v, u)) in values.iter().zip(us).enumerate() {
        let w = if i == 0 || i + 1 == us.len() {
            0.5
        } else {
            1.0
        };
        acc += w * v * v * scale * u.cosh();
    }
    (space.gamma * acc * du).sqrt()
}

fn tstar(ctx: &Ctx, out: &mut Sink) -> Result<()> {
    let s = &ctx.space;
    let l = ctx.l();
    let cfg = ctx.cfg;
    let psis = gaussian_psi_family(s, cfg.seed, 20)?;
    let scale = 6.0;
    let u_max = (200.0f64 / scale).asinh();
    let resolutions = [
        (0.04, (cfg.eta_decades / 2).max(2)),
        (0.02, cfg.eta_decades),
    ];

    let mut table = Table::new(
        "family",
        &[
            "index",
            "width",
            "psi_norm",
            "tstar_ratio",
            "tstar_ratio_fine",
            "m0_ratio",
            "m0_ratio_fine",
        ],
    );
    let mut rows = Vec::new();
    for (i, g) in psis.iter().enumerate() {
        let psi = |n: &NbarPoint| Ok(g.eval(n));
        let norm = g.norm(s);
        let mut row = Vec::new();
        for &(du, per_decade) in &resolutions {
            let n_u = (2.0 * u_max / du).round() as usize;
            let step = 2.0 * u_max / n_u as f64;
            let us: Vec<f64> = (0..=n_u).map(|j| -u_max + j as f64 * step).collect();
            let grid = log_grid(1e-3, 1e3, per_decade);
            let vals = try_par_map(&us, |&u| -> Result<(f64, f64)> {
                let n = NbarPoint::from_v(&[scale * u.sinh()]);
                Ok((
                    t_star(s, &psi, l, &n, &grid, &ctx.q)?,
                    hl_maximal(s, &psi, &n, &grid, &ctx.q)?,
                ))
            })?;
            let ts: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let ms: Vec<f64> = vals.iter().map(|v| v.1).collect();
            row.push((
                line_norm(s, &ts, step, scale, &us) / norm,
                line_norm(s, &ms, step, scale, &us) / norm,
            ));
        }
        table.push(vec![
            i as f64, g.width, norm, row[0].0, row[1].0, row[0].1, row[1].1,
        ]);
        rows.push(row);
    }
    out.tables.push(table);
    let t_change = max_of(rows.iter().map(|r| rel(r[0].0, r[1].0)));
    let m_change = max_of(rows.iter().map(|r| rel(r[0].1, r[1].1)));
    let t_max = max_of(rows.iter().map(|r| r[1].0));
    let m_max = max_of(rows.iter().map(|r| r[1].1));
    out.constant(
        "tstar_max_ratio",
        t_max,
        (max_of(rows.iter().map(|r| r[0].0)) - t_max).abs(),
    );
    out.constant(
        "m0_max_ratio",
        m_max,
        (max_of(rows.iter().map(|r| r[0].1)) - m_max).abs(),
    );
    out.constant("tstar_worst_resolution_change", t_change, 0.0);
    out.constant("m0_worst_resolution_change", m_change, 0.0);
    out.check("tstar_bounded", t_max.is_finite());
    out.check("tstar_resolution_stable_10pct", t_change < 0.10);
    out.check("m0_resolution_stable_10pct", m_change < 0.10);

    // Pointwise domination of e^{ρt}|P_λF| by M₀ψ + T*ψ.
    let family = trig_family(s, ctx.lambda, cfg.seed, 3, 3)?;
    let grid = DominationGrid::uniform(6.0, 13, 0.0, 10.0, 21, (cfg.eta_decades / 4).max(2));
    let fine = grid.refined();
    let reach = fine
        .v_values
        .iter()
        .flat_map(|&v| fine.t_values.iter().map(move |&t| pt(v, t)))
        .map(|x| s.params.distance_from_origin(&x))
        .collect::<Result<Vec<_>>>()?;
    let modes = PoissonModes::build(s, ctx.lambda, 3, max_of(reach) + 1.0, MODE_STEP, &ctx.q)?;
    let mut dom = Table::new(
        "domination",
        &["index", "c_dom", "c_dom_fine", "v_argmax", "t_argmax"],
    );
    let mut c_coarse: f64 = 0.0;
    let mut c_fine: f64 = 0.0;
    let mut scaling: f64 = 0.0;
    for (i, f) in family.iter().enumerate() {
        let psi = |n: &NbarPoint| f.boundary.psi(n);
        let u = |x: &XPointNA| modes.evaluate(s, &f.coeffs, x);
        let a = domination_with(s, &psi, &u, l, &grid, &ctx.q)?;
        let b = domination_with(s, &psi, &u, l, &fine, &ctx.q)?;
        c_coarse = c_coarse.max(a.c_dom);
        c_fine = c_fine.max(b.c_dom);
        dom.push(vec![i as f64, a.c_dom, b.c_dom, b.argmax.0, b.argmax.1]);
        if i == 0 {
            let psi7 = |n: &NbarPoint| Ok(f.boundary.psi(n)? * 7.0);
            let u7 = |x: &XPointNA| Ok(modes.evaluate(s, &f.coeffs, x)? * 7.0);
            let s7 = domination_with(s, &psi7, &u7, l, &grid, &ctx.q)?;
            scaling = rel(s7.c_dom, a.c_dom);
        }
    }
    out.tables.push(dom);
    let change = rel(c_coarse, c_fine);
    out.constant("c_dom", c_fine, (c_fine - c_coarse).abs());
    out.constant("c_dom_refinement_change", change, 0.0);
    out.constant("c_dom_scaling_rel_diff", scaling, 0.0);
    out.check("c_dom_finite", c_fine.is_finite());
    out.check("c_dom_grid_stable_10pct", change < 0.10);
    out.check("c_dom_scaling_1e-10", scaling < 1e-10);
    Ok(())
}

// ---------------------------------------------------------------- kernel-compare

fn kernel_comparison(ctx: &Ctx, out: &mut Sink) -> Result<()> {
    let s = &ctx.space;
    let l = ctx.l();
    let coarse_t = linspace(0.0, 10.0, 21);
    let fine_t = linspace(0.0, 10.0, 41);
    let a = kernel_sweep(s, l, &coarse_t, 16, 1e3)?;
    let b = kernel_sweep(s, l, &fine_t, 32, 1e3)?;
    let sqrt_c = s.params.c.sqrt();
    let mut table = Table::new("sweep", &["t", "m", "lhs", "rhs", "ratio"]);
    for &t in &coarse_t {
        for m in log_grid((-t).exp() * (1.0 + 1e-9), 1e3, 16) {
            let (lhs, rhs) = kernel_compare(s, l, t, &NbarPoint::from_v(&[m / sqrt_c]))?;
            table.push(vec![t, m, lhs, rhs, lhs / rhs]);
        }
    }
    out.tables.push(table);
    let change = rel(a.sup_ratio, b.sup_ratio);
    out.constant("sup_ratio", b.sup_ratio, (b.sup_ratio - a.sup_ratio).abs());
    out.constant("argmax_t", b.argmax.0, 0.0);
    out.constant("argmax_m", b.argmax.1, 0.0);
    out.constant(
        "ratio_at_10",
        b.ratio_at_10,
        (b.ratio_at_10 - a.ratio_at_10).abs(),
    );
    out.constant(
        "ratio_at_1000",
        b.ratio_at_1000,
        (b.ratio_at_1000 - a.ratio_at_1000).abs(),
    );
    out.check("sup_finite", b.sup_ratio.is_finite());
    out.check("refinement_stable_10pct", change < 0.10);
    out.check(
        "tail_bounded",
        b.ratio_at_1000 < 10.0 * b.ratio_at_10.max(f64::MIN_POSITIVE),
    );
    Ok(())
}

// ---------------------------------------------------------------- growth

fn growth(ctx: &Ctx, out: &mut Sink) -> Result<()> {
    let s = &ctx.space;
    let p = s.params;
    let cfg = ctx.cfg;
    let r_list = &cfg.r_list;
    let r_last = *r_list.last().unwrap_or(&30.0);
    let anchor = r_list
        .iter()
        .copied()
        .min_by(|a, b| (a - 20.0).abs().total_cmp(&(b - 20.0).abs()))
        .unwrap_or(20.0);
    let grid = NaGrid::new(cfg.v_max, -cfg.t_max, cfg.t_max, 0.2, 0.2);
    let reach = grid_reach(&p, &grid)?.max(r_last + 1.0);
    let cq = coarse(&ctx.q);

    let mut table = Table::new("profiles", &["index", "radius", "value"]);
    let mut summary = Table::new(
        "family",
        &["index", "max_over_anchor", "m_value", "weak_norm", "trend"],
    );
    let mut dev = Vec::new();
    let mut dev_coarse = Vec::new();
    let mut pairs = Vec::new();
    if ctx.l() != 0.0 {
        let family = trig_family(s, ctx.lambda, cfg.seed, 10, 3)?;
        let modes = PoissonModes::build(s, ctx.lambda, 3, reach, MODE_STEP, &ctx.q)?;
        for (i, f) in family.iter().enumerate() {
            let mean = |r: f64| modes.circle_mean_sq(&f.coeffs, r);
            let prof = m_functional(s, mean, r_list, &ctx.q)?;
            let prof_c = m_functional(s, mean, r_list, &cq)?;
            let v = prof.value_at(anchor).unwrap_or(f64::NAN);
            let d = prof.max() / v - 1.0;
            dev.push(d);
            dev_coarse.push(prof_c.max() / prof_c.value_at(anchor).unwrap_or(f64::NAN) - 1.0);
            for &(r, val) in &prof.values {
                table.push(vec![i as f64, r, val]);
            }
            let m = prof.max().sqrt();
            let w = weak_norm_on_x(s, |x: &XPointNA| modes.evaluate(s, &f.coeffs, x), &grid)?;
            summary.push(vec![i as f64, d, m, w, prof.trend]);
            pairs.push((m, w));
        }
        let worst = max_of(dev.iter().copied());
        out.constant(
            "worst_max_over_anchor",
            worst,
            (max_of(dev_coarse.iter().copied()) - worst).abs(),
        );
        out.check(
            "bounded_10pct",
            dev.iter().all(|d| d.is_finite() && *d <= 0.10),
        );

        // one constant, fitted on the first half, must serve the whole family
        let half = pairs.len().div_ceil(2);
        let fit = 1.25 * pairs[..half].iter().map(|(m, w)| m / w).fold(0.0, f64::max);
        let slack = pairs
            .iter()
            .map(|(m, w)| fit * w - m)
            .fold(f64::INFINITY, f64::min);
        out.constant("bound_constant", fit, 0.0);
        out.constant("bound_min_slack", slack, 0.0);
        out.check("single_bound_constant", slack >= 0.0);
    }
    out.tables.push(table);
    out.tables.push(summary);

    // φ₀ contrast: its profile keeps growing with R.
    let modes0 = PoissonModes::build(
        s,
        SpectralParam::real(0.0),
        0,
        r_last + 1.0,
        MODE_STEP,
        &ctx.q,
    )?;
    let one = [(0i64, Complex64::new(1.0, 0.0))];
    let prof0 = m_functional(s, |r| modes0.circle_mean_sq(&one, r), r_list, &ctx.q)?;
    let g0 = prof0.max() / prof0.value_at(anchor).unwrap_or(f64::NAN) - 1.0;
    out.constant("phi0_max_over_anchor", g0, 0.0);
    out.constant("phi0_trend", prof0.trend, 0.0);
    if ctx.l() == 0.0 {
        out.check("expected_fail.phi0_unbounded", g0 > 0.10);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.id().parse::<Experiment>().unwrap(), e);
        }
        assert!("all".parse::<Experiment>().is_err());
    }

    #[test]
    fn rejects_unsupported_configs() {
        let cfg = Config {
            lambda: 0.0,
            ..Config::default()
        };
        assert!(matches!(
            run_experiment(Experiment::Duality, &cfg),
            Err(Error::Config(_))
        ));
        let cfg = Config {
            space: crate::config::SpaceName::H3,
            ..Config::default()
        };
        assert!(matches!(
            run_experiment(Experiment::WeakL2, &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn kernel_compare_is_deterministic() {
        let cfg = Config::default();
        let a = run_experiment(Experiment::KernelCompare, &cfg).unwrap();
        let b = run_experiment(Experiment::KernelCompare, &cfg).unwrap();
        assert!(a.passed(), "{:?}", a.report().failures());
        assert_eq!(a.report().to_json().unwrap(), b.report().to_json().unwrap());
        assert!(a.report().get("sup_ratio.grid_delta").is_some());
    }

    #[test]
    fn violated_criteria_are_named() {
        // an N̄ box of half-width 0.05 loses nearly all of the Poisson mass
        let cfg = Config {
            trunc_radius: 0.05,
            ..Config::default()
        };
        let run = run_experiment(Experiment::Spherical, &cfg).unwrap();
        let r = run.report();
        if run.error.is_some() {
            assert_eq!(r.passed("completed"), Some(false));
        } else {
            assert!(r.failures().contains(&"oracle_1e-6"), "{:?}", r.pass);
        }
        assert!(!run.passed());
    }
}
