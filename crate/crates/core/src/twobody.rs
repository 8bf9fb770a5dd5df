//! Two-body binding in two dimensions.
//!
//! The zero-energy regular solution of `-phi'' - phi'/r + V phi = 0` with
//! `phi(0) = 1` is marched in `t = ln r` on the state `(phi, w = r phi', Q)`
//! with `Q = int_0^r s ln(s) V phi ds`. The integral equation
//! `phi = 1 + ln(r) w - Q` is the consistency check, and `w(R)` is the
//! binding functional `int_0^R r V phi dr`.
//!
//! Bound-state counting at zero energy: interior nodes of `phi` plus one if
//! `phi(R) w(R) < 0` (the outer logarithm then adds a node at large r).

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, bisect_predicate, geomspace};
use crate::potentials::{Family, PotentialSpec, Profile};
use crate::radial::{self, Piece};
use crate::specfun::{self, BesselKind};

/// Default ceiling for the repulsive strength scan.
pub const LAMBDA_PLUS_CEILING: f64 = 1e6;
/// Default number of points in the zero-energy grid.
pub const DEFAULT_GRID_POINTS: usize = 4000;
/// Residual bound for the integral-equation consistency check.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

const TAIL_TOLERANCE: f64 = 1e-15;
const MARCH_ACC: f64 = 0.02;
const MARCH_H_MAX: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub value_at_origin: f64,
    pub outer_slope: f64,
}

/// Sampled radial function. `slopes` holds `r f'(r)` when known, which
/// upgrades interpolation from linear to cubic Hermite in `ln r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Option<Vec<f64>>,
    pub boundary: Boundary,
}

impl RadialFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, slopes: Option<Vec<f64>>, boundary: Boundary) -> Result<Self> {
        if grid.len() < 2 || values.len() != grid.len() {
            return Err(Error::InconsistentGrid(format!(
                "{} grid points for {} values",
                grid.len(),
                values.len()
            )));
        }
        if slopes.as_ref().is_some_and(|s| s.len() != grid.len()) {
            return Err(Error::InconsistentGrid("slope count differs from grid".into()));
        }
        if grid[0] < 0.0 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InconsistentGrid("grid must be nonnegative and strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InconsistentGrid("non-finite sample".into()));
        }
        Ok(RadialFunction {
            grid,
            values,
            slopes,
            boundary,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let g = &self.grid;
        let n = g.len();
        if r <= g[0] {
            return self.values[0];
        }
        if r >= g[n - 1] {
            return self.values[n - 1];
        }
        let k = g.partition_point(|&x| x <= r);
        match &self.slopes {
            Some(s) if g[k - 1] > 0.0 => hermite_log(
                (g[k - 1].ln(), self.values[k - 1], s[k - 1]),
                (g[k].ln(), self.values[k], s[k]),
                r.ln(),
            ),
            _ => numerics::interp(g, &self.values, r),
        }
    }
}

/// Cubic Hermite in `t` from `(t, f, df/dt)` end data.
fn hermite_log(a: (f64, f64, f64), b: (f64, f64, f64), t: f64) -> f64 {
    let h = b.0 - a.0;
    let s = (t - a.0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * a.1
        + (s3 - 2.0 * s2 + s) * h * a.2
        + (-2.0 * s3 + 3.0 * s2) * b.1
        + (s3 - s2) * h * b.2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    IntegralEq,
    AnalyticBarrier,
    AnalyticCore,
    AnalyticDeltaShell,
    WeakLimit,
    OdeOracle,
    Svm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::IntegralEq => "IntegralEq",
            Method::AnalyticBarrier => "AnalyticBarrier",
            Method::AnalyticCore => "AnalyticCore",
            Method::AnalyticDeltaShell => "AnalyticDeltaShell",
            Method::WeakLimit => "WeakLimit",
            Method::OdeOracle => "OdeOracle",
            Method::Svm => "Svm",
        }
    }
}

/// `lambda_plus_cr` is `f64::INFINITY` when the pair binds for every
/// repulsion up to the ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub lambda_minus: f64,
    pub lambda_plus_cr: f64,
    pub method: Method,
    pub residual: f64,
}

impl ThresholdPoint {
    pub fn is_unbounded(&self) -> bool {
        self.lambda_plus_cr.is_infinite()
    }
}

pub(crate) fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.12e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve {
    pub points: Vec<ThresholdPoint>,
    /// Attraction beyond which the pair binds for any repulsion.
    pub lambda_minus_cr: Option<f64>,
}

impl ThresholdCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "lambda_minus,lambda_plus_cr,method,residual")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_value(p.lambda_minus),
                fmt_value(p.lambda_plus_cr),
                p.method.as_str(),
                fmt_value(p.residual)
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HPoint {
    pub s: f64,
    pub h: f64,
}

pub fn write_h_csv<W: Write>(points: &[HPoint], mut out: W) -> Result<()> {
    writeln!(out, "s,h")?;
    for p in points {
        writeln!(out, "{},{}", fmt_value(p.s), fmt_value(p.h))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundState2 {
    pub energy: f64,
    pub rms_radius: f64,
    pub wavefunction: RadialFunction,
    pub node_count: usize,
}

// ---------------------------------------------------------------------------
// zero-energy march

#[derive(Debug, Clone, Default)]
pub(crate) struct ZeroMarch {
    pub nodes: usize,
    pub phi: f64,
    pub w: f64,
    pub log_scale: f64,
    /// `(r, phi, w, Q)` at the requested output radii.
    pub samples: Vec<[f64; 4]>,
}

impl ZeroMarch {
    pub fn count(&self) -> usize {
        self.nodes + usize::from(self.phi * self.w < 0.0)
    }
}

fn segment_of(profile: &Profile) -> impl Fn(f64) -> usize + '_ {
    move |t: f64| profile.segment_index(t.exp())
}

/// March the zero-energy solution from the origin to `r_end`, sampling at
/// every radius in `outputs` (sorted, positive, at most `r_end`).
pub(crate) fn march_zero(profile: &Profile, outputs: &[f64], r_end: f64) -> ZeroMarch {
    let r0 = outputs.first().copied().unwrap_or(r_end).min(r_end * 1e-6);
    let t_start = r0.ln();
    let t_end = r_end.ln();
    let mut cuts: Vec<f64> = profile.breakpoints().iter().map(|b| b.ln()).collect();
    cuts.extend(outputs.iter().map(|r| r.ln()));
    let pieces = radial::pieces(t_start, t_end, &cuts, 0.25, segment_of(profile));

    let v0 = profile.eval_in(0, r0);
    let mut phi = 1.0 + 0.25 * v0 * r0 * r0;
    let mut w = 0.5 * v0 * r0 * r0;
    let mut q = v0 * (0.5 * r0 * r0 * t_start - 0.25 * r0 * r0);
    let mut out = ZeroMarch::default();
    let mut inv_scale = 1.0;
    let mut next_out = 0;
    let mut last_sign = 1.0;
    let record = |out: &mut ZeroMarch, r: f64, phi: f64, w: f64, q: f64, next: &mut usize| {
        while *next < outputs.len() && outputs[*next] <= r * (1.0 + 1e-12) {
            out.samples.push([outputs[*next], phi, w, q]);
            *next += 1;
        }
    };
    record(&mut out, r0, phi, w, q, &mut next_out);
    for p in &pieces {
        let Piece { t0, t1, seg } = *p;
        let len = t1 - t0;
        let keff = (0..=8)
            .map(|k| {
                let t = t0 + len * k as f64 / 8.0;
                let r = t.exp();
                r * profile.eval_in(seg, r).abs().sqrt()
            })
            .fold(0.0, f64::max);
        let h_target = MARCH_H_MAX.min(MARCH_ACC / keff.max(1e-300));
        let n = (len / h_target).ceil().max(1.0) as usize;
        let h = len / n as f64;
        let rhs = |t: f64, phi: f64| {
            let r2 = (2.0 * t).exp();
            let s = r2 * profile.eval_in(seg, t.exp()) * phi;
            (s, t * s)
        };
        for k in 0..n {
            let t = t0 + k as f64 * h;
            let (a_w, a_q) = rhs(t, phi);
            let a_p = w;
            let (b_w, b_q) = rhs(t + 0.5 * h, phi + 0.5 * h * a_p);
            let b_p = w + 0.5 * h * a_w;
            let (c_w, c_q) = rhs(t + 0.5 * h, phi + 0.5 * h * b_p);
            let c_p = w + 0.5 * h * b_w;
            let (d_w, d_q) = rhs(t + h, phi + h * c_p);
            let d_p = w + h * c_w;
            phi += h / 6.0 * (a_p + 2.0 * b_p + 2.0 * c_p + d_p);
            w += h / 6.0 * (a_w + 2.0 * b_w + 2.0 * c_w + d_w);
            q += h / 6.0 * (a_q + 2.0 * b_q + 2.0 * c_q + d_q);
            if phi != 0.0 {
                if phi.signum() != last_sign {
                    out.nodes += 1;
                }
                last_sign = phi.signum();
            }
            if phi.abs() > 1e200 || w.abs() > 1e200 {
                phi *= 1e-200;
                w *= 1e-200;
                q *= 1e-200;
                inv_scale *= 1e-200;
                out.log_scale += 200.0 * std::f64::consts::LN_10;
            }
        }
        record(&mut out, t1.exp(), phi, w, q, &mut next_out);
    }
    let _ = inv_scale;
    // a node landing exactly on the end point is not interior
    out.phi = phi;
    out.w = w;
    out
}

fn zero_count(profile: &Profile) -> ZeroMarch {
    let r_end = profile.effective_range(TAIL_TOLERANCE);
    march_zero(profile, &[], r_end)
}

/// Number of two-body bound states of `spec` from the zero-energy solution.
pub fn zero_energy_bound_count(spec: &PotentialSpec) -> Result<usize> {
    Ok(zero_count(&spec.profile()?).count())
}

/// Geometric grid from `R 1e-6` to the range `R`, with every breakpoint
/// included and extra points where the local wavenumber is large.
pub fn default_grid(spec: &PotentialSpec, points: usize) -> Result<Vec<f64>> {
    let profile = spec.profile()?;
    let range = profile.effective_range(TAIL_TOLERANCE);
    let mut grid = geomspace(range * 1e-6, range, points.max(2));
    grid.extend(profile.breakpoints().into_iter().filter(|&b| b < range));
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    let mut refined = Vec::with_capacity(grid.len());
    refined.push(grid[0]);
    for w in grid.windows(2) {
        let (t0, t1) = (w[0].ln(), w[1].ln());
        let seg = profile.segment_index((0.5 * (t0 + t1)).exp());
        let keff = (0..=4)
            .map(|k| {
                let r = (t0 + (t1 - t0) * k as f64 / 4.0).exp();
                r * profile.eval_in(seg, r).abs().sqrt()
            })
            .fold(0.0, f64::max);
        let n = ((t1 - t0) * keff / 0.01).ceil().max(1.0) as usize;
        for k in 1..n {
            refined.push((t0 + (t1 - t0) * k as f64 / n as f64).exp());
        }
        refined.push(w[1]);
    }
    Ok(refined)
}

/// Zero-energy regular solution sampled on `grid`, normalized to 1 at the
/// origin. The result is checked against the integral equation by
/// independent quadrature of the sampled function.
pub fn zero_energy_solution(spec: &PotentialSpec, grid: &[f64]) -> Result<RadialFunction> {
    let profile = spec.profile()?;
    let range = profile.effective_range(TAIL_TOLERANCE);
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return Err(Error::InconsistentGrid(
            "grid must be nonnegative, strictly increasing, with at least two points".into(),
        ));
    }
    let r_last = *grid.last().unwrap();
    if r_last < range * (1.0 - 1e-12) {
        return Err(Error::InconsistentGrid(format!(
            "grid ends at {r_last} inside the potential range {range}"
        )));
    }
    let positive: Vec<f64> = grid.iter().copied().filter(|&r| r > 0.0).collect();
    let m = march_zero(&profile, &positive, r_last);
    if m.log_scale > 0.0 {
        return Err(Error::Overflow {
            what: "zero-energy solution",
            x: r_last,
        });
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut slopes = Vec::with_capacity(grid.len());
    if grid[0] == 0.0 {
        values.push(1.0);
        slopes.push(0.0);
    }
    for s in &m.samples {
        values.push(s[1]);
        slopes.push(s[2]);
    }
    let residual = integral_equation_residual(&profile, &positive, &m.samples);
    if residual > RESIDUAL_TOLERANCE {
        return Err(Error::GridTooCoarse {
            residual,
            tolerance: RESIDUAL_TOLERANCE,
        });
    }
    let outer_slope = m.w / r_last;
    RadialFunction::new(
        grid.to_vec(),
        values,
        Some(slopes),
        Boundary {
            value_at_origin: 1.0,
            outer_slope,
        },
    )
}

/// Max over the grid of `|phi - 1 - ln(r) W + Q| / max(1, |phi|)` with `W`
/// and `Q` re-integrated from the samples by Hermite-Gauss quadrature.
fn integral_equation_residual(profile: &Profile, radii: &[f64], samples: &[[f64; 4]]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut w_int = samples[0][2];
    let mut q_int = samples[0][3];
    let mut worst: f64 = 0.0;
    for k in 1..samples.len() {
        let (ta, tb) = (radii[k - 1].ln(), radii[k].ln());
        let a = (ta, samples[k - 1][1], samples[k - 1][2]);
        let b = (tb, samples[k][1], samples[k][2]);
        let dw = numerics::gauss_legendre(
            |t| (2.0 * t).exp() * profile.eval(t.exp()) * hermite_log(a, b, t),
            ta,
            tb,
            1,
        );
        let dq = numerics::gauss_legendre(
            |t| t * (2.0 * t).exp() * profile.eval(t.exp()) * hermite_log(a, b, t),
            ta,
            tb,
            1,
        );
        w_int += dw;
        q_int += dq;
        let phi = samples[k][1];
        let res = (phi - 1.0 - tb * w_int + q_int).abs() / phi.abs().max(1.0);
        worst = worst.max(res);
    }
    worst
}

/// `int_0^R r V phi dr` by quadrature of the sampled solution; negative
/// means at least one bound state when `phi` has no node.
pub fn binding_functional(spec: &PotentialSpec, phi: &RadialFunction) -> Result<f64> {
    let profile = spec.profile()?;
    let range = profile.effective_range(TAIL_TOLERANCE);
    let slopes = phi
        .slopes
        .as_ref()
        .ok_or_else(|| Error::InconsistentGrid("binding functional needs r phi' samples".into()))?;
    let g = &phi.grid;
    if *g.last().unwrap() < range * (1.0 - 1e-12) {
        return Err(Error::InconsistentGrid(format!(
            "solution sampled to {} but the potential extends to {range}",
            g.last().unwrap()
        )));
    }
    let first = g.iter().position(|&r| r > 0.0).unwrap_or(0);
    // below the first sample r phi' equals the accumulated integral exactly
    let mut total = slopes[first];
    for k in first + 1..g.len() {
        let (ta, tb) = (g[k - 1].ln(), g[k].ln());
        let a = (ta, phi.values[k - 1], slopes[k - 1]);
        let b = (tb, phi.values[k], slopes[k]);
        total += numerics::gauss_legendre(
            |t| (2.0 * t).exp() * profile.eval(t.exp()) * hermite_log(a, b, t),
            ta,
            tb,
            1,
        );
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// thresholds in the repulsive strength

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdOptions {
    /// Relative bracket width at which bisection stops.
    pub tol: f64,
    pub ceiling: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            tol: 1e-10,
            ceiling: LAMBDA_PLUS_CEILING,
        }
    }
}

/// Outcome of a monotone threshold search on a strength parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Search {
    /// Bound on `[0, lo]`, unbound from `hi` up.
    Bracket { lo: f64, hi: f64 },
    /// Still bound at the ceiling.
    Unbounded,
}

/// Locate the largest strength at which `bound` holds, assuming bound at 0
/// and unbound above the threshold. Non-monotone samples are reported.
pub fn search_threshold(
    mut bound: impl FnMut(f64) -> Result<bool>,
    guess: f64,
    ceiling: f64,
    tol: f64,
) -> Result<Search> {
    let mut hi = guess.clamp(1e-8, ceiling);
    let mut lo = 0.0;
    if bound(hi)? {
        loop {
            lo = hi;
            if hi >= ceiling {
                return Ok(Search::Unbounded);
            }
            hi = (hi * 2.0).min(ceiling);
            if !bound(hi)? {
                break;
            }
        }
    } else {
        let mut probe = hi;
        loop {
            probe *= 0.5;
            if probe < 1e-12 {
                break;
            }
            if bound(probe)? {
                lo = probe;
                break;
            }
            hi = probe;
        }
    }
    // monotonicity spot checks on both sides of the bracket
    for k in 1..=4 {
        let x = hi * (1.0 + k as f64);
        if x <= ceiling && bound(x)? {
            return Err(Error::NonMonotone { at: x });
        }
    }
    if lo > 0.0 {
        for k in 1..=3 {
            let x = lo / (1.0 + k as f64);
            if !bound(x)? {
                return Err(Error::NonMonotone { at: x });
            }
        }
    }
    if lo == 0.0 {
        return Ok(Search::Bracket { lo: 0.0, hi });
    }
    let (lo, hi) = bisect_predicate(&mut bound, lo, hi, tol, true)?;
    Ok(Search::Bracket { lo, hi })
}

fn point_from_search(lambda_minus: f64, s: Search, method: Method) -> ThresholdPoint {
    match s {
        Search::Bracket { lo, hi } => ThresholdPoint {
            lambda_minus,
            lambda_plus_cr: 0.5 * (lo + hi),
            method,
            residual: if hi > 0.0 { (hi - lo) / hi } else { 0.0 },
        },
        Search::Unbounded => ThresholdPoint {
            lambda_minus,
            lambda_plus_cr: f64::INFINITY,
            method,
            residual: 0.0,
        },
    }
}

fn initial_guess(family: &Family, lambda_minus: f64) -> f64 {
    weak_limit_lambda_plus(family, lambda_minus)
        .map(|g| g.max(1e-6))
        .unwrap_or(1.0)
}

/// Critical repulsion from the integral-equation solver (analytic branch
/// for delta shells).
pub fn critical_lambda_plus(
    family: &Family,
    lambda_minus: f64,
    opts: &ThresholdOptions,
) -> Result<ThresholdPoint> {
    if let Family::DeltaShell { c, d } = family {
        return Ok(ThresholdPoint {
            lambda_minus,
            lambda_plus_cr: delta_shell_critical(lambda_minus, *c, *d, opts.ceiling),
            method: Method::AnalyticDeltaShell,
            residual: 0.0,
        });
    }
    if lambda_minus <= 0.0 {
        return Ok(ThresholdPoint {
            lambda_minus,
            lambda_plus_cr: 0.0,
            method: Method::IntegralEq,
            residual: 0.0,
        });
    }
    if family.is_purely_attractive()? {
        return Ok(point_from_search(lambda_minus, Search::Unbounded, Method::IntegralEq));
    }
    let s = search_threshold(
        |lp| Ok(zero_count(&family.spec(lambda_minus, lp)?.profile()?).count() > 0),
        initial_guess(family, lambda_minus),
        opts.ceiling,
        opts.tol,
    )?;
    Ok(point_from_search(lambda_minus, s, Method::IntegralEq))
}

/// Critical repulsion from the negative-energy ODE oracle: bisection on
/// emptiness of the bound-state list at `E -> 0-`.
pub fn critical_lambda_plus_ode(
    family: &Family,
    lambda_minus: f64,
    opts: &ThresholdOptions,
) -> Result<ThresholdPoint> {
    if matches!(family, Family::DeltaShell { .. }) {
        return Err(Error::AnalyticOnly);
    }
    let s = search_threshold(
        |lp| Ok(Oracle::new(&family.spec(lambda_minus, lp)?)?.count(0.0) > 0),
        initial_guess(family, lambda_minus),
        opts.ceiling,
        opts.tol,
    )?;
    Ok(point_from_search(lambda_minus, s, Method::OdeOracle))
}

/// Critical attraction at fixed repulsion: the smallest `lambda_minus`
/// that binds. Uses the integral-equation count.
pub fn critical_lambda_minus(family: &Family, lambda_plus: f64, tol: f64) -> Result<f64> {
    let unbound = |lm: f64| -> Result<bool> {
        Ok(zero_count(&family.spec(lm, lambda_plus)?.profile()?).count() == 0)
    };
    match search_threshold(unbound, 1.0, 1e6, tol)? {
        Search::Bracket { lo, hi } => Ok(0.5 * (lo + hi)),
        Search::Unbounded => Err(Error::RootNotFound(format!(
            "no binding up to lambda_minus = 1e6 at lambda_plus = {lambda_plus}"
        ))),
    }
}

/// Leading weak-coupling prediction `-lambda_minus int V- r dr / int V+ r dr`.
pub fn weak_limit_lambda_plus(family: &Family, lambda_minus: f64) -> Result<f64> {
    let (plus, minus) = family.unit_volumes()?;
    if plus == 0.0 {
        return Err(Error::ZeroRepulsiveVolume);
    }
    Ok(-lambda_minus * minus / plus)
}

pub fn weak_limit_point(family: &Family, lambda_minus: f64) -> Result<ThresholdPoint> {
    Ok(ThresholdPoint {
        lambda_minus,
        lambda_plus_cr: weak_limit_lambda_plus(family, lambda_minus)?,
        method: Method::WeakLimit,
        residual: 0.0,
    })
}

// ---------------------------------------------------------------------------
// delta shells

/// Zero-energy `(phi(d), w(d+))` for the delta-shell potential.
pub fn delta_shell_zero_energy(lambda_plus: f64, lambda_minus: f64, c: f64, d: f64) -> (f64, f64) {
    let p = lambda_plus * c * c / (d * d);
    let phi_d = 1.0 + p * (d / c).ln();
    (phi_d, p - lambda_minus * phi_d)
}

/// Closed-form critical repulsion for delta shells at radii `c <= d`.
pub fn delta_shell_critical(lambda_minus: f64, c: f64, d: f64, ceiling: f64) -> f64 {
    let denom = 1.0 - lambda_minus * (d / c).ln();
    if denom <= 0.0 {
        return f64::INFINITY;
    }
    let v = d * d / (c * c) * lambda_minus / denom;
    if v > ceiling {
        f64::INFINITY
    } else {
        v
    }
}

// ---------------------------------------------------------------------------
// analytic square models

fn check_radii(rs: f64, rl: f64) -> Result<()> {
    if !(rs > 0.0 && rl > rs && rl.is_finite()) {
        return Err(Error::Domain {
            what: "square-model radii",
            x: rs,
        });
    }
    Ok(())
}

/// Barrier-model residual divided by `exp(k2 (Rl - Rs))`; same sign and
/// roots as the unscaled residual.
fn barrier_residual_scaled(lambda_minus: f64, lambda_plus: f64, rs: f64, rl: f64) -> f64 {
    let k1 = lambda_minus.sqrt() / rs;
    let k2 = lambda_plus.sqrt() / rs;
    let (xs, xl) = (k2 * rs, k2 * rl);
    let (j0, j1) = (specfun::j0(k1 * rs), specfun::j1(k1 * rs));
    let (i0s, i1s) = specfun::i01e(xs);
    let (k0s, k1s) = specfun::k01e(xs);
    let a = k2 * j0 * k1s - k1 * j1 * k0s;
    let b = k2 * j0 * i1s + k1 * j1 * i0s;
    let i1l = specfun::i1e(xl);
    let k1l = specfun::k1e(xl);
    a * i1l - b * k1l * (-2.0 * k2 * (rl - rs)).exp()
}

/// `a I1(k2 Rl) - b K1(k2 Rl)` for the square well with outer barrier;
/// negative when bound (nodeless case), zero at threshold.
pub fn analytic_threshold_barrier(lambda_minus: f64, lambda_plus: f64, rs: f64, rl: f64) -> Result<f64> {
    check_radii(rs, rl)?;
    if !(lambda_plus > 0.0) || lambda_minus < 0.0 {
        return Err(Error::Domain {
            what: "barrier strengths",
            x: lambda_plus,
        });
    }
    let growth = lambda_plus.sqrt() / rs * (rl - rs);
    if growth > 700.0 {
        return Err(Error::Overflow {
            what: "barrier residual",
            x: growth,
        });
    }
    Ok(barrier_residual_scaled(lambda_minus, lambda_plus, rs, rl) * growth.exp())
}

fn core_residual_scaled(lambda_plus: f64, lambda_minus: f64, rs: f64, rl: f64) -> f64 {
    let k1 = lambda_plus.sqrt() / rs;
    let k2 = lambda_minus.sqrt() / rs;
    let y = k1 * rs;
    let x = k2 * rs;
    let big_x = k2 * rl;
    let (i0, i1) = specfun::i01e(y);
    let (j0x, j1x, y0x, y1x) = specfun::jy01(x);
    let (_, j1l, _, y1l) = specfun::jy01(big_x);
    let a = k2 * i0 * y1x + k1 * i1 * y0x;
    let b = k2 * j1x * i0 + k1 * j0x * i1;
    0.5 * PI * x * (a * j1l - b * y1l)
}

/// `phi'(Rl)` of the core-well model, `(pi x/2)(a J1(k2 Rl) - b Y1(k2 Rl))`
/// with `x = k2 Rs`; negative when bound (nodeless case).
pub fn analytic_threshold_core(lambda_plus: f64, lambda_minus: f64, rs: f64, rl: f64) -> Result<f64> {
    check_radii(rs, rl)?;
    if !(lambda_minus > 0.0) || lambda_plus < 0.0 {
        return Err(Error::Domain {
            what: "core-well strengths",
            x: lambda_minus,
        });
    }
    let y = lambda_plus.sqrt();
    if y > 700.0 {
        return Err(Error::Overflow {
            what: "core residual",
            x: y,
        });
    }
    Ok(core_residual_scaled(lambda_plus, lambda_minus, rs, rl) * y.exp())
}

/// Root in `lambda_plus` of the analytic residual for a square family.
pub fn analytic_critical_lambda_plus(
    family: &Family,
    lambda_minus: f64,
    opts: &ThresholdOptions,
) -> Result<ThresholdPoint> {
    let (res, method): (Box<dyn Fn(f64) -> f64>, Method) = match *family {
        Family::SquareWellBarrier { rs, rl } => {
            check_radii(rs, rl)?;
            (
                Box::new(move |lp| barrier_residual_scaled(lambda_minus, lp, rs, rl)),
                Method::AnalyticBarrier,
            )
        }
        Family::CoreWell { rs, rl } => {
            check_radii(rs, rl)?;
            if lambda_minus <= 0.0 {
                return Ok(ThresholdPoint {
                    lambda_minus,
                    lambda_plus_cr: 0.0,
                    method: Method::AnalyticCore,
                    residual: 0.0,
                });
            }
            (
                Box::new(move |lp| core_residual_scaled(lp, lambda_minus, rs, rl)),
                Method::AnalyticCore,
            )
        }
        _ => {
            return Err(Error::Unsupported(
                "analytic thresholds exist only for the square models".into(),
            ))
        }
    };
    if res(opts.ceiling) < 0.0 {
        return Ok(point_from_search(lambda_minus, Search::Unbounded, method));
    }
    let lo = 1e-9 * lambda_minus.max(1e-3);
    let xs = geomspace(lo, opts.ceiling, 600);
    let vals: Vec<f64> = xs.iter().map(|&x| res(x)).collect();
    let k = (1..xs.len()).rev().find(|&k| vals[k - 1] < 0.0 && vals[k] >= 0.0);
    let Some(k) = k else {
        // unbound for every sampled repulsion
        return Ok(ThresholdPoint {
            lambda_minus,
            lambda_plus_cr: 0.0,
            method,
            residual: 0.0,
        });
    };
    let (mut a, mut b) = (xs[k - 1], xs[k]);
    while (b - a) > opts.tol.min(1e-12) * b {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if res(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(ThresholdPoint {
        lambda_minus,
        lambda_plus_cr: 0.5 * (a + b),
        method,
        residual: (b - a) / b,
    })
}

/// Attraction beyond which a square family binds for any repulsion.
pub fn asymptote_lambda_minus(family: &Family) -> Result<f64> {
    match *family {
        Family::SquareWellBarrier { .. } => {
            let z = specfun::bessel_zero(BesselKind::J0, 1)?;
            Ok(z * z)
        }
        Family::CoreWell { rs, rl } => {
            let s = rs / rl;
            Ok(h_of_s(s)? * s * s / (1.0 - s * s))
        }
        Family::DeltaShell { c, d } => Ok(1.0 / (d / c).ln()),
        Family::Shape { .. } => Err(Error::Unsupported(
            "asymptote is analytic only for square models and delta shells".into(),
        )),
    }
}

/// Deep-core residual `J0(sX) Y1(X) - J1(X) Y0(sX)`, `X = k2 Rl`.
pub fn deep_core_residual(s: f64, big_x: f64) -> f64 {
    let (j0s, _, y0s, _) = specfun::jy01(s * big_x);
    let (_, j1l, _, y1l) = specfun::jy01(big_x);
    j0s * y1l - j1l * y0s
}

/// First root of [`deep_core_residual`] in `X`.
pub fn deep_core_root(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain { what: "h(s)", x: s });
    }
    let top = 10.0 / (1.0 - s) + 10.0;
    if top > 1e7 {
        return Err(Error::RootNotFound(format!("s = {s} too close to 1")));
    }
    let xs = geomspace(1e-4, top, 6000);
    numerics::first_root_on(|x| deep_core_residual(s, x), &xs, 1e-15 * top)
        .ok_or_else(|| Error::RootNotFound(format!("no deep-core root for s = {s}")))
}

/// `h = k2^2 (Rl^2 - Rs^2)` at the deep-core threshold.
pub fn h_of_s(s: f64) -> Result<f64> {
    let x = deep_core_root(s)?;
    Ok(x * x * (1.0 - s * s))
}

pub fn h_curve(s_grid: &[f64]) -> Result<Vec<HPoint>> {
    s_grid
        .iter()
        .map(|&s| Ok(HPoint { s, h: h_of_s(s)? }))
        .collect()
}

// ---------------------------------------------------------------------------
// hard-wall limits with a selectable centrifugal term

/// Radial operator flavour: `Two` keeps the 2D `phi'/r` term; `SWave` is
/// the 1D (odd) or 3D s-wave equation `u'' = (V - E) u` with `u(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dim {
    Two,
    SWave,
}

const WALL_STEPS: usize = 20000;

/// Critical `k1 Rs` of the well when the barrier becomes a hard wall at `Rs`.
pub fn deep_barrier_k1rs(dim: Dim) -> Result<f64> {
    let end_value = |k: f64| {
        let q = move |_r: f64| -k * k;
        match dim {
            Dim::Two => {
                let r0 = 1e-8;
                rk4_end(q, 1.0, r0, 1.0, 1.0 - 0.25 * k * k * r0 * r0, -0.5 * k * k * r0).0
            }
            Dim::SWave => rk4_end(q, 0.0, 0.0, 1.0, 0.0, 1.0).0,
        }
    };
    let ks: Vec<f64> = (1..=100).map(|i| 0.1 * i as f64).collect();
    numerics::first_root_on(end_value, &ks, 1e-14)
        .ok_or_else(|| Error::RootNotFound("deep-barrier root".into()))
}

/// Critical `k2` of the shell `Rs < r < Rl` behind a hard core, with zero
/// slope at `Rl`.
pub fn deep_core_k2(dim: Dim, rs: f64, rl: f64) -> Result<f64> {
    check_radii(rs, rl)?;
    let c = if dim == Dim::Two { 1.0 } else { 0.0 };
    let end_slope = |k: f64| rk4_end(move |_r: f64| -k * k, c, rs, rl, 0.0, 1.0).1;
    let step = 0.02 / (rl - rs);
    let ks: Vec<f64> = (1..=2000).map(|i| step * i as f64).collect();
    numerics::first_root_on(end_slope, &ks, 1e-14)
        .ok_or_else(|| Error::RootNotFound("deep-core root".into()))
}

fn rk4_end(q: impl Fn(f64) -> f64, c: f64, r0: f64, r1: f64, u0: f64, du0: f64) -> (f64, f64) {
    let (u, du, _) = radial::rk4_radial(q, c, r0, r1, u0, du0, WALL_STEPS);
    (u, du)
}

// ---------------------------------------------------------------------------
// negative-energy ODE oracle

pub(crate) struct Oracle {
    profile: Profile,
    r_match: f64,
    pieces: Vec<Piece>,
    v_min: f64,
}

const ORACLE_ACC: f64 = 0.004;
const ORACLE_H_MAX: f64 = 0.004;

impl Oracle {
    pub fn new(spec: &PotentialSpec) -> Result<Self> {
        Self::with_profile(spec.profile()?, 1.0)
    }

    fn with_profile(profile: Profile, stretch: f64) -> Result<Self> {
        let r_match = profile.effective_range(TAIL_TOLERANCE) * stretch;
        let r0 = r_match * 1e-7;
        let cuts: Vec<f64> = profile.breakpoints().iter().map(|b| b.ln()).collect();
        let pieces = radial::pieces(r0.ln(), r_match.ln(), &cuts, 0.5, segment_of(&profile));
        let v_min = profile.min_value(r_match);
        Ok(Oracle {
            profile,
            r_match,
            pieces,
            v_min,
        })
    }

    fn shoot(&self, energy: f64, keep: bool) -> radial::Shot {
        let r0 = self.pieces[0].t0.exp();
        let v0 = self.profile.eval_in(0, r0) - energy;
        let y0 = 1.0 + 0.25 * v0 * r0 * r0;
        let dy0 = 0.5 * v0 * r0 * r0;
        let prof = &self.profile;
        radial::numerov(
            &self.pieces,
            |seg, t| (2.0 * t).exp() * (prof.eval_in(seg, t.exp()) - energy),
            y0,
            dy0,
            ORACLE_H_MAX,
            ORACLE_ACC,
            keep,
        )
    }

    /// Outer log-derivative `r K0'(kr)/K0(kr)` of the decaying solution.
    fn outer_log_derivative(&self, energy: f64) -> f64 {
        if energy >= 0.0 {
            return 0.0;
        }
        let x = (-energy).sqrt() * self.r_match;
        let (k0, k1) = specfun::k01e(x);
        -x * k1 / k0
    }

    /// Number of bound states strictly below `energy` (`0` means `0-`).
    pub fn count(&self, energy: f64) -> usize {
        let shot = self.shoot(energy, false);
        let l_out = self.outer_log_derivative(energy);
        let g = shot.y_end * (shot.dy_end - l_out * shot.y_end);
        shot.nodes + usize::from(g < 0.0 || (energy >= 0.0 && shot.y_end * shot.dy_end < 0.0))
    }

    /// Energy of state `k` (0-based) by bisection in `ln(-E)`.
    fn energy(&self, k: usize) -> Result<f64> {
        let top = (-self.v_min).max(1e-300).ln() + 1e-9;
        let bottom = (1e-300f64).ln();
        let (lo, hi) = numerics::bisect_predicate_abs(
            |x: f64| Ok::<_, Error>(self.count(-x.exp()) > k),
            bottom,
            top,
            1e-13,
        )?;
        Ok(-(0.5 * (lo + hi)).exp())
    }

    fn state(&self, energy: f64) -> Result<BoundState2> {
        let shot = self.shoot(energy, true);
        let kappa = (-energy).sqrt();
        let x = kappa * self.r_match;
        let (k0, k1) = specfun::k01e(x);
        // tail phi = y_end K0(kappa r)/K0(kappa R)
        let amp2 = shot.y_end * shot.y_end / (k0 * k0);
        let tail_norm = amp2 * 0.5 * x * x * (k1 * k1 - k0 * k0) / (kappa * kappa);
        let tail_r2 = amp2
            * -(x.powi(4) / 6.0 * (k0 * k0 - k1 * k1) - x.powi(3) / 3.0 * k0 * k1 - x * x / 3.0 * k1 * k1)
            / kappa.powi(4);
        let mut norm = 0.0;
        let mut r2 = 0.0;
        for i in 1..shot.t.len() {
            let (ta, tb) = (shot.t[i - 1], shot.t[i]);
            let fa = shot.y[i - 1] * shot.y[i - 1];
            let fb = shot.y[i] * shot.y[i];
            let (ea, eb) = ((2.0 * ta).exp(), (2.0 * tb).exp());
            norm += 0.5 * (tb - ta) * (fa * ea + fb * eb);
            r2 += 0.5 * (tb - ta) * (fa * ea * ea + fb * eb * eb);
        }
        norm += tail_norm;
        r2 += tail_r2;
        let scale = 1.0 / norm.sqrt();
        let mut grid: Vec<f64> = shot.t.iter().map(|t| t.exp()).collect();
        let mut values: Vec<f64> = shot.y.iter().map(|v| v * scale).collect();
        // append a few tail samples
        let y_end = shot.y_end * scale;
        for j in 1..=40 {
            let r = self.r_match * (1.0 + 0.25 * j as f64);
            if let Some(&last) = grid.last() {
                if r <= last {
                    continue;
                }
            }
            let ratio = specfun::k0e(kappa * r) / k0 * (-(kappa * (r - self.r_match))).exp();
            grid.push(r);
            values.push(y_end * ratio);
        }
        let node_count = shot.nodes;
        let outer = values[values.len() - 1];
        let wavefunction = RadialFunction::new(
            grid,
            values,
            None,
            Boundary {
                value_at_origin: scale * shot.y.first().copied().unwrap_or(1.0),
                outer_slope: -kappa * outer * specfun::k1e(kappa * self.r_match * 11.0)
                    / specfun::k0e(kappa * self.r_match * 11.0),
            },
        )?;
        Ok(BoundState2 {
            energy,
            rms_radius: (r2 / norm).sqrt(),
            wavefunction,
            node_count,
        })
    }
}

/// Bound states by Numerov shooting at `E < 0`, matched to `K0(kappa r)`
/// at the edge of the potential; energies bracketed by node counting.
pub fn bound_states(spec: &PotentialSpec, max_states: usize) -> Result<Vec<BoundState2>> {
    let oracle = Oracle::new(spec)?;
    let n = oracle.count(0.0).min(max_states);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let e = oracle.energy(k)?;
        out.push(oracle.state(e)?);
    }
    if let Some(first) = out.first() {
        // matching-radius sensitivity: a stretched domain must agree
        let wide = Oracle::with_profile(oracle.profile.clone(), 2.0)?;
        let e2 = wide.energy(0)?;
        let rel = ((e2 - first.energy) / first.energy).abs();
        if rel > 1e-6 {
            return Err(Error::NonConvergence(format!(
                "ground energy moves by {rel:e} when the matching radius is doubled"
            )));
        }
    }
    Ok(out)
}

/// Oracle count of bound states below `energy` (`0` means `0-`).
pub fn bound_state_count(spec: &PotentialSpec, energy: f64) -> Result<usize> {
    Ok(Oracle::new(spec)?.count(energy))
}
