//! Single-channel hyperradial problem for three identical bosons.
//!
//! Channel potentials are stored as `U = 2 V_eff` (units 1/length^2 with
//! `hbar = m = 1`) and the hyperradial equation is
//! `-f'' + (nu^2 - 1/4)/rho^2 f + (U - 2E) f = 0` with `nu = 1` in 2D and
//! `nu = 2` in 3D. It is solved in `t = ln rho` for `v = f/sqrt(rho)`,
//! `v_tt = (nu^2 + rho^2 (U - 2E)) v`.

use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, bisect_predicate, geomspace};
use crate::potentials::PotentialSpec;
use crate::radial::{self, Piece};
use crate::specfun::{self, BesselKind, EULER_GAMMA};
use crate::twobody::{self, fmt_value, RadialFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HyperDim {
    #[default]
    Two,
    Three,
}

impl HyperDim {
    fn nu(self) -> f64 {
        match self {
            HyperDim::Two => 1.0,
            HyperDim::Three => 2.0,
        }
    }
}

// ---------------------------------------------------------------------------
// universal long-range channel

struct VLonTable {
    /// `ln(kappa rho)`, ascending.
    ln_x: Vec<f64>,
    /// `ln(-lambda)` with `lambda = rho^2 U`.
    ln_lam: Vec<f64>,
    large_offset: f64,
    small_coeff: f64,
}

/// `phi_tt = -lambda sech-like weight phi` in `tau = ln tan(alpha)`, from the
/// regular end at `alpha = pi/2` to small `alpha`. Returns
/// `(B' + 2 phi(pi/3)) / A'` for `phi ~ A' ln(alpha) + B'`.
fn hyperangular_log_x(lambda: f64) -> f64 {
    let weight = |tau: f64| {
        let e = (2.0 * tau).exp();
        e / ((1.0 + e) * (1.0 + e))
    };
    let run = |from: f64, to: f64, mut phi: f64, mut dphi: f64| {
        let mut tau = from;
        while tau > to {
            let sc = weight(tau).sqrt();
            let h = (0.005f64).min(0.02 / (lambda.abs().sqrt() * sc)).min(tau - to);
            let h = -h;
            let f = |t: f64, p: f64| -lambda * weight(t) * p;
            let k1p = dphi;
            let k1d = f(tau, phi);
            let k2p = dphi + 0.5 * h * k1d;
            let k2d = f(tau + 0.5 * h, phi + 0.5 * h * k1p);
            let k3p = dphi + 0.5 * h * k2d;
            let k3d = f(tau + 0.5 * h, phi + 0.5 * h * k2p);
            let k4p = dphi + h * k3d;
            let k4d = f(tau + h, phi + h * k3p);
            phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            dphi += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            tau += h;
        }
        (phi, dphi)
    };
    let tau_third = 3f64.sqrt().ln();
    let (p3, d3) = run(25.0, tau_third, 1.0, 0.0);
    let (phi, dphi) = run(tau_third, -25.0, p3, d3);
    let a = dphi;
    let b = phi - a * -25.0;
    (b + 2.0 * p3) / a
}

fn vlon_table() -> &'static VLonTable {
    static TABLE: OnceLock<VLonTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let shift = std::f64::consts::SQRT_2.ln() - EULER_GAMMA;
        let mags = geomspace(10f64.powf(-1.5), 1e4, 400);
        let mut ln_x = Vec::with_capacity(mags.len());
        let mut ln_lam = Vec::with_capacity(mags.len());
        for &m in &mags {
            ln_x.push(hyperangular_log_x(-m) + shift);
            ln_lam.push(m.ln());
        }
        let n = mags.len();
        let x_hi = ln_x[n - 1].exp();
        let large_offset = -mags[n - 1] + 2.0 * x_hi * x_hi;
        let small_coeff = -mags[0] * (ln_x[0] - shift);
        VLonTable {
            ln_x,
            ln_lam,
            large_offset,
            small_coeff,
        }
    })
}

/// Lowest hyperangular eigenvalue `rho^2 U` of the zero-range problem as a
/// function of `kappa rho`.
pub fn vlon_adiabatic(kappa_rho: f64) -> f64 {
    let tab = vlon_table();
    let lx = kappa_rho.ln();
    let n = tab.ln_x.len();
    if lx >= tab.ln_x[n - 1] {
        -2.0 * kappa_rho * kappa_rho + tab.large_offset
    } else if lx <= tab.ln_x[0] {
        // lambda ~ c / ln x, guarded away from ln x = 0
        let shift = std::f64::consts::SQRT_2.ln() - EULER_GAMMA;
        let ln_xx = (lx - shift).min(-1e-3);
        tab.small_coeff / ln_xx
    } else {
        -numerics::interp_cubic(&tab.ln_x, &tab.ln_lam, lx).exp()
    }
}

/// `rho^2 U_lon`: the adiabatic eigenvalue plus the diagonal coupling of a
/// dimer-shaped channel function, `(1/12) (d ln|lambda| / d ln rho)^2`,
/// which restores the atom-dimer `-1/(4 rho^2)` tail at large `rho`.
pub fn vlon_lambda(kappa_rho: f64) -> f64 {
    let d: f64 = 1e-4;
    let up = vlon_adiabatic(kappa_rho * d.exp()).abs().ln();
    let dn = vlon_adiabatic(kappa_rho * (-d).exp()).abs().ln();
    let slope = (up - dn) / (2.0 * d);
    vlon_adiabatic(kappa_rho) + slope * slope / 12.0
}

/// Universal long-range channel `U_lon(rho)` for the two-body energy `e2`.
pub fn v_lon(rho: f64, e2: f64) -> f64 {
    let kappa = (-e2).sqrt();
    vlon_lambda(kappa * rho) / (rho * rho)
}

// ---------------------------------------------------------------------------
// channels

/// Lowest adiabatic channel. `v_eff` holds `2 V_eff`; beyond `split_rho`
/// only the universal part `V_lon(E2_ref)` remains (zero without `e2_ref`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticChannel {
    pub rho_grid: Vec<f64>,
    pub v_eff: Vec<f64>,
    pub split_rho: f64,
    pub e2_ref: Option<f64>,
}

impl AdiabaticChannel {
    pub fn new(rho_grid: Vec<f64>, v_eff: Vec<f64>, split_rho: f64, e2_ref: Option<f64>) -> Result<Self> {
        if rho_grid.len() < 2 || rho_grid.len() != v_eff.len() {
            return Err(Error::InconsistentGrid("channel grid and values differ in length".into()));
        }
        if !(rho_grid[0] > 0.0) || rho_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InconsistentGrid("channel grid must be positive and increasing".into()));
        }
        if v_eff.iter().any(|v| !v.is_finite()) || !(split_rho > 0.0) {
            return Err(Error::InconsistentGrid("non-finite channel value or split".into()));
        }
        if let Some(e2) = e2_ref {
            if !(e2 < 0.0) {
                return Err(Error::Domain {
                    what: "reference two-body energy",
                    x: e2,
                });
            }
        }
        Ok(AdiabaticChannel {
            rho_grid,
            v_eff,
            split_rho,
            e2_ref,
        })
    }

    /// Pure `V_lon` channel sampled on a geometric grid out to `50/kappa`.
    pub fn universal(e2: f64) -> Result<Self> {
        if !(e2 < 0.0) {
            return Err(Error::Domain {
                what: "reference two-body energy",
                x: e2,
            });
        }
        let kappa = (-e2).sqrt();
        let grid = geomspace(1e-4 / kappa, 50.0 / kappa, 800);
        let vals = grid.iter().map(|&r| v_lon(r, e2)).collect();
        AdiabaticChannel::new(grid, vals, 1e-4 / kappa, Some(e2))
    }

    /// Channel made of a short-range part only.
    pub fn short_range(v_sh: &RadialFunction) -> Result<Self> {
        let g: Vec<f64> = v_sh.grid.iter().copied().filter(|&r| r > 0.0).collect();
        let vals = g.iter().map(|&r| v_sh.eval(r)).collect();
        let last = *g.last().unwrap_or(&1.0);
        AdiabaticChannel::new(g, vals, last, None)
    }

    /// Add a short-range part `extra(rho)`, supported on `rho <= range`, on
    /// top of this channel; the split moves out to cover it.
    pub fn with_short_range(&self, extra: impl Fn(f64) -> f64, range: f64) -> Result<Self> {
        let split = self.split_rho.max(range);
        let vals = self
            .rho_grid
            .iter()
            .map(|&r| self.u(r) + if r <= range { extra(r) } else { 0.0 })
            .collect();
        AdiabaticChannel::new(self.rho_grid.clone(), vals, split, self.e2_ref)
    }

    pub fn v_lon(&self, rho: f64) -> f64 {
        self.e2_ref.map_or(0.0, |e2| v_lon(rho, e2))
    }

    /// `2 V_eff(rho)`.
    pub fn u(&self, rho: f64) -> f64 {
        if rho > self.split_rho {
            return self.v_lon(rho);
        }
        if rho >= *self.rho_grid.last().unwrap() {
            return self.v_lon(rho);
        }
        numerics::interp(&self.rho_grid, &self.v_eff, rho)
    }

    pub fn v_sh(&self, rho: f64) -> f64 {
        if rho > self.split_rho {
            0.0
        } else {
            self.u(rho) - self.v_lon(rho)
        }
    }

    /// Effective potential in energy units, `V_eff = U/2`.
    pub fn potential_energy(&self, rho: f64) -> f64 {
        0.5 * self.u(rho)
    }

    /// Three-body continuum threshold: `E2_ref`, or 0.
    pub fn threshold(&self) -> f64 {
        self.e2_ref.unwrap_or(0.0)
    }

    fn outer_radius(&self) -> f64 {
        self.split_rho.max(*self.rho_grid.last().unwrap())
    }

    fn cuts(&self) -> Vec<f64> {
        let mut cuts: Vec<f64> = self
            .rho_grid
            .iter()
            .filter(|&&r| r <= self.split_rho)
            .map(|r| r.ln())
            .collect();
        cuts.push(self.split_rho.ln());
        cuts
    }

    fn check_origin(&self, dim: HyperDim) -> Result<()> {
        let r0 = self.rho_grid[0];
        let nu = dim.nu();
        if r0 * r0 * self.u(r0).abs() >= nu * nu {
            return Err(Error::InconsistentGrid(format!(
                "first channel point {r0} does not resolve the centrifugal region"
            )));
        }
        Ok(())
    }

    fn shoot(&self, energy: f64, rho_end: f64, dim: HyperDim) -> radial::Shot {
        let nu = dim.nu();
        let rho0 = self.rho_grid[0].min(self.split_rho) * 1e-6;
        let t0 = rho0.ln();
        let split = self.split_rho;
        let pieces = radial::pieces(t0, rho_end.ln(), &self.cuts(), 0.25, |t| {
            usize::from(t.exp() > split)
        });
        let q = |t: f64| {
            let rho = t.exp();
            nu * nu + rho * rho * (self.u(rho) - 2.0 * energy)
        };
        // local exponent of the regular solution at the start
        let slope = q(t0).max(0.0).sqrt();
        radial::numerov(
            &pieces,
            |_, t| q(t),
            1.0,
            slope,
            0.01,
            0.01,
            false,
        )
    }

    /// Number of hyperradial states below `energy < threshold` (Sturm count
    /// in a Dirichlet box well beyond the decay length).
    pub fn count_below(&self, energy: f64, dim: HyperDim) -> Result<usize> {
        let gap = self.threshold() - energy;
        if !(gap > 0.0) {
            return Err(Error::Domain {
                what: "energy at or above the three-body threshold",
                x: energy,
            });
        }
        let kappa = (2.0 * gap).sqrt();
        let rho_box = self.outer_radius() + 60.0 / kappa;
        let shot = self.shoot(energy, rho_box, dim);
        Ok(shot.nodes)
    }

    /// Zero-energy count for a channel without a long-range part: interior
    /// nodes plus one when the outer solution has the wrong growth sign.
    pub fn zero_energy_count(&self, dim: HyperDim) -> Result<usize> {
        if self.e2_ref.is_some() {
            return Err(Error::Unsupported(
                "zero-energy counting needs a channel without V_lon".into(),
            ));
        }
        let nu = dim.nu();
        let shot = self.shoot(0.0, self.outer_radius(), dim);
        Ok(shot.nodes + usize::from(shot.y_end * (nu * shot.y_end + shot.dy_end) < 0.0))
    }

    /// Lower bound for the spectrum: minimum of the full radial potential.
    fn floor(&self, dim: HyperDim) -> f64 {
        let nu = dim.nu();
        let lo = self.rho_grid[0].min(self.split_rho) * 1e-3;
        let hi = self.outer_radius() * 10.0;
        let mut m = self.threshold();
        for r in geomspace(lo, hi, 4000) {
            m = m.min(0.5 * ((nu * nu - 0.25) / (r * r) + self.u(r)));
        }
        for &r in &self.rho_grid {
            m = m.min(0.5 * ((nu * nu - 0.25) / (r * r) + self.u(r)));
        }
        m
    }
}

/// Negative-energy (below threshold) states of the channel, ascending.
pub fn hyperradial_bound_states(channel: &AdiabaticChannel, max_states: usize) -> Result<Vec<f64>> {
    hyperradial_bound_states_dim(channel, max_states, HyperDim::Two)
}

pub fn hyperradial_bound_states_dim(
    channel: &AdiabaticChannel,
    max_states: usize,
    dim: HyperDim,
) -> Result<Vec<f64>> {
    channel.check_origin(dim)?;
    let e_th = channel.threshold();
    let floor = channel.floor(dim);
    if !(floor < e_th) {
        return Ok(Vec::new());
    }
    let scale = (e_th - floor).max(1e-300);
    let x_lo = (scale * 1e-12).ln();
    let x_hi = scale.ln();
    let energy_at = |x: f64| e_th - x.exp();
    let n = channel.count_below(energy_at(x_lo), dim)?.min(max_states);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        // count(E) > k holds for E above the k-th level, i.e. small x
        let (lo, hi) = numerics::bisect_predicate_abs(
            |x| Ok::<_, Error>(channel.count_below(energy_at(x), dim)? > k),
            x_lo,
            x_hi,
            1e-11,
        )?;
        out.push(energy_at(0.5 * (lo + hi)));
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

// ---------------------------------------------------------------------------
// appearance criterion

/// `1 + int_0^inf phi_1(0, rho) V_sh(rho) / sqrt(rho) drho`, with `phi_1`
/// the zero-energy regular solution normalized to `rho^(3/2)/2`. Negative
/// means at least one state below zero, a root marks appearance.
pub fn appearance_criterion(v_sh: &RadialFunction) -> Result<f64> {
    let g = &v_sh.grid;
    let last = *g.last().unwrap();
    if v_sh.values.last().copied().unwrap_or(0.0) != 0.0 {
        return Err(Error::Domain {
            what: "V_sh must vanish at the end of its grid",
            x: last,
        });
    }
    let first = g.iter().copied().find(|&r| r > 0.0).unwrap_or(last);
    if first > 1e-3 * last {
        return Err(Error::InconsistentGrid(
            "appearance criterion needs a grid graded toward the origin".into(),
        ));
    }
    let rho0 = first * 1e-6;
    let cuts: Vec<f64> = g.iter().filter(|&&r| r > 0.0).map(|r| r.ln()).collect();
    let pieces = radial::pieces(rho0.ln(), last.ln(), &cuts, 0.25, |_| 0);
    // state (v, v_t, P) with v = phi_1 / sqrt(rho)
    let v0 = v_sh.eval(rho0);
    let mut v = 0.5 * rho0;
    let mut dv = 0.5 * rho0;
    let mut p = 0.25 * v0 * rho0 * rho0;
    for Piece { t0, t1, .. } in pieces {
        let len = t1 - t0;
        let keff = (0..=4)
            .map(|k| {
                let r = (t0 + len * k as f64 / 4.0).exp();
                r * v_sh.eval(r).abs().sqrt()
            })
            .fold(0.0, f64::max);
        let n = (len / (0.01f64).min(0.02 / keff.max(1e-300))).ceil().max(1.0) as usize;
        let h = len / n as f64;
        let f = |t: f64, v: f64, dv: f64| {
            let r = t.exp();
            let pot = v_sh.eval(r);
            (dv, (1.0 + r * r * pot) * v, r * pot * v)
        };
        for k in 0..n {
            let t = t0 + k as f64 * h;
            let (a1, b1, c1) = f(t, v, dv);
            let (a2, b2, c2) = f(t + 0.5 * h, v + 0.5 * h * a1, dv + 0.5 * h * b1);
            let (a3, b3, c3) = f(t + 0.5 * h, v + 0.5 * h * a2, dv + 0.5 * h * b2);
            let (a4, b4, c4) = f(t + h, v + h * a3, dv + h * b3);
            v += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            dv += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
            p += h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
        }
        if !v.is_finite() || !p.is_finite() {
            return Err(Error::NonConvergence("appearance march overflowed".into()));
        }
    }
    Ok(1.0 + p)
}

/// First root in `c` of the appearance criterion for `c V_sh` on
/// `(0, c_max]`.
pub fn appearance_threshold(v_sh: &RadialFunction, c_max: f64, rel_tol: f64) -> Result<f64> {
    let at = |c: f64| -> Result<f64> {
        let mut f = v_sh.clone();
        f.values.iter_mut().for_each(|v| *v *= c);
        appearance_criterion(&f)
    };
    let cs = geomspace(c_max * 1e-6, c_max, 240);
    let mut prev = cs[0];
    for &c in &cs[1..] {
        if at(c)? < 0.0 {
            let (a, b) = bisect_predicate(|x| at(x).map(|v| v > 0.0), prev, c, rel_tol, true)?;
            return Ok(0.5 * (a + b));
        }
        prev = c;
    }
    Err(Error::RootNotFound(format!("criterion has no root up to coupling {c_max}")))
}

/// Smallest coupling `c` in `(0, c_max]` at which `bound(c)` first holds,
/// assuming a single crossing.
#[cfg(test)]
fn threshold_in_coupling(
    mut bound: impl FnMut(f64) -> Result<bool>,
    c_max: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !bound(c_max)? {
        return Err(Error::RootNotFound(format!("no binding up to coupling {c_max}")));
    }
    let mut lo = c_max;
    while bound(lo)? {
        lo *= 0.5;
        if lo < c_max * 1e-12 {
            return Err(Error::RootNotFound("binding persists to vanishing coupling".into()));
        }
    }
    let (a, b) = bisect_predicate(|c| bound(c).map(|x| !x), lo, (2.0 * lo).min(c_max), rel_tol, true)?;
    Ok(0.5 * (a + b))
}

// ---------------------------------------------------------------------------
// square-well channel

/// Hyperangular (K = 0) average of a pairwise square well of radius `r0` and
/// depth `v0` (energy units), times two; beyond `5 r0` the universal
/// channel of the square well's own two-body energy takes over.
pub fn veff_from_pair_squarewell(r0: f64, v0: f64, rho_grid: &[f64]) -> Result<AdiabaticChannel> {
    if !(r0 > 0.0 && v0 > 0.0) {
        return Err(Error::Domain {
            what: "square-well radius and depth",
            x: if r0 > 0.0 { v0 } else { r0 },
        });
    }
    let pair = PotentialSpec::SquareWellBarrier {
        lambda_minus: v0 * r0 * r0,
        lambda_plus: 0.0,
        rs: r0,
        rl: 2.0 * r0,
    };
    let states = twobody::bound_states(&pair, 1)?;
    let e2 = states
        .first()
        .map(|s| s.energy)
        .ok_or_else(|| Error::NonConvergence("pair square well has no bound state".into()))?;
    let split = 5.0 * r0;
    let mut grid: Vec<f64> = rho_grid.iter().copied().filter(|&r| r > 0.0).collect();
    grid.extend(square_well_breakpoints(r0));
    grid.push(split);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let vals = grid
        .iter()
        .map(|&rho| {
            if rho <= split {
                squarewell_average(r0, v0, rho)
            } else {
                v_lon(rho, e2)
            }
        })
        .collect();
    AdiabaticChannel::new(grid, vals, split, Some(e2))
}

/// Radii where the pair-configuration counting changes.
pub fn square_well_breakpoints(r0: f64) -> [f64; 3] {
    [
        r0 / std::f64::consts::SQRT_2,
        r0 * (2.0f64 / 3.0).sqrt(),
        r0 * std::f64::consts::SQRT_2,
    ]
}

/// `2 <sum_pairs V>` over the hypersphere with a constant hyperangular
/// function; each pair contributes `-V0 min(1, R0^2/(2 rho^2))`.
pub fn squarewell_average(r0: f64, v0: f64, rho: f64) -> f64 {
    let frac = (r0 * r0 / (2.0 * rho * rho)).min(1.0);
    2.0 * 3.0 * -v0 * frac
}

// ---------------------------------------------------------------------------
// square-model window estimates

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WindowVariant {
    BarrierOutside,
    CoreInside,
    CoreInsideWeighted,
    CoreInsideReduced,
}

impl WindowVariant {
    pub const ALL: [WindowVariant; 4] = [
        WindowVariant::BarrierOutside,
        WindowVariant::CoreInside,
        WindowVariant::CoreInsideWeighted,
        WindowVariant::CoreInsideReduced,
    ];
}

/// Volume-ratio factors `h3 ~ h2 f_mu f_V f_R` for the barrier estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowFactors {
    pub f_mu: f64,
    pub f_v: f64,
    pub f_r: f64,
    /// Largest `s` for which the outer-barrier picture applies.
    pub barrier_s_max: f64,
}

impl Default for WindowFactors {
    fn default() -> Self {
        WindowFactors {
            f_mu: 2.0,
            f_v: 3.0,
            f_r: 0.5,
            barrier_s_max: 0.5,
        }
    }
}

impl WindowFactors {
    pub fn product(&self) -> f64 {
        self.f_mu * self.f_v * self.f_r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimate {
    pub s: f64,
    pub h2_threshold: f64,
    pub h3_over_factor: f64,
    /// Open interval of `h2` with three-body but no two-body binding.
    pub window: Option<(f64, f64)>,
    pub variant: WindowVariant,
}

/// Weighted attractive strength `int V r dr / int r dr` of the core model
/// in units of the well depth.
pub fn weighted_strength(s: f64) -> f64 {
    (19.0 - 36.0 * s * s) / (12.0 * (1.0 - s * s))
}

/// First root of `J1(sX) Y0(X) - J0(X) Y1(sX)`: the hyperradial analogue of
/// the deep-core condition, with the outer solution decaying as
/// `rho^(-1/2)`.
pub fn h3_of_s(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain { what: "h3(s)", x: s });
    }
    let f = |x: f64| {
        let (_, j1s, _, y1s) = specfun::jy01(s * x);
        let (j0, _, y0, _) = specfun::jy01(x);
        j1s * y0 - j0 * y1s
    };
    let top = 10.0 / (1.0 - s) + 10.0;
    let xs = geomspace(1e-4, top, 6000);
    let x = numerics::first_root_on(f, &xs, 1e-15 * top)
        .ok_or_else(|| Error::RootNotFound(format!("no hyperradial core root for s = {s}")))?;
    Ok(x * x * (1.0 - s * s))
}

fn window_between(lower: f64, upper: f64) -> Option<(f64, f64)> {
    (lower < upper).then_some((lower, upper))
}

pub fn window_estimate(s: f64, variant: WindowVariant, factors: &WindowFactors) -> Result<WindowEstimate> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain {
            what: "window estimate ratio",
            x: s,
        });
    }
    let est = match variant {
        WindowVariant::BarrierOutside => {
            let j01 = specfun::bessel_zero(BesselKind::J0, 1)?;
            let j11 = specfun::bessel_zero(BesselKind::J1, 1)?;
            let h2 = j01 * j01;
            let h3 = j11 * j11 / factors.product();
            WindowEstimate {
                s,
                h2_threshold: h2,
                h3_over_factor: h3,
                window: if s <= factors.barrier_s_max {
                    window_between(h3, h2)
                } else {
                    None
                },
                variant,
            }
        }
        _ => {
            let h2 = twobody::h_of_s(s)?;
            let h3 = h3_of_s(s)?;
            let divisor = match variant {
                WindowVariant::CoreInside => 8.0,
                WindowVariant::CoreInsideWeighted => 4.0 * weighted_strength(s),
                _ => 4.0 * weighted_strength(s) * 2.0 / 3.0,
            };
            let curve = if divisor > 0.0 { h3 / divisor } else { f64::INFINITY };
            WindowEstimate {
                s,
                h2_threshold: h2,
                h3_over_factor: curve,
                window: window_between(curve, h2),
                variant,
            }
        }
    };
    Ok(est)
}

/// All four estimates at every `s`, grouped by grid point.
pub fn window_estimates(s_grid: &[f64]) -> Result<Vec<WindowEstimate>> {
    window_estimates_with(s_grid, &WindowFactors::default())
}

pub fn window_estimates_with(s_grid: &[f64], factors: &WindowFactors) -> Result<Vec<WindowEstimate>> {
    let mut out = Vec::with_capacity(4 * s_grid.len());
    for &s in s_grid {
        for v in WindowVariant::ALL {
            out.push(window_estimate(s, v, factors)?);
        }
    }
    Ok(out)
}

/// One row per `s`: two-body core threshold and the weighted and reduced
/// three-body estimates.
pub fn write_fig2a_csv<W: Write>(estimates: &[WindowEstimate], mut out: W) -> Result<()> {
    writeln!(out, "s,h2_threshold,h3_dotdash,h3_dashed")?;
    let mut rows: Vec<(f64, f64, Option<f64>, Option<f64>)> = Vec::new();
    for e in estimates {
        if e.variant == WindowVariant::BarrierOutside {
            continue;
        }
        let row = match rows.iter_mut().find(|r| r.0 == e.s) {
            Some(r) => r,
            None => {
                rows.push((e.s, e.h2_threshold, None, None));
                rows.last_mut().unwrap()
            }
        };
        match e.variant {
            WindowVariant::CoreInsideWeighted => row.2 = Some(e.h3_over_factor),
            WindowVariant::CoreInsideReduced => row.3 = Some(e.h3_over_factor),
            _ => {}
        }
    }
    for (s, h2, dd, da) in rows {
        let (Some(dd), Some(da)) = (dd, da) else {
            return Err(Error::InconsistentGrid(format!("missing core estimates at s = {s}")));
        };
        writeln!(out, "{},{},{},{}", fmt_value(s), fmt_value(h2), fmt_value(dd), fmt_value(da))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::twobody::Boundary;

    fn gaussian_vsh(amp: f64, width: f64, cut: f64) -> RadialFunction {
        let mut grid = geomspace(cut * 1e-5, cut, 600);
        grid.insert(0, 0.0);
        let values = grid
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                if i + 1 == grid.len() {
                    0.0
                } else {
                    amp * (-(r * r) / (2.0 * width * width)).exp()
                }
            })
            .collect();
        RadialFunction::new(
            grid,
            values,
            None,
            Boundary {
                value_at_origin: amp,
                outer_slope: 0.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn empty_channel_has_no_states() {
        let grid = geomspace(1e-4, 10.0, 100);
        let ch = AdiabaticChannel::new(grid.clone(), vec![0.0; grid.len()], 10.0, None).unwrap();
        assert!(hyperradial_bound_states(&ch, 5).unwrap().is_empty());
        assert_eq!(ch.zero_energy_count(HyperDim::Two).unwrap(), 0);
    }

    #[test]
    fn universal_channel_two_states() {
        let ch = AdiabaticChannel::universal(-1.0).unwrap();
        let e = hyperradial_bound_states(&ch, 5).unwrap();
        assert_eq!(e.len(), 2, "{e:?}");
        assert!((e[0] / -1.0 - 16.52).abs() < 0.03 * 16.52, "{e:?}");
        assert!((e[1] / -1.0 - 1.27).abs() < 0.1 * 1.27, "{e:?}");
    }

    #[test]
    fn universal_channel_scales_with_e2() {
        for e2 in [-1e-2, -1e-4] {
            let ch = AdiabaticChannel::universal(e2).unwrap();
            let e = hyperradial_bound_states(&ch, 5).unwrap();
            assert_eq!(e.len(), 2);
        }
    }

    #[test]
    fn pocket_adds_a_state() {
        let ch = AdiabaticChannel::universal(-1e-2).unwrap();
        let deep = ch.with_short_range(|r| -20.0 * (-r * r / 0.5).exp(), 6.0).unwrap();
        let e = hyperradial_bound_states(&deep, 5).unwrap();
        assert_eq!(e.len(), 3, "{e:?}");
    }

    #[test]
    fn appearance_zero_and_weak() {
        let zero = gaussian_vsh(0.0, 1.0, 8.0);
        assert_eq!(appearance_criterion(&zero).unwrap(), 1.0);
        let weak = gaussian_vsh(-1e-3, 1.0, 8.0);
        assert!(appearance_criterion(&weak).unwrap() > 0.9);
    }

    #[test]
    fn appearance_matches_zero_energy_oracle() {
        let v = gaussian_vsh(-1.0, 1.0, 8.0);
        let c = appearance_threshold(&v, 100.0, 1e-10).unwrap();
        let oracle = threshold_in_coupling(
            |c| {
                let mut f = v.clone();
                f.values.iter_mut().for_each(|x| *x *= c);
                Ok(AdiabaticChannel::short_range(&f)?.zero_energy_count(HyperDim::Two)? > 0)
            },
            100.0,
            1e-10,
        )
        .unwrap();
        assert!(((c - oracle) / c).abs() < 1e-5, "{c} vs {oracle}");
    }

    #[test]
    fn square_well_channel_shape() {
        let grid = geomspace(1e-3, 20.0, 400);
        let ch = veff_from_pair_squarewell(1.0, 2.0, &grid).unwrap();
        assert_eq!(ch.potential_energy(1e-3), -6.0);
        for b in square_well_breakpoints(1.0) {
            assert!(ch.rho_grid.contains(&b));
        }
        assert!(ch.e2_ref.unwrap() < 0.0);
        // beyond the last breakpoint, at most one pair interacts on average
        assert!(ch.potential_energy(2f64.sqrt()) > -2.0);
    }

    #[test]
    fn windows() {
        let f = WindowFactors::default();
        let b = window_estimate(0.3, WindowVariant::BarrierOutside, &f).unwrap();
        let (lo, hi) = b.window.unwrap();
        assert!((lo - 14.6819706421 / 3.0).abs() < 1e-8);
        assert!((hi - 5.7831859629).abs() < 1e-8);
        assert!(window_estimate(0.7, WindowVariant::BarrierOutside, &f).unwrap().window.is_none());
        assert_eq!(weighted_strength(0.5), 10.0 / 9.0);
        for s in [0.15, 0.25, 0.35, 0.45] {
            let w = window_estimate(s, WindowVariant::CoreInsideWeighted, &f).unwrap();
            assert!(w.window.is_some(), "s = {s}: {w:?}");
        }
        let d = window_estimate(0.3, WindowVariant::CoreInsideWeighted, &f).unwrap();
        let r = window_estimate(0.3, WindowVariant::CoreInsideReduced, &f).unwrap();
        assert!((r.h3_over_factor - 1.5 * d.h3_over_factor).abs() < 1e-12);
        assert!(window_estimate(1.0, WindowVariant::CoreInside, &f).is_err());
    }

    #[test]
    fn fig2a_csv() {
        let est = window_estimates(&[0.2, 0.4]).unwrap();
        let mut buf = Vec::new();
        write_fig2a_csv(&est, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("s,h2_threshold,h3_dotdash,h3_dashed\n"));
    }
}
