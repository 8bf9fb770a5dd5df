//! Catalog of radial pair potentials `V(r) = lambda_plus V+ + lambda_minus V-`.
//!
//! Every pointwise-evaluable spec lowers to a [`Profile`]: contiguous radial
//! segments `(lo, hi]`, each carrying a short sum of terms of the form
//! `c r^(2p) exp(-a r^2)` or `c exp(-rate (r - r0))`. Volumes, splits and the
//! Gaussian pair-density averages used by the three-body solver all have
//! closed forms on that representation, except for exponential tails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics;

/// Tail attached beyond the cutoff of a truncated oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "form", deny_unknown_fields)]
pub enum TailSpec {
    #[default]
    Zero,
    /// `amplitude * exp(-rate (r - r_cut))` for `r > r_cut`.
    ExpDecay { rate: f64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `-lambda_minus/Rs^2` for `r <= Rs`, `+lambda_plus/Rs^2` up to `Rl`.
    SquareWellBarrier {
        lambda_minus: f64,
        lambda_plus: f64,
        #[serde(rename = "Rs")]
        rs: f64,
        #[serde(rename = "Rl")]
        rl: f64,
    },
    /// Repulsive core `+lambda_plus/Rs^2` inside `Rs`, well `-lambda_minus/Rs^2` up to `Rl`.
    CoreWell {
        lambda_plus: f64,
        lambda_minus: f64,
        #[serde(rename = "Rs")]
        rs: f64,
        #[serde(rename = "Rl")]
        rl: f64,
    },
    /// `lambda_plus delta(r/c - 1)/d^2 - lambda_minus delta(r/d - 1)/d^2`.
    DeltaShell {
        lambda_plus: f64,
        lambda_minus: f64,
        c: f64,
        d: f64,
    },
    /// Sum of `amplitude * exp(-r^2 / (2 width^2))`.
    GaussianSum { terms: Vec<(f64, f64)> },
    /// `g (r^2/2 - 1)` inside `r <= C/sqrt(g)`, `tail` beyond.
    TruncatedOscillator {
        g: f64,
        #[serde(rename = "C")]
        cutoff: f64,
        #[serde(default)]
        tail: TailSpec,
    },
    Scaled {
        base: Box<PotentialSpec>,
        factor: f64,
    },
    /// `plus * max(V_base, 0) + minus * min(V_base, 0)`.
    Weighted {
        base: Box<PotentialSpec>,
        plus: f64,
        minus: f64,
    },
}

impl PotentialSpec {
    pub fn fig3_shape() -> Self {
        PotentialSpec::GaussianSum {
            terms: vec![(1.0, 1.0), (-2.0, 0.5)],
        }
    }

    /// `2 exp(-r^2/2) - 5.7 exp(-2 r^2)`.
    pub fn borromean_example() -> Self {
        PotentialSpec::GaussianSum {
            terms: vec![(2.0, 1.0), (-5.7, 0.5)],
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        PotentialSpec::Scaled {
            base: Box::new(self),
            factor,
        }
    }

    pub fn is_analytic_only(&self) -> bool {
        match self {
            PotentialSpec::DeltaShell { .. } => true,
            PotentialSpec::Scaled { base, .. } | PotentialSpec::Weighted { base, .. } => {
                base.is_analytic_only()
            }
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPotential(msg));
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidPotential(format!("{name} = {v} is not finite")))
            }
        };
        match self {
            PotentialSpec::SquareWellBarrier {
                lambda_minus,
                lambda_plus,
                rs,
                rl,
            }
            | PotentialSpec::CoreWell {
                lambda_minus,
                lambda_plus,
                rs,
                rl,
            } => {
                finite("lambda_minus", *lambda_minus)?;
                finite("lambda_plus", *lambda_plus)?;
                if *lambda_minus < 0.0 || *lambda_plus < 0.0 {
                    return bad("strengths must be nonnegative".into());
                }
                if !(*rs > 0.0 && rs < rl && rl.is_finite()) {
                    return bad(format!("need 0 < Rs < Rl, got Rs = {rs}, Rl = {rl}"));
                }
            }
            PotentialSpec::DeltaShell {
                lambda_plus,
                lambda_minus,
                c,
                d,
            } => {
                finite("lambda_minus", *lambda_minus)?;
                finite("lambda_plus", *lambda_plus)?;
                if !(*c > 0.0 && c <= d && d.is_finite()) {
                    return bad(format!("need 0 < c <= d, got c = {c}, d = {d}"));
                }
            }
            PotentialSpec::GaussianSum { terms } => {
                for &(amp, width) in terms {
                    finite("amplitude", amp)?;
                    if !(width > 0.0 && width.is_finite()) {
                        return bad(format!("Gaussian width {width} must be positive"));
                    }
                }
            }
            PotentialSpec::TruncatedOscillator { g, cutoff, tail } => {
                if !(*g > 0.0 && g.is_finite()) {
                    return bad(format!("oscillator strength g = {g} must be positive"));
                }
                if !(*cutoff > 0.0 && cutoff.is_finite()) {
                    return bad(format!("cutoff C = {cutoff} must be positive"));
                }
                if let TailSpec::ExpDecay { rate, amplitude } = tail {
                    if !(*rate > 0.0) || !(*amplitude >= 0.0) {
                        return bad("tail needs rate > 0 and amplitude >= 0".into());
                    }
                }
            }
            PotentialSpec::Scaled { base, factor } => {
                finite("factor", *factor)?;
                base.validate()?;
            }
            PotentialSpec::Weighted { base, plus, minus } => {
                finite("plus", *plus)?;
                finite("minus", *minus)?;
                base.validate()?;
            }
        }
        Ok(())
    }

    /// Lower to the piecewise representation used by all grid solvers.
    pub fn profile(&self) -> Result<Profile> {
        self.validate()?;
        self.profile_unchecked()
    }

    fn profile_unchecked(&self) -> Result<Profile> {
        use Term::Gauss;
        let constant = |c: f64| Gauss { c, p: 0, a: 0.0 };
        Ok(match self {
            PotentialSpec::SquareWellBarrier {
                lambda_minus,
                lambda_plus,
                rs,
                rl,
            } => {
                let s2 = rs * rs;
                Profile::from_segments(vec![
                    Segment::new(0.0, *rs, vec![constant(-lambda_minus / s2)]),
                    Segment::new(*rs, *rl, vec![constant(lambda_plus / s2)]),
                    Segment::new(*rl, f64::INFINITY, vec![]),
                ])
            }
            PotentialSpec::CoreWell {
                lambda_plus,
                lambda_minus,
                rs,
                rl,
            } => {
                let s2 = rs * rs;
                Profile::from_segments(vec![
                    Segment::new(0.0, *rs, vec![constant(lambda_plus / s2)]),
                    Segment::new(*rs, *rl, vec![constant(-lambda_minus / s2)]),
                    Segment::new(*rl, f64::INFINITY, vec![]),
                ])
            }
            PotentialSpec::DeltaShell { .. } => return Err(Error::AnalyticOnly),
            PotentialSpec::GaussianSum { terms } => {
                let terms = terms
                    .iter()
                    .filter(|(amp, _)| *amp != 0.0)
                    .map(|&(amp, w)| Gauss {
                        c: amp,
                        p: 0,
                        a: 0.5 / (w * w),
                    })
                    .collect();
                Profile::from_segments(vec![Segment::new(0.0, f64::INFINITY, terms)])
            }
            PotentialSpec::TruncatedOscillator { g, cutoff, tail } => {
                let rc = cutoff / g.sqrt();
                let inner = vec![Gauss { c: 0.5 * g, p: 1, a: 0.0 }, constant(-g)];
                let outer = match tail {
                    TailSpec::Zero => vec![],
                    TailSpec::ExpDecay { rate, amplitude } => vec![Term::Exp {
                        c: *amplitude,
                        rate: *rate,
                        r0: rc,
                    }],
                };
                Profile::from_segments(vec![
                    Segment::new(0.0, rc, inner),
                    Segment::new(rc, f64::INFINITY, outer),
                ])
            }
            PotentialSpec::Scaled { base, factor } => base.profile_unchecked()?.scaled(*factor),
            PotentialSpec::Weighted { base, plus, minus } => {
                let (vp, vm) = base.profile_unchecked()?.split();
                vp.scaled(*plus).merged(&vm.scaled(*minus))
            }
        })
    }
}

/// Pointwise value of the potential.
pub fn evaluate(spec: &PotentialSpec, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain {
            what: "potential evaluation",
            x: r,
        });
    }
    Ok(spec.profile()?.eval(r))
}

/// `int_0^inf V(r) r dr`.
pub fn net_volume(spec: &PotentialSpec) -> Result<f64> {
    let (plus, minus) = part_volumes(spec)?;
    Ok(plus + minus)
}

/// Volumes `int V+ r dr >= 0` and `int V- r dr <= 0` of the sign-split parts.
pub fn part_volumes(spec: &PotentialSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    match spec {
        PotentialSpec::DeltaShell {
            lambda_plus,
            lambda_minus,
            c,
            d,
        } => {
            let a = lambda_plus * c * c / (d * d);
            let b = -lambda_minus;
            Ok((a.max(0.0) + b.max(0.0), a.min(0.0) + b.min(0.0)))
        }
        PotentialSpec::Scaled { base, factor } if base.is_analytic_only() => {
            let (p, m) = part_volumes(base)?;
            Ok(if *factor >= 0.0 {
                (p * factor, m * factor)
            } else {
                (m * factor, p * factor)
            })
        }
        PotentialSpec::Weighted { base, plus, minus } if base.is_analytic_only() => {
            let (p, m) = part_volumes(base)?;
            let (p, m) = (p * plus, m * minus);
            Ok((p.max(0.0) + m.max(0.0), p.min(0.0) + m.min(0.0)))
        }
        _ => {
            let (vp, vm) = spec.profile()?.split();
            Ok((vp.volume(), vm.volume()))
        }
    }
}

/// Sign split `(V+, V-)` with `V = V+ + V-` pointwise.
pub fn split(spec: &PotentialSpec) -> Result<(Profile, Profile)> {
    Ok(spec.profile()?.split())
}

/// A strength-parameterized potential family `lambda_plus V+ + lambda_minus V-`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", deny_unknown_fields)]
pub enum Family {
    SquareWellBarrier {
        #[serde(rename = "Rs")]
        rs: f64,
        #[serde(rename = "Rl")]
        rl: f64,
    },
    CoreWell {
        #[serde(rename = "Rs")]
        rs: f64,
        #[serde(rename = "Rl")]
        rl: f64,
    },
    DeltaShell { c: f64, d: f64 },
    /// Unit shapes from the sign split of `shape`. With `balanced` the
    /// positive part is rescaled so the two volumes cancel.
    Shape {
        shape: PotentialSpec,
        #[serde(default)]
        balanced: bool,
    },
}

impl Family {
    pub fn fig3() -> Self {
        Family::Shape {
            shape: PotentialSpec::fig3_shape(),
            balanced: true,
        }
    }

    pub fn spec(&self, lambda_minus: f64, lambda_plus: f64) -> Result<PotentialSpec> {
        Ok(match self {
            Family::SquareWellBarrier { rs, rl } => PotentialSpec::SquareWellBarrier {
                lambda_minus,
                lambda_plus,
                rs: *rs,
                rl: *rl,
            },
            Family::CoreWell { rs, rl } => PotentialSpec::CoreWell {
                lambda_plus,
                lambda_minus,
                rs: *rs,
                rl: *rl,
            },
            Family::DeltaShell { c, d } => PotentialSpec::DeltaShell {
                lambda_plus,
                lambda_minus,
                c: *c,
                d: *d,
            },
            Family::Shape { shape, balanced } => {
                let scale = if *balanced {
                    let (p, m) = part_volumes(shape)?;
                    if p <= 0.0 {
                        return Err(Error::ZeroRepulsiveVolume);
                    }
                    -m / p
                } else {
                    1.0
                };
                PotentialSpec::Weighted {
                    base: Box::new(shape.clone()),
                    plus: lambda_plus * scale,
                    minus: lambda_minus,
                }
            }
        })
    }

    /// Volumes of the unit shapes `V+` and `V-`.
    pub fn unit_volumes(&self) -> Result<(f64, f64)> {
        let (p, _) = part_volumes(&self.spec(0.0, 1.0)?)?;
        let (_, m) = part_volumes(&self.spec(1.0, 0.0)?)?;
        Ok((p, m))
    }

    pub fn is_purely_attractive(&self) -> Result<bool> {
        Ok(self.unit_volumes()?.0 == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    /// `c r^(2p) exp(-a r^2)`, `p` in {0, 1}, `a >= 0`.
    Gauss { c: f64, p: u8, a: f64 },
    /// `c exp(-rate (r - r0))`.
    Exp { c: f64, rate: f64, r0: f64 },
}

impl Term {
    fn eval(&self, r: f64) -> f64 {
        match *self {
            Term::Gauss { c, p, a } => {
                let r2 = r * r;
                let poly = if p == 0 { 1.0 } else { r2 };
                if a == 0.0 {
                    c * poly
                } else {
                    c * poly * (-a * r2).exp()
                }
            }
            Term::Exp { c, rate, r0 } => c * (-rate * (r - r0)).exp(),
        }
    }

    fn scaled(&self, f: f64) -> Term {
        match *self {
            Term::Gauss { c, p, a } => Term::Gauss { c: c * f, p, a },
            Term::Exp { c, rate, r0 } => Term::Exp { c: c * f, rate, r0 },
        }
    }

    /// `int_lo^hi term(r) r dr`.
    fn volume(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            Term::Gauss { c, p, a } => 0.5 * c * u_moment(p, a, lo * lo, hi * hi),
            Term::Exp { c, rate, r0 } => {
                let prim = |r: f64| {
                    if r.is_infinite() {
                        0.0
                    } else {
                        -(r / rate + 1.0 / (rate * rate)) * (-rate * (r - r0)).exp()
                    }
                };
                c * (prim(hi) - prim(lo))
            }
        }
    }

    /// `int_lo^hi |term(r)| r dr` for `r >= lo`; used for tail bounds.
    fn abs_volume(&self, lo: f64, hi: f64) -> f64 {
        // each term has a fixed sign
        self.volume(lo, hi).abs()
    }

    /// `int_lo^hi term(r) 2 gamma r exp(-gamma r^2) dr`.
    fn pair_average(&self, lo: f64, hi: f64, gamma: f64) -> f64 {
        match *self {
            Term::Gauss { c, p, a } => c * gamma * u_moment(p, a + gamma, lo * lo, hi * hi),
            Term::Exp { .. } => {
                let end = if hi.is_finite() {
                    hi
                } else {
                    let (rate, r0) = match *self {
                        Term::Exp { rate, r0, .. } => (rate, r0),
                        _ => unreachable!(),
                    };
                    // Both factors are negligible beyond this point.
                    let by_rate = r0.max(lo) + 45.0 / rate;
                    let by_gamma = (45.0 / gamma).sqrt();
                    by_rate.min(by_gamma.max(lo + 1e-12)).max(lo)
                };
                if end <= lo {
                    return 0.0;
                }
                let pieces = 64;
                numerics::gauss_legendre(
                    |r| self.eval(r) * 2.0 * gamma * r * (-gamma * r * r).exp(),
                    lo,
                    end,
                    pieces,
                )
            }
        }
    }
}

/// `int_u1^u2 u^p exp(-a u) du` for `p` in {0, 1}.
fn u_moment(p: u8, a: f64, u1: f64, u2: f64) -> f64 {
    if a == 0.0 {
        assert!(u2.is_finite(), "unbounded polynomial term");
        return if p == 0 {
            u2 - u1
        } else {
            0.5 * (u2 * u2 - u1 * u1)
        };
    }
    let e = |u: f64| if u.is_infinite() { 0.0 } else { (-a * u).exp() };
    if p == 0 {
        (e(u1) - e(u2)) / a
    } else {
        let f = |u: f64| {
            if u.is_infinite() {
                0.0
            } else {
                (u / a + 1.0 / (a * a)) * e(u)
            }
        };
        f(u1) - f(u2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub terms: Vec<Term>,
}

impl Segment {
    pub fn new(lo: f64, hi: f64, terms: Vec<Term>) -> Self {
        Segment { lo, hi, terms }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(r)).sum()
    }

    fn volume(&self) -> f64 {
        self.terms.iter().map(|t| t.volume(self.lo, self.hi)).sum()
    }
}

/// Piecewise radial potential on `(lo, hi]` segments covering `(0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    segments: Vec<Segment>,
}

impl Profile {
    pub fn zero() -> Self {
        Profile::from_segments(vec![Segment::new(0.0, f64::INFINITY, vec![])])
    }

    fn from_segments(segments: Vec<Segment>) -> Self {
        debug_assert!(segments.first().is_some_and(|s| s.lo == 0.0));
        debug_assert!(segments.last().is_some_and(|s| s.hi.is_infinite()));
        Profile { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment_index(&self, r: f64) -> usize {
        self.segments
            .partition_point(|s| s.hi < r)
            .min(self.segments.len() - 1)
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.segments[self.segment_index(r)].eval(r)
    }

    /// Value at `r` using the terms of segment `i` regardless of where `r` lies.
    pub fn eval_in(&self, i: usize, r: f64) -> f64 {
        self.segments[i].eval(r)
    }

    /// Finite segment boundaries where terms change.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments
            .iter()
            .map(|s| s.hi)
            .filter(|h| h.is_finite())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(|s| s.terms.is_empty())
    }

    /// Outer edge of the support if the potential vanishes identically beyond it.
    pub fn compact_range(&self) -> Option<f64> {
        let last = self.segments.iter().rposition(|s| !s.terms.is_empty())?;
        let hi = self.segments[last].hi;
        hi.is_finite().then_some(hi)
    }

    /// Radius beyond which `int |V| r dr < tol * max(1, int |V| r dr)`.
    pub fn effective_range(&self, tol: f64) -> f64 {
        if self.is_zero() {
            return 1.0;
        }
        if let Some(r) = self.compact_range() {
            return r;
        }
        let total: f64 = self.abs_tail(0.0);
        let target = tol * total.max(1.0);
        let mut r = self
            .breakpoints()
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(1e-3);
        while self.abs_tail(r) > target {
            r *= 1.05;
        }
        r
    }

    fn abs_tail(&self, from: f64) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.hi > from)
            .map(|s| {
                let lo = s.lo.max(from);
                s.terms.iter().map(|t| t.abs_volume(lo, s.hi)).sum::<f64>()
            })
            .sum()
    }

    /// `int_0^inf V r dr`.
    pub fn volume(&self) -> f64 {
        self.segments.iter().map(Segment::volume).sum()
    }

    /// `int_0^inf V(r) 2 gamma r exp(-gamma r^2) dr`: the expectation of `V`
    /// over a 2D Gaussian pair-distance density.
    pub fn pair_average(&self, gamma: f64) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| s.terms.iter().map(move |t| t.pair_average(s.lo, s.hi, gamma)))
            .sum()
    }

    pub fn scaled(&self, f: f64) -> Profile {
        Profile {
            segments: self
                .segments
                .iter()
                .map(|s| Segment::new(s.lo, s.hi, s.terms.iter().map(|t| t.scaled(f)).collect()))
                .collect(),
        }
    }

    /// Pointwise sum over the union of both breakpoint sets.
    pub fn merged(&self, other: &Profile) -> Profile {
        let mut edges: Vec<f64> = self.breakpoints();
        edges.extend(other.breakpoints());
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        let mut segments = Vec::with_capacity(edges.len() + 1);
        let mut lo = 0.0;
        for hi in edges.into_iter().chain(std::iter::once(f64::INFINITY)) {
            let probe = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + 1.0 };
            let mut terms = self.segments[self.segment_index(probe)].terms.clone();
            terms.extend_from_slice(&other.segments[other.segment_index(probe)].terms);
            segments.push(Segment::new(lo, hi, terms));
            lo = hi;
        }
        Profile { segments }.simplified()
    }

    fn simplified(self) -> Profile {
        let mut out: Vec<Segment> = Vec::with_capacity(self.segments.len());
        for s in self.segments {
            match out.last_mut() {
                Some(prev) if prev.terms == s.terms => prev.hi = s.hi,
                _ => out.push(s),
            }
        }
        Profile { segments: out }
    }

    /// `(V+, V-)` with `V+ = max(V, 0)` and `V- = min(V, 0)`.
    pub fn split(&self) -> (Profile, Profile) {
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            let mut cuts = vec![seg.lo];
            cuts.extend(self.sign_changes(i));
            cuts.push(seg.hi);
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                if hi <= lo {
                    continue;
                }
                let probe = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + 1.0 };
                let v = seg.eval(probe);
                let (pos, neg) = if v > 0.0 {
                    (seg.terms.clone(), vec![])
                } else if v < 0.0 {
                    (vec![], seg.terms.clone())
                } else {
                    (vec![], vec![])
                };
                plus.push(Segment::new(lo, hi, pos));
                minus.push(Segment::new(lo, hi, neg));
            }
        }
        (
            Profile { segments: plus }.simplified(),
            Profile { segments: minus }.simplified(),
        )
    }

    /// Interior sign changes of segment `i`, refined by bisection.
    fn sign_changes(&self, i: usize) -> Vec<f64> {
        let seg = &self.segments[i];
        if seg.terms.len() < 2 && !seg.terms.iter().any(|t| matches!(t, Term::Gauss { p: 1, .. })) {
            return vec![];
        }
        let hi = if seg.hi.is_finite() {
            seg.hi
        } else {
            let probe = Profile::from_segments(vec![Segment::new(
                0.0,
                f64::INFINITY,
                seg.terms.clone(),
            )]);
            probe.effective_range(1e-14).max(seg.lo + 1.0)
        };
        let n = 4000;
        let f = |r: f64| seg.eval(r);
        let mut roots = Vec::new();
        // uniform in r^2 resolves Gaussian sign changes evenly
        let (u0, u1) = (seg.lo * seg.lo, hi * hi);
        let at = |k: usize| (u0 + (u1 - u0) * k as f64 / n as f64).sqrt();
        let mut prev_r = at(0).max(seg.lo);
        let mut prev = f(if prev_r == 0.0 { 1e-300 } else { prev_r });
        for k in 1..=n {
            let r = at(k);
            let v = f(r);
            if prev != 0.0 && v != 0.0 && prev.signum() != v.signum() {
                if let Ok(root) = numerics::bisect(f, prev_r, r, 0.0) {
                    if root > seg.lo && root < seg.hi {
                        roots.push(root);
                    }
                }
            }
            if v != 0.0 {
                prev = v;
                prev_r = r;
            }
        }
        roots
    }

    /// Smallest value on `(0, r_max]`, sampled densely and at breakpoints.
    pub fn min_value(&self, r_max: f64) -> f64 {
        let mut m = f64::INFINITY;
        for (i, s) in self.segments.iter().enumerate() {
            if s.lo >= r_max {
                break;
            }
            let hi = s.hi.min(r_max);
            let lo = s.lo.max(1e-12 * r_max);
            for k in 0..=400 {
                let r = lo + (hi - lo) * k as f64 / 400.0;
                m = m.min(self.eval_in(i, r));
            }
        }
        m
    }

    /// Largest `|V|` on `[lo, hi]` within segment `i` (sampled).
    pub fn max_abs_in(&self, i: usize, lo: f64, hi: f64) -> f64 {
        let s = &self.segments[i];
        if s.terms.is_empty() {
            return 0.0;
        }
        (0..=8)
            .map(|k| s.eval(lo + (hi - lo) * k as f64 / 8.0).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn swb() -> PotentialSpec {
        PotentialSpec::SquareWellBarrier {
            lambda_minus: 1.0,
            lambda_plus: 2.0,
            rs: 1.0,
            rl: 2.0,
        }
    }

    #[test]
    fn square_well_barrier_values() {
        assert_eq!(evaluate(&swb(), 0.5).unwrap(), -1.0);
        assert_eq!(evaluate(&swb(), 1.5).unwrap(), 2.0);
        assert_eq!(evaluate(&swb(), 3.0).unwrap(), 0.0);
        // edges belong to the inner piece
        assert_eq!(evaluate(&swb(), 1.0).unwrap(), -1.0);
        assert_eq!(evaluate(&swb(), 2.0).unwrap(), 2.0);
    }

    #[test]
    fn fig3_shape_at_origin_and_volume() {
        let f = PotentialSpec::fig3_shape();
        assert!((evaluate(&f, 1e-12).unwrap() + 1.0).abs() < 1e-12);
        // 1 * 1 - 2 * (1/4)
        assert!((net_volume(&f).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn fig3_split_boundary() {
        let (plus, minus) = split(&PotentialSpec::fig3_shape()).unwrap();
        let edge = plus.breakpoints()[0];
        assert!((edge * edge - 2.0 / 3.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(minus.breakpoints(), vec![edge]);
        let (vp, vm) = part_volumes(&PotentialSpec::fig3_shape()).unwrap();
        assert!((vp - 0.595_275_3).abs() < 1e-6, "{vp}");
        assert!((vp + vm - 0.5).abs() < 1e-13);
    }

    #[test]
    fn balanced_family_has_zero_net_volume() {
        let fam = Family::fig3();
        let spec = fam.spec(0.3, 0.3).unwrap();
        assert!(net_volume(&spec).unwrap().abs() < 1e-14);
        let (p, m) = fam.unit_volumes().unwrap();
        assert!((p + m).abs() < 1e-14);
        assert!((evaluate(&spec, 1e-9).unwrap() + 0.3).abs() < 1e-9);
    }

    #[test]
    fn square_volume_closed_form() {
        let (lm, lp, rs, rl) = (1.3, 0.7, 0.8, 2.1);
        let spec = PotentialSpec::SquareWellBarrier {
            lambda_minus: lm,
            lambda_plus: lp,
            rs,
            rl,
        };
        let want = (-lm * rs * rs + lp * (rl * rl - rs * rs)) / (2.0 * rs * rs);
        assert!((net_volume(&spec).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn delta_shell_is_analytic_only() {
        let d = PotentialSpec::DeltaShell {
            lambda_plus: 1.5,
            lambda_minus: 0.5,
            c: 1.0,
            d: 1.0,
        };
        assert_eq!(net_volume(&d).unwrap(), 1.0);
        assert_eq!(evaluate(&d, 1.0), Err(Error::AnalyticOnly));
        assert!(split(&d).is_err());
    }

    #[test]
    fn purely_attractive_has_empty_plus() {
        let g = PotentialSpec::GaussianSum {
            terms: vec![(-1.0, 1.0), (-0.5, 2.0)],
        };
        let (plus, _) = split(&g).unwrap();
        assert!(plus.is_zero());
    }

    #[test]
    fn oscillator_interior_and_cutoff() {
        let spec = PotentialSpec::TruncatedOscillator {
            g: 2.0,
            cutoff: 6.0,
            tail: TailSpec::Zero,
        };
        let rc = 6.0 / 2f64.sqrt();
        for r in [0.1, 1.0, 3.0, rc] {
            let want = 2.0 * (r * r / 2.0 - 1.0);
            assert!((evaluate(&spec, r).unwrap() - want).abs() < 1e-12);
        }
        assert_eq!(evaluate(&spec, rc * 1.0001).unwrap(), 0.0);
        let vol = net_volume(&spec).unwrap();
        let want = 2.0 * (rc.powi(4) / 8.0 - rc * rc / 2.0);
        assert!((vol - want).abs() < 1e-10 * want.abs());
    }

    #[test]
    fn exp_tail_volume_matches_quadrature() {
        let spec = PotentialSpec::TruncatedOscillator {
            g: 1.0,
            cutoff: 3.0,
            tail: TailSpec::ExpDecay {
                rate: 2.0,
                amplitude: 3.5,
            },
        };
        let p = spec.profile().unwrap();
        let q = numerics::gauss_legendre(|r| p.eval(r) * r, 3.0, 40.0, 400);
        let analytic = p.segments()[1].volume();
        assert!((q - analytic).abs() < 1e-12);
    }

    #[test]
    fn pair_average_gaussian_closed_form() {
        let p = PotentialSpec::GaussianSum {
            terms: vec![(-3.0, 0.7)],
        }
        .profile()
        .unwrap();
        let a = 0.5 / 0.49;
        for gamma in [0.01, 1.0, 50.0] {
            let want = -3.0 * gamma / (a + gamma);
            assert!((p.pair_average(gamma) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn pair_average_matches_quadrature_for_pieces() {
        let spec = PotentialSpec::TruncatedOscillator {
            g: 1.7,
            cutoff: 4.0,
            tail: TailSpec::ExpDecay {
                rate: 1.3,
                amplitude: 0.8,
            },
        };
        let p = spec.profile().unwrap();
        for gamma in [0.05, 0.6, 4.0] {
            let mut q = 0.0;
            let edges = [0.0, 4.0 / 1.7f64.sqrt(), 60.0];
            for w in edges.windows(2) {
                q += numerics::gauss_legendre(
                    |r| p.eval(r) * 2.0 * gamma * r * (-gamma * r * r).exp(),
                    w[0],
                    w[1],
                    800,
                );
            }
            assert!((p.pair_average(gamma) - q).abs() < 1e-10, "gamma {gamma}");
        }
    }

    #[test]
    fn serde_round_trip_uses_exact_field_names() {
        let text = serde_json::to_string(&swb()).unwrap();
        assert!(text.contains("\"Rs\"") && text.contains("\"lambda_minus\""));
        let back: PotentialSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, swb());
        let osc: PotentialSpec =
            toml::from_str("kind = \"TruncatedOscillator\"\ng = 2.0\nC = 8.0\n").unwrap();
        assert!(matches!(osc, PotentialSpec::TruncatedOscillator { tail: TailSpec::Zero, .. }));
        let bad = toml::from_str::<PotentialSpec>("kind = \"GaussianSum\"\nterms = []\nextra = 1\n");
        assert!(bad.is_err());
    }

    #[test]
    fn invariants_rejected() {
        let bad = PotentialSpec::CoreWell {
            lambda_plus: 1.0,
            lambda_minus: 1.0,
            rs: 2.0,
            rl: 1.0,
        };
        assert!(matches!(bad.profile(), Err(Error::InvalidPotential(_))));
        let bad = PotentialSpec::GaussianSum {
            terms: vec![(1.0, 0.0)],
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn split_reconstructs(a1 in 0.1f64..5.0, a2 in -8.0f64..-0.1, w1 in 0.3f64..3.0, w2 in 0.1f64..2.0, r in 1e-3f64..8.0) {
            let spec = PotentialSpec::GaussianSum { terms: vec![(a1, w1), (a2, w2)] };
            let p = spec.profile().unwrap();
            let (vp, vm) = p.split();
            let v = p.eval(r);
            prop_assert!((vp.eval(r) + vm.eval(r) - v).abs() <= 1e-14 * (1.0 + v.abs()));
            prop_assert!(vp.eval(r) >= -1e-15 && vm.eval(r) <= 1e-15);
        }

        #[test]
        fn scaled_volume_is_linear(f in -3.0f64..3.0, lm in 0.0f64..4.0, lp in 0.0f64..4.0) {
            let spec = PotentialSpec::CoreWell { lambda_plus: lp, lambda_minus: lm, rs: 1.0, rl: 1.7 };
            let v = net_volume(&spec).unwrap();
            let vs = net_volume(&spec.clone().scaled(f)).unwrap();
            prop_assert!((vs - f * v).abs() <= 1e-12 * (1.0 + v.abs()));
        }

        #[test]
        fn random_radii_reconstruct(rs in 0.2f64..2.0, extra in 0.1f64..3.0, r in 1e-3f64..6.0) {
            let spec = PotentialSpec::SquareWellBarrier { lambda_minus: 2.0, lambda_plus: 0.5, rs, rl: rs + extra };
            let (vp, vm) = split(&spec).unwrap();
            let v = evaluate(&spec, r).unwrap();
            prop_assert_eq!(vp.eval(r) + vm.eval(r), v);
        }
    }
}
