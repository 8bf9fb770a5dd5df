//! Three identical bosons in two dimensions by the stochastic variational
//! method.
//!
//! Trial functions are symmetrized correlated Gaussians
//! `exp(-sum_{i<j} a_ij r_ij^2)` in the mass-scaled Jacobi coordinates
//! `x = (r1 - r2)/sqrt(2)`, `y = sqrt(2/3) ((r1 + r2)/2 - r3)`, so that the
//! kinetic energy is `-(1/2)(grad_x^2 + grad_y^2)` and `x^2 + y^2 = rho^2`
//! with `3 rho^2 = sum r_ij^2`.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{Family, PotentialSpec, Profile};
use crate::twobody::{self, fmt_value, Method, ThresholdOptions, ThresholdPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianElement {
    /// `(a12, a13, a23)`.
    pub alphas: [f64; 3],
}

impl GaussianElement {
    pub fn new(alphas: [f64; 3]) -> Result<Self> {
        if alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::Domain {
                what: "Gaussian width parameter",
                x: alphas.iter().copied().fold(f64::INFINITY, f64::min),
            });
        }
        Ok(GaussianElement { alphas })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRecord {
    pub trial_count: usize,
    pub energy_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianBasis {
    pub elements: Vec<GaussianElement>,
    pub seed: u64,
    pub growth_log: Vec<GrowthRecord>,
}

/// `converged` holds when the ground energy moved by less than
/// `max(1e-3 |E0|, eps_bind)` over the last tenth of the growth steps (at
/// least five of them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum3 {
    pub energies: Vec<f64>,
    pub basis_size: usize,
    pub rms_radius_ground: f64,
    /// `sqrt(<rho^2>)` of the optimized states, ground first.
    pub rms_radii: Vec<f64>,
    pub converged: bool,
}

impl Spectrum3 {
    pub fn ground(&self) -> f64 {
        self.energies.first().copied().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmOptions {
    /// Candidates per growth step.
    pub trials: usize,
    /// Log-uniform sampling range of `a_ij b^2`.
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Length `b`; derived from the potential when absent.
    pub length_scale: Option<f64>,
    /// Number of lowest eigenvalues whose sum is minimized.
    pub targets: usize,
    pub eps_bind: f64,
    pub cond_max: f64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            trials: 30,
            alpha_min: 1e-3,
            alpha_max: 1e3,
            length_scale: None,
            targets: 1,
            eps_bind: 1e-6,
            cond_max: 1e12,
        }
    }
}

impl SvmOptions {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.targets == 0 {
            return Err(Error::Config("trials and targets must be positive".into()));
        }
        if !(self.alpha_min > 0.0 && self.alpha_max > self.alpha_min) {
            return Err(Error::Config("need 0 < alpha_min < alpha_max".into()));
        }
        if !(self.eps_bind > 0.0 && self.cond_max > 1.0) {
            return Err(Error::Config("eps_bind and cond_max must be positive".into()));
        }
        Ok(())
    }
}

/// Characteristic length of a pair potential, used to scale the sampling
/// range.
pub fn length_scale(spec: &PotentialSpec) -> Result<f64> {
    Ok(match spec {
        PotentialSpec::SquareWellBarrier { rl, .. } | PotentialSpec::CoreWell { rl, .. } => *rl,
        PotentialSpec::GaussianSum { terms } if terms.is_empty() => 1.0,
        PotentialSpec::GaussianSum { terms } => terms.iter().map(|t| t.1).fold(0.0, f64::max),
        PotentialSpec::TruncatedOscillator { g, .. } => g.powf(-0.25),
        PotentialSpec::Scaled { base, .. } | PotentialSpec::Weighted { base, .. } => length_scale(base)?,
        PotentialSpec::DeltaShell { .. } => return Err(Error::AnalyticOnly),
    })
}

// ---------------------------------------------------------------------------
// correlated-Gaussian algebra

#[derive(Debug, Clone, Copy, PartialEq)]
struct Sym2 {
    xx: f64,
    xy: f64,
    yy: f64,
}

impl Sym2 {
    fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }
    fn add(&self, o: &Sym2) -> Sym2 {
        Sym2 {
            xx: self.xx + o.xx,
            xy: self.xy + o.xy,
            yy: self.yy + o.yy,
        }
    }
}

const H32: f64 = 1.224_744_871_391_589; // sqrt(3/2)
const PAIRS: [[f64; 2]; 3] = [[SQRT_2, 0.0], [1.0 / SQRT_2, H32], [-1.0 / SQRT_2, H32]];
const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn quad_form(alphas: [f64; 3]) -> Sym2 {
    let mut m = Sym2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };
    for (a, w) in alphas.iter().zip(PAIRS) {
        m.xx += a * w[0] * w[0];
        m.xy += a * w[0] * w[1];
        m.yy += a * w[1] * w[1];
    }
    m
}

/// Unnormalized `(overlap, kinetic, potential, rho^2)` between two
/// unsymmetrized Gaussians.
fn pair_block(a: &Sym2, b: &Sym2, profile: &Profile) -> [f64; 4] {
    let c = a.add(b);
    let det = c.det();
    let o = PI * PI / det;
    // C^-1 = adj(C)/det
    let (ixx, ixy, iyy) = (c.yy / det, -c.xy / det, c.xx / det);
    // tr(A B C^-1)
    let ab_xx = a.xx * b.xx + a.xy * b.xy;
    let ab_xy = a.xx * b.xy + a.xy * b.yy;
    let ab_yx = a.xy * b.xx + a.yy * b.xy;
    let ab_yy = a.xy * b.xy + a.yy * b.yy;
    let tr = ab_xx * ixx + ab_xy * ixy + ab_yx * ixy + ab_yy * iyy;
    let kinetic = 2.0 * tr * o;
    let rho2 = (ixx + iyy) * o;
    let mut v = 0.0;
    for w in PAIRS {
        let q = w[0] * w[0] * ixx + 2.0 * w[0] * w[1] * ixy + w[1] * w[1] * iyy;
        v += profile.pair_average(1.0 / q);
    }
    [o, kinetic, v * o, rho2]
}

#[derive(Debug, Clone)]
struct Elem {
    alphas: [f64; 3],
    form: Sym2,
    perms: [Sym2; 6],
    /// `1/sqrt(<g|g>)` of the symmetrized function.
    norm: f64,
}

impl Elem {
    fn new(alphas: [f64; 3], profile: &Profile) -> Option<Elem> {
        let form = quad_form(alphas);
        let perms = PERMS.map(|p| quad_form([alphas[p[0]], alphas[p[1]], alphas[p[2]]]));
        let mut e = Elem {
            alphas,
            form,
            perms,
            norm: 1.0,
        };
        let s = sym_block(&e, &e, profile)[0];
        if !(s > 0.0 && s.is_finite()) {
            return None;
        }
        e.norm = 1.0 / s.sqrt();
        Some(e)
    }
}

/// Symmetrized and normalized block between two elements.
fn sym_block(a: &Elem, b: &Elem, profile: &Profile) -> [f64; 4] {
    let mut acc = [0.0; 4];
    for pb in &b.perms {
        let blk = pair_block(&a.form, pb, profile);
        for k in 0..4 {
            acc[k] += blk[k];
        }
    }
    let n = a.norm * b.norm;
    acc.map(|v| v * n)
}

struct Eigen {
    values: Vec<f64>,
    /// Columns are S-orthonormal eigenvectors.
    vectors: DMatrix<f64>,
}

struct Solver<'a> {
    profile: &'a Profile,
    elems: Vec<Elem>,
    s: DMatrix<f64>,
    h: DMatrix<f64>,
    r2: DMatrix<f64>,
    eig: Option<Eigen>,
    cond_max: f64,
}

fn generalized_eigen(h: &DMatrix<f64>, s: &DMatrix<f64>) -> Option<Eigen> {
    let chol = s.clone().cholesky()?;
    let l = chol.l();
    let linv_h = l.solve_lower_triangular(h)?;
    let m = l.solve_lower_triangular(&linv_h.transpose())?;
    let m = 0.5 * (&m + m.transpose());
    let dim = m.nrows();
    let se = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(dim, order.len(), |r, c| se.eigenvectors[(r, order[c])]);
    let vectors = l.transpose().solve_upper_triangular(&y)?;
    if values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(Eigen { values, vectors })
}

fn condition_number(s: &DMatrix<f64>) -> f64 {
    let ev = s.symmetric_eigenvalues();
    let max = ev.iter().copied().fold(f64::MIN, f64::max);
    let min = ev.iter().copied().fold(f64::MAX, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Lowest `n` roots of the bordered secular equation
/// `a - x - sum b_i^2/(e_i - x) = 0`.
fn secular_roots(e: &[f64], b: &[f64], a: f64, n: usize) -> Vec<f64> {
    let f = |x: f64| a - x - e.iter().zip(b).map(|(ei, bi)| bi * bi / (ei - x)).sum::<f64>();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let k_max = n.min(e.len() + 1);
    let mut roots = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let lo = if k == 0 {
            e.first().copied().unwrap_or(a).min(a) - bnorm - 1e-300
        } else {
            e[k - 1]
        };
        let hi = if k < e.len() {
            e[k]
        } else {
            e.last().copied().unwrap_or(a).max(a) + bnorm + 1e-300
        };
        let (mut l, mut h) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (l + h);
            if m <= l || m >= h {
                break;
            }
            if f(m) > 0.0 {
                l = m;
            } else {
                h = m;
            }
        }
        roots.push(0.5 * (l + h));
    }
    roots
}

impl<'a> Solver<'a> {
    fn new(profile: &'a Profile, cond_max: f64) -> Self {
        Solver {
            profile,
            elems: Vec::new(),
            s: DMatrix::zeros(0, 0),
            h: DMatrix::zeros(0, 0),
            r2: DMatrix::zeros(0, 0),
            eig: None,
            cond_max,
        }
    }

    fn len(&self) -> usize {
        self.elems.len()
    }

    fn columns(&self, cand: &Elem) -> (Vec<[f64; 4]>, [f64; 4]) {
        let cols = self.elems.iter().map(|e| sym_block(e, cand, self.profile)).collect();
        let diag = sym_block(cand, cand, self.profile);
        (cols, diag)
    }

    /// Sum of the lowest `n` eigenvalues after adding `cand`, or `None`
    /// when the candidate is numerically dependent on the basis.
    fn score(&self, cand: &Elem, n: usize) -> Option<(f64, Vec<[f64; 4]>, [f64; 4])> {
        let (cols, diag) = self.columns(cand);
        let hphi = diag[1] + diag[2];
        if !hphi.is_finite() {
            return None;
        }
        let Some(eig) = &self.eig else {
            return Some((hphi / diag[0], cols, diag));
        };
        let k = self.len();
        let sc = DVector::from_iterator(k, cols.iter().map(|c| c[0]));
        let hc = DVector::from_iterator(k, cols.iter().map(|c| c[1] + c[2]));
        let st = eig.vectors.tr_mul(&sc);
        let ht = eig.vectors.tr_mul(&hc);
        let n2 = diag[0] - st.norm_squared();
        if !(n2 > 1e-10 * diag[0]) {
            return None;
        }
        let mut a = hphi;
        for i in 0..k {
            a += -2.0 * st[i] * ht[i] + st[i] * st[i] * eig.values[i];
        }
        a /= n2;
        let nn = n2.sqrt();
        let b: Vec<f64> = (0..k).map(|i| (ht[i] - eig.values[i] * st[i]) / nn).collect();
        let roots = secular_roots(&eig.values, &b, a, n);
        let obj: f64 = roots.iter().sum();
        obj.is_finite().then_some((obj, cols, diag))
    }

    fn push(&mut self, cand: Elem, cols: &[[f64; 4]], diag: [f64; 4]) -> bool {
        let k = self.len();
        let grow = |m: &DMatrix<f64>, col: &dyn Fn(usize) -> f64, d: f64| {
            let mut out = m.clone().resize(k + 1, k + 1, 0.0);
            for i in 0..k {
                out[(i, k)] = col(i);
                out[(k, i)] = col(i);
            }
            out[(k, k)] = d;
            out
        };
        let s = grow(&self.s, &|i| cols[i][0], diag[0]);
        let h = grow(&self.h, &|i| cols[i][1] + cols[i][2], diag[1] + diag[2]);
        let r2 = grow(&self.r2, &|i| cols[i][3], diag[3]);
        if k > 0 && condition_number(&s) > self.cond_max {
            return false;
        }
        let Some(eig) = generalized_eigen(&h, &s) else {
            return false;
        };
        self.s = s;
        self.h = h;
        self.r2 = r2;
        self.eig = Some(eig);
        self.elems.push(cand);
        true
    }

    fn energies(&self) -> Vec<f64> {
        self.eig.as_ref().map(|e| e.values.clone()).unwrap_or_default()
    }

    fn rms(&self, k: usize) -> f64 {
        let Some(eig) = &self.eig else { return f64::NAN };
        if k >= eig.values.len() {
            return f64::NAN;
        }
        let c = eig.vectors.column(k);
        let v = (&self.r2 * c).dot(&c);
        v.sqrt()
    }
}

fn sample(rng: &mut ChaCha8Rng, opts: &SvmOptions, b: f64) -> [f64; 3] {
    let (lo, hi) = (opts.alpha_min.ln(), opts.alpha_max.ln());
    let mut a = [0.0; 3];
    for v in &mut a {
        *v = rng.random_range(lo..hi).exp() / (b * b);
    }
    a
}

fn grow(
    solver: &mut Solver,
    rng: &mut ChaCha8Rng,
    steps: usize,
    opts: &SvmOptions,
    b: f64,
    log: &mut Vec<GrowthRecord>,
) {
    for _ in 0..steps {
        let mut scored: Vec<(f64, usize, Elem, Vec<[f64; 4]>, [f64; 4])> = Vec::new();
        for idx in 0..opts.trials {
            let alphas = sample(rng, opts, b);
            let Some(cand) = Elem::new(alphas, solver.profile) else { continue };
            if let Some((obj, cols, diag)) = solver.score(&cand, opts.targets) {
                scored.push((obj, idx, cand, cols, diag));
            }
        }
        scored.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        for (_, _, cand, cols, diag) in scored {
            if solver.push(cand, &cols, diag) {
                break;
            }
        }
        let e0 = solver.energies().first().copied().unwrap_or(f64::INFINITY);
        log.push(GrowthRecord {
            trial_count: opts.trials,
            energy_after: e0,
        });
    }
}

fn converged(log: &[GrowthRecord], eps: f64) -> bool {
    let n = log.len();
    let w = (n / 10).max(5);
    if n <= w {
        return false;
    }
    let now = log[n - 1].energy_after;
    let then = log[n - 1 - w].energy_after;
    (then - now).abs() <= (1e-3 * now.abs()).max(eps)
}

fn spectrum_of(solver: &Solver, log: &[GrowthRecord], opts: &SvmOptions) -> Spectrum3 {
    let energies = solver.energies();
    let keep = opts.targets.max(2).min(energies.len());
    let rms_radii: Vec<f64> = (0..keep).map(|k| solver.rms(k)).collect();
    Spectrum3 {
        basis_size: solver.len(),
        rms_radius_ground: rms_radii.first().copied().unwrap_or(f64::NAN),
        rms_radii,
        energies,
        converged: converged(log, opts.eps_bind),
    }
}

fn check_supported(spec: &PotentialSpec) -> Result<Profile> {
    if spec.is_analytic_only() {
        return Err(Error::Unsupported(
            "delta shells have no three-body matrix elements".into(),
        ));
    }
    spec.profile()
}

/// Grow a basis of `budget` elements for `spec` from `seed`.
pub fn trimer_spectrum(spec: &PotentialSpec, basis_budget: usize, seed: u64) -> Result<Spectrum3> {
    Ok(trimer_spectrum_with(spec, basis_budget, seed, &SvmOptions::default())?.0)
}

pub fn trimer_spectrum_with(
    spec: &PotentialSpec,
    basis_budget: usize,
    seed: u64,
    opts: &SvmOptions,
) -> Result<(Spectrum3, GaussianBasis)> {
    let profile = check_supported(spec)?;
    opts.validate()?;
    if basis_budget == 0 {
        return Err(Error::Config("basis budget must be at least 1".into()));
    }
    let b = opts.length_scale.map_or_else(|| length_scale(spec), Ok)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut solver = Solver::new(&profile, opts.cond_max);
    let mut log = Vec::with_capacity(basis_budget);
    grow(&mut solver, &mut rng, basis_budget, opts, b, &mut log);
    if solver.len() == 0 {
        return Err(Error::IllConditioned("no candidate could be accepted".into()));
    }
    let spectrum = spectrum_of(&solver, &log, opts);
    let basis = GaussianBasis {
        elements: solver.elems.iter().map(|e| GaussianElement { alphas: e.alphas }).collect(),
        seed,
        growth_log: log,
    };
    Ok((spectrum, basis))
}

/// Spectrum of `spec` in a fixed, already optimized basis.
pub fn spectrum_in_basis(basis: &GaussianBasis, spec: &PotentialSpec, opts: &SvmOptions) -> Result<Spectrum3> {
    let profile = check_supported(spec)?;
    let mut solver = Solver::new(&profile, f64::INFINITY);
    let elems: Vec<Elem> = basis
        .elements
        .iter()
        .map(|e| Elem::new(e.alphas, &profile).ok_or_else(|| Error::IllConditioned("degenerate element".into())))
        .collect::<Result<_>>()?;
    let k = elems.len();
    let mut s = DMatrix::zeros(k, k);
    let mut h = DMatrix::zeros(k, k);
    let mut r2 = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let blk = sym_block(&elems[i], &elems[j], &profile);
            s[(i, j)] = blk[0];
            s[(j, i)] = blk[0];
            h[(i, j)] = blk[1] + blk[2];
            h[(j, i)] = blk[1] + blk[2];
            r2[(i, j)] = blk[3];
            r2[(j, i)] = blk[3];
        }
    }
    let eig = generalized_eigen(&h, &s)
        .ok_or_else(|| Error::IllConditioned("overlap matrix lost positive definiteness".into()))?;
    solver.s = s;
    solver.h = h;
    solver.r2 = r2;
    solver.eig = Some(eig);
    solver.elems = elems;
    Ok(spectrum_of(&solver, &basis.growth_log, opts))
}

/// Continue growing `basis` by `steps` elements for `spec`.
pub fn extend_basis(
    basis: &GaussianBasis,
    spec: &PotentialSpec,
    steps: usize,
    stream: u64,
    opts: &SvmOptions,
) -> Result<(Spectrum3, GaussianBasis)> {
    let profile = check_supported(spec)?;
    let b = opts.length_scale.map_or_else(|| length_scale(spec), Ok)?;
    let mut solver = Solver::new(&profile, opts.cond_max);
    for e in &basis.elements {
        let Some(el) = Elem::new(e.alphas, &profile) else { continue };
        let (cols, diag) = solver.columns(&el);
        solver.push(el, &cols, diag);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(basis.seed);
    rng.set_stream(stream);
    let mut log = basis.growth_log.clone();
    grow(&mut solver, &mut rng, steps, opts, b, &mut log);
    let spectrum = spectrum_of(&solver, &log, opts);
    let out = GaussianBasis {
        elements: solver.elems.iter().map(|e| GaussianElement { alphas: e.alphas }).collect(),
        seed: basis.seed,
        growth_log: log,
    };
    Ok((spectrum, out))
}

// ---------------------------------------------------------------------------
// three-body thresholds

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThreeBodyOptions {
    pub budget: usize,
    pub seed: u64,
    /// Relative bracket width for the coupling bisection.
    pub tol: f64,
    pub svm: SvmOptions,
    pub two_body: ThresholdOptions,
}

impl Default for ThreeBodyOptions {
    fn default() -> Self {
        ThreeBodyOptions {
            budget: 120,
            seed: 1,
            tol: 1e-4,
            svm: SvmOptions::default(),
            two_body: ThresholdOptions::default(),
        }
    }
}

/// Threshold of a coupling at which the trimer binds, found by bisection on a
/// fixed basis with re-growth at the current estimate.
struct CouplingSearch<'a> {
    make: &'a dyn Fn(f64) -> Result<PotentialSpec>,
    opts: &'a ThreeBodyOptions,
}

struct SearchResult {
    value: f64,
    residual: f64,
    basis_size: usize,
    bound_side: f64,
}

impl CouplingSearch<'_> {
    fn is_bound(&self, basis: &GaussianBasis, c: f64) -> Result<bool> {
        let spec = (self.make)(c)?;
        Ok(spectrum_in_basis(basis, &spec, &self.opts.svm)?.ground() < -self.opts.svm.eps_bind)
    }

    /// `bound` is a coupling where the grown basis binds, `unbound` one
    /// where binding is not expected.
    fn run(&self, basis: GaussianBasis, bound: f64, unbound: f64) -> Result<SearchResult> {
        let mut basis = basis;
        let mut estimate = f64::NAN;
        let mut bracket = (bound, unbound);
        let extra = (self.opts.budget / 4).max(1);
        for round in 0..4u64 {
            let (mut b, mut u) = (bound, unbound);
            if !self.is_bound(&basis, b)? {
                return Err(Error::NonConvergence(format!(
                    "trimer not bound at the reference coupling {b}"
                )));
            }
            if self.is_bound(&basis, u)? {
                return Err(Error::RootNotFound(format!("trimer still bound at coupling {u}")));
            }
            while (u - b).abs() > self.opts.tol * u.abs().max(b.abs()) {
                let m = if b > 0.0 && u > 0.0 { (b * u).sqrt() } else { 0.5 * (b + u) };
                if m == b || m == u {
                    break;
                }
                if self.is_bound(&basis, m)? {
                    b = m;
                } else {
                    u = m;
                }
            }
            let next = 0.5 * (b + u);
            let settled = estimate.is_finite() && (next - estimate).abs() <= self.opts.tol * next.abs();
            estimate = next;
            bracket = (b, u);
            if settled || round == 3 {
                break;
            }
            let spec = (self.make)(b)?;
            basis = extend_basis(&basis, &spec, extra, round + 1, &self.opts.svm)?.1;
        }
        Ok(SearchResult {
            value: estimate,
            residual: (bracket.1 - bracket.0).abs() / estimate.abs().max(1e-300),
            basis_size: basis.elements.len(),
            bound_side: bracket.0,
        })
    }
}

fn grow_at(spec: &PotentialSpec, opts: &ThreeBodyOptions, budget: usize) -> Result<(Spectrum3, GaussianBasis)> {
    let (spec3, basis) = trimer_spectrum_with(spec, budget, opts.seed, &opts.svm)?;
    if !spec3.converged {
        // one retry with twice the budget
        return trimer_spectrum_with(spec, 2 * budget, opts.seed, &opts.svm);
    }
    Ok((spec3, basis))
}

/// Outcome of a three-body threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeBodyThreshold {
    pub point: ThresholdPoint,
    pub basis_size: usize,
    /// Coupling on the bound side of the final bracket, if any.
    pub bound_at: Option<f64>,
}

/// Three-body critical repulsion `Lambda_+^cr` at fixed attraction. Starts
/// just above the two-body threshold; a trimer still bound there opens a
/// window, otherwise the thresholds coincide.
pub fn critical_three_body_lambda_plus(
    family: &Family,
    lambda_minus: f64,
    opts: &ThreeBodyOptions,
) -> Result<ThreeBodyThreshold> {
    let two = twobody::critical_lambda_plus(family, lambda_minus, &opts.two_body)?;
    critical_three_body_lambda_plus_from(family, &two, opts)
}

pub fn critical_three_body_lambda_plus_from(
    family: &Family,
    two: &ThresholdPoint,
    opts: &ThreeBodyOptions,
) -> Result<ThreeBodyThreshold> {
    let lambda_minus = two.lambda_minus;
    let same = |basis_size| ThreeBodyThreshold {
        point: ThresholdPoint {
            lambda_minus,
            lambda_plus_cr: two.lambda_plus_cr,
            method: Method::Svm,
            residual: two.residual,
        },
        basis_size,
        bound_at: None,
    };
    if two.lambda_plus_cr.is_infinite() || two.lambda_plus_cr <= 0.0 {
        return Ok(same(0));
    }
    if let Family::DeltaShell { c, d } = family {
        if c == d {
            return Ok(same(0));
        }
        return Err(Error::Unsupported(
            "three-body delta shells are covered only for c = d".into(),
        ));
    }
    let start = two.lambda_plus_cr * (1.0 + 10.0 * opts.tol.max(two.residual));
    let make = |lp: f64| family.spec(lambda_minus, lp);
    let (spec3, basis) = grow_at(&make(start)?, opts, opts.budget / 2 + 1)?;
    if spec3.ground() >= -opts.svm.eps_bind {
        return Ok(same(basis.elements.len()));
    }
    let search = CouplingSearch {
        make: &make,
        opts,
    };
    let mut hi = start * 2.0;
    while search.is_bound(&basis, hi)? {
        hi *= 2.0;
        if hi > opts.two_body.ceiling {
            return Ok(ThreeBodyThreshold {
                point: ThresholdPoint {
                    lambda_minus,
                    lambda_plus_cr: f64::INFINITY,
                    method: Method::Svm,
                    residual: 0.0,
                },
                basis_size: basis.elements.len(),
                bound_at: Some(hi),
            });
        }
    }
    let r = search.run(basis, start, hi)?;
    Ok(ThreeBodyThreshold {
        point: ThresholdPoint {
            lambda_minus,
            lambda_plus_cr: r.value.max(two.lambda_plus_cr),
            method: Method::Svm,
            residual: r.residual,
        },
        basis_size: r.basis_size,
        bound_at: Some(r.bound_side),
    })
}

/// Smallest attraction binding three particles at fixed repulsion,
/// bracketed from the two-body value (three bind whenever two do).
pub fn critical_three_body_lambda_minus(
    family: &Family,
    lambda_plus: f64,
    opts: &ThreeBodyOptions,
) -> Result<(f64, f64)> {
    let two = twobody::critical_lambda_minus(family, lambda_plus, opts.two_body.tol)?;
    let make = |lm: f64| family.spec(lm, lambda_plus);
    let start = two * (1.0 - 10.0 * opts.tol);
    let (spec3, basis) = grow_at(&make(start)?, opts, opts.budget / 2 + 1)?;
    if spec3.ground() >= -opts.svm.eps_bind {
        return Ok((two, two));
    }
    let search = CouplingSearch {
        make: &make,
        opts,
    };
    let mut lo = start * 0.5;
    while search.is_bound(&basis, lo)? {
        lo *= 0.5;
        if lo < 1e-8 {
            return Err(Error::RootNotFound("trimer bound at vanishing attraction".into()));
        }
    }
    let r = search.run(basis, start, lo)?;
    Ok((r.value.min(two), two))
}

/// Threshold in a general coupling `g` (binding for `g` above it), with the
/// basis grown at `bound_at`.
pub fn critical_three_body_coupling(
    make: &dyn Fn(f64) -> Result<PotentialSpec>,
    bound_at: f64,
    unbound_at: f64,
    opts: &ThreeBodyOptions,
) -> Result<ThresholdPoint> {
    let (spec3, basis) = grow_at(&make(bound_at)?, opts, opts.budget / 2 + 1)?;
    if spec3.ground() >= -opts.svm.eps_bind {
        return Err(Error::NonConvergence(format!("trimer not bound at g = {bound_at}")));
    }
    let search = CouplingSearch {
        make,
        opts,
    };
    let r = search.run(basis, bound_at, unbound_at)?;
    Ok(ThresholdPoint {
        lambda_minus: f64::NAN,
        lambda_plus_cr: r.value,
        method: Method::Svm,
        residual: r.residual,
    })
}

// ---------------------------------------------------------------------------
// Borromean windows

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorromeanWindow {
    pub lambda_minus: f64,
    pub lambda_plus_cr: f64,
    #[serde(rename = "Lambda_plus_cr")]
    pub big_lambda_plus_cr: f64,
    pub window_open: bool,
    pub basis_size: usize,
    /// Combined relative bracket width of both thresholds.
    pub residual: f64,
}

/// Pair the two- and three-body thresholds at one attraction and enforce
/// the ordering and the 3/2 rule.
pub fn borromean_point(family: &Family, lambda_minus: f64, opts: &ThreeBodyOptions) -> Result<BorromeanWindow> {
    let two = twobody::critical_lambda_plus(family, lambda_minus, &opts.two_body)?;
    let three = critical_three_body_lambda_plus_from(family, &two, opts)?;
    let (l2, l3) = (two.lambda_plus_cr, three.point.lambda_plus_cr);
    if l3 < l2 {
        return Err(Error::Invariant(format!(
            "three-body threshold {l3} below two-body threshold {l2} at lambda_minus = {lambda_minus}"
        )));
    }
    if let Some(lp) = three.bound_at {
        check_three_halves(&family.spec(lambda_minus, lp)?)?;
    }
    let residual = two.residual + three.point.residual;
    let window_open = l3.is_finite() && l3 - l2 > residual * l3 + opts.tol * l2;
    Ok(BorromeanWindow {
        lambda_minus,
        lambda_plus_cr: l2,
        big_lambda_plus_cr: l3,
        window_open,
        basis_size: three.basis_size,
        residual,
    })
}

/// A bound trimer at couplings `g` requires a bound dimer at `3g/2`.
pub fn check_three_halves(spec: &PotentialSpec) -> Result<()> {
    let scaled = PotentialSpec::Scaled {
        base: Box::new(spec.clone()),
        factor: 1.5,
    };
    if twobody::zero_energy_bound_count(&scaled)? == 0 {
        return Err(Error::Invariant(
            "trimer bound but the dimer at 3/2 of the coupling is not".into(),
        ));
    }
    Ok(())
}

pub fn borromean_scan(family: &Family, grid: &[f64], opts: &ThreeBodyOptions) -> Result<Vec<BorromeanWindow>> {
    if grid.is_empty() {
        return Err(Error::Config("empty lambda_minus grid".into()));
    }
    grid.iter().map(|&lm| borromean_point(family, lm, opts)).collect()
}

pub fn write_scan_csv<W: Write>(rows: &[BorromeanWindow], mut out: W) -> Result<()> {
    writeln!(out, "lambda_minus,lambda_plus_cr,Lambda_plus_cr,window_open,basis_size,residual")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_value(r.lambda_minus),
            fmt_value(r.lambda_plus_cr),
            fmt_value(r.big_lambda_plus_cr),
            r.window_open,
            r.basis_size,
            fmt_value(r.residual)
        )?;
    }
    Ok(())
}
