//! Linear second-order ODE integrators shared by the two-body oracle and
//! the hyperradial solver.
//!
//! The log-grid integrator works on `y_tt = q(t) y` with `t = ln r`, split
//! into pieces whose boundaries coincide with the discontinuities of `q`.
//! Each piece uses a uniform Numerov step; the first step of a piece is
//! seeded by RK4 and the outgoing slope is a fourth-order backward
//! difference, so no stencil ever straddles a jump.

/// Uniform-step interval `[t0, t1]` on which `q(seg, t)` is smooth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub seg: usize,
}

/// Split `[t_start, t_end]` at `cuts` (in t) and into chunks of at most
/// `max_len`. `seg_of` maps a piece midpoint to its coefficient segment.
pub fn pieces(
    t_start: f64,
    t_end: f64,
    cuts: &[f64],
    max_len: f64,
    seg_of: impl Fn(f64) -> usize,
) -> Vec<Piece> {
    let mut edges = vec![t_start];
    let mut inner: Vec<f64> = cuts
        .iter()
        .copied()
        .filter(|&c| c > t_start && c < t_end)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    edges.extend(inner);
    edges.push(t_end);
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let n = ((w[1] - w[0]) / max_len).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / n as f64;
        let seg = seg_of(0.5 * (w[0] + w[1]));
        for k in 0..n {
            let t1 = if k == n - 1 { w[1] } else { w[0] + (k + 1) as f64 * h };
            out.push(Piece {
                t0: w[0] + k as f64 * h,
                t1,
                seg,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct Shot {
    /// Sample abscissae (only when samples were requested).
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    /// Sign changes of `y` strictly inside the integration range.
    pub nodes: usize,
    pub y_end: f64,
    /// `dy/dt` at the end point.
    pub dy_end: f64,
    /// Natural log of the factor divided out to avoid overflow.
    pub log_scale: f64,
}

const RESCALE: f64 = 1e200;

/// Numerov shooting for `y_tt = q(seg, t) y` from `(y0, dy0)` at the start
/// of the first piece. The step on each piece is the smaller of `h_max` and
/// `acc / sqrt(max |q|)`.
pub fn numerov(
    pieces: &[Piece],
    q: impl Fn(usize, f64) -> f64,
    y0: f64,
    dy0: f64,
    h_max: f64,
    acc: f64,
    keep: bool,
) -> Shot {
    let mut shot = Shot::default();
    let (mut y, mut dy) = (y0, dy0);
    if keep {
        if let Some(p) = pieces.first() {
            shot.t.push(p.t0);
            shot.y.push(y);
        }
    }
    let mut last_nonzero = y;
    for p in pieces {
        let len = p.t1 - p.t0;
        let qmax = (0..=8)
            .map(|k| q(p.seg, p.t0 + len * k as f64 / 8.0).abs())
            .fold(0.0, f64::max);
        let h_target = h_max.min(acc / qmax.sqrt().max(1e-300));
        let n = ((len / h_target).ceil() as usize).max(8);
        let h = len / n as f64;
        let h2 = h * h / 12.0;

        // seed the second point with RK4
        let (mut y1, mut d1) = (y, dy);
        let sub = 8;
        let hs = h / sub as f64;
        for k in 0..sub {
            let t = p.t0 + k as f64 * hs;
            (y1, d1) = rk4_step2(|tt| q(p.seg, tt), t, y1, d1, hs);
        }
        let _ = d1;

        let mut ys_tail = [0.0f64; 5];
        let mut prev = y;
        let mut cur = y1;
        let mut f_prev = q(p.seg, p.t0);
        let mut f_cur = q(p.seg, p.t0 + h);
        ys_tail[3] = prev;
        ys_tail[4] = cur;
        count_node(&mut shot.nodes, &mut last_nonzero, cur);
        if keep {
            shot.t.push(p.t0 + h);
            shot.y.push(cur);
        }
        for k in 2..=n {
            let t_next = if k == n { p.t1 } else { p.t0 + k as f64 * h };
            let f_next = q(p.seg, t_next);
            let next = (2.0 * (1.0 + 5.0 * h2 * f_cur) * cur - (1.0 - h2 * f_prev) * prev)
                / (1.0 - h2 * f_next);
            prev = cur;
            cur = next;
            f_prev = f_cur;
            f_cur = f_next;
            ys_tail.rotate_left(1);
            ys_tail[4] = cur;
            count_node(&mut shot.nodes, &mut last_nonzero, cur);
            if keep {
                shot.t.push(t_next);
                shot.y.push(cur);
            }
            if cur.abs() > RESCALE {
                prev /= RESCALE;
                cur /= RESCALE;
                for v in ys_tail.iter_mut() {
                    *v /= RESCALE;
                }
                last_nonzero /= RESCALE;
                shot.log_scale += RESCALE.ln();
                for v in shot.y.iter_mut() {
                    *v /= RESCALE;
                }
            }
        }
        y = cur;
        dy = (25.0 * ys_tail[4] - 48.0 * ys_tail[3] + 36.0 * ys_tail[2] - 16.0 * ys_tail[1]
            + 3.0 * ys_tail[0])
            / (12.0 * h);
    }
    shot.y_end = y;
    shot.dy_end = dy;
    shot
}

fn count_node(nodes: &mut usize, last_nonzero: &mut f64, v: f64) {
    if v != 0.0 {
        if *last_nonzero != 0.0 && v.signum() != last_nonzero.signum() {
            *nodes += 1;
        }
        *last_nonzero = v;
    }
}

/// One RK4 step of `y'' = q(t) y`.
pub fn rk4_step2(q: impl Fn(f64) -> f64, t: f64, y: f64, dy: f64, h: f64) -> (f64, f64) {
    let qa = q(t);
    let qm = q(t + 0.5 * h);
    let qb = q(t + h);
    let k1y = dy;
    let k1d = qa * y;
    let k2y = dy + 0.5 * h * k1d;
    let k2d = qm * (y + 0.5 * h * k1y);
    let k3y = dy + 0.5 * h * k2d;
    let k3d = qm * (y + 0.5 * h * k2y);
    let k4y = dy + h * k3d;
    let k4d = qb * (y + h * k3y);
    (
        y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
        dy + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
    )
}

/// RK4 for `u'' + (c/r) u' = q(r) u` on `[r0, r1]` with `n` uniform steps.
/// Returns `(u, u', interior sign changes)`.
pub fn rk4_radial(
    q: impl Fn(f64) -> f64,
    c: f64,
    r0: f64,
    r1: f64,
    u0: f64,
    du0: f64,
    n: usize,
) -> (f64, f64, usize) {
    let h = (r1 - r0) / n as f64;
    let f = |r: f64, u: f64, du: f64| {
        let drag = if c == 0.0 { 0.0 } else { c / r * du };
        (du, q(r) * u - drag)
    };
    let (mut u, mut du) = (u0, du0);
    let mut nodes = 0;
    let mut last = u0;
    for k in 0..n {
        let r = r0 + k as f64 * h;
        let (a1, b1) = f(r, u, du);
        let (a2, b2) = f(r + 0.5 * h, u + 0.5 * h * a1, du + 0.5 * h * b1);
        let (a3, b3) = f(r + 0.5 * h, u + 0.5 * h * a2, du + 0.5 * h * b2);
        let (a4, b4) = f(r + h, u + h * a3, du + h * b3);
        u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        du += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if k + 1 < n {
            count_node(&mut nodes, &mut last, u);
        }
    }
    (u, du, nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerov_reproduces_exponential_and_cosine() {
        let ps = pieces(0.0, 3.0, &[1.1], 0.5, |_| 0);
        let shot = numerov(&ps, |_, _| 4.0, 1.0, 2.0, 0.01, 0.01, false);
        let want = (6.0f64).exp();
        assert!(((shot.y_end * shot.log_scale.exp()) / want - 1.0).abs() < 1e-8);
        assert!((shot.dy_end / shot.y_end - 2.0).abs() < 1e-8);

        let shot = numerov(&ps, |_, _| -9.0, 1.0, 0.0, 0.01, 0.005, true);
        assert!((shot.y_end - (9.0f64).cos()).abs() < 1e-8);
        assert!((shot.dy_end + 3.0 * (9.0f64).sin()).abs() < 1e-7);
        // cos(3t) vanishes at t = pi/6 + k pi/3 < 3
        assert_eq!(shot.nodes, 3);
        assert_eq!(shot.t.len(), shot.y.len());
    }

    #[test]
    fn numerov_handles_jump_in_coefficient() {
        // q = -1 on [0, 1), q = +1 on [1, 2]
        let ps = pieces(0.0, 2.0, &[1.0], 0.25, |t| usize::from(t > 1.0));
        let q = |s: usize, _t: f64| if s == 0 { -1.0 } else { 1.0 };
        let shot = numerov(&ps, q, 0.0, 1.0, 0.005, 0.005, false);
        let (y1, d1) = (1f64.sin(), 1f64.cos());
        let want = y1 * 1f64.cosh() + d1 * 1f64.sinh();
        assert!((shot.y_end - want).abs() < 1e-9);
    }

    #[test]
    fn rescaling_keeps_log_derivative() {
        let ps = pieces(0.0, 600.0, &[], 1.0, |_| 0);
        let shot = numerov(&ps, |_, _| 4.0, 1.0, 2.0, 0.01, 0.02, false);
        assert!(shot.log_scale > 0.0);
        assert!((shot.dy_end / shot.y_end - 2.0).abs() < 1e-6);
    }

    #[test]
    fn rk4_radial_bessel() {
        // u'' + u'/r + u = 0 from small r: J0
        let r0 = 1e-4;
        let (u, du, nodes) =
            rk4_radial(|_| -1.0, 1.0, r0, 5.0, 1.0 - r0 * r0 / 4.0, -r0 / 2.0, 20000);
        assert!((u - crate::specfun::j0(5.0)).abs() < 1e-9);
        assert!((du + crate::specfun::j1(5.0)).abs() < 1e-9);
        assert_eq!(nodes, 1);
    }
}
