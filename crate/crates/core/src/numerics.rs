//! Bracketing, bisection and fixed-order quadrature.

use crate::error::{Error, Result};

const GL_X: [f64; 5] = [
    0.148_874_338_981_631_22,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_W: [f64; 5] = [
    0.295_524_224_714_753,
    0.269_266_719_309_996_5,
    0.219_086_362_515_982,
    0.149_451_349_150_580_36,
    0.066_671_344_308_688_07,
];

/// Composite 10-point Gauss-Legendre rule over `pieces` equal panels.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    for k in 0..pieces {
        let mid = a + (k as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for (x, w) in GL_X.iter().zip(GL_W) {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += s * half;
    }
    total
}

/// Bisection on a sign change of `f` in `[a, b]` down to `|b - a| <= tol`
/// (or machine resolution when `tol` is zero).
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::RootNotFound(format!(
            "no sign change on [{a}, {b}]: f = {fa:e}, {fb:e}"
        )));
    }
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if m <= a.min(b) || m >= a.max(b) || (b - a).abs() <= tol {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Bisection on a monotone boolean predicate: `pred(lo)` true, `pred(hi)`
/// false. Returns the final bracket.
pub fn bisect_predicate<E>(
    mut pred: impl FnMut(f64) -> std::result::Result<bool, E>,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    geometric: bool,
) -> std::result::Result<(f64, f64), E> {
    for _ in 0..400 {
        if (hi - lo).abs() <= rel_tol * hi.abs().max(lo.abs()) {
            break;
        }
        let mid = if geometric && lo > 0.0 {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// As [`bisect_predicate`] with an absolute bracket width.
pub fn bisect_predicate_abs<E>(
    mut pred: impl FnMut(f64) -> std::result::Result<bool, E>,
    mut lo: f64,
    mut hi: f64,
    abs_tol: f64,
) -> std::result::Result<(f64, f64), E> {
    while (hi - lo).abs() > abs_tol {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// First sign change of `f` on the sample points `xs`, refined by bisection.
pub fn first_root_on(f: impl Fn(f64) -> f64, xs: &[f64], tol: f64) -> Option<f64> {
    let mut prev_x = *xs.first()?;
    let mut prev = f(prev_x);
    for &x in &xs[1..] {
        let v = f(x);
        if prev == 0.0 {
            return Some(prev_x);
        }
        if v.signum() != prev.signum() && !v.is_nan() {
            return bisect(&f, prev_x, x, tol).ok();
        }
        prev = v;
        prev_x = x;
    }
    None
}

/// Last sign change of `f` on the sample points `xs`, refined by bisection.
pub fn last_root_on(f: impl Fn(f64) -> f64, xs: &[f64], tol: f64) -> Option<f64> {
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    for k in (1..xs.len()).rev() {
        if vals[k - 1] != 0.0 && vals[k] != 0.0 && vals[k - 1].signum() != vals[k].signum() {
            return bisect(&f, xs[k - 1], xs[k], tol).ok();
        }
    }
    None
}

pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > 0.0 && n >= 2);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|k| {
            if k == n - 1 {
                b
            } else {
                (la + (lb - la) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|k| {
            if k == n - 1 {
                b
            } else {
                a + (b - a) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Linear interpolation on a sorted abscissa, clamped at both ends.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let t = (x - x0) / (x1 - x0);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

/// Cubic Lagrange interpolation on the four nearest nodes.
pub fn interp_cubic(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n < 4 {
        return interp(xs, ys, x);
    }
    let k = xs.partition_point(|&v| v <= x).clamp(2, n - 2) - 2;
    let mut sum = 0.0;
    for i in k..k + 4 {
        let mut li = 1.0;
        for j in k..k + 4 {
            if j != i {
                li *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        sum += li * ys[i];
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_polynomials_and_exp() {
        let v = gauss_legendre(|x| x.powi(19), 0.0, 1.0, 1);
        assert!((v - 0.05).abs() < 1e-15);
        let v = gauss_legendre(f64::exp, 0.0, 3.0, 4);
        assert!((v - (3f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn bisect_finds_root_and_reports_missing_bracket() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn predicate_bracket_converges() {
        let (lo, hi) =
            bisect_predicate(|x| Ok::<_, ()>(x < 3.7), 1.0, 10.0, 1e-12, true).unwrap();
        assert!(lo < 3.7 && hi >= 3.7 && hi - lo < 1e-10);
    }

    #[test]
    fn root_scans() {
        let xs = linspace(0.0, 10.0, 101);
        let first = first_root_on(f64::sin, &xs[1..], 1e-14).unwrap();
        let last = last_root_on(f64::sin, &xs, 1e-14).unwrap();
        assert!((first - std::f64::consts::PI).abs() < 1e-12);
        assert!((last - 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn interpolation() {
        let xs = linspace(0.0, 1.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        assert!((interp_cubic(&xs, &ys, 0.37) - 0.37f64.powi(3)).abs() < 1e-14);
        assert!((interp(&xs, &ys, 0.35) - 0.5 * (0.3f64.powi(3) + 0.4f64.powi(3))).abs() < 1e-15);
    }
}
