//! Bounded scalar minimization (Brent's method: golden-section steps
//! with parabolic interpolation when it is safe).

const GOLDEN: f64 = 0.381_966_011_250_105_1; // 2 - phi
const ZEPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct BrentResult {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` on `[lo, hi]` starting from the interior point `x0`,
/// to absolute tolerance `tol` in the argument.
pub fn brent_min<F>(mut f: F, lo: f64, hi: f64, x0: f64, tol: f64, max_iter: usize) -> BrentResult
where
    F: FnMut(f64) -> f64,
{
    debug_assert!(lo < hi && x0 >= lo && x0 <= hi);
    let (mut a, mut b) = (lo, hi);
    let mut x = x0.clamp(lo, hi);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;

    // d is the last step, e the one before it (used to gate the
    // parabolic step).
    let mut d = 0.0f64;
    let mut e = 0.0f64;

    for iter in 0..max_iter {
        let m = 0.5 * (a + b);
        let tol1 = tol * x.abs() + ZEPS;
        let tol2 = 2.0 * tol1;

        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            return BrentResult {
                x,
                fx,
                iterations: iter,
                converged: true,
            };
        }

        let mut use_golden = true;
        if e.abs() > tol1 {
            // Fit a parabola through (v, fv), (w, fw), (x, fx).
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            let e_prev = e;
            e = d;
            if p.abs() < (0.5 * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if (u - a) < tol2 || (b - u) < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }

        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + if d >= 0.0 { tol1 } else { -tol1 }
        };
        let fu = f(u);

        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }

    BrentResult {
        x,
        fx,
        iterations: max_iter,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let r = brent_min(|x| (x - 0.3).powi(2), 0.0, 1.0, 0.5, 1e-6, 500);
        assert!(r.converged);
        assert!((r.x - 0.3).abs() < 1e-6);
    }

    #[test]
    fn handles_boundary_minimum() {
        let r = brent_min(|x| x, 0.0, 1.0, 0.5, 1e-6, 500);
        assert!(r.converged);
        assert!(r.x < 1e-5);
    }

    #[test]
    fn handles_flat_function() {
        let r = brent_min(|_| 1.0, 0.0, 1.0, 0.5, 1e-6, 500);
        assert!(r.converged);
    }

    #[test]
    fn sharp_asymmetric_minimum() {
        let r = brent_min(
            |x: f64| (x - 0.9137).abs().powf(1.5),
            0.0,
            1.0,
            0.5,
            1e-6,
            500,
        );
        assert!(r.converged);
        assert!((r.x - 0.9137).abs() < 1e-5);
    }
}
