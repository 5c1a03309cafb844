//! Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};

// abscissae and weights as tabulated, wider than f64
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_PANELS: usize = 4096;

fn panel<T: Scalar>(f: &impl Fn(T) -> T, a: T, b: T) -> (T, T) {
    let half = lit::<T>(0.5);
    let c = half * (a + b);
    let r = half * (b - a);
    let fc = f(c);
    let mut kron = fc * lit(WGK[7]);
    let mut gauss = fc * lit(WG[3]);
    for j in 0..7 {
        let dx = r * lit(XGK[j]);
        let s = f(c - dx) + f(c + dx);
        kron += s * lit(WGK[j]);
        if j % 2 == 1 {
            gauss += s * lit(WG[j / 2]);
        }
    }
    (kron * r, ((kron - gauss) * r).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by global
/// bisection of the panel with the largest error estimate.
pub fn integrate<T: Scalar>(f: impl Fn(T) -> T, a: T, b: T, tol: T) -> Result<T> {
    let (v, e) = panel(&f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total: T = panels.iter().map(|p| p.2).sum();
        let err: T = panels.iter().map(|p| p.3).sum();
        if err <= tol {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS || !err.is_finite() {
            return Err(Error::Quadrature {
                tol: to_f64(tol),
                estimate: to_f64(err),
            });
        }
        let (k, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| {
                if p.3 > acc.1 {
                    (i, p.3)
                } else {
                    acc
                }
            });
        let (pa, pb, _, _) = panels.swap_remove(k);
        let mid = lit::<T>(0.5) * (pa + pb);
        if !(mid > pa && mid < pb) {
            return Err(Error::Quadrature {
                tol: to_f64(tol),
                estimate: to_f64(err),
            });
        }
        let (v1, e1) = panel(&f, pa, mid);
        let (v2, e2) = panel(&f, mid, pb);
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
}
