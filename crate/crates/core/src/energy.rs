//! Discrete energy on a clamped grid, its exact gradient, and the
//! pointwise Euler-Lagrange residual.
//!
//! Outside `[-L, L]` the profile is extended by the equilibrium constants
//! (`A = 1, B = 0` on the left, `A = 0, B = 1` on the right). `A''` and
//! `B'` are second-order central differences at every node; the three
//! integrands are summed with the composite trapezoid rule.
//!
//! Unknowns of the minimization are `A` at nodes `2..=n-2` and `B` at
//! nodes `1..=n-1`. `A` is held at its clamp value on the two outermost
//! nodes of each side so that the gradient with respect to every free `A`
//! value is exactly `h` times the five-point fourth-difference equation.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{grad_potential, potential, EnergyReport, Params, Profile};
use crate::scalar::{lit, Scalar};

/// Values taken by `(A, B)` beyond each end of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ghosts<T> {
    pub left: (T, T),
    pub right: (T, T),
}

impl<T: Scalar> Default for Ghosts<T> {
    fn default() -> Self {
        Ghosts {
            left: (T::one(), T::zero()),
            right: (T::zero(), T::one()),
        }
    }
}

/// Gradient of the discrete energy with respect to the free nodal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteGradient<T> {
    /// Derivatives with respect to `A` at nodes `2..=n-2`.
    pub da: Vec<T>,
    /// Derivatives with respect to `B` at nodes `1..=n-1`.
    pub db: Vec<T>,
}

impl<T: Scalar> DiscreteGradient<T> {
    pub fn sup_norm(&self) -> T {
        self.da
            .iter()
            .chain(&self.db)
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Pairing with a full-length nodal perturbation `(dir_a, dir_b)`.
    pub fn dot(&self, dir_a: &[T], dir_b: &[T]) -> T {
        let mut s = T::zero();
        for (k, &v) in self.da.iter().enumerate() {
            s += v * dir_a[k + A_FIRST];
        }
        for (k, &v) in self.db.iter().enumerate() {
            s += v * dir_b[k + B_FIRST];
        }
        s
    }
}

/// Pointwise residual of the fourth/second order system at nodes `1..=n-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport<T> {
    /// `eps A'''' - A (1 - A^2 - g B^2)`
    pub res_a: Vec<T>,
    /// `B'' - B (-1 + g A^2 + B^2)`
    pub res_b: Vec<T>,
    pub sup_norm: T,
}

/// First free `A` node.
pub(crate) const A_FIRST: usize = 2;
/// First free `B` node.
pub(crate) const B_FIRST: usize = 1;

pub(crate) fn a_free(n: usize) -> std::ops::RangeInclusive<usize> {
    A_FIRST..=n - 2
}

pub(crate) fn b_free(n: usize) -> std::ops::RangeInclusive<usize> {
    B_FIRST..=n - 1
}

/// Number of optimization unknowns for `n` intervals.
pub(crate) fn dof_count(n: usize) -> usize {
    (n - 3) + (n - 1)
}

/// Ghost-extended read of a nodal array.
#[inline(always)]
pub(crate) fn ghosted<T: Copy>(v: &[T], i: isize, left: T, right: T) -> T {
    if i < 0 {
        left
    } else if i as usize >= v.len() {
        right
    } else {
        v[i as usize]
    }
}

#[inline(always)]
fn trap_weight<T: Scalar>(i: usize, n: usize, h: T) -> T {
    if i == 0 || i == n {
        lit::<T>(0.5) * h
    } else {
        h
    }
}

/// Energy of nodal arrays; accumulates the full nodal gradient into
/// `grad` when given (entries for clamped nodes are computed but unused).
pub(crate) fn evaluate<T: Scalar>(
    a: &[T],
    b: &[T],
    eps: T,
    g: T,
    h: T,
    ghosts: &Ghosts<T>,
    mut grad: Option<(&mut [T], &mut [T])>,
) -> EnergyReport<T> {
    let n = a.len() - 1;
    let (al, bl) = ghosts.left;
    let (ar, br) = ghosts.right;
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let inv_h2 = (h * h).recip();
    let inv_2h = (two * h).recip();

    if let Some((ga, gb)) = grad.as_mut() {
        ga.iter_mut().for_each(|v| *v = T::zero());
        gb.iter_mut().for_each(|v| *v = T::zero());
    }

    let mut bending = T::zero();
    let mut dirichlet = T::zero();
    let mut pot = T::zero();
    for i in 0..=n {
        let w = trap_weight(i, n, h);
        let ii = i as isize;
        let am = ghosted(a, ii - 1, al, ar);
        let ap = ghosted(a, ii + 1, al, ar);
        let bm = ghosted(b, ii - 1, bl, br);
        let bp = ghosted(b, ii + 1, bl, br);

        let d2a = (am - two * a[i] + ap) * inv_h2;
        let d1b = (bp - bm) * inv_2h;
        bending += w * d2a * d2a;
        dirichlet += w * d1b * d1b;
        pot += w * potential(a[i], b[i], g);

        if let Some((ga, gb)) = grad.as_mut() {
            let ta = eps * w * d2a * inv_h2;
            if i >= 1 {
                ga[i - 1] += ta;
            }
            ga[i] -= two * ta;
            if i < n {
                ga[i + 1] += ta;
            }
            let tb = w * d1b * inv_2h;
            if i >= 1 {
                gb[i - 1] -= tb;
            }
            if i < n {
                gb[i + 1] += tb;
            }
            let (pa, pb) = grad_potential(a[i], b[i], g);
            ga[i] += w * pa;
            gb[i] += w * pb;
        }
    }
    let bending = half * eps * bending;
    let dirichlet = half * dirichlet;
    EnergyReport {
        total: bending + dirichlet + pot,
        bending,
        dirichlet,
        potential: pot,
    }
}

/// `E(a1, b1) - E(a0, b0)` for two arrays sharing the same ghosts,
/// accumulated from the nodal differences so that the result keeps its
/// relative accuracy when the change is far below the rounding error of
/// the energy itself.
pub(crate) fn energy_change<T: Scalar>(
    (a0, b0): (&[T], &[T]),
    (a1, b1): (&[T], &[T]),
    eps: T,
    g: T,
    h: T,
    ghosts: &Ghosts<T>,
) -> T {
    let n = a0.len() - 1;
    let (al, bl) = ghosts.left;
    let (ar, br) = ghosts.right;
    let (zero, half, two) = (T::zero(), lit::<T>(0.5), lit::<T>(2.0));
    let inv_h2 = (h * h).recip();
    let inv_2h = (two * h).recip();
    let da = |i: isize| ghosted(a1, i, al, ar) - ghosted(a0, i, al, ar);
    let db = |i: isize| ghosted(b1, i, bl, br) - ghosted(b0, i, bl, br);
    let d2 = |v: &[T], i: isize, l: T, r: T| {
        (ghosted(v, i - 1, l, r) - two * v[i as usize] + ghosted(v, i + 1, l, r)) * inv_h2
    };
    let d1 = |v: &[T], i: isize, l: T, r: T| {
        (ghosted(v, i + 1, l, r) - ghosted(v, i - 1, l, r)) * inv_2h
    };

    let mut bending = zero;
    let mut dirichlet = zero;
    let mut pot = zero;
    for i in 0..=n {
        let w = trap_weight(i, n, h);
        let ii = i as isize;
        let dd2 = (da(ii - 1) - two * da(ii) + da(ii + 1)) * inv_h2;
        bending += w * dd2 * (d2(a0, ii, al, ar) + d2(a1, ii, al, ar));
        let dd1 = (db(ii + 1) - db(ii - 1)) * inv_2h;
        dirichlet += w * dd1 * (d1(b0, ii, bl, br) + d1(b1, ii, bl, br));

        let (x0, y0, x1, y1) = (a0[i], b0[i], a1[i], b1[i]);
        let (dx, dy) = (x1 - x0, y1 - y0);
        let ds = (x0 + x1) * dx + (y0 + y1) * dy;
        let s_sum = x0 * x0 + y0 * y0 + x1 * x1 + y1 * y1 - two;
        let dprod = dx * y0 + x0 * dy + dx * dy;
        let p_sum = x1 * y1 + x0 * y0;
        pot += w * (lit::<T>(0.25) * ds * s_sum + half * (g - T::one()) * dprod * p_sum);
    }
    half * eps * bending + half * dirichlet + pot
}

/// Discrete energy of a clamped profile.
pub fn energy<T: Scalar>(p: &Profile<T>, params: &Params<T>) -> Result<EnergyReport<T>> {
    params.validate()?;
    p.check(params)?;
    Ok(evaluate(
        &p.a,
        &p.b,
        params.eps,
        params.g,
        params.step(),
        &Ghosts::default(),
        None,
    ))
}

/// Exact gradient of [`energy`] with respect to the free nodal values.
pub fn energy_gradient<T: Scalar>(
    p: &Profile<T>,
    params: &Params<T>,
) -> Result<DiscreteGradient<T>> {
    params.validate()?;
    p.check(params)?;
    let n = params.n;
    let mut ga = vec![T::zero(); n + 1];
    let mut gb = vec![T::zero(); n + 1];
    evaluate(
        &p.a,
        &p.b,
        params.eps,
        params.g,
        params.step(),
        &Ghosts::default(),
        Some((&mut ga, &mut gb)),
    );
    Ok(DiscreteGradient {
        da: ga[a_free(n)].to_vec(),
        db: gb[b_free(n)].to_vec(),
    })
}

/// Euler-Lagrange residual with the standard equilibrium ghosts.
pub fn el_residual<T: Scalar>(p: &Profile<T>, params: &Params<T>) -> Result<ResidualReport<T>> {
    params.validate()?;
    p.check(params)?;
    Ok(el_residual_with_ghosts(p, params, &Ghosts::default()))
}

/// Euler-Lagrange residual with caller-supplied ghost values; no clamp check.
pub fn el_residual_with_ghosts<T: Scalar>(
    p: &Profile<T>,
    params: &Params<T>,
    ghosts: &Ghosts<T>,
) -> ResidualReport<T> {
    let n = p.intervals();
    let h = p.step();
    let (al, bl) = ghosts.left;
    let (ar, br) = ghosts.right;
    let (eps, g) = (params.eps, params.g);
    let inv_h2 = (h * h).recip();
    let inv_h4 = inv_h2 * inv_h2;
    let (four, six, two) = (lit::<T>(4.0), lit::<T>(6.0), lit::<T>(2.0));

    let mut res_a = Vec::with_capacity(n.saturating_sub(1));
    let mut res_b = Vec::with_capacity(n.saturating_sub(1));
    let mut sup = T::zero();
    for i in 1..n {
        let ii = i as isize;
        let a = |k: isize| ghosted(&p.a, ii + k, al, ar);
        let b = |k: isize| ghosted(&p.b, ii + k, bl, br);
        let d4a = (a(-2) - four * a(-1) + six * a(0) - four * a(1) + a(2)) * inv_h4;
        let d2b = (b(-1) - two * b(0) + b(1)) * inv_h2;
        let (ai, bi) = (p.a[i], p.b[i]);
        let ra = eps * d4a - ai * (T::one() - ai * ai - g * bi * bi);
        let rb = d2b - bi * (-T::one() + g * ai * ai + bi * bi);
        sup = sup.max(ra.abs()).max(rb.abs());
        res_a.push(ra);
        res_b.push(rb);
    }
    ResidualReport {
        res_a,
        res_b,
        sup_norm: sup,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate;

    fn tanh_profile(params: &Params<f64>) -> Profile<f64> {
        Profile::from_fn(params, |x| {
            (0.5 * (1.0 - (x + 0.3).tanh()), 0.5 * (1.0 + (0.8 * x).tanh()))
        })
    }

    #[test]
    fn rejects_profile_violating_right_clamp() {
        let params = Params::<f64>::new(1.0, 2.0, 10.0, 40).unwrap();
        let mut p = Profile::from_fn(&params, |_| (1.0, 0.0));
        p.a[40] = 1.0;
        p.b[40] = 0.0;
        assert!(energy(&p, &params).is_err());
        assert!(energy_gradient(&p, &params).is_err());
    }

    #[test]
    fn decomposition_adds_up() {
        let params = Params::<f64>::new(0.7, 1.6, 12.0, 300).unwrap();
        let e = energy(&tanh_profile(&params), &params).unwrap();
        assert!(e.bending >= 0.0 && e.dirichlet >= 0.0 && e.potential >= 0.0);
        assert!((e.total - (e.bending + e.dirichlet + e.potential)).abs() <= 1e-12 * e.total);
    }

    #[test]
    fn linear_interpolant_matches_quadrature_oracle() {
        let (eps, g, l) = (1.0, 2.0, 10.0);
        let params = Params::<f64>::new(eps, g, l, 40).unwrap();
        let lin = |x: f64| ((l - x) / (2.0 * l), (x + l) / (2.0 * l));
        let p = Profile::from_fn(&params, lin);
        let e = energy(&p, &params).unwrap();
        // A'' vanishes on the open interval; B' = 1 / 2L.
        let oracle = integrate(
            |x: f64| {
                let (a, b) = lin(x);
                0.5 / (4.0 * l * l) + 0.25 * (a * a + b * b - 1.0).powi(2)
                    + 0.5 * (g - 1.0) * a * a * b * b
            },
            -l,
            l,
            1e-13,
        )
        .unwrap();
        assert!(e.total.is_finite() && e.total > 0.0);
        assert!((e.total - oracle).abs() <= 0.01 * oracle, "{} vs {}", e.total, oracle);
    }

    #[test]
    fn energy_converges_at_second_order() {
        let es: Vec<f64> = [200, 400, 800]
            .iter()
            .map(|&n| {
                let params = Params::<f64>::new(1.0, 2.0, 20.0, n).unwrap();
                energy(&tanh_profile(&params), &params).unwrap().total
            })
            .collect();
        let ratio = (es[0] - es[1]) / (es[1] - es[2]);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    #[test]
    fn gradient_passes_directional_difference_test() {
        let params = Params::<f64>::new(0.8, 2.5, 8.0, 64).unwrap();
        let mut seed = 7u64;
        let n = params.n;
        for _ in 0..20 {
            let mut p = tanh_profile(&params);
            for i in 1..n {
                p.a[i] += 0.2 * lcg(&mut seed);
                p.b[i] += 0.2 * lcg(&mut seed);
            }
            let mut da = vec![0.0; n + 1];
            let mut db = vec![0.0; n + 1];
            for i in a_free(n) {
                da[i] = lcg(&mut seed);
            }
            for i in b_free(n) {
                db[i] = lcg(&mut seed);
            }
            let grad = energy_gradient(&p, &params).unwrap();
            let exact = grad.dot(&da, &db);
            let quotient = |t: f64| {
                let shifted = |s: f64| {
                    let mut q = p.clone();
                    for i in 0..=n {
                        q.a[i] += s * da[i];
                        q.b[i] += s * db[i];
                    }
                    energy(&q, &params).unwrap().total
                };
                (shifted(t) - shifted(-t)) / (2.0 * t)
            };
            let e1 = (quotient(1e-3) - exact).abs();
            let e2 = (quotient(1e-4) - exact).abs();
            assert!(e2 <= 1e-6 * (1.0 + exact.abs()), "e2 = {e2}");
            // second order: a tenfold smaller step shrinks the error ~100x,
            // until roundoff takes over
            assert!(e2 <= e1 / 50.0 || e2 < 1e-9, "e1 = {e1}, e2 = {e2}");
        }
    }

    #[test]
    fn energy_change_matches_difference_and_resolves_tiny_steps() {
        let params = Params::<f64>::new(0.8, 2.5, 8.0, 64).unwrap();
        let (n, h) = (params.n, params.step());
        let ghosts = Ghosts::default();
        let mut seed = 11u64;
        let p = tanh_profile(&params);
        let mut dir_a = vec![0.0; n + 1];
        let mut dir_b = vec![0.0; n + 1];
        for i in 1..n {
            dir_a[i] = lcg(&mut seed);
            dir_b[i] = lcg(&mut seed);
        }
        let moved = |t: f64| {
            let a: Vec<f64> = p.a.iter().zip(&dir_a).map(|(v, d)| v + t * d).collect();
            let b: Vec<f64> = p.b.iter().zip(&dir_b).map(|(v, d)| v + t * d).collect();
            (a, b)
        };
        let change = |t: f64| {
            let (a, b) = moved(t);
            energy_change((&p.a, &p.b), (&a, &b), 0.8, 2.5, h, &ghosts)
        };
        let total = |t: f64| {
            let (a, b) = moved(t);
            evaluate(&a, &b, 0.8, 2.5, h, &ghosts, None).total
        };
        for t in [0.3, 0.05, 1e-3] {
            let diff = total(t) - total(0.0);
            assert!((change(t) - diff).abs() <= 1e-12 * (1.0 + diff.abs()));
        }
        // far below the rounding error of the total, the change still
        // follows the directional derivative
        let mut ga = vec![0.0; n + 1];
        let mut gb = vec![0.0; n + 1];
        evaluate(&p.a, &p.b, 0.8, 2.5, h, &ghosts, Some((&mut ga, &mut gb)));
        let slope: f64 = (1..n).map(|i| ga[i] * dir_a[i] + gb[i] * dir_b[i]).sum();
        let t = 1e-13;
        assert!((change(t) / t - slope).abs() <= 1e-3 * slope.abs());
    }

    #[test]
    fn gradient_is_local_for_a_sharp_wall() {
        let params = Params::<f64>::new(1.0, 2.0, 10.0, 100).unwrap();
        let p = Profile::from_fn(&params, |x| if x < 0.0 { (1.0, 0.0) } else { (0.0, 1.0) });
        let grad = energy_gradient(&p, &params).unwrap();
        let mid = 50;
        for (k, v) in grad.da.iter().enumerate() {
            let node = k + A_FIRST;
            if node.abs_diff(mid) > 2 {
                assert_eq!(*v, 0.0, "A node {node}");
            }
        }
        for (k, v) in grad.db.iter().enumerate() {
            let node = k + B_FIRST;
            if node.abs_diff(mid) > 2 {
                assert_eq!(*v, 0.0, "B node {node}");
            }
        }
        assert!(grad.sup_norm() > 0.0);
    }

    #[test]
    fn ghost_reads_match_explicit_padding() {
        let params = Params::<f64>::new(1.0, 2.0, 5.0, 20).unwrap();
        let p = tanh_profile(&params);
        let g = Ghosts::default();
        let mut padded_a = vec![g.left.0, g.left.0];
        padded_a.extend(&p.a);
        padded_a.extend([g.right.0, g.right.0]);
        for i in -2isize..=22 {
            let direct = ghosted(&p.a, i, g.left.0, g.right.0);
            let pad = padded_a[(i + 2) as usize];
            assert_eq!(direct.to_bits(), pad.to_bits());
        }
    }

    #[test]
    fn equilibrium_has_zero_residual_with_matching_ghosts() {
        let params = Params::<f64>::new(1.0, 2.0, 5.0, 40).unwrap();
        let p = Profile {
            x: params.grid(),
            a: vec![0.0; 41],
            b: vec![1.0; 41],
        };
        let ghosts = Ghosts {
            left: (0.0, 1.0),
            right: (0.0, 1.0),
        };
        let r = el_residual_with_ghosts(&p, &params, &ghosts);
        assert_eq!(r.sup_norm, 0.0);
        assert_eq!(r.res_a.len(), 39);
    }

    #[test]
    fn free_a_gradient_is_h_times_residual() {
        let params = Params::<f64>::new(0.9, 1.7, 6.0, 60).unwrap();
        let p = tanh_profile(&params);
        let grad = energy_gradient(&p, &params).unwrap();
        let res = el_residual(&p, &params).unwrap();
        let h = params.step();
        for (k, g) in grad.da.iter().enumerate() {
            let node = k + A_FIRST;
            let r = res.res_a[node - 1];
            assert!((g / h - r).abs() <= 1e-9 * (1.0 + r.abs()), "node {node}");
        }
    }
}
