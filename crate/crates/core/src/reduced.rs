//! Closed-form heteroclinic of the singular limit `eps = 0`.
//!
//! Eliminating `A` through `A^2 = (1 - g B^2)_+` leaves a second-order
//! equation for `B` whose right side switches at `B = 1/sqrt(g)`. Each
//! branch has a first integral, and the two level sets through the
//! equilibria meet at the switching value with the same slope, so the
//! orbit is a `sech` arc glued to a `tanh` arc:
//!
//! ```text
//! B(x) = b_cap sech(a (c - x))      x <= x_junction   (b_cap = sqrt(2/(g+1)), a = sqrt(g-1))
//! B(x) = tanh((x - x0) / sqrt 2)    x >= x_junction
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Params, Profile};
use crate::quad::integrate;
use crate::scalar::{lit, Scalar};

/// The glued `eps = 0` orbit, translated so that `B(0)` equals `pin_value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedOrbit<T> {
    pub g: T,
    /// Where `B = 1/sqrt(g)` and `A` reaches zero.
    pub x_junction: T,
    /// Amplitude factor of the inner `sech` branch.
    pub b_cap: T,
    /// Exponential rate of the inner branch, `sqrt(g - 1)`.
    pub rate: T,
    /// Center of the inner `sech`.
    pub inner_center: T,
    /// Center of the outer `tanh`.
    pub outer_center: T,
    /// Value of `B` at `x = 0`.
    pub pin_value: T,
}

/// Builds the orbit for coupling `g`.
///
/// The translate has `B(0) = 1/2` when `g < 4`; otherwise `1/2` lies on the
/// outer branch and the pin falls back to `B(0) = 1/sqrt(2g)`.
pub fn reduced_orbit<T: Scalar>(g: T) -> Result<ReducedOrbit<T>> {
    if !(g > T::one()) || !g.is_finite() {
        return Err(Error::InvalidParams(format!("g must satisfy g > 1 (got {g})")));
    }
    let one = T::one();
    let two = lit::<T>(2.0);
    let b_cap = (two / (g + one)).sqrt();
    let rate = (g - one).sqrt();
    let pin_value = if g < lit(4.0) {
        lit(0.5)
    } else {
        (two * g).sqrt().recip()
    };
    let inner_center = (b_cap / pin_value).acosh() / rate;
    let x_junction = inner_center - (b_cap * g.sqrt()).acosh() / rate;
    let outer_center = x_junction - T::SQRT_2() * g.sqrt().recip().atanh();
    Ok(ReducedOrbit {
        g,
        x_junction,
        b_cap,
        rate,
        inner_center,
        outer_center,
        pin_value,
    })
}

impl<T: Scalar> ReducedOrbit<T> {
    pub fn on_inner(&self, x: T) -> bool {
        x <= self.x_junction
    }

    pub fn b(&self, x: T) -> T {
        if self.on_inner(x) {
            let u = self.rate * (self.inner_center - x);
            self.b_cap / u.cosh()
        } else {
            ((x - self.outer_center) / T::SQRT_2()).tanh()
        }
    }

    pub fn b_prime(&self, x: T) -> T {
        if self.on_inner(x) {
            let u = self.rate * (self.inner_center - x);
            self.rate * self.b_cap * u.tanh() / u.cosh()
        } else {
            let s = ((x - self.outer_center) / T::SQRT_2()).cosh().recip();
            s * s / T::SQRT_2()
        }
    }

    pub fn b_second(&self, x: T) -> T {
        if self.on_inner(x) {
            let u = self.rate * (self.inner_center - x);
            let (t, s) = (u.tanh(), u.cosh().recip());
            self.rate * self.rate * self.b_cap * s * (t * t - s * s)
        } else {
            let z = (x - self.outer_center) / T::SQRT_2();
            let s = z.cosh().recip();
            -(s * s) * z.tanh()
        }
    }

    /// `A = sqrt((1 - g B^2)_+)`, identically zero from the junction on.
    pub fn a(&self, x: T) -> T {
        if x >= self.x_junction {
            return T::zero();
        }
        let b = self.b(x);
        (T::one() - self.g * b * b).max(T::zero()).sqrt()
    }

    /// Right side of the switched `B` equation at amplitude `b`.
    pub fn rhs(&self, b: T) -> T {
        let one = T::one();
        if self.g * b * b >= one {
            -b + b * b * b
        } else {
            (self.g - one) * b + (one - self.g * self.g) * b * b * b
        }
    }

    /// `B'^2 + (1-g) B^2 - (1-g^2) B^4 / 2`; zero along the inner branch.
    pub fn invariant_inner(&self, x: T) -> T {
        let (b, bp) = (self.b(x), self.b_prime(x));
        let one = T::one();
        let b2 = b * b;
        bp * bp + (one - self.g) * b2 - (one - self.g * self.g) * lit::<T>(0.5) * b2 * b2
    }

    /// `B'^2 + B^2 - B^4 / 2`; one half along the outer branch.
    pub fn invariant_outer(&self, x: T) -> T {
        let (b, bp) = (self.b(x), self.b_prime(x));
        let b2 = b * b;
        bp * bp + b2 - lit::<T>(0.5) * b2 * b2
    }

    /// Slope at the junction from the first integrals, `(g-1) / (sqrt 2 g)`.
    pub fn junction_slope(&self) -> T {
        (self.g - T::one()) / (T::SQRT_2() * self.g)
    }

    /// One-sided slopes at the junction evaluated on each closed form.
    pub fn junction_slopes(&self) -> (T, T) {
        let xj = self.x_junction;
        let u = self.rate * (self.inner_center - xj);
        let left = self.rate * self.b_cap * u.tanh() / u.cosh();
        let s = ((xj - self.outer_center) / T::SQRT_2()).cosh().recip();
        (left, s * s / T::SQRT_2())
    }

    /// Integrand of the reduced functional at `x`.
    pub fn integrand(&self, x: T) -> T {
        let (b, bp) = (self.b(x), self.b_prime(x));
        let one = T::one();
        let b2 = b * b;
        let a2 = (one - self.g * b2).max(T::zero());
        let r = a2 + b2 - one;
        lit::<T>(0.5) * bp * bp
            + lit::<T>(0.25) * r * r
            + lit::<T>(0.5) * (self.g - one) * a2 * b2
    }

    /// Finite interval outside of which the integrand is below `1e-30`.
    pub fn support(&self) -> (T, T) {
        let left = self.inner_center - lit::<T>(40.0) / self.rate;
        let right = self.outer_center + lit::<T>(30.0) * T::SQRT_2();
        (left.min(self.x_junction), right.max(self.x_junction))
    }
}

/// Value of the reduced functional along the orbit, by adaptive quadrature
/// split at the junction.
pub fn reduced_energy<T: Scalar>(orbit: &ReducedOrbit<T>, quad_tol: T) -> Result<T> {
    if !(quad_tol > T::zero()) {
        return Err(Error::InvalidOptions(format!(
            "quadrature tolerance must be > 0 (got {quad_tol})"
        )));
    }
    let (lo, hi) = orbit.support();
    let half = lit::<T>(0.5) * quad_tol;
    let f = |x: T| orbit.integrand(x);
    let left = integrate(f, lo, orbit.x_junction, half)?;
    let right = integrate(f, orbit.x_junction, hi, half)?;
    Ok(left + right)
}

/// Samples the orbit on the grid of `params` with exact endpoint clamps.
pub fn sample_reduced<T: Scalar>(orbit: &ReducedOrbit<T>, params: &Params<T>) -> Profile<T> {
    Profile::from_fn(params, |x| (orbit.a(x), orbit.b(x)))
}
