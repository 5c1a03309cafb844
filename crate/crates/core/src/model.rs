//! Domain types, the coupling potential and its derivatives, the two
//! equilibria, and the change of variables back to the unscaled system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Model parameters plus the truncation of the real line to `[-L, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params<T> {
    /// Coefficient of the fourth derivative in the rescaled system.
    pub eps: T,
    /// Cross-coupling between the two roll amplitudes.
    pub g: T,
    /// Half-length of the truncated domain.
    #[serde(rename = "L")]
    pub half_length: T,
    /// Number of grid intervals.
    pub n: usize,
}

impl<T: Scalar> Params<T> {
    pub fn new(eps: T, g: T, half_length: T, n: usize) -> Result<Self> {
        let p = Params {
            eps,
            g,
            half_length,
            n,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > T::zero()) || !self.eps.is_finite() {
            return Err(Error::InvalidParams(format!(
                "eps must be > 0 (got {})",
                self.eps
            )));
        }
        if !(self.g > T::one()) || !self.g.is_finite() {
            return Err(Error::InvalidParams(format!(
                "g must satisfy g > 1 (got {})",
                self.g
            )));
        }
        if !(self.half_length > T::zero()) || !self.half_length.is_finite() {
            return Err(Error::InvalidParams(format!(
                "L must be > 0 (got {})",
                self.half_length
            )));
        }
        if self.n < 16 || !self.n.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "n must be even and >= 16 (got {})",
                self.n
            )));
        }
        Ok(())
    }

    /// Grid spacing `2L / n`.
    pub fn step(&self) -> T {
        lit::<T>(2.0) * self.half_length / from_usize(self.n)
    }

    /// Node coordinates `-L + i h`, with the midpoint pinned to exactly zero.
    pub fn grid(&self) -> Vec<T> {
        let h = self.step();
        let mid = self.n / 2;
        (0..=self.n)
            .map(|i| {
                if i == 0 {
                    -self.half_length
                } else if i == self.n {
                    self.half_length
                } else if i >= mid {
                    from_usize::<T>(i - mid) * h
                } else {
                    -(from_usize::<T>(mid - i) * h)
                }
            })
            .collect()
    }

    /// Same model parameters on a different grid.
    pub fn with_grid(&self, half_length: T, n: usize) -> Self {
        Params {
            half_length,
            n,
            ..*self
        }
    }
}

/// Which of the two real equilibria joined by the orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Equilibrium {
    /// `(A, B) = (1, 0)`, the state as `x -> -inf`.
    #[serde(rename = "M_minus")]
    MMinus,
    /// `(A, B) = (0, 1)`, the state as `x -> +inf`.
    #[serde(rename = "M_plus")]
    MPlus,
}

impl Equilibrium {
    pub const ALL: [Equilibrium; 2] = [Equilibrium::MMinus, Equilibrium::MPlus];

    pub fn point<T: Scalar>(self) -> (T, T) {
        match self {
            Equilibrium::MMinus => (T::one(), T::zero()),
            Equilibrium::MPlus => (T::zero(), T::one()),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Equilibrium::MMinus => "M_minus",
            Equilibrium::MPlus => "M_plus",
        }
    }
}

/// Sampled real pair `(A, B)` on a uniform grid.
///
/// The grid is normally `[-L, L]`; after translation pinning it is shifted
/// so that `B` crosses one half at `x = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile<T> {
    pub x: Vec<T>,
    pub a: Vec<T>,
    pub b: Vec<T>,
}

impl<T: Scalar> Profile<T> {
    /// Samples `f` on the grid of `params` and imposes the endpoint clamp.
    pub fn from_fn(params: &Params<T>, f: impl Fn(T) -> (T, T)) -> Self {
        let x = params.grid();
        let (a, b) = x.iter().map(|&xi| f(xi)).unzip();
        let mut p = Profile { x, a, b };
        p.clamp_endpoints();
        p
    }

    /// Number of grid intervals.
    pub fn intervals(&self) -> usize {
        self.x.len().saturating_sub(1)
    }

    pub fn step(&self) -> T {
        (self.x[self.x.len() - 1] - self.x[0]) / from_usize(self.intervals())
    }

    /// Overwrites the end nodes with `(1, 0)` on the left and `(0, 1)` on the right.
    pub fn clamp_endpoints(&mut self) {
        let n = self.intervals();
        self.a[0] = T::one();
        self.b[0] = T::zero();
        self.a[n] = T::zero();
        self.b[n] = T::one();
    }

    /// Checks lengths, grid spacing and the endpoint clamp against `params`.
    pub fn check(&self, params: &Params<T>) -> Result<()> {
        let n = params.n;
        if self.x.len() != n + 1 || self.a.len() != n + 1 || self.b.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} nodes, got x={} A={} B={}",
                n + 1,
                self.x.len(),
                self.a.len(),
                self.b.len()
            )));
        }
        let h = params.step();
        let tol = lit::<T>(1e-6) * h;
        for w in self.x.windows(2) {
            if ((w[1] - w[0]) - h).abs() > tol {
                return Err(Error::DimensionMismatch(format!(
                    "grid step {} differs from 2L/n = {}",
                    w[1] - w[0],
                    h
                )));
            }
        }
        if self.a[0] != T::one()
            || self.b[0] != T::zero()
            || self.a[n] != T::zero()
            || self.b[n] != T::one()
        {
            return Err(Error::ClampViolation(format!(
                "(A,B) = ({}, {}) at the left end and ({}, {}) at the right end",
                self.a[0], self.b[0], self.a[n], self.b[n]
            )));
        }
        Ok(())
    }

    /// Sup over the grid of `|A^2 + B^2 - 1|`.
    pub fn circle_sup(&self) -> T {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(&a, &b)| (a * a + b * b - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    /// Linear interpolation of `(A, B)` at `x`; outside the grid the
    /// equilibrium values are returned.
    pub fn interpolate(&self, x: T) -> (T, T) {
        let n = self.intervals();
        if x <= self.x[0] {
            return (T::one(), T::zero());
        }
        if x >= self.x[n] {
            return (T::zero(), T::one());
        }
        let h = self.step();
        let s = (x - self.x[0]) / h;
        let i = s.floor().to_usize().unwrap_or(0).min(n - 1);
        let t = s - from_usize(i);
        (
            self.a[i] + t * (self.a[i + 1] - self.a[i]),
            self.b[i] + t * (self.b[i + 1] - self.b[i]),
        )
    }

    /// Resamples onto the grid of `params` using this profile's own
    /// coordinates, then clamps.
    pub fn resample(&self, params: &Params<T>) -> Profile<T> {
        Profile::from_fn(params, |x| self.interpolate(x))
    }
}

/// Value of the energy functional, split into its three integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport<T> {
    pub total: T,
    /// `eps/2 * int A''^2`
    pub bending: T,
    /// `1/2 * int B'^2`
    pub dirichlet: T,
    /// `int P(A, B)`
    pub potential: T,
}

/// `P(A,B) = (A^2+B^2-1)^2 / 4 + (g-1) A^2 B^2 / 2`.
#[inline]
pub fn potential<T: Scalar>(a: T, b: T, g: T) -> T {
    let a2 = a * a;
    let b2 = b * b;
    let r = a2 + b2 - T::one();
    lit::<T>(0.25) * r * r + lit::<T>(0.5) * (g - T::one()) * a2 * b2
}

#[inline]
pub fn grad_potential<T: Scalar>(a: T, b: T, g: T) -> (T, T) {
    let a2 = a * a;
    let b2 = b * b;
    (
        a * (a2 + g * b2 - T::one()),
        b * (g * a2 + b2 - T::one()),
    )
}

pub fn hessian_potential<T: Scalar>(a: T, b: T, g: T) -> [[T; 2]; 2] {
    let a2 = a * a;
    let b2 = b * b;
    let three = lit::<T>(3.0);
    let off = lit::<T>(2.0) * g * a * b;
    [
        [three * a2 + g * b2 - T::one(), off],
        [off, g * a2 + three * b2 - T::one()],
    ]
}

/// Squared distance from `(a, b)` to the nearest zero of the potential.
pub fn distance_to_equilibria_sq<T: Scalar>(a: T, b: T) -> T {
    let one = T::one();
    let d = |p: T, q: T| p * p + q * q;
    [
        d(a, b - one),
        d(a, b + one),
        d(a - one, b),
        d(a + one, b),
    ]
    .into_iter()
    .fold(T::infinity(), T::min)
}

/// Empirical lower bound of `P(a,b) / dist^2` over a deterministic sample:
/// a square lattice on the disk of radius 3 plus a ring at radius 10.
///
/// The four zeros of `P` are excluded from the sample.
pub fn coercivity_check<T: Scalar>(g: T, sample_count: usize) -> Result<T> {
    if !(g > T::one()) {
        return Err(Error::InvalidParams(format!("g must satisfy g > 1 (got {g})")));
    }
    if sample_count < 10_000 {
        return Err(Error::InvalidParams(format!(
            "sample_count must be >= 10^4 (got {sample_count})"
        )));
    }
    let disk_target = sample_count as f64 * 0.9;
    // lattice spacing giving ~disk_target points in a disk of radius 3
    let spacing = (9.0 * std::f64::consts::PI / disk_target).sqrt();
    let half = (3.0 / spacing).ceil() as i64;
    let excluded = lit::<T>(1e-12);

    let mut inf = T::infinity();
    let mut count = 0usize;
    let visit = |a: T, b: T, inf: &mut T| {
        let d2 = distance_to_equilibria_sq(a, b);
        if d2 <= excluded * excluded {
            return;
        }
        *inf = inf.min(potential(a, b, g) / d2);
    };
    for i in -half..=half {
        for j in -half..=half {
            let (a, b) = (i as f64 * spacing, j as f64 * spacing);
            if a * a + b * b > 9.0 {
                continue;
            }
            visit(lit(a), lit(b), &mut inf);
            count += 1;
        }
    }
    let ring = sample_count.saturating_sub(count).max(sample_count / 10);
    for k in 0..ring {
        let th = 2.0 * std::f64::consts::PI * k as f64 / ring as f64;
        visit(lit(10.0 * th.cos()), lit(10.0 * th.sin()), &mut inf);
    }
    if !(inf > T::zero()) {
        return Err(Error::Coercivity(to_f64(inf)));
    }
    Ok(inf)
}

/// Maps a profile of the rescaled system to the original variables:
/// `x_orig = x / eps^(1/4)`, amplitudes unchanged.
pub fn rescale_to_original<T: Scalar>(p: &Profile<T>, params: &Params<T>) -> Profile<T> {
    let s = params.eps.powf(lit(0.25));
    Profile {
        x: p.x.iter().map(|&x| x / s).collect(),
        a: p.a.clone(),
        b: p.b.clone(),
    }
}

/// Inverse of [`rescale_to_original`].
pub fn rescale_from_original<T: Scalar>(p: &Profile<T>, params: &Params<T>) -> Profile<T> {
    let s = params.eps.powf(lit(0.25));
    Profile {
        x: p.x.iter().map(|&x| x * s).collect(),
        a: p.a.clone(),
        b: p.b.clone(),
    }
}
