//! Linearization at the equilibria, grid rules derived from it, tail
//! fits of computed profiles, the arctan test-function energy, and the
//! sweep towards `g = 1`.

use std::sync::OnceLock;

use log::info;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minimize::{minimize, Init, SolveOptions, SolveResult};
use crate::model::{Equilibrium, Params, Profile};
use crate::quad::integrate;
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Roots of the linearized system at one equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport<T> {
    pub equilibrium: Equilibrium,
    /// Roots of `eps l^4 + c = 0`, ordered by argument `pi/4, 3pi/4, 5pi/4, 7pi/4`.
    pub a_roots: [Complex<T>; 4],
    /// `[-s, s]` with `s^2` the curvature of the potential in `B`.
    pub b_roots: [T; 2],
    pub hyperbolic: bool,
}

impl<T: Scalar> SpectrumReport<T> {
    /// Smallest `|Re l|` over all six roots.
    pub fn slowest_rate(&self) -> T {
        self.a_roots
            .iter()
            .map(|z| z.re.abs())
            .chain(self.b_roots.iter().map(|r| r.abs()))
            .fold(T::infinity(), T::min)
    }

    /// Largest modulus among the `A` roots.
    pub fn fastest_a_modulus(&self) -> T {
        self.a_roots.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// Constant `c` of the `A` characteristic polynomial `eps l^4 + c`.
    pub fn a_constant(&self, eps: T) -> T {
        let r = self.a_roots[0].norm();
        eps * r.powi(4)
    }
}

/// Linearization of the rescaled system at `which`.
///
/// At `(0, 1)` the `A` equation linearizes to `eps A'''' = -(g - 1) A` and
/// the `B` equation to `B'' = 2 B`; at `(1, 0)` to `eps A'''' = -2 A` and
/// `B'' = (g - 1) B`.
pub fn equilibrium_spectrum<T: Scalar>(params: &Params<T>, which: Equilibrium) -> SpectrumReport<T> {
    let one = T::one();
    let two = lit::<T>(2.0);
    let (c, b2) = match which {
        Equilibrium::MPlus => (params.g - one, two),
        Equilibrium::MMinus => (two, params.g - one),
    };
    let r = (c / params.eps).powf(lit(0.25));
    let q = r * T::FRAC_1_SQRT_2();
    let a_roots = [
        Complex::new(q, q),
        Complex::new(-q, q),
        Complex::new(-q, -q),
        Complex::new(q, -q),
    ];
    let s = b2.sqrt();
    let hyperbolic = q > T::zero() && s > T::zero();
    SpectrumReport {
        equilibrium: which,
        a_roots,
        b_roots: [-s, s],
        hyperbolic,
    }
}

/// Domain and grid size implied by the linearization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRecommendation<T> {
    /// Smallest `L` giving twenty decay lengths of the slowest tail.
    #[serde(rename = "L")]
    pub half_length: T,
    /// Largest step giving sixteen nodes per wavelength of the fastest
    /// oscillatory root.
    pub max_step: T,
    /// Smallest even `n` with `2L/n <= max_step`.
    pub n: usize,
}

/// Applies the domain rule `L >= 20 / (slowest decay rate)` and the
/// resolution rule `h <= (2 pi / 16) / |l|` over both equilibria.
pub fn recommended_grid<T: Scalar>(params: &Params<T>) -> GridRecommendation<T> {
    let spectra = Equilibrium::ALL.map(|e| equilibrium_spectrum(params, e));
    let slowest = spectra
        .iter()
        .map(SpectrumReport::slowest_rate)
        .fold(T::infinity(), T::min);
    let fastest = spectra
        .iter()
        .map(SpectrumReport::fastest_a_modulus)
        .fold(T::zero(), T::max);
    let half_length = lit::<T>(20.0) / slowest;
    let max_step = lit::<T>(2.0) * T::PI() / lit::<T>(16.0) / fastest;
    GridRecommendation {
        half_length,
        max_step,
        n: even_nodes(half_length, max_step),
    }
}

/// Smallest even `n >= 16` with `2 half_length / n <= max_step`.
pub(crate) fn even_nodes<T: Scalar>(half_length: T, max_step: T) -> usize {
    let n = to_f64((lit::<T>(2.0) * half_length / max_step).ceil()) as usize;
    (n + n % 2).max(16)
}

/// Log-linear fit to one tail of a profile component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate<T> {
    /// Decay rate towards the clamp value, positive for decay.
    pub rate: T,
    /// Strict sign changes of `value - limit` inside the window.
    pub sign_changes: usize,
    /// Number of points in the regression.
    pub points: usize,
}

/// Tail estimates on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit<T> {
    pub a_right: TailEstimate<T>,
    pub a_left: TailEstimate<T>,
    pub b_right: TailEstimate<T>,
    pub b_left: TailEstimate<T>,
}

const UNDERFLOW: f64 = 1e-14;
/// Distance kept from each clamp by the default window.
const CLAMP_MARGIN: f64 = 5.0;

/// Fits `|y|` in the window `lo <= x <= hi` to an exponential. Signals
/// that change sign at least twice are fitted through the local maxima
/// of `|y|`; the others through all points. `decays_right` selects the
/// sign convention of the returned rate.
pub fn fit_tail<T: Scalar>(
    x: &[T],
    y: &[T],
    lo: T,
    hi: T,
    decays_right: bool,
) -> Result<TailEstimate<T>> {
    let idx: Vec<usize> = (0..x.len()).filter(|&i| x[i] >= lo && x[i] <= hi).collect();
    if idx.len() < 3 {
        return Err(Error::TailFit(format!(
            "window [{lo}, {hi}] holds {} grid points",
            idx.len()
        )));
    }
    let mut sign_changes = 0;
    let mut last = T::zero();
    for &i in &idx {
        let v = y[i];
        if v != T::zero() {
            if last != T::zero() && (v > T::zero()) != (last > T::zero()) {
                sign_changes += 1;
            }
            last = v;
        }
    }
    let pts: Vec<usize> = if sign_changes >= 2 {
        idx.windows(3)
            .filter(|w| {
                let (p, c, n) = (y[w[0]].abs(), y[w[1]].abs(), y[w[2]].abs());
                c >= p && c > n
            })
            .map(|w| w[1])
            .collect()
    } else {
        idx.clone()
    };
    if pts.len() < 2 {
        return Err(Error::TailFit(format!(
            "window [{lo}, {hi}] has fewer than two envelope points"
        )));
    }
    if let Some(&i) = pts.iter().find(|&&i| y[i].abs() < lit::<T>(UNDERFLOW)) {
        return Err(Error::TailFit(format!(
            "value {} at x = {} is below {UNDERFLOW:e}; shrink the window",
            y[i], x[i]
        )));
    }
    let m = from_usize::<T>(pts.len());
    let mx = pts.iter().map(|&i| x[i]).sum::<T>() / m;
    let my = pts.iter().map(|&i| y[i].abs().ln()).sum::<T>() / m;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for &i in &pts {
        let dx = x[i] - mx;
        sxy += dx * (y[i].abs().ln() - my);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    Ok(TailEstimate {
        rate: if decays_right { -slope } else { slope },
        sign_changes,
        points: pts.len(),
    })
}

/// Tail fits over `near <= |x| <= far` on each side, measured in the
/// coordinates of the profile.
pub fn tail_fit_window<T: Scalar>(p: &Profile<T>, near: T, far: T) -> Result<TailFit<T>> {
    let one = T::one();
    let a_minus: Vec<T> = p.a.iter().map(|&v| v - one).collect();
    let b_minus: Vec<T> = p.b.iter().map(|&v| v - one).collect();
    Ok(TailFit {
        a_right: fit_tail(&p.x, &p.a, near, far, true)?,
        a_left: fit_tail(&p.x, &a_minus, -far, -near, false)?,
        b_right: fit_tail(&p.x, &b_minus, near, far, true)?,
        b_left: fit_tail(&p.x, &p.b, -far, -near, false)?,
    })
}

/// Tail fits over the outer half of each side, `L/2 <= |x| <= L - 5`.
pub fn tail_fit<T: Scalar>(p: &Profile<T>, params: &Params<T>) -> Result<TailFit<T>> {
    let l = params.half_length;
    tail_fit_window(p, l * lit(0.5), l - lit(CLAMP_MARGIN))
}

/// Integrals of the undilated test function `A1 = cos(pi/4 + atan(x)/2)`,
/// `B1 = sin(pi/4 + atan(x)/2)` over the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionIntegrals<T> {
    /// `int A1^2 B1^2`
    pub i0: T,
    /// `int B1'^2`
    pub i1: T,
    /// `int A1''^2`
    pub i2: T,
}

impl<T: Scalar> TestFunctionIntegrals<T> {
    /// Evaluates the three integrals after the substitution `x = tan(t)`,
    /// which turns them into smooth integrals over `(-pi/2, pi/2)`.
    pub fn compute(tol: T) -> Result<Self> {
        let quarter = lit::<T>(0.25);
        let half = lit::<T>(0.5);
        let phi = |t: T| T::FRAC_PI_4() + half * t;
        let (lo, hi) = (-T::FRAC_PI_2(), T::FRAC_PI_2());
        let i0 = integrate(|_| quarter, lo, hi, tol)?;
        let i1 = integrate(
            |t| {
                let (c, ct) = (phi(t).cos(), t.cos());
                quarter * c * c * ct * ct
            },
            lo,
            hi,
            tol,
        )?;
        let i2 = integrate(
            |t| {
                let (s, c) = phi(t).sin_cos();
                let (st, ct) = t.sin_cos();
                let inner = -quarter * c * ct + s * st;
                let c2 = ct * ct;
                c2 * c2 * inner * inner
            },
            lo,
            hi,
            tol,
        )?;
        Ok(TestFunctionIntegrals { i0, i1, i2 })
    }

    /// `gamma^3 eps i2 / 2 + gamma i1 / 2 + (g - 1) i0 / (2 gamma)`.
    pub fn energy(&self, eps: T, g: T, gamma: T) -> T {
        let half = lit::<T>(0.5);
        half * (gamma.powi(3) * eps * self.i2 + gamma * self.i1 + (g - T::one()) / gamma * self.i0)
    }
}

fn cached_integrals() -> Result<TestFunctionIntegrals<f64>> {
    static CACHE: OnceLock<Result<TestFunctionIntegrals<f64>>> = OnceLock::new();
    CACHE
        .get_or_init(|| TestFunctionIntegrals::compute(1e-13))
        .clone()
}

/// Energy on the real line of the test function dilated by `gamma`,
/// `(A1(gamma x), B1(gamma x))`.
pub fn testfn_energy<T: Scalar>(params: &Params<T>, gamma: T) -> Result<T> {
    if !(gamma > T::zero()) {
        return Err(Error::InvalidParams(format!("gamma must be > 0 (got {gamma})")));
    }
    let base = cached_integrals()?;
    let base = TestFunctionIntegrals {
        i0: lit::<T>(base.i0),
        i1: lit::<T>(base.i1),
        i2: lit::<T>(base.i2),
    };
    Ok(base.energy(params.eps, params.g, gamma))
}

/// One point of [`g_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord<T> {
    pub g: T,
    pub min_energy: T,
    /// Test-function energy at `gamma = sqrt(g - 1)`.
    pub testfn_bound: T,
    /// `max |A^2 + B^2 - 1|` over the grid.
    pub circle_sup: T,
    pub converged: bool,
    #[serde(rename = "L")]
    pub half_length: T,
    pub n: usize,
}

/// Grid used by [`g_sweep`] at one `g`: the recommended domain and the
/// finer of the recommended step and `max_step`.
pub fn sweep_params<T: Scalar>(eps: T, g: T, max_step: T) -> Result<Params<T>> {
    let probe = Params {
        eps,
        g,
        half_length: T::one(),
        n: 16,
    };
    probe.validate()?;
    let rec = recommended_grid(&probe);
    let l = rec.half_length.ceil();
    let n = even_nodes(l, rec.max_step.min(max_step));
    Params::new(eps, g, l, n)
}

/// Solves along a strictly decreasing list of `g > 1`, warm-starting each
/// point from the previous minimizer resampled onto the next grid.
///
/// `visit` sees every record together with its solve, including a final
/// non-converged one, before the sweep stops with
/// [`Error::SweepPoint`].
pub fn g_sweep<T: Scalar>(
    eps: T,
    g_list: &[T],
    opts: &SolveOptions<T>,
    max_step: T,
    mut visit: impl FnMut(&SweepRecord<T>, &SolveResult<T>),
) -> Result<Vec<SweepRecord<T>>> {
    if g_list.is_empty() {
        return Err(Error::InvalidParams("g list is empty".into()));
    }
    if let Some(&g) = g_list.iter().find(|&&g| !(g > T::one())) {
        return Err(Error::InvalidParams(format!("g must be > 1 (got {g})")));
    }
    if g_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParams("g list must be strictly decreasing".into()));
    }
    if !(max_step > T::zero()) {
        return Err(Error::InvalidOptions(format!("max_step must be > 0 (got {max_step})")));
    }
    let mut out = Vec::with_capacity(g_list.len());
    let mut warm: Option<Profile<T>> = None;
    for &g in g_list {
        let at = |e: Error| Error::SweepPoint {
            g: to_f64(g),
            source: Box::new(e),
        };
        let params = sweep_params(eps, g, max_step).map_err(at)?;
        let run_opts = match warm.take() {
            Some(p) => opts.with_init(Init::Given(p)),
            None => opts.clone(),
        };
        let res = minimize(&params, &run_opts).map_err(at)?;
        let gamma = (g - T::one()).sqrt();
        let rec = SweepRecord {
            g,
            min_energy: res.energy.total,
            testfn_bound: testfn_energy(&params, gamma).map_err(at)?,
            circle_sup: res.profile.circle_sup(),
            converged: res.converged,
            half_length: params.half_length,
            n: params.n,
        };
        info!(
            "sweep g={g}: energy {} bound {} circle_sup {} (L={}, n={})",
            rec.min_energy, rec.testfn_bound, rec.circle_sup, params.half_length, params.n
        );
        visit(&rec, &res);
        out.push(rec);
        let res = res.ensure_converged().map_err(at)?;
        warm = Some(res.profile);
    }
    Ok(out)
}
