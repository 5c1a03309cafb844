//! Minimization of the discrete energy over clamped profiles.
//!
//! The optimizer is a limited-memory BFGS with Armijo backtracking whose
//! initial inverse-Hessian is a fixed preconditioner: the Hessian of the
//! quadratic (derivative) part of the energy plus a positive multiple of
//! the identity, factored once as two banded Cholesky factors. Without it
//! the fourth-difference term makes the problem too stiff for a
//! gradient-only method at useful grid sizes.

use std::collections::VecDeque;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::banded::{BandedCholesky, SymBanded};
use crate::energy::{a_free, b_free, dof_count, energy_change, evaluate, Ghosts};
use crate::error::{Error, Result};
use crate::model::{EnergyReport, Params, Profile};
use crate::reduced::{reduced_orbit, sample_reduced};
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Starting profile for [`minimize`].
#[derive(Debug, Clone, PartialEq)]
pub enum Init<T> {
    /// The circle-valued arctan profile dilated by `sqrt(g - 1)`.
    TestFunction,
    /// The closed-form `eps = 0` orbit.
    ReducedLimit,
    /// A caller-supplied profile, resampled if its grid differs.
    Given(Profile<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions<T> {
    /// Stopping tolerance on the sup-norm of the discrete gradient.
    pub grad_tol: T,
    pub max_iters: usize,
    /// Number of stored curvature pairs.
    pub memory: usize,
    pub init: Init<T>,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            grad_tol: lit(1e-8),
            max_iters: 50_000,
            memory: 10,
            init: Init::TestFunction,
        }
    }
}

impl<T: Scalar> SolveOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > T::zero()) {
            return Err(Error::InvalidOptions(format!(
                "grad_tol must be > 0 (got {})",
                self.grad_tol
            )));
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidOptions("max_iters must be >= 1".into()));
        }
        if self.memory < 1 {
            return Err(Error::InvalidOptions("memory must be >= 1".into()));
        }
        Ok(())
    }

    pub fn with_init(&self, init: Init<T>) -> Self {
        SolveOptions {
            init,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    LineSearchStall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    /// Minimizer, translated so that `B` crosses one half at `x = 0`.
    pub profile: Profile<T>,
    pub energy: EnergyReport<T>,
    /// Sup-norm of the discrete gradient at `profile`.
    pub grad_norm: T,
    pub iterations: usize,
    pub converged: bool,
    pub status: SolveStatus,
    /// Amount by which the grid was shifted to pin `B(0) = 1/2`.
    pub shift: T,
    /// Energy after every accepted step, starting with the initial value.
    /// Later entries add up the measured decreases, so they resolve
    /// changes smaller than the rounding error of a single evaluation.
    pub energy_trace: Vec<T>,
}

impl<T: Scalar> SolveResult<T> {
    /// Turns a non-converged result into the corresponding error.
    pub fn ensure_converged(self) -> Result<Self> {
        let err = |status| {
            let (iterations, grad_norm) = (self.iterations, to_f64(self.grad_norm));
            match status {
                SolveStatus::LineSearchStall => Error::LineSearchStall {
                    iterations,
                    grad_norm,
                },
                _ => Error::NonConvergence {
                    iterations,
                    grad_norm,
                },
            }
        };
        if self.converged {
            Ok(self)
        } else {
            Err(err(self.status))
        }
    }
}

/// Samples `(cos(pi/4 + atan(gx)/2), sin(pi/4 + atan(gx)/2))` with
/// `g = sqrt(g - 1)` as the dilation, and clamps the ends.
pub fn initial_guess_testfn<T: Scalar>(params: &Params<T>) -> Profile<T> {
    let gamma = (params.g - T::one()).sqrt();
    Profile::from_fn(params, |x| {
        let phi = T::FRAC_PI_4() + lit::<T>(0.5) * (gamma * x).atan();
        (phi.cos(), phi.sin())
    })
}

fn initial_profile<T: Scalar>(params: &Params<T>, init: &Init<T>) -> Result<Profile<T>> {
    Ok(match init {
        Init::TestFunction => initial_guess_testfn(params),
        Init::ReducedLimit => sample_reduced(&reduced_orbit(params.g)?, params),
        Init::Given(p) => {
            if p.x.len() < 2 || p.a.len() != p.x.len() || p.b.len() != p.x.len() {
                return Err(Error::DimensionMismatch(
                    "initial profile has inconsistent lengths".into(),
                ));
            }
            let h = params.step();
            if p.x.len() == params.n + 1 && (p.step() - h).abs() <= lit::<T>(1e-9) * h {
                // same grid up to translation: keep the values untouched
                Profile {
                    x: params.grid(),
                    a: p.a.clone(),
                    b: p.b.clone(),
                }
            } else {
                p.resample(params)
            }
        }
    })
}

/// Free-variable layout: `[A_2 .. A_{n-2}, B_1 .. B_{n-1}]`.
struct Layout {
    n: usize,
}

impl Layout {
    fn na(&self) -> usize {
        self.n - 3
    }

    fn pack<T: Scalar>(&self, a: &[T], b: &[T]) -> Vec<T> {
        let mut x = Vec::with_capacity(dof_count(self.n));
        x.extend_from_slice(&a[a_free(self.n)]);
        x.extend_from_slice(&b[b_free(self.n)]);
        x
    }

    fn unpack<T: Scalar>(&self, x: &[T], a: &mut [T], b: &mut [T]) {
        let na = self.na();
        a[a_free(self.n)].copy_from_slice(&x[..na]);
        b[b_free(self.n)].copy_from_slice(&x[na..]);
    }
}

/// Energy and packed gradient as a function of the free variables.
struct Objective<T> {
    layout: Layout,
    eps: T,
    g: T,
    h: T,
    a: Vec<T>,
    b: Vec<T>,
    ga: Vec<T>,
    gb: Vec<T>,
    /// Second pair of nodal arrays for energy differences.
    a0: Vec<T>,
    b0: Vec<T>,
    ghosts: Ghosts<T>,
}

impl<T: Scalar> Objective<T> {
    fn new(params: &Params<T>, a: Vec<T>, b: Vec<T>) -> Self {
        let n = params.n;
        Objective {
            layout: Layout { n },
            eps: params.eps,
            g: params.g,
            h: params.step(),
            ga: vec![T::zero(); n + 1],
            gb: vec![T::zero(); n + 1],
            a0: a.clone(),
            b0: b.clone(),
            a,
            b,
            ghosts: Ghosts::default(),
        }
    }

    fn eval(&mut self, x: &[T], grad: &mut [T]) -> EnergyReport<T> {
        self.layout.unpack(x, &mut self.a, &mut self.b);
        let e = evaluate(
            &self.a,
            &self.b,
            self.eps,
            self.g,
            self.h,
            &self.ghosts,
            Some((&mut self.ga, &mut self.gb)),
        );
        let n = self.layout.n;
        let na = self.layout.na();
        grad[..na].copy_from_slice(&self.ga[a_free(n)]);
        grad[na..].copy_from_slice(&self.gb[b_free(n)]);
        e
    }

    /// `E(x1) - E(x0)`, accurate even when far below the rounding error
    /// of `E` itself.
    fn change(&mut self, x0: &[T], x1: &[T]) -> T {
        self.layout.unpack(x0, &mut self.a0, &mut self.b0);
        self.layout.unpack(x1, &mut self.a, &mut self.b);
        energy_change(
            (&self.a0, &self.b0),
            (&self.a, &self.b),
            self.eps,
            self.g,
            self.h,
            &self.ghosts,
        )
    }
}

/// Inverse of the quadratic part of the discrete Hessian plus `shift * h * I`.
struct Preconditioner<T> {
    na: usize,
    a: BandedCholesky<T>,
    b: BandedCholesky<T>,
}

impl<T: Scalar> Preconditioner<T> {
    fn new(params: &Params<T>) -> Result<Self> {
        let n = params.n;
        let h = params.step();
        let half = lit::<T>(0.5);
        let weight = |i: usize| if i == 0 || i == n { half * h } else { h };
        // both blocks see the Hessian eigenvalues {g-1, 2} at the equilibria
        let shift = (params.g - T::one()).min(lit(2.0)) * h;

        let na = n - 3;
        let mut ma = SymBanded::zeros(na, 2);
        let inv_h2 = (h * h).recip();
        let coef = [T::one(), -lit::<T>(2.0), T::one()];
        let mut row = Vec::with_capacity(3);
        for i in 0..=n {
            row.clear();
            for (k, &c) in coef.iter().enumerate() {
                let node = i as isize + k as isize - 1;
                if node >= 2 && node <= n as isize - 2 {
                    row.push((node as usize - 2, c * inv_h2));
                }
            }
            ma.add_outer(&row, params.eps * weight(i));
        }
        for j in 0..na {
            ma.add(j, j, shift);
        }

        let nb = n - 1;
        let mut mb = SymBanded::zeros(nb, 2);
        let inv_2h = (lit::<T>(2.0) * h).recip();
        for i in 0..=n {
            row.clear();
            for (node, c) in [(i as isize - 1, -inv_2h), (i as isize + 1, inv_2h)] {
                if node >= 1 && node < n as isize {
                    row.push((node as usize - 1, c));
                }
            }
            mb.add_outer(&row, weight(i));
        }
        for j in 0..nb {
            mb.add(j, j, shift);
        }
        let fail = || Error::InvalidParams("preconditioner is not positive definite".into());
        Ok(Preconditioner {
            na,
            a: ma.cholesky().ok_or_else(fail)?,
            b: mb.cholesky().ok_or_else(fail)?,
        })
    }

    fn apply(&self, v: &mut [T]) {
        let (va, vb) = v.split_at_mut(self.na);
        self.a.solve_in_place(va);
        self.b.solve_in_place(vb);
    }
}

fn dot<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).map(|(&p, &q)| p * q).sum()
}

fn sup<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

struct Pair<T> {
    s: Vec<T>,
    y: Vec<T>,
    rho: T,
}

struct PhaseOutcome {
    status: SolveStatus,
    iterations: usize,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// One run of preconditioned L-BFGS from `x`, spending at most `budget`
/// accepted steps. `x`, `f` and `grad` are updated in place.
fn lbfgs_phase<T: Scalar>(
    obj: &mut Objective<T>,
    precond: &Preconditioner<T>,
    x: &mut Vec<T>,
    f: &mut EnergyReport<T>,
    grad: &mut Vec<T>,
    tol: T,
    memory: usize,
    budget: usize,
    trace: &mut Vec<T>,
) -> PhaseOutcome {
    let dim = x.len();
    let mut history: VecDeque<Pair<T>> = VecDeque::with_capacity(memory);
    let mut gamma = T::one();
    let mut d = vec![T::zero(); dim];
    let mut alpha_buf = vec![T::zero(); memory];
    let mut xt = vec![T::zero(); dim];
    let mut gt = vec![T::zero(); dim];
    let mut tmp = vec![T::zero(); dim];
    let c1 = lit::<T>(ARMIJO_C1);

    let mut iterations = 0;
    while iterations < budget {
        if sup(grad) <= tol {
            return PhaseOutcome {
                status: SolveStatus::Converged,
                iterations,
            };
        }

        // two-loop recursion with H0 = gamma * M^{-1}
        d.copy_from_slice(grad);
        for (k, p) in history.iter().enumerate().rev() {
            let al = p.rho * dot(&p.s, &d);
            alpha_buf[k] = al;
            d.iter_mut().zip(&p.y).for_each(|(di, &yi)| *di -= al * yi);
        }
        precond.apply(&mut d);
        d.iter_mut().for_each(|v| *v *= gamma);
        for (k, p) in history.iter().enumerate() {
            let beta = p.rho * dot(&p.y, &d);
            let c = alpha_buf[k] - beta;
            d.iter_mut().zip(&p.s).for_each(|(di, &si)| *di += c * si);
        }
        d.iter_mut().for_each(|v| *v = -*v);
        let mut gd = dot(grad, &d);
        if !(gd < T::zero()) {
            // not a descent direction: drop the memory, scaled steepest descent
            history.clear();
            d.copy_from_slice(grad);
            precond.apply(&mut d);
            d.iter_mut().for_each(|v| *v = -gamma * *v);
            gd = dot(grad, &d);
        }

        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            xt.iter_mut()
                .zip(x.iter().zip(&d))
                .for_each(|(t, (&xi, &di))| *t = xi + step * di);
            let ft = obj.eval(&xt, &mut gt);
            if ft.total.is_finite() {
                // the decrease is measured by differencing nodal values,
                // which stays meaningful near the roundoff floor of the total
                let delta = obj.change(x, &xt);
                if delta <= c1 * step * gd {
                    accepted = Some((ft, delta));
                    break;
                }
            }
            step *= lit(0.5);
        }
        let Some((ft, delta)) = accepted else {
            if !history.is_empty() || gamma != T::one() {
                history.clear();
                gamma = T::one();
                debug!("line search failed at iteration {iterations}; resetting memory");
                continue;
            }
            return PhaseOutcome {
                status: SolveStatus::LineSearchStall,
                iterations,
            };
        };

        // curvature pair
        let mut pair_s = Vec::with_capacity(dim);
        let mut pair_y = Vec::with_capacity(dim);
        for i in 0..dim {
            pair_s.push(xt[i] - x[i]);
            pair_y.push(gt[i] - grad[i]);
        }
        let sy = dot(&pair_s, &pair_y);
        let yy = dot(&pair_y, &pair_y);
        let ss = dot(&pair_s, &pair_s);
        if sy > T::epsilon() * (ss * yy).sqrt() {
            tmp.copy_from_slice(&pair_y);
            precond.apply(&mut tmp);
            let yhy = dot(&pair_y, &tmp);
            if yhy > T::zero() {
                gamma = sy / yhy;
            }
            if history.len() == memory {
                history.pop_front();
            }
            history.push_back(Pair {
                s: pair_s,
                y: pair_y,
                rho: sy.recip(),
            });
        }

        std::mem::swap(x, &mut xt);
        std::mem::swap(grad, &mut gt);
        *f = ft;
        let last = *trace.last().expect("trace starts with the initial energy");
        trace.push(last + delta);
        iterations += 1;
        if iterations % 1000 == 0 {
            debug!(
                "iteration {iterations}: energy {} gradient {}",
                ft.total,
                sup(grad)
            );
        }
    }
    let status = if sup(grad) <= tol {
        SolveStatus::Converged
    } else {
        SolveStatus::MaxIterations
    };
    PhaseOutcome { status, iterations }
}

/// Location where linear interpolation of `b` crosses `level`, first
/// crossing from the left.
pub fn crossing<T: Scalar>(x: &[T], b: &[T], level: T) -> Option<T> {
    (0..b.len().saturating_sub(1)).find_map(|i| {
        let (b0, b1) = (b[i], b[i + 1]);
        if b0 < level && b1 >= level {
            Some(x[i] + (x[i + 1] - x[i]) * (level - b0) / (b1 - b0))
        } else {
            None
        }
    })
}

/// Minimizes the discrete energy for `params`.
///
/// The iterate is descended with preconditioned L-BFGS, `B` is replaced by
/// `|B|` followed by a polishing descent, and the grid of the returned
/// profile is shifted so that `B(0) = 1/2`. A result with
/// `converged = false` carries the best iterate; use
/// [`SolveResult::ensure_converged`] to turn it into an error.
pub fn minimize<T: Scalar>(params: &Params<T>, opts: &SolveOptions<T>) -> Result<SolveResult<T>> {
    params.validate()?;
    opts.validate()?;
    let n = params.n;
    let start = initial_profile(params, &opts.init)?;
    let (mut a, mut b) = (start.a, start.b);
    // A is held at its clamp value on the two outermost nodes of each side
    a[0] = T::one();
    a[1] = T::one();
    a[n - 1] = T::zero();
    a[n] = T::zero();
    b[0] = T::zero();
    b[n] = T::one();

    let layout = Layout { n };
    let mut x = layout.pack(&a, &b);
    let mut obj = Objective::new(params, a, b);
    let precond = Preconditioner::new(params)?;
    let mut grad = vec![T::zero(); x.len()];
    let mut f = obj.eval(&x, &mut grad);
    let mut trace = vec![f.total];

    let first = lbfgs_phase(
        &mut obj,
        &precond,
        &mut x,
        &mut f,
        &mut grad,
        opts.grad_tol,
        opts.memory,
        opts.max_iters,
        &mut trace,
    );
    debug!(
        "descent: {:?} after {} iterations, energy {}",
        first.status, first.iterations, f.total
    );

    // sign normalization: (A, |B|) is never worse than (A, B)
    let na = layout.na();
    if x[na..].iter().any(|v| *v < T::zero()) {
        let before = x.clone();
        x[na..].iter_mut().for_each(|v| *v = v.abs());
        let delta = obj.change(&before, &x);
        f = obj.eval(&x, &mut grad);
        let last = *trace.last().expect("non-empty trace");
        trace.push(last + delta);
    }
    let polish = lbfgs_phase(
        &mut obj,
        &precond,
        &mut x,
        &mut f,
        &mut grad,
        opts.grad_tol,
        opts.memory,
        opts.max_iters - first.iterations,
        &mut trace,
    );
    let iterations = first.iterations + polish.iterations;

    let mut a = obj.a.clone();
    let mut b = obj.b.clone();
    layout.unpack(&x, &mut a, &mut b);
    let grad_norm = sup(&grad);
    let converged = grad_norm <= opts.grad_tol;
    let status = if converged {
        SolveStatus::Converged
    } else if polish.status == SolveStatus::Converged {
        first.status
    } else {
        polish.status
    };

    let grid = params.grid();
    let shift = crossing(&grid, &b, lit(0.5)).unwrap_or(T::zero());
    let profile = Profile {
        x: grid.iter().map(|&xi| xi - shift).collect(),
        a,
        b,
    };
    info!(
        "minimize eps={} g={} L={} n={}: {:?}, {} iterations, energy {}, gradient {}",
        params.eps, params.g, params.half_length, n, status, iterations, f.total, grad_norm
    );
    Ok(SolveResult {
        profile,
        energy: f,
        grad_norm,
        iterations,
        converged,
        status,
        shift,
        energy_trace: trace,
    })
}

/// Parameters of step `k` of `steps` on the geometric path in `(eps, g-1)`.
pub fn continuation_params<T: Scalar>(
    from: &Params<T>,
    to: &Params<T>,
    k: usize,
    steps: usize,
) -> Params<T> {
    if k >= steps {
        return *to;
    }
    let t = from_usize::<T>(k) / from_usize(steps);
    let one = T::one();
    let eps = from.eps * (to.eps / from.eps).powf(t);
    let gm1 = (from.g - one) * ((to.g - one) / (from.g - one)).powf(t);
    Params {
        eps,
        g: one + gm1,
        half_length: to.half_length,
        n: to.n,
    }
}

/// Solves at `params_from`, then walks `steps` geometric steps in
/// `(eps, g - 1)` to `params_to`, warm-starting each solve from the
/// previous profile. Every step uses the grid of `params_to`.
///
/// Returns `steps + 1` results, the first one at `params_from`.
pub fn continuation<T: Scalar>(
    params_from: &Params<T>,
    params_to: &Params<T>,
    steps: usize,
    opts: &SolveOptions<T>,
) -> Result<Vec<SolveResult<T>>> {
    params_from.validate()?;
    params_to.validate()?;
    if steps < 1 {
        return Err(Error::InvalidOptions("continuation needs steps >= 1".into()));
    }
    let annotate = |step: usize| {
        move |e: Error| Error::ContinuationStep {
            step,
            source: Box::new(e),
        }
    };
    let first = minimize(params_from, opts)
        .and_then(SolveResult::ensure_converged)
        .map_err(annotate(0))?;
    let mut out = vec![first];
    for k in 1..=steps {
        let params = continuation_params(params_from, params_to, k, steps);
        let prev = out.last().expect("non-empty").profile.clone();
        let res = minimize(&params, &opts.with_init(Init::Given(prev)))
            .and_then(SolveResult::ensure_converged)
            .map_err(annotate(k))?;
        out.push(res);
    }
    Ok(out)
}
