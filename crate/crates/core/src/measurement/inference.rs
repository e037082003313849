use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::scan::SidebandScan;
use crate::dynamics::TrapParams;
use crate::error::{Error, Result};
use crate::hilbert::PhononDistribution;

const MAX_ITERS: usize = 200_000;
const STEP_TOL: f64 = 1e-15;
/// Smallest accepted ratio of the extreme eigenvalues of the normal matrix.
const RANK_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    /// Highest Fock state in the fit.
    pub n_max_fit: usize,
    /// Fit a common decay rate `γ_f` of the oscillating part,
    /// `½[1 − e^{−γ_f(n+1)t}cos(√(n+1)πt/T_π)]`.
    pub fit_decay: bool,
    /// Calibrated detection errors, undone in the model.
    pub eps_bright: f64,
    pub eps_dark: f64,
}

impl FitOptions {
    pub fn new(n_max_fit: usize) -> Self {
        Self {
            n_max_fit,
            fit_decay: false,
            eps_bright: 0.0,
            eps_dark: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PopulationFit {
    pub distribution: PhononDistribution<f64>,
    /// Fitted decay rate (1/s); zero when not fitted.
    pub decay: f64,
    /// Residual sum of squares.
    pub residual: f64,
}

fn design(durations: &[f64], trap: &TrapParams, n_max_fit: usize, decay: f64) -> DMatrix<f64> {
    DMatrix::from_fn(durations.len(), n_max_fit + 1, |k, n| {
        let t = durations[k];
        let m = (n + 1) as f64;
        let phase = m.sqrt() * PI * t / trap.t_pi;
        0.5 * (1.0 - (-decay * m * t).exp() * phase.cos())
    })
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, x) in u.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// `argmin ‖Ap − y‖²` over the simplex by accelerated projected gradient with
/// adaptive restart.
fn simplex_least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let ata = a.transpose() * a;
    let aty = a.transpose() * y;
    let eig = ata.clone().symmetric_eigen();
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(hi > 0.0) || lo / hi < RANK_TOL {
        return Err(Error::Inference(format!(
            "sideband design matrix is rank deficient (eigenvalue ratio {:.2e})",
            lo / hi
        )));
    }
    let step = 1.0 / hi;
    let dim = a.ncols();
    let mut p = DVector::from_element(dim, 1.0 / dim as f64);
    let mut z = p.clone();
    let mut t = 1.0f64;
    let objective = |p: &DVector<f64>| (a * p - y).norm_squared();
    let mut last = objective(&p);
    for _ in 0..MAX_ITERS {
        let grad = &ata * &z - &aty;
        let next = project_simplex(&(&z - grad * step));
        let value = objective(&next);
        let moved = (&next - &p).amax();
        if value > last {
            // restart momentum
            t = 1.0;
            z = p.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = &next + (&next - &p) * ((t - 1.0) / t_next);
        t = t_next;
        p = next;
        last = value;
        if moved < STEP_TOL {
            break;
        }
    }
    Ok((p, last))
}

fn validate_curve(durations: &[f64], probs: &[f64], trap: &TrapParams, opts: &FitOptions) -> Result<()> {
    trap.validate()?;
    if durations.len() != probs.len() {
        return Err(Error::Dimension {
            expected: durations.len(),
            found: probs.len(),
        });
    }
    if durations.len() < opts.n_max_fit + 1 {
        return Err(Error::Inference(format!(
            "{} durations cannot determine {} populations",
            durations.len(),
            opts.n_max_fit + 1
        )));
    }
    let longest = durations.iter().copied().fold(0.0, f64::max);
    if longest < trap.t_pi * (1.0 - 1e-9) {
        return Err(Error::Inference("scan must cover at least one π time".into()));
    }
    if opts.eps_bright + opts.eps_dark >= 1.0 {
        return Err(Error::invalid("eps", "detection errors sum to 1 or more"));
    }
    Ok(())
}

fn fit_fixed_decay(
    durations: &[f64],
    y: &DVector<f64>,
    trap: &TrapParams,
    n_max_fit: usize,
    decay: f64,
) -> Result<(DVector<f64>, f64)> {
    simplex_least_squares(&design(durations, trap, n_max_fit, decay), y)
}

/// Constrained least-squares fit of `Σ_n p_n sin²(√(n+1)πt/(2T_π))` (or
/// its decaying form) to bright fractions.
pub fn infer_populations_from_curve(
    durations: &[f64],
    bright: &[f64],
    trap: &TrapParams,
    opts: &FitOptions,
) -> Result<PopulationFit> {
    validate_curve(durations, bright, trap, opts)?;
    let contrast = 1.0 - opts.eps_bright - opts.eps_dark;
    let y = DVector::from_iterator(bright.len(), bright.iter().map(|b| (b - opts.eps_dark) / contrast));
    let (p, residual, decay) = if opts.fit_decay {
        // golden-section search on log γ_f over [1, 1e6] /s, plus γ_f = 0
        let eval = |g: f64| fit_fixed_decay(durations, &y, trap, opts.n_max_fit, g).map(|(_, r)| r);
        let (mut a, mut b) = (0.0f64, 6.0f64);
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - ratio * (b - a);
        let mut d = a + ratio * (b - a);
        let (mut fc, mut fd) = (eval(10f64.powf(c))?, eval(10f64.powf(d))?);
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = eval(10f64.powf(c))?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = eval(10f64.powf(d))?;
            }
        }
        let best = 10f64.powf(0.5 * (a + b));
        let (p1, r1) = fit_fixed_decay(durations, &y, trap, opts.n_max_fit, best)?;
        let (p0, r0) = fit_fixed_decay(durations, &y, trap, opts.n_max_fit, 0.0)?;
        if r0 <= r1 {
            (p0, r0, 0.0)
        } else {
            (p1, r1, best)
        }
    } else {
        let (p, r) = fit_fixed_decay(durations, &y, trap, opts.n_max_fit, 0.0)?;
        (p, r, 0.0)
    };
    let total: f64 = p.iter().sum();
    let probs: Vec<f64> = p.iter().map(|x| (x / total).clamp(0.0, 1.0)).collect();
    Ok(PopulationFit {
        distribution: PhononDistribution::new(probs)?,
        decay,
        residual,
    })
}

/// [`infer_populations_from_curve`] on the bright fractions of a scan.
pub fn infer_populations(scan: &SidebandScan, trap: &TrapParams, opts: &FitOptions) -> Result<PopulationFit> {
    infer_populations_from_curve(&scan.durations(), &scan.bright_fractions(), trap, opts)
}

/// Angular frequency `ω` of the best fit of `c·sin²(ωt/2)` with free
/// amplitude `c`, searched in `[omega_lo, omega_hi]`.
pub fn fit_rabi_frequency(durations: &[f64], probs: &[f64], omega_lo: f64, omega_hi: f64) -> Result<f64> {
    if durations.len() != probs.len() || durations.len() < 3 {
        return Err(Error::Inference("need at least three samples to fit a frequency".into()));
    }
    if !(omega_lo > 0.0 && omega_hi > omega_lo) {
        return Err(Error::invalid("omega range", format!("[{omega_lo}, {omega_hi}] is empty")));
    }
    let cost = |w: f64| {
        let s: Vec<f64> = durations.iter().map(|t| (0.5 * w * t).sin().powi(2)).collect();
        let ss: f64 = s.iter().map(|x| x * x).sum();
        let sy: f64 = s.iter().zip(probs).map(|(a, b)| a * b).sum();
        let c = if ss > 0.0 { sy / ss } else { 0.0 };
        s.iter().zip(probs).map(|(a, b)| (c * a - b).powi(2)).sum::<f64>()
    };
    let grid = 4000;
    let dw = (omega_hi - omega_lo) / grid as f64;
    let (mut best, mut best_cost) = (omega_lo, f64::INFINITY);
    for k in 0..=grid {
        let w = omega_lo + k as f64 * dw;
        let c = cost(w);
        if c < best_cost {
            best = w;
            best_cost = c;
        }
    }
    let (mut a, mut b) = ((best - dw).max(omega_lo), (best + dw).min(omega_hi));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if cost(c) < cost(d) {
            b = d;
        } else {
            a = c;
        }
    }
    Ok(0.5 * (a + b))
}
