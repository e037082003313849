//! Acceptance criteria. Each criterion prints one PASS/FAIL line with the
//! measured values, its tolerance and its runtime against the limit.
//!
//! The runner reports rather than gates: a FAIL line is printed and counted
//! in the summary, and the exit status stays zero so the remaining test
//! targets of the workspace still run.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::Complex;
use phonon_cli::config::{DataMode, InputKind, PulseMode};
use phonon_cli::{run, Experiment, ExperimentConfig, RunReport};
use phonon_core::dynamics::{stark_phase, SweepParams, TrapParams};
use phonon_core::hilbert::operators::{s_minus, s_plus};
use phonon_core::hilbert::{fidelity, wigner, FockTruncation, GridSpec, Layout};
use phonon_core::noise::{default_heat_step, heat, NoiseParams};
use phonon_core::tomography::{generate_dataset, mle_reconstruct, DatasetMode, ReconstructionSettings};
use phonon_core::DensityOperator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn run_exp(cfg: &ExperimentConfig) -> RunReport {
    let dir = tempfile::tempdir().unwrap();
    run(cfg, dir.path()).unwrap_or_else(|e| panic!("{} failed: {e}", cfg.experiment.name()))
}

fn config(experiment: Experiment) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        ..Default::default()
    }
}

fn coherent(cfg: &mut ExperimentConfig, alpha: f64) {
    cfg.input.kind = InputKind::Coherent;
    cfg.input.alpha = [alpha, 0.0];
}

fn stage<'a>(report: &'a RunReport, name: &str) -> &'a phonon_cli::MetricRow {
    report.row(name).unwrap_or_else(|| panic!("missing stage {name}"))
}

fn c1_rabi_scaling() -> Verdict {
    // sampled scans (1000 shots per point) with detection errors
    let report = run_exp(&config(Experiment::RabiScan));
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    for n in 0..=5usize {
        let ratio = report.scalar(&format!("n{n}.ratio")).unwrap();
        ratios.push(format!("{ratio:.4}"));
        worst = worst.max((ratio / ((n + 1) as f64).sqrt() - 1.0).abs());
    }
    verdict(
        worst <= 0.01,
        format!("ratios [{}], max |ratio/sqrt(n+1) - 1| = {worst:.2e} (tol 1e-2)", ratios.join(", ")),
    )
}

fn c2_uniform_transfer() -> Verdict {
    let mut cfg = config(Experiment::AdiabaticTransfer);
    cfg.noise.heating_rate_hz = 0.0;
    let report = run_exp(&cfg);
    let probs: Vec<f64> = (0..=5).map(|n| report.scalar(&format!("n{n}.transfer")).unwrap()).collect();
    let min = probs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = max - min;
    let shown: Vec<String> = probs.iter().map(|p| format!("{p:.5}")).collect();
    verdict(
        min >= 0.95 && spread <= 0.03,
        format!("P(n=0..5) [{}], min {min:.5} (>= 0.95), spread {spread:.5} (<= 0.03)", shown.join(", ")),
    )
}

fn c3_sub_poissonian() -> Verdict {
    let lambda: f64 = 0.6561;
    let mut ideal = config(Experiment::Add);
    coherent(&mut ideal, lambda.sqrt());
    ideal.exact = true;
    ideal.sequence.repeat = 3;
    ideal.sequence.analyze = false;
    let report = run_exp(&ideal);
    let mut worst: f64 = 0.0;
    let mut fanos = Vec::new();
    for k in 1..=3 {
        let fano = stage(&report, &format!("add{k}")).fano.unwrap();
        worst = worst.max((fano - lambda / (lambda + k as f64)).abs());
        fanos.push(fano);
    }

    let mut noisy = config(Experiment::Add);
    coherent(&mut noisy, lambda.sqrt());
    noisy.sequence.repeat = 3;
    noisy.sequence.analyze = true;
    noisy.data.mode = DataMode::Sampled;
    noisy.data.shots = 1000;
    let report = run_exp(&noisy);
    let rec: Vec<f64> = (1..=3).map(|k| stage(&report, &format!("add{k}_rec")).fano.unwrap()).collect();
    let decreasing = rec.windows(2).all(|w| w[1] < w[0]);
    let below_one = rec.iter().all(|&f| f < 1.0);
    verdict(
        worst <= 1e-6 && decreasing && below_one,
        format!(
            "ideal fano [{:.6}, {:.6}, {:.6}] max dev from lambda/(lambda+k) {worst:.1e} (tol 1e-6); \
             noisy reconstructed fano [{:.3}, {:.3}, {:.3}] decreasing {decreasing}, all < 1 {below_one}",
            fanos[0], fanos[1], fanos[2], rec[0], rec[1], rec[2]
        ),
    )
}

fn c4_wigner_negativity() -> Verdict {
    let mut cfg = config(Experiment::Wigner);
    coherent(&mut cfg, 0.8);
    cfg.exact = true;
    cfg.sequence.repeat = 1;
    cfg.sequence.analyze = false;
    cfg.wigner.extent = 3.0;
    let min_w = run_exp(&cfg).scalar("wigner.output.min").unwrap();

    // grid values at the origin of an odd grid, and the runner's parity value
    let trunc = FockTruncation::with_n_max(25).unwrap();
    let spec = GridSpec::square(3.0, 61);
    let mut origin = Vec::new();
    for n in [0usize, 1] {
        let mut probs = vec![0.0; n + 1];
        probs[n] = 1.0;
        let rho = DensityOperator::diagonal_phonon(trunc, &probs).unwrap();
        let grid = wigner(&rho, &spec).unwrap();
        assert_eq!(grid.re_axis[30], 0.0);
        let mut f = config(Experiment::Wigner);
        f.input.kind = InputKind::Fock;
        f.input.n = n;
        f.exact = true;
        f.sequence.analyze = false;
        let runner = run_exp(&f).scalar("wigner.input.origin").unwrap();
        origin.push((grid.values[(30, 30)], runner));
    }
    let target = 2.0 / PI;
    let dev = [
        (origin[0].0 - target).abs(),
        (origin[0].1 - target).abs(),
        (origin[1].0 + target).abs(),
        (origin[1].1 + target).abs(),
    ];
    let worst = dev.iter().copied().fold(0.0, f64::max);
    verdict(
        min_w < 0.0 && worst <= 1e-6,
        format!(
            "min W after one addition on |0.8> = {min_w:.4} (< 0); W(0) vacuum {:.9}, |1> {:.9}, \
             max dev from +-2/pi {worst:.1e} (tol 1e-6)",
            origin[0].0, origin[1].0
        ),
    )
}

fn c5_commutator() -> Verdict {
    // [S-, S+] on the block below the truncation edge
    let mut exact = true;
    for n_max in [1usize, 2, 5, 25] {
        let c = s_minus::<f64>(n_max) * s_plus::<f64>(n_max) - s_plus::<f64>(n_max) * s_minus::<f64>(n_max);
        for m in 0..n_max {
            for n in 0..n_max {
                let want = if m == 0 && n == 0 { 1.0 } else { 0.0 };
                exact &= c[(m, n)] == Complex::new(want, 0.0);
            }
        }
    }

    let mut ideal = config(Experiment::AddThenSubtract);
    coherent(&mut ideal, 1.2);
    ideal.exact = true;
    ideal.sequence.analyze = false;
    let f_ideal = stage(&run_exp(&ideal), "final").fidelity.unwrap();

    let mut noisy = config(Experiment::AddThenSubtract);
    coherent(&mut noisy, 1.2);
    noisy.sequence.pulses = PulseMode::Simulated;
    noisy.sequence.analyze = false;
    noisy.noise.heating_rate_hz = 150.0;
    noisy.noise.detection_window_us = 300.0;
    let f_noisy = stage(&run_exp(&noisy), "final").fidelity.unwrap();

    let mut sta = config(Experiment::SubtractThenAdd);
    coherent(&mut sta, 1.2);
    sta.exact = true;
    sta.sequence.analyze = true;
    let p0 = stage(&run_exp(&sta), "final_rec").p0;

    verdict(
        exact && f_ideal >= 0.999 && f_noisy >= 0.92 && p0 <= 0.05,
        format!(
            "commutator exact {exact}; add-then-subtract |1.2> fidelity ideal {f_ideal:.6} (>= 0.999), \
             heated {f_noisy:.4} (>= 0.92); subtract-then-add reconstructed p0 {p0:.2e} (<= 0.05)"
        ),
    )
}

fn random_rank_two(rng: &mut ChaCha8Rng, d: usize, trunc: FockTruncation) -> DensityOperator {
    let mut pure = || {
        let v: Vec<Complex<f64>> = (0..d)
            .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        DensityOperator::pure_phonon(trunc, &v).unwrap()
    };
    let (a, b) = (pure(), pure());
    let w = 0.2 + 0.6 * rng.random::<f64>();
    let m = a.matrix() * Complex::from(w) + b.matrix() * Complex::from(1.0 - w);
    DensityOperator::from_matrix(trunc, Layout::Phonon, m).unwrap()
}

fn c6_tomography() -> Verdict {
    let trunc = FockTruncation::with_n_max(25).unwrap();
    let settings = ReconstructionSettings {
        displacement_amp: 0.8,
        n_angles: 8,
        ..Default::default()
    };
    let trap = TrapParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut monotone = true;
    let mut worst_exact: f64 = 1.0;
    for d in 2..=6 {
        for _ in 0..3 {
            let truth = random_rank_two(&mut rng, d, trunc);
            let data =
                generate_dataset(&truth, &settings, DatasetMode::Exact, &trap, &NoiseParams::ideal(), &mut rng).unwrap();
            let rec = mle_reconstruct::<f64>(&data, &settings).unwrap();
            monotone &= rec.loglik.windows(2).all(|w| w[1] >= w[0]);
            let n = rec.rho.truncation().n_max;
            worst_exact = worst_exact.min(fidelity(&rec.rho, &truth.resized(n).unwrap()).unwrap());
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let plus = DensityOperator::pure_phonon(trunc, &[Complex::new(h, 0.0), Complex::new(h, 0.0)]).unwrap();
    let mut worst_sampled: f64 = 1.0;
    for _ in 0..3 {
        let data = generate_dataset(
            &plus,
            &settings,
            DatasetMode::Sampled { shots: 1000 },
            &trap,
            &NoiseParams::ideal(),
            &mut rng,
        )
        .unwrap();
        let rec = mle_reconstruct::<f64>(&data, &settings).unwrap();
        monotone &= rec.loglik.windows(2).all(|w| w[1] >= w[0]);
        let n = rec.rho.truncation().n_max;
        worst_sampled = worst_sampled.min(fidelity(&rec.rho, &plus.resized(n).unwrap()).unwrap());
    }
    verdict(
        worst_exact >= 0.999 && worst_sampled >= 0.98 && monotone,
        format!(
            "15 exact rank-2 runs (dim 2..6) min fidelity {worst_exact:.6} (>= 0.999); \
             3 sampled runs min fidelity {worst_sampled:.4} (>= 0.98); log-likelihood non-decreasing {monotone}"
        ),
    )
}

fn c7_heating() -> Verdict {
    let params = NoiseParams {
        gamma: 15.0,
        nbar: 10.0,
        ..NoiseParams::ideal()
    };
    // n = 3 heated for 10 ms keeps ~1e-12 of its weight above n = 50
    let trunc = FockTruncation::with_n_max(50).unwrap();
    let step = default_heat_step(&params, trunc.n_max);
    let mut worst_rel: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    for n0 in [0usize, 3] {
        let mut probs = vec![0.0; n0 + 1];
        probs[n0] = 1.0;
        let rho = DensityOperator::diagonal_phonon(trunc, &probs).unwrap();
        for t in [1e-3, 2.5e-3, 5e-3, 10e-3] {
            let out = heat(&rho, t, &params, step).unwrap();
            let mean = out.phonon_distribution().mean();
            let oracle = params.nbar + (n0 as f64 - params.nbar) * (-params.gamma * t).exp();
            worst_rel = worst_rel.max(((mean - oracle) / oracle).abs());
            worst_trace = worst_trace.max((out.trace() - 1.0).abs());
        }
    }
    verdict(
        worst_rel <= 1e-6 && worst_trace < 1e-8,
        format!("max relative <n> error {worst_rel:.2e} (tol 1e-6); max trace drift {worst_trace:.2e} (< 1e-8)"),
    )
}

/// Adaptive Simpson quadrature.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn c8_stark_phase() -> Verdict {
    let sweep = ExperimentConfig::default().sweep_params();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    // the full phase is dominated by the GHz carrier; the residual (carrier
    // removed) is checked at the same relative tolerance
    let residual = SweepParams {
        omega_bsb_meas: 0.0,
        ..sweep
    };
    for _ in 0..100 {
        let t = sweep.duration * rng.random::<f64>();
        for (s, slot) in [(&sweep, &mut worst), (&residual, &mut worst_residual)] {
            let integrand = |u: f64| {
                let x = PI * u / s.duration;
                let omega_sq = s.omega0 * s.omega0 * (x.sin().powi(2) + s.beta * s.beta);
                s.omega_bsb_meas - omega_sq / (2.0 * s.delta_total) + s.delta0 * x.cos()
            };
            let quad = simpson(&integrand, 0.0, t, 1e-13);
            let closed = stark_phase(t, s);
            let rel = ((closed - quad) / quad).abs();
            *slot = slot.max(rel);
        }
    }
    verdict(
        worst <= 1e-9 && worst_residual <= 1e-9,
        format!("100 random t: max relative deviation {worst:.1e}, carrier-free part {worst_residual:.1e} (tol 1e-9)"),
    )
}

fn tree_bytes(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn c9_determinism() -> Verdict {
    let mut identical = true;
    let mut files = 0;
    for experiment in [Experiment::AddThenSubtract, Experiment::RabiScan] {
        let mut cfg = config(experiment);
        cfg.seed = 11;
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run(&cfg, a.path()).unwrap();
        run(&cfg, b.path()).unwrap();
        let (ta, tb) = (tree_bytes(a.path()), tree_bytes(b.path()));
        files += ta.len();
        identical &= !ta.is_empty() && ta == tb;
    }
    verdict(identical, format!("{files} artifacts from two experiments byte-identical across reruns: {identical}"))
}

fn main() {
    type Criterion = (u32, &'static str, Duration, fn() -> Verdict);
    let criteria: [Criterion; 9] = [
        (1, "sqrt(n+1) Rabi scaling", Duration::from_secs(10), c1_rabi_scaling),
        (2, "uniform adiabatic transfer", Duration::from_secs(30), c2_uniform_transfer),
        (3, "sub-Poissonian sequence", Duration::from_secs(300), c3_sub_poissonian),
        (4, "Wigner negativity", Duration::from_secs(30), c4_wigner_negativity),
        (5, "commutator", Duration::from_secs(300), c5_commutator),
        (6, "MLE tomography round trip", Duration::from_secs(120), c6_tomography),
        (7, "heating oracle", Duration::from_secs(30), c7_heating),
        (8, "Stark phase identity", Duration::from_secs(1), c8_stark_phase),
        (9, "determinism", Duration::MAX, c9_determinism),
    ];
    let mut passed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check));
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass, v.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        let in_time = elapsed <= limit;
        let timing = if limit == Duration::MAX {
            format!("{:.1} s", elapsed.as_secs_f64())
        } else {
            format!("{:.1} s (limit {} s)", elapsed.as_secs_f64(), limit.as_secs())
        };
        let ok = pass && in_time;
        passed += usize::from(ok);
        println!(
            "{} criterion {id} ({name}): {detail}; runtime {timing}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {passed}/9 criteria pass");
}
