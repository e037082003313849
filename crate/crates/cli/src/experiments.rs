//! Named experiments. Each one replays a protocol on the core engines and
//! records per-stage metrics and plot-ready artifacts.

use std::path::Path;

use nalgebra::Complex;
use phonon_core::dynamics::{drive_quadratures, drive_waveform, PulseEngine, SweepParams, TrapParams};
use phonon_core::hilbert::io::{write_density, write_wigner_csv};
use phonon_core::hilbert::operators::{parity, s_minus, s_plus};
use phonon_core::hilbert::{
    fidelity, make_coherent, make_fock, state_metrics, wigner, FockTruncation, GridSpec, Layout, Qubit,
};
use phonon_core::linalg::CMatrix;
use phonon_core::measurement::io::write_distribution;
use phonon_core::measurement::{
    default_scan_grid, fit_rabi_frequency, sideband_expectation, simulate_sideband_scan, subtract_and_select,
};
use phonon_core::noise::{jitter_detuning, NoiseParams};
use phonon_core::tomography::io::write_dataset;
use phonon_core::tomography::{bootstrap_errors, generate_dataset, mle_reconstruct, DatasetMode};
use phonon_core::{DensityOperator, Error, NoisyEngine};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{DataMode, Experiment, ExperimentConfig, InputKind, KHZ, US};
use crate::error::CliError;
use crate::output::{csv_table, ArtifactWriter};
use crate::report::{MetricRow, RunReport};

type Result<T> = std::result::Result<T, CliError>;

/// Runs the configured experiment and writes its artifacts under
/// `<outdir>/<experiment>/<label>/`. Identical configurations produce
/// byte-identical artifacts.
pub fn run(config: &ExperimentConfig, outdir: &Path) -> Result<RunReport> {
    config.validate()?;
    let name = config.experiment.name();
    let mut ctx = Ctx::new(config, outdir)?;
    let outcome = match config.experiment {
        Experiment::RabiScan => rabi_scan(&mut ctx),
        Experiment::AdiabaticTransfer => adiabatic_transfer(&mut ctx),
        Experiment::Add => add(&mut ctx),
        Experiment::Subtract => subtract(&mut ctx),
        Experiment::AddThenSubtract => add_then_subtract(&mut ctx),
        Experiment::SubtractThenAdd => subtract_then_add(&mut ctx),
        Experiment::Tomography => tomography(&mut ctx),
        Experiment::Wigner => wigner_experiment(&mut ctx),
    };
    outcome.map_err(|e| e.within(name))?;
    ctx.finish().map_err(|e| e.within(name))
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    trunc: FockTruncation,
    trap: TrapParams,
    sweep: SweepParams,
    noise: NoiseParams,
    rng: ChaCha8Rng,
    engine: Option<NoisyEngine>,
    out: ArtifactWriter,
    report: RunReport,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a ExperimentConfig, outdir: &Path) -> Result<Self> {
        let trunc = cfg.truncation()?;
        let out = ArtifactWriter::create(outdir, cfg.experiment.name(), &cfg.label())?;
        let report = RunReport {
            experiment: cfg.experiment.name().to_string(),
            input: describe_input(cfg),
            seed: cfg.seed,
            exact: cfg.exact,
            rows: Vec::new(),
            scalars: Vec::new(),
            artifacts: Vec::new(),
        };
        Ok(Self {
            cfg,
            trunc,
            trap: cfg.trap_params(),
            sweep: cfg.sweep_params(),
            noise: cfg.noise_params(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            engine: None,
            out,
            report,
        })
    }

    /// Joint input state with the qubit in |↓⟩.
    fn input(&self) -> Result<DensityOperator> {
        let i = &self.cfg.input;
        Ok(match i.kind {
            InputKind::Coherent => make_coherent(Complex::new(i.alpha[0], i.alpha[1]), self.trunc)?.to_density(),
            InputKind::Fock => make_fock(i.n, self.trunc)?.to_density(),
            InputKind::Thermal => DensityOperator::thermal(self.trunc, i.nbar)?.with_qubit(Qubit::Down)?,
        })
    }

    /// Pulse engine for one operation. Without jitter the engine is built
    /// once; with jitter every operation draws its own detuning offset.
    fn engine(&mut self) -> Result<NoisyEngine> {
        if let Some(e) = &self.engine {
            return Ok(e.clone());
        }
        let sweep = jitter_detuning(&self.sweep, &self.noise, &mut self.rng);
        let pulse = if self.cfg.ideal_pulses() {
            PulseEngine::ideal(self.trunc, sweep)?
        } else {
            PulseEngine::new(self.trunc, sweep, self.cfg.step())?
        };
        let engine = NoisyEngine::with_engine(pulse, self.noise, self.cfg.step())?;
        if self.noise.jitter_sigma == 0.0 {
            self.engine = Some(engine.clone());
        }
        Ok(engine)
    }

    fn detection_shots(&self) -> u64 {
        if self.cfg.exact {
            0
        } else {
            self.cfg.sequence.detection_shots
        }
    }

    /// Records metrics and artifacts of one stage; reconstructs it from
    /// simulated tomography data when `analyze` is set.
    fn stage(
        &mut self,
        stage: &str,
        rho: &DensityOperator,
        reference: Option<&DensityOperator>,
        success: Option<f64>,
        analyze: bool,
    ) -> Result<Option<DensityOperator>> {
        let ph = rho.phonon_reduced();
        self.out
            .write_with(&format!("{stage}_distribution.csv"), |w| write_distribution(&ph.phonon_distribution(), w))?;
        self.out.write_with(&format!("{stage}_rho.json"), |w| write_density(&ph, w))?;
        let row = metric_row(stage, &ph, reference, success)?;
        self.report.rows.push(row);
        if !analyze {
            return Ok(None);
        }
        self.reconstruct(stage, &ph, reference).map(Some)
    }

    fn reconstruct(
        &mut self,
        stage: &str,
        ph: &DensityOperator,
        reference: Option<&DensityOperator>,
    ) -> Result<DensityOperator> {
        let d = &self.cfg.data;
        let mode = match self.cfg.data_mode() {
            DataMode::Exact => DatasetMode::Exact,
            DataMode::Sampled => DatasetMode::Sampled { shots: d.shots },
            DataMode::Scan => DatasetMode::SidebandScan {
                shots_per_point: d.shots,
                points: d.scan_points,
                n_max_fit: d.n_max_fit,
            },
        };
        let settings = self.cfg.reconstruction;
        let data = generate_dataset(ph, &settings, mode, &self.trap, &self.noise, &mut self.rng)?;
        self.out.write_with(&format!("{stage}_dataset.json"), |w| write_dataset(&data, w))?;
        let rec = mle_reconstruct::<f64>(&data, &settings)?;
        let loglik: Vec<Vec<f64>> = rec.loglik.iter().enumerate().map(|(k, l)| vec![k as f64, *l]).collect();
        self.out
            .write(&format!("{stage}_loglik.csv"), csv_table(&["iteration", "loglik"], &loglik).as_bytes())?;
        self.out.write_with(&format!("{stage}_rho_rec.json"), |w| write_density(&rec.rho, w))?;
        let row = metric_row(&format!("{stage}_rec"), &rec.rho, reference, None)?;
        self.report.rows.push(row);
        self.report.push_scalar(format!("{stage}.rec.iterations"), rec.iterations as f64);
        self.report.push_scalar(format!("{stage}.rec.converged"), f64::from(u8::from(rec.converged)));
        let resamples = self.cfg.sequence.bootstrap;
        if resamples > 0 && !data.is_exact() {
            let b = bootstrap_errors(&data, &settings, resamples, &mut self.rng)?;
            self.report.push_scalar(format!("{stage}.rec.fidelity_err"), b.fidelity_std);
            self.report.push_scalar(format!("{stage}.rec.purity_err"), b.purity_std);
            self.report.push_scalar(format!("{stage}.rec.mean_n_err"), b.mean_n_std);
            self.report.push_scalar(format!("{stage}.rec.fano_err"), b.fano_std);
        }
        Ok(rec.rho)
    }

    fn finish(mut self) -> Result<RunReport> {
        if let Some(what) = self.report.first_non_finite() {
            return Err(Error::InvalidState(format!("non-finite metric in {what}")).into());
        }
        let config_text = self.cfg.to_toml();
        self.out.write("config.toml", config_text.as_bytes())?;
        self.out.write("report.txt", self.report.render().as_bytes())?;
        let manifest = self.out.finish(self.cfg.experiment.name(), &self.cfg.label(), self.cfg.seed, &config_text)?;
        let root = self.out.root().to_path_buf();
        self.report.artifacts = self.out.entries().iter().map(|e| root.join(&e.path)).collect();
        self.report.artifacts.push(manifest);
        Ok(self.report)
    }
}

fn describe_input(cfg: &ExperimentConfig) -> String {
    let i = &cfg.input;
    match cfg.experiment {
        Experiment::RabiScan | Experiment::AdiabaticTransfer => {
            let levels: Vec<String> = cfg.probe.levels.iter().map(|n| n.to_string()).collect();
            format!("fock levels {}", levels.join(","))
        }
        _ => match i.kind {
            InputKind::Coherent => format!("coherent alpha={}{:+}i", i.alpha[0], i.alpha[1]),
            InputKind::Fock => format!("fock n={}", i.n),
            InputKind::Thermal => format!("thermal nbar={}", i.nbar),
        },
    }
}

fn metric_row(
    stage: &str,
    ph: &DensityOperator,
    reference: Option<&DensityOperator>,
    success: Option<f64>,
) -> Result<MetricRow> {
    let m = state_metrics(ph);
    let fidelity = reference.map(|r| common_fidelity(ph, r)).transpose()?;
    Ok(MetricRow {
        stage: stage.to_string(),
        fidelity,
        purity: m.purity,
        mean_n: m.mean_n,
        fano: m.fano,
        p0: ph.phonon_distribution().get(0),
        success_prob: success,
    })
}

/// Fidelity of two phonon states, zero-padding the smaller space.
fn common_fidelity(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    let n = a.truncation().n_max.max(b.truncation().n_max);
    Ok(fidelity(&a.resized(n)?, &b.resized(n)?)?)
}

/// `SρS†/Tr(SρS†)` on the phonon space, the ideal action of a ladder
/// operator followed by renormalization.
fn ideal_ladder(ph: &DensityOperator, op: &CMatrix<f64>, what: &str) -> Result<DensityOperator> {
    let trunc = *ph.truncation();
    let edge = ph.edge_population();
    if edge > trunc.leakage_tol {
        return Err(Error::Truncation {
            leakage: edge,
            tol: trunc.leakage_tol,
            required_n_max: Some(trunc.n_max + 1),
        }
        .into());
    }
    let m = op * ph.matrix() * op.adjoint();
    let norm = phonon_core::linalg::trace(&m).re;
    if norm <= 1e-12 {
        return Err(Error::PostSelection(format!("ideal {what} annihilates the state")).into());
    }
    Ok(DensityOperator::from_matrix(trunc, Layout::Phonon, m / Complex::from(norm))?)
}

fn ideal_add(ph: &DensityOperator) -> Result<DensityOperator> {
    ideal_ladder(ph, &s_plus(ph.truncation().n_max), "addition")
}

fn ideal_subtract(ph: &DensityOperator) -> Result<DensityOperator> {
    ideal_ladder(ph, &s_minus(ph.truncation().n_max), "subtraction")
}

/// Sideband scans of Fock states and fitted Rabi frequencies.
fn rabi_scan(ctx: &mut Ctx) -> Result<()> {
    let probe = &ctx.cfg.probe;
    let durations = default_scan_grid(&ctx.trap, probe.scan_points);
    let omega0 = ctx.trap.sideband_rabi();
    let levels = probe.levels.clone();
    let sampled = !ctx.cfg.exact && ctx.cfg.data.shots > 0;
    let mut curves = Vec::with_capacity(levels.len());
    let mut fits = Vec::with_capacity(levels.len());
    for &n in &levels {
        let rho: DensityOperator = make_fock(n, ctx.trunc)?.to_density();
        let probs = if sampled {
            simulate_sideband_scan(&rho, &durations, ctx.cfg.data.shots, &ctx.trap, &ctx.noise, &mut ctx.rng)?
                .bright_fractions()
        } else {
            sideband_expectation(&rho, &durations, &ctx.trap, &ctx.noise)?
        };
        // one search band for every level, wide enough for n ≤ 15
        let omega = fit_rabi_frequency(&durations, &probs, 0.25 * omega0, 4.0 * omega0)?;
        fits.push((n, omega));
        curves.push(probs);
    }
    let base = fits.iter().find(|(n, _)| *n == 0).map_or(omega0, |f| f.1);

    let mut header = vec!["duration_us".to_string()];
    header.extend(levels.iter().map(|n| format!("p_up_n{n}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = durations
        .iter()
        .enumerate()
        .map(|(k, t)| std::iter::once(t / US).chain(curves.iter().map(|c| c[k])).collect())
        .collect();
    ctx.out.write("rabi_curves.csv", csv_table(&header, &rows).as_bytes())?;

    let fit_rows: Vec<Vec<f64>> = fits
        .iter()
        .map(|&(n, w)| vec![n as f64, w / KHZ, w / base, ((n + 1) as f64).sqrt()])
        .collect();
    ctx.out.write(
        "rabi_fit.csv",
        csv_table(&["n", "omega_khz", "ratio", "sqrt_n_plus_1"], &fit_rows).as_bytes(),
    )?;
    for &(n, w) in &fits {
        ctx.report.push_scalar(format!("n{n}.omega_khz"), w / KHZ);
        ctx.report.push_scalar(format!("n{n}.ratio"), w / base);
    }
    let worst = fits
        .iter()
        .map(|&(n, w)| (w / base / ((n + 1) as f64).sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    ctx.report.push_scalar("max_ratio_error", worst);
    Ok(())
}

/// Transfer probabilities `|↓,n⟩ → |↑,n+1⟩` of the simulated sweep, with
/// heating when configured, plus the baseband drive waveform.
fn adiabatic_transfer(ctx: &mut Ctx) -> Result<()> {
    let levels = ctx.cfg.probe.levels.clone();
    let pulse = PulseEngine::new(ctx.trunc, ctx.sweep, ctx.cfg.step())?;
    let heated = if ctx.noise.has_heating() {
        Some(NoisyEngine::with_engine(pulse.clone(), ctx.noise, ctx.cfg.step())?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(levels.len());
    let mut probs = Vec::with_capacity(levels.len());
    for &n in &levels {
        let state = make_fock(n, ctx.trunc)?;
        let p = pulse.transfer(&state)?.population(Qubit::Up, n + 1);
        let mut row = vec![n as f64, p];
        if let Some(engine) = &heated {
            let out = engine.transfer(&state.to_density())?;
            let ph = out.qubit_block(Qubit::Up)?[(n + 1, n + 1)].re;
            row.push(ph);
            ctx.report.push_scalar(format!("n{n}.transfer_heated"), ph);
        }
        ctx.report.push_scalar(format!("n{n}.transfer"), p);
        probs.push(p);
        rows.push(row);
    }
    let header: &[&str] = if heated.is_some() {
        &["n", "p_transfer", "p_transfer_heated"]
    } else {
        &["n", "p_transfer"]
    };
    ctx.out.write("transfer.csv", csv_table(header, &rows).as_bytes())?;
    let min = probs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    ctx.report.push_scalar("transfer.min", min);
    ctx.report.push_scalar("transfer.spread", max - min);

    // drive in the frame of the measured sideband frequency, which removes
    // the GHz carrier and leaves the Stark and detuning phases
    let base = SweepParams {
        omega_bsb_meas: 0.0,
        ..ctx.sweep
    };
    let points = ctx.cfg.probe.waveform_points;
    let wave: Vec<Vec<f64>> = (0..points)
        .map(|k| {
            let t = base.duration * k as f64 / (points - 1) as f64;
            let (i, q, phi) = drive_quadratures(t, &base);
            vec![t / US, i / KHZ, q / KHZ, phi, drive_waveform(t, &base) / KHZ]
        })
        .collect();
    ctx.out.write(
        "waveform.csv",
        csv_table(&["t_us", "in_phase_khz", "quadrature_khz", "phase_rad", "drive_khz"], &wave).as_bytes(),
    )?;
    Ok(())
}

fn add(ctx: &mut Ctx) -> Result<()> {
    let analyze = ctx.cfg.sequence.analyze;
    let mut rho = ctx.input()?;
    let mut reference = rho.phonon_reduced();
    ctx.stage("input", &rho, Some(&reference), None, analyze)?;
    for k in 1..=ctx.cfg.sequence.repeat {
        let engine = ctx.engine()?;
        rho = engine.add(&rho)?;
        reference = ideal_add(&reference)?;
        ctx.stage(&format!("add{k}"), &rho, Some(&reference), None, analyze)?;
    }
    Ok(())
}

fn subtract(ctx: &mut Ctx) -> Result<()> {
    let analyze = ctx.cfg.sequence.analyze;
    let mut rho = ctx.input()?;
    let mut reference = rho.phonon_reduced();
    ctx.stage("input", &rho, Some(&reference), None, analyze)?;
    for k in 1..=ctx.cfg.sequence.repeat {
        let engine = ctx.engine()?;
        let shots = ctx.detection_shots();
        let det = subtract_and_select(&engine, &rho, shots, &mut ctx.rng)?;
        rho = det.dark_state.clone();
        reference = ideal_subtract(&reference)?;
        ctx.report.push_scalar(format!("subtract{k}.dark_fraction"), det.dark_fraction());
        ctx.stage(&format!("subtract{k}"), &rho, Some(&reference), Some(det.dark_probability), analyze)?;
    }
    Ok(())
}

fn add_then_subtract(ctx: &mut Ctx) -> Result<()> {
    let analyze = ctx.cfg.sequence.analyze;
    let input = ctx.input()?;
    let target = input.phonon_reduced();
    ctx.stage("input", &input, Some(&target), None, analyze)?;
    let engine = ctx.engine()?;
    let added = engine.add(&input)?;
    ctx.stage("add", &added, Some(&ideal_add(&target)?), None, analyze)?;
    let engine = ctx.engine()?;
    let shots = ctx.detection_shots();
    let det = subtract_and_select(&engine, &added, shots, &mut ctx.rng)?;
    ctx.report.push_scalar("final.dark_fraction", det.dark_fraction());
    ctx.stage("final", &det.dark_state, Some(&target), Some(det.dark_probability), analyze)?;
    Ok(())
}

fn subtract_then_add(ctx: &mut Ctx) -> Result<()> {
    let analyze = ctx.cfg.sequence.analyze;
    let input = ctx.input()?;
    let ph = input.phonon_reduced();
    ctx.stage("input", &input, Some(&ph), None, analyze)?;
    let engine = ctx.engine()?;
    let shots = ctx.detection_shots();
    let det = subtract_and_select(&engine, &input, shots, &mut ctx.rng)?;
    let lowered = ideal_subtract(&ph)?;
    ctx.report.push_scalar("subtract.dark_fraction", det.dark_fraction());
    ctx.stage("subtract", &det.dark_state, Some(&lowered), Some(det.dark_probability), analyze)?;
    let engine = ctx.engine()?;
    let out = engine.add(&det.dark_state)?;
    ctx.stage("final", &out, Some(&ideal_add(&lowered)?), None, analyze)?;
    Ok(())
}

/// Tomography of the input state; always reconstructs.
fn tomography(ctx: &mut Ctx) -> Result<()> {
    let input = ctx.input()?;
    let target = input.phonon_reduced();
    ctx.stage("input", &input, Some(&target), None, true)?;
    Ok(())
}

/// Wigner functions of the input and of the state after `repeat` additions.
fn wigner_experiment(ctx: &mut Ctx) -> Result<()> {
    let analyze = ctx.cfg.sequence.analyze;
    let mut rho = ctx.input()?;
    let mut reference = rho.phonon_reduced();
    ctx.stage("input", &rho, Some(&reference), None, false)?;
    write_wigner(ctx, "input", &rho.phonon_reduced())?;
    for _ in 0..ctx.cfg.sequence.repeat {
        let engine = ctx.engine()?;
        rho = engine.add(&rho)?;
        reference = ideal_add(&reference)?;
    }
    let rec = ctx.stage("output", &rho, Some(&reference), None, analyze)?;
    write_wigner(ctx, "output", &rho.phonon_reduced())?;
    if let Some(rec) = rec {
        write_wigner(ctx, "output_rec", &rec)?;
    }
    Ok(())
}

fn write_wigner(ctx: &mut Ctx, name: &str, ph: &DensityOperator) -> Result<()> {
    // reconstructions live on a smaller space; padding is exact and keeps
    // the displaced parity sums accurate out to the grid corners
    let n_max = ph.truncation().n_max.max(ctx.trunc.n_max);
    let ph = &ph.resized(n_max)?;
    let w = &ctx.cfg.wigner;
    let grid = wigner(ph, &GridSpec::square(w.extent, w.points))?;
    ctx.out.write_with(&format!("wigner_{name}.csv"), |out| write_wigner_csv(&grid, out))?;
    // W(0) = (2/π)⟨P⟩ for the parity operator P
    let origin = 2.0 / std::f64::consts::PI * ph.expectation(&parity(ph.truncation().n_max)).re;
    ctx.report.push_scalar(format!("wigner.{name}.min"), grid.min());
    ctx.report.push_scalar(format!("wigner.{name}.origin"), origin);
    Ok(())
}
