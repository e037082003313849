//! Experiment configuration: a TOML document in laboratory units (kHz, μs, Hz)
//! converted to the SI/rad·s⁻¹ parameters of the simulator.

use std::f64::consts::PI;
use std::path::Path;

use phonon_core::dynamics::{SweepParams, TrapParams};
use phonon_core::hilbert::FockTruncation;
use phonon_core::noise::NoiseParams;
use phonon_core::tomography::ReconstructionSettings;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const KHZ: f64 = 2.0 * PI * 1e3;
pub const US: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    RabiScan,
    AdiabaticTransfer,
    Add,
    Subtract,
    AddThenSubtract,
    SubtractThenAdd,
    Tomography,
    Wigner,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::RabiScan,
        Experiment::AdiabaticTransfer,
        Experiment::Add,
        Experiment::Subtract,
        Experiment::AddThenSubtract,
        Experiment::SubtractThenAdd,
        Experiment::Tomography,
        Experiment::Wigner,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::RabiScan => "rabi_scan",
            Experiment::AdiabaticTransfer => "adiabatic_transfer",
            Experiment::Add => "add",
            Experiment::Subtract => "subtract",
            Experiment::AddThenSubtract => "add_then_subtract",
            Experiment::SubtractThenAdd => "subtract_then_add",
            Experiment::Tomography => "tomography",
            Experiment::Wigner => "wigner",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Coherent,
    Fock,
    Thermal,
}

/// Initial motional state; the qubit always starts in |↓⟩.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub kind: InputKind,
    /// Coherent amplitude `[re, im]`.
    pub alpha: [f64; 2],
    /// Fock level.
    pub n: usize,
    /// Thermal mean occupation.
    pub nbar: f64,
}

impl Default for InputConfig {
    fn default() -> Self {
        Self {
            kind: InputKind::Coherent,
            alpha: [0.81, 0.0],
            n: 0,
            nbar: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseMode {
    /// Integrated sweep dynamics.
    Simulated,
    /// Perfect transfer `|↓,n⟩ → |↑,n+1⟩`.
    Ideal,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceConfig {
    /// Operations applied by `add`, `subtract` and `wigner`.
    pub repeat: usize,
    pub pulses: PulseMode,
    /// Reconstruct every stage by tomography.
    pub analyze: bool,
    /// Bootstrap resamples per reconstruction; zero disables.
    pub bootstrap: usize,
    /// Shots behind the post-selection success fraction.
    pub detection_shots: u64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            repeat: 1,
            pulses: PulseMode::Simulated,
            analyze: true,
            bootstrap: 0,
            detection_shots: 1000,
        }
    }
}

/// Fock levels and time grid of `rabi_scan` and `adiabatic_transfer`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub levels: Vec<usize>,
    pub scan_points: usize,
    pub waveform_points: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            levels: (0..=5).collect(),
            scan_points: 200,
            waveform_points: 401,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataMode {
    Exact,
    Sampled,
    Scan,
}

/// How tomography data are produced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub mode: DataMode,
    /// Shots per setting (sampled) or per scan point (scan).
    pub shots: u64,
    pub scan_points: usize,
    pub n_max_fit: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            mode: DataMode::Sampled,
            shots: 1000,
            scan_points: 60,
            n_max_fit: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerConfig {
    /// Grid covers `[-extent, extent]²`.
    pub extent: f64,
    pub points: usize,
}

impl Default for WignerConfig {
    fn default() -> Self {
        Self {
            extent: 3.0,
            points: 61,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapConfig {
    pub omega_x_khz: f64,
    pub omega_y_khz: f64,
    pub omega_z_khz: f64,
    pub omega_hf_khz: f64,
    pub eta: f64,
    /// Blue-sideband π time of the ground state.
    pub t_pi_us: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        Self {
            omega_x_khz: 2800.0,
            omega_y_khz: 3200.0,
            omega_z_khz: 600.0,
            omega_hf_khz: 12_642_800.0,
            eta: 0.1,
            t_pi_us: 13.0,
        }
    }
}

/// Sweep frequencies are cyclic (Ω/2π) in kHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub omega0_khz: f64,
    pub beta: f64,
    pub delta0_khz: f64,
    pub duration_us: f64,
    /// Stark shift at peak drive; sets the Stark-compensation detuning.
    pub stark_shift_khz: f64,
    pub sideband_offset_khz: f64,
    /// Integration step; defaults to a 2000th of the sweep.
    pub step_us: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            omega0_khz: 38.5,
            beta: 0.075,
            delta0_khz: 1.6 * 38.5,
            duration_us: 91.0,
            stark_shift_khz: 33.0,
            sideband_offset_khz: 0.0,
            step_us: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Heating rate `γn̄` in phonons per second.
    pub heating_rate_hz: f64,
    /// Reservoir occupation `n̄`.
    pub nbar: f64,
    pub eps_bright: f64,
    pub eps_dark: f64,
    pub jitter_khz: f64,
    pub detection_window_us: f64,
    pub heat_during_pulses: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            heating_rate_hz: 150.0,
            nbar: 10.0,
            eps_bright: 0.01,
            eps_dark: 0.01,
            jitter_khz: 0.0,
            detection_window_us: 300.0,
            heat_during_pulses: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    pub n_max: usize,
    pub leakage_tol: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            n_max: 25,
            leakage_tol: FockTruncation::DEFAULT_LEAKAGE_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    /// Output subdirectory; defaults to `seed-<seed>`.
    pub label: Option<String>,
    /// Noiseless run: ideal pulses, no heating or detection errors, exact
    /// tomography data.
    pub exact: bool,
    pub input: InputConfig,
    pub sequence: SequenceConfig,
    pub probe: ProbeConfig,
    pub data: DataConfig,
    pub wigner: WignerConfig,
    pub trap: TrapConfig,
    pub sweep: SweepConfig,
    pub noise: NoiseConfig,
    pub truncation: TruncationConfig,
    pub reconstruction: ReconstructionSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Add,
            seed: 0,
            label: None,
            exact: false,
            input: InputConfig::default(),
            sequence: SequenceConfig::default(),
            probe: ProbeConfig::default(),
            data: DataConfig::default(),
            wigner: WignerConfig::default(),
            trap: TrapConfig::default(),
            sweep: SweepConfig::default(),
            noise: NoiseConfig::default(),
            truncation: TruncationConfig::default(),
            reconstruction: ReconstructionSettings::default(),
        }
    }
}

/// A field-level validation failure, located by its dotted key.
#[derive(Debug)]
struct Invalid {
    field: &'static str,
    message: String,
}

fn positive(field: &'static str, v: f64) -> Result<(), Invalid> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Invalid {
            field,
            message: format!("must be positive, got {v}"),
        })
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<(), Invalid> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Invalid {
            field,
            message: format!("must be non-negative, got {v}"),
        })
    }
}

fn probability(field: &'static str, v: f64) -> Result<(), Invalid> {
    if (0.0..0.5).contains(&v) {
        Ok(())
    } else {
        Err(Invalid {
            field,
            message: format!("must lie in [0, 0.5), got {v}"),
        })
    }
}

fn require(cond: bool, field: &'static str, message: &str) -> Result<(), Invalid> {
    if cond {
        Ok(())
    } else {
        Err(Invalid {
            field,
            message: message.to_string(),
        })
    }
}

impl ExperimentConfig {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| format!("seed-{}", self.seed))
    }

    pub fn trap_params(&self) -> TrapParams {
        let t = &self.trap;
        TrapParams {
            omega_x: t.omega_x_khz * KHZ,
            omega_y: t.omega_y_khz * KHZ,
            omega_z: t.omega_z_khz * KHZ,
            omega_hf: t.omega_hf_khz * KHZ,
            eta: t.eta,
            t_pi: t.t_pi_us * US,
        }
    }

    pub fn sweep_params(&self) -> SweepParams {
        let s = &self.sweep;
        let trap = self.trap_params();
        let omega0 = s.omega0_khz * KHZ;
        SweepParams {
            omega0,
            beta: s.beta,
            delta0: s.delta0_khz * KHZ,
            duration: s.duration_us * US,
            delta_total: omega0 * omega0 / (2.0 * s.stark_shift_khz * KHZ),
            omega_bsb_meas: trap.omega_hf + trap.omega_x,
            sideband_offset: s.sideband_offset_khz * KHZ,
        }
    }

    pub fn step(&self) -> f64 {
        self.sweep
            .step_us
            .map(|s| s * US)
            .unwrap_or_else(|| self.sweep_params().default_step())
    }

    /// Noise model in effect; all-ideal for exact runs.
    pub fn noise_params(&self) -> NoiseParams {
        if self.exact {
            return NoiseParams::ideal();
        }
        let n = &self.noise;
        let gamma = if n.nbar > 0.0 { n.heating_rate_hz / n.nbar } else { 0.0 };
        NoiseParams {
            gamma,
            nbar: n.nbar,
            eps_bright: n.eps_bright,
            eps_dark: n.eps_dark,
            jitter_sigma: n.jitter_khz * KHZ,
            detection_window: n.detection_window_us * US,
            heat_during_pulses: n.heat_during_pulses,
        }
    }

    pub fn truncation(&self) -> Result<FockTruncation, CliError> {
        FockTruncation::new(self.truncation.n_max, self.truncation.leakage_tol)
            .map_err(|e| CliError::config("<config>", format!("truncation: {e}")))
    }

    pub fn data_mode(&self) -> DataMode {
        if self.exact {
            DataMode::Exact
        } else {
            self.data.mode
        }
    }

    pub fn ideal_pulses(&self) -> bool {
        self.exact || self.sequence.pulses == PulseMode::Ideal
    }

    fn check(&self) -> Result<(), Invalid> {
        let t = &self.trap;
        positive("trap.omega_x_khz", t.omega_x_khz)?;
        positive("trap.omega_y_khz", t.omega_y_khz)?;
        positive("trap.omega_z_khz", t.omega_z_khz)?;
        positive("trap.omega_hf_khz", t.omega_hf_khz)?;
        positive("trap.eta", t.eta)?;
        positive("trap.t_pi_us", t.t_pi_us)?;

        let s = &self.sweep;
        positive("sweep.omega0_khz", s.omega0_khz)?;
        non_negative("sweep.beta", s.beta)?;
        require(s.delta0_khz.is_finite(), "sweep.delta0_khz", "must be finite")?;
        positive("sweep.duration_us", s.duration_us)?;
        require(
            s.stark_shift_khz != 0.0 && !s.stark_shift_khz.is_nan(),
            "sweep.stark_shift_khz",
            "must be nonzero",
        )?;
        require(s.sideband_offset_khz.is_finite(), "sweep.sideband_offset_khz", "must be finite")?;
        if let Some(step) = s.step_us {
            positive("sweep.step_us", step)?;
            require(step <= s.duration_us / 2.0, "sweep.step_us", "must not exceed half the sweep")?;
        }

        let n = &self.noise;
        non_negative("noise.heating_rate_hz", n.heating_rate_hz)?;
        non_negative("noise.nbar", n.nbar)?;
        require(
            n.heating_rate_hz == 0.0 || n.nbar > 0.0,
            "noise.nbar",
            "must be positive when heating_rate_hz is nonzero",
        )?;
        probability("noise.eps_bright", n.eps_bright)?;
        probability("noise.eps_dark", n.eps_dark)?;
        non_negative("noise.jitter_khz", n.jitter_khz)?;
        non_negative("noise.detection_window_us", n.detection_window_us)?;

        require(self.truncation.n_max >= 1, "truncation.n_max", "must be at least 1")?;
        require(
            self.truncation.leakage_tol > 0.0 && self.truncation.leakage_tol < 1.0,
            "truncation.leakage_tol",
            "must lie in (0, 1)",
        )?;

        let i = &self.input;
        require(i.alpha.iter().all(|x| x.is_finite()), "input.alpha", "must be finite")?;
        require(i.n <= self.truncation.n_max, "input.n", "exceeds truncation.n_max")?;
        non_negative("input.nbar", i.nbar)?;

        require(self.sequence.repeat >= 1, "sequence.repeat", "must be at least 1")?;
        require(!self.probe.levels.is_empty(), "probe.levels", "must list at least one level")?;
        require(
            self.probe.levels.iter().all(|&n| n < self.truncation.n_max),
            "probe.levels",
            "every level must lie below truncation.n_max",
        )?;
        require(self.probe.scan_points >= 3, "probe.scan_points", "must be at least 3")?;
        require(self.probe.waveform_points >= 2, "probe.waveform_points", "must be at least 2")?;

        let d = &self.data;
        require(
            d.mode != DataMode::Sampled || d.shots > 0 || self.exact,
            "data.shots",
            "sampled data need at least one shot",
        )?;
        require(d.n_max_fit >= 1, "data.n_max_fit", "must be at least 1")?;
        require(d.n_max_fit <= self.truncation.n_max, "data.n_max_fit", "exceeds truncation.n_max")?;
        require(d.scan_points > d.n_max_fit, "data.scan_points", "must exceed data.n_max_fit")?;

        positive("wigner.extent", self.wigner.extent)?;
        require(self.wigner.points >= 2, "wigner.points", "must be at least 2")?;

        let r = &self.reconstruction;
        non_negative("reconstruction.displacement_amp", r.displacement_amp)?;
        require(r.n_angles >= 1, "reconstruction.n_angles", "must be at least 1")?;
        positive("reconstruction.epsilon", r.epsilon)?;
        non_negative("reconstruction.loglik_tol", r.loglik_tol)?;
        require(r.n_max_rec != Some(0), "reconstruction.n_max_rec", "must be at least 1")?;
        if let Some(l) = &self.label {
            require(
                !l.is_empty() && !l.contains(['/', '\\']) && l != "." && l != "..",
                "label",
                "must be a plain directory name",
            )?;
        }

        // remaining physical invariants of the converted parameters
        let core = |field: &'static str, r: phonon_core::Result<()>| {
            r.map_err(|e| Invalid {
                field,
                message: e.to_string(),
            })
        };
        core("trap", self.trap_params().validate())?;
        core("sweep", self.sweep_params().validate())?;
        core("noise", self.noise_params().validate())?;
        Ok(())
    }

    /// Validates every field; `origin` and `text` give errors a file name and
    /// line.
    pub fn validate_with_source(&self, origin: &str, text: Option<&str>) -> Result<(), CliError> {
        self.check().map_err(|inv| {
            let line = text.and_then(|t| locate_key(t, inv.field));
            let place = match line {
                Some(l) => format!("{origin}:{l}"),
                None => origin.to_string(),
            };
            CliError::config(place, format!("{}: {}", inv.field, inv.message))
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_with_source("<config>", None)
    }

    /// Canonical TOML rendering of the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }
}

/// 1-based line of `section.key` (or a top-level `key`) in a TOML text.
fn locate_key(text: &str, field: &str) -> Option<usize> {
    let (section, key) = match field.rsplit_once('.') {
        Some((s, k)) => (Some(s), k),
        None => (None, field),
    };
    let mut current: Option<String> = None;
    let mut section_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            let name = line.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            if Some(name.as_str()) == section {
                section_line = Some(i + 1);
            }
            current = Some(name);
            continue;
        }
        let Some((k, _)) = line.split_once('=') else { continue };
        let k = k.trim();
        let hit = match section {
            Some(s) => current.as_deref() == Some(s) && k == key || current.is_none() && k == field,
            None => current.is_none() && k == key,
        };
        if hit {
            return Some(i + 1);
        }
    }
    section_line
}

/// Parses TOML text. Unknown keys are rejected; absent keys take defaults.
pub fn parse_config_str(text: &str, origin: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let place = match e.span() {
            Some(span) => format!("{origin}:{}", text[..span.start].matches('\n').count() + 1),
            None => origin.to_string(),
        };
        CliError::config(place, e.message().to_string())
    })?;
    cfg.validate_with_source(origin, Some(text))?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_str(&text, &path.display().to_string())
}
