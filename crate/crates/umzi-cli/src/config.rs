//! Experiment configuration: a JSON document with a default for every
//! field, deep-merged from an optional file, overridden by dotted-path
//! `--set` flags, and validated fail-closed.
//!
//! Precedence is flag > file > default. Unknown keys — in the file or in a
//! `--set` path — are errors that name the nearest known key, and
//! validation reports every violation with its field path instead of
//! stopping at the first.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use umzi_core::coincidence::{DetectionSetup, DetectorModel, PortPair};
use umzi_core::interferometer::{coherence_factor, UmziConfig};
use umzi_core::source::{SourceModel, SpectralMode};

/// Every legal leaf of the configuration tree, as a dotted path. The
/// schema walk derives the set of legal keys at every level from this
/// list, so it is the single source of truth for what a config may say.
const SCHEMA: &[&str] = &[
    "seed",
    "source.pump_wavelength_nm",
    "source.signal.center_wavelength_nm",
    "source.signal.bandwidth_3db_hz",
    "source.signal.filter_order",
    "source.idler.center_wavelength_nm",
    "source.idler.bandwidth_3db_hz",
    "source.idler.filter_order",
    "source.two_photon_coherence_time_s",
    "source.pair_rate_hz",
    "source.accidental_singles_rate_hz",
    "umzi.tau_s",
    "umzi.phi_rad",
    "umzi.theta0_rad",
    "umzi.coupler_ratio",
    "umzi.insertion_loss_db",
    "detectors.signal.efficiency",
    "detectors.signal.dark_count_rate_hz",
    "detectors.signal.jitter_fwhm_s",
    "detectors.idler.efficiency",
    "detectors.idler.dark_count_rate_hz",
    "detectors.idler.jitter_fwhm_s",
    "acquisition.bin_width_s",
    "acquisition.window_s",
    "acquisition.filter_width_s",
    "acquisition.resolution_s",
    "acquisition.chunks",
    "acquisition.background_offsets_s",
    "fig3.port_pair",
    "fig3.phases_rad",
    "fig3.duration_s",
    "fig4.antibunched_ports",
    "fig4.bunched_ports",
    "fig4.n_phases",
    "fig4.duration_per_point_s",
    "fig5.visibility",
    "fig5.n_delays",
    "fig5.max_delay_s",
    "fig5.duration_per_point_s",
    "sweep.port_pair",
    "sweep.n_phases",
    "sweep.phases_rad",
    "sweep.duration_per_point_s",
    "simulate.port_pair",
    "simulate.duration_s",
];

/// One configuration problem, tied to the field that caused it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// All problems found in one validation pass.
#[derive(Debug)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "configuration rejected ({} problem{}):",
            self.violations.len(),
            if self.violations.len() == 1 { "" } else { "s" }
        )?;
        for v in &self.violations {
            writeln!(f, "  {}: {}", v.path, v.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

// ---------------------------------------------------------------------------
// Typed sections. Defaults mirror the reference models in the core crate so
// an empty config file and no config file mean the same experiment.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub center_wavelength_nm: f64,
    pub bandwidth_3db_hz: f64,
    pub filter_order: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSection {
    /// Pump center wavelength, nm. `null` derives it from the signal and
    /// idler filter centers via energy conservation.
    pub pump_wavelength_nm: Option<f64>,
    pub signal: FilterSection,
    pub idler: FilterSection,
    pub two_photon_coherence_time_s: f64,
    pub pair_rate_hz: f64,
    pub accidental_singles_rate_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UmziSection {
    pub tau_s: f64,
    pub phi_rad: f64,
    pub theta0_rad: f64,
    pub coupler_ratio: f64,
    pub insertion_loss_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub efficiency: f64,
    pub dark_count_rate_hz: f64,
    pub jitter_fwhm_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorsSection {
    pub signal: DetectorSection,
    pub idler: DetectorSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionSection {
    pub bin_width_s: f64,
    pub window_s: f64,
    /// Width of the coincidence filter centred on each peak.
    pub filter_width_s: f64,
    /// Timestamp quantization of the simulated time tagger.
    pub resolution_s: f64,
    /// Number of parallel chunks the acquisition is split into. Has no
    /// effect on the sampled events, only on wall-clock time.
    pub chunks: usize,
    /// Offsets of the background windows used for the CAR estimate.
    pub background_offsets_s: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig3Section {
    pub port_pair: PortPair,
    /// Phases to acquire histograms at; the first gets the Gaussian fit,
    /// the last the central-peak suppression check.
    pub phases_rad: Vec<f64>,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig4Section {
    pub antibunched_ports: PortPair,
    pub bunched_ports: PortPair,
    pub n_phases: usize,
    pub duration_per_point_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig5Section {
    /// Interference visibility of the recombined router outputs.
    pub visibility: f64,
    pub n_delays: usize,
    pub max_delay_s: f64,
    pub duration_per_point_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub port_pair: PortPair,
    /// Number of uniform points over [0, 2π); ignored when `phases_rad`
    /// lists explicit phases.
    pub n_phases: usize,
    pub phases_rad: Option<Vec<f64>>,
    pub duration_per_point_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub port_pair: PortPair,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub source: SourceSection,
    pub umzi: UmziSection,
    pub detectors: DetectorsSection,
    pub acquisition: AcquisitionSection,
    pub fig3: Fig3Section,
    pub fig4: Fig4Section,
    pub fig5: Fig5Section,
    pub sweep: SweepSection,
    pub simulate: SimulateSection,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            center_wavelength_nm: 1555.75,
            bandwidth_3db_hz: 32e9,
            filter_order: 3,
        }
    }
}

impl Default for SourceSection {
    fn default() -> Self {
        let reference = SourceModel::default();
        Self {
            pump_wavelength_nm: None,
            signal: FilterSection {
                center_wavelength_nm: reference.signal.center_wavelength_nm,
                bandwidth_3db_hz: reference.signal.bandwidth_3db_hz,
                filter_order: reference.signal.filter_order,
            },
            idler: FilterSection {
                center_wavelength_nm: reference.idler.center_wavelength_nm,
                bandwidth_3db_hz: reference.idler.bandwidth_3db_hz,
                filter_order: reference.idler.filter_order,
            },
            two_photon_coherence_time_s: reference.two_photon_coherence_time_s,
            pair_rate_hz: reference.pair_rate_hz,
            accidental_singles_rate_hz: reference.accidental_singles_rate_hz,
        }
    }
}

impl Default for UmziSection {
    fn default() -> Self {
        let reference = UmziConfig::default();
        Self {
            tau_s: reference.tau_s,
            phi_rad: reference.phi_rad,
            theta0_rad: reference.theta0_rad,
            coupler_ratio: reference.coupler_ratio,
            insertion_loss_db: reference.insertion_loss_db,
        }
    }
}

impl From<DetectorModel> for DetectorSection {
    fn from(m: DetectorModel) -> Self {
        Self {
            efficiency: m.efficiency,
            dark_count_rate_hz: m.dark_count_rate_hz,
            jitter_fwhm_s: m.jitter_fwhm_s,
        }
    }
}

impl Default for DetectorsSection {
    fn default() -> Self {
        Self {
            signal: DetectorModel::reference_signal().into(),
            idler: DetectorModel::reference_idler().into(),
        }
    }
}

impl Default for AcquisitionSection {
    fn default() -> Self {
        Self {
            bin_width_s: 4e-12,
            window_s: 800e-12,
            filter_width_s: 88e-12,
            resolution_s: 4e-12,
            chunks: 1,
            background_offsets_s: vec![-350e-12, -250e-12, 250e-12, 350e-12],
        }
    }
}

impl Default for Fig3Section {
    fn default() -> Self {
        Self {
            port_pair: PortPair::EF,
            phases_rad: vec![std::f64::consts::FRAC_PI_2, std::f64::consts::PI],
            duration_s: 30.0,
        }
    }
}

impl Default for Fig4Section {
    fn default() -> Self {
        Self {
            antibunched_ports: PortPair::EF,
            bunched_ports: PortPair::DE,
            n_phases: 24,
            duration_per_point_s: 5.0,
        }
    }
}

impl Default for Fig5Section {
    fn default() -> Self {
        Self {
            visibility: 0.99,
            n_delays: 64,
            max_delay_s: 5e-12,
            duration_per_point_s: 1.5,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            port_pair: PortPair::EF,
            n_phases: 24,
            phases_rad: None,
            duration_per_point_s: 5.0,
        }
    }
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            port_pair: PortPair::EF,
            duration_s: 10.0,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            source: SourceSection::default(),
            umzi: UmziSection::default(),
            detectors: DetectorsSection::default(),
            acquisition: AcquisitionSection::default(),
            fig3: Fig3Section::default(),
            fig4: Fig4Section::default(),
            fig5: Fig5Section::default(),
            sweep: SweepSection::default(),
            simulate: SimulateSection::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Schema walk: unknown-key detection with nearest-key suggestions.
// ---------------------------------------------------------------------------

/// Legal child segments directly under `prefix` ("" for the root).
fn known_children(prefix: &str) -> BTreeSet<&'static str> {
    SCHEMA
        .iter()
        .filter_map(|leaf| {
            let rest = if prefix.is_empty() {
                Some(*leaf)
            } else {
                leaf.strip_prefix(prefix)?.strip_prefix('.')
            }?;
            Some(rest.split('.').next().unwrap_or(rest))
        })
        .collect()
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_owned()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Classic Levenshtein edit distance; the key sets are tiny, so the O(nm)
/// table is perfectly fine.
fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut previous = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let insert_delete = row[j].min(row[j + 1]) + 1;
            let substitute = previous + usize::from(ca != cb);
            previous = row[j + 1];
            row[j + 1] = insert_delete.min(substitute);
        }
    }
    row[b.len()]
}

fn nearest<'a>(target: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    candidates
        .into_iter()
        .map(|c| (edit_distance(target, c), c))
        .min()
        .map(|(_, c)| c)
}

fn unknown_key_violation(path: &str, key: &str, siblings: &BTreeSet<&'static str>) -> Violation {
    let message = match nearest(key, siblings.iter().copied()) {
        Some(best) => format!(
            "unknown key; nearest known key is `{}`",
            join(path.rsplit_once('.').map_or("", |(p, _)| p), best)
        ),
        None => "unknown key".to_owned(),
    };
    Violation::new(path, message)
}

/// Walks a parsed JSON document and records every key the schema does not
/// know, plus known interior keys whose value is not an object.
fn check_keys(value: &Value, prefix: &str, violations: &mut Vec<Violation>) {
    let Value::Object(map) = value else {
        return;
    };
    let children = known_children(prefix);
    for (key, child) in map {
        let path = join(prefix, key);
        if !children.contains(key.as_str()) {
            violations.push(unknown_key_violation(&path, key, &children));
            continue;
        }
        let interior = !known_children(&path).is_empty();
        if interior {
            if child.is_object() {
                check_keys(child, &path, violations);
            } else {
                violations.push(Violation::new(path, "expected an object".to_owned()));
            }
        } else if child.is_object() {
            violations.push(Violation::new(path, "expected a value, got an object".to_owned()));
        }
    }
}

// ---------------------------------------------------------------------------
// Merge and overrides.
// ---------------------------------------------------------------------------

/// Deep merge: objects are merged key by key, everything else replaces.
fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(base_map), Value::Object(overlay_map)) => {
            for (key, value) in overlay_map {
                match base_map.get_mut(&key) {
                    Some(slot) => merge(slot, value),
                    None => {
                        base_map.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

/// Parses one `--set path=value` argument against the schema. The value is
/// parsed as JSON when possible, otherwise taken as a bare string, so
/// `--set fig3.port_pair=EF` works without shell-quoted quotes.
fn parse_set(raw: &str) -> Result<(String, Value), Violation> {
    let Some((path, text)) = raw.split_once('=') else {
        return Err(Violation::new(
            raw,
            "--set needs the form `path=value`".to_owned(),
        ));
    };
    let path = path.trim();
    if !SCHEMA.contains(&path) {
        return Err(match nearest(path, SCHEMA.iter().copied()) {
            Some(best) => Violation::new(
                path,
                format!("unknown key; nearest known key is `{best}`"),
            ),
            None => Violation::new(path, "unknown key".to_owned()),
        });
    }
    let value = serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_owned()));
    Ok((path.to_owned(), value))
}

fn set_path(root: &mut Value, path: &str, value: Value) {
    let mut slot = root;
    let mut segments = path.split('.').peekable();
    while let Some(segment) = segments.next() {
        let map = slot
            .as_object_mut()
            .expect("schema guarantees interior nodes are objects");
        if segments.peek().is_none() {
            map.insert(segment.to_owned(), value);
            return;
        }
        slot = map
            .entry(segment.to_owned())
            .or_insert_with(|| Value::Object(Default::default()));
    }
}

// ---------------------------------------------------------------------------
// Loading and validation.
// ---------------------------------------------------------------------------

/// Builds the effective configuration: defaults, then the file, then the
/// `--set` overrides, then the `--seed` flag; every stage fail-closed.
pub fn load_config(
    file: Option<&Path>,
    sets: &[String],
    seed_override: Option<u64>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut document =
        serde_json::to_value(ExperimentConfig::default()).expect("defaults serialize");
    let mut violations = Vec::new();

    if let Some(path) = file {
        let text = fs::read_to_string(path).map_err(|e| ConfigError {
            violations: vec![Violation::new(path.display().to_string(), e.to_string())],
        })?;
        let parsed: Value = serde_json::from_str(&text).map_err(|e| ConfigError {
            violations: vec![Violation::new(path.display().to_string(), e.to_string())],
        })?;
        if !parsed.is_object() {
            return Err(ConfigError {
                violations: vec![Violation::new(
                    path.display().to_string(),
                    "top level must be a JSON object".to_owned(),
                )],
            });
        }
        check_keys(&parsed, "", &mut violations);
        if violations.is_empty() {
            merge(&mut document, parsed);
        }
    }

    let mut overrides = Vec::new();
    for raw in sets {
        match parse_set(raw) {
            Ok(pair) => overrides.push(pair),
            Err(violation) => violations.push(violation),
        }
    }
    if !violations.is_empty() {
        return Err(ConfigError { violations });
    }
    for (path, value) in overrides {
        set_path(&mut document, &path, value);
    }
    if let Some(seed) = seed_override {
        set_path(&mut document, "seed", Value::from(seed));
    }

    let deserializer = document;
    let config: ExperimentConfig = serde_path_to_error::deserialize(deserializer)
        .map_err(|e| ConfigError {
            violations: vec![Violation::new(e.path().to_string(), e.inner().to_string())],
        })?;
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    /// The physical source the core simulation runs on. A `null` pump
    /// wavelength is derived from the filter centers via energy
    /// conservation, `2/λ_p = 1/λ_s + 1/λ_i`.
    pub fn source_model(&self) -> SourceModel {
        let signal = SpectralMode::new(
            self.source.signal.center_wavelength_nm,
            self.source.signal.bandwidth_3db_hz,
            self.source.signal.filter_order,
        );
        let idler = SpectralMode::new(
            self.source.idler.center_wavelength_nm,
            self.source.idler.bandwidth_3db_hz,
            self.source.idler.filter_order,
        );
        let pump_wavelength_nm = self.source.pump_wavelength_nm.unwrap_or_else(|| {
            2.0 * signal.center_wavelength_nm * idler.center_wavelength_nm
                / (signal.center_wavelength_nm + idler.center_wavelength_nm)
        });
        SourceModel {
            pump_wavelength_nm,
            signal,
            idler,
            two_photon_coherence_time_s: self.source.two_photon_coherence_time_s,
            pair_rate_hz: self.source.pair_rate_hz,
            accidental_singles_rate_hz: self.source.accidental_singles_rate_hz,
        }
    }

    /// The interferometer at the configured phase. The coherence factor is
    /// always derived from the source coherence time and the arm imbalance;
    /// it is not an independent knob.
    pub fn umzi_config(&self) -> Result<UmziConfig, ConfigError> {
        let gamma = coherence_factor(self.source.two_photon_coherence_time_s, self.umzi.tau_s)
            .map_err(|e| ConfigError {
                violations: vec![core_violation("source", &e)],
            })?;
        Ok(UmziConfig {
            tau_s: self.umzi.tau_s,
            phi_rad: self.umzi.phi_rad,
            theta0_rad: self.umzi.theta0_rad,
            coupler_ratio: self.umzi.coupler_ratio,
            coherence_factor: gamma,
            insertion_loss_db: self.umzi.insertion_loss_db,
        })
    }

    /// The detection chain watching `ports`.
    pub fn detection_setup(&self, ports: PortPair) -> DetectionSetup {
        DetectionSetup {
            ports,
            signal: DetectorModel {
                efficiency: self.detectors.signal.efficiency,
                dark_count_rate_hz: self.detectors.signal.dark_count_rate_hz,
                jitter_fwhm_s: self.detectors.signal.jitter_fwhm_s,
            },
            idler: DetectorModel {
                efficiency: self.detectors.idler.efficiency,
                dark_count_rate_hz: self.detectors.idler.dark_count_rate_hz,
                jitter_fwhm_s: self.detectors.idler.jitter_fwhm_s,
            },
            insertion_loss_db: self.umzi.insertion_loss_db,
            resolution_s: self.acquisition.resolution_s,
            chunks: self.acquisition.chunks,
        }
    }

    /// Canonical JSON rendering of the effective configuration; hashed into
    /// the run manifest and printed by `validate`.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Semantic validation across all sections, collecting every problem.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut violations = Vec::new();

        if let Err(e) = self.source_model().validate() {
            violations.push(core_violation("source", &e));
        }
        match coherence_factor(self.source.two_photon_coherence_time_s, self.umzi.tau_s) {
            Ok(gamma) => {
                let umzi = UmziConfig {
                    tau_s: self.umzi.tau_s,
                    phi_rad: self.umzi.phi_rad,
                    theta0_rad: self.umzi.theta0_rad,
                    coupler_ratio: self.umzi.coupler_ratio,
                    coherence_factor: gamma,
                    insertion_loss_db: self.umzi.insertion_loss_db,
                };
                if let Err(e) = umzi.validate() {
                    violations.push(core_violation("umzi", &e));
                }
            }
            Err(e) => violations.push(core_violation("source", &e)),
        }
        if let Err(e) = self
            .detection_setup(self.simulate.port_pair)
            .validate()
        {
            violations.push(core_violation("detectors", &e));
        }

        let acq = &self.acquisition;
        for (path, value) in [
            ("acquisition.bin_width_s", acq.bin_width_s),
            ("acquisition.window_s", acq.window_s),
            ("acquisition.filter_width_s", acq.filter_width_s),
        ] {
            if !value.is_finite() || value <= 0.0 {
                violations.push(Violation::new(path, format!("must be positive, got {value}")));
            }
        }
        if acq.filter_width_s > acq.window_s {
            violations.push(Violation::new(
                "acquisition.filter_width_s",
                format!(
                    "filter ({} s) must fit inside the correlation window ({} s)",
                    acq.filter_width_s, acq.window_s
                ),
            ));
        }
        if acq.background_offsets_s.is_empty() {
            violations.push(Violation::new(
                "acquisition.background_offsets_s",
                "need at least one background window".to_owned(),
            ));
        }
        if acq.background_offsets_s.iter().any(|o| !o.is_finite()) {
            violations.push(Violation::new(
                "acquisition.background_offsets_s",
                "offsets must be finite".to_owned(),
            ));
        }

        if self.fig3.phases_rad.is_empty() {
            violations.push(Violation::new(
                "fig3.phases_rad",
                "need at least one phase".to_owned(),
            ));
        }
        if self.fig3.phases_rad.iter().any(|p| !p.is_finite()) {
            violations.push(Violation::new(
                "fig3.phases_rad",
                "phases must be finite".to_owned(),
            ));
        }
        for (path, value) in [
            ("fig3.duration_s", self.fig3.duration_s),
            ("fig4.duration_per_point_s", self.fig4.duration_per_point_s),
            ("fig5.duration_per_point_s", self.fig5.duration_per_point_s),
            ("fig5.max_delay_s", self.fig5.max_delay_s),
            ("sweep.duration_per_point_s", self.sweep.duration_per_point_s),
            ("simulate.duration_s", self.simulate.duration_s),
        ] {
            if !value.is_finite() || value <= 0.0 {
                violations.push(Violation::new(path, format!("must be positive, got {value}")));
            }
        }
        if self.fig4.n_phases < 4 {
            violations.push(Violation::new(
                "fig4.n_phases",
                format!("need at least 4 phase points, got {}", self.fig4.n_phases),
            ));
        }
        if self.fig4.antibunched_ports.is_bunched() {
            violations.push(Violation::new(
                "fig4.antibunched_ports",
                format!(
                    "{:?} watches the bunched virtual port",
                    self.fig4.antibunched_ports
                ),
            ));
        }
        if !self.fig4.bunched_ports.is_bunched() {
            violations.push(Violation::new(
                "fig4.bunched_ports",
                format!(
                    "{:?} watches the antibunched virtual port",
                    self.fig4.bunched_ports
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.fig5.visibility) || !self.fig5.visibility.is_finite() {
            violations.push(Violation::new(
                "fig5.visibility",
                format!("must lie in [0, 1], got {}", self.fig5.visibility),
            ));
        }
        if self.fig5.n_delays < 2 {
            violations.push(Violation::new(
                "fig5.n_delays",
                format!("need at least 2 delay points, got {}", self.fig5.n_delays),
            ));
        }
        if self.sweep.n_phases < 4 && self.sweep.phases_rad.is_none() {
            violations.push(Violation::new(
                "sweep.n_phases",
                format!("need at least 4 phase points, got {}", self.sweep.n_phases),
            ));
        }
        if let Some(phases) = &self.sweep.phases_rad {
            if phases.len() < 2 {
                violations.push(Violation::new(
                    "sweep.phases_rad",
                    format!("need at least 2 explicit phases, got {}", phases.len()),
                ));
            }
            if phases.iter().any(|p| !p.is_finite()) {
                violations.push(Violation::new(
                    "sweep.phases_rad",
                    "phases must be finite".to_owned(),
                ));
            }
        }

        if violations.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { violations })
        }
    }
}

/// Maps a core validation error onto a config field path. Core errors name
/// the offending field in their own namespace; `source.*` and `umzi.*`
/// coincide with the config layout, the detection-chain names need
/// remapping, and bare names are anchored at `section`.
fn core_violation(section: &str, error: &umzi_core::Error) -> Violation {
    match error {
        umzi_core::Error::InvalidParameter { name, reason } => {
            let path = match *name {
                "setup.signal" => "detectors.signal".to_owned(),
                "setup.idler" => "detectors.idler".to_owned(),
                "setup.insertion_loss_db" => "umzi.insertion_loss_db".to_owned(),
                "setup.resolution_s" => "acquisition.resolution_s".to_owned(),
                "setup.chunks" => "acquisition.chunks".to_owned(),
                n if n.contains('.') => n.to_owned(),
                n => format!("{section}.{n}"),
            };
            let (path, reason) = refine_path(path, reason);
            Violation::new(path, reason)
        }
        other => Violation::new(section.to_owned(), other.to_string()),
    }
}

/// Messages about a non-leaf path often name the offending field first
/// ("efficiency must lie in [0, 1]"). When that leading word is a known
/// child of the path, move it into the path so the violation points at the
/// exact leaf.
fn refine_path(path: String, reason: &str) -> (String, String) {
    if SCHEMA.contains(&path.as_str()) {
        return (path, reason.to_owned());
    }
    if let Some((first, rest)) = reason.split_once(' ') {
        let candidate = format!("{path}.{first}");
        if SCHEMA.contains(&candidate.as_str()) {
            return (candidate, rest.to_owned());
        }
    }
    (path, reason.to_owned())
}
