//! TOML experiment description: parsing, `--set` overrides and translation
//! into engine configurations.
//!
//! Angles are in degrees, distances in metres, SNR in dB. Every section is
//! optional and falls back to the reference scenario.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vlc_noma::link::PowerInterpretation;
use vlc_noma::sim::{ExperimentConfig, NoiseConfig};
use vlc_noma::{
    EmptyGroupPolicy, FeedbackKind, FeedbackScheme, LedGeometry, MobilityConfig, NomaConfig,
    OmaRateModel, PairingStrategy, PowerAllocation, TargetRates,
};

pub const PRESETS: [(&str, &str); 3] = [
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
];

/// A configuration problem, reported with the field it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub ell: f64,
    pub hpbw_deg: f64,
    pub detector_area_cm2: f64,
    pub half_fov_deg: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            ell: 2.0,
            hpbw_deg: 60.0,
            detector_area_cm2: 1.0,
            half_fov_deg: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilitySection {
    pub num_users: usize,
    pub d_min: f64,
    pub d_max: f64,
    /// Defaults to `delta_phi_deg` of the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_phi_min_deg: Option<f64>,
    /// Defaults to `180 - delta_phi_deg` of the run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_phi_max_deg: Option<f64>,
}

impl Default for MobilitySection {
    fn default() -> Self {
        Self {
            num_users: 20,
            d_min: 0.0,
            d_max: 10.0,
            mean_phi_min_deg: None,
            mean_phi_max_deg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NomaSection {
    pub share_weak: f64,
    pub share_strong: f64,
    pub interpretation: PowerInterpretation,
    pub rate_weak: f64,
    pub rate_strong: f64,
    pub weak_rank: usize,
    pub strong_rank: usize,
    pub oma: OmaRateModel,
    pub empty_group: EmptyGroupPolicy,
}

impl Default for NomaSection {
    fn default() -> Self {
        Self {
            share_weak: 63.0 / 64.0,
            share_strong: 1.0 / 64.0,
            interpretation: PowerInterpretation::Power,
            rate_weak: 2.0,
            rate_strong: 10.0,
            weak_rank: 1,
            strong_rank: 10,
            oma: OmaRateModel::TimeShare,
            empty_group: EmptyGroupPolicy::Exclude,
        }
    }
}

/// Group thresholds as fractions of the distance range and half FOV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeedbackSection {
    pub c_d: f64,
    pub c_theta: f64,
}

impl Default for FeedbackSection {
    fn default() -> Self {
        Self { c_d: 0.1, c_theta: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Explicit grid; takes precedence over start/stop/step.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_db: Option<Vec<f64>>,
    pub gamma_db_start: f64,
    pub gamma_db_stop: f64,
    pub gamma_db_step: f64,
    pub trials: u64,
    pub seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            gamma_db: None,
            gamma_db_start: 120.0,
            gamma_db_stop: 300.0,
            gamma_db_step: 5.0,
            trials: 100_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub sigma_d: f64,
    pub sigma_phi_deg: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            sigma_d: 0.05,
            sigma_phi_deg: 2.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub label: String,
    pub delta_phi_deg: f64,
    #[serde(default)]
    pub noisy: bool,
    pub schemes: Vec<FeedbackKind>,
    /// Schemes whose OMA baseline is also reported.
    #[serde(default)]
    pub oma: Vec<FeedbackKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub mobility: MobilitySection,
    #[serde(default)]
    pub noma: NomaSection,
    #[serde(default)]
    pub feedback: FeedbackSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub run: Vec<RunSection>,
}

/// One curve family to compute: a scheme under one run's mobility.
#[derive(Debug, Clone)]
pub struct Job {
    pub run: String,
    pub kind: FeedbackKind,
    pub with_oma: bool,
    pub experiment: ExperimentConfig,
}

impl Job {
    pub fn label(&self, access: &str) -> String {
        format!("{}/{}-{}", self.run, access, self.kind.label())
    }
}

pub fn preset_text(name: &str) -> Result<&'static str, ConfigError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
            err(format!("unknown preset `{name}` (available: {})", names.join(", ")))
        })
}

pub fn read_file(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| err(format!("cannot read {}: {e}", path.display())))
}

/// Parses `text`, applies `key=value` overrides and checks the result.
pub fn load(text: &str, overrides: &[String]) -> Result<FileConfig, ConfigError> {
    let mut doc: toml::Value = toml::from_str(text).map_err(|e| err(format!("config: {e}")))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: FileConfig = doc.try_into().map_err(|e: toml::de::Error| err(format!("config: {e}")))?;
    if cfg.run.is_empty() {
        return Err(err("run: at least one [[run]] section is required"));
    }
    Ok(cfg)
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// `section.key=value`; array elements are addressed by index, as in
/// `run.1.delta_phi_deg=10`.
fn apply_override(doc: &mut toml::Value, spec: &str) -> Result<(), ConfigError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| err(format!("--set {spec}: expected key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(err(format!("--set {spec}: empty key segment")));
    }
    let mut node = doc;
    for (depth, key) in keys.iter().enumerate() {
        let last = depth + 1 == keys.len();
        node = match node {
            toml::Value::Table(t) => {
                if last {
                    t.insert(key.to_string(), parse_value(raw.trim()));
                    return Ok(());
                }
                t.entry(key.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            }
            toml::Value::Array(a) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| err(format!("--set {spec}: `{key}` must be an array index")))?;
                let len = a.len();
                let slot = a
                    .get_mut(idx)
                    .ok_or_else(|| err(format!("--set {spec}: index {idx} out of range ({len} entries)")))?;
                if last {
                    *slot = parse_value(raw.trim());
                    return Ok(());
                }
                slot
            }
            _ => return Err(err(format!("--set {spec}: `{key}` is not inside a table"))),
        };
    }
    Ok(())
}

fn field<T>(name: &str, r: vlc_noma::Result<T>) -> Result<T, ConfigError> {
    r.map_err(|e| err(format!("{name}: {e}")))
}

impl FileConfig {
    /// The resolved configuration as TOML, suitable for `--config`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn gamma_grid(&self) -> Result<Vec<f64>, ConfigError> {
        let s = &self.sweep;
        if let Some(g) = &s.gamma_db {
            return Ok(g.clone());
        }
        if !(s.gamma_db_step > 0.0) || !(s.gamma_db_stop >= s.gamma_db_start) {
            return Err(err("sweep: need gamma_db_step > 0 and gamma_db_stop >= gamma_db_start"));
        }
        let n = ((s.gamma_db_stop - s.gamma_db_start) / s.gamma_db_step + 1e-9).floor() as usize;
        Ok((0..=n).map(|k| s.gamma_db_start + k as f64 * s.gamma_db_step).collect())
    }

    fn geometry(&self) -> Result<LedGeometry, ConfigError> {
        let g = &self.geometry;
        field(
            "geometry",
            LedGeometry::from_degrees(g.ell, g.hpbw_deg, g.detector_area_cm2, g.half_fov_deg),
        )
    }

    fn mobility(&self, delta_phi_deg: f64) -> Result<MobilityConfig, ConfigError> {
        let m = &self.mobility;
        let lo = m.mean_phi_min_deg.unwrap_or(delta_phi_deg);
        let hi = m.mean_phi_max_deg.unwrap_or(180.0 - delta_phi_deg);
        field(
            "mobility",
            MobilityConfig::new(
                m.d_min,
                m.d_max,
                lo.to_radians(),
                hi.to_radians(),
                delta_phi_deg.to_radians(),
                m.num_users,
            ),
        )
    }

    fn noma_config(&self) -> Result<NomaConfig, ConfigError> {
        let n = &self.noma;
        let alloc = field(
            "noma",
            PowerAllocation::from_coefficients(n.share_weak, n.share_strong, n.interpretation),
        )?;
        let targets = field("noma", TargetRates::new(n.rate_weak, n.rate_strong))?;
        field("noma", NomaConfig::new(alloc, targets, n.oma))
    }

    /// Every (run, scheme) pair with its engine configuration.
    pub fn jobs(&self) -> Result<Vec<Job>, ConfigError> {
        let geom = self.geometry()?;
        let noma = self.noma_config()?;
        let grid = self.gamma_grid()?;
        let f = &self.feedback;
        if !(0.0..=1.0).contains(&f.c_d) || !(0.0..=1.0).contains(&f.c_theta) {
            return Err(err("feedback: c_d and c_theta must lie in [0, 1]"));
        }
        let mut jobs = Vec::new();
        for run in &self.run {
            let ctx = format!("run `{}`", run.label);
            if run.label.is_empty() || run.label.contains([',', '"', '\n']) {
                return Err(err(format!("{ctx}: label must be nonempty without commas or quotes")));
            }
            if run.schemes.is_empty() {
                return Err(err(format!("{ctx}: schemes must not be empty")));
            }
            if let Some(k) = run.oma.iter().find(|k| !run.schemes.contains(k)) {
                return Err(err(format!("{ctx}: oma lists `{}` which is not among its schemes", k.label())));
            }
            let mobility = self.mobility(run.delta_phi_deg).map_err(|e| err(format!("{ctx}: {e}")))?;
            let d_th = mobility.d_min + f.c_d * mobility.distance_span();
            let theta_th = f.c_theta * geom.half_fov;
            let noise = run.noisy.then_some(NoiseConfig {
                sigma_d: self.noise.sigma_d,
                sigma_phi: self.noise.sigma_phi_deg.to_radians(),
            });
            for &kind in &run.schemes {
                let ctx = format!("{ctx}, scheme {}", kind.label());
                let wrap = |e: vlc_noma::Error| err(format!("{ctx}: {e}"));
                let (scheme, strategy) = if kind.is_group() {
                    (
                        FeedbackScheme::group(kind, d_th, theta_th, &geom).map_err(wrap)?,
                        PairingStrategy::Group {
                            empty_group: self.noma.empty_group,
                        },
                    )
                } else {
                    (
                        FeedbackScheme::individual(kind).map_err(wrap)?,
                        PairingStrategy::individual(self.noma.weak_rank, self.noma.strong_rank).map_err(wrap)?,
                    )
                };
                let experiment = ExperimentConfig {
                    geom,
                    mobility,
                    noma,
                    scheme,
                    strategy,
                    gamma_db: grid.clone(),
                    trials: self.sweep.trials,
                    root_seed: self.sweep.seed,
                    noise,
                };
                experiment.validate().map_err(wrap)?;
                jobs.push(Job {
                    run: run.label.clone(),
                    kind,
                    with_oma: run.oma.contains(&kind),
                    experiment,
                });
            }
        }
        Ok(jobs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for (name, text) in PRESETS {
            let cfg = load(text, &[]).unwrap();
            let jobs = cfg.jobs().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!jobs.is_empty());
            assert_eq!(jobs[0].experiment.gamma_db.len(), 37);
        }
    }

    #[test]
    fn fig3_thresholds() {
        let cfg = load(preset_text("fig3").unwrap(), &[]).unwrap();
        let jobs = cfg.jobs().unwrap();
        let (d, t) = jobs[0].experiment.scheme.thresholds().unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        assert!((t - 5f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn overrides_reach_nested_and_array_fields() {
        let cfg = load(
            preset_text("fig2").unwrap(),
            &[
                "sweep.trials=7".into(),
                "run.1.delta_phi_deg=10".into(),
                "sweep.gamma_db=[150, 160]".into(),
                "noma.oma=full-slot".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.sweep.trials, 7);
        assert_eq!(cfg.run[1].delta_phi_deg, 10.0);
        assert_eq!(cfg.gamma_grid().unwrap(), vec![150.0, 160.0]);
        assert_eq!(cfg.noma.oma, OmaRateModel::FullSlot);
    }

    #[test]
    fn unknown_field_is_named() {
        let e = load(preset_text("fig2").unwrap(), &["geometry.height=3".into()]).unwrap_err();
        assert!(e.0.contains("height"), "{e}");
    }

    #[test]
    fn bad_override_syntax() {
        assert!(load(preset_text("fig2").unwrap(), &["sweep.trials".into()]).is_err());
        assert!(load(preset_text("fig2").unwrap(), &["run.9.label=x".into()]).is_err());
    }

    #[test]
    fn empty_grid_rejected() {
        let cfg = load(preset_text("fig2").unwrap(), &["sweep.gamma_db=[]".into()]).unwrap();
        let e = cfg.jobs().unwrap_err();
        assert!(e.0.contains("gamma_db"), "{e}");
    }

    #[test]
    fn infeasible_allocation_names_constraint() {
        let cfg = load(
            preset_text("fig2").unwrap(),
            &["noma.share_weak=0.6".into(), "noma.share_strong=0.4".into()],
        )
        .unwrap();
        let e = cfg.jobs().unwrap_err();
        assert!(e.0.contains("share_strong * eps_weak"), "{e}");
    }

    #[test]
    fn resolved_toml_round_trips() {
        let cfg = load(preset_text("fig4").unwrap(), &["sweep.seed=99".into()]).unwrap();
        let again = load(&cfg.to_toml(), &[]).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn grid_from_range() {
        let cfg = load(
            preset_text("fig2").unwrap(),
            &["sweep.gamma_db_start=100".into(), "sweep.gamma_db_stop=110".into(), "sweep.gamma_db_step=2.5".into()],
        )
        .unwrap();
        assert_eq!(cfg.gamma_grid().unwrap(), vec![100.0, 102.5, 105.0, 107.5, 110.0]);
    }
}
