//! Run configuration: one TOML file with a section per stage, every key
//! overridable with `--set section.key=value`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use odt_stark::absorption::{
    base_cross_sections, polarization_models, population_models, AbsorptionModel, ProbeConfig,
};
use odt_stark::imaging::{inversion_methods, CloudModel, EstimateOptions, Frame, ImagingSetup};
use odt_stark::numerics::{Grid, Quadrature};
use odt_stark::{BeamGeometry, Catalog, HalfInt, HyperfineState};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub catalog: CatalogSection,
    pub beam: BeamSection,
    pub probe: ProbeSection,
    pub cloud: CloudSection,
    pub frame: FrameSection,
    pub quadrature: QuadratureSection,
    pub imaging: ImagingSection,
    pub shift: ShiftSection,
    pub potential: PotentialSection,
    pub sigma_eff: SigmaEffSection,
    pub power_scan: PowerScanSection,
    pub equipotential: EquipotentialSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatalogSection {
    /// Catalog file; the bundled Rb-87 catalog when empty.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BeamSection {
    #[serde(rename = "power_W")]
    pub power_w: f64,
    pub waist_m: f64,
    pub wavelength_m: f64,
    pub focus_x_m: f64,
}

impl Default for BeamSection {
    fn default() -> Self {
        BeamSection {
            power_w: 1.0,
            waist_m: 17e-6,
            wavelength_m: 1064e-9,
            focus_x_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSection {
    /// Lower level of the reference line, e.g. `5S1/2 F=2`.
    pub lower: String,
    pub upper: String,
    #[serde(rename = "detuning_Hz")]
    pub detuning_hz: f64,
    /// Overrides the catalog linewidths (Γ/2π).
    #[serde(rename = "linewidth_Hz")]
    pub linewidth_hz: Option<f64>,
    pub polarization: String,
    pub population: String,
}

impl Default for ProbeSection {
    fn default() -> Self {
        ProbeSection {
            lower: "5S1/2 F=2".into(),
            upper: "5P3/2 F=3".into(),
            detuning_hz: 0.0,
            linewidth_hz: None,
            polarization: "isotropic".into(),
            population: "uniform".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloudSection {
    pub n0_m3: f64,
    pub sigma_x_m: f64,
    pub sigma_y_m: f64,
    pub sigma_z_m: f64,
    pub center_x_m: f64,
    pub center_y_m: f64,
    pub center_z_m: f64,
}

impl Default for CloudSection {
    fn default() -> Self {
        CloudSection {
            n0_m3: 1e18,
            sigma_x_m: 60e-6,
            sigma_y_m: 8e-6,
            sigma_z_m: 8e-6,
            center_x_m: 0.0,
            center_y_m: 0.0,
            center_z_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameSection {
    pub width_px: usize,
    pub height_px: usize,
    pub pixel_pitch_m: f64,
    pub center_x_m: f64,
    pub center_z_m: f64,
}

impl Default for FrameSection {
    fn default() -> Self {
        FrameSection {
            width_px: 121,
            height_px: 41,
            pixel_pitch_m: 4e-6,
            center_x_m: 0.0,
            center_z_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSection {
    pub points: usize,
    pub rel_tol: f64,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        QuadratureSection {
            points: 201,
            rel_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImagingSection {
    pub inversion: String,
    pub clamp_negatives: bool,
    pub heatmap: bool,
    /// `config` takes the widths from `[cloud]`; `image` measures x and z
    /// from the image marginals and keeps `sigma_y_m` from `[cloud]`.
    pub widths_from: String,
    /// Results table that `estimate-n` appends to, relative to `--out`.
    pub results_csv: String,
}

impl Default for ImagingSection {
    fn default() -> Self {
        ImagingSection {
            inversion: "peak".into(),
            clamp_negatives: true,
            heatmap: true,
            widths_from: "config".into(),
            results_csv: "estimates.csv".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShiftSection {
    /// `term F mF` per state; `*` for mF expands to every sublevel.
    pub states: Vec<String>,
    pub axis: String,
    pub start_m: f64,
    pub stop_m: f64,
    pub samples: usize,
}

impl Default for ShiftSection {
    fn default() -> Self {
        ShiftSection {
            states: vec!["5S1/2 F=2 mF=0".into(), "5P3/2 F=3 mF=*".into()],
            axis: "z".into(),
            start_m: -40e-6,
            stop_m: 40e-6,
            samples: 81,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialSection {
    pub state: String,
    pub x_start_m: f64,
    pub x_stop_m: f64,
    pub x_samples: usize,
    pub z_start_m: f64,
    pub z_stop_m: f64,
    pub z_samples: usize,
    pub heatmap: bool,
}

impl Default for PotentialSection {
    fn default() -> Self {
        PotentialSection {
            state: "5S1/2 F=2 mF=0".into(),
            x_start_m: -2e-3,
            x_stop_m: 2e-3,
            x_samples: 101,
            z_start_m: -40e-6,
            z_stop_m: 40e-6,
            z_samples: 81,
            heatmap: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SigmaEffSection {
    pub axis: String,
    pub start_m: f64,
    pub stop_m: f64,
    pub samples: usize,
}

impl Default for SigmaEffSection {
    fn default() -> Self {
        SigmaEffSection {
            axis: "z".into(),
            start_m: -40e-6,
            stop_m: 40e-6,
            samples: 81,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerScanSection {
    #[serde(rename = "powers_W")]
    pub powers_w: Vec<f64>,
}

impl Default for PowerScanSection {
    fn default() -> Self {
        PowerScanSection {
            powers_w: vec![0.0, 5.0, 10.0, 15.0, 19.7, 24.9, 27.7],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquipotentialSection {
    #[serde(rename = "T_MOT_K")]
    pub t_mot_k: f64,
    pub profile_samples: usize,
    /// Focal offsets to sweep; empty for no sweep.
    pub offsets_m: Vec<f64>,
    /// Half-width of the axial window around x = 0 the swept area is
    /// counted in; no window counts the whole surface.
    pub window_half_m: Option<f64>,
}

impl Default for EquipotentialSection {
    fn default() -> Self {
        EquipotentialSection {
            t_mot_k: 100e-6,
            profile_samples: 201,
            offsets_m: Vec::new(),
            window_half_m: None,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            catalog: CatalogSection::default(),
            beam: BeamSection::default(),
            probe: ProbeSection::default(),
            cloud: CloudSection::default(),
            frame: FrameSection::default(),
            quadrature: QuadratureSection::default(),
            imaging: ImagingSection::default(),
            shift: ShiftSection::default(),
            potential: PotentialSection::default(),
            sigma_eff: SigmaEffSection::default(),
            power_scan: PowerScanSection::default(),
            equipotential: EquipotentialSection::default(),
        }
    }
}

/// Reads `path` (if any), applies `section.key=value` overrides and
/// deserializes. Relative catalog paths resolve against the config file.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            text.parse::<toml::Table>()
                .with_context(|| format!("parsing config {}", p.display()))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let mut cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .context("invalid configuration")?;
    if let (Some(base), Some(cat)) = (path.and_then(Path::parent), cfg.catalog.path.as_mut()) {
        if cat.is_relative() {
            *cat = base.join(&*cat);
        }
    }
    Ok(cfg)
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{item}` is not key=value"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.len() != 2 || parts.iter().any(|p| p.is_empty()) {
        bail!("override key `{key}` must be section.key");
    }
    // Values are parsed as TOML; anything that is not valid TOML is a string.
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let section = table
        .entry(parts[0].to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let section = section
        .as_table_mut()
        .ok_or_else(|| anyhow!("`{}` is not a section", parts[0]))?;
    section.insert(parts[1].to_string(), value);
    Ok(())
}

/// Parses `term F=f [mF=m]`, e.g. `5S1/2 F=2 mF=0`. `J` comes from the term
/// label via the catalog. `mF=*` yields every sublevel.
pub fn parse_states(catalog: &Catalog, spec: &str) -> Result<Vec<HyperfineState>> {
    let mut words = spec.split_whitespace();
    let term = words
        .next()
        .ok_or_else(|| anyhow!("empty state `{spec}`"))?;
    let mut f = None;
    let mut mf = None;
    for w in words {
        if let Some(v) = w.strip_prefix("F=") {
            f = Some(half_int(v)?);
        } else if let Some(v) = w.strip_prefix("mF=") {
            mf = Some(v.to_string());
        } else {
            bail!("state `{spec}`: unexpected `{w}`");
        }
    }
    let f = f.ok_or_else(|| anyhow!("state `{spec}` needs F="))?;
    let j = term_j(catalog, term)?;
    let level = HyperfineState::new(term, j, f);
    match mf.as_deref() {
        None => Ok(vec![level]),
        Some("*") => f.projections().map(|m| Ok(level.with_mf(m)?)).collect(),
        Some(m) => Ok(vec![level.with_mf(half_int(m)?)?]),
    }
}

pub fn parse_state(catalog: &Catalog, spec: &str) -> Result<HyperfineState> {
    let mut states = parse_states(catalog, spec)?;
    if states.len() != 1 {
        bail!("`{spec}` must name a single state");
    }
    Ok(states.remove(0))
}

fn half_int(s: &str) -> Result<HalfInt> {
    Ok(odt_stark::absorption::parse_half_int(s)?)
}

fn term_j(catalog: &Catalog, term: &str) -> Result<HalfInt> {
    catalog
        .transitions()
        .iter()
        .flat_map(|t| [&t.lower, &t.upper])
        .find(|s| s.term == term)
        .map(|s| s.j)
        .ok_or_else(|| anyhow!("term `{term}` is not in the catalog"))
}

impl RunConfig {
    pub fn catalog(&self) -> Result<Catalog> {
        match &self.catalog.path {
            Some(p) => Catalog::load(p).with_context(|| format!("loading catalog {}", p.display())),
            None => Ok(Catalog::bundled_rb87()),
        }
    }

    pub fn beam(&self) -> Result<BeamGeometry> {
        let b = &self.beam;
        Ok(BeamGeometry::new(
            b.power_w,
            b.waist_m,
            b.wavelength_m,
            b.focus_x_m,
        )?)
    }

    pub fn cloud(&self) -> Result<CloudModel> {
        let c = &self.cloud;
        Ok(CloudModel::new(
            c.n0_m3,
            [c.sigma_x_m, c.sigma_y_m, c.sigma_z_m],
            [c.center_x_m, c.center_y_m, c.center_z_m],
        )?)
    }

    pub fn frame(&self) -> Result<Frame> {
        let f = &self.frame;
        Ok(Frame::centered(
            f.width_px,
            f.height_px,
            f.pixel_pitch_m,
            f.center_x_m,
            f.center_z_m,
        )?)
    }

    pub fn imaging_setup(&self, catalog: &Catalog) -> Result<ImagingSetup> {
        let p = &self.probe;
        let polarization = polarization_models().create(&p.polarization)?;
        let lower = parse_state(catalog, &p.lower)?;
        let upper = parse_state(catalog, &p.upper)?;
        let mut probe =
            ProbeConfig::new(catalog, lower.clone(), upper, p.detuning_hz, polarization)?;
        if let Some(hz) = p.linewidth_hz {
            probe = probe.with_gamma(2.0 * std::f64::consts::PI * hz)?;
        }
        let table = base_cross_sections(catalog, &probe)?;
        let beam = self.beam()?;
        let model = AbsorptionModel::new(catalog, &table, &probe, beam.wavelength_m(), lower.f)?;
        let q = &self.quadrature;
        Ok(ImagingSetup {
            model: Arc::new(model),
            beam,
            population: population_models().create(&p.population)?,
            quadrature: Quadrature::new(q.points, q.rel_tol),
        })
    }

    pub fn estimate_options(&self) -> Result<EstimateOptions> {
        Ok(EstimateOptions {
            inversion: inversion_methods().create(&self.imaging.inversion)?,
            clamp_negatives: self.imaging.clamp_negatives,
        })
    }
}

pub fn grid(start: f64, stop: f64, samples: usize) -> Result<Grid> {
    Ok(Grid::new(start, stop, samples)?)
}
