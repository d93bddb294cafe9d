//! Effective absorption cross-section of a weak probe in the presence of
//! trap-induced light shifts.
//!
//! For a ground sublevel `(F, mF)` the probe sees
//!
//! ```text
//! σ_eff = Σ_{F' mF'} σ_{F'mF'} / (1 + 4 ((ω_probe − (ω_line − S_F,mF + S_F',mF')) / Γ)²)
//! ```
//!
//! where `S` are the signed level shifts in rad/s. Resonant cross-sections
//! `σ_{F'mF'}` scale the two-level value `3λ²/2π` by the relative strength
//! of each sublevel transition and by the probe's polarization content.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::{Arc, OnceLock};

use crate::angular::{wigner3j, wigner6j, HalfInt};
use crate::atomic_data::{Catalog, HyperfineState};
use crate::beam::BeamGeometry;
use crate::error::{Error, Result};
use crate::registry::Registry;
use crate::stark::shift_per_intensity;

/// Spherical polarization content of the probe.
pub trait PolarizationModel: Send + Sync + Debug {
    fn name(&self) -> String;
    /// Weight of the absorption component with `ΔmF = q`, `q ∈ {-1, 0, 1}`.
    fn weight(&self, q: i32) -> f64;
}

#[derive(Debug)]
struct Pi;
#[derive(Debug)]
struct SigmaPlus;
#[derive(Debug)]
struct SigmaMinus;
#[derive(Debug)]
struct Isotropic;

impl PolarizationModel for Pi {
    fn name(&self) -> String {
        "pi".into()
    }
    fn weight(&self, q: i32) -> f64 {
        if q == 0 {
            1.0
        } else {
            0.0
        }
    }
}

impl PolarizationModel for SigmaPlus {
    fn name(&self) -> String {
        "sigma_plus".into()
    }
    fn weight(&self, q: i32) -> f64 {
        if q == 1 {
            1.0
        } else {
            0.0
        }
    }
}

impl PolarizationModel for SigmaMinus {
    fn name(&self) -> String {
        "sigma_minus".into()
    }
    fn weight(&self, q: i32) -> f64 {
        if q == -1 {
            1.0
        } else {
            0.0
        }
    }
}

impl PolarizationModel for Isotropic {
    fn name(&self) -> String {
        "isotropic".into()
    }
    fn weight(&self, q: i32) -> f64 {
        if q.abs() <= 1 {
            1.0 / 3.0
        } else {
            0.0
        }
    }
}

fn no_argument(kind: &str, arg: Option<&str>) -> Result<()> {
    match arg {
        None => Ok(()),
        Some(a) => Err(Error::InvalidParameter(format!(
            "{kind} takes no argument, got `{a}`"
        ))),
    }
}

/// Registered probe polarization models.
pub fn polarization_models() -> &'static Registry<dyn PolarizationModel> {
    static REGISTRY: OnceLock<Registry<dyn PolarizationModel>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<dyn PolarizationModel>::new("polarization model")
            .register("isotropic", "equal weight on all three components", |a| {
                no_argument("isotropic", a)?;
                Ok(Arc::new(Isotropic))
            })
            .register("pi", "linear along the quantization axis", |a| {
                no_argument("pi", a)?;
                Ok(Arc::new(Pi))
            })
            .register("sigma_plus", "circular, drives mF -> mF+1", |a| {
                no_argument("sigma_plus", a)?;
                Ok(Arc::new(SigmaPlus))
            })
            .register("sigma_minus", "circular, drives mF -> mF-1", |a| {
                no_argument("sigma_minus", a)?;
                Ok(Arc::new(SigmaMinus))
            })
    })
}

/// Distribution of atoms over the ground sublevels.
pub trait PopulationModel: Send + Sync + Debug {
    fn name(&self) -> String;
    /// `(mF, weight)` pairs for level `F`; weights sum to one.
    fn weights(&self, f: HalfInt) -> Result<Vec<(HalfInt, f64)>>;
}

#[derive(Debug)]
struct Uniform;

#[derive(Debug)]
struct SingleSublevel(HalfInt);

impl PopulationModel for Uniform {
    fn name(&self) -> String {
        "uniform".into()
    }
    fn weights(&self, f: HalfInt) -> Result<Vec<(HalfInt, f64)>> {
        let w = 1.0 / f64::from(f.multiplicity());
        Ok(f.projections().map(|m| (m, w)).collect())
    }
}

impl PopulationModel for SingleSublevel {
    fn name(&self) -> String {
        format!("mf:{}", self.0)
    }
    fn weights(&self, f: HalfInt) -> Result<Vec<(HalfInt, f64)>> {
        if !f.admits(self.0) {
            return Err(Error::Domain(format!(
                "mF={} is not a sublevel of F={f}",
                self.0
            )));
        }
        Ok(vec![(self.0, 1.0)])
    }
}

/// Parses `2`, `-1`, `3/2` or `-1/2` into a [`HalfInt`].
pub fn parse_half_int(s: &str) -> Result<HalfInt> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("bad angular momentum `{s}`"));
    match s.split_once('/') {
        Some((num, "2")) => num
            .trim()
            .parse::<i32>()
            .map(HalfInt::from_twice)
            .map_err(|_| bad()),
        Some(_) => Err(bad()),
        None => s.parse::<i32>().map(HalfInt::int).map_err(|_| bad()),
    }
}

/// Registered ground-state population models.
pub fn population_models() -> &'static Registry<dyn PopulationModel> {
    static REGISTRY: OnceLock<Registry<dyn PopulationModel>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<dyn PopulationModel>::new("population model")
            .register("uniform", "equal population in every mF", |a| {
                no_argument("uniform", a)?;
                Ok(Arc::new(Uniform))
            })
            .register("mf", "all atoms in one sublevel, e.g. `mf:2`", |a| {
                let arg = a.ok_or_else(|| {
                    Error::InvalidParameter("`mf` needs a sublevel, e.g. mf:2".into())
                })?;
                Ok(Arc::new(SingleSublevel(parse_half_int(arg)?)))
            })
    })
}

/// Imaging probe: frequency, optional linewidth override and polarization.
#[derive(Clone, Debug)]
pub struct ProbeConfig {
    /// Lower level of the reference line the detuning is measured from.
    pub reference_lower: HyperfineState,
    pub reference_upper: HyperfineState,
    /// Probe angular frequency in rad/s.
    pub omega_probe: f64,
    /// Replaces every catalog linewidth when set, in rad/s.
    pub gamma_override: Option<f64>,
    pub polarization: Arc<dyn PolarizationModel>,
}

impl ProbeConfig {
    /// Probe detuned by `detuning_hz` from the unperturbed reference line.
    pub fn new(
        catalog: &Catalog,
        reference_lower: HyperfineState,
        reference_upper: HyperfineState,
        detuning_hz: f64,
        polarization: Arc<dyn PolarizationModel>,
    ) -> Result<Self> {
        let line = catalog
            .find(&reference_lower, &reference_upper)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "no catalog line {reference_lower} -> {reference_upper} for the probe"
                ))
            })?;
        if !detuning_hz.is_finite() {
            return Err(Error::InvalidParameter(
                "probe detuning must be finite".into(),
            ));
        }
        Ok(ProbeConfig {
            omega_probe: line.angular_frequency() + 2.0 * PI * detuning_hz,
            reference_lower: reference_lower.level(),
            reference_upper: reference_upper.level(),
            gamma_override: None,
            polarization,
        })
    }

    /// Probe resonant with the unperturbed `5S1/2 F=2 -> 5P3/2 F'=3` line.
    pub fn rb87_cycling(
        catalog: &Catalog,
        polarization: Arc<dyn PolarizationModel>,
    ) -> Result<Self> {
        ProbeConfig::new(
            catalog,
            HyperfineState::new("5S1/2", HalfInt::HALF, HalfInt::int(2)),
            HyperfineState::new("5P3/2", HalfInt::from_twice(3), HalfInt::int(3)),
            0.0,
            polarization,
        )
    }

    pub fn with_gamma(mut self, gamma_rad_s: f64) -> Result<Self> {
        if !(gamma_rad_s.is_finite() && gamma_rad_s > 0.0) {
            return Err(Error::InvalidParameter(
                "probe linewidth must be > 0".into(),
            ));
        }
        self.gamma_override = Some(gamma_rad_s);
        Ok(self)
    }

    /// Detuning from the reference line in Hz.
    pub fn detuning_hz(&self, catalog: &Catalog) -> Option<f64> {
        catalog
            .find(&self.reference_lower, &self.reference_upper)
            .map(|t| (self.omega_probe - t.angular_frequency()) / (2.0 * PI))
    }
}

/// One sublevel-resolved entry of a [`CrossSectionTable`].
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSectionEntry {
    /// Index of the line in the catalog.
    pub line: usize,
    pub lower_f: HalfInt,
    pub lower_mf: HalfInt,
    pub upper_f: HalfInt,
    pub upper_mf: HalfInt,
    /// Resonant cross-section in m².
    pub sigma_m2: f64,
}

/// Unperturbed resonant cross-sections of every allowed sublevel transition
/// between the probe's lower and upper fine-structure terms.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSectionTable {
    lower_term: String,
    upper_term: String,
    entries: Vec<CrossSectionEntry>,
}

impl CrossSectionTable {
    pub fn entries(&self) -> &[CrossSectionEntry] {
        &self.entries
    }

    pub fn lower_term(&self) -> &str {
        &self.lower_term
    }

    /// Cross-section for `(F, mF) -> (F', mF')`; zero when not allowed.
    pub fn get(&self, f: HalfInt, mf: HalfInt, fp: HalfInt, mfp: HalfInt) -> f64 {
        self.entries
            .iter()
            .find(|e| e.lower_f == f && e.lower_mf == mf && e.upper_f == fp && e.upper_mf == mfp)
            .map_or(0.0, |e| e.sigma_m2)
    }

    fn from_level(&self, f: HalfInt, mf: HalfInt) -> impl Iterator<Item = &CrossSectionEntry> {
        self.entries
            .iter()
            .filter(move |e| e.lower_f == f && e.lower_mf == mf)
    }
}

/// `|<F mF| er_q |F' mF'>|² / |<J||er||J'>|²` with `q = mF' − mF`.
pub fn relative_strength(
    j: HalfInt,
    f: HalfInt,
    mf: HalfInt,
    jp: HalfInt,
    fp: HalfInt,
    mfp: HalfInt,
    nuclear_spin: HalfInt,
) -> Result<f64> {
    let q = mfp - mf;
    if q.twice().abs() > 2 {
        return Ok(0.0);
    }
    let three_j = wigner3j(f, HalfInt::ONE, fp, mf, q, -mfp)?;
    let six_j = wigner6j(j, jp, HalfInt::ONE, fp, f, nuclear_spin)?;
    Ok(f64::from(f.multiplicity())
        * f64::from(fp.multiplicity())
        * f64::from(j.multiplicity())
        * three_j
        * three_j
        * six_j
        * six_j)
}

/// Builds the resonant cross-section table for the probe's manifold.
///
/// Each entry is `3λ²/2π · w_q · S / S_2level`, where `S` is the relative
/// strength, `w_q` the probe polarization weight and `S_2level =
/// (2J+1)/(2J'+1)` the strength of a closed two-level transition, so the
/// stretched `σ±` entry equals `3λ²/2π`.
pub fn base_cross_sections(catalog: &Catalog, probe: &ProbeConfig) -> Result<CrossSectionTable> {
    let lower_term = probe.reference_lower.term.clone();
    let upper_term = probe.reference_upper.term.clone();
    let mut entries = Vec::new();
    for (idx, t) in catalog.transitions().iter().enumerate() {
        if t.lower.term != lower_term || t.upper.term != upper_term {
            continue;
        }
        if t.linewidth_mhz.is_none() && probe.gamma_override.is_none() {
            return Err(Error::InvalidTransition {
                transition: t.to_string(),
                message: "missing linewidth for a probe line".into(),
            });
        }
        let lambda = t.wavelength_m();
        let sigma_two_level = 3.0 * lambda * lambda / (2.0 * PI);
        let s_two_level = f64::from(t.lower.j.multiplicity()) / f64::from(t.upper.j.multiplicity());
        for mf in t.lower.f.projections() {
            for mfp in t.upper.f.projections() {
                let q = (mfp - mf).twice();
                if q.abs() > 2 {
                    continue;
                }
                let w = probe.polarization.weight(q / 2);
                if w == 0.0 {
                    continue;
                }
                let s = relative_strength(
                    t.lower.j,
                    t.lower.f,
                    mf,
                    t.upper.j,
                    t.upper.f,
                    mfp,
                    catalog.nuclear_spin(),
                )?;
                if s == 0.0 {
                    continue;
                }
                entries.push(CrossSectionEntry {
                    line: idx,
                    lower_f: t.lower.f,
                    lower_mf: mf,
                    upper_f: t.upper.f,
                    upper_mf: mfp,
                    sigma_m2: sigma_two_level * w * s / s_two_level,
                });
            }
        }
    }
    Ok(CrossSectionTable {
        lower_term,
        upper_term,
        entries,
    })
}

#[derive(Clone, Copy, Debug)]
struct Channel {
    sigma: f64,
    /// Detuning `ω_probe − ω_line` in rad/s.
    detuning: f64,
    gamma: f64,
    /// Net line shift `S_upper − S_lower` per unit intensity, rad/s per W/m².
    shift_per_intensity: f64,
}

impl Channel {
    fn sigma_at(&self, intensity: f64) -> f64 {
        let delta = (self.detuning - self.shift_per_intensity * intensity) / self.gamma;
        self.sigma / (1.0 + 4.0 * delta * delta)
    }
}

/// Precomputed σ_eff for every sublevel of one ground level. Because the
/// light shifts are linear in intensity, σ_eff depends on position only
/// through the local trap intensity.
#[derive(Clone, Debug)]
pub struct AbsorptionModel {
    ground: HyperfineState,
    sublevels: Vec<(HalfInt, Vec<Channel>)>,
}

impl AbsorptionModel {
    /// Model for ground level `(probe lower term, F)` in a trap of the given
    /// wavelength.
    pub fn new(
        catalog: &Catalog,
        table: &CrossSectionTable,
        probe: &ProbeConfig,
        trap_wavelength_m: f64,
        f: HalfInt,
    ) -> Result<Self> {
        let j = probe.reference_lower.j;
        let ground = HyperfineState::new(table.lower_term(), j, f);
        ground.check_coupling(catalog.nuclear_spin())?;
        let mut shift_cache: HashMap<(String, HalfInt, HalfInt), f64> = HashMap::new();
        let mut shift = |state: &HyperfineState, mf: HalfInt| -> Result<f64> {
            let key = (state.term.clone(), state.f, mf);
            if let Some(v) = shift_cache.get(&key) {
                return Ok(*v);
            }
            let hz = shift_per_intensity(catalog, trap_wavelength_m, &state.with_mf(mf)?)?;
            let rad = 2.0 * PI * hz;
            shift_cache.insert(key, rad);
            Ok(rad)
        };
        let mut sublevels = Vec::new();
        for mf in f.projections() {
            let s_lower = shift(&ground, mf)?;
            let mut channels = Vec::new();
            for e in table.from_level(f, mf) {
                let line = &catalog.transitions()[e.line];
                let gamma = match probe.gamma_override.or(line.linewidth_rad_s()) {
                    Some(g) => g,
                    None => {
                        return Err(Error::InvalidTransition {
                            transition: line.to_string(),
                            message: "missing linewidth for a probe line".into(),
                        })
                    }
                };
                let s_upper = shift(&line.upper, e.upper_mf)?;
                channels.push(Channel {
                    sigma: e.sigma_m2,
                    detuning: probe.omega_probe - line.angular_frequency(),
                    gamma,
                    shift_per_intensity: s_upper - s_lower,
                });
            }
            sublevels.push((mf, channels));
        }
        Ok(AbsorptionModel { ground, sublevels })
    }

    pub fn ground(&self) -> &HyperfineState {
        &self.ground
    }

    /// σ_eff of sublevel `mf` at local trap intensity `intensity` (W/m²).
    pub fn sigma_sublevel(&self, mf: HalfInt, intensity: f64) -> Result<f64> {
        let (_, channels) = self
            .sublevels
            .iter()
            .find(|(m, _)| *m == mf)
            .ok_or_else(|| {
                Error::Domain(format!("mF={mf} is not a sublevel of {}", self.ground))
            })?;
        Ok(channels.iter().map(|c| c.sigma_at(intensity)).sum())
    }

    /// Population-weighted σ_eff at local trap intensity `intensity`.
    pub fn sigma_weighted(&self, weights: &[(HalfInt, f64)], intensity: f64) -> Result<f64> {
        weights
            .iter()
            .map(|&(mf, w)| self.sigma_sublevel(mf, intensity).map(|s| w * s))
            .sum()
    }

    /// Upper bound `Σ σ_{F'mF'}` for sublevel `mf` (every Lorentzian at 1).
    pub fn sigma_ceiling(&self, mf: HalfInt) -> f64 {
        self.sublevels
            .iter()
            .filter(|(m, _)| *m == mf)
            .flat_map(|(_, c)| c.iter().map(|c| c.sigma))
            .sum()
    }
}

/// σ_eff for ground sublevel `(F, mF)` at `(x, y, z)`.
#[allow(clippy::too_many_arguments)]
pub fn sigma_eff(
    catalog: &Catalog,
    beam: &BeamGeometry,
    table: &CrossSectionTable,
    probe: &ProbeConfig,
    f: HalfInt,
    mf: HalfInt,
    x: f64,
    y: f64,
    z: f64,
) -> Result<f64> {
    let model = AbsorptionModel::new(catalog, table, probe, beam.wavelength_m(), f)?;
    model.sigma_sublevel(mf, beam.intensity(x, y, z))
}

/// σ_eff averaged uniformly over the sublevels of `F`.
#[allow(clippy::too_many_arguments)]
pub fn sigma_eff_averaged(
    catalog: &Catalog,
    beam: &BeamGeometry,
    table: &CrossSectionTable,
    probe: &ProbeConfig,
    f: HalfInt,
    x: f64,
    y: f64,
    z: f64,
) -> Result<f64> {
    let model = AbsorptionModel::new(catalog, table, probe, beam.wavelength_m(), f)?;
    let weights = Uniform.weights(f)?;
    model.sigma_weighted(&weights, beam.intensity(x, y, z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pol(name: &str) -> Arc<dyn PolarizationModel> {
        polarization_models().create(name).unwrap()
    }

    #[test]
    fn registries_know_their_members() {
        assert_eq!(
            polarization_models().names(),
            vec!["isotropic", "pi", "sigma_plus", "sigma_minus"]
        );
        assert_eq!(population_models().names(), vec!["uniform", "mf"]);
        assert!(polarization_models().create("elliptic").is_err());
        let single = population_models().create("mf:-1").unwrap();
        assert_eq!(
            single.weights(HalfInt::int(2)).unwrap(),
            vec![(HalfInt::int(-1), 1.0)]
        );
        assert!(single.weights(HalfInt::ZERO).is_err());
        assert!(population_models().create("mf").is_err());
    }

    #[test]
    fn half_int_parsing() {
        assert_eq!(parse_half_int("-3/2").unwrap(), HalfInt::from_twice(-3));
        assert_eq!(parse_half_int("2").unwrap(), HalfInt::int(2));
        assert!(parse_half_int("1/3").is_err());
    }

    #[test]
    fn stretched_sigma_plus_entry_is_two_level_value() {
        let cat = Catalog::bundled_rb87();
        let probe = ProbeConfig::rb87_cycling(&cat, pol("sigma_plus")).unwrap();
        let table = base_cross_sections(&cat, &probe).unwrap();
        let s = table.get(
            HalfInt::int(2),
            HalfInt::int(2),
            HalfInt::int(3),
            HalfInt::int(3),
        );
        let lambda = 780.2460209e-9;
        let expected = 3.0 * lambda * lambda / (2.0 * PI);
        assert!((s / expected - 1.0).abs() < 1e-12, "{s} vs {expected}");
        assert!((s - 2.907e-13).abs() < 1e-16);
        // sigma+ cannot drive mF -> mF - 1 or mF.
        assert_eq!(
            table.get(
                HalfInt::int(2),
                HalfInt::int(1),
                HalfInt::int(3),
                HalfInt::int(1)
            ),
            0.0
        );
    }

    #[test]
    fn forbidden_entries_are_zero() {
        let cat = Catalog::bundled_rb87();
        let probe = ProbeConfig::rb87_cycling(&cat, pol("isotropic")).unwrap();
        let table = base_cross_sections(&cat, &probe).unwrap();
        assert_eq!(
            table.get(
                HalfInt::int(2),
                HalfInt::int(-2),
                HalfInt::int(3),
                HalfInt::int(0)
            ),
            0.0
        );
        assert!(table.entries().iter().all(|e| e.sigma_m2 > 0.0));
        assert!(table
            .entries()
            .iter()
            .all(|e| (e.upper_mf - e.lower_mf).twice().abs() <= 2));
    }

    #[test]
    fn missing_linewidth_is_an_error() {
        let text = "atom Rb87 nuclear_2I 3\n5S1/2 1 4 5P3/2 3 6 780.2460209 4.2275\n";
        let cat = Catalog::parse(text).unwrap();
        let probe = ProbeConfig::rb87_cycling(&cat, pol("pi")).unwrap();
        assert!(base_cross_sections(&cat, &probe).is_err());
        let probe = probe.with_gamma(2.0 * PI * 6e6).unwrap();
        assert!(base_cross_sections(&cat, &probe).is_ok());
    }

    #[test]
    fn probe_detuning_roundtrip() {
        let cat = Catalog::bundled_rb87();
        let lower = HyperfineState::new("5S1/2", HalfInt::HALF, HalfInt::int(2));
        let upper = HyperfineState::new("5P3/2", HalfInt::from_twice(3), HalfInt::int(3));
        let probe = ProbeConfig::new(&cat, lower, upper, 12.5e6, pol("pi")).unwrap();
        assert!((probe.detuning_hz(&cat).unwrap() - 12.5e6).abs() < 1.0);
    }
}
