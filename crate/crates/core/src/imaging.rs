//! Optical-density image synthesis and atom-number estimation.
//!
//! The probe propagates along `y`; images live in the `(x, z)` plane with
//! rows indexed by `z` and columns by `x`. A synthetic pixel is the line
//! integral `OD(x, z) = ∫ σ_eff(x, y, z) n(x, y, z) dy` of a Gaussian cloud.

use std::f64::consts::PI;
use std::fmt::{Debug, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::absorption::{AbsorptionModel, PopulationModel};
use crate::angular::HalfInt;
use crate::beam::BeamGeometry;
use crate::error::{Error, Result};
use crate::numerics::{simpson_refined, Num, Quadrature};
use crate::registry::Registry;

/// Default line-of-sight quadrature: 201-point Simpson, refined to 0.1 %.
pub const DEFAULT_QUADRATURE: Quadrature = Quadrature::new(201, 1e-3);

/// Line-of-sight integration half-span in units of `σ_y`.
pub const SPAN_SIGMAS: f64 = 6.0;

/// Gaussian density `n0 exp(-Σ (r_i - c_i)² / 2σ_i²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloudModel {
    pub n0: f64,
    pub sigma: [f64; 3],
    pub center: [f64; 3],
}

impl CloudModel {
    pub fn new(n0: f64, sigma: [f64; 3], center: [f64; 3]) -> Result<Self> {
        if !(n0.is_finite() && n0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "peak density must be >= 0, got {n0}"
            )));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "cloud widths must be > 0, got {sigma:?}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "cloud center must be finite".into(),
            ));
        }
        Ok(CloudModel { n0, sigma, center })
    }

    pub fn with_n0(&self, n0: f64) -> Result<Self> {
        CloudModel::new(n0, self.sigma, self.center)
    }

    pub fn density(&self, x: f64, y: f64, z: f64) -> f64 {
        let d = [x - self.center[0], y - self.center[1], z - self.center[2]];
        let e: f64 = (0..3)
            .map(|i| d[i] * d[i] / (2.0 * self.sigma[i] * self.sigma[i]))
            .sum();
        self.n0 * (-e).exp()
    }

    /// `N = n0 (2π)^{3/2} σx σy σz`.
    pub fn atom_number(&self) -> f64 {
        self.n0 * (2.0 * PI).powf(1.5) * self.sigma[0] * self.sigma[1] * self.sigma[2]
    }
}

/// Pixel layout of an image in the `(x, z)` plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    /// Number of columns (`x`).
    pub width: usize,
    /// Number of rows (`z`).
    pub height: usize,
    pub pixel_pitch_m: f64,
    /// `(x, z)` of pixel `(0, 0)`.
    pub origin: (f64, f64),
}

impl Frame {
    pub fn new(
        width: usize,
        height: usize,
        pixel_pitch_m: f64,
        origin: (f64, f64),
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("image must be non-empty".into()));
        }
        if !(pixel_pitch_m.is_finite() && pixel_pitch_m > 0.0) {
            return Err(Error::InvalidParameter("pixel pitch must be > 0".into()));
        }
        if !(origin.0.is_finite() && origin.1.is_finite()) {
            return Err(Error::InvalidParameter(
                "image origin must be finite".into(),
            ));
        }
        Ok(Frame {
            width,
            height,
            pixel_pitch_m,
            origin,
        })
    }

    /// Frame of `width × height` pixels centered on `(cx, cz)`.
    pub fn centered(
        width: usize,
        height: usize,
        pixel_pitch_m: f64,
        cx: f64,
        cz: f64,
    ) -> Result<Self> {
        let ox = cx - 0.5 * (width as f64 - 1.0) * pixel_pitch_m;
        let oz = cz - 0.5 * (height as f64 - 1.0) * pixel_pitch_m;
        Frame::new(width, height, pixel_pitch_m, (ox, oz))
    }

    pub fn x(&self, col: usize) -> f64 {
        self.origin.0 + col as f64 * self.pixel_pitch_m
    }

    pub fn z(&self, row: usize) -> f64 {
        self.origin.1 + row as f64 * self.pixel_pitch_m
    }
}

/// A 2-D optical-density image, row-major with rows indexed by `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct OdImage {
    frame: Frame,
    pixels: Vec<f64>,
}

impl OdImage {
    pub fn new(frame: Frame, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != frame.width * frame.height {
            return Err(Error::ImageFormat(format!(
                "{} pixels for a {}x{} frame",
                pixels.len(),
                frame.width,
                frame.height
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::ImageFormat("non-finite pixel".into()));
        }
        Ok(OdImage { frame, pixels })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.frame.width + col]
    }

    pub fn max(&self) -> f64 {
        self.pixels
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV text: one line per row (`z` index), comma separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.pixels.chunks(self.frame.width) {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{}", Num(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Sidecar metadata, `key=value` per line.
    pub fn to_meta(&self) -> String {
        format!(
            "pixel_pitch_m={}\norigin_x_m={}\norigin_z_m={}\n",
            Num(self.frame.pixel_pitch_m),
            Num(self.frame.origin.0),
            Num(self.frame.origin.1)
        )
    }

    /// 8-bit binary PGM, linear from 0 (black) to the image maximum (white).
    pub fn to_pgm(&self) -> Vec<u8> {
        to_pgm(&self.pixels, self.frame.width, self.frame.height)
    }

    pub fn from_csv_and_meta(csv: &str, meta: &str) -> Result<Self> {
        let mut pixels = Vec::new();
        let mut width = None;
        for (idx, line) in csv.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        Error::ImageFormat(format!("row {}: bad value `{}`", idx + 1, s.trim()))
                    })
                })
                .collect::<Result<_>>()?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::ImageFormat(format!(
                        "row {} has {} values, expected {w}",
                        idx + 1,
                        row.len()
                    )))
                }
                Some(_) => {}
            }
            pixels.extend(row);
        }
        let width = width.ok_or_else(|| Error::ImageFormat("empty image".into()))?;
        let height = pixels.len() / width;

        let mut pitch = None;
        let mut ox = None;
        let mut oz = None;
        for line in meta.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::ImageFormat(format!("bad meta line `{line}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::ImageFormat(format!("bad meta value `{line}`")))?;
            match key.trim() {
                "pixel_pitch_m" => pitch = Some(value),
                "origin_x_m" => ox = Some(value),
                "origin_z_m" => oz = Some(value),
                _ => {}
            }
        }
        let missing = |k: &str| Error::ImageFormat(format!("meta file lacks `{k}`"));
        let frame = Frame::new(
            width,
            height,
            pitch.ok_or_else(|| missing("pixel_pitch_m"))?,
            (
                ox.ok_or_else(|| missing("origin_x_m"))?,
                oz.ok_or_else(|| missing("origin_z_m"))?,
            ),
        )?;
        OdImage::new(frame, pixels)
    }

    /// Path of the metadata sidecar for an image file.
    pub fn meta_path(image_path: &Path) -> PathBuf {
        image_path.with_extension("meta")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let csv = fs::read_to_string(path)?;
        let meta = fs::read_to_string(OdImage::meta_path(path))?;
        OdImage::from_csv_and_meta(&csv, &meta)
    }

    /// Writes `path` and its `.meta` sidecar.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv())?;
        fs::write(OdImage::meta_path(path), self.to_meta())?;
        Ok(())
    }
}

/// Binary PGM (P5) of a row-major grid, linear from 0 to the maximum value.
/// Negative values map to 0.
pub fn to_pgm(values: &[f64], width: usize, height: usize) -> Vec<u8> {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|&v| {
        if max > 0.0 {
            (v.max(0.0) / max * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

/// Everything needed to turn a cloud into an image.
#[derive(Clone, Debug)]
pub struct ImagingSetup {
    pub model: Arc<AbsorptionModel>,
    pub beam: BeamGeometry,
    pub population: Arc<dyn PopulationModel>,
    pub quadrature: Quadrature,
}

impl ImagingSetup {
    fn weights(&self) -> Result<Vec<(HalfInt, f64)>> {
        self.population.weights(self.model.ground().f)
    }

    /// Population-averaged σ_eff at a point.
    pub fn sigma_eff(&self, x: f64, y: f64, z: f64) -> Result<f64> {
        self.model
            .sigma_weighted(&self.weights()?, self.beam.intensity(x, y, z))
    }

    /// σ_eff without any trap light (the naive σ0).
    pub fn sigma_unperturbed(&self) -> Result<f64> {
        self.model.sigma_weighted(&self.weights()?, 0.0)
    }

    pub fn with_beam(&self, beam: BeamGeometry) -> Self {
        ImagingSetup {
            beam,
            ..self.clone()
        }
    }
}

/// Synthesizes the OD image of `cloud` on `frame`. Rows are evaluated in
/// parallel; the result does not depend on the thread count.
pub fn synth_od(setup: &ImagingSetup, cloud: &CloudModel, frame: &Frame) -> Result<OdImage> {
    let weights = setup.weights()?;
    // Validate the sublevels once so the pixel loop cannot fail.
    setup.model.sigma_weighted(&weights, 0.0)?;
    let sigma_y = cloud.sigma[1];
    let (y_lo, y_hi) = (
        cloud.center[1] - SPAN_SIGMAS * sigma_y,
        cloud.center[1] + SPAN_SIGMAS * sigma_y,
    );
    let pixels: Vec<f64> = (0..frame.height)
        .into_par_iter()
        .flat_map_iter(|row| {
            let z = frame.z(row);
            let weights = &weights;
            (0..frame.width).map(move |col| {
                let x = frame.x(col);
                if cloud.n0 == 0.0 {
                    return 0.0;
                }
                let integrand = |y: f64| {
                    let sigma = setup
                        .model
                        .sigma_weighted(weights, setup.beam.intensity(x, y, z))
                        .unwrap_or(0.0);
                    sigma * cloud.density(x, y, z)
                };
                simpson_refined(integrand, y_lo, y_hi, setup.quadrature)
            })
        })
        .collect();
    OdImage::new(*frame, pixels)
}

/// `N = Σ OD · p² / σ0`; negative pixels are clamped to zero when `clamp`.
pub fn estimate_naive(image: &OdImage, sigma0: f64, clamp: bool) -> Result<f64> {
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(Error::InvalidParameter("sigma0 must be > 0".into()));
    }
    let sum: f64 = image
        .pixels()
        .iter()
        .map(|&v| if clamp { v.max(0.0) } else { v })
        .sum();
    let p = image.frame().pixel_pitch_m;
    Ok(sum * p * p / sigma0)
}

/// Maximum after 3×3 median smoothing, with its `(row, col)`. Windows are
/// clipped at the border; even-sized windows use the mean of the two middle
/// values. Ties go to the lowest row-major index.
pub fn peak_od(image: &OdImage) -> (f64, (usize, usize)) {
    let f = image.frame();
    let (h, w) = (f.height, f.width);
    let mut best = (f64::NEG_INFINITY, (0, 0));
    let mut window = Vec::with_capacity(9);
    for row in 0..h {
        for col in 0..w {
            window.clear();
            for r in row.saturating_sub(1)..=(row + 1).min(h - 1) {
                for c in col.saturating_sub(1)..=(col + 1).min(w - 1) {
                    window.push(image.get(r, c));
                }
            }
            window.sort_by(f64::total_cmp);
            let n = window.len();
            let median = if n % 2 == 1 {
                window[n / 2]
            } else {
                0.5 * (window[n / 2 - 1] + window[n / 2])
            };
            if median > best.0 {
                best = (median, (row, col));
            }
        }
    }
    best
}

/// How `n0` is inferred from an image and a unit-density synthetic image.
pub trait InversionMethod: Send + Sync + Debug {
    fn name(&self) -> String;
    /// Peak density such that `n0 × reference` matches `image`.
    fn fit_n0(&self, image: &OdImage, reference: &OdImage) -> Result<f64>;
}

#[derive(Debug)]
struct PeakMatch;

#[derive(Debug)]
struct LeastSquares;

impl InversionMethod for PeakMatch {
    fn name(&self) -> String {
        "peak".into()
    }
    fn fit_n0(&self, image: &OdImage, reference: &OdImage) -> Result<f64> {
        let (observed, _) = peak_od(image);
        if !(observed > 0.0) {
            return Err(Error::InvalidParameter("image peak OD must be > 0".into()));
        }
        let (model, _) = peak_od(reference);
        if !(model > 0.0) {
            return Err(Error::InvalidParameter(
                "model image has no absorption".into(),
            ));
        }
        Ok(observed / model)
    }
}

impl InversionMethod for LeastSquares {
    fn name(&self) -> String {
        "lsq".into()
    }
    fn fit_n0(&self, image: &OdImage, reference: &OdImage) -> Result<f64> {
        if !(peak_od(image).0 > 0.0) {
            return Err(Error::InvalidParameter("image peak OD must be > 0".into()));
        }
        let (num, den) = image
            .pixels()
            .iter()
            .zip(reference.pixels())
            .fold((0.0, 0.0), |(n, d), (&a, &b)| (n + a * b, d + b * b));
        if !(den > 0.0) {
            return Err(Error::InvalidParameter(
                "model image has no absorption".into(),
            ));
        }
        Ok((num / den).max(0.0))
    }
}

/// Registered `n0` inversion methods.
pub fn inversion_methods() -> &'static Registry<dyn InversionMethod> {
    static REGISTRY: OnceLock<Registry<dyn InversionMethod>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<dyn InversionMethod>::new("inversion method")
            .register("peak", "match the smoothed peak OD", |_| {
                Ok(Arc::new(PeakMatch))
            })
            .register("lsq", "least-squares fit over the whole image", |_| {
                Ok(Arc::new(LeastSquares))
            })
    })
}

/// Options for [`estimate_corrected`].
#[derive(Clone, Debug)]
pub struct EstimateOptions {
    pub inversion: Arc<dyn InversionMethod>,
    pub clamp_negatives: bool,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            inversion: Arc::new(PeakMatch),
            clamp_negatives: true,
        }
    }
}

/// Result of [`estimate_corrected`].
#[derive(Clone, Debug, PartialEq)]
pub struct NumberEstimate {
    pub n_corrected: f64,
    pub n_naive: f64,
    pub n0_fitted: f64,
    /// Smoothed peak OD of the input image.
    pub peak_od: f64,
    /// Naive cross-section used for `n_naive`, m².
    pub sigma0_m2: f64,
    pub method: EstimateMethod,
}

impl NumberEstimate {
    pub fn correction_factor(&self) -> f64 {
        self.n_corrected / self.n_naive
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateMethod {
    pub inversion: String,
    pub population: String,
    pub quadrature_points: usize,
    pub quadrature_rel_tol: f64,
    pub clamp_negatives: bool,
}

/// Stark-corrected and naive atom numbers for `image`, given the cloud
/// widths and center (which the image alone cannot determine along `y`).
pub fn estimate_corrected(
    image: &OdImage,
    setup: &ImagingSetup,
    widths: [f64; 3],
    center: [f64; 3],
    options: &EstimateOptions,
) -> Result<NumberEstimate> {
    if widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "cloud widths must be > 0, got {widths:?}"
        )));
    }
    let (peak, _) = peak_od(image);
    if !(peak > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "image peak OD must be > 0, got {peak}"
        )));
    }
    let unit_cloud = CloudModel::new(1.0, widths, center)?;
    let reference = synth_od(setup, &unit_cloud, image.frame())?;
    let n0 = options.inversion.fit_n0(image, &reference)?;
    let sigma0 = setup.sigma_unperturbed()?;
    let n_naive = estimate_naive(image, sigma0, options.clamp_negatives)?;
    Ok(NumberEstimate {
        n_corrected: unit_cloud.with_n0(n0)?.atom_number(),
        n_naive,
        n0_fitted: n0,
        peak_od: peak,
        sigma0_m2: sigma0,
        method: EstimateMethod {
            inversion: options.inversion.name(),
            population: setup.population.name(),
            quadrature_points: setup.quadrature.points,
            quadrature_rel_tol: setup.quadrature.rel_tol,
            clamp_negatives: options.clamp_negatives,
        },
    })
}

/// One row of a power scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerScanRow {
    pub power_w: f64,
    pub peak_od: f64,
    pub n_naive: f64,
    pub n_corrected: f64,
}

/// Synthesizes `cloud` at each power and runs both estimators on the result.
pub fn power_scan(
    setup: &ImagingSetup,
    cloud: &CloudModel,
    frame: &Frame,
    powers_w: &[f64],
    options: &EstimateOptions,
) -> Result<Vec<PowerScanRow>> {
    powers_w
        .iter()
        .map(|&p| {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "power must be >= 0, got {p}"
                )));
            }
            let at_power = setup.with_beam(setup.beam.with_power(p)?);
            let image = synth_od(&at_power, cloud, frame)?;
            let est = estimate_corrected(&image, &at_power, cloud.sigma, cloud.center, options)?;
            Ok(PowerScanRow {
                power_w: p,
                peak_od: est.peak_od,
                n_naive: est.n_naive,
                n_corrected: est.n_corrected,
            })
        })
        .collect()
}

/// CSV with header for a power scan.
pub fn power_scan_csv(rows: &[PowerScanRow]) -> String {
    let mut out = String::from("power_W,peak_od,N_naive,N_corrected\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            Num(r.power_w),
            Num(r.peak_od),
            Num(r.n_naive),
            Num(r.n_corrected)
        );
    }
    out
}

/// Widths and centers from the second moments of the clamped image
/// marginals: `(sigma_x, sigma_z, center_x, center_z)`.
pub fn marginal_widths(image: &OdImage) -> Result<(f64, f64, f64, f64)> {
    let f = image.frame();
    let mut col_sum = vec![0.0; f.width];
    let mut row_sum = vec![0.0; f.height];
    for r in 0..f.height {
        for c in 0..f.width {
            let v = image.get(r, c).max(0.0);
            col_sum[c] += v;
            row_sum[r] += v;
        }
    }
    let moments = |weights: &[f64], coord: &dyn Fn(usize) -> f64| -> Option<(f64, f64)> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let mean = weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * coord(i))
            .sum::<f64>()
            / total;
        let var = weights
            .iter()
            .enumerate()
            .map(|(i, w)| w * (coord(i) - mean).powi(2))
            .sum::<f64>()
            / total;
        Some((var.sqrt(), mean))
    };
    let (sx, cx) = moments(&col_sum, &|c| f.x(c))
        .ok_or_else(|| Error::InvalidParameter("empty image".into()))?;
    let (sz, cz) = moments(&row_sum, &|r| f.z(r))
        .ok_or_else(|| Error::InvalidParameter("empty image".into()))?;
    Ok((sx, sz, cx, cz))
}
