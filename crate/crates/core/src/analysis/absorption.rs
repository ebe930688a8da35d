use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{fit_gaussian_1d, GaussianFit, Weights};
use crate::{Error, Result};

/// Imaging wavelength, Rb D2 line.
pub const IMAGING_WAVELENGTH_NM: f64 = 780.0;

/// Resonant cross section 3λ²/2π in cm².
pub fn resonant_cross_section_cm2(wavelength_nm: f64) -> f64 {
    let l = wavelength_nm * 1e-7;
    3.0 * l * l / (2.0 * PI)
}

/// Row-major camera frame; `data[row * width + col]`, rows along y.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height || width == 0 || height == 0 {
            return Err(Error::Data(format!(
                "image of {width}x{height} pixels cannot hold {} values",
                data.len()
            )));
        }
        Ok(Image { width, height, data })
    }

    pub fn filled(width: usize, height: usize, v: f64) -> Self {
        Image {
            width,
            height,
            data: vec![v; width * height],
        }
    }

    fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionResult {
    pub optical_density: Image,
    pub atom_number: f64,
    /// Pixels dropped because a dark-subtracted intensity was not positive.
    pub masked_pixels: usize,
    /// Gaussian fits of the OD marginals (x: columns, y: rows), in mm; absent
    /// when a marginal is flat.
    pub fit_x: Option<GaussianFit>,
    pub fit_y: Option<GaussianFit>,
}

/// OD = ln[(I_ref − dark)/(I_atoms − dark)], clamped at 0; N = ΣOD·A/σ₀.
pub fn absorption_analysis(atoms: &Image, reference: &Image, dark: &Image, pixel_um: f64) -> Result<AbsorptionResult> {
    if !atoms.same_shape(reference) || !atoms.same_shape(dark) {
        return Err(Error::Data(format!(
            "image sizes differ: atoms {}x{}, reference {}x{}, dark {}x{}",
            atoms.width, atoms.height, reference.width, reference.height, dark.width, dark.height
        )));
    }
    if !(pixel_um > 0.0) {
        return Err(Error::Domain(format!(
            "pixel scale must be positive, got {pixel_um} um"
        )));
    }
    let mut masked = 0;
    let od: Vec<f64> = (0..atoms.data.len())
        .map(|i| {
            let a = atoms.data[i] - dark.data[i];
            let r = reference.data[i] - dark.data[i];
            if !(a > 0.0) || !(r > 0.0) {
                masked += 1;
                0.0
            } else {
                (r / a).ln().max(0.0)
            }
        })
        .collect();
    let area_cm2 = (pixel_um * 1e-4).powi(2);
    let atom_number = od.iter().sum::<f64>() * area_cm2 / resonant_cross_section_cm2(IMAGING_WAVELENGTH_NM);

    let (w, h) = (atoms.width, atoms.height);
    let mut col = vec![0.0; w];
    let mut row = vec![0.0; h];
    for r in 0..h {
        for c in 0..w {
            col[c] += od[r * w + c];
            row[r] += od[r * w + c];
        }
    }
    let pos = |n: usize| -> Vec<f64> { (0..n).map(|i| i as f64 * pixel_um * 1e-3).collect() };
    let fit_x = fit_gaussian_1d(&pos(w), &col, &Weights::Unit).ok();
    let fit_y = fit_gaussian_1d(&pos(h), &row, &Weights::Unit).ok();
    Ok(AbsorptionResult {
        optical_density: Image {
            width: w,
            height: h,
            data: od,
        },
        atom_number,
        masked_pixels: masked,
        fit_x,
        fit_y,
    })
}

/// Frames (atoms, reference, dark) for a Gaussian cloud of `atom_number`
/// atoms with column-density widths `sigma_mm` centred in the frame.
pub fn synthetic_images(
    width: usize,
    height: usize,
    pixel_um: f64,
    atom_number: f64,
    sigma_mm: [f64; 2],
    probe: f64,
    dark_level: f64,
) -> (Image, Image, Image) {
    let sigma0 = resonant_cross_section_cm2(IMAGING_WAVELENGTH_NM);
    let (sx, sy) = (sigma_mm[0] * 0.1, sigma_mm[1] * 0.1);
    let peak = atom_number / (2.0 * PI * sx * sy);
    let p = pixel_um * 1e-4;
    let (cx, cy) = ((width - 1) as f64 / 2.0, (height - 1) as f64 / 2.0);
    let mut atoms = Vec::with_capacity(width * height);
    for r in 0..height {
        for c in 0..width {
            let x = (c as f64 - cx) * p;
            let y = (r as f64 - cy) * p;
            let column = peak * (-0.5 * (x * x / (sx * sx) + y * y / (sy * sy))).exp();
            atoms.push(dark_level + probe * (-sigma0 * column).exp());
        }
    }
    (
        Image {
            width,
            height,
            data: atoms,
        },
        Image::filled(width, height, dark_level + probe),
        Image::filled(width, height, dark_level),
    )
}
