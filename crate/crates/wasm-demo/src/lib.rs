//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Three operations: sample a letter glyph, run the full cascade on a small
//! letter mixture, and watch ICA undo a rotation of two uniforms.

use ipa_core::eval::{block_permutation_index, global_transform};
use ipa_core::isa::{ica, pca_whiten, DimRule, IcaOptions, KRule};
use ipa_core::pipeline::{separate, PipelineConfig};
use ipa_core::synth::{draw_sources, simulate, Mixing, SourceFamily, SourceSpec, SystemSpec};
use ipa_core::tsmodel::{ComponentLayout, DifferenceOrder, TimeSeries};
use nalgebra::DMatrix;
use wasm_bindgen::prelude::*;

/// Points returned for plotting are capped at this many samples.
pub const PLOT_POINTS: usize = 3_000;

fn js(e: ipa_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Row-major copy of the first `limit` rows.
fn head_rows(m: &DMatrix<f64>, limit: usize) -> Vec<f64> {
    let n = m.nrows().min(limit);
    (0..n)
        .flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>())
        .collect()
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Interleaved `x, y` samples of one letter glyph.
pub fn glyph_points(letter: char, n: usize, seed: u64) -> ipa_core::Result<Vec<f64>> {
    let spec = SourceSpec::new(
        ComponentLayout::new(vec![2])?,
        vec![SourceFamily::Glyph { letter }],
        seed,
    )?;
    let s = draw_sources(&spec, n)?;
    Ok(head_rows(s.data(), n))
}

#[wasm_bindgen(js_name = glyphPoints)]
pub fn glyph_points_js(letter: char, n: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    glyph_points(letter, n, seed).map_err(js)
}

/// Result of [`letter_mixture`].
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct MixtureRun {
    index: f64,
    layout: Vec<u32>,
    hinton: Vec<f64>,
    size: usize,
    separated: Vec<f64>,
    ar_order: usize,
}

#[wasm_bindgen]
impl MixtureRun {
    pub fn index(&self) -> f64 {
        self.index
    }

    /// Estimated component sizes, in output order.
    pub fn layout(&self) -> Vec<u32> {
        self.layout.clone()
    }

    /// `|G|`, row-major, `size x size`.
    pub fn hinton(&self) -> Vec<f64> {
        self.hinton.clone()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Separated samples, row-major with `size` columns.
    pub fn separated(&self) -> Vec<f64> {
        self.separated.clone()
    }

    #[wasm_bindgen(js_name = arOrder)]
    pub fn ar_order(&self) -> usize {
        self.ar_order
    }
}

/// One 2D glyph component per letter, ARIMA(1,1,2) dynamics and an
/// orthogonal mixing into twice as many channels; then the full cascade.
pub fn letter_mixture(letters: &str, samples: usize, seed: u64) -> ipa_core::Result<MixtureRun> {
    let chars: Vec<char> = letters.chars().filter(|c| !c.is_whitespace()).collect();
    if !(2..=5).contains(&chars.len()) {
        return Err(ipa_core::Error::InvalidArgument(format!(
            "pick 2 to 5 letters, got {}",
            chars.len()
        )));
    }
    let de = 2 * chars.len();
    let system = SystemSpec {
        p: 1,
        q: 2,
        r: DifferenceOrder(1),
        dx: 2 * de,
        ds: 2 * de,
        de,
        mixing: Mixing::RandomOrthogonal,
        seed: ipa_core::seeding::derive_seed(seed, "system"),
    };
    let sources = SourceSpec::letters(&chars, ipa_core::seeding::derive_seed(seed, "sources"))?;
    let draws = samples + ipa_core::synth::burn_in(system.p) - system.r.get();
    let e = draw_sources(&sources, draws)?;
    let (x, truth) = simulate(&system, &e, &sources.layout)?;
    let cfg = PipelineConfig {
        k_rule: KRule::Eigengap(chars.len() + 2),
        seed,
        ..PipelineConfig::default()
    };
    let (p, e_hat) = separate(&x, &cfg)?;
    let gt = global_transform(&p, &truth)?;
    Ok(MixtureRun {
        index: block_permutation_index(&gt)?.index,
        layout: p.estimated_layout.dims().iter().map(|&d| d as u32).collect(),
        hinton: row_major(&gt.g.abs()),
        size: gt.g.nrows(),
        separated: head_rows(e_hat.data(), PLOT_POINTS),
        ar_order: p.ar.order(),
    })
}

#[wasm_bindgen(js_name = letterMixture)]
pub fn letter_mixture_js(letters: &str, samples: usize, seed: u64) -> Result<MixtureRun, JsError> {
    letter_mixture(letters, samples, seed).map_err(js)
}

/// Result of [`rotation_ica`].
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct RotationRun {
    mixed: Vec<f64>,
    unmixed: Vec<f64>,
    product: Vec<f64>,
    sweeps: usize,
}

#[wasm_bindgen]
impl RotationRun {
    /// Mixed samples, interleaved `x, y`.
    pub fn mixed(&self) -> Vec<f64> {
        self.mixed.clone()
    }

    /// ICA output, interleaved `x, y`.
    pub fn unmixed(&self) -> Vec<f64> {
        self.unmixed.clone()
    }

    /// `W_ICA W_PCA A`, row-major 2x2; a signed permutation when ICA works.
    pub fn product(&self) -> Vec<f64> {
        self.product.clone()
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }
}

/// Two independent uniforms, stretched by `aspect` and rotated by
/// `degrees`, then whitened and demixed.
pub fn rotation_ica(degrees: f64, aspect: f64, samples: usize, seed: u64) -> ipa_core::Result<RotationRun> {
    if !(aspect.is_finite() && aspect > 0.0) {
        return Err(ipa_core::Error::InvalidArgument(format!(
            "aspect {aspect} must be positive"
        )));
    }
    let spec = SourceSpec::new(
        ComponentLayout::new(vec![1, 1])?,
        vec![SourceFamily::HypercubeShell; 2],
        ipa_core::seeding::derive_seed(seed, "sources"),
    )?;
    let s = draw_sources(&spec, samples)?;
    let (sin, cos) = degrees.to_radians().sin_cos();
    let a = DMatrix::from_row_slice(2, 2, &[cos, -sin * aspect, sin, cos * aspect]);
    let x = TimeSeries::new(s.data() * a.transpose())?;
    let (pca, w) = pca_whiten(&x, DimRule::Fixed(2))?;
    let opts = IcaOptions {
        seed: ipa_core::seeding::derive_seed(seed, "ica"),
        ..IcaOptions::default()
    };
    let (stage, y) = ica(&w, &opts)?;
    Ok(RotationRun {
        mixed: head_rows(x.data(), PLOT_POINTS),
        unmixed: head_rows(y.data(), PLOT_POINTS),
        product: row_major(&(&stage.rotation * &pca.basis * a)),
        sweeps: stage.convergence.len(),
    })
}

#[wasm_bindgen(js_name = rotationIca)]
pub fn rotation_ica_js(degrees: f64, aspect: f64, samples: usize, seed: u64) -> Result<RotationRun, JsError> {
    rotation_ica(degrees, aspect, samples, seed).map_err(js)
}
