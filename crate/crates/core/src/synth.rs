//! Synthetic benchmark: hidden multidimensional sources, random stable
//! ARIMA dynamics and undercomplete linear mixing.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{shape, Error, Result};
use crate::io;
use crate::seeding;
use crate::tsmodel::{
    apply_polynomial, cumulate, ArCoeffs, Boundary, ComponentLayout, DifferenceOrder, MatrixPolynomial, TimeSeries,
};

/// Segment font on a 5x7 grid (x in 0..=4, y in 0..=6). Straight strokes only.
const GLYPHS: &[(char, &[[f64; 4]])] = &[
    ('A', &[[0., 0., 2., 6.], [2., 6., 4., 0.], [1., 3., 3., 3.]]),
    (
        'E',
        &[[0., 0., 0., 6.], [0., 6., 4., 6.], [0., 3., 3., 3.], [0., 0., 4., 0.]],
    ),
    ('F', &[[0., 0., 0., 6.], [0., 6., 4., 6.], [0., 3., 3., 3.]]),
    ('H', &[[0., 0., 0., 6.], [4., 0., 4., 6.], [0., 3., 4., 3.]]),
    ('K', &[[0., 0., 0., 6.], [0., 3., 4., 6.], [0., 3., 4., 0.]]),
    ('L', &[[0., 0., 0., 6.], [0., 0., 4., 0.]]),
    (
        'M',
        &[[0., 0., 0., 6.], [0., 6., 2., 3.], [2., 3., 4., 6.], [4., 6., 4., 0.]],
    ),
    ('N', &[[0., 0., 0., 6.], [0., 6., 4., 0.], [4., 0., 4., 6.]]),
    ('T', &[[0., 6., 4., 6.], [2., 6., 2., 0.]]),
    ('V', &[[0., 6., 2., 0.], [2., 0., 4., 6.]]),
    (
        'W',
        &[[0., 6., 1., 0.], [1., 0., 2., 4.], [2., 4., 3., 0.], [3., 0., 4., 6.]],
    ),
    ('X', &[[0., 0., 4., 6.], [0., 6., 4., 0.]]),
    ('Y', &[[0., 6., 2., 3.], [4., 6., 2., 3.], [2., 3., 2., 0.]]),
    ('Z', &[[0., 6., 4., 6.], [4., 6., 0., 0.], [0., 0., 4., 0.]]),
];

/// Letters available for [`SourceFamily::Glyph`].
pub fn glyph_letters() -> impl Iterator<Item = char> {
    GLYPHS.iter().map(|(c, _)| *c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solid {
    Tetrahedron,
    Cube,
    Octahedron,
    SquarePyramid,
    TriangularPrism,
}

impl Solid {
    fn edges(self) -> Vec<([f64; 3], [f64; 3])> {
        fn join(v: &[[f64; 3]], e: &[(usize, usize)]) -> Vec<([f64; 3], [f64; 3])> {
            e.iter().map(|&(a, b)| (v[a], v[b])).collect()
        }
        match self {
            Solid::Tetrahedron => join(
                &[[1., 1., 1.], [1., -1., -1.], [-1., 1., -1.], [-1., -1., 1.]],
                &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
            ),
            Solid::Cube => {
                let v: Vec<[f64; 3]> = (0..8)
                    .map(|i| {
                        let b = |k: usize| if i >> k & 1 == 1 { 1.0 } else { -1.0 };
                        [b(0), b(1), b(2)]
                    })
                    .collect();
                let mut e = Vec::new();
                for i in 0..8usize {
                    for k in 0..3 {
                        let j = i ^ (1 << k);
                        if i < j {
                            e.push((i, j));
                        }
                    }
                }
                join(&v, &e)
            }
            Solid::Octahedron => {
                let v = [
                    [1., 0., 0.],
                    [-1., 0., 0.],
                    [0., 1., 0.],
                    [0., -1., 0.],
                    [0., 0., 1.],
                    [0., 0., -1.],
                ];
                let mut e = Vec::new();
                for i in 0..6 {
                    for j in (i + 1)..6 {
                        // opposite vertices are the only non-adjacent pairs
                        if i / 2 != j / 2 {
                            e.push((i, j));
                        }
                    }
                }
                join(&v, &e)
            }
            Solid::SquarePyramid => join(
                &[
                    [1., 1., 0.],
                    [1., -1., 0.],
                    [-1., -1., 0.],
                    [-1., 1., 0.],
                    [0., 0., 1.5],
                ],
                &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (1, 4), (2, 4), (3, 4)],
            ),
            Solid::TriangularPrism => join(
                &[
                    [1., 0., -1.],
                    [-0.5, 0.866, -1.],
                    [-0.5, -0.866, -1.],
                    [1., 0., 1.],
                    [-0.5, 0.866, 1.],
                    [-0.5, -0.866, 1.],
                ],
                &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)],
            ),
        }
    }
}

/// Distribution of one hidden component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SourceFamily {
    /// Uniform on the strokes of a letter (2D).
    Glyph { letter: char },
    /// Uniform on the edges of a polyhedron (3D).
    Wireframe { solid: Solid },
    /// Uniform on the edges of `[-1, 1]^d`: one coordinate uniform, the rest
    /// at random corners. The uniform interval for `d = 1`.
    HypercubeShell,
    /// Rows resampled with replacement from a series file.
    SampleFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub layout: ComponentLayout,
    pub families: Vec<SourceFamily>,
    pub seed: u64,
}

impl SourceSpec {
    pub fn new(layout: ComponentLayout, families: Vec<SourceFamily>, seed: u64) -> Result<Self> {
        let spec = Self { layout, families, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.len() != self.layout.components() {
            return Err(Error::InvalidArgument(format!(
                "{} families given for {} components",
                self.families.len(),
                self.layout.components()
            )));
        }
        for (m, (fam, &d)) in self.families.iter().zip(self.layout.dims()).enumerate() {
            match fam {
                SourceFamily::Glyph { letter } => {
                    if d != 2 {
                        return Err(Error::InvalidArgument(format!(
                            "component {m}: glyph sources are 2D, layout says {d}"
                        )));
                    }
                    if !glyph_letters().any(|c| c == *letter) {
                        return Err(Error::InvalidArgument(format!(
                            "component {m}: no glyph for {letter:?}"
                        )));
                    }
                }
                SourceFamily::Wireframe { .. } if d != 3 => {
                    return Err(Error::InvalidArgument(format!(
                        "component {m}: wireframe sources are 3D, layout says {d}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Four letters, three wireframes, two 4D and one 5D hypercube shells.
    pub fn paper(seed: u64) -> Self {
        let mut families: Vec<SourceFamily> = ['A', 'K', 'M', 'Z']
            .into_iter()
            .map(|letter| SourceFamily::Glyph { letter })
            .collect();
        families.extend(
            [Solid::SquarePyramid, Solid::Cube, Solid::Octahedron]
                .into_iter()
                .map(|solid| SourceFamily::Wireframe { solid }),
        );
        families.extend(std::iter::repeat_n(SourceFamily::HypercubeShell, 3));
        Self::new(
            ComponentLayout::new(vec![2, 2, 2, 2, 3, 3, 3, 4, 4, 5]).expect("valid"),
            families,
            seed,
        )
        .expect("valid preset")
    }

    /// Layout of `n` letter glyphs (2D each).
    pub fn letters(letters: &[char], seed: u64) -> Result<Self> {
        Self::new(
            ComponentLayout::new(vec![2; letters.len()])?,
            letters.iter().map(|&letter| SourceFamily::Glyph { letter }).collect(),
            seed,
        )
    }
}

fn sample_segments(rng: &mut ChaCha8Rng, segments: &[(Vec<f64>, Vec<f64>)], out: &mut [f64]) {
    let lengths: Vec<f64> = segments
        .iter()
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
        .collect();
    let total: f64 = lengths.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut k = 0;
    while k + 1 < lengths.len() && u >= lengths[k] {
        u -= lengths[k];
        k += 1;
    }
    let s: f64 = rng.random();
    let (a, b) = &segments[k];
    for (o, (x, y)) in out.iter_mut().zip(a.iter().zip(b)) {
        *o = x + s * (y - x);
    }
}

fn component_raw(fam: &SourceFamily, d: usize, t: usize, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    let mut raw = DMatrix::zeros(t, d);
    let mut buf = vec![0.0; d];
    match fam {
        SourceFamily::Glyph { letter } => {
            let strokes = GLYPHS
                .iter()
                .find(|(c, _)| c == letter)
                .map(|(_, s)| *s)
                .ok_or_else(|| Error::InvalidArgument(format!("no glyph for {letter:?}")))?;
            let segs: Vec<_> = strokes.iter().map(|s| (vec![s[0], s[1]], vec![s[2], s[3]])).collect();
            for i in 0..t {
                sample_segments(rng, &segs, &mut buf);
                raw.row_mut(i).copy_from_slice(&buf);
            }
        }
        SourceFamily::Wireframe { solid } => {
            let segs: Vec<_> = solid
                .edges()
                .into_iter()
                .map(|(a, b)| (a.to_vec(), b.to_vec()))
                .collect();
            for i in 0..t {
                sample_segments(rng, &segs, &mut buf);
                raw.row_mut(i).copy_from_slice(&buf);
            }
        }
        SourceFamily::HypercubeShell => {
            for i in 0..t {
                for v in buf.iter_mut() {
                    *v = if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
                let free = rng.random_range(0..d);
                buf[free] = rng.random_range(-1.0..1.0);
                raw.row_mut(i).copy_from_slice(&buf);
            }
        }
        SourceFamily::SampleFile { path } => {
            let pool = io::read_series(path)?;
            if pool.dim() != d {
                return Err(shape(format!(
                    "sample file {} has dim {}, layout says {d}",
                    path.display(),
                    pool.dim()
                )));
            }
            for i in 0..t {
                let k = rng.random_range(0..pool.len());
                raw.row_mut(i).copy_from(&pool.data().row(k));
            }
        }
    }
    Ok(raw)
}

/// Draws `t` i.i.d. samples of every component, each from its own random
/// stream, standardized to zero mean and unit variance per coordinate.
pub fn draw_sources(spec: &SourceSpec, t: usize) -> Result<TimeSeries> {
    spec.validate()?;
    if t < 2 {
        return Err(Error::InsufficientLength { needed: 1, got: t });
    }
    let offsets = spec.layout.offsets();
    let mut data = DMatrix::zeros(t, spec.layout.total());
    for (m, (fam, &d)) in spec.families.iter().zip(spec.layout.dims()).enumerate() {
        let mut rng = seeding::rng(spec.seed, m as u64);
        let mut raw = component_raw(fam, d, t, &mut rng)?;
        for (c, mut col) in raw.column_iter_mut().enumerate() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / t as f64).sqrt();
            if sd == 0.0 {
                return Err(Error::DegenerateCoordinate { index: offsets[m] + c });
            }
            col /= sd;
        }
        data.columns_mut(offsets[m], d).copy_from(&raw);
    }
    TimeSeries::new(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mixing {
    /// Orthonormal columns.
    #[default]
    RandomOrthogonal,
    /// Gaussian entries, full column rank.
    RandomFullColumnRank,
}

/// Parameters of the hidden ARIMA(p, r, q) system and its mixing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub p: usize,
    pub q: usize,
    pub r: DifferenceOrder,
    pub dx: usize,
    pub ds: usize,
    pub de: usize,
    #[serde(default)]
    pub mixing: Mixing,
    pub seed: u64,
}

impl SystemSpec {
    /// Pure ISA (no temporal structure) may be complete; everything else
    /// must be undercomplete.
    pub fn validate(&self) -> Result<()> {
        if self.dx == 0 || self.ds == 0 || self.de == 0 {
            return Err(Error::InvalidArgument("dimensions must be positive".into()));
        }
        let pure_isa = self.p == 0 && self.q == 0 && self.r.get() == 0;
        if self.dx < self.de || (!pure_isa && self.dx == self.de) {
            return Err(Error::InvalidArgument(format!(
                "undercomplete model requires dx > de (dx = {}, de = {})",
                self.dx, self.de
            )));
        }
        if self.ds < self.de {
            return Err(Error::InvalidArgument(format!(
                "ds ({}) must be at least de ({})",
                self.ds, self.de
            )));
        }
        if self.dx < self.ds {
            return Err(Error::InvalidArgument(format!(
                "mixing needs full column rank: dx ({}) < ds ({})",
                self.dx, self.ds
            )));
        }
        Ok(())
    }

    pub fn paper(seed: u64) -> Self {
        Self {
            p: 2,
            q: 6,
            r: DifferenceOrder(1),
            dx: 60,
            ds: 60,
            de: 30,
            mixing: Mixing::RandomOrthogonal,
            seed,
        }
    }

    pub fn desk(seed: u64) -> Self {
        Self {
            p: 1,
            q: 2,
            r: DifferenceOrder(1),
            dx: 12,
            ds: 12,
            de: 6,
            mixing: Mixing::RandomOrthogonal,
            seed,
        }
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// Random stable AR lags `[P_1..P_p]` of dimension `d`: Gaussian draws
/// rescaled so the companion spectral radius hits a target uniform in
/// `[0.3, 0.95]`.
pub fn random_stable_ar(p: usize, d: usize, seed: u64) -> Result<ArCoeffs> {
    if d == 0 {
        return Err(Error::InvalidArgument("AR dimension must be positive".into()));
    }
    let mut rng = seeding::rng(seed, 0);
    let mut lags: Vec<_> = (0..p)
        .map(|_| gaussian_matrix(&mut rng, d, d, 1.0 / (d as f64).sqrt()))
        .collect();
    let target: f64 = rng.random_range(0.3..0.95);
    let ar = ArCoeffs::new(d, lags.clone())?;
    let rho = ar.spectral_radius();
    if rho > 0.0 {
        let c = target / rho;
        for (i, m) in lags.iter_mut().enumerate() {
            *m *= c.powi(i as i32 + 1);
        }
    }
    ArCoeffs::new(d, lags)
}

/// Random MA polynomial `Q[z]` of degree `q` with `ds x de` standard normal
/// coefficients and full-column-rank `Q_0`.
pub fn random_ma(q: usize, ds: usize, de: usize, seed: u64) -> Result<MatrixPolynomial> {
    if ds < de {
        return Err(Error::InvalidArgument(format!(
            "MA polynomial must be undercomplete: ds ({ds}) < de ({de})"
        )));
    }
    if de == 0 {
        return Err(Error::InvalidArgument("de must be positive".into()));
    }
    let mut rng = seeding::rng(seed, 1);
    loop {
        let coeffs: Vec<_> = (0..=q).map(|_| gaussian_matrix(&mut rng, ds, de, 1.0)).collect();
        if full_column_rank(&coeffs[0]) {
            return MatrixPolynomial::new(coeffs);
        }
    }
}

fn full_column_rank(m: &DMatrix<f64>) -> bool {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    max > 0.0 && min > 1e-8 * max
}

fn random_mixing(kind: Mixing, dx: usize, ds: usize, seed: u64) -> Result<DMatrix<f64>> {
    let mut rng = seeding::rng(seed, 2);
    loop {
        let g = gaussian_matrix(&mut rng, dx, ds, 1.0);
        match kind {
            Mixing::RandomOrthogonal => {
                let qr = g.qr();
                let r = qr.r();
                let mut q = qr.q();
                for (k, mut col) in q.column_iter_mut().enumerate() {
                    if r[(k, k)] < 0.0 {
                        col.neg_mut();
                    }
                }
                return Ok(q);
            }
            Mixing::RandomFullColumnRank => {
                if full_column_rank(&g) {
                    return Ok(g);
                }
            }
        }
    }
}

/// Concrete system matrices: `x = A s`, `P[z] (I - Iz)^r s = Q[z] e`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub mixing: DMatrix<f64>,
    pub ar: ArCoeffs,
    pub ma: MatrixPolynomial,
    pub r: DifferenceOrder,
}

impl SystemMatrices {
    pub fn draw(spec: &SystemSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            mixing: random_mixing(spec.mixing, spec.dx, spec.ds, spec.seed)?,
            ar: random_stable_ar(spec.p, spec.ds, spec.seed)?,
            ma: random_ma(spec.q, spec.ds, spec.de, spec.seed)?,
            r: spec.r,
        })
    }

    /// `A Q_0`, the mixing seen by the innovation.
    pub fn innovation_mixing(&self) -> DMatrix<f64> {
        &self.mixing * &self.ma.coeffs()[0]
    }
}

/// Everything needed to score a separation against the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub system: SystemMatrices,
    /// `e(t)` aligned with the r-th difference of the observations: row `t`
    /// drives `(I - Iz)^r x` at row `t`.
    pub sources: TimeSeries,
    pub layout: ComponentLayout,
    pub burn_in: usize,
}

pub fn burn_in(p: usize) -> usize {
    (10 * p).max(1000)
}

/// Draws system matrices from `spec` and runs [`simulate_with`].
pub fn simulate(
    spec: &SystemSpec,
    sources: &TimeSeries,
    layout: &ComponentLayout,
) -> Result<(TimeSeries, GroundTruth)> {
    if sources.dim() != spec.de {
        return Err(shape(format!(
            "sources have dim {}, spec says de = {}",
            sources.dim(),
            spec.de
        )));
    }
    let system = SystemMatrices::draw(spec)?;
    simulate_with(system, sources, layout)
}

/// Drives the ARMA recursion
/// `s(t) = sum_i P_i s(t-i) + sum_j Q_j e(t-j)` from a zero state, drops
/// the burn-in, integrates `r` times from zero heads and mixes with `A`.
/// The output has `sources.len() - burn_in + r` samples.
pub fn simulate_with(
    system: SystemMatrices,
    sources: &TimeSeries,
    layout: &ComponentLayout,
) -> Result<(TimeSeries, GroundTruth)> {
    let ds = system.ma.out_dim();
    if system.ma.in_dim() != sources.dim() || layout.total() != sources.dim() {
        return Err(shape(format!(
            "Q[z] takes dim {}, layout totals {}, sources have dim {}",
            system.ma.in_dim(),
            layout.total(),
            sources.dim()
        )));
    }
    if system.ar.dim() != ds || system.mixing.ncols() != ds {
        return Err(shape(format!(
            "AR dim {} and mixing {}x{} must match ds = {ds}",
            system.ar.dim(),
            system.mixing.nrows(),
            system.mixing.ncols()
        )));
    }
    let radius = system.ar.spectral_radius();
    if radius >= 1.0 {
        return Err(Error::Unstable { radius });
    }
    let burn = burn_in(system.ar.order());
    if sources.len() <= burn {
        return Err(Error::InsufficientLength {
            needed: burn,
            got: sources.len(),
        });
    }

    let driven = apply_polynomial(&system.ma, sources, Boundary::ZeroPadPast)?;
    // column per time step for the recursion
    let mut s = driven.into_inner().transpose();
    let len = s.ncols();
    for t in 0..len {
        let mut acc = s.column(t).into_owned();
        for (i, p) in system.ar.lags().iter().enumerate() {
            if t > i {
                acc.gemv(1.0, p, &s.column(t - i - 1), 1.0);
            }
        }
        s.set_column(t, &acc);
    }
    let kept = len - burn;
    let stationary = TimeSeries::new(s.columns(burn, kept).transpose())?;
    let r = system.r;
    let heads = vec![DVector::zeros(ds); r.get()];
    let integrated = cumulate(&stationary, r, &heads)?;
    let x = integrated.transform(&system.mixing)?;
    let truth = GroundTruth {
        system,
        sources: sources.slice(burn, kept)?,
        layout: layout.clone(),
        burn_in: burn,
    };
    Ok((x, truth))
}

/// JSON manifest of a dataset bundle directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub system: Option<SystemSpec>,
    pub sources: Option<SourceSpec>,
    pub samples: usize,
    pub observations: String,
    pub truth: Option<TruthFiles>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthFiles {
    pub layout: ComponentLayout,
    pub burn_in: usize,
    pub r: DifferenceOrder,
    pub sources: String,
    pub mixing: String,
    pub ar: Vec<String>,
    pub ma: Vec<String>,
}

pub const DATASET_FORMAT: &str = "ipa-dataset/1";

/// A loaded dataset bundle.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub observations: TimeSeries,
    pub truth: Option<GroundTruth>,
}

/// Writes `dataset.json`, `observations.bin` and, when present, the ground
/// truth matrices into `dir`.
pub fn save_dataset(
    dir: &Path,
    x: &TimeSeries,
    truth: Option<&GroundTruth>,
    system: Option<&SystemSpec>,
    sources: Option<&SourceSpec>,
) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir)?;
    io::write_series_bin(dir.join("observations.bin"), x)?;
    let truth_files = match truth {
        Some(g) => {
            io::write_series_bin(dir.join("sources.bin"), &g.sources)?;
            io::write_matrix_bin(dir.join("mixing.bin"), &g.system.mixing)?;
            let mut ar = Vec::new();
            for (i, p) in g.system.ar.lags().iter().enumerate() {
                let name = format!("ar_{}.bin", i + 1);
                io::write_matrix_bin(dir.join(&name), p)?;
                ar.push(name);
            }
            let mut ma = Vec::new();
            for (j, q) in g.system.ma.coeffs().iter().enumerate() {
                let name = format!("ma_{j}.bin");
                io::write_matrix_bin(dir.join(&name), q)?;
                ma.push(name);
            }
            Some(TruthFiles {
                layout: g.layout.clone(),
                burn_in: g.burn_in,
                r: g.system.r,
                sources: "sources.bin".into(),
                mixing: "mixing.bin".into(),
                ar,
                ma,
            })
        }
        None => None,
    };
    let manifest = DatasetManifest {
        format: DATASET_FORMAT.into(),
        system: system.cloned(),
        sources: sources.cloned(),
        samples: x.len(),
        observations: "observations.bin".into(),
        truth: truth_files,
    };
    std::fs::write(dir.join("dataset.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest: DatasetManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("dataset.json"))?)?;
    if manifest.format != DATASET_FORMAT {
        return Err(Error::Format(format!(
            "unsupported dataset format {:?}",
            manifest.format
        )));
    }
    let observations = io::read_series(dir.join(&manifest.observations))?;
    let truth = match &manifest.truth {
        Some(tf) => {
            let mixing = io::read_matrix(dir.join(&tf.mixing))?;
            let lags = tf
                .ar
                .iter()
                .map(|n| io::read_matrix(dir.join(n)))
                .collect::<Result<Vec<_>>>()?;
            let ma = tf
                .ma
                .iter()
                .map(|n| io::read_matrix(dir.join(n)))
                .collect::<Result<Vec<_>>>()?;
            let ma = MatrixPolynomial::new(ma)?;
            Some(GroundTruth {
                system: SystemMatrices {
                    ar: ArCoeffs::new(mixing.ncols(), lags)?,
                    mixing,
                    ma,
                    r: tf.r,
                },
                sources: io::read_series(dir.join(&tf.sources))?,
                layout: tf.layout.clone(),
                burn_in: tf.burn_in,
            })
        }
        None => None,
    };
    Ok(Dataset {
        manifest,
        observations,
        truth,
    })
}
