//! Per-image and per-scale complexity metrics and their dataset aggregate.
//!
//! Scale index `k` always means the image reduced by `2^k`. The JPEG metric
//! and foreground density are measured after a round trip back to the input
//! size so every scale shares the input image as its frame of reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::imaging::{
    decode_image, downsample, factor_for_scale, jpeg_encode_q25, raw_size, to_grayscale, upsample, MaskImage,
    RasterImage,
};

/// Default number of pyramid levels (input plus four reductions).
pub const DEFAULT_SCALES: usize = 5;

/// Default JB weight grid resolution.
pub const DEFAULT_OMEGA_STEP: f64 = 0.025;

const SOBEL_X: [[i32; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
const SOBEL_Y: [[i32; 3]; 3] = [[-1, -2, -1], [0, 0, 0], [1, 2, 1]];

/// Complexity values at one pyramid level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleComplexity {
    pub scale_index: usize,
    /// JPEG complexity (inverse compression ratio at quality 25).
    pub j: f64,
    /// Foreground density; present only when masks were supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Mean squared normalized luma at this scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    /// Mean Sobel gradient magnitude at this scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<f64>,
}

/// All scales measured for a single image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageComplexity {
    pub id: String,
    pub scales: Vec<ScaleComplexity>,
}

impl ImageComplexity {
    /// Multi-scale edge information: mean of the per-scale edge values.
    pub fn edge_information(&self) -> Option<f64> {
        let edges: Option<Vec<f64>> = self.scales.iter().map(|s| s.edge).collect();
        edges.map(|e| e.iter().sum::<f64>() / e.len() as f64)
    }
}

/// Where a profile's numbers came from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileOrigin {
    /// Computed from images by [`profile_dataset`].
    #[default]
    Measured,
    /// Typed in from published or externally computed values; no per-image data.
    Tabulated,
}

/// Dataset-level complexity: per-scale means over the training images.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub name: String,
    #[serde(default)]
    pub origin: ProfileOrigin,
    pub num_images: usize,
    pub scales: Vec<ScaleComplexity>,
    #[serde(default)]
    pub per_image: Vec<ImageComplexity>,
}

impl DatasetProfile {
    /// Profile from tabulated per-scale J (and optionally B) values.
    pub fn tabulated(name: &str, j: &[f64], b: Option<&[f64]>) -> Result<Self> {
        if j.is_empty() {
            return Err(Error::arg("a profile needs at least one scale"));
        }
        if let Some(b) = b {
            if b.len() != j.len() {
                return Err(Error::arg("J and B columns differ in length"));
            }
        }
        let scales = j
            .iter()
            .enumerate()
            .map(|(k, &j)| ScaleComplexity {
                scale_index: k,
                j,
                b: b.map(|b| b[k]),
                energy: None,
                edge: None,
            })
            .collect();
        Ok(Self {
            name: name.to_string(),
            origin: ProfileOrigin::Tabulated,
            num_images: 0,
            scales,
            per_image: Vec::new(),
        })
    }

    pub fn num_scales(&self) -> usize {
        self.scales.len()
    }

    pub fn j(&self) -> Vec<f64> {
        self.scales.iter().map(|s| s.j).collect()
    }

    pub fn b(&self) -> Option<Vec<f64>> {
        self.scales.iter().map(|s| s.b).collect()
    }

    /// JB per scale for the given weight.
    pub fn jb(&self, omega: f64) -> Result<Vec<f64>> {
        let b = self
            .b()
            .ok_or_else(|| Error::arg(format!("profile `{}` has no foreground density", self.name)))?;
        self.j()
            .iter()
            .zip(&b)
            .map(|(&j, &b)| jb_complexity(j, b, omega))
            .collect()
    }

    /// Check structural invariants (scale ordering, value ranges, means).
    pub fn validate(&self) -> Result<()> {
        if self.scales.is_empty() {
            return Err(Error::arg(format!("profile `{}` has no scales", self.name)));
        }
        for (k, s) in self.scales.iter().enumerate() {
            if s.scale_index != k {
                return Err(Error::arg(format!(
                    "profile `{}`: scale entry {k} has index {}",
                    self.name, s.scale_index
                )));
            }
            if !(s.j.is_finite() && s.j >= 0.0) {
                return Err(Error::arg(format!("profile `{}`: bad J at scale {k}", self.name)));
            }
            if let Some(b) = s.b {
                if !(0.0..=1.0).contains(&b) {
                    return Err(Error::arg(format!(
                        "profile `{}`: B out of [0,1] at scale {k}",
                        self.name
                    )));
                }
            }
        }
        if self.origin == ProfileOrigin::Measured {
            if self.per_image.len() != self.num_images || self.num_images == 0 {
                return Err(Error::arg(format!(
                    "profile `{}`: {} per-image entries for {} images",
                    self.name,
                    self.per_image.len(),
                    self.num_images
                )));
            }
            let again = aggregate(&self.name, &self.per_image)?;
            for (a, b) in again.scales.iter().zip(&self.scales) {
                if (a.j - b.j).abs() > 1e-12 * a.j.abs().max(1.0) {
                    return Err(Error::arg(format!(
                        "profile `{}`: aggregate J at scale {} is not the per-image mean",
                        self.name, a.scale_index
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Inverse compression ratio at quality 25.
pub fn jpeg_complexity(img: &RasterImage) -> f64 {
    jpeg_encode_q25(img).len() as f64 / raw_size(img) as f64
}

/// JPEG complexity at scale `k`: subsample by 2^k, compress, decode,
/// upsample back to the input size, then measure the encoded size of that
/// round-tripped image against the raw input size.
pub fn layer_wise_jpeg_complexity(img: &RasterImage, k: usize) -> Result<f64> {
    let factor = factor_for_scale(k)?;
    let down = downsample(img, factor)?;
    let decoded = decode_image(&jpeg_encode_q25(&down))?;
    let up = upsample(&decoded, factor, img.width(), img.height())?;
    Ok(jpeg_encode_q25(&up).len() as f64 / raw_size(img) as f64)
}

/// Fraction of foreground pixels.
pub fn foreground_density(mask: &MaskImage) -> f64 {
    mask.foreground_count() as f64 / (mask.width() * mask.height()) as f64
}

/// Foreground density after majority pooling by 2^k (ties count as
/// foreground) and nearest-neighbour expansion back to the input size.
pub fn layer_wise_foreground_density(mask: &MaskImage, k: usize) -> Result<f64> {
    let factor = factor_for_scale(k)?;
    let (w, h) = (mask.width(), mask.height());
    if factor > w.min(h) {
        return Err(Error::ScaleTooDeep {
            factor,
            width: w,
            height: h,
        });
    }
    if factor == 1 {
        return Ok(foreground_density(mask));
    }
    let px = mask.pixels();
    let mut fg_pixels = 0usize;
    for y0 in (0..h).step_by(factor) {
        let y1 = (y0 + factor).min(h);
        for x0 in (0..w).step_by(factor) {
            let x1 = (x0 + factor).min(w);
            let mut fg = 0usize;
            for y in y0..y1 {
                fg += px[y * w + x0..y * w + x1].iter().filter(|&&p| p == 1).count();
            }
            let count = (y1 - y0) * (x1 - x0);
            if 2 * fg >= count {
                // the pooled sample covers exactly this block once expanded
                fg_pixels += count;
            }
        }
    }
    Ok(fg_pixels as f64 / (w * h) as f64)
}

fn require_gray(img: &RasterImage) -> Result<()> {
    if img.is_grayscale() {
        Ok(())
    } else {
        Err(Error::arg("metric expects a single-channel image"))
    }
}

/// Spectral energy `(1/N) sum |F(u,v)|^2` of the normalized luma plane,
/// evaluated as `sum f(x,y)^2` (Parseval).
pub fn signal_energy(img: &RasterImage) -> Result<f64> {
    require_gray(img)?;
    Ok(img
        .pixels()
        .iter()
        .map(|&p| {
            let v = p as f64 / 255.0;
            v * v
        })
        .sum())
}

/// Mean Sobel gradient magnitude of a grayscale image, replicate border,
/// pixels normalized to [0,1].
pub fn sobel_mean_magnitude(img: &RasterImage) -> Result<f64> {
    require_gray(img)?;
    let (w, h) = (img.width() as isize, img.height() as isize);
    let at = |x: isize, y: isize| -> i32 {
        let x = x.clamp(0, w - 1) as usize;
        let y = y.clamp(0, h - 1) as usize;
        img.get(x, y, 0) as i32
    };
    // integer accumulation keeps flat regions at exactly zero
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            let (mut gx, mut gy) = (0i32, 0i32);
            for dy in 0..3 {
                for dx in 0..3 {
                    let v = at(x + dx as isize - 1, y + dy as isize - 1);
                    gx += SOBEL_X[dy][dx] * v;
                    gy += SOBEL_Y[dy][dx] * v;
                }
            }
            total += ((gx * gx + gy * gy) as f64).sqrt() / 255.0;
        }
    }
    Ok(total / (w * h) as f64)
}

/// Edge information averaged over `num_scales` pyramid levels.
pub fn edge_information(img: &RasterImage, num_scales: usize) -> Result<f64> {
    require_gray(img)?;
    if num_scales == 0 {
        return Err(Error::arg("num_scales must be at least 1"));
    }
    let mut sum = 0.0;
    for k in 0..num_scales {
        let level = downsample(img, factor_for_scale(k)?)?;
        sum += sobel_mean_magnitude(&level)?;
    }
    Ok(sum / num_scales as f64)
}

/// Convex combination `omega * j + (1 - omega) * b`.
pub fn jb_complexity(j: f64, b: f64, omega: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::arg(format!("omega must lie in [0,1], got {omega}")));
    }
    Ok(omega * j + (1.0 - omega) * b)
}

/// Min-max normalization to [0,1].
pub fn min_max_normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::arg("min-max normalization needs at least two values"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::arg("min-max normalization of a constant list is undefined"));
    }
    Ok(values.iter().map(|v| (v - lo) / (hi - lo)).collect())
}

/// Measure every retained metric at every scale for one image.
pub fn measure_image(
    id: &str,
    img: &RasterImage,
    mask: Option<&MaskImage>,
    num_scales: usize,
) -> Result<ImageComplexity> {
    if num_scales == 0 {
        return Err(Error::arg("num_scales must be at least 1"));
    }
    if let Some(m) = mask {
        if (m.width(), m.height()) != (img.width(), img.height()) {
            return Err(Error::arg(format!(
                "mask for `{id}` is {}x{} but the image is {}x{}",
                m.width(),
                m.height(),
                img.width(),
                img.height()
            )));
        }
    }
    let gray = to_grayscale(img);
    let scales = (0..num_scales)
        .map(|k| {
            let level = downsample(&gray, factor_for_scale(k)?)?;
            let n = (level.width() * level.height()) as f64;
            Ok(ScaleComplexity {
                scale_index: k,
                j: layer_wise_jpeg_complexity(img, k)?,
                b: mask.map(|m| layer_wise_foreground_density(m, k)).transpose()?,
                energy: Some(signal_energy(&level)? / n),
                edge: Some(sobel_mean_magnitude(&level)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImageComplexity {
        id: id.to_string(),
        scales,
    })
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>, n: usize) -> Option<f64> {
    let mut sum = 0.0;
    for v in values {
        sum += v?;
    }
    Some(sum / n as f64)
}

/// Average per-image measurements, summing in list order.
pub fn aggregate(name: &str, per_image: &[ImageComplexity]) -> Result<DatasetProfile> {
    let first = per_image
        .first()
        .ok_or_else(|| Error::InsufficientData("cannot profile an empty image list".into()))?;
    let num_scales = first.scales.len();
    if per_image.iter().any(|p| p.scales.len() != num_scales) {
        return Err(Error::arg("images were measured at different scale counts"));
    }
    let n = per_image.len();
    let scales = (0..num_scales)
        .map(|k| {
            let col = || per_image.iter().map(move |p| &p.scales[k]);
            ScaleComplexity {
                scale_index: k,
                j: col().map(|s| s.j).sum::<f64>() / n as f64,
                b: mean_opt(col().map(|s| s.b), n),
                energy: mean_opt(col().map(|s| s.energy), n),
                edge: mean_opt(col().map(|s| s.edge), n),
            }
        })
        .collect();
    Ok(DatasetProfile {
        name: name.to_string(),
        origin: ProfileOrigin::Measured,
        num_images: n,
        scales,
        per_image: per_image.to_vec(),
    })
}

/// A named training image with an optional mask.
#[derive(Clone, Debug)]
pub struct Sample {
    pub id: String,
    pub image: RasterImage,
    pub mask: Option<MaskImage>,
}

/// Profile a dataset. Per-image work fans out according to `exec`; the
/// aggregate is reduced in input order so the result is independent of the
/// strategy.
pub fn profile_dataset(name: &str, samples: &[Sample], num_scales: usize, exec: Execution) -> Result<DatasetProfile> {
    if samples.is_empty() {
        return Err(Error::InsufficientData(format!("dataset `{name}` has no images")));
    }
    let with_masks = samples.iter().filter(|s| s.mask.is_some()).count();
    if with_masks != 0 && with_masks != samples.len() {
        return Err(Error::arg(format!(
            "dataset `{name}`: {with_masks} masks for {} images",
            samples.len()
        )));
    }
    let per_image = exec.try_map(samples, |s| measure_image(&s.id, &s.image, s.mask.as_ref(), num_scales))?;
    aggregate(name, &per_image)
}

/// Convenience wrapper pairing parallel image and mask lists.
pub fn profile_images(
    name: &str,
    images: &[RasterImage],
    masks: Option<&[MaskImage]>,
    num_scales: usize,
    exec: Execution,
) -> Result<DatasetProfile> {
    if let Some(m) = masks {
        if m.len() != images.len() {
            return Err(Error::arg(format!("{} masks for {} images", m.len(), images.len())));
        }
    }
    let samples: Vec<Sample> = images
        .iter()
        .enumerate()
        .map(|(i, img)| Sample {
            id: format!("{i:04}"),
            image: img.clone(),
            mask: masks.map(|m| m[i].clone()),
        })
        .collect();
    profile_dataset(name, &samples, num_scales, exec)
}
