//! Raster images, resampling and the JPEG round trip the complexity metrics
//! are built on.
//!
//! Every operation is a pure function of its inputs. Pixel arithmetic is done
//! in integers where possible (luma conversion, box averaging) so results are
//! identical on every platform.

use std::path::Path;

use image::{imageops::FilterType, DynamicImage};
use jpeg_encoder::{ColorType, Encoder, SamplingFactor};

use crate::error::{Error, Result};

/// JPEG quality used for every complexity measurement.
pub const COMPLEXITY_JPEG_QUALITY: u8 = 25;

/// Largest dimension a baseline JPEG frame header can carry.
pub const MAX_DIMENSION: usize = u16::MAX as usize;

/// Pyramid factors accepted by [`downsample`] and [`upsample`].
pub const SCALE_FACTORS: [usize; 5] = [1, 2, 4, 8, 16];

/// Luminance quantization table from ITU-T T.81 Annex K (natural order).
pub const ANNEX_K_LUMA: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Chrominance quantization table from ITU-T T.81 Annex K (natural order).
pub const ANNEX_K_CHROMA: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99,
];

/// Decoded 8-bit raster, row-major, interleaved channels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if width > MAX_DIMENSION || height > MAX_DIMENSION {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} exceeds the {MAX_DIMENSION} pixel JPEG limit"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        if pixels.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "expected {} samples for {width}x{height}x{channels}, got {}",
                width * height * channels,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    /// Constant-valued image.
    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn is_grayscale(&self) -> bool {
        self.channels == 1
    }

    /// Sample at (x, y, c).
    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }

    /// Rotate 90 degrees clockwise.
    pub fn rotate90(&self) -> Self {
        let (w, h, ch) = (self.width, self.height, self.channels);
        let mut out = vec![0u8; self.pixels.len()];
        for y in 0..h {
            for x in 0..w {
                // (x, y) -> (h - 1 - y, x) in a h-wide image
                let (nx, ny) = (h - 1 - y, x);
                for c in 0..ch {
                    out[(ny * h + nx) * ch + c] = self.get(x, y, c);
                }
            }
        }
        Self {
            width: h,
            height: w,
            channels: ch,
            pixels: out,
        }
    }

    pub fn flip_horizontal(&self) -> Self {
        let (w, h, ch) = (self.width, self.height, self.channels);
        let mut out = vec![0u8; self.pixels.len()];
        for y in 0..h {
            for x in 0..w {
                for c in 0..ch {
                    out[(y * w + (w - 1 - x)) * ch + c] = self.get(x, y, c);
                }
            }
        }
        Self { pixels: out, ..*self }
    }

    fn to_dynamic(&self) -> DynamicImage {
        let (w, h) = (self.width as u32, self.height as u32);
        if self.channels == 1 {
            DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, self.pixels.clone()).expect("validated buffer"))
        } else {
            DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, self.pixels.clone()).expect("validated buffer"))
        }
    }

    fn from_dynamic(img: DynamicImage) -> Result<Self> {
        let (w, h) = (img.width() as usize, img.height() as usize);
        if img.color().has_color() {
            Self::new(w, h, 3, img.into_rgb8().into_raw())
        } else {
            Self::new(w, h, 1, img.into_luma8().into_raw())
        }
    }
}

/// Binary segmentation mask, 0 = background, 1 = foreground.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl MaskImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "mask dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "expected {} mask samples, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|&&p| p > 1) {
            return Err(Error::InvalidImage(format!("mask samples must be 0 or 1, found {bad}")));
        }
        Ok(Self { width, height, pixels })
    }

    /// Any non-zero luma sample is foreground.
    pub fn from_raster(img: &RasterImage) -> Self {
        let gray = to_grayscale(img);
        Self {
            width: gray.width,
            height: gray.height,
            pixels: gray.pixels.iter().map(|&p| u8::from(p > 0)).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn foreground_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }

    /// Nearest-neighbour resize; masks stay binary.
    pub fn resize_nearest(&self, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::arg("mask resize target must be positive"));
        }
        let mut out = Vec::with_capacity(width * height);
        for y in 0..height {
            let sy = y * self.height / height;
            for x in 0..width {
                let sx = x * self.width / width;
                out.push(self.pixels[sy * self.width + sx]);
            }
        }
        Self::new(width, height, out)
    }
}

/// Decode a PNG or JPEG byte stream. 16-bit sources are rescaled to 8-bit and
/// alpha is dropped.
pub fn decode_image(bytes: &[u8]) -> Result<RasterImage> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Decode {
        path: None,
        message: e.to_string(),
    })?;
    RasterImage::from_dynamic(img)
}

/// Read and decode an image file; decode errors carry the path.
pub fn load_image(path: &Path) -> Result<RasterImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::Decode {
        path: Some(path.display().to_string()),
        message: e.to_string(),
    })?;
    decode_image(&bytes).map_err(|e| match e {
        Error::Decode { message, .. } => Error::Decode {
            path: Some(path.display().to_string()),
            message,
        },
        other => other,
    })
}

/// Encode as PNG (lossless), used for fixtures and debugging output.
pub fn encode_png(img: &RasterImage) -> Vec<u8> {
    let mut out = std::io::Cursor::new(Vec::new());
    img.to_dynamic()
        .write_to(&mut out, image::ImageFormat::Png)
        .expect("in-memory PNG encoding cannot fail");
    out.into_inner()
}

/// ITU-R BT.601 luma with integer round-half-up.
pub fn to_grayscale(img: &RasterImage) -> RasterImage {
    if img.channels == 1 {
        return img.clone();
    }
    let pixels = img
        .pixels
        .chunks_exact(3)
        .map(|p| {
            let sum = 299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32;
            ((sum + 500) / 1000) as u8
        })
        .collect();
    RasterImage {
        width: img.width,
        height: img.height,
        channels: 1,
        pixels,
    }
}

fn check_factor(factor: usize, width: usize, height: usize) -> Result<()> {
    if !SCALE_FACTORS.contains(&factor) {
        return Err(Error::arg(format!(
            "scale factor must be one of {SCALE_FACTORS:?}, got {factor}"
        )));
    }
    if factor > width.min(height) {
        return Err(Error::ScaleTooDeep { factor, width, height });
    }
    Ok(())
}

/// Pyramid factor for scale index `k` (2^k).
pub fn factor_for_scale(k: usize) -> Result<usize> {
    SCALE_FACTORS
        .get(k)
        .copied()
        .ok_or_else(|| Error::arg(format!("scale index must be below {}, got {k}", SCALE_FACTORS.len())))
}

/// Box-average downsample. Output dims are `ceil(dim / factor)`; edge blocks
/// average only the pixels that exist.
pub fn downsample(img: &RasterImage, factor: usize) -> Result<RasterImage> {
    check_factor(factor, img.width, img.height)?;
    if factor == 1 {
        return Ok(img.clone());
    }
    let ow = img.width.div_ceil(factor);
    let oh = img.height.div_ceil(factor);
    let ch = img.channels;
    let mut out = Vec::with_capacity(ow * oh * ch);
    for by in 0..oh {
        let y0 = by * factor;
        let y1 = (y0 + factor).min(img.height);
        for bx in 0..ow {
            let x0 = bx * factor;
            let x1 = (x0 + factor).min(img.width);
            let count = ((y1 - y0) * (x1 - x0)) as u32;
            for c in 0..ch {
                let mut sum = 0u32;
                for y in y0..y1 {
                    for x in x0..x1 {
                        sum += img.get(x, y, c) as u32;
                    }
                }
                out.push(((sum + count / 2) / count) as u8);
            }
        }
    }
    RasterImage::new(ow, oh, ch, out)
}

/// Bilinear upsample to exactly `target_w x target_h` (pixel-centre aligned,
/// edge clamped). The target must be the pre-downsample size, i.e.
/// `ceil(target / factor)` equals the input size.
pub fn upsample(img: &RasterImage, factor: usize, target_w: usize, target_h: usize) -> Result<RasterImage> {
    if !SCALE_FACTORS.contains(&factor) {
        return Err(Error::arg(format!(
            "scale factor must be one of {SCALE_FACTORS:?}, got {factor}"
        )));
    }
    if target_w < img.width || target_h < img.height {
        return Err(Error::arg(format!(
            "upsample target {target_w}x{target_h} is smaller than the {}x{} input",
            img.width, img.height
        )));
    }
    if target_w.div_ceil(factor) != img.width || target_h.div_ceil(factor) != img.height {
        return Err(Error::arg(format!(
            "{}x{} is not a factor-{factor} reduction of {target_w}x{target_h}",
            img.width, img.height
        )));
    }
    if target_w == img.width && target_h == img.height {
        return Ok(img.clone());
    }

    let taps = |out_len: usize, in_len: usize| -> Vec<(usize, usize, f64)> {
        let scale = in_len as f64 / out_len as f64;
        (0..out_len)
            .map(|i| {
                let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (in_len - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(in_len - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xs = taps(target_w, img.width);
    let ys = taps(target_h, img.height);
    let ch = img.channels;
    let mut out = Vec::with_capacity(target_w * target_h * ch);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..ch {
                let top = img.get(x0, y0, c) as f64 * (1.0 - fx) + img.get(x1, y0, c) as f64 * fx;
                let bot = img.get(x0, y1, c) as f64 * (1.0 - fx) + img.get(x1, y1, c) as f64 * fx;
                let v = top * (1.0 - fy) + bot * fy;
                out.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
    }
    RasterImage::new(target_w, target_h, ch, out)
}

/// Resize to a square working resolution (triangle filter).
pub fn resize_square(img: &RasterImage, side: usize) -> Result<RasterImage> {
    if side == 0 || side > MAX_DIMENSION {
        return Err(Error::arg(format!("working resolution {side} out of range")));
    }
    if img.width == side && img.height == side {
        return Ok(img.clone());
    }
    let resized = img
        .to_dynamic()
        .resize_exact(side as u32, side as u32, FilterType::Triangle);
    RasterImage::from_dynamic(resized)
}

/// Baseline sequential JPEG at the given libjpeg-scale quality: Annex K
/// tables scaled libjpeg-style, standard Huffman tables, 4:2:0 chroma for
/// colour input, a single component for grayscale.
pub fn jpeg_encode(img: &RasterImage, quality: u8) -> Vec<u8> {
    let mut out = Vec::new();
    let mut encoder = Encoder::new(&mut out, quality.clamp(1, 100));
    encoder.set_sampling_factor(SamplingFactor::F_2_2);
    let color = if img.channels == 1 {
        ColorType::Luma
    } else {
        ColorType::Rgb
    };
    encoder
        .encode(&img.pixels, img.width as u16, img.height as u16, color)
        .expect("dimensions are validated on construction");
    out
}

/// The quality-25 encoder every complexity metric uses.
pub fn jpeg_encode_q25(img: &RasterImage) -> Vec<u8> {
    jpeg_encode(img, COMPLEXITY_JPEG_QUALITY)
}

/// Uncompressed size in bytes (8-bit samples).
pub fn raw_size(img: &RasterImage) -> usize {
    img.width * img.height * img.channels
}

/// libjpeg quality scaling of an Annex K table (natural order).
pub fn scaled_quant_table(base: &[u16; 64], quality: u8) -> [u16; 64] {
    let q = quality.clamp(1, 100) as u32;
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let mut out = [0u16; 64];
    for (o, &b) in out.iter_mut().zip(base) {
        *o = ((b as u32 * scale + 50) / 100).clamp(1, 255) as u16;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, px: &[u8]) -> RasterImage {
        RasterImage::new(w, h, 1, px.to_vec()).unwrap()
    }

    #[test]
    fn construction_rejects_bad_buffers() {
        assert!(RasterImage::new(0, 2, 1, vec![]).is_err());
        assert!(RasterImage::new(2, 2, 2, vec![0; 8]).is_err());
        assert!(RasterImage::new(2, 2, 1, vec![0; 3]).is_err());
        assert!(MaskImage::new(1, 1, vec![2]).is_err());
    }

    #[test]
    fn decode_gray_and_rgb_png() {
        let g = gray(2, 2, &[0, 0, 0, 0]);
        assert_eq!(decode_image(&encode_png(&g)).unwrap(), g);
        let rgb = RasterImage::new(1, 1, 3, vec![255, 0, 0]).unwrap();
        assert_eq!(decode_image(&encode_png(&rgb)).unwrap(), rgb);
    }

    #[test]
    fn decode_sixteen_bit_png_rescales() {
        let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(2, 1, vec![0u16, 65535]).unwrap();
        let mut bytes = std::io::Cursor::new(Vec::new());
        DynamicImage::ImageLuma16(buf)
            .write_to(&mut bytes, image::ImageFormat::Png)
            .unwrap();
        let img = decode_image(bytes.get_ref()).unwrap();
        assert_eq!(img.pixels(), &[0, 255]);
    }

    #[test]
    fn decode_truncated_file_fails() {
        let bytes = encode_png(&gray(4, 4, &[7; 16]));
        let err = decode_image(&bytes[..bytes.len() / 2]).unwrap_err();
        assert!(matches!(err, Error::Decode { .. }));
    }

    #[test]
    fn load_error_names_path() {
        let err = load_image(Path::new("/nonexistent/x.png")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.png"));
    }

    #[test]
    fn grayscale_luma_rounding() {
        let img = RasterImage::new(2, 1, 3, vec![255, 255, 255, 0, 0, 255]).unwrap();
        let g = to_grayscale(&img);
        assert_eq!(g.pixels(), &[255, 29]);
        let already = gray(1, 1, &[9]);
        assert_eq!(to_grayscale(&already), already);
    }

    #[test]
    fn downsample_cases() {
        let img = gray(4, 4, &[100; 16]);
        assert_eq!(downsample(&img, 1).unwrap(), img);
        assert_eq!(downsample(&img, 2).unwrap(), gray(2, 2, &[100; 4]));
        // 127.5 rounds half up
        let step = gray(2, 2, &[0, 0, 255, 255]);
        assert_eq!(downsample(&step, 2).unwrap(), gray(1, 1, &[128]));
        assert!(matches!(
            downsample(&img, 8),
            Err(Error::ScaleTooDeep { factor: 8, .. })
        ));
        assert!(downsample(&img, 3).is_err());
    }

    #[test]
    fn downsample_partial_edge_blocks() {
        // 3x1 row, factor 2: blocks {10, 20} and {40}
        let img = RasterImage::new(3, 2, 1, vec![10, 20, 40, 10, 20, 40]).unwrap();
        let d = downsample(&img, 2).unwrap();
        assert_eq!((d.width(), d.height()), (2, 1));
        assert_eq!(d.pixels(), &[15, 40]);
    }

    #[test]
    fn upsample_cases() {
        let one = gray(1, 1, &[50]);
        assert_eq!(upsample(&one, 2, 2, 2).unwrap(), gray(2, 2, &[50; 4]));
        let img = gray(3, 3, &[1, 2, 3, 4, 5, 6, 7, 8, 9]);
        assert_eq!(upsample(&img, 1, 3, 3).unwrap(), img);
        assert!(upsample(&img, 2, 2, 2).is_err());
        assert!(upsample(&img, 2, 12, 12).is_err());
    }

    #[test]
    fn upsample_interpolates_between_samples() {
        let img = gray(2, 1, &[0, 200]);
        let up = upsample(&img, 2, 4, 2).unwrap();
        // centres map to -0.25, 0.25, 0.75, 1.25 -> clamped
        assert_eq!(&up.pixels()[..4], &[0, 50, 150, 200]);
    }

    #[test]
    fn constant_round_trip_every_factor() {
        for &f in &SCALE_FACTORS {
            for (w, h) in [(37, 29), (64, 64), (17, 33)] {
                let img = RasterImage::filled(w, h, 3, 173).unwrap();
                let d = downsample(&img, f).unwrap();
                let u = upsample(&d, f, w, h).unwrap();
                assert_eq!(u, img, "factor {f} dims {w}x{h}");
            }
        }
    }

    #[test]
    fn raw_size_arithmetic() {
        assert_eq!(raw_size(&RasterImage::filled(512, 512, 1, 0).unwrap()), 262_144);
        assert_eq!(raw_size(&RasterImage::filled(100, 100, 3, 0).unwrap()), 30_000);
        assert_eq!(raw_size(&RasterImage::filled(1, 1, 1, 0).unwrap()), 1);
    }

    #[test]
    fn jpeg_markers_and_determinism() {
        let img = RasterImage::new(33, 17, 3, (0..33 * 17 * 3).map(|i| (i * 7 % 251) as u8).collect()).unwrap();
        let a = jpeg_encode_q25(&img);
        let b = jpeg_encode_q25(&img);
        assert_eq!(a, b);
        assert_eq!(&a[..2], &[0xFF, 0xD8]);
        assert_eq!(&a[a.len() - 2..], &[0xFF, 0xD9]);
        let back = decode_image(&a).unwrap();
        assert_eq!((back.width(), back.height(), back.channels()), (33, 17, 3));
    }

    #[test]
    fn constant_image_compresses_hard() {
        let img = RasterImage::filled(512, 512, 3, 128).unwrap();
        let ratio = jpeg_encode_q25(&img).len() as f64 / raw_size(&img) as f64;
        assert!(ratio < 0.01, "ratio {ratio}");
        let gray = RasterImage::filled(512, 512, 1, 128).unwrap();
        let ratio = jpeg_encode_q25(&gray).len() as f64 / raw_size(&gray) as f64;
        assert!(ratio < 0.015, "ratio {ratio}");
    }

    #[test]
    fn q25_scaling_doubles_annex_k() {
        // quality 25 -> scale 200%
        let t = scaled_quant_table(&ANNEX_K_LUMA, 25);
        assert_eq!(t[0], 32);
        assert_eq!(t[1], 22);
        assert_eq!(t[63], 198);
        assert_eq!(scaled_quant_table(&ANNEX_K_LUMA, 50), ANNEX_K_LUMA);
    }

    #[test]
    fn rotate_and_flip_shapes() {
        let img = gray(3, 2, &[1, 2, 3, 4, 5, 6]);
        let r = img.rotate90();
        assert_eq!((r.width(), r.height()), (2, 3));
        assert_eq!(r.pixels(), &[4, 1, 5, 2, 6, 3]);
        assert_eq!(img.flip_horizontal().pixels(), &[3, 2, 1, 6, 5, 4]);
        assert_eq!(r.rotate90().rotate90().rotate90(), img);
    }

    #[test]
    fn mask_from_raster_and_resize() {
        let img = gray(2, 2, &[0, 255, 1, 0]);
        let m = MaskImage::from_raster(&img);
        assert_eq!(m.pixels(), &[0, 1, 1, 0]);
        let r = m.resize_nearest(4, 4).unwrap();
        assert_eq!(r.foreground_count(), 8);
    }
}
