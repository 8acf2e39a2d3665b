//! Page rasters and the enhancement chain for poor scans.
//!
//! The chain is: grayscale (luminosity weights), 2x upscale by pixel
//! replication, 3x3 erosion, 3x3 dilation, 3x3 median. Erosion and
//! dilation are the grayscale min/max filters, so on dark-on-light pages the
//! pair closes small light gaps inside glyphs and the median removes isolated
//! specks. Borders replicate the edge pixel.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{closed_enum, ScanQualityHint};

pub const DEFAULT_DPI: u32 = 300;
pub const SCALE_FACTOR: u32 = 2;
/// Pixels darker than this count as ink for the noise estimator.
pub const DARK_THRESHOLD: u8 = 128;
/// Pages whose isolated-dark-pixel fraction exceeds this are poor scans.
pub const NOISE_FRACTION_THRESHOLD: f64 = 0.002;
/// An isolated pixel has at least this many light 8-neighbours.
pub const ISOLATION_MIN_LIGHT_NEIGHBOURS: usize = 7;

closed_enum!(
    Channels { Rgb => "rgb", Gray => "gray" }
);

closed_enum!(
    QualityClass { Good => "good", Poor => "poor" }
);

impl Channels {
    pub fn count(self) -> usize {
        match self {
            Channels::Rgb => 3,
            Channels::Gray => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageImage {
    pub document_id: String,
    pub page_index: usize,
    pub width: u32,
    pub height: u32,
    pub channels: Channels,
    pub dpi: u32,
    /// Row-major, interleaved when `channels == Rgb`.
    pub pixels: Vec<u8>,
    pub quality_class: QualityClass,
}

impl PageImage {
    pub fn new(
        document_id: impl Into<String>,
        page_index: usize,
        width: u32,
        height: u32,
        channels: Channels,
        dpi: u32,
        pixels: Vec<u8>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Invalid(format!(
                "page image must be non-empty, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * channels.count();
        if pixels.len() != expected {
            return Err(Error::Invalid(format!(
                "pixel buffer has {} bytes, expected {expected}",
                pixels.len()
            )));
        }
        Ok(PageImage {
            document_id: document_id.into(),
            page_index,
            width,
            height,
            channels,
            dpi,
            pixels,
            quality_class: QualityClass::Good,
        })
    }

    /// Uniform page, mostly useful for fixtures.
    pub fn filled(
        document_id: impl Into<String>,
        page_index: usize,
        width: u32,
        height: u32,
        channels: Channels,
        value: u8,
    ) -> Result<Self> {
        let len = width as usize * height as usize * channels.count();
        Self::new(document_id, page_index, width, height, channels, DEFAULT_DPI, vec![value; len])
    }

    pub fn gray_at(&self, x: u32, y: u32) -> u8 {
        let i = (y as usize * self.width as usize + x as usize) * self.channels.count();
        match self.channels {
            Channels::Gray => self.pixels[i],
            Channels::Rgb => luminance(self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]),
        }
    }

    pub fn to_gray(&self) -> PageImage {
        let pixels = match self.channels {
            Channels::Gray => self.pixels.clone(),
            Channels::Rgb => self
                .pixels
                .chunks_exact(3)
                .map(|p| luminance(p[0], p[1], p[2]))
                .collect(),
        };
        PageImage {
            channels: Channels::Gray,
            pixels,
            ..self.clone()
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let color = match self.channels {
            Channels::Gray => image::ExtendedColorType::L8,
            Channels::Rgb => image::ExtendedColorType::Rgb8,
        };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        image::save_buffer_with_format(
            path,
            &self.pixels,
            self.width,
            self.height,
            color,
            image::ImageFormat::Png,
        )
        .map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
    }
}

/// ITU-R BT.601 luma, rounded to nearest.
pub fn luminance(r: u8, g: u8, b: u8) -> u8 {
    let y = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    ((y + 500) / 1000) as u8
}

/// Fraction of pixels that are dark and surrounded by light neighbours.
/// Out-of-page neighbours count as light.
pub fn isolated_dark_fraction(image: &PageImage) -> f64 {
    let (w, h) = (image.width as i64, image.height as i64);
    let gray = image.to_gray();
    let at = |x: i64, y: i64| -> u8 {
        if x < 0 || y < 0 || x >= w || y >= h {
            255
        } else {
            gray.pixels[(y * w + x) as usize]
        }
    };
    let mut isolated = 0usize;
    for y in 0..h {
        for x in 0..w {
            if at(x, y) >= DARK_THRESHOLD {
                continue;
            }
            let light = NEIGHBOURS
                .iter()
                .filter(|(dx, dy)| at(x + dx, y + dy) >= DARK_THRESHOLD)
                .count();
            if light >= ISOLATION_MIN_LIGHT_NEIGHBOURS {
                isolated += 1;
            }
        }
    }
    isolated as f64 / (w * h) as f64
}

const NEIGHBOURS: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

pub fn estimate_quality(image: &PageImage) -> QualityClass {
    if isolated_dark_fraction(image) > NOISE_FRACTION_THRESHOLD {
        QualityClass::Poor
    } else {
        QualityClass::Good
    }
}

/// Partitions pages into good and poor scans. A manifest hint forces every
/// page into its class; otherwise each page is judged by the noise estimator.
pub fn split_scan_quality(
    images: Vec<PageImage>,
    hint: ScanQualityHint,
) -> (Vec<PageImage>, Vec<PageImage>) {
    let mut good = Vec::new();
    let mut poor = Vec::new();
    for mut image in images {
        let class = match hint {
            ScanQualityHint::Good => QualityClass::Good,
            ScanQualityHint::Poor => QualityClass::Poor,
            ScanQualityHint::Unknown => estimate_quality(&image),
        };
        image.quality_class = class;
        match class {
            QualityClass::Good => good.push(image),
            QualityClass::Poor => poor.push(image),
        }
    }
    (good, poor)
}

/// Runs the full enhancement chain on a poor scan.
pub fn enhance_image(image: &PageImage) -> Result<PageImage> {
    if image.quality_class != QualityClass::Poor {
        return Err(Error::Precondition {
            id: image.document_id.clone(),
            message: format!("page {} is not marked as a poor scan", image.page_index),
        });
    }
    let gray = image.to_gray();
    let (w, h) = (gray.width as usize, gray.height as usize);
    let scaled = upscale(&gray.pixels, w, h, SCALE_FACTOR as usize);
    let (w, h) = (w * SCALE_FACTOR as usize, h * SCALE_FACTOR as usize);
    let cleaned = clean_gray(&scaled, w, h);
    Ok(PageImage {
        width: w as u32,
        height: h as u32,
        channels: Channels::Gray,
        pixels: cleaned,
        ..gray
    })
}

/// Erode, dilate and median-filter a grayscale buffer. This is the part of
/// the chain that does not change geometry.
pub fn clean_gray(pixels: &[u8], width: usize, height: usize) -> Vec<u8> {
    let eroded = erode(pixels, width, height);
    let opened = dilate(&eroded, width, height);
    median3(&opened, width, height)
}

/// Pixel-replication upscale by an integer factor.
pub fn upscale(pixels: &[u8], width: usize, height: usize, factor: usize) -> Vec<u8> {
    let out_w = width * factor;
    let mut out = Vec::with_capacity(out_w * height * factor);
    for y in 0..height {
        let row: Vec<u8> = pixels[y * width..(y + 1) * width]
            .iter()
            .flat_map(|&p| std::iter::repeat_n(p, factor))
            .collect();
        for _ in 0..factor {
            out.extend_from_slice(&row);
        }
    }
    out
}

fn window3<F>(pixels: &[u8], width: usize, height: usize, mut reduce: F) -> Vec<u8>
where
    F: FnMut(&[u8; 9]) -> u8,
{
    let mut out = vec![0u8; pixels.len()];
    let mut window = [0u8; 9];
    for y in 0..height {
        let rows = [y.saturating_sub(1), y, (y + 1).min(height - 1)];
        for x in 0..width {
            let cols = [x.saturating_sub(1), x, (x + 1).min(width - 1)];
            let mut k = 0;
            for &ry in &rows {
                for &cx in &cols {
                    window[k] = pixels[ry * width + cx];
                    k += 1;
                }
            }
            out[y * width + x] = reduce(&window);
        }
    }
    out
}

/// 3x3 rectangular erosion (minimum filter).
pub fn erode(pixels: &[u8], width: usize, height: usize) -> Vec<u8> {
    window3(pixels, width, height, |w| *w.iter().min().unwrap())
}

/// 3x3 rectangular dilation (maximum filter).
pub fn dilate(pixels: &[u8], width: usize, height: usize) -> Vec<u8> {
    window3(pixels, width, height, |w| *w.iter().max().unwrap())
}

/// Median filter with radius 1.
pub fn median3(pixels: &[u8], width: usize, height: usize) -> Vec<u8> {
    window3(pixels, width, height, |w| {
        let mut sorted = *w;
        sorted.sort_unstable();
        sorted[4]
    })
}

/// Debug dump location: `<store>/<parliament>/<id>/pages/page-NNNN.png`.
pub fn debug_page_path(store: &Path, parliament: &str, id: &str, page_index: usize) -> PathBuf {
    store
        .join(parliament)
        .join(id)
        .join("pages")
        .join(format!("page-{page_index:04}.png"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poor(mut image: PageImage) -> PageImage {
        image.quality_class = QualityClass::Poor;
        image
    }

    #[test]
    fn white_rgb_page_stays_white_and_doubles() {
        let page = poor(PageImage::filled("d", 0, 100, 100, Channels::Rgb, 255).unwrap());
        let out = enhance_image(&page).unwrap();
        assert_eq!((out.width, out.height), (200, 200));
        assert_eq!(out.channels, Channels::Gray);
        assert!(out.pixels.iter().all(|&p| p == 255));
    }

    #[test]
    fn single_black_pixel_is_removed() {
        // Hand evaluation: replication turns the pixel into a 2x2 block;
        // erosion grows it to 4x4, dilation shrinks it back to 2x2; every
        // 3x3 median window then holds at most four dark values.
        let mut page = PageImage::filled("d", 0, 5, 5, Channels::Gray, 255).unwrap();
        page.pixels[2 * 5 + 2] = 0;
        let out = enhance_image(&poor(page)).unwrap();
        assert_eq!((out.width, out.height), (10, 10));
        assert!(out.pixels.iter().all(|&p| p == 255));
    }

    #[test]
    fn opening_keeps_the_block_before_median() {
        let mut px = vec![255u8; 36];
        for (x, y) in [(2, 2), (3, 2), (2, 3), (3, 3)] {
            px[y * 6 + x] = 0;
        }
        let eroded = erode(&px, 6, 6);
        assert_eq!(eroded.iter().filter(|&&p| p == 0).count(), 16);
        let opened = dilate(&eroded, 6, 6);
        assert_eq!(opened, px);
    }

    #[test]
    fn one_by_one_only_scales() {
        let page = poor(PageImage::filled("d", 0, 1, 1, Channels::Gray, 42).unwrap());
        let out = enhance_image(&page).unwrap();
        assert_eq!((out.width, out.height), (2, 2));
        assert_eq!(out.pixels, vec![42; 4]);
    }

    #[test]
    fn enhance_requires_poor_class() {
        let page = PageImage::filled("d", 0, 4, 4, Channels::Gray, 0).unwrap();
        assert!(enhance_image(&page).is_err());
    }

    #[test]
    fn hints_force_the_split() {
        let pages: Vec<_> = (0..5)
            .map(|i| PageImage::filled("d", i, 8, 8, Channels::Gray, 255).unwrap())
            .collect();
        let (g, p) = split_scan_quality(pages.clone(), ScanQualityHint::Good);
        assert_eq!((g.len(), p.len()), (5, 0));
        let (g, p) = split_scan_quality(pages, ScanQualityHint::Poor);
        assert_eq!((g.len(), p.len()), (0, 5));
        assert!(p.iter().all(|i| i.quality_class == QualityClass::Poor));
    }

    #[test]
    fn luminance_weights() {
        assert_eq!(luminance(255, 255, 255), 255);
        assert_eq!(luminance(0, 0, 0), 0);
        assert_eq!(luminance(255, 0, 0), 76);
        assert_eq!(luminance(0, 255, 0), 150);
        assert_eq!(luminance(0, 0, 255), 29);
    }

    #[test]
    fn rejects_mismatched_buffer() {
        assert!(PageImage::new("d", 0, 2, 2, Channels::Rgb, 300, vec![0; 4]).is_err());
        assert!(PageImage::new("d", 0, 0, 2, Channels::Gray, 300, vec![]).is_err());
    }
}
