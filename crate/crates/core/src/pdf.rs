//! PDF access: page counting, text-layer extraction, classification and a
//! raster renderer for scanned pages.
//!
//! Scanned protocols are one or more image XObjects painted onto each page.
//! The renderer follows the page content stream, tracks the current
//! transformation matrix and paints every image XObject onto a white
//! canvas sized from the page's MediaBox at the requested resolution.
//! Vector graphics and text are ignored.

use std::collections::BTreeMap;
use std::path::Path;

use lopdf::content::Content;
use lopdf::{Dictionary, Document, Encoding, Object, ObjectId};

use crate::error::{Error, Result};
use crate::imaging::{Channels, PageImage};
use crate::manifest::FormatHint;
use crate::record::{Classification, DocumentRecord, State};

/// Minimum average of non-whitespace text-layer characters per page for a
/// document to count as readable.
pub const DEFAULT_READABLE_THRESHOLD: f64 = 50.0;

pub struct PdfDocument {
    id: String,
    doc: Document,
}

impl PdfDocument {
    pub fn open(id: &str, path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(id, &bytes)
    }

    pub fn from_bytes(id: &str, bytes: &[u8]) -> Result<Self> {
        let doc = Document::load_mem(bytes).map_err(|e| Error::Classification {
            id: id.to_string(),
            message: format!("unreadable PDF: {e}"),
        })?;
        Ok(PdfDocument {
            id: id.to_string(),
            doc,
        })
    }

    fn pages(&self) -> Vec<ObjectId> {
        self.doc.get_pages().into_values().collect()
    }

    pub fn page_count(&self) -> usize {
        self.doc.get_pages().len()
    }

    /// Text layer of every page, in page order.
    pub fn page_texts(&self) -> Result<Vec<String>> {
        self.pages()
            .into_iter()
            .map(|page| self.page_text(page))
            .collect()
    }

    fn page_text(&self, page: ObjectId) -> Result<String> {
        let fail = |message: String| Error::Extraction {
            id: self.id.clone(),
            message,
        };
        let fonts = self.doc.get_page_fonts(page).map_err(|e| fail(e.to_string()))?;
        let encodings: BTreeMap<Vec<u8>, Option<Encoding<'_>>> = fonts
            .into_iter()
            .map(|(name, font)| (name, font.get_font_encoding(&self.doc).ok()))
            .collect();
        let data = self
            .doc
            .get_page_content(page)
            .map_err(|e| fail(e.to_string()))?;
        let content = Content::decode(&data).map_err(|e| fail(e.to_string()))?;

        let mut out = String::new();
        let mut encoding: Option<&Encoding<'_>> = None;
        let mut line_y: Option<f32> = None;
        let newline = |out: &mut String| {
            if !out.is_empty() && !out.ends_with('\n') {
                out.push('\n');
            }
        };
        for op in &content.operations {
            let operands = &op.operands;
            match op.operator.as_str() {
                "Tf" => {
                    encoding = operands
                        .first()
                        .and_then(|o| o.as_name().ok())
                        .and_then(|name| encodings.get(name))
                        .and_then(Option::as_ref);
                }
                "Td" | "TD" => {
                    let ty = operands.get(1).and_then(number).unwrap_or(0.0);
                    if ty.abs() > f32::EPSILON {
                        newline(&mut out);
                    } else if operands.first().and_then(number).unwrap_or(0.0) > 0.0
                        && !out.is_empty()
                        && !out.ends_with(char::is_whitespace)
                    {
                        out.push(' ');
                    }
                }
                "Tm" => {
                    let y = operands.get(5).and_then(number);
                    if y.is_some() && line_y.is_some() && y != line_y {
                        newline(&mut out);
                    }
                    line_y = y;
                }
                "T*" => newline(&mut out),
                "BT" => line_y = None,
                "ET" => newline(&mut out),
                "Tj" => {
                    if let Some(bytes) = operands.first().and_then(|o| o.as_str().ok()) {
                        out.push_str(&decode_bytes(encoding, bytes));
                    }
                }
                "'" | "\"" => {
                    newline(&mut out);
                    if let Some(bytes) = operands.last().and_then(|o| o.as_str().ok()) {
                        out.push_str(&decode_bytes(encoding, bytes));
                    }
                }
                "TJ" => {
                    if let Some(items) = operands.first().and_then(|o| o.as_array().ok()) {
                        for item in items {
                            match item {
                                Object::String(bytes, _) => {
                                    out.push_str(&decode_bytes(encoding, bytes))
                                }
                                other => {
                                    // Large negative kerning is a word gap.
                                    if number(other).is_some_and(|n| n < -250.0)
                                        && !out.ends_with(char::is_whitespace)
                                    {
                                        out.push(' ');
                                    }
                                }
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        while out.ends_with('\n') {
            out.pop();
        }
        Ok(out)
    }

    /// Average number of non-whitespace text-layer characters per page.
    pub fn chars_per_page(&self) -> Result<f64> {
        let texts = self.page_texts()?;
        if texts.is_empty() {
            return Ok(0.0);
        }
        let total: usize = texts
            .iter()
            .map(|t| t.chars().filter(|c| !c.is_whitespace()).count())
            .sum();
        Ok(total as f64 / texts.len() as f64)
    }

    fn media_box(&self, page: ObjectId) -> [f32; 4] {
        let mut node = self.doc.get_dictionary(page).ok();
        while let Some(dict) = node {
            if let Ok(Object::Array(items)) = dict.get(b"MediaBox") {
                let nums: Vec<f32> = items
                    .iter()
                    .filter_map(|o| self.resolve(o).and_then(number))
                    .collect();
                if nums.len() == 4 {
                    return [nums[0], nums[1], nums[2], nums[3]];
                }
            }
            node = dict
                .get(b"Parent")
                .and_then(Object::as_reference)
                .and_then(|id| self.doc.get_dictionary(id))
                .ok();
        }
        // US Letter is the PDF default.
        [0.0, 0.0, 612.0, 792.0]
    }

    fn resolve<'a>(&'a self, object: &'a Object) -> Option<&'a Object> {
        self.doc.dereference(object).ok().map(|(_, o)| o)
    }

    fn page_xobjects(&self, page: ObjectId) -> BTreeMap<Vec<u8>, ObjectId> {
        let mut found = BTreeMap::new();
        let Ok((direct, inherited)) = self.doc.get_page_resources(page) else {
            return found;
        };
        let mut collect = |resources: &Dictionary| {
            let xobjects = resources
                .get(b"XObject")
                .ok()
                .and_then(|o| self.resolve(o))
                .and_then(|o| o.as_dict().ok());
            if let Some(xobjects) = xobjects {
                for (name, value) in xobjects.iter() {
                    if let Ok(id) = value.as_reference() {
                        found.entry(name.clone()).or_insert(id);
                    }
                }
            }
        };
        if let Some(resources) = direct {
            collect(resources);
        }
        for id in inherited {
            if let Ok(resources) = self.doc.get_dictionary(id) {
                collect(resources);
            }
        }
        found
    }

    /// Renders page `index` (0-based) at `dpi`.
    pub fn render_page(&self, index: usize, dpi: u32) -> Result<PageImage> {
        let fail = |message: String| Error::Render {
            id: self.id.clone(),
            page: index,
            message,
        };
        let page = *self
            .pages()
            .get(index)
            .ok_or_else(|| fail("no such page".into()))?;
        let [x0, y0, x1, y1] = self.media_box(page);
        let scale = dpi as f32 / 72.0;
        let width = (((x1 - x0).abs() * scale).round() as u32).max(1);
        let height = (((y1 - y0).abs() * scale).round() as u32).max(1);
        let mut canvas = Canvas::new(width, height);
        let device = Matrix([scale, 0.0, 0.0, -scale, -x0.min(x1) * scale, y0.max(y1) * scale]);

        let xobjects = self.page_xobjects(page);
        let data = self
            .doc
            .get_page_content(page)
            .map_err(|e| fail(e.to_string()))?;
        let content = Content::decode(&data).map_err(|e| fail(e.to_string()))?;

        let mut ctm = Matrix::IDENTITY;
        let mut stack = Vec::new();
        for op in &content.operations {
            match op.operator.as_str() {
                "q" => stack.push(ctm),
                "Q" => ctm = stack.pop().unwrap_or(Matrix::IDENTITY),
                "cm" => {
                    let m: Vec<f32> = op.operands.iter().filter_map(number).collect();
                    if m.len() == 6 {
                        ctm = Matrix([m[0], m[1], m[2], m[3], m[4], m[5]]).then(&ctm);
                    }
                }
                "Do" => {
                    let Some(id) = op
                        .operands
                        .first()
                        .and_then(|o| o.as_name().ok())
                        .and_then(|name| xobjects.get(name))
                    else {
                        continue;
                    };
                    let Ok(stream) = self.doc.get_object(*id).and_then(Object::as_stream) else {
                        continue;
                    };
                    if stream.dict.get(b"Subtype").and_then(Object::as_name).ok() != Some(b"Image") {
                        continue;
                    }
                    let image = decode_image(&self.doc, stream).map_err(fail)?;
                    canvas.paint(&image, &ctm.then(&device));
                }
                _ => {}
            }
        }
        canvas.into_page_image(&self.id, index, dpi)
    }
}

fn number(object: &Object) -> Option<f32> {
    match object {
        Object::Integer(i) => Some(*i as f32),
        Object::Real(r) => Some(*r),
        _ => None,
    }
}

const CP1252_HIGH: [char; 32] = [
    '€', '\u{81}', '‚', 'ƒ', '„', '…', '†', '‡', 'ˆ', '‰', 'Š', '‹', 'Œ', '\u{8d}', 'Ž', '\u{8f}',
    '\u{90}', '‘', '’', '“', '”', '•', '–', '—', '˜', '™', 'š', '›', 'œ', '\u{9d}', 'ž', 'Ÿ',
];

fn decode_bytes(encoding: Option<&Encoding<'_>>, bytes: &[u8]) -> String {
    if let Some(text) = encoding.and_then(|enc| Document::decode_text(enc, bytes).ok()) {
        return text;
    }
    // Fonts without a usable encoding are read as Windows-1252.
    bytes
        .iter()
        .map(|&b| match b {
            0x80..=0x9f => CP1252_HIGH[(b - 0x80) as usize],
            _ => b as char,
        })
        .collect()
}

/// Affine matrix `[a b c d e f]` in PDF convention (row vector times matrix).
#[derive(Debug, Clone, Copy)]
struct Matrix([f32; 6]);

impl Matrix {
    const IDENTITY: Matrix = Matrix([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);

    /// `self` followed by `next`.
    fn then(&self, next: &Matrix) -> Matrix {
        let [a, b, c, d, e, f] = self.0;
        let [a2, b2, c2, d2, e2, f2] = next.0;
        Matrix([
            a * a2 + b * c2,
            a * b2 + b * d2,
            c * a2 + d * c2,
            c * b2 + d * d2,
            e * a2 + f * c2 + e2,
            e * b2 + f * d2 + f2,
        ])
    }

    fn apply(&self, x: f32, y: f32) -> (f32, f32) {
        let [a, b, c, d, e, f] = self.0;
        (a * x + c * y + e, b * x + d * y + f)
    }

    fn invert(&self) -> Option<Matrix> {
        let [a, b, c, d, e, f] = self.0;
        let det = a * d - b * c;
        if det.abs() < 1e-12 {
            return None;
        }
        let (ia, ib, ic, id) = (d / det, -b / det, -c / det, a / det);
        Some(Matrix([ia, ib, ic, id, -(e * ia + f * ic), -(e * ib + f * id)]))
    }
}

struct DecodedImage {
    width: usize,
    height: usize,
    rgb: bool,
    data: Vec<u8>,
}

fn decode_image(doc: &Document, stream: &lopdf::Stream) -> std::result::Result<DecodedImage, String> {
    let dict = &stream.dict;
    let get_int = |key: &[u8]| -> Option<i64> {
        dict.get(key)
            .ok()
            .and_then(|o| doc.dereference(o).ok())
            .and_then(|(_, o)| o.as_i64().ok())
    };
    let width = get_int(b"Width").ok_or("image without /Width")? as usize;
    let height = get_int(b"Height").ok_or("image without /Height")? as usize;
    if width == 0 || height == 0 {
        return Err("empty image".into());
    }
    let filters: Vec<Vec<u8>> = stream
        .filters()
        .map(|f| f.into_iter().map(<[u8]>::to_vec).collect())
        .unwrap_or_default();

    if filters.iter().any(|f| f == b"DCTDecode") {
        let img = image::load_from_memory_with_format(&stream.content, image::ImageFormat::Jpeg)
            .map_err(|e| format!("bad JPEG image: {e}"))?;
        let rgb = img.color().has_color();
        let data = if rgb {
            img.to_rgb8().into_raw()
        } else {
            img.to_luma8().into_raw()
        };
        return Ok(DecodedImage {
            width: img.width() as usize,
            height: img.height() as usize,
            rgb,
            data,
        });
    }
    if let Some(f) = filters
        .iter()
        .find(|f| f.as_slice() != b"FlateDecode" && f.as_slice() != b"DCTDecode")
    {
        return Err(format!(
            "unsupported image filter {}",
            String::from_utf8_lossy(f)
        ));
    }
    let raw = if filters.is_empty() {
        stream.content.clone()
    } else {
        stream
            .decompressed_content()
            .map_err(|e| format!("cannot inflate image: {e}"))?
    };

    let components = match dict
        .get(b"ColorSpace")
        .ok()
        .and_then(|o| doc.dereference(o).ok())
        .map(|(_, o)| o)
    {
        Some(Object::Name(n)) if n == b"DeviceRGB" || n == b"CalRGB" => 3,
        Some(Object::Name(n)) if n == b"DeviceCMYK" => 4,
        Some(Object::Name(_)) | None => 1,
        Some(Object::Array(items)) => match items.first().and_then(|o| o.as_name().ok()) {
            Some(b"ICCBased") => items
                .get(1)
                .and_then(|o| o.as_reference().ok())
                .and_then(|id| doc.get_object(id).ok())
                .and_then(|o| o.as_stream().ok())
                .and_then(|s| s.dict.get(b"N").ok())
                .and_then(|n| n.as_i64().ok())
                .unwrap_or(1) as usize,
            Some(b"CalRGB") => 3,
            Some(b"CalGray") => 1,
            other => {
                return Err(format!(
                    "unsupported color space {}",
                    String::from_utf8_lossy(other.unwrap_or(b"?"))
                ))
            }
        },
        Some(_) => return Err("malformed /ColorSpace".into()),
    };
    let bpc = get_int(b"BitsPerComponent").unwrap_or(8);
    let inverted = matches!(
        dict.get(b"Decode").and_then(Object::as_array),
        Ok(d) if d.first().and_then(number) == Some(1.0)
    );

    let samples: Vec<u8> = match bpc {
        8 => raw,
        1 => {
            let row_bytes = (width * components).div_ceil(8);
            let mut out = Vec::with_capacity(width * height * components);
            for row in raw.chunks(row_bytes).take(height) {
                for i in 0..width * components {
                    let bit = (row.get(i / 8).copied().unwrap_or(0) >> (7 - i % 8)) & 1;
                    out.push(if bit == 1 { 255 } else { 0 });
                }
            }
            out
        }
        other => return Err(format!("unsupported BitsPerComponent {other}")),
    };
    let expected = width * height * components;
    if samples.len() < expected {
        return Err(format!(
            "image data too short: {} bytes for {width}x{height}x{components}",
            samples.len()
        ));
    }
    let samples = &samples[..expected];
    let (rgb, mut data) = match components {
        1 => (false, samples.to_vec()),
        3 => (true, samples.to_vec()),
        4 => (
            true,
            samples
                .chunks_exact(4)
                .flat_map(|p| {
                    let k = 255 - p[3] as u32;
                    [0, 1, 2].map(|i| ((255 - p[i] as u32) * k / 255) as u8)
                })
                .collect(),
        ),
        n => return Err(format!("unsupported component count {n}")),
    };
    if inverted {
        data.iter_mut().for_each(|p| *p = 255 - *p);
    }
    Ok(DecodedImage {
        width,
        height,
        rgb,
        data,
    })
}

struct Canvas {
    width: u32,
    height: u32,
    rgb: Vec<u8>,
    colored: bool,
}

impl Canvas {
    fn new(width: u32, height: u32) -> Self {
        Canvas {
            width,
            height,
            rgb: vec![255; width as usize * height as usize * 3],
            colored: false,
        }
    }

    /// Paints `image` whose unit square maps to device space through `to_device`.
    fn paint(&mut self, image: &DecodedImage, to_device: &Matrix) {
        let Some(inverse) = to_device.invert() else {
            return;
        };
        self.colored |= image.rgb;
        let corners = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)].map(|(x, y)| to_device.apply(x, y));
        let min_x = corners.iter().map(|c| c.0).fold(f32::INFINITY, f32::min);
        let max_x = corners.iter().map(|c| c.0).fold(f32::NEG_INFINITY, f32::max);
        let min_y = corners.iter().map(|c| c.1).fold(f32::INFINITY, f32::min);
        let max_y = corners.iter().map(|c| c.1).fold(f32::NEG_INFINITY, f32::max);
        let x_range = (min_x.floor().max(0.0) as u32)..(max_x.ceil().min(self.width as f32) as u32);
        let y_range = (min_y.floor().max(0.0) as u32)..(max_y.ceil().min(self.height as f32) as u32);
        let channels = if image.rgb { 3 } else { 1 };
        for py in y_range {
            for px in x_range.clone() {
                let (u, v) = inverse.apply(px as f32 + 0.5, py as f32 + 0.5);
                if !(0.0..1.0).contains(&u) || !(0.0..1.0).contains(&v) {
                    continue;
                }
                let col = ((u * image.width as f32) as usize).min(image.width - 1);
                let row = (((1.0 - v) * image.height as f32) as usize).min(image.height - 1);
                let src = (row * image.width + col) * channels;
                let dst = (py as usize * self.width as usize + px as usize) * 3;
                if image.rgb {
                    self.rgb[dst..dst + 3].copy_from_slice(&image.data[src..src + 3]);
                } else {
                    self.rgb[dst..dst + 3].fill(image.data[src]);
                }
            }
        }
    }

    fn into_page_image(self, id: &str, index: usize, dpi: u32) -> Result<PageImage> {
        if self.colored {
            PageImage::new(id, index, self.width, self.height, Channels::Rgb, dpi, self.rgb)
        } else {
            let gray = self.rgb.chunks_exact(3).map(|p| p[0]).collect();
            PageImage::new(id, index, self.width, self.height, Channels::Gray, dpi, gray)
        }
    }
}

/// Decides whether a fetched document has a usable text layer. A manifest
/// format hint other than `unknown` wins over the character heuristic, but
/// the file still has to parse so the page count is known.
pub fn classify_document(record: &DocumentRecord, threshold: f64) -> Result<DocumentRecord> {
    if record.state > State::Classified {
        return Err(Error::Precondition {
            id: record.id.clone(),
            message: format!("expected a fetched record, found state {}", record.state),
        });
    }
    let pdf = PdfDocument::open(&record.id, &record.local_path).map_err(|e| match e {
        Error::Io { source, .. } => Error::Classification {
            id: record.id.clone(),
            message: source.to_string(),
        },
        other => other,
    })?;
    let pages = pdf.page_count();
    if pages == 0 {
        return Err(Error::Classification {
            id: record.id.clone(),
            message: "PDF has no pages".into(),
        });
    }
    let classification = match record.format_hint {
        FormatHint::Readable => Classification::Readable,
        FormatHint::Scanned => Classification::Scanned,
        FormatHint::Unknown => {
            let density = pdf.chars_per_page().map_err(|e| Error::Classification {
                id: record.id.clone(),
                message: e.to_string(),
            })?;
            if density >= threshold {
                Classification::Readable
            } else {
                Classification::Scanned
            }
        }
    };
    let mut out = record.clone();
    out.classification = Some(classification);
    out.provenance = Some(classification.into());
    out.script = Some(record.script_hint.resolve());
    out.page_count = Some(pages as u32);
    out.advance(State::Classified)?;
    Ok(out)
}

/// Renders every page of a scanned document. On failure the error names the
/// page; pages rendered before it are returned alongside.
pub fn rasterize_pages(
    record: &DocumentRecord,
    dpi: u32,
) -> std::result::Result<(DocumentRecord, Vec<PageImage>), (Vec<PageImage>, Error)> {
    if let Err(e) = record.require_classification(Classification::Scanned) {
        return Err((Vec::new(), e));
    }
    let pdf = match PdfDocument::open(&record.id, &record.local_path) {
        Ok(pdf) => pdf,
        Err(e) => return Err((Vec::new(), e)),
    };
    let mut images = Vec::with_capacity(pdf.page_count());
    for index in 0..pdf.page_count() {
        match pdf.render_page(index, dpi) {
            Ok(image) => images.push(image),
            Err(e) => return Err((images, e)),
        }
    }
    let mut out = record.clone();
    out.advance(State::Imaged).map_err(|e| (Vec::new(), e))?;
    Ok((out, images))
}

pub mod synth {
    //! Minimal PDF writers for fixtures and smoke tests: text-layer pages
    //! in Helvetica/WinAnsi and image-only "scanned" pages.

    use lopdf::content::{Content, Operation};
    use lopdf::{dictionary, Document, Object, Stream};

    use crate::imaging::{Channels, PageImage};

    pub const A4_POINTS: (f32, f32) = (595.28, 841.89);

    fn encode_win_ansi(text: &str) -> Vec<u8> {
        text.chars()
            .map(|c| match c {
                '€' => 0x80,
                '„' => 0x84,
                '“' => 0x93,
                '”' => 0x94,
                '–' => 0x96,
                '—' => 0x97,
                c if (c as u32) < 256 => c as u8,
                _ => b'?',
            })
            .collect()
    }

    fn finish(mut doc: Document, pages_id: lopdf::ObjectId, kids: Vec<Object>) -> Vec<u8> {
        let count = kids.len() as i64;
        doc.objects.insert(
            pages_id,
            Object::Dictionary(dictionary! {
                "Type" => "Pages",
                "Kids" => kids,
                "Count" => count,
            }),
        );
        let catalog = doc.add_object(dictionary! { "Type" => "Catalog", "Pages" => pages_id });
        doc.trailer.set("Root", catalog);
        let mut out = Vec::new();
        doc.save_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// One page per entry; each page is a list of text lines.
    pub fn text_pdf(pages: &[Vec<String>]) -> Vec<u8> {
        let mut doc = Document::with_version("1.5");
        let pages_id = doc.new_object_id();
        let font = doc.add_object(dictionary! {
            "Type" => "Font",
            "Subtype" => "Type1",
            "BaseFont" => "Helvetica",
            "Encoding" => "WinAnsiEncoding",
        });
        let resources = doc.add_object(dictionary! { "Font" => dictionary! { "F1" => font } });
        let mut kids = Vec::new();
        for lines in pages {
            let mut ops = vec![
                Operation::new("BT", vec![]),
                Operation::new("Tf", vec!["F1".into(), 11.into()]),
                Operation::new("TL", vec![14.into()]),
                Operation::new("Td", vec![56.into(), 780.into()]),
            ];
            for (i, line) in lines.iter().enumerate() {
                if i > 0 {
                    ops.push(Operation::new("T*", vec![]));
                }
                ops.push(Operation::new(
                    "Tj",
                    vec![Object::string_literal(encode_win_ansi(line))],
                ));
            }
            ops.push(Operation::new("ET", vec![]));
            let content = Content { operations: ops };
            let stream = doc.add_object(Stream::new(
                dictionary! {},
                content.encode().expect("content encodes"),
            ));
            let page = doc.add_object(dictionary! {
                "Type" => "Page",
                "Parent" => pages_id,
                "MediaBox" => vec![0.into(), 0.into(), A4_POINTS.0.into(), A4_POINTS.1.into()],
                "Contents" => stream,
                "Resources" => resources,
            });
            kids.push(page.into());
        }
        finish(doc, pages_id, kids)
    }

    /// One A4 page per image, each image stretched over the full page.
    /// `None` produces a page without any content.
    pub fn image_pdf(pages: &[Option<&PageImage>]) -> Vec<u8> {
        let mut doc = Document::with_version("1.5");
        let pages_id = doc.new_object_id();
        let (w_pt, h_pt) = A4_POINTS;
        let mut kids = Vec::new();
        for image in pages {
            let mut page = dictionary! {
                "Type" => "Page",
                "Parent" => pages_id,
                "MediaBox" => vec![0.into(), 0.into(), w_pt.into(), h_pt.into()],
            };
            if let Some(image) = image {
                let color_space = match image.channels {
                    Channels::Gray => "DeviceGray",
                    Channels::Rgb => "DeviceRGB",
                };
                let mut stream = Stream::new(
                    dictionary! {
                        "Type" => "XObject",
                        "Subtype" => "Image",
                        "Width" => image.width as i64,
                        "Height" => image.height as i64,
                        "ColorSpace" => color_space,
                        "BitsPerComponent" => 8,
                    },
                    image.pixels.clone(),
                );
                let _ = stream.compress();
                let xobject = doc.add_object(stream);
                let content = Content {
                    operations: vec![
                        Operation::new("q", vec![]),
                        Operation::new(
                            "cm",
                            vec![w_pt.into(), 0.into(), 0.into(), h_pt.into(), 0.into(), 0.into()],
                        ),
                        Operation::new("Do", vec!["Im0".into()]),
                        Operation::new("Q", vec![]),
                    ],
                };
                let contents = doc.add_object(Stream::new(
                    dictionary! {},
                    content.encode().expect("content encodes"),
                ));
                page.set("Contents", contents);
                page.set(
                    "Resources",
                    dictionary! { "XObject" => dictionary! { "Im0" => xobject } },
                );
            }
            kids.push(doc.add_object(page).into());
        }
        finish(doc, pages_id, kids)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_layer_lines_come_back_in_order() {
        let bytes = synth::text_pdf(&[
            vec!["Sitzung des Landtags".into(), "Bundes-".into(), "regierung".into()],
            vec!["Zweite Seite".into()],
        ]);
        let pdf = PdfDocument::from_bytes("t", &bytes).unwrap();
        assert_eq!(pdf.page_count(), 2);
        let texts = pdf.page_texts().unwrap();
        assert_eq!(texts[0], "Sitzung des Landtags\nBundes-\nregierung");
        assert_eq!(texts[1], "Zweite Seite");
    }

    #[test]
    fn win_ansi_umlauts_survive() {
        let bytes = synth::text_pdf(&[vec!["Müller spricht über Änderungen – ß".into()]]);
        let pdf = PdfDocument::from_bytes("t", &bytes).unwrap();
        assert_eq!(pdf.page_texts().unwrap()[0], "Müller spricht über Änderungen – ß");
    }

    #[test]
    fn garbage_is_unreadable() {
        assert!(matches!(
            PdfDocument::from_bytes("x", b"not a pdf"),
            Err(Error::Classification { .. })
        ));
    }

    #[test]
    fn renders_embedded_image_at_page_size() {
        let mut img = PageImage::filled("s", 0, 20, 10, Channels::Gray, 255).unwrap();
        // Dark left half.
        for y in 0..10 {
            for x in 0..10 {
                img.pixels[y * 20 + x] = 0;
            }
        }
        let bytes = synth::image_pdf(&[Some(&img), None]);
        let pdf = PdfDocument::from_bytes("s", &bytes).unwrap();
        let page = pdf.render_page(0, 72).unwrap();
        assert_eq!((page.width, page.height), (595, 842));
        assert_eq!(page.channels, Channels::Gray);
        assert_eq!(page.gray_at(10, 400), 0);
        assert_eq!(page.gray_at(590, 400), 255);
        let blank = pdf.render_page(1, 72).unwrap();
        assert!(blank.pixels.iter().all(|&p| p == 255));
    }

    #[test]
    fn matrix_inverse_round_trips() {
        let m = Matrix([2.0, 0.5, -0.3, 1.5, 10.0, -4.0]);
        let inv = m.invert().unwrap();
        let (x, y) = m.apply(3.0, 7.0);
        let (bx, by) = inv.apply(x, y);
        assert!((bx - 3.0).abs() < 1e-4 && (by - 7.0).abs() < 1e-4);
    }
}
