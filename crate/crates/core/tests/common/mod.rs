#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use parlagest::imaging::{Channels, PageImage};
use parlagest::pdf::synth;

pub const HEADER: &str = "id,parliament,period,locator,format_hint,script_hint,scan_quality_hint\n";

pub struct Entry<'a> {
    pub id: &'a str,
    pub parliament: &'a str,
    pub locator: PathBuf,
    pub format: &'a str,
    pub script: &'a str,
    pub quality: &'a str,
}

pub fn write_manifest(path: &Path, entries: &[Entry]) {
    let mut text = HEADER.to_string();
    for e in entries {
        text.push_str(&format!(
            "{},{},17,{},{},{},{}\n",
            e.id,
            e.parliament,
            e.locator.display(),
            e.format,
            e.script,
            e.quality
        ));
    }
    fs::write(path, text).unwrap();
}

pub fn protocol_pages() -> Vec<Vec<String>> {
    let first = [
        "Landtag von Baden-Württemberg",
        "Plenarprotokoll 17/1",
        "17. Wahlperiode 1. Sitzung",
        "Stuttgart, Dienstag, 11. Mai 2021",
        "Präsidentin Muhterem Aras: Meine Damen und Herren, ich eröffne die Sitzung.",
        "Wir beginnen mit der Feststellung der Beschlussfähigkeit des Hauses.",
        "Die Beratung des Haushalts wird auf die nächste Sitzung vertagt.",
    ];
    let second = [
        "Abg. Dr. Müller: Wir stimmen dem Antrag der Landes-",
        "regierung zu. Das Land braucht eine verlässliche Planung.",
        "Der Antrag ist damit angenommen. Die Sitzung ist geschlossen.",
    ];
    vec![
        first.iter().map(|s| s.to_string()).collect(),
        second.iter().map(|s| s.to_string()).collect(),
    ]
}

pub fn readable_pdf(path: &Path) {
    fs::write(path, synth::text_pdf(&protocol_pages())).unwrap();
}

/// A page-sized scan with a few dark bars and optional salt-and-pepper noise.
pub fn scan_page(id: &str, index: usize, noisy: bool) -> PageImage {
    let (w, h) = (200u32, 280u32);
    let mut px = vec![255u8; (w * h) as usize];
    for bar in 0..6u32 {
        let y0 = 30 + bar * 35;
        for y in y0..y0 + 8 {
            for x in 20..180 {
                px[(y * w + x) as usize] = 0;
            }
        }
    }
    if noisy {
        let mut state = 0x2545_f491u32;
        for _ in 0..900 {
            state ^= state << 13;
            state ^= state >> 17;
            state ^= state << 5;
            let i = (state as usize) % px.len();
            px[i] = 0;
        }
    }
    PageImage::new(id, index, w, h, Channels::Gray, 72, px).unwrap()
}

pub fn scanned_pdf(path: &Path, id: &str, pages: usize, noisy: bool) {
    let images: Vec<PageImage> = (0..pages).map(|i| scan_page(id, i, noisy)).collect();
    let refs: Vec<Option<&PageImage>> = images.iter().map(Some).collect();
    fs::write(path, synth::image_pdf(&refs)).unwrap();
}

/// Executable that honours the engine contract `<engine> <image> <out-base>
/// -l <model>` and always "recognises" the same text.
pub fn stub_engine(dir: &Path) -> PathBuf {
    use std::os::unix::fs::PermissionsExt;
    let path = dir.join("stub-ocr");
    fs::write(
        &path,
        "#!/bin/sh\nprintf 'Sitzung vom 3. März 1950\\nDas Haus hat den Antrag beschlossen.\\n' > \"$2.txt\"\n",
    )
    .unwrap();
    fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    path
}
pub mod strategies;
