//! Dataset ingestion, preprocessing to the fixed 64x256 input, affine
//! augmentation, charset handling, and the deterministic synthetic word
//! image generator.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::init::RunRng;

pub const INPUT_H: usize = 64;
pub const INPUT_W: usize = 256;

pub mod glyphs;

// ── Charset ──────────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CharsetMode {
    /// Lowercase + uppercase + digits + ASCII punctuation.
    Full,
    /// Lowercase + digits (the spotting setting).
    Kws,
}

impl CharsetMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CharsetMode::Full => "full",
            CharsetMode::Kws => "kws",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(CharsetMode::Full),
            "kws" => Ok(CharsetMode::Kws),
            other => Err(Error::data(format!("unknown charset mode {other:?}"))),
        }
    }
}

const PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";

/// Ordered token inventory. Index 0 is the SP token (word start/end in the
/// Seq2Seq branch), the symbols follow, and the CTC blank takes the last
/// index. SP and blank are always present and distinct.
#[derive(Clone, Debug, PartialEq)]
pub struct Charset {
    mode: CharsetMode,
    symbols: Vec<char>,
}

impl Charset {
    pub fn new(mode: CharsetMode) -> Self {
        let mut symbols: Vec<char> = ('a'..='z').collect();
        if mode == CharsetMode::Full {
            symbols.extend('A'..='Z');
        }
        symbols.extend('0'..='9');
        if mode == CharsetMode::Full {
            symbols.extend(PUNCTUATION.chars());
        }
        Charset { mode, symbols }
    }

    pub fn mode(&self) -> CharsetMode {
        self.mode
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn n_classes(&self) -> usize {
        self.symbols.len() + 2
    }

    pub fn sp_index(&self) -> usize {
        0
    }

    pub fn blank_index(&self) -> usize {
        self.symbols.len() + 1
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        if c == ' ' {
            return Some(self.sp_index());
        }
        self.symbols.iter().position(|&s| s == c).map(|i| i + 1)
    }

    /// Character for a symbol or SP index. Panics on the blank index:
    /// blank never appears in a transcript.
    pub fn char_at(&self, idx: usize) -> char {
        if idx == 0 {
            ' '
        } else {
            assert!(
                idx <= self.symbols.len(),
                "char_at({idx}) hit the blank index"
            );
            self.symbols[idx - 1]
        }
    }

    /// Token indices of a transcript (no SP wrapping, no blank).
    pub fn encode(&self, s: &str) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(s.chars().count());
        let mut bad = String::new();
        for c in s.chars() {
            match self.index_of(c) {
                Some(i) if i != self.sp_index() => out.push(i),
                _ => bad.push(c),
            }
        }
        if bad.is_empty() {
            Ok(out)
        } else {
            Err(Error::contract(format!(
                "characters outside charset: {bad:?}"
            )))
        }
    }

    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter().map(|&i| self.char_at(i)).collect()
    }

    /// FNV-1a over the mode tag and symbol list; embedded in index files
    /// and compared against the producing model.
    pub fn fingerprint(&self) -> u32 {
        let mut h: u32 = 0x811c9dc5;
        let mut eat = |b: u8| {
            h ^= b as u32;
            h = h.wrapping_mul(0x01000193);
        };
        for b in self.mode.as_str().bytes() {
            eat(b);
        }
        eat(0);
        for c in &self.symbols {
            let mut buf = [0u8; 4];
            for &b in c.encode_utf8(&mut buf).as_bytes() {
                eat(b);
            }
        }
        h
    }
}

/// Normalize a transcript for the active charset. Full mode passes strings
/// through, requiring every character to exist in the charset; kws mode
/// lowercases and drops anything outside [a-z0-9]. `None` means the sample
/// is excluded (empty after filtering, or invalid in full mode).
pub fn normalize_transcript(s: &str, charset: &Charset) -> Option<String> {
    match charset.mode() {
        CharsetMode::Full => {
            if !s.is_empty() && s.chars().all(|c| charset.index_of(c).is_some_and(|i| i != 0)) {
                Some(s.to_string())
            } else {
                None
            }
        }
        CharsetMode::Kws => {
            let out: String = s
                .chars()
                .flat_map(|c| c.to_lowercase())
                .filter(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
                .collect();
            if out.is_empty() {
                None
            } else {
                Some(out)
            }
        }
    }
}

// ── Images ───────────────────────────────────────────────────────────

/// Grayscale image, values in [0,1], ink-positive (high value = ink).
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub h: usize,
    pub w: usize,
    pub data: Vec<f32>,
}

impl GrayImage {
    pub fn zeros(h: usize, w: usize) -> Self {
        GrayImage {
            h,
            w,
            data: vec![0.0; h * w],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.w + j]
    }
}

/// Binary PGM (P5) reader. The on-disk convention is paper-white = 255;
/// loading flips polarity so ink is the high value.
pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path)?;
    parse_pgm(&bytes).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 0;
    let mut token = || -> std::result::Result<String, String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err("not a binary PGM (P5) file".into());
    }
    let w: usize = token()?.parse().map_err(|_| "bad width")?;
    let h: usize = token()?.parse().map_err(|_| "bad height")?;
    let maxval: usize = token()?.parse().map_err(|_| "bad maxval")?;
    if maxval != 255 {
        return Err(format!("unsupported maxval {maxval}, need 255"));
    }
    pos += 1; // single whitespace byte after maxval
    if bytes.len() < pos + w * h {
        return Err("truncated pixel data".into());
    }
    let data: Vec<f32> = bytes[pos..pos + w * h]
        .iter()
        .map(|&p| 1.0 - p as f32 / 255.0)
        .collect();
    Ok(GrayImage { h, w, data })
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut out = format!("P5\n{} {}\n255\n", img.w, img.h).into_bytes();
    out.extend(img.data.iter().map(|&v| {
        let ink = v.clamp(0.0, 1.0);
        255 - (ink * 255.0).round() as u8
    }));
    std::fs::write(path, out)?;
    Ok(())
}

fn bilinear(img: &GrayImage, y: f32, x: f32) -> f32 {
    if y <= -1.0 || x <= -1.0 || y >= img.h as f32 || x >= img.w as f32 {
        return 0.0;
    }
    let y0 = y.floor();
    let x0 = x.floor();
    let dy = y - y0;
    let dx = x - x0;
    let fetch = |i: isize, j: isize| -> f32 {
        if i < 0 || j < 0 || i >= img.h as isize || j >= img.w as isize {
            0.0
        } else {
            img.data[i as usize * img.w + j as usize]
        }
    };
    let (i0, j0) = (y0 as isize, x0 as isize);
    fetch(i0, j0) * (1.0 - dy) * (1.0 - dx)
        + fetch(i0, j0 + 1) * (1.0 - dy) * dx
        + fetch(i0 + 1, j0) * dy * (1.0 - dx)
        + fetch(i0 + 1, j0 + 1) * dy * dx
}

/// Scale down (if needed) preserving aspect ratio, then zero-pad to
/// 64x256 with content at the top-left.
pub fn preprocess(img: &GrayImage) -> GrayImage {
    assert!(img.h > 0 && img.w > 0, "contract violation: zero-dim image");
    let (ch, cw, content): (usize, usize, GrayImage) = if img.h > INPUT_H || img.w > INPUT_W {
        let f = (INPUT_H as f32 / img.h as f32).min(INPUT_W as f32 / img.w as f32);
        let rh = ((img.h as f32 * f).round() as usize).clamp(1, INPUT_H);
        let rw = ((img.w as f32 * f).round() as usize).clamp(1, INPUT_W);
        let mut scaled = GrayImage::zeros(rh, rw);
        for i in 0..rh {
            for j in 0..rw {
                let sy = (i as f32 + 0.5) * img.h as f32 / rh as f32 - 0.5;
                let sx = (j as f32 + 0.5) * img.w as f32 / rw as f32 - 0.5;
                scaled.data[i * rw + j] = bilinear(img, sy, sx).clamp(0.0, 1.0);
            }
        }
        (rh, rw, scaled)
    } else {
        (img.h, img.w, img.clone())
    };
    let mut out = GrayImage::zeros(INPUT_H, INPUT_W);
    for i in 0..ch {
        let src = &content.data[i * cw..(i + 1) * cw];
        out.data[i * INPUT_W..i * INPUT_W + cw].copy_from_slice(src);
    }
    out
}

/// Ranges for the random global affine augmentation.
#[derive(Clone, Copy, Debug)]
pub struct AffineRanges {
    pub rotate_deg: f64,
    pub shear: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    pub translate_px: f64,
}

impl Default for AffineRanges {
    fn default() -> Self {
        AffineRanges {
            rotate_deg: 5.0,
            shear: 0.3,
            scale_min: 0.9,
            scale_max: 1.1,
            translate_px: 3.0,
        }
    }
}

impl AffineRanges {
    pub fn identity() -> Self {
        AffineRanges {
            rotate_deg: 0.0,
            shear: 0.0,
            scale_min: 1.0,
            scale_max: 1.0,
            translate_px: 0.0,
        }
    }
}

/// One global affine warp (rotation, shear, scale, translation about the
/// image center), bilinear sampling, zero fill. Identity parameters return
/// the input untouched.
pub fn augment_affine(img: &GrayImage, rng: &mut RunRng, ranges: &AffineRanges) -> GrayImage {
    let theta = sample_range(rng, -ranges.rotate_deg, ranges.rotate_deg).to_radians();
    let shear = sample_range(rng, -ranges.shear, ranges.shear);
    let scale = sample_range(rng, ranges.scale_min, ranges.scale_max);
    let tx = sample_range(rng, -ranges.translate_px, ranges.translate_px);
    let ty = sample_range(rng, -ranges.translate_px, ranges.translate_px);

    if theta == 0.0 && shear == 0.0 && scale == 1.0 && tx == 0.0 && ty == 0.0 {
        return img.clone();
    }

    // forward map about the center: A = R(theta) * Shear(x) * Scale, plus
    // translation; output pixels sample the input through A^-1
    let (cos, sin) = (theta.cos(), theta.sin());
    let a00 = cos * scale - sin * shear * scale;
    let a01 = -sin * scale;
    let a10 = sin * scale + cos * shear * scale;
    let a11 = cos * scale;
    let det = a00 * a11 - a01 * a10;
    let (i00, i01, i10, i11) = (a11 / det, -a01 / det, -a10 / det, a00 / det);
    let (cy, cx) = ((img.h as f64 - 1.0) / 2.0, (img.w as f64 - 1.0) / 2.0);

    let mut out = GrayImage::zeros(img.h, img.w);
    for i in 0..img.h {
        for j in 0..img.w {
            let dx = j as f64 - cx - tx;
            let dy = i as f64 - cy - ty;
            let src_x = i00 * dx + i01 * dy + cx;
            let src_y = i10 * dx + i11 * dy + cy;
            out.data[i * img.w + j] = bilinear(img, src_y as f32, src_x as f32).clamp(0.0, 1.0);
        }
    }
    out
}

fn sample_range(rng: &mut RunRng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

// ── Samples and manifests ────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::data(format!("unknown split {other:?}"))),
        }
    }
}

/// One grayscale word image with its transcript.
#[derive(Clone, Debug)]
pub struct WordSample {
    pub image: GrayImage,
    pub transcript: String,
    pub id: String,
    pub split: Split,
}

#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub samples: Vec<WordSample>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> Vec<&WordSample> {
        self.samples.iter().filter(|s| s.split == split).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Load `relative_image_path<TAB>transcript<TAB>split` manifest lines.
/// Individual line failures are collected; the whole load aborts if more
/// than 1% of lines fail.
pub fn load_dataset(root: &Path, manifest: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(manifest)
        .map_err(|e| Error::data(format!("{}: {e}", manifest.display())))?;
    let mut samples = Vec::new();
    let mut failures: Vec<String> = Vec::new();
    let mut total = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        total += 1;
        let mut parts = line.split('\t');
        let result = (|| -> Result<WordSample> {
            let rel = parts
                .next()
                .ok_or_else(|| Error::data("missing image path"))?;
            let transcript = parts
                .next()
                .ok_or_else(|| Error::data("missing transcript"))?;
            let split = Split::parse(
                parts
                    .next()
                    .ok_or_else(|| Error::data("missing split"))?,
            )?;
            if transcript.is_empty() {
                return Err(Error::data("empty transcript"));
            }
            let image = read_pgm(&root.join(rel))?;
            Ok(WordSample {
                image,
                transcript: transcript.to_string(),
                id: rel.to_string(),
                split,
            })
        })();
        match result {
            Ok(s) => samples.push(s),
            Err(e) => failures.push(format!("line {}: {e}", lineno + 1)),
        }
    }
    if total == 0 {
        eprintln!("warning: empty manifest {}", manifest.display());
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("manifest error: {f}");
        }
        if failures.len() * 100 > total {
            return Err(Error::data(format!(
                "{} of {} manifest lines failed",
                failures.len(),
                total
            )));
        }
    }
    Ok(Dataset { samples })
}

/// Write a dataset to disk as PGM files plus a manifest.
pub fn write_dataset(dataset: &Dataset, out_dir: &Path) -> Result<PathBuf> {
    let images = out_dir.join("images");
    std::fs::create_dir_all(&images)?;
    let mut manifest = String::new();
    for s in &dataset.samples {
        let rel = format!("images/{}.pgm", s.id);
        write_pgm(&out_dir.join(&rel), &s.image)?;
        writeln!(&mut manifest, "{rel}\t{}\t{}", s.transcript, s.split.as_str()).unwrap();
    }
    let path = out_dir.join("manifest.tsv");
    std::fs::write(&path, manifest.as_bytes())?;
    Ok(path)
}

// ── Synthetic generator ──────────────────────────────────────────────

/// Counts of generated samples per word and split.
#[derive(Clone, Copy, Debug)]
pub struct SynthCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

/// Render `vocab` words as procedural stroke glyphs: one fixed polyline
/// skeleton per symbol, rasterized with per-sample seeded jitter in
/// thickness, slant, baseline and spacing. Deterministic for a given seed.
pub fn synth_generate(vocab: &[String], counts: SynthCounts, seed: u64) -> Result<Dataset> {
    for w in vocab {
        if w.is_empty() {
            return Err(Error::contract("empty word in vocab"));
        }
        for c in w.chars() {
            if glyphs::strokes(c).is_none() {
                return Err(Error::contract(format!(
                    "no glyph skeleton for {c:?} in word {w:?}"
                )));
            }
        }
    }
    let mut samples = Vec::new();
    for (wi, word) in vocab.iter().enumerate() {
        let per_split = [
            (Split::Train, counts.train, 0usize),
            (Split::Val, counts.val, counts.train),
            (Split::Test, counts.test, counts.train + counts.val),
        ];
        for (split, count, offset) in per_split {
            for k in 0..count {
                // stable per-sample stream regardless of generation order
                let sample_seed = seed
                    ^ (wi as u64).wrapping_mul(0x9E3779B97F4A7C15)
                    ^ ((offset + k) as u64).wrapping_mul(0xC2B2AE3D27D4EB4F);
                let mut rng = RunRng::seed_from_u64(sample_seed);
                let image = render_word(word, &mut rng, true);
                samples.push(WordSample {
                    image,
                    transcript: word.clone(),
                    id: format!("{word}_{}{k:03}", split.as_str()),
                    split,
                });
            }
        }
    }
    Ok(Dataset { samples })
}

/// Rasterize one word. With `jitter` off the rendering is the fixed
/// skeleton pass (used to prove glyph injectivity).
pub fn render_word(word: &str, rng: &mut RunRng, jitter: bool) -> GrayImage {
    let (thickness, slant, xh_scale) = if jitter {
        (
            rng.random_range(1.6..2.6) as f32,
            rng.random_range(-0.25..0.25) as f32,
            rng.random_range(0.9..1.1) as f32,
        )
    } else {
        (2.0, 0.0, 1.0)
    };
    let n = word.chars().count();
    let spacing: Vec<f32> = (0..n)
        .map(|_| {
            if jitter {
                rng.random_range(10.0..13.0) as f32
            } else {
                12.0
            }
        })
        .collect();
    let baselines: Vec<f32> = (0..n)
        .map(|_| {
            if jitter {
                32.0 + rng.random_range(-1.5..1.5) as f32
            } else {
                32.0
            }
        })
        .collect();

    let h = 48usize;
    let total_w: f32 = spacing.iter().sum();
    let w = (total_w + 8.0).ceil() as usize;
    let mut img = GrayImage::zeros(h, w);

    let x_height = 14.0 * xh_scale;
    let mut x0 = 4.0f32;
    for (ci, c) in word.chars().enumerate() {
        let cell_w = spacing[ci] * 0.85;
        let baseline = baselines[ci];
        for stroke in glyphs::strokes(c).expect("validated by caller") {
            let pts: Vec<(f32, f32)> = stroke
                .iter()
                .map(|&(gx, gy)| {
                    let y = baseline - (1.0 - gy) * x_height;
                    let x = x0 + gx * cell_w + slant * (baseline - y);
                    (x, y)
                })
                .collect();
            if pts.len() == 1 {
                draw_segment(&mut img, pts[0], pts[0], thickness);
            }
            for seg in pts.windows(2) {
                draw_segment(&mut img, seg[0], seg[1], thickness);
            }
        }
        x0 += spacing[ci];
    }
    img
}

fn draw_segment(img: &mut GrayImage, a: (f32, f32), b: (f32, f32), thickness: f32) {
    let r = thickness / 2.0;
    let min_x = (a.0.min(b.0) - r - 1.0).floor().max(0.0) as usize;
    let max_x = (a.0.max(b.0) + r + 1.0).ceil().min(img.w as f32 - 1.0) as usize;
    let min_y = (a.1.min(b.1) - r - 1.0).floor().max(0.0) as usize;
    let max_y = (a.1.max(b.1) + r + 1.0).ceil().min(img.h as f32 - 1.0) as usize;
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    for y in min_y..=max_y {
        for x in min_x..=max_x {
            let (px, py) = (x as f32, y as f32);
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
            };
            let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
            let dist = ((px - qx).powi(2) + (py - qy).powi(2)).sqrt();
            let ink = (r + 0.5 - dist).clamp(0.0, 1.0);
            let slot = &mut img.data[y * img.w + x];
            *slot = slot.max(ink);
        }
    }
}

// ── Word corpus (the +LM variant) ────────────────────────────────────

/// `word<TAB>count` entries for corpus-driven autoencoder fine-tuning.
#[derive(Clone, Debug, Default)]
pub struct WordCorpus {
    pub entries: Vec<(String, u64)>,
}

impl WordCorpus {
    /// Parse a corpus file, normalizing words to the charset. Lines that
    /// fail normalization or parsing are skipped and counted.
    pub fn load(path: &Path, charset: &Charset) -> Result<(Self, usize)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        Ok(Self::parse(&text, charset))
    }

    pub fn parse(text: &str, charset: &Charset) -> (Self, usize) {
        let mut merged: BTreeMap<String, u64> = BTreeMap::new();
        let mut skipped = 0usize;
        for line in text.lines() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let word = parts.next().unwrap_or("");
            let count: u64 = match parts.next().and_then(|c| c.parse().ok()) {
                Some(c) if c >= 1 => c,
                _ => {
                    skipped += 1;
                    continue;
                }
            };
            match normalize_transcript(word, charset) {
                Some(norm) => *merged.entry(norm).or_insert(0) += count,
                None => skipped += 1,
            }
        }
        (
            WordCorpus {
                entries: merged.into_iter().collect(),
            },
            skipped,
        )
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    /// Draw one word proportionally to its occurrence count.
    pub fn sample<'a>(&'a self, rng: &mut RunRng) -> &'a str {
        let total = self.total();
        assert!(total > 0, "sampling from empty corpus");
        let mut draw = rng.random_range(0..total);
        for (word, count) in &self.entries {
            if draw < *count {
                return word;
            }
            draw -= count;
        }
        unreachable!()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kws() -> Charset {
        Charset::new(CharsetMode::Kws)
    }

    #[test]
    fn charset_layout() {
        let c = kws();
        assert_eq!(c.n_classes(), 38); // 26 + 10 + SP + blank
        assert_eq!(c.sp_index(), 0);
        assert_eq!(c.blank_index(), 37);
        assert_eq!(c.index_of('a'), Some(1));
        assert_eq!(c.index_of('9'), Some(36));
        assert_ne!(c.sp_index(), c.blank_index());
        let full = Charset::new(CharsetMode::Full);
        assert_eq!(full.n_classes(), 26 + 26 + 10 + 32 + 2);
        assert_ne!(full.fingerprint(), c.fingerprint());
    }

    #[test]
    fn normalize_kws_examples() {
        let c = kws();
        assert_eq!(normalize_transcript("Security!", &c).as_deref(), Some("security"));
        assert_eq!(normalize_transcript("A1", &c).as_deref(), Some("a1"));
        assert_eq!(normalize_transcript("...", &c), None);
    }

    #[test]
    fn preprocess_identity_and_scaling() {
        // 64x256 input unchanged
        let mut img = GrayImage::zeros(64, 256);
        img.data[5 * 256 + 7] = 0.8;
        let out = preprocess(&img);
        assert_eq!(out.data, img.data);

        // 128x200 scales by 0.5 to 64x100, padded
        let img = GrayImage {
            h: 128,
            w: 200,
            data: vec![0.5; 128 * 200],
        };
        let out = preprocess(&img);
        assert_eq!((out.h, out.w), (64, 256));
        assert!(out.at(10, 99) > 0.4);
        assert_eq!(out.at(10, 100), 0.0);
        assert_eq!(out.at(63, 0), 0.0);

        // 10x50 fits: padded only
        let mut img = GrayImage::zeros(10, 50);
        img.data[3 * 50 + 4] = 1.0;
        let out = preprocess(&img);
        assert_eq!(out.at(3, 4), 1.0);
    }

    #[test]
    fn preprocess_output_range() {
        let img = GrayImage {
            h: 80,
            w: 300,
            data: (0..80 * 300).map(|i| (i % 7) as f32 / 6.0).collect(),
        };
        let out = preprocess(&img);
        assert_eq!((out.h, out.w), (64, 256));
        assert!(out.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn affine_identity_ranges_is_noop() {
        use rand::SeedableRng;
        let mut rng = RunRng::seed_from_u64(3);
        let img = GrayImage {
            h: 8,
            w: 8,
            data: (0..64).map(|i| (i as f32) / 63.0).collect(),
        };
        let out = augment_affine(&img, &mut rng, &AffineRanges::identity());
        assert_eq!(out.data, img.data);
    }

    #[test]
    fn affine_seeded_is_reproducible() {
        use rand::SeedableRng;
        let img = GrayImage {
            h: 16,
            w: 16,
            data: (0..256).map(|i| ((i * 31) % 17) as f32 / 16.0).collect(),
        };
        let mut r1 = RunRng::seed_from_u64(11);
        let mut r2 = RunRng::seed_from_u64(11);
        let a = augment_affine(&img, &mut r1, &AffineRanges::default());
        let b = augment_affine(&img, &mut r2, &AffineRanges::default());
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn pgm_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        let img = GrayImage {
            h: 3,
            w: 5,
            data: (0..15).map(|i| i as f32 / 14.0).collect(),
        };
        write_pgm(&path, &img).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!((back.h, back.w), (3, 5));
        for (a, b) in back.data.iter().zip(img.data.iter()) {
            assert!((a - b).abs() < 1.0 / 255.0 + 1e-6);
        }
    }

    #[test]
    fn pgm_white_paper_maps_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.pgm");
        std::fs::write(&path, b"P5\n2 1\n255\n\xff\x00").unwrap();
        let img = read_pgm(&path).unwrap();
        assert_eq!(img.data[0], 0.0); // 255 = white paper
        assert_eq!(img.data[1], 1.0); // 0 = full ink
    }

    #[test]
    fn synth_deterministic_and_counts() {
        let vocab: Vec<String> = ["cat", "dog"].iter().map(|s| s.to_string()).collect();
        let counts = SynthCounts {
            train: 3,
            val: 0,
            test: 2,
        };
        let a = synth_generate(&vocab, counts, 42).unwrap();
        let b = synth_generate(&vocab, counts, 42).unwrap();
        assert_eq!(a.len(), 10);
        for (x, y) in a.samples.iter().zip(b.samples.iter()) {
            assert_eq!(x.image.data, y.image.data);
            assert_eq!(x.id, y.id);
        }
        let c = synth_generate(&vocab, counts, 43).unwrap();
        assert!(a
            .samples
            .iter()
            .zip(c.samples.iter())
            .any(|(x, y)| x.image.data != y.image.data));
    }

    #[test]
    fn glyph_skeletons_pairwise_distinct() {
        use rand::SeedableRng;
        let mut renders = Vec::new();
        for c in ('a'..='z').chain('0'..='9') {
            let mut rng = RunRng::seed_from_u64(0);
            let img = render_word(&c.to_string(), &mut rng, false);
            renders.push((c, img));
        }
        for i in 0..renders.len() {
            for j in i + 1..renders.len() {
                let (ca, a) = &renders[i];
                let (cb, b) = &renders[j];
                assert!(
                    a.data != b.data,
                    "glyphs {ca:?} and {cb:?} render identically"
                );
            }
        }
    }

    #[test]
    fn corpus_parse_and_sampling() {
        use rand::SeedableRng;
        let c = kws();
        let (corpus, skipped) = WordCorpus::parse("a\t3\nb\t1\n...\t5\nbad-line\n", &c);
        assert_eq!(skipped, 2); // "..." normalizes empty; bad-line has no count
        assert_eq!(corpus.total(), 4);
        let mut rng = RunRng::seed_from_u64(1);
        let mut a_count = 0;
        let n = 100_000;
        for _ in 0..n {
            if corpus.sample(&mut rng) == "a" {
                a_count += 1;
            }
        }
        let frac = a_count as f64 / n as f64;
        assert!((frac - 0.75).abs() < 0.02, "frequency off: {frac}");
    }
}
