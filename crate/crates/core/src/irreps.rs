//! Feature signatures and packed storage for equivariant token features.
//!
//! A feature holds `tokens × heads × width` scalars, where the per-head
//! width is `Σ_ℓ m_ℓ (2ℓ+1)`. Inside one head the layout is degree-major,
//! then channel-major, then component (`m = −ℓ..ℓ`, ascending).

use std::fmt;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Irrep {
    pub degree: u32,
    pub mult: usize,
}

impl Irrep {
    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.degree as usize + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IrrepsSignature {
    entries: Vec<Irrep>,
    heads: usize,
    offsets: Vec<usize>,
    width: usize,
}

/// Builds a signature from `(degree, multiplicity)` pairs; the entries are sorted by degree.
pub fn make_signature(entries: &[(u32, usize)], heads: usize) -> Result<IrrepsSignature> {
    if entries.is_empty() {
        return Err(Error::InvalidSignature("no degrees given".into()));
    }
    let mut sorted: Vec<Irrep> = entries.iter().map(|&(degree, mult)| Irrep { degree, mult }).collect();
    sorted.sort_by_key(|e| e.degree);
    for pair in sorted.windows(2) {
        if pair[0].degree == pair[1].degree {
            return Err(Error::DuplicateDegree(pair[0].degree));
        }
    }
    if let Some(e) = sorted.iter().find(|e| e.mult == 0) {
        return Err(Error::InvalidMultiplicity(e.degree));
    }
    if heads == 0 {
        return Err(Error::InvalidSignature("head count must be positive".into()));
    }
    Ok(IrrepsSignature::from_sorted(sorted, heads))
}

impl IrrepsSignature {
    fn from_sorted(entries: Vec<Irrep>, heads: usize) -> Self {
        let mut offsets = Vec::with_capacity(entries.len());
        let mut width = 0;
        for e in &entries {
            offsets.push(width);
            width += e.mult * e.dim();
        }
        IrrepsSignature {
            entries,
            heads,
            offsets,
            width,
        }
    }

    /// Signature with no degrees. Only produced by product plans without any admissible path.
    pub fn empty(heads: usize) -> Self {
        IrrepsSignature::from_sorted(Vec::new(), heads)
    }

    /// Degrees `0..=max_degree`, each with the same multiplicity.
    pub fn uniform(max_degree: u32, mult: usize, heads: usize) -> Result<Self> {
        let entries: Vec<(u32, usize)> = (0..=max_degree).map(|l| (l, mult)).collect();
        make_signature(&entries, heads)
    }

    pub fn entries(&self) -> &[Irrep] {
        &self.entries
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    /// Per-head width.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn total_width(&self) -> usize {
        self.width * self.heads
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.entries.last().map(|e| e.degree)
    }

    pub fn degrees(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|e| e.degree)
    }

    fn position(&self, degree: u32) -> Option<usize> {
        self.entries.binary_search_by_key(&degree, |e| e.degree).ok()
    }

    pub fn contains(&self, degree: u32) -> bool {
        self.position(degree).is_some()
    }

    pub fn mult(&self, degree: u32) -> Option<usize> {
        self.position(degree).map(|i| self.entries[i].mult)
    }

    /// Offset of the first component of `degree` inside one head.
    pub fn degree_offset(&self, degree: u32) -> Option<usize> {
        self.position(degree).map(|i| self.offsets[i])
    }

    /// Offset of the `(2ℓ+1)`-block of channel `channel` of degree `degree` inside one head.
    pub fn block_offset(&self, degree: u32, channel: usize) -> Result<usize> {
        let i = self.position(degree).ok_or(Error::DegreeNotPresent(degree))?;
        let e = self.entries[i];
        if channel >= e.mult {
            return Err(Error::IndexError(format!(
                "channel {channel} of degree {degree} (multiplicity {})",
                e.mult
            )));
        }
        Ok(self.offsets[i] + channel * e.dim())
    }

    pub fn with_heads(&self, heads: usize) -> Self {
        IrrepsSignature::from_sorted(self.entries.clone(), heads)
    }

    /// Parses the `ℓ:m,ℓ:m` form used by the CGF1 header.
    pub fn parse_entries(text: &str, heads: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for item in text.split(',').filter(|s| !s.is_empty()) {
            let (l, m) = item
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad signature entry '{item}'")))?;
            let l = l
                .trim()
                .parse::<u32>()
                .map_err(|e| Error::Parse(format!("degree '{l}': {e}")))?;
            let m = m
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("multiplicity '{m}': {e}")))?;
            entries.push((l, m));
        }
        make_signature(&entries, heads)
    }
}

impl fmt::Display for IrrepsSignature {
    /// `ℓ:m,ℓ:m,...`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}:{}", e.degree, e.mult)?;
        }
        Ok(())
    }
}

/// Packed per-token, per-head feature storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Feature<T> {
    sig: IrrepsSignature,
    tokens: usize,
    data: Vec<T>,
}

pub type EquivariantFeature = Feature<f64>;
/// Complex coefficients with the same layout; used transiently by Fourier stages.
pub type ComplexFeature = Feature<Complex64>;

impl<T: Copy + Zero> Feature<T> {
    pub fn zeros(sig: &IrrepsSignature, tokens: usize) -> Self {
        Feature {
            sig: sig.clone(),
            tokens,
            data: vec![T::zero(); tokens * sig.total_width()],
        }
    }

    pub fn from_vec(sig: &IrrepsSignature, tokens: usize, data: Vec<T>) -> Result<Self> {
        let expected = tokens * sig.total_width();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "data length {} but {tokens} tokens of width {} need {expected}",
                data.len(),
                sig.total_width()
            )));
        }
        Ok(Feature {
            sig: sig.clone(),
            tokens,
            data,
        })
    }

    pub fn signature(&self) -> &IrrepsSignature {
        &self.sig
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn heads(&self) -> usize {
        self.sig.heads
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    fn head_start(&self, token: usize, head: usize) -> usize {
        (token * self.sig.heads + head) * self.sig.width
    }

    /// All blocks of one (token, head) pair.
    #[inline]
    pub fn head(&self, token: usize, head: usize) -> &[T] {
        let s = self.head_start(token, head);
        &self.data[s..s + self.sig.width]
    }

    #[inline]
    pub fn head_mut(&mut self, token: usize, head: usize) -> &mut [T] {
        let s = self.head_start(token, head);
        let w = self.sig.width;
        &mut self.data[s..s + w]
    }

    /// All heads of one token.
    #[inline]
    pub fn token(&self, token: usize) -> &[T] {
        let w = self.sig.total_width();
        &self.data[token * w..(token + 1) * w]
    }

    #[inline]
    pub fn token_mut(&mut self, token: usize) -> &mut [T] {
        let w = self.sig.total_width();
        &mut self.data[token * w..(token + 1) * w]
    }

    fn check_token_head(&self, token: usize, head: usize) -> Result<()> {
        if token >= self.tokens {
            return Err(Error::IndexError(format!("token {token} of {}", self.tokens)));
        }
        if head >= self.sig.heads {
            return Err(Error::IndexError(format!("head {head} of {}", self.sig.heads)));
        }
        Ok(())
    }

    /// The `2ℓ+1` coefficients of channel `channel` of degree `degree`.
    pub fn block(&self, token: usize, head: usize, degree: u32, channel: usize) -> Result<&[T]> {
        self.check_token_head(token, head)?;
        let off = self.head_start(token, head) + self.sig.block_offset(degree, channel)?;
        Ok(&self.data[off..off + 2 * degree as usize + 1])
    }

    pub fn block_mut(&mut self, token: usize, head: usize, degree: u32, channel: usize) -> Result<&mut [T]> {
        self.check_token_head(token, head)?;
        let off = self.head_start(token, head) + self.sig.block_offset(degree, channel)?;
        Ok(&mut self.data[off..off + 2 * degree as usize + 1])
    }

    /// Number of independent token sequences (`heads × width`).
    pub fn lanes(&self) -> usize {
        self.sig.total_width()
    }

    /// Copies lane `lane` (a fixed head/component position) across all tokens into `out`.
    pub fn read_lane(&self, lane: usize, out: &mut [T]) {
        let stride = self.sig.total_width();
        for (t, o) in out.iter_mut().enumerate().take(self.tokens) {
            *o = self.data[t * stride + lane];
        }
    }

    pub fn write_lane(&mut self, lane: usize, values: &[T]) {
        let stride = self.sig.total_width();
        for (t, &v) in values.iter().enumerate().take(self.tokens) {
            self.data[t * stride + lane] = v;
        }
    }
}

impl EquivariantFeature {
    /// Standard-normal entries.
    pub fn random<R: Rng + ?Sized>(sig: &IrrepsSignature, tokens: usize, rng: &mut R) -> Self {
        let data = (0..tokens * sig.total_width())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        Feature {
            sig: sig.clone(),
            tokens,
            data,
        }
    }

    pub fn to_complex(&self) -> ComplexFeature {
        Feature {
            sig: self.sig.clone(),
            tokens: self.tokens,
            data: self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|x| *x *= alpha);
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `‖self − other‖ / max(‖other‖, tiny)`
    pub fn rel_err(&self, reference: &Self) -> f64 {
        let diff: f64 = self
            .data
            .iter()
            .zip(&reference.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        diff / reference.norm().max(f64::MIN_POSITIVE)
    }

    /// Removes the token mean from every lane of `degree`; returns the centred
    /// feature and the mean laid out as `[head][channel][component]`.
    pub fn subtract_mean(&self, degree: u32) -> Result<(Self, Vec<f64>)> {
        let off = self.sig.degree_offset(degree).ok_or(Error::DegreeNotPresent(degree))?;
        let len = self.sig.mult(degree).unwrap_or(0) * (2 * degree as usize + 1);
        let heads = self.sig.heads;
        let mut mean = vec![0.0; heads * len];
        if self.tokens == 0 {
            return Ok((self.clone(), mean));
        }
        for t in 0..self.tokens {
            for h in 0..heads {
                let src = &self.head(t, h)[off..off + len];
                for (m, s) in mean[h * len..(h + 1) * len].iter_mut().zip(src) {
                    *m += s;
                }
            }
        }
        let inv = 1.0 / self.tokens as f64;
        mean.iter_mut().for_each(|m| *m *= inv);
        let mut out = self.clone();
        out.add_mean_scaled(degree, &mean, -1.0);
        Ok((out, mean))
    }

    /// Inverse of [`subtract_mean`](Self::subtract_mean).
    pub fn add_mean(&mut self, degree: u32, mean: &[f64]) -> Result<()> {
        if !self.sig.contains(degree) {
            return Err(Error::DegreeNotPresent(degree));
        }
        self.add_mean_scaled(degree, mean, 1.0);
        Ok(())
    }

    fn add_mean_scaled(&mut self, degree: u32, mean: &[f64], sign: f64) {
        let off = self.sig.degree_offset(degree).unwrap_or(0);
        let len = self.sig.mult(degree).unwrap_or(0) * (2 * degree as usize + 1);
        for t in 0..self.tokens {
            for h in 0..self.sig.heads {
                let dst = &mut self.head_mut(t, h)[off..off + len];
                for (d, m) in dst.iter_mut().zip(&mean[h * len..(h + 1) * len]) {
                    *d += sign * m;
                }
            }
        }
    }

    /// Writes the CGF1 text dump: a header line, then one row per token.
    pub fn write_cgf1<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "CGF1 {} {} {}", self.tokens, self.sig.heads, self.sig)?;
        for t in 0..self.tokens {
            let row: Vec<String> = self.token(t).iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_cgf1<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty CGF1 input".into()))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "CGF1" {
            return Err(Error::Parse(format!("bad CGF1 header '{header}'")));
        }
        let tokens: usize = parts[1]
            .parse()
            .map_err(|e| Error::Parse(format!("token count: {e}")))?;
        let heads: usize = parts[2].parse().map_err(|e| Error::Parse(format!("head count: {e}")))?;
        let sig = IrrepsSignature::parse_entries(parts[3], heads)?;
        let mut data = Vec::with_capacity(tokens * sig.total_width());
        for t in 0..tokens {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row for token {t}")))??;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(
                    tok.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("value '{tok}': {e}")))?,
                );
            }
            if data.len() - before != sig.total_width() {
                return Err(Error::Parse(format!(
                    "token {t}: {} values, expected {}",
                    data.len() - before,
                    sig.total_width()
                )));
            }
        }
        Feature::from_vec(&sig, tokens, data)
    }
}
