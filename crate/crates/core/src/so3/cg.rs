//! Clebsch-Gordan coefficient tables.
//!
//! Complex (physicists') basis coefficients come from the Racah closed-form
//! sum with Condon-Shortley phase. Real-basis tables are obtained from them
//! by the unitary change of basis to real spherical harmonics.

use std::collections::HashMap;
use std::io::Write;
use std::sync::{Arc, OnceLock, RwLock};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest degree accepted by the closed-form evaluator.
pub const MAX_DEGREE: u32 = 24;
/// Largest degree accepted by [`TableCache::build`].
pub const MAX_CACHE_DEGREE: u32 = 12;
/// Entries at or below this magnitude are structural zeros.
pub const SPARSITY_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Complex,
    Real,
}

/// One stored coefficient `C^{J M}_{ℓ₁ m₁ ℓ₂ m₂}` (signed component indices).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgEntry {
    pub m_out: i32,
    pub m1: i32,
    pub m2: i32,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CGTable {
    pub j: u32,
    pub l1: u32,
    pub l2: u32,
    pub basis: Basis,
    entries: Vec<CgEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparsityStats {
    pub nnz: usize,
    pub density: f64,
}

fn log_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0; 4 * MAX_DEGREE as usize + 8];
        for n in 1..t.len() {
            t[n] = t[n - 1] + (n as f64).ln();
        }
        t
    })
}

#[inline]
fn lf(n: i64) -> f64 {
    debug_assert!(n >= 0);
    log_factorials()[n as usize]
}

pub fn triangle(j: u32, l1: u32, l2: u32) -> bool {
    j <= l1 + l2 && l1 <= j + l2 && l2 <= j + l1
}

fn check_degrees(j: u32, l1: u32, l2: u32) -> Result<()> {
    for d in [j, l1, l2] {
        if d > MAX_DEGREE {
            return Err(Error::DegreeTooLarge(d, MAX_DEGREE));
        }
    }
    Ok(())
}

/// `⟨l1 m1; l2 m2 | J M⟩` with `M = m1 + m2` implied. Returns 0 outside the
/// triangle or when `|M| > J`.
pub fn clebsch_gordan(l1: u32, m1: i32, l2: u32, m2: i32, j: u32) -> f64 {
    let m = m1 + m2;
    if !triangle(j, l1, l2) || m.abs() > j as i32 || m1.abs() > l1 as i32 || m2.abs() > l2 as i32 {
        return 0.0;
    }
    let (j1, j2, jj) = (l1 as i64, l2 as i64, j as i64);
    let (m1, m2, m) = (m1 as i64, m2 as i64, m as i64);
    let log_pref = 0.5
        * (((2 * jj + 1) as f64).ln() + lf(jj + j1 - j2) + lf(jj - j1 + j2) + lf(j1 + j2 - jj) - lf(j1 + j2 + jj + 1)
            + lf(jj + m)
            + lf(jj - m)
            + lf(j1 - m1)
            + lf(j1 + m1)
            + lf(j2 - m2)
            + lf(j2 + m2));
    let k_min = 0.max(j2 - jj - m1).max(j1 - jj + m2);
    let k_max = (j1 + j2 - jj).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let log_den = lf(k)
            + lf(j1 + j2 - jj - k)
            + lf(j1 - m1 - k)
            + lf(j2 + m2 - k)
            + lf(jj - j2 + m1 + k)
            + lf(jj - j1 - m2 + k);
        let term = (log_pref - log_den).exp();
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum
}

/// Complex-basis table. Triangle-violating degrees give an empty table.
pub fn cg_complex(j: u32, l1: u32, l2: u32) -> Result<CGTable> {
    check_degrees(j, l1, l2)?;
    let mut entries = Vec::new();
    if triangle(j, l1, l2) {
        let (ji, l1i, l2i) = (j as i32, l1 as i32, l2 as i32);
        for m1 in -l1i..=l1i {
            for m2 in -l2i..=l2i {
                let m_out = m1 + m2;
                if m_out.abs() > ji {
                    continue;
                }
                let value = clebsch_gordan(l1, m1, l2, m2, j);
                if value.abs() > SPARSITY_THRESHOLD {
                    entries.push(CgEntry { m_out, m1, m2, value });
                }
            }
        }
        entries.sort_by_key(|e| (e.m_out, e.m1, e.m2));
    }
    Ok(CGTable {
        j,
        l1,
        l2,
        basis: Basis::Complex,
        entries,
    })
}

/// Row `m` of the unitary taking complex harmonics `Y_ℓ^μ` to real harmonics
/// `Y_{ℓm}`, as `(μ, coefficient)` pairs.
pub fn real_basis_row(m: i32) -> [(i32, Complex64); 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    match m.cmp(&0) {
        std::cmp::Ordering::Greater => [(-m, Complex64::new(s, 0.0)), (m, Complex64::new(sign * s, 0.0))],
        std::cmp::Ordering::Less => [(m, Complex64::new(0.0, s)), (-m, Complex64::new(0.0, -sign * s))],
        std::cmp::Ordering::Equal => [(0, Complex64::new(1.0, 0.0)), (0, Complex64::new(0.0, 0.0))],
    }
}

/// Dense `U_J · C · (U_ℓ₁ ⊗ U_ℓ₂)†` before any phase fixing, indexed
/// `[(M+J)·d₁d₂ + (m₁+ℓ₁)·d₂ + (m₂+ℓ₂)]`.
///
/// The result is purely real when `J+ℓ₁+ℓ₂` is even and purely imaginary when odd.
pub fn real_change_of_basis(j: u32, l1: u32, l2: u32) -> Result<Vec<Complex64>> {
    let complex = cg_complex(j, l1, l2)?;
    let (dj, d1, d2) = dims(j, l1, l2);
    let mut out = vec![Complex64::new(0.0, 0.0); dj * d1 * d2];
    if complex.entries.is_empty() {
        return Ok(out);
    }
    let mut lookup: HashMap<(i32, i32), f64> = HashMap::new();
    for e in &complex.entries {
        lookup.insert((e.m1, e.m2), e.value);
    }
    let (ji, l1i, l2i) = (j as i32, l1 as i32, l2 as i32);
    for big_m in -ji..=ji {
        let row_j = real_basis_row(big_m);
        for m1 in -l1i..=l1i {
            let row_1 = real_basis_row(m1);
            for m2 in -l2i..=l2i {
                let row_2 = real_basis_row(m2);
                let mut acc = Complex64::new(0.0, 0.0);
                for &(mu, uj) in row_j.iter().take(if big_m == 0 { 1 } else { 2 }) {
                    for &(a, u1) in row_1.iter().take(if m1 == 0 { 1 } else { 2 }) {
                        let b = mu - a;
                        for &(bb, u2) in row_2.iter().take(if m2 == 0 { 1 } else { 2 }) {
                            if bb != b {
                                continue;
                            }
                            if let Some(&c) = lookup.get(&(a, b)) {
                                acc += uj * c * u1.conj() * u2.conj();
                            }
                        }
                    }
                }
                out[((big_m + ji) as usize * d1 + (m1 + l1i) as usize) * d2 + (m2 + l2i) as usize] = acc;
            }
        }
    }
    Ok(out)
}

/// Real-basis table.
///
/// Parity-even triples keep the (real) change of basis. Parity-odd triples
/// come out purely imaginary; their imaginary part is stored, which makes
/// `√2·C¹₁₁(q⊗k) = q×k` in `(y, z, x)` component order.
pub fn cg_real(j: u32, l1: u32, l2: u32) -> Result<CGTable> {
    let raw = real_change_of_basis(j, l1, l2)?;
    let odd = (j + l1 + l2) % 2 == 1;
    let (_, d1, d2) = dims(j, l1, l2);
    let mut entries = Vec::new();
    for (idx, v) in raw.iter().enumerate() {
        let (keep, drop) = if odd { (v.im, v.re) } else { (v.re, v.im) };
        debug_assert!(drop.abs() < 1e-12, "non-real entry in real CG table");
        if keep.abs() > SPARSITY_THRESHOLD {
            let big_m = (idx / (d1 * d2)) as i32 - j as i32;
            let m1 = ((idx / d2) % d1) as i32 - l1 as i32;
            let m2 = (idx % d2) as i32 - l2 as i32;
            entries.push(CgEntry {
                m_out: big_m,
                m1,
                m2,
                value: keep,
            });
        }
    }
    Ok(CGTable {
        j,
        l1,
        l2,
        basis: Basis::Real,
        entries,
    })
}

#[inline]
fn dims(j: u32, l1: u32, l2: u32) -> (usize, usize, usize) {
    (2 * j as usize + 1, 2 * l1 as usize + 1, 2 * l2 as usize + 1)
}

impl CGTable {
    pub fn entries(&self) -> &[CgEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `(2J+1, 2ℓ₁+1, 2ℓ₂+1)`
    pub fn shape(&self) -> (usize, usize, usize) {
        dims(self.j, self.l1, self.l2)
    }

    pub fn cells(&self) -> usize {
        let (a, b, c) = self.shape();
        a * b * c
    }

    pub fn parity_even(&self) -> bool {
        (self.j + self.l1 + self.l2).is_multiple_of(2)
    }

    /// Dense array indexed `[(M+J)·d₁d₂ + (m₁+ℓ₁)·d₂ + (m₂+ℓ₂)]`.
    pub fn dense(&self) -> Vec<f64> {
        let (_, d1, d2) = self.shape();
        let mut out = vec![0.0; self.cells()];
        for e in &self.entries {
            out[self.index(e.m_out, e.m1, e.m2, d1, d2)] = e.value;
        }
        out
    }

    #[inline]
    fn index(&self, m_out: i32, m1: i32, m2: i32, d1: usize, d2: usize) -> usize {
        ((m_out + self.j as i32) as usize * d1 + (m1 + self.l1 as i32) as usize) * d2 + (m2 + self.l2 as i32) as usize
    }

    pub fn sparsity_stats(&self) -> SparsityStats {
        SparsityStats {
            nnz: self.nnz(),
            density: self.nnz() as f64 / self.cells() as f64,
        }
    }

    /// Copy with every coefficient scaled; used for fault injection in the bench harness.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut t = self.clone();
        t.entries.iter_mut().for_each(|e| e.value *= factor);
        t
    }

    /// Lines `J ℓ ℓ′ M m m′ value`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.entries {
            writeln!(
                w,
                "{} {} {} {} {} {} {:.16e}",
                self.j, self.l1, self.l2, e.m_out, e.m1, e.m2, e.value
            )?;
        }
        Ok(())
    }
}

/// Immutable set of all tables with `J, ℓ, ℓ′ ≤ max_l` in both bases.
#[derive(Debug)]
pub struct TableCache {
    max_l: u32,
    complex: Vec<CGTable>,
    real: Vec<CGTable>,
    build_time: Duration,
}

impl TableCache {
    pub fn build(max_l: u32) -> Result<Self> {
        if max_l > MAX_CACHE_DEGREE {
            return Err(Error::DegreeTooLarge(max_l, MAX_CACHE_DEGREE));
        }
        let start = Instant::now();
        let n = max_l + 1;
        let triples: Vec<(u32, u32, u32)> = (0..n)
            .flat_map(|j| (0..n).flat_map(move |a| (0..n).map(move |b| (j, a, b))))
            .collect();
        let built: Result<Vec<(CGTable, CGTable)>> = triples
            .par_iter()
            .map(|&(j, a, b)| Ok((cg_complex(j, a, b)?, cg_real(j, a, b)?)))
            .collect();
        let (complex, real) = built?.into_iter().unzip();
        Ok(TableCache {
            max_l,
            complex,
            real,
            build_time: start.elapsed(),
        })
    }

    pub fn max_l(&self) -> u32 {
        self.max_l
    }

    pub fn build_time(&self) -> Duration {
        self.build_time
    }

    pub fn len(&self) -> usize {
        self.real.len()
    }

    pub fn is_empty(&self) -> bool {
        self.real.is_empty()
    }

    fn slot(&self, j: u32, l1: u32, l2: u32) -> Option<usize> {
        let n = self.max_l + 1;
        (j < n && l1 < n && l2 < n).then(|| ((j * n + l1) * n + l2) as usize)
    }

    pub fn get(&self, basis: Basis, j: u32, l1: u32, l2: u32) -> Option<&CGTable> {
        let i = self.slot(j, l1, l2)?;
        Some(match basis {
            Basis::Complex => &self.complex[i],
            Basis::Real => &self.real[i],
        })
    }

    pub fn tables(&self, basis: Basis) -> &[CGTable] {
        match basis {
            Basis::Complex => &self.complex,
            Basis::Real => &self.real,
        }
    }
}

type Memo = RwLock<HashMap<(u32, u32, u32), Arc<CGTable>>>;

/// Process-wide memoised real-basis table, shared by product plans.
pub fn real_table(j: u32, l1: u32, l2: u32) -> Result<Arc<CGTable>> {
    static MEMO: OnceLock<Memo> = OnceLock::new();
    let memo = MEMO.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(t) = memo.read().expect("table memo poisoned").get(&(j, l1, l2)) {
        return Ok(Arc::clone(t));
    }
    let table = Arc::new(cg_real(j, l1, l2)?);
    let mut w = memo.write().expect("table memo poisoned");
    Ok(Arc::clone(w.entry((j, l1, l2)).or_insert(table)))
}
