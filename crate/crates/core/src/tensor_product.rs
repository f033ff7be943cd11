//! Pairwise Clebsch-Gordan contraction `u^J = Σ C^J_{ℓℓ′} a^ℓ ⊗ b^ℓ′`.
//!
//! A [`ProductPlan`] enumerates every admissible `(ℓ, ℓ′, J)` path once; the
//! dense and sparse kernels then run per (token, head). Heads never mix.
//!
//! Output layout in [`ChannelMode::Full`]: paths feeding the same `J` are
//! concatenated along channels in `(ℓ, ℓ′)` order, and inside a path the
//! channel pairs `(c, c′)` are row-major.

use std::ops::{AddAssign, Mul};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::irreps::{ComplexFeature, EquivariantFeature, Feature, IrrepsSignature};
use crate::so3::cg::{real_table, CGTable};
use crate::so3::wigner::DEGREE_ONE_AXES;

/// Scalars the contraction kernels accept: the coefficients are always real.
pub trait Scalar: Copy + Zero + AddAssign + Mul<Output = Self> + Mul<f64, Output = Self> + Send + Sync {}
impl Scalar for f64 {}
impl Scalar for Complex64 {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChannelMode {
    /// Every channel of `a` meets every channel of `b` (`m·m′` outputs per path).
    Full,
    /// Channel `c` of `a` meets channel `c` of `b` only.
    Elementwise,
}

/// Which `(ℓ, ℓ′, J)` triples a plan admits besides the triangle rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParitySelection {
    /// Every triangle-admissible triple, including the odd ones such as the cross product.
    All,
    /// Only triples with `ℓ + ℓ′ + J` even (the couplings present in products of spherical harmonics).
    Even,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kernel {
    Dense,
    Sparse,
}

#[derive(Clone, Debug)]
pub struct Path {
    pub l1: u32,
    pub l2: u32,
    pub j: u32,
    table: Arc<CGTable>,
    /// `(M, m₁, m₂, value)` with zero-based component indices.
    sparse: Vec<(u16, u16, u16, f64)>,
    dense: Vec<f64>,
    a_off: usize,
    b_off: usize,
    out_off: usize,
    mult_a: usize,
    mult_b: usize,
    channels: usize,
}

impl Path {
    pub fn table(&self) -> &CGTable {
        &self.table
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn nnz(&self) -> usize {
        self.sparse.len()
    }

    /// `2·(2J+1)(2ℓ+1)(2ℓ′+1)·channels`
    pub fn dense_flops(&self) -> u64 {
        2 * self.table.cells() as u64 * self.channels as u64
    }

    /// `2·nnz·channels`
    pub fn sparse_flops(&self) -> u64 {
        2 * self.sparse.len() as u64 * self.channels as u64
    }
}

#[derive(Debug)]
pub struct ProductPlan {
    in_a: IrrepsSignature,
    in_b: IrrepsSignature,
    out_sig: IrrepsSignature,
    mode: ChannelMode,
    parity: ParitySelection,
    paths: Vec<Path>,
    dense_executed: AtomicU64,
    sparse_executed: AtomicU64,
}

impl Clone for ProductPlan {
    fn clone(&self) -> Self {
        ProductPlan {
            in_a: self.in_a.clone(),
            in_b: self.in_b.clone(),
            out_sig: self.out_sig.clone(),
            mode: self.mode,
            parity: self.parity,
            paths: self.paths.clone(),
            dense_executed: AtomicU64::new(0),
            sparse_executed: AtomicU64::new(0),
        }
    }
}

/// Plan admitting every triangle-valid triple.
pub fn plan(
    in_a: &IrrepsSignature,
    in_b: &IrrepsSignature,
    out_degrees: &[u32],
    mode: ChannelMode,
) -> Result<ProductPlan> {
    ProductPlan::new(in_a, in_b, out_degrees, mode, ParitySelection::All)
}

impl ProductPlan {
    pub fn new(
        in_a: &IrrepsSignature,
        in_b: &IrrepsSignature,
        out_degrees: &[u32],
        mode: ChannelMode,
        parity: ParitySelection,
    ) -> Result<Self> {
        if in_a.heads() != in_b.heads() {
            return Err(Error::HeadMismatch(in_a.heads(), in_b.heads()));
        }
        let mut wanted = out_degrees.to_vec();
        wanted.sort_unstable();
        wanted.dedup();

        // (J, l1, l2, table) in output order
        let mut found: Vec<(u32, u32, u32, Arc<CGTable>, usize, usize)> = Vec::new();
        for ea in in_a.entries() {
            for eb in in_b.entries() {
                for &j in &wanted {
                    if parity == ParitySelection::Even && (ea.degree + eb.degree + j) % 2 == 1 {
                        continue;
                    }
                    let table = real_table(j, ea.degree, eb.degree)?;
                    if table.is_empty() {
                        continue;
                    }
                    if mode == ChannelMode::Elementwise && ea.mult != eb.mult {
                        return Err(Error::ChannelMismatch(format!(
                            "degree {} has {} channels, degree {} has {}",
                            ea.degree, ea.mult, eb.degree, eb.mult
                        )));
                    }
                    found.push((j, ea.degree, eb.degree, table, ea.mult, eb.mult));
                }
            }
        }
        found.sort_by_key(|p| (p.0, p.1, p.2));

        let channels_of = |ma: usize, mb: usize| match mode {
            ChannelMode::Full => ma * mb,
            ChannelMode::Elementwise => ma,
        };
        let mut out_entries: Vec<(u32, usize)> = Vec::new();
        for p in &found {
            let ch = channels_of(p.4, p.5);
            match out_entries.last_mut() {
                Some(last) if last.0 == p.0 => last.1 += ch,
                _ => out_entries.push((p.0, ch)),
            }
        }
        let out_sig = if out_entries.is_empty() {
            IrrepsSignature::empty(in_a.heads())
        } else {
            crate::irreps::make_signature(&out_entries, in_a.heads())?
        };

        let mut paths = Vec::with_capacity(found.len());
        let mut next_channel = 0usize;
        let mut current_j = None;
        for (j, l1, l2, table, ma, mb) in found {
            if current_j != Some(j) {
                current_j = Some(j);
                next_channel = 0;
            }
            let channels = channels_of(ma, mb);
            let (_, d1, d2) = table.shape();
            let sparse = table
                .entries()
                .iter()
                .map(|e| {
                    (
                        (e.m_out + j as i32) as u16,
                        (e.m1 + l1 as i32) as u16,
                        (e.m2 + l2 as i32) as u16,
                        e.value,
                    )
                })
                .collect();
            debug_assert_eq!(d1 * d2 * (2 * j as usize + 1), table.cells());
            paths.push(Path {
                l1,
                l2,
                j,
                dense: table.dense(),
                sparse,
                table,
                a_off: in_a.degree_offset(l1).unwrap_or(0),
                b_off: in_b.degree_offset(l2).unwrap_or(0),
                out_off: out_sig.degree_offset(j).unwrap_or(0) + next_channel * (2 * j as usize + 1),
                mult_a: ma,
                mult_b: mb,
                channels,
            });
            next_channel += channels;
        }
        Ok(ProductPlan {
            in_a: in_a.clone(),
            in_b: in_b.clone(),
            out_sig,
            mode,
            parity,
            paths,
            dense_executed: AtomicU64::new(0),
            sparse_executed: AtomicU64::new(0),
        })
    }

    pub fn in_a(&self) -> &IrrepsSignature {
        &self.in_a
    }

    pub fn in_b(&self) -> &IrrepsSignature {
        &self.in_b
    }

    pub fn out_signature(&self) -> &IrrepsSignature {
        &self.out_sig
    }

    pub fn mode(&self) -> ChannelMode {
        self.mode
    }

    pub fn parity(&self) -> ParitySelection {
        self.parity
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    /// Model flops of one (token, head) dense contraction.
    pub fn dense_flops(&self) -> u64 {
        self.paths.iter().map(Path::dense_flops).sum()
    }

    /// Model flops of one (token, head) sparse contraction.
    pub fn sparse_flops(&self) -> u64 {
        self.paths.iter().map(Path::sparse_flops).sum()
    }

    pub fn executed_dense_flops(&self) -> u64 {
        self.dense_executed.load(Ordering::Relaxed)
    }

    pub fn executed_sparse_flops(&self) -> u64 {
        self.sparse_executed.load(Ordering::Relaxed)
    }

    pub fn reset_counters(&self) {
        self.dense_executed.store(0, Ordering::Relaxed);
        self.sparse_executed.store(0, Ordering::Relaxed);
    }

    /// Adds the model cost of `count` (token, head) contractions to the counters.
    pub fn record(&self, kernel: Kernel, count: u64) {
        match kernel {
            Kernel::Dense => self
                .dense_executed
                .fetch_add(count * self.dense_flops(), Ordering::Relaxed),
            Kernel::Sparse => self
                .sparse_executed
                .fetch_add(count * self.sparse_flops(), Ordering::Relaxed),
        };
    }

    /// Perturbs one coefficient of every path. Negative control for the equivariance suites.
    pub fn inject_fault(&mut self) {
        for p in &mut self.paths {
            if let Some(first) = p.sparse.first_mut() {
                first.3 += 0.25;
                let (_, d1, d2) = p.table.shape();
                let idx = (first.0 as usize * d1 + first.1 as usize) * d2 + first.2 as usize;
                p.dense[idx] += 0.25;
            }
        }
    }

    fn channel_pairs(&self, p: &Path) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let (ma, mb) = (p.mult_a, p.mult_b);
        let full = self.mode == ChannelMode::Full;
        let n = if full { ma * mb } else { ma };
        (0..n).map(move |k| if full { (k / mb, k % mb, k) } else { (k, k, k) })
    }

    /// Accumulates the contraction of one (token, head) into `out`.
    pub fn contract_head<T: Scalar>(&self, kernel: Kernel, a: &[T], b: &[T], out: &mut [T]) {
        for p in &self.paths {
            let (dj, d1, d2) = p.table.shape();
            for (c1, c2, k) in self.channel_pairs(p) {
                let xa = &a[p.a_off + c1 * d1..p.a_off + (c1 + 1) * d1];
                let xb = &b[p.b_off + c2 * d2..p.b_off + (c2 + 1) * d2];
                let o = &mut out[p.out_off + k * dj..p.out_off + (k + 1) * dj];
                match kernel {
                    Kernel::Sparse => {
                        for &(m, i1, i2, v) in &p.sparse {
                            o[m as usize] += xa[i1 as usize] * xb[i2 as usize] * v;
                        }
                    }
                    Kernel::Dense => {
                        for (m, om) in o.iter_mut().enumerate() {
                            let slab = &p.dense[m * d1 * d2..(m + 1) * d1 * d2];
                            for (i1, &x1) in xa.iter().enumerate() {
                                for (i2, &x2) in xb.iter().enumerate() {
                                    *om += x1 * x2 * slab[i1 * d2 + i2];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Adjoint with respect to the first operand: accumulates `∂⟨g, C(a⊗b)⟩/∂a` into `grad_a`.
    pub fn adjoint_a_head<T: Scalar>(&self, g: &[T], b: &[T], grad_a: &mut [T]) {
        for p in &self.paths {
            let (dj, d1, d2) = p.table.shape();
            for (c1, c2, k) in self.channel_pairs(p) {
                let xb = &b[p.b_off + c2 * d2..p.b_off + (c2 + 1) * d2];
                let go = &g[p.out_off + k * dj..p.out_off + (k + 1) * dj];
                let ga = &mut grad_a[p.a_off + c1 * d1..p.a_off + (c1 + 1) * d1];
                for &(m, i1, i2, v) in &p.sparse {
                    ga[i1 as usize] += go[m as usize] * xb[i2 as usize] * v;
                }
            }
        }
    }

    /// Adjoint with respect to the second operand.
    pub fn adjoint_b_head<T: Scalar>(&self, g: &[T], a: &[T], grad_b: &mut [T]) {
        for p in &self.paths {
            let (dj, d1, d2) = p.table.shape();
            for (c1, c2, k) in self.channel_pairs(p) {
                let xa = &a[p.a_off + c1 * d1..p.a_off + (c1 + 1) * d1];
                let go = &g[p.out_off + k * dj..p.out_off + (k + 1) * dj];
                let gb = &mut grad_b[p.b_off + c2 * d2..p.b_off + (c2 + 1) * d2];
                for &(m, i1, i2, v) in &p.sparse {
                    gb[i2 as usize] += go[m as usize] * xa[i1 as usize] * v;
                }
            }
        }
    }

    pub(crate) fn check_operands<T: Copy + Zero>(&self, a: &Feature<T>, b: &Feature<T>) -> Result<()> {
        if a.signature() != &self.in_a {
            return Err(Error::ShapeMismatch(format!(
                "first operand has signature {} x{} heads, plan expects {} x{}",
                a.signature(),
                a.heads(),
                self.in_a,
                self.in_a.heads()
            )));
        }
        if b.signature() != &self.in_b {
            return Err(Error::ShapeMismatch(format!(
                "second operand has signature {} x{} heads, plan expects {} x{}",
                b.signature(),
                b.heads(),
                self.in_b,
                self.in_b.heads()
            )));
        }
        if a.tokens() != b.tokens() {
            return Err(Error::ShapeMismatch(format!(
                "token counts differ: {} vs {}",
                a.tokens(),
                b.tokens()
            )));
        }
        Ok(())
    }

    fn contract_generic<T: Scalar>(&self, kernel: Kernel, a: &Feature<T>, b: &Feature<T>) -> Result<Feature<T>> {
        self.check_operands(a, b)?;
        let n = a.tokens();
        let heads = self.in_a.heads();
        let mut out = Feature::<T>::zeros(&self.out_sig, n);
        let ow = self.out_sig.width();
        let tw = self.out_sig.total_width();
        if tw > 0 {
            let work = |(t, chunk): (usize, &mut [T])| {
                for h in 0..heads {
                    self.contract_head(kernel, a.head(t, h), b.head(t, h), &mut chunk[h * ow..(h + 1) * ow]);
                }
            };
            if n >= 64 {
                out.data_mut().par_chunks_mut(tw).enumerate().for_each(work);
            } else {
                out.data_mut().chunks_mut(tw).enumerate().for_each(work);
            }
        }
        self.record(kernel, (n * heads) as u64);
        Ok(out)
    }

    pub fn contract(
        &self,
        kernel: Kernel,
        a: &EquivariantFeature,
        b: &EquivariantFeature,
    ) -> Result<EquivariantFeature> {
        self.contract_generic(kernel, a, b)
    }

    /// Same contraction on complex operands (real coefficients).
    pub fn contract_complex(&self, kernel: Kernel, a: &ComplexFeature, b: &ComplexFeature) -> Result<ComplexFeature> {
        self.contract_generic(kernel, a, b)
    }

    /// Gradients of `⟨g, C(a⊗b)⟩` with respect to `a` and `b`.
    pub fn contract_adjoint(
        &self,
        grad_out: &EquivariantFeature,
        a: &EquivariantFeature,
        b: &EquivariantFeature,
    ) -> Result<(EquivariantFeature, EquivariantFeature)> {
        self.check_operands(a, b)?;
        if grad_out.signature() != &self.out_sig || grad_out.tokens() != a.tokens() {
            return Err(Error::ShapeMismatch("gradient does not match plan output".into()));
        }
        let mut ga = EquivariantFeature::zeros(&self.in_a, a.tokens());
        let mut gb = EquivariantFeature::zeros(&self.in_b, b.tokens());
        for t in 0..a.tokens() {
            for h in 0..self.in_a.heads() {
                self.adjoint_a_head(grad_out.head(t, h), b.head(t, h), ga.head_mut(t, h));
                self.adjoint_b_head(grad_out.head(t, h), a.head(t, h), gb.head_mut(t, h));
            }
        }
        Ok((ga, gb))
    }
}

pub fn contract_dense(
    plan: &ProductPlan,
    a: &EquivariantFeature,
    b: &EquivariantFeature,
) -> Result<EquivariantFeature> {
    plan.contract(Kernel::Dense, a, b)
}

pub fn contract_sparse(
    plan: &ProductPlan,
    a: &EquivariantFeature,
    b: &EquivariantFeature,
) -> Result<EquivariantFeature> {
    plan.contract(Kernel::Sparse, a, b)
}

/// Totals for the plan `degrees ≤ L` on both inputs and the output, one channel per degree.
pub fn flop_model(max_degree: u32, mode: ChannelMode) -> Result<(u64, u64)> {
    let sig = IrrepsSignature::uniform(max_degree, 1, 1)?;
    let out: Vec<u32> = (0..=max_degree).collect();
    let p = ProductPlan::new(&sig, &sig, &out, mode, ParitySelection::All)?;
    Ok((p.dense_flops(), p.sparse_flops()))
}

/// CSV `L,mode,dense_flops,sparse_flops,ratio`.
pub fn flop_report_csv(degrees: &[u32], mode: ChannelMode) -> Result<String> {
    let mut s = String::from("L,mode,dense_flops,sparse_flops,ratio\n");
    let name = match mode {
        ChannelMode::Full => "full",
        ChannelMode::Elementwise => "elementwise",
    };
    for &l in degrees {
        let (d, sp) = flop_model(l, mode)?;
        s.push_str(&format!("{l},{name},{d},{sp},{:.6}\n", sp as f64 / d as f64));
    }
    Ok(s)
}

#[derive(Clone, Debug)]
pub struct CrossProductReport {
    pub cases: usize,
    pub max_abs_err: f64,
    pub pass: bool,
}

/// Real-basis component vector (`(y, z, x)` order) of a Cartesian vector.
pub fn to_real_basis(v: [f64; 3]) -> [f64; 3] {
    [v[DEGREE_ONE_AXES[0]], v[DEGREE_ONE_AXES[1]], v[DEGREE_ONE_AXES[2]]]
}

pub fn from_real_basis(c: [f64; 3]) -> [f64; 3] {
    let mut v = [0.0; 3];
    for (k, &axis) in DEGREE_ONE_AXES.iter().enumerate() {
        v[axis] = c[k];
    }
    v
}

/// `√2·C¹₁₁(q⊗k)` for Cartesian `q`, `k`, returned in Cartesian order.
pub fn scaled_vector_coupling(q: [f64; 3], k: [f64; 3]) -> Result<[f64; 3]> {
    let sig = crate::irreps::make_signature(&[(1, 1)], 1)?;
    let p = plan(&sig, &sig, &[1], ChannelMode::Full)?;
    let mut out = [0.0; 3];
    p.contract_head(Kernel::Sparse, &to_real_basis(q), &to_real_basis(k), &mut out);
    let v = from_real_basis(out);
    Ok(v.map(|x| x * std::f64::consts::SQRT_2))
}

/// Checks `√2·C¹₁₁(q⊗k) = q×k` on random pairs.
pub fn cross_product_check(cases: usize, seed: u64) -> Result<CrossProductReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_err: f64 = 0.0;
    for _ in 0..cases {
        let mut draw = || -> [f64; 3] { std::array::from_fn(|_| StandardNormal.sample(&mut rng)) };
        let q = draw();
        let k = draw();
        let got = scaled_vector_coupling(q, k)?;
        let want = [
            q[1] * k[2] - q[2] * k[1],
            q[2] * k[0] - q[0] * k[2],
            q[0] * k[1] - q[1] * k[0],
        ];
        for i in 0..3 {
            max_err = max_err.max((got[i] - want[i]).abs());
        }
    }
    Ok(CrossProductReport {
        cases,
        max_abs_err: max_err,
        pass: max_err < 1e-13,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irreps::make_signature;

    #[test]
    fn vector_special_case_plan() {
        let v = make_signature(&[(1, 1)], 1).unwrap();
        let p = plan(&v, &v, &[1], ChannelMode::Full).unwrap();
        assert_eq!(p.paths().len(), 1);
        assert_eq!((p.paths()[0].l1, p.paths()[0].l2, p.paths()[0].j), (1, 1, 1));
        assert_eq!(p.out_signature().width(), 3);
    }

    #[test]
    fn parity_selection_drops_odd_paths() {
        let a = make_signature(&[(1, 1)], 1).unwrap();
        let b = make_signature(&[(2, 1)], 1).unwrap();
        let even = ProductPlan::new(&a, &b, &[2], ChannelMode::Full, ParitySelection::Even).unwrap();
        assert!(even.paths().is_empty());
        assert!(even.out_signature().is_empty());
        let all = plan(&a, &b, &[2], ChannelMode::Full).unwrap();
        assert_eq!(all.paths().len(), 1);
        for p in ProductPlan::new(&a, &b, &[1, 2, 3], ChannelMode::Full, ParitySelection::Even)
            .unwrap()
            .paths()
        {
            assert_eq!((p.l1 + p.l2 + p.j) % 2, 0);
        }
    }

    #[test]
    fn multiplicities() {
        let a = make_signature(&[(0, 2), (1, 3)], 2).unwrap();
        let b = make_signature(&[(1, 2)], 2).unwrap();
        let p = plan(&a, &b, &[0, 1, 2], ChannelMode::Full).unwrap();
        // J=1: (0,1) 2·2 + (1,1) 3·2
        assert_eq!(p.out_signature().mult(1), Some(10));
        assert_eq!(p.out_signature().mult(0), Some(6));
        assert_eq!(p.out_signature().mult(2), Some(6));
        for path in p.paths() {
            assert_eq!(
                path.dense_flops(),
                2 * path.table().cells() as u64 * path.channels() as u64
            );
            assert_eq!(
                path.sparse_flops(),
                2 * path.table().nnz() as u64 * path.channels() as u64
            );
        }

        let c = make_signature(&[(1, 3)], 2).unwrap();
        let e = plan(&c, &c, &[0, 1, 2], ChannelMode::Elementwise).unwrap();
        assert_eq!(e.out_signature().mult(1), Some(3));
        assert!(matches!(
            plan(&a, &b, &[1], ChannelMode::Elementwise),
            Err(Error::ChannelMismatch(_))
        ));
        let other_heads = make_signature(&[(1, 2)], 3).unwrap();
        assert!(matches!(
            plan(&a, &other_heads, &[1], ChannelMode::Full),
            Err(Error::HeadMismatch(2, 3))
        ));
    }

    #[test]
    fn basis_vectors_cross() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = make_signature(&[(1, 1)], 1).unwrap();
        let p = plan(&v, &v, &[1], ChannelMode::Full).unwrap();
        let mut a = EquivariantFeature::zeros(&v, 2);
        let mut b = EquivariantFeature::zeros(&v, 2);
        for t in 0..2 {
            a.block_mut(t, 0, 1, 0)
                .unwrap()
                .copy_from_slice(&to_real_basis([1., 0., 0.]));
            b.block_mut(t, 0, 1, 0)
                .unwrap()
                .copy_from_slice(&to_real_basis([0., 1., 0.]));
        }
        let u = contract_dense(&p, &a, &b).unwrap();
        for t in 0..2 {
            let blk = u.block(t, 0, 1, 0).unwrap();
            let v = from_real_basis([blk[0], blk[1], blk[2]]);
            assert!((v[0]).abs() < 1e-15 && (v[1]).abs() < 1e-15 && (v[2] - s).abs() < 1e-15);
        }
        assert_eq!(p.executed_dense_flops(), 2 * p.dense_flops());

        let same = scaled_vector_coupling([0.3, -1.0, 2.0], [0.3, -1.0, 2.0]).unwrap();
        assert!(same.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn cross_product_magnitude() {
        let q = [1.0, 2.0, -0.5];
        let k = [-0.3, 0.7, 1.1];
        let c = scaled_vector_coupling(q, k).unwrap();
        let n = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let cos = (q[0] * k[0] + q[1] * k[1] + q[2] * k[2]) / (n(q) * n(k));
        let sin = (1.0 - cos * cos).sqrt();
        assert!((n(c) - n(q) * n(k) * sin).abs() < 1e-13);
        let r = cross_product_check(100, 1).unwrap();
        assert!(r.pass, "max err {}", r.max_abs_err);
    }

    #[test]
    fn empty_plan_gives_zero_width_output() {
        let a = make_signature(&[(0, 1)], 1).unwrap();
        let p = plan(&a, &a, &[3], ChannelMode::Full).unwrap();
        let f = EquivariantFeature::zeros(&a, 4);
        let out = contract_sparse(&p, &f, &f).unwrap();
        assert_eq!(out.data().len(), 0);
        assert_eq!(out.tokens(), 4);
    }

    #[test]
    fn flop_csv() {
        let csv = flop_report_csv(&[1, 2], ChannelMode::Full).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "L,mode,dense_flops,sparse_flops,ratio");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,full,"));
    }
}
