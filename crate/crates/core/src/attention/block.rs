use std::io::{Read, Write};
use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gate::{apply_gate, gate_adjoint, GateCache, GateNetwork};
use super::linear::EquivariantLinear;
use crate::conv::{conv_adjoint, conv_fft, Boundary, ConvConfig};
use crate::error::{Error, Result};
use crate::irreps::{make_signature, EquivariantFeature, IrrepsSignature};
use crate::tensor_product::{ChannelMode, Kernel, ParitySelection, ProductPlan};

/// How the gated convolution output meets the values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum GatingMode {
    /// Per-token CG tensor product of gated `u` with `v`.
    #[default]
    Cg,
    /// Channel concatenation of gated `u` and `v`.
    Concat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockConfig {
    pub signature: IrrepsSignature,
    pub l_out: u32,
    pub channel_mode: ChannelMode,
    pub gating: GatingMode,
    pub parity: ParitySelection,
    pub boundary: Boundary,
    pub seed: u64,
}

impl BlockConfig {
    pub fn new(signature: IrrepsSignature, l_out: u32) -> Self {
        BlockConfig {
            signature,
            l_out,
            channel_mode: ChannelMode::Full,
            gating: GatingMode::Cg,
            parity: ParitySelection::All,
            boundary: Boundary::Circular,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mode(mut self, mode: ChannelMode) -> Self {
        self.channel_mode = mode;
        self
    }

    pub fn with_gating(mut self, gating: GatingMode) -> Self {
        self.gating = gating;
        self
    }
}

/// Learnable state of a block, in serialization order.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockParams {
    pub wq: EquivariantLinear,
    pub wk: EquivariantLinear,
    pub wv: EquivariantLinear,
    /// Reduces the concatenated convolution paths to the working multiplicity.
    pub mix: EquivariantLinear,
    pub gate: GateNetwork,
    /// Output MLP back to the input multiplicities.
    pub wout: EquivariantLinear,
}

/// Names of the parameter groups, matching [`BlockParams::groups`].
pub const PARAM_GROUPS: [&str; 6] = ["wq", "wk", "wv", "mix", "gate", "wout"];

impl BlockParams {
    fn slices(&self) -> [&[f64]; 6] {
        [
            self.wq.params(),
            self.wk.params(),
            self.wv.params(),
            self.mix.params(),
            self.gate.params(),
            self.wout.params(),
        ]
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.wq.params_mut(),
            self.wk.params_mut(),
            self.wv.params_mut(),
            self.mix.params_mut(),
            self.gate.params_mut(),
            self.wout.params_mut(),
        ]
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index range of each group inside [`to_vec`](Self::to_vec).
    pub fn groups(&self) -> Vec<(&'static str, Range<usize>)> {
        let mut start = 0;
        PARAM_GROUPS
            .iter()
            .zip(self.slices())
            .map(|(name, s)| {
                let r = start..start + s.len();
                start = r.end;
                (*name, r)
            })
            .collect()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn set_from_slice(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        let mut rest = values;
        for s in self.slices_mut() {
            let (head, tail) = rest.split_at(s.len());
            s.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    fn zeroed(&self) -> Self {
        let mut z = self.clone();
        z.slices_mut().into_iter().for_each(|s| s.fill(0.0));
        z
    }
}

/// Forward intermediates needed by [`Block::attend_adjoint`].
struct Trace {
    centred: EquivariantFeature,
    q: EquivariantFeature,
    k: EquivariantFeature,
    v: EquivariantFeature,
    conv: EquivariantFeature,
    u: EquivariantFeature,
    gate_caches: Vec<GateCache>,
    gated: EquivariantFeature,
    w: EquivariantFeature,
}

/// One equivariant long-convolution attention layer.
#[derive(Clone, Debug)]
pub struct Block {
    cfg: BlockConfig,
    conv: ConvConfig,
    value_plan: Option<ProductPlan>,
    u_sig: IrrepsSignature,
    w_sig: IrrepsSignature,
    params: BlockParams,
}

/// Post-hook signature: receives the centred input, returns a feature with
/// the block signature that is added to the attention output.
pub type PostHook<'a> = &'a dyn Fn(&EquivariantFeature) -> Result<EquivariantFeature>;

fn concat_signature(a: &IrrepsSignature, b: &IrrepsSignature) -> Result<IrrepsSignature> {
    let mut entries: Vec<(u32, usize)> = a.entries().iter().map(|e| (e.degree, e.mult)).collect();
    for e in b.entries() {
        match entries.iter_mut().find(|x| x.0 == e.degree) {
            Some(x) => x.1 += e.mult,
            None => entries.push((e.degree, e.mult)),
        }
    }
    make_signature(&entries, a.heads())
}

/// Stacks the channels of `a` before those of `b` within each degree.
fn concat(sig: &IrrepsSignature, a: &EquivariantFeature, b: &EquivariantFeature) -> EquivariantFeature {
    let mut out = EquivariantFeature::zeros(sig, a.tokens());
    for t in 0..a.tokens() {
        for h in 0..a.heads() {
            let dst = out.head_mut(t, h);
            for e in sig.entries() {
                let d = e.dim();
                let mut pos = sig.degree_offset(e.degree).unwrap_or(0);
                for src in [a, b] {
                    let s = src.signature();
                    if let (Some(off), Some(m)) = (s.degree_offset(e.degree), s.mult(e.degree)) {
                        dst[pos..pos + m * d].copy_from_slice(&src.head(t, h)[off..off + m * d]);
                        pos += m * d;
                    }
                }
            }
        }
    }
    out
}

fn split_concat(
    g: &EquivariantFeature,
    a_sig: &IrrepsSignature,
    b_sig: &IrrepsSignature,
) -> (EquivariantFeature, EquivariantFeature) {
    let sig = g.signature();
    let mut ga = EquivariantFeature::zeros(a_sig, g.tokens());
    let mut gb = EquivariantFeature::zeros(b_sig, g.tokens());
    for t in 0..g.tokens() {
        for h in 0..g.heads() {
            let src = g.head(t, h);
            for e in sig.entries() {
                let d = e.dim();
                let mut pos = sig.degree_offset(e.degree).unwrap_or(0);
                for dst in [&mut ga, &mut gb] {
                    let s = dst.signature().clone();
                    if let (Some(off), Some(m)) = (s.degree_offset(e.degree), s.mult(e.degree)) {
                        dst.head_mut(t, h)[off..off + m * d].copy_from_slice(&src[pos..pos + m * d]);
                        pos += m * d;
                    }
                }
            }
        }
    }
    (ga, gb)
}

impl Block {
    /// Builds the block with parameters drawn from `cfg.seed`.
    pub fn new(cfg: BlockConfig) -> Result<Self> {
        let mut block = Self::with_zero_params(cfg)?;
        let mut rng = ChaCha8Rng::seed_from_u64(block.cfg.seed);
        let s = &block.cfg.signature;
        let conv_sig = block.conv.out_signature().clone();
        block.params = BlockParams {
            wq: EquivariantLinear::random(s, s, false, &mut rng),
            wk: EquivariantLinear::random(s, s, false, &mut rng),
            wv: EquivariantLinear::random(s, s, false, &mut rng),
            mix: EquivariantLinear::random(&conv_sig, &block.u_sig, false, &mut rng),
            gate: GateNetwork::random(&block.u_sig, &mut rng),
            wout: EquivariantLinear::random(&block.w_sig, s, true, &mut rng),
        };
        Ok(block)
    }

    /// All weights zero and gates saturated: `attend` is the identity.
    pub fn identity(cfg: BlockConfig) -> Result<Self> {
        let mut block = Self::with_zero_params(cfg)?;
        block.params.gate = GateNetwork::saturated(&block.u_sig);
        Ok(block)
    }

    fn with_zero_params(cfg: BlockConfig) -> Result<Self> {
        let s = cfg.signature.clone();
        if s.is_empty() {
            return Err(Error::InvalidSignature("block signature is empty".into()));
        }
        let out_degrees: Vec<u32> = (0..=cfg.l_out).collect();
        let conv_plan = ProductPlan::new(&s, &s, &out_degrees, cfg.channel_mode, cfg.parity)?;
        if conv_plan.out_signature().is_empty() {
            return Err(Error::InvalidSignature(format!(
                "no coupling path from {s} reaches degrees ≤ {}",
                cfg.l_out
            )));
        }
        let conv = ConvConfig::new(conv_plan, cfg.boundary);
        let working = s.entries().iter().map(|e| e.mult).max().unwrap_or(1);
        let u_entries: Vec<(u32, usize)> = conv.out_signature().degrees().map(|d| (d, working)).collect();
        let u_sig = make_signature(&u_entries, s.heads())?;
        let (value_plan, w_sig) = match cfg.gating {
            GatingMode::Cg => {
                let degrees: Vec<u32> = s.degrees().collect();
                let p = ProductPlan::new(&u_sig, &s, &degrees, cfg.channel_mode, cfg.parity)?;
                let w = p.out_signature().clone();
                (Some(p), w)
            }
            GatingMode::Concat => (None, concat_signature(&u_sig, &s)?),
        };
        let params = BlockParams {
            wq: EquivariantLinear::zeros(&s, &s, false),
            wk: EquivariantLinear::zeros(&s, &s, false),
            wv: EquivariantLinear::zeros(&s, &s, false),
            mix: EquivariantLinear::zeros(conv.out_signature(), &u_sig, false),
            gate: GateNetwork::for_signature(&u_sig),
            wout: EquivariantLinear::zeros(&w_sig, &s, true),
        };
        Ok(Block {
            cfg,
            conv,
            value_plan,
            u_sig,
            w_sig,
            params,
        })
    }

    pub fn config(&self) -> &BlockConfig {
        &self.cfg
    }

    pub fn signature(&self) -> &IrrepsSignature {
        &self.cfg.signature
    }

    pub fn params(&self) -> &BlockParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut BlockParams {
        &mut self.params
    }

    pub fn conv_config(&self) -> &ConvConfig {
        &self.conv
    }

    /// Applies the three projections.
    pub fn project_qkv(
        &self,
        f: &EquivariantFeature,
    ) -> Result<(EquivariantFeature, EquivariantFeature, EquivariantFeature)> {
        Ok((
            self.params.wq.apply(f)?,
            self.params.wk.apply(f)?,
            self.params.wv.apply(f)?,
        ))
    }

    /// Invariant gating of a convolution output with this block's network.
    pub fn gate(&self, u: &EquivariantFeature) -> Result<EquivariantFeature> {
        Ok(apply_gate(&self.params.gate, u)?.0)
    }

    fn centre(&self, f: &EquivariantFeature) -> Result<EquivariantFeature> {
        if f.signature().contains(1) {
            Ok(f.subtract_mean(1)?.0)
        } else {
            Ok(f.clone())
        }
    }

    fn forward(&self, f_in: &EquivariantFeature) -> Result<(EquivariantFeature, Trace)> {
        if f_in.signature() != &self.cfg.signature {
            return Err(Error::ShapeMismatch(format!(
                "block expects {} x{} heads, got {} x{}",
                self.cfg.signature,
                self.cfg.signature.heads(),
                f_in.signature(),
                f_in.heads()
            )));
        }
        let centred = self.centre(f_in)?;
        let (q, k, v) = self.project_qkv(&centred)?;
        let conv = conv_fft(&self.conv, &q, &k)?;
        let u = self.params.mix.apply(&conv)?;
        let (gated, gate_caches) = apply_gate(&self.params.gate, &u)?;
        let w = match &self.value_plan {
            Some(p) => p.contract(Kernel::Sparse, &gated, &v)?,
            None => concat(&self.w_sig, &gated, &v),
        };
        let mut out = self.params.wout.apply(&w)?;
        out.axpy(1.0, f_in);
        Ok((
            out,
            Trace {
                centred,
                q,
                k,
                v,
                conv,
                u,
                gate_caches,
                gated,
                w,
            },
        ))
    }

    /// `f_in + MLP(core(f_in − mean₁))`.
    pub fn attend(&self, f_in: &EquivariantFeature) -> Result<EquivariantFeature> {
        Ok(self.forward(f_in)?.0)
    }

    /// As [`attend`](Self::attend), with `hook(centred input)` summed into the output.
    pub fn attend_with_hook(&self, f_in: &EquivariantFeature, hook: PostHook<'_>) -> Result<EquivariantFeature> {
        let (mut out, trace) = self.forward(f_in)?;
        let extra = hook(&trace.centred)?;
        if extra.signature() != out.signature() || extra.tokens() != out.tokens() {
            return Err(Error::ShapeMismatch("post-hook output does not match the block".into()));
        }
        out.axpy(1.0, &extra);
        Ok(out)
    }

    /// Reverse pass of [`attend`](Self::attend): `(∂/∂f_in, ∂/∂params)` of `⟨grad_out, attend(f_in)⟩`.
    pub fn attend_adjoint(
        &self,
        grad_out: &EquivariantFeature,
        f_in: &EquivariantFeature,
    ) -> Result<(EquivariantFeature, BlockParams)> {
        if grad_out.signature() != &self.cfg.signature || grad_out.tokens() != f_in.tokens() {
            return Err(Error::ShapeMismatch("gradient does not match block output".into()));
        }
        let (_, tr) = self.forward(f_in)?;
        let p = &self.params;
        let mut grads = p.zeroed();

        let (g_w, g_out) = p.wout.adjoint(grad_out, &tr.w)?;
        grads.wout = g_out;
        let (g_gated, g_v_value) = match &self.value_plan {
            Some(plan) => plan.contract_adjoint(&g_w, &tr.gated, &tr.v)?,
            None => split_concat(&g_w, &self.u_sig, &self.cfg.signature),
        };
        let g_u = gate_adjoint(&p.gate, &tr.u, &tr.gate_caches, &g_gated, &mut grads.gate)?;
        let (g_conv, g_mix) = p.mix.adjoint(&g_u, &tr.conv)?;
        grads.mix = g_mix;
        let (g_q, g_k) = conv_adjoint(&self.conv, &g_conv, &tr.q, &tr.k)?;

        let (gq_in, g_wq) = p.wq.adjoint(&g_q, &tr.centred)?;
        let (gk_in, g_wk) = p.wk.adjoint(&g_k, &tr.centred)?;
        let (gv_in, g_wv) = p.wv.adjoint(&g_v_value, &tr.centred)?;
        grads.wq = g_wq;
        grads.wk = g_wk;
        grads.wv = g_wv;

        let mut g_centred = gq_in;
        g_centred.axpy(1.0, &gk_in);
        g_centred.axpy(1.0, &gv_in);
        // centring is an orthogonal projection, hence self-adjoint
        let mut g_in = self.centre(&g_centred)?;
        g_in.axpy(1.0, grad_out);
        Ok((g_in, grads))
    }

    /// Writes the `CGB1` container.
    pub fn write_params<W: Write>(&self, mut w: W) -> Result<()> {
        let c = &self.cfg;
        w.write_all(CGB1_MAGIC)?;
        w.write_all(&CGB1_VERSION.to_le_bytes())?;
        w.write_all(&c.seed.to_le_bytes())?;
        let sig = c.signature.to_string();
        w.write_all(&(sig.len() as u32).to_le_bytes())?;
        w.write_all(sig.as_bytes())?;
        w.write_all(&(c.signature.heads() as u32).to_le_bytes())?;
        w.write_all(&c.l_out.to_le_bytes())?;
        w.write_all(&[
            matches!(c.channel_mode, ChannelMode::Elementwise) as u8,
            matches!(c.gating, GatingMode::Concat) as u8,
            matches!(c.parity, ParitySelection::Even) as u8,
            matches!(c.boundary, Boundary::Linear) as u8,
        ])?;
        let values = self.params.to_vec();
        w.write_all(&(values.len() as u64).to_le_bytes())?;
        for v in values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a `CGB1` container written by [`write_params`](Self::write_params).
    pub fn read_params<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CGB1_MAGIC {
            return Err(Error::Parse("not a CGB1 file".into()));
        }
        let version = read_u32(&mut r)?;
        if version != CGB1_VERSION {
            return Err(Error::Parse(format!("unsupported CGB1 version {version}")));
        }
        let seed = read_u64(&mut r)?;
        let len = read_u32(&mut r)? as usize;
        let mut text = vec![0u8; len];
        r.read_exact(&mut text)?;
        let text = String::from_utf8(text).map_err(|e| Error::Parse(e.to_string()))?;
        let heads = read_u32(&mut r)? as usize;
        let l_out = read_u32(&mut r)?;
        let mut flags = [0u8; 4];
        r.read_exact(&mut flags)?;
        let cfg = BlockConfig {
            signature: IrrepsSignature::parse_entries(&text, heads)?,
            l_out,
            channel_mode: if flags[0] == 1 {
                ChannelMode::Elementwise
            } else {
                ChannelMode::Full
            },
            gating: if flags[1] == 1 {
                GatingMode::Concat
            } else {
                GatingMode::Cg
            },
            parity: if flags[2] == 1 {
                ParitySelection::Even
            } else {
                ParitySelection::All
            },
            boundary: if flags[3] == 1 {
                Boundary::Linear
            } else {
                Boundary::Circular
            },
            seed,
        };
        let mut block = Self::with_zero_params(cfg)?;
        let count = read_u64(&mut r)? as usize;
        if count != block.params.len() {
            return Err(Error::SizeMismatch {
                expected: block.params.len(),
                got: count,
            });
        }
        let mut values = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        block.params.set_from_slice(&values)?;
        Ok(block)
    }
}

pub const CGB1_MAGIC: &[u8; 4] = b"CGB1";
pub const CGB1_VERSION: u32 = 1;

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Applies `blocks` in order.
pub fn stack(blocks: &[Block], f_in: &EquivariantFeature) -> Result<EquivariantFeature> {
    let mut f = f_in.clone();
    for (i, b) in blocks.iter().enumerate() {
        if b.signature() != f.signature() {
            return Err(Error::SignatureMismatch(format!(
                "block {i} expects {} x{}, receives {} x{}",
                b.signature(),
                b.signature().heads(),
                f.signature(),
                f.heads()
            )));
        }
        f = b.attend(&f)?;
    }
    Ok(f)
}

/// Builds each configuration and applies the resulting stack.
pub fn stack_configs(configs: &[BlockConfig], f_in: &EquivariantFeature) -> Result<EquivariantFeature> {
    for pair in configs.windows(2) {
        if pair[0].signature != pair[1].signature {
            return Err(Error::SignatureMismatch(format!(
                "{} followed by {}",
                pair[0].signature, pair[1].signature
            )));
        }
    }
    let blocks = configs.iter().cloned().map(Block::new).collect::<Result<Vec<_>>>()?;
    stack(&blocks, f_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::random_rotation;
    use crate::so3::wigner_d;

    fn small_cfg() -> BlockConfig {
        BlockConfig::new(make_signature(&[(0, 2), (1, 2), (2, 1)], 2).unwrap(), 2).with_seed(5)
    }

    #[test]
    fn identity_block_returns_input() {
        let b = Block::identity(small_cfg()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = EquivariantFeature::random(b.signature(), 7, &mut rng);
        assert_eq!(b.attend(&f).unwrap(), f);
    }

    #[test]
    fn seeded_construction_is_deterministic() {
        let a = Block::new(small_cfg()).unwrap();
        let b = Block::new(small_cfg()).unwrap();
        assert_eq!(a.params(), b.params());
        let c = Block::new(small_cfg().with_seed(6)).unwrap();
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn attend_is_equivariant() {
        for gating in [GatingMode::Cg, GatingMode::Concat] {
            let b = Block::new(small_cfg().with_gating(gating)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let f = EquivariantFeature::random(b.signature(), 9, &mut rng);
            let d = wigner_d(b.signature(), &random_rotation(3)).unwrap();
            let lhs = b.attend(&d.apply(&f).unwrap()).unwrap();
            let rhs = d.apply(&b.attend(&f).unwrap()).unwrap();
            assert!(lhs.rel_err(&rhs) < 1e-12, "{gating:?}");
        }
    }

    #[test]
    fn degree_one_translation_passes_through() {
        let b = Block::new(small_cfg()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = EquivariantFeature::random(b.signature(), 6, &mut rng);
        let mut shifted = f.clone();
        let c = [0.3, -1.2, 0.7];
        for t in 0..6 {
            for h in 0..2 {
                for ch in 0..2 {
                    let blk = shifted.block_mut(t, h, 1, ch).unwrap();
                    blk.iter_mut().zip(c).for_each(|(x, y)| *x += y);
                }
            }
        }
        let mut expected = b.attend(&f).unwrap();
        for t in 0..6 {
            for h in 0..2 {
                for ch in 0..2 {
                    let blk = expected.block_mut(t, h, 1, ch).unwrap();
                    blk.iter_mut().zip(c).for_each(|(x, y)| *x += y);
                }
            }
        }
        assert!(b.attend(&shifted).unwrap().max_abs_diff(&expected) < 1e-10);
    }

    #[test]
    fn post_hook_is_added() {
        let b = Block::identity(small_cfg()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = EquivariantFeature::random(b.signature(), 4, &mut rng);
        let out = b.attend_with_hook(&f, &|x| Ok(x.clone())).unwrap();
        let mut expected = f.clone();
        expected.axpy(1.0, &f.subtract_mean(1).unwrap().0);
        assert!(out.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn adjoint_dot_product_test() {
        for gating in [GatingMode::Cg, GatingMode::Concat] {
            let b = Block::new(small_cfg().with_gating(gating)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let f = EquivariantFeature::random(b.signature(), 5, &mut rng);
            let g = EquivariantFeature::random(b.signature(), 5, &mut rng);
            let df = EquivariantFeature::random(b.signature(), 5, &mut rng);
            let (gf, _) = b.attend_adjoint(&g, &f).unwrap();
            let h = 1e-5;
            let mut fp = f.clone();
            fp.axpy(h, &df);
            let mut fm = f.clone();
            fm.axpy(-h, &df);
            let fd = (g.dot(&b.attend(&fp).unwrap()) - g.dot(&b.attend(&fm).unwrap())) / (2.0 * h);
            let an = gf.dot(&df);
            assert!((fd - an).abs() <= 1e-7 * an.abs().max(1.0), "{gating:?}: {fd} vs {an}");
        }
    }

    #[test]
    fn zero_gradient_gives_zero() {
        let b = Block::new(small_cfg()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = EquivariantFeature::random(b.signature(), 3, &mut rng);
        let z = EquivariantFeature::zeros(b.signature(), 3);
        let (gf, gp) = b.attend_adjoint(&z, &f).unwrap();
        assert_eq!(gf.norm(), 0.0);
        assert!(gp.to_vec().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cgb1_round_trip() {
        let b = Block::new(small_cfg().with_gating(GatingMode::Concat)).unwrap();
        let mut buf = Vec::new();
        b.write_params(&mut buf).unwrap();
        let c = Block::read_params(buf.as_slice()).unwrap();
        assert_eq!(c.config(), b.config());
        assert_eq!(c.params(), b.params());
        buf[0] = b'X';
        assert!(Block::read_params(buf.as_slice()).is_err());
    }

    #[test]
    fn stack_checks_signatures() {
        let a = Block::new(small_cfg()).unwrap();
        let other = BlockConfig::new(make_signature(&[(1, 1)], 2).unwrap(), 1);
        let b = Block::new(other).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = EquivariantFeature::random(a.signature(), 3, &mut rng);
        assert!(matches!(stack(&[a.clone(), b], &f), Err(Error::SignatureMismatch(_))));
        assert_eq!(stack(std::slice::from_ref(&a), &f).unwrap(), a.attend(&f).unwrap());
    }
}
