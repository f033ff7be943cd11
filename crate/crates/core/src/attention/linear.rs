use rand::Rng;

use crate::error::{Error, Result};
use crate::irreps::{EquivariantFeature, IrrepsSignature};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct DegreeBlock {
    degree: u32,
    rows: usize,
    cols: usize,
    offset: usize,
}

/// Channel mixing within each degree, `Wˡ ⊗ I_{2ℓ+1}`, shared across heads.
///
/// Output degrees missing from the input produce zeros. The optional bias
/// acts on degree 0 only.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivariantLinear {
    in_sig: IrrepsSignature,
    out_sig: IrrepsSignature,
    blocks: Vec<DegreeBlock>,
    bias: Option<(usize, usize)>,
    params: Vec<f64>,
}

impl EquivariantLinear {
    pub fn zeros(in_sig: &IrrepsSignature, out_sig: &IrrepsSignature, with_bias: bool) -> Self {
        let mut blocks = Vec::new();
        let mut offset = 0;
        for e in out_sig.entries() {
            if let Some(cols) = in_sig.mult(e.degree) {
                blocks.push(DegreeBlock {
                    degree: e.degree,
                    rows: e.mult,
                    cols,
                    offset,
                });
                offset += e.mult * cols;
            }
        }
        let bias = match (with_bias, out_sig.mult(0)) {
            (true, Some(m)) => {
                let b = (offset, m);
                offset += m;
                Some(b)
            }
            _ => None,
        };
        EquivariantLinear {
            in_sig: in_sig.clone(),
            out_sig: out_sig.clone(),
            blocks,
            bias,
            params: vec![0.0; offset],
        }
    }

    /// Uniform weights in `±1/√m_in`, zero bias.
    pub fn random<R: Rng + ?Sized>(
        in_sig: &IrrepsSignature,
        out_sig: &IrrepsSignature,
        with_bias: bool,
        rng: &mut R,
    ) -> Self {
        let mut lin = Self::zeros(in_sig, out_sig, with_bias);
        for b in lin.blocks.clone() {
            let a = 1.0 / (b.cols as f64).sqrt();
            for w in &mut lin.params[b.offset..b.offset + b.rows * b.cols] {
                *w = rng.gen_range(-a..a);
            }
        }
        lin
    }

    /// Ones on the diagonal of every shared degree.
    pub fn identity(in_sig: &IrrepsSignature, out_sig: &IrrepsSignature) -> Self {
        let mut lin = Self::zeros(in_sig, out_sig, false);
        for b in lin.blocks.clone() {
            for r in 0..b.rows.min(b.cols) {
                lin.params[b.offset + r * b.cols + r] = 1.0;
            }
        }
        lin
    }

    pub fn in_signature(&self) -> &IrrepsSignature {
        &self.in_sig
    }

    pub fn out_signature(&self) -> &IrrepsSignature {
        &self.out_sig
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Weight matrix (row-major, `m_out × m_in`) of one degree.
    pub fn matrix(&self, degree: u32) -> Option<&[f64]> {
        self.blocks
            .iter()
            .find(|b| b.degree == degree)
            .map(|b| &self.params[b.offset..b.offset + b.rows * b.cols])
    }

    pub fn apply(&self, f: &EquivariantFeature) -> Result<EquivariantFeature> {
        if f.signature() != &self.in_sig {
            return Err(Error::ShapeMismatch(format!(
                "linear map expects {}, got {}",
                self.in_sig,
                f.signature()
            )));
        }
        let mut out = EquivariantFeature::zeros(&self.out_sig, f.tokens());
        for t in 0..f.tokens() {
            for h in 0..f.heads() {
                let x = f.head(t, h);
                let y = out.head_mut(t, h);
                for b in &self.blocks {
                    let d = 2 * b.degree as usize + 1;
                    let xo = self.in_sig.degree_offset(b.degree).unwrap_or(0);
                    let yo = self.out_sig.degree_offset(b.degree).unwrap_or(0);
                    let w = &self.params[b.offset..b.offset + b.rows * b.cols];
                    for r in 0..b.rows {
                        let yr = &mut y[yo + r * d..yo + (r + 1) * d];
                        for c in 0..b.cols {
                            let wrc = w[r * b.cols + c];
                            for (yk, xk) in yr.iter_mut().zip(&x[xo + c * d..xo + (c + 1) * d]) {
                                *yk += wrc * xk;
                            }
                        }
                    }
                }
                if let Some((off, m)) = self.bias {
                    let yo = self.out_sig.degree_offset(0).unwrap_or(0);
                    for r in 0..m {
                        y[yo + r] += self.params[off + r];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Returns `(∂/∂input, ∂/∂params)` of `⟨g, self(f)⟩`; the parameter
    /// gradient shares this map's layout.
    pub fn adjoint(
        &self,
        g: &EquivariantFeature,
        f: &EquivariantFeature,
    ) -> Result<(EquivariantFeature, EquivariantLinear)> {
        if g.signature() != &self.out_sig || f.signature() != &self.in_sig || g.tokens() != f.tokens() {
            return Err(Error::ShapeMismatch("linear adjoint operands".into()));
        }
        let mut gx = EquivariantFeature::zeros(&self.in_sig, f.tokens());
        let mut gp = self.clone();
        gp.params.iter_mut().for_each(|p| *p = 0.0);
        for t in 0..f.tokens() {
            for h in 0..f.heads() {
                let x = f.head(t, h);
                let gy = g.head(t, h);
                let gxh = gx.head_mut(t, h);
                for b in &self.blocks {
                    let d = 2 * b.degree as usize + 1;
                    let xo = self.in_sig.degree_offset(b.degree).unwrap_or(0);
                    let yo = self.out_sig.degree_offset(b.degree).unwrap_or(0);
                    for r in 0..b.rows {
                        let gr = &gy[yo + r * d..yo + (r + 1) * d];
                        for c in 0..b.cols {
                            let xc = &x[xo + c * d..xo + (c + 1) * d];
                            let wrc = self.params[b.offset + r * b.cols + c];
                            let mut acc = 0.0;
                            for k in 0..d {
                                acc += gr[k] * xc[k];
                                gxh[xo + c * d + k] += wrc * gr[k];
                            }
                            gp.params[b.offset + r * b.cols + c] += acc;
                        }
                    }
                }
                if let Some((off, m)) = self.bias {
                    let yo = self.out_sig.degree_offset(0).unwrap_or(0);
                    for r in 0..m {
                        gp.params[off + r] += gy[yo + r];
                    }
                }
            }
        }
        Ok((gx, gp))
    }
}
