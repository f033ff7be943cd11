use rand::Rng;

use crate::error::{Error, Result};
use crate::irreps::{EquivariantFeature, IrrepsSignature};

/// Maps per-channel block norms to per-channel gates in `(0, 1)`:
/// `σ(W₂ tanh(W₁ n + b₁) + b₂)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GateNetwork {
    inputs: usize,
    hidden: usize,
    outputs: usize,
    params: Vec<f64>,
}

/// Final-stage bias at initialisation; gates start near 1.
pub const GATE_INIT_BIAS: f64 = 4.0;
const SATURATED_BIAS: f64 = 40.0;

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-(token, head) intermediates kept for the backward pass.
#[derive(Clone, Debug)]
pub struct GateCache {
    norms: Vec<f64>,
    hidden: Vec<f64>,
    gates: Vec<f64>,
}

impl GateNetwork {
    /// One gate per channel of `sig`, hidden width equal to the channel count.
    pub fn for_signature(sig: &IrrepsSignature) -> Self {
        let channels: usize = sig.entries().iter().map(|e| e.mult).sum();
        Self::zeros(channels, channels, channels)
    }

    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        GateNetwork {
            inputs,
            hidden,
            outputs,
            params: vec![0.0; hidden * inputs + hidden + outputs * hidden + outputs],
        }
    }

    pub fn random<R: Rng + ?Sized>(sig: &IrrepsSignature, rng: &mut R) -> Self {
        let mut g = Self::for_signature(sig);
        let a1 = 1.0 / (g.inputs.max(1) as f64).sqrt();
        let a2 = 1.0 / (g.hidden.max(1) as f64).sqrt();
        let (w1, _, w2, b2) = g.split_mut();
        w1.iter_mut().for_each(|w| *w = rng.gen_range(-a1..a1));
        w2.iter_mut().for_each(|w| *w = rng.gen_range(-a2..a2));
        b2.iter_mut().for_each(|b| *b = GATE_INIT_BIAS);
        g
    }

    /// All gates equal to 1 to double precision.
    pub fn saturated(sig: &IrrepsSignature) -> Self {
        let mut g = Self::for_signature(sig);
        g.split_mut().3.iter_mut().for_each(|b| *b = SATURATED_BIAS);
        g
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let (w1, rest) = self.params.split_at(self.hidden * self.inputs);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.outputs * self.hidden);
        (w1, b1, w2, b2)
    }

    fn split_mut(&mut self) -> (&mut [f64], &mut [f64], &mut [f64], &mut [f64]) {
        let (w1, rest) = self.params.split_at_mut(self.hidden * self.inputs);
        let (b1, rest) = rest.split_at_mut(self.hidden);
        let (w2, b2) = rest.split_at_mut(self.outputs * self.hidden);
        (w1, b1, w2, b2)
    }

    /// Gate values for one invariant input vector.
    pub fn forward(&self, norms: &[f64]) -> GateCache {
        let (w1, b1, w2, b2) = self.split();
        let hidden: Vec<f64> = (0..self.hidden)
            .map(|r| {
                let z: f64 = b1[r]
                    + (0..self.inputs)
                        .map(|c| w1[r * self.inputs + c] * norms[c])
                        .sum::<f64>();
                z.tanh()
            })
            .collect();
        let gates = (0..self.outputs)
            .map(|r| {
                let z: f64 = b2[r]
                    + (0..self.hidden)
                        .map(|c| w2[r * self.hidden + c] * hidden[c])
                        .sum::<f64>();
                sigmoid(z)
            })
            .collect();
        GateCache {
            norms: norms.to_vec(),
            hidden,
            gates,
        }
    }

    /// Given `∂L/∂gates`, accumulates parameter gradients into `grad` and returns `∂L/∂norms`.
    pub fn backward(&self, cache: &GateCache, grad_gates: &[f64], grad: &mut GateNetwork) -> Vec<f64> {
        let (w1, _, w2, _) = self.split();
        let dz2: Vec<f64> = grad_gates
            .iter()
            .zip(&cache.gates)
            .map(|(g, s)| g * s * (1.0 - s))
            .collect();
        let (gw1, gb1, gw2, gb2) = grad.split_mut();
        let mut dh = vec![0.0; self.hidden];
        for r in 0..self.outputs {
            gb2[r] += dz2[r];
            for c in 0..self.hidden {
                gw2[r * self.hidden + c] += dz2[r] * cache.hidden[c];
                dh[c] += w2[r * self.hidden + c] * dz2[r];
            }
        }
        let mut dn = vec![0.0; self.inputs];
        for r in 0..self.hidden {
            let dz1 = dh[r] * (1.0 - cache.hidden[r] * cache.hidden[r]);
            gb1[r] += dz1;
            for c in 0..self.inputs {
                gw1[r * self.inputs + c] += dz1 * cache.norms[c];
                dn[c] += w1[r * self.inputs + c] * dz1;
            }
        }
        dn
    }
}

/// Euclidean norm of every `(2ℓ+1)` block of one head, degree-major.
pub fn block_norms(sig: &IrrepsSignature, head: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for e in sig.entries() {
        let base = sig.degree_offset(e.degree).unwrap_or(0);
        for c in 0..e.mult {
            let b = &head[base + c * e.dim()..base + (c + 1) * e.dim()];
            out.push(b.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
    }
    out
}

fn check(net: &GateNetwork, u: &EquivariantFeature) -> Result<()> {
    let channels: usize = u.signature().entries().iter().map(|e| e.mult).sum();
    if channels != net.inputs || channels != net.outputs {
        return Err(Error::ShapeMismatch(format!(
            "gate network sized {}→{} for a feature with {channels} channels",
            net.inputs, net.outputs
        )));
    }
    Ok(())
}

/// Scales each channel of `u` by its gate. Returns the gated feature and the
/// per-(token, head) caches.
pub fn apply_gate(net: &GateNetwork, u: &EquivariantFeature) -> Result<(EquivariantFeature, Vec<GateCache>)> {
    check(net, u)?;
    let sig = u.signature().clone();
    let mut out = u.clone();
    let mut caches = Vec::with_capacity(u.tokens() * u.heads());
    for t in 0..u.tokens() {
        for h in 0..u.heads() {
            let cache = net.forward(&block_norms(&sig, u.head(t, h)));
            let head = out.head_mut(t, h);
            let mut k = 0;
            for e in sig.entries() {
                let base = sig.degree_offset(e.degree).unwrap_or(0);
                for c in 0..e.mult {
                    let s = cache.gates[k];
                    head[base + c * e.dim()..base + (c + 1) * e.dim()]
                        .iter_mut()
                        .for_each(|x| *x *= s);
                    k += 1;
                }
            }
            caches.push(cache);
        }
    }
    Ok((out, caches))
}

/// Gate values (`[token][head][channel]` flattened) without applying them.
pub fn gate_values(net: &GateNetwork, u: &EquivariantFeature) -> Result<Vec<f64>> {
    check(net, u)?;
    let mut out = Vec::new();
    for t in 0..u.tokens() {
        for h in 0..u.heads() {
            out.extend(net.forward(&block_norms(u.signature(), u.head(t, h))).gates);
        }
    }
    Ok(out)
}

/// Backward pass of [`apply_gate`]: returns `∂L/∂u` and accumulates into `grad`.
pub fn gate_adjoint(
    net: &GateNetwork,
    u: &EquivariantFeature,
    caches: &[GateCache],
    grad_out: &EquivariantFeature,
    grad: &mut GateNetwork,
) -> Result<EquivariantFeature> {
    check(net, u)?;
    let sig = u.signature().clone();
    let mut gu = EquivariantFeature::zeros(&sig, u.tokens());
    for t in 0..u.tokens() {
        for h in 0..u.heads() {
            let cache = &caches[t * u.heads() + h];
            let x = u.head(t, h);
            let g = grad_out.head(t, h);
            let mut grad_gates = Vec::with_capacity(net.outputs);
            for e in sig.entries() {
                let base = sig.degree_offset(e.degree).unwrap_or(0);
                for c in 0..e.mult {
                    let r = base + c * e.dim()..base + (c + 1) * e.dim();
                    grad_gates.push(g[r.clone()].iter().zip(&x[r]).map(|(a, b)| a * b).sum());
                }
            }
            let dn = net.backward(cache, &grad_gates, grad);
            let gh = gu.head_mut(t, h);
            let mut k = 0;
            for e in sig.entries() {
                let base = sig.degree_offset(e.degree).unwrap_or(0);
                for c in 0..e.mult {
                    let s = cache.gates[k];
                    let n = cache.norms[k];
                    let scale = if n > 0.0 { dn[k] / n } else { 0.0 };
                    for i in base + c * e.dim()..base + (c + 1) * e.dim() {
                        gh[i] += s * g[i] + scale * x[i];
                    }
                    k += 1;
                }
            }
        }
    }
    Ok(gu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irreps::make_signature;
    use crate::oracles::random_rotation;
    use crate::so3::wigner_d;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn saturated_gate_is_identity() {
        let s = make_signature(&[(0, 2), (1, 3), (2, 1)], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let u = EquivariantFeature::random(&s, 5, &mut rng);
        let (out, _) = apply_gate(&GateNetwork::saturated(&s), &u).unwrap();
        assert_eq!(out, u);
    }

    #[test]
    fn gates_are_rotation_invariant() {
        let s = make_signature(&[(0, 2), (1, 3), (2, 1)], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = GateNetwork::random(&s, &mut rng);
        let u = EquivariantFeature::random(&s, 5, &mut rng);
        let d = wigner_d(&s, &random_rotation(2)).unwrap();
        let ru = d.apply(&u).unwrap();
        let a = gate_values(&net, &u).unwrap();
        let b = gate_values(&net, &ru).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
        assert!(a.iter().all(|&g| g > 0.0 && g < 1.0));
        let (gu, _) = apply_gate(&net, &u).unwrap();
        let (gru, _) = apply_gate(&net, &ru).unwrap();
        assert!(d.apply(&gu).unwrap().max_abs_diff(&gru) < 1e-12);
        // gating never grows a channel
        for t in 0..5 {
            for h in 0..2 {
                let n0 = block_norms(&s, u.head(t, h));
                let n1 = block_norms(&s, gu.head(t, h));
                assert!(n0.iter().zip(&n1).all(|(a, b)| b <= a));
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let s = make_signature(&[(1, 2)], 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = GateNetwork::random(&s, &mut rng);
        let z = EquivariantFeature::zeros(&s, 3);
        assert_eq!(apply_gate(&net, &z).unwrap().0, z);
    }

    #[test]
    fn rejects_mismatched_network() {
        let s = make_signature(&[(1, 2)], 1).unwrap();
        let t = make_signature(&[(1, 3)], 1).unwrap();
        let net = GateNetwork::for_signature(&s);
        assert!(apply_gate(&net, &EquivariantFeature::zeros(&t, 1)).is_err());
    }
}
