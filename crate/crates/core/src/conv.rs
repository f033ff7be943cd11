//! Clebsch-Gordan long convolution over the token axis.
//!
//! `u_i = Σ_j C(q_j ⊗ k_{i−j})`. The FFT path transforms every real lane of
//! `q` and `k`, applies the contraction at each frequency and transforms
//! back, for `O(N log N)` token cost. The direct path is the `O(N²)` double
//! loop and serves as its reference.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::irreps::{ComplexFeature, EquivariantFeature, Feature, IrrepsSignature};
use crate::tensor_product::{Kernel, ProductPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    /// `i − j` taken modulo `N`.
    #[default]
    Circular,
    /// Zero padding: terms with `i − j ∉ [0, N)` vanish.
    Linear,
}

#[derive(Clone, Debug)]
pub struct ConvConfig {
    pub plan: Arc<ProductPlan>,
    pub boundary: Boundary,
}

/// Residual imaginary mass tolerated after the inverse transform, relative
/// to `‖u‖ + ‖q‖‖k‖`.
pub const IMAG_TOLERANCE: f64 = 1e-10;

/// Smallest `2^a 3^b 5^c ≥ n`.
pub fn fast_length(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

impl ConvConfig {
    pub fn new(plan: ProductPlan, boundary: Boundary) -> Self {
        ConvConfig {
            plan: Arc::new(plan),
            boundary,
        }
    }

    pub fn fft_size(&self, tokens: usize) -> usize {
        match self.boundary {
            Boundary::Circular => tokens,
            Boundary::Linear => fast_length(2 * tokens.max(1) - 1),
        }
    }

    pub fn out_signature(&self) -> &IrrepsSignature {
        self.plan.out_signature()
    }
}

/// Unnormalised forward DFT of every lane along tokens, zero-padded to `size`.
pub fn fft_tokens(f: &EquivariantFeature, size: usize, planner: &mut FftPlanner<f64>) -> ComplexFeature {
    let fft = planner.plan_fft_forward(size);
    let mut out = ComplexFeature::zeros(f.signature(), size);
    let mut lane = vec![0.0; f.tokens()];
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for l in 0..f.lanes() {
        f.read_lane(l, &mut lane);
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for (b, &x) in buf.iter_mut().zip(&lane) {
            b.re = x;
        }
        fft.process(&mut buf);
        out.write_lane(l, &buf);
    }
    out
}

/// Inverse DFT with `1/size` scaling, keeping the first `tokens` samples.
/// Returns the real part and the Euclidean norm of the discarded imaginary part.
pub fn ifft_tokens(f: &ComplexFeature, tokens: usize, planner: &mut FftPlanner<f64>) -> (EquivariantFeature, f64) {
    let size = f.tokens();
    let ifft = planner.plan_fft_inverse(size);
    let mut out = EquivariantFeature::zeros(f.signature(), tokens);
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    let mut real = vec![0.0; tokens];
    let scale = 1.0 / size as f64;
    let mut imag2 = 0.0;
    for l in 0..f.lanes() {
        f.read_lane(l, &mut buf);
        ifft.process(&mut buf);
        for (r, b) in real.iter_mut().zip(&buf) {
            *r = b.re * scale;
            imag2 += (b.im * scale) * (b.im * scale);
        }
        out.write_lane(l, &real);
    }
    (out, imag2.sqrt())
}

fn check(cfg: &ConvConfig, q: &EquivariantFeature, k: &EquivariantFeature) -> Result<()> {
    cfg.plan.check_operands(q, k)?;
    if q.tokens() == 0 {
        return Err(Error::ShapeMismatch("convolution needs at least one token".into()));
    }
    Ok(())
}

/// Double loop over `(i, j)`; the reference for [`conv_fft`].
pub fn conv_direct(cfg: &ConvConfig, q: &EquivariantFeature, k: &EquivariantFeature) -> Result<EquivariantFeature> {
    check(cfg, q, k)?;
    let n = q.tokens();
    let heads = q.heads();
    let plan = &cfg.plan;
    let mut out = EquivariantFeature::zeros(plan.out_signature(), n);
    if plan.out_signature().width() == 0 {
        return Ok(out);
    }
    let mut pairs = 0u64;
    for i in 0..n {
        for j in 0..n {
            let src = match cfg.boundary {
                Boundary::Circular => (i + n - j) % n,
                Boundary::Linear if j <= i => i - j,
                Boundary::Linear => continue,
            };
            for h in 0..heads {
                plan.contract_head(Kernel::Sparse, q.head(j, h), k.head(src, h), out.head_mut(i, h));
            }
            pairs += 1;
        }
    }
    plan.record(Kernel::Sparse, pairs * heads as u64);
    Ok(out)
}

fn operand_scale(q: &EquivariantFeature, k: &EquivariantFeature) -> f64 {
    q.norm() * k.norm()
}

/// FFT, per-frequency contraction, inverse FFT.
pub fn conv_fft(cfg: &ConvConfig, q: &EquivariantFeature, k: &EquivariantFeature) -> Result<EquivariantFeature> {
    check(cfg, q, k)?;
    let n = q.tokens();
    let size = cfg.fft_size(n);
    let mut planner = FftPlanner::new();
    let q_hat = fft_tokens(q, size, &mut planner);
    let k_hat = fft_tokens(k, size, &mut planner);
    let u_hat = cfg.plan.contract_complex(Kernel::Sparse, &q_hat, &k_hat)?;
    let (u, imag) = ifft_tokens(&u_hat, n, &mut planner);
    let bound = IMAG_TOLERANCE * (u.norm() + operand_scale(q, k));
    if imag > bound {
        return Err(Error::NumericalConsistency(format!(
            "imaginary residue {imag:.3e} exceeds {bound:.3e}"
        )));
    }
    Ok(u)
}

/// Gradients of `⟨g, conv(q, k)⟩` with respect to `q` and `k`.
///
/// Both are correlations of `g` with the other operand, evaluated in the
/// Fourier domain as `A(ĝ, conj(x̂))`.
pub fn conv_adjoint(
    cfg: &ConvConfig,
    grad_out: &EquivariantFeature,
    q: &EquivariantFeature,
    k: &EquivariantFeature,
) -> Result<(EquivariantFeature, EquivariantFeature)> {
    check(cfg, q, k)?;
    let plan = &cfg.plan;
    if grad_out.signature() != plan.out_signature() || grad_out.tokens() != q.tokens() {
        return Err(Error::ShapeMismatch(
            "gradient does not match convolution output".into(),
        ));
    }
    let n = q.tokens();
    let size = cfg.fft_size(n);
    let heads = q.heads();
    let mut planner = FftPlanner::new();
    let g_hat = fft_tokens(grad_out, size, &mut planner);
    let q_conj = conj(&fft_tokens(q, size, &mut planner));
    let k_conj = conj(&fft_tokens(k, size, &mut planner));
    let mut gq_hat = ComplexFeature::zeros(plan.in_a(), size);
    let mut gk_hat = ComplexFeature::zeros(plan.in_b(), size);
    for w in 0..size {
        for h in 0..heads {
            plan.adjoint_a_head(g_hat.head(w, h), k_conj.head(w, h), gq_hat.head_mut(w, h));
            plan.adjoint_b_head(g_hat.head(w, h), q_conj.head(w, h), gk_hat.head_mut(w, h));
        }
    }
    let (gq, _) = ifft_tokens(&gq_hat, n, &mut planner);
    let (gk, _) = ifft_tokens(&gk_hat, n, &mut planner);
    Ok((gq, gk))
}

fn conj(f: &ComplexFeature) -> ComplexFeature {
    let data = f.data().iter().map(|z| z.conj()).collect();
    Feature::from_vec(f.signature(), f.tokens(), data).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irreps::make_signature;
    use crate::oracles::{circular_correlation, cross_convolution};
    use crate::tensor_product::{from_real_basis, plan, to_real_basis, ChannelMode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vector_cfg(boundary: Boundary) -> ConvConfig {
        let v = make_signature(&[(1, 1)], 1).unwrap();
        ConvConfig::new(plan(&v, &v, &[1], ChannelMode::Full).unwrap(), boundary)
    }

    #[test]
    fn fast_lengths() {
        assert_eq!(fast_length(7), 8);
        assert_eq!(fast_length(127), 128);
        assert_eq!(fast_length(13), 15);
        assert_eq!(fast_length(1), 1);
    }

    #[test]
    fn impulse_key_reproduces_query() {
        let s = make_signature(&[(0, 1), (1, 2), (2, 1)], 2).unwrap();
        let unit = make_signature(&[(0, 1)], 2).unwrap();
        let p = plan(&s, &unit, &[0, 1, 2], ChannelMode::Full).unwrap();
        let cfg = ConvConfig::new(p, Boundary::Circular);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = EquivariantFeature::random(&s, 6, &mut rng);
        let mut k = EquivariantFeature::zeros(&unit, 6);
        for h in 0..2 {
            k.block_mut(0, h, 0, 0).unwrap()[0] = 1.0;
        }
        let u = conv_direct(&cfg, &q, &k).unwrap();
        assert_eq!(u.signature(), q.signature());
        assert!(u.max_abs_diff(&q) < 1e-15);
        let uf = conv_fft(&cfg, &q, &k).unwrap();
        assert!(uf.max_abs_diff(&q) < 1e-14);
    }

    #[test]
    fn single_token_is_plain_contraction() {
        let s = make_signature(&[(1, 2), (2, 1)], 1).unwrap();
        let p = plan(&s, &s, &[1, 2, 3], ChannelMode::Full).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = EquivariantFeature::random(&s, 1, &mut rng);
        let k = EquivariantFeature::random(&s, 1, &mut rng);
        let want = p.contract(Kernel::Sparse, &q, &k).unwrap();
        let cfg = ConvConfig::new(p, Boundary::Circular);
        assert!(conv_direct(&cfg, &q, &k).unwrap().max_abs_diff(&want) < 1e-15);
        assert!(conv_fft(&cfg, &q, &k).unwrap().max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn vector_convolution_is_scaled_cross_convolution() {
        let cfg = vector_cfg(Boundary::Circular);
        let v = make_signature(&[(1, 1)], 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = EquivariantFeature::random(&v, 4, &mut rng);
        let k = EquivariantFeature::random(&v, 4, &mut rng);
        let cart = |f: &EquivariantFeature| -> Vec<[f64; 3]> {
            (0..4)
                .map(|t| {
                    let b = f.block(t, 0, 1, 0).unwrap();
                    from_real_basis([b[0], b[1], b[2]])
                })
                .collect()
        };
        let want = cross_convolution(&cart(&q), &cart(&k));
        let got = conv_direct(&cfg, &q, &k).unwrap();
        for (t, w) in want.iter().enumerate() {
            let g = got.block(t, 0, 1, 0).unwrap();
            let w = to_real_basis(*w);
            for c in 0..3 {
                assert!((g[c] * std::f64::consts::SQRT_2 - w[c]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn zero_inputs() {
        let cfg = vector_cfg(Boundary::Linear);
        let v = make_signature(&[(1, 1)], 1).unwrap();
        let z = EquivariantFeature::zeros(&v, 5);
        let u = conv_fft(&cfg, &z, &z).unwrap();
        assert!(u.data().iter().all(|&x| x == 0.0));
        let (gq, gk) = conv_adjoint(&cfg, &u, &z, &z).unwrap();
        assert!(gq.data().iter().chain(gk.data()).all(|&x| x == 0.0));
    }

    #[test]
    fn shifting_keys_shifts_output() {
        let s = make_signature(&[(0, 1), (1, 1)], 1).unwrap();
        let cfg = ConvConfig::new(plan(&s, &s, &[0, 1], ChannelMode::Full).unwrap(), Boundary::Circular);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 7;
        let q = EquivariantFeature::random(&s, n, &mut rng);
        let k = EquivariantFeature::random(&s, n, &mut rng);
        let shift = 3;
        let mut ks = k.clone();
        for t in 0..n {
            ks.token_mut((t + shift) % n).copy_from_slice(k.token(t));
        }
        let u = conv_direct(&cfg, &q, &k).unwrap();
        let us = conv_direct(&cfg, &q, &ks).unwrap();
        for t in 0..n {
            assert_eq!(us.token((t + shift) % n), u.token(t));
        }
    }

    #[test]
    fn linear_boundary_ignores_wraparound() {
        let cfg = vector_cfg(Boundary::Linear);
        assert_eq!(cfg.fft_size(5), 9);
        let v = make_signature(&[(1, 1)], 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = EquivariantFeature::random(&v, 5, &mut rng);
        let mut k = EquivariantFeature::zeros(&v, 5);
        k.block_mut(4, 0, 1, 0).unwrap().copy_from_slice(&[0.0, 1.0, 0.0]);
        // only i − j = 4 contributes, i.e. i = 4, j = 0
        let u = conv_direct(&cfg, &q, &k).unwrap();
        for t in 0..4 {
            assert!(u.token(t).iter().all(|&x| x == 0.0));
        }
        assert!(conv_fft(&cfg, &q, &k).unwrap().max_abs_diff(&u) < 1e-14);
    }

    #[test]
    fn parseval() {
        let s = make_signature(&[(0, 2), (2, 1)], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = EquivariantFeature::random(&s, 11, &mut rng);
        let mut planner = FftPlanner::new();
        let fh = fft_tokens(&f, 11, &mut planner);
        let mut lane = vec![0.0; 11];
        let mut lane_hat = vec![Complex64::new(0.0, 0.0); 11];
        for l in 0..f.lanes() {
            f.read_lane(l, &mut lane);
            fh.read_lane(l, &mut lane_hat);
            let e: f64 = lane.iter().map(|x| x * x).sum();
            let eh: f64 = lane_hat.iter().map(|z| z.norm_sqr()).sum();
            assert!((eh - 11.0 * e).abs() < 1e-10 * eh);
        }
    }

    #[test]
    fn scalar_adjoint_is_textbook_correlation() {
        let s = make_signature(&[(0, 1)], 1).unwrap();
        let cfg = ConvConfig::new(plan(&s, &s, &[0], ChannelMode::Full).unwrap(), Boundary::Circular);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 9;
        let q = EquivariantFeature::random(&s, n, &mut rng);
        let k = EquivariantFeature::random(&s, n, &mut rng);
        let g = EquivariantFeature::random(&s, n, &mut rng);
        let (gq, gk) = conv_adjoint(&cfg, &g, &q, &k).unwrap();
        let wq = circular_correlation(g.data(), k.data());
        let wk = circular_correlation(g.data(), q.data());
        for t in 0..n {
            assert!((gq.data()[t] - wq[t]).abs() < 1e-12);
            assert!((gk.data()[t] - wk[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_dot_product_test() {
        for boundary in [Boundary::Circular, Boundary::Linear] {
            let s = make_signature(&[(0, 1), (1, 2), (2, 1)], 2).unwrap();
            let cfg = ConvConfig::new(plan(&s, &s, &[0, 1, 2], ChannelMode::Full).unwrap(), boundary);
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let n = 8;
            let q = EquivariantFeature::random(&s, n, &mut rng);
            let k = EquivariantFeature::random(&s, n, &mut rng);
            let dq = EquivariantFeature::random(&s, n, &mut rng);
            let dk = EquivariantFeature::random(&s, n, &mut rng);
            let g = EquivariantFeature::random(cfg.out_signature(), n, &mut rng);
            let (gq, gk) = conv_adjoint(&cfg, &g, &q, &k).unwrap();
            // bilinear: d/dε conv(q+εdq, k+εdk) at 0 = conv(dq,k) + conv(q,dk)
            let lhs = g.dot(&conv_direct(&cfg, &dq, &k).unwrap()) + g.dot(&conv_direct(&cfg, &q, &dk).unwrap());
            let rhs = gq.dot(&dq) + gk.dot(&dk);
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        }
    }
}
