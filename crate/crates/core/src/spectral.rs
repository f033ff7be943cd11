//! Permutation-equivariant spectral convolution on graphs.
//!
//! Token order carries no meaning on a graph, so the FFT over tokens is
//! replaced by the graph Fourier transform: projection onto the eigenbasis
//! of the normalized Laplacian `L = I − D^{-1/2} A D^{-1/2}`. The CG product
//! is then taken mode by mode, exactly as `conv_fft` does per frequency.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conv::{conv_fft, ConvConfig};
use crate::error::{Error, Result};
use crate::irreps::EquivariantFeature;
use crate::tensor_product::{Kernel, ProductPlan};

/// Eigenvalue gap below which the spectrum counts as degenerate.
pub const SIMPLE_GAP: f64 = 1e-8;
/// Off-diagonal Frobenius norm, relative to the matrix norm, at which Jacobi stops.
pub const JACOBI_TOLERANCE: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug)]
pub struct GraphSpectrum {
    n: usize,
    adjacency: Vec<f64>,
    laplacian: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// Row-major; column `j` is the eigenvector of `eigenvalues[j]`.
    eigenvectors: Vec<f64>,
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues ascending and the matching eigenvectors as columns of
/// a row-major matrix.
pub fn symmetric_eigen(n: usize, matrix: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOLERANCE * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x * n + x].total_cmp(&a[y * n + y]));
    let values = order.iter().map(|&j| a[j * n + j]).collect();
    let mut vectors = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + dst] = v[i * n + src];
        }
    }
    (values, vectors)
}

/// Flips each column so its largest-magnitude component is positive.
fn fix_signs(n: usize, vectors: &mut [f64]) {
    for j in 0..n {
        let mut best = 0;
        for i in 1..n {
            if vectors[i * n + j].abs() > vectors[best * n + j].abs() {
                best = i;
            }
        }
        if vectors[best * n + j] < 0.0 {
            for i in 0..n {
                vectors[i * n + j] = -vectors[i * n + j];
            }
        }
    }
}

/// Eigendecomposition of the normalized Laplacian of a row-major adjacency.
pub fn build_spectrum(n: usize, adjacency: &[f64]) -> Result<GraphSpectrum> {
    if adjacency.len() != n * n {
        return Err(Error::SizeMismatch {
            expected: n * n,
            got: adjacency.len(),
        });
    }
    for i in 0..n {
        for j in 0..n {
            let a = adjacency[i * n + j];
            if a != adjacency[j * n + i] || a < 0.0 || !a.is_finite() || (i == j && a != 0.0) {
                return Err(Error::NotSymmetric(i, j));
            }
        }
    }
    let degree: Vec<f64> = (0..n).map(|i| adjacency[i * n..(i + 1) * n].iter().sum()).collect();
    if let Some(i) = degree.iter().position(|&d| d <= 0.0) {
        return Err(Error::IsolatedNode(i));
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut laplacian = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let delta = if i == j { 1.0 } else { 0.0 };
            laplacian[i * n + j] = delta - inv_sqrt[i] * adjacency[i * n + j] * inv_sqrt[j];
        }
    }
    let (eigenvalues, mut eigenvectors) = symmetric_eigen(n, &laplacian);
    fix_signs(n, &mut eigenvectors);
    Ok(GraphSpectrum {
        n,
        adjacency: adjacency.to_vec(),
        laplacian,
        eigenvalues,
        eigenvectors,
    })
}

impl GraphSpectrum {
    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self) -> &[f64] {
        &self.adjacency
    }

    pub fn laplacian(&self) -> &[f64] {
        &self.laplacian
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[f64] {
        &self.eigenvectors
    }

    /// Smallest gap between consecutive eigenvalues (infinite for `n < 2`).
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// `max |UᵀU − I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.n;
        let u = &self.eigenvectors;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|i| u[i * n + a] * u[i * n + b]).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `max |UΛUᵀ − L|`.
    pub fn reconstruction_error(&self) -> f64 {
        let n = self.n;
        let u = &self.eigenvectors;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let v: f64 = (0..n).map(|k| u[a * n + k] * self.eigenvalues[k] * u[b * n + k]).sum();
                worst = worst.max((v - self.laplacian[a * n + b]).abs());
            }
        }
        worst
    }

    fn check(&self, x: &EquivariantFeature) -> Result<()> {
        if x.tokens() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                got: x.tokens(),
            });
        }
        Ok(())
    }

    /// `out[r] = Σ_s M(r, s) x[s]` over tokens, lane by lane.
    fn transform(&self, x: &EquivariantFeature, transpose: bool) -> EquivariantFeature {
        let n = self.n;
        let u = &self.eigenvectors;
        let width = x.signature().total_width();
        let mut out = EquivariantFeature::zeros(x.signature(), n);
        if width == 0 {
            return out;
        }
        out.data_mut().par_chunks_mut(width).enumerate().for_each(|(r, row)| {
            for s in 0..n {
                let m = if transpose { u[s * n + r] } else { u[r * n + s] };
                for (o, xi) in row.iter_mut().zip(x.token(s)) {
                    *o += m * xi;
                }
            }
        });
        out
    }
}

/// Graph Fourier transform `x̂ = Uᵀx`, applied to every lane.
pub fn gft(spec: &GraphSpectrum, x: &EquivariantFeature) -> Result<EquivariantFeature> {
    spec.check(x)?;
    Ok(spec.transform(x, true))
}

/// Inverse transform `x = U x̂`.
pub fn igft(spec: &GraphSpectrum, x: &EquivariantFeature) -> Result<EquivariantFeature> {
    spec.check(x)?;
    Ok(spec.transform(x, false))
}

/// `U · C(Uᵀq ⊗ Uᵀk)` with the CG product taken per eigenmode.
pub fn spectral_conv(
    spec: &GraphSpectrum,
    plan: &ProductPlan,
    q: &EquivariantFeature,
    k: &EquivariantFeature,
) -> Result<EquivariantFeature> {
    let q_hat = gft(spec, q)?;
    let k_hat = gft(spec, k)?;
    let u_hat = plan.contract(Kernel::Sparse, &q_hat, &k_hat)?;
    igft(spec, &u_hat)
}

/// Moves token `i` to position `perm[i]`.
pub fn permute_tokens(x: &EquivariantFeature, perm: &[usize]) -> Result<EquivariantFeature> {
    check_permutation(perm, x.tokens())?;
    let mut out = EquivariantFeature::zeros(x.signature(), x.tokens());
    for (i, &p) in perm.iter().enumerate() {
        out.token_mut(p).copy_from_slice(x.token(i));
    }
    Ok(out)
}

/// `P A Pᵀ` for the same relabelling as [`permute_tokens`].
pub fn permute_adjacency(n: usize, adjacency: &[f64], perm: &[usize]) -> Result<Vec<f64>> {
    check_permutation(perm, n)?;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[perm[i] * n + perm[j]] = adjacency[i * n + j];
        }
    }
    Ok(out)
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: perm.len(),
        });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidSignature(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PermutationReport {
    pub nodes: usize,
    pub min_gap: f64,
    pub rel_err: f64,
    pub pass: bool,
}

/// Tolerance of [`permutation_check`].
pub const PERMUTATION_TOLERANCE: f64 = 1e-8;

/// Compares `spectral_conv(PAPᵀ; Pq, Pk)` with `P · spectral_conv(A; q, k)`.
pub fn permutation_check(
    spec: &GraphSpectrum,
    plan: &ProductPlan,
    q: &EquivariantFeature,
    k: &EquivariantFeature,
    perm: &[usize],
) -> Result<PermutationReport> {
    let gap = spec.min_gap();
    if gap <= SIMPLE_GAP {
        return Err(Error::DegenerateSpectrum(gap));
    }
    let n = spec.nodes();
    let permuted = build_spectrum(n, &permute_adjacency(n, spec.adjacency(), perm)?)?;
    let lhs = spectral_conv(&permuted, plan, &permute_tokens(q, perm)?, &permute_tokens(k, perm)?)?;
    let rhs = permute_tokens(&spectral_conv(spec, plan, q, k)?, perm)?;
    let rel_err = lhs.rel_err(&rhs);
    Ok(PermutationReport {
        nodes: n,
        min_gap: gap,
        rel_err,
        pass: rel_err < PERMUTATION_TOLERANCE,
    })
}

/// Relative error of the token-FFT convolution under the same relabelling.
pub fn fft_permutation_error(
    cfg: &ConvConfig,
    q: &EquivariantFeature,
    k: &EquivariantFeature,
    perm: &[usize],
) -> Result<f64> {
    let lhs = conv_fft(cfg, &permute_tokens(q, perm)?, &permute_tokens(k, perm)?)?;
    let rhs = permute_tokens(&conv_fft(cfg, q, k)?, perm)?;
    Ok(lhs.rel_err(&rhs))
}

/// Parses `u v [weight]` lines (0-indexed, `#` comments) into a symmetric
/// row-major adjacency. The node count is one past the largest index.
pub fn parse_edge_list(text: &str) -> Result<(usize, Vec<f64>)> {
    let mut edges = Vec::new();
    let mut n = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::Parse(format!("edge list line {}: {line:?}", lineno + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(bad());
        }
        let u: usize = fields[0].parse().map_err(|_| bad())?;
        let v: usize = fields[1].parse().map_err(|_| bad())?;
        let w: f64 = match fields.get(2) {
            Some(s) => s.parse().map_err(|_| bad())?,
            None => 1.0,
        };
        if u == v || !(w.is_finite() && w > 0.0) {
            return Err(bad());
        }
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v, w));
    }
    let mut adj = vec![0.0; n * n];
    for (u, v, w) in edges {
        adj[u * n + v] += w;
        adj[v * n + u] += w;
    }
    Ok((n, adj))
}

/// A connected random weighted graph: a path backbone plus each remaining
/// edge with probability ½, weights uniform in `[0.1, 1)`.
pub fn random_weighted_graph(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || rng.gen_bool(0.5) {
                let w = rng.gen_range(0.1..1.0);
                adj[i * n + j] = w;
                adj[j * n + i] = w;
            }
        }
    }
    adj
}

/// Uniformly random permutation of `0..n`.
pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::Boundary;
    use crate::irreps::make_signature;
    use crate::oracles::random_rotation;
    use crate::so3::wigner_d;
    use crate::tensor_product::{plan, ChannelMode};

    fn eig(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
        let mut adj = vec![0.0; n * n];
        for &(u, v) in edges {
            adj[u * n + v] = 1.0;
            adj[v * n + u] = 1.0;
        }
        build_spectrum(n, &adj).unwrap().eigenvalues().to_vec()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn closed_form_spectra() {
        assert!(close(&eig(3, &[(0, 1), (1, 2), (0, 2)]), &[0.0, 1.5, 1.5]));
        assert!(close(&eig(2, &[(0, 1)]), &[0.0, 2.0]));
        assert!(close(&eig(3, &[(0, 1), (1, 2)]), &[0.0, 1.0, 2.0]));
    }

    #[test]
    fn rejects_bad_adjacency() {
        assert!(matches!(
            build_spectrum(2, &[0.0, 1.0, 0.5, 0.0]),
            Err(Error::NotSymmetric(0, 1))
        ));
        let adj = [0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!(matches!(build_spectrum(3, &adj), Err(Error::IsolatedNode(2))));
    }

    #[test]
    fn random_graph_decomposition_bounds() {
        let n = 20;
        let s = build_spectrum(n, &random_weighted_graph(n, 3)).unwrap();
        assert!(s.orthogonality_error() < 1e-10);
        assert!(s.reconstruction_error() < 1e-9);
        assert!(s.eigenvalues().iter().all(|&l| (-1e-12..=2.0 + 1e-12).contains(&l)));
        assert!(s.eigenvalues()[0].abs() < 1e-12);
    }

    #[test]
    fn gft_round_trip_and_parseval() {
        let n = 10;
        let spec = build_spectrum(n, &random_weighted_graph(n, 1)).unwrap();
        let sig = make_signature(&[(0, 1), (1, 2)], 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = EquivariantFeature::random(&sig, n, &mut rng);
        let xh = gft(&spec, &x).unwrap();
        assert!((xh.norm() - x.norm()).abs() < 1e-10);
        assert!(igft(&spec, &xh).unwrap().max_abs_diff(&x) < 1e-10);
        assert!(gft(&spec, &EquivariantFeature::zeros(&sig, n + 1)).is_err());
    }

    #[test]
    fn constant_signal_on_regular_graph_is_null_mode() {
        let n = 6;
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let mut adj = vec![0.0; n * n];
        for (u, v) in edges {
            adj[u * n + v] = 1.0;
            adj[v * n + u] = 1.0;
        }
        let spec = build_spectrum(n, &adj).unwrap();
        let sig = make_signature(&[(0, 1)], 1).unwrap();
        let x = EquivariantFeature::from_vec(&sig, n, vec![2.0; n]).unwrap();
        let xh = gft(&spec, &x).unwrap();
        assert!((xh.data()[0] - 2.0 * (n as f64).sqrt()).abs() < 1e-12);
        assert!(xh.data()[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn single_node_graph_is_plain_contraction() {
        let sig = make_signature(&[(1, 1)], 1).unwrap();
        let p = plan(&sig, &sig, &[0, 1, 2], ChannelMode::Full).unwrap();
        let spec = GraphSpectrum {
            n: 1,
            adjacency: vec![0.0],
            laplacian: vec![0.0],
            eigenvalues: vec![0.0],
            eigenvectors: vec![1.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let q = EquivariantFeature::random(&sig, 1, &mut rng);
        let k = EquivariantFeature::random(&sig, 1, &mut rng);
        let a = spectral_conv(&spec, &p, &q, &k).unwrap();
        assert_eq!(a, p.contract(Kernel::Sparse, &q, &k).unwrap());
    }

    #[test]
    fn spectral_conv_is_rotation_equivariant() {
        let n = 9;
        let spec = build_spectrum(n, &random_weighted_graph(n, 4)).unwrap();
        let sig = make_signature(&[(0, 1), (1, 1), (2, 1)], 2).unwrap();
        let p = plan(&sig, &sig, &[0, 1, 2, 3], ChannelMode::Full).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = EquivariantFeature::random(&sig, n, &mut rng);
        let k = EquivariantFeature::random(&sig, n, &mut rng);
        let r = random_rotation(9);
        let din = wigner_d(&sig, &r).unwrap();
        let dout = wigner_d(p.out_signature(), &r).unwrap();
        let lhs = spectral_conv(&spec, &p, &din.apply(&q).unwrap(), &din.apply(&k).unwrap()).unwrap();
        let rhs = dout.apply(&spectral_conv(&spec, &p, &q, &k).unwrap()).unwrap();
        assert!(lhs.rel_err(&rhs) < 1e-9);
    }

    #[test]
    fn permutation_equivariance_holds_for_spectral_path_only() {
        let n = 12;
        let spec = build_spectrum(n, &random_weighted_graph(n, 7)).unwrap();
        let sig = make_signature(&[(0, 1), (1, 1)], 1).unwrap();
        let p = plan(&sig, &sig, &[0, 1, 2], ChannelMode::Full).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = EquivariantFeature::random(&sig, n, &mut rng);
        let k = EquivariantFeature::random(&sig, n, &mut rng);
        let id: Vec<usize> = (0..n).collect();
        assert_eq!(permutation_check(&spec, &p, &q, &k, &id).unwrap().rel_err, 0.0);
        let perm = random_permutation(n, 5);
        assert!(permutation_check(&spec, &p, &q, &k, &perm).unwrap().pass);
        let cfg = ConvConfig::new(p, Boundary::Circular);
        assert!(fft_permutation_error(&cfg, &q, &k, &perm).unwrap() > 1e-2);
    }

    #[test]
    fn degenerate_spectrum_is_reported() {
        let mut adj = vec![1.0; 9];
        for i in 0..3 {
            adj[i * 3 + i] = 0.0;
        }
        let spec = build_spectrum(3, &adj).unwrap();
        let sig = make_signature(&[(0, 1)], 1).unwrap();
        let p = plan(&sig, &sig, &[0], ChannelMode::Full).unwrap();
        let x = EquivariantFeature::zeros(&sig, 3);
        assert!(matches!(
            permutation_check(&spec, &p, &x, &x, &[1, 2, 0]),
            Err(Error::DegenerateSpectrum(_))
        ));
    }

    #[test]
    fn edge_list_parsing() {
        let (n, adj) = parse_edge_list("# triangle\n0 1 0.5\n1 2\n\n2 0 2.0\n").unwrap();
        assert_eq!(n, 3);
        assert_eq!(adj[1], 0.5);
        assert_eq!(adj[3 + 2], 1.0);
        assert_eq!(adj[2 * 3], 2.0);
        assert!(parse_edge_list("0 x\n").is_err());
        assert!(parse_edge_list("1 1 1.0\n").is_err());
    }
}
