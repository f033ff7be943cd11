//! Brute-force references for tests and the acceptance runs.
//!
//! Nothing here calls the production kernels: contractions are plain loops
//! over dense Clebsch-Gordan arrays, and the sphere check goes through
//! spherical-harmonic synthesis and quadrature.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::irreps::{make_signature, EquivariantFeature, IrrepsSignature};
use crate::so3::cg::{cg_real, clebsch_gordan, CGTable};
use crate::so3::wigner::Rotation;

/// Unoptimised triple loop `out[M] = Σ_{m₁,m₂} C[M,m₁,m₂] x[m₁] y[m₂]`.
pub fn reference_contract(table: &CGTable, x: &[f64], y: &[f64]) -> Vec<f64> {
    let (dj, d1, d2) = table.shape();
    let dense = table.dense();
    let mut out = vec![0.0; dj];
    for (m, o) in out.iter_mut().enumerate() {
        for i in 0..d1 {
            for k in 0..d2 {
                *o += dense[(m * d1 + i) * d2 + k] * x[i] * y[k];
            }
        }
    }
    out
}

/// `(l1, l2, table)` feeding one output degree.
type Coupling = (u32, u32, CGTable);

/// Full-feature reference for a plan with every triangle-valid path, built
/// from the signatures alone. `elementwise` pairs channel `c` with channel `c`.
pub fn reference_product(
    a: &EquivariantFeature,
    b: &EquivariantFeature,
    out_degrees: &[u32],
    elementwise: bool,
) -> Result<EquivariantFeature> {
    let sa = a.signature();
    let sb = b.signature();
    let mut degrees = out_degrees.to_vec();
    degrees.sort_unstable();
    degrees.dedup();
    let mut per_j: Vec<(u32, Vec<Coupling>)> = Vec::new();
    for &j in &degrees {
        let mut list = Vec::new();
        for ea in sa.entries() {
            for eb in sb.entries() {
                let t = cg_real(j, ea.degree, eb.degree)?;
                if !t.is_empty() {
                    list.push((ea.degree, eb.degree, t));
                }
            }
        }
        if !list.is_empty() {
            per_j.push((j, list));
        }
    }
    let mut entries = Vec::new();
    for (j, list) in &per_j {
        let mut m = 0;
        for (l1, l2, _) in list {
            let (ma, mb) = (sa.mult(*l1).unwrap_or(0), sb.mult(*l2).unwrap_or(0));
            m += if elementwise { ma } else { ma * mb };
        }
        entries.push((*j, m));
    }
    let out_sig = if entries.is_empty() {
        IrrepsSignature::empty(sa.heads())
    } else {
        make_signature(&entries, sa.heads())?
    };
    let mut out = EquivariantFeature::zeros(&out_sig, a.tokens());
    for t in 0..a.tokens() {
        for h in 0..sa.heads() {
            for (j, list) in &per_j {
                let mut ch = 0;
                for (l1, l2, table) in list {
                    let (ma, mb) = (sa.mult(*l1).unwrap_or(0), sb.mult(*l2).unwrap_or(0));
                    let pairs: Vec<(usize, usize)> = if elementwise {
                        (0..ma).map(|c| (c, c)).collect()
                    } else {
                        (0..ma).flat_map(|c| (0..mb).map(move |d| (c, d))).collect()
                    };
                    for (c1, c2) in pairs {
                        let x = a.block(t, h, *l1, c1)?.to_vec();
                        let y = b.block(t, h, *l2, c2)?.to_vec();
                        let r = reference_contract(table, &x, &y);
                        out.block_mut(t, h, *j, ch)?.copy_from_slice(&r);
                        ch += 1;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Direct `Σ_j q_j × k_{(i−j) mod N}` on Cartesian 3-vectors.
pub fn cross_convolution(q: &[[f64; 3]], k: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let n = q.len();
    (0..n)
        .map(|i| {
            let mut acc = [0.0; 3];
            for j in 0..n {
                let a = q[j];
                let b = k[(i + n - j) % n];
                acc[0] += a[1] * b[2] - a[2] * b[1];
                acc[1] += a[2] * b[0] - a[0] * b[2];
                acc[2] += a[0] * b[1] - a[1] * b[0];
            }
            acc
        })
        .collect()
}

/// Textbook circular correlation `z_j = Σ_t x_{(j+t) mod N} y_t`.
pub fn circular_correlation(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n).map(|j| (0..n).map(|t| x[(j + t) % n] * y[t]).sum()).collect()
}

/// Haar-uniform rotation from a normalised Gaussian quaternion.
pub fn random_rotation(seed: u64) -> Rotation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_rotation_with(&mut rng)
}

pub fn random_rotation_with<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    let mut q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    q.iter_mut().for_each(|x| *x /= n);
    let [w, x, y, z] = q;
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

/// Central difference `(f(x+hd) − f(x−hd)) / 2h`.
pub fn finite_diff<F>(f: F, point: &[f64], direction: &[f64], step: f64) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    debug_assert!((1e-7..=1e-3).contains(&step), "step {step} outside [1e-7, 1e-3]");
    let shifted = |s: f64| -> Vec<f64> { point.iter().zip(direction).map(|(x, d)| x + s * d).collect() };
    (f(&shifted(step)) - f(&shifted(-step))) / (2.0 * step)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Real orthonormal spherical harmonics up to `lmax` at `(cos θ, φ)`,
/// indexed `ℓ² + ℓ + m`.
pub fn real_spherical_harmonics(lmax: usize, cos_theta: f64, phi: f64) -> Vec<f64> {
    let x = cos_theta;
    let s = (1.0 - x * x).max(0.0).sqrt();
    let n = lmax + 1;
    // normalised associated Legendre, no Condon-Shortley phase
    let mut p = vec![0.0; n * n];
    let idx = |l: usize, m: usize| l * n + m;
    p[idx(0, 0)] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..n {
        p[idx(m, m)] = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s * p[idx(m - 1, m - 1)];
    }
    for m in 0..n {
        if m + 1 < n {
            p[idx(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * x * p[idx(m, m)];
        }
        for l in m + 2..n {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[idx(l, m)] = a * (x * p[idx(l - 1, m)] - b * p[idx(l - 2, m)]);
        }
    }
    let mut y = vec![0.0; n * n];
    let r2 = std::f64::consts::SQRT_2;
    for l in 0..n {
        y[l * l + l] = p[idx(l, 0)];
        for m in 1..=l {
            let mf = m as f64;
            y[l * l + l + m] = r2 * p[idx(l, m)] * (mf * phi).cos();
            y[l * l + l - m] = r2 * p[idx(l, m)] * (mf * phi).sin();
        }
    }
    y
}

/// Gauss-Legendre × trapezoid grid exact for band-limit-`band` products.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    band: usize,
    weights: Vec<f64>,
    /// `values[node][ℓ² + ℓ + m]` for `ℓ ≤ 2·band`
    values: Vec<Vec<f64>>,
}

impl SphereGrid {
    pub fn new(band: usize) -> Self {
        let n_theta = 2 * band + 2;
        let n_phi = 4 * band + 2;
        let (xs, ws) = gauss_legendre(n_theta);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let mut values = Vec::with_capacity(n_theta * n_phi);
        for (x, w) in xs.iter().zip(&ws) {
            for b in 0..n_phi {
                let phi = 2.0 * PI * b as f64 / n_phi as f64;
                weights.push(w * 2.0 * PI / n_phi as f64);
                values.push(real_spherical_harmonics(2 * band, *x, phi));
            }
        }
        SphereGrid { band, weights, values }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn nodes(&self) -> usize {
        self.weights.len()
    }

    /// `∫ Y_a Y_b dΩ` by quadrature (indices up to degree `2·band`).
    pub fn inner(&self, a: usize, b: usize) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(y, w)| w * y[a] * y[b])
            .sum()
    }

    /// Function values at the nodes from coefficients `ℓ² + ℓ + m`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        self.values
            .iter()
            .map(|y| coeffs.iter().zip(y).map(|(c, v)| c * v).sum())
            .collect()
    }

    /// Coefficients up to degree `lmax` of nodal values.
    pub fn analyze(&self, values: &[f64], lmax: usize) -> Vec<f64> {
        let count = (lmax + 1) * (lmax + 1);
        let mut out = vec![0.0; count];
        for ((y, w), f) in self.values.iter().zip(&self.weights).zip(values) {
            for (o, yk) in out.iter_mut().zip(y) {
                *o += w * f * yk;
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct SphereProductReport {
    pub band: usize,
    pub rel_err: f64,
    pub pass: bool,
    pub quadrature: Vec<f64>,
    pub clebsch_gordan: Vec<f64>,
}

/// Compares the coefficients of a pointwise product on the sphere with the
/// weighted sum of real Clebsch-Gordan products of the input coefficients.
pub fn sphere_product_check(grid: &SphereGrid, band: usize, f: &[f64], g: &[f64]) -> Result<SphereProductReport> {
    if band > grid.band {
        return Err(Error::GridTooCoarse {
            grid: grid.band,
            requested: band,
        });
    }
    let n_in = (band + 1) * (band + 1);
    if f.len() != n_in || g.len() != n_in {
        return Err(Error::ShapeMismatch(format!(
            "band {band} needs {n_in} coefficients, got {} and {}",
            f.len(),
            g.len()
        )));
    }
    let fv = grid.synthesize(f);
    let gv = grid.synthesize(g);
    let prod: Vec<f64> = fv.iter().zip(&gv).map(|(a, b)| a * b).collect();
    let quad = grid.analyze(&prod, 2 * band);

    // overall constant from the scalar case: Y₀₀·Y₀₀ = k·Y₀₀
    let y00 = grid.synthesize(&[1.0]);
    let sq: Vec<f64> = y00.iter().map(|v| v * v).collect();
    let k = grid.analyze(&sq, 0)[0];

    let mut cg = vec![0.0; (2 * band + 1) * (2 * band + 1)];
    for j in 0..=2 * band {
        for l1 in 0..=band {
            for l2 in 0..=band {
                let c0 = clebsch_gordan(l1 as u32, 0, l2 as u32, 0, j as u32);
                if c0.abs() < 1e-15 {
                    continue;
                }
                let w = k * (((2 * l1 + 1) * (2 * l2 + 1)) as f64 / (2 * j + 1) as f64).sqrt() * c0;
                let table = cg_real(j as u32, l1 as u32, l2 as u32)?;
                let x = &f[l1 * l1..(l1 + 1) * (l1 + 1)];
                let y = &g[l2 * l2..(l2 + 1) * (l2 + 1)];
                let r = reference_contract(&table, x, y);
                for (m, v) in r.iter().enumerate() {
                    cg[j * j + m] += w * v;
                }
            }
        }
    }
    let diff = quad.iter().zip(&cg).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm = quad.iter().map(|a| a * a).sum::<f64>().sqrt();
    let rel_err = diff / norm.max(f64::MIN_POSITIVE);
    Ok(SphereProductReport {
        band,
        rel_err,
        pass: rel_err < 1e-8,
        quadrature: quad,
        clebsch_gordan: cg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::wigner::{det3, matmul3, transpose3};

    #[test]
    fn rotations() {
        let a = random_rotation(11);
        assert_eq!(a, random_rotation(11));
        let rtr = matmul3(&transpose3(&a), &a);
        for (i, row) in rtr.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-14);
            }
        }
        assert!((det3(&a) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_mean_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut mean = [[0.0; 3]; 3];
        let n = 100_000;
        for _ in 0..n {
            let r = random_rotation_with(&mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    mean[i][j] += r[i][j] / n as f64;
                }
            }
        }
        assert!(mean.iter().flatten().all(|m| m.abs() < 0.02));
    }

    #[test]
    fn finite_differences() {
        let lin = |x: &[f64]| 3.0 * x[0] - 2.0 * x[1];
        let d = finite_diff(lin, &[0.4, 1.0], &[1.0, 1.0], 1e-4);
        assert!((d - 1.0).abs() < 1e-10);
        let quad = |x: &[f64]| x[0] * x[0];
        let d = finite_diff(quad, &[1.0], &[1.0], 1e-3);
        assert!((d - 2.0).abs() < 1e-9);
    }

    #[test]
    fn quadrature_orthonormality() {
        let grid = SphereGrid::new(3);
        let n = 7 * 7;
        for a in 0..n {
            for b in 0..n {
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((grid.inner(a, b) - e).abs() < 1e-12, "{a} {b}");
            }
        }
    }

    #[test]
    fn degree_one_harmonics_are_y_z_x() {
        // at the +x axis only the m=+1 component is nonzero
        let y = real_spherical_harmonics(1, 0.0, 0.0);
        assert!(y[1].abs() < 1e-15 && y[2].abs() < 1e-15 && y[3] > 0.0);
        let y = real_spherical_harmonics(1, 0.0, PI / 2.0);
        assert!(y[1] > 0.0 && y[3].abs() < 1e-15);
        let y = real_spherical_harmonics(1, 1.0, 0.0);
        assert!(y[2] > 0.0);
    }

    #[test]
    fn constant_product() {
        let grid = SphereGrid::new(1);
        let mut f = vec![0.0; 4];
        let mut g = vec![0.0; 4];
        f[0] = 2.0;
        g[0] = 3.0;
        let r = sphere_product_check(&grid, 1, &f, &g).unwrap();
        assert!(r.pass);
        let expect = 6.0 / (4.0 * PI).sqrt();
        assert!((r.quadrature[0] - expect).abs() < 1e-13);
    }

    #[test]
    fn vector_products_have_no_degree_one_part() {
        let grid = SphereGrid::new(1);
        let f = vec![0.0, 0.3, -1.0, 0.5];
        let g = vec![0.0, 1.2, 0.4, -0.7];
        let r = sphere_product_check(&grid, 1, &f, &g).unwrap();
        assert!(r.pass, "rel err {}", r.rel_err);
        assert!(r.quadrature[1..4].iter().all(|c| c.abs() < 1e-13));
        assert!(r.quadrature[0].abs() > 1e-3);
        assert!(r.quadrature[4..9].iter().any(|c| c.abs() > 1e-3));
    }

    #[test]
    fn grid_too_coarse() {
        let grid = SphereGrid::new(2);
        let f = vec![0.0; 16];
        assert!(matches!(
            sphere_product_check(&grid, 3, &f, &f),
            Err(Error::GridTooCoarse { grid: 2, requested: 3 })
        ));
    }

    #[test]
    fn correlation_oracle() {
        let z = circular_correlation(&[1.0, 2.0, 3.0], &[1.0, 0.0, 0.0]);
        assert_eq!(z, vec![1.0, 2.0, 3.0]);
        let z = circular_correlation(&[1.0, 2.0, 3.0], &[0.0, 1.0, 0.0]);
        assert_eq!(z, vec![2.0, 3.0, 1.0]);
    }
}
