//! Real Wigner-D matrices built from the real Clebsch-Gordan tables.
//!
//! `D¹(R)` is `R` re-indexed to the `(y, z, x)` component order; higher
//! degrees follow from `Dˡ = C (Dˡ⁻¹ ⊗ D¹) Cᵀ` with `C = C^ℓ_{ℓ−1,1}`.

use crate::error::{Error, Result};
use crate::irreps::{EquivariantFeature, IrrepsSignature};
use crate::so3::cg::{real_table, MAX_DEGREE};

pub type Rotation = [[f64; 3]; 3];

/// Cartesian axis stored at each real-basis component of degree 1.
pub const DEGREE_ONE_AXES: [usize; 3] = [1, 2, 0];

#[derive(Clone, Debug)]
pub struct WignerRep {
    signature: IrrepsSignature,
    rotation: Rotation,
    blocks: Vec<Vec<f64>>,
}

pub fn det3(r: &Rotation) -> f64 {
    r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
}

pub fn matmul3(a: &Rotation, b: &Rotation) -> Rotation {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn transpose3(a: &Rotation) -> Rotation {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = a[j][i];
        }
    }
    t
}

fn check_rotation(r: &Rotation) -> Result<()> {
    let rtr = matmul3(&transpose3(r), r);
    let mut resid: f64 = 0.0;
    for (i, row) in rtr.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            resid = resid.max((v - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    resid = resid.max((det3(r) - 1.0).abs());
    if resid > 1e-10 || !resid.is_finite() {
        return Err(Error::NotARotation(resid));
    }
    Ok(())
}

/// `D⁰..D^max_degree` for a rotation, each row-major `(2ℓ+1)²`.
pub fn wigner_blocks(max_degree: u32, r: &Rotation) -> Result<Vec<Vec<f64>>> {
    check_rotation(r)?;
    let mut blocks = vec![vec![1.0]];
    if max_degree == 0 {
        return Ok(blocks);
    }
    let mut d1 = vec![0.0; 9];
    for a in 0..3 {
        for b in 0..3 {
            d1[a * 3 + b] = r[DEGREE_ONE_AXES[a]][DEGREE_ONE_AXES[b]];
        }
    }
    blocks.push(d1.clone());
    for l in 2..=max_degree {
        let table = real_table(l, l - 1, 1)?;
        let dp = 2 * l as usize - 1;
        let dl = 2 * l as usize + 1;
        let prev = &blocks[l as usize - 1];
        // X[M, a', b'] = Σ C[M,a,b] D^{ℓ-1}[a,a'] D^1[b,b']
        let mut x = vec![0.0; dl * dp * 3];
        for e in table.entries() {
            let mo = (e.m_out + l as i32) as usize;
            let a = (e.m1 + l as i32 - 1) as usize;
            let b = (e.m2 + 1) as usize;
            for ap in 0..dp {
                let pa = e.value * prev[a * dp + ap];
                for bp in 0..3 {
                    x[(mo * dp + ap) * 3 + bp] += pa * d1[b * 3 + bp];
                }
            }
        }
        let mut d = vec![0.0; dl * dl];
        for e in table.entries() {
            let n = (e.m_out + l as i32) as usize;
            let ap = (e.m1 + l as i32 - 1) as usize;
            let bp = (e.m2 + 1) as usize;
            for m in 0..dl {
                d[m * dl + n] += x[(m * dp + ap) * 3 + bp] * e.value;
            }
        }
        blocks.push(d);
    }
    Ok(blocks)
}

/// Rotation representation acting blockwise on features of `signature`.
pub fn wigner_d(signature: &IrrepsSignature, r: &Rotation) -> Result<WignerRep> {
    let max = signature.max_degree().unwrap_or(0);
    Ok(WignerRep {
        signature: signature.clone(),
        rotation: *r,
        blocks: wigner_blocks(max, r)?,
    })
}

impl WignerRep {
    /// Representation covering every degree up to `max_degree`.
    pub fn up_to(max_degree: u32, r: &Rotation) -> Result<Self> {
        let sig = IrrepsSignature::uniform(max_degree, 1, 1)?;
        wigner_d(&sig, r)
    }

    pub fn signature(&self) -> &IrrepsSignature {
        &self.signature
    }

    pub fn rotation(&self) -> &Rotation {
        &self.rotation
    }

    pub fn max_degree(&self) -> u32 {
        self.blocks.len() as u32 - 1
    }

    /// Row-major `Dˡ`.
    pub fn block(&self, degree: u32) -> Option<&[f64]> {
        self.blocks.get(degree as usize).map(|b| b.as_slice())
    }

    /// Applies `Dˡ` to one `(2ℓ+1)` block in place.
    pub fn rotate_block(&self, degree: u32, x: &mut [f64]) {
        let d = 2 * degree as usize + 1;
        let m = &self.blocks[degree as usize];
        let mut tmp = [0.0; 2 * MAX_DEGREE as usize + 1];
        let scratch = &mut tmp[..d];
        for (i, s) in scratch.iter_mut().enumerate() {
            *s = (0..d).map(|k| m[i * d + k] * x[k]).sum();
        }
        x.copy_from_slice(scratch);
    }

    /// Rotates every block of every token and head.
    pub fn apply(&self, f: &EquivariantFeature) -> Result<EquivariantFeature> {
        let sig = f.signature().clone();
        if let Some(max) = sig.max_degree() {
            if max > self.max_degree() {
                return Err(Error::DegreeNotPresent(max));
            }
        }
        let mut out = f.clone();
        for t in 0..f.tokens() {
            for h in 0..f.heads() {
                let head = out.head_mut(t, h);
                for e in sig.entries() {
                    let base = sig.degree_offset(e.degree).unwrap_or(0);
                    for c in 0..e.mult {
                        let s = base + c * e.dim();
                        self.rotate_block(e.degree, &mut head[s..s + e.dim()]);
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::random_rotation;

    fn max_abs(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    fn identity(d: usize) -> Vec<f64> {
        let mut i = vec![0.0; d * d];
        for k in 0..d {
            i[k * d + k] = 1.0;
        }
        i
    }

    fn mm(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
        let mut c = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                c[i * d + j] = (0..d).map(|k| a[i * d + k] * b[k * d + j]).sum();
            }
        }
        c
    }

    fn tr(a: &[f64], d: usize) -> Vec<f64> {
        let mut t = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                t[i * d + j] = a[j * d + i];
            }
        }
        t
    }

    #[test]
    fn identity_rotation() {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let blocks = wigner_blocks(6, &id).unwrap();
        for (l, b) in blocks.iter().enumerate() {
            assert!(max_abs(b, &identity(2 * l + 1)) < 1e-14);
        }
    }

    #[test]
    fn half_turn_about_z() {
        let r = [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        let d1 = &wigner_blocks(1, &r).unwrap()[1];
        assert!(max_abs(d1, &[-1.0, 0., 0., 0., 1., 0., 0., 0., -1.]) < 1e-15);
    }

    #[test]
    fn orthogonal_and_homomorphic() {
        for seed in 0..5 {
            let r1 = random_rotation(seed);
            let r2 = random_rotation(seed + 100);
            let a = wigner_blocks(8, &r1).unwrap();
            let b = wigner_blocks(8, &r2).unwrap();
            let ab = wigner_blocks(8, &matmul3(&r1, &r2)).unwrap();
            let inv = wigner_blocks(8, &transpose3(&r1)).unwrap();
            assert_eq!(a[0], vec![1.0]);
            for l in 0..=8 {
                let d = 2 * l + 1;
                assert!(max_abs(&mm(&a[l], &tr(&a[l], d), d), &identity(d)) < 1e-10);
                assert!(max_abs(&mm(&a[l], &inv[l], d), &identity(d)) < 1e-10);
                assert!(max_abs(&ab[l], &mm(&a[l], &b[l], d)) < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_reflections() {
        let r = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]];
        assert!(matches!(wigner_blocks(2, &r), Err(Error::NotARotation(_))));
        let s = [[1.1, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(wigner_blocks(2, &s), Err(Error::NotARotation(_))));
    }
}
