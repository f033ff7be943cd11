//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exposed: a Clebsch-Gordan table as a heatmap, the
//! dense vs sparse cost curves, and an equivariance check of the vector
//! long convolution under a user-chosen rotation. Each has a plain Rust core
//! (usable and testable natively) and a thin `#[wasm_bindgen]` wrapper.

use cg_attention::bench::table_memory;
use cg_attention::conv::{conv_direct, conv_fft, Boundary, ConvConfig};
use cg_attention::so3::{cg_complex, cg_real, wigner_d, Rotation};
use cg_attention::tensor_product::{flop_model, plan, ChannelMode};
use cg_attention::{make_signature, EquivariantFeature, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

/// Dense view of one coupling table: `rows = 2J+1`, `cols = (2l+1)(2l'+1)`.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct TableView {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    nnz: usize,
}

#[wasm_bindgen]
impl TableView {
    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[wasm_bindgen(getter)]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major values.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    #[wasm_bindgen(getter)]
    pub fn density(&self) -> f64 {
        self.nnz as f64 / (self.rows * self.cols) as f64
    }
}

pub fn table_view(j: u32, l1: u32, l2: u32, real: bool) -> Result<TableView> {
    let table = if real {
        cg_real(j, l1, l2)?
    } else {
        cg_complex(j, l1, l2)?
    };
    let (rows, d1, d2) = table.shape();
    Ok(TableView {
        rows,
        cols: d1 * d2,
        values: table.dense(),
        nnz: table.nnz(),
    })
}

/// Cost curves indexed by maximum degree `L = 1..=max_l`.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct Curves {
    degrees: Vec<f64>,
    dense_flops: Vec<f64>,
    sparse_flops: Vec<f64>,
    dense_bytes: Vec<f64>,
    sparse_bytes: Vec<f64>,
}

#[wasm_bindgen]
impl Curves {
    #[wasm_bindgen(getter)]
    pub fn degrees(&self) -> Vec<f64> {
        self.degrees.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn dense_flops(&self) -> Vec<f64> {
        self.dense_flops.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn sparse_flops(&self) -> Vec<f64> {
        self.sparse_flops.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn dense_bytes(&self) -> Vec<f64> {
        self.dense_bytes.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn sparse_bytes(&self) -> Vec<f64> {
        self.sparse_bytes.clone()
    }
}

pub fn cost_curves(max_l: u32) -> Result<Curves> {
    let mut c = Curves {
        degrees: Vec::new(),
        dense_flops: Vec::new(),
        sparse_flops: Vec::new(),
        dense_bytes: Vec::new(),
        sparse_bytes: Vec::new(),
    };
    for l in 1..=max_l {
        let (df, sf) = flop_model(l, ChannelMode::Full)?;
        let (db, sb) = table_memory(l)?;
        c.degrees.push(l as f64);
        c.dense_flops.push(df as f64);
        c.sparse_flops.push(sf as f64);
        c.dense_bytes.push(db as f64);
        c.sparse_bytes.push(sb as f64);
    }
    Ok(c)
}

/// Result of convolving two random vector sequences, before and after a rotation.
#[wasm_bindgen]
#[derive(Clone, Debug)]
pub struct ConvDemo {
    tokens: usize,
    output: Vec<f64>,
    rotated_output: Vec<f64>,
    equivariance_error: f64,
    fft_direct_error: f64,
}

#[wasm_bindgen]
impl ConvDemo {
    #[wasm_bindgen(getter)]
    pub fn tokens(&self) -> usize {
        self.tokens
    }

    /// Degree-1 output `conv(q, k)` then rotated, as `(x, y, z)` triples per token.
    #[wasm_bindgen(getter)]
    pub fn output(&self) -> Vec<f64> {
        self.output.clone()
    }

    /// Degree-1 output `conv(Rq, Rk)` as `(x, y, z)` triples per token.
    #[wasm_bindgen(getter)]
    pub fn rotated_output(&self) -> Vec<f64> {
        self.rotated_output.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn equivariance_error(&self) -> f64 {
        self.equivariance_error
    }

    #[wasm_bindgen(getter)]
    pub fn fft_direct_error(&self) -> f64 {
        self.fft_direct_error
    }
}

/// Rodrigues rotation about `axis` (normalized here) by `angle` radians.
pub fn axis_angle(axis: [f64; 3], angle: f64) -> Rotation {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = if n > 0.0 { axis.map(|a| a / n) } else { [0.0, 0.0, 1.0] };
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

pub fn conv_demo(tokens: usize, seed: u64, axis: [f64; 3], angle: f64) -> Result<ConvDemo> {
    let sig = make_signature(&[(1, 1)], 1)?;
    let cfg = ConvConfig::new(plan(&sig, &sig, &[1], ChannelMode::Full)?, Boundary::Circular);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = EquivariantFeature::random(&sig, tokens, &mut rng);
    let k = EquivariantFeature::random(&sig, tokens, &mut rng);

    let d_in = wigner_d(&sig, &axis_angle(axis, angle))?;
    let out = conv_fft(&cfg, &q, &k)?;
    let d_out = wigner_d(cfg.out_signature(), &axis_angle(axis, angle))?;
    let rotate_after = d_out.apply(&out)?;
    let rotate_before = conv_fft(&cfg, &d_in.apply(&q)?, &d_in.apply(&k)?)?;
    let direct = conv_direct(&cfg, &q, &k)?;

    Ok(ConvDemo {
        tokens,
        output: to_cartesian(&rotate_after),
        rotated_output: to_cartesian(&rotate_before),
        equivariance_error: rotate_before.rel_err(&rotate_after),
        fft_direct_error: out.rel_err(&direct),
    })
}

/// Degree-1 blocks are stored in `(y, z, x)` order.
fn to_cartesian(f: &EquivariantFeature) -> Vec<f64> {
    f.data().chunks(3).flat_map(|c| [c[2], c[0], c[1]]).collect()
}

fn js(e: cg_attention::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = cgTable)]
pub fn cg_table_js(j: u32, l1: u32, l2: u32, real: bool) -> std::result::Result<TableView, JsError> {
    table_view(j, l1, l2, real).map_err(js)
}

#[wasm_bindgen(js_name = costCurves)]
pub fn cost_curves_js(max_l: u32) -> std::result::Result<Curves, JsError> {
    cost_curves(max_l).map_err(js)
}

#[wasm_bindgen(js_name = convDemo)]
pub fn conv_demo_js(
    tokens: usize,
    seed: u32,
    ax: f64,
    ay: f64,
    az: f64,
    angle_deg: f64,
) -> std::result::Result<ConvDemo, JsError> {
    conv_demo(tokens, u64::from(seed), [ax, ay, az], angle_deg.to_radians()).map_err(js)
}
