use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{BenchConfig, ReportLine, Threshold};
use crate::attention::{Block, BlockConfig, PARAM_GROUPS};
use crate::conv::{conv_direct, conv_fft, Boundary, ConvConfig};
use crate::error::{Error, Result};
use crate::irreps::{make_signature, EquivariantFeature, IrrepsSignature};
use crate::oracles::{finite_diff, random_rotation_with, reference_product, sphere_product_check, SphereGrid};
use crate::so3::cg::{cg_complex, cg_real, real_change_of_basis, triangle, CGTable, TableCache};
use crate::so3::{wigner_d, Basis};
use crate::spectral::{
    build_spectrum, fft_permutation_error, permutation_check, random_permutation, random_weighted_graph,
    PERMUTATION_TOLERANCE,
};
use crate::tensor_product::{cross_product_check, plan, ChannelMode, Kernel, ParitySelection, ProductPlan};

/// Equivariance tolerance of contraction, convolution and attention.
pub const EQUIVARIANCE_TOLERANCE: f64 = 1e-9;
const ROTATIONS: usize = 50;

fn case_rng(seed: u64, suite: u64, case: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (suite << 48) ^ (case as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn map_cases<T, F>(parallel: bool, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if parallel {
        (0..count).into_par_iter().map(f).collect()
    } else {
        (0..count).map(f).collect()
    }
}

fn mode_name(mode: ChannelMode) -> &'static str {
    match mode {
        ChannelMode::Full => "full",
        ChannelMode::Elementwise => "elementwise",
    }
}

fn faulty(mut p: ProductPlan, inject: bool) -> ProductPlan {
    if inject {
        p.inject_fault();
    }
    p
}

/// `50` random rotations over contraction, FFT convolution and the full block.
pub fn equivariance_suite(cfg: &BenchConfig) -> Result<Vec<ReportLine>> {
    const TOKENS: [usize; 5] = [4, 17, 32, 64, 9];
    let per_case = map_cases(cfg.parallel, ROTATIONS, |i| -> Result<Vec<ReportLine>> {
        let mut rng = case_rng(cfg.seed, 1, i);
        let l = 1 + (i % 5) as u32;
        let heads = 1 + i % 4;
        let mode = if i % 2 == 0 {
            ChannelMode::Full
        } else {
            ChannelMode::Elementwise
        };
        let n = TOKENS[(i / 5) % TOKENS.len()];
        let mult = if l <= 2 { 2 } else { 1 };
        let sig = IrrepsSignature::uniform(l, mult, heads)?;
        let out: Vec<u32> = (0..=l).collect();
        let p = faulty(plan(&sig, &sig, &out, mode)?, cfg.inject_fault);
        let r = random_rotation_with(&mut rng);
        let din = wigner_d(&sig, &r)?;
        let dout = wigner_d(p.out_signature(), &r)?;
        let a = EquivariantFeature::random(&sig, n, &mut rng);
        let b = EquivariantFeature::random(&sig, n, &mut rng);
        let (ra, rb) = (din.apply(&a)?, din.apply(&b)?);
        let label = format!("rot{i} L={l} h={heads} N={n} {}", mode_name(mode));

        let lhs = p.contract(Kernel::Sparse, &ra, &rb)?;
        let rhs = dout.apply(&p.contract(Kernel::Sparse, &a, &b)?)?;
        let e_contract = lhs.rel_err(&rhs);

        let boundary = if i % 3 == 0 {
            Boundary::Linear
        } else {
            Boundary::Circular
        };
        let conv = ConvConfig::new(p, boundary);
        let lhs = conv_fft(&conv, &ra, &rb)?;
        let rhs = dout.apply(&conv_fft(&conv, &a, &b)?)?;
        let e_conv = lhs.rel_err(&rhs);

        let la = l;
        let bsig = IrrepsSignature::uniform(la, 1, heads)?;
        let block = Block::new(
            BlockConfig::new(bsig.clone(), la)
                .with_mode(mode)
                .with_seed(cfg.seed.wrapping_add(i as u64)),
        )?;
        let f = EquivariantFeature::random(&bsig, n, &mut rng);
        let db = wigner_d(&bsig, &r)?;
        let e_attend = block.attend(&db.apply(&f)?)?.rel_err(&db.apply(&block.attend(&f)?)?);

        let t = Threshold::Below(EQUIVARIANCE_TOLERANCE);
        Ok(vec![
            ReportLine::new("equivariance", format!("contract {label}"), "rel_err", e_contract, t),
            ReportLine::new(
                "equivariance",
                format!("conv_fft {label} {boundary:?}"),
                "rel_err",
                e_conv,
                t,
            ),
            ReportLine::new("equivariance", format!("attend {label}"), "rel_err", e_attend, t),
        ])
    })?;
    let mut lines: Vec<ReportLine> = per_case.into_iter().flatten().collect();
    if let Some(block) = &cfg.block {
        let mut rng = case_rng(cfg.seed, 1, ROTATIONS);
        let sig = block.signature();
        let f = EquivariantFeature::random(sig, 16, &mut rng);
        let d = wigner_d(sig, &random_rotation_with(&mut rng))?;
        let e = block.attend(&d.apply(&f)?)?.rel_err(&d.apply(&block.attend(&f)?)?);
        lines.push(ReportLine::new(
            "equivariance",
            format!("attend loaded block {sig}"),
            "rel_err",
            e,
            Threshold::Below(EQUIVARIANCE_TOLERANCE),
        ));
    }
    Ok(lines)
}

/// `√2·C¹₁₁(q⊗k) = q×k` on 100 random pairs.
pub fn cross_product_checks(cfg: &BenchConfig) -> Result<Vec<ReportLine>> {
    let r = cross_product_check(100, cfg.seed)?;
    let err = r.max_abs_err;
    Ok(vec![ReportLine::new(
        "oracle",
        format!("cross_product {} pairs", r.cases),
        "max_abs_err",
        err,
        Threshold::Below(1e-13),
    )])
}

fn random_signature<R: Rng>(rng: &mut R, max_l: u32, heads: usize) -> Result<IrrepsSignature> {
    let mut entries = Vec::new();
    for l in 0..=max_l {
        if rng.gen_bool(0.6) {
            entries.push((l, rng.gen_range(1..=2)));
        }
    }
    if entries.is_empty() {
        entries.push((rng.gen_range(0..=max_l), 1));
    }
    make_signature(&entries, heads)
}

/// Sparse kernel, dense kernel and the triple-loop reference on 200 cases.
pub fn sparse_dense_checks(cfg: &BenchConfig) -> Result<Vec<ReportLine>> {
    const CASES: usize = 200;
    let errs = map_cases(cfg.parallel, CASES, |i| -> Result<(f64, f64)> {
        let mut rng = case_rng(cfg.seed, 2, i);
        let max_l = rng.gen_range(1..=6);
        let heads = rng.gen_range(1..=2);
        let elementwise = i % 4 == 3;
        let a_sig = random_signature(&mut rng, max_l, heads)?;
        let (a_sig, b_sig) = if elementwise {
            // one shared multiplicity across degrees
            let m = rng.gen_range(1..=2);
            let entries: Vec<(u32, usize)> = a_sig.degrees().map(|d| (d, m)).collect();
            let s = make_signature(&entries, heads)?;
            (s.clone(), s)
        } else {
            let b = random_signature(&mut rng, max_l, heads)?;
            (a_sig, b)
        };
        let mode = if elementwise {
            ChannelMode::Elementwise
        } else {
            ChannelMode::Full
        };
        let out: Vec<u32> = (0..=6).collect();
        let p = faulty(plan(&a_sig, &b_sig, &out, mode)?, cfg.inject_fault);
        let n = rng.gen_range(1..=3);
        let a = EquivariantFeature::random(&a_sig, n, &mut rng);
        let b = EquivariantFeature::random(&b_sig, n, &mut rng);
        let sparse = p.contract(Kernel::Sparse, &a, &b)?;
        let dense = p.contract(Kernel::Dense, &a, &b)?;
        let reference = reference_product(&a, &b, &out, elementwise)?;
        if reference.signature() != sparse.signature() {
            return Err(Error::SignatureMismatch(format!(
                "reference layout {} differs from plan layout {}",
                reference.signature(),
                sparse.signature()
            )));
        }
        Ok((sparse.max_abs_diff(&dense), sparse.max_abs_diff(&reference)))
    })?;
    let sd = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let sr = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(vec![
        ReportLine::new(
            "oracle",
            format!("sparse_vs_dense {CASES} cases L<=6"),
            "max_abs_diff",
            sd,
            Threshold::Below(1e-12),
        ),
        ReportLine::new(
            "oracle",
            format!("sparse_vs_reference {CASES} cases L<=6"),
            "max_abs_diff",
            sr,
            Threshold::Below(1e-12),
        ),
    ])
}

/// FFT against direct convolution for awkward lengths and both boundaries.
pub fn fft_direct_checks(cfg: &BenchConfig) -> Result<Vec<ReportLine>> {
    const NS: [usize; 6] = [3, 4, 8, 17, 64, 257];
    let cases: Vec<(usize, Boundary)> = NS
        .iter()
        .flat_map(|&n| [Boundary::Circular, Boundary::Linear].map(|b| (n, b)))
        .collect();
    map_cases(cfg.parallel, cases.len(), |i| {
        let (n, boundary) = cases[i];
        let mut rng = case_rng(cfg.seed, 3, i);
        let l = 1 + (i / 2 % 4) as u32;
        let sig = IrrepsSignature::uniform(l, 1, 2)?;
        let out: Vec<u32> = (0..=l).collect();
        let conv = ConvConfig::new(plan(&sig, &sig, &out, cfg.mode)?, boundary);
        let q = EquivariantFeature::random(&sig, n, &mut rng);
        let k = EquivariantFeature::random(&sig, n, &mut rng);
        let e = conv_fft(&conv, &q, &k)?.rel_err(&conv_direct(&conv, &q, &k)?);
        Ok(ReportLine::new(
            "oracle",
            format!("fft_vs_direct N={n} L={l} {boundary:?}"),
            "rel_err",
            e,
            Threshold::Below(1e-10),
        ))
    })
}

/// Largest deviation from orthonormality of the stacked rows of all `J` for one `(ℓ, ℓ′)`.
fn stacked_orthonormality(tables: &[CGTable]) -> f64 {
    let (_, d1, d2) = tables[0].shape();
    let width = d1 * d2;
    let rows: Vec<Vec<f64>> = tables
        .iter()
        .flat_map(|t| {
            let dense = t.dense();
            let dj = t.shape().0;
            (0..dj)
                .map(move |m| dense[m * width..(m + 1) * width].to_vec())
                .collect::<Vec<_>>()
        })
        .collect();
    let mut worst = (rows.len() as f64 - width as f64).abs();
    for (a, ra) in rows.iter().enumerate() {
        for (b, rb) in rows.iter().enumerate().skip(a) {
            let dot: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

/// Selection rule, parity, sparsity bound and orthonormality for `L ≤ max_l`.
pub fn cg_structure_checks(cfg: &BenchConfig, max_l: u32) -> Result<Vec<ReportLine>> {
    let cache = TableCache::build(max_l)?;
    let mut selection_violations = 0usize;
    for t in cache.tables(Basis::Complex) {
        selection_violations += t.entries().iter().filter(|e| e.m_out != e.m1 + e.m2).count();
    }

    let mut odd_real_part = 0.0f64;
    let mut nnz_excess = 0.0f64;
    let mut real_nnz_excess = 0.0f64;
    for j in 0..=max_l {
        for l1 in 0..=max_l {
            for l2 in 0..=max_l {
                if !triangle(j, l1, l2) {
                    continue;
                }
                let bound = ((2 * l1 + 1) * (2 * l2 + 1)) as f64;
                let complex = cache.get(Basis::Complex, j, l1, l2).expect("cached");
                nnz_excess = nnz_excess.max(complex.nnz() as f64 / bound);
                let real = cache.get(Basis::Real, j, l1, l2).expect("cached");
                real_nnz_excess = real_nnz_excess.max(real.nnz() as f64 / bound);
                if (j + l1 + l2) % 2 == 1 {
                    let raw = real_change_of_basis(j, l1, l2)?;
                    odd_real_part = raw.iter().map(|z| z.re.abs()).fold(odd_real_part, f64::max);
                }
            }
        }
    }

    let sig = IrrepsSignature::uniform(max_l, 1, 1)?;
    let all: Vec<u32> = (0..=max_l).collect();
    let even_plan = ProductPlan::new(&sig, &sig, &all, ChannelMode::Full, ParitySelection::Even)?;
    let odd_paths = even_plan
        .paths()
        .iter()
        .filter(|p| {
            let (dj, d1, d2) = p.table().shape();
            ((dj - 1) / 2 + (d1 - 1) / 2 + (d2 - 1) / 2) % 2 == 1
        })
        .count();

    let pairs: Vec<(u32, u32)> = (0..=max_l).flat_map(|a| (0..=max_l).map(move |b| (a, b))).collect();
    let ortho = map_cases(cfg.parallel, pairs.len(), |i| -> Result<f64> {
        let (l1, l2) = pairs[i];
        let js = l1.abs_diff(l2)..=l1 + l2;
        let complex: Vec<CGTable> = js.clone().map(|j| cg_complex(j, l1, l2)).collect::<Result<_>>()?;
        let real: Vec<CGTable> = js.map(|j| cg_real(j, l1, l2)).collect::<Result<_>>()?;
        Ok(stacked_orthonormality(&complex).max(stacked_orthonormality(&real)))
    })?
    .into_iter()
    .fold(0.0, f64::max);

    let s = "oracle";
    let scope = format!("cg_structure L<={max_l}");
    Ok(vec![
        ReportLine::new(
            s,
            format!("{scope} selection_rule"),
            "violations",
            selection_violations as f64,
            Threshold::Below(0.5),
        ),
        ReportLine::new(
            s,
            format!("{scope} odd_parity_real_part"),
            "max_abs",
            odd_real_part,
            Threshold::Below(1e-14),
        )
        .with_note(
            "real part of the real-basis transform vanishes for odd l+l'+J; the stored tables keep the imaginary part",
        ),
        ReportLine::new(
            s,
            format!("{scope} even_parity_plan"),
            "odd_paths",
            odd_paths as f64,
            Threshold::Below(0.5),
        ),
        ReportLine::new(
            s,
            format!("{scope} nnz_bound"),
            "max_nnz_over_bound",
            nnz_excess,
            Threshold::Below(1.0 + 1e-12),
        ),
        ReportLine::new(
            s,
            format!("{scope} real_nnz_bound"),
            "max_nnz_over_bound",
            real_nnz_excess,
            Threshold::Below(2.0 + 1e-12),
        )
        .with_note("a real-basis (m, m') pair feeds up to two outputs, so real tables obey twice the complex bound"),
        ReportLine::new(
            s,
            format!("{scope} orthonormality"),
            "max_abs_dev",
            ortho,
            Threshold::Below(1e-12),
        ),
    ])
}

/// Coefficient products against sphere quadrature for band limits `0..=max_band`.
pub fn sphere_product_checks(cfg: &BenchConfig, max_band: usize) -> Result<Vec<ReportLine>> {
    let mut lines = Vec::new();
    for band in 0..=max_band {
        let mut rng = case_rng(cfg.seed, 4, band);
        let grid = SphereGrid::new(band);
        let n = (band + 1) * (band + 1);
        let f: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let r = sphere_product_check(&grid, band, &f, &g)?;
        lines.push(ReportLine::new(
            "oracle",
            format!("sphere_product L={band}"),
            "rel_err",
            r.rel_err,
            Threshold::Below(1e-8),
        ));
    }
    Ok(lines)
}

/// Directional finite differences of `⟨g, attend(f; θ)⟩` against the adjoint.
pub fn gradient_checks(cfg: &BenchConfig) -> Result<Vec<ReportLine>> {
    const STEP: f64 = 1e-5;
    let mut rng = case_rng(cfg.seed, 5, 0);
    let sig = make_signature(&[(0, 2), (1, 2), (2, 1)], 2)?;
    let block = Block::new(BlockConfig::new(sig.clone(), 2).with_mode(cfg.mode).with_seed(cfg.seed))?;
    let n = 8;
    let f = EquivariantFeature::random(&sig, n, &mut rng);
    let g = EquivariantFeature::random(&sig, n, &mut rng);
    let (grad_f, grad_p) = block.attend_adjoint(&g, &f)?;
    let theta = block.params().to_vec();
    let grad_theta = grad_p.to_vec();

    let objective = |params: &[f64], input: &[f64]| -> f64 {
        let mut b = block.clone();
        b.params_mut().set_from_slice(params).expect("same layout");
        let x = EquivariantFeature::from_vec(&sig, n, input.to_vec()).expect("same shape");
        g.dot(&b.attend(&x).expect("valid block"))
    };
    let rel = |fd: f64, an: f64| (fd - an).abs() / fd.abs().max(an.abs()).max(1e-12);

    let mut lines = Vec::new();
    let groups = block.params().groups();
    debug_assert_eq!(groups.len(), PARAM_GROUPS.len());
    for (name, range) in groups {
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let mut dir = vec![0.0; theta.len()];
            for d in &mut dir[range.clone()] {
                *d = rng.sample(StandardNormal);
            }
            let fd = finite_diff(|p| objective(p, f.data()), &theta, &dir, STEP);
            let an: f64 = grad_theta.iter().zip(&dir).map(|(a, b)| a * b).sum();
            worst = worst.max(rel(fd, an));
        }
        lines.push(ReportLine::new(
            "oracle",
            format!("gradient N={n} L=2 group={name} ({} params)", range.len()),
            "max_rel_err",
            worst,
            Threshold::Below(1e-6),
        ));
    }
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let dir: Vec<f64> = (0..f.data().len()).map(|_| rng.sample(StandardNormal)).collect();
        let fd = finite_diff(|x| objective(&theta, x), f.data(), &dir, STEP);
        let an: f64 = grad_f.data().iter().zip(&dir).map(|(a, b)| a * b).sum();
        worst = worst.max(rel(fd, an));
    }
    lines.push(ReportLine::new(
        "oracle",
        format!("gradient N={n} L=2 input"),
        "max_rel_err",
        worst,
        Threshold::Below(1e-6),
    ));
    Ok(lines)
}

/// Every oracle comparison in sequence.
pub fn oracle_suite(cfg: &BenchConfig) -> Result<Vec<ReportLine>> {
    let mut lines = cross_product_checks(cfg)?;
    lines.extend(sparse_dense_checks(cfg)?);
    lines.extend(fft_direct_checks(cfg)?);
    lines.extend(cg_structure_checks(cfg, 8)?);
    lines.extend(sphere_product_checks(cfg, 4)?);
    lines.extend(gradient_checks(cfg)?);
    Ok(lines)
}

fn permutation_case(
    suite_seed: u64,
    label: String,
    n: usize,
    adjacency: &[f64],
    l: u32,
    inject_fault: bool,
) -> Result<Vec<ReportLine>> {
    let mut rng = ChaCha8Rng::seed_from_u64(suite_seed);
    let spec = build_spectrum(n, adjacency)?;
    let sig = IrrepsSignature::uniform(l, 1, 1)?;
    let out: Vec<u32> = (0..=l).collect();
    let p = faulty(plan(&sig, &sig, &out, ChannelMode::Full)?, inject_fault);
    let q = EquivariantFeature::random(&sig, n, &mut rng);
    let k = EquivariantFeature::random(&sig, n, &mut rng);
    let perm = random_permutation(n, suite_seed.wrapping_add(1));
    let report = match permutation_check(&spec, &p, &q, &k, &perm) {
        Err(Error::DegenerateSpectrum(gap)) => {
            return Ok(vec![ReportLine::new(
                "permutation",
                label,
                "min_eigen_gap",
                gap,
                Threshold::Below(f64::INFINITY),
            )
            .with_note("skipped: degenerate spectrum makes the eigenbasis non-unique")]);
        }
        r => r?,
    };
    let fft_err = fft_permutation_error(&ConvConfig::new(p, Boundary::Circular), &q, &k, &perm)?;
    Ok(vec![
        ReportLine::new(
            "permutation",
            format!("spectral {label}"),
            "rel_err",
            report.rel_err,
            Threshold::Below(PERMUTATION_TOLERANCE),
        ),
        ReportLine::new(
            "permutation",
            format!("fft {label}"),
            "rel_err",
            fft_err,
            Threshold::Above { min: 1e-2 },
        )
        .with_note("the token FFT is expected to break permutation equivariance"),
    ])
}

/// Spectral path on 20 random simple-spectrum graphs (plus `cfg.graph`),
/// with the FFT path as the failing contrast.
pub fn permutation_suite(cfg: &BenchConfig) -> Result<Vec<ReportLine>> {
    const GRAPHS: usize = 20;
    let per = map_cases(cfg.parallel, GRAPHS, |i| {
        let n = 5 + (i * 7) % 20;
        let l = 1 + (i % 3) as u32;
        // redraw until the spectrum is simple; weighted random graphs almost always are
        let mut attempt = 0u64;
        loop {
            let gseed = cfg.seed ^ ((i as u64) << 20) ^ attempt;
            let adj = random_weighted_graph(n, gseed);
            if build_spectrum(n, &adj)?.min_gap() > crate::spectral::SIMPLE_GAP || attempt > 16 {
                return permutation_case(gseed, format!("graph{i} n={n} L={l}"), n, &adj, l, cfg.inject_fault);
            }
            attempt += 1;
        }
    })?;
    let mut lines: Vec<ReportLine> = per.into_iter().flatten().collect();
    if let Some((n, adj)) = &cfg.graph {
        lines.extend(permutation_case(
            cfg.seed,
            format!("input graph n={n} L=2"),
            *n,
            adj,
            2,
            cfg.inject_fault,
        )?);
    }
    Ok(lines)
}
