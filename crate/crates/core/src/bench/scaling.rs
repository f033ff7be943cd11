use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BenchConfig, ReportLine, Threshold};
use crate::conv::{conv_direct, conv_fft, Boundary, ConvConfig};
use crate::error::{Error, Result};
use crate::irreps::{make_signature, EquivariantFeature, IrrepsSignature};
use crate::so3::cg::triangle;
use crate::so3::{cg_complex, real_table};
use crate::tensor_product::{flop_model, plan, Kernel};

/// Bytes per stored sparse entry: three `u16` indices and one `f64`.
pub const SPARSE_ENTRY_BYTES: usize = 3 * 2 + 8;
/// Bytes per dense array cell.
pub const DENSE_CELL_BYTES: usize = 8;
/// Cells whose working set would exceed this are recorded as `OOM`.
pub const CELL_MEMORY_BUDGET: usize = 4 << 30;

/// A CSV table and the checks derived from it.
#[derive(Clone, Debug)]
pub struct ScalingTable {
    pub csv: String,
    pub lines: Vec<ReportLine>,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let mut distinct: Vec<f64> = pts.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::FitRefused(format!(
            "need at least two distinct positive abscissae, got {}",
            distinct.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

fn median_ms<F: FnMut() -> Result<()>>(reps: usize, mut f: F) -> Result<f64> {
    f()?;
    let mut times = Vec::with_capacity(reps.max(1));
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        f()?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(f64::total_cmp);
    Ok(times[times.len() / 2])
}

fn fmt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "OOM".to_string(), |x| format!("{x:.6}"))
}

/// `N,ms_fft,ms_direct` for the vector product `(1)⊗(1)→1`, with `#fit` slopes.
pub fn run_scaling_n(cfg: &BenchConfig) -> Result<ScalingTable> {
    let mut ns = cfg.n_list.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 2 {
        return Err(Error::FitRefused(format!(
            "token scaling needs at least two N values, got {:?}",
            cfg.n_list
        )));
    }
    let sig = make_signature(&[(1, 1)], cfg.heads.max(1))?;
    let mut conv_plan = plan(&sig, &sig, &[1], cfg.mode)?;
    if cfg.inject_fault {
        conv_plan.inject_fault();
    }
    let conv = ConvConfig::new(conv_plan, Boundary::Circular);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut csv = format!(
        "# token scaling: (1)x(1)->1, heads={}, median of {} runs after one discarded warmup\nN,ms_fft,ms_direct\n",
        sig.heads(),
        cfg.repetitions
    );
    let (mut fx, mut fy, mut dx, mut dy) = (vec![], vec![], vec![], vec![]);
    for &n in &ns {
        let lanes = sig.total_width();
        let fits = n.saturating_mul(lanes).saturating_mul(16 * 8) <= CELL_MEMORY_BUDGET;
        let (ms_fft, ms_direct) = if fits {
            let q = EquivariantFeature::random(&sig, n, &mut rng);
            let k = EquivariantFeature::random(&sig, n, &mut rng);
            let f = median_ms(cfg.repetitions, || conv_fft(&conv, &q, &k).map(drop))?;
            let d = median_ms(cfg.repetitions, || conv_direct(&conv, &q, &k).map(drop))?;
            (Some(f), Some(d))
        } else {
            (None, None)
        };
        if let (Some(f), Some(d)) = (ms_fft, ms_direct) {
            fx.push(n as f64);
            fy.push(f);
            dx.push(n as f64);
            dy.push(d);
        }
        writeln!(csv, "{n},{},{}", fmt_cell(ms_fft), fmt_cell(ms_direct)).expect("string write");
    }
    let s_fft = fit_loglog(&fx, &fy)?;
    let s_direct = fit_loglog(&dx, &dy)?;
    writeln!(csv, "#fit,slope_fft,{s_fft:.4}\n#fit,slope_direct,{s_direct:.4}").expect("string write");
    let lines = vec![
        ReportLine::new("scaling-N", "conv_fft", "loglog_slope", s_fft, Threshold::Below(1.3)),
        ReportLine::new(
            "scaling-N",
            "conv_direct",
            "loglog_slope",
            s_direct,
            Threshold::Above { min: 1.8 },
        ),
    ];
    Ok(ScalingTable { csv, lines })
}

fn check_l_list(cfg: &BenchConfig, lo: u32) -> Result<Vec<u32>> {
    let mut ls = cfg.l_list.clone();
    ls.sort_unstable();
    ls.dedup();
    if let Some(&bad) = ls.iter().find(|&&l| l < lo || l > 10) {
        return Err(Error::DegreeTooLarge(bad, 10));
    }
    Ok(ls)
}

/// `L,dense_flops,sparse_flops,ms_dense,ms_sparse` with slopes fitted against
/// the number of degrees `L+1`.
pub fn run_scaling_l(cfg: &BenchConfig) -> Result<ScalingTable> {
    let ls = check_l_list(cfg, 0)?;
    if ls.len() < 2 {
        return Err(Error::FitRefused(format!(
            "degree scaling needs at least two L values, got {:?}",
            cfg.l_list
        )));
    }
    const TOKENS: usize = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut csv = format!(
        "# degree scaling: degrees 0..=L, one channel each, heads={}, {TOKENS} tokens timed, median of {} runs after one discarded warmup\nL,dense_flops,sparse_flops,ms_dense,ms_sparse\n",
        cfg.heads.max(1),
        cfg.repetitions
    );
    let mut x = vec![];
    let (mut df, mut sf, mut dm, mut sm) = (vec![], vec![], vec![], vec![]);
    for &l in &ls {
        let (dense, sparse) = flop_model(l, cfg.mode)?;
        let sig = IrrepsSignature::uniform(l, 1, cfg.heads.max(1))?;
        let out: Vec<u32> = (0..=l).collect();
        let p = plan(&sig, &sig, &out, cfg.mode)?;
        let a = EquivariantFeature::random(&sig, TOKENS, &mut rng);
        let b = EquivariantFeature::random(&sig, TOKENS, &mut rng);
        let ms_d = median_ms(cfg.repetitions, || p.contract(Kernel::Dense, &a, &b).map(drop))?;
        let ms_s = median_ms(cfg.repetitions, || p.contract(Kernel::Sparse, &a, &b).map(drop))?;
        writeln!(csv, "{l},{dense},{sparse},{ms_d:.6},{ms_s:.6}").expect("string write");
        x.push((l + 1) as f64);
        df.push(dense as f64);
        sf.push(sparse as f64);
        dm.push(ms_d);
        sm.push(ms_s);
    }
    let s_df = fit_loglog(&x, &df)?;
    let s_sf = fit_loglog(&x, &sf)?;
    let s_dm = fit_loglog(&x, &dm)?;
    let s_sm = fit_loglog(&x, &sm)?;
    let sel: Vec<f64> = ls
        .iter()
        .map(|&l| selection_rule_flops(l).map(|f| f as f64))
        .collect::<Result<_>>()?;
    let s_sel = fit_loglog(&x, &sel)?;
    writeln!(
        csv,
        "#fit,dense_flops,{s_df:.4}\n#fit,sparse_flops,{s_sf:.4}\n#fit,ms_dense,{s_dm:.4}\n#fit,ms_sparse,{s_sm:.4}\n#fit,selection_rule_flops,{s_sel:.4}"
    )
    .expect("string write");
    let lines = vec![
        ReportLine::new(
            "scaling-L",
            "dense_flops",
            "loglog_slope",
            s_df,
            Threshold::Within { min: 5.5, max: 6.2 },
        ),
        ReportLine::new(
            "scaling-L",
            "dense_minus_sparse_flops",
            "slope_gap",
            s_df - s_sf,
            Threshold::Above { min: 0.8 },
        ),
    ];
    Ok(ScalingTable { csv, lines })
}

/// `Σ 2·nnz` over the complex-basis tables of the one-channel plan with
/// degrees `≤ L`: the count implied by the `M = m + m′` selection rule alone.
/// Reported for comparison only; the sparse kernel runs on real-basis tables.
pub fn selection_rule_flops(max_degree: u32) -> Result<u64> {
    let mut total = 0;
    for j in 0..=max_degree {
        for l1 in 0..=max_degree {
            for l2 in 0..=max_degree {
                if triangle(j, l1, l2) {
                    total += 2 * cg_complex(j, l1, l2)?.nnz() as u64;
                }
            }
        }
    }
    Ok(total)
}

/// Storage of every real table with `J, ℓ, ℓ′ ≤ L`: `(dense_bytes, sparse_bytes)`.
pub fn table_memory(max_degree: u32) -> Result<(usize, usize)> {
    let mut dense = 0;
    let mut sparse = 0;
    for j in 0..=max_degree {
        for l1 in 0..=max_degree {
            for l2 in 0..=max_degree {
                if !triangle(j, l1, l2) {
                    continue;
                }
                let t = real_table(j, l1, l2)?;
                dense += t.cells() * DENSE_CELL_BYTES;
                sparse += t.nnz() * SPARSE_ENTRY_BYTES;
            }
        }
    }
    Ok((dense, sparse))
}

/// `L,dense_bytes,sparse_bytes` from table storage accounting.
pub fn run_memory(cfg: &BenchConfig) -> Result<ScalingTable> {
    let ls = check_l_list(cfg, 0)?;
    let mut csv = format!(
        "# table storage: real tables with J,l,l' <= L; dense {DENSE_CELL_BYTES} B/cell, sparse {SPARSE_ENTRY_BYTES} B/entry\nL,dense_bytes,sparse_bytes\n"
    );
    let mut ratios = Vec::new();
    for &l in &ls {
        let (d, s) = table_memory(l)?;
        writeln!(csv, "{l},{d},{s}").expect("string write");
        ratios.push(s as f64 / d as f64);
    }
    let worst_step = ratios.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let mut lines = vec![ReportLine::new(
        "memory",
        "sparse_over_dense",
        "max_ratio",
        ratios.iter().cloned().fold(0.0, f64::max),
        Threshold::Below(1.0 + 1e-12),
    )];
    if ratios.len() >= 2 {
        lines.push(ReportLine::new(
            "memory",
            "sparse_over_dense",
            "max_consecutive_increase",
            worst_step,
            Threshold::Below(0.0),
        ));
    }
    Ok(ScalingTable { csv, lines })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs: Vec<f64> = (1..6).map(|x| x as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powi(3)).collect();
        assert!((fit_loglog(&xs, &ys).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(fit_loglog(&[2.0], &[1.0]), Err(Error::FitRefused(_))));
    }

    #[test]
    fn single_point_lists_are_refused() {
        let cfg = BenchConfig {
            n_list: vec![256],
            l_list: vec![2],
            ..BenchConfig::default()
        };
        assert!(matches!(run_scaling_n(&cfg), Err(Error::FitRefused(_))));
        assert!(matches!(run_scaling_l(&cfg), Err(Error::FitRefused(_))));
    }

    #[test]
    fn degree_one_memory_counts_cells() {
        let (d, s) = table_memory(1).unwrap();
        let mut cells = 0;
        for j in 0..=1u32 {
            for a in 0..=1u32 {
                for b in 0..=1u32 {
                    if triangle(j, a, b) {
                        cells += ((2 * j + 1) * (2 * a + 1) * (2 * b + 1)) as usize;
                    }
                }
            }
        }
        assert_eq!(d, cells * DENSE_CELL_BYTES);
        assert!(s <= d);
    }

    #[test]
    fn flop_slopes() {
        let cfg = BenchConfig {
            l_list: (2..=8).collect(),
            repetitions: 1,
            ..BenchConfig::default()
        };
        let t = run_scaling_l(&cfg).unwrap();
        assert!(t.lines[0].pass, "{}", t.csv);
        assert!(t.lines[1].value > 0.5, "{}", t.csv);
        let m = run_memory(&cfg).unwrap();
        assert!(m.lines.iter().all(|l| l.pass), "{}", m.csv);
    }
}
