use cg_attention::attention::{Block, BlockConfig, GatingMode};
use cg_attention::conv::{conv_direct, conv_fft, Boundary, ConvConfig};
use cg_attention::oracles::{random_rotation, reference_contract};
use cg_attention::so3::{cg_real, wigner_d};
use cg_attention::spectral::{build_spectrum, permutation_check, random_permutation, random_weighted_graph};
use cg_attention::tensor_product::{contract_dense, contract_sparse, plan, ChannelMode};
use cg_attention::{make_signature, EquivariantFeature, IrrepsSignature};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn degrees(max: u32) -> Vec<u32> {
    (0..=max).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn real_tables_commute_with_rotations(j in 0u32..5, l1 in 0u32..5, l2 in 0u32..5, seed in any::<u64>()) {
        prop_assume!(l1.abs_diff(l2) <= j && j <= l1 + l2);
        let sig = IrrepsSignature::uniform(4, 1, 1).unwrap();
        let d = wigner_d(&sig, &random_rotation(seed)).unwrap();
        let table = cg_real(j, l1, l2).unwrap();
        let mut r = rng(seed ^ 1);
        let x: Vec<f64> = (0..2 * l1 + 1).map(|_| rand::Rng::gen_range(&mut r, -1.0..1.0)).collect();
        let y: Vec<f64> = (0..2 * l2 + 1).map(|_| rand::Rng::gen_range(&mut r, -1.0..1.0)).collect();
        let (mut rx, mut ry) = (x.clone(), y.clone());
        d.rotate_block(l1, &mut rx);
        d.rotate_block(l2, &mut ry);
        let lhs = reference_contract(&table, &rx, &ry);
        let mut rhs = reference_contract(&table, &x, &y);
        d.rotate_block(j, &mut rhs);
        let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt() * y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9 * scale.max(1e-300), "err {err}");
    }

    #[test]
    fn contraction_is_bilinear(max_l in 0u32..4, mult in 1usize..3, heads in 1usize..3, alpha in -3.0f64..3.0, seed in any::<u64>()) {
        let sig = IrrepsSignature::uniform(max_l, mult, heads).unwrap();
        let p = plan(&sig, &sig, &degrees(max_l), ChannelMode::Full).unwrap();
        let mut r = rng(seed);
        let a = EquivariantFeature::random(&sig, 3, &mut r);
        let a2 = EquivariantFeature::random(&sig, 3, &mut r);
        let b = EquivariantFeature::random(&sig, 3, &mut r);
        let mut combo = a.clone();
        combo.scale(alpha);
        combo.axpy(1.0, &a2);
        let lhs = contract_sparse(&p, &combo, &b).unwrap();
        let mut rhs = contract_sparse(&p, &a, &b).unwrap();
        rhs.scale(alpha);
        rhs.axpy(1.0, &contract_sparse(&p, &a2, &b).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-11);
    }

    #[test]
    fn sparse_matches_dense(max_l in 0u32..5, seed in any::<u64>(), elementwise in any::<bool>()) {
        let mode = if elementwise { ChannelMode::Elementwise } else { ChannelMode::Full };
        let sig = IrrepsSignature::uniform(max_l, 2, 2).unwrap();
        let p = plan(&sig, &sig, &degrees(max_l), mode).unwrap();
        let mut r = rng(seed);
        let a = EquivariantFeature::random(&sig, 2, &mut r);
        let b = EquivariantFeature::random(&sig, 2, &mut r);
        let s = contract_sparse(&p, &a, &b).unwrap();
        let d = contract_dense(&p, &a, &b).unwrap();
        prop_assert!(s.max_abs_diff(&d) < 1e-12);
    }

    #[test]
    fn fft_matches_direct(n in 1usize..40, max_l in 0u32..3, linear in any::<bool>(), seed in any::<u64>()) {
        let sig = IrrepsSignature::uniform(max_l, 1, 1).unwrap();
        let boundary = if linear { Boundary::Linear } else { Boundary::Circular };
        let cfg = ConvConfig::new(plan(&sig, &sig, &degrees(max_l), ChannelMode::Full).unwrap(), boundary);
        let mut r = rng(seed);
        let q = EquivariantFeature::random(&sig, n, &mut r);
        let k = EquivariantFeature::random(&sig, n, &mut r);
        let fast = conv_fft(&cfg, &q, &k).unwrap();
        let slow = conv_direct(&cfg, &q, &k).unwrap();
        prop_assert!(fast.rel_err(&slow) < 1e-10);
    }
}

#[test]
fn heads_never_interact() {
    let sig = make_signature(&[(0, 1), (1, 2), (2, 1)], 3).unwrap();
    let p = plan(&sig, &sig, &[0, 1, 2], ChannelMode::Full).unwrap();
    let mut r = rng(11);
    let a = EquivariantFeature::random(&sig, 4, &mut r);
    let b = EquivariantFeature::random(&sig, 4, &mut r);
    let base = contract_sparse(&p, &a, &b).unwrap();

    let mut perturbed = a.clone();
    for t in 0..4 {
        perturbed.head_mut(t, 1).iter_mut().for_each(|x| *x += 1.0);
    }
    let out = contract_sparse(&p, &perturbed, &b).unwrap();
    for t in 0..4 {
        assert_eq!(out.head(t, 0), base.head(t, 0));
        assert_eq!(out.head(t, 2), base.head(t, 2));
        assert_ne!(out.head(t, 1), base.head(t, 1));
    }
}

#[test]
fn attention_heads_never_interact() {
    let sig = IrrepsSignature::uniform(2, 1, 2).unwrap();
    let block = Block::new(BlockConfig::new(sig.clone(), 2).with_seed(3)).unwrap();
    let mut r = rng(5);
    let f = EquivariantFeature::random(&sig, 6, &mut r);
    let base = block.attend(&f).unwrap();
    let mut g = f.clone();
    g.head_mut(2, 1)[0] += 0.5;
    let out = block.attend(&g).unwrap();
    for t in 0..6 {
        assert_eq!(out.head(t, 0), base.head(t, 0));
    }
}

#[test]
fn block_rotation_equivariance_both_gatings() {
    let sig = make_signature(&[(0, 2), (1, 2), (2, 2)], 2).unwrap();
    for gating in [GatingMode::Cg, GatingMode::Concat] {
        let block = Block::new(BlockConfig::new(sig.clone(), 2).with_gating(gating).with_seed(9)).unwrap();
        let mut r = rng(21);
        let f = EquivariantFeature::random(&sig, 10, &mut r);
        for seed in 0..5 {
            let d = wigner_d(&sig, &random_rotation(seed)).unwrap();
            let lhs = block.attend(&d.apply(&f).unwrap()).unwrap();
            let rhs = d.apply(&block.attend(&f).unwrap()).unwrap();
            assert!(
                lhs.rel_err(&rhs) < 1e-9,
                "{gating:?} seed {seed}: {}",
                lhs.rel_err(&rhs)
            );
        }
    }
}

#[test]
fn spectral_permutation_equivariance() {
    let sig = IrrepsSignature::uniform(1, 1, 1).unwrap();
    let p = plan(&sig, &sig, &[0, 1], ChannelMode::Full).unwrap();
    for seed in 0..5 {
        let n = 6 + seed as usize;
        let adj = random_weighted_graph(n, seed);
        let spec = build_spectrum(n, &adj).unwrap();
        assert!(spec.orthogonality_error() < 1e-10);
        let mut r = rng(seed);
        let q = EquivariantFeature::random(&sig, n, &mut r);
        let k = EquivariantFeature::random(&sig, n, &mut r);
        let report = permutation_check(&spec, &p, &q, &k, &random_permutation(n, seed + 100)).unwrap();
        assert!(report.pass, "seed {seed}: {report:?}");
    }
}

#[test]
fn cgf1_round_trip() {
    let sig = make_signature(&[(0, 2), (2, 1), (3, 1)], 2).unwrap();
    let f = EquivariantFeature::random(&sig, 5, &mut rng(2));
    let mut buf = Vec::new();
    f.write_cgf1(&mut buf).unwrap();
    let g = EquivariantFeature::read_cgf1(buf.as_slice()).unwrap();
    assert_eq!(g.signature(), f.signature());
    assert_eq!(g.data(), f.data());
    assert!(EquivariantFeature::read_cgf1(&b"CGF2 1 1 0:1\n0\n"[..]).is_err());
}

#[test]
fn cgb1_round_trip() {
    let sig = IrrepsSignature::uniform(2, 2, 1).unwrap();
    let block = Block::new(
        BlockConfig::new(sig.clone(), 2)
            .with_mode(ChannelMode::Elementwise)
            .with_seed(4),
    )
    .unwrap();
    let mut buf = Vec::new();
    block.write_params(&mut buf).unwrap();
    let loaded = Block::read_params(buf.as_slice()).unwrap();
    assert_eq!(loaded.params().to_vec(), block.params().to_vec());
    let f = EquivariantFeature::random(&sig, 7, &mut rng(8));
    assert_eq!(loaded.attend(&f).unwrap().data(), block.attend(&f).unwrap().data());
    buf[0] = b'X';
    assert!(Block::read_params(buf.as_slice()).is_err());
}
