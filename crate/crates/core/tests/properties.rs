use proptest::prelude::*;

use rcw_cim::cim_macro::{
    compute_tile, pipeline_cycles, IntMatrix, MacroConfig, PipelineMode, PrecisionMode,
};
use rcw_cim::cost_model::{
    cim_weight_updates, dram_access, loopnest_oracle, loopnest_output_writes, AccessCounts,
    Dataflow, MatmulDims, TileDims,
};
use rcw_cim::fp16::{self, f16};
use rcw_cim::nonlinear::{
    exact_rmsnorm, group_rmsnorm, group_softmax, Exactness, GroupSpec, LutTable, RmsSync,
};
use rcw_cim::scheduler::{end_to_end, schedule_baseline, schedule_ws_ocs, Features, SystemConfig};
use rcw_cim::workload::{build_llama2_7b, decode_workload, prefill_workload, ModelConfig};

fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|&d| n.is_multiple_of(d)).collect()
}

/// Problem dims with one divisor picked per axis.
fn dims_and_tiles(max: u64) -> impl Strategy<Value = (MatmulDims, TileDims)> {
    (1..=max, 1..=max, 1..=max).prop_flat_map(|(m, n, k)| {
        (
            Just(MatmulDims { m, n, k }),
            proptest::sample::select(divisors(m)),
            proptest::sample::select(divisors(n)),
            proptest::sample::select(divisors(k)),
        )
            .prop_map(|(d, tm, tn, tk)| (d, TileDims::new(tm, tn, tk)))
    })
}

fn dataflow() -> impl Strategy<Value = Dataflow> {
    proptest::sample::select(Dataflow::ALL.to_vec())
}

/// Small transformer shapes that tile cleanly by the default 128-wide tiles.
fn small_model() -> impl Strategy<Value = ModelConfig> {
    (1u64..=4, 1u64..=4, 0u32..3, 1u64..=3, 1u64..=8).prop_map(|(layers, h, hd, ffn, vocab)| {
        let hidden = 128 * h;
        let head_dim = 32u64 << hd;
        ModelConfig {
            num_layers: layers,
            hidden,
            num_heads: hidden / head_dim,
            head_dim,
            ffn_dim: 128 * ffn,
            vocab: 128 * vocab,
            weight_bits: 4,
            act_bits: 8,
        }
    })
}

fn row(max_len: usize, scale: f32) -> impl Strategy<Value = Vec<f16>> {
    proptest::collection::vec(-scale..scale, 1..max_len)
        .prop_map(|v| v.into_iter().map(fp16::from_f32).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn closed_forms_match_loop_nest((dims, tiles) in dims_and_tiles(24), df in dataflow(), first in any::<bool>()) {
        let c = dram_access(dims, tiles, df, first).unwrap();
        prop_assert_eq!(c, loopnest_oracle(dims, tiles, df, first).unwrap());
        prop_assert_eq!(c.cim_update_elems, cim_weight_updates(dims, tiles, df).unwrap());
    }

    #[test]
    fn ws_weight_traffic_is_nk((dims, tiles) in dims_and_tiles(64)) {
        let nk = dims.n * dims.k;
        prop_assert_eq!(dram_access(dims, tiles, Dataflow::Ws, true).unwrap().weight_elems, nk);
        prop_assert_eq!(dram_access(dims, tiles, Dataflow::WsOcs, true).unwrap().weight_elems, nk);
    }

    #[test]
    fn single_tile_degenerates(m in 1u64..200, n in 1u64..200, k in 1u64..200, df in dataflow()) {
        let dims = MatmulDims { m, n, k };
        let c = dram_access(dims, TileDims::whole(dims), df, true).unwrap();
        prop_assert_eq!(c.weight_elems, n * k);
        prop_assert_eq!(c.output_elems, m * k);
        prop_assert_eq!(c.cim_update_elems, n * k);
    }

    #[test]
    fn larger_m_never_costs_more((dims, tiles) in dims_and_tiles(96)) {
        let bigger: Vec<u64> = divisors(dims.m).into_iter().filter(|&d| d > tiles.m).collect();
        for m2 in bigger {
            let t2 = TileDims::new(m2, tiles.n, tiles.k);
            for df in [Dataflow::Is, Dataflow::IsOs, Dataflow::WsOs] {
                prop_assert!(
                    cim_weight_updates(dims, t2, df).unwrap() <= cim_weight_updates(dims, tiles, df).unwrap()
                );
            }
            let a = dram_access(dims, tiles, Dataflow::WsOcs, true).unwrap();
            let b = dram_access(dims, t2, Dataflow::WsOcs, true).unwrap();
            prop_assert!(b.input_elems <= a.input_elems);
        }
    }

    #[test]
    fn output_stationary_writes_once(
        (dims, tiles) in dims_and_tiles(24),
        df in proptest::sample::select(vec![Dataflow::IsOs, Dataflow::WsOs, Dataflow::WsOcs]),
    ) {
        let writes = loopnest_output_writes(dims, tiles, df).unwrap();
        prop_assert!(writes.iter().all(|&w| w == 1));
    }

    #[test]
    fn non_divisible_tiles_rejected(m in 2u64..100, df in dataflow()) {
        let dims = MatmulDims { m, n: 8, k: 8 };
        let bad = (2..=m).find(|t| m % t != 0);
        if let Some(t) = bad {
            prop_assert!(dram_access(dims, TileDims::new(t, 8, 8), df, true).is_err());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn macro_matches_naive_product(
        seed in any::<u64>(),
        rows in 1usize..12,
        inner in 1usize..40,
        cols in 1usize..40,
        int4 in any::<bool>(),
        rcw in any::<bool>(),
        update in any::<bool>(),
    ) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (prec, bits) = if int4 { (PrecisionMode::DualInt4, 4) } else { (PrecisionMode::Int8, 8) };
        let mode = if rcw { PipelineMode::Rcw } else { PipelineMode::Serialized };
        let a = IntMatrix::random(&mut rng, rows, inner, 8);
        let w = IntMatrix::random(&mut rng, inner, cols, bits);
        let next = IntMatrix::random(&mut rng, inner, cols, bits);
        let cfg = MacroConfig::default();
        let (out, trace) = compute_tile(&cfg, mode, prec, &a, &w, update.then_some(&next)).unwrap();
        let expect = IntMatrix::from_fn(rows, cols, |i, j| (0..inner).map(|k| a.get(i, k) * w.get(k, j)).sum());
        prop_assert_eq!(out, expect);
        prop_assert!(trace.update_cycles_hidden <= trace.compute_cycles);
        for bank in 0..cfg.banks {
            prop_assert_eq!(trace.bank_busy(bank), trace.total_cycles);
        }
    }

    #[test]
    fn rcw_never_slower(
        steps in 0u64..64,
        rows in 1u64..256,
        mac in 1u64..4,
        write in 1u64..8,
        read_frac in 0.0f64..=1.0,
    ) {
        // a valid macro latches a row no slower than it computes or writes one
        let read = (read_frac * mac.min(write) as f64).floor() as u64;
        let compute = steps * mac * rows;
        let update = steps * write;
        let s = pipeline_cycles(PipelineMode::Serialized, compute, update, read);
        let r = pipeline_cycles(PipelineMode::Rcw, compute, update, read);
        prop_assert!(r.total <= s.total);
        if update == 0 {
            prop_assert_eq!(r.total, s.total);
        }
        if compute.min(update) > read {
            prop_assert!(r.total < s.total);
        }
        prop_assert!(r.hidden <= r.compute);
        prop_assert_eq!(r.hidden + r.exposed, r.update);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn softmax_groups_sum_to_one(x in row(300, 12.0), g in 1usize..64) {
        let groups = GroupSpec::new(g, 1e-5).unwrap();
        let y = group_softmax(&x, groups, &LutTable::default(), Exactness::Lut).unwrap();
        for grp in y.chunks(g) {
            let s: f64 = grp.iter().map(|v| v.to_f64()).sum();
            prop_assert!(fp16::ulps_between(s, 1.0) <= 4.0, "sum {}", s);
        }
    }

    #[test]
    fn softmax_never_overflows(x in proptest::collection::vec(-65504f32..65504f32, 1..100)) {
        let x: Vec<f16> = x.into_iter().map(fp16::from_f32).collect();
        let y = group_softmax(&x, GroupSpec::default(), &LutTable::default(), Exactness::Lut).unwrap();
        prop_assert!(y.iter().all(|v| v.is_finite() && v.to_f64() >= 0.0 && v.to_f64() <= 1.0));
    }

    #[test]
    fn softmax_shift_invariant(q in proptest::collection::vec(-64i32..64, 1..64), shift in -64i32..64) {
        // multiples of 1/8 below 128 are exact in binary16, so the shift is exact too
        let x: Vec<f16> = q.iter().map(|&v| fp16::from_f32(v as f32 / 8.0)).collect();
        let xs: Vec<f16> = q.iter().map(|&v| fp16::from_f32((v + 8 * shift) as f32 / 8.0)).collect();
        let lut = LutTable::default();
        let g = GroupSpec::default();
        prop_assert_eq!(
            group_softmax(&x, g, &lut, Exactness::Lut).unwrap(),
            group_softmax(&xs, g, &lut, Exactness::Lut).unwrap()
        );
    }

    #[test]
    fn global_sync_rmsnorm_matches_direct(x in row(600, 8.0), seed in any::<u64>(), g in 1usize..64) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let gamma: Vec<f16> = (0..x.len()).map(|_| fp16::from_f32(rng.gen_range(-2.0..2.0))).collect();
        let groups = GroupSpec::new(g, 1e-5).unwrap();
        let y = group_rmsnorm(&x, &gamma, groups, RmsSync::GlobalSync).unwrap();
        let xf: Vec<f64> = x.iter().map(|v| v.to_f64()).collect();
        let gf: Vec<f64> = gamma.iter().map(|v| v.to_f64()).collect();
        for (o, e) in y.iter().zip(exact_rmsnorm(&xf, &gf, 1e-5)) {
            prop_assert!(fp16::ulp_distance(*o, fp16::from_f64(e)) <= 3, "{} vs {}", o, e);
        }
    }

    #[test]
    fn lut_is_monotone(a in -9.0f32..0.5, b in -9.0f32..0.5) {
        let lut = LutTable::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(lut.eval(fp16::from_f32(lo)) <= lut.eval(fp16::from_f32(hi)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schedule_counts_equal_summed_closed_forms(model in small_model(), seq in 1u64..=4, decode in any::<bool>()) {
        let sys = SystemConfig::default();
        let w = if decode {
            decode_workload(&model, 128 * seq).unwrap()
        } else {
            prefill_workload(&model, 128 * seq).unwrap()
        };
        let s = schedule_ws_ocs(&w, &sys).unwrap();
        let expect: AccessCounts = w
            .gemms
            .iter()
            .filter(|g| g.weight_bearing())
            .map(|g| {
                let c = dram_access(g.dims, sys.tiles.clamped_to(g.dims), Dataflow::WsOcs, true).unwrap();
                let n = w.instances(g);
                AccessCounts {
                    input_elems: c.input_elems * n,
                    weight_elems: c.weight_elems * n,
                    output_elems: c.output_elems * n,
                    cim_update_elems: c.cim_update_elems * n,
                }
            })
            .sum();
        prop_assert_eq!(s.counts, expect);
        let b = schedule_baseline(&w, &sys, Dataflow::WsOs, PipelineMode::Serialized).unwrap();
        prop_assert_eq!(b.counts.weight_elems, s.counts.weight_elems);
    }

    #[test]
    fn features_never_slow_things_down(
        model in small_model(),
        seq in 1u64..=8,
        decode in any::<bool>(),
        eff in 0.5f64..=1.0,
        base in proptest::sample::select(vec![Dataflow::Ws, Dataflow::WsOs, Dataflow::IsOs]),
    ) {
        let mut sys = SystemConfig { baseline_dataflow: base, ..SystemConfig::default() };
        sys.dram.efficiency = eff;
        let w = if decode {
            decode_workload(&model, 128 * seq).unwrap()
        } else {
            prefill_workload(&model, 128 * seq).unwrap()
        };
        for bits in 0u8..8 {
            let f = Features { ws_ocs: bits & 1 != 0, rcw: bits & 2 != 0, fusion: bits & 4 != 0 };
            let t = end_to_end(&w, &sys, f).unwrap().wall_clock_seconds;
            for flip in [1u8, 2, 4] {
                if bits & flip != 0 {
                    continue;
                }
                let on = bits | flip;
                let g = Features { ws_ocs: on & 1 != 0, rcw: on & 2 != 0, fusion: on & 4 != 0 };
                let t2 = end_to_end(&w, &sys, g).unwrap().wall_clock_seconds;
                prop_assert!(t2 <= t * (1.0 + 1e-12), "{:?} {} -> {:?} {}", f, t, g, t2);
            }
        }
    }

    #[test]
    fn emitted_schedules_fit_buffers(
        tm in proptest::sample::select(vec![16u64, 32, 64, 128, 256, 512]),
        tn in proptest::sample::select(vec![16u64, 32, 64, 128, 256, 512]),
        tk in proptest::sample::select(vec![16u64, 32, 64, 128, 256, 512]),
        decode in any::<bool>(),
    ) {
        let model = build_llama2_7b();
        let sys = SystemConfig { tiles: TileDims::new(tm, tn, tk), ..SystemConfig::default() };
        let w = if decode { decode_workload(&model, 1024).unwrap() } else { prefill_workload(&model, 1024).unwrap() };
        if end_to_end(&w, &sys, Features::ALL).is_ok() {
            for g in w.gemms.iter().filter(|g| g.weight_bearing()) {
                prop_assert!(sys.cluster.check_tiles(sys.tiles.clamped_to(g.dims), model.act_bits).is_ok());
            }
        }
    }

    #[test]
    fn decode_shares_prefill_shapes(seq in 1u64..=2048, kv in 1u64..=2048) {
        let model = build_llama2_7b();
        let p = prefill_workload(&model, seq).unwrap();
        let d = decode_workload(&model, kv).unwrap();
        for (a, b) in p.gemms.iter().zip(&d.gemms) {
            prop_assert_eq!(b.dims.m, 1);
            prop_assert_eq!(a.kind, b.kind);
            if a.weight_bearing() {
                prop_assert_eq!((a.dims.n, a.dims.k), (b.dims.n, b.dims.k));
            }
        }
    }
}

#[test]
fn weight_elems_match_parameter_count() {
    let model = build_llama2_7b();
    let w = prefill_workload(&model, 1).unwrap();
    // published parameter count of the 7B checkpoint
    let total: u64 = 6_738_415_616;
    let embedding = model.vocab * model.hidden;
    let norms = (2 * model.num_layers + 1) * model.hidden;
    assert_eq!(w.weight_elems() + embedding + norms, total);
    assert!((norms as f64) / (total as f64) < 0.01);
}
