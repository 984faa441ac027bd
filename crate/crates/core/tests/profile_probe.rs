use fewsub_core::affine_consistency::{
    affine_consistency_pass, build_test_instance, enumerate_test_pairs, AffineCaps,
};
use fewsub_core::consistency::{
    apply_store, binarize, enforce_23_consistency, run_slac, Trace,
};
use fewsub_core::solver::{generate_benchmark, BenchmarkKind};
use std::sync::Arc;
use std::time::Instant;

#[test]
fn probe_phases() {
    let bench =
        generate_benchmark(BenchmarkKind::LinearModP { p: 3, vars: 8, eqs: 6 }, 29).unwrap();
    let m = fewsub_core::algebra::OperationTable::from_fn("m", 3, 3, |a| {
        (a[0] + 3 - a[1] + a[2]) % 3
    })
    .unwrap();
    let alg = Arc::new(fewsub_core::algebra::FiniteAlgebra::new("m3", 3, vec![m]).unwrap());
    let mut trace = Trace::off();

    let t = Instant::now();
    let b = binarize(&bench.template, &bench.instance, &alg, 2).unwrap();
    println!("binarize: {:?} ({} vars over {})", t.elapsed(), b.num_vars(), b.universe_size());

    let t = Instant::now();
    let b = enforce_23_consistency(&b, &mut trace).consistent().unwrap();
    println!("enforce_23: {:?}", t.elapsed());

    let t = Instant::now();
    let store = run_slac(&b, &mut trace).consistent().unwrap();
    let b = apply_store(&b, &store);
    println!("slac: {:?}", t.elapsed());

    let t = Instant::now();
    let b = enforce_23_consistency(&b, &mut trace).consistent().unwrap();
    println!("re-enforce_23: {:?}", t.elapsed());

    let caps = AffineCaps::default();
    let t = Instant::now();
    let pairs = enumerate_test_pairs(&b, &caps).unwrap();
    println!("enumerate_test_pairs: {:?} ({} pairs)", t.elapsed(), pairs.len());

    let t = Instant::now();
    let ti = build_test_instance(&b, &pairs[0], &caps).unwrap();
    println!(
        "build one test instance: {:?} (relevant {}, rows {})",
        t.elapsed(),
        ti.relevant.len(),
        ti.system.rows.len()
    );

    let t = Instant::now();
    let out = affine_consistency_pass(&b, &caps, &mut trace).unwrap();
    println!(
        "affine pass: {:?} (pruned {}, passive {})",
        t.elapsed(),
        out.blocks_pruned(),
        out.live_passive()
    );

    let t = Instant::now();
    let closed = b.is_closed_under_operations();
    println!("closure recheck: {:?} ({closed})", t.elapsed());
}
