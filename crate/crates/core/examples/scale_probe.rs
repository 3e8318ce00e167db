//! Rough throughput probe at acceptance-suite scale. Not shipped behavior;
//! run with `cargo run --example scale_probe --release`.

use crossmap_core::gen::{random_network, NetSpec};
use crossmap_core::inventory::{default_caps, expand_inventory, multimacro_kinds, CrossbarKind};
use crossmap_core::mcc::iterate_spikehard;
use crossmap_core::optimize::{optimize_area, optimize_area_seeded, optimize_snu};
use crossmap_core::solver::SolveLimits;

fn main() {
    let budget = 1_200_000u64;
    for (nodes, seed) in [(120usize, 1u64), (200, 2), (250, 3)] {
        let edges = ((nodes * nodes) as f64 * 0.01).round() as usize;
        let net = random_network(&NetSpec { nodes, edges, max_fan_in: 15, seed }).unwrap();
        let kinds = multimacro_kinds(32).unwrap();
        let caps = default_caps(&kinds, nodes);
        let inv = expand_inventory(&kinds, &caps).unwrap();
        println!("--- nodes={nodes} edges={edges} instances={}", inv.len());

        let t0 = std::time::Instant::now();
        let base = iterate_spikehard(&net, &inv, &SolveLimits::work(budget)).unwrap();
        println!(
            "baseline: area={} rounds={} work={} in {:?}",
            base.solution.metrics.area, base.rounds, base.work_units, t0.elapsed()
        );

        let t0 = std::time::Instant::now();
        let cold = optimize_area(&net, &inv, &SolveLimits::work(budget)).unwrap();
        println!(
            "area cold: area={} status={:?} work={} incumbents={} in {:?}",
            cold.solution.metrics.area, cold.status, cold.work_units,
            cold.trace.rows.len(), t0.elapsed()
        );

        let t0 = std::time::Instant::now();
        let seeded = optimize_area_seeded(&net, &inv, Some(&base.solution), &SolveLimits::work(budget)).unwrap();
        println!(
            "area seeded: area={} work={} in {:?}",
            seeded.solution.metrics.area, seeded.work_units, t0.elapsed()
        );

        let t0 = std::time::Instant::now();
        let snu = optimize_snu(&net, &inv, &seeded.solution, &SolveLimits::work(budget)).unwrap();
        println!(
            "snu: global={} (from {}) area {} -> {} in {:?}",
            snu.solution.metrics.global_routes, seeded.solution.metrics.global_routes,
            seeded.solution.metrics.area, snu.solution.metrics.area, t0.elapsed()
        );

        // Homogeneous 16x16 for the nested-inventory comparison.
        let hom_kinds = vec![CrossbarKind::new(16, 16)];
        let hom_caps = default_caps(&hom_kinds, nodes);
        let hom = expand_inventory(&hom_kinds, &hom_caps).unwrap();
        let t0 = std::time::Instant::now();
        match optimize_area(&net, &hom, &SolveLimits::work(budget)) {
            Ok(outcome) => println!(
                "hom 16x16: area={} work={} in {:?}",
                outcome.solution.metrics.area, outcome.work_units, t0.elapsed()
            ),
            Err(e) => println!("hom 16x16: {e}"),
        }
    }
}
