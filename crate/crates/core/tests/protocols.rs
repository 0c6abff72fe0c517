mod common;

use common::{apsp_edge_stretch, is_maximal_independent, triples};
use lightspan::graph::k_hop_neighborhood;
use lightspan::harness::{replay, run_protocol, save_instance, write_spanner_outputs, InstanceMeta};
use lightspan::verify::run_report;
use lightspan::{build_ubg, generate_uniform_square, packing_bound, ProtocolKind};

const KINDS: [(ProtocolKind, f64); 3] =
    [(ProtocolKind::Local, 0.5), (ProtocolKind::Congest, 0.5), (ProtocolKind::Euclid, 1.5)];

#[test]
fn runs_are_deterministic_per_seed() {
    let g = build_ubg(&generate_uniform_square(80, 4.0, 11).unwrap(), 1.0).unwrap();
    for (kind, param) in KINDS {
        let a = run_protocol(&g, kind, param, 5).unwrap();
        let b = run_protocol(&g, kind, param, 5).unwrap();
        assert_eq!(a.spanner, b.spanner, "{kind:?}");
        assert_eq!(a.mis, b.mis);
        assert_eq!(a.trace, b.trace);
    }
}

#[test]
fn runs_satisfy_their_contracts() {
    for seed in 0..5 {
        let g = build_ubg(&generate_uniform_square(60, 4.0, seed).unwrap(), 1.0).unwrap();
        for (kind, param) in KINDS {
            let run = run_protocol(&g, kind, param, seed).unwrap();
            let bound = if kind == ProtocolKind::Euclid { param } else { 1.0 + param };
            assert!(apsp_edge_stretch(&g, &triples(&run.spanner.edges)) <= bound + 1e-9);
            assert!(is_maximal_independent(&g, &run.mis.members));
            let report = run_report(&g, &run).unwrap();
            assert!(report.covering_ok && report.replacement_bound_ok, "{kind:?} seed {seed}");
        }
    }
}

#[test]
fn every_node_sees_few_centers() {
    let g = build_ubg(&generate_uniform_square(150, 5.0, 2).unwrap(), 1.0).unwrap();
    let run = run_protocol(&g, ProtocolKind::Local, 0.5, 2).unwrap();
    let limit = packing_bound(2.0, 1.0, 2).unwrap() as usize;
    let mut seen = vec![0usize; g.len()];
    for &w in &run.mis.members {
        for v in k_hop_neighborhood(&g, w, 2) {
            seen[v] += 1;
        }
    }
    assert!(seen.iter().all(|&k| (1..=limit).contains(&k)));
}

#[test]
fn saved_instances_replay_to_the_same_spanner() {
    let dir = tempfile::tempdir().unwrap();
    let ps = generate_uniform_square(50, 3.5, 9).unwrap();
    let g = build_ubg(&ps, 1.0).unwrap();
    for (kind, param) in KINDS {
        let run = run_protocol(&g, kind, param, 9).unwrap();
        let path = dir.path().join(format!("{}.txt", kind.name()));
        let meta = InstanceMeta { protocol: kind.name().into(), param, seed: 9 };
        save_instance(&path, &meta, &ps, None).unwrap();
        let again = replay(&path).unwrap();
        assert_eq!(again.meta, meta);
        assert_eq!(again.spanner.edges, run.spanner.edges);
        assert_eq!(again.report, run_report(&g, &run).unwrap());
    }
}

#[test]
fn output_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let g = build_ubg(&generate_uniform_square(30, 3.0, 1).unwrap(), 1.0).unwrap();
    let run = run_protocol(&g, ProtocolKind::Congest, 0.5, 1).unwrap();
    let written = write_spanner_outputs(dir.path(), "c", &run.spanner, Some(&run)).unwrap();
    let names: Vec<_> = written.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
    assert_eq!(names, ["c.edges.csv", "c.meta.jsonl", "c.trace.csv", "c.summary.json"]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["protocol"], "congest");
    assert_eq!(summary["n"], 30);
    assert!(summary["max_words"].as_u64().unwrap() <= 8);
    assert!(summary["active_rounds"].as_u64().unwrap() <= summary["rounds"].as_u64().unwrap());
}
