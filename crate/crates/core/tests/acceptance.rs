//! Acceptance suite. Prints one PASS/FAIL line per criterion (plus indented
//! detail lines) and exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use lightspan::graph::{k_hop_neighborhood, mst_weight, segments_properly_cross, shortest_path_distance};
use lightspan::harness::{run_experiment, run_protocol, ExperimentConfig};
use lightspan::netsim::DEFAULT_W_MAX;
use lightspan::spanner::{base_spanner, refine};
use lightspan::verify::{check_stretch, crossing_report, efficiency, replacement_packing_check, Measure};
use lightspan::{
    build_ubg, centralized_euclidean_spanner, distributed_mis, generate_uniform_square, naive_greedy, packing_bound,
    ProtocolKind, ProtocolRun, UnitBallGraph,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEEDS: u64 = 10;
const EPS: [f64; 3] = [0.25, 0.5, 1.0];
const TS: [f64; 3] = [1.1, 1.5, 2.0];
const SCALING_N: [usize; 3] = [100, 200, 400];

struct Cell {
    protocol: ProtocolKind,
    param: f64,
    n: usize,
    seed: u64,
    g: UnitBallGraph,
    run: ProtocolRun,
    secs: f64,
}

#[derive(Clone, Copy)]
struct Job {
    protocol: ProtocolKind,
    param: f64,
    n: usize,
    side: f64,
    seed: u64,
}

fn sweep(jobs: &[Job]) -> Vec<Cell> {
    jobs
        .par_iter()
        .map(|s| {
            let g = build_ubg(&generate_uniform_square(s.n, s.side, s.seed).unwrap(), 1.0).unwrap();
            let start = Instant::now();
            let run = run_protocol(&g, s.protocol, s.param, s.seed).unwrap();
            Cell {
                protocol: s.protocol,
                param: s.param,
                n: s.n,
                seed: s.seed,
                g,
                run,
                secs: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

/// Side that keeps the density of 100 points in a 5x5 square.
fn constant_density_side(n: usize) -> f64 {
    5.0 * (n as f64 / 100.0).sqrt()
}

fn jobs(protocol: ProtocolKind, params: &[f64], ns: &[usize], side: impl Fn(usize) -> f64) -> Vec<Job> {
    let mut out = Vec::new();
    for &n in ns {
        for &param in params {
            for seed in 0..SEEDS {
                out.push(Job { protocol, param, n, side: side(n), seed });
            }
        }
    }
    out
}

fn select(cells: &[Cell], protocol: ProtocolKind, param: f64, n: usize) -> impl Iterator<Item = &Cell> {
    cells.iter().filter(move |c| c.protocol == protocol && c.param == param && c.n == n)
}

fn lightness_oracle(c: &Cell) -> f64 {
    c.run.spanner.weight() / prim(c.g.points(), 1.0)
}

type Outcome = Result<Vec<String>, Vec<String>>;

fn verdict(ok: bool, lines: Vec<String>) -> Outcome {
    if ok {
        Ok(lines)
    } else {
        Err(lines)
    }
}

fn stretch(matrix: &[Cell]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (protocol, params) in [(ProtocolKind::Local, EPS), (ProtocolKind::Congest, EPS), (ProtocolKind::Euclid, TS)] {
        for p in params {
            let bound = if protocol == ProtocolKind::Euclid { p } else { 1.0 + p };
            let (mut worst, mut slowest, mut failures) = (1.0f64, 0.0f64, 0);
            for c in select(matrix, protocol, p, 100) {
                let check = check_stretch(&c.g, &c.run.spanner, bound);
                worst = worst.max(check.max_ratio);
                slowest = slowest.max(c.secs);
                failures += (!check.pass || c.secs >= 10.0) as usize;
            }
            ok &= failures == 0;
            lines.push(format!(
                "{} param={p}: worst stretch {worst:.6} <= {bound}, slowest {slowest:.2}s, {failures} failing seeds",
                protocol.name()
            ));
        }
    }
    verdict(ok, lines)
}

fn subgraph(all: &[&Cell]) -> Outcome {
    let mut bad = 0;
    let mut edges = 0;
    for c in all {
        for e in c.run.spanner.edges.edges() {
            edges += 1;
            bad += (e.w > 1.0 || e.w.is_nan() || dist(c.g.points(), e.u, e.v) > 1.0) as usize;
        }
    }
    verdict(bad == 0, vec![format!("{} runs, {edges} edges, {bad} longer than 1", all.len())])
}

fn refinement() -> Outcome {
    let eps_prime = 0.5 / 36.0;
    let limit = packing_bound(1.0, eps_prime, 2).unwrap() as usize;
    let (mut used, mut tried, mut bad, mut replaced) = (0, 0u64, 0, 0);
    while used < 100 && tried < 5000 {
        let ps = long_edge_gadget(tried, eps_prime);
        tried += 1;
        let base = base_spanner(&ps, eps_prime).unwrap();
        if !base.edges.edges().iter().any(|e| e.w > 1.0 && e.w <= 1.0 + eps_prime) {
            continue;
        }
        used += 1;
        let g = build_ubg(&ps, 1.0).unwrap();
        let (out, registry) = refine(&base, &g, eps_prime).unwrap();
        replaced += registry.len();
        // Independent packing check: partners of one node pairwise more
        // than eps' apart and at most the packing bound of them.
        let mut packed = true;
        for x in 0..ps.len() {
            let partners: Vec<_> = registry.partners(x).collect();
            packed &= partners.len() <= limit;
            for (i, &a) in partners.iter().enumerate() {
                packed &= partners[i + 1..].iter().all(|&b| dist(&ps, a, b) > eps_prime);
            }
        }
        let long_left = out.edges.edges().iter().any(|e| e.w > 1.0);
        if long_left || !packed || !replacement_packing_check(&registry, &ps, eps_prime, 2) {
            bad += 1;
        }
    }
    verdict(
        used == 100 && bad == 0,
        vec![format!(
            "{used} instances with long base edges (of {tried} generated), {replaced} replacements, {bad} violations"
        )],
    )
}

fn covering(congest: &[&Cell]) -> Outcome {
    let mut bad = 0;
    let mut centers = 0;
    for c in congest {
        let ps = c.g.points();
        let eps = c.param;
        let coarse_max = packing_bound(2.0, 0.25, 2).unwrap() as usize;
        let fine_max = packing_bound(2.0, eps / 40.0, 2).unwrap() as usize;
        let mis = &c.run.mis.members;
        let mut listed: Vec<_> = c.run.centers.iter().map(|k| k.center).collect();
        listed.sort_unstable();
        let mut expected = mis.clone();
        expected.sort_unstable();
        bad += (listed != expected) as usize;
        for k in &c.run.centers {
            centers += 1;
            let ball = k_hop_neighborhood(&c.g, k.center, 2);
            let covered = |cover: &[usize], r: f64| ball.iter().all(|&t| cover.iter().any(|&m| dist(ps, m, t) <= r));
            let ok = covered(&k.cover, 0.5)
                && covered(&k.fine_cover, eps / 20.0)
                && k.cover.len() <= coarse_max
                && k.fine_cover.len() <= fine_max;
            bad += !ok as usize;
        }
    }
    verdict(bad == 0, vec![format!("{} CONGEST runs, {centers} centers, {bad} violations", congest.len())])
}

fn rounds(local: &[&Cell], congest: &[&Cell]) -> Outcome {
    let mut lines = Vec::new();
    let off = local.iter().filter(|c| c.run.trace.rounds_elapsed != c.run.mis.rounds + 3).count();
    lines.push(format!("LOCAL-model runs: {} checked, {off} not equal to MIS + 3", local.len()));
    let mut ok = off == 0;

    for eps in EPS {
        let mut overheads: Vec<(usize, u64)> = congest
            .iter()
            .filter(|c| c.param == eps)
            .map(|c| (c.n, c.run.trace.rounds_elapsed - c.run.mis.rounds))
            .collect();
        overheads.sort_unstable();
        let ns: Vec<usize> = {
            let mut v: Vec<_> = overheads.iter().map(|o| o.0).collect();
            v.dedup();
            v
        };
        let mut distinct: Vec<u64> = overheads.iter().map(|o| o.1).collect();
        distinct.sort_unstable();
        distinct.dedup();
        ok &= distinct.len() == 1;
        lines.push(format!("CONGEST eps={eps} over n={ns:?}: overhead values {distinct:?}"));
    }
    let widest = congest.iter().map(|c| c.run.trace.max_words()).max().unwrap_or(0);
    ok &= widest <= DEFAULT_W_MAX;
    lines.push(format!("widest CONGEST message: {widest} words (limit {DEFAULT_W_MAX})"));
    verdict(ok, lines)
}

struct LightnessGrowth {
    maxima: Vec<f64>,
    worst_ratio: f64,
}

fn lightness_growth_of(scaling: &[Cell], protocol: ProtocolKind) -> LightnessGrowth {
    let mut maxima = Vec::new();
    let mut worst_ratio = 0.0f64;
    for n in SCALING_N {
        let mut max = 0.0f64;
        for c in select(scaling, protocol, 0.5, n) {
            let light = lightness_oracle(c);
            let base = centralized_euclidean_spanner(&c.g, 1.5).unwrap();
            let base_light = base.weight() / prim(c.g.points(), 1.0);
            worst_ratio = worst_ratio.max(light / base_light);
            max = max.max(light);
        }
        maxima.push(max);
    }
    LightnessGrowth { maxima, worst_ratio }
}

fn describe(protocol: ProtocolKind, l: &LightnessGrowth) -> String {
    format!(
        "{} eps=0.5 max lightness n=100/200/400: {:.3}/{:.3}/{:.3} (limit {:.3}); worst ratio to greedy(1.5) {:.3} (limit 4)",
        protocol.name(),
        l.maxima[0],
        l.maxima[1],
        l.maxima[2],
        1.5 * l.maxima[0],
        l.worst_ratio
    )
}

/// Gated on the LOCAL `distributed_spanner`; the CONGEST numbers are
/// reported alongside.
fn lightness_growth(scaling: &[Cell]) -> Outcome {
    let local = lightness_growth_of(scaling, ProtocolKind::Local);
    let ok = local.maxima[2] <= 1.5 * local.maxima[0] && local.worst_ratio <= 4.0;
    let congest = lightness_growth_of(scaling, ProtocolKind::Congest);
    let congest_ok = congest.maxima[2] <= 1.5 * congest.maxima[0] && congest.worst_ratio <= 4.0;
    let lines = vec![
        describe(ProtocolKind::Local, &local),
        format!(
            "not gated: {} ({})",
            describe(ProtocolKind::Congest, &congest),
            if congest_ok { "within both limits" } else { "exceeds a limit" }
        ),
    ];
    verdict(ok, lines)
}

fn degree_growth(scaling: &[Cell]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let groups = [
        (ProtocolKind::Local, 0.5),
        (ProtocolKind::Congest, 0.5),
        (ProtocolKind::Euclid, 1.1),
        (ProtocolKind::Euclid, 1.5),
        (ProtocolKind::Euclid, 2.0),
    ];
    for (protocol, param) in groups {
        let maxima: Vec<usize> = SCALING_N
            .iter()
            .map(|&n| select(scaling, protocol, param, n).map(|c| c.run.spanner.max_degree()).max().unwrap())
            .collect();
        ok &= maxima[2] <= maxima[0] + 4;
        lines.push(format!(
            "{} param={param} max degree n=100/200/400: {}/{}/{} (limit {})",
            protocol.name(),
            maxima[0],
            maxima[1],
            maxima[2],
            maxima[0] + 4
        ));
    }
    verdict(ok, lines)
}

fn crossing_stats(cells: &[Cell], t: f64, n: usize) -> (f64, usize) {
    let reports: Vec<_> = select(cells, ProtocolKind::Euclid, t, n)
        .map(|c| crossing_report(c.g.points(), &c.run.spanner).unwrap())
        .collect();
    let avg = reports.iter().map(|r| r.per_node).sum::<f64>() / reports.len() as f64;
    let longer = reports.iter().map(|r| r.max_longer_crossings_per_edge).max().unwrap_or(0);
    (avg, longer)
}

fn crossings(scaling: &[Cell]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for t in TS {
        let stats: Vec<_> = SCALING_N.iter().map(|&n| crossing_stats(scaling, t, n)).collect();
        let per_node_ok = stats[2].0 <= 2.0 * stats[0].0;
        let longer_ok = stats[2].1 <= stats[0].1;
        ok &= per_node_ok && longer_ok;
        lines.push(format!(
            "euclid t={t} crossings/node n=100/200/400: {:.4}/{:.4}/{:.4} (limit {:.4}) {}; max longer crossings: {}/{}/{} (limit {}) {}",
            stats[0].0,
            stats[1].0,
            stats[2].0,
            2.0 * stats[0].0,
            if per_node_ok { "ok" } else { "exceeded" },
            stats[0].1,
            stats[1].1,
            stats[2].1,
            stats[0].1,
            if longer_ok { "ok" } else { "grew" },
        ));
    }
    verdict(ok, lines)
}

fn oracle_equivalence() -> Outcome {
    let mut mismatches = [0usize; 5];
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=30);
        let ps = generate_uniform_square(n, rng.gen_range(1.0..4.0), seed + 1000).unwrap();
        let g = build_ubg(&ps, 1.0).unwrap();

        let t = rng.gen_range(1.05..2.0);
        let greedy: Vec<_> = naive_greedy(&ps, t).unwrap().edges.edges().iter().map(|e| e.key()).collect();
        mismatches[0] += (greedy != quadratic_greedy(&ps, t, f64::INFINITY)) as usize;

        mismatches[1] += ((mst_weight(&g) - prim(&ps, 1.0)).abs() > 1e-9) as usize;

        let edges = g.edge_list();
        let bf = bellman_ford(n, &triples(&edges), 0);
        let sp_bad = (0..n).any(|v| {
            let d = shortest_path_distance(&edges, n, 0, v);
            !(d == bf[v] || (d - bf[v]).abs() <= 1e-9)
        });
        mismatches[2] += sp_bad as usize;

        mismatches[3] += !is_maximal_independent(&g, &distributed_mis(&g, seed).unwrap().members) as usize;

        let quad = generate_uniform_square(4, 1.0, seed + 5000).unwrap();
        let xy = |i: usize| [quad.coords(i)[0], quad.coords(i)[1]];
        let got = segments_properly_cross(quad.point(0), quad.point(1), quad.point(2), quad.point(3));
        mismatches[4] += (got != parametric_cross(xy(0), xy(1), xy(2), xy(3))) as usize;
    }
    let names = ["naive_greedy", "mst_weight", "shortest paths", "MIS validity", "segment crossing"];
    let lines =
        names.iter().zip(mismatches).map(|(name, m)| format!("{name}: {m} mismatches over 100 instances")).collect();
    verdict(mismatches.iter().all(|&m| m == 0), lines)
}

fn efficiency_reproduction() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        n: 100,
        side: 5.0,
        seeds: (0..SEEDS).collect(),
        t_values: TS.to_vec(),
        protocol: ProtocolKind::Euclid,
        out: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let out = run_experiment(&cfg).unwrap();
    let mut lines = Vec::new();
    let mut ok = out.efficiency.len() == TS.len() && out.efficiency_path.exists();
    for row in &out.efficiency {
        ok &= row.seeds == SEEDS as usize && row.efficiency_size >= 0.6 && row.efficiency_weight >= 0.6;
        lines.push(format!(
            "t={}: size {:.3}, weight {:.3}, max degree {:.3} over {} seeds (fence 0.6 on size and weight)",
            row.param, row.efficiency_size, row.efficiency_weight, row.efficiency_max_degree, row.seeds
        ));
    }
    let one_extra = efficiency(Measure::MaxDegree, 5.0, 6.0).unwrap();
    ok &= (one_extra - 5.0 / 6.0).abs() < 1e-12;
    lines.push(format!("greedy max degree 5, one extra edge: degree efficiency {one_extra:.4} = 5/6"));
    verdict(ok, lines)
}

fn fixed_side_info(cells: &[Cell]) -> Vec<String> {
    let mut lines = Vec::new();
    for protocol in [ProtocolKind::Local, ProtocolKind::Congest] {
        for n in SCALING_N {
            let light = select(cells, protocol, 0.5, n).map(lightness_oracle).fold(0.0, f64::max);
            let deg = select(cells, protocol, 0.5, n).map(|c| c.run.spanner.max_degree()).max().unwrap();
            lines.push(format!("{} eps=0.5 n={n}: max lightness {light:.3}, max degree {deg}", protocol.name()));
        }
    }
    for t in TS {
        for n in SCALING_N {
            let (avg, longer) = crossing_stats(cells, t, n);
            lines.push(format!("euclid t={t} n={n}: crossings/node {avg:.4}, max longer crossings {longer}"));
        }
    }
    lines
}

fn main() -> ExitCode {
    let started = Instant::now();

    let mut matrix_jobs = jobs(ProtocolKind::Local, &EPS, &[100], |_| 5.0);
    matrix_jobs.extend(jobs(ProtocolKind::Congest, &EPS, &[100], |_| 5.0));
    matrix_jobs.extend(jobs(ProtocolKind::Euclid, &TS, &[100], |_| 5.0));
    // Timed one at a time so the per-instance runtime is not inflated by
    // parallel neighbors.
    let matrix: Vec<Cell> = matrix_jobs.iter().flat_map(|s| sweep(std::slice::from_ref(s))).collect();

    let mut scaling_jobs = jobs(ProtocolKind::Local, &[0.5], &SCALING_N, constant_density_side);
    scaling_jobs.extend(jobs(ProtocolKind::Congest, &[0.5], &SCALING_N, constant_density_side));
    scaling_jobs.extend(jobs(ProtocolKind::Euclid, &TS, &SCALING_N, constant_density_side));
    let scaling = sweep(&scaling_jobs);

    let mut round_jobs = jobs(ProtocolKind::Congest, &EPS, &[50, 100, 200, 400], |_| 5.0);
    // n=100 is already in the stretch matrix.
    round_jobs.retain(|s| s.n != 100);
    let round_cells = sweep(&round_jobs);

    let mut fixed_jobs = jobs(ProtocolKind::Local, &[0.5], &SCALING_N, |_| 5.0);
    fixed_jobs.extend(jobs(ProtocolKind::Congest, &[0.5], &SCALING_N, |_| 5.0));
    fixed_jobs.extend(jobs(ProtocolKind::Euclid, &TS, &SCALING_N, |_| 5.0));
    let fixed = sweep(&fixed_jobs);

    let all: Vec<&Cell> = matrix.iter().chain(&scaling).chain(&round_cells).chain(&fixed).collect();
    let local_model: Vec<&Cell> = all.iter().copied().filter(|c| c.protocol != ProtocolKind::Congest).collect();
    let congest: Vec<&Cell> = all.iter().copied().filter(|c| c.protocol == ProtocolKind::Congest).collect();
    // Round criterion: same seeds at n in {50, 100, 200, 400} on the 5x5
    // square.
    let round_set: Vec<&Cell> =
        matrix.iter().chain(&round_cells).filter(|c| c.protocol == ProtocolKind::Congest).collect();

    let criteria: Vec<(&str, Outcome)> = vec![
        ("stretch exactness", stretch(&matrix)),
        ("subgraph", subgraph(&all)),
        ("refinement invariants", refinement()),
        ("covering", covering(&congest)),
        ("round accounting", rounds(&local_model, &round_set)),
        ("lightness boundedness", lightness_growth(&scaling)),
        ("degree boundedness", degree_growth(&scaling)),
        ("crossing linearity", crossings(&scaling)),
        ("oracle equivalence", oracle_equivalence()),
        ("efficiency reproduction", efficiency_reproduction()),
    ];

    let mut failed = 0;
    for (name, outcome) in &criteria {
        let (tag, lines) = match outcome {
            Ok(lines) => ("PASS", lines),
            Err(lines) => {
                failed += 1;
                ("FAIL", lines)
            }
        };
        println!("{tag} {name}");
        for line in lines {
            println!("    {line}");
        }
    }
    println!("INFO scaling at fixed side 5 (density grows with n)");
    for line in fixed_side_info(&fixed) {
        println!("    {line}");
    }
    println!(
        "{} of {} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
