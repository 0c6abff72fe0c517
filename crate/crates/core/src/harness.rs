//! Experiment runner: seeded instances, protocol sweeps, CSV output, and
//! replay of saved instances.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{build_ubg, EdgeList, UnitBallGraph};
use crate::metric::{generate_uniform_square, Point, PointSet};
use crate::protocols::{
    congest_spanner, distributed_euclidean_spanner, distributed_spanner, ProtocolKind, ProtocolRun,
};
use crate::spanner::{centralized_euclidean_spanner, centralized_spanner_with, refine, NaiveGreedyBase, Spanner};
use crate::verify::{
    build_report, check_stretch, crossing_report, efficiency, lightness, non_ubg_edges, run_report, Measure, Report,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub side: f64,
    pub seeds: Vec<u64>,
    /// Stretch values swept by `euclid`.
    pub t_values: Vec<f64>,
    /// Epsilon values swept by `local` and `congest`.
    pub eps_values: Vec<f64>,
    pub protocol: ProtocolKind,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 100,
            side: 5.0,
            seeds: (0..10).collect(),
            t_values: vec![1.1, 1.5, 2.0],
            eps_values: vec![0.25, 0.5, 1.0],
            protocol: ProtocolKind::Euclid,
            out: PathBuf::from("out"),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub n: Option<usize>,
    pub side: Option<f64>,
    pub seeds: Option<Vec<u64>>,
    pub t_values: Option<Vec<f64>>,
    pub eps_values: Option<Vec<f64>>,
    pub protocol: Option<ProtocolKind>,
    pub out: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Parse { line, message: format!("bad value `{s}` for `{key}`") }))
        .collect()
}

fn parse_one<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("bad value `{}` for `{key}`", value.trim()) })
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment. Keys: `n`, `side`,
    /// `seeds`, `t`, `eps`, `protocol`, `out`. Lists are comma separated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| Error::Parse { line, message: format!("expected `key = value`, got `{body}`") })?;
            let key = key.trim();
            match key {
                "n" => cfg.n = parse_one(line, key, value)?,
                "side" => cfg.side = parse_one(line, key, value)?,
                "seeds" => cfg.seeds = parse_list(line, key, value)?,
                "t" => cfg.t_values = parse_list(line, key, value)?,
                "eps" => cfg.eps_values = parse_list(line, key, value)?,
                "protocol" => {
                    cfg.protocol =
                        value.trim().parse().map_err(|e: Error| Error::Parse { line, message: e.to_string() })?
                }
                "out" => cfg.out = PathBuf::from(value.trim()),
                other => return Err(Error::Parse { line, message: format!("unknown key `{other}`") }),
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn apply(mut self, o: ConfigOverrides) -> Self {
        if let Some(n) = o.n {
            self.n = n;
        }
        if let Some(side) = o.side {
            self.side = side;
        }
        if let Some(seeds) = o.seeds {
            self.seeds = seeds;
        }
        if let Some(t) = o.t_values {
            self.t_values = t;
        }
        if let Some(eps) = o.eps_values {
            self.eps_values = eps;
        }
        if let Some(p) = o.protocol {
            self.protocol = p;
        }
        if let Some(out) = o.out {
            self.out = out;
        }
        self
    }

    /// The swept parameter list for the selected protocol.
    pub fn params(&self) -> &[f64] {
        match self.protocol {
            ProtocolKind::Euclid => &self.t_values,
            ProtocolKind::Local | ProtocolKind::Congest => &self.eps_values,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(self.side > 0.0 && self.side.is_finite()) {
            return bad(format!("side must be positive, got {}", self.side));
        }
        if self.seeds.is_empty() {
            return bad("seed list is empty".into());
        }
        let distinct: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            return bad("seeds must be distinct".into());
        }
        if self.params().is_empty() {
            return bad(format!("no parameter values for protocol {}", self.protocol.name()));
        }
        for &p in self.params() {
            let ok = match self.protocol {
                ProtocolKind::Euclid => p > 1.0 && p.is_finite(),
                _ => p > 0.0 && p <= 1.0,
            };
            if !ok {
                return bad(format!("parameter {p} out of range for protocol {}", self.protocol.name()));
            }
        }
        Ok(())
    }
}

/// Runs `protocol` with its parameter (epsilon, or t for `euclid`).
pub fn run_protocol(g: &UnitBallGraph, protocol: ProtocolKind, param: f64, seed: u64) -> Result<ProtocolRun> {
    match protocol {
        ProtocolKind::Local => distributed_spanner(g, param, seed),
        ProtocolKind::Congest => congest_spanner(g, param, seed),
        ProtocolKind::Euclid => distributed_euclidean_spanner(g, param, seed),
    }
}

/// Stretch the centralized greedy baseline is run at for a protocol
/// parameter.
pub fn baseline_stretch(protocol: ProtocolKind, param: f64) -> f64 {
    match protocol {
        ProtocolKind::Euclid => param,
        _ => 1.0 + param,
    }
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub seed: u64,
    pub param: f64,
    pub protocol: String,
    pub max_degree: usize,
    pub size: usize,
    pub weight: f64,
    pub lightness: f64,
    pub max_stretch: f64,
    pub rounds: u64,
    pub crossings: usize,
}

/// One line of `efficiency.csv`: per-seed ratios greedy/protocol, averaged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyRow {
    pub param: f64,
    pub protocol: String,
    pub seeds: usize,
    pub efficiency_max_degree: f64,
    pub efficiency_size: f64,
    pub efficiency_weight: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub results: Vec<ResultRow>,
    pub efficiency: Vec<EfficiencyRow>,
    pub results_path: PathBuf,
    pub efficiency_path: PathBuf,
}

fn row_for(g: &UnitBallGraph, s: &Spanner, seed: u64, param: f64, protocol: &str, rounds: u64) -> Result<ResultRow> {
    Ok(ResultRow {
        seed,
        param,
        protocol: protocol.to_string(),
        max_degree: s.max_degree(),
        size: s.edges.len(),
        weight: s.weight(),
        lightness: lightness(g, s)?,
        max_stretch: check_stretch(g, s, s.stretch_target).max_ratio,
        rounds,
        crossings: crossing_report(g.points(), s)?.total,
    })
}

/// Verifies stretch and containment; on failure saves the instance under
/// `out/failures` and returns [`Error::VerificationFailed`].
fn verify_or_save(g: &UnitBallGraph, s: &Spanner, meta: &InstanceMeta, out: &Path) -> Result<()> {
    let stretch = check_stretch(g, s, s.stretch_target);
    let outside = non_ubg_edges(g, &s.edges);
    let what = if !stretch.pass {
        format!(
            "{} stretch {} exceeds {} at edge {:?}",
            meta.protocol, stretch.max_ratio, s.stretch_target, stretch.worst_edge
        )
    } else if !outside.is_empty() {
        format!("{} produced {} edges outside the unit ball graph", meta.protocol, outside.len())
    } else {
        return Ok(());
    };
    let dir = out.join("failures");
    fs::create_dir_all(&dir)?;
    let path = dir.join(format!("{}-seed{}-param{}.txt", meta.protocol, meta.seed, meta.param));
    save_instance(&path, meta, g.points(), None)?;
    Err(Error::VerificationFailed { what, instance: path })
}

fn run_cell(cfg: &ExperimentConfig, seed: u64, param: f64) -> Result<[ResultRow; 2]> {
    let ps = generate_uniform_square(cfg.n, cfg.side, seed)?;
    let g = build_ubg(&ps, 1.0)?;
    let t = baseline_stretch(cfg.protocol, param);
    let base = centralized_euclidean_spanner(&g, t)?;
    verify_or_save(&g, &base, &InstanceMeta { protocol: "greedy".into(), param: t, seed }, &cfg.out)?;
    let run = run_protocol(&g, cfg.protocol, param, seed)?;
    verify_or_save(&g, &run.spanner, &InstanceMeta { protocol: cfg.protocol.name().into(), param, seed }, &cfg.out)?;
    Ok([
        row_for(&g, &base, seed, param, "greedy", 0)?,
        row_for(&g, &run.spanner, seed, param, cfg.protocol.name(), run.trace.rounds_elapsed)?,
    ])
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, k) = xs.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    if k == 0 {
        0.0
    } else {
        sum / k as f64
    }
}

/// Averages per-seed efficiencies for every parameter.
pub fn efficiency_table(rows: &[ResultRow]) -> Result<Vec<EfficiencyRow>> {
    let mut params: Vec<f64> = rows.iter().map(|r| r.param).collect();
    params.sort_by(f64::total_cmp);
    params.dedup();
    let mut out = Vec::new();
    for p in params {
        let at: Vec<&ResultRow> = rows.iter().filter(|r| r.param == p).collect();
        let protocols: BTreeSet<&str> =
            at.iter().map(|r| r.protocol.as_str()).filter(|&name| name != "greedy").collect();
        for proto in protocols {
            let mut per_seed = Vec::new();
            for alg in at.iter().filter(|r| r.protocol == proto) {
                let Some(base) = at.iter().find(|r| r.protocol == "greedy" && r.seed == alg.seed) else {
                    continue;
                };
                per_seed.push([
                    efficiency(Measure::MaxDegree, base.max_degree as f64, alg.max_degree as f64)?,
                    efficiency(Measure::Size, base.size as f64, alg.size as f64)?,
                    efficiency(Measure::Weight, base.weight, alg.weight)?,
                ]);
            }
            out.push(EfficiencyRow {
                param: p,
                protocol: proto.to_string(),
                seeds: per_seed.len(),
                efficiency_max_degree: mean(per_seed.iter().map(|e| e[0])),
                efficiency_size: mean(per_seed.iter().map(|e| e[1])),
                efficiency_weight: mean(per_seed.iter().map(|e| e[2])),
            });
        }
    }
    Ok(out)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every `(seed, param)` cell, verifies both spanners, and writes
/// `results.csv` and `efficiency.csv` into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    let mut cells: Vec<(u64, f64)> =
        cfg.seeds.iter().flat_map(|&s| cfg.params().iter().map(move |&p| (s, p))).collect();
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let outcomes: Vec<Result<[ResultRow; 2]>> = cells.par_iter().map(|&(s, p)| run_cell(cfg, s, p)).collect();
    let mut results = Vec::with_capacity(2 * cells.len());
    for o in outcomes {
        results.extend(o?);
    }
    let efficiency = efficiency_table(&results)?;
    let results_path = cfg.out.join("results.csv");
    let efficiency_path = cfg.out.join("efficiency.csv");
    write_rows(&results_path, &results)?;
    write_rows(&efficiency_path, &efficiency)?;
    Ok(ExperimentOutput { results, efficiency, results_path, efficiency_path })
}

/// Header of a saved instance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMeta {
    /// `local`, `congest`, `euclid`, `greedy`, `centralized` or `refine`.
    pub protocol: String,
    /// Epsilon, t, or eps' for `refine`.
    pub param: f64,
    pub seed: u64,
}

/// Writes `# key=value` metadata, the point CSV, and optionally an
/// `# edges` section with a `u,v,w` CSV.
pub fn save_instance(path: &Path, meta: &InstanceMeta, ps: &PointSet, edges: Option<&EdgeList>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# protocol={}", meta.protocol)?;
    writeln!(f, "# param={}", meta.param)?;
    writeln!(f, "# seed={}", meta.seed)?;
    ps.write_csv(&mut f)?;
    if let Some(e) = edges {
        writeln!(f, "# edges")?;
        e.write_csv(&mut f)?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Reads a file written by [`save_instance`]. Line numbers in errors count
/// from 1 over the whole file.
pub fn load_instance(text: &str) -> Result<(InstanceMeta, PointSet, Option<EdgeList>)> {
    let mut protocol = None;
    let mut param = None;
    let mut seed = 0;
    let mut points = Vec::new();
    let mut pairs = Vec::new();
    let mut in_edges = false;
    let mut header_seen = false;
    let mut dims = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() {
            continue;
        }
        if let Some(comment) = body.strip_prefix('#') {
            let comment = comment.trim();
            if comment == "edges" {
                in_edges = true;
                header_seen = false;
            } else if let Some((k, v)) = comment.split_once('=') {
                match k.trim() {
                    "protocol" => protocol = Some(v.trim().to_string()),
                    "param" => param = Some(parse_one::<f64>(line, "param", v)?),
                    "seed" => seed = parse_one(line, "seed", v)?,
                    _ => {}
                }
            }
            continue;
        }
        let fields: Vec<&str> = body.split(',').map(str::trim).collect();
        if !header_seen {
            header_seen = true;
            if in_edges {
                if fields != ["u", "v", "w"] {
                    return Err(parse_err(line, format!("expected edge header `u,v,w`, got `{body}`")));
                }
            } else {
                if fields.first() != Some(&"id") || fields.len() < 2 {
                    return Err(parse_err(line, format!("expected point header `id,x,...`, got `{body}`")));
                }
                dims = Some(fields.len() - 1);
            }
            continue;
        }
        if in_edges {
            if fields.len() != 3 {
                return Err(parse_err(line, format!("expected 3 fields, got {}", fields.len())));
            }
            let u: usize = parse_one(line, "u", fields[0])?;
            let v: usize = parse_one(line, "v", fields[1])?;
            let _: f64 = parse_one(line, "w", fields[2])?;
            pairs.push((line, u, v));
        } else {
            let d = dims.unwrap_or(2);
            if fields.len() != d + 1 {
                return Err(parse_err(line, format!("expected {} fields, got {}", d + 1, fields.len())));
            }
            let id: usize = parse_one(line, "id", fields[0])?;
            let coords =
                fields[1..].iter().map(|c| parse_one::<f64>(line, "coordinate", c)).collect::<Result<Vec<_>>>()?;
            if coords.iter().any(|c| !c.is_finite()) {
                return Err(parse_err(line, "non-finite coordinate"));
            }
            if id != points.len() {
                return Err(parse_err(line, format!("expected id {}, found {id}", points.len())));
            }
            points.push(Point::new(id, coords));
        }
    }
    let protocol = protocol.ok_or_else(|| parse_err(1, "missing `# protocol=` line"))?;
    let param = param.ok_or_else(|| parse_err(1, "missing `# param=` line"))?;
    if points.is_empty() {
        return Err(parse_err(text.lines().count().max(1), "no points"));
    }
    let ps = PointSet::new(points)?;
    let edges = if pairs.is_empty() {
        None
    } else {
        for &(line, u, v) in &pairs {
            if u >= ps.len() || v >= ps.len() || u == v {
                return Err(parse_err(line, format!("bad edge ({u}, {v})")));
            }
        }
        Some(EdgeList::from_pairs(&ps, pairs.iter().map(|&(_, u, v)| (u, v))))
    };
    Ok((InstanceMeta { protocol, param, seed }, ps, edges))
}

/// Result of re-running a saved instance.
#[derive(Debug, Clone)]
pub struct Replayed {
    pub meta: InstanceMeta,
    pub spanner: Spanner,
    pub report: Report,
}

/// Deterministically rebuilds and re-verifies a saved instance.
pub fn replay(path: &Path) -> Result<Replayed> {
    replay_text(&fs::read_to_string(path)?)
}

pub fn replay_text(text: &str) -> Result<Replayed> {
    let (meta, ps, edges) = load_instance(text)?;
    let g = build_ubg(&ps, 1.0)?;
    let (spanner, report) = match meta.protocol.as_str() {
        "greedy" => {
            let s = centralized_euclidean_spanner(&g, meta.param)?;
            let r = build_report(&g, &s, true, &[])?;
            (s, r)
        }
        "centralized" => {
            let (s, registry) = centralized_spanner_with(&g, meta.param, &NaiveGreedyBase)?;
            let owned = crate::protocols::OwnedRegistry { owner: 0, eps: meta.param, registry };
            let r = build_report(&g, &s, true, std::slice::from_ref(&owned))?;
            (s, r)
        }
        "refine" => {
            let edges = edges.ok_or_else(|| parse_err(1, "refine instances need an `# edges` section"))?;
            let base = Spanner::new(ps.len(), edges, 1.0 + meta.param);
            let (s, registry) = refine(&base, &g, meta.param)?;
            let owned = crate::protocols::OwnedRegistry { owner: 0, eps: 36.0 * meta.param, registry };
            let r = build_report(&g, &s, true, std::slice::from_ref(&owned))?;
            (s, r)
        }
        other => {
            let kind: ProtocolKind = other.parse()?;
            let run = run_protocol(&g, kind, meta.param, meta.seed)?;
            let r = run_report(&g, &run)?;
            (run.spanner, r)
        }
    };
    Ok(Replayed { meta, spanner, report })
}

/// Writes the spanner edge CSV, its metadata line, and for protocol runs
/// the round trace CSV and JSON summary, under `dir` with file stem `stem`.
pub fn write_spanner_outputs(dir: &Path, stem: &str, s: &Spanner, run: Option<&ProtocolRun>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let edges = dir.join(format!("{stem}.edges.csv"));
    s.edges.write_csv(fs::File::create(&edges)?)?;
    written.push(edges);
    let meta = dir.join(format!("{stem}.meta.jsonl"));
    let mut f = fs::File::create(&meta)?;
    writeln!(f, "{}", serde_json::to_string(&s.metadata())?)?;
    written.push(meta);
    if let Some(run) = run {
        let trace = dir.join(format!("{stem}.trace.csv"));
        run.trace.write_csv(fs::File::create(&trace)?)?;
        written.push(trace);
        let summary = dir.join(format!("{stem}.summary.json"));
        fs::write(&summary, serde_json::to_string_pretty(&run.summary())?)?;
        written.push(summary);
    }
    Ok(written)
}

/// Writes a point set as `id,x,y` CSV.
pub fn write_points(path: &Path, ps: &PointSet) -> Result<()> {
    ps.write_csv(fs::File::create(path)?)
}
