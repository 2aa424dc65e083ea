//! Pipeline stages. Each stage reads the artifacts of the previous one from
//! the output directory and writes its own next to them.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use urbanflow::flows::{
    aggregate_flows, classify_flows, cluster_endpoints, top_flows, EndpointAssignment, Flow,
    FlowClass, FunctionalZone,
};
use urbanflow::ingest::{read_observations, write_observations, Dataset, RowRejection};
use urbanflow::linkage::{read_links_csv, run_filter_pipeline, write_links_csv, StageCounts};
use urbanflow::mapgen::{render_flow_map, render_map};
use urbanflow::providers::build_provider;
use urbanflow::report::{aggregate, compare_flow, emit_charts, emit_report};
use urbanflow::router::{compute_route_options, label_options, RouteLabel, RouteOptions};

use crate::config::PipelineConfig;

pub const OBSERVATIONS: &str = "observations.csv";
pub const INGEST_SUMMARY: &str = "ingest.json";
pub const LINKS: &str = "links.csv";
pub const STAGE_COUNTS: &str = "stage_counts.json";
pub const ZONES: &str = "zones.json";
pub const ASSIGNMENT: &str = "assignment.json";
pub const FLOWS: &str = "flows.json";
pub const TOP_FLOWS: &str = "top_flows.json";
pub const ROUTES_DIR: &str = "routes";
pub const ROUTE_INDEX: &str = "index.json";
pub const CHARTS_DIR: &str = "charts";
pub const MAPS_DIR: &str = "maps";

/// Path of a stage input, failing with the file name and the stage that
/// produces it when it does not exist.
fn require(cfg: &PipelineConfig, name: &str, producer: &str) -> Result<PathBuf> {
    let path = cfg.out.join(name);
    if !path.is_file() {
        bail!(
            "missing input file {} (produced by `urbanflow {producer}`)",
            path.display()
        );
    }
    Ok(path)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn out_dir(cfg: &PipelineConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out)
        .with_context(|| format!("cannot create output directory {}", cfg.out.display()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestSummary {
    pub source: String,
    pub input_rows: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub rejections: Vec<RowRejection>,
}

pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<IngestSummary> {
    if !cfg.input.is_file() {
        bail!("missing input file {}", cfg.input.display());
    }
    let dataset = read_observations(&cfg.input, cfg.strict)
        .with_context(|| format!("cannot ingest {}", cfg.input.display()))?;
    out_dir(cfg)?;
    let path = cfg.out.join(OBSERVATIONS);
    let file =
        fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    write_observations(&dataset.records, std::io::BufWriter::new(file))?;
    let summary = IngestSummary {
        source: dataset.source_path.clone(),
        input_rows: dataset.input_rows(),
        accepted: dataset.records.len(),
        rejected: dataset.rejected_count,
        rejections: dataset.rejections,
    };
    write_json(&cfg.out.join(INGEST_SUMMARY), &summary)?;
    println!(
        "ingest: {} rows, {} accepted, {} rejected",
        summary.input_rows, summary.accepted, summary.rejected
    );
    Ok(summary)
}

pub fn cmd_link(cfg: &PipelineConfig) -> Result<StageCounts> {
    let input = require(cfg, OBSERVATIONS, "ingest")?;
    let dataset: Dataset = read_observations(&input, true)
        .with_context(|| format!("cannot read {}", input.display()))?;
    let (links, counts) = run_filter_pipeline(&dataset, &cfg.filter);
    let path = cfg.out.join(LINKS);
    let file =
        fs::File::create(&path).with_context(|| format!("cannot write {}", path.display()))?;
    write_links_csv(&links, std::io::BufWriter::new(file))?;
    write_json(&cfg.out.join(STAGE_COUNTS), &counts)?;
    println!("{}", serde_json::to_string_pretty(&counts)?);
    Ok(counts)
}

fn read_links(cfg: &PipelineConfig) -> Result<Vec<urbanflow::linkage::TripLink>> {
    let path = require(cfg, LINKS, "link")?;
    let file = fs::File::open(&path).with_context(|| format!("cannot read {}", path.display()))?;
    read_links_csv(std::io::BufReader::new(file))
        .with_context(|| format!("invalid links file {}", path.display()))
}

pub fn cmd_cluster(cfg: &PipelineConfig) -> Result<Vec<FunctionalZone>> {
    let links = read_links(cfg)?;
    let (zones, assignment) =
        cluster_endpoints(&links, &cfg.cluster).context("clustering failed")?;
    write_json(&cfg.out.join(ZONES), &zones)?;
    write_json(&cfg.out.join(ASSIGNMENT), &assignment)?;
    let noise = assignment
        .origin
        .iter()
        .chain(&assignment.dest)
        .filter(|l| l.is_none())
        .count();
    println!(
        "cluster: {} zones from {} endpoints, {} noise",
        zones.len(),
        2 * links.len(),
        noise
    );
    Ok(zones)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FlowSummary {
    pub flows: Vec<Flow>,
    pub trend_count: usize,
    pub noise_discarded: usize,
    pub intra_zone: usize,
}

pub fn cmd_flows(cfg: &PipelineConfig) -> Result<Vec<Flow>> {
    let links = read_links(cfg)?;
    let zones: Vec<FunctionalZone> = read_json(&require(cfg, ZONES, "cluster")?)?;
    let assignment: EndpointAssignment = read_json(&require(cfg, ASSIGNMENT, "cluster")?)?;
    let agg = aggregate_flows(&links, &zones, &assignment).context("flow aggregation failed")?;
    let flows = classify_flows(agg.flows);
    let summary = FlowSummary {
        trend_count: flows
            .iter()
            .filter(|f| f.classification == FlowClass::Trend)
            .count(),
        flows,
        noise_discarded: agg.noise_discarded,
        intra_zone: agg.intra_zone,
    };
    write_json(&cfg.out.join(FLOWS), &summary)?;
    let top = top_flows(summary.flows.clone(), cfg.top_k);
    write_json(&cfg.out.join(TOP_FLOWS), &top)?;
    println!(
        "flows: {} flows ({} trend), {} kept for routing",
        summary.flows.len(),
        summary.trend_count,
        top.len()
    );
    Ok(top)
}

/// Routing result of one flow, stored as `routes/<flow_id>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowRoutes {
    pub flow_id: String,
    pub flow: Flow,
    pub routes: RouteOptions,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteIndexEntry {
    pub flow_id: String,
    pub file: Option<String>,
    pub options: usize,
    pub hybrids_missing: bool,
    pub error: Option<String>,
}

pub fn cmd_route(cfg: &PipelineConfig) -> Result<Vec<RouteIndexEntry>> {
    let flows: Vec<Flow> = read_json(&require(cfg, TOP_FLOWS, "flows")?)?;
    let provider = build_provider(&cfg.provider).context("cannot build route provider")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()?;
    let results: Vec<(Flow, Result<RouteOptions, String>)> = pool.install(|| {
        flows
            .par_iter()
            .map(|flow| {
                let result = compute_route_options(
                    flow.representative_origin,
                    flow.representative_dest,
                    provider.as_ref(),
                    &cfg.router,
                )
                .map(|mut routes| {
                    routes.hybrids_missing = !label_options(&mut routes.options);
                    routes
                })
                .map_err(|e| e.to_string());
                (flow.clone(), result)
            })
            .collect()
    });

    let dir = cfg.out.join(ROUTES_DIR);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut index = Vec::new();
    for (flow, result) in results {
        let flow_id = flow.id();
        match result {
            Ok(routes) => {
                if routes.hybrids_missing {
                    eprintln!(
                        "warning: flow {flow_id}: fewer than two mixed options, no hybrid labels"
                    );
                }
                let file = format!("{flow_id}.json");
                let entry = RouteIndexEntry {
                    flow_id: flow_id.clone(),
                    file: Some(file.clone()),
                    options: routes.options.len(),
                    hybrids_missing: routes.hybrids_missing,
                    error: None,
                };
                write_json(
                    &dir.join(&file),
                    &FlowRoutes {
                        flow_id,
                        flow,
                        routes,
                    },
                )?;
                index.push(entry);
            }
            Err(e) if cfg.keep_going => {
                eprintln!("warning: flow {flow_id}: {e}");
                index.push(RouteIndexEntry {
                    flow_id,
                    file: None,
                    options: 0,
                    hybrids_missing: true,
                    error: Some(e),
                });
            }
            Err(e) => {
                bail!("routing flow {flow_id} failed: {e} (use --keep-going to skip failing flows)")
            }
        }
    }
    write_json(&dir.join(ROUTE_INDEX), &index)?;
    let ok = index.iter().filter(|e| e.error.is_none()).count();
    println!("route: {ok}/{} flows routed", index.len());
    Ok(index)
}

fn read_routes(cfg: &PipelineConfig) -> Result<Vec<FlowRoutes>> {
    let index_name = format!("{ROUTES_DIR}/{ROUTE_INDEX}");
    let index: Vec<RouteIndexEntry> = read_json(&require(cfg, &index_name, "route")?)?;
    index
        .iter()
        .filter_map(|e| e.file.as_ref())
        .map(|file| read_json(&require(cfg, &format!("{ROUTES_DIR}/{file}"), "route")?))
        .collect()
}

pub fn cmd_report(cfg: &PipelineConfig) -> Result<()> {
    let routed = read_routes(cfg)?;
    let comparisons: Vec<_> = routed
        .iter()
        .map(|r| compare_flow(&r.flow_id, &r.routes.options))
        .collect();
    let report = aggregate(&comparisons).map_err(|e| anyhow!("cannot build report: {e}"))?;
    emit_report(&report, &comparisons, &cfg.out)?;
    emit_charts(&report, &cfg.out.join(CHARTS_DIR))?;
    for label in RouteLabel::COMPARED {
        if let Some(m) = report.get(label) {
            println!(
                "report: {:<8} flows={} price={:.2} duration={:.1}s wait={:.1}s walk={:.1}m",
                label.as_str(),
                m.flows,
                m.mean.price,
                m.mean.duration_s,
                m.mean.wait_s,
                m.mean.walk_distance_m
            );
        }
    }
    Ok(())
}

pub fn cmd_map(cfg: &PipelineConfig) -> Result<usize> {
    let routed = read_routes(cfg)?;
    let dir = cfg.out.join(MAPS_DIR);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut written = 0;
    for r in &routed {
        for option in r
            .routes
            .options
            .iter()
            .filter(|o| o.label != RouteLabel::Other)
        {
            let title = format!("Flow {} - {}", r.flow_id, option.label.as_str());
            let html = render_map(&option.steps, &cfg.map, &title)
                .with_context(|| format!("cannot render flow {}", r.flow_id))?;
            let path = dir.join(format!("{}_{}.html", r.flow_id, option.label.as_str()));
            fs::write(&path, html).with_context(|| format!("cannot write {}", path.display()))?;
            written += 1;
        }
    }
    let flows: Vec<Flow> = read_json(&require(cfg, TOP_FLOWS, "flows")?)?;
    let zones: Vec<FunctionalZone> = read_json(&require(cfg, ZONES, "cluster")?)?;
    let overview = render_flow_map(&flows, &zones, &cfg.map, "Flows")?;
    fs::write(dir.join("flows.html"), overview)?;
    println!("map: {written} route maps and 1 flow overview");
    Ok(written)
}

pub fn cmd_all(cfg: &PipelineConfig) -> Result<()> {
    cmd_ingest(cfg)?;
    cmd_link(cfg)?;
    cmd_cluster(cfg)?;
    cmd_flows(cfg)?;
    cmd_route(cfg)?;
    cmd_report(cfg)?;
    cmd_map(cfg)?;
    Ok(())
}
