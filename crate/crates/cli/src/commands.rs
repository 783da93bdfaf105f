//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num_traits::ToPrimitive;
use serde_json::json;

use twinrecover_core::dsep::{active_path, d_separated, render_path, DsepQuery, ORACLE_MAX_NODES};
use twinrecover_core::estimate::continuous::{
    density_of_gaussian, gaussian_kde, recover_continuous_opts, silverman_bandwidth, GridSpec,
    RecoverOptions,
};
use twinrecover_core::estimate::discrete::{biased_discrete, relative_error};
use twinrecover_core::fixtures;
use twinrecover_core::graph::{parse_graph, CausalGraph, NodeSet};
use twinrecover_core::metrics::ErrorReport;
use twinrecover_core::recover::{decide_with, DataRegime, DecideOptions};
use twinrecover_core::sim::{
    draw_external_covariates, simulate_continuous, simulate_discrete, sweep, ContinuousScmConfig,
    DiscreteScmConfig, SweepOutput, SweepSettings,
};
use twinrecover_core::{build_twin, sha256_hex};

use crate::io::{
    atomic_write, density_to_csv, read_density_csv, read_discrete_counts_csv, read_marginal_csv,
    read_xzy_csv, read_z_csv, RunManifest,
};
use crate::svg::{Chart, Series};

fn load_graph(path: &Path) -> Result<CausalGraph> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    parse_graph(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn resolve_pair(
    g: &CausalGraph,
    intervene: Option<&str>,
    outcome: Option<&str>,
) -> Result<(String, String)> {
    match (intervene, outcome, g.target_names()) {
        (Some(x), Some(y), _) => Ok((x.to_string(), y.to_string())),
        (None, None, Some((x, y))) => Ok((x.to_string(), y.to_string())),
        _ => bail!(
            "intervention/outcome pair missing: pass --intervene and --outcome, \
             or declare `target X -> Y` in the graph file"
        ),
    }
}

pub fn parse(path: &Path, json: bool) -> Result<u8> {
    let g = load_graph(path)?;
    if json {
        let nodes: BTreeMap<&str, &str> = g
            .node_names()
            .map(|n| {
                let kind = match g.kind_of(n).unwrap() {
                    twinrecover_core::graph::NodeKind::Endogenous => "endo",
                    twinrecover_core::graph::NodeKind::Exogenous => "exo",
                    twinrecover_core::graph::NodeKind::Selection => "sel",
                };
                (n, kind)
            })
            .collect();
        let out = json!({
            "nodes": nodes,
            "edges": g.edges().iter().map(|(a, b)| format!("{a} -> {b}")).collect::<Vec<_>>(),
            "target": g.target_names().map(|(x, y)| format!("{x} -> {y}")),
            "implicit_exogenous": g.is_implicit_exogenous(),
            "topological_order": g.topological_order(),
        });
        println!("{}", serde_json::to_string_pretty(&out)?);
    } else {
        print!("{}", g.render());
    }
    Ok(0)
}

pub fn twin(path: &Path, intervene: Option<&str>, outcome: Option<&str>) -> Result<u8> {
    let g = load_graph(path)?;
    let (x, y) = resolve_pair(&g, intervene, outcome)?;
    let t = build_twin(&g, &x, &y)?;
    print!("{}", t.graph().render());
    Ok(0)
}

pub fn dsep(
    path: &Path,
    x: &str,
    y: &str,
    given: &[String],
    use_twin: bool,
    explain: bool,
    json: bool,
) -> Result<u8> {
    let g = load_graph(path)?;
    let target;
    let graph = if use_twin {
        let (ix, iy) = resolve_pair(&g, None, None)?;
        target = build_twin(&g, &ix, &iy)?;
        target.graph().clone()
    } else {
        g
    };
    let query = DsepQuery::new(
        NodeSet::singleton(x),
        NodeSet::singleton(y),
        NodeSet::from_names(given.iter().filter(|s| !s.is_empty()).cloned()),
    )?;
    let separated = d_separated(&graph, &query)?;
    let witness = if !separated && explain {
        if graph.len() <= ORACLE_MAX_NODES {
            active_path(&graph, &query)?
        } else {
            eprintln!("note: graph too large to enumerate a witnessing path");
            None
        }
    } else {
        None
    };
    if json {
        println!(
            "{}",
            serde_json::to_string(&json!({
                "separated": separated,
                "active_path": witness,
            }))?
        );
    } else {
        println!("{}", if separated { "separated" } else { "connected" });
        if let Some(p) = witness {
            println!("active path: {}", render_path(&graph, &p));
        }
    }
    Ok(0)
}

pub fn decide(
    path: &Path,
    intervene: Option<&str>,
    outcome: Option<&str>,
    measured: &[String],
    external: &[String],
    max_size: usize,
    rc_depth: usize,
) -> Result<u8> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let g = parse_graph(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let (x, y) = resolve_pair(&g, intervene, outcome)?;
    let regime = DataRegime::new(
        &g,
        NodeSet::from_names(measured.iter().filter(|s| !s.is_empty()).cloned()),
        NodeSet::from_names(external.iter().filter(|s| !s.is_empty()).cloned()),
    )?;
    let opts = DecideOptions { max_size, rc_depth };
    let verdict = decide_with(&g, &x, &y, &regime, &opts)?;
    let exit = if verdict.is_failure() { 2 } else { 0 };

    let out = json!({
        "tool": {"name": "twinrecover", "version": env!("CARGO_PKG_VERSION")},
        "graph_file": path.display().to_string(),
        "graph_digest": sha256_hex(text.as_bytes()),
        "intervention": x,
        "outcome": y,
        "regime": regime,
        "options": {"max_size": max_size, "rc_depth": rc_depth},
        "interpretation": {
            "candidate_sets": "subsets of the biased-measured variables, excluding the \
                               intervention and outcome, enumerated in increasing cardinality",
            "external_membership": "an adjustment set is directly available when it is a \
                                    subset of the external-unbiased variables; otherwise its \
                                    joint marginal is recovered recursively",
            "search": "all candidate subsets up to max_size are tried before failure is declared"
        },
        "verdict": verdict,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(exit)
}

pub fn recover_discrete_cmd(
    biased_path: &Path,
    external_path: &Path,
    x: u8,
    write: bool,
    out_dir: &Path,
) -> Result<u8> {
    let biased = read_discrete_counts_csv(biased_path)?;
    let external = read_marginal_csv(external_path)?;
    let recovered = twinrecover_core::estimate::discrete::recover_discrete(&biased, &external, x)?;
    let marginal = biased_discrete(&biased, x)?;

    let outcome_var = recovered.variables()[0].clone();
    let mut dist = serde_json::Map::new();
    let mut csv_text = format!("{outcome_var},probability,fraction\n");
    for (key, value) in recovered.cells() {
        let level = key[0];
        dist.insert(
            level.to_string(),
            json!({
                "probability": value.to_f64(),
                "fraction": value.to_string(),
            }),
        );
        csv_text.push_str(&format!("{level},{},{}\n", value.to_f64().unwrap_or(f64::NAN), value));
    }
    let report = json!({
        "treatment": x,
        "outcome": outcome_var,
        "recovered": dist,
        "biased_marginal": marginal
            .cells()
            .map(|(k, v)| (k[0].to_string(), json!(v.to_f64())))
            .collect::<BTreeMap<_, _>>(),
    });
    println!("{}", serde_json::to_string_pretty(&report)?);

    if write {
        let manifest = RunManifest::new(format!(
            "recover-discrete --biased {} --external {} --x {x}",
            biased_path.display(),
            external_path.display()
        ))
        .with_input(biased_path)?
        .with_input(external_path)?;
        manifest.write_output(&out_dir.join("recovered.csv"), csv_text.as_bytes())?;
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn recover_continuous_cmd(
    biased_path: &Path,
    external_path: &Path,
    x: f64,
    grid_min: Option<f64>,
    grid_max: Option<f64>,
    grid_points: usize,
    bins: usize,
    min_cell: usize,
    out_dir: &Path,
) -> Result<u8> {
    let biased = read_xzy_csv(biased_path)?;
    let external = read_z_csv(external_path)?;

    let grid = match (grid_min, grid_max) {
        (Some(min), Some(max)) => GridSpec::new(min, max, grid_points)?,
        _ => {
            // data range padded by three bandwidths of the treatment arm
            let ys: Vec<f64> = biased
                .iter()
                .filter(|(xi, _, _)| *xi == x)
                .map(|(_, _, y)| *y)
                .collect();
            if ys.len() < 2 {
                bail!("fewer than 2 biased rows at treatment {x}");
            }
            let h = silverman_bandwidth(&ys);
            let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min) - 3.0 * h;
            let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 3.0 * h;
            GridSpec::new(lo, hi, grid_points)?
        }
    };

    let opts = RecoverOptions {
        min_cell,
        ..Default::default()
    };
    let result = recover_continuous_opts(&biased, &external, x, grid, bins, &opts)?;

    let manifest = RunManifest::new(format!(
        "recover-continuous --biased {} --external {} --x {x} --bins {bins}",
        biased_path.display(),
        external_path.display()
    ))
    .with_input(biased_path)?
    .with_input(external_path)?;
    manifest.write_output(
        &out_dir.join("recovered_density.csv"),
        density_to_csv(&result.density).as_bytes(),
    )?;
    manifest.write_output(
        &out_dir.join("recovered_diagnostics.json"),
        serde_json::to_string_pretty(&result.diagnostics)?.as_bytes(),
    )?;
    println!(
        "{}",
        serde_json::to_string(&json!({
            "grid": result.density.grid(),
            "mass_before_renormalization": result.diagnostics.mass_before,
            "cells": result.diagnostics.cell_counts,
            "borrowed_cells": result.diagnostics.borrowed.len(),
            "written": [
                out_dir.join("recovered_density.csv").display().to_string(),
                out_dir.join("recovered_diagnostics.json").display().to_string(),
            ],
        }))?
    );
    Ok(0)
}

pub fn metrics(a_path: &Path, b_path: &Path, n: usize) -> Result<u8> {
    let a = read_density_csv(a_path)?;
    let b = read_density_csv(b_path)?;
    let report = ErrorReport::between(&a, &b, n, 1)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(0)
}

enum AnyConfig {
    Discrete(DiscreteScmConfig),
    Continuous(ContinuousScmConfig),
}

fn resolve_config(preset: Option<&str>, config: Option<&Path>) -> Result<AnyConfig> {
    match (preset, config) {
        (Some("discrete"), None) => Ok(AnyConfig::Discrete(fixtures::discrete_trial_config())),
        (Some("basic"), None) => Ok(AnyConfig::Continuous(
            fixtures::continuous_trial_basic_config(),
        )),
        (Some("advanced"), None) => Ok(AnyConfig::Continuous(
            fixtures::continuous_trial_advanced_config(),
        )),
        (Some(other), None) => bail!("unknown preset `{other}` (discrete, basic, advanced)"),
        (None, Some(path)) => parse_config_file(path),
        (None, None) => bail!("pass --preset or --config"),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    }
}

/// Flat `key = value` configuration, `#` comments. `model` selects discrete
/// or continuous; the remaining keys match the configuration fields.
fn parse_config_file(path: &Path) -> Result<AnyConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut kv = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .with_context(|| format!("{}:{}: expected `key = value`", path.display(), idx + 1))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let model = kv
        .remove("model")
        .with_context(|| format!("{}: missing `model = discrete|continuous`", path.display()))?;
    let mut num = |key: &str, default: Option<f64>| -> Result<f64> {
        match kv.remove(key) {
            Some(v) => v
                .parse()
                .with_context(|| format!("{}: invalid number for `{key}`", path.display())),
            None => default.ok_or_else(|| anyhow!("{}: missing key `{key}`", path.display())),
        }
    };
    let cfg = match model.as_str() {
        "continuous" => AnyConfig::Continuous(ContinuousScmConfig {
            alpha: num("alpha", None)?,
            beta: num("beta", None)?,
            gamma_wy: num("gamma_wy", None)?,
            sigma_y: num("sigma_y", None)?,
            gamma_z: num("gamma_z", None)?,
            gamma_w: num("gamma_w", Some(0.0))?,
            sigma_s: num("sigma_s", None)?,
            c: num("c", None)?,
            p_x: num("p_x", Some(0.5))?,
            gamma_wx: num("gamma_wx", Some(0.0))?,
        }),
        "discrete" => {
            let mut outcome = [[[0.0f64; 2]; 2]; 2];
            for (x, row_x) in outcome.iter_mut().enumerate() {
                for (w, row_w) in row_x.iter_mut().enumerate() {
                    for (z, cell) in row_w.iter_mut().enumerate() {
                        *cell = num(&format!("p_y1_x{x}_w{w}_z{z}"), None)?;
                    }
                }
            }
            AnyConfig::Discrete(DiscreteScmConfig {
                p_w: num("p_w", Some(0.5))?,
                p_z: num("p_z", Some(0.5))?,
                p_x: num("p_x", Some(0.5))?,
                selection: [num("p_s_z0", None)?, num("p_s_z1", None)?],
                outcome,
            })
        }
        other => bail!("{}: unknown model `{other}`", path.display()),
    };
    if let Some(extra) = kv.keys().next() {
        bail!("{}: unknown key `{extra}`", path.display());
    }
    Ok(cfg)
}

pub fn simulate(
    preset: Option<&str>,
    config: Option<&Path>,
    n: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<u8> {
    let label = preset.unwrap_or("custom");
    match resolve_config(preset, config)? {
        AnyConfig::Discrete(cfg) => {
            let d = simulate_discrete(&cfg, n, seed)?;
            let mut csv_text = String::from("x,w,z,y,s\n");
            for r in &d.rows {
                csv_text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.x,
                    r.w,
                    r.z,
                    r.y,
                    u8::from(r.s)
                ));
            }
            let file = out_dir.join(format!("simulate_{label}_{n}_{seed}.csv"));
            RunManifest::new(format!("simulate {label} --n {n} --seed {seed}"))
                .with_config_hash(d.provenance.config_hash.clone())
                .with_seeds(&[seed])
                .write_output(&file, csv_text.as_bytes())?;
            println!("{}", serde_json::to_string(&d.provenance)?);
        }
        AnyConfig::Continuous(cfg) => {
            let d = simulate_continuous(&cfg, n, seed)?;
            let mut csv_text = String::from("x,w,z,y,s\n");
            for r in &d.rows {
                csv_text.push_str(&format!(
                    "{},{:.12},{:.12},{:.12},{}\n",
                    r.x,
                    r.w,
                    r.z,
                    r.y,
                    u8::from(r.s)
                ));
            }
            let file = out_dir.join(format!("simulate_{label}_{n}_{seed}.csv"));
            RunManifest::new(format!("simulate {label} --n {n} --seed {seed}"))
                .with_config_hash(d.provenance.config_hash.clone())
                .with_seeds(&[seed])
                .write_output(&file, csv_text.as_bytes())?;
            println!("{}", serde_json::to_string(&d.provenance)?);
        }
    }
    Ok(0)
}

fn sweep_summary_csv(out: &SweepOutput) -> String {
    let mut text = String::from(
        "n,l1_rec,l1_bias,l2_rec,l2_bias,js_rec,js_bias,wass_rec,wass_bias,seeds_used,failures\n",
    );
    for row in &out.rows {
        text.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}\n",
            row.n,
            row.recovered.l1,
            row.biased.l1,
            row.recovered.l2,
            row.biased.l2,
            row.recovered.js,
            row.biased.js,
            row.recovered.wasserstein,
            row.biased.wasserstein,
            row.seeds_used,
            row.failures,
        ));
    }
    text
}

fn sweep_per_seed_csv(out: &SweepOutput) -> String {
    let mut text = String::from(
        "n,seed,bins,l1_rec,l1_bias,l2_rec,l2_bias,js_rec,js_bias,wass_rec,wass_bias\n",
    );
    for s in &out.per_seed {
        text.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            s.n,
            s.seed,
            s.bins,
            s.recovered.l1,
            s.biased.l1,
            s.recovered.l2,
            s.biased.l2,
            s.recovered.js,
            s.biased.js,
            s.recovered.wasserstein,
            s.biased.wasserstein,
        ));
    }
    text
}

fn run_sweep(cfg: &ContinuousScmConfig, sizes: &[usize], seeds: usize) -> Result<SweepOutput> {
    let seed_list: Vec<u64> = (1..=seeds as u64).collect();
    Ok(sweep(cfg, sizes, &seed_list, &SweepSettings::default())?)
}

fn write_sweep_outputs(
    out: &SweepOutput,
    label: &str,
    command: String,
    seeds: usize,
    out_dir: &Path,
) -> Result<()> {
    let seed_list: Vec<u64> = (1..=seeds as u64).collect();
    let manifest = RunManifest::new(command)
        .with_config_hash(out.config_hash.clone())
        .with_seeds(&seed_list);
    manifest.write_output(
        &out_dir.join(format!("sweep_{label}_summary.csv")),
        sweep_summary_csv(out).as_bytes(),
    )?;
    manifest.write_output(
        &out_dir.join(format!("sweep_{label}_per_seed.csv")),
        sweep_per_seed_csv(out).as_bytes(),
    )?;
    Ok(())
}

pub fn sweep_cmd(
    preset: Option<&str>,
    config: Option<&Path>,
    sizes: &[usize],
    seeds: usize,
    out_dir: &Path,
) -> Result<u8> {
    let cfg = match resolve_config(preset, config)? {
        AnyConfig::Continuous(cfg) => cfg,
        AnyConfig::Discrete(_) => bail!("sweep runs on the continuous configurations"),
    };
    let label = preset.unwrap_or("custom");
    let out = run_sweep(&cfg, sizes, seeds)?;
    write_sweep_outputs(
        &out,
        label,
        format!("sweep {label} --sizes {sizes:?} --seeds {seeds}"),
        seeds,
        out_dir,
    )?;
    print!("{}", sweep_summary_csv(&out));
    for (n, seed, err) in &out.errors {
        eprintln!("warning: (n={n}, seed={seed}) excluded: {err}");
    }
    Ok(0)
}

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, pass: bool, detail: String, checks: &mut Vec<Check>) {
    println!("check {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    checks.push(Check {
        name: name.to_string(),
        pass,
        detail,
    });
}

pub fn reproduce(experiment: &str, seeds: usize, out_dir: &Path) -> Result<u8> {
    match experiment {
        "discrete" => reproduce_discrete(out_dir),
        "continuous" => reproduce_continuous(
            &fixtures::continuous_trial_basic_config(),
            "continuous",
            seeds,
            true,
            (0.015, 0.06),
            (0.10, 0.25),
            out_dir,
        ),
        "advanced" => reproduce_continuous(
            &fixtures::continuous_trial_advanced_config(),
            "advanced",
            seeds,
            false,
            (0.015, 0.07),
            (0.20, 0.50),
            out_dir,
        ),
        other => bail!("unknown experiment `{other}` (discrete, continuous, advanced)"),
    }
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn reproduce_discrete(out_dir: &Path) -> Result<u8> {
    let biased = fixtures::trial_biased_counts();
    let external_z = fixtures::bernoulli_half("z");
    let ideal = fixtures::trial_ideal_joint();
    let external_w = fixtures::bernoulli_half("w");
    let mut checks = Vec::new();

    let mut rows = Vec::new();
    for x in [0u8, 1] {
        let recovered = twinrecover_core::estimate::discrete::recover_discrete(&biased, &external_z, x)?;
        let marginal = biased_discrete(&biased, x)?;
        let truth = twinrecover_core::estimate::discrete::recover_discrete(&ideal, &external_w, x)?;
        let rec = recovered.value(&[1]);
        let bias = marginal.value(&[1]);
        let tru = truth.value(&[1]);
        rows.push((x, rec.clone(), bias.clone(), tru.clone()));

        let rec_f = rec.to_f64().unwrap();
        let bias_f = bias.to_f64().unwrap();
        let tru_f = tru.to_f64().unwrap();
        let expected_rec = if x == 1 { 0.816 } else { 0.613 };
        let expected_tru = if x == 1 { 0.8125 } else { 0.60 };
        check(
            &format!("recovered probability (x={x})"),
            round3(rec_f) == expected_rec,
            format!("{rec} = {rec_f:.6} vs published {expected_rec}"),
            &mut checks,
        );
        check(
            &format!("adjusted truth (x={x})"),
            tru_f == expected_tru,
            format!("{tru} = {tru_f}"),
            &mut checks,
        );
        let expected_bias = if x == 1 { "788/1025" } else { "531/1004" };
        check(
            &format!("biased fraction (x={x})"),
            bias.to_string() == expected_bias,
            format!("{bias} = {bias_f:.6}"),
            &mut checks,
        );
    }

    // relative errors computed from the published three-decimal estimates
    let published = [
        ("re_bias(x=0)", 0.529, 0.60, -11.8),
        ("re_rec(x=0)", 0.613, 0.60, 2.2),
        ("re_bias(x=1)", 0.768, 0.8125, -5.5),
        ("re_rec(x=1)", 0.816, 0.8125, 0.4),
    ];
    let mut re_rows = Vec::new();
    for (name, estimate, truth, expected_pct) in published {
        let pct = (relative_error(estimate, truth)? * 1000.0).round() / 10.0;
        re_rows.push((name, estimate, truth, pct));
        check(
            name,
            pct == expected_pct,
            format!("{pct:+.1}% vs published {expected_pct:+.1}%"),
            &mut checks,
        );
    }

    let mut csv_text =
        String::from("treatment,recovered,biased,theoretical,recovered_fraction,biased_fraction\n");
    for (x, rec, bias, tru) in &rows {
        csv_text.push_str(&format!(
            "{x},{:.6},{:.6},{:.6},{rec},{bias}\n",
            rec.to_f64().unwrap(),
            bias.to_f64().unwrap(),
            tru.to_f64().unwrap(),
        ));
    }
    let report = json!({
        "rows": rows.iter().map(|(x, rec, bias, tru)| json!({
            "treatment": x,
            "recovered": {"fraction": rec.to_string(), "value": rec.to_f64()},
            "biased": {"fraction": bias.to_string(), "value": bias.to_f64()},
            "theoretical": {"fraction": tru.to_string(), "value": tru.to_f64()},
        })).collect::<Vec<_>>(),
        "relative_errors_pct": re_rows.iter().map(|(name, est, tru, pct)| json!({
            "name": name, "estimate": est, "truth": tru, "percent": pct,
        })).collect::<Vec<_>>(),
        "checks": checks.iter().map(|c| json!({
            "name": c.name, "pass": c.pass, "detail": c.detail,
        })).collect::<Vec<_>>(),
    });

    let manifest = RunManifest::new("reproduce discrete".into());
    manifest.write_output(&out_dir.join("discrete_report.csv"), csv_text.as_bytes())?;
    manifest.write_output(
        &out_dir.join("discrete_report.json"),
        serde_json::to_string_pretty(&report)?.as_bytes(),
    )?;

    summarize(&checks)
}

#[allow(clippy::too_many_arguments)]
fn reproduce_continuous(
    cfg: &ContinuousScmConfig,
    label: &str,
    seeds: usize,
    require_monotone: bool,
    rec_band: (f64, f64),
    bias_band: (f64, f64),
    out_dir: &Path,
) -> Result<u8> {
    let sizes = [100usize, 200, 500, 1000, 2000, 4000];
    let out = run_sweep(cfg, &sizes, seeds)?;
    write_sweep_outputs(
        &out,
        label,
        format!("reproduce {label} --seeds {seeds}"),
        seeds,
        out_dir,
    )?;
    print!("{}", sweep_summary_csv(&out));

    let mut checks = Vec::new();
    check(
        "no estimator failures",
        out.errors.is_empty(),
        format!("{} failed cells", out.errors.len()),
        &mut checks,
    );
    if require_monotone {
        let monotone = out
            .rows
            .windows(2)
            .all(|p| p[1].recovered.l1 < p[0].recovered.l1);
        check(
            "mean recovered L1 decreases with n",
            monotone,
            out.rows
                .iter()
                .map(|r| format!("{:.4}", r.recovered.l1))
                .collect::<Vec<_>>()
                .join(" > "),
            &mut checks,
        );
    }
    let last = out.rows.last().expect("six rows");
    check(
        "recovered L1 at n=4000 within band",
        (rec_band.0..=rec_band.1).contains(&last.recovered.l1),
        format!("{:.4} in [{}, {}]", last.recovered.l1, rec_band.0, rec_band.1),
        &mut checks,
    );
    check(
        "biased L1 at n=4000 within band",
        (bias_band.0..=bias_band.1).contains(&last.biased.l1),
        format!("{:.4} in [{}, {}]", last.biased.l1, bias_band.0, bias_band.1),
        &mut checks,
    );
    let all_beat = out.rows.iter().all(|r| {
        r.recovered.l1 < r.biased.l1
            && r.recovered.l2 < r.biased.l2
            && r.recovered.js < r.biased.js
            && r.recovered.wasserstein < r.biased.wasserstein
    });
    check(
        "recovered beats biased on all four metrics at every n",
        all_beat,
        "rows compared pairwise".into(),
        &mut checks,
    );

    write_metric_charts(&out, label, out_dir)?;
    write_density_chart(cfg, label, out_dir)?;
    summarize(&checks)
}

fn write_metric_charts(out: &SweepOutput, label: &str, out_dir: &Path) -> Result<()> {
    let metric_list: [(&str, fn(&twinrecover_core::sim::MeanMetrics) -> f64); 4] = [
        ("L1", |m| m.l1),
        ("L2", |m| m.l2),
        ("JS", |m| m.js),
        ("Wasserstein", |m| m.wasserstein),
    ];
    for (name, get) in metric_list {
        let chart = Chart {
            title: &format!("{name} error vs cohort size ({label})"),
            x_label: "selected cohort size n (log scale)",
            y_label: &format!("{name} error"),
            log_x: true,
            series: vec![
                Series {
                    name: "recovered",
                    color: "#1f77b4",
                    points: out
                        .rows
                        .iter()
                        .map(|r| (r.n as f64, get(&r.recovered)))
                        .collect(),
                },
                Series {
                    name: "biased",
                    color: "#d62728",
                    points: out.rows.iter().map(|r| (r.n as f64, get(&r.biased))).collect(),
                },
            ],
        };
        atomic_write(
            &out_dir.join(format!(
                "metrics_{label}_{}.svg",
                name.to_ascii_lowercase()
            )),
            chart.render().as_bytes(),
        )?;
    }
    Ok(())
}

fn write_density_chart(cfg: &ContinuousScmConfig, label: &str, out_dir: &Path) -> Result<()> {
    // one representative seed at the largest cohort size
    let n = 4000usize;
    let seed = 1u64;
    let theory = cfg.theoretical(1.0)?;
    let grid = theory.default_grid(512);
    let truth = density_of_gaussian(&theory, grid)?;
    let dataset = simulate_continuous(cfg, n, seed)?;
    let external = draw_external_covariates(20_000, seed);
    let biased_rows: Vec<(f64, f64, f64, f64)> = dataset
        .biased_view()
        .map(|r| (r.x, r.w, r.z, r.y))
        .collect();

    let recovered = if cfg.selection_uses_w() {
        twinrecover_core::estimate::continuous::recover_continuous_two_covariates(
            &biased_rows,
            &external,
            1.0,
            grid,
            8,
            &RecoverOptions {
                min_cell: 3,
                bandwidth: twinrecover_core::estimate::continuous::BandwidthPolicy::Pooled,
            },
        )?
    } else {
        let rows: Vec<(f64, f64, f64)> =
            biased_rows.iter().map(|&(x, _, z, y)| (x, z, y)).collect();
        let ext_z: Vec<f64> = external.iter().map(|(_, z)| *z).collect();
        recover_continuous_opts(
            &rows,
            &ext_z,
            1.0,
            grid,
            10,
            &RecoverOptions {
                min_cell: 3,
                bandwidth: twinrecover_core::estimate::continuous::BandwidthPolicy::Pooled,
            },
        )?
    };
    let arm_ys: Vec<f64> = biased_rows
        .iter()
        .filter(|(x, _, _, _)| *x == 1.0)
        .map(|(_, _, _, y)| *y)
        .collect();
    let biased_density =
        gaussian_kde(&arm_ys, silverman_bandwidth(&arm_ys), grid).normalize()?;

    let to_points = |d: &twinrecover_core::estimate::continuous::GriddedDensity| {
        d.grid()
            .values()
            .into_iter()
            .zip(d.values().iter().copied())
            .collect::<Vec<_>>()
    };
    let chart = Chart {
        title: &format!("Outcome density under treatment, n={n} ({label})"),
        x_label: "outcome",
        y_label: "density",
        log_x: false,
        series: vec![
            Series {
                name: "theoretical",
                color: "#2ca02c",
                points: to_points(&truth),
            },
            Series {
                name: "recovered",
                color: "#1f77b4",
                points: to_points(&recovered.density),
            },
            Series {
                name: "biased",
                color: "#d62728",
                points: to_points(&biased_density),
            },
        ],
    };
    atomic_write(
        &out_dir.join(format!("density_{label}.svg")),
        chart.render().as_bytes(),
    )?;
    Ok(())
}

fn summarize(checks: &[Check]) -> Result<u8> {
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed == 0 {
        println!("all {} checks passed", checks.len());
        Ok(0)
    } else {
        println!("{failed} of {} checks FAILED", checks.len());
        Ok(2)
    }
}
