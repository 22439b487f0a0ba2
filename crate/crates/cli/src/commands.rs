use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use hfpoint::graph::{denoise_patch, extract_hf_points, DenoisePolicy};
use hfpoint::io::{
    load_cloud, load_geometry, load_mesh, save_cloud, write_atomic, write_xyz_with_scores,
    CloudFormat, Geometry,
};
use hfpoint::metrics::{loss_report, LossConfig, Metric, MetricReport};
use hfpoint::pipeline::{
    batch_evaluate, ingest_dataset, upsample_cloud, BatchReport, Builtin, PairWarning, PluginSpec,
    UpsamplerSpec,
};
use hfpoint::sampling::{
    fps, monte_carlo_cloud, monte_carlo_mesh, poisson_disk_sample, FpsStart, POISSON_OVERSAMPLE,
};
use hfpoint::transport::{AuctionParams, Solver};
use hfpoint::{evaluate_all, normalize_unit_sphere, Cloud, NormalizationTransform};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::manifest::RunManifest;
use crate::settings::{apply_denoise, apply_graph, apply_metric, Settings};
use crate::Failure;

type Outcome = Result<(), Failure>;

pub fn run(cli: Cli) -> Outcome {
    let settings = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Sample(SampleCommand::Poisson(a)) => sample(&settings, "sample poisson", a, true),
        Command::Sample(SampleCommand::MonteCarlo(a)) => {
            sample(&settings, "sample monte-carlo", a, false)
        }
        Command::Sample(SampleCommand::Fps(a)) => sample_fps(&settings, a),
        Command::Hf(HfCommand::Extract(a)) => hf_extract(settings, a),
        Command::Hf(HfCommand::Denoise(a)) => hf_denoise(settings, a),
        Command::Metrics(a) => metrics(settings, a),
        Command::Loss(a) => loss(settings, a),
        Command::Upsample(a) => upsample(settings, a),
        Command::Bench(a) => bench(settings, a),
    }
}

fn cloud_format(out: &OutputArgs) -> CloudFormat {
    match out.format {
        Some(FormatArg::Xyz) => CloudFormat::Xyz,
        Some(FormatArg::Ply) => CloudFormat::PlyBinary,
        Some(FormatArg::PlyAscii) => CloudFormat::PlyAscii,
        None => CloudFormat::from_path(&out.out),
    }
}

fn read_cloud(path: &Path) -> Result<Cloud, Failure> {
    Ok(load_cloud(path, CloudFormat::from_path(path))?)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::internal(e.into()))?;
    text.push('\n');
    Ok(write_atomic(path, text.as_bytes())?)
}

/// Prints to stdout; a closed pipe is not an error.
fn print_json(value: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::internal(e.into()))?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::io(e.into())),
        _ => Ok(()),
    }
}

/// Writes the cloud and `<out>.manifest.json` next to it.
fn finish(
    cloud: &Cloud,
    out: &OutputArgs,
    manifest: &RunManifest,
    extra: serde_json::Value,
) -> Outcome {
    save_cloud(cloud, &out.out, cloud_format(out))?;
    finish_manifest(cloud.len(), &out.out, manifest, extra)
}

fn finish_manifest(
    points: usize,
    out: &Path,
    manifest: &RunManifest,
    extra: serde_json::Value,
) -> Outcome {
    write_json(
        &manifest_path(out),
        &json!({ "manifest": manifest, "output": { "path": out.display().to_string(), "points": points }, "stats": extra }),
    )?;
    eprintln!("wrote {points} points to {}", out.display());
    Ok(())
}

fn sample(settings: &Settings, command: &str, a: SampleArgs, poisson: bool) -> Outcome {
    let seed = a.seed.unwrap_or(settings.seed);
    let geometry = load_geometry::<f64>(&a.input)?;
    let cloud = match (&geometry, poisson) {
        (Geometry::Mesh(m), true) => poisson_disk_sample(m, a.n, seed)?,
        (Geometry::Cloud(_), true) => {
            return Err(Failure::argument(anyhow!(
                "poisson sampling needs a mesh (.off or .ply with faces), got a point cloud"
            )))
        }
        (Geometry::Mesh(m), false) => monte_carlo_mesh(m, a.n, seed)?,
        (Geometry::Cloud(c), false) => monte_carlo_cloud(c, a.n, seed)?,
    };
    let source = match geometry {
        Geometry::Mesh(_) => "mesh",
        Geometry::Cloud(_) => "cloud",
    };
    let mut config = json!({ "n": a.n, "seed": seed, "source": source });
    if poisson {
        config["oversample"] = json!(POISSON_OVERSAMPLE);
    }
    let mut manifest = RunManifest::new(command, &config, Some(seed))?;
    manifest.input("in", &a.input)?;
    finish(&cloud, &a.output, &manifest, json!({}))
}

fn sample_fps(settings: &Settings, a: FpsArgs) -> Outcome {
    let cloud = read_cloud(&a.input)?;
    let seed = a.seed.unwrap_or(settings.seed);
    let start = match a.start {
        StartArg::First => FpsStart::First,
        StartArg::Centroid => FpsStart::FarthestFromCentroid,
        StartArg::Random => FpsStart::Random(seed),
    };
    let picked = cloud.select(&fps(&cloud, a.n, start)?)?;
    let mut manifest = RunManifest::new(
        "sample fps",
        &json!({ "n": a.n, "start": start }),
        Some(seed),
    )?;
    manifest.input("in", &a.input)?;
    finish(&picked, &a.output, &manifest, json!({}))
}

fn normalized(
    cloud: &Cloud,
    normalize: bool,
) -> Result<(Cloud, NormalizationTransform<f64>), Failure> {
    if normalize {
        Ok(normalize_unit_sphere(cloud)?)
    } else {
        Ok((cloud.clone(), NormalizationTransform::identity()))
    }
}

fn hf_extract(mut settings: Settings, a: HfExtractArgs) -> Outcome {
    let hf = &mut settings.hf;
    apply_graph(&mut hf.graph, &a.graph);
    if let Some(m) = a.m {
        hf.m = m;
    }
    if a.no_normalize {
        hf.normalize = false;
    }
    let format = cloud_format(&a.output);
    if a.scores && format != CloudFormat::Xyz {
        return Err(Failure::argument(anyhow!("--scores needs XYZ output")));
    }
    let cloud = read_cloud(&a.input)?;
    let (work, _) = normalized(&cloud, hf.normalize)?;
    let extraction = extract_hf_points(&work, hf.m, &hf.graph)?;
    let picked = cloud.select(&extraction.indices)?;
    let config = json!({ "m": hf.m, "normalize": hf.normalize, "graph": hf.graph });
    let mut manifest = RunManifest::new("hf extract", &config, None)?;
    manifest.input("in", &a.input)?;
    if a.scores {
        let mut bytes = Vec::new();
        write_xyz_with_scores(&mut bytes, picked.points(), &extraction.scores)?;
        write_atomic(&a.output.out, &bytes)?;
        return finish_manifest(picked.len(), &a.output.out, &manifest, json!({}));
    }
    finish(&picked, &a.output, &manifest, json!({}))
}

fn hf_denoise(mut settings: Settings, a: HfDenoiseArgs) -> Outcome {
    let hf = &mut settings.hf;
    apply_graph(&mut hf.graph, &a.graph);
    hf.denoise = apply_denoise(hf.denoise, &a.denoise);
    if a.no_normalize {
        hf.normalize = false;
    }
    let cloud = read_cloud(&a.input)?;
    let (work, transform) = normalized(&cloud, hf.normalize)?;
    let result = denoise_patch(&work, &hf.graph, hf.denoise)?;
    let out = transform.invert_cloud(&result.cloud);
    let config = json!({ "policy": hf.denoise, "normalize": hf.normalize, "graph": hf.graph });
    let mut manifest = RunManifest::new("hf denoise", &config, None)?;
    manifest.input("in", &a.input)?;
    let removed = cloud.len() - result.kept.len();
    finish(&out, &a.output, &manifest, json!({ "removed": removed }))
}

fn selected_metrics(which: Option<&str>, have_mesh: bool) -> Result<Vec<Metric>, Failure> {
    match which {
        Some(list) => Ok(Metric::parse_list(list)?),
        None => Ok(Metric::ALL
            .into_iter()
            .filter(|&m| have_mesh || m != Metric::P2f)
            .collect()),
    }
}

#[derive(Serialize)]
struct MetricsOutput<'a> {
    #[serde(flatten)]
    report: &'a MetricReport,
    manifest: &'a RunManifest,
}

fn metrics(mut settings: Settings, a: MetricsArgs) -> Outcome {
    let config = &mut settings.metrics;
    apply_metric(config, &a.metric);
    apply_graph(&mut config.graph, &a.graph);
    if a.ratio.is_some() {
        config.ratio = a.ratio;
    }
    if a.input_size.is_some() {
        config.input_size = a.input_size;
    }
    let which = selected_metrics(a.which.as_deref(), a.mesh.is_some())?;
    if which.contains(&Metric::P2f) && a.mesh.is_none() {
        return Err(Failure::argument(anyhow!(
            "p2f requested but no --mesh given"
        )));
    }
    let up = read_cloud(&a.up)?;
    let gt = read_cloud(&a.gt)?;
    let mesh = a.mesh.as_deref().map(load_mesh::<f64>).transpose()?;
    let mut report = evaluate_all(&up, &gt, mesh.as_ref(), config, &which)?;
    let mut manifest = RunManifest::new(
        "metrics",
        &json!({ "metrics": config, "which": which }),
        None,
    )?;
    manifest.input("up", &a.up)?;
    manifest.input("gt", &a.gt)?;
    report
        .inputs
        .insert("up".into(), json!(a.up.display().to_string()));
    report
        .inputs
        .insert("gt".into(), json!(a.gt.display().to_string()));
    if let Some(m) = &a.mesh {
        manifest.input("mesh", m)?;
        report
            .inputs
            .insert("mesh".into(), json!(m.display().to_string()));
    }
    let output = MetricsOutput {
        report: &report,
        manifest: &manifest,
    };
    if let Some(path) = &a.json {
        write_json(path, &output)?;
    }
    if let Some(path) = &a.csv {
        let mut bytes = Vec::new();
        report.write_csv(&mut bytes)?;
        write_atomic(path, &bytes)?;
    }
    if a.json.is_none() && a.csv.is_none() {
        print_json(&output)?;
    }
    Ok(())
}

fn loss(mut settings: Settings, a: LossArgs) -> Outcome {
    apply_metric(&mut settings.metrics, &a.metric);
    let solver = match a.solver {
        SolverArg::Exact => Solver::Exact,
        SolverArg::Auction => Solver::Auction(AuctionParams::default()),
        SolverArg::Auto => Solver::Auto,
    };
    let loss_config = LossConfig {
        solver,
        ..Default::default()
    };
    let up = read_cloud(&a.up)?;
    let gt = read_cloud(&a.gt)?;
    let ori = read_cloud(&a.ori)?;
    let report = loss_report(&up, &gt, &ori, &settings.metrics, &loss_config)?;
    if let Some(path) = &a.plan {
        let plan = solver.solve(&up, &gt)?;
        let mut bytes = Vec::new();
        plan.write_csv(&mut bytes)?;
        write_atomic(path, &bytes)?;
    }
    let mut manifest = RunManifest::new(
        "loss",
        &json!({ "loss": loss_config, "metrics": settings.metrics }),
        None,
    )?;
    manifest.input("up", &a.up)?;
    manifest.input("gt", &a.gt)?;
    manifest.input("ori", &a.ori)?;
    let output = json!({ "schema_version": crate::manifest::SCHEMA_VERSION, "losses": report, "manifest": manifest });
    match &a.json {
        Some(path) => write_json(path, &output),
        None => {
            print_json(&output)?;
            Ok(())
        }
    }
}

fn upsample(mut settings: Settings, a: UpsampleArgs) -> Outcome {
    let p = &mut settings.pipeline;
    if let Some(r) = a.r {
        p.ratio = r;
    }
    if let Some(s) = a.patch_size {
        p.patch_size = s;
    }
    if let Some(c) = a.coverage {
        p.coverage_factor = c;
    }
    if let Some(s) = a.seed {
        p.seed = s;
    }
    if a.jobs.is_some() {
        p.workers = a.jobs;
    }
    apply_graph(&mut p.graph, &a.graph);
    if let Some(cmd) = &a.plugin {
        p.upsampler = UpsamplerSpec::Plugin(PluginSpec::from_command_line(cmd)?);
    } else if let Some(name) = &a.builtin {
        p.upsampler = UpsamplerSpec::Builtin {
            name: name.parse::<Builtin>()?,
        };
    }
    if let (Some(t), UpsamplerSpec::Plugin(spec)) = (a.timeout, &mut p.upsampler) {
        spec.timeout_secs = t;
    }
    p.denoise = if a.no_denoise {
        None
    } else {
        match (p.denoise, a.denoise.policy) {
            (Some(policy), _) => Some(apply_denoise(policy, &a.denoise)),
            (None, Some(_)) => Some(apply_denoise(DenoisePolicy::default(), &a.denoise)),
            (None, None) => None,
        }
    };
    let cloud = read_cloud(&a.input)?;
    let result = upsample_cloud(&cloud, p)?;
    let mut manifest = RunManifest::new("upsample", p, Some(p.seed))?;
    manifest.input("in", &a.input)?;
    let stats = json!({ "patches": result.patches, "denoised_away": result.denoised_away, "input_points": cloud.len() });
    finish(&result.cloud, &a.output, &manifest, stats)
}

#[derive(Serialize)]
struct BenchOutput<'a> {
    schema_version: u32,
    manifest: &'a RunManifest,
    warnings: &'a [PairWarning],
    #[serde(flatten)]
    report: &'a BatchReport,
}

fn bench(mut settings: Settings, a: BenchArgs) -> Outcome {
    if let Some(s) = a.seed {
        settings.pipeline.seed = s;
    }
    let which = selected_metrics(a.which.as_deref(), true)?;
    let ingested = ingest_dataset(&a.dataset, &settings.pairing)?;
    for w in &ingested.warnings {
        eprintln!("warning: {}: {}", w.stem, w.message);
    }
    if ingested.pairs.is_empty() {
        return Err(Failure::argument(anyhow!(
            "no complete input/gt pairs under {}",
            a.dataset.display()
        )));
    }
    let run = || {
        batch_evaluate(
            &ingested.pairs,
            &settings.pipeline,
            &settings.metrics,
            &which,
        )
    };
    let report = match a.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::argument(e.into()))?
            .install(run)?,
        None => run()?,
    };
    let config = json!({ "pipeline": settings.pipeline, "metrics": settings.metrics, "pairing": settings.pairing, "which": which });
    let mut manifest = RunManifest::new("bench", &config, Some(settings.pipeline.seed))?;
    for pair in &ingested.pairs {
        manifest.input(&format!("{}/input", pair.stem), &pair.input)?;
        manifest.input(&format!("{}/gt", pair.stem), &pair.gt)?;
        if let Some(m) = &pair.mesh {
            manifest.input(&format!("{}/mesh", pair.stem), m)?;
        }
    }
    std::fs::create_dir_all(&a.out)
        .map_err(|e| Failure::io(anyhow!("creating {}: {e}", a.out.display())))?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_atomic(&a.out.join("per_pair.csv"), &csv)?;
    write_json(
        &a.out.join("aggregate.json"),
        &BenchOutput {
            schema_version: crate::manifest::SCHEMA_VERSION,
            manifest: &manifest,
            warnings: &ingested.warnings,
            report: &report,
        },
    )?;
    eprintln!(
        "{} pairs evaluated, {} failed",
        report.succeeded, report.failed
    );
    if let Some(failed) = report.pairs.iter().find(|p| p.report.is_none()) {
        let code = failed.error_kind.map_or(1, Failure::code_for);
        return Err(Failure {
            code,
            error: anyhow!(
                "{} of {} pairs failed; first: {}: {}",
                report.failed,
                report.pairs.len(),
                failed.stem,
                failed.error.as_deref().unwrap_or("unknown error")
            ),
        });
    }
    Ok(())
}
