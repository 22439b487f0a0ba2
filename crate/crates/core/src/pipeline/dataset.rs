//! Dataset ingestion by shared file stem, and batch evaluation.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{upsample_cloud, PipelineConfig};
use crate::error::{Error, ErrorKind, Result};
use crate::io::{load_cloud, load_mesh, CloudFormat};
use crate::metrics::{
    csv_error, csv_header, evaluate_all, Metric, MetricConfig, MetricReport, MetricValues,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairingRules {
    /// Subdirectory holding the low-resolution inputs.
    pub input_dir: String,
    /// Subdirectory holding the ground-truth clouds.
    pub gt_dir: String,
    /// Optional subdirectory holding meshes for P2F.
    pub mesh_dir: Option<String>,
    pub cloud_extensions: Vec<String>,
    pub mesh_extensions: Vec<String>,
}

impl Default for PairingRules {
    fn default() -> Self {
        PairingRules {
            input_dir: "input".into(),
            gt_dir: "gt".into(),
            mesh_dir: Some("mesh".into()),
            cloud_extensions: vec!["xyz".into(), "ply".into()],
            mesh_extensions: vec!["off".into(), "ply".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetPair {
    pub stem: String,
    pub input: PathBuf,
    pub gt: PathBuf,
    pub mesh: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairWarning {
    pub stem: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ingested {
    pub pairs: Vec<DatasetPair>,
    pub warnings: Vec<PairWarning>,
}

/// Files in `dir` with one of `extensions`, keyed by stem. When a stem has
/// several files the lexicographically first name wins and a warning is
/// recorded.
fn files_by_stem(
    dir: &Path,
    extensions: &[String],
    warnings: &mut Vec<PairWarning>,
) -> Result<BTreeMap<String, PathBuf>> {
    let mut found: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        let stem = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned);
        if let (Some(ext), Some(stem)) = (ext, stem) {
            if extensions.iter().any(|e| e.eq_ignore_ascii_case(&ext)) {
                found.entry(stem).or_default().push(path);
            }
        }
    }
    Ok(found
        .into_iter()
        .map(|(stem, mut paths)| {
            paths.sort();
            if paths.len() > 1 {
                warnings.push(PairWarning {
                    stem: stem.clone(),
                    message: format!(
                        "several files in {}; using {}",
                        dir.display(),
                        paths[0].display()
                    ),
                });
            }
            (stem, paths.swap_remove(0))
        })
        .collect())
}

/// Pairs inputs with ground truth (and meshes when configured) by stem, in
/// lexicographic stem order. Unpaired stems become warnings.
pub fn ingest_dataset(root: impl AsRef<Path>, rules: &PairingRules) -> Result<Ingested> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let mut warnings = Vec::new();
    let mut scan = |dir: &str, extensions: &[String]| -> Result<BTreeMap<String, PathBuf>> {
        let dir = root.join(dir);
        if dir.is_dir() {
            files_by_stem(&dir, extensions, &mut warnings)
        } else {
            Ok(BTreeMap::new())
        }
    };
    let inputs = scan(&rules.input_dir, &rules.cloud_extensions)?;
    let gts = scan(&rules.gt_dir, &rules.cloud_extensions)?;
    let meshes = match &rules.mesh_dir {
        Some(d) => scan(d, &rules.mesh_extensions)?,
        None => BTreeMap::new(),
    };
    let mut pairs = Vec::new();
    for (stem, input) in &inputs {
        match gts.get(stem) {
            Some(gt) => pairs.push(DatasetPair {
                stem: stem.clone(),
                input: input.clone(),
                gt: gt.clone(),
                mesh: meshes.get(stem).cloned(),
            }),
            None => warnings.push(PairWarning {
                stem: stem.clone(),
                message: "ground truth missing".into(),
            }),
        }
    }
    for stem in gts.keys().filter(|s| !inputs.contains_key(*s)) {
        warnings.push(PairWarning {
            stem: stem.clone(),
            message: "input missing".into(),
        });
    }
    warnings.sort_by(|a, b| a.stem.cmp(&b.stem));
    Ok(Ingested { pairs, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub stem: String,
    pub report: Option<MetricReport>,
    pub error: Option<String>,
    #[serde(skip)]
    pub error_kind: Option<ErrorKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub pairs: Vec<PairOutcome>,
    /// Arithmetic mean per metric over the successful pairs.
    pub aggregate: MetricValues,
    pub succeeded: usize,
    pub failed: usize,
}

impl BatchReport {
    /// One row per pair: `stem,status,<metric columns>`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["stem", "status"];
        header.extend(csv_header());
        w.write_record(&header).map_err(csv_error)?;
        for p in &self.pairs {
            let mut row = vec![p.stem.clone()];
            match &p.report {
                Some(r) => {
                    row.push("ok".into());
                    row.extend(r.values.csv_cells());
                }
                None => {
                    row.push("failed".into());
                    row.extend(std::iter::repeat_n(String::new(), Metric::ALL.len()));
                }
            }
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean per metric over the reports that carry it.
pub fn aggregate(reports: &[&MetricReport]) -> MetricValues {
    let mean = |get: fn(&MetricValues) -> Option<f64>| {
        let vals: Vec<f64> = reports.iter().filter_map(|r| get(&r.values)).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    MetricValues {
        cd: mean(|v| v.cd),
        hd: mean(|v| v.hd),
        p2f: mean(|v| v.p2f),
        p2f_max: mean(|v| v.p2f_max),
        uniformity: mean(|v| v.uniformity),
        hf_cd: mean(|v| v.hf_cd),
        hf_hd: mean(|v| v.hf_hd),
    }
}

fn evaluate_pair(
    pair: &DatasetPair,
    pipeline: &PipelineConfig,
    metric: &MetricConfig,
    which: &[Metric],
) -> Result<MetricReport> {
    let input = load_cloud::<f64>(&pair.input, CloudFormat::from_path(&pair.input))?;
    let gt = load_cloud::<f64>(&pair.gt, CloudFormat::from_path(&pair.gt))?;
    let mesh = pair.mesh.as_ref().map(load_mesh::<f64>).transpose()?;
    let which: Vec<Metric> = which
        .iter()
        .copied()
        .filter(|&m| m != Metric::P2f || mesh.is_some())
        .collect();
    let up = upsample_cloud(&input, pipeline)?;
    let config = MetricConfig {
        ratio: Some(pipeline.ratio),
        input_size: Some(input.len()),
        ..*metric
    };
    let mut report = evaluate_all(&up.cloud, &gt, mesh.as_ref(), &config, &which)?;
    report
        .inputs
        .insert("stem".into(), pair.stem.clone().into());
    report
        .inputs
        .insert("input".into(), pair.input.display().to_string().into());
    report
        .inputs
        .insert("gt".into(), pair.gt.display().to_string().into());
    if let Some(m) = &pair.mesh {
        report
            .inputs
            .insert("mesh".into(), m.display().to_string().into());
    }
    report
        .inputs
        .insert("input_points".into(), input.len().into());
    Ok(report)
}

/// Upsamples and evaluates every pair (in parallel on the current rayon
/// pool); failed pairs are recorded and left out of the aggregate. P2F is
/// skipped for pairs without a mesh.
pub fn batch_evaluate(
    pairs: &[DatasetPair],
    pipeline: &PipelineConfig,
    metric: &MetricConfig,
    which: &[Metric],
) -> Result<BatchReport> {
    if pairs.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let outcomes: Vec<PairOutcome> = pairs
        .par_iter()
        .map(|pair| match evaluate_pair(pair, pipeline, metric, which) {
            Ok(report) => PairOutcome {
                stem: pair.stem.clone(),
                report: Some(report),
                error: None,
                error_kind: None,
            },
            Err(e) => PairOutcome {
                stem: pair.stem.clone(),
                report: None,
                error: Some(e.to_string()),
                error_kind: Some(e.kind()),
            },
        })
        .collect();
    let ok: Vec<&MetricReport> = outcomes.iter().filter_map(|o| o.report.as_ref()).collect();
    Ok(BatchReport {
        aggregate: aggregate(&ok),
        succeeded: ok.len(),
        failed: outcomes.len() - ok.len(),
        pairs: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{save_cloud, save_mesh};
    use crate::sampling::{monte_carlo_mesh, poisson_disk_sample};
    use crate::shapes;
    use crate::TriangleMesh;

    fn touch(dir: &Path, name: &str) {
        fs::create_dir_all(dir).unwrap();
        fs::write(dir.join(name), "0 0 0\n").unwrap();
    }

    #[test]
    fn pairs_by_stem() {
        let root = tempfile::tempdir().unwrap();
        let r = root.path();
        for s in ["b", "a"] {
            touch(&r.join("input"), &format!("{s}.xyz"));
            touch(&r.join("gt"), &format!("{s}.xyz"));
        }
        let got = ingest_dataset(r, &PairingRules::default()).unwrap();
        assert_eq!(
            got.pairs
                .iter()
                .map(|p| p.stem.as_str())
                .collect::<Vec<_>>(),
            ["a", "b"]
        );
        assert!(got.warnings.is_empty());

        fs::remove_file(r.join("gt/b.xyz")).unwrap();
        touch(&r.join("input"), "notes.txt");
        let got = ingest_dataset(r, &PairingRules::default()).unwrap();
        assert_eq!(got.pairs.len(), 1);
        assert_eq!(got.warnings.len(), 1);
        assert_eq!(got.warnings[0].stem, "b");
    }

    #[test]
    fn twenty_seven_clouds() {
        let root = tempfile::tempdir().unwrap();
        for i in 0..27 {
            touch(&root.path().join("input"), &format!("shape{i:02}.xyz"));
            touch(&root.path().join("gt"), &format!("shape{i:02}.ply"));
            touch(&root.path().join("mesh"), &format!("shape{i:02}.off"));
        }
        let got = ingest_dataset(root.path(), &PairingRules::default()).unwrap();
        assert_eq!(got.pairs.len(), 27);
        assert!(got.pairs.iter().all(|p| p.mesh.is_some()));
    }

    #[test]
    fn missing_root_is_an_io_error() {
        assert!(matches!(
            ingest_dataset("/nonexistent/dataset", &PairingRules::default()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn batch_aggregates_and_failures() {
        let root = tempfile::tempdir().unwrap();
        let r = root.path();
        for d in ["input", "gt", "mesh"] {
            fs::create_dir_all(r.join(d)).unwrap();
        }
        let mesh: TriangleMesh<f64> = shapes::icosphere(2);
        for (i, stem) in ["one", "two"].iter().enumerate() {
            let lr = monte_carlo_mesh(&mesh, 512, i as u64).unwrap();
            let gt = poisson_disk_sample(&mesh, 2048, i as u64).unwrap();
            save_cloud(&lr, r.join(format!("input/{stem}.xyz")), CloudFormat::Xyz).unwrap();
            save_cloud(
                &gt,
                r.join(format!("gt/{stem}.ply")),
                CloudFormat::PlyBinary,
            )
            .unwrap();
            save_mesh(&mesh, r.join(format!("mesh/{stem}.off"))).unwrap();
        }
        fs::write(r.join("input/bad.xyz"), "0 0 0\n1 1 1\n").unwrap();
        fs::write(r.join("gt/bad.xyz"), "0 0 0\n").unwrap();

        let ingested = ingest_dataset(r, &PairingRules::default()).unwrap();
        assert_eq!(ingested.pairs.len(), 3);
        let metric = MetricConfig {
            hf_m: 512,
            ..Default::default()
        };
        let pipeline = PipelineConfig::default();
        let report = batch_evaluate(&ingested.pairs, &pipeline, &metric, &Metric::ALL).unwrap();
        assert_eq!((report.succeeded, report.failed), (2, 1));
        let ok: Vec<_> = report
            .pairs
            .iter()
            .filter_map(|p| p.report.as_ref())
            .collect();
        let hand = (ok[0].values.cd.unwrap() + ok[1].values.cd.unwrap()) / 2.0;
        assert_eq!(report.aggregate.cd, Some(hand));
        assert!(report.aggregate.p2f.is_some());

        let again = batch_evaluate(&ingested.pairs, &pipeline, &metric, &Metric::ALL).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        report.write_csv(&mut a).unwrap();
        again.write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        assert!(String::from_utf8(a).unwrap().contains("bad,failed,"));
    }
}
