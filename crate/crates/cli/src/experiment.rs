use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use influx_core::analysis::{
    artifact_scan, consistency_removal_overlap, consistency_token_influence, feature_values,
    sanity_check, ArtifactReport, Cell, Feature, Ranking, RemovalType, SanityConfig, SanityReport,
    EXTREMES,
};
use influx_core::corpus::{negate_hypothesis, HansLexicon};
use influx_core::model::load_checkpoint;
use influx_core::{Dataset, Example, InfluenceResult};
use log::{info, warn};
use serde::Serialize;

use crate::data::{load_like, load_train};
use crate::explain::limited;
use crate::influence::{CachedInfluence, MethodArgs};
use crate::manifest::Manifest;
use crate::report::{file_stem, sci, write_json, write_records, Row};
use crate::GlobalOpts;

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Which {
    Sanity,
    Consistency1,
    Consistency2,
    Artifact,
}

impl Which {
    fn as_str(self) -> &'static str {
        match self {
            Which::Sanity => "sanity",
            Which::Consistency1 => "consistency1",
            Which::Consistency2 => "consistency2",
            Which::Artifact => "artifact",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum RankingArg {
    Signed,
    Absolute,
}

#[derive(Args, Debug, Serialize)]
pub struct ExperimentArgs {
    /// Experiment to run.
    #[arg(long, value_enum)]
    pub which: Which,
    /// Checkpoint written by `train`. `sanity` retrains from its
    /// architecture and training configuration.
    #[arg(long)]
    pub model: PathBuf,
    /// Training data the checkpoint was trained on.
    #[arg(long)]
    pub train: PathBuf,
    /// Test examples to analyse.
    #[arg(long)]
    pub test: PathBuf,
    /// Use only the first N test examples.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Fraction of the training set removed per run (sanity).
    #[arg(long, default_value_t = 0.10)]
    pub fraction: f64,
    /// Number of retraining seeds, counting up from --seed (sanity).
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    /// Comma-separated features: overlap, negation, random, token:<word> (artifact).
    #[arg(long, value_delimiter = ',', default_value = "overlap,negation")]
    pub features: Vec<String>,
    /// Also scan the test set with every hypothesis negated (artifact).
    #[arg(long)]
    pub negate: bool,
    /// How "top influential" is ranked (consistency experiments).
    #[arg(long, value_enum, default_value_t = RankingArg::Signed)]
    pub ranking: RankingArg,
    #[command(flatten)]
    pub influence: MethodArgs,
}

pub fn run(global: &GlobalOpts, args: &ExperimentArgs) -> Result<()> {
    let mut manifest = Manifest::new("experiment", global, args)?;
    for p in [&args.model, &args.train, &args.test] {
        manifest.input(p)?;
    }
    let checkpoint = load_checkpoint(&args.model)
        .with_context(|| format!("loading checkpoint {}", args.model.display()))?;
    let train = load_train(&args.train)?;
    let tests = limited(load_like(&args.test, &train)?, args.limit);
    if tests.is_empty() {
        bail!("{} holds no test examples", args.test.display());
    }
    let method = args.influence.method(global.seed);
    let ranking = match args.ranking {
        RankingArg::Signed => Ranking::Signed,
        RankingArg::Absolute => Ranking::Absolute,
    };
    let which = args.which.as_str();
    let dir = &global.out_dir;
    let params = &checkpoint.params;

    let (rows, table) = match args.which {
        Which::Sanity => {
            let train_config = checkpoint
                .train_config
                .clone()
                .context("the checkpoint does not record its training configuration")?;
            let config = SanityConfig {
                fraction: args.fraction,
                seeds: (0..args.seeds as u64).map(|k| global.seed + k).collect(),
            };
            let report = sanity_check(
                &train,
                &params.arch,
                params.vocab.clone(),
                &train_config,
                &tests,
                &method,
                &config,
            )?;
            write_json(&mut manifest, &dir.join("sanity.summary.json"), &report)?;
            let rows = report
                .records
                .iter()
                .map(|r| {
                    Row::new(
                        which,
                        &r.test_id,
                        r.removal.as_str(),
                        format!("seed={}", r.seed),
                        r.delta,
                    )
                })
                .collect();
            (rows, sanity_table(&report))
        }
        Which::Consistency1 | Which::Consistency2 => {
            let source = CachedInfluence::new(global, params, &train, method)?;
            let results = source.all(&tests)?;
            let (cells, records, title) = if args.which == Which::Consistency1 {
                let r = consistency_token_influence(params, &train, &tests, &results, ranking)?;
                write_json(&mut manifest, &dir.join("consistency1.summary.json"), &r)?;
                (
                    r.cells,
                    r.records,
                    "Average influence z of training examples containing the token",
                )
            } else {
                let r = consistency_removal_overlap(
                    params,
                    &tests,
                    &results,
                    source.engine()?,
                    ranking,
                )?;
                write_json(&mut manifest, &dir.join("consistency2.summary.json"), &r)?;
                (
                    r.cells,
                    r.records,
                    "Overlap rate of top influential sets after removing the token",
                )
            };
            let rows = records
                .iter()
                .map(|r| Row::new(which, &r.test_id, &r.extreme, r.granularity, r.value))
                .collect();
            (rows, cell_table(title, &cells))
        }
        Which::Artifact => {
            let features = args
                .features
                .iter()
                .map(|f| Feature::parse(f.trim(), global.seed))
                .collect::<influx_core::Result<Vec<_>>>()?;
            let source = CachedInfluence::new(global, params, &train, method)?;
            let mut sets = vec![("original", tests.clone())];
            if args.negate {
                sets.push(("negated", negate_all(&tests)?));
            }
            let mut rows = Vec::new();
            let mut scans = Vec::new();
            for (set, examples) in &sets {
                let results = source.all(examples)?;
                let reports = artifact_scan(&train, &results, &features)?;
                for report in &reports {
                    for f in &report.fits {
                        let cond = format!("{set}:{}", report.feature_name);
                        for (coef, v) in [
                            ("a", f.fit.a),
                            ("b", f.fit.b),
                            ("c", f.fit.c),
                            ("r2", f.fit.r2),
                        ] {
                            rows.push(Row::new(which, &f.test_id, &cond, coef, v));
                        }
                    }
                }
                write_scatter(&mut manifest, global, &train, set, &features, &results)?;
                scans.push(ArtifactSet {
                    test_set: set.to_string(),
                    reports,
                });
            }
            write_json(&mut manifest, &dir.join("artifact.summary.json"), &scans)?;
            let table = artifact_table(&scans, &features);
            (rows, table)
        }
    };
    write_records(&mut manifest, dir, which, global.format, &rows)?;
    manifest.write(&dir.join(format!("{which}.table.txt")), table.as_bytes())?;
    manifest.finish()?;
    print!("{table}");
    info!("{which}: {} records", rows.len());
    Ok(())
}

#[derive(Serialize)]
struct ArtifactSet {
    test_set: String,
    reports: Vec<ArtifactReport>,
}

fn negate_all(tests: &[Example]) -> Result<Vec<Example>> {
    let lexicon = HansLexicon::default();
    let mut out = Vec::with_capacity(tests.len());
    for t in tests {
        match negate_hypothesis(t, &lexicon) {
            Ok(n) => out.push(n),
            Err(e) => warn!("leaving `{}` out of the negated set: {e}", t.id),
        }
    }
    if out.is_empty() {
        bail!("no test hypothesis could be negated");
    }
    Ok(out)
}

fn write_scatter(
    manifest: &mut Manifest,
    global: &GlobalOpts,
    train: &Dataset,
    set: &str,
    features: &[Feature],
    results: &[InfluenceResult],
) -> Result<()> {
    #[derive(Serialize)]
    struct Point {
        artifact: f64,
        z: f64,
    }
    for feature in features {
        let xs = feature_values(feature, train)?;
        let dir = global
            .out_dir
            .join("scatter")
            .join(set)
            .join(file_stem(&feature.name()));
        for r in results {
            let points: Vec<Point> = xs
                .iter()
                .zip(&r.z_scores)
                .map(|(&artifact, &z)| Point { artifact, z })
                .collect();
            write_records(
                manifest,
                &dir,
                &file_stem(&r.test_example_id),
                global.format,
                &points,
            )?;
        }
    }
    Ok(())
}

fn removal_label(r: RemovalType) -> &'static str {
    match r {
        RemovalType::Positive => "Most positive",
        RemovalType::Negative => "Most negative",
        RemovalType::Least => "Least influential",
        RemovalType::Random => "Random",
    }
}

fn sanity_table(report: &SanityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Removal of {:.0}% of training examples ({} per run), {} seeds",
        100.0 * report.fraction,
        report.removed_per_run,
        report.seeds.len()
    );
    let _ = writeln!(s, "{:<20}{:>26}", "Removal type", "Δ confidence (± s.e.)");
    for row in &report.rows {
        let _ = writeln!(
            s,
            "{:<20}{:>26}",
            removal_label(row.removal),
            format!("{:+.2}% (±{:.2}%)", row.mean, row.std_err)
        );
    }
    if report.skipped > 0 {
        let _ = writeln!(s, "skipped runs: {}", report.skipped);
    }
    s
}

fn cell_table(title: &str, cells: &[Cell]) -> String {
    let mut grans: Vec<f64> = cells.iter().map(|c| c.granularity).collect();
    grans.dedup();
    let mut s = String::new();
    let _ = writeln!(s, "{title}");
    let _ = write!(s, "{:<16}", "Token");
    for g in &grans {
        let _ = write!(s, "{:>20}", format!("top {}%", 100.0 * g));
    }
    let _ = writeln!(s);
    for name in EXTREMES {
        let _ = write!(s, "{name:<16}");
        for g in &grans {
            let cell = cells
                .iter()
                .find(|c| c.extreme == name && c.granularity == *g);
            let text = match cell {
                Some(c) if c.count > 0 => format!("{:.3} (±{:.3})", c.mean, c.std_err),
                _ => "n/a".to_string(),
            };
            let _ = write!(s, "{text:>20}");
        }
        let _ = writeln!(s);
    }
    s
}

fn artifact_table(scans: &[ArtifactSet], features: &[Feature]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Average quadratic coefficient of the influence-artifact distribution"
    );
    let _ = write!(s, "{:<12}", "Test set");
    for f in features {
        let _ = write!(s, "{:>24}", format!("{} coef", f.name()));
    }
    let _ = writeln!(s);
    for scan in scans {
        let _ = write!(s, "{:<12}", scan.test_set);
        for r in &scan.reports {
            let _ = write!(s, "{:>24}", format!("{} (n={})", sci(r.mean_a), r.included));
        }
        let _ = writeln!(s);
    }
    s
}
