use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use concord::clustering::{kmeans, read_clustering, seeded_init, write_clustering, Clustering, Init, KMeansParams, SeedSet};
use concord::constraints::{transitive_closure_lenient, ConstraintSet};
use concord::corpus::{build_vocabulary, generate, read_label_file, vectorize, write_label_file, Corpus, IndexedLabels, LabelAssignment, SynthSpec};
use concord::evaluation::{coherence, contingency, informativeness, krippendorff_alpha, MetricsReport};
use concord::experiments::{run_named, ExperimentConfig, ExperimentInput, EXPERIMENT_NAMES};
use concord::pckmeans::{pckmeans, write_violations, PckConfig, RunManifest};
use concord::seed;
use concord_service::{AppState, CorpusStore, SYNTHETIC_PREFIX};
use serde::Serialize;

use crate::args::*;
use crate::io::{emit, index_fn, read_matrix, reader, render, stopwords, usage, write_file};

#[derive(Serialize)]
struct PrepSummary {
    documents: usize,
    terms: usize,
    nnz: usize,
    labelings: Vec<String>,
    multi_label_resolved: usize,
}

pub fn prep(a: PrepArgs, format: Format) -> Result<()> {
    let stop = stopwords(a.stopwords.as_deref())?;
    let name = a.corpus.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus");
    let ing = Corpus::read_jsonl(reader(&a.corpus)?, name, &stop, a.seed)
        .with_context(|| format!("reading {}", a.corpus.display()))?;
    let vocab = build_vocabulary(&ing.corpus)?;
    let matrix = vectorize(&ing.corpus, &vocab)?;

    let mut buf = Vec::new();
    matrix.write_triplets(&mut buf)?;
    write_file(&a.out.join("matrix.txt"), &buf)?;
    buf.clear();
    vocab.write_tsv(&mut buf)?;
    write_file(&a.out.join("vocab.tsv"), &buf)?;
    let mut ids = ing.corpus.doc_ids().join("\n");
    ids.push('\n');
    write_file(&a.out.join("docs.txt"), ids.as_bytes())?;
    if !ing.labelings.is_empty() {
        buf.clear();
        write_label_file(&mut buf, &ing.labelings)?;
        write_file(&a.out.join("labels.tsv"), &buf)?;
    }
    if !ing.resolutions.is_empty() {
        buf.clear();
        for r in &ing.resolutions {
            writeln!(buf, "{}", serde_json::to_string(r)?)?;
        }
        write_file(&a.out.join("resolutions.jsonl"), &buf)?;
    }
    emit(
        &PrepSummary {
            documents: ing.corpus.len(),
            terms: vocab.len(),
            nnz: matrix.nnz(),
            labelings: ing.labelings.iter().map(|l| l.annotator_id.clone()).collect(),
            multi_label_resolved: ing.resolutions.len(),
        },
        format,
    )
}

fn save_clustering(path: &Path, clustering: &Clustering, ids: &[String]) -> Result<()> {
    let mut buf = Vec::new();
    write_clustering(&mut buf, clustering, ids)?;
    write_file(path, &buf)
}

pub fn cluster(a: ClusterArgs, format: Format) -> Result<()> {
    let (matrix, ids) = read_matrix(&a.input.matrix, a.input.docs.as_deref())?;
    if a.restarts == 0 {
        return Err(usage("--restarts must be at least 1"));
    }
    let seeds = match &a.seeds_file {
        Some(p) => Some(SeedSet::read(reader(p)?, index_fn(&ids)).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let k = match (&seeds, a.k) {
        (Some(s), Some(k)) if k != s.k() => {
            return Err(usage(format!("--k {k} disagrees with the {} seeded clusters", s.k())));
        }
        (Some(s), _) => s.k(),
        (None, Some(k)) => k,
        (None, None) => return Err(usage("--k is required without --seeds-file")),
    };

    let mut best: Option<(Clustering, KMeansParams)> = None;
    for r in 0..a.restarts {
        let run_seed = if r == 0 { a.seed } else { seed::derive(a.seed, &[r as u64]) };
        let params = KMeansParams { k, metric: a.metric.into(), rng_seed: run_seed, max_iters: a.max_iters };
        let init = match &seeds {
            Some(s) => Init::Centroids(seeded_init(s, &matrix, a.seed_mode.into(), run_seed)?),
            None => Init::Random,
        };
        let c = kmeans(&matrix, &params, &init)?;
        if best.as_ref().is_none_or(|(b, _)| c.potential < b.potential) {
            best = Some((c, params));
        }
    }
    let (clustering, params) = best.expect("at least one restart");
    save_clustering(&a.out, &clustering, &ids)?;
    emit(&RunManifest::for_kmeans(&params, &clustering), format)
}

pub fn pck(a: PckArgs, format: Format) -> Result<()> {
    let (matrix, ids) = read_matrix(&a.input.matrix, a.input.docs.as_deref())?;
    let mut set = ConstraintSet::read(reader(&a.constraints)?, index_fn(&ids))
        .with_context(|| format!("reading {}", a.constraints.display()))?;
    if a.lenient {
        let (closed, dropped) = transitive_closure_lenient(&set);
        if !dropped.is_empty() {
            eprintln!("warning: dropped {} cannot-link constraints inside must-link groups", dropped.len());
        }
        set = closed;
    }
    let config = PckConfig { max_iters: a.max_iters, ..PckConfig::new(a.k, a.w, a.metric.into(), a.seed) };
    let result = pckmeans(&matrix, &set, &config)?;
    save_clustering(&a.out, &result.clustering, &ids)?;
    if let Some(p) = &a.violations {
        let mut buf = Vec::new();
        write_violations(&mut buf, &result.violated, &ids)?;
        write_file(p, &buf)?;
    }
    emit(&result.manifest(&config, set.len()), format)
}

fn read_labels(a: &MetricsArgs) -> Result<Option<Vec<LabelAssignment>>> {
    match &a.labels {
        Some(p) => Ok(Some(read_label_file(reader(p)?).with_context(|| format!("reading {}", p.display()))?)),
        None => Ok(None),
    }
}

fn index_labels(l: &LabelAssignment, ids: &[String]) -> Result<IndexedLabels> {
    let find = index_fn(ids);
    let pairs = l
        .labels
        .iter()
        .map(|(doc, label)| {
            find(doc).map(|i| (i, label.clone())).ok_or_else(|| anyhow::anyhow!("unknown document `{doc}` in labels"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndexedLabels::new(&l.annotator_id, ids.len(), pairs))
}

fn clustering_table(a: &MetricsArgs, labelings: &[LabelAssignment]) -> Result<MetricsReport> {
    let path = a.clustering.as_ref().ok_or_else(|| usage("mi and nmi need --clustering"))?;
    let file = read_clustering(reader(path)?).with_context(|| format!("reading {}", path.display()))?;
    let labels = match &a.annotator {
        Some(id) => labelings
            .iter()
            .find(|l| &l.annotator_id == id)
            .ok_or_else(|| usage(format!("no labeling `{id}` in --labels")))?,
        None => labelings.first().ok_or_else(|| usage("--labels holds no labeling"))?,
    };
    let indexed = index_labels(labels, &file.doc_ids)?;
    let k = file
        .footer
        .map(|f| f.k)
        .unwrap_or_else(|| file.assignment.iter().max().map_or(0, |&h| h + 1));
    Ok(MetricsReport::with_table(contingency(&indexed, &file.assignment, k)?)?)
}

fn informativeness_of(a: &MetricsArgs) -> Result<f64> {
    let (Some(cp), Some(rp)) = (&a.constraints, &a.reference) else {
        return Err(usage("informativeness needs --constraints and --reference"));
    };
    let reference = read_clustering(reader(rp)?).with_context(|| format!("reading {}", rp.display()))?;
    let set = ConstraintSet::read(reader(cp)?, index_fn(&reference.doc_ids))
        .with_context(|| format!("reading {}", cp.display()))?;
    Ok(informativeness(&set, &reference.assignment)?)
}

fn coherence_of(a: &MetricsArgs) -> Result<f64> {
    let (Some(cp), Some(mp)) = (&a.constraints, &a.matrix) else {
        return Err(usage("coherence needs --constraints and --matrix"));
    };
    let (matrix, ids) = read_matrix(mp, a.docs.as_deref())?;
    let set = ConstraintSet::read(reader(cp)?, index_fn(&ids)).with_context(|| format!("reading {}", cp.display()))?;
    Ok(coherence(&set, &matrix)?)
}

fn alpha_of(a: &MetricsArgs, labelings: &[LabelAssignment]) -> Result<f64> {
    let chosen: Vec<LabelAssignment> = if a.annotators.is_empty() {
        labelings.to_vec()
    } else {
        a.annotators
            .iter()
            .map(|id| {
                labelings
                    .iter()
                    .find(|l| &l.annotator_id == id)
                    .cloned()
                    .ok_or_else(|| usage(format!("no labeling `{id}` in --labels")))
            })
            .collect::<Result<_>>()?
    };
    Ok(krippendorff_alpha(&chosen)?)
}

pub fn metrics(a: MetricsArgs, format: Format) -> Result<()> {
    let labels = read_labels(&a)?;
    let need_labels = |what: &str| labels.as_deref().ok_or_else(|| usage(format!("{what} needs --labels")));
    let text = match a.kind {
        MetricKind::Mi => format!("{}\n", clustering_table(&a, need_labels("mi")?)?.mi.expect("mi")),
        MetricKind::Nmi => format!("{}\n", clustering_table(&a, need_labels("nmi")?)?.nmi.expect("nmi")),
        MetricKind::Informativeness => format!("{}\n", informativeness_of(&a)?),
        MetricKind::Coherence => format!("{}\n", coherence_of(&a)?),
        MetricKind::Alpha => format!("{}\n", alpha_of(&a, need_labels("alpha")?)?),
        MetricKind::All => {
            let mut report = match (&labels, &a.clustering) {
                (Some(l), Some(_)) => clustering_table(&a, l)?,
                _ => MetricsReport::default(),
            };
            if a.constraints.is_some() && a.reference.is_some() {
                report.informativeness = Some(informativeness_of(&a)?);
            }
            if a.constraints.is_some() && a.matrix.is_some() {
                report.coherence = Some(coherence_of(&a)?);
            }
            if let Some(l) = &labels {
                if l.len() >= 2 {
                    report.alpha = Some(alpha_of(&a, l)?);
                }
            }
            if report == MetricsReport::default() {
                return Err(usage("no metric can be computed from the given inputs"));
            }
            render(&report, format)?
        }
    };
    match &a.out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

/// Corpus named by an experiment config: a synthetic reference or a path
/// relative to the config file.
fn load_experiment_corpus(config: &ExperimentConfig, base: &Path) -> Result<(Corpus, Vec<LabelAssignment>)> {
    let (corpus, mut labelings) = if config.corpus_ref.starts_with(SYNTHETIC_PREFIX) {
        CorpusStore::new(None).load(&config.corpus_ref)?
    } else {
        let path = base.join(&config.corpus_ref);
        let stop = stopwords(None)?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus").to_string();
        let ing = Corpus::read_jsonl(reader(&path)?, &name, &stop, config.rng_seed)
            .with_context(|| format!("reading {}", path.display()))?;
        (ing.corpus, ing.labelings)
    };
    for f in &config.label_files {
        let path = base.join(f);
        for l in read_label_file(reader(&path)?).with_context(|| format!("reading {}", path.display()))? {
            if labelings.iter().any(|x| x.annotator_id == l.annotator_id) {
                bail!("labeling `{}` in {} is already defined", l.annotator_id, path.display());
            }
            labelings.push(l);
        }
    }
    Ok((corpus, labelings))
}

pub fn experiment(a: ExperimentArgs, format: Format) -> Result<()> {
    if !EXPERIMENT_NAMES.contains(&a.name.as_str()) {
        return Err(usage(format!("unknown experiment `{}` (expected one of {})", a.name, EXPERIMENT_NAMES.join(", "))));
    }
    let text = std::fs::read_to_string(&a.config).with_context(|| format!("cannot read {}", a.config.display()))?;
    let mut config: ExperimentConfig =
        toml::from_str(&text).with_context(|| format!("parsing {}", a.config.display()))?;
    if let Some(s) = a.seed {
        config.rng_seed = s;
    }
    if config.corpus_ref.is_empty() {
        return Err(usage(format!("{} sets no corpus_ref", a.config.display())));
    }
    let base = a.config.parent().unwrap_or(Path::new("."));
    let (corpus, labelings) = load_experiment_corpus(&config, base)?;
    let input = ExperimentInput::from_corpus(&corpus, &labelings, &config)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = a.jobs {
        if j == 0 {
            return Err(usage("--jobs must be at least 1"));
        }
        pool = pool.num_threads(j);
    }
    let output = pool.build()?.install(|| run_named(&a.name, &config, &input))?;
    output.write_to(&a.out, format.into())?;
    let mut out = std::io::stdout().lock();
    out.write_all(output.summary(format.into()).as_bytes())?;
    Ok(out.flush()?)
}

#[derive(Serialize)]
struct SynthSummary {
    name: String,
    documents: usize,
    classes: usize,
}

pub fn synth(a: SynthArgs, format: Format) -> Result<()> {
    let spec = SynthSpec {
        doc_len: a.doc_len,
        mixed_classes: a.mixed,
        ..SynthSpec::new(a.sizes, a.terms, a.overlap, a.seed)
    };
    let (corpus, truth) = generate(&spec)?;
    let mut buf = Vec::new();
    corpus.write_jsonl(&mut buf, std::slice::from_ref(&truth))?;
    write_file(&a.out, &buf)?;
    emit(&SynthSummary { name: spec.name, documents: corpus.len(), classes: spec.docs_per_class.len() }, format)
}

pub fn serve(a: ServeArgs) -> Result<()> {
    let mut state = AppState::new(CorpusStore::new(a.corpus_dir));
    if let Some(dir) = a.log_dir {
        state = state.with_log_dir(dir)?;
    }
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.addr).await.with_context(|| format!("cannot bind {}", a.addr))?;
        println!("listening on http://{}", listener.local_addr()?);
        std::io::stdout().flush()?;
        concord_service::serve_on(listener, state).await?;
        Ok(())
    })
}

