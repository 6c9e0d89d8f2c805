mod common;

use common::*;
use concord::clustering::{kmeans, Init, KMeansParams};
use concord::constraints::constraints_from_labels;
use concord::corpus::{LabelAssignment, SynthSpec};
use concord::evaluation::informativeness;
use concord::experiments::*;
use concord::Error;
use rand::seq::SliceRandom;

fn relabel(truth: &LabelAssignment, id: &str, f: impl Fn(usize, &str) -> String) -> LabelAssignment {
    LabelAssignment::with_labels(id, truth.labels.iter().enumerate().map(|(i, (d, l))| (d.clone(), f(i, l))))
}

fn table_iii_input(seed: u64, config: &ExperimentConfig) -> ExperimentInput {
    let s = synth(&SynthSpec::table_iii(seed));
    let split = relabel(&s.truth, "split", |i, l| if l == "other" && i % 2 == 0 { "other-b".into() } else { l.into() });
    let merge = relabel(&s.truth, "merge", |_, l| if l == "marriage" { "medicine".into() } else { l.into() });
    ExperimentInput::from_corpus(&s.corpus, &[s.truth.clone(), split, merge], config).unwrap()
}

fn small_grid() -> ExperimentConfig {
    ExperimentConfig { constraint_grid: vec![20, 100, 300], trials: 2, w: 10.0, rng_seed: 9, ..Default::default() }
}

#[test]
fn cells_do_not_depend_on_evaluation_order() {
    let config = small_grid();
    let input = table_iii_input(1, &config);
    for exp in [Experiment::Exp1, Experiment::Exp3] {
        let batch = match exp {
            Experiment::Exp1 => run_experiment_1(&config, &input),
            _ => run_experiment_3(&config, &input),
        }
        .unwrap();
        let mut jobs: Vec<(usize, usize, usize)> = Vec::new();
        for a in 0..input.annotators.len() {
            for &x in &config.constraint_grid {
                for t in 0..config.trials {
                    jobs.push((a, x, t));
                }
            }
        }
        jobs.shuffle(&mut rng(4));
        for (a, x, t) in jobs {
            let c = cell(&config, &input, exp, a, x, t).unwrap();
            let expected = batch
                .cells
                .iter()
                .find(|b| b.annotator == c.annotator && b.n_constraints == x && b.trial == t)
                .unwrap();
            assert_eq!(&c, expected);
        }
    }
}

#[test]
fn experiments_are_reproducible() {
    let config = small_grid();
    let input = table_iii_input(2, &config);
    for name in EXPERIMENT_NAMES.iter() {
        let mut c = config.clone();
        c.trials_seeding = 3;
        let a = run_named(name, &c, &input);
        let b = run_named(name, &c, &input);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.summary(ReportFormat::Json), b.summary(ReportFormat::Json), "{name}");
                assert_eq!(a.records, b.records, "{name}");
            }
            // The blind test needs unlabeled documents, which this corpus lacks.
            (Err(Error::InsufficientData(_)), Err(Error::InsufficientData(_))) => assert_eq!(*name, "blind"),
            (a, b) => panic!("{name}: {a:?} vs {b:?}"),
        }
    }
}

#[test]
fn full_constraints_recover_own_labels() {
    let config = ExperimentConfig { constraint_grid: vec![10, 300], trials: 3, ..small_grid() };
    let input = table_iii_input(3, &config);
    let r = run_experiment_1(&config, &input).unwrap();
    for ann in ["truth", "split", "merge"].iter().filter(|a| input.annotators.iter().any(|l| &l.annotator_id == *a)) {
        let s = r.series(ann, "nmi").unwrap();
        assert_eq!(*s.mean_y.last().unwrap(), 1.0, "{ann}");
        assert_eq!(*s.std_y.last().unwrap(), 0.0, "{ann}");
    }
    assert!(r.cells.iter().filter(|c| c.n_constraints == 300).all(|c| c.run.as_ref().unwrap().violated == 0));
}

#[test]
fn zero_grid_point_is_rejected() {
    let config = ExperimentConfig { constraint_grid: vec![0, 10], ..small_grid() };
    let input = table_iii_input(1, &config);
    assert!(matches!(run_experiment_1(&config, &input), Err(Error::InvalidParameter(_))));
    let config = ExperimentConfig { constraint_grid: vec![301], ..small_grid() };
    assert!(matches!(run_experiment_2(&config, &input), Err(Error::TooManyPairs { requested: 301, available: 300 })));
}

#[test]
fn reference_labels_are_uninformative() {
    let s = synth(&SynthSpec::table_iii(5));
    let config = ExperimentConfig { constraint_grid: vec![10, 50, 150], trials: 1, ..small_grid() };
    let truth_k = s.labels.k();
    let params = KMeansParams { k: truth_k, metric: config.metric, rng_seed: config.run_seed(0), max_iters: config.max_iters };
    let reference = kmeans(&s.matrix, &params, &Init::Random).unwrap();
    let own = LabelAssignment::with_labels(
        "reference",
        s.corpus.doc_ids().into_iter().zip(reference.assignment.iter().map(|h| format!("c{h}"))),
    );
    let input = ExperimentInput::from_corpus(&s.corpus, &[s.truth.clone(), own], &config).unwrap();
    let r = run_experiment_2(&config, &input).unwrap();
    assert!(r.cells.iter().all(|c| c.informativeness == Some(0.0)));

    let set = constraints_from_labels(&input.annotators[0], 150, 1).unwrap();
    assert_eq!(informativeness(&set.inverted(), &reference.assignment).unwrap(), 1.0);
}

#[test]
fn truth_annotator_is_uninformative_against_truth_reference() {
    let s = synth(&SynthSpec::table_iii(6));
    let config = ExperimentConfig { constraint_grid: vec![30, 120, 300], trials: 2, annotators: vec!["truth".into()], ..small_grid() };
    let input = ExperimentInput::from_corpus(&s.corpus, std::slice::from_ref(&s.truth), &config).unwrap();
    let r = run_experiment_3(&config, &input).unwrap();
    for c in &r.cells {
        assert_eq!(c.informativeness, Some(0.0), "{} constraints", c.n_constraints);
    }
    let refs: Vec<_> = r.cells.iter().filter(|c| c.trial == 0).map(|c| c.reference.clone().unwrap()).collect();
    assert!(refs.windows(2).all(|w| w[0].n_constraints != w[1].n_constraints));
}

#[test]
fn all_must_link_sets_are_coherent() {
    let s = synth(&SynthSpec::table_iii(7));
    let constant = relabel(&s.truth, "constant", |_, _| "x".into());
    let config = ExperimentConfig { constraint_grid: vec![10, 40], trials: 1, annotators: vec!["constant".into()], ..small_grid() };
    let input = ExperimentInput::from_corpus(&s.corpus, &[s.truth.clone(), constant], &config).unwrap();
    let r = run_experiment_4(&config, &input).unwrap();
    assert!(r.cells.iter().all(|c| c.coherence == Some(1.0)));
    assert!(r.scatter.iter().flat_map(|s| &s.points).all(|p| p.coherence == 1.0));
}

#[test]
fn seeding_beats_random_initialization() {
    let s = synth(&SynthSpec::new(concord::corpus::TABLE_III_SIZES.to_vec(), 20, 0.0, 8));
    let config = ExperimentConfig { trials_seeding: 30, rng_seed: 8, ..Default::default() };
    let input = ExperimentInput::from_corpus(&s.corpus, std::slice::from_ref(&s.truth), &config).unwrap();
    let r = run_seeding_comparison(&config, &input).unwrap();
    let seeded = stats::mean(&r.seeded_nmi());
    let random = stats::mean(&r.random_nmi());
    assert!(seeded >= random);
    assert!(r.sign.p_value() < 0.05);
}

#[test]
fn single_cluster_has_no_information() {
    let s = synth(&SynthSpec::new(vec![4, 5, 6], 10, 0.0, 2));
    let config = ExperimentConfig { trials_seeding: 3, k: Some(1), ..Default::default() };
    let input = ExperimentInput::from_corpus(&s.corpus, std::slice::from_ref(&s.truth), &config).unwrap();
    let r = run_seeding_comparison(&config, &input).unwrap();
    assert!(r.trials.iter().all(|t| t.random_mi == 0.0 && t.seeded_mi == 0.0));
}

#[test]
fn constant_annotator_has_no_information() {
    let s = synth(&SynthSpec::new(vec![4, 5, 6], 10, 0.0, 2));
    let constant = relabel(&s.truth, "constant", |_, _| "same".into());
    let config = ExperimentConfig { trials_seeding: 2, ..Default::default() };
    let input = ExperimentInput::from_corpus(&s.corpus, &[s.truth.clone(), constant], &config).unwrap();
    let r = run_annotator_k_sweep(&config, &input).unwrap();
    let rows: Vec<&KSweepRow> = r.rows.iter().filter(|row| row.annotator == "constant").collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|row| row.standard_mi.iter().chain(&row.seeded_mi).all(|&m| m == 0.0)));
}

fn partially_labeled() -> (ExperimentInput, ExperimentConfig) {
    let s = synth(&SynthSpec::new(vec![8, 8, 8], 15, 0.0, 4));
    let mut seen = std::collections::BTreeMap::new();
    let partial = LabelAssignment::with_labels(
        "truth",
        s.truth.labels.iter().filter(|(_, l)| {
            let n = seen.entry(l.to_string()).or_insert(0);
            *n += 1;
            *n <= 3
        }).map(|(d, l)| (d.clone(), l.clone())),
    );
    let config = ExperimentConfig::default();
    (ExperimentInput::from_corpus(&s.corpus, &[partial], &config).unwrap(), config)
}

#[test]
fn blind_test_needs_two_runs() {
    let (input, mut config) = partially_labeled();
    config.blind.runs = 1;
    config.blind.pair = (0, 0);
    assert!(matches!(run_blind_test(&config, &input), Err(Error::InsufficientData(_))));
}

#[test]
fn blind_runs_with_one_seed_agree_perfectly() {
    let (input, mut config) = partially_labeled();
    config.blind.fixed_seed = true;
    let r = run_blind_test(&config, &input).unwrap();
    assert_eq!(r.alpha, 1.0);
    assert_eq!(r.target_docs.len(), 15);
    let c = &r.confusion;
    assert_eq!(c.counts.iter().enumerate().map(|(i, row)| row[i]).sum::<usize>(), 15);

    config.blind.fixed_seed = false;
    let r = run_blind_test(&config, &input).unwrap();
    assert_eq!(r.labelings.len(), 10);
    assert!(r.alpha <= 1.0);
}

#[test]
fn outputs_are_written() {
    let config = ExperimentConfig { constraint_grid: vec![10, 20], trials: 1, ..small_grid() };
    let input = table_iii_input(1, &config);
    let out = run_named("exp1", &config, &input).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = out.write_to(dir.path(), ReportFormat::Tsv).unwrap();
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert!(names.contains(&"exp1-cells.jsonl".to_string()));
    assert!(names.contains(&"exp1-summary.tsv".to_string()));
    assert!(names.iter().any(|n| n.ends_with(".dat")));
}
