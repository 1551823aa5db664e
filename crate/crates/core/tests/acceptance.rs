//! End-to-end acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line in ordinary `cargo test` output.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use chainruler::backends::{FallbackEmbedder, MockBackend};
use chainruler::cnl::{classify_sentence, parse_statement, render_literal, render_rule, render_statement};
use chainruler::elaborate::{ElaborationConfig, ElaborationRecord, Strategy};
use chainruler::fixtures;
use chainruler::generator::{generate_dataset, GenerationSpec};
use chainruler::logic::{derive_chain, Relation};
use chainruler::metrics::{bleu2, gradient, log_likelihood, logistic_fit, redundancy, spearman, total_luck};
use chainruler::pipeline;
use chainruler::predict::{evaluate_run, score_answers, ScoredPrediction};
use chainruler::{Lexicon, Literal, Property, Rule, Statement, TaskItem};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn(&Lexicon) -> Result<String, String>;

fn main() {
    let lexicon = Lexicon::builtin();
    let checks: [(&str, Check); 8] = [
        ("generator validity", generator_validity),
        ("worked-example fixtures", worked_examples),
        ("heuristic-oracle equivalence", heuristic_oracle),
        ("luck monotonicity", luck_monotonicity),
        ("oracle dominance", oracle_dominance),
        ("scrambled-antecedent control", scrambled_control),
        ("metrics correctness", metrics_correctness),
        ("pipeline reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(|| check(&lexicon)))
            .unwrap_or_else(|e| Err(format!("panicked: {}", panic_message(&e))));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name:<30} ({secs:.1}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name:<30} ({secs:.1}s) {detail}");
            }
        }
    }
    println!("\nacceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn grid(items_per_cell: usize, seed: u64) -> GenerationSpec {
    GenerationSpec { items_per_cell, seed, ..GenerationSpec::default() }
}

fn predict_none(items: &[TaskItem], backend: &MockBackend) -> Vec<ScoredPrediction> {
    items
        .iter()
        .map(|it| score_answers(it, &ElaborationRecord::empty(&it.id), backend).expect("mock never fails"))
        .collect()
}

/// Text after the last comma-free "they are " of a rendered rule, i.e. its consequent phrase.
fn consequent_phrase(rendered_rule: &str) -> &str {
    let tail = &rendered_rule[rendered_rule.rfind(", then they are ").expect("rule template") + 16..];
    tail.trim_end_matches('.')
}

fn generator_validity(lexicon: &Lexicon) -> Result<String, String> {
    // 167 per cell over the 60-cell default grid.
    let spec = grid(167, 20_231);
    let start = Instant::now();
    let items = generate_dataset(&spec, lexicon).map_err(|e| e.to_string())?;
    let gen_time = start.elapsed();
    ensure(items.len() >= 10_000, || format!("only {} items", items.len()))?;
    ensure(gen_time <= Duration::from_secs(10), || format!("generation took {gen_time:?}"))?;

    for it in &items {
        let p = &it.problem;
        let derived = derive_chain(&p.fact, &p.chain);
        ensure(derived.last() == Some(&p.conclusion), || format!("{}: chain does not end at the conclusion", it.id))?;

        // Recount from surface text: the conclusion's phrase after "<Subject> is ".
        let conclusion = render_literal(&p.conclusion);
        let g_phrase = conclusion[p.conclusion.subject.len() + 4..].trim_end_matches('.');
        let recount = p.distractors.iter().filter(|d| consequent_phrase(&render_rule(d)) != g_phrase).count();
        ensure(recount == it.effective_distraction(), || {
            format!("{}: effective distraction {} but recount {recount}", it.id, it.effective_distraction())
        })?;

        let g = p.conclusion.predicate();
        let g_bar = lexicon.complement(g).ok_or_else(|| format!("{}: conclusion predicate has no complement", it.id))?;
        for d in &p.distractors {
            ensure(&d.consequent.predicate == g || &d.consequent.predicate == g_bar, || {
                format!("{}: distractor consequent `{}` off target", it.id, d.consequent.phrase())
            })?;
        }
    }
    Ok(format!("{} items valid, generated in {:.2}s", items.len(), gen_time.as_secs_f64()))
}

fn worked_examples(lexicon: &Lexicon) -> Result<String, String> {
    let items = fixtures::worked_examples();
    let shape: Vec<(usize, usize, bool, usize)> = items
        .iter()
        .map(|i| (i.depth(), i.breadth(), i.problem.contraposition, i.effective_distraction()))
        .collect();
    ensure(shape == [(2, 1, false, 1), (3, 2, true, 2)], || format!("shapes {shape:?}"))?;
    let answers: Vec<Vec<String>> = items.iter().map(|i| i.answers().iter().map(render_literal).collect()).collect();
    ensure(
        answers
            == [
                vec!["Jill is guilty.", "Jill is not guilty.", "Jill is innocent."],
                vec!["Lily is generous.", "Lily is not generous.", "Lily is stingy."],
            ],
        || format!("answers {answers:?}"),
    )?;
    for it in &items {
        it.problem.validate(lexicon).map_err(|e| format!("{}: {e}", it.id))?;
    }

    let (jill, lily) = (&items[0].problem, &items[1].problem);
    let cases = [
        ("Jill is guilty.", jill, Relation::Implicit),
        ("Jill is innocent.", jill, Relation::Inconsistent),
        ("Lily is not in need of money.", lily, Relation::Implicit),
    ];
    for (sentence, problem, want) in cases {
        let got = classify_sentence(sentence, problem, lexicon).relation;
        ensure(got == want, || format!("`{sentence}` classified {got}, expected {want}"))?;
    }
    let mut rules = 0;
    for it in &items {
        for stmt in &it.context {
            if let Statement::Rule(r) = stmt {
                rules += 1;
                let got = classify_sentence(&render_rule(r), &it.problem, lexicon).relation;
                ensure(got == Relation::Explicit, || format!("context rule `{}` classified {got}", render_rule(r)))?;
            }
        }
    }
    Ok(format!("2 items, 3 sentence classes, {rules} context rules explicit"))
}

/// Answer index with the most occurrences of its (predicate, polarity) among the
/// context's facts and rule consequents; lowest index on ties.
fn count_oracle(item: &TaskItem) -> usize {
    let counts: Vec<usize> = item
        .answers()
        .iter()
        .map(|a| {
            item.context
                .iter()
                .filter(|s| match s {
                    Statement::Literal(l) => l.property == a.property,
                    Statement::Rule(r) => r.consequent == a.property,
                })
                .count()
        })
        .collect();
    let best = *counts.iter().max().unwrap();
    counts.iter().position(|&c| c == best).unwrap()
}

fn heuristic_oracle(lexicon: &Lexicon) -> Result<String, String> {
    let items = generate_dataset(&grid(34, 4242), lexicon).map_err(|e| e.to_string())?;
    ensure(items.len() >= 2_000, || format!("only {} items", items.len()))?;
    let backend = MockBackend::new(lexicon.clone());
    let preds = predict_none(&items, &backend);
    let grid = evaluate_run(&preds, &items).map_err(|e| e.to_string())?;
    let mismatches = items.iter().zip(&preds).filter(|(it, p)| count_oracle(it) != p.chosen).count();
    let oracle_acc = items.iter().filter(|it| count_oracle(it) == 0).count() as f64 / items.len() as f64;
    let acc = grid.overall_accuracy(Strategy::None).unwrap();
    ensure(mismatches == 0 && acc == oracle_acc, || {
        format!("{mismatches} mismatches; accuracy {acc:.4} vs oracle {oracle_acc:.4}")
    })?;
    Ok(format!("{} items, 0 mismatches, accuracy {acc:.4}", items.len()))
}

struct Run {
    items: Vec<TaskItem>,
    elaborations: Vec<ElaborationRecord>,
    predictions: Vec<ScoredPrediction>,
}

fn mock_run(dir: &Path, spec: &GenerationSpec, strategies: &[Strategy], lexicon: &Lexicon) -> Result<Run, String> {
    let items = pipeline::run_gen(spec, lexicon, false).map_err(|e| e.to_string())?;
    let backend = MockBackend::new(lexicon.clone());
    let config = ElaborationConfig { seed: spec.seed, ..ElaborationConfig::default() };
    let (elaborations, _) =
        pipeline::run_elaborate(&items, strategies, &backend, lexicon, &config, 4, &dir.join("elaborations.jsonl"))
            .map_err(|e| e.to_string())?;
    let (predictions, _) =
        pipeline::run_predict(&items, &elaborations, Some(strategies), &backend, 4, &dir.join("predictions.jsonl"))
            .map_err(|e| e.to_string())?;
    Ok(Run { items, elaborations, predictions })
}

fn luck_monotonicity(lexicon: &Lexicon) -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = mock_run(dir.path(), &grid(10, 99), &Strategy::ALL, lexicon)?;
    let by_id: BTreeMap<&str, &TaskItem> = run.items.iter().map(|i| (i.id.as_str(), i)).collect();
    let by_key: BTreeMap<(&str, Strategy), &ElaborationRecord> =
        run.elaborations.iter().map(|r| ((r.item_id.as_str(), r.strategy), r)).collect();

    let mut luck = Vec::with_capacity(run.predictions.len());
    let mut prob = Vec::with_capacity(run.predictions.len());
    for p in &run.predictions {
        let item = by_id[p.item_id.as_str()];
        let elab = by_key.get(&(p.item_id.as_str(), p.strategy)).map(|r| r.generated_text()).unwrap_or_default();
        luck.push(total_luck(&item.context_text(), &elab, &item.problem.conclusion).total as f64);
        prob.push(p.binary_prob);
    }
    ensure(luck.len() >= 5_000, || format!("only {} scored items", luck.len()))?;

    let mut bins = [(0.0, 0usize); 7];
    for (&l, &p) in luck.iter().zip(&prob) {
        if l <= 6.0 {
            bins[l as usize].0 += p;
            bins[l as usize].1 += 1;
        }
    }
    let means: Vec<(usize, f64)> =
        bins.iter().enumerate().filter(|(_, b)| b.1 > 0).map(|(i, b)| (i, b.0 / b.1 as f64)).collect();
    let curve = means.iter().map(|(i, m)| format!("{i}:{m:.3}")).collect::<Vec<_>>().join(" ");
    let monotone = means.windows(2).all(|w| w[1].1 >= w[0].1);
    let rho = spearman(&luck, &prob).ok_or("constant luck or probability")?;
    let baseline: (Vec<f64>, Vec<f64>) = run
        .predictions
        .iter()
        .zip(luck.iter().zip(&prob))
        .filter(|(p, _)| p.strategy == Strategy::None)
        .map(|(_, (l, b))| (*l, *b))
        .unzip();
    let rho_none = spearman(&baseline.0, &baseline.1).unwrap_or(f64::NAN);
    let detail = format!(
        "n={}, bins [{curve}], item-level Spearman {rho:.3} (none only: {rho_none:.3})",
        luck.len()
    );
    ensure(monotone, || format!("bin means decrease; {detail}"))?;
    ensure(rho >= 0.9, || format!("Spearman below 0.9; {detail}"))?;
    Ok(detail)
}

fn oracle_dominance(lexicon: &Lexicon) -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = mock_run(dir.path(), &grid(20, 5150), &[Strategy::OracleFinal], lexicon)?;
    let grid = evaluate_run(&run.predictions, &run.items).map_err(|e| e.to_string())?;
    let mut cells = 0;
    for key in grid.keys() {
        let (Some(oracle), Some(none)) = (grid.accuracy(Strategy::OracleFinal, key), grid.accuracy(Strategy::None, key))
        else {
            continue;
        };
        cells += 1;
        ensure(oracle >= none, || format!("cell {key:?}: oracle_final {oracle:.3} < none {none:.3}"))?;
    }
    let breadth: BTreeMap<&str, usize> = run.items.iter().map(|i| (i.id.as_str(), i.breadth())).collect();
    let shallow: Vec<&ScoredPrediction> = run
        .predictions
        .iter()
        .filter(|p| p.strategy == Strategy::OracleFinal && breadth[p.item_id.as_str()] <= 3)
        .collect();
    let wrong = shallow.iter().filter(|p| !p.correct).count();
    ensure(wrong == 0, || format!("{wrong} of {} oracle_final predictions wrong at breadth <= 3", shallow.len()))?;
    Ok(format!(
        "{cells} cells dominated; breadth<=3: {}/{} correct; overall {:.3} vs {:.3}",
        shallow.len(),
        shallow.len(),
        grid.overall_accuracy(Strategy::OracleFinal).unwrap(),
        grid.overall_accuracy(Strategy::None).unwrap()
    ))
}

fn scrambled_control(lexicon: &Lexicon) -> Result<String, String> {
    let spec = grid(20, 31_337);
    let plain = pipeline::run_gen(&spec, lexicon, false).map_err(|e| e.to_string())?;
    let scrambled = pipeline::run_gen(&spec, lexicon, true).map_err(|e| e.to_string())?;
    for (a, b) in plain.iter().zip(&scrambled) {
        let cons = |it: &TaskItem| {
            let mut v: Vec<Property> = it.problem.all_rules().iter().map(|r| r.consequent.clone()).collect();
            v.sort();
            v
        };
        ensure(cons(a) == cons(b) && a.problem.fact == b.problem.fact, || format!("{}: consequents differ", a.id))?;
        ensure(b.problem.scrambled, || format!("{}: not marked scrambled", b.id))?;
    }
    let backend = MockBackend::new(lexicon.clone());
    let (pa, pb) = (predict_none(&plain, &backend), predict_none(&scrambled, &backend));
    let acc = |ps: &[ScoredPrediction]| ps.iter().filter(|p| p.correct).count() as f64 / ps.len() as f64;
    let differing = pa.iter().zip(&pb).filter(|(x, y)| x.chosen != y.chosen).count();
    ensure(acc(&pa) == acc(&pb), || format!("accuracy {:.4} plain vs {:.4} scrambled", acc(&pa), acc(&pb)))?;
    Ok(format!("{} item pairs, accuracy {:.4} both, {differing} differing choices", plain.len(), acc(&pa)))
}

fn random_statement(rng: &mut ChaCha8Rng, lexicon: &Lexicon) -> Statement {
    let preds: Vec<_> = lexicon.predicates().collect();
    let prop = |rng: &mut ChaCha8Rng| Property::new(preds[rng.gen_range(0..preds.len())].clone(), rng.gen_bool(0.5));
    if rng.gen_bool(0.5) {
        let name = lexicon.names().choose(rng).unwrap().clone();
        Statement::Literal(Literal::new(name, prop(rng)))
    } else {
        let a = prop(rng);
        Statement::Rule(Rule::new(a, prop(rng)))
    }
}

fn metrics_correctness(lexicon: &Lexicon) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    const VOCAB: &[&str] = &["jill", "is", "loud", "not", "guilty", "if", "someone", "then", "they", "are", "kind", "Lily"];
    for _ in 0..1_000 {
        let n = rng.gen_range(1..30);
        let text: Vec<&str> = (0..n).map(|_| *VOCAB.choose(&mut rng).unwrap()).collect();
        let text = text.join(" ");
        let b = bleu2(&text, &text);
        ensure((b - 1.0).abs() < 1e-12, || format!("bleu2(x, x) = {b} for `{text}`"))?;
    }
    let worked = bleu2("jill is loud jill is guilty", "jill is loud");
    ensure((worked - (0.5f64 * 0.4).sqrt()).abs() < 1e-12, || format!("worked BLEU example gave {worked}"))?;

    let four = vec!["Jill is loud.".to_owned(); 4];
    ensure(redundancy(&four) == Some(1.0), || format!("redundancy of 4 copies {:?}", redundancy(&four)))?;

    for _ in 0..10_000 {
        let s = random_statement(&mut rng, lexicon);
        let text = render_statement(&s);
        let back = parse_statement(&text, lexicon).map_err(|e| format!("`{text}`: {e:?}"))?;
        ensure(back == s, || format!("`{text}` parsed to {back:?}"))?;
    }

    let truth = [0.5, -1.0, 2.0];
    let n = 10_000;
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: [f64; 2] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let eta = truth[0] + truth[1] * x[0] + truth[2] * x[1];
        labels.push(rng.gen_bool(1.0 / (1.0 + (-eta).exp())));
        features.push(x.to_vec());
    }
    let fit = logistic_fit(&features, &labels, &["x1", "x2"]).map_err(|e| e.to_string())?;
    let err = fit.coefficients.iter().zip(truth).map(|(b, t)| (b - t).abs()).fold(0.0, f64::max);
    ensure(fit.converged && err <= 0.1, || format!("coefficients {:?} (max error {err:.3})", fit.coefficients))?;

    let design = DMatrix::from_fn(n, 3, |i, j| if j == 0 { 1.0 } else { features[i][j - 1] });
    let beta = [0.3, -0.7, 1.1];
    let analytic = gradient(&beta, &design, &labels);
    let mut worst: f64 = 0.0;
    for j in 0..3 {
        let h = 1e-5;
        let (mut up, mut down) = (beta, beta);
        up[j] += h;
        down[j] -= h;
        let numeric = (log_likelihood(&up, &design, &labels) - log_likelihood(&down, &design, &labels)) / (2.0 * h);
        worst = worst.max((numeric - analytic[j]).abs() / analytic[j].abs().max(1.0));
    }
    ensure(worst <= 1e-6, || format!("gradient relative error {worst:e}"))?;

    Ok(format!(
        "bleu2 1000/1000, worked BLEU {worked:.4}, 10000 round-trips, beta {:.3?}, gradient rel err {worst:.1e}",
        fit.coefficients
    ))
}

fn full_run(dir: &Path, lexicon: &Lexicon) -> Result<(), String> {
    let spec = GenerationSpec { depth: 1..=3, breadth: 0..=3, items_per_cell: 5, seed: 2024, ..GenerationSpec::default() };
    let dataset = dir.join("dataset.jsonl");
    let items = pipeline::run_gen(&spec, lexicon, false).map_err(|e| e.to_string())?;
    pipeline::write_dataset(&dataset, &items).map_err(|e| e.to_string())?;
    let items = pipeline::load_dataset(&dataset, lexicon).map_err(|e| e.to_string())?;
    let run = mock_run(dir, &spec, &Strategy::ALL, lexicon)?;
    ensure(run.items == items, || "dataset did not survive the round trip".into())?;
    pipeline::run_analyze(&items, &run.elaborations, &run.predictions, &FallbackEmbedder, lexicon, 4, &dir.join("analysis"))
        .map_err(|e| e.to_string())?;
    Ok(())
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().display().to_string(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn reproducibility(lexicon: &Lexicon) -> Result<String, String> {
    let (a, b) = (tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?);
    full_run(a.path(), lexicon)?;
    full_run(b.path(), lexicon)?;
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    ensure(sa.keys().eq(sb.keys()), || "different file sets".into())?;
    let differing: Vec<&String> = sa.iter().filter(|(k, v)| sb[*k] != **v).map(|(k, _)| k).collect();
    ensure(differing.is_empty(), || format!("files differ: {differing:?}"))?;
    ensure(!sa.keys().any(|k| k.ends_with(".skipped.jsonl")), || "unexpected skipped jobs".into())?;
    let bytes: usize = sa.values().map(Vec::len).sum();
    Ok(format!("{} files, {bytes} bytes identical", sa.len()))
}
