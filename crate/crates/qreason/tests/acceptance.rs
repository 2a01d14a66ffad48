//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Criteria 7 and 8 train real models and take minutes.

mod common;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use qreason::cli::run_with;
use qreason::dataset::load_dataset;
use qreason_core::answer::{AnswerConfig, AnswerModel, RandomAnswerer};
use qreason_core::check::{check_reasoner, CheckConfig};
use qreason_core::data::{corpus_vocab, derive_supervision, generate_synthetic_corpus, Annotation, GenConfig, Prepared};
use qreason_core::deduction::{
    attention_to_span, deduce_comparison, deduce_prediction, run_chain, synthesize_text, Slots, Span,
};
use qreason_core::diff::{Grads, Tape};
use qreason_core::eval::{fuzzy_f1, module_eval, qa_accuracy, token_f1, GoldOracle};
use qreason_core::heads::Segment;
use qreason_core::model::{chain_heads, forward_heads, ReasonConfig, ReasonModel};
use qreason_core::text::{EncoderConfig, Lengths};
use qreason_core::train::{
    active_heads, answer_contexts, reason_loss, train_answerer, train_reasoning, ContextSource, LossWeights,
    TrainConfig,
};
use qreason_core::{Direction, HeadKind, Polarity, ReasoningType, ValueDir, WorldOrder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    check(t.elapsed() <= limit, || format!("took {:.1?}, limit {limit:?}", t.elapsed()))
}

/// Sign arithmetic: + is 1, - is -1; the product's sign picks the direction.
fn sign_rule(pol: i32, arg: i32) -> Direction {
    if pol * arg > 0 {
        Direction::More
    } else {
        Direction::Less
    }
}

fn c1_deduction() -> Outcome {
    let t = Instant::now();
    let mut cases = 0;
    for (p, ps) in [(Polarity::Positive, 1), (Polarity::Negative, -1)] {
        for (v, vs) in [(ValueDir::Up, 1), (ValueDir::Down, -1)] {
            let got = deduce_prediction(p, v);
            check(got == sign_rule(ps, vs), || format!("prediction ({p:?}, {v:?}) -> {got:?}"))?;
            cases += 1;
        }
        for (o, os) in [(WorldOrder::Greater, 1), (WorldOrder::Less, -1)] {
            let got = deduce_comparison(p, o);
            check(got == sign_rule(ps, os), || format!("comparison ({p:?}, {o:?}) -> {got:?}"))?;
            cases += 1;
        }
    }
    let examples = common::worked_examples();
    let all: Vec<_> = examples.iter().map(|(e, _)| e.clone()).collect();
    let vocab = corpus_vocab(&all, 1).map_err(|e| e.to_string())?;
    for (example, want) in &examples {
        let item = Prepared::new(example, &vocab, Lengths::default());
        let trace = run_chain(&item, &GoldOracle, 0.05, None).map_err(|e| e.to_string())?;
        check(trace.synthetic.text == *want, || {
            format!("{}: `{}` != `{want}`", example.instance.id, trace.synthetic.text)
        })?;
        let again = synthesize_text(trace.synthetic.slots.clone()).map_err(|e| e.to_string())?;
        check(again.text == *want, || format!("{}: template drift", example.instance.id))?;
    }
    let direct = synthesize_text(Slots::Prediction {
        world: "mass increases".into(),
        effect: "gravitational force".into(),
        direction: Direction::More,
    })
    .map_err(|e| e.to_string())?;
    check(direct.text == examples[0].1, || direct.text.clone())?;
    within(t, Duration::from_secs(1))?;
    Ok(format!("{cases} truth-table cases, {} worked sentences", examples.len()))
}

fn c2_gradcheck() -> Outcome {
    let t = Instant::now();
    let r = check_reasoner(&CheckConfig::default()).map_err(|e| e.to_string())?;
    check(r.full.max_rel_err < 1e-3, || format!("full model {:.3e} at {:?}", r.full.max_rel_err, r.full.worst))?;
    check(r.linear.max_rel_err < 1e-6, || {
        format!("scoring layers {:.3e} at {:?}", r.linear.max_rel_err, r.linear.worst)
    })?;
    within(t, Duration::from_secs(120))?;
    Ok(format!(
        "max rel err {:.2e} over {} values; scoring layers {:.2e} over {}",
        r.full.max_rel_err, r.full.checked, r.linear.max_rel_err, r.linear.checked
    ))
}

/// Heads that read the given head's attention vector.
fn consumers(h: HeadKind) -> &'static [HeadKind] {
    match h {
        HeadKind::Cause => &[HeadKind::Polarity, HeadKind::Comparison],
        HeadKind::Effect => &[HeadKind::Polarity],
        HeadKind::World => &[HeadKind::Value],
        HeadKind::World1 | HeadKind::World2 => &[HeadKind::Comparison],
        _ => &[],
    }
}

fn c3_masking() -> Outcome {
    let corpus = generate_synthetic_corpus(&GenConfig {
        n_train: 24,
        n_dev: 2,
        n_test: 2,
        comparison_ratio: 0.5,
        seed: 3,
        ..GenConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let vocab = corpus_vocab(&corpus.train, 1).map_err(|e| e.to_string())?;
    let cfg = ReasonConfig {
        encoder: EncoderConfig {
            d_model: 16,
            layers: 2,
            heads: 2,
            ffn: 32,
        },
        lengths: Lengths { n_max: 32, m_max: 48 },
        tau: 0.15,
    };
    let model = ReasonModel::init(cfg, vocab, 5).map_err(|e| e.to_string())?;
    let store = model.store.cast::<f64>();
    let items: Vec<Prepared> = corpus.train.iter().map(|e| model.prepare(e)).collect();
    let w = LossWeights::default();
    let batch = |items: &[Prepared]| -> Result<(f64, Grads<f64>), String> {
        let mut grads = Grads::zeros_like(&store);
        let mut total = 0.0;
        for it in items {
            let mut tape = Tape::new(&store);
            let outs = forward_heads(&mut tape, &model.encoder, &model.heads, &it.input, &chain_heads(None))
                .map_err(|e| e.to_string())?;
            let active = active_heads(&it.labels, &w, &[]);
            let loss = reason_loss(&mut tape, &outs, &it.labels, &w, &active).map_err(|e| e.to_string())?;
            total += tape.scalar(loss);
            tape.backward(loss, &mut grads).map_err(|e| e.to_string())?;
        }
        Ok((total, grads))
    };
    let (_, full) = batch(&items)?;
    for head in HeadKind::ALL {
        let masked: Vec<Prepared> = items
            .iter()
            .cloned()
            .map(|mut it| {
                it.labels.clear(head);
                consumers(head).iter().for_each(|c| it.labels.clear(*c));
                it
            })
            .collect();
        let (_, g) = batch(&masked)?;
        let ids = model.heads.exclusive_params(head);
        check(!ids.is_empty(), || format!("{head}: no exclusive parameters"))?;
        for id in &ids {
            check(g.abs_sum(*id) == 0.0, || format!("{head}: `{}` has gradient {}", store.name(*id), g.abs_sum(*id)))?;
        }
        check(ids.iter().any(|id| full.abs_sum(*id) > 0.0), || format!("{head}: no gradient when labelled"))?;
    }
    let none: Vec<Prepared> = items
        .iter()
        .cloned()
        .map(|mut it| {
            it.labels = Default::default();
            it
        })
        .collect();
    let (loss, g) = batch(&none)?;
    check(loss == 0.0, || format!("all-masked loss {loss}"))?;
    check(store.ids().all(|id| g.abs_sum(id) == 0.0), || "all-masked gradient nonzero".into())?;
    Ok(format!("9 heads masked over a batch of {}; all-masked loss exactly 0", items.len()))
}

fn span(a: usize, b: usize) -> Span {
    Span {
        start: a,
        end: b,
        segment: Segment::Knowledge,
        text: String::new(),
    }
}

fn c4_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let (a, b) = (rng.random_range(0..20usize), rng.random_range(0..20usize));
        let (la, lb) = (rng.random_range(0..6usize), rng.random_range(0..6usize));
        let got = token_f1(&span(a, a + la), &span(b, b + lb)).map_err(|e| e.to_string())?;
        // Interval overlap, F1 = 2|P∩G| / (|P| + |G|) as one rounded quotient.
        let lo = a.max(b) as i64;
        let hi = (a + la).min(b + lb) as i64;
        let overlap = (hi - lo + 1).max(0);
        let want = (2 * overlap) as f64 / (la + 1 + lb + 1) as f64;
        check(got.to_bits() == want.to_bits(), || format!("[{a},{}] vs [{b},{}]: {got} != {want}", a + la, b + lb))?;
    }
    for _ in 0..1000 {
        let x: f64 = if rng.random_bool(0.2) { 0.0 } else { rng.random() };
        let f = fuzzy_f1(x);
        check((f == 0.0 || f == 1.0) && f >= x, || format!("fuzzy_f1({x}) = {f}"))?;
    }
    let corpus = generate_synthetic_corpus(&GenConfig {
        n_train: 50,
        n_dev: 200,
        n_test: 10,
        ..GenConfig::default()
    })
    .map_err(|e| e.to_string())?;
    let vocab = corpus_vocab(&corpus.train, 1).map_err(|e| e.to_string())?;
    let items: Vec<Prepared> = corpus
        .dev
        .iter()
        .map(|e| Prepared::new(e, &vocab, Lengths::default()))
        .collect();
    let report = module_eval(&GoldOracle, &items, 0.05).map_err(|e| e.to_string())?;
    for head in HeadKind::ALL {
        let cell = report.get(head).ok_or_else(|| format!("{head} missing"))?;
        for v in [cell.f1, cell.fuzzy_f1, cell.accuracy].into_iter().flatten() {
            check(v == 1.0, || format!("oracle {head}: {cell:?}"))?;
        }
    }
    Ok("200 token-F1 pairs exact, 1000 fuzzy inputs, oracle module_eval all 1.0".into())
}

fn c5_annotation_rules() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/annotated.jsonl");
    let ds = load_dataset(&path).map_err(|e| e.to_string())?;
    let labels: Vec<_> = ds.records.iter().map(|r| r.example.labels.clone()).collect();
    check(labels[0].polarity == Some(Polarity::Positive), || format!("same signs: {:?}", labels[0].polarity))?;
    check(labels[1].polarity == Some(Polarity::Negative), || format!("opposite signs: {:?}", labels[1].polarity))?;
    check(labels[2].kind == Some(ReasoningType::Comparison), || format!("more+less: {:?}", labels[2].kind))?;
    check(labels[0].kind == Some(ReasoningType::Prediction), || format!("more only: {:?}", labels[0].kind))?;
    check(labels[3].kind.is_none() && labels[3].polarity.is_none(), || "unannotated record labelled".into())?;
    check(labels[4].polarity.is_none(), || "contradictory sign accepted".into())?;

    let map = |kv: &[(&str, &str)]| Some(kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect());
    for (c, e, want) in [
        ("MORE", "MORE", Polarity::Positive),
        ("LESS", "LESS", Polarity::Positive),
        ("MORE", "LESS", Polarity::Negative),
        ("LESS", "MORE", Polarity::Negative),
    ] {
        let d = derive_supervision(&Annotation {
            para: map(&[("cause_dir_sign", c), ("effect_dir_sign", e)]),
            question: None,
        });
        check(d.polarity == Some(want), || format!("({c}, {e}) -> {:?}", d.polarity))?;
        check(d.kind.is_none(), || "type set without a question annotation".into())?;
    }
    let d = derive_supervision(&Annotation {
        para: None,
        question: map(&[("more_effect_dir", "a"), ("less_effect_dir", "b")]),
    });
    check(d.kind == Some(ReasoningType::Comparison), || format!("{:?}", d.kind))?;
    Ok("fixture and 4 sign combinations exact".into())
}

/// Largest window around the first maximum whose other entries all exceed
/// `tau`, found by enumerating every window.
fn span_oracle(p: &[f64], tau: f64) -> (usize, usize) {
    let max = p.iter().cloned().fold(f64::MIN, f64::max);
    let peak = p.iter().position(|&x| x == max).unwrap();
    let mut best = (peak, peak);
    for s in 0..=peak {
        for e in peak..p.len() {
            let ok = (s..=e).all(|i| i == peak || p[i] > tau);
            if ok && e - s > best.1 - best.0 {
                best = (s, e);
            }
        }
    }
    best
}

fn c6_span_conversion() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..1000 {
        let n = rng.random_range(1..=24);
        let mut p: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random::<f64>().powi(2) })
            .collect();
        if rng.random_bool(0.1) && n > 1 {
            let j = rng.random_range(0..n - 1);
            p[j + 1] = p[j];
        }
        if p.iter().all(|x| *x == 0.0) {
            p[0] = 1.0;
        }
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        let tau = rng.random_range(0.01..0.5);
        let got = attention_to_span(&p, tau).map_err(|e| e.to_string())?;
        let want = span_oracle(&p, tau);
        check(got == want, || format!("vector {k}: {got:?} != {want:?} at tau {tau}"))?;
        let tau2 = tau + rng.random_range(0.0..0.4);
        if tau2 < 1.0 {
            let inner = attention_to_span(&p, tau2).map_err(|e| e.to_string())?;
            check(inner.0 >= got.0 && inner.1 <= got.1, || format!("vector {k}: not monotone"))?;
        }
    }
    within(t, Duration::from_secs(10))?;
    Ok("1000 vectors match the window oracle; shrinkage monotone".into())
}

fn prepared(model: &ReasonModel, examples: &[qreason_core::data::Example]) -> Vec<Prepared> {
    examples.iter().map(|e| model.prepare(e)).collect()
}

fn c7_learnability() -> Outcome {
    let t = Instant::now();
    let corpus = generate_synthetic_corpus(&GenConfig::default()).map_err(|e| e.to_string())?;
    let sizes = (corpus.train.len(), corpus.dev.len(), corpus.test.len());
    check(sizes == (2000, 400, 400), || format!("sizes {sizes:?}"))?;
    let cfg = TrainConfig::default();
    let vocab = corpus_vocab(&corpus.train, 1).map_err(|e| e.to_string())?;
    let model = ReasonModel::init(ReasonConfig::default(), vocab.clone(), cfg.seed).map_err(|e| e.to_string())?;
    let reason = train_reasoning(model, &corpus.train, &corpus.dev, &cfg).map_err(|e| e.to_string())?.model;
    let tau = reason.config.tau;
    let test = prepared(&reason, &corpus.test);
    let report = module_eval(&reason, &test, tau).map_err(|e| e.to_string())?;

    let (train_items, dev_items) = (prepared(&reason, &corpus.train), prepared(&reason, &corpus.dev));
    let pairs = |items: &[Prepared]| -> Vec<_> {
        items
            .iter()
            .zip(answer_contexts(items, &ContextSource::Gold))
            .filter_map(|(it, c)| c.map(|c| (it.example.instance.clone(), c)))
            .collect()
    };
    let answer = AnswerModel::init(AnswerConfig::default(), vocab, cfg.seed).map_err(|e| e.to_string())?;
    let answer = train_answerer(answer, &pairs(&train_items), &pairs(&dev_items), &cfg)
        .map_err(|e| e.to_string())?
        .model;
    let qa = qa_accuracy(&reason, &answer, &test, tau);
    let random = qa_accuracy(&reason, &RandomAnswerer { seed: cfg.seed }, &test, tau);
    let elapsed = t.elapsed();

    let mut summary = Vec::new();
    let mut failures = Vec::new();
    for head in HeadKind::ALL {
        let cell = report.get(head).copied().unwrap_or_default();
        let (value, floor) = match head {
            h if h.is_span() => (cell.fuzzy_f1, 0.90),
            HeadKind::Comparison => (cell.accuracy, 0.90),
            _ => (cell.accuracy, 0.95),
        };
        let v = value.unwrap_or(0.0);
        summary.push(format!("{head} {v:.3}"));
        if v < floor {
            failures.push(format!("{head} {v:.3} < {floor}"));
        }
    }
    summary.push(format!("QA {:.3}", qa.accuracy));
    summary.push(format!("random {:.3}", random.accuracy));
    summary.push(format!("tau {tau:.2}"));
    summary.push(format!("{:.0}s", elapsed.as_secs_f64()));
    if qa.accuracy < 0.90 {
        failures.push(format!("QA {:.3} < 0.90", qa.accuracy));
    }
    if (random.accuracy - 0.5).abs() > 0.05 {
        failures.push(format!("random baseline {:.3} outside 0.50 ± 0.05", random.accuracy));
    }
    if elapsed > Duration::from_secs(15 * 60) {
        failures.push(format!("took {elapsed:.0?} > 15 min"));
    }
    if failures.is_empty() {
        Ok(summary.join(", "))
    } else {
        Err(format!("{} [{}]", failures.join("; "), summary.join(", ")))
    }
}

/// Reduced-budget protocol: 1000/200/400 corpus, 8 epochs, seeds 1-3.
fn c8_ablation() -> Outcome {
    let mut rows = Vec::new();
    let mut ok = true;
    for seed in [1u64, 2, 3] {
        let corpus = generate_synthetic_corpus(&GenConfig {
            n_train: 1000,
            n_dev: 200,
            n_test: 400,
            seed,
            ..GenConfig::default()
        })
        .map_err(|e| e.to_string())?;
        let vocab = corpus_vocab(&corpus.train, 1).map_err(|e| e.to_string())?;
        let mut acc = [0.0; 2];
        for (slot, ablate) in [vec![], vec![HeadKind::Cause, HeadKind::Effect]].into_iter().enumerate() {
            let cfg = TrainConfig {
                epochs: 8,
                seed,
                ablate,
                tune_tau: false,
                ..TrainConfig::default()
            };
            let model = ReasonModel::init(ReasonConfig::default(), vocab.clone(), seed).map_err(|e| e.to_string())?;
            let m = train_reasoning(model, &corpus.train, &corpus.dev, &cfg).map_err(|e| e.to_string())?.model;
            let report = module_eval(&m, &prepared(&m, &corpus.test), m.config.tau).map_err(|e| e.to_string())?;
            acc[slot] = report.get(HeadKind::Polarity).and_then(|c| c.accuracy).unwrap_or(0.0);
        }
        ok &= acc[1] < acc[0];
        rows.push(format!("seed {seed}: joint {:.3} vs no cause/effect {:.3}", acc[0], acc[1]));
    }
    if ok {
        Ok(rows.join("; "))
    } else {
        Err(format!("polarity not strictly lower without cause/effect on every seed: {}", rows.join("; ")))
    }
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let cfg = d.join("run.toml");
    fs::write(
        &cfg,
        "[reason.encoder]\nd_model = 16\nlayers = 1\nheads = 2\nffn = 32\n\
         [answer.encoder]\nd_model = 16\nlayers = 1\nheads = 2\nffn = 32\n\
         [train]\nepochs = 2\n[answer_train]\nepochs = 2\n",
    )
    .map_err(|e| e.to_string())?;
    let run = |args: &[&str]| -> Result<(), String> {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let mut argv = vec!["qreason"];
        argv.extend_from_slice(args);
        match run_with(argv, &mut out, &mut err) {
            0 => Ok(()),
            code => Err(format!("{args:?} exited {code}: {}", String::from_utf8_lossy(&err))),
        }
    };
    let p = |s: &str| d.join(s).to_string_lossy().into_owned();
    let cfg_s = cfg.to_string_lossy().into_owned();
    run(&["gen-data", "--out", &p("data"), "--n-train", "200", "--n-dev", "40", "--n-test", "10", "--seed", "11"])?;
    for name in ["r1", "r2"] {
        run(&["train-reason", "--data", &p("data"), "--out", &p(name), "--config", &cfg_s, "--seed", "11"])?;
    }
    for name in ["a1", "a2"] {
        run(&["train-answer", "--data", &p("data"), "--out", &p(name), "--config", &cfg_s, "--seed", "11"])?;
    }
    let mut compared = 0;
    for (x, y) in [("r1", "r2"), ("a1", "a2")] {
        for f in ["model.qrck", "metrics.jsonl", "config.toml", "vocab.txt"] {
            let a = fs::read(d.join(x).join(f)).map_err(|e| e.to_string())?;
            let b = fs::read(d.join(y).join(f)).map_err(|e| e.to_string())?;
            check(a == b, || format!("{x}/{f} differs from {y}/{f}"))?;
            compared += 1;
        }
    }
    Ok(format!("{compared} artifact pairs bit-identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("deduction truth tables and worked sentences", c1_deduction),
        ("gradient validation", c2_gradcheck),
        ("gamma masking", c3_masking),
        ("metric oracles", c4_metrics),
        ("annotation-derived supervision", c5_annotation_rules),
        ("span conversion", c6_span_conversion),
        ("end-to-end learnability", c7_learnability),
        ("cause/effect ablation lowers polarity", c8_ablation),
        ("determinism", c9_determinism),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
