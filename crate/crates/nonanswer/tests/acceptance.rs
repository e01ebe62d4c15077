//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use nonanswer::ingest::{ingest_dir, load_word_lists};
use nonanswer::tables::FAMILIES;
use nonanswer_core::corpus::{QaExchange, Role, Turn};
use nonanswer_core::elicitor::{render_prompt, validate_reply, Category, NorAnnotation, NorCount, SYSTEM_MESSAGE};
use nonanswer_core::lexicon::{exchange_metrics, fog_index, text_metrics, tone, FogOptions, TurnScope, WordLists};
use nonanswer_core::measures::{model_overlap, NorDistribution};
use nonanswer_core::panel::forecast::{forecast_features, ForecastInputs};
use nonanswer_core::stats::spec::FixedEffects;
use nonanswer_core::stats::{bootstrap_mean, fe_ols, fisher_permutation_diff, match_ratio, Frame, RegressionSpec, SeKind};
use nonanswer_core::Date;
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

fn within_budget(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

// 1

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

fn fixture_exchange(rng: &mut ChaCha8Rng, i: usize) -> QaExchange {
    let analysts = ["Ana Park", "Ben Ortiz", "Zoë Müller", "D'Arcy O\"Neil"];
    let managers = ["Chief Executive Officer", "Chief Financial Officer", "VP, Investor Relations"];
    let phrases = [
        "What drove the margin change?",
        "Can you quantify the \"one-off\" items?",
        "Path C:\\ledger\\fy24 was mentioned; any update?",
        "We don't guide on that.",
        "Revenue grew 12% to $1.2 billion, ahead of plan.",
        "Let me take that offline.",
        "Über-strong demand in Q4… thanks.",
    ];
    let mut turns = Vec::new();
    for k in 0..rng.gen_range(1..4) {
        let a = analysts[rng.gen_range(0..analysts.len())];
        let q = phrases[rng.gen_range(0..phrases.len())];
        turns.push(Turn::new(Role::Analyst, Some(a), &format!("{q} ({i}.{k})")).unwrap());
        if rng.gen_bool(0.3) {
            turns.push(Turn::new(Role::Operator, None, "Next question, please.").unwrap());
        }
        let m = managers[rng.gen_range(0..managers.len())];
        let name = if rng.gen_bool(0.1) { None } else { Some(m) };
        turns.push(Turn::new(Role::Manager, name, phrases[rng.gen_range(0..phrases.len())]).unwrap());
    }
    QaExchange {
        conver_id: format!("FX{i:03}-1"),
        order: 1,
        turns,
    }
}

fn expected_statement(x: &QaExchange) -> String {
    x.turns
        .iter()
        .filter(|t| t.role != Role::Operator)
        .map(|t| {
            let role = match t.role {
                Role::Analyst => "Analyst",
                Role::Manager => "Manager",
                Role::Other => "Other",
                Role::Operator => unreachable!(),
            };
            match &t.name {
                Some(n) => format!("[{role}][{n}]: \"{}\"", escape(&t.text)),
                None => format!("[{role}]: \"{}\"", escape(&t.text)),
            }
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn prompt_fidelity() -> Outcome {
    let start = Instant::now();
    let golden = include_str!("fixtures/prompt_golden.txt");
    let (before, after) = golden.split_once("{{STATEMENT}}").ok_or("golden template has no statement slot")?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..100 {
        let x = fixture_exchange(&mut rng, i);
        let p = render_prompt(&x);
        check(p.system_message == SYSTEM_MESSAGE, || "system message changed".into())?;
        let body = p
            .user_prompt
            .strip_prefix(before)
            .and_then(|s| s.strip_suffix(after))
            .ok_or_else(|| format!("fixture {i}: template text differs from the golden copy"))?;
        check(body == expected_statement(&x), || format!("fixture {i}: statement slot {body:?}"))?;
    }
    let responses = [
        (include_str!("fixtures/appendix_response_1.txt"), (3, 10, 10)),
        (include_str!("fixtures/appendix_response_2.txt"), (4, 9, 8)),
    ];
    for (k, (raw, scores)) in responses.iter().enumerate() {
        let a = validate_reply(raw);
        check(a.nor_count == NorCount::Count(1), || format!("response {}: {:?}", k + 1, a.nor_count))?;
        check(a.category == vec![Category::LackOfInfo], || format!("response {}: {:?}", k + 1, a.category))?;
        let got = (a.quantity, a.relevance, a.clarity);
        let want = (Some(scores.0), Some(scores.1), Some(scores.2));
        check(got == want, || format!("response {}: scores {got:?}", k + 1))?;
    }
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(1))?;
    Ok(format!("100 prompts match the golden template, both replies parse ({elapsed:.2?})"))
}

// 2

fn annotation(id: usize, n: Option<u8>) -> NorAnnotation {
    let mut a = NorAnnotation::error("").with_ids(&format!("C{id:06}"), "m");
    if let Some(n) = n {
        a.nor_count = NorCount::Count(n);
    }
    a
}

fn measure_counts() -> Outcome {
    let mut anns = Vec::with_capacity(107_564);
    let blocks: [(Option<u8>, usize); 5] = [(Some(1), 15_384), (Some(2), 257), (Some(3), 4), (None, 416), (Some(0), 91_503)];
    for (n, count) in blocks {
        for _ in 0..count {
            anns.push(annotation(anns.len(), n));
        }
    }
    let d = NorDistribution::from_annotations(&anns);
    check(d.total() == 107_564, || format!("total {}", d.total()))?;
    check(d.nor_conversations() == 15_645, || format!("NOR conversations {}", d.nor_conversations()))?;
    check(d.nor_sum() == 15_910, || format!("NOR sum {}", d.nor_sum()))?;

    let n = 107_564;
    let a: Vec<NorAnnotation> = (0..n).map(|i| annotation(i, Some(u8::from(i < 15_645)))).collect();
    let b: Vec<NorAnnotation> = (0..n)
        .map(|i| annotation(i, Some(u8::from((6_223..6_223 + 12_689).contains(&i)))))
        .collect();
    let o = model_overlap(&a, &b);
    check((o.common, o.only_a, o.only_b) == (9_422, 6_223, 3_267), || format!("overlap {o:?}"))?;
    Ok("15,645 NOR conversations, sum 15,910; overlap 9,422 / 6,223 / 3,267".into())
}

// 3

fn uncertainty_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst, mut singles) = (0f64, 0);
    for i in 0..10_000 {
        let n: u32 = if i % 10 == 0 { 1 } else { rng.gen_range(2..40) };
        let forecasts: Vec<f64> = if n >= 2 { (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect() } else { Vec::new() };
        let f = ForecastInputs {
            firm_id: format!("F{i}"),
            fiscal_quarter: "2020Q3".parse().unwrap(),
            consensus_mean_eps: rng.gen_range(-5.0..5.0),
            analyst_forecasts: forecasts,
            forecast_sd: None,
            actual_eps: rng.gen_range(-5.0..5.0),
            analyst_following: n,
            prior_close: rng.gen_range(0.5..500.0),
            announcement_date: Date::new(2020, 10, 28).unwrap(),
        };
        let ff = forecast_features(&f).map_err(|e| format!("row {i}: {e}"))?;
        let (e, u) = (ff.error.unwrap(), ff.uncertainty.unwrap());
        if n == 1 {
            singles += 1;
            check(u == e, || format!("row {i}: N=1 uncertainty {u} != error {e}"))?;
        } else {
            let d = ff.dispersion.unwrap();
            worst = worst.max((u - ((1.0 - 1.0 / f64::from(n)) * d + e)).abs());
        }
    }
    check(worst <= 1e-12, || format!("max deviation {worst:e}"))?;
    Ok(format!("10,000 rows, max deviation {worst:.1e}, {singles} single-analyst rows exact"))
}

// 4

struct Panel {
    frame: Frame,
    firms: Vec<usize>,
    quarters: Vec<usize>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    betas: Vec<f64>,
}

fn random_panel(seed: u64, n_firms: usize, n_quarters: usize, k: usize, noise: f64) -> Panel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let firm_fx: Vec<f64> = (0..n_firms).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let quarter_fx: Vec<f64> = (0..n_quarters).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let betas: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let (mut firms, mut quarters, mut y) = (Vec::new(), Vec::new(), Vec::new());
    let mut x = vec![Vec::new(); k];
    for f in 0..n_firms {
        for q in 0..n_quarters {
            // Quarter 0 and 1 are always present, so the panel stays connected.
            if q > 1 && rng.gen_bool(0.25) {
                continue;
            }
            let mut v = firm_fx[f] + quarter_fx[q];
            if noise > 0.0 {
                v += rng.gen_range(-noise..noise);
            }
            for j in 0..k {
                let xv = rng.gen_range(-1.0..1.0) + 0.4 * firm_fx[f] - 0.3 * quarter_fx[q];
                v += betas[j] * xv;
                x[j].push(xv);
            }
            firms.push(f);
            quarters.push(q);
            y.push(v);
        }
    }
    let mut frame = Frame::new(y.len());
    frame.set_numeric("y", y.clone());
    for (j, col) in x.iter().enumerate() {
        frame.set_numeric(&format!("x{j}"), col.clone());
    }
    frame.set_label("firm_id", firms.iter().map(|f| format!("F{f:03}")).collect());
    frame.set_label("fiscal_quarter", quarters.iter().map(|q| format!("Q{q:02}")).collect());
    Panel {
        frame,
        firms,
        quarters,
        x,
        y,
        betas,
    }
}

fn panel_spec(k: usize) -> RegressionSpec {
    let names: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    RegressionSpec::new("oracle", "y", &refs).with_winsorize(None)
}

fn dummy_ols(p: &Panel, n_firms: usize, n_quarters: usize) -> Vec<f64> {
    let (n, k) = (p.y.len(), p.x.len());
    let cols = k + (n_firms - 1) + (n_quarters - 1) + 1;
    let design = DMatrix::from_fn(n, cols, |i, c| {
        if c < k {
            p.x[c][i]
        } else if c < k + n_firms - 1 {
            f64::from(p.firms[i] == c - k + 1)
        } else if c < cols - 1 {
            f64::from(p.quarters[i] + n_firms + k == c + 2)
        } else {
            1.0
        }
    });
    let svd = design.svd(true, true);
    let b = svd.solve(&DVector::from_column_slice(&p.y), 1e-12).expect("dummy regression solves");
    b.iter().take(k).copied().collect()
}

fn fe_ols_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0f64;
    for seed in 0..25u64 {
        let (nf, nq, k) = (rng.gen_range(5..=50), rng.gen_range(3..=12), rng.gen_range(1..=3));
        let p = random_panel(100 + seed, nf, nq, k, 0.5);
        let r = fe_ols(&panel_spec(k), &p.frame).map_err(|e| format!("panel {seed}: {e}"))?;
        let b = dummy_ols(&p, nf, nq);
        for j in 0..k {
            let d = (r.coef[j] - b[j]).abs();
            worst = worst.max(d);
            check(d <= 1e-8, || format!("panel {seed} ({nf}x{nq}) coef {j}: {} vs {}", r.coef[j], b[j]))?;
        }
    }
    let p = random_panel(7, 50, 12, 3, 0.0);
    let r = fe_ols(&panel_spec(3), &p.frame).map_err(|e| e.to_string())?;
    for j in 0..3 {
        check((r.coef[j] - p.betas[j]).abs() <= 1e-8, || format!("planted slope {j}: {} vs {}", r.coef[j], p.betas[j]))?;
    }
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(30))?;
    Ok(format!("25 panels, max gap to dummy OLS {worst:.1e}; planted slopes recovered ({elapsed:.2?})"))
}

// 5

fn singleton_clusters() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 10;
    let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
    let y: Vec<f64> = x.iter().map(|v| 1.0 + 0.7 * v + rng.gen_range(-1.0..1.0) * v).collect();
    let mut f = Frame::new(n);
    f.set_numeric("x", x.clone());
    f.set_numeric("y", y.clone());
    f.set_label("id", (0..n).map(|i| i.to_string()).collect());
    let spec = RegressionSpec::new("singletons", "y", &["x"])
        .with_fixed_effects(FixedEffects::NONE)
        .with_cluster(Some("id"))
        .with_winsorize(None);
    let cr1 = fe_ols(&spec.clone().with_se(SeKind::Cr1), &f).map_err(|e| e.to_string())?;

    // White's estimator scaled by N/(N-K); with G = N clusters the CR1 factor
    // G/(G-1)·(N-1)/(N-K) reduces to the same N/(N-K).
    let k = 2;
    let xm = DMatrix::from_fn(n, k, |i, j| if j == 0 { x[i] } else { 1.0 });
    let yv = DVector::from_column_slice(&y);
    let bread = (xm.transpose() * &xm).try_inverse().ok_or("singular X'X")?;
    let b = &bread * xm.transpose() * &yv;
    let e = &yv - &xm * &b;
    let meat = xm.transpose() * DMatrix::from_diagonal(&e.map(|v| v * v)) * &xm;
    let hc = (&bread * meat * &bread) * (n as f64 / (n - k) as f64);
    let mut worst = 0f64;
    for (j, term) in ["x", "Constant"].iter().enumerate() {
        let se = cr1.se_of(term).ok_or("missing term")?;
        worst = worst.max((se - hc[(j, j)].sqrt()).abs());
    }
    check(worst <= 1e-10, || format!("max SE gap {worst:e}"))?;
    let hc1 = fe_ols(&spec.with_se(SeKind::Hc1), &f).map_err(|e| e.to_string())?;
    check((hc1.se[0] - cr1.se[0]).abs() <= 1e-10, || "HC1 and singleton CR1 differ".into())?;
    Ok(format!("10 rows, max SE gap {worst:.1e}"))
}

// 6

fn bootstrap_share() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let units: Vec<f64> = (0..1000).map(|_| f64::from(rng.gen_bool(0.3))).collect();
    let start = Instant::now();
    let a = bootstrap_mean("share", &units, 100_000, 2024).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let b = bootstrap_mean("share", &units, 100_000, 2024).map_err(|e| e.to_string())?;
    let se = (0.3f64 * 0.7 / 1000.0).sqrt();
    let z = (a.resample_mean - 0.3) / se;
    check(z.abs() < 3.0, || format!("resample mean {} is {z:.2} SE from 0.3", a.resample_mean))?;
    let same = a.replicates.len() == b.replicates.len()
        && a.replicates.iter().zip(&b.replicates).all(|(x, y)| x.to_bits() == y.to_bits());
    check(same, || "same-seed runs differ".into())?;
    within_budget(elapsed, Duration::from_secs(10))?;
    Ok(format!("resample mean {:.4} ({z:+.2} SE), runs bit-identical ({elapsed:.2?})", a.resample_mean))
}

// 7

fn match_ratio_table() -> Outcome {
    let reps = 100;
    // Hits per unit: 62 baseline-0 units totalling 5,403 and 38 baseline-1
    // units totalling 2,219 agreeing repetitions.
    let mut units: Vec<(u8, usize)> = Vec::new();
    units.extend((0..62).map(|i| (0, if i < 9 { 88 } else { 87 })));
    units.extend((0..38).map(|i| (1, if i < 15 { 59 } else { 58 })));
    let baseline: Vec<NorAnnotation> = units.iter().enumerate().map(|(i, (nor, _))| annotation(i, Some(*nor))).collect();
    let repetitions: Vec<Vec<NorAnnotation>> = (0..reps)
        .map(|r| {
            units
                .iter()
                .enumerate()
                .map(|(i, &(nor, hits))| annotation(i, Some(if r < hits { nor } else { 1 - nor })))
                .collect()
        })
        .collect();
    let m = match_ratio(&baseline, &repetitions).map_err(|e| e.to_string())?;
    let means: Vec<String> = m.groups.iter().map(|g| format!("{:.2}", g.mean)).collect();
    let ns: Vec<usize> = m.groups.iter().map(|g| g.n).collect();
    check(ns == [62, 38, 100], || format!("group sizes {ns:?}"))?;
    check(means == ["87.15", "58.39", "76.22"], || format!("group means {means:?}"))?;
    Ok(format!("group means {} / {} / overall {}", means[0], means[1], means[2]))
}

// 8

fn permutation_fixture(seed: u64, n_firms: usize, n_quarters: usize, b0: f64, b1: f64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_firms * n_quarters;
    let (mut y, mut x, mut part, mut firm, mut q) = (vec![], vec![], vec![], vec![], vec![]);
    for f in 0..n_firms {
        let fe = rng.gen_range(-1.0..1.0);
        let g = f % 2 == 1;
        for t in 0..n_quarters {
            let xv: f64 = rng.gen_range(0.0..3.0);
            let slope = if g { b1 } else { b0 };
            y.push(fe + 0.1 * t as f64 + slope * xv + rng.gen_range(-1.0..1.0));
            x.push(xv);
            part.push(f64::from(g));
            firm.push(format!("F{f}"));
            q.push(format!("Q{t}"));
        }
    }
    let mut fr = Frame::new(n);
    fr.set_numeric("y", y);
    fr.set_numeric("nor", x);
    fr.set_numeric("part", part);
    fr.set_label("firm_id", firm);
    fr.set_label("fiscal_quarter", q);
    fr
}

fn permutation_power_size() -> Outcome {
    let start = Instant::now();
    let spec = RegressionSpec::new("perm", "y", &["nor"]);
    let mut above = 0;
    for run in 0..100u64 {
        let f = permutation_fixture(1000 + run, 30, 6, 1.0, 1.0);
        let r = fisher_permutation_diff(&spec, &f, "part", "nor", 199, run).map_err(|e| format!("null run {run}: {e}"))?;
        if r.p_two_sided > 0.05 {
            above += 1;
        }
    }
    check(above >= 90, || format!("only {above}/100 null runs have p > 0.05"))?;
    let f = permutation_fixture(8, 100, 20, 0.5, 1.0);
    let r = fisher_permutation_diff(&spec, &f, "part", "nor", 999, 8).map_err(|e| e.to_string())?;
    check(r.p_two_sided < 0.01, || format!("planted difference p = {}", r.p_two_sided))?;
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(60))?;
    Ok(format!("{above}/100 null runs with p > 0.05; planted 2x slope p = {:.4} ({elapsed:.2?})", r.p_two_sided))
}

// 9

fn fixture_lists() -> WordLists {
    WordLists::parse(
        "good\ngreat\nstrong\nimprove\n",
        "bad\nweak\nloss\ndecline\n",
        "may\nuncertain\napproximately\nperhaps\n",
        "we expect\nwill\nanticipate\n",
    )
    .unwrap()
}

fn fog_and_tone() -> Outcome {
    let o = FogOptions::default();
    // 6 words, 2 sentences, no complex word: 0.4·3 = 1.2.
    let fog_cases = [
        ("The cat sat. The dog ran.", 1.2),
        // 10 words, 1 sentence, 2 complex words: 0.4·10 + 100·0.2.
        ("We saw a big dog and an unusual elephant run.", 24.0),
        ("Cat.", 0.4),
    ];
    for (text, want) in fog_cases {
        let got = fog_index(text, o).map_err(|e| e.to_string())?;
        check((got - want).abs() <= 1e-9, || format!("fog({text:?}) = {got}, want {want}"))?;
    }
    let l = fixture_lists();
    let tone_cases = [
        ("good great strong bad", 0.5),
        ("the quarter ended", 0.0),
        ("weak decline, strong loss", -0.5),
        ("bad bad", -1.0),
    ];
    for (text, want) in tone_cases {
        let got = tone(text, &l);
        check((got - want).abs() <= 1e-9, || format!("tone({text:?}) = {got}, want {want}"))?;
    }

    let root = repo_root();
    let lists = load_word_lists(&root.join("data/lexicon")).map_err(|e| e.to_string())?;
    let corpus = ingest_dir(&root.join("data/synthetic/transcripts")).map_err(|e| e.to_string())?;
    let (mut texts, mut lo, mut hi) = (0usize, f64::INFINITY, f64::NEG_INFINITY);
    for t in &corpus.transcripts {
        let mut values = vec![text_metrics(&t.presentation, &lists, o).tone];
        for x in &t.exchanges {
            values.push(exchange_metrics(x, &lists, TurnScope::AnalystOnly, o).tone);
            values.push(exchange_metrics(x, &lists, TurnScope::AllTurns, o).tone);
        }
        for v in values {
            texts += 1;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    check((-1.0..=1.0).contains(&lo) && (-1.0..=1.0).contains(&hi), || format!("tone range [{lo}, {hi}]"))?;
    Ok(format!("fog and tone fixtures exact; {texts} corpus texts with tone in [{lo:.3}, {hi:.3}]"))
}

// 10

fn coef_in(path: &Path, term: &str) -> Result<f64, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let (ti, ci) = (
        header.iter().position(|h| *h == "term").ok_or("no term column")?,
        header.iter().position(|h| *h == "coef").ok_or("no coef column")?,
    );
    for l in lines {
        let cells: Vec<&str> = l.split(',').collect();
        if cells.get(ti) == Some(&term) {
            return cells[ci].parse().map_err(|e| format!("{}: {e}", path.display()));
        }
    }
    Err(format!("{} has no {term} row", path.display()))
}

fn end_to_end() -> Outcome {
    let root = repo_root().canonicalize().map_err(|e| e.to_string())?;
    let corpus = ingest_dir(&root.join("data/synthetic/transcripts")).map_err(|e| e.to_string())?;
    let firms: BTreeSet<&str> = corpus.transcripts.iter().map(|t| t.firm_id.as_str()).collect();
    let quarters: BTreeSet<_> = corpus.transcripts.iter().map(|t| t.fiscal_quarter).collect();
    check(firms.len() >= 40 && quarters.len() >= 8, || format!("{} firms x {} quarters", firms.len(), quarters.len()))?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let set = |k: &str, v: &Path| format!("{k}={}", v.display());
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_nonanswer"))
        .current_dir(dir.path())
        .env("RUST_LOG", "error")
        .args(["run-all", "--set"])
        .arg(set("paths.corpus", &root.join("data/synthetic/transcripts")))
        .arg("--set")
        .arg(set("paths.lexicon", &root.join("data/lexicon")))
        .arg("--set")
        .arg(set("paths.data", &root.join("data/synthetic")))
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(out.status.success(), || format!("run-all exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
    let reports = dir.path().join("out/reports");
    for f in &FAMILIES {
        let p = reports.join(format!("{}.txt", f.name));
        check(p.is_file(), || format!("{} missing", f.name))?;
    }
    let index = std::fs::read_to_string(reports.join("index.txt")).map_err(|e| e.to_string())?;
    check(!index.contains("not generated"), || index.clone())?;
    let mut betas = Vec::new();
    for dep in ["error", "dispersion", "uncertainty"] {
        for variant in ["nor", "controls"] {
            let b = coef_in(&dir.path().join(format!("out/results/results_t3_{dep}_{variant}.csv")), "NOR_Firm")?;
            check(b > 0.0, || format!("beta1 for {dep} ({variant}) is {b}"))?;
            betas.push(b);
        }
    }
    within_budget(elapsed, Duration::from_secs(300))?;
    Ok(format!(
        "{} firms x {} quarters, {} report families, beta1 > 0 in all {} baseline columns ({elapsed:.1?})",
        firms.len(),
        quarters.len(),
        FAMILIES.len(),
        betas.len()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("prompt fidelity", prompt_fidelity),
        ("measure counts and overlap", measure_counts),
        ("uncertainty identity", uncertainty_identity),
        ("fixed-effects OLS oracle", fe_ols_oracle),
        ("singleton-cluster standard errors", singleton_clusters),
        ("bootstrap share", bootstrap_share),
        ("match-ratio table", match_ratio_table),
        ("permutation size and power", permutation_power_size),
        ("fog and tone", fog_and_tone),
        ("end-to-end run-all", end_to_end),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
