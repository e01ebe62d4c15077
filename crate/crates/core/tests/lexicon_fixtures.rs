use nonanswer_core::corpus::{QaExchange, Role, Turn};
use nonanswer_core::lexicon::{exchange_metrics, fog_index, lexical_ratio, text_metrics, tone, FogOptions, TurnScope, WordLists};

fn lists() -> WordLists {
    WordLists::parse(
        "good\ngreat\nstrong\nimprove\n",
        "bad\nweak\nloss\ndecline\n",
        "may\nuncertain\napproximately\nperhaps\n",
        "we expect\nwill\nanticipate\n",
    )
    .unwrap()
}

/// Syllables looked up from a hand-made table rather than estimated.
fn oracle_syllables(word: &str) -> usize {
    match word.to_ascii_lowercase().as_str() {
        "unusual" => 4,
        "elephant" => 3,
        _ => 1,
    }
}

fn oracle_fog(sentences: &[&[&str]]) -> f64 {
    let words: Vec<&str> = sentences.iter().flat_map(|s| s.iter().copied()).collect();
    let complex = words.iter().filter(|w| oracle_syllables(w) >= 3).count();
    0.4 * words.len() as f64 / sentences.len() as f64 + 100.0 * complex as f64 / words.len() as f64
}

#[test]
fn fog_matches_hand_counts() {
    let o = FogOptions::default();
    let a = fog_index("The cat sat. The dog ran.", o).unwrap();
    assert!((a - 1.2).abs() < 1e-9);
    assert!((a - oracle_fog(&[&["The", "cat", "sat"], &["The", "dog", "ran"]])).abs() < 1e-9);
    let words = ["We", "saw", "a", "big", "dog", "and", "an", "unusual", "elephant", "run"];
    let b = fog_index("We saw a big dog and an unusual elephant run.", o).unwrap();
    assert!((b - 24.0).abs() < 1e-9);
    assert!((b - oracle_fog(&[&words])).abs() < 1e-9);
    assert!((fog_index("Cat.", o).unwrap() - 0.4).abs() < 1e-9);
}

#[test]
fn tone_fixtures() {
    let l = lists();
    assert!((tone("good great strong bad", &l) - 0.5).abs() < 1e-12);
    assert_eq!(tone("the quarter ended", &l), 0.0);
    let mut words: Vec<&str> = Vec::new();
    let pos = ["good", "great", "strong", "improve", "good", "great", "strong"];
    let neg = ["bad", "weak", "loss"];
    let filler = ["the", "company", "said", "revenue", "was", "in", "line", "with", "plan", "today"];
    for i in 0..190 {
        words.push(filler[i % filler.len()]);
        if i % 19 == 0 && i / 19 < 7 {
            words.push(pos[i / 19]);
        }
        if i % 61 == 0 && i / 61 < 3 {
            words.push(neg[i / 61]);
        }
    }
    assert_eq!(words.len(), 200);
    let text = words.join(" ");
    assert!((tone(&text, &l) - 0.4).abs() < 1e-12);
}

#[test]
fn ratio_fixtures() {
    let l = lists();
    let mut words = vec!["plan"; 92];
    words.extend(["may"; 8]);
    assert!((lexical_ratio(&words.join(" "), &l.uncertainty).unwrap() - 0.08).abs() < 1e-12);
    assert!((lexical_ratio("perhaps", &l.uncertainty).unwrap() - 1.0).abs() < 1e-12);
    let mut words = vec!["plan"; 46];
    words.extend(["we", "expect", "we", "expect"]);
    assert!((lexical_ratio(&words.join(" "), &l.forward_looking).unwrap() - 0.04).abs() < 1e-12);
}

#[test]
fn exchange_scope_excludes_managers() {
    let l = lists();
    let x = QaExchange {
        conver_id: "T-1".into(),
        order: 1,
        turns: vec![
            Turn::new(Role::Analyst, Some("A"), "Is demand good and strong?").unwrap(),
            Turn::new(Role::Manager, Some("M"), "Weak, bad, loss, decline, weak.").unwrap(),
        ],
    };
    let m = exchange_metrics(&x, &l, TurnScope::AnalystOnly, FogOptions::default());
    assert_eq!(m.tone, 1.0);
    let same = text_metrics("Is demand good and strong?", &l, FogOptions::default());
    assert_eq!(m, same);
}
