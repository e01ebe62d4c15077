use nonanswer_core::elicitor::{to_reply_json, validate_reply, Category, NorCount};

const RESPONSE_1: &str = include_str!("fixtures/appendix_response_1.txt");
const RESPONSE_2: &str = include_str!("fixtures/appendix_response_2.txt");

#[test]
fn response_one() {
    let a = validate_reply(RESPONSE_1);
    assert_eq!(a.nor_count, NorCount::Count(1));
    assert_eq!(a.category, vec![Category::LackOfInfo]);
    assert_eq!((a.quantity, a.relevance, a.clarity), (Some(3), Some(10), Some(10)));
    assert_eq!(a.pairs.len(), 1);
    assert!(a.pairs[0].question.starts_with("And the Dubai client"));
    assert!(a.pairs[0].answer.ends_with("inability to pay."));
}

#[test]
fn response_two() {
    let a = validate_reply(RESPONSE_2);
    assert_eq!(a.nor_count, NorCount::Count(1));
    assert_eq!(a.category, vec![Category::LackOfInfo]);
    assert_eq!((a.quantity, a.relevance, a.clarity), (Some(4), Some(9), Some(8)));
}

#[test]
fn canonical_form_round_trips() {
    for raw in [RESPONSE_1, RESPONSE_2] {
        let a = validate_reply(raw);
        let b = validate_reply(&to_reply_json(&a));
        assert_eq!(a.nor_count, b.nor_count);
        assert_eq!(a.category, b.category);
        assert_eq!(a.pairs, b.pairs);
        assert_eq!((a.quantity, a.relevance, a.clarity), (b.quantity, b.relevance, b.clarity));
    }
}
