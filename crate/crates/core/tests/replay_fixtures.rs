//! Replays the bundled golden fixtures end to end.

use std::path::PathBuf;

use graphqa_core::replay::run_replay;

fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

#[test]
fn amazon_fixture_replays_byte_identically() {
    let outcome = run_replay(&fixture_dir("amazon")).expect("fixture should load");
    assert!(outcome.passed(), "\n{}", outcome.render());
    assert_eq!(outcome.state.final_answer.as_deref(), Some("48"));
    assert_eq!(outcome.state.attempts_used(), 2);
    assert_eq!(outcome.state.n, 1);
}

#[test]
fn biomedical_fixture_replays_byte_identically() {
    let outcome = run_replay(&fixture_dir("biomedical")).expect("fixture should load");
    assert!(outcome.passed(), "\n{}", outcome.render());
    assert_eq!(
        outcome.state.final_answer.as_deref(),
        Some("atopic dermatitis")
    );
    assert_eq!(outcome.state.attempts_used(), 2);
    assert_eq!(outcome.state.n, 1);
}
