//! Statistical behavior of rejection sampling with a probabilistic backend.
//!
//! With per-attempt validity probability p and cap k, closed forms give:
//! first-attempt success rate p, overall success 1-(1-p)^k, and mean tries
//! over successes sum(i*p*(1-p)^(i-1), i=1..k) / (1-(1-p)^k). For p=0.5 and
//! k=8 these are 0.5, 255/256, and about 1.9686.

use rei_core::engine::backends::MockBackend;
use rei_core::engine::{
    run_batch, BatchItem, BatchMode, BatchOptions, GenerationConfig, PromptStrategy,
};
use rei_core::expr::{Document, Expression, Node};
use rei_core::metrics::try_stats;
use std::sync::Arc;

fn keyword_instance(index: usize) -> BatchItem {
    // Three distinct keywords so every corruption is detectable.
    let words = ["river", "stone", "bridge"];
    let mut items = vec![Node::Mask(0)];
    for (i, word) in words.iter().enumerate() {
        items.push(Node::Lexicon {
            surface: word.to_string(),
            serial: i as u32,
        });
        items.push(Node::Mask(i as u32 + 1));
    }
    BatchItem {
        id: format!("stat-{index:05}"),
        doc: Document::bare(Expression::new(items)),
    }
}

#[tokio::test]
async fn rejection_statistics_match_closed_forms() {
    let n = 10_000;
    let k = 8;
    let p = 0.5;
    let items: Vec<BatchItem> = (0..n).map(keyword_instance).collect();
    let config = GenerationConfig {
        max_tries: k,
        ..GenerationConfig::api()
    };
    let options = BatchOptions {
        seed: 20_240_817,
        jobs: 16,
        mode: BatchMode::Generate,
        prompting: PromptStrategy::RenderedDocument,
    };
    let results = run_batch(&items, Arc::new(MockBackend::new(p)), &config, &options)
        .await
        .unwrap();

    let logs: Vec<_> = results.iter().filter_map(|r| r.log.clone()).collect();
    assert_eq!(logs.len(), n);

    let stats = try_stats(&logs, k).unwrap();
    let success = results.iter().filter(|r| r.accepted.is_some()).count() as f64 / n as f64;

    let expected_success = 1.0 - (1.0 - p).powi(k as i32);
    let expected_avg: f64 = (1..=k)
        .map(|i| i as f64 * p * (1.0 - p).powi(i as i32 - 1))
        .sum::<f64>()
        / expected_success;

    assert!(
        (stats.first_sr - p).abs() < 0.02,
        "first-attempt success {} vs {p}",
        stats.first_sr
    );
    assert!(
        (success - expected_success).abs() < 0.005,
        "success {success} vs {expected_success}"
    );
    let avg = stats.avg_try.unwrap();
    assert!(
        (avg - expected_avg).abs() < 0.05,
        "avg tries {avg} vs {expected_avg}"
    );
    // Sanity on the closed forms themselves.
    assert!((expected_success - 0.99609375).abs() < 1e-9);
    assert!((expected_avg - 1.9686).abs() < 1e-3);
}
