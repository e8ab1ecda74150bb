//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use assembly_lens::corpus::{Role, Round, SessionKind, SpeakerTurn, Transcript, VoteChoice, VoteRecord};
use assembly_lens::gateway::{
    schema, ChatRequest, Gateway, GatewayError, MockChatBackend, MockEmbedBackend, MockScript,
    ResponseCache, ValidationPolicy, MOCK_CHAT_MODEL,
};
use assembly_lens::pipeline::{run_end_to_end, RunManifest, ToolConfig};
use assembly_lens::space::{
    calibrate_affinities, rank_gaps, tsne_embed, tsne_gradient, tsne_objective, EmbeddingMatrix,
    TsneConfig,
};
use assembly_lens::stance::{
    build_profile, detect_vote_changes, support_rate, ChangeKind, EvidenceCategory, EvidenceMatch,
    EvidenceRecord,
};
use assembly_lens::suggest::SuggestionRecord;
use assembly_lens::util::Clock;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini")
}

fn pass(n: u32, what: &str) {
    println!("acceptance criterion {n} PASS: {what}");
}

/// Criterion 1: rank_gaps equals a brute-force double-loop oracle, id for
/// id, on 20 seeded instances of 200 suggestions x 20 recommendations in
/// 64 dimensions, under one second per instance.
#[test]
fn criterion_1_gap_ranking_oracle_equivalence() {
    // Test-local cosine, independent of the library implementation.
    fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    for instance in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + instance);
        let dim = 64;
        let sugg_rows: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let rec_rows: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let sugg_ids: Vec<String> = (0..200).map(|i| format!("s{i:03}")).collect();
        let rec_ids: Vec<String> = (0..20).map(|i| format!("r{i:02}")).collect();

        // Brute-force oracle: max similarity per suggestion, sort by
        // distance descending with id tie-break, truncate.
        let mut expected: Vec<(String, f64)> = sugg_ids
            .iter()
            .zip(&sugg_rows)
            .map(|(id, row)| {
                let best = rec_rows
                    .iter()
                    .map(|r| oracle_cosine(row, r))
                    .fold(f64::NEG_INFINITY, f64::max);
                (id.clone(), 1.0 - best)
            })
            .collect();
        expected.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        expected.truncate(100);

        let suggestions = EmbeddingMatrix::new(sugg_ids, sugg_rows, "m").unwrap();
        let recommendations = EmbeddingMatrix::new(rec_ids, rec_rows, "m").unwrap();
        let start = Instant::now();
        let ranking = rank_gaps(&suggestions, &recommendations, 100).unwrap();
        let elapsed = start.elapsed();
        assert!(
            elapsed.as_secs_f64() < 1.0,
            "instance {instance} took {elapsed:?}"
        );

        let got: Vec<&str> = ranking.entries.iter().map(|e| e.suggestion_id.as_str()).collect();
        let want: Vec<&str> = expected.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(got, want, "id sequence diverges on instance {instance}");
    }
    pass(1, "rank_gaps matches the brute-force oracle on 20 seeded instances in < 1 s each");
}

/// Criterion 2: analytic KL gradient vs central finite differences within
/// relative error 1e-4; per-point calibration entropy error <= 1e-5;
/// symmetrized affinities sum to 1 +/- 1e-12.
#[test]
fn criterion_2_tsne_gradient_and_calibration() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let n = 12;
    let vectors = Array2::from_shape_fn((n, 5), |_| rng.gen_range(-1.0..1.0f64));
    let perplexity = 3.0;
    let affinities = calibrate_affinities(&vectors, perplexity, 1e-5, 50).unwrap();

    // Affinity total and symmetry.
    assert!((affinities.p.sum() - 1.0).abs() <= 1e-12);

    // Independent entropy check from the calibrated bandwidths.
    for i in 0..n {
        let beta = 1.0 / (2.0 * affinities.sigmas[i] * affinities.sigmas[i]);
        let mut weights = vec![0.0f64; n];
        let mut sum = 0.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let diff = &vectors.row(i) - &vectors.row(j);
            let d2 = diff.dot(&diff);
            weights[j] = (-beta * d2).exp();
            sum += weights[j];
        }
        let entropy_bits: f64 = weights
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, w)| {
                let p = w / sum;
                if p > 0.0 {
                    -p * p.log2()
                } else {
                    0.0
                }
            })
            .sum();
        assert!(
            (entropy_bits - perplexity.log2()).abs() <= 1e-5,
            "point {i}: entropy {entropy_bits}, target {}",
            perplexity.log2()
        );
    }

    // Gradient vs central differences at 10 random coordinates.
    let mut y = Array2::from_shape_fn((n, 2), |_| rng.gen_range(-0.5..0.5f64));
    let analytic = tsne_gradient(&affinities.p, &y);
    let h = 1e-5;
    for _ in 0..10 {
        let i = rng.gen_range(0..n);
        let d = rng.gen_range(0..2);
        let original = y[[i, d]];
        y[[i, d]] = original + h;
        let plus = tsne_objective(&affinities.p, &y);
        y[[i, d]] = original - h;
        let minus = tsne_objective(&affinities.p, &y);
        y[[i, d]] = original;
        let numeric = (plus - minus) / (2.0 * h);
        let exact = analytic[[i, d]];
        let rel = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-6);
        assert!(
            rel <= 1e-4,
            "gradient mismatch at ({i},{d}): analytic {exact}, numeric {numeric}, rel {rel}"
        );
    }
    pass(2, "analytic gradient matches finite differences (rel <= 1e-4); entropy error <= 1e-5; sum(P) = 1 +/- 1e-12");
}

/// Criterion 3: three seeded 16-D Gaussian clusters (30 points each,
/// centers 10 sigma apart) keep >= 95% nearest-centroid label agreement in
/// 2-D, with final KL below the KL at iteration 250, in under 30 seconds.
#[test]
fn criterion_3_tsne_cluster_preservation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dim = 16;
    // Centers pairwise exactly 10 apart; cluster sigma is 1.
    let mut centers = vec![vec![0.0; dim]; 3];
    centers[1][0] = 10.0;
    centers[2][0] = 5.0;
    centers[2][1] = 75.0f64.sqrt();

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (label, center) in centers.iter().enumerate() {
        for k in 0..30 {
            ids.push(format!("c{label}p{k:02}"));
            rows.push(
                center
                    .iter()
                    .map(|&c| c + rng.sample::<f64, _>(rand_distr::StandardNormal))
                    .collect(),
            );
            labels.push(label);
        }
    }
    let matrix = EmbeddingMatrix::new(ids, rows, "m").unwrap();
    let config = TsneConfig::default().with_seed(3);
    let map = tsne_embed(&matrix, &config).unwrap();

    let kl_at_switch = map.kl_trace[config.exaggeration_iters];
    let kl_final = *map.kl_trace.last().unwrap();
    assert!(
        kl_final < kl_at_switch,
        "final KL {kl_final} should be below iteration-250 KL {kl_at_switch}"
    );

    // 2-D centroids of the true labels, then nearest-centroid assignment.
    let mut centroids = [[0.0f64; 2]; 3];
    let mut counts = [0usize; 3];
    for (i, &label) in labels.iter().enumerate() {
        centroids[label][0] += map.xy[i][0];
        centroids[label][1] += map.xy[i][1];
        counts[label] += 1;
    }
    for (c, n) in centroids.iter_mut().zip(counts) {
        c[0] /= n as f64;
        c[1] /= n as f64;
    }
    let agree = labels
        .iter()
        .enumerate()
        .filter(|(i, &label)| {
            let nearest = (0..3)
                .min_by(|&a, &b| {
                    let da = (map.xy[*i][0] - centroids[a][0]).powi(2)
                        + (map.xy[*i][1] - centroids[a][1]).powi(2);
                    let db = (map.xy[*i][0] - centroids[b][0]).powi(2)
                        + (map.xy[*i][1] - centroids[b][1]).powi(2);
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            nearest == label
        })
        .count();
    let agreement = agree as f64 / labels.len() as f64;
    assert!(
        agreement >= 0.95,
        "nearest-centroid agreement {agreement} below 0.95"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass(3, "cluster labels agree >= 95% in 2-D, KL improves past iteration 250, run < 30 s");
}

/// Criterion 4: the scripted retry contract and the schema constraints on
/// category and confidence.
#[test]
fn criterion_4_validation_retry_contract() {
    fn evidence_batch(n: usize, category: &str, confidence: f64) -> String {
        let items: Vec<serde_json::Value> = (0..n)
            .map(|_| {
                serde_json::json!({
                    "category": category,
                    "topic_mentioned": category == "1",
                    "llm_rationale": if category == "1" { "mentions the statement" } else { "" },
                    "response_quote": if category == "2" { "prior remark" } else { "" },
                    "llm_response_rationale": if category == "2" { "responds to it" } else { "" },
                    "irrelevance_reason": if category == "3" { "off topic" } else { "" },
                    "confidence_score": confidence,
                })
            })
            .collect();
        serde_json::to_string(&serde_json::json!({"utterance_classifications": items})).unwrap()
    }

    let request = ChatRequest {
        system: "sys".into(),
        user: "user".into(),
        schema_id: schema::EVIDENCE_BATCH_SCHEMA_ID.into(),
    };
    let gateway_with = |responses: Vec<String>| {
        let mut script = MockScript::new();
        script.add(&request.digest(MOCK_CHAT_MODEL), None, responses);
        Gateway::new(
            Box::new(MockChatBackend::scripted(&script)),
            Box::new(MockEmbedBackend),
            ResponseCache::ephemeral(),
            4,
            Clock::Fixed(0),
        )
    };

    // Length 9, then valid length 10: success on the second attempt.
    let gateway = gateway_with(vec![evidence_batch(9, "3", 0.1), evidence_batch(10, "3", 0.1)]);
    let descriptor = gateway
        .schemas()
        .get(schema::EVIDENCE_BATCH_SCHEMA_ID)
        .unwrap()
        .clone();
    let result = gateway
        .complete_structured(&request, &descriptor, &ValidationPolicy::exact_length(10))
        .unwrap();
    assert_eq!(result.attempts, 2);

    // Three invalid responses with max_retries = 2: exhausted.
    let gateway = gateway_with(vec![
        evidence_batch(9, "3", 0.1),
        evidence_batch(8, "3", 0.1),
        evidence_batch(7, "3", 0.1),
    ]);
    let err = gateway
        .complete_structured(&request, &descriptor, &ValidationPolicy::exact_length(10))
        .unwrap_err();
    assert!(matches!(
        err,
        GatewayError::ValidationExhausted { attempts: 3, .. }
    ));

    // Category "4" violates the ^[123]$ pattern.
    let gateway = gateway_with(vec![evidence_batch(10, "4", 0.5); 3]);
    let err = gateway
        .complete_structured(&request, &descriptor, &ValidationPolicy::exact_length(10))
        .unwrap_err();
    match &err {
        GatewayError::ValidationExhausted { last_violation, .. } => {
            assert!(last_violation.contains("pattern"), "{last_violation}");
        }
        other => panic!("expected ValidationExhausted, got {other:?}"),
    }

    // Confidence 1.2 violates the [0, 1] bound.
    let gateway = gateway_with(vec![evidence_batch(10, "1", 1.2); 3]);
    let err = gateway
        .complete_structured(&request, &descriptor, &ValidationPolicy::exact_length(10))
        .unwrap_err();
    match &err {
        GatewayError::ValidationExhausted { last_violation, .. } => {
            assert!(last_violation.contains("above maximum"), "{last_violation}");
        }
        other => panic!("expected ValidationExhausted, got {other:?}"),
    }
    pass(4, "retry contract: invalid-then-valid = 2 attempts; 3 invalid = exhausted; category 4 and confidence 1.2 rejected");
}

/// Criterion 5: supermajority boundary arithmetic and the constructed
/// 7-of-19 flip ledger.
#[test]
fn criterion_5_vote_math_boundary() {
    let ledger = |agrees: usize, total: usize, round: Round| -> Vec<VoteRecord> {
        (0..total)
            .map(|i| VoteRecord {
                delegate_id: format!("d{i:02}"),
                statement_id: "s".into(),
                round,
                choice: if i < agrees {
                    VoteChoice::Agree
                } else {
                    VoteChoice::Neutral
                },
            })
            .collect()
    };

    let sixteen = support_rate("s", Round::Day2Draft, &ledger(16, 19, Round::Day2Draft)).unwrap();
    assert!((sixteen.rate - 0.8421).abs() < 5e-5);
    assert!(sixteen.passed);

    let fifteen = support_rate("s", Round::Day2Draft, &ledger(15, 19, Round::Day2Draft)).unwrap();
    assert!((fifteen.rate - 0.7895).abs() < 5e-5);
    assert!(!fifteen.passed);

    // Day 2 passes at 16/19; seven delegates flip Agree -> Neutral/Disagree
    // (mirroring the showcased delegate plus six others), dropping Day 3 to
    // 9/19.
    let mut votes = ledger(16, 19, Round::Day2Draft);
    for i in 0..19 {
        let choice = if i < 9 {
            VoteChoice::Agree
        } else if i < 16 {
            if i % 2 == 0 {
                VoteChoice::Neutral
            } else {
                VoteChoice::Disagree
            }
        } else {
            VoteChoice::Neutral
        };
        votes.push(VoteRecord {
            delegate_id: format!("d{i:02}"),
            statement_id: "s".into(),
            round: Round::Day3Final,
            choice,
        });
    }
    let day2 = support_rate("s", Round::Day2Draft, &votes).unwrap();
    let day3 = support_rate("s", Round::Day3Final, &votes).unwrap();
    assert!(day2.passed);
    assert!(!day3.passed);
    assert!(day3.rate < 0.80);
    let report = detect_vote_changes("s", &votes).unwrap();
    let withdrawn = report
        .changes
        .iter()
        .filter(|c| c.kind == ChangeKind::SupportWithdrawn)
        .count();
    assert_eq!(withdrawn, 7);
    pass(5, "16/19 = 0.8421 passes, 15/19 = 0.7895 fails, 7-of-19 withdrawal flips the outcome");
}

/// Criterion 6: false-positive reduction arithmetic, exact.
#[test]
fn criterion_6_fp_reduction_arithmetic() {
    use assembly_lens::eval::{compare_runs, GoldLabels, GoldTask, RunOutput};

    let mut gold_csv = String::from("conversation_id,turn_index,label\n");
    for i in 0..25 {
        gold_csv.push_str(&format!("c,{i},0\n"));
    }
    let gold = GoldLabels::parse_csv(gold_csv.as_bytes(), GoldTask::Suggestions, "gold").unwrap();
    let record = |turn: usize| SuggestionRecord {
        suggestion_id: format!("sug-c-{turn:04}"),
        user_id: "d01".into(),
        quote: "q".into(),
        suggestion: "s".into(),
        conversation_id: "c".into(),
        turn_index: turn,
        day: 2,
        phase: "p".into(),
        quote_matches_source: true,
    };
    let run_a: Vec<SuggestionRecord> = (0..20).map(record).collect();
    let run_b: Vec<SuggestionRecord> = (0..2).map(record).collect();
    let comparison = compare_runs(
        &RunOutput::Suggestions(&run_a),
        &RunOutput::Suggestions(&run_b),
        &gold,
    )
    .unwrap();
    assert_eq!(comparison.run_a.fp, 20);
    assert_eq!(comparison.run_b.fp, 2);
    // Exact, tolerance zero.
    assert_eq!(comparison.fp_reduction, 0.90);
    pass(6, "fp 20 -> 2 yields fp_reduction exactly 0.90");
}

/// Criterion 7: the bundled fixture run end-to-end twice with the scripted
/// mock produces byte-identical artifacts in under 10 seconds total.
#[test]
fn criterion_7_end_to_end_determinism() {
    let start = Instant::now();
    let mut config = ToolConfig::from_path(&fixture_dir().join("config.mock.json")).unwrap();

    let run_into = |config: &mut ToolConfig, dir: &Path| {
        config.out_dir = dir.to_path_buf();
        run_end_to_end(config, None).unwrap()
    };
    let tmp = tempfile::tempdir().unwrap();
    let dir_a = tmp.path().join("a");
    let dir_b = tmp.path().join("b");
    let outputs_a = run_into(&mut config, &dir_a);
    let outputs_b = run_into(&mut config, &dir_b);
    assert_eq!(outputs_a.len(), outputs_b.len());

    // Byte-compare every artifact: suggestion JSONL, map SVG, gap CSV,
    // profile reports, manifests, and the rest.
    let mut compared = 0;
    for path_a in &outputs_a {
        let rel = path_a.strip_prefix(&dir_a).unwrap();
        let path_b = dir_b.join(rel);
        let bytes_a = std::fs::read(path_a).unwrap();
        let bytes_b = std::fs::read(&path_b).unwrap();
        assert_eq!(bytes_a, bytes_b, "artifact differs across runs: {rel:?}");
        compared += 1;
    }
    for required in [
        "suggestions.jsonl",
        "map.svg",
        "gaps.csv",
        "profiles/d01_s_divest.md",
        "manifests/extract.json",
    ] {
        assert!(dir_a.join(required).exists(), "missing artifact {required}");
    }
    assert!(compared >= 20, "only {compared} artifacts compared");

    // The pinned fixture expectation: exactly these six records.
    let jsonl = std::fs::read_to_string(dir_a.join("suggestions.jsonl")).unwrap();
    let ids: Vec<String> = jsonl
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["suggestion_id"]
            .as_str()
            .unwrap()
            .to_string())
        .collect();
    assert_eq!(
        ids,
        vec![
            "sug-day1_prereads-0007",
            "sug-day1_prereads-0021",
            "sug-day2_draftrecs-0005",
            "sug-day2_draftrecs-0017",
            "sug-day3_debrief-0008",
            "sug-day3_debrief-0020",
        ]
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    pass(7, "two scripted end-to-end runs are byte-identical with the six pinned records, < 10 s");
}

/// Criterion 8: 1,000 fuzzed EvidenceMatch values obey the
/// category-conditional field constraints exactly; profile chronology is
/// strictly increasing; planted quote mismatches are flagged.
#[test]
fn criterion_8_evidence_coherence_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let categories = [
        EvidenceCategory::Direct,
        EvidenceCategory::Contextual,
        EvidenceCategory::NotRelevant,
    ];
    let mut valid = 0;
    for _ in 0..1000 {
        let category = categories[rng.gen_range(0..3)];
        let fill = |rng: &mut ChaCha8Rng| -> String {
            if rng.gen_bool(0.5) {
                "text".into()
            } else {
                String::new()
            }
        };
        let matched = EvidenceMatch {
            category,
            topic_mentioned: rng.gen_bool(0.5),
            rationale: fill(&mut rng),
            response_quote: fill(&mut rng),
            response_rationale: fill(&mut rng),
            irrelevance_reason: fill(&mut rng),
            confidence: rng.gen_range(-0.2..1.2),
        };
        // The category-conditional property, asserted directly and
        // independently of the validator under test.
        let filled = |s: &str| !s.trim().is_empty();
        let expected_ok = filled(&matched.rationale) == (category == EvidenceCategory::Direct)
            && filled(&matched.response_quote) == (category == EvidenceCategory::Contextual)
            && filled(&matched.response_rationale) == (category == EvidenceCategory::Contextual)
            && filled(&matched.irrelevance_reason)
                == (category == EvidenceCategory::NotRelevant)
            && (0.0..=1.0).contains(&matched.confidence);
        assert_eq!(
            matched.check_coherence().is_ok(),
            expected_ok,
            "validator disagrees with the spec property on {matched:?}"
        );
        if expected_ok {
            valid += 1;
        }
    }
    assert!(valid > 0, "fuzz never generated a valid match");

    // Profile chronology: records shuffled in, strictly increasing out.
    let corpus_dir = fixture_dir();
    let corpus = assembly_lens::corpus::load_corpus(&corpus_dir.join("manifest.json")).unwrap();
    let make = |conversation: &str, day: u32, turn: usize| EvidenceRecord {
        matched: EvidenceMatch {
            category: EvidenceCategory::Direct,
            topic_mentioned: true,
            rationale: "mentions it".into(),
            response_quote: String::new(),
            response_rationale: String::new(),
            irrelevance_reason: String::new(),
            confidence: 0.9,
        },
        statement_id: "s_divest".into(),
        conversation_id: conversation.into(),
        turn_index: turn,
        speaker_id: "d01".into(),
        day,
        phase: "p".into(),
        response_quote_matched: true,
    };
    let records = vec![
        make("day3_debrief", 3, 4),
        make("day1_prereads", 1, 9),
        make("day2_draftrecs", 2, 10),
        make("day1_prereads", 1, 7),
        make("day3_debrief", 3, 12),
    ];
    let profile = build_profile("d01", "s_divest", &corpus, &records, 0.5).unwrap();
    let keys: Vec<(u32, usize, usize)> = profile
        .evidence
        .iter()
        .map(|r| {
            (
                r.day,
                corpus.conversation_position(&r.conversation_id).unwrap(),
                r.turn_index,
            )
        })
        .collect();
    for pair in keys.windows(2) {
        assert!(pair[0] < pair[1], "chronology violated: {keys:?}");
    }

    // Planted quote mismatch flagged while the honest quote is not.
    assert!(assembly_lens::util::is_loose_substring(
        "divest  the endowment",
        "I think MIT should divest the endowment from fossil fuels"
    ));
    assert!(!assembly_lens::util::is_loose_substring(
        "we never said this",
        "I think MIT should divest the endowment from fossil fuels"
    ));
    pass(8, "1,000 fuzzed matches validate exactly per spec; chronology strict; planted mismatch flagged");
}

/// Criterion 9: for 500 random transcripts and batch sizes 1..=10, the
/// flattened window currents reproduce the turn sequence exactly.
#[test]
fn criterion_9_batching_partition_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..500 {
        let n = rng.gen_range(0..60);
        let turns: Vec<SpeakerTurn> = (0..n)
            .map(|i| SpeakerTurn {
                turn_index: i,
                speaker_id: format!("d{:02}", rng.gen_range(0..5)),
                role: Role::Delegate,
                text: format!("turn {i} of case {case}"),
            })
            .collect();
        let transcript = Transcript {
            conversation_id: format!("case{case}"),
            day: rng.gen_range(0..4),
            phase: "fuzz".into(),
            session_kind: SessionKind::Breakout,
            turns: turns.clone(),
        };
        let batch_size = rng.gen_range(1..=10);
        let context_size = rng.gen_range(0..=10);
        let windows = assembly_lens::corpus::window_turns(&transcript, batch_size, context_size);
        let flattened: Vec<&SpeakerTurn> = windows.iter().flat_map(|w| &w.current).collect();
        assert_eq!(flattened.len(), turns.len(), "case {case}");
        for (a, b) in flattened.iter().zip(&turns) {
            assert_eq!(*a, b, "case {case}");
        }
        // Context is exactly the preceding turns.
        for window in &windows {
            let expected_start = window.start_index.saturating_sub(context_size);
            assert_eq!(
                window.context,
                turns[expected_start..window.start_index].to_vec(),
                "case {case}"
            );
        }
    }
    pass(9, "window currents partition 500 random transcripts exactly for batch sizes 1..=10");
}

/// Run-manifest integrity rides along with the acceptance suite: input
/// digests must match the files actually read.
#[test]
fn manifest_inputs_match_files_read() {
    let mut config = ToolConfig::from_path(&fixture_dir().join("config.mock.json")).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    config.out_dir = tmp.path().to_path_buf();
    assembly_lens::pipeline::run_extract(&config, None).unwrap();
    let manifest = RunManifest::from_path(&tmp.path().join("manifests/extract.json")).unwrap();
    assert!(!manifest.inputs.is_empty());
    for input in &manifest.inputs {
        let path = Path::new(&input.path);
        let resolved = if path.is_absolute() {
            path.to_path_buf()
        } else {
            config.out_dir.join(path)
        };
        let bytes = std::fs::read(&resolved).unwrap();
        assert_eq!(
            assembly_lens::util::digest_bytes(&bytes),
            input.sha256,
            "digest mismatch for {}",
            input.path
        );
    }
    assert_eq!(manifest.template_id.as_deref(), Some("suggestions-v2-final"));
    assert_eq!(manifest.schema_id.as_deref(), Some("suggestion-batch-v1"));
}
