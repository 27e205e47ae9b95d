//! Property tests for the invariants that hold over all inputs: record
//! round-trips, sectioned-table lookup uniqueness, gateway retry and
//! rate-limit behavior, replay canonicalization, exact plan arithmetic,
//! parser totality, recall monotonicity, and metric-oracle agreement.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Duration;

use num::{BigInt, BigRational};
use proptest::prelude::*;

use veritab::agents::{parse_agent_verdict, Outcome};
use veritab::bench::{accuracy, macro_f1, micro_f1};
use veritab::evidence::{
    load_record, serialize_record, Cell, Claim, EvidenceBundle, LabelScheme, Record,
    RecordFormat, Row, Table, Verdict,
};
use veritab::gateway::{
    ChatMessage, ChatRequest, Clock, Gateway, GatewayError, GenerationParams, Mode,
    ModelEndpoint, ScriptStep, ScriptedBackend, VirtualClock,
};
use veritab::plan::{execute_plan, parse_plan, Value};
use veritab::retrieval::{
    recall_at_k, Corpus, Document, RetrievalConfig, RetrievalMethod, Retriever,
};

const RATE_WINDOW: Duration = Duration::from_secs(60);

// ---------------------------------------------------------------------------
// Strategies

fn verdict_strategy(scheme: LabelScheme) -> impl Strategy<Value = Verdict> {
    prop::sample::select(scheme.labels().to_vec())
}

fn cell_text() -> impl Strategy<Value = String> {
    prop_oneof![
        Just(String::new()),
        "[a-z]{1,6}",
        "[1-9][0-9]{0,3}",
        // Thousands separators survive the round trip as text.
        "[1-9][0-9]{2},[0-9]{3}",
    ]
}

fn table_strategy() -> impl Strategy<Value = Table> {
    (1usize..4).prop_flat_map(|ncols| {
        let columns: Vec<String> = (0..ncols).map(|i| format!("c{i}")).collect();
        let row = ("[a-z]{0,8}", prop::collection::vec(cell_text(), ncols)).prop_map(
            |(label, cells)| Row {
                label,
                cells: cells.into_iter().map(Cell::new).collect(),
            },
        );
        ("[a-z ]{0,12}", prop::collection::vec(row, 0..4)).prop_map(move |(caption, rows)| {
            Table::new(caption, columns.clone(), rows).expect("columns are unique by construction")
        })
    })
}

fn record_strategy() -> impl Strategy<Value = Record> {
    (
        "[a-z0-9]{1,8}",
        "[a-z]{1,12}",
        prop::option::of(verdict_strategy(LabelScheme::ThreeWay)),
        prop::collection::vec(table_strategy(), 0..3),
        prop::collection::vec("[a-z ]{0,15}", 0..3),
        prop::collection::vec("[a-z0-9]{1,6}", 0..3),
        prop::collection::vec("[a-z0-9]{1,6}", 0..3),
    )
        .prop_map(
            |(id, text, gold_label, tables, paragraphs, gold_docs, retrieved_docs)| Record {
                claim: Claim {
                    id,
                    text,
                    gold_label,
                },
                evidence: EvidenceBundle { tables, paragraphs },
                gold_docs,
                retrieved_docs,
            },
        )
}

// ---------------------------------------------------------------------------
// Records and tables

proptest! {
    /// Serializing a record and loading it back is the identity.
    #[test]
    fn record_round_trips(record in record_strategy()) {
        let bytes = serialize_record(&record);
        let back = load_record(
            &bytes,
            RecordFormat::Native {
                scheme: LabelScheme::ThreeWay,
            },
        )
        .unwrap();
        prop_assert_eq!(back, record);
    }

    /// With unique (section, row label) pairs, a section-qualified lookup
    /// never reports an ambiguous row.
    #[test]
    fn sectioned_lookup_is_unambiguous(
        nsections in 1usize..4,
        nrows in 1usize..4,
        ncols in 1usize..3,
        values in prop::collection::vec(1u32..1000, 36),
    ) {
        let columns: Vec<String> = (0..ncols).map(|i| format!("c{i}")).collect();
        let mut rows = Vec::new();
        let mut v = values.into_iter().cycle();
        for s in 0..nsections {
            rows.push(Row {
                label: format!("s{s}"),
                cells: vec![Cell::new(""); ncols],
            });
            for r in 0..nrows {
                // The same row label recurs in every section.
                rows.push(Row {
                    label: format!("r{r}"),
                    cells: (0..ncols)
                        .map(|_| Cell::new(v.next().unwrap().to_string()))
                        .collect(),
                });
            }
        }
        let table = Table::new("caption", columns.clone(), rows).unwrap();
        for s in 0..nsections {
            for r in 0..nrows {
                for col in &columns {
                    let cell = table.lookup_cell(
                        &format!("r{r}"),
                        Some(&format!("s{s}")),
                        col,
                    );
                    prop_assert!(cell.is_ok(), "lookup failed: {cell:?}");
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Gateway

fn chat_request(text: &str) -> ChatRequest {
    ChatRequest {
        endpoint: "m".into(),
        messages: vec![ChatMessage::user(text)],
        params: GenerationParams::default(),
    }
}

proptest! {
    /// The attempt counter is exact: failures retry until the first success,
    /// and no request ever runs more than max_retries + 1 attempts.
    #[test]
    fn retry_count_is_bounded(
        failures in 0usize..6,
        timeouts in prop::collection::vec(any::<bool>(), 6),
    ) {
        let mut steps: Vec<ScriptStep> = (0..failures)
            .map(|i| {
                if timeouts[i] {
                    ScriptStep::TimeoutFail
                } else {
                    ScriptStep::Fail("scripted failure".into())
                }
            })
            .collect();
        steps.push(ScriptStep::Reply("ok".into()));
        let gateway = Gateway::scripted(vec![ModelEndpoint::new("m")], steps);
        let max_attempts = GenerationParams::default().max_retries as usize + 1;
        match gateway.complete(&chat_request("hello")) {
            Ok(response) => {
                prop_assert_eq!(response.attempts as usize, failures + 1);
                prop_assert!(failures < max_attempts);
            }
            Err(GatewayError::Timeout { attempts })
            | Err(GatewayError::Exhausted { attempts, .. }) => {
                prop_assert_eq!(attempts as usize, max_attempts);
                prop_assert!(failures >= max_attempts);
            }
            Err(other) => prop_assert!(false, "unexpected error {other:?}"),
        }
    }

    /// A recorded response replays unchanged even when the replayed request
    /// differs in line endings and trailing whitespace.
    #[test]
    fn replay_ignores_whitespace_noise(
        body in "[a-zA-Z0-9 ]{1,30}(\n[a-zA-Z0-9 ]{1,30}){0,3}",
        tail in prop::sample::select(vec!["", " ", "\t", "   "]),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let recorder = Gateway::scripted(
            vec![ModelEndpoint::new("m")],
            vec![ScriptStep::Reply("recorded answer".into())],
        )
        .with_replay(dir.path(), Mode::Record)
        .unwrap();
        let recorded = recorder.complete(&chat_request(&body)).unwrap();

        let noisy = format!("{}{}", body.replace('\n', "\r\n"), tail);
        let replayer = Gateway::scripted(vec![ModelEndpoint::new("m")], Vec::new())
            .with_replay(dir.path(), Mode::Replay)
            .unwrap();
        for _ in 0..2 {
            let replayed = replayer.complete(&chat_request(&noisy)).unwrap();
            prop_assert_eq!(&replayed.content, &recorded.content);
            prop_assert_eq!(replayed.attempts, recorded.attempts);
            prop_assert_eq!(replayed.latency, recorded.latency);
        }
    }

    /// Sliding-window rate limiting: among any limit+1 consecutive requests,
    /// the first and last are at least one window apart.
    #[test]
    fn rate_limit_window_is_sliding(limit in 1u32..6, n in 1usize..12) {
        let mut endpoint = ModelEndpoint::new("m");
        endpoint.rate_limit = limit;
        let clock = Arc::new(VirtualClock::new());
        let replies = (0..n).map(|_| ScriptStep::Reply("ok".into())).collect();
        let gateway = Gateway::new(
            vec![endpoint],
            Box::new(ScriptedBackend::new(replies)),
            clock.clone(),
        );
        let mut times = Vec::with_capacity(n);
        for i in 0..n {
            gateway.complete(&chat_request(&format!("req {i}"))).unwrap();
            times.push(clock.now());
        }
        for i in limit as usize..n {
            prop_assert!(
                times[i] >= times[i - limit as usize] + RATE_WINDOW,
                "requests {i} and {} are inside one window",
                i - limit as usize
            );
        }
        if (n as u32) <= limit {
            prop_assert_eq!(times[n - 1], Duration::ZERO, "no throttling under the limit");
        }
    }
}

// ---------------------------------------------------------------------------
// Plan arithmetic

proptest! {
    /// Sum, ratio, and percent over integer cells equal the independent
    /// big-rational oracle exactly, and the verdict follows half-up
    /// rounding at two decimals.
    #[test]
    fn plan_arithmetic_is_exact(
        ncols in 2usize..6,
        raw_a in prop::collection::vec(1i64..10_000, 6),
        raw_b in prop::collection::vec(1i64..10_000, 6),
    ) {
        let a = &raw_a[..ncols];
        let b = &raw_b[..ncols];
        let columns: Vec<String> = (0..ncols).map(|i| format!("y{i}")).collect();
        let row = |label: &str, cells: &[i64]| Row {
            label: label.into(),
            cells: cells.iter().map(|v| Cell::new(v.to_string())).collect(),
        };
        let table = Table::new("t", columns.clone(), vec![row("r0", a), row("r1", b)]).unwrap();
        let evidence = EvidenceBundle {
            tables: vec![table],
            paragraphs: Vec::new(),
        };
        let text = format!(
            "sa = extract row \"r0\" cols \"y0\" .. \"y{last}\"\n\
             sb = extract row \"r1\" cols \"y0\" .. \"y{last}\"\n\
             ta = sum sa\n\
             tb = sum sb\n\
             share = ratio ta tb\n\
             pct = percent share\n\
             chk = compare pct to 50 decimals 2\n\
             v = map_verdict chk on_match support on_mismatch refute",
            last = ncols - 1
        );
        let program = parse_plan(&text).unwrap();
        let trace = execute_plan(&program, &evidence).unwrap();

        let int = |v: i64| BigInt::from(v);
        let sum_a: BigInt = a.iter().map(|&v| int(v)).sum();
        let sum_b: BigInt = b.iter().map(|&v| int(v)).sum();
        let ratio = BigRational::new(sum_a.clone(), sum_b.clone());
        let pct = &ratio * BigRational::from_integer(int(100));

        let scalar = |name: &str| match &trace.steps.iter().find(|s| s.name == name).unwrap().output {
            Value::Scalar(v) => v.clone(),
            other => panic!("step {name} produced {other:?}"),
        };
        prop_assert_eq!(scalar("ta"), BigRational::from_integer(sum_a.clone()));
        prop_assert_eq!(scalar("tb"), BigRational::from_integer(sum_b.clone()));
        prop_assert_eq!(scalar("share"), ratio);
        prop_assert_eq!(scalar("pct"), pct);

        // Half-up at two decimals via pure integers: the claim "50" matches
        // iff floor(10000 * sum_a / sum_b + 1/2) == 5000.
        let n = int(10_000) * &sum_a;
        let rounded = (int(2) * n + &sum_b) / (int(2) * &sum_b);
        let expected = if rounded == int(5_000) {
            Verdict::Support
        } else {
            Verdict::Refute
        };
        prop_assert_eq!(trace.verdict, Some(expected));
    }
}

// ---------------------------------------------------------------------------
// Parsers

proptest! {
    /// parse_agent_verdict never panics, never leaves the scheme, and
    /// re-parsing a canonical serialization of its output is stable.
    #[test]
    fn verdict_parser_is_total_and_idempotent(text in ".{0,300}") {
        for scheme in [LabelScheme::TwoWay, LabelScheme::ThreeWay] {
            let Ok(parsed) = parse_agent_verdict(&text, scheme) else {
                continue;
            };
            let label = match parsed.outcome {
                Outcome::Final(v) => {
                    prop_assert!(scheme.contains(v), "verdict {v:?} outside {scheme:?}");
                    v.as_str().to_string()
                }
                Outcome::Revise => "revise".to_string(),
            };
            let canonical = format!(
                "<explanation>{}</explanation>\n{label}",
                parsed.explanation
            );
            let reparsed = parse_agent_verdict(&canonical, scheme).unwrap();
            prop_assert_eq!(reparsed.outcome, parsed.outcome);
        }
    }
}

// ---------------------------------------------------------------------------
// Retrieval

proptest! {
    /// recall@k never decreases as k grows.
    #[test]
    fn recall_is_monotone_in_k(
        ndocs in 3usize..10,
        doc_words in prop::collection::vec(
            prop::collection::vec(
                prop::sample::select(vec!["alpha", "beta", "gamma", "delta", "water", "table"]),
                1..6,
            ),
            10,
        ),
        query_words in prop::collection::vec(
            prop::sample::select(vec!["alpha", "beta", "gamma", "water"]),
            1..4,
        ),
        gold_picks in prop::collection::vec(0usize..10, 1..4),
    ) {
        let documents: Vec<Document> = (0..ndocs)
            .map(|i| Document {
                doc_id: format!("d{i}"),
                source: String::new(),
                text: doc_words[i].join(" "),
            })
            .collect();
        let corpus = Corpus::new(documents).unwrap();
        let retriever =
            Retriever::bm25(corpus, RetrievalConfig::new(RetrievalMethod::Bm25, 1)).unwrap();
        let gold_docs: BTreeSet<String> = gold_picks
            .iter()
            .map(|p| format!("d{}", p % ndocs))
            .collect();
        let gold = BTreeMap::from([("q".to_string(), gold_docs)]);
        let query = query_words.join(" ");
        let mut last = 0.0;
        for k in 1..=ndocs {
            let result = retriever.retrieve_k("q", &query, None, k).unwrap();
            let recall = recall_at_k(&[result], &gold).unwrap();
            prop_assert!(recall >= last, "recall@{k} = {recall} < recall@{} = {last}", k - 1);
            last = recall;
        }
        prop_assert!((last - 1.0).abs() < 1e-15, "recall at full depth must be 1");
    }
}

// ---------------------------------------------------------------------------
// Metrics

/// Brute-force confusion-matrix oracle, written independently of the
/// library implementation.
fn oracle_macro_f1(preds: &[Verdict], golds: &[Verdict], classes: &[Verdict]) -> f64 {
    let mut total = 0.0;
    for class in classes {
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut fal_n = 0.0;
        for (p, g) in preds.iter().zip(golds) {
            match (p == class, g == class) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fal_n += 1.0,
                (false, false) => {}
            }
        }
        let denom = 2.0 * tp + fp + fal_n;
        if denom > 0.0 {
            total += 2.0 * tp / denom;
        }
    }
    total / classes.len() as f64
}

fn labeled_pairs(scheme: LabelScheme) -> impl Strategy<Value = (Vec<Verdict>, Vec<Verdict>)> {
    (1usize..50).prop_flat_map(move |n| {
        (
            prop::collection::vec(verdict_strategy(scheme), n),
            prop::collection::vec(verdict_strategy(scheme), n),
        )
    })
}

proptest! {
    /// All three metrics agree with the brute-force oracle, and micro F1 is
    /// the accuracy identity for single-label tasks.
    #[test]
    fn metrics_match_the_oracle_two_way(
        (preds, golds) in labeled_pairs(LabelScheme::TwoWay),
    ) {
        let classes = LabelScheme::TwoWay.labels();
        let want = oracle_macro_f1(&preds, &golds, classes);
        prop_assert!((macro_f1(&preds, &golds, classes).unwrap() - want).abs() <= 1e-12);
        let acc = accuracy(&preds, &golds).unwrap();
        let micro = micro_f1(&preds, &golds).unwrap();
        let hits = preds.iter().zip(&golds).filter(|(p, g)| p == g).count() as f64;
        prop_assert!((acc - hits / preds.len() as f64).abs() <= 1e-12);
        prop_assert!((micro - acc).abs() <= 1e-12, "micro F1 must equal accuracy");
    }

    #[test]
    fn metrics_match_the_oracle_three_way(
        (preds, golds) in labeled_pairs(LabelScheme::ThreeWay),
    ) {
        let classes = LabelScheme::ThreeWay.labels();
        let want = oracle_macro_f1(&preds, &golds, classes);
        prop_assert!((macro_f1(&preds, &golds, classes).unwrap() - want).abs() <= 1e-12);
        let micro = micro_f1(&preds, &golds).unwrap();
        let acc = accuracy(&preds, &golds).unwrap();
        prop_assert!((micro - acc).abs() <= 1e-12, "micro F1 must equal accuracy");
    }
}
