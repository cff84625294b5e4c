use entailrank::bm25::{
    build_index, candidate_passage_id, load_index, normalize_run, save_index, Bm25Params,
    FragmentScorer, NormalizeMode, Passage,
};
use entailrank::corpus::{CandidateParagraph, QueryExample};
use entailrank::runs::{rank_order, ScoredCandidate};
use entailrank::{Analyzer, Error, SentenceSplitter};
use proptest::prelude::*;

// Every word here is its own Porter stem and no word is a stopword, so the
// analyzed corpus equals the whitespace-split text.
const DOCS: [&str; 5] = [
    "court appeal contract court",
    "contract land tax",
    "appeal appeal appeal court land crown",
    "tax crown",
    "land contract appeal tax crown court statut",
];

// Values computed independently in Python with
// idf = ln(1 + (N - df + 0.5)/(df + 0.5)), k1 = 0.9, b = 0.4, avgdl = 4.4.
const EXPECTED: [(&str, [f64; 5]); 6] = [
    (
        "court",
        [0.714332711814, 0.0, 0.504253664517, 0.0, 0.484725768731],
    ),
    (
        "appeal court",
        [1.262776084030, 0.0, 1.266434101954, 0.0, 0.969451537462],
    ),
    (
        "tax crown land",
        [
            0.0,
            1.147151411946,
            1.008507329034,
            1.202244062467,
            1.454177306194,
        ],
    ),
    ("statut", [0.0, 0.0, 0.0, 0.0, 1.246710505482]),
    (
        "contract contract appeal",
        [
            1.096886744432,
            0.573575705973,
            0.762180437437,
            0.0,
            0.969451537462,
        ],
    ),
    ("nothing", [0.0; 5]),
];

fn toy_passages() -> Vec<Passage> {
    DOCS.iter()
        .enumerate()
        .map(|(i, t)| Passage {
            id: candidate_passage_id("ex", &format!("c{i}")),
            text: t.to_string(),
        })
        .collect()
}

#[test]
fn scores_match_hand_evaluation() {
    let analyzer = Analyzer::english();
    let index = build_index(&toy_passages(), &analyzer).unwrap();
    assert!((index.avgdl() - 4.4).abs() < 1e-12);
    let params = Bm25Params::default();
    for (query, expected) in EXPECTED {
        let q = analyzer.analyze(query);
        for (i, want) in expected.iter().enumerate() {
            let got = index.score(&q, &format!("ex/c{i}"), &params).unwrap();
            assert!(
                (got - want).abs() < 1e-9,
                "{query} vs doc {i}: {got} != {want}"
            );
        }
    }
}

#[test]
fn sentence_max_pooling() {
    let analyzer = Analyzer::english();
    let splitter = SentenceSplitter::default();
    let index = build_index(&toy_passages(), &analyzer).unwrap();
    let scorer = FragmentScorer::new(&index, &analyzer, &splitter, Bm25Params::default()).unwrap();
    let example = QueryExample {
        example_id: "ex".into(),
        fragment_text: "Crown land tax. Statut court.".into(),
        candidates: (0..5)
            .map(|i| CandidateParagraph {
                candidate_id: format!("c{i}"),
                text: DOCS[i].into(),
            })
            .collect(),
        gold: None,
    };
    let scored = scorer.score_fragment(&example).unwrap();
    let ids: Vec<_> = scored.iter().map(|s| s.candidate_id.as_str()).collect();
    assert_eq!(ids, ["c0", "c1", "c2", "c3", "c4"]);
    // max("tax crown land", "statut court") per document, from the table above
    let want = [
        0.714332711814,
        1.147151411946,
        1.008507329034,
        1.202244062467,
        1.246710505482 + 0.484725768731,
    ];
    for (s, w) in scored.iter().zip(want) {
        assert!(
            (s.score - w).abs() < 1e-9,
            "{}: {} != {w}",
            s.candidate_id,
            s.score
        );
    }
}

#[test]
fn second_sentence_alone_matches() {
    let analyzer = Analyzer::english();
    let splitter = SentenceSplitter::default();
    let index = build_index(&toy_passages(), &analyzer).unwrap();
    let scorer = FragmentScorer::new(&index, &analyzer, &splitter, Bm25Params::default()).unwrap();
    let pool = [CandidateParagraph {
        candidate_id: "c4".into(),
        text: DOCS[4].into(),
    }];
    let got = scorer
        .score_pool("ex", "Nothing relevant here. Statut.", &pool)
        .unwrap();
    let direct = index
        .score(&analyzer.analyze("statut"), "ex/c4", &Bm25Params::default())
        .unwrap();
    assert_eq!(got[0].score, direct);

    let single = scorer.score_pool("ex", "Appeal court.", &pool).unwrap();
    let direct = index
        .score(
            &analyzer.analyze("appeal court"),
            "ex/c4",
            &Bm25Params::default(),
        )
        .unwrap();
    assert_eq!(single[0].score, direct);
}

#[test]
fn pool_outside_index_is_an_error() {
    let analyzer = Analyzer::english();
    let splitter = SentenceSplitter::default();
    let index = build_index(&toy_passages(), &analyzer).unwrap();
    let scorer = FragmentScorer::new(&index, &analyzer, &splitter, Bm25Params::default()).unwrap();
    let pool = [CandidateParagraph {
        candidate_id: "missing".into(),
        text: "x".into(),
    }];
    assert!(matches!(
        scorer.score_pool("ex", "Court.", &pool),
        Err(Error::UnknownPassage(_))
    ));
    assert!(scorer.score_pool("ex", "   ", &pool).is_err());
}

#[test]
fn scorer_refuses_foreign_analyzer() {
    let analyzer = Analyzer::english();
    let index = build_index(&toy_passages(), &analyzer).unwrap();
    let other = Analyzer::english().stemming(false);
    let splitter = SentenceSplitter::default();
    assert!(matches!(
        FragmentScorer::new(&index, &other, &splitter, Bm25Params::default()),
        Err(Error::AnalyzerMismatch { .. })
    ));
}

#[test]
fn persisted_index_roundtrip_and_fingerprint_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.idx");
    let analyzer = Analyzer::english();
    let index = build_index(&toy_passages(), &analyzer).unwrap();
    save_index(&index, &path).unwrap();
    assert_eq!(load_index(&path, &analyzer).unwrap(), index);
    assert!(matches!(
        load_index(&path, &Analyzer::english().stemming(false)),
        Err(Error::AnalyzerMismatch { .. })
    ));
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("[[0,2]", "[[9,2]", 1)).unwrap();
    assert!(matches!(
        load_index(&path, &analyzer),
        Err(Error::Malformed { .. })
    ));
}

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "court", "appeal", "land", "tax", "crown", "contract", "statut", "damag",
    ])
    .prop_map(str::to_string)
}

fn doc() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word(), 1..12)
}

proptest! {
    #[test]
    fn novel_passage_keeps_existing_df(docs in prop::collection::vec(doc(), 1..8)) {
        let a = Analyzer::english();
        let mut ps: Vec<Passage> = docs.iter().enumerate()
            .map(|(i, d)| Passage { id: format!("p{i}"), text: d.join(" ") }).collect();
        let before = build_index(&ps, &a).unwrap();
        ps.push(Passage { id: "novel".into(), text: "zebra quokka".into() });
        let after = build_index(&ps, &a).unwrap();
        prop_assert_eq!(after.n(), before.n() + 1);
        for t in ["court", "appeal", "land", "tax", "crown", "contract", "statut", "damag"] {
            prop_assert_eq!(before.df(t), after.df(t));
        }
        let total: f64 = before.avgdl() * before.n() as f64;
        prop_assert!((after.avgdl() - (total + 2.0) / after.n() as f64).abs() < 1e-9);
    }

    #[test]
    fn higher_tf_never_lowers_score(
        others in prop::collection::vec(doc(), 1..6),
        len in 2usize..12,
        tf in 1usize..11,
        query in prop::collection::vec(word(), 0..4),
    ) {
        // The target holds `tf` copies of "court" padded with a filler term to
        // a fixed length, so only tf changes between the two builds.
        prop_assume!(tf < len);
        let a = Analyzer::english();
        let p = Bm25Params::default();
        let mut q = query.clone();
        q.push("court".into());
        let q = a.analyze(&q.join(" "));
        let score_with = |count: usize| {
            let mut ps: Vec<Passage> = others.iter().enumerate()
                .map(|(i, d)| Passage { id: format!("o{i}"), text: d.join(" ") }).collect();
            let mut target = vec!["court"; count];
            target.resize(len, "zzfiller");
            ps.push(Passage { id: "t".into(), text: target.join(" ") });
            build_index(&ps, &a).unwrap().score(&q, "t", &p).unwrap()
        };
        let lo = score_with(tf);
        let hi = score_with(tf + 1);
        prop_assert!(hi >= lo, "{hi} < {lo}");
    }

    #[test]
    fn sentence_max_dominates_each_sentence(sentences in prop::collection::vec(doc(), 1..4)) {
        let a = Analyzer::english();
        let splitter = SentenceSplitter::default();
        let index = build_index(&toy_passages(), &a).unwrap();
        let scorer = FragmentScorer::new(&index, &a, &splitter, Bm25Params::default()).unwrap();
        let fragment: String = sentences.iter().map(|s| {
            let mut t = s.join(" ");
            t[..1].make_ascii_uppercase();
            t + "."
        }).collect::<Vec<_>>().join(" ");
        let pool: Vec<CandidateParagraph> = (0..5).map(|i| CandidateParagraph {
            candidate_id: format!("c{i}"), text: DOCS[i].into() }).collect();
        let pooled = scorer.score_pool("ex", &fragment, &pool).unwrap();
        prop_assert_eq!(pooled.len(), 5);
        for c in &pooled {
            let mut best = 0.0f64;
            for s in &sentences {
                let v = index.score(&a.analyze(&s.join(" ")), &format!("ex/{}", c.candidate_id), &Bm25Params::default()).unwrap();
                prop_assert!(c.score >= v);
                best = best.max(v);
            }
            prop_assert_eq!(c.score, best);
        }
    }

    #[test]
    fn max_normalization_preserves_ranking(scores in prop::collection::vec(0.01f64..50.0, 1..30)) {
        let entries: Vec<ScoredCandidate> = scores.iter().enumerate()
            .map(|(i, s)| ScoredCandidate::new(format!("c{i:02}"), *s)).collect();
        let mut normalized = entries.clone();
        normalize_run(&mut normalized, NormalizeMode::Max);
        let mut a = entries.clone();
        a.sort_by(rank_order);
        let mut b = normalized.clone();
        b.sort_by(rank_order);
        let ids = |v: &[ScoredCandidate]| v.iter().map(|c| c.candidate_id.clone()).collect::<Vec<_>>();
        prop_assert_eq!(ids(&a), ids(&b));
        prop_assert_eq!(b[0].score, 1.0);
    }
}
