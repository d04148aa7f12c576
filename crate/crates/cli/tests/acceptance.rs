//! Acceptance gate: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_INFEASIBLE` are measured and reported like the
//! rest but do not fail the run; each carries the reason it cannot pass.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use groundspan::bench::{
    evaluate, read_run, stricter_grouping, Qrels, RunRecord, StricterKey, StricterMode,
};
use groundspan::bm25::{Bm25Params, InvertedIndex};
use groundspan::corpus::{concat, symbols_to_bytes, tokenize, Corpus, Document, Symbol, ALPHABET_SIZE};
use groundspan::fmindex::{invert_bwt, naive_suffix_array, suffix_array, FmIndex, Range};
use groundspan::genret::{
    constrained_beam_search, retrieve, train_ngram, DecodeConfig, FirstTokenPolicy, LanguageModel, NgramConfig,
};
use groundspan::traindata::{build_ssft_pairs, PairConfig, PairKind, RuleExtractor};
use groundspan::Result;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

const KNOWN_INFEASIBLE: &[(u32, &str)] = &[(
    5,
    "each query has exactly one relevant document, so P@5 = |top5 ∩ rel| / 5 cannot exceed 0.2",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn count_occurrences(hay: &[Symbol], pat: &[Symbol]) -> Vec<usize> {
    if pat.is_empty() || pat.len() > hay.len() {
        return Vec::new();
    }
    (0..=hay.len() - pat.len()).filter(|&i| &hay[i..i + pat.len()] == pat).collect()
}

/// Start positions of every pattern, from one pass over all text positions.
fn scan_all(text: &[Symbol], patterns: &[Vec<Symbol>]) -> HashMap<Vec<Symbol>, Vec<usize>> {
    let mut found: HashMap<Vec<Symbol>, Vec<usize>> = patterns.iter().map(|p| (p.clone(), Vec::new())).collect();
    let lengths: BTreeSet<usize> = patterns.iter().map(Vec::len).collect();
    for i in 0..text.len() {
        for &len in lengths.iter().filter(|&&l| i + l <= text.len()) {
            if let Some(hits) = found.get_mut(&text[i..i + len]) {
                hits.push(i);
            }
        }
    }
    found
}

fn random_corpus(rng: &mut StdRng, max_bytes: usize, alphabet: u8) -> Corpus {
    let total = rng.gen_range(1..=max_bytes);
    let mut docs = Vec::new();
    let mut used = 0;
    while used < total {
        let len = rng.gen_range(1..=(total - used).min(2048));
        let bytes: Vec<u8> = (0..len).map(|_| rng.gen_range(0..alphabet)).collect();
        // code points from '!' upward; past 0x7f they encode as two bytes
        let text: String = bytes.iter().map(|&b| char::from_u32(0x21 + b as u32).unwrap()).collect();
        docs.push(Document::new(format!("d{}", docs.len()), text));
        used += len;
    }
    Corpus::new(docs).unwrap()
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for c in 0..100 {
        let alphabet = if c % 2 == 0 { 4 } else { 200 };
        let corpus = random_corpus(&mut rng, 64 * 1024 - 1024, alphabet);
        let seq = concat(&corpus).unwrap();
        let text = seq.symbols();
        if suffix_array(text).unwrap() != naive_suffix_array(text) {
            mismatches += 1;
        }
        let idx = FmIndex::build(&seq, 16, false).unwrap();
        if invert_bwt(idx.bwt()) != text {
            mismatches += 1;
        }
        let patterns: Vec<Vec<Symbol>> = (0..1000)
            .map(|_| {
                let len = rng.gen_range(1..=12);
                if rng.gen_bool(0.7) && text.len() > len + 1 {
                    let at = rng.gen_range(0..text.len() - len);
                    text[at..at + len].to_vec()
                } else {
                    (0..len).map(|_| rng.gen_range(2..2 + alphabet as Symbol)).collect()
                }
            })
            .collect();
        let expected = scan_all(text, &patterns);
        for pat in &patterns {
            let range = idx.match_pattern(pat).unwrap();
            let mut located = idx.occurrence_starts(range, pat.len(), usize::MAX);
            located.sort_unstable();
            if range.width() != expected[pat].len() || located != expected[pat] {
                mismatches += 1;
            }
            checked += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 30.0,
        format!("{checked} patterns over 100 corpora, {mismatches} mismatches, {secs:.1}s (limit 30s)"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let indexes: Vec<FmIndex> = (0..20)
        .map(|i| {
            let corpus = random_corpus(&mut rng, 8 * 1024, if i % 2 == 0 { 3 } else { 60 });
            FmIndex::build(&concat(&corpus).unwrap(), 8, i % 3 == 0).unwrap()
        })
        .collect();
    let mut failures = 0usize;
    for idx in &indexes {
        let mut seen = vec![false; idx.len()];
        for i in 0..idx.len() {
            let j = idx.lf(i);
            if j >= idx.len() || std::mem::replace(&mut seen[j], true) {
                failures += 1;
            }
        }
    }
    for _ in 0..10_000 {
        let idx = &indexes[rng.gen_range(0..indexes.len())];
        let lo = rng.gen_range(0..idx.len());
        let hi = if rng.gen_bool(0.5) {
            rng.gen_range(lo..=idx.len())
        } else {
            (lo + rng.gen_range(0..4)).min(idx.len())
        };
        let r = Range::new(lo, hi);
        let got: BTreeSet<Symbol> = idx.range_symbols(r).into_iter().map(|(c, _)| c).collect();
        let want: BTreeSet<Symbol> = (0..ALPHABET_SIZE as Symbol)
            .filter(|&c| !idx.backward_extend(r, c).unwrap().is_empty())
            .collect();
        if got != want {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("LF checked on 20 indexes, 10000 range probes, {failures} failures"),
    )
}

const FILLER: &[&str] = &[
    "the", "defendant", "victim", "court", "money", "phone", "account", "fled", "struck", "sent", "posted", "false",
    "images", "loan", "bank", "night", "car", "knife", "store", "online",
];

fn filler(rng: &mut StdRng, words: usize) -> String {
    (0..words).map(|_| *FILLER.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

fn criterion_3() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let corpus = Corpus::new((0..200).map(|i| Document::new(format!("d{i}"), filler(&mut rng, 40))).collect()).unwrap();
    let texts: Vec<Vec<Symbol>> = corpus.docs().iter().map(|d| tokenize(&d.text)).collect();
    let idx = FmIndex::build(&concat(&corpus).unwrap(), 32, true).unwrap();
    let model = train_ngram(&corpus, NgramConfig::default()).unwrap();
    let cfg = DecodeConfig::default();
    let (mut spans, mut violations) = (0usize, 0usize);
    for _ in 0..100 {
        let query = tokenize(&filler(&mut rng, 6));
        for s in constrained_beam_search(&idx, &model, &query, &cfg).unwrap() {
            spans += 1;
            if !texts.iter().any(|t| !count_occurrences(t, &s.tokens).is_empty()) {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0 && spans > 0,
        format!("{spans} spans from 100 queries, {violations} not found by scan"),
    )
}

/// 100 documents of filler text, each with one unique 8-letter uppercase
/// marker planted at a random word boundary.
fn planted_corpus(seed: u64, docs: usize, copies: usize) -> (Corpus, Vec<String>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut markers = Vec::new();
    let mut seen = HashSet::new();
    while markers.len() < docs / copies {
        let m: String = (0..8).map(|_| rng.gen_range(b'A'..=b'Z') as char).collect();
        if seen.insert(m.clone()) {
            markers.push(m);
        }
    }
    let mut out = Vec::new();
    for i in 0..docs {
        let mut words: Vec<String> = filler(&mut rng, 30).split(' ').map(str::to_string).collect();
        let at = rng.gen_range(0..=words.len());
        words.insert(at, markers[i % markers.len()].clone());
        out.push(Document::new(format!("d{i:03}"), words.join(" ")));
    }
    (Corpus::new(out).unwrap(), markers)
}

fn holders(corpus: &Corpus, marker: &str) -> BTreeSet<String> {
    corpus.docs().iter().filter(|d| d.text.contains(marker)).map(|d| d.doc_id.clone()).collect()
}

struct MarkerOracle {
    marker: Vec<Symbol>,
    query_len: usize,
}

impl LanguageModel for MarkerOracle {
    fn score(&self, context: &[Symbol], candidates: &[Symbol]) -> Result<Vec<f64>> {
        let want = self.marker.get(context.len() - self.query_len);
        Ok(candidates.iter().map(|c| if want == Some(c) { 0.0 } else { -1e9 }).collect())
    }
}

fn criterion_4() -> Outcome {
    let started = Instant::now();
    let (corpus, markers) = planted_corpus(4, 100, 1);
    let idx = FmIndex::build(&concat(&corpus).unwrap(), 32, true).unwrap();
    let cfg = DecodeConfig {
        max_span_len: 8,
        min_span_len: 8,
        ..DecodeConfig::default()
    };
    let mut hits = 0;
    for m in &markers {
        let query = m.clone();
        let model = MarkerOracle {
            marker: tokenize(m),
            query_len: query.len(),
        };
        let r = retrieve(&idx, &model, &query, &cfg, 1).unwrap();
        if r.results.first().is_some_and(|top| holders(&corpus, m).contains(&top.doc_id)) {
            hits += 1;
        }
    }
    let p1 = hits as f64 / markers.len() as f64;
    let secs = started.elapsed().as_secs_f64();
    outcome(p1 == 1.0 && secs < 10.0, format!("P@1 = {p1:.4} over 100 queries, {secs:.2}s (limit 10s)"))
}

/// Runs the 4-gram model on a planted corpus; returns (P@5, P@1).
fn ngram_planted(docs: usize, copies: usize) -> (f64, f64) {
    let (corpus, markers) = planted_corpus(5, docs, copies);
    let idx = FmIndex::build(&concat(&corpus).unwrap(), 32, true).unwrap();
    let model = train_ngram(&corpus, NgramConfig::default()).unwrap();
    let cfg = DecodeConfig::default();
    let mut qrels = Qrels::default();
    let mut run = Vec::new();
    let mut top1 = 0;
    for m in markers.iter().take(100) {
        for d in holders(&corpus, m) {
            qrels.insert(m, &d).unwrap();
        }
        let r = retrieve(&idx, &model, &m.repeat(3), &cfg, 5).unwrap();
        if r.results.first().is_some_and(|top| holders(&corpus, m).contains(&top.doc_id)) {
            top1 += 1;
        }
        run.extend(r.results.into_iter().enumerate().map(|(i, res)| RunRecord {
            query_id: m.clone(),
            doc_id: res.doc_id,
            rank: i + 1,
            score: res.score,
        }));
    }
    let p5 = evaluate(&run, &qrels, 5).unwrap().total;
    (p5, top1 as f64 / markers.len().min(100) as f64)
}

fn criterion_5() -> Outcome {
    let (p5, p1) = ngram_planted(100, 1);
    let (p5_shared, _) = ngram_planted(500, 5);
    outcome(
        p5 >= 0.9,
        format!(
            "P@5 = {p5:.4} (need 0.9); target at rank 1 for {p1:.4} of queries; \
             with each marker in 5 documents P@5 = {p5_shared:.4}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let hand = InvertedIndex::build(
        &Corpus::new(vec![
            Document::new("d1", "fraud scheme"),
            Document::new("d2", "assault at night"),
            Document::new("d3", "fraud and fraud again"),
        ])
        .unwrap(),
    );
    let idf = 1.6f64.ln();
    let want = [("d3", 2.0 / 3.5 * idf), ("d1", 1.0 / 1.9 * idf)];
    let got = hand.search("fraud", 10, Bm25Params::default());
    let hand_ok = got.len() == 2
        && got.iter().zip(want).all(|(g, (id, s))| g.doc_id == id && (g.score - s).abs() < 1e-6);

    // 100 planted terms, each in 5 of 500 documents
    let mut rng = StdRng::seed_from_u64(6);
    let terms: Vec<String> = (0..100).map(|i| format!("term{i:03}x")).collect();
    let docs: Vec<Document> = (0..500)
        .map(|i| Document::new(format!("d{i:03}"), format!("{} {} {}", filler(&mut rng, 15), terms[i % 100], filler(&mut rng, 15))))
        .collect();
    let corpus = Corpus::new(docs).unwrap();
    let idx = InvertedIndex::build(&corpus);
    let mut qrels = Qrels::default();
    let mut run = Vec::new();
    for t in &terms {
        for d in holders(&corpus, t) {
            qrels.insert(t, &d).unwrap();
        }
        run.extend(idx.search(t, 5, Bm25Params::default()).into_iter().enumerate().map(|(i, d)| RunRecord {
            query_id: t.clone(),
            doc_id: d.doc_id,
            rank: i + 1,
            score: d.score,
        }));
    }
    let p5 = evaluate(&run, &qrels, 5).unwrap().total;
    outcome(
        hand_ok && p5 >= 0.8,
        format!("hand example within 1e-6: {hand_ok}; planted-term P@5 = {p5:.4} (need 0.8)"),
    )
}

fn brute_force_groups(cases: &[(String, StricterKey)]) -> Vec<BTreeSet<String>> {
    let full = cases.first().map_or(0, |(_, k)| k.len());
    for r in (1..=full).rev() {
        let mut by_prefix: BTreeMap<Vec<(String, u32)>, BTreeSet<String>> = BTreeMap::new();
        for (id, key) in cases {
            by_prefix.entry(key.0[..r].to_vec()).or_default().insert(id.clone());
        }
        let groups: Vec<BTreeSet<String>> = by_prefix.into_values().filter(|g| g.len() >= 2).collect();
        if !groups.is_empty() {
            return groups;
        }
    }
    Vec::new()
}

fn criterion_7() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut mismatches = 0;
    for _ in 0..200 {
        let subfactors = rng.gen_range(1..=5);
        let options = rng.gen_range(1..=4);
        let cases: Vec<(String, StricterKey)> = (0..rng.gen_range(0..=20))
            .map(|i| {
                let pairs = (0..subfactors).map(|j| (format!("f{j}"), rng.gen_range(1..=options))).collect();
                (format!("c{i}"), StricterKey::new(pairs).unwrap())
            })
            .collect();
        let got: BTreeSet<BTreeSet<String>> = stricter_grouping(&cases, StricterMode::AllGroups)
            .unwrap()
            .into_iter()
            .map(|g| g.into_iter().collect())
            .collect();
        let want: BTreeSet<BTreeSet<String>> = brute_force_groups(&cases).into_iter().collect();
        if got != want {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("200 instances, {mismatches} mismatches"))
}

fn write(path: &Path, body: &str) {
    std::fs::File::create(path).unwrap().write_all(body.as_bytes()).unwrap();
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let qrels = dir.path().join("qrels.tsv");
    let run = dir.path().join("run.tsv");
    write(&qrels, "q1\td1\nq1\td3\nq2\ta\nq2\tb\nq2\tc\nq2\td\nq2\te\nq3\tx\nq3\ty\nq4\tz\n");
    write(
        &run,
        "q1\td1\t1\t5.0\nq1\td2\t2\t4.0\nq1\td3\t3\t3.0\nq1\td4\t4\t2.0\nq1\td5\t5\t1.0\n\
         q2\ta\t1\t5.0\nq2\tb\t2\t4.0\nq2\tc\t3\t3.0\nq2\td\t4\t2.0\nq2\te\t5\t1.0\n\
         q3\tx\t1\t3.0\nq3\tn\t2\t2.0\nq3\ty\t3\t1.0\n",
    );
    let report = evaluate(&read_run(&run).unwrap(), &Qrels::read_tsv(&qrels).unwrap(), 5).unwrap();
    let per: BTreeMap<&str, f64> = report.per_query.iter().map(|q| (q.query_id.as_str(), q.precision)).collect();
    let want = [("q1", 0.4), ("q2", 1.0), ("q3", 0.4), ("q4", 0.0)];
    let exact = want.iter().all(|(q, p)| per.get(q) == Some(p));
    let total_ok = report.total == (0.4 + 1.0 + 0.4 + 0.0) / 4.0;
    let flagged: Vec<&str> = report.missing().collect();
    outcome(
        exact && total_ok && flagged == ["q4"],
        format!("per-query {per:?}, total {:.4}, missing {flagged:?}", report.total),
    )
}

fn cli(args: &[&str]) -> (bool, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_groundspan")).args(args).output().unwrap();
    (out.status.success(), out.stdout)
}

fn criterion_9() -> Outcome {
    let (corpus, markers) = planted_corpus(9, 100, 1);
    let base = tempfile::tempdir().unwrap();
    let corpus_path = base.path().join("corpus.jsonl");
    corpus.write_jsonl(std::fs::File::create(&corpus_path).unwrap()).unwrap();
    let queries = base.path().join("queries.jsonl");
    let qrels = base.path().join("qrels.tsv");
    let mut qf = String::new();
    let mut rf = String::new();
    for (i, m) in markers.iter().enumerate().take(20) {
        qf += &format!("{{\"query_id\":\"q{i:02}\",\"text\":\"{}\"}}\n", m.repeat(3));
        rf += &format!("q{i:02}\td{i:03}\n");
    }
    write(&queries, &qf);
    write(&qrels, &rf);

    let mut outputs = Vec::new();
    for round in 0..2 {
        let dir = base.path().join(format!("round{round}"));
        let idx = dir.join("index");
        let run = dir.join("run.tsv");
        let s = |p: &Path| p.to_str().unwrap().to_string();
        let steps = [
            cli(&["index", "--corpus", &s(&corpus_path), "--out", &s(&idx), "--reversed"]),
            cli(&["search", "--index", &s(&idx), "--queries", &s(&queries), "--k", "5", "--out", &s(&run)]),
            cli(&["eval", "--run", &s(&run), "--qrels", &s(&qrels), "--k", "5"]),
        ];
        if steps.iter().any(|(ok, _)| !ok) {
            return outcome(false, format!("round {round}: a command failed"));
        }
        outputs.push((
            std::fs::read(idx.join("fm.idx")).unwrap(),
            std::fs::read(&run).unwrap(),
            steps[2].1.clone(),
        ));
    }
    let same = outputs[0] == outputs[1];
    outcome(
        same && !outputs[0].1.is_empty(),
        format!(
            "index {} bytes, run {} bytes, report {} bytes; identical across runs: {same}",
            outputs[0].0.len(),
            outputs[0].1.len(),
            outputs[0].2.len()
        ),
    )
}

fn criterion_10() -> Outcome {
    let text: Vec<String> = (0..20).map(|i| format!("the defendant did thing {}", (b'a' + i as u8) as char)).collect();
    let corpus = Corpus::new(vec![Document::new("d", text.join(". "))]).unwrap();
    let count = |max_element_pairs: usize| {
        let cfg = PairConfig {
            max_element_pairs,
            ..PairConfig::default()
        };
        let pairs = build_ssft_pairs(&corpus, &RuleExtractor::default(), &cfg).unwrap();
        let qe = pairs.iter().filter(|p| p.kind == PairKind::QueryElement).count();
        (qe, pairs.len() - qe)
    };
    let default = count(5);
    let three = count(3);
    let policy_ok = build_ssft_pairs(&corpus, &RuleExtractor::default(), &PairConfig::default())
        .unwrap()
        .iter()
        .all(|p| FirstTokenPolicy::default().admits(symbols_to_bytes(&tokenize(&p.target)).unwrap()[0] as Symbol + 2));
    outcome(
        default == (15, 5) && three == (15, 3) && policy_ok,
        format!("caps (15, 5) -> {default:?}; caps (15, 3) -> {three:?}"),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "index correctness", criterion_1),
        (2, "backward-search algebra", criterion_2),
        (3, "grounding guarantee", criterion_3),
        (4, "oracle retrieval", criterion_4),
        (5, "end-to-end generative retrieval", criterion_5),
        (6, "bm25", criterion_6),
        (7, "stricter grouping", criterion_7),
        (8, "evaluation harness", criterion_8),
        (9, "determinism", criterion_9),
        (10, "training-data caps", criterion_10),
    ];
    let mut unexpected = Vec::new();
    for (n, name, check) in criteria {
        let o = check();
        let known = KNOWN_INFEASIBLE.iter().find(|(k, _)| *k == n);
        println!("criterion {n:>2} {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            match known {
                Some((_, why)) => println!("             known infeasible: {why}"),
                None => unexpected.push(n),
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("acceptance failed: criteria {unexpected:?}");
        std::process::exit(1);
    }
}
