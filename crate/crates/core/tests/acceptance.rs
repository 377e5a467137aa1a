//! Acceptance criteria. Runs without the libtest harness so the PASS/FAIL line of every criterion is
//! always printed; exits nonzero if any criterion failed.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use opgraph::graph_core::{canonical_form, SignedGraph};
use opgraph::graph_operads::{gra1_compose, gra1_compose_raw, gra_compose};
use opgraph::homology::{
    betti_combined, pdu_basis, string_basis, string_pairing_matrix, SliceFamily,
};
use opgraph::scalar_linalg::rank;
use opgraph::suites::{parser_corpus, Suite, SuiteReport};

const SEED: u64 = 2024;

fn g(s: &str) -> SignedGraph {
    s.parse().unwrap()
}

fn suite(s: Suite) -> Result<String, String> {
    let r: SuiteReport = s.run(SEED);
    if r.passed() {
        Ok(format!("{} checks", r.checks))
    } else {
        Err(r.to_string())
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn betti_map(v: &[(i64, usize)]) -> BTreeMap<i64, usize> {
    v.iter().copied().collect()
}

fn composition() -> Result<String, String> {
    let lc = gra_compose(&g("gra{n=3;e=[(1,2),(2,3)]}"), 2, &g("gra{n=2;e=[(1,2)]}"))
        .map_err(|e| e.to_string())?;
    ensure(lc.len() == 4, || {
        format!("gra composition has {} terms, expected 4", lc.len())
    })?;
    let (a, b) = (g("gra1{m=1;e=[(1>in)]}"), g("gra1{m=1;e=[(out>1)]}"));
    let raw = gra1_compose_raw(&a, &b).map_err(|e| e.to_string())?;
    let zero = raw
        .iter()
        .filter(|x| matches!(canonical_form(x), Ok(None)))
        .count();
    ensure(zero == 1, || {
        format!("{zero} vanishing raw gra1 terms, expected the double edge only")
    })?;
    let lc = gra1_compose(&a, &b).map_err(|e| e.to_string())?;
    ensure(lc.len() == 3, || {
        format!("gra1 composition has {} terms, expected 3", lc.len())
    })?;
    suite(Suite::Composition)
}

fn cohomology() -> Result<String, String> {
    let cases = [
        (
            "Graphs n=2",
            SliceFamily::Graphs,
            2,
            2,
            betti_map(&[(0, 1), (-1, 1)]),
        ),
        (
            "Graphs1 m=0",
            SliceFamily::Graphs1,
            0,
            1,
            betti_map(&[(0, 1), (-1, 1)]),
        ),
        (
            "Graphs n=3",
            SliceFamily::Graphs,
            3,
            2,
            betti_map(&[(0, 1), (-1, 3), (-2, 2)]),
        ),
        (
            "predual Graphs n=3",
            SliceFamily::PduGraphs,
            3,
            2,
            betti_map(&[(0, 1), (-1, 3), (-2, 2)]),
        ),
    ];
    for (label, fam, n, l, want) in cases {
        let got = betti_combined(fam, n, l).map_err(|e| e.to_string())?;
        ensure(got == want, || {
            format!("{label}: {got:?}, expected {want:?}")
        })?;
    }
    suite(Suite::Cohomology)
}

fn bases() -> Result<String, String> {
    let mut fact = 1;
    for n in 1..=5u32 {
        fact *= n as usize;
        let p = pdu_basis(n).map_err(|e| e.to_string())?;
        let s = string_basis(n).map_err(|e| e.to_string())?;
        ensure(p.len() == fact && s.len() == fact, || {
            format!("n={n}: {} and {} graphs, expected {fact}", p.len(), s.len())
        })?;
        if n <= 3 {
            let m = string_pairing_matrix(n).map_err(|e| e.to_string())?;
            ensure(rank(&m) == fact, || {
                format!("pairing matrix at n={n} has rank {}", rank(&m))
            })?;
        }
    }
    suite(Suite::Bases)
}

fn parser() -> Result<String, String> {
    let corpus = parser_corpus(SEED);
    ensure(corpus.len() == 200, || {
        format!("corpus has {} expressions", corpus.len())
    })?;
    for lit in ["I(E(2;5,4),B(E(3;6);1))", "K(𝟙, I(2,I(3,in)), 1)"] {
        ensure(corpus.iter().any(|c| c == lit), || {
            format!("corpus lacks {lit}")
        })?;
    }
    suite(Suite::Parser)
}

fn main() {
    type Check = fn() -> Result<String, String>;
    let criteria: [(&str, Check, u64); 8] = [
        ("1 composition fidelity", composition, 1),
        ("2 d² = 0 suites", || suite(Suite::DSquared), 60),
        ("3 cohomology", cohomology, 120),
        ("4 basis lemmas", bases, 30),
        (
            "5 representation oracles",
            || suite(Suite::Representations),
            120,
        ),
        ("6 relation suites", || suite(Suite::Relations), 60),
        ("7 star product", || suite(Suite::Star), 60),
        ("8 parser", parser, 5),
    ];
    let mut failed = Vec::new();
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let res = check();
        let took = start.elapsed();
        let res = match res {
            Ok(d) if took > Duration::from_secs(budget) => {
                Err(format!("{d}, but over the {budget} s budget"))
            }
            r => r,
        };
        match res {
            Ok(detail) => println!("PASS criterion {name}: {detail} in {took:.2?}"),
            Err(why) => {
                println!("FAIL criterion {name}: {why} in {took:.2?}");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 8 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
