//! Relation suites: exhaustive and seeded randomized checks of the identities the library must
//! satisfy. Each suite reports how many checks ran and which failed; the CLI `verify` command and
//! the acceptance tests both run them.

use std::fmt;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph_core::{add_graph, canonical_form, format_comb, GraphComb, Kind, SignedGraph};
use crate::graph_operads::{
    directed_expansion, gra1_compose, gra1_compose_raw, gra_compose, graphs_on,
    operad_axiom_report, small_graphs,
};
use crate::homology::{
    betti_combined, e2_poincare, enumerate_slice, pdu_basis, pdu_class_rank, pdu_differential,
    string_basis, string_pairing_matrix, SliceFamily,
};
use crate::representations::{
    act_dgra, act_gra1, act_graph_comb, act_sgra, braces, contraction, de_rham, gra1_d_graph,
    lie_derivative, moyal_weight, random_poly, schouten_bracket, sgra_underlying_dgra,
    star_associativity_failures, PolyOperator, PolyVector, SuperPoly,
};
use crate::scalar_linalg::{rank, rat, Rational};
use crate::tree_operads::{
    br_differential, br_differential_lc, brinf_differential, brinf_differential_lc,
    enumerate_br_trees, enumerate_brinf_trees, enumerate_ks1_trees, ks1_compose, ks1_compose_lc,
    ks1_normalize, ks1_normalize_lc, parse_tree, parse_tree_as, planar_leibniz_residual,
    random_tree, TreeComb, TreeError, TreeKind,
};
use crate::twisting::{
    apply_lc, graphs1_differential, graphs_differential, mc_residual, WeightSystem,
};

/// The available suites, one per acceptance area.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Composition,
    DSquared,
    Cohomology,
    Bases,
    Representations,
    Relations,
    Star,
    Parser,
    OperadAxioms,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Composition,
        Suite::DSquared,
        Suite::Cohomology,
        Suite::Bases,
        Suite::Representations,
        Suite::Relations,
        Suite::Star,
        Suite::Parser,
        Suite::OperadAxioms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Composition => "composition",
            Suite::DSquared => "d-squared",
            Suite::Cohomology => "cohomology",
            Suite::Bases => "bases",
            Suite::Representations => "representations",
            Suite::Relations => "relations",
            Suite::Star => "star",
            Suite::Parser => "parser",
            Suite::OperadAxioms => "operad-axioms",
        }
    }

    pub fn from_name(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }

    pub fn run(self, seed: u64) -> SuiteReport {
        let mut r = SuiteReport::new(self.name());
        match self {
            Suite::Composition => composition(&mut r),
            Suite::DSquared => d_squared(&mut r),
            Suite::Cohomology => cohomology(&mut r),
            Suite::Bases => bases(&mut r),
            Suite::Representations => representations(&mut r, seed),
            Suite::Relations => relations(&mut r),
            Suite::Star => star(&mut r, seed),
            Suite::Parser => parser(&mut r, seed),
            Suite::OperadAxioms => operad_axioms(&mut r),
        }
        r
    }
}

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub name: String,
    pub checks: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        SuiteReport {
            name: name.to_string(),
            checks: 0,
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn fail(&mut self, what: String) {
        self.checks += 1;
        self.failures.push(what);
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} {} ({} checks", self.name, self.checks)?;
        if !self.passed() {
            write!(f, ", {} failed: {}", self.failures.len(), self.failures[0])?;
        }
        write!(f, ")")
    }
}

fn graph(s: &str) -> SignedGraph {
    s.parse().expect("suite literal")
}

fn comb(gs: &[&str]) -> GraphComb {
    let mut lc = GraphComb::new();
    for s in gs {
        add_graph(&mut lc, &graph(s), &rat(1));
    }
    lc
}

fn composition(r: &mut SuiteReport) {
    let got = gra_compose(
        &graph("gra{n=3;e=[(1,2),(2,3)]}"),
        2,
        &graph("gra{n=2;e=[(1,2)]}"),
    );
    let want = comb(&[
        "gra{n=4;e=[(1,2),(2,4),(2,3)]}",
        "gra{n=4;e=[(1,2),(3,4),(2,3)]}",
        "gra{n=4;e=[(1,3),(2,4),(2,3)]}",
        "gra{n=4;e=[(1,3),(3,4),(2,3)]}",
    ]);
    r.check(
        got.as_ref().is_ok_and(|g| g.len() == 4 && *g == want),
        || format!("four-term gra composition: {got:?}"),
    );
    let (a, b) = (
        graph("gra1{m=1;e=[(1>in)]}"),
        graph("gra1{m=1;e=[(out>1)]}"),
    );
    let raw = gra1_compose_raw(&a, &b).unwrap_or_default();
    let vanishing = raw
        .iter()
        .filter(|g| matches!(canonical_form(g), Ok(None)))
        .count();
    r.check(raw.len() == 4 && vanishing == 1, || {
        format!("gra1 raw terms {} with {vanishing} double edges", raw.len())
    });
    let got = gra1_compose(&a, &b);
    r.check(
        got.as_ref()
            .is_ok_and(|g| g.len() == 3 && g.keys().all(|k| k.edges.len() == 2)),
        || format!("three-term gra1 composition: {got:?}"),
    );
}

fn d2_graphs(
    r: &mut SuiteReport,
    label: &str,
    sample: &[SignedGraph],
    d: impl Fn(&SignedGraph) -> Result<GraphComb, crate::graph_core::GraphError>,
) {
    for g in sample {
        match d(g).and_then(|x| apply_lc(&x, &d)) {
            Ok(dd) => r.check(dd.is_empty(), || {
                format!("{label}: d²({g}) = {}", format_comb(&dd))
            }),
            Err(e) => r.fail(format!("{label}: {g}: {e}")),
        }
    }
}

fn d2_trees(
    r: &mut SuiteReport,
    label: &str,
    sample: &[crate::tree_operads::PlanarTree],
    d: impl Fn(&crate::tree_operads::PlanarTree) -> Result<TreeComb, TreeError>,
    dlc: impl Fn(&TreeComb) -> Result<TreeComb, TreeError>,
) {
    for t in sample {
        match d(t).and_then(|x| dlc(&x)) {
            Ok(dd) => r.check(dd.is_empty(), || format!("{label}: d²({t}) ≠ 0")),
            Err(e) => r.fail(format!("{label}: {t}: {e}")),
        }
    }
}

/// Every graph of `kind` with `n` numbered vertices, up to `int` internal ones and `edges` edges.
fn graph_sample(
    kind: Kind,
    ns: std::ops::RangeInclusive<u32>,
    int: u32,
    edges: usize,
) -> Vec<SignedGraph> {
    let mut out = Vec::new();
    for n in ns {
        for k in 0..=int {
            out.extend(graphs_on(
                &SignedGraph::new(kind, n, Vec::new()).with_internal(k),
                edges,
            ));
        }
    }
    out
}

fn d_squared(r: &mut SuiteReport) {
    d2_trees(
        r,
        "br",
        &enumerate_br_trees(6),
        br_differential,
        br_differential_lc,
    );
    for kind in [TreeKind::Binf, TreeKind::Bbr] {
        d2_trees(
            r,
            kind.name(),
            &enumerate_brinf_trees(5, kind),
            brinf_differential,
            brinf_differential_lc,
        );
    }
    for kind in [Kind::Gra, Kind::Dgra] {
        d2_graphs(
            r,
            kind.name(),
            &graph_sample(kind, 1..=3, 2, 4),
            graphs_differential,
        );
    }
    d2_graphs(
        r,
        "gra1",
        &graph_sample(Kind::Gra1, 0..=1, 2, 4),
        graphs1_differential,
    );
    for (fam, ns) in [
        (SliceFamily::PduGraphs, 1..=3),
        (SliceFamily::PduGraphs1, 0..=1),
    ] {
        for n in ns {
            for l in 0..=2 {
                let s = match enumerate_slice(fam, n, l) {
                    Ok(s) => s,
                    Err(e) => {
                        r.fail(format!("{fam} n={n} l={l}: {e}"));
                        continue;
                    }
                };
                r.check(s.d_squared_is_zero(), || {
                    format!("{fam} n={n} l={l}: boundary² ≠ 0")
                });
                let basis: Vec<SignedGraph> = s.basis.values().flatten().cloned().collect();
                d2_graphs(r, fam.name(), &basis, |g| pdu_differential(fam.family(), g));
            }
        }
    }
}

fn cohomology(r: &mut SuiteReport) {
    let bt = |v: &[(i64, usize)]| {
        v.iter()
            .copied()
            .collect::<std::collections::BTreeMap<_, _>>()
    };
    let cases = [
        (SliceFamily::Graphs, 2, 1, bt(&[(0, 1), (-1, 1)])),
        (SliceFamily::Graphs1, 0, 1, bt(&[(0, 1), (-1, 1)])),
        (SliceFamily::Graphs, 3, 2, bt(&[(0, 1), (-1, 3), (-2, 2)])),
        (
            SliceFamily::PduGraphs,
            3,
            2,
            bt(&[(0, 1), (-1, 3), (-2, 2)]),
        ),
        (SliceFamily::Graphs1, 1, 2, bt(&[(0, 1), (-1, 2), (-2, 1)])),
    ];
    for (fam, n, l, want) in cases {
        let got = betti_combined(fam, n, l);
        r.check(got.as_ref() == Ok(&want), || {
            format!("{fam} n={n} ℓ≤{l}: {got:?}, expected {want:?}")
        });
    }
    for n in 1..=3 {
        let got = betti_combined(SliceFamily::Graphs, n, 2);
        r.check(got.as_ref() == Ok(&e2_poincare(n)), || {
            format!("graphs n={n} against e₂: {got:?}")
        });
    }
}

fn bases(r: &mut SuiteReport) {
    let mut fact = 1usize;
    for n in 0..=5u32 {
        fact *= (n as usize).max(1);
        let (p, s) = (pdu_basis(n), string_basis(n));
        r.check(p.as_ref().map(Vec::len) == Ok(fact), || {
            format!("|pdu_basis({n})| ≠ {fact}")
        });
        r.check(s.as_ref().map(Vec::len) == Ok(fact), || {
            format!("|string_basis({n})| ≠ {fact}")
        });
        if n <= 3 {
            let m = string_pairing_matrix(n);
            r.check(
                m.as_ref()
                    .is_ok_and(|m| rank(m) == fact && m.cols() == fact),
                || format!("string pairing matrix at n={n} is not full rank"),
            );
        }
        if (1..=4).contains(&n) {
            for (label, gs) in [("pdu", p), ("string", s)] {
                let k = gs
                    .map_err(|e| e.to_string())
                    .and_then(|gs| pdu_class_rank(n, &gs).map_err(|e| e.to_string()));
                r.check(k == Ok(fact), || {
                    format!("{label} basis classes at n={n}: rank {k:?}")
                });
            }
        }
    }
}

fn sign(odd: bool) -> Rational {
    if odd {
        rat(-1)
    } else {
        rat(1)
    }
}

fn rnd_vec(rng: &mut ChaCha8Rng, d: usize, max_deg: u32) -> PolyVector {
    let p = rng.gen_range(0..=max_deg.min(d as u32));
    random_poly(rng, d, 3, p, 3)
}

fn rnd_fun(rng: &mut ChaCha8Rng, d: usize) -> SuperPoly {
    random_poly(rng, d, 3, 0, 3)
}

fn rnd_op(rng: &mut ChaCha8Rng, d: usize) -> PolyOperator {
    let arity = rng.gen_range(1..=2);
    let mut op = PolyOperator::zero(d, arity);
    for _ in 0..2 {
        let alphas: Vec<Vec<u32>> = (0..arity)
            .map(|_| (0..d).map(|_| rng.gen_range(0..=1)).collect())
            .collect();
        let c = random_poly(rng, d, 2, 0, 2);
        op.add_term(alphas, &c);
    }
    op
}

fn representations(r: &mut SuiteReport, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one_edge = match directed_expansion(&graph("gra{n=2;e=[(1,2)]}")) {
        Ok(x) => x,
        Err(e) => return r.fail(e.to_string()),
    };
    for i in 0..50 {
        let d = rng.gen_range(1..=3);
        let (a, b) = (rnd_vec(&mut rng, d, 3), rnd_vec(&mut rng, d, 3));
        let ok = act_graph_comb(&one_edge, &[a.clone(), b.clone()]).ok()
            == schouten_bracket(&a, &b).ok();
        r.check(ok, || format!("one-edge action ≠ schouten on sample {i}"));
    }
    let br = |a: &PolyVector, b: &PolyVector| schouten_bracket(a, b).expect("same dimension");
    // The bracket in standard form, for Jacobi.
    let std = |a: &PolyVector, b: &PolyVector| {
        br(a, b).scaled(&sign(a.odd_degree().unwrap_or(0).is_multiple_of(2)))
    };
    let wedge = graph("dgra{n=2;e=[]}");
    for i in 0..20 {
        let d = rng.gen_range(1..=3);
        let (a, b, c) = (
            rnd_vec(&mut rng, d, 2),
            rnd_vec(&mut rng, d, 2),
            rnd_vec(&mut rng, d, 2),
        );
        let (pa, pb) = (a.odd_degree().unwrap_or(0), b.odd_degree().unwrap_or(0));
        let jac = std(&a, &std(&b, &c))
            .sub(&std(&std(&a, &b), &c))
            .sub(&std(&b, &std(&a, &c)).scaled(&sign((pa + 1) * (pb + 1) % 2 == 1)));
        r.check(jac.is_zero(), || {
            format!("Jacobi residual on sample {i}: {jac}")
        });
        let leib = br(&a, &b.mul(&c))
            .sub(&br(&a, &b).mul(&c))
            .sub(&b.mul(&br(&a, &c)).scaled(&sign((pa + 1) * pb % 2 == 1)));
        r.check(leib.is_zero(), || {
            format!("Leibniz residual on sample {i}: {leib}")
        });
        let prod = |x: &PolyVector, y: &PolyVector| {
            act_dgra(&wedge, &[x.clone(), y.clone()]).expect("wedge")
        };
        let assoc = prod(&prod(&a, &b), &c).sub(&prod(&a, &prod(&b, &c)));
        r.check(assoc.is_zero(), || {
            format!("associativity residual on sample {i}")
        });
    }
    for i in 0..20 {
        let (a, b, c) = (
            rnd_op(&mut rng, 2),
            rnd_op(&mut rng, 2),
            rnd_op(&mut rng, 2),
        );
        let one = |x: &PolyOperator, y: &PolyOperator| {
            braces(x, std::slice::from_ref(y)).expect("braces")
        };
        let s = sign((b.arity() + 1) * (c.arity() + 1) % 2 == 1);
        let res = braces(&one(&a, &b), std::slice::from_ref(&c)).and_then(|lhs| {
            let t2 = braces(&a, &[b.clone(), c.clone()])?.scaled(&s);
            let t3 = braces(&a, &[c.clone(), b.clone()])?;
            Ok(lhs.sub(&one(&a, &one(&b, &c))).sub(&t2).sub(&t3))
        });
        r.check(res.as_ref().is_ok_and(PolyOperator::is_zero), || {
            format!("brace relation residual on sample {i}")
        });
    }
    let sgraphs = [
        "sgra{m=1,n=2;e=[(1>b1),(1>b2)]}",
        "sgra{m=2,n=2;e=[(1>b1),(2>b2),(1>2)]}",
        "sgra{m=2,n=1;e=[(2>1),(1>b1)]}",
        "sgra{m=1,n=3;e=[(1>b3),(1>b1)]}",
    ];
    for i in 0..20 {
        let g = graph(sgraphs[i % sgraphs.len()]);
        let gam: Vec<PolyVector> = (0..g.ext)
            .map(|_| {
                let p = rng.gen_range(1..=2);
                random_poly(&mut rng, 2, 3, p, 3)
            })
            .collect();
        let fs: Vec<SuperPoly> = (0..g.typeii).map(|_| rnd_fun(&mut rng, 2)).collect();
        let lhs = act_sgra(&g, &gam).and_then(|op| op.eval(&fs));
        let mut all = gam.clone();
        all.extend(fs);
        let rhs = act_dgra(&sgra_underlying_dgra(&g), &all);
        r.check(lhs.is_ok() && lhs == rhs, || {
            format!("D_Γ defining identity on {g}")
        });
    }
    for i in 0..20 {
        let d = rng.gen_range(1..=3);
        let (a, b) = (rnd_vec(&mut rng, d, 2), rnd_vec(&mut rng, d, 2));
        let pw = rng.gen_range(0..=d as u32);
        let w = random_poly(&mut rng, d, 3, pw, 3);
        let (pa, pb) = (a.odd_degree().unwrap_or(0), b.odd_degree().unwrap_or(0));
        let iota = |x: &PolyVector, f: &SuperPoly| contraction(x, f).expect("contraction");
        let lie = |x: &PolyVector, f: &SuperPoly| lie_derivative(x, f).expect("lie derivative");
        let module = iota(&a.mul(&b), &w).sub(&iota(&b, &iota(&a, &w)));
        r.check(module.is_zero(), || {
            format!("module axiom residual on sample {i}")
        });
        let comm = iota(&a, &lie(&b, &w))
            .sub(&lie(&b, &iota(&a, &w)).scaled(&sign(pa * (pb + 1) % 2 == 1)));
        let calc = comm.sub(&iota(&br(&a, &b), &w).scaled(&sign((pa + 1) * pb % 2 == 1)));
        r.check(calc.is_zero(), || {
            format!("[ι_a, L_b] = ι_[a,b] residual on sample {i}")
        });
        let dw = act_gra1(&gra1_d_graph(), &[], &w);
        r.check(dw.as_ref() == Ok(&de_rham(&w)), || {
            format!("B-graph ≠ de Rham on sample {i}")
        });
    }
}

fn relations(r: &mut SuiteReport) {
    for m in 1..=3 {
        for n in 1..=3 {
            for primed in [false, true] {
                let res = planar_leibniz_residual(m, n, primed);
                r.check(res.as_ref().is_ok_and(TreeComb::is_empty), || {
                    format!("planar Leibniz residual m={m} n={n} primed={primed}: {res:?}")
                });
            }
        }
    }
    let trees: Vec<_> = enumerate_ks1_trees(4, true)
        .into_iter()
        .filter(|t| t.vertex_count() <= 4)
        .collect();
    for t in &trees {
        let n1 = ks1_normalize(t);
        let ok = n1
            .as_ref()
            .is_ok_and(|n1| ks1_normalize_lc(n1).as_ref() == Ok(n1));
        r.check(ok, || format!("ks1_normalize not idempotent on {t}"));
    }
    for a in &trees {
        for b in &trees {
            let direct = ks1_compose(a, b);
            let via = ks1_normalize(a)
                .and_then(|na| ks1_normalize(b).and_then(|nb| ks1_compose_lc(&na, &nb)));
            r.check(direct.is_ok() && direct == via, || {
                format!("ks1 normalization vs composition on {a} ∘ {b}")
            });
        }
    }
    let t = |s: &str| parse_tree(s).expect("suite tree");
    match br_differential(&t("E(1;2)")) {
        Ok(d) => {
            let cup = t("I(1,2)");
            let c = d.coef(&cup);
            let comm: TreeComb = [(cup, rat(1)), (t("I(2,1)"), rat(-1))]
                .into_iter()
                .collect();
            r.check(!c.is_zero() && d == comm.scaled(&c), || {
                "d E(1;2) is not the cup commutator".into()
            });
        }
        Err(e) => r.fail(e.to_string()),
    }
}

fn star(r: &mut SuiteReport, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi = crate::representations::parse_polyvector("xi1*xi2", 2).expect("bivector");
    let triples: Vec<_> = (0..8)
        .map(|_| {
            (
                rnd_fun(&mut rng, 2),
                rnd_fun(&mut rng, 2),
                rnd_fun(&mut rng, 2),
            )
        })
        .collect();
    let good = WeightSystem::moyal(3).expect("moyal weights");
    let fails = star_associativity_failures(&good, &pi, &triples);
    r.check(fails.as_ref().is_ok_and(Vec::is_empty), || {
        format!("Moyal associativity through ε³: {fails:?}")
    });
    match mc_residual(&good) {
        Ok(res) => {
            for (k, x) in res.iter().enumerate() {
                let cb = crate::twisting::constant_bivector_part(x);
                r.check(cb.is_empty(), || format!("Moyal MC residual at order {k}"));
            }
        }
        Err(e) => r.fail(e.to_string()),
    }
    let mut bad = WeightSystem::new(3).expect("weights");
    for k in 0..=3 {
        let c = if k == 2 {
            moyal_weight(k) * rat(3)
        } else {
            moyal_weight(k)
        };
        bad.insert(&WeightSystem::moyal_graph(k), &c)
            .expect("moyal graph");
    }
    let fails = star_associativity_failures(&bad, &pi, &triples);
    r.check(fails.as_ref().is_ok_and(|f| !f.is_empty()), || {
        "corrupted weights passed associativity".into()
    });
}

/// The literal reference expressions and a seeded random corpus, 200 trees in total.
pub fn parser_corpus(seed: u64) -> Vec<String> {
    let mut out: Vec<String> = [
        "I(E(2;5,4),B(E(3;6);1))",
        "K(𝟙, I(2,I(3,in)), 1)",
        "E(1;2)",
        "E(1;3,2)",
        "I(1,2)",
        "K(1,in)",
        "K(E(1;2,I(4,in)),3)",
        "K_B(K(𝟙, B(E(3;4,5); 6,7), in ); 1,2,in)",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut i = 0;
    while out.len() < 200 {
        let kind = TreeKind::ALL[i % TreeKind::ALL.len()];
        out.push(random_tree(&mut rng, kind, 2 + i % 6).to_string());
        i += 1;
    }
    out
}

/// Malformed inputs with the character position their parse error must report.
pub const MALFORMED: [(&str, usize); 6] = [
    ("E(1;2", 5),
    ("I(1,,2)", 4),
    ("E(1;2))", 6),
    ("K(1,in", 6),
    ("x", 0),
    ("I(1;2", 3),
];

fn parser(r: &mut SuiteReport, seed: u64) {
    for s in parser_corpus(seed) {
        match parse_tree(&s) {
            Ok(t) => {
                let printed = t.to_string();
                let back = parse_tree_as(&printed, t.kind);
                r.check(
                    back.as_ref() == Ok(&t) && back.map(|b| b.to_string()) == Ok(printed.clone()),
                    || format!("round trip of {s} via {printed}"),
                );
            }
            Err(e) => r.fail(format!("{s}: {e}")),
        }
    }
    for (s, pos) in MALFORMED {
        let got = parse_tree(s);
        r.check(
            matches!(got, Err(TreeError::Parse { pos: p, .. }) if p == pos),
            || format!("{s}: expected a parse error at {pos}, got {got:?}"),
        );
    }
    for (s, pos) in [
        ("gra{n=2;e=[(1,2]}", 15),
        ("gra{n=2;e=[(1,3)]}", 14),
        ("gru{n=1;e=[]}", 0),
    ] {
        let got = s.parse::<SignedGraph>();
        let ok = match &got {
            Err(crate::graph_core::GraphError::Parse { pos: p, .. }) => *p == pos,
            Err(crate::graph_core::GraphError::Invalid(_)) => pos == 14,
            _ => false,
        };
        r.check(ok, || {
            format!("{s}: expected rejection at {pos}, got {got:?}")
        });
    }
}

fn operad_axioms(r: &mut SuiteReport) {
    let mut gra = Vec::new();
    for n in 1..=3 {
        gra.extend(small_graphs(Kind::Gra, n, 1));
    }
    gra.push(graph("gra{n=3;e=[(1,2),(2,3)]}"));
    let mut dgra = small_graphs(Kind::Dgra, 1, 0);
    dgra.extend(small_graphs(Kind::Dgra, 2, 1));
    let mut gra1 = small_graphs(Kind::Gra1, 0, 1);
    gra1.extend(small_graphs(Kind::Gra1, 1, 1));
    for (kind, sample) in [(Kind::Gra, gra), (Kind::Dgra, dgra), (Kind::Gra1, gra1)] {
        let rep = operad_axiom_report(&sample, kind);
        r.checks += rep.checks;
        if let Some(f) = rep.failure {
            r.failures.push(format!("{}: {f}", kind.name()));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(Suite::from_name(s.name()), Some(s));
        }
    }

    #[test]
    fn fast_suites_pass() {
        for s in [Suite::Composition, Suite::Parser, Suite::Star, Suite::Bases] {
            let r = s.run(1);
            assert!(r.passed(), "{r}");
            assert!(r.checks > 0);
        }
    }

    #[test]
    fn corpus_has_two_hundred_entries() {
        let c = parser_corpus(3);
        assert_eq!(c.len(), 200);
        assert_eq!(c[0], "I(E(2;5,4),B(E(3;6);1))");
    }
}
