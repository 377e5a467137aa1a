use std::collections::BTreeSet;
use std::process::{Command, Output};

fn opgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opgraph"))
        .args(args)
        .env_remove("OPGRAPH_MAX_INTERNAL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

/// Every library operation, the subcommand reaching it and one working invocation.
const COVERAGE: &[(&str, &str, &[&str])] = &[
    ("rank", "betti", &["betti", "--matrix", "1,0;0,1"]),
    ("kernel_basis", "basis", &["basis", "--matrix", "1,-1"]),
    (
        "canonical_form",
        "normalize",
        &["normalize", "gra{n=2;e=[(1,2),(1,2)]}"],
    ),
    (
        "lincomb_combine",
        "normalize",
        &[
            "normalize",
            "gra{n=2;e=[(1,2)]}",
            "--combine",
            "gra{n=2;e=[(1,2)]}",
            "--coef",
            "-1",
        ],
    ),
    (
        "gra_compose",
        "compose",
        &[
            "compose",
            "--lhs",
            "gra{n=3;e=[(1,2),(2,3)]}",
            "--slot",
            "2",
            "--rhs",
            "gra{n=2;e=[(1,2)]}",
        ],
    ),
    (
        "directed_expansion",
        "normalize",
        &["normalize", "gra{n=2;e=[(1,2)]}", "--directed"],
    ),
    (
        "gra1_compose",
        "compose",
        &[
            "compose",
            "--lhs",
            "gra1{m=1;e=[(1>in)]}",
            "--rhs",
            "gra1{m=1;e=[(out>1)]}",
        ],
    ),
    (
        "sym_action",
        "normalize",
        &["normalize", "gra{n=3;e=[(1,2),(2,3)]}", "--perm", "2,1,3"],
    ),
    (
        "sgra1_cyclic",
        "normalize",
        &["normalize", "sgra1{m=0,n=2;e=[(out>b1)]}", "--cyclic", "1"],
    ),
    (
        "operad_axiom_report",
        "verify",
        &[
            "verify",
            "--axioms",
            "gra",
            "--graph",
            "gra{n=2;e=[(1,2)]}",
            "--graph",
            "gra{n=1;e=[]}",
        ],
    ),
    ("parse_tree", "parse", &["parse", "I(E(2;5,4),B(E(3;6);1))"]),
    (
        "pt_compose",
        "compose",
        &[
            "compose", "--lhs", "E(1;2)", "--slot", "1", "--rhs", "E(1;2)",
        ],
    ),
    ("br_differential", "diff", &["diff", "E(1;2)"]),
    (
        "ks1_compose",
        "compose",
        &[
            "compose",
            "--lhs",
            "K(𝟙, I(2,I(3,in)), 1)",
            "--rhs",
            "K(1,in)",
        ],
    ),
    (
        "ks1_normalize",
        "normalize",
        &["normalize", "K(𝟙, I(2,I(3,in)), 1)"],
    ),
    ("brinf_differential", "diff", &["diff", "B(E(1;2);3)"]),
    (
        "planar_leibniz_residual",
        "verify",
        &["verify", "--leibniz", "2,2"],
    ),
    (
        "graphs_differential",
        "diff",
        &["diff", "gra{n=2,i=1;e=[(1,i1),(2,i1),(1,2)]}"],
    ),
    (
        "graphs_membership",
        "membership",
        &["membership", "gra{n=2;e=[(1,2)]}", "--family", "graphs"],
    ),
    (
        "graphs1_differential",
        "diff",
        &["diff", "gra1{m=1;e=[(out>1),(1>in)]}"],
    ),
    (
        "sgraphs_differential",
        "diff",
        &["diff", "sgra{m=1,n=2;e=[(1>b1),(1>b2)]}"],
    ),
    (
        "mc_residual",
        "star",
        &["star", "mc", "--weights", "moyal:2", "--constant-bivector"],
    ),
    (
        "act_dgra",
        "act",
        &[
            "act",
            "dgra",
            "--graph",
            "dgra{n=2;e=[(1>2)]}",
            "xi1",
            "x1^2",
        ],
    ),
    (
        "schouten_bracket",
        "act",
        &["act", "schouten", "x2*xi1", "xi2"],
    ),
    (
        "act_sgra",
        "act",
        &[
            "act",
            "sgra",
            "--graph",
            "sgra{m=1,n=2;e=[(1>b1),(1>b2)]}",
            "xi1*xi2",
        ],
    ),
    (
        "braces",
        "act",
        &["act", "braces", "(x1)*D[(1,0)]", "(1)*D[(0,1);(0,0)]"],
    ),
    (
        "act_gra1",
        "act",
        &[
            "act",
            "gra1",
            "--graph",
            "gra1{m=0;e=[(out>in)]}",
            "--form",
            "x1^2*dx2",
        ],
    ),
    (
        "moyal_star",
        "star",
        &["star", "moyal", "--f", "x1", "--g", "x2", "--order", "1"],
    ),
    (
        "enumerate_slice",
        "basis",
        &[
            "basis",
            "--family",
            "graphs",
            "--n",
            "2",
            "--loop-order",
            "0",
        ],
    ),
    (
        "betti",
        "betti",
        &["betti", "--family", "graphs1", "--m", "0"],
    ),
    (
        "pdu_basis",
        "basis",
        &["basis", "--family", "pdu", "--n", "3"],
    ),
    (
        "string_basis",
        "basis",
        &["basis", "--family", "string", "--n", "3"],
    ),
];

const SPEC_OPS: &[&str] = &[
    "rank",
    "kernel_basis",
    "canonical_form",
    "lincomb_combine",
    "gra_compose",
    "directed_expansion",
    "gra1_compose",
    "sym_action",
    "sgra1_cyclic",
    "operad_axiom_report",
    "parse_tree",
    "pt_compose",
    "br_differential",
    "ks1_compose",
    "ks1_normalize",
    "brinf_differential",
    "planar_leibniz_residual",
    "graphs_differential",
    "graphs_membership",
    "graphs1_differential",
    "sgraphs_differential",
    "mc_residual",
    "act_dgra",
    "schouten_bracket",
    "act_sgra",
    "braces",
    "act_gra1",
    "moyal_star",
    "enumerate_slice",
    "betti",
    "pdu_basis",
    "string_basis",
];

#[test]
fn every_operation_is_reachable_exactly_once() {
    let ops: Vec<&str> = COVERAGE.iter().map(|(op, _, _)| *op).collect();
    let unique: BTreeSet<&str> = ops.iter().copied().collect();
    assert_eq!(unique.len(), ops.len(), "an operation is listed twice");
    assert_eq!(unique, SPEC_OPS.iter().copied().collect::<BTreeSet<_>>());
    for (op, sub, argv) in COVERAGE {
        assert_eq!(argv[0], *sub, "{op}");
        let o = opgraph(argv);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{op}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stdout.is_empty(), "{op} printed nothing");
    }
}

#[test]
fn documented_examples() {
    let o = opgraph(&[
        "compose",
        "--lhs",
        "gra{n=3;e=[(1,2),(2,3)]}",
        "--slot",
        "2",
        "--rhs",
        "gra{n=2;e=[(1,2)]}",
    ]);
    assert_eq!(stdout(&o).lines().count(), 4);
    let o = opgraph(&[
        "d2check",
        "--family",
        "graphs",
        "--n",
        "2",
        "--max-internal",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = opgraph(&["betti", "--family", "graphs1", "--m", "0"]);
    assert_eq!(stdout(&o).trim(), r#"{"0":1,"-1":1}"#);
    let o = opgraph(&["--json", "betti", "--family", "graphs", "--n", "2"]);
    assert_eq!(
        stdout(&o).trim(),
        r#"{"family":"graphs","n":2,"betti":{"0":1,"-1":1}}"#
    );
}

#[test]
fn json_lincomb_output_round_trips_through_normalize() {
    let o = opgraph(&["--json", "normalize", "gra{n=2;e=[(1,2)]}", "--directed"]);
    let doc = stdout(&o);
    let v: serde_json::Value = serde_json::from_str(&doc).unwrap();
    assert_eq!(v["kind"], "dgra");
    assert_eq!(v["terms"].as_array().unwrap().len(), 2);
    let o = opgraph(&[
        "--json",
        "normalize",
        doc.trim(),
        "--combine",
        doc.trim(),
        "--coef",
        "-1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["terms"].as_array().unwrap().is_empty());
}

#[test]
fn outputs_are_deterministic() {
    let runs: &[&[&str]] = &[
        &["verify", "--suite", "parser", "--seed", "11"],
        &[
            "--json",
            "compose",
            "--lhs",
            "K(𝟙, I(2,I(3,in)), 1)",
            "--rhs",
            "K(1,in)",
        ],
        &[
            "basis",
            "--family",
            "graphs1",
            "--m",
            "1",
            "--loop-order",
            "1",
            "--jobs",
            "3",
        ],
        &[
            "star",
            "weights",
            "--weights",
            "moyal:3",
            "--samples",
            "4",
            "--seed",
            "5",
        ],
    ];
    for argv in runs {
        let (a, b) = (opgraph(argv), opgraph(argv));
        assert_eq!(a.stdout, b.stdout, "{argv:?}");
        assert_eq!(a.status.code(), Some(0), "{argv:?}");
    }
    let one = opgraph(&["betti", "--family", "graphs", "--n", "3", "--jobs", "1"]);
    let many = opgraph(&["betti", "--family", "graphs", "--n", "3", "--jobs", "4"]);
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn input_errors_exit_two_with_position() {
    for (argv, pos) in [
        (&["parse", "E(1;2"][..], 5),
        (&["diff", "gra{n=2;e=[(1,2]}"][..], 15),
        (&["act", "schouten", "x1 +", "xi1"][..], 4),
    ] {
        let o = opgraph(argv);
        assert_eq!(o.status.code(), Some(2), "{argv:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert!(err.contains(&format!("position {pos}")), "{err}");
        let caret = err.lines().find(|l| l.trim() == "^").expect("caret line");
        assert_eq!(caret.find('^'), Some(2 + pos), "{err}");
    }
    assert_eq!(opgraph(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        opgraph(&["betti", "--family", "nope", "--n", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        opgraph(&["betti", "--family", "graphs", "--n", "9"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn mathematical_failures_exit_one() {
    let o = opgraph(&["star", "mc", "--weights", "moyal:2"]);
    assert_eq!(
        o.status.code(),
        Some(1),
        "the full Moyal residual has non-constant parts"
    );
    let w = |c2: &str| {
        format!(
            r#"{{"order":2,"weights":[{{"graph":"sgra{{m=0,n=2;e=[]}}","coef":"1"}},{{"graph":"sgra{{m=0,n=2,i=1;e=[(i1>b1),(i1>b2)]}}","coef":"1/2"}},{{"graph":"sgra{{m=0,n=2,i=2;e=[(i1>b1),(i1>b2),(i2>b1),(i2>b2)]}}","coef":"{c2}"}}]}}"#
        )
    };
    let good = opgraph(&["star", "weights", "--weights", &w("1/8"), "--samples", "3"]);
    assert_eq!(
        good.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&good.stderr)
    );
    let bad = opgraph(&["star", "weights", "--weights", &w("3/8"), "--samples", "3"]);
    assert_eq!(
        bad.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&bad.stderr)
    );
    assert!(stdout(&bad).contains("fails at orders 2"));
}

#[test]
fn internal_cap_override_is_bounded() {
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_opgraph"))
            .args(["betti", "--family", "graphs", "--n", "2"])
            .env("OPGRAPH_MAX_INTERNAL", v)
            .output()
            .unwrap()
    };
    assert_eq!(run("7").status.code(), Some(2));
    let o = run("2");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), r#"{"0":1,"-1":1}"#);
}

#[test]
fn verify_runs_named_suites() {
    let o = opgraph(&[
        "--json",
        "verify",
        "--suite",
        "composition",
        "--suite",
        "star",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(
        opgraph(&["verify", "--suite", "nope"]).status.code(),
        Some(2)
    );
}
