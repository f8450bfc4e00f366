use std::path::Path;
use std::process::{Command, Output};

fn carnot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carnot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Succeeds with the given code and, on success, nothing on stderr.
fn expect_code(o: &Output, code: i32) -> String {
    assert_eq!(
        o.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        stdout(o),
        String::from_utf8_lossy(&o.stderr)
    );
    if code == 0 {
        assert!(
            o.stderr.is_empty(),
            "unexpected stderr: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    stdout(o)
}

fn line_value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

fn slope(text: &str) -> f64 {
    line_value(text, "slope").split_whitespace().next().unwrap().parse().unwrap()
}

const BAD_SPEC: &str = r#"
name = "bad"
strata = [3, 1, 1]

[[bracket]]
i = 1
j = 2
k = 4
c = 1

[[bracket]]
i = 1
j = 4
k = 5
c = 1

[[bracket]]
i = 3
j = 4
k = 5
c = 1
"#;

#[test]
fn validate_catalog_groups() {
    let out = expect_code(&carnot(&["validate", "--group", "heisenberg"]), 0);
    assert!(out.contains("Q = 4"));
    assert!(out.lines().filter(|l| l.ends_with(": PASS")).count() >= 4);
    let out = expect_code(&carnot(&["validate", "--group", "free_step2(3)"]), 0);
    assert!(out.contains("Q = 9"));
}

#[test]
fn validate_names_the_failing_jacobi_triple() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, BAD_SPEC).unwrap();
    let out = expect_code(&carnot(&["validate", path.to_str().unwrap()]), 1);
    let jacobi = out.lines().find(|l| l.starts_with("jacobi")).unwrap();
    assert!(jacobi.contains("FAIL") && jacobi.contains("(1, 2, 3)"), "{jacobi}");
}

#[test]
fn validate_reports_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "strata = [2, 1\n").unwrap();
    expect_code(&carnot(&["validate", path.to_str().unwrap()]), 2);
    expect_code(&carnot(&["validate", "--group", "nosuchgroup"]), 2);
}

#[test]
fn theta_tables() {
    let out = expect_code(&carnot(&["theta", "--group", "heisenberg"]), 0);
    let pairs: Vec<&str> = out.lines().filter(|l| l.starts_with("(s, r)")).collect();
    assert_eq!(pairs.len(), 1);
    assert!(pairs[0].contains("(3, 3): PASS"));

    let out = expect_code(&carnot(&["theta", "--group", "engel"]), 0);
    let pairs: Vec<&str> = out.lines().filter(|l| l.starts_with("(s, r)")).collect();
    assert_eq!(pairs.len(), 3);
    for (line, pair) in pairs.iter().zip(["(3, 3)", "(3, 4)", "(4, 4)"]) {
        assert!(line.contains(&format!("{pair}: PASS")), "{line}");
    }
}

#[test]
fn theta_rejects_commutative_groups() {
    let o = carnot(&["theta", "--group", "abelian2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ι ≥ 2"));
}

#[test]
fn frames_and_maurer_cartan_table() {
    let out = expect_code(&carnot(&["frames", "--group", "heisenberg"]), 0);
    assert!(out.contains("X1 = (1) ∂1 + (-1/2*x2) ∂3"));
    assert!(out.contains("η3 = (1/2*x2) dx1 + (-1/2*x1) dx2 + (1) dx3"));
    let out = expect_code(&carnot(&["mc-table", "--group", "heisenberg"]), 0);
    assert!(out.contains("dη1 = 0"));
    assert!(out.contains("dη3 = -η1∧η2"));
}

#[test]
fn dim_vertical_plane_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "dim".to_string(),
            "--group".into(),
            "heisenberg".into(),
            "--preset".into(),
            "vertical-plane".into(),
            "--scales".into(),
            "2:7".into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            p.to_str().unwrap().into(),
        ]
    };
    let run = |p: &Path| {
        let args = args(p);
        carnot(&args.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let out = expect_code(&run(&a), 0);
    assert!((slope(&out) - 3.0).abs() < 0.25);
    assert!(line_value(&out, "verdict").starts_with("PASS"));
    assert!(out.contains("caveat"));
    expect_code(&run(&b), 0);
    let csv_a = std::fs::read(&a).unwrap();
    assert_eq!(csv_a, std::fs::read(&b).unwrap());
    assert!(String::from_utf8(csv_a)
        .unwrap()
        .starts_with("eps,N_homogeneous,N_euclidean\n"));
    let report = std::fs::read_to_string(a.with_extension("toml")).unwrap();
    assert!(report.contains("seed = 11"));
    assert!(report.contains("verdict = \"PASS\""));
}

#[test]
fn dim_cube_and_cylinder() {
    let out = expect_code(
        &carnot(&["dim", "--group", "heisenberg", "--preset", "cube", "--scales", "2:6"]),
        0,
    );
    assert!((slope(&out) - 4.0).abs() < 0.2);
    let out = expect_code(
        &carnot(&["dim", "--group", "heisenberg", "--preset", "legendrian-cylinder"]),
        0,
    );
    assert!((slope(&out) - 1.0).abs() < 0.2);
    assert!(line_value(&out, "verdict").starts_with("INAPPLICABLE"));
    let out = expect_code(
        &carnot(&["dim", "--preset", "cube", "--scales", "2:6", "--metric", "euclidean"]),
        0,
    );
    assert!((slope(&out) - 3.0).abs() < 0.15);
}

#[test]
fn dim_input_errors() {
    expect_code(&carnot(&["dim", "--grid", "/nonexistent/grid.csv"]), 2);
    expect_code(&carnot(&["dim", "--preset", "cube", "--scales", "7:2"]), 2);
    expect_code(&carnot(&["dim", "--preset", "nonsense"]), 2);
}

#[test]
fn dim_accepts_a_grid_spec() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plane.toml");
    std::fs::write(
        &path,
        "lower = [0.0, 0.0]\nupper = [1.0, 1.0]\nresolution = [17, 17]\n[generator]\nkind = \"vertical_plane\"\n",
    )
    .unwrap();
    let out = expect_code(&carnot(&["dim", "--grid", path.to_str().unwrap(), "--scales", "2:5"]), 0);
    assert!(line_value(&out, "verdict").starts_with("PASS"));
}

#[test]
fn chain_cylinder_and_plane() {
    let out = expect_code(&carnot(&["chain", "--group", "heisenberg"]), 0);
    assert!(out.contains("max rank = 1"));
    assert!(out.contains("verdict = PASS"));
    let out = expect_code(&carnot(&["chain", "--group", "heisenberg", "--preset", "plane"]), 1);
    assert!(out.starts_with("group") && out.contains("PreconditionDefect"));
    expect_code(&carnot(&["chain", "--group", "abelian3"]), 3);
}

#[test]
fn integrate_sphere_matches_ball_volume() {
    let out = expect_code(&carnot(&["integrate-sphere", "-n", "3", "--resolution", "16"]), 0);
    let value: f64 = line_value(&out, "value").parse().unwrap();
    assert!((value - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-4);
    let residual: f64 = line_value(&out, "stokes_residual").parse().unwrap();
    assert!(residual < 1e-8);
    expect_code(&carnot(&["integrate-sphere", "-n", "3", "--weight", "x9"]), 2);
}

#[test]
fn selftest_passes_and_records_seed() {
    let out = expect_code(&carnot(&["selftest", "--seed", "5", "--samples", "20"]), 0);
    assert!(out.starts_with("seed = 5\n"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mc.txt");
    let o = carnot(&["mc-table", "--group", "engel", "--out", path.to_str().unwrap()]);
    assert!(expect_code(&o, 0).is_empty());
    assert!(std::fs::read_to_string(path).unwrap().contains("dη4 = -η1∧η3"));
}
