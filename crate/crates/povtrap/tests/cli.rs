use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const TINY: &str = "\
# small enough for a few seconds per command
preset = desk
n_agents = 40
base_n = 2
reps = 2
target_count = 10
";

fn povtrap(dir: &Path, args: &[&str]) -> Output {
    let conf = dir.join("tiny.conf");
    if !conf.exists() {
        fs::write(&conf, TINY).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_povtrap"))
        .arg("--config")
        .arg(&conf)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("-q")
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&povtrap(d.path(), &["design"])), 1, "missing seed is a usage error");
    assert_eq!(code(&povtrap(d.path(), &["--seed", "1", "no-such-command"])), 1);
    assert_eq!(code(&povtrap(d.path(), &["--seed", "1", "--preset", "huge", "design"])), 1);
    assert_eq!(code(&povtrap(d.path(), &["--seed", "1", "--set", "theta=0.1,0.99", "design"])), 1);
    assert_eq!(code(&povtrap(d.path(), &["--seed", "1", "--set", "base_n=3", "design"])), 1);
    assert_eq!(code(&povtrap(d.path(), &["--seed", "1", "classify"])), 2, "no results yet");
    assert_eq!(code(&povtrap(d.path(), &["--seed", "1", "design"])), 0);
}

#[test]
fn design_sizes() {
    let d = TempDir::new().unwrap();
    let out = povtrap(d.path(), &["--seed", "3", "--set", "base_n=64", "design"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let lines = data_lines(&d.path().join("out/design.csv"));
    assert_eq!(lines.len(), 448);
    let header = fs::read_to_string(d.path().join("out/design.csv")).unwrap();
    assert!(header.starts_with("# povtrap design config_digest="));
    assert!(header.contains("\nrow_id,ell,g_upper,beta,theta,alpha\n"));

    let p = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_povtrap"))
        .args(["--seed", "3", "--preset", "paper", "--out"])
        .arg(p.path().join("out"))
        .arg("design")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(data_lines(&p.path().join("out/design.csv")).len(), 7168);
}

#[test]
fn resume_is_idempotent() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&povtrap(d.path(), &["--seed", "5", "run"])), 0);
    let path = d.path().join("out/results.jsonl");
    let full = fs::read(&path).unwrap();
    let text = String::from_utf8(full.clone()).unwrap();
    assert_eq!(text.lines().count(), 1 + 14 * 2);

    // Rerunning a complete store changes nothing.
    assert_eq!(code(&povtrap(d.path(), &["--seed", "5", "run"])), 0);
    assert_eq!(fs::read(&path).unwrap(), full);

    // Drop some records, out of order, and resume.
    let kept: Vec<&str> = text
        .lines()
        .enumerate()
        .filter(|(i, _)| *i == 0 || i % 3 != 0)
        .map(|(_, l)| l)
        .collect();
    fs::write(&path, kept.join("\n") + "\n").unwrap();
    let out = povtrap(d.path(), &["--seed", "5", "run"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read(&path).unwrap(), full);
}

#[test]
fn foreign_results_are_refused() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&povtrap(d.path(), &["--seed", "5", "run"])), 0);
    let out = povtrap(d.path(), &["--seed", "6", "run"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn corrupted_line_is_reported() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&povtrap(d.path(), &["--seed", "5", "run"])), 0);
    let path = d.path().join("out/results.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let half = lines[4].len() / 2;
    lines[4].truncate(half);
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    for cmd in ["classify", "run"] {
        let out = povtrap(d.path(), &["--seed", "5", cmd]);
        assert_eq!(code(&out), 2, "{cmd}");
        assert!(stderr(&out).contains("results.jsonl:5:"), "{}", stderr(&out));
    }
}

#[test]
fn pipeline_is_deterministic_across_worker_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for (dir, workers) in [(&a, "1"), (&b, "3")] {
        for cmd in ["run", "classify", "analyze", "sobol", "demo-bimodal"] {
            let out = povtrap(dir.path(), &["--seed", "11", "--workers", workers, "--set", "bimodal_k=2", cmd]);
            assert_eq!(code(&out), 0, "{cmd}: {}", stderr(&out));
        }
    }
    let files = povtrap::commands::data_files(&a.path().join("out")).unwrap();
    assert_eq!(files, povtrap::commands::data_files(&b.path().join("out")).unwrap());
    assert!(files.len() >= 15);
    for f in files {
        assert_eq!(
            fs::read(a.path().join("out").join(&f)).unwrap(),
            fs::read(b.path().join("out").join(&f)).unwrap(),
            "{}",
            f.display()
        );
    }
}

#[test]
fn report_schemas() {
    let d = TempDir::new().unwrap();
    for cmd in ["run", "classify", "sobol"] {
        let out = povtrap(d.path(), &["--seed", "2", cmd]);
        assert_eq!(code(&out), 0, "{cmd}: {}", stderr(&out));
    }
    let out = d.path().join("out");

    let counts = data_lines(&out.join("regime_counts.csv"));
    assert_eq!(counts.len(), 6);
    for (line, want) in counts.iter().zip([
        "individual,AllPoor",
        "individual,SomeRich",
        "individual,AllRich",
        "community,AllPoor",
        "community,SomeRich",
        "community,AllRich",
    ]) {
        assert!(line.starts_with(want), "{line}");
    }
    let total: usize = counts[..3]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 28);
    assert_eq!(data_lines(&out.join("regime_joint.csv")).len(), 9);

    let sobol = data_lines(&out.join("sobol.csv"));
    assert_eq!(sobol.len(), 5 * 3 * 2);
    assert_eq!(data_lines(&out.join("sobol_ranking.csv")).len(), 3);

    let run = d.path().join("out/runs/row0_rep0");
    let wealth = data_lines(&run.join("wealth.csv"));
    assert_eq!(wealth.len(), 40);
    assert_eq!(wealth[0].split(',').count(), 1 + 101);
    let meta = fs::read_to_string(run.join("metadata.jsonl")).unwrap();
    let v: serde_json::Value = serde_json::from_str(meta.trim()).unwrap();
    assert!(v["projects"].as_array().is_some_and(|p| !p.is_empty()));
    assert_eq!(data_lines(&run.join("communities.csv")).len(), 40);

    for line in fs::read_to_string(out.join("results.jsonl")).unwrap().lines().skip(1) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["row_id", "rep", "seed", "individual_regime", "community_regime", "final_gini", "total_final_wealth"] {
            assert!(v.get(key).is_some(), "{key} missing");
        }
    }
}

#[test]
fn intervention_writes_one_row_per_rep() {
    let d = TempDir::new().unwrap();
    let out = povtrap(d.path(), &["--seed", "4", "intervene", "--row", "1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = data_lines(&d.path().join("out/intervention_row1.csv"));
    assert_eq!(rows.len(), 20);
    for r in rows {
        let f: f64 = r.split(',').nth(3).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&f));
    }
    let bad = povtrap(d.path(), &["--seed", "4", "intervene", "--row", "9999"]);
    assert_eq!(code(&bad), 1);
    let none = povtrap(d.path(), &["--seed", "4", "intervene"]);
    assert_eq!(code(&none), 1);
}

#[test]
fn edge_list_round_trips() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&povtrap(d.path(), &["--seed", "8", "run"])), 0);
    let text = fs::read_to_string(d.path().join("out/runs/row0_rep0/graph.txt")).unwrap();
    let g = povtrap::io::parse_edge_list(&text, 40).unwrap();
    assert!(g.is_connected());
    assert_eq!(povtrap::io::edge_list(&g), text.lines().skip(1).map(|l| format!("{l}\n")).collect::<String>());
    assert!(povtrap::io::parse_edge_list("0 1\n2\n", 40).is_err());
    assert!(povtrap::io::parse_edge_list("0 40\n", 40).is_err());
}
