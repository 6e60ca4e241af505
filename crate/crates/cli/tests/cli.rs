use std::path::Path;
use std::process::{Command, Output};

fn tabular_pg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabular-pg"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, algorithms: &str) {
    let text = format!(
        r#"{{
  "mdp": {{ "file": "instance.json" }},
  "algorithms": [{algorithms}],
  "max_iters": 200,
  "output_dir": "out"
}}"#
    );
    std::fs::write(dir.join("config.json"), text).unwrap();
}

#[test]
fn generate_run_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    let out = tabular_pg(
        &[
            "generate",
            "--garnet",
            "n=10,k=5,b=3,gamma=0.9,seed=42",
            "--out",
            "instance.json",
        ],
        cwd,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    write_config(
        cwd,
        r#"{ "algorithm": "policy_iteration" },
           { "algorithm": "frank_wolfe", "stepsize": { "constant": 0.5 } },
           { "algorithm": "npg", "stepsize": { "line_search": {} } }"#,
    );
    let out = tabular_pg(&["run", "--config", "config.json"], cwd);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(cwd.join("out/report.json").exists());

    let audits = [
        ("out/policy_iteration_greedy.csv", "pi"),
        ("out/frank_wolfe_constant-0.5.csv", "1b"),
        ("out/npg_linesearch.csv", "1a"),
    ];
    for (trace, bound) in audits {
        let out = tabular_pg(
            &[
                "audit",
                "--trace",
                trace,
                "--mdp",
                "instance.json",
                "--bound",
                bound,
            ],
            cwd,
        );
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(report["satisfied"], true);
    }
}

#[test]
fn violated_bound_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    tabular_pg(
        &[
            "generate",
            "--garnet",
            "n=6,k=3,b=2,gamma=0.9,seed=1",
            "--out",
            "instance.json",
        ],
        cwd,
    );
    // A trace whose gap never shrinks violates every rate.
    let trace = "iter,loss,sup_gap,stepsize,bellman_residual,elementwise_improvement\n\
                 0,1.0,0.5,0,0.1,true\n\
                 1,1.0,0.5,inf,0.1,true\n";
    std::fs::write(cwd.join("stuck.csv"), trace).unwrap();
    let out = tabular_pg(
        &[
            "audit",
            "--trace",
            "stuck.csv",
            "--mdp",
            "instance.json",
            "--bound",
            "pi",
        ],
        cwd,
    );
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["satisfied"], false);
}

#[test]
fn errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    let out = tabular_pg(&["run", "--config", "missing.json"], cwd);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    let out = tabular_pg(
        &[
            "generate",
            "--garnet",
            "n=3,k=2,b=4,gamma=0.9,seed=0",
            "--out",
            "x.json",
        ],
        cwd,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("branching_factor"));

    std::fs::write(cwd.join("bad.json"), r#"{"n_states": 1}"#).unwrap();
    std::fs::write(cwd.join("t.csv"), "iter\n").unwrap();
    let out = tabular_pg(
        &[
            "audit", "--trace", "t.csv", "--mdp", "bad.json", "--bound", "1a",
        ],
        cwd,
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    for out in ["a.json", "b.json"] {
        let status = tabular_pg(
            &[
                "generate",
                "--garnet",
                "n=7,k=3,b=2,gamma=0.8,seed=5,rho=random-dirichlet",
                "--out",
                out,
            ],
            cwd,
        )
        .status;
        assert!(status.success());
    }
    assert_eq!(
        std::fs::read(cwd.join("a.json")).unwrap(),
        std::fs::read(cwd.join("b.json")).unwrap()
    );
}
