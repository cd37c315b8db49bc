use std::path::Path;
use std::process::{Command, Output};

use stodyn::reports::{CompareDoc, SolveDoc};

fn stodyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stodyn")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = stodyn(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    stodyn(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_is_deterministic_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    ok(&["generate", "--seed", "5", "-n", "300", "-o", s(&a)]);
    ok(&["generate", "--seed", "5", "-n", "300", "-o", s(&b)]);
    ok(&["generate", "--seed", "6", "-n", "300", "-o", s(&c)]);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_ne!(text, std::fs::read_to_string(&c).unwrap());
    assert_eq!(text.lines().count(), 301);
    assert!(text.starts_with("t,omega,p_prod,accel\n"));
}

#[test]
fn noiseless_model_generates_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let (m, out) = (dir.path().join("m.toml"), dir.path().join("s.csv"));
    std::fs::write(&m, "p = 2\nphi = [1.9799, -0.9879]\nsigma_eps = 0.0\ndt = 0.1\n").unwrap();
    ok(&["generate", "--model", s(&m), "-n", "5", "-o", s(&out)]);
    let series = stodyn::series::read_series(&out, 0.1).unwrap();
    assert_eq!(series.omega, vec![0.0; 5]);
    assert_eq!(series.p_prod.unwrap(), vec![0.0; 5]);
}

#[test]
fn fit_recovers_generating_model() {
    let dir = tempfile::tempdir().unwrap();
    let (series, m) = (dir.path().join("s.csv"), dir.path().join("m.toml"));
    ok(&["generate", "--seed", "3", "-n", "100000", "-o", s(&series)]);
    for method in ["cls", "multilag"] {
        ok(&["fit", "--series", s(&series), "--method", method, "-o", s(&m)]);
        let doc = stodyn::modelfile::read_model_doc(&m).unwrap();
        assert_eq!(doc.fit.as_ref().unwrap().method, method);
        assert!((doc.phi[0] - 1.9799).abs() < 0.02 && (doc.phi[1] + 0.9879).abs() < 0.02, "{method}: {doc:?}");
        assert!((doc.sigma_eps / 0.00347 - 1.0).abs() < 0.1, "{method}: {doc:?}");
    }
}

#[test]
fn solve_simulate_compare_on_a_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&["solve", "--grid", "5,9,9", "--sweeps", "20000", "-o", s(&p("sol"))]);
    let rep: SolveDoc = stodyn::reports::read_toml(&p("sol/report.toml")).unwrap();
    assert!(rep.final_evaluation_converged);
    assert!(rep.improvement_steps <= 10);
    assert_eq!(rep.solver.grid, vec![5, 9, 9]);
    assert_eq!(rep.rms_p_grid, rep.avg_cost.sqrt());
    let slices = std::fs::read_to_string(p("sol/policy_slices.csv")).unwrap();
    assert!(slices.starts_with("e_sto,omega,accel,p_grid\n"));

    ok(&["generate", "--seed", "1", "-n", "2000", "-o", s(&p("t.csv"))]);
    let policy = p("sol/policy.toml");
    ok(&["simulate", "--policy", s(&policy), "--series", s(&p("t.csv")), "-o", s(&p("tr.csv"))]);
    let tr = stodyn::series::read_trajectory(&p("tr.csv")).unwrap();
    assert_eq!(tr.len(), 2000);
    assert_eq!(tr.e_sto[0], 5e6);

    // the heuristic compared against itself gains nothing
    ok(&["compare", "--policy", "heuristic", "--series", s(&p("t.csv")), "-o", s(&p("self.toml"))]);
    let doc: CompareDoc = stodyn::reports::read_toml(&p("self.toml")).unwrap();
    assert_eq!(doc.series[0].reduction_vs_heuristic_pct, 0.0);
    assert!(doc.series[0].std_heuristic < doc.series[0].std_no_storage);
}

#[test]
fn single_improvement_step_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol");
    ok(&["solve", "--grid", "4,5,5", "--max-improvements", "1", "--sweeps", "20000", "-o", s(&out)]);
    let rep: SolveDoc = stodyn::reports::read_toml(&out.join("report.toml")).unwrap();
    assert_eq!(rep.improvement_steps, 1);
    // the heuristic and its one-step improvement are both evaluated
    assert_eq!(rep.evaluation_costs.len(), 2);
    assert_eq!(rep.policy_changes.len(), 1);
    assert!(rep.evaluation_costs[1] < rep.evaluation_costs[0]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    // usage
    assert_eq!(code(&["fit", "--series", "x.csv", "-p", "0", "-o", "m.toml"]), 2);
    assert_eq!(code(&["bogus"]), 2);
    // missing input
    assert_eq!(code(&["simulate", "--policy", "heuristic", "--series", s(&p("none.csv")), "-o", s(&p("o.csv"))]), 3);
    // malformed data
    std::fs::write(p("bad.csv"), "omega\nfoo\n").unwrap();
    assert_eq!(code(&["simulate", "--policy", "heuristic", "--series", s(&p("bad.csv")), "-o", s(&p("o.csv"))]), 5);
    std::fs::write(p("m.toml"), "p = 2\nphi = [1.5, 0.6]\nsigma_eps = 0.1\ndt = 0.1\n").unwrap();
    assert_eq!(code(&["generate", "--model", s(&p("m.toml")), "-o", s(&p("g.csv"))]), 5);
    // capped evaluation is a warning unless strict
    let (sol, t) = (p("sol"), p("t.csv"));
    let args = ["solve", "--grid", "4,5,5", "--sweeps", "5", "-o", s(&sol)];
    assert_eq!(code(&args), 0);
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(code(&strict), 4);
    // a value file is not a policy
    ok(&["generate", "-n", "50", "-o", s(&p("t.csv"))]);
    let value = p("sol/value.toml");
    assert_eq!(code(&["simulate", "--policy", s(&value), "--series", s(&p("t.csv")), "-o", s(&p("o.csv"))]), 5);
    // the policy energy axis must match the storage
    let policy = p("sol/policy.toml");
    let o = p("o.csv");
    assert_eq!(code(&["simulate", "--policy", s(&policy), "--series", s(&t), "--e-rated", "5e6", "-o", s(&o)]), 5);
}
