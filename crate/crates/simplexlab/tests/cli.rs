use serde_json::Value;
use simplexlab::fiveleg::{example1, Form};
use simplexlab::{ExponentKernel, IndexDomain};
use std::process::{Command, Output};

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_simplexlab"));
    c.args(args).env_remove("SIMPLEXLAB_THREADS");
    if let Some(t) = threads {
        c.env("SIMPLEXLAB_THREADS", t);
    }
    c.output().unwrap()
}

fn lines(o: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&o.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn passing_run_exits_zero_with_schema() {
    let o = run(&["--example", "1", "--N", "3", "--equations", "mmm2,m6,r4", "--output", "json"], None);
    assert_eq!(o.status.code(), Some(0));
    let reps = lines(&o);
    assert_eq!(reps.len(), 3);
    let keys = ["equation", "example", "params", "lhs_norm", "rhs_norm", "abs_residual", "rel_residual", "tolerance", "pass", "mode", "elapsed_ms"];
    for r in &reps {
        let obj = r.as_object().unwrap();
        assert_eq!(obj.len(), keys.len());
        for k in keys {
            assert!(obj.contains_key(k), "{k}");
        }
        assert!(r["example"].as_str().unwrap().starts_with("example1"));
        assert!(["full", "sampled", "inconclusive"].contains(&r["mode"].as_str().unwrap()));
        assert_eq!(r["pass"], true);
    }
}

#[test]
fn perturbed_run_exits_one() {
    let o = run(&["--example", "1", "--N", "3", "--equations", "mmm2", "--perturb", "1e-3"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL"));
}

#[test]
fn bad_configs_exit_two() {
    for args in [
        vec!["--example", "1", "--form", "M3", "--N", "4"],
        vec!["--example", "1", "--tol", "-1"],
        vec!["--example", "dilog", "--equations", "mmm2"],
        vec!["--example", "custom"],
        vec!["--example", "7"],
        vec!["--example", "1", "--q", "zz"],
    ] {
        assert_eq!(run(&args, None).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(run(&["--example", "1", "--equations", "mmm2"], Some("many")).status.code(), Some(2));
}

#[test]
fn json_is_deterministic_across_thread_counts() {
    let args = ["--example", "3", "--cutoff", "2", "--equations", "mmm2,m6", "--samples", "20", "--seed", "5", "--output", "json"];
    let strip = |o: &Output| {
        lines(o)
            .into_iter()
            .map(|mut v| {
                v.as_object_mut().unwrap().remove("elapsed_ms");
                v
            })
            .collect::<Vec<_>>()
    };
    let (a, b) = (run(&args, Some("1")), run(&args, Some("3")));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn listing_and_out_path() {
    let o = run(&["--list", "--output", "json"], None);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["families"].as_array().unwrap().len(), 5);
    assert!(run(&[], None).stdout.starts_with(b"example1"));

    let dir = std::env::temp_dir().join(format!("simplexlab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("r.jsonl");
    let o = run(&["--example", "qseries-not-a-family"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["--example", "1", "--equations", "pentagon", "--output", "json", "--out-path", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(serde_json::from_str::<Value>(text.trim()).unwrap()["equation"], "peg");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn custom_family_from_a_dump() {
    let dir = std::env::temp_dir().join(format!("simplexlab-custom-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.jsonl");
    let m = example1(&ExponentKernel::root_of_unity(3).unwrap(), &IndexDomain::cyclic(3), Form::M1).unwrap();
    m.write_json(&mut std::fs::File::create(&path).unwrap()).unwrap();
    let o = run(&["--example", "custom", "--m-file", path.to_str().unwrap(), "--equations", "mmm2", "--output", "json"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(lines(&o)[0]["example"], "custom");
    std::fs::remove_dir_all(&dir).ok();
}
