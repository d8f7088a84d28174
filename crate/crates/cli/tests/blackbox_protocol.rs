//! The external-process protocol, driven through real shell scripts: output
//! parsing, failure tolerance, batching, and coordinate round-tripping.

mod common;

use std::fs;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use mads::{Blackbox, EvalStatus, Point};
use mads_cli::{run_solve, ProcessBlackbox, SolveOptions};

use common::{sphere_script, write_param_file, write_script};

#[test]
fn echo_style_blackbox_maps_tokens_to_objective_and_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let script = write_script(dir.path(), "bb.sh", "echo 3.2 -1 -0.5\n");
    let bb = ProcessBlackbox::new(script, 3).unwrap();
    let out = bb.eval_raw(&Point::new(vec![0.0, 0.0])).unwrap();
    assert_eq!(out, vec![3.2, -1.0, -0.5]);
}

#[test]
fn nonzero_exit_and_garbage_output_read_as_failures() {
    let dir = tempfile::tempdir().unwrap();

    let crashing = write_script(dir.path(), "crash.sh", "exit 1\n");
    let bb = ProcessBlackbox::new(crashing, 1).unwrap();
    assert_eq!(bb.eval_raw(&Point::new(vec![1.0])), None);

    let garbage = write_script(dir.path(), "garbage.sh", "echo not-a-number\n");
    let bb = ProcessBlackbox::new(garbage, 1).unwrap();
    assert_eq!(bb.eval_raw(&Point::new(vec![1.0])), None);

    let silent = write_script(dir.path(), "silent.sh", "true\n");
    let bb = ProcessBlackbox::new(silent, 1).unwrap();
    assert_eq!(bb.eval_raw(&Point::new(vec![1.0])), None);
}

#[test]
fn inf_objective_is_a_successful_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let script = write_script(dir.path(), "inf.sh", "echo inf 0 0\n");
    let bb = ProcessBlackbox::new(script, 3).unwrap();
    let out = bb.eval_raw(&Point::new(vec![0.5])).unwrap();
    assert_eq!(out, vec![f64::INFINITY, 0.0, 0.0]);
}

#[test]
fn coordinates_round_trip_through_the_input_file_at_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    // The blackbox echoes its input line back, so the parsed outputs are
    // exactly the coordinates the protocol wrote.
    let script = write_script(dir.path(), "echo.sh", "cat \"$1\"\n");
    let values = vec![std::f64::consts::PI, 1e-300, 5e-324, -1.7e308, 2.0_f64.sqrt()];
    let bb = ProcessBlackbox::new(script, values.len()).unwrap();
    let out = bb.eval_raw(&Point::new(values.clone())).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<u64>>();
    assert_eq!(bits(&out), bits(&values));
}

#[test]
fn batch_invocations_pair_output_lines_with_input_lines() {
    let dir = tempfile::tempdir().unwrap();
    // Sum per line, but sabotage the second line of every batch.
    let script = write_script(
        dir.path(),
        "batch.sh",
        "awk 'NR == 2 { print \"oops\"; next } { s = 0; for (i = 1; i <= NF; i++) s += $i; print s }' \"$1\"\n",
    );
    let bb = ProcessBlackbox::new(script, 1).unwrap();
    let points = vec![
        Point::new(vec![1.0, 2.0]),
        Point::new(vec![3.0, 4.0]),
        Point::new(vec![5.0, 6.0]),
    ];
    let out = bb.eval_batch(&points);
    assert_eq!(out, vec![Some(vec![3.0]), None, Some(vec![11.0])]);

    // A crash fails the whole group — there is no output to salvage.
    let crash = write_script(dir.path(), "batchcrash.sh", "exit 3\n");
    let bb = ProcessBlackbox::new(crash, 1).unwrap();
    assert_eq!(bb.eval_batch(&points), vec![None, None, None]);
}

#[test]
fn grouped_dispatch_invokes_the_process_once_per_group() {
    let dir = tempfile::tempdir().unwrap();
    let calls = dir.path().join("calls");
    let lines = dir.path().join("lines");
    // Count invocations and evaluated lines separately.
    let script = write_script(
        dir.path(),
        "counting.sh",
        &format!(
            "echo x >> {}\nwhile read -r line; do echo \"$line\" >> {}; done < \"$1\"\n\
             awk '{{ s = 0; for (i = 1; i <= NF; i++) s += $i * $i; print s }}' \"$1\"\n",
            calls.display(),
            lines.display()
        ),
    );
    let params = write_param_file(
        dir.path(),
        "run.txt",
        &format!(
            "DIMENSION 2\nBB_EXE {}\nBB_OUTPUT_TYPE OBJ\nX0 ( 3 3 )\n\
             MAX_BB_EVAL 60\nSEED 1\nGROUP_MAX_SIZE 4\n",
            script.display()
        ),
    );
    let report = run_solve(&params, &SolveOptions::default()).unwrap();
    assert_eq!(report.evaluations, 60);

    let invocations = fs::read_to_string(&calls).unwrap().lines().count();
    let evaluated = fs::read_to_string(&lines).unwrap().lines().count();
    assert_eq!(evaluated, 60);
    assert!(
        invocations < evaluated,
        "grouping did not batch: {invocations} invocations for {evaluated} evaluations"
    );
}

#[test]
fn a_blackbox_that_starts_failing_mid_run_does_not_abort_the_solve() {
    let dir = tempfile::tempdir().unwrap();
    let counter = dir.path().join("count");
    // Healthy for the first 5 calls, then exits nonzero forever.
    let script = write_script(
        dir.path(),
        "flaky.sh",
        &format!(
            "n=$(cat {c} 2>/dev/null || echo 0)\nn=$((n + 1))\necho $n > {c}\n\
             [ $n -gt 5 ] && exit 9\n\
             awk '{{ s = 0; for (i = 1; i <= NF; i++) s += $i * $i; print s }}' \"$1\"\n",
            c = counter.display()
        ),
    );
    let params = write_param_file(
        dir.path(),
        "run.txt",
        &format!(
            "DIMENSION 2\nBB_EXE {}\nBB_OUTPUT_TYPE OBJ\nX0 ( 3 3 )\nMAX_BB_EVAL 30\nSEED 2\n",
            script.display()
        ),
    );
    let report = run_solve(&params, &SolveOptions::default()).unwrap();
    // The run spent its whole budget despite the failures and still holds
    // the best of the healthy evaluations.
    assert_eq!(report.evaluations, 30);
    let best = report.best.expect("early evaluations succeeded");
    assert_eq!(best.eval.status, EvalStatus::Ok);
    assert!(best.eval.f.is_finite());
}

#[test]
fn solve_with_a_script_blackbox_descends_on_the_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let script = sphere_script(dir.path());
    let params = write_param_file(
        dir.path(),
        "run.txt",
        &format!(
            "DIMENSION 2\nBB_EXE {}\nBB_OUTPUT_TYPE OBJ\nX0 ( 3 3 )\n\
             MAX_BB_EVAL 150\nSEED 3\nLOWER_BOUND * -10\nUPPER_BOUND * 10\n",
            script.display()
        ),
    );
    let opts = SolveOptions {
        interrupt: Arc::new(AtomicBool::new(false)),
        ..SolveOptions::default()
    };
    let report = run_solve(&params, &opts).unwrap();
    let best = report.best.unwrap();
    assert!(best.eval.f < 0.1, "f = {}", best.eval.f);
    assert_eq!(best.h, 0.0);
}
