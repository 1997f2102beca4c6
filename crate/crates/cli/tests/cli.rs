use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flowbal_core::{brute_force, generate_random, parse_taillard, parse_taillard_named};

fn flowbal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowbal")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .map(str::trim)
        .unwrap_or_else(|| panic!("no `{key}` in:\n{text}"))
}

fn taillard(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../data/taillard/{name}.txt"))
}

#[test]
fn solve_random_matches_brute_force() {
    let out = flowbal(&["solve", "-n", "7", "-m", "4", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let expect = brute_force(&generate_random(7, 4, 50.0, 25.0, 42)).unwrap().1;
    assert_eq!(field(&text, "makespan").parse::<u64>().unwrap(), expect);
    assert_eq!(field(&text, "status"), "optimal");
}

#[test]
fn solve_single_job_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.txt");
    std::fs::write(&path, "1 3\n4\n5\n6\n").unwrap();
    let out = flowbal(&["solve", "--instance", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(field(&stdout(&out), "makespan"), "15");
}

#[test]
fn truncated_taillard_solve_exits_2() {
    let out = flowbal(&["solve", "--instance", taillard("ta021").to_str().unwrap(), "--budget", "100000"]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert_eq!(field(&text, "status"), "truncated");
    let ms: u64 = field(&text, "makespan").parse().unwrap();
    assert!(ms >= field(&text, "lower bound").parse::<u64>().unwrap());
    let perm: Vec<usize> = field(&text, "permutation").split_whitespace().map(|x| x.parse().unwrap()).collect();
    let mut sorted = perm.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (0..20).collect::<Vec<_>>());
}

#[test]
fn input_errors_exit_3_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "2 2\n1 2\n3 x\n").unwrap();
    let out = flowbal(&["solve", "--instance", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "n = 5\nm = 3\nstrategy = fastest\n").unwrap();
    let out = flowbal(&["compare", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exp.cfg:3"));

    assert_eq!(flowbal(&["solve", "--instance", "/no/such/file"]).status.code(), Some(3));
    assert_eq!(flowbal(&["solve", "--bogus"]).status.code(), Some(3));
    assert_eq!(flowbal(&["--help"]).status.code(), Some(0));
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(csv.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn compare_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "# two strategies\nn = 6\nm = 3\nstrategy = sld\nstrategy = pfs\ntransfer = Min1\n").unwrap();
    let csv_path = dir.path().join("out.csv");
    let out = flowbal(&["compare", "--config", cfg.to_str().unwrap(), "--out", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("instance,strategy,transfer,seed,time,makespan,optimal,nodes,messages,bytes,status\n"));
    let rows = rows(&text);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][1], "sld");
    assert_eq!(rows[1][1], "pfs");
    assert!(rows.iter().all(|r| r[6] == "true" && r[10] == "ok"));
    assert_eq!(rows[0][5], rows[1][5]);
    // summary goes to stdout when the CSV goes to a file
    assert!(stdout(&out).contains("vs sld/Min1"));

    // flags override the file's list
    let out = flowbal(&["compare", "--config", cfg.to_str().unwrap(), "--strategy", "acwn,rand"]);
    let rows = self::rows(&stdout(&out));
    assert_eq!(rows.iter().map(|r| r[1].as_str()).collect::<Vec<_>>(), ["acwn", "rand"]);
}

#[test]
fn compare_is_reproducible_through_the_binary() {
    let args = ["compare", "-n", "7", "-m", "3", "--count", "2", "--het", "mixed:1,4", "--seed", "5"];
    let a = flowbal(&args);
    let b = flowbal(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(rows(&stdout(&a)).len(), 2 * 4 * 2);
}

#[test]
fn budgeted_compare_exits_2() {
    let out = flowbal(&["compare", "-n", "12", "-m", "8", "--budget", "50", "--strategy", "pfs", "--transfer", "1in1"]);
    assert_eq!(out.status.code(), Some(2));
    let rows = rows(&stdout(&out));
    assert_eq!(rows[0][10], "truncated");
    assert_eq!(rows[0][6], "false");
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).map_or(Vec::new(), |d| d.map(|e| e.unwrap().path()).collect());
    v.sort();
    v
}

#[test]
fn gen_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("gen");
    let out = flowbal(&["gen", "-n", "5", "-m", "4", "--count", "3", "--seed", "10", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let written = files(&out_dir);
    assert_eq!(written.len(), 3);
    for (i, path) in written.iter().enumerate() {
        let stem = path.file_stem().unwrap().to_str().unwrap();
        let inst = &parse_taillard_named(&std::fs::read_to_string(path).unwrap(), stem).unwrap()[0];
        let seed = 10 + i as u64;
        assert_eq!(inst.published().seed, Some(seed));
        // defaults: mean 50, stddev 25
        assert!(inst.rows().eq(generate_random(5, 4, 50.0, 25.0, seed).rows()));
    }

    let again = flowbal(&["gen", "-n", "5", "-m", "4", "--count", "3", "--seed", "10"]);
    let parsed = parse_taillard(&stdout(&again)).unwrap();
    assert_eq!(parsed.len(), 3);

    let empty = dir.path().join("none");
    let out = flowbal(&["gen", "-n", "5", "-m", "4", "--count", "0", "--out", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(files(&empty).is_empty());
}
