//! Peak memory of `expand` and `stats` must not grow with dataset length.

use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::Command;

fn write_dataset(path: &Path, lines: usize) {
    let pad = "padding ".repeat(110);
    let mut w = BufWriter::new(std::fs::File::create(path).unwrap());
    for i in 0..lines {
        writeln!(
            w,
            "{{\"id\": \"q{i:07}\", \"question\": \"question {i} {pad}\", \"answers\": [\"Sun Life Stadium\", \"answer {i} alpha\", \"answer {i} beta\", \"answer {i} gamma\"]}}"
        )
        .unwrap();
    }
}

/// Run the binary and return its peak resident set size in KiB.
fn peak_rss_kib(args: &[&std::ffi::OsStr]) -> i64 {
    #[allow(clippy::zombie_processes)] // reaped by wait4 below
    let child = Command::new(env!("CARGO_BIN_EXE_alias-qa"))
        .args(args)
        .stdout(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let mut status = 0;
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let pid = unsafe { libc::wait4(child.id() as libc::pid_t, &mut status, 0, &mut usage) };
    assert_eq!(pid, child.id() as libc::pid_t);
    assert!(
        libc::WIFEXITED(status) && libc::WEXITSTATUS(status) == 0,
        "status {status}"
    );
    usage.ru_maxrss
}

#[test]
fn expand_and_stats_stream() {
    let dir = tempfile::tempdir().unwrap();
    let kb = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/stadium.tsv");
    let index = dir.path().join("index.qaai");
    let st = Command::new(env!("CARGO_BIN_EXE_alias-qa"))
        .args([
            "build-index".as_ref(),
            "--in".as_ref(),
            kb.as_os_str(),
            "--out".as_ref(),
            index.as_os_str(),
        ])
        .output()
        .unwrap();
    assert!(st.status.success());

    let small = dir.path().join("small.jsonl");
    let large = dir.path().join("large.jsonl");
    write_dataset(&small, 20_000);
    write_dataset(&large, 100_000);
    let large_bytes = std::fs::metadata(&large).unwrap().len() as i64;
    let out = dir.path().join("out.jsonl");

    for sub in ["expand", "stats"] {
        let run = |data: &Path| {
            let mut args: Vec<&std::ffi::OsStr> = vec![
                "--threads".as_ref(),
                "4".as_ref(),
                sub.as_ref(),
                "--index".as_ref(),
                index.as_os_str(),
                "--data".as_ref(),
                data.as_os_str(),
            ];
            if sub == "expand" {
                args.extend(["--out".as_ref(), out.as_os_str()]);
            }
            peak_rss_kib(&args)
        };
        let base = run(&small);
        let big = run(&large);
        let growth_kib = big - base;
        // Only the 16-byte id fingerprints grow with length; holding the
        // ~100 MB input would add several times the bound.
        assert!(large_bytes > 90_000_000);
        assert!(
            growth_kib < 16 * 1024,
            "{sub}: {base} KiB -> {big} KiB for {large_bytes} bytes"
        );
    }
    assert_eq!(
        std::fs::read_to_string(&out).unwrap().lines().count(),
        100_000
    );
}
