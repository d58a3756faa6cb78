mod common;

use std::path::Path;

use common::{dvlae, dvlae_ok, s, write_config};
use dvlae_core::embedding::read_embedding_csv;
use dvlae_core::fingerprint::parse_fingerprints;
use dvlae_core::structures::Structure;
use dvlae_core::vectors::{write_vectors, VectorRecord};
use dvlae_testkit as tk;

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn error_json(out: &std::process::Output) -> serde_json::Value {
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    assert_eq!(stderr.trim_end().lines().count(), 1, "stderr: {stderr}");
    serde_json::from_str(stderr.trim()).unwrap()
}

fn write_vector_csv(path: &Path, records: &[VectorRecord]) {
    let mut buf = Vec::new();
    write_vectors(&mut buf, records).unwrap();
    std::fs::write(path, buf).unwrap();
}

fn cluster_vectors(path: &Path) {
    let records: Vec<VectorRecord> = tk::gaussian_clusters(5, 3, 20, 10, 12.0)
        .into_iter()
        .enumerate()
        .map(|(i, (values, label))| VectorRecord {
            id: format!("p{i}"),
            tag: Some(format!("cluster{label}")),
            values,
        })
        .collect();
    write_vector_csv(path, &records);
}

#[test]
fn fingerprint_writes_equal_length_records_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let m = tk::write_corpus(dir.path(), "ten", &tk::random_structures(1, 10));
    let cfg = write_config(dir.path(), &[&m], "");
    let stdout = dvlae_ok(&["fingerprint", "--config", s(&cfg), "--vectors"]);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.contains("10 structures") && stdout.contains("5800 bits"), "{stdout}");

    let out = dir.path().join("out");
    let first = read(&out.join("fingerprints.dvfp"));
    let file = parse_fingerprints(&first).unwrap();
    assert_eq!(file.records.len(), 10);
    assert!(file.records.iter().all(|r| r.len() == 5800));
    for name in ["spec.dvspec", "mean_descriptors.csv", "baseline.csv"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    let spec_before = read(&out.join("spec.dvspec"));

    dvlae_ok(&["fingerprint", "--config", s(&cfg), "--vectors"]);
    assert_eq!(read(&out.join("fingerprints.dvfp")), first);
    assert_eq!(read(&out.join("spec.dvspec")), spec_before);
    // only the committed files remain, no stray temp files
    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["baseline.csv", "fingerprints.dvfp", "mean_descriptors.csv", "spec.dvspec"]);
}

#[test]
fn missing_inputs_exit_1_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "format = 1\n[data]\nmanifests = [\"absent.txt\"]\n").unwrap();
    let out = dvlae(&["fingerprint", "--config", s(&dir.path().join("run.toml"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = error_json(&out);
    assert!(err["error"].as_str().unwrap().contains("absent.txt"));
    assert_eq!(err["exit_code"], 1);
    assert!(!dir.path().join("out").exists());

    // manifest exists but names a missing structure file
    std::fs::write(dir.path().join("absent.txt"), "nowhere.xyz\n").unwrap();
    let out = dvlae(&["fingerprint", "--config", s(&dir.path().join("run.toml"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_json(&out)["error"].as_str().unwrap().contains("nowhere.xyz"));
    assert!(!dir.path().join("out").join("fingerprints.dvfp").exists());

    let out = dvlae(&["fingerprint", "--config", s(&dir.path().join("nope.toml"))]);
    assert_eq!(out.status.code(), Some(1));

    let out = dvlae(&["fingerprint", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    error_json(&out);
}

#[test]
fn bad_config_values_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let m = tk::write_corpus(dir.path(), "c", &tk::random_structures(2, 3));
    for extra in ["[fingerprint]\nbins = 0", "[fingerprint]\nreference = \"id:nobody\"", "unknown = 3"] {
        let cfg = write_config(dir.path(), &[&m], extra);
        let out = dvlae(&["fingerprint", "--config", s(&cfg)]);
        assert_eq!(out.status.code(), Some(1), "{extra}");
        error_json(&out);
    }
    let cfg = write_config(dir.path(), &[&m], "format = 7");
    assert_eq!(dvlae(&["fingerprint", "--config", s(&cfg)]).status.code(), Some(1));
}

fn duplicate_groups(groups: usize, size: usize) -> Vec<Structure> {
    let mut out = Vec::new();
    for (g, base) in tk::random_structures(11, groups).into_iter().enumerate() {
        for c in 0..size {
            out.push(tk::renamed(&base, format!("g{g}c{c}")).with_tag(Some(format!("group{g}"))));
        }
    }
    out
}

#[test]
fn screen_removes_exact_duplicate_groups() {
    let dir = tempfile::tempdir().unwrap();
    let m = tk::write_corpus(dir.path(), "dups", &duplicate_groups(5, 4));
    let cfg = write_config(dir.path(), &[&m], "");
    dvlae_ok(&["fingerprint", "--config", s(&cfg)]);
    let stdout = dvlae_ok(&["screen", "--config", s(&cfg)]);
    assert!(stdout.contains("kept 5"), "{stdout}");

    let out = dir.path().join("out");
    let report: serde_json::Value = serde_json::from_str(&read(&out.join("screening_report.json"))).unwrap();
    assert_eq!(report["input_count"], 20);
    assert_eq!(report["output_count"], 5);
    assert_eq!(report["reduction_ratio"], 0.75);
    let kept = read(&out.join("kept_ids.txt"));
    assert_eq!(kept.lines().count(), 5);
    // the first member of every group survives
    assert!(kept.lines().all(|id| id.starts_with("dups.xyz#")));

    // re-applying the kept list keeps everything
    let kept_copy = dir.path().join("kept_before.txt");
    std::fs::write(&kept_copy, &kept).unwrap();
    dvlae_ok(&["screen", "--config", s(&cfg), "--keep", s(&kept_copy)]);
    assert_eq!(read(&out.join("kept_ids.txt")), kept);
    let again: serde_json::Value = serde_json::from_str(&read(&out.join("screening_report.json"))).unwrap();
    assert_eq!(again["reduction_ratio"], 0.0);

    // the kept list also filters the dataset when fingerprinting
    dvlae_ok(&["fingerprint", "--config", s(&cfg), "--keep", s(&kept_copy), "--out", s(&dir.path().join("sub"))]);
    let sub = parse_fingerprints(&read(&dir.path().join("sub/fingerprints.dvfp"))).unwrap();
    assert_eq!(sub.records.len(), 5);
}

#[test]
fn screen_without_duplicates_and_hamming_mode() {
    let dir = tempfile::tempdir().unwrap();
    let m = tk::write_corpus(dir.path(), "uniq", &tk::random_structures(12, 6));
    let cfg = write_config(dir.path(), &[&m], "[screening]\nmode = \"hamming\"\nradius = 0\n");
    dvlae_ok(&["fingerprint", "--config", s(&cfg)]);
    dvlae_ok(&["screen", "--config", s(&cfg)]);
    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("out/screening_report.json"))).unwrap();
    assert_eq!(report["reduction_ratio"], 0.0);
    assert_eq!(report["mode"], "hamming:0");

    // a huge radius collapses everything onto the first structure
    dvlae_ok(&["screen", "--config", s(&cfg), "--radius", "100000"]);
    assert_eq!(read(&dir.path().join("out/kept_ids.txt")), "uniq.xyz#0\n");
}

#[test]
fn screen_rejects_spec_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let m = tk::write_corpus(dir.path(), "c", &tk::random_structures(3, 4));
    let cfg = write_config(dir.path(), &[&m], "");
    dvlae_ok(&["fingerprint", "--config", s(&cfg)]);
    for extra in [
        "[fingerprint]\nbins = 40",
        "[fingerprint]\ncomparison = \"count-equality\"",
        "[descriptors]\ncutoff = 5.0",
    ] {
        let other = dir.path().join("other.toml");
        std::fs::write(&other, format!("format = 1\n{extra}\n")).unwrap();
        let out = dvlae(&[
            "screen",
            "--config",
            s(&other),
            "--input",
            s(&dir.path().join("out/fingerprints.dvfp")),
        ]);
        assert_eq!(out.status.code(), Some(1), "{extra}");
        assert!(error_json(&out)["error"].as_str().unwrap().contains("spec mismatch"));
    }
}

#[test]
fn novelty_screen_over_mean_descriptors() {
    let dir = tempfile::tempdir().unwrap();
    let structures = tk::random_structures(4, 8);
    let mt = tk::write_corpus(dir.path(), "train", &structures[..5]);
    let mc = tk::write_corpus(dir.path(), "cand", &structures[3..]);
    let cfg = write_config(dir.path(), &[&mt], "[screening]\nmode = \"novelty\"\nthreshold = 0.0\naggregate = \"min\"\n");
    let train_out = dir.path().join("t");
    let cand_out = dir.path().join("c");
    dvlae_ok(&["fingerprint", "--config", s(&cfg), "--vectors", "--out", s(&train_out)]);
    dvlae_ok(&["fingerprint", "--config", s(&cfg), "--vectors", "--manifest", s(&mc), "--out", s(&cand_out)]);

    let out = dvlae(&["screen", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_json(&out)["error"].as_str().unwrap().contains("--candidates"));

    dvlae_ok(&[
        "screen",
        "--config",
        s(&cfg),
        "--candidates",
        s(&cand_out.join("mean_descriptors.csv")),
        "--training",
        s(&train_out.join("mean_descriptors.csv")),
    ]);
    // candidates 3 and 4 are in training, 5..7 are new
    let accepted = read(&dir.path().join("out/accepted_ids.txt"));
    assert_eq!(accepted, "cand.xyz#2\ncand.xyz#3\ncand.xyz#4\n");
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("out/novelty_report.json"))).unwrap();
    assert_eq!(report["outcomes"].as_array().unwrap().len(), 5);
}

#[test]
fn embed_vectors_tsne_and_pca() {
    let dir = tempfile::tempdir().unwrap();
    let vectors = dir.path().join("clusters.csv");
    cluster_vectors(&vectors);
    let cfg = write_config(dir.path(), &[], "[embedding]\nperplexity = 15.0\niterations = 500\n");
    let out = dir.path().join("out");

    dvlae_ok(&["embed", "--config", s(&cfg), "--input", s(&vectors), "--seed", "3"]);
    let first = std::fs::read(out.join("embedding.csv")).unwrap();
    let e = read_embedding_csv(first.as_slice()).unwrap();
    assert_eq!(e.len(), 60);
    assert!(e.points.iter().all(|p| p.x.is_finite() && p.y.is_finite()));

    dvlae_ok(&["embed", "--config", s(&cfg), "--input", s(&vectors), "--seed", "3"]);
    assert_eq!(std::fs::read(out.join("embedding.csv")).unwrap(), first);
    dvlae_ok(&["embed", "--config", s(&cfg), "--input", s(&vectors), "--seed", "4"]);
    assert_ne!(std::fs::read(out.join("embedding.csv")).unwrap(), first);

    let bad = dvlae(&["embed", "--config", s(&cfg), "--input", s(&vectors), "--perplexity", "30"]);
    assert_eq!(bad.status.code(), Some(1));
    let msg = error_json(&bad)["error"].as_str().unwrap().to_owned();
    assert!(msg.contains("(n - 1)/3"), "{msg}");

    // rank-1 data through PCA
    let line: Vec<VectorRecord> = (0..8)
        .map(|t| VectorRecord {
            id: format!("l{t}"),
            tag: None,
            values: (0..6).map(|k| 1.0 + (k as f64 + 1.0) * t as f64 * 0.3).collect(),
        })
        .collect();
    let line_csv = dir.path().join("line.csv");
    write_vector_csv(&line_csv, &line);
    dvlae_ok(&["embed", "--config", s(&cfg), "--input", s(&line_csv), "--method", "pca"]);
    let e = read_embedding_csv(std::fs::File::open(out.join("embedding.csv")).unwrap()).unwrap();
    assert_eq!(e.len(), 8);
    assert!(e.points.iter().all(|p| p.y.abs() < 1e-9));
}

#[test]
fn embed_fingerprints_with_baseline_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let m = tk::write_corpus(dir.path(), "c", &tk::random_structures(6, 12));
    let cfg = write_config(dir.path(), &[&m], "[embedding]\nperplexity = 3.0\niterations = 300\ncompare_baseline = true\n");
    dvlae_ok(&["fingerprint", "--config", s(&cfg)]);
    // baseline vectors were not written
    let out = dvlae(&["embed", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("out/embedding.csv").exists());

    dvlae_ok(&["fingerprint", "--config", s(&cfg), "--vectors"]);
    let stdout = dvlae_ok(&["embed", "--config", s(&cfg)]);
    assert!(stdout.contains("KL divergence"), "{stdout}");
    for name in ["embedding.csv", "embedding_baseline.csv"] {
        let e = read_embedding_csv(std::fs::File::open(dir.path().join("out").join(name)).unwrap()).unwrap();
        assert_eq!(e.len(), 12, "{name}");
    }
}

#[test]
fn plot_legend_highlights_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let vectors = dir.path().join("clusters.csv");
    cluster_vectors(&vectors);
    let cfg = write_config(dir.path(), &[], "[embedding]\nmethod = \"pca\"\n");
    dvlae_ok(&["embed", "--config", s(&cfg), "--input", s(&vectors)]);
    let svg_path = dir.path().join("out/plot.svg");

    dvlae_ok(&["plot", "--config", s(&cfg)]);
    let svg = read(&svg_path);
    assert!(svg.starts_with("<?xml"));
    assert_eq!(svg.matches(r#"<g class="legend-entry">"#).count(), 3);
    assert_eq!(svg.matches("class=\"highlight\"").count(), 0);

    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    dvlae_ok(&["plot", "--config", s(&cfg), "--highlight", s(&empty)]);
    assert_eq!(read(&svg_path), svg);

    let hl = dir.path().join("hl.txt");
    std::fs::write(&hl, "p3\np40\n").unwrap();
    let custom = dir.path().join("fig/custom.svg");
    dvlae_ok(&["plot", "--config", s(&cfg), "--highlight", s(&hl), "--output", s(&custom)]);
    let with = read(&custom);
    assert_eq!(with.matches(r#"<path class="highlight""#).count(), 2);
    dvlae_ok(&["plot", "--config", s(&cfg), "--highlight", s(&hl), "--output", s(&custom)]);
    assert_eq!(read(&custom), with);

    std::fs::write(&hl, "p3\nghost-17\n").unwrap();
    let out = dvlae(&["plot", "--config", s(&cfg), "--highlight", s(&hl), "--output", s(&dir.path().join("x.svg"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_json(&out)["error"].as_str().unwrap().contains("ghost-17"));
    assert!(!dir.path().join("x.svg").exists());
}

#[test]
fn ood_subset_scores_zero_and_checksums_must_match() {
    let dir = tempfile::tempdir().unwrap();
    let structures = tk::random_structures(8, 10);
    let mt = tk::write_corpus(dir.path(), "train", &structures);
    let mp = tk::write_corpus(dir.path(), "pred", &structures[2..7]);
    let cfg = write_config(dir.path(), &[&mt], "[ood]\ntop_n = 3\n");
    let t = dir.path().join("t");
    let p = dir.path().join("p");
    dvlae_ok(&["fingerprint", "--config", s(&cfg), "--out", s(&t)]);
    dvlae_ok(&[
        "fingerprint",
        "--config",
        s(&cfg),
        "--manifest",
        s(&mp),
        "--spec",
        s(&t.join("spec.dvspec")),
        "--out",
        s(&p),
    ]);
    dvlae_ok(&[
        "ood",
        "--config",
        s(&cfg),
        "--training",
        s(&t.join("fingerprints.dvfp")),
        "--predictions",
        s(&p.join("fingerprints.dvfp")),
    ]);
    let csv = read(&dir.path().join("out/ood_scores.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("id,min_hamming,normalized"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.ends_with(",0,0")), "{csv}");
    assert_eq!(read(&dir.path().join("out/highlight.txt")).lines().count(), 3);

    // predictions fingerprinted with their own bins cannot be compared
    let own = dir.path().join("own");
    dvlae_ok(&["fingerprint", "--config", s(&cfg), "--manifest", s(&mp), "--out", s(&own)]);
    let out = dvlae(&[
        "ood",
        "--config",
        s(&cfg),
        "--training",
        s(&t.join("fingerprints.dvfp")),
        "--predictions",
        s(&own.join("fingerprints.dvfp")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(error_json(&out)["error"].as_str().unwrap().contains("checksum mismatch"));
}

#[test]
fn worker_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let m = tk::write_corpus(dir.path(), "c", &tk::random_structures(9, 5));
    let cfg = write_config(dir.path(), &[&m], "");
    let run = |workers: &str, out: &str| {
        std::process::Command::new(env!("CARGO_BIN_EXE_dvlae"))
            .args(["fingerprint", "--config", s(&cfg), "--out", s(&dir.path().join(out))])
            .env("DVLAE_WORKERS", workers)
            .output()
            .unwrap()
    };
    assert!(run("1", "one").status.success());
    assert!(run("4", "four").status.success());
    assert_eq!(
        read(&dir.path().join("one/fingerprints.dvfp")),
        read(&dir.path().join("four/fingerprints.dvfp"))
    );
    let bad = run("zero", "bad");
    assert_eq!(bad.status.code(), Some(1));
    assert!(error_json(&bad)["error"].as_str().unwrap().contains("DVLAE_WORKERS"));
}
