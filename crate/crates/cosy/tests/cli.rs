//! End-to-end tests of the `cosy` binary: exit codes, cache behavior, the
//! full generate/collect/score loop, report rendering, and the HTTP backend
//! against a local canned server.

use std::io::{Read, Write as IoWrite};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::SystemTime;

use base64::Engine;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cosy"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary should spawn")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process should exit normally")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Writes a standard mock-backend config and returns its path.
fn write_config(dir: &Path, control: &Path, out: &Path) -> PathBuf {
    write_config_with_backend(dir, control, out, "{\"type\":\"mock\"}")
}

fn write_config_with_backend(
    dir: &Path,
    control: &Path,
    out: &Path,
    backend_json: &str,
) -> PathBuf {
    let json = format!(
        concat!(
            "{{\"control_dataset_path\":{},",
            "\"generator_backend\":{},",
            "\"prompt_template\":3,",
            "\"images_per_concept\":6,",
            "\"global_seed\":11,",
            "\"tie_policy\":\"strict\",",
            "\"model_id\":\"toy-color\",",
            "\"layer_id\":\"color\",",
            "\"output_dir\":{}}}"
        ),
        serde_json::to_string(control).unwrap(),
        backend_json,
        serde_json::to_string(out).unwrap(),
    );
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path
}

fn write_control(dir: &Path, concepts: &[&str]) -> PathBuf {
    let path = dir.join("control.txt");
    std::fs::write(&path, concepts.join("\n")).unwrap();
    path
}

fn png_files(root: &Path) -> Vec<PathBuf> {
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let Ok(entries) = std::fs::read_dir(&dir) else { continue };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "png") {
                found.push(path);
            }
        }
    }
    found.sort();
    found
}

// ===== Exit codes =====

#[test]
fn help_and_version_exit_zero() {
    let help = run(bin().arg("--help"));
    assert_eq!(code(&help), 0, "stderr: {}", stderr(&help));
    let text = stdout(&help);
    for subcommand in ["generate", "collect", "score", "benchmark", "metaeval", "explain", "report"]
    {
        assert!(text.contains(subcommand), "--help does not mention {subcommand}");
    }

    let version = run(bin().arg("--version"));
    assert_eq!(code(&version), 0);
    assert!(stdout(&version).contains("cosy"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let output = run(bin().args(["score", "--nope"]));
    assert_eq!(code(&output), 1);
    assert!(!stderr(&output).is_empty());
}

#[test]
fn missing_config_is_a_validation_error() {
    let output = run(bin().arg("collect"));
    assert_eq!(code(&output), 1);
    assert!(stderr(&output).contains("--config"), "stderr: {}", stderr(&output));
}

#[test]
fn unknown_metaeval_suite_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let control = write_control(dir.path(), &["lagoon", "forest"]);
    let config = write_config(dir.path(), &control, &dir.path().join("out"));
    let output = run(bin().args(["metaeval", "--suite", "bogus", "--config"]).arg(&config));
    assert_eq!(code(&output), 1);
    assert!(stderr(&output).contains("similarity"), "stderr: {}", stderr(&output));
}

#[test]
fn missing_control_file_is_a_runtime_fault() {
    let dir = TempDir::new().unwrap();
    let config = write_config(
        dir.path(),
        &dir.path().join("no_such_control.txt"),
        &dir.path().join("out"),
    );
    let output = run(bin().args(["generate", "--config"]).arg(&config));
    assert_eq!(code(&output), 2, "stderr: {}", stderr(&output));
}

// ===== Cache behavior =====

#[test]
fn generate_honors_cache_env_and_a_warm_rerun_rewrites_nothing() {
    let dir = TempDir::new().unwrap();
    let control = write_control(dir.path(), &["lagoon", "forest"]);
    let out = dir.path().join("out");
    let config = write_config(dir.path(), &control, &out);
    let custom_cache = dir.path().join("elsewhere");

    let first = run(bin()
        .args(["generate", "--config"])
        .arg(&config)
        .env("COSY_CACHE", &custom_cache));
    assert_eq!(code(&first), 0, "stderr: {}", stderr(&first));
    assert!(stdout(&first).contains("2 concepts"), "stdout: {}", stdout(&first));

    let cached = png_files(&custom_cache);
    assert_eq!(cached.len(), 12, "2 concepts x 6 images should land in COSY_CACHE");
    assert!(
        !out.join("cache").exists(),
        "default cache root must stay untouched when COSY_CACHE is set"
    );

    let stamps: Vec<SystemTime> =
        cached.iter().map(|p| p.metadata().unwrap().modified().unwrap()).collect();
    let second = run(bin()
        .args(["generate", "--config"])
        .arg(&config)
        .env("COSY_CACHE", &custom_cache));
    assert_eq!(code(&second), 0);
    let after = png_files(&custom_cache);
    assert_eq!(after, cached, "warm rerun changed the cached file set");
    for (path, stamp) in after.iter().zip(&stamps) {
        assert_eq!(
            &path.metadata().unwrap().modified().unwrap(),
            stamp,
            "{path:?} was rewritten on a warm rerun"
        );
    }
}

// ===== Generate / collect / score loop =====

#[test]
fn score_loop_produces_deterministic_reports_in_all_formats() {
    let dir = TempDir::new().unwrap();
    let control = write_control(dir.path(), &["lagoon", "forest"]);
    let out = dir.path().join("out");
    let config = write_config(dir.path(), &control, &out);
    let explanations = dir.path().join("explanations.csv");
    std::fs::write(&explanations, "method,layer,neuron,explanation\nmanual,color,0,rope\n")
        .unwrap();

    let generate = run(bin().args(["generate", "--config"]).arg(&config));
    assert_eq!(code(&generate), 0, "stderr: {}", stderr(&generate));

    let collect = run(bin().args(["collect", "--config"]).arg(&config));
    assert_eq!(code(&collect), 0, "stderr: {}", stderr(&collect));
    assert!(
        stdout(&collect).contains("collected 12 control rows x 4 neurons"),
        "stdout: {}",
        stdout(&collect)
    );

    let score = run(bin()
        .args(["score", "--config"])
        .arg(&config)
        .args(["--explanations"])
        .arg(&explanations));
    assert_eq!(code(&score), 0, "stderr: {}", stderr(&score));
    let report_path = out.join("report.json");
    assert!(report_path.exists());

    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert_eq!(doc["kind"], "score");
    let auc = doc["scores"][0]["result"]["auc"].as_f64().unwrap();
    assert!(auc >= 0.95, "distinct concept should separate cleanly, got AUC {auc}");
    assert_eq!(doc["scores"][0]["result"]["n"].as_u64(), Some(12));
    assert_eq!(doc["scores"][0]["result"]["m"].as_u64(), Some(6));

    // A rerun into a different directory must reproduce the bytes exactly.
    let rerun_dir = dir.path().join("rerun");
    let rerun = run(bin()
        .args(["score", "--config"])
        .arg(&config)
        .args(["--explanations"])
        .arg(&explanations)
        .args(["--out"])
        .arg(&rerun_dir));
    assert_eq!(code(&rerun), 0, "stderr: {}", stderr(&rerun));
    assert_eq!(
        std::fs::read(&report_path).unwrap(),
        std::fs::read(rerun_dir.join("report.json")).unwrap(),
        "score reruns diverged"
    );

    // Re-render the stored document in the other formats.
    let md_dir = dir.path().join("render_md");
    let md = run(bin()
        .args(["report", "--config"])
        .arg(&config)
        .args(["--document"])
        .arg(&report_path)
        .args(["--format", "md", "--out"])
        .arg(&md_dir));
    assert_eq!(code(&md), 0, "stderr: {}", stderr(&md));
    assert!(md_dir.join("report.md").exists());

    let csv_dir = dir.path().join("render_csv");
    let csv = run(bin()
        .args(["report", "--config"])
        .arg(&config)
        .args(["--document"])
        .arg(&report_path)
        .args(["--format", "csv", "--out"])
        .arg(&csv_dir));
    assert_eq!(code(&csv), 0, "stderr: {}", stderr(&csv));
    assert!(csv_dir.join("report.csv").exists());
    assert!(csv_dir.join("distribution_neuron_0.csv").exists());
}

#[test]
fn explain_invert_writes_an_explanations_csv() {
    let dir = TempDir::new().unwrap();
    let control = write_control(dir.path(), &["lagoon", "forest"]);
    let out = dir.path().join("out");
    let config = write_config(dir.path(), &control, &out);

    let collect = run(bin().args(["collect", "--config"]).arg(&config));
    assert_eq!(code(&collect), 0, "stderr: {}", stderr(&collect));
    let collect_out = stdout(&collect);
    let store_dir = collect_out.trim().rsplit_once(" into ").expect("collect prints the store path").1;

    // Control rows are ordered by concept: 6 lagoon rows then 6 forest rows.
    let labels = dir.path().join("labels.csv");
    let mut csv = String::from("image_ref,is_lagoon\n");
    for i in 0..12 {
        csv.push_str(&format!("img{i},{}\n", if i < 6 { 1 } else { 0 }));
    }
    std::fs::write(&labels, csv).unwrap();

    let explain = run(bin()
        .args(["explain", "--method", "invert", "--config"])
        .arg(&config)
        .args(["--source", store_dir, "--dataset"])
        .arg(&labels));
    assert_eq!(code(&explain), 0, "stderr: {}", stderr(&explain));

    let out_csv = out.join("explanations_invert.csv");
    assert!(out_csv.exists(), "default output path not written");
    let content = std::fs::read_to_string(&out_csv).unwrap();
    let lines: Vec<&str> = content.lines().collect();
    assert_eq!(lines[0], "method,layer,neuron,explanation");
    assert_eq!(lines.len(), 5, "expected one row per neuron:\n{content}");
    for (i, line) in lines[1..].iter().enumerate() {
        assert!(line.starts_with(&format!("invert,color,{i},")), "row {i}: {line}");
        assert!(line.contains("is_lagoon"), "row {i} found no usable formula: {line}");
    }
}

// ===== HTTP backend =====

/// Minimal single-threaded HTTP server answering every POST with a JSON array
/// of base64 PNGs produced by the deterministic mock generator.
fn spawn_canned_server() -> u16 {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            let header_end = loop {
                match stream.read(&mut chunk) {
                    Ok(0) => break None,
                    Ok(n) => {
                        buf.extend_from_slice(&chunk[..n]);
                        if let Some(pos) =
                            buf.windows(4).position(|w| w == b"\r\n\r\n")
                        {
                            break Some(pos + 4);
                        }
                    }
                    Err(_) => break None,
                }
            };
            let Some(body_start) = header_end else { continue };
            let headers = String::from_utf8_lossy(&buf[..body_start]).to_ascii_lowercase();
            let content_length: usize = headers
                .lines()
                .find_map(|l| l.strip_prefix("content-length:"))
                .and_then(|v| v.trim().parse().ok())
                .unwrap_or(0);
            while buf.len() < body_start + content_length {
                match stream.read(&mut chunk) {
                    Ok(0) => break,
                    Ok(n) => buf.extend_from_slice(&chunk[..n]),
                    Err(_) => break,
                }
            }
            let request: serde_json::Value =
                serde_json::from_slice(&buf[body_start..]).unwrap_or_default();
            let prompt = request["prompt"].as_str().unwrap_or("").to_string();
            let seed = request["seed"].as_u64().unwrap_or(0);
            let count = request["count"].as_u64().unwrap_or(0) as u32;

            let encoded: Vec<String> = (0..count)
                .map(|i| {
                    let img = cosy::imagegen::mock_generate(&prompt, seed, i);
                    let mut bytes = Vec::new();
                    image::DynamicImage::ImageRgb8(img)
                        .write_to(
                            &mut std::io::Cursor::new(&mut bytes),
                            image::ImageFormat::Png,
                        )
                        .unwrap();
                    base64::engine::general_purpose::STANDARD.encode(bytes)
                })
                .collect();
            let body = serde_json::to_string(&encoded).unwrap();
            let response = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    port
}

#[test]
fn http_backend_collects_through_a_local_server() {
    let port = spawn_canned_server();
    let dir = TempDir::new().unwrap();
    let control = write_control(dir.path(), &["lagoon", "forest"]);
    let out = dir.path().join("out");
    let backend = format!(
        "{{\"type\":\"http\",\"endpoint\":\"http://127.0.0.1:{port}/generate\",\"timeout_secs\":10,\"retries\":1}}"
    );
    let config = write_config_with_backend(dir.path(), &control, &out, &backend);

    let collect = run(bin().args(["collect", "--config"]).arg(&config));
    assert_eq!(code(&collect), 0, "stderr: {}", stderr(&collect));
    assert!(
        stdout(&collect).contains("collected 12 control rows x 4 neurons"),
        "stdout: {}",
        stdout(&collect)
    );

    // The fetched images pass through the same cache as local backends.
    assert_eq!(png_files(&out.join("cache")).len(), 12);
}
