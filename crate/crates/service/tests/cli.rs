use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use soundstage_core::vecmath::{cluster_separation, embfile, mean_pairwise_cosine_distance, Embedding};

fn soundstage(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soundstage"))
        .args(args)
        .env_remove("SOUNDSTAGE_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: Output) -> String {
    assert!(o.status.success(), "exit {:?}\nstderr: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

/// `(id, wav, thumbnail)` per track line.
fn track_lines(out: &str) -> Vec<(String, String, String)> {
    out.lines()
        .filter(|l| !l.starts_with("project\t"))
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            assert_eq!(f.len(), 6, "{l}");
            (f[0].to_string(), f[4].to_string(), f[5].to_string())
        })
        .collect()
}

#[test]
fn usage_errors_exit_two() {
    let o = soundstage(&["--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let o = soundstage(&["generate", "--scene", "1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = soundstage(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("eval-diversity"));
}

#[test]
fn secrets_in_config_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("soundstage.toml");
    std::fs::write(&cfg, "[providers.llm]\nname = \"x\"\nendpoint = \"http://localhost:1\"\napi_key = \"abc\"\n").unwrap();
    let o = soundstage(&["--config", cfg.to_str().unwrap(), "fixtures", "--check"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("_API_KEY"));
}

#[test]
fn generate_refine_and_map_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().to_str().unwrap();
    let out = ok(soundstage(&["--mock", "--data-dir", data, "generate", "--prompt", "piano solo", "--scene", "1"]));
    let project = out.lines().next().unwrap().strip_prefix("project\t").unwrap().to_string();
    let tracks = track_lines(&out);
    assert_eq!(tracks.len(), 4);
    for (_, wav, thumb) in &tracks {
        let bytes = std::fs::read(wav).unwrap();
        assert_eq!(&bytes[..4], b"RIFF");
        let png = std::fs::read(thumb).unwrap();
        assert_eq!(&png[1..4], b"PNG");
    }

    let first = &tracks[0].0;
    let edited = track_lines(&ok(soundstage(&[
        "--mock", "--data-dir", data, "edit", "--track", first, "--request", "make it more upbeat",
    ])));
    assert_eq!(edited.len(), 4);
    let varied = track_lines(&ok(soundstage(&["--mock", "--data-dir", data, "vary", "--track", first])));
    assert_eq!(varied.len(), 4);
    let pair = format!("{},{}", tracks[0].0, tracks[1].0);
    let blended = track_lines(&ok(soundstage(&["--mock", "--data-dir", data, "blend", "--tracks", &pair])));
    assert_eq!(blended.len(), 4);

    let map_file = dir.path().join("map.json");
    ok(soundstage(&["--mock", "--data-dir", data, "map", "--project", &project, "--out", map_file.to_str().unwrap()]));
    let map: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&map_file).unwrap()).unwrap();
    assert_eq!(map["points"].as_array().unwrap().len(), 16);
    let printed: serde_json::Value =
        serde_json::from_str(&ok(soundstage(&["--mock", "--data-dir", data, "map", "--project", &project]))).unwrap();
    assert_eq!(printed, map);

    let o = soundstage(&["--mock", "--data-dir", data, "vary", "--track", "trk_missing"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not_found"));
    let o = soundstage(&["--mock", "--data-dir", data, "blend", "--tracks", first]);
    assert_eq!(o.status.code(), Some(2));
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Embedding<f32>> {
    let center: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let spread: f64 = rng.random_range(0.2..2.0);
    (0..n)
        .map(|_| {
            let v: Vec<f32> = center.iter().map(|c| (c + spread * rng.sample::<f64, _>(StandardNormal)) as f32).collect();
            Embedding::new(v).unwrap()
        })
        .collect()
}

fn write_groups(root: &Path) -> Vec<(String, Vec<Vec<Embedding<f32>>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut groups = Vec::new();
    for (g, sets) in [("baseline", 3), ("expanded", 4)] {
        let dir = root.join(g);
        std::fs::create_dir_all(&dir).unwrap();
        let mut all = Vec::new();
        for i in 0..sets {
            let set = random_set(&mut rng, 4 + i, 32);
            if i % 2 == 0 {
                embfile::write(dir.join(format!("set{i}.emb")), &set).unwrap();
            } else {
                let rows: Vec<Vec<f32>> = set.iter().map(|e| e.values().to_vec()).collect();
                std::fs::write(dir.join(format!("set{i}.json")), serde_json::to_string(&rows).unwrap()).unwrap();
            }
            all.push(set);
        }
        groups.push((g.to_string(), all));
    }
    groups
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt())
}

#[test]
fn eval_diversity_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let groups = write_groups(dir.path());
    let emb = dir.path().to_str().unwrap();
    let json: serde_json::Value = serde_json::from_str(&ok(soundstage(&[
        "--mock", "eval-diversity", "--embeddings", emb, "--groups", "baseline,expanded", "--seed", "3", "--json",
    ])))
    .unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for ((name, sets), row) in groups.iter().zip(rows) {
        assert_eq!(row["group"], name.as_str());
        let pcd: Vec<f64> = sets.iter().map(|s| mean_pairwise_cosine_distance(s).unwrap()).collect();
        let cs: Vec<f64> = sets.iter().map(|s| cluster_separation(s, 3).unwrap()).collect();
        let (pm, ps) = mean_sd(&pcd);
        let (cm, csd) = mean_sd(&cs);
        let close = |key: &str, field: &str, want: f64| {
            let got = row[key][field].as_f64().unwrap();
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{name} {key}.{field}: {got} vs {want}");
        };
        close("pairwise_cosine_distance", "mean", pm);
        close("pairwise_cosine_distance", "sd", ps);
        close("cluster_separation", "mean", cm);
        close("cluster_separation", "sd", csd);
    }

    let table = ok(soundstage(&["--mock", "eval-diversity", "--embeddings", emb, "--groups", "expanded"]));
    assert!(table.lines().nth(1).unwrap().starts_with("expanded"));

    let o = soundstage(&["--mock", "eval-diversity", "--embeddings", emb, "--groups", "missing"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_goldens_are_current() {
    let goldens = Path::new(env!("CARGO_MANIFEST_DIR")).join("../providers/fixtures/v1");
    ok(soundstage(&["fixtures", "--check", "--out", goldens.to_str().unwrap()]));

    let dir = tempfile::tempdir().unwrap();
    let fresh = dir.path().join("v1");
    let written = ok(soundstage(&["fixtures", "--out", fresh.to_str().unwrap()]));
    assert!(written.lines().count() > 1);
    ok(soundstage(&["fixtures", "--check", "--out", fresh.to_str().unwrap()]));
    let victim = written.lines().next().unwrap();
    std::fs::write(victim, "tampered").unwrap();
    let o = soundstage(&["fixtures", "--check", "--out", fresh.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
