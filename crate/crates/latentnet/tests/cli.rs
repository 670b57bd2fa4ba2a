//! End-to-end checks of the command-line interface and artifact round-trips.

use latentnet::family::EdgeFamily;
use latentnet::inference::{edge_mean_se, entry_se, InferenceReport, Target};
use latentnet::io::{load_network, write_reports_csv, FitArtifact};
use latentnet::pgd::{fit, PgdConfig};
use latentnet::simulation::{gen_truth, sample_network, TruthSpec};
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latentnet"))
}

#[test]
fn simulate_fit_infer_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let st = bin()
        .args(["simulate", "--n", "30", "--family", "poisson", "--seed", "5"])
        .args(["--out", out])
        .status()
        .unwrap();
    assert!(st.success());
    assert!(dir.path().join("network.csv").exists());
    assert!(dir.path().join("truth.json").exists());

    let net_path = dir.path().join("network.csv");
    let st = bin()
        .args(["fit", net_path.to_str().unwrap(), "--family", "poisson"])
        .args(["--out", out])
        .status()
        .unwrap();
    assert!(st.success());
    assert!(dir.path().join("fit.json").exists());
    assert!(dir.path().join("trace.csv").exists());

    let fit_path = dir.path().join("fit.json");
    let art = FitArtifact::load(&fit_path).unwrap();
    let label = art.labels[0].clone();
    let pair = format!("{},{}", art.labels[0], art.labels[1]);
    let outp = bin()
        .args(["infer", fit_path.to_str().unwrap()])
        .args(["--node", &label, "--pair", &pair])
        .args(["--out", out])
        .output()
        .unwrap();
    assert!(outp.status.success());
    let csv = dir.path().join("inference.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    // node gives k+1 rows, the pair one more, plus a header
    assert_eq!(text.lines().count(), art.k + 3);
}

#[test]
fn compare_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    bin()
        .args(["simulate", "--n", "25", "--family", "gaussian", "--seed", "3"])
        .args(["--out", out])
        .status()
        .unwrap();
    let net = dir.path().join("network.csv");
    for sub in ["a", "b"] {
        let subdir = dir.path().join(sub);
        bin()
            .args(["fit", net.to_str().unwrap(), "--family", "gaussian"])
            .args(["--out", subdir.to_str().unwrap()])
            .status()
            .unwrap();
    }
    let st = bin()
        .args([
            "compare",
            dir.path().join("a/fit.json").to_str().unwrap(),
            dir.path().join("b/fit.json").to_str().unwrap(),
        ])
        .args(["--out", out])
        .status()
        .unwrap();
    assert!(st.success());
    assert!(dir.path().join("pairs.csv").exists());
    assert!(dir.path().join("node_rates.csv").exists());
}

#[test]
fn exit_codes() {
    // usage error
    let st = bin().args(["frobnicate"]).status().unwrap();
    assert_eq!(st.code(), Some(1));

    // data error: Bernoulli weight outside {0, 1}
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b,7\n").unwrap();
    let st = bin()
        .args(["fit", bad.to_str().unwrap(), "--family", "bernoulli"])
        .args(["--out", dir.path().to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));

    // --help is not an error
    let st = bin().args(["--help"]).status().unwrap();
    assert_eq!(st.code(), Some(0));
}

fn reports_for(
    art_state: &latentnet::LatentState64,
    net: &latentnet::Network64,
    family: EdgeFamily,
) -> Vec<InferenceReport<f64>> {
    let mut reports = Vec::new();
    for c in 0..=art_state.k() {
        let est = if c < art_state.k() {
            art_state.z[(0, c)]
        } else {
            art_state.alpha[0]
        };
        let se = entry_se(art_state, net, family, 0, c).unwrap();
        reports.push(InferenceReport::from_estimate(
            Target::Entry {
                node: net.labels()[0].clone(),
                coord: c,
            },
            est,
            se,
            0.0,
            0.95,
        ));
    }
    let se = edge_mean_se(art_state, net, family, 0, 1).unwrap();
    reports.push(InferenceReport::from_estimate(
        Target::EdgeMean {
            i: net.labels()[0].clone(),
            j: net.labels()[1].clone(),
        },
        0.0,
        se,
        0.0,
        0.95,
    ));
    reports
}

fn csv_bytes(reports: &[InferenceReport<f64>]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_reports_csv(reports, &mut buf).unwrap();
    buf
}

#[test]
fn artifact_roundtrip_preserves_inference_bitwise() {
    let spec = TruthSpec {
        n: 40,
        k: 2,
        family: EdgeFamily::Poisson,
        seed: 17,
    };
    let truth = gen_truth(&spec).unwrap();
    let net = sample_network(&truth, spec.family, 17);
    let cfg = PgdConfig {
        max_iters: 20_000,
        ..PgdConfig::default()
    };
    let res = fit(&net, spec.family, &truth, &cfg).unwrap();
    assert!(res.converged);

    let dir = tempfile::tempdir().unwrap();
    let net_path = dir.path().join("net.csv");
    latentnet::io::save_edge_list(&net, &net_path).unwrap();
    let art = FitArtifact::from_fit(
        &net,
        spec.family,
        &res,
        &PgdConfig::default(),
        None,
        None,
        Some(net_path.display().to_string()),
    );
    let art_path = dir.path().join("fit.json");
    art.save(&art_path).unwrap();

    let direct = csv_bytes(&reports_for(&res.state, &net, spec.family));

    let loaded = FitArtifact::load(&art_path).unwrap();
    let net2 = load_network(Path::new(loaded.network_path.as_deref().unwrap()), loaded.family)
        .unwrap();
    let reloaded = csv_bytes(&reports_for(&loaded.state(), &net2, loaded.family));

    assert_eq!(direct, reloaded);
}
