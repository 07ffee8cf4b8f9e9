use std::fs;
use std::path::{Path, PathBuf};

use echo_core::empirical::{calibrated_params, hashtag_vectors, load_labeled_network, validation_run, ValidationConfig};
use echo_core::io::{load_edge_list, parse_edge_list, write_edge_list};
use echo_core::{Error, ParamsOverrides};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/two_cluster").join(name)
}

#[test]
fn fixture_loads_as_two_labelled_communities() {
    let net = load_labeled_network(fixture("edges.txt"), fixture("labels.txt")).unwrap();
    assert_eq!((net.full_nodes, net.full_edges), (300, 922));
    assert_eq!((net.graph.node_count(), net.graph.edge_count()), (288, 884));
    assert_eq!(net.label_names, vec!["left", "right"]);
    let s = net.segregation().unwrap();
    assert!((s - 0.955).abs() < 5e-4, "{s}");

    let tags = hashtag_vectors(fixture("hashtags.txt"), 20).unwrap();
    assert_eq!(tags.hashtags.len(), 20);
    let cov = tags.coverage_of(&net.names);
    assert!((0.85..0.95).contains(&cov), "{cov}");
}

#[test]
fn validation_report_directory() {
    let net = load_labeled_network(fixture("edges.txt"), fixture("labels.txt")).unwrap();
    let tags = hashtag_vectors(fixture("hashtags.txt"), 20).unwrap();
    let o = ParamsOverrides::load(fixture("params.toml")).unwrap();
    let p = calibrated_params(net.graph.node_count(), &o).unwrap();
    assert_eq!(p.n, 288);
    assert_eq!(p.e, 1653);
    let report = validation_run(&p, &net, Some(&tags), &ValidationConfig::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    report.write_dir(dir.path()).unwrap();
    for f in ["series.csv", "do_hist.csv", "dt_hist.csv", "meta.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let series = fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert_eq!(series.lines().count(), report.snapshots.len() + 1);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["do_peaks"], 2);
    assert_eq!(meta["stop_epoch"], serde_json::json!(report.stop_epoch));
}

#[test]
fn edge_list_round_trip() {
    let loaded = load_edge_list(fixture("edges.txt")).unwrap();
    let mut out = Vec::new();
    write_edge_list(&mut out, &loaded.graph, Some(loaded.index.names())).unwrap();
    let again = parse_edge_list(std::str::from_utf8(&out).unwrap(), Path::new("mem")).unwrap();
    assert_eq!(again.graph.edge_count(), loaded.graph.edge_count());
    for (u, v) in loaded.graph.edges() {
        let (a, b) = (loaded.index.name(u), loaded.index.name(v));
        let (a2, b2) = (again.index.get(a).unwrap(), again.index.get(b).unwrap());
        assert!(again.graph.has_edge(a2, b2));
    }
}

#[test]
fn missing_files_are_io_errors() {
    match load_labeled_network(fixture("nope.txt"), fixture("labels.txt")) {
        Err(Error::Io { path, .. }) => assert!(path.ends_with("nope.txt")),
        other => panic!("{other:?}"),
    }
}
