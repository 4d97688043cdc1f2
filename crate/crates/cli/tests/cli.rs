use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lims::bench::oracle_range;
use lims::{MetricDataset, Payload};

fn lims(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_lims")).args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "lims {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// (query, id, distance) rows of `lims query` output.
fn result_rows(text: &str) -> Vec<(usize, u64, f64)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("query"))
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

#[test]
fn gen_build_stats_query() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("g.lmsd");
    let index = dir.path().join("g.lims");
    lims(&["gen", "--kind", "gaussmix", "--n", "2000", "--d", "4", "--seed", "3", "--out", p(&data)]);
    lims(&["build", "--data", p(&data), "--out", p(&index), "--K", "8", "--m", "2", "--N", "10", "--seed", "1"]);

    let stats = stdout(&lims(&["stats", "--index", p(&index)]));
    assert!(stats.contains("K       8"), "{stats}");
    assert!(stats.contains("N       10"), "{stats}");
    assert!(stats.contains("n       2000"), "{stats}");
    let sizes: usize = stats
        .lines()
        .find_map(|l| l.strip_prefix("clusters "))
        .unwrap()
        .split(' ')
        .map(|s| s.parse::<usize>().unwrap())
        .sum();
    assert_eq!(sizes, 2000);
    let bytes: u64 = stats.lines().find_map(|l| l.strip_prefix("bytes   ")).unwrap().parse().unwrap();
    assert_eq!(bytes, fs::metadata(&index).unwrap().len());

    let ds = MetricDataset::load(&data).unwrap();
    let queries = dir.path().join("q.txt");
    let q0 = ds.records()[17].payload.as_vector().unwrap().to_vec();
    let line = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
    fs::write(&queries, format!("{}\n0.5 0.5 0.5 0.5\n", line(&q0))).unwrap();

    let point = result_rows(&stdout(&lims(&["query", "--index", p(&index), "--mode", "point", "--q-file", p(&queries)])));
    assert_eq!(point, vec![(0, 17, 0.0)]);

    let range = stdout(&lims(&["query", "--index", p(&index), "--mode", "range", "--q-file", p(&queries), "--r", "0.2"]));
    let rows = result_rows(&range);
    for (qi, q) in [Payload::Vector(q0.clone()), Payload::Vector(vec![0.5; 4])].iter().enumerate() {
        let mut want: Vec<u64> = oracle_range(ds.records(), ds.metric(), q, 0.2).iter().map(|h| h.id).collect();
        let mut got: Vec<u64> = rows.iter().filter(|r| r.0 == qi).map(|r| r.1).collect();
        want.sort();
        got.sort();
        assert_eq!(got, want);
    }
    assert!(range.contains("pages_read="));

    for locator in ["lims", "nlims"] {
        let knn = stdout(&lims(&[
            "query", "--index", p(&index), "--mode", "knn", "--q-file", p(&queries), "--k", "5", "--locator", locator,
        ]));
        let rows = result_rows(&knn);
        assert_eq!(rows.iter().filter(|r| r.0 == 0).count(), 5);
        assert_eq!(rows[0], (0, 17, 0.0));
    }
}

#[test]
fn signature_strings_from_text_queries() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("s.lmsd");
    let index = dir.path().join("s.lims");
    lims(&["gen", "--kind", "signature", "--n", "1500", "--seed", "2", "--out", p(&data)]);
    lims(&["build", "--data", p(&data), "--out", p(&index), "--K", "6", "--m", "2", "--N", "8"]);
    let ds = MetricDataset::load(&data).unwrap();
    assert_eq!(ds.len(), 1500);
    let word = String::from_utf8(ds.records()[3].payload.as_text().unwrap().to_vec()).unwrap();
    let queries = dir.path().join("q.txt");
    fs::write(&queries, format!("{word}\n")).unwrap();
    let rows = result_rows(&stdout(&lims(&[
        "query", "--index", p(&index), "--mode", "knn", "--q-file", p(&queries), "--k", "3", "--delta-r", "1",
    ])));
    assert_eq!(rows.len(), 3);
    assert_eq!((rows[0].1, rows[0].2), (3, 0.0));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.txt");
    let csv = dir.path().join("out.csv");
    fs::write(
        &spec,
        "# small run\ndataset = skewed\nn = 1500\nd = 3\nqueries = 10\nrepetitions = 1\n\
         selectivities = 0.01\nks = 5\nK = 6\nm = 2\nN = 8\n",
    )
    .unwrap();
    lims(&["bench", "--spec", p(&spec), "--csv", p(&csv)]);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "dataset,n,d,metric,variant,K,m,N,workload,mean_query_us,mean_pages_read,build_ms,index_bytes"
    );
    let rows: Vec<&str> = lines.collect();
    // two variants times one range and one kNN workload
    assert_eq!(rows.len(), 4, "{text}");
    assert!(rows.iter().all(|r| r.starts_with("skewed,1500,3,")));

    // same spec against a dataset file; the file's size and dimension win
    let data = dir.path().join("g.lmsd");
    lims(&["gen", "--kind", "gaussmix", "--n", "800", "--d", "2", "--out", p(&data)]);
    lims(&["bench", "--spec", p(&spec), "--csv", p(&csv), "--load", p(&data)]);
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4, "{text}");
    assert!(rows.iter().all(|r| r.contains(",2,l2,")), "{text}");
}

#[test]
fn bad_arguments_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.lims");
    let out = Command::new(env!("CARGO_BIN_EXE_lims")).args(["stats", "--index", p(&missing)]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.lims"));

    let data = dir.path().join("g.lmsd");
    let index = dir.path().join("g.lims");
    lims(&["gen", "--kind", "skewed", "--n", "300", "--d", "2", "--out", p(&data)]);
    lims(&["build", "--data", p(&data), "--out", p(&index), "--K", "3", "--m", "2", "--N", "4"]);
    let queries = dir.path().join("q.txt");
    fs::write(&queries, "0.1,0.2\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lims"))
        .args(["query", "--index", p(&index), "--mode", "range", "--q-file", p(&queries)])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--r"));
}
