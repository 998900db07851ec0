use std::collections::BTreeSet;
use std::path::Path;

use colgrove::cif::{LayoutPlan, MIN_SPLIT_TARGET};
use colgrove::dataset::{write_dataset, WriteConfig};
use colgrove::generate::{selectivity_pattern, Crawl, Generator, Synthetic, CONTENT_TYPE, CRAWL_PATTERN};
use colgrove::io::ReadOptions;
use colgrove::jobs::{run_job, JobSpec, ALL_KEYS};
use colgrove::{Dataset, Format};
use colgrove_core::{Materialization, Value};

fn crawl_rows(n: u64, fraction: f64) -> (std::sync::Arc<colgrove_core::Schema>, Vec<Vec<Value>>) {
    let g = Crawl::new(n, fraction, 64, 9).unwrap();
    let schema = g.schema();
    (schema, g.collect())
}

fn targets() -> Vec<(Format, WriteConfig)> {
    let mut v = vec![
        (Format::Txt, WriteConfig::default()),
        (Format::Seq, WriteConfig::default()),
        (Format::Pax, WriteConfig::with_pax(64 * 1024, colgrove_core::CodecId::HighRatio)),
    ];
    for plan in ["plain", "skiplist", "blocks:high:16384", "skiplist,metadata=dcsl:50"] {
        v.push((
            Format::Cif,
            WriteConfig {
                split_target: MIN_SPLIT_TARGET,
                ..WriteConfig::with_plan(plan.parse::<LayoutPlan>().unwrap())
            },
        ));
    }
    v
}

fn write(dir: &Path, i: usize, format: Format, config: &WriteConfig, schema: &std::sync::Arc<colgrove_core::Schema>, rows: &[Vec<Value>]) -> Dataset {
    let path = dir.join(format!("d{i}.{format}"));
    write_dataset(&path, format, schema.clone(), config, rows.iter().cloned()).unwrap();
    Dataset::open(&path, format).unwrap()
}

#[test]
fn distinct_job_agrees_with_oracle_everywhere() {
    let (schema, rows) = crawl_rows(3000, 0.06);
    let oracle: Vec<String> = rows
        .iter()
        .filter(|r| r[0].as_str().unwrap().contains(CRAWL_PATTERN))
        .filter_map(|r| r[4].map_get(CONTENT_TYPE).and_then(Value::as_str).map(str::to_owned))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    assert!(!oracle.is_empty());
    let job = JobSpec::distinct("url", CRAWL_PATTERN, "metadata", Some(CONTENT_TYPE));
    let dir = tempfile::tempdir().unwrap();
    for (i, (format, config)) in targets().iter().enumerate() {
        let ds = write(dir.path(), i, *format, config, &schema, &rows);
        let mut bytes = Vec::new();
        for mode in [Materialization::Eager, Materialization::Lazy] {
            let r = run_job(&ds, &[], &job, mode, &ReadOptions::exact(), 2).unwrap();
            assert_eq!(r.output, oracle, "{format} {mode:?}");
            assert_eq!(r.matches, 180);
            bytes.push(r.metrics.bytes_read());
        }
        assert!(bytes[1] <= bytes[0], "{format}: lazy read more than eager");
    }
}

#[test]
fn aggregate_matches_oracle_and_lazy_decodes_only_matches() {
    let g = Synthetic::new(4000, 3);
    let schema = g.schema();
    let rows: Vec<Vec<Value>> = g.collect();
    let dir = tempfile::tempdir().unwrap();
    let plan: LayoutPlan = "skiplist".parse().unwrap();
    let ds = write(dir.path(), 0, Format::Cif, &WriteConfig::with_plan(plan), &schema, &rows);
    let map_col = schema.index_of("map0").unwrap();
    for p in [1, 25, 100] {
        let pattern = selectivity_pattern(p).unwrap();
        let hits: Vec<&Vec<Value>> = rows
            .iter()
            .filter(|r| r[0].as_str().unwrap().contains(&pattern))
            .collect();
        let sum: i64 = hits
            .iter()
            .flat_map(|r| match &r[map_col] {
                Value::Map(e) => e.iter().map(|(_, v)| v.as_i64().unwrap()).collect::<Vec<_>>(),
                _ => unreachable!(),
            })
            .sum();
        let job = JobSpec::aggregate("str0", &pattern, "map0", ALL_KEYS);
        let r = run_job(&ds, &[], &job, Materialization::Lazy, &ReadOptions::exact(), 1).unwrap();
        assert_eq!(r.output, vec![sum.to_string()]);
        assert_eq!(r.matches, hits.len() as u64);
        assert_eq!(r.metrics.values_deserialized["map0"], hits.len() as u64);
        assert_eq!(r.metrics.values_deserialized["str0"], rows.len() as u64);
    }
}

#[test]
fn checksum_is_the_same_in_every_format() {
    let (schema, rows) = crawl_rows(500, 0.5);
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = BTreeSet::new();
    for (i, (format, config)) in targets().iter().enumerate() {
        let ds = write(dir.path(), i, *format, config, &schema, &rows);
        let r = run_job(&ds, &[], &JobSpec::checksum(), Materialization::Lazy, &ReadOptions::default(), 1).unwrap();
        assert_eq!(r.output[0], "records\t500");
        outputs.insert(r.output);
    }
    assert_eq!(outputs.len(), 1);
}

#[test]
fn job_validation() {
    let (schema, rows) = crawl_rows(10, 0.5);
    let dir = tempfile::tempdir().unwrap();
    let ds = write(dir.path(), 0, Format::Seq, &WriteConfig::default(), &schema, &rows);
    let opts = ReadOptions::default();
    let bad = [
        JobSpec::distinct("nope", "x", "url", None),
        JobSpec::distinct("fetchTime", "x", "url", None),
        JobSpec::distinct("url", "x", "srcUrl", Some("k")),
        JobSpec::aggregate("url", "x", "metadata", "k"),
    ];
    for job in bad {
        let err = run_job(&ds, &[], &job, Materialization::Lazy, &opts, 1).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{err}");
    }
    let job = JobSpec::distinct("url", "x", "srcUrl", None);
    assert!(run_job(&ds, &["url".into()], &job, Materialization::Lazy, &opts, 1).is_err());
}
