use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use colgrove::cif::{add_column, cif_open, cif_splits, LayoutPlan, MIN_SPLIT_TARGET};
use colgrove::dataset::{write_dataset, WriteConfig};
use colgrove::io::ReadOptions;
use colgrove::scan::collect_rows;
use colgrove::{Dataset, Format};
use colgrove_core::column::HEADER_LEN;
use colgrove_core::{ColumnLayout, FieldType, Materialization, RecordCursor, Schema, Value};

const ROWS: i64 = 30_000;

fn schema() -> Arc<Schema> {
    Arc::new(Schema::parse("id:int64\nname:string\ntags:map<int64>").unwrap())
}

fn row(i: i64) -> Vec<Value> {
    vec![
        Value::Int64(i),
        Value::String(format!("record number {i:08} with some padding")),
        Value::Map(vec![("a".into(), Value::Int64(i % 7)), ("b".into(), Value::Int64(i))]),
    ]
}

fn write(dir: &Path, layout: &str) -> PathBuf {
    let path = dir.join("ds");
    let config = WriteConfig {
        split_target: MIN_SPLIT_TARGET,
        ..WriteConfig::with_plan(layout.parse::<LayoutPlan>().unwrap())
    };
    write_dataset(&path, Format::Cif, schema(), &config, (0..ROWS).map(row)).unwrap();
    path
}

#[test]
fn writes_several_dense_splits() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "plain");
    let splits = cif_splits(&path).unwrap();
    assert!(splits.len() >= 2);
    assert_eq!(splits.iter().map(|s| s.record_count).sum::<u64>(), ROWS as u64);
    for (i, s) in splits.iter().enumerate() {
        assert_eq!(s.path, path.join(format!("s{i}")));
        let names: Vec<_> = s.column_files.iter().map(|p| p.file_name().unwrap().to_owned()).collect();
        assert_eq!(names, ["c0_id", "c1_name", "c2_tags"]);
    }
    let rows = Dataset::open(&path, Format::Cif).unwrap().read_all(&ReadOptions::exact()).unwrap();
    assert_eq!(rows, (0..ROWS).map(row).collect::<Vec<_>>());
}

fn structure_error(path: &Path) -> colgrove::Error {
    let err = Dataset::open(path, Format::Cif).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
    err
}

#[test]
fn malformed_split_directories_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "plain");

    fs::rename(path.join("s0/c1_name"), dir.path().join("aside")).unwrap();
    assert!(structure_error(&path).to_string().contains("missing column file"));
    fs::rename(dir.path().join("aside"), path.join("s0/c1_name")).unwrap();

    fs::write(path.join("s1/stray"), b"x").unwrap();
    assert!(structure_error(&path).to_string().contains("unexpected file"));
    fs::remove_file(path.join("s1/stray")).unwrap();

    fs::rename(path.join("s0/schema"), dir.path().join("aside")).unwrap();
    assert!(structure_error(&path).to_string().contains("missing schema"));
    fs::rename(dir.path().join("aside"), path.join("s0/schema")).unwrap();

    let last = cif_splits(&path).unwrap().len() - 1;
    fs::copy(path.join(format!("s{last}/c0_id")), path.join("s0/c0_id")).unwrap();
    structure_error(&path);
}

#[test]
fn split_indices_must_be_dense() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "plain");
    fs::rename(path.join("s0"), path.join("s7")).unwrap();
    assert!(structure_error(&path).to_string().contains("not dense"));
}

#[test]
fn truncated_column_body_is_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "skiplist");
    let file = path.join("s0/c1_name");
    let len = fs::metadata(&file).unwrap().len();
    fs::OpenOptions::new().write(true).open(&file).unwrap().set_len(len / 2).unwrap();
    let ds = Dataset::open(&path, Format::Cif).unwrap();
    let err = ds.read_all(&ReadOptions::exact()).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn projection_opens_only_projected_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "plain");
    let ds = Dataset::open(&path, Format::Cif).unwrap();
    let opts = ReadOptions::exact();
    let split = ds.cif_splits()[0];
    let mut c = cif_open(split, &["name".into()], Materialization::Lazy, &opts).unwrap();
    let rows = collect_rows(&mut c).unwrap();
    assert_eq!(rows.len() as u64, split.record_count);
    let opened: Vec<PathBuf> = opts.open_log.opened().into_keys().collect();
    assert_eq!(opened, vec![split.path.join("c1_name")]);
    let file_len = fs::metadata(split.path.join("c1_name")).unwrap().len();
    assert_eq!(c.io_stats().bytes_read(), file_len);
}

#[test]
fn advancing_without_gets_reads_only_headers() {
    let dir = tempfile::tempdir().unwrap();
    for layout in ["plain", "skiplist", "blocks:fast:8192", "dcsl:100"] {
        let path = write(dir.path(), layout);
        let ds = Dataset::open(&path, Format::Cif).unwrap();
        let opts = ReadOptions::exact();
        let mut c = cif_open(ds.cif_splits()[0], &[], Materialization::Lazy, &opts).unwrap();
        let mut n = 0;
        while c.advance().unwrap() {
            n += 1;
        }
        assert_eq!(n, ds.cif_splits()[0].record_count);
        assert_eq!(c.io_stats().bytes_read(), 3 * HEADER_LEN, "{layout}");
        fs::remove_dir_all(&path).unwrap();
    }
}

#[test]
fn add_column_touches_only_new_files_and_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "plain");
    let before: Vec<(PathBuf, Vec<u8>)> = cif_splits(&path)
        .unwrap()
        .iter()
        .flat_map(|s| s.column_files.clone())
        .map(|p| {
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    let splits = cif_splits(&path).unwrap();
    let values: Vec<Vec<Value>> = splits
        .iter()
        .map(|s| (0..s.record_count).map(|i| Value::Int64(i as i64 * 3)).collect())
        .collect();
    let report = add_column(&path, "score", FieldType::Int64, ColumnLayout::skip_list(), &values).unwrap();
    assert_eq!(report.files_created.len(), splits.len());
    assert_eq!(report.schema_files_rewritten, splits.len() as u64);
    assert_eq!(report.existing_bytes_read, splits.len() as u64 * 3 * HEADER_LEN);
    for (p, bytes) in &before {
        assert_eq!(&fs::read(p).unwrap(), bytes);
    }
    let ds = Dataset::open(&path, Format::Cif).unwrap();
    assert_eq!(ds.schema().index_of("score"), Some(3));
    let mut got = Vec::new();
    for i in 0..ds.split_count() {
        let mut c = ds.open_split(i, &["score".into()], Materialization::Lazy, &ReadOptions::exact()).unwrap();
        while c.advance().unwrap() {
            got.push(c.get("score").unwrap().clone());
        }
    }
    assert_eq!(got, values.concat());
}

#[test]
fn failed_add_column_leaves_dataset_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "plain");
    let listing = |p: &Path| {
        let mut v: Vec<PathBuf> = cif_splits(p)
            .unwrap()
            .iter()
            .flat_map(|s| fs::read_dir(&s.path).unwrap().map(|e| e.unwrap().path()))
            .collect();
        v.sort();
        v
    };
    let before = listing(&path);
    let splits = cif_splits(&path).unwrap();
    let mut values: Vec<Vec<Value>> = splits
        .iter()
        .map(|s| vec![Value::Int64(1); s.record_count as usize])
        .collect();
    values[1].push(Value::Int64(2));
    assert!(add_column(&path, "x", FieldType::Int64, ColumnLayout::Plain, &values).is_err());
    values[1].pop();
    values[1][0] = Value::String("wrong type".into());
    assert!(add_column(&path, "x", FieldType::Int64, ColumnLayout::Plain, &values).is_err());
    assert!(add_column(&path, "name", FieldType::Int64, ColumnLayout::Plain, &values).is_err());
    assert_eq!(listing(&path), before);
    assert_eq!(Dataset::open(&path, Format::Cif).unwrap().schema(), &schema());
}
