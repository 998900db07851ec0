mod common;

use std::sync::Arc;

use colgrove::dataset::{write_dataset, WriteConfig};
use colgrove::io::ReadOptions;
use colgrove::jobs::scan_all;
use colgrove::{Dataset, Format};
use colgrove_core::{Materialization, Schema, Value};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn text_safe_data_round_trips_everywhere((schema, rows) in common::dataset(true, 30)) {
        let dir = tempfile::tempdir().unwrap();
        for (label, format, config) in common::configurations() {
            let back = common::round_trip(dir.path(), format, &config, &schema, &rows).unwrap();
            prop_assert_eq!(&back, &rows, "{}", label);
        }
    }

    #[test]
    fn binary_formats_round_trip_nested_data((schema, rows) in common::dataset(false, 30)) {
        let dir = tempfile::tempdir().unwrap();
        for (label, format, config) in common::configurations() {
            if format == Format::Txt {
                continue;
            }
            let back = common::round_trip(dir.path(), format, &config, &schema, &rows).unwrap();
            prop_assert_eq!(&back, &rows, "{}", label);
        }
    }
}

fn two_columns() -> Arc<Schema> {
    Arc::new(Schema::parse("name:string\nn:int64").unwrap())
}

#[test]
fn text_writer_rejects_separators() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["a\tb", "line\nbreak", "k=v", "a;b", "back\\slash"] {
        let row = vec![Value::String(bad.into()), Value::Int64(1)];
        let r = write_dataset(
            &dir.path().join("t.txt"),
            Format::Txt,
            two_columns(),
            &WriteConfig::default(),
            [row],
        );
        assert!(r.is_err(), "{bad:?} accepted");
    }
}

#[test]
fn empty_datasets_read_back_empty() {
    let dir = tempfile::tempdir().unwrap();
    for (label, format, config) in common::configurations() {
        let back = common::round_trip(dir.path(), format, &config, &two_columns(), &[]).unwrap();
        assert!(back.is_empty(), "{label}");
    }
}

#[test]
fn truncated_row_files_are_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<Vec<Value>> = (0..200)
        .map(|i| vec![Value::String(format!("row{i}")), Value::Int64(i)])
        .collect();
    for format in [Format::Seq, Format::Pax] {
        let path = dir.path().join(format!("d.{format}"));
        write_dataset(&path, format, two_columns(), &WriteConfig::default(), rows.clone()).unwrap();
        let len = std::fs::metadata(&path).unwrap().len();
        let f = std::fs::OpenOptions::new().write(true).open(&path).unwrap();
        f.set_len(len - 7).unwrap();
        let err = Dataset::open(&path, format)
            .and_then(|ds| ds.read_all(&ReadOptions::exact()))
            .unwrap_err();
        assert_eq!(err.exit_code(), 2, "{format}: {err}");
    }
}

#[test]
fn pax_projection_reads_less_than_full_scan() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<Vec<Value>> = (0..20_000)
        .map(|i| vec![Value::String(format!("a fairly long string value {i}")), Value::Int64(i)])
        .collect();
    let path = dir.path().join("d.pax");
    let config = WriteConfig::with_pax(64 * 1024, colgrove_core::CodecId::Raw);
    write_dataset(&path, Format::Pax, two_columns(), &config, rows).unwrap();
    let ds = Dataset::open(&path, Format::Pax).unwrap();
    let opts = ReadOptions::exact();
    let one = scan_all(&ds, &["n".into()], Materialization::Eager, &opts, 1).unwrap();
    let all = scan_all(&ds, &[], Materialization::Eager, &opts, 1).unwrap();
    assert!(one.bytes_read() * 3 < all.bytes_read());
    assert_eq!(one.records_emitted, 20_000);
    assert_eq!(one.values_deserialized.get("name"), None);
}
