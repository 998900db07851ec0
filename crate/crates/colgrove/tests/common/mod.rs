//! Shared generators for the integration tests.

#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use colgrove::cif::LayoutPlan;
use colgrove::dataset::{write_dataset, WriteConfig};
use colgrove::io::ReadOptions;
use colgrove::pax::PaxConfig;
use colgrove::seq::SeqVariant;
use colgrove::{Dataset, Format};
use colgrove_core::{CodecId, ColumnLayout, Field, FieldType, Schema, Value};
use proptest::prelude::*;

fn primitive() -> BoxedStrategy<FieldType> {
    prop_oneof![
        Just(FieldType::Int64),
        Just(FieldType::Double),
        Just(FieldType::String),
        Just(FieldType::Bytes),
    ]
    .boxed()
}

/// Field types; text-safe types nest at most one level with primitive
/// elements.
pub fn field_type(text_safe: bool) -> BoxedStrategy<FieldType> {
    if text_safe {
        prop_oneof![
            3 => primitive(),
            1 => primitive().prop_map(FieldType::array),
            1 => primitive().prop_map(FieldType::map),
        ]
        .boxed()
    } else {
        primitive()
            .prop_recursive(2, 8, 1, |inner| {
                prop_oneof![
                    inner.clone().prop_map(FieldType::array),
                    inner.prop_map(FieldType::map),
                ]
            })
            .boxed()
    }
}

fn double() -> BoxedStrategy<f64> {
    any::<f64>().prop_filter("finite", |d| d.is_finite()).boxed()
}

pub fn value_of(ty: &FieldType, text_safe: bool, in_array: bool) -> BoxedStrategy<Value> {
    match ty {
        FieldType::Int64 => any::<i64>().prop_map(Value::Int64).boxed(),
        FieldType::Double => double().prop_map(Value::Double).boxed(),
        FieldType::String if text_safe && in_array => "[a-zA-Z0-9 ._:/-]{1,10}".prop_map(Value::String).boxed(),
        FieldType::String if text_safe => "[a-zA-Z0-9 ,._:/-]{0,14}".prop_map(Value::String).boxed(),
        FieldType::String => ".{0,14}".prop_map(Value::String).boxed(),
        FieldType::Bytes => {
            let min = usize::from(in_array);
            proptest::collection::vec(any::<u8>(), min..12)
                .prop_map(Value::Bytes)
                .boxed()
        }
        FieldType::Array(e) => proptest::collection::vec(value_of(e, text_safe, true), 0..5)
            .prop_map(Value::Array)
            .boxed(),
        FieldType::Map(v) => {
            proptest::collection::btree_map("[a-z][a-z0-9_]{0,5}", value_of(v, text_safe, false), 0..5)
                .prop_map(|m| Value::Map(m.into_iter().collect()))
                .boxed()
        }
    }
}

/// A schema of one to six fields and up to `max_rows` rows for it.
pub fn dataset(text_safe: bool, max_rows: usize) -> impl Strategy<Value = (Arc<Schema>, Vec<Vec<Value>>)> {
    proptest::collection::vec(field_type(text_safe), 1..7).prop_flat_map(move |types| {
        let schema = Arc::new(
            Schema::new(
                types
                    .iter()
                    .enumerate()
                    .map(|(i, t)| Field::new(format!("f{i}"), t.clone()))
                    .collect(),
            )
            .expect("generated schema"),
        );
        let row: Vec<BoxedStrategy<Value>> =
            types.iter().map(|t| value_of(t, text_safe, false)).collect();
        (Just(schema), proptest::collection::vec(row, 0..max_rows))
    })
}

/// Every writer configuration the round-trip checks cover, labelled.
pub fn configurations() -> Vec<(String, Format, WriteConfig)> {
    let mut out = vec![("txt".to_string(), Format::Txt, WriteConfig::default())];
    out.push(("seq".into(), Format::Seq, WriteConfig::default()));
    out.push((
        "seq-block".into(),
        Format::Seq,
        WriteConfig {
            seq: SeqVariant::Block {
                codec: CodecId::HighRatio,
                target_bytes: 4096,
            },
            ..WriteConfig::default()
        },
    ));
    for codec in [CodecId::Raw, CodecId::HighRatio] {
        out.push((
            format!("pax-{codec}"),
            Format::Pax,
            WriteConfig {
                pax: PaxConfig {
                    rowgroup_target_bytes: 64 * 1024,
                    codec,
                },
                ..WriteConfig::default()
            },
        ));
    }
    for layout in [
        ColumnLayout::Plain,
        ColumnLayout::skip_list(),
        ColumnLayout::CompressedBlocks {
            codec: CodecId::FastLz,
            block_target_bytes: 4096,
        },
        ColumnLayout::Dcsl { block_records: 7 },
    ] {
        out.push((
            format!("cif-{layout}"),
            Format::Cif,
            WriteConfig::with_plan(LayoutPlan::uniform(layout)),
        ));
    }
    out
}

/// Writes `rows` and reads them back.
pub fn round_trip(
    dir: &Path,
    format: Format,
    config: &WriteConfig,
    schema: &Arc<Schema>,
    rows: &[Vec<Value>],
) -> colgrove::Result<Vec<Vec<Value>>> {
    let path = dir.join(format!("data.{format}"));
    write_dataset(&path, format, schema.clone(), config, rows.iter().cloned())?;
    let ds = Dataset::open(&path, format)?;
    let back = ds.read_all(&ReadOptions::exact());
    if path.is_dir() {
        std::fs::remove_dir_all(&path).ok();
    } else {
        std::fs::remove_file(&path).ok();
        std::fs::remove_file(colgrove::io::schema_sidecar(&path)).ok();
    }
    back
}
