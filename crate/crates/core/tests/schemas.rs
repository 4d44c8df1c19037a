use std::path::PathBuf;

use chernwall::walls::{build_domain_chart, ChartBox, ChartOptions};
use chernwall::{
    count_bands, delta_chern, refine_until_stable, ChernOptions, ChernRecord, ControlPoint, DomainChart,
    QuantumBandCount, TripletModel, WallCrossing, WallId,
};
use jsonschema::JSONSchema;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

fn schema(name: &str) -> JSONSchema {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "schemas", name].iter().collect();
    let text = std::fs::read_to_string(&path).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    JSONSchema::compile(&value).unwrap()
}

/// Validates `item` against the schema and checks a lossless round trip.
fn conforms<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(name: &str, item: &T) -> Value {
    let text = serde_json::to_string(item).unwrap();
    let value: Value = serde_json::from_str(&text).unwrap();
    let compiled = schema(name);
    if let Err(errors) = compiled.validate(&value) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{name}: {msgs:?}");
    }
    let back: T = serde_json::from_str(&text).unwrap();
    assert_eq!(&back, item);
    value
}

#[test]
fn chern_record_conforms() {
    let rec = refine_until_stable(
        &TripletModel::new(ControlPoint::new(1.0, 2.0)),
        16,
        &ChernOptions::default(),
    )
    .unwrap();
    let v = conforms::<ChernRecord>("chern_record.schema.json", &rec);
    let sum: i64 = v["chern"].as_array().unwrap().iter().map(|x| x.as_i64().unwrap()).sum();
    assert_eq!(sum, 0);
}

#[test]
fn wall_crossing_conforms() {
    for id in WallId::ALL {
        let w = id.wall();
        let s = match id {
            WallId::C2Upper => 1.5,
            WallId::C2Lower => -1.5,
            _ => 0.0,
        };
        let c = w.point_at(s).unwrap();
        let x = delta_chern(&w, c, w.normal(c)).unwrap();
        conforms::<WallCrossing>("wall_crossing.schema.json", &x);
    }
}

#[test]
fn quantum_band_count_conforms() {
    let q = count_bands(6, ControlPoint::new(0.0, 0.0), Some(&[-2, 0, 2])).unwrap();
    conforms::<QuantumBandCount>("quantum_band_count.schema.json", &q);
    let q = count_bands(10, ControlPoint::new(1.0, 2.0), None).unwrap();
    conforms::<QuantumBandCount>("quantum_band_count.schema.json", &q);
}

#[test]
fn domain_chart_conforms() {
    let opts = ChartOptions {
        step: 0.02,
        mesh: 16,
        ..ChartOptions::default()
    };
    let chart = build_domain_chart(ChartBox::default(), &opts).unwrap();
    conforms::<DomainChart>("domain_chart.schema.json", &chart);
}

#[test]
fn schema_rejects_broken_records() {
    let compiled = schema("wall_crossing.schema.json");
    let bad = serde_json::json!({
        "wall": "a=2", "orbit": "C5", "point": {"a": 0.0, "b": 0.0}, "direction": [1.0, 0.0],
        "band_pair": [0, 1], "delta": [6, -6], "local_sign": 0, "orbit_size": 7, "jacobian_det": 1.0
    });
    assert!(!compiled.is_valid(&bad));
}
