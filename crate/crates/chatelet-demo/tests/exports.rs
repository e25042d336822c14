// Only success paths: building a JsError needs a JavaScript host.

use chatelet_demo::{point_count_ratio, region_volume, sigma_table};
use serde_json::Value;

const S0: [i64; 7] = [1, 0, 0, 1, 1, 1, 1];

#[test]
fn quadrant_volume() {
    let v: Value = serde_json::from_str(&region_volume(&S0, 1, 1).unwrap()).unwrap();
    assert_eq!(v["volume"].as_f64().unwrap(), 1.0);
    let v: Value = serde_json::from_str(&region_volume(&S0, -1, -1).unwrap()).unwrap();
    assert_eq!(v["volume"].as_f64().unwrap(), 0.0);
}

#[test]
fn sigma_rows() {
    let v: Value = serde_json::from_str(&sigma_table(&S0, 13, 10).unwrap()).unwrap();
    let ps: Vec<u64> = v.as_array().unwrap().iter().map(|r| r["p"].as_u64().unwrap()).collect();
    assert_eq!(ps, vec![3, 5, 7, 11, 13]);
}

#[test]
fn count_ratio() {
    let v: Value = serde_json::from_str(&point_count_ratio(&S0, 10_000).unwrap()).unwrap();
    assert_eq!(v["count"].as_u64().unwrap(), 10_834);
    assert!((v["ratio"].as_f64().unwrap() - 1.09).abs() < 0.02);
}
