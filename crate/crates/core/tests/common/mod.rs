#![allow(dead_code)]

use std::sync::LazyLock;

use saelab::field_curve::{AffinePoint, CurveId, CurveParams, FieldElement};
use serde_json::Value;

pub static ORACLE: LazyLock<Value> = LazyLock::new(|| {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/vectors/oracle.json");
    serde_json::from_str(&std::fs::read_to_string(path).expect("oracle vectors")).unwrap()
});

pub fn curve_vectors(id: CurveId) -> &'static Value {
    &ORACLE[id.name()]
}

pub fn unhex(v: &Value) -> Vec<u8> {
    hex::decode(v.as_str().expect("hex string")).expect("valid hex")
}

pub fn fe(c: &CurveParams, v: &Value) -> FieldElement {
    c.field.from_be_bytes(&unhex(v)).expect("canonical")
}

pub fn point(c: &CurveParams, v: &Value) -> AffinePoint {
    c.point_from_coordinates(&unhex(&v["x"]), &unhex(&v["y"]))
        .expect("on curve")
}
