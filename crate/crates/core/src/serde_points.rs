//! Serialize points as plain JSON arrays rather than nalgebra's matrix layout.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Point;

pub fn serialize<S: Serializer>(points: &[Point], s: S) -> Result<S::Ok, S::Error> {
    let raw: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    raw.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point>, D::Error> {
    let raw: Vec<Vec<f64>> = Vec::deserialize(d)?;
    Ok(raw.into_iter().map(Point::from_vec).collect())
}

pub mod single {
    use super::*;

    pub fn serialize<S: Serializer>(p: &Point, s: S) -> Result<S::Ok, S::Error> {
        p.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Point, D::Error> {
        Ok(Point::from_vec(Vec::deserialize(d)?))
    }
}
