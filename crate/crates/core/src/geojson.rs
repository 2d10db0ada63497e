//! GeoJSON FeatureCollection of a solution's routes and locations.
//!
//! Coordinates are `[lon, lat]`. Styling uses the simplestyle property
//! names (`stroke`, `marker-color`) understood by common map viewers.

use serde_json::{json, Value};

use crate::instance::Instance;
use crate::pipeline::Solution;

const ROUTE_COLORS: [&str; 2] = ["#1f77b4", "#d62728"];
const DEPOT_COLOR: &str = "black";
const STATION_COLOR: &str = "#2ca02c";

fn coords(inst: &Instance, idx: usize) -> Value {
    let p = inst.location(idx);
    json!([p.lon(), p.lat()])
}

/// One LineString per route followed by one Point per location.
pub fn solution_geojson(sol: &Solution, inst: &Instance) -> Value {
    let mut features = Vec::new();
    for (r, route) in sol.routes.iter().enumerate() {
        let color = ROUTE_COLORS[r % ROUTE_COLORS.len()];
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": route.sequence.iter().map(|&i| coords(inst, i)).collect::<Vec<_>>(),
            },
            "properties": {
                "route": r,
                "cost": route.cost,
                "end": route.end.to_string(),
                "stroke": color,
                "stroke-width": 3,
            },
        }));
    }
    let cluster_of = |i: usize| {
        if sol.partition.b.contains(&i) {
            1
        } else {
            0
        }
    };
    for idx in 0..inst.location_count() {
        let (kind, color) = if idx < inst.n() {
            ("visiting", ROUTE_COLORS[cluster_of(idx)])
        } else if inst.depot_indices().contains(&idx) {
            ("depot", DEPOT_COLOR)
        } else {
            ("charging", STATION_COLOR)
        };
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "Point", "coordinates": coords(inst, idx) },
            "properties": { "index": idx, "kind": kind, "marker-color": color },
        }));
    }
    json!({
        "type": "FeatureCollection",
        "properties": {
            "instance": sol.instance.name,
            "total_cost": sol.total_cost,
        },
        "features": features,
    })
}
