//! Network file format (JSON).
//!
//! ```json
//! {
//!   "jam_spacing": 7.5,
//!   "lanes": [{"id": 0, "length": 300.0, "speed_limit": 15.0}],
//!   "roads": [{"id": 0, "from": "b_w0", "to": "i0x0", "lanes": [0, 1, 2]}],
//!   "intersections": [{"id": "i0x0", "signalized": true, "lane_table": [0, 1, 2, ...]}]
//! }
//! ```
//!
//! `lane_table` holds exactly 24 lane ids with -1 for nonexistent slots.
//! A road's three lanes are listed (left, through, right) as ordered at the
//! road's end and must share length and speed limit.

use super::{Intersection, Lane, NetworkError, Road, RoadNetwork, JAM_SPACING, LANE_SLOTS};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    #[serde(default = "default_jam_spacing")]
    jam_spacing: f64,
    lanes: Vec<LaneFile>,
    roads: Vec<RoadFile>,
    intersections: Vec<IntersectionFile>,
}

fn default_jam_spacing() -> f64 {
    JAM_SPACING
}

#[derive(Serialize, Deserialize)]
struct LaneFile {
    id: i64,
    length: f64,
    speed_limit: f64,
}

#[derive(Serialize, Deserialize)]
struct RoadFile {
    id: i64,
    from: String,
    to: String,
    lanes: [i64; 3],
}

#[derive(Serialize, Deserialize)]
struct IntersectionFile {
    id: String,
    #[serde(default = "default_true")]
    signalized: bool,
    lane_table: Vec<i64>,
}

fn default_true() -> bool {
    true
}

/// Parses and validates a network from a JSON string.
pub fn network_from_json(text: &str) -> Result<RoadNetwork, NetworkError> {
    let file: NetworkFile = serde_json::from_str(text)?;
    let jam = file.jam_spacing;

    let lanes: Vec<Lane> = file
        .lanes
        .iter()
        .map(|l| Lane {
            id: l.id,
            length: l.length,
            speed_limit: l.speed_limit,
            capacity: if l.length > 0.0 && jam > 0.0 { (l.length / jam).floor() as usize } else { 0 },
        })
        .collect();
    let lane_index = |id: i64| -> Result<super::LaneIdx, NetworkError> {
        lanes
            .iter()
            .position(|l| l.id == id)
            .map(|i| super::LaneIdx(i as u32))
            .ok_or_else(|| NetworkError::Invalid(format!("dangling lane reference {id}")))
    };

    let mut roads = Vec::with_capacity(file.roads.len());
    for r in &file.roads {
        roads.push(Road {
            id: r.id,
            from: r.from.clone(),
            to: r.to.clone(),
            lanes: [lane_index(r.lanes[0])?, lane_index(r.lanes[1])?, lane_index(r.lanes[2])?],
        });
    }

    let mut intersections = Vec::with_capacity(file.intersections.len());
    for inter in &file.intersections {
        if inter.lane_table.len() != LANE_SLOTS {
            return Err(NetworkError::Invalid(format!(
                "intersection {}: lane_table has {} entries, expected {LANE_SLOTS}",
                inter.id,
                inter.lane_table.len()
            )));
        }
        let mut table = [None; LANE_SLOTS];
        for (slot, &id) in inter.lane_table.iter().enumerate() {
            if id >= 0 {
                table[slot] = Some(lane_index(id)?);
            }
        }
        intersections.push(Intersection {
            id: inter.id.clone(),
            signalized: inter.signalized,
            lane_table: table,
        });
    }

    RoadNetwork::build(jam, lanes, roads, intersections)
}

/// Serializes a network to the JSON file format (stable field and element order).
pub fn network_to_json(net: &RoadNetwork) -> String {
    let file = NetworkFile {
        jam_spacing: net.jam_spacing,
        lanes: net
            .lanes()
            .iter()
            .map(|l| LaneFile { id: l.id, length: l.length, speed_limit: l.speed_limit })
            .collect(),
        roads: net
            .roads()
            .iter()
            .map(|r| RoadFile {
                id: r.id,
                from: r.from.clone(),
                to: r.to.clone(),
                lanes: r.lanes.map(|l| net.lane(l).id),
            })
            .collect(),
        intersections: net
            .intersections()
            .iter()
            .map(|i| IntersectionFile {
                id: i.id.clone(),
                signalized: i.signalized,
                lane_table: i.lane_table.iter().map(|s| s.map_or(-1, |l| net.lane(l).id)).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("network serialization cannot fail")
}

pub fn load_network(path: impl AsRef<Path>) -> Result<RoadNetwork, NetworkError> {
    let text = std::fs::read_to_string(path)?;
    network_from_json(&text)
}

pub fn save_network(net: &RoadNetwork, path: impl AsRef<Path>) -> Result<(), NetworkError> {
    std::fs::write(path, network_to_json(net))?;
    Ok(())
}
