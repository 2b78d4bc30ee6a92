//! Synthetic desk-scale grid scenarios: a rows x cols lattice of 4-leg
//! signalized intersections with boundary source/sink roads and a seeded
//! demand pattern (straight corridors plus turning flows, with an optional
//! halfway swap of the heavy axis).

use super::{Approach, FlowSpec, Intersection, Lane, LaneIdx, NetworkError, Road, RoadNetwork, JAM_SPACING, LANE_SLOTS};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSpec {
    pub horizon: u32,
    /// Seconds between vehicles per straight route on the heavy axis.
    pub heavy_interval: u32,
    pub light_interval: u32,
    /// Seconds between vehicles per turning route; 0 disables turning flows.
    pub turn_interval: u32,
    /// Swap the heavy axis from east-west to north-south at horizon/2.
    pub swap_halfway: bool,
}

impl Default for DemandSpec {
    fn default() -> Self {
        DemandSpec {
            horizon: 3600,
            heavy_interval: 8,
            light_interval: 16,
            turn_interval: 32,
            swap_halfway: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Length of internal (intersection-to-intersection) roads, meters.
    /// Short blocks keep downstream zones live at k=100.
    pub lane_len: f64,
    /// Length of boundary source/sink roads. Long approaches buffer entry
    /// queues and keep trip times long enough for the delay index to be a
    /// meaningful termination signal.
    pub boundary_len: f64,
    pub speed_limit: f64,
    pub demand: DemandSpec,
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            rows: 4,
            cols: 4,
            lane_len: 120.0,
            boundary_len: 450.0,
            speed_limit: 15.0,
            demand: DemandSpec::default(),
            seed: 0,
        }
    }
}

fn inter_name(r: usize, c: usize) -> String {
    format!("i{r}x{c}")
}

struct Builder {
    lanes: Vec<Lane>,
    roads: Vec<Road>,
    road_ids: HashMap<(String, String), i64>,
    lane_len: f64,
    boundary_len: f64,
    speed_limit: f64,
}

impl Builder {
    fn add_road(&mut self, from: &str, to: &str) {
        let length = if from.starts_with("b_") || to.starts_with("b_") {
            self.boundary_len
        } else {
            self.lane_len
        };
        let road_id = self.roads.len() as i64;
        let base = self.lanes.len() as i64;
        for k in 0..3 {
            self.lanes.push(Lane {
                id: base + k,
                length,
                speed_limit: self.speed_limit,
                capacity: (length / JAM_SPACING).floor() as usize,
            });
        }
        self.roads.push(Road {
            id: road_id,
            from: from.to_string(),
            to: to.to_string(),
            lanes: [
                LaneIdx(base as u32),
                LaneIdx(base as u32 + 1),
                LaneIdx(base as u32 + 2),
            ],
        });
        self.road_ids.insert((from.to_string(), to.to_string()), road_id);
    }

    fn road_between(&self, from: &str, to: &str) -> i64 {
        self.road_ids[&(from.to_string(), to.to_string())]
    }
}

/// Generates the grid network and its flow list. Identical specs produce
/// byte-identical serialized output.
pub fn gen_grid(spec: &GridSpec) -> Result<(RoadNetwork, Vec<FlowSpec>), NetworkError> {
    if spec.rows < 1 || spec.cols < 1 {
        return Err(NetworkError::Invalid(format!(
            "grid must be at least 1x1, got {}x{}",
            spec.rows, spec.cols
        )));
    }
    if spec.lane_len < super::MIN_LANE_LENGTH || spec.boundary_len < super::MIN_LANE_LENGTH {
        return Err(NetworkError::Invalid(format!(
            "lane lengths {}/{} below minimum {}",
            spec.lane_len,
            spec.boundary_len,
            super::MIN_LANE_LENGTH
        )));
    }
    if !(spec.speed_limit > 0.0) {
        return Err(NetworkError::Invalid("speed_limit must be positive".into()));
    }

    let (rows, cols) = (spec.rows, spec.cols);
    let mut b = Builder {
        lanes: Vec::new(),
        roads: Vec::new(),
        road_ids: HashMap::new(),
        lane_len: spec.lane_len,
        boundary_len: spec.boundary_len,
        speed_limit: spec.speed_limit,
    };

    // Column c runs b_n{c}, i0xc, ..., b_s{c}; row r runs b_w{r}, irx0, ..., b_e{r}.
    for c in 0..cols {
        let mut nodes = vec![format!("b_n{c}")];
        nodes.extend((0..rows).map(|r| inter_name(r, c)));
        nodes.push(format!("b_s{c}"));
        for w in nodes.windows(2) {
            b.add_road(&w[0], &w[1]);
            b.add_road(&w[1], &w[0]);
        }
    }
    for r in 0..rows {
        let mut nodes = vec![format!("b_w{r}")];
        nodes.extend((0..cols).map(|c| inter_name(r, c)));
        nodes.push(format!("b_e{r}"));
        for w in nodes.windows(2) {
            b.add_road(&w[0], &w[1]);
            b.add_road(&w[1], &w[0]);
        }
    }

    let mut intersections = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let me = inter_name(r, c);
            let north = if r == 0 { format!("b_n{c}") } else { inter_name(r - 1, c) };
            let south = if r == rows - 1 { format!("b_s{c}") } else { inter_name(r + 1, c) };
            let west = if c == 0 { format!("b_w{r}") } else { inter_name(r, c - 1) };
            let east = if c == cols - 1 { format!("b_e{r}") } else { inter_name(r, c + 1) };
            let neighbor = |a: Approach| match a {
                Approach::North => north.clone(),
                Approach::East => east.clone(),
                Approach::South => south.clone(),
                Approach::West => west.clone(),
            };

            let mut table = [None; LANE_SLOTS];
            for a in Approach::ALL {
                let in_road = b.road_between(&neighbor(a), &me);
                let out_road = b.road_between(&me, &neighbor(a));
                for k in 0..3 {
                    table[3 * a.index() + k] = Some(b.roads[in_road as usize].lanes[k]);
                    table[12 + 3 * a.index() + k] = Some(b.roads[out_road as usize].lanes[k]);
                }
            }
            intersections.push(Intersection { id: me, signalized: true, lane_table: table });
        }
    }

    let mut flows = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = &spec.demand;
    let half = d.horizon / 2;

    // Straight corridors. With swap_halfway the heavy axis is east-west in
    // the first half and north-south in the second.
    let mut axis_flow = |nodes: Vec<String>, ew: bool| {
        let segments: Vec<(u32, u32, u32)> = if d.swap_halfway {
            let (first, second) = if ew {
                (d.heavy_interval, d.light_interval)
            } else {
                (d.light_interval, d.heavy_interval)
            };
            vec![(0, half.saturating_sub(1), first), (half, d.horizon, second)]
        } else {
            let iv = if ew { d.heavy_interval } else { d.light_interval };
            vec![(0, d.horizon, iv)]
        };
        let route: Vec<i64> = nodes.windows(2).map(|w| b.road_between(&w[0], &w[1])).collect();
        for (start, end, interval) in segments {
            if interval == 0 || end < start {
                continue;
            }
            let jitter = (interval / 5).max(1);
            let interval = (interval + rng.gen_range(0..=jitter)).max(1);
            let offset = rng.gen_range(0..interval);
            flows.push(FlowSpec { route: route.clone(), start_time: start + offset, end_time: end, interval });
        }
    };

    for r in 0..rows {
        let mut east: Vec<String> = vec![format!("b_w{r}")];
        east.extend((0..cols).map(|c| inter_name(r, c)));
        east.push(format!("b_e{r}"));
        let west: Vec<String> = east.iter().rev().cloned().collect();
        axis_flow(east, true);
        axis_flow(west, true);
    }
    for c in 0..cols {
        let mut south: Vec<String> = vec![format!("b_n{c}")];
        south.extend((0..rows).map(|r| inter_name(r, c)));
        south.push(format!("b_s{c}"));
        let north: Vec<String> = south.iter().rev().cloned().collect();
        axis_flow(south, false);
        axis_flow(north, false);
    }

    // Turning flows: a left-turn family per row (west in, north out), a
    // left-turn family per column (north in, east out), and a right-turn
    // family per row (west in, south out).
    if d.turn_interval > 0 {
        let mut turn_flow = |nodes: Vec<String>| {
            let route: Vec<i64> = nodes.windows(2).map(|w| b.road_between(&w[0], &w[1])).collect();
            let jitter = (d.turn_interval / 5).max(1);
            let interval = (d.turn_interval + rng.gen_range(0..=jitter)).max(1);
            let offset = rng.gen_range(0..interval);
            flows.push(FlowSpec { route, start_time: offset, end_time: d.horizon, interval });
        };
        for r in 0..rows {
            let tc = (r + 1) % cols;
            let mut nodes = vec![format!("b_w{r}")];
            nodes.extend((0..=tc).map(|c| inter_name(r, c)));
            nodes.extend((0..r).rev().map(|rr| inter_name(rr, tc)));
            nodes.push(format!("b_n{tc}"));
            turn_flow(nodes);
        }
        for c in 0..cols {
            let tr = (c + 1) % rows;
            let mut nodes = vec![format!("b_n{c}")];
            nodes.extend((0..=tr).map(|r| inter_name(r, c)));
            nodes.extend((c + 1..cols).map(|cc| inter_name(tr, cc)));
            nodes.push(format!("b_e{tr}"));
            turn_flow(nodes);
        }
        for r in 0..rows {
            let tc = (r + 2) % cols;
            let mut nodes = vec![format!("b_w{r}")];
            nodes.extend((0..=tc).map(|c| inter_name(r, c)));
            nodes.extend((r..rows).skip(1).map(|rr| inter_name(rr, tc)));
            nodes.push(format!("b_s{tc}"));
            turn_flow(nodes);
        }
    }

    let net = RoadNetwork::build(JAM_SPACING, b.lanes, b.roads, intersections)
        .expect("generated grid must validate");
    Ok((net, flows))
}
