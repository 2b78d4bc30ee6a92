use super::*;

/// Independently derived phase table: upstream slot pairs, downstream slot
/// triples and the two-roads flag for phases 1..8, worked out by hand from
/// the compass layout (slots 0-11 in, 12-23 out, (left,through,right) per
/// approach, right-hand traffic).
const EXPECTED_TABLE: [([usize; 2], [[usize; 3]; 2], bool); 8] = [
    ([0, 6], [[15, 16, 17], [21, 22, 23]], true),
    ([1, 7], [[18, 19, 20], [12, 13, 14]], true),
    ([3, 9], [[18, 19, 20], [12, 13, 14]], true),
    ([4, 10], [[21, 22, 23], [15, 16, 17]], true),
    ([0, 1], [[15, 16, 17], [18, 19, 20]], false),
    ([3, 4], [[18, 19, 20], [21, 22, 23]], false),
    ([6, 7], [[21, 22, 23], [12, 13, 14]], false),
    ([9, 10], [[12, 13, 14], [15, 16, 17]], false),
];

#[test]
fn phase_table_matches_hand_derived_layout() {
    for (i, (up, down, two)) in EXPECTED_TABLE.iter().enumerate() {
        let m = phase_movements(PhaseId::from_index(i));
        assert_eq!(m.upstream_slots, *up, "phase {} upstream", i + 1);
        assert_eq!(m.downstream_groups, *down, "phase {} downstream", i + 1);
        assert_eq!(m.serves_two_roads, *two, "phase {} two-roads flag", i + 1);
    }
}

#[test]
fn phase_one_movements() {
    let m = phase_movements(PhaseId::new(1).unwrap());
    assert_eq!(m.upstream_slots, [0, 6]);
    let mut down: Vec<usize> = m.downstream_slots().collect();
    down.sort_unstable();
    assert_eq!(down, vec![15, 16, 17, 21, 22, 23]);
}

#[test]
fn upstream_slot_coverage() {
    let mut count = [0usize; 12];
    for p in PhaseId::all() {
        for &s in &phase_movements(p).upstream_slots {
            count[s] += 1;
        }
    }
    for s in 0..12 {
        let expected = if RIGHT_TURN_SLOTS.contains(&s) { 0 } else { 2 };
        assert_eq!(count[s], expected, "slot {s}");
    }
}

#[test]
fn downstream_groups_have_three_slots_each() {
    for p in PhaseId::all() {
        for g in phase_movements(p).downstream_groups {
            assert_eq!(g.len(), 3);
            for s in g {
                assert!((12..24).contains(&s));
            }
        }
    }
}

#[test]
fn phase_id_range() {
    assert!(PhaseId::new(0).is_none());
    assert!(PhaseId::new(9).is_none());
    assert_eq!(PhaseId::new(8).unwrap().index(), 7);
}

fn three_leg_json() -> String {
    // T-junction with the West approach absent.
    let mut lanes = Vec::new();
    let mut roads = Vec::new();
    for (i, (from, to)) in [
        ("nn", "t"),
        ("t", "nn"),
        ("ee", "t"),
        ("t", "ee"),
        ("ss", "t"),
        ("t", "ss"),
    ]
    .iter()
    .enumerate()
    {
        let base = 3 * i as i64;
        for k in 0..3 {
            lanes.push(format!(
                r#"{{"id": {}, "length": 200.0, "speed_limit": 15.0}}"#,
                base + k
            ));
        }
        roads.push(format!(
            r#"{{"id": {i}, "from": "{from}", "to": "{to}", "lanes": [{}, {}, {}]}}"#,
            base,
            base + 1,
            base + 2
        ));
    }
    let table = [
        0, 1, 2, // N in
        6, 7, 8, // E in
        12, 13, 14, // S in
        -1, -1, -1, // W in
        3, 4, 5, // N out
        9, 10, 11, // E out
        15, 16, 17, // S out
        -1, -1, -1, // W out
    ];
    format!(
        r#"{{"lanes": [{}], "roads": [{}], "intersections": [{{"id": "t", "signalized": true, "lane_table": {:?}}}]}}"#,
        lanes.join(", "),
        roads.join(", "),
        table
    )
}

#[test]
fn three_leg_intersection_marks_missing_approach() {
    let net = network_from_json(&three_leg_json()).unwrap();
    let t = net.intersection_by_id("t").unwrap();
    let inter = net.intersection(t);
    for s in [9, 10, 11, 21, 22, 23] {
        assert_eq!(inter.lane_table[s], None, "slot {s}");
    }
    for s in [0, 1, 2, 3, 4, 5, 6, 7, 8, 12, 13, 14, 15, 16, 17, 18, 19, 20] {
        assert!(inter.lane_table[s].is_some(), "slot {s}");
    }
    // Phases needing only N/E/S slots are valid; phase 8 (West left+through) is not.
    let mask = inter.valid_phases();
    assert!(mask[0] && mask[1] && mask[4]);
    assert!(!mask[7]);
}

#[test]
fn wrong_slot_count_rejected() {
    let json = three_leg_json();
    // Splice a 25th entry into the lane_table array.
    let bad = json.replace("-1, -1, -1]}", "-1, -1, -1, -1]}");
    let err = network_from_json(&bad).unwrap_err();
    assert!(matches!(err, NetworkError::Invalid(_)), "{err}");
    assert!(err.to_string().contains("25"));
}

#[test]
fn dangling_lane_reference_rejected() {
    let json = three_leg_json().replace(r#""lanes": [0, 1, 2]"#, r#""lanes": [0, 1, 99]"#);
    let err = network_from_json(&json).unwrap_err();
    assert!(err.to_string().contains("dangling"), "{err}");
}

#[test]
fn short_lane_rejected() {
    let json = three_leg_json().replace(r#""id": 0, "length": 200.0"#, r#""id": 0, "length": 10.0"#);
    let err = network_from_json(&json).unwrap_err();
    assert!(err.to_string().contains("minimum"), "{err}");
}

#[test]
fn grid_network_round_trips() {
    let (net, _) = gen_grid(&GridSpec { rows: 2, cols: 2, ..GridSpec::default() }).unwrap();
    let json = network_to_json(&net);
    let reloaded = network_from_json(&json).unwrap();
    assert_eq!(net, reloaded);
}

#[test]
fn grid_sizes() {
    let (net1, _) = gen_grid(&GridSpec { rows: 1, cols: 1, ..GridSpec::default() }).unwrap();
    assert_eq!(net1.intersections().len(), 1);
    let inter = net1.intersection(IntersectionIdx(0));
    assert!(Approach::ALL.iter().all(|&a| inter.has_in_approach(a)));

    let (net16, _) = gen_grid(&GridSpec::default()).unwrap();
    assert_eq!(net16.intersections().len(), 16);
    assert!(net16.intersections().iter().all(|i| i.signalized));
}

#[test]
fn grid_generation_is_deterministic() {
    let spec = GridSpec { seed: 42, ..GridSpec::default() };
    let (net_a, flows_a) = gen_grid(&spec).unwrap();
    let (net_b, flows_b) = gen_grid(&spec).unwrap();
    assert_eq!(network_to_json(&net_a), network_to_json(&net_b));
    assert_eq!(flows_to_json(&flows_a), flows_to_json(&flows_b));

    let (_, flows_c) = gen_grid(&GridSpec { seed: 43, ..spec }).unwrap();
    assert_ne!(flows_to_json(&flows_a), flows_to_json(&flows_c));
}

#[test]
fn grid_flows_validate() {
    let (net, flows) = gen_grid(&GridSpec { rows: 3, cols: 2, ..GridSpec::default() }).unwrap();
    for (i, f) in flows.iter().enumerate() {
        resolve_route(i, f, &net).unwrap();
    }
}

#[test]
fn spawn_schedule_arithmetic() {
    let f = FlowSpec { route: vec![0], start_time: 0, end_time: 100, interval: 10 };
    let times: Vec<u32> = spawn_times(&f).collect();
    assert_eq!(times, vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]);
}

#[test]
fn empty_flow_file() {
    let (net, _) = gen_grid(&GridSpec { rows: 1, cols: 1, ..GridSpec::default() }).unwrap();
    assert_eq!(flows_from_json("[]", &net).unwrap(), vec![]);
}

#[test]
fn unknown_road_in_route_rejected() {
    let (net, _) = gen_grid(&GridSpec { rows: 1, cols: 1, ..GridSpec::default() }).unwrap();
    let text = r#"[{"route": [9999], "start_time": 0, "end_time": 10, "interval": 5}]"#;
    let err = flows_from_json(text, &net).unwrap_err();
    assert!(matches!(err, FlowError::UnknownRoad { road: 9999, .. }), "{err}");
}

#[test]
fn disconnected_route_rejected() {
    let (net, flows) = gen_grid(&GridSpec { rows: 2, cols: 2, ..GridSpec::default() }).unwrap();
    // Two roads that do not meet.
    let a = flows[0].route[0];
    let b = flows[0].route[0]; // same road twice is a u-turn/disconnect
    let text = format!(r#"[{{"route": [{a}, {b}], "start_time": 0, "end_time": 10, "interval": 5}}]"#);
    let err = flows_from_json(&text, &net).unwrap_err();
    assert!(matches!(err, FlowError::Disconnected { .. }), "{err}");
}

#[test]
fn turn_geometry() {
    assert_eq!(turn_target(Approach::North, Turn::Left), Approach::East);
    assert_eq!(turn_target(Approach::North, Turn::Through), Approach::South);
    assert_eq!(turn_target(Approach::North, Turn::Right), Approach::West);
    assert_eq!(turn_between(Approach::North, Approach::East), Some(Turn::Left));
    assert_eq!(turn_between(Approach::North, Approach::North), None);
    assert_eq!(movement_target(0), [15, 16, 17]);
    assert_eq!(movement_target(6), [21, 22, 23]);
}

