use proptest::prelude::*;

use q4dr_core::instance::{
    generate_instance, geo_distance, load_instance, save_instance, BoundingBox, GeneratorConfig, Instance,
    InstanceError, UseCase, PERIPHERY_MARGIN,
};

#[test]
fn bilbao_distance_is_plausible() {
    // one degree of latitude is about 111.2 km on a 6371 km sphere
    let a = q4dr_core::GeoPoint::new(43.0, -2.9).unwrap();
    let b = q4dr_core::GeoPoint::new(44.0, -2.9).unwrap();
    assert!((geo_distance(a, b) - 111_194.93).abs() < 0.01);
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for uc in UseCase::ALL {
        let inst = generate_instance(uc, 12, 7, &GeneratorConfig::default()).unwrap();
        let path = dir.path().join(format!("{}.json", inst.name()));
        save_instance(&inst, &path).unwrap();
        assert_eq!(load_instance(&path).unwrap(), inst);
    }
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(load_instance("/nonexistent/UC1_12.json"), Err(InstanceError::Io { .. })));
}

#[test]
fn schema_errors_are_distinct() {
    let inst = generate_instance(UseCase::Uc1, 6, 1, &GeneratorConfig::default()).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&inst.to_json()).unwrap();

    let mut missing = v.clone();
    missing.as_object_mut().unwrap().remove("depots");
    assert!(matches!(
        Instance::from_json(&missing.to_string()),
        Err(InstanceError::MissingField(f)) if f == "depots"
    ));

    // UC1 with two depots
    let extra = v["depots"][0].clone();
    v["depots"].as_array_mut().unwrap().push(extra);
    assert!(matches!(Instance::from_json(&v.to_string()), Err(InstanceError::Schema(_))));

    let mut bad_lat = serde_json::from_str::<serde_json::Value>(&inst.to_json()).unwrap();
    bad_lat["visiting"][0][0] = serde_json::json!(95.0);
    assert!(matches!(Instance::from_json(&bad_lat.to_string()), Err(InstanceError::Range(_))));

    assert!(matches!(Instance::from_json("{"), Err(InstanceError::Json(_))));
}

#[test]
fn uc3_stations_sit_in_the_periphery_band() {
    let bbox = BoundingBox::default();
    for seed in 0..5 {
        let inst = generate_instance(UseCase::Uc3, 16, seed, &GeneratorConfig::default()).unwrap();
        assert_eq!(inst.charging().len(), 5);
        for &p in inst.charging() {
            assert!(bbox.in_band(p, PERIPHERY_MARGIN));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_instances_round_trip(uc in 0usize..3, n in 4usize..20, seed in any::<u64>()) {
        let uc = UseCase::ALL[uc];
        let inst = generate_instance(uc, n, seed, &GeneratorConfig::default()).unwrap();
        prop_assert_eq!(inst.n(), n);
        prop_assert_eq!(inst.depots().len(), uc.depot_count());
        prop_assert_eq!(inst.charging().len(), if uc == UseCase::Uc3 { n / 3 } else { 0 });
        let back = Instance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(&back, &inst);
    }

    #[test]
    fn costs_respect_asymmetry_bounds(seed in any::<u64>(), alpha in 0.0f64..0.5) {
        let cfg = GeneratorConfig { asymmetry: alpha, forbidden_fraction: 0.0, ..GeneratorConfig::default() };
        let inst = generate_instance(UseCase::Uc2, 8, seed, &cfg).unwrap();
        for i in 0..inst.location_count() {
            for j in 0..inst.location_count() {
                let d = geo_distance(inst.location(i), inst.location(j));
                let c = inst.costs().cost(i, j);
                prop_assert!(c >= d - 1e-9 && c <= d * (1.0 + alpha) + 1e-9);
            }
        }
    }

    #[test]
    fn forbidden_arcs_never_touch_depots(seed in any::<u64>()) {
        let cfg = GeneratorConfig { forbidden_fraction: 0.1, ..GeneratorConfig::default() };
        let inst = generate_instance(UseCase::Uc2, 10, seed, &cfg).unwrap();
        for &(i, j) in inst.costs().forbidden() {
            prop_assert!(i < inst.n() && j < inst.n());
            prop_assert_eq!(inst.costs().cost(i, j), inst.costs().big_m());
        }
    }
}
