use curvlab::fixtures::{
    fixture_condition, fixture_dir, fixtures_to_json, generate_disc_fixtures, input_margin, load_fixtures, FIXTURE_CONDITIONS,
    FIXTURE_SEED, FIXTURES_PER_CONDITION,
};

/// The shipped files are exactly what the seeded generator writes.
#[test]
fn shipped_fixtures_regenerate_byte_for_byte() {
    for (stem, _, _) in FIXTURE_CONDITIONS {
        let c = fixture_condition(stem).unwrap();
        let list = generate_disc_fixtures(&c, FIXTURES_PER_CONDITION, FIXTURE_SEED).unwrap();
        let text = serde_json::to_string_pretty(&fixtures_to_json(&list).unwrap()).unwrap() + "\n";
        let shipped = std::fs::read_to_string(fixture_dir().join(format!("{stem}.json"))).unwrap();
        assert!(text == shipped, "{stem}.json is stale; regenerate with write_fixtures");
    }
}

#[test]
fn shipped_fixtures_lie_inside_their_condition() {
    for (stem, _, _) in FIXTURE_CONDITIONS {
        let c = fixture_condition(stem).unwrap();
        for (i, g) in load_fixtures(stem).unwrap().iter().enumerate() {
            assert!(input_margin(g, &c).unwrap() > 0.0, "{stem}[{i}]");
            g.beta.check_regularity(2048).unwrap();
        }
    }
    assert_eq!(load_fixtures("psc").unwrap().len(), FIXTURES_PER_CONDITION);
    assert_eq!(load_fixtures("p_curv1").unwrap().len(), FIXTURES_PER_CONDITION);
    // 3-posRic needs codimension 6 at n = 7, above q = 4: nothing qualifies
    assert!(load_fixtures("k_pos_ric3").unwrap().is_empty());
    assert!(load_fixtures("nope").is_err());
}
