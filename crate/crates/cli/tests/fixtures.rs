//! Every fixture file must equal what the library constructors produce.
//! Run with `ALGEBROID_KIT_BLESS=1` to rewrite them.

mod common;

use algebroid_core::schema::{algebroid_from_json, hamiltonian_from_json, system_from_json, MorphismDoc};

use common::*;

#[test]
fn fixtures_match_constructors() {
    let bless = std::env::var_os("ALGEBROID_KIT_BLESS").is_some();
    for (name, mut expected) in expected_fixtures() {
        expected.push('\n');
        if bless {
            std::fs::write(fixture_path(name), &expected).unwrap();
        }
        assert_eq!(read_fixture(name), expected, "{name} is stale; rerun with ALGEBROID_KIT_BLESS=1");
    }
}

#[test]
fn fixtures_load_back() {
    assert_eq!(algebroid_from_json(&read_fixture("nijenhuis1.json")).unwrap(), nijenhuis1());
    assert_eq!(algebroid_from_json(&read_fixture("almost_algebroid.json")).unwrap(), almost_algebroid());
    assert_eq!(algebroid_from_json(&read_fixture("symplectic.json")).unwrap(), symplectic());
    let doc: MorphismDoc = serde_json::from_str(&read_fixture("phi_nijenhuis.json")).unwrap();
    assert_eq!(doc.build(nijenhuis1().coords()).unwrap(), phi_nijenhuis());
    assert_eq!(system_from_json(&read_fixture("oscillator_tower3.json")).unwrap().depth(), 3);
    assert_eq!(hamiltonian_from_json(&read_fixture("oscillator2.json")).unwrap().rank(), 2);
}
