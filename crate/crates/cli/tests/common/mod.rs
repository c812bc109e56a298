//! The fixture files and the library constructors they are generated from.

#![allow(dead_code)]

use std::path::PathBuf;

use algebroid_core::algebroid::{poisson_cotangent_algebroid, tangent_algebroid, uniform_box};
use algebroid_core::limits::{oscillator_tower, tangent_tower};
use algebroid_core::mechanics::harmonic_oscillator_system;
use algebroid_core::schema::{algebroid_to_json, system_to_json, HamiltonianDoc, MorphismDoc};
use algebroid_core::{Algebroid, BundleMorphism, CheckConfig, Expr};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn nijenhuis1() -> Algebroid {
    oscillator_tower(1, &CheckConfig::default()).unwrap().levels()[0].clone()
}

pub fn almost_algebroid() -> Algebroid {
    let (one, zero) = (Expr::one(), Expr::zero());
    Algebroid::new(
        vec![vec![one.clone(), zero.clone()], vec![zero, one]],
        vec![(0, 1, 0, Expr::var(0))],
        uniform_box(2, -1.5, 1.5),
    )
    .unwrap()
}

pub fn symplectic() -> Algebroid {
    let c = Expr::constant;
    let lambda = vec![vec![c(0.0), c(1.0)], vec![c(-1.0), c(0.0)]];
    poisson_cotangent_algebroid(lambda, uniform_box(2, -1.0, 1.0), &CheckConfig::default()).unwrap().value
}

pub fn phi_nijenhuis() -> BundleMorphism {
    let n = nijenhuis1();
    BundleMorphism::new(vec![Expr::var(0), Expr::var(1)], n.anchor_rows().to_vec()).unwrap()
}

pub fn phi_double() -> BundleMorphism {
    let (two, zero) = (Expr::constant(2.0), Expr::zero());
    BundleMorphism::new(vec![Expr::var(0), Expr::var(1)], vec![vec![two.clone(), zero.clone()], vec![zero, two]]).unwrap()
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).unwrap()
}

/// File name and expected contents of every fixture.
pub fn expected_fixtures() -> Vec<(&'static str, String)> {
    let names = nijenhuis1().coords().to_vec();
    let euler = serde_json::json!({
        "kind": "fields",
        "levels": (1..=4).map(|n| (1..=n).map(|i| format!("x{i}")).collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    vec![
        ("tangent3.json", algebroid_to_json(&tangent_algebroid(3, uniform_box(3, -1.0, 1.0)).unwrap())),
        ("tangent2.json", algebroid_to_json(&tangent_algebroid(2, uniform_box(2, -1.5, 1.5)).unwrap())),
        ("nijenhuis1.json", algebroid_to_json(&nijenhuis1())),
        ("symplectic.json", algebroid_to_json(&symplectic())),
        ("almost_algebroid.json", algebroid_to_json(&almost_algebroid())),
        ("fiber2.json", pretty(&serde_json::json!({ "fiber_dim": 2 }))),
        ("phi_nijenhuis.json", pretty(&MorphismDoc::from_morphism(&phi_nijenhuis(), &names))),
        ("phi_double.json", pretty(&MorphismDoc::from_morphism(&phi_double(), &names))),
        ("tangent_tower4.json", system_to_json(&tangent_tower(4).unwrap())),
        ("oscillator_tower3.json", system_to_json(&oscillator_tower(3, &CheckConfig::default()).unwrap())),
        ("euler_family4.json", pretty(&euler)),
        ("oscillator2.json", pretty(&HamiltonianDoc::from_system(&harmonic_oscillator_system(2).unwrap()))),
    ]
}
