use lie_poincare_demo::{lattice_json, su2_spectrum_json, tube_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn su2_unit_field_has_half_constant() {
    let v = parse(su2_spectrum_json("0,0,1", 12, 1.0).unwrap());
    assert_eq!(v["kind"], "demo-su2");
    assert_eq!(v["records"].as_array().unwrap().len(), 13);
    assert_eq!(v["verdict"], "pass");
    assert!((v["gate"]["empirical_c"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    // 2ℓ = 1: singular values |m| for m = ±1/2
    let sv = v["records"][1]["singular_values"].as_array().unwrap();
    assert!(sv.iter().all(|s| (s.as_f64().unwrap() - 0.5).abs() < 1e-12));
}

#[test]
fn golden_lattice_minimum_is_a_fibonacci_pair() {
    let v = parse(lattice_json("1,phi", 2.0, 1000.0).unwrap());
    let xi: Vec<i64> = serde_json::from_value(v["certificate"]["witness_xi"].clone()).unwrap();
    assert_eq!(xi.iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![610, 377]);
    assert_eq!(v["rational"], false);
}

#[test]
fn rational_direction_has_kernel_modes() {
    let v = parse(lattice_json("1,1/2", 2.0, 10.0).unwrap());
    assert_eq!(v["rational"], true);
    assert!(v["certificate"]["kernel_mode_count"].as_u64().unwrap() > 0);
}

#[test]
fn tube_transfers_the_mean_constant() {
    let v = parse(tube_json(r#"{"cos": [], "sin": [1], "const": "phi"}"#, 2.0, 1000, 1000.0).unwrap());
    assert_eq!(v["verdict"], "pass");
    let c = v["gate"]["empirical_c"].as_f64().unwrap();
    let t = v["transferred_c"].as_f64().unwrap();
    assert!(t > 0.0 && t < c);
}

#[test]
fn bad_input_is_an_error_not_a_panic() {
    assert!(su2_spectrum_json("1,0", 4, 1.0).is_err());
    assert!(su2_spectrum_json("1,0,0", 1000, 1.0).is_err());
    assert!(lattice_json("1,bogus", 2.0, 10.0).is_err());
    assert!(lattice_json("1,phi", 0.5, 10.0).is_err());
    assert!(lattice_json("1,phi", 2.0, 1e9).is_err());
    assert!(tube_json("{", 2.0, 10, 10.0).is_err());
    assert!(tube_json(r#"{"cos": [], "sin": [], "const": 1}"#, 2.0, 1e7 as u64, 10.0).is_err());
}
