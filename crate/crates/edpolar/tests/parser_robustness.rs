//! Deterministic byte-noise regression over the two untrusted-input parsers.
//! The fuzz targets under `fuzz/` drive the same entry points with coverage
//! feedback; this keeps a fast panic-freedom check in the ordinary test run.

use edpolar::polycore::{parse_polynomial, Ring};
use edpolar::problem::{parse_problem, validate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const POLY_SEEDS: &[&str] = &[
    "(x^2+y^2+x)^2 - (x^2+y^2)",
    "x - x",
    "3/4*x^2*y - 1/2",
    "-(x + y)^3",
    "x^99999999999",
    "((((x))))",
    "1/0",
];

const PROBLEM_SEEDS: &[&str] = &[
    "variables = [\"x\", \"y\"]\nvariety = [\"x^2 - y\"]\nfunction = \"x\"\n",
    "variables = []\n",
    "variables = [\"x\"]\nfunction = \"q\"\n",
    "variables = [\"x\"]\n[siersma]\nambient_dim = 2\nclk_reduced_chi = 0\nk = 3\n",
];

fn mutate(rng: &mut ChaCha8Rng, base: &str) -> Vec<u8> {
    let mut bytes = base.as_bytes().to_vec();
    for _ in 0..rng.gen_range(0..6) {
        match rng.gen_range(0..3) {
            0 if !bytes.is_empty() => {
                let i = rng.gen_range(0..bytes.len());
                bytes[i] = rng.gen();
            }
            1 => {
                let i = rng.gen_range(0..=bytes.len());
                bytes.insert(i, rng.gen());
            }
            _ if !bytes.is_empty() => {
                let i = rng.gen_range(0..bytes.len());
                bytes.remove(i);
            }
            _ => {}
        }
    }
    bytes
}

#[test]
fn polynomial_parser_never_panics() {
    let ring = Ring::new(vec!["x", "y", "z"]);
    let mut rng = ChaCha8Rng::seed_from_u64(0xf0cc);
    for round in 0..2000 {
        let base = POLY_SEEDS[round % POLY_SEEDS.len()];
        let bytes = mutate(&mut rng, base);
        if let Ok(text) = std::str::from_utf8(&bytes) {
            if let Ok(poly) = parse_polynomial(text, &ring) {
                let printed = poly.to_string();
                let again = parse_polynomial(&printed, &ring).expect("printed form reparses");
                assert_eq!(again, poly);
            }
        }
    }
}

#[test]
fn problem_loader_never_panics() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbeef);
    for round in 0..600 {
        let base = PROBLEM_SEEDS[round % PROBLEM_SEEDS.len()];
        let bytes = mutate(&mut rng, base);
        if let Ok(text) = std::str::from_utf8(&bytes) {
            if let Ok(file) = parse_problem(text) {
                let _ = validate(&file);
            }
        }
    }
}
