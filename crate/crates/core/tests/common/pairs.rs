//! Random prediction/gold answer pairs for the metrics.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEMS: &[&str] = &[
    "3",
    "3.0",
    "1,200",
    "-4",
    "2.50",
    "norway",
    "Norway",
    "new  york",
    "x",
];
const UNITS: &[(&str, &str)] = &[
    ("", ""),
    ("", " pts"),
    ("", "%"),
    ("$", ""),
    ("£", ""),
    ("", " years"),
    ("", "km"),
    ("", " KG"),
];

type Parts = (&'static str, &'static str, &'static str);

fn parts(rng: &mut ChaCha8Rng) -> Parts {
    let stem = STEMS.choose(rng).unwrap();
    let (pre, suf) = UNITS.choose(rng).unwrap();
    (pre, stem, suf)
}

fn render((pre, stem, suf): Parts) -> String {
    format!("{pre}{stem}{suf}")
}

fn answer(rng: &mut ChaCha8Rng) -> Vec<Parts> {
    let n = rng.random_range(0..=3);
    (0..n).map(|_| parts(rng)).collect()
}

/// `n` pairs; about half the predictions are a reshuffled, restyled gold.
pub fn pairs(seed: u64, n: usize) -> Vec<(Vec<String>, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let gold = answer(&mut rng);
            let mut pred: Vec<String> = if rng.random_bool(0.5) {
                // same stems, units sometimes dropped or swapped
                gold.iter()
                    .map(|&(pre, stem, suf)| match rng.random_range(0..4) {
                        0 => stem.to_string(),
                        1 => render((parts(&mut rng).0, stem, UNITS.choose(&mut rng).unwrap().1)),
                        _ => render((pre, stem, suf)),
                    })
                    .collect()
            } else {
                answer(&mut rng).into_iter().map(render).collect()
            };
            pred.shuffle(&mut rng);
            if let Some(x) = pred.first_mut() {
                if rng.random_bool(0.3) {
                    *x = x.to_uppercase();
                }
            }
            (pred, gold.into_iter().map(render).collect())
        })
        .collect()
}

pub fn shuffled(v: &[String], seed: u64) -> Vec<String> {
    let mut v = v.to_vec();
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    v
}
