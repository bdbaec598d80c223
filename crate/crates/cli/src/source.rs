//! State sources: a JSON file, a bundled fixture, or a generator spec.
//!
//! ```text
//! path/to/state.json
//! fixture:w1
//! haar_pure:dim=4:seed=7
//! hs_mixed:dim=3:seed=1
//! rank_limited:dim=4:rank=2:seed=3
//! maximally_mixed:dim=3
//! diag:0.25,0.75
//! ```

use std::collections::HashMap;

use divergelab::matcore::ComplexMatrix;
use divergelab::states::{sample_state, DensityMatrix, StateKind};
use divergelab::{Error, Result};

pub const FIXTURES: [(&str, &str); 6] = [
    ("w1", include_str!("../fixtures/w1.json")),
    ("w2", include_str!("../fixtures/w2.json")),
    ("p_plus", include_str!("../fixtures/p_plus.json")),
    ("p_minus", include_str!("../fixtures/p_minus.json")),
    ("rho1_n2", include_str!("../fixtures/rho1_n2.json")),
    ("rho2_n2", include_str!("../fixtures/rho2_n2.json")),
];

const GENERATORS: [&str; 6] = ["fixture", "haar_pure", "hs_mixed", "rank_limited", "maximally_mixed", "diag"];

pub fn fixture(name: &str) -> Result<DensityMatrix> {
    let (_, text) =
        FIXTURES.iter().find(|(n, _)| *n == name).ok_or_else(|| Error::Parse(format!("unknown fixture {name:?}")))?;
    DensityMatrix::new(ComplexMatrix::from_json_str(text)?)
}

fn params(parts: &[&str]) -> Result<HashMap<String, String>> {
    parts
        .iter()
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {p:?}")))
        })
        .collect()
}

fn number<T: std::str::FromStr>(map: &HashMap<String, String>, key: &str, default: Option<T>) -> Result<T> {
    match map.get(key) {
        Some(v) => v.parse().map_err(|_| Error::Parse(format!("bad value for {key}: {v:?}"))),
        None => default.ok_or_else(|| Error::Parse(format!("missing {key}="))),
    }
}

pub fn load_state(source: &str) -> Result<DensityMatrix> {
    let head = source.split(':').next().unwrap_or_default();
    if !source.contains(':') || !GENERATORS.contains(&head) {
        let text = std::fs::read_to_string(source).map_err(|e| Error::Parse(format!("{source}: {e}")))?;
        return DensityMatrix::new(ComplexMatrix::from_json_str(&text)?);
    }
    let rest = &source[head.len() + 1..];
    match head {
        "fixture" => fixture(rest),
        "diag" => {
            let probs = rest
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad diagonal entry {x:?}"))))
                .collect::<Result<Vec<_>>>()?;
            DensityMatrix::from_diagonal(&probs)
        }
        _ => {
            let parts: Vec<&str> = rest.split(':').filter(|p| !p.is_empty()).collect();
            let map = params(&parts)?;
            let dim: usize = number(&map, "dim", None)?;
            if head == "maximally_mixed" {
                return Ok(DensityMatrix::maximally_mixed(dim));
            }
            let seed: u64 = number(&map, "seed", Some(0))?;
            let kind = match head {
                "haar_pure" => StateKind::HaarPure,
                "hs_mixed" => StateKind::HsMixed,
                _ => StateKind::RankLimited(number(&map, "rank", None)?),
            };
            sample_state(dim, kind, seed)
        }
    }
}
