//! Small named graphs used throughout the tests and the CLI.
//!
//! Tuples below read `(edge id, range, source, weight)`.

use crate::graph::GraphBimodule;

/// One vertex with `n` loops `a, b, c, …`; its graph algebra is the Cuntz algebra `O_n`.
pub fn cuntz(n: usize) -> GraphBimodule {
    assert!(n >= 1, "O_n needs at least one loop");
    let ids: Vec<String> = (0..n).map(loop_name).collect();
    GraphBimodule::new(
        vec!["o"],
        ids.iter().map(|id| (id.as_str(), "o", "o", 1.0)).collect(),
    )
    .expect("valid Cuntz graph")
}

fn loop_name(i: usize) -> String {
    if i < 26 {
        char::from(b'a' + i as u8).to_string()
    } else {
        format!("x{i}")
    }
}

/// Loop `e` at `v`, edge `f` from `v` to `w`, loop `g` at `w`.
pub fn suq2() -> GraphBimodule {
    GraphBimodule::new(
        vec!["v", "w"],
        vec![("e", "v", "v", 1.0), ("f", "w", "v", 1.0), ("g", "w", "w", 1.0)],
    )
    .expect("valid SU_q(2) graph")
}

/// Vertices `u, v` with adjacency `[[1,1],[1,0]]`: loop `a` at `u`, `b` from `v` to `u`,
/// `c` from `u` to `v`.
pub fn fibonacci() -> GraphBimodule {
    GraphBimodule::new(
        vec!["u", "v"],
        vec![("a", "u", "u", 1.0), ("b", "u", "v", 1.0), ("c", "v", "u", 1.0)],
    )
    .expect("valid Fibonacci graph")
}

/// The Fibonacci graph with non-unit left weights.
pub fn weighted_fibonacci() -> GraphBimodule {
    GraphBimodule::new(
        vec!["u", "v"],
        vec![("a", "u", "u", 2.5), ("b", "u", "v", 0.5), ("c", "v", "u", 1.5)],
    )
    .expect("valid weighted graph")
}

/// Primitive graph with the non-symmetric adjacency `[[1,2],[1,0]]`.
pub fn skew_primitive() -> GraphBimodule {
    GraphBimodule::new(
        vec!["u", "v"],
        vec![
            ("a", "u", "u", 1.0),
            ("b1", "u", "v", 1.0),
            ("b2", "u", "v", 1.0),
            ("c", "v", "u", 1.0),
        ],
    )
    .expect("valid graph")
}

/// Cycle on `n` vertices: edge `t{i}` from `p{i}` to `p{i+1}`.
pub fn permutation(n: usize) -> GraphBimodule {
    assert!(n >= 1);
    let vs: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let ids: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
    GraphBimodule::new(
        vs.clone(),
        (0..n)
            .map(|i| (ids[i].as_str(), vs[(i + 1) % n].as_str(), vs[i].as_str(), 1.0))
            .collect(),
    )
    .expect("valid cycle")
}

/// One vertex, one loop: `E = A = C`.
pub fn single_loop() -> GraphBimodule {
    GraphBimodule::new(vec!["o"], vec![("a", "o", "o", 1.0)]).expect("valid loop")
}

/// Two vertices, each with its own loop and no edges between them.
pub fn two_loops() -> GraphBimodule {
    GraphBimodule::new(vec!["x", "y"], vec![("a", "x", "x", 1.0), ("b", "y", "y", 1.0)])
        .expect("valid graph")
}

/// Named catalog entries, as accepted by the CLI's `--builtin` flag.
pub fn by_name(name: &str) -> Option<GraphBimodule> {
    match name {
        "o2" => Some(cuntz(2)),
        "o3" => Some(cuntz(3)),
        "suq2" => Some(suq2()),
        "fibonacci" => Some(fibonacci()),
        "weighted-fibonacci" => Some(weighted_fibonacci()),
        "skew-primitive" => Some(skew_primitive()),
        "two-loops" => Some(two_loops()),
        "single-loop" => Some(single_loop()),
        "cycle3" => Some(permutation(3)),
        _ => None,
    }
}

pub const NAMES: &[&str] = &[
    "o2",
    "o3",
    "suq2",
    "fibonacci",
    "weighted-fibonacci",
    "skew-primitive",
    "two-loops",
    "single-loop",
    "cycle3",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_named_graphs_have_no_sources_or_sinks() {
        for name in NAMES {
            by_name(name).unwrap().require_no_sources_or_sinks().unwrap();
        }
    }
}
