//! Small machines used by the tests, the examples and `noisy-dynamics embed --fixture`.

use serde_json::json;

use super::TuringMachine;

fn build(v: serde_json::Value) -> TuringMachine {
    TuringMachine::from_json(&v).expect("fixture is valid")
}

/// Accepts after two steps; `L = 1`, `S = 8`.
pub fn accept_fast() -> TuringMachine {
    build(json!({
        "controls": ["q0", "q1", "acc", "rej"],
        "initial": "q0", "accept": "acc", "reject": "rej",
        "tape_length": 1, "tape_init": "0",
        "delta": {
            "q0,0": ["q1", "1", "S"], "q0,1": ["acc", "1", "S"],
            "q1,0": ["rej", "0", "S"], "q1,1": ["acc", "1", "S"]
        }
    }))
}

/// Rejects on its first step; `L = 1`, `S = 6`.
pub fn reject_now() -> TuringMachine {
    build(json!({
        "controls": ["q0", "acc", "rej"],
        "initial": "q0", "accept": "acc", "reject": "rej",
        "tape_length": 1,
        "delta": { "q0,0": ["rej", "0", "S"], "q0,1": ["rej", "1", "S"] }
    }))
}

/// Flips its only cell forever; `L = 1`, `S = 6`.
pub fn looper() -> TuringMachine {
    build(json!({
        "controls": ["q0", "acc", "rej"],
        "initial": "q0", "accept": "acc", "reject": "rej",
        "tape_length": 1,
        "delta": { "q0,0": ["q0", "1", "S"], "q0,1": ["q0", "0", "S"] }
    }))
}

/// Fills the tape with ones, steps back and accepts after four steps;
/// `L = 2`, `S = 32`.
pub fn fill_then_accept() -> TuringMachine {
    build(json!({
        "controls": ["q0", "q1", "acc", "rej"],
        "initial": "q0", "accept": "acc", "reject": "rej",
        "tape_length": 2, "tape_init": "00",
        "delta": {
            "q0,0": ["q0", "1", "R"], "q0,1": ["q1", "1", "L"],
            "q1,0": ["rej", "0", "S"], "q1,1": ["acc", "1", "S"]
        }
    }))
}

/// Every fixture with its name.
pub fn all() -> Vec<(&'static str, TuringMachine)> {
    vec![
        ("accept_fast", accept_fast()),
        ("reject_now", reject_now()),
        ("looper", looper()),
        ("fill_then_accept", fill_then_accept()),
    ]
}

pub fn by_name(name: &str) -> Option<TuringMachine> {
    all().into_iter().find(|(n, _)| *n == name).map(|(_, m)| m)
}
