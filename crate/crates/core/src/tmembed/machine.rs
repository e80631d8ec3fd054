use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::TmError;

/// Default cap on the configuration count `S`.
pub const CONFIG_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Left,
    Right,
    Stay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub next: usize,
    pub write: bool,
    pub mv: Move,
}

/// A binary-tape machine with a fixed tape of length `L`. Moves past either
/// end of the tape leave the head where it is.
#[derive(Debug, Clone, PartialEq)]
pub struct TuringMachine {
    pub controls: Vec<String>,
    pub initial: usize,
    pub accept: usize,
    pub reject: usize,
    pub tape_length: usize,
    pub tape_init: Vec<bool>,
    /// Indexed by `(control, symbol)`; halting controls have no entries.
    pub delta: BTreeMap<(usize, bool), Transition>,
}

/// A full machine configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Config {
    pub control: usize,
    pub head: usize,
    /// Cell `i` is bit `i`.
    pub tape: u64,
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, TmError> {
    v.get(key).ok_or_else(|| TmError::Invalid(format!("missing \"{key}\"")))
}

fn bit(s: &str, what: &str) -> Result<bool, TmError> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(TmError::Invalid(format!("{what}: expected \"0\" or \"1\", got {s:?}"))),
    }
}

impl TuringMachine {
    pub fn from_json(v: &Value) -> Result<Self, TmError> {
        let controls: Vec<String> = field(v, "controls")?
            .as_array()
            .ok_or_else(|| TmError::Invalid("\"controls\" must be an array".into()))?
            .iter()
            .map(|c| c.as_str().map(str::to_owned).ok_or_else(|| TmError::Invalid("control names must be strings".into())))
            .collect::<Result<_, _>>()?;
        let index = |key: &str| -> Result<usize, TmError> {
            let name = field(v, key)?
                .as_str()
                .ok_or_else(|| TmError::Invalid(format!("\"{key}\" must be a control name")))?;
            controls
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| TmError::Invalid(format!("\"{key}\": unknown control {name:?}")))
        };
        let (initial, accept, reject) = (index("initial")?, index("accept")?, index("reject")?);
        let tape_length = field(v, "tape_length")?
            .as_u64()
            .ok_or_else(|| TmError::Invalid("\"tape_length\" must be a positive integer".into()))? as usize;
        let init = v.get("tape_init").and_then(Value::as_str).unwrap_or("");
        let mut tape_init = init.chars().map(|c| bit(&c.to_string(), "tape_init")).collect::<Result<Vec<_>, _>>()?;
        if tape_init.len() > tape_length {
            return Err(TmError::Invalid("tape_init is longer than the tape".into()));
        }
        tape_init.resize(tape_length, false);
        let mut delta = BTreeMap::new();
        let table = field(v, "delta")?
            .as_object()
            .ok_or_else(|| TmError::Invalid("\"delta\" must be an object".into()))?;
        for (key, val) in table {
            let (q, s) = key
                .split_once(',')
                .ok_or_else(|| TmError::Invalid(format!("delta key {key:?} is not \"state,symbol\"")))?;
            let q = controls
                .iter()
                .position(|c| c == q.trim())
                .ok_or_else(|| TmError::Invalid(format!("delta key {key:?}: unknown control")))?;
            let s = bit(s.trim(), "delta symbol")?;
            let arr = val
                .as_array()
                .filter(|a| a.len() == 3)
                .ok_or_else(|| TmError::Invalid(format!("delta[{key:?}] must be [state, write, move]")))?;
            let strs: Vec<&str> = arr
                .iter()
                .map(|x| x.as_str().ok_or_else(|| TmError::Invalid(format!("delta[{key:?}] entries must be strings"))))
                .collect::<Result<_, _>>()?;
            let next = controls
                .iter()
                .position(|c| c == strs[0])
                .ok_or_else(|| TmError::Invalid(format!("delta[{key:?}]: unknown control {:?}", strs[0])))?;
            let mv = match strs[2] {
                "L" => Move::Left,
                "R" => Move::Right,
                "S" => Move::Stay,
                m => return Err(TmError::Invalid(format!("delta[{key:?}]: move {m:?} is not L, R or S"))),
            };
            delta.insert((q, s), Transition { next, write: bit(strs[1], "delta write")?, mv });
        }
        let tm = TuringMachine { controls, initial, accept, reject, tape_length, tape_init, delta };
        tm.validate()?;
        Ok(tm)
    }

    pub fn to_json(&self) -> Value {
        let mut delta = serde_json::Map::new();
        for (&(q, s), t) in &self.delta {
            let mv = match t.mv {
                Move::Left => "L",
                Move::Right => "R",
                Move::Stay => "S",
            };
            delta.insert(
                format!("{},{}", self.controls[q], u8::from(s)),
                json!([self.controls[t.next], if t.write { "1" } else { "0" }, mv]),
            );
        }
        json!({
            "controls": self.controls,
            "initial": self.controls[self.initial],
            "accept": self.controls[self.accept],
            "reject": self.controls[self.reject],
            "tape_length": self.tape_length,
            "tape_init": self.tape_init.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>(),
            "delta": delta,
        })
    }

    pub fn validate(&self) -> Result<(), TmError> {
        if self.tape_length == 0 || self.tape_length > 32 {
            return Err(TmError::Invalid("tape_length must lie in 1..=32".into()));
        }
        if self.accept == self.reject {
            return Err(TmError::Invalid("accept and reject must differ".into()));
        }
        for q in 0..self.controls.len() {
            if self.is_halting(q) {
                continue;
            }
            for s in [false, true] {
                if !self.delta.contains_key(&(q, s)) {
                    return Err(TmError::Invalid(format!(
                        "no transition for ({}, {})",
                        self.controls[q],
                        u8::from(s)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_halting(&self, q: usize) -> bool {
        q == self.accept || q == self.reject
    }

    pub fn initial_config(&self) -> Config {
        let tape = self.tape_init.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i));
        Config { control: self.initial, head: 0, tape }
    }

    /// One step from a non-halting configuration.
    pub fn step(&self, c: Config) -> Config {
        let sym = (c.tape >> c.head) & 1 == 1;
        let t = self.delta[&(c.control, sym)];
        let tape = if t.write { c.tape | (1 << c.head) } else { c.tape & !(1 << c.head) };
        let head = match t.mv {
            Move::Left => c.head.saturating_sub(1),
            Move::Right => (c.head + 1).min(self.tape_length - 1),
            Move::Stay => c.head,
        };
        Config { control: t.next, head, tape }
    }
}

/// Bijection between configurations and `0..S`: control-major, then head,
/// then the tape read as a binary integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEncoding {
    pub controls: usize,
    pub tape_length: usize,
}

impl ConfigEncoding {
    pub fn size(&self) -> usize {
        self.controls * self.tape_length << self.tape_length
    }

    pub fn encode(&self, c: Config) -> usize {
        (c.control * self.tape_length + c.head) << self.tape_length | c.tape as usize
    }

    pub fn decode(&self, k: usize) -> Config {
        let tape = (k & ((1 << self.tape_length) - 1)) as u64;
        let rest = k >> self.tape_length;
        Config { control: rest / self.tape_length, head: rest % self.tape_length, tape }
    }
}

/// Configuration count and encoding, refusing machines with more than `cap`.
pub fn enumerate_configs(tm: &TuringMachine, cap: usize) -> Result<ConfigEncoding, TmError> {
    let enc = ConfigEncoding { controls: tm.controls.len(), tape_length: tm.tape_length };
    let s = (tm.controls.len() as u128) * (tm.tape_length as u128) << tm.tape_length;
    if s > cap as u128 {
        return Err(TmError::ConfigCap { needed: s, cap });
    }
    Ok(enc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Accept { steps: usize },
    Reject { steps: usize },
    /// Still running after the step budget.
    Running,
}

/// Run from the initial configuration for at most `max_steps` steps.
pub fn simulate_machine(tm: &TuringMachine, max_steps: usize) -> RunOutcome {
    let mut c = tm.initial_config();
    for steps in 0..=max_steps {
        if c.control == tm.accept {
            return RunOutcome::Accept { steps };
        }
        if c.control == tm.reject {
            return RunOutcome::Reject { steps };
        }
        if steps == max_steps {
            break;
        }
        c = tm.step(c);
    }
    RunOutcome::Running
}
