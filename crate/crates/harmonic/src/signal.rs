use serde::{Deserialize, Serialize};
use std::fmt;

/// Coordinate of a scalar signal inside its group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Coord {
    A,
    B,
    C,
    D,
    Q,
    Z,
    Dc,
}

/// Which truncation limit applies to a signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Domain {
    Hardware,
    Software,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signal {
    pub group: String,
    pub coord: Coord,
    pub domain: Domain,
}

impl Signal {
    pub fn new(group: impl Into<String>, coord: Coord, domain: Domain) -> Self {
        Self { group: group.into(), coord, domain }
    }

    pub fn abc(group: &str) -> Vec<Signal> {
        [Coord::A, Coord::B, Coord::C]
            .into_iter()
            .map(|c| Signal::new(group, c, Domain::Hardware))
            .collect()
    }

    pub fn dq(group: &str) -> Vec<Signal> {
        [Coord::D, Coord::Q]
            .into_iter()
            .map(|c| Signal::new(group, c, Domain::Software))
            .collect()
    }

    pub fn dc(group: &str, domain: Domain) -> Vec<Signal> {
        vec![Signal::new(group, Coord::Dc, domain)]
    }

    pub fn prefixed(&self, prefix: &str) -> Signal {
        Signal { group: format!("{prefix}.{}", self.group), ..self.clone() }
    }

    pub fn is_phase(&self) -> bool {
        matches!(self.coord, Coord::A | Coord::B | Coord::C)
    }

    pub fn is_rotating(&self) -> bool {
        matches!(self.coord, Coord::D | Coord::Q)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Coord::A => "a",
            Coord::B => "b",
            Coord::C => "c",
            Coord::D => "d",
            Coord::Q => "q",
            Coord::Z => "z",
            Coord::Dc => "dc",
        };
        f.write_str(s)
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.group, self.coord)
    }
}

/// Lifted dimension of each signal and the running offsets.
pub fn lifted_offsets(signals: &[Signal], range: impl Fn(&Signal) -> usize) -> (Vec<usize>, usize) {
    let mut offs = Vec::with_capacity(signals.len());
    let mut acc = 0;
    for s in signals {
        offs.push(acc);
        acc += 2 * range(s) + 1;
    }
    (offs, acc)
}
