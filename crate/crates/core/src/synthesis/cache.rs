use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::abstraction::{SymAbstraction, SymState};

/// Per abstract state, controls ranked by how often they worked for its cells.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Cache {
    entries: BTreeMap<SymState, Vec<(u32, u32)>>,
}

impl Cache {
    /// One `(0, a*)` entry per `(j, a*)` state.
    pub fn new(sym: &SymAbstraction) -> Self {
        let entries = sym
            .pairs()
            .into_iter()
            .map(|s| match s {
                SymState::Pair { a, .. } => (s, vec![(0, a)]),
                _ => unreachable!("pairs only"),
            })
            .collect();
        Self { entries }
    }

    pub fn from_entries(entries: BTreeMap<SymState, Vec<(u32, u32)>>) -> Self {
        let mut c = Self { entries };
        for list in c.entries.values_mut() {
            sort_list(list);
        }
        c
    }

    /// `(score, control)` pairs, best first.
    pub fn list(&self, s: SymState) -> &[(u32, u32)] {
        self.entries.get(&s).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn entries(&self) -> &BTreeMap<SymState, Vec<(u32, u32)>> {
        &self.entries
    }

    /// Credits `a` for state `s`, inserting it with score 1 if new.
    pub fn update(&mut self, s: SymState, a: u32) {
        let list = self.entries.entry(s).or_default();
        match list.iter_mut().find(|(_, c)| *c == a) {
            Some(e) => e.0 += 1,
            None => list.push((1, a)),
        }
        sort_list(list);
    }

    /// Min, mean, median and max list length over all states.
    pub fn length_stats(&self) -> Option<(usize, f64, f64, usize)> {
        let mut lens: Vec<usize> = self.entries.values().map(Vec::len).collect();
        if lens.is_empty() {
            return None;
        }
        lens.sort_unstable();
        let n = lens.len();
        let mean = lens.iter().sum::<usize>() as f64 / n as f64;
        let median = if n % 2 == 1 { lens[n / 2] as f64 } else { 0.5 * (lens[n / 2 - 1] + lens[n / 2]) as f64 };
        Some((lens[0], mean, median, lens[n - 1]))
    }
}

fn sort_list(list: &mut [(u32, u32)]) {
    list.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: SymState = SymState::Pair { j: 0, a: 0 };

    fn with(list: Vec<(u32, u32)>) -> Cache {
        Cache::from_entries([(S, list)].into_iter().collect())
    }

    #[test]
    fn increments_existing() {
        let mut c = with(vec![(0, 0)]);
        c.update(S, 0);
        assert_eq!(c.list(S), &[(1, 0)]);
    }

    #[test]
    fn inserts_below() {
        let mut c = with(vec![(2, 0)]);
        c.update(S, 1);
        assert_eq!(c.list(S), &[(2, 0), (1, 1)]);
    }

    #[test]
    fn reorders_on_tie_break() {
        let mut c = with(vec![(2, 0), (2, 1)]);
        c.update(S, 1);
        assert_eq!(c.list(S), &[(3, 1), (2, 0)]);
    }

    #[test]
    fn stats() {
        let mut c = with(vec![(0, 5)]);
        let t = SymState::Pair { j: 0, a: 9 };
        c.update(t, 1);
        c.update(t, 2);
        c.update(t, 3);
        assert_eq!(c.length_stats(), Some((1, 2.0, 2.0, 3)));
    }
}
