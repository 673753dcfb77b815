use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::{Action, EventLog};

use super::DiscoveryError;

/// Directly-follows relation of a log with occurrence counts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DirectlyFollowsGraph {
    pub nodes: BTreeSet<Action>,
    pub edges: BTreeMap<(Action, Action), usize>,
    pub start_activities: BTreeMap<Action, usize>,
    pub end_activities: BTreeMap<Action, usize>,
}

impl DirectlyFollowsGraph {
    pub fn from_sequences<'a, I>(traces: I) -> Self
    where
        I: IntoIterator<Item = &'a [Action]>,
    {
        let mut g = Self::default();
        for t in traces {
            let (Some(first), Some(last)) = (t.first(), t.last()) else {
                continue;
            };
            *g.start_activities.entry(first.clone()).or_insert(0) += 1;
            *g.end_activities.entry(last.clone()).or_insert(0) += 1;
            g.nodes.extend(t.iter().cloned());
            for w in t.windows(2) {
                *g.edges.entry((w[0].clone(), w[1].clone())).or_insert(0) += 1;
            }
        }
        g
    }

    pub fn edge_count(&self, a: &Action, b: &Action) -> usize {
        self.edges
            .get(&(a.clone(), b.clone()))
            .copied()
            .unwrap_or(0)
    }
}

/// Builds the directly-follows graph of `log`.
pub fn build_dfg(log: &EventLog) -> Result<DirectlyFollowsGraph, DiscoveryError> {
    if log.traces.iter().all(|t| t.is_empty()) {
        return Err(DiscoveryError::EmptyLog(log.process_id.clone()));
    }
    Ok(DirectlyFollowsGraph::from_sequences(
        log.traces.iter().map(|t| t.actions.as_slice()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Trace;

    fn log(traces: &[&[&str]]) -> EventLog {
        EventLog::new(
            "p",
            vec![],
            traces
                .iter()
                .enumerate()
                .map(|(i, t)| Trace::from_names(i.to_string(), t.iter()).unwrap())
                .collect(),
        )
    }

    fn a(n: &str) -> Action {
        Action::new(n).unwrap()
    }

    #[test]
    fn single_trace() {
        let g = build_dfg(&log(&[&["A", "B"]])).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.edge_count(&a("A"), &a("B")), 1);
        assert_eq!(g.start_activities.keys().collect::<Vec<_>>(), vec![&a("A")]);
        assert_eq!(g.end_activities.keys().collect::<Vec<_>>(), vec![&a("B")]);
    }

    #[test]
    fn both_directions() {
        let g = build_dfg(&log(&[&["A", "B"], &["B", "A"]])).unwrap();
        assert_eq!(g.edge_count(&a("A"), &a("B")), 1);
        assert_eq!(g.edge_count(&a("B"), &a("A")), 1);
    }

    #[test]
    fn four_variant_fixture_hand_count() {
        // Hand count:
        //   ABCD: AB BC CD     ACBD: AC CB BD
        //   ABCD again         ABD : AB BD
        let g = build_dfg(&log(&[
            &["A", "B", "C", "D"],
            &["A", "C", "B", "D"],
            &["A", "B", "C", "D"],
            &["A", "B", "D"],
        ]))
        .unwrap();
        let expect = [
            (("A", "B"), 3),
            (("B", "C"), 2),
            (("C", "D"), 2),
            (("A", "C"), 1),
            (("C", "B"), 1),
            (("B", "D"), 2),
        ];
        assert_eq!(g.edges.len(), expect.len());
        for ((x, y), n) in expect {
            assert_eq!(g.edge_count(&a(x), &a(y)), n, "{x}->{y}");
        }
        assert_eq!(g.start_activities[&a("A")], 4);
        assert_eq!(g.end_activities[&a("D")], 4);
    }

    #[test]
    fn empty_log_rejected() {
        assert!(matches!(
            build_dfg(&log(&[])),
            Err(DiscoveryError::EmptyLog(_))
        ));
        assert!(matches!(
            build_dfg(&log(&[&[]])),
            Err(DiscoveryError::EmptyLog(_))
        ));
    }
}
