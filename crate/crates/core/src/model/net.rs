use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Action;

/// Token counts per place. Places with no tokens are not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Marking(BTreeMap<String, u32>);

impl Marking {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(place: impl Into<String>) -> Self {
        let mut m = Self::new();
        m.add(place, 1);
        m
    }

    pub fn get(&self, place: &str) -> u32 {
        self.0.get(place).copied().unwrap_or(0)
    }

    pub fn add(&mut self, place: impl Into<String>, count: u32) {
        if count == 0 {
            return;
        }
        *self.0.entry(place.into()).or_insert(0) += count;
    }

    pub fn set(&mut self, place: impl Into<String>, count: u32) {
        let place = place.into();
        if count == 0 {
            self.0.remove(&place);
        } else {
            self.0.insert(place, count);
        }
    }

    pub fn total(&self) -> u64 {
        self.0.values().map(|&c| u64::from(c)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(p, &c)| (p.as_str(), c))
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

impl<S: Into<String>> FromIterator<(S, u32)> for Marking {
    fn from_iter<T: IntoIterator<Item = (S, u32)>>(iter: T) -> Self {
        let mut m = Marking::new();
        for (p, c) in iter {
            m.add(p, c);
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub id: String,
    /// `None` marks a silent transition.
    pub label: Option<Action>,
}

impl Transition {
    pub fn visible(id: impl Into<String>, label: Action) -> Self {
        Self {
            id: id.into(),
            label: Some(label),
        }
    }

    pub fn silent(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: None,
        }
    }

    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }
}

/// A directed arc between a place and a transition, in either direction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NetArc {
    pub from: String,
    pub to: String,
}

impl NetArc {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PetriNet {
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
    pub arcs: Vec<NetArc>,
    pub initial_marking: Marking,
    pub final_marking: Marking,
}

impl PetriNet {
    pub fn transition(&self, id: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.id == id)
    }

    pub fn visible_transition_count(&self) -> usize {
        self.transitions.iter().filter(|t| !t.is_silent()).count()
    }

    pub fn silent_transition_count(&self) -> usize {
        self.transitions.iter().filter(|t| t.is_silent()).count()
    }

    /// Visible labels, sorted and de-duplicated.
    pub fn alphabet(&self) -> Vec<Action> {
        let set: std::collections::BTreeSet<&Action> = self
            .transitions
            .iter()
            .filter_map(|t| t.label.as_ref())
            .collect();
        set.into_iter().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateNode {
        id: String,
    },
    DanglingArc {
        from: String,
        to: String,
    },
    ArcBetweenSameKind {
        from: String,
        to: String,
    },
    DuplicateArc {
        from: String,
        to: String,
    },
    SourcePlaceCount {
        found: Vec<String>,
    },
    SinkPlaceCount {
        found: Vec<String>,
    },
    NotOnSourceSinkPath {
        id: String,
    },
    UnknownMarkedPlace {
        marking: &'static str,
        place: String,
    },
    InitialMarking,
    FinalMarking,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNode { id } => write!(f, "node id '{id}' is used more than once"),
            Violation::DanglingArc { from, to } => {
                write!(
                    f,
                    "arc {from} -> {to} references a node that does not exist"
                )
            }
            Violation::ArcBetweenSameKind { from, to } => {
                write!(f, "arc {from} -> {to} connects two nodes of the same kind")
            }
            Violation::DuplicateArc { from, to } => write!(f, "arc {from} -> {to} appears twice"),
            Violation::SourcePlaceCount { found } => {
                write!(f, "expected exactly one source place, found {found:?}")
            }
            Violation::SinkPlaceCount { found } => {
                write!(f, "expected exactly one sink place, found {found:?}")
            }
            Violation::NotOnSourceSinkPath { id } => {
                write!(f, "node '{id}' is not on a path from source to sink")
            }
            Violation::UnknownMarkedPlace { marking, place } => {
                write!(f, "{marking} marking references unknown place '{place}'")
            }
            Violation::InitialMarking => {
                write!(
                    f,
                    "initial marking must be exactly one token on the source place"
                )
            }
            Violation::FinalMarking => {
                write!(
                    f,
                    "final marking must be exactly one token on the sink place"
                )
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&msgs.join("; "))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Place,
    Transition,
}

/// Checks the workflow-net invariants. An empty report means the net is valid.
pub fn validate_net(net: &PetriNet) -> ValidationReport {
    let mut violations = Vec::new();
    let mut kinds: HashMap<&str, Kind> = HashMap::new();
    for p in &net.places {
        if kinds.insert(p, Kind::Place).is_some() {
            violations.push(Violation::DuplicateNode { id: p.clone() });
        }
    }
    for t in &net.transitions {
        if kinds.insert(&t.id, Kind::Transition).is_some() {
            violations.push(Violation::DuplicateNode { id: t.id.clone() });
        }
    }

    let mut seen_arcs = HashSet::new();
    let mut succ: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut pred: HashMap<&str, Vec<&str>> = HashMap::new();
    for arc in &net.arcs {
        match (kinds.get(arc.from.as_str()), kinds.get(arc.to.as_str())) {
            (Some(a), Some(b)) if a == b => violations.push(Violation::ArcBetweenSameKind {
                from: arc.from.clone(),
                to: arc.to.clone(),
            }),
            (Some(_), Some(_)) => {
                if !seen_arcs.insert((arc.from.as_str(), arc.to.as_str())) {
                    violations.push(Violation::DuplicateArc {
                        from: arc.from.clone(),
                        to: arc.to.clone(),
                    });
                    continue;
                }
                succ.entry(&arc.from).or_default().push(&arc.to);
                pred.entry(&arc.to).or_default().push(&arc.from);
            }
            _ => violations.push(Violation::DanglingArc {
                from: arc.from.clone(),
                to: arc.to.clone(),
            }),
        }
    }

    let sources: Vec<&String> = net
        .places
        .iter()
        .filter(|p| !pred.contains_key(p.as_str()))
        .collect();
    let sinks: Vec<&String> = net
        .places
        .iter()
        .filter(|p| !succ.contains_key(p.as_str()))
        .collect();
    if sources.len() != 1 {
        violations.push(Violation::SourcePlaceCount {
            found: sources.iter().map(|s| s.to_string()).collect(),
        });
    }
    if sinks.len() != 1 {
        violations.push(Violation::SinkPlaceCount {
            found: sinks.iter().map(|s| s.to_string()).collect(),
        });
    }

    if let ([source], [sink]) = (sources.as_slice(), sinks.as_slice()) {
        let forward = reach(source, &succ);
        let backward = reach(sink, &pred);
        let all = net
            .places
            .iter()
            .map(String::as_str)
            .chain(net.transitions.iter().map(|t| t.id.as_str()));
        let mut reported = HashSet::new();
        for id in all {
            if (!forward.contains(id) || !backward.contains(id)) && reported.insert(id) {
                violations.push(Violation::NotOnSourceSinkPath { id: id.to_owned() });
            }
        }
        if net.initial_marking != Marking::single(source.as_str()) {
            violations.push(Violation::InitialMarking);
        }
        if net.final_marking != Marking::single(sink.as_str()) {
            violations.push(Violation::FinalMarking);
        }
    }

    for (name, marking) in [
        ("initial", &net.initial_marking),
        ("final", &net.final_marking),
    ] {
        for (place, _) in marking.iter() {
            if kinds.get(place) != Some(&Kind::Place) {
                violations.push(Violation::UnknownMarkedPlace {
                    marking: name,
                    place: place.to_owned(),
                });
            }
        }
    }

    ValidationReport { violations }
}

fn reach<'a>(start: &'a str, edges: &HashMap<&'a str, Vec<&'a str>>) -> HashSet<&'a str> {
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for &m in edges.get(n).into_iter().flatten() {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single() -> PetriNet {
        PetriNet {
            places: vec!["p0".into(), "p1".into()],
            transitions: vec![Transition::visible("A", Action::new("A").unwrap())],
            arcs: vec![NetArc::new("p0", "A"), NetArc::new("A", "p1")],
            initial_marking: Marking::single("p0"),
            final_marking: Marking::single("p1"),
        }
    }

    #[test]
    fn single_transition_net_is_valid() {
        let report = validate_net(&single());
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn dangling_arc_is_one_violation() {
        let mut net = single();
        net.arcs.push(NetArc::new("A", "ghost"));
        let report = validate_net(&net);
        assert_eq!(report.violations.len(), 1, "{report}");
        assert!(matches!(
            report.violations[0],
            Violation::DanglingArc { .. }
        ));
    }

    #[test]
    fn wrong_markings_reported() {
        let mut net = single();
        net.initial_marking = Marking::single("p1");
        net.final_marking.add("nowhere", 1);
        let report = validate_net(&net);
        assert!(report.violations.contains(&Violation::InitialMarking));
        assert!(report.violations.contains(&Violation::FinalMarking));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::UnknownMarkedPlace { .. })));
    }

    #[test]
    fn disconnected_node_reported() {
        let mut net = single();
        net.places.push("p2".into());
        net.transitions.push(Transition::silent("t"));
        net.arcs.push(NetArc::new("p2", "t"));
        net.arcs.push(NetArc::new("t", "p1"));
        let report = validate_net(&net);
        // p2 becomes a second source.
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::SourcePlaceCount { .. })));
    }

    #[test]
    fn json_shape() {
        let net = single();
        let v = serde_json::to_value(&net).unwrap();
        assert_eq!(v["transitions"][0]["label"], "A");
        assert_eq!(v["arcs"][0]["from"], "p0");
        assert_eq!(v["initial_marking"]["p0"], 1);
        let mut silent = net.clone();
        silent.transitions[0].label = None;
        let v = serde_json::to_value(&silent).unwrap();
        assert!(v["transitions"][0]["label"].is_null());
        let back: PetriNet = serde_json::from_value(v).unwrap();
        assert_eq!(back, silent);
    }
}
