use crate::model::{Action, Marking, ModelError, NetArc, PetriNet, ProcessTree, Transition};

/// Translates a process tree into an equivalent workflow net.
///
/// Place `p0` is the source and `p1` the sink. Visible transitions are
/// numbered `t0, t1, ...` and silent ones `tau0, tau1, ...`.
pub fn tree_to_petri(tree: &ProcessTree) -> Result<PetriNet, ModelError> {
    tree.validate()?;
    let mut b = NetBuilder::default();
    let source = b.place();
    let sink = b.place();
    b.translate(tree, &source, &sink);
    Ok(PetriNet {
        places: b.places,
        transitions: b.transitions,
        arcs: b.arcs,
        initial_marking: Marking::single(source),
        final_marking: Marking::single(sink),
    })
}

#[derive(Default)]
struct NetBuilder {
    places: Vec<String>,
    transitions: Vec<Transition>,
    arcs: Vec<NetArc>,
    visible: usize,
    silent: usize,
}

impl NetBuilder {
    fn place(&mut self) -> String {
        let id = format!("p{}", self.places.len());
        self.places.push(id.clone());
        id
    }

    fn transition(&mut self, label: Option<&Action>, inputs: &[&str], outputs: &[&str]) {
        let id = match label {
            Some(_) => {
                self.visible += 1;
                format!("t{}", self.visible - 1)
            }
            None => {
                self.silent += 1;
                format!("tau{}", self.silent - 1)
            }
        };
        for p in inputs {
            self.arcs.push(NetArc::new(*p, id.clone()));
        }
        for p in outputs {
            self.arcs.push(NetArc::new(id.clone(), *p));
        }
        self.transitions.push(Transition {
            id,
            label: label.cloned(),
        });
    }

    fn translate(&mut self, tree: &ProcessTree, entry: &str, exit: &str) {
        match tree {
            ProcessTree::Leaf(a) => self.transition(Some(a), &[entry], &[exit]),
            ProcessTree::Tau => self.transition(None, &[entry], &[exit]),
            ProcessTree::Seq(children) => {
                let mut current = entry.to_owned();
                for (i, child) in children.iter().enumerate() {
                    let next = if i + 1 == children.len() {
                        exit.to_owned()
                    } else {
                        self.place()
                    };
                    self.translate(child, &current, &next);
                    current = next;
                }
            }
            ProcessTree::Xor(children) => {
                for child in children {
                    self.translate(child, entry, exit);
                }
            }
            ProcessTree::And(children) => {
                let branches: Vec<(String, String)> = children
                    .iter()
                    .map(|_| (self.place(), self.place()))
                    .collect();
                let starts: Vec<&str> = branches.iter().map(|(s, _)| s.as_str()).collect();
                let ends: Vec<&str> = branches.iter().map(|(_, e)| e.as_str()).collect();
                self.transition(None, &[entry], &starts);
                for (child, (s, e)) in children.iter().zip(&branches) {
                    self.translate(child, s, e);
                }
                self.transition(None, &ends, &[exit]);
            }
            ProcessTree::Loop(body, redo) => {
                let body_in = self.place();
                let body_out = self.place();
                self.transition(None, &[entry], &[&body_in]);
                self.translate(body, &body_in, &body_out);
                self.translate(redo, &body_out, &body_in);
                self.transition(None, &[&body_out], &[exit]);
            }
        }
    }
}
