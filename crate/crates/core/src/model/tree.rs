//! Process trees and their text form.
//!
//! Grammar (whitespace between tokens is ignored):
//!
//! ```text
//! tree := 'AND' '(' tree (',' tree)+ ')'
//!       | 'SEQ' '(' tree (',' tree)+ ')'
//!       | 'XOR' '(' tree (',' tree)+ ')'
//!       | 'LOOP' '(' tree ',' tree ')'
//!       | 'TAU'
//!       | quoted-name
//! ```
//!
//! Quoted names use single quotes; `\'` and `\\` escape a quote and a
//! backslash inside a name.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Action, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Seq,
    Xor,
    And,
    Loop,
}

impl Operator {
    pub fn keyword(self) -> &'static str {
        match self {
            Operator::Seq => "SEQ",
            Operator::Xor => "XOR",
            Operator::And => "AND",
            Operator::Loop => "LOOP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProcessTree {
    Leaf(Action),
    Tau,
    Seq(Vec<ProcessTree>),
    Xor(Vec<ProcessTree>),
    And(Vec<ProcessTree>),
    /// `Loop(body, redo)`: body, then any number of (redo, body) rounds.
    Loop(Box<ProcessTree>, Box<ProcessTree>),
}

impl ProcessTree {
    pub fn leaf(name: impl AsRef<str>) -> Result<Self, ModelError> {
        Ok(ProcessTree::Leaf(Action::new(name)?))
    }

    pub fn seq(children: Vec<ProcessTree>) -> Result<Self, ModelError> {
        Self::nary(Operator::Seq, children)
    }

    pub fn xor(children: Vec<ProcessTree>) -> Result<Self, ModelError> {
        Self::nary(Operator::Xor, children)
    }

    pub fn and(children: Vec<ProcessTree>) -> Result<Self, ModelError> {
        Self::nary(Operator::And, children)
    }

    pub fn looped(body: ProcessTree, redo: ProcessTree) -> Self {
        ProcessTree::Loop(Box::new(body), Box::new(redo))
    }

    fn nary(op: Operator, children: Vec<ProcessTree>) -> Result<Self, ModelError> {
        if children.len() < 2 {
            return Err(ModelError::Arity {
                operator: op.keyword(),
                found: children.len(),
                offset: None,
            });
        }
        Ok(match op {
            Operator::Seq => ProcessTree::Seq(children),
            Operator::Xor => ProcessTree::Xor(children),
            Operator::And => ProcessTree::And(children),
            Operator::Loop => unreachable!("loop is binary"),
        })
    }

    /// Checks the arity invariants recursively.
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ProcessTree::Leaf(_) | ProcessTree::Tau => Ok(()),
            ProcessTree::Seq(c) | ProcessTree::Xor(c) | ProcessTree::And(c) => {
                if c.len() < 2 {
                    return Err(ModelError::Arity {
                        operator: self.operator().map(Operator::keyword).unwrap_or("?"),
                        found: c.len(),
                        offset: None,
                    });
                }
                c.iter().try_for_each(ProcessTree::validate)
            }
            ProcessTree::Loop(body, redo) => {
                body.validate()?;
                redo.validate()
            }
        }
    }

    pub fn operator(&self) -> Option<Operator> {
        match self {
            ProcessTree::Seq(_) => Some(Operator::Seq),
            ProcessTree::Xor(_) => Some(Operator::Xor),
            ProcessTree::And(_) => Some(Operator::And),
            ProcessTree::Loop(..) => Some(Operator::Loop),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&ProcessTree> {
        match self {
            ProcessTree::Seq(c) | ProcessTree::Xor(c) | ProcessTree::And(c) => c.iter().collect(),
            ProcessTree::Loop(b, r) => vec![b.as_ref(), r.as_ref()],
            _ => Vec::new(),
        }
    }

    /// Leaf actions in left-to-right order, with repetitions.
    pub fn leaves(&self) -> Vec<&Action> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Action>) {
        match self {
            ProcessTree::Leaf(a) => out.push(a),
            ProcessTree::Tau => {}
            _ => self
                .children()
                .into_iter()
                .for_each(|c| c.collect_leaves(out)),
        }
    }

    /// Distinct leaf actions, sorted.
    pub fn alphabet(&self) -> Vec<Action> {
        let set: std::collections::BTreeSet<&Action> = self.leaves().into_iter().collect();
        set.into_iter().cloned().collect()
    }

    pub fn depth(&self) -> usize {
        match self {
            ProcessTree::Leaf(_) | ProcessTree::Tau => 0,
            _ => 1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0),
        }
    }

    /// Smallest action name in the subtree, used to order children deterministically.
    pub fn min_action(&self) -> Option<&Action> {
        self.leaves().into_iter().min()
    }

    /// Draws one member of the tree's language. Each loop repeats its redo
    /// part with probability `redo_probability` per round, at most
    /// `max_loop_rounds` times.
    pub fn sample_run<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        redo_probability: f64,
        max_loop_rounds: usize,
    ) -> Vec<Action> {
        match self {
            ProcessTree::Leaf(a) => vec![a.clone()],
            ProcessTree::Tau => Vec::new(),
            ProcessTree::Seq(c) => c
                .iter()
                .flat_map(|c| c.sample_run(rng, redo_probability, max_loop_rounds))
                .collect(),
            ProcessTree::Xor(c) => {
                let pick = rng.random_range(0..c.len());
                c[pick].sample_run(rng, redo_probability, max_loop_rounds)
            }
            ProcessTree::And(c) => {
                let mut parts: Vec<std::collections::VecDeque<Action>> = c
                    .iter()
                    .map(|c| c.sample_run(rng, redo_probability, max_loop_rounds).into())
                    .collect();
                // Uniform over interleavings: pick the next branch weighted by remaining length.
                let mut slots: Vec<usize> = parts
                    .iter()
                    .enumerate()
                    .flat_map(|(i, p)| std::iter::repeat_n(i, p.len()))
                    .collect();
                slots.shuffle(rng);
                slots
                    .into_iter()
                    .map(|i| {
                        parts[i]
                            .pop_front()
                            .expect("slot count matches branch length")
                    })
                    .collect()
            }
            ProcessTree::Loop(body, redo) => {
                let mut out = body.sample_run(rng, redo_probability, max_loop_rounds);
                let mut rounds = 0;
                while rounds < max_loop_rounds && rng.random_bool(redo_probability) {
                    out.extend(redo.sample_run(rng, redo_probability, max_loop_rounds));
                    out.extend(body.sample_run(rng, redo_probability, max_loop_rounds));
                    rounds += 1;
                }
                out
            }
        }
    }

    /// Canonical text form: single-quoted names, no whitespace.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_text(&mut s);
        s
    }

    fn write_text(&self, out: &mut String) {
        match self {
            ProcessTree::Leaf(a) => {
                out.push('\'');
                for ch in a.as_str().chars() {
                    if ch == '\'' || ch == '\\' {
                        out.push('\\');
                    }
                    out.push(ch);
                }
                out.push('\'');
            }
            ProcessTree::Tau => out.push_str("TAU"),
            _ => {
                out.push_str(self.operator().expect("operator node").keyword());
                out.push('(');
                for (i, c) in self.children().into_iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    c.write_text(out);
                }
                out.push(')');
            }
        }
    }
}

impl fmt::Display for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for ProcessTree {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_process_tree(s)
    }
}

impl TryFrom<String> for ProcessTree {
    type Error = ModelError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        parse_process_tree(&value)
    }
}

impl From<ProcessTree> for String {
    fn from(t: ProcessTree) -> Self {
        t.to_text()
    }
}

pub fn parse_process_tree(text: &str) -> Result<ProcessTree, ModelError> {
    let mut p = Parser { src: text, pos: 0 };
    let tree = p.tree()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.syntax("trailing input after tree"));
    }
    Ok(tree)
}

pub fn serialize_process_tree(tree: &ProcessTree) -> String {
    tree.to_text()
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn syntax(&self, message: impl Into<String>) -> ModelError {
        ModelError::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn expect(&mut self, ch: char) -> Result<(), ModelError> {
        self.skip_ws();
        if self.rest().starts_with(ch) {
            self.pos += ch.len_utf8();
            Ok(())
        } else {
            Err(self.syntax(format!("expected '{ch}'")))
        }
    }

    fn tree(&mut self) -> Result<ProcessTree, ModelError> {
        self.skip_ws();
        let start = self.pos;
        if self.rest().starts_with('\'') {
            return self.quoted();
        }
        let word_len = self
            .rest()
            .find(|c: char| !c.is_ascii_alphabetic())
            .unwrap_or(self.rest().len());
        let word = &self.rest()[..word_len];
        let op = match word {
            "TAU" => {
                self.pos += word_len;
                return Ok(ProcessTree::Tau);
            }
            "SEQ" => Operator::Seq,
            "XOR" => Operator::Xor,
            "AND" => Operator::And,
            "LOOP" => Operator::Loop,
            "" => return Err(self.syntax("expected a tree")),
            other => return Err(self.syntax(format!("unknown operator '{other}'"))),
        };
        self.pos += word_len;
        self.expect('(')?;
        let mut children = vec![self.tree()?];
        loop {
            self.skip_ws();
            if self.rest().starts_with(',') {
                self.pos += 1;
                children.push(self.tree()?);
            } else {
                self.expect(')')?;
                break;
            }
        }
        let arity_err = |found| ModelError::Arity {
            operator: op.keyword(),
            found,
            offset: Some(start),
        };
        match op {
            Operator::Loop => {
                if children.len() != 2 {
                    return Err(arity_err(children.len()));
                }
                let redo = children.pop().expect("two children");
                let body = children.pop().expect("two children");
                Ok(ProcessTree::looped(body, redo))
            }
            _ => {
                if children.len() < 2 {
                    return Err(arity_err(children.len()));
                }
                ProcessTree::nary(op, children)
            }
        }
    }

    fn quoted(&mut self) -> Result<ProcessTree, ModelError> {
        let start = self.pos;
        self.pos += 1;
        let mut name = String::new();
        let mut chars = self.rest().char_indices();
        loop {
            match chars.next() {
                None => {
                    self.pos = start;
                    return Err(self.syntax("unterminated quoted name"));
                }
                Some((i, '\'')) => {
                    self.pos += i + 1;
                    break;
                }
                Some((_, '\\')) => match chars.next() {
                    Some((_, c @ ('\'' | '\\'))) => name.push(c),
                    _ => {
                        self.pos = start;
                        return Err(self.syntax("invalid escape in quoted name"));
                    }
                },
                Some((_, c)) => name.push(c),
            }
        }
        Action::new(&name)
            .map(ProcessTree::Leaf)
            .map_err(|_| ModelError::Syntax {
                offset: start,
                message: "empty action name".into(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(n: &str) -> ProcessTree {
        ProcessTree::leaf(n).unwrap()
    }

    #[test]
    fn parses_worked_example() {
        let t = parse_process_tree("AND(SEQ('A','B'),SEQ('C','D','E','F'))").unwrap();
        let expected = ProcessTree::And(vec![
            ProcessTree::Seq(vec![leaf("A"), leaf("B")]),
            ProcessTree::Seq(vec![leaf("C"), leaf("D"), leaf("E"), leaf("F")]),
        ]);
        assert_eq!(t, expected);
        assert_eq!(t.to_text(), "AND(SEQ('A','B'),SEQ('C','D','E','F'))");
    }

    #[test]
    fn parses_single_leaf() {
        assert_eq!(parse_process_tree("'A'").unwrap(), leaf("A"));
        assert_eq!(leaf("A").to_text(), "'A'");
    }

    #[test]
    fn seq_of_one_is_arity_error() {
        let err = parse_process_tree("SEQ('A')").unwrap_err();
        assert!(
            matches!(
                err,
                ModelError::Arity {
                    operator: "SEQ",
                    found: 1,
                    ..
                }
            ),
            "{err}"
        );
        assert!(matches!(
            parse_process_tree("LOOP('A','B','C')"),
            Err(ModelError::Arity {
                operator: "LOOP",
                found: 3,
                ..
            })
        ));
    }

    #[test]
    fn whitespace_is_insignificant() {
        let t = parse_process_tree("  XOR ( 'Image Editing' ,\n TAU )  ").unwrap();
        assert_eq!(t.to_text(), "XOR('Image Editing',TAU)");
    }

    #[test]
    fn syntax_errors_carry_offset() {
        match parse_process_tree("SEQ('A' 'B')") {
            Err(ModelError::Syntax { offset, .. }) => assert_eq!(offset, 8),
            other => panic!("unexpected {other:?}"),
        }
        match parse_process_tree("'A') ") {
            Err(ModelError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_process_tree("FOO('A')"),
            Err(ModelError::Syntax { offset: 0, .. })
        ));
        assert!(matches!(
            parse_process_tree("'abc"),
            Err(ModelError::Syntax { offset: 0, .. })
        ));
        assert!(parse_process_tree("''").is_err());
    }

    #[test]
    fn escapes_round_trip() {
        let t = ProcessTree::seq(vec![leaf("it's"), leaf(r"back\slash")]).unwrap();
        let text = t.to_text();
        assert_eq!(text, r"SEQ('it\'s','back\\slash')");
        assert_eq!(parse_process_tree(&text).unwrap(), t);
    }

    #[test]
    fn sample_run_respects_sequence() {
        let t = parse_process_tree("SEQ('A',AND('B','C'),'D')").unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let run: Vec<String> = t
                .sample_run(&mut rng, 0.5, 2)
                .into_iter()
                .map(String::from)
                .collect();
            assert_eq!(run.len(), 4);
            assert_eq!(run[0], "A");
            assert_eq!(run[3], "D");
        }
    }

    use rand::SeedableRng;
}
