//! Deterministic fixtures: a library of structurally distinct skills with
//! queries and noiseless thoughts, and a library whose query texts are
//! engineered to mislead embedding retrieval.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conformance::{Aligner, ConformanceError};
use crate::discovery::discover_skill;
use crate::evaluation::EvalQuery;
use crate::gateway::{noisy_planner, rephrase, Language, ScriptedChat, ToolCatalog};
use crate::model::{Action, EventLog, ProcessTree, Provenance, Skill, SkillLibrary, Trace};

pub const SYNTH_TOOLS: [&str; 12] = [
    "Web Search",
    "Summarize",
    "Translate",
    "OCR",
    "Image Editing",
    "Speech Synthesis",
    "Send Email",
    "Calendar",
    "Spreadsheet",
    "Chart",
    "Code Runner",
    "Weather",
];

const DESCRIPTIONS: [&str; 20] = [
    "find recent articles about solar panels and summarize them",
    "translate my scanned restaurant menu into spanish",
    "brighten the holiday photo and read it aloud",
    "email the team an agenda for monday",
    "build a sales chart from the quarterly spreadsheet",
    "check tomorrow's weather before booking the hike",
    "run the benchmark script and chart the timings",
    "extract text from the receipt image and file the expenses",
    "narrate a short bedtime story in french",
    "schedule a dentist appointment next week",
    "compare laptop prices across online shops",
    "crop the logo and send it to the designer",
    "summarize the podcast transcript for the newsletter",
    "convert handwritten lecture notes into typed text",
    "plan a weekend trip itinerary around the forecast",
    "generate a budget table for the wedding",
    "debug the failing python unit test",
    "prepare a slide image summarizing survey results",
    "remind my parents about the birthday dinner",
    "research competitors and draft an investor email",
];

const PARAPHRASES_PER_LANGUAGE: usize = 2;
const CASES_PER_SKILL: usize = 5;

/// A library together with evaluation queries and the tool catalog they use.
#[derive(Debug, Clone)]
pub struct SynthSuite {
    pub library: SkillLibrary,
    pub logs: Vec<EventLog>,
    pub queries: Vec<EvalQuery>,
    pub catalog: ToolCatalog,
}

/// Random operator tree over distinct `labels`, at most `depth` operator
/// levels deep.
pub fn random_tree<R: Rng + ?Sized>(
    rng: &mut R,
    labels: &[Action],
    depth: usize,
    allow_loop: bool,
) -> ProcessTree {
    if labels.len() == 1 {
        return ProcessTree::Leaf(labels[0].clone());
    }
    if depth == 0 {
        return ProcessTree::Seq(labels.iter().cloned().map(ProcessTree::Leaf).collect());
    }
    let parts = rng.random_range(2..=labels.len().min(3));
    let mut cuts: Vec<usize> = (1..labels.len()).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
    cuts.sort_unstable();
    let mut groups = Vec::new();
    let mut start = 0;
    for c in cuts.into_iter().chain([labels.len()]) {
        groups.push(&labels[start..c]);
        start = c;
    }
    if allow_loop && groups.len() == 2 && rng.random_bool(0.15) {
        return ProcessTree::Loop(
            Box::new(random_tree(rng, groups[0], depth - 1, allow_loop)),
            Box::new(random_tree(rng, groups[1], depth - 1, allow_loop)),
        );
    }
    let children = groups
        .into_iter()
        .map(|g| random_tree(rng, g, depth - 1, allow_loop))
        .collect();
    match rng.random_range(0..3) {
        0 => ProcessTree::Seq(children),
        1 => ProcessTree::Xor(children),
        _ => ProcessTree::And(children),
    }
}

fn action(name: &str) -> Action {
    Action::new(name).expect("fixture names are non-empty")
}

fn fits(aligner: &Aligner, trace: &Trace) -> bool {
    aligner.align(trace).is_ok_and(|a| a.fitness >= 1.0)
}

fn queries_for(skill: &Skill, thoughts: &[Trace], text: Option<&str>) -> Vec<EvalQuery> {
    let chat = ScriptedChat::new();
    let base = text.unwrap_or_else(|| skill.canonical_text().expect("fixture skills have text"));
    let mut out = Vec::new();
    for lang in Language::ALL {
        let texts = rephrase(base, lang, PARAPHRASES_PER_LANGUAGE, &chat)
            .expect("stub rephrasing succeeds");
        for t in texts {
            let thought = &thoughts[out.len() % thoughts.len()];
            out.push(EvalQuery {
                text: t,
                true_skill_id: skill.skill_id.clone(),
                language: Some(lang.code().into()),
                thought: Some(thought.actions.clone()),
            });
        }
    }
    out
}

/// Twenty skills discovered from sampled logs over a shared pool of tools.
/// No skill's training traces fit any other skill perfectly.
pub fn synthetic_suite(seed: u64) -> SynthSuite {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<Action> = SYNTH_TOOLS.iter().map(|n| action(n)).collect();
    let mut skills: Vec<(Skill, Aligner, Vec<Trace>)> = Vec::new();
    let mut logs = Vec::new();
    for (i, text) in DESCRIPTIONS.iter().enumerate() {
        let id = format!("skill-{i:02}");
        let chat = ScriptedChat::new();
        let mut texts = vec![(*text).to_owned()];
        texts.extend(
            rephrase(text, Language::En, 2, &chat)
                .expect("stub")
                .into_iter()
                .skip(1),
        );
        loop {
            let n = rng.random_range(3..=6);
            let mut labels = pool.clone();
            labels.shuffle(&mut rng);
            labels.truncate(n);
            let tree = random_tree(&mut rng, &labels, 3, false);
            let traces: Vec<Trace> = (0..CASES_PER_SKILL)
                .map(|c| Trace::new(format!("{id}:{c}"), tree.sample_run(&mut rng, 0.0, 0)))
                .collect();
            let log = EventLog::new(id.clone(), texts.clone(), traces.clone());
            let skill = discover_skill(&log).expect("sampled logs are non-empty");
            let aligner = Aligner::new(&skill.net).expect("discovered nets are sound");
            let clash = skills.iter().any(|(_, other, other_traces)| {
                traces.iter().any(|t| fits(other, t))
                    || other_traces.iter().any(|t| fits(&aligner, t))
            });
            if !clash {
                skills.push((skill, aligner, traces));
                logs.push(log);
                break;
            }
        }
    }
    let queries = skills
        .iter()
        .flat_map(|(s, _, ts)| queries_for(s, ts, None))
        .collect();
    SynthSuite {
        library: SkillLibrary::from_skills(skills.into_iter().map(|(s, _, _)| s))
            .expect("unique ids"),
        logs,
        queries,
        catalog: ToolCatalog::from_actions(pool),
    }
}

const COLLISION_TOPICS: [&str; 4] = [
    "prepare the quarterly sales report",
    "plan the team offsite trip",
    "process the scanned customer invoices",
    "publish the weekly product newsletter",
];
const COLLISION_FORMS: [&str; 3] = ["chart", "summary", "slides"];

/// Four groups of three skills. Skills in a group share most of their
/// description and use disjoint tools. Queries for the middle skill of each
/// group repeat the first sibling's distinguishing word, so embedding
/// retrieval ranks that sibling above the true skill.
pub fn collision_suite() -> SynthSuite {
    let tools: Vec<Vec<Action>> = (0..3)
        .map(|m| {
            SYNTH_TOOLS[4 * m..4 * m + 4]
                .iter()
                .map(|n| action(n))
                .collect()
        })
        .collect();
    let leaf = |a: &Action| ProcessTree::Leaf(a.clone());
    let shape = |g: usize, t: &[Action]| -> ProcessTree {
        match g {
            0 => ProcessTree::Seq(t.iter().map(leaf).collect()),
            1 => ProcessTree::Seq(vec![
                leaf(&t[0]),
                ProcessTree::And(vec![leaf(&t[1]), leaf(&t[2])]),
                leaf(&t[3]),
            ]),
            2 => ProcessTree::And(vec![
                ProcessTree::Seq(vec![leaf(&t[0]), leaf(&t[1])]),
                ProcessTree::Seq(vec![leaf(&t[2]), leaf(&t[3])]),
            ]),
            _ => ProcessTree::Seq(vec![
                leaf(&t[3]),
                leaf(&t[0]),
                ProcessTree::And(vec![leaf(&t[2]), leaf(&t[1])]),
            ]),
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut skills = Vec::new();
    let mut logs = Vec::new();
    let mut queries = Vec::new();
    for (g, topic) in COLLISION_TOPICS.iter().enumerate() {
        for (m, form) in COLLISION_FORMS.iter().enumerate() {
            let id = format!("g{g}-{form}");
            let tree = shape(g, &tools[m]);
            let traces: Vec<Trace> = (0..CASES_PER_SKILL)
                .map(|c| Trace::new(format!("{id}:{c}"), tree.sample_run(&mut rng, 0.0, 0)))
                .collect();
            let text = format!("{topic} as {form}");
            let log = EventLog::new(id.clone(), vec![text.clone()], traces.clone());
            let skill = Skill::from_tree(
                &id,
                tree,
                vec![text],
                Provenance {
                    num_cases: log.traces.len(),
                    num_variants: log.num_variants(),
                },
            )
            .expect("fixture trees are valid");
            let probe = (m == 1).then(|| {
                let lure = COLLISION_FORMS[0];
                format!("{topic} as {lure} {lure} {lure} {form}")
            });
            queries.extend(queries_for(&skill, &traces, probe.as_deref()));
            skills.push(skill);
            logs.push(log);
        }
    }
    SynthSuite {
        library: SkillLibrary::from_skills(skills).expect("unique ids"),
        logs,
        queries,
        catalog: ToolCatalog::from_actions(tools.into_iter().flatten()),
    }
}

impl SynthSuite {
    /// One query per skill whose text is the skill's canonical text.
    pub fn exact_queries(&self) -> Vec<EvalQuery> {
        self.library
            .iter()
            .map(|s| EvalQuery {
                text: s
                    .canonical_text()
                    .expect("fixture skills have text")
                    .to_owned(),
                true_skill_id: s.skill_id.clone(),
                language: Some(Language::En.code().into()),
                thought: self
                    .queries
                    .iter()
                    .find(|q| q.true_skill_id == s.skill_id)
                    .and_then(|q| q.thought.clone()),
            })
            .collect()
    }

    /// Replaces each query's thought by a degraded copy whose alignment
    /// fitness against the true skill is near `targets[i % targets.len()]`.
    pub fn with_noisy_thoughts(
        &self,
        targets: &[f64],
        seed: u64,
    ) -> Result<Self, ConformanceError> {
        let mut out = self.clone();
        for (i, q) in out.queries.iter_mut().enumerate() {
            let Some(actions) = &q.thought else { continue };
            let skill = self
                .library
                .get(&q.true_skill_id)
                .expect("query skill exists");
            let target = targets[i % targets.len()];
            let noisy = noisy_planner(
                &Trace::new("gt", actions.clone()),
                &skill.net,
                target,
                seed + i as u64,
            )?;
            q.thought = Some(noisy.thought.trace.actions);
        }
        Ok(out)
    }

    /// Chat stub that answers each query with that query's thought.
    pub fn scripted_chat(&self) -> ScriptedChat {
        let mut chat = ScriptedChat::new();
        for q in &self.queries {
            if let Some(t) = &q.thought {
                let names: Vec<&str> = t.iter().map(Action::as_str).collect();
                chat.insert_plan(q.text.clone(), &names);
            }
        }
        chat
    }
}
