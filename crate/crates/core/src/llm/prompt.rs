use std::collections::HashMap;
use std::path::Path;
use std::sync::LazyLock;

use regex::{Captures, Regex};
use thiserror::Error;

use crate::qd::Individual;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("template file {path}: {source}")]
    MissingTemplate {
        path: String,
        source: std::io::Error,
    },
    #[error("placeholder {{{0}}} left unfilled")]
    Unfilled(String),
}

static PLACEHOLDER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\{([a-z_]+)\}").expect("placeholder pattern"));

/// Substitutes `{key}` placeholders in one pass; substituted text is not
/// scanned again. Any placeholder without a value is an error.
pub fn fill(template: &str, values: &HashMap<&str, String>) -> Result<String, PromptError> {
    let mut missing = None;
    let out = PLACEHOLDER.replace_all(template, |c: &Captures| match values.get(&c[1]) {
        Some(v) => v.clone(),
        None => {
            missing.get_or_insert_with(|| c[1].to_string());
            String::new()
        }
    });
    match missing {
        Some(m) => Err(PromptError::Unfilled(m)),
        None => Ok(out.into_owned()),
    }
}

/// Prompt template texts.
#[derive(Debug, Clone, PartialEq)]
pub struct Templates {
    pub system: String,
    pub api_reference: String,
    pub diff_user: String,
    pub history: String,
    pub repair_user: String,
}

const FILES: [&str; 5] = [
    "system.md",
    "api_reference.md",
    "diff_user.txt",
    "history.txt",
    "repair_user.txt",
];

impl Templates {
    pub fn builtin() -> Self {
        Self {
            system: include_str!("../../templates/system.md").into(),
            api_reference: include_str!("../../templates/api_reference.md").into(),
            diff_user: include_str!("../../templates/diff_user.txt").into(),
            history: include_str!("../../templates/history.txt").into(),
            repair_user: include_str!("../../templates/repair_user.txt").into(),
        }
    }

    /// Reads all template files from `dir`.
    pub fn load(dir: &Path) -> Result<Self, PromptError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| PromptError::MissingTemplate {
                path: path.display().to_string(),
                source,
            })
        };
        let [system, api_reference, diff_user, history, repair_user] = FILES.map(read);
        Ok(Self {
            system: system?,
            api_reference: api_reference?,
            diff_user: diff_user?,
            history: history?,
            repair_user: repair_user?,
        })
    }

    fn system_text(&self) -> String {
        format!("{}\n{}", self.system.trim_end(), self.api_reference)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub system: String,
    pub user: String,
}

pub const LANGUAGE: &str = "heuristic";
pub const FEATURE_DIMENSIONS: &str = "evals (mean expansions relative to FF, lower is better), \
speed (evaluations per second, higher is better)";

fn coords(ind: &Individual) -> String {
    format!("evals={:.4}, speed={:.1}", ind.features[0], ind.features[1])
}

fn improvement_areas(ind: &Individual) -> String {
    let mut areas = Vec::new();
    if ind.score <= 0.0 {
        areas.push("the program solves no training task; aim for any guidance toward the goal");
    }
    if ind.features[0] > 1.0 {
        areas.push("expands more states than FF; make the estimate more informative");
    }
    if ind.features[1] < 1000.0 {
        areas.push("evaluations are slow; prefer cheaper terms");
    }
    if areas.is_empty() {
        "keep the current strengths and look for small gains".into()
    } else {
        areas.join("; ")
    }
}

fn top_programs(inspirations: &[Individual]) -> String {
    inspirations
        .iter()
        .enumerate()
        .map(|(i, p)| {
            format!(
                "### Program {} (score {:.4}, {})\n```{LANGUAGE}\n{}\n```\n",
                i + 1,
                p.score,
                coords(p),
                p.genome.to_source().trim_end()
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Mutation prompt for `parent` with the island's top programs.
pub fn assemble_generation_prompt(
    templates: &Templates,
    parent: &Individual,
    inspirations: &[Individual],
) -> Result<PromptBundle, PromptError> {
    let history = fill(
        &templates.history,
        &HashMap::from([("top_programs", top_programs(inspirations))]),
    )?;
    let values = HashMap::from([
        ("fitness_score", format!("{:.4}", parent.score)),
        ("feature_coords", coords(parent)),
        ("improvement_areas", improvement_areas(parent)),
        ("artifacts", String::new()),
        ("evolution_history", history),
        ("language", LANGUAGE.to_string()),
        (
            "current_program",
            parent.genome.to_source().trim_end().to_string(),
        ),
        ("feature_dimensions", FEATURE_DIMENSIONS.to_string()),
    ]);
    Ok(PromptBundle {
        system: templates.system_text(),
        user: fill(&templates.diff_user, &values)?,
    })
}

/// Repair prompt for a program that failed its smoke check.
pub fn assemble_repair_prompt(
    templates: &Templates,
    broken_code: &str,
    diagnostic: &str,
) -> Result<PromptBundle, PromptError> {
    let values = HashMap::from([
        ("error_message", diagnostic.trim_end().to_string()),
        (
            "repair_context",
            "The program is parsed as a heuristic definition and evaluated on a two-state task."
                .to_string(),
        ),
        ("broken_code", broken_code.trim_end().to_string()),
        ("language", LANGUAGE.to_string()),
    ]);
    Ok(PromptBundle {
        system: templates.system_text(),
        user: fill(&templates.repair_user, &values)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qd::Genome;

    fn ind(id: u64, score: f64, src: &str) -> Individual {
        Individual {
            id,
            genome: Genome::Source(src.into()),
            score,
            features: [1.5, 2000.0],
            parent: None,
            island: 0,
            born: 0,
            repairs: 0,
        }
    }

    #[test]
    fn fill_single_pass() {
        let v = HashMap::from([("a", "{b}".to_string()), ("b", "x".to_string())]);
        assert_eq!(fill("[{a}]", &v).unwrap(), "[{b}]");
        assert!(matches!(fill("{a} {c}", &v), Err(PromptError::Unfilled(k)) if k == "c"));
    }

    #[test]
    fn no_inspirations_history_present_but_empty() {
        let t = Templates::builtin();
        let b = assemble_generation_prompt(&t, &ind(0, 0.5, "h = ff"), &[]).unwrap();
        assert!(b.user.contains("## Top Performing Programs"));
        assert!(!b.user.contains("### Program"));
        assert!(b.user.contains("- Fitness: 0.5000"));
        assert!(b.user.contains("```heuristic\nh = ff\n```"));
        assert!(!PLACEHOLDER.is_match(&b.user), "{}", b.user);
        assert!(!PLACEHOLDER.is_match(&b.system));
        assert!(b.system.contains("Terminals"));
    }

    #[test]
    fn three_inspirations() {
        let t = Templates::builtin();
        let insp = [
            ind(1, 0.9, "h = hadd"),
            ind(2, 0.8, "h = dtg"),
            ind(3, 0.7, "h = hmax"),
        ];
        let b = assemble_generation_prompt(&t, &ind(0, 0.5, "h = ff"), &insp).unwrap();
        assert_eq!(b.user.matches("### Program").count(), 3);
        assert!(b.user.contains("h = dtg"));
    }

    #[test]
    fn unfilled_placeholder_is_error() {
        let mut t = Templates::builtin();
        t.diff_user.push_str("\n{unknown_slot}\n");
        let err = assemble_generation_prompt(&t, &ind(0, 0.5, "h = ff"), &[]).unwrap_err();
        assert!(matches!(err, PromptError::Unfilled(k) if k == "unknown_slot"));
    }

    #[test]
    fn repair_prompt() {
        let t = Templates::builtin();
        let b = assemble_repair_prompt(&t, "h = ff +", "line 1: unexpected end").unwrap();
        assert!(b.user.contains("line 1: unexpected end"));
        assert!(b.user.contains("h = ff +"));
        assert!(!PLACEHOLDER.is_match(&b.user));
    }

    #[test]
    fn load_from_dir() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            Templates::load(dir.path()),
            Err(PromptError::MissingTemplate { .. })
        ));
        let t = Templates::builtin();
        for (name, text) in FILES.iter().zip([
            &t.system,
            &t.api_reference,
            &t.diff_user,
            &t.history,
            &t.repair_user,
        ]) {
            std::fs::write(dir.path().join(name), text).unwrap();
        }
        assert_eq!(Templates::load(dir.path()).unwrap(), t);
    }
}
