//! Scenario files: a TOML document naming the task, the seed and any
//! overrides of the default configuration.
//!
//! ```toml
//! task = "idle_pulley"
//! seed = 1
//! repetitions = 10
//!
//! [noise]
//! placement_offset_mm = 0.5
//!
//! [catalog.retainer_pin]
//! shank_diameter_mm = 6.0
//!
//! [[sweep]]
//! path = "noise.nominal_offset_mm"
//! values = [0.0, 0.5, 1.0]
//! ```
//!
//! Every section is optional and falls back to the library defaults.
//! Unknown keys are errors.

use std::collections::BTreeMap;
use std::path::Path;

use duojaw_core::hand::HandParams;
use duojaw_core::parallel::Execution;
use duojaw_core::search::SearchConfig;
use duojaw_core::tasks::{NoiseModel, RunContext, StageSpec, TaskKind, TaskScript};
use duojaw_core::world::{Catalog, ClearanceSpec, Part, WorldConfig};
use duojaw_core::ObjectId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{origin}{}: [{section}] {message}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Invalid {
        origin: String,
        section: String,
        line: Option<usize>,
        message: String,
    },
}

/// Script adjustments on top of the task's canonical script.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScriptSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort_on_failure: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub handover_budget: Option<u32>,
    /// Replaces the canonical stage list.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<StageSpec>>,
}

/// One sweep dimension: a dotted path into the scenario and its values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<toml::Value>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub task: TaskKind,
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: u32,
    #[serde(default)]
    pub execution: Execution,
    #[serde(default)]
    pub script: ScriptSettings,
    #[serde(default)]
    pub clearance: ClearanceSpec,
    /// Partial part overrides keyed by catalog id.
    #[serde(default)]
    pub catalog: BTreeMap<String, toml::Table>,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub world: WorldConfig,
    #[serde(default)]
    pub hand: HandParams,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
}

/// Values assigned by the sweep to one run, keyed by path.
pub type Settings = BTreeMap<String, toml::Value>;

/// A problem tied to one scenario section.
#[derive(Debug, Clone, PartialEq)]
struct Problem {
    section: String,
    message: String,
}

fn problem(section: impl Into<String>, message: impl ToString) -> Problem {
    Problem {
        section: section.into(),
        message: message.to_string(),
    }
}

const FIXED_KEYS: [&str; 5] = ["task", "seed", "repetitions", "execution", "sweep"];

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let source = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::parse(&source, &path.display().to_string())
}

impl Scenario {
    /// Parses and validates scenario text; `origin` names it in errors.
    pub fn parse(source: &str, origin: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(source).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_col(source, s.start));
            ScenarioError::Parse {
                origin: origin.to_owned(),
                line,
                column,
                message: e.message().trim().to_owned(),
            }
        })?;
        scenario.check().map_err(|p| ScenarioError::Invalid {
            origin: origin.to_owned(),
            line: section_line(source, &p.section),
            section: p.section,
            message: p.message,
        })?;
        Ok(scenario)
    }

    fn check(&self) -> Result<(), Problem> {
        if self.repetitions == 0 {
            return Err(problem("repetitions", "must be at least 1"));
        }
        self.resolve()?;
        let mut seen = Vec::new();
        for axis in &self.sweep {
            if seen.contains(&axis.path) {
                return Err(problem("sweep", format!("axis {} given twice", axis.path)));
            }
            if axis.values.is_empty() {
                return Err(problem("sweep", format!("axis {} has no values", axis.path)));
            }
            seen.push(axis.path.clone());
        }
        for settings in self.points() {
            let point = self.with_settings(&settings).map_err(|m| problem("sweep", m))?;
            point.resolve().map_err(|p| {
                problem(
                    "sweep",
                    format!("at {}: [{}] {}", describe(&settings), p.section, p.message),
                )
            })?;
        }
        Ok(())
    }

    /// Builds the task script and run context of the base configuration.
    pub fn context(&self) -> Result<(TaskScript, RunContext), String> {
        self.resolve().map_err(|p| format!("[{}] {}", p.section, p.message))
    }

    fn resolve(&self) -> Result<(TaskScript, RunContext), Problem> {
        let mut catalog = Catalog::builtin(&self.clearance);
        for (id, table) in &self.catalog {
            let section = format!("catalog.{id}");
            let object = ObjectId::new(id.as_str());
            let part = catalog.get(&object).map_err(|e| problem(&section, e))?;
            let mut merged = toml::Value::try_from(part).map_err(|e| problem(&section, e))?;
            merge(&mut merged, table);
            let part: Part = merged
                .try_into()
                .map_err(|e: toml::de::Error| problem(&section, e.message().trim()))?;
            catalog.set(&object, part).map_err(|e| problem(&section, e))?;
        }
        let mut script = TaskScript::canonical(self.task);
        if let Some(stages) = &self.script.stages {
            script.stages = stages.clone();
        }
        if let Some(abort) = self.script.abort_on_failure {
            script.abort_on_failure = abort;
        }
        if let Some(budget) = self.script.handover_budget {
            script.handover_budget = budget;
        }
        script.validate().map_err(|e| problem("script", e))?;
        let ctx = RunContext {
            catalog,
            search: self.search.clone(),
            world: self.world,
            hand: self.hand,
            noise: self.noise,
            seed: self.seed,
        };
        ctx.search.validate().map_err(|e| problem("search", e))?;
        ctx.world.validate().map_err(|e| problem("world", e))?;
        ctx.hand.validate().map_err(|e| problem("hand", e))?;
        ctx.noise.validate().map_err(|e| problem("noise", e))?;
        ctx.validate().map_err(|e| problem("catalog", e))?;
        Ok((script, ctx))
    }

    /// Number of sweep points; 1 without sweep axes.
    pub fn point_count(&self) -> usize {
        self.sweep.iter().map(|a| a.values.len()).product()
    }

    pub fn run_count(&self) -> usize {
        self.point_count() * self.repetitions as usize
    }

    /// Sweep points in order, the first axis varying slowest.
    pub fn points(&self) -> Vec<Settings> {
        let mut points = vec![Settings::new()];
        for axis in &self.sweep {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |v| {
                        let mut p = p.clone();
                        p.insert(axis.path.clone(), v.clone());
                        p
                    })
                })
                .collect();
        }
        points
    }

    /// The scenario with every path in `settings` set to its value.
    pub fn with_settings(&self, settings: &Settings) -> Result<Scenario, String> {
        let mut s = self.clone();
        for (path, value) in settings {
            s = s.with_value(path, value)?;
        }
        Ok(s)
    }

    fn with_value(&self, path: &str, value: &toml::Value) -> Result<Scenario, String> {
        let keys: Vec<&str> = path.split('.').collect();
        if keys.iter().any(|k| k.is_empty()) || FIXED_KEYS.contains(&keys[0]) {
            return Err(format!("{path} cannot be swept"));
        }
        let mut doc = toml::Value::try_from(self).map_err(|e| e.to_string())?;
        let free = matches!(keys[0], "catalog" | "script");
        let mut node = &mut doc;
        for (i, key) in keys.iter().enumerate() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| format!("{path}: {} is not a table", keys[..i].join(".")))?;
            if i + 1 == keys.len() {
                if table.get(*key).is_some_and(toml::Value::is_table) {
                    return Err(format!("{path} names a table, not a value"));
                }
                table.insert((*key).to_owned(), value.clone());
                break;
            }
            if !table.contains_key(*key) {
                if !free {
                    return Err(format!("{path} does not name a configuration value"));
                }
                table.insert((*key).to_owned(), toml::Value::Table(toml::Table::new()));
            }
            node = table.get_mut(*key).unwrap();
        }
        let out: Scenario = doc
            .try_into()
            .map_err(|e: toml::de::Error| format!("{path}: {}", e.message().trim()))?;
        let back = toml::Value::try_from(&out).map_err(|e| e.to_string())?;
        match lookup(&back, &keys) {
            Some(v) if same_value(v, value) => Ok(out),
            _ => Err(format!("{path} does not name a configuration value")),
        }
    }
}

/// `a.b=1, c=2` form of a sweep point.
pub fn describe(settings: &Settings) -> String {
    settings
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn merge(base: &mut toml::Value, over: &toml::Table) {
    let Some(table) = base.as_table_mut() else {
        *base = toml::Value::Table(over.clone());
        return;
    };
    for (k, v) in over {
        match (table.get_mut(k), v) {
            (Some(existing @ toml::Value::Table(_)), toml::Value::Table(sub)) => merge(existing, sub),
            _ => {
                table.insert(k.clone(), v.clone());
            }
        }
    }
}

fn lookup<'a>(v: &'a toml::Value, keys: &[&str]) -> Option<&'a toml::Value> {
    keys.iter().try_fold(v, |node, k| node.as_table()?.get(*k))
}

fn same_value(a: &toml::Value, b: &toml::Value) -> bool {
    use toml::Value::{Array, Float, Integer};
    match (a, b) {
        (Integer(x), Float(y)) | (Float(y), Integer(x)) => *x as f64 == *y,
        (Array(x), Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same_value(p, q)),
        (Float(x), Float(y)) => x == y,
        _ => a == b,
    }
}

fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// First line mentioning a section, as a header or a dotted/inline key.
fn section_line(source: &str, section: &str) -> Option<usize> {
    let top = section.split('.').next().unwrap_or(section);
    let candidates = [section, top];
    for name in candidates {
        for (i, raw) in source.lines().enumerate() {
            let line = raw.trim();
            let header = line.trim_start_matches('[').trim_end_matches(']').trim();
            let is_header = line.starts_with('[') && (header == name || header.starts_with(&format!("{name}.")));
            let key = line.split('=').next().unwrap_or("").trim();
            if is_header || key == name || key.starts_with(&format!("{name}.")) {
                return Some(i + 1);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use duojaw_core::world::{IDLE_PULLEY, RETAINER_PIN};

    #[test]
    fn minimal_file_gets_defaults() {
        let s = Scenario::parse("task = \"idle_pulley\"\nseed = 1\n", "t").unwrap();
        assert_eq!(s.repetitions, 1);
        assert_eq!(s.search, SearchConfig::default());
        assert_eq!(s.noise, NoiseModel::default());
        assert_eq!(s.run_count(), 1);
        let (script, ctx) = s.context().unwrap();
        assert_eq!(script, TaskScript::canonical(TaskKind::IdlePulleySet));
        assert_eq!(ctx.seed, 1);
    }

    #[test]
    fn seed_is_required() {
        let err = Scenario::parse("task = \"idle_pulley\"\n", "t").unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let src = "task = \"idle_pulley\"\nseed = 1\n\n[search]\nspiral_pitch = 0.5\n";
        match Scenario::parse(src, "s.toml").unwrap_err() {
            ScenarioError::Parse { line, message, .. } => {
                assert_eq!(line, 5);
                assert!(message.contains("spiral_pitch"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn step_longer_than_pitch_is_invalid() {
        let src = "task = \"idle_pulley\"\nseed = 1\n[search]\nspiral_step_mm = 0.6\n";
        match Scenario::parse(src, "s.toml").unwrap_err() {
            ScenarioError::Invalid { section, line, .. } => {
                assert_eq!(section, "search");
                assert_eq!(line, Some(3));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn catalog_overrides_reach_the_parts() {
        let src = r#"
task = "one_hand"
seed = 3

[catalog.retainer_pin]
shank_diameter_mm = 6.0

[catalog.idle_pulley]
bore_segments = [{ diameter_mm = 6.01, depth_mm = 11.5 }]
"#;
        let (_, ctx) = Scenario::parse(src, "t").unwrap().context().unwrap();
        assert_eq!(ctx.catalog.peg(RETAINER_PIN).unwrap().shank_diameter_mm, 6.0);
        assert_eq!(ctx.catalog.peg(RETAINER_PIN).unwrap().head.unwrap().diameter_mm, 9.0);
        assert_eq!(
            ctx.catalog.bored(IDLE_PULLEY).unwrap().bore_segments[0].diameter_mm,
            6.01
        );
    }

    #[test]
    fn catalog_typos_and_kind_changes_are_rejected() {
        let typo = "task = \"one_hand\"\nseed = 3\n[catalog.retainer_pin]\nshank_diameter = 6.0\n";
        assert!(matches!(
            Scenario::parse(typo, "t"),
            Err(ScenarioError::Invalid { line: Some(3), .. })
        ));
        let kind = "task = \"one_hand\"\nseed = 3\n[catalog.retainer_pin]\nkind = \"bored\"\n";
        assert!(Scenario::parse(kind, "t").is_err());
        let missing = "task = \"one_hand\"\nseed = 3\n[catalog.no_such_part]\nblind = true\n";
        assert!(Scenario::parse(missing, "t").is_err());
    }

    #[test]
    fn sweep_points_cover_the_product() {
        let src = r#"
task = "clamping_pulley"
seed = 10
repetitions = 3
[[sweep]]
path = "world.tilt_increment_deg"
values = [0.5, 1]
[[sweep]]
path = "noise.nominal_offset_mm"
values = [0, 0.5, 1.0]
"#;
        let s = Scenario::parse(src, "t").unwrap();
        assert_eq!(s.point_count(), 6);
        assert_eq!(s.run_count(), 18);
        let points = s.points();
        let last = s.with_settings(&points[5]).unwrap();
        assert_eq!(last.world.tilt_increment_deg, 1.0);
        assert_eq!(last.noise.nominal_offset_mm, 1.0);
        let first = s.with_settings(&points[1]).unwrap();
        assert_eq!(first.world.tilt_increment_deg, 0.5);
        assert_eq!(first.noise.nominal_offset_mm, 0.5);
    }

    #[test]
    fn sweep_paths_must_exist() {
        for path in [
            "noise.nominal_offset",
            "search",
            "seed",
            "world..tilt_cap_deg",
            "search.gains.bogus",
        ] {
            let src = format!("task = \"idle_pulley\"\nseed = 1\n[[sweep]]\npath = \"{path}\"\nvalues = [1.0]\n");
            let err = Scenario::parse(&src, "t").unwrap_err();
            assert!(
                matches!(err, ScenarioError::Invalid { ref section, .. } if section == "sweep"),
                "{path}: {err}"
            );
        }
    }

    #[test]
    fn sweeps_reach_catalog_and_script() {
        let src = r#"
task = "clamping_pulley"
seed = 1
[[sweep]]
path = "catalog.pulley_shaft_spacer.entry_chamfer_mm"
values = [0.1, 0.5]
[[sweep]]
path = "script.abort_on_failure"
values = [false]
"#;
        let s = Scenario::parse(src, "t").unwrap();
        let p = s.with_settings(&s.points()[1]).unwrap();
        let (script, ctx) = p.context().unwrap();
        assert!(!script.abort_on_failure);
        assert_eq!(ctx.catalog.bored("pulley_shaft_spacer").unwrap().entry_chamfer_mm, 0.5);
    }

    #[test]
    fn stage_lists_replace_the_script() {
        let src = r#"
task = "one_hand"
seed = 1
[[script.stages]]
name = "pull_in"
peg = "pulley_shaft"
target = "clamping_pulley"
holder = "inner_jaw"
target_depth_mm = 15.0
"#;
        let (script, _) = Scenario::parse(src, "t").unwrap().context().unwrap();
        assert_eq!(script, TaskScript::onehand_clamping());
    }
}
