use std::fs;
use std::path::{Path, PathBuf};

use ltl_explain::envs::{
    enumerate_states, Cell, CtfEnv, CtfState, EnvModel, GridMap, MapKind, NavEnv, NavMap, NavState, TabularEnv,
    DEFAULT_STATE_CAP,
};
use ltl_explain::formula::{enumerate_all, parse_explanation, PredicateSet};
use ltl_explain::search::{OracleResult, SearchError, ORACLE_LIMIT};
use ltl_explain::{Evaluator, Setup, TabularPolicy, UtilityRecord};

use crate::config::{RunConfig, Starts, Target};
use crate::output::{self, ResultRow};
use crate::CliError;

pub const RESULTS_FILE: &str = "results.csv";
pub const TRACE_FILE: &str = "trace.jsonl";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const ORACLE_FILE: &str = "oracle.csv";
pub const TARGET_FILE: &str = "target.policy";

enum EnvData {
    Ctf(TabularEnv<CtfState>),
    Nav { env: NavEnv, table: TabularEnv<NavState> },
}

/// A loaded configuration with its environment enumerated.
pub struct Workspace {
    pub config: RunConfig,
    env: EnvData,
    pub predicates: PredicateSet<f64>,
}

fn read_map(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn cells(list: &[[usize; 2]]) -> Vec<Cell> {
    list.iter().map(|&[r, c]| Cell::new(r, c)).collect()
}

impl Workspace {
    pub fn load(config: RunConfig) -> Result<Self, CliError> {
        let section = config.env()?;
        let text = read_map(&section.map)?;
        let map_err = |e: ltl_explain::envs::EnvError| CliError::Config(format!("{}: {e}", section.map.display()));
        let env = match section.kind {
            MapKind::Ctf => {
                let mut map = GridMap::parse(&text).map_err(map_err)?;
                let (mut blue, mut red) = match section.starts {
                    Starts::Flags => (vec![map.blue_flag], vec![map.red_flag]),
                    Starts::Territory => {
                        let free: Vec<Cell> = map.layout.free_cells().collect();
                        let blue = free.iter().copied().filter(|&c| map.is_blue_territory(c)).collect();
                        let red = free
                            .iter()
                            .copied()
                            .filter(|&c| !map.is_blue_territory(c) && c != map.red_flag)
                            .collect();
                        (blue, red)
                    }
                };
                if let Some(b) = &section.blue_starts {
                    blue = cells(b);
                }
                if let Some(r) = &section.red_starts {
                    red = cells(r);
                }
                map = map.with_starts(blue, red).map_err(map_err)?;
                let env = CtfEnv::new(map)
                    .with_kill_probability(section.kill_probability)
                    .with_chase_radius(section.chase_radius);
                EnvData::Ctf(enumerate_states(&env, DEFAULT_STATE_CAP).map_err(map_err)?)
            }
            MapKind::Nav => {
                if section.blue_starts.is_some() || section.red_starts.is_some() {
                    return Err(CliError::Config("navigation maps take their starts from `S` cells".into()));
                }
                let env = NavEnv::new(NavMap::parse(&text).map_err(map_err)?);
                let table = enumerate_states(&env, DEFAULT_STATE_CAP).map_err(map_err)?;
                EnvData::Nav { env, table }
            }
        };
        let predicates = config.predicate_set(config.feature_names()?)?;
        Ok(Self { config, env, predicates })
    }

    pub fn model(&self) -> &dyn EnvModel {
        match &self.env {
            EnvData::Ctf(t) => t,
            EnvData::Nav { table, .. } => table,
        }
    }

    pub fn setup(&self) -> Result<Setup<'_>, CliError> {
        let c = &self.config;
        Ok(Setup::new(self.model(), self.predicates.clone(), c.product, c.trainer, c.seed)?)
    }

    pub fn names(&self) -> Vec<String> {
        self.config.predicate_names()
    }

    /// Builds the target policy and its sampling pool, then the evaluator.
    pub fn evaluator(&self) -> Result<Evaluator<'_>, CliError> {
        let setup = self.setup()?;
        let (target, pool) = match self.config.target()? {
            Target::Explanation(text) => {
                let c = parse_explanation(&text, &self.names()).map_err(|e| CliError::Config(format!("target: {e}")))?;
                setup.explanation_target(&c, self.config.target.replicates)?
            }
            Target::Policy(path) => {
                let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                let policy =
                    TabularPolicy::from_text(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                let expected = self.model().num_states() * 3;
                if policy.num_states() != expected || policy.num_actions() != self.model().num_actions() {
                    return Err(CliError::Config(format!(
                        "{}: policy is {}x{}, environment needs {}x{}",
                        path.display(),
                        policy.num_states(),
                        policy.num_actions(),
                        expected,
                        self.model().num_actions()
                    )));
                }
                (policy, setup.env_pool())
            }
            Target::Shaped => {
                let EnvData::Nav { env, table } = &self.env else {
                    return Err(CliError::Config("the shaped target needs a navigation map".into()));
                };
                setup.reward_target(|s, next| env.shaped_reward(&table.states[s], &table.states[next]))?
            }
        };
        if pool.is_empty() {
            return Err(CliError::Config("target has no reachable non-trap states to sample".into()));
        }
        let c = &self.config;
        Ok(Evaluator::new(setup, c.search, c.metrics, target, &pool, c.workers)?)
    }
}

/// Files written and rows ranked by `search`.
#[derive(Debug, Clone)]
pub struct SearchReport {
    pub rows: Vec<ResultRow>,
    pub table: String,
    pub out_dir: PathBuf,
    pub total_explanations: usize,
}

/// Runs the multi-start search and writes results, trace, manifest and target.
pub fn cmd_search(config: RunConfig) -> Result<SearchReport, CliError> {
    let out_dir = config.output.clone();
    let manifest = config.to_manifest()?;
    let ws = Workspace::load(config)?;
    let ev = ws.evaluator()?;
    let outcome = ev.multi_start()?;
    for w in outcome.top.windows(2) {
        if w[0].utility() < w[1].utility() {
            return Err(CliError::Invariant("top results are out of order".into()));
        }
    }
    let rows = output::search_rows(&outcome);
    output::write_file(&out_dir.join(MANIFEST_FILE), &manifest)?;
    output::write_file(&out_dir.join(RESULTS_FILE), &output::csv_string(&rows)?)?;
    output::write_file(&out_dir.join(TRACE_FILE), &output::trace_jsonl(outcome.trace())?)?;
    output::write_file(&out_dir.join(TARGET_FILE), &ev.target().to_text())?;
    Ok(SearchReport {
        table: output::format_table(&rows),
        rows,
        out_dir,
        total_explanations: outcome.total_explanations,
    })
}

/// Scores every explanation and writes the ranked CSV. Refuses more than four
/// predicates unless `force`.
pub fn cmd_oracle(config: RunConfig, force: bool) -> Result<OracleResult<f64>, CliError> {
    let out = config.output.join(ORACLE_FILE);
    let n = config.predicates.len();
    if n > ORACLE_LIMIT && !force {
        return Err(SearchError::OracleTooLarge { n, limit: ORACLE_LIMIT }.into());
    }
    let ws = Workspace::load(config)?;
    let ev = ws.evaluator()?;
    let oracle = ev.brute_force_oracle(force)?;
    output::write_file(&out, &output::oracle_csv(&oracle)?)?;
    Ok(oracle)
}

/// Rendered canonical explanations over the configured predicates. Needs no
/// environment.
pub fn cmd_enumerate(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let names = config.predicate_names();
    let all = enumerate_all(names.len(), config.search.predicate_cap)
        .map_err(|e| CliError::Refused(e.to_string()))?;
    Ok(all.iter().map(|c| c.render(&names)).collect())
}

/// Scores one explanation against the configured target.
pub fn cmd_eval(config: RunConfig, explanation: &str) -> Result<UtilityRecord, CliError> {
    let ws = Workspace::load(config)?;
    let c = parse_explanation(explanation, &ws.names()).map_err(|e| CliError::Config(e.to_string()))?;
    let ev = ws.evaluator()?;
    Ok(ev.evaluate(&c)?)
}

/// DOT rendering of a trace file.
pub fn cmd_trace_dot(trace: &Path) -> Result<String, CliError> {
    output::trace_dot(&output::read_trace(trace)?)
}
