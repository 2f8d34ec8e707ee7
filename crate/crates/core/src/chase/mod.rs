//! The chase: immediate enforcement of matching dependencies until the
//! instance is stable, and exhaustive enumeration of every stable endpoint.

mod matcher;

pub(crate) use matcher::for_each_lhs_match;

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::ChaseError;
use crate::md::{Md, MdSet};
use crate::model::{AttrRef, Instance, MatchingFunction, SimilarityRelation, Tid, Value};

/// Default bound on the number of tuples for exhaustive enumeration.
pub const DEFAULT_MAX_TUPLES: usize = 12;
pub const DEFAULT_STEP_LIMIT: usize = 10_000;

/// One applicable enforcement of an MD on the current instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub md: String,
    /// Tuple bound to each atom's tid variable.
    pub assignment: BTreeMap<String, Tid>,
    pub left: Tid,
    pub right: Tid,
    pub left_attr: AttrRef,
    pub right_attr: AttrRef,
    #[serde(skip)]
    pub left_pos: usize,
    #[serde(skip)]
    pub right_pos: usize,
    pub old_left: Value,
    pub old_right: Value,
}

type Cell = (Tid, usize);
type EffectKey = ((Cell, Cell), (Value, Value));

/// Two steps with the same key produce the same successor instance: they
/// write the same cells and join the same pair of values.
fn effect_key(left: Cell, right: Cell, a: &Value, b: &Value) -> EffectKey {
    let cells = if left <= right { (left, right) } else { (right, left) };
    let vals = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
    (cells, vals)
}

/// A step together with the value it wrote.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Applied {
    #[serde(flatten)]
    pub step: Step,
    pub new_value: Value,
}

/// Applicable steps of one MD, one per distinct effect.
pub fn md_steps(d: &Instance, md: &Md, sim: &SimilarityRelation) -> Vec<Step> {
    let mut seen: HashSet<EffectKey> = HashSet::new();
    let mut out = Vec::new();
    let [la, ra] = md.leading;
    let (lp, rp) = (md.rhs.left_pos, md.rhs.right_pos);
    for_each_lhs_match(d, md, sim, |tids, env| {
        let old_left = &env[md.rhs.left.as_str()];
        let old_right = &env[md.rhs.right.as_str()];
        if old_left == old_right {
            return true;
        }
        let key = effect_key(
            (tids[la].clone(), lp),
            (tids[ra].clone(), rp),
            old_left,
            old_right,
        );
        if !seen.insert(key) {
            return true;
        }
        out.push(Step {
            md: md.name.clone(),
            assignment: md
                .atoms
                .iter()
                .zip(tids)
                .map(|(a, t)| (a.tid.clone(), t.clone()))
                .collect(),
            left: tids[la].clone(),
            right: tids[ra].clone(),
            left_attr: md.rhs.left_attr.clone(),
            right_attr: md.rhs.right_attr.clone(),
            left_pos: lp,
            right_pos: rp,
            old_left: old_left.clone(),
            old_right: old_right.clone(),
        });
        true
    });
    out
}

/// Every applicable step on `d`, MD by MD in declaration order. Orientations
/// and witnesses with identical effect are collapsed to the first found.
pub fn applicable_steps(d: &Instance, mds: &MdSet, sim: &SimilarityRelation) -> Vec<Step> {
    mds.iter().flat_map(|md| md_steps(d, md, sim)).collect()
}

pub fn is_stable(d: &Instance, mds: &MdSet, sim: &SimilarityRelation) -> bool {
    mds.iter().all(|md| {
        let mut stable = true;
        for_each_lhs_match(d, md, sim, |_, env| {
            stable = env[md.rhs.left.as_str()] == env[md.rhs.right.as_str()];
            stable
        });
        stable
    })
}

/// Applies `step` to `d`: both identified cells take the join of their old values.
pub fn enforce(d: &Instance, step: &Step, mf: &MatchingFunction) -> Result<Applied, ChaseError> {
    let cur_left = cell(d, &step.left, step.left_pos)?;
    let cur_right = cell(d, &step.right, step.right_pos)?;
    if cur_left != step.old_left || cur_right != step.old_right || cur_left == cur_right {
        return Err(ChaseError::NotApplicable(format!(
            "{} on ({}, {})",
            step.md, step.left, step.right
        )));
    }
    let domain = d
        .schema()
        .domain_of(&step.left_attr)
        .expect("validated attribute")
        .to_string();
    let new_value = mf.match_values(&domain, &cur_left, &cur_right)?;
    Ok(Applied {
        step: step.clone(),
        new_value,
    })
}

fn cell(d: &Instance, tid: &Tid, pos: usize) -> Result<Value, ChaseError> {
    d.get(tid)
        .map(|vals| vals[pos].clone())
        .ok_or_else(|| ChaseError::Model(crate::error::ModelError::UnknownTid(tid.clone())))
}

/// Applies a step produced by [`enforce`], returning the successor instance.
pub fn apply(d: &Instance, applied: &Applied) -> Result<Instance, ChaseError> {
    let mut next = d.clone();
    let s = &applied.step;
    next.set_value(&s.left, s.left_pos, applied.new_value.clone())?;
    next.set_value(&s.right, s.right_pos, applied.new_value.clone())?;
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChaseOptions {
    /// Longest chase sequence tolerated before giving up.
    pub step_limit: usize,
    /// Exhaustive enumeration refuses instances with more tuples than this.
    pub max_tuples: usize,
    /// Shuffles the order in which successor states are explored.
    pub explore_seed: Option<u64>,
}

impl Default for ChaseOptions {
    fn default() -> Self {
        ChaseOptions {
            step_limit: DEFAULT_STEP_LIMIT,
            max_tuples: DEFAULT_MAX_TUPLES,
            explore_seed: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CleanInstance {
    pub instance: Instance,
    /// One chase sequence reaching `instance`.
    pub steps: Vec<Applied>,
}

/// The distinct stable endpoints of the chase, ordered by instance.
#[derive(Clone, Debug, Default, Serialize)]
#[serde(transparent)]
pub struct CleanInstanceSet {
    pub members: Vec<CleanInstance>,
}

impl CleanInstanceSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.members.iter().map(|c| &c.instance)
    }
}

/// Enumerates every clean instance reachable from `d0` by depth-first search
/// over step choices, memoising visited states by current values.
pub fn chase_all(
    d0: &Instance,
    mds: &MdSet,
    sim: &SimilarityRelation,
    mf: &MatchingFunction,
    opts: &ChaseOptions,
) -> Result<CleanInstanceSet, ChaseError> {
    if d0.len() > opts.max_tuples {
        return Err(ChaseError::TooLarge {
            tuples: d0.len(),
            bound: opts.max_tuples,
        });
    }
    let mut rng = opts.explore_seed.map(ChaCha8Rng::seed_from_u64);
    // search tree: the step that first reached each state and its parent
    let mut tree: Vec<(usize, Option<Applied>)> = vec![(0, None)];
    let mut visited: HashSet<Instance> = HashSet::new();
    let mut found: BTreeMap<Instance, usize> = BTreeMap::new();
    visited.insert(d0.clone());
    let mut stack: Vec<(Instance, usize, usize)> = vec![(d0.clone(), 0, 0)];
    while let Some((state, node, depth)) = stack.pop() {
        let mut steps = applicable_steps(&state, mds, sim);
        if steps.is_empty() {
            found.entry(state).or_insert(node);
            continue;
        }
        if depth >= opts.step_limit {
            return Err(ChaseError::StepLimitExceeded(opts.step_limit));
        }
        match rng.as_mut() {
            Some(r) => steps.shuffle(r),
            // reversed so that the first step is explored first
            None => steps.reverse(),
        }
        for step in &steps {
            let applied = enforce(&state, step, mf)?;
            let next = apply(&state, &applied)?;
            if !visited.contains(&next) {
                visited.insert(next.clone());
                tree.push((node, Some(applied)));
                stack.push((next, tree.len() - 1, depth + 1));
            }
        }
    }
    log::debug!("chase_all visited {} states", visited.len());
    let path = |mut node: usize| {
        let mut steps = Vec::new();
        while node != 0 {
            let (parent, applied) = &tree[node];
            steps.push(applied.clone().expect("non-root node"));
            node = *parent;
        }
        steps.reverse();
        steps
    };
    Ok(CleanInstanceSet {
        members: found
            .into_iter()
            .map(|(instance, node)| CleanInstance {
                instance,
                steps: path(node),
            })
            .collect(),
    })
}

/// MD priority used by [`chase_one`]: seed 0 keeps declaration order, any
/// other seed shuffles it.
pub fn md_priority(seed: u64, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if seed != 0 {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    order
}

/// One chase run: repeatedly applies the first applicable step of the
/// highest-priority MD that has one, until the instance is stable.
pub fn chase_one(
    d0: &Instance,
    mds: &MdSet,
    sim: &SimilarityRelation,
    mf: &MatchingFunction,
    seed: u64,
    step_limit: usize,
) -> Result<CleanInstance, ChaseError> {
    let order = md_priority(seed, mds.len());
    let list: Vec<&Md> = mds.iter().collect();
    let mut state = d0.clone();
    let mut path = Vec::new();
    loop {
        let next_step = order.iter().find_map(|&i| {
            let mut steps = md_steps(&state, list[i], sim);
            steps.sort_by(|a, b| (&a.left, &a.right).cmp(&(&b.left, &b.right)));
            steps.into_iter().next()
        });
        let Some(step) = next_step else {
            return Ok(CleanInstance {
                instance: state,
                steps: path,
            });
        };
        if path.len() >= step_limit {
            return Err(ChaseError::StepLimitExceeded(step_limit));
        }
        let applied = enforce(&state, &step, mf)?;
        state = apply(&state, &applied)?;
        path.push(applied);
    }
}
