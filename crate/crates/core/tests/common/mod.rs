//! Seeded generators for randomized suites. Every generated input is also
//! rendered in the file formats so a failing seed can be replayed by hand.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mdclean::io::{parse_matching, parse_schema, parse_similarity};
use mdclean::md::parse_mds;
use mdclean::model::{Instance, SimilarityRelation};
use mdclean::Problem;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub struct Case {
    pub seed: u64,
    pub problem: Problem,
    /// Schema, dependencies, tables and tuples in their file formats.
    pub text: String,
}

const LETTERS: [&str; 3] = ["A", "B", "C"];

/// A random cleaning problem: one or two relations, at most 6 tuples, at most
/// 4 base values per domain, 1 to 3 dependencies.
pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let two_relations = rng.gen_bool(0.3);
    let width = if two_relations { 2 } else { rng.gen_range(2..=3) };
    let attrs = &LETTERS[..width];
    let rels: Vec<&str> = if two_relations { vec!["R", "S"] } else { vec!["R"] };

    let schema_text: String = rels
        .iter()
        .map(|r| format!("{r}({})\n", attrs.join(", ")))
        .collect();
    let schema = Arc::new(parse_schema(&schema_text).expect("generated schema"));

    let mut pools: Vec<Vec<String>> = Vec::new();
    let mut sim_text = String::new();
    let mut mf_text = String::new();
    for a in attrs {
        let lower = a.to_lowercase();
        let k = rng.gen_range(2..=4);
        let pool: Vec<String> = (1..=k).map(|i| format!("{lower}{i}")).collect();
        match rng.gen_range(0..10) {
            0 => writeln!(sim_text, "{a}: builtin token-overlap").unwrap(),
            1 => writeln!(sim_text, "{a}: builtin exact").unwrap(),
            _ => {
                let p = rng.gen_range(0.4..0.9);
                for i in 0..k {
                    for j in i + 1..k {
                        if rng.gen_bool(p) {
                            writeln!(sim_text, "{a}: {} ~ {}", pool[i], pool[j]).unwrap();
                        }
                    }
                }
            }
        }
        match rng.gen_range(0..4) {
            0 => writeln!(mf_text, "{a}: builtin token-union").unwrap(),
            1 => writeln!(mf_text, "{a}: builtin value-max").unwrap(),
            2 => writeln!(mf_text, "{a}: builtin value-min").unwrap(),
            _ => mf_text.push_str(&subset_lattice(&mut rng, a, &pool)),
        }
        pools.push(pool);
    }

    let mut sim = SimilarityRelation::new(schema.domains());
    parse_similarity(&sim_text, &mut sim).expect("generated similarity");
    let mf = parse_matching(&mf_text).expect("generated matching functions");

    let n_mds = rng.gen_range(1..=3);
    let mds_text: String = (0..n_mds)
        .map(|i| random_md(&mut rng, i, &rels, attrs))
        .collect();
    let mds = parse_mds(&mds_text, &schema, Some(&mf)).expect("generated dependencies");

    let mut d = Instance::new(schema.clone());
    let mut tuples_text = String::new();
    let n_tuples = rng.gen_range(1..=6);
    for t in 0..n_tuples {
        let rel = rels[rng.gen_range(0..rels.len())];
        let vals: Vec<&str> = pools.iter().map(|p| p[rng.gen_range(0..p.len())].as_str()).collect();
        let tid = format!("t{}", t + 1);
        writeln!(tuples_text, "{rel}({tid}, {})", vals.join(", ")).unwrap();
        d = d.with(rel, &tid, &vals).expect("generated tuple");
    }

    let text = format!(
        "# seed {seed}\n# schema\n{schema_text}# dependencies\n{mds_text}# similarity\n{sim_text}# matching\n{mf_text}# tuples\n{tuples_text}"
    );
    let problem = Problem::new(mds, sim, mf, d).expect("generated problem");
    Case { seed, problem, text }
}

/// An explicit matching table isomorphic to union over distinct nonempty
/// subsets of three bits, closed under union.
fn subset_lattice(rng: &mut ChaCha8Rng, domain: &str, pool: &[String]) -> String {
    let mut masks: Vec<u8> = (1..8).collect();
    masks.shuffle(rng);
    let base: Vec<(u8, String)> = masks.into_iter().zip(pool.iter().cloned()).collect();
    let mut closed: BTreeSet<u8> = base.iter().map(|(m, _)| *m).collect();
    loop {
        let next: BTreeSet<u8> = closed.iter().flat_map(|a| closed.iter().map(move |b| a | b)).collect();
        if next == closed {
            break;
        }
        closed = next;
    }
    let lower = domain.to_lowercase();
    let name = |m: u8| {
        base.iter()
            .find(|(b, _)| *b == m)
            .map(|(_, n)| n.clone())
            .unwrap_or_else(|| format!("{lower}_j{m}"))
    };
    let closed: Vec<u8> = closed.into_iter().collect();
    let mut out = String::new();
    for (i, &a) in closed.iter().enumerate() {
        for &b in &closed[i + 1..] {
            writeln!(out, "{domain}: m({}, {}) = {}", name(a), name(b), name(a | b)).unwrap();
        }
    }
    out
}

fn random_md(rng: &mut ChaCha8Rng, i: usize, rels: &[&str], attrs: &[&str]) -> String {
    let vars = |k: usize| -> Vec<String> { attrs.iter().map(|a| format!("{}{k}", a.to_lowercase())).collect() };
    let (v1, v2) = (vars(1), vars(2));
    let mut lhs: Vec<usize> = (0..attrs.len()).filter(|_| rng.gen_bool(0.5)).collect();
    if lhs.is_empty() {
        lhs.push(rng.gen_range(0..attrs.len()));
    }
    let rhs = rng.gen_range(0..attrs.len());
    let sims: Vec<String> = lhs.iter().map(|&j| format!("{} ~ {}", v1[j], v2[j])).collect();
    let identity = format!("{} := {}", v1[rhs], v2[rhs]);
    let r1 = rels[rng.gen_range(0..rels.len())];
    let r2 = rels[rng.gen_range(0..rels.len())];
    if rels.len() == 2 && rng.gen_bool(0.3) {
        // relational: each leading tuple needs a similar context tuple, and
        // the two context tuples must agree on the last attribute
        let last = attrs.len() - 1;
        let ctx = |k: usize, v: &[String]| {
            let mut cv: Vec<String> = attrs.iter().map(|a| format!("{}c{k}", a.to_lowercase())).collect();
            cv[last] = "shared".into();
            format!("{}(t{}; {}), {} ~ {}", rels[1], k + 2, cv.join(", "), v[0], cv[0])
        };
        return format!(
            "md m{i}: lead {r1}(t1; {}), {}, lead {r2}(t2; {}), {}, {} -> {identity};\n",
            v1.join(", "),
            ctx(1, &v1),
            v2.join(", "),
            ctx(2, &v2),
            sims.join(", ")
        );
    }
    format!(
        "md m{i}: {r1}(t1; {}), {r2}(t2; {}), {} -> {identity};\n",
        v1.join(", "),
        v2.join(", "),
        sims.join(", ")
    )
}

/// A random stratified program over `e0`, `e1` and derived `p0..p3`: rules
/// for `p_i` negate only `e*` and `p_j` with `j < i`.
pub fn random_program(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let n_facts = rng.gen_range(0..=200);
    let consts = rng.gen_range(2..=8);
    for _ in 0..n_facts {
        let e = rng.gen_range(0..2);
        writeln!(out, "e{e}(c{}, c{}).", rng.gen_range(0..consts), rng.gen_range(0..consts)).unwrap();
    }
    let vars = ["X", "Y", "Z", "W"];
    let n_rules = rng.gen_range(1..=8);
    for _ in 0..n_rules {
        let head = rng.gen_range(0..4);
        let pick = |rng: &mut ChaCha8Rng, upto: usize| -> String {
            let k = rng.gen_range(0..2 + upto);
            if k < 2 {
                format!("e{k}")
            } else {
                format!("p{}", k - 2)
            }
        };
        let mut body = Vec::new();
        let mut bound: BTreeSet<&str> = BTreeSet::new();
        for _ in 0..rng.gen_range(1..=3) {
            // positive atoms may be recursive
            let pred = pick(&mut rng, head + 1);
            let (a, b) = (vars[rng.gen_range(0..4)], vars[rng.gen_range(0..4)]);
            bound.extend([a, b]);
            body.push(format!("{pred}({a}, {b})"));
        }
        let bound: Vec<&str> = bound.into_iter().collect();
        let choose = |rng: &mut ChaCha8Rng| bound[rng.gen_range(0..bound.len())];
        if rng.gen_bool(0.4) {
            let pred = pick(&mut rng, head);
            body.push(format!("not {pred}({}, {})", choose(&mut rng), choose(&mut rng)));
        }
        if rng.gen_bool(0.2) {
            body.push(format!("{} != {}", choose(&mut rng), choose(&mut rng)));
        }
        if rng.gen_bool(0.1) {
            body.push(format!("{} = c{}", choose(&mut rng), rng.gen_range(0..consts)));
        }
        writeln!(out, "p{head}({}, {}) :- {}.", choose(&mut rng), choose(&mut rng), body.join(", ")).unwrap();
    }
    out
}
