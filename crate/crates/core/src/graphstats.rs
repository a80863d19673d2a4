//! Isogeny graph experiments: supersingular counts, forgetful-map tables and
//! volcanoes over a prime field, plus the two worked examples at p = 71 and
//! p = 353.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::algebra::int::kronecker;
use crate::algebra::{FieldParams, Fp2};
use crate::chains::{
    act_prime, build_direction_table, children, cm_j_invariant, ModularChain,
};
use crate::error::{Error, Result};
use crate::modpoly::ModularSystem;
use crate::quadorder::OrderParams;

/// Cap on the number of chains a forgetful table may enumerate.
pub const MAX_FORGETFUL_CHAINS: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub from: Fp2,
    pub to: Fp2,
    pub level: u32,
}

/// Vertices, directed edges (one per root of Φ_m(from, Y), with
/// multiplicity) and the components of the level-`ell` edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphReport {
    pub p: u64,
    pub ell: u32,
    pub vertices: Vec<Fp2>,
    pub edges: Vec<Edge>,
    pub components: Vec<Vec<Fp2>>,
    /// Vertices with a single level-`ell` neighbour: the floor of a volcano.
    pub floor: Vec<Fp2>,
}

impl GraphReport {
    fn build(p: u64, ell: u32, vertices: BTreeSet<Fp2>, mut edges: Vec<Edge>) -> Self {
        edges.sort();
        let mut adj: BTreeMap<Fp2, Vec<Fp2>> = vertices.iter().map(|v| (*v, Vec::new())).collect();
        for e in edges.iter().filter(|e| e.level == ell) {
            adj.entry(e.from).or_default().push(e.to);
        }
        let mut seen = BTreeSet::new();
        let mut components = Vec::new();
        for &v in &vertices {
            if !seen.insert(v) {
                continue;
            }
            let mut comp = vec![v];
            let mut queue = VecDeque::from([v]);
            while let Some(u) = queue.pop_front() {
                for &w in &adj[&u] {
                    if seen.insert(w) {
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort();
            components.push(comp);
        }
        let floor = adj
            .iter()
            .filter(|(_, n)| n.len() == 1)
            .map(|(v, _)| *v)
            .collect();
        GraphReport {
            p,
            ell,
            vertices: vertices.into_iter().collect(),
            edges,
            components,
            floor,
        }
    }

    /// Every edge satisfies its modular relation.
    pub fn validate(&self, sys: &ModularSystem) -> Result<()> {
        for e in &self.edges {
            if !sys.is_adjacent(e.level, e.from, e.to)? {
                return Err(Error::InvariantViolation(format!(
                    "edge {} -> {} is not {}-isogenous",
                    e.from, e.to, e.level
                )));
            }
        }
        Ok(())
    }

    /// Undirected multigraph in DOT; each edge pair appears once.
    pub fn to_dot(&self) -> String {
        let mut out = format!("graph isogenies_{} {{\n", self.p);
        for v in &self.vertices {
            let _ = writeln!(out, "  \"{v}\";");
        }
        let mut pending: BTreeMap<(Fp2, Fp2, u32), i64> = BTreeMap::new();
        for e in &self.edges {
            let key = if e.from <= e.to {
                (e.from, e.to, e.level)
            } else {
                (e.to, e.from, e.level)
            };
            *pending.entry(key).or_default() += 1;
        }
        for ((a, b, m), count) in pending {
            // each undirected edge is seen from both ends, loops once per root
            let k = if a == b { count } else { (count + 1) / 2 };
            for _ in 0..k {
                let _ = writeln!(out, "  \"{a}\" -- \"{b}\" [label=\"{m}\"];");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// #SS(p) = ⌊p/12⌋ + {0, 1, 1, 2} for p ≡ {1, 5, 7, 11} mod 12.
pub fn ss_count_formula(p: u64) -> u64 {
    match p {
        2 | 3 => 1,
        _ => {
            p / 12
                + match p % 12 {
                    1 => 0,
                    5 | 7 => 1,
                    _ => 2,
                }
        }
    }
}

/// A supersingular j-invariant: a class-number-one CM value whose field
/// does not split at p.
pub fn supersingular_start(field: &FieldParams) -> Result<(i64, Fp2)> {
    for disc in [-3, -4, -7, -8, -11, -19, -43, -67, -163] {
        if kronecker(disc, field.p()) != 1 {
            let j = cm_j_invariant(disc).expect("class number one");
            return Ok((disc, field.from_i64(j)));
        }
    }
    Err(Error::BadOrder(format!(
        "no class-number-one field is inert or ramified at {}",
        field.p()
    )))
}

/// Breadth-first search of the supersingular ℓ-isogeny graph from `start`.
pub fn enumerate_ss(sys: &ModularSystem, ell: u32, start: Fp2) -> Result<GraphReport> {
    explore(sys, ell, &[], false, start)
}

/// Breadth-first search from `start` along Φ_ℓ and any `connectors` levels,
/// optionally keeping only j ∈ F_p. Components use the ℓ-edges alone, so
/// connector levels only serve to reach volcanoes the ℓ-graph cannot.
pub fn volcano_components(
    sys: &ModularSystem,
    ell: u32,
    connectors: &[u32],
    restrict_fp: bool,
    start: Fp2,
) -> Result<GraphReport> {
    explore(sys, ell, connectors, restrict_fp, start)
}

fn explore(
    sys: &ModularSystem,
    ell: u32,
    connectors: &[u32],
    restrict_fp: bool,
    start: Fp2,
) -> Result<GraphReport> {
    let f = sys.field();
    f.check(start)?;
    let mut levels = vec![ell];
    levels.extend(connectors.iter().copied().filter(|&m| m != ell));
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    let mut edges = Vec::new();
    while let Some(u) = queue.pop_front() {
        for &m in &levels {
            for v in sys.instantiate(m, u)?.roots(f, 0) {
                if restrict_fp && !v.is_in_base_field() {
                    continue;
                }
                edges.push(Edge {
                    from: u,
                    to: v,
                    level: m,
                });
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
    }
    Ok(GraphReport::build(f.p(), ell, seen, edges))
}

/// One row of the forgetful-map table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForgetfulRow {
    pub depth: u32,
    /// Distinct end j-invariants of depth-i chains.
    pub y: usize,
    /// Distinct j-invariants reached at any depth up to i.
    pub x: usize,
    /// log_p |D_i| with D_i = ℓ^{2i} Δ_K.
    pub lambda: f64,
    pub class_number: u64,
}

/// Enumerates every descending chain from the base orientation up to
/// `max_depth` and records how many j-invariants the ends cover.
pub fn forgetful_table(
    sys: &ModularSystem,
    order: &OrderParams,
    max_depth: u32,
) -> Result<Vec<ForgetfulRow>> {
    let chains = if max_depth == 0 {
        1
    } else {
        (order.ell + 1).saturating_mul(order.ell.checked_pow(max_depth - 1).unwrap_or(u64::MAX))
    };
    if chains > MAX_FORGETFUL_CHAINS {
        return Err(Error::TooDeep(chains));
    }
    let f = sys.field();
    let p = f.p() as f64;
    let j0 = crate::chains::base_j(f, order.disc)?;
    let ell = order.ell;
    // distinct (previous, current) pairs are all that matter for the future
    let mut frontier: BTreeSet<(Option<Fp2>, Fp2)> = BTreeSet::from([(None, j0)]);
    let mut cumulative: BTreeSet<Fp2> = BTreeSet::new();
    let mut rows = Vec::new();
    for depth in 0..=max_depth {
        if depth > 0 {
            let mut next = BTreeSet::new();
            for (prev, cur) in &frontier {
                for k in children(sys, ell, *cur, *prev)? {
                    next.insert((Some(*cur), k));
                }
            }
            frontier = next;
        }
        let ends: BTreeSet<Fp2> = frontier.iter().map(|(_, c)| *c).collect();
        cumulative.extend(ends.iter().copied());
        let d = (ell as f64).powi(2 * depth as i32) * order.disc.unsigned_abs() as f64;
        rows.push(ForgetfulRow {
            depth,
            y: ends.len(),
            x: cumulative.len(),
            lambda: d.ln() / p.ln(),
            class_number: order.class_number(depth),
        });
    }
    Ok(rows)
}

pub fn forgetful_csv(rows: &[ForgetfulRow]) -> String {
    let mut out = String::from("depth,y,x,lambda,class_number\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{:.6},{}", r.depth, r.y, r.x, r.lambda, r.class_number);
    }
    out
}

/// First depth whose cumulative set covers every supersingular j.
pub fn surjective_depth(rows: &[ForgetfulRow], ss: u64) -> Option<u32> {
    rows.iter().find(|r| r.x as u64 == ss).map(|r| r.depth)
}

/// A named check in a reproduction run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fact {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub facts: Vec<Fact>,
}

impl ScenarioReport {
    pub fn all_pass(&self) -> bool {
        self.facts.iter().all(|f| f.pass)
    }
}

fn fact(name: &str, pass: bool, detail: String) -> Fact {
    Fact {
        name: name.into(),
        pass,
        detail,
    }
}

fn show(js: &[Fp2]) -> String {
    let parts: Vec<String> = js.iter().map(|j| j.a.to_string()).collect();
    format!("({})", parts.join(","))
}

/// The p = 71 walk (0, 40, 17, 41, 66) and its images under a prime above 7.
pub fn reproduce_71(sys71: &ModularSystem) -> Result<ScenarioReport> {
    reproduce_71_with(sys71, 7)
}

/// As [`reproduce_71`] with another acting prime; set-up errors propagate.
pub fn reproduce_71_with(sys71: &ModularSystem, q: u64) -> Result<ScenarioReport> {
    let f = *sys71.field();
    if f.p() != 71 {
        return Err(Error::InvariantViolation("reproduction needs the field F_71²".into()));
    }
    let order = OrderParams::new(-3, 2)?;
    let ideal = order.split_prime(q)?;
    let chain = ModularChain {
        p: 71,
        ell: 2,
        j: [0u64, 40, 17, 41, 66].iter().map(|&x| f.from_u64(x)).collect(),
    };
    let table = build_direction_table(sys71, &order, &[ideal], 4)?;
    let mut facts = Vec::new();
    let valid = chain.validate(sys71, Some(Fp2::ZERO));
    facts.push(fact(
        "chain (0,40,17,41,66) is a descending 2-chain",
        valid.is_ok(),
        format!("{valid:?}"),
    ));
    let images: Vec<Result<ModularChain>> = [1, -1]
        .iter()
        .map(|&s| act_prime(sys71, &table, &chain, q, s))
        .collect();
    let (plus, minus) = match (&images[0], &images[1]) {
        (Ok(a), Ok(b)) => (a.j.clone(), b.j.clone()),
        (a, b) => {
            let detail = format!("{a:?} / {b:?}");
            for name in ["image begins (0,40)", "signs agree through depth 3", "signs separate at depth 4"] {
                facts.push(fact(name, false, detail.clone()));
            }
            return Ok(ScenarioReport {
                scenario: "p71".into(),
                facts,
            });
        }
    };
    let start = [Fp2::ZERO, f.from_u64(40)];
    facts.push(fact(
        "image begins (0,40)",
        plus[..2] == start && minus[..2] == start,
        format!("{} / {}", show(&plus), show(&minus)),
    ));
    let through3 = [Fp2::ZERO, f.from_u64(40), f.from_u64(48), f.from_u64(48)];
    facts.push(fact(
        "signs agree through depth 3",
        plus[..4] == through3 && minus[..4] == through3,
        format!("{} / {}", show(&plus[..4]), show(&minus[..4])),
    ));
    let mut ends = [plus[4], minus[4]];
    ends.sort();
    facts.push(fact(
        "signs separate at depth 4",
        ends == [f.from_u64(40), f.from_u64(66)],
        format!("ends {} and {}", plus[4], minus[4]),
    ));
    Ok(ScenarioReport {
        scenario: "p71".into(),
        facts,
    })
}

pub const F353_SURFACE: [u64; 4] = [160, 230, 270, 298];
pub const F353_FLOOR: [u64; 8] = [66, 182, 197, 236, 253, 264, 304, 330];

/// The ordinary 2-cordillera over F_353 reached from j = 160, with the
/// horizontal 7- and 13-isogenies joining its two volcanoes.
pub fn reproduce_353(sys353: &ModularSystem) -> Result<(ScenarioReport, GraphReport)> {
    let f = *sys353.field();
    if f.p() != 353 {
        return Err(Error::InvariantViolation("reproduction needs the field F_353²".into()));
    }
    let g = volcano_components(sys353, 2, &[7, 13], true, f.from_u64(160))?;
    let expect: BTreeSet<Fp2> = F353_SURFACE
        .iter()
        .chain(&F353_FLOOR)
        .map(|&x| f.from_u64(x))
        .collect();
    let got: BTreeSet<Fp2> = g.vertices.iter().copied().collect();
    let floor: BTreeSet<Fp2> = F353_FLOOR.iter().map(|&x| f.from_u64(x)).collect();
    let got_floor: BTreeSet<Fp2> = g.floor.iter().copied().collect();
    let facts = vec![
        fact(
            "twelve rational j-invariants",
            got == expect,
            format!("{} vertices", got.len()),
        ),
        fact(
            "two 2-volcanoes",
            g.components.len() == 2,
            format!("{} components", g.components.len()),
        ),
        fact(
            "floor is the depth-1 list",
            got_floor == floor,
            show(&g.floor),
        ),
        fact(
            "edges satisfy their modular relation",
            g.validate(sys353).is_ok(),
            format!("{} edges", g.edges.len()),
        ),
    ];
    Ok((
        ScenarioReport {
            scenario: "p353".into(),
            facts,
        },
        g,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys(p: u64) -> ModularSystem {
        ModularSystem::shipped(&FieldParams::new(p).unwrap())
    }

    #[test]
    fn formula_branches() {
        assert_eq!(ss_count_formula(71), 7);
        assert_eq!(ss_count_formula(73), 6);
        assert_eq!(ss_count_formula(101), 9);
        assert_eq!(ss_count_formula(103), 9);
        assert_eq!(ss_count_formula(13), 1);
    }

    #[test]
    fn ss_graph_over_71() {
        let s = sys(71);
        let g = enumerate_ss(&s, 2, Fp2::ZERO).unwrap();
        assert_eq!(g.vertices.len(), 7);
        assert_eq!(g.components.len(), 1);
        g.validate(&s).unwrap();
        // three roots per vertex, counted with multiplicity
        assert_eq!(g.edges.len(), 21);
        let v = volcano_components(&s, 2, &[], false, Fp2::ZERO).unwrap();
        assert_eq!(v, g);
        assert!(g.to_dot().contains("\"0+0*u\" -- \"40+0*u\""));
    }

    #[test]
    fn ss_graph_from_other_cm_points() {
        for p in [101u64, 103, 113, 131] {
            let s = sys(p);
            let (_, j) = supersingular_start(s.field()).unwrap();
            let g = enumerate_ss(&s, 2, j).unwrap();
            assert_eq!(g.vertices.len() as u64, ss_count_formula(p), "p = {p}");
            assert_eq!(g.components.len(), 1);
        }
    }

    #[test]
    fn forgetful_over_71() {
        let s = sys(71);
        let o = OrderParams::new(-3, 2).unwrap();
        let rows = forgetful_table(&s, &o, 4).unwrap();
        assert_eq!((rows[0].y, rows[0].x), (1, 1));
        assert!((rows[4].lambda - 768f64.ln() / 71f64.ln()).abs() < 1e-12);
        assert!((rows[4].lambda - 1.559).abs() < 1e-3);
        for r in &rows {
            assert!(r.y as u64 <= r.class_number);
            if r.lambda < 1.0 {
                assert_eq!(r.y as u64, r.class_number);
            }
        }
        for w in rows.windows(2) {
            assert!(w[0].x <= w[1].x);
        }
        assert!(forgetful_csv(&rows).starts_with("depth,y,x,lambda,class_number\n0,1,1,"));
        assert_eq!(forgetful_table(&s, &o, 40), Err(Error::TooDeep(3 << 39)));
    }

    #[test]
    fn repro_71_passes() {
        let r = reproduce_71(&sys(71)).unwrap();
        assert_eq!(r.facts.len(), 4);
        assert!(r.all_pass(), "{r:?}");
        assert_eq!(reproduce_71_with(&sys(71), 5), Err(Error::NotSplit { q: 5, disc: -3 }));
    }

    #[test]
    fn repro_353_passes() {
        let (r, g) = reproduce_353(&sys(353)).unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert_eq!(g.vertices.len(), 12);
        // the 2-edges alone cannot leave the first volcano
        let only2 = volcano_components(&sys(353), 2, &[], true, FieldParams::new(353).unwrap().from_u64(160)).unwrap();
        assert_eq!(only2.vertices.len(), 6);
    }
}
