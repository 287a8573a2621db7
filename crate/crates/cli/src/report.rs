//! Serializable report types and their text rendering.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use hnstrata::exact::RatStr;
use hnstrata::hilbert::{HilbertPoly, KroneckerHnType, QuotIndex, SheafHnType};
use hnstrata::p1sheaf::{AckReport, GridReport, MultiVertexReport};

pub trait Render {
    fn text(&self) -> String;
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn vector<T: ToString>(xs: &[T]) -> String {
    format!("({})", join(xs))
}

fn hn_type(t: &SheafHnType) -> String {
    let entries: Vec<String> = t.entries.iter().map(ToString::to_string).collect();
    format!("[{}]", entries.join(", "))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointStratum {
    Unstable {
        lambda: Vec<i64>,
        pairing: RatStr,
        norm_sq: RatStr,
    },
    Semistable {
        status: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusStrataReport {
    pub points: Vec<PointStratum>,
}

impl Render for TorusStrataReport {
    fn text(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.points.iter().enumerate() {
            match p {
                PointStratum::Semistable { .. } => writeln!(out, "point {i}: semistable"),
                PointStratum::Unstable {
                    lambda,
                    pairing,
                    norm_sq,
                } => writeln!(
                    out,
                    "point {i}: lambda {} pairing {pairing} norm_sq {norm_sq}",
                    vector(lambda)
                ),
            }
            .expect("string write");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrassmannReport {
    pub rank: usize,
    pub lambda: Option<Vec<i64>>,
}

impl Render for GrassmannReport {
    fn text(&self) -> String {
        match &self.lambda {
            Some(l) => format!("rank {}: lambda {}\n", self.rank, vector(l)),
            None => format!("rank {}: semistable\n", self.rank),
        }
    }
}

/// Basis rows per vertex name.
pub type SubspaceJson = BTreeMap<String, Vec<Vec<RatStr>>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuiverHnReport {
    pub gamma: Vec<Vec<usize>>,
    pub slopes: Vec<RatStr>,
    pub filtration: Option<Vec<SubspaceJson>>,
    pub oracles: Vec<String>,
    pub primes: Vec<u64>,
}

impl Render for QuiverHnReport {
    fn text(&self) -> String {
        let mut out = String::new();
        let state = if self.gamma.len() <= 1 {
            "semistable"
        } else {
            "unstable"
        };
        writeln!(out, "{state}, {} HN factor(s)", self.gamma.len()).expect("string write");
        for (i, (d, s)) in self.gamma.iter().zip(&self.slopes).enumerate() {
            writeln!(out, "factor {}: dim {} slope {s}", i + 1, vector(d)).expect("string write");
        }
        if self.filtration.is_none() {
            out.push_str("filtration certified modulo primes only\n");
        }
        writeln!(out, "oracles: {}", self.oracles.join(", ")).expect("string write");
        if !self.primes.is_empty() {
            writeln!(out, "primes: {}", join(&self.primes)).expect("string write");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompetitorJson {
    pub lambda: Vec<Vec<i64>>,
    pub pairing: RatStr,
    pub norm_sq: RatStr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HesselinkReport {
    pub gamma: Vec<Vec<usize>>,
    pub lambda: Vec<Vec<RatStr>>,
    pub lambda_primitive: Vec<Vec<i64>>,
    pub pairing: RatStr,
    pub norm_sq: RatStr,
    pub semistable: bool,
    pub limit_exists: bool,
    pub frames: usize,
    pub competitors: u64,
    pub best: Option<CompetitorJson>,
    pub violations: u64,
    pub passed: bool,
}

impl Render for HesselinkReport {
    fn text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        writeln!(
            out,
            "{verdict}: HN filtration {} the adapted 1-PS",
            if self.passed {
                "gives"
            } else {
                "does not give"
            }
        )
        .expect("string write");
        let gamma: Vec<String> = self.gamma.iter().map(|d| vector(d)).collect();
        writeln!(out, "HN type: {}", gamma.join(" ")).expect("string write");
        let lambda: Vec<String> = self.lambda_primitive.iter().map(|w| vector(w)).collect();
        writeln!(out, "lambda: {}", lambda.join(" ")).expect("string write");
        writeln!(out, "pairing {} norm_sq {}", self.pairing, self.norm_sq).expect("string write");
        writeln!(out, "limit exists: {}", self.limit_exists).expect("string write");
        writeln!(
            out,
            "{} competitors over {} frames, {} violations",
            self.competitors, self.frames, self.violations
        )
        .expect("string write");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderReport {
    pub p: HilbertPoly,
    pub q: HilbertPoly,
    pub order: String,
}

impl Render for OrderReport {
    fn text(&self) -> String {
        format!("{} {} {}\n", self.p, self.order, self.q)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetaReport {
    pub tau: SheafHnType,
    pub m: i64,
    pub beta: QuotIndex,
    pub gamma: KroneckerHnType,
    pub fixed_locus_weight: RatStr,
}

impl Render for BetaReport {
    fn text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "tau: {}", hn_type(&self.tau)).expect("string write");
        writeln!(
            out,
            "beta at n = {}: r = {} l = {}",
            self.beta.n,
            vector(&self.beta.r),
            vector(&self.beta.l)
        )
        .expect("string write");
        if self.beta.merged {
            out.push_str("equal weights were merged\n");
        }
        let gamma: Vec<String> = self.gamma.iter().map(|d| vector(d)).collect();
        writeln!(out, "gamma at m = {}: {}", self.m, gamma.join(" ")).expect("string write");
        writeln!(out, "fixed locus weight: {}", self.fixed_locus_weight).expect("string write");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub n: i64,
    pub m: i64,
    pub deg_bound: usize,
    pub coeff_bound: i64,
    pub parts_bound: usize,
    pub count: usize,
    pub collisions: Vec<[SheafHnType; 2]>,
}

impl Render for CollisionReport {
    fn text(&self) -> String {
        if self.collisions.is_empty() {
            return "no collisions within bounds\n".into();
        }
        let mut out = format!(
            "{} collisions at (n, m) = ({}, {})\n",
            self.count, self.n, self.m
        );
        for [a, b] in &self.collisions {
            writeln!(out, "{} ~ {}", hn_type(a), hn_type(b)).expect("string write");
        }
        out
    }
}

impl Render for AckReport {
    fn text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.matched { "MATCH" } else { "MISMATCH" };
        writeln!(
            out,
            "{verdict} for {} at (n, m) = ({}, {})",
            self.sheaf, self.n, self.m
        )
        .expect("string write");
        writeln!(out, "tau: {}", hn_type(&self.tau)).expect("string write");
        let e: Vec<String> = self.expected.iter().map(|d| vector(d)).collect();
        let c: Vec<String> = self.computed.iter().map(|d| vector(d)).collect();
        writeln!(out, "expected: {}", e.join(" ")).expect("string write");
        writeln!(out, "computed: {}", c.join(" ")).expect("string write");
        writeln!(out, "semistable: {}", self.semistable).expect("string write");
        writeln!(out, "oracles: {}", self.oracles.join(", ")).expect("string write");
        out
    }
}

impl Render for GridReport {
    fn text(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let state = match (c.matched, &c.error) {
                (Some(true), _) => "MATCH".to_string(),
                (Some(false), _) => "MISMATCH".to_string(),
                (None, Some(e)) => format!("error: {e}"),
                (None, None) => "skipped".to_string(),
            };
            writeln!(out, "({}, {}): {state}", c.n, c.m).expect("string write");
        }
        match self.minimal {
            Some([n, m]) => writeln!(out, "minimal matching cell: ({n}, {m})"),
            None => writeln!(out, "no matching cell"),
        }
        .expect("string write");
        if !self.non_monotone.is_empty() {
            let cells: Vec<String> = self
                .non_monotone
                .iter()
                .map(|[n, m]| format!("({n}, {m})"))
                .collect();
            writeln!(out, "non-monotone cells: {}", cells.join(" ")).expect("string write");
        }
        out
    }
}

impl Render for MultiVertexReport {
    fn text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.matched { "MATCH" } else { "MISMATCH" };
        writeln!(
            out,
            "{verdict} for {} at n = {}",
            self.sheaf,
            vector(&self.ns)
        )
        .expect("string write");
        writeln!(
            out,
            "theta {} alpha {}",
            vector(&self.theta),
            vector(&self.alpha)
        )
        .expect("string write");
        let e: Vec<String> = self.expected.iter().map(|d| vector(d)).collect();
        let c: Vec<String> = self.computed.iter().map(|d| vector(d)).collect();
        writeln!(out, "expected: {}", e.join(" ")).expect("string write");
        writeln!(out, "computed: {}", c.join(" ")).expect("string write");
        writeln!(out, "semistable: {}", self.semistable).expect("string write");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hnstrata::exact::int;
    use hnstrata::p1sheaf::GridCell;

    #[test]
    fn empty_collision_list() {
        let r = CollisionReport {
            n: 1,
            m: 2,
            deg_bound: 1,
            coeff_bound: 3,
            parts_bound: 2,
            count: 0,
            collisions: vec![],
        };
        assert_eq!(r.text(), "no collisions within bounds\n");
    }

    #[test]
    fn grid_lines() {
        let cell = |n, m, matched| GridCell {
            n,
            m,
            matched,
            error: None,
        };
        let r = GridReport {
            cells: vec![cell(0, 1, Some(true)), cell(0, 2, Some(false))],
            minimal: Some([0, 1]),
            non_monotone: vec![[0, 2]],
        };
        assert_eq!(
            r.text(),
            "(0, 1): MATCH\n(0, 2): MISMATCH\nminimal matching cell: (0, 1)\nnon-monotone cells: (0, 2)\n"
        );
    }

    #[test]
    fn point_strata_serialize_per_shape() {
        let points = vec![
            PointStratum::Semistable {
                status: "semistable".into(),
            },
            PointStratum::Unstable {
                lambda: vec![-1, 0],
                pairing: RatStr(int(-1)),
                norm_sq: RatStr(int(1)),
            },
        ];
        let s = serde_json::to_string(&TorusStrataReport { points }).unwrap();
        assert_eq!(
            s,
            r#"{"points":[{"status":"semistable"},{"lambda":[-1,0],"pairing":"-1","norm_sq":"1"}]}"#
        );
        let back: TorusStrataReport = serde_json::from_str(&s).unwrap();
        assert!(matches!(back.points[1], PointStratum::Unstable { .. }));
    }
}
