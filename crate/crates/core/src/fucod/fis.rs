//! Mamdani fuzzy inference over the four detector scores.
//!
//! Every score is fuzzified into LOW and HIGH. Six rules map the result to
//! the output sets LOW, MED and HIGH: one detector alone raises a medium
//! alarm, two corroborating detectors raise a high one.
//!
//! | rule | antecedent                                   | output |
//! |------|----------------------------------------------|--------|
//! | R1   | g HIGH and l HIGH                            | HIGH   |
//! | R2   | d HIGH and c HIGH                            | HIGH   |
//! | R3   | g, d, c and l LOW                            | LOW    |
//! | R4   | (g or l HIGH) and d LOW and c LOW            | MED    |
//! | R5   | (d or c HIGH) and g LOW and l LOW            | MED    |
//! | R6   | any of g∧d, g∧c, l∧d, l∧c HIGH               | HIGH   |
//!
//! AND is `min`, OR is `max`, implication clips with `min`, aggregation
//! takes the `max`, and the crisp level is the centroid of the aggregate on
//! a uniform grid over [0, 1].

use crate::model::{DetectorScores, OutlierLevel};

pub const GRID_POINTS: usize = 201;
/// Aggregates with less area than this fall back to the plain mean.
pub const MIN_AREA: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Trapezoid {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// Membership degree; the plateau `[b, c]` is closed, so a vertical
    /// edge (`a == b` or `c == d`) belongs to the plateau.
    pub fn membership(&self, x: f64) -> f64 {
        if self.b <= x && x <= self.c {
            1.0
        } else if x <= self.a || x >= self.d {
            0.0
        } else if x < self.b {
            (x - self.a) / (self.b - self.a)
        } else {
            (self.d - x) / (self.d - self.c)
        }
    }
}

pub const INPUT_LOW: Trapezoid = Trapezoid::new(0.0, 0.0, 0.3, 0.6);
pub const INPUT_HIGH: Trapezoid = Trapezoid::new(0.4, 0.7, 1.0, 1.0);
pub const OUTPUT_LOW: Trapezoid = Trapezoid::new(0.0, 0.0, 0.2, 0.4);
pub const OUTPUT_MED: Trapezoid = Trapezoid::new(0.3, 0.45, 0.55, 0.7);
pub const OUTPUT_HIGH: Trapezoid = Trapezoid::new(0.6, 0.8, 1.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    G,
    D,
    C,
    L,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Term {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Low,
    Med,
    High,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Antecedent {
    Is(Input, Term),
    All(Vec<Antecedent>),
    Any(Vec<Antecedent>),
}

impl Antecedent {
    fn strength(&self, m: &Fuzzified) -> f64 {
        match self {
            Antecedent::Is(input, term) => m.degree(*input, *term),
            Antecedent::All(parts) => parts.iter().map(|p| p.strength(m)).fold(1.0, f64::min),
            Antecedent::Any(parts) => parts.iter().map(|p| p.strength(m)).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: &'static str,
    pub when: Antecedent,
    pub then: Level,
}

struct Fuzzified {
    low: [f64; 4],
    high: [f64; 4],
}

impl Fuzzified {
    fn new(s: &DetectorScores) -> Self {
        let v = s.as_array();
        Self {
            low: v.map(|x| INPUT_LOW.membership(x)),
            high: v.map(|x| INPUT_HIGH.membership(x)),
        }
    }

    fn degree(&self, input: Input, term: Term) -> f64 {
        let i = input as usize;
        match term {
            Term::Low => self.low[i],
            Term::High => self.high[i],
        }
    }
}

/// Result of one inference, with the intermediate rule strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub level: f64,
    pub strengths: Vec<f64>,
    pub used_fallback: bool,
}

#[derive(Debug, Clone)]
pub struct RuleBase {
    rules: Vec<Rule>,
    grid: Vec<f64>,
    /// Output set memberships on the grid, indexed by `Level`.
    shapes: [Vec<f64>; 3],
}

impl RuleBase {
    pub fn standard() -> Self {
        use Antecedent::{All, Any, Is};
        use Input::{C, D, G, L};
        use Term::{High, Low};
        let pair = |a, b| All(vec![Is(a, High), Is(b, High)]);
        let rules = vec![
            Rule { name: "R1", when: pair(G, L), then: Level::High },
            Rule { name: "R2", when: pair(D, C), then: Level::High },
            Rule {
                name: "R3",
                when: All(vec![Is(G, Low), Is(D, Low), Is(C, Low), Is(L, Low)]),
                then: Level::Low,
            },
            Rule {
                name: "R4",
                when: All(vec![Any(vec![Is(G, High), Is(L, High)]), Is(D, Low), Is(C, Low)]),
                then: Level::Med,
            },
            Rule {
                name: "R5",
                when: All(vec![Any(vec![Is(D, High), Is(C, High)]), Is(G, Low), Is(L, Low)]),
                then: Level::Med,
            },
            Rule {
                name: "R6",
                when: Any(vec![pair(G, D), pair(G, C), pair(L, D), pair(L, C)]),
                then: Level::High,
            },
        ];
        Self::new(rules)
    }

    pub fn new(rules: Vec<Rule>) -> Self {
        let grid: Vec<f64> = (0..GRID_POINTS)
            .map(|i| i as f64 / (GRID_POINTS - 1) as f64)
            .collect();
        let shape = |t: Trapezoid| grid.iter().map(|&x| t.membership(x)).collect::<Vec<_>>();
        let shapes = [shape(OUTPUT_LOW), shape(OUTPUT_MED), shape(OUTPUT_HIGH)];
        Self { rules, grid, shapes }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// Firing strength of every rule.
    pub fn strengths(&self, s: &DetectorScores) -> Vec<f64> {
        let m = Fuzzified::new(s);
        self.rules.iter().map(|r| r.when.strength(&m)).collect()
    }

    pub fn infer(&self, s: &DetectorScores) -> Inference {
        let strengths = self.strengths(s);
        let mut clip = [0.0f64; 3];
        for (rule, w) in self.rules.iter().zip(&strengths) {
            let slot = &mut clip[rule.then as usize];
            *slot = slot.max(*w);
        }
        let (mut area, mut moment) = (0.0, 0.0);
        for (k, &x) in self.grid.iter().enumerate() {
            let mu = (0..3)
                .map(|lvl| clip[lvl].min(self.shapes[lvl][k]))
                .fold(0.0, f64::max);
            area += mu;
            moment += mu * x;
        }
        if area < MIN_AREA {
            let v = s.as_array();
            return Inference {
                level: v.iter().sum::<f64>() / 4.0,
                strengths,
                used_fallback: true,
            };
        }
        Inference {
            level: moment / area,
            strengths,
            used_fallback: false,
        }
    }

    pub fn fuse(&self, s: &DetectorScores) -> OutlierLevel {
        OutlierLevel::saturating(self.infer(s).level)
    }
}

/// Fuses each sample's detector scores into its outlier level with the
/// standard rule base.
pub fn fis_fuse(scores: &[DetectorScores]) -> Vec<OutlierLevel> {
    let rules = RuleBase::standard();
    scores.iter().map(|s| rules.fuse(s)).collect()
}
