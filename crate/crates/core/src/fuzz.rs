//! Seeded corpus of implication checks over random polynomials. Each draw is
//! fully determined by `(kind, seed, index)`, so a single failing instance
//! can be regenerated and rerun on a finer grid.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::indexsets::hyperbolic_cross;
use crate::kernels::jackson_kernel;
use crate::measure::GridFunction;
use crate::remez::{
    check_lemma_2_1, check_lemma_2_2, check_prop_2_1, check_prop_2_1p, check_prop_2_2, remez_ratio, tolerance,
    CheckOutcome,
};
use crate::sample::{draw_rng, random_poly_on};
use crate::spectral::{evaluate_on_grid, EvalOptions, Grid, TrigPoly};

/// Exponents drawn by the corpus.
pub const EXPONENTS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, f64::INFINITY];

/// Oversampling used when a case is replayed.
pub const REPLAY_OVERSAMPLE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CheckKind {
    /// `RI(inf, b, R) => RI(p, b/2, 2^{1/p} R)`.
    Lemma21,
    /// `RI(p, b, R) => RI(q, b, R^{p/q})`.
    Lemma22,
    /// `||f||_p <= R^{q beta} b^{-beta} ||f||_q`.
    Prop21,
    /// `||f||_p <= R b^{-beta} ||f||_q`.
    Prop21p,
    /// Nikol'skii constant to Remez budget, then `R_q(b) <= 2^{max(1,1/q)}`.
    Prop22,
    /// Grid maximum of a shifted Fejér kernel against its exact peak; fails on
    /// coarse grids that miss the peak.
    SupResolution,
    /// [`CheckKind::Lemma21`] with the inequality reversed; false whenever the
    /// lemma holds with slack.
    MutatedLemma21,
}

impl CheckKind {
    pub const IMPLICATIONS: [CheckKind; 5] =
        [CheckKind::Lemma21, CheckKind::Lemma22, CheckKind::Prop21, CheckKind::Prop21p, CheckKind::Prop22];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Lemma21 => "lemma-2.1",
            CheckKind::Lemma22 => "lemma-2.2",
            CheckKind::Prop21 => "prop-2.1",
            CheckKind::Prop21p => "prop-2.1p",
            CheckKind::Prop22 => "prop-2.2",
            CheckKind::SupResolution => "sup-resolution",
            CheckKind::MutatedLemma21 => "mutated-lemma-2.1",
        }
    }

    /// Admissible `(p, q)` pairs; `q` is `None` for single-exponent checks.
    pub fn exponent_pairs(self) -> Vec<(f64, Option<f64>)> {
        let finite = || EXPONENTS.iter().copied().filter(|p| p.is_finite());
        match self {
            CheckKind::Lemma21 | CheckKind::MutatedLemma21 => finite().map(|p| (p, None)).collect(),
            CheckKind::Lemma22 | CheckKind::Prop21p => pairs(finite().collect()),
            CheckKind::Prop21 | CheckKind::Prop22 => pairs(EXPONENTS.to_vec()),
            CheckKind::SupResolution => vec![(f64::INFINITY, None)],
        }
    }
}

fn pairs(ps: Vec<f64>) -> Vec<(f64, Option<f64>)> {
    let mut out = Vec::new();
    for &p in &ps {
        for &q in &ps {
            if q < p {
                out.push((p, Some(q)));
            }
        }
    }
    out
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            CheckKind::Lemma21,
            CheckKind::Lemma22,
            CheckKind::Prop21,
            CheckKind::Prop21p,
            CheckKind::Prop22,
            CheckKind::SupResolution,
            CheckKind::MutatedLemma21,
        ]
        .into_iter()
        .find(|k| k.name() == s.trim())
        .ok_or_else(|| Error::Parse(format!("unknown check `{s}`")))
    }
}

/// One instance: the polynomial is a function of `(seed, index, dim, degree)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzCase {
    pub kind: CheckKind,
    pub seed: u64,
    pub index: u64,
    pub dim: usize,
    /// `N` of the hyperbolic cross `Gamma(N)` carrying the coefficients.
    pub degree: u64,
    pub p: f64,
    pub q: Option<f64>,
    pub b: f64,
    pub oversample: usize,
}

/// Draws the parameters of case `index`: `d` in `{1, 2}`, `N <= 32` (`d = 1`)
/// or `N <= 16` (`d = 2`), an admissible exponent pair, and a log-uniform
/// `b` in `[1e-3, 1/2]`.
pub fn draw_case(kind: CheckKind, seed: u64, index: u64, oversample: usize) -> FuzzCase {
    let mut rng = draw_rng(seed, 2 * index);
    let dim = if kind == CheckKind::SupResolution { 1 } else { rng.random_range(1..=2usize) };
    let degree = if dim == 1 { rng.random_range(1..=32u64) } else { rng.random_range(1..=16u64) };
    let choices = kind.exponent_pairs();
    let (p, q) = choices[rng.random_range(0..choices.len())];
    let b = (rng.random_range(1e-3f64.ln()..0.5f64.ln())).exp();
    FuzzCase { kind, seed, index, dim, degree, p, q, b, oversample }
}

/// The polynomial of a case.
pub fn case_poly(case: &FuzzCase) -> Result<TrigPoly<f64>> {
    if case.kind == CheckKind::SupResolution {
        let n = case.degree;
        let fejer = jackson_kernel::<f64>(n + 1, 1)?;
        let coarse = Grid::for_degrees(&[n as i64], 1)?;
        return Ok(fejer.shift(&[std::f64::consts::PI / coarse.size(0) as f64]));
    }
    let set = hyperbolic_cross(case.degree, case.dim)?;
    random_poly_on(&set, &mut draw_rng(case.seed, 2 * case.index + 1))
}

#[derive(Clone, Debug)]
pub struct FuzzOutcome {
    pub case: FuzzCase,
    pub outcome: CheckOutcome<f64>,
    pub grid: String,
}

impl FuzzOutcome {
    pub fn violated(&self) -> bool {
        !self.outcome.holds
    }
}

fn exponent(q: Option<f64>) -> Result<f64> {
    q.ok_or_else(|| Error::InvalidParameter("check needs a second exponent q".into()))
}

/// Runs one case on the grid `for_degrees(deg f, oversample)`.
pub fn run_case(case: &FuzzCase) -> Result<FuzzOutcome> {
    let f = case_poly(case)?;
    let grid = Grid::for_degrees(&f.degrees(), case.oversample)?;
    let g = evaluate_on_grid(&f, &grid, &EvalOptions::default())?;
    let outcome = check(case, &f, &g)?;
    Ok(FuzzOutcome { case: case.clone(), outcome, grid: grid.describe() })
}

fn check(case: &FuzzCase, f: &TrigPoly<f64>, g: &GridFunction<f64>) -> Result<CheckOutcome<f64>> {
    let (p, b) = (case.p, case.b);
    Ok(match case.kind {
        CheckKind::Lemma21 => check_lemma_2_1(g, b, p)?,
        CheckKind::Lemma22 => check_lemma_2_2(g, b, p, exponent(case.q)?)?,
        CheckKind::Prop21 => check_prop_2_1(g, b, p, exponent(case.q)?)?,
        CheckKind::Prop21p => check_prop_2_1p(g, b, p, exponent(case.q)?)?,
        CheckKind::Prop22 => check_prop_2_2(g, p, exponent(case.q)?)?.0,
        CheckKind::SupResolution => {
            let peak: f64 = f.iter().map(|(_, c)| c.norm()).sum();
            CheckOutcome::compare(peak, g.max_abs(), 1e-3)
        }
        CheckKind::MutatedLemma21 => {
            let r_inf = remez_ratio(g, b, f64::INFINITY)?.ratio.value();
            let r_p = remez_ratio(g, b / 2.0, p)?.ratio.value();
            CheckOutcome::compare(2f64.powf(1.0 / p) * r_inf, r_p, tolerance(p))
        }
    })
}

/// `draws` cases of one kind, evaluated in parallel and returned in index order.
pub fn run_corpus(kind: CheckKind, draws: u64, seed: u64, oversample: usize) -> Result<Vec<FuzzOutcome>> {
    (0..draws).into_par_iter().map(|i| run_case(&draw_case(kind, seed, i, oversample))).collect()
}

/// Verdict of rerunning a violation at [`REPLAY_OVERSAMPLE`].
#[derive(Clone, Debug)]
pub struct ReplayReport {
    pub original: FuzzOutcome,
    pub refined: FuzzOutcome,
}

impl ReplayReport {
    /// The violation survives refinement: a logic error, not quadrature.
    pub fn persists(&self) -> bool {
        self.refined.violated()
    }

    pub fn verdict(&self) -> &'static str {
        match (self.original.violated(), self.persists()) {
            (_, true) => "persists",
            (true, false) => "vanishes",
            (false, false) => "no-violation",
        }
    }
}

pub fn replay(case: &FuzzCase) -> Result<ReplayReport> {
    let original = run_case(case)?;
    let refined = run_case(&FuzzCase { oversample: case.oversample.max(REPLAY_OVERSAMPLE), ..case.clone() })?;
    Ok(ReplayReport { original, refined })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_are_deterministic_and_admissible() {
        for kind in CheckKind::IMPLICATIONS {
            for i in 0..50 {
                let c = draw_case(kind, 7, i, 2);
                assert_eq!(c, draw_case(kind, 7, i, 2));
                assert!((1e-3..=0.5).contains(&c.b));
                if let Some(q) = c.q {
                    assert!(q < c.p);
                }
                assert!(kind.exponent_pairs().contains(&(c.p, c.q)));
            }
            assert_eq!(kind.name().parse::<CheckKind>().unwrap(), kind);
        }
        assert_eq!(case_poly(&draw_case(CheckKind::Prop21, 3, 4, 2)).unwrap(), case_poly(&draw_case(CheckKind::Prop21, 3, 4, 2)).unwrap());
    }

    #[test]
    fn small_corpus_has_no_violations() {
        for kind in CheckKind::IMPLICATIONS {
            let out = run_corpus(kind, 40, 1, 2).unwrap();
            assert_eq!(out.len(), 40);
            assert!(out.iter().all(|o| !o.violated()), "{kind}: {:?}", out.iter().find(|o| o.violated()));
        }
    }

    #[test]
    fn replay_separates_quadrature_from_logic() {
        let c = FuzzCase { oversample: 1, ..draw_case(CheckKind::SupResolution, 0, 0, 1) };
        let r = replay(&c).unwrap();
        assert!(r.original.violated());
        assert_eq!(r.verdict(), "vanishes");

        let bad = (0..200)
            .map(|i| draw_case(CheckKind::MutatedLemma21, 0, i, 2))
            .find(|c| run_case(c).unwrap().violated())
            .expect("the mutated lemma fails somewhere");
        let r = replay(&bad).unwrap();
        assert_eq!(r.verdict(), "persists");
    }
}
