//! Bisection for polynomial roots and for the flip point of a monotone
//! profitability predicate.

use serde::{Deserialize, Serialize};

use super::AnalyzerError;

/// Dense polynomial, coefficients in increasing degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// `2a^2 - (1 - a)^3`, below whose root Frontier is an equilibrium.
    pub fn frontier_bound() -> Self {
        // 2a^2 - (1 - 3a + 3a^2 - a^3)
        Polynomial(vec![-1.0, 3.0, -1.0, 1.0])
    }

    /// `a^3 - 6a^2 + 5a - 1`, the proven lower bound for strategic release.
    pub fn release_bound() -> Self {
        Polynomial(vec![-1.0, 5.0, -6.0, 1.0])
    }
}

/// Root of `poly` in `[lo, hi]` by bisection to width `tol`.
pub fn poly_root(poly: &Polynomial, lo: f64, hi: f64, tol: f64) -> Result<f64, AnalyzerError> {
    bisect(|x| poly.eval(x), lo, hi, tol)
}

/// Root of a continuous scalar function by bisection.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, AnalyzerError> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(AnalyzerError::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of a possibly noisy predicate: true when `margin > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub margin: f64,
    /// Half-width of the margin's interval, zero for exact predicates.
    pub half_width: f64,
}

impl Verdict {
    pub fn exact(margin: f64) -> Self {
        Verdict { margin, half_width: 0.0 }
    }

    pub fn holds(&self) -> bool {
        self.margin > 0.0
    }

    fn surely_true(&self) -> bool {
        self.margin > self.half_width
    }

    fn surely_false(&self) -> bool {
        self.margin < -self.half_width
    }
}

impl From<bool> for Verdict {
    fn from(b: bool) -> Self {
        Verdict::exact(if b { 1.0 } else { -1.0 })
    }
}

/// How a threshold was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMethod {
    #[serde(rename = "bisection+MC")]
    BisectionMc,
    /// Bisection over an exact dynamic-programming predicate.
    #[serde(rename = "bisection+DP")]
    BisectionDp,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdName {
    #[serde(rename = "h_IR")]
    HIr,
    #[serde(rename = "h_ocf_IR")]
    HOcfIr,
    #[serde(rename = "h_SR")]
    HSr,
}

impl std::fmt::Display for ThresholdName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ThresholdName::HIr => "h_IR",
            ThresholdName::HOcfIr => "h_ocf_IR",
            ThresholdName::HSr => "h_SR",
        })
    }
}

impl std::fmt::Display for ThresholdMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ThresholdMethod::BisectionMc => "bisection+MC",
            ThresholdMethod::BisectionDp => "bisection+DP",
            ThresholdMethod::ClosedForm => "closed-form",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub name: ThresholdName,
    pub estimate: f64,
    pub bracket: (f64, f64),
    pub method: ThresholdMethod,
}

/// Final bracket of a predicate flip search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub evaluations: usize,
}

impl Bracket {
    pub fn estimate(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn into_result(self, name: ThresholdName, method: ThresholdMethod) -> ThresholdResult {
        ThresholdResult { name, estimate: self.estimate(), bracket: (self.lo, self.hi), method }
    }
}

/// Coarse grid points sampled before bisection to check monotonicity.
pub const MONOTONE_GRID: usize = 5;

/// Locate where `pred` flips from false (at `lo`) to true (at `hi`).
///
/// The predicate is sampled on a coarse grid first; a point that is surely
/// true below a point that is surely false aborts with
/// [`AnalyzerError::NonMonotoneDetected`]. Bisection then runs on the grid
/// cell containing the first flip, down to width `tol`.
pub fn find_threshold<F, E>(mut pred: F, lo: f64, hi: f64, tol: f64) -> Result<Bracket, AnalyzerError>
where
    F: FnMut(f64) -> Result<Verdict, E>,
    E: Into<AnalyzerError>,
{
    if !(lo < hi) {
        return Err(AnalyzerError::InvalidInterval { lo, hi });
    }
    let mut evals = 0;
    let mut call = |x: f64, evals: &mut usize| -> Result<Verdict, AnalyzerError> {
        *evals += 1;
        pred(x).map_err(Into::into)
    };
    let grid: Vec<f64> = (0..MONOTONE_GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (MONOTONE_GRID - 1) as f64)
        .collect();
    let verdicts = grid.iter().map(|&x| call(x, &mut evals)).collect::<Result<Vec<_>, _>>()?;
    for i in 0..verdicts.len() {
        for j in i + 1..verdicts.len() {
            if verdicts[i].surely_true() && verdicts[j].surely_false() {
                return Err(AnalyzerError::NonMonotoneDetected { at: grid[i], against: grid[j] });
            }
        }
    }
    let first = verdicts.iter().position(Verdict::holds).ok_or(AnalyzerError::NoFlip { lo, hi })?;
    if first == 0 {
        return Err(AnalyzerError::NoFlip { lo, hi });
    }
    let (mut a, mut b) = (grid[first - 1], grid[first]);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if call(mid, &mut evals)?.holds() {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(Bracket { lo: a, hi: b, evaluations: evals })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_roots() {
        let r = poly_root(&Polynomial::frontier_bound(), 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.361).abs() < 1e-3, "{r}");
        let r = poly_root(&Polynomial::release_bound(), 0.0, 0.5, 1e-12).unwrap();
        assert!((r - 0.308).abs() < 1e-3, "{r}");
        let r = poly_root(&Polynomial(vec![-0.5, 1.0]), 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(r, 0.5);
        assert!(poly_root(&Polynomial(vec![1.0, 1.0]), 0.0, 1.0, 1e-9).is_err());
    }

    #[test]
    fn flip_point_of_step_predicate() {
        let b = find_threshold(|x| Ok::<_, AnalyzerError>(Verdict::from(x > 0.42)), 0.3, 0.5, 1e-4).unwrap();
        assert!(b.lo <= 0.42 && 0.42 <= b.hi && b.hi - b.lo <= 1e-4);
    }

    #[test]
    fn non_monotone_predicate_rejected() {
        let r = find_threshold(|x| Ok::<_, AnalyzerError>(Verdict::from(x < 0.35)), 0.3, 0.5, 1e-4);
        assert!(matches!(r, Err(AnalyzerError::NonMonotoneDetected { .. })));
    }

    #[test]
    fn noisy_points_inside_interval_are_tolerated() {
        let pred = |x: f64| Ok::<_, AnalyzerError>(Verdict { margin: x - 0.4, half_width: 0.2 });
        let b = find_threshold(pred, 0.3, 0.5, 1e-3).unwrap();
        assert!((b.estimate() - 0.4).abs() < 1e-3);
    }
}
