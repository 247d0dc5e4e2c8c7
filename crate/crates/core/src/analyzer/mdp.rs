//! Long-run ratio maximization over finite Markov decision processes.
//!
//! A state is a list of chance branches. Each branch has a probability and
//! a set of deterministic choices, each carrying a numerator and denominator
//! reward. The controlling player picks one choice per branch; branches
//! belonging to a passive player simply have a single choice. The objective
//! is the ratio of long-run average numerator to long-run average
//! denominator, which is what relative revenue is.
//!
//! Solved by Dinkelbach iteration: for a fixed ratio `lambda`, relative value
//! iteration finds the policy maximizing the average of `num - lambda * den`;
//! that policy is then evaluated exactly and its ratio becomes the next
//! `lambda`.

/// One deterministic outcome available to the player controlling a branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Choice {
    pub next: u32,
    pub num: f64,
    pub den: f64,
}

/// Flat storage: states own a range of branches, branches a range of choices.
#[derive(Clone, Debug, Default)]
pub struct RatioMdp {
    state_start: Vec<u32>,
    branch_prob: Vec<f64>,
    branch_start: Vec<u32>,
    choices: Vec<Choice>,
}

/// A choice index per branch, relative to the branch's first choice.
pub type Policy = Vec<u32>;

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Self-loop weight `1 - tau` removes periodicity.
    pub tau: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Dense exact evaluation up to this many states, power iteration above.
    pub dense_limit: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tau: 0.5, tol: 1e-12, max_iter: 200_000, dense_limit: 512 }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub ratio: f64,
    pub policy: Policy,
    pub dinkelbach_rounds: usize,
}

impl RatioMdp {
    pub fn new() -> Self {
        RatioMdp { state_start: vec![0], branch_start: vec![0], ..Default::default() }
    }

    /// Append a state; `branches` lists `(probability, choices)`.
    pub fn push_state(&mut self, branches: Vec<(f64, Vec<Choice>)>) {
        for (p, cs) in branches {
            assert!(!cs.is_empty(), "every branch needs at least one choice");
            self.branch_prob.push(p);
            self.choices.extend(cs);
            self.branch_start.push(self.choices.len() as u32);
        }
        self.state_start.push(self.branch_prob.len() as u32);
    }

    pub fn num_states(&self) -> usize {
        self.state_start.len() - 1
    }

    pub fn num_branches(&self) -> usize {
        self.branch_prob.len()
    }

    fn branches(&self, s: usize) -> std::ops::Range<usize> {
        self.state_start[s] as usize..self.state_start[s + 1] as usize
    }

    fn choices_of(&self, b: usize) -> &[Choice] {
        &self.choices[self.branch_start[b] as usize..self.branch_start[b + 1] as usize]
    }

    pub fn num_choices(&self, branch: usize) -> usize {
        self.choices_of(branch).len()
    }

    /// Index of the first branch of state `s`.
    pub fn first_branch(&self, s: usize) -> usize {
        self.state_start[s] as usize
    }

    /// The policy picking choice 0 everywhere.
    pub fn default_policy(&self) -> Policy {
        vec![0; self.num_branches()]
    }

    /// Optimal average of `num - lambda * den` and a greedy policy, by
    /// relative value iteration.
    pub fn average_gain(&self, lambda: f64, opts: &SolveOptions) -> (f64, Policy) {
        let n = self.num_states();
        let tau = opts.tau;
        let mut h = vec![0.0; n];
        let mut next = vec![0.0; n];
        let mut gain = 0.0;
        for _ in 0..opts.max_iter {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for s in 0..n {
                let mut t = 0.0;
                for b in self.branches(s) {
                    let best = self
                        .choices_of(b)
                        .iter()
                        .map(|c| c.num - lambda * c.den + h[c.next as usize])
                        .fold(f64::NEG_INFINITY, f64::max);
                    t += self.branch_prob[b] * best;
                }
                let v = tau * t + (1.0 - tau) * h[s];
                let d = v - h[s];
                lo = lo.min(d);
                hi = hi.max(d);
                next[s] = v;
            }
            let base = next[0];
            for (x, y) in h.iter_mut().zip(&next) {
                *x = y - base;
            }
            gain = 0.5 * (lo + hi) / tau;
            if hi - lo < opts.tol * tau {
                break;
            }
        }
        (gain, self.greedy(lambda, &h))
    }

    fn greedy(&self, lambda: f64, h: &[f64]) -> Policy {
        (0..self.num_branches())
            .map(|b| {
                let cs = self.choices_of(b);
                let mut best = 0;
                let mut val = f64::NEG_INFINITY;
                for (i, c) in cs.iter().enumerate() {
                    let v = c.num - lambda * c.den + h[c.next as usize];
                    // keep the lowest index on near-ties so choice 0 wins them
                    if v > val + 1e-12 {
                        val = v;
                        best = i;
                    }
                }
                best as u32
            })
            .collect()
    }

    /// Long-run averages `(num, den)` per step under a fixed policy.
    pub fn evaluate(&self, policy: &Policy, opts: &SolveOptions) -> (f64, f64) {
        let pi = if self.num_states() <= opts.dense_limit {
            self.stationary_dense(policy)
        } else {
            self.stationary_power(policy, opts)
        };
        let (mut num, mut den) = (0.0, 0.0);
        for (s, &w) in pi.iter().enumerate() {
            for b in self.branches(s) {
                let c = &self.choices_of(b)[policy[b] as usize];
                num += w * self.branch_prob[b] * c.num;
                den += w * self.branch_prob[b] * c.den;
            }
        }
        (num, den)
    }

    /// Ratio `num / den` of a fixed policy.
    pub fn policy_ratio(&self, policy: &Policy, opts: &SolveOptions) -> f64 {
        let (num, den) = self.evaluate(policy, opts);
        num / den
    }

    fn stationary_dense(&self, policy: &Policy) -> Vec<f64> {
        let n = self.num_states();
        // rows: balance equations pi (P - I) = 0 transposed, last row replaced by sum = 1
        let mut a = vec![0.0; n * (n + 1)];
        let w = n + 1;
        for s in 0..n {
            a[s * w + s] -= 1.0;
            for b in self.branches(s) {
                let c = &self.choices_of(b)[policy[b] as usize];
                a[c.next as usize * w + s] += self.branch_prob[b];
            }
        }
        for s in 0..n {
            a[(n - 1) * w + s] = 1.0;
        }
        a[(n - 1) * w + n] = 1.0;
        solve_dense(&mut a, n)
    }

    fn stationary_power(&self, policy: &Policy, opts: &SolveOptions) -> Vec<f64> {
        let n = self.num_states();
        let tau = opts.tau;
        let mut pi = vec![1.0 / n as f64; n];
        let mut next = vec![0.0; n];
        for _ in 0..opts.max_iter {
            for (x, &p) in next.iter_mut().zip(&pi) {
                *x = (1.0 - tau) * p;
            }
            for s in 0..n {
                if pi[s] == 0.0 {
                    continue;
                }
                for b in self.branches(s) {
                    let c = &self.choices_of(b)[policy[b] as usize];
                    next[c.next as usize] += tau * pi[s] * self.branch_prob[b];
                }
            }
            let diff: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            std::mem::swap(&mut pi, &mut next);
            if diff < opts.tol {
                break;
            }
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        pi
    }

    /// Maximize the long-run ratio, starting from the all-zero policy.
    pub fn solve(&self, opts: &SolveOptions) -> Solution {
        let mut policy = self.default_policy();
        let mut ratio = self.policy_ratio(&policy, opts);
        let mut rounds = 0;
        for _ in 0..64 {
            rounds += 1;
            let (g, cand) = self.average_gain(ratio, opts);
            if g <= opts.tol.max(1e-13) * 10.0 || cand == policy {
                break;
            }
            let r = self.policy_ratio(&cand, opts);
            if r <= ratio {
                break;
            }
            ratio = r;
            policy = cand;
        }
        Solution { ratio, policy, dinkelbach_rounds: rounds }
    }
}

/// Gaussian elimination with partial pivoting on an `n x (n+1)` augmented matrix.
fn solve_dense(a: &mut [f64], n: usize) -> Vec<f64> {
    let w = n + 1;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * w + col].abs().total_cmp(&a[j * w + col].abs()))
            .unwrap();
        if piv != col {
            for k in 0..w {
                a.swap(piv * w + k, col * w + k);
            }
        }
        let p = a[col * w + col];
        if p.abs() < 1e-300 {
            continue;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row * w + col] / p;
            if f != 0.0 {
                for k in col..w {
                    a[row * w + k] -= f * a[col * w + k];
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            let p = a[i * w + i];
            if p.abs() < 1e-300 {
                0.0
            } else {
                a[i * w + n] / p
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // two-state chain where the controller may either collect 1 per step in
    // place or jump to a state paying 3 every other step
    fn toy() -> RatioMdp {
        let mut m = RatioMdp::new();
        m.push_state(vec![(
            1.0,
            vec![
                Choice { next: 0, num: 1.0, den: 1.0 },
                Choice { next: 1, num: 0.0, den: 1.0 },
            ],
        )]);
        m.push_state(vec![(1.0, vec![Choice { next: 0, num: 3.0, den: 1.0 }])]);
        m
    }

    #[test]
    fn evaluates_fixed_policies() {
        let m = toy();
        let o = SolveOptions::default();
        assert!((m.policy_ratio(&vec![0, 0], &o) - 1.0).abs() < 1e-12);
        assert!((m.policy_ratio(&vec![1, 0], &o) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn dinkelbach_finds_the_better_cycle() {
        let m = toy();
        let s = m.solve(&SolveOptions::default());
        assert!((s.ratio - 1.5).abs() < 1e-12);
        assert_eq!(s.policy[0], 1);
    }

    #[test]
    fn power_iteration_agrees_with_dense() {
        let m = toy();
        let dense = SolveOptions::default();
        let power = SolveOptions { dense_limit: 0, tol: 1e-14, ..dense };
        let p = vec![1, 0];
        assert!((m.policy_ratio(&p, &dense) - m.policy_ratio(&p, &power)).abs() < 1e-10);
    }
}
