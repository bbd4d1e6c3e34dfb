//! Sampled horizontal-convexity tests for sets and functions.
//!
//! Both checks are Monte-Carlo: a `true` verdict means no violation was found
//! among the sampled pairs, not a proof.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::group::{self, GroupPoint};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityOptions {
    pub trials: usize,
    pub tol: f64,
    /// λ values tested on each pair.
    pub lambdas: Vec<f64>,
}

impl Default for ConvexityOptions {
    fn default() -> Self {
        Self {
            trials: 10_000,
            tol: 1e-9,
            lambdas: (1..10).map(|k| k as f64 / 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub g: GroupPoint,
    pub g_tilde: GroupPoint,
    pub lambda: f64,
    pub combination: GroupPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityVerdict {
    pub convex: bool,
    /// Pairs that were actually tested.
    pub pairs: usize,
    pub counterexample: Option<Counterexample>,
}

/// Moves `g2` into the horizontal plane `H_g` by fixing its height.
pub fn project_to_horizontal_plane(g: &GroupPoint, g2: &GroupPoint) -> GroupPoint {
    let t = g2.t() - group::horizontality_defect(g, g2);
    GroupPoint::new(g2.z().to_vec(), t).expect("finite projection")
}

/// Checks that twisted combinations of `g ∈ Ω` and `g̃ ∈ Ω ∩ H_g` stay in `Ω`.
///
/// Each trial draws two points from `sampler`, lifts the second into `H_g`
/// and skips the pair when either end falls outside `Ω`.
pub fn is_h_convex_set<M, S, R>(member: M, mut sampler: S, rng: &mut R, opts: &ConvexityOptions) -> ConvexityVerdict
where
    M: Fn(&GroupPoint) -> bool,
    S: FnMut(&mut R) -> GroupPoint,
    R: Rng,
{
    let mut pairs = 0;
    for _ in 0..opts.trials {
        let g = sampler(rng);
        if !member(&g) {
            continue;
        }
        let g_tilde = project_to_horizontal_plane(&g, &sampler(rng));
        if !member(&g_tilde) {
            continue;
        }
        pairs += 1;
        for &lambda in &opts.lambdas {
            let c = group::twisted_combination(&g, &g_tilde, lambda).expect("lambda in [0,1]");
            if !member(&c) {
                return ConvexityVerdict {
                    convex: false,
                    pairs,
                    counterexample: Some(Counterexample {
                        g,
                        g_tilde,
                        lambda,
                        combination: c,
                    }),
                };
            }
        }
    }
    ConvexityVerdict {
        convex: true,
        pairs,
        counterexample: None,
    }
}

/// Checks `u(g * δ_λ(g^{-1} * g̃)) ≤ (1-λ)u(g) + λu(g̃)` on sampled pairs.
/// With `horizontal_only` the second point is lifted into `H_g` first.
pub fn is_h_convex_function<U, S, R>(
    u: U,
    mut sampler: S,
    rng: &mut R,
    opts: &ConvexityOptions,
    horizontal_only: bool,
) -> ConvexityVerdict
where
    U: Fn(&GroupPoint) -> f64,
    S: FnMut(&mut R) -> GroupPoint,
    R: Rng,
{
    for trial in 0..opts.trials {
        let g = sampler(rng);
        let mut g_tilde = sampler(rng);
        if horizontal_only {
            g_tilde = project_to_horizontal_plane(&g, &g_tilde);
        }
        let (ug, ugt) = (u(&g), u(&g_tilde));
        for &lambda in &opts.lambdas {
            let c = group::twisted_combination(&g, &g_tilde, lambda).expect("lambda in [0,1]");
            let bound = (1.0 - lambda) * ug + lambda * ugt;
            if u(&c) > bound + opts.tol * bound.abs().max(1.0) {
                return ConvexityVerdict {
                    convex: false,
                    pairs: trial + 1,
                    counterexample: Some(Counterexample {
                        g,
                        g_tilde,
                        lambda,
                        combination: c,
                    }),
                };
            }
        }
    }
    ConvexityVerdict {
        convex: true,
        pairs: opts.trials,
        counterexample: None,
    }
}

/// Uniform sampler on the box `[-a, a]^{2n} × [-b, b]`.
pub fn box_sampler<R: Rng>(n: usize, a: f64, b: f64) -> impl FnMut(&mut R) -> GroupPoint {
    move |rng: &mut R| {
        let z = (0..2 * n).map(|_| rng.gen_range(-a..=a)).collect();
        GroupPoint::new(z, rng.gen_range(-b..=b)).expect("finite sample")
    }
}
