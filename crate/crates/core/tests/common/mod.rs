#![allow(dead_code)]

use bdi::bdi::{Observation, Particles};
use rand::Rng;

/// Definition-level identifiability: length and void checks, the two
/// wellspread margins, then exhaustive search over all permutations.
/// Returns every permutation whose matched pairs are within `r` in each
/// coordinate, or `None` when a precondition fails.
pub fn brute_force_matches(x: &Observation, y: &Observation, delta: f64, lambda: f64) -> Option<Vec<Vec<usize>>> {
    let l = x.len();
    if l != y.len() || l == 0 {
        return None;
    }
    let r = delta.powf(lambda);
    let d = x.dim();
    let spread = |c: &Observation, eps: f64| {
        (0..l).all(|i| (i + 1..l).all(|j| (0..d).all(|m| (c.particle(i)[m] - c.particle(j)[m]).abs() >= eps)))
    };
    if !spread(x, 4.0 * r) || !spread(y, 2.0 * r) {
        return None;
    }
    let mut found = Vec::new();
    let mut perm: Vec<usize> = (0..l).collect();
    permutations(&mut perm, 0, &mut |p| {
        let ok = (0..l).all(|i| (0..d).all(|m| (y.particle(p[i])[m] - x.particle(i)[m]).abs() < r));
        if ok {
            found.push(p.to_vec());
        }
    });
    Some(found)
}

fn permutations(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// A pair `(x, y)` where `y` is a shuffled, jittered copy of `x`, with
/// occasional length changes. Scales are chosen so that all outcomes of
/// the matching occur with non-negligible frequency.
pub fn random_pair<R: Rng>(rng: &mut R, max_len: usize, r: f64) -> (Observation, Observation) {
    let d = rng.gen_range(1..=2);
    let l = rng.gen_range(0..=max_len);
    let width = r * rng.gen_range(4.0..40.0) * l.max(1) as f64;
    let x: Vec<f64> = (0..l * d).map(|_| rng.gen_range(0.0..width)).collect();
    let mut idx: Vec<usize> = (0..l).collect();
    for i in (1..l).rev() {
        idx.swap(i, rng.gen_range(0..=i));
    }
    let jitter = r * rng.gen_range(0.2..1.5);
    let mut y: Vec<f64> = idx
        .iter()
        .flat_map(|&i| (0..d).map(move |m| (i, m)))
        .map(|(i, m)| x[i * d + m] + rng.gen_range(-jitter..jitter))
        .collect();
    if rng.gen_bool(0.05) {
        y.extend((0..d).map(|_| rng.gen_range(0.0..width)));
    }
    (Observation::new(d, x), Observation::new(d, y))
}
