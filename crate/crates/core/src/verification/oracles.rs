use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bellman::{loss, policy_gradient};
use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMdp};

/// Denominator floor for relative errors of near-zero directional
/// derivatives.
const FD_RELATIVE_FLOOR: f64 = 1e-8;

/// Largest instance `enumerate_deterministic_policies` accepts.
const MAX_ENUMERATION: usize = 1_000_000;

/// Policy with independent Dirichlet(1, ..., 1) rows.
pub fn random_policy(rng: &mut impl Rng, n_states: usize, n_actions: usize) -> Policy {
    let mut probs = Vec::with_capacity(n_states * n_actions);
    for _ in 0..n_states {
        let draws: Vec<f64> = (0..n_actions)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = draws.iter().sum();
        probs.extend(draws.iter().map(|d| d / total));
    }
    Policy::from_raw(n_states, n_actions, probs)
}

/// Compares the gradient's directional derivative with central finite
/// differences of the loss along `d = pibar - pi` for random policies
/// `pibar`. Returns the largest relative error.
///
/// `pi` needs every entry at least `2h` so that `pi +- h d` stays feasible;
/// a direction that would leave the simplex is halved until it fits.
pub fn fd_gradient_check(
    mdp: &TabularMdp,
    pi: &Policy,
    n_directions: usize,
    h: f64,
    seed: u64,
) -> Result<f64> {
    mdp.check_policy(pi)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "step h = {h} must be positive"
        )));
    }
    if n_directions == 0 {
        return Err(Error::InvalidArgument("need at least one direction".into()));
    }
    let (n, k) = (pi.n_states(), pi.n_actions());
    let grad = policy_gradient(mdp, pi)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;

    for _ in 0..n_directions {
        let target = random_policy(&mut rng, n, k);
        let mut d: Vec<f64> = target
            .as_slice()
            .iter()
            .zip(pi.as_slice())
            .map(|(t, p)| t - p)
            .collect();
        if d.iter().all(|x| *x == 0.0) {
            continue;
        }
        let mut halvings = 0;
        while !feasible(pi, &d, h) {
            halvings += 1;
            if halvings > 60 {
                return Err(Error::InvalidArgument(
                    "policy too close to the simplex boundary for the finite-difference step"
                        .into(),
                ));
            }
            d.iter_mut().for_each(|x| *x *= 0.5);
        }

        let plus = perturbed(pi, &d, h)?;
        let minus = perturbed(pi, &d, -h)?;
        let fd = (loss(mdp, &plus)? - loss(mdp, &minus)?) / (2.0 * h);
        let analytic = grad.dot(&d);
        let rel = (fd - analytic).abs() / analytic.abs().max(FD_RELATIVE_FLOOR);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn feasible(pi: &Policy, d: &[f64], h: f64) -> bool {
    pi.as_slice()
        .iter()
        .zip(d)
        .all(|(p, x)| p + h * x >= 0.0 && p - h * x >= 0.0)
}

fn perturbed(pi: &Policy, d: &[f64], h: f64) -> Result<Policy> {
    Policy::new(
        pi.n_states(),
        pi.n_actions(),
        pi.as_slice()
            .iter()
            .zip(d)
            .map(|(p, x)| p + h * x)
            .collect(),
    )
}

/// Lattice point `c / resolution` of the simplex (nonnegative integers `c`
/// summing to `resolution`) nearest to `v` in Euclidean norm.
pub fn brute_force_project(v: &[f64], grid_resolution: usize) -> Result<Vec<f64>> {
    let k = v.len();
    if k == 0 || k > 4 {
        return Err(Error::InvalidArgument(format!(
            "lattice search supports 1 <= k <= 4, got {k}"
        )));
    }
    if grid_resolution == 0 {
        return Err(Error::InvalidArgument(
            "grid resolution must be positive".into(),
        ));
    }
    let scale = 1.0 / grid_resolution as f64;
    let mut counts = Vec::with_capacity(k);
    let mut best = (f64::INFINITY, vec![0.0; k]);
    lattice_search(v, grid_resolution, scale, &mut counts, &mut best);
    Ok(best.1)
}

/// Fixes coordinates one at a time; the last takes whatever remains.
fn lattice_search(
    v: &[f64],
    remaining: usize,
    scale: f64,
    counts: &mut Vec<usize>,
    best: &mut (f64, Vec<f64>),
) {
    if counts.len() + 1 == v.len() {
        counts.push(remaining);
        let dist: f64 = counts
            .iter()
            .zip(v)
            .map(|(&c, &x)| (c as f64 * scale - x).powi(2))
            .sum();
        if dist < best.0 {
            *best = (dist, counts.iter().map(|&c| c as f64 * scale).collect());
        }
        counts.pop();
        return;
    }
    for c in 0..=remaining {
        counts.push(c);
        lattice_search(v, remaining - c, scale, counts, best);
        counts.pop();
    }
}

/// All `k^n` deterministic policies, in lexicographic order of the action
/// vector.
pub fn enumerate_deterministic_policies(mdp: &TabularMdp) -> Result<Vec<Policy>> {
    let (n, k) = (mdp.n_states(), mdp.n_actions());
    let count = u32::try_from(n)
        .ok()
        .and_then(|n| k.checked_pow(n))
        .filter(|c| *c <= MAX_ENUMERATION)
        .ok_or_else(|| {
            Error::InvalidArgument(format!(
                "{k}^{n} deterministic policies exceeds the enumeration limit"
            ))
        })?;
    let mut actions = vec![0usize; n];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(Policy::deterministic(&actions, k)?);
        for a in actions.iter_mut().rev() {
            *a += 1;
            if *a < k {
                break;
            }
            *a = 0;
        }
    }
    Ok(out)
}

/// Horizon `T = ceil(ln(1e-12) / ln(gamma))` at which the tail of the
/// discounted series is below 1e-12.
pub fn series_horizon(gamma: f64) -> usize {
    (1e-12f64.ln() / gamma.ln()).ceil() as usize
}

/// `(1 - gamma) sum_{t=0}^{T} gamma^t rho P_pi^t` by repeated propagation
/// of the state distribution.
pub fn truncated_series_occupancy(
    mdp: &TabularMdp,
    pi: &Policy,
    horizon: usize,
) -> Result<Vec<f64>> {
    mdp.check_policy(pi)?;
    let (n, k) = (mdp.n_states(), mdp.n_actions());
    let gamma = mdp.gamma();
    let mut dist = mdp.rho().to_vec();
    let mut total = vec![0.0; n];
    let mut weight = 1.0 - gamma;
    for _ in 0..=horizon {
        for (acc, d) in total.iter_mut().zip(&dist) {
            *acc += weight * d;
        }
        let mut next = vec![0.0; n];
        for (s, &ds) in dist.iter().enumerate() {
            for i in 0..k {
                let mass = ds * pi.prob(s, i);
                for (t, p) in mdp.transition_row(s, i).iter().enumerate() {
                    next[t] += mass * p;
                }
            }
        }
        dist = next;
        weight *= gamma;
    }
    Ok(total)
}

fn backup(mdp: &TabularMdp, j: &[f64], s: usize, i: usize) -> f64 {
    let future: f64 = mdp
        .transition_row(s, i)
        .iter()
        .zip(j)
        .map(|(p, v)| p * v)
        .sum();
    mdp.cost(s, i) + mdp.gamma() * future
}

/// `iterations` applications of `J <- T_pi J` from `J = 0`.
pub fn fixed_point_evaluation(
    mdp: &TabularMdp,
    pi: &Policy,
    iterations: usize,
) -> Result<Vec<f64>> {
    mdp.check_policy(pi)?;
    let (n, k) = (mdp.n_states(), mdp.n_actions());
    let mut j = vec![0.0; n];
    for _ in 0..iterations {
        j = (0..n)
            .map(|s| (0..k).map(|i| pi.prob(s, i) * backup(mdp, &j, s, i)).sum())
            .collect();
    }
    Ok(j)
}

/// Value iteration from `J = 0` until `||TJ - J||_inf <= tolerance`.
pub fn value_iteration(
    mdp: &TabularMdp,
    tolerance: f64,
    max_iterations: usize,
) -> Result<Vec<f64>> {
    let (n, k) = (mdp.n_states(), mdp.n_actions());
    let mut j = vec![0.0; n];
    for _ in 0..max_iterations {
        let next: Vec<f64> = (0..n)
            .map(|s| {
                (0..k)
                    .map(|i| backup(mdp, &j, s, i))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let change = next
            .iter()
            .zip(&j)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        j = next;
        if change <= tolerance {
            return Ok(j);
        }
    }
    Err(Error::NonTermination(max_iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellman::{compute_optimal, evaluate_policy, loss_from_values, occupancy_measure};
    use crate::harness::garnet::{generate_garnet, GarnetSpec};
    use crate::simplex::project_simplex;

    #[test]
    fn lattice_projection_examples() {
        assert_eq!(
            brute_force_project(&[0.5, 0.5], 10).unwrap(),
            vec![0.5, 0.5]
        );
        let p = brute_force_project(&[2.0, 0.0], 1000).unwrap();
        assert!((p[0] - 1.0).abs() <= 1e-3 && p[1].abs() <= 1e-3);
        assert_eq!(brute_force_project(&[3.0], 7).unwrap(), vec![1.0]);
        assert!(brute_force_project(&[0.2; 5], 10).is_err());
        assert!(brute_force_project(&[0.5, 0.5], 0).is_err());
    }

    #[test]
    fn lattice_projection_agrees_with_sort_projection_in_4d() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..10 {
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..2.0)).collect();
            let exact = project_simplex(&v).unwrap();
            let lattice = brute_force_project(&v, 60).unwrap();
            let dist: f64 = exact
                .iter()
                .zip(&lattice)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(dist <= 2.0 / 60.0, "{v:?}: {dist}");
        }
    }

    #[test]
    fn enumeration_counts() {
        let one = TabularMdp::new(1, 2, vec![0.0, 1.0], vec![1.0, 1.0], 0.5, vec![1.0]).unwrap();
        assert_eq!(enumerate_deterministic_policies(&one).unwrap().len(), 2);
        let two = generate_garnet(&GarnetSpec::new(2, 3, 2, 0.9, 0)).unwrap();
        let all = enumerate_deterministic_policies(&two).unwrap();
        assert_eq!(all.len(), 9);
        assert_eq!(all[0].as_deterministic(), Some(vec![0, 0]));
        assert_eq!(all[8].as_deterministic(), Some(vec![2, 2]));
        let big = generate_garnet(&GarnetSpec::new(12, 4, 2, 0.9, 0)).unwrap();
        assert!(enumerate_deterministic_policies(&big).is_err());
    }

    #[test]
    fn enumeration_finds_the_optimum() {
        let mdp = generate_garnet(&GarnetSpec::new(3, 3, 2, 0.9, 17)).unwrap();
        let best = enumerate_deterministic_policies(&mdp)
            .unwrap()
            .iter()
            .map(|p| loss(&mdp, p).unwrap())
            .fold(f64::INFINITY, f64::min);
        let (jstar, _) = compute_optimal(&mdp).unwrap();
        assert!((best - loss_from_values(&mdp, &jstar)).abs() <= 1e-9);
    }

    #[test]
    fn evaluation_matches_fixed_point_iteration() {
        let mdp = generate_garnet(&GarnetSpec::new(5, 3, 3, 0.9, 2)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let pi = random_policy(&mut rng, 5, 3);
        let exact = evaluate_policy(&mdp, &pi).unwrap();
        let iterated = fixed_point_evaluation(&mdp, &pi, 10_000).unwrap();
        for (a, b) in exact.values().iter().zip(&iterated) {
            assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn occupancy_matches_truncated_series() {
        let mdp = generate_garnet(&GarnetSpec::new(5, 3, 2, 0.9, 4)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let pi = random_policy(&mut rng, 5, 3);
        let series = truncated_series_occupancy(&mdp, &pi, series_horizon(0.9)).unwrap();
        let eta = occupancy_measure(&mdp, &pi).unwrap();
        for (a, b) in eta.weights().iter().zip(&series) {
            assert!((a - b).abs() <= 1e-9);
        }
        assert_eq!(series_horizon(0.9), 263);
    }

    #[test]
    fn optimum_matches_value_iteration() {
        let mdp = generate_garnet(&GarnetSpec::new(4, 3, 2, 0.9, 9)).unwrap();
        let vi = value_iteration(&mdp, 1e-12, 100_000).unwrap();
        let (jstar, _) = compute_optimal(&mdp).unwrap();
        for (a, b) in jstar.values().iter().zip(&vi) {
            assert!((a - b).abs() <= 1e-9);
        }
        assert!(value_iteration(&mdp, 1e-12, 3).is_err());
    }

    #[test]
    fn single_state_directional_derivative_closed_form() {
        // n = 1, k = 2, self-loops: J = g.pi / (1 - gamma), so the loss along
        // (1 - a) pi + a pibar is g.pi_a and its derivative is
        // c0 (q - p) + c1 (p - q) for pi = (p, 1 - p), pibar = (q, 1 - q).
        let (c0, c1, p, q) = (0.3, 1.7, 0.4, 0.9);
        let mdp = TabularMdp::new(1, 2, vec![c0, c1], vec![1.0, 1.0], 0.7, vec![1.0]).unwrap();
        let pi = Policy::from_rows(&[vec![p, 1.0 - p]]).unwrap();
        let grad = policy_gradient(&mdp, &pi).unwrap();
        let d = [q - p, p - q];
        let closed_form = c0 * (q - p) + c1 * (p - q);
        assert!((grad.dot(&d) - closed_form).abs() < 1e-12);
        assert!(fd_gradient_check(&mdp, &pi, 20, 1e-5, 0).unwrap() <= 1e-5);
    }

    #[test]
    fn fd_check_on_random_instance() {
        let mdp = generate_garnet(&GarnetSpec::new(5, 3, 3, 0.9, 12)).unwrap();
        let err = fd_gradient_check(&mdp, &Policy::uniform(5, 3), 50, 1e-5, 3).unwrap();
        assert!(err <= 1e-5, "{err}");
    }

    #[test]
    fn fd_check_rejects_boundary_policy() {
        let mdp = generate_garnet(&GarnetSpec::new(3, 2, 2, 0.9, 12)).unwrap();
        let pi = Policy::deterministic(&[0, 1, 0], 2).unwrap();
        assert!(fd_gradient_check(&mdp, &pi, 5, 1e-5, 0).is_err());
        assert!(fd_gradient_check(&mdp, &Policy::uniform(3, 2), 5, 0.0, 0).is_err());
    }
}
