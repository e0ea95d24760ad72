//! Stripping variables of degree at most one, together with their check,
//! down to the 2-core.

use rand::Rng;

use crate::sampler::TannerGraph;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreResult {
    pub core_vars: usize,
    pub core_checks: usize,
    /// Length of the longest chain of removals triggering one another.
    pub rounds: usize,
    /// Removed variables in order, with the check removed alongside.
    pub peel_order: Vec<(usize, Option<usize>)>,
    pub var_alive: Vec<bool>,
    pub check_alive: Vec<bool>,
}

impl CoreResult {
    pub fn var_fraction(&self, n: usize) -> f64 {
        self.core_vars as f64 / n as f64
    }

    pub fn check_fraction(&self, n: usize) -> f64 {
        self.core_checks as f64 / n as f64
    }
}

/// Peels with a LIFO worklist.
pub fn two_core(g: &TannerGraph) -> CoreResult {
    peel(g, |work: &mut Vec<(usize, usize)>| work.pop())
}

/// Peels taking worklist items in uniformly random order.
pub fn two_core_random_order<R: Rng + ?Sized>(g: &TannerGraph, rng: &mut R) -> CoreResult {
    peel(g, |work: &mut Vec<(usize, usize)>| {
        if work.is_empty() {
            None
        } else {
            let i = rng.random_range(0..work.len());
            Some(work.swap_remove(i))
        }
    })
}

fn peel(g: &TannerGraph, mut next: impl FnMut(&mut Vec<(usize, usize)>) -> Option<(usize, usize)>) -> CoreResult {
    let var_nb = g.var_neighbors();
    let check_nb = g.check_neighbors();
    let mut degree: Vec<usize> = var_nb.iter().map(Vec::len).collect();
    let mut var_alive = vec![true; g.n_vars];
    let mut check_alive = vec![true; g.n_checks];
    let mut queued = vec![false; g.n_vars];
    // (variable, round)
    let mut work: Vec<(usize, usize)> = Vec::new();
    for x in (0..g.n_vars).rev() {
        if degree[x] <= 1 {
            queued[x] = true;
            work.push((x, 1));
        }
    }
    let mut peel_order = Vec::new();
    let mut rounds = 0;
    while let Some((x, round)) = next(&mut work) {
        rounds = rounds.max(round);
        var_alive[x] = false;
        let check = if degree[x] == 1 {
            var_nb[x].iter().copied().find(|&a| check_alive[a])
        } else {
            None
        };
        peel_order.push((x, check));
        let Some(a) = check else { continue };
        check_alive[a] = false;
        for &y in &check_nb[a] {
            if !var_alive[y] {
                continue;
            }
            degree[y] -= 1;
            if degree[y] <= 1 && !queued[y] {
                queued[y] = true;
                work.push((y, round + 1));
            }
        }
    }
    CoreResult {
        core_vars: var_alive.iter().filter(|&&a| a).count(),
        core_checks: check_alive.iter().filter(|&&a| a).count(),
        rounds,
        peel_order,
        var_alive,
        check_alive,
    }
}

/// `n - n* - (m - m*)`, a lower bound on the nullity.
pub fn core_nullity_bound_count(g: &TannerGraph, core: &CoreResult) -> i64 {
    g.n_vars as i64 - core.core_vars as i64 - (g.n_checks as i64 - core.core_checks as i64)
}

/// [`core_nullity_bound_count`] as a fraction of the number of variables.
pub fn core_nullity_bound(g: &TannerGraph, core: &CoreResult) -> f64 {
    core_nullity_bound_count(g, core) as f64 / g.n_vars as f64
}
