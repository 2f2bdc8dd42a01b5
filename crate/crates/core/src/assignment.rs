//! Assignment solvers: shortest augmenting path (Hungarian) for minimum
//! cost perfect matchings and Hopcroft–Karp for maximum cardinality
//! bipartite matchings.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// Minimum-cost perfect matching of a square cost matrix.
///
/// `cost` is row-major `n × n` with finite entries. Returns `assign` with
/// `assign[row] = col`. Runs in `O(n³)` using row/column potentials.
pub fn min_cost_assignment(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n × n");
    if n == 0 {
        return Vec::new();
    }
    // 1-based columns; column 0 is the virtual root of each search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if row_of[j] != 0 {
            assign[row_of[j] - 1] = j - 1;
        }
    }
    assign
}

/// Maximum-cardinality matching in a bipartite graph given by adjacency
/// lists from left vertices to right vertices.
///
/// Returns `match_left[l] = Some(r)` for matched left vertices.
pub fn hopcroft_karp(n_left: usize, n_right: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    const NIL: usize = usize::MAX;
    let mut match_l = vec![NIL; n_left];
    let mut match_r = vec![NIL; n_right];
    let mut dist = vec![0usize; n_left];

    loop {
        // BFS layering from free left vertices.
        let mut queue = VecDeque::new();
        for l in 0..n_left {
            if match_l[l] == NIL {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                let next = match_r[r];
                if next == NIL {
                    found = true;
                } else if dist[next] == usize::MAX {
                    dist[next] = dist[l] + 1;
                    queue.push_back(next);
                }
            }
        }
        if !found {
            break;
        }
        // Iterative DFS along the layers.
        let mut it = vec![0usize; n_left];
        for start in 0..n_left {
            if match_l[start] != NIL {
                continue;
            }
            let mut stack = vec![start];
            while let Some(&l) = stack.last() {
                if it[l] == adj[l].len() {
                    dist[l] = usize::MAX;
                    stack.pop();
                    continue;
                }
                let r = adj[l][it[l]];
                it[l] += 1;
                let next = match_r[r];
                if next == NIL {
                    // augment along the stack
                    let mut r_cur = r;
                    while let Some(l_cur) = stack.pop() {
                        let prev = match_l[l_cur];
                        match_l[l_cur] = r_cur;
                        match_r[r_cur] = l_cur;
                        r_cur = prev;
                    }
                    break;
                } else if dist[next] != usize::MAX && dist[next] == dist[l] + 1 {
                    stack.push(next);
                }
            }
        }
    }

    match_l
        .into_iter()
        .map(|r| if r == NIL { None } else { Some(r) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for perm in permutations(n - 1) {
            for pos in 0..=perm.len() {
                let mut p = perm.clone();
                p.insert(pos, n - 1);
                out.push(p);
            }
        }
        out
    }

    fn total(n: usize, cost: &[f64], assign: &[usize]) -> f64 {
        (0..n).map(|i| cost[i * n + assign[i]]).sum()
    }

    #[test]
    fn small_known_instance() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let a = min_cost_assignment(3, &cost);
        assert_eq!(total(3, &cost, &a), 5.0);
        assert!(min_cost_assignment(0, &[]).is_empty());
    }

    #[test]
    fn hopcroft_karp_known() {
        let adj = vec![vec![0, 1], vec![0], vec![2], vec![2]];
        let m = hopcroft_karp(4, 3, &adj);
        assert_eq!(m.iter().filter(|x| x.is_some()).count(), 3);
        assert_eq!(m[1], Some(0));
        assert_eq!(m[0], Some(1));
    }

    proptest! {
        #[test]
        fn hungarian_matches_enumeration(n in 1usize..6, seed in proptest::collection::vec(0.0f64..10.0, 36)) {
            let cost: Vec<f64> = seed[..n * n].to_vec();
            let a = min_cost_assignment(n, &cost);
            let mut seen = vec![false; n];
            for &c in &a { prop_assert!(!seen[c]); seen[c] = true; }
            let best = permutations(n).iter().map(|p| total(n, &cost, p)).fold(f64::INFINITY, f64::min);
            prop_assert!((total(n, &cost, &a) - best).abs() <= 1e-9);
        }

        #[test]
        fn hopcroft_karp_matches_enumeration(n in 1usize..6, bits in proptest::collection::vec(any::<bool>(), 36)) {
            let adj: Vec<Vec<usize>> = (0..n).map(|l| (0..n).filter(|&r| bits[l * 6 + r]).collect()).collect();
            let m = hopcroft_karp(n, n, &adj);
            let size = m.iter().filter(|x| x.is_some()).count();
            for (l, r) in m.iter().enumerate() {
                if let Some(r) = r { prop_assert!(adj[l].contains(r)); }
            }
            // exhaustive search over partial matchings
            fn best(l: usize, n: usize, adj: &[Vec<usize>], used: &mut [bool]) -> usize {
                if l == n { return 0; }
                let mut b = best(l + 1, n, adj, used);
                for &r in &adj[l] {
                    if !used[r] {
                        used[r] = true;
                        b = b.max(1 + best(l + 1, n, adj, used));
                        used[r] = false;
                    }
                }
                b
            }
            let mut used = vec![false; n];
            prop_assert_eq!(size, best(0, n, &adj, &mut used));
        }
    }
}
