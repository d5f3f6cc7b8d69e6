#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeSet;

use edgecert::model::{pair, PartialDag};
use edgecert::synth::{fixture_dir, load_fixture, LoadedFixture};
use rand::Rng;

pub fn fixture(name: &str) -> LoadedFixture {
    load_fixture(&fixture_dir(), name).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

/// Partially committed instance drawn from a random DAG: every edge into a
/// collider is committed, the rest are committed with probability 1/4 and
/// otherwise left open.
pub fn meek_instance(rng: &mut impl Rng, n: usize) -> (PartialDag, BTreeSet<(usize, usize)>) {
    let truth = edgecert::synth::random_dag(n, 0.5, rng);
    let adj = |a: usize, b: usize| truth.contains(&(a, b)) || truth.contains(&(b, a));
    let mut d = PartialDag::with_open(n, truth.iter().map(|&(a, b)| pair(a, b)));
    for &(a, b) in &truth {
        let collider = truth.iter().any(|&(c, t)| t == b && c != a && !adj(a, c));
        if collider || rng.random_bool(0.25) {
            d.commit(a, b).unwrap();
        }
    }
    (d, truth)
}

/// Closure computed on plain adjacency matrices: `dir[i][j]` for a committed
/// i -> j, `und[i][j]` (symmetric) for an open pair.
pub fn brute_force_closure(dag: &PartialDag) -> BTreeSet<(usize, usize)> {
    let n = dag.n_vertices();
    let mut dir = vec![vec![false; n]; n];
    let mut und = vec![vec![false; n]; n];
    for &(a, b) in dag.committed() {
        dir[a][b] = true;
    }
    for &(a, b) in dag.open() {
        und[a][b] = true;
        und[b][a] = true;
    }
    loop {
        let mut reach = dir.clone();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    reach[i][j] |= reach[i][k] && reach[k][j];
                }
            }
        }
        let adjacent = |dir: &Vec<Vec<bool>>, und: &Vec<Vec<bool>>, a: usize, b: usize| {
            dir[a][b] || dir[b][a] || und[a][b]
        };
        let mut found = None;
        'scan: for i in 0..n {
            for j in 0..n {
                if !und[i][j] {
                    continue;
                }
                let acyc = reach[i][j];
                let r1 = (0..n).any(|a| a != j && dir[a][i] && !adjacent(&dir, &und, a, j));
                let r3 = (0..n).any(|c| {
                    (0..n).any(|d| {
                        c != d
                            && c != i
                            && d != i
                            && dir[c][j]
                            && dir[d][j]
                            && und[i][c]
                            && und[i][d]
                            && !adjacent(&dir, &und, c, d)
                    })
                });
                if acyc || r1 || r3 {
                    found = Some((i, j));
                    break 'scan;
                }
            }
        }
        match found {
            Some((i, j)) => {
                und[i][j] = false;
                und[j][i] = false;
                dir[i][j] = true;
            }
            None => break,
        }
    }
    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if dir[i][j] {
                out.insert((i, j));
            }
        }
    }
    out
}
