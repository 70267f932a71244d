#![allow(dead_code)]

use bcstreams::BcGraph;

/// Literal ordered-pair double sum of the modularity definition.
pub fn literal_modularity(g: &BcGraph<f64>, labels: &[usize]) -> f64 {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for &(i, j, w) in g.edges() {
        a[i][j] = w;
        a[j][i] = w;
    }
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let m2: f64 = k.iter().sum();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i][j] - k[i] * k[j] / m2;
            }
        }
    }
    q / m2
}

/// All set partitions of `n` elements as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0]];
    for _ in 1..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                let max = *p.iter().max().unwrap();
                (0..=max + 1).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}
