//! Rectangular linear sum assignment (shortest augmenting path Hungarian
//! method with potentials).

/// Cost used for forbidden pairs. Any solution containing one is infeasible.
pub const FORBIDDEN: f64 = 1e12;

/// Minimum-cost assignment of every row to a distinct column.
///
/// `cost` is row-major with `rows <= cols`. Returns the column of each row
/// and the total cost, or `None` when every complete assignment uses a
/// forbidden pair (cost `>= FORBIDDEN` or non-finite).
pub fn solve(cost: &[f64], rows: usize, cols: usize) -> Option<(Vec<usize>, f64)> {
    assert!(rows <= cols, "more rows than columns");
    assert_eq!(cost.len(), rows * cols);
    if rows == 0 {
        return Some((Vec::new(), 0.0));
    }
    let at = |i: usize, j: usize| {
        let c = cost[i * cols + j];
        if c.is_finite() {
            c.min(FORBIDDEN)
        } else {
            FORBIDDEN
        }
    };
    // 1-based potentials; column 0 is the virtual start
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            assign[owner[j] - 1] = j - 1;
        }
    }
    let mut total = 0.0;
    for (i, &j) in assign.iter().enumerate() {
        let c = cost[i * cols + j];
        if !c.is_finite() || c >= FORBIDDEN {
            return None;
        }
        total += c;
    }
    Some((assign, total))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(cost: &[f64], rows: usize, cols: usize) -> Option<f64> {
        fn rec(cost: &[f64], rows: usize, cols: usize, i: usize, used: &mut Vec<bool>) -> Option<f64> {
            if i == rows {
                return Some(0.0);
            }
            let mut best: Option<f64> = None;
            for j in 0..cols {
                let c = cost[i * cols + j];
                if used[j] || !c.is_finite() || c >= FORBIDDEN {
                    continue;
                }
                used[j] = true;
                if let Some(rest) = rec(cost, rows, cols, i + 1, used) {
                    best = Some(best.map_or(c + rest, |b: f64| b.min(c + rest)));
                }
                used[j] = false;
            }
            best
        }
        rec(cost, rows, cols, 0, &mut vec![false; cols])
    }

    #[test]
    fn square_textbook() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let (a, total) = solve(&cost, 3, 3).unwrap();
        assert_eq!(a, vec![1, 0, 2]);
        assert_eq!(total, 5.0);
    }

    #[test]
    fn infeasible() {
        let cost = [FORBIDDEN, 1.0, FORBIDDEN, f64::INFINITY];
        assert!(solve(&cost, 2, 2).is_none());
        assert!(solve(&[], 0, 3).unwrap().0.is_empty());
    }

    proptest::proptest! {
        #[test]
        fn matches_brute_force(
            rows in 1usize..5,
            extra in 0usize..3,
            seed in proptest::collection::vec(0.0f64..10.0, 40),
            holes in proptest::collection::vec(proptest::bool::weighted(0.2), 40),
        ) {
            let cols = rows + extra;
            let cost: Vec<f64> = (0..rows * cols)
                .map(|k| if holes[k] { FORBIDDEN } else { seed[k] })
                .collect();
            let got = solve(&cost, rows, cols).map(|s| s.1);
            let want = brute(&cost, rows, cols);
            match (got, want) {
                (Some(g), Some(w)) => proptest::prop_assert!((g - w).abs() < 1e-9),
                (None, None) => {}
                other => proptest::prop_assert!(false, "mismatch {:?}", other),
            }
        }
    }
}
