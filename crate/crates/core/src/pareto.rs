//! Nondominated filtering of `(makespan, memory)` pairs, both minimized.

/// `a` dominates `b` when it is no worse in both coordinates and differs.
pub fn dominates(a: (u64, u64), b: (u64, u64)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && a != b
}

/// Distinct nondominated points, sorted by ascending makespan.
pub fn nondominated(mut points: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    points.sort_unstable();
    points.dedup();
    let mut front: Vec<(u64, u64)> = Vec::new();
    for p in points {
        match front.last() {
            Some(&(_, m)) if p.1 >= m => {}
            _ => front.push(p),
        }
    }
    front
}

/// Every point of `exact` has a point of `approx` within factor `1 + num/den`
/// in both coordinates.
pub fn covers(approx: &[(u64, u64)], exact: &[(u64, u64)], num: u64, den: u64) -> bool {
    let within = |a: u64, e: u64| a as u128 * den as u128 <= e as u128 * (num as u128 + den as u128);
    exact
        .iter()
        .all(|&(p, m)| approx.iter().any(|&(ap, am)| within(ap, p) && within(am, m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn drops_dominated_points() {
        assert_eq!(nondominated(vec![(2, 3), (3, 2), (3, 3)]), vec![(2, 3), (3, 2)]);
        assert_eq!(nondominated(vec![(4, 4)]), vec![(4, 4)]);
        assert_eq!(nondominated(vec![(1, 5), (1, 5), (1, 7)]), vec![(1, 5)]);
        assert!(nondominated(Vec::new()).is_empty());
    }

    #[test]
    fn coverage_uses_both_factors() {
        assert!(covers(&[(3, 3)], &[(2, 2)], 1, 2));
        assert!(!covers(&[(3, 4)], &[(2, 2)], 1, 2));
        assert!(covers(&[(2, 2)], &[(2, 2), (3, 3)], 1, 10));
    }

    proptest! {
        #[test]
        fn matches_pairwise_definition(points in prop::collection::vec((0u64..20, 0u64..20), 0..40)) {
            let front = nondominated(points.clone());
            for &p in &points {
                let kept = front.contains(&p);
                let beaten = points.iter().any(|&q| dominates(q, p));
                prop_assert_eq!(kept, !beaten);
            }
            prop_assert!(front.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1));
        }
    }
}
