//! Independent brute-force references used to validate the graph calculus.
//! Everything here works on plain integers and closures by direct
//! recursion or loops, with no dependence on the board/link machinery.

use std::collections::HashMap;

use thiserror::Error;

/// `x -> g(f(x))` by direct call nesting.
pub fn oracle_compose<'a>(
    f: impl Fn(u64) -> u64 + 'a,
    g: impl Fn(u64) -> u64 + 'a,
) -> impl Fn(u64) -> u64 + 'a {
    move |x| g(f(x))
}

/// n-fold application by a simple loop.
pub fn oracle_iter<'a>(n: u64, f: impl Fn(u64) -> u64 + 'a) -> impl Fn(u64) -> u64 + 'a {
    move |x| {
        let mut v = x;
        for _ in 0..n {
            v = f(v);
        }
        v
    }
}

/// The recursion equations verbatim: value 1 is `a`, value k+1 applies
/// stage k to value k.
pub fn oracle_rec(a: u64, stage: &dyn Fn(u64, u64) -> u64, k: u64) -> u64 {
    if k <= 1 {
        a
    } else {
        stage(k - 1, oracle_rec(a, stage, k - 1))
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
#[error("ackermann oracle supports m <= 3, n <= 5; got ({m}, {n})")]
pub struct RangeError {
    pub m: u64,
    pub n: u64,
}

/// Standard Ackermann-Peter value (0-based), computed with an explicit
/// stack and memo table. Arguments outside the supported desk-scale range
/// are rejected rather than attempted.
pub fn oracle_ackermann(m: u64, n: u64) -> Result<u64, RangeError> {
    if m > 3 || n > 5 {
        return Err(RangeError { m, n });
    }
    let mut memo: HashMap<(u64, u64), u64> = HashMap::new();
    let mut stack = vec![(m, n)];
    while let Some(&(m, n)) = stack.last() {
        if memo.contains_key(&(m, n)) {
            stack.pop();
            continue;
        }
        if m == 0 {
            memo.insert((m, n), n + 1);
            stack.pop();
            continue;
        }
        if n == 0 {
            match memo.get(&(m - 1, 1)) {
                Some(&v) => {
                    memo.insert((m, n), v);
                    stack.pop();
                }
                None => stack.push((m - 1, 1)),
            }
            continue;
        }
        match memo.get(&(m, n - 1)) {
            None => stack.push((m, n - 1)),
            Some(&inner) => match memo.get(&(m - 1, inner)) {
                None => stack.push((m - 1, inner)),
                Some(&v) => {
                    memo.insert((m, n), v);
                    stack.pop();
                }
            },
        }
    }
    Ok(memo[&(m, n)])
}

/// The 1-based shifted form used by the calculus:
/// `ack1(m, n) = ackermann(m - 1, n - 1) + 1` on positive arguments.
pub fn oracle_ack1(m: u64, n: u64) -> Result<u64, RangeError> {
    if m < 1 || n < 1 {
        return Err(RangeError { m, n });
    }
    oracle_ackermann(m - 1, n - 1).map(|v| v + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_nests_calls() {
        let c = oracle_compose(|x| x + 1, |x| x + 1);
        assert_eq!(c(3), 5);
        let c = oracle_compose(|_| 7, |x| x + 1);
        assert_eq!(c(1), 8);
    }

    #[test]
    fn iter_loops() {
        assert_eq!(oracle_iter(4, |x| x + 1)(1), 5);
        assert_eq!(oracle_iter(1, |x| x * 3)(2), 6);
    }

    #[test]
    fn rec_matches_the_equations() {
        let stage = |k: u64, x: u64| x + k;
        assert_eq!(oracle_rec(9, &stage, 1), 9);
        assert_eq!(oracle_rec(1, &stage, 4), 7); // 1 -> 2 -> 4 -> 7
        let doubling = |_k: u64, x: u64| 2 * x;
        assert_eq!(oracle_rec(2, &doubling, 4), 16);
    }

    #[test]
    fn ackermann_values() {
        assert_eq!(oracle_ackermann(2, 3).unwrap(), 9);
        for n in 0..=5 {
            assert_eq!(oracle_ackermann(0, n).unwrap(), n + 1);
        }
        assert_eq!(oracle_ackermann(3, 1).unwrap(), 13);
        assert_eq!(oracle_ackermann(3, 5).unwrap(), 253);
        assert_eq!(oracle_ack1(3, 4).unwrap(), 10);
        assert_eq!(oracle_ack1(4, 2).unwrap(), 14);
        assert!(oracle_ackermann(4, 0).is_err());
        assert!(oracle_ack1(0, 3).is_err());
    }
}
