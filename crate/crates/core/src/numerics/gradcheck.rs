use crate::scalar::Real;

/// Central-difference gradient estimate of `f` at `theta`.
pub fn finite_diff_gradient<T, F>(mut f: F, theta: &[T], h: T) -> Vec<T>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let two_h = h + h;
    let mut probe = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let plus = f(&probe);
            probe[i] = orig - h;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / two_h
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let g = finite_diff_gradient(|t: &[f64]| t.iter().map(|v| v * v).sum(), &[1.0, 2.0], 1e-5);
        assert!((g[0] - 2.0).abs() < 1e-8);
        assert!((g[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn constant() {
        let g = finite_diff_gradient(|_: &[f64]| 3.5, &[1.0, -2.0, 0.0], 1e-5);
        assert_eq!(g, vec![0.0, 0.0, 0.0]);
    }
}
