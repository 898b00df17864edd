use super::volume::Dims;

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur of a scalar grid with border replication.
/// `sigma <= 0` returns the input unchanged.
pub fn gaussian_smooth(data: &[f64], dims: Dims, sigma: f64) -> Vec<f64> {
    let mut cur = data.to_vec();
    if sigma <= 0.0 {
        return cur;
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let mut next = vec![0.0; cur.len()];
    for axis in 0..3 {
        let n = dims.0[axis] as isize;
        if n == 1 {
            continue;
        }
        let stride = dims.stride(axis);
        for (i, out) in next.iter_mut().enumerate() {
            let pos = dims.coords(i)[axis] as isize;
            let base = i - pos as usize * stride;
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let j = (pos + k as isize - radius).clamp(0, n - 1) as usize;
                acc += w * cur[base + j * stride];
            }
            *out = acc;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_constants_and_mass_center() {
        let d = Dims::new(6, 5, 4);
        let flat = vec![3.0; d.len()];
        let s = gaussian_smooth(&flat, d, 1.2);
        assert!(s.iter().all(|v| (v - 3.0).abs() < 1e-12));

        let mut spike = vec![0.0; d.len()];
        spike[d.index(3, 2, 2)] = 1.0;
        let s = gaussian_smooth(&spike, d, 0.8);
        let peak = s
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, d.index(3, 2, 2));
    }

    #[test]
    fn zero_sigma_is_identity() {
        let d = Dims::new(2, 2, 2);
        let v: Vec<f64> = (0..8).map(f64::from).collect();
        assert_eq!(gaussian_smooth(&v, d, 0.0), v);
    }
}
