//! Derivative-free maximizers used by the fitting modules.
//!
//! Both searches treat NaN objective values as negative infinity so that a
//! likelihood that underflows or leaves its domain simply loses comparisons
//! instead of poisoning the search.

/// Maximizes a unimodal function on `[lo, hi]` by golden-section search.
///
/// Returns `(argmax, max)`. The bracket shrinks until its width is below
/// `tol`, so the argmax is located to within `tol`.
pub(crate) fn golden_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    debug_assert!(lo < hi && tol > 0.0);
    let mut g = move |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    while d - c > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = g(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Maximizes `f` by the Nelder-Mead simplex method.
///
/// `start` seeds the simplex and `step` sets the initial offset per
/// coordinate. Terminates when the spread of objective values across the
/// simplex falls below `tol` or after `max_iter` iterations. Returns the best
/// vertex and its value.
pub(crate) fn nelder_mead_max(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    step: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let dim = start.len();
    debug_assert!(dim >= 1 && step.len() == dim);
    let mut g = move |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    verts.push(start.to_vec());
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += step[i];
        verts.push(v);
    }
    let mut vals: Vec<f64> = verts.iter().map(|v| g(v)).collect();

    for _ in 0..max_iter {
        // Sort vertices best-first; ties keep prior order, so the iteration
        // is fully deterministic.
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap_or(std::cmp::Ordering::Equal));
        let verts_sorted: Vec<Vec<f64>> = order.iter().map(|&i| verts[i].clone()).collect();
        let vals_sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
        verts = verts_sorted;
        vals = vals_sorted;

        let spread = vals[0] - vals[dim];
        if spread.is_finite() && spread.abs() < tol {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for v in verts.iter().take(dim) {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let lerp = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&verts[dim])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let refl = lerp(1.0);
        let f_refl = g(&refl);
        if f_refl > vals[0] {
            let exp = lerp(2.0);
            let f_exp = g(&exp);
            if f_exp > f_refl {
                verts[dim] = exp;
                vals[dim] = f_exp;
            } else {
                verts[dim] = refl;
                vals[dim] = f_refl;
            }
        } else if f_refl > vals[dim - 1] {
            verts[dim] = refl;
            vals[dim] = f_refl;
        } else {
            let contr = if f_refl > vals[dim] { lerp(0.5) } else { lerp(-0.5) };
            let f_contr = g(&contr);
            if f_contr > vals[dim].max(f_refl) {
                verts[dim] = contr;
                vals[dim] = f_contr;
            } else {
                // Shrink toward the best vertex.
                for i in 1..=dim {
                    let best = verts[0].clone();
                    for (x, b) in verts[i].iter_mut().zip(&best) {
                        *x = b + 0.5 * (*x - b);
                    }
                    vals[i] = g(&verts[i]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=dim {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    (verts[best].clone(), vals[best])
}
