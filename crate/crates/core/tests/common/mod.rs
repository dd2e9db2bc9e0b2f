//! Independent single-purpose evaluators used as test oracles. Written from
//! the model equations; they share no code with the library.

#![allow(dead_code)]

pub fn pos(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// One interval of the three-tier queue for one device.
/// Fractions: (x_uav, x_cloud, w_local, w_uav, w_cloud).
pub fn queue_step(q: [f64; 3], f: [f64; 5], arrival: f64) -> [f64; 3] {
    let [ql, qu, qc] = q;
    let [xu, xc, wl, wu, wc] = f;
    let du = xu * ql;
    let bl = wl * (1.0 - xu) * ql;
    let dc = xc * qu;
    let bu = wu * (1.0 - xc) * qu;
    let bc = wc * qc;
    [pos(ql - du - bl) + arrival, pos(qu - dc - bu) + du, pos(qc - bc) + dc]
}

/// Reward of one device, term by term.
pub fn reward_terms(
    q: [f64; 3],
    f: [f64; 5],
    t_comm: f64,
    hist_bits: f64,
    hist_delay: f64,
    v: [f64; 4],
    eta: bool,
) -> f64 {
    let [ql, qu, qc] = q;
    let [xu, xc, wl, wu, wc] = f;
    let du = xu * ql;
    let bl = wl * (1.0 - xu) * ql;
    let dc = xc * qu;
    let bu = wu * (1.0 - xc) * qu;
    let bc = wc * qc;
    let b_tot = bl + bu + bc;
    let ratio = if hist_delay == 0.0 { 0.0 } else { hist_bits / hist_delay };
    let t1 = v[0] * ql * (bl + du);
    let t2 = v[1] * qu * (du - bu - dc);
    let t3 = v[2] * qc * (dc - bc);
    let t4 = if eta { v[3] * (b_tot - t_comm * ratio) } else { 0.0 };
    t1 - t2 - t3 + t4
}

/// Plain matrix-vector forward pass: ReLU hidden layers, affine output.
/// `layers[l] = (weights row-major out x in, biases)`.
pub fn mlp_forward(layers: &[(Vec<f64>, Vec<f64>)], x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for (l, (w, b)) in layers.iter().enumerate() {
        let n_in = h.len();
        let n_out = b.len();
        let mut z = vec![0.0; n_out];
        for o in 0..n_out {
            let mut s = b[o];
            for i in 0..n_in {
                s += w[o * n_in + i] * h[i];
            }
            z[o] = if l + 1 < layers.len() { s.max(0.0) } else { s };
        }
        h = z;
    }
    h
}

/// Mean and standard deviation of a slice.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, var.sqrt())
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let (mx, _) = mean_sd(&rx);
    let (my, _) = mean_sd(&ry);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

/// Ordinary least squares of y on x: (slope, standard error of slope).
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, _) = mean_sd(x);
    let (my, _) = mean_sd(y);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    (slope, se)
}
