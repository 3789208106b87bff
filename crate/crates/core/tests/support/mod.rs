//! Independent references shared by the integration and acceptance tests.
#![allow(dead_code)]

/// 20-digit step moments at γ = 1 from an mpmath evaluation at 50 digits:
/// `(h, var_x, var_v, cov_xv, coef_x_on_v, coef_x_on_grad, coef_v_decay)`.
/// For γ = 1, `coef_v_on_grad == coef_x_on_v`.
pub const EXTENDED_PRECISION: [(f64, f64, f64, f64, f64, f64, f64); 10] = [
    (1e-12, 1.3333333333313340267e-36, 3.999999999992e-12, 1.999999999996e-24, 9.99999999999e-13, 4.9999999999966666667e-25, 0.999999999998),
    (1e-9, 1.3333333313333333352e-27, 3.9999999920000000107e-9, 1.9999999960000000047e-18, 9.9999999900000000067e-10, 4.9999999966666666683e-19, 0.999999998000000002),
    (1e-6, 1.3333313333351999987e-18, 3.999992000010666656e-6, 1.9999960000046666627e-12, 9.9999900000066666633e-7, 4.9999966666683333327e-13, 0.99999800000199999867),
    (1e-5, 1.3333133335199986667e-15, 0.000039999200010666560001, 1.9999600004666626667e-10, 9.9999000006666633333e-6, 4.9999666668333326667e-11, 0.99998000019999866667),
    (1e-4, 1.3331333519986667454e-12, 0.00039992001066560008533, 1.9996000466626669422e-8, 0.000099990000666633334667, 4.9996666833326666889e-9, 0.99980001999866673333),
    (1e-3, 1.3313351986674535684e-9, 0.0039920106560085276477, 1.996004662669420623e-6, 0.00099900066633346662223, 4.9966683326668888254e-7, 0.99800199866733306676),
    (0.1, 0.0011507415690720334838, 0.32967995396436069926, 0.016429269939837791702, 0.090634623461009070665, 0.0046826882694954646675, 0.81873075307798185867),
    (0.5, 0.084045620362289148622, 0.86466471676338730811, 0.19978820044686402435, 0.3160602794142788392, 0.091969860292860580399, 0.3678794411714423216),
    (1.0, 0.38075637351442914682, 0.98168436111126581971, 0.37382253620775439825, 0.43233235838169365405, 0.28383382080915317297, 0.13533528323661269189),
    (10.0, 9.2500000020611536214, 0.99999999999999999575, 0.49999999793884637969, 0.49999999896942318878, 4.7500000005152884056, 2.061153622438557828e-9),
];

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(a.abs())
    }
}

/// Worst relative error of `rculmc_core::kernel::step_moments` against the
/// table at stepsize `h` (must be a table entry), scaled to `γ`.
pub fn kernel_error_vs_table(h: f64, gamma: f64) -> f64 {
    let row = EXTENDED_PRECISION
        .iter()
        .find(|r| r.0 == h)
        .expect("stepsize not tabulated");
    let m = rculmc_core::kernel::step_moments(h, gamma).unwrap();
    let (_, vx, vv, cv, cxv, cxg, dec) = *row;
    [
        rel(m.var_x, gamma * vx),
        rel(m.var_v, gamma * vv),
        rel(m.cov_xv, gamma * cv),
        rel(m.coef_x_on_v, cxv),
        rel(m.coef_x_on_grad, gamma * cxg),
        rel(m.coef_v_decay, dec),
        rel(m.coef_v_on_grad, gamma * cxv),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Minimises `Σ κ_i²/φ_i²` over the probability simplex by projected
/// gradient descent with backtracking, started from the uniform point.
pub fn simplex_minimizer(kappa: &[f64]) -> Vec<f64> {
    let d = kappa.len();
    let obj = |p: &[f64]| -> f64 {
        if p.iter().any(|&x| x <= 0.0) {
            f64::INFINITY
        } else {
            kappa.iter().zip(p).map(|(k, x)| k * k / (x * x)).sum()
        }
    };
    let mut phi = vec![1.0 / d as f64; d];
    let mut step = 1e-6;
    for _ in 0..200_000 {
        let f0 = obj(&phi);
        let grad: Vec<f64> = kappa.iter().zip(&phi).map(|(k, x)| -2.0 * k * k / (x * x * x)).collect();
        let mut t = step * 4.0;
        let (cand, f1) = loop {
            let y: Vec<f64> = phi.iter().zip(&grad).map(|(x, g)| x - t * g).collect();
            let c = project_simplex(&y);
            let f1 = obj(&c);
            let decrease: f64 = grad.iter().zip(c.iter().zip(&phi)).map(|(g, (a, b))| g * (a - b)).sum();
            let dist: f64 = c.iter().zip(&phi).map(|(a, b)| (a - b) * (a - b)).sum();
            if f1 <= f0 + decrease + dist / (2.0 * t) || t < 1e-30 {
                break (c, f1);
            }
            t *= 0.5;
        };
        step = t;
        let moved: f64 = cand.iter().zip(&phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        phi = cand;
        if moved < 1e-15 || f1 == f0 {
            break;
        }
    }
    phi
}

/// Euclidean projection onto `{φ : φ_i ≥ 0, Σ φ_i = 1}` (sort-based).
pub fn project_simplex(y: &[f64]) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|&v| (v - theta).max(0.0)).collect()
}

/// The RC-ULMC second-moment recursion on the standard Gaussian (γ = 1,
/// uniform φ) written directly as a 3×3 linear map on
/// `(E|x|², E⟨x,w⟩, E|w|²)` from the conditional law of `(x', w')` in the
/// `(x, w)` variables. Returns the triple after `steps` iterations.
pub fn xw_recursion(d: usize, h: f64, start: [f64; 3], steps: usize) -> Vec<[f64; 3]> {
    let big_h = d as f64 * h;
    let e2 = (-2.0 * big_h).exp();
    let om2 = -(-2.0 * big_h).exp_m1();
    let om4 = -(-4.0 * big_h).exp_m1();
    // E x' = p x + q w,  E w' = r x + s w.
    let g = 0.5 * (big_h - 0.5 * om2);
    let p = 1.0 - 0.5 * om2 - g;
    let q = 0.5 * om2;
    let r = -g;
    let s = 0.5 * (1.0 + e2);
    let vx = big_h + 0.25 * om4 - om2;
    let vv = om4;
    let cv = 0.5 * om2 * om2;
    let var_w = vx + vv + 2.0 * cv;
    let cov_xw = vx + cv;
    let inv_d = 1.0 / d as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let [mut x2, mut xw, mut w2] = start;
    out.push([x2, xw, w2]);
    for _ in 0..steps {
        // Coordinate i moves with probability 1/d; summing over i adds one
        // coordinate's worth of noise per step.
        let tx2 = p * p * x2 + 2.0 * p * q * xw + q * q * w2;
        let txw = p * r * x2 + (p * s + q * r) * xw + q * s * w2;
        let tw2 = r * r * x2 + 2.0 * r * s * xw + s * s * w2;
        x2 = (1.0 - inv_d) * x2 + inv_d * tx2 + vx;
        xw = (1.0 - inv_d) * xw + inv_d * txw + cov_xw;
        w2 = (1.0 - inv_d) * w2 + inv_d * tw2 + var_w;
        out.push([x2, xw, w2]);
    }
    out
}

/// Sample mean and standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
