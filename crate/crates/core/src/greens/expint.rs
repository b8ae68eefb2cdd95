//! Exponential integral `E1` and its regularized form `E1(z) + ln z`.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `E1(z) + ln z`, an entire function; finite at `z = 0` where it equals `-γ`.
pub fn e1_plus_log(z: f64) -> f64 {
    debug_assert!(z >= 0.0);
    if z <= 1.0 {
        // -γ - Σ_{k≥1} (-z)^k / (k k!)
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..40 {
            let kf = k as f64;
            term *= -z / kf;
            let add = term / kf;
            sum += add;
            if add.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER_GAMMA - sum
    } else {
        e1(z) + z.ln()
    }
}

/// Exponential integral `E1(z) = ∫_z^∞ e^{-t}/t dt` for `z > 0`.
pub fn e1(z: f64) -> f64 {
    debug_assert!(z > 0.0);
    if z <= 1.0 {
        return e1_plus_log(z) - z.ln();
    }
    if z > 740.0 {
        return 0.0;
    }
    // modified Lentz evaluation of the continued fraction
    let tiny = 1e-300;
    let mut b = z + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..200 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-z).exp()
}
