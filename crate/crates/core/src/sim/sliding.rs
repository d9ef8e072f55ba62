/// One explicit step of Coulomb sliding friction.
///
/// Returns `(v_next, travel)`: the speed is reduced by `mu * g * dt`
/// (never below zero) and the body advances by `v_next * dt`.
pub fn integrate_sliding(v: f64, mu: f64, g: f64, dt: f64) -> (f64, f64) {
    let v_next = (v - mu * g * dt).max(0.0);
    (v_next, v_next * dt)
}

/// Total distance travelled by a body launched at `v0` until it stops,
/// stepping [`integrate_sliding`] at `dt`.
pub fn stopping_distance(v0: f64, mu: f64, g: f64, dt: f64) -> f64 {
    let mut v = v0;
    let mut total = 0.0;
    while v > 0.0 {
        let (vn, dx) = integrate_sliding(v, mu, g, dt);
        v = vn;
        total += dx;
    }
    total
}
