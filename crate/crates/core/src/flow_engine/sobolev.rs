use crate::lattice::GridField;

/// Diagonal-excluded double lattice sum
/// `Σ_{i≠j} |u_i − u_j|^p / |x_i − x_j|^{d+δp} h^{2d}` over the cells whose
/// centres lie in the ball `B(center, radius)`.
pub fn discrete_sobolev_seminorm(u: &GridField, center: &[f64], radius: f64, delta: f64, p: f64) -> f64 {
    let lat = &u.lattice;
    let d = lat.dim();
    let idx = lat.indices_near(center, radius);
    let pts: Vec<Vec<f64>> = idx
        .iter()
        .map(|&k| {
            let mut x = vec![0.0; d];
            lat.point(k, &mut x);
            x
        })
        .collect();
    let expo = (d as f64 + delta * p) / 2.0;
    let mut acc = 0.0;
    for a in 0..idx.len() {
        let ua = u.values[idx[a]];
        for c in a + 1..idx.len() {
            let diff = (ua - u.values[idx[c]]).abs();
            if diff == 0.0 {
                continue;
            }
            let r2: f64 = pts[a].iter().zip(&pts[c]).map(|(x, y)| (x - y) * (x - y)).sum();
            acc += diff.powf(p) / r2.powf(expo);
        }
    }
    2.0 * acc * lat.cell_volume() * lat.cell_volume()
}
