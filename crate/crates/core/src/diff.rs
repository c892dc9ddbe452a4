//! Fourth-order finite differences on uniform grids.

/// First derivative; centered in the interior, one-sided at the two ends.
pub fn d1(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    assert!(n >= 5, "need at least 5 samples for 4th-order differences");
    let mut d = vec![0.0; n];
    let c = 1.0 / (12.0 * h);
    d[0] = c * (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]);
    d[1] = c * (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3] + u[4]);
    for i in 2..n - 2 {
        d[i] = c * (-u[i + 2] + 8.0 * u[i + 1] - 8.0 * u[i - 1] + u[i - 2]);
    }
    let m = n - 1;
    d[m] = -c * (-25.0 * u[m] + 48.0 * u[m - 1] - 36.0 * u[m - 2] + 16.0 * u[m - 3] - 3.0 * u[m - 4]);
    d[m - 1] = -c * (-3.0 * u[m] - 10.0 * u[m - 1] + 18.0 * u[m - 2] - 6.0 * u[m - 3] + u[m - 4]);
    d
}

/// Second derivative with the same stencil layout as [`d1`].
pub fn d2(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    assert!(n >= 6, "need at least 6 samples for 4th-order second differences");
    let mut d = vec![0.0; n];
    let c = 1.0 / (12.0 * h * h);
    let one_sided = |v: [f64; 6]| {
        c * (45.0 * v[0] - 154.0 * v[1] + 214.0 * v[2] - 156.0 * v[3] + 61.0 * v[4] - 10.0 * v[5])
    };
    let near = |v: [f64; 6]| c * (10.0 * v[0] - 15.0 * v[1] - 4.0 * v[2] + 14.0 * v[3] - 6.0 * v[4] + v[5]);
    d[0] = one_sided([u[0], u[1], u[2], u[3], u[4], u[5]]);
    d[1] = near([u[0], u[1], u[2], u[3], u[4], u[5]]);
    for i in 2..n - 2 {
        d[i] = c * (-u[i + 2] + 16.0 * u[i + 1] - 30.0 * u[i] + 16.0 * u[i - 1] - u[i - 2]);
    }
    let m = n - 1;
    d[m] = one_sided([u[m], u[m - 1], u[m - 2], u[m - 3], u[m - 4], u[m - 5]]);
    d[m - 1] = near([u[m], u[m - 1], u[m - 2], u[m - 3], u[m - 4], u[m - 5]]);
    d
}
