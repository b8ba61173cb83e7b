use cenn::kalman::{KalmanFilter, KalmanNoise};
use cenn_oracles as oracle;

#[test]
fn matches_scalar_filter_per_axis() {
    let noise = KalmanNoise::WEAK;
    let xs: Vec<f64> = (1..=40).map(|t| 3.0 + 1.5 * f64::from(t) + (f64::from(t) * 0.7).sin()).collect();
    let ys: Vec<f64> = (1..=40).map(|t| -2.0 - 0.5 * f64::from(t)).collect();
    let want_x = oracle::kalman_1d(&xs, 3.0, noise.process, noise.measurement);
    let want_y = oracle::kalman_1d(&ys, -2.0, noise.process, noise.measurement);
    let mut kf = KalmanFilter::new([3.0, -2.0], noise).unwrap();
    for i in 0..xs.len() {
        kf = kf.step(Some([xs[i], ys[i]])).unwrap();
        let [x, y] = kf.position();
        assert!((x - want_x[i]).abs() < 1e-9, "x at {i}");
        assert!((y - want_y[i]).abs() < 1e-9, "y at {i}");
    }
}

#[test]
fn weak_filter_lag_is_small_at_constant_velocity() {
    let mut kf = KalmanFilter::new([0.0, 0.0], KalmanNoise::WEAK).unwrap();
    let mut lag = f64::INFINITY;
    for t in 1..=20 {
        let truth = 2.0 * f64::from(t);
        kf = kf.step(Some([truth, 0.0])).unwrap();
        lag = truth - kf.position()[0];
    }
    assert!(lag.abs() < 1.0, "lag {lag}");
}

#[test]
fn strong_filter_smooths_more_than_weak() {
    let meas: Vec<[f64; 2]> = (0..30).map(|t| if t % 2 == 0 { [25.0, 25.0] } else { [15.0, 15.0] }).collect();
    let spread = |noise| {
        let mut kf = KalmanFilter::new([20.0, 20.0], noise).unwrap();
        let mut vals = Vec::new();
        for m in &meas {
            kf = kf.step(Some(*m)).unwrap();
            vals.push(kf.position()[0]);
        }
        let tail = &vals[10..];
        tail.iter().cloned().fold(f64::MIN, f64::max) - tail.iter().cloned().fold(f64::MAX, f64::min)
    };
    assert!(spread(KalmanNoise::STRONG) < 0.25 * spread(KalmanNoise::WEAK));
}

#[test]
fn covariance_stays_symmetric_psd() {
    let mut kf = KalmanFilter::new([0.0, 0.0], KalmanNoise::STRONG).unwrap();
    for t in 0..200 {
        let m = (t % 7 != 0).then(|| [f64::from(t), 1e3 * f64::from(t % 3)]);
        kf = kf.step(m).unwrap();
        let p = kf.covariance();
        assert_eq!(*p, p.transpose());
        assert!(p.symmetric_eigenvalues().iter().all(|&e| e >= -1e-9));
    }
}
