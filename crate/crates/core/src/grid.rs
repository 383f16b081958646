//! Sampling grids.

/// `count` points spaced evenly in `log` between `lo` and `hi` inclusive.
///
/// Works in either direction; `count == 1` yields `[lo]`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            let step = (b - a) / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        hi
                    } else {
                        10f64.powf(a + step * i as f64)
                    }
                })
                .collect()
        }
    }
}

/// `10^e` for `e` running from `first` to `last` in steps of `step` (sign
/// taken from the direction).
pub fn decades(first: f64, last: f64, step: f64) -> Vec<f64> {
    let count = ((last - first).abs() / step.abs()).round() as usize + 1;
    let dir = if last >= first {
        step.abs()
    } else {
        -step.abs()
    };
    (0..count)
        .map(|i| 10f64.powf(first + dir * i as f64))
        .collect()
}
