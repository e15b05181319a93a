//! Prominence-filtered braking peak counting.

/// Counts braking events in an acceleration series.
///
/// Works on the deceleration signal `s = -a`. A sample is an event peak when
/// `s > tau` and `s` drops by more than `tau` on both sides before reaching a
/// higher sample (or the series end, which acts as a valley). Ties resolve
/// towards the earlier peak: the left search stops at `>=`, the right search
/// at `>`, so a plateau counts once and two equal peaks separated by a shallow
/// valley count once. Raising `tau` never adds events.
pub fn count_braking_peaks(accel: &[f64], tau: f64) -> usize {
    let s: Vec<f64> = accel.iter().map(|a| -a).collect();
    (0..s.len()).filter(|&p| s[p] > tau && is_prominent(&s, p, tau)).count()
}

fn is_prominent(s: &[f64], peak: usize, tau: f64) -> bool {
    let h = s[peak];
    let mut left_min = h;
    for k in (0..peak).rev() {
        if s[k] >= h {
            break;
        }
        left_min = left_min.min(s[k]);
    }
    if h - left_min <= tau {
        return false;
    }
    let mut right_min = h;
    for &x in &s[peak + 1..] {
        if x > h {
            break;
        }
        right_min = right_min.min(x);
    }
    h - right_min > tau
}
