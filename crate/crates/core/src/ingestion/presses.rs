use crate::error::{Error, Result};

/// Collapses runs of presses closer than `gap_seconds` to the last press of
/// each run. Times are in seconds and must be sorted.
pub fn dedup_presses(press_times: &[f64], gap_seconds: f64) -> Result<Vec<f64>> {
    if press_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::contract("press times must be sorted ascending"));
    }
    let mut kept = Vec::with_capacity(press_times.len());
    for (i, &t) in press_times.iter().enumerate() {
        match press_times.get(i + 1) {
            Some(&next) if next - t < gap_seconds => {}
            _ => kept.push(t),
        }
    }
    Ok(kept)
}
