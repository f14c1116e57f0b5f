//! Synchronization measures on expectation-value traces.
//!
//! Everything here is a pure function over sampled traces. Two notions of
//! synchronization are reported side by side: the strict ac-network one
//! (phase, amplitude and frequency all matched) and a looser phase-only lock.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use thiserror::Error;

use crate::quantum::TimeSeries;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("trace and time axis differ in length ({trace} vs {times})")]
    LengthMismatch { trace: usize, times: usize },
    #[error("trace does not oscillate")]
    NoOscillation,
    #[error("trace is shorter than one oscillation period")]
    TooShort,
    #[error("no upward zero crossings in the analysis window")]
    NoCrossings,
    #[error("need at least {needed} envelope points, got {got}")]
    NotEnoughPoints { needed: usize, got: usize },
    #[error("envelope amplitude at index {0} is not positive")]
    NonPositiveAmplitude(usize),
    #[error("series covers {got} periods, need at least {needed}")]
    SeriesTooShort { needed: usize, got: usize },
    #[error("DOF index {0} is out of range")]
    BadDof(usize),
    #[error("invalid tolerance: {0}")]
    BadTolerance(&'static str),
}

impl AnalysisError {
    /// False for requests the caller can fix: a window that is too short, a
    /// missing DOF or a bad tolerance.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            AnalysisError::TooShort | AnalysisError::SeriesTooShort { .. } | AnalysisError::BadDof(_) | AnalysisError::BadTolerance(_)
        )
    }
}

/// A refined local maximum of `|trace|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub t: f64,
    pub amplitude: f64,
}

fn check_lengths(trace: &[f64], times: &[f64]) -> Result<(), AnalysisError> {
    if trace.len() != times.len() {
        return Err(AnalysisError::LengthMismatch {
            trace: trace.len(),
            times: times.len(),
        });
    }
    Ok(())
}

/// Local maxima of `|trace|`, refined by a parabola through three samples.
/// Both the positive and the negative extrema of an oscillation are returned.
pub fn peak_envelope(trace: &[f64], times: &[f64]) -> Result<Vec<Peak>, AnalysisError> {
    check_lengths(trace, times)?;
    if trace.iter().all(|&y| y == 0.0) {
        return Err(AnalysisError::NoOscillation);
    }
    let mut peaks = Vec::new();
    for i in 1..trace.len().saturating_sub(1) {
        let (y0, y1, y2) = (trace[i - 1], trace[i], trace[i + 1]);
        let same_sign = y0.signum() == y1.signum() && y1.signum() == y2.signum();
        if !(same_sign && y1.abs() >= y0.abs() && y1.abs() > y2.abs()) {
            continue;
        }
        // parabola through unevenly spaced points, in the signed values
        let (t0, t1, t2) = (times[i - 1] - times[i], 0.0, times[i + 1] - times[i]);
        let d01 = (y1 - y0) / (t1 - t0);
        let d12 = (y2 - y1) / (t2 - t1);
        let curvature = (d12 - d01) / (t2 - t0);
        let peak = if curvature == 0.0 {
            Peak { t: times[i], amplitude: y1.abs() }
        } else {
            let slope_at_t1 = d01 + curvature * (t1 - t0);
            let offset = -slope_at_t1 / (2.0 * curvature);
            let value = y1 + slope_at_t1 * offset + curvature * offset * offset;
            Peak {
                t: times[i] + offset,
                amplitude: value.abs(),
            }
        };
        peaks.push(peak);
    }
    if peaks.len() < 2 {
        return Err(AnalysisError::TooShort);
    }
    Ok(peaks)
}

/// Upward zero crossings, linearly interpolated.
pub fn upward_crossings(trace: &[f64], times: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..trace.len().min(times.len()) {
        let (y0, y1) = (trace[i - 1], trace[i]);
        if y0 < 0.0 && y1 >= 0.0 {
            let frac = -y0 / (y1 - y0);
            out.push(times[i - 1] + frac * (times[i] - times[i - 1]));
        }
    }
    out
}

fn mean_spacing(crossings: &[f64]) -> Option<f64> {
    (crossings.len() >= 2).then(|| (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Maps an angle to `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// Phase by which `b` lags `a` inside `window = (t_start, t_end)`, from the
/// upward zero crossings of both traces. Positive means `b` crosses later.
pub fn phase_lag(a: &[f64], b: &[f64], times: &[f64], window: (f64, f64)) -> Result<f64, AnalysisError> {
    check_lengths(a, times)?;
    check_lengths(b, times)?;
    let inside = |c: &f64| *c >= window.0 && *c <= window.1;
    let ca: Vec<f64> = upward_crossings(a, times).into_iter().filter(inside).collect();
    let cb: Vec<f64> = upward_crossings(b, times).into_iter().filter(inside).collect();
    if ca.is_empty() || cb.is_empty() {
        return Err(AnalysisError::NoCrossings);
    }
    let periods: Vec<f64> = [mean_spacing(&ca), mean_spacing(&cb)].into_iter().flatten().collect();
    if periods.is_empty() {
        return Err(AnalysisError::NoCrossings);
    }
    let omega = TAU * periods.len() as f64 / periods.iter().sum::<f64>();
    let phasor = |cs: &[f64]| cs.iter().map(|&t| Complex64::from_polar(1.0, omega * t)).sum::<Complex64>();
    Ok(wrap_angle((phasor(&cb) * phasor(&ca).conj()).arg()))
}

/// Decay rate of an envelope from a least-squares fit of `ln A` against `t`.
/// Rates below `1/(100·t_span)` are reported as zero.
pub fn fit_decay(envelope: &[Peak]) -> Result<f64, AnalysisError> {
    if envelope.len() < 5 {
        return Err(AnalysisError::NotEnoughPoints {
            needed: 5,
            got: envelope.len(),
        });
    }
    if let Some(i) = envelope.iter().position(|p| p.amplitude.is_nan() || p.amplitude <= 0.0) {
        return Err(AnalysisError::NonPositiveAmplitude(i));
    }
    let n = envelope.len() as f64;
    let t_mean = envelope.iter().map(|p| p.t).sum::<f64>() / n;
    let y_mean = envelope.iter().map(|p| p.amplitude.ln()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for p in envelope {
        let dt = p.t - t_mean;
        sxy += dt * (p.amplitude.ln() - y_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    let span = envelope[envelope.len() - 1].t - envelope[0].t;
    if slope.abs() < 1.0 / (100.0 * span) {
        return Ok(0.0);
    }
    Ok(-slope)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Largest phase lag counted as aligned (rad).
    pub phase_tol: f64,
    /// Largest `|ratio − 1|` counted as equal amplitude.
    pub amp_tol: f64,
    /// Largest relative period mismatch counted as equal frequency.
    pub freq_tol: f64,
    /// Consecutive periods that must satisfy the conditions.
    pub periods: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            phase_tol: 0.05,
            amp_tol: 0.05,
            freq_tol: 0.01,
            periods: 5,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.phase_tol > 0.0 && self.phase_tol <= PI) {
            return Err(AnalysisError::BadTolerance("phase_tol must lie in (0, π]"));
        }
        if !(self.amp_tol > 0.0 && self.amp_tol.is_finite()) {
            return Err(AnalysisError::BadTolerance("amp_tol must be positive"));
        }
        if !(self.freq_tol > 0.0 && self.freq_tol.is_finite()) {
            return Err(AnalysisError::BadTolerance("freq_tol must be positive"));
        }
        if self.periods == 0 {
            return Err(AnalysisError::BadTolerance("periods must be at least 1"));
        }
        Ok(())
    }
}

/// Metrics of one oscillation period of the first trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodMetrics {
    pub start: f64,
    pub end: f64,
    pub amplitudes: [f64; 2],
    pub phase_lag: f64,
    /// `T_b / T_a − 1`; NaN when the second trace has no usable crossings.
    pub period_mismatch: f64,
}

impl PeriodMetrics {
    pub fn amplitude_ratio(&self) -> f64 {
        self.amplitudes[1] / self.amplitudes[0]
    }

    fn phase_locked(&self, tol: &Tolerances) -> bool {
        self.phase_lag.abs() < tol.phase_tol && self.period_mismatch.abs() < tol.freq_tol
    }

    fn strict(&self, tol: &Tolerances) -> bool {
        self.phase_locked(tol) && (self.amplitude_ratio() - 1.0).abs() < tol.amp_tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncReport {
    /// Start of the first run of strictly synchronized periods; `∞` if none.
    pub transient_time: f64,
    /// Start of the first run of phase-locked periods; `∞` if none.
    pub lock_time: f64,
    /// Mean per-period lag of the second trace behind the first (rad).
    pub phase_lag: f64,
    /// Second steady amplitude over the first.
    pub amplitude_ratio: f64,
    /// Mean per-period peak of each trace after the transient.
    pub steady_amplitudes: [f64; 2],
    /// Envelope decay rate of the first trace after the transient (1/s).
    pub decay_rate: f64,
    /// Steady angular frequency of the first trace (rad/s).
    pub angular_frequency: f64,
    pub strict_sync: bool,
    pub phase_locked: bool,
    pub periods: Vec<PeriodMetrics>,
}

fn window_peak(peaks: &[Peak], start: f64, end: f64) -> Option<f64> {
    peaks
        .iter()
        .filter(|p| p.t >= start && p.t < end)
        .map(|p| p.amplitude)
        .reduce(f64::max)
}

fn nearest_index(sorted: &[f64], t: f64) -> Option<usize> {
    let i = sorted.partition_point(|&c| c < t);
    [i.checked_sub(1), (i < sorted.len()).then_some(i)]
        .into_iter()
        .flatten()
        .min_by(|&x, &y| (sorted[x] - t).abs().total_cmp(&(sorted[y] - t).abs()))
}

/// Per-period metrics of traces `a` and `b` delimited by upward crossings of `a`.
pub fn period_metrics(a: &[f64], b: &[f64], times: &[f64]) -> Result<Vec<PeriodMetrics>, AnalysisError> {
    check_lengths(a, times)?;
    check_lengths(b, times)?;
    let ca = upward_crossings(a, times);
    let cb = upward_crossings(b, times);
    let pa = peak_envelope(a, times)?;
    let pb = peak_envelope(b, times).unwrap_or_default();
    let mut out = Vec::with_capacity(ca.len().saturating_sub(1));
    for w in ca.windows(2) {
        let (start, end) = (w[0], w[1]);
        let period = end - start;
        let Some(amp_a) = window_peak(&pa, start, end) else { continue };
        let amp_b = window_peak(&pb, start, end).unwrap_or(0.0);
        let (lag, mismatch) = match nearest_index(&cb, start) {
            Some(j) => {
                let lag = wrap_angle(TAU * (cb[j] - start) / period);
                let neighbour = if j + 1 < cb.len() { Some(cb[j + 1] - cb[j]) } else { j.checked_sub(1).map(|i| cb[j] - cb[i]) };
                (lag, neighbour.map_or(f64::NAN, |pb| pb / period - 1.0))
            }
            None => (f64::NAN, f64::NAN),
        };
        out.push(PeriodMetrics {
            start,
            end,
            amplitudes: [amp_a, amp_b],
            phase_lag: lag,
            period_mismatch: mismatch,
        });
    }
    Ok(out)
}

fn first_run(periods: &[PeriodMetrics], k: usize, ok: impl Fn(&PeriodMetrics) -> bool) -> Option<usize> {
    let mut run = 0;
    for (i, p) in periods.iter().enumerate() {
        run = if ok(p) { run + 1 } else { 0 };
        if run == k {
            return Some(i + 1 - k);
        }
    }
    None
}

/// Synchronization metrics of the charge traces of DOFs `pair` (zero-based).
///
/// The steady metrics average the `K` periods starting at the transient time.
/// Without strict synchronization they start at the first run of `K` periods,
/// no earlier than the phase lock, whose amplitude ratio is within `amp_tol`
/// of its final value.
pub fn sync_report(series: &TimeSeries, pair: (usize, usize), tol: &Tolerances) -> Result<SyncReport, AnalysisError> {
    tol.validate()?;
    for k in [pair.0, pair.1] {
        if k >= series.n_dof() {
            return Err(AnalysisError::BadDof(k));
        }
    }
    let a = &series.charge[pair.0];
    let b = &series.charge[pair.1];
    let periods = period_metrics(a, b, &series.times)?;
    let k = tol.periods;
    if periods.len() < k {
        return Err(AnalysisError::SeriesTooShort {
            needed: k,
            got: periods.len(),
        });
    }
    let strict_start = first_run(&periods, k, |p| p.strict(tol));
    let lock_start = first_run(&periods, k, |p| p.phase_locked(tol));
    let last = periods.len() - k;
    let reference = strict_start.unwrap_or_else(|| {
        // without strict sync, wait for the amplitude ratio to settle
        let ratio_final = periods[last..].iter().map(PeriodMetrics::amplitude_ratio).sum::<f64>() / k as f64;
        let from = lock_start.unwrap_or(0);
        first_run(&periods[from..], k, |p| (p.amplitude_ratio() / ratio_final - 1.0).abs() < tol.amp_tol)
            .map_or(last, |i| from + i)
    });
    let steady = &periods[reference..reference + k];
    let kf = k as f64;
    let amp_a = steady.iter().map(|p| p.amplitudes[0]).sum::<f64>() / kf;
    let amp_b = steady.iter().map(|p| p.amplitudes[1]).sum::<f64>() / kf;
    let phase = steady.iter().map(|p| p.phase_lag).sum::<f64>() / kf;
    let period = steady.iter().map(|p| p.end - p.start).sum::<f64>() / kf;

    let t_ref = periods[reference].start;
    let tail: Vec<Peak> = peak_envelope(a, &series.times)?.into_iter().filter(|p| p.t >= t_ref).collect();
    let decay_rate = match fit_decay(&tail) {
        Ok(rate) => rate,
        Err(AnalysisError::NotEnoughPoints { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    let time_of = |i: Option<usize>| i.map_or(f64::INFINITY, |i| periods[i].start);
    Ok(SyncReport {
        transient_time: time_of(strict_start),
        lock_time: time_of(lock_start),
        phase_lag: phase,
        amplitude_ratio: if amp_a > 0.0 { amp_b / amp_a } else { f64::INFINITY },
        steady_amplitudes: [amp_a, amp_b],
        decay_rate,
        angular_frequency: TAU / period,
        strict_sync: strict_start.is_some(),
        phase_locked: lock_start.is_some(),
        periods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::Scales;
    use proptest::prelude::*;

    fn grid(period: f64, per_period: usize, n_periods: f64) -> Vec<f64> {
        let dt = period / per_period as f64;
        let n = (n_periods * per_period as f64) as usize;
        (0..=n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn cosine_peaks() {
        let period = 2e-10;
        let w = TAU / period;
        let t = grid(period, 200, 5.3);
        let y: Vec<f64> = t.iter().map(|t| (w * t).cos()).collect();
        let peaks = peak_envelope(&y, &t).unwrap();
        // extrema at multiples of T/2, t = 0 is an endpoint
        assert_eq!(peaks.len(), 10);
        for (i, p) in peaks.iter().enumerate() {
            assert!((p.amplitude - 1.0).abs() < 1e-4);
            assert!((p.t - (i + 1) as f64 * period / 2.0).abs() < 1e-4 * period);
        }
    }

    #[test]
    fn damped_cosine_envelope() {
        let period = 2e-10;
        let w = TAU / period;
        let alpha = 2.5e8;
        let t = grid(period, 200, 40.0);
        let y: Vec<f64> = t.iter().map(|t| (-alpha * t).exp() * (w * t).cos()).collect();
        let rate = fit_decay(&peak_envelope(&y, &t).unwrap()).unwrap();
        assert!((rate / alpha - 1.0).abs() < 0.01, "rate = {rate}");
    }

    #[test]
    fn envelope_errors() {
        let t = grid(1.0, 200, 3.0);
        assert_eq!(peak_envelope(&vec![0.0; t.len()], &t), Err(AnalysisError::NoOscillation));
        let short: Vec<f64> = t.iter().map(|t| (0.1 * t).sin()).collect();
        assert_eq!(peak_envelope(&short, &t), Err(AnalysisError::TooShort));
        assert!(matches!(peak_envelope(&[1.0], &[0.0, 1.0]), Err(AnalysisError::LengthMismatch { .. })));
    }

    #[test]
    fn lag_special_cases() {
        let period = 1.0;
        let t = grid(period, 200, 6.0);
        let a: Vec<f64> = t.iter().map(|t| (TAU * t).cos()).collect();
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!(phase_lag(&a, &a, &t, (0.0, 6.0)).unwrap().abs() < 1e-12);
        let pi = phase_lag(&a, &neg, &t, (0.0, 6.0)).unwrap();
        assert!((pi.abs() - PI).abs() < 1e-6, "{pi}");
        let delayed: Vec<f64> = t.iter().map(|t| (TAU * t - 0.3).cos()).collect();
        let lag = phase_lag(&a, &delayed, &t, (0.0, 6.0)).unwrap();
        assert!((lag - 0.3).abs() < 1e-4, "{lag}");
        assert_eq!(phase_lag(&a, &a, &t, (10.0, 11.0)), Err(AnalysisError::NoCrossings));
    }

    #[test]
    fn wrapping() {
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn decay_fits() {
        let flat: Vec<Peak> = (0..10).map(|i| Peak { t: i as f64 * 1e-9, amplitude: 0.5 }).collect();
        assert_eq!(fit_decay(&flat).unwrap(), 0.0);
        let alpha = 1e7;
        let synthetic: Vec<Peak> = (0..20).map(|i| {
            let t = i as f64 * 1e-8;
            Peak { t, amplitude: (-alpha * t).exp() }
        }).collect();
        assert!((fit_decay(&synthetic).unwrap() / alpha - 1.0).abs() < 0.02);
        assert!(matches!(fit_decay(&flat[..4]), Err(AnalysisError::NotEnoughPoints { .. })));
        let mut bad = flat.clone();
        bad[3].amplitude = 0.0;
        assert_eq!(fit_decay(&bad), Err(AnalysisError::NonPositiveAmplitude(3)));
    }

    fn series_from(a: Vec<f64>, b: Vec<f64>, times: Vec<f64>) -> TimeSeries {
        let scales = vec![Scales { charge: 1.0, flux: 1.0, impedance: 1.0 }; 2];
        let mut s = TimeSeries::with_dofs(scales);
        s.flux = vec![vec![0.0; times.len()]; 2];
        s.charge = vec![a, b];
        s.times = times;
        s
    }

    /// Two traces whose relative phase and amplitude relax to zero.
    fn converging(scale: f64) -> TimeSeries {
        let w = TAU;
        let t = grid(1.0, 200, 40.0);
        let a = t.iter().map(|t| scale * 0.5 * (w * t).sin()).collect();
        let b = t
            .iter()
            .map(|t| {
                let relax = (-t / 3.0f64).exp();
                scale * 0.5 * (1.0 - 0.8 * relax) * (w * t - 1.2 * relax).sin()
            })
            .collect();
        series_from(a, b, t)
    }

    #[test]
    fn converging_traces_synchronize() {
        let r = sync_report(&converging(1.0), (0, 1), &Tolerances::default()).unwrap();
        assert!(r.strict_sync && r.phase_locked);
        assert!(r.transient_time > 5.0 && r.transient_time < 15.0, "{}", r.transient_time);
        assert!(r.lock_time <= r.transient_time);
        assert!(r.phase_lag.abs() < 0.05 && (r.amplitude_ratio - 1.0).abs() < 0.05);
        assert!((r.angular_frequency - TAU).abs() < 1e-3);
        assert_eq!(r.decay_rate, 0.0);
    }

    #[test]
    fn unequal_amplitudes_lock_without_strict_sync() {
        let t = grid(1.0, 200, 20.0);
        let a = t.iter().map(|t| 0.6 * (TAU * t).sin()).collect();
        let b = t.iter().map(|t| 0.4 * (TAU * t).sin()).collect();
        let r = sync_report(&series_from(a, b, t), (0, 1), &Tolerances::default()).unwrap();
        assert!(!r.strict_sync && r.phase_locked);
        assert!(r.transient_time.is_infinite());
        assert!((r.amplitude_ratio - 2.0 / 3.0).abs() < 1e-3);
        assert!((r.steady_amplitudes[0] - 0.6).abs() < 1e-4);
    }

    #[test]
    fn detuned_traces_never_lock() {
        let t = grid(1.0, 200, 30.0);
        let a = t.iter().map(|t| (TAU * t).sin()).collect();
        let b = t.iter().map(|t| (TAU * 1.13 * t).sin()).collect();
        let r = sync_report(&series_from(a, b, t), (0, 1), &Tolerances::default()).unwrap();
        assert!(!r.strict_sync && !r.phase_locked);
        assert!(r.lock_time.is_infinite());
    }

    #[test]
    fn report_errors() {
        let t = grid(1.0, 200, 3.0);
        let a: Vec<f64> = t.iter().map(|t| (TAU * t).sin()).collect();
        let s = series_from(a.clone(), a, t);
        assert!(matches!(sync_report(&s, (0, 1), &Tolerances::default()), Err(AnalysisError::SeriesTooShort { .. })));
        assert_eq!(sync_report(&s, (0, 2), &Tolerances::default()), Err(AnalysisError::BadDof(2)));
        let bad = Tolerances { periods: 0, ..Tolerances::default() };
        assert!(matches!(sync_report(&s, (0, 1), &bad), Err(AnalysisError::BadTolerance(_))));
    }

    proptest! {
        #[test]
        fn lag_is_antisymmetric(shift in -3.0f64..3.0, ratio in 0.2f64..3.0) {
            let t = grid(1.0, 100, 8.0);
            let a: Vec<f64> = t.iter().map(|t| (TAU * t).sin()).collect();
            let b: Vec<f64> = t.iter().map(|t| ratio * (TAU * t - shift).sin()).collect();
            let ab = phase_lag(&a, &b, &t, (0.0, 8.0)).unwrap();
            let ba = phase_lag(&b, &a, &t, (0.0, 8.0)).unwrap();
            prop_assert!(wrap_angle(ab + ba).abs() < 1e-9);
        }

        #[test]
        fn report_is_scale_invariant(scale in 1e-3f64..1e3) {
            let base = sync_report(&converging(1.0), (0, 1), &Tolerances::default()).unwrap();
            let scaled = sync_report(&converging(scale), (0, 1), &Tolerances::default()).unwrap();
            prop_assert!((base.transient_time - scaled.transient_time).abs() < 1e-9);
            prop_assert!((base.phase_lag - scaled.phase_lag).abs() < 1e-9);
            prop_assert!((base.amplitude_ratio - scaled.amplitude_ratio).abs() < 1e-9);
            prop_assert_eq!(base.strict_sync, scaled.strict_sync);
        }

        #[test]
        fn sinusoid_peaks_are_accurate(amp in 0.1f64..10.0, phase in 0.0f64..TAU) {
            let t = grid(1.0, 200, 4.0);
            let y: Vec<f64> = t.iter().map(|t| amp * (TAU * t + phase).cos()).collect();
            for p in peak_envelope(&y, &t).unwrap() {
                prop_assert!((p.amplitude / amp - 1.0).abs() < 1e-4);
            }
        }
    }
}
