//! Welch power spectral density and band integration.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::bitstream::BitStream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Window {
    /// Periodic Hann; a tone centred on a bin leaks into its two neighbours
    /// only.
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n)
                .map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }

    /// Half-width (bins) of the main lobe.
    pub fn lobe_half_width(self) -> usize {
        match self {
            Window::Hann => 2,
            Window::Rectangular => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchConfig {
    pub segment_len: usize,
    /// Fraction of a segment shared with the next one, in [0, 1).
    pub overlap: f64,
    pub window: Window,
}

impl WelchConfig {
    /// Hann, 50 % overlap, segment of round(fs / bin_width) samples.
    pub fn for_bin_width(sample_rate: f64, bin_width: f64) -> Self {
        Self {
            segment_len: (sample_rate / bin_width).round().max(2.0) as usize,
            overlap: 0.5,
            window: Window::Hann,
        }
    }

    pub fn hop(&self) -> usize {
        let h = self.segment_len - (self.segment_len as f64 * self.overlap).round() as usize;
        h.max(1)
    }

    fn validate(&self) -> Result<()> {
        if self.segment_len < 2 {
            return Err(Error::Analysis("segment needs at least 2 samples".into()));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::Analysis("overlap must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Region removed from a band integral (Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exclusion {
    pub center: f64,
    pub half_width: f64,
}

/// One-sided PSD on the grid k · `resolution_bw`, k = 0..=N/2.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Units² per Hz.
    pub psd: Vec<f64>,
    /// Bin spacing (Hz).
    pub resolution_bw: f64,
    pub sample_rate: f64,
    pub window: Window,
    pub segments: usize,
}

impl Spectrum {
    pub fn freq(&self, k: usize) -> f64 {
        k as f64 * self.resolution_bw
    }

    pub fn freqs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.psd.len()).map(|k| self.freq(k))
    }

    pub fn nyquist(&self) -> f64 {
        0.5 * self.sample_rate
    }

    pub fn nearest_bin(&self, f: f64) -> usize {
        ((f / self.resolution_bw).round() as usize).min(self.psd.len() - 1)
    }

    /// ∫ psd df over the whole grid (mean-square of the signal).
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution_bw
    }

    /// Bins with f_low ≤ f < f_high that are not excluded. A band reaching
    /// the Nyquist frequency includes the Nyquist bin.
    fn band_bins<'a>(
        &'a self,
        f_low: f64,
        f_high: f64,
        exclude: &'a [Exclusion],
    ) -> Result<impl Iterator<Item = usize> + 'a> {
        let tol = 1e-9 * self.resolution_bw;
        if !(f_low >= 0.0 && f_high > f_low && f_high <= self.nyquist() + tol) {
            return Err(Error::Analysis(format!(
                "band [{f_low}, {f_high}] Hz outside [0, {}]",
                self.nyquist()
            )));
        }
        let last = self.psd.len() - 1;
        let to_nyquist = f_high >= self.freq(last) - tol;
        Ok((0..self.psd.len()).filter(move |&k| {
            let f = self.freq(k);
            let inside = f >= f_low - tol && (f < f_high - tol || (to_nyquist && k == last));
            inside
                && !exclude
                    .iter()
                    .any(|e| (f - e.center).abs() <= e.half_width + tol)
        }))
    }

    pub fn band_power(&self, f_low: f64, f_high: f64, exclude: &[Exclusion]) -> Result<f64> {
        Ok(self.band_bins(f_low, f_high, exclude)?.map(|k| self.psd[k]).sum::<f64>()
            * self.resolution_bw)
    }

    /// Mean density over the retained bins (units/√Hz).
    pub fn band_density(&self, f_low: f64, f_high: f64, exclude: &[Exclusion]) -> Result<f64> {
        let (sum, n) = self
            .band_bins(f_low, f_high, exclude)?
            .fold((0.0, 0usize), |(s, n), k| (s + self.psd[k], n + 1));
        if n == 0 {
            return Err(Error::Analysis("band holds no bins".into()));
        }
        Ok((sum / n as f64).sqrt())
    }

    /// Power of the main lobe around `f`, noise floor not removed.
    pub fn tone_power(&self, f: f64) -> f64 {
        let k = self.nearest_bin(f);
        let hw = self.window.lobe_half_width();
        let lo = k.saturating_sub(hw);
        let hi = (k + hw).min(self.psd.len() - 1);
        self.psd[lo..=hi].iter().sum::<f64>() * self.resolution_bw
    }

    /// Main-lobe power around `f` minus the local floor, taken as the mean
    /// of the eight bins on either side of the lobe.
    pub fn tone_power_above_floor(&self, f: f64) -> f64 {
        let k = self.nearest_bin(f);
        let hw = self.window.lobe_half_width();
        let lobe = (k + hw).min(self.psd.len() - 1) + 1 - k.saturating_sub(hw);
        let floor: Vec<f64> = (1..=8)
            .flat_map(|d| [k.checked_sub(hw + d), Some(k + hw + d)])
            .flatten()
            .filter(|&j| j < self.psd.len())
            .map(|j| self.psd[j])
            .collect();
        let floor_level = if floor.is_empty() {
            0.0
        } else {
            floor.iter().sum::<f64>() / floor.len() as f64
        };
        (self.tone_power(f) - floor_level * lobe as f64 * self.resolution_bw).max(0.0)
    }
}

/// √ of the band power with the excluded regions removed.
pub fn band_rms(sp: &Spectrum, f_low: f64, f_high: f64, exclude: &[Exclusion]) -> Result<f64> {
    sp.band_power(f_low, f_high, exclude).map(f64::sqrt)
}

/// Exclusions for a tone at `f0` and its harmonics 2..=`max_harmonic`,
/// each `bins` bins wide on either side.
pub fn tone_exclusions(f0: f64, bins: usize, max_harmonic: usize, bin_width: f64) -> Vec<Exclusion> {
    (1..=max_harmonic.max(1))
        .map(|h| Exclusion {
            center: h as f64 * f0,
            half_width: bins as f64 * bin_width,
        })
        .collect()
}

/// Amplitude ratio of the `order`-th harmonic of `f0` to the fundamental,
/// each measured above the local noise floor.
pub fn harmonic_distortion(sp: &Spectrum, f0: f64, order: usize) -> Result<f64> {
    let fh = order as f64 * f0;
    if order < 2 || fh >= sp.nyquist() {
        return Err(Error::Analysis(format!(
            "harmonic {order} of {f0} Hz is not below Nyquist ({} Hz)",
            sp.nyquist()
        )));
    }
    let p1 = sp.tone_power_above_floor(f0);
    if p1 == 0.0 {
        return Err(Error::Analysis(format!("no tone at {f0} Hz")));
    }
    Ok((sp.tone_power_above_floor(fh) / p1).sqrt().min(1.0))
}

/// Welch estimate of a full bit-stream, scaled to g.
pub fn psd(stream: &BitStream, cfg: &WelchConfig) -> Result<Spectrum> {
    if stream.is_empty() {
        return Err(Error::Analysis("empty bit-stream".into()));
    }
    let mut acc = WelchAccumulator::new(stream.f_ck, *cfg)?;
    acc.extend(stream.values());
    acc.finish()
}

pub fn psd_samples(x: &[f64], sample_rate: f64, cfg: &WelchConfig) -> Result<Spectrum> {
    let mut acc = WelchAccumulator::new(sample_rate, *cfg)?;
    acc.extend(x.iter().copied());
    acc.finish()
}

/// Streaming Welch estimator: memory is one segment whatever the input
/// length. Trailing samples that do not fill a segment are dropped.
pub struct WelchAccumulator {
    cfg: WelchConfig,
    sample_rate: f64,
    window: Vec<f64>,
    window_power: f64,
    fft: Arc<dyn Fft<f64>>,
    segment: Vec<f64>,
    scratch: Vec<Complex<f64>>,
    fft_scratch: Vec<Complex<f64>>,
    sum: Vec<f64>,
    segments: usize,
}

impl WelchAccumulator {
    pub fn new(sample_rate: f64, cfg: WelchConfig) -> Result<Self> {
        cfg.validate()?;
        if !(sample_rate > 0.0) {
            return Err(Error::Analysis("sample rate must be positive".into()));
        }
        let n = cfg.segment_len;
        let window = cfg.window.coefficients(n);
        let window_power = window.iter().map(|w| w * w).sum();
        let fft = FftPlanner::new().plan_fft_forward(n);
        let fft_scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Ok(Self {
            cfg,
            sample_rate,
            window,
            window_power,
            fft,
            segment: Vec::with_capacity(n),
            scratch: vec![Complex::default(); n],
            fft_scratch,
            sum: vec![0.0; n / 2 + 1],
            segments: 0,
        })
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.segment.push(x);
        if self.segment.len() == self.cfg.segment_len {
            self.process_segment();
            let hop = self.cfg.hop();
            self.segment.drain(..hop);
        }
    }

    pub fn extend(&mut self, xs: impl IntoIterator<Item = f64>) {
        for x in xs {
            self.push(x);
        }
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    fn process_segment(&mut self) {
        for ((c, &x), &w) in self.scratch.iter_mut().zip(&self.segment).zip(&self.window) {
            *c = Complex::new(x * w, 0.0);
        }
        self.fft
            .process_with_scratch(&mut self.scratch, &mut self.fft_scratch);
        for (s, c) in self.sum.iter_mut().zip(&self.scratch) {
            *s += c.norm_sqr();
        }
        self.segments += 1;
    }

    /// Like [`finish`](Self::finish), but a record shorter than one segment
    /// and at least half of one is estimated as a single periodogram over
    /// the available samples (slightly coarser bins).
    pub fn finish_or_partial(self) -> Result<Spectrum> {
        let n = self.segment.len();
        if self.segments > 0 || 2 * n < self.cfg.segment_len {
            return self.finish();
        }
        let cfg = WelchConfig { segment_len: n, ..self.cfg };
        let mut single = WelchAccumulator::new(self.sample_rate, cfg)?;
        single.extend(self.segment.iter().copied());
        single.finish()
    }

    pub fn finish(self) -> Result<Spectrum> {
        if self.segments == 0 {
            return Err(Error::Analysis(format!(
                "signal shorter than one {}-sample segment",
                self.cfg.segment_len
            )));
        }
        let n = self.cfg.segment_len;
        let norm = 1.0 / (self.sample_rate * self.window_power * self.segments as f64);
        let last = n / 2;
        let psd = self
            .sum
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let one_sided = if k == 0 || (n.is_multiple_of(2) && k == last) { 1.0 } else { 2.0 };
                p * norm * one_sided
            })
            .collect();
        Ok(Spectrum {
            psd,
            resolution_bw: self.sample_rate / n as f64,
            sample_rate: self.sample_rate,
            window: self.cfg.window,
            segments: self.segments,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn nyquist_square_wave() {
        let bs = BitStream::from_bits(1000.0, 2.0, 0, (0..4096).map(|i| if i % 2 == 0 { 1 } else { -1 }));
        let cfg = WelchConfig { segment_len: 256, overlap: 0.5, window: Window::Rectangular };
        let s = psd(&bs, &cfg).unwrap();
        let total = s.total_power();
        assert_relative_eq!(total, 4.0, max_relative = 1e-9);
        let ny = *s.psd.last().unwrap() * s.resolution_bw;
        assert_relative_eq!(ny, total, max_relative = 1e-9);
    }

    #[test]
    fn white_bits_are_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 256 * 101;
        let bs = BitStream::from_bits(2000.0, 2.0, 0, (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }));
        let cfg = WelchConfig { segment_len: 512, overlap: 0.5, window: Window::Hann };
        let s = psd(&bs, &cfg).unwrap();
        assert!(s.segments >= 100);
        let expected = 4.0 / 1000.0;
        let mean = s.band_power(10.0, 990.0, &[]).unwrap() / 980.0;
        assert!((mean / expected - 1.0).abs() < 0.05, "{mean}");
        assert!((s.total_power() / 4.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn band_rms_of_flat_density() {
        let s = Spectrum {
            psd: vec![2.0; 101],
            resolution_bw: 0.5,
            sample_rate: 100.0,
            window: Window::Hann,
            segments: 1,
        };
        assert_relative_eq!(band_rms(&s, 10.0, 20.0, &[]).unwrap(), (2.0f64 * 10.0).sqrt(), max_relative = 1e-12);
        let ex = [Exclusion { center: 15.0, half_width: 1.0 }];
        assert_relative_eq!(s.band_power(10.0, 20.0, &ex).unwrap(), 2.0 * 0.5 * 15.0, max_relative = 1e-12);
        assert!(band_rms(&s, 10.0, 60.0, &[]).is_err());
        assert!(band_rms(&s, -1.0, 20.0, &[]).is_err());
        // full band reaches the Nyquist bin
        assert_relative_eq!(s.band_power(0.0, 50.0, &[]).unwrap(), s.total_power(), max_relative = 1e-12);
    }

    #[test]
    fn distortion_of_sine() {
        let fs = 1000.0;
        let n = 40_000;
        let clean: Vec<f64> = (0..n).map(|i| (2.0 * PI * 16.0 * i as f64 / fs).sin()).collect();
        let cfg = WelchConfig::for_bin_width(fs, 0.5);
        let s = psd_samples(&clean, fs, &cfg).unwrap();
        assert!(harmonic_distortion(&s, 16.0, 3).unwrap() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dirty: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs;
                (2.0 * PI * 16.0 * t).sin() + 0.01 * (2.0 * PI * 48.0 * t).sin()
                    + 1e-3 * (rng.random::<f64>() - 0.5)
            })
            .collect();
        let s = psd_samples(&dirty, fs, &cfg).unwrap();
        let hd3 = harmonic_distortion(&s, 16.0, 3).unwrap();
        assert!((hd3 / 0.01 - 1.0).abs() < 0.1, "{hd3}");
        assert!(harmonic_distortion(&s, 200.0, 3).is_err());
    }

    #[test]
    fn rejects_short_and_empty() {
        let cfg = WelchConfig { segment_len: 64, overlap: 0.5, window: Window::Hann };
        assert!(psd(&BitStream::new(1.0, 1.0, 0), &cfg).is_err());
        assert!(psd_samples(&[1.0; 10], 1.0, &cfg).is_err());
    }

    #[test]
    fn streaming_matches_batch() {
        let x: Vec<f64> = (0..5000).map(|i| ((i * 7919) % 113) as f64 / 113.0 - 0.5).collect();
        let cfg = WelchConfig { segment_len: 400, overlap: 0.5, window: Window::Hann };
        let a = psd_samples(&x, 100.0, &cfg).unwrap();
        let mut acc = WelchAccumulator::new(100.0, cfg).unwrap();
        for chunk in x.chunks(77) {
            acc.extend(chunk.iter().copied());
        }
        assert_eq!(acc.finish().unwrap(), a);
        assert_eq!(a.segments, (5000 - 400) / 200 + 1);
    }

    #[test]
    fn partial_record_gives_single_segment() {
        let cfg = WelchConfig { segment_len: 1000, overlap: 0.5, window: Window::Hann };
        let mut acc = WelchAccumulator::new(100.0, cfg).unwrap();
        acc.extend((0..990).map(|i| (i as f64 * 0.3).sin()));
        let s = acc.finish_or_partial().unwrap();
        assert_eq!(s.segments, 1);
        assert_relative_eq!(s.resolution_bw, 100.0 / 990.0, max_relative = 1e-12);
        let mut short = WelchAccumulator::new(100.0, cfg).unwrap();
        short.extend((0..400).map(|i| i as f64));
        assert!(short.finish_or_partial().is_err());
    }
}
