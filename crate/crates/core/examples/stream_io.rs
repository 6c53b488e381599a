//! Bit-stream storage: simulate, write packed and text forms, read them
//! back, stream a long run straight to disk, and drive the loop from a
//! sampled acceleration record.
//!
//! ```text
//! cargo run --release --example stream_io -- [dir]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use thermal_sd::analysis::{band_metrics, band_spectrum, ResolutionSettings};
use thermal_sd::bitstream::PackedWriter;
use thermal_sd::input::SampledInput;
use thermal_sd::modulator::run_streaming;
use thermal_sd::{simulate, BitStream, Input, ModulatorConfig, SensorParameters};

fn main() -> thermal_sd::Result<()> {
    let dir = std::env::args().nth(1).map_or_else(std::env::temp_dir, PathBuf::from);
    let sensor = SensorParameters::prototype();
    let cfg = ModulatorConfig { duration: 2.0, seed: 7, ..Default::default() };
    let tone = Input::Sine { freq: 16.0, amp: 1.0 };

    let bs = simulate(&sensor, &cfg, &tone)?;
    let packed = dir.join("tone.tsdb");
    bs.write_packed(BufWriter::new(File::create(&packed)?))?;
    let back = BitStream::read_packed(BufReader::new(File::open(&packed)?))?;
    assert_eq!(back, bs);
    println!("{}: {} bits, mean {:+.4}", packed.display(), back.len(), back.mean());

    let text = dir.join("tone_head.txt");
    let head = BitStream::from_bits(bs.f_ck, bs.scale, bs.seed, bs.iter().take(64));
    head.write_text(BufWriter::new(File::create(&text)?))?;
    println!("{}: first 64 bits as text", text.display());

    let settings = ResolutionSettings::default();
    let m = band_metrics(&band_spectrum(&bs, &settings)?, Some(16.0), &settings)?;
    println!("resolution {:.3} mg, tone {:.3} g rms", m.rms_noise * 1e3, m.signal_rms);

    // Streaming: the stream never sits in memory.
    let long = ModulatorConfig { duration: 20.0, ..cfg.clone() };
    let path = dir.join("long.tsdb");
    let mut w = PackedWriter::new(BufWriter::new(File::create(&path)?), long.f_ck, long.full_scale, long.n_samples(), long.seed)?;
    let mut err = Ok(());
    let summary = run_streaming(&sensor, &long, &tone, |b| {
        if err.is_ok() {
            err = w.push(b);
        }
    })?;
    err?;
    w.finish()?.flush()?;
    println!("{}: {} bits streamed, mean {:+.2e}", path.display(), summary.n_samples, summary.mean());

    // A constant record behaves exactly like the DC input.
    let record = SampledInput::new(vec![0.0, 1.0], vec![0.5, 0.5])?;
    let short = ModulatorConfig { duration: 0.5, ..cfg };
    let a = simulate(&sensor, &short, &Input::Samples(record))?;
    let b = simulate(&sensor, &short, &Input::Dc(0.5))?;
    println!("sampled constant == dc: {}, mean {:.4} g", a == b, a.mean() * a.scale);
    Ok(())
}
