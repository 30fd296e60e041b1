//! Synthetic corpus of "virtual producers".
//!
//! Each producer has a characteristic mix: per-band level (spectral tilt),
//! per-band stereo width and overall loudness. A song is band-limited noise
//! built from a mid and a side component per band,
//! `L = g (mid + w side)`, `R = g (mid - w side)`, so the band's channel
//! correlation is `(1 - w^2) / (1 + w^2)`: near-mono for small `w`,
//! decorrelated at `w = 1` and anti-phase-leaning above. A shared beat
//! envelope and per-song jitter of every parameter keep songs distinct.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use soundprofile_core::corpus::{encode_wav, Role, StereoSignal};
use soundprofile_core::dsp::{apply_filter, design_bandpass};

use crate::args::SynthArgs;
use crate::error::{CliError, CliResult};

/// Source bands, each inside one analysis band.
const BANDS: [(f64, f64); 3] = [(30.0, 140.0), (200.0, 1800.0), (2500.0, 9000.0)];
const MAX_PRODUCERS: usize = 6;
const JITTER: f64 = 0.12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub gains: [f64; 3],
    pub widths: [f64; 3],
    /// Target RMS of each channel before peak limiting.
    pub level: f64,
}

/// Archetypes: mono and dark; wide and bright; mono bass with phasey mids
/// and highs; flat and quiet; loud mid-heavy; wide lows and highs.
pub const PROFILES: [Profile; MAX_PRODUCERS] = [
    Profile {
        gains: [1.0, 0.45, 0.12],
        widths: [0.05, 0.1, 0.15],
        level: 0.16,
    },
    Profile {
        gains: [0.35, 0.7, 0.9],
        widths: [0.5, 0.8, 1.0],
        level: 0.08,
    },
    Profile {
        gains: [0.6, 1.0, 0.3],
        widths: [0.15, 1.8, 2.8],
        level: 0.12,
    },
    Profile {
        gains: [0.8, 0.8, 0.8],
        widths: [0.3, 0.3, 0.3],
        level: 0.05,
    },
    Profile {
        gains: [0.2, 1.0, 0.2],
        widths: [0.0, 0.5, 0.0],
        level: 0.2,
    },
    Profile {
        gains: [1.0, 0.2, 0.6],
        widths: [1.2, 0.1, 1.2],
        level: 0.1,
    },
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSong {
    pub id: String,
    pub performer: String,
    pub producer: String,
    pub role: Role,
    pub group: String,
    pub seed: u64,
    pub profile: usize,
}

/// Song list: `train` producer-train songs and `heldout` collaborations with
/// rapper "MC <p>" for every producer `p`.
pub fn plan(
    producers: usize,
    train: usize,
    heldout: usize,
    seed: u64,
) -> CliResult<Vec<SynthSong>> {
    if producers == 0 || producers > MAX_PRODUCERS {
        return Err(CliError::Usage(format!(
            "--producers must be between 1 and {MAX_PRODUCERS}"
        )));
    }
    if train == 0 {
        return Err(CliError::Usage("--train must be at least 1".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut songs = Vec::new();
    for p in 0..producers {
        let group = format!("p{}", p + 1);
        let producer = format!("Producer {}", p + 1);
        for i in 0..train + heldout {
            let training = i < train;
            songs.push(SynthSong {
                id: if training {
                    format!("{group}_train_{:02}", i + 1)
                } else {
                    format!("{group}_collab_{:02}", i - train + 1)
                },
                performer: if training {
                    format!("Artist {}{:02}", p + 1, i + 1)
                } else {
                    format!("MC {}", p + 1)
                },
                producer: producer.clone(),
                role: if training {
                    Role::ProducerTrain
                } else {
                    Role::RapperCollab
                },
                group: group.clone(),
                seed: master.gen(),
                profile: p,
            });
        }
    }
    Ok(songs)
}

fn unit_rms(mut x: Vec<f64>) -> Vec<f64> {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v /= rms);
    }
    x
}

/// Renders one song.
pub fn render(profile: &Profile, seed: u64, seconds: f64, rate: u32) -> CliResult<StereoSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seconds * f64::from(rate)).round() as usize;
    if n < 2 {
        return Err(CliError::Usage("--seconds too short".into()));
    }
    let fs = f64::from(rate);
    let mut jitter = |v: f64| v * rng.gen_range(1.0 - JITTER..1.0 + JITTER);
    let gains = profile.gains.map(&mut jitter);
    let widths = profile.widths.map(&mut jitter);
    let level = jitter(profile.level);

    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    for (b, &(lo, hi)) in BANDS.iter().enumerate() {
        let hi = hi.min(0.45 * fs);
        let spec = design_bandpass(lo, hi, fs, 4).map_err(|e| CliError::Internal(e.to_string()))?;
        let mut noise = || -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let mid = unit_rms(apply_filter(&spec, &noise()));
        let side = unit_rms(apply_filter(&spec, &noise()));
        for i in 0..n {
            left[i] += gains[b] * (mid[i] + widths[b] * side[i]);
            right[i] += gains[b] * (mid[i] - widths[b] * side[i]);
        }
    }

    let tempo = rng.gen_range(80.0..100.0);
    let beat = 60.0 / tempo;
    let phase = rng.gen_range(0.0..beat);
    for i in 0..n {
        let t = (i as f64 / fs + phase) % beat;
        let env =
            0.55 + 0.45 * (-t / (0.25 * beat)).exp() * (0.5 + 0.5 * (2.0 * PI * t / beat).cos());
        left[i] *= env;
        right[i] *= env;
    }

    let rms = ((left.iter().chain(&right).map(|v| v * v).sum::<f64>()) / (2 * n) as f64).sqrt();
    let mut scale = if rms > 0.0 { level / rms } else { 0.0 };
    let peak = left
        .iter()
        .chain(&right)
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if peak * scale > 0.98 {
        scale = 0.98 / peak;
    }
    left.iter_mut()
        .chain(right.iter_mut())
        .for_each(|v| *v *= scale);
    StereoSignal::new(left, right, rate).map_err(|e| CliError::Internal(e.to_string()))
}

/// Writes `audio/<id>.wav` (16-bit) for every song and `manifest.csv`.
pub fn write_corpus(out: &Path, songs: &[SynthSong], seconds: f64, rate: u32) -> CliResult<()> {
    let audio = out.join("audio");
    std::fs::create_dir_all(&audio).map_err(|e| CliError::write(&audio, e))?;
    songs.par_iter().try_for_each(|s| -> CliResult<()> {
        let signal = render(&PROFILES[s.profile], s.seed, seconds, rate)?;
        let path = audio.join(format!("{}.wav", s.id));
        encode_wav(&path, &signal, 16).map_err(|e| CliError::write(&path, e))
    })?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(e.to_string());
    w.write_record(["id", "path", "performer", "producer", "role", "group"])
        .map_err(internal)?;
    for s in songs {
        let path = format!("audio/{}.wav", s.id);
        w.write_record([
            &s.id,
            &path,
            &s.performer,
            &s.producer,
            s.role.as_str(),
            &s.group,
        ])
        .map_err(internal)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let manifest = out.join("manifest.csv");
    std::fs::write(&manifest, bytes).map_err(|e| CliError::write(&manifest, e))
}

pub fn cmd_synth(args: &SynthArgs, seed: u64) -> CliResult<()> {
    if !(args.seconds > 0.0 && args.seconds.is_finite()) {
        return Err(CliError::Usage("--seconds must be positive".into()));
    }
    if !(soundprofile_core::corpus::MIN_SAMPLE_RATE..=soundprofile_core::corpus::MAX_SAMPLE_RATE)
        .contains(&args.rate)
    {
        return Err(CliError::Usage(format!(
            "--rate {} is outside the supported range",
            args.rate
        )));
    }
    let songs = plan(args.producers, args.train, args.heldout, seed)?;
    write_corpus(&args.out.out, &songs, args.seconds, args.rate)?;
    eprintln!(
        "wrote {} songs and {}",
        songs.len(),
        args.out.out.join("manifest.csv").display()
    );
    Ok(())
}
