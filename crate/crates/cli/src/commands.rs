use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ultrainject::analysis::{mfcc, parse_grid, sweep_carrier, sweep_depth, waveform_mcd, ToneBaseband};
use ultrainject::defense::{
    cancel_injection, classify, extract_features, generate_corpus, read_manifest, train_classifier,
    write_features_csv, ClassifierModel, CorpusConfig, FeatureVector, Label, Script,
};
use ultrainject::mic::{ChannelModel, MicProfile, MicrophoneModel, Scene};
use ultrainject::modulation::{am_modulate, check_inaudibility, ModulationParams};
use ultrainject::pipeline::inject;
use ultrainject::signal::{load_wav, resample, spectrum, welch, Spectrum, Waveform, Window, ULTRASONIC_RATE};
use ultrainject::voice::{random_command, synthesize, BUNDLED_COMMAND};
use ultrainject::Error;

use crate::config::{load_mic_file, ExperimentConfig, MicSetting};
use crate::output::{Staged, Summary};
use crate::{ChannelArgs, Cli, Command, MfccArgs, MicArgs, ModArgs, ToneArgs};

const SPECTRUM_FFT: usize = 8192;

pub fn run(cli: Cli) -> Result<String> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let summary = match cli.command {
        Command::Modulate { input, out, rate, modulation } => {
            let p = modulation_params(&mut cfg, &modulation)?;
            let voice = load(required(input, "--in")?.as_path())?;
            let tx = am_modulate(&voice, &p, rate)?;
            let mut staged = Staged::default();
            staged.wav(&out, &tx)?;
            staged.commit()?;
            let mut s = Summary::new("modulate");
            s.path("out", &out)
                .push("rate", rate)
                .push("samples", tx.len())
                .push("fc", p.carrier_hz)
                .push("depth", p.depth)
                .push("lowest_hz", check_inaudibility(&p).lowest_freq);
            s
        }
        Command::Capture { input, out, mic } => {
            let mic = microphone(&mut cfg, &mic)?;
            let incident = load(&input)?;
            let captured = mic.capture(&incident, cfg.seed)?;
            let mut staged = Staged::default();
            staged.wav(&out, &captured)?;
            staged.commit()?;
            let mut s = Summary::new("capture");
            s.path("out", &out).push("rate", captured.sample_rate()).push("samples", captured.len());
            s
        }
        Command::Simulate { input, out, spectrum: spec_out, modulation, mic, channel } => {
            let p = modulation_params(&mut cfg, &modulation)?;
            let mic = microphone(&mut cfg, &mic)?;
            let channel = channel_model(&mut cfg, &channel)?;
            let voice = load(required(input, "--in")?.as_path())?;
            let captured = inject(&voice, &p, &channel, &mic, cfg.seed)?;
            let spec = welch(&captured, Window::Hann, SPECTRUM_FFT)?;
            let mut csv = Vec::new();
            spec.write_csv(&mut csv)?;
            let mut staged = Staged::default();
            staged.wav(&out, &captured)?;
            staged.bytes(&spec_out, &csv)?;
            staged.commit()?;
            let mut s = Summary::new("simulate");
            s.path("out", &out)
                .path("spectrum", &spec_out)
                .push("rate", captured.sample_rate())
                .push("samples", captured.len())
                .push("fc", p.carrier_hz)
                .push("depth", p.depth)
                .push("peak_hz", audible_peak(&spec))
                .push("rms_dbfs", format!("{:.2}", 20.0 * captured.rms().max(1e-12).log10()));
            s
        }
        Command::Spectrum { input, out, fft, window, single } => {
            let wave = load(&input)?;
            let window: Window = window.parse()?;
            let spec = if single { spectrum(&wave, window, fft)? } else { welch(&wave, window, fft)? };
            let mut csv = Vec::new();
            spec.write_csv(&mut csv)?;
            let mut staged = Staged::default();
            staged.bytes(&out, &csv)?;
            staged.commit()?;
            let mut s = Summary::new("spectrum");
            s.path("out", &out)
                .push("bins", spec.magnitudes().len())
                .push("resolution_hz", spec.resolution())
                .push("peak_hz", audible_peak(&spec));
            s
        }
        Command::SweepFc { grid, out, tone, modulation, mic } => {
            let template = sweep_template(&mut cfg, &modulation)?;
            let mic = microphone(&mut cfg, &mic)?;
            let grid = parse_grid(grid.as_deref().unwrap_or(&cfg.sweep.fc_grid))?;
            let baseband = tone_baseband(&cfg, &tone)?;
            let report = sweep_carrier(&baseband, &mic, &grid, &template, cfg.seed)?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            let mut staged = Staged::default();
            staged.bytes(&out, &csv)?;
            staged.commit()?;
            let mut s = Summary::new("sweep-fc");
            s.path("out", &out)
                .push("points", report.points.len())
                .push("skipped", report.skipped.len())
                .push("feasible", report.feasible_set().len());
            match report.prime_fc {
                Some(p) => s.push("prime_fc", p.hz).push("degraded", p.degraded),
                None => s.push("prime_fc", "none"),
            };
            s
        }
        Command::SweepDepth { grid, out, tone, modulation, mic } => {
            let template = sweep_template(&mut cfg, &modulation)?;
            let mic = microphone(&mut cfg, &mic)?;
            let grid = parse_grid(grid.as_deref().unwrap_or(&cfg.sweep.depth_grid))?;
            let baseband = tone_baseband(&cfg, &tone)?;
            let report = sweep_depth(&baseband, &mic, &grid, &template, cfg.seed)?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            let mut staged = Staged::default();
            staged.bytes(&out, &csv)?;
            staged.commit()?;
            let feasible = report.feasible_set();
            let mut s = Summary::new("sweep-depth");
            s.path("out", &out).push("points", report.points.len()).push("feasible", feasible.len());
            match feasible.first() {
                Some(m) => s.push("min_feasible_depth", m),
                None => s.push("min_feasible_depth", "none"),
            };
            s
        }
        Command::Mcd { reference, test, mfcc_out, mfcc: args } => {
            apply_mfcc(&mut cfg, &args);
            cfg.mfcc.validate()?;
            let (r, t) = (load(&reference)?, load(&test)?);
            let d = waveform_mcd(&r, &t, &cfg.mfcc)?;
            let mut s = Summary::new("mcd");
            s.push("mcd_db", format!("{d:.4}"));
            if let Some(prefix) = mfcc_out {
                let t = if t.sample_rate() == r.sample_rate() { t } else { resample(&t, r.sample_rate())? };
                let mut staged = Staged::default();
                for (tag, w) in [("reference", &r), ("test", &t)] {
                    let mut csv = Vec::new();
                    mfcc(w, &cfg.mfcc)?.write_csv(&mut csv)?;
                    let path = with_suffix(&prefix, tag);
                    staged.bytes(&path, &csv)?;
                    s.path(&format!("mfcc_{tag}"), &path);
                }
                staged.commit()?;
            }
            s
        }
        Command::Features { inputs, manifest, out } => {
            let items = labelled_inputs(inputs, manifest.as_deref())?;
            let mut rows = Vec::new();
            for (path, label) in &items {
                let f = features_of(path)?;
                rows.push((path.display().to_string(), label.clone(), f));
            }
            let mut csv = Vec::new();
            write_features_csv(&rows, &mut csv)?;
            let mut staged = Staged::default();
            staged.bytes(&out, &csv)?;
            staged.commit()?;
            let mut s = Summary::new("features");
            s.path("out", &out).push("files", rows.len());
            s
        }
        Command::Train { manifest, out, lambda, iterations, exclude } => {
            if let Some(l) = lambda {
                cfg.train.lambda = l;
            }
            if let Some(i) = iterations {
                cfg.train.iterations = i;
            }
            if let Some(e) = exclude {
                cfg.train.exclude = e;
            }
            let (mut genuine, mut attack) = (Vec::new(), Vec::new());
            for (path, label) in read_manifest(&manifest)? {
                let f = features_of(&path)?;
                match label {
                    Label::Genuine => genuine.push(f),
                    Label::Attack => attack.push(f),
                }
            }
            let model = train_classifier(&genuine, &attack, &cfg.train_config())?;
            let mut staged = Staged::default();
            staged.bytes(&out, model.to_toml_string().as_bytes())?;
            staged.commit()?;
            let mut s = Summary::new("train");
            s.path("out", &out)
                .push("genuine", genuine.len())
                .push("attack", attack.len())
                .push("training_accuracy", model.training_accuracy)
                .push("dropped", if model.dropped.is_empty() { "none".into() } else { model.dropped.join(",") });
            s
        }
        Command::Classify { model, inputs, manifest, out } => {
            let model = ClassifierModel::load(&model).with_context(|| format!("loading model {}", model.display()))?;
            let items = labelled_inputs(inputs, manifest.as_deref())?;
            let mut rows = Vec::new();
            let (mut n_genuine, mut correct, mut known) = (0, 0, 0);
            for (path, expected) in &items {
                let c = classify(&model, &features_of(path)?)?;
                n_genuine += (c.label == Label::Genuine) as usize;
                if let Ok(e) = expected.parse::<Label>() {
                    known += 1;
                    correct += (e == c.label) as usize;
                }
                rows.push(format!("{},{},{},{}", path.display(), expected, c.label.as_str(), c.score));
            }
            if let Some(out) = &out {
                let mut text = String::from("path,expected,label,score\n");
                for r in &rows {
                    text.push_str(r);
                    text.push('\n');
                }
                let mut staged = Staged::default();
                staged.bytes(out, text.as_bytes())?;
                staged.commit()?;
            }
            let mut s = Summary::new("classify");
            s.push("files", items.len()).push("genuine", n_genuine).push("attack", items.len() - n_genuine);
            if known > 0 {
                s.push("accuracy", correct as f64 / known as f64);
            }
            if items.len() == 1 {
                let only = &rows[0];
                let mut parts = only.rsplitn(3, ',');
                let score = parts.next().unwrap_or_default().to_string();
                let label = parts.next().unwrap_or_default().to_string();
                s.push("label", label).push("score", score);
            }
            if let Some(out) = &out {
                s.path("out", out);
            }
            s
        }
        Command::Cancel { input, out, band, prominence_db } => {
            if let Some(b) = band {
                let (lo, hi) = parse_band(&b)?;
                cfg.cancel.band_lo_hz = lo;
                cfg.cancel.band_hi_hz = Some(hi);
            }
            if let Some(p) = prominence_db {
                cfg.cancel.prominence_db = p;
            }
            let wide = load(&input)?;
            let result = cancel_injection(&wide, &cfg.cancel)?;
            let mut staged = Staged::default();
            staged.wav(&out, &result.output)?;
            staged.commit()?;
            let mut s = Summary::new("cancel");
            s.path("out", &out);
            match result.carrier {
                Some(c) => s
                    .push("carrier_hz", format!("{:.3}", c.freq_hz))
                    .push("prominence_db", format!("{:.2}", c.prominence_db))
                    .push("alpha", format!("{:.6}", result.alpha)),
                None => s.push("carrier_hz", "none"),
            };
            s
        }
        Command::SynthVoice { out, random } => {
            let utt = if random { random_command(cfg.seed)? } else { synthesize(BUNDLED_COMMAND, cfg.seed)? };
            let mut staged = Staged::default();
            staged.wav(&out, &utt.wave)?;
            staged.commit()?;
            let mut s = Summary::new("synth-voice");
            s.path("out", &out)
                .push("rate", utt.wave.sample_rate())
                .push("duration_s", format!("{:.3}", utt.wave.duration()))
                .push("syllables", utt.segments.len());
            s
        }
        Command::Corpus { out_dir, genuine, attack, modulation, mic, channel } => {
            let params = modulation_params(&mut cfg, &modulation)?;
            let mic = microphone(&mut cfg, &mic)?;
            let channel = channel_model(&mut cfg, &channel)?;
            let clips = generate_corpus(&CorpusConfig {
                script: Script::Bundled,
                genuine,
                attack,
                seed: cfg.seed,
                params,
                channel,
                mic,
            })?;
            std::fs::create_dir_all(&out_dir)?;
            let mut staged = Staged::default();
            let mut manifest = String::from("path,label\n");
            for c in &clips {
                let name = format!("{}_{:03}.wav", c.label.as_str(), c.index);
                staged.wav(&out_dir.join(&name), &c.wave)?;
                manifest.push_str(&format!("{name},{}\n", c.label.as_str()));
            }
            let manifest_path = out_dir.join("manifest.csv");
            staged.bytes(&manifest_path, manifest.as_bytes())?;
            staged.commit()?;
            let mut s = Summary::new("corpus");
            s.path("manifest", &manifest_path).push("genuine", genuine).push("attack", attack);
            s
        }
    };
    Ok(summary.line())
}

/// Frequency of the strongest bin at or above 20 Hz; the square law leaves
/// a DC offset that would otherwise always win.
fn audible_peak(spec: &Spectrum) -> f64 {
    let (f, m) = (spec.bin_freqs(), spec.magnitudes());
    (0..m.len())
        .filter(|&k| f[k] >= 20.0)
        .max_by(|&a, &b| m[a].total_cmp(&m[b]).then(b.cmp(&a)))
        .map_or(0.0, |k| f[k])
}

fn required(p: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    p.ok_or_else(|| anyhow!("missing required {flag} <WAV>"))
}

fn load(path: &Path) -> Result<Waveform> {
    let loaded = load_wav(path)?;
    for w in &loaded.warnings {
        eprintln!("warning: {}: {w}", path.display());
    }
    Ok(loaded.wave)
}

fn features_of(path: &Path) -> Result<FeatureVector> {
    extract_features(&load(path)?).with_context(|| format!("features of {}", path.display()))
}

fn labelled_inputs(inputs: Vec<PathBuf>, manifest: Option<&Path>) -> Result<Vec<(PathBuf, String)>> {
    let mut items: Vec<(PathBuf, String)> = inputs.into_iter().map(|p| (p, "unknown".into())).collect();
    if let Some(m) = manifest {
        items.extend(read_manifest(m)?.into_iter().map(|(p, l)| (p, l.as_str().to_string())));
    }
    if items.is_empty() {
        bail!("no inputs: give --in <WAV>... or --manifest <CSV>");
    }
    Ok(items)
}

/// Config values, then flags, then the parameter rules, including the
/// 20 kHz rule when `inaudible` is set.
fn modulation_params(cfg: &mut ExperimentConfig, args: &ModArgs) -> Result<ModulationParams> {
    let p = &mut cfg.modulation;
    if let Some(v) = args.fc {
        p.carrier_hz = v;
    }
    if let Some(v) = args.depth {
        p.depth = v;
    }
    if let Some(v) = args.carrier_amplitude {
        p.carrier_amplitude = v;
    }
    if let Some(v) = args.bandwidth {
        p.bandwidth_hz = v;
    }
    p.inaudible |= args.inaudible;
    p.validate()?;
    if p.inaudible {
        let report = check_inaudibility(p);
        if !report.ok {
            return Err(Error::Audible {
                carrier: p.carrier_hz,
                bandwidth: p.bandwidth_hz,
                lowest: report.lowest_freq,
            }
            .into());
        }
    }
    if !(ULTRASONIC_RATE as f64 > p.min_output_rate()) {
        return Err(Error::SamplingRate {
            required: p.min_output_rate(),
            rate: ULTRASONIC_RATE,
        }
        .into());
    }
    Ok(*p)
}

/// Sweeps pick their own carrier or depth and bandwidth, so only the
/// amplitude-related fields matter here.
fn sweep_template(cfg: &mut ExperimentConfig, args: &ModArgs) -> Result<ModulationParams> {
    if args.inaudible {
        bail!("--inaudible does not apply to sweeps: audible carriers are always skipped");
    }
    let p = &mut cfg.modulation;
    if let Some(v) = args.fc {
        p.carrier_hz = v;
    }
    if let Some(v) = args.depth {
        p.depth = v;
    }
    if let Some(v) = args.carrier_amplitude {
        p.carrier_amplitude = v;
    }
    if args.bandwidth.is_some() {
        bail!("--bandwidth does not apply to sweeps: w is the tone frequency");
    }
    Ok(*p)
}

fn tone_baseband(cfg: &ExperimentConfig, args: &ToneArgs) -> Result<ToneBaseband> {
    let freq = args.tone.unwrap_or(cfg.sweep.tone_hz);
    let duration = args.duration.unwrap_or(cfg.sweep.tone_duration_s);
    Ok(ToneBaseband::new(freq, duration, ULTRASONIC_RATE)?)
}

fn microphone(cfg: &mut ExperimentConfig, args: &MicArgs) -> Result<MicrophoneModel> {
    if let Some(m) = &args.mic {
        cfg.mic = if m.parse::<MicProfile>().is_ok() {
            MicSetting::Named(m.clone())
        } else {
            MicSetting::Inline(load_mic_file(Path::new(m))?)
        };
    }
    let mut mic = cfg.microphone()?;
    if let Some(b) = args.quadratic_gain {
        mic.gain_quadratic = b;
    }
    if let Some(a) = args.linear_gain {
        mic.gain_linear = a;
    }
    mic.validate()?;
    Ok(mic)
}

fn channel_model(cfg: &mut ExperimentConfig, args: &ChannelArgs) -> Result<ChannelModel> {
    let c = &mut cfg.channel;
    if let Some(s) = &args.scene {
        c.scene_noise_spl_db = s.parse::<Scene>()?.noise_spl_db();
    }
    if let Some(v) = args.noise_spl {
        c.scene_noise_spl_db = v;
    }
    if let Some(v) = args.distance {
        c.distance_m = v;
    }
    if let Some(v) = args.source_spl {
        c.source_spl_db = Some(v);
    }
    c.validate()?;
    Ok(*c)
}

fn apply_mfcc(cfg: &mut ExperimentConfig, args: &MfccArgs) {
    let m = &mut cfg.mfcc;
    if let Some(v) = args.n_coeffs {
        m.n_coeffs = v;
    }
    if let Some(v) = args.n_mels {
        m.n_mel_filters = v;
    }
    if let Some(v) = args.frame_len {
        m.frame_len = v;
    }
    if let Some(v) = args.hop {
        m.hop = v;
    }
    if args.fmax.is_some() {
        m.fmax = args.fmax;
    }
}

fn parse_band(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| anyhow!("band '{s}' must be lo:hi in Hz"))?;
    let lo: f64 = lo.trim().parse().with_context(|| format!("band lower edge '{lo}'"))?;
    let hi: f64 = hi.trim().parse().with_context(|| format!("band upper edge '{hi}'"))?;
    if !(lo >= 0.0 && hi > lo) {
        bail!("band {lo}:{hi} must satisfy 0 ≤ lo < hi");
    }
    Ok((lo, hi))
}

fn with_suffix(prefix: &Path, tag: &str) -> PathBuf {
    let name = prefix.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    prefix.with_file_name(format!("{name}_{tag}.csv"))
}
