//! `ultrainject`: run modulation, capture, analysis and defense
//! experiments from the command line. All frequencies are in Hz.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "ultrainject", version, about = "Ultrasonic voice-injection simulator and defense toolkit")]
pub struct Cli {
    /// Experiment config (TOML); flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Seed for every random draw (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default, Clone)]
pub struct ModArgs {
    /// Carrier frequency.
    #[arg(long, value_name = "HZ")]
    pub fc: Option<f64>,
    /// Modulation depth m in [0, 1].
    #[arg(long)]
    pub depth: Option<f64>,
    /// Carrier amplitude A_c in (0, 1].
    #[arg(long, value_name = "A")]
    pub carrier_amplitude: Option<f64>,
    /// Baseband bandwidth w.
    #[arg(long, value_name = "HZ")]
    pub bandwidth: Option<f64>,
    /// Refuse carriers whose lower sideband reaches 20 kHz.
    #[arg(long)]
    pub inaudible: bool,
}

#[derive(Args, Debug, Default, Clone)]
pub struct MicArgs {
    /// Built-in profile (flat, selective, weak) or a microphone TOML file.
    #[arg(long, value_name = "PROFILE|FILE")]
    pub mic: Option<String>,
    /// Quadratic gain B.
    #[arg(long, value_name = "B")]
    pub quadratic_gain: Option<f64>,
    /// Linear gain A.
    #[arg(long, value_name = "A")]
    pub linear_gain: Option<f64>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct ChannelArgs {
    /// Background scene: office, cafe or street.
    #[arg(long)]
    pub scene: Option<String>,
    /// Background noise level in dB SPL (overrides --scene).
    #[arg(long, value_name = "DB")]
    pub noise_spl: Option<f64>,
    /// Source-to-microphone distance in metres.
    #[arg(long, value_name = "M")]
    pub distance: Option<f64>,
    /// Calibrate the source to this level at the reference distance.
    #[arg(long, value_name = "DB")]
    pub source_spl: Option<f64>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct MfccArgs {
    #[arg(long)]
    pub n_coeffs: Option<usize>,
    #[arg(long)]
    pub n_mels: Option<usize>,
    /// Frame length in seconds.
    #[arg(long, value_name = "S")]
    pub frame_len: Option<f64>,
    /// Hop in seconds.
    #[arg(long, value_name = "S")]
    pub hop: Option<f64>,
    /// Upper filterbank edge.
    #[arg(long, value_name = "HZ")]
    pub fmax: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct ToneArgs {
    /// Tone baseband frequency.
    #[arg(long, value_name = "HZ")]
    pub tone: Option<f64>,
    /// Tone duration in seconds.
    #[arg(long, value_name = "S")]
    pub duration: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// AM-modulate a voice onto an ultrasonic carrier.
    Modulate {
        #[arg(long = "in", value_name = "WAV")]
        input: Option<PathBuf>,
        #[arg(long, default_value = "modulated.wav")]
        out: PathBuf,
        /// Transmitter sample rate.
        #[arg(long, value_name = "HZ", default_value_t = 192_000)]
        rate: u32,
        #[command(flatten)]
        modulation: ModArgs,
    },
    /// Pass an incident waveform through a microphone model.
    Capture {
        #[arg(long = "in", value_name = "WAV")]
        input: PathBuf,
        #[arg(long, default_value = "captured.wav")]
        out: PathBuf,
        #[command(flatten)]
        mic: MicArgs,
    },
    /// Modulate, propagate and capture in one go.
    Simulate {
        #[arg(long = "in", value_name = "WAV")]
        input: Option<PathBuf>,
        #[arg(long, default_value = "captured.wav")]
        out: PathBuf,
        /// Where to write the captured spectrum.
        #[arg(long, default_value = "spectrum.csv")]
        spectrum: PathBuf,
        #[command(flatten)]
        modulation: ModArgs,
        #[command(flatten)]
        mic: MicArgs,
        #[command(flatten)]
        channel: ChannelArgs,
    },
    /// Magnitude spectrum of a WAV file as CSV.
    Spectrum {
        #[arg(long = "in", value_name = "WAV")]
        input: PathBuf,
        #[arg(long, default_value = "spectrum.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = 8192)]
        fft: usize,
        /// hann or rect.
        #[arg(long, default_value = "hann")]
        window: String,
        /// Single transform of the first `fft` samples instead of Welch averaging.
        #[arg(long)]
        single: bool,
    },
    /// Sweep the carrier frequency with a tone baseband.
    SweepFc {
        /// start:stop:step in Hz.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        #[command(flatten)]
        tone: ToneArgs,
        #[command(flatten)]
        modulation: ModArgs,
        #[command(flatten)]
        mic: MicArgs,
    },
    /// Sweep the modulation depth at a fixed carrier.
    SweepDepth {
        /// start:stop:step.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        #[command(flatten)]
        tone: ToneArgs,
        #[command(flatten)]
        modulation: ModArgs,
        #[command(flatten)]
        mic: MicArgs,
    },
    /// Mel-cepstral distortion between a reference and a test recording.
    Mcd {
        #[arg(long, value_name = "WAV")]
        reference: PathBuf,
        #[arg(long, value_name = "WAV")]
        test: PathBuf,
        /// Also write both MFCC matrices as `<prefix>_reference.csv` and `<prefix>_test.csv`.
        #[arg(long, value_name = "PREFIX")]
        mfcc_out: Option<PathBuf>,
        #[command(flatten)]
        mfcc: MfccArgs,
    },
    /// Extract the detector's features.
    Features {
        /// WAV files, labelled "unknown".
        #[arg(long = "in", value_name = "WAV", num_args = 1..)]
        inputs: Vec<PathBuf>,
        /// A `path,label` manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value = "features.csv")]
        out: PathBuf,
    },
    /// Train the detector on a labelled manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "model.toml")]
        out: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Features to leave out, comma separated.
        #[arg(long, value_delimiter = ',')]
        exclude: Option<Vec<String>>,
    },
    /// Label recordings as genuine or attack.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in", value_name = "WAV", num_args = 1..)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Per-file results as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remove injected baseband from a wideband (pre-ADC) recording.
    Cancel {
        #[arg(long = "in", value_name = "WAV")]
        input: PathBuf,
        #[arg(long, default_value = "cancelled.wav")]
        out: PathBuf,
        /// Carrier search band lo:hi in Hz.
        #[arg(long)]
        band: Option<String>,
        #[arg(long, value_name = "DB")]
        prominence_db: Option<f64>,
    },
    /// Write a synthetic voice command.
    SynthVoice {
        #[arg(long, default_value = "voice.wav")]
        out: PathBuf,
        /// A random syllable string instead of the bundled command.
        #[arg(long)]
        random: bool,
    },
    /// Generate a labelled genuine/attack corpus with a manifest.
    Corpus {
        #[arg(long, default_value = "corpus")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 50)]
        genuine: usize,
        #[arg(long, default_value_t = 50)]
        attack: usize,
        #[command(flatten)]
        modulation: ModArgs,
        #[command(flatten)]
        mic: MicArgs,
        #[command(flatten)]
        channel: ChannelArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
