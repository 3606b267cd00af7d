//! The guide under `book/`, compiled so its listings stay in sync with
//! the library. Build the rendered book with `mdbook build book`.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        pub mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(waveforms, "waveforms.md");
chapter!(modulation, "modulation.md");
chapter!(microphone, "microphone.md");
chapter!(sweeps, "sweeps.md");
chapter!(voice, "voice.md");
chapter!(detection, "detection.md");
chapter!(cancellation, "cancellation.md");
chapter!(cli, "cli.md");
