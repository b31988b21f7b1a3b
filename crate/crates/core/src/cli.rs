//! The `easyvoice` command line.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 when a pipeline
//! stage fails; the failing stage is named on standard error.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::phonemes::PhonemeInventory;
use crate::predict::{builtin_portuguese, load_dictionary, DEFAULT_K};
use crate::rules::{parse_rules, RuleSet};
use crate::service::persist::{self, profile_dir, SETTINGS_FILE};
use crate::service::pipeline::{Pipeline, PORTUGUESE_RULES};
use crate::service::settings::DEFAULT_PORT;
use crate::service::{http, Service};
use crate::textprep::AbbreviationTable;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PIPELINE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "easyvoice", version, about = "Portuguese text-to-speech front end")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize text to .pho and WAV.
    Speak(SpeakArgs),
    /// Show how the rules rewrite a text.
    Rewrite(RewriteArgs),
    /// List dictionary words starting with a prefix.
    Predict(PredictArgs),
    /// Run the local HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct TextInput {
    /// Text to process; standard input is read when neither this nor --file is given.
    #[arg(long, conflicts_with = "file")]
    text: Option<String>,
    /// Read the text from a file.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpeakArgs {
    #[command(flatten)]
    input: TextInput,
    /// Rule file; the shipped Portuguese rules by default.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Phoneme inventory; the shipped Portuguese table by default.
    #[arg(long)]
    inventory: Option<PathBuf>,
    /// Abbreviation table (abbrev<TAB>expansion lines).
    #[arg(long)]
    abbreviations: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the .pho; printed to standard output when neither
    /// this nor --out-wav is given.
    #[arg(long)]
    out_pho: Option<PathBuf>,
    #[arg(long)]
    out_wav: Option<PathBuf>,
    /// Also send the audio to this cable on a running service.
    #[arg(long, value_name = "CABLE")]
    publish: Option<String>,
    /// Port of the running service, for --publish.
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
}

#[derive(Debug, Args)]
struct RewriteArgs {
    #[command(flatten)]
    input: TextInput,
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Print every rule firing, one per line.
    #[arg(long)]
    trace: bool,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long, default_value = "")]
    prefix: String,
    /// Word list (word or word<TAB>count per line); the shipped list by default.
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(short, default_value_t = DEFAULT_K)]
    k: usize,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Settings file; defaults to settings.toml in $EASYVOICE_HOME (~/.easyvoice).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
}

/// A failed stage and why.
#[derive(Debug)]
struct Failure {
    stage: String,
    message: String,
}

fn fail(stage: &str, message: impl std::fmt::Display) -> Failure {
    Failure {
        stage: stage.to_owned(),
        message: message.to_string(),
    }
}

type Outcome = Result<(), Failure>;

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Speak(a) => speak(a, stdin, stdout),
        Command::Rewrite(a) => rewrite(a, stdin, stdout),
        Command::Predict(a) => predict(a, stdout),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {} stage failed: {}", f.stage, f.message);
            EXIT_PIPELINE
        }
    }
}

fn read_file(path: &Path, stage: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| fail(stage, format!("cannot read {}: {e}", path.display())))
}

fn read_text(input: &TextInput, stdin: &mut dyn Read) -> Result<String, Failure> {
    match (&input.text, &input.file) {
        (Some(t), _) => Ok(t.clone()),
        (None, Some(p)) => read_file(p, "input"),
        (None, None) => {
            let mut s = String::new();
            stdin
                .read_to_string(&mut s)
                .map_err(|e| fail("input", format!("cannot read standard input: {e}")))?;
            Ok(s)
        }
    }
}

fn load_rules(path: Option<&Path>) -> Result<RuleSet, Failure> {
    let source = match path {
        Some(p) => read_file(p, "rules")?,
        None => PORTUGUESE_RULES.to_owned(),
    };
    parse_rules(&source).map_err(|e| fail("rules", e))
}

fn write_out(path: &Path, bytes: &[u8]) -> Outcome {
    std::fs::write(path, bytes).map_err(|e| fail("output", format!("cannot write {}: {e}", path.display())))
}

fn speak(args: SpeakArgs, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Outcome {
    let text = read_text(&args.input, stdin)?;
    let rules = load_rules(args.rules.as_deref())?;
    let inventory = match &args.inventory {
        Some(p) => PhonemeInventory::parse(&read_file(p, "inventory")?).map_err(|e| fail("inventory", e))?,
        None => PhonemeInventory::portuguese(),
    };
    let abbreviations = match &args.abbreviations {
        Some(p) => AbbreviationTable::parse(&read_file(p, "abbreviations")?).map_err(|e| fail("abbreviations", e))?,
        None => AbbreviationTable::new(),
    };
    let pipeline = Pipeline::new(rules, inventory, Default::default(), Default::default());
    let utt = pipeline
        .run(&text, &abbreviations, args.seed)
        .map_err(|e| fail(e.stage.as_str(), e.message))?;

    if let Some(p) = &args.out_pho {
        write_out(p, utt.pho.as_bytes())?;
    }
    if let Some(p) = &args.out_wav {
        write_out(p, &utt.wav)?;
    }
    if args.out_pho.is_none() && args.out_wav.is_none() {
        stdout.write_all(utt.pho.as_bytes()).map_err(|e| fail("output", e))?;
    }
    if let Some(cable) = &args.publish {
        publish(args.port, cable, utt.wav)?;
    }
    Ok(())
}

fn publish(port: u16, cable: &str, wav: Vec<u8>) -> Outcome {
    let url = format!("http://127.0.0.1:{port}/cables/{cable}/publish");
    let response = reqwest::blocking::Client::new()
        .post(&url)
        .header("content-type", "audio/wav")
        .body(wav)
        .send()
        .map_err(|e| fail("publish", format!("cannot reach service at {url}: {e}")))?;
    if !response.status().is_success() {
        let status = response.status();
        let body = response.text().unwrap_or_default();
        return Err(fail("publish", format!("service answered {status}: {body}")));
    }
    Ok(())
}

fn rewrite(args: RewriteArgs, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Outcome {
    let text = read_text(&args.input, stdin)?;
    let rules = load_rules(args.rules.as_deref())?;
    let result = rules.run(&text, args.trace);
    let mut out = String::new();
    if args.trace {
        for firing in &result.trace {
            out.push_str(&firing.to_string());
            out.push('\n');
        }
        out.push_str(&format!("passes={} converged={}\n", result.passes, result.converged));
    }
    out.push_str(&format!("{:?}\n", result.output.text()));
    out.push_str(&result.output.to_string());
    stdout.write_all(out.as_bytes()).map_err(|e| fail("output", e))
}

fn predict(args: PredictArgs, stdout: &mut dyn Write) -> Outcome {
    let dict = match &args.dict {
        Some(p) => load_dictionary(&read_file(p, "dictionary")?).map_err(|e| fail("dictionary", e))?,
        None => builtin_portuguese(),
    };
    let mut out = String::new();
    for w in dict.predict(&args.prefix, args.k) {
        out.push_str(&w);
        out.push('\n');
    }
    stdout.write_all(out.as_bytes()).map_err(|e| fail("output", e))
}

fn serve(args: ServeArgs) -> Outcome {
    let home = std::env::var_os(persist::HOME_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    let config = match args.config {
        Some(c) => c,
        None => profile_dir()
            .ok_or_else(|| fail("settings", "no --config given and no home directory found"))?
            .join(SETTINGS_FILE),
    };
    let data_dir = home
        .or_else(|| config.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let service = Service::open(&config, &data_dir).map_err(|e| fail(e.stage.as_str(), e.message))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| fail("serve", e))?;
    runtime
        .block_on(http::serve(service, args.port))
        .map_err(|e| fail("serve", e))
}
