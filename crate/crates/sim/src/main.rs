use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use fpp_sim::commands::{self, SUBCOMMANDS};
use fpp_sim::config::{parse_file, ConfigError, RunConfig, KEYS, OUT_DIR_ENV};

fn key_args() -> Vec<Arg> {
    let mut args = vec![
        Arg::new("config").long("config").value_name("FILE").help("flat key=value file; explicit flags take precedence"),
        Arg::new("weight")
            .long("weight")
            .value_name("KIND:PARAM")
            .help("shorthand for weight.kind and weight.param, e.g. exp:1, unif:1, 1+exp:2"),
    ];
    for k in KEYS {
        let default = k.default.map_or_else(|| "required".to_string(), |d| if d.is_empty() { "none".into() } else { d.into() });
        args.push(
            Arg::new(k.name)
                .long(k.name)
                .value_name(k.unit.to_uppercase().replace(' ', "_"))
                .help(format!("{} [default: {default}] [unit: {}]", k.help, k.unit)),
        );
    }
    args
}

fn cli() -> Command {
    let mut cmd = Command::new("fpp")
        .about("First-passage percolation on configuration-model random graphs")
        .after_help(format!("The output directory defaults to ${OUT_DIR_ENV} when set.\nExit codes: 0 success, 1 failed assertion, 2 configuration error."))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about) in SUBCOMMANDS {
        cmd = cmd.subcommand(Command::new(*name).about(*about).args(key_args()).arg(
            Arg::new("quiet").long("quiet").action(ArgAction::SetTrue).help("suppress the summary on stdout"),
        ));
    }
    cmd
}

fn resolve(m: &ArgMatches) -> Result<RunConfig, ConfigError> {
    let file = match m.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::invalid("config", format!("{path}: {e}")))?;
            parse_file(&text)?
        }
        None => Vec::new(),
    };
    let mut flags = Vec::new();
    if let Some(w) = m.get_one::<String>("weight") {
        flags.push(("weight".to_string(), w.clone()));
    }
    for k in KEYS {
        if let Some(v) = m.get_one::<String>(k.name) {
            flags.push((k.name.to_string(), v.clone()));
        }
    }
    RunConfig::resolve(&file, &flags)
}

/// Runs one invocation; returns the exit code and what goes to stdout and stderr.
fn execute<I, T>(argv: I) -> (u8, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() { (2, String::new(), text) } else { (0, text, String::new()) };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    match resolve(sub).map_err(commands::CommandError::from).and_then(|cfg| commands::run(name, &cfg)) {
        Ok(_) if sub.get_flag("quiet") => (0, String::new(), String::new()),
        Ok(summary) => (0, format!("{summary}\n"), String::new()),
        Err(e) => (e.exit_code() as u8, String::new(), format!("error: {e}\n")),
    }
}

fn main() -> ExitCode {
    let (code, out, err) = execute(std::env::args_os());
    print!("{out}");
    eprint!("{err}");
    ExitCode::from(code)
}
