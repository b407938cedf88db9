use std::io::Write;

fn main() {
    let seed = std::env::var(secrate::cli::SEED_ENV).ok();
    let out = secrate::cli::run(std::env::args_os(), seed.as_deref());
    // A closed pipe on stdout is not worth a panic.
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    let _ = std::io::stdout().flush();
    std::process::exit(out.code);
}
