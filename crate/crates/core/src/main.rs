use std::io::Write;

fn main() {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = mixtailor::cli::main_with(std::env::args(), &mut out, &mut err);
    let _ = out.flush();
    std::process::exit(code);
}
