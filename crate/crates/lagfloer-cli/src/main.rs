//! The `lagfloer` executable.

use std::io::Write;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let (code, out, err) = lagfloer_cli::run(&args, &mut std::io::stdin().lock());
    std::io::stdout().write_all(out.as_bytes()).expect("write stdout");
    std::io::stderr().write_all(err.as_bytes()).expect("write stderr");
    std::process::exit(code);
}
