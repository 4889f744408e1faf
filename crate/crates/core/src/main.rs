use clap::Parser;
use gauss_paths::cli::{exit_code, init_workers, run, RunConfig};

fn main() {
    let cfg = RunConfig::parse();
    let result = init_workers().and_then(|()| run(&cfg));
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", cfg.out.join(f).display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
