use clap::Parser;

fn main() {
    // worker-pool size: PEAKMETA_THREADS overrides the rayon default
    if let Ok(threads) = std::env::var("PEAKMETA_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let echo: Vec<String> = std::env::args().collect();
    let args = peakmeta::cli::CliArgs::parse();
    std::process::exit(peakmeta::cli::run(args, echo));
}
