//! Writes the shipped presets from the fitted spectroscopic parameters.

use std::path::PathBuf;

use clap::Parser;
use dnp_kinetics::provision::{fit_g, fit_n14, n14_preset, n15_preset, MICROWAVE_MHZ, N14_FIELD_T};

#[derive(Parser)]
#[command(name = "dnp-provision", about = "Fit and write the parameter presets")]
struct Args {
    /// Directory receiving n14_c60.json and n15_c60.json.
    #[arg(long, default_value = "presets")]
    dir: PathBuf,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args = Args::parse();
    let fit = fit_n14()?;
    println!("g = {:.6}", fit_g(MICROWAVE_MHZ, N14_FIELD_T)?);
    println!(
        "nu_n = {:.4} MHz, A = {:.4} MHz, gamma_n = {:.6} MHz/T, rms = {:.4} MHz",
        fit.nu_n, fit.hyperfine_a, fit.gamma_n, fit.rms
    );
    std::fs::create_dir_all(&args.dir)?;
    for (name, cfg) in [("n14_c60.json", n14_preset()?), ("n15_c60.json", n15_preset()?)] {
        let path = args.dir.join(name);
        std::fs::write(&path, cfg.to_json_pretty() + "\n")?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
