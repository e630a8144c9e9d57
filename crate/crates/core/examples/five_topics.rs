//! Writes the five topic corpora and a queries file, then runs the
//! selective-versus-exhaustive evaluation and prints the table.
//!
//!     cargo run -p fedsel-core --example five_topics -- out/ 2024

use std::path::PathBuf;

use fedsel_core::directory::{CoriParams, UtilityConstraints};
use fedsel_core::eval::{build_experiment, run_experiment, ExperimentSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "five_topics".into()));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2024);
    std::fs::create_dir_all(&dir)?;

    let spec = ExperimentSpec::five_topics(seed);
    let layout = build_experiment(&spec, &dir)?;
    let queries: String = spec
        .queries
        .iter()
        .map(|q| format!("{}\n", q.text))
        .collect();
    std::fs::write(dir.join("queries.txt"), queries)?;
    for (id, path) in &layout.corpora {
        println!("{id}\t{}", path.display());
    }

    let report = run_experiment(
        &spec,
        &layout,
        CoriParams::default(),
        &UtilityConstraints::default(),
    )?;
    report.write(&dir.join("report.json"))?;
    print!("{}", report.render_table());
    Ok(())
}
