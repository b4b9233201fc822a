//! Dumps a Five-leg as JSON lines, reads it back as a custom family and
//! prints the JSON reports the command line tool would emit.

use clap::Parser;
use simplexlab::cli::{run_suite, SuiteConfig};
use simplexlab::fiveleg::{example1, Form};
use simplexlab::{ExponentKernel, IndexDomain};

fn main() -> simplexlab::Result<()> {
    let m = example1(&ExponentKernel::root_of_unity(3)?, &IndexDomain::cyclic(3), Form::M1)?;
    let path = std::env::temp_dir().join("simplexlab-m1-n3.jsonl");
    m.write_json(&mut std::fs::File::create(&path)?)?;
    let header = std::fs::read_to_string(&path)?.lines().next().unwrap_or_default().to_string();
    println!("header: {header}");

    let args = ["simplexlab", "--example", "custom", "--m-file", path.to_str().unwrap_or_default(), "--equations", "mmm2,m6,r4"];
    let cfg = SuiteConfig::try_parse_from(args).map_err(|e| simplexlab::Error::InvalidInput(e.to_string()))?;
    for r in run_suite(&cfg)? {
        println!("{}", r.to_json());
    }
    std::fs::remove_file(&path)?;
    Ok(())
}
