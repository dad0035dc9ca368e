use std::path::PathBuf;

use anyhow::{Context, Result};
use dfcn_core::data::{write_dataset, SplitTag};
use dfcn_core::synth::{generate, SynthConfig};

#[derive(Clone, Debug)]
pub struct GenDataArgs {
    pub dir: PathBuf,
    pub seed: u64,
    pub train_records: Option<usize>,
    pub test_records: Option<usize>,
}

/// Writes a synthetic training site to `train.csv` and a test site to
/// `test.csv`, both in the loader's CSV layout.
pub fn cmd_gen_data(args: &GenDataArgs) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(&args.dir).with_context(|| format!("creating {}", args.dir.display()))?;
    let mut a = SynthConfig::site_a(args.seed);
    let mut b = SynthConfig::site_b(args.seed.wrapping_add(1));
    if let Some(n) = args.train_records {
        a = a.with_records(n);
    }
    if let Some(n) = args.test_records {
        b = b.with_records(n);
    }
    let train = generate(&a)?;
    let mut test = generate(&b)?;
    test.split = SplitTag::Test;
    let (tp, sp) = (args.dir.join("train.csv"), args.dir.join("test.csv"));
    write_dataset(&train, &tp)?;
    write_dataset(&test, &sp)?;
    Ok((tp, sp))
}
