use std::path::Path;

use anyhow::{bail, Context, Result};
use endofuse_core::dataset::{load_image, load_manifest, FeatureTable};
use endofuse_core::radiomics::{extract_regions, merge_tables, records_to_table};
use rayon::prelude::*;

pub struct ExtractArgs<'a> {
    pub manifest: &'a Path,
    pub out: &'a Path,
    pub radius: f64,
    pub bins: usize,
    pub side: usize,
}

/// Worker pool capped by `ENDOFUSE_THREADS` when set.
fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("ENDOFUSE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("ENDOFUSE_THREADS={v:?} is not a positive integer"))?;
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

pub fn run(args: &ExtractArgs) -> Result<FeatureTable> {
    let manifest = load_manifest(args.manifest, None)
        .with_context(|| format!("reading manifest {}", args.manifest.display()))?;
    let results: Vec<_> = pool()?.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| {
                let gray = load_image(&e.path, args.side)?.to_gray();
                extract_regions(&e.id, &gray, args.radius, args.bins)
            })
            .collect()
    });
    let mut central = Vec::new();
    let mut peripheral = Vec::new();
    let mut labels = Vec::new();
    let mut failed = 0;
    for (e, r) in manifest.entries.iter().zip(results) {
        match r {
            Ok((c, p)) => {
                central.push(c);
                peripheral.push(p);
                labels.push(e.label);
            }
            Err(err) => {
                failed += 1;
                eprintln!("warning: skipped {}: {err}", e.id);
            }
        }
    }
    let total = manifest.entries.len();
    if failed * 10 > total {
        bail!("{failed} of {total} images failed, more than 10%");
    }
    let table = merge_tables(
        &records_to_table(&central, Some(labels))?,
        &records_to_table(&peripheral, None)?,
    )?;
    table.write_csv(args.out)?;
    if failed > 0 {
        eprintln!("warning: {failed} of {total} images skipped");
    }
    Ok(table)
}
