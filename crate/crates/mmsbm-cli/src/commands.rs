//! The `simulate` and `estimate` subcommands.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};

use ndarray::Axis;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mmsbm::error::{Error, Result};
use mmsbm::io::{read_edge_list, result_to_dto, write_edge_list, write_json, write_matrix_csv};
use mmsbm::model::sample_mmsbm;
use mmsbm::GraphSample64;

use crate::config::ExperimentConfig;
use crate::{EstimateArgs, SimulateArgs};

/// Samples one graph from the configured model and writes it as an edge
/// list; with `--truth`, also dumps the generating quantities as CSV.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let config = ExperimentConfig::load(&args.config)?;
    let spec = config.model_spec()?;
    let n = args.n.unwrap_or(config.n_grid[0]);
    let seed = args.seed.unwrap_or(config.seed);
    let out = args
        .out
        .clone()
        .or_else(|| config.out.as_ref().map(Into::into))
        .ok_or_else(|| {
            Error::InvalidParameter(
                "no output path: pass --out or set \"out\" in the config".to_string(),
            )
        })?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = sample_mmsbm(&spec, n, &mut rng)?;

    let mut w = BufWriter::new(File::create(&out)?);
    write_edge_list(&mut w, &graph)?;
    w.flush()?;

    if let Some(dir) = &args.truth {
        fs::create_dir_all(dir)?;
        let truth = graph.truth().expect("sampler attaches ground truth");
        let csv = |name: &str| File::create(dir.join(name)).map(BufWriter::new);
        write_matrix_csv(csv("b.csv")?, spec.b().view())?;
        write_matrix_csv(csv("alpha.csv")?, spec.alpha().view().insert_axis(Axis(0)))?;
        write_matrix_csv(csv("memberships.csv")?, truth.memberships.matrix().view())?;
        write_matrix_csv(csv("positions.csv")?, truth.positions.matrix().view())?;
    }
    Ok(())
}

/// Runs the full estimation pipeline on an edge-list file and writes the
/// result as JSON to `--out` or stdout.
pub fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let graph: GraphSample64 = read_edge_list(BufReader::new(File::open(&args.graph)?))?;
    let d = args.d.unwrap_or(args.k);
    let result = mmsbm::estimation::estimate(&graph, args.k, d, args.policy)?;
    let dto = result_to_dto(&result);
    match &args.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            write_json(&mut w, &dto)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            write_json(&mut w, &dto)?;
            w.flush()?;
        }
    }
    Ok(())
}
