use std::io::Write;

use surprise::data::{generate_synthetic, write_jsonl, JsonlRecord, SyntheticConfig};
use surprise::rescore::RankedList;

use crate::support::{create, data_err, CliResult};
use crate::SimulateArgs;

pub fn run(args: SimulateArgs, verbose: bool) -> CliResult<usize> {
    let config = SyntheticConfig {
        train_queries: args.num_train,
        test_queries: args.num_test,
        list_length: args.list_length,
        relevant_min: args.relevant_min,
        relevant_max: args.relevant_max,
        offset_min: args.offset_min,
        offset_max: args.offset_max,
        tail_scale: args.tail_scale,
        relevant_shift: args.delta,
        background_size: args.background,
        neighbors: args.neighbors,
        seed: args.seed,
    };
    let dataset = generate_synthetic(&config)?;

    std::fs::create_dir_all(&args.output)
        .map_err(|e| data_err(format!("cannot create {}: {e}", args.output.display())))?;

    write_lists(&args, "train.jsonl", &dataset.train)?;
    write_lists(&args, "test.jsonl", &dataset.test)?;

    let mut nb = create(&args.output.join("neighborhoods.json"))?;
    serde_json::to_writer_pretty(&mut nb, &dataset.neighborhoods)
        .map_err(|e| data_err(format!("serialization failed: {e}")))?;
    nb.write_all(b"\n").map_err(surprise::Error::from)?;
    nb.flush().map_err(surprise::Error::from)?;

    let mut truth = create(&args.output.join("truth.json"))?;
    serde_json::to_writer_pretty(&mut truth, &dataset.truth)
        .map_err(|e| data_err(format!("serialization failed: {e}")))?;
    truth.write_all(b"\n").map_err(surprise::Error::from)?;
    truth.flush().map_err(surprise::Error::from)?;

    if verbose {
        eprintln!(
            "wrote {} train and {} test queries ({} results each) to {}",
            dataset.train.len(),
            dataset.test.len(),
            config.list_length,
            args.output.display()
        );
    }
    Ok(0)
}

fn write_lists(args: &SimulateArgs, name: &str, lists: &[RankedList]) -> CliResult<()> {
    let records: Vec<JsonlRecord> = lists.iter().map(JsonlRecord::from_list).collect();
    let mut sink = create(&args.output.join(name))?;
    write_jsonl(&mut sink, &records)?;
    sink.flush().map_err(surprise::Error::from)?;
    Ok(())
}
