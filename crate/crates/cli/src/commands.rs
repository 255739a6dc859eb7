//! Subcommand implementations (everything except plotting).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use xtreaming::data::{
    fill_buffer, generate_cube_clusters, read_csv, read_snapshot, write_snapshot, CubeClusterSpec,
    StreamSource,
};
use xtreaming::engine::BufferReport;
use xtreaming::error::{Error, Result};
use xtreaming::eval::{engine_stress, normalized_stress, shuffle_study, stress_evolution};
use xtreaming::types::{Instance, Point2D};
use xtreaming::{Buffer, Engine, EngineConfig};

use crate::{BenchArgs, EvalArgs, EvalMode, GenerateArgs, InputArgs, ProjectArgs};

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_err(path))?))
}

fn real(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn generate(args: &GenerateArgs) -> Result<()> {
    let spec = CubeClusterSpec {
        n: args.n,
        steps: args.steps,
        sigma: args.sigma,
        seed: args.seed,
        ..CubeClusterSpec::default()
    };
    let data = generate_cube_clusters(&spec)?;
    std::fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;

    let data_path = args.out.join("data.csv");
    let mut out = create(&data_path)?;
    for inst in &data.instances {
        let row: Vec<String> = inst.features.iter().map(|&v| real(v)).collect();
        writeln!(out, "{}", row.join(",")).map_err(io_err(&data_path))?;
    }
    out.flush().map_err(io_err(&data_path))?;

    let labels_path = args.out.join("labels.csv");
    let mut out = create(&labels_path)?;
    writeln!(out, "id,step,label").map_err(io_err(&labels_path))?;
    for (inst, label) in data.instances.iter().zip(&data.labels) {
        writeln!(out, "{},{},{label}", inst.id, inst.step).map_err(io_err(&labels_path))?;
    }
    out.flush().map_err(io_err(&labels_path))?;

    let spec_path = args.out.join("spec.json");
    let text =
        serde_json::to_string_pretty(&spec).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    std::fs::write(&spec_path, text + "\n").map_err(io_err(&spec_path))?;
    Ok(())
}

fn read_instances(input: &InputArgs) -> Result<Vec<Instance>> {
    let mut source = read_csv(&input.input, input.has_header, input.label_col)?;
    let mut instances = Vec::new();
    while let Some(inst) = source.next_instance()? {
        instances.push(inst);
    }
    Ok(instances)
}

#[derive(Serialize)]
struct RunManifest<'a> {
    input: String,
    config: &'a EngineConfig,
    snapshot_every: u64,
    buffers: Vec<BufferReport>,
    landmark_count: usize,
    total_seconds: f64,
    outputs: Vec<String>,
}

pub fn project(args: &ProjectArgs) -> Result<()> {
    let config = args.engine.to_config();
    std::fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    let started = Instant::now();
    let mut source = read_csv(
        &args.input.input,
        args.input.has_header,
        args.input.label_col,
    )?;
    let mut engine = Engine::new(config.clone())?;
    let mut reports = Vec::new();
    let mut outputs = Vec::new();
    while let Some(buffer) = fill_buffer(&mut source, config.buffer_capacity)? {
        reports.push(engine.push_buffer(buffer)?);
        let buffers_done = reports.len() as u64;
        if args.snapshot_every > 0 && buffers_done % args.snapshot_every == 0 {
            let path = args.out_dir.join(format!("snapshot_{buffers_done:04}.csv"));
            write_snapshot(&engine.snapshot(), engine.step() - 1, &path)?;
            outputs.push(path.display().to_string());
        }
    }
    if reports.is_empty() {
        return Err(Error::InvalidArgument("input stream is empty".into()));
    }
    let final_path = args.out_dir.join("snapshot_final.csv");
    write_snapshot(&engine.snapshot(), engine.step() - 1, &final_path)?;
    outputs.push(final_path.display().to_string());

    let manifest = RunManifest {
        input: args.input.input.display().to_string(),
        config: &config,
        snapshot_every: args.snapshot_every,
        buffers: reports,
        landmark_count: engine.landmark_count(),
        total_seconds: started.elapsed().as_secs_f64(),
        outputs,
    };
    let manifest_path = args.out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    std::fs::write(&manifest_path, text + "\n").map_err(io_err(&manifest_path))?;
    Ok(())
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let instances = read_instances(&args.input)?;
    let config = args.engine.to_config();
    let mut out = create(&args.out)?;
    match args.mode {
        EvalMode::Final => {
            let layout_path: &PathBuf = args.layout.as_ref().ok_or_else(|| {
                Error::InvalidArgument("--layout is required in final mode".into())
            })?;
            let rows = read_snapshot(layout_path)?;
            if rows.len() != instances.len() {
                return Err(Error::InvalidArgument(format!(
                    "layout has {} points but input has {}",
                    rows.len(),
                    instances.len()
                )));
            }
            let mut features = Vec::with_capacity(rows.len());
            let mut positions = Vec::with_capacity(rows.len());
            for row in &rows {
                let inst = instances.iter().find(|i| i.id == row.id).ok_or_else(|| {
                    Error::InvalidArgument(format!("layout id {} not in input", row.id))
                })?;
                features.push(inst.features.clone());
                positions.push(Point2D::new(row.x, row.y));
            }
            let report = normalized_stress(&features, &positions, config.seed)?;
            writeln!(out, "value,pairs,exact,seed").map_err(io_err(&args.out))?;
            writeln!(
                out,
                "{},{},{},{}",
                real(report.value),
                report.pairs,
                report.exact,
                report.seed
            )
            .map_err(io_err(&args.out))?;
        }
        EvalMode::Evolution => {
            let reports = stress_evolution(&instances, &config)?;
            writeln!(out, "buffer,value,pairs,exact,seed").map_err(io_err(&args.out))?;
            for (i, r) in reports.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    i,
                    real(r.value),
                    r.pairs,
                    r.exact,
                    r.seed
                )
                .map_err(io_err(&args.out))?;
            }
        }
        EvalMode::Shuffle => {
            let values = shuffle_study(&instances, &config, args.runs, config.seed)?;
            writeln!(out, "run,value").map_err(io_err(&args.out))?;
            for (i, v) in values.iter().enumerate() {
                writeln!(out, "{},{}", i, real(*v)).map_err(io_err(&args.out))?;
            }
        }
    }
    out.flush().map_err(io_err(&args.out))
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let instances = read_instances(&args.input)?;
    if args.buffer_sizes.is_empty() || args.seeds == 0 {
        return Err(Error::InvalidArgument(
            "bench needs at least one buffer size and one seed".into(),
        ));
    }
    let mut out = create(&args.out)?;
    writeln!(out, "buffer_size,seed,stress,seconds").map_err(io_err(&args.out))?;
    for &size in &args.buffer_sizes {
        for seed in 0..args.seeds {
            let config = EngineConfig {
                buffer_capacity: size,
                seed,
                ..args.engine.to_config()
            };
            let started = Instant::now();
            let mut engine = Engine::new(config.clone())?;
            for chunk in instances.chunks(size) {
                engine.push_buffer(Buffer::new(chunk.to_vec(), size)?)?;
            }
            let seconds = started.elapsed().as_secs_f64();
            let stress = engine_stress(&engine, &instances, seed)?.value;
            writeln!(out, "{size},{seed},{},{seconds:.6}", real(stress))
                .map_err(io_err(&args.out))?;
        }
    }
    out.flush().map_err(io_err(&args.out))
}
