//! Corpus benchmark: one CSV row per instance, in file-name order.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use gbal_core::model::format_fraction;
use gbal_core::{solve, Rational, SolveOptions};
use rayon::prelude::*;
use serde::Serialize;

use crate::{read_instance, resolve, CliResult, Failure, ModeArg};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Row {
    pub instance: String,
    pub makespan: i64,
    pub t_star: i64,
    pub lower_bound: i64,
    pub ratio: String,
    pub cores: usize,
    pub pushes: usize,
    pub ms: u128,
}

fn corpus(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let path = entry.context("cannot read directory entry")?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn bench_one(path: &Path, mode: ModeArg, beta: Option<Rational>) -> CliResult<Row> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let instance = read_instance(path)?;
    let (indexed, mode) = resolve(&instance, mode, beta).map_err(|f| match f {
        Failure::Input(e) => Failure::Input(e.context(format!("instance {name}"))),
        other => other,
    })?;
    let start = Instant::now();
    let report = solve(&indexed, mode, &SolveOptions::default())?;
    let ms = start.elapsed().as_millis();
    let s = report.solution;
    Ok(Row {
        instance: name,
        makespan: s.makespan,
        t_star: s.t_star,
        lower_bound: s.lower_bound,
        ratio: format_fraction(&s.ratio_certified),
        cores: report.stats.core_invocations,
        pushes: report.stats.core.pushes,
        ms,
    })
}

pub fn run(dir: &Path, jobs: usize, mode: ModeArg, beta: Option<Rational>) -> CliResult<Vec<Row>> {
    let files = corpus(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Failure::Internal(anyhow!("cannot start worker pool: {e}")))?;
    pool.install(|| files.par_iter().map(|f| bench_one(f, mode, beta)).collect())
}

pub fn to_csv(rows: &[Row]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).context("cannot write CSV row")?;
    }
    if rows.is_empty() {
        w.write_record([
            "instance",
            "makespan",
            "t_star",
            "lower_bound",
            "ratio",
            "cores",
            "pushes",
            "ms",
        ])
        .context("cannot write CSV header")?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("cannot flush CSV: {e}"))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}
