//! Text formats: paradigm TSV, timeseries CSV and the CSV outputs of fits and
//! benchmarks. Floats are written with 17 significant digits so that values
//! round-trip exactly.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::evalx::{BenchmarkRow, ScoreReport};
use crate::gp::GPPosterior;
use crate::signal::{Event, Paradigm, SamplingGrid};

/// Tolerance on the spacing of timeseries timestamps, in seconds.
pub const TIME_SPACING_TOLERANCE: f64 = 1e-6;

pub const PARADIGM_HEADER: [&str; 4] = ["onset", "duration", "trial_type", "modulation"];
pub const TIMESERIES_HEADER: [&str; 2] = ["time", "value"];
pub const HRF_PLOT_HEADER: [&str; 3] = ["t", "mean", "sd"];
pub const SCORES_HEADER: [&str; 7] = [
    "dataset_peak",
    "method",
    "noise_sd",
    "seed",
    "prediction_r2",
    "projection_r2",
    "pearson",
];

/// Round-trippable formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(path: &str, line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line: line as usize,
        reason: reason.into(),
    }
}

fn csv_err(path: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => parse_err(path, line, format!("{kind:?}")),
    }
}

fn write_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Io(std::io::Error::other(format!("{kind:?}"))),
    }
}

fn parse_f64(path: &str, line: u64, field: &str, text: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("{field}: `{text}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("{field}: value must be finite")));
    }
    Ok(v)
}

fn check_header(path: &str, found: &csv::StringRecord, expected: &[&str], optional_last: bool) -> Result<()> {
    let names: Vec<&str> = found.iter().map(str::trim).collect();
    let ok = names == expected || (optional_last && names == expected[..expected.len() - 1]);
    if !ok {
        return Err(parse_err(path, 1, format!("expected header `{}`, found `{}`", expected.join(","), names.join(","))));
    }
    Ok(())
}

/// Reads a tab-separated paradigm. Trial types become condition indices in
/// order of first appearance; the modulation column may be omitted.
pub fn read_paradigm(reader: impl Read, path: &str) -> Result<Paradigm> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    check_header(path, &header, &PARADIGM_HEADER, true)?;
    let width = header.len();

    let mut labels: Vec<String> = Vec::new();
    let mut events = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(parse_err(path, line, format!("expected {width} fields, found {}", record.len())));
        }
        let onset = parse_f64(path, line, "onset", &record[0])?;
        let duration = parse_f64(path, line, "duration", &record[1])?;
        if duration != 0.0 {
            return Err(parse_err(path, line, "only instantaneous events (duration 0) are supported"));
        }
        let label = record[2].trim();
        if label.is_empty() {
            return Err(parse_err(path, line, "empty trial_type"));
        }
        let modulation = if width == 4 {
            parse_f64(path, line, "modulation", &record[3])?
        } else {
            1.0
        };
        let condition = match labels.iter().position(|l| l == label) {
            Some(i) => i,
            None => {
                labels.push(label.to_owned());
                labels.len() - 1
            }
        };
        events.push(Event {
            condition,
            onset,
            modulation,
        });
    }
    if events.is_empty() {
        return Err(parse_err(path, 1, "paradigm has no events"));
    }
    Paradigm::with_labels(events, labels).map_err(|e| parse_err(path, 1, e.to_string()))
}

pub fn write_paradigm(writer: impl Write, paradigm: &Paradigm) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(writer);
    w.write_record(PARADIGM_HEADER).map_err(write_err)?;
    for e in paradigm.events() {
        w.write_record([
            fmt_f64(e.onset),
            "0".to_owned(),
            paradigm.labels()[e.condition].clone(),
            fmt_f64(e.modulation),
        ])
        .map_err(write_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `time,value` CSV. Timestamps must be `TR, 2 TR, ...` within
/// [`TIME_SPACING_TOLERANCE`].
pub fn read_timeseries(reader: impl Read, path: &str) -> Result<(SamplingGrid, DVector<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    check_header(path, &header, &TIMESERIES_HEADER, false)?;

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut lines = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        times.push(parse_f64(path, line, "time", &record[0])?);
        values.push(parse_f64(path, line, "value", &record[1])?);
        lines.push(line);
    }
    if times.is_empty() {
        return Err(parse_err(path, 1, "timeseries has no samples"));
    }
    let tr = times[0];
    if tr <= 0.0 {
        return Err(parse_err(path, lines[0], "first sample time must equal the (positive) repetition time"));
    }
    for (n, &t) in times.iter().enumerate() {
        if (t - tr * (n + 1) as f64).abs() > TIME_SPACING_TOLERANCE {
            return Err(parse_err(
                path,
                lines[n],
                format!("sample times must be evenly spaced starting at the repetition time {tr}"),
            ));
        }
    }
    let grid = SamplingGrid::new(tr, times.len())?;
    Ok((grid, DVector::from_vec(values)))
}

pub fn write_timeseries(writer: impl Write, grid: &SamplingGrid, y: &DVector<f64>) -> Result<()> {
    if y.len() != grid.n_samples {
        return Err(Error::DimensionMismatch {
            what: "timeseries samples",
            expected: grid.n_samples,
            found: y.len(),
        });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TIMESERIES_HEADER).map_err(write_err)?;
    for (n, v) in y.iter().enumerate() {
        w.write_record([fmt_f64(grid.time(n)), fmt_f64(*v)]).map_err(write_err)?;
    }
    w.flush()?;
    Ok(())
}

/// `t,mean,sd` rows of a posterior.
pub fn write_hrf_plot(writer: impl Write, posterior: &GPPosterior) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HRF_PLOT_HEADER).map_err(write_err)?;
    let sd = posterior.std_dev();
    for ((t, m), s) in posterior.query_abscissae.iter().zip(posterior.mean.iter()).zip(sd) {
        w.write_record([fmt_f64(*t), fmt_f64(*m), fmt_f64(s)]).map_err(write_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back the rows written by [`write_hrf_plot`] as `(t, mean, sd)`.
pub fn read_hrf_plot(reader: impl Read, path: &str) -> Result<Vec<(f64, f64, f64)>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    check_header(path, &header, &HRF_PLOT_HEADER, false)?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push((
            parse_f64(path, line, "t", &record[0])?,
            parse_f64(path, line, "mean", &record[1])?,
            parse_f64(path, line, "sd", &record[2])?,
        ));
    }
    Ok(rows)
}

/// Dense matrix, one CSV row per matrix row, no header.
pub fn write_matrix(writer: impl Write, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| fmt_f64(*v))).map_err(write_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(reader: impl Read, path: &str) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push(
            record
                .iter()
                .map(|f| parse_f64(path, line, "entry", f))
                .collect::<Result<_>>()?,
        );
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

/// Benchmark table. Failed cells are written with `NaN` scores.
pub fn write_scores(writer: impl Write, rows: &[BenchmarkRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SCORES_HEADER).map_err(write_err)?;
    for r in rows {
        let (pred, proj, corr) = match &r.outcome {
            Ok(rep) => (rep.prediction_r2, rep.projection_r2, rep.pearson),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN),
        };
        w.write_record([
            fmt_f64(r.dataset_peak),
            r.method.clone(),
            fmt_f64(r.noise_sd),
            r.seed.to_string(),
            fmt_f64(pred),
            fmt_f64(proj),
            fmt_f64(corr),
        ])
        .map_err(write_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a benchmark table; rows with `NaN` scores come back as failed cells.
pub fn read_scores(reader: impl Read, path: &str) -> Result<Vec<BenchmarkRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    check_header(path, &header, &SCORES_HEADER, false)?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize, name: &str| -> Result<f64> {
            record[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| parse_err(path, line, format!("{name}: `{}` is not a number", &record[i])))
        };
        let dataset_peak = num(0, "dataset_peak")?;
        let noise_sd = num(2, "noise_sd")?;
        let seed: u64 = record[3]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line, "seed: not an integer"))?;
        let (pred, proj, corr) = (num(4, "prediction_r2")?, num(5, "projection_r2")?, num(6, "pearson")?);
        let method = record[1].to_owned();
        let outcome = if pred.is_nan() || proj.is_nan() || corr.is_nan() {
            Err("failed".to_owned())
        } else {
            Ok(ScoreReport {
                method_id: method.clone(),
                dataset_id: format!("peak{dataset_peak}_noise{noise_sd}_seed{seed}"),
                prediction_r2: pred,
                projection_r2: proj,
                pearson: corr,
            })
        };
        rows.push(BenchmarkRow {
            dataset_peak,
            method,
            noise_sd,
            seed,
            outcome,
        });
    }
    Ok(rows)
}
