//! CSI interchange formats.
//!
//! CSV: a header line `# csif,v1,W=<int>,rate=<float>,width_mhz=<int>` with
//! optional `amp=1`, `classes=<a|b|..>` and `guards=<i;j;..>` keys, then one
//! frame per row: `timestamp,label,re_0,im_0,...` or, for amplitude-only
//! files, `timestamp,label,a_0,...`. An empty timestamp field is synthesised
//! from the frame rate.
//!
//! Binary (little-endian): `CSIF`, version u16, flags u16 (bit 0 amplitude
//! only, bit 1 trailer present), W u32, frame count u64, frame rate f64, then
//! per frame an f64 timestamp, a u16 label and W (or 2W interleaved re/im) f32
//! values. Bit 1 announces a trailer after the frames: u32 byte length and a
//! JSON object carrying channel width, guard indices, source indices and
//! class names.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{synth_timestamps, CsiDataset, DatasetMeta, Samples};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CSIF";
const VERSION: u16 = 1;
const FLAG_AMPLITUDE: u16 = 1;
const FLAG_TRAILER: u16 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    Binary,
}

impl FileFormat {
    /// `.csv` selects CSV; anything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::Binary,
        }
    }
}

pub fn load_dataset(path: &Path, format: FileFormat) -> Result<CsiDataset> {
    let file = File::open(path)?;
    let mut reader = BufReader::new(file);
    match format {
        FileFormat::Csv => read_csv(&mut reader),
        FileFormat::Binary => read_binary(&mut reader),
    }
}

pub fn save_dataset(dataset: &CsiDataset, path: &Path, format: FileFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        FileFormat::Csv => write_csv(dataset, &mut w)?,
        FileFormat::Binary => write_binary(dataset, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn guard_indices(meta: &DatasetMeta) -> Vec<usize> {
    meta.guard_mask.iter().enumerate().filter(|(_, &g)| g).map(|(i, _)| i).collect()
}

pub fn write_csv<W: Write>(dataset: &CsiDataset, out: &mut W) -> Result<()> {
    let meta = &dataset.meta;
    write!(
        out,
        "# csif,v1,W={},rate={},width_mhz={}",
        meta.subcarrier_count, meta.frame_rate, meta.channel_width_mhz
    )?;
    if !dataset.samples.is_complex() {
        write!(out, ",amp=1")?;
    }
    if !dataset.class_names.is_empty() {
        write!(out, ",classes={}", dataset.class_names.join("|"))?;
    }
    let guards = guard_indices(meta);
    if !guards.is_empty() {
        let s: Vec<String> = guards.iter().map(|g| g.to_string()).collect();
        write!(out, ",guards={}", s.join(";"))?;
    }
    writeln!(out)?;
    let mut line = String::new();
    for i in 0..dataset.len() {
        line.clear();
        line.push_str(&format!("{},{}", dataset.timestamps[i], dataset.labels[i]));
        match &dataset.samples {
            Samples::Amplitude(m) => {
                for v in m.row(i) {
                    line.push_str(&format!(",{}", *v as f32));
                }
            }
            Samples::Complex(m) => {
                for z in m.row(i) {
                    line.push_str(&format!(",{},{}", z.re as f32, z.im as f32));
                }
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

struct Header {
    width: usize,
    rate: f64,
    width_mhz: u32,
    amplitude: bool,
    classes: Vec<String>,
    guards: Vec<usize>,
}

fn parse_header(line: &str) -> Result<Header> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::format("CSV header must start with '#'"))?
        .trim();
    let mut fields = body.split(',');
    if fields.next().map(str::trim) != Some("csif") {
        return Err(Error::format("CSV header missing 'csif' tag"));
    }
    if fields.next().map(str::trim) != Some("v1") {
        return Err(Error::format("unsupported CSV version"));
    }
    let (mut width, mut rate, mut width_mhz) = (None, None, None);
    let mut header = Header { width: 0, rate: 0.0, width_mhz: 0, amplitude: false, classes: vec![], guards: vec![] };
    for f in fields {
        let (k, v) = f.split_once('=').ok_or_else(|| Error::format(format!("bad header field '{f}'")))?;
        let bad = |_| Error::format(format!("bad value in header field '{f}'"));
        match k.trim() {
            "W" => width = Some(v.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?),
            "rate" => rate = Some(v.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "width_mhz" => width_mhz = Some(v.trim().parse::<u32>().map_err(|e| bad(e.to_string()))?),
            "amp" => header.amplitude = v.trim() == "1",
            "classes" => header.classes = v.split('|').map(|s| s.to_string()).collect(),
            "guards" => {
                header.guards = v
                    .split(';')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.trim().parse::<usize>().map_err(|e| bad(e.to_string())))
                    .collect::<Result<_>>()?
            }
            _ => {}
        }
    }
    header.width = width.ok_or_else(|| Error::format("header lacks W"))?;
    header.rate = rate.ok_or_else(|| Error::format("header lacks rate"))?;
    header.width_mhz = width_mhz.ok_or_else(|| Error::format("header lacks width_mhz"))?;
    if header.width == 0 {
        return Err(Error::format("W must be positive"));
    }
    if header.guards.iter().any(|&g| g >= header.width) {
        return Err(Error::format("guard index beyond W"));
    }
    Ok(header)
}

fn meta_from(width: usize, rate: f64, width_mhz: u32, guards: &[usize], sources: Option<Vec<usize>>) -> DatasetMeta {
    let mut meta = DatasetMeta::new(width, rate, width_mhz);
    for &g in guards {
        meta.guard_mask[g] = true;
    }
    if let Some(s) = sources {
        if s.len() == width {
            meta.source_indices = s;
        }
    }
    meta
}

pub fn read_csv<R: BufRead>(input: &mut R) -> Result<CsiDataset> {
    let mut lines = input.lines();
    let header_line = lines.next().ok_or_else(|| Error::format("empty CSV file"))??;
    let header = parse_header(&header_line)?;
    let per_frame = if header.amplitude { header.width } else { 2 * header.width };
    let mut timestamps = Vec::new();
    let mut labels = Vec::new();
    let mut values = Vec::new();
    let mut missing_ts = false;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != per_frame + 2 {
            return Err(Error::shape(format!(
                "row {} has {} values, expected {}",
                lineno + 2,
                fields.len().saturating_sub(2),
                per_frame
            )));
        }
        let ts = fields[0].trim();
        if ts.is_empty() {
            missing_ts = true;
            timestamps.push(0.0);
        } else {
            timestamps.push(ts.parse::<f64>().map_err(|_| Error::format(format!("bad timestamp on row {}", lineno + 2)))?);
        }
        labels.push(fields[1].trim().parse::<u16>().map_err(|_| Error::format(format!("bad label on row {}", lineno + 2)))?);
        for f in &fields[2..] {
            let v: f32 = f.trim().parse().map_err(|_| Error::format(format!("bad value '{f}' on row {}", lineno + 2)))?;
            values.push(v as f64);
        }
    }
    let n = labels.len();
    if missing_ts {
        timestamps = synth_timestamps(n, header.rate);
    }
    let samples = build_samples(values, n, header.width, header.amplitude)?;
    let meta = meta_from(header.width, header.rate, header.width_mhz, &header.guards, None);
    CsiDataset::new(timestamps, samples, labels, header.classes, meta)
}

fn build_samples(values: Vec<f64>, n: usize, width: usize, amplitude: bool) -> Result<Samples> {
    if amplitude {
        Ok(Samples::Amplitude(Array2::from_shape_vec((n, width), values).map_err(|e| Error::shape(e.to_string()))?))
    } else {
        let z: Vec<Complex64> = values.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        Ok(Samples::Complex(Array2::from_shape_vec((n, width), z).map_err(|e| Error::shape(e.to_string()))?))
    }
}

#[derive(Serialize, Deserialize)]
struct Trailer {
    width_mhz: u32,
    guards: Vec<usize>,
    source_indices: Vec<usize>,
    class_names: Vec<String>,
}

pub fn write_binary<W: Write>(dataset: &CsiDataset, out: &mut W) -> Result<()> {
    let meta = &dataset.meta;
    let amplitude = !dataset.samples.is_complex();
    let mut flags = FLAG_TRAILER;
    if amplitude {
        flags |= FLAG_AMPLITUDE;
    }
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&flags.to_le_bytes())?;
    out.write_all(&(meta.subcarrier_count as u32).to_le_bytes())?;
    out.write_all(&(dataset.len() as u64).to_le_bytes())?;
    out.write_all(&meta.frame_rate.to_le_bytes())?;
    let mut buf = Vec::with_capacity(10 + 8 * dataset.width());
    for i in 0..dataset.len() {
        buf.clear();
        buf.extend_from_slice(&dataset.timestamps[i].to_le_bytes());
        buf.extend_from_slice(&dataset.labels[i].to_le_bytes());
        match &dataset.samples {
            Samples::Amplitude(m) => {
                for v in m.row(i) {
                    buf.extend_from_slice(&(*v as f32).to_le_bytes());
                }
            }
            Samples::Complex(m) => {
                for z in m.row(i) {
                    buf.extend_from_slice(&(z.re as f32).to_le_bytes());
                    buf.extend_from_slice(&(z.im as f32).to_le_bytes());
                }
            }
        }
        out.write_all(&buf)?;
    }
    let trailer = Trailer {
        width_mhz: meta.channel_width_mhz,
        guards: guard_indices(meta),
        source_indices: meta.source_indices.clone(),
        class_names: dataset.class_names.clone(),
    };
    let json = serde_json::to_vec(&trailer).map_err(|e| Error::format(e.to_string()))?;
    out.write_all(&(json.len() as u32).to_le_bytes())?;
    out.write_all(&json)?;
    Ok(())
}

fn read_exact<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::format("file truncated"),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

pub fn read_binary<R: Read>(input: &mut R) -> Result<CsiDataset> {
    let magic: [u8; 4] = read_exact(input)?;
    if &magic != MAGIC {
        return Err(Error::format(format!("bad magic {:?}, expected CSIF", String::from_utf8_lossy(&magic))));
    }
    let version = u16::from_le_bytes(read_exact(input)?);
    if version != VERSION {
        return Err(Error::format(format!("unsupported CSIF version {version}")));
    }
    let flags = u16::from_le_bytes(read_exact(input)?);
    let width = u32::from_le_bytes(read_exact(input)?) as usize;
    let count = u64::from_le_bytes(read_exact(input)?) as usize;
    let rate = f64::from_le_bytes(read_exact(input)?);
    if width == 0 {
        return Err(Error::format("W must be positive"));
    }
    let amplitude = flags & FLAG_AMPLITUDE != 0;
    let per_frame = if amplitude { width } else { 2 * width };
    let mut timestamps = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count.saturating_mul(per_frame).min(1 << 28));
    let mut frame = vec![0u8; per_frame * 4];
    for _ in 0..count {
        timestamps.push(f64::from_le_bytes(read_exact(input)?));
        labels.push(u16::from_le_bytes(read_exact(input)?));
        input.read_exact(&mut frame).map_err(|_| Error::format("file truncated"))?;
        values.extend(frame.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64));
    }
    if timestamps.iter().any(|t| t.is_nan()) {
        timestamps = synth_timestamps(count, rate);
    }
    let mut class_names = Vec::new();
    let mut meta = meta_from(width, rate, 0, &[], None);
    if flags & FLAG_TRAILER != 0 {
        let len = u32::from_le_bytes(read_exact(input)?) as usize;
        let mut json = vec![0u8; len];
        input.read_exact(&mut json).map_err(|_| Error::format("trailer truncated"))?;
        let t: Trailer = serde_json::from_slice(&json).map_err(|e| Error::format(format!("bad trailer: {e}")))?;
        if t.guards.iter().any(|&g| g >= width) {
            return Err(Error::format("guard index beyond W"));
        }
        meta = meta_from(width, rate, t.width_mhz, &t.guards, Some(t.source_indices));
        class_names = t.class_names;
    }
    let samples = build_samples(values, count, width, amplitude)?;
    CsiDataset::new(timestamps, samples, labels, class_names, meta)
}
