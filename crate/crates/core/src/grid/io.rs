//! GridMap import/export: CSV with a `#` header, a flat little-endian
//! binary layout, and TOML grid descriptors.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::generator::Generator;
use crate::grid::gridmap::GridMap;

const CSV_TAG: &str = "carnot-gridmap";
const MAGIC: &[u8; 4] = b"CGMP";
const VERSION: u32 = 1;

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| Error::Parse(format!("bad list entry {s:?}")))
        })
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

impl GridMap {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut out = out;
        writeln!(out, "# {CSV_TAG} n={} m={}", self.n(), self.m())?;
        writeln!(out, "# lower={}", join(self.lower()))?;
        writeln!(out, "# upper={}", join(self.upper()))?;
        writeln!(out, "# resolution={}", join(self.resolution()))?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        for p in 0..self.len() {
            w.write_record(self.value(p).iter().map(f64::to_string)).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(input: impl Read) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let mut header = Vec::new();
        for _ in 0..4 {
            let mut line = String::new();
            reader.read_line(&mut line)?;
            let body = line
                .trim()
                .strip_prefix('#')
                .ok_or_else(|| Error::Parse("missing '#' header line".into()))?;
            header.push(body.trim().to_string());
        }
        let first = header[0]
            .strip_prefix(CSV_TAG)
            .ok_or_else(|| Error::Parse(format!("not a {CSV_TAG} file")))?;
        let m = first
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix("m="))
            .ok_or_else(|| Error::Parse("header lacks m=".into()))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(e.to_string()))?;
        let field = |i: usize, key: &str| -> Result<String> {
            header[i]
                .strip_prefix(key)
                .map(str::to_string)
                .ok_or_else(|| Error::Parse(format!("header lacks {key}")))
        };
        let lower = parse_list::<f64>(&field(1, "lower=")?)?;
        let upper = parse_list::<f64>(&field(2, "upper=")?)?;
        let resolution = parse_list::<usize>(&field(3, "resolution=")?)?;
        let mut values = Vec::new();
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != m {
                return Err(Error::Parse(format!("row has {} columns, expected {m}", rec.len())));
            }
            for v in rec.iter() {
                values.push(v.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
            }
        }
        GridMap::from_values(lower, upper, resolution, m, values)
    }

    pub fn write_binary(&self, out: impl Write) -> Result<()> {
        let mut out = out;
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.n() as u32).to_le_bytes())?;
        out.write_all(&(self.m() as u32).to_le_bytes())?;
        for v in self.lower().iter().chain(self.upper()) {
            out.write_all(&v.to_le_bytes())?;
        }
        for &r in self.resolution() {
            out.write_all(&(r as u64).to_le_bytes())?;
        }
        for v in self.values() {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(input: impl Read) -> Result<Self> {
        let mut input = input;
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("bad magic for binary grid map".into()));
        }
        let mut word = [0u8; 4];
        let mut read_u32 = |input: &mut dyn Read| -> Result<u32> {
            input.read_exact(&mut word)?;
            Ok(u32::from_le_bytes(word))
        };
        let version = read_u32(&mut input)?;
        if version != VERSION {
            return Err(Error::Parse(format!("unsupported binary grid version {version}")));
        }
        let n = read_u32(&mut input)? as usize;
        let m = read_u32(&mut input)? as usize;
        let mut buf = [0u8; 8];
        let mut f64s = |input: &mut dyn Read, count: usize| -> Result<Vec<f64>> {
            (0..count)
                .map(|_| {
                    input.read_exact(&mut buf)?;
                    Ok(f64::from_le_bytes(buf))
                })
                .collect()
        };
        let lower = f64s(&mut input, n)?;
        let upper = f64s(&mut input, n)?;
        let mut resolution = Vec::with_capacity(n);
        for _ in 0..n {
            let mut b = [0u8; 8];
            input.read_exact(&mut b)?;
            resolution.push(u64::from_le_bytes(b) as usize);
        }
        let count = resolution.iter().try_fold(m, |acc: usize, &r| acc.checked_mul(r));
        let count = count.ok_or_else(|| Error::Parse("grid size overflows".into()))?;
        let values = f64s(&mut input, count)?;
        GridMap::from_values(lower, upper, resolution, m, values)
    }
}

/// TOML description of a sampled generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: Vec<usize>,
    pub generator: Generator,
}

impl GridSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("grid spec serializes")
    }

    pub fn sample(&self) -> Result<GridMap> {
        GridMap::from_generator(&self.generator, &self.lower, &self.upper, &self.resolution)
    }
}
