//! Map files: blocks of pointwise data for certificates.
//!
//! ```text
//! # swap on the diagonal
//! chart product-cp1-cp1
//! point-p 0.3,0.3,-0.2,-0.2
//! point-q 0.3,0.3,-0.2,-0.2
//! F
//! 0 1 0 0
//! 1 0 0 0
//! 0 0 0 1
//! 0 0 1 0
//! ```
//!
//! Each block starts with `chart NAME` and may set `n`, `seed`, `degree` and
//! `backend` (`exact` or `numeric`). `F` is followed by `2n` rows of `2n`
//! whitespace-separated numbers. Text after `#` is ignored.

use bochner::chart::{ChartPoint, ChartSpec};
use bochner::{Error, Matrix, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct MapBlock {
    /// Line of the `chart` keyword.
    pub line: usize,
    pub chart: ChartSpec,
    pub point_p: ChartPoint,
    pub point_q: ChartPoint,
    pub f: Matrix,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

#[derive(Default)]
struct Partial {
    line: usize,
    chart: Option<ChartSpec>,
    point_p: Option<ChartPoint>,
    point_q: Option<ChartPoint>,
    rows: Vec<Vec<f64>>,
    reading_f: bool,
    f_line: usize,
}

impl Partial {
    fn finish(self) -> Result<MapBlock> {
        let chart = self.chart.expect("block opened by a chart line");
        let d = 2 * chart.n;
        let point_p = self.point_p.ok_or_else(|| err(self.line, "block lacks `point-p`"))?;
        let point_q = self.point_q.ok_or_else(|| err(self.line, "block lacks `point-q`"))?;
        if self.f_line == 0 {
            return Err(err(self.line, "block lacks `F`"));
        }
        if self.rows.len() != d {
            return Err(err(self.f_line, format!("`F` needs {d} rows, found {}", self.rows.len())));
        }
        for (p, name) in [(&point_p, "point-p"), (&point_q, "point-q")] {
            if p.coords.len() != d {
                return Err(err(self.line, format!("{name} has {} coordinates, expected {d}", p.coords.len())));
            }
        }
        let flat: Vec<f64> = self.rows.into_iter().flatten().collect();
        Ok(MapBlock { line: self.line, chart, point_p, point_q, f: Matrix::from_row_slice(d, d, &flat) })
    }
}

pub fn parse_map_file(text: &str) -> Result<Vec<MapBlock>> {
    let mut blocks = Vec::new();
    let mut current: Option<Partial> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, rest) = content.split_once(char::is_whitespace).map_or((content, ""), |(k, r)| (k, r.trim()));
        if key == "chart" {
            if let Some(done) = current.take() {
                blocks.push(done.finish()?);
            }
            if rest.is_empty() {
                return Err(err(line, "`chart` needs a name"));
            }
            let chart = ChartSpec::parse(&format!("name = {rest}"))?;
            current = Some(Partial { line, chart: Some(chart), ..Partial::default() });
            continue;
        }
        let block = current.as_mut().ok_or_else(|| err(line, "expected `chart NAME` to open a block"))?;
        let spec = block.chart.as_mut().expect("open block has a chart");
        if block.reading_f {
            let d = 2 * spec.n;
            if block.rows.len() < d && key.parse::<f64>().is_ok() {
                let row: Vec<f64> = content
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| err(line, format!("bad matrix entry `{t}`"))))
                    .collect::<Result<_>>()?;
                if row.len() != d {
                    return Err(err(line, format!("matrix row has {} entries, expected {d}", row.len())));
                }
                block.rows.push(row);
                continue;
            }
            block.reading_f = false;
        }
        let number = |what: &str| err(line, format!("bad {what} `{rest}`"));
        match key {
            "n" => spec.n = rest.parse().map_err(|_| number("dimension"))?,
            "seed" => spec.seed = rest.parse().map_err(|_| number("seed"))?,
            "degree" => spec.degree = rest.parse().map_err(|_| number("degree"))?,
            "backend" => {
                spec.numeric = match rest {
                    "exact" => false,
                    "numeric" => true,
                    other => return Err(err(line, format!("unknown backend `{other}`"))),
                }
            }
            "point-p" | "point-q" => {
                let p: ChartPoint = rest.parse().map_err(|m: String| err(line, m))?;
                if key == "point-p" {
                    block.point_p = Some(p);
                } else {
                    block.point_q = Some(p);
                }
            }
            "F" => {
                if block.f_line != 0 {
                    return Err(err(line, "`F` given twice in one block"));
                }
                if !rest.is_empty() {
                    return Err(err(line, "matrix rows go on the lines after `F`"));
                }
                block.reading_f = true;
                block.f_line = line;
            }
            other => return Err(err(line, format!("unknown keyword `{other}`"))),
        }
    }
    if let Some(done) = current.take() {
        blocks.push(done.finish()?);
    }
    Ok(blocks)
}
