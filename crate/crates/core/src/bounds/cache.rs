//! Versioned text format for bound curves: one CSV record per sample
//! carrying the full optimizer settings that produced it.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundCurve, BoundOptions, BoundSample};
use crate::error::{Error, Result};

pub const MAGIC: &str = "# spinwave-bounds v1";
const COLUMNS: &str = "k,yc,delta_b,delta_raw,feasible,agreeing,restarts,seed,mixture_rank,tol_yc,tol_agree,modes,max_iters,lbfgs_memory,penalties";

pub fn to_string(curves: &[BoundCurve]) -> String {
    let mut s = format!("{MAGIC}\n{COLUMNS}\n");
    for c in curves {
        let o = &c.options;
        let pens = o
            .penalties
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(";");
        for r in &c.samples {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.k,
                r.yc,
                r.delta_b,
                r.delta_raw,
                r.feasible,
                r.agreeing,
                o.restarts,
                o.seed,
                o.mixture_rank,
                o.tol_yc,
                o.tol_agree,
                o.modes,
                o.max_iters,
                o.lbfgs_memory,
                pens
            );
        }
    }
    s
}

fn field<T: std::str::FromStr>(v: &str, line: usize, name: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Cache(format!("line {line}: bad {name} `{v}`")))
}

pub fn parse(text: &str) -> Result<Vec<BoundCurve>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == MAGIC => {}
        Some((_, l)) => {
            return Err(Error::Cache(format!(
                "unsupported header `{l}`, expected `{MAGIC}`"
            )))
        }
        None => return Err(Error::Cache("empty file".into())),
    }
    let mut curves: Vec<BoundCurve> = Vec::new();
    for (i, line) in lines {
        let no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("k,") {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 15 {
            return Err(Error::Cache(format!("line {no}: expected 15 fields, got {}", f.len())));
        }
        let k: usize = field(f[0], no, "k")?;
        let sample = BoundSample {
            yc: field(f[1], no, "yc")?,
            delta_b: field(f[2], no, "delta_b")?,
            delta_raw: field(f[3], no, "delta_raw")?,
            feasible: field(f[4], no, "feasible")?,
            agreeing: field(f[5], no, "agreeing")?,
        };
        let options = BoundOptions {
            restarts: field(f[6], no, "restarts")?,
            seed: field(f[7], no, "seed")?,
            mixture_rank: field(f[8], no, "mixture_rank")?,
            tol_yc: field(f[9], no, "tol_yc")?,
            tol_agree: field(f[10], no, "tol_agree")?,
            modes: field(f[11], no, "modes")?,
            max_iters: field(f[12], no, "max_iters")?,
            lbfgs_memory: field(f[13], no, "lbfgs_memory")?,
            penalties: f[14]
                .split(';')
                .map(|p| field(p, no, "penalty"))
                .collect::<Result<_>>()?,
        };
        match curves.iter_mut().find(|c| c.k == k) {
            Some(c) => {
                if c.options != options {
                    return Err(Error::Cache(format!(
                        "line {no}: optimizer settings differ within curve k={k}"
                    )));
                }
                if c.samples.last().is_some_and(|s| s.yc >= sample.yc) {
                    return Err(Error::Cache(format!("line {no}: y_c not increasing")));
                }
                c.samples.push(sample);
            }
            None => curves.push(BoundCurve {
                k,
                samples: vec![sample],
                options,
            }),
        }
    }
    if curves.is_empty() {
        return Err(Error::Cache("no samples".into()));
    }
    curves.sort_by_key(|c| c.k);
    Ok(curves)
}

pub fn save(path: &Path, curves: &[BoundCurve]) -> Result<()> {
    std::fs::write(path, to_string(curves))
        .map_err(|e| Error::Cache(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<Vec<BoundCurve>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Cache(format!("{}: {e}", path.display())))?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let curve = BoundCurve {
            k: 3,
            samples: vec![
                BoundSample {
                    yc: 0.0,
                    delta_b: 0.1234567890123,
                    delta_raw: 0.2,
                    feasible: 60,
                    agreeing: 7,
                },
                BoundSample {
                    yc: 0.06,
                    delta_b: 1.0 / 3.0,
                    delta_raw: 1.0 / 3.0,
                    feasible: 64,
                    agreeing: 3,
                },
            ],
            options: BoundOptions::default(),
        };
        let text = to_string(std::slice::from_ref(&curve));
        assert_eq!(parse(&text).unwrap(), vec![curve]);
        assert!(parse("# spinwave-bounds v0\n").is_err());
    }
}
