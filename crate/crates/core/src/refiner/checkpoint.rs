//! Versioned text checkpoint for `(theta, phi)`.
//!
//! ```text
//! navsim-refiner 1
//! theta 12 8
//! <12 rows of 8 numbers>
//! phi 1249
//! <one number per line>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::world::NUM_CLASSES;

use super::fusion::{FusionParams, PHI_LEN};
use super::model::{SegModelParams, THETA_ROWS};

const MAGIC: &str = "navsim-refiner";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub theta: SegModelParams,
    pub phi: FusionParams,
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut s = format!("{MAGIC} {VERSION}\ntheta {THETA_ROWS} {NUM_CLASSES}\n");
        for row in self.theta.theta.chunks(NUM_CLASSES) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(" "));
            s.push('\n');
        }
        let _ = writeln!(s, "phi {PHI_LEN}");
        for v in &self.phi.phi {
            let _ = writeln!(s, "{v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| {
            lines
                .by_ref()
                .find(|(_, l)| !l.is_empty())
                .ok_or_else(|| Error::parse(0, format!("unexpected end of checkpoint, expected {what}")))
        };

        let (ln, header) = next("header")?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(Error::parse(ln, "not a refiner checkpoint"));
        }
        match parts.next().and_then(|v| v.parse::<u32>().ok()) {
            Some(VERSION) => {}
            Some(v) => return Err(Error::parse(ln, format!("unsupported checkpoint version {v}"))),
            None => return Err(Error::parse(ln, "missing checkpoint version")),
        }

        let (ln, shape) = next("theta shape")?;
        let dims: Vec<&str> = shape.split_whitespace().collect();
        if dims != ["theta", &THETA_ROWS.to_string(), &NUM_CLASSES.to_string()] {
            return Err(Error::parse(
                ln,
                format!("expected 'theta {THETA_ROWS} {NUM_CLASSES}', found '{shape}'"),
            ));
        }
        let mut theta = Vec::with_capacity(THETA_ROWS * NUM_CLASSES);
        for _ in 0..THETA_ROWS {
            let (ln, row) = next("theta row")?;
            let vals = parse_numbers(ln, row)?;
            if vals.len() != NUM_CLASSES {
                return Err(Error::parse(ln, format!("expected {NUM_CLASSES} values, found {}", vals.len())));
            }
            theta.extend(vals);
        }

        let (ln, shape) = next("phi shape")?;
        if shape.split_whitespace().collect::<Vec<_>>() != ["phi", &PHI_LEN.to_string()] {
            return Err(Error::parse(ln, format!("expected 'phi {PHI_LEN}', found '{shape}'")));
        }
        let mut phi = Vec::with_capacity(PHI_LEN);
        while phi.len() < PHI_LEN {
            let (ln, row) = next("phi value")?;
            phi.extend(parse_numbers(ln, row)?);
        }
        if phi.len() != PHI_LEN {
            return Err(Error::parse(0, format!("phi has {} values, expected {PHI_LEN}", phi.len())));
        }
        Ok(Self {
            theta: SegModelParams::from_vec(theta)?,
            phi: FusionParams::from_vec(phi)?,
        })
    }
}

fn parse_numbers(ln: usize, row: &str) -> Result<Vec<f64>> {
    row.split_whitespace()
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::parse(ln, format!("bad number '{t}'"))),
        })
        .collect()
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    std::fs::write(path.as_ref(), ckpt.to_text()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path, e))?;
    Checkpoint::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = SegModelParams::from_vec((0..THETA_ROWS * NUM_CLASSES).map(|_| rng.gen::<f64>() - 0.5).collect()).unwrap();
        let ck = Checkpoint {
            theta,
            phi: FusionParams::init(&mut rng),
        };
        assert_eq!(Checkpoint::parse(&ck.to_text()).unwrap(), ck);
    }

    #[test]
    fn wrong_version_and_shape_are_rejected() {
        let ck = Checkpoint {
            theta: SegModelParams::zeros(),
            phi: FusionParams::zeros(),
        };
        let text = ck.to_text();
        let err = Checkpoint::parse(&text.replacen("navsim-refiner 1", "navsim-refiner 9", 1)).unwrap_err();
        assert!(err.to_string().contains("version 9"));
        let err = Checkpoint::parse(&text.replacen("theta 12 8", "theta 11 8", 1)).unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
        assert!(Checkpoint::parse(&text[..text.len() / 2]).is_err());
    }
}
