//! Binary image denoising with one network storing every image.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{distort, pixel_error};
use super::{mean, trial_seed, Hardware};
use crate::network::{train_hebbian, TrialReport};
use crate::{Error, Result};

pub const IMAGE_SIDE: usize = 10;

/// Bundled 10x10 glyph fixtures (`H`, `X`, `L`), row-major.
pub fn fixture_images() -> Vec<(String, Vec<bool>)> {
    [
        ("glyph_h", include_str!("../../data/images/glyph_h.txt")),
        ("glyph_x", include_str!("../../data/images/glyph_x.txt")),
        ("glyph_l", include_str!("../../data/images/glyph_l.txt")),
    ]
    .into_iter()
    .map(|(name, text)| (name.to_string(), parse_image(text).expect("bundled fixture is a valid grid")))
    .collect()
}

/// Parses a grid of `'0'`/`'1'` rows, `IMAGE_SIDE` rows of `IMAGE_SIDE`
/// columns. Lines starting with `#` are skipped.
pub fn parse_image(text: &str) -> Result<Vec<bool>> {
    let rows: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    if rows.len() != IMAGE_SIDE {
        return Err(Error::Parse { line: text.lines().count(), msg: format!("expected {IMAGE_SIDE} rows, found {}", rows.len()) });
    }
    let mut out = Vec::with_capacity(IMAGE_SIDE * IMAGE_SIDE);
    for (line, row) in rows {
        if row.len() != IMAGE_SIDE {
            return Err(Error::Parse { line, msg: format!("expected {IMAGE_SIDE} columns, found {}", row.len()) });
        }
        for c in row.chars() {
            match c {
                '0' => out.push(false),
                '1' => out.push(true),
                other => return Err(Error::Parse { line, msg: format!("'{other}' is not a pixel") }),
            }
        }
    }
    Ok(out)
}

pub fn render_image(bits: &[bool]) -> String {
    bits.chunks(IMAGE_SIDE)
        .map(|row| row.iter().map(|&b| if b { '#' } else { '.' }).collect::<String>() + "\n")
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTrial {
    pub level: f64,
    pub image: usize,
    pub pixel_error: usize,
    pub report: Option<TrialReport>,
    pub fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub distortion: f64,
    pub trials: usize,
    pub mean_pixel_error: f64,
    pub max_pixel_error: usize,
    pub perfect_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageOutcome {
    pub levels: Vec<LevelStats>,
    pub trials: Vec<ImageTrial>,
}

/// Trains one network on all `images`, then for each distortion level runs
/// `trials_per_level` trials cycling through the images.
pub fn image_experiment(
    images: &[Vec<bool>],
    levels: &[f64],
    trials_per_level: usize,
    seed: u64,
    normalize: bool,
    hw: &Hardware,
) -> Result<ImageOutcome> {
    let n = images.first().map(Vec::len).ok_or_else(|| Error::param("no images given"))?;
    if images.iter().any(|im| im.len() != n) {
        return Err(Error::param("images differ in size"));
    }
    if let Some(l) = levels.iter().find(|l| !(0.0..=0.5).contains(*l)) {
        return Err(Error::param(format!("distortion level {l} outside [0, 0.5]")));
    }
    if trials_per_level == 0 {
        return Err(Error::param("at least one trial per level is required"));
    }
    let weights = train_hebbian(images, hw.w_mag, normalize)?;
    let jobs: Vec<(usize, usize)> =
        (0..levels.len()).flat_map(|l| (0..trials_per_level).map(move |t| (l, t))).collect();
    let trials: Vec<ImageTrial> = jobs
        .into_par_iter()
        .map(|(l, t)| {
            let image = t % images.len();
            let s = trial_seed(seed, (l * trials_per_level + t) as u64);
            let input = distort(&images[image], levels[l], s)?;
            match hw.run_trial(weights.clone(), Some(&input)) {
                Ok(r) => Ok(ImageTrial {
                    level: levels[l],
                    image,
                    pixel_error: pixel_error(&r.final_bits, &images[image]),
                    report: Some(r),
                    fault: None,
                }),
                Err(e @ Error::NumericFault { .. }) => Ok(ImageTrial {
                    level: levels[l],
                    image,
                    pixel_error: n / 2,
                    report: None,
                    fault: Some(e.to_string()),
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let levels = levels
        .iter()
        .enumerate()
        .map(|(l, &distortion)| {
            let at = &trials[l * trials_per_level..(l + 1) * trials_per_level];
            LevelStats {
                distortion,
                trials: at.len(),
                mean_pixel_error: mean(at.iter().map(|t| t.pixel_error as f64)),
                max_pixel_error: at.iter().map(|t| t.pixel_error).max().unwrap_or(0),
                perfect_rate: at.iter().filter(|t| t.pixel_error == 0).count() as f64 / at.len() as f64,
            }
        })
        .collect();
    Ok(ImageOutcome { levels, trials })
}
