//! Map exchange in the portable PGM + YAML format.
//!
//! A map is a binary `P5` PGM image plus a YAML sidecar carrying metric
//! metadata (`resolution`, `origin`, thresholds). Pixel convention:
//! 254 = free, 0 = occupied, 205 = unknown, with image row 0 at the *top*
//! (highest grid row), so grids round-trip through standard image viewers.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::grid::{Cell, CellState, OccupancyGrid, Pose};
use crate::scalar::Scalar;

/// Occupancy probability above which a pixel counts as occupied.
pub const OCCUPIED_THRESH: f64 = 0.65;
/// Occupancy probability below which a pixel counts as free.
pub const FREE_THRESH: f64 = 0.196;

pub const PX_FREE: u8 = 254;
pub const PX_OCCUPIED: u8 = 0;
pub const PX_UNKNOWN: u8 = 205;

#[derive(Debug, Error)]
pub enum MapIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("value error: {0}")]
    Value(String),
}

/// Contents of the YAML sidecar.
#[derive(Clone, Debug, PartialEq)]
pub struct MapYaml {
    pub image: String,
    pub resolution: f64,
    /// World pose of the lower-left map corner: `[x, y, theta]`.
    pub origin: [f64; 3],
    pub negate: bool,
    pub occupied_thresh: f64,
    pub free_thresh: f64,
}

impl MapYaml {
    pub fn to_yaml_string(&self) -> String {
        format!(
            "image: {}\nresolution: {}\norigin: [{}, {}, {}]\nnegate: {}\noccupied_thresh: {}\nfree_thresh: {}\n",
            self.image,
            self.resolution,
            self.origin[0],
            self.origin[1],
            self.origin[2],
            if self.negate { 1 } else { 0 },
            self.occupied_thresh,
            self.free_thresh,
        )
    }
}

/// Parses the six-key map YAML. Unknown keys are ignored; `#` starts a
/// comment anywhere on a line.
pub fn parse_map_yaml(text: &str) -> Result<MapYaml, MapIoError> {
    let mut image = None;
    let mut resolution = None;
    let mut origin = None;
    let mut negate = None;
    let mut occupied_thresh = None;
    let mut free_thresh = None;

    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| MapIoError::Parse(format!("expected `key: value`, got {raw:?}")))?;
        let key = key.trim();
        let value = value.trim();
        let bad_num =
            |k: &str| MapIoError::Parse(format!("key {k}: expected a number, got {value:?}"));
        match key {
            "image" => image = Some(value.to_string()),
            "resolution" => resolution = Some(value.parse().map_err(|_| bad_num(key))?),
            "origin" => {
                let inner = value
                    .strip_prefix('[')
                    .and_then(|v| v.strip_suffix(']'))
                    .ok_or_else(|| {
                        MapIoError::Parse(format!("origin: expected [x, y, theta], got {value:?}"))
                    })?;
                let parts: Vec<f64> = inner
                    .split(',')
                    .map(|p| p.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad_num(key))?;
                if parts.len() != 3 {
                    return Err(MapIoError::Parse(format!(
                        "origin: expected 3 components, got {}",
                        parts.len()
                    )));
                }
                origin = Some([parts[0], parts[1], parts[2]]);
            }
            "negate" => {
                negate = Some(match value {
                    "0" | "false" => false,
                    "1" | "true" => true,
                    _ => return Err(MapIoError::Parse(format!("negate: got {value:?}"))),
                })
            }
            "occupied_thresh" => occupied_thresh = Some(value.parse().map_err(|_| bad_num(key))?),
            "free_thresh" => free_thresh = Some(value.parse().map_err(|_| bad_num(key))?),
            _ => {}
        }
    }

    let missing = |k: &str| MapIoError::Parse(format!("missing required key `{k}`"));
    Ok(MapYaml {
        image: image.ok_or_else(|| missing("image"))?,
        resolution: resolution.ok_or_else(|| missing("resolution"))?,
        origin: origin.ok_or_else(|| missing("origin"))?,
        negate: negate.unwrap_or(false),
        occupied_thresh: occupied_thresh.unwrap_or(OCCUPIED_THRESH),
        free_thresh: free_thresh.unwrap_or(FREE_THRESH),
    })
}

fn is_pgm_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\r' | b'\n')
}

/// Reads one PGM header token starting at `pos`, skipping whitespace and
/// `#`-to-newline comments. Returns the token and the position after it.
fn pgm_token(data: &[u8], mut pos: usize) -> Result<(&[u8], usize), MapIoError> {
    loop {
        while pos < data.len() && is_pgm_ws(data[pos]) {
            pos += 1;
        }
        if pos < data.len() && data[pos] == b'#' {
            while pos < data.len() && data[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        break;
    }
    let start = pos;
    while pos < data.len() && !is_pgm_ws(data[pos]) && data[pos] != b'#' {
        pos += 1;
    }
    if start == pos {
        return Err(MapIoError::Parse("unexpected end of PGM header".into()));
    }
    Ok((&data[start..pos], pos))
}

fn pgm_uint(data: &[u8], pos: usize) -> Result<(usize, usize), MapIoError> {
    let (tok, next) = pgm_token(data, pos)?;
    let s = std::str::from_utf8(tok)
        .map_err(|_| MapIoError::Parse("non-ascii PGM header token".into()))?;
    let v = s
        .parse()
        .map_err(|_| MapIoError::Parse(format!("expected integer in PGM header, got {s:?}")))?;
    Ok((v, next))
}

/// Decodes a binary PGM into `(width, height, raster)`, raster row 0 first
/// (top of the image).
pub fn decode_pgm(data: &[u8]) -> Result<(usize, usize, Vec<u8>), MapIoError> {
    let (magic, pos) = pgm_token(data, 0)?;
    if magic != b"P5" {
        return Err(MapIoError::Parse(format!(
            "unsupported PGM magic {:?} (only binary P5 is supported)",
            String::from_utf8_lossy(magic)
        )));
    }
    let (width, pos) = pgm_uint(data, pos)?;
    let (height, pos) = pgm_uint(data, pos)?;
    let (maxval, pos) = pgm_uint(data, pos)?;
    if maxval != 255 {
        return Err(MapIoError::Parse(format!(
            "unsupported PGM maxval {maxval} (expected 255)"
        )));
    }
    if width == 0 || height == 0 {
        return Err(MapIoError::Parse("empty PGM image".into()));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= data.len() || !is_pgm_ws(data[pos]) {
        return Err(MapIoError::Parse("missing raster separator".into()));
    }
    let raster = &data[pos + 1..];
    let expected = width * height;
    if raster.len() < expected {
        return Err(MapIoError::Parse(format!(
            "truncated raster: expected {expected} bytes, got {}",
            raster.len()
        )));
    }
    Ok((width, height, raster[..expected].to_vec()))
}

/// Encodes a grid as binary PGM bytes (row flip included).
pub fn encode_pgm<S: Scalar>(grid: &OccupancyGrid<S>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", grid.width(), grid.height()).into_bytes();
    for row in (0..grid.height()).rev() {
        for col in 0..grid.width() {
            out.push(match grid.get(Cell::new(row, col)) {
                CellState::Free => PX_FREE,
                CellState::Occupied => PX_OCCUPIED,
                CellState::Unknown => PX_UNKNOWN,
            });
        }
    }
    out
}

/// Classifies a pixel using the sidecar thresholds. Pixels in the ambiguous
/// band are accepted only at the canonical unknown value; anything else in
/// the band cannot be represented in a ternary map and is a `Value` error.
pub fn classify_pixel(px: u8, yaml: &MapYaml) -> Result<CellState, MapIoError> {
    let occ = if yaml.negate {
        f64::from(px) / 255.0
    } else {
        (255.0 - f64::from(px)) / 255.0
    };
    if occ > yaml.occupied_thresh {
        Ok(CellState::Occupied)
    } else if occ < yaml.free_thresh {
        Ok(CellState::Free)
    } else {
        let unknown_px = if yaml.negate { 255 - PX_UNKNOWN } else { PX_UNKNOWN };
        if px == unknown_px {
            Ok(CellState::Unknown)
        } else {
            Err(MapIoError::Value(format!(
                "non-ternary pixel value {px} (ambiguous between free and occupied)"
            )))
        }
    }
}

/// Builds a grid from decoded PGM raster plus sidecar metadata.
pub fn grid_from_raster<S: Scalar>(
    width: usize,
    height: usize,
    raster: &[u8],
    yaml: &MapYaml,
) -> Result<OccupancyGrid<S>, MapIoError> {
    if yaml.resolution <= 0.0 {
        return Err(MapIoError::Value(format!(
            "resolution must be positive, got {}",
            yaml.resolution
        )));
    }
    let origin = Pose::new(
        S::lit(yaml.origin[0]),
        S::lit(yaml.origin[1]),
        S::lit(yaml.origin[2]),
    );
    let mut grid =
        OccupancyGrid::new(width, height, S::lit(yaml.resolution), origin, CellState::Unknown);
    for (i, &px) in raster.iter().enumerate() {
        let img_row = i / width;
        let col = i % width;
        let row = height - 1 - img_row; // image row 0 is the top
        grid.set(Cell::new(row, col), classify_pixel(px, yaml)?);
    }
    Ok(grid)
}

/// Writes `stem.pgm` and `stem.yaml`; returns both paths.
pub fn save_map<S: Scalar>(
    grid: &OccupancyGrid<S>,
    stem: &Path,
) -> Result<(PathBuf, PathBuf), MapIoError> {
    let pgm_path = stem.with_extension("pgm");
    let yaml_path = stem.with_extension("yaml");
    let image = pgm_path
        .file_name()
        .ok_or_else(|| MapIoError::Value(format!("bad map stem {stem:?}")))?
        .to_string_lossy()
        .into_owned();
    let origin = grid.origin();
    let yaml = MapYaml {
        image,
        resolution: grid.resolution().as_f64(),
        origin: [origin.x.as_f64(), origin.y.as_f64(), origin.theta.as_f64()],
        negate: false,
        occupied_thresh: OCCUPIED_THRESH,
        free_thresh: FREE_THRESH,
    };
    fs::write(&pgm_path, encode_pgm(grid))?;
    fs::write(&yaml_path, yaml.to_yaml_string())?;
    Ok((pgm_path, yaml_path))
}

/// Loads a map given its YAML sidecar path; the image path in the sidecar
/// is resolved relative to the sidecar's directory.
pub fn load_map<S: Scalar>(yaml_path: &Path) -> Result<OccupancyGrid<S>, MapIoError> {
    let yaml = parse_map_yaml(&fs::read_to_string(yaml_path)?)?;
    let image_path = yaml_path
        .parent()
        .map(|d| d.join(&yaml.image))
        .unwrap_or_else(|| PathBuf::from(&yaml.image));
    let data = fs::read(&image_path)?;
    let (width, height, raster) = decode_pgm(&data)?;
    grid_from_raster(width, height, &raster, &yaml)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_yaml() -> MapYaml {
        MapYaml {
            image: "m.pgm".into(),
            resolution: 0.1,
            origin: [0.0, 0.0, 0.0],
            negate: false,
            occupied_thresh: OCCUPIED_THRESH,
            free_thresh: FREE_THRESH,
        }
    }

    #[test]
    fn encode_2x2_exact_bytes() {
        // grid rows: row 0 = [Free, Occupied], row 1 = [Unknown, Free];
        // the image stores row 1 first (top of image).
        let mut g: OccupancyGrid<f64> =
            OccupancyGrid::new(2, 2, 0.1, Pose::default(), CellState::Free);
        g.set(Cell::new(0, 1), CellState::Occupied);
        g.set(Cell::new(1, 0), CellState::Unknown);
        let bytes = encode_pgm(&g);
        let mut expected = b"P5\n2 2\n255\n".to_vec();
        expected.extend_from_slice(&[205, 254, 254, 0]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn decode_rejects_non_p5_magic() {
        let err = decode_pgm(b"P7\n2 2\n255\n\0\0\0\0").unwrap_err();
        assert!(matches!(err, MapIoError::Parse(_)), "got {err:?}");
        assert!(err.to_string().contains("P7"));
    }

    #[test]
    fn decode_rejects_wrong_maxval() {
        let err = decode_pgm(b"P5\n1 1\n65535\n\0\0").unwrap_err();
        assert!(matches!(err, MapIoError::Parse(_)));
    }

    #[test]
    fn decode_rejects_truncated_raster() {
        let err = decode_pgm(b"P5\n2 2\n255\n\0\0").unwrap_err();
        assert!(err.to_string().contains("truncated"));
    }

    #[test]
    fn decode_skips_header_comments() {
        let data = b"P5 # binary pgm\n# made by hand\n2 1\n255\n\xfe\x00";
        let (w, h, raster) = decode_pgm(data).unwrap();
        assert_eq!((w, h), (2, 1));
        assert_eq!(raster, vec![254, 0]);
    }

    #[test]
    fn classify_threshold_boundaries() {
        let y = default_yaml();
        // (255-89)/255 = 0.651 > 0.65 -> occupied; 90 lands in the band
        assert_eq!(classify_pixel(89, &y).unwrap(), CellState::Occupied);
        assert_eq!(classify_pixel(0, &y).unwrap(), CellState::Occupied);
        // (255-206)/255 = 0.192 < 0.196 -> free
        assert_eq!(classify_pixel(206, &y).unwrap(), CellState::Free);
        assert_eq!(classify_pixel(254, &y).unwrap(), CellState::Free);
        assert_eq!(classify_pixel(255, &y).unwrap(), CellState::Free);
        assert_eq!(classify_pixel(205, &y).unwrap(), CellState::Unknown);
    }

    #[test]
    fn classify_rejects_ambiguous_band() {
        let y = default_yaml();
        for px in [90u8, 128, 204] {
            let err = classify_pixel(px, &y).unwrap_err();
            assert!(
                matches!(err, MapIoError::Value(_)),
                "pixel {px} should be a value error"
            );
            assert!(err.to_string().contains("non-ternary"));
        }
    }

    #[test]
    fn classify_negate_flips_scale() {
        let y = MapYaml {
            negate: true,
            ..default_yaml()
        };
        assert_eq!(classify_pixel(255, &y).unwrap(), CellState::Occupied);
        assert_eq!(classify_pixel(0, &y).unwrap(), CellState::Free);
        assert_eq!(classify_pixel(50, &y).unwrap(), CellState::Unknown);
        assert!(classify_pixel(100, &y).is_err());
    }

    #[test]
    fn yaml_roundtrip() {
        let y = MapYaml {
            image: "corridor.pgm".into(),
            resolution: 0.05,
            origin: [-1.5, 2.0, 0.0],
            negate: false,
            occupied_thresh: OCCUPIED_THRESH,
            free_thresh: FREE_THRESH,
        };
        let text = y.to_yaml_string();
        assert_eq!(parse_map_yaml(&text).unwrap(), y);
    }

    #[test]
    fn yaml_missing_key_is_parse_error() {
        let err = parse_map_yaml("image: a.pgm\norigin: [0, 0, 0]\n").unwrap_err();
        assert!(err.to_string().contains("resolution"));
    }

    #[test]
    fn save_and_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let mut g: OccupancyGrid<f64> =
            OccupancyGrid::new(7, 5, 0.25, Pose::xy(-1.0, 0.5), CellState::Unknown);
        g.fill_rect(0, 0, 2, 3, CellState::Free);
        g.fill_rect(4, 5, 4, 6, CellState::Occupied);
        let (_pgm, yaml) = save_map(&g, &dir.path().join("world")).unwrap();
        let back: OccupancyGrid<f64> = load_map(&yaml).unwrap();
        assert_eq!(back, g);
    }

    proptest! {
        #[test]
        fn random_grid_roundtrips(
            width in 1usize..24,
            height in 1usize..24,
            seed in proptest::collection::vec(0u8..3, 1..576),
        ) {
            let dir = tempfile::tempdir().unwrap();
            let mut g: OccupancyGrid<f64> =
                OccupancyGrid::new(width, height, 0.1, Pose::default(), CellState::Unknown);
            for i in 0..(width * height) {
                let s = match seed[i % seed.len()] {
                    0 => CellState::Free,
                    1 => CellState::Occupied,
                    _ => CellState::Unknown,
                };
                let cell = g.cell_at(i);
                g.set(cell, s);
            }
            let (_pgm, yaml) = save_map(&g, &dir.path().join("m")).unwrap();
            let back: OccupancyGrid<f64> = load_map(&yaml).unwrap();
            prop_assert_eq!(back, g);
        }
    }
}
