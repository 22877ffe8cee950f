use std::fmt;
use std::fs;
use std::path::Path;

use super::PotentialError;

const MAGIC: &str = "BREATHER-MASK 1";

/// A rasterized measurable set `A` inside the unit cell `[-1/2, 1/2]^d`.
///
/// Cell `(i_1, .., i_d)` covers `prod_k [-1/2 + i_k/R, -1/2 + (i_k+1)/R)`,
/// stored row-major with axis 0 slowest.
#[derive(Clone, PartialEq, Eq)]
pub struct BaseSet {
    dimension: usize,
    resolution: usize,
    mask: Vec<bool>,
    filled: usize,
}

impl BaseSet {
    pub fn new(dimension: usize, resolution: usize, mask: Vec<bool>) -> Result<Self, PotentialError> {
        if dimension == 0 {
            return Err(PotentialError::Mask("dimension must be positive".into()));
        }
        if resolution == 0 {
            return Err(PotentialError::Mask("resolution must be positive".into()));
        }
        let expected = resolution
            .checked_pow(dimension as u32)
            .ok_or_else(|| PotentialError::Mask("mask size overflows".into()))?;
        if mask.len() != expected {
            return Err(PotentialError::Mask(format!(
                "expected {expected} mask cells for d={dimension}, R={resolution}, found {}",
                mask.len()
            )));
        }
        let filled = mask.iter().filter(|&&b| b).count();
        if filled == 0 {
            return Err(PotentialError::Mask("empty mask: the base set must have positive volume".into()));
        }
        if 2 * filled > expected {
            return Err(PotentialError::Mask(format!(
                "mask volume {filled}/{expected} exceeds 1/2 of the unit cell"
            )));
        }
        Ok(Self { dimension, resolution, mask, filled })
    }

    /// Parses a mask from a string of `0`/`1` characters; whitespace is ignored.
    pub fn from_bits(dimension: usize, resolution: usize, bits: &str) -> Result<Self, PotentialError> {
        let mut mask = Vec::with_capacity(bits.len());
        for c in bits.chars().filter(|c| !c.is_whitespace()) {
            match c {
                '0' => mask.push(false),
                '1' => mask.push(true),
                other => {
                    return Err(PotentialError::Mask(format!("invalid mask character {other:?}")));
                }
            }
        }
        Self::new(dimension, resolution, mask)
    }

    pub fn parse(text: &str) -> Result<Self, PotentialError> {
        let mut lines = text.lines();
        let magic = lines
            .next()
            .ok_or_else(|| PotentialError::Mask("missing header line".into()))?;
        if magic.trim() != MAGIC {
            return Err(PotentialError::Mask(format!("bad header {:?}, expected {MAGIC:?}", magic.trim())));
        }
        let dims = lines
            .next()
            .ok_or_else(|| PotentialError::Mask("missing `<d> <R>` line".into()))?;
        let fields: Vec<&str> = dims.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(PotentialError::Mask(format!("expected `<d> <R>`, found {:?}", dims.trim())));
        }
        let parse_field = |s: &str, what: &str| {
            s.parse::<usize>()
                .map_err(|_| PotentialError::Mask(format!("invalid {what} {s:?}")))
        };
        let dimension = parse_field(fields[0], "dimension")?;
        let resolution = parse_field(fields[1], "resolution")?;
        let rest: String = lines.collect::<Vec<_>>().join("\n");
        Self::from_bits(dimension, resolution, &rest)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PotentialError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| PotentialError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Serializes to the mask file format, one axis-0 slab per line.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("{MAGIC}\n{} {}\n", self.dimension, self.resolution);
        for row in self.mask.chunks(self.resolution) {
            out.extend(row.iter().map(|&b| if b { '1' } else { '0' }));
            out.push('\n');
        }
        out
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Lebesgue measure of `A` as an exact fraction `(filled cells, total cells)`.
    pub fn volume_fraction(&self) -> (usize, usize) {
        (self.filled, self.mask.len())
    }

    pub fn volume(&self) -> f64 {
        self.filled as f64 / self.mask.len() as f64
    }

    /// Whether `y` (a point of R^d) lies in a true cell of the mask.
    pub fn contains(&self, y: &[f64]) -> bool {
        debug_assert_eq!(y.len(), self.dimension);
        let r = self.resolution as f64;
        let mut flat = 0usize;
        for &coord in y {
            let cell = ((coord + 0.5) * r).floor();
            if !(0.0..r).contains(&cell) {
                return false;
            }
            flat = flat * self.resolution + cell as usize;
        }
        self.mask[flat]
    }

    /// The single-site potential `u(t, x) = 1_{tA}(x)`.
    ///
    /// `t = 0` gives the empty set (the origin is a null set and ignored).
    pub fn indicator(&self, t: f64, x: &[f64]) -> bool {
        if t <= 0.0 {
            return false;
        }
        let mut scaled = [0.0f64; 8];
        if x.len() <= scaled.len() {
            for (s, &xi) in scaled.iter_mut().zip(x) {
                *s = xi / t;
            }
            self.contains(&scaled[..x.len()])
        } else {
            let y: Vec<f64> = x.iter().map(|xi| xi / t).collect();
            self.contains(&y)
        }
    }
}

impl fmt::Debug for BaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaseSet")
            .field("dimension", &self.dimension)
            .field("resolution", &self.resolution)
            .field("volume", &format_args!("{}/{}", self.filled, self.mask.len()))
            .finish()
    }
}
