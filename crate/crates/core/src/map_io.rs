//! Occupancy-grid loading and path/report output.
//!
//! Two map formats are accepted:
//!
//! - plain text: one row per line, `.` = free, `#` = obstacle;
//! - PGM (`P2` ASCII or `P5` binary, maxval <= 255): intensity < 128 is an
//!   obstacle, matching the black-is-blocked convention of perception dumps.
//!
//! The shared coordinate convention is `(x, y) = (column, row)` with the
//! origin at the top-left of the raster; every other module uses it too.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::vehicle::Pose;

/// A grid coordinate, `(column, row)` from the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    /// Straight-line distance between cell centers.
    pub fn euclidean(self, other: Cell) -> f64 {
        let dx = f64::from(self.x - other.x);
        let dy = f64::from(self.y - other.y);
        dx.hypot(dy)
    }

    pub fn manhattan(self, other: Cell) -> f64 {
        f64::from((self.x - other.x).abs() + (self.y - other.y).abs())
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(i32, i32)> for Cell {
    fn from((x, y): (i32, i32)) -> Self {
        Cell { x, y }
    }
}

/// Binary obstacle raster. `true` cells are obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cells: Vec<bool>,
    /// Meters per cell; only used when converting metrics for reports.
    pub resolution: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("map is empty")]
    EmptyGrid,
    #[error("cannot write path: empty pose list")]
    EmptyPath,
}

impl OccupancyGrid {
    /// Builds a grid from a row-major obstacle raster.
    pub fn new(width: usize, height: usize, cells: Vec<bool>) -> Result<Self, MapError> {
        if width == 0 || height == 0 {
            return Err(MapError::EmptyGrid);
        }
        assert_eq!(cells.len(), width * height, "raster size mismatch");
        Ok(OccupancyGrid {
            width,
            height,
            cells,
            resolution: 1.0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    /// Row-major index of an in-bounds cell.
    pub fn index(&self, c: Cell) -> usize {
        debug_assert!(self.in_bounds(c));
        c.y as usize * self.width + c.x as usize
    }

    /// True when the cell holds an obstacle. Out-of-bounds queries panic in
    /// debug builds; callers filter bounds first.
    pub fn is_obstacle(&self, c: Cell) -> bool {
        self.cells[self.index(c)]
    }

    pub fn obstacle_count(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    /// All obstacle cells in raster order.
    pub fn obstacle_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if self.cells[y * self.width + x] {
                    out.push(Cell::new(x as i32, y as i32));
                }
            }
        }
        out
    }

    /// Parses the plain-text format. Any character other than `.`, `#` or
    /// row-terminating whitespace is rejected.
    pub fn from_text(text: &str) -> Result<Self, MapError> {
        let mut rows: Vec<Vec<bool>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                // Blank lines are only tolerated after the raster.
                continue;
            }
            if !rows.is_empty() && rows.len() != i {
                return Err(MapError::Parse {
                    line: i + 1,
                    msg: "blank line inside raster".into(),
                });
            }
            let mut row = Vec::with_capacity(line.len());
            for ch in line.chars() {
                match ch {
                    '.' => row.push(false),
                    '#' => row.push(true),
                    other => {
                        return Err(MapError::Parse {
                            line: i + 1,
                            msg: format!("illegal character {other:?}"),
                        })
                    }
                }
            }
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(MapError::Parse {
                        line: i + 1,
                        msg: format!("ragged row: {} cells, expected {}", row.len(), first.len()),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(MapError::EmptyGrid);
        }
        let width = rows[0].len();
        if width == 0 {
            return Err(MapError::EmptyGrid);
        }
        let height = rows.len();
        let cells = rows.into_iter().flatten().collect();
        OccupancyGrid::new(width, height, cells)
    }

    /// Renders the grid in the plain-text format (round-trips with
    /// [`OccupancyGrid::from_text`]).
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.cells[y * self.width + x] { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    /// Parses a P2/P5 PGM image; intensity < 128 marks an obstacle.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self, MapError> {
        let mut lexer = PgmLexer::new(bytes);
        let magic = lexer.token()?;
        let binary = match magic.as_str() {
            "P2" => false,
            "P5" => true,
            other => {
                return Err(MapError::Parse {
                    line: 1,
                    msg: format!("unsupported PGM magic {other:?}"),
                })
            }
        };
        let width: usize = lexer.number()?;
        let height: usize = lexer.number()?;
        let maxval: usize = lexer.number()?;
        if maxval == 0 || maxval > 255 {
            return Err(MapError::Parse {
                line: lexer.line,
                msg: format!("unsupported maxval {maxval}"),
            });
        }
        if width == 0 || height == 0 {
            return Err(MapError::EmptyGrid);
        }
        let n = width * height;
        let mut cells = Vec::with_capacity(n);
        if binary {
            // Exactly one whitespace byte separates the header from raster data.
            let raster = lexer.rest_after_single_whitespace()?;
            if raster.len() < n {
                return Err(MapError::Parse {
                    line: lexer.line,
                    msg: format!("raster truncated: {} of {} bytes", raster.len(), n),
                });
            }
            cells.extend(raster[..n].iter().map(|&b| (b as usize) < 128));
        } else {
            for _ in 0..n {
                let v: usize = lexer.number()?;
                if v > maxval {
                    return Err(MapError::Parse {
                        line: lexer.line,
                        msg: format!("sample {v} exceeds maxval {maxval}"),
                    });
                }
                cells.push(v < 128);
            }
        }
        OccupancyGrid::new(width, height, cells)
    }
}

/// Whitespace/comment-aware PGM header tokenizer.
struct PgmLexer<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> PgmLexer<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        PgmLexer { bytes, pos: 0, line: 1 }
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                if b == b'\n' {
                    self.line += 1;
                }
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<String, MapError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(MapError::Parse {
                line: self.line,
                msg: "unexpected end of header".into(),
            });
        }
        String::from_utf8(self.bytes[start..self.pos].to_vec()).map_err(|_| MapError::Parse {
            line: self.line,
            msg: "non-UTF8 header token".into(),
        })
    }

    fn number(&mut self) -> Result<usize, MapError> {
        let tok = self.token()?;
        tok.parse().map_err(|_| MapError::Parse {
            line: self.line,
            msg: format!("expected integer, got {tok:?}"),
        })
    }

    fn rest_after_single_whitespace(&mut self) -> Result<&'a [u8], MapError> {
        if self.pos >= self.bytes.len() || !self.bytes[self.pos].is_ascii_whitespace() {
            return Err(MapError::Parse {
                line: self.line,
                msg: "missing separator before binary raster".into(),
            });
        }
        self.pos += 1;
        Ok(&self.bytes[self.pos..])
    }
}

/// Loads a grid, sniffing PGM by its magic bytes and falling back to the
/// text format.
pub fn load_grid(path: impl AsRef<Path>) -> Result<OccupancyGrid, MapError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| MapError::Io {
        path: path.display().to_string(),
        source,
    })?;
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        return OccupancyGrid::from_pgm(&bytes);
    }
    let text = String::from_utf8(bytes).map_err(|_| MapError::Parse {
        line: 1,
        msg: "map file is neither PGM nor UTF-8 text".into(),
    })?;
    OccupancyGrid::from_text(&text)
}

/// Writes one `x,y,heading` line per pose, fixed 6-decimal formatting.
pub fn write_path_csv(poses: &[Pose], path: impl AsRef<Path>) -> Result<(), MapError> {
    if poses.is_empty() {
        return Err(MapError::EmptyPath);
    }
    let path = path.as_ref();
    let mut out = String::new();
    for p in poses {
        out.push_str(&format!("{:.6},{:.6},{:.6}\n", p.x, p.y, p.psi));
    }
    let mut file = fs::File::create(path).map_err(|source| MapError::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(out.as_bytes()).map_err(|source| MapError::Io {
        path: path.display().to_string(),
        source,
    })
}
