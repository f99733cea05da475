//! Ternary occupancy grid, coordinate transforms, and cell bookkeeping.
//!
//! Grids are plain value objects: row-major cell storage, a metric
//! resolution, and a world-frame origin at the corner of cell (0,0).
//! Row index grows with +y, column index with +x.

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// State of one grid cell. Ground-truth maps carry only `Free`/`Occupied`;
/// observed maps start `Unknown` and converge toward the truth.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

impl CellState {
    pub fn as_char(self) -> char {
        match self {
            CellState::Free => 'F',
            CellState::Occupied => 'O',
            CellState::Unknown => 'U',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'F' => Some(CellState::Free),
            'O' => Some(CellState::Occupied),
            'U' => Some(CellState::Unknown),
            _ => None,
        }
    }
}

/// Grid cell index as (row, col).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

/// Planar robot pose in world coordinates (meters, radians).
#[derive(Clone, Copy, PartialEq, Debug, Default, Serialize, Deserialize)]
pub struct Pose<S> {
    pub x: S,
    pub y: S,
    pub theta: S,
}

impl<S: Scalar> Pose<S> {
    pub fn new(x: S, y: S, theta: S) -> Self {
        Pose { x, y, theta }
    }

    pub fn xy(x: S, y: S) -> Self {
        Pose {
            x,
            y,
            theta: S::zero(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("point ({x}, {y}) lies outside the grid extent")]
    OutOfBounds { x: f64, y: f64 },
    #[error("grid dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("resolution must be positive, got {0}")]
    InvalidResolution(f64),
}

/// 2D ternary occupancy grid with metric resolution.
#[derive(Clone, PartialEq, Debug)]
pub struct OccupancyGrid<S> {
    width: usize,
    height: usize,
    resolution: S,
    origin: Pose<S>,
    cells: Vec<CellState>,
}

impl<S: Scalar> OccupancyGrid<S> {
    /// `width` columns by `height` rows, every cell set to `fill`.
    pub fn new(width: usize, height: usize, resolution: S, origin: Pose<S>, fill: CellState) -> Self {
        assert!(resolution > S::zero(), "resolution must be positive");
        assert!(width > 0 && height > 0, "grid must be non-empty");
        OccupancyGrid {
            width,
            height,
            resolution,
            origin,
            cells: vec![fill; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn resolution(&self) -> S {
        self.resolution
    }

    pub fn origin(&self) -> Pose<S> {
        self.origin
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    /// Row-major linear index of a cell.
    pub fn index(&self, cell: Cell) -> usize {
        debug_assert!(self.in_bounds(cell));
        cell.row * self.width + cell.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.width, index % self.width)
    }

    pub fn get(&self, cell: Cell) -> CellState {
        self.cells[self.index(cell)]
    }

    pub fn set(&mut self, cell: Cell, state: CellState) {
        let i = self.index(cell);
        self.cells[i] = state;
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }

    /// Total metric area of cells in `state`, in square meters.
    pub fn area_of(&self, state: CellState) -> S {
        S::from_count(self.count(state)) * self.resolution * self.resolution
    }

    /// Metric extent (width, height) in meters.
    pub fn extent(&self) -> (S, S) {
        (
            S::from_count(self.width) * self.resolution,
            S::from_count(self.height) * self.resolution,
        )
    }

    /// Cell containing the world point, or `OutOfBounds`.
    pub fn world_to_cell(&self, pose: &Pose<S>) -> Result<Cell, GridError> {
        let col = ((pose.x - self.origin.x) / self.resolution).floor();
        let row = ((pose.y - self.origin.y) / self.resolution).floor();
        if col < S::zero()
            || row < S::zero()
            || col >= S::from_count(self.width)
            || row >= S::from_count(self.height)
        {
            return Err(GridError::OutOfBounds {
                x: pose.x.as_f64(),
                y: pose.y.as_f64(),
            });
        }
        Ok(Cell::new(
            row.to_usize().expect("row index"),
            col.to_usize().expect("col index"),
        ))
    }

    /// World coordinates of the cell center.
    pub fn cell_to_world(&self, cell: Cell) -> Pose<S> {
        let half = S::lit(0.5);
        Pose::xy(
            self.origin.x + (S::from_count(cell.col) + half) * self.resolution,
            self.origin.y + (S::from_count(cell.row) + half) * self.resolution,
        )
    }

    /// 4-neighbors in fixed (up, down, left, right) order, bounds-checked.
    pub fn neighbors4(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        let deltas: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        deltas.into_iter().filter_map(move |(dr, dc)| {
            let r = cell.row as isize + dr;
            let c = cell.col as isize + dc;
            if r >= 0 && c >= 0 && (r as usize) < self.height && (c as usize) < self.width {
                Some(Cell::new(r as usize, c as usize))
            } else {
                None
            }
        })
    }

    /// 8-neighbors in row-major delta order, bounds-checked.
    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        let deltas: [(isize, isize); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        deltas.into_iter().filter_map(move |(dr, dc)| {
            let r = cell.row as isize + dr;
            let c = cell.col as isize + dc;
            if r >= 0 && c >= 0 && (r as usize) < self.height && (c as usize) < self.width {
                Some(Cell::new(r as usize, c as usize))
            } else {
                None
            }
        })
    }

    /// Marks every cell of the axis-aligned cell rectangle (rows and cols
    /// inclusive) with `state`. Clips to bounds.
    pub fn fill_rect(&mut self, r0: usize, c0: usize, r1: usize, c1: usize, state: CellState) {
        for r in r0..=r1.min(self.height.saturating_sub(1)) {
            for c in c0..=c1.min(self.width.saturating_sub(1)) {
                self.set(Cell::new(r, c), state);
            }
        }
    }

    /// Cell rows as compact `F`/`O`/`U` strings, row 0 first.
    pub fn rows_as_strings(&self) -> Vec<String> {
        (0..self.height)
            .map(|r| {
                (0..self.width)
                    .map(|c| self.get(Cell::new(r, c)).as_char())
                    .collect()
            })
            .collect()
    }

    pub fn from_rows(
        rows: &[String],
        resolution: S,
        origin: Pose<S>,
    ) -> Result<Self, GridError> {
        if resolution <= S::zero() {
            return Err(GridError::InvalidResolution(resolution.as_f64()));
        }
        let height = rows.len();
        let width = rows.first().map(|r| r.chars().count()).unwrap_or(0);
        let mut cells = Vec::with_capacity(width * height);
        for row in rows {
            let mut n = 0;
            for ch in row.chars() {
                let state = CellState::from_char(ch)
                    .unwrap_or_else(|| panic!("invalid cell char {ch:?}"));
                cells.push(state);
                n += 1;
            }
            assert_eq!(n, width, "ragged rows");
        }
        Ok(OccupancyGrid {
            width,
            height,
            resolution,
            origin,
            cells,
        })
    }
}

// Serialize cells as row strings: keeps embedded grids readable and roughly
// 40x smaller than a JSON array of enum tags.
impl<S: Scalar> Serialize for OccupancyGrid<S> {
    fn serialize<T: Serializer>(&self, serializer: T) -> Result<T::Ok, T::Error> {
        let mut st = serializer.serialize_struct("OccupancyGrid", 5)?;
        st.serialize_field("width", &self.width)?;
        st.serialize_field("height", &self.height)?;
        st.serialize_field("resolution", &self.resolution)?;
        st.serialize_field("origin", &self.origin)?;
        st.serialize_field("rows", &self.rows_as_strings())?;
        st.end()
    }
}

impl<'de, S: Scalar> Deserialize<'de> for OccupancyGrid<S> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(field_identifier, rename_all = "lowercase")]
        enum Field {
            Width,
            Height,
            Resolution,
            Origin,
            Rows,
        }

        struct GridVisitor<S>(std::marker::PhantomData<S>);

        impl<'de, S: Scalar> Visitor<'de> for GridVisitor<S> {
            type Value = OccupancyGrid<S>;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("an occupancy grid object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut width: Option<usize> = None;
                let mut height: Option<usize> = None;
                let mut resolution: Option<S> = None;
                let mut origin: Option<Pose<S>> = None;
                let mut rows: Option<Vec<String>> = None;
                while let Some(key) = map.next_key()? {
                    match key {
                        Field::Width => width = Some(map.next_value()?),
                        Field::Height => height = Some(map.next_value()?),
                        Field::Resolution => resolution = Some(map.next_value()?),
                        Field::Origin => origin = Some(map.next_value()?),
                        Field::Rows => rows = Some(map.next_value()?),
                    }
                }
                let width = width.ok_or_else(|| de::Error::missing_field("width"))?;
                let height = height.ok_or_else(|| de::Error::missing_field("height"))?;
                let resolution =
                    resolution.ok_or_else(|| de::Error::missing_field("resolution"))?;
                let origin = origin.ok_or_else(|| de::Error::missing_field("origin"))?;
                let rows = rows.ok_or_else(|| de::Error::missing_field("rows"))?;
                if rows.len() != height {
                    return Err(de::Error::custom("row count does not match height"));
                }
                let grid = OccupancyGrid::from_rows(&rows, resolution, origin)
                    .map_err(de::Error::custom)?;
                if grid.width() != width {
                    return Err(de::Error::custom("row length does not match width"));
                }
                Ok(grid)
            }
        }

        deserializer.deserialize_struct(
            "OccupancyGrid",
            &["width", "height", "resolution", "origin", "rows"],
            GridVisitor(std::marker::PhantomData),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid10() -> OccupancyGrid<f64> {
        OccupancyGrid::new(10, 30, 0.1, Pose::default(), CellState::Free)
    }

    #[test]
    fn world_to_cell_first_cell() {
        let g = grid10();
        let c = g.world_to_cell(&Pose::xy(0.05, 0.05)).unwrap();
        assert_eq!(c, Cell::new(0, 0));
    }

    #[test]
    fn world_to_cell_floor_division() {
        let g: OccupancyGrid<f64> =
            OccupancyGrid::new(40, 40, 0.1, Pose::default(), CellState::Free);
        let c = g.world_to_cell(&Pose::xy(1.0, 2.0)).unwrap();
        assert_eq!(c, Cell::new(20, 10));
    }

    #[test]
    fn world_to_cell_negative_is_out_of_bounds() {
        let g = grid10();
        let err = g.world_to_cell(&Pose::xy(-0.1, 0.0)).unwrap_err();
        assert!(matches!(err, GridError::OutOfBounds { .. }));
    }

    #[test]
    fn world_to_cell_far_edge_is_out_of_bounds() {
        let g = grid10();
        assert!(g.world_to_cell(&Pose::xy(1.0, 3.0)).is_err());
        assert!(g.world_to_cell(&Pose::xy(0.999, 2.999)).is_ok());
    }

    #[test]
    fn cell_to_world_roundtrip_identity() {
        let g = OccupancyGrid::new(17, 23, 0.25, Pose::xy(-1.5, 2.0), CellState::Unknown);
        for row in (0..23).step_by(3) {
            for col in (0..17).step_by(2) {
                let cell = Cell::new(row, col);
                let p = g.cell_to_world(cell);
                assert_eq!(g.world_to_cell(&p).unwrap(), cell);
            }
        }
    }

    #[test]
    fn area_all_free() {
        let g: OccupancyGrid<f64> =
            OccupancyGrid::new(10, 10, 0.1, Pose::default(), CellState::Free);
        assert!((g.area_of(CellState::Free) - 1.0).abs() < 1e-12);
        assert_eq!(g.area_of(CellState::Occupied), 0.0);
    }

    #[test]
    fn area_matches_cell_count_oracle() {
        // naive double loop oracle over a mixed grid
        let mut g = OccupancyGrid::new(8, 6, 0.5, Pose::default(), CellState::Unknown);
        g.fill_rect(0, 0, 2, 3, CellState::Free);
        g.fill_rect(4, 4, 5, 7, CellState::Occupied);
        let mut free = 0usize;
        let mut occ = 0usize;
        let mut unk = 0usize;
        for r in 0..6 {
            for c in 0..8 {
                match g.get(Cell::new(r, c)) {
                    CellState::Free => free += 1,
                    CellState::Occupied => occ += 1,
                    CellState::Unknown => unk += 1,
                }
            }
        }
        let cell_area = 0.25;
        assert_eq!(g.area_of(CellState::Free), free as f64 * cell_area);
        assert_eq!(g.area_of(CellState::Occupied), occ as f64 * cell_area);
        assert_eq!(g.area_of(CellState::Unknown), unk as f64 * cell_area);
        // the three states partition the grid
        assert_eq!(free + occ + unk, 48);
    }

    #[test]
    fn areas_sum_to_total() {
        let g = grid10();
        let total = g.area_of(CellState::Free)
            + g.area_of(CellState::Occupied)
            + g.area_of(CellState::Unknown);
        let (w, h) = g.extent();
        assert!((total - w * h).abs() < 1e-12);
    }

    #[test]
    fn serde_roundtrip_compact_rows() {
        let mut g = OccupancyGrid::new(4, 3, 0.1, Pose::xy(1.0, -2.0), CellState::Unknown);
        g.set(Cell::new(0, 0), CellState::Free);
        g.set(Cell::new(2, 3), CellState::Occupied);
        let json = serde_json::to_string(&g).unwrap();
        assert!(json.contains("\"rows\""));
        let back: OccupancyGrid<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn f32_instantiation_works() {
        let g: OccupancyGrid<f32> =
            OccupancyGrid::new(10, 10, 0.1, Pose::default(), CellState::Free);
        let c = g.world_to_cell(&Pose::xy(0.55, 0.95)).unwrap();
        assert_eq!(c, Cell::new(9, 5));
    }
}
