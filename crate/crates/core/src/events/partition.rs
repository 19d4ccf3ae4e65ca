//! Named rectangular partitions of the unit pitch.
//!
//! A zone may consist of several rectangles sharing a name. Zones are indexed
//! in order of their first rectangle. Points on a shared edge belong to the
//! rectangle listed last.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

const COVER_TOL: f64 = 1e-9;

/// Penalty-box extents on the unit pitch (16.5 m deep on 105 m, 40.3 m wide on 68 m).
pub const BOX_X_MIN: f64 = 0.842;
pub const BOX_Y_MIN: f64 = 0.211;
pub const BOX_Y_MAX: f64 = 0.789;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub name: String,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(name: &str, x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            name: name.to_string(),
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    fn overlap(&self, other: &Rect) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum PartitionFile {
    Named { name: String, rects: Vec<Rect> },
    Bare(Vec<Rect>),
}

/// A validated cover of `[0,1]^2` by non-overlapping rectangles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PartitionFile", into = "PartitionFileOut")]
pub struct PitchPartition {
    name: String,
    rects: Vec<Rect>,
    zone_names: Vec<String>,
    rect_zone: Vec<usize>,
}

#[derive(Serialize)]
struct PartitionFileOut {
    name: String,
    rects: Vec<Rect>,
}

impl From<PitchPartition> for PartitionFileOut {
    fn from(p: PitchPartition) -> Self {
        Self {
            name: p.name,
            rects: p.rects,
        }
    }
}

impl TryFrom<PartitionFile> for PitchPartition {
    type Error = DataError;

    fn try_from(f: PartitionFile) -> Result<Self, Self::Error> {
        match f {
            PartitionFile::Named { name, rects } => Self::new(&name, rects),
            PartitionFile::Bare(rects) => Self::new("custom", rects),
        }
    }
}

impl PitchPartition {
    /// Builds and validates a partition.
    pub fn new(name: &str, rects: Vec<Rect>) -> Result<Self, DataError> {
        if rects.is_empty() {
            return Err(DataError::Partition("no rectangles".into()));
        }
        for r in &rects {
            let in_unit = [r.x_min, r.x_max, r.y_min, r.y_max]
                .iter()
                .all(|v| v.is_finite() && (-COVER_TOL..=1.0 + COVER_TOL).contains(v));
            if !in_unit || r.x_min >= r.x_max || r.y_min >= r.y_max {
                return Err(DataError::Partition(format!("degenerate or out-of-range rectangle {r:?}")));
            }
        }
        for (i, a) in rects.iter().enumerate() {
            for b in &rects[i + 1..] {
                if a.overlap(b) > COVER_TOL {
                    return Err(DataError::Partition(format!(
                        "rectangles '{}' and '{}' overlap",
                        a.name, b.name
                    )));
                }
            }
        }
        let total: f64 = rects.iter().map(Rect::area).sum();
        if (total - 1.0).abs() > COVER_TOL {
            return Err(DataError::Partition(format!(
                "rectangles cover area {total}, expected 1"
            )));
        }
        let mut zone_names: Vec<String> = Vec::new();
        let rect_zone = rects
            .iter()
            .map(|r| match zone_names.iter().position(|n| *n == r.name) {
                Some(i) => i,
                None => {
                    zone_names.push(r.name.clone());
                    zone_names.len() - 1
                }
            })
            .collect();
        Ok(Self {
            name: name.to_string(),
            rects,
            zone_names,
            rect_zone,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        let file: PartitionFile = serde_json::from_str(&text)?;
        file.try_into()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn zone_names(&self) -> &[String] {
        &self.zone_names
    }

    pub fn num_zones(&self) -> usize {
        self.zone_names.len()
    }

    /// Zone index of a point. Coordinates are clamped to the unit square.
    pub fn zone_of(&self, x: f64, y: f64) -> usize {
        let x = x.clamp(0.0, 1.0);
        let y = y.clamp(0.0, 1.0);
        self.rects
            .iter()
            .rposition(|r| r.contains(x, y))
            .map(|i| self.rect_zone[i])
            // the cover check tolerates gaps up to 1e-9 in total area
            .unwrap_or_else(|| self.nearest_zone(x, y))
    }

    fn nearest_zone(&self, x: f64, y: f64) -> usize {
        let dist = |r: &Rect| {
            let dx = (r.x_min - x).max(0.0).max(x - r.x_max);
            let dy = (r.y_min - y).max(0.0).max(y - r.y_max);
            dx * dx + dy * dy
        };
        let (i, _) = self
            .rects
            .iter()
            .enumerate()
            .min_by(|a, b| dist(a.1).total_cmp(&dist(b.1)))
            .expect("partition is non-empty");
        self.rect_zone[i]
    }

    /// The 8 tactical zones used for zone-conditioned evaluation.
    ///
    /// Zone 1 is the own half, zones 2 and 3 the two flanks of the middle
    /// attacking quarter, zones 4 and 6 the wide channels beside the box,
    /// zone 5 the central strip in front of the box, zone 7 the penalty box
    /// and zone 8 the goal-mouth strip within 5 m of the goal line.
    pub fn default_zones() -> Self {
        let gm_x = 100.0 / 105.0;
        let gm_y0 = 0.368;
        let gm_y1 = 0.632;
        let rects = vec![
            Rect::new("Zone 1", 0.0, 0.5, 0.0, 1.0),
            Rect::new("Zone 2", 0.5, 0.75, 0.0, 0.5),
            Rect::new("Zone 3", 0.5, 0.75, 0.5, 1.0),
            Rect::new("Zone 4", 0.75, 1.0, 0.0, BOX_Y_MIN),
            Rect::new("Zone 5", 0.75, BOX_X_MIN, BOX_Y_MIN, BOX_Y_MAX),
            Rect::new("Zone 6", 0.75, 1.0, BOX_Y_MAX, 1.0),
            Rect::new("Zone 7", BOX_X_MIN, 1.0, BOX_Y_MIN, gm_y0),
            Rect::new("Zone 7", BOX_X_MIN, 1.0, gm_y1, BOX_Y_MAX),
            Rect::new("Zone 7", BOX_X_MIN, gm_x, gm_y0, gm_y1),
            Rect::new("Zone 8", gm_x, 1.0, gm_y0, gm_y1),
        ];
        Self::new("zones8", rects).expect("default zones are a valid partition")
    }

    /// Areas for the zone-value ladder: index 0 is the rest of the pitch,
    /// 1 the attacking third outside the box, 2 the attacking penalty box.
    pub fn default_areas() -> Self {
        let third = 2.0 / 3.0;
        let rects = vec![
            Rect::new("Area_0", 0.0, third, 0.0, 1.0),
            Rect::new("Area_1", third, 1.0, 0.0, BOX_Y_MIN),
            Rect::new("Area_1", third, 1.0, BOX_Y_MAX, 1.0),
            Rect::new("Area_1", third, BOX_X_MIN, BOX_Y_MIN, BOX_Y_MAX),
            Rect::new("Area_2", BOX_X_MIN, 1.0, BOX_Y_MIN, BOX_Y_MAX),
        ];
        Self::new("areas3", rects).expect("default areas are a valid partition")
    }

    /// A regular grid with `rows` cells along y and `cols` cells along x.
    /// Cell `(r, c)` has zone index `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut rects = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                rects.push(Rect::new(
                    &format!("cell_{r}_{c}"),
                    c as f64 / cols as f64,
                    (c + 1) as f64 / cols as f64,
                    r as f64 / rows as f64,
                    (r + 1) as f64 / rows as f64,
                ));
            }
        }
        Self::new(&format!("grid{rows}x{cols}"), rects).expect("grid is a valid partition")
    }

    /// A partition with a single zone covering the pitch.
    pub fn single() -> Self {
        Self::new("whole", vec![Rect::new("pitch", 0.0, 1.0, 0.0, 1.0)]).expect("unit square")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_zone_lookups() {
        let p = PitchPartition::default_zones();
        assert_eq!(p.num_zones(), 8);
        assert_eq!(p.zone_names()[p.zone_of(0.95, 0.5)], "Zone 7");
        assert_eq!(p.zone_names()[p.zone_of(0.0, 0.0)], "Zone 1");
        assert_eq!(p.zone_names()[p.zone_of(0.99, 0.5)], "Zone 8");
        assert_eq!(p.zone_names()[p.zone_of(0.9, 0.1)], "Zone 4");
        assert_eq!(p.zone_names()[p.zone_of(0.9, 0.9)], "Zone 6");
    }

    #[test]
    fn shared_edge_goes_to_higher_index() {
        let p = PitchPartition::default_zones();
        assert_eq!(p.zone_of(0.5, 0.3), 1);
        assert_eq!(p.zone_of(0.6, 0.5), 2);
        let a = PitchPartition::default_areas();
        assert_eq!(a.zone_of(BOX_X_MIN, 0.5), 2);
        assert_eq!(a.zone_of(2.0 / 3.0, 0.5), 1);
    }

    #[test]
    fn grid_indexing() {
        let g = PitchPartition::grid(12, 16);
        assert_eq!(g.num_zones(), 192);
        assert_eq!(g.zone_of(0.0, 0.0), 0);
        assert_eq!(g.zone_of(1.0, 1.0), 191);
        assert_eq!(g.zone_of(0.99, 0.01), 15);
    }

    #[test]
    fn overlap_and_gaps_rejected() {
        let overlap = vec![Rect::new("a", 0.0, 0.6, 0.0, 1.0), Rect::new("b", 0.5, 1.0, 0.0, 1.0)];
        assert!(PitchPartition::new("x", overlap).is_err());
        let gap = vec![Rect::new("a", 0.0, 0.4, 0.0, 1.0), Rect::new("b", 0.5, 1.0, 0.0, 1.0)];
        assert!(PitchPartition::new("x", gap).is_err());
        let outside = vec![Rect::new("a", -0.5, 0.5, 0.0, 1.0), Rect::new("b", 0.5, 1.5, 0.0, 1.0)];
        assert!(PitchPartition::new("x", outside).is_err());
    }

    #[test]
    fn json_roundtrip_and_bare_list() {
        let p = PitchPartition::default_zones();
        let s = serde_json::to_string(&p).unwrap();
        let q: PitchPartition = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        let bare = r#"[{"name":"L","x_min":0,"x_max":0.5,"y_min":0,"y_max":1},
                       {"name":"R","x_min":0.5,"x_max":1,"y_min":0,"y_max":1}]"#;
        let b: PitchPartition = serde_json::from_str(bare).unwrap();
        assert_eq!(b.num_zones(), 2);
        assert_eq!(b.zone_of(0.5, 0.5), 1);
    }
}
