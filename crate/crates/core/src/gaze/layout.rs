use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of candidate zones on one screen.
pub const ZONE_COUNT: usize = 8;

/// Index of a candidate zone, `0..ZONE_COUNT`.
pub type ZoneIndex = usize;

/// Fraction of the smaller cell side covered by a colored square.
const SQUARE_FILL: f64 = 0.8;

/// Axis-aligned rectangle in normalized screen coordinates.
///
/// Contains points on its upper-left edges but not on its bottom-right edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x0 <= x && x < self.x1 && self.y0 <= y && y < self.y1
    }

    /// True when the two half-open rectangles share at least one point.
    pub fn intersects(&self, other: &Rect) -> bool {
        self.x0 < other.x1 && other.x0 < self.x1 && self.y0 < other.y1 && other.y0 < self.y1
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }

    fn is_well_formed(&self) -> bool {
        let coords = [self.x0, self.y0, self.x1, self.y1];
        coords.iter().all(|c| c.is_finite() && (0.0..=1.0).contains(c))
            && self.x0 < self.x1
            && self.y0 < self.y1
    }
}

/// The eight candidate zones of a screen plus the empty center region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenLayout {
    zones: [Rect; ZONE_COUNT],
    center_exclusion: Rect,
}

impl ScreenLayout {
    pub fn new(zones: [Rect; ZONE_COUNT], center_exclusion: Rect) -> Result<Self> {
        for (i, z) in zones.iter().enumerate() {
            if !z.is_well_formed() {
                return Err(Error::InvalidLayout(format!("zone {i} is not a valid rectangle")));
            }
            if z.intersects(&center_exclusion) {
                return Err(Error::InvalidLayout(format!("zone {i} overlaps the center")));
            }
            for (j, other) in zones.iter().enumerate().skip(i + 1) {
                if z.intersects(other) {
                    return Err(Error::InvalidLayout(format!("zones {i} and {j} overlap")));
                }
            }
        }
        Ok(Self { zones, center_exclusion })
    }

    /// 3x3 grid with the center cell left empty, zones numbered row-major.
    ///
    /// `aspect` is the window width divided by its height; squares stay
    /// square on screen and are centered in their cells.
    pub fn grid(aspect: f64) -> Result<Self> {
        if !(aspect.is_finite() && aspect > 0.0) {
            return Err(Error::InvalidLayout(format!("aspect ratio {aspect} must be positive")));
        }
        let cell = 1.0 / 3.0;
        // Side of the square in units of window height, then per axis.
        let side_h = SQUARE_FILL * cell * aspect.min(1.0);
        let half_w = side_h / aspect / 2.0;
        let half_h = side_h / 2.0;
        let mut zones = [Rect::new(0.0, 0.0, 0.0, 0.0); ZONE_COUNT];
        let cells = (0..9).filter(|&c| c != 4);
        for (zone, c) in zones.iter_mut().zip(cells) {
            let cx = (c % 3) as f64 * cell + cell / 2.0;
            let cy = (c / 3) as f64 * cell + cell / 2.0;
            *zone = Rect::new(cx - half_w, cy - half_h, cx + half_w, cy + half_h);
        }
        Self::new(zones, Rect::new(cell, cell, 2.0 * cell, 2.0 * cell))
    }

    pub fn zones(&self) -> &[Rect; ZONE_COUNT] {
        &self.zones
    }

    pub fn zone(&self, index: ZoneIndex) -> &Rect {
        &self.zones[index]
    }

    pub fn center_exclusion(&self) -> &Rect {
        &self.center_exclusion
    }

    /// Zone containing the point, if any.
    pub fn assign_zone(&self, x: f64, y: f64) -> Option<ZoneIndex> {
        self.zones.iter().position(|z| z.contains(x, y))
    }
}

impl Default for ScreenLayout {
    fn default() -> Self {
        Self::grid(1.0).expect("unit-aspect grid is valid")
    }
}

/// Zone lookup; see [`ScreenLayout::assign_zone`].
pub fn assign_zone(x: f64, y: f64, layout: &ScreenLayout) -> Option<ZoneIndex> {
    layout.assign_zone(x, y)
}
