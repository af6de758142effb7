//! Deterministic synthetic scene: a bright square bouncing across the sensor.
//!
//! Every window the square moves by `speed` pixels along each axis; pixels
//! it enters fire `On`, pixels it leaves fire `Off`. Timestamps are spread
//! evenly across the window.

use crate::error::{Error, Result};
use crate::event_io::{Event, Micros, Polarity, SensorDims};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingSquare {
    pub dims: SensorDims,
    pub size: usize,
    /// Pixels per window along each axis.
    pub speed: usize,
    pub dt: Micros,
    pub windows: usize,
}

impl MovingSquare {
    pub fn new(dims: SensorDims, windows: usize, dt: Micros) -> Self {
        let size = (dims.width.min(dims.height) / 5).max(1);
        Self { dims, size, speed: 2, dt, windows }
    }

    fn validate(&self) -> Result<()> {
        if self.size == 0 || self.size > self.dims.width || self.size > self.dims.height {
            return Err(Error::param("square must fit inside the sensor"));
        }
        if self.dt == 0 {
            return Err(Error::param("window duration must be > 0"));
        }
        if self.dims.width > u16::MAX as usize || self.dims.height > u16::MAX as usize {
            return Err(Error::dim("sensor exceeds 16-bit coordinates"));
        }
        Ok(())
    }

    /// Top-left corner at window `i`, bouncing off the borders.
    pub fn position(&self, i: usize) -> (usize, usize) {
        let bounce = |span: usize, step: usize| {
            if span == 0 {
                return 0;
            }
            let period = 2 * span;
            let p = (step * self.speed) % period;
            if p <= span {
                p
            } else {
                period - p
            }
        };
        (bounce(self.dims.width - self.size, i), bounce(self.dims.height - self.size, i + self.size))
    }

    fn inside(&self, pos: (usize, usize), x: usize, y: usize) -> bool {
        x >= pos.0 && x < pos.0 + self.size && y >= pos.1 && y < pos.1 + self.size
    }

    pub fn events(&self) -> Result<Vec<Event>> {
        self.validate()?;
        let mut out = Vec::new();
        let mut changes = Vec::new();
        let mut prev: Option<(usize, usize)> = None;
        for i in 0..self.windows {
            let pos = self.position(i);
            changes.clear();
            // bounding box of old ∪ new square
            let (x0, y0) = prev.map_or(pos, |p| (p.0.min(pos.0), p.1.min(pos.1)));
            let (x1, y1) = prev.map_or((pos.0 + self.size, pos.1 + self.size), |p| {
                ((p.0.max(pos.0)) + self.size, (p.1.max(pos.1)) + self.size)
            });
            for y in y0..y1 {
                for x in x0..x1 {
                    let now = self.inside(pos, x, y);
                    let before = prev.is_some_and(|p| self.inside(p, x, y));
                    match (before, now) {
                        (false, true) => changes.push((x, y, Polarity::On)),
                        (true, false) => changes.push((x, y, Polarity::Off)),
                        _ => {}
                    }
                }
            }
            let t_start = i as u64 * self.dt;
            let n = changes.len() as u64;
            for (k, &(x, y, p)) in changes.iter().enumerate() {
                let t = t_start + k as u64 * self.dt / n.max(1);
                out.push(Event::new(t, x as u16, y as u16, p));
            }
            prev = Some(pos);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_are_sorted_and_in_bounds() {
        let scene = MovingSquare::new(SensorDims::new(64, 48), 40, 1000);
        let ev = scene.events().unwrap();
        assert!(!ev.is_empty());
        assert!(ev.windows(2).all(|w| w[0].t <= w[1].t));
        assert!(ev.iter().all(|e| scene.dims.contains(e.x, e.y) && e.t < 40_000));
    }

    #[test]
    fn first_window_paints_the_square() {
        let scene = MovingSquare::new(SensorDims::new(20, 20), 1, 10);
        let ev = scene.events().unwrap();
        assert_eq!(ev.len(), scene.size * scene.size);
        assert!(ev.iter().all(|e| e.p == Polarity::On));
    }

    #[test]
    fn net_polarity_is_square_area() {
        let scene = MovingSquare::new(SensorDims::new(40, 30), 25, 100);
        let net: i64 = scene.events().unwrap().iter().map(|e| e.p.sign() as i64).sum();
        assert_eq!(net, (scene.size * scene.size) as i64);
    }
}
