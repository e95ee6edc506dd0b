use std::collections::BTreeMap;

use rand::Rng;

use crate::UserId;

/// Links shorter than this are evaluated at this distance.
pub const MIN_LINK_DISTANCE: f64 = 1.0;

/// Planar coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Distance used for path loss, floored at [`MIN_LINK_DISTANCE`].
    pub fn link_distance(self, other: Point) -> f64 {
        self.distance(other).max(MIN_LINK_DISTANCE)
    }
}

/// Places users `0..n` uniformly in a disk of `radius` meters centred on the origin.
pub fn uniform_disk<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> BTreeMap<UserId, Point> {
    (0..n)
        .map(|i| {
            let r = radius * rng.random::<f64>().sqrt();
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            (UserId(i as u32), Point::new(r * phi.cos(), r * phi.sin()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn disk_placement_stays_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = uniform_disk(500, 80.0, &mut rng);
        assert_eq!(pts.len(), 500);
        assert!(pts.values().all(|p| p.distance(Point::new(0.0, 0.0)) <= 80.0));
        // Uniform in area: about a quarter of the points within half the radius.
        let inner = pts.values().filter(|p| p.x.hypot(p.y) < 40.0).count();
        assert!((90..160).contains(&inner), "inner={inner}");
    }

    #[test]
    fn link_distance_floor() {
        let a = Point::new(0.0, 0.0);
        assert_eq!(a.link_distance(Point::new(0.1, 0.0)), MIN_LINK_DISTANCE);
        assert_eq!(a.link_distance(Point::new(3.0, 4.0)), 5.0);
    }
}
