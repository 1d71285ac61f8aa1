use serde::{Deserialize, Serialize};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const KM_PER_NM: f64 = 1.852;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat_deg: f64,
    pub lon_deg: f64,
}

impl LatLon {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Self {
        Self { lat_deg, lon_deg }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat_deg) && (-180.0..=180.0).contains(&self.lon_deg)
    }
}

/// Haversine distance (nm) and initial true bearing (degrees in [0, 360))
/// from `a` to `b` on a spherical earth.
pub fn great_circle_nm(a: LatLon, b: LatLon) -> (f64, f64) {
    let (phi1, phi2) = (a.lat_deg.to_radians(), b.lat_deg.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon_deg - a.lon_deg).to_radians();

    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    let central = 2.0 * h.sqrt().min(1.0).asin();
    let distance_nm = central * EARTH_RADIUS_KM / KM_PER_NM;

    let y = dlambda.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos();
    let mut bearing = y.atan2(x).to_degrees().rem_euclid(360.0);
    if bearing >= 360.0 {
        bearing = 0.0;
    }
    (distance_nm, bearing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_points_are_zero_apart() {
        let p = LatLon::new(47.45, -122.31);
        assert_eq!(great_circle_nm(p, p).0, 0.0);
    }

    #[test]
    fn quarter_meridian() {
        let (d, brg) = great_circle_nm(LatLon::new(0.0, 0.0), LatLon::new(90.0, 0.0));
        let expected = std::f64::consts::FRAC_PI_2 * 6371.0 / 1.852;
        assert!((d - expected).abs() < 1e-6);
        assert!((d - 5403.6).abs() < 0.1, "{d}");
        assert!(brg.abs() < 1e-9);
    }

    #[test]
    fn miami_to_san_francisco() {
        let (d, brg) = great_circle_nm(LatLon::new(25.7959, -80.2870), LatLon::new(37.6213, -122.3790));
        assert!((d - 2254.0).abs() / 2254.0 < 0.01, "{d}");
        assert!((270.0..310.0).contains(&brg), "{brg}");
    }

    #[test]
    fn cardinal_bearings() {
        let o = LatLon::new(0.0, 0.0);
        let east = great_circle_nm(o, LatLon::new(0.0, 1.0)).1;
        let south = great_circle_nm(o, LatLon::new(-1.0, 0.0)).1;
        let west = great_circle_nm(o, LatLon::new(0.0, -1.0)).1;
        assert!((east - 90.0).abs() < 1e-9);
        assert!((south - 180.0).abs() < 1e-9);
        assert!((west - 270.0).abs() < 1e-9);
    }

    fn point() -> impl Strategy<Value = LatLon> {
        (-90.0f64..=90.0, -180.0f64..=180.0).prop_map(|(a, b)| LatLon::new(a, b))
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(a in point(), b in point()) {
            let (d1, brg) = great_circle_nm(a, b);
            let (d2, _) = great_circle_nm(b, a);
            prop_assert!((d1 - d2).abs() <= 1e-9, "{} vs {}", d1, d2);
            prop_assert!((0.0..360.0).contains(&brg));
        }

        #[test]
        fn triangle_inequality(a in point(), b in point(), c in point()) {
            let ab = great_circle_nm(a, b).0;
            let bc = great_circle_nm(b, c).0;
            let ac = great_circle_nm(a, c).0;
            prop_assert!(ac <= ab + bc + 1e-6);
        }
    }
}
