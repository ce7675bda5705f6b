//! Unit conversions. Every dB/dBm quantity in configuration passes through here.

use num_traits::Float;

/// Power ratio in dB to linear scale: `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    Float::powf(10.0, db / 10.0)
}

/// Linear power ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * Float::log10(linear)
}

/// Power in dBm to watts: `10^((dbm - 30)/10)`.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    Float::powf(10.0, (dbm - 30.0) / 10.0)
}

/// Power in watts to dBm.
pub fn watt_to_dbm(watt: f64) -> f64 {
    10.0 * Float::log10(watt) + 30.0
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg * core::f64::consts::PI / 180.0
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad * 180.0 / core::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn table_values() {
        assert_relative_eq!(db_to_linear(10.0), 10.0, max_relative = 1e-15);
        assert_relative_eq!(db_to_linear(-30.0), 1e-3, max_relative = 1e-14);
        assert_relative_eq!(dbm_to_watt(-80.0), 1e-11, max_relative = 1e-14);
        assert_relative_eq!(dbm_to_watt(30.0), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn inverses() {
        for v in [-80.0, -3.0, 0.0, 7.5, 40.0] {
            assert_relative_eq!(linear_to_db(db_to_linear(v)), v, epsilon = 1e-12);
            assert_relative_eq!(watt_to_dbm(dbm_to_watt(v)), v, epsilon = 1e-12);
        }
        assert_relative_eq!(rad_to_deg(deg_to_rad(30.0)), 30.0, epsilon = 1e-12);
    }
}
