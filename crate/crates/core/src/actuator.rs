//! Contractile force of the inverting-tube vacuum actuator.
//!
//! The tendon tension is half the pressure-area product (the tube doubles
//! back on itself like a single movable pulley) plus a direction-dependent
//! loss made of a rate-independent yield force and a linear viscous term.
//!
//! Sign convention: `x` is tendon extension, tension is positive and
//! `x_dot > 0` while the tendon is being pulled out. Losses resist relative
//! motion, so they raise the measured tension during extension and lower it
//! during retraction.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::units::{CM, CM2, MM, P_ATM};

/// Lossless force per squared centimetre of diameter at sea level [N/cm²].
pub const MAX_FORCE_PER_CM2: f64 = 3.98;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorParams {
    /// Inverting-tube diameter [m].
    pub diameter: f64,
    /// Effective cross-sectional area [m²].
    pub a_eff: f64,
    /// Rate-independent yield loss [N].
    pub f_yield: f64,
    /// Viscous loss coefficient [N·s/m].
    pub mu_visc: f64,
    /// Reinforced-tube length [m].
    pub reinforced_length: f64,
    /// Maximum tendon extension [m].
    pub stroke_max: f64,
}

impl ActuatorParams {
    pub fn new(
        diameter: f64,
        a_eff: f64,
        f_yield: f64,
        mu_visc: f64,
        reinforced_length: f64,
        stroke_max: f64,
    ) -> Result<Self> {
        let params = Self {
            diameter,
            a_eff,
            f_yield,
            mu_visc,
            reinforced_length,
            stroke_max,
        };
        params.validate()?;
        Ok(params)
    }

    /// Identified coefficients of the 29 mm layflat prototype with a 55 cm
    /// stroke.
    pub fn prototype() -> Self {
        let geometry = tube_geometry(29.0 * MM, 0.0635 * MM).expect("valid prototype geometry");
        Self {
            diameter: geometry.diameter,
            a_eff: 2.49 * CM2,
            f_yield: 2.45,
            mu_visc: 9.70,
            reinforced_length: 28.0 * CM,
            stroke_max: 55.0 * CM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.diameter,
            self.a_eff,
            self.f_yield,
            self.mu_visc,
            self.reinforced_length,
            self.stroke_max,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::invalid("actuator parameters must be finite"));
        }
        if self.diameter <= 0.0 {
            return Err(Error::invalid("tube diameter must be positive"));
        }
        let geometric = circle_area(self.diameter);
        if self.a_eff <= 0.0 || self.a_eff > geometric * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "effective area {} m² must lie in (0, {geometric}] m²",
                self.a_eff
            )));
        }
        if self.f_yield < 0.0 || self.mu_visc < 0.0 {
            return Err(Error::invalid("loss coefficients must be non-negative"));
        }
        if self.reinforced_length <= 0.0 || self.stroke_max <= 0.0 {
            return Err(Error::invalid("lengths must be positive"));
        }
        if self.stroke_max > 2.0 * self.reinforced_length * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "stroke {} m exceeds twice the reinforced length {} m",
                self.stroke_max, self.reinforced_length
            )));
        }
        Ok(())
    }

    /// Effective area as a fraction of the geometric tube cross-section.
    pub fn area_ratio(&self) -> f64 {
        self.a_eff / circle_area(self.diameter)
    }

    /// Pressure term of the tension, `-(1/2)·A_eff·P1`.
    pub fn baseline_force(&self, p1: f64) -> f64 {
        -0.5 * self.a_eff * p1
    }

    /// Signed loss term; zero at exactly zero rate.
    pub fn loss_force(&self, x_dot: f64) -> f64 {
        if x_dot == 0.0 {
            0.0
        } else {
            x_dot.signum() * (self.f_yield + self.mu_visc * x_dot.abs())
        }
    }
}

/// Gauge pressures of the retraction (`p1`) and clutching (`p2`) chambers [Pa].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pressures {
    pub p1: f64,
    pub p2: f64,
}

impl Pressures {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        let p = Self { p1, p2 };
        p.validate()?;
        Ok(p)
    }

    /// Gauge vacuum cannot exceed the ambient pressure magnitude.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("P1", self.p1), ("P2", self.p2)] {
            if !value.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
            if value < -P_ATM {
                return Err(Error::PressureBound {
                    name,
                    value,
                    limit: P_ATM,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KinematicSample {
    /// Tendon extension [m].
    pub x: f64,
    /// Extension rate [m/s], positive while extending.
    pub x_dot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeGeometry {
    pub diameter: f64,
    pub area: f64,
}

fn circle_area(diameter: f64) -> f64 {
    PI * diameter * diameter / 4.0
}

/// Diameter and cross-section of a tube from its lay-flat width (half the
/// circumference).
pub fn tube_geometry(layflat_width: f64, wall_thickness: f64) -> Result<TubeGeometry> {
    if !(layflat_width > 0.0) || !layflat_width.is_finite() {
        return Err(Error::invalid("layflat width must be positive"));
    }
    let diameter = 2.0 * layflat_width / PI;
    if !(wall_thickness >= 0.0) || wall_thickness >= diameter / 2.0 {
        return Err(Error::invalid(format!(
            "wall thickness {wall_thickness} m is inconsistent with diameter {diameter} m"
        )));
    }
    Ok(TubeGeometry {
        diameter,
        area: circle_area(diameter),
    })
}

/// Lossless tension `-(1/2)·(πD²/4)·P1` for a vacuum `p1 ≤ 0`.
pub fn ideal_force(p1: f64, diameter: f64) -> Result<f64> {
    check_actuation_pressure(p1)?;
    if !(diameter > 0.0) {
        return Err(Error::invalid("diameter must be positive"));
    }
    Ok(-0.5 * circle_area(diameter) * p1)
}

fn check_actuation_pressure(p1: f64) -> Result<()> {
    if p1 > 0.0 {
        return Err(Error::InvalidMode(format!(
            "positive retraction pressure {p1} Pa is outside the vacuum actuation model"
        )));
    }
    Pressures { p1, p2: 0.0 }.validate()
}

/// Measured tendon tension including yield and viscous losses.
pub fn actuator_force(p: Pressures, k: KinematicSample, params: &ActuatorParams) -> Result<f64> {
    check_actuation_pressure(p.p1)?;
    p.validate()?;
    if !(k.x >= 0.0 && k.x <= params.stroke_max) {
        return Err(Error::invalid(format!(
            "extension {} m outside stroke [0, {}] m",
            k.x, params.stroke_max
        )));
    }
    if !k.x_dot.is_finite() {
        return Err(Error::invalid("extension rate must be finite"));
    }
    Ok(params.baseline_force(p.p1) + params.loss_force(k.x_dot))
}

/// Lossless sea-level force ceiling for a tube diameter given in centimetres.
pub fn max_force_atm(diameter_cm: f64) -> Result<f64> {
    if !(diameter_cm > 0.0) {
        return Err(Error::invalid("diameter must be positive"));
    }
    Ok(MAX_FORCE_PER_CM2 * diameter_cm * diameter_cm)
}

/// Fully contracted length of a device with the given extended length.
pub fn contracted_length(extended_length: f64) -> Result<f64> {
    if !(extended_length > 0.0) {
        return Err(Error::invalid("extended length must be positive"));
    }
    Ok(extended_length / 3.0)
}

/// Change in the empty reinforced-tube length for a tendon displacement.
pub fn empty_tube_delta(dx_tendon: f64) -> f64 {
    dx_tendon / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::MM_PER_MIN;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn at(p1_kpa: f64, rate_mm_min: f64) -> f64 {
        let params = ActuatorParams::prototype();
        actuator_force(
            Pressures::new(p1_kpa * 1e3, p1_kpa * 1e3).unwrap(),
            KinematicSample {
                x: 0.2,
                x_dot: rate_mm_min * MM_PER_MIN,
            },
            &params,
        )
        .unwrap()
    }

    #[test]
    fn geometry_from_layflat_width() {
        let g = tube_geometry(0.029, 63.5e-6).unwrap();
        assert_abs_diff_eq!(g.diameter, 0.018462, epsilon = 1e-5);
        assert_abs_diff_eq!(g.area, 2.6770e-4, epsilon = 1e-7);
        assert_abs_diff_eq!(0.93 * g.area, 2.49e-4, epsilon = 0.01e-4);

        let unit = tube_geometry(PI / 2.0, 0.0).unwrap();
        assert_abs_diff_eq!(unit.diameter, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(unit.area, PI / 4.0, epsilon = 1e-15);

        assert!(tube_geometry(0.0, 0.0).is_err());
    }

    #[test]
    fn ideal_force_values() {
        assert_abs_diff_eq!(
            ideal_force(-34_000.0, 0.01846).unwrap(),
            4.55,
            epsilon = 0.005
        );
        assert_eq!(ideal_force(0.0, 0.02).unwrap(), 0.0);
        assert_abs_diff_eq!(ideal_force(-P_ATM, 0.01).unwrap(), 3.98, epsilon = 0.005);
        assert!(matches!(ideal_force(1.0, 0.02), Err(Error::InvalidMode(_))));
        assert!(matches!(
            ideal_force(-2.0e5, 0.02),
            Err(Error::PressureBound { .. })
        ));
    }

    #[test]
    fn loaded_force_matches_characterization_rows() {
        assert_abs_diff_eq!(at(-34.0, 2500.0), 7.07, epsilon = 0.05);
        assert_abs_diff_eq!(at(-81.0, -100.0), 7.65, epsilon = 0.05);
        assert_abs_diff_eq!(at(-51.0, 0.0), 6.32, epsilon = 0.05);
    }

    #[test]
    fn force_rejects_out_of_stroke_and_positive_pressure() {
        let params = ActuatorParams::prototype();
        let p = Pressures::new(-34e3, 0.0).unwrap();
        let k = KinematicSample { x: 0.6, x_dot: 0.0 };
        assert!(actuator_force(p, k, &params).is_err());
        let p = Pressures { p1: 10.0, p2: 0.0 };
        let k = KinematicSample { x: 0.1, x_dot: 0.0 };
        assert!(matches!(
            actuator_force(p, k, &params),
            Err(Error::InvalidMode(_))
        ));
    }

    #[test]
    fn max_force_table_values() {
        for (d, f) in [
            (0.25, 0.25),
            (0.5, 1.0),
            (1.0, 4.0),
            (2.5, 25.0),
            (5.0, 100.0),
        ] {
            let got = max_force_atm(d).unwrap();
            // 3.98 vs 4 puts every row exactly on the 0.5 % boundary
            assert!((got - f).abs() / f <= 0.005 + 1e-12, "{d} cm: {got} vs {f}");
        }
        assert!(max_force_atm(0.0).is_err());
    }

    #[test]
    fn length_relations() {
        assert_abs_diff_eq!(contracted_length(0.78).unwrap(), 0.26, epsilon = 1e-12);
        assert_abs_diff_eq!(contracted_length(3.0).unwrap(), 1.0, epsilon = 1e-12);
        assert!(contracted_length(0.0).is_err());
        assert_eq!(empty_tube_delta(0.10), 0.05);
        assert_eq!(empty_tube_delta(0.0), 0.0);
        assert_eq!(empty_tube_delta(-0.04), -0.02);
    }

    #[test]
    fn params_invariants() {
        let p = ActuatorParams::prototype();
        assert!(p.validate().is_ok());
        assert_abs_diff_eq!(p.area_ratio(), 0.93, epsilon = 0.005);
        let mut bad = p;
        bad.a_eff = 3.0e-4;
        assert!(bad.validate().is_err());
        let mut bad = p;
        bad.stroke_max = 0.60;
        assert!(bad.validate().is_err());
        let mut bad = p;
        bad.mu_visc = -1.0;
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn pressure_linearity(p1 in -50_000.0f64..0.0, alpha in 0.01f64..2.0, v in -0.05f64..0.05) {
            let params = ActuatorParams::prototype();
            let k = KinematicSample { x: 0.1, x_dot: v };
            let f = |p1: f64| actuator_force(Pressures { p1, p2: 0.0 }, k, &params).unwrap()
                - params.loss_force(v);
            prop_assert!((f(alpha * p1) - alpha * f(p1)).abs() < 1e-9);
        }

        #[test]
        fn hysteresis_half_width(p1 in -P_ATM..0.0, speed in 1e-6f64..0.1) {
            let params = ActuatorParams::prototype();
            let p = Pressures { p1, p2: 0.0 };
            let ext = actuator_force(p, KinematicSample { x: 0.1, x_dot: speed }, &params).unwrap();
            let con = actuator_force(p, KinematicSample { x: 0.1, x_dot: -speed }, &params).unwrap();
            let expected = params.f_yield + params.mu_visc * speed;
            prop_assert!(((ext - con) / 2.0 - expected).abs() < 1e-12);
        }

        #[test]
        fn effective_area_never_beats_ideal(p1 in -P_ATM..0.0) {
            let params = ActuatorParams::prototype();
            let ideal = ideal_force(p1, params.diameter).unwrap();
            prop_assert!(ideal >= params.baseline_force(p1));
        }

        #[test]
        fn volume_work_balance(p1 in -P_ATM..0.0, dx in 0.0f64..0.55) {
            let params = ActuatorParams::prototype();
            let work = params.baseline_force(p1) * dx;
            let swept = params.a_eff * empty_tube_delta(dx);
            prop_assert!((work - p1.abs() * swept).abs() < 1e-12);
        }

        #[test]
        fn ceiling_matches_ideal_at_atmosphere(d_cm in 0.1f64..10.0) {
            let rounded = max_force_atm(d_cm).unwrap();
            let exact = ideal_force(-P_ATM, d_cm * CM).unwrap();
            prop_assert!((rounded - exact).abs() / exact < 0.002);
        }
    }
}
