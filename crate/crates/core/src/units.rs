//! Hartree atomic units (ħ = 1) and the handful of laboratory units that
//! appear at the configuration and output boundary.
//!
//! Everything inside the crate is expressed in atomic units. Values in eV,
//! fs or TW/cm² only exist while parsing a config file and while printing
//! results.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// 1 Hartree in eV.
pub const HARTREE_EV: f64 = 27.211386;
/// 1 atomic unit of time in fs.
pub const AU_TIME_FS: f64 = 0.02418884;
/// Intensity (W/cm²) of a plane wave whose peak field is 1 atomic unit.
pub const AU_INTENSITY_W_CM2: f64 = 3.50945e16;
/// ħ in eV·fs, consistent with the two factors above.
pub const HBAR_EV_FS: f64 = HARTREE_EV * AU_TIME_FS;

const TW_CM2_IN_W_CM2: f64 = 1e12;

/// Transition dipole used when a config gives an intensity but no dipole.
///
/// Not a tabulated constant: it is the value for which 5.1 TW/cm² maps to
/// ħΩ = 0.3 eV and 20.4 TW/cm² maps to 0.6 eV, i.e. the Li intensity/Rabi
/// pairs used by the `li` preset.
pub const DEFAULT_DIPOLE_AU: f64 = 0.9145;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Energy,
    Time,
    Intensity,
    Field,
    Dipole,
    Dimensionless,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Energy => "energy",
            Dimension::Time => "time",
            Dimension::Intensity => "intensity",
            Dimension::Field => "field",
            Dimension::Dipole => "dipole",
            Dimension::Dimensionless => "dimensionless",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    ElectronVolt,
    Hartree,
    Femtosecond,
    TerawattPerCm2,
    /// Atomic unit of the given dimension.
    Atomic(Dimension),
}

impl Unit {
    pub fn dimension(self) -> Dimension {
        match self {
            Unit::ElectronVolt | Unit::Hartree => Dimension::Energy,
            Unit::Femtosecond => Dimension::Time,
            Unit::TerawattPerCm2 => Dimension::Intensity,
            Unit::Atomic(d) => d,
        }
    }

    /// Multiplier taking a value in this unit to atomic units.
    pub fn to_atomic_factor(self) -> f64 {
        match self {
            Unit::ElectronVolt => 1.0 / HARTREE_EV,
            Unit::Hartree => 1.0,
            Unit::Femtosecond => 1.0 / AU_TIME_FS,
            Unit::TerawattPerCm2 => TW_CM2_IN_W_CM2 / AU_INTENSITY_W_CM2,
            Unit::Atomic(_) => 1.0,
        }
    }

    /// Parses a config suffix (`eV`, `Ha`, `fs`, `au`, `TWcm2`). `au` is
    /// ambiguous on its own and takes the dimension the key expects.
    pub fn parse(suffix: &str, expected: Dimension) -> Result<Unit> {
        let unit = match suffix {
            "eV" => Unit::ElectronVolt,
            "Ha" => Unit::Hartree,
            "fs" => Unit::Femtosecond,
            "TWcm2" => Unit::TerawattPerCm2,
            "au" => Unit::Atomic(expected),
            "" if expected == Dimension::Dimensionless => Unit::Atomic(Dimension::Dimensionless),
            other => {
                return Err(Error::UnknownUnit {
                    suffix: other.to_string(),
                })
            }
        };
        if unit.dimension() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: unit.dimension(),
            });
        }
        Ok(unit)
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Unit::ElectronVolt => "eV",
            Unit::Hartree => "Ha",
            Unit::Femtosecond => "fs",
            Unit::TerawattPerCm2 => "TWcm2",
            Unit::Atomic(Dimension::Dimensionless) => "",
            Unit::Atomic(_) => "au",
        }
    }
}

/// A value tagged with the unit it is expressed in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Self {
        Self { value, unit }
    }

    pub fn atomic(value: f64, dimension: Dimension) -> Self {
        Self::new(value, Unit::Atomic(dimension))
    }

    pub fn dimension(&self) -> Dimension {
        self.unit.dimension()
    }

    pub fn to_atomic(&self) -> f64 {
        self.value * self.unit.to_atomic_factor()
    }

    /// Re-expresses the quantity in `target`, which must share its dimension.
    pub fn convert(&self, target: Unit) -> Result<Quantity> {
        if target.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: target.dimension(),
                found: self.dimension(),
            });
        }
        if target == self.unit {
            return Ok(*self);
        }
        Ok(Quantity::new(
            self.to_atomic() / target.to_atomic_factor(),
            target,
        ))
    }

    /// Parses `"<number> <suffix>"` (whitespace optional) against the
    /// dimension the caller expects.
    pub fn parse(text: &str, expected: Dimension) -> Result<Quantity> {
        const SUFFIXES: [&str; 5] = ["TWcm2", "eV", "Ha", "fs", "au"];
        let text = text.trim();
        let (number, suffix) = SUFFIXES
            .iter()
            .find_map(|s| text.strip_suffix(s).map(|n| (n, *s)))
            .unwrap_or_else(|| {
                let split = text
                    .rfind(|c: char| c.is_ascii_digit() || c == '.')
                    .map_or(0, |i| i + 1);
                text.split_at(split)
            });
        let value = f64::from_str(number.trim()).map_err(|_| Error::MalformedQuantity {
            text: text.to_string(),
        })?;
        let unit = Unit::parse(suffix.trim(), expected)?;
        Ok(Quantity::new(value, unit))
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = self.unit.suffix();
        if suffix.is_empty() {
            write!(f, "{}", self.value)
        } else {
            write!(f, "{} {}", self.value, suffix)
        }
    }
}

pub fn ev(value: f64) -> f64 {
    value / HARTREE_EV
}

pub fn fs(value: f64) -> f64 {
    value / AU_TIME_FS
}

pub fn to_ev(energy_au: f64) -> f64 {
    energy_au * HARTREE_EV
}

pub fn to_fs(time_au: f64) -> f64 {
    time_au * AU_TIME_FS
}

pub fn tw_cm2(value: f64) -> f64 {
    value * TW_CM2_IN_W_CM2 / AU_INTENSITY_W_CM2
}

/// Peak field amplitude (a.u.) of a plane wave of intensity `intensity` (a.u.).
pub fn field_from_intensity(intensity: f64) -> Result<f64> {
    if !(intensity >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "intensity must be non-negative, got {intensity}"
        )));
    }
    Ok(intensity.sqrt())
}

/// ħΩ = ℰ·d, with ℰ the peak field. Both arguments and the result are in
/// atomic units.
pub fn rabi_from_intensity(intensity: f64, dipole: f64) -> Result<f64> {
    if !(dipole > 0.0) {
        return Err(Error::InvalidInput(format!(
            "transition dipole must be positive, got {dipole}"
        )));
    }
    Ok(field_from_intensity(intensity)? * dipole)
}

pub fn intensity_from_rabi(rabi: f64, dipole: f64) -> Result<f64> {
    if !(dipole > 0.0) {
        return Err(Error::InvalidInput(format!(
            "transition dipole must be positive, got {dipole}"
        )));
    }
    if !(rabi >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "Rabi energy must be non-negative, got {rabi}"
        )));
    }
    let field = rabi / dipole;
    Ok(field * field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hartree_to_ev_table_values() {
        let q = Quantity::new(27.211386, Unit::ElectronVolt)
            .convert(Unit::Hartree)
            .unwrap();
        assert!((q.value - 1.0).abs() < 1e-15);
        let zero = Quantity::new(0.0, Unit::ElectronVolt)
            .convert(Unit::Hartree)
            .unwrap();
        assert_eq!(zero.value, 0.0);
        let t = Quantity::new(0.02418884, Unit::Femtosecond)
            .convert(Unit::Atomic(Dimension::Time))
            .unwrap();
        assert!((t.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hbar_matches_ev_fs_value() {
        assert!((HBAR_EV_FS - 0.65821).abs() < 1e-5);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let q = Quantity::new(1.0, Unit::ElectronVolt);
        assert!(matches!(
            q.convert(Unit::Femtosecond),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn parse_suffixes() {
        let q = Quantity::parse("2.5 eV", Dimension::Energy).unwrap();
        assert_eq!(q.unit, Unit::ElectronVolt);
        assert_eq!(q.value, 2.5);
        let q = Quantity::parse("0.32fs", Dimension::Time).unwrap();
        assert_eq!(q.value, 0.32);
        let q = Quantity::parse("1e2 au", Dimension::Time).unwrap();
        assert_eq!(q.unit, Unit::Atomic(Dimension::Time));
        assert_eq!(q.value, 100.0);
        let q = Quantity::parse("1e3eV", Dimension::Energy).unwrap();
        assert_eq!(q.value, 1000.0);
        let q = Quantity::parse("20.4 TWcm2", Dimension::Intensity).unwrap();
        assert_eq!(q.unit, Unit::TerawattPerCm2);
        let q = Quantity::parse("801", Dimension::Dimensionless).unwrap();
        assert_eq!(q.value, 801.0);
    }

    #[test]
    fn parse_rejects_bad_suffix() {
        assert!(matches!(
            Quantity::parse("3 eVV", Dimension::Energy),
            Err(Error::UnknownUnit { .. })
        ));
        assert!(matches!(
            Quantity::parse("3 fs", Dimension::Energy),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Quantity::parse("abc eV", Dimension::Energy),
            Err(Error::MalformedQuantity { .. })
        ));
        assert!(Quantity::parse("3", Dimension::Energy).is_err());
    }

    #[test]
    fn li_intensity_rabi_pairs() {
        let d = DEFAULT_DIPOLE_AU;
        let low = to_ev(rabi_from_intensity(tw_cm2(5.1), d).unwrap());
        let high = to_ev(rabi_from_intensity(tw_cm2(20.4), d).unwrap());
        assert!((low - 0.3).abs() < 1e-3, "{low}");
        assert!((high - 0.6).abs() < 2e-3, "{high}");
        assert!((high / low - 2.0).abs() < 1e-12);
        assert_eq!(rabi_from_intensity(0.0, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn negative_intensity_rejected() {
        assert!(rabi_from_intensity(-1.0, 1.0).is_err());
        assert!(rabi_from_intensity(1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_conversion(v in -1e6f64..1e6, which in 0usize..4) {
            let (unit, base) = [
                (Unit::ElectronVolt, Unit::Hartree),
                (Unit::Femtosecond, Unit::Atomic(Dimension::Time)),
                (Unit::TerawattPerCm2, Unit::Atomic(Dimension::Intensity)),
                (Unit::Hartree, Unit::ElectronVolt),
            ][which];
            let q = Quantity::new(v, unit);
            let back = q.convert(base).unwrap().convert(unit).unwrap();
            prop_assert!((back.value - v).abs() <= 1e-12 * v.abs().max(1e-300));
        }

        #[test]
        fn rabi_scales_as_sqrt_intensity(i in 1e-8f64..1.0, d in 0.1f64..5.0) {
            let one = rabi_from_intensity(i, d).unwrap();
            let four = rabi_from_intensity(4.0 * i, d).unwrap();
            prop_assert!((four / one - 2.0).abs() < 1e-12);
            let back = intensity_from_rabi(one, d).unwrap();
            prop_assert!((back - i).abs() <= 1e-12 * i);
        }
    }
}
