//! Unit tags carried by column names and JSON keys.
//!
//! Numeric fields in every file are named `<base>_<unit>` (for example
//! `tau_us` or `f_q_ghz`). Parsing converts to SI; writing always uses the
//! canonical SI tag.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Second,
    Millisecond,
    Microsecond,
    Nanosecond,
    Hertz,
    Kilohertz,
    Megahertz,
    Gigahertz,
    Kelvin,
    Millikelvin,
    Ohm,
    Day,
    Hour,
    Dimensionless,
    Arbitrary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Time,
    Frequency,
    Temperature,
    Resistance,
    None,
}

impl Unit {
    pub fn to_si(self) -> f64 {
        match self {
            Unit::Second => 1.0,
            Unit::Millisecond => 1e-3,
            Unit::Microsecond => 1e-6,
            Unit::Nanosecond => 1e-9,
            Unit::Hertz => 1.0,
            Unit::Kilohertz => 1e3,
            Unit::Megahertz => 1e6,
            Unit::Gigahertz => 1e9,
            Unit::Kelvin => 1.0,
            Unit::Millikelvin => 1e-3,
            Unit::Ohm => 1.0,
            Unit::Day => 86_400.0,
            Unit::Hour => 3_600.0,
            Unit::Dimensionless | Unit::Arbitrary => 1.0,
        }
    }

    /// Converts a value in this unit to SI. Sub-unit prefixes divide by the
    /// exact reciprocal so that `10 us` becomes exactly `1e-5 s`.
    pub fn value_to_si(self, v: f64) -> f64 {
        let f = self.to_si();
        if f < 1.0 {
            v / (1.0 / f).round()
        } else {
            v * f
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Unit::Second
            | Unit::Millisecond
            | Unit::Microsecond
            | Unit::Nanosecond
            | Unit::Hour
            | Unit::Day => Dimension::Time,
            Unit::Hertz | Unit::Kilohertz | Unit::Megahertz | Unit::Gigahertz => {
                Dimension::Frequency
            }
            Unit::Kelvin | Unit::Millikelvin => Dimension::Temperature,
            Unit::Ohm => Dimension::Resistance,
            Unit::Dimensionless | Unit::Arbitrary => Dimension::None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Unit::Second => "s",
            Unit::Millisecond => "ms",
            Unit::Microsecond => "us",
            Unit::Nanosecond => "ns",
            Unit::Hertz => "hz",
            Unit::Kilohertz => "khz",
            Unit::Megahertz => "mhz",
            Unit::Gigahertz => "ghz",
            Unit::Kelvin => "k",
            Unit::Millikelvin => "mk",
            Unit::Ohm => "ohm",
            Unit::Day => "days",
            Unit::Hour => "hours",
            Unit::Dimensionless => "1",
            Unit::Arbitrary => "arb",
        }
    }

    /// Canonical SI unit for a dimension.
    pub fn si(dim: Dimension) -> Unit {
        match dim {
            Dimension::Time => Unit::Second,
            Dimension::Frequency => Unit::Hertz,
            Dimension::Temperature => Unit::Kelvin,
            Dimension::Resistance => Unit::Ohm,
            Dimension::None => Unit::Dimensionless,
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unit = match s.trim().to_ascii_lowercase().as_str() {
            "s" => Unit::Second,
            "ms" => Unit::Millisecond,
            "us" | "µs" => Unit::Microsecond,
            "ns" => Unit::Nanosecond,
            "hz" => Unit::Hertz,
            "khz" => Unit::Kilohertz,
            "mhz" => Unit::Megahertz,
            "ghz" => Unit::Gigahertz,
            "k" => Unit::Kelvin,
            "mk" => Unit::Millikelvin,
            "ohm" => Unit::Ohm,
            "days" => Unit::Day,
            "hours" | "h" => Unit::Hour,
            "1" | "dimensionless" => Unit::Dimensionless,
            "arb" => Unit::Arbitrary,
            other => return Err(format!("unknown unit `{other}`")),
        };
        Ok(unit)
    }
}

/// Splits `tau_us` into (`tau`, µs). Returns `None` when the suffix after the
/// last underscore is not a unit tag.
pub fn split_unit_suffix(name: &str) -> Option<(&str, Unit)> {
    let (base, suffix) = name.rsplit_once('_')?;
    let unit = suffix.parse().ok()?;
    if base.is_empty() {
        return None;
    }
    Some((base, unit))
}

/// Looks up `<base>_<unit>` among `names` and checks the unit dimension.
pub fn find_with_unit<'a, I>(names: I, base: &str, dim: Dimension) -> Option<(usize, Unit)>
where
    I: IntoIterator<Item = &'a str>,
{
    names.into_iter().enumerate().find_map(|(idx, name)| {
        let (b, unit) = split_unit_suffix(name)?;
        (b == base && unit.dimension() == dim).then_some((idx, unit))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_parsing() {
        assert_eq!(split_unit_suffix("tau_us"), Some(("tau", Unit::Microsecond)));
        assert_eq!(split_unit_suffix("f_q_ghz"), Some(("f_q", Unit::Gigahertz)));
        assert_eq!(split_unit_suffix("p1"), None);
        assert_eq!(split_unit_suffix("prepared_state"), None);
    }

    #[test]
    fn lookup_checks_dimension() {
        let names = ["tau_mhz", "tau_ms"];
        assert_eq!(
            find_with_unit(names.iter().copied(), "tau", Dimension::Time),
            Some((1, Unit::Millisecond))
        );
    }
}
