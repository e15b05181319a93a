//! The 22-vehicle test fleet: lengths and EPA-rated consumption.

use crate::error::{invalid, Result};
use crate::metrics::fuel::FuelModelParams;
use crate::ring::{Ring, RingTrack, VehicleSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetVehicle {
    pub number: u32,
    pub year: u16,
    pub make: &'static str,
    pub model: &'static str,
    pub length: f64,
    /// EPA city rating, litres per 100 km.
    pub city: f64,
    /// EPA highway rating, litres per 100 km.
    pub highway: f64,
}

macro_rules! veh {
    ($n:expr, $y:expr, $make:expr, $model:expr, $len:expr, $city:expr, $hwy:expr) => {
        FleetVehicle { number: $n, year: $y, make: $make, model: $model, length: $len, city: $city, highway: $hwy }
    };
}

pub const FLEET: [FleetVehicle; 22] = [
    veh!(1, 2013, "Chevrolet", "Silverado", 5.22, 15.67, 10.68),
    veh!(2, 2013, "Dodge", "Grand Caravan", 5.15, 13.83, 9.47),
    veh!(3, 2015, "Chevrolet", "Malibu", 4.86, 9.47, 6.53),
    veh!(4, 2012, "Chevrolet", "Malibu", 4.87, 10.69, 7.13),
    veh!(5, 2012, "Dodge", "Grand Caravan", 5.15, 13.83, 9.47),
    veh!(6, 2013, "Dodge", "Grand Caravan", 5.15, 13.83, 9.41),
    veh!(7, 2014, "Chevrolet", "Malibu", 4.86, 9.41, 6.53),
    veh!(8, 2016, "Chevrolet", "Malibu", 4.92, 8.71, 6.37),
    veh!(9, 2013, "Chevrolet", "Impala", 5.09, 13.07, 7.84),
    veh!(10, 2014, "Chevrolet", "Malibu", 4.86, 9.41, 6.53),
    veh!(11, 2016, "Chevrolet", "Malibu Limited", 4.86, 9.80, 6.92),
    veh!(12, 2015, "Chevrolet", "Suburban", 5.69, 14.71, 10.22),
    veh!(13, 2014, "Chevrolet", "Silverado", 5.21, 13.07, 9.80),
    veh!(14, 2014, "Dodge", "Grand Caravan", 5.15, 13.83, 9.41),
    veh!(15, 2012, "Chevrolet", "Malibu", 4.87, 10.70, 7.13),
    veh!(16, 2016, "Dodge", "Grand Caravan", 5.15, 13.83, 9.41),
    veh!(17, 2014, "Chevrolet", "Malibu", 4.86, 9.41, 6.53),
    veh!(18, 2012, "Chevrolet", "Malibu", 4.87, 10.70, 7.13),
    veh!(19, 2012, "Dodge", "Grand Caravan", 5.15, 13.83, 9.41),
    veh!(20, 2016, "Chevrolet", "Suburban", 5.70, 14.71, 10.22),
    veh!(21, 2009, "Ford", "Escape Hybrid", 4.44, 6.92, 7.84),
    veh!(22, 2012, "Dodge", "Grand Caravan", 5.15, 13.83, 9.41),
];

impl FleetVehicle {
    pub fn spec(&self) -> VehicleSpec {
        VehicleSpec { id: self.number, length: self.length, fuel_params: FuelModelParams::calibrated(self.city) }
    }
}

/// Specs for the first `n` fleet vehicles. Fleets larger than the table
/// reuse the table cyclically with fresh ids.
pub fn fleet_specs(n: usize) -> Result<Vec<VehicleSpec>> {
    if n < 2 {
        return Err(invalid(format!("fleet needs at least 2 vehicles, got {n}")));
    }
    Ok((0..n)
        .map(|i| {
            let mut s = FLEET[i % FLEET.len()].spec();
            s.id = i as u32 + 1;
            s
        })
        .collect())
}

/// `n` identical vehicles with the reference fuel calibration.
pub fn uniform_specs(n: usize, length: f64) -> Result<Vec<VehicleSpec>> {
    if n < 2 {
        return Err(invalid(format!("fleet needs at least 2 vehicles, got {n}")));
    }
    Ok((0..n).map(|i| VehicleSpec { id: i as u32 + 1, length, fuel_params: FuelModelParams::default() }).collect())
}

pub fn ring_for(n: usize, track: RingTrack) -> Result<Ring> {
    Ring::new(track, fleet_specs(n)?)
}

/// Fuel model for a vehicle id as numbered by [`fleet_specs`]; ids outside
/// the numbering get the reference calibration.
pub fn fuel_params_for_id(id: u32) -> FuelModelParams {
    match id {
        0 => FuelModelParams::default(),
        id => FLEET[(id as usize - 1) % FLEET.len()].spec().fuel_params,
    }
}

/// Mean city rating of the first `n` vehicles.
pub fn mean_city_rating(n: usize) -> f64 {
    let n = n.min(FLEET.len());
    FLEET[..n].iter().map(|v| v.city).sum::<f64>() / n as f64
}
