use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// A cause property, the effect property it drives, and an entity that has
/// both.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyPair {
    pub cause: String,
    pub effect: String,
    pub entity: String,
}

const BUILTIN: [(&str, &str, &str); 50] = [
    ("mass", "gravitational pull", "planet"),
    ("speed", "kinetic energy", "car"),
    ("temperature", "reaction rate", "solution"),
    ("voltage", "electric current", "circuit"),
    ("altitude", "air pressure", "balloon"),
    ("wire length", "resistance", "cable"),
    ("brightness", "heat output", "lamp"),
    ("water flow", "erosion", "river"),
    ("fuel use", "engine power", "engine"),
    ("coil turns", "magnetic strength", "magnet"),
    ("light collecting area", "image resolution", "telescope"),
    ("sunlight", "plant growth", "garden"),
    ("salt concentration", "boiling point", "pot"),
    ("friction", "surface heat", "brake"),
    ("elevation", "snowfall", "mountain"),
    ("exercise", "heart rate", "athlete"),
    ("population density", "pollution", "city"),
    ("wave height", "shoreline erosion", "beach"),
    ("pressure", "gas density", "container"),
    ("string tension", "pitch", "guitar"),
    ("carbon dioxide", "greenhouse warming", "atmosphere"),
    ("wing area", "lift", "airplane"),
    ("lens curvature", "focal power", "lens"),
    ("frequency", "photon energy", "light beam"),
    ("depth", "water pressure", "ocean"),
    ("orbit distance", "surface temperature", "moon"),
    ("insulation", "heat loss", "house"),
    ("rainfall", "flood risk", "valley"),
    ("muscle mass", "strength", "person"),
    ("study time", "test score", "student"),
    ("amplitude", "loudness", "sound wave"),
    ("sugar intake", "tooth decay", "child"),
    ("tire pressure", "fuel efficiency", "truck"),
    ("battery charge", "run time", "phone"),
    ("nutrient supply", "algae growth", "lake"),
    ("vocal cord tension", "voice pitch", "singer"),
    ("dust level", "visibility", "road"),
    ("magma pressure", "eruption force", "volcano"),
    ("enzyme amount", "digestion speed", "stomach"),
    ("blade sharpness", "cutting ease", "knife"),
    ("sail size", "boat speed", "boat"),
    ("atomic number", "nuclear charge", "atom"),
    ("wind speed", "wave size", "sea"),
    ("metal thickness", "beam stiffness", "bridge"),
    ("air humidity", "evaporation", "puddle"),
    ("tree age", "trunk width", "tree"),
    ("ice thickness", "load capacity", "pond"),
    ("solar activity", "aurora intensity", "sky"),
    ("slope steepness", "runoff speed", "hill"),
    ("fertilizer amount", "crop yield", "farm"),
];

/// The built-in lexicon of property pairs.
pub fn builtin_lexicon() -> Vec<PropertyPair> {
    BUILTIN
        .iter()
        .map(|(c, e, n)| PropertyPair {
            cause: (*c).into(),
            effect: (*e).into(),
            entity: (*n).into(),
        })
        .collect()
}
