//! Small benchmark sets bundled with the crate.

use crate::data::{read_csv, CsvSchema, Dataset};
use crate::error::{Error, Result};

const IRIS: &str = include_str!("../data/iris.csv");
const WINE: &str = include_str!("../data/wine.csv");

/// 150 samples, 4 features, 3 classes.
pub fn iris() -> Dataset {
    read_csv(IRIS.as_bytes(), "Iris", &CsvSchema::default()).expect("bundled iris.csv parses")
}

/// 178 samples, 13 features, 3 classes.
pub fn wine() -> Dataset {
    read_csv(WINE.as_bytes(), "Wine", &CsvSchema::default()).expect("bundled wine.csv parses")
}

pub const BUILTIN: [&str; 2] = ["iris", "wine"];

/// Look up a bundled dataset by case-insensitive name.
pub fn builtin(name: &str) -> Result<Dataset> {
    match name.to_ascii_lowercase().as_str() {
        "iris" => Ok(iris()),
        "wine" => Ok(wine()),
        _ => Err(Error::InvalidArgument(format!(
            "unknown builtin dataset `{name}`; available: {}",
            BUILTIN.join(", ")
        ))),
    }
}
