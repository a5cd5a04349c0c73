//! Compute precision selection through the `MSGAN_PRECISION` environment
//! variable: `single` (default) or `double`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    pub fn label(self) -> &'static str {
        match self {
            Precision::Single => "single",
            Precision::Double => "double",
        }
    }
}

pub fn from_env() -> anyhow::Result<Precision> {
    match std::env::var("MSGAN_PRECISION") {
        Err(_) => Ok(Precision::Single),
        Ok(v) => match v.as_str() {
            "single" => Ok(Precision::Single),
            "double" => Ok(Precision::Double),
            other => anyhow::bail!("MSGAN_PRECISION must be 'single' or 'double', got '{other}'"),
        },
    }
}
