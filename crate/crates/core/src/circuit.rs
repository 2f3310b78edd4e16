//! Multiport circuit descriptions of a [`FourierDecomposition`].
//!
//! JSON layout (also the serialized form of the decomposition itself):
//!
//! ```json
//! {"n": 2, "phi": 0.0, "layers": [
//!   {"type": "phases", "values": [0.0, 0.0]},
//!   {"type": "fourier", "size": 2, "adjoint": false, "offset": 0},
//!   ...
//! ]}
//! ```
//!
//! Layers are listed in matrix-product order (left to right), so light
//! entering the device meets the last layer first.
//!
//! SVG: one horizontal line per mode, phase layers as grey boxes on each
//! mode, Fourier blocks as hatched boxes spanning the modes they act on.
//! Geometry is fixed: 24 px per mode, 44 px per layer column, 18 px boxes.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::decompose::{FourierDecomposition, Layer};
use crate::diagonal::DiagonalUnitary;
use crate::error::{Error, Result};
use crate::io::to_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircuitFormat {
    Json,
    Svg,
}

impl FromStr for CircuitFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(CircuitFormat::Json),
            "svg" => Ok(CircuitFormat::Svg),
            other => Err(Error::Usage(format!("unknown circuit format {other:?} (expected json or svg)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LayerDoc {
    Phases { values: Vec<f64> },
    Fourier { size: usize, adjoint: bool, offset: usize },
}

#[derive(Serialize, Deserialize)]
struct CircuitDoc {
    n: usize,
    phi: f64,
    layers: Vec<LayerDoc>,
}

impl From<&FourierDecomposition> for CircuitDoc {
    fn from(d: &FourierDecomposition) -> Self {
        let layers = d
            .layers()
            .into_iter()
            .map(|l| match l {
                Layer::Phases(p) => LayerDoc::Phases {
                    values: p.phases().to_vec(),
                },
                Layer::Fourier { size, adjoint, offset } => LayerDoc::Fourier { size, adjoint, offset },
            })
            .collect();
        CircuitDoc { n: d.n, phi: d.phi, layers }
    }
}

impl TryFrom<CircuitDoc> for FourierDecomposition {
    type Error = Error;

    fn try_from(doc: CircuitDoc) -> Result<Self> {
        let n = doc.n;
        if n == 0 {
            return Err(Error::Format("circuit dimension must be positive".into()));
        }
        let mut phases = Vec::new();
        let mut blocks = Vec::new();
        for layer in doc.layers {
            match layer {
                LayerDoc::Phases { values } => phases.push(DiagonalUnitary::new(values)?),
                LayerDoc::Fourier { size, adjoint, offset } => blocks.push(Layer::Fourier { size, adjoint, offset }),
            }
        }
        if phases.len() != 2 * n - 1 {
            return Err(Error::Format(format!(
                "expected {} phase layers, found {}",
                2 * n - 1,
                phases.len()
            )));
        }
        let backward = phases.split_off(n);
        let d = FourierDecomposition {
            n,
            phi: doc.phi,
            forward: phases,
            backward,
        };
        d.validate()?;
        // the interleaving must match the canonical layout exactly
        let expected: Vec<Layer> = d
            .layers()
            .into_iter()
            .filter(|l| matches!(l, Layer::Fourier { .. }))
            .collect();
        if expected != blocks {
            return Err(Error::Format("Fourier blocks do not follow the canonical layout".into()));
        }
        Ok(d)
    }
}

impl Serialize for FourierDecomposition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CircuitDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierDecomposition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = CircuitDoc::deserialize(d)?;
        FourierDecomposition::try_from(doc).map_err(serde::de::Error::custom)
    }
}

pub fn emit_multiport(d: &FourierDecomposition, format: CircuitFormat) -> Result<Vec<u8>> {
    d.validate()?;
    match format {
        CircuitFormat::Json => Ok(to_json(d)?.into_bytes()),
        CircuitFormat::Svg => Ok(render_svg(d).into_bytes()),
    }
}

/// Inverse of the JSON emitter.
pub fn parse_multiport(bytes: &[u8]) -> Result<FourierDecomposition> {
    serde_json::from_slice(bytes).map_err(|e| Error::Format(e.to_string()))
}

const MODE_PITCH: f64 = 24.0;
const COLUMN_PITCH: f64 = 44.0;
const BOX: f64 = 18.0;
const MARGIN: f64 = 30.0;

fn render_svg(d: &FourierDecomposition) -> String {
    let layers = d.layers();
    let width = 2.0 * MARGIN + COLUMN_PITCH * layers.len() as f64;
    let height = 2.0 * MARGIN + MODE_PITCH * (d.n.saturating_sub(1)) as f64;
    let y = |mode: usize| MARGIN + MODE_PITCH * mode as f64;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        s,
        r##"<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><rect width="6" height="6" fill="white"/><line x1="0" y1="0" x2="0" y2="6" stroke="black" stroke-width="2"/></pattern></defs>"##
    );
    let _ = writeln!(s, r#"<title>multiport n={} phi={:.6}</title>"#, d.n, d.phi);
    for mode in 0..d.n {
        let _ = writeln!(
            s,
            r#"<line class="mode" x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-width="1"/>"#,
            MARGIN / 2.0,
            y(mode),
            width - MARGIN / 2.0,
            y(mode)
        );
    }
    for (col, layer) in layers.iter().enumerate() {
        let cx = MARGIN + COLUMN_PITCH * (col as f64 + 0.5);
        match layer {
            Layer::Phases(p) => {
                for (mode, value) in p.phases().iter().enumerate() {
                    let _ = writeln!(
                        s,
                        r##"<rect class="phase" x="{:.1}" y="{:.1}" width="{BOX}" height="{BOX}" fill="#b0b0b0" stroke="black"><title>{value:.6}</title></rect>"##,
                        cx - BOX / 2.0,
                        y(mode) - BOX / 2.0
                    );
                }
            }
            Layer::Fourier { size, adjoint, offset } => {
                let top = y(*offset) - BOX / 2.0;
                let h = MODE_PITCH * (*size as f64 - 1.0) + BOX;
                let label = if *adjoint { format!("F{size}†") } else { format!("F{size}") };
                let _ = writeln!(
                    s,
                    r#"<rect class="fourier" x="{:.1}" y="{top:.1}" width="{BOX}" height="{h:.1}" fill="url(#hatch)" stroke="black"><title>{label}</title></rect>"#,
                    cx - BOX / 2.0
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::fourier_decompose;
    use crate::random::haar_random;
    use crate::scaler::ScalingOptions;

    fn decomposition(n: usize, seed: u64) -> FourierDecomposition {
        fourier_decompose(&haar_random(n, seed).unwrap(), &ScalingOptions::default()).unwrap()
    }

    fn count_layers(json: &[u8]) -> (usize, usize) {
        let v: serde_json::Value = serde_json::from_slice(json).unwrap();
        let layers = v["layers"].as_array().unwrap();
        let phases = layers.iter().filter(|l| l["type"] == "phases").count();
        let fourier = layers.iter().filter(|l| l["type"] == "fourier").count();
        (phases, fourier)
    }

    #[test]
    fn layer_counts() {
        let json = emit_multiport(&decomposition(4, 1), CircuitFormat::Json).unwrap();
        assert_eq!(count_layers(&json), (7, 6));
        let json = emit_multiport(&decomposition(2, 1), CircuitFormat::Json).unwrap();
        assert_eq!(count_layers(&json), (3, 2));
    }

    #[test]
    fn json_round_trip_is_exact() {
        for n in 1..=6 {
            let d = decomposition(n, 10 + n as u64);
            let back = parse_multiport(&emit_multiport(&d, CircuitFormat::Json).unwrap()).unwrap();
            assert_eq!(back, d);
        }
    }

    #[test]
    fn svg_has_expected_elements() {
        let svg = String::from_utf8(emit_multiport(&decomposition(4, 3), CircuitFormat::Svg).unwrap()).unwrap();
        assert!(svg.starts_with("<?xml"));
        assert_eq!(svg.matches(r#"class="mode""#).count(), 4);
        assert_eq!(svg.matches(r#"class="phase""#).count(), 7 * 4);
        assert_eq!(svg.matches(r#"class="fourier""#).count(), 6);
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn unknown_format_is_usage_error() {
        assert!(matches!("png".parse::<CircuitFormat>(), Err(Error::Usage(_))));
        assert_eq!("SVG".parse::<CircuitFormat>().unwrap(), CircuitFormat::Svg);
    }

    #[test]
    fn rejects_scrambled_layout() {
        let d = decomposition(3, 5);
        let mut v: serde_json::Value = serde_json::from_slice(&emit_multiport(&d, CircuitFormat::Json).unwrap()).unwrap();
        v["layers"][1]["offset"] = serde_json::json!(1);
        assert!(parse_multiport(v.to_string().as_bytes()).is_err());
    }
}
