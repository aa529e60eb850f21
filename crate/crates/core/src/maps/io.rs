use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmMapSet, EngineMapSet};
use crate::error::{Error, Result};

/// On-disk map file. Floats are written in shortest round-trip form, so a
/// save/load cycle reproduces every value bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapFile {
    Engine(EngineMapSet),
    Emachine(EmMapSet),
}

impl MapFile {
    pub fn validate(&self) -> Result<()> {
        match self {
            MapFile::Engine(m) => m.validate(),
            MapFile::Emachine(m) => m.validate(),
        }
    }

    pub fn into_engine(self) -> Result<EngineMapSet> {
        match self {
            MapFile::Engine(m) => Ok(m),
            MapFile::Emachine(_) => Err(Error::Validation("expected an engine map file".into())),
        }
    }

    pub fn into_emachine(self) -> Result<EmMapSet> {
        match self {
            MapFile::Emachine(m) => Ok(m),
            MapFile::Engine(_) => Err(Error::Validation("expected an e-machine map file".into())),
        }
    }
}

pub fn write_maps(maps: &MapFile, mut writer: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, maps)?;
    writer.write_all(b"\n").map_err(|e| Error::io("<map writer>", e))?;
    Ok(())
}

pub fn read_maps(reader: impl Read) -> Result<MapFile> {
    let maps: MapFile = serde_json::from_reader(reader)?;
    maps.validate()?;
    Ok(maps)
}

pub fn save_maps(maps: &MapFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_maps(maps, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_maps(path: impl AsRef<Path>) -> Result<MapFile> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_maps(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{generate_em_map, generate_engine_maps, EmSpec, EngineSpec};

    #[test]
    fn engine_round_trip_is_bitwise() {
        let m = MapFile::Engine(generate_engine_maps(&EngineSpec::reference()).unwrap());
        let mut buf = Vec::new();
        write_maps(&m, &mut buf).unwrap();
        let back = read_maps(buf.as_slice()).unwrap();
        let (MapFile::Engine(a), MapFile::Engine(b)) = (&m, &back) else { panic!() };
        for (x, y) in a.fuel.values.iter().zip(&b.fuel.values) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in a.fuel.x_axis.iter().zip(&b.fuel.x_axis) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(m, back);
        let p = back.into_engine().unwrap().envelope_max_power();
        assert!((p - 147_000.0).abs() / 147_000.0 < 0.01);
    }

    #[test]
    fn emachine_round_trip() {
        let m = MapFile::Emachine(generate_em_map(&EmSpec::new(47_000.0, 950.0, 300.0)).unwrap());
        let mut buf = Vec::new();
        write_maps(&m, &mut buf).unwrap();
        assert_eq!(read_maps(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn truncated_file_is_parse_error() {
        let m = MapFile::Engine(generate_engine_maps(&EngineSpec::reference()).unwrap());
        let mut buf = Vec::new();
        write_maps(&m, &mut buf).unwrap();
        buf.truncate(buf.len() / 2);
        assert!(matches!(read_maps(buf.as_slice()), Err(Error::Parse(_))));
    }
}
