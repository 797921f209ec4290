//! Built-in fixture data.
//!
//! The canonical copies live under `fixtures/` in this crate and are embedded
//! at compile time. The sensor is a three-channel Gaussian stand-in for a
//! Bayer-CFA camera (blue/green/red peaks at 465/532/600 nm with overlapping
//! supports); the patch set is 24 smooth Macbeth-chart-like reflectances used
//! to train the classic Wiener baseline; the icon table holds five named
//! section spectra for the fixture icon experiment.

use crate::io::{parse_sensitivity_csv, parse_spectra_table_csv, SpectraTable};
use crate::sensitivity::SensitivityMatrix;

const SENSOR_RGB_CSV: &str = include_str!("../fixtures/sensor_rgb.csv");
const WEM_PATCHES_CSV: &str = include_str!("../fixtures/wem_patches.csv");
const ICON_SPECTRA_CSV: &str = include_str!("../fixtures/icon_spectra.csv");

/// The default simulated RGB sensor (61 points, 410-710 nm).
pub fn fixture_sensor() -> SensitivityMatrix {
    parse_sensitivity_csv(SENSOR_RGB_CSV.as_bytes(), "fixtures/sensor_rgb.csv")
        .expect("embedded sensor fixture is valid")
}

/// 24 smooth patch reflectances for training the Wiener baseline.
pub fn fixture_wem_patches() -> SpectraTable {
    parse_spectra_table_csv(WEM_PATCHES_CSV.as_bytes(), "fixtures/wem_patches.csv")
        .expect("embedded patch fixture is valid")
}

/// Five named section spectra standing in for the physical test icon.
pub fn fixture_icon_spectra() -> SpectraTable {
    parse_spectra_table_csv(ICON_SPECTRA_CSV.as_bytes(), "fixtures/icon_spectra.csv")
        .expect("embedded icon fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::WavelengthGrid;
    use crate::sensitivity::validate_sensitivity;
    use crate::spectrum::SpectrumKind;

    #[test]
    fn sensor_fixture_shape_and_ordering() {
        let s = fixture_sensor();
        assert_eq!(s.grid(), WavelengthGrid::visible_5nm());
        assert_eq!(s.channels(), 3);
        assert_eq!(s.channel_names(), &["blue", "green", "red"]);
        let report = validate_sensitivity(&s);
        assert_eq!(report.rank, 3);
        // peaks ascend in wavelength
        assert!(report.channels[0].peak_nm < report.channels[1].peak_nm);
        assert!(report.channels[1].peak_nm < report.channels[2].peak_nm);
        // overlapping supports
        assert!(report.channels[0].support_nm.1 > report.channels[1].support_nm.0);
        assert!(report.channels[1].support_nm.1 > report.channels[2].support_nm.0);
    }

    #[test]
    fn patch_fixture_is_24_valid_reflectances() {
        let t = fixture_wem_patches();
        assert_eq!(t.len(), 24);
        assert_eq!(t.grid(), WavelengthGrid::visible_5nm());
        let spectra = t.to_spectra(SpectrumKind::Reflectance).unwrap();
        assert_eq!(spectra.len(), 24);
    }

    #[test]
    fn icon_fixture_has_five_named_sections() {
        let t = fixture_icon_spectra();
        assert_eq!(t.names(), &["blue", "green", "red", "yellow", "white"]);
        assert!(t.to_spectra(SpectrumKind::Reflectance).is_ok());
    }
}
