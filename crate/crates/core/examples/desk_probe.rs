// temp probe: freeze bimodal forward measurement values
use specdemux::fixtures::fixture_sensor;
use specdemux::WavelengthGrid;

fn main() {
    let grid = WavelengthGrid::visible_5nm();
    let sens = fixture_sensor();
    // same formula as tests/common bimodal_fixture
    let values: Vec<f64> = grid
        .wavelengths()
        .map(|wl| {
            let b1 = 0.8 * (-(wl - 480.0f64) * (wl - 480.0) / (2.0 * 25.0 * 25.0)).exp();
            let b2 = 0.6 * (-(wl - 620.0f64) * (wl - 620.0) / (2.0 * 30.0 * 30.0)).exp();
            (b1 + b2).clamp(0.0, 1.0)
        })
        .collect();
    for i in 0..3 {
        let mut acc = 0.0;
        for k in 0..61 {
            acc += sens.row(i)[k] * values[k];
        }
        println!("{}: {:.17e}", sens.channel_names()[i], acc);
    }
}
