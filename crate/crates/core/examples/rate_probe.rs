use npl_core::constructions::*;

fn main() {
    let setup = CalibrationSetup { nodes: 256, modes: 64, dt0: 2e-3, t_budget: 40.0 };
    let calib = calibrate_t_lambda(3.0, &[1.05, 1.1, 1.2, 1.5, 2.0], &setup).unwrap();
    for c in &calib {
        println!("lambda={}: T={:?}", c.lambda, c.t_blow);
    }
}
