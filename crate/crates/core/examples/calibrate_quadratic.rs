//! Fits `Y = (c0 + c1*X + c2*X^2) * h` to noisy samples and writes the model.
//!
//! The samples follow `Y = 0.0036 X^2 - 0.5373 X + 21.714` with a little
//! deterministic jitter.

use monodist::calib::{read_samples, write_samples};
use monodist::{fit_quadratic, CalibrationSample};

fn main() -> monodist::Result<()> {
    let truth = |x: f64| 0.0036 * x * x - 0.5373 * x + 21.714;
    let samples: Vec<CalibrationSample> = (0..25)
        .map(|i| {
            let x = 2.0 * i as f64;
            let jitter = 0.05 * ((i * 7 % 11) as f64 - 5.0) / 5.0;
            CalibrationSample::new(x, truth(x) + jitter)
        })
        .collect();

    let mut csv = Vec::new();
    write_samples(&samples, &mut csv)?;
    let samples = read_samples(&csv[..])?;

    let model = fit_quadratic(&samples, 1.0)?;
    println!(
        "c0 = {:.4}  c1 = {:.4}  c2 = {:.5}",
        model.c0, model.c1, model.c2
    );
    println!(
        "fit rmse = {:.4} m over {} samples",
        model.fit_rmse, model.n_samples
    );
    for x in [0.0, 10.0, 25.0, 45.0] {
        println!(
            "X = {x:>4}  Y = {:7.3}  (clean {:7.3})",
            model.apply(x),
            truth(x)
        );
    }

    let exact = fit_quadratic(
        &(0..10)
            .map(|i| CalibrationSample::new(5.0 * i as f64, truth(5.0 * i as f64)))
            .collect::<Vec<_>>(),
        1.0,
    )?;
    println!("noise-free fit at X = 10: {:.6}", exact.apply(10.0));
    print!("{}", String::from_utf8_lossy(&model.to_json()));
    Ok(())
}
