//! Lloyd-Max scalar quantisers against uniform ones on skewed data.
//!
//! cargo run --example scalar_quantization

use csi_lossy::classic::ScalarQuantizer;
use csi_lossy::rng::seeded;
use rand_distr::{Distribution, Exp};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = seeded(11);
    let exp = Exp::new(1.0)?;
    let samples: Vec<f64> = (0..20_000).map(|_| exp.sample(&mut rng)).collect();

    println!("{:>4} {:>14} {:>14}", "bits", "uniform MSE", "Lloyd-Max MSE");
    for bits in 1..=8 {
        let uniform = ScalarQuantizer::uniform(&samples, bits)?;
        let lloyd = ScalarQuantizer::fit(&samples, bits)?;
        println!("{bits:>4} {:>14.3e} {:>14.3e}", uniform.mse(&samples), lloyd.mse(&samples));
    }
    let q = ScalarQuantizer::fit(&samples, 2)?;
    println!("2-bit levels {:?}", q.levels);
    println!("2-bit thresholds {:?}", q.thresholds);
    Ok(())
}
