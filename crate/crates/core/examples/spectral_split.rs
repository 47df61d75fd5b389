//! Block split of a non-normal matrix into stable and center parts.

use epcag::analysis::spectral_split;
use nalgebra::DMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    let split = spectral_split(&a, 1e-9)?;
    println!("{}", serde_json::to_string_pretty(&split.summary())?);
    println!("reconstruction error {:.2e}", (&split.inverse * split.block_matrix() * &split.transform - &a).norm());
    Ok(())
}
