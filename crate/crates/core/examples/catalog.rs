//! Lists the built-in nonlinearities and their Lipschitz constants.

fn main() {
    for entry in epcag::harness::catalog_list() {
        let params: Vec<String> = entry.params.iter().map(|p| format!("{}={}", p.name, p.default)).collect();
        println!("{:<20} {:<45} l = {:<26} [{}]", entry.name, entry.formula, entry.lipschitz, params.join(", "));
    }
}
