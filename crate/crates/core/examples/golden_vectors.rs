//! Prints the golden vectors, or writes them to the directory given as the first argument.

use trustee::vectors::{golden_vectors, write_vectors};

pub fn run_example() -> usize {
    if let Some(dir) = std::env::args().nth(1).filter(|a| !a.starts_with('-')) {
        for p in write_vectors(dir.as_ref()).expect("write vectors") {
            println!("wrote {}", p.display());
        }
    }
    let mut total = 0;
    for file in golden_vectors() {
        println!("{}", file.file_name);
        for v in &file.vectors {
            let outputs: Vec<_> = v.outputs.keys().map(String::as_str).collect();
            println!("  {:<14} -> {}", v.name, outputs.join(", "));
        }
        total += file.vectors.len();
    }
    total
}

#[allow(dead_code)]
fn main() {
    run_example();
}
