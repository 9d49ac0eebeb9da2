//! Replay every built-in scenario against its golden transcript.

use tnt::sim::{catalog, golden};

fn main() {
    let mut bad = 0;
    for name in catalog::names() {
        match golden::check(name) {
            Ok(d) if d.is_empty() => println!("ok    {name}"),
            Ok(d) => {
                bad += 1;
                println!("DIFF  {name}");
                for line in d {
                    println!("      {line}");
                }
            }
            Err(e) => {
                bad += 1;
                println!("ERR   {name}: {e}");
            }
        }
    }
    if bad > 0 {
        std::process::exit(1);
    }
}
