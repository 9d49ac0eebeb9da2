//! Write traces as JSON lines, read them back and compare.

use std::io::Cursor;

use tnt::report::records::{read_records, write_records};
use tnt::report::TraceRecord;
use tnt::sim::{self, catalog};

fn main() {
    let records: Vec<TraceRecord> = catalog::names()
        .take(4)
        .map(|n| TraceRecord::new(sim::run(&sim::builtin(n).unwrap()), Some(n.to_string())))
        .collect();
    let mut buf = Vec::new();
    write_records(&mut buf, &records).expect("write to memory");
    println!("{} records, {} bytes", records.len(), buf.len());
    let first = String::from_utf8_lossy(&buf);
    let first = first.lines().next().unwrap_or_default();
    println!("first line starts: {}...", &first[..first.len().min(100)]);
    let back = read_records(Cursor::new(buf)).expect("records parse");
    assert_eq!(back, records);
    println!("round trip ok");
}
