//! Decode a time-exceeded reply carrying an MPLS label stack extension,
//! the way the live backend does.

use tnt::engine::live::parse_icmp;
use tnt::model::LabelStackEntry;

fn ipv4(src: [u8; 4], dst: [u8; 4], ttl: u8, proto: u8, total: u16) -> Vec<u8> {
    let mut h = vec![0x45, 0, 0, 0, 0, 0, 0, 0, ttl, proto, 0, 0];
    h[2..4].copy_from_slice(&total.to_be_bytes());
    h.extend_from_slice(&src);
    h.extend_from_slice(&dst);
    h
}

fn main() {
    // Quoted probe: UDP 32768 -> 33434, IP-TTL 1, padded to 128 bytes.
    let mut quoted = ipv4([10, 0, 0, 1], [192, 168, 7, 1], 1, 17, 40);
    quoted.extend_from_slice(&[0x80, 0x00, 0x82, 0x9a, 0, 20, 0, 0]);
    quoted.resize(128, 0);

    let stack = [LabelStackEntry::new(19, 1, true)];
    let mut obj = (4u16 + 4 * stack.len() as u16).to_be_bytes().to_vec();
    obj.extend_from_slice(&[1, 1]);
    for e in &stack {
        obj.extend_from_slice(&e.to_bits().to_be_bytes());
    }

    let mut icmp = vec![11, 0, 0, 0, 0, 32, 0, 0];
    icmp.extend_from_slice(&quoted);
    icmp.extend_from_slice(&[0x20, 0, 0, 0]);
    icmp.extend_from_slice(&obj);

    let mut pkt = ipv4([10, 1, 0, 2], [10, 0, 0, 1], 247, 1, 0);
    pkt.extend_from_slice(&icmp);

    let p = parse_icmp(&pkt).expect("well-formed reply");
    println!(
        "from {} ttl {} type {} code {}",
        p.source, p.ip_ttl, p.icmp_type, p.icmp_code
    );
    println!(
        "quoted: dst {:?} ttl {:?} probe {:?}",
        p.quoted_dst, p.quoted_ttl, p.quoted_probe
    );
    for e in &p.lse_stack {
        println!(
            "lse: label {} ttl {} bos {}",
            e.label, e.lse_ttl, e.bottom_of_stack
        );
    }
}
