//! Raw-socket backend. Needs CAP_NET_RAW (or root).
//!
//! Traces use UDP probes with a fixed port pair so that per-flow load
//! balancers keep them on one path. Replies are read from a raw ICMP socket;
//! a probe is matched by its quoted ports and the quoted IP total length,
//! which encodes a per-probe sequence number.

use std::io::Read;
use std::net::{Ipv4Addr, SocketAddr, SocketAddrV4, UdpSocket};
use std::time::{Duration, Instant};

use socket2::{Domain, Protocol, Socket, Type};

use super::{ProbeError, ProbeReply, Prober};
use crate::model::{LabelStackEntry, ReplyKind};

const DEST_PORT: u16 = 33434;
const ICMP_ECHO_REPLY: u8 = 0;
const ICMP_UNREACH: u8 = 3;
const ICMP_ECHO: u8 = 8;
const ICMP_TIME_EXCEEDED: u8 = 11;
/// Original datagram length assumed when the ICMP length field is zero.
const COMPAT_ORIGINAL_LEN: usize = 128;
const MPLS_CLASS: u8 = 1;
const MPLS_CTYPE_INCOMING: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuotedProbe {
    Echo { id: u16, seq: u16 },
    Udp { src_port: u16, dst_port: u16 },
}

/// What we could pull out of one received IPv4+ICMP packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedIcmp {
    pub source: Ipv4Addr,
    pub ip_ttl: u8,
    pub icmp_type: u8,
    pub icmp_code: u8,
    /// Set for echo-replies.
    pub echo: Option<(u16, u16)>,
    /// Header fields of the quoted datagram, for errors.
    pub quoted_dst: Option<Ipv4Addr>,
    pub quoted_ttl: Option<u8>,
    pub quoted_len: Option<u16>,
    pub quoted_probe: Option<QuotedProbe>,
    pub lse_stack: Vec<LabelStackEntry>,
}

fn be16(b: &[u8], at: usize) -> Option<u16> {
    Some(u16::from_be_bytes([*b.get(at)?, *b.get(at + 1)?]))
}

pub fn checksum(data: &[u8]) -> u16 {
    let mut sum: u32 = data
        .chunks(2)
        .map(|c| u32::from(u16::from_be_bytes([c[0], *c.get(1).unwrap_or(&0)])))
        .sum();
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

pub fn echo_request(id: u16, seq: u16, payload: &[u8]) -> Vec<u8> {
    let mut p = vec![ICMP_ECHO, 0, 0, 0];
    p.extend_from_slice(&id.to_be_bytes());
    p.extend_from_slice(&seq.to_be_bytes());
    p.extend_from_slice(payload);
    let c = checksum(&p);
    p[2..4].copy_from_slice(&c.to_be_bytes());
    p
}

/// Parse the MPLS label stack object out of an ICMP extension structure.
pub fn parse_extensions(ext: &[u8]) -> Vec<LabelStackEntry> {
    if ext.len() < 4 || ext[0] >> 4 != 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut at = 4;
    while at + 4 <= ext.len() {
        let Some(len) = be16(ext, at).map(usize::from) else {
            break;
        };
        if len < 4 || at + len > ext.len() {
            break;
        }
        if ext[at + 2] == MPLS_CLASS && ext[at + 3] == MPLS_CTYPE_INCOMING {
            out.extend(
                ext[at + 4..at + len].chunks_exact(4).map(|w| {
                    LabelStackEntry::from_bits(u32::from_be_bytes([w[0], w[1], w[2], w[3]]))
                }),
            );
        }
        at += len;
    }
    out
}

pub fn parse_icmp(packet: &[u8]) -> Option<ParsedIcmp> {
    let ihl = usize::from(packet.first()? & 0x0f) * 4;
    if packet[0] >> 4 != 4 || ihl < 20 || packet.len() < ihl + 8 {
        return None;
    }
    let source = Ipv4Addr::new(packet[12], packet[13], packet[14], packet[15]);
    let icmp = &packet[ihl..];
    let mut out = ParsedIcmp {
        source,
        ip_ttl: packet[8],
        icmp_type: icmp[0],
        icmp_code: icmp[1],
        echo: None,
        quoted_dst: None,
        quoted_ttl: None,
        quoted_len: None,
        quoted_probe: None,
        lse_stack: Vec::new(),
    };
    match icmp[0] {
        ICMP_ECHO_REPLY => {
            out.echo = Some((be16(icmp, 4)?, be16(icmp, 6)?));
        }
        ICMP_UNREACH | ICMP_TIME_EXCEEDED => {
            let body = &icmp[8..];
            let qihl = usize::from(body.first()? & 0x0f) * 4;
            if body.len() < qihl + 8 || qihl < 20 {
                return Some(out);
            }
            out.quoted_len = be16(body, 2);
            out.quoted_ttl = Some(body[8]);
            out.quoted_dst = Some(Ipv4Addr::new(body[16], body[17], body[18], body[19]));
            let l4 = &body[qihl..];
            out.quoted_probe = match body[9] {
                1 => Some(QuotedProbe::Echo {
                    id: be16(l4, 4)?,
                    seq: be16(l4, 6)?,
                }),
                17 => Some(QuotedProbe::Udp {
                    src_port: be16(l4, 0)?,
                    dst_port: be16(l4, 2)?,
                }),
                _ => None,
            };
            // Length field counts 32-bit words of original datagram.
            let words = usize::from(icmp[5]);
            let orig = if words == 0 {
                COMPAT_ORIGINAL_LEN
            } else {
                words * 4
            };
            if body.len() > orig {
                out.lse_stack = parse_extensions(&body[orig..]);
            }
        }
        _ => {}
    }
    Some(out)
}

pub struct LiveProber {
    icmp: Socket,
    udp: UdpSocket,
    src_port: u16,
    ident: u16,
    seq: u16,
    pub timeout: Duration,
    pub retries: u32,
    pub spacing: Duration,
    last_send: Option<Instant>,
}

impl LiveProber {
    pub fn new(flow_id: u16) -> Result<Self, ProbeError> {
        let icmp = Socket::new(Domain::IPV4, Type::RAW, Some(Protocol::ICMPV4))
            .map_err(|e| ProbeError::Socket(e.to_string()))?;
        // A fixed source port keeps the flow stable; fall back to any port.
        let port = 32768 + (flow_id % 16384);
        let udp = UdpSocket::bind(SocketAddrV4::new(Ipv4Addr::UNSPECIFIED, port))
            .or_else(|_| UdpSocket::bind(SocketAddrV4::new(Ipv4Addr::UNSPECIFIED, 0)))
            .map_err(|e| ProbeError::Socket(e.to_string()))?;
        let src_port = udp
            .local_addr()
            .map_err(|e| ProbeError::Socket(e.to_string()))?
            .port();
        Ok(Self {
            icmp,
            udp,
            src_port,
            ident: std::process::id() as u16,
            seq: 0,
            timeout: Duration::from_secs(2),
            retries: 2,
            spacing: Duration::from_millis(20),
            last_send: None,
        })
    }

    fn pace(&mut self) {
        if let Some(t) = self.last_send {
            let since = t.elapsed();
            if since < self.spacing {
                std::thread::sleep(self.spacing - since);
            }
        }
        self.last_send = Some(Instant::now());
    }

    fn next_seq(&mut self) -> u16 {
        self.seq = self.seq.wrapping_add(1);
        self.seq
    }

    /// Wait for the first packet accepted by `want`.
    fn wait(
        &mut self,
        sent_at: Instant,
        want: &dyn Fn(&ParsedIcmp) -> bool,
    ) -> Result<Option<(ParsedIcmp, f64)>, ProbeError> {
        let deadline = sent_at + self.timeout;
        let mut buf = [0u8; 1500];
        loop {
            let now = Instant::now();
            if now >= deadline {
                return Ok(None);
            }
            self.icmp
                .set_read_timeout(Some(deadline - now))
                .map_err(|e| ProbeError::Io(e.to_string()))?;
            let n = match (&self.icmp).read(&mut buf) {
                Ok(n) => n,
                Err(e)
                    if matches!(
                        e.kind(),
                        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                    ) =>
                {
                    return Ok(None)
                }
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(ProbeError::Io(e.to_string())),
            };
            if let Some(p) = parse_icmp(&buf[..n]) {
                if want(&p) {
                    let rtt = sent_at.elapsed().as_secs_f64() * 1000.0;
                    return Ok(Some((p, rtt)));
                }
            }
        }
    }

    fn udp_probe(&mut self, target: Ipv4Addr, ttl: u8) -> Result<Option<ProbeReply>, ProbeError> {
        for _ in 0..=self.retries {
            let seq = self.next_seq();
            // Payload length carries the probe number; the quoted IP header gives it back.
            let payload = vec![0u8; 8 + usize::from(seq % 64)];
            let ip_len = (20 + 8 + payload.len()) as u16;
            self.pace();
            self.udp
                .set_ttl(u32::from(ttl))
                .map_err(|e| ProbeError::Io(e.to_string()))?;
            let sent_at = Instant::now();
            self.udp
                .send_to(
                    &payload,
                    SocketAddr::V4(SocketAddrV4::new(target, DEST_PORT)),
                )
                .map_err(|e| ProbeError::Io(e.to_string()))?;
            let src_port = self.src_port;
            let want = move |p: &ParsedIcmp| {
                matches!(p.icmp_type, ICMP_UNREACH | ICMP_TIME_EXCEEDED)
                    && p.quoted_dst == Some(target)
                    && p.quoted_len == Some(ip_len)
                    && p.quoted_probe
                        == Some(QuotedProbe::Udp {
                            src_port,
                            dst_port: DEST_PORT,
                        })
            };
            if let Some((p, rtt)) = self.wait(sent_at, &want)? {
                let kind = if p.icmp_type == ICMP_TIME_EXCEEDED {
                    ReplyKind::TimeExceeded
                } else {
                    ReplyKind::DestUnreachable
                };
                return Ok(Some(ProbeReply {
                    address: p.source,
                    kind,
                    reply_ttl: p.ip_ttl,
                    qttl: p.quoted_ttl,
                    lse_stack: p.lse_stack,
                    rtt: Some(rtt),
                }));
            }
        }
        Ok(None)
    }
}

impl Prober for LiveProber {
    fn trace_hop(
        &mut self,
        target: Ipv4Addr,
        ttl: u8,
        _flow_id: u16,
    ) -> Result<Option<ProbeReply>, ProbeError> {
        self.udp_probe(target, ttl)
    }

    fn echo(&mut self, target: Ipv4Addr) -> Result<Option<u8>, ProbeError> {
        let ident = self.ident;
        for _ in 0..=self.retries {
            let seq = self.next_seq();
            let pkt = echo_request(ident, seq, b"tnt-echo");
            self.pace();
            let sent_at = Instant::now();
            self.icmp
                .send_to(&pkt, &SocketAddrV4::new(target, 0).into())
                .map_err(|e| ProbeError::Io(e.to_string()))?;
            let want = move |p: &ParsedIcmp| p.source == target && p.echo == Some((ident, seq));
            if let Some((p, _)) = self.wait(sent_at, &want)? {
                return Ok(Some(p.ip_ttl));
            }
        }
        Ok(None)
    }

    fn udp(&mut self, target: Ipv4Addr, ttl: u8) -> Result<Option<ProbeReply>, ProbeError> {
        self.udp_probe(target, ttl)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ip_header(src: [u8; 4], dst: [u8; 4], ttl: u8, proto: u8, total: u16) -> Vec<u8> {
        let mut h = vec![0x45, 0, 0, 0, 0, 0, 0, 0, ttl, proto, 0, 0];
        h[2..4].copy_from_slice(&total.to_be_bytes());
        h.extend_from_slice(&src);
        h.extend_from_slice(&dst);
        h
    }

    fn time_exceeded_with_mpls(entries: &[LabelStackEntry]) -> Vec<u8> {
        let mut quoted = ip_header([10, 0, 0, 1], [192, 168, 7, 1], 1, 17, 40);
        quoted.extend_from_slice(&[0x80, 0x00, 0x82, 0x9a, 0, 20, 0, 0]);
        quoted.resize(COMPAT_ORIGINAL_LEN, 0);
        let mut obj = Vec::new();
        let len = 4 + 4 * entries.len() as u16;
        obj.extend_from_slice(&len.to_be_bytes());
        obj.extend_from_slice(&[MPLS_CLASS, MPLS_CTYPE_INCOMING]);
        for e in entries {
            obj.extend_from_slice(&e.to_bits().to_be_bytes());
        }
        let mut ext = vec![0x20, 0, 0, 0];
        ext.extend_from_slice(&obj);
        let mut icmp = vec![ICMP_TIME_EXCEEDED, 0, 0, 0, 0, 32, 0, 0];
        icmp.extend_from_slice(&quoted);
        icmp.extend_from_slice(&ext);
        let mut pkt = ip_header([10, 1, 0, 2], [10, 0, 0, 1], 247, 1, 0);
        pkt.extend_from_slice(&icmp);
        pkt
    }

    #[test]
    fn parses_time_exceeded_with_label_stack() {
        let stack = [LabelStackEntry::new(19, 1, true)];
        let p = parse_icmp(&time_exceeded_with_mpls(&stack)).unwrap();
        assert_eq!(p.source, Ipv4Addr::new(10, 1, 0, 2));
        assert_eq!(p.ip_ttl, 247);
        assert_eq!(p.icmp_type, ICMP_TIME_EXCEEDED);
        assert_eq!(p.quoted_ttl, Some(1));
        assert_eq!(p.quoted_len, Some(40));
        assert_eq!(p.quoted_dst, Some(Ipv4Addr::new(192, 168, 7, 1)));
        assert_eq!(
            p.quoted_probe,
            Some(QuotedProbe::Udp {
                src_port: 0x8000,
                dst_port: 0x829a
            })
        );
        assert_eq!(p.lse_stack, stack);
    }

    #[test]
    fn two_entry_stack() {
        let stack = [
            LabelStackEntry::new(0, 252, false),
            LabelStackEntry::new(28, 255, true),
        ];
        let p = parse_icmp(&time_exceeded_with_mpls(&stack)).unwrap();
        assert_eq!(p.lse_stack, stack);
    }

    #[test]
    fn echo_reply_and_checksum() {
        let req = echo_request(7, 9, b"abcd");
        assert_eq!(checksum(&req), 0);
        let mut reply = req.clone();
        reply[0] = ICMP_ECHO_REPLY;
        let mut pkt = ip_header([192, 0, 2, 1], [10, 0, 0, 1], 61, 1, 0);
        pkt.extend_from_slice(&reply);
        let p = parse_icmp(&pkt).unwrap();
        assert_eq!(p.echo, Some((7, 9)));
        assert_eq!(p.ip_ttl, 61);
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(parse_icmp(&[]).is_none());
        assert!(parse_icmp(&[0x60; 40]).is_none());
        assert!(parse_extensions(&[0x10, 0, 0, 0, 0, 8, 1, 1, 0, 0, 0, 0]).is_empty());
    }
}
