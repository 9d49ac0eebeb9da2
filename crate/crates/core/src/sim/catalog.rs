//! Scenarios shipped with the crate.

/// `(name, text)` for every built-in scenario, bases included.
pub const SCENARIOS: &[(&str, &str)] = &[
    (
        "cisco-base",
        include_str!("../../scenarios/cisco-base.toml"),
    ),
    (
        "juniper-base",
        include_str!("../../scenarios/juniper-base.toml"),
    ),
    (
        "cisco-vprn-base",
        include_str!("../../scenarios/cisco-vprn-base.toml"),
    ),
    (
        "juniper-vprn-base",
        include_str!("../../scenarios/juniper-vprn-base.toml"),
    ),
    (
        "cisco-12.4-explicit-uhp",
        include_str!("../../scenarios/cisco-12.4-explicit-uhp.toml"),
    ),
    (
        "cisco-15.2-explicit-php",
        include_str!("../../scenarios/cisco-15.2-explicit-php.toml"),
    ),
    (
        "cisco-15.2-explicit-uhp",
        include_str!("../../scenarios/cisco-15.2-explicit-uhp.toml"),
    ),
    (
        "junos-vmx-explicit-php",
        include_str!("../../scenarios/junos-vmx-explicit-php.toml"),
    ),
    (
        "junos-vmx-explicit-php-icmp-tunneling",
        include_str!("../../scenarios/junos-vmx-explicit-php-icmp-tunneling.toml"),
    ),
    (
        "cisco-15.2-opaque",
        include_str!("../../scenarios/cisco-15.2-opaque.toml"),
    ),
    (
        "cisco-15.2-invisible-php",
        include_str!("../../scenarios/cisco-15.2-invisible-php.toml"),
    ),
    (
        "cisco-15.2-invisible-uhp",
        include_str!("../../scenarios/cisco-15.2-invisible-uhp.toml"),
    ),
    (
        "cisco-15.2-invisible-uhp-host-routes",
        include_str!("../../scenarios/cisco-15.2-invisible-uhp-host-routes.toml"),
    ),
    (
        "cisco-15.2-invisible-uhp-acl",
        include_str!("../../scenarios/cisco-15.2-invisible-uhp-acl.toml"),
    ),
    (
        "junos-olive-invisible-php",
        include_str!("../../scenarios/junos-olive-invisible-php.toml"),
    ),
    (
        "junos-vmx-invisible-php",
        include_str!("../../scenarios/junos-vmx-invisible-php.toml"),
    ),
    (
        "cisco-15.2-explicit-jump",
        include_str!("../../scenarios/cisco-15.2-explicit-jump.toml"),
    ),
    (
        "junos-olive-explicit-jump",
        include_str!("../../scenarios/junos-olive-explicit-jump.toml"),
    ),
    (
        "junos-olive-invisible-jump",
        include_str!("../../scenarios/junos-olive-invisible-jump.toml"),
    ),
    (
        "cisco-15.2-rsvp-php",
        include_str!("../../scenarios/cisco-15.2-rsvp-php.toml"),
    ),
    (
        "junos-vmx-rsvp-php",
        include_str!("../../scenarios/junos-vmx-rsvp-php.toml"),
    ),
    (
        "cisco-15.2-rsvp-uhp",
        include_str!("../../scenarios/cisco-15.2-rsvp-uhp.toml"),
    ),
    (
        "junos-vmx-rsvp-uhp",
        include_str!("../../scenarios/junos-vmx-rsvp-uhp.toml"),
    ),
    (
        "cisco-15.2-vprn-php",
        include_str!("../../scenarios/cisco-15.2-vprn-php.toml"),
    ),
    (
        "cisco-15.2-vprn-uhp",
        include_str!("../../scenarios/cisco-15.2-vprn-uhp.toml"),
    ),
    (
        "junos-vmx-vprn",
        include_str!("../../scenarios/junos-vmx-vprn.toml"),
    ),
    (
        "junos-vmx-vprn-twisted",
        include_str!("../../scenarios/junos-vmx-vprn-twisted.toml"),
    ),
];

pub fn get(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn is_base(name: &str) -> bool {
    name.ends_with("-base")
}

/// Runnable scenarios, bases excluded.
pub fn names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|(n, _)| *n).filter(|n| !is_base(n))
}
