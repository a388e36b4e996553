/// Linear RGB triple, each component in `[0, 1]`.
pub type Rgb = [f64; 3];

const fn hex(v: u32) -> Rgb {
    [
        ((v >> 16) & 0xff) as f64 / 255.0,
        ((v >> 8) & 0xff) as f64 / 255.0,
        (v & 0xff) as f64 / 255.0,
    ]
}

/// Ten-entry categorical palette for nominal and ordinal colour channels.
pub const CATEGORICAL_PALETTE: [Rgb; 10] = [
    hex(0x4e79a7),
    hex(0xf28e2b),
    hex(0xe15759),
    hex(0x76b7b2),
    hex(0x59a14f),
    hex(0xedc948),
    hex(0xb07aa1),
    hex(0xff9da7),
    hex(0x9c755f),
    hex(0xbab0ac),
];

/// Endpoints of the continuous ramp used for quantitative colour.
pub const RAMP_LOW: Rgb = hex(0xdeebf7);
pub const RAMP_HIGH: Rgb = hex(0x08306b);

/// Colour of marks with no colour channel.
pub const DEFAULT_MARK_COLOR: Rgb = hex(0x4c78a8);

const NAMED: [(&str, u32); 14] = [
    ("black", 0x000000),
    ("white", 0xffffff),
    ("red", 0xff0000),
    ("green", 0x008000),
    ("blue", 0x0000ff),
    ("yellow", 0xffff00),
    ("orange", 0xffa500),
    ("purple", 0x800080),
    ("grey", 0x808080),
    ("gray", 0x808080),
    ("steelblue", 0x4682b4),
    ("cyan", 0x00ffff),
    ("magenta", 0xff00ff),
    ("brown", 0xa52a2a),
];

/// Parses a CSS-style colour name or `#rrggbb` literal.
pub fn parse_color(text: &str) -> Option<Rgb> {
    let t = text.trim();
    if let Some(h) = t.strip_prefix('#') {
        if h.len() == 6 {
            return u32::from_str_radix(h, 16).ok().map(hex);
        }
        return None;
    }
    let lower = t.to_ascii_lowercase();
    NAMED
        .iter()
        .find(|(name, _)| *name == lower)
        .map(|(_, v)| hex(*v))
}

pub(crate) fn ramp(t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0);
    std::array::from_fn(|i| (1.0 - t) * RAMP_LOW[i] + t * RAMP_HIGH[i])
}
