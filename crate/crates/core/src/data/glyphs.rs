//! Fixed polyline skeletons for the synthetic generator, one per symbol.
//!
//! Coordinates: x in [0,1] across the character cell; y = 0 at the top of
//! the x-height box, y = 1 at the baseline. Ascenders reach up to about
//! -0.7, descenders down to about 1.6. Skeletons are pairwise distinct, so
//! a jitter-free rendering is injective over symbols.

pub type Stroke = &'static [(f32, f32)];

pub fn strokes(c: char) -> Option<&'static [Stroke]> {
    let s: &'static [Stroke] = match c {
        'a' => &[
            &[
                (0.72, 0.20),
                (0.45, 0.05),
                (0.18, 0.20),
                (0.10, 0.50),
                (0.18, 0.82),
                (0.45, 0.97),
                (0.72, 0.85),
            ],
            &[(0.78, 0.10), (0.78, 1.00)],
        ],
        'b' => &[
            &[(0.15, -0.70), (0.15, 1.00)],
            &[
                (0.15, 0.25),
                (0.50, 0.08),
                (0.78, 0.30),
                (0.80, 0.62),
                (0.60, 0.92),
                (0.30, 1.00),
                (0.15, 0.85),
            ],
        ],
        'c' => &[&[
            (0.78, 0.18),
            (0.55, 0.02),
            (0.25, 0.12),
            (0.10, 0.45),
            (0.20, 0.80),
            (0.50, 0.98),
            (0.78, 0.85),
        ]],
        'd' => &[
            &[(0.80, -0.70), (0.80, 1.00)],
            &[
                (0.80, 0.25),
                (0.45, 0.05),
                (0.15, 0.30),
                (0.12, 0.62),
                (0.30, 0.92),
                (0.62, 1.00),
                (0.80, 0.85),
            ],
        ],
        'e' => &[
            &[(0.12, 0.52), (0.80, 0.52)],
            &[
                (0.80, 0.52),
                (0.75, 0.20),
                (0.50, 0.03),
                (0.22, 0.16),
                (0.10, 0.50),
                (0.20, 0.85),
                (0.50, 0.99),
                (0.75, 0.88),
            ],
        ],
        'f' => &[
            &[(0.68, -0.55), (0.48, -0.68), (0.33, -0.50), (0.30, 1.00)],
            &[(0.10, 0.05), (0.62, 0.05)],
        ],
        'g' => &[
            &[
                (0.72, 0.20),
                (0.45, 0.04),
                (0.18, 0.20),
                (0.10, 0.50),
                (0.18, 0.80),
                (0.45, 0.96),
                (0.72, 0.82),
            ],
            &[(0.78, 0.10), (0.78, 1.25), (0.60, 1.55), (0.30, 1.50)],
        ],
        'h' => &[
            &[(0.15, -0.70), (0.15, 1.00)],
            &[
                (0.15, 0.45),
                (0.35, 0.10),
                (0.62, 0.12),
                (0.75, 0.45),
                (0.75, 1.00),
            ],
        ],
        'i' => &[
            &[(0.45, 0.12), (0.45, 1.00)],
            &[(0.45, -0.30), (0.45, -0.25)],
        ],
        'j' => &[
            &[(0.58, 0.12), (0.58, 1.30), (0.40, 1.58), (0.18, 1.45)],
            &[(0.58, -0.30), (0.58, -0.25)],
        ],
        'k' => &[
            &[(0.15, -0.70), (0.15, 1.00)],
            &[(0.70, 0.08), (0.15, 0.58)],
            &[(0.32, 0.42), (0.75, 1.00)],
        ],
        'l' => &[&[(0.45, -0.70), (0.45, 1.00)]],
        'm' => &[
            &[(0.10, 0.08), (0.10, 1.00)],
            &[(0.10, 0.35), (0.25, 0.08), (0.42, 0.30), (0.45, 1.00)],
            &[(0.45, 0.35), (0.60, 0.08), (0.80, 0.30), (0.85, 1.00)],
        ],
        'n' => &[
            &[(0.15, 0.08), (0.15, 1.00)],
            &[
                (0.15, 0.40),
                (0.35, 0.08),
                (0.65, 0.15),
                (0.75, 0.50),
                (0.75, 1.00),
            ],
        ],
        'o' => &[&[
            (0.45, 0.02),
            (0.72, 0.16),
            (0.80, 0.50),
            (0.72, 0.84),
            (0.45, 0.98),
            (0.18, 0.84),
            (0.10, 0.50),
            (0.18, 0.16),
            (0.45, 0.02),
        ]],
        'p' => &[
            &[(0.15, 0.10), (0.15, 1.60)],
            &[
                (0.15, 0.25),
                (0.50, 0.05),
                (0.78, 0.30),
                (0.78, 0.68),
                (0.50, 0.95),
                (0.15, 0.80),
            ],
        ],
        'q' => &[
            &[
                (0.78, 0.25),
                (0.45, 0.05),
                (0.15, 0.30),
                (0.15, 0.68),
                (0.45, 0.95),
                (0.78, 0.80),
            ],
            &[(0.80, 0.10), (0.80, 1.60)],
        ],
        'r' => &[
            &[(0.20, 0.08), (0.20, 1.00)],
            &[(0.20, 0.45), (0.40, 0.10), (0.68, 0.12), (0.78, 0.32)],
        ],
        's' => &[&[
            (0.75, 0.14),
            (0.50, 0.02),
            (0.22, 0.16),
            (0.30, 0.45),
            (0.62, 0.58),
            (0.70, 0.85),
            (0.45, 1.00),
            (0.14, 0.88),
        ]],
        't' => &[
            &[(0.40, -0.50), (0.40, 0.80), (0.52, 0.99), (0.70, 0.90)],
            &[(0.12, 0.02), (0.72, 0.02)],
        ],
        'u' => &[
            &[
                (0.13, 0.08),
                (0.13, 0.70),
                (0.30, 0.97),
                (0.60, 0.90),
                (0.75, 0.65),
            ],
            &[(0.78, 0.08), (0.78, 1.00)],
        ],
        'v' => &[&[(0.10, 0.08), (0.45, 1.00), (0.80, 0.08)]],
        'w' => &[&[
            (0.05, 0.08),
            (0.25, 1.00),
            (0.45, 0.30),
            (0.65, 1.00),
            (0.88, 0.08),
        ]],
        'x' => &[
            &[(0.12, 0.08), (0.78, 1.00)],
            &[(0.78, 0.08), (0.12, 1.00)],
        ],
        'y' => &[
            &[(0.15, 0.08), (0.47, 0.95)],
            &[(0.80, 0.08), (0.30, 1.55)],
        ],
        'z' => &[&[(0.15, 0.05), (0.75, 0.05), (0.15, 0.95), (0.78, 0.95)]],
        '0' => &[&[
            (0.45, -0.68),
            (0.70, -0.50),
            (0.78, 0.15),
            (0.70, 0.80),
            (0.45, 0.98),
            (0.20, 0.80),
            (0.12, 0.15),
            (0.20, -0.50),
            (0.45, -0.68),
        ]],
        '1' => &[&[(0.28, -0.40), (0.50, -0.68), (0.50, 1.00)]],
        '2' => &[&[
            (0.18, -0.45),
            (0.42, -0.68),
            (0.68, -0.50),
            (0.68, -0.15),
            (0.15, 0.95),
            (0.78, 0.95),
        ]],
        '3' => &[&[
            (0.18, -0.55),
            (0.48, -0.68),
            (0.70, -0.45),
            (0.45, -0.05),
            (0.72, 0.40),
            (0.55, 0.92),
            (0.18, 0.85),
        ]],
        '4' => &[
            &[(0.58, -0.68), (0.12, 0.35), (0.82, 0.35)],
            &[(0.60, -0.20), (0.60, 1.00)],
        ],
        '5' => &[&[
            (0.72, -0.68),
            (0.20, -0.68),
            (0.16, -0.10),
            (0.50, -0.20),
            (0.75, 0.15),
            (0.68, 0.75),
            (0.40, 1.00),
            (0.14, 0.85),
        ]],
        '6' => &[&[
            (0.68, -0.62),
            (0.35, -0.35),
            (0.16, 0.25),
            (0.20, 0.75),
            (0.50, 1.00),
            (0.75, 0.70),
            (0.65, 0.30),
            (0.35, 0.30),
            (0.18, 0.55),
        ]],
        '7' => &[&[(0.14, -0.68), (0.78, -0.68), (0.35, 1.00)]],
        '8' => &[
            &[
                (0.45, -0.68),
                (0.68, -0.50),
                (0.62, -0.12),
                (0.45, 0.05),
                (0.28, -0.12),
                (0.22, -0.50),
                (0.45, -0.68),
            ],
            &[
                (0.45, 0.05),
                (0.72, 0.30),
                (0.75, 0.75),
                (0.45, 0.98),
                (0.15, 0.75),
                (0.18, 0.30),
                (0.45, 0.05),
            ],
        ],
        '9' => &[
            &[
                (0.45, -0.68),
                (0.70, -0.50),
                (0.72, -0.10),
                (0.45, 0.08),
                (0.20, -0.10),
                (0.18, -0.50),
                (0.45, -0.68),
            ],
            &[(0.72, -0.30), (0.65, 0.50), (0.45, 1.00)],
        ],
        _ => return None,
    };
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covers_kws_symbols() {
        for c in ('a'..='z').chain('0'..='9') {
            let s = strokes(c).unwrap_or_else(|| panic!("missing glyph {c:?}"));
            assert!(!s.is_empty());
            for stroke in s {
                assert!(!stroke.is_empty());
            }
        }
        assert!(strokes('A').is_none());
        assert!(strokes('!').is_none());
    }
}
