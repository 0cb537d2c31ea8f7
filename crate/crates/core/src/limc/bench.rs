//! Built-in benchmark netlists.

/// One-bit full adder over `a b cin` with outputs `s cout`.
pub fn full_adder_blif() -> String {
    ripple_carry_blif(1)
}

/// `bits`-wide ripple-carry adder. Inputs are `a0..`, `b0..`, then `cin`;
/// outputs are `s0..` then `cout`, all little-endian.
pub fn ripple_carry_blif(bits: usize) -> String {
    let mut t = format!(".model rca{bits}\n.inputs");
    for p in ["a", "b"] {
        for i in 0..bits {
            t += &format!(" {p}{i}");
        }
    }
    t += " cin\n.outputs";
    for i in 0..bits {
        t += &format!(" s{i}");
    }
    t += " cout\n";
    for i in 0..bits {
        let c = if i == 0 { "cin".to_string() } else { format!("c{i}") };
        let co = if i + 1 == bits {
            "cout".to_string()
        } else {
            format!("c{}", i + 1)
        };
        t += &format!(".names a{i} b{i} {c} s{i}\n100 1\n010 1\n001 1\n111 1\n");
        t += &format!(".names a{i} b{i} {c} {co}\n11- 1\n1-1 1\n-11 1\n");
    }
    t += ".end\n";
    t
}
