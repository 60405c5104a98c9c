/// Integer division rounding half up (toward +inf) for non-negative operands.
pub(crate) fn div_round_half_up(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}
