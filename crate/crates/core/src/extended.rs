//! Thin arbitrary-precision arithmetic context over `astro-float`.

use astro_float::{BigFloat, Consts, RoundingMode};

const RM: RoundingMode = RoundingMode::ToEven;
// extra bits carried beyond the requested decimal digits
const GUARD_BITS: usize = 64;

pub(crate) struct Extended {
    bits: usize,
    consts: Consts,
}

impl Extended {
    pub(crate) fn with_digits(digits: u32) -> Self {
        let bits = (f64::from(digits) * std::f64::consts::LOG2_10).ceil() as usize + GUARD_BITS;
        // round up to whole 64-bit words
        let bits = bits.div_ceil(64) * 64;
        Self {
            bits,
            consts: Consts::new().expect("astro-float constant cache"),
        }
    }

    pub(crate) fn float(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.bits)
    }

    pub(crate) fn int(&self, x: u64) -> BigFloat {
        BigFloat::from_u64(x, self.bits)
    }

    pub(crate) fn zero(&self) -> BigFloat {
        self.int(0)
    }

    pub(crate) fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.bits, RM)
    }

    pub(crate) fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.bits, RM)
    }

    pub(crate) fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.bits, RM)
    }

    pub(crate) fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.bits, RM)
    }

    pub(crate) fn powi(&self, a: &BigFloat, k: usize) -> BigFloat {
        a.powi(k, self.bits, RM)
    }

    pub(crate) fn log10(&mut self, a: &BigFloat) -> BigFloat {
        a.log10(self.bits, RM, &mut self.consts)
    }

    /// Nearest `f64`; `0.0` on underflow.
    pub(crate) fn lower(&mut self, a: &BigFloat) -> f64 {
        if a.is_zero() {
            return 0.0;
        }
        let text = a
            .format(astro_float::Radix::Dec, RM, &mut self.consts)
            .expect("decimal formatting");
        text.parse().unwrap_or(f64::NAN)
    }
}
