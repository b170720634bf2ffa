use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_complex::Complex64;

use crate::OracleConfig;

const RM: RoundingMode = RoundingMode::ToEven;

#[derive(Clone)]
struct Hp {
    re: BigFloat,
    im: BigFloat,
}

struct Ctx {
    p: usize,
    cc: Consts,
}

impl Ctx {
    fn from_f64(&self, v: Complex64) -> Hp {
        Hp {
            re: BigFloat::from_f64(v.re, self.p),
            im: BigFloat::from_f64(v.im, self.p),
        }
    }

    fn sub(&self, a: &Hp, b: &Hp) -> Hp {
        Hp {
            re: a.re.sub(&b.re, self.p, RM),
            im: a.im.sub(&b.im, self.p, RM),
        }
    }

    fn mul(&self, a: &Hp, b: &Hp) -> Hp {
        let rr = a.re.mul(&b.re, self.p, RM);
        let ii = a.im.mul(&b.im, self.p, RM);
        let ri = a.re.mul(&b.im, self.p, RM);
        let ir = a.im.mul(&b.re, self.p, RM);
        Hp {
            re: rr.sub(&ii, self.p, RM),
            im: ri.add(&ir, self.p, RM),
        }
    }

    fn div(&self, a: &Hp, b: &Hp) -> Hp {
        let den = b.re.mul(&b.re, self.p, RM).add(&b.im.mul(&b.im, self.p, RM), self.p, RM);
        let conj = Hp {
            re: b.re.clone(),
            im: b.im.neg(),
        };
        let num = self.mul(a, &conj);
        Hp {
            re: num.re.div(&den, self.p, RM),
            im: num.im.div(&den, self.p, RM),
        }
    }

    fn scale_real(&self, a: &Hp, r: &BigFloat) -> Hp {
        Hp {
            re: a.re.mul(r, self.p, RM),
            im: a.im.mul(r, self.p, RM),
        }
    }

    fn exp(&mut self, a: &Hp) -> Hp {
        let m = a.re.exp(self.p, RM, &mut self.cc);
        let c = a.im.cos(self.p, RM, &mut self.cc);
        let s = a.im.sin(self.p, RM, &mut self.cc);
        Hp {
            re: m.mul(&c, self.p, RM),
            im: m.mul(&s, self.p, RM),
        }
    }

    fn modulus_log2(&self, a: &Hp) -> Option<i64> {
        // crude magnitude: max binary exponent of the two parts
        let e = |x: &BigFloat| if x.is_zero() { None } else { x.exponent().map(|e| e as i64) };
        match (e(&a.re), e(&a.im)) {
            (None, None) => None,
            (Some(x), None) | (None, Some(x)) => Some(x),
            (Some(x), Some(y)) => Some(x.max(y)),
        }
    }

    fn to_f64(&mut self, x: &BigFloat) -> f64 {
        if x.is_zero() {
            return 0.0;
        }
        x.format(Radix::Dec, RM, &mut self.cc)
            .ok()
            .and_then(|s| s.parse::<f64>().ok())
            .unwrap_or(f64::NAN)
    }

    fn to_complex(&mut self, a: &Hp) -> Complex64 {
        Complex64::new(self.to_f64(&a.re), self.to_f64(&a.im))
    }
}

/// Extended-precision divided difference of `x -> exp(scale * x)` over `nodes`.
///
/// Newton's recurrence carried out with `cfg.precision_digits` decimal
/// digits plus 64 guard bits. Nodes are sorted first so that coincident
/// nodes are adjacent in the table; a block whose end nodes agree below a
/// precision-scaled threshold uses the confluent value `exp(y) / p!`.
///
/// Returns NaN for an empty node list.
pub fn dd_reference(nodes: &[Complex64], scale: Complex64, cfg: &OracleConfig) -> Complex64 {
    if nodes.is_empty() {
        return Complex64::new(f64::NAN, f64::NAN);
    }
    let bits = (cfg.precision_digits.max(16) as f64 * std::f64::consts::LOG2_10).ceil() as usize + 64;
    let mut ctx = Ctx {
        p: bits,
        cc: Consts::new().expect("astro-float constants cache"),
    };
    let mut sorted: Vec<Complex64> = nodes.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let s = ctx.from_f64(scale);
    let ys: Vec<Hp> = sorted.iter().map(|&x| ctx.mul(&s, &ctx.from_f64(x))).collect();
    let n = ys.len();
    let threshold_log2 = -((bits / 2) as i64);

    let mut table: Vec<Hp> = ys.iter().map(|y| ctx.exp(y)).collect();
    // table[j] holds f[y_j .. y_{j+p}] after pass p
    let mut factorial = BigFloat::from_u64(1, bits);
    for p in 1..n {
        factorial = factorial.mul(&BigFloat::from_u64(p as u64, bits), bits, RM);
        let inv_fact = BigFloat::from_u64(1, bits).div(&factorial, bits, RM);
        let mut next = Vec::with_capacity(n - p);
        for j in 0..n - p {
            let gap = ctx.sub(&ys[j + p], &ys[j]);
            let coincident = match ctx.modulus_log2(&gap) {
                None => true,
                Some(e) => {
                    let scale_log2 = ctx.modulus_log2(&ys[j]).unwrap_or(0).max(0);
                    e < threshold_log2 + scale_log2
                }
            };
            let value = if coincident {
                let e = ctx.exp(&ys[j]);
                ctx.scale_real(&e, &inv_fact)
            } else {
                ctx.div(&ctx.sub(&table[j + 1], &table[j]), &gap)
            };
            next.push(value);
        }
        table = next;
    }
    // chain rule: d/dx of exp(s x) over x-nodes picks up s^q
    let mut s_pow = ctx.from_f64(Complex64::new(1.0, 0.0));
    for _ in 1..n {
        s_pow = ctx.mul(&s_pow, &s);
    }
    let out = ctx.mul(&table[0], &s_pow);
    ctx.to_complex(&out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn confluent_nodes() {
        let s = Complex64::new(0.0, -0.7);
        let x = Complex64::new(1.3, 0.0);
        let cfg = OracleConfig::default();
        for q in 0..8usize {
            let nodes = vec![x; q + 1];
            let got = dd_reference(&nodes, s, &cfg);
            let fact: f64 = (1..=q).map(|k| k as f64).product();
            let expected = s.powu(q as u32) * (s * x).exp() / fact;
            assert!(rel(got, expected) < 1e-14, "q={q}");
        }
    }

    #[test]
    fn two_nodes_closed_form() {
        let s = Complex64::new(0.2, -1.1);
        let (x0, x1) = (Complex64::new(-0.4, 0.1), Complex64::new(2.5, 0.0));
        let got = dd_reference(&[x0, x1], s, &OracleConfig::default());
        let expected = ((s * x1).exp() - (s * x0).exp()) / (x1 - x0);
        assert!(rel(got, expected) < 1e-14);
    }

    #[test]
    fn single_node_is_exponential() {
        let s = Complex64::new(0.0, -1.0);
        let x = Complex64::new(0.5, 0.0);
        let got = dd_reference(&[x], s, &OracleConfig::default());
        assert!(rel(got, (s * x).exp()) < 1e-15);
    }

    #[test]
    fn order_does_not_matter() {
        let s = Complex64::new(0.0, -1.0);
        let nodes = [3.0, -1.0, 0.5, 7.25, 0.5 + 1e-9].map(|v| Complex64::new(v, 0.0));
        let a = dd_reference(&nodes, s, &OracleConfig::default());
        let mut rev = nodes;
        rev.reverse();
        let b = dd_reference(&rev, s, &OracleConfig::default());
        assert_eq!(a, b);
    }
}
