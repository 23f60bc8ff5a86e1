//! Test functions, rescaled evaluations `X^N(f)`, interface statistics and
//! the segregation coefficient.

use std::fmt::Write as _;

use crate::kernel::Kernel;
use crate::scalar::{lit, Real};
use crate::voter_sim::{Configuration, SimError, VoterState};

/// `s(r) = r³(10 - 15r + 6r²)`.
fn smooth<T: Real>(r: T) -> T {
    r * r * r * (lit::<T>(10.0) - lit::<T>(15.0) * r + lit::<T>(6.0) * r * r)
}

fn smooth_d1<T: Real>(r: T) -> T {
    let q = r * (T::one() - r);
    lit::<T>(30.0) * q * q
}

fn smooth_d2<T: Real>(r: T) -> T {
    lit::<T>(60.0) * r * (T::one() - r) * (T::one() - lit::<T>(2.0) * r)
}

/// `∫_0^r s`.
fn smooth_int<T: Real>(r: T) -> T {
    let r4 = r * r * r * r;
    r4 * (lit::<T>(2.5) - lit::<T>(3.0) * r + r * r)
}

/// C² bump: 0 off `[a, b]`, 1 on `[a + w, b - w]`, smoothstep ramps of
/// width `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction<T: Real = f64> {
    pub a: T,
    pub b: T,
    pub w: T,
}

impl<T: Real> TestFunction<T> {
    pub fn bump(a: T, b: T, w: T) -> Result<Self, String> {
        if !(w > T::zero()) || !(b - a >= w + w) {
            return Err(format!("bump needs w > 0 and b - a >= 2w (a={a:?}, b={b:?}, w={w:?})"));
        }
        Ok(TestFunction { a, b, w })
    }

    /// Parses `bump(a,b,w)`.
    pub fn parse(s: &str) -> Result<Self, String> {
        let body = s
            .trim()
            .strip_prefix("bump(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| format!("expected bump(a,b,w), got `{s}`"))?;
        let v: Vec<f64> = body
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format!("bad number in `{s}`"))?;
        if v.len() != 3 {
            return Err(format!("expected three parameters in `{s}`"));
        }
        Self::bump(lit(v[0]), lit(v[1]), lit(v[2]))
    }

    pub fn value(&self, x: T) -> T {
        let (a, b, w) = (self.a, self.b, self.w);
        if x <= a || x >= b {
            T::zero()
        } else if x < a + w {
            smooth((x - a) / w)
        } else if x > b - w {
            smooth((b - x) / w)
        } else {
            T::one()
        }
    }

    pub fn d1(&self, x: T) -> T {
        let (a, b, w) = (self.a, self.b, self.w);
        if x <= a || x >= b {
            T::zero()
        } else if x < a + w {
            smooth_d1((x - a) / w) / w
        } else if x > b - w {
            -smooth_d1((b - x) / w) / w
        } else {
            T::zero()
        }
    }

    pub fn d2(&self, x: T) -> T {
        let (a, b, w) = (self.a, self.b, self.w);
        if x <= a || x >= b {
            T::zero()
        } else if x < a + w {
            smooth_d2((x - a) / w) / (w * w)
        } else if x > b - w {
            smooth_d2((b - x) / w) / (w * w)
        } else {
            T::zero()
        }
    }

    pub fn sup_norm(&self) -> T {
        T::one()
    }

    /// `15 / (8w)`.
    pub fn sup_d1(&self) -> T {
        lit::<T>(1.875) / self.w
    }

    /// `10 / (√3 w²)`, attained at `r = (3 ∓ √3)/6` on each ramp.
    pub fn sup_d2(&self) -> T {
        lit::<T>(10.0) / (lit::<T>(3.0).sqrt() * self.w * self.w)
    }

    /// `|f|₁ = b - a - w`.
    pub fn l1_norm(&self) -> T {
        self.b - self.a - self.w
    }

    /// `F(x) = ∫_{-∞}^x f`.
    pub fn antiderivative(&self, x: T) -> T {
        let (a, b, w) = (self.a, self.b, self.w);
        if x <= a {
            T::zero()
        } else if x < a + w {
            w * smooth_int((x - a) / w)
        } else if x <= b - w {
            w / lit(2.0) + (x - a - w)
        } else if x < b {
            self.l1_norm() - w * smooth_int((b - x) / w)
        } else {
            self.l1_norm()
        }
    }

    /// `(1/N) ∑_x f(x/N)`, the value of `X^N(f)` at the all-one state.
    pub fn riemann_sum(&self, n: T) -> T {
        let (lo, hi) = self.site_range(n);
        let s = T::total((lo..=hi).map(|x| self.value(T::from_i64(x).expect("site") / n)));
        s / n
    }

    /// Integer sites `x` with `x/N` in `[a, b]`.
    pub fn site_range(&self, n: T) -> (i64, i64) {
        let lo = (self.a * n).ceil().to_i64().expect("finite support");
        let hi = (self.b * n).floor().to_i64().expect("finite support");
        (lo, hi)
    }

    pub fn id(&self) -> String
    where
        T: std::fmt::Display,
    {
        format!("bump({},{},{})", self.a, self.b, self.w)
    }
}

/// Torus site `i` of `Z/LZ` placed in `[-L/2 + 1, L/2]`.
pub fn torus_coordinate(i: usize, len: usize) -> i64 {
    if i <= len / 2 {
        i as i64
    } else {
        i as i64 - len as i64
    }
}

/// `X^N(f) = (1/N) ∑_x f(x/N) η(x)`. On the torus sites are placed by
/// [`torus_coordinate`].
#[allow(non_snake_case)]
pub fn evaluate_XN<T: Real>(s: &VoterState, f: &TestFunction<T>, n: T) -> T {
    let at = |x: i64| f.value(T::from_i64(x).expect("site") / n);
    let sum = match &s.config {
        Configuration::Line(c) => {
            let (lo, hi) = f.site_range(n);
            T::total((lo..=hi).filter(|&x| c.opinion(x)).map(at))
        }
        Configuration::Torus(c) => {
            let len = c.len();
            T::total(
                c.bits()
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .map(|(i, _)| at(torus_coordinate(i, len))),
            )
        }
    };
    sum / n
}

/// `μ^N([-m, m]) = (1/N) #{x ∈ [-mN, mN] : η(x) = 1}`.
pub fn measure_count(s: &VoterState, n: f64, m: f64) -> Result<f64, SimError> {
    let c = s.line().ok_or(SimError::WrongMode("measure_count needs line mode"))?;
    let lo = (-m * n).ceil() as i64;
    let hi = (m * n).floor() as i64;
    if hi < lo {
        return Ok(0.0);
    }
    let l = c.leftmost_zero();
    let left = (hi.min(l - 1) - lo + 1).max(0);
    let right = c.ones_right().filter(|&x| x >= lo && x <= hi).count() as i64;
    Ok((left + right) as f64 / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct InterfaceStats {
    pub l: i64,
    pub r: i64,
    pub width: i64,
}

pub fn interface_stats(s: &VoterState) -> Result<InterfaceStats, SimError> {
    let c = s.line().ok_or(SimError::WrongMode("interface_stats needs line mode"))?;
    Ok(InterfaceStats {
        l: c.leftmost_zero(),
        r: c.rightmost_one(),
        width: c.width(),
    })
}

/// `β = ½ ∑_{x,y} p(y - x) 1{η(x) ≠ η(y)}`, with the kernel projected on
/// the torus. Every disagreeing ordered pair is one unit of flip rate, so
/// this is half the total flip rate.
pub fn segregation_energy(s: &VoterState, k: &Kernel) -> f64 {
    s.total_flip_rate(k) / 2.0
}

/// One observation time: evaluations, interval masses, interface and `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSnapshot {
    pub n: f64,
    pub t: f64,
    pub values: Vec<(String, f64)>,
    pub counts: Vec<(f64, f64)>,
    pub interface: Option<InterfaceStats>,
    pub beta: f64,
}

/// Intervals `[-m, m]` recorded by [`MeasureSnapshot::capture`].
pub const SNAPSHOT_RADII: [f64; 3] = [1.0, 2.0, 4.0];

impl MeasureSnapshot {
    pub const CSV_HEADER: &'static str = "N,t,f_id,X,m,count,l,r,width,beta";

    /// `t` is macroscopic: the state is at microscopic time `tN²`.
    pub fn capture(s: &VoterState, k: &Kernel, fs: &[TestFunction<f64>], n: f64, t: f64) -> Self {
        let values = fs.iter().map(|f| (f.id(), evaluate_XN(s, f, n))).collect();
        let counts = match s.line() {
            Some(_) => SNAPSHOT_RADII
                .iter()
                .map(|&m| (m, measure_count(s, n, m).expect("line mode")))
                .collect(),
            None => Vec::new(),
        };
        MeasureSnapshot {
            n,
            t,
            values,
            counts,
            interface: interface_stats(s).ok(),
            beta: segregation_energy(s, k),
        }
    }

    /// `μ^N([-m, m]) ≤ 2m + 1/N` for every recorded `m`.
    pub fn compact_containment_holds(&self) -> bool {
        self.counts
            .iter()
            .all(|&(m, c)| c <= 2.0 * m + 1.0 / self.n + 1e-12)
    }

    /// One row per (test function, radius) pair; missing fields are empty.
    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        let (l, r, w) = match self.interface {
            Some(i) => (i.l.to_string(), i.r.to_string(), i.width.to_string()),
            None => Default::default(),
        };
        let values: Vec<(String, String)> = if self.values.is_empty() {
            vec![(String::new(), String::new())]
        } else {
            self.values.iter().map(|(id, x)| (id.clone(), x.to_string())).collect()
        };
        let counts: Vec<(String, String)> = if self.counts.is_empty() {
            vec![(String::new(), String::new())]
        } else {
            self.counts.iter().map(|(m, c)| (m.to_string(), c.to_string())).collect()
        };
        for (id, x) in &values {
            for (m, c) in &counts {
                let _ = writeln!(
                    out,
                    "{},{},\"{}\",{},{},{},{},{},{},{}",
                    self.n, self.t, id, x, m, c, l, r, w, self.beta
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voter_sim::{init_heavyside, init_torus, LineConfig, Configuration};

    fn bump() -> TestFunction {
        TestFunction::bump(-1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn smoothstep_values() {
        let f = bump();
        assert_eq!(f.value(0.0), 1.0);
        assert!((f.value(-0.75) - 0.5).abs() < 1e-15);
        assert_eq!(f.value(-1.0), 0.0);
        assert_eq!(f.value(1.5), 0.0);
        assert!((f.l1_norm() - 1.5).abs() < 1e-15);
        assert!(TestFunction::bump(0.0, 0.5, 0.5).is_err());
        assert_eq!(TestFunction::parse(" bump(-1, 1, 0.5)").unwrap(), f);
        assert!(TestFunction::<f64>::parse("bump(1,2)").is_err());
        assert!(TestFunction::<f64>::parse("gauss(0,1,1)").is_err());
    }

    #[test]
    fn derivative_bounds_hold_on_a_grid() {
        let f = TestFunction::<f64>::bump(0.0, 2.0, 0.3).unwrap();
        let mut m1: f64 = 0.0;
        let mut m2: f64 = 0.0;
        for i in 0..=200_000 {
            let x = -0.1 + 2.2 * i as f64 / 200_000.0;
            m1 = m1.max(f.d1(x).abs());
            m2 = m2.max(f.d2(x).abs());
        }
        assert!(m1 <= f.sup_d1() + 1e-12 && m1 > f.sup_d1() - 1e-6);
        assert!(m2 <= f.sup_d2() + 1e-9 && m2 > f.sup_d2() - 1e-3);
        assert!(f.sup_d2() <= 60.0 / (0.3 * 0.3));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = TestFunction::<f64>::bump(-1.0, 1.0, 0.4).unwrap();
        let h = 1e-5;
        for x in [-0.9, -0.7, -0.61, 0.0, 0.65, 0.8, 0.95] {
            let fd1 = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            let fd2 = (f.value(x + h) - 2.0 * f.value(x) + f.value(x - h)) / (h * h);
            assert!((fd1 - f.d1(x)).abs() < 1e-6);
            assert!((fd2 - f.d2(x)).abs() < 1e-3);
        }
    }

    #[test]
    fn antiderivative_matches_simpson() {
        let f = TestFunction::<f64>::bump(-0.3, 1.7, 0.45).unwrap();
        let n = 20_000;
        for x in [-0.2, 0.0, 0.5, 1.4, 1.6, 2.0] {
            let a = -0.3;
            let h = (x - a) / n as f64;
            let mut s = f.value(a) + f.value(x);
            for i in 1..n {
                s += f.value(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            assert!((s * h / 3.0 - f.antiderivative(x)).abs() < 1e-10, "x={x}");
        }
        assert!((f.antiderivative(5.0) - f.l1_norm()).abs() < 1e-15);
    }

    #[test]
    fn heavyside_evaluation() {
        let s = init_heavyside();
        assert!((evaluate_XN(&s, &bump(), 4.0) - 0.875).abs() < 1e-15);
        let empty = VoterState {
            time: 0.0,
            config: Configuration::Torus(crate::voter_sim::TorusConfig::parse("0000").unwrap()),
        };
        assert_eq!(evaluate_XN(&empty, &bump(), 2.0), 0.0);
        // Riemann sum converges to half the mass at rate 1/N.
        for n in [10.0, 100.0, 1000.0] {
            let x = evaluate_XN(&s, &bump(), n);
            assert!((x - 0.75).abs() <= 1.0 / n);
        }
    }

    #[test]
    fn adding_a_one_never_decreases() {
        let f = TestFunction::<f64>::bump(-0.5, 2.0, 0.25).unwrap();
        let base = LineConfig::from_parts(1, [3, 7]).unwrap();
        let s0 = VoterState {
            time: 0.0,
            config: Configuration::Line(base.clone()),
        };
        for x in 1..12 {
            let mut c = base.clone();
            c.set(x, true);
            let s1 = VoterState {
                time: 0.0,
                config: Configuration::Line(c),
            };
            assert!(evaluate_XN(&s1, &f, 4.0) >= evaluate_XN(&s0, &f, 4.0));
        }
    }

    #[test]
    fn measure_counts() {
        let s = init_heavyside();
        for n in [1.0, 5.0, 16.0] {
            assert!((measure_count(&s, n, 1.0).unwrap() - (n + 1.0) / n).abs() < 1e-15);
        }
        let c = LineConfig::from_parts(-3, [0, 2, 9]).unwrap();
        let s = VoterState {
            time: 0.0,
            config: Configuration::Line(c),
        };
        // Sites -4..=-4 (from [-4,4]) plus 0 and 2.
        assert_eq!(measure_count(&s, 4.0, 1.0).unwrap(), 3.0 / 4.0);
        let t = init_torus(4, &[true, false, true, false]).unwrap();
        assert!(measure_count(&t, 1.0, 1.0).is_err());
    }

    #[test]
    fn interface_examples() {
        let i = interface_stats(&init_heavyside()).unwrap();
        assert_eq!((i.l, i.r, i.width), (1, 0, -1));
        let s = VoterState {
            time: 0.0,
            config: Configuration::Line(LineConfig::from_parts(1, [3, 7]).unwrap()),
        };
        let i = interface_stats(&s).unwrap();
        assert_eq!((i.l, i.r, i.width), (1, 7, 6));
    }

    fn brute_energy(bits: &[bool], k: &Kernel) -> f64 {
        let proj = k.projected_mod(bits.len());
        let n = bits.len();
        let mut e = 0.0;
        for x in 0..n {
            for y in 0..n {
                if bits[x] != bits[y] {
                    e += proj[(y + n - x) % n];
                }
            }
        }
        e / 2.0
    }

    #[test]
    fn segregation_examples() {
        let k = Kernel::nearest_neighbor();
        let ones = init_torus(4, &[true; 4]).unwrap();
        assert_eq!(segregation_energy(&ones, &k), 0.0);
        let block = [true, true, false, false];
        let alt = [true, false, true, false];
        let b = segregation_energy(&init_torus(4, &block).unwrap(), &k);
        assert!((b - 1.0).abs() < 1e-15);
        assert!((b - brute_energy(&block, &k)).abs() < 1e-15);
        let a = segregation_energy(&init_torus(4, &alt).unwrap(), &k);
        assert!((a - brute_energy(&alt, &k)).abs() < 1e-15);
        assert!(a > b);
        let p = crate::kernel::truncated_pareto_kernel(1.5f64, 5).unwrap();
        let bits = [true, false, false, true, true, false, true, false, false, false];
        let e = segregation_energy(&init_torus(10, &bits).unwrap(), &p);
        assert!((e - brute_energy(&bits, &p)).abs() < 1e-12);
    }

    #[test]
    fn line_energy_counts_pairs() {
        let k = crate::kernel::truncated_pareto_kernel(2.0f64, 4).unwrap();
        let c = LineConfig::from_parts(0, [2, 3, 6]).unwrap();
        let s = VoterState {
            time: 0.0,
            config: Configuration::Line(c.clone()),
        };
        let mut e = 0.0;
        for x in -20..30 {
            for &(d, p) in k.entries() {
                if c.opinion(x) != c.opinion(x + d) {
                    e += p;
                }
            }
        }
        assert!((segregation_energy(&s, &k) - e / 2.0).abs() < 1e-12);
    }

    #[test]
    fn snapshot_rows_and_containment() {
        let k = Kernel::nearest_neighbor();
        let s = init_heavyside();
        let snap = MeasureSnapshot::capture(&s, &k, &[bump()], 4.0, 0.0);
        assert!(snap.compact_containment_holds());
        let rows = snap.to_csv_rows();
        assert_eq!(rows.lines().count(), 3);
        assert!(rows.starts_with("4,0,\"bump(-1,1,0.5)\",0.875,1,1.25,1,0,-1,0.5\n"));
    }

    #[test]
    fn generic_f32_bump() {
        let f = TestFunction::<f32>::bump(-1.0, 1.0, 0.5).unwrap();
        assert!((f.value(-0.75) - 0.5).abs() < 1e-6);
        let s = init_heavyside();
        assert!((evaluate_XN(&s, &f, 4.0f32) - 0.875).abs() < 1e-6);
    }
}
