//! Affine Weierstrass curve arithmetic over a prime field.
//!
//! Implements the group law with the textbook chord-and-tangent slopes,
//! double-and-add scalar multiplication and key generation. Two presets are
//! built in: NIST P-256 for production use and a 28-point toy curve
//! (y² = x³ + x + 1 mod 23) small enough for exhaustive oracle tests.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use std::fmt;
use std::sync::Arc;

use super::CryptoError;
use crate::instrument::{self, Op};

/// A point on the curve: either affine coordinates or the group identity.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum CurvePoint {
    Infinity,
    Affine { x: BigUint, y: BigUint },
}

impl CurvePoint {
    pub fn affine(x: impl Into<BigUint>, y: impl Into<BigUint>) -> Self {
        CurvePoint::Affine { x: x.into(), y: y.into() }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, CurvePoint::Infinity)
    }

    /// Canonical encoding: a single zero byte for the identity, otherwise
    /// `0x04 || x || y` with both coordinates padded to the field width.
    pub fn encode(&self, params: &CurveParams) -> Vec<u8> {
        match self {
            CurvePoint::Infinity => vec![0u8],
            CurvePoint::Affine { x, y } => {
                let len = params.field_len();
                let mut out = Vec::with_capacity(1 + 2 * len);
                out.push(0x04);
                out.extend_from_slice(&to_fixed_be(x, len));
                out.extend_from_slice(&to_fixed_be(y, len));
                out
            }
        }
    }

    /// Decodes and validates a canonical point encoding.
    pub fn decode(bytes: &[u8], params: &CurveParams) -> Result<Self, CryptoError> {
        if bytes == [0u8] {
            return Ok(CurvePoint::Infinity);
        }
        let len = params.field_len();
        if bytes.len() != 1 + 2 * len || bytes[0] != 0x04 {
            return Err(CryptoError::InvalidPoint);
        }
        let x = BigUint::from_bytes_be(&bytes[1..1 + len]);
        let y = BigUint::from_bytes_be(&bytes[1 + len..]);
        let point = CurvePoint::Affine { x, y };
        if !params.contains(&point) {
            return Err(CryptoError::InvalidPoint);
        }
        Ok(point)
    }
}

impl fmt::Debug for CurvePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurvePoint::Infinity => write!(f, "O"),
            CurvePoint::Affine { x, y } => write!(f, "({x}, {y})"),
        }
    }
}

/// A private scalar in `[1, n-1]`.
#[derive(Clone, PartialEq, Eq)]
pub struct ScalarKey(BigUint);

impl ScalarKey {
    pub fn new(k: BigUint, params: &CurveParams) -> Result<Self, CryptoError> {
        if k.is_zero() || k >= params.n {
            return Err(CryptoError::InvalidScalar);
        }
        Ok(ScalarKey(k))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Fixed-width big-endian encoding at the scalar width of the curve.
    pub fn encode(&self, params: &CurveParams) -> Vec<u8> {
        to_fixed_be(&self.0, params.scalar_len())
    }

    pub fn decode(bytes: &[u8], params: &CurveParams) -> Result<Self, CryptoError> {
        if bytes.len() != params.scalar_len() {
            return Err(CryptoError::InvalidScalar);
        }
        ScalarKey::new(BigUint::from_bytes_be(bytes), params)
    }
}

impl fmt::Debug for ScalarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Private key material stays out of logs.
        write!(f, "ScalarKey(<redacted>)")
    }
}

/// Domain parameters of a short Weierstrass curve y² = x³ + ax + b mod p.
#[derive(Clone, Debug)]
pub struct CurveParams {
    pub name: String,
    pub p: BigUint,
    pub a: BigUint,
    pub b: BigUint,
    pub generator: CurvePoint,
    /// Order of the generator.
    pub n: BigUint,
}

impl CurveParams {
    /// Validates the discriminant, the generator and its order.
    pub fn new(
        name: &str,
        p: BigUint,
        a: BigUint,
        b: BigUint,
        gx: BigUint,
        gy: BigUint,
        n: BigUint,
    ) -> Result<Arc<Self>, CryptoError> {
        let params = CurveParams {
            name: name.to_string(),
            p,
            a,
            b,
            generator: CurvePoint::Affine { x: gx, y: gy },
            n,
        };
        // 4a³ + 27b² ≠ 0 mod p, otherwise the curve is singular.
        let four_a3 = (BigUint::from(4u8) * params.a.modpow(&BigUint::from(3u8), &params.p)) % &params.p;
        let twenty7_b2 =
            (BigUint::from(27u8) * params.b.modpow(&BigUint::from(2u8), &params.p)) % &params.p;
        if (four_a3 + twenty7_b2) % &params.p == BigUint::zero() {
            return Err(CryptoError::InvalidCurve("singular curve".into()));
        }
        if params.n < BigUint::from(2u8) {
            return Err(CryptoError::InvalidCurve("order too small".into()));
        }
        let g = params.generator.clone();
        if !params.contains(&g) {
            return Err(CryptoError::InvalidCurve("generator off curve".into()));
        }
        if !scalar_mult_raw(&params.n, &g, &params)?.is_infinity() {
            return Err(CryptoError::InvalidCurve("n·G is not the identity".into()));
        }
        Ok(Arc::new(params))
    }

    /// NIST P-256 (secp256r1).
    pub fn p256() -> Arc<Self> {
        CurveParams::new(
            "P-256",
            hexnum("ffffffff00000001000000000000000000000000ffffffffffffffffffffffff"),
            hexnum("ffffffff00000001000000000000000000000000fffffffffffffffffffffffc"),
            hexnum("5ac635d8aa3a93e7b3ebbd55769886bc651d06b0cc53b0f63bce3c3e27d2604b"),
            hexnum("6b17d1f2e12c4247f8bce6e563a440f277037d812deb33a0f4a13945d898c296"),
            hexnum("4fe342e2fe1a7f9b8ee7eb4a7c0f9e162bce33576b315ececbb6406837bf51f5"),
            hexnum("ffffffff00000000ffffffffffffffffbce6faada7179e84f3b9cac2fc632551"),
        )
        .expect("P-256 constants are valid")
    }

    /// 28-point curve y² = x³ + x + 1 mod 23 with generator (0, 1).
    /// Small enough to enumerate every point and every scalar in tests.
    pub fn tiny23() -> Arc<Self> {
        CurveParams::new(
            "tiny23",
            BigUint::from(23u8),
            BigUint::one(),
            BigUint::one(),
            BigUint::zero(),
            BigUint::one(),
            BigUint::from(28u8),
        )
        .expect("tiny23 constants are valid")
    }

    pub fn by_name(name: &str) -> Result<Arc<Self>, CryptoError> {
        match name {
            "P-256" => Ok(CurveParams::p256()),
            "tiny23" => Ok(CurveParams::tiny23()),
            other => Err(CryptoError::InvalidCurve(format!("unknown curve {other:?}"))),
        }
    }

    /// Parses a `key = value` text configuration with decimal or 0x-hex
    /// fields p, a, b, gx, gy, n and an optional name.
    pub fn from_config(text: &str) -> Result<Arc<Self>, CryptoError> {
        let mut name = "custom".to_string();
        let mut fields: [Option<BigUint>; 6] = Default::default();
        const KEYS: [&str; 6] = ["p", "a", "b", "gx", "gy", "n"];
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CryptoError::InvalidCurve(format!("bad line {line:?}")))?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            if key == "name" {
                name = value.to_string();
                continue;
            }
            let idx = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| CryptoError::InvalidCurve(format!("unknown field {key:?}")))?;
            let num = if let Some(hex) = value.strip_prefix("0x") {
                BigUint::parse_bytes(hex.as_bytes(), 16)
            } else {
                BigUint::parse_bytes(value.as_bytes(), 10)
            }
            .ok_or_else(|| CryptoError::InvalidCurve(format!("bad number for {key}")))?;
            fields[idx] = Some(num);
        }
        let mut take = |i: usize| {
            fields[i]
                .take()
                .ok_or_else(|| CryptoError::InvalidCurve(format!("missing field {}", KEYS[i])))
        };
        let (p, a, b, gx, gy, n) = (take(0)?, take(1)?, take(2)?, take(3)?, take(4)?, take(5)?);
        CurveParams::new(&name, p, a, b, gx, gy, n)
    }

    /// Byte width of one field element.
    pub fn field_len(&self) -> usize {
        ((self.p.bits() as usize) + 7) / 8
    }

    /// Byte width of one scalar.
    pub fn scalar_len(&self) -> usize {
        ((self.n.bits() as usize) + 7) / 8
    }

    /// Whether the point satisfies y² ≡ x³ + ax + b mod p (the identity
    /// always belongs to the group).
    pub fn contains(&self, point: &CurvePoint) -> bool {
        match point {
            CurvePoint::Infinity => true,
            CurvePoint::Affine { x, y } => {
                if x >= &self.p || y >= &self.p {
                    return false;
                }
                let lhs = (y * y) % &self.p;
                let rhs = (x * x * x + &self.a * x + &self.b) % &self.p;
                lhs == rhs
            }
        }
    }

    /// -P = (x, p - y).
    pub fn negate(&self, point: &CurvePoint) -> CurvePoint {
        match point {
            CurvePoint::Infinity => CurvePoint::Infinity,
            CurvePoint::Affine { x, y } => {
                if y.is_zero() {
                    CurvePoint::Affine { x: x.clone(), y: BigUint::zero() }
                } else {
                    CurvePoint::Affine { x: x.clone(), y: &self.p - y }
                }
            }
        }
    }
}

/// Group addition, covering identity, inverse and doubling cases.
pub fn point_add(
    p: &CurvePoint,
    q: &CurvePoint,
    params: &CurveParams,
) -> Result<CurvePoint, CryptoError> {
    if !params.contains(p) || !params.contains(q) {
        return Err(CryptoError::InvalidPoint);
    }
    Ok(add_unchecked(p, q, params))
}

fn add_unchecked(p: &CurvePoint, q: &CurvePoint, params: &CurveParams) -> CurvePoint {
    let (xp, yp) = match p {
        CurvePoint::Infinity => return q.clone(),
        CurvePoint::Affine { x, y } => (x, y),
    };
    let (xq, yq) = match q {
        CurvePoint::Infinity => return p.clone(),
        CurvePoint::Affine { x, y } => (x, y),
    };
    let modulus = &params.p;
    let lambda = if xp == xq {
        if (yp + yq) % modulus == BigUint::zero() {
            // P = -Q, including the order-2 case y = 0.
            return CurvePoint::Infinity;
        }
        // Tangent slope (3x² + a) / 2y.
        let num = (BigUint::from(3u8) * xp * xp + &params.a) % modulus;
        let den = (BigUint::from(2u8) * yp) % modulus;
        mod_div(&num, &den, modulus)
    } else {
        // Chord slope (yq - yp) / (xq - xp).
        let num = sub_mod(yq, yp, modulus);
        let den = sub_mod(xq, xp, modulus);
        mod_div(&num, &den, modulus)
    };
    let xr = sub_mod(&((&lambda * &lambda) % modulus), &((xp + xq) % modulus), modulus);
    let yr = sub_mod(&((&lambda * sub_mod(xp, &xr, modulus)) % modulus), yp, modulus);
    CurvePoint::Affine { x: xr, y: yr }
}

/// k·P by double-and-add; 0·P is the identity.
pub fn scalar_mult(
    k: &BigUint,
    point: &CurvePoint,
    params: &CurveParams,
) -> Result<CurvePoint, CryptoError> {
    if !params.contains(point) {
        return Err(CryptoError::InvalidPoint);
    }
    instrument::tick(Op::PointMul);
    scalar_mult_raw(k, point, params)
}

fn scalar_mult_raw(
    k: &BigUint,
    point: &CurvePoint,
    params: &CurveParams,
) -> Result<CurvePoint, CryptoError> {
    if k.is_zero() || point.is_infinity() {
        return Ok(CurvePoint::Infinity);
    }
    // Double-and-add over Jacobian coordinates: one field inversion for the
    // whole multiplication instead of one per group operation.
    let CurvePoint::Affine { x, y } = point else { unreachable!() };
    let mut acc = Jacobian::infinity();
    for i in (0..k.bits()).rev() {
        acc = acc.double(params);
        if k.bit(i) {
            acc = acc.add_affine(x, y, params);
        }
    }
    Ok(acc.into_affine(params))
}

/// (X, Y, Z) with x = X/Z², y = Y/Z³; Z = 0 is the identity.
struct Jacobian {
    x: BigUint,
    y: BigUint,
    z: BigUint,
}

impl Jacobian {
    fn infinity() -> Self {
        Jacobian { x: BigUint::one(), y: BigUint::one(), z: BigUint::zero() }
    }

    fn is_infinity(&self) -> bool {
        self.z.is_zero()
    }

    fn double(&self, params: &CurveParams) -> Jacobian {
        let p = &params.p;
        if self.is_infinity() || self.y.is_zero() {
            return Jacobian::infinity();
        }
        let xx = (&self.x * &self.x) % p;
        let yy = (&self.y * &self.y) % p;
        let yyyy = (&yy * &yy) % p;
        let zz = (&self.z * &self.z) % p;
        let s = (BigUint::from(4u8) * &self.x * &yy) % p;
        let m = (BigUint::from(3u8) * xx + &params.a * ((&zz * &zz) % p)) % p;
        let x3 = sub_mod(&((&m * &m) % p), &((BigUint::from(2u8) * &s) % p), p);
        let y3 = sub_mod(
            &((&m * sub_mod(&s, &x3, p)) % p),
            &((BigUint::from(8u8) * yyyy) % p),
            p,
        );
        let z3 = (BigUint::from(2u8) * &self.y * &self.z) % p;
        Jacobian { x: x3, y: y3, z: z3 }
    }

    /// Mixed addition with an affine point (Z₂ = 1).
    fn add_affine(&self, x2: &BigUint, y2: &BigUint, params: &CurveParams) -> Jacobian {
        let p = &params.p;
        if self.is_infinity() {
            return Jacobian { x: x2.clone(), y: y2.clone(), z: BigUint::one() };
        }
        let zz = (&self.z * &self.z) % p;
        let u2 = (x2 * &zz) % p;
        let s2 = (y2 * ((&zz * &self.z) % p)) % p;
        let h = sub_mod(&u2, &self.x, p);
        let r = sub_mod(&s2, &self.y, p);
        if h.is_zero() {
            if r.is_zero() {
                return self.double(params);
            }
            return Jacobian::infinity();
        }
        let hh = (&h * &h) % p;
        let hhh = (&hh * &h) % p;
        let v = (&self.x * &hh) % p;
        let x3 = sub_mod(
            &((&r * &r) % p),
            &((&hhh + BigUint::from(2u8) * &v) % p),
            p,
        );
        let y3 = sub_mod(
            &((&r * sub_mod(&v, &x3, p)) % p),
            &((&self.y * &hhh) % p),
            p,
        );
        let z3 = (&self.z * &h) % p;
        Jacobian { x: x3, y: y3, z: z3 }
    }

    fn into_affine(self, params: &CurveParams) -> CurvePoint {
        if self.is_infinity() {
            return CurvePoint::Infinity;
        }
        let p = &params.p;
        let z_inv = mod_div(&BigUint::one(), &self.z, p);
        let z_inv2 = (&z_inv * &z_inv) % p;
        let x = (&self.x * &z_inv2) % p;
        let y = (&self.y * ((&z_inv2 * &z_inv) % p)) % p;
        CurvePoint::Affine { x, y }
    }
}

/// Fresh key pair: private scalar uniform in [1, n-1], public = k·G.
pub fn keygen(params: &CurveParams, rng: &mut dyn RngCore) -> (ScalarKey, CurvePoint) {
    let one = BigUint::one();
    let k = rng.gen_biguint_range(&one, &params.n);
    let public = scalar_mult(&k, &params.generator, params).expect("generator is on curve");
    (ScalarKey(k), public)
}

fn sub_mod(a: &BigUint, b: &BigUint, modulus: &BigUint) -> BigUint {
    let (a, b) = (a % modulus, b % modulus);
    if a >= b {
        a - b
    } else {
        modulus - b + a
    }
}

/// num / den mod p via the extended Euclidean inverse of den.
fn mod_div(num: &BigUint, den: &BigUint, modulus: &BigUint) -> BigUint {
    let den = BigInt::from_biguint(Sign::Plus, den % modulus);
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let ext = den.extended_gcd(&m);
    debug_assert!(ext.gcd.is_one(), "division by a non-unit mod p");
    let inv = ext.x.mod_floor(&m).to_biguint().expect("mod_floor is non-negative");
    (num * inv) % modulus
}

fn to_fixed_be(value: &BigUint, len: usize) -> Vec<u8> {
    let bytes = value.to_bytes_be();
    assert!(bytes.len() <= len, "value wider than encoding");
    let mut out = vec![0u8; len - bytes.len()];
    out.extend_from_slice(&bytes);
    out
}

fn hexnum(s: &str) -> BigUint {
    BigUint::parse_bytes(s.as_bytes(), 16).expect("valid hex literal")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// Every affine point of tiny23, found by trying all (x, y) pairs.
    pub(crate) fn enumerate_tiny_points(params: &CurveParams) -> Vec<CurvePoint> {
        let p: u32 = 23;
        let mut points = vec![CurvePoint::Infinity];
        for x in 0..p {
            for y in 0..p {
                let cand = CurvePoint::affine(BigUint::from(x), BigUint::from(y));
                if params.contains(&cand) && !cand.is_infinity() {
                    points.push(cand);
                }
            }
        }
        points
    }

    #[test]
    fn tiny_curve_has_28_points() {
        let params = CurveParams::tiny23();
        assert_eq!(enumerate_tiny_points(&params).len(), 28);
    }

    #[test]
    fn identity_and_inverse_cases() {
        let params = CurveParams::tiny23();
        let g = params.generator.clone();
        assert_eq!(point_add(&g, &CurvePoint::Infinity, &params).unwrap(), g);
        assert_eq!(point_add(&CurvePoint::Infinity, &g, &params).unwrap(), g);
        let neg = params.negate(&g);
        assert_eq!(point_add(&g, &neg, &params).unwrap(), CurvePoint::Infinity);
    }

    /// Oracle: the sum of any two points, found by scanning the whole group
    /// for the unique point that satisfies the chord/tangent construction is
    /// not cheaply expressible, so instead pin the group law against the
    /// subgroup structure: addition must stay on the curve and be abelian,
    /// and repeated addition of the generator must walk all 28 elements.
    #[test]
    fn addition_table_against_enumeration() {
        let params = CurveParams::tiny23();
        let points = enumerate_tiny_points(&params);
        // Closure + commutativity over the full pairwise table.
        for p in &points {
            for q in &points {
                let r1 = point_add(p, q, &params).unwrap();
                let r2 = point_add(q, p, &params).unwrap();
                assert!(params.contains(&r1));
                assert_eq!(r1, r2);
            }
        }
        // The generator has full order: its multiples enumerate the group.
        let mut walk = CurvePoint::Infinity;
        let mut seen = std::collections::HashSet::new();
        for _ in 0..28 {
            walk = point_add(&walk, &params.generator, &params).unwrap();
            seen.insert(walk.encode(&params));
        }
        assert_eq!(walk, CurvePoint::Infinity);
        assert_eq!(seen.len(), 28);
        let all: std::collections::HashSet<_> =
            points.iter().map(|p| p.encode(&params)).collect();
        assert_eq!(seen, all);
    }

    #[test]
    fn associativity_exhaustive_on_subsample() {
        let params = CurveParams::tiny23();
        let points = enumerate_tiny_points(&params);
        for p in &points {
            for q in &points {
                for r in points.iter().step_by(5) {
                    let left =
                        point_add(&point_add(p, q, &params).unwrap(), r, &params).unwrap();
                    let right =
                        point_add(p, &point_add(q, r, &params).unwrap(), &params).unwrap();
                    assert_eq!(left, right);
                }
            }
        }
    }

    #[test]
    fn scalar_mult_matches_repeated_addition() {
        let params = CurveParams::tiny23();
        let g = params.generator.clone();
        let mut acc = CurvePoint::Infinity;
        for k in 0u32..=28 {
            let fast = scalar_mult(&BigUint::from(k), &g, &params).unwrap();
            assert_eq!(fast, acc, "k = {k}");
            acc = point_add(&acc, &g, &params).unwrap();
        }
        // n·G is the identity, 1·G is G.
        assert!(scalar_mult(&params.n, &g, &params).unwrap().is_infinity());
        assert_eq!(scalar_mult(&BigUint::one(), &g, &params).unwrap(), g);
    }

    #[test]
    fn scalar_mult_distributes_over_scalar_addition() {
        let params = CurveParams::tiny23();
        let g = params.generator.clone();
        for k1 in 0u32..28 {
            for k2 in 0u32..28 {
                let lhs =
                    scalar_mult(&BigUint::from(k1 + k2), &g, &params).unwrap();
                let rhs = point_add(
                    &scalar_mult(&BigUint::from(k1), &g, &params).unwrap(),
                    &scalar_mult(&BigUint::from(k2), &g, &params).unwrap(),
                    &params,
                )
                .unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn off_curve_point_rejected() {
        let params = CurveParams::tiny23();
        let bogus = CurvePoint::affine(BigUint::from(2u8), BigUint::from(2u8));
        assert!(!params.contains(&bogus));
        assert!(matches!(
            point_add(&bogus, &params.generator, &params),
            Err(CryptoError::InvalidPoint)
        ));
        assert!(matches!(
            scalar_mult(&BigUint::from(3u8), &bogus, &params),
            Err(CryptoError::InvalidPoint)
        ));
    }

    #[test]
    fn keygen_public_key_recomputes() {
        let params = CurveParams::p256();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let (sk, pk) = keygen(&params, &mut rng);
        assert!(params.contains(&pk));
        assert_eq!(scalar_mult(sk.value(), &params.generator, &params).unwrap(), pk);
        let (sk2, pk2) = keygen(&params, &mut rng);
        assert_ne!(sk.value(), sk2.value());
        assert_ne!(pk, pk2);
    }

    #[test]
    fn point_codec_round_trip() {
        let params = CurveParams::p256();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let (_, pk) = keygen(&params, &mut rng);
        let bytes = pk.encode(&params);
        assert_eq!(bytes.len(), 65);
        assert_eq!(CurvePoint::decode(&bytes, &params).unwrap(), pk);
        assert_eq!(
            CurvePoint::decode(&[0u8], &params).unwrap(),
            CurvePoint::Infinity
        );
        let mut tampered = bytes.clone();
        tampered[5] ^= 1;
        assert!(CurvePoint::decode(&tampered, &params).is_err());
    }

    #[test]
    fn params_from_config_text() {
        let text = "name = tiny23\np = 23\na = 1\nb = 1\ngx = 0x0\ngy = 1\nn = 28\n";
        let params = CurveParams::from_config(text).unwrap();
        assert_eq!(params.name, "tiny23");
        assert_eq!(params.n, BigUint::from(28u8));
        assert!(CurveParams::from_config("p = 23").is_err());
    }

    #[test]
    fn singular_curve_rejected() {
        // y² = x³ (a = b = 0) is singular.
        let err = CurveParams::new(
            "bad",
            BigUint::from(23u8),
            BigUint::zero(),
            BigUint::zero(),
            BigUint::zero(),
            BigUint::zero(),
            BigUint::from(4u8),
        );
        assert!(err.is_err());
    }
}
