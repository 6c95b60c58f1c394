//! SINR model: affectance and the three geometric matrix constructions.

use serde::{Deserialize, Serialize};

use crate::builders::geometry::LinkGeometry;
use crate::error::{Error, Result};
use crate::model::{InterferenceMatrix, LinkId};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrParams<S = f64> {
    pub alpha: S,
    pub beta: S,
    pub nu: S,
}

impl<S: Real> SinrParams<S> {
    pub fn new(alpha: S, beta: S, nu: S) -> Result<Self> {
        if !(alpha > S::zero()) || !(beta > S::zero()) || !(nu >= S::zero()) {
            return Err(Error::InvalidParameter(
                "SINR parameters need alpha > 0, beta > 0, nu >= 0".into(),
            ));
        }
        Ok(SinrParams { alpha, beta, nu })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerKind {
    Uniform,
    Linear,
    MonotoneSublinear,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerAssignment<S = f64> {
    pub kind: PowerKind,
    pub powers: Vec<S>,
}

impl<S: Real> PowerAssignment<S> {
    pub fn uniform(links: usize, power: S) -> Self {
        PowerAssignment {
            kind: PowerKind::Uniform,
            powers: vec![power; links],
        }
    }

    /// `p(l) = scale * d(l)^alpha`.
    pub fn linear(geo: &LinkGeometry<S>, alpha: S, scale: S) -> Self {
        PowerAssignment {
            kind: PowerKind::Linear,
            powers: (0..geo.link_count())
                .map(|l| scale * geo.length(l).powf(alpha))
                .collect(),
        }
    }

    /// `p(l) = scale * d(l)^(tau * alpha)` for `tau` in `[0, 1]`; monotone and sub-linear.
    pub fn sublinear(geo: &LinkGeometry<S>, alpha: S, tau: S, scale: S) -> Self {
        PowerAssignment {
            kind: PowerKind::MonotoneSublinear,
            powers: (0..geo.link_count())
                .map(|l| scale * geo.length(l).powf(tau * alpha))
                .collect(),
        }
    }

    pub fn custom(powers: Vec<S>) -> Self {
        PowerAssignment {
            kind: PowerKind::Custom,
            powers,
        }
    }

    fn check_len_and_sign(&self, geo: &LinkGeometry<S>) -> Result<()> {
        if self.powers.len() != geo.link_count() {
            return Err(Error::DimensionMismatch {
                expected: geo.link_count(),
                found: self.powers.len(),
            });
        }
        if let Some(l) = self.powers.iter().position(|&p| !(p > S::zero()) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power of link {} must be positive",
                LinkId(l)
            )));
        }
        Ok(())
    }

    /// `p(l) / d(l)^alpha` equal across links within relative 1e-9.
    pub fn check_linear(&self, geo: &LinkGeometry<S>, alpha: S) -> Result<()> {
        self.check_len_and_sign(geo)?;
        let ratio = |l: usize| self.powers[l] / geo.length(l).powf(alpha);
        let scale = (0..geo.link_count())
            .map(|l| ratio(l).abs())
            .fold(S::zero(), S::max);
        let tol = lit::<S>(1e-9) * scale;
        for l in 1..geo.link_count() {
            if (ratio(l) - ratio(0)).abs() > tol {
                return Err(Error::PowerInvariant {
                    kind: "linear",
                    first: LinkId(0),
                    second: LinkId(l),
                });
            }
        }
        Ok(())
    }

    /// `d(l) <= d(l')` implies `p(l) <= p(l')` and `p(l)/d(l)^a >= p(l')/d(l')^a`.
    pub fn check_monotone(&self, geo: &LinkGeometry<S>, alpha: S) -> Result<()> {
        self.check_len_and_sign(geo)?;
        let rel = lit::<S>(1e-9);
        let n = geo.link_count();
        for a in 0..n {
            for b in 0..n {
                if a == b || geo.length(a) > geo.length(b) {
                    continue;
                }
                let (pa, pb) = (self.powers[a], self.powers[b]);
                let ra = pa / geo.length(a).powf(alpha);
                let rb = pb / geo.length(b).powf(alpha);
                if pa > pb * (S::one() + rel) || ra < rb * (S::one() - rel) {
                    return Err(Error::PowerInvariant {
                        kind: "monotone sub-linear",
                        first: LinkId(a),
                        second: LinkId(b),
                    });
                }
            }
        }
        Ok(())
    }
}

/// A capped affectance value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affectance<S = f64> {
    pub value: S,
    /// The affected link cannot succeed even alone (signal margin <= 0).
    pub infeasible: bool,
}

/// Geometry, powers and SINR parameters of one instance.
#[derive(Debug, Clone)]
pub struct SinrInstance<S = f64> {
    pub geometry: LinkGeometry<S>,
    pub power: PowerAssignment<S>,
    pub params: SinrParams<S>,
}

impl<S: Real> SinrInstance<S> {
    pub fn new(geometry: LinkGeometry<S>, power: PowerAssignment<S>, params: SinrParams<S>) -> Result<Self> {
        geometry.require_positive_lengths()?;
        power.check_len_and_sign(&geometry)?;
        Ok(SinrInstance {
            geometry,
            power,
            params,
        })
    }

    pub fn link_count(&self) -> usize {
        self.geometry.link_count()
    }

    /// Strength of `from`'s transmission at `to`'s receiver.
    pub fn received(&self, from: usize, to: usize) -> S {
        let d = self.geometry.cross(from, to);
        if d == S::zero() {
            return S::infinity();
        }
        self.power.powers[from] / d.powf(self.params.alpha)
    }

    /// Signal margin of a link alone: `p/d^alpha - beta*nu`.
    pub fn margin(&self, link: usize) -> S {
        self.received(link, link) - self.params.beta * self.params.nu
    }

    /// `a_p(l, l')`: impact of `l`'s sender on the reception of `l'`.
    pub fn affectance(&self, l: usize, l2: usize) -> Result<Affectance<S>> {
        if l == l2 {
            return Err(Error::InvalidParameter("affectance of a link on itself".into()));
        }
        let n = self.link_count();
        if l >= n || l2 >= n {
            return Err(Error::UnknownLink(LinkId(l.max(l2))));
        }
        Ok(self.affectance_unchecked(l, l2))
    }

    fn affectance_unchecked(&self, l: usize, l2: usize) -> Affectance<S> {
        let denom = self.margin(l2);
        if !(denom > S::zero()) {
            return Affectance {
                value: S::one(),
                infeasible: true,
            };
        }
        if self.geometry.cross(l, l2) == S::zero() {
            return Affectance {
                value: S::one(),
                infeasible: false,
            };
        }
        let v = self.params.beta * self.received(l, l2) / denom;
        Affectance {
            value: v.min(S::one()),
            infeasible: false,
        }
    }

    /// Links whose margin is nonpositive.
    pub fn infeasible_links(&self) -> Vec<LinkId> {
        (0..self.link_count())
            .filter(|&l| !(self.margin(l) > S::zero()))
            .map(LinkId)
            .collect()
    }
}

/// A built SINR matrix plus the links flagged as infeasible.
#[derive(Debug, Clone)]
pub struct SinrMatrix<S = f64> {
    pub matrix: InterferenceMatrix<S>,
    pub infeasible: Vec<LinkId>,
}

fn wrap<S: Real>(inst: &SinrInstance<S>, matrix: InterferenceMatrix<S>) -> SinrMatrix<S> {
    SinrMatrix {
        matrix,
        infeasible: inst.infeasible_links(),
    }
}

/// `W[l, l'] = a_p(l', l)`; requires linear (or uniform on a linear instance) powers.
pub fn build_w_linear<S: Real>(inst: &SinrInstance<S>) -> Result<SinrMatrix<S>> {
    if !matches!(inst.power.kind, PowerKind::Linear | PowerKind::Uniform) {
        return Err(Error::InvalidParameter(format!(
            "linear-power matrix needs a linear power assignment, got {:?}",
            inst.power.kind
        )));
    }
    inst.power.check_linear(&inst.geometry, inst.params.alpha)?;
    let n = inst.link_count();
    let mut w = InterferenceMatrix::identity(n);
    for l in 0..n {
        for l2 in 0..n {
            if l != l2 {
                w.set(l, l2, inst.affectance_unchecked(l2, l).value);
            }
        }
    }
    Ok(wrap(inst, w))
}

/// `W[l, l'] = max(a(l, l'), a(l', l))` when `l` is shorter than `l'`, else 0.
pub fn build_w_monotone<S: Real>(inst: &SinrInstance<S>) -> Result<SinrMatrix<S>> {
    if inst.power.kind == PowerKind::Custom {
        return Err(Error::InvalidParameter(
            "monotone matrix needs a uniform, linear or monotone sub-linear power assignment".into(),
        ));
    }
    inst.power.check_monotone(&inst.geometry, inst.params.alpha)?;
    let n = inst.link_count();
    let mut w = InterferenceMatrix::identity(n);
    for l in 0..n {
        for l2 in 0..n {
            if l != l2 && inst.geometry.shorter(l, l2) {
                let a = inst.affectance_unchecked(l, l2).value;
                let b = inst.affectance_unchecked(l2, l).value;
                w.set(l, l2, a.max(b));
            }
        }
    }
    Ok(wrap(inst, w))
}

/// Power-control matrix: for `l = (s, r)` shorter than `l' = (s', r')`,
/// `min(1, d(s,r)^a / d(s,r')^a + d(s,r)^a / d(s',r)^a)`.
pub fn build_w_power_control<S: Real>(geo: &LinkGeometry<S>, alpha: S) -> Result<InterferenceMatrix<S>> {
    if !(alpha > S::zero()) {
        return Err(Error::InvalidParameter("alpha must be positive".into()));
    }
    let n = geo.link_count();
    let mut w = InterferenceMatrix::identity(n);
    for l in 0..n {
        for l2 in 0..n {
            if l == l2 || !geo.shorter(l, l2) {
                continue;
            }
            let own = geo.length(l).powf(alpha);
            let to_other = geo.cross(l, l2);
            let from_other = geo.cross(l2, l);
            let v = if to_other == S::zero() || from_other == S::zero() {
                S::one()
            } else {
                (own / to_other.powf(alpha) + own / from_other.powf(alpha)).min(S::one())
            };
            w.set(l, l2, v);
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::builders::geometry::GeometricInstance;
    use crate::model::{validate_matrix, NetworkInstance, NodeId};

    /// Links `(2i -> 2i+1)` from explicit sender/receiver coordinates.
    fn instance(coords: &[((f64, f64), (f64, f64))]) -> (NetworkInstance, LinkGeometry<f64>) {
        let k = coords.len() as u64;
        let pairs: Vec<_> = (0..k).map(|i| (2 * i, 2 * i + 1)).collect();
        let net = NetworkInstance::from_pairs(2 * k, &pairs, 1).unwrap();
        let mut pts = Vec::new();
        for (i, &((sx, sy), (rx, ry))) in coords.iter().enumerate() {
            pts.push((NodeId(2 * i as u64), sx, sy));
            pts.push((NodeId(2 * i as u64 + 1), rx, ry));
        }
        let geo = GeometricInstance::from_positions(pts).unwrap();
        let lg = LinkGeometry::new(&net, geo).unwrap();
        (net, lg)
    }

    fn params(nu: f64) -> SinrParams<f64> {
        SinrParams::new(2.0, 1.0, nu).unwrap()
    }

    #[test]
    fn affectance_direct_value() {
        // l = (s, r) with s two units from r'; l' has unit length.
        let (_, g) = instance(&[((2.0, 0.0), (3.0, 0.0)), ((-1.0, 0.0), (0.0, 0.0))]);
        let inst = SinrInstance::new(g, PowerAssignment::uniform(2, 1.0), params(0.0)).unwrap();
        let a = inst.affectance(0, 1).unwrap();
        assert!((a.value - 0.25).abs() < 1e-15);
        assert!(!a.infeasible);
    }

    #[test]
    fn affectance_zero_margin_is_capped_and_flagged() {
        let (_, g) = instance(&[((2.0, 0.0), (3.0, 0.0)), ((-1.0, 0.0), (0.0, 0.0))]);
        let inst = SinrInstance::new(g, PowerAssignment::uniform(2, 1.0), params(1.0)).unwrap();
        let a = inst.affectance(0, 1).unwrap();
        assert_eq!(a.value, 1.0);
        assert!(a.infeasible);
        assert_eq!(inst.infeasible_links().len(), 2);
    }

    #[test]
    fn co_located_interferer_gives_one() {
        let (_, g) = instance(&[((0.0, 0.0), (1.0, 0.0)), ((-1.0, 0.0), (0.0, 0.0))]);
        let inst = SinrInstance::new(g, PowerAssignment::uniform(2, 1.0), params(0.0)).unwrap();
        assert_eq!(inst.affectance(0, 1).unwrap().value, 1.0);
    }

    #[test]
    fn far_links_barely_interact() {
        let (_, g) = instance(&[((0.0, 0.0), (1.0, 0.0)), ((1e6, 0.0), (1e6 + 1.0, 0.0))]);
        let inst = SinrInstance::new(g, PowerAssignment::uniform(2, 1.0), params(0.0)).unwrap();
        let w = build_w_linear(&inst).unwrap().matrix;
        assert!(w.get(0, 1) < 1e-10 && w.get(1, 0) < 1e-10);
        assert_eq!(w.get(0, 0), 1.0);
    }

    #[test]
    fn identical_links_saturate() {
        let (_, g) = instance(&[((0.0, 0.0), (1.0, 0.0)), ((0.0, 0.0), (1.0, 0.0))]);
        let inst = SinrInstance::new(g, PowerAssignment::uniform(2, 1.0), params(0.0)).unwrap();
        let w = build_w_linear(&inst).unwrap().matrix;
        assert_eq!((w.get(0, 1), w.get(1, 0)), (1.0, 1.0));
    }

    #[test]
    fn collinear_three_links_match_formula() {
        // Unit-length links with spacing 2 between consecutive links.
        let (_, g) = instance(&[
            ((0.0, 0.0), (1.0, 0.0)),
            ((3.0, 0.0), (4.0, 0.0)),
            ((6.0, 0.0), (7.0, 0.0)),
        ]);
        let inst = SinrInstance::new(g, PowerAssignment::uniform(3, 1.0), params(0.0)).unwrap();
        let w = build_w_linear(&inst).unwrap().matrix;
        // W[l, l'] = a(l', l) = d(s', r)^-2 since all signals are 1.
        let senders = [0.0, 3.0, 6.0];
        let receivers = [1.0f64, 4.0, 7.0];
        for l in 0..3 {
            for l2 in 0..3 {
                if l != l2 {
                    let d: f64 = (senders[l2] - receivers[l]).abs();
                    assert!((w.get(l, l2) - (1.0 / (d * d)).min(1.0)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn linear_builder_rejects_other_kinds() {
        let (_, g) = instance(&[((0.0, 0.0), (1.0, 0.0)), ((5.0, 0.0), (7.0, 0.0))]);
        let inst = SinrInstance::new(g.clone(), PowerAssignment::uniform(2, 1.0), params(0.0)).unwrap();
        // Uniform powers on unequal lengths are not linear.
        assert!(matches!(build_w_linear(&inst), Err(Error::PowerInvariant { .. })));
        let inst = SinrInstance::new(g, PowerAssignment::custom(vec![1.0, 4.0]), params(0.0)).unwrap();
        assert!(build_w_linear(&inst).is_err());
    }

    #[test]
    fn monotone_builder_is_directed_by_length() {
        let (_, g) = instance(&[
            ((0.0, 0.0), (1.0, 0.0)),
            ((0.0, 5.0), (2.0, 5.0)),
            ((0.0, 10.0), (4.0, 10.0)),
        ]);
        let inst = SinrInstance::new(g, PowerAssignment::uniform(3, 1.0), params(0.0)).unwrap();
        let w = build_w_monotone(&inst).unwrap().matrix;
        for l in 0..3 {
            for l2 in 0..l {
                assert_eq!(w.get(l, l2), 0.0);
                assert!(w.get(l2, l) > 0.0);
            }
        }
    }

    #[test]
    fn monotone_rejects_decreasing_powers() {
        let (_, g) = instance(&[((0.0, 0.0), (1.0, 0.0)), ((0.0, 5.0), (2.0, 5.0))]);
        let inst = SinrInstance::new(
            g,
            PowerAssignment {
                kind: PowerKind::MonotoneSublinear,
                powers: vec![2.0, 1.0],
            },
            params(0.0),
        )
        .unwrap();
        assert_eq!(
            build_w_monotone(&inst).unwrap_err(),
            Error::PowerInvariant {
                kind: "monotone sub-linear",
                first: LinkId(0),
                second: LinkId(1)
            }
        );
    }

    #[test]
    fn power_control_example() {
        // d(s,r) = 1, d(s,r') = 2, d(s',r) = 2, and l' no shorter than l.
        let nodes = vec![NodeId(0), NodeId(1), NodeId(2), NodeId(3)];
        let table: Vec<Vec<f64>> = vec![
            vec![0.0, 1.0, 3.0, 2.0],
            vec![1.0, 0.0, 2.0, 2.5],
            vec![3.0, 2.0, 0.0, 1.5],
            vec![2.0, 2.5, 1.5, 0.0],
        ];
        let net = NetworkInstance::from_pairs(4, &[(0, 1), (2, 3)], 1).unwrap();
        let g = LinkGeometry::new(&net, GeometricInstance::from_table(nodes, table).unwrap()).unwrap();
        let w = build_w_power_control(&g, 2.0).unwrap();
        assert!((w.get(0, 1) - 0.5).abs() < 1e-15);
        assert_eq!(w.get(1, 0), 0.0);
    }

    #[test]
    fn power_control_caps_shared_receiver() {
        let nodes = vec![NodeId(0), NodeId(1), NodeId(2)];
        let table: Vec<Vec<f64>> = vec![
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 2.0],
            vec![2.0, 2.0, 0.0],
        ];
        let net = NetworkInstance::from_pairs(3, &[(0, 1), (2, 1)], 1).unwrap();
        let g = LinkGeometry::new(&net, GeometricInstance::from_table(nodes, table).unwrap()).unwrap();
        let w = build_w_power_control(&g, 3.0).unwrap();
        assert_eq!(w.get(0, 1), 1.0);
    }

    fn coords() -> impl Strategy<Value = Vec<((f64, f64), (f64, f64))>> {
        prop::collection::vec(
            ((0.0f64..20.0, 0.0f64..20.0), (0.3f64..3.0, 0.0f64..std::f64::consts::TAU)),
            1..7,
        )
        .prop_map(|v| {
            v.into_iter()
                .map(|((x, y), (len, th))| ((x, y), (x + len * th.cos(), y + len * th.sin())))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn builders_pass_validation(c in coords(), alpha in 1.5f64..5.0, tau in 0.0f64..1.0) {
            let (_, g) = instance(&c);
            let p = SinrParams::new(alpha, 1.2, 0.0).unwrap();
            let lin = SinrInstance::new(g.clone(), PowerAssignment::linear(&g, alpha, 1.0), p).unwrap();
            prop_assert!(validate_matrix(&build_w_linear(&lin).unwrap().matrix).is_ok());
            let mono = SinrInstance::new(g.clone(), PowerAssignment::sublinear(&g, alpha, tau, 1.0), p).unwrap();
            let wm = build_w_monotone(&mono).unwrap().matrix;
            prop_assert!(validate_matrix(&wm).is_ok());
            let wp = build_w_power_control(&g, alpha).unwrap();
            prop_assert!(validate_matrix(&wp).is_ok());
            let n = g.link_count();
            for a in 0..n {
                for b in a + 1..n {
                    prop_assert!(wm.get(a, b) == 0.0 || wm.get(b, a) == 0.0);
                    prop_assert!(wp.get(a, b) == 0.0 || wp.get(b, a) == 0.0);
                }
            }
        }

        #[test]
        fn linear_matrix_is_scale_free(c in coords(), scale in 0.01f64..100.0) {
            // Equal-length links: uniform powers are a linear assignment.
            let c: Vec<_> = c.into_iter().map(|((x, y), _)| ((x, y), (x + 1.0, y))).collect();
            let (_, g) = instance(&c);
            let p = SinrParams::new(3.0, 1.0, 0.0).unwrap();
            let u = SinrInstance::new(g.clone(), PowerAssignment::uniform(g.link_count(), 1.0), p).unwrap();
            let l = SinrInstance::new(g.clone(), PowerAssignment::linear(&g, 3.0, scale), p).unwrap();
            let (wu, wl) = (build_w_linear(&u).unwrap().matrix, build_w_linear(&l).unwrap().matrix);
            for a in 0..g.link_count() {
                for b in 0..g.link_count() {
                    prop_assert!((wu.get(a, b) - wl.get(a, b)).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn affectance_is_antitone_in_interferer_distance(d1 in 0.5f64..50.0, extra in 0.0f64..50.0, nu in 0.0f64..0.5) {
            let near = instance(&[((-d1, 0.0), (-d1 - 1.0, 0.0)), ((-1.0, 0.0), (0.0, 0.0))]).1;
            let far = instance(&[((-d1 - extra, 0.0), (-d1 - extra - 1.0, 0.0)), ((-1.0, 0.0), (0.0, 0.0))]).1;
            let p = SinrParams::new(2.5, 1.0, nu).unwrap();
            let an = SinrInstance::new(near, PowerAssignment::uniform(2, 1.0), p).unwrap().affectance(0, 1).unwrap();
            let af = SinrInstance::new(far, PowerAssignment::uniform(2, 1.0), p).unwrap().affectance(0, 1).unwrap();
            prop_assert!(af.value <= an.value);
        }
    }
}
